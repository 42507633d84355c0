//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p nlab-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use nlab_cli::sweep::{run_sweep, SweepConfig};
use nlab_cli::wire::WireObject;
use nlab_core::dilation::{
    canonical_dilation_from_kraus, dilation_from_coupling, extract_correction_family, gram_root_family, luders_correction_family, purify_ancilla,
    CouplingModel, NaimarkDilation,
};
use nlab_core::infometrics::fidelity;
use nlab_core::instruments::{apply_intrinsic_opsum, apply_intrinsic_trace};
use nlab_core::matkernel::{c, hermitian_eig, matrix_function, ComplexMatrix, ScalarFn};
use nlab_core::qobjects::{
    orthogonality_residual, random_density, random_povm, random_unitary, DensityMatrix, KrausCorrectionFamily,
};
use nlab_core::relations::{
    check_balance, check_gentle_family, disturbance_band, maassen_uffink_witness, random_trial, saturation_witnesses,
    RelationReport,
};
use nlab_core::scenarios::build_idp;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Seeded POVM ensemble shared by criteria 1 and 2.
fn ensemble(seed: u64) -> (usize, usize) {
    (2 + (seed % 2) as usize, 2 + ((seed / 2) % 4) as usize)
}

fn canonical(seed: u64) -> NaimarkDilation {
    let (dim, n) = ensemble(seed);
    let m = random_povm(dim, n, seed);
    let family = if seed % 4 == 3 {
        luders_correction_family(&m).unwrap()
    } else {
        gram_root_family(&m).unwrap()
    };
    canonical_dilation_from_kraus(&family).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut cond, mut orth, mut red) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..1000 {
        let (dim, n) = ensemble(seed);
        let m = random_povm(dim, n, seed);
        let d = canonical(seed);
        let k = extract_correction_family(&d).map_err(|e| format!("seed {seed}: {e}"))?;
        cond = cond.max(k.residual());
        let again = canonical_dilation_from_kraus(&k).map_err(|e| format!("seed {seed}: {e}"))?;
        orth = orth.max(orthogonality_residual(again.pvm().projectors()));
        red = red.max(again.reduce_to_povm().unwrap().distance(&m));
    }
    let took = start.elapsed();
    ensure(cond < 1e-8, || format!("condition residual {cond:e}"))?;
    ensure(orth < 1e-8, || format!("orthogonality residual {orth:e}"))?;
    ensure(red < 1e-8, || format!("reduction error {red:e}"))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "1000 POVMs, condition {cond:.1e}, orthogonality {orth:.1e}, reduction {red:.1e}, {:.1}s",
        took.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    // canonical dilations, Haar couplings, and the coupling projectors
    // against a random pure and a random mixed (then purified) ancilla
    let mut worst = [0.0f64; 4];
    for seed in 0..1000u64 {
        let (dim, _) = ensemble(seed);
        let dim_a = 2 + (seed % 3) as usize;
        let coupled = dilation_from_coupling(&CouplingModel::random(dim, dim_a, seed)).unwrap();
        let projectors = coupled.pvm().projectors().to_vec();
        let ket = random_unitary(dim_a, seed ^ 0xa11).column_vec(0);
        let pure = NaimarkDilation::new(dim, DensityMatrix::pure(&ket).unwrap(), projectors.clone()).unwrap();
        let mixed = NaimarkDilation::new(dim, random_density(dim_a, dim_a, seed ^ 0xa12), projectors).unwrap();
        let rho = random_density(dim, 1 + (seed as usize % dim), seed ^ 0x5151);
        for (slot, d) in [canonical(seed), coupled, pure, mixed].iter().enumerate() {
            let k = extract_correction_family(&purify_ancilla(d).unwrap()).unwrap();
            let a = apply_intrinsic_trace(&rho, d).unwrap();
            let b = apply_intrinsic_opsum(&rho, &k).unwrap();
            worst[slot] = worst[slot].max(a.max_branch_distance(&b));
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    ensure(max < 1e-9, || format!("branch deviations {worst:?}"))?;
    Ok(format!(
        "1000 trials x 4 dilations, max branch deviation {:.1e} / {:.1e} / {:.1e} / {:.1e} \
         (canonical / Haar coupling / pure ancilla / mixed ancilla)",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn criterion_3() -> Outcome {
    let (mut closed, mut between, mut wrong) = (0.0f64, 0.0f64, 0.0f64);
    for beta in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let f = build_idp(beta).map_err(|e| e.to_string())?;
        wrong = f.unambiguity().into_iter().fold(wrong, f64::max);
        for s in 0..100u64 {
            let rho = random_density(2, 1 + (s % 2) as usize, 7000 + s);
            let (a, b) = f.branches(&rho).map_err(|e| e.to_string())?;
            for (branch, target) in a.branches.iter().zip(f.closed_form(&rho)) {
                closed = closed.max(branch.state.distance(&target));
            }
            between = between.max(a.max_branch_distance(&b));
        }
    }
    ensure(closed < 1e-9, || format!("closed-form deviation {closed:e}"))?;
    ensure(between < 1e-9, || format!("6-dim vs 4-dim deviation {between:e}"))?;
    ensure(wrong < 1e-10, || format!("wrong-outcome probability {wrong:e}"))?;
    Ok(format!(
        "3 angles x 100 states, closed form {closed:.1e}, dilations {between:.1e}, unambiguity {wrong:.1e}"
    ))
}

fn worst(rows: &[RelationReport]) -> Option<&RelationReport> {
    rows.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
}

fn criterion_4() -> Outcome {
    let rows = run_sweep(&SweepConfig::default()).map_err(|e| e.to_string())?;
    let bad: Vec<_> = rows.iter().filter(|r| r.margin < -1e-8).collect();
    ensure(bad.is_empty(), || format!("{} rows below -1e-8, first {:?}", bad.len(), bad[0]))?;
    let witnesses = saturation_witnesses(0).map_err(|e| e.to_string())?;
    let off = witnesses.iter().map(|r| r.margin.abs()).fold(0.0, f64::max);
    ensure(off <= 1e-9, || format!("witness margin {off:e}"))?;
    let w = worst(&rows).unwrap();
    Ok(format!(
        "{} rows, min margin {:.1e} ({}), {} witnesses within {off:.1e}",
        rows.len(),
        w.margin,
        w.relation,
        witnesses.len()
    ))
}

fn cnot() -> CouplingModel {
    let u = ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ]);
    CouplingModel::computational(2, 2, u).unwrap()
}

fn criterion_5() -> Outcome {
    let mut gap = 0.0f64;
    for seed in 0..1000u64 {
        let dim_s = 2 + (seed % 2) as usize;
        let dim_a = 2 + ((seed / 2) % 3) as usize;
        let cpl = CouplingModel::random(dim_s, dim_a, seed);
        let rho = random_density(dim_s, 1 + (seed as usize % dim_s), seed ^ 0xbeef);
        let r = &check_balance(&rho, &cpl).map_err(|e| e.to_string())?[0];
        gap = gap.max((r.lhs - r.rhs).abs());
    }
    ensure(gap <= 1e-8, || format!("balance gap {gap:e}"))?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    let mixed = DensityMatrix::maximally_mixed(2);
    let mut hand = 0.0f64;
    for (rho, want) in [(plus, 1.0), (mixed, 1.0)] {
        let r = &check_balance(&rho, &cnot()).map_err(|e| e.to_string())?[0];
        hand = hand.max((r.lhs - want).abs()).max((r.rhs - 1.0).abs());
    }
    ensure(hand <= 1e-10, || format!("hand case gap {hand:e}"))?;
    Ok(format!("1000 couplings, max gap {gap:.1e}; hand cases within {hand:.1e}"))
}

/// `(Tr √(√ρ σ √ρ))²` from eigenvalues, without the trace-norm route.
/// Eigenvalues under the support threshold count as zero.
fn fidelity_by_roots(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let r = matrix_function(rho.matrix(), ScalarFn::Sqrt, true).unwrap();
    let inner = &(&r * sigma.matrix()) * &r;
    let spec = hermitian_eig(&inner.hermitian_part()).unwrap();
    let eps = spec.eps_support();
    spec.eigenvalues.iter().filter(|&&x| x > eps).map(|x| x.sqrt()).sum::<f64>().powi(2)
}

fn criterion_6() -> Outcome {
    let (mut agree, mut checked) = (0.0f64, 0usize);
    for seed in 0..300u64 {
        let t = random_trial(seed, 2 + (seed % 2) as usize).map_err(|e| e.to_string())?;
        let reports = check_gentle_family(&t.rho, &t.dilation, &[0.5]).map_err(|e| e.to_string())?;
        let out = apply_intrinsic_trace(&t.rho, &t.dilation).unwrap();
        for (i, b) in out.branches.iter().enumerate() {
            let Some(post) = b.normalized() else { continue };
            let find = |id: &str| reports.iter().find(|r| r.relation == id && r.trial.outcome == Some(i)).unwrap();
            let (gentle, winter) = (find("gentle"), find("winter"));
            let f = fidelity_by_roots(&t.rho, &post);
            let parts = [
                (gentle.rhs * gentle.rhs - f).abs(),
                (gentle.lhs * gentle.lhs - b.probability).abs(),
                (winter.rhs - f).abs(),
                (fidelity(&t.rho, &post).unwrap().value - f).abs(),
            ];
            if parts.iter().any(|&x| x > 1e-9) {
                eprintln!("seed {seed} outcome {i} {parts:?} {:?}", t.source);
            }
            agree = parts.into_iter().fold(agree, f64::max);
            ensure(winter.pass && gentle.pass, || format!("seed {seed} outcome {i} fails"))?;
            checked += 1;
        }
    }
    ensure(agree < 1e-9, || format!("formulations differ by {agree:e}"))?;
    Ok(format!("{checked} branches, formulations agree within {agree:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut min = f64::INFINITY;
    let mut chain = f64::INFINITY;
    for seed in 0..200u64 {
        let dim = 2 + (seed % 2) as usize;
        let rho = random_density(dim, 1 + (seed as usize % dim), seed);
        let a = random_unitary(dim, seed ^ 0xa);
        let b = random_unitary(dim, seed ^ 0xb);
        let r = maassen_uffink_witness(&rho, &a, &b).map_err(|e| e.to_string())?;
        min = min.min(r[0].margin);
        chain = chain.min(r[1].margin);
    }
    ensure(min >= -1e-8, || format!("uncertainty margin {min:e}"))?;
    ensure(chain >= -1e-8, || format!("chain margin {chain:e}"))?;
    Ok(format!("200 basis pairs, min margin {min:.3e}, chain {chain:.3e}"))
}

fn criterion_8() -> Outcome {
    let mut slack = f64::INFINITY;
    for seed in 0..1000u64 {
        let t = random_trial(seed, 2 + (seed % 2) as usize).map_err(|e| e.to_string())?;
        let band = disturbance_band(&t.rho, &t.dilation).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(band.contains(1e-8), || format!("seed {seed}: {band:?}"))?;
        slack = slack.min(band.actual - band.lower).min(band.upper - band.actual);
    }
    Ok(format!("1000 trials, tightest side {slack:.3e}"))
}

fn criterion_9() -> Outcome {
    let out = nlab_cli::commands::scenario_seven(0, None).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&out.stdout).map_err(|e| e.to_string())?;
    let first = v["first_round_error"].as_f64().unwrap();
    let max = v["max_difference"].as_f64().unwrap();
    let findings = v["findings"].as_array().map_or(0, Vec::len);
    ensure(first < 1e-10, || format!("first round error {first:e}"))?;
    ensure(max > 0.1, || format!("second round difference {max}"))?;
    ensure(findings == 9, || format!("{findings} findings rows"))?;
    Ok(format!("first round {first:.1e}, max difference {max:.6}, {findings} findings"))
}

fn nlab(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nlab"))
        .args(args)
        .output()
        .expect("run nlab")
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_10() -> Outcome {
    let m = random_povm(2, 2, 1);
    let family = gram_root_family(&m).unwrap();
    let mut broken = family.all_corrections().to_vec();
    broken[0][0] = &broken[0][0] + &ComplexMatrix::identity(2).scale(1e-3);
    let err = KrausCorrectionFamily::new(m.clone(), broken.clone());
    ensure(err.is_err(), || "perturbed family accepted".into())?;
    let bad_state = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.6, 0.6]));
    ensure(bad_state.is_err(), || "trace 1.2 state accepted".into())?;

    let dir = tempfile::tempdir().unwrap();
    let kraus = dir.path().join("broken.kraus.json");
    let mut v = serde_json::to_value(WireObject::kraus(&family)).unwrap();
    v["corrections"] = serde_json::to_value(&broken).unwrap();
    std::fs::write(&kraus, v.to_string()).unwrap();
    let state = dir.path().join("heavy.density.json");
    let heavy = serde_json::json!({"kind": "density", "matrix": ComplexMatrix::from_real_diagonal(&[0.6, 0.6])});
    std::fs::write(&state, heavy.to_string()).unwrap();
    let config = dir.path().join("bad.config.json");
    std::fs::write(&config, "{\"trials\": ").unwrap();

    let codes = [
        ("validate broken kraus", nlab(&["validate", kraus.to_str().unwrap()]), 2),
        ("validate heavy state", nlab(&["validate", state.to_str().unwrap()]), 2),
        ("verify clean", nlab(&["verify", "--trials", "5"]), 0),
        ("verify broken-kraus", nlab(&["verify", "--trials", "5", "--inject", "broken-kraus"]), 3),
        ("verify malformed config", nlab(&["verify", config.to_str().unwrap()]), 1),
        ("verify trials 0", nlab(&["verify", "--trials", "0"]), 2),
    ];
    for (what, got, want) in codes {
        ensure(got == want, || format!("{what}: exit {got}, expected {want}"))?;
    }
    Ok("perturbed family and heavy state rejected; exit codes 2, 2, 0, 3, 1, 2".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "dilation round-trip", criterion_1),
        (2, "path equivalence", criterion_2),
        (3, "IDP fixture", criterion_3),
        (4, "relation sweeps", criterion_4),
        (5, "balance equality", criterion_5),
        (6, "Winter recovery", criterion_6),
        (7, "Maassen-Uffink", criterion_7),
        (8, "disturbance band", criterion_8),
        (9, "seven-outcome repeatability", criterion_9),
        (10, "negative controls", criterion_10),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS criterion {n:>2} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n:>2} ({name}): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
