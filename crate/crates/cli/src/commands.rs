//! Command implementations. Each returns the text destined for standard
//! output (or the `--out` file) and a diagnostics string for standard error.

use std::path::Path;

use nlab_core::dilation::{
    canonical_dilation_from_kraus, dilation_from_coupling, e_block_decomposition, extract_correction_family,
    gram_root_family, luders_correction_family, purify_ancilla, trim_slots, CouplingModel,
};
use nlab_core::instruments::{
    apply_intrinsic_checked, apply_intrinsic_for_coupling, apply_intrinsic_opsum, apply_luders, apply_projective,
    apply_textbook, InstrumentOutput,
};
use nlab_core::matkernel::ComplexMatrix;
use nlab_core::qobjects::{random_density, random_povm, random_unitary, DensityMatrix, Povm, Pvm};
use nlab_core::scenarios::{
    build_idp, idp_equivalent_form_residual, idp_printed_u_dagger_4, idp_printed_u_dagger_6, run_repeatability,
    second_round_findings, SecondRoundFinding, SevenOutcomeFixture,
};
use serde::Serialize;

use crate::error::CliError;
use crate::sweep::{run_sweep, summary_text, to_csv, SweepConfig};
use crate::wire::{load, load_density, load_kraus, load_povm, to_json, BranchJson, Loaded, WireObject};

/// Round-trip tolerance for emitted dilations.
pub const ROUND_TRIP_TOL: f64 = 1e-8;
/// Slots whose operators are all below this norm are dropped.
pub const SLOT_TRIM_TOL: f64 = 1e-12;

#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn data(stdout: String) -> Self {
        Self {
            stdout,
            stderr: String::new(),
        }
    }
}

/// One-line description of a valid object with its residuals.
pub fn validate(path: &Path) -> Result<Output, CliError> {
    let obj = load(path)?;
    let line = match &obj {
        Loaded::Density(d) => format!("valid density: dim {}, purity {:.12}", d.dim(), d.purity()),
        Loaded::Povm(p) => format!(
            "valid povm: dim {}, {} outcomes, projectivity residual {:.3e}",
            p.dim(),
            p.len(),
            p.projectivity_residual()
        ),
        Loaded::Pvm(p) => format!(
            "valid pvm: dim {}, {} projectors, complete {}",
            p.dim(),
            p.len(),
            p.is_complete()
        ),
        Loaded::Dilation(d) => format!(
            "valid dilation: dim_s {}, dim_a {}, {} outcomes, pure ancilla {}, completion {}",
            d.dim_s(),
            d.dim_a(),
            d.outcome_count(),
            d.is_pure_ancilla(),
            d.completion().is_some()
        ),
        Loaded::Kraus(k) => format!(
            "valid kraus: dim {}, {} outcomes, {} slots, condition residual {:.3e}",
            k.povm().dim(),
            k.povm().len(),
            k.slots(),
            k.residual()
        ),
        Loaded::Coupling(c) => format!(
            "valid coupling: dim_s {}, dim_a {}, {} pointer projectors",
            c.dim_s(),
            c.dim_a(),
            c.pointer().len()
        ),
        Loaded::Instrument(b) => format!("valid instrument: {} branches", b.len()),
    };
    Ok(Output::data(line + "\n"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilateMode {
    /// Canonical dilation of the family read off the Lüders coupling.
    CanonicalLuders,
    /// Canonical dilation of the Gram-root family.
    GramRoot,
    /// Canonical dilation of a family supplied in a Kraus file.
    FromKraus,
}

pub fn dilate(povm_path: &Path, mode: DilateMode, kraus_path: Option<&Path>) -> Result<Output, CliError> {
    let povm = load_povm(povm_path)?;
    let family = match mode {
        DilateMode::CanonicalLuders => luders_correction_family(&povm)?,
        DilateMode::GramRoot => gram_root_family(&povm)?,
        DilateMode::FromKraus => {
            let path = kraus_path.ok_or_else(|| CliError::Parse("from-kraus needs --kraus".into()))?;
            let k = load_kraus(path)?;
            let gap = k.povm().distance(&povm);
            if gap > ROUND_TRIP_TOL {
                return Err(CliError::Validation(format!(
                    "kraus file belongs to a different povm (distance {gap:.3e})"
                )));
            }
            k
        }
    };
    let d = canonical_dilation_from_kraus(&trim_slots(&family, SLOT_TRIM_TOL)?)?;
    let err = d.reduce_to_povm()?.distance(&povm);
    if err > ROUND_TRIP_TOL {
        return Err(CliError::Validation(format!("dilation reduces with error {err:.3e}")));
    }
    Ok(Output {
        stdout: to_json(&WireObject::dilation(&d)),
        stderr: format!("dilation: dim_a {}, reduction error {err:.3e}\n", d.dim_a()),
    })
}

/// Correction family of a dilation or coupling. Mixed ancillas are
/// purified first.
pub fn extract(path: &Path) -> Result<Output, CliError> {
    let d = match load(path)? {
        Loaded::Dilation(d) => d,
        Loaded::Coupling(c) => dilation_from_coupling(&c)?,
        other => {
            return Err(CliError::Validation(format!(
                "extract needs a dilation or coupling, found {}",
                other.kind()
            )))
        }
    };
    let d = if d.is_pure_ancilla() { d } else { purify_ancilla(&d)? };
    let k = extract_correction_family(&d)?;
    Ok(Output {
        stdout: to_json(&WireObject::kraus(&k)),
        stderr: format!("kraus: {} slots, condition residual {:.3e}\n", k.slots(), k.residual()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Projective,
    Luders,
    Intrinsic,
    Textbook,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Projective => "projective",
            Rule::Luders => "luders",
            Rule::Intrinsic => "intrinsic",
            Rule::Textbook => "textbook",
        }
    }
}

fn povm_of(obj: &Loaded) -> Result<Option<Povm>, CliError> {
    Ok(match obj {
        Loaded::Povm(p) => Some(p.clone()),
        Loaded::Pvm(p) => Some(p.to_povm()?),
        Loaded::Kraus(k) => Some(k.povm().clone()),
        Loaded::Dilation(d) => Some(d.reduce_to_povm()?),
        Loaded::Coupling(c) => Some(dilation_from_coupling(c)?.reduce_to_povm()?),
        _ => None,
    })
}

fn unsupported(rule: Rule, obj: &Loaded) -> CliError {
    CliError::Validation(format!("rule {} cannot use a {} object", rule.name(), obj.kind()))
}

pub fn apply_rule(rho: &DensityMatrix, obj: &Loaded, rule: Rule) -> Result<InstrumentOutput, CliError> {
    let out = match (rule, obj) {
        (Rule::Projective, Loaded::Pvm(p)) => apply_projective(rho, p)?,
        (Rule::Projective, Loaded::Povm(m)) if m.is_projective(1e-9) => {
            apply_projective(rho, &Pvm::new(m.effects().to_vec())?)?
        }
        (Rule::Luders, o) => match povm_of(o)? {
            Some(m) => apply_luders(rho, &m)?,
            None => return Err(unsupported(rule, o)),
        },
        (Rule::Intrinsic, Loaded::Dilation(d)) => apply_intrinsic_checked(rho, d)?,
        (Rule::Intrinsic, Loaded::Kraus(k)) => apply_intrinsic_opsum(rho, k)?,
        (Rule::Intrinsic, Loaded::Coupling(c)) => apply_intrinsic_for_coupling(rho, c)?,
        (Rule::Textbook, Loaded::Coupling(c)) => apply_textbook(rho, c)?,
        (_, o) => return Err(unsupported(rule, o)),
    };
    Ok(out)
}

pub fn apply(state: &Path, measurement: &Path, rule: Rule) -> Result<Output, CliError> {
    let rho = load_density(state)?;
    let obj = load(measurement)?;
    let out = apply_rule(&rho, &obj, rule)?;
    Ok(Output::data(to_json(&WireObject::instrument(rule.name(), &out))))
}

pub fn verify(cfg: &SweepConfig, json: bool) -> Result<(Output, bool), CliError> {
    let rows = run_sweep(cfg)?;
    let ok = rows.iter().all(|r| r.pass);
    let stdout = if json { to_json(&rows) } else { to_csv(&rows)? };
    Ok((
        Output {
            stdout,
            stderr: summary_text(&rows),
        },
        ok,
    ))
}

/// Failing-row digest used for the exit-3 message.
pub fn failure_message(rows_text: &str) -> String {
    rows_text
        .lines()
        .filter(|l| l.starts_with("failing "))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Serialize)]
struct IdpComparison {
    samples: usize,
    seed: u64,
    /// Largest Frobenius gap between computed and closed-form branches.
    max_closed_form_deviation: f64,
    /// Largest gap between the 6-dim and 4-dim dilation branches.
    max_dilation_deviation: f64,
}

#[derive(Serialize)]
struct IdpReport {
    scenario: &'static str,
    beta: f64,
    theta: f64,
    povm: WireObject,
    printed_u_dagger_6: ComplexMatrix,
    printed_u_dagger_4: ComplexMatrix,
    coupling6: WireObject,
    coupling4: WireObject,
    dilation6: WireObject,
    dilation4: WireObject,
    e_block_convention: String,
    e_block_residual: f64,
    reduction_residual: f64,
    equivalent_form_residual: f64,
    unambiguity: [f64; 2],
    comparison: IdpComparison,
    ground_state_branches: Vec<BranchJson>,
}

pub const IDP_SAMPLES: usize = 100;

fn branch_gap(a: &InstrumentOutput, targets: &[ComplexMatrix]) -> f64 {
    a.branches
        .iter()
        .zip(targets)
        .map(|(b, t)| b.state.distance(t))
        .fold(0.0, f64::max)
}

pub fn scenario_idp(beta: f64, seed: u64) -> Result<Output, CliError> {
    let f = build_idp(beta)?;
    let mut closed = 0.0f64;
    let mut between = 0.0f64;
    for s in 0..IDP_SAMPLES as u64 {
        let seed = seed.wrapping_add(s);
        let rho = random_density(2, 1 + (seed % 2) as usize, seed);
        let (a, b) = f.branches(&rho)?;
        closed = closed.max(branch_gap(&a, &f.closed_form(&rho)));
        between = between.max(a.max_branch_distance(&b));
    }
    let e = e_block_decomposition(&f.coupling6)?;
    let ground = apply_intrinsic_checked(&DensityMatrix::basis_state(2, 0), &f.dilation6)?;
    let ground_state_branches = match WireObject::instrument("intrinsic", &ground) {
        WireObject::Instrument { branches, .. } => branches,
        _ => unreachable!(),
    };
    let report = IdpReport {
        scenario: "idp",
        beta,
        theta: f.params.theta,
        povm: WireObject::povm(&f.povm),
        printed_u_dagger_6: idp_printed_u_dagger_6(beta),
        printed_u_dagger_4: idp_printed_u_dagger_4(beta),
        coupling6: WireObject::coupling(&f.coupling6),
        coupling4: WireObject::coupling(&f.coupling4),
        dilation6: WireObject::dilation(&f.dilation6),
        dilation4: WireObject::dilation(&f.dilation4),
        e_block_convention: format!("{:?}", e.convention),
        e_block_residual: e.residual,
        reduction_residual: f.reduction_residual()?,
        equivalent_form_residual: idp_equivalent_form_residual(beta)?,
        unambiguity: f.unambiguity(),
        comparison: IdpComparison {
            samples: IDP_SAMPLES,
            seed,
            max_closed_form_deviation: closed,
            max_dilation_deviation: between,
        },
        ground_state_branches,
    };
    Ok(Output {
        stdout: to_json(&report),
        stderr: format!("idp: closed-form deviation {closed:.3e}, dilation deviation {between:.3e}\n"),
    })
}

#[derive(Serialize)]
struct DifferenceRow {
    outcome: usize,
    first_round: ComplexMatrix,
    second_round: ComplexMatrix,
    difference: f64,
}

#[derive(Serialize)]
struct SevenOutcomeReport {
    scenario: &'static str,
    povm: WireObject,
    weights: Vec<f64>,
    grouping: Vec<Vec<usize>>,
    dilation: WireObject,
    orthonormality_residual: f64,
    first_round_error: f64,
    input: ComplexMatrix,
    first_outcome: usize,
    probability: f64,
    conditional_ancilla: ComplexMatrix,
    differences: Vec<DifferenceRow>,
    max_difference: f64,
    /// Comparison with the listed per-projector second-round values.
    findings: Vec<SecondRoundFinding>,
}

pub fn scenario_seven(first: usize, state: Option<&Path>) -> Result<Output, CliError> {
    let f = SevenOutcomeFixture::new()?;
    let rho = match state {
        Some(p) => load_density(p)?,
        None => DensityMatrix::maximally_mixed(3),
    };
    let r = run_repeatability(&f, first, &rho)?;
    let findings = second_round_findings(&f, &r)?;
    let differences = (0..r.first_round.len())
        .map(|g| DifferenceRow {
            outcome: g,
            first_round: r.first_round.effect(g).clone(),
            second_round: r.second_round.effect(g).clone(),
            difference: r.differences[g],
        })
        .collect();
    let report = SevenOutcomeReport {
        scenario: "seven-outcome",
        povm: WireObject::povm(&f.povm),
        weights: f.weights.clone(),
        grouping: f.grouping.clone(),
        dilation: WireObject::dilation(&f.dilation),
        orthonormality_residual: f.orthonormality_residual(),
        first_round_error: r.first_round.distance(&f.povm),
        input: rho.matrix().clone(),
        first_outcome: first,
        probability: r.probability,
        conditional_ancilla: r.conditional_ancilla.matrix().clone(),
        differences,
        max_difference: r.max_difference,
        findings,
    };
    Ok(Output {
        stdout: to_json(&report),
        stderr: format!("seven-outcome: max second-round difference {:.6}\n", r.max_difference),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenerateKind {
    Density,
    Povm,
    Pvm,
    Coupling,
}

pub fn generate(kind: GenerateKind, dim: usize, count: usize, seed: u64) -> Result<Output, CliError> {
    if dim == 0 || count == 0 {
        return Err(CliError::Validation("dimensions and counts must be positive".into()));
    }
    let obj = match kind {
        GenerateKind::Density => WireObject::density(&random_density(dim, count.min(dim), seed)),
        GenerateKind::Povm => WireObject::povm(&random_povm(dim, count, seed)),
        GenerateKind::Pvm => WireObject::pvm(&Pvm::from_basis(&random_unitary(dim, seed))?),
        GenerateKind::Coupling => WireObject::coupling(&CouplingModel::random(dim, count, seed)),
    };
    Ok(Output::data(to_json(&obj)))
}
