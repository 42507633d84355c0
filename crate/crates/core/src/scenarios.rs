//! Worked examples: the three-outcome unambiguous discrimination (IDP)
//! measurement with two dilations, and a seven-outcome qutrit measurement
//! whose repetition realizes a different measurement.

use serde::Serialize;

use crate::dilation::{dilation_from_coupling, reduce_with_ancilla, CouplingModel, NaimarkDilation};
use crate::error::{Error, Result};
use crate::instruments::{apply_intrinsic_checked, InstrumentOutput};
use crate::matkernel::{
    ancilla_slow_to_system_slow, c, partial_trace_system, tensor_product, ComplexMatrix, C64,
};
use crate::qobjects::{DensityMatrix, Povm, Pvm, PROBABILITY_CLIP};

/// Discrimination of `cos θ|0> ± sin θ|1>` with `tan θ = cos β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdpParameters {
    pub beta: f64,
    pub theta: f64,
}

impl IdpParameters {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("β = {beta} outside (0, π/2)")));
        }
        Ok(Self {
            beta,
            theta: beta.cos().atan(),
        })
    }

    /// `(tan θ |0> ± |1>) / √2`, not normalized.
    pub fn psi(&self, sign: f64) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [c(self.theta.tan() * s, 0.0), c(sign * s, 0.0)]
    }

    /// The two states being discriminated.
    pub fn targets(&self) -> [[C64; 2]; 2] {
        let (ct, st) = (self.theta.cos(), self.theta.sin());
        [[c(ct, 0.0), c(st, 0.0)], [c(ct, 0.0), c(-st, 0.0)]]
    }

    pub fn povm(&self) -> Result<Povm> {
        let sb = self.beta.sin();
        Povm::with_labels(
            vec![
                ComplexMatrix::from_real_diagonal(&[sb * sb, 0.0]),
                ComplexMatrix::ket_projector(&self.psi(1.0)),
                ComplexMatrix::ket_projector(&self.psi(-1.0)),
            ],
            vec!["inconclusive".into(), "plus".into(), "minus".into()],
        )
    }
}

/// `U†` on qubit ⊗ qutrit as printed, rows and columns indexed `a·2 + s`.
pub fn idp_printed_u_dagger_6(beta: f64) -> ComplexMatrix {
    let (sb, cb) = (beta.sin(), beta.cos());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[
        &[sb, 0.0, cb * h, 0.0, cb * h, 0.0],
        &[0.0, 0.0, h, 0.0, -h, 0.0],
        &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        &[-cb, 0.0, sb * h, 0.0, sb * h, 0.0],
        &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ])
}

/// `U†` on two qubits as printed (left-hand form), indexed `a·2 + s`.
pub fn idp_printed_u_dagger_4(beta: f64) -> ComplexMatrix {
    let (sb, cb) = (beta.sin(), beta.cos());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[
        &[sb, 0.0, cb * h, cb * h],
        &[0.0, 0.0, h, -h],
        &[0.0, 1.0, 0.0, 0.0],
        &[-cb, 0.0, sb * h, sb * h],
    ])
}

/// The printed right-hand "equivalent" two-qubit form, indexed `a·2 + s`.
pub fn idp_printed_equivalent_4(beta: f64) -> ComplexMatrix {
    let (sb, cb) = (beta.sin(), beta.cos());
    ComplexMatrix::from_real_rows(&[
        &[sb, 0.0, 0.0, cb],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[-cb, 0.0, 0.0, sb],
    ])
}

fn idp_pointer_4() -> Vec<ComplexMatrix> {
    let p0 = ComplexMatrix::basis_projector(2, 0);
    let p1 = ComplexMatrix::basis_projector(2, 1);
    vec![
        tensor_product(&ComplexMatrix::identity(2), &p0),
        tensor_product(&p0, &p1),
        tensor_product(&p1, &p1),
    ]
}

fn ket0(dim: usize) -> Vec<C64> {
    let mut k = vec![C64::default(); dim];
    k[0] = c(1.0, 0.0);
    k
}

/// Coupling built from a printed `U†` in ancilla-slow ordering.
fn coupling_from_printed(u_dagger: &ComplexMatrix, dim_a: usize, pointer: Vec<ComplexMatrix>) -> Result<CouplingModel> {
    let u = ancilla_slow_to_system_slow(u_dagger, 2, dim_a).adjoint();
    CouplingModel::new(2, u, ket0(dim_a), pointer)
}

#[derive(Clone, Debug)]
pub struct IdpFixture {
    pub params: IdpParameters,
    pub povm: Povm,
    pub coupling6: CouplingModel,
    pub coupling4: CouplingModel,
    pub dilation6: NaimarkDilation,
    pub dilation4: NaimarkDilation,
}

impl IdpFixture {
    /// The displayed closed forms of the intrinsic-rule branches.
    pub fn closed_form(&self, rho: &DensityMatrix) -> Vec<ComplexMatrix> {
        idp_closed_form(&self.params, rho)
    }

    /// Largest deviation between each dilation's reduction and the POVM.
    pub fn reduction_residual(&self) -> Result<f64> {
        Ok(self
            .dilation6
            .reduce_to_povm()?
            .distance(&self.povm)
            .max(self.dilation4.reduce_to_povm()?.distance(&self.povm)))
    }

    /// Probability of the wrong conclusive outcome for each target state.
    pub fn unambiguity(&self) -> [f64; 2] {
        let [plus, minus] = self.params.targets();
        let wrong = |ket: &[C64], effect: usize| {
            (&ComplexMatrix::ket_projector(ket) * self.povm.effect(effect)).trace().re.abs()
        };
        [wrong(&plus, 2), wrong(&minus, 1)]
    }

    /// Intrinsic-rule branches through both dilations.
    pub fn branches(&self, rho: &DensityMatrix) -> Result<(InstrumentOutput, InstrumentOutput)> {
        Ok((
            apply_intrinsic_checked(rho, &self.dilation6)?,
            apply_intrinsic_checked(rho, &self.dilation4)?,
        ))
    }
}

pub fn build_idp(beta: f64) -> Result<IdpFixture> {
    let params = IdpParameters::new(beta)?;
    let povm = params.povm()?;
    let pointer6 = (0..3)
        .map(|i| tensor_product(&ComplexMatrix::identity(2), &ComplexMatrix::basis_projector(3, i)))
        .collect();
    let coupling6 = coupling_from_printed(&idp_printed_u_dagger_6(beta), 3, pointer6)?;
    let coupling4 = coupling_from_printed(&idp_printed_u_dagger_4(beta), 2, idp_pointer_4())?;
    let relabel = |d: NaimarkDilation| {
        NaimarkDilation::with_labels(
            2,
            d.ancilla().clone(),
            d.pvm().projectors().to_vec(),
            povm.labels().to_vec(),
        )
    };
    let dilation6 = relabel(dilation_from_coupling(&coupling6)?)?;
    let dilation4 = relabel(dilation_from_coupling(&coupling4)?)?;
    Ok(IdpFixture {
        params,
        povm,
        coupling6,
        coupling4,
        dilation6,
        dilation4,
    })
}

/// Reduction error of the printed equivalent two-qubit form under the same
/// ordering and pointer as the left-hand form.
pub fn idp_equivalent_form_residual(beta: f64) -> Result<f64> {
    let params = IdpParameters::new(beta)?;
    let c = coupling_from_printed(&idp_printed_equivalent_4(beta), 2, idp_pointer_4())?;
    let d = dilation_from_coupling(&c)?;
    let effects = crate::dilation::reduce_projectors(d.pvm().projectors(), 2, d.ancilla())?;
    let povm = params.povm()?;
    Ok(effects
        .iter()
        .zip(povm.effects())
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max))
}

/// `J_0 = sin²β <0|ρ|0> (sin²β|0><0| + cos²β|1><1|)`,
/// `J_± = <ψ_±|ρ|ψ_±> (|ψ_±><ψ_±| + sin²β/2 |1><1|)`.
pub fn idp_closed_form(p: &IdpParameters, rho: &DensityMatrix) -> Vec<ComplexMatrix> {
    let (s2, c2) = (p.beta.sin().powi(2), p.beta.cos().powi(2));
    let r = rho.matrix();
    let mut out = vec![ComplexMatrix::from_real_diagonal(&[s2, c2]).scale(s2 * r.get(0, 0).re)];
    for sign in [1.0, -1.0] {
        let psi = p.psi(sign);
        let weight = (0..2)
            .flat_map(|a| (0..2).map(move |b| (a, b)))
            .map(|(a, b)| psi[a].conj() * r.get(a, b) * psi[b])
            .sum::<C64>()
            .re;
        let shape = &ComplexMatrix::ket_projector(&psi) + &ComplexMatrix::from_real_diagonal(&[0.0, s2 / 2.0]);
        out.push(shape.scale(weight));
    }
    out
}

fn sum_ket(dim: usize, terms: &[(usize, f64)]) -> Vec<C64> {
    let mut v = vec![C64::default(); dim];
    for &(i, a) in terms {
        v[i] += c(a, 0.0);
    }
    v
}

/// Seven-outcome qutrit measurement realized by nine rank-one product
/// projectors on qutrit ⊗ qutrit with the ancilla maximally mixed.
#[derive(Clone, Debug)]
pub struct SevenOutcomeFixture {
    pub povm: Povm,
    pub weights: Vec<f64>,
    pub phi: Vec<Vec<C64>>,
    /// The nine joint vectors, system ⊗ ancilla.
    pub big_phi: Vec<Vec<C64>>,
    pub dilation: NaimarkDilation,
    /// Outcome `g` collects projectors `grouping[g]` (0-based).
    pub grouping: Vec<Vec<usize>>,
}

impl SevenOutcomeFixture {
    pub fn new() -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = |i: usize, j: usize| sum_ket(3, &[(i, h), (j, h)]);
        let minus = |i: usize, j: usize| sum_ket(3, &[(i, h), (j, -h)]);
        let e = |i: usize| sum_ket(3, &[(i, 1.0)]);
        let phi = vec![e(1), e(0), e(2), plus(1, 2), minus(1, 2), plus(0, 1), minus(0, 1)];
        let weights = vec![1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let effects = phi
            .iter()
            .zip(&weights)
            .map(|(v, &a)| ComplexMatrix::ket_projector(v).scale(a))
            .collect();
        let labels = (1..=7).map(|i| i.to_string()).collect();
        let povm = Povm::with_labels(effects, labels)?;

        let joint = |s: Vec<C64>, a: Vec<C64>| tensor_product(&ComplexMatrix::column(&s), &ComplexMatrix::column(&a)).column_vec(0);
        let big_phi = vec![
            joint(e(1), e(1)),
            joint(e(0), plus(0, 1)),
            joint(e(0), minus(0, 1)),
            joint(e(2), plus(1, 2)),
            joint(e(2), minus(1, 2)),
            joint(plus(1, 2), e(0)),
            joint(minus(1, 2), e(0)),
            joint(plus(0, 1), e(2)),
            joint(minus(0, 1), e(2)),
        ];
        let projectors = big_phi.iter().map(|v| ComplexMatrix::ket_projector(v)).collect();
        let dilation = NaimarkDilation::new(3, DensityMatrix::maximally_mixed(3), projectors)?;
        let grouping = vec![vec![0], vec![1, 2], vec![3, 4], vec![5], vec![6], vec![7], vec![8]];
        Ok(Self {
            povm,
            weights,
            phi,
            big_phi,
            dilation,
            grouping,
        })
    }

    /// Largest `|<Φ_k|Φ_l> − δ_kl|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, u) in self.big_phi.iter().enumerate() {
            for (l, v) in self.big_phi.iter().enumerate() {
                let ip: C64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((ip - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// The second-round per-projector values as listed alongside the
    /// example, indexed like the nine projectors.
    pub fn listed_second_round() -> Vec<ComplexMatrix> {
        let z = ComplexMatrix::zeros(3, 3);
        let p = |i: usize, w: f64| ComplexMatrix::basis_projector(3, i).scale(w);
        vec![p(1, 1.0), p(0, 0.5), p(0, 0.5), p(2, 0.5), p(2, 0.5), z.clone(), z.clone(), z.clone(), z]
    }
}

/// Outcome of measuring once, conditioning, and reducing the same PVM
/// against the updated ancilla.
#[derive(Clone, Debug)]
pub struct RepeatabilityResult {
    pub first_round: Povm,
    pub probability: f64,
    pub conditional_ancilla: DensityMatrix,
    pub second_round: Povm,
    /// `‖M'_g − M_g‖_F` per grouped outcome.
    pub differences: Vec<f64>,
    pub max_difference: f64,
}

impl RepeatabilityResult {
    pub fn differs(&self, threshold: f64) -> bool {
        self.max_difference > threshold
    }
}

fn grouped_pvm(d: &NaimarkDilation, grouping: &[Vec<usize>]) -> Result<Pvm> {
    let n = d.joint_dim();
    let projectors = grouping
        .iter()
        .map(|g| {
            g.iter()
                .fold(ComplexMatrix::zeros(n, n), |acc, &k| &acc + d.projector(k))
        })
        .collect();
    Pvm::with_tolerance(projectors, crate::dilation::DILATION_TOL)
}

/// Applies the fine projection postulate on `ρ ⊗ ρ_a`, keeps the branches
/// in group `first`, and re-reduces the grouped PVM against the resulting
/// ancilla marginal.
pub fn run_repeatability_on(
    d: &NaimarkDilation,
    grouping: &[Vec<usize>],
    first: usize,
    rho: &DensityMatrix,
) -> Result<RepeatabilityResult> {
    let group = grouping
        .get(first)
        .ok_or_else(|| Error::InvalidParameter(format!("no outcome group {first}")))?;
    let coarse = grouped_pvm(d, grouping)?;
    let labels: Vec<String> = (0..grouping.len()).map(|g| g.to_string()).collect();
    let first_round = reduce_with_ancilla(&coarse, d.dim_s(), d.ancilla(), labels.clone())?;
    let joint = d.joint_state(rho)?;
    let n = d.joint_dim();
    let post = group
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, &k| &acc + &joint.matrix().conjugate_by(d.projector(k)));
    let probability = post.trace().re;
    if probability <= PROBABILITY_CLIP {
        return Err(Error::ZeroProbability { outcome: first });
    }
    let conditional_ancilla =
        DensityMatrix::new(partial_trace_system(&post.scale(1.0 / probability), d.dim_s(), d.dim_a())?)?;
    let second_round = reduce_with_ancilla(&coarse, d.dim_s(), &conditional_ancilla, labels)?;
    let differences: Vec<f64> = first_round
        .effects()
        .iter()
        .zip(second_round.effects())
        .map(|(a, b)| a.distance(b))
        .collect();
    let max_difference = differences.iter().copied().fold(0.0, f64::max);
    Ok(RepeatabilityResult {
        first_round,
        probability,
        conditional_ancilla,
        second_round,
        differences,
        max_difference,
    })
}

pub fn run_repeatability(
    fixture: &SevenOutcomeFixture,
    first: usize,
    rho: &DensityMatrix,
) -> Result<RepeatabilityResult> {
    run_repeatability_on(&fixture.dilation, &fixture.grouping, first, rho)
}

/// One row of the comparison against the listed second-round values.
#[derive(Clone, Debug, Serialize)]
pub struct SecondRoundFinding {
    /// 1-based projector index.
    pub projector: usize,
    /// `‖listed − Tr_a(Q_k (I ⊗ ρ'_a))‖_F` with the actual conditional ancilla.
    pub deviation_actual: f64,
    /// The same against the ancilla `|0><0|` named in the narrative.
    pub deviation_stated: f64,
}

/// Compares the listed per-projector second-round values against the
/// reductions with the computed conditional ancilla and with `|0><0|`.
pub fn second_round_findings(fixture: &SevenOutcomeFixture, result: &RepeatabilityResult) -> Result<Vec<SecondRoundFinding>> {
    let projectors = fixture.dilation.pvm().projectors();
    let actual = crate::dilation::reduce_projectors(projectors, 3, &result.conditional_ancilla)?;
    let stated = crate::dilation::reduce_projectors(projectors, 3, &DensityMatrix::basis_state(3, 0))?;
    Ok(SevenOutcomeFixture::listed_second_round()
        .iter()
        .enumerate()
        .map(|(k, listed)| SecondRoundFinding {
            projector: k + 1,
            deviation_actual: listed.distance(&actual[k]),
            deviation_stated: listed.distance(&stated[k]),
        })
        .collect())
}

/// Projective measurement dilated with a pure ancilla: repeating it must
/// reproduce the same measurement.
pub fn repeatability_control(rho: &DensityMatrix) -> Result<RepeatabilityResult> {
    let dim = rho.dim();
    let id = ComplexMatrix::identity(2);
    let projectors = Pvm::computational(dim)
        .projectors()
        .iter()
        .map(|p| tensor_product(p, &id))
        .collect();
    let d = NaimarkDilation::new(dim, DensityMatrix::basis_state(2, 0), projectors)?;
    let grouping: Vec<Vec<usize>> = (0..dim).map(|k| vec![k]).collect();
    let first = (0..dim)
        .max_by(|&a, &b| rho.matrix().get(a, a).re.total_cmp(&rho.matrix().get(b, b).re))
        .unwrap_or(0);
    run_repeatability_on(&d, &grouping, first, rho)
}
