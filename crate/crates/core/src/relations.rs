//! Numerical checks of the randomness, disturbance, uncertainty and
//! information trade-offs of the intrinsic rule.
//!
//! Every check produces [`RelationReport`]s with a signed margin that is
//! nonnegative when the relation holds. Checks that need the intrinsic rule
//! evaluate it through both the partial-trace and operator-sum paths and
//! refuse to report if the two disagree.

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::dilation::{
    canonical_dilation_from_kraus, dilation_from_coupling, gram_root_family, CouplingModel, NaimarkDilation,
};
use crate::error::{Error, Result};
use crate::infometrics::{
    classical_relative_entropy, fidelity, groenewold_gain, intrinsic_randomness, invariant_information,
    quantum_relative_entropy, renyi_entropy, sandwiched_quasi_trace, sandwiched_renyi_divergence, shannon_entropy,
    trace_distance, MetricValue,
};
use crate::instruments::{apply_intrinsic_checked, apply_luders, apply_projective, apply_textbook, InstrumentOutput};
use crate::matkernel::{hermitian_eig, tensor_product, ComplexMatrix};
use crate::qobjects::{
    born_probabilities, condition_residual, random_density_from, random_povm_from, random_unitary_from, seeded_rng,
    DensityMatrix, OutcomeDistribution, Povm, Pvm, PROBABILITY_CLIP,
};

/// Default slack for inequalities and equalities.
pub const RELATION_TOL: f64 = 1e-8;

/// Slack for the monotonicity of `D_α` in `α`.
pub const MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    /// `lhs ≥ rhs`.
    GreaterEq,
    /// `lhs ≤ rhs`.
    LessEq,
    /// `lhs = rhs`.
    Equality,
}

/// Identifies the setting a report was produced in.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrialDescriptor {
    pub seed: Option<u64>,
    pub dim_s: usize,
    pub dim_a: usize,
    pub alpha: Option<f64>,
    pub outcome: Option<usize>,
}

impl TrialDescriptor {
    pub fn new(dim_s: usize, dim_a: usize) -> Self {
        Self {
            dim_s,
            dim_a,
            ..Default::default()
        }
    }

    pub fn for_dilation(d: &NaimarkDilation) -> Self {
        Self::new(d.dim_s(), d.dim_a())
    }

    fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    fn outcome(mut self, i: usize) -> Self {
        self.outcome = Some(i);
        self
    }
}

fn serialize_real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Formats a report value, writing infinities as `inf` / `-inf`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationReport {
    pub relation: String,
    pub trial: TrialDescriptor,
    pub kind: RelationKind,
    #[serde(serialize_with = "serialize_real")]
    pub lhs: f64,
    #[serde(serialize_with = "serialize_real")]
    pub rhs: f64,
    /// Nonnegative when the relation holds exactly; for equalities,
    /// `−|lhs − rhs|`.
    #[serde(serialize_with = "serialize_real")]
    pub margin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RelationReport {
    pub fn new(relation: &str, trial: TrialDescriptor, kind: RelationKind, lhs: f64, rhs: f64) -> Self {
        let mut note = None;
        let margin = match kind {
            RelationKind::GreaterEq => signed_gap(lhs, rhs, &mut note),
            RelationKind::LessEq => signed_gap(rhs, lhs, &mut note),
            RelationKind::Equality => {
                if lhs.is_infinite() || rhs.is_infinite() {
                    note = Some("infinite operand in equality".into());
                    f64::NEG_INFINITY
                } else {
                    -(lhs - rhs).abs()
                }
            }
        };
        let mut r = Self {
            relation: relation.to_string(),
            trial,
            kind,
            lhs,
            rhs,
            margin,
            pass: false,
            note,
        };
        r.judge(RELATION_TOL);
        r
    }

    pub fn from_metrics(relation: &str, trial: TrialDescriptor, kind: RelationKind, lhs: MetricValue, rhs: MetricValue) -> Self {
        Self::new(relation, trial, kind, lhs.value, rhs.value)
    }

    /// Report for a check that could not be evaluated.
    pub fn failed(relation: &str, trial: TrialDescriptor, err: &Error) -> Self {
        Self {
            relation: relation.to_string(),
            trial,
            kind: RelationKind::GreaterEq,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NEG_INFINITY,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    /// Re-evaluates `pass` against a different slack.
    pub fn judge(&mut self, tol: f64) {
        self.pass = self.margin >= -tol;
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.trial.seed = Some(seed);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// `big − small`, treating `∞ − ∞` as zero and noting a finite value
/// facing an infinite requirement.
fn signed_gap(big: f64, small: f64, note: &mut Option<String>) -> f64 {
    match (big.is_infinite(), small.is_infinite()) {
        (true, true) => {
            *note = Some("both sides infinite".into());
            0.0
        }
        (false, true) => {
            *note = Some("finite side faces an infinite bound".into());
            f64::NEG_INFINITY
        }
        _ => big - small,
    }
}

/// Intrinsic-rule output after confirming both evaluation paths agree.
pub fn intrinsic_checked(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<InstrumentOutput> {
    apply_intrinsic_checked(rho, d)
}

fn outcome_distribution(out: &InstrumentOutput) -> Result<OutcomeDistribution> {
    OutcomeDistribution::new(out.probabilities(), out.labels())
}

/// `R = S(ρ⊗ρ_a ‖ Σ Q ρ⊗ρ_a Q) ≥ S(ρ ‖ J^N(ρ))`.
pub fn check_randomness_disturbance(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<RelationReport> {
    let out = intrinsic_checked(rho, d)?;
    let r = intrinsic_randomness(&d.joint_state(rho)?, d.pvm())?;
    let s = quantum_relative_entropy(rho, &out.average)?;
    Ok(RelationReport::from_metrics(
        "randomness-disturbance",
        TrialDescriptor::for_dilation(d),
        RelationKind::GreaterEq,
        r,
        s,
    ))
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|&&a| !(0.5..1.0).contains(&a)) {
        Some(a) => Err(Error::InvalidParameter(format!("α = {a} outside [1/2, 1)"))),
        None => Ok(()),
    }
}

/// `p_i^α ≤ Tr(J̃_i^γ ρ J̃_i^γ)^α` per outcome and `α`, plus `p_i ≤ F(ρ, J̃_i)`
/// at `α = 1/2`.
pub fn check_gentle_family(rho: &DensityMatrix, d: &NaimarkDilation, alphas: &[f64]) -> Result<Vec<RelationReport>> {
    check_alphas(alphas)?;
    let out = intrinsic_checked(rho, d)?;
    let base = TrialDescriptor::for_dilation(d);
    let mut reports = Vec::new();
    for (i, b) in out.branches.iter().enumerate() {
        let post = match b.normalized() {
            Some(post) => post,
            None => {
                for &a in alphas {
                    reports.push(
                        RelationReport::new("gentle", base.clone().alpha(a).outcome(i), RelationKind::LessEq, 0.0, 0.0)
                            .with_note("zero-probability outcome skipped"),
                    );
                }
                continue;
            }
        };
        for &a in alphas {
            let rhs = sandwiched_quasi_trace(rho, &post, a)?;
            reports.push(RelationReport::new(
                "gentle",
                base.clone().alpha(a).outcome(i),
                RelationKind::LessEq,
                b.probability.powf(a),
                rhs,
            ));
            if a == 0.5 {
                reports.push(RelationReport::new(
                    "winter",
                    base.clone().alpha(a).outcome(i),
                    RelationKind::LessEq,
                    b.probability,
                    fidelity(rho, &post)?.value,
                ));
            }
        }
    }
    Ok(reports)
}

/// `H_{1/α}(P) ≥ D_α(ρ ‖ J^N(ρ))` per `α`, and `H(P) ≥ S(ρ ‖ J^N(ρ))`.
pub fn check_uncertainty_disturbance(
    rho: &DensityMatrix,
    d: &NaimarkDilation,
    alphas: &[f64],
) -> Result<Vec<RelationReport>> {
    check_alphas(alphas)?;
    let out = intrinsic_checked(rho, d)?;
    let p = outcome_distribution(&out)?;
    let base = TrialDescriptor::for_dilation(d);
    let mut reports = Vec::new();
    for &a in alphas {
        reports.push(RelationReport::from_metrics(
            "uncertainty-disturbance",
            base.clone().alpha(a),
            RelationKind::GreaterEq,
            renyi_entropy(&p, 1.0 / a)?,
            sandwiched_renyi_divergence(rho, &out.average, a)?,
        ));
    }
    reports.push(RelationReport::from_metrics(
        "uncertainty-disturbance",
        base.alpha(1.0),
        RelationKind::GreaterEq,
        shannon_entropy(&p),
        quantum_relative_entropy(rho, &out.average)?,
    ));
    Ok(reports)
}

/// `I(P) ≥ D_tr(ρ, J^N(ρ))²`.
pub fn check_info_disturbance(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<RelationReport> {
    let out = intrinsic_checked(rho, d)?;
    let p = outcome_distribution(&out)?;
    let t = trace_distance(rho, &out.average)?.value;
    Ok(RelationReport::new(
        "info-disturbance",
        TrialDescriptor::for_dilation(d),
        RelationKind::GreaterEq,
        invariant_information(&p).value,
        t * t,
    ))
}

/// `G^D + R = H(P)` for the coupling's textbook instrument, where `R` is the
/// randomness of `U(ρ⊗|0><0|)U†` under the pointer, and the corollary
/// `G^{Lüders} + S(ρ ‖ J^N(ρ)) ≤ H(P)`.
pub fn check_balance(rho: &DensityMatrix, c: &CouplingModel) -> Result<Vec<RelationReport>> {
    let textbook = apply_textbook(rho, c)?;
    let p = outcome_distribution(&textbook)?;
    let h = shannon_entropy(&p).value;
    let g = groenewold_gain(rho, &textbook)?.value;
    let evolved = DensityMatrix::new(rho.tensor(&c.ancilla_state()).matrix().conjugate_by(c.unitary()))?;
    let pointer = Pvm::with_tolerance(c.pointer().to_vec(), crate::dilation::DILATION_TOL)?;
    let r = intrinsic_randomness(&evolved, &pointer)?;
    let trial = TrialDescriptor::new(c.dim_s(), c.dim_a());
    let balance = RelationReport::new("balance", trial.clone(), RelationKind::Equality, g + r.value, h);

    let d = dilation_from_coupling(c)?;
    let intrinsic = intrinsic_checked(rho, &d)?;
    let luders = apply_luders(rho, &d.reduce_to_povm()?)?;
    let gl = groenewold_gain(rho, &luders)?.value;
    let s = quantum_relative_entropy(rho, &intrinsic.average)?;
    let corollary = RelationReport::new("balance-corollary", trial, RelationKind::LessEq, gl + s.value, h);
    Ok(vec![balance, corollary])
}

/// `H(P_A) + H(P_B) ≥ −log c` with `c = max |<a_i|b_j>|²`, and the
/// intermediate `H(P_A) ≥ H(P_B ‖ P'_B)` with `P'_B` measured after the
/// projective `A` update. Bases are the columns of unitaries.
pub fn maassen_uffink_witness(
    rho: &DensityMatrix,
    basis_a: &ComplexMatrix,
    basis_b: &ComplexMatrix,
) -> Result<Vec<RelationReport>> {
    let pa = Pvm::from_basis(basis_a)?;
    let pb = Pvm::from_basis(basis_b)?;
    let overlap = &basis_a.adjoint() * basis_b;
    let cmax = overlap.inner().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mb = pb.to_povm()?;
    let prob_a = born_probabilities(rho, &pa.to_povm()?)?;
    let prob_b = born_probabilities(rho, &mb)?;
    let after = apply_projective(rho, &pa)?.average;
    let prob_b_after = born_probabilities(&after, &mb)?;
    let ha = shannon_entropy(&prob_a).value;
    let hb = shannon_entropy(&prob_b).value;
    let trial = TrialDescriptor::new(rho.dim(), 1);
    Ok(vec![
        RelationReport::new("maassen-uffink", trial.clone(), RelationKind::GreaterEq, ha + hb, -cmax.log2()),
        RelationReport::new(
            "maassen-uffink-chain",
            trial,
            RelationKind::GreaterEq,
            ha,
            classical_relative_entropy(&prob_b, &prob_b_after)?.value,
        ),
    ])
}

/// Bounds on `D_tr(ρ, J^N(ρ))` from splitting the intrinsic rule into the
/// `Σ M ρ M` part (weight `λ`) and the correction part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisturbanceBand {
    pub lambda: f64,
    pub d_eta: f64,
    pub d0: f64,
    pub lower: f64,
    pub upper: f64,
    /// `D_tr(ρ, J^N(ρ))`.
    pub actual: f64,
}

impl DisturbanceBand {
    pub fn contains(&self, slack: f64) -> bool {
        self.actual >= self.lower - slack && self.actual <= self.upper + slack
    }

    pub fn reports(&self, trial: TrialDescriptor) -> Vec<RelationReport> {
        vec![
            RelationReport::new("disturbance-band-lower", trial.clone(), RelationKind::GreaterEq, self.actual, self.lower),
            RelationReport::new("disturbance-band-upper", trial, RelationKind::LessEq, self.actual, self.upper),
        ]
    }
}

/// Band `λ d_η ± (1 − λ) D₀` with `D₀ = 1` for the trace distance.
pub fn disturbance_band(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<DisturbanceBand> {
    let out = intrinsic_checked(rho, d)?;
    let povm = d.reduce_to_povm()?;
    let dim = rho.dim();
    let eta = povm
        .effects()
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, m| &acc + &rho.matrix().conjugate_by(m));
    let lambda = eta.trace().re;
    if lambda <= PROBABILITY_CLIP {
        return Err(Error::InvalidParameter("λ = 0: the band collapses".into()));
    }
    let d_eta = trace_distance(rho, &DensityMatrix::new(eta.scale(1.0 / lambda))?)?.value;
    let d0 = 1.0;
    let spread = (1.0 - lambda).max(0.0) * d0;
    Ok(DisturbanceBand {
        lambda,
        d_eta,
        d0,
        lower: lambda * d_eta - spread,
        upper: lambda * d_eta + spread,
        actual: trace_distance(rho, &out.average)?.value,
    })
}

/// `S(ρ ‖ J^N(ρ)) ≥ H(P_B ‖ P'_B)` for a test measurement `B`.
pub fn classical_randomness_bound(rho: &DensityMatrix, d: &NaimarkDilation, test: &Povm) -> Result<RelationReport> {
    let out = intrinsic_checked(rho, d)?;
    let pb = born_probabilities(rho, test)?;
    let pb_after = born_probabilities(&out.average, test)?;
    Ok(RelationReport::from_metrics(
        "classical-randomness",
        TrialDescriptor::for_dilation(d),
        RelationKind::GreaterEq,
        quantum_relative_entropy(rho, &out.average)?,
        classical_relative_entropy(&pb, &pb_after)?,
    ))
}

/// Coarse-grainings of a doubly indexed dilation and the check that
/// measuring `A` first leaves the `B` statistics untouched.
#[derive(Clone, Debug)]
pub struct JointNondisturbance {
    pub q_a: Pvm,
    pub q_b: Pvm,
    pub povm_a: Povm,
    pub povm_b: Povm,
    pub report: RelationReport,
}

/// Groups the outcome projectors of `joint` by `index[k] = (i, j)` into
/// `Q_A = {Σ_j Q_ij}` and `Q_B = {Σ_i Q_ij}`, reduces both, and compares
/// `Tr(Q_{B,j} Σ_i Q_{A,i} (ρ⊗ρ_a) Q_{A,i})` with `Tr(ρ M_{B,j})` over the
/// given states.
pub fn joint_nondisturbance_construction(
    joint: &NaimarkDilation,
    index: &[(usize, usize)],
    states: &[DensityMatrix],
) -> Result<JointNondisturbance> {
    if index.len() != joint.outcome_count() {
        return Err(Error::DimensionMismatch {
            context: "joint outcome index",
            expected: joint.outcome_count(),
            found: index.len(),
        });
    }
    let rows = index.iter().map(|p| p.0).max().map_or(0, |m| m + 1);
    let cols = index.iter().map(|p| p.1).max().map_or(0, |m| m + 1);
    let n = joint.joint_dim();
    let mut a = vec![ComplexMatrix::zeros(n, n); rows];
    let mut b = vec![ComplexMatrix::zeros(n, n); cols];
    for (k, &(i, j)) in index.iter().enumerate() {
        a[i] = &a[i] + joint.projector(k);
        b[j] = &b[j] + joint.projector(k);
    }
    let q_a = Pvm::with_tolerance(a, crate::dilation::DILATION_TOL)?;
    let q_b = Pvm::with_tolerance(b, crate::dilation::DILATION_TOL)?;
    let reduce = |q: &Pvm| {
        crate::dilation::reduce_with_ancilla(q, joint.dim_s(), joint.ancilla(), (0..q.len()).map(|x| x.to_string()).collect())
    };
    let povm_a = reduce(&q_a)?;
    let povm_b = reduce(&q_b)?;
    let mut worst: f64 = 0.0;
    for rho in states {
        let sa = joint.joint_state(rho)?;
        let updated = q_a
            .projectors()
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, p| &acc + &sa.matrix().conjugate_by(p));
        for j in 0..cols {
            let lhs = (q_b.projector(j) * &updated).trace().re;
            let rhs = (rho.matrix() * povm_b.effect(j)).trace().re;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    let report = RelationReport::new(
        "joint-nondisturbance",
        TrialDescriptor::for_dilation(joint),
        RelationKind::Equality,
        worst,
        0.0,
    );
    Ok(JointNondisturbance {
        q_a,
        q_b,
        povm_a,
        povm_b,
        report,
    })
}

/// `D_α(ρ ‖ J^N(ρ))` is nondecreasing along an increasing grid of orders.
pub fn check_alpha_monotonicity(
    rho: &DensityMatrix,
    d: &NaimarkDilation,
    alphas: &[f64],
) -> Result<Vec<RelationReport>> {
    let out = intrinsic_checked(rho, d)?;
    let mut grid = alphas.to_vec();
    grid.sort_by(f64::total_cmp);
    let values = grid
        .iter()
        .map(|&a| sandwiched_renyi_divergence(rho, &out.average, a))
        .collect::<Result<Vec<_>>>()?;
    let base = TrialDescriptor::for_dilation(d);
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(a, v)| {
            let mut r = RelationReport::from_metrics(
                "alpha-monotonicity",
                base.clone().alpha(a[1]),
                RelationKind::GreaterEq,
                v[1],
                v[0],
            );
            r.judge(MONOTONICITY_TOL);
            r
        })
        .collect())
}

/// Residual of the correction condition as a report (`residual ≤ tol`).
pub fn check_correction_condition(povm: &Povm, corrections: &[Vec<ComplexMatrix>]) -> RelationReport {
    let residual = condition_residual(povm, corrections);
    let slots = corrections.iter().map(Vec::len).max().unwrap_or(0);
    RelationReport::new(
        "correction-condition",
        TrialDescriptor::new(povm.dim(), slots + 1),
        RelationKind::LessEq,
        residual,
        RELATION_TOL,
    )
}

/// Relation groups selectable in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationFamily {
    Randomness,
    Gentle,
    Uncertainty,
    Info,
    Balance,
    MaassenUffink,
    Band,
    Classical,
    Joint,
    Monotonicity,
}

impl RelationFamily {
    pub const ALL: [RelationFamily; 10] = [
        RelationFamily::Randomness,
        RelationFamily::Gentle,
        RelationFamily::Uncertainty,
        RelationFamily::Info,
        RelationFamily::Balance,
        RelationFamily::MaassenUffink,
        RelationFamily::Band,
        RelationFamily::Classical,
        RelationFamily::Joint,
        RelationFamily::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationFamily::Randomness => "randomness",
            RelationFamily::Gentle => "gentle",
            RelationFamily::Uncertainty => "uncertainty",
            RelationFamily::Info => "info",
            RelationFamily::Balance => "balance",
            RelationFamily::MaassenUffink => "maassen-uffink",
            RelationFamily::Band => "band",
            RelationFamily::Classical => "classical",
            RelationFamily::Joint => "joint",
            RelationFamily::Monotonicity => "monotonicity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// How a trial's dilation is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DilationSource {
    /// Canonical dilation of the Gram-root family of a random POVM.
    Canonical,
    /// Heisenberg picture of a Haar-random coupling.
    RandomCoupling,
    /// Heisenberg picture of the Lüders coupling of a random POVM.
    LudersCoupling,
}

/// A random `(state, POVM, dilation)` triple, with the coupling when the
/// dilation came from one.
#[derive(Clone, Debug)]
pub struct RandomTrial {
    pub seed: u64,
    pub rho: DensityMatrix,
    pub dilation: NaimarkDilation,
    pub coupling: Option<CouplingModel>,
    pub source: DilationSource,
}

/// Builds the trial for `seed` on a `dim_s`-dimensional system. The
/// dilation source cycles with the seed.
pub fn random_trial(seed: u64, dim_s: usize) -> Result<RandomTrial> {
    let mut rng = seeded_rng(seed);
    let rank = rng.random_range(1..=dim_s);
    let rho = random_density_from(&mut rng, dim_s, rank);
    let source = match seed % 3 {
        0 => DilationSource::Canonical,
        1 => DilationSource::RandomCoupling,
        _ => DilationSource::LudersCoupling,
    };
    let (dilation, coupling) = match source {
        DilationSource::Canonical => {
            let n = rng.random_range(2..=5);
            let povm = random_povm_from(&mut rng, dim_s, n);
            (canonical_dilation_from_kraus(&gram_root_family(&povm)?)?, None)
        }
        DilationSource::RandomCoupling => {
            let dim_a = rng.random_range(2..=4);
            let u = random_unitary_from(&mut rng, dim_s * dim_a);
            let c = CouplingModel::computational(dim_s, dim_a, u)?;
            (dilation_from_coupling(&c)?, Some(c))
        }
        DilationSource::LudersCoupling => {
            let n = rng.random_range(2..=5);
            let povm = random_povm_from(&mut rng, dim_s, n);
            let c = CouplingModel::luders(&povm)?;
            (dilation_from_coupling(&c)?, Some(c))
        }
    };
    Ok(RandomTrial {
        seed,
        rho,
        dilation,
        coupling,
        source,
    })
}

fn collect(out: &mut Vec<RelationReport>, id: &str, trial: &TrialDescriptor, r: Result<Vec<RelationReport>>) {
    match r {
        Ok(v) => out.extend(v),
        Err(e) => out.push(RelationReport::failed(id, trial.clone(), &e)),
    }
}

/// Evaluates the selected relation families on the trial for `seed`.
/// Auxiliary inputs (test measurement, bases, coupling, joint PVM) are drawn
/// from a second stream derived from the same seed.
pub fn run_trial(seed: u64, dim_s: usize, alphas: &[f64], families: &[RelationFamily]) -> Vec<RelationReport> {
    let base = TrialDescriptor {
        seed: Some(seed),
        dim_s,
        ..Default::default()
    };
    let trial = match random_trial(seed, dim_s) {
        Ok(t) => t,
        Err(e) => return vec![RelationReport::failed("trial-construction", base, &e)],
    };
    let (rho, d) = (&trial.rho, &trial.dilation);
    let mut aux = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::new();
    for &family in families {
        let id = family.name();
        let r: Result<Vec<RelationReport>> = match family {
            RelationFamily::Randomness => check_randomness_disturbance(rho, d).map(|r| vec![r]),
            RelationFamily::Gentle => check_gentle_family(rho, d, alphas),
            RelationFamily::Uncertainty => check_uncertainty_disturbance(rho, d, alphas),
            RelationFamily::Info => check_info_disturbance(rho, d).map(|r| vec![r]),
            RelationFamily::Balance => {
                let c = match &trial.coupling {
                    Some(c) => c.clone(),
                    None => {
                        let dim_a = aux.random_range(2..=3);
                        CouplingModel::computational(dim_s, dim_a, random_unitary_from(&mut aux, dim_s * dim_a))
                            .expect("Haar coupling")
                    }
                };
                check_balance(rho, &c)
            }
            RelationFamily::MaassenUffink => {
                let a = random_unitary_from(&mut aux, dim_s);
                let b = random_unitary_from(&mut aux, dim_s);
                maassen_uffink_witness(rho, &a, &b)
            }
            RelationFamily::Band => disturbance_band(rho, d).map(|b| b.reports(TrialDescriptor::for_dilation(d))),
            RelationFamily::Classical => {
                let n = aux.random_range(1..=4);
                let test = random_povm_from(&mut aux, dim_s, n);
                classical_randomness_bound(rho, d, &test).map(|r| vec![r])
            }
            RelationFamily::Joint => random_joint_check(&mut aux, dim_s, rho),
            RelationFamily::Monotonicity => check_alpha_monotonicity(rho, d, alphas),
        };
        collect(&mut out, id, &base, r);
    }
    out.into_iter()
        .map(|mut r| {
            r.trial.seed = Some(seed);
            r
        })
        .collect()
}

/// Random 2×2-indexed joint PVM (rank-one projectors of a Haar basis,
/// dealt round-robin) with a random mixed ancilla.
fn random_joint_check<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, rho: &DensityMatrix) -> Result<Vec<RelationReport>> {
    let dim_a = 2;
    let n = dim_s * dim_a;
    let basis = random_unitary_from(rng, n);
    let mut groups = vec![ComplexMatrix::zeros(n, n); 4];
    for k in 0..n {
        let v = basis.column_vec(k);
        groups[k % 4] = &groups[k % 4] + &ComplexMatrix::ket_projector(&v);
    }
    let ancilla = random_density_from(rng, dim_a, dim_a);
    let d = NaimarkDilation::new(dim_s, ancilla, groups)?;
    let index = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let extra = random_density_from(rng, dim_s, dim_s);
    let j = joint_nondisturbance_construction(&d, &index, &[rho.clone(), extra])?;
    Ok(vec![j.report])
}

/// Cases where the relations hold with equality.
pub fn saturation_witnesses(seed: u64) -> Result<Vec<RelationReport>> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::new();
    let rho = random_density_from(&mut rng, 3, 3);
    let eig = hermitian_eig(rho.matrix())?;
    let pvm = Pvm::from_basis(&eig.eigenvectors)?;
    let projectors = pvm.projectors().to_vec();
    let eigen_dilation = NaimarkDilation::new(3, DensityMatrix::basis_state(1, 0), projectors)?;
    out.push(check_randomness_disturbance(&rho, &eigen_dilation)?);
    // H(P) only vanishes with the divergence when the state is pure
    let top = DensityMatrix::pure(&eig.eigenvector(0))?;
    let unc = check_uncertainty_disturbance(&top, &eigen_dilation, &[0.5, 0.7, 0.9])?;
    out.extend(unc);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[crate::matkernel::c(s, 0.0), crate::matkernel::c(s, 0.0)])?;
    let comp = NaimarkDilation::new(
        2,
        DensityMatrix::basis_state(1, 0),
        Pvm::computational(2).projectors().to_vec(),
    )?;
    out.push(check_randomness_disturbance(&plus, &comp)?);
    let unc = check_uncertainty_disturbance(&plus, &comp, &[0.5])?;
    out.extend(unc.into_iter().filter(|r| r.trial.alpha == Some(1.0)));

    // rank-one PVM on a pure state: every nonzero outcome saturates p ≤ F
    let pure = DensityMatrix::pure(&random_unitary_from(&mut rng, 3).column_vec(0))?;
    let basis = random_unitary_from(&mut rng, 3);
    let rank_one = NaimarkDilation::new(3, DensityMatrix::basis_state(1, 0), Pvm::from_basis(&basis)?.projectors().to_vec())?;
    let gentle = check_gentle_family(&pure, &rank_one, &[0.5])?;
    out.extend(gentle.into_iter().filter(|r| r.relation == "winter" || r.relation == "gentle"));

    for r in &mut out {
        r.trial.seed = Some(seed);
    }
    Ok(out)
}

/// Single-system check helper: `ρ ↦ ρ ⊗ |0><0|` with `Q_i ⊗ I` for a
/// projective measurement, used by tests and scenarios.
pub fn projective_dilation(pvm: &Pvm, dim_a: usize) -> Result<NaimarkDilation> {
    let id = ComplexMatrix::identity(dim_a);
    NaimarkDilation::new(
        pvm.dim(),
        DensityMatrix::basis_state(dim_a, 0),
        pvm.projectors().iter().map(|p| tensor_product(p, &id)).collect(),
    )
}
