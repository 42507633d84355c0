//! Validated quantum data types and seeded random ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matkernel::{c, hermitian_eig, ComplexMatrix, C64};

/// Tolerance for Hermiticity, positivity, normalization and completeness.
pub const STATE_TOL: f64 = 1e-9;

/// Tolerance for `Q_i Q_j = δ_ij Q_i` (largest entry of the residual).
pub const PVM_TOL: f64 = 1e-9;

/// Tolerance for the correction-family condition residual (Frobenius).
pub const CONDITION_TOL: f64 = 1e-8;

/// Negative probabilities above this floor are clipped to zero.
pub const PROBABILITY_CLIP: f64 = 1e-12;

fn check_square(m: &ComplexMatrix, dim: usize, context: &'static str) -> Result<()> {
    if !m.is_square() || m.rows() != dim {
        return Err(Error::DimensionMismatch {
            context,
            expected: dim,
            found: m.rows(),
        });
    }
    Ok(())
}

fn check_hermitian(m: &ComplexMatrix, what: impl FnOnce() -> String) -> Result<()> {
    let residual = m.hermiticity_residual();
    if residual > STATE_TOL {
        return Err(Error::NotHermitian {
            what: what(),
            residual,
        });
    }
    Ok(())
}

fn check_psd(m: &ComplexMatrix, what: impl FnOnce() -> String) -> Result<()> {
    let spec = hermitian_eig(m)?;
    let min = spec.min_eigenvalue();
    if min < -STATE_TOL {
        return Err(Error::NotPositive {
            what: what(),
            eigenvalue: min,
        });
    }
    Ok(())
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidShape(format!(
                "density matrix of shape {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        check_hermitian(&mat, || "density matrix".into())?;
        let mat = mat.hermitian_part();
        check_psd(&mat, || "density matrix".into())?;
        let trace = mat.trace().re;
        let residual = (trace - 1.0).abs();
        if residual > STATE_TOL {
            return Err(Error::NotNormalized { trace, residual });
        }
        Ok(Self { mat })
    }

    /// Normalizes a nonzero PSD operator by its trace.
    pub fn from_unnormalized(mat: &ComplexMatrix) -> Result<Self> {
        let t = mat.trace().re;
        if t <= 0.0 || !t.is_finite() {
            return Err(Error::NotNormalized {
                trace: t,
                residual: (t - 1.0).abs(),
            });
        }
        Self::new(mat.scale(1.0 / t))
    }

    /// `|ψ><ψ|` for a normalized ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::ket_projector(ket))
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self {
            mat: ComplexMatrix::basis_projector(dim, i),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        crate::matkernel::hs_inner(&self.mat, &self.mat).re
    }

    /// Whether the state is pure up to `tol` in purity.
    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: crate::matkernel::tensor_product(&self.mat, &other.mat),
        }
    }
}

/// Positive operator-valued measure: PSD effects summing to the identity.
/// Effect order is significant; labels are carried for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
    labels: Vec<String>,
    dim: usize,
}

/// Checks every POVM invariant and returns the validated measurement.
pub fn validate_povm(effects: Vec<ComplexMatrix>) -> Result<Povm> {
    let labels = (0..effects.len()).map(|i| i.to_string()).collect();
    Povm::with_labels(effects, labels)
}

impl Povm {
    pub fn with_labels(effects: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidParameter("POVM needs at least one effect".into()))?;
        let dim = first.rows();
        if labels.len() != effects.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut cleaned = Vec::with_capacity(effects.len());
        for (i, e) in effects.iter().enumerate() {
            check_square(e, dim, "POVM effect")?;
            check_hermitian(e, || format!("effect {i}"))?;
            let h = e.hermitian_part();
            check_psd(&h, || format!("effect {i}"))?;
            sum = &sum + &h;
            cleaned.push(h);
        }
        let residual = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if residual > STATE_TOL {
            return Err(Error::Incomplete { residual });
        }
        Ok(Self {
            effects: cleaned,
            labels,
            dim,
        })
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest `‖M_i² − M_i‖_max` over effects.
    pub fn projectivity_residual(&self) -> f64 {
        self.effects
            .iter()
            .map(|m| (&(m * m) - m).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn is_projective(&self, tol: f64) -> bool {
        self.projectivity_residual() <= tol
    }

    /// Largest Frobenius distance between corresponding effects.
    pub fn distance(&self, other: &Povm) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// Mutually orthogonal projectors. `complete` records whether they resolve
/// the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Pvm {
    projectors: Vec<ComplexMatrix>,
    dim: usize,
    complete: bool,
}

impl Pvm {
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(projectors, PVM_TOL)
    }

    pub fn with_tolerance(projectors: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidParameter("PVM needs at least one projector".into()))?;
        let dim = first.rows();
        let mut cleaned = Vec::with_capacity(projectors.len());
        for (i, q) in projectors.iter().enumerate() {
            check_square(q, dim, "PVM projector")?;
            check_hermitian(q, || format!("projector {i}"))?;
            cleaned.push(q.hermitian_part());
        }
        let residual = orthogonality_residual(&cleaned);
        if residual > tol {
            return Err(Error::NotOrthogonal { residual });
        }
        let sum = cleaned
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, q| &acc + q);
        let complete = (&sum - &ComplexMatrix::identity(dim)).max_abs() <= tol;
        Ok(Self {
            projectors: cleaned,
            dim,
            complete,
        })
    }

    /// Rank-1 projectors onto the columns of a unitary.
    pub fn from_basis(unitary: &ComplexMatrix) -> Result<Self> {
        let projectors = (0..unitary.cols())
            .map(|k| ComplexMatrix::ket_projector(&unitary.column_vec(k)))
            .collect();
        Self::new(projectors)
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            projectors: (0..dim).map(|i| ComplexMatrix::basis_projector(dim, i)).collect(),
            dim,
            complete: true,
        }
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn projector(&self, i: usize) -> &ComplexMatrix {
        &self.projectors[i]
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `I − Σ Q_i`, the projector completing the family to a resolution of
    /// the identity.
    pub fn complement(&self) -> ComplexMatrix {
        self.projectors
            .iter()
            .fold(ComplexMatrix::identity(self.dim), |acc, q| &acc - q)
    }

    /// Projectors plus the complement when the family is incomplete.
    pub fn completed_projectors(&self) -> Vec<ComplexMatrix> {
        let mut out = self.projectors.clone();
        if !self.complete {
            out.push(self.complement());
        }
        out
    }

    /// The family viewed as a POVM (requires completeness).
    pub fn to_povm(&self) -> Result<Povm> {
        validate_povm(self.projectors.clone())
    }
}

/// Largest entry of `Q_i Q_j − δ_ij Q_i` over all pairs.
pub fn orthogonality_residual(projectors: &[ComplexMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, qi) in projectors.iter().enumerate() {
        for (j, qj) in projectors.iter().enumerate() {
            let prod = qi * qj;
            let r = if i == j {
                (&prod - qi).max_abs()
            } else {
                prod.max_abs()
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Correction operators `N_{l|i}` (`l ≥ 1`) attached to a POVM, satisfying
/// `Σ_l N†_{l|i} N_{l|j} = δ_ij M_i − M_i M_j`. The `l = 0` member is the
/// effect `M_i` itself and is not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausCorrectionFamily {
    povm: Povm,
    /// `corrections[i][l - 1] = N_{l|i}`; every outcome has the same slot count.
    corrections: Vec<Vec<ComplexMatrix>>,
}

impl KrausCorrectionFamily {
    /// Validates the family. Ragged slot lists are padded with zeros.
    pub fn new(povm: Povm, corrections: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let corrections = normalize_slots(&povm, corrections)?;
        let residual = condition_residual(&povm, &corrections);
        if residual > CONDITION_TOL {
            return Err(Error::CorrectionCondition { residual });
        }
        Ok(Self { povm, corrections })
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// Number of correction slots per outcome (`l = 1..=slots`).
    pub fn slots(&self) -> usize {
        self.corrections.first().map_or(0, Vec::len)
    }

    /// `N_{l|i}` for `l ≥ 1`.
    pub fn correction(&self, i: usize, l: usize) -> &ComplexMatrix {
        assert!(l >= 1, "slot 0 is the effect itself");
        &self.corrections[i][l - 1]
    }

    pub fn corrections(&self, i: usize) -> &[ComplexMatrix] {
        &self.corrections[i]
    }

    pub fn all_corrections(&self) -> &[Vec<ComplexMatrix>] {
        &self.corrections
    }

    pub fn residual(&self) -> f64 {
        condition_residual(&self.povm, &self.corrections)
    }
}

fn normalize_slots(povm: &Povm, corrections: Vec<Vec<ComplexMatrix>>) -> Result<Vec<Vec<ComplexMatrix>>> {
    if corrections.len() != povm.len() {
        return Err(Error::InvalidParameter(format!(
            "{} correction lists for {} outcomes",
            corrections.len(),
            povm.len()
        )));
    }
    let d = povm.dim();
    let slots = corrections.iter().map(Vec::len).max().unwrap_or(0);
    corrections
        .into_iter()
        .map(|mut row| {
            for n in &row {
                check_square(n, d, "correction operator")?;
            }
            row.resize(slots, ComplexMatrix::zeros(d, d));
            Ok(row)
        })
        .collect()
}

/// Largest Frobenius residual of `Σ_l N†_{l|i} N_{l|j} − (δ_ij M_i − M_i M_j)`.
pub fn condition_residual(povm: &Povm, corrections: &[Vec<ComplexMatrix>]) -> f64 {
    let d = povm.dim();
    let n = povm.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut lhs = ComplexMatrix::zeros(d, d);
            for (a, b) in corrections[i].iter().zip(&corrections[j]) {
                lhs = &lhs + &(&a.adjoint() * b);
            }
            let mi = povm.effect(i);
            let mut rhs = -&(mi * povm.effect(j));
            if i == j {
                rhs = &rhs + mi;
            }
            worst = worst.max(lhs.distance(&rhs));
        }
    }
    worst
}

/// Outcome statistics with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
    labels: Vec<String>,
}

impl OutcomeDistribution {
    /// Clips entries in `[-1e-12, 0)` to zero, rejects anything more
    /// negative, and checks normalization before renormalizing.
    pub fn new(raw: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if raw.is_empty() || raw.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} probabilities with {} labels",
                raw.len(),
                labels.len()
            )));
        }
        let mut probs = Vec::with_capacity(raw.len());
        for &p in &raw {
            if !p.is_finite() || p < -PROBABILITY_CLIP {
                return Err(Error::NotPositive {
                    what: "probability".into(),
                    eigenvalue: p,
                });
            }
            probs.push(p.max(0.0));
        }
        let total: f64 = probs.iter().sum();
        let residual = (total - 1.0).abs();
        if residual > STATE_TOL {
            return Err(Error::NotNormalized {
                trace: total,
                residual,
            });
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(Self { probs, labels })
    }

    pub fn unlabeled(raw: Vec<f64>) -> Result<Self> {
        let labels = (0..raw.len()).map(|i| i.to_string()).collect();
        Self::new(raw, labels)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `p_i = Tr(ρ M_i)`.
pub fn born_probabilities(rho: &DensityMatrix, m: &Povm) -> Result<OutcomeDistribution> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            context: "born_probabilities",
            expected: m.dim(),
            found: rho.dim(),
        });
    }
    let raw = m
        .effects()
        .iter()
        .map(|e| crate::matkernel::trace_of_product(rho.matrix(), e).re)
        .collect();
    OutcomeDistribution::new(raw, m.labels().to_vec())
}

/// Deterministic generator used by every seeded constructor.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // drawn row-major so the stream layout does not depend on storage order
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(c(re, im) * std::f64::consts::FRAC_1_SQRT_2);
    }
    ComplexMatrix::new(rows, cols, data).expect("finite gaussian samples")
}

/// Haar-random unitary (QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal absorbed into `Q`).
pub fn random_unitary_from<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim).into_inner();
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    ComplexMatrix::from_nalgebra(q)
}

pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    random_unitary_from(&mut seeded_rng(seed), dim)
}

/// Reduction of a Haar-random pure state on `dim × rank`.
pub fn random_density_from<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    assert!(rank >= 1 && rank <= dim, "rank must lie in 1..=dim");
    let g = gaussian_matrix(rng, dim, rank);
    let gg = &g * &g.adjoint();
    DensityMatrix::from_unnormalized(&gg).expect("Ginibre product is a valid state")
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> DensityMatrix {
    random_density_from(&mut seeded_rng(seed), dim, rank)
}

/// `M_i = V†(I ⊗ |i><i|)V` for a Haar-random isometry `V: C^dim → C^dim ⊗ C^n`.
pub fn random_povm_from<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_outcomes: usize) -> Povm {
    assert!(n_outcomes >= 1, "need at least one outcome");
    let u = random_unitary_from(rng, dim * n_outcomes);
    let effects = (0..n_outcomes)
        .map(|i| {
            ComplexMatrix::from_fn(dim, dim, |a, b| {
                (0..dim)
                    .map(|s| {
                        let row = s * n_outcomes + i;
                        u.get(row, a).conj() * u.get(row, b)
                    })
                    .sum()
            })
        })
        .collect();
    validate_povm(effects).expect("isometric construction is a valid POVM")
}

pub fn random_povm(dim: usize, n_outcomes: usize, seed: u64) -> Povm {
    random_povm_from(&mut seeded_rng(seed), dim, n_outcomes)
}
