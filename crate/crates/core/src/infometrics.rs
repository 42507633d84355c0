//! Entropies, divergences, distances and information measures. All
//! logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::InstrumentOutput;
use crate::matkernel::{
    hermitian_eig, matrix_function, spectral_function, trace_norm, ComplexMatrix, HermitianSpectrum, ScalarFn,
};
use crate::qobjects::{DensityMatrix, OutcomeDistribution, Pvm};

/// Weight of `ρ` outside the support of `σ` above which `S(ρ‖σ)` is
/// treated as infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// A scalar result that may be `+∞`. Infinite values have
/// `finite == false` and `value == f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub finite: bool,
}

impl MetricValue {
    pub fn of(value: f64) -> Self {
        Self { value, finite: true }
    }

    pub fn infinite() -> Self {
        Self {
            value: f64::INFINITY,
            finite: false,
        }
    }

    pub fn is_infinite(&self) -> bool {
        !self.finite
    }
}

fn check_same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "state pair",
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().copied().map(xlogx).sum::<f64>()
}

pub fn shannon_entropy(p: &OutcomeDistribution) -> MetricValue {
    MetricValue::of(shannon(p.probs()))
}

/// `(1 − α)⁻¹ log Σ p_i^α`; `α = 1` is the Shannon entropy.
pub fn renyi_entropy(p: &OutcomeDistribution, alpha: f64) -> Result<MetricValue> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("Rényi order {alpha} must be positive")));
    }
    if alpha == 1.0 {
        return Ok(shannon_entropy(p));
    }
    let s: f64 = p.probs().iter().filter(|&&x| x > 0.0).map(|x| x.powf(alpha)).sum();
    Ok(MetricValue::of(s.log2() / (1.0 - alpha)))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<MetricValue> {
    let spec = hermitian_eig(rho.matrix())?;
    let eps = spec.eps_support();
    let s = -spec
        .eigenvalues
        .iter()
        .filter(|&&l| l > eps)
        .map(|&l| xlogx(l))
        .sum::<f64>();
    Ok(MetricValue::of(s))
}

/// `Tr ρ(log ρ − log σ)`, infinite when `ρ` has weight outside `supp σ`.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<MetricValue> {
    check_same_dim(rho, sigma)?;
    let sspec = hermitian_eig(sigma.matrix())?;
    let leak = 1.0 - (rho.matrix() * &sspec.support_projector()).trace().re;
    if leak > SUPPORT_LEAK_TOL {
        return Ok(MetricValue::infinite());
    }
    let log_sigma = spectral_function(&sspec, ScalarFn::Log2, true)?;
    let cross = (rho.matrix() * &log_sigma).trace().re;
    let s = von_neumann_entropy(rho)?.value;
    Ok(MetricValue::of(-s - cross))
}

fn check_divergence_order(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.5 || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "sandwiched Rényi order {alpha} outside [1/2, 1) ∪ (1, ∞)"
        )));
    }
    Ok(())
}

/// `(α − 1)⁻¹ log Tr(σ^γ ρ σ^γ)^α` with `γ = (1 − α)/(2α)`.
pub fn sandwiched_renyi_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<MetricValue> {
    check_divergence_order(alpha)?;
    check_same_dim(rho, sigma)?;
    let sspec = hermitian_eig(sigma.matrix())?;
    if alpha > 1.0 {
        let leak = 1.0 - (rho.matrix() * &sspec.support_projector()).trace().re;
        if leak > SUPPORT_LEAK_TOL {
            return Ok(MetricValue::infinite());
        }
    }
    let q = quasi_trace(rho, &sspec, alpha)?;
    if q.is_nan() || q <= 0.0 {
        return Ok(MetricValue::infinite());
    }
    Ok(MetricValue::of(q.log2() / (alpha - 1.0)))
}

fn quasi_trace(rho: &DensityMatrix, sspec: &HermitianSpectrum, alpha: f64) -> Result<f64> {
    let gamma = (1.0 - alpha) / (2.0 * alpha);
    let sg = spectral_function(sspec, ScalarFn::Power(gamma), true)?;
    let inner = rho.matrix().conjugate_by(&sg);
    let spec = hermitian_eig(&inner)?;
    let eps = spec.eps_support();
    Ok(spec.eigenvalues.iter().filter(|&&l| l > eps).map(|l| l.powf(alpha)).sum())
}

/// `Tr(σ^γ ρ σ^γ)^α` with `γ = (1 − α)/(2α)` and powers of `σ` taken on
/// its support.
pub fn sandwiched_quasi_trace(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_divergence_order(alpha)?;
    check_same_dim(rho, sigma)?;
    quasi_trace(rho, &hermitian_eig(sigma.matrix())?, alpha)
}

/// `(Tr √(√ρ σ √ρ))²`, computed as `‖√ρ √σ‖₁²`. Square roots are taken on
/// the supports so eigen-noise does not leak in as `√1e-17`-sized terms.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<MetricValue> {
    check_same_dim(rho, sigma)?;
    let a = matrix_function(rho.matrix(), ScalarFn::Sqrt, true)?;
    let b = matrix_function(sigma.matrix(), ScalarFn::Sqrt, true)?;
    let t = trace_norm(&(&a * &b));
    Ok(MetricValue::of(t * t))
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<MetricValue> {
    check_same_dim(rho, sigma)?;
    Ok(MetricValue::of(0.5 * trace_norm(&(rho.matrix() - sigma.matrix()))))
}

/// `1 − Σ p_i²`.
pub fn invariant_information(p: &OutcomeDistribution) -> MetricValue {
    MetricValue::of(1.0 - p.probs().iter().map(|x| x * x).sum::<f64>())
}

/// `S(ρ) − Σ p_i S(ρ_i)` over the nonzero branches.
pub fn groenewold_gain(rho: &DensityMatrix, out: &InstrumentOutput) -> Result<MetricValue> {
    let mut avg = 0.0;
    for b in &out.branches {
        if let Some(state) = b.normalized() {
            avg += b.probability * von_neumann_entropy(&state)?.value;
        }
    }
    Ok(MetricValue::of(von_neumann_entropy(rho)?.value - avg))
}

/// `Σ Q ρ Q` over the projectors and the completion block, if any.
pub fn dephase(rho: &DensityMatrix, q: &Pvm) -> Result<DensityMatrix> {
    if rho.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            context: "dephase",
            expected: q.dim(),
            found: rho.dim(),
        });
    }
    let sum = q
        .completed_projectors()
        .iter()
        .fold(ComplexMatrix::zeros(rho.dim(), rho.dim()), |acc, p| {
            &acc + &rho.matrix().conjugate_by(p)
        });
    DensityMatrix::new(sum)
}

/// `S(ρ ‖ Σ_i Q_i ρ Q_i)`.
pub fn intrinsic_randomness(joint: &DensityMatrix, q: &Pvm) -> Result<MetricValue> {
    quantum_relative_entropy(joint, &dephase(joint, q)?)
}

/// `Σ p_i log(p_i / q_i)`, infinite where `p_i > 0 = q_i`.
pub fn classical_relative_entropy(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<MetricValue> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "classical_relative_entropy",
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut s = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(MetricValue::infinite());
        }
        s += a * (a / b).log2();
    }
    Ok(MetricValue::of(s))
}
