//! State-update rules: projection postulate, Lüders, the intrinsic rule (by
//! partial trace or operator sum), coupling-based updates and general
//! post-unitary instruments.

use crate::dilation::{
    dilation_from_coupling, extract_correction_family, purify_ancilla, CouplingModel, NaimarkDilation,
};
use crate::error::{Error, Result};
use crate::matkernel::{matrix_function, partial_trace_ancilla, tensor_product, ComplexMatrix, ScalarFn};
use crate::qobjects::{DensityMatrix, KrausCorrectionFamily, Povm, Pvm, PROBABILITY_CLIP};

/// Branch states and probabilities must agree with the trace to this.
pub const BRANCH_TOL: f64 = 1e-9;

/// Tolerance for the agreement of the two intrinsic-rule evaluations.
pub const PATH_TOL: f64 = 1e-9;

/// One outcome of an instrument: the unnormalized post-state and its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub label: String,
    pub state: ComplexMatrix,
    pub probability: f64,
}

impl Branch {
    /// `state / probability`, or `None` for a zero-probability outcome.
    pub fn normalized(&self) -> Option<DensityMatrix> {
        if self.probability <= PROBABILITY_CLIP {
            return None;
        }
        DensityMatrix::new(self.state.scale(1.0 / self.probability)).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentOutput {
    pub branches: Vec<Branch>,
    pub average: DensityMatrix,
}

impl InstrumentOutput {
    pub fn from_states(labels: &[String], states: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = states.first().map(|s| s.rows()).unwrap_or(0);
        let mut total = ComplexMatrix::zeros(dim, dim);
        let mut branches = Vec::with_capacity(states.len());
        for (label, state) in labels.iter().zip(states) {
            let state = state.hermitian_part();
            let mut probability = state.trace().re;
            if probability < 0.0 && probability > -PROBABILITY_CLIP {
                probability = 0.0;
            }
            total = &total + &state;
            branches.push(Branch {
                label: label.clone(),
                state,
                probability,
            });
        }
        let sum: f64 = branches.iter().map(|b| b.probability).sum();
        if (sum - 1.0).abs() > BRANCH_TOL {
            return Err(Error::NotNormalized {
                trace: sum,
                residual: (sum - 1.0).abs(),
            });
        }
        let average = DensityMatrix::new(total)?;
        Ok(Self { branches, average })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.probability).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.branches.iter().map(|b| b.label.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Largest branchwise Frobenius distance between two outputs with the
    /// same outcome count.
    pub fn max_branch_distance(&self, other: &InstrumentOutput) -> f64 {
        assert_eq!(self.len(), other.len(), "outcome counts differ");
        self.branches
            .iter()
            .zip(&other.branches)
            .map(|(a, b)| a.state.distance(&b.state))
            .fold(0.0, f64::max)
    }
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// `Q_i ρ Q_i` for a complete PVM on the system.
pub fn apply_projective(rho: &DensityMatrix, q: &Pvm) -> Result<InstrumentOutput> {
    check_dim("apply_projective", q.dim(), rho.dim())?;
    let states = q.projectors().iter().map(|p| rho.matrix().conjugate_by(p)).collect();
    InstrumentOutput::from_states(&default_labels(q.len()), states)
}

/// `√M_i ρ √M_i`.
pub fn apply_luders(rho: &DensityMatrix, m: &Povm) -> Result<InstrumentOutput> {
    check_dim("apply_luders", m.dim(), rho.dim())?;
    let states = m
        .effects()
        .iter()
        .map(|e| Ok(rho.matrix().conjugate_by(&matrix_function(e, ScalarFn::Sqrt, false)?)))
        .collect::<Result<Vec<_>>>()?;
    InstrumentOutput::from_states(m.labels(), states)
}

/// `Tr_a(Q_i (ρ ⊗ ρ_a) Q_i)`.
pub fn apply_intrinsic_trace(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<InstrumentOutput> {
    let joint = d.joint_state(rho)?;
    let states = d
        .pvm()
        .projectors()
        .iter()
        .map(|q| partial_trace_ancilla(&joint.matrix().conjugate_by(q), d.dim_s(), d.dim_a()))
        .collect::<Result<Vec<_>>>()?;
    InstrumentOutput::from_states(d.labels(), states)
}

/// `M_i ρ M_i + Σ_l N_{l|i} ρ N†_{l|i}`.
pub fn apply_intrinsic_opsum(rho: &DensityMatrix, k: &KrausCorrectionFamily) -> Result<InstrumentOutput> {
    let povm = k.povm();
    check_dim("apply_intrinsic_opsum", povm.dim(), rho.dim())?;
    let residual = k.residual();
    if residual > crate::qobjects::CONDITION_TOL {
        return Err(Error::CorrectionCondition { residual });
    }
    let states = (0..povm.len())
        .map(|i| opsum_branch(k, i, rho.matrix()))
        .collect();
    InstrumentOutput::from_states(povm.labels(), states)
}

fn opsum_branch(k: &KrausCorrectionFamily, i: usize, x: &ComplexMatrix) -> ComplexMatrix {
    let m = k.povm().effect(i);
    k.corrections(i)
        .iter()
        .fold(x.conjugate_by(m), |acc, n| &acc + &x.conjugate_by(n))
}

/// Intrinsic rule evaluated both ways, failing if the two disagree. Mixed
/// ancillas are purified for the operator-sum path.
pub fn apply_intrinsic_checked(rho: &DensityMatrix, d: &NaimarkDilation) -> Result<InstrumentOutput> {
    let traced = apply_intrinsic_trace(rho, d)?;
    let family = extract_correction_family(&purify_ancilla(d)?)?;
    let summed = apply_intrinsic_opsum(rho, &family)?;
    let deviation = traced.max_branch_distance(&summed);
    if deviation > PATH_TOL {
        return Err(Error::PathDisagreement { deviation });
    }
    Ok(traced)
}

/// `Tr_a(U_i Q_i (ρ ⊗ ρ_a) Q_i U_i†)` with one joint unitary per outcome.
pub fn apply_general(
    rho: &DensityMatrix,
    d: &NaimarkDilation,
    post_unitaries: &[ComplexMatrix],
) -> Result<InstrumentOutput> {
    check_dim("apply_general post-unitaries", d.outcome_count(), post_unitaries.len())?;
    for u in post_unitaries {
        check_dim("apply_general post-unitary", d.joint_dim(), u.rows())?;
        let residual = u.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::NotUnitary { residual });
        }
    }
    let joint = d.joint_state(rho)?;
    let states = d
        .pvm()
        .projectors()
        .iter()
        .zip(post_unitaries)
        .map(|(q, u)| partial_trace_ancilla(&joint.matrix().conjugate_by(&(u * q)), d.dim_s(), d.dim_a()))
        .collect::<Result<Vec<_>>>()?;
    InstrumentOutput::from_states(d.labels(), states)
}

/// `Tr_a(P_i U (ρ ⊗ |0><0|) U† P_i)` for a coupling with pointer `P_i`.
pub fn apply_textbook(rho: &DensityMatrix, c: &CouplingModel) -> Result<InstrumentOutput> {
    check_dim("apply_textbook", c.dim_s(), rho.dim())?;
    let evolved = rho.tensor(&c.ancilla_state()).matrix().conjugate_by(c.unitary());
    let states = c
        .pointer()
        .iter()
        .map(|p| partial_trace_ancilla(&evolved.conjugate_by(p), c.dim_s(), c.dim_a()))
        .collect::<Result<Vec<_>>>()?;
    InstrumentOutput::from_states(&default_labels(c.pointer().len()), states)
}

/// Intrinsic rule of the Heisenberg-picture dilation of a coupling.
pub fn apply_intrinsic_for_coupling(rho: &DensityMatrix, c: &CouplingModel) -> Result<InstrumentOutput> {
    apply_intrinsic_trace(rho, &dilation_from_coupling(c)?)
}

/// Choi matrix `Σ_{jk} |j><k| ⊗ Φ(|j><k|)` of a linear map on `dim × dim`
/// matrices.
pub fn choi_matrix(dim: usize, map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let mut out: Option<ComplexMatrix> = None;
    for j in 0..dim {
        for k in 0..dim {
            let unit = ComplexMatrix::from_fn(dim, dim, |r, c| {
                if r == j && c == k {
                    crate::matkernel::c(1.0, 0.0)
                } else {
                    Default::default()
                }
            });
            let term = tensor_product(&unit, &map(&unit));
            out = Some(match out {
                Some(acc) => &acc + &term,
                None => term,
            });
        }
    }
    out.expect("dimension at least one")
}

/// Branch map of the intrinsic rule for outcome `i`, acting on any matrix.
pub fn intrinsic_branch_map(d: &NaimarkDilation, i: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let joint = tensor_product(x, d.ancilla().matrix());
    let q = d.projector(i);
    partial_trace_ancilla(&(&(q * &joint) * q), d.dim_s(), d.dim_a())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::{canonical_dilation_from_kraus, gram_root_family};
    use crate::matkernel::{c, hermitian_eig};
    use crate::qobjects::{random_density, random_povm, validate_povm};

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn projective_on_plus() {
        let out = apply_projective(&plus(), &Pvm::computational(2)).unwrap();
        assert!(out.branches[0].state.distance(&ComplexMatrix::from_real_diagonal(&[0.5, 0.0])) < 1e-15);
        assert!(out.branches[1].state.distance(&ComplexMatrix::from_real_diagonal(&[0.0, 0.5])) < 1e-15);
        assert!(out.average.matrix().distance(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn eigenbasis_pvm_fixes_state() {
        let rho = random_density(3, 3, 4);
        let spec = hermitian_eig(rho.matrix()).unwrap();
        let pvm = Pvm::from_basis(&spec.eigenvectors).unwrap();
        let out = apply_projective(&rho, &pvm).unwrap();
        assert!(out.average.matrix().distance(rho.matrix()) < 1e-12);
    }

    #[test]
    fn rank_one_on_own_state_is_certain() {
        let pvm = Pvm::computational(3);
        let out = apply_projective(&DensityMatrix::basis_state(3, 1), &pvm).unwrap();
        assert_eq!(out.probabilities(), vec![0.0, 1.0, 0.0]);
        assert!(out.branches[0].normalized().is_none());
        assert!(out.branches[1].normalized().is_some());
    }

    #[test]
    fn luders_half_half_and_projective_agree() {
        let m = validate_povm(vec![
            ComplexMatrix::identity(2).scale(0.5),
            ComplexMatrix::identity(2).scale(0.5),
        ])
        .unwrap();
        let rho = random_density(2, 2, 1);
        let out = apply_luders(&rho, &m).unwrap();
        for b in &out.branches {
            assert!(b.state.distance(&rho.matrix().scale(0.5)) < 1e-14);
        }
        let pvm = Pvm::computational(2);
        let a = apply_luders(&rho, &pvm.to_povm().unwrap()).unwrap();
        let b = apply_projective(&rho, &pvm).unwrap();
        assert!(a.max_branch_distance(&b) < 1e-14);
    }

    #[test]
    fn opsum_with_empty_family_is_projection() {
        let pvm = Pvm::computational(2);
        let k = KrausCorrectionFamily::new(pvm.to_povm().unwrap(), vec![vec![], vec![]]).unwrap();
        let rho = random_density(2, 2, 3);
        let a = apply_intrinsic_opsum(&rho, &k).unwrap();
        let b = apply_projective(&rho, &pvm).unwrap();
        assert!(a.max_branch_distance(&b) < 1e-14);
    }

    #[test]
    fn trace_and_opsum_paths_agree() {
        for seed in 0..20 {
            let m = random_povm(3, 3, seed);
            let d = canonical_dilation_from_kraus(&gram_root_family(&m).unwrap()).unwrap();
            let rho = random_density(3, 2, seed + 50);
            let out = apply_intrinsic_checked(&rho, &d).unwrap();
            for (i, b) in out.branches.iter().enumerate() {
                let p = (rho.matrix() * m.effect(i)).trace().re;
                assert!((b.probability - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn general_with_identities_is_intrinsic() {
        let c = CouplingModel::random(2, 3, 5);
        let d = dilation_from_coupling(&c).unwrap();
        let rho = random_density(2, 2, 6);
        let ids = vec![ComplexMatrix::identity(6); 3];
        let a = apply_general(&rho, &d, &ids).unwrap();
        let b = apply_intrinsic_trace(&rho, &d).unwrap();
        assert!(a.max_branch_distance(&b) < 1e-14);
    }

    #[test]
    fn general_with_coupling_unitary_is_textbook() {
        // Q_{i|H} = U† P_i U, so U Q_i = P_i U and the post-unitary U turns
        // the intrinsic branches into textbook ones
        let c = CouplingModel::random(2, 2, 12);
        let d = dilation_from_coupling(&c).unwrap();
        let rho = random_density(2, 2, 13);
        let posts = vec![c.unitary().clone(); 2];
        let a = apply_general(&rho, &d, &posts).unwrap();
        let b = apply_textbook(&rho, &c).unwrap();
        assert!(a.max_branch_distance(&b) < 1e-12);
        let plain = apply_intrinsic_trace(&rho, &d).unwrap();
        for (x, y) in a.probabilities().iter().zip(plain.probabilities()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn luders_coupling_textbook_is_luders() {
        let m = random_povm(2, 3, 9);
        let c = CouplingModel::luders(&m).unwrap();
        let rho = random_density(2, 2, 10);
        let a = apply_textbook(&rho, &c).unwrap();
        let b = apply_luders(&rho, &m).unwrap();
        assert!(a.max_branch_distance(&b) < 1e-12);
    }

    #[test]
    fn non_unitary_post_map_rejected() {
        let c = CouplingModel::random(2, 2, 1);
        let d = dilation_from_coupling(&c).unwrap();
        let posts = vec![ComplexMatrix::identity(4).scale(2.0), ComplexMatrix::identity(4)];
        assert!(matches!(
            apply_general(&DensityMatrix::maximally_mixed(2), &d, &posts),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn intrinsic_branches_are_completely_positive() {
        for seed in 0..10 {
            let c = CouplingModel::random(2, 3, seed);
            let d = dilation_from_coupling(&c).unwrap();
            for i in 0..3 {
                let choi = choi_matrix(2, |x| intrinsic_branch_map(&d, i, x).unwrap());
                assert!(hermitian_eig(&choi).unwrap().min_eigenvalue() > -1e-8);
            }
        }
    }

    #[test]
    fn correction_weight_shrinks_toward_projective_limit() {
        let rho = random_density(2, 2, 2);
        let plus = plus();
        let minus = &ComplexMatrix::identity(2) - plus.matrix();
        let mut last = f64::INFINITY;
        for step in (1..=10).rev() {
            let t = 0.05 * step as f64;
            let m0 = &plus.matrix().scale(1.0 - t) + &minus.scale(t);
            let weight = (rho.matrix() * &(&m0 - &(&m0 * &m0))).trace().re;
            assert!(weight <= last + 1e-15);
            last = weight;
        }
        assert!(last < 0.05);
    }
}
