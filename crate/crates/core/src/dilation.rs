//! Naimark dilations and the correction families they induce.
//!
//! A dilation pairs an ancilla state with a projective measurement on
//! `system ⊗ ancilla`. Reading the projectors in an ancilla basis whose
//! first vector is the (pure) ancilla state gives blocks `Γ^i_{mn}`; the
//! column `Γ^i_{l0}` for `l ≥ 1` is the correction family of the dilation.
//! Conversely any family satisfying the correction condition is realized by
//! the projectors `Q_i = Σ_{l,l'} N_{l|i} M_i⁺ N†_{l'|i} ⊗ |l><l'|`.

use crate::error::{Error, Result};
use crate::matkernel::{
    ancilla_block, c, hermitian_eig, matrix_function, partial_trace_ancilla, pseudo_inverse_on_support,
    tensor_product, ComplexMatrix, ScalarFn, C64,
};
use crate::qobjects::{
    orthogonality_residual, random_unitary_from, seeded_rng, DensityMatrix, KrausCorrectionFamily, Povm, Pvm,
};

/// Orthogonality tolerance for projectors built or accepted by this module.
pub const DILATION_TOL: f64 = 1e-8;

/// Purity slack used to decide whether an ancilla state is pure.
pub const PURITY_TOL: f64 = 1e-9;

/// Ancilla state plus outcome projectors on the joint space. When the
/// outcome projectors do not resolve the identity, the complement is kept
/// as a separate non-outcome block.
#[derive(Clone, Debug, PartialEq)]
pub struct NaimarkDilation {
    dim_s: usize,
    ancilla: DensityMatrix,
    pvm: Pvm,
    labels: Vec<String>,
}

impl NaimarkDilation {
    pub fn new(dim_s: usize, ancilla: DensityMatrix, projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..projectors.len()).map(|i| i.to_string()).collect();
        Self::with_labels(dim_s, ancilla, projectors, labels)
    }

    pub fn with_labels(
        dim_s: usize,
        ancilla: DensityMatrix,
        projectors: Vec<ComplexMatrix>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let joint = dim_s * ancilla.dim();
        for q in &projectors {
            if q.rows() != joint || !q.is_square() {
                return Err(Error::DimensionMismatch {
                    context: "dilation projector",
                    expected: joint,
                    found: q.rows(),
                });
            }
        }
        let pvm = Pvm::with_tolerance(projectors, DILATION_TOL)?;
        let dilation = Self {
            dim_s,
            ancilla,
            pvm,
            labels,
        };
        dilation.reduce_to_povm()?;
        Ok(dilation)
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.ancilla.dim()
    }

    pub fn joint_dim(&self) -> usize {
        self.dim_s * self.dim_a()
    }

    pub fn ancilla(&self) -> &DensityMatrix {
        &self.ancilla
    }

    pub fn pvm(&self) -> &Pvm {
        &self.pvm
    }

    pub fn projector(&self, i: usize) -> &ComplexMatrix {
        self.pvm.projector(i)
    }

    pub fn outcome_count(&self) -> usize {
        self.pvm.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The non-outcome block `I − Σ Q_i`, if the outcome projectors are
    /// incomplete.
    pub fn completion(&self) -> Option<ComplexMatrix> {
        (!self.pvm.is_complete()).then(|| self.pvm.complement())
    }

    /// Outcome projectors followed by the completion block, if any.
    pub fn full_projectors(&self) -> Vec<ComplexMatrix> {
        self.pvm.completed_projectors()
    }

    pub fn is_pure_ancilla(&self) -> bool {
        self.ancilla.is_pure(PURITY_TOL)
    }

    /// `ρ ⊗ ρ_a`.
    pub fn joint_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_s {
            return Err(Error::DimensionMismatch {
                context: "joint_state",
                expected: self.dim_s,
                found: rho.dim(),
            });
        }
        Ok(rho.tensor(&self.ancilla))
    }

    /// `M_i = Tr_a((I ⊗ √ρ_a) Q_i (I ⊗ √ρ_a))`.
    pub fn reduce_to_povm(&self) -> Result<Povm> {
        reduce_with_ancilla(&self.pvm, self.dim_s, &self.ancilla, self.labels.clone())
    }
}

/// Reduces projectors against an arbitrary ancilla state.
pub fn reduce_with_ancilla(pvm: &Pvm, dim_s: usize, ancilla: &DensityMatrix, labels: Vec<String>) -> Result<Povm> {
    let effects = reduce_projectors(pvm.projectors(), dim_s, ancilla)?;
    Povm::with_labels(effects, labels)
}

/// Per-projector reductions `Tr_a((I ⊗ √ρ_a) Q (I ⊗ √ρ_a))`, without
/// checking that they form a POVM.
pub fn reduce_projectors(
    projectors: &[ComplexMatrix],
    dim_s: usize,
    ancilla: &DensityMatrix,
) -> Result<Vec<ComplexMatrix>> {
    let dim_a = ancilla.dim();
    let root = matrix_function(ancilla.matrix(), ScalarFn::Sqrt, false)?;
    let k = tensor_product(&ComplexMatrix::identity(dim_s), &root);
    projectors
        .iter()
        .map(|q| partial_trace_ancilla(&(&(&k * q) * &k), dim_s, dim_a).map(|m| m.hermitian_part()))
        .collect()
}

pub fn reduce_to_povm(d: &NaimarkDilation) -> Result<Povm> {
    d.reduce_to_povm()
}

/// Orthonormal basis (as unitary columns) whose first vector is `ket`,
/// completed by Gram–Schmidt over the standard basis. A computational basis
/// state yields the identity.
pub fn basis_with_first(ket: &[C64]) -> ComplexMatrix {
    let d = ket.len();
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = (0..d)
        .max_by(|&a, &b| ket[a].norm().total_cmp(&ket[b].norm()))
        .expect("nonempty ket");
    let phase = ket[pivot].conj() / ket[pivot].norm();
    let first: Vec<C64> = ket.iter().map(|z| z * phase / norm).collect();
    let mut basis = vec![first];
    for k in (0..d).filter(|&k| k != pivot) {
        let mut v = vec![C64::default(); d];
        v[k] = c(1.0, 0.0);
        for b in &basis {
            let overlap: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|z| z / n).collect());
    }
    ComplexMatrix::from_fn(d, d, |r, col| basis[col][r])
}

/// Blocks `Γ^i_{mn} = (I ⊗ <m|) Q_i (I ⊗ |n>)` in an ancilla basis whose
/// 0-th member is the ancilla state.
#[derive(Clone, Debug)]
pub struct GammaBlocks {
    dim_s: usize,
    dim_a: usize,
    /// Columns are the ancilla basis `|m>`.
    ancilla_basis: ComplexMatrix,
    blocks: Vec<Vec<Vec<ComplexMatrix>>>,
}

impl GammaBlocks {
    pub fn block(&self, i: usize, m: usize, n: usize) -> &ComplexMatrix {
        &self.blocks[i][m][n]
    }

    pub fn outcome_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn ancilla_basis(&self) -> &ComplexMatrix {
        &self.ancilla_basis
    }

    /// Largest `‖Γ^i_{nm}† − Γ^i_{mn}‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            for (m, row) in b.iter().enumerate() {
                for (n, block) in row.iter().enumerate() {
                    worst = worst.max(b[n][m].adjoint().distance(block));
                }
            }
        }
        worst
    }

    /// Largest `‖Σ_l Γ^i_{ml} Γ^j_{ln} − δ_ij Γ^i_{mn}‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let k = self.outcome_count();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for m in 0..self.dim_a {
                    for n in 0..self.dim_a {
                        let mut acc = ComplexMatrix::zeros(self.dim_s, self.dim_s);
                        for l in 0..self.dim_a {
                            acc = &acc + &(&self.blocks[i][m][l] * &self.blocks[j][l][n]);
                        }
                        let target = if i == j {
                            self.blocks[i][m][n].clone()
                        } else {
                            ComplexMatrix::zeros(self.dim_s, self.dim_s)
                        };
                        worst = worst.max(acc.distance(&target));
                    }
                }
            }
        }
        worst
    }
}

fn pure_ancilla_ket(d: &NaimarkDilation) -> Result<Vec<C64>> {
    if !d.is_pure_ancilla() {
        return Err(Error::MixedAncilla {
            purity: d.ancilla().purity(),
        });
    }
    Ok(hermitian_eig(d.ancilla().matrix())?.eigenvector(0))
}

/// Expands each outcome projector in an ancilla basis starting with the
/// ancilla state. Requires a pure ancilla; see [`purify_ancilla`].
pub fn extract_gamma_blocks(d: &NaimarkDilation) -> Result<GammaBlocks> {
    let ket = pure_ancilla_ket(d)?;
    let (dim_s, dim_a) = (d.dim_s(), d.dim_a());
    let w = basis_with_first(&ket);
    let lift = tensor_product(&ComplexMatrix::identity(dim_s), &w);
    let blocks = d
        .pvm()
        .projectors()
        .iter()
        .map(|q| {
            let rotated = &(&lift.adjoint() * q) * &lift;
            (0..dim_a)
                .map(|m| (0..dim_a).map(|n| ancilla_block(&rotated, dim_s, dim_a, m, n)).collect())
                .collect()
        })
        .collect();
    Ok(GammaBlocks {
        dim_s,
        dim_a,
        ancilla_basis: w,
        blocks,
    })
}

/// Correction family `N_{l|i} = Γ^i_{l0}` of a dilation with a pure ancilla.
pub fn extract_correction_family(d: &NaimarkDilation) -> Result<KrausCorrectionFamily> {
    let gamma = extract_gamma_blocks(d)?;
    let povm = d.reduce_to_povm()?;
    let corrections = (0..gamma.outcome_count())
        .map(|i| (1..gamma.dim_a()).map(|l| gamma.block(i, l, 0).clone()).collect())
        .collect();
    KrausCorrectionFamily::new(povm, corrections)
}

/// Projectors `Q_i = A_i M_i⁺ A_i†` with `A_i = Σ_l N_{l|i} ⊗ |l>` and
/// `N_{0|i} = M_i`, on an ancilla of dimension `slots + 1` prepared in `|0>`.
pub fn canonical_dilation_from_kraus(k: &KrausCorrectionFamily) -> Result<NaimarkDilation> {
    let residual = k.residual();
    if residual > crate::qobjects::CONDITION_TOL {
        return Err(Error::CorrectionCondition { residual });
    }
    let povm = k.povm();
    let d = povm.dim();
    let dim_a = k.slots() + 1;
    let projectors = (0..povm.len())
        .map(|i| {
            let m = povm.effect(i);
            let stacked = ComplexMatrix::from_fn(d * dim_a, d, |row, col| {
                let (s, l) = (row / dim_a, row % dim_a);
                if l == 0 {
                    m.get(s, col)
                } else {
                    k.correction(i, l).get(s, col)
                }
            });
            let minv = pseudo_inverse_on_support(m)?;
            Ok((&(&stacked * &minv) * &stacked.adjoint()).hermitian_part())
        })
        .collect::<Result<Vec<_>>>()?;
    let residual = orthogonality_residual(&projectors);
    if residual > DILATION_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    NaimarkDilation::with_labels(
        d,
        DensityMatrix::basis_state(dim_a, 0),
        projectors,
        povm.labels().to_vec(),
    )
}

/// Correction family read off the square root of the block operator
/// `G_{ij} = δ_ij M_i − M_i M_j` (positive semidefinite for any POVM):
/// `N_{l|i}` is block `(l−1, i)` of `√G`.
pub fn gram_root_family(povm: &Povm) -> Result<KrausCorrectionFamily> {
    let (n, d) = (povm.len(), povm.dim());
    let g = ComplexMatrix::from_fn(n * d, n * d, |r, col| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (col / d, col % d);
        let mut v: C64 = -(povm.effect(i) * povm.effect(j)).get(a, b);
        if i == j {
            v += povm.effect(i).get(a, b);
        }
        v
    });
    let root = matrix_function(&g, ScalarFn::Sqrt, true)?;
    let corrections = (0..n)
        .map(|i| (0..n).map(|l| root.block(l * d, i * d, d, d)).collect())
        .collect();
    KrausCorrectionFamily::new(povm.clone(), corrections)
}

/// Drops correction slots whose operators all have Frobenius norm at most
/// `tol`. A projective POVM trims down to no slots (trivial ancilla).
pub fn trim_slots(k: &KrausCorrectionFamily, tol: f64) -> Result<KrausCorrectionFamily> {
    let keep: Vec<usize> = (1..=k.slots())
        .filter(|&l| (0..k.povm().len()).any(|i| k.correction(i, l).frobenius_norm() > tol))
        .collect();
    let corrections = (0..k.povm().len())
        .map(|i| keep.iter().map(|&l| k.correction(i, l).clone()).collect())
        .collect();
    KrausCorrectionFamily::new(k.povm().clone(), corrections)
}

/// Family extracted from the Lüders coupling of a POVM.
pub fn luders_correction_family(povm: &Povm) -> Result<KrausCorrectionFamily> {
    let k = extract_correction_family(&dilation_from_coupling(&CouplingModel::luders(povm)?)?)?;
    KrausCorrectionFamily::new(povm.clone(), k.all_corrections().to_vec())
}

/// Unitary coupling of system and ancilla followed by a pointer
/// measurement. Pointer projectors act on the joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingModel {
    dim_s: usize,
    unitary: ComplexMatrix,
    ancilla_ket: Vec<C64>,
    pointer: Vec<ComplexMatrix>,
}

impl CouplingModel {
    pub fn new(dim_s: usize, unitary: ComplexMatrix, ancilla_ket: Vec<C64>, pointer: Vec<ComplexMatrix>) -> Result<Self> {
        let joint = dim_s * ancilla_ket.len();
        if !unitary.is_square() || unitary.rows() != joint {
            return Err(Error::DimensionMismatch {
                context: "coupling unitary",
                expected: joint,
                found: unitary.rows(),
            });
        }
        let residual = unitary.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::NotUnitary { residual });
        }
        let norm = ancilla_ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized {
                trace: norm * norm,
                residual: (norm - 1.0).abs(),
            });
        }
        Pvm::with_tolerance(pointer.clone(), DILATION_TOL)?;
        Ok(Self {
            dim_s,
            unitary,
            ancilla_ket,
            pointer,
        })
    }

    /// Ancilla prepared in `|0>` and read out in its computational basis.
    pub fn computational(dim_s: usize, dim_a: usize, unitary: ComplexMatrix) -> Result<Self> {
        let mut ket = vec![C64::default(); dim_a];
        ket[0] = c(1.0, 0.0);
        let pointer = (0..dim_a)
            .map(|i| tensor_product(&ComplexMatrix::identity(dim_s), &ComplexMatrix::basis_projector(dim_a, i)))
            .collect();
        Self::new(dim_s, unitary, ket, pointer)
    }

    /// Haar-random coupling with a computational pointer.
    pub fn random(dim_s: usize, dim_a: usize, seed: u64) -> Self {
        let u = random_unitary_from(&mut seeded_rng(seed), dim_s * dim_a);
        Self::computational(dim_s, dim_a, u).expect("Haar unitary is a valid coupling")
    }

    /// Coupling with `U(|ψ>|0>) = Σ_i √M_i|ψ>|i>`, completed to a unitary on
    /// the orthogonal complement.
    pub fn luders(povm: &Povm) -> Result<Self> {
        let (n, d) = (povm.len(), povm.dim());
        let roots = povm
            .effects()
            .iter()
            .map(|m| matrix_function(m, ScalarFn::Sqrt, false))
            .collect::<Result<Vec<_>>>()?;
        let joint = d * n;
        let isometry = ComplexMatrix::from_fn(joint, d, |row, s| {
            let (t, i) = (row / n, row % n);
            roots[i].get(t, s)
        });
        let complement = &ComplexMatrix::identity(joint) - &(&isometry * &isometry.adjoint());
        let spec = hermitian_eig(&complement)?;
        let mut extra = 0;
        let mut u = ComplexMatrix::zeros(joint, joint).into_inner();
        for col in 0..joint {
            let (s, l) = (col / n, col % n);
            if l == 0 {
                u.set_column(col, &isometry.inner().column(s));
            } else {
                u.set_column(col, &spec.eigenvectors.inner().column(extra));
                extra += 1;
            }
        }
        Self::computational(d, n, ComplexMatrix::from_nalgebra(u))
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.ancilla_ket.len()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn ancilla_ket(&self) -> &[C64] {
        &self.ancilla_ket
    }

    pub fn pointer(&self) -> &[ComplexMatrix] {
        &self.pointer
    }

    pub fn ancilla_state(&self) -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::ket_projector(&self.ancilla_ket)).expect("normalized ket")
    }

    /// Whether the pointer is `{I ⊗ |i><i|}` and the ancilla starts in `|0>`.
    pub fn is_computational(&self) -> bool {
        let dim_a = self.dim_a();
        let ket_ok = (self.ancilla_ket[0] - c(1.0, 0.0)).norm() < 1e-12
            && self.ancilla_ket[1..].iter().all(|z| z.norm() < 1e-12);
        ket_ok
            && self.pointer.len() == dim_a
            && self.pointer.iter().enumerate().all(|(i, p)| {
                p.distance(&tensor_product(
                    &ComplexMatrix::identity(self.dim_s),
                    &ComplexMatrix::basis_projector(dim_a, i),
                )) < 1e-12
            })
    }
}

/// Heisenberg-picture projectors `Q_{i|H} = U† P_i U` with the coupling's
/// ancilla state.
pub fn dilation_from_coupling(c: &CouplingModel) -> Result<NaimarkDilation> {
    let u = c.unitary();
    let projectors = c
        .pointer()
        .iter()
        .map(|p| (&(&u.adjoint() * p) * u).hermitian_part())
        .collect();
    NaimarkDilation::new(c.dim_s(), c.ancilla_state(), projectors)
}

/// Which index placement makes `M_i = E†_{·}E_{·}` hold for the blocks of
/// `U† = Σ_{ij} E†_{ij} ⊗ |i><j|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockConvention {
    /// `M_i = E†_{i0} E_{i0}`.
    RowOutcome,
    /// `M_i = E†_{0i} E_{0i}`.
    ColumnOutcome,
}

/// Blocks `E_{ij} = <j|U|i>` of a computational coupling, with the index
/// convention that reproduces the reduced effects.
#[derive(Clone, Debug)]
pub struct EBlocks {
    pub blocks: Vec<Vec<ComplexMatrix>>,
    pub convention: BlockConvention,
    /// Largest `‖M_i − E†E‖_F` under the chosen convention.
    pub residual: f64,
}

impl EBlocks {
    pub fn block(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[i][j]
    }

    /// `E†_{li} E_{0i}`, which equals `Γ^i_{l0}` in the pointer basis.
    pub fn correction(&self, i: usize, l: usize) -> ComplexMatrix {
        &self.blocks[l][i].adjoint() * &self.blocks[0][i]
    }
}

pub fn e_block_decomposition(c: &CouplingModel) -> Result<EBlocks> {
    if !c.is_computational() {
        return Err(Error::InvalidParameter(
            "E-block decomposition needs a computational pointer and ancilla |0>".into(),
        ));
    }
    let (dim_s, dim_a) = (c.dim_s(), c.dim_a());
    let u = c.unitary();
    let blocks: Vec<Vec<ComplexMatrix>> = (0..dim_a)
        .map(|i| (0..dim_a).map(|j| ancilla_block(u, dim_s, dim_a, j, i)).collect())
        .collect();
    let povm = dilation_from_coupling(c)?.reduce_to_povm()?;
    let residual_for = |conv: BlockConvention| {
        (0..dim_a)
            .map(|i| {
                let e = match conv {
                    BlockConvention::RowOutcome => &blocks[i][0],
                    BlockConvention::ColumnOutcome => &blocks[0][i],
                };
                (&e.adjoint() * e).distance(povm.effect(i))
            })
            .fold(0.0, f64::max)
    };
    let mut best = (f64::INFINITY, BlockConvention::RowOutcome);
    for conv in [BlockConvention::RowOutcome, BlockConvention::ColumnOutcome] {
        let r = residual_for(conv);
        if r <= 1e-8 {
            return Ok(EBlocks {
                blocks,
                convention: conv,
                residual: r,
            });
        }
        if r < best.0 {
            best = (r, conv);
        }
    }
    Err(Error::NoBlockConvention { residual: best.0 })
}

/// Replaces a mixed ancilla `Σ λ_k |e_k><e_k|` by `Σ √λ_k |e_k>|k>` on an
/// ancilla of dimension `dim_a²`, with projectors `Q_i ⊗ I`. Pure ancillas
/// are returned unchanged.
pub fn purify_ancilla(d: &NaimarkDilation) -> Result<NaimarkDilation> {
    if d.is_pure_ancilla() {
        return Ok(d.clone());
    }
    let dim_a = d.dim_a();
    let spec = hermitian_eig(d.ancilla().matrix())?;
    let mut ket = vec![C64::default(); dim_a * dim_a];
    for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
        let w = lambda.max(0.0).sqrt();
        for a in 0..dim_a {
            ket[a * dim_a + k] += spec.eigenvectors.get(a, k) * w;
        }
    }
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ket: Vec<C64> = ket.into_iter().map(|z| z / norm).collect();
    let id = ComplexMatrix::identity(dim_a);
    let projectors = d
        .pvm()
        .projectors()
        .iter()
        .map(|q| tensor_product(q, &id))
        .collect();
    NaimarkDilation::with_labels(d.dim_s(), DensityMatrix::pure(&ket)?, projectors, d.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qobjects::{random_density, random_povm, validate_povm};

    #[test]
    fn pointer_dilation_reduces_to_delta() {
        let c = CouplingModel::computational(2, 3, ComplexMatrix::identity(6)).unwrap();
        let d = dilation_from_coupling(&c).unwrap();
        for i in 0..3 {
            assert_eq!(
                d.projector(i),
                &tensor_product(&ComplexMatrix::identity(2), &ComplexMatrix::basis_projector(3, i))
            );
        }
        let m = d.reduce_to_povm().unwrap();
        assert!(m.effect(0).distance(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(m.effect(1).max_abs() < 1e-15);
        assert!(m.effect(2).max_abs() < 1e-15);
    }

    #[test]
    fn projective_dilation_has_diagonal_gamma_and_no_corrections() {
        let pvm = Pvm::computational(3);
        let projectors = pvm
            .projectors()
            .iter()
            .map(|p| tensor_product(p, &ComplexMatrix::identity(2)))
            .collect();
        let d = NaimarkDilation::new(3, DensityMatrix::basis_state(2, 0), projectors).unwrap();
        let gamma = extract_gamma_blocks(&d).unwrap();
        for i in 0..3 {
            for m in 0..2 {
                for n in 0..2 {
                    let expected = if m == n {
                        pvm.projector(i).clone()
                    } else {
                        ComplexMatrix::zeros(3, 3)
                    };
                    assert!(gamma.block(i, m, n).distance(&expected) < 1e-15);
                }
            }
        }
        let k = extract_correction_family(&d).unwrap();
        assert!(k.all_corrections().iter().flatten().all(|n| n.max_abs() < 1e-15));
    }

    #[test]
    fn mixed_ancilla_requires_purification() {
        let q = tensor_product(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        let d = NaimarkDilation::new(2, DensityMatrix::maximally_mixed(2), vec![q]).unwrap();
        assert!(matches!(extract_gamma_blocks(&d), Err(Error::MixedAncilla { .. })));
        let p = purify_ancilla(&d).unwrap();
        assert_eq!(p.dim_a(), 4);
        assert!(extract_gamma_blocks(&p).is_ok());
    }

    #[test]
    fn pure_ancilla_purification_is_identity() {
        let c = CouplingModel::random(2, 3, 8);
        let d = dilation_from_coupling(&c).unwrap();
        assert_eq!(purify_ancilla(&d).unwrap(), d);
    }

    #[test]
    fn gram_root_family_satisfies_condition() {
        for seed in 0..20 {
            let m = random_povm(3, 4, seed);
            let k = gram_root_family(&m).unwrap();
            assert!(k.residual() < 1e-10, "residual {}", k.residual());
        }
    }

    #[test]
    fn canonical_dilation_round_trip() {
        for seed in 0..20 {
            let m = random_povm(2 + (seed as usize % 2), 2 + (seed as usize % 4), seed);
            let k = gram_root_family(&m).unwrap();
            let d = canonical_dilation_from_kraus(&k).unwrap();
            assert!(orthogonality_residual(d.pvm().projectors()) < 1e-8);
            assert!(d.reduce_to_povm().unwrap().distance(&m) < 1e-8);
            let back = extract_correction_family(&d).unwrap();
            assert!(back.residual() < 1e-8);
            // canonical extraction uses the identity ancilla basis, so the
            // family comes back slot for slot
            for i in 0..m.len() {
                for l in 1..=k.slots() {
                    assert!(back.correction(i, l).distance(k.correction(i, l)) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn empty_family_gives_projective_dilation() {
        let m = Pvm::computational(2).to_povm().unwrap();
        let k = KrausCorrectionFamily::new(m.clone(), vec![vec![], vec![]]).unwrap();
        let d = canonical_dilation_from_kraus(&k).unwrap();
        assert_eq!(d.dim_a(), 1);
        assert!(d.pvm().is_complete());
        assert!(d.projector(1).distance(m.effect(1)) < 1e-15);
    }

    #[test]
    fn single_slot_luders_layout_fails_for_overlapping_effects() {
        // one slot per outcome with N = √(M − M²) leaves the cross terms at
        // zero, but the condition demands −M_i M_j there
        let m = validate_povm(vec![
            ComplexMatrix::identity(2).scale(0.5),
            ComplexMatrix::identity(2).scale(0.5),
        ])
        .unwrap();
        let root = ComplexMatrix::identity(2).scale(0.5);
        let zero = ComplexMatrix::zeros(2, 2);
        let layout = vec![vec![root.clone(), zero.clone()], vec![zero, root]];
        assert!(matches!(
            KrausCorrectionFamily::new(m, layout),
            Err(Error::CorrectionCondition { .. })
        ));
    }

    #[test]
    fn luders_coupling_reduces_and_yields_valid_family() {
        for seed in 0..10 {
            let m = random_povm(2, 3, seed);
            let c = CouplingModel::luders(&m).unwrap();
            assert!(c.unitary().unitarity_residual() < 1e-10);
            let d = dilation_from_coupling(&c).unwrap();
            assert!(d.reduce_to_povm().unwrap().distance(&m) < 1e-10);
            assert!(luders_correction_family(&m).unwrap().residual() < 1e-10);
        }
    }

    #[test]
    fn e_blocks_identity_and_random() {
        let c = CouplingModel::computational(2, 2, ComplexMatrix::identity(4)).unwrap();
        let e = e_block_decomposition(&c).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j {
                    ComplexMatrix::identity(2)
                } else {
                    ComplexMatrix::zeros(2, 2)
                };
                assert!(e.block(i, j).distance(&expected) < 1e-15);
            }
        }
        for seed in 0..10 {
            let c = CouplingModel::random(2, 3, seed);
            let e = e_block_decomposition(&c).unwrap();
            assert!(e.residual < 1e-8);
            let k = extract_correction_family(&dilation_from_coupling(&c).unwrap()).unwrap();
            for i in 0..3 {
                for l in 1..3 {
                    assert!(e.correction(i, l).distance(k.correction(i, l)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn weight_identity_for_corrections() {
        for seed in 0..10 {
            let m = random_povm(3, 3, seed);
            let k = gram_root_family(&m).unwrap();
            let rho = random_density(3, 3, seed + 100);
            for i in 0..3 {
                let weight: f64 = k
                    .corrections(i)
                    .iter()
                    .map(|n| (&(n * rho.matrix()) * &n.adjoint()).trace().re)
                    .sum();
                let mi = m.effect(i);
                let target = (rho.matrix() * &(mi - &(mi * mi))).trace().re;
                assert!((weight - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trimming_projective_family_gives_trivial_ancilla() {
        let m = Pvm::computational(3).to_povm().unwrap();
        let k = trim_slots(&gram_root_family(&m).unwrap(), 1e-12).unwrap();
        assert_eq!(k.slots(), 0);
        let d = canonical_dilation_from_kraus(&k).unwrap();
        assert_eq!(d.dim_a(), 1);
        assert!(d.reduce_to_povm().unwrap().distance(&m) < 1e-12);
        let idp = random_povm(2, 3, 4);
        assert_eq!(trim_slots(&gram_root_family(&idp).unwrap(), 1e-12).unwrap().slots(), 3);
    }
}
