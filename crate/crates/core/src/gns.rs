//! Finite-dimensional GNS construction.
//!
//! Given a positive-definite function `p` on a finite group `G`, the group
//! algebra `ℝ[G]` carries the semi-inner product `(g, h) = p(h⁻¹g)`. Its Gram
//! matrix on the basis `{g_i}` is `P[i][j] = p(g_i⁻¹ g_j)`. Factoring
//! `P = Q Λ Qᵀ` and dropping eigenvalues at or below `rank_tol · λ_max` is the
//! quotient by the null space; the rows of `Q_r Λ_r^{1/2}` are the images
//! `φ_i` of the basis vectors, with `⟨φ_i, φ_j⟩ = P[i][j]`. Left translation
//! `φ_i ↦ φ_{g·i}` is then a linear isometry of `ℝ^r`. Since `ℝ^r` is already
//! complete, no completion step is needed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::isometry::{Isometry, IsometryGroup};
use crate::kernel::{gram_on_group, GroupKernel, KernelError, DEFAULT_PSD_TOL};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Residual above which left translation is declared inconsistent with the quotient.
const TRANSLATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnsError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("gram matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("p(e) = {0}, expected 1")]
    NotNormalized(f64),
    #[error("gram matrix is not invariant under left translation by element {element} at ({i}, {j})")]
    TranslationInconsistent { element: usize, i: usize, j: usize },
    #[error("left translation by element {element} does not preserve the quotient (residual {residual:e})")]
    RankDeficientTranslation { element: usize, residual: f64 },
    #[error("element {0} is not in the represented group")]
    UnknownElement(Isometry),
    #[error("representations are of different groups")]
    MismatchedGroups,
    #[error("empty list of representations")]
    EmptyList,
}

pub type Result<T> = std::result::Result<T, GnsError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnsOptions {
    pub rank_tol: f64,
    pub psd_tol: f64,
}

impl Default for GnsOptions {
    fn default() -> Self {
        Self { rank_tol: DEFAULT_RANK_TOL, psd_tol: DEFAULT_PSD_TOL }
    }
}

/// Measured deviations from the representation axioms, in max-entry norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepCertificates {
    pub unitarity_err: f64,
    pub homomorphism_err: f64,
    pub reconstruction_err: f64,
    /// `max |⟨φ_i, φ_j⟩ - P[i][j]|`, only for representations built directly by GNS.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_err: Option<f64>,
}

/// An orthogonal representation of an isometry group with a cyclic vector.
#[derive(Debug, Clone)]
pub struct UnitaryRep {
    group: Arc<IsometryGroup>,
    dim: usize,
    /// Indexed like `group.elements()`.
    matrices: Vec<DMatrix<f64>>,
    cyclic_vector: DVector<f64>,
    /// The function `g ↦ p(g)` this representation reproduces.
    target: Vec<f64>,
    reconstruction_tol: f64,
    certificates: RepCertificates,
}

impl UnitaryRep {
    pub fn group(&self) -> &Arc<IsometryGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cyclic_vector(&self) -> &DVector<f64> {
        &self.cyclic_vector
    }

    pub fn reconstruction_tol(&self) -> f64 {
        self.reconstruction_tol
    }

    pub fn certificates(&self) -> &RepCertificates {
        &self.certificates
    }

    /// `ρ(g_idx)`.
    pub fn matrix_at(&self, idx: usize) -> &DMatrix<f64> {
        &self.matrices[idx]
    }

    pub fn matrix(&self, g: &Isometry) -> Result<&DMatrix<f64>> {
        Ok(&self.matrices[self.require(g)?])
    }

    pub fn target_at(&self, idx: usize) -> f64 {
        self.target[idx]
    }

    fn require(&self, g: &Isometry) -> Result<usize> {
        self.group.index_of(g).ok_or_else(|| GnsError::UnknownElement(g.clone()))
    }

    /// `⟨ρ(g)v, v⟩`.
    pub fn reconstruct(&self, g: &Isometry) -> Result<f64> {
        Ok(self.reconstruct_at(self.require(g)?))
    }

    pub fn reconstruct_at(&self, idx: usize) -> f64 {
        (&self.matrices[idx] * &self.cyclic_vector).dot(&self.cyclic_vector)
    }

    /// Whether every certificate is within `reconstruction_tol`.
    pub fn verify(&self) -> bool {
        let c = &self.certificates;
        let tol = self.reconstruction_tol;
        c.unitarity_err <= tol
            && c.homomorphism_err <= tol
            && c.reconstruction_err <= tol
            && c.gram_err.is_none_or(|e| e <= tol)
    }

    fn measure(&self) -> RepCertificates {
        let n = self.group.order();
        let eye = DMatrix::<f64>::identity(self.dim, self.dim);
        let unitarity_err = self
            .matrices
            .iter()
            .map(|m| (m * m.transpose() - &eye).amax())
            .fold(0.0, f64::max);
        let table = self.group.cayley_table();
        let mut homomorphism_err: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let err = (&self.matrices[table[a][b]] - &self.matrices[a] * &self.matrices[b]).amax();
                homomorphism_err = homomorphism_err.max(err);
            }
        }
        let reconstruction_err = (0..n)
            .map(|k| (self.target[k] - self.reconstruct_at(k)).abs())
            .fold(0.0, f64::max);
        RepCertificates {
            unitarity_err,
            homomorphism_err,
            reconstruction_err,
            gram_err: None,
        }
    }

    pub fn to_json(&self) -> RepJson {
        RepJson {
            dim: self.dim,
            elements: self
                .group
                .elements()
                .iter()
                .zip(&self.matrices)
                .map(|(g, m)| ElementJson {
                    perm: g.clone(),
                    matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
                })
                .collect(),
            cyclic_vector: self.cyclic_vector.iter().copied().collect(),
            certificates: self.certificates,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepJson {
    pub dim: usize,
    pub elements: Vec<ElementJson>,
    pub cyclic_vector: Vec<f64>,
    pub certificates: RepCertificates,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementJson {
    pub perm: Isometry,
    pub matrix: Vec<Vec<f64>>,
}

/// Build the GNS representation of `p` on the whole group.
pub fn gns_build<K: GroupKernel + ?Sized>(
    group: &Arc<IsometryGroup>,
    p: &K,
    options: GnsOptions,
) -> Result<UnitaryRep> {
    let order = group.order();
    let mut gram = gram_on_group(p, group, group.elements())?;
    let table = group.cayley_table();

    // (g g_i)⁻¹ (g g_j) = g_i⁻¹ g_j, so P must be invariant under every translation.
    for (a, row) in table.iter().enumerate() {
        for i in 0..order {
            for j in 0..order {
                if gram.get(row[i], row[j]) != gram.get(i, j) {
                    return Err(GnsError::TranslationInconsistent { element: a, i, j });
                }
            }
        }
    }
    let p_e = gram.get(0, 0);
    if (p_e - 1.0).abs() > 1e-12 {
        return Err(GnsError::NotNormalized(p_e));
    }
    let psd = gram.check_psd(options.psd_tol)?;
    if !psd.is_psd {
        return Err(GnsError::NotPsd { min_eigenvalue: psd.min_eigenvalue });
    }

    let eig = SymmetricEigen::new(gram.entries().clone());
    let lambda_max = eig.eigenvalues.max();
    let mut kept: Vec<usize> = (0..order)
        .filter(|&k| eig.eigenvalues[k] > options.rank_tol * lambda_max)
        .collect();
    kept.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let dim = kept.len();
    let lambda: Vec<f64> = kept.iter().map(|&k| eig.eigenvalues[k]).collect();

    // Row i is φ_i.
    let phi = DMatrix::from_fn(order, dim, |i, c| lambda[c].sqrt() * eig.eigenvectors[(i, kept[c])]);
    let gram_err = (&phi * phi.transpose() - gram.entries()).amax();
    let phi_scale = phi.amax().max(1.0);
    let lambda_inv = DMatrix::from_diagonal(&DVector::from_iterator(dim, lambda.iter().map(|l| 1.0 / l)));

    let mut matrices = Vec::with_capacity(order);
    matrices.push(DMatrix::identity(dim, dim));
    for (a, row) in table.iter().enumerate().skip(1) {
        let translated = DMatrix::from_fn(order, dim, |i, c| phi[(row[i], c)]);
        // ΦᵀΦ = Λ_r, so R = Φ_gᵀ Φ Λ_r⁻¹ solves R Φᵀ = Φ_gᵀ on the span.
        let r = translated.transpose() * &phi * &lambda_inv;
        let residual = (&r * phi.transpose() - translated.transpose()).amax();
        if residual > TRANSLATION_TOL * phi_scale {
            return Err(GnsError::RankDeficientTranslation { element: a, residual });
        }
        matrices.push(r);
    }

    let cyclic_vector = phi.row(0).transpose();
    let target = (0..order).map(|k| gram.get(0, k)).collect();
    let mut rep = UnitaryRep {
        group: Arc::clone(group),
        dim,
        matrices,
        cyclic_vector,
        target,
        reconstruction_tol: reconstruction_tol(order, options.rank_tol),
        certificates: RepCertificates {
            unitarity_err: 0.0,
            homomorphism_err: 0.0,
            reconstruction_err: 0.0,
            gram_err: None,
        },
    };
    rep.certificates = RepCertificates { gram_err: Some(gram_err), ..rep.measure() };
    Ok(rep)
}

/// Discarded eigenvalues are at most `rank_tol · λ_max ≤ rank_tol · |G|`; the
/// remaining slack covers rounding in the products.
fn reconstruction_tol(order: usize, rank_tol: f64) -> f64 {
    order as f64 * (rank_tol + 1e3 * f64::EPSILON)
}

/// Block-diagonal sum with cyclic vector `(v_1, …, v_m) / √m`.
pub fn direct_sum(reps: &[UnitaryRep]) -> Result<UnitaryRep> {
    let first = reps.first().ok_or(GnsError::EmptyList)?;
    if reps[1..].iter().any(|r| !Arc::ptr_eq(&r.group, &first.group) && *r.group != *first.group) {
        return Err(GnsError::MismatchedGroups);
    }
    let order = first.group.order();
    let dim: usize = reps.iter().map(|r| r.dim).sum();
    let weight = 1.0 / (reps.len() as f64).sqrt();

    let mut matrices = vec![DMatrix::zeros(dim, dim); order];
    let mut cyclic_vector = DVector::zeros(dim);
    let mut offset = 0;
    for r in reps {
        for (k, m) in matrices.iter_mut().enumerate() {
            m.view_mut((offset, offset), (r.dim, r.dim)).copy_from(&r.matrices[k]);
        }
        cyclic_vector.rows_mut(offset, r.dim).copy_from(&(&r.cyclic_vector * weight));
        offset += r.dim;
    }
    let target = (0..order)
        .map(|k| reps.iter().map(|r| r.target[k]).sum::<f64>() / reps.len() as f64)
        .collect();
    let reconstruction_tol = reps.iter().map(|r| r.reconstruction_tol).fold(0.0, f64::max);
    let mut rep = UnitaryRep {
        group: Arc::clone(&first.group),
        dim,
        matrices,
        cyclic_vector,
        target,
        reconstruction_tol,
        certificates: first.certificates,
    };
    rep.certificates = rep.measure();
    Ok(rep)
}
