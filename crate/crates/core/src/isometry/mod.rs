//! Isometries of `Osc_n` fixing the identity and their behaviour on compact
//! quotients.
//!
//! The isotropy group is `F = K · Int` where `K` is generated by the maps
//! `Θ(B)` and the inversion `s`, and `Int` consists of inner automorphisms.
//! Differentials at `e` are `(2n+2)×(2n+2)` matrices in the basis
//! `Z, X_1, Y_1, …, T`.

mod maps;
mod normalizer;
mod relations;
mod theta;

pub use maps::{fiber_grid, is_fiber_preserving, FiberVerdict, Isometry};
pub use normalizer::{
    in_normalizer, in_normalizer_derived, normalizer_conditions, normalizer_grid, normalizer_oracle, verify_normalizer,
    GridAgreement, NormalizerTable, ProductSet, TableKind, VFactor,
};
pub use relations::{relation_sample_points, structure_relations_check, RelationOutcome, RelationsReport};
pub use theta::{
    p_matrix, theta_b, theta_b_exact, theta_b_inverse, theta_matrix, validate_theta, ThetaValidation, ThetaVariant,
};

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::{bracket, gram_matrix, AlgebraVector, FrequencyList};
use crate::error::{Error, Result};
use crate::scalar::rational_to_f64;

/// Tolerance for algebraic identities between matrices.
pub const MATRIX_TOL: f64 = 1e-10;
/// Tolerance for identities between composed group maps.
pub const MAP_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-12;

/// An element of the isotropy group in factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyElement {
    /// `+1` or `-1`.
    pub eps: i8,
    /// One orthogonal `2m_ν × 2m_ν` block per run of equal frequencies.
    pub blocks: Vec<DMatrix<f64>>,
    /// One vector `c_ν ∈ R^{2m_ν}` per run.
    pub c: Vec<DVector<f64>>,
    /// The inner automorphism factor `I_{(v,t)}`, if any.
    pub inner: Option<(Vec<f64>, f64)>,
    pub invert_flag: bool,
}

fn run_sizes(freqs: &FrequencyList) -> Vec<(usize, usize, f64)> {
    freqs
        .runs()
        .iter()
        .map(|r| (2 * r.start, 2 * r.multiplicity, rational_to_f64(&r.value)))
        .collect()
}

fn orthogonality_defect(b: &DMatrix<f64>) -> f64 {
    (b.transpose() * b - DMatrix::identity(b.nrows(), b.ncols())).amax()
}

/// A uniformly scattered orthogonal matrix (QR of a random matrix, random determinant sign).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let mut q = m.qr().q();
    if rng.random_bool(0.5) {
        q.column_mut(0).neg_mut();
    }
    q
}

impl IsotropyElement {
    pub fn identity(freqs: &FrequencyList) -> Self {
        let runs = run_sizes(freqs);
        Self {
            eps: 1,
            blocks: runs.iter().map(|&(_, m, _)| DMatrix::identity(m, m)).collect(),
            c: runs.iter().map(|&(_, m, _)| DVector::zeros(m)).collect(),
            inner: None,
            invert_flag: false,
        }
    }

    /// Random `ε`, orthogonal blocks and `c` with entries in `[-2, 2]`.
    pub fn random<R: Rng + ?Sized>(freqs: &FrequencyList, rng: &mut R) -> Self {
        let runs = run_sizes(freqs);
        Self {
            eps: if rng.random_bool(0.5) { 1 } else { -1 },
            blocks: runs.iter().map(|&(_, m, _)| random_orthogonal(m, rng)).collect(),
            c: runs.iter().map(|&(_, m, _)| DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0))).collect(),
            inner: None,
            invert_flag: false,
        }
    }

    pub fn validate(&self, freqs: &FrequencyList) -> Result<()> {
        if self.eps != 1 && self.eps != -1 {
            return Err(Error::ShapeMismatch(format!("eps must be ±1, got {}", self.eps)));
        }
        let runs = run_sizes(freqs);
        if self.blocks.len() != runs.len() || self.c.len() != runs.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks and c-vectors (one per run of equal frequencies), got {} and {}",
                runs.len(),
                self.blocks.len(),
                self.c.len()
            )));
        }
        for (nu, &(_, m, _)) in runs.iter().enumerate() {
            let b = &self.blocks[nu];
            if b.nrows() != m || b.ncols() != m || self.c[nu].len() != m {
                return Err(Error::ShapeMismatch(format!("run {nu} needs a {m}×{m} block and a length-{m} c")));
            }
            let defect = orthogonality_defect(b);
            if !(defect <= ORTHO_TOL) {
                return Err(Error::ShapeMismatch(format!("block {nu} is not orthogonal (defect {defect:e})")));
            }
        }
        if let Some((v, _)) = &self.inner {
            if v.len() != 2 * freqs.n() {
                return Err(Error::DimensionMismatch { expected: 2 * freqs.n(), found: v.len() });
            }
        }
        Ok(())
    }

    /// The block-diagonal `2n × 2n` matrix `diag(B_1, …, B_p)`.
    pub fn block_diagonal(&self) -> DMatrix<f64> {
        block_diagonal(&self.blocks)
    }

    /// `(c_1, …, c_p)` as one vector of length `2n`.
    pub fn c_flat(&self) -> DVector<f64> {
        let total = self.c.iter().map(|c| c.len()).sum();
        let mut out = DVector::zeros(total);
        let mut at = 0;
        for c in &self.c {
            out.rows_mut(at, c.len()).copy_from(c);
            at += c.len();
        }
        out
    }

    /// Product in `K ⋉ R^{2n}` matching composition of differentials:
    /// `(ε, B, c)(ε', B', c') = (εε', BB', c' + B'ᵀc)`.
    pub fn compose(&self, other: &Self) -> Self {
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(b, b2)| b * b2).collect();
        let c = self
            .c
            .iter()
            .zip(&other.c)
            .zip(&other.blocks)
            .map(|((c, c2), b2)| c2 + b2.transpose() * c)
            .collect();
        Self { eps: self.eps * other.eps, blocks, c, inner: None, invert_flag: false }
    }

    /// Largest entry-wise gap between the `(ε, B, c)` parts of two elements.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.eps != other.eps || self.blocks.len() != other.blocks.len() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (b, b2) in self.blocks.iter().zip(&other.blocks) {
            worst = worst.max((b - b2).amax());
        }
        for (c, c2) in self.c.iter().zip(&other.c) {
            worst = worst.max((c - c2).amax());
        }
        worst
    }
}

pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let total = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, total);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

/// The differential at `e` of the `K ⋉ R^{2n}` part of an isotropy element.
pub fn isotropy_matrix(el: &IsotropyElement, freqs: &FrequencyList) -> Result<DMatrix<f64>> {
    el.validate(freqs)?;
    let dim = freqs.dim();
    let last = dim - 1;
    let mut a = DMatrix::zeros(dim, dim);
    a[(0, 0)] = 1.0;
    a[(last, last)] = 1.0;
    let mut corner = 0.0;
    for (nu, &(start, m, rho)) in run_sizes(freqs).iter().enumerate() {
        let (b, c) = (&el.blocks[nu], &el.c[nu]);
        for j in 0..m {
            a[(0, 1 + start + j)] = c[j];
        }
        a.view_mut((1 + start, 1 + start), (m, m)).copy_from(b);
        let col = -(b * c) * rho;
        a.view_mut((1 + start, last), (m, 1)).copy_from(&col);
        corner -= 0.5 * rho * c.dot(c);
    }
    a[(0, last)] = corner;
    Ok(a * f64::from(el.eps))
}

fn gram(freqs: &FrequencyList) -> DMatrix<f64> {
    let g = gram_matrix::<f64>(freqs);
    DMatrix::from_fn(g.len(), g.len(), |i, j| g[i][j])
}

fn column_vector(a: &DMatrix<f64>, j: usize) -> AlgebraVector<f64> {
    AlgebraVector::from_coords(a.column(j).iter().copied().collect()).expect("square matrix of even size ≥ 4")
}

fn apply(a: &DMatrix<f64>, x: &AlgebraVector<f64>) -> Vec<f64> {
    (a * DVector::from_column_slice(x.coords())).iter().copied().collect()
}

/// Conditions for the differential at `e` of an isometry fixing `e`:
/// `⟨AX, AY⟩ = ⟨X, Y⟩` and `A[X,[Y,W]] = [AX,[AY,AW]]` on all basis tuples.
pub fn check_local_isometry(a: &DMatrix<f64>, freqs: &FrequencyList) -> bool {
    let dim = freqs.dim();
    if a.nrows() != dim || a.ncols() != dim || a.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let g = gram(freqs);
    if (a.transpose() * &g * a - &g).amax() > MATRIX_TOL {
        return false;
    }
    let n = freqs.n();
    let basis: Vec<AlgebraVector<f64>> = (0..dim).map(|i| AlgebraVector::basis(n, i)).collect();
    let images: Vec<AlgebraVector<f64>> = (0..dim).map(|i| column_vector(a, i)).collect();
    let br = |x: &AlgebraVector<f64>, y: &AlgebraVector<f64>| bracket(x, y, freqs).expect("dimensions checked");
    for j in 0..dim {
        for k in 0..dim {
            let inner_src = br(&basis[j], &basis[k]);
            let inner_img = br(&images[j], &images[k]);
            for i in 0..dim {
                let lhs = apply(a, &br(&basis[i], &inner_src));
                let rhs = br(&images[i], &inner_img);
                if lhs.iter().zip(rhs.coords()).any(|(x, y)| (x - y).abs() > MATRIX_TOL) {
                    return false;
                }
            }
        }
    }
    true
}

/// Recovers `(ε, B_ν, c_ν)` from a differential of the isotropy form.
pub fn psi_decompose(a: &DMatrix<f64>, freqs: &FrequencyList) -> Result<IsotropyElement> {
    let dim = freqs.dim();
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::ShapeMismatch(format!("expected a {dim}×{dim} matrix, got {}×{}", a.nrows(), a.ncols())));
    }
    let eps: i8 = if (a[(0, 0)] - 1.0).abs() <= MATRIX_TOL {
        1
    } else if (a[(0, 0)] + 1.0).abs() <= MATRIX_TOL {
        -1
    } else {
        return Err(Error::ShapeMismatch(format!("entry (0,0) = {} is not ±1", a[(0, 0)])));
    };
    let m = a * f64::from(eps);
    let mut blocks = Vec::new();
    let mut cs = Vec::new();
    for &(start, size, _) in &run_sizes(freqs) {
        blocks.push(m.view((1 + start, 1 + start), (size, size)).into_owned());
        cs.push(DVector::from_fn(size, |j, _| m[(0, 1 + start + j)]));
    }
    let el = IsotropyElement { eps, blocks, c: cs, inner: None, invert_flag: false };
    for (nu, b) in el.blocks.iter().enumerate() {
        let defect = orthogonality_defect(b);
        if defect > MATRIX_TOL {
            return Err(Error::ShapeMismatch(format!("block {nu} is not orthogonal (defect {defect:e})")));
        }
    }
    let rebuilt = isotropy_matrix(&el, freqs).map_err(|e| Error::ShapeMismatch(format!("{e}")))?;
    let gap = (&rebuilt - a).amax();
    if !(gap <= MATRIX_TOL) {
        return Err(Error::ShapeMismatch(format!("matrix deviates from the isotropy form by {gap:e}")));
    }
    Ok(el)
}

/// `blockdiag(J_1, …)` with `J_1 = [[0, 1], [-1, 0]]`, so `uᵀJw = Σ (u_x w_y - u_y w_x)`.
pub fn j_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| match (i % 2, j) {
        (0, j) if j == i + 1 => 1.0,
        (1, j) if j + 1 == i => -1.0,
        _ => 0.0,
    })
}

/// `diag(1, -1, …, 1, -1)`.
pub fn m_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i != j { 0.0 } else if i % 2 == 0 { 1.0 } else { -1.0 })
}

fn orthogonal_symplectic(b: &DMatrix<f64>) -> bool {
    let j = j_matrix(b.nrows());
    orthogonality_defect(b) <= MATRIX_TOL && (b.transpose() * &j * b - &j).amax() <= MATRIX_TOL
}

/// Whether the isometry belongs to `F ∩ Aut`: every block orthogonal and
/// symplectic, where elements of the inversion coset `s∘Θ(M)∘K̃_1` are tested
/// through `M·B_ν`.
pub fn aut_intersection_check(el: &IsotropyElement) -> bool {
    let in_s_coset = (el.eps == -1) ^ el.invert_flag;
    el.blocks.iter().all(|b| {
        if in_s_coset {
            orthogonal_symplectic(&(m_matrix(b.nrows()) * b))
        } else {
            orthogonal_symplectic(b)
        }
    })
}

/// Number of connected components of the isotropy group, `2^{p+1}` with `p`
/// the number of runs of equal frequencies.
pub fn component_count(freqs: &FrequencyList) -> u64 {
    1u64 << (freqs.runs().len() + 1)
}
