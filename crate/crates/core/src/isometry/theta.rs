//! The maps `Θ(B)(z, v, t) = (z, P(t)ᵀ B P(t) v, t)`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::float::FloatCore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{block_diagonal, run_sizes};
use crate::algebra::FrequencyList;
use crate::error::{Error, Result};
use crate::geodesic::metric_at;
use crate::group::{quarter_turns, ExactElement, FloatElement, GroupElement};
use crate::scalar::{int, rat, Rational};

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaVariant {
    /// `P_λ(t) = [[sin λt, 1 - cos λt], [cos λt - 1, sin λt]]` off `(2π/λ)Z`, `Id` on it.
    Printed,
    /// The printed block divided by `√(2 - 2cos λt)`, which makes it a rotation.
    Normalized,
}

fn on_full_turn(theta: f64) -> bool {
    let turns = theta / (2.0 * core::f64::consts::PI);
    (turns - libm::round(turns)).abs() <= 1e-12
}

fn p_block(lambda: f64, t: f64, variant: ThetaVariant) -> [[f64; 2]; 2] {
    let th = lambda * t;
    if on_full_turn(th) {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let (s, c) = (libm::sin(th), libm::cos(th));
    let scale = match variant {
        ThetaVariant::Printed => 1.0,
        ThetaVariant::Normalized => 1.0 / libm::sqrt(2.0 - 2.0 * c),
    };
    [[s * scale, (1.0 - c) * scale], [(c - 1.0) * scale, s * scale]]
}

/// `P(t) = diag(P_{λ_1}(t), …, P_{λ_n}(t))`.
pub fn p_matrix(t: f64, freqs: &FrequencyList, variant: ThetaVariant) -> DMatrix<f64> {
    let d = 2 * freqs.n();
    let mut p = DMatrix::zeros(d, d);
    for (i, l) in freqs.lambdas_f64().iter().enumerate() {
        let b = p_block(*l, t, variant);
        for r in 0..2 {
            for c in 0..2 {
                p[(2 * i + r, 2 * i + c)] = b[r][c];
            }
        }
    }
    p
}

fn check_blocks(blocks: &[DMatrix<f64>], freqs: &FrequencyList) -> Result<()> {
    let runs = run_sizes(freqs);
    if blocks.len() != runs.len() {
        return Err(Error::ShapeMismatch(format!("expected {} blocks, got {}", runs.len(), blocks.len())));
    }
    for (nu, (b, &(_, m, _))) in blocks.iter().zip(&runs).enumerate() {
        if b.nrows() != m || b.ncols() != m {
            return Err(Error::ShapeMismatch(format!("block {nu} must be {m}×{m}, got {}×{}", b.nrows(), b.ncols())));
        }
    }
    Ok(())
}

/// `P(t)ᵀ B P(t)`.
pub fn theta_matrix(blocks: &[DMatrix<f64>], t: f64, freqs: &FrequencyList, variant: ThetaVariant) -> Result<DMatrix<f64>> {
    check_blocks(blocks, freqs)?;
    let p = p_matrix(t, freqs, variant);
    Ok(p.transpose() * block_diagonal(blocks) * p)
}

pub fn theta_b(blocks: &[DMatrix<f64>], g: &FloatElement, freqs: &FrequencyList, variant: ThetaVariant) -> Result<FloatElement> {
    let m = theta_matrix(blocks, g.t, freqs, variant)?;
    let v = m * DVector::from_column_slice(&g.v);
    Ok(GroupElement::new(g.z, v.iter().copied().collect(), g.t))
}

pub fn theta_b_inverse(
    blocks: &[DMatrix<f64>],
    g: &FloatElement,
    freqs: &FrequencyList,
    variant: ThetaVariant,
) -> Result<FloatElement> {
    let m = theta_matrix(blocks, g.t, freqs, variant)?;
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::NotRepresentable(format!("P(t)ᵀBP(t) is singular at t = {}", g.t)))?;
    let v = inv * DVector::from_column_slice(&g.v);
    Ok(GroupElement::new(g.z, v.iter().copied().collect(), g.t))
}

/// The exact value of a float that is a dyadic rational of moderate size.
pub(crate) fn f64_to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mantissa, exp, sign) = FloatCore::integer_decode(x);
    let m = mantissa as i128 * sign as i128;
    match exp {
        0..=70 => Some(int(m << exp)),
        -126..=-1 => Some(Rational::new(m, 1i128 << (-exp))),
        _ if mantissa == 0 => Some(int(0)),
        _ => None,
    }
}

fn exact_p_block(lambda: &Rational, t: &crate::scalar::ExactScalar, variant: ThetaVariant) -> Result<[[Rational; 2]; 2]> {
    let k = quarter_turns(lambda, t).ok_or_else(|| Error::ExactModeUnsupportedAngle(t.clone()))?;
    let (s, c) = match k {
        0 => return Ok([[int(1), int(0)], [int(0), int(1)]]),
        1 => (int(1), int(0)),
        2 => (int(0), int(-1)),
        _ => (int(-1), int(0)),
    };
    let scale = match (variant, k) {
        (ThetaVariant::Printed, _) => int(1),
        (ThetaVariant::Normalized, 2) => rat(1, 2),
        (ThetaVariant::Normalized, _) => return Err(Error::ExactModeUnsupportedAngle(t.clone())),
    };
    Ok([[s * scale, (int(1) - c) * scale], [(c - int(1)) * scale, s * scale]])
}

/// Exact `Θ(B)` for dyadic blocks `B` and angles where `P(t)` is rational.
pub fn theta_b_exact(
    blocks: &[DMatrix<f64>],
    g: &ExactElement,
    freqs: &FrequencyList,
    variant: ThetaVariant,
) -> Result<ExactElement> {
    check_blocks(blocks, freqs)?;
    let n = freqs.n();
    if g.v.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: g.v.len() });
    }
    let b = block_diagonal(blocks);
    let b: Vec<Vec<Rational>> = (0..2 * n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    f64_to_rational(b[(i, j)])
                        .ok_or_else(|| Error::NotRepresentable(format!("block entry {} is not an exact dyadic", b[(i, j)])))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    // P v, block by block
    let mut pv = Vec::with_capacity(2 * n);
    let mut ps = Vec::with_capacity(n);
    for i in 0..n {
        let p = exact_p_block(freqs.lambda(i), &g.t, variant)?;
        let (x, y) = (g.v[2 * i], g.v[2 * i + 1]);
        pv.push(p[0][0] * x + p[0][1] * y);
        pv.push(p[1][0] * x + p[1][1] * y);
        ps.push(p);
    }
    let bpv: Vec<Rational> = (0..2 * n).map(|i| (0..2 * n).map(|j| b[i][j] * pv[j]).sum()).collect();
    let mut out = Vec::with_capacity(2 * n);
    for (i, p) in ps.iter().enumerate() {
        let (x, y) = (bpv[2 * i], bpv[2 * i + 1]);
        out.push(p[0][0] * x + p[1][0] * y);
        out.push(p[0][1] * x + p[1][1] * y);
    }
    Ok(GroupElement::new(g.z.clone(), out, g.t.clone()))
}

/// Outcome of the numerical checks on `Θ(B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaValidation {
    /// Sup-norm gap between the finite-difference `dΘ(B)_e` and `diag(1, B, 1)`.
    pub differential_defect: f64,
    pub differential_ok: bool,
    /// Largest violation of `⟨dΘ u, dΘ w⟩ = ⟨u, w⟩` over sampled points and basis pairs.
    pub isometry_defect: f64,
    pub isometry_ok: bool,
    /// The sampled point where the isometry defect is largest.
    pub witness: Option<FloatElement>,
}

fn jacobian(blocks: &[DMatrix<f64>], g: &FloatElement, freqs: &FrequencyList, variant: ThetaVariant) -> Result<DMatrix<f64>> {
    let coords = g.to_coords();
    let dim = coords.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut plus = coords.clone();
        let mut minus = coords.clone();
        plus[i] += FD_STEP;
        minus[i] -= FD_STEP;
        let fp = theta_b(blocks, &FloatElement::from_coords(&plus)?, freqs, variant)?.to_coords();
        let fm = theta_b(blocks, &FloatElement::from_coords(&minus)?, freqs, variant)?.to_coords();
        for r in 0..dim {
            jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    Ok(jac)
}

/// Finite-difference checks of `dΘ(B)_e = diag(1, B, 1)` and of the isometry
/// property at `samples` seeded random points.
pub fn validate_theta(
    blocks: &[DMatrix<f64>],
    variant: ThetaVariant,
    freqs: &FrequencyList,
    samples: usize,
    seed: u64,
) -> Result<ThetaValidation> {
    check_blocks(blocks, freqs)?;
    let n = freqs.n();
    let dim = freqs.dim();
    let mut expected = DMatrix::identity(dim, dim);
    expected.view_mut((1, 1), (2 * n, 2 * n)).copy_from(&block_diagonal(blocks));
    let at_e = jacobian(blocks, &GroupElement::identity(n), freqs, variant)?;
    let differential_defect = (at_e - expected).amax();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut isometry_defect: f64 = 0.0;
    let mut witness = None;
    for _ in 0..samples {
        let coords: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = FloatElement::from_coords(&coords)?;
        let jac = jacobian(blocks, &g, freqs, variant)?;
        let image = theta_b(blocks, &g, freqs, variant)?;
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let (ei, ej) = (unit(dim, i), unit(dim, j));
                let before = metric_at(&g, &ei, &ej, freqs)?;
                let ui: Vec<f64> = jac.column(i).iter().copied().collect();
                let uj: Vec<f64> = jac.column(j).iter().copied().collect();
                let after = metric_at(&image, &ui, &uj, freqs)?;
                worst = worst.max((after - before).abs());
            }
        }
        if worst > isometry_defect || witness.is_none() {
            isometry_defect = isometry_defect.max(worst);
            witness = Some(g);
        }
    }
    Ok(ThetaValidation {
        differential_defect,
        differential_ok: differential_defect <= FD_TOL,
        isometry_defect,
        isometry_ok: isometry_defect <= FD_TOL,
        witness,
    })
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut e = alloc::vec![0.0; dim];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational_to_f64, ExactScalar};
    use core::f64::consts::PI;

    fn refl() -> Vec<DMatrix<f64>> {
        alloc::vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])]
    }

    #[test]
    fn full_turns_use_the_identity_branch() {
        let f = FrequencyList::unit();
        let g = GroupElement::new(0.5, alloc::vec![1.0, 2.0], 0.0);
        let out = theta_b(&refl(), &g, &f, ThetaVariant::Printed).unwrap();
        assert_eq!(out.v, alloc::vec![1.0, -2.0]);
        let g = GroupElement::new(0.5, alloc::vec![1.0, 2.0], 2.0 * PI);
        assert!(theta_b(&refl(), &g, &f, ThetaVariant::Printed).unwrap().max_abs_diff(&GroupElement::new(
            0.5,
            alloc::vec![1.0, -2.0],
            2.0 * PI
        )) < 1e-12);
    }

    #[test]
    fn printed_block_at_quarter_turn() {
        let p = p_matrix(PI / 2.0, &FrequencyList::unit(), ThetaVariant::Printed);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        assert!((p - &expected).amax() < 1e-15);
        let m = theta_matrix(&refl(), PI / 2.0, &FrequencyList::unit(), ThetaVariant::Printed).unwrap();
        let by_hand = expected.transpose() * &refl()[0] * &expected;
        assert!((m - by_hand).amax() < 1e-15);
    }

    #[test]
    fn printed_block_is_not_a_rotation() {
        let p = p_matrix(PI / 2.0, &FrequencyList::unit(), ThetaVariant::Printed);
        assert!((p.determinant() - 2.0).abs() < 1e-12);
        let q = p_matrix(PI / 2.0, &FrequencyList::unit(), ThetaVariant::Normalized);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn identity_block_gives_identity_only_when_normalized() {
        let f = FrequencyList::unit();
        let id = alloc::vec![DMatrix::identity(2, 2)];
        let g = GroupElement::new(0.1, alloc::vec![0.3, -0.7], 1.1);
        assert!(theta_b(&id, &g, &f, ThetaVariant::Normalized).unwrap().max_abs_diff(&g) < 1e-12);
        assert!(theta_b(&id, &g, &f, ThetaVariant::Printed).unwrap().max_abs_diff(&g) > 1e-3);
    }

    #[test]
    fn validation_flags_the_printed_formula() {
        let f = FrequencyList::unit();
        let printed = validate_theta(&refl(), ThetaVariant::Printed, &f, 8, 1).unwrap();
        assert!(printed.differential_ok);
        assert!(!printed.isometry_ok);
        assert!(printed.witness.is_some());
        let normalized = validate_theta(&refl(), ThetaVariant::Normalized, &f, 8, 1).unwrap();
        assert!(normalized.differential_ok, "{normalized:?}");
        assert!(normalized.isometry_ok, "{normalized:?}");
    }

    #[test]
    fn normalized_rotation_blocks_are_isometries_in_higher_rank() {
        let f = FrequencyList::from_integers(&[1, 1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let blocks = alloc::vec![super::super::random_orthogonal(4, &mut rng), super::super::random_orthogonal(2, &mut rng)];
        let report = validate_theta(&blocks, ThetaVariant::Normalized, &f, 6, 2).unwrap();
        assert!(report.differential_ok && report.isometry_ok, "{report:?}");
    }

    #[test]
    fn exact_agrees_with_float() {
        let f = FrequencyList::unit();
        for (t, variant) in [("pi/2", ThetaVariant::Printed), ("pi", ThetaVariant::Printed), ("pi", ThetaVariant::Normalized), ("0", ThetaVariant::Normalized)] {
            let t: ExactScalar = t.parse().unwrap();
            let g = GroupElement::new(ExactScalar::integer(1), alloc::vec![rat(1, 3), rat(-1, 2)], t);
            let exact = theta_b_exact(&refl(), &g, &f, variant).unwrap();
            let float = theta_b(&refl(), &g.to_float(), &f, variant).unwrap();
            assert!(exact.to_float().max_abs_diff(&float) < 1e-12);
        }
        let g = GroupElement::new(ExactScalar::zero(), alloc::vec![int(1), int(0)], "pi/2".parse().unwrap());
        assert!(matches!(
            theta_b_exact(&refl(), &g, &f, ThetaVariant::Normalized),
            Err(Error::ExactModeUnsupportedAngle(_))
        ));
    }

    #[test]
    fn dyadic_conversion() {
        assert_eq!(f64_to_rational(-0.75), Some(rat(-3, 4)));
        assert_eq!(f64_to_rational(0.0), Some(int(0)));
        assert_eq!(f64_to_rational(5.0), Some(int(5)));
        assert_eq!(f64_to_rational(f64::NAN), None);
        assert_eq!(rational_to_f64(&f64_to_rational(0.1).unwrap()), 0.1);
    }
}
