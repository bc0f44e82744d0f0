//! Numerical check of the commutation relations between `Θ(B)`, the
//! inversion `s` and inner automorphisms `I_{(v,t)}`:
//!
//! 1. `Θ(B) ∘ I_{(v,t)} ∘ Θ(B)⁻¹ = I_{(JBJᵀv, t)}`
//! 2. `s ∘ I_{(v,t)} ∘ s⁻¹ = I_{(v,t)}`
//! 3. `s ∘ Θ(B) ∘ s⁻¹ = Θ(B)`

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::theta::{theta_b, theta_b_inverse, ThetaVariant};
use super::{block_diagonal, j_matrix, MAP_TOL};
use crate::algebra::FrequencyList;
use crate::error::{Error, Result};
use crate::group::{conjugate, invert, FloatElement, GroupElement};

const SAMPLE_SEED: u64 = 0x05C1;
const SAMPLE_COUNT: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct RelationOutcome {
    pub holds: bool,
    /// Largest sup-norm gap between the two sides over the sample points.
    pub max_deviation: f64,
    /// The point where the gap is largest, when the relation fails.
    pub witness: Option<FloatElement>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationsReport {
    pub variant: ThetaVariant,
    pub relations: [RelationOutcome; 3],
}

impl RelationsReport {
    pub fn all_hold(&self) -> bool {
        self.relations.iter().all(|r| r.holds)
    }
}

/// Fixed pseudo-random points with coordinates in `[-2, 2]`.
pub fn relation_sample_points(n: usize) -> Vec<FloatElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    (0..SAMPLE_COUNT)
        .map(|_| {
            let v = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
            GroupElement::new(rng.random_range(-2.0..2.0), v, rng.random_range(-2.0..2.0))
        })
        .collect()
}

fn compare<L, R>(points: &[FloatElement], lhs: L, rhs: R) -> Result<RelationOutcome>
where
    L: Fn(&FloatElement) -> Result<FloatElement>,
    R: Fn(&FloatElement) -> Result<FloatElement>,
{
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for g in points {
        let gap = lhs(g)?.max_abs_diff(&rhs(g)?);
        if !(gap <= worst) {
            worst = gap;
            witness = Some(g.clone());
        }
    }
    let holds = worst <= MAP_TOL;
    Ok(RelationOutcome { holds, max_deviation: worst, witness: if holds { None } else { witness } })
}

pub fn structure_relations_check(
    blocks: &[DMatrix<f64>],
    v: &[f64],
    t: f64,
    freqs: &FrequencyList,
    variant: ThetaVariant,
) -> Result<RelationsReport> {
    let n = freqs.n();
    if v.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: v.len() });
    }
    let b = block_diagonal(blocks);
    if b.nrows() != 2 * n {
        return Err(Error::ShapeMismatch(format!("blocks span {} coordinates, expected {}", b.nrows(), 2 * n)));
    }
    let j = j_matrix(2 * n);
    let h = GroupElement::new(0.0, v.to_vec(), t);
    let moved = &j * &b * j.transpose() * DVector::from_column_slice(v);
    let h_moved = GroupElement::new(0.0, moved.iter().copied().collect(), t);
    let points = relation_sample_points(n);

    let theta = |g: &FloatElement| theta_b(blocks, g, freqs, variant);
    let theta_inv = |g: &FloatElement| theta_b_inverse(blocks, g, freqs, variant);
    let inner = |g: &FloatElement| conjugate(&h, g, freqs);
    let s = |g: &FloatElement| invert(g, freqs);

    let first = compare(&points, |g| theta(&inner(&theta_inv(g)?)?), |g| conjugate(&h_moved, g, freqs))?;
    let second = compare(&points, |g| s(&inner(&s(g)?)?), inner)?;
    let third = compare(&points, |g| s(&theta(&s(g)?)?), theta)?;
    Ok(RelationsReport { variant, relations: [first, second, third] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn rot(phi: f64) -> DMatrix<f64> {
        let (s, c) = (libm::sin(phi), libm::cos(phi));
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn identity_block() {
        let f = FrequencyList::unit();
        let id = vec![DMatrix::identity(2, 2)];
        let normalized = structure_relations_check(&id, &[1.0, 0.0], PI / 3.0, &f, ThetaVariant::Normalized).unwrap();
        assert!(normalized.all_hold(), "{normalized:?}");
        let printed = structure_relations_check(&id, &[1.0, 0.0], PI / 3.0, &f, ThetaVariant::Printed).unwrap();
        assert!(!printed.relations[0].holds);
        assert!(printed.relations[0].witness.is_some());
        assert!(printed.relations[1].holds && printed.relations[2].holds);
    }

    #[test]
    fn second_relation_with_zero_v() {
        let f = FrequencyList::unit();
        let report = structure_relations_check(&[rot(0.4)], &[0.0, 0.0], 1.3, &f, ThetaVariant::Printed).unwrap();
        assert!(report.relations[1].holds);
    }

    #[test]
    fn rotations_satisfy_all_relations_when_normalized() {
        let f = FrequencyList::unit();
        let report = structure_relations_check(&[rot(0.9)], &[1.0, -0.5], PI / 3.0, &f, ThetaVariant::Normalized).unwrap();
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn reflections_break_the_first_relation() {
        let f = FrequencyList::unit();
        let refl = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let report = structure_relations_check(&[refl], &[1.0, 0.0], PI / 3.0, &f, ThetaVariant::Normalized).unwrap();
        assert!(!report.relations[0].holds);
        assert!(report.relations[1].holds && report.relations[2].holds);
    }
}
