//! The group `Osc_n = R × R^{2n} × R` with product
//! `(z1,v1,t1)(z2,v2,t2) = (z1 + z2 + ½ v1ᵀ J R(t1) v2, v1 + R(t1) v2, t1 + t2)`.
//!
//! Elements come in two modes. [`Exact`] keeps `z` and `t` in `Q + Q·pi` and
//! `v` rational, which forces every block angle `λ_i t` of a rotation to be a
//! multiple of `pi/2`. [`Float`] is plain `f64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use crate::algebra::FrequencyList;
use crate::error::{Error, Result};
use crate::scalar::{int, rational_to_f64, ExactScalar, Rational};

/// Arithmetic backend for group elements.
pub trait Mode: Clone + Debug + PartialEq {
    /// Type of the `z` and `t` coordinates.
    type Num: Clone + Debug + PartialEq + Add<Output = Self::Num> + Sub<Output = Self::Num> + Neg<Output = Self::Num>;
    /// Type of the entries of `v` and of rotation matrices.
    type Coord: Clone
        + Debug
        + PartialEq
        + Zero
        + One
        + Add<Output = Self::Coord>
        + Sub<Output = Self::Coord>
        + Neg<Output = Self::Coord>
        + core::ops::Mul<Output = Self::Coord>;

    const EXACT: bool;

    fn num_zero() -> Self::Num;
    /// `c / 2` lifted to the `z` coordinate.
    fn half_coord(c: Self::Coord) -> Self::Num;
    /// The 2×2 block `[[cos, -sin], [sin, cos]]` of angle `λ t`.
    fn block(lambda: &Rational, t: &Self::Num) -> Result<[[Self::Coord; 2]; 2]>;
    fn num_to_f64(x: &Self::Num) -> f64;
    fn coord_to_f64(x: &Self::Coord) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exact;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Float;

/// Number of quarter turns in the angle `λ t`, if it is a multiple of `pi/2`.
pub fn quarter_turns(lambda: &Rational, t: &ExactScalar) -> Option<i128> {
    if !t.q1.is_zero() {
        return None;
    }
    let k = t.q2 * lambda * int(2);
    k.is_integer().then(|| k.to_integer().rem_euclid(4))
}

fn quarter_block(k: i128) -> [[Rational; 2]; 2] {
    let (o, z) = (Rational::one(), Rational::zero());
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, -o], [o, z]],
        2 => [[-o, z], [z, -o]],
        _ => [[z, o], [-o, z]],
    }
}

impl Mode for Exact {
    type Num = ExactScalar;
    type Coord = Rational;
    const EXACT: bool = true;

    fn num_zero() -> ExactScalar {
        ExactScalar::zero()
    }

    fn half_coord(c: Rational) -> ExactScalar {
        ExactScalar::rational(c / int(2))
    }

    fn block(lambda: &Rational, t: &ExactScalar) -> Result<[[Rational; 2]; 2]> {
        quarter_turns(lambda, t)
            .map(quarter_block)
            .ok_or_else(|| Error::ExactModeUnsupportedAngle(t.clone()))
    }

    fn num_to_f64(x: &ExactScalar) -> f64 {
        x.to_f64()
    }

    fn coord_to_f64(x: &Rational) -> f64 {
        rational_to_f64(x)
    }
}

impl Mode for Float {
    type Num = f64;
    type Coord = f64;
    const EXACT: bool = false;

    fn num_zero() -> f64 {
        0.0
    }

    fn half_coord(c: f64) -> f64 {
        0.5 * c
    }

    fn block(lambda: &Rational, t: &f64) -> Result<[[f64; 2]; 2]> {
        let th = rational_to_f64(lambda) * t;
        let (s, c) = (libm::sin(th), libm::cos(th));
        Ok([[c, -s], [s, c]])
    }

    fn num_to_f64(x: &f64) -> f64 {
        *x
    }

    fn coord_to_f64(x: &f64) -> f64 {
        *x
    }
}

/// A point `(z, v, t)` of `Osc_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<M: Mode> {
    pub z: M::Num,
    pub v: Vec<M::Coord>,
    pub t: M::Num,
}

pub type ExactElement = GroupElement<Exact>;
pub type FloatElement = GroupElement<Float>;

impl<M: Mode> GroupElement<M> {
    pub fn new(z: M::Num, v: Vec<M::Coord>, t: M::Num) -> Self {
        Self { z, v, t }
    }

    pub fn identity(n: usize) -> Self {
        Self { z: M::num_zero(), v: vec![M::Coord::zero(); 2 * n], t: M::num_zero() }
    }

    pub fn central(z: M::Num, n: usize) -> Self {
        Self { z, v: vec![M::Coord::zero(); 2 * n], t: M::num_zero() }
    }

    pub fn pure_t(t: M::Num, n: usize) -> Self {
        Self { z: M::num_zero(), v: vec![M::Coord::zero(); 2 * n], t }
    }

    pub fn n(&self) -> usize {
        self.v.len() / 2
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n())
    }

    pub fn to_float(&self) -> FloatElement {
        GroupElement {
            z: M::num_to_f64(&self.z),
            v: self.v.iter().map(M::coord_to_f64).collect(),
            t: M::num_to_f64(&self.t),
        }
    }

    /// Coordinates `(z, x_1, y_1, …, t)` as floats.
    pub fn to_coords(&self) -> Vec<f64> {
        let f = self.to_float();
        let mut out = Vec::with_capacity(self.v.len() + 2);
        out.push(f.z);
        out.extend(f.v);
        out.push(f.t);
        out
    }

    fn check(&self, freqs: &FrequencyList) -> Result<()> {
        if self.v.len() == 2 * freqs.n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: 2 * freqs.n(), found: self.v.len() })
        }
    }
}

impl FloatElement {
    pub fn from_coords(c: &[f64]) -> Result<Self> {
        if c.len() < 4 || c.len() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: 4, found: c.len() });
        }
        Ok(Self { z: c[0], v: c[1..c.len() - 1].to_vec(), t: c[c.len() - 1] })
    }

    /// Sup-norm distance between coordinate vectors.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_coords()
            .iter()
            .zip(other.to_coords())
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// `R(t)` as an explicit block-diagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationMatrix<M: Mode> {
    pub entries: Vec<Vec<M::Coord>>,
    pub angle_t: M::Num,
}

impl<M: Mode> RotationMatrix<M> {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, v: &[M::Coord]) -> Vec<M::Coord> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(v).fold(M::Coord::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect()
    }

    pub fn compose(&self, other: &Self) -> Self {
        let d = self.dim();
        let mut entries = vec![vec![M::Coord::zero(); d]; d];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..d {
                    *e = e.clone() + self.entries[i][k].clone() * other.entries[k][j].clone();
                }
            }
        }
        Self { entries, angle_t: self.angle_t.clone() + other.angle_t.clone() }
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let entries = (0..d).map(|i| (0..d).map(|j| self.entries[j][i].clone()).collect()).collect();
        Self { entries, angle_t: -self.angle_t.clone() }
    }

    /// Largest deviation of `RᵀR` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().compose(self);
        let mut worst: f64 = 0.0;
        for (i, row) in p.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(M::coord_to_f64(e) - target));
            }
        }
        worst
    }
}

/// `R(t) = exp(t N_λ)`.
pub fn rotation<M: Mode>(t: &M::Num, freqs: &FrequencyList) -> Result<RotationMatrix<M>> {
    let d = 2 * freqs.n();
    let mut entries = vec![vec![M::Coord::zero(); d]; d];
    for (i, l) in freqs.lambdas().iter().enumerate() {
        let b = M::block(l, t)?;
        for r in 0..2 {
            for c in 0..2 {
                entries[2 * i + r][2 * i + c] = b[r][c].clone();
            }
        }
    }
    Ok(RotationMatrix { entries, angle_t: t.clone() })
}

/// `R(t) v` without building the full matrix. Blocks where `v` vanishes are
/// left alone, so an exact `t` only needs a quarter-turn angle where `v` lives.
pub fn rotate<M: Mode>(t: &M::Num, v: &[M::Coord], freqs: &FrequencyList) -> Result<Vec<M::Coord>> {
    let mut out = Vec::with_capacity(v.len());
    for (i, l) in freqs.lambdas().iter().enumerate() {
        let (x, y) = (v[2 * i].clone(), v[2 * i + 1].clone());
        if x.is_zero() && y.is_zero() {
            out.push(x);
            out.push(y);
            continue;
        }
        let b = M::block(l, t)?;
        out.push(b[0][0].clone() * x.clone() + b[0][1].clone() * y.clone());
        out.push(b[1][0].clone() * x + b[1][1].clone() * y);
    }
    Ok(out)
}

/// `uᵀ J w = Σ (u_x w_y - u_y w_x)`.
pub fn symplectic<C>(u: &[C], w: &[C]) -> C
where
    C: Clone + Zero + Sub<Output = C> + core::ops::Mul<Output = C>,
{
    let mut acc = C::zero();
    for i in 0..u.len() / 2 {
        acc = acc + u[2 * i].clone() * w[2 * i + 1].clone() - u[2 * i + 1].clone() * w[2 * i].clone();
    }
    acc
}

pub fn multiply<M: Mode>(g1: &GroupElement<M>, g2: &GroupElement<M>, freqs: &FrequencyList) -> Result<GroupElement<M>> {
    g1.check(freqs)?;
    g2.check(freqs)?;
    let rv2 = rotate::<M>(&g1.t, &g2.v, freqs)?;
    let z = g1.z.clone() + g2.z.clone() + M::half_coord(symplectic(&g1.v, &rv2));
    let v = g1.v.iter().zip(rv2).map(|(a, b)| a.clone() + b).collect();
    Ok(GroupElement { z, v, t: g1.t.clone() + g2.t.clone() })
}

/// `(z, v, t)^{-1} = (-z, -R(-t) v, -t)`.
pub fn invert<M: Mode>(g: &GroupElement<M>, freqs: &FrequencyList) -> Result<GroupElement<M>> {
    g.check(freqs)?;
    let mt = -g.t.clone();
    let v = rotate::<M>(&mt, &g.v, freqs)?.into_iter().map(|x| -x).collect();
    Ok(GroupElement { z: -g.z.clone(), v, t: mt })
}

/// `I_h(g) = h g h^{-1}`.
pub fn conjugate<M: Mode>(h: &GroupElement<M>, g: &GroupElement<M>, freqs: &FrequencyList) -> Result<GroupElement<M>> {
    multiply(&multiply(h, g, freqs)?, &invert(h, freqs)?, freqs)
}

/// `g^k` for any integer `k`.
pub fn power<M: Mode>(g: &GroupElement<M>, k: i64, freqs: &FrequencyList) -> Result<GroupElement<M>> {
    let base = if k < 0 { invert(g, freqs)? } else { g.clone() };
    let mut acc = GroupElement::identity(freqs.n());
    for _ in 0..k.unsigned_abs() {
        acc = multiply(&acc, &base, freqs)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn es(s: &str) -> ExactScalar {
        s.parse().unwrap()
    }

    fn ex(z: &str, v: &[(i128, i128)], t: &str) -> ExactElement {
        GroupElement::new(es(z), v.iter().map(|&(p, q)| rat(p, q)).collect(), es(t))
    }

    #[test]
    fn product_example() {
        let f = FrequencyList::unit();
        let g = multiply(&ex("0", &[(1, 1), (0, 1)], "pi/2"), &ex("0", &[(1, 1), (0, 1)], "0"), &f).unwrap();
        assert_eq!(g, ex("1/2", &[(1, 1), (1, 1)], "pi/2"));
        let gf = multiply(
            &FloatElement::new(0.0, vec![1.0, 0.0], core::f64::consts::FRAC_PI_2),
            &FloatElement::new(0.0, vec![1.0, 0.0], 0.0),
            &f,
        )
        .unwrap();
        assert!(gf.max_abs_diff(&g.to_float()) < 1e-12);
    }

    #[test]
    fn inverse_example() {
        let f = FrequencyList::unit();
        let g = ex("0", &[(1, 1), (0, 1)], "pi/2");
        let gi = invert(&g, &f).unwrap();
        assert_eq!(gi, ex("0", &[(0, 1), (1, 1)], "-pi/2"));
        assert!(multiply(&g, &gi, &f).unwrap().is_identity());
        assert!(multiply(&gi, &g, &f).unwrap().is_identity());
        let c = ex("3/2 + pi", &[(0, 1), (0, 1)], "7pi/3");
        assert_eq!(invert(&c, &f).unwrap(), ex("-3/2 - pi", &[(0, 1), (0, 1)], "-7pi/3"));
    }

    #[test]
    fn conjugate_example() {
        let f = FrequencyList::unit();
        let h = ex("0", &[(1, 1), (0, 1)], "0");
        let g = ex("0", &[(0, 1), (0, 1)], "pi");
        assert_eq!(conjugate(&h, &g, &f).unwrap(), ex("0", &[(2, 1), (0, 1)], "pi"));
        let central = ex("5/7 + 2pi", &[(0, 1), (0, 1)], "0");
        let g2 = ex("1/3", &[(1, 2), (-3, 1)], "pi/2");
        assert_eq!(conjugate(&central, &g2, &f).unwrap(), g2);
    }

    #[test]
    fn rotation_examples() {
        let f = FrequencyList::unit();
        let r = rotation::<Exact>(&es("pi"), &f).unwrap();
        assert_eq!(r.entries, vec![vec![int(-1), int(0)], vec![int(0), int(-1)]]);
        let f2 = FrequencyList::new(vec![int(1), rat(1, 2)]).unwrap();
        let r2 = rotation::<Exact>(&es("2pi"), &f2).unwrap();
        let diag: Vec<Rational> = (0..4).map(|i| r2.entries[i][i]).collect();
        assert_eq!(diag, vec![int(1), int(1), int(-1), int(-1)]);
        let id = rotation::<Exact>(&ExactScalar::zero(), &f2).unwrap();
        assert_eq!(id.orthogonality_defect(), 0.0);
        assert_eq!(id.apply(&[int(1), int(2), int(3), int(4)]), vec![int(1), int(2), int(3), int(4)]);
    }

    #[test]
    fn exact_mode_rejects_other_angles() {
        let f = FrequencyList::unit();
        let g = ex("0", &[(1, 1), (0, 1)], "pi/3");
        assert!(matches!(multiply(&g, &g, &f), Err(Error::ExactModeUnsupportedAngle(_))));
        let g = ex("0", &[(1, 1), (0, 1)], "1");
        assert!(invert(&g, &f).is_err());
        let h = ex("0", &[(0, 1), (0, 1)], "pi/2");
        assert_eq!(multiply(&g, &h, &f).unwrap(), ex("0", &[(1, 1), (0, 1)], "1 + pi/2"));
        assert!(multiply(&g, &ex("0", &[(0, 1), (1, 1)], "0"), &f).is_err());
    }

    #[test]
    fn small_commutator_reproduces_the_bracket() {
        let f = FrequencyList::unit();
        let eps = 1e-4;
        let x = FloatElement::new(0.0, vec![eps, 0.0], 0.0);
        let y = FloatElement::new(0.0, vec![0.0, eps], 0.0);
        let c = multiply(&multiply(&x, &y, &f).unwrap(), &multiply(&invert(&x, &f).unwrap(), &invert(&y, &f).unwrap(), &f).unwrap(), &f).unwrap();
        assert!((c.z / (eps * eps) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_matches_repeated_product() {
        let f = FrequencyList::unit();
        let g = ex("1/4", &[(1, 1), (2, 1)], "pi/2");
        let g4 = power(&g, 4, &f).unwrap();
        assert_eq!(g4.t, es("2pi"));
        assert_eq!(g4.v, vec![int(0), int(0)]);
        assert!(multiply(&power(&g, -3, &f).unwrap(), &power(&g, 3, &f).unwrap(), &f).unwrap().is_identity());
    }
}
