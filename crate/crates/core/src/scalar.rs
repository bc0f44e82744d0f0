//! Scalars: rationals, the exact field extension `Q + Q·pi`, and the small
//! numeric trait shared by exact and floating-point code paths.
//!
//! `ExactScalar` relies on the linear independence of `{1, pi}` over `Q`:
//! two values are equal iff both coefficients agree, so every lattice
//! divisibility question reduces to rational arithmetic.

use alloc::format;
use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};
use core::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Rational numbers used throughout the exact code paths.
pub type Rational = Ratio<i128>;

pub fn rat(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn is_integer(q: &Rational) -> bool {
    q.is_integer()
}

/// `q ∈ step·Z` for a nonzero rational step.
pub fn in_multiples(q: &Rational, step: &Rational) -> bool {
    (q / step).is_integer()
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((whole, frac)) = s.split_once('.') {
        if s.contains('/') {
            return Err(Error::Parse(format!("malformed rational '{s}'")));
        }
        let neg = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let w: i128 = if whole_digits.is_empty() {
            0
        } else {
            whole_digits
                .parse()
                .map_err(|_| Error::Parse(format!("malformed rational '{s}'")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 30 {
            return Err(Error::Parse(format!("malformed rational '{s}'")));
        }
        let f: i128 = frac.parse().map_err(|_| Error::Parse(format!("malformed rational '{s}'")))?;
        let scale = 10i128.pow(frac.len() as u32);
        let mag = Rational::new(w * scale + f, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let q = Rational::from_str(s).map_err(|_| Error::Parse(format!("malformed rational '{s}'")))?;
    Ok(q)
}

// pi lies strictly between these two (15 correct digits)
const PI_LO: (i128, i128) = (3_141_592_653_589_793, 1_000_000_000_000_000);
const PI_HI: (i128, i128) = (3_141_592_653_589_794, 1_000_000_000_000_000);

/// A number `q1 + q2·pi` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactScalar {
    pub q1: Rational,
    pub q2: Rational,
}

impl ExactScalar {
    pub fn new(q1: Rational, q2: Rational) -> Self {
        Self { q1, q2 }
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    pub fn rational(q: Rational) -> Self {
        Self::new(q, Rational::zero())
    }

    pub fn integer(n: i128) -> Self {
        Self::rational(int(n))
    }

    /// `q·pi`
    pub fn pi_multiple(q: Rational) -> Self {
        Self::new(Rational::zero(), q)
    }

    pub fn pi() -> Self {
        Self::pi_multiple(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.q1.is_zero() && self.q2.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.q2.is_zero()
    }

    pub fn is_pi_multiple(&self) -> bool {
        self.q1.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.q1) + rational_to_f64(&self.q2) * core::f64::consts::PI
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self::new(self.q1 * q, self.q2 * q)
    }

    /// Product, defined when at least one factor is rational.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if other.is_rational() {
            Ok(self.scale(&other.q1))
        } else if self.is_rational() {
            Ok(other.scale(&self.q1))
        } else {
            Err(Error::ProductUndefined(self.clone(), other.clone()))
        }
    }

    /// The rational `r` with `self = r·other`, if one exists.
    pub fn ratio_to(&self, other: &Self) -> Option<Rational> {
        if other.is_zero() {
            return None;
        }
        let r = if !other.q1.is_zero() {
            self.q1 / other.q1
        } else {
            self.q2 / other.q2
        };
        (other.scale(&r) == *self).then_some(r)
    }

    /// Exact sign of `q1 + q2·pi`.
    pub fn signum(&self) -> Ordering {
        let s1 = self.q1.cmp(&Rational::zero());
        let s2 = self.q2.cmp(&Rational::zero());
        if s2 == Ordering::Equal {
            return s1;
        }
        if s1 == Ordering::Equal || s1 == s2 {
            return s2;
        }
        // opposite signs: compare |q1| with |q2|·pi using rational bounds on pi
        let ratio = self.q1.abs() / self.q2.abs();
        let lo = Rational::new(PI_LO.0, PI_LO.1);
        let hi = Rational::new(PI_HI.0, PI_HI.1);
        let bigger_is_q1 = match (checked_lt(&hi, &ratio), checked_lt(&ratio, &lo)) {
            (Some(true), _) => true,
            (_, Some(true)) => false,
            _ => {
                // ratio inside the bracket or overflow: fall back to floating point
                rational_to_f64(&ratio) > core::f64::consts::PI
            }
        };
        if bigger_is_q1 {
            s1
        } else {
            s2
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Compare two exact values by magnitude on the real line.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum()
    }
}

fn checked_lt(a: &Rational, b: &Rational) -> Option<bool> {
    let l = a.numer().checked_mul(*b.denom())?;
    let r = b.numer().checked_mul(*a.denom())?;
    Some(l < r)
}

impl Default for ExactScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<Rational> for ExactScalar {
    fn from(q: Rational) -> Self {
        Self::rational(q)
    }
}

impl Add for ExactScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.q1 + rhs.q1, self.q2 + rhs.q2)
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, rhs: Self) {
        self.q1 += rhs.q1;
        self.q2 += rhs.q2;
    }
}

impl Sub for ExactScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.q1 - rhs.q1, self.q2 - rhs.q2)
    }
}

impl Neg for ExactScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.q1, -self.q2)
    }
}

impl Mul<Rational> for ExactScalar {
    type Output = Self;
    fn mul(self, rhs: Rational) -> Self {
        self.scale(&rhs)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn pi_term(q: &Rational) -> String {
            if q.is_one() {
                "pi".to_string()
            } else {
                format!("{q} pi")
            }
        }
        match (self.q1.is_zero(), self.q2.is_zero()) {
            (_, true) => write!(f, "{}", self.q1),
            (true, false) => {
                if self.q2 == -Rational::one() {
                    write!(f, "-pi")
                } else {
                    write!(f, "{}", pi_term(&self.q2))
                }
            }
            (false, false) => {
                if self.q2.is_negative() {
                    write!(f, "{} - {}", self.q1, pi_term(&-self.q2))
                } else {
                    write!(f, "{} + {}", self.q1, pi_term(&self.q2))
                }
            }
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactScalar({self})")
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    /// Accepts sums of terms such as `1/2 + 3/4 pi`, `2pi`, `pi/2`, `-3pi/2`,
    /// `0.25` or `π`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .replace('π', "pi");
        if compact.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        let bytes = compact.as_bytes();
        let mut pos = 0;
        let mut acc = ExactScalar::zero();
        let err = || Error::Parse(format!("malformed exact scalar '{s}'"));
        while pos < bytes.len() {
            let mut sign = Rational::one();
            while pos < bytes.len() && (bytes[pos] == b'+' || bytes[pos] == b'-') {
                if bytes[pos] == b'-' {
                    sign = -sign;
                }
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            let mut coef = if pos > start {
                let mut lit = String::from(&compact[start..pos]);
                // a '/' right after the number belongs to it unless pi follows the denominator
                if pos < bytes.len() && bytes[pos] == b'/' {
                    let dstart = pos + 1;
                    let mut dend = dstart;
                    while dend < bytes.len() && bytes[dend].is_ascii_digit() {
                        dend += 1;
                    }
                    if dend == dstart {
                        return Err(err());
                    }
                    lit.push('/');
                    lit.push_str(&compact[dstart..dend]);
                    pos = dend;
                }
                Some(parse_rational(&lit)?)
            } else {
                None
            };
            if pos < bytes.len() && bytes[pos] == b'*' {
                pos += 1;
            }
            let has_pi = compact[pos..].starts_with("pi");
            if has_pi {
                pos += 2;
                if pos < bytes.len() && bytes[pos] == b'/' {
                    let dstart = pos + 1;
                    let mut dend = dstart;
                    while dend < bytes.len() && bytes[dend].is_ascii_digit() {
                        dend += 1;
                    }
                    if dend == dstart {
                        return Err(err());
                    }
                    let d: i128 = compact[dstart..dend].parse().map_err(|_| err())?;
                    if d == 0 {
                        return Err(err());
                    }
                    coef = Some(coef.unwrap_or_else(Rational::one) / int(d));
                    pos = dend;
                }
                acc.q2 += sign * coef.unwrap_or_else(Rational::one);
            } else {
                match coef {
                    Some(c) => acc.q1 += sign * c,
                    None => return Err(err()),
                }
            }
            if pos < bytes.len() && bytes[pos] != b'+' && bytes[pos] != b'-' {
                return Err(err());
            }
        }
        Ok(acc)
    }
}

/// Numeric operations shared by the exact (`Rational`) and float (`f64`) paths.
pub trait Scalar:
    Clone + PartialEq + PartialOrd + fmt::Debug + Num + Neg<Output = Self> + AddAssign
{
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Sign with an absolute tolerance; exact types ignore `tol`.
    fn sign_with_tol(&self, tol: f64) -> Ordering;
}

impl Scalar for f64 {
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sign_with_tol(&self, tol: f64) -> Ordering {
        if libm::fabs(*self) <= tol {
            Ordering::Equal
        } else if *self > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl Scalar for Rational {
    fn from_rational(q: &Rational) -> Self {
        *q
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn sign_with_tol(&self, _tol: f64) -> Ordering {
        self.cmp(&Rational::zero())
    }
}

/// Least common multiple of the denominators of a set of rationals.
pub fn lcm_denominators<'a>(qs: impl IntoIterator<Item = &'a Rational>) -> i128 {
    qs.into_iter().fold(1i128, |acc, q| acc.lcm(q.denom()))
}
