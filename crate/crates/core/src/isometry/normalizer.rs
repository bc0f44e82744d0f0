//! Normalizers `N_G(Λ)` of the dim-4 and dim-6 lattice families.
//!
//! Three evaluators are available: the printed product-set tables, a
//! corrected table, and a direct evaluation of the defining conditions on
//! `(v, t)`. [`normalizer_oracle`] decides membership by brute force on the
//! generators and arbitrates between them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::group::{invert, multiply, quarter_turns, rotate, symplectic, Exact, ExactElement, GroupElement};
use crate::lattice::{Dim4Angle, LatticeFamily, LatticeSpec};
use crate::scalar::{int, is_integer, parse_rational, rat, ExactScalar, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    /// The tables exactly as printed in the source.
    Printed,
    /// Tables re-derived from the conjugation conditions.
    Derived,
}

/// A factor of the `v`-part of a normalizer, acting on consecutive coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum VFactor {
    /// `step · Z^dim`.
    Scaled { dim: usize, step: Rational },
    /// `Z² ∪ F²` with `F = ½ · odd`.
    I2,
    /// `Z⁴ ∪ F⁴`.
    I4,
}

fn in_f(x: &Rational) -> bool {
    let twice = x * int(2);
    twice.is_integer() && !x.is_integer()
}

impl VFactor {
    pub fn dim(&self) -> usize {
        match self {
            VFactor::Scaled { dim, .. } => *dim,
            VFactor::I2 => 2,
            VFactor::I4 => 4,
        }
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        match self {
            VFactor::Scaled { step, .. } => v.iter().all(|x| is_integer(&(x / step))),
            VFactor::I2 | VFactor::I4 => v.iter().all(is_integer) || v.iter().all(in_f),
        }
    }
}

impl fmt::Display for VFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VFactor::Scaled { dim, step } if step.is_one() => write!(f, "Z^{dim}"),
            VFactor::Scaled { dim, step } => write!(f, "({step})Z^{dim}"),
            VFactor::I2 => f.write_str("I2"),
            VFactor::I4 => f.write_str("I4"),
        }
    }
}

/// `N_G(Λ) = R × V_1 × … × t_step Z` for one lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizerTable {
    pub kind: TableKind,
    pub family: LatticeFamily,
    /// The row condition of the table, such as `p odd, k even`.
    pub condition: String,
    pub v_factors: Vec<VFactor>,
    pub t_step: ExactScalar,
}

fn scaled(dim: usize, step: Rational) -> VFactor {
    VFactor::Scaled { dim, step }
}

impl NormalizerTable {
    pub fn new(spec: &LatticeSpec, kind: TableKind) -> Result<Self> {
        let (condition, v_factors, t_step) = match &spec.family {
            LatticeFamily::Dim4 { k, angle } => {
                let k = *k as i128;
                let v = match (angle, kind) {
                    (Dim4Angle::TwoPi, _) => scaled(2, rat(1, 2 * k)),
                    (Dim4Angle::Pi, _) => scaled(2, rat(1, 2)),
                    (Dim4Angle::HalfPi, TableKind::Derived) if k % 2 == 0 => VFactor::I2,
                    (Dim4Angle::HalfPi, _) => scaled(2, int(1)),
                };
                let condition = match (angle, kind) {
                    (Dim4Angle::HalfPi, TableKind::Derived) => {
                        String::from(if k % 2 == 0 { "k even" } else { "k odd" })
                    }
                    _ => String::from("-"),
                };
                (condition, vec![v], ExactScalar::pi_multiple(rat(1, 2)))
            }
            LatticeFamily::Dim6 { k, p, q, m } => {
                let (k, p) = (*k as i128, *p);
                let half_k = rat(1, 2 * k);
                let parity = |x: u32| if x % 2 == 0 { "even" } else { "odd" };
                let (condition, v) = match m {
                    1 => (String::from("-"), vec![scaled(4, half_k)]),
                    2 if p % 2 == 0 => (String::from("p even"), vec![scaled(2, rat(1, 2)), scaled(2, half_k)]),
                    2 => (String::from("p odd"), vec![scaled(4, rat(1, 2))]),
                    _ => {
                        let a = if k % 2 == 0 { VFactor::I2 } else { scaled(2, int(1)) };
                        let kp = parity(k as u32);
                        match (p % 2, p % 4, kind) {
                            (0, 2, TableKind::Derived) => {
                                (format!("p = 2 mod 4, k {kp}"), vec![a, scaled(2, rat(1, 2))])
                            }
                            (0, _, TableKind::Derived) => (format!("p = 0 mod 4, k {kp}"), vec![a, scaled(2, half_k)]),
                            (0, _, TableKind::Printed) => (format!("p even, k {kp}"), vec![a, scaled(2, half_k)]),
                            _ if k % 2 == 0 => (format!("p odd, k {kp}"), vec![VFactor::I2, VFactor::I2]),
                            _ => (format!("p odd, k {kp}"), vec![VFactor::I4]),
                        }
                    }
                };
                (condition, v, ExactScalar::pi_multiple(rat(*q as i128, 2)))
            }
            _ => {
                return Err(Error::UnsupportedSpec(format!(
                    "normalizer tables exist for the dim-4 and dim-6 families only, not {}",
                    spec.label()
                )))
            }
        };
        Ok(Self { kind, family: spec.family.clone(), condition, v_factors, t_step })
    }

    pub fn contains(&self, g: &ExactElement) -> bool {
        let t_ok = g.t.is_zero() || g.t.ratio_to(&self.t_step).is_some_and(|r| r.is_integer());
        if !t_ok || g.v.len() != self.v_factors.iter().map(VFactor::dim).sum::<usize>() {
            return false;
        }
        let mut at = 0;
        self.v_factors.iter().all(|f| {
            let ok = f.contains(&g.v[at..at + f.dim()]);
            at += f.dim();
            ok
        })
    }

    /// The product-set expression alone, e.g. `R x (1/2)Z^2 x (1/2pi)Z`.
    pub fn product_set(&self) -> String {
        let mut parts = vec![String::from("R")];
        parts.extend(self.v_factors.iter().map(ToString::to_string));
        parts.push(format!("({})Z", self.t_step.to_string().replace(' ', "")));
        parts.join(" x ")
    }
}

impl fmt::Display for NormalizerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.product_set())
    }
}

/// The parsed form of a product-set expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSet {
    pub v_factors: Vec<VFactor>,
    pub t_step: ExactScalar,
}

impl FromStr for ProductSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("bad product set {s:?}: {what}"));
        let parts: Vec<&str> = s.split(" x ").map(str::trim).collect();
        if parts.len() < 3 || parts[0] != "R" {
            return Err(bad("expected R x <v factors> x (<t step>)Z"));
        }
        let last = parts[parts.len() - 1];
        let t_step = last
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(")Z"))
            .ok_or_else(|| bad("last factor must look like (<step>)Z"))?
            .parse()?;
        let mut v_factors = Vec::new();
        for part in &parts[1..parts.len() - 1] {
            let factor = match *part {
                "I2" => VFactor::I2,
                "I4" => VFactor::I4,
                other => {
                    let (step, rest) = match other.strip_prefix('(') {
                        Some(inner) => {
                            let (step, rest) = inner.split_once(")").ok_or_else(|| bad("unclosed parenthesis"))?;
                            (parse_rational(step)?, rest)
                        }
                        None => (int(1), other),
                    };
                    let dim = rest
                        .strip_prefix("Z^")
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| bad("lattice factor must be Z^<dim>"))?;
                    VFactor::Scaled { dim, step }
                }
            };
            v_factors.push(factor);
        }
        Ok(Self { v_factors, t_step })
    }
}

fn table_family_check(spec: &LatticeSpec, g: &ExactElement) -> Result<()> {
    if g.v.len() != 2 * spec.n() {
        return Err(Error::DimensionMismatch { expected: 2 * spec.n(), found: g.v.len() });
    }
    Ok(())
}

/// Membership according to the printed tables.
pub fn in_normalizer(g: &ExactElement, spec: &LatticeSpec) -> Result<bool> {
    let table = NormalizerTable::new(spec, TableKind::Printed)?;
    table_family_check(spec, g)?;
    Ok(table.contains(g))
}

/// Membership according to the corrected tables.
pub fn in_normalizer_derived(g: &ExactElement, spec: &LatticeSpec) -> Result<bool> {
    let table = NormalizerTable::new(spec, TableKind::Derived)?;
    table_family_check(spec, g)?;
    Ok(table.contains(g))
}

fn quarter_turns_everywhere(spec: &LatticeSpec, t: &ExactScalar) -> bool {
    spec.freqs.lambdas().iter().all(|l| quarter_turns(l, t).is_some())
}

/// Direct evaluation of the conjugation conditions for a lattice
/// `w Z × Z^{2n} × t0 Z`: `R(t)` integral, `v ∈ w Z^{2n}`, and for every
/// `c = 1, …, K0 - 1` with `S = R(c t0)`:
/// `(I - S)v ∈ Z^{2n}`, `vᵀ J S v ∈ 2w Z`, `(I + S)v ∈ 2w Z^{2n}`.
pub fn normalizer_conditions(g: &ExactElement, spec: &LatticeSpec) -> Result<bool> {
    let pf = spec.product_form()?;
    if !pf.shift.is_zero() {
        return Err(Error::UnsupportedSpec("the conditions assume an untwisted product lattice".into()));
    }
    table_family_check(spec, g)?;
    if !quarter_turns_everywhere(spec, &g.t) {
        return Ok(false);
    }
    let w = pf.z_step;
    let two_w = w * int(2);
    if !g.v.iter().all(|x| is_integer(&(x / w))) {
        return Ok(false);
    }
    for c in 1..pf.k0() as i128 {
        let angle = pf.t0.scale(&int(c));
        let sv = rotate::<Exact>(&angle, &g.v, &spec.freqs)
            .map_err(|_| Error::UnsupportedSpec(format!("R({angle}) is not a signed permutation")))?;
        let minus_ok = g.v.iter().zip(&sv).all(|(x, y)| is_integer(&(x - y)));
        let plus_ok = g.v.iter().zip(&sv).all(|(x, y)| is_integer(&((x + y) / two_w)));
        let form_ok = is_integer(&(symplectic(&g.v, &sv) / two_w));
        if !(minus_ok && plus_ok && form_ok) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Brute force: `g γ g⁻¹ ∈ Λ` and `g⁻¹ γ g ∈ Λ` for every generator `γ`.
///
/// For product lattices, which contain every `(0, e_j, 0)`, an angle `t` that
/// is not a quarter turn in some block makes `R(t) e_j` irrational, so the
/// answer is `false` without exact rotation.
pub fn normalizer_oracle(g: &ExactElement, spec: &LatticeSpec) -> Result<bool> {
    let freqs = &spec.freqs;
    table_family_check(spec, g)?;
    if spec.product_form().is_ok() && !quarter_turns_everywhere(spec, &g.t) {
        return Ok(false);
    }
    let g_inv = invert(g, freqs)?;
    for gamma in spec.generators()? {
        let forward = multiply(&multiply(g, &gamma, freqs)?, &g_inv, freqs)?;
        if !spec.contains(&forward)? {
            return Ok(false);
        }
        let backward = multiply(&multiply(&g_inv, &gamma, freqs)?, g, freqs)?;
        if !spec.contains(&backward)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn cartesian(values: &[Rational], dim: usize) -> Vec<Vec<Rational>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |x| {
                    let mut p: Vec<Rational> = prefix.clone();
                    p.push(*x);
                    p
                })
            })
            .collect();
    }
    out
}

/// The verification grid for a table family.
///
/// Dim 6: `v ∈ {0, ¼, ⅓, ½, 1}⁴`, `t ∈ {0, π/4, π/2, π, qπ/2}`, `z = 0`.
/// Dim 4 uses `v ∈ {0, ¼, ⅓, ½, ¾, 1, 3/2}²`, `t ∈ {0, π/4, π/2, π, 3π/2, -π/2}`
/// and `z ∈ {0, ⅓}` to reach more than 500 points.
pub fn normalizer_grid(spec: &LatticeSpec) -> Result<Vec<ExactElement>> {
    let pi = |num, den| ExactScalar::pi_multiple(rat(num, den));
    let (values, ts, zs) = match &spec.family {
        LatticeFamily::Dim4 { .. } => (
            vec![int(0), rat(1, 4), rat(1, 3), rat(1, 2), rat(3, 4), int(1), rat(3, 2)],
            vec![ExactScalar::zero(), pi(1, 4), pi(1, 2), pi(1, 1), pi(3, 2), pi(-1, 2)],
            vec![ExactScalar::zero(), ExactScalar::rational(rat(1, 3))],
        ),
        LatticeFamily::Dim6 { q, .. } => {
            let mut ts = vec![ExactScalar::zero(), pi(1, 4), pi(1, 2), pi(1, 1)];
            let qt = pi(*q as i128, 2);
            if !ts.contains(&qt) {
                ts.push(qt);
            }
            (vec![int(0), rat(1, 4), rat(1, 3), rat(1, 2), int(1)], ts, vec![ExactScalar::zero()])
        }
        _ => {
            return Err(Error::UnsupportedSpec(format!("no normalizer grid for {}", spec.label())));
        }
    };
    let mut out = Vec::new();
    for z in &zs {
        for t in &ts {
            for v in cartesian(&values, 2 * spec.n()) {
                out.push(GroupElement::new(z.clone(), v, t.clone()));
            }
        }
    }
    Ok(out)
}

/// Agreement of an evaluator with [`normalizer_oracle`] on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAgreement {
    pub lattice: String,
    pub points: usize,
    pub agree: usize,
    /// Grid points the oracle places in the normalizer.
    pub members: usize,
    /// Up to the first five disagreements as `(g, evaluator, oracle)`.
    pub disagreements: Vec<(ExactElement, bool, bool)>,
    pub disagreement_count: usize,
}

impl GridAgreement {
    pub fn all_agree(&self) -> bool {
        self.agree == self.points
    }

    pub fn rate(&self) -> f64 {
        if self.points == 0 {
            1.0
        } else {
            self.agree as f64 / self.points as f64
        }
    }
}

pub fn verify_normalizer<F>(spec: &LatticeSpec, evaluator: F) -> Result<GridAgreement>
where
    F: Fn(&ExactElement, &LatticeSpec) -> Result<bool>,
{
    let grid = normalizer_grid(spec)?;
    let mut report = GridAgreement {
        lattice: spec.label(),
        points: grid.len(),
        agree: 0,
        members: 0,
        disagreements: Vec::new(),
        disagreement_count: 0,
    };
    for g in grid {
        let truth = normalizer_oracle(&g, spec)?;
        let claim = evaluator(&g, spec)?;
        report.members += truth as usize;
        if truth == claim {
            report.agree += 1;
        } else {
            report.disagreement_count += 1;
            if report.disagreements.len() < 5 {
                report.disagreements.push((g, claim, truth));
            }
        }
    }
    Ok(report)
}
