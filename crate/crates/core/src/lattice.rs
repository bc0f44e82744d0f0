//! Lattice families of oscillator groups and exact membership.
//!
//! Every closed-form family is a twisted product lattice
//! `φ_m(δ Z × Z^{2n} × t0 Z)` where `φ_m(z, v, t) = (z + m t, v, t)`.
//! Membership is then decided coordinate by coordinate in `Q + Q·pi`.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_integer::Integer;
use num_traits::Zero;

use crate::algebra::FrequencyList;
use crate::error::{Error, Result};
use crate::group::{invert, multiply, ExactElement, FloatElement, GroupElement};
use crate::scalar::{int, lcm_denominators, rat, ExactScalar, Rational};

/// Default word length for generator-list membership searches.
pub const DEFAULT_WORD_DEPTH: usize = 6;

/// The `t`-step of the four-dimensional families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim4Angle {
    TwoPi,
    Pi,
    HalfPi,
}

impl Dim4Angle {
    pub fn t0(self) -> ExactScalar {
        ExactScalar::pi_multiple(match self {
            Dim4Angle::TwoPi => int(2),
            Dim4Angle::Pi => int(1),
            Dim4Angle::HalfPi => rat(1, 2),
        })
    }

    pub fn all() -> [Dim4Angle; 3] {
        [Dim4Angle::TwoPi, Dim4Angle::Pi, Dim4Angle::HalfPi]
    }
}

impl fmt::Display for Dim4Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dim4Angle::TwoPi => "2pi",
            Dim4Angle::Pi => "pi",
            Dim4Angle::HalfPi => "pi/2",
        })
    }
}

impl FromStr for Dim4Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: ExactScalar = s.parse()?;
        Dim4Angle::all()
            .into_iter()
            .find(|a| a.t0() == v)
            .ok_or_else(|| Error::InvalidLattice(format!("angle must be 2pi, pi or pi/2, got '{s}'")))
    }
}

/// Generator `w` of the line lattice `wZ` in `Osc_n × R`.
#[derive(Clone, Debug, PartialEq)]
pub enum LineStep {
    /// `w` itself lies in `Q + Q·pi`.
    Exact(ExactScalar),
    /// Only `w²` is known, and it lies in `Q + Q·pi`.
    Squared(ExactScalar),
    /// `w` is flagged irrational with no `Q`-linear relation to `1, pi` for `w²`.
    Irrational(String),
}

impl fmt::Display for LineStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineStep::Exact(w) => write!(f, "w={}", compact(w)),
            LineStep::Squared(w2) => write!(f, "w2={}", compact(w2)),
            LineStep::Irrational(label) => write!(f, "w_irrational={label}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeFamily {
    /// `(1/2k)Z × Z² × t0 Z` in `Osc_1(1)`.
    Dim4 { k: u32, angle: Dim4Angle },
    /// `(1/2k)Z × Z⁴ × (2πq/M)Z` in `Osc_2(1, p/q)`.
    Dim6 { k: u32, p: u32, q: u32, m: u32 },
    /// `φ_m(base)`.
    Twisted { base: Box<LatticeSpec>, m: ExactScalar },
    /// `base × wZ` in `Osc_n × R`.
    ProductWithLine { base: Box<LatticeSpec>, w: LineStep },
    /// The subgroup generated by explicit elements.
    GeneratorList { elements: Vec<ExactElement>, depth: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub freqs: FrequencyList,
    pub family: LatticeFamily,
}

/// Structural quantities of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeProfile {
    pub t0: ExactScalar,
    pub k0: u64,
    pub central_w: ExactScalar,
    pub has_pure_t: bool,
}

/// `φ_shift(z_step Z × Z^{2n} × t0 Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductForm {
    pub freqs: FrequencyList,
    pub z_step: Rational,
    pub t0: ExactScalar,
    pub shift: Rational,
}

impl ProductForm {
    pub fn n(&self) -> usize {
        self.freqs.n()
    }

    pub fn contains(&self, g: &ExactElement) -> Result<bool> {
        if g.v.len() != 2 * self.n() {
            return Err(Error::DimensionMismatch { expected: 2 * self.n(), found: g.v.len() });
        }
        let r = match g.t.ratio_to(&self.t0) {
            Some(r) if r.is_integer() => r,
            _ if g.t.is_zero() => Rational::zero(),
            _ => return Ok(false),
        };
        if !g.v.iter().all(|x| x.is_integer()) {
            return Ok(false);
        }
        let z = g.z.clone() - self.t0.scale(&(r * self.shift));
        Ok(z.is_rational() && (z.q1 / self.z_step).is_integer())
    }

    /// The member `(shift·r·t0 + j·z_step, v, r·t0)`.
    pub fn member(&self, j: i128, v: &[i128], r: i128) -> ExactElement {
        let t = self.t0.scale(&int(r));
        let z = t.scale(&self.shift) + ExactScalar::rational(self.z_step * int(j));
        GroupElement::new(z, v.iter().map(|&x| int(x)).collect(), t)
    }

    /// Coordinates `(j, v, r)` of an element known to be a member.
    pub fn coordinates(&self, g: &ExactElement) -> Option<(i128, Vec<i128>, i128)> {
        if !self.contains(g).ok()? {
            return None;
        }
        let r = if g.t.is_zero() { Rational::zero() } else { g.t.ratio_to(&self.t0)? };
        let z = g.z.clone() - self.t0.scale(&(r * self.shift));
        let j = (z.q1 / self.z_step).to_integer();
        Some((j, g.v.iter().map(|x| x.to_integer()).collect(), r.to_integer()))
    }

    pub fn k0(&self) -> u64 {
        let turns: Vec<Rational> = self.freqs.lambdas().iter().map(|l| self.t0.q2 * l / int(2)).collect();
        lcm_denominators(&turns) as u64
    }

    /// Smallest `r ≥ 1` with `(0, 0, r·t0)` a member.
    pub fn pure_t_multiple(&self) -> Option<i128> {
        // (0,0,r t0) is a member iff -shift·r·t0 lies in z_step Z; its pi-part vanishes only for shift = 0
        let probe = self.t0.scale(&self.shift);
        if !probe.is_rational() {
            return None;
        }
        let per_step = probe.q1 / self.z_step;
        Some(if per_step.is_zero() { 1 } else { *per_step.denom() })
    }

    /// Generators: `(z_step,0,0)`, `(0,e_j,0)` and `(shift·t0, 0, t0)`.
    pub fn generators(&self) -> Vec<ExactElement> {
        let n = self.n();
        let mut out = vec![self.member(1, &vec![0; 2 * n], 0)];
        for j in 0..2 * n {
            let mut e = vec![0; 2 * n];
            e[j] = 1;
            out.push(self.member(0, &e, 0));
        }
        out.push(self.member(0, &vec![0; 2 * n], 1));
        out
    }

    /// The member nearest to a float point whose `t`-coordinate is known exactly.
    pub fn nearest_member(&self, g: &FloatElement, t: &ExactScalar) -> Option<ExactElement> {
        let r = if t.is_zero() { Rational::zero() } else { t.ratio_to(&self.t0)? };
        if !r.is_integer() {
            return None;
        }
        let r = r.to_integer();
        let base = self.t0.scale(&int(r)).scale(&self.shift).to_f64();
        let j = libm::round((g.z - base) / crate::scalar::rational_to_f64(&self.z_step)) as i128;
        let v: Vec<i128> = g.v.iter().map(|x| libm::round(*x) as i128).collect();
        Some(self.member(j, &v, r))
    }
}

fn compact(x: &ExactScalar) -> String {
    x.to_string().replace(' ', "")
}

impl LatticeSpec {
    pub fn dim4(k: u32, angle: Dim4Angle) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidLattice("k must be a positive integer".into()));
        }
        Ok(Self { freqs: FrequencyList::unit(), family: LatticeFamily::Dim4 { k, angle } })
    }

    pub fn dim6(k: u32, p: u32, q: u32, m: u32) -> Result<Self> {
        if k == 0 || p == 0 || q == 0 {
            return Err(Error::InvalidLattice("k, p and q must be positive integers".into()));
        }
        if !matches!(m, 1 | 2 | 4) {
            return Err(Error::InvalidLattice(format!("M must be 1, 2 or 4, got {m}")));
        }
        if p.gcd(&q) != 1 {
            return Err(Error::InvalidLattice(format!("p = {p} and q = {q} are not coprime")));
        }
        if m > 1 && q % 2 == 0 {
            return Err(Error::InvalidLattice(format!("q must be odd when M > 1, got q = {q}")));
        }
        let freqs = FrequencyList::new(vec![int(1), rat(p as i128, q as i128)])?;
        Ok(Self { freqs, family: LatticeFamily::Dim6 { k, p, q, m } })
    }

    pub fn twisted(base: LatticeSpec, m: ExactScalar) -> Result<Self> {
        if !m.is_rational() {
            return Err(Error::InvalidLattice(format!("twist m = {m} must be rational so that m·t stays in Q + Q pi")));
        }
        base.product_form()?;
        Ok(Self { freqs: base.freqs.clone(), family: LatticeFamily::Twisted { base: Box::new(base), m } })
    }

    pub fn product_with_line(base: LatticeSpec, w: LineStep) -> Result<Self> {
        match &w {
            LineStep::Exact(x) if x.is_zero() => return Err(Error::InvalidLattice("w must be nonzero".into())),
            LineStep::Squared(x) if !x.is_positive() => {
                return Err(Error::InvalidLattice(format!("w² = {x} must be positive")))
            }
            _ => {}
        }
        Ok(Self { freqs: base.freqs.clone(), family: LatticeFamily::ProductWithLine { base: Box::new(base), w } })
    }

    pub fn generator_list(freqs: FrequencyList, elements: Vec<ExactElement>, depth: usize) -> Result<Self> {
        if let Some(g) = elements.iter().find(|g| g.v.len() != 2 * freqs.n()) {
            return Err(Error::DimensionMismatch { expected: 2 * freqs.n(), found: g.v.len() });
        }
        Ok(Self { freqs, family: LatticeFamily::GeneratorList { elements, depth } })
    }

    pub fn n(&self) -> usize {
        self.freqs.n()
    }

    /// Whether this is one of the dim-4 or dim-6 families without twist.
    pub fn is_table_family(&self) -> bool {
        matches!(self.family, LatticeFamily::Dim4 { .. } | LatticeFamily::Dim6 { .. })
    }

    pub fn product_form(&self) -> Result<ProductForm> {
        match &self.family {
            LatticeFamily::Dim4 { k, angle } => Ok(ProductForm {
                freqs: self.freqs.clone(),
                z_step: rat(1, 2 * *k as i128),
                t0: angle.t0(),
                shift: Rational::zero(),
            }),
            LatticeFamily::Dim6 { k, q, m, .. } => Ok(ProductForm {
                freqs: self.freqs.clone(),
                z_step: rat(1, 2 * *k as i128),
                t0: ExactScalar::pi_multiple(rat(2 * *q as i128, *m as i128)),
                shift: Rational::zero(),
            }),
            LatticeFamily::Twisted { base, m } => {
                let mut pf = base.product_form()?;
                pf.shift += m.q1;
                Ok(pf)
            }
            LatticeFamily::ProductWithLine { .. } => {
                Err(Error::UnsupportedSpec("product with a line lattice lives in Osc_n × R".into()))
            }
            LatticeFamily::GeneratorList { .. } => {
                Err(Error::UnsupportedSpec("generator lists have no closed-form description".into()))
            }
        }
    }

    /// Membership of an exact element.
    pub fn contains(&self, g: &ExactElement) -> Result<bool> {
        if g.v.len() != 2 * self.n() {
            return Err(Error::DimensionMismatch { expected: 2 * self.n(), found: g.v.len() });
        }
        match &self.family {
            LatticeFamily::GeneratorList { elements, depth } => word_search(elements, g, *depth, &self.freqs),
            LatticeFamily::ProductWithLine { .. } => {
                Err(Error::UnsupportedSpec("use contains_product for Osc_n × R lattices".into()))
            }
            _ => self.product_form()?.contains(g),
        }
    }

    /// Membership of `(g, r)` in `base × wZ`.
    pub fn contains_product(&self, g: &ExactElement, r: &ExactScalar) -> Result<bool> {
        let LatticeFamily::ProductWithLine { base, w } = &self.family else {
            return Err(Error::UnsupportedSpec("not a product with a line lattice".into()));
        };
        let on_line = match w {
            LineStep::Exact(w) => r.is_zero() || r.ratio_to(w).is_some_and(|q| q.is_integer()),
            _ if r.is_zero() => true,
            _ => return Err(Error::NotRepresentable(format!("w is only known through {w}"))),
        };
        Ok(on_line && base.contains(g)?)
    }

    pub fn profile(&self) -> Result<LatticeProfile> {
        let pf = self.product_form()?;
        Ok(LatticeProfile {
            t0: pf.t0.clone(),
            k0: pf.k0(),
            central_w: ExactScalar::rational(pf.z_step),
            has_pure_t: pf.pure_t_multiple().is_some(),
        })
    }

    pub fn central_element(&self) -> Result<ExactElement> {
        let pf = self.product_form()?;
        Ok(GroupElement::central(ExactScalar::rational(pf.z_step), self.n()))
    }

    pub fn pure_t_element(&self) -> Result<Option<ExactElement>> {
        let pf = self.product_form()?;
        Ok(pf.pure_t_multiple().map(|r| GroupElement::pure_t(pf.t0.scale(&int(r)), self.n())))
    }

    pub fn generators(&self) -> Result<Vec<ExactElement>> {
        match &self.family {
            LatticeFamily::GeneratorList { elements, .. } => Ok(elements.clone()),
            _ => Ok(self.product_form()?.generators()),
        }
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match &self.family {
            LatticeFamily::Dim4 { k, angle } => {
                let a = match angle {
                    Dim4Angle::TwoPi => "0",
                    Dim4Angle::Pi => "pi",
                    Dim4Angle::HalfPi => "pi/2",
                };
                format!("Lambda_{{{k},{a}}}")
            }
            LatticeFamily::Dim6 { k, p, q, m } => format!("Lambda_{{{k},{q},{m}}} in Osc(1,{p}/{q})"),
            LatticeFamily::Twisted { base, m } => format!("phi_{m}({})", base.label()),
            LatticeFamily::ProductWithLine { base, w } => format!("{} x ({w})Z", base.label()),
            LatticeFamily::GeneratorList { elements, .. } => format!("<{} generators>", elements.len()),
        }
    }
}

fn word_search(gens: &[ExactElement], target: &ExactElement, depth: usize, freqs: &FrequencyList) -> Result<bool> {
    type Key = (ExactScalar, Vec<Rational>, ExactScalar);
    let key = |g: &ExactElement| -> Key { (g.z.clone(), g.v.clone(), g.t.clone()) };
    let mut letters = Vec::with_capacity(2 * gens.len());
    for g in gens {
        letters.push(g.clone());
        letters.push(invert(g, freqs)?);
    }
    let id = GroupElement::identity(freqs.n());
    if *target == id {
        return Ok(true);
    }
    let mut seen: BTreeSet<Key> = BTreeSet::new();
    seen.insert(key(&id));
    let mut frontier = vec![id];
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                let g = multiply(w, l, freqs)?;
                if g == *target {
                    return Ok(true);
                }
                if seen.insert(key(&g)) {
                    next.push(g);
                }
            }
        }
        frontier = next;
    }
    Err(Error::MembershipUndecidable { depth })
}

impl fmt::Display for LatticeSpec {
    /// Compact form such as `dim4:k=1:angle=2pi`, `dim6:k=1:p=1:q=1:M=4`,
    /// `twisted:m=1:dim4:k=1:angle=2pi` or `product_line:w2=2pi:dim4:k=1:angle=2pi`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            LatticeFamily::Dim4 { k, angle } => write!(f, "dim4:k={k}:angle={angle}"),
            LatticeFamily::Dim6 { k, p, q, m } => write!(f, "dim6:k={k}:p={p}:q={q}:M={m}"),
            LatticeFamily::Twisted { base, m } => write!(f, "twisted:m={}:{base}", compact(m)),
            LatticeFamily::ProductWithLine { base, w } => write!(f, "product_line:{w}:{base}"),
            LatticeFamily::GeneratorList { elements, depth } => {
                write!(f, "generators:depth={depth}:count={}", elements.len())
            }
        }
    }
}

impl FromStr for LatticeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(format!("lattice '{s}': {msg}"));
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let kv = |part: &str| -> Result<(String, String)> {
            part.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| bad(format!("expected key=value, got '{part}'")))
        };
        let num = |v: &str| -> Result<u32> { v.parse().map_err(|_| bad(format!("'{v}' is not a positive integer"))) };
        match head.trim() {
            "dim4" => {
                let (mut k, mut angle) = (None, None);
                for part in rest.split(':').filter(|p| !p.is_empty()) {
                    match kv(part)? {
                        (key, v) if key == "k" => k = Some(num(&v)?),
                        (key, v) if key == "angle" => angle = Some(v.parse()?),
                        (key, _) => return Err(bad(format!("unknown key '{key}'"))),
                    }
                }
                LatticeSpec::dim4(k.ok_or_else(|| bad("missing k".into()))?, angle.unwrap_or(Dim4Angle::TwoPi))
            }
            "dim6" => {
                let (mut k, mut p, mut q, mut m) = (None, None, None, None);
                for part in rest.split(':').filter(|p| !p.is_empty()) {
                    let (key, v) = kv(part)?;
                    let slot = match key.as_str() {
                        "k" => &mut k,
                        "p" => &mut p,
                        "q" => &mut q,
                        "M" | "m" => &mut m,
                        _ => return Err(bad(format!("unknown key '{key}'"))),
                    };
                    *slot = Some(num(&v)?);
                }
                let get = |x: Option<u32>, name: &str| x.ok_or_else(|| bad(format!("missing {name}")));
                LatticeSpec::dim6(get(k, "k")?, get(p, "p")?, get(q, "q")?, get(m, "M")?)
            }
            "twisted" => {
                let (first, base) = rest.split_once(':').ok_or_else(|| bad("missing base".into()))?;
                let (key, v) = kv(first)?;
                if key != "m" {
                    return Err(bad(format!("expected m=..., got '{first}'")));
                }
                LatticeSpec::twisted(base.parse()?, v.parse()?)
            }
            "product_line" => {
                let (first, base) = rest.split_once(':').ok_or_else(|| bad("missing base".into()))?;
                let w = match kv(first)? {
                    (key, v) if key == "w" => LineStep::Exact(v.parse()?),
                    (key, v) if key == "w2" => LineStep::Squared(v.parse()?),
                    (key, v) if key == "w_irrational" => LineStep::Irrational(v),
                    (key, _) => return Err(bad(format!("unknown key '{key}'"))),
                };
                LatticeSpec::product_with_line(base.parse()?, w)
            }
            other => Err(bad(format!("unknown family '{other}'"))),
        }
    }
}

/// Every `(k, p, q, M)` with `k, p, q ∈ {1, …, max}` admitted by the dim-6 family.
pub fn dim6_parameter_grid(max: u32) -> Vec<(u32, u32, u32, u32)> {
    let mut out = Vec::new();
    for m in [1, 2, 4] {
        for k in 1..=max {
            for p in 1..=max {
                for q in 1..=max {
                    if p.gcd(&q) == 1 && (m == 1 || q % 2 == 1) {
                        out.push((k, p, q, m));
                    }
                }
            }
        }
    }
    out
}
