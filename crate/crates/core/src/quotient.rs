//! Closed geodesics on compact quotients `Osc_n / Γ`.
//!
//! A geodesic `s ↦ exp(sX)` closes up in the quotient exactly when it meets
//! `Γ` again at some positive parameter, so everything here reduces to exact
//! lattice membership of points on one-parameter subgroups.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::algebra::{causal_class, causal_norm, AlgebraVector, CausalClass};
use crate::error::{Error, Result};
use crate::geodesic::{exp_closed_form, exp_exact_at_time, exp_exact_linear};
use crate::group::{power, ExactElement};
use crate::lattice::{Dim4Angle, LatticeFamily, LatticeSpec, LineStep, ProductForm};
use crate::scalar::{int, rational_to_f64, ExactScalar, Rational};

/// Default bound on the number of candidate times tried by [`search_closed`].
pub const DEFAULT_R_MAX: u32 = 1000;
/// Float agreement required between a geodesic point and its lattice point.
pub const CERT_TOL: f64 = 1e-9;
/// Hard cap on the central shift scanned by [`closed_timelike_and_spacelike`].
pub const M_CAP: i128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LightlikeVerdict {
    /// Every lightlike geodesic closes; the witness is a member `(0, 0, t)`, `t ≠ 0`.
    AllClosed { witness: ExactElement },
    /// Only the geodesics in the direction of `Z` close.
    OnlyCentralDirection,
}

/// A geodesic through `e` that meets the lattice again at `s_star > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesicCertificate {
    pub initial: AlgebraVector<f64>,
    /// The initial vector, when it is rational.
    pub initial_exact: Option<AlgebraVector<Rational>>,
    pub s_star: f64,
    pub s_star_exact: Option<ExactScalar>,
    pub lattice_point: ExactElement,
    pub causal: CausalClass,
    /// Sup-norm gap between the float geodesic at `s_star` and the lattice point.
    pub deviation: f64,
    /// Whether the geodesic point was also computed exactly and found equal.
    pub exact_hit: bool,
}

impl ClosedGeodesicCertificate {
    /// Re-evaluates the geodesic and the membership from scratch.
    pub fn verify(&self, spec: &LatticeSpec) -> Result<()> {
        let g = exp_closed_form(&self.initial, self.s_star, &spec.freqs);
        let dev = g.max_abs_diff(&self.lattice_point.to_float());
        if !(dev <= CERT_TOL) {
            return Err(Error::CertificateVerificationFailed(format!(
                "geodesic misses {:?} by {dev:e} at s = {}",
                self.lattice_point, self.s_star
            )));
        }
        if !spec.contains(&self.lattice_point)? {
            return Err(Error::CertificateVerificationFailed(format!("{:?} is not a lattice member", self.lattice_point)));
        }
        if !(self.s_star > 0.0) {
            return Err(Error::CertificateVerificationFailed(format!("s* = {} is not positive", self.s_star)));
        }
        let causal = causal_class(&self.initial, &spec.freqs)?;
        if causal != self.causal {
            return Err(Error::CertificateVerificationFailed(format!("recorded {:?}, actual {causal:?}", self.causal)));
        }
        Ok(())
    }
}

pub fn classify_lightlike(spec: &LatticeSpec) -> Result<LightlikeVerdict> {
    let profile = spec.profile()?;
    Ok(match spec.pure_t_element()? {
        Some(pt) => LightlikeVerdict::AllClosed { witness: power(&pt, profile.k0 as i64, &spec.freqs)? },
        None => LightlikeVerdict::OnlyCentralDirection,
    })
}

fn certificate(
    spec: &LatticeSpec,
    initial: AlgebraVector<f64>,
    initial_exact: Option<AlgebraVector<Rational>>,
    s_star: f64,
    s_star_exact: Option<ExactScalar>,
    lattice_point: ExactElement,
    exact_hit: bool,
) -> Result<ClosedGeodesicCertificate> {
    let deviation = exp_closed_form(&initial, s_star, &spec.freqs).max_abs_diff(&lattice_point.to_float());
    let causal = causal_class(&initial, &spec.freqs)?;
    Ok(ClosedGeodesicCertificate { initial, initial_exact, s_star, s_star_exact, lattice_point, causal, deviation, exact_hit })
}

/// A geodesic from `e` to the lattice point `γ` at `s = 1`, with `a = t_γ ≠ 0`.
fn geodesic_to(gamma: &ExactElement, spec: &LatticeSpec) -> AlgebraVector<f64> {
    let freqs = &spec.freqs;
    let a = gamma.t.to_f64();
    let mut bc = Vec::with_capacity(freqs.n());
    let mut d = gamma.z.to_f64();
    for j in 0..freqs.n() {
        let (ux, uy) = (rational_to_f64(&gamma.v[2 * j]), rational_to_f64(&gamma.v[2 * j + 1]));
        if ux == 0.0 && uy == 0.0 {
            bc.push((0.0, 0.0));
            continue;
        }
        let l = rational_to_f64(freqs.lambda(j));
        let th = l * a;
        let (s, c1) = (libm::sin(th), 1.0 - libm::cos(th));
        let det = s * s + c1 * c1;
        let k = l * a / det;
        let (b, c) = (k * (s * ux + c1 * uy), k * (-c1 * ux + s * uy));
        d -= (b * b + c * c) * (th - s) / (2.0 * l * l * a * a);
        bc.push((b, c));
    }
    AlgebraVector::new(d, bc, a)
}

/// Builds one closed timelike and one closed spacelike geodesic, in that order.
///
/// For `K0 = 1` the lattice point is `(m w + z, 0, t0)`; for `K0 > 1` it is
/// `(m w + z, u, (K0 − 1) t0)` with `u` a unit vector in every block that
/// `R((K0 − 1) t0)` actually rotates. The central shift `m` is scanned over
/// `0, ±1, ±2, …` until the causal norm has each sign.
pub fn closed_timelike_and_spacelike(spec: &LatticeSpec) -> Result<(ClosedGeodesicCertificate, ClosedGeodesicCertificate)> {
    let pf = spec.product_form()?;
    let k0 = pf.k0() as i128;
    let r = if k0 == 1 { 1 } else { k0 - 1 };
    let t_hat = pf.t0.scale(&int(r));
    let n = pf.n();
    let mut u = vec![0i128; 2 * n];
    if k0 > 1 {
        for (j, l) in pf.freqs.lambdas().iter().enumerate() {
            let turns = t_hat.q2 * l / int(2);
            if !turns.is_integer() {
                u[2 * j] = 1;
            }
        }
    }
    let mut timelike = None;
    let mut spacelike = None;
    let mut m: i128 = 0;
    while timelike.is_none() || spacelike.is_none() {
        if m.abs() > M_CAP {
            return Err(Error::CertificateVerificationFailed(format!(
                "no shift |m| <= {M_CAP} gives both causal signs for {spec}"
            )));
        }
        let gamma = pf.member(m, &u, r);
        let initial = geodesic_to(&gamma, spec);
        let norm = causal_norm(&initial, &spec.freqs)?;
        let slot = if norm < -CERT_TOL {
            Some(&mut timelike)
        } else if norm > CERT_TOL {
            Some(&mut spacelike)
        } else {
            None
        };
        if let Some(slot @ None) = slot {
            let cert = certificate(spec, initial, None, 1.0, Some(ExactScalar::integer(1)), gamma, false)?;
            cert.verify(spec)?;
            *slot = Some(cert);
        }
        m = if m > 0 { -m } else { -m + 1 };
    }
    Ok((timelike.unwrap(), spacelike.unwrap()))
}

fn search_float(x: &AlgebraVector<f64>, spec: &LatticeSpec, pf: &ProductForm, r_max: u32) -> Result<Option<ClosedGeodesicCertificate>> {
    let a = *x.a();
    if a != 0.0 {
        for r in 1..=r_max as i128 {
            let t = pf.t0.scale(&int(if a > 0.0 { r } else { -r }));
            let s = t.to_f64() / a;
            let g = exp_closed_form(x, s, &spec.freqs);
            if let Some(hit) = pf.nearest_member(&g, &t) {
                if g.max_abs_diff(&hit.to_float()) <= CERT_TOL && pf.contains(&hit)? {
                    return Ok(Some(certificate(spec, x.clone(), None, s, None, hit, false)?));
                }
            }
        }
        return Ok(None);
    }
    for s in linear_candidates(x, rational_to_f64(&pf.z_step), r_max) {
        let g = exp_closed_form(x, s, &spec.freqs);
        if let Some(hit) = pf.nearest_member(&g, &ExactScalar::zero()) {
            if g.max_abs_diff(&hit.to_float()) <= CERT_TOL && pf.contains(&hit)? {
                return Ok(Some(certificate(spec, x.clone(), None, s, None, hit, false)?));
            }
        }
    }
    Ok(None)
}

fn linear_candidates(x: &AlgebraVector<f64>, z_step: f64, r_max: u32) -> Vec<f64> {
    let big = x.bc().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let unit = if big > 0.0 {
        1.0 / big
    } else if *x.d() != 0.0 {
        z_step / x.d().abs()
    } else {
        return Vec::new();
    };
    (1..=r_max).map(|m| m as f64 * unit).collect()
}

/// Looks for the first `s > 0` with `exp(sX) ∈ Γ` among the candidate times
/// `s = r t0 / a` for `r = 1..=r_max` (or, when `a = 0`, the times at which the
/// largest coordinate of the straight line is an integer). `None` only means
/// no closure was found within the bound.
pub fn search_closed(x: &AlgebraVector<f64>, spec: &LatticeSpec, r_max: u32) -> Result<Option<ClosedGeodesicCertificate>> {
    spec.freqs.check_dim(x.dim())?;
    let pf = spec.product_form()?;
    search_float(x, spec, &pf, r_max)
}

/// [`search_closed`] for a rational initial vector: candidate points are computed
/// exactly whenever the rotation angles are quarter turns, falling back to float
/// evaluation for the remaining candidates.
pub fn search_closed_exact(x: &AlgebraVector<Rational>, spec: &LatticeSpec, r_max: u32) -> Result<Option<ClosedGeodesicCertificate>> {
    spec.freqs.check_dim(x.dim())?;
    let pf = spec.product_form()?;
    let xf = x.to_f64();
    let a = *x.a();
    if !a.is_zero() {
        for r in 1..=r_max as i128 {
            let t = pf.t0.scale(&int(if a.is_positive() { r } else { -r }));
            let s_exact = t.scale(&(int(1) / a));
            let s = s_exact.to_f64();
            match exp_exact_at_time(x, &t, &spec.freqs) {
                Ok(g) => {
                    if pf.contains(&g)? {
                        return Ok(Some(certificate(spec, xf, Some(x.clone()), s, Some(s_exact), g, true)?));
                    }
                }
                Err(Error::ExactModeUnsupportedAngle(_)) => {
                    let g = exp_closed_form(&xf, s, &spec.freqs);
                    if let Some(hit) = pf.nearest_member(&g, &t) {
                        if g.max_abs_diff(&hit.to_float()) <= CERT_TOL && pf.contains(&hit)? {
                            return Ok(Some(certificate(spec, xf, Some(x.clone()), s, Some(s_exact), hit, false)?));
                        }
                    }
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(None);
    }
    let big = x.bc().iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
    let unit = if !big.is_zero() {
        int(1) / big
    } else if !x.d().is_zero() {
        pf.z_step / x.d().abs()
    } else {
        return Ok(None);
    };
    for m in 1..=r_max as i128 {
        let s = unit * int(m);
        let g = exp_exact_linear(x, &s, &spec.freqs)?;
        if pf.contains(&g)? {
            let s_exact = ExactScalar::rational(s);
            return Ok(Some(certificate(spec, xf, Some(x.clone()), rational_to_f64(&s), Some(s_exact), g, true)?));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProductLineVerdict {
    /// `w² = −2π k m / (N z²)` has the reported integer solution, where the base
    /// lattice has central step `1/(2N)`.
    SomeClosedPossible { k: i128, m: i128, z: i128 },
    NeverClosed { reason: String },
}

/// Lightlike geodesics on `(Osc_1(1) × R) / (Λ_{N,0} × wZ)`.
///
/// A closed lightlike geodesic needs `w² ∈ π Q_{>0}`; everything else never closes.
pub fn product_line_lightlike(spec: &LatticeSpec) -> Result<ProductLineVerdict> {
    let LatticeFamily::ProductWithLine { base, w } = &spec.family else {
        return Err(Error::UnsupportedSpec("expected a product with a line lattice".into()));
    };
    let LatticeFamily::Dim4 { k: big_n, angle: Dim4Angle::TwoPi } = base.family else {
        return Err(Error::UnsupportedSpec(format!("base {} must be a Lambda_{{N,0}} lattice", base.label())));
    };
    let w2 = match w {
        LineStep::Squared(w2) => w2.clone(),
        LineStep::Exact(w) if w.is_rational() => ExactScalar::rational(w.q1 * w.q1),
        LineStep::Exact(w) => {
            return Ok(ProductLineVerdict::NeverClosed {
                reason: format!("w = {w} has a pi-part, so w² carries a pi² term and is not in pi Q"),
            })
        }
        LineStep::Irrational(label) => {
            return Ok(ProductLineVerdict::NeverClosed {
                reason: format!("w = {label} is flagged irrational with no Q-linear relation between w², 1 and pi"),
            })
        }
    };
    if !w2.q1.is_zero() || !w2.q2.is_positive() {
        return Ok(ProductLineVerdict::NeverClosed { reason: format!("w² = {w2} is not a positive rational multiple of pi") });
    }
    let ratio = w2.q2 / int(2);
    let (p, q) = (*ratio.numer(), *ratio.denom());
    let m = big_n as i128 * p * q;
    Ok(ProductLineVerdict::SomeClosedPossible { k: -1, m, z: q })
}
