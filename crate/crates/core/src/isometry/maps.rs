//! Concrete isometries and the fiber-preservation test `f(g)⁻¹ f(gλ) ∈ Λ`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::theta::{theta_b, theta_b_exact, theta_b_inverse, ThetaVariant};
use crate::algebra::FrequencyList;
use crate::error::{Error, Result};
use crate::group::{conjugate, invert, multiply, ExactElement, FloatElement, GroupElement};
use crate::lattice::{LatticeFamily, LatticeSpec};
use crate::scalar::{int, rat, ExactScalar, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Isometry {
    /// `g ↦ h g`.
    LeftTranslation(ExactElement),
    /// `s(g) = g⁻¹`.
    Inversion,
    Theta { blocks: Vec<DMatrix<f64>>, variant: ThetaVariant },
    /// `I_h(g) = h g h⁻¹`.
    Inner(ExactElement),
    /// `f_1 ∘ f_2 ∘ …`; the last map acts first.
    Composite(Vec<Isometry>),
}

impl Isometry {
    pub fn apply_exact(&self, g: &ExactElement, freqs: &FrequencyList) -> Result<ExactElement> {
        match self {
            Isometry::LeftTranslation(h) => multiply(h, g, freqs),
            Isometry::Inversion => invert(g, freqs),
            Isometry::Theta { blocks, variant } => theta_b_exact(blocks, g, freqs, *variant),
            Isometry::Inner(h) => conjugate(h, g, freqs),
            Isometry::Composite(parts) => {
                let mut acc = g.clone();
                for f in parts.iter().rev() {
                    acc = f.apply_exact(&acc, freqs)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn apply_float(&self, g: &FloatElement, freqs: &FrequencyList) -> Result<FloatElement> {
        match self {
            Isometry::LeftTranslation(h) => multiply(&h.to_float(), g, freqs),
            Isometry::Inversion => invert(g, freqs),
            Isometry::Theta { blocks, variant } => theta_b(blocks, g, freqs, *variant),
            Isometry::Inner(h) => conjugate(&h.to_float(), g, freqs),
            Isometry::Composite(parts) => {
                let mut acc = g.clone();
                for f in parts.iter().rev() {
                    acc = f.apply_float(&acc, freqs)?;
                }
                Ok(acc)
            }
        }
    }

    /// The inverse map, evaluated on a float point.
    pub fn apply_inverse_float(&self, g: &FloatElement, freqs: &FrequencyList) -> Result<FloatElement> {
        match self {
            Isometry::LeftTranslation(h) => multiply(&invert(&h.to_float(), freqs)?, g, freqs),
            Isometry::Inversion => invert(g, freqs),
            Isometry::Theta { blocks, variant } => theta_b_inverse(blocks, g, freqs, *variant),
            Isometry::Inner(h) => conjugate(&invert(&h.to_float(), freqs)?, g, freqs),
            Isometry::Composite(parts) => {
                let mut acc = g.clone();
                for f in parts {
                    acc = f.apply_inverse_float(&acc, freqs)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Isometry::LeftTranslation(_) => "left-translation",
            Isometry::Inversion => "inversion",
            Isometry::Theta { .. } => "theta",
            Isometry::Inner(_) => "inner",
            Isometry::Composite(_) => "composite",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FiberVerdict {
    /// No counterexample among `checked` pairs; `skipped` pairs could not be evaluated exactly.
    Preserving { checked: usize, skipped: usize },
    /// `f(g)⁻¹ f(gλ) = defect` is not in the lattice.
    Counterexample { g: ExactElement, lambda: ExactElement, defect: ExactElement },
    /// Nothing could be evaluated exactly.
    Inconclusive { skipped: usize },
}

impl FiberVerdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, FiberVerdict::Counterexample { .. })
    }
}

fn steps(spec: &LatticeSpec) -> Result<(Rational, ExactScalar)> {
    if let LatticeFamily::GeneratorList { elements, .. } = &spec.family {
        let t0 = elements.iter().find(|g| !g.t.is_zero()).map(|g| g.t.clone());
        return Ok((int(1), t0.unwrap_or_else(|| ExactScalar::pi_multiple(rat(1, 2)))));
    }
    let pf = spec.product_form()?;
    Ok((pf.z_step, pf.t0))
}

fn v_grid(dim: usize) -> Vec<Vec<Rational>> {
    let values = [int(0), rat(1, 2), rat(1, 3)];
    if dim <= 4 {
        let mut out = vec![Vec::new()];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Rational>| {
                    values.iter().map(move |x| {
                        let mut p = prefix.clone();
                        p.push(*x);
                        p
                    })
                })
                .collect();
        }
        return out;
    }
    let mut out = Vec::new();
    for x in &values {
        out.push(vec![*x; dim]);
        for j in 0..dim {
            let mut v = vec![int(0); dim];
            v[j] = *x;
            out.push(v);
        }
    }
    out
}

/// Points `g` used by [`is_fiber_preserving`]: lattice steps scaled by `½`
/// and `⅓`, followed by `samples` seeded random exact points.
pub fn fiber_grid(spec: &LatticeSpec, samples: usize, seed: u64) -> Result<Vec<ExactElement>> {
    let (w, t0) = steps(spec)?;
    let w = ExactScalar::rational(w);
    let dim = 2 * spec.n();
    let zs = [ExactScalar::zero(), w.scale(&rat(1, 2)), w.scale(&rat(1, 3))];
    let ts = [ExactScalar::zero(), t0.scale(&rat(1, 2)), t0.scale(&rat(1, 3)), t0.clone()];
    let mut out = Vec::new();
    for t in &ts {
        for z in &zs {
            for v in v_grid(dim) {
                out.push(GroupElement::new(z.clone(), v, t.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let denoms = [1, 2, 3, 4, 6];
    for _ in 0..samples {
        let z = w.scale(&rat(rng.random_range(-6..=6), denoms[rng.random_range(0..denoms.len())]));
        let v = (0..dim).map(|_| rat(rng.random_range(-6..=6), denoms[rng.random_range(0..denoms.len())])).collect();
        let t = t0.scale(&rat(rng.random_range(-4..=4), [1, 2, 4][rng.random_range(0..3)]));
        out.push(GroupElement::new(z, v, t));
    }
    Ok(out)
}

fn lattice_probes(spec: &LatticeSpec) -> Result<Vec<ExactElement>> {
    let gens = spec.generators()?;
    let mut out = gens.clone();
    for g in &gens {
        out.push(invert(g, &spec.freqs)?);
    }
    for a in &gens {
        for b in &gens {
            out.push(multiply(a, b, &spec.freqs)?);
        }
    }
    Ok(out)
}

fn is_skippable(e: &Error) -> bool {
    matches!(e, Error::ExactModeUnsupportedAngle(_) | Error::NotRepresentable(_) | Error::MembershipUndecidable { .. })
}

/// Searches for `g, λ` with `f(g)⁻¹ f(gλ) ∉ Λ`.
///
/// A counterexample is a proof; `Preserving` only means none was found. For
/// `Inner(h)` the defect does not depend on `g`, so the verdict is exact
/// whenever `h Λ h⁻¹ ⊆ Λ` is the relevant question.
pub fn is_fiber_preserving(f: &Isometry, spec: &LatticeSpec, samples: usize, seed: u64) -> Result<FiberVerdict> {
    let freqs = &spec.freqs;
    let probes = lattice_probes(spec)?;
    let (mut checked, mut skipped) = (0, 0);
    for g in fiber_grid(spec, samples, seed)? {
        let fg_inv = match f.apply_exact(&g, freqs).and_then(|x| invert(&x, freqs)) {
            Ok(x) => x,
            Err(e) if is_skippable(&e) => {
                skipped += probes.len();
                continue;
            }
            Err(e) => return Err(e),
        };
        for lambda in &probes {
            let step = multiply(&g, lambda, freqs)
                .and_then(|gl| f.apply_exact(&gl, freqs))
                .and_then(|fgl| multiply(&fg_inv, &fgl, freqs))
                .and_then(|d| spec.contains(&d).map(|inside| (d, inside)));
            match step {
                Ok((_, true)) => checked += 1,
                Ok((defect, false)) => {
                    return Ok(FiberVerdict::Counterexample { g, lambda: lambda.clone(), defect });
                }
                Err(e) if is_skippable(&e) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(if checked == 0 { FiberVerdict::Inconclusive { skipped } } else { FiberVerdict::Preserving { checked, skipped } })
}
