//! Geodesics of the bi-invariant metric.
//!
//! Through the identity they are the one-parameter subgroups `s ↦ exp(sX)`.
//! Writing `u_k = λ_k a s`, the closed form is
//!
//! ```text
//! z(s)   = d s + ½ Σ (b_k² + c_k²) s² f3(u_k)
//! x_k(s) = b_k s f1(u_k) − c_k s f2(u_k)
//! y_k(s) = b_k s f2(u_k) + c_k s f1(u_k)
//! t(s)   = a s
//! ```
//!
//! with `f1 = sin u / u`, `f2 = (1 − cos u)/u`, `f3 = (u − sin u)/u²`, which
//! reduces to the straight line `(ds, b s, c s, 0)` when `a = 0`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::algebra::{causal_class, AlgebraVector, CausalClass, FrequencyList};
use crate::error::{Error, Result};
use crate::group::{multiply, quarter_turns, rotate, symplectic, Exact, ExactElement, Float, FloatElement, GroupElement};
use crate::scalar::{int, rational_to_f64, ExactScalar, Rational};

const SERIES_CUTOFF: f64 = 1e-2;

fn f1(u: f64) -> f64 {
    if libm::fabs(u) < SERIES_CUTOFF {
        let u2 = u * u;
        1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0))
    } else {
        libm::sin(u) / u
    }
}

fn f2(u: f64) -> f64 {
    if libm::fabs(u) < SERIES_CUTOFF {
        let u2 = u * u;
        u / 2.0 * (1.0 - u2 / 12.0 * (1.0 - u2 / 30.0 * (1.0 - u2 / 56.0)))
    } else {
        (1.0 - libm::cos(u)) / u
    }
}

fn f3(u: f64) -> f64 {
    if libm::fabs(u) < SERIES_CUTOFF {
        let u2 = u * u;
        u / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)))
    } else {
        (u - libm::sin(u)) / (u * u)
    }
}

/// The geodesic `s ↦ basepoint · exp(s X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    pub initial: AlgebraVector<f64>,
    pub basepoint: FloatElement,
    pub freqs: FrequencyList,
}

impl Geodesic {
    pub fn new(initial: AlgebraVector<f64>, freqs: FrequencyList) -> Result<Self> {
        freqs.check_dim(initial.dim())?;
        let basepoint = GroupElement::identity(freqs.n());
        Ok(Self { initial, basepoint, freqs })
    }

    pub fn through(mut self, basepoint: FloatElement) -> Result<Self> {
        if basepoint.n() != self.freqs.n() {
            return Err(Error::DimensionMismatch { expected: 2 * self.freqs.n(), found: basepoint.v.len() });
        }
        self.basepoint = basepoint;
        Ok(self)
    }

    pub fn eval(&self, s: f64) -> FloatElement {
        let g = exp_closed_form(&self.initial, s, &self.freqs);
        if self.basepoint.is_identity() {
            g
        } else {
            multiply(&self.basepoint, &g, &self.freqs).expect("dimensions checked at construction")
        }
    }

    /// Coordinate velocity `γ'(s)`, obtained by differentiating the closed form.
    pub fn velocity(&self, s: f64) -> Vec<f64> {
        let x = &self.initial;
        let n = self.freqs.n();
        let a = *x.a();
        let mut out = vec![0.0; 2 * n + 2];
        let mut z = *x.d();
        for k in 0..n {
            let l = rational_to_f64(self.freqs.lambda(k));
            let u = l * a * s;
            let (b, c) = (*x.b(k), *x.c(k));
            let (cu, su) = (libm::cos(u), libm::sin(u));
            out[1 + 2 * k] = b * cu - c * su;
            out[2 + 2 * k] = b * su + c * cu;
            z += 0.5 * (b * b + c * c) * s * f2(u);
        }
        out[0] = z;
        out[2 * n + 1] = a;
        if self.basepoint.is_identity() {
            return out;
        }
        let g = &self.basepoint;
        let dv = rotate::<Float>(&g.t, &out[1..2 * n + 1], &self.freqs).expect("dimensions checked");
        let mut tangent = Vec::with_capacity(2 * n + 2);
        tangent.push(out[0] + 0.5 * symplectic(&g.v, &dv));
        tangent.extend(dv);
        tangent.push(a);
        tangent
    }

    pub fn causal_character(&self) -> CausalClass {
        causal_character(self)
    }
}

/// `exp(s X)` in closed form.
pub fn exp_closed_form(x: &AlgebraVector<f64>, s: f64, freqs: &FrequencyList) -> FloatElement {
    let n = freqs.n();
    let a = *x.a();
    let mut z = x.d() * s;
    let mut v = vec![0.0; 2 * n];
    for k in 0..n {
        let l = rational_to_f64(freqs.lambda(k));
        let u = l * a * s;
        let (b, c) = (*x.b(k), *x.c(k));
        let (p, q) = (s * f1(u), s * f2(u));
        v[2 * k] = b * p - c * q;
        v[2 * k + 1] = b * q + c * p;
        z += 0.5 * (b * b + c * c) * s * s * f3(u);
    }
    GroupElement::new(z, v, a * s)
}

pub fn eval_geodesic(geo: &Geodesic, s: f64) -> FloatElement {
    geo.eval(s)
}

pub fn causal_character(geo: &Geodesic) -> CausalClass {
    causal_class(&geo.initial, &geo.freqs).expect("dimensions checked at construction")
}

/// Exact value of `exp(sX)` for rational `X` with `a ≠ 0`, at the parameter
/// `s = t / a` where the `t`-coordinate reaches `t`.
///
/// Needs every block angle `λ_k t` with `(b_k, c_k) ≠ 0` to be a multiple of `pi/2`.
pub fn exp_exact_at_time(x: &AlgebraVector<Rational>, t: &ExactScalar, freqs: &FrequencyList) -> Result<ExactElement> {
    freqs.check_dim(x.dim())?;
    let a = *x.a();
    if a.is_zero() {
        return Err(Error::UnsupportedSpec("exact evaluation at a given t needs a != 0".into()));
    }
    let n = freqs.n();
    let mut z = t.scale(&(x.d() / a));
    let mut v = vec![Rational::zero(); 2 * n];
    for k in 0..n {
        let (b, c) = (*x.b(k), *x.c(k));
        if b.is_zero() && c.is_zero() {
            continue;
        }
        let l = *freqs.lambda(k);
        let q = quarter_turns(&l, t).ok_or_else(|| Error::ExactModeUnsupportedAngle(t.clone()))?;
        let (sin, cos) = [(0, 1), (1, 0), (0, -1), (-1, 0)][q as usize];
        let (sin, cos) = (int(sin), int(cos));
        let la = l * a;
        v[2 * k] = (b * sin - c * (Rational::one() - cos)) / la;
        v[2 * k + 1] = (b * (Rational::one() - cos) + c * sin) / la;
        let w = (b * b + c * c) / (int(2) * la * la);
        z += (t.scale(&l) - ExactScalar::rational(sin)).scale(&w);
    }
    Ok(GroupElement::new(z, v, t.clone()))
}

/// Exact value of `exp(sX)` for rational `X` with `a = 0`.
pub fn exp_exact_linear(x: &AlgebraVector<Rational>, s: &Rational, freqs: &FrequencyList) -> Result<ExactElement> {
    freqs.check_dim(x.dim())?;
    if !x.a().is_zero() {
        return Err(Error::UnsupportedSpec("linear evaluation needs a = 0".into()));
    }
    let v = x.bc().iter().map(|b| b * s).collect();
    Ok(GroupElement::<Exact>::new(ExactScalar::rational(x.d() * s), v, ExactScalar::zero()))
}

/// Right-hand side of the geodesic system; `state` is position then velocity,
/// both in coordinates `(z, x_1, y_1, …, t)`.
pub fn geodesic_rhs(state: &[f64], freqs: &FrequencyList) -> Result<Vec<f64>> {
    let dim = freqs.dim();
    if state.len() != 2 * dim {
        return Err(Error::DimensionMismatch { expected: 2 * dim, found: state.len() });
    }
    let (pos, vel) = state.split_at(dim);
    let n = freqs.n();
    let tp = vel[dim - 1];
    let mut out = vec![0.0; 2 * dim];
    out[..dim].copy_from_slice(vel);
    let mut zpp = 0.0;
    for k in 0..n {
        let l = rational_to_f64(freqs.lambda(k));
        let (x, y) = (pos[1 + 2 * k], pos[2 + 2 * k]);
        let (xp, yp) = (vel[1 + 2 * k], vel[2 + 2 * k]);
        zpp += l * (xp * x + yp * y);
        out[dim + 1 + 2 * k] = -l * yp * tp;
        out[dim + 2 + 2 * k] = l * xp * tp;
    }
    out[dim] = 0.5 * tp * zpp;
    Ok(out)
}

/// Classical fourth-order Runge–Kutta from the identity with initial velocity
/// `X`, using `ceil(|s_end| / step)` equal steps.
pub fn integrate_geodesic(x: &AlgebraVector<f64>, s_end: f64, step: f64, freqs: &FrequencyList) -> Result<FloatElement> {
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidStep(step));
    }
    freqs.check_dim(x.dim())?;
    let dim = freqs.dim();
    let steps = libm::ceil(libm::fabs(s_end) / step).max(1.0) as usize;
    let h = s_end / steps as f64;
    let mut y = vec![0.0; 2 * dim];
    y[dim..].copy_from_slice(x.coords());
    let axpy = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for i in 0..steps {
        let k1 = geodesic_rhs(&y, freqs)?;
        let k2 = geodesic_rhs(&axpy(&y, &k1, h / 2.0), freqs)?;
        let k3 = geodesic_rhs(&axpy(&y, &k2, h / 2.0), freqs)?;
        let k4 = geodesic_rhs(&axpy(&y, &k3, h), freqs)?;
        for j in 0..2 * dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(h * (i + 1) as f64));
        }
    }
    FloatElement::from_coords(&y[..dim])
}

/// The metric in coordinates, `g_ij(p) = c_ij + Σ_k l_ijk p_k`, with rational
/// coefficients so derivatives are read off exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMetric {
    pub constant: Vec<Vec<Rational>>,
    /// `linear[k][i][j] = ∂_k g_ij`
    pub linear: Vec<Vec<Vec<Rational>>>,
}

impl AffineMetric {
    pub fn new(freqs: &FrequencyList) -> Self {
        let dim = freqs.dim();
        let t = dim - 1;
        let mut constant = vec![vec![Rational::zero(); dim]; dim];
        let mut linear = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        constant[0][t] = Rational::one();
        constant[t][0] = Rational::one();
        let half = Rational::new(1, 2);
        for k in 0..freqs.n() {
            let (x, y) = (1 + 2 * k, 2 + 2 * k);
            let inv = Rational::one() / freqs.lambda(k);
            constant[x][x] = inv;
            constant[y][y] = inv;
            // g_{x t} = y / 2, g_{y t} = -x / 2
            linear[y][x][t] = half;
            linear[y][t][x] = half;
            linear[x][y][t] = -half;
            linear[x][t][y] = -half;
        }
        Self { constant, linear }
    }

    pub fn dim(&self) -> usize {
        self.constant.len()
    }

    pub fn matrix_at(&self, coords: &[f64]) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            let mut g = rational_to_f64(&self.constant[i][j]);
            for (k, p) in coords.iter().enumerate() {
                let l = &self.linear[k][i][j];
                if !l.is_zero() {
                    g += rational_to_f64(l) * p;
                }
            }
            g
        })
    }

    pub fn derivative(&self, k: usize, i: usize, j: usize) -> Rational {
        self.linear[k][i][j]
    }
}

fn check_vec(freqs: &FrequencyList, len: usize) -> Result<()> {
    freqs.check_dim(len)
}

/// `g_p(u, w)` for coordinate vectors in the basis `(∂z, ∂x_1, ∂y_1, …, ∂t)`.
pub fn metric_at(p: &FloatElement, u: &[f64], w: &[f64], freqs: &FrequencyList) -> Result<f64> {
    check_vec(freqs, p.v.len() + 2)?;
    check_vec(freqs, u.len())?;
    check_vec(freqs, w.len())?;
    let g = AffineMetric::new(freqs).matrix_at(&p.to_coords());
    let mut acc = 0.0;
    for i in 0..u.len() {
        for j in 0..w.len() {
            acc += u[i] * g[(i, j)] * w[j];
        }
    }
    Ok(acc)
}

/// Christoffel symbols `Γ^k_ij`, stored as `gamma[k][i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Second derivatives `-Γ^k_ij v^i v^j` of the geodesic equation.
    pub fn acceleration(&self, velocity: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        acc -= self.gamma[k][i][j] * velocity[i] * velocity[j];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Levi-Civita connection of the coordinate metric at `p`.
pub fn christoffel(freqs: &FrequencyList, p: &FloatElement) -> Result<Christoffel> {
    check_vec(freqs, p.v.len() + 2)?;
    let metric = AffineMetric::new(freqs);
    let dim = metric.dim();
    let g = metric.matrix_at(&p.to_coords());
    let ginv = g.try_inverse().ok_or_else(|| Error::ShapeMismatch("degenerate metric".into()))?;
    let d = |k: usize, i: usize, j: usize| rational_to_f64(&metric.derivative(k, i, j));
    let mut gamma = vec![vec![vec![0.0; dim]; dim]; dim];
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for l in 0..dim {
                    let inv = ginv[(k, l)];
                    if inv != 0.0 {
                        acc += inv * (d(i, l, j) + d(j, l, i) - d(l, i, j));
                    }
                }
                gamma[k][i][j] = 0.5 * acc;
            }
        }
    }
    Ok(Christoffel { gamma })
}

/// The table of symbols as printed in the source, with zero-based indices
/// `0 = z`, `1 + 2i = x_i`, `2 + 2i = y_i`, `2n + 1 = t`, completed by symmetry.
pub fn printed_christoffel(freqs: &FrequencyList, p: &FloatElement) -> Christoffel {
    let n = freqs.n();
    let dim = 2 * n + 2;
    let t = dim - 1;
    let mut gamma = vec![vec![vec![0.0; dim]; dim]; dim];
    let mut set = |k: usize, i: usize, j: usize, v: f64| {
        gamma[k][i][j] = v;
        gamma[k][j][i] = v;
    };
    for i in 0..n {
        let l = rational_to_f64(freqs.lambda(i));
        let (x, y) = (1 + 2 * i, 2 + 2 * i);
        set(0, t, x, -p.v[2 * i] * l / 4.0);
        set(0, t, y, -p.v[2 * i + 1] * l / 4.0);
        set(x, t, x, l / 2.0);
        set(y, t, x, -l / 2.0);
    }
    Christoffel { gamma }
}

/// One entry where the printed and the derived symbols differ.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelDiscrepancy {
    pub upper: usize,
    pub lower: (usize, usize),
    pub printed: f64,
    pub derived: f64,
}

/// Entries `Γ^k_ij` with `i <= j` where the two tables differ by more than `tol`.
pub fn christoffel_discrepancies(freqs: &FrequencyList, p: &FloatElement, tol: f64) -> Result<Vec<ChristoffelDiscrepancy>> {
    let derived = christoffel(freqs, p)?;
    let printed = printed_christoffel(freqs, p);
    let dim = derived.dim();
    let mut out = Vec::new();
    for k in 0..dim {
        for i in 0..dim {
            for j in i..dim {
                let (a, b) = (printed.get(k, i, j), derived.get(k, i, j));
                if libm::fabs(a - b) > tol {
                    out.push(ChristoffelDiscrepancy { upper: k, lower: (i, j), printed: a, derived: b });
                }
            }
        }
    }
    Ok(out)
}
