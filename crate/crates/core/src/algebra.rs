//! The oscillator algebra `osc_n(λ_1, …, λ_n)`.
//!
//! Basis order is `(Z, X_1, Y_1, …, X_n, Y_n, T)` with the non-trivial brackets
//! `[X_i, Y_i] = Z`, `[T, X_i] = λ_i Y_i`, `[T, Y_i] = -λ_i X_i` and the
//! ad-invariant form `λ_i⟨X_i,X_i⟩ = λ_i⟨Y_i,Y_i⟩ = ⟨Z,T⟩ = 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Default absolute tolerance for float-mode causal decisions.
pub const CAUSAL_TOL: f64 = 1e-12;

/// The frequencies `λ_1, …, λ_n`, all strictly positive rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyList {
    lambdas: Vec<Rational>,
}

/// A maximal run of equal consecutive frequencies: `ρ_ν` with multiplicity `m_ν`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyRun {
    pub value: Rational,
    /// index of the first frequency of the run
    pub start: usize,
    pub multiplicity: usize,
}

impl FrequencyList {
    pub fn new(lambdas: Vec<Rational>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidFrequencies("need at least one frequency".into()));
        }
        if let Some(bad) = lambdas.iter().find(|l| **l <= Rational::zero()) {
            return Err(Error::InvalidFrequencies(format!("frequency {bad} is not positive")));
        }
        Ok(Self { lambdas })
    }

    pub fn from_integers(lambdas: &[i128]) -> Result<Self> {
        Self::new(lambdas.iter().map(|&l| Rational::from_integer(l)).collect())
    }

    /// `Osc_1(1)`.
    pub fn unit() -> Self {
        Self { lambdas: vec![Rational::one()] }
    }

    /// Number of frequency pairs `n`.
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Algebra dimension `2n + 2`.
    pub fn dim(&self) -> usize {
        2 * self.n() + 2
    }

    pub fn lambdas(&self) -> &[Rational] {
        &self.lambdas
    }

    pub fn lambda(&self, i: usize) -> &Rational {
        &self.lambdas[i]
    }

    pub fn lambdas_f64(&self) -> Vec<f64> {
        self.lambdas.iter().map(f64::from_rational).collect()
    }

    /// Consecutive runs of equal frequencies, in the given order.
    pub fn runs(&self) -> Vec<FrequencyRun> {
        let mut runs: Vec<FrequencyRun> = Vec::new();
        for (i, l) in self.lambdas.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.value == *l => run.multiplicity += 1,
                _ => runs.push(FrequencyRun { value: *l, start: i, multiplicity: 1 }),
            }
        }
        runs
    }

    /// Groups equal frequencies globally; returns `(value, indices)` sorted by value.
    pub fn canonical_groups(&self) -> Vec<(Rational, Vec<usize>)> {
        let mut groups: Vec<(Rational, Vec<usize>)> = Vec::new();
        for (i, l) in self.lambdas.iter().enumerate() {
            match groups.iter_mut().find(|(v, _)| v == l) {
                Some((_, idx)) => idx.push(i),
                None => groups.push((*l, vec![i])),
            }
        }
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        groups
    }

    /// The frequency list reordered so equal values are consecutive.
    pub fn canonicalized(&self) -> Self {
        let lambdas = self
            .canonical_groups()
            .into_iter()
            .flat_map(|(v, idx)| core::iter::repeat_n(v, idx.len()))
            .collect();
        Self { lambdas }
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found })
        }
    }
}

/// Causal character of a vector (or of the geodesic it generates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CausalClass {
    Lightlike,
    Timelike,
    Spacelike,
}

/// Coordinates `(d, b_1, c_1, …, b_n, c_n, a)` in the basis `Z, {X_i, Y_i}, T`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVector<S> {
    coords: Vec<S>,
}

impl<S: Scalar> AlgebraVector<S> {
    pub fn from_coords(coords: Vec<S>) -> Result<Self> {
        if coords.len() < 4 || coords.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (coords.len() / 2).max(2),
                found: coords.len(),
            });
        }
        Ok(Self { coords })
    }

    pub fn new(d: S, bc: Vec<(S, S)>, a: S) -> Self {
        let mut coords = Vec::with_capacity(2 * bc.len() + 2);
        coords.push(d);
        for (b, c) in bc {
            coords.push(b);
            coords.push(c);
        }
        coords.push(a);
        Self { coords }
    }

    pub fn zero(n: usize) -> Self {
        Self { coords: vec![S::zero(); 2 * n + 2] }
    }

    /// The `i`-th basis vector in the order `Z, X_1, Y_1, …, T`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zero(n);
        v.coords[i] = S::one();
        v
    }

    pub fn z_dir(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn t_dir(n: usize) -> Self {
        Self::basis(n, 2 * n + 1)
    }

    pub fn x_dir(n: usize, i: usize) -> Self {
        Self::basis(n, 1 + 2 * i)
    }

    pub fn y_dir(n: usize, i: usize) -> Self {
        Self::basis(n, 2 + 2 * i)
    }

    pub fn n(&self) -> usize {
        (self.coords.len() - 2) / 2
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn d(&self) -> &S {
        &self.coords[0]
    }

    pub fn a(&self) -> &S {
        &self.coords[self.coords.len() - 1]
    }

    pub fn b(&self, i: usize) -> &S {
        &self.coords[1 + 2 * i]
    }

    pub fn c(&self, i: usize) -> &S {
        &self.coords[2 + 2 * i]
    }

    /// The `(b_1, c_1, …, b_n, c_n)` block.
    pub fn bc(&self) -> &[S] {
        &self.coords[1..self.coords.len() - 1]
    }

    pub fn add(&self, other: &Self) -> Self {
        let coords = self.coords.iter().zip(&other.coords).map(|(x, y)| x.clone() + y.clone()).collect();
        Self { coords }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coords = self.coords.iter().zip(&other.coords).map(|(x, y)| x.clone() - y.clone()).collect();
        Self { coords }
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { coords: self.coords.iter().map(|x| x.clone() * s.clone()).collect() }
    }

    pub fn map<T, F: Fn(&S) -> T>(&self, f: F) -> AlgebraVector<T> {
        AlgebraVector { coords: self.coords.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> AlgebraVector<f64> {
        self.map(S::to_f64)
    }
}

fn check_pair<S: Scalar>(x: &AlgebraVector<S>, y: &AlgebraVector<S>, freqs: &FrequencyList) -> Result<()> {
    freqs.check_dim(x.dim())?;
    freqs.check_dim(y.dim())
}

/// The Lie bracket `[x, y]`.
pub fn bracket<S: Scalar>(x: &AlgebraVector<S>, y: &AlgebraVector<S>, freqs: &FrequencyList) -> Result<AlgebraVector<S>> {
    check_pair(x, y, freqs)?;
    let n = freqs.n();
    let (a, a2) = (x.a().clone(), y.a().clone());
    let mut out = AlgebraVector::zero(n);
    let mut z = S::zero();
    for i in 0..n {
        let l = S::from_rational(freqs.lambda(i));
        let (b, c) = (x.b(i).clone(), x.c(i).clone());
        let (b2, c2) = (y.b(i).clone(), y.c(i).clone());
        z += b.clone() * c2.clone() - c.clone() * b2.clone();
        out.coords[1 + 2 * i] = l.clone() * (c * a2.clone() - a.clone() * c2);
        out.coords[2 + 2 * i] = l * (a.clone() * b2 - a2.clone() * b);
    }
    out.coords[0] = z;
    Ok(out)
}

/// The ad-invariant Lorentzian form.
pub fn inner<S: Scalar>(x: &AlgebraVector<S>, y: &AlgebraVector<S>, freqs: &FrequencyList) -> Result<S> {
    check_pair(x, y, freqs)?;
    let mut acc = x.d().clone() * y.a().clone() + x.a().clone() * y.d().clone();
    for i in 0..freqs.n() {
        let l = S::from_rational(freqs.lambda(i));
        acc += (x.b(i).clone() * y.b(i).clone() + x.c(i).clone() * y.c(i).clone()) / l;
    }
    Ok(acc)
}

/// `2ad + Σ (b_k² + c_k²)/λ_k`, the squared norm `⟨X, X⟩`.
pub fn causal_norm<S: Scalar>(x: &AlgebraVector<S>, freqs: &FrequencyList) -> Result<S> {
    inner(x, x, freqs)
}

pub fn causal_class<S: Scalar>(x: &AlgebraVector<S>, freqs: &FrequencyList) -> Result<CausalClass> {
    causal_class_with_tol(x, freqs, CAUSAL_TOL)
}

pub fn causal_class_with_tol<S: Scalar>(x: &AlgebraVector<S>, freqs: &FrequencyList, tol: f64) -> Result<CausalClass> {
    Ok(match causal_norm(x, freqs)?.sign_with_tol(tol) {
        Ordering::Equal => CausalClass::Lightlike,
        Ordering::Less => CausalClass::Timelike,
        Ordering::Greater => CausalClass::Spacelike,
    })
}

/// Gram matrix of the form in the basis `Z, X_1, Y_1, …, T`.
pub fn gram_matrix<S: Scalar>(freqs: &FrequencyList) -> Vec<Vec<S>> {
    let dim = freqs.dim();
    let mut g = vec![vec![S::zero(); dim]; dim];
    g[0][dim - 1] = S::one();
    g[dim - 1][0] = S::one();
    for i in 0..freqs.n() {
        let inv = S::one() / S::from_rational(freqs.lambda(i));
        g[1 + 2 * i][1 + 2 * i] = inv.clone();
        g[2 + 2 * i][2 + 2 * i] = inv;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    type Q = Rational;

    fn freqs(ls: &[(i128, i128)]) -> FrequencyList {
        FrequencyList::new(ls.iter().map(|&(p, q)| rat(p, q)).collect()).unwrap()
    }

    /// Brackets of basis vectors read straight off the defining relations.
    fn table_bracket(i: usize, j: usize, f: &FrequencyList) -> AlgebraVector<Q> {
        let n = f.n();
        let t = 2 * n + 1;
        let mut out = AlgebraVector::<Q>::zero(n);
        let mut set = |k: usize, v: Q| {
            let mut c = out.clone().into_coords();
            c[k] += v;
            out = AlgebraVector::from_coords(c).unwrap();
        };
        for p in 0..n {
            let (x, y, l) = (1 + 2 * p, 2 + 2 * p, *f.lambda(p));
            if (i, j) == (x, y) {
                set(0, int(1));
            }
            if (i, j) == (y, x) {
                set(0, int(-1));
            }
            if (i, j) == (t, x) {
                set(y, l);
            }
            if (i, j) == (x, t) {
                set(y, -l);
            }
            if (i, j) == (t, y) {
                set(x, -l);
            }
            if (i, j) == (y, t) {
                set(x, l);
            }
        }
        out
    }

    #[test]
    fn basis_brackets_match_the_structure_table() {
        let f = freqs(&[(1, 1), (3, 2)]);
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                let got = bracket(&AlgebraVector::basis(2, i), &AlgebraVector::basis(2, j), &f).unwrap();
                assert_eq!(got, table_bracket(i, j, &f), "[e{i}, e{j}]");
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let f = freqs(&[(1, 1), (3, 1)]);
        let x1 = AlgebraVector::<Q>::x_dir(2, 0);
        let y1 = AlgebraVector::<Q>::y_dir(2, 0);
        assert_eq!(bracket(&x1, &y1, &f).unwrap(), AlgebraVector::z_dir(2));
        assert_eq!(bracket(&x1, &x1, &f).unwrap(), AlgebraVector::zero(2));
        let rhs = x1.add(&AlgebraVector::y_dir(2, 1));
        let expected = y1.sub(&AlgebraVector::x_dir(2, 1).scale(&int(3)));
        assert_eq!(bracket(&AlgebraVector::t_dir(2), &rhs, &f).unwrap(), expected);
    }

    #[test]
    fn inner_examples() {
        let f = freqs(&[(2, 1)]);
        let z = AlgebraVector::<Q>::z_dir(1);
        let t = AlgebraVector::<Q>::t_dir(1);
        assert_eq!(inner(&z, &t, &f).unwrap(), int(1));
        assert_eq!(inner(&z, &z, &f).unwrap(), int(0));
        let x = AlgebraVector::<Q>::x_dir(1, 0);
        assert_eq!(inner(&x, &x, &f).unwrap(), rat(1, 2));
    }

    #[test]
    fn causal_examples() {
        let f = FrequencyList::unit();
        assert_eq!(causal_class(&AlgebraVector::<Q>::z_dir(1), &f).unwrap(), CausalClass::Lightlike);
        let v = AlgebraVector::<Q>::new(int(1), vec![(int(0), int(0))], int(-1));
        assert_eq!(causal_class(&v, &f).unwrap(), CausalClass::Timelike);
        assert_eq!(causal_class(&AlgebraVector::<Q>::x_dir(1, 0), &f).unwrap(), CausalClass::Spacelike);
        let tiny = AlgebraVector::<f64>::new(1e-14, vec![(0.0, 0.0)], 1.0);
        assert_eq!(causal_class(&tiny, &f).unwrap(), CausalClass::Lightlike);
        assert_eq!(causal_class_with_tol(&tiny, &f, 0.0).unwrap(), CausalClass::Spacelike);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = freqs(&[(1, 1), (1, 1)]);
        let x = AlgebraVector::<Q>::z_dir(1);
        assert_eq!(bracket(&x, &x, &f), Err(Error::DimensionMismatch { expected: 6, found: 4 }));
        assert!(inner(&x, &x, &f).is_err());
    }

    #[test]
    fn frequencies_must_be_positive() {
        assert!(FrequencyList::new(vec![int(1), int(0)]).is_err());
        assert!(FrequencyList::new(vec![]).is_err());
    }

    #[test]
    fn runs_are_consecutive_and_groups_global() {
        let f = FrequencyList::from_integers(&[2, 2, 1, 2]).unwrap();
        let runs = f.runs();
        assert_eq!(runs.len(), 3);
        assert_eq!((runs[0].multiplicity, runs[1].multiplicity, runs[2].multiplicity), (2, 1, 1));
        let groups = f.canonical_groups();
        assert_eq!(groups, vec![(int(1), vec![2]), (int(2), vec![0, 1, 3])]);
        assert_eq!(f.canonicalized().lambdas(), &[int(1), int(2), int(2), int(2)]);
        assert_eq!(f.canonicalized().runs().len(), 2);
    }
}
