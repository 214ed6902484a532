//! Sparse multivariate polynomials over `f64`.
//!
//! Monomials are ordered graded-lexicographically: lower total degree first,
//! and within one degree the larger exponent of `x_1` (then `x_2`, ...) first.
//! This gives the basis order `1, x1, ..., xn, x1^2, x1 x2, ..., x1 xn, x2^2, ...`
//! used for moment matrices, moment vectors and every serialized output.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, check_dim};

/// Coefficients with magnitude at or below this are dropped after arithmetic.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// A multi-index `alpha`, i.e. the monomial `x^alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    /// The variable `x_{i+1}` (zero based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.n(), other.n());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Every positive exponent replaced by one.
    pub fn squarefree(&self) -> Monomial {
        Monomial(self.0.iter().map(|&e| e.min(1)).collect())
    }

    pub fn is_squarefree(&self) -> bool {
        self.0.iter().all(|&e| e <= 1)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree at most `r` in `n` variables, graded-lex sorted.
///
/// With `squarefree` only multilinear monomials are kept (the basis used on the
/// binary hypercube).
pub fn monomial_basis(n: usize, r: u32, squarefree: bool) -> Vec<Monomial> {
    fn rec(
        i: usize,
        left: u32,
        cap: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<Monomial>,
    ) {
        if i == cur.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in 0..=left.min(cap) {
            cur[i] = e;
            rec(i + 1, left - e, cap, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    let cap = if squarefree { 1 } else { r };
    rec(0, r, cap, &mut vec![0; n], &mut out);
    out.sort();
    out
}

/// `C(n + r, n)`, the number of monomials of degree at most `r` in `n` variables.
pub fn basis_size(n: usize, r: u32) -> usize {
    binomial(n + r as usize, n)
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Neumaier-compensated sum, taken in iteration order.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in it {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sparse polynomial in `n` variables with real coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyJson {
    n: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    exp: Vec<u32>,
    coef: f64,
}

impl TryFrom<PolyJson> for MultiPoly {
    type Error = Error;

    fn try_from(j: PolyJson) -> Result<Self> {
        let mut p = MultiPoly::zero(j.n);
        for t in j.terms {
            check_dim(j.n, t.exp.len())?;
            if !t.coef.is_finite() {
                return Err(Error::Parse(format!("non-finite coefficient {}", t.coef)));
            }
            p.add_term(Monomial(t.exp), t.coef);
        }
        p.prune();
        Ok(p)
    }
}

impl From<MultiPoly> for PolyJson {
    fn from(p: MultiPoly) -> Self {
        PolyJson {
            n: p.n,
            terms: p
                .terms
                .into_iter()
                .map(|(m, c)| TermJson { exp: m.0, coef: c })
                .collect(),
        }
    }
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c);
        p.prune();
        p
    }

    /// The coordinate polynomial `x_{i+1}`.
    pub fn var(n: usize, i: usize) -> Self {
        Self::monomial(Monomial::var(n, i), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero(m.n());
        p.add_term(m, c);
        p.prune();
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials are merged.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            check_dim(n, e.len())?;
            p.add_term(Monomial(e), c);
        }
        p.prune();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maximum total degree over the terms; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coef(&Monomial::one(self.n))
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: f64) {
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    /// Drops every coefficient with `|c| <= PRUNE_THRESHOLD`.
    pub fn prune(&mut self) {
        self.prune_below(PRUNE_THRESHOLD);
    }

    pub fn prune_below(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.abs() > threshold);
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x.len())?;
        Ok(compensated_sum(self.terms.iter().map(|(m, &c)| c * m.eval(x))))
    }

    /// `sum |p_alpha|`, the coefficient 1-norm.
    pub fn coef_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn try_add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        check_dim(self.n, other.n)?;
        Ok(self.combine(other, 1.0))
    }

    pub fn try_sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        check_dim(self.n, other.n)?;
        Ok(self.combine(other, -1.0))
    }

    pub fn try_mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        check_dim(self.n, other.n)?;
        let mut out = MultiPoly::zero(self.n);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        let mut out = MultiPoly {
            n: self.n,
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), c * s)).collect(),
        };
        out.prune();
        out
    }

    fn combine(&self, other: &MultiPoly, sign: f64) -> MultiPoly {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), sign * c);
        }
        out.prune();
        out
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &MultiPoly) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), s * c);
        }
        self.prune();
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.n, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Unique multilinear representative modulo `x_i^2 - x_i`; agrees with
    /// `self` on every point of `{0,1}^n`.
    pub fn reduce_binary(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n);
        for (m, &c) in &self.terms {
            out.add_term(m.squarefree(), c);
        }
        out.prune();
        out
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n);
        for (m, &c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut d = m.0.clone();
            d[i] -= 1;
            out.add_term(Monomial(d), c * e as f64);
        }
        out.prune();
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.n).map(|i| self.derivative(i)).collect()
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn max_coef_diff(&self, other: &MultiPoly) -> f64 {
        let mut diff = self.clone();
        for (m, &c) in &other.terms {
            diff.add_term(m.clone(), -c);
        }
        diff.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_add(rhs).expect("dimension mismatch")
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_sub(rhs).expect("dimension mismatch")
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_mul(rhs).expect("dimension mismatch")
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            if m.is_one() {
                write!(f, "{}", c.abs())?;
            } else if c.abs() == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", c.abs())?;
            }
        }
        Ok(())
    }
}

/// Arithmetic selector for [`arith`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    /// Scale the left operand; the right operand is ignored.
    Scale(f64),
}

pub fn arith(p: &MultiPoly, q: &MultiPoly, op: ArithOp) -> Result<MultiPoly> {
    match op {
        ArithOp::Add => p.try_add(q),
        ArithOp::Sub => p.try_sub(q),
        ArithOp::Mul => p.try_mul(q),
        ArithOp::Scale(s) => Ok(p.scale(s)),
    }
}

/// A truncated moment sequence `y_alpha`, indexed by all `alpha` with `|alpha| <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    n: usize,
    order: u32,
    values: BTreeMap<Monomial, f64>,
}

impl MomentVector {
    /// Moments of the zero measure; set entries with [`MomentVector::set`].
    pub fn zeros(n: usize, order: u32) -> Self {
        let values = monomial_basis(n, order, false)
            .into_iter()
            .map(|m| (m, 0.0))
            .collect();
        MomentVector { n, order, values }
    }

    /// Moments of the Dirac measure at `x`.
    pub fn point_mass(x: &[f64], order: u32) -> Self {
        let values = monomial_basis(x.len(), order, false)
            .into_iter()
            .map(|m| {
                let v = m.eval(x);
                (m, v)
            })
            .collect();
        MomentVector {
            n: x.len(),
            order,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, m: &Monomial) -> Option<f64> {
        self.values.get(m).copied()
    }

    pub fn set(&mut self, m: &Monomial, v: f64) -> Result<()> {
        check_dim(self.n, m.n())?;
        match self.values.get_mut(m) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(Error::DegreeExceedsOrder {
                degree: m.degree(),
                order: self.order,
            }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.values.iter().map(|(m, &v)| (m, v))
    }
}

/// The Riesz functional `L_y(p) = sum_alpha p_alpha y_alpha`.
pub fn riesz(p: &MultiPoly, y: &MomentVector) -> Result<f64> {
    check_dim(y.n, p.n)?;
    if p.degree() > y.order {
        return Err(Error::DegreeExceedsOrder {
            degree: p.degree(),
            order: y.order,
        });
    }
    Ok(compensated_sum(p.terms().map(|(m, c)| c * y.values[m])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(&[u32], f64)]) -> MultiPoly {
        MultiPoly::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = poly(1, &[(&[0], 1.0), (&[1], 2.0)]);
        assert_eq!(p.eval(&[3.0]).unwrap(), 7.0);
        assert_eq!(MultiPoly::zero(2).eval(&[1.5, -2.0]).unwrap(), 0.0);
        let q = poly(2, &[(&[1, 1], 1.0), (&[0, 2], -1.0)]);
        assert_eq!(q.eval(&[2.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(
            p.eval(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coef_norm_examples() {
        assert_eq!(poly(1, &[(&[0], 1.0), (&[1], 2.0)]).coef_norm(), 3.0);
        assert_eq!(MultiPoly::zero(3).coef_norm(), 0.0);
        assert_eq!(poly(2, &[(&[1, 0], 1.0), (&[0, 1], -1.0)]).coef_norm(), 2.0);
    }

    #[test]
    fn arith_examples() {
        let x = MultiPoly::var(1, 0);
        assert_eq!(&x * &x, poly(1, &[(&[2], 1.0)]));
        let p = poly(1, &[(&[0], 1.0), (&[1], 1.0)]);
        assert!((&p - &p).is_zero());
        let s = poly(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        assert_eq!(
            arith(&s, &s, ArithOp::Scale(-1.0)).unwrap(),
            poly(2, &[(&[1, 0], -1.0), (&[0, 1], -1.0)])
        );
        assert!(arith(&s, &x, ArithOp::Add).is_err());
    }

    #[test]
    fn pruning_threshold() {
        let p = poly(1, &[(&[1], 1.0), (&[2], 1e-15)]);
        assert_eq!(p.len(), 1);
        let q = poly(1, &[(&[1], 1.0), (&[2], 2e-14)]);
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn reduce_binary_examples() {
        assert_eq!(
            poly(1, &[(&[3], 1.0)]).reduce_binary(),
            poly(1, &[(&[1], 1.0)])
        );
        assert_eq!(
            poly(2, &[(&[2, 2], 1.0), (&[1, 1], 1.0)]).reduce_binary(),
            poly(2, &[(&[1, 1], 2.0)])
        );
        assert_eq!(
            MultiPoly::constant(2, 1.0).reduce_binary(),
            MultiPoly::constant(2, 1.0)
        );
    }

    #[test]
    fn basis_examples() {
        let b = monomial_basis(1, 2, false);
        assert_eq!(
            b,
            vec![
                Monomial::new(vec![0]),
                Monomial::new(vec![1]),
                Monomial::new(vec![2])
            ]
        );
        let b = monomial_basis(2, 1, false);
        assert_eq!(
            b,
            vec![
                Monomial::new(vec![0, 0]),
                Monomial::new(vec![1, 0]),
                Monomial::new(vec![0, 1])
            ]
        );
        let b = monomial_basis(2, 2, true);
        assert_eq!(
            b,
            vec![
                Monomial::new(vec![0, 0]),
                Monomial::new(vec![1, 0]),
                Monomial::new(vec![0, 1]),
                Monomial::new(vec![1, 1])
            ]
        );
        // degree-2 block order: x1^2, x1 x2, x2^2
        let b = monomial_basis(2, 2, false);
        assert_eq!(&b[3..], &[
            Monomial::new(vec![2, 0]),
            Monomial::new(vec![1, 1]),
            Monomial::new(vec![0, 2])
        ]);
    }

    #[test]
    fn basis_sizes_match_binomial() {
        for n in 1..=6 {
            for r in 0..=8 {
                assert_eq!(monomial_basis(n, r, false).len(), basis_size(n, r));
            }
        }
    }

    #[test]
    fn riesz_examples() {
        let mut y = MomentVector::zeros(1, 2);
        y.set(&Monomial::new(vec![0]), 1.0).unwrap();
        y.set(&Monomial::new(vec![1]), 3.0).unwrap();
        y.set(&Monomial::new(vec![2]), 5.0).unwrap();
        let p = poly(1, &[(&[0], 1.0), (&[1], 2.0)]);
        assert_eq!(riesz(&p, &y).unwrap(), 7.0);
        assert_eq!(riesz(&MultiPoly::zero(1), &y).unwrap(), 0.0);
        assert_eq!(riesz(&poly(1, &[(&[2], 1.0)]), &y).unwrap(), 5.0);
        assert!(matches!(
            riesz(&poly(1, &[(&[3], 1.0)]), &y),
            Err(Error::DegreeExceedsOrder { .. })
        ));
    }

    #[test]
    fn json_shape() {
        let p = poly(2, &[(&[0, 1], -1.0), (&[1, 0], 2.5), (&[0, 0], 1.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"n":2,"terms":[{"exp":[0,0],"coef":1.0},{"exp":[1,0],"coef":2.5},{"exp":[0,1],"coef":-1.0}]}"#
        );
        let back: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"n":2,"terms":[{"exp":[1],"coef":1.0}]}"#).is_err());
    }

    #[test]
    fn derivative_and_display() {
        let p = poly(2, &[(&[2, 1], 3.0), (&[0, 1], -1.0)]);
        assert_eq!(p.derivative(0), poly(2, &[(&[1, 1], 6.0)]));
        assert_eq!(p.derivative(1), poly(2, &[(&[2, 0], 3.0), (&[0, 0], -1.0)]));
        assert_eq!(p.to_string(), "-x2 + 3*x1^2*x2");
    }
}
