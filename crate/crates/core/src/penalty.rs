//! Univariate penalty construction: concatenation polynomials, the smooth
//! step `q_k(lambda, N)`, its one-sided Chebyshev approximation, and the
//! Fekete–Markov–Lukács split of polynomials nonnegative on `[-1, 1]`.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdp::{Block, SDPProblem, Sense, SolveStatus};

/// `a = exp(-1 / (2e + 1)) ≈ 0.8561`.
pub fn a_const() -> f64 {
    (-1.0 / (2.0 * E + 1.0)).exp()
}

/// Number of equispaced points in the verification grid.
pub const GRID_POINTS: usize = 10_000;

/// Slack allowed when checking `p >= q` on the verification grid.
pub const GRID_SLACK: f64 = 1e-10;

/// Polynomial in the monomial basis, `coefs[i]` multiplying `t^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniPoly {
    coefs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coefs: Vec<f64>) -> Self {
        while coefs.last() == Some(&0.0) {
            coefs.pop();
        }
        UniPoly { coefs }
    }

    pub fn zero() -> Self {
        UniPoly { coefs: Vec::new() }
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coefs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coefs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let len = self.coefs.len().max(other.coefs.len());
        UniPoly::new(
            (0..len)
                .map(|i| {
                    self.coefs.get(i).copied().unwrap_or(0.0)
                        + other.coefs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> UniPoly {
        UniPoly::new(self.coefs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![0.0; self.coefs.len() + other.coefs.len() - 1];
        for (i, a) in self.coefs.iter().enumerate() {
            for (j, b) in other.coefs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// `self(inner(t))`, by Horner on polynomials.
    pub fn compose(&self, inner: &UniPoly) -> UniPoly {
        self.coefs
            .iter()
            .rev()
            .fold(UniPoly::zero(), |acc, &c| acc.mul(inner).add(&UniPoly::new(vec![c])))
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coef(&self) -> f64 {
        self.coefs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// Polynomial in the Chebyshev basis `T_0, T_1, ...` on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebPoly {
    cheb_coefs: Vec<f64>,
}

impl ChebPoly {
    pub fn new(cheb_coefs: Vec<f64>) -> Self {
        ChebPoly { cheb_coefs }
    }

    pub fn coefs(&self) -> &[f64] {
        &self.cheb_coefs
    }

    pub fn degree(&self) -> usize {
        self.cheb_coefs.len().saturating_sub(1)
    }

    /// Clenshaw recurrence.
    pub fn eval(&self, t: f64) -> f64 {
        let c = &self.cheb_coefs;
        if c.is_empty() {
            return 0.0;
        }
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c[1..].iter().rev() {
            let b0 = ck + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + t * b1 - b2
    }

    /// Exact change of basis through `T_(j+1) = 2t T_j - T_(j-1)`.
    pub fn to_unipoly(&self) -> UniPoly {
        let d = self.cheb_coefs.len();
        let mut out = vec![0.0; d.max(1)];
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 1.0];
        for (j, &c) in self.cheb_coefs.iter().enumerate() {
            let tj: &[f64] = match j {
                0 => &prev,
                1 => &cur,
                _ => {
                    let mut next = vec![0.0; j + 1];
                    for (i, &v) in cur.iter().enumerate() {
                        next[i + 1] += 2.0 * v;
                    }
                    for (i, &v) in prev.iter().enumerate() {
                        next[i] -= v;
                    }
                    prev = std::mem::replace(&mut cur, next);
                    &cur
                }
            };
            for (i, &v) in tj.iter().enumerate() {
                out[i] += c * v;
            }
        }
        UniPoly::new(out)
    }

    /// Adds a constant (shifts the `T_0` coefficient).
    pub fn shifted(&self, s: f64) -> ChebPoly {
        let mut c = self.cheb_coefs.clone();
        if c.is_empty() {
            c.push(0.0);
        }
        c[0] += s;
        ChebPoly::new(c)
    }
}

/// Parameters of the smooth step `q_k(lambda, N)` and its degree-`v` approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    /// Breakpoint in `[-1, 0)`; `-delta` on the ball.
    pub lambda: f64,
    /// Plateau height.
    #[serde(rename = "N")]
    pub n_height: f64,
    pub k: u32,
    pub v: u32,
}

impl PenaltySpec {
    pub fn new(lambda: f64, n_height: f64, k: u32, v: u32) -> Result<Self> {
        let s = PenaltySpec {
            lambda,
            n_height,
            k,
            v,
        };
        s.validate()?;
        Ok(s)
    }

    /// `k` picked by [`choose_k`] for `delta = |lambda|`.
    pub fn with_auto_k(lambda: f64, n_height: f64, v: u32) -> Result<Self> {
        Self::new(lambda, n_height, choose_k(lambda.abs(), v)?, v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= -1.0 && self.lambda < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [-1, 0), got {}",
                self.lambda
            )));
        }
        if !(self.n_height > 0.0 && self.n_height.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "N must be positive, got {}",
                self.n_height
            )));
        }
        if self.v <= self.k {
            return Err(Error::InvalidArgument(format!(
                "need v > k, got v = {}, k = {}",
                self.v, self.k
            )));
        }
        Ok(())
    }
}

/// Taylor coefficients `a_0..a_k` of `phi(u) = (1 - 4u)^(-1/2) / 2 - 1/2` at 0.
pub fn phi_taylor_coeffs(k: u32) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut a = 1.0;
    for i in 1..=k {
        out.push(a);
        a *= 4.0 * (i as f64 + 0.5) / (i as f64 + 1.0);
    }
    out
}

/// `c_k(t) = t + (2t - 1) T_k(t (1 - t))`, `T_k` the order-`k` Taylor polynomial of `phi`.
pub fn concat_poly(k: u32) -> UniPoly {
    let taylor = UniPoly::new(phi_taylor_coeffs(k));
    let u = UniPoly::new(vec![0.0, 1.0, -1.0]);
    let t = UniPoly::new(vec![0.0, 1.0]);
    let two_t_minus_1 = UniPoly::new(vec![-1.0, 2.0]);
    t.add(&two_t_minus_1.mul(&taylor.compose(&u)))
}

/// The smooth step: `0` on `[0, 1]`, `N` on `[-1, lambda]`, `N c_k(t / lambda)` between.
pub fn q_eval(spec: &PenaltySpec, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [-1, 1]")));
    }
    Ok(q_with(&concat_poly(spec.k), spec, t))
}

fn q_with(ck: &UniPoly, spec: &PenaltySpec, t: f64) -> f64 {
    if t >= 0.0 {
        0.0
    } else if t <= spec.lambda {
        spec.n_height
    } else {
        spec.n_height * ck.eval(t / spec.lambda)
    }
}

/// `max{0, floor((delta v - 2e) / (2e + delta))}`.
pub fn choose_k(delta: f64, v: u32) -> Result<u32> {
    if !(delta > 0.0 && delta <= 1.0) || v < 1 {
        return Err(Error::InvalidArgument(format!(
            "choose_k needs delta in (0, 1] and v >= 1, got delta = {delta}, v = {v}"
        )));
    }
    let k = ((delta * v as f64 - 2.0 * E) / (2.0 * E + delta)).floor();
    Ok(if k > 0.0 { k as u32 } else { 0 })
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `V = 3 N |lambda|^(-k) 4^k k! k`; infinite for `k = 0`.
pub fn total_variation_bound(spec: &PenaltySpec) -> f64 {
    if spec.k == 0 {
        return f64::INFINITY;
    }
    let k = spec.k as i32;
    3.0 * spec.n_height * spec.lambda.abs().powi(-k) * 4f64.powi(k) * factorial(spec.k)
        * spec.k as f64
}

/// `4 N |lambda|^(-k) 4^k k! / (v - k)^k`.
pub fn theoretical_shift(spec: &PenaltySpec) -> f64 {
    let k = spec.k as i32;
    4.0 * spec.n_height * spec.lambda.abs().powi(-k) * 4f64.powi(k) * factorial(spec.k)
        / ((spec.v - spec.k) as f64).powi(k)
}

/// `8 N e^2 a^(|lambda| v)`.
pub fn jackson_error_bound(spec: &PenaltySpec) -> f64 {
    jackson_envelope(spec.n_height, spec.lambda.abs() * spec.v as f64)
}

fn jackson_envelope(n_height: f64, exponent: f64) -> f64 {
    8.0 * n_height * E * E * a_const().powf(exponent)
}

/// Chebyshev points of the second kind, `cos(j pi / v)`, `j = 0..=v`.
pub fn cheb_nodes(v: u32) -> Vec<f64> {
    if v == 0 {
        return vec![1.0];
    }
    (0..=v).map(|j| (j as f64 * PI / v as f64).cos()).collect()
}

/// 10^4 equispaced points on `[-1, 1]`, the breakpoints `lambda` and `0`,
/// and the interpolation nodes, sorted.
pub fn verification_grid(spec: &PenaltySpec) -> Vec<f64> {
    let mut g: Vec<f64> = (0..GRID_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    g.push(spec.lambda);
    g.push(0.0);
    g.extend(cheb_nodes(spec.v));
    g.sort_by(f64::total_cmp);
    g
}

/// Degree-`v` interpolant of `q` at the second-kind points, together with the
/// sup-error `max |q - interpolant|` over the verification grid.
pub fn cheb_fit(spec: &PenaltySpec) -> Result<(ChebPoly, f64)> {
    spec.validate()?;
    let ck = concat_poly(spec.k);
    let v = spec.v as usize;
    let nodes = cheb_nodes(spec.v);
    let vals: Vec<f64> = nodes.iter().map(|&t| q_with(&ck, spec, t)).collect();
    let coefs = (0..=v)
        .map(|k| {
            let s: f64 = (0..=v)
                .map(|j| {
                    let w = if j == 0 || j == v { 0.5 } else { 1.0 };
                    w * vals[j] * ((j * k) as f64 * PI / v as f64).cos()
                })
                .sum();
            let c = 2.0 * s / v as f64;
            if k == 0 || k == v { 0.5 * c } else { c }
        })
        .collect();
    let fit = ChebPoly::new(coefs);
    let err = verification_grid(spec)
        .into_iter()
        .map(|t| (fit.eval(t) - q_with(&ck, spec, t)).abs())
        .fold(0.0, f64::max);
    Ok((fit, err))
}

/// How the interpolant is lifted above `q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    /// `4 N |lambda|^(-k) 4^k k! / (v - k)^k`.
    #[default]
    Theoretical,
    /// `1.05` times the measured grid sup-error.
    Empirical,
}

impl std::str::FromStr for ShiftMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(ShiftMode::Theoretical),
            "empirical" => Ok(ShiftMode::Empirical),
            _ => Err(Error::InvalidArgument(format!("unknown shift mode {s:?}"))),
        }
    }
}

/// The approximation `p = interpolant + shift` with its diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct PenaltyPoly {
    pub spec: PenaltySpec,
    /// `p` itself, in Chebyshev form.
    pub cheb: ChebPoly,
    pub shift: f64,
    /// Mode actually used; `k = 0` always falls back to empirical.
    pub shift_mode: ShiftMode,
    /// `8 N e^2 a^(|lambda| v)`.
    pub jackson_bound: f64,
    /// `max |q - interpolant|` on the grid.
    pub grid_sup_error: f64,
    /// `max (p - q)` on the grid.
    pub grid_max_gap: f64,
    /// `min (p - q)` on the grid.
    pub grid_min_gap: f64,
}

impl PenaltyPoly {
    /// Monomial-basis form; poorly conditioned for large `v`.
    pub fn unipoly(&self) -> UniPoly {
        self.cheb.to_unipoly()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.cheb.eval(t)
    }
}

/// Builds `p >= q` and verifies the sandwich on the grid.
pub fn penalty_poly(spec: &PenaltySpec, mode: ShiftMode) -> Result<PenaltyPoly> {
    let (fit, err) = cheb_fit(spec)?;
    let shift_mode = if spec.k == 0 { ShiftMode::Empirical } else { mode };
    let shift = match shift_mode {
        ShiftMode::Theoretical => theoretical_shift(spec),
        ShiftMode::Empirical => 1.05 * err,
    };
    let p = fit.shifted(shift);
    let ck = concat_poly(spec.k);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in verification_grid(spec) {
        let d = p.eval(t) - q_with(&ck, spec, t);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo < -GRID_SLACK {
        return Err(Error::GridVerification(format!(
            "p - q reaches {lo:.3e} on the grid; v = {} is too small for k = {}",
            spec.v, spec.k
        )));
    }
    Ok(PenaltyPoly {
        spec: *spec,
        cheb: p,
        shift,
        shift_mode,
        jackson_bound: jackson_error_bound(spec),
        grid_sup_error: err,
        grid_max_gap: hi,
        grid_min_gap: lo,
    })
}

/// `h = h1 + (1 - t^2) h2` with Gram-certified SOS parts.
#[derive(Clone, Debug)]
pub struct FmlDecomposition {
    pub h1: UniPoly,
    pub h2: UniPoly,
    /// `h1 = b_s^T H1 b_s` on `b_s = (1, t, ..., t^s)`.
    pub gram1: DMatrix<f64>,
    /// `h2 = b_(s-1)^T H2 b_(s-1)`.
    pub gram2: DMatrix<f64>,
    /// Largest coefficient of `h - h1 - (1 - t^2) h2`.
    pub residual: f64,
}

/// Tolerance for the reconstruction of `h` from `(h1, h2)`.
pub const FML_TOL: f64 = 1e-7;

fn hankel_sum(g: &DMatrix<f64>) -> UniPoly {
    let s = g.nrows();
    if s == 0 {
        return UniPoly::zero();
    }
    let mut c = vec![0.0; 2 * s - 1];
    for i in 0..s {
        for j in 0..s {
            c[i + j] += g[(i, j)];
        }
    }
    UniPoly::new(c)
}

/// Fekete–Markov–Lukács decomposition of `h >= 0` on `[-1, 1]`, found by a
/// small Gram-matrix feasibility SDP.
pub fn fml_decompose(h: &UniPoly) -> Result<FmlDecomposition> {
    let grid_min = (0..GRID_POINTS)
        .map(|i| h.eval(-1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64))
        .fold(f64::INFINITY, f64::min);
    if grid_min < -1e-9 {
        return Err(Error::NotNonnegative(format!(
            "h reaches {grid_min:.3e} on [-1, 1]"
        )));
    }
    let s = h.degree().div_ceil(2);
    let mut prob = SDPProblem::new(Sense::Min);
    let g1 = prob.add_gram_block("H1", s + 1);
    let g2 = prob.add_gram_block("H2", s);
    // coefficient of t^c in b^T H1 b + (1 - t^2) b^T H2 b
    let mut matching = Block::equality("fml", 2 * s + 1);
    for i in 0..=s {
        for j in 0..=s {
            matching.add_term(i + j, i + j, g1.var(i, j), 1.0);
        }
    }
    for i in 0..s {
        for j in 0..s {
            matching.add_term(i + j, i + j, g2.var(i, j), 1.0);
            matching.add_term(i + j + 2, i + j + 2, g2.var(i, j), -1.0);
        }
    }
    for c in 0..=2 * s {
        matching.add_constant(c, c, -h.coefs().get(c).copied().unwrap_or(0.0));
    }
    prob.add_block(matching);
    let sol = prob.solve(1e-9)?;
    if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::NearOptimal) {
        return Err(Error::NotNonnegative(format!(
            "Gram feasibility problem ended with status {:?}",
            sol.status
        )));
    }
    let gram1 = g1.value(&sol.x);
    let gram2 = g2.value(&sol.x);
    let h1 = hankel_sum(&gram1);
    let h2 = hankel_sum(&gram2);
    let recon = h1.add(&UniPoly::new(vec![1.0, 0.0, -1.0]).mul(&h2));
    let residual = recon.sub(h).max_abs_coef();
    if residual > FML_TOL {
        return Err(Error::CertificateRejected(format!(
            "FML reconstruction error {residual:.3e} exceeds {FML_TOL:e}"
        )));
    }
    Ok(FmlDecomposition {
        h1,
        h2,
        gram1,
        gram2,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_coeffs_examples() {
        assert_eq!(phi_taylor_coeffs(3), vec![0.0, 1.0, 3.0, 10.0]);
        assert_eq!(phi_taylor_coeffs(0), vec![0.0]);
    }

    #[test]
    fn phi_recurrence_matches_closed_form() {
        // a_k = (1/2) 4^k / k! * prod_{i<k} (i + 1/2)
        let rec = phi_taylor_coeffs(30);
        for k in 1..=30u32 {
            let mut closed = 0.5;
            for i in 0..k {
                closed *= 4.0 * (i as f64 + 0.5) / (i + 1) as f64;
            }
            assert!((rec[k as usize] - closed).abs() <= 1e-12 * closed, "k = {k}");
        }
    }

    #[test]
    fn concat_poly_examples() {
        assert_eq!(concat_poly(0), UniPoly::new(vec![0.0, 1.0]));
        // t + (2t - 1)(u + 3u^2), u = t(1 - t)
        let u = UniPoly::new(vec![0.0, 1.0, -1.0]);
        let expect = UniPoly::new(vec![0.0, 1.0]).add(
            &UniPoly::new(vec![-1.0, 2.0]).mul(&u.add(&u.mul(&u).scale(3.0))),
        );
        assert!(concat_poly(2).sub(&expect).max_abs_coef() < 1e-14);
        for k in 0..=8 {
            assert!((concat_poly(k).eval(0.5) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn q_eval_examples() {
        let s = PenaltySpec::new(-0.5, 1.0, 2, 10).unwrap();
        assert_eq!(q_eval(&s, 0.25).unwrap(), 0.0);
        assert_eq!(q_eval(&s, -0.75).unwrap(), 1.0);
        assert!((q_eval(&s, -0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(q_eval(&s, 1.5).is_err());
    }

    #[test]
    fn choose_k_examples() {
        assert_eq!(choose_k(1.0, 10).unwrap(), 0);
        assert_eq!(choose_k(1.0, 20).unwrap(), 2);
        assert_eq!(choose_k(0.1, 50).unwrap(), 0);
        assert!(choose_k(0.0, 5).is_err());
    }

    #[test]
    fn total_variation_examples() {
        let s = PenaltySpec::new(-1.0, 1.0, 1, 5).unwrap();
        assert_eq!(total_variation_bound(&s), 12.0);
        let s = PenaltySpec::new(-0.5, 2.0, 1, 5).unwrap();
        assert_eq!(total_variation_bound(&s), 48.0);
        let s = PenaltySpec::new(-0.5, 2.0, 0, 5).unwrap();
        assert!(total_variation_bound(&s).is_infinite());
    }

    #[test]
    fn shift_and_jackson_examples() {
        let s = PenaltySpec::new(-1.0, 1.0, 1, 5).unwrap();
        assert_eq!(theoretical_shift(&s), 4.0);
        assert!((jackson_envelope(1.0, 0.0) - 59.112).abs() < 1e-3);
        let s2 = PenaltySpec { n_height: 2.0, ..s };
        assert_eq!(jackson_error_bound(&s2), 2.0 * jackson_error_bound(&s));
        let later = PenaltySpec { v: 6, ..s };
        assert!(jackson_error_bound(&later) < jackson_error_bound(&s));
    }

    #[test]
    fn cheb_round_trip() {
        let c = ChebPoly::new(vec![0.5, -1.0, 0.25, 2.0]);
        let u = c.to_unipoly();
        for i in 0..=20 {
            let t = -1.0 + 0.1 * i as f64;
            assert!((c.eval(t) - u.eval(t)).abs() < 1e-13);
        }
        // T_3 = 4t^3 - 3t
        assert_eq!(
            ChebPoly::new(vec![0.0, 0.0, 0.0, 1.0]).to_unipoly(),
            UniPoly::new(vec![0.0, -3.0, 0.0, 4.0])
        );
    }

    #[test]
    fn interpolant_hits_nodes() {
        let s = PenaltySpec::new(-0.5, 1.0, 1, 30).unwrap();
        let (fit, err) = cheb_fit(&s).unwrap();
        let ck = concat_poly(1);
        for t in cheb_nodes(30) {
            assert!((fit.eval(t) - q_with(&ck, &s, t)).abs() <= 1e-12);
        }
        let v = total_variation_bound(&s);
        assert!(err <= 4.0 * v / (PI * 29.0));
    }

    #[test]
    fn fml_examples() {
        let d = fml_decompose(&UniPoly::new(vec![1.0, 0.0, -1.0])).unwrap();
        assert!(d.h1.max_abs_coef() < 1e-6);
        assert!(d.h2.sub(&UniPoly::new(vec![1.0])).max_abs_coef() < 1e-6);
        let d = fml_decompose(&UniPoly::new(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(d.h1.sub(&UniPoly::new(vec![0.0, 0.0, 1.0])).max_abs_coef() < 1e-6);
        assert!(d.h2.max_abs_coef() < 1e-6);
        let d = fml_decompose(&UniPoly::new(vec![1.0, 1.0])).unwrap();
        // unique answer on a singular face: interior-point accuracy ~ sqrt(tol)
        assert!(d.residual <= FML_TOL);
        assert!(d.h1.sub(&UniPoly::new(vec![0.5, 1.0, 0.5])).max_abs_coef() < 1e-5);
        assert!(d.h2.sub(&UniPoly::new(vec![0.5])).max_abs_coef() < 1e-5);
        assert!(fml_decompose(&UniPoly::new(vec![0.0, 1.0])).is_err());
    }
}
