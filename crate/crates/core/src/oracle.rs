//! Ground truth and diagnostics: exact minima over the hypercube, sampled
//! minima over the ball, Krawtchouk roots, hypothesis checks and the
//! rate-bound quantities.

use std::collections::BTreeMap;
use std::f64::consts::E;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result, check_dim};
use crate::instance::Domain;
use crate::matpoly::{SymPolyMatrix, sym_eigvals_desc};
use crate::penalty::a_const;
use crate::poly::{MultiPoly, binomial};

/// Feasibility tolerance on `lambda_min(G(x))`.
pub const FEAS_TOL: f64 = 1e-10;
/// Largest `n` accepted by [`brute_force_binary`].
pub const MAX_ENUM_N: usize = 22;
const POLISH_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub f_min: f64,
    pub argmin: Vec<f64>,
    /// Largest `lambda_min(G(x))` over infeasible cube points.
    pub lambda_gap: Option<f64>,
    pub feasible_count: usize,
    /// `false` when `f_min` is only a sampled upper bound.
    pub exact: bool,
}

impl OracleResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("oracle result serializes")
    }
}

/// Exact minimum of `f` over `{x in {0,1}^n : G(x) ⪰ 0}` by enumeration.
/// Ties resolve to the lexicographically smallest point.
pub fn brute_force_binary(f: &MultiPoly, g: &SymPolyMatrix) -> Result<OracleResult> {
    let n = f.n();
    check_dim(n, g.n())?;
    if n > MAX_ENUM_N {
        return Err(Error::TooLarge(format!("enumeration needs n <= {MAX_ENUM_N}, got {n}")));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut gap: Option<f64> = None;
    let mut feasible = 0;
    let mut x = vec![0.0; n];
    for bits in 0u64..(1u64 << n) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = ((bits >> (n - 1 - i)) & 1) as f64;
        }
        let lam = g.min_eig(&x)?;
        if lam >= -FEAS_TOL {
            feasible += 1;
            let fx = f.eval(&x)?;
            if best.as_ref().is_none_or(|(b, _)| fx < *b) {
                best = Some((fx, x.clone()));
            }
        } else {
            gap = Some(gap.map_or(lam, |l: f64| l.max(lam)));
        }
    }
    let (f_min, argmin) = best.ok_or(Error::EmptyFeasibleSet)?;
    Ok(OracleResult {
        f_min,
        argmin,
        lambda_gap: gap,
        feasible_count: feasible,
        exact: true,
    })
}

/// A uniform point of the closed unit ball.
pub fn sample_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm > 1e-300 {
            let rad = rng.random::<f64>().powf(1.0 / n as f64);
            return dir.into_iter().map(|d| d * rad / norm).collect();
        }
    }
}

fn in_ball(x: &[f64]) -> bool {
    x.iter().map(|v| v * v).sum::<f64>() <= 1.0
}

/// Sampled upper bound on `min f` over `{x in B^n : G(x) ⪰ 0}`, followed by
/// a fixed-length coordinate search from the best sample.
pub fn sample_min_ball(f: &MultiPoly, g: &SymPolyMatrix, samples: usize, seed: u64) -> Result<OracleResult> {
    let n = f.n();
    check_dim(n, g.n())?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let feasible = |x: &[f64]| -> Result<bool> { Ok(g.min_eig(x)? >= -FEAS_TOL) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut count = 0;
    for _ in 0..samples {
        let x = sample_ball(n, &mut rng);
        if feasible(&x)? {
            count += 1;
            let fx = f.eval(&x)?;
            if best.as_ref().is_none_or(|(b, _)| fx < *b) {
                best = Some((fx, x));
            }
        }
    }
    let (mut fbest, mut x) = best.ok_or(Error::EmptyFeasibleSet)?;
    let mut step = 0.1;
    for _ in 0..POLISH_ITERS {
        let mut improved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut y = x.clone();
                y[i] += s;
                if !in_ball(&y) || !feasible(&y)? {
                    continue;
                }
                let fy = f.eval(&y)?;
                if fy < fbest {
                    fbest = fy;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(OracleResult {
        f_min: fbest,
        argmin: x,
        lambda_gap: None,
        feasible_count: count,
        exact: false,
    })
}

/// Least root of the degree-`r` binary Krawtchouk polynomial with parameter
/// `n`, normalized so that `K_1(x) = n - 2x`.
pub fn krawtchouk_least_root(r: usize, n: usize) -> Result<f64> {
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("need 1 <= r <= n, got r = {r}, n = {n}")));
    }
    let mut j = DMatrix::zeros(r, r);
    for i in 0..r {
        j[(i, i)] = n as f64 / 2.0;
        if i + 1 < r {
            let k = (i + 1) as f64;
            let b = (k * (n as f64 - k + 1.0) / 4.0).sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    Ok(*sym_eigvals_desc(j).last().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisParams {
    pub n: usize,
    pub d: u32,
    pub l: u32,
    pub r: u32,
    pub v: u32,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`.
    pub slack: f64,
}

fn hyp(name: &str, lhs: f64, rhs: f64) -> Hypothesis {
    Hypothesis {
        name: name.into(),
        lhs,
        rhs,
        holds: lhs <= rhs,
        slack: rhs - lhs,
    }
}

/// Advisory check of the rate-theorem hypotheses.
pub fn check_hypotheses(domain: Domain, p: &HypothesisParams) -> Vec<Hypothesis> {
    let l = p.l.max(1) as f64;
    let w = 2.0 * l * (p.v as f64 + 1.0);
    match domain {
        Domain::Binary => {
            let mut out = vec![
                hyp("(r+1)/n <= 1/2", (p.r as f64 + 1.0) / p.n as f64, 0.5),
                hyp("l(v+1) <= r", l * (p.v as f64 + 1.0), p.r as f64),
            ];
            match krawtchouk_least_root(p.r as usize + 1, p.n) {
                Ok(xi) => {
                    let d = p.d as f64;
                    out.push(hyp("d(d+1) xi <= 1/2", d * (d + 1.0) * xi, 0.5));
                    out.push(hyp("2l(v+1)(2l(v+1)+1) xi <= 1/2", w * (w + 1.0) * xi, 0.5));
                }
                Err(_) => {
                    out.push(hyp("r+1 <= n (xi defined)", p.r as f64 + 1.0, p.n as f64));
                }
            }
            out
        }
        Domain::Ball => {
            let need = 2.0 * p.n as f64 * (p.d as f64).max(w);
            vec![hyp("2n max(d, 2l(v+1)) <= r", need, p.r as f64)]
        }
    }
}

/// `V(m, v, lambda) = ||f|| 16 m e^2 |lambda|^(-1) a^(|lambda| v)`.
pub fn v_bound(f_norm: f64, m: usize, v: u32, lambda: f64) -> f64 {
    let l = lambda.abs();
    f_norm * 16.0 * m as f64 * E * E / l * a_const().powf(l * v as f64)
}

/// `U(m, v, delta) = ||f|| 16 e^2 m delta^(-1) a^(delta v)`.
pub fn u_bound(f_norm: f64, m: usize, v: u32, delta: f64) -> f64 {
    f_norm * 16.0 * E * E * m as f64 / delta * a_const().powf(delta * v as f64)
}

/// `C_B(n, d) = 2 (n+1)^2 d^2 gamma_d` with
/// `gamma_d^2 = max_(k <= d) (1 + 2k/(n-1)) C(k+n-2, n-2)`; undefined for `n = 1`.
pub fn c_b(n: usize, d: u32) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let g2 = (0..=d as usize)
        .map(|k| (1.0 + 2.0 * k as f64 / (n as f64 - 1.0)) * binomial(k + n - 2, n - 2) as f64)
        .fold(0.0, f64::max);
    let nd = (n + 1) as f64;
    Some(2.0 * nd * nd * (d as f64).powi(2) * g2.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateParams {
    pub domain: Domain,
    pub n: usize,
    pub d: u32,
    pub l: u32,
    pub r: u32,
    pub v: u32,
    pub m: usize,
    pub f_norm: f64,
    /// Binary spectral gap; required for `V`.
    pub lambda: Option<f64>,
    /// Ball margin in `(0, 1]`; defaults to the value prescribed by the
    /// degree theorem.
    pub delta: Option<f64>,
    pub c_loj: Option<f64>,
    pub l_loj: Option<f64>,
    pub lipschitz: Option<f64>,
    pub e_f: Option<f64>,
}

impl RateParams {
    pub fn new(domain: Domain, n: usize, d: u32, l: u32, r: u32, v: u32, m: usize) -> Self {
        RateParams {
            domain,
            n,
            d,
            l,
            r,
            v,
            m,
            f_norm: 1.0,
            lambda: None,
            delta: None,
            c_loj: None,
            l_loj: None,
            lipschitz: None,
            e_f: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateDiagnostics {
    /// `xi_(r+1)^n`, when `r + 1 <= n`.
    pub xi: Option<f64>,
    pub cd_note: String,
    pub v_bound: Option<f64>,
    pub u_bound: Option<f64>,
    pub a_const: f64,
    pub l_f: f64,
    pub c_loj: f64,
    pub l_loj: f64,
    pub e_f: Option<f64>,
    pub gamma: f64,
    pub b: f64,
    pub d_prime: u32,
    pub delta: f64,
    pub thm51_v: f64,
    pub thm51_delta: f64,
    pub c_b: Option<f64>,
    /// Right-hand side of the ball gap bound at `(v, delta, r)`.
    pub ball_gap_rhs: Option<f64>,
    pub r_bar: f64,
    /// Degree threshold of the positivity result, with `rho = 1`.
    pub thm51_degree: Option<f64>,
    /// `"user"`, `"default"` or `"computed"` per input field.
    pub provenance: BTreeMap<String, String>,
}

/// Evaluates the rate-theorem quantities. Every value is a diagnostic.
pub fn rate_bounds(p: &RateParams) -> RateDiagnostics {
    let mut prov = BTreeMap::new();
    let mut pick = |name: &str, v: Option<f64>, default: f64, kind: &str| {
        prov.insert(name.to_string(), if v.is_some() { "user" } else { kind }.to_string());
        v.unwrap_or(default)
    };
    let c = pick("C_loj", p.c_loj, 1.0, "default");
    let big_l = pick("L_loj", p.l_loj, 1.0, "default");
    let l_f = pick("L_f", p.lipschitz, 1.0, "default");
    prov.insert("rho".into(), "default".into());
    prov.insert("C_d".into(), "symbolic".into());
    prov.insert(
        "E_f".into(),
        if p.e_f.is_some() { "user" } else { "absent" }.into(),
    );

    let n = p.n as f64;
    let a = a_const();
    let d_prime = p.d.div_ceil(2).max(p.l.max(1));
    let dp = d_prime as f64;
    let r = (p.r.max(1)) as f64;
    let b = -2.0 / a.ln() * r.ln();
    let gamma = (n + 1.0).powi(2) * E.powf((n - 2.0) / 2.0) * dp.powf((n + 3.0) / 2.0) / (c * l_f);
    let den = n + 2.0 * big_l + 5.0;
    let thm51_v = (gamma.powf(-2.0 / den) * b.powf(2.0 * (big_l + 1.0) / den) * r.powf(4.0 / den)).floor();
    let thm51_delta = gamma.powf(2.0 / den) * b.powf((n + 3.0) / den) * r.powf(-4.0 / den);
    let delta = match p.delta {
        Some(d) => {
            prov.insert("delta".into(), "user".into());
            d
        }
        None => {
            prov.insert("delta".into(), "computed".into());
            thm51_delta.clamp(f64::MIN_POSITIVE, 1.0)
        }
    };
    let w = 2 * p.l.max(1) * (p.v + 1);
    let r_bar = 2.0 * n * (p.d.max(w) as f64);
    let xi = krawtchouk_least_root(p.r as usize + 1, p.n).ok();
    let vb = p.lambda.map(|lam| v_bound(p.f_norm, p.m, p.v, lam));
    let ub = (p.domain == Domain::Ball).then(|| u_bound(p.f_norm, p.m, p.v, delta));
    let cb = c_b(p.n, p.d.max(w));
    let ball_gap_rhs = match (ub, cb) {
        (Some(u), Some(cb)) => Some(
            2.0 * (p.f_norm * (1.0 + p.m as f64 / delta) + u) * cb / (r * r)
                + u
                + c * l_f * delta.powf(big_l),
        ),
        _ => None,
    };
    let thm51_degree = p.e_f.map(|ef| {
        let t = (p.m as f64 * n * (c * l_f).max(1.0)).powf(1.0 + (n + 5.0) / (2.0 * big_l))
            * (E * dp).powf(den / 2.0)
            * ef.powf(-1.0 - (n + 5.0) / (2.0 * big_l));
        t.max(r_bar)
    });
    RateDiagnostics {
        xi,
        cd_note: "C_d is not given explicitly; the binary bound is reported as a multiple of xi/n".into(),
        v_bound: vb,
        u_bound: ub,
        a_const: a,
        l_f,
        c_loj: c,
        l_loj: big_l,
        e_f: p.e_f,
        gamma,
        b,
        d_prime,
        delta,
        thm51_v,
        thm51_delta,
        c_b: cb,
        ball_gap_rhs,
        r_bar,
        thm51_degree,
        provenance: prov,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// Largest sampled `||grad f(x)||_2`; a lower estimate.
    pub sampled: f64,
    /// `sum |f_alpha| |alpha|`, valid on the unit ball.
    pub upper: f64,
}

pub fn lipschitz_estimate(f: &MultiPoly, samples: usize, seed: u64) -> Result<LipschitzEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("samples must be >= 2".into()));
    }
    let n = f.n();
    let grad = f.gradient();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled: f64 = 0.0;
    for _ in 0..samples {
        let x = sample_ball(n, &mut rng);
        let mut s = 0.0;
        for gi in &grad {
            let v = gi.eval(&x)?;
            s += v * v;
        }
        sampled = sampled.max(s.sqrt());
    }
    let upper = f.terms().map(|(m, c)| c.abs() * m.degree() as f64).sum();
    Ok(LipschitzEstimate { sampled, upper })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescartesRecord {
    pub coeffs: Vec<f64>,
    pub by_coeffs: bool,
    pub min_eig: f64,
    pub by_eig: bool,
    pub agree: bool,
}

/// Membership through the characteristic coefficients, cross-checked with
/// the smallest eigenvalue.
pub fn descartes_membership(g: &SymPolyMatrix, x: &[f64], tol: f64) -> Result<DescartesRecord> {
    let cs = g.charpoly_coeffs()?;
    let coeffs = cs.iter().map(|c| c.eval(x)).collect::<Result<Vec<_>>>()?;
    let by_coeffs = coeffs.iter().all(|&c| c >= -tol);
    let min_eig = g.min_eig(x)?;
    let by_eig = min_eig >= -tol;
    Ok(DescartesRecord {
        coeffs,
        by_coeffs,
        min_eig,
        by_eig,
        agree: by_coeffs == by_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    #[test]
    fn brute_force_examples() {
        let f = &x(2, 0) + &x(2, 1);
        let g = SymPolyMatrix::scalar(&(&MultiPoly::constant(2, 1.0) - &x(2, 0)) - &x(2, 1));
        let o = brute_force_binary(&f, &g).unwrap();
        assert_eq!(o.f_min, 0.0);
        assert_eq!(o.argmin, vec![0.0, 0.0]);
        assert_eq!(o.feasible_count, 3);
        assert_eq!(o.lambda_gap, Some(-1.0));

        let o = brute_force_binary(&f, &SymPolyMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert_eq!(o.feasible_count, 4);
        assert_eq!(o.lambda_gap, None);

        let bad = SymPolyMatrix::scalar(MultiPoly::constant(2, -1.0));
        assert!(matches!(brute_force_binary(&f, &bad), Err(Error::EmptyFeasibleSet)));
        let big = MultiPoly::zero(23);
        assert!(matches!(
            brute_force_binary(&big, &SymPolyMatrix::identity(1, 23)),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn ball_sampling() {
        let g = SymPolyMatrix::identity(1, 2);
        let o = sample_min_ball(&x(2, 0), &g, 100_000, 7).unwrap();
        assert!((o.f_min + 1.0).abs() < 1e-2, "{}", o.f_min);
        assert!(!o.exact);
        let sq = &x(2, 0).pow(2) + &x(2, 1).pow(2);
        assert!(sample_min_ball(&sq, &g, 1000, 1).unwrap().f_min < 1e-3);
        assert_eq!(
            sample_min_ball(&x(2, 0), &g, 500, 3).unwrap(),
            sample_min_ball(&x(2, 0), &g, 500, 3).unwrap()
        );
    }

    #[test]
    fn krawtchouk() {
        for n in 1..30 {
            assert!((krawtchouk_least_root(1, n).unwrap() - n as f64 / 2.0).abs() < 1e-12);
        }
        let mut prev = f64::INFINITY;
        for r in 1..=10 {
            let xi = krawtchouk_least_root(r, 20).unwrap();
            assert!(xi < prev);
            prev = xi;
        }
        // K_2(x) = ((n - 2x)^2 - n) / 2 has roots 1 and 3 for n = 4
        let xi = krawtchouk_least_root(2, 4).unwrap();
        assert!((xi - 1.0).abs() < 1e-12);
        assert!(krawtchouk_least_root(0, 3).is_err());
        assert!(krawtchouk_least_root(4, 3).is_err());
    }

    #[test]
    fn hypotheses() {
        let p = HypothesisParams { n: 100, d: 2, l: 1, r: 10, v: 1, m: 1 };
        let h = check_hypotheses(Domain::Binary, &p);
        assert!(h[0].holds);
        assert!((h[0].lhs - 0.11).abs() < 1e-12);
        let p = HypothesisParams { n: 2, d: 2, l: 1, r: 40, v: 3, m: 1 };
        let h = check_hypotheses(Domain::Ball, &p);
        assert_eq!(h[0].lhs, 32.0);
        assert!(h[0].holds);
        let p = HypothesisParams { r: 31, ..p };
        assert!(!check_hypotheses(Domain::Ball, &p)[0].holds);
    }

    #[test]
    fn rate_values() {
        let v = v_bound(1.0, 1, 10, -1.0);
        let exact = 16.0 * E * E * (-10.0 / (2.0 * E + 1.0)).exp();
        assert!((v - exact).abs() < 1e-12);
        assert!((v - 24.98).abs() < 0.05, "{v}");
        let u1 = u_bound(1.0, 1, 10, 0.5);
        let u2 = u_bound(1.0, 1, 10, 1.0);
        assert!((u2 / u1 - 0.5 * a_const().powf(5.0)).abs() < 1e-12);
        let mut p = RateParams::new(Domain::Ball, 2, 3, 2, 10, 2, 1);
        p.lambda = Some(-0.5);
        let d = rate_bounds(&p);
        assert_eq!(d.d_prime, 2);
        assert_eq!(d.provenance["C_loj"], "default");
        assert!(d.ball_gap_rhs.unwrap().is_finite());
        assert!(c_b(1, 3).is_none());
        // n = 2: gamma_d^2 = max_k (1 + 2k) = 1 + 2d
        assert!((c_b(2, 3).unwrap() - 2.0 * 9.0 * 9.0 * 7f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn lipschitz() {
        let e = lipschitz_estimate(&x(1, 0), 10, 0).unwrap();
        assert!((e.sampled - 1.0).abs() < 1e-12 && e.upper == 1.0);
        let e = lipschitz_estimate(&x(1, 0).pow(2), 10_000, 0).unwrap();
        assert_eq!(e.upper, 2.0);
        assert!(e.sampled <= 2.0 && e.sampled > 1.99);
        let e = lipschitz_estimate(&(&x(2, 0) * &x(2, 1)), 20_000, 0).unwrap();
        assert_eq!(e.upper, 2.0);
        assert!(e.sampled <= 1.0 && e.sampled > 0.98);
    }

    #[test]
    fn descartes_examples() {
        let c = |v: f64| MultiPoly::constant(1, v);
        let g = SymPolyMatrix::from_upper(vec![vec![c(2.0), c(1.0)], vec![c(3.0)]]).unwrap();
        let rec = descartes_membership(&g, &[0.0], 1e-9).unwrap();
        assert!(rec.by_coeffs && rec.agree);
        let g = SymPolyMatrix::from_upper(vec![vec![c(1.0), c(2.0)], vec![c(1.0)]]).unwrap();
        let rec = descartes_membership(&g, &[0.0], 1e-9).unwrap();
        assert!((rec.coeffs[1] + 3.0).abs() < 1e-12);
        assert!(!rec.by_coeffs && rec.agree);
        assert!((rec.min_eig + 1.0).abs() < 1e-12);
    }
}
