//! Symmetric matrices with polynomial entries.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, check_dim};
use crate::penalty::{ChebPoly, UniPoly};
use crate::poly::{Monomial, MultiPoly};

/// Largest `m` accepted by [`SymPolyMatrix::charpoly_coeffs`].
pub const CHARPOLY_MAX_M: usize = 6;

/// An `m x m` symmetric matrix `G(x)` of polynomials in `n` variables.
///
/// All `m^2` entries are stored; constructors only ever accept the upper
/// triangle (or check symmetry), so the stored matrix is exactly symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatJson", into = "MatJson")]
pub struct SymPolyMatrix {
    m: usize,
    n: usize,
    entries: Vec<MultiPoly>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatJson {
    m: usize,
    entries: Vec<Vec<MultiPoly>>,
}

impl TryFrom<MatJson> for SymPolyMatrix {
    type Error = Error;

    /// Rows may be given as the upper triangle (row `i` holds columns `i..m`)
    /// or in full, in which case symmetry is checked.
    fn try_from(j: MatJson) -> Result<Self> {
        check_dim(j.m, j.entries.len())?;
        if j.m == 0 {
            return Err(Error::InvalidArgument("matrix size m must be >= 1".into()));
        }
        if j.m > 1 && j.entries.iter().all(|row| row.len() == j.m) {
            return SymPolyMatrix::from_full(j.entries);
        }
        SymPolyMatrix::from_upper(j.entries)
    }
}

impl From<SymPolyMatrix> for MatJson {
    fn from(g: SymPolyMatrix) -> Self {
        MatJson {
            m: g.m,
            entries: (0..g.m)
                .map(|i| (i..g.m).map(|j| g.get(i, j).clone()).collect())
                .collect(),
        }
    }
}

impl SymPolyMatrix {
    /// Builds from upper-triangle rows: `upper[i][k]` is entry `(i, i + k)`.
    pub fn from_upper(upper: Vec<Vec<MultiPoly>>) -> Result<Self> {
        let m = upper.len();
        if m == 0 {
            return Err(Error::InvalidArgument("matrix size m must be >= 1".into()));
        }
        let n = upper[0]
            .first()
            .ok_or(Error::DimensionMismatch { expected: m, got: 0 })?
            .n();
        let mut entries = vec![MultiPoly::zero(n); m * m];
        for (i, row) in upper.into_iter().enumerate() {
            check_dim(m - i, row.len())?;
            for (k, p) in row.into_iter().enumerate() {
                check_dim(n, p.n())?;
                let j = i + k;
                entries[j * m + i] = p.clone();
                entries[i * m + j] = p;
            }
        }
        Ok(SymPolyMatrix { m, n, entries })
    }

    /// Builds from a full row-major square array; fails unless it is symmetric.
    pub fn from_full(rows: Vec<Vec<MultiPoly>>) -> Result<Self> {
        let m = rows.len();
        for (i, row) in rows.iter().enumerate() {
            check_dim(m, row.len())?;
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Self::from_upper(
            rows.into_iter()
                .enumerate()
                .map(|(i, r)| r.into_iter().skip(i).collect())
                .collect(),
        )
    }

    /// The 1x1 matrix `[[g]]`.
    pub fn scalar(g: MultiPoly) -> Self {
        SymPolyMatrix {
            m: 1,
            n: g.n(),
            entries: vec![g],
        }
    }

    pub fn identity(m: usize, n: usize) -> Self {
        Self::constant_diag(&vec![1.0; m], n)
    }

    pub fn constant_diag(d: &[f64], n: usize) -> Self {
        let m = d.len();
        let mut entries = vec![MultiPoly::zero(n); m * m];
        for (i, &v) in d.iter().enumerate() {
            entries[i * m + i] = MultiPoly::constant(n, v);
        }
        SymPolyMatrix { m, n, entries }
    }

    /// Block-diagonal assembly `diag(G_1, ..., G_k)`.
    pub fn block_diag(blocks: &[SymPolyMatrix]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidArgument("no blocks".into()))?;
        let n = first.n;
        let m: usize = blocks.iter().map(|b| b.m).sum();
        let mut entries = vec![MultiPoly::zero(n); m * m];
        let mut off = 0;
        for b in blocks {
            check_dim(n, b.n)?;
            for i in 0..b.m {
                for j in 0..b.m {
                    entries[(off + i) * m + off + j] = b.get(i, j).clone();
                }
            }
            off += b.m;
        }
        Ok(SymPolyMatrix { m, n, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &MultiPoly {
        &self.entries[i * self.m + j]
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(MultiPoly::degree).max().unwrap_or(0)
    }

    /// `l = ceil(deg G / 2)`; zero only for a constant matrix.
    pub fn half_degree(&self) -> u32 {
        self.degree().div_ceil(2)
    }

    /// `l` as used in hierarchy bookkeeping: constant matrices count as `l = 1`.
    pub fn hierarchy_l(&self) -> u32 {
        self.half_degree().max(1)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.m).all(|i| (0..self.m).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn scale(&self, s: f64) -> SymPolyMatrix {
        SymPolyMatrix {
            m: self.m,
            n: self.n,
            entries: self.entries.iter().map(|p| p.scale(s)).collect(),
        }
    }

    /// Entrywise square-free reduction (binary domain).
    pub fn reduce_binary(&self) -> SymPolyMatrix {
        SymPolyMatrix {
            m: self.m,
            n: self.n,
            entries: self.entries.iter().map(MultiPoly::reduce_binary).collect(),
        }
    }

    pub fn eval_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.n, x.len())?;
        let mut out = DMatrix::zeros(self.m, self.m);
        for i in 0..self.m {
            for j in i..self.m {
                let v = self.get(i, j).eval(x)?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Eigenvalues of `G(x)`, descending.
    pub fn eigvals_sorted(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(sym_eigvals_desc(self.eval_matrix(x)?))
    }

    /// `lambda_m(x)`, the smallest eigenvalue of `G(x)`.
    pub fn min_eig(&self, x: &[f64]) -> Result<f64> {
        if self.m == 1 {
            return self.entries[0].eval(x);
        }
        Ok(*self.eigvals_sorted(x)?.last().unwrap())
    }

    fn dense_mul(&self, a: &[MultiPoly], b: &[MultiPoly]) -> Vec<MultiPoly> {
        let m = self.m;
        let mut out = vec![MultiPoly::zero(self.n); m * m];
        for i in 0..m {
            for j in 0..m {
                let mut acc = MultiPoly::zero(self.n);
                for k in 0..m {
                    let (x, y) = (&a[i * m + k], &b[k * m + j]);
                    if !x.is_zero() && !y.is_zero() {
                        acc = &acc + &(x * y);
                    }
                }
                out[i * m + j] = acc;
            }
        }
        out
    }

    fn frobenius(&self, a: &[MultiPoly], b: &[MultiPoly]) -> MultiPoly {
        let mut acc = MultiPoly::zero(self.n);
        for (x, y) in a.iter().zip(b) {
            if !x.is_zero() && !y.is_zero() {
                acc = &acc + &(x * y);
            }
        }
        acc
    }

    /// `[tr(G), tr(G^2), ..., tr(G^kmax)]`.
    ///
    /// The powers `G, ..., G^ceil(kmax/2)` are each formed once by repeated
    /// multiplication; `tr(G^(a+b)) = <G^a, G^b>` gives the rest.
    pub fn trace_powers(&self, kmax: u32) -> Vec<MultiPoly> {
        let kmax = kmax as usize;
        let half = kmax.div_ceil(2).max(1);
        let mut powers: Vec<Vec<MultiPoly>> = vec![self.entries.clone()];
        while powers.len() < half {
            let next = self.dense_mul(powers.last().unwrap(), &self.entries);
            powers.push(next);
        }
        (1..=kmax)
            .map(|k| {
                if k == 1 {
                    let mut t = MultiPoly::zero(self.n);
                    for i in 0..self.m {
                        t = &t + self.get(i, i);
                    }
                    t
                } else {
                    let a = k / 2;
                    let b = k - a;
                    self.frobenius(&powers[a - 1], &powers[b - 1])
                }
            })
            .collect()
    }

    /// `tr(G(x)^k)`.
    pub fn trace_power(&self, k: u32) -> Result<MultiPoly> {
        if k < 1 {
            return Err(Error::InvalidArgument("trace power k must be >= 1".into()));
        }
        Ok(self.trace_powers(k).pop().unwrap())
    }

    /// `<h(G(x)), G(x)> = sum_i h_i tr(G^(i+1))`.
    pub fn inner_h_g(&self, h: &UniPoly) -> MultiPoly {
        let c = h.coefs();
        if c.is_empty() {
            return MultiPoly::zero(self.n);
        }
        let traces = self.trace_powers(c.len() as u32);
        let mut out = MultiPoly::zero(self.n);
        for (hi, t) in c.iter().zip(&traces) {
            out.axpy(*hi, t);
        }
        out
    }

    /// `<h(G(x)), G(x)>` for `h` in Chebyshev form, without converting `h` to
    /// the monomial basis: Clenshaw's recurrence is run on matrices,
    /// `B_j = c_j I + 2 G B_(j+1) - B_(j+2)`, `h(G) = c_0 I + G B_1 - B_2`.
    pub fn inner_cheb_g(&self, h: &ChebPoly) -> MultiPoly {
        let c = h.coefs();
        let m = self.m;
        let n = self.n;
        if c.is_empty() {
            return MultiPoly::zero(n);
        }
        let ident = |s: f64| {
            let mut e = vec![MultiPoly::zero(n); m * m];
            for i in 0..m {
                e[i * m + i] = MultiPoly::constant(n, s);
            }
            e
        };
        let zero = vec![MultiPoly::zero(n); m * m];
        let (mut b1, mut b2) = (zero.clone(), zero);
        for j in (1..c.len()).rev() {
            let gb = self.dense_mul(&self.entries, &b1);
            let mut next = ident(c[j]);
            for idx in 0..m * m {
                next[idx].axpy(2.0, &gb[idx]);
                next[idx].axpy(-1.0, &b2[idx]);
            }
            b2 = std::mem::replace(&mut b1, next);
        }
        let gb = self.dense_mul(&self.entries, &b1);
        let mut hg = ident(c[0]);
        for idx in 0..m * m {
            hg[idx].axpy(1.0, &gb[idx]);
            hg[idx].axpy(-1.0, &b2[idx]);
        }
        self.frobenius(&hg, &self.entries)
    }

    /// Hankel trace blocks `P_v^G` and `Q_(v-1)^G`.
    pub fn trace_blocks(&self, v: u32) -> TraceBlocks {
        let traces = self.trace_powers(2 * v + 1);
        let tr = |k: usize| &traces[k - 1];
        let vu = v as usize;
        let p = (0..=vu)
            .map(|i| (0..=vu).map(|j| tr(i + j + 1).clone()).collect())
            .collect();
        let q = (0..vu)
            .map(|i| {
                (0..vu)
                    .map(|j| tr(i + j + 1) - tr(i + j + 3))
                    .collect()
            })
            .collect();
        TraceBlocks { v, p, q }
    }

    /// `G / scale` with `scale = sum_(i,j) ||g_ij||_1 * max(1, R^l)`, which
    /// bounds the spectral radius of the result by one wherever `|x_i| <= R`.
    /// The zero matrix passes through with scale 1.
    pub fn normalize(&self, radius: f64) -> Result<(SymPolyMatrix, f64)> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be > 0, got {radius}")));
        }
        let scale = self.sufficient_scale(radius);
        if scale == 0.0 {
            return Ok((self.clone(), 1.0));
        }
        Ok((self.scale(1.0 / scale), scale))
    }

    /// The normalizing factor used by [`SymPolyMatrix::normalize`].
    pub fn sufficient_scale(&self, radius: f64) -> f64 {
        let norm: f64 = self.entries.iter().map(MultiPoly::coef_norm).sum();
        norm * radius.powi(self.half_degree() as i32).max(1.0)
    }

    /// Characteristic coefficients `[c_1, ..., c_m]` with
    /// `det(tI - G) = t^m + sum_i (-1)^i c_i t^(m-i)`, so that `G(x) ⪰ 0`
    /// exactly when every `c_i(x) >= 0`. Faddeev–LeVerrier recurrence.
    pub fn charpoly_coeffs(&self) -> Result<Vec<MultiPoly>> {
        let m = self.m;
        if m > CHARPOLY_MAX_M {
            return Err(Error::TooLarge(format!(
                "charpoly_coeffs supports m <= {CHARPOLY_MAX_M}, got {m}"
            )));
        }
        let n = self.n;
        // M_1 = I, a_1 = -tr(G); M_k = G M_(k-1) + a_(k-1) I, a_k = -tr(G M_k)/k.
        let mut mk: Vec<MultiPoly> = vec![MultiPoly::zero(n); m * m];
        for i in 0..m {
            mk[i * m + i] = MultiPoly::constant(n, 1.0);
        }
        let mut out = Vec::with_capacity(m);
        for k in 1..=m {
            let gm = self.dense_mul(&self.entries, &mk);
            let mut tr = MultiPoly::zero(n);
            for i in 0..m {
                tr = &tr + &gm[i * m + i];
            }
            let a_k = tr.scale(-1.0 / k as f64);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out.push(a_k.scale(sign));
            mk = gm;
            for i in 0..m {
                mk[i * m + i].axpy(1.0, &a_k);
            }
        }
        Ok(out)
    }

    /// Entries as `[(i, j, poly)]` for the upper triangle.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, &MultiPoly)> {
        (0..self.m).flat_map(move |i| (i..self.m).map(move |j| (i, j, self.get(i, j))))
    }

    /// Coefficient of monomial `mono` in every entry, as a dense symmetric matrix.
    pub fn coef_matrix(&self, mono: &Monomial) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.get(i, j).coef(mono))
    }
}

/// Dense symmetric eigenvalues, descending.
pub fn sym_eigvals_desc(a: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// The Hankel blocks `[P]_ij = tr(G^(i+j+1))` (size `v+1`) and
/// `[Q]_ij = tr(G^(i+j+1)) - tr(G^(i+j+3))` (size `v`).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceBlocks {
    pub v: u32,
    pub p: Vec<Vec<MultiPoly>>,
    pub q: Vec<Vec<MultiPoly>>,
}

impl TraceBlocks {
    pub fn eval(&self, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let ev = |b: &Vec<Vec<MultiPoly>>| -> Result<DMatrix<f64>> {
            let k = b.len();
            let mut out = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    out[(i, j)] = b[i][j].eval(x)?;
                }
            }
            Ok(out)
        };
        Ok((ev(&self.p)?, ev(&self.q)?))
    }
}
