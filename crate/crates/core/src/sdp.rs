//! Block-structured SDPs in linear-matrix-inequality form, the conic backend
//! adapter, SDPA sparse I/O, and SOS certificate extraction.
//!
//! A problem is `min / max  c^T x + c0` over free scalars `x` subject to
//! affine symmetric blocks `F_b(x) = C_b + sum_k x_k T_(b,k)` that are either
//! required to be PSD or pinned to zero. Equality blocks are diagonal: each
//! diagonal entry is one scalar equation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matpoly::sym_eigvals_desc;
use crate::poly::{Monomial, MomentVector, MultiPoly};

/// Gram eigenvalues below this are set to zero during certificate extraction.
pub const EIG_FLOOR: f64 = 1e-9;
/// Certificates whose reconstruction residual exceeds this are rejected.
pub const CERT_TOL: f64 = 1e-5;
/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Psd,
    Equality,
}

/// `constant + sum_k coef_k x_k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: BTreeMap<usize, f64>,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&k, &c)| c * x[k]).sum::<f64>()
    }

    fn is_empty(&self) -> bool {
        self.constant == 0.0 && self.terms.values().all(|&c| c == 0.0)
    }
}

/// A symmetric affine block; only entries with `i <= j` are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub size: usize,
    pub kind: BlockKind,
    pub entries: BTreeMap<(usize, usize), Affine>,
}

impl Block {
    pub fn psd(name: impl Into<String>, size: usize) -> Self {
        Block {
            name: name.into(),
            size,
            kind: BlockKind::Psd,
            entries: BTreeMap::new(),
        }
    }

    /// A diagonal block of `rows` scalar equations pinned to zero.
    pub fn equality(name: impl Into<String>, rows: usize) -> Self {
        Block {
            name: name.into(),
            size: rows,
            kind: BlockKind::Equality,
            entries: BTreeMap::new(),
        }
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut Affine {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        assert!(j < self.size, "entry ({i}, {j}) outside block of size {}", self.size);
        assert!(
            self.kind == BlockKind::Psd || i == j,
            "equality blocks are diagonal"
        );
        self.entries.entry((i, j)).or_default()
    }

    /// Adds `coef * x_var` to entry `(i, j)` (and its mirror).
    pub fn add_term(&mut self, i: usize, j: usize, var: usize, coef: f64) {
        *self.slot(i, j).terms.entry(var).or_insert(0.0) += coef;
    }

    pub fn add_constant(&mut self, i: usize, j: usize, c: f64) {
        self.slot(i, j).constant += c;
    }

    /// Drops zero coefficients and empty entries.
    pub fn canonicalize(&mut self) {
        for a in self.entries.values_mut() {
            a.terms.retain(|_, c| *c != 0.0);
        }
        self.entries.retain(|_, a| !a.is_empty());
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.size, self.size);
        for (&(i, j), a) in &self.entries {
            let v = a.eval(x);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        out
    }

    fn constant_matrix(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.size, self.size);
        for (&(i, j), a) in &self.entries {
            out[(i, j)] = a.constant;
            out[(j, i)] = a.constant;
        }
        out
    }

    /// Number of scalar rows this block contributes to the conic program.
    fn cone_dim(&self) -> usize {
        match self.kind {
            BlockKind::Psd => self.size * (self.size + 1) / 2,
            BlockKind::Equality => self.size,
        }
    }
}

/// Identifies a block inside an [`SDPProblem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockRef {
    Psd(usize),
    Equality(usize),
}

/// Variables of a symmetric Gram matrix declared through
/// [`SDPProblem::add_gram_block`].
#[derive(Clone, Debug)]
pub struct GramHandle {
    pub block: BlockRef,
    pub size: usize,
    vars: Vec<usize>,
}

impl GramHandle {
    /// Variable holding entry `(i, j)` (either order).
    pub fn var(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.vars[j * (j + 1) / 2 + i]
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| x[self.var(i, j)])
    }

    /// Square matrix of variable indices.
    pub fn index_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.var(i, j)).collect())
            .collect()
    }
}

/// What a certificate term contributes to `f - t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertRole {
    /// `b^T W b`, the SOS part `sigma`.
    Moment,
    /// Scalar localizer `g b^T W b` for a domain constraint.
    Domain,
    /// Scalar localizer for a constraint derived from `G`.
    Scalar,
    /// Kronecker localizer `<W, G ⊗ b b^T>`.
    Kron,
    /// `<H1, P^G>` of trace block pair `i`.
    TraceP(usize),
    /// `<H2, Q^G>` of trace block pair `i`.
    TraceQ(usize),
    /// Ideal multiplier (free sign).
    Equality,
}

impl CertRole {
    fn is_psd(self) -> bool {
        self != CertRole::Equality
    }
}

/// Where the multiplier matrix of a certificate term is read from.
#[derive(Clone, Debug)]
pub enum CertSource {
    /// Dual variable of a block (moment form).
    Dual(BlockRef),
    /// Primal Gram variables (SOS form), as a square index matrix.
    Vars(Vec<Vec<usize>>),
}

#[derive(Clone, Debug)]
pub struct CertTerm {
    pub name: String,
    pub role: CertRole,
    /// Square matrix `T` of polynomials; the term contributes `<W, T>`.
    pub template: Vec<Vec<MultiPoly>>,
    pub source: CertSource,
}

#[derive(Clone, Debug)]
pub enum CertForm {
    /// `t` is the value of the dual functional `-sum <C_b, Z_b>`.
    Moment,
    /// `t` is the primal variable `t_var`.
    Sos { t_var: usize },
}

/// Everything needed to turn a solution into a polynomial identity.
#[derive(Clone, Debug)]
pub struct CertData {
    /// The objective as fed to the solver (already divided by `objective_scale`).
    pub f: MultiPoly,
    /// Residuals are reduced modulo `x_i^2 = x_i`.
    pub binary: bool,
    pub form: CertForm,
    pub terms: Vec<CertTerm>,
    /// Monomial of each moment variable (moment form only).
    pub var_monomials: Vec<Option<Monomial>>,
}

/// A semidefinite program in LMI form.
#[derive(Clone, Debug)]
pub struct SDPProblem {
    pub sense: Sense,
    pub var_names: Vec<String>,
    pub objective: BTreeMap<usize, f64>,
    pub objective_constant: f64,
    /// Reported objective values are multiplied by this.
    pub objective_scale: f64,
    pub psd_blocks: Vec<Block>,
    pub equality_blocks: Vec<Block>,
    pub cert: Option<CertData>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl SDPProblem {
    pub fn new(sense: Sense) -> Self {
        SDPProblem {
            sense,
            var_names: Vec::new(),
            objective: BTreeMap::new(),
            objective_constant: 0.0,
            objective_scale: 1.0,
            psd_blocks: Vec::new(),
            equality_blocks: Vec::new(),
            cert: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.var_names.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        if coef == 0.0 {
            self.objective.remove(&var);
        } else {
            self.objective.insert(var, coef);
        }
    }

    pub fn add_block(&mut self, mut b: Block) -> BlockRef {
        b.canonicalize();
        match b.kind {
            BlockKind::Psd => {
                self.psd_blocks.push(b);
                BlockRef::Psd(self.psd_blocks.len() - 1)
            }
            BlockKind::Equality => {
                self.equality_blocks.push(b);
                BlockRef::Equality(self.equality_blocks.len() - 1)
            }
        }
    }

    /// Declares a PSD block whose entries are fresh variables.
    pub fn add_gram_block(&mut self, name: &str, size: usize) -> GramHandle {
        self.gram_block(name, size, true)
    }

    /// Declares a free symmetric matrix of fresh variables (no block).
    pub fn add_free_matrix(&mut self, name: &str, size: usize) -> GramHandle {
        self.gram_block(name, size, false)
    }

    fn gram_block(&mut self, name: &str, size: usize, psd: bool) -> GramHandle {
        let mut vars = Vec::with_capacity(size * (size + 1) / 2);
        let mut b = Block::psd(name, size);
        for j in 0..size {
            for i in 0..=j {
                let v = self.add_var(format!("{name}[{i},{j}]"));
                vars.push(v);
                b.add_term(i, j, v, 1.0);
            }
        }
        let block = if psd && size > 0 {
            self.add_block(b)
        } else {
            BlockRef::Psd(usize::MAX)
        };
        GramHandle { block, size, vars }
    }

    pub fn block(&self, r: BlockRef) -> &Block {
        match r {
            BlockRef::Psd(i) => &self.psd_blocks[i],
            BlockRef::Equality(i) => &self.equality_blocks[i],
        }
    }

    /// All blocks in export order: PSD blocks, then equality blocks.
    pub fn blocks(&self) -> impl Iterator<Item = (BlockRef, &Block)> {
        self.psd_blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (BlockRef::Psd(i), b))
            .chain(
                self.equality_blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (BlockRef::Equality(i), b)),
            )
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|(&k, &c)| c * x[k]).sum::<f64>()
    }

    /// Checks that every referenced variable exists.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |k: usize| k >= n;
        if self.objective.keys().any(|&k| bad(k)) {
            return Err(Error::InvalidArgument("objective references an undeclared variable".into()));
        }
        for (_, b) in self.blocks() {
            for (&(i, j), a) in &b.entries {
                if i > j || j >= b.size || a.terms.keys().any(|&k| bad(k)) {
                    return Err(Error::InvalidArgument(format!(
                        "block {} has an invalid entry ({i}, {j})",
                        b.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Equal data up to `tol` on every coefficient (certificate data and
    /// metadata are ignored).
    pub fn same_data(&self, other: &SDPProblem, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        let map_close = |a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>| {
            a.len() == b.len()
                && a.iter().zip(b).all(|((ka, va), (kb, vb))| ka == kb && close(*va, *vb))
        };
        let blocks_close = |a: &[Block], b: &[Block]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    x.name == y.name
                        && x.size == y.size
                        && x.kind == y.kind
                        && x.entries.len() == y.entries.len()
                        && x.entries.iter().zip(&y.entries).all(|((kx, ax), (ky, ay))| {
                            kx == ky
                                && close(ax.constant, ay.constant)
                                && map_close(&ax.terms, &ay.terms)
                        })
                })
        };
        self.sense == other.sense
            && self.var_names == other.var_names
            && map_close(&self.objective, &other.objective)
            && close(self.objective_constant, other.objective_constant)
            && close(self.objective_scale, other.objective_scale)
            && blocks_close(&self.psd_blocks, &other.psd_blocks)
            && blocks_close(&self.equality_blocks, &other.equality_blocks)
    }

    /// Solves with the in-tree backend.
    pub fn solve(&self, tol: f64) -> Result<SDPSolution> {
        solve(self, tol)
    }
}

/// Outcome classes of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Feasibility and optimality measures recomputed from the returned point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest violation over all blocks: `|entry|` for equality rows,
    /// `max(0, -lambda_min)` for PSD blocks.
    pub primal: f64,
    /// `||A^T z + c||_inf` together with dual cone violation.
    pub dual: f64,
    /// `|p - d| / (1 + |p| + |d|)` in solver units.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SDPSolution {
    pub status: SolveStatus,
    /// Primal objective, multiplied by the problem's `objective_scale`.
    pub objective_value: f64,
    /// Dual objective, same units.
    pub dual_objective: f64,
    pub x: Vec<f64>,
    /// Dual matrix of each PSD block.
    pub psd_duals: Vec<DMatrix<f64>>,
    /// Dual vector of each equality block.
    pub eq_duals: Vec<Vec<f64>>,
    pub residuals: Residuals,
    pub iterations: u32,
    pub solve_time: f64,
    pub backend: &'static str,
    pub diagnostics: String,
}

impl SDPSolution {
    fn failure(p: &SDPProblem, status: SolveStatus, diagnostics: String) -> Self {
        SDPSolution {
            status,
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
            x: vec![0.0; p.num_vars()],
            psd_duals: p
                .psd_blocks
                .iter()
                .map(|b| DMatrix::zeros(b.size, b.size))
                .collect(),
            eq_duals: p.equality_blocks.iter().map(|b| vec![0.0; b.size]).collect(),
            residuals: Residuals {
                primal: f64::NAN,
                dual: f64::NAN,
                gap: f64::NAN,
            },
            iterations: 0,
            solve_time: 0.0,
            backend: BACKEND_NAME,
            diagnostics,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    /// The moment vector, when the problem is a moment relaxation.
    pub fn moments(&self, p: &SDPProblem) -> Option<MomentVector> {
        let cert = p.cert.as_ref()?;
        let first = cert.var_monomials.iter().flatten().next()?;
        let order = cert
            .var_monomials
            .iter()
            .flatten()
            .map(Monomial::degree)
            .max()
            .unwrap_or(0);
        let mut y = MomentVector::zeros(first.n(), order);
        for (k, m) in cert.var_monomials.iter().enumerate() {
            if let Some(m) = m {
                y.set(m, self.x[k]).ok()?;
            }
        }
        Some(y)
    }

    /// `{status, objective, residuals, spectra}` with the eigenvalues of
    /// every PSD block at the returned point.
    pub fn to_json(&self, p: &SDPProblem) -> serde_json::Value {
        let spectra: Vec<serde_json::Value> = p
            .psd_blocks
            .iter()
            .map(|b| {
                let ev = if self.x.iter().all(|v| v.is_finite()) {
                    sym_eigvals_desc(b.eval(&self.x))
                } else {
                    Vec::new()
                };
                serde_json::json!({"block": b.name, "eigenvalues": ev})
            })
            .collect();
        serde_json::json!({
            "status": self.status,
            "objective": finite_or_null(self.objective_value),
            "dual_objective": finite_or_null(self.dual_objective),
            "residuals": {
                "primal": finite_or_null(self.residuals.primal),
                "dual": finite_or_null(self.residuals.dual),
                "gap": finite_or_null(self.residuals.gap),
            },
            "iterations": self.iterations,
            "backend": self.backend,
            "diagnostics": self.diagnostics,
            "spectra": spectra,
        })
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

const BACKEND_NAME: &str = "clarabel";

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

/// Position of `(i, j)`, `i <= j`, in the column-wise upper-triangle `svec`.
fn svec_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

fn smat(v: &[f64], size: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(size, size);
    for j in 0..size {
        for i in 0..=j {
            let z = v[svec_index(i, j)];
            if i == j {
                out[(i, i)] = z;
            } else {
                out[(i, j)] = z / sqrt2();
                out[(j, i)] = z / sqrt2();
            }
        }
    }
    out
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Conic data `A x + s = b`, `s in K` for the backend.
struct ConicData {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    offsets: Vec<usize>,
}

fn conic_data(p: &SDPProblem) -> ConicData {
    let mut d = ConicData {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
        b: Vec::new(),
        cones: Vec::new(),
        offsets: Vec::new(),
    };
    let mut row0 = 0;
    for (_, blk) in p.blocks() {
        d.offsets.push(row0);
        let dim = blk.cone_dim();
        d.b.extend(std::iter::repeat_n(0.0, dim));
        for (&(i, j), a) in &blk.entries {
            let (row, w) = match blk.kind {
                BlockKind::Psd => (row0 + svec_index(i, j), if i == j { 1.0 } else { sqrt2() }),
                BlockKind::Equality => (row0 + i, 1.0),
            };
            d.b[row] = w * a.constant;
            for (&k, &c) in &a.terms {
                d.rows.push(row);
                d.cols.push(k);
                d.vals.push(-w * c);
            }
        }
        d.cones.push(match (blk.kind, blk.size) {
            (BlockKind::Equality, s) => SupportedConeT::ZeroConeT(s),
            (BlockKind::Psd, 1) => SupportedConeT::NonnegativeConeT(1),
            (BlockKind::Psd, s) => SupportedConeT::PSDTriangleConeT(s),
        });
        row0 += dim;
    }
    d
}

/// Solves `p` with the Clarabel interior-point method.
///
/// The backend's own residuals are not used: feasibility, dual feasibility and
/// the gap are recomputed here from the returned primal and dual points.
pub fn solve(p: &SDPProblem, tol: f64) -> Result<SDPSolution> {
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "tol must lie in [1e-10, 1e-4], got {tol:e}"
        )));
    }
    p.validate()?;
    let start = Instant::now();
    let n = p.num_vars();
    let data = conic_data(p);
    let m = data.b.len();
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut q = vec![0.0; n];
    for (&k, &c) in &p.objective {
        q[k] = sign * c;
    }
    let a = CscMatrix::new_from_triplets(m, n, data.rows.clone(), data.cols.clone(), data.vals.clone());
    let pmat = CscMatrix::<f64>::zeros((n, n));
    let settings = match DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .max_iter(300)
        .chordal_decomposition_enable(false)
        .build()
    {
        Ok(s) => s,
        Err(e) => {
            return Ok(SDPSolution::failure(
                p,
                SolveStatus::NumericalFailure,
                format!("settings rejected: {e:?}"),
            ));
        }
    };
    let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let mut solver = DefaultSolver::new(&pmat, &q, &a, &data.b, &data.cones, settings)
            .map_err(|e| format!("{e:?}"))?;
        solver.solve();
        Ok::<_, String>(solver.solution)
    }));
    let sol = match run {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => {
            return Ok(SDPSolution::failure(
                p,
                SolveStatus::NumericalFailure,
                format!("backend setup failed: {e}"),
            ));
        }
        Err(_) => {
            return Ok(SDPSolution::failure(
                p,
                SolveStatus::NumericalFailure,
                "backend panicked".into(),
            ));
        }
    };

    let x = sol.x.clone();
    let z = sol.z.clone();
    let mut psd_duals = Vec::new();
    let mut eq_duals = Vec::new();
    for ((_, blk), &off) in p.blocks().zip(&data.offsets) {
        let zs = &z[off..off + blk.cone_dim()];
        match blk.kind {
            BlockKind::Psd => psd_duals.push(smat(zs, blk.size)),
            BlockKind::Equality => eq_duals.push(zs.to_vec()),
        }
    }

    // Independent residuals.
    let all_finite = x.iter().chain(&z).all(|v| v.is_finite());
    let mut residuals = Residuals::default();
    let (pobj, dobj);
    if all_finite {
        let mut primal: f64 = 0.0;
        for (_, blk) in p.blocks() {
            let val = blk.eval(&x);
            primal = primal.max(match blk.kind {
                BlockKind::Psd => (-min_eig(&val)).max(0.0),
                BlockKind::Equality => val.diagonal().amax(),
            });
        }
        // A^T z + q
        let mut aty = q.clone();
        for ((&r, &c), &v) in data.rows.iter().zip(&data.cols).zip(&data.vals) {
            aty[c] += v * z[r];
        }
        let mut dual = aty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for zm in &psd_duals {
            dual = dual.max((-min_eig(zm)).max(0.0));
        }
        let qx: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
        let bz: f64 = data.b.iter().zip(&z).map(|(a, b)| a * b).sum();
        let (ps, ds) = (qx, -bz);
        residuals = Residuals {
            primal,
            dual,
            gap: (ps - ds).abs() / (1.0 + ps.abs() + ds.abs()),
        };
        pobj = p.objective_scale * (sign * ps + p.objective_constant);
        dobj = p.objective_scale * (sign * ds + p.objective_constant);
    } else {
        pobj = f64::NAN;
        dobj = f64::NAN;
        residuals.primal = f64::NAN;
        residuals.dual = f64::NAN;
        residuals.gap = f64::NAN;
    }

    let mut status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    };
    let mut diagnostics = format!("backend status {:?}", sol.status);
    if status == SolveStatus::Optimal
        && !(residuals.gap <= tol && residuals.primal <= 10.0 * tol)
    {
        status = SolveStatus::NearOptimal;
        let _ = write!(
            diagnostics,
            "; downgraded: recomputed gap {:.2e}, primal residual {:.2e}",
            residuals.gap, residuals.primal
        );
    }
    Ok(SDPSolution {
        status,
        objective_value: pobj,
        dual_objective: dobj,
        x,
        psd_duals,
        eq_duals,
        residuals,
        iterations: sol.iterations,
        solve_time: start.elapsed().as_secs_f64(),
        backend: BACKEND_NAME,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// SDPA sparse format

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `p` in SDPA sparse format: `min c^T x` subject to
/// `sum_k F_k x_k - F_0 ⪰ 0`, so `F_0 = -C`. Each equality block of `r` rows
/// becomes a diagonal block of size `2r` holding `e >= 0` and `-e >= 0`.
/// Leading `*` comment lines record names, block kinds, the sense and the
/// objective constant and scale, which [`import_sdpa`] reads back.
pub fn write_sdpa<W: Write>(p: &SDPProblem, w: &mut W) -> Result<()> {
    p.validate()?;
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut s = String::new();
    let _ = writeln!(s, "* pmi-sos sdpa-sparse");
    let _ = writeln!(s, "* sense {}", if p.sense == Sense::Min { "min" } else { "max" });
    let _ = writeln!(s, "* objective_constant {}", fmt_num(p.objective_constant));
    let _ = writeln!(s, "* objective_scale {}", fmt_num(p.objective_scale));
    for (k, name) in p.var_names.iter().enumerate() {
        let _ = writeln!(s, "* var {} {}", k + 1, name);
    }
    for (b, (_, blk)) in p.blocks().enumerate() {
        let kind = if blk.kind == BlockKind::Psd { "psd" } else { "eq" };
        let _ = writeln!(s, "* block {} {} {}", b + 1, kind, blk.name);
    }
    let nblocks = p.psd_blocks.len() + p.equality_blocks.len();
    let _ = writeln!(s, "{}", p.num_vars());
    let _ = writeln!(s, "{nblocks}");
    let sizes: Vec<String> = p
        .blocks()
        .map(|(_, b)| match b.kind {
            BlockKind::Psd => b.size.to_string(),
            BlockKind::Equality => format!("-{}", 2 * b.size),
        })
        .collect();
    let _ = writeln!(s, "{}", sizes.join(" "));
    let c: Vec<String> = (0..p.num_vars())
        .map(|k| fmt_num(sign * p.objective.get(&k).copied().unwrap_or(0.0)))
        .collect();
    let _ = writeln!(s, "{}", c.join(" "));
    // lines sorted by (matrix, block, i, j)
    let mut lines: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    for (b, (_, blk)) in p.blocks().enumerate() {
        for (&(i, j), a) in &blk.entries {
            let mut put = |ii: usize, jj: usize, s: f64| {
                if a.constant != 0.0 {
                    lines.insert((0, b + 1, ii, jj), -s * a.constant);
                }
                for (&k, &v) in &a.terms {
                    lines.insert((k + 1, b + 1, ii, jj), s * v);
                }
            };
            match blk.kind {
                BlockKind::Psd => put(i + 1, j + 1, 1.0),
                BlockKind::Equality => {
                    put(2 * i + 1, 2 * i + 1, 1.0);
                    put(2 * i + 2, 2 * i + 2, -1.0);
                }
            }
        }
    }
    for ((k, b, i, j), v) in lines {
        let _ = writeln!(s, "{k} {b} {i} {j} {}", fmt_num(v));
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn export_sdpa(p: &SDPProblem, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sdpa(p, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn sdpa_string(p: &SDPProblem) -> Result<String> {
    let mut buf = Vec::new();
    write_sdpa(p, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

/// Reads SDPA sparse data. Files written by [`write_sdpa`] come back with
/// names, block kinds and sense intact; foreign files are read as
/// minimization problems whose diagonal (LP) blocks become diagonal PSD blocks.
pub fn read_sdpa<R: BufRead>(r: R) -> Result<SDPProblem> {
    let mut sense = Sense::Min;
    let mut objective_constant = 0.0;
    let mut objective_scale = 1.0;
    let mut var_names: BTreeMap<usize, String> = BTreeMap::new();
    let mut block_info: BTreeMap<usize, (String, String)> = BTreeMap::new();
    let mut tokens: Vec<String> = Vec::new();
    let perr = |m: String| Error::Parse(m);
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('*') {
            let rest = rest.trim();
            let mut it = rest.splitn(2, ' ');
            let key = it.next().unwrap_or("");
            let val = it.next().unwrap_or("").trim();
            let num = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("{key}: {e}")));
            match key {
                "sense" => sense = if val == "max" { Sense::Max } else { Sense::Min },
                "objective_constant" => objective_constant = num(val)?,
                "objective_scale" => objective_scale = num(val)?,
                "var" => {
                    let mut p = val.splitn(2, ' ');
                    let idx: usize = p.next().unwrap_or("").parse().map_err(|_| perr(format!("bad var line {t:?}")))?;
                    var_names.insert(idx, p.next().unwrap_or("").to_string());
                }
                "block" => {
                    let mut p = val.splitn(3, ' ');
                    let idx: usize = p.next().unwrap_or("").parse().map_err(|_| perr(format!("bad block line {t:?}")))?;
                    let kind = p.next().unwrap_or("").to_string();
                    let name = p.next().unwrap_or("").to_string();
                    block_info.insert(idx, (kind, name));
                }
                _ => {}
            }
            continue;
        }
        if t.starts_with('"') || t.is_empty() {
            continue;
        }
        tokens.extend(
            t.split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        );
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| perr(format!("unexpected end of file reading {what}")));
    let mdim: usize = next("mDIM")?.parse().map_err(|e| perr(format!("mDIM: {e}")))?;
    let nblock: usize = next("nBLOCK")?.parse().map_err(|e| perr(format!("nBLOCK: {e}")))?;
    let mut sizes = Vec::with_capacity(nblock);
    for _ in 0..nblock {
        let s: i64 = next("bLOCKsTRUCT")?.parse().map_err(|e| perr(format!("bLOCKsTRUCT: {e}")))?;
        if s == 0 {
            return Err(perr("zero block size".into()));
        }
        sizes.push(s);
    }
    let mut c = Vec::with_capacity(mdim);
    for _ in 0..mdim {
        c.push(next("c")?.parse::<f64>().map_err(|e| perr(format!("c: {e}")))?);
    }
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    loop {
        let Some(k) = it.next() else { break };
        let mut field = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| perr(format!("truncated entry line ({what})")))?
                .parse()
                .map_err(|e| perr(format!("{what}: {e}")))
        };
        let k: usize = k.parse().map_err(|e| perr(format!("matrix index: {e}")))?;
        let b = field("block")?;
        let i = field("i")?;
        let j = field("j")?;
        let v: f64 = it
            .next()
            .ok_or_else(|| perr("truncated entry line (value)".into()))?
            .parse()
            .map_err(|e| perr(format!("value: {e}")))?;
        if k > mdim || b == 0 || b > nblock || i == 0 || j == 0 {
            return Err(perr(format!("entry {k} {b} {i} {j} out of range")));
        }
        let bs = sizes[b - 1].unsigned_abs() as usize;
        if i > bs || j > bs {
            return Err(perr(format!("entry {k} {b} {i} {j} outside block")));
        }
        entries.push((k, b, i, j, v));
    }

    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut p = SDPProblem::new(sense);
    p.objective_constant = objective_constant;
    p.objective_scale = objective_scale;
    for k in 1..=mdim {
        p.add_var(var_names.get(&k).cloned().unwrap_or_else(|| format!("x{k}")));
    }
    for (k, &ck) in c.iter().enumerate() {
        p.set_objective(k, sign * ck);
    }
    let mut blocks: Vec<Block> = sizes
        .iter()
        .enumerate()
        .map(|(b, &s)| {
            let (kind, name) = block_info
                .get(&(b + 1))
                .cloned()
                .unwrap_or_else(|| ("psd".into(), format!("block{}", b + 1)));
            if kind == "eq" && s < 0 {
                Block::equality(name, s.unsigned_abs() as usize / 2)
            } else {
                Block::psd(name, s.unsigned_abs() as usize)
            }
        })
        .collect();
    for (k, b, i, j, v) in entries {
        let blk = &mut blocks[b - 1];
        let (i, j) = (i - 1, j - 1);
        if blk.kind == BlockKind::Equality {
            if i != j {
                return Err(perr(format!("off-diagonal entry in equality block {b}")));
            }
            if i % 2 == 1 {
                continue; // mirrored row
            }
            let row = i / 2;
            if k == 0 {
                blk.add_constant(row, row, -v);
            } else {
                blk.add_term(row, row, k - 1, v);
            }
        } else if sizes[b - 1] < 0 && i != j {
            return Err(perr(format!("off-diagonal entry in diagonal block {b}")));
        } else if k == 0 {
            blk.add_constant(i, j, -v);
        } else {
            blk.add_term(i, j, k - 1, v);
        }
    }
    for b in blocks {
        p.add_block(b);
    }
    Ok(p)
}

pub fn import_sdpa(path: impl AsRef<Path>) -> Result<SDPProblem> {
    read_sdpa(std::io::BufReader::new(std::fs::File::open(path)?))
}

// ---------------------------------------------------------------------------
// Certificates

/// One multiplier matrix of a certificate.
#[derive(Clone, Debug)]
pub struct CertBlock {
    pub name: String,
    pub role: CertRole,
    pub gram: DMatrix<f64>,
    /// Smallest eigenvalue before projection.
    pub raw_min_eig: f64,
}

/// A recovered identity `f - t = sum_b <W_b, T_b> + residual`, in the units
/// of the original objective.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub t: f64,
    /// `||residual||_1` (coefficient norm), reduced modulo `x_i^2 = x_i` on
    /// the binary domain.
    pub residual: f64,
    /// `t - residual`; valid since `|x^alpha| <= 1` on both domains.
    pub certified_bound: f64,
    pub blocks: Vec<CertBlock>,
}

fn grams_with(c: &Certificate, pred: impl Fn(CertRole) -> bool) -> Vec<&DMatrix<f64>> {
    c.blocks.iter().filter(|b| pred(b.role)).map(|b| &b.gram).collect()
}

impl Certificate {
    /// Gram matrix of the SOS part `sigma`.
    pub fn sigma_gram(&self) -> Option<&DMatrix<f64>> {
        grams_with(self, |r| r == CertRole::Moment).into_iter().next()
    }

    /// Gram matrices of the domain localizers.
    pub fn domain_grams(&self) -> Vec<&DMatrix<f64>> {
        grams_with(self, |r| r == CertRole::Domain)
    }

    /// `H1` of every trace-block pair.
    pub fn h1(&self) -> Vec<&DMatrix<f64>> {
        grams_with(self, |r| matches!(r, CertRole::TraceP(_)))
    }

    /// `H2` of every trace-block pair.
    pub fn h2(&self) -> Vec<&DMatrix<f64>> {
        grams_with(self, |r| matches!(r, CertRole::TraceQ(_)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mat = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        serde_json::json!({
            "t": self.t,
            "residual": self.residual,
            "certified_bound": self.certified_bound,
            "blocks": self.blocks.iter().map(|b| serde_json::json!({
                "name": b.name,
                "role": b.role,
                "size": b.gram.nrows(),
                "raw_min_eig": b.raw_min_eig,
                "gram": mat(&b.gram),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Projects a symmetric matrix onto `{eigenvalues >= EIG_FLOOR} ∪ {0}`:
/// eigenvalues below the floor are set to zero.
fn project_psd(w: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let sym = (w + w.transpose()) * 0.5;
    if sym.nrows() == 0 {
        return (sym, 0.0);
    }
    let eig = SymmetricEigen::new(sym);
    let raw_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let clipped = eig.eigenvalues.map(|l| if l < EIG_FLOOR { 0.0 } else { l });
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (out, raw_min)
}

/// `sum_ij W_ij T_ij`.
pub fn pair_template(w: &DMatrix<f64>, t: &[Vec<MultiPoly>], n: usize) -> MultiPoly {
    let mut acc = MultiPoly::zero(n);
    for (i, row) in t.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let c = w[(i, j)];
            if c != 0.0 && !p.is_zero() {
                acc.axpy(c, p);
            }
        }
    }
    acc
}

/// Recovers the SOS certificate of a solved relaxation.
///
/// Multipliers come from the block duals (moment form) or from the primal
/// Gram variables (SOS form). PSD multipliers are symmetrized and their
/// eigenvalues below [`EIG_FLOOR`] zeroed; the polynomial identity is then
/// re-evaluated and its residual stored.
pub fn extract_certificate(p: &SDPProblem, s: &SDPSolution) -> Result<Certificate> {
    if !s.is_solved() {
        return Err(Error::InvalidArgument(format!(
            "cannot extract a certificate from status {:?}",
            s.status
        )));
    }
    let cert = p
        .cert
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("problem carries no certificate data".into()))?;
    let n = cert.f.n();
    let scale = p.objective_scale;
    let mut total = MultiPoly::zero(n);
    let mut blocks = Vec::new();
    for term in &cert.terms {
        let size = term.template.len();
        let raw = match &term.source {
            CertSource::Dual(BlockRef::Psd(i)) => s.psd_duals[*i].clone(),
            CertSource::Dual(BlockRef::Equality(i)) => DMatrix::from_diagonal(
                &nalgebra::DVector::from_column_slice(&s.eq_duals[*i]),
            ),
            CertSource::Vars(idx) => DMatrix::from_fn(size, size, |i, j| s.x[idx[i][j]]),
        };
        let (gram, raw_min) = if term.role.is_psd() {
            project_psd(&raw)
        } else {
            (raw, f64::NAN)
        };
        total = &total + &pair_template(&gram, &term.template, n);
        blocks.push(CertBlock {
            name: term.name.clone(),
            role: term.role,
            gram: gram * scale,
            raw_min_eig: raw_min * scale,
        });
    }
    let t = match cert.form {
        CertForm::Moment => {
            let mut t = 0.0;
            for (r, blk) in p.blocks() {
                let c = blk.constant_matrix();
                let z = match r {
                    BlockRef::Psd(i) => s.psd_duals[i].clone(),
                    BlockRef::Equality(i) => DMatrix::from_diagonal(
                        &nalgebra::DVector::from_column_slice(&s.eq_duals[i]),
                    ),
                };
                t -= c.component_mul(&z).sum();
            }
            t
        }
        CertForm::Sos { t_var } => s.x[t_var],
    };
    let mut resid = &(&cert.f - &total) - &MultiPoly::constant(n, t);
    if cert.binary {
        resid = resid.reduce_binary();
    }
    let residual = resid.coef_norm() * scale;
    let t = t * scale;
    if !(residual <= CERT_TOL) {
        return Err(Error::CertificateRejected(format!(
            "reconstruction residual {residual:.3e} exceeds {CERT_TOL:e}"
        )));
    }
    Ok(Certificate {
        t,
        residual,
        certified_bound: t - residual,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SDPProblem {
        // min y  s.t. [y] ⪰ 0
        let mut p = SDPProblem::new(Sense::Min);
        let y = p.add_var("y");
        p.set_objective(y, 1.0);
        let mut b = Block::psd("b", 1);
        b.add_term(0, 0, y, 1.0);
        p.add_block(b);
        p
    }

    #[test]
    fn svec_round_trip_in_solver() {
        // min -y  s.t. [[1, y], [y, 1]] ⪰ 0  ->  y = 1
        let mut p = SDPProblem::new(Sense::Min);
        let y = p.add_var("y");
        p.set_objective(y, -1.0);
        let mut b = Block::psd("m", 2);
        b.add_constant(0, 0, 1.0);
        b.add_constant(1, 1, 1.0);
        b.add_term(0, 1, y, 1.0);
        p.add_block(b);
        let s = p.solve(1e-9).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-6);
        assert!((s.objective_value + 1.0).abs() < 1e-7);
        // dual: <T_y, Z> = q_y = -1 -> 2 Z_01 = -1
        assert!((2.0 * s.psd_duals[0][(0, 1)] + 1.0).abs() < 1e-7);
    }

    #[test]
    fn tiny_problem_solves() {
        let s = tiny().solve(DEFAULT_TOL).unwrap();
        assert!(s.is_solved());
        assert!(s.objective_value.abs() < 1e-6);
    }

    #[test]
    fn infeasible_toy() {
        // y0 = 1 and [-y0] ⪰ 0
        let mut p = SDPProblem::new(Sense::Min);
        let y = p.add_var("y0");
        let mut e = Block::equality("norm", 1);
        e.add_term(0, 0, y, 1.0);
        e.add_constant(0, 0, -1.0);
        p.add_block(e);
        let mut b = Block::psd("neg", 1);
        b.add_term(0, 0, y, -1.0);
        p.add_block(b);
        let s = p.solve(DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn max_sense_and_tolerance_guard() {
        // max y  s.t. 1 - y >= 0
        let mut p = SDPProblem::new(Sense::Max);
        let y = p.add_var("y");
        p.set_objective(y, 1.0);
        let mut b = Block::psd("b", 1);
        b.add_constant(0, 0, 1.0);
        b.add_term(0, 0, y, -1.0);
        p.add_block(b);
        let s = p.solve(DEFAULT_TOL).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-7);
        assert!(p.solve(1e-2).is_err());
    }

    #[test]
    fn sdpa_block_count_line() {
        let mut p = tiny();
        let mut e = Block::equality("e", 2);
        e.add_term(0, 0, 0, 1.0);
        e.add_constant(1, 1, 2.0);
        e.add_term(1, 1, 0, 1.0);
        p.add_block(e);
        let text = sdpa_string(&p).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(body[0], "1");
        assert_eq!(body[1], "2");
        assert_eq!(body[2], "1 -4");
        let back = read_sdpa(text.as_bytes()).unwrap();
        assert!(back.same_data(&p, 0.0));
    }

    #[test]
    fn gram_handle_indexing() {
        let mut p = SDPProblem::new(Sense::Min);
        let g = p.add_gram_block("X", 3);
        assert_eq!(p.num_vars(), 6);
        assert_eq!(g.var(0, 2), g.var(2, 0));
        let x: Vec<f64> = (0..6).map(|v| v as f64).collect();
        let m = g.value(&x);
        assert_eq!(m, m.transpose());
        assert_eq!(p.psd_blocks[0].eval(&x), m);
    }
}
