//! Assembly of the moment relaxations and their SOS duals.
//!
//! Every relaxation is described by a list of templates: square matrices of
//! polynomials `T` whose Riesz image `L_y(T)` must be PSD (or zero). The
//! moment form introduces one scalar `y_alpha` per monomial; the SOS form
//! introduces one Gram matrix per template and matches coefficients.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result, check_dim};
use crate::instance::{Domain, Instance};
use crate::matpoly::SymPolyMatrix;
use crate::oracle::sample_ball;
use crate::poly::{Monomial, MomentVector, MultiPoly, monomial_basis, riesz};
use crate::sdp::{
    Block, BlockKind, CertData, CertForm, CertRole, CertSource, CertTerm, SDPProblem, Sense,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxKind {
    /// Trace blocks over the hypercube.
    ProposedBinary,
    /// Trace blocks over the unit ball.
    ProposedBall,
    /// One trace-block pair per diagonal block `G_i`.
    BlockDiag,
    /// Kronecker localizer `M_(r-l)(G y)`.
    HolScherer,
    /// Scalar localizers of the characteristic coefficients (or of the
    /// diagonal, when `G` is diagonal).
    ScalarLasserre,
}

impl RelaxKind {
    pub fn name(self) -> &'static str {
        match self {
            RelaxKind::ProposedBinary => "proposed_binary",
            RelaxKind::ProposedBall => "proposed_ball",
            RelaxKind::BlockDiag => "block_diag",
            RelaxKind::HolScherer => "holscherer",
            RelaxKind::ScalarLasserre => "scalar_lasserre",
        }
    }

    /// The proposed kind matching a domain.
    pub fn proposed(domain: Domain) -> Self {
        match domain {
            Domain::Binary => RelaxKind::ProposedBinary,
            Domain::Ball => RelaxKind::ProposedBall,
        }
    }
}

impl std::str::FromStr for RelaxKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "proposed_binary" => Ok(RelaxKind::ProposedBinary),
            "proposed_ball" => Ok(RelaxKind::ProposedBall),
            "block_diag" | "blockdiag" => Ok(RelaxKind::BlockDiag),
            "holscherer" | "hol_scherer" => Ok(RelaxKind::HolScherer),
            "scalar_lasserre" | "scalarlasserre" | "scalar" => Ok(RelaxKind::ScalarLasserre),
            _ => Err(Error::InvalidArgument(format!("unknown relaxation kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RelaxSpec {
    pub kind: RelaxKind,
    pub domain: Domain,
    pub r: u32,
    /// Diagonal blocks for [`RelaxKind::BlockDiag`].
    pub blocks: Option<Vec<SymPolyMatrix>>,
    /// Binary domain only: keep the full monomial basis and add the
    /// `M_(r-1)((x_i^2 - x_i) y) = 0` blocks instead of reducing to
    /// square-free monomials.
    pub explicit_equalities: bool,
    /// Divide `G` by its normalizing factor when it is not already normalized.
    pub normalize: bool,
}

impl RelaxSpec {
    pub fn new(kind: RelaxKind, domain: Domain, r: u32) -> Self {
        let domain = match kind {
            RelaxKind::ProposedBinary => Domain::Binary,
            RelaxKind::ProposedBall => Domain::Ball,
            _ => domain,
        };
        RelaxSpec {
            kind,
            domain,
            r,
            blocks: None,
            explicit_equalities: false,
            normalize: false,
        }
    }

    /// Spec for an instance, carrying over its blocks and normalization flag.
    pub fn for_instance(kind: RelaxKind, inst: &Instance, r: u32) -> Self {
        let mut s = Self::new(kind, inst.domain, r);
        s.blocks = inst.blocks.clone();
        s.normalize = inst.normalize;
        s
    }

    fn squarefree(&self) -> bool {
        self.domain == Domain::Binary && !self.explicit_equalities
    }
}

/// `v* = ceil((floor(r / l) - 1) / 2)`; `None` when `floor(r / l) < 1`.
pub fn trace_order(r: u32, l: u32) -> Option<u32> {
    let l = l.max(1);
    let k = (r / l).checked_sub(1)?;
    Some(k.div_ceil(2))
}

/// A square matrix of polynomials whose Riesz image forms one SDP block.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTemplate {
    pub row_basis: Vec<Monomial>,
    pub entry_polys: Vec<Vec<MultiPoly>>,
    /// Pinned to zero rather than required PSD.
    pub equality: bool,
}

impl MomentTemplate {
    pub fn size(&self) -> usize {
        self.entry_polys.len()
    }

    pub fn max_degree(&self) -> u32 {
        self.entry_polys
            .iter()
            .flatten()
            .map(MultiPoly::degree)
            .max()
            .unwrap_or(0)
    }

    /// `L_y(T)` entrywise.
    pub fn riesz_eval(&self, y: &MomentVector) -> Result<DMatrix<f64>> {
        let s = self.size();
        let mut out = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                out[(i, j)] = riesz(&self.entry_polys[i][j], y)?;
            }
        }
        Ok(out)
    }

    /// `T(x)` entrywise.
    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.size();
        let mut out = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                out[(i, j)] = self.entry_polys[i][j].eval(x)?;
            }
        }
        Ok(out)
    }
}

fn weighted_template(g: &MultiPoly, basis: Vec<Monomial>, equality: bool) -> MomentTemplate {
    let entry_polys = basis
        .iter()
        .map(|a| {
            basis
                .iter()
                .map(|b| {
                    let mut p = g.clone();
                    let shift = MultiPoly::monomial(a.mul(b), 1.0);
                    p = &p * &shift;
                    p
                })
                .collect()
        })
        .collect();
    MomentTemplate {
        row_basis: basis,
        entry_polys,
        equality,
    }
}

/// `M_r(y)`: entry `(alpha, beta)` is `x^(alpha + beta)`.
pub fn moment_template(n: usize, r: u32, squarefree: bool) -> MomentTemplate {
    weighted_template(&MultiPoly::constant(n, 1.0), monomial_basis(n, r, squarefree), false)
}

fn localize_on(g: &MultiPoly, n: usize, r: u32, squarefree: bool, equality: bool) -> Result<MomentTemplate> {
    check_dim(n, g.n())?;
    let half = g.degree().div_ceil(2);
    if r < half {
        return Err(Error::OrderTooSmall { r, min: half });
    }
    Ok(weighted_template(g, monomial_basis(n, r - half, squarefree), equality))
}

/// `M_(r - ceil(deg g / 2))(g y)`: entry `(alpha, beta)` is `g x^(alpha + beta)`.
pub fn localize_scalar(g: &MultiPoly, n: usize, r: u32) -> Result<MomentTemplate> {
    localize_on(g, n, r, false, false)
}

/// As [`localize_scalar`], flagged as an equality block.
pub fn localize_equality(g: &MultiPoly, n: usize, r: u32) -> Result<MomentTemplate> {
    localize_on(g, n, r, false, true)
}

fn kron_on(g: &SymPolyMatrix, n: usize, r: u32, squarefree: bool) -> Result<MomentTemplate> {
    check_dim(n, g.n())?;
    let l = g.hierarchy_l();
    if r < l {
        return Err(Error::OrderTooSmall { r, min: l });
    }
    let basis = monomial_basis(n, r - l, squarefree);
    let s = basis.len();
    let m = g.m();
    let mut entry_polys = vec![vec![MultiPoly::zero(n); m * s]; m * s];
    for p in 0..m {
        for q in 0..m {
            let gpq = g.get(p, q);
            for (a, ma) in basis.iter().enumerate() {
                for (b, mb) in basis.iter().enumerate() {
                    entry_polys[p * s + a][q * s + b] =
                        gpq * &MultiPoly::monomial(ma.mul(mb), 1.0);
                }
            }
        }
    }
    let row_basis = (0..m).flat_map(|_| basis.iter().cloned()).collect();
    Ok(MomentTemplate {
        row_basis,
        entry_polys,
        equality: false,
    })
}

/// `M_(r-l)(G y) = L_y(G ⊗ b_(r-l) b_(r-l)^T)`, of size `m * C(n + r - l, n)`.
pub fn localize_kron(g: &SymPolyMatrix, n: usize, r: u32) -> Result<MomentTemplate> {
    kron_on(g, n, r, false)
}

fn trace_template(g: &SymPolyMatrix, v: u32) -> (MomentTemplate, Option<MomentTemplate>) {
    let tb = g.trace_blocks(v);
    let p = MomentTemplate {
        row_basis: Vec::new(),
        entry_polys: tb.p,
        equality: false,
    };
    let q = (v > 0).then(|| MomentTemplate {
        row_basis: Vec::new(),
        entry_polys: tb.q,
        equality: false,
    });
    (p, q)
}

struct Part {
    name: String,
    role: CertRole,
    tmpl: MomentTemplate,
}

struct Parts {
    n: usize,
    squarefree: bool,
    binary: bool,
    f: MultiPoly,
    parts: Vec<Part>,
    meta: BTreeMap<String, serde_json::Value>,
}

/// Spectral radius bound of `G` over the domain, by enumeration (binary,
/// `n <= 16`) or deterministic sampling (ball). The coefficient bound is used
/// when it already certifies `<= 1`.
pub fn spectral_radius_estimate(g: &SymPolyMatrix, domain: Domain) -> Result<f64> {
    let bound = g.sufficient_scale(1.0);
    if bound <= 1.0 {
        return Ok(bound);
    }
    let n = g.n();
    let rho_at = |x: &[f64]| -> Result<f64> {
        let ev = g.eigvals_sorted(x)?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    };
    let mut rho: f64 = 0.0;
    match domain {
        Domain::Binary if n <= 16 => {
            for bits in 0u32..(1 << n) {
                let x: Vec<f64> = (0..n).map(|i| ((bits >> i) & 1) as f64).collect();
                rho = rho.max(rho_at(&x)?);
            }
        }
        Domain::Binary => return Ok(bound),
        Domain::Ball => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            rho = rho.max(rho_at(&vec![0.0; n])?);
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut x = vec![0.0; n];
                    x[i] = s;
                    rho = rho.max(rho_at(&x)?);
                }
            }
            for _ in 0..4096 {
                rho = rho.max(rho_at(&sample_ball(n, &mut rng))?);
            }
        }
    }
    Ok(rho)
}

fn normalized(
    g: &SymPolyMatrix,
    spec: &RelaxSpec,
    label: &str,
    meta: &mut BTreeMap<String, serde_json::Value>,
) -> Result<SymPolyMatrix> {
    let rho = spectral_radius_estimate(g, spec.domain)?;
    if rho <= 1.0 + 1e-12 {
        meta.insert(format!("{label}_scale"), json!(1.0));
        return Ok(g.clone());
    }
    if !spec.normalize {
        return Err(Error::Unnormalized { rho });
    }
    let (gn, scale) = g.normalize(1.0)?;
    meta.insert(format!("{label}_scale"), json!(scale));
    Ok(gn)
}

fn domain_parts(spec: &RelaxSpec, n: usize, parts: &mut Vec<Part>) -> Result<()> {
    let r = spec.r;
    match spec.domain {
        Domain::Ball => {
            let mut g = MultiPoly::constant(n, 1.0);
            for i in 0..n {
                g.axpy(-1.0, &MultiPoly::var(n, i).pow(2));
            }
            parts.push(Part {
                name: "ball".into(),
                role: CertRole::Domain,
                tmpl: localize_on(&g, n, r, false, false)?,
            });
        }
        Domain::Binary if spec.explicit_equalities => {
            for i in 0..n {
                let x = MultiPoly::var(n, i);
                let g = &x.pow(2) - &x;
                parts.push(Part {
                    name: format!("eq_x{}", i + 1),
                    role: CertRole::Equality,
                    tmpl: localize_on(&g, n, r, false, true)?,
                });
            }
        }
        Domain::Binary => {}
    }
    Ok(())
}

fn prepare(f: &MultiPoly, g: &SymPolyMatrix, spec: &RelaxSpec) -> Result<Parts> {
    let n = f.n();
    check_dim(n, g.n())?;
    let r = spec.r;
    let squarefree = spec.squarefree();
    let binary = spec.domain == Domain::Binary;
    let mut meta = BTreeMap::new();
    let mut warnings: Vec<String> = Vec::new();

    let f_used = if squarefree { f.reduce_binary() } else { f.clone() };
    let d = f_used.degree();
    if d > 2 * r {
        return Err(Error::OrderTooSmall { r, min: d.div_ceil(2) });
    }

    let mut parts = vec![Part {
        name: "moment".into(),
        role: CertRole::Moment,
        tmpl: moment_template(n, r, squarefree),
    }];
    domain_parts(spec, n, &mut parts)?;

    let matrices: Vec<SymPolyMatrix> = match spec.kind {
        RelaxKind::BlockDiag => {
            let blocks = spec.blocks.clone().ok_or_else(|| {
                Error::InvalidArgument("block_diag relaxation needs a list of blocks".into())
            })?;
            if blocks.is_empty() {
                return Err(Error::InvalidArgument("empty block list".into()));
            }
            blocks
        }
        _ => vec![g.clone()],
    };

    let mut vstars = Vec::new();
    let mut ls = Vec::new();
    match spec.kind {
        RelaxKind::ProposedBinary | RelaxKind::ProposedBall | RelaxKind::BlockDiag => {
            for (i, gi) in matrices.iter().enumerate() {
                check_dim(n, gi.n())?;
                let l = gi.hierarchy_l();
                if r < l {
                    return Err(Error::OrderTooSmall { r, min: l });
                }
                if r < 3 * l {
                    warnings.push(format!(
                        "r = {r} is below 3l = {} for G_{}; the relaxation is well formed but outside the range of the convergence results",
                        3 * l,
                        i + 1
                    ));
                }
                let gi = normalized(gi, spec, &format!("g{}", i + 1), &mut meta)?;
                let v = trace_order(r, l).expect("r >= l");
                let (p, q) = trace_template(&gi, v);
                parts.push(Part {
                    name: format!("P_{i}"),
                    role: CertRole::TraceP(i),
                    tmpl: p,
                });
                if let Some(q) = q {
                    parts.push(Part {
                        name: format!("Q_{i}"),
                        role: CertRole::TraceQ(i),
                        tmpl: q,
                    });
                }
                vstars.push(v);
                ls.push(l);
            }
        }
        RelaxKind::HolScherer => {
            let l = g.hierarchy_l();
            parts.push(Part {
                name: "kron".into(),
                role: CertRole::Kron,
                tmpl: kron_on(g, n, r, squarefree)?,
            });
            ls.push(l);
        }
        RelaxKind::ScalarLasserre => {
            let polys = if g.is_diagonal() {
                (0..g.m()).map(|i| g.get(i, i).clone()).collect()
            } else {
                g.charpoly_coeffs()?
            };
            for (i, c) in polys.into_iter().enumerate() {
                let c = if squarefree { c.reduce_binary() } else { c };
                if c.is_zero() {
                    continue;
                }
                parts.push(Part {
                    name: format!("scalar_{}", i + 1),
                    role: CertRole::Scalar,
                    tmpl: localize_on(&c, n, r, squarefree, false)?,
                });
            }
            ls.push(g.hierarchy_l());
        }
    }

    // Degree legality; trace blocks may reach past 2r (their moments are
    // extra variables that never enter the objective).
    let mut extended = 2 * r;
    for part in &parts {
        let deg = if squarefree {
            part.tmpl
                .entry_polys
                .iter()
                .flatten()
                .map(|p| p.reduce_binary().degree())
                .max()
                .unwrap_or(0)
        } else {
            part.tmpl.max_degree()
        };
        let trace = matches!(part.role, CertRole::TraceP(_) | CertRole::TraceQ(_));
        if trace {
            extended = extended.max(deg);
        } else {
            assert!(
                deg <= 2 * r,
                "template {} has degree {deg} > 2r = {}",
                part.name,
                2 * r
            );
        }
    }

    meta.insert("kind".into(), json!(spec.kind.name()));
    meta.insert("domain".into(), json!(spec.domain));
    meta.insert("r".into(), json!(r));
    meta.insert("l".into(), json!(ls));
    meta.insert("v_star".into(), json!(vstars));
    meta.insert("moment_order".into(), json!(extended));
    meta.insert("explicit_equalities".into(), json!(spec.explicit_equalities));
    meta.insert("warnings".into(), json!(warnings));
    Ok(Parts {
        n,
        squarefree,
        binary,
        f: f_used,
        parts,
        meta,
    })
}

fn key(m: &Monomial, squarefree: bool) -> Monomial {
    if squarefree { m.squarefree() } else { m.clone() }
}

fn var_name(m: &Monomial) -> String {
    let e: Vec<String> = m.exponents().iter().map(u32::to_string).collect();
    format!("y_{}", e.join("_"))
}

fn objective_scale(f: &MultiPoly) -> f64 {
    f.coef_norm().max(1.0)
}

/// The moment relaxation: minimize `L_y(f)` subject to `y_0 = 1` and the
/// template blocks of `spec.kind`.
pub fn build(f: &MultiPoly, g: &SymPolyMatrix, spec: &RelaxSpec) -> Result<SDPProblem> {
    let parts = prepare(f, g, spec)?;
    let sq = parts.squarefree;
    let n = parts.n;

    let mut monos: BTreeSet<Monomial> = BTreeSet::new();
    monos.insert(Monomial::one(n));
    for (m, _) in parts.f.terms() {
        monos.insert(key(m, sq));
    }
    for part in &parts.parts {
        for p in part.tmpl.entry_polys.iter().flatten() {
            for (m, _) in p.terms() {
                monos.insert(key(m, sq));
            }
        }
    }
    let mut p = SDPProblem::new(Sense::Min);
    let mut index: BTreeMap<Monomial, usize> = BTreeMap::new();
    let mut var_monomials = Vec::with_capacity(monos.len());
    for m in monos {
        let k = p.add_var(var_name(&m));
        index.insert(m.clone(), k);
        var_monomials.push(Some(m));
    }
    let riesz_into = |blk: &mut Block, i: usize, j: usize, poly: &MultiPoly| {
        for (m, c) in poly.terms() {
            blk.add_term(i, j, index[&key(m, sq)], c);
        }
    };

    let scale = objective_scale(&parts.f);
    let f_s = parts.f.scale(1.0 / scale);
    let mut obj = Block::psd("objective", 1);
    riesz_into(&mut obj, 0, 0, &f_s);
    for (&k, &c) in &obj.entries[&(0, 0)].terms {
        p.set_objective(k, c);
    }
    p.objective_scale = scale;

    let mut norm = Block::equality("y0", 1);
    norm.add_term(0, 0, index[&Monomial::one(n)], 1.0);
    norm.add_constant(0, 0, -1.0);

    let mut terms = Vec::new();
    let mut eq_blocks = Vec::new();
    for part in &parts.parts {
        let s = part.tmpl.size();
        if part.tmpl.equality {
            let mut blk = Block::equality(part.name.clone(), s * (s + 1) / 2);
            let mut diag = vec![vec![MultiPoly::zero(n); s * (s + 1) / 2]; s * (s + 1) / 2];
            let mut row = 0;
            for j in 0..s {
                for i in 0..=j {
                    let poly = &part.tmpl.entry_polys[i][j];
                    riesz_into(&mut blk, row, row, poly);
                    diag[row][row] = poly.clone();
                    row += 1;
                }
            }
            eq_blocks.push((blk, part, diag));
        } else {
            let mut blk = Block::psd(part.name.clone(), s);
            for j in 0..s {
                for i in 0..=j {
                    riesz_into(&mut blk, i, j, &part.tmpl.entry_polys[i][j]);
                }
            }
            let r = p.add_block(blk);
            terms.push(CertTerm {
                name: part.name.clone(),
                role: part.role,
                template: part.tmpl.entry_polys.clone(),
                source: CertSource::Dual(r),
            });
        }
    }
    p.add_block(norm);
    for (blk, part, diag) in eq_blocks {
        let r = p.add_block(blk);
        terms.push(CertTerm {
            name: part.name.clone(),
            role: part.role,
            template: diag,
            source: CertSource::Dual(r),
        });
    }

    p.cert = Some(CertData {
        f: f_s,
        binary: parts.binary,
        form: CertForm::Moment,
        terms,
        var_monomials,
    });
    p.meta = parts.meta;
    p.meta.insert("form".into(), json!("moment"));
    p.meta.insert("objective_scale".into(), json!(scale));
    p.meta.insert("blocks".into(), inventory_json(&p));
    Ok(p)
}

/// The SOS side: maximize `t` subject to
/// `f = t + sum_b <X_b, T_b>` coefficientwise, with `X_b ⪰ 0` (free for
/// ideal multipliers).
pub fn build_sos_dual(f: &MultiPoly, g: &SymPolyMatrix, spec: &RelaxSpec) -> Result<SDPProblem> {
    let parts = prepare(f, g, spec)?;
    let sq = parts.squarefree;
    let n = parts.n;
    let mut p = SDPProblem::new(Sense::Max);
    let t = p.add_var("t");
    p.set_objective(t, 1.0);
    let scale = objective_scale(&parts.f);
    let f_s = parts.f.scale(1.0 / scale);
    p.objective_scale = scale;

    // coefficient rows: monomial -> [(var, coef)]
    let mut rows: BTreeMap<Monomial, BTreeMap<usize, f64>> = BTreeMap::new();
    rows.entry(Monomial::one(n)).or_default().insert(t, 1.0);
    let mut terms = Vec::new();
    for part in &parts.parts {
        let s = part.tmpl.size();
        let handle = if part.tmpl.equality {
            p.add_free_matrix(&part.name, s)
        } else {
            p.add_gram_block(&part.name, s)
        };
        for i in 0..s {
            for j in 0..s {
                let v = handle.var(i, j);
                for (m, c) in part.tmpl.entry_polys[i][j].terms() {
                    *rows.entry(key(m, sq)).or_default().entry(v).or_insert(0.0) += c;
                }
            }
        }
        terms.push(CertTerm {
            name: part.name.clone(),
            role: part.role,
            template: part.tmpl.entry_polys.clone(),
            source: CertSource::Vars(handle.index_matrix()),
        });
    }
    for (m, _) in f_s.terms() {
        rows.entry(key(m, sq)).or_default();
    }
    let mut matching = Block::equality("match", rows.len());
    for (q, (m, lhs)) in rows.iter().enumerate() {
        for (&v, &c) in lhs {
            matching.add_term(q, q, v, c);
        }
        let fm: f64 = f_s
            .terms()
            .filter(|(mm, _)| key(mm, sq) == *m)
            .map(|(_, c)| c)
            .sum();
        matching.add_constant(q, q, -fm);
    }
    p.add_block(matching);
    p.cert = Some(CertData {
        f: f_s,
        binary: parts.binary,
        form: CertForm::Sos { t_var: t },
        terms,
        var_monomials: Vec::new(),
    });
    p.meta = parts.meta;
    p.meta.insert("form".into(), json!("sos"));
    p.meta.insert("objective_scale".into(), json!(scale));
    p.meta.insert("blocks".into(), inventory_json(&p));
    Ok(p)
}

/// Builds the relaxation of `spec.kind` for an instance.
pub fn build_instance(inst: &Instance, spec: &RelaxSpec) -> Result<SDPProblem> {
    build(&inst.objective, &inst.g, spec)
}

/// One row of [`size_report`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeRow {
    pub name: String,
    pub kind: BlockKind,
    pub size: usize,
    /// `size^2`, the number of matrix entries.
    pub variables: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeReport {
    pub rows: Vec<SizeRow>,
    pub scalar_vars: usize,
    /// Largest `P_i` / `Q_i` block.
    pub largest_trace: Option<usize>,
    /// Size of the Kronecker localizer.
    pub largest_kron: Option<usize>,
    /// Largest block that localizes `G` (trace, Kronecker or scalar).
    pub largest_localizing: Option<usize>,
    /// Largest block of any kind.
    pub largest_block: usize,
}

fn is_trace(name: &str) -> bool {
    name.starts_with("P_") || name.starts_with("Q_")
}

/// Deterministic block inventory of a problem.
pub fn size_report(p: &SDPProblem) -> SizeReport {
    let rows: Vec<SizeRow> = p
        .blocks()
        .map(|(_, b)| SizeRow {
            name: b.name.clone(),
            kind: b.kind,
            size: b.size,
            variables: b.size * b.size,
        })
        .collect();
    let max_of = |pred: &dyn Fn(&str) -> bool| {
        rows.iter()
            .filter(|r| r.kind == BlockKind::Psd && pred(&r.name))
            .map(|r| r.size)
            .max()
    };
    SizeReport {
        scalar_vars: p.num_vars(),
        largest_trace: max_of(&|n| is_trace(n)),
        largest_kron: max_of(&|n| n == "kron"),
        largest_localizing: max_of(&|n| is_trace(n) || n == "kron" || n.starts_with("scalar_")),
        largest_block: rows.iter().map(|r| r.size).max().unwrap_or(0),
        rows,
    }
}

/// Kronecker block size over largest trace block size.
pub fn size_ratio(proposed: &SDPProblem, holscherer: &SDPProblem) -> Option<f64> {
    let a = size_report(proposed).largest_trace?;
    let b = size_report(holscherer).largest_kron?;
    Some(b as f64 / a as f64)
}

fn inventory_json(p: &SDPProblem) -> serde_json::Value {
    json!(
        p.blocks()
            .map(|(_, b)| json!({"name": b.name, "kind": b.kind, "size": b.size}))
            .collect::<Vec<_>>()
    )
}

/// The lower bound reported by a solved moment or SOS relaxation.
pub fn lower_bound(sol: &crate::sdp::SDPSolution) -> f64 {
    sol.objective_value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::basis_size;
    use crate::sdp::SolveStatus;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    fn toy() -> (MultiPoly, SymPolyMatrix) {
        // f = x1, G = [[2 x1 - 1]]
        let f = x(1, 0);
        let g = SymPolyMatrix::scalar(&x(1, 0).scale(2.0) - &MultiPoly::constant(1, 1.0));
        (f, g)
    }

    #[test]
    fn moment_template_examples() {
        let t = moment_template(1, 1, false);
        assert_eq!(t.entry_polys[0][1], x(1, 0));
        assert_eq!(t.entry_polys[1][1], x(1, 0).pow(2));
        let t = moment_template(2, 1, false);
        assert_eq!(t.entry_polys[1][2], &x(2, 0) * &x(2, 1));
        let t = moment_template(2, 2, true);
        assert_eq!(t.size(), 4);
        assert_eq!(t.row_basis[3], Monomial::new(vec![1, 1]));
    }

    #[test]
    fn localize_scalar_examples() {
        let g = &MultiPoly::constant(1, 1.0) - &x(1, 0).pow(2);
        let t = localize_scalar(&g, 1, 1).unwrap();
        assert_eq!(t.size(), 1);
        assert_eq!(t.entry_polys[0][0], g);
        let e = &x(1, 0).pow(2) - &x(1, 0);
        let t = localize_equality(&e, 1, 2).unwrap();
        assert!(t.equality);
        assert_eq!(t.size(), 2);
        assert_eq!(t.entry_polys[0][1], &x(1, 0).pow(3) - &x(1, 0).pow(2));
        assert!(localize_scalar(&x(1, 0).pow(4), 1, 1).is_err());
    }

    #[test]
    fn kron_sizes() {
        let g = SymPolyMatrix::scalar(&MultiPoly::constant(2, 1.0) - &x(2, 0).pow(2));
        let a = localize_kron(&g, 2, 2).unwrap();
        let b = localize_scalar(g.get(0, 0), 2, 2).unwrap();
        assert_eq!(a, b);
        let g2 = SymPolyMatrix::from_upper(vec![
            vec![x(1, 0), MultiPoly::constant(1, 1.0)],
            vec![x(1, 0)],
        ])
        .unwrap();
        assert_eq!(localize_kron(&g2, 1, 1).unwrap().size(), 2);
        for n in 1..=3 {
            for r in 1..=4 {
                assert_eq!(localize_kron(&g2.scale(1.0), 1, r).unwrap().size(), 2 * basis_size(1, r - 1));
                let gn = SymPolyMatrix::identity(3, n);
                assert_eq!(
                    localize_kron(&gn, n, r).unwrap().size(),
                    3 * basis_size(n, r - 1)
                );
            }
        }
    }

    #[test]
    fn toy_block_sizes() {
        let (f, g) = toy();
        let p = build(&f, &g, &RelaxSpec::new(RelaxKind::ProposedBinary, Domain::Binary, 3)).unwrap();
        let rep = size_report(&p);
        let size = |name: &str| rep.rows.iter().find(|r| r.name == name).unwrap().size;
        assert_eq!(size("moment"), 2);
        assert_eq!(size("P_0"), 2);
        assert_eq!(size("Q_0"), 1);
        let mut spec = RelaxSpec::new(RelaxKind::HolScherer, Domain::Binary, 3);
        spec.explicit_equalities = true;
        let h = build(&f, &g, &spec).unwrap();
        assert_eq!(size_report(&h).largest_kron, Some(3));
    }

    #[test]
    fn toy_bound_below_minimum() {
        let (f, g) = toy();
        for kind in [RelaxKind::ProposedBinary, RelaxKind::HolScherer, RelaxKind::ScalarLasserre] {
            let p = build(&f, &g, &RelaxSpec::new(kind, Domain::Binary, 3)).unwrap();
            let s = p.solve(1e-8).unwrap();
            assert_eq!(s.status, SolveStatus::Optimal, "{kind:?}");
            assert!(s.objective_value <= 1.0 + 1e-6, "{kind:?}: {}", s.objective_value);
        }
    }

    #[test]
    fn constant_objective_certificate() {
        let (_, g) = toy();
        let f = MultiPoly::constant(1, 1.0);
        let p = build_sos_dual(&f, &g, &RelaxSpec::new(RelaxKind::ProposedBinary, Domain::Binary, 3)).unwrap();
        let s = p.solve(1e-8).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-6);
        let c = crate::sdp::extract_certificate(&p, &s).unwrap();
        assert!((c.t - 1.0).abs() < 1e-6);
        assert!(c.residual < 1e-6);
    }

    #[test]
    fn size_report_example() {
        // n = 2, m = 3, l = 1, r = 3
        let n = 2;
        let c = |v: f64| MultiPoly::constant(n, v);
        let g = SymPolyMatrix::from_upper(vec![
            vec![x(n, 0).scale(0.1), c(0.05), c(0.0)],
            vec![x(n, 1).scale(0.1), c(0.05)],
            vec![c(0.1)],
        ])
        .unwrap();
        let f = &x(n, 0) + &x(n, 1);
        let pr = build(&f, &g, &RelaxSpec::new(RelaxKind::ProposedBinary, Domain::Binary, 3)).unwrap();
        let rep = size_report(&pr);
        assert_eq!(rep.largest_trace, Some(2));
        let q = rep.rows.iter().find(|r| r.name == "Q_0").unwrap();
        assert_eq!(q.size, 1);
        let mut spec = RelaxSpec::new(RelaxKind::HolScherer, Domain::Binary, 3);
        spec.explicit_equalities = true;
        let hs = build(&f, &g, &spec).unwrap();
        assert_eq!(size_report(&hs).largest_kron, Some(18));
        assert_eq!(size_ratio(&pr, &hs), Some(9.0));
    }

    #[test]
    fn order_and_normalization_errors() {
        let (f, _) = toy();
        let g = SymPolyMatrix::scalar(x(1, 0).pow(4).scale(0.5));
        let err = build(&f, &g, &RelaxSpec::new(RelaxKind::ProposedBinary, Domain::Binary, 1));
        assert!(matches!(err, Err(Error::OrderTooSmall { .. })));
        let big = SymPolyMatrix::scalar(&x(1, 0).scale(3.0) - &MultiPoly::constant(1, 1.0));
        let spec = RelaxSpec::new(RelaxKind::ProposedBinary, Domain::Binary, 3);
        assert!(matches!(build(&f, &big, &spec), Err(Error::Unnormalized { .. })));
        let mut spec = spec;
        spec.normalize = true;
        let p = build(&f, &big, &spec).unwrap();
        assert_eq!(p.meta["g1_scale"], json!(4.0));
    }
}
