use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmi_sos::oracle::{
    HypothesisParams, OracleResult, RateParams, brute_force_binary, check_hypotheses, rate_bounds, sample_min_ball,
};
use pmi_sos::penalty::{choose_k, penalty_poly, q_eval};
use pmi_sos::relax::{build, build_sos_dual, lower_bound, size_report, trace_order};
use pmi_sos::sdp::{extract_certificate, sdpa_string};
use pmi_sos::{Domain, Instance, PenaltySpec, RelaxKind, RelaxSpec, SDPProblem, ShiftMode, random_suite};
use rayon::prelude::*;
use serde_json::{Value, json};

use crate::config::{Provenance, RunConfig, config_hash, parse_r_range};
use crate::error::{CliError, io};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 2024;
const BENCH_SUITE: usize = 10;
const BENCH_R: &str = "2..4";
const BALL_SAMPLES: usize = 100_000;
const BENCH_BALL_SAMPLES: usize = 10_000;
const PENALTY_ROWS: usize = 10_000;

pub struct Ctx {
    pub command: &'static str,
    pub cfg: RunConfig,
    pub prov: Provenance,
}

fn fill<T: Clone>(slot: &mut Option<T>, name: &str, default: T, prov: &mut Provenance) -> T {
    let v = RunConfig::default_of(slot, name, default, prov);
    *slot = Some(v.clone());
    v
}

impl Ctx {
    pub fn meta(&self) -> Value {
        json!({
            "artifact": "pmi-sos",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": config_hash(self.command, &self.cfg),
            "config": self.cfg,
            "provenance": self.prov,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# pmi-sos {} {} config_sha256={} provenance={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            config_hash(self.command, &self.cfg),
            serde_json::to_string(&self.prov).expect("provenance serializes"),
        )
    }

    fn single_instance(&self) -> Result<(Instance, String), CliError> {
        match self.cfg.instance.as_slice() {
            [p] => load_instance(p),
            [] => Err(CliError::input("INVALID_ARGUMENT", "--instance is required")),
            _ => Err(CliError::input("INVALID_ARGUMENT", "this command takes a single --instance")),
        }
    }

    fn kinds(&mut self, domain: Domain, default: &str) -> Result<Vec<RelaxKind>, CliError> {
        let k = fill(&mut self.cfg.kind, "kind", default.to_string(), &mut self.prov);
        parse_kinds(&k, domain)
    }

    fn tol(&mut self) -> f64 {
        fill(&mut self.cfg.tol, "tol", DEFAULT_TOL, &mut self.prov)
    }

    fn seed(&mut self) -> u64 {
        fill(&mut self.cfg.seed, "seed", DEFAULT_SEED, &mut self.prov)
    }

    fn explicit(&mut self) -> bool {
        fill(&mut self.cfg.explicit_equalities, "explicit_equalities", false, &mut self.prov)
    }
}

fn load_instance(p: &Path) -> Result<(Instance, String), CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::input("INSTANCE_PARSE", format!("{}: {e}", p.display())))?;
    let inst = Instance::from_json(&text).map_err(|e| match e {
        pmi_sos::Error::Parse(m) => CliError::input("INSTANCE_PARSE", format!("{}: {m}", p.display())),
        other => CliError::from(other),
    })?;
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into());
    Ok((inst, stem))
}

/// `proposed` and `both` resolve against the instance domain.
pub fn parse_kinds(s: &str, domain: Domain) -> Result<Vec<RelaxKind>, CliError> {
    Ok(match s {
        "proposed" => vec![RelaxKind::proposed(domain)],
        "both" => vec![RelaxKind::proposed(domain), RelaxKind::HolScherer],
        other => vec![other.parse::<RelaxKind>()?],
    })
}

fn spec_for(kind: RelaxKind, inst: &Instance, r: u32, explicit: bool) -> RelaxSpec {
    let mut s = RelaxSpec::for_instance(kind, inst, r);
    s.explicit_equalities = explicit;
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir.display(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io(path.display(), e))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, name: &str, v: &Value) -> Result<(), CliError> {
    let text = pretty(v);
    if let Some(dir) = out {
        write_file(&dir.join(name), text.as_bytes())?;
    }
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| io("stdout", e))
}

/// SDPA export plus metadata JSON for every `(kind, r)`.
pub fn relax(ctx: &mut Ctx) -> Result<(), CliError> {
    let (inst, stem) = ctx.single_instance()?;
    let kinds = ctx.kinds(inst.domain, "proposed")?;
    let rs = parse_r_range(&fill(&mut ctx.cfg.r, "r", "3".into(), &mut ctx.prov))?;
    let explicit = ctx.explicit();
    let out = fill(&mut ctx.cfg.out, "out", PathBuf::from("."), &mut ctx.prov);
    let mut files = Vec::new();
    for &kind in &kinds {
        for &r in &rs {
            let p = build(&inst.objective, &inst.g, &spec_for(kind, &inst, r, explicit))?;
            let base = format!("{stem}_{}_r{r}", kind.name());
            let dat = out.join(format!("{base}.dat-s"));
            let meta_path = out.join(format!("{base}.json"));
            write_file(&dat, sdpa_string(&p)?.as_bytes())?;
            let meta = json!({
                "meta": ctx.meta(),
                "relaxation": p.meta,
                "size": size_report(&p),
                "sdpa": dat.file_name().map(|s| s.to_string_lossy().into_owned()),
            });
            write_file(&meta_path, pretty(&meta).as_bytes())?;
            files.push(json!({"kind": kind.name(), "r": r, "sdpa": dat, "metadata": meta_path}));
        }
    }
    let summary = json!({"meta": ctx.meta(), "files": files});
    std::io::stdout().write_all(pretty(&summary).as_bytes()).map_err(|e| io("stdout", e))
}

fn solve_one(inst: &Instance, kind: RelaxKind, r: u32, explicit: bool, tol: f64, certify: bool) -> Result<Value, CliError> {
    let p = build_sos_dual(&inst.objective, &inst.g, &spec_for(kind, inst, r, explicit))?;
    let s = p.solve(tol)?;
    let mut row = json!({
        "kind": kind.name(),
        "r": r,
        "status": s.status,
        "lower_bound": if s.is_solved() { json!(lower_bound(&s)) } else { Value::Null },
        "relaxation": p.meta,
        "solution": s.to_json(&p),
    });
    if certify {
        row["certificate"] = match s.is_solved().then(|| extract_certificate(&p, &s)) {
            Some(Ok(c)) => c.to_json(),
            Some(Err(e)) => json!({"error": e.to_string()}),
            None => json!({"error": "no certificate for an unsolved relaxation"}),
        };
    }
    Ok(row)
}

/// Lower bounds for every `(kind, r)`; solver trouble is reported, not fatal.
pub fn solve(ctx: &mut Ctx) -> Result<(), CliError> {
    let (inst, stem) = ctx.single_instance()?;
    let kinds = ctx.kinds(inst.domain, "proposed")?;
    let rs = parse_r_range(&fill(&mut ctx.cfg.r, "r", "3".into(), &mut ctx.prov))?;
    let explicit = ctx.explicit();
    let tol = ctx.tol();
    let certify = fill(&mut ctx.cfg.certify, "certify", false, &mut ctx.prov);
    let mut results = Vec::new();
    for &r in &rs {
        for &kind in &kinds {
            results.push(solve_one(&inst, kind, r, explicit, tol, certify)?);
        }
    }
    let doc = json!({"meta": ctx.meta(), "instance": stem, "results": results});
    emit(ctx.cfg.out.as_deref(), &format!("{stem}_solve.json"), &doc)
}

fn run_oracle(inst: &Instance, samples: usize, seed: u64) -> Result<OracleResult, CliError> {
    Ok(match inst.domain {
        Domain::Binary => brute_force_binary(&inst.objective, &inst.g)?,
        Domain::Ball => sample_min_ball(&inst.objective, &inst.g, samples, seed)?,
    })
}

/// Ground truth plus hypothesis and rate diagnostics for each requested `r`.
pub fn oracle(ctx: &mut Ctx) -> Result<(), CliError> {
    let (inst, stem) = ctx.single_instance()?;
    let seed = ctx.seed();
    let samples = fill(&mut ctx.cfg.samples, "samples", BALL_SAMPLES, &mut ctx.prov);
    let o = run_oracle(&inst, samples, seed)?;
    let rs = match ctx.cfg.r.clone() {
        Some(s) => parse_r_range(&s)?,
        None => Vec::new(),
    };
    let l = inst.g.hierarchy_l();
    let mut diagnostics = Vec::new();
    for r in rs {
        let v = ctx.cfg.v.unwrap_or_else(|| trace_order(r, l).unwrap_or(0));
        let hp = HypothesisParams { n: inst.n, d: inst.objective.degree(), l, r, v, m: inst.g.m() };
        let mut rp = RateParams::new(inst.domain, hp.n, hp.d, l, r, v, hp.m);
        rp.f_norm = inst.objective.coef_norm();
        rp.lambda = o.lambda_gap;
        diagnostics.push(json!({
            "r": r,
            "v": v,
            "hypotheses": check_hypotheses(inst.domain, &hp),
            "rates": rate_bounds(&rp),
        }));
    }
    let doc = json!({"meta": ctx.meta(), "instance": stem, "oracle": o.to_json(), "diagnostics": diagnostics});
    emit(ctx.cfg.out.as_deref(), &format!("{stem}_oracle.json"), &doc)
}

#[derive(Debug, Default, serde::Serialize)]
struct BenchRow {
    instance: String,
    kind: String,
    r: u32,
    n: usize,
    m: usize,
    status: String,
    largest_block: Option<usize>,
    largest_localizing: Option<usize>,
    total_vars: Option<usize>,
    bound: Option<f64>,
    f_min: Option<f64>,
    gap: Option<f64>,
    wall_s: f64,
    error: String,
}

fn bench_row(name: &str, inst: &Instance, f_min: Result<f64, String>, kind: RelaxKind, r: u32, explicit: bool, tol: f64) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        instance: name.into(),
        kind: kind.name().into(),
        r,
        n: inst.n,
        m: inst.g.m(),
        f_min: f_min.as_ref().ok().copied(),
        ..Default::default()
    };
    let spec = spec_for(kind, inst, r, explicit);
    let run = || -> pmi_sos::Result<(SDPProblem, pmi_sos::SDPSolution)> {
        let shape = build(&inst.objective, &inst.g, &spec)?;
        let p = build_sos_dual(&inst.objective, &inst.g, &spec)?;
        Ok((shape, p.solve(tol)?))
    };
    match run() {
        Ok((shape, s)) => {
            let sz = size_report(&shape);
            row.largest_block = Some(sz.largest_block);
            row.largest_localizing = sz.largest_localizing;
            row.total_vars = Some(sz.rows.iter().map(|r| r.variables).sum());
            row.status = serde_json::to_value(s.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            if s.is_solved() {
                let b = lower_bound(&s);
                row.bound = Some(b);
                row.gap = row.f_min.map(|f| f - b);
            }
        }
        Err(e) => {
            row.status = "error".into();
            row.error = e.to_string();
        }
    }
    if let Err(e) = f_min {
        row.error = if row.error.is_empty() { format!("oracle: {e}") } else { format!("{}; oracle: {e}", row.error) };
    }
    row.wall_s = start.elapsed().as_secs_f64();
    row
}

/// One CSV row per `(instance, kind, r)`, in input order.
pub fn bench(ctx: &mut Ctx) -> Result<(), CliError> {
    let seed = ctx.seed();
    let tol = ctx.tol();
    let explicit = ctx.explicit();
    let rs = parse_r_range(&fill(&mut ctx.cfg.r, "r", BENCH_R.into(), &mut ctx.prov))?;
    let kind_s = fill(&mut ctx.cfg.kind, "kind", "both".into(), &mut ctx.prov);
    let jobs = fill(&mut ctx.cfg.jobs, "jobs", rayon::current_num_threads(), &mut ctx.prov).max(1);
    let instances: Vec<(String, Instance)> = if ctx.cfg.instance.is_empty() {
        let count = fill(&mut ctx.cfg.suite, "suite", BENCH_SUITE, &mut ctx.prov);
        let domain: Domain = fill(&mut ctx.cfg.domain, "domain", "binary".into(), &mut ctx.prov).parse()?;
        random_suite(domain, count, seed)
            .into_iter()
            .enumerate()
            .map(|(i, inst)| (format!("rand{}", seed + i as u64), inst))
            .collect()
    } else {
        ctx.cfg.instance.iter().map(|p| load_instance(p).map(|(i, s)| (s, i))).collect::<Result<_, _>>()?
    };
    let mut tasks = Vec::new();
    for (idx, (_, inst)) in instances.iter().enumerate() {
        for kind in parse_kinds(&kind_s, inst.domain)? {
            for &r in &rs {
                tasks.push((idx, kind, r));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let rows: Vec<BenchRow> = pool.install(|| {
        let oracles: Vec<Result<f64, String>> = instances
            .par_iter()
            .map(|(_, inst)| run_oracle(inst, BENCH_BALL_SAMPLES, seed).map(|o| o.f_min).map_err(|e| e.to_string()))
            .collect();
        tasks
            .par_iter()
            .map(|&(idx, kind, r)| {
                let (name, inst) = &instances[idx];
                bench_row(name, inst, oracles[idx].clone(), kind, r, explicit, tol)
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    let mut text = ctx.csv_header().into_bytes();
    text.extend(body);
    match ctx.cfg.out.as_deref() {
        Some(dir) => write_file(&dir.join("bench.csv"), &text),
        None => std::io::stdout().write_all(&text).map_err(|e| io("stdout", e)),
    }
}

/// `t, q(t), p(t), p(t) - q(t)` on an equispaced grid plus a JSON sidecar.
pub fn penalty(ctx: &mut Ctx) -> Result<(), CliError> {
    let lambda = fill(&mut ctx.cfg.lambda, "lambda", -0.5, &mut ctx.prov);
    let n_height = fill(&mut ctx.cfg.n_height, "n_height", 1.0, &mut ctx.prov);
    let v = fill(&mut ctx.cfg.v, "v", 40, &mut ctx.prov);
    let k = match ctx.cfg.k {
        Some(k) => k,
        None => {
            let k = choose_k(lambda.abs(), v)?;
            ctx.cfg.k = Some(k);
            ctx.prov.insert("k".into(), "computed");
            k
        }
    };
    let mode: ShiftMode = fill(&mut ctx.cfg.shift_mode, "shift_mode", "theoretical".into(), &mut ctx.prov).parse()?;
    let out = fill(&mut ctx.cfg.out, "out", PathBuf::from("."), &mut ctx.prov);
    let spec = PenaltySpec::new(lambda, n_height, k, v)?;
    let pp = penalty_poly(&spec, mode)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "q", "p", "error"]).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut max_err = f64::NEG_INFINITY;
    for i in 0..PENALTY_ROWS {
        let t = -1.0 + 2.0 * i as f64 / (PENALTY_ROWS - 1) as f64;
        let q = q_eval(&spec, t)?;
        let p = pp.eval(t);
        max_err = max_err.max(p - q);
        w.write_record([t, q, p, p - q].map(|x| format!("{x:e}"))).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    let mut text = ctx.csv_header().into_bytes();
    text.extend(body);
    write_file(&out.join("penalty.csv"), &text)?;

    let sidecar = json!({
        "meta": ctx.meta(),
        "spec": spec,
        "shift_mode": pp.shift_mode,
        "shift": pp.shift,
        "grid_sup_error": pp.grid_sup_error,
        "grid_max_gap": pp.grid_max_gap,
        "grid_min_gap": pp.grid_min_gap,
        "csv_max_error": max_err,
        "jackson_bound": pp.jackson_bound,
        "rows": PENALTY_ROWS,
    });
    write_file(&out.join("penalty.json"), pretty(&sidecar).as_bytes())?;
    std::io::stdout().write_all(pretty(&sidecar).as_bytes()).map_err(|e| io("stdout", e))
}
