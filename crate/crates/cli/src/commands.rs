use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use conic_moduli::charts::{pullback_report, ChartKind};
use conic_moduli::cones::{classify_merges, conic_euler, troyanov, Curvature, MergeStatus};
use conic_moduli::flat::{cone_angle_probe, corner_expansion, FlatMetric, ModelKind, PROBE_RADII};
use conic_moduli::lattice::{
    enumerate_augmented_strata, enumerate_cmax_pairs, enumerate_fmax_strata, mask_members, ClusterTree,
};
use conic_moduli::phg::{fit_exponents, index_set, u0_series, FreeData, PhgModel};
use conic_moduli::rational::{fmt_q, parse_q, to_f64, Q};
use conic_moduli::solver::{
    assemble, bump, decay_check, football, klein_quotient, newton_solve_spherical, perturbed, picard_solve,
    q_nonlinearity, rfrak_of, FiberMesh, Outer, PairApproximation, SolveReport, SphereBackground, GAP_MARGIN,
};
use num::{Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_bytes, Emitter, Format};
use crate::{ChartsCmd, Command, ConesCmd, FlatCmd, PhgCmd, SolveCmd};

type Res = Result<(), CliError>;

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &Emitter) -> Res {
    match cmd {
        Command::Faces(a) => faces(a, cfg, out),
        Command::Charts(ChartsCmd::Verify(a)) => charts_verify(a, cfg, out),
        Command::Cones(ConesCmd::Classify(a)) => cones_classify(a, cfg, out),
        Command::Flat(FlatCmd::Expand(a)) => flat_expand(a, cfg, out),
        Command::Flat(FlatCmd::Probe(a)) => flat_probe(a, cfg, out),
        Command::Phg(PhgCmd::Index(a)) => phg_index(a, cfg, out),
        Command::Phg(PhgCmd::U0(a)) => phg_u0(a, cfg, out),
        Command::Phg(PhgCmd::Recurse(a)) => phg_recurse(a, cfg, out),
        Command::Solve(SolveCmd::Hyperbolic(a)) => solve_hyperbolic(a, cfg, out),
        Command::Solve(SolveCmd::Spherical(a)) => solve_spherical(a, cfg, out),
        Command::Solve(SolveCmd::Decay(a)) => solve_decay(a, cfg, out),
        Command::Fit(a) => fit(a, cfg, out),
    }
}

// ---- value parsing and formatting ----

fn rational(s: &str) -> Result<Q, CliError> {
    Ok(parse_q(s)?)
}

fn rational_list(s: &str) -> Result<Vec<Q>, CliError> {
    s.split(',').map(rational).collect()
}

fn float_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Parse(format!("malformed number `{}`", x.trim()))))
        .collect()
}

fn mesh_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Parse(format!("mesh `{s}` is not of the form NT×NP"));
    let (a, b) = s.split_once('×').or_else(|| s.split_once('x')).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| cfg.clone()).unwrap_or(default)
}

fn pick_str(flag: &Option<String>, cfg: &Option<String>, default: &str) -> String {
    pick(flag, cfg, default.to_string())
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn positive(q: &Q, what: &str) -> Result<f64, CliError> {
    if !q.is_positive() {
        return Err(CliError::Parse(format!("{what} = {} must be positive", fmt_q(q))));
    }
    Ok(to_f64(q))
}

/// A table emitted as CSV rows or as a JSON list of records.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => match n.as_f64() {
                Some(f) if !(n.is_i64() || n.is_u64()) => fmt_f64(f),
                _ => n.to_string(),
            },
            Value::Null => String::new(),
            other => other.to_string(),
        }
    }

    fn emit(&self, out: &Emitter, meta: Value) -> Res {
        match out.format {
            Format::Csv => {
                let rows: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Self::cell).collect()).collect();
                out.csv(&self.header, &rows)
            }
            Format::Json => {
                let records: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                let mut m = match meta {
                    Value::Object(m) => m,
                    _ => serde_json::Map::new(),
                };
                m.insert("rows".into(), Value::Array(records));
                out.json(&Value::Object(m))
            }
        }
    }
}

fn qs(x: &Q) -> Value {
    Value::String(fmt_q(x))
}

fn f(x: f64) -> Value {
    json!(x)
}

// ---- faces ----

fn members(mask: u32) -> String {
    mask_members(mask).iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn faces(a: &crate::FacesArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.faces;
    let k = pick(&a.k, &c.k, 3);
    let augmented = a.augmented || c.augmented.unwrap_or(false);
    let cmax = a.cmax || c.cmax.unwrap_or(false);
    if augmented && cmax {
        return Err(CliError::Parse("--augmented and --cmax are exclusive".into()));
    }
    let row = |t: &ClusterTree| vec![json!(t.encode()), json!(t.codimension()), json!(t.height())];
    let table = if cmax {
        let mut t = Table::new(&["encoding", "codimension", "height", "marked"]);
        for (tree, v) in enumerate_cmax_pairs(k)? {
            let mut r = row(&tree);
            r.push(json!(members(tree.vertices[v])));
            t.push(r);
        }
        t
    } else {
        let trees: Vec<ClusterTree> = if augmented { enumerate_augmented_strata(k)? } else { enumerate_fmax_strata(k)? };
        let mut t = Table::new(&["encoding", "codimension", "height"]);
        for tree in &trees {
            t.push(row(tree));
        }
        t
    };
    table.emit(out, json!({ "k": k, "augmented": augmented, "cmax": cmax, "count": table.rows.len() }))
}

// ---- charts ----

fn charts_verify(a: &crate::ChartsVerifyArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    out.require_json()?;
    let c = &cfg.charts;
    let kind = ChartKind::parse(&pick_str(&a.chart, &c.chart, "two"))?;
    let default_region = match kind {
        ChartKind::Two => 1.0,
        ChartKind::ThreeCorner => 0.3,
    };
    let samples = pick(&a.samples, &c.samples, 10_000);
    let region = pick(&a.region, &c.region, default_region);
    let rep = pullback_report(kind, samples, out.seed, region)?;
    out.json(&rep)
}

// ---- cones ----

#[derive(Serialize)]
struct VerdictRow {
    /// 1-based point indices.
    blocks: Vec<Vec<usize>>,
    merged_betas: Vec<String>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    at_equality: Option<bool>,
}

fn cones_classify(a: &crate::ConesClassifyArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    out.require_json()?;
    let c = &cfg.cones;
    let genus = pick(&a.genus, &c.genus, 0);
    let curvature = Curvature::from_sign(pick(&a.curvature, &c.curvature, 1))?;
    let betas = rational_list(
        &a.beta.clone().or_else(|| c.beta.clone()).ok_or_else(|| CliError::Parse("--beta is required".into()))?,
    )?;
    let verdicts = classify_merges(genus, curvature, &betas)?;
    let rows: Vec<VerdictRow> = verdicts
        .iter()
        .map(|v| {
            let (status, at_equality) = match &v.status {
                MergeStatus::Admissible => ("admissible", None),
                MergeStatus::AngleObstructed => ("angle-obstructed", None),
                MergeStatus::TroyanovViolated { at_equality } => ("troyanov-violated", Some(*at_equality)),
                MergeStatus::FootballBoundary => ("football-boundary", None),
            };
            VerdictRow {
                blocks: v.blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect(),
                merged_betas: v.merged_betas.iter().map(fmt_q).collect(),
                status,
                at_equality,
            }
        })
        .collect();
    let troy = if curvature == Curvature::Positive {
        let t = troyanov(genus, &betas)?;
        json!({ "holds": t.holds, "at_equality": t.at_equality, "slack": t.slack.iter().map(fmt_q).collect::<Vec<_>>() })
    } else {
        Value::Null
    };
    out.json(&json!({
        "genus": genus,
        "curvature": curvature,
        "betas": betas.iter().map(fmt_q).collect::<Vec<_>>(),
        "conic_euler": fmt_q(&conic_euler(genus, &betas)),
        "troyanov": troy,
        "verdicts": rows,
    }))
}

// ---- flat ----

fn flat_expand(a: &crate::FlatExpandArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.flat;
    let b1 = rational(&pick_str(&a.beta1, &c.beta1, "4/5"))?;
    let b2 = rational(&pick_str(&a.beta2, &c.beta2, "9/10"))?;
    let order = pick(&a.order, &c.order, 4);
    let e = corner_expansion(&b1, &b2, order)?;
    let mut t = Table::new(&["n", "m", "coefficient"]);
    for (i, poly) in e.coefficients.iter().enumerate() {
        for m in poly.frequencies() {
            t.push(vec![json!(i + 1), json!(m), qs(&poly.cos_coef(m))]);
        }
    }
    t.emit(
        out,
        json!({ "beta1": fmt_q(&b1), "beta2": fmt_q(&b2), "order": order, "log_coefficient": fmt_q(&e.log_coefficient) }),
    )
}

fn parse_points(s: &str) -> Result<Vec<num::complex::Complex64>, CliError> {
    s.split(',')
        .map(|p| {
            let bad = || CliError::Parse(format!("point `{p}` is not of the form x:y"));
            let (x, y) = p.split_once(':').ok_or_else(bad)?;
            Ok(num::complex::Complex64::new(
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn flat_probe(a: &crate::FlatProbeArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.flat;
    let betas = rational_list(&pick_str(&a.beta, &c.beta, "1/3,1/3,1/3"))?;
    let points = match a.points.clone().or_else(|| c.points.clone()) {
        Some(s) => parse_points(&s)?,
        None => {
            let n = betas.len();
            (0..n).map(|k| num::complex::Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()
        }
    };
    let kind = match pick_str(&a.model, &c.model, "plane").as_str() {
        "plane" => ModelKind::Plane,
        "local" => ModelKind::Local,
        m => return Err(CliError::Parse(format!("unknown model `{m}`"))),
    };
    let metric = FlatMetric::new(kind, points, betas)?;
    let mut t = Table::new(&["point", "beta", "r", "ratio", "extrapolated", "error_estimate"]);
    for i in 0..metric.points.len() {
        let rep = cone_angle_probe(&metric, i, &PROBE_RADII)?;
        for (r, ratio) in rep.radii.iter().zip(&rep.ratios) {
            t.push(vec![json!(i + 1), f(rep.beta), f(*r), f(*ratio), f(rep.extrapolated), f(rep.error_estimate)]);
        }
    }
    t.emit(out, json!({ "model": kind }))
}

// ---- phg ----

fn phg_index(a: &crate::PhgIndexArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.phg;
    let beta = rational(&pick_str(&a.beta, &c.beta, "7/10"))?;
    let cutoff = rational(&pick_str(&a.cutoff, &c.cutoff, "3"))?;
    let mut t = Table::new(&["alpha", "j", "k", "multiplicity"]);
    for e in index_set(&beta, &cutoff)? {
        for (j, k) in &e.labels {
            t.push(vec![qs(&e.value), json!(j), json!(k), json!(e.labels.len())]);
        }
    }
    t.emit(out, json!({ "beta": fmt_q(&beta), "cutoff": fmt_q(&cutoff) }))
}

fn phg_u0(a: &crate::PhgU0Args, cfg: &RunConfig, out: &Emitter) -> Res {
    let order = pick(&a.order, &cfg.phg.order, 6);
    let mut t = Table::new(&["j", "rfrak_power", "coefficient", "value"]);
    for (i, c) in u0_series(order).iter().enumerate() {
        t.push(vec![json!(i + 1), json!(2 * (i + 1)), qs(c), f(to_f64(c))]);
    }
    t.emit(out, json!({ "order": order }))
}

fn phg_recurse(a: &crate::PhgRecurseArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.phg;
    let pair = match a.pair.clone().or_else(|| c.pair.clone()) {
        Some(s) => {
            let p = rational_list(&s)?;
            if p.len() != 2 {
                return Err(CliError::Parse("--pair takes exactly two angle parameters".into()));
            }
            Some((p[0].clone(), p[1].clone()))
        }
        None => None,
    };
    let given = a.beta.clone().or_else(|| c.beta.clone()).map(|s| rational(&s)).transpose()?;
    let beta = match (&pair, given) {
        (Some((b1, b2)), g) => {
            let merged = b1 + b2 - Q::from_integer(1.into());
            if g.as_ref().is_some_and(|g| *g != merged) {
                return Err(CliError::Parse(format!("--beta must equal β₁ + β₂ − 1 = {}", fmt_q(&merged))));
            }
            merged
        }
        (None, g) => g.unwrap_or_else(|| parse_q("7/10").expect("literal")),
    };
    let steps = pick(&a.steps, &c.steps, 2);
    let cutoff = rational(&pick_str(&a.truncation, &c.truncation, "4"))?;
    let mut model = PhgModel::new(beta.clone(), FreeData::Symbolic)?;
    if let Some((b1, b2)) = &pair {
        model = model.with_pair_background(b1, b2, steps.max(1) as usize)?;
    }
    let coefs = model.expand(steps, &cutoff)?;
    let mut t = Table::new(&["j", "alpha", "l", "k", "m", "cos", "sin", "free"]);
    for u in &coefs {
        for (alpha, poly) in u.terms.iter().filter(|(al, _)| *al <= &cutoff) {
            let labels = u.labels(&beta, alpha);
            let free = u.free.contains(alpha);
            for m in poly.frequencies() {
                let (cs, sn) = (poly.cos_coef(m).to_string(), poly.sin_coef(m).to_string());
                for (l, k) in &labels {
                    t.push(vec![json!(u.j), qs(alpha), json!(l), json!(k), json!(m), json!(cs), json!(sn), json!(free)]);
                }
            }
        }
    }
    t.emit(
        out,
        json!({
            "beta": fmt_q(&beta),
            "steps": steps,
            "truncation": fmt_q(&cutoff),
            "pair": pair.as_ref().map(|(a, b)| vec![fmt_q(a), fmt_q(b)]),
        }),
    )
}

// ---- solve ----

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn dump_field(path: &Path, out: &Emitter, mesh: &FiberMesh, v: &[f64]) -> Res {
    let mut rows = Vec::with_capacity(v.len());
    for i in 0..mesh.nt {
        for j in 0..mesh.nphi {
            let x = v[mesh.idx(i, j)];
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(mesh.t(i)),
                fmt_f64(mesh.r(i)),
                fmt_f64(mesh.phi(j)),
                fmt_f64(x),
            ]);
        }
    }
    let bytes = csv_bytes(out.seed, &out.command, &["i", "j", "t", "r", "phi", "value"], &rows)?;
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn solve_hyperbolic(a: &crate::SolveHyperbolicArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    out.require_json()?;
    let c = &cfg.solve;
    let beta = positive(&rational(&pick_str(&a.beta, &c.beta, "7/10"))?, "β")?;
    let (nt, np) = mesh_size(&pick_str(&a.mesh.mesh, &c.mesh, "96x16"))?;
    let (r_min, r_max) = (pick(&a.rmin, &c.rmin, 1e-5), pick(&a.rmax, &c.rmax, 1.0));
    let tol = pick(&a.mesh.tol, &c.tol, 1e-12);
    let maxit = pick(&a.mesh.maxit, &c.maxit, 100);
    let eps = pick(&a.amplitude, &c.amplitude, 0.05);
    let problem = pick_str(&a.problem, &c.problem, "manufactured");
    if rfrak_of(beta, r_max) >= 2.0 {
        return Err(CliError::Parse(format!(
            "r_max = {r_max} lies outside the cone model (𝔯 = {} ≥ 2)",
            rfrak_of(beta, r_max)
        )));
    }
    let mesh = FiberMesh::new(nt, np, r_min, r_max, Outer::Dirichlet { data: vec![0.0; np] })?;
    let x = |r: f64| r.powf(2.0 * beta) / (4.0 * beta * beta);
    let op = assemble(mesh.clone(), mesh.sample(|r, _| r.powf(2.0 * beta - 2.0) / (1.0 - x(r)).powi(2)))?;
    let (rhs, exact): (Vec<f64>, Option<Vec<f64>>) = match problem.as_str() {
        "manufactured" => {
            // v* = ε r(1 − r²) cos φ vanishes on the outer circle.
            let vs = |r: f64, p: f64| eps * r * (1.0 - r * r) * p.cos();
            let rhs = mesh.sample(|r, p| {
                let lap = 8.0 * eps * r.powi(3) * p.cos() * (1.0 - x(r)).powi(2) / r.powf(2.0 * beta);
                lap + 2.0 * vs(r, p) - q_nonlinearity(vs(r, p))
            });
            (rhs, Some(mesh.sample(vs)))
        }
        "constant" => (vec![eps; mesh.len()], None),
        p => return Err(CliError::Parse(format!("unknown problem `{p}`"))),
    };
    let rep = picard_solve(&op, &rhs, tol, maxit)?;
    if let Some(path) = a.dump.clone().or_else(|| c.dump.clone()) {
        dump_field(&path, out, &mesh, &rep.solution)?;
    }
    out.json(&json!({
        "beta": beta,
        "mesh": { "nt": nt, "nphi": np, "r_min": r_min, "r_max": r_max },
        "problem": problem,
        "amplitude": eps,
        "report": rep,
        "error_sup": exact.map(|e| sup_diff(&rep.solution, &e)),
    }))
}

fn spherical_background(model: &str, beta: Option<f64>, nt: usize, np: usize) -> Result<SphereBackground, CliError> {
    Ok(match (model, beta) {
        ("round", None) => football(1.0, nt, np)?,
        ("football", Some(b)) => football(b, nt, np)?,
        ("football", None) => return Err(CliError::Parse("the football model needs --beta".into())),
        ("klein", None) => klein_quotient(nt, np)?,
        ("round" | "klein", Some(_)) => {
            return Err(CliError::Parse(format!("--beta does not apply to the {model} model")));
        }
        (m, _) => return Err(CliError::Parse(format!("unknown model `{m}`"))),
    })
}

fn solve_spherical(a: &crate::SolveSphericalArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    out.require_json()?;
    let c = &cfg.solve;
    let model = pick_str(&a.model, &c.model, "klein");
    let beta = a.beta.clone().or_else(|| c.beta.clone()).map(|s| rational(&s)).transpose()?;
    let beta = beta.map(|b| positive(&b, "β")).transpose()?;
    let (nt, np) = mesh_size(&pick_str(&a.mesh.mesh, &c.mesh, "96x16"))?;
    let tol = pick(&a.mesh.tol, &c.tol, 1e-11);
    let maxit = pick(&a.mesh.maxit, &c.maxit, 30);
    let amp = pick(&a.perturb, &c.perturb, 0.0);
    let guard = !a.no_guard && c.guard.unwrap_or(true);
    let margin = pick(&a.margin, &c.margin, GAP_MARGIN);
    let mut bg = spherical_background(&model, beta, nt, np)?;
    let p = |t: f64, phi: f64| amp * bump(t, 3.0) * phi.cos();
    if !amp.is_zero() {
        bg = perturbed(&bg, p)?;
    }
    let rep: SolveReport = newton_solve_spherical(&bg, guard.then_some(margin), tol, maxit)?;
    let recovery = (!amp.is_zero()).then(|| {
        rep.solution.iter().zip(bg.op.mesh.nodes()).fold(0.0f64, |m, (u, (t, phi))| m.max((u + p(t, phi)).abs()))
    });
    if let Some(path) = a.dump.clone().or_else(|| c.dump.clone()) {
        dump_field(&path, out, &bg.op.mesh, &rep.solution)?;
    }
    out.json(&json!({
        "model": model,
        "beta": beta,
        "mesh": { "nt": nt, "nphi": np },
        "perturbation": amp,
        "guard": guard.then_some(margin),
        "area": bg.op.area(),
        "report": rep,
        "recovery_error": recovery,
    }))
}

fn solve_decay(a: &crate::SolveDecayArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    let c = &cfg.solve;
    let b1 = rational(&pick_str(&a.beta1, &c.beta1, "4/5"))?;
    let b2 = rational(&pick_str(&a.beta2, &c.beta2, "9/10"))?;
    let order = pick(&a.order, &c.order, 1);
    let rhos = float_list(&pick_str(&a.rhos, &c.rhos, "0.1,0.05,0.025"))?;
    let cutoff = rational(&pick_str(&a.cutoff, &c.cutoff, "14"))?;
    let (nt, np) = mesh_size(&pick_str(&a.mesh, &c.mesh, "8x16"))?;
    let (r_min, r_max) = (pick(&a.rmin, &c.rmin, 0.3), pick(&a.rmax, &c.rmax, 0.6));
    // Half an angular step keeps nodes off the ray through the pair.
    let mesh = FiberMesh::new(nt, np, r_min, r_max, Outer::PeriodicSphereClosure)?.with_phi_offset(0.1);
    let approx = PairApproximation::new(&b1, &b2, order, &cutoff)?;
    if rhos.iter().any(|&r| r <= 0.0 || r >= r_min) {
        return Err(CliError::Parse(format!("each ρ must lie in (0, r_min = {r_min})")));
    }
    let fam = approx.residual_family(&mesh, &rhos);
    match out.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for (rho, v) in &fam {
                for i in 0..mesh.nt {
                    for j in 0..mesh.nphi {
                        rows.push(vec![
                            fmt_f64(*rho),
                            i.to_string(),
                            j.to_string(),
                            fmt_f64(mesh.t(i)),
                            fmt_f64(mesh.phi(j)),
                            fmt_f64(v[mesh.idx(i, j)]),
                        ]);
                    }
                }
            }
            out.csv(&["rho", "i", "j", "t", "phi", "value"], &rows)
        }
        Format::Json => {
            let rep = decay_check(&mesh, &fam, order)?;
            out.json(&json!({
                "beta1": fmt_q(&b1),
                "beta2": fmt_q(&b2),
                "beta": fmt_q(&(&b1 + &b2 - Q::from_integer(1.into()))),
                "cutoff": fmt_q(&cutoff),
                "mesh": { "nt": nt, "nphi": np, "r_min": r_min, "r_max": r_max },
                "report": rep,
            }))
        }
    }
}

// ---- fit ----

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn num_at(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64, CliError> {
    let s = rec.get(i).unwrap_or("");
    s.trim().parse().map_err(|_| CliError::Parse(format!("row {line}: `{s}` is not a number")))
}

fn fit(a: &crate::FitArgs, cfg: &RunConfig, out: &Emitter) -> Res {
    out.require_json()?;
    let c = &cfg.fit;
    let input = a.input.clone().or_else(|| c.input.clone()).ok_or_else(|| CliError::Parse("--input is required".into()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&input)
        .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Parse(e.to_string()))?.clone();
    let records: Vec<csv::StringRecord> =
        rdr.records().collect::<Result<_, _>>().map_err(|e| CliError::Parse(e.to_string()))?;
    let value = column(&headers, "value").ok_or_else(|| CliError::Parse("input has no `value` column".into()))?;
    let cols = ["rho", "i", "j", "t", "phi"].map(|n| column(&headers, n));
    if let [Some(rho), Some(ci), Some(cj), Some(ct), Some(cp)] = cols {
        let order = pick(&a.n, &c.n, 1);
        fit_family(&records, [rho, ci, cj, ct, cp, value], order, out)
    } else if let Some(cr) = column(&headers, "r") {
        let terms = pick(&a.terms, &c.terms, 1);
        // Largest |value| on each ring, rings ordered by decreasing r.
        let mut rings: BTreeMap<u64, f64> = BTreeMap::new();
        for (n, rec) in records.iter().enumerate() {
            let (r, v) = (num_at(rec, cr, n + 1)?, num_at(rec, value, n + 1)?);
            let e = rings.entry(r.to_bits()).or_insert(v);
            if v.abs() > e.abs() {
                *e = v;
            }
        }
        let mut samples: Vec<(f64, f64)> = rings.into_iter().map(|(b, v)| (f64::from_bits(b), v)).collect();
        samples.sort_by(|x, y| y.0.total_cmp(&x.0));
        let rep = fit_exponents(&samples, terms)?;
        out.json(&json!({ "kind": "profile", "input": input, "rings": samples.len(), "report": rep }))
    } else {
        Err(CliError::Parse("input needs either rho,i,j,t,phi or r columns".into()))
    }
}

fn fit_family(records: &[csv::StringRecord], cols: [usize; 6], order: u32, out: &Emitter) -> Res {
    let [crho, ci, cj, ct, cp, cv] = cols;
    let mut rhos: Vec<f64> = Vec::new();
    let mut cells: Vec<(usize, usize, usize, f64, f64, f64)> = Vec::with_capacity(records.len());
    for (n, rec) in records.iter().enumerate() {
        let rho = num_at(rec, crho, n + 1)?;
        let k = match rhos.iter().position(|r| *r == rho) {
            Some(k) => k,
            None => {
                rhos.push(rho);
                rhos.len() - 1
            }
        };
        let idx = |c: usize| -> Result<usize, CliError> {
            let x = num_at(rec, c, n + 1)?;
            if x < 0.0 || x.fract() != 0.0 {
                return Err(CliError::Parse(format!("row {}: bad node index {x}", n + 1)));
            }
            Ok(x as usize)
        };
        cells.push((k, idx(ci)?, idx(cj)?, num_at(rec, ct, n + 1)?, num_at(rec, cp, n + 1)?, num_at(rec, cv, n + 1)?));
    }
    let nt = cells.iter().map(|c| c.1).max().map_or(0, |m| m + 1);
    let np = cells.iter().map(|c| c.2).max().map_or(0, |m| m + 1);
    if nt < 2 || np < 2 || cells.len() != rhos.len() * nt * np {
        return Err(CliError::Parse(format!("{} rows do not fill {} fields on a {nt}×{np} mesh", cells.len(), rhos.len())));
    }
    // Recover the cell-centred mesh from the first and last rings.
    let t_at = |i: usize| cells.iter().find(|c| c.1 == i).map(|c| c.3).expect("ring present");
    let h = (t_at(nt - 1) - t_at(0)) / (nt - 1) as f64;
    let t_min = t_at(0) - 0.5 * h;
    let offset = cells.iter().find(|c| c.2 == 0).map(|c| c.4).expect("angle present");
    let mesh = FiberMesh::cylinder(nt, np, t_min, t_min + nt as f64 * h, Outer::PeriodicSphereClosure)?
        .with_phi_offset(offset);
    let mut fam: Vec<(f64, Vec<f64>)> = rhos.iter().map(|&r| (r, vec![f64::NAN; nt * np])).collect();
    for &(k, i, j, _, _, v) in &cells {
        fam[k].1[mesh.idx(i, j)] = v;
    }
    if fam.iter().any(|(_, v)| v.iter().any(|x| x.is_nan())) {
        return Err(CliError::Parse("family has missing nodes".into()));
    }
    let rep = decay_check(&mesh, &fam, order)?;
    out.json(&json!({ "kind": "family", "mesh": { "nt": nt, "nphi": np }, "report": rep }))
}
