//! Subcommand implementations. Each returns an [`Output`] holding both the
//! CSV table and the JSON document; `--format` picks one.
//!
//! CSV layouts (first line is the header):
//!
//! | subcommand | columns |
//! |---|---|
//! | solve, carry | `record,i,j,value` |
//! | metric | `metric,value` |
//! | glue | `i,j,k,mass` |
//! | hausdorff | `quantity,value` |
//! | sweep | `t,value,plan_jump_prev,eps_slack` |
//! | select | `t,value,plan_jump_prev,eps_slack,lambda` |
//! | monge | `n,delta,mass` |
//! | gallery | `t,value,plan_jump_prev,unique` |
//! | verify | `suite,check,count,violations,max_excess` |

use kantorovich::gluing::{carry_plan, carry_plan_both, carry_plan_eps, carry_plan_wp, glue};
use kantorovich::hausdorff::{hausdorff_exact, hausdorff_upper};
use kantorovich::metrics::{d_kantorovich, d_kantorovich_dual, d_kr, w_p_ground, GroundCost};
use kantorovich::monge::{convergence_in_measure, shifted_grid_scenario};
use kantorovich::parametric::{
    check_plan_convergence, check_uniform_integrability, gallery, select_eps_optimal_path, verdict_name, Approach,
    ParamFamily, SweepReport,
};
use kantorovich::solver::{optimum_is_unique, solve_kantorovich};
use kantorovich::suites::{run_instance, summarize, Suite};
use kantorovich::{Coupling, DiscreteMeasure, Error};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::table::{Cell, Table};
use crate::{CliError, Command, Config, Output};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cmd: &Command, cfg: &Config, jobs: usize) -> Result<Output> {
    match cmd {
        Command::Solve => solve(cfg),
        Command::Metric => metric(cfg),
        Command::Glue => glue_cmd(cfg),
        Command::Carry => carry(cfg),
        Command::Hausdorff => hausdorff(cfg),
        Command::Sweep => sweep(cfg, jobs),
        Command::Select => select(cfg),
        Command::Monge => monge(cfg),
        Command::Gallery { name, n } => gallery_cmd(cfg, name.as_deref(), *n, jobs),
        Command::Verify { suite, instances } => verify(cfg, suite, *instances, jobs),
    }
}

fn output(table: Table, json: Value) -> Output {
    Output { table, json, notes: Vec::new(), violation: None }
}

/// Maps `f` over `items` on `jobs` threads, keeping input order.
pub fn par_map<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return Ok(items.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

fn measure_json(m: &DiscreteMeasure) -> Value {
    let pts: Vec<&[f64]> = m.points().iter().map(|p| p.coords()).collect();
    json!({ "points": pts, "weights": m.weights() })
}

fn coupling_json(c: &Coupling) -> Value {
    json!({
        "row": measure_json(c.row_measure()),
        "col": measure_json(c.col_measure()),
        "mass": c.mass().to_rows(),
    })
}

fn push_plan(t: &mut Table, plan: &Coupling) {
    for (i, j, x) in plan.mass().iter() {
        if x > 0.0 {
            t.push(vec!["plan".into(), i.into(), j.into(), x.into()]);
        }
    }
}

fn solve(cfg: &Config) -> Result<Output> {
    let (mu, nu) = (cfg.measure("mu")?, cfg.measure("nu")?);
    let cost = cfg.cost("cost")?.eval(&mu, &nu)?;
    let r = solve_kantorovich(&mu, &nu, &cost)?;
    let mut t = Table::new(&["record", "i", "j", "value"]);
    t.push(vec!["value".into(), Cell::Empty, Cell::Empty, r.value.into()]);
    for (i, u) in r.dual_u.iter().enumerate() {
        t.push(vec!["u".into(), i.into(), Cell::Empty, (*u).into()]);
    }
    for (j, v) in r.dual_v.iter().enumerate() {
        t.push(vec!["v".into(), Cell::Empty, j.into(), (*v).into()]);
    }
    push_plan(&mut t, &r.plan);
    let json = json!({
        "value": r.value,
        "dual_value": r.dual_value(),
        "u": r.dual_u,
        "v": r.dual_v,
        "plan": coupling_json(&r.plan),
    });
    Ok(output(t, json))
}

fn metric(cfg: &Config) -> Result<Output> {
    let (mu, nu) = (cfg.measure("mu")?, cfg.measure("nu")?);
    let ground = cfg.ground("ground")?;
    let p = cfg.number_or("p", 2.0)?;
    let rows: Vec<(&str, f64)> = vec![
        ("d_k", d_kantorovich(&mu, &nu, &ground)?),
        ("d_k_dual", d_kantorovich_dual(&mu, &nu, &ground)?.value),
        ("d_k_truncated", d_kantorovich(&mu, &nu, &GroundCost::Truncated)?),
        ("d_kr", d_kr(&mu, &nu, &ground)?),
        ("w_p", w_p_ground(&mu, &nu, &ground, p)?),
    ];
    let mut t = Table::new(&["metric", "value"]);
    let mut obj = serde_json::Map::new();
    for (name, v) in rows {
        t.push(vec![name.into(), v.into()]);
        obj.insert(name.into(), json!(v));
    }
    obj.insert("p".into(), json!(p));
    Ok(output(t, Value::Object(obj)))
}

fn glue_cmd(cfg: &Config) -> Result<Output> {
    let (c12, c23) = (cfg.coupling("c12")?, cfg.coupling("c23")?);
    let lam = glue(&c12, &c23)?;
    let r12 = lam.project_pair(0, 1)?.mass().max_abs_diff(c12.mass());
    let r23 = lam.project_pair(1, 2)?.mass().max_abs_diff(c23.mass());
    let mut t = Table::new(&["i", "j", "k", "mass"]);
    for (flat, x) in lam.mass().iter().enumerate() {
        let idx = lam.unravel(flat);
        t.push(vec![idx[0].into(), idx[1].into(), idx[2].into(), (*x).into()]);
    }
    let json = json!({
        "shape": lam.shape(),
        "mass": lam.mass(),
        "projection_residual_12": r12,
        "projection_residual_23": r23,
    });
    Ok(output(t, json))
}

fn carry(cfg: &Config) -> Result<Output> {
    let sigma = if cfg.has("sigma") {
        cfg.coupling("sigma")?
    } else {
        let (mu, nu) = (cfg.measure("mu")?, cfg.measure("nu")?);
        let c = cfg.cost("cost")?.eval(&mu, &nu)?;
        solve_kantorovich(&mu, &nu, &c)?.plan
    };
    let mu2 = cfg.measure("mu2")?;
    let (alpha, beta) = (cfg.ground("alpha")?, cfg.ground("beta")?);
    let mode = cfg.text_or("mode", "one_sided")?;
    let (plan, lhs, rhs) = match mode {
        "one_sided" => {
            let c = carry_plan(&sigma, &mu2, &alpha, &beta)?;
            (c.plan, c.lhs, c.rhs)
        }
        "two_sided" => {
            let c = carry_plan_both(&sigma, &mu2, &cfg.measure("nu2")?, &alpha, &beta)?;
            (c.plan, c.lhs, c.rhs)
        }
        "wp" => {
            let c = carry_plan_wp(&sigma, &mu2, &cfg.measure("nu2")?, cfg.number_or("p", 2.0)?)?;
            (c.plan, c.lhs, c.rhs)
        }
        "eps" => {
            let c = carry_plan_eps(&sigma, &mu2, &alpha, &beta, cfg.number("eps")?, &cfg.coupling("eta")?)?;
            (c.plan, c.lhs, c.rhs_plus_eps)
        }
        other => {
            return Err(CliError::Config {
                path: "mode".into(),
                msg: format!("unknown mode {other:?}; expected one_sided, two_sided, wp or eps"),
            })
        }
    };
    let mut t = Table::new(&["record", "i", "j", "value"]);
    t.push(vec!["lhs".into(), Cell::Empty, Cell::Empty, lhs.into()]);
    t.push(vec!["rhs".into(), Cell::Empty, Cell::Empty, rhs.into()]);
    push_plan(&mut t, &plan);
    Ok(output(t, json!({ "mode": mode, "lhs": lhs, "rhs": rhs, "plan": coupling_json(&plan) })))
}

fn hausdorff(cfg: &Config) -> Result<Output> {
    let (mu, nu, mu2, nu2) = (cfg.measure("mu")?, cfg.measure("nu")?, cfg.measure("mu2")?, cfg.measure("nu2")?);
    let (alpha, beta) = (cfg.ground("alpha")?, cfg.ground("beta")?);
    let (exact, upper, witness) = match hausdorff_exact(&mu, &nu, &mu2, &nu2, &alpha, &beta) {
        Ok(r) => (r.exact, r.upper_bound, r.witness_pair),
        Err(Error::SizeGuard { .. }) => (None, hausdorff_upper(&mu, &nu, &mu2, &nu2, &alpha, &beta)?, None),
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["exact".into(), exact.into()]);
    t.push(vec!["upper_bound".into(), upper.into()]);
    let witness = witness.map(|(a, b)| json!([coupling_json(&a), coupling_json(&b)]));
    let mut out = output(t, json!({ "exact": exact, "upper_bound": upper, "witness_pair": witness }));
    if let Some(x) = exact {
        if x > upper + 1e-8 {
            out.violation = Some(format!("hausdorff distance {x:e} exceeds upper bound {upper:e}"));
        }
    } else {
        out.notes.push("exact distance skipped: polytope too large to enumerate".into());
    }
    Ok(out)
}

fn solve_family(family: &ParamFamily, jobs: usize) -> Result<SweepReport> {
    let points = par_map(jobs, family.t_grid().to_vec(), |t| family.solve_at(t))?
        .into_iter()
        .collect::<kantorovich::Result<Vec<_>>>()?;
    Ok(SweepReport::from_points(points)?)
}

fn sweep(cfg: &Config, jobs: usize) -> Result<Output> {
    let family = cfg.family()?;
    let report = solve_family(&family, jobs)?;
    let plans = cfg.bool_or("plans", false)?;
    let mut t = Table::new(&["t", "value", "plan_jump_prev", "eps_slack"]);
    let mut rows = Vec::new();
    for r in &report.rows {
        t.push(vec![r.t.into(), r.value.into(), r.plan_jump_prev.into(), r.eps_slack.into()]);
        let mut row =
            json!({ "t": r.t, "value": r.value, "plan_jump_prev": r.plan_jump_prev, "eps_slack": r.eps_slack });
        if plans {
            row["plan"] = coupling_json(&r.plan);
        }
        rows.push(row);
    }
    let mut json = json!({
        "rows": rows,
        "max_value_jump": report.max_value_jump(),
        "max_plan_jump": report.max_plan_jump(),
    });
    if cfg.has("integrability") {
        let c = integrability_config(cfg)?;
        let rep = check_uniform_integrability(&family, &c.0, c.1)?;
        json["integrability"] = json!({
            "tails": rep.tails,
            "vanishes": rep.vanishes,
            "violations": rep.violations.iter().map(|v| json!({"t": v.t, "i": v.i, "j": v.j, "cost": v.cost, "bound": v.bound})).collect::<Vec<_>>(),
        });
    }
    if cfg.has("convergence") {
        let (t_star, approach, tol) = convergence_config(cfg)?;
        let rep = check_plan_convergence(&family, t_star, approach, tol)?;
        json["convergence"] = json!({
            "t_star": t_star,
            "distances": rep.distances,
            "unique_at_limit": rep.unique_at_limit,
            "verdict": verdict_name(rep.verdict),
        });
    }
    Ok(output(t, json))
}

fn sub_config(cfg: &Config, key: &str) -> Result<Config> {
    let v = cfg.raw(key).expect("caller checked presence");
    let text = serde_json::to_string(v).expect("json values serialize");
    Config::parse(&text, cfg.seed()).map_err(|e| match e {
        CliError::Config { path, msg } => CliError::Config { path: format!("{key}.{path}"), msg },
        CliError::Json { .. } => CliError::Config { path: key.into(), msg: "expected an object".into() },
        other => other,
    })
}

fn integrability_config(cfg: &Config) -> Result<(Vec<f64>, f64)> {
    let c = sub_config(cfg, "integrability")?;
    Ok((c.numbers_or("r_grid", &[1.0, 2.0, 4.0, 8.0])?, c.number_or("threshold", 1e-9)?))
}

fn convergence_config(cfg: &Config) -> Result<(f64, Approach, f64)> {
    let c = sub_config(cfg, "convergence")?;
    let approach = match c.text_or("approach", "both")? {
        "left" => Approach::Left,
        "right" => Approach::Right,
        "both" => Approach::Both,
        other => {
            return Err(CliError::Config {
                path: "convergence.approach".into(),
                msg: format!("unknown approach {other:?}; expected left, right or both"),
            })
        }
    };
    Ok((c.number("t_star")?, approach, c.number_or("tol", 1e-9)?))
}

fn select(cfg: &Config) -> Result<Output> {
    let family = cfg.family()?;
    let eps = cfg.number("eps")?;
    let path = select_eps_optimal_path(&family, eps)?;
    let plans = cfg.bool_or("plans", false)?;
    let mut t = Table::new(&["t", "value", "plan_jump_prev", "eps_slack", "lambda"]);
    let mut rows = Vec::new();
    for r in &path.rows {
        t.push(vec![r.t.into(), r.value.into(), r.plan_jump_prev.into(), r.excess.into(), r.lambda.into()]);
        let mut row = json!({ "t": r.t, "value": r.value, "plan_jump_prev": r.plan_jump_prev, "eps_slack": r.excess, "lambda": r.lambda });
        if plans {
            row["plan"] = coupling_json(&r.plan);
        }
        rows.push(row);
    }
    Ok(output(t, json!({ "eps": eps, "rows": rows, "max_plan_jump": path.max_plan_jump() })))
}

fn monge(cfg: &Config) -> Result<Output> {
    let atoms = cfg.count_or("atoms", 16)?;
    let n_max = cfg.count_or("n_max", 64)?;
    let deltas = cfg.numbers_or("deltas", &[0.05, 0.1, 0.2])?;
    let s = shifted_grid_scenario(atoms, n_max)?;
    let table = convergence_in_measure(&s.mu0, &s.maps, &s.t0, &deltas)?;
    let mut t = Table::new(&["n", "delta", "mass"]);
    for r in &table.rows {
        t.push(vec![r.n.into(), r.delta.into(), r.mass.into()]);
    }
    let mut out = output(
        t,
        json!({
            "rows": table.rows.iter().map(|r| json!({"n": r.n, "delta": r.delta, "mass": r.mass})).collect::<Vec<_>>(),
            "total_variation": s.tv,
            "verdicts": table.verdicts.iter().map(|(d, ok)| json!({"delta": d, "converges": ok})).collect::<Vec<_>>(),
        }),
    );
    for (d, ok) in &table.verdicts {
        out.notes.push(format!("delta={d} {}", if *ok { "decreasing to 0" } else { "not decreasing to 0" }));
    }
    Ok(out)
}

fn gallery_cmd(cfg: &Config, name: Option<&str>, n: Option<usize>, jobs: usize) -> Result<Output> {
    let name = match name {
        Some(s) => s,
        None => cfg.text_or("gallery", "example-A")?,
    };
    let n = match n {
        Some(n) => n,
        None => cfg.count_or("n", 8)?,
    };
    let mut family = gallery(name, n)?;
    if let Some(g) = cfg.grid("t_grid")? {
        family = family.with_grid(g)?;
    }
    let report = solve_family(&family, jobs)?;
    let unique = par_map(jobs, report.rows.iter().collect(), |r| {
        let (mu, nu) = (r.plan.row_measure(), r.plan.col_measure());
        let c = family.cost_at(r.t).eval(mu, nu)?;
        optimum_is_unique(mu, nu, &c)
    })?
    .into_iter()
    .collect::<kantorovich::Result<Vec<_>>>()?;
    let label = |u: Option<bool>| match u {
        Some(true) => "true",
        Some(false) => "false",
        None => "unknown",
    };
    let mut t = Table::new(&["t", "value", "plan_jump_prev", "unique"]);
    let mut rows = Vec::new();
    for (r, u) in report.rows.iter().zip(&unique) {
        t.push(vec![r.t.into(), r.value.into(), r.plan_jump_prev.into(), label(*u).into()]);
        rows.push(json!({ "t": r.t, "value": r.value, "plan_jump_prev": r.plan_jump_prev, "unique": u }));
    }
    Ok(output(t, json!({ "name": name, "n": n, "rows": rows, "max_plan_jump": report.max_plan_jump() })))
}

/// Standard instance counts per suite.
pub fn default_instances(s: Suite) -> usize {
    match s {
        Suite::Theorem1 => 1000,
        Suite::Hausdorff => 200,
        Suite::Convexity => 500,
        Suite::Metrics => 300,
        Suite::Solver => 500,
        Suite::Gluing => 500,
    }
}

fn verify(cfg: &Config, name: &str, instances: Option<usize>, jobs: usize) -> Result<Output> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        vec![Suite::from_name(name).ok_or_else(|| CliError::Config {
            path: "--suite".into(),
            msg: format!("unknown suite {name:?}; expected all or one of {names:?}"),
        })?]
    };
    let seed = cfg.seed();
    let mut t = Table::new(&["suite", "check", "count", "violations", "max_excess"]);
    let mut out_json = Vec::new();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for s in suites {
        let n = instances.unwrap_or_else(|| default_instances(s));
        let per = par_map(jobs, (0..n).collect(), |i| run_instance(s, seed, i))?
            .into_iter()
            .collect::<kantorovich::Result<Vec<_>>>()?;
        let sum = summarize(s, seed, &per);
        for c in &sum.checks {
            t.push(vec![s.name().into(), c.name.into(), c.count.into(), c.violations.into(), c.max_excess.into()]);
        }
        out_json.push(json!({
            "suite": s.name(),
            "seed": seed,
            "instances": n,
            "checks": sum.checks.iter().map(|c| json!({
                "check": c.name, "count": c.count, "violations": c.violations,
                "max_excess": c.max_excess, "first_violation": c.first_violation,
            })).collect::<Vec<_>>(),
        }));
        notes.push(sum.summary_line());
        if sum.violations() > 0 {
            bad.push(sum.summary_line());
        }
    }
    let mut out = output(t, Value::Array(out_json));
    out.notes = notes;
    if !bad.is_empty() {
        out.violation = Some(format!("invariant violations: {}", bad.join("; ")));
    }
    Ok(out)
}
