//! The full pipeline: log-Holder check, norms, cutoff, S+ probe, solve,
//! multistart, De Giorgi traces, L-infinity fit, subspace negativity and an
//! optional imbedding sweep. A failing stage is recorded and the rest still run
//! unless they need its output.

use serde::Serialize;
use serde_json::{json, Value};

use fracpx::degiorgi::verify_linf_bound;
use fracpx::exponents::{check_log_holder, ScalarExponent};
use fracpx::grid::GridFunction;
use fracpx::nonlocal::imbedding_ratio;
use fracpx::solver::{
    minimize_energy, modified_nonlinearity, multistart_small_solutions, splus_probe, subspace_negativity,
    Nonlinearity, SubspaceOptions,
};

use crate::commands::{
    bump_start, degiorgi_parts, flush, imbedding_options, norm_report, run_solve, setup, solve_outcome,
    write_part_csvs, CliError, CliResult, Context, Outcome, Setup, SCHEMA_VERSION,
};
use crate::config::{Config, NonlinearitySpec};

/// Pairs sampled by the log-Holder check.
pub const LOG_HOLDER_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageResult {
    pub name: String,
    pub status: Status,
    pub error: Option<String>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub schema_version: u32,
    pub seed: u64,
    /// The configuration as run, without the output directory.
    pub config: Config,
    pub stages: Vec<StageResult>,
    pub failed: Vec<String>,
    pub passed: bool,
}

struct Recorder<'a> {
    ctx: &'a Context,
    stages: Vec<StageResult>,
}

impl Recorder<'_> {
    fn record(&mut self, name: &str, r: CliResult<(bool, Value)>) -> bool {
        let (status, error, details) = match r {
            Ok((true, d)) => (Status::Passed, None, d),
            Ok((false, d)) => (Status::Failed, None, d),
            Err(e) => (Status::Failed, Some(e.to_string()), Value::Null),
        };
        self.ctx.log(format!("stage {name}: {status:?}"));
        self.stages.push(StageResult {
            name: name.into(),
            status,
            error,
            details,
        });
        status == Status::Passed
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.ctx.log(format!("stage {name}: skipped ({why})"));
        self.stages.push(StageResult {
            name: name.into(),
            status: Status::Skipped,
            error: Some(why.into()),
            details: Value::Null,
        });
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn stage_log_holder(ctx: &Context) -> CliResult<(bool, Value)> {
    let pr = &ctx.problem;
    let rep = check_log_holder(&pr.p, &pr.domain, &ctx.config.suite.log_holder_epsilons, LOG_HOLDER_SAMPLES)?;
    Ok((rep.sup_value.is_finite(), to_value(&rep)))
}

fn stage_norms(ctx: &Context) -> CliResult<(bool, Value)> {
    let rep = norm_report(ctx)?;
    ctx.write_json("norm_report.json", &rep)?;
    Ok((rep.passed, to_value(&rep)))
}

fn stage_cutoff(s: &Setup) -> CliResult<(bool, Value)> {
    let ok = s.report.beta_check.passed && s.solver_nl.is_some();
    Ok((ok, to_value(&s.report)))
}

fn stage_splus(ctx: &Context) -> CliResult<(bool, Value)> {
    let rep = splus_probe(ctx.problem.grid.clone(), &ctx.problem.p, ctx.config.suite.splus_trials, ctx.seed)?;
    Ok((
        rep.passed,
        json!({ "trials": rep.pairings.len(), "min_pairing": rep.min_pairing, "passed": rep.passed }),
    ))
}

fn is_zero_nl(ctx: &Context) -> bool {
    ctx.config.nonlinearity == NonlinearitySpec::Zero
}

/// Distinct limits; the nonzero ones (negative energy) go on to the De Giorgi stage.
fn stage_multistart(ctx: &Context, nl: &Nonlinearity, t2: f64) -> CliResult<((bool, Value), Vec<GridFunction>)> {
    let pr = &ctx.problem;
    let opts = ctx.options();
    let ms = multistart_small_solutions(
        pr.grid.clone(),
        ctx.config.solver.starts,
        &pr.p,
        nl,
        t2,
        ctx.seed,
        &opts,
    )?;
    let runs: Vec<Value> = ms
        .runs
        .iter()
        .zip(&ms.symmetries)
        .map(|(r, sym)| {
            json!({
                "symmetry": sym,
                "converged": r.converged,
                "iterations": r.iterations,
                "energy": r.energy,
                "max_residual": r.max_residual,
                "sup_norm": r.sup_norm,
                "history_nonincreasing": r.history_nonincreasing(),
            })
        })
        .collect();
    let mut nonzero = Vec::new();
    for (i, rec) in ms.solutions.iter().enumerate() {
        let u = ms.solution(rec);
        ctx.write_function(&format!("multistart_solution_{i}.csv"), u)?;
        if rec.energy < 0.0 {
            nonzero.push(u.clone());
        }
    }
    let all_converged = ms.runs.iter().all(|r| r.converged);
    let residual_ok = ms.runs.iter().all(|r| r.max_residual <= 10.0 * opts.tol);
    let monotone = ms.runs.iter().all(|r| r.history_nonincreasing());
    let expectation = if is_zero_nl(ctx) {
        ms.runs.iter().all(|r| r.sup_norm < 1e-4)
    } else {
        nonzero.len() >= 2
    };
    let details = json!({
        "schema_version": SCHEMA_VERSION,
        "starts": ms.runs.len(),
        "distinct": ms.solutions,
        "nonzero": nonzero.len(),
        "all_converged": all_converged,
        "residual_ok": residual_ok,
        "histories_nonincreasing": monotone,
        "runs": runs,
    });
    ctx.write_json("multistart.json", &details)?;
    Ok(((all_converged && residual_ok && monotone && expectation, details), nonzero))
}

fn stage_degiorgi(ctx: &Context, solutions: &[(String, GridFunction)]) -> CliResult<(bool, Value)> {
    let mut ok = true;
    let mut out = Vec::new();
    for (label, u) in solutions {
        let parts = degiorgi_parts(ctx, u)?;
        write_part_csvs(ctx, &format!("degiorgi_{label}"), &parts)?;
        ok &= parts.iter().all(|p| p.passed);
        out.push(json!({ "solution": label, "parts": parts }));
    }
    Ok((ok, Value::Array(out)))
}

/// Ground states for `lambda * scale`, their De Giorgi traces and the fit of
/// `sup|u|` against `||u||_{L^q~}`.
fn stage_linf(ctx: &Context, s: &Setup, lambda: f64) -> CliResult<(bool, Value)> {
    let pr = &ctx.problem;
    let cfg = &ctx.config;
    let start = bump_start(ctx)?;
    let opts = ctx.options();
    let mut sols = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    let mut w = csv::Writer::from_writer(ctx.create("linf_family.csv")?);
    w.write_record(["lambda", "converged", "sup_norm", "energy", "vanish_level"])
        .map_err(csv_err)?;
    for (i, scale) in cfg.degiorgi.lambda_scales.iter().enumerate() {
        let lam = lambda * scale;
        let base = Nonlinearity::prototype(lam, &pr.r, &pr.q)?;
        let nl = if cfg.cutoff.enabled {
            modified_nonlinearity(&base, &s.cut, &pr.domain)?
        } else {
            base
        };
        let rep = minimize_energy(&start, &pr.p, &pr.q, &nl, &opts)?;
        let converged = solve_outcome(&rep) == Outcome::Ok;
        let parts = degiorgi_parts(ctx, &rep.solution)?;
        write_part_csvs(ctx, &format!("degiorgi_family_{i}"), &parts)?;
        let traces_ok = parts.iter().all(|p| p.passed);
        ok &= converged && traces_ok;
        let vanish = parts[0].trace.vanish_level;
        w.write_record([
            format!("{lam:e}"),
            converged.to_string(),
            format!("{:e}", rep.sup_norm),
            format!("{:e}", rep.energy),
            vanish.map(|n| n.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
        rows.push(json!({
            "lambda": lam,
            "converged": converged,
            "sup_norm": rep.sup_norm,
            "energy": rep.energy,
            "traces_passed": traces_ok,
            "verdicts": parts.iter().map(|p| p.verdict.clone()).collect::<Vec<_>>(),
        }));
        if converged {
            sols.push(rep.solution);
        }
    }
    w.flush().map_err(|source| CliError::Io {
        path: ctx.path("linf_family.csv"),
        source,
    })?;
    let q_tilde = ScalarExponent::max(&pr.trace, &pr.q);
    let fit = verify_linf_bound(&sols, &q_tilde)?;
    let passed = ok && fit.passed();
    Ok((passed, json!({ "family": rows, "fit": fit, "fit_passed": fit.passed() })))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Core(fracpx::Error::Csv(e))
}

fn stage_subspace(ctx: &Context, s: &Setup) -> CliResult<(bool, Value)> {
    let sc = &ctx.config.subspace;
    let opts = SubspaceOptions {
        sphere_samples: sc.sphere_samples,
        coefficient_samples: sc.coefficient_samples,
        seed: ctx.seed,
        ..SubspaceOptions::default()
    };
    let mut ok = true;
    let mut reps = Vec::new();
    for &n in &sc.dims {
        let r = subspace_negativity(ctx.problem.grid.clone(), n, &ctx.problem.p, &s.base, &s.cut, &opts)?;
        ctx.log(format!("subspace n = {n}: max energy {:e}", r.sup_sample));
        ok &= r.passed;
        reps.push(r);
    }
    Ok((ok, to_value(&reps)))
}

fn stage_sweep(ctx: &Context) -> CliResult<(bool, Value)> {
    let pr = &ctx.problem;
    let target = ScalarExponent::constant(pr.p.lower())?;
    let rep = imbedding_ratio(
        &pr.domain,
        &pr.trace,
        &target,
        &pr.p,
        &imbedding_options(ctx, &ctx.config.suite.sweep_levels),
    )?;
    let path = ctx.path("imbedding_sweep.csv");
    let file = ctx.create("imbedding_sweep.csv")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["nodes", "max_ratio"]).map_err(csv_err)?;
    for l in &rep.levels {
        w.write_record([l.nodes.to_string(), format!("{:e}", l.max_ratio)])
            .map_err(csv_err)?;
    }
    let inner = w.into_inner().map_err(|e| CliError::Io {
        path: path.clone(),
        source: e.into_error(),
    })?;
    flush(inner, &path)?;
    Ok((rep.stable, to_value(&rep)))
}

/// Runs every stage and writes `suite_summary.json`.
pub fn cmd_suite(ctx: &Context) -> CliResult<(SuiteSummary, Outcome)> {
    let mut rec = Recorder {
        ctx,
        stages: Vec::new(),
    };
    rec.record("log_holder", stage_log_holder(ctx));
    rec.record("norms", stage_norms(ctx));

    let setup = match setup(ctx) {
        Ok(s) => {
            rec.record("cutoff", stage_cutoff(&s));
            Some(s)
        }
        Err(e) => {
            rec.record("cutoff", Err(e));
            None
        }
    };
    rec.record("splus", stage_splus(ctx));

    let nl = setup.as_ref().and_then(|s| s.solver_nl.clone());
    let mut solutions: Vec<(String, GridFunction)> = Vec::new();
    match (&setup, &nl) {
        (Some(s), Some(nl)) => {
            let r = run_solve(ctx, s, nl).map(|(rep, out)| {
                let summary = json!({
                    "outcome": format!("{out:?}"),
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "energy": rep.energy,
                    "sup_norm": rep.sup_norm,
                    "max_residual": rep.max_residual,
                });
                solutions.push(("solve".into(), rep.solution));
                (out == Outcome::Ok, summary)
            });
            rec.record("solve", r);
            match stage_multistart(ctx, nl, s.cut.t2()) {
                Ok((r, nonzero)) => {
                    rec.record("multistart", Ok(r));
                    for (i, u) in nonzero.into_iter().enumerate() {
                        solutions.push((format!("multistart_{i}"), u));
                    }
                }
                Err(e) => {
                    rec.record("multistart", Err(e));
                }
            }
        }
        _ => {
            rec.skip("solve", "no usable nonlinearity; see the cutoff stage");
            rec.skip("multistart", "no usable nonlinearity; see the cutoff stage");
        }
    }
    if solutions.is_empty() {
        rec.skip("degiorgi", "no solutions");
    } else {
        rec.record("degiorgi", stage_degiorgi(ctx, &solutions));
    }

    match (&setup, &ctx.config.nonlinearity) {
        (Some(s), NonlinearitySpec::Prototype { lambda }) => {
            rec.record("linf_fit", stage_linf(ctx, s, *lambda));
        }
        (None, _) => rec.skip("linf_fit", "cutoff stage failed"),
        _ => rec.skip("linf_fit", "needs the prototype nonlinearity"),
    }
    match &setup {
        Some(s) => {
            rec.record("subspace", stage_subspace(ctx, s));
        }
        None => rec.skip("subspace", "cutoff stage failed"),
    }
    if !ctx.config.suite.sweep_levels.is_empty() {
        rec.record("imbedding_sweep", stage_sweep(ctx));
    }

    let failed: Vec<String> = rec
        .stages
        .iter()
        .filter(|s| s.status == Status::Failed)
        .map(|s| s.name.clone())
        .collect();
    let mut config = ctx.config.clone();
    config.run.out_dir = None;
    let summary = SuiteSummary {
        schema_version: SCHEMA_VERSION,
        seed: ctx.seed,
        config,
        passed: failed.is_empty(),
        failed,
        stages: rec.stages,
    };
    ctx.write_json("suite_summary.json", &summary)?;
    let outcome = if summary.passed { Outcome::Ok } else { Outcome::Violations };
    Ok((summary, outcome))
}
