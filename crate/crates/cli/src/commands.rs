//! `norm`, `solve` and `degiorgi`, plus the pieces the suite shares with them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use fracpx::degiorgi::{degiorgi_on_solution, kstar_select, DeGiorgiTrace, KStarConstants, KStarSelection};
use fracpx::exponents::ScalarExponent;
use fracpx::grid::GridFunction;
use fracpx::modular::{check_norm_modular_relations, lebesgue_modular, ModularOptions, ModularReport};
use fracpx::nonlocal::{imbedding_ratio, ImbeddingOptions, SeminormReport, SobolevNorms};
use fracpx::report::{all_passed, Assertion};
use fracpx::solver::{
    admissibility_margin, beta_limit, minimize_energy, modified_nonlinearity, slab_bumps, CutoffProfile,
    Nonlinearity, NonlinearityTag, SolveReport, SolveSummary, SolverOptions,
};

use crate::config::{BetaPolicy, Config, ConfigError, FunctionSpec, KStarPolicy, Problem};

/// Version stamped into every JSON artifact; bumped with the schemas in `schemas/`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Violations,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Violations => 2,
            Outcome::NotConverged => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] fracpx::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl CliError {
    /// Every error surfaces as a configuration or input problem.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Context {
    pub config: Config,
    pub problem: Problem,
    pub seed: u64,
    pub out: PathBuf,
    pub verbose: bool,
}

pub const DEFAULT_OUT_DIR: &str = "fracpx-out";

impl Context {
    /// `seed` and `out` override the `[run]` section.
    pub fn new(config: Config, seed: Option<u64>, out: Option<PathBuf>, verbose: bool) -> CliResult<Self> {
        let problem = config.problem()?;
        let seed = seed.unwrap_or(config.run.seed);
        let out = out
            .or_else(|| config.run.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        fs::create_dir_all(&out).map_err(|source| CliError::Io {
            path: out.clone(),
            source,
        })?;
        Ok(Self {
            config,
            problem,
            seed,
            out,
            verbose,
        })
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("fracpx: {}", msg.as_ref());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.path(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|source| CliError::Io { path, source })
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        })?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.log(format!("wrote {}", path.display()));
        Ok(path)
    }

    pub fn write_function(&self, name: &str, u: &GridFunction) -> CliResult<()> {
        let mut w = self.create(name)?;
        u.write_csv(&mut w)?;
        flush(w, &self.path(name))
    }

    pub fn options(&self) -> SolverOptions {
        self.config.solver.options()
    }
}

pub(crate) fn flush(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------- norm

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub schema_version: u32,
    pub function: FunctionSpec,
    pub nodes: Vec<usize>,
    pub p: String,
    pub q: String,
    pub lebesgue: ModularReport,
    pub sobolev: SeminormReport,
    pub passed: bool,
}

pub fn norm_report(ctx: &Context) -> CliResult<NormReport> {
    let pr = &ctx.problem;
    let u = ctx.config.function(pr, ctx.seed)?;
    let mo = ModularOptions::default();
    let lebesgue = check_norm_modular_relations(&u, &pr.q, &mo)?;
    let norms = SobolevNorms::new(pr.grid.clone(), &pr.q, &pr.p, ctx.config.norm.region, None, mo);
    let sobolev = norms.report(&u, ctx.config.norm.equivalence_tol)?;
    let passed = all_passed(&lebesgue.assertions) && all_passed(&sobolev.assertions);
    Ok(NormReport {
        schema_version: SCHEMA_VERSION,
        function: ctx.config.function.clone(),
        nodes: pr.grid.nodes_per_axis().to_vec(),
        p: pr.p.describe(),
        q: pr.q.describe(),
        lebesgue,
        sobolev,
        passed,
    })
}

/// Writes `norm_report.json`.
pub fn cmd_norm(ctx: &Context) -> CliResult<Outcome> {
    let rep = norm_report(ctx)?;
    ctx.write_json("norm_report.json", &rep)?;
    Ok(if rep.passed { Outcome::Ok } else { Outcome::Violations })
}

// ---------------------------------------------------------------- cutoff

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub enabled: bool,
    pub t2: f64,
    pub beta: f64,
    pub beta_auto: bool,
    /// Largest sampled `||u||_{L^{p-}} / ||u||_{s,p}`, a lower bound for the imbedding constant.
    pub c_imb: f64,
    pub c_imb_stable: bool,
    pub beta_limit: f64,
    pub beta_check: Assertion,
    pub admissibility_margin: Option<f64>,
    pub error: Option<String>,
}

/// Cutoff profile, its report, and the nonlinearity the solver should use
/// (`None` when the modified nonlinearity could not be built).
pub struct Setup {
    pub base: Nonlinearity,
    pub cut: CutoffProfile,
    pub report: CutoffReport,
    pub solver_nl: Option<Nonlinearity>,
}

pub fn imbedding_options(ctx: &Context, levels: &[usize]) -> ImbeddingOptions {
    let im = &ctx.config.imbedding;
    ImbeddingOptions {
        trials: im.trials,
        seed: ctx.seed,
        levels: levels.to_vec(),
        region: im.region,
        ..ImbeddingOptions::default()
    }
}

pub fn setup(ctx: &Context) -> CliResult<Setup> {
    let pr = &ctx.problem;
    let cfg = &ctx.config;
    let base = cfg.base_nonlinearity(pr)?;
    let (pm, pp) = (pr.p.lower(), pr.p.upper());
    let target = ScalarExponent::constant(pm)?;
    let im = imbedding_ratio(
        &pr.domain,
        &pr.trace,
        &target,
        &pr.p,
        &imbedding_options(ctx, &cfg.imbedding.levels),
    )?;
    let c_imb = im.max_ratio;
    let t2 = cfg.cutoff.t2;
    let (cut, beta_auto) = match cfg.cutoff.beta {
        BetaPolicy::Fixed(b) => (CutoffProfile::new(t2, b, pm)?, false),
        BetaPolicy::Auto(_) => (CutoffProfile::with_default_beta(t2, pm, pp, c_imb)?, true),
    };
    let beta_check = cut.check_beta(pp, c_imb);
    let (solver_nl, margin, error) = if cfg.cutoff.enabled {
        match modified_nonlinearity(&base, &cut, &pr.domain) {
            Ok(m) => {
                let margin = admissibility_margin(&m, &cut, &pr.domain);
                (Some(m), Some(margin), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        }
    } else {
        (Some(base.clone()), None, None)
    };
    Ok(Setup {
        report: CutoffReport {
            enabled: cfg.cutoff.enabled,
            t2,
            beta: cut.beta,
            beta_auto,
            c_imb,
            c_imb_stable: im.stable,
            beta_limit: beta_limit(pm, pp, c_imb),
            beta_check,
            admissibility_margin: margin,
            error,
        },
        base,
        cut,
        solver_nl,
    })
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, Serialize)]
pub struct SolveFile {
    pub schema_version: u32,
    pub nonlinearity: NonlinearityTag,
    pub cutoff: CutoffReport,
    pub options: SolverOptions,
    pub history_nonincreasing: bool,
    pub passed: bool,
    pub result: SolveSummary,
}

/// Single slab bump of height `start_amplitude * t2`.
pub fn bump_start(ctx: &Context) -> CliResult<GridFunction> {
    let b = slab_bumps(ctx.problem.grid.clone(), 1)?.remove(0);
    Ok(b.scale(ctx.config.solver.start_amplitude * ctx.config.cutoff.t2))
}

pub fn solve_outcome(rep: &SolveReport) -> Outcome {
    if !rep.converged {
        Outcome::NotConverged
    } else if !(all_passed(&rep.assertions) && rep.history_nonincreasing()) {
        Outcome::Violations
    } else {
        Outcome::Ok
    }
}

/// Descent from the bump start; writes `solution.csv`, `history.csv` and `solve_report.json`.
pub fn run_solve(ctx: &Context, setup: &Setup, nl: &Nonlinearity) -> CliResult<(SolveReport, Outcome)> {
    let pr = &ctx.problem;
    let start = bump_start(ctx)?;
    let opts = ctx.options();
    ctx.log("solving");
    let rep = minimize_energy(&start, &pr.p, &pr.q, nl, &opts)?;
    ctx.log(format!(
        "descent stopped after {} iterations: {:?}, energy {:e}",
        rep.iterations, rep.stop_reason, rep.energy
    ));
    ctx.write_function("solution.csv", &rep.solution)?;
    let mut w = ctx.create("history.csv")?;
    rep.write_history_csv(&mut w)?;
    flush(w, &ctx.path("history.csv"))?;
    let outcome = solve_outcome(&rep);
    ctx.write_json(
        "solve_report.json",
        &SolveFile {
            schema_version: SCHEMA_VERSION,
            nonlinearity: nl.tag.clone(),
            cutoff: setup.report.clone(),
            options: opts,
            history_nonincreasing: rep.history_nonincreasing(),
            passed: outcome == Outcome::Ok,
            result: rep.summary(),
        },
    )?;
    Ok((rep, outcome))
}

pub fn cmd_solve(ctx: &Context) -> CliResult<Outcome> {
    let s = setup(ctx)?;
    let nl = match &s.solver_nl {
        Some(nl) => nl.clone(),
        None => {
            return Err(ConfigError::Invalid(
                s.report.error.clone().unwrap_or_else(|| "modified nonlinearity unavailable".into()),
            )
            .into())
        }
    };
    Ok(run_solve(ctx, &s, &nl)?.1)
}

// ---------------------------------------------------------------- degiorgi

#[derive(Debug, Clone, Serialize)]
pub struct PartTrace {
    /// `"positive"` for `u`, `"negative"` for `-u`.
    pub part: String,
    pub k_star: f64,
    pub selection: Option<KStarSelection>,
    /// `sup|u| <= 2 k_*`.
    pub bound: Assertion,
    pub verdict: String,
    pub passed: bool,
    pub trace: DeGiorgiTrace,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeGiorgiFile {
    pub schema_version: u32,
    pub k_star_policy: KStarPolicy,
    pub n_max: usize,
    pub parts: Vec<PartTrace>,
    pub passed: bool,
}

fn choose_kstar(ctx: &Context, u: &GridFunction) -> CliResult<(f64, Option<KStarSelection>)> {
    let d = &ctx.config.degiorgi;
    let sup = u.sup_norm();
    Ok(match d.k_star {
        KStarPolicy::SupFraction { value } => (if sup > 0.0 { value * sup } else { 1.0 }, None),
        KStarPolicy::Fixed { value } => (value, None),
        KStarPolicy::Formula { c16, gamma1, gamma2, b } => {
            let m = lebesgue_modular(u, &ctx.problem.q, &ModularOptions::default());
            if m > 0.0 {
                let c = KStarConstants {
                    c16,
                    gamma1,
                    gamma2,
                    delta1: d.delta1,
                    delta2: d.delta2,
                    b,
                };
                let sel = kstar_select(&c, m)?;
                (sel.k_star, Some(sel))
            } else {
                (1.0, None)
            }
        }
    })
}

pub fn verdict(trace: &DeGiorgiTrace, n_max: usize) -> String {
    match trace.vanish_level {
        Some(n) => format!("vanishes at level {n}"),
        None => format!("does not vanish up to level {n_max}"),
    }
}

/// Traces on `u` and `-u`.
pub fn degiorgi_parts(ctx: &Context, u: &GridFunction) -> CliResult<Vec<PartTrace>> {
    let d = &ctx.config.degiorgi;
    let mut parts = Vec::with_capacity(2);
    for (part, v) in [("positive", u.clone()), ("negative", u.scale(-1.0))] {
        let (k_star, selection) = choose_kstar(ctx, &v)?;
        let trace = degiorgi_on_solution(&v, &ctx.problem.q, k_star, d.n_max, d.delta1, d.delta2)?;
        let bound = Assertion::le("sup_below_2kstar", v.sup_norm(), 2.0 * k_star, 0.0);
        let passed = trace.passed() && trace.vanish_level.is_some() && bound.passed;
        parts.push(PartTrace {
            part: part.into(),
            k_star,
            selection,
            bound,
            verdict: verdict(&trace, d.n_max),
            passed,
            trace,
        });
    }
    Ok(parts)
}

/// Writes `{stem}.csv` and `{stem}_neg.csv`.
pub fn write_part_csvs(ctx: &Context, stem: &str, parts: &[PartTrace]) -> CliResult<()> {
    for p in parts {
        let name = if p.part == "negative" {
            format!("{stem}_neg.csv")
        } else {
            format!("{stem}.csv")
        };
        let mut w = ctx.create(&name)?;
        p.trace.write_csv(&mut w)?;
        flush(w, &ctx.path(&name))?;
    }
    Ok(())
}

pub fn read_solution(ctx: &Context, path: &Path) -> CliResult<GridFunction> {
    let f = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(GridFunction::read_csv(f, ctx.problem.grid.clone(), true)?)
}

/// Writes `degiorgi_trace.csv`, `degiorgi_trace_neg.csv` and `degiorgi_report.json`.
pub fn cmd_degiorgi(ctx: &Context, solution: &Path) -> CliResult<Outcome> {
    let u = read_solution(ctx, solution)?;
    let parts = degiorgi_parts(ctx, &u)?;
    write_part_csvs(ctx, "degiorgi_trace", &parts)?;
    let passed = parts.iter().all(|p| p.passed);
    for p in &parts {
        ctx.log(format!("{} part: {}", p.part, p.verdict));
    }
    ctx.write_json(
        "degiorgi_report.json",
        &DeGiorgiFile {
            schema_version: SCHEMA_VERSION,
            k_star_policy: ctx.config.degiorgi.k_star.clone(),
            n_max: ctx.config.degiorgi.n_max,
            parts,
            passed,
        },
    )?;
    Ok(if passed { Outcome::Ok } else { Outcome::Violations })
}
