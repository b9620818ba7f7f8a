//! Experiment configuration: a sectioned TOML file. The grammar is documented in
//! `docs/config.md`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fracpx::exponents::{PairExponent, ScalarExponent};
use fracpx::grid::{BoxDomain, Grid, GridFunction};
use fracpx::nonlocal::Region;
use fracpx::random::{rng, RandomField};
use fracpx::solver::{Nonlinearity, SolverOptions};

pub const MAX_NODES_1D: usize = 4097;
pub const MAX_NODES_2D: usize = 129;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

impl From<fracpx::Error> for ConfigError {
    fn from(e: fracpx::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    pub domain: DomainSection,
    pub exponent: ExponentSection,
    #[serde(default)]
    pub function: FunctionSpec,
    #[serde(default)]
    pub norm: NormSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub cutoff: CutoffSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub degiorgi: DeGiorgiSection,
    #[serde(default)]
    pub subspace: SubspaceSection,
    #[serde(default)]
    pub imbedding: ImbeddingSection,
    #[serde(default)]
    pub suite: SuiteSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, out_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Nodes per axis; one value is used for every axis.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    pub p: PairSpec,
    #[serde(default)]
    pub q: Option<ScalarSpec>,
    #[serde(default)]
    pub r: Option<ScalarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSpec {
    Constant { value: f64, s: f64 },
    Example { p0: f64, radius: f64, s: f64 },
    AffineTrace { p0: f64, slope: f64, s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant { value: f64 },
    Affine { c0: f64, grad: Vec<f64> },
    /// `x -> p(x, x)`.
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    Linear {
        grad: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude * prod sin(pi t_k)`, pinned.
    Bump { amplitude: f64 },
    Random {
        #[serde(default = "default_modes")]
        max_mode: usize,
        #[serde(default = "default_amp")]
        amplitude: [f64; 2],
        #[serde(default)]
        pinned: bool,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        pinned: bool,
    },
}

fn default_modes() -> usize {
    4
}

fn default_amp() -> [f64; 2] {
    [0.5, 2.0]
}

impl Default for FunctionSpec {
    fn default() -> Self {
        FunctionSpec::Bump { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormSection {
    pub region: Region,
    /// Relative slack of the norm equivalence check.
    pub equivalence_tol: f64,
}

impl Default for NormSection {
    fn default() -> Self {
        Self {
            region: Region::Interior,
            equivalence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    /// `lambda |t|^(r-2) t - |t|^(q-2) t` with `r`, `q` from `[exponent]`.
    Prototype { lambda: f64 },
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaPolicy {
    Fixed(f64),
    /// `"auto"`: `0.9 min{1/p-, 1/(p+ 2^p- C^p-)}` with `C` from the imbedding estimate.
    Auto(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSection {
    pub enabled: bool,
    pub t2: f64,
    pub beta: BetaPolicy,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self {
            enabled: true,
            t2: 0.1,
            beta: BetaPolicy::Auto("auto".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iters: usize,
    pub lebesgue_term: bool,
    /// Amplitude of the single-bump start, relative to `t2`.
    pub start_amplitude: f64,
    pub starts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 20_000,
            lebesgue_term: true,
            start_amplitude: 0.5,
            starts: 8,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            lebesgue_term: self.lebesgue_term,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum KStarPolicy {
    /// `k_* = value * sup|u|`.
    SupFraction { value: f64 },
    Fixed { value: f64 },
    /// Closed-form choice from user constants and `int |u|^q`.
    Formula {
        c16: f64,
        gamma1: f64,
        gamma2: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeGiorgiSection {
    pub n_max: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub k_star: KStarPolicy,
    /// Multipliers of `lambda` for the family used in the L-infinity fit.
    pub lambda_scales: Vec<f64>,
}

impl Default for DeGiorgiSection {
    fn default() -> Self {
        Self {
            n_max: fracpx::degiorgi::DEFAULT_N_MAX,
            delta1: 1.0,
            delta2: 1.0,
            k_star: KStarPolicy::SupFraction { value: 0.55 },
            lambda_scales: vec![0.4, 0.6, 1.0, 1.4, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceSection {
    pub dims: Vec<usize>,
    pub sphere_samples: usize,
    pub coefficient_samples: usize,
}

impl Default for SubspaceSection {
    fn default() -> Self {
        Self {
            dims: vec![1, 2, 3],
            sphere_samples: 200,
            coefficient_samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImbeddingSection {
    pub trials: usize,
    /// Nodes per axis of the refinement levels.
    pub levels: Vec<usize>,
    pub region: Region,
}

impl Default for ImbeddingSection {
    fn default() -> Self {
        Self {
            trials: 8,
            levels: vec![17, 33],
            region: Region::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub splus_trials: usize,
    pub log_holder_epsilons: Vec<f64>,
    /// Extra refinement levels for an imbedding stability table; empty skips it.
    pub sweep_levels: Vec<usize>,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            splus_trials: 100,
            log_holder_epsilons: vec![0.1, 0.05, 0.02, 0.01],
            sweep_levels: Vec::new(),
        }
    }
}

/// Parses and validates a config file.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, &path.display().to_string())
}

pub fn parse(text: &str, name: &str) -> Result<Config, ConfigError> {
    let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: name.to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Everything a command needs, built once from a validated [`Config`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: BoxDomain,
    pub grid: Arc<Grid>,
    pub p: PairExponent,
    pub q: ScalarExponent,
    pub r: ScalarExponent,
    pub trace: ScalarExponent,
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.domain;
        let dim = d.lower.len();
        if !(1..=2).contains(&dim) || d.upper.len() != dim {
            return Err(ConfigError::Invalid("domain.lower/upper must both have length 1 or 2".into()));
        }
        if d.nodes.is_empty() || d.nodes.len() > dim {
            return Err(ConfigError::Invalid("domain.nodes needs 1 or dim entries".into()));
        }
        let cap = if dim == 1 { MAX_NODES_1D } else { MAX_NODES_2D };
        if d.nodes.iter().any(|&n| n > cap) {
            return Err(ConfigError::Invalid(format!("domain.nodes exceeds the cap {cap}")));
        }
        if let BetaPolicy::Auto(s) = &self.cutoff.beta {
            if s != "auto" {
                return Err(ConfigError::Invalid(format!("cutoff.beta must be a number or \"auto\", got {s:?}")));
            }
        }
        if !(self.cutoff.t2 > 0.0) {
            return Err(ConfigError::Invalid("cutoff.t2 must be positive".into()));
        }
        if !(self.solver.tol > 0.0) {
            return Err(ConfigError::Invalid("solver.tol must be positive".into()));
        }
        if self.imbedding.levels.is_empty() || self.imbedding.levels.iter().any(|&n| n > cap) {
            return Err(ConfigError::Invalid("imbedding.levels must be non-empty and within the cap".into()));
        }
        if self.suite.sweep_levels.iter().any(|&n| n > cap) {
            return Err(ConfigError::Invalid("suite.sweep_levels exceed the cap".into()));
        }
        self.problem()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let domain = BoxDomain::new(&self.domain.lower, &self.domain.upper)?;
        let dim = domain.dim();
        let nodes: Vec<usize> = if self.domain.nodes.len() == 1 {
            vec![self.domain.nodes[0]; dim]
        } else {
            self.domain.nodes.clone()
        };
        let grid = Arc::new(Grid::new(domain.clone(), &nodes)?);
        let p = match self.exponent.p {
            PairSpec::Constant { value, s } => PairExponent::constant(value, s)?,
            PairSpec::Example { p0, radius, s } => PairExponent::example(p0, radius, s, &domain)?,
            PairSpec::AffineTrace { p0, slope, s } => PairExponent::affine_trace(p0, slope, s, &domain)?,
        };
        p.validate_on(&domain, 16)?;
        let trace = ScalarExponent::trace(&p, &domain, 16)?;
        let scalar = |spec: &Option<ScalarSpec>, fallback: &ScalarExponent| -> Result<ScalarExponent, ConfigError> {
            Ok(match spec {
                None | Some(ScalarSpec::Trace) => fallback.clone(),
                Some(ScalarSpec::Constant { value }) => ScalarExponent::constant(*value)?,
                Some(ScalarSpec::Affine { c0, grad }) => ScalarExponent::affine(*c0, grad, &domain)?,
            })
        };
        let q = scalar(&self.exponent.q, &trace)?;
        let r = scalar(&self.exponent.r, &trace)?;
        Ok(Problem {
            domain,
            grid,
            p,
            q,
            r,
            trace,
        })
    }

    pub fn base_nonlinearity(&self, pr: &Problem) -> Result<Nonlinearity, ConfigError> {
        Ok(match self.nonlinearity {
            NonlinearitySpec::Zero => Nonlinearity::zero(),
            NonlinearitySpec::Prototype { lambda } => Nonlinearity::prototype(lambda, &pr.r, &pr.q)?,
        })
    }

    pub fn function(&self, pr: &Problem, seed: u64) -> Result<GridFunction, ConfigError> {
        let grid = pr.grid.clone();
        let dim = pr.domain.dim();
        let lower = pr.domain.lower().to_vec();
        let width: Vec<f64> = (0..dim).map(|k| pr.domain.width(k)).collect();
        Ok(match &self.function {
            FunctionSpec::Constant { value } => GridFunction::interpolate(|_| *value, grid, false)?,
            FunctionSpec::Linear { grad, offset } => {
                if grad.len() != dim {
                    return Err(ConfigError::Invalid("function.grad length must equal dimension".into()));
                }
                GridFunction::interpolate(
                    |x| offset + grad.iter().zip(x).map(|(g, v)| g * v).sum::<f64>(),
                    grid,
                    false,
                )?
            }
            FunctionSpec::Bump { amplitude } => GridFunction::interpolate(
                |x| {
                    let mut v = *amplitude;
                    for k in 0..dim {
                        v *= (std::f64::consts::PI * (x[k] - lower[k]) / width[k]).sin();
                    }
                    v
                },
                grid,
                true,
            )?,
            FunctionSpec::Random {
                max_mode,
                amplitude,
                pinned,
            } => RandomField::sample(&mut rng(seed), &pr.domain, *max_mode, *pinned, (amplitude[0], amplitude[1]))
                .on_grid(grid)?,
            FunctionSpec::Csv { path, pinned } => {
                let f = std::fs::File::open(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                GridFunction::read_csv(f, grid, *pinned)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
lower = [0.0]
upper = [1.0]
nodes = [17]

[exponent.p]
kind = "constant"
value = 2.0
s = 0.5
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = parse(MINIMAL, "mem").unwrap();
        assert_eq!(c.run.seed, 0);
        assert_eq!(c.nonlinearity, NonlinearitySpec::Zero);
        let pr = c.problem().unwrap();
        assert_eq!(pr.grid.node_count(), 17);
        assert_eq!(pr.q.lower(), 2.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = MINIMAL.replace("value = 2.0", "value = ");
        let e = parse(&bad, "mem").unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
        let unknown = format!("{MINIMAL}\n[solver]\ntoll = 1.0\n");
        assert!(parse(&unknown, "mem").is_err());
    }

    #[test]
    fn invalid_exponent_rejected() {
        let bad = MINIMAL.replace("value = 2.0", "value = 0.9");
        assert!(matches!(parse(&bad, "mem"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn beta_policy_parsing() {
        let c = parse(&format!("{MINIMAL}\n[cutoff]\nbeta = 0.05\n"), "mem").unwrap();
        assert_eq!(c.cutoff.beta, BetaPolicy::Fixed(0.05));
        assert!(parse(&format!("{MINIMAL}\n[cutoff]\nbeta = \"sometimes\"\n"), "mem").is_err());
    }
}
