//! Empirical lower bounds for the imbedding constant into `L^r`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{critical_exponent, PairExponent, ScalarExponent};
use crate::grid::{BoxDomain, Grid};
use crate::modular::{lebesgue_terms, luxemburg_root, ModularOptions};
use crate::random::{rng, RandomField};
use crate::report::Assertion;

use super::{PairOptions, Region, SobolevNorms};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbeddingOptions {
    pub trials: usize,
    pub seed: u64,
    /// Nodes per axis of the compared refinement levels, coarse to fine.
    pub levels: Vec<usize>,
    pub region: Region,
    pub max_mode: usize,
    /// Allowed relative change of the maximal ratio between consecutive levels.
    pub change_tol: f64,
    pub pair_options: Option<PairOptions>,
}

impl Default for ImbeddingOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            levels: vec![17, 33],
            region: Region::Interior,
            max_mode: 4,
            change_tol: 0.1,
            pair_options: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRatio {
    pub nodes: usize,
    pub max_ratio: f64,
    pub per_trial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbeddingReport {
    /// Maximal ratio on the finest level.
    pub max_ratio: f64,
    pub per_trial: Vec<f64>,
    pub levels: Vec<LevelRatio>,
    pub stable: bool,
    pub assertions: Vec<Assertion>,
}

/// For `trials` seeded pinned random fields computes
/// `||u||_L^r / (||u||_L^q + [u])` on every refinement level and checks that the
/// maximum moves by less than `change_tol` between consecutive levels.
///
/// Preconditions (checked on a 64-per-axis sample): `q(x) >= p(x,x)` and
/// `r(x) < N p(x,x) / (N - s p(x,x))` wherever `s p(x,x) < N`.
pub fn imbedding_ratio(
    domain: &BoxDomain,
    q: &ScalarExponent,
    r: &ScalarExponent,
    p: &PairExponent,
    opts: &ImbeddingOptions,
) -> Result<ImbeddingReport> {
    if opts.trials == 0 || opts.levels.is_empty() {
        return Err(Error::InvalidArgument("need at least one trial and one level".into()));
    }
    let dim = domain.dim();
    let n: usize = 64;
    for i in 0..n.pow(dim as u32) {
        let mut x = [0.0; 2];
        let mut rest = i;
        for k in 0..dim {
            x[k] = domain.lower()[k] + domain.width(k) * (rest % n) as f64 / (n - 1) as f64;
            rest /= n;
        }
        let x = &x[..dim];
        if q.eval(x) < p.trace_at(x) {
            return Err(Error::InvalidArgument(format!("q(x) < p(x,x) at {x:?}")));
        }
        if let Ok(crit) = critical_exponent(p, x) {
            if r.eval(x) >= crit {
                return Err(Error::InvalidArgument(format!(
                    "r(x) = {} is not below the critical exponent {crit} at {x:?}",
                    r.eval(x)
                )));
            }
        }
    }

    let mut gen = rng(opts.seed);
    let fields: Vec<RandomField> = (0..opts.trials)
        .map(|_| RandomField::sample(&mut gen, domain, opts.max_mode, true, (0.1, 10.0)))
        .collect();
    let mo = ModularOptions::default();
    let mut levels = Vec::new();
    for &nodes in &opts.levels {
        let grid = Arc::new(Grid::uniform(domain.clone(), nodes)?);
        let norms = SobolevNorms::new(grid.clone(), q, p, opts.region, opts.pair_options, mo);
        let mut per_trial = Vec::with_capacity(fields.len());
        for f in &fields {
            let u = f.on_grid(grid.clone())?;
            let denom = norms.norm_sum(&u)?;
            let t = lebesgue_terms(&u, r, &norms.cells);
            let num = luxemburg_root(&t, u.sup_norm(), &mo.luxemburg)?.lambda;
            per_trial.push(num / denom);
        }
        let max_ratio = per_trial.iter().cloned().fold(0.0, f64::max);
        levels.push(LevelRatio {
            nodes,
            max_ratio,
            per_trial,
        });
    }
    let mut assertions = Vec::new();
    for l in &levels {
        assertions.push(Assertion::flag(
            format!("finite_ratios_{}", l.nodes),
            l.per_trial.iter().all(|v| v.is_finite() && *v > 0.0),
            "",
        ));
    }
    for w in levels.windows(2) {
        let change = (w[1].max_ratio - w[0].max_ratio).abs() / w[0].max_ratio;
        assertions.push(
            Assertion::le(
                format!("refinement_{}_{}", w[0].nodes, w[1].nodes),
                change,
                opts.change_tol,
                0.0,
            )
            .with_detail("relative change of the maximal ratio"),
        );
    }
    let stable = assertions.iter().all(|a| a.passed);
    let finest = levels.last().expect("levels is non-empty");
    Ok(ImbeddingReport {
        max_ratio: finest.max_ratio,
        per_trial: finest.per_trial.clone(),
        levels,
        stable,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_exponents_are_refinement_stable() {
        let d = BoxDomain::unit(1).unwrap();
        let q = ScalarExponent::constant(2.0).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let opts = ImbeddingOptions {
            trials: 8,
            seed: 3,
            ..Default::default()
        };
        let rep = imbedding_ratio(&d, &q, &q, &p, &opts).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert!(rep.stable, "{:?}", rep.assertions);
    }

    #[test]
    fn rejects_supercritical_target() {
        let d = BoxDomain::unit(1).unwrap();
        let q = ScalarExponent::constant(2.0).unwrap();
        let p = PairExponent::constant(2.0, 0.25).unwrap();
        let r = ScalarExponent::constant(4.5).unwrap();
        assert!(imbedding_ratio(&d, &q, &r, &p, &ImbeddingOptions::default()).is_err());
        let q_small = ScalarExponent::constant(1.5).unwrap();
        assert!(imbedding_ratio(&d, &q_small, &q, &p, &ImbeddingOptions::default()).is_err());
    }
}
