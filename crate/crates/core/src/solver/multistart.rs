//! Descent from many small bump starts, with deduplication of the limits.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exponents::PairExponent;
use crate::grid::{Grid, GridFunction};
use crate::random::rng;

use super::{minimize_with, slab_bumps, EnergyFunctional, Nonlinearity, SolveReport, SolverOptions, Symmetry};

/// One distinct limit, up to sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    /// Index of the first run that reached it.
    pub run: usize,
    /// Runs merged into this record, sign flips included.
    pub runs: Vec<usize>,
    pub energy: f64,
    pub sup_norm: f64,
    pub max_residual: f64,
    /// `sup_norm <= t2`, where the modified and original nonlinearities agree.
    pub genuine: bool,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone)]
pub struct MultistartReport {
    pub runs: Vec<SolveReport>,
    pub symmetries: Vec<Symmetry>,
    pub solutions: Vec<SolutionRecord>,
}

impl MultistartReport {
    pub fn nonzero_solutions(&self) -> impl Iterator<Item = &SolutionRecord> {
        self.solutions.iter().filter(|s| s.sup_norm > 0.0)
    }

    pub fn solution(&self, rec: &SolutionRecord) -> &GridFunction {
        &self.runs[rec.run].solution
    }
}

/// Start `j` uses `j % 3 + 1` slab bumps with alternating signs, amplitude
/// `t2 * 0.8^(j/3)` times a seeded factor in `[0.8, 1.2]`. Iterates stay in the
/// reflection class of the start (even for odd bump counts, odd for two bumps),
/// which lets the descent settle on sign-changing critical points; convergence is
/// always judged on the full gradient.
pub fn multistart_small_solutions(
    grid: Arc<Grid>,
    starts: usize,
    p: &PairExponent,
    modified: &Nonlinearity,
    t2: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<MultistartReport> {
    let ef = EnergyFunctional::new(grid.clone(), p, modified.clone(), opts.lebesgue_term, opts.pair_options);
    let bases: Vec<Vec<GridFunction>> = (1..=3).map(|m| slab_bumps(grid.clone(), m)).collect::<Result<_>>()?;
    let mut r = rng(seed);
    let factors: Vec<f64> = (0..starts).map(|_| r.random_range(0.8..1.2)).collect();

    let jobs: Vec<(GridFunction, Symmetry)> = (0..starts)
        .map(|j| {
            let m = j % 3 + 1;
            let amp = t2 * 0.8f64.powi((j / 3) as i32) * factors[j];
            let mut v = vec![0.0; grid.node_count()];
            for (k, b) in bases[m - 1].iter().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                for (o, x) in v.iter_mut().zip(b.values()) {
                    *o += sign * amp * x;
                }
            }
            let sym = if m == 2 { Symmetry::Odd } else { Symmetry::Even };
            (GridFunction::from_values(grid.clone(), v, true).expect("pinned bumps"), sym)
        })
        .collect();

    let runs: Vec<SolveReport> = jobs
        .par_iter()
        .map(|(start, sym)| {
            let o = SolverOptions {
                symmetry: *sym,
                ..*opts
            };
            minimize_with(&ef, start, &o)
        })
        .collect::<Result<_>>()?;

    let mut solutions: Vec<SolutionRecord> = Vec::new();
    for (j, run) in runs.iter().enumerate() {
        if !run.converged {
            continue;
        }
        let u = &run.solution;
        let mut merged = false;
        for rec in solutions.iter_mut() {
            let w = &runs[rec.run].solution;
            let d = u.nodal_l2_distance(w)?.min(u.nodal_l2_distance(&w.scale(-1.0))?);
            if d <= 1e-4 {
                rec.runs.push(j);
                merged = true;
                break;
            }
        }
        if !merged {
            solutions.push(SolutionRecord {
                run: j,
                runs: vec![j],
                energy: run.energy,
                sup_norm: run.sup_norm,
                max_residual: run.max_residual,
                genuine: run.sup_norm <= t2,
                symmetry: jobs[j].1,
            });
        }
    }
    Ok(MultistartReport {
        symmetries: jobs.iter().map(|j| j.1).collect(),
        runs,
        solutions,
    })
}
