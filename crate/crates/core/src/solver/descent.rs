//! Armijo gradient descent on the nodal values of a pinned function.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponents::{PairExponent, ScalarExponent};
use crate::grid::{Grid, GridFunction, GridFunctionJson};
use crate::nonlocal::PairOptions;
use crate::report::Assertion;

use super::{EnergyFunctional, Nonlinearity};

/// Invariant subspace the iterates are kept in. Reflections act on axis 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    #[default]
    None,
    /// `u(R x) = u(x)`.
    Even,
    /// `u(R x) = -u(x)`.
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when the Euclidean norm of the nodal gradient drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant.
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    /// Later trial steps from the Barzilai-Borwein quotient instead of `initial_step`.
    pub barzilai_borwein: bool,
    /// Keep `int |u|^{p(x)}/p(x)` in the energy.
    pub lebesgue_term: bool,
    pub symmetry: Symmetry,
    pub pair_options: Option<PairOptions>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 20_000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 80,
            barzilai_borwein: true,
            lebesgue_term: true,
            symmetry: Symmetry::None,
            pair_options: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub energy_history: Vec<f64>,
    pub residual_norm_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub energy: f64,
    /// Largest weak residual `|<E'(u), phi_i>|` over interior nodes.
    pub max_residual: f64,
    pub sup_norm: f64,
    pub assertions: Vec<Assertion>,
}

/// Serializable view of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub energy: f64,
    pub max_residual: f64,
    pub sup_norm: f64,
    pub energy_history: Vec<f64>,
    pub residual_norm_history: Vec<f64>,
    pub assertions: Vec<Assertion>,
    pub solution: GridFunctionJson,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            iterations: self.iterations,
            converged: self.converged,
            stop_reason: self.stop_reason,
            energy: self.energy,
            max_residual: self.max_residual,
            sup_norm: self.sup_norm,
            energy_history: self.energy_history.clone(),
            residual_norm_history: self.residual_norm_history.clone(),
            assertions: self.assertions.clone(),
            solution: self.solution.to_json(),
        }
    }

    /// `iteration,energy,residual_norm` rows.
    pub fn write_history_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iteration", "energy", "residual_norm"])?;
        for (k, (e, r)) in self.energy_history.iter().zip(&self.residual_norm_history).enumerate() {
            wtr.write_record([k.to_string(), format!("{e:e}"), format!("{r:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn history_nonincreasing(&self) -> bool {
        self.energy_history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Reflection `x_0 -> a + b - x_0` as a node permutation.
pub(crate) fn reflection(grid: &Grid) -> Vec<usize> {
    let n0 = grid.nodes_per_axis()[0];
    (0..grid.node_count())
        .map(|i| {
            let mut m = grid.node_multi(i);
            m[0] = n0 - 1 - m[0];
            grid.node_index(&m[..grid.dim()])
        })
        .collect()
}

pub(crate) fn project(v: &mut [f64], sym: Symmetry, refl: &[usize]) {
    let sign = match sym {
        Symmetry::None => return,
        Symmetry::Even => 1.0,
        Symmetry::Odd => -1.0,
    };
    let w: Vec<f64> = (0..v.len()).map(|i| 0.5 * (v[i] + sign * v[refl[i]])).collect();
    v.copy_from_slice(&w);
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Descent on `E(u) = Phi(u) - int F(x, u)` from `start`. The growth condition of
/// `nl` against `q` is sampled and recorded in the report assertions.
pub fn minimize_energy(
    start: &GridFunction,
    p: &PairExponent,
    q: &ScalarExponent,
    nl: &Nonlinearity,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let ef = EnergyFunctional::new(
        start.grid().clone(),
        p,
        nl.clone(),
        opts.lebesgue_term,
        opts.pair_options,
    );
    let mut rep = minimize_with(&ef, start, opts)?;
    let dom = start.grid().domain();
    let mut checked = nl.clone();
    checked.growth.1 = q.clone();
    let t_max = 2.0 * rep.sup_norm.max(1.0);
    rep.assertions.extend(checked.check(dom, 8, t_max));
    Ok(rep)
}

/// Descent with a prebuilt functional.
pub fn minimize_with(ef: &EnergyFunctional, start: &GridFunction, opts: &SolverOptions) -> Result<SolveReport> {
    if !start.is_pinned() {
        return Err(invalid("descent needs a pinned start"));
    }
    if !(opts.tol > 0.0 && opts.backtrack > 0.0 && opts.backtrack < 1.0 && opts.initial_step > 0.0) {
        return Err(invalid("solver options out of range"));
    }
    let grid = ef.grid().clone();
    if *start.grid().as_ref() != *grid {
        return Err(crate::Error::GridMismatch("start and energy grids differ".into()));
    }
    let refl = reflection(&grid);
    let mut x = start.values().to_vec();
    project(&mut x, opts.symmetry, &refl);

    let mut e = ef.energy_values(&x);
    let mut g = ef.gradient_values(&x);
    let mut gp = g.clone();
    project(&mut gp, opts.symmetry, &refl);
    let mut energy_history = vec![e];
    let mut residual_norm_history = vec![norm2(&g)];
    let mut step = opts.initial_step;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    if norm2(&g) < opts.tol {
        stop = StopReason::GradientTolerance;
    } else {
        let mut xn = vec![0.0; x.len()];
        while iterations < opts.max_iters {
            let slope = -dot(&gp, &gp);
            let mut alpha = step;
            let mut accepted = None;
            for _ in 0..opts.max_backtracks {
                for i in 0..x.len() {
                    xn[i] = x[i] - alpha * gp[i];
                }
                let en = ef.energy_values(&xn);
                if en <= e + opts.armijo_c * alpha * slope {
                    accepted = Some(en);
                    break;
                }
                alpha *= opts.backtrack;
            }
            let Some(en) = accepted else {
                stop = StopReason::LineSearchFailed;
                break;
            };
            iterations += 1;
            let gn = ef.gradient_values(&xn);
            let mut gpn = gn.clone();
            project(&mut gpn, opts.symmetry, &refl);
            if opts.barzilai_borwein {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gpn.iter().zip(&gp).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                step = if sy > 0.0 {
                    (dot(&s, &s) / sy).clamp(1e-12, 1e12)
                } else {
                    opts.initial_step
                };
            }
            std::mem::swap(&mut x, &mut xn);
            e = en;
            g = gn;
            gp = gpn;
            energy_history.push(e);
            residual_norm_history.push(norm2(&g));
            if norm2(&g) < opts.tol {
                stop = StopReason::GradientTolerance;
                break;
            }
        }
    }

    let max_residual = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let solution = GridFunction::from_values(grid, x, true)?;
    let sup_norm = solution.sup_norm();
    let rep = SolveReport {
        solution,
        iterations,
        converged: stop == StopReason::GradientTolerance,
        stop_reason: stop,
        energy: e,
        max_residual,
        sup_norm,
        assertions: Vec::new(),
        energy_history,
        residual_norm_history,
    };
    let mut rep = rep;
    rep.assertions.push(Assertion::flag(
        "energy_nonincreasing",
        rep.history_nonincreasing(),
        "",
    ));
    if rep.converged {
        rep.assertions.push(
            Assertion::le("weak_residual", max_residual, 10.0 * opts.tol, 0.0)
                .with_detail("max over interior nodes"),
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use crate::random::{rng, RandomField};
    use std::sync::Arc;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    #[test]
    fn zero_start_stays_zero() {
        let g = grid1(17);
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let q = ScalarExponent::constant(2.0).unwrap();
        let r = minimize_energy(
            &GridFunction::zeros(g, true),
            &p,
            &q,
            &Nonlinearity::zero(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert!(r.solution.is_zero());
    }

    #[test]
    fn zero_nonlinearity_descends_to_zero() {
        let d = BoxDomain::unit(1).unwrap();
        let g = grid1(17);
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let q = ScalarExponent::constant(2.0).unwrap();
        let u0 = RandomField::sample(&mut rng(1), &d, 3, true, (0.5, 2.0)).on_grid(g).unwrap();
        let r = minimize_energy(&u0, &p, &q, &Nonlinearity::zero(), &SolverOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.stop_reason);
        assert!(r.history_nonincreasing());
        assert!(r.solution.sup_norm() < 1e-4);
    }

    #[test]
    fn prototype_gives_negative_energy() {
        let g = grid1(33);
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let q = ScalarExponent::constant(3.0).unwrap();
        let r = ScalarExponent::constant(1.7).unwrap();
        let nl = Nonlinearity::prototype(8.0, &r, &q).unwrap();
        let u0 = GridFunction::interpolate(|x| 0.05 * (std::f64::consts::PI * x[0]).sin(), g, true).unwrap();
        let rep = minimize_energy(&u0, &p, &q, &nl, &SolverOptions::default()).unwrap();
        assert!(rep.converged, "{:?} {}", rep.stop_reason, rep.max_residual);
        assert!(rep.energy < 0.0);
        assert!(rep.sup_norm > 0.0);
        assert!(rep.history_nonincreasing());
        assert!(rep.assertions.iter().all(|a| a.passed), "{:?}", rep.assertions);
    }

    #[test]
    fn reflection_is_involution() {
        let g = Grid::new(BoxDomain::unit(2).unwrap(), &[5, 4]).unwrap();
        let r = reflection(&g);
        assert!((0..g.node_count()).all(|i| r[r[i]] == i));
        let mut v: Vec<f64> = (0..g.node_count()).map(|i| i as f64).collect();
        project(&mut v, Symmetry::Odd, &r);
        assert!((0..v.len()).all(|i| v[i] == -v[r[i]]));
    }
}
