//! Energy functionals, the modified nonlinearity, Armijo descent and the
//! multiplicity checks for small solutions.

pub mod descent;
pub mod energy;
pub mod multistart;
pub mod nonlinearity;
pub mod subspace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use descent::{minimize_energy, minimize_with, SolveReport, SolveSummary, SolverOptions, StopReason, Symmetry};
pub use energy::{energy_phi, grad_phi, EnergyFunctional};
pub use multistart::{multistart_small_solutions, MultistartReport, SolutionRecord};
pub use nonlinearity::{
    admissibility_margin, beta_limit, cutoff_default, modified_nonlinearity, Cutoff, CutoffProfile,
    NonlinearFn, Nonlinearity, NonlinearityTag,
};
pub use subspace::{slab_bumps, subspace_negativity, SubspaceOptions, SubspaceReport};

use crate::error::Result;
use crate::exponents::PairExponent;
use crate::grid::Grid;
use crate::random::{rng, RandomField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplusReport {
    /// `<Phi'(u) - Phi'(v), u - v>` per trial.
    pub pairings: Vec<f64>,
    pub min_pairing: f64,
    pub passed: bool,
}

/// Monotonicity pairing of `Phi'` for `trials` seeded random pinned pairs.
pub fn splus_probe(grid: Arc<Grid>, p: &PairExponent, trials: usize, seed: u64) -> Result<SplusReport> {
    let ef = EnergyFunctional::new(grid.clone(), p, Nonlinearity::zero(), true, None);
    let dom = grid.domain().clone();
    let mut r = rng(seed);
    let mut pairings = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = RandomField::sample(&mut r, &dom, 4, true, (0.1, 5.0)).on_grid(grid.clone())?;
        let v = RandomField::sample(&mut r, &dom, 4, true, (0.1, 5.0)).on_grid(grid.clone())?;
        let gu = ef.grad_phi(&u)?;
        let gv = ef.grad_phi(&v)?;
        let s: f64 = (0..gu.len())
            .map(|i| (gu[i] - gv[i]) * (u.values()[i] - v.values()[i]))
            .sum();
        pairings.push(s);
    }
    let min_pairing = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SplusReport {
        passed: pairings.iter().all(|&s| s >= -1e-10),
        min_pairing,
        pairings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxDomain, GridFunction};

    #[test]
    fn splus_pairing_nonnegative() {
        let g = Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), 17).unwrap());
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let r = splus_probe(g.clone(), &p, 20, 4).unwrap();
        assert!(r.passed, "{}", r.min_pairing);
        // v = 0 gives <Phi'(u), u> >= 0, u = v gives 0
        let u = GridFunction::interpolate(|x| x[0] * (1.0 - x[0]), g.clone(), true).unwrap();
        let gu = grad_phi(&u, &p).unwrap();
        let s: f64 = gu.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!(s >= 0.0);
    }
}
