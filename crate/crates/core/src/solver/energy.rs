//! `Phi(u) = int int |u(x)-u(y)|^p / (p |x-y|^{N+sp}) + int |u|^{p(x)} / p(x)` over
//! `R^N x R^N` for pinned `u`, the energy `E = Phi - int F(x, u)` and their nodal gradients.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::exponents::PairExponent;
use crate::grid::{Grid, GridFunction};
use crate::nonlocal::{PairOptions, PairQuadrature, Region};
use crate::quadrature::{CellQuadrature, CellRule};

use super::Nonlinearity;

/// Quadratures for the energy of one problem on one grid.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    pairs: PairQuadrature,
    cells: CellQuadrature,
    /// `p(x, x)` at every cell quadrature point.
    trace: Vec<f64>,
    /// Keep `int |u|^{p(x)} / p(x)` in `Phi` (dropped for the pure Dirichlet problem).
    lebesgue_term: bool,
    nl: Nonlinearity,
}

impl EnergyFunctional {
    pub fn new(
        grid: Arc<Grid>,
        p: &PairExponent,
        nl: Nonlinearity,
        lebesgue_term: bool,
        pair_opts: Option<PairOptions>,
    ) -> Self {
        let po = pair_opts.unwrap_or_else(|| PairOptions::default_for(grid.dim()));
        let cells = CellQuadrature::new(&grid, CellRule::default());
        let dim = grid.dim();
        let trace = cells.points().iter().map(|q| p.trace_at(&q.x[..dim])).collect();
        let pairs = PairQuadrature::new(grid, p, Region::Full, po);
        Self {
            pairs,
            cells,
            trace,
            lebesgue_term,
            nl,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.pairs.grid()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn pairs(&self) -> &PairQuadrature {
        &self.pairs
    }

    pub fn cells(&self) -> &CellQuadrature {
        &self.cells
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if !u.is_pinned() {
            return Err(invalid("energy needs a pinned function"));
        }
        if **u.grid() != **self.grid() {
            return Err(crate::Error::GridMismatch("function and energy grids differ".into()));
        }
        Ok(())
    }

    pub fn phi(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.phi_values(u.values()))
    }

    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.energy_values(u.values()))
    }

    pub fn grad_phi(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self.grad_phi_values(u.values()))
    }

    /// Nodal gradient of `E`; entry `i` is the weak residual against `phi_i`.
    pub fn gradient(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self.gradient_values(u.values()))
    }

    pub(crate) fn phi_values(&self, v: &[f64]) -> f64 {
        let mut total = self.pairs.energy(v);
        if self.lebesgue_term {
            total += self.cell_sum(v, |i, _, t| {
                if t == 0.0 {
                    0.0
                } else {
                    let e = self.trace[i];
                    t.abs().powf(e) / e
                }
            });
        }
        total
    }

    pub(crate) fn energy_values(&self, v: &[f64]) -> f64 {
        self.phi_values(v) - self.cell_sum(v, |_, x, t| self.nl.primitive(x, t))
    }

    pub(crate) fn grad_phi_values(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.pairs.weak_form_gradient(v);
        if self.lebesgue_term {
            self.cell_scatter(v, &mut g, |i, _, t| crate::nonlocal::pairs::signed_pow(t, self.trace[i]));
        }
        self.zero_boundary(&mut g);
        g
    }

    pub(crate) fn gradient_values(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.pairs.weak_form_gradient(v);
        self.cell_scatter(v, &mut g, |i, x, t| {
            let lebesgue = if self.lebesgue_term {
                crate::nonlocal::pairs::signed_pow(t, self.trace[i])
            } else {
                0.0
            };
            lebesgue - self.nl.f(x, t)
        });
        self.zero_boundary(&mut g);
        g
    }

    fn zero_boundary(&self, g: &mut [f64]) {
        let grid = self.grid();
        for (i, gi) in g.iter_mut().enumerate() {
            if grid.is_boundary_node(i) {
                *gi = 0.0;
            }
        }
    }

    /// `sum_q w_q h(q, x_q, u(x_q))` in fixed order.
    fn cell_sum(&self, v: &[f64], h: impl Fn(usize, &[f64], f64) -> f64 + Sync) -> f64 {
        let dim = self.grid().dim();
        let pts = self.cells.points();
        let partial: Vec<f64> = (0..pts.len())
            .into_par_iter()
            .chunks(4096)
            .map(|c| {
                c.into_iter()
                    .map(|i| {
                        let q = &pts[i];
                        q.weight * h(i, &q.x[..dim], q.stencil.apply(v))
                    })
                    .sum::<f64>()
            })
            .collect();
        partial.iter().sum()
    }

    /// `g_j += sum_q w_q h(q, x_q, u(x_q)) phi_j(x_q)`.
    fn cell_scatter(&self, v: &[f64], g: &mut [f64], h: impl Fn(usize, &[f64], f64) -> f64) {
        let dim = self.grid().dim();
        for (i, q) in self.cells.points().iter().enumerate() {
            let c = q.weight * h(i, &q.x[..dim], q.stencil.apply(v));
            if c != 0.0 {
                for (node, w) in q.stencil.iter() {
                    g[node] += c * w;
                }
            }
        }
    }
}

/// `Phi(u)` with the Lebesgue term, default quadrature.
pub fn energy_phi(u: &GridFunction, p: &PairExponent) -> Result<f64> {
    EnergyFunctional::new(u.grid().clone(), p, Nonlinearity::zero(), true, None).phi(u)
}

/// Nodal `<Phi'(u), phi_i>`, zero on boundary nodes.
pub fn grad_phi(u: &GridFunction, p: &PairExponent) -> Result<Vec<f64>> {
    EnergyFunctional::new(u.grid().clone(), p, Nonlinearity::zero(), true, None).grad_phi(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ScalarExponent;
    use crate::grid::BoxDomain;
    use crate::modular::{lebesgue_modular, ModularOptions};
    use crate::nonlocal::gagliardo_modular;
    use crate::random::{rng, RandomField};
    use approx::assert_relative_eq;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    fn bump(g: Arc<Grid>) -> GridFunction {
        GridFunction::interpolate(|x| (x[0] * (1.0 - x[0])).sqrt(), g, true).unwrap()
    }

    #[test]
    fn zero_function() {
        let g = grid1(17);
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let u = GridFunction::zeros(g, true);
        assert_eq!(energy_phi(&u, &p).unwrap(), 0.0);
        assert!(grad_phi(&u, &p).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_exponent_is_modular_over_p() {
        let g = grid1(17);
        let p = PairExponent::constant(1.7, 0.4).unwrap();
        let u = bump(g);
        let q = ScalarExponent::constant(1.7).unwrap();
        let expect = (gagliardo_modular(&u, &p, Region::Full)
            + lebesgue_modular(&u, &q, &ModularOptions::default()))
            / 1.7;
        assert_relative_eq!(energy_phi(&u, &p).unwrap(), expect, max_relative = 1e-10);
    }

    #[test]
    fn scaling_monotone_and_odd_gradient() {
        let g = grid1(17);
        let d = BoxDomain::unit(1).unwrap();
        let p = PairExponent::example(1.6, 2.0, 0.3, &d).unwrap();
        let mut r = rng(5);
        for _ in 0..5 {
            let u = RandomField::sample(&mut r, &d, 4, true, (0.1, 3.0)).on_grid(g.clone()).unwrap();
            assert!(energy_phi(&u.scale(2.0), &p).unwrap() >= energy_phi(&u, &p).unwrap());
            let a = grad_phi(&u, &p).unwrap();
            let b = grad_phi(&u.scale(-1.0), &p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x + y).abs() <= 1e-10 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn rejects_unpinned() {
        let g = grid1(9);
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let u = GridFunction::interpolate(|x| x[0], g, false).unwrap();
        assert!(energy_phi(&u, &p).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = BoxDomain::unit(1).unwrap();
        let g = grid1(17);
        for p in [
            PairExponent::constant(2.0, 0.5).unwrap(),
            PairExponent::example(1.5, 2.0, 0.4, &d).unwrap(),
        ] {
            let ef = EnergyFunctional::new(g.clone(), &p, Nonlinearity::zero(), true, None);
            let u = bump(g.clone());
            let grad = ef.grad_phi(&u).unwrap();
            for i in [3usize, 8, 12] {
                let h = 1e-5;
                let mut v = u.values().to_vec();
                v[i] += h;
                let plus = ef.phi_values(&v);
                v[i] -= 2.0 * h;
                let minus = ef.phi_values(&v);
                let fd = (plus - minus) / (2.0 * h);
                assert_relative_eq!(fd, grad[i], max_relative = 1e-4);
            }
        }
    }
}
