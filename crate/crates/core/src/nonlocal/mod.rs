//! Gagliardo modulars and seminorms, combined fractional Sobolev norms, the weak
//! form of the fractional p(x)-Laplacian and related diagnostics.

pub mod imbedding;
pub mod pairs;
pub mod strong;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use imbedding::{imbedding_ratio, ImbeddingOptions, ImbeddingReport};
pub use pairs::{PairEntry, PairOptions, PairQuadrature, PairStats, Region};
pub use strong::{strong_form_diagnostic, StrongFormReport};

use crate::error::{invalid, Result};
use crate::exponents::{PairExponent, ScalarExponent};
use crate::grid::{Grid, GridFunction};
use crate::modular::{
    lebesgue_terms, luxemburg_root, norm_modular_assertions, LuxemburgOptions, ModularOptions,
    ModularTerms,
};
use crate::quadrature::CellQuadrature;
use crate::report::Assertion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub gagliardo_modular: f64,
    pub seminorm: f64,
    pub lebesgue_modular: f64,
    pub lebesgue_norm: f64,
    /// `rho~ = int |u|^q + Gagliardo modular`.
    pub combined_modular: f64,
    /// `||u||_L^q + [u]`.
    pub norm_sum: f64,
    /// Luxemburg norm of `rho~`.
    pub norm_luxemburg: f64,
    pub iters: usize,
    pub residual: f64,
    pub region: Region,
    pub pair_stats: PairStats,
    /// Share of the Gagliardo modular coming from `Omega x (R^N \ Omega)`.
    pub exterior_fraction: f64,
    pub assertions: Vec<Assertion>,
}

/// Reusable quadratures for norms of functions on one grid.
#[derive(Debug, Clone)]
pub struct SobolevNorms {
    pub pairs: PairQuadrature,
    pub cells: CellQuadrature,
    pub p: PairExponent,
    pub q: ScalarExponent,
    pub modular: ModularOptions,
}

impl SobolevNorms {
    pub fn new(
        grid: Arc<Grid>,
        q: &ScalarExponent,
        p: &PairExponent,
        region: Region,
        pair_opts: Option<PairOptions>,
        modular: ModularOptions,
    ) -> Self {
        let po = pair_opts.unwrap_or_else(|| PairOptions::default_for(grid.dim()));
        let cells = CellQuadrature::new(&grid, modular.rule);
        let pairs = PairQuadrature::new(grid, p, region, po);
        Self {
            pairs,
            cells,
            p: p.clone(),
            q: q.clone(),
            modular,
        }
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if **u.grid() != **self.pairs.grid() {
            return Err(crate::Error::GridMismatch("function and quadrature grids differ".into()));
        }
        Ok(())
    }

    pub fn gagliardo_modular(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.pairs.modular(u.values()))
    }

    pub fn seminorm(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        let t = self.pairs.terms(u.values());
        Ok(luxemburg_root(&t, scale_guess(&t), &self.modular.luxemburg)?.lambda)
    }

    pub fn lebesgue_norm(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        let t = lebesgue_terms(u, &self.q, &self.cells);
        Ok(luxemburg_root(&t, u.sup_norm(), &self.modular.luxemburg)?.lambda)
    }

    /// `||u||_L^q + [u]`.
    pub fn norm_sum(&self, u: &GridFunction) -> Result<f64> {
        Ok(self.lebesgue_norm(u)? + self.seminorm(u)?)
    }

    pub fn report(&self, u: &GridFunction, equivalence_tol: f64) -> Result<SeminormReport> {
        self.check(u)?;
        let lux = &self.modular.luxemburg;
        let gt = self.pairs.terms(u.values());
        let lt = lebesgue_terms(u, &self.q, &self.cells);
        let semi = luxemburg_root(&gt, scale_guess(&gt), lux)?;
        let leb = luxemburg_root(&lt, u.sup_norm(), lux)?;
        let mut all = lt.clone();
        all.merge(&gt);
        let norm_sum = leb.lambda + semi.lambda;
        let combined = luxemburg_root(&all, norm_sum, lux)?;
        let (inner, outer) = self.pairs.modular_split(u.values());
        let gm = gt.total();
        let lo = self.q.lower().min(self.p.lower());
        let hi = self.q.upper().max(self.p.upper());
        let mut assertions = norm_modular_assertions(
            &all,
            combined.lambda,
            lo,
            hi,
            lux,
            self.modular.assert_tol,
        );
        assertions.push(Assertion::le(
            "equivalence_lower",
            0.5 * norm_sum,
            combined.lambda,
            equivalence_tol,
        ));
        assertions.push(Assertion::le(
            "equivalence_upper",
            combined.lambda,
            2.0 * norm_sum,
            equivalence_tol,
        ));
        Ok(SeminormReport {
            gagliardo_modular: gm,
            seminorm: semi.lambda,
            lebesgue_modular: lt.total(),
            lebesgue_norm: leb.lambda,
            combined_modular: all.total(),
            norm_sum,
            norm_luxemburg: combined.lambda,
            iters: combined.iters,
            residual: combined.residual,
            region: self.pairs.region(),
            pair_stats: self.pairs.stats(),
            exterior_fraction: if inner + outer > 0.0 { outer / (inner + outer) } else { 0.0 },
            assertions,
        })
    }
}

/// Starting scale for root finding: the modular's own homogeneity guess.
pub(crate) fn scale_guess(t: &ModularTerms) -> f64 {
    let total = t.total();
    if total <= 0.0 {
        return 1.0;
    }
    let (lo, hi) = t.exponent_range();
    total.powf(2.0 / (lo + hi))
}

/// Gagliardo modular over `Omega x Omega` or `R^N x R^N`.
pub fn gagliardo_modular(u: &GridFunction, p: &PairExponent, region: Region) -> f64 {
    PairQuadrature::with_defaults(u.grid().clone(), p, region).modular(u.values())
}

/// Gagliardo seminorm by Luxemburg root finding; 0 for constant `u` on `Omega x Omega`.
pub fn gagliardo_seminorm(u: &GridFunction, p: &PairExponent, region: Region) -> Result<f64> {
    let t = PairQuadrature::with_defaults(u.grid().clone(), p, region).terms(u.values());
    Ok(luxemburg_root(&t, scale_guess(&t), &LuxemburgOptions::default())?.lambda)
}

/// Fills a [`SeminormReport`] and records the norm equivalence and norm/modular relations.
pub fn combined_norms(
    u: &GridFunction,
    q: &ScalarExponent,
    p: &PairExponent,
    region: Region,
    opts: &ModularOptions,
) -> Result<SeminormReport> {
    SobolevNorms::new(u.grid().clone(), q, p, region, None, *opts).report(u, 1e-6)
}

/// `<A(u), v>` over `R^N x R^N` for pinned `u`, `v`.
pub fn weak_form(u: &GridFunction, v: &GridFunction, p: &PairExponent) -> Result<f64> {
    u.check_same_grid(v)?;
    if !(u.is_pinned() && v.is_pinned()) {
        return Err(invalid("weak form needs pinned functions"));
    }
    let q = PairQuadrature::with_defaults(u.grid().clone(), p, Region::Full);
    Ok(q.weak_form(u.values(), v.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use crate::report::all_passed;
    use approx::assert_relative_eq;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    #[test]
    fn constant_function_has_zero_seminorm() {
        let u = GridFunction::interpolate(|_| 3.0, grid1(17), false).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        assert_eq!(gagliardo_modular(&u, &p, Region::Interior), 0.0);
        assert_eq!(gagliardo_seminorm(&u, &p, Region::Interior).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_of_linear_function() {
        let u = GridFunction::interpolate(|x| x[0], grid1(33), false).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let m = gagliardo_modular(&u, &p, Region::Interior);
        assert_relative_eq!(m, 1.0, max_relative = 2e-2);
        let sn = gagliardo_seminorm(&u, &p, Region::Interior).unwrap();
        assert_relative_eq!(sn, m.sqrt(), max_relative = 1e-9);
        let sn2 = gagliardo_seminorm(&u.scale(2.0), &p, Region::Interior).unwrap();
        assert_relative_eq!(sn2, 2.0 * sn, max_relative = 1e-6);
    }

    #[test]
    fn zero_function_report() {
        let u = GridFunction::zeros(grid1(9), true);
        let q = ScalarExponent::constant(2.0).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let r = combined_norms(&u, &q, &p, Region::Interior, &ModularOptions::default()).unwrap();
        assert_eq!(r.gagliardo_modular, 0.0);
        assert_eq!(r.seminorm, 0.0);
        assert_eq!(r.combined_modular, 0.0);
        assert_eq!(r.norm_sum, 0.0);
        assert_eq!(r.norm_luxemburg, 0.0);
    }

    #[test]
    fn unit_combined_modular_gives_unit_norm() {
        let g = grid1(17);
        let q = ScalarExponent::constant(2.0).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let u = GridFunction::interpolate(|x| x[0] * (1.0 - x[0]), g, true).unwrap();
        let r = combined_norms(&u, &q, &p, Region::Interior, &ModularOptions::default()).unwrap();
        // constant exponent 2: rho~ is 2-homogeneous, so u / sqrt(rho~) has unit modular
        let v = u.scale(1.0 / r.combined_modular.sqrt());
        let r = combined_norms(&v, &q, &p, Region::Interior, &ModularOptions::default()).unwrap();
        assert_relative_eq!(r.combined_modular, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.norm_luxemburg, 1.0, max_relative = 1e-8);
        assert!(all_passed(&r.assertions), "{:?}", r.assertions);
    }

    #[test]
    fn weak_form_requires_pinned() {
        let g = grid1(9);
        let u = GridFunction::interpolate(|x| x[0], g, false).unwrap();
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        assert!(weak_form(&u, &u, &p).is_err());
    }
}
