//! Negativity of the modified energy on a small sphere of a finite-dimensional
//! subspace spanned by disjoint bumps.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{PairExponent, ScalarExponent};
use crate::grid::{Grid, GridFunction};
use crate::modular::ModularOptions;
use crate::nonlocal::{PairOptions, Region, SobolevNorms};
use crate::quadrature::Halton;
use crate::random::rng;
use crate::report::Assertion;

use super::nonlinearity::build_modified;
use super::{admissibility_margin, CutoffProfile, EnergyFunctional, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubspaceOptions {
    /// Random coefficient vectors used to estimate `C_{n,1}` and `C_{n,2}`.
    pub coefficient_samples: usize,
    pub sphere_samples: usize,
    pub seed: u64,
    /// Ratio between consecutive candidates when scanning for `t3`.
    pub scan_ratio: f64,
    pub scan_steps: usize,
    /// Each candidate `t3` is checked on `t3 * scan_ratio^j`, `j < scan_window`.
    pub scan_window: usize,
    pub x_samples: usize,
    pub pair_options: Option<PairOptions>,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            coefficient_samples: 64,
            sphere_samples: 200,
            seed: 0,
            scan_ratio: 0.9,
            scan_steps: 600,
            scan_window: 80,
            x_samples: 16,
            pair_options: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub n: usize,
    /// Estimated `C_{n,1}` in `C_{n,1} ||u||_inf <= ||u||_{s,p}`.
    pub c1: f64,
    /// Estimated `C_{n,2}` in `||u||_{s,p} <= C_{n,2} ||u||_{L^{p-}}`.
    pub c2: f64,
    pub t3: f64,
    pub t3_found: bool,
    pub r_n: f64,
    /// Largest modified energy over the sphere samples.
    pub sup_sample: f64,
    pub sphere_sup_norm: f64,
    pub samples: usize,
    /// `p- F~ - f~ t >= 0` on the sample grid.
    pub admissible: bool,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

/// `n` bumps `sin^2` on equal slabs along axis 0 (times `sin^2` across the other axis).
pub fn slab_bumps(grid: Arc<Grid>, n: usize) -> Result<Vec<GridFunction>> {
    if n == 0 {
        return Err(Error::Estimation("need at least one bump".into()));
    }
    let dom = grid.domain().clone();
    let dim = dom.dim();
    let width = dom.width(0) / n as f64;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let left = dom.lower()[0] + j as f64 * width;
        let b = GridFunction::interpolate(
            |x| {
                let t = (x[0] - left) / width;
                if !(0.0..=1.0).contains(&t) {
                    return 0.0;
                }
                let mut v = (std::f64::consts::PI * t).sin().powi(2);
                for k in 1..dim {
                    let r = (x[k] - dom.lower()[k]) / dom.width(k);
                    v *= (std::f64::consts::PI * r).sin().powi(2);
                }
                v
            },
            grid.clone(),
            true,
        )?;
        if b.sup_norm() < 1e-12 {
            return Err(Error::Estimation(format!("bump {j} has no interior node; refine the grid")));
        }
        out.push(b);
    }
    Ok(out)
}

fn combine(basis: &[GridFunction], c: &[f64]) -> Result<GridFunction> {
    let grid = basis[0].grid().clone();
    let mut v = vec![0.0; grid.node_count()];
    for (b, &cj) in basis.iter().zip(c) {
        for (o, x) in v.iter_mut().zip(b.values()) {
            *o += cj * x;
        }
    }
    GridFunction::from_values(grid, v, true)
}

fn random_unit<R: Rng>(r: &mut R, n: usize) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let s = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if s > 1e-3 {
            return c.into_iter().map(|a| a / s).collect();
        }
    }
}

/// Builds `X_n`, estimates `C_{n,1}`, `C_{n,2}`, scans for `t3` with
/// `F(x,t) >= 2^{p-+1} C_{n,2}^{p-} / p- |t|^{p-}` below it, sets
/// `r_n = min(1/2, t3 C_{n,1})` and evaluates the modified energy on sphere samples
/// `||u||_{s,p} = r_n`, with `||u||_{s,p} = ||u||_{L^{p(x,x)}} + [u]` over `R^N x R^N`.
pub fn subspace_negativity(
    grid: Arc<Grid>,
    n: usize,
    p: &PairExponent,
    base: &Nonlinearity,
    cut: &CutoffProfile,
    opts: &SubspaceOptions,
) -> Result<SubspaceReport> {
    let dom = grid.domain().clone();
    let dim = dom.dim();
    let pm = cut.p_minus;
    let basis = slab_bumps(grid.clone(), n)?;
    let trace = ScalarExponent::trace(p, &dom, 16)?;
    let norms = SobolevNorms::new(
        grid.clone(),
        &trace,
        p,
        Region::Full,
        opts.pair_options,
        ModularOptions::default(),
    );
    let lp_minus = |u: &GridFunction| -> f64 {
        norms
            .cells
            .integrate(u.values(), |_, v| v.abs().powf(pm))
            .powf(1.0 / pm)
    };

    let mut r = rng(opts.seed);
    let mut coeffs: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..opts.coefficient_samples {
        coeffs.push(random_unit(&mut r, n));
    }
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for c in &coeffs {
        let u = combine(&basis, c)?;
        let nsp = norms.norm_sum(&u)?;
        let sup = u.sup_norm();
        let lpm = lp_minus(&u);
        if !(sup > 0.0 && lpm > 0.0 && nsp > 0.0) {
            return Err(Error::Estimation("degenerate subspace element".into()));
        }
        c1 = c1.min(nsp / sup);
        c2 = c2.max(nsp / lpm);
    }

    // t3 scan on a geometric ladder
    let k_const = 2f64.powf(pm + 1.0) * c2.powf(pm) / pm;
    let ratio = opts.scan_ratio;
    let total = opts.scan_steps + opts.scan_window;
    let mut xs = Vec::with_capacity(opts.x_samples);
    let mut h = Halton::new(dim);
    for _ in 0..opts.x_samples {
        let mut u = [0.0; 2];
        h.next_point(&mut u[..dim]);
        let mut x = [0.0; 2];
        for k in 0..dim {
            x[k] = dom.lower()[k] + dom.width(k) * u[k];
        }
        xs.push(x);
    }
    let ok: Vec<bool> = (0..total)
        .map(|k| {
            let t = cut.t2() * ratio.powi(k as i32);
            xs.iter().all(|x| {
                [t, -t]
                    .iter()
                    .all(|&tt| base.primitive(&x[..dim], tt) >= k_const * tt.abs().powf(pm))
            })
        })
        .collect();
    let found = (0..opts.scan_steps).find(|&k| ok[k..k + opts.scan_window].iter().all(|&b| b));
    let t3_found = found.is_some();
    let t3 = cut.t2() * ratio.powi(found.unwrap_or(opts.scan_steps) as i32);
    let r_n = (0.5f64).min(t3 * c1);

    let modified = build_modified(base, cut, &dom)?;
    let admissible = admissibility_margin(&modified, cut, &dom) >= 0.0;
    let ef = EnergyFunctional::new(grid.clone(), p, modified, true, opts.pair_options);
    let mut sup_sample = f64::NEG_INFINITY;
    let mut sphere_sup: f64 = 0.0;
    for _ in 0..opts.sphere_samples {
        let c = random_unit(&mut r, n);
        let u = combine(&basis, &c)?;
        let u = u.scale(r_n / norms.norm_sum(&u)?);
        sphere_sup = sphere_sup.max(u.sup_norm());
        sup_sample = sup_sample.max(ef.energy(&u)?);
    }

    let assertions = vec![
        Assertion::flag("t3_scan", t3_found, "F(x,t) >= 2^{p-+1} C2^{p-}/p- |t|^{p-} below t3"),
        Assertion::le("sphere_below_t2", sphere_sup, cut.t2(), 0.0),
        Assertion {
            name: "sphere_energy_negative".into(),
            passed: sup_sample < 0.0,
            lhs: sup_sample,
            rhs: 0.0,
            detail: format!("max over {} samples", opts.sphere_samples),
        },
    ];
    Ok(SubspaceReport {
        n,
        c1,
        c2,
        t3,
        t3_found,
        r_n,
        sup_sample,
        sphere_sup_norm: sphere_sup,
        samples: opts.sphere_samples,
        admissible,
        passed: t3_found && sup_sample < 0.0,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;

    fn setup() -> (Arc<Grid>, PairExponent, Nonlinearity, CutoffProfile) {
        let g = Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), 33).unwrap());
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let r = ScalarExponent::constant(1.6).unwrap();
        let q = ScalarExponent::constant(3.0).unwrap();
        let nl = Nonlinearity::prototype(5.0, &r, &q).unwrap();
        let cut = CutoffProfile::new(0.1, 0.1, 2.0).unwrap();
        (g, p, nl, cut)
    }

    #[test]
    fn bumps_are_disjoint() {
        let g = Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), 33).unwrap());
        let b = slab_bumps(g.clone(), 3).unwrap();
        for i in 0..g.node_count() {
            let nz = b.iter().filter(|f| f.values()[i] != 0.0).count();
            assert!(nz <= 1);
        }
        let coarse = Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), 4).unwrap());
        assert!(slab_bumps(coarse, 3).is_err());
    }

    #[test]
    fn one_and_two_bumps_negative() {
        let (g, p, nl, cut) = setup();
        for n in [1, 2] {
            let opts = SubspaceOptions {
                sphere_samples: 40,
                coefficient_samples: 16,
                ..Default::default()
            };
            let r = subspace_negativity(g.clone(), n, &p, &nl, &cut, &opts).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.sup_sample < 0.0);
            assert!(r.r_n <= 0.5 && r.t3 <= 0.1);
        }
    }

    #[test]
    fn zero_nonlinearity_fails() {
        let (g, p, _, cut) = setup();
        let opts = SubspaceOptions {
            sphere_samples: 20,
            coefficient_samples: 8,
            ..Default::default()
        };
        let r = subspace_negativity(g, 1, &p, &Nonlinearity::zero(), &cut, &opts).unwrap();
        assert!(!r.passed);
        assert!(!r.t3_found);
        assert!(r.sup_sample > 0.0);
    }
}
