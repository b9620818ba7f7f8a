//! Seeded random test functions defined by short trigonometric series, so the
//! same field can be sampled on several grids.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{BoxDomain, Grid, GridFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `sum c_k prod_j phi_{k_j}(t_j)` with `t` the unit-box coordinate and
/// `phi_k = sin(k pi t)` (pinned) or `cos((k-1) pi t)` (free).
#[derive(Debug, Clone, PartialEq)]
pub struct RandomField {
    domain: BoxDomain,
    pinned: bool,
    modes: Vec<([usize; 2], f64)>,
}

impl RandomField {
    /// Modes up to `max_mode` per axis with coefficients `U(-1,1) / |k|`, times a
    /// log-uniform amplitude in `[amp_lo, amp_hi]`.
    pub fn sample<R: Rng>(
        rng: &mut R,
        domain: &BoxDomain,
        max_mode: usize,
        pinned: bool,
        amp: (f64, f64),
    ) -> Self {
        let m = max_mode.max(1);
        let scale = (amp.0.ln() + rng.random::<f64>() * (amp.1.ln() - amp.0.ln())).exp();
        let mut modes = Vec::new();
        let second = if domain.dim() == 2 { m } else { 1 };
        for k1 in 1..=second {
            for k0 in 1..=m {
                let c = rng.random_range(-1.0..1.0) / ((k0 * k0 + k1 * k1) as f64).sqrt();
                modes.push(([k0, k1], scale * c));
            }
        }
        // keep the lowest mode away from zero so the field never vanishes on a grid
        let lead = &mut modes[0].1;
        if lead.abs() < 0.2 * scale {
            *lead = if *lead < 0.0 { -0.2 * scale } else { 0.2 * scale };
        }
        Self {
            domain: domain.clone(),
            pinned,
            modes,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.domain.dim();
        let mut acc = 0.0;
        for (k, c) in &self.modes {
            let mut v = *c;
            for j in 0..dim {
                let t = (x[j] - self.domain.lower()[j]) / self.domain.width(j);
                let arg = std::f64::consts::PI * t;
                v *= if self.pinned {
                    (k[j] as f64 * arg).sin()
                } else {
                    ((k[j] - 1) as f64 * arg).cos()
                };
            }
            acc += v;
        }
        acc
    }

    pub fn on_grid(&self, grid: Arc<Grid>) -> Result<GridFunction> {
        GridFunction::interpolate(|x| self.eval(x), grid, self.pinned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_fields_vanish_on_boundary_and_are_reproducible() {
        let d = BoxDomain::unit(2).unwrap();
        let a = RandomField::sample(&mut rng(7), &d, 3, true, (0.5, 2.0));
        let b = RandomField::sample(&mut rng(7), &d, 3, true, (0.5, 2.0));
        assert_eq!(a, b);
        assert!(a.eval(&[0.0, 0.3]).abs() < 1e-15);
        let g = Arc::new(Grid::uniform(d, 9).unwrap());
        let u = a.on_grid(g).unwrap();
        assert!(u.is_pinned() && !u.is_zero());
    }
}
