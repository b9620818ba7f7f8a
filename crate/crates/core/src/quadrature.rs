//! One-dimensional Gauss-Legendre rules, per-cell tensor rules and Halton points.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Point, Stencil, MAX_DIM};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let legendre = |z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
    };
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&t, &wt)| (a + (b - a) * t, (b - a) * wt))
        .collect()
}

/// Per-cell quadrature family for single integrals over the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "snake_case")]
pub enum CellRule {
    /// `m` equally spaced sub-cell midpoints per axis.
    Midpoint(usize),
    /// `m`-point Gauss-Legendre per axis.
    Gauss(usize),
}

impl Default for CellRule {
    fn default() -> Self {
        CellRule::Gauss(2)
    }
}

impl CellRule {
    pub fn points_1d(&self) -> Vec<(f64, f64)> {
        match *self {
            CellRule::Midpoint(m) => {
                let m = m.max(1);
                (0..m)
                    .map(|k| ((k as f64 + 0.5) / m as f64, 1.0 / m as f64))
                    .collect()
            }
            CellRule::Gauss(m) => gauss_legendre_on(m.max(1), 0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub cell: u32,
    pub x: Point,
    pub stencil: Stencil,
    pub weight: f64,
}

/// Tensor cell rule expanded over every cell of a grid, in cell order.
#[derive(Debug, Clone)]
pub struct CellQuadrature {
    rule: CellRule,
    points: Vec<QuadPoint>,
}

impl CellQuadrature {
    pub fn new(grid: &Grid, rule: CellRule) -> Self {
        let pts = rule.points_1d();
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let mut points = Vec::with_capacity(grid.cell_count() * pts.len().pow(dim as u32));
        for cell in 0..grid.cell_count() {
            let multi = grid.cell_multi(cell);
            let mut local_iter = |local: [f64; MAX_DIM], w: f64| {
                points.push(QuadPoint {
                    cell: cell as u32,
                    x: grid.cell_point(&multi, &local),
                    stencil: grid.cell_stencil(&multi, &local),
                    weight: w * vol,
                });
            };
            if dim == 1 {
                for &(t, w) in &pts {
                    local_iter([t, 0.0], w);
                }
            } else {
                for &(t1, w1) in &pts {
                    for &(t0, w0) in &pts {
                        local_iter([t0, t1], w0 * w1);
                    }
                }
            }
        }
        Self { rule, points }
    }

    pub fn rule(&self) -> CellRule {
        self.rule
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    /// Sum of `w * g(x, u(x))`.
    pub fn integrate(&self, values: &[f64], g: impl Fn(&[f64], f64) -> f64) -> f64 {
        self.points
            .iter()
            .map(|q| q.weight * g(&q.x, q.stencil.apply(values)))
            .sum()
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0,1)^dim`, skipping index 0.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension limited to {}", PRIMES.len());
        Self { dim, index: 1 }
    }

    pub fn next_point(&mut self, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = radical_inverse(self.index, PRIMES[k]);
        }
        self.index += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(deg as i32)).sum();
                assert_relative_eq!(q, 1.0 / (deg as f64 + 1.0), max_relative = 1e-12);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn cell_quadrature_measure() {
        let g = Grid::new(BoxDomain::new(&[0.0, 0.0], &[2.0, 0.5]).unwrap(), &[5, 4]).unwrap();
        for rule in [CellRule::Midpoint(2), CellRule::Gauss(3)] {
            let q = CellQuadrature::new(&g, rule);
            let vals = vec![0.0; g.node_count()];
            assert_relative_eq!(q.integrate(&vals, |_, _| 1.0), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn halton_first_points() {
        let mut h = Halton::new(2);
        let mut p = [0.0; 2];
        h.next_point(&mut p);
        assert_eq!(p, [0.5, 1.0 / 3.0]);
        h.next_point(&mut p);
        assert_eq!(p, [0.25, 2.0 / 3.0]);
    }
}
