//! Quadrature for double integrals `int int g(x, y) |x - y|^(-N - s p(x,y)) dx dy`.
//!
//! Cell pairs are enumerated once per unordered pair with factor 2. Pairs of
//! touching cells are integrated in relative coordinates `y = x + h w`: the
//! `w`-range is split into unit boxes, boxes touching `w = 0` get a graded
//! Duffy rule (radial variable `t = tau^g`), the rest a tensor Gauss rule.
//! Separated pairs use tensor Gauss rules on both cells. For the full region
//! the exterior part `2 int_Omega int_{R^N \ Omega}` is integrated along rays
//! from each `x` to infinity with `r = rho w^(-1/sigma)`, `sigma = s p(x,x)`,
//! which is exact for a constant exponent.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exponents::PairExponent;
use crate::grid::{Grid, Point};
use crate::modular::ModularTerms;
use crate::quadrature::gauss_legendre_on;

/// Integration region of the double integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `Omega x Omega`.
    Interior,
    /// `R^N x R^N` with zero extension.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    /// Gauss points per axis and cell for separated pairs.
    pub far_order: usize,
    /// Separated pairs with `|delta|_inf` above this use one point per cell.
    pub far_band: usize,
    /// Gauss points per axis for the inner box and regular relative boxes.
    pub near_order: usize,
    /// Gauss points along the graded radial variable.
    pub singular_order: usize,
    /// Gauss points along the Duffy angle variable (2D).
    pub angular_order: usize,
    /// Gauss points per axis and cell for `x` in the exterior part.
    pub exterior_order: usize,
    /// Gauss points along each ray.
    pub ray_order: usize,
    /// Gauss points per corner arc (2D).
    pub arc_order: usize,
}

impl PairOptions {
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self {
                far_order: 2,
                far_band: usize::MAX,
                near_order: 4,
                singular_order: 12,
                angular_order: 1,
                exterior_order: 3,
                ray_order: 4,
                arc_order: 1,
            }
        } else {
            Self {
                far_order: 2,
                far_band: 3,
                near_order: 2,
                singular_order: 6,
                angular_order: 3,
                exterior_order: 2,
                ray_order: 3,
                arc_order: 6,
            }
        }
    }
}

const NONE: u32 = u32::MAX;

/// One quadrature node of the double integral. `xb`/`yb` are the lower-left
/// node of the containing cell (`NONE` for a point outside the domain), `xl`/`yl`
/// the local coordinates, `weight` includes the kernel and symmetry factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry {
    pub xb: u32,
    pub yb: u32,
    pub xl: [f64; 2],
    pub yl: [f64; 2],
    pub weight: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub cells: usize,
    pub near_pairs: usize,
    pub far_pairs: usize,
    pub entries: usize,
    pub exterior_entries: usize,
}

/// Materialized pair quadrature for one grid, exponent and region.
#[derive(Debug, Clone)]
pub struct PairQuadrature {
    grid: Arc<Grid>,
    region: Region,
    entries: Vec<PairEntry>,
    /// Index of the first exterior entry.
    split: usize,
    stats: PairStats,
}

const CHUNK: usize = 4096;

#[inline]
fn interp(values: &[f64], base: u32, l: &[f64; 2], dim: usize, n0: usize) -> f64 {
    if base == NONE {
        return 0.0;
    }
    let b = base as usize;
    // lerp form keeps constants exact
    let lerp = |a: f64, c: f64, t: f64| a + t * (c - a);
    if dim == 1 {
        lerp(values[b], values[b + 1], l[0])
    } else {
        let lo = lerp(values[b], values[b + 1], l[0]);
        let hi = lerp(values[b + n0], values[b + n0 + 1], l[0]);
        lerp(lo, hi, l[1])
    }
}

#[inline]
fn scatter(out: &mut [f64], base: u32, l: &[f64; 2], dim: usize, n0: usize, c: f64) {
    if base == NONE {
        return;
    }
    let b = base as usize;
    if dim == 1 {
        out[b] += c * (1.0 - l[0]);
        out[b + 1] += c * l[0];
    } else {
        let (t, r) = (l[0], l[1]);
        out[b] += c * (1.0 - t) * (1.0 - r);
        out[b + 1] += c * t * (1.0 - r);
        out[b + n0] += c * (1.0 - t) * r;
        out[b + n0 + 1] += c * t * r;
    }
}

/// `|d|^(p-2) d`, with 0 at `d = 0`.
#[inline]
pub(crate) fn signed_pow(d: f64, p: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.signum() * d.abs().powf(p - 1.0)
    }
}

struct Builder<'a> {
    grid: &'a Grid,
    p: &'a PairExponent,
    opts: PairOptions,
    dim: usize,
    grading: f64,
}

impl Builder<'_> {
    fn base_node(&self, multi: &[usize]) -> u32 {
        self.grid.node_index(multi) as u32
    }

    fn push(&self, out: &mut Vec<PairEntry>, ci: &[usize], xl: [f64; 2], cj: &[usize], yl: [f64; 2], w: f64) {
        let x = self.grid.cell_point(ci, &xl);
        let y = self.grid.cell_point(cj, &yl);
        let d = self.dim;
        let dist = (0..d).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt();
        if dist == 0.0 || w == 0.0 {
            return;
        }
        let e = self.p.eval(&x[..d], &y[..d]);
        let kern = dist.powf(-(d as f64) - self.p.s() * e);
        out.push(PairEntry {
            xb: self.base_node(ci),
            yb: self.base_node(cj),
            xl,
            yl,
            weight: w * kern,
            exponent: e,
        });
    }

    /// Relative-coordinate rule for cell `ci` and its neighbour at offset `delta`
    /// over the `w`-intervals given per axis.
    fn near_pair(&self, out: &mut Vec<PairEntry>, ci: &[usize], delta: [i64; 2], axes: &[Vec<(f64, f64)>]) {
        let d = self.dim;
        let h = self.grid.spacing();
        let mut cj = [0usize; 2];
        for k in 0..d {
            cj[k] = (ci[k] as i64 + delta[k]) as usize;
        }
        let jac: f64 = h.iter().map(|v| v * v).product::<f64>() * 2.0;
        let inner = gauss_legendre_on(self.opts.near_order, 0.0, 1.0);

        let emit = |out: &mut Vec<PairEntry>, w: [f64; 2], wt: f64| {
            // inner box of x-local coordinates for this relative offset
            let mut lo = [0.0; 2];
            let mut len = [1.0; 2];
            for k in 0..d {
                let a = (delta[k] as f64 - w[k]).max(0.0);
                let b = (delta[k] as f64 - w[k] + 1.0).min(1.0);
                lo[k] = a;
                len[k] = (b - a).max(0.0);
            }
            if len[..d].iter().any(|&l| l == 0.0) {
                return;
            }
            let vol: f64 = len[..d].iter().product();
            let mut rec = |xi: [f64; 2], wx: f64| {
                let mut yl = [0.0; 2];
                for k in 0..d {
                    yl[k] = (xi[k] + w[k] - delta[k] as f64).clamp(0.0, 1.0);
                }
                self.push(out, ci, xi, &cj, yl, jac * wt * wx * vol);
            };
            if d == 1 {
                for &(t, wx) in &inner {
                    rec([lo[0] + len[0] * t, 0.0], wx);
                }
            } else {
                for &(t1, w1) in &inner {
                    for &(t0, w0) in &inner {
                        rec([lo[0] + len[0] * t0, lo[1] + len[1] * t1], w0 * w1);
                    }
                }
            }
        };

        let radial: Vec<(f64, f64)> = gauss_legendre_on(self.opts.singular_order, 0.0, 1.0)
            .into_iter()
            .map(|(tau, wt)| {
                let g = self.grading;
                (tau.powf(g), wt * g * tau.powf(g - 1.0))
            })
            .collect();
        let regular = gauss_legendre_on(self.opts.near_order, 0.0, 1.0);

        let pieces: Vec<[(f64, f64); 2]> = if d == 1 {
            axes[0].iter().map(|&a| [a, (0.0, 0.0)]).collect()
        } else {
            let mut v = Vec::new();
            for &b in &axes[1] {
                for &a in &axes[0] {
                    v.push([a, b]);
                }
            }
            v
        };
        for piece in pieces {
            let singular = (0..d).all(|k| piece[k].0 == 0.0 || piece[k].1 == 0.0);
            if singular {
                let mut sign = [1.0; 2];
                for k in 0..d {
                    sign[k] = if piece[k].0 + piece[k].1 < 0.0 { -1.0 } else { 1.0 };
                }
                if d == 1 {
                    for &(v, wv) in &radial {
                        emit(out, [sign[0] * v, 0.0], wv);
                    }
                } else {
                    let ang = gauss_legendre_on(self.opts.angular_order, 0.0, 1.0);
                    for &(t, wt) in &radial {
                        for &(z, wz) in &ang {
                            let wgt = wt * wz * t;
                            emit(out, [sign[0] * t, sign[1] * t * z], wgt);
                            emit(out, [sign[0] * t * z, sign[1] * t], wgt);
                        }
                    }
                }
            } else if d == 1 {
                let (a, b) = piece[0];
                for &(t, wt) in &regular {
                    emit(out, [a + (b - a) * t, 0.0], wt * (b - a));
                }
            } else {
                let ((a0, b0), (a1, b1)) = (piece[0], piece[1]);
                for &(t1, w1) in &regular {
                    for &(t0, w0) in &regular {
                        let w = [a0 + (b0 - a0) * t0, a1 + (b1 - a1) * t1];
                        emit(out, w, w0 * w1 * (b0 - a0) * (b1 - a1));
                    }
                }
            }
        }
    }

    fn far_pair(&self, out: &mut Vec<PairEntry>, ci: &[usize], cj: &[usize], order: usize) {
        let rule = gauss_legendre_on(order, 0.0, 1.0);
        let vol = self.grid.cell_volume();
        let pts: Vec<([f64; 2], f64)> = if self.dim == 1 {
            rule.iter().map(|&(t, w)| ([t, 0.0], w)).collect()
        } else {
            let mut v = Vec::new();
            for &(t1, w1) in &rule {
                for &(t0, w0) in &rule {
                    v.push(([t0, t1], w0 * w1));
                }
            }
            v
        };
        for &(xl, wx) in &pts {
            for &(yl, wy) in &pts {
                self.push(out, ci, xl, cj, yl, 2.0 * vol * vol * wx * wy);
            }
        }
    }

    fn exterior(&self, out: &mut Vec<PairEntry>, ci: &[usize]) {
        let d = self.dim;
        let rule = gauss_legendre_on(self.opts.exterior_order, 0.0, 1.0);
        let ray = gauss_legendre_on(self.opts.ray_order, 0.0, 1.0);
        let vol = self.grid.cell_volume();
        let dom = self.grid.domain();
        let pts: Vec<([f64; 2], f64)> = if d == 1 {
            rule.iter().map(|&(t, w)| ([t, 0.0], w)).collect()
        } else {
            let mut v = Vec::new();
            for &(t1, w1) in &rule {
                for &(t0, w0) in &rule {
                    v.push(([t0, t1], w0 * w1));
                }
            }
            v
        };
        let xb = self.base_node(ci);
        for &(xl, wx) in &pts {
            let x = self.grid.cell_point(ci, &xl);
            let sigma = self.p.s() * self.p.trace_at(&x[..d]);
            // (direction, exit distance, angular weight)
            let mut dirs: Vec<(Point, f64, f64)> = Vec::new();
            if d == 1 {
                dirs.push(([1.0, 0.0], dom.upper()[0] - x[0], 1.0));
                dirs.push(([-1.0, 0.0], x[0] - dom.lower()[0], 1.0));
            } else {
                let mut corners: Vec<f64> = Vec::with_capacity(4);
                for &cy in &[dom.lower()[1], dom.upper()[1]] {
                    for &cx in &[dom.lower()[0], dom.upper()[0]] {
                        corners.push((cy - x[1]).atan2(cx - x[0]));
                    }
                }
                corners.sort_by(|a, b| a.total_cmp(b));
                let arc_rule = gauss_legendre_on(self.opts.arc_order, 0.0, 1.0);
                for k in 0..4 {
                    let a = corners[k];
                    let b = if k == 3 { corners[0] + 2.0 * std::f64::consts::PI } else { corners[k + 1] };
                    for &(t, wt) in &arc_rule {
                        let th = a + (b - a) * t;
                        let dir = [th.cos(), th.sin()];
                        let mut rho = f64::INFINITY;
                        for m in 0..2 {
                            if dir[m] > 1e-300 {
                                rho = rho.min((dom.upper()[m] - x[m]) / dir[m]);
                            } else if dir[m] < -1e-300 {
                                rho = rho.min((dom.lower()[m] - x[m]) / dir[m]);
                            }
                        }
                        dirs.push((dir, rho, wt * (b - a)));
                    }
                }
            }
            for (dir, rho, wth) in dirs {
                if !(rho > 0.0) {
                    continue;
                }
                for &(w, ww) in &ray {
                    let r = rho * w.powf(-1.0 / sigma);
                    let mut y = [0.0; 2];
                    for k in 0..d {
                        y[k] = x[k] + r * dir[k];
                    }
                    let e = self.p.eval(&x[..d], &y[..d]);
                    let dr = (rho / sigma) * w.powf(-1.0 / sigma - 1.0);
                    let weight = 2.0 * vol * wx * wth * ww * dr * r.powf(-1.0 - self.p.s() * e);
                    if weight > 0.0 && weight.is_finite() {
                        out.push(PairEntry {
                            xb,
                            yb: NONE,
                            xl,
                            yl: [0.0; 2],
                            weight,
                            exponent: e,
                        });
                    }
                }
            }
        }
    }
}

fn near_offsets(dim: usize) -> Vec<([i64; 2], Vec<Vec<(f64, f64)>>)> {
    let full = |c: i64| vec![(c as f64 - 1.0, c as f64), (c as f64, c as f64 + 1.0)];
    if dim == 1 {
        vec![
            ([0, 0], vec![vec![(0.0, 1.0)]]),
            ([1, 0], vec![full(1)]),
        ]
    } else {
        let mut v = vec![([0, 0], vec![vec![(0.0, 1.0)], full(0)])];
        for delta in [[1, 0], [-1, 1], [0, 1], [1, 1]] {
            v.push((delta, vec![full(delta[0]), full(delta[1])]));
        }
        v
    }
}

impl PairQuadrature {
    pub fn new(grid: Arc<Grid>, p: &PairExponent, region: Region, opts: PairOptions) -> Self {
        let dim = grid.dim();
        let a = p.lower() * (1.0 - p.s());
        let grading = (3.0 / a).ceil().clamp(2.0, 12.0);
        let builder = Builder {
            grid: &grid,
            p,
            opts,
            dim,
            grading,
        };
        let cells = grid.cell_count();
        let offsets = near_offsets(dim);
        let ncell = |k: usize| grid.cells_per_axis(k) as i64;

        let per_cell: Vec<(Vec<PairEntry>, usize, usize)> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let ci = grid.cell_multi(c);
                let mut out = Vec::new();
                let mut near = 0;
                for (delta, axes) in &offsets {
                    let ok = (0..dim).all(|k| {
                        let j = ci[k] as i64 + delta[k];
                        j >= 0 && j < ncell(k)
                    });
                    if ok {
                        builder.near_pair(&mut out, &ci, *delta, axes);
                        near += 1;
                    }
                }
                let mut far = 0;
                for c2 in (c + 1)..cells {
                    let cj = grid.cell_multi(c2);
                    let cheb = (0..dim)
                        .map(|k| (cj[k] as i64 - ci[k] as i64).unsigned_abs() as usize)
                        .max()
                        .unwrap_or(0);
                    if cheb <= 1 {
                        continue;
                    }
                    let order = if cheb <= opts.far_band { opts.far_order } else { 1 };
                    builder.far_pair(&mut out, &ci, &cj, order);
                    far += 1;
                }
                (out, near, far)
            })
            .collect();
        let mut entries = Vec::new();
        let (mut near_pairs, mut far_pairs) = (0, 0);
        for (e, n, f) in per_cell {
            entries.extend(e);
            near_pairs += n;
            far_pairs += f;
        }
        let split = entries.len();
        if region == Region::Full {
            let ext: Vec<Vec<PairEntry>> = (0..cells)
                .into_par_iter()
                .map(|c| {
                    let mut out = Vec::new();
                    builder.exterior(&mut out, &grid.cell_multi(c));
                    out
                })
                .collect();
            for e in ext {
                entries.extend(e);
            }
        }
        let stats = PairStats {
            cells,
            near_pairs,
            far_pairs,
            entries: entries.len(),
            exterior_entries: entries.len() - split,
        };
        Self {
            grid,
            region,
            entries,
            split,
            stats,
        }
    }

    pub fn with_defaults(grid: Arc<Grid>, p: &PairExponent, region: Region) -> Self {
        let opts = PairOptions::default_for(grid.dim());
        Self::new(grid, p, region, opts)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    pub fn stats(&self) -> PairStats {
        self.stats
    }

    /// Copy with the roles of `x` and `y` exchanged in every entry.
    pub fn transposed(&self) -> Self {
        let mut t = self.clone();
        for e in &mut t.entries {
            std::mem::swap(&mut e.xb, &mut e.yb);
            std::mem::swap(&mut e.xl, &mut e.yl);
        }
        t
    }

    #[inline]
    fn diff(&self, values: &[f64], e: &PairEntry) -> f64 {
        let d = self.grid.dim();
        let n0 = self.grid.nodes_per_axis()[0];
        interp(values, e.xb, &e.xl, d, n0) - interp(values, e.yb, &e.yl, d, n0)
    }

    /// Deterministic chunked parallel sum of `f(entry)` over `range`.
    fn sum_range(&self, range: std::ops::Range<usize>, f: impl Fn(&PairEntry) -> f64 + Sync) -> f64 {
        let partial: Vec<f64> = self.entries[range]
            .par_chunks(CHUNK)
            .map(|c| c.iter().map(&f).sum::<f64>())
            .collect();
        partial.iter().sum()
    }

    fn sum(&self, f: impl Fn(&PairEntry) -> f64 + Sync) -> f64 {
        self.sum_range(0..self.entries.len(), f)
    }

    /// Gagliardo modular `int int |u(x) - u(y)|^p K`.
    pub fn modular(&self, values: &[f64]) -> f64 {
        self.sum(|e| {
            let d = self.diff(values, e).abs();
            if d == 0.0 {
                0.0
            } else {
                e.weight * d.powf(e.exponent)
            }
        })
    }

    /// Modular split into the `Omega x Omega` part and the exterior part.
    pub fn modular_split(&self, values: &[f64]) -> (f64, f64) {
        let f = |e: &PairEntry| {
            let d = self.diff(values, e).abs();
            if d == 0.0 {
                0.0
            } else {
                e.weight * d.powf(e.exponent)
            }
        };
        (
            self.sum_range(0..self.split, f),
            self.sum_range(self.split..self.entries.len(), f),
        )
    }

    /// Terms `w |d|^p` binned by exponent, for Luxemburg root finding.
    pub fn terms(&self, values: &[f64]) -> ModularTerms {
        let parts: Vec<ModularTerms> = self
            .entries
            .par_chunks(CHUNK)
            .map(|c| {
                let mut t = ModularTerms::new();
                for e in c {
                    let d = self.diff(values, e).abs();
                    if d > 0.0 {
                        t.add(e.weight * d.powf(e.exponent), e.exponent);
                    }
                }
                t
            })
            .collect();
        let mut out = ModularTerms::new();
        for p in &parts {
            out.merge(p);
        }
        out
    }

    /// `int int |d|^p / p K`.
    pub fn energy(&self, values: &[f64]) -> f64 {
        self.sum(|e| {
            let d = self.diff(values, e).abs();
            if d == 0.0 {
                0.0
            } else {
                e.weight * d.powf(e.exponent) / e.exponent
            }
        })
    }

    /// `int int |d_u|^(p-2) d_u d_v K`.
    pub fn weak_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.sum(|e| e.weight * signed_pow(self.diff(u, e), e.exponent) * self.diff(v, e))
    }

    /// Nodal vector `g_i = int int |d_u|^(p-2) d_u (phi_i(x) - phi_i(y)) K`.
    pub fn weak_form_gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.node_count();
        let d = self.grid.dim();
        let n0 = self.grid.nodes_per_axis()[0];
        let parts: Vec<Vec<f64>> = self
            .entries
            .par_chunks(CHUNK)
            .map(|c| {
                let mut g = vec![0.0; n];
                for e in c {
                    let s = e.weight * signed_pow(self.diff(u, e), e.exponent);
                    if s != 0.0 {
                        scatter(&mut g, e.xb, &e.xl, d, n0, s);
                        scatter(&mut g, e.yb, &e.yl, d, n0, -s);
                    }
                }
                g
            })
            .collect();
        let mut out = vec![0.0; n];
        for p in &parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use approx::assert_relative_eq;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    fn values(g: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..g.node_count())
            .map(|i| f(&g.node_coords(i)[..g.dim()]))
            .collect()
    }

    #[test]
    fn kernel_mass_against_closed_form() {
        // |u(x) - u(y)| = |x - y| gives int int |x-y|^a with a = p(1-s) - 1
        for &(p, s) in &[(2.0, 0.5), (1.5, 0.25), (3.0, 0.25), (1.5, 0.5)] {
            let g = grid1(17);
            let q = PairQuadrature::with_defaults(g.clone(), &PairExponent::constant(p, s).unwrap(), Region::Interior);
            let a: f64 = p * (1.0 - s) - 1.0;
            let exact = 2.0 / ((a + 1.0) * (a + 2.0));
            assert_relative_eq!(q.modular(&values(&g, |x| x[0])), exact, max_relative = 2e-3);
        }
    }

    #[test]
    fn exterior_part_of_pinned_tent() {
        // u = 1 - |2x - 1|: exterior part is 2 int u^p (x^(-sp) + (1-x)^(-sp)) / (sp)
        let (p, s) = (2.0, 0.3);
        let g = grid1(9);
        let q = PairQuadrature::with_defaults(g.clone(), &PairExponent::constant(p, s).unwrap(), Region::Full);
        let v = values(&g, |x| 1.0 - (2.0 * x[0] - 1.0).abs());
        let (_, outer) = q.modular_split(&v);
        let sp: f64 = s * p;
        let a = p - sp + 1.0;
        let first = 4.0 * 2f64.powf(p) / sp * 0.5f64.powf(a) / a;
        let second: f64 = gauss_legendre_on(40, 0.0, 0.5)
            .iter()
            .map(|&(x, w)| w * 4.0 * (2.0 * x).powf(p) * (1.0 - x).powf(-sp) / sp)
            .sum();
        assert_relative_eq!(outer, first + second, max_relative = 1e-3);
    }

    #[test]
    fn two_dimensional_quadratic_kernel() {
        // u(x) = x_1 on the unit square, p = 2: int int (x1-y1)^2 |x-y|^(-2-2s)
        let d = BoxDomain::unit(2).unwrap();
        let s = 0.5;
        let mut prev = None;
        let mut vals = Vec::new();
        for n in [5, 9, 17] {
            let g = Arc::new(Grid::uniform(d.clone(), n).unwrap());
            let q = PairQuadrature::with_defaults(g.clone(), &PairExponent::constant(2.0, s).unwrap(), Region::Interior);
            let m = q.modular(&values(&g, |x| x[0]));
            if let Some(pm) = prev {
                vals.push((m - pm as f64).abs());
            }
            prev = Some(m);
        }
        assert!(vals[1] < vals[0], "{vals:?}");
    }

    #[test]
    fn weak_form_matches_modular_for_constant_exponent() {
        let g = grid1(17);
        let p = PairExponent::constant(1.7, 0.4).unwrap();
        let q = PairQuadrature::with_defaults(g.clone(), &p, Region::Full);
        let mut u = values(&g, |x| (3.0 * x[0]).sin() * x[0] * (1.0 - x[0]));
        u[0] = 0.0;
        let n = u.len();
        u[n - 1] = 0.0;
        assert_relative_eq!(q.weak_form(&u, &u), q.modular(&u), max_relative = 1e-12);
        let grad = q.weak_form_gradient(&u);
        let dot: f64 = grad.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert_relative_eq!(dot, q.modular(&u), max_relative = 1e-12);
    }
}
