//! Box domains, tensor grids and nodal functions with zero extension.
//!
//! A [`GridFunction`] is the piecewise-multilinear interpolant of its nodal
//! values on the closed box and is identically zero outside of it. When the
//! function is *pinned*, every boundary node carries the value 0, which is
//! the discrete form of `u = 0` on the complement of the domain.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Point storage used internally. Only the first `dim` coordinates are read.
pub type Point = [f64; MAX_DIM];

/// Axis-aligned box `[a_1, b_1] x ... x [a_N, b_N]`, `N` in {1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.is_empty() || lower.len() > MAX_DIM {
            return Err(Error::Domain(format!(
                "dimension must be 1 or 2, got {}",
                lower.len()
            )));
        }
        if lower.len() != upper.len() {
            return Err(Error::Domain("lower/upper length mismatch".into()));
        }
        for (k, (a, b)) in lower.iter().zip(upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!(
                    "axis {k}: need finite a < b, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(&[a], &[b])
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Lebesgue measure `|Omega|`.
    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.width(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    /// Euclidean distance from `x` to the closed box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|k| {
                let d = (self.lower[k] - x[k]).max(x[k] - self.upper[k]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Nearest point of the closed box.
    pub fn project(&self, x: &[f64]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            p[k] = x[k].clamp(self.lower[k], self.upper[k]);
        }
        p
    }

    /// Largest Euclidean norm of a point of the closed box.
    pub fn max_norm(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.lower[k].abs().max(self.upper[k].abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Multilinear interpolation weights of one point: at most `2^N` nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stencil {
    pub nodes: [u32; 4],
    pub weights: [f64; 4],
    pub len: u8,
}

impl Stencil {
    pub const EMPTY: Stencil = Stencil {
        nodes: [0; 4],
        weights: [0.0; 4],
        len: 0,
    };

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len as usize {
            acc += self.weights[k] * values[self.nodes[k] as usize];
        }
        acc
    }

    #[inline]
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(move |k| (self.nodes[k] as usize, self.weights[k]))
    }
}

/// Uniform tensor grid on a [`BoxDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: BoxDomain,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(domain: BoxDomain, nodes: &[usize]) -> Result<Self> {
        if nodes.len() != domain.dim() {
            return Err(Error::Grid(format!(
                "expected {} node counts, got {}",
                domain.dim(),
                nodes.len()
            )));
        }
        if let Some(n) = nodes.iter().find(|&&n| n < 2) {
            return Err(Error::Grid(format!("need at least 2 nodes per axis, got {n}")));
        }
        let spacing = nodes
            .iter()
            .enumerate()
            .map(|(k, &n)| domain.width(k) / (n - 1) as f64)
            .collect();
        Ok(Self {
            domain,
            nodes: nodes.to_vec(),
            spacing,
        })
    }

    /// Same node count on every axis.
    pub fn uniform(domain: BoxDomain, n: usize) -> Result<Self> {
        let dims = vec![n; domain.dim()];
        Self::new(domain, &dims)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn cells_per_axis(&self, axis: usize) -> usize {
        self.nodes[axis] - 1
    }

    pub fn cell_count(&self) -> usize {
        self.nodes.iter().map(|n| n - 1).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Node multi-index (axis 0 fastest).
    pub fn node_multi(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        let mut r = idx;
        for k in 0..self.dim() {
            m[k] = r % self.nodes[k];
            r /= self.nodes[k];
        }
        m
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for k in 0..self.dim() {
            idx += multi[k] * stride;
            stride *= self.nodes[k];
        }
        idx
    }

    pub fn node_coords(&self, idx: usize) -> Point {
        let m = self.node_multi(idx);
        let mut p = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            p[k] = self.domain.lower[k] + m[k] as f64 * self.spacing[k];
        }
        p
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let m = self.node_multi(idx);
        (0..self.dim()).any(|k| m[k] == 0 || m[k] == self.nodes[k] - 1)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.is_boundary_node(i))
    }

    pub fn cell_multi(&self, cell: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        let mut r = cell;
        for k in 0..self.dim() {
            let n = self.nodes[k] - 1;
            m[k] = r % n;
            r /= n;
        }
        m
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for k in 0..self.dim() {
            idx += multi[k] * stride;
            stride *= self.nodes[k] - 1;
        }
        idx
    }

    pub fn cell_origin(&self, multi: &[usize]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            p[k] = self.domain.lower[k] + multi[k] as f64 * self.spacing[k];
        }
        p
    }

    /// Physical point of local coordinates `local` in `[0,1]^N` of a cell.
    pub fn cell_point(&self, multi: &[usize], local: &[f64]) -> Point {
        let mut p = self.cell_origin(multi);
        for k in 0..self.dim() {
            p[k] += local[k] * self.spacing[k];
        }
        p
    }

    /// Interpolation stencil from cell multi-index and local coordinates.
    pub fn cell_stencil(&self, multi: &[usize], local: &[f64]) -> Stencil {
        let mut s = Stencil::EMPTY;
        match self.dim() {
            1 => {
                let i = multi[0] as u32;
                s.nodes[0] = i;
                s.nodes[1] = i + 1;
                s.weights[0] = 1.0 - local[0];
                s.weights[1] = local[0];
                s.len = 2;
            }
            _ => {
                let n0 = self.nodes[0] as u32;
                let (i, j) = (multi[0] as u32, multi[1] as u32);
                let (t, r) = (local[0], local[1]);
                s.nodes = [j * n0 + i, j * n0 + i + 1, (j + 1) * n0 + i, (j + 1) * n0 + i + 1];
                s.weights = [(1.0 - t) * (1.0 - r), t * (1.0 - r), (1.0 - t) * r, t * r];
                s.len = 4;
            }
        }
        s
    }

    /// Cell containing `x` and local coordinates, or `None` outside the closed box.
    pub fn locate(&self, x: &[f64]) -> Option<([usize; MAX_DIM], Point)> {
        if !self.domain.contains(x) {
            return None;
        }
        let mut multi = [0; MAX_DIM];
        let mut local = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            let t = (x[k] - self.domain.lower[k]) / self.spacing[k];
            let i = (t.floor() as isize).clamp(0, self.cells_per_axis(k) as isize - 1) as usize;
            multi[k] = i;
            local[k] = (t - i as f64).clamp(0.0, 1.0);
        }
        Some((multi, local))
    }

    /// Stencil of an arbitrary point; empty outside the closed box.
    pub fn stencil(&self, x: &[f64]) -> Stencil {
        match self.locate(x) {
            Some((m, l)) => self.cell_stencil(&m, &l),
            None => Stencil::EMPTY,
        }
    }
}

/// Nodal function on a grid, zero outside the closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    pinned: bool,
}

impl GridFunction {
    /// Sample `g` at every node. Pinned functions get 0 on the boundary.
    pub fn interpolate<F>(g: F, grid: Arc<Grid>, pin_boundary: bool) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.node_count());
        for idx in 0..grid.node_count() {
            if pin_boundary && grid.is_boundary_node(idx) {
                values.push(0.0);
                continue;
            }
            let x = grid.node_coords(idx);
            let v = g(&x[..n]);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: idx, value: v });
            }
            values.push(v);
        }
        Ok(Self {
            grid,
            values,
            pinned: pin_boundary,
        })
    }

    /// Wrap nodal values. A pinned function must vanish on boundary nodes.
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>, pinned: bool) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        if pinned {
            if let Some(i) = (0..values.len()).find(|&i| grid.is_boundary_node(i) && values[i] != 0.0)
            {
                return Err(invalid(format!("pinned function has nonzero boundary node {i}")));
            }
        }
        Ok(Self {
            grid,
            values,
            pinned,
        })
    }

    pub fn zeros(grid: Arc<Grid>, pinned: bool) -> Self {
        let values = vec![0.0; grid.node_count()];
        Self {
            grid,
            values,
            pinned,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_pinned(&self) -> bool {
        self.pinned
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Multilinear interpolation; exactly 0 outside the closed box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.grid.stencil(x).apply(&self.values)
    }

    /// Nodal maximum of `|u|`; the interpolant attains its extremes at nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Nodewise `max(u - k, 0)`.
    pub fn positive_part_minus_level(&self, k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(invalid(format!("level must be >= 0, got {k}")));
        }
        Ok(self.map(|v| (v - k).max(0.0)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self {
            grid: self.grid.clone(),
            values,
            pinned: self.pinned,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `a*self + b*other` on a shared grid.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
            pinned: self.pinned && other.pinned,
        })
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions live on different grids".into()))
        }
    }

    /// Nodal L2 distance `sqrt(h^N sum (u_i - v_i)^2)`.
    pub fn nodal_l2_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// One CSV row per node: coordinates then value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let names = ["x", "y"];
        let mut header: Vec<&str> = names[..self.dim()].to_vec();
        header.push("value");
        wtr.write_record(&header)?;
        for idx in 0..self.grid.node_count() {
            let x = self.grid.node_coords(idx);
            let mut row: Vec<String> = x[..self.dim()].iter().map(|c| format!("{c:e}")).collect();
            row.push(format!("{:e}", self.values[idx]));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Read values written by [`write_csv`](Self::write_csv) onto `grid`.
    /// Node coordinates must match the grid to `1e-9` relative.
    pub fn read_csv<R: Read>(r: R, grid: Arc<Grid>, pinned: bool) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let dim = grid.dim();
        let mut values = Vec::with_capacity(grid.node_count());
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::GridMismatch(format!(
                    "row {idx}: expected {} columns, got {}",
                    dim + 1,
                    rec.len()
                )));
            }
            if idx >= grid.node_count() {
                return Err(Error::GridMismatch("more rows than grid nodes".into()));
            }
            let x = grid.node_coords(idx);
            for k in 0..dim {
                let c: f64 = rec[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::GridMismatch(format!("row {idx}: bad coordinate")))?;
                let scale = grid.domain().width(k);
                if (c - x[k]).abs() > 1e-9 * scale {
                    return Err(Error::GridMismatch(format!(
                        "row {idx}: coordinate {c} does not match node {}",
                        x[k]
                    )));
                }
            }
            let v: f64 = rec[dim]
                .trim()
                .parse()
                .map_err(|_| Error::GridMismatch(format!("row {idx}: bad value")))?;
            values.push(v);
        }
        Self::from_values(grid, values, pinned)
    }

    pub fn to_json(&self) -> GridFunctionJson {
        GridFunctionJson {
            lower: self.grid.domain().lower().to_vec(),
            upper: self.grid.domain().upper().to_vec(),
            nodes: self.grid.nodes_per_axis().to_vec(),
            pinned: self.pinned,
            values: self.values.clone(),
        }
    }

    pub fn from_json(j: &GridFunctionJson) -> Result<Self> {
        let domain = BoxDomain::new(&j.lower, &j.upper)?;
        let grid = Arc::new(Grid::new(domain, &j.nodes)?);
        Self::from_values(grid, j.values.clone(), j.pinned)
    }
}

/// Compact JSON form: grid description plus the flat nodal array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionJson {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
    pub pinned: bool,
    pub values: Vec<f64>,
}
