//! Principal-value evaluation of the operator at a single point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponents::PairExponent;
use crate::grid::GridFunction;
use crate::quadrature::gauss_legendre_on;

use super::pairs::signed_pow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongFormReport {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// Aitken-extrapolated limit when converged, else the last value.
    pub value: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

const SEGMENT_ORDER: usize = 16;
const RAY_ORDER: usize = 8;
const ARC_ORDER: usize = 48;

/// `2 int_{|y - x| > eps} |u(x)-u(y)|^(p-2) (u(x)-u(y)) |x-y|^(-N-s p(x,y)) dy`
/// for each `eps`, followed by extrapolation of the sequence.
///
/// Rays from `x` are split at every grid line they cross, so each radial piece
/// has a smooth integrand; pieces use `r = a (b/a)^t`, the exterior uses the
/// same ray map as the pair quadrature.
pub fn strong_form_diagnostic(
    u: &GridFunction,
    p: &PairExponent,
    x: &[f64],
    eps_sequence: &[f64],
) -> Result<StrongFormReport> {
    let grid = u.grid();
    let dim = grid.dim();
    if x.len() != dim {
        return Err(invalid("point dimension mismatch"));
    }
    let dom = grid.domain();
    if (0..dim).any(|k| x[k] <= dom.lower()[k] || x[k] >= dom.upper()[k]) {
        return Err(invalid("evaluation point must lie inside the domain"));
    }
    if eps_sequence.is_empty()
        || eps_sequence.iter().any(|e| !(*e > 0.0))
        || eps_sequence.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(invalid("eps sequence must be positive and strictly decreasing"));
    }
    let ux = u.eval(x);
    let s = p.s();
    let seg = gauss_legendre_on(SEGMENT_ORDER, 0.0, 1.0);
    let ray = gauss_legendre_on(RAY_ORDER, 0.0, 1.0);

    // (direction, angular weight, exit distance)
    let mut dirs: Vec<([f64; 2], f64, f64)> = Vec::new();
    if dim == 1 {
        dirs.push(([1.0, 0.0], 1.0, dom.upper()[0] - x[0]));
        dirs.push(([-1.0, 0.0], 1.0, x[0] - dom.lower()[0]));
    } else {
        let mut corners = Vec::with_capacity(4);
        for &cy in &[dom.lower()[1], dom.upper()[1]] {
            for &cx in &[dom.lower()[0], dom.upper()[0]] {
                corners.push((cy - x[1]).atan2(cx - x[0]));
            }
        }
        corners.sort_by(|a: &f64, b| a.total_cmp(b));
        let arc = gauss_legendre_on(ARC_ORDER, 0.0, 1.0);
        for k in 0..4 {
            let a = corners[k];
            let b = if k == 3 { corners[0] + 2.0 * std::f64::consts::PI } else { corners[k + 1] };
            for &(t, w) in &arc {
                let th = a + (b - a) * t;
                let d = [th.cos(), th.sin()];
                let mut rho = f64::INFINITY;
                for m in 0..2 {
                    if d[m] > 1e-300 {
                        rho = rho.min((dom.upper()[m] - x[m]) / d[m]);
                    } else if d[m] < -1e-300 {
                        rho = rho.min((dom.lower()[m] - x[m]) / d[m]);
                    }
                }
                dirs.push((d, w * (b - a), rho));
            }
        }
    }

    let integrand = |y: &[f64], r: f64| -> f64 {
        let e = p.eval(x, y);
        let d = ux - u.eval(y);
        signed_pow(d, e) * r.powf(-(dim as f64) - s * e) * r.powi(dim as i32 - 1)
    };

    let mut values = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let mut total = 0.0;
        for (d, wth, rho) in &dirs {
            if eps >= *rho {
                // only the exterior beyond eps
                total += wth * exterior(x, d, eps, ux, p, dim, &ray);
                continue;
            }
            let mut breaks = vec![eps];
            for k in 0..dim {
                if d[k].abs() < 1e-14 {
                    continue;
                }
                let h = grid.spacing()[k];
                let n = grid.cells_per_axis(k);
                for i in 0..=n {
                    let line = dom.lower()[k] + i as f64 * h;
                    let r = (line - x[k]) / d[k];
                    if r > eps && r < *rho {
                        breaks.push(r);
                    }
                }
            }
            breaks.push(*rho);
            breaks.sort_by(|a, b| a.total_cmp(b));
            breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
            let mut part = 0.0;
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let l = (b / a).ln();
                for &(t, wt) in &seg {
                    let r = a * (b / a).powf(t);
                    let mut y = [0.0; 2];
                    for k in 0..dim {
                        y[k] = x[k] + r * d[k];
                    }
                    part += wt * l * r * integrand(&y[..dim], r);
                }
            }
            part += exterior(x, d, *rho, ux, p, dim, &ray);
            total += wth * part;
        }
        values.push(2.0 * total);
    }

    let (value, converged, note) = extrapolate(&values);
    Ok(StrongFormReport {
        epsilons: eps_sequence.to_vec(),
        values,
        value,
        converged,
        note,
    })
}

fn exterior(
    x: &[f64],
    d: &[f64; 2],
    rho: f64,
    ux: f64,
    p: &PairExponent,
    dim: usize,
    ray: &[(f64, f64)],
) -> f64 {
    if ux == 0.0 {
        return 0.0;
    }
    let sigma = p.s() * p.trace_at(x);
    let mut acc = 0.0;
    for &(w, ww) in ray {
        let r = rho * w.powf(-1.0 / sigma);
        let mut y = [0.0; 2];
        for k in 0..dim {
            y[k] = x[k] + r * d[k];
        }
        let e = p.eval(x, &y[..dim]);
        let dr = (rho / sigma) * w.powf(-1.0 / sigma - 1.0);
        acc += ww * dr * signed_pow(ux, e) * r.powf(-1.0 - p.s() * e);
    }
    acc
}

/// Aitken extrapolation of the last three values; flags growing or barely
/// shrinking successive differences.
fn extrapolate(v: &[f64]) -> (f64, bool, String) {
    let last = *v.last().unwrap_or(&0.0);
    if v.len() < 3 {
        return (last, false, "fewer than three radii".into());
    }
    let scale = v.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let tiny = 1e-12 * scale;
    let n = diffs.len();
    let (d1, d2) = (diffs[n - 2], diffs[n - 1]);
    if d2.abs() <= tiny {
        return (last, true, String::new());
    }
    let growing = diffs
        .windows(2)
        .any(|w| w[1].abs() > w[0].abs() * (1.0 + 1e-9) && w[1].abs() > tiny);
    let ratio = d2.abs() / d1.abs().max(1e-300);
    if growing || ratio >= 0.95 {
        return (
            last,
            false,
            format!("successive differences do not shrink (last ratio {ratio:.3})"),
        );
    }
    let denom = d2 - d1;
    let value = if denom.abs() > 0.0 { last - d2 * d2 / denom } else { last };
    (value, true, String::new())
}
