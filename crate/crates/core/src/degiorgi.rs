//! De Giorgi level traces: rising levels `k_n`, the functionals
//! `Z_n = int (u - k_n)_+^{q(x)}`, the superlinear recursion with its thresholds and
//! tail bound, the choice of `k_*` and an empirical fit of the L-infinity bound.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponents::ScalarExponent;
use crate::grid::GridFunction;
use crate::modular::{lebesgue_terms, luxemburg_root, LuxemburgOptions};
use crate::quadrature::{CellQuadrature, CellRule};
use crate::report::Assertion;

pub const DEFAULT_N_MAX: usize = 30;

/// `K`, `b`, `delta_1`, `delta_2` of `Z_{n+1} <= K b^n (Z_n^{1+d1} + Z_n^{1+d2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionParams {
    pub k: f64,
    pub b: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl RecursionParams {
    /// `b = 1` is accepted: the recursion and its bounds stay meaningful.
    pub fn new(k: f64, b: f64, delta1: f64, delta2: f64) -> Result<Self> {
        let finite = [k, b, delta1, delta2].iter().all(|v| v.is_finite());
        if !(finite && k > 0.0 && b >= 1.0 && delta1 > 0.0 && delta2 >= delta1) {
            return Err(invalid(format!(
                "need K > 0, b >= 1, delta2 >= delta1 > 0; got K={k}, b={b}, d1={delta1}, d2={delta2}"
            )));
        }
        Ok(Self { k, b, delta1, delta2 })
    }

    /// `(2K)^{-1/d1} b^{-1/d1^2}`.
    pub fn tail_constant(&self) -> f64 {
        (2.0 * self.k).powf(-1.0 / self.delta1) * self.b.powf(-1.0 / (self.delta1 * self.delta1))
    }

    /// `min(1, (2K)^{-1/d1} b^{-1/d1^2} b^{-n/d1})`.
    pub fn tail_bound(&self, n: usize) -> f64 {
        (self.tail_constant() * self.b.powf(-(n as f64) / self.delta1)).min(1.0)
    }
}

/// `k_n = k_*(2 - 2^{-n})`, `n = 0..=n_max`.
pub fn levels(k_star: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(k_star > 0.0 && k_star.is_finite()) {
        return Err(invalid(format!("k_star must be positive, got {k_star}")));
    }
    Ok((0..=n_max).map(|n| k_star * (2.0 - 0.5f64.powi(n as i32))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    /// `int_{A_k} (u - k)^{q(x)}`.
    pub z: f64,
    /// `|A_k|`.
    pub measure: f64,
    /// `int_{A_k} u^{q(x)}`.
    pub mass: f64,
}

/// Indicator quadrature of the superlevel set `A_k = {u > k}` at cell points.
pub fn level_values(u: &GridFunction, q: &ScalarExponent, k: f64, quad: &CellQuadrature) -> Result<LevelValue> {
    if !(k >= 0.0) {
        return Err(invalid(format!("level must be >= 0, got {k}")));
    }
    let dim = u.dim();
    let (mut z, mut measure, mut mass) = (0.0, 0.0, 0.0);
    for pt in quad.points() {
        let v = pt.stencil.apply(u.values());
        if v > k {
            let e = q.eval(&pt.x[..dim]);
            z += pt.weight * (v - k).powf(e);
            measure += pt.weight;
            mass += pt.weight * v.powf(e);
        }
    }
    Ok(LevelValue { z, measure, mass })
}

/// `(Z, |A_k|)` with the default cell rule.
pub fn level_functional(u: &GridFunction, q: &ScalarExponent, k: f64) -> Result<(f64, f64)> {
    let quad = CellQuadrature::new(u.grid(), CellRule::default());
    let v = level_values(u, q, k, &quad)?;
    Ok((v.z, v.measure))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `min(1, (2K)^{-1/d1} b^{-1/d1^2})`.
    pub thr_a: f64,
    /// `(2K)^{-1/d2} b^{-1/(d1 d2) - (d2 - d1)/d2^2}`.
    pub thr_b: f64,
}

pub fn recursion_threshold(params: &RecursionParams) -> Thresholds {
    let RecursionParams { k, b, delta1: d1, delta2: d2 } = *params;
    Thresholds {
        thr_a: params.tail_constant().min(1.0),
        thr_b: (2.0 * k).powf(-1.0 / d2) * b.powf(-1.0 / (d1 * d2) - (d2 - d1) / (d2 * d2)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Diverged,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub z: Vec<f64>,
    pub verdict: Verdict,
    /// `Z_0` at or below one of the two thresholds.
    pub hypothesis: bool,
    /// First `n` with `Z_n <= 1`.
    pub n0: Option<usize>,
    /// Tail bound checked from `n0` on; `None` without the hypothesis.
    pub tail_ok: Option<bool>,
    pub thresholds: Thresholds,
}

/// Values below this count as having reached zero.
const ZERO_FLOOR: f64 = 1e-100;
const BLOWUP: f64 = 1e100;
const TAIL: usize = 10;

/// Iterates the worst case `Z_{n+1} = K b^n (Z_n^{1+d1} + Z_n^{1+d2})` up to `n_max`
/// steps, stopping early at the zero floor or on blow-up. A trace that runs to
/// `n_max` counts as converged when its last `TAIL` steps strictly decrease and it
/// ends below `1e-12 Z_0`, as diverged when they strictly increase above 1.
pub fn simulate_recursion(params: &RecursionParams, z0: f64, n_max: usize) -> Result<RecursionTrace> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(invalid(format!("Z0 must be positive, got {z0}")));
    }
    let thresholds = recursion_threshold(params);
    let RecursionParams { k, b, delta1: d1, delta2: d2 } = *params;
    let mut z = vec![z0];
    let mut verdict = Verdict::Inconclusive;
    for n in 0..n_max {
        let zn = z[n];
        let next = k * b.powi(n as i32) * (zn.powf(1.0 + d1) + zn.powf(1.0 + d2));
        if !next.is_finite() || next > BLOWUP {
            verdict = Verdict::Diverged;
            if next.is_finite() {
                z.push(next);
            }
            break;
        }
        z.push(next);
        if next <= ZERO_FLOOR {
            verdict = Verdict::Converged;
            break;
        }
    }
    if verdict == Verdict::Inconclusive && z.len() > TAIL {
        let tail = &z[z.len() - TAIL - 1..];
        let last = *z.last().expect("non-empty");
        if tail.windows(2).all(|w| w[1] < w[0]) && last <= 1e-12 * z0 {
            verdict = Verdict::Converged;
        } else if tail.windows(2).all(|w| w[1] > w[0]) && last > 1.0 {
            verdict = Verdict::Diverged;
        }
    }
    let hypothesis = z0 <= thresholds.thr_a || z0 <= thresholds.thr_b;
    let n0 = z.iter().position(|&v| v <= 1.0);
    let tail_ok = if hypothesis {
        let start = n0.unwrap_or(z.len());
        Some(
            z.iter()
                .enumerate()
                .skip(start)
                .all(|(n, &v)| v <= params.tail_bound(n) * (1.0 + 1e-12)),
        )
    } else {
        None
    };
    Ok(RecursionTrace {
        z,
        verdict,
        hypothesis,
        n0,
        tail_ok,
        thresholds,
    })
}

/// Constants of the level recursion on computed solutions, supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStarConstants {
    pub c16: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStarSelection {
    pub k_star: f64,
    /// `k^{-g1} + k^{-g2}`.
    pub lhs: f64,
    /// `(2 C16)^{-1} b^{-1/d1} M^{-d1}`.
    pub rhs1: f64,
    /// `(2 C16)^{-1} b^{-1/d1 - (d2-d1)/d2} M^{-d2}`.
    pub rhs2: f64,
    pub system_holds: bool,
}

/// `k_* = max{(4C)^{1/g1}, (4C)^{1/g2}} b^{(1/g1)(1/d1 + (d2-d1)/d2)} max{M^{d1/g2}, M^{d2/g1}}`
/// with `M = int |u|^{q(x)}`, followed by a numerical check of the equivalent system.
pub fn kstar_select(c: &KStarConstants, modular_q: f64) -> Result<KStarSelection> {
    let KStarConstants { c16, gamma1: g1, gamma2: g2, delta1: d1, delta2: d2, b } = *c;
    let all = [c16, g1, g2, d1, d2, b, modular_q];
    if all.iter().any(|v| !v.is_finite()) || c16 <= 0.0 || g1 <= 0.0 || g2 < g1 || d1 <= 0.0 || d2 < d1 || b < 1.0 {
        return Err(invalid("need C16 > 0, g2 >= g1 > 0, d2 >= d1 > 0, b >= 1"));
    }
    if !(modular_q > 0.0) {
        return Err(invalid("modular of u must be positive; u = 0 needs no bound"));
    }
    let m = modular_q;
    let k_star = (4.0 * c16).powf(1.0 / g1).max((4.0 * c16).powf(1.0 / g2))
        * b.powf((1.0 / g1) * (1.0 / d1 + (d2 - d1) / d2))
        * m.powf(d1 / g2).max(m.powf(d2 / g1));
    let lhs = k_star.powf(-g1) + k_star.powf(-g2);
    let rhs1 = b.powf(-1.0 / d1) * m.powf(-d1) / (2.0 * c16);
    let rhs2 = b.powf(-1.0 / d1 - (d2 - d1) / d2) * m.powf(-d2) / (2.0 * c16);
    let slack = 1.0 + 1e-12;
    Ok(KStarSelection {
        k_star,
        lhs,
        rhs1,
        rhs2,
        system_holds: lhs <= rhs1 * slack && lhs <= rhs2 * slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfBoundReport {
    /// `(||u||_{L^q~}, sup|u|)` per solution.
    pub pairs: Vec<(f64, f64)>,
    pub tau1: f64,
    pub tau2: f64,
    pub fitted_c: f64,
    pub violations: Vec<String>,
}

impl LinfBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.fitted_c.is_finite()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Fit of `sup|u| <= C max{||u||^tau1, ||u||^tau2}` to `(norm, sup)` pairs: `tau1` from
/// the sub-unit norms, `tau2` from the rest, `C` the smallest constant for both.
/// Exponents outside `(0, 10]` are reported as violations.
pub fn fit_linf_bound(pairs: &[(f64, f64)]) -> LinfBoundReport {
    let mut violations = Vec::new();
    let nonzero: Vec<(f64, f64)> = pairs.iter().cloned().filter(|p| p.1 > 0.0).collect();
    for &(n, s) in &nonzero {
        if !(n > 0.0) {
            violations.push(format!("sup {s} with zero norm"));
        }
    }
    let usable: Vec<(f64, f64)> = nonzero.iter().cloned().filter(|p| p.0 > 0.0).collect();
    let small: Vec<_> = usable.iter().cloned().filter(|p| p.0 < 1.0).collect();
    let large: Vec<_> = usable.iter().cloned().filter(|p| p.0 >= 1.0).collect();
    let overall = log_slope(&usable);
    let mut fit = |subset: &[(f64, f64)], name: &str| -> f64 {
        let raw = log_slope(subset).or(overall).unwrap_or(1.0);
        if !(raw > 0.0 && raw <= 10.0) {
            violations.push(format!("{name} slope {raw} outside (0, 10]"));
        }
        raw.clamp(1e-3, 10.0)
    };
    let tau1 = fit(&small, "tau1");
    let tau2 = fit(&large, "tau2");
    let fitted_c = usable
        .iter()
        .map(|&(n, s)| s / n.powf(tau1).max(n.powf(tau2)))
        .fold(0.0, f64::max);
    if !fitted_c.is_finite() {
        violations.push("fitted constant is not finite".into());
    }
    LinfBoundReport {
        pairs: pairs.to_vec(),
        tau1,
        tau2,
        fitted_c,
        violations,
    }
}

/// `(||u||_{L^q~}, sup|u|)` for each solution, then [`fit_linf_bound`].
pub fn verify_linf_bound(solutions: &[GridFunction], q_tilde: &ScalarExponent) -> Result<LinfBoundReport> {
    let mut pairs = Vec::with_capacity(solutions.len());
    for u in solutions {
        let quad = CellQuadrature::new(u.grid(), CellRule::default());
        let t = lebesgue_terms(u, q_tilde, &quad);
        let norm = luxemburg_root(&t, u.sup_norm(), &LuxemburgOptions::default())?.lambda;
        pairs.push((norm, u.sup_norm()));
    }
    Ok(fit_linf_bound(&pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub k: f64,
    pub measure: f64,
    pub z: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionFit {
    pub k: f64,
    pub b: f64,
    pub ratios: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiTrace {
    pub k_star: f64,
    pub sup_norm: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub levels: Vec<LevelRecord>,
    /// First level with `Z_n = 0`.
    pub vanish_level: Option<usize>,
    pub fit: Option<RecursionFit>,
    pub assertions: Vec<Assertion>,
}

impl DeGiorgiTrace {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    /// `n,k_n,measure,z_n` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "k_n", "measure", "z_n"])?;
        for r in &self.levels {
            wtr.write_record([r.n.to_string(), format!("{:e}", r.k), format!("{:e}", r.measure), format!("{:e}", r.z)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Full trace `(k_n, |A_{k_n}|, Z_n)`, a fit of `(K, b)` to
/// `Z_{n+1} / (Z_n^{1+d1} + Z_n^{1+d2})` and per-level checks of
/// `int_{A_{k_{n+1}}} u^q <= 2^{(n+2)q+} Z_n` and
/// `|A_{k_{n+1}}| <= 2(1 + k_*^{-q+}) 2^{(n+1)q+} Z_n`.
pub fn degiorgi_on_solution(
    u: &GridFunction,
    q: &ScalarExponent,
    k_star: f64,
    n_max: usize,
    delta1: f64,
    delta2: f64,
) -> Result<DeGiorgiTrace> {
    if !(delta1 > 0.0 && delta2 >= delta1) {
        return Err(invalid("need delta2 >= delta1 > 0"));
    }
    let ks = levels(k_star, n_max)?;
    let quad = CellQuadrature::new(u.grid(), CellRule::default());
    let recs: Vec<LevelRecord> = ks
        .iter()
        .enumerate()
        .map(|(n, &k)| {
            level_values(u, q, k, &quad).map(|v| LevelRecord {
                n,
                k,
                measure: v.measure,
                z: v.z,
                mass: v.mass,
            })
        })
        .collect::<Result<_>>()?;
    let sup = u.sup_norm();
    let qp = q.upper();

    let mut assertions = Vec::new();
    assertions.push(Assertion::flag(
        "z_nonincreasing",
        recs.windows(2).all(|w| w[1].z <= w[0].z),
        "",
    ));
    assertions.push(Assertion::flag(
        "vanish_above_sup",
        recs.iter().filter(|r| r.k >= sup).all(|r| r.z == 0.0 && r.measure == 0.0),
        format!("Z_n = 0 once k_n >= {sup:e}"),
    ));
    let (mut worst_mass, mut worst_measure) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for w in recs.windows(2) {
        let n = w[0].n as f64;
        let rhs_mass = 2f64.powf((n + 2.0) * qp) * w[0].z;
        let rhs_meas = 2.0 * (1.0 + k_star.powf(-qp)) * 2f64.powf((n + 1.0) * qp) * w[0].z;
        worst_mass = worst_mass.max(w[1].mass - rhs_mass * (1.0 + 1e-12));
        worst_measure = worst_measure.max(w[1].measure - rhs_meas * (1.0 + 1e-12));
    }
    if recs.len() > 1 {
        assertions.push(
            Assertion::le("mass_estimate", worst_mass, 0.0, 0.0)
                .with_detail("max over n of int_{A_{k_{n+1}}} u^q - 2^{(n+2)q+} Z_n"),
        );
        assertions.push(
            Assertion::le("measure_estimate", worst_measure, 0.0, 0.0)
                .with_detail("max over n of |A_{k_{n+1}}| - 2(1+k_*^{-q+})2^{(n+1)q+} Z_n"),
        );
    }

    let ratios: Vec<(f64, f64)> = recs
        .windows(2)
        .filter(|w| w[0].z > 0.0 && w[1].z > 0.0)
        .map(|w| (w[0].n as f64, w[1].z / (w[0].z.powf(1.0 + delta1) + w[0].z.powf(1.0 + delta2))))
        .collect();
    let fit = if ratios.is_empty() {
        None
    } else {
        let b = if ratios.len() >= 2 {
            let n = ratios.len() as f64;
            let mx = ratios.iter().map(|r| r.0).sum::<f64>() / n;
            let my = ratios.iter().map(|r| r.1.ln()).sum::<f64>() / n;
            let sxx: f64 = ratios.iter().map(|r| (r.0 - mx).powi(2)).sum();
            let sxy: f64 = ratios.iter().map(|r| (r.0 - mx) * (r.1.ln() - my)).sum();
            (sxy / sxx).exp().max(1.0)
        } else {
            1.0
        };
        let k = ratios.iter().map(|r| r.1 / b.powf(r.0)).fold(0.0, f64::max);
        Some(RecursionFit { k, b, ratios: ratios.len() })
    };

    Ok(DeGiorgiTrace {
        k_star,
        sup_norm: sup,
        delta1,
        delta2,
        vanish_level: recs.iter().position(|r| r.z == 0.0),
        levels: recs,
        fit,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxDomain, Grid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    fn q2() -> ScalarExponent {
        ScalarExponent::constant(2.0).unwrap()
    }

    #[test]
    fn level_sequence() {
        let k = levels(1.0, 3).unwrap();
        assert_eq!(k, vec![1.0, 1.5, 1.75, 1.875]);
        assert_eq!(levels(2.0, 0).unwrap(), vec![2.0]);
        let k = levels(1.0, 10).unwrap();
        assert!((k[10] - 2.0).abs() < 1e-3);
        for n in 0..10 {
            assert_eq!(k[n + 1] - k[n], 0.5f64.powi(n as i32 + 1));
        }
        let k = levels(1.3, 30).unwrap();
        for n in 0..30 {
            assert_relative_eq!(k[n + 1] - k[n], 1.3 * 0.5f64.powi(n as i32 + 1), max_relative = 1e-6);
            assert!(k[n] < 2.6);
        }
        assert!(levels(0.0, 3).is_err());
    }

    #[test]
    fn level_functional_examples() {
        let u = GridFunction::interpolate(|_| 2.0, grid1(9), false).unwrap();
        let (z, m) = level_functional(&u, &q2(), 1.0).unwrap();
        assert_relative_eq!(z, 1.0, max_relative = 1e-12);
        assert_relative_eq!(m, 1.0, max_relative = 1e-12);
        assert_eq!(level_functional(&u, &q2(), 2.0).unwrap(), (0.0, 0.0));
        let x = GridFunction::interpolate(|x| x[0], grid1(33), false).unwrap();
        let (z, _) = level_functional(&x, &q2(), 0.5).unwrap();
        assert!((z - 1.0 / 24.0).abs() < 1e-4, "{z}");
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let (z, _) = level_functional(&x, &q2(), k as f64 / 20.0).unwrap();
            assert!(z <= prev);
            prev = z;
        }
    }

    #[test]
    fn threshold_examples() {
        let t = recursion_threshold(&RecursionParams::new(1.0, 2.0, 1.0, 1.0).unwrap());
        assert_relative_eq!(t.thr_a, 0.25);
        assert_relative_eq!(t.thr_b, 0.25);
        let t = recursion_threshold(&RecursionParams::new(0.5, 2.0, 1.0, 1.0).unwrap());
        assert_relative_eq!(t.thr_a, 0.5);
        assert!(RecursionParams::new(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(RecursionParams::new(1.0, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn recursion_examples() {
        let p = RecursionParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let r = simulate_recursion(&p, 0.25, 50).unwrap();
        assert_eq!(&r.z[..3], &[0.25, 0.125, 0.03125]);
        assert_eq!(r.verdict, Verdict::Converged);

        let p = RecursionParams::new(10.0, 4.0, 0.1, 0.1).unwrap();
        let thr = recursion_threshold(&p);
        let r = simulate_recursion(&p, 2.0 * thr.thr_a.max(thr.thr_b).max(1.0), 200).unwrap();
        assert_eq!(r.verdict, Verdict::Diverged);

        let p = RecursionParams::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let r = simulate_recursion(&p, 0.25, 200).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert_eq!(r.n0, Some(0));
        assert_eq!(r.tail_ok, Some(true));
    }

    #[test]
    fn kstar_examples() {
        let c = KStarConstants {
            c16: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            b: 2.0,
        };
        let s = kstar_select(&c, 1.0).unwrap();
        assert_relative_eq!(s.k_star, 8.0);
        assert!(s.system_holds);
        assert!(kstar_select(&c, 0.0).is_err());
        let c = KStarConstants {
            gamma2: 2.5,
            delta2: 1.7,
            ..c
        };
        let mut prev = 0.0;
        for k in 0..40 {
            let m = 10f64.powf(-4.0 + 0.2 * k as f64);
            let s = kstar_select(&c, m).unwrap();
            assert!(s.k_star >= prev);
            assert!(s.system_holds, "{s:?}");
            prev = s.k_star;
        }
    }

    #[test]
    fn linf_fit() {
        let z = GridFunction::zeros(grid1(9), true);
        let r = verify_linf_bound(&[z.clone(), z.clone(), z], &q2()).unwrap();
        assert!(r.passed());
        assert_eq!(r.fitted_c, 0.0);

        let base = GridFunction::interpolate(|x| x[0] * (1.0 - x[0]), grid1(17), true).unwrap();
        let fam: Vec<GridFunction> = [0.1, 0.5, 2.0, 8.0, 30.0].iter().map(|&a| base.scale(a)).collect();
        let r = verify_linf_bound(&fam, &q2()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_relative_eq!(r.tau1, 1.0, max_relative = 1e-6);

        let adv: Vec<(f64, f64)> = r.pairs.iter().map(|p| (p.0, 1e6)).collect();
        assert!(!fit_linf_bound(&adv).violations.is_empty());
    }

    #[test]
    fn trace_on_linear_function() {
        let u = GridFunction::interpolate(|x| x[0], grid1(41), false).unwrap();
        let t = degiorgi_on_solution(&u, &q2(), 0.3, 10, 1.0, 1.0).unwrap();
        assert!((t.levels[0].z - 0.7f64.powi(3) / 3.0).abs() < 1e-4);
        for w in t.levels.windows(2) {
            if w[0].z > 0.0 {
                assert!(w[1].z < w[0].z);
            }
        }
        assert!(t.passed(), "{:?}", t.assertions);

        let t = degiorgi_on_solution(&u, &q2(), 1.0, 10, 1.0, 1.0).unwrap();
        assert!(t.levels.iter().all(|r| r.z == 0.0));
        assert_eq!(t.vanish_level, Some(0));
    }

    proptest! {
        #[test]
        fn tail_bound_under_hypothesis(
            k in 0.5f64..20.0, b in 1.0f64..8.0, d1 in 0.1f64..2.0, extra in 0.0f64..1.5, frac in 0.01f64..1.0,
        ) {
            let p = RecursionParams::new(k, b, d1, d1 + extra).unwrap();
            let thr = recursion_threshold(&p);
            let r = simulate_recursion(&p, frac * thr.thr_a, 400).unwrap();
            prop_assert!(r.hypothesis);
            prop_assert_eq!(r.tail_ok, Some(true));
        }
    }
}
