//! Variable exponents `q(x)` and symmetric pair exponents `p(x, y)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BoxDomain;
use crate::quadrature::Halton;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Default number of validation samples per axis.
pub const DEFAULT_SAMPLES: usize = 64;

/// Piecewise polynomial in one variable, `c_0 + c_1 (t - t_i) + ...` on `[t_i, t_{i+1}]`.
/// Arguments outside the break range are clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    pub breaks: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() < 2 || coeffs.len() != breaks.len() - 1 {
            return Err(Error::Exponent(
                "table needs k+1 increasing breaks and k coefficient lists".into(),
            ));
        }
        if !breaks.windows(2).all(|w| w[0] < w[1]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::Exponent("table breaks must be finite and increasing".into()));
        }
        if coeffs.iter().any(|c| c.is_empty() || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Exponent("table coefficients must be finite and non-empty".into()));
        }
        Ok(Self { breaks, coeffs })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.coeffs.len();
        let t = t.clamp(self.breaks[0], self.breaks[n]);
        let i = self.breaks[1..n].partition_point(|&b| b <= t);
        let dt = t - self.breaks[i];
        self.coeffs[i].iter().rev().fold(0.0, |acc, c| acc * dt + c)
    }
}

#[derive(Clone)]
pub enum ScalarKind {
    Constant(f64),
    Affine { c0: f64, grad: Vec<f64> },
    Trace(PairExponent),
    Max(Box<ScalarExponent>, Box<ScalarExponent>),
    Conjugate(Box<ScalarExponent>),
    /// Piecewise polynomial in the first coordinate.
    Table(PiecewisePoly),
    Custom(ScalarFn),
}

/// Exponent `q : Omega -> (1, inf)` with validated bounds.
#[derive(Clone)]
pub struct ScalarExponent {
    kind: ScalarKind,
    lower: f64,
    upper: f64,
}

impl fmt::Debug for ScalarExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExponent({}, [{}, {}])", self.describe(), self.lower, self.upper)
    }
}

fn sample_box(domain: &BoxDomain, samples: usize) -> Vec<[f64; 2]> {
    let n = samples.max(2);
    let dim = domain.dim();
    let coord = |k: usize, i: usize| {
        domain.lower()[k] + domain.width(k) * i as f64 / (n - 1) as f64
    };
    let mut pts = Vec::new();
    if dim == 1 {
        for i in 0..n {
            pts.push([coord(0, i), 0.0]);
        }
    } else {
        for j in 0..n {
            for i in 0..n {
                pts.push([coord(0, i), coord(1, j)]);
            }
        }
    }
    pts
}

fn check_bounds(lower: f64, upper: f64) -> Result<()> {
    if !(lower.is_finite() && upper.is_finite()) || lower <= 1.0 || lower > upper {
        return Err(Error::Exponent(format!(
            "bounds must satisfy 1 < lower <= upper < inf, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

impl ScalarExponent {
    pub fn constant(c: f64) -> Result<Self> {
        check_bounds(c, c)?;
        Ok(Self {
            kind: ScalarKind::Constant(c),
            lower: c,
            upper: c,
        })
    }

    /// `c0 + grad . x`; bounds are exact (attained at box corners).
    pub fn affine(c0: f64, grad: &[f64], domain: &BoxDomain) -> Result<Self> {
        if grad.len() != domain.dim() {
            return Err(Error::Exponent("gradient length must equal dimension".into()));
        }
        let (mut lo, mut hi) = (c0, c0);
        for (k, g) in grad.iter().enumerate() {
            let a = g * domain.lower()[k];
            let b = g * domain.upper()[k];
            lo += a.min(b);
            hi += a.max(b);
        }
        check_bounds(lo, hi)?;
        Ok(Self {
            kind: ScalarKind::Affine {
                c0,
                grad: grad.to_vec(),
            },
            lower: lo,
            upper: hi,
        })
    }

    /// Diagonal trace `x -> p(x, x)`, carrying the bounds of `p`.
    pub fn trace(p: &PairExponent, domain: &BoxDomain, samples: usize) -> Result<Self> {
        let kind = ScalarKind::Trace(p.clone());
        Self::validated(kind, Some((p.lower(), p.upper())), domain, samples)
    }

    /// Pointwise maximum.
    pub fn max(a: &ScalarExponent, b: &ScalarExponent) -> Self {
        Self {
            lower: a.lower.max(b.lower),
            upper: a.upper.max(b.upper),
            kind: ScalarKind::Max(Box::new(a.clone()), Box::new(b.clone())),
        }
    }

    /// Conjugate exponent `q / (q - 1)`.
    pub fn conjugate(q: &ScalarExponent) -> Self {
        let c = |t: f64| t / (t - 1.0);
        Self {
            lower: c(q.upper),
            upper: c(q.lower),
            kind: ScalarKind::Conjugate(Box::new(q.clone())),
        }
    }

    /// Piecewise polynomial in `x_1`. Without declared bounds the sampled range is used.
    pub fn table(
        table: PiecewisePoly,
        bounds: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        Self::validated(ScalarKind::Table(table), bounds, domain, samples)
    }

    pub fn custom(
        f: ScalarFn,
        bounds: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        Self::validated(ScalarKind::Custom(f), bounds, domain, samples)
    }

    fn validated(
        kind: ScalarKind,
        declared: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        let mut probe = Self {
            kind,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
        let dim = domain.dim();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in sample_box(domain, samples) {
            let v = probe.eval(&x[..dim]);
            if !v.is_finite() {
                return Err(Error::Exponent(format!("non-finite value at {:?}", &x[..dim])));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let (dl, du) = declared.unwrap_or((lo, hi));
        check_bounds(dl, du)?;
        if lo < dl || hi > du {
            return Err(Error::Exponent(format!(
                "sampled range [{lo}, {hi}] violates declared bounds [{dl}, {du}]"
            )));
        }
        probe.lower = dl;
        probe.upper = du;
        Ok(probe)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ScalarKind::Constant(c) => *c,
            ScalarKind::Affine { c0, grad } => {
                c0 + grad.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
            }
            ScalarKind::Trace(p) => p.eval(x, x),
            ScalarKind::Max(a, b) => a.eval(x).max(b.eval(x)),
            ScalarKind::Conjugate(q) => {
                let t = q.eval(x);
                t / (t - 1.0)
            }
            ScalarKind::Table(t) => t.eval(x[0]),
            ScalarKind::Custom(f) => f(x),
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_constant(&self) -> bool {
        self.lower == self.upper
    }

    pub fn kind(&self) -> &ScalarKind {
        &self.kind
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ScalarKind::Constant(c) => format!("constant({c})"),
            ScalarKind::Affine { c0, grad } => format!("affine({c0}, {grad:?})"),
            ScalarKind::Trace(p) => format!("trace({})", p.describe()),
            ScalarKind::Max(a, b) => format!("max({}, {})", a.describe(), b.describe()),
            ScalarKind::Conjugate(q) => format!("conjugate({})", q.describe()),
            ScalarKind::Table(_) => "table".into(),
            ScalarKind::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Clone)]
pub enum PairKind {
    Constant(f64),
    /// `p0 + |x - y| xi(x, y)` with a plateau-mollifier cutoff `xi`.
    Example43 {
        p0: f64,
        radius: f64,
        hull_lower: Vec<f64>,
        hull_upper: Vec<f64>,
        decay: f64,
    },
    /// `p0 + slope * (c(x_1) + c(y_1)) / 2`, `c` clamping to the domain.
    AffineTrace {
        p0: f64,
        slope: f64,
        lo: f64,
        hi: f64,
    },
    /// Piecewise polynomial of the clamped midpoint coordinate `(x_1 + y_1) / 2`.
    Table(PiecewisePoly),
    Custom(PairFn),
}

/// Symmetric pair exponent with bounds and fractional order `s`.
#[derive(Clone)]
pub struct PairExponent {
    kind: PairKind,
    lower: f64,
    upper: f64,
    s: f64,
}

impl fmt::Debug for PairExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PairExponent({}, [{}, {}], s={})",
            self.describe(),
            self.lower,
            self.upper,
            self.s
        )
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Exponent(format!("fractional order must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// Standard mollifier profile on `[0, 1)`, 0 beyond.
fn mollifier(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn dist2_to_interval(v: f64, lo: f64, hi: f64) -> f64 {
    let d = (lo - v).max(v - hi).max(0.0);
    d * d
}

impl PairExponent {
    pub fn constant(p: f64, s: f64) -> Result<Self> {
        check_order(s)?;
        check_bounds(p, p)?;
        Ok(Self {
            kind: PairKind::Constant(p),
            lower: p,
            upper: p,
            s,
        })
    }

    /// `p0 + |x - y| xi_R(x, y)`: `xi_R = 1` on the hull `Omega x Omega`, then decays
    /// along the distance `d` to the hull as `exp(1 - 1/(1 - (d/w)^2))` with
    /// `w = R - max |z|` over the hull, so that the support lies in the ball of radius `R`.
    pub fn example(p0: f64, radius: f64, s: f64, domain: &BoxDomain) -> Result<Self> {
        check_order(s)?;
        if !(p0 > 1.0 && p0.is_finite()) {
            return Err(Error::Exponent(format!("p0 must exceed 1, got {p0}")));
        }
        let reach = std::f64::consts::SQRT_2 * domain.max_norm();
        if !(radius > reach) {
            return Err(Error::Exponent(format!(
                "Omega x Omega must lie inside the ball of radius {radius}; need R > {reach}"
            )));
        }
        Ok(Self {
            kind: PairKind::Example43 {
                p0,
                radius,
                hull_lower: domain.lower().to_vec(),
                hull_upper: domain.upper().to_vec(),
                decay: radius - reach,
            },
            lower: p0,
            upper: p0 + std::f64::consts::SQRT_2 * radius,
            s,
        })
    }

    /// `p0 + slope * (x_1 + y_1) / 2` with coordinates clamped to the domain.
    pub fn affine_trace(p0: f64, slope: f64, s: f64, domain: &BoxDomain) -> Result<Self> {
        check_order(s)?;
        let (lo, hi) = (domain.lower()[0], domain.upper()[0]);
        let (a, b) = (p0 + slope * lo, p0 + slope * hi);
        check_bounds(a.min(b), a.max(b))?;
        Ok(Self {
            kind: PairKind::AffineTrace { p0, slope, lo, hi },
            lower: a.min(b),
            upper: a.max(b),
            s,
        })
    }

    pub fn table(
        table: PiecewisePoly,
        s: f64,
        bounds: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        Self::validated(PairKind::Table(table), s, bounds, domain, samples)
    }

    /// User closure; symmetry and bounds are checked on sampled pairs.
    pub fn custom(
        f: PairFn,
        s: f64,
        bounds: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        Self::validated(PairKind::Custom(f), s, bounds, domain, samples)
    }

    fn validated(
        kind: PairKind,
        s: f64,
        declared: Option<(f64, f64)>,
        domain: &BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        check_order(s)?;
        let mut probe = Self {
            kind,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            s,
        };
        let (lo, hi) = probe.validate_on(domain, samples)?;
        let (dl, du) = declared.unwrap_or((lo, hi));
        check_bounds(dl, du)?;
        if lo < dl || hi > du {
            return Err(Error::Exponent(format!(
                "sampled range [{lo}, {hi}] violates declared bounds [{dl}, {du}]"
            )));
        }
        probe.lower = dl;
        probe.upper = du;
        Ok(probe)
    }

    /// Sampled range over `Omega x Omega`; errors on asymmetry or non-finite values.
    /// Uses `samples` points per axis in 1D and at most 16 per axis in 2D.
    pub fn validate_on(&self, domain: &BoxDomain, samples: usize) -> Result<(f64, f64)> {
        let dim = domain.dim();
        let per_axis = if dim == 1 { samples } else { samples.min(16) };
        let pts = sample_box(domain, per_axis);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, x) in pts.iter().enumerate() {
            for y in &pts[i..] {
                let a = self.eval(&x[..dim], &y[..dim]);
                let b = self.eval(&y[..dim], &x[..dim]);
                if !a.is_finite() {
                    return Err(Error::Exponent(format!(
                        "non-finite value at ({:?}, {:?})",
                        &x[..dim],
                        &y[..dim]
                    )));
                }
                if a != b {
                    return Err(Error::Exponent(format!(
                        "asymmetric at ({:?}, {:?}): {a} vs {b}",
                        &x[..dim],
                        &y[..dim]
                    )));
                }
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        Ok((lo, hi))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            PairKind::Constant(p) => *p,
            PairKind::Example43 {
                p0,
                radius: _,
                hull_lower,
                hull_upper,
                decay,
            } => {
                let mut diff2 = 0.0;
                let (mut dx, mut dy) = (0.0, 0.0);
                for k in 0..x.len() {
                    diff2 += (x[k] - y[k]) * (x[k] - y[k]);
                    dx += dist2_to_interval(x[k], hull_lower[k], hull_upper[k]);
                    dy += dist2_to_interval(y[k], hull_lower[k], hull_upper[k]);
                }
                let d = (dx + dy).sqrt();
                let xi = if d == 0.0 { 1.0 } else { mollifier(d / decay) };
                p0 + diff2.sqrt() * xi
            }
            PairKind::AffineTrace { p0, slope, lo, hi } => {
                p0 + slope * (x[0].clamp(*lo, *hi) + y[0].clamp(*lo, *hi)) * 0.5
            }
            PairKind::Table(t) => t.eval((x[0] + y[0]) * 0.5),
            PairKind::Custom(f) => f(x, y),
        }
    }

    /// Diagonal value `p(x, x)`.
    #[inline]
    pub fn trace_at(&self, x: &[f64]) -> f64 {
        self.eval(x, x)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn is_constant(&self) -> bool {
        self.lower == self.upper
    }

    pub fn kind(&self) -> &PairKind {
        &self.kind
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            PairKind::Constant(p) => format!("constant({p})"),
            PairKind::Example43 { p0, radius, .. } => format!("example_4_3(p0={p0}, R={radius})"),
            PairKind::AffineTrace { p0, slope, .. } => format!("affine_trace({p0}, {slope})"),
            PairKind::Table(_) => "table".into(),
            PairKind::Custom(_) => "custom".into(),
        }
    }
}

/// `N p(x,x) / (N - s p(x,x))`.
pub fn critical_exponent(p: &PairExponent, x: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let px = p.trace_at(x);
    let sp = p.s() * px;
    if sp >= n {
        return Err(Error::Supercritical { sp, dim: x.len() });
    }
    Ok(n * px / (n - sp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHolderEntry {
    pub epsilon: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHolderReport {
    /// Minimum over the tested radii of the per-radius supremum.
    pub sup_value: f64,
    pub per_epsilon: Vec<LogHolderEntry>,
    pub pairs_used: usize,
}

/// Number of quasi-random points used for each inner infimum.
pub const BALL_SAMPLES: usize = 32;

/// Sampled surrogate of the log-Holder type condition near the diagonal.
///
/// Pairs `(x, y)` have `x` quasi-uniform in the domain and `|x - y|` log-uniform in
/// `(1e-6, 1/2)`. The infimum over the ball of radius `eps` around `(x, y)` in
/// `R^N x R^N` is estimated from the centre plus [`BALL_SAMPLES`] fixed offsets.
pub fn check_log_holder(
    p: &PairExponent,
    domain: &BoxDomain,
    epsilons: &[f64],
    samples: usize,
) -> Result<LogHolderReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("epsilons must be non-empty and positive".into()));
    }
    let dim = domain.dim();
    let ball = ball_offsets(2 * dim, BALL_SAMPLES);

    let mut pairs = Vec::with_capacity(samples);
    let mut seq = Halton::new(dim + 2);
    let mut u = [0.0; 4];
    let (t_min, t_max): (f64, f64) = (1e-6, 0.5);
    let mut attempts = 0usize;
    while pairs.len() < samples && attempts < 64 * samples {
        attempts += 1;
        seq.next_point(&mut u[..dim + 2]);
        let mut x = [0.0; 2];
        for k in 0..dim {
            x[k] = domain.lower()[k] + domain.width(k) * u[k];
        }
        let t = (t_min.ln() + u[dim] * (t_max.ln() - t_min.ln())).exp();
        let mut y = x;
        if dim == 1 {
            y[0] += if u[dim + 1] < 0.5 { t } else { -t };
        } else {
            let th = 2.0 * std::f64::consts::PI * u[dim + 1];
            y[0] += t * th.cos();
            y[1] += t * th.sin();
        }
        let dist = (0..dim).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt();
        if !(dist > 0.0 && dist < 0.5) || !domain.contains(&y[..dim]) {
            continue;
        }
        pairs.push((x, y, dist));
    }

    let mut per_epsilon = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut sup: f64 = 0.0;
        for (x, y, dist) in &pairs {
            let centre = p.eval(&x[..dim], &y[..dim]);
            let mut inf = centre;
            for off in &ball {
                let mut xs = [0.0; 2];
                let mut ys = [0.0; 2];
                for k in 0..dim {
                    xs[k] = x[k] + eps * off[k];
                    ys[k] = y[k] + eps * off[dim + k];
                }
                inf = inf.min(p.eval(&xs[..dim], &ys[..dim]));
            }
            sup = sup.max((centre - inf).abs() * (1.0 / dist).ln());
        }
        per_epsilon.push(LogHolderEntry { epsilon: eps, sup });
    }
    let sup_value = per_epsilon.iter().map(|e| e.sup).fold(f64::INFINITY, f64::min);
    Ok(LogHolderReport {
        sup_value,
        per_epsilon,
        pairs_used: pairs.len(),
    })
}

/// Quasi-random points of the closed unit ball in `R^d` by rejection from Halton points.
fn ball_offsets(d: usize, count: usize) -> Vec<[f64; 4]> {
    let mut seq = Halton::new(d);
    let mut out = Vec::with_capacity(count);
    let mut u = [0.0; 4];
    while out.len() < count {
        seq.next_point(&mut u[..d]);
        let mut v = [0.0; 4];
        let mut r2 = 0.0;
        for k in 0..d {
            v[k] = 2.0 * u[k] - 1.0;
            r2 += v[k] * v[k];
        }
        if r2 <= 1.0 {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit1() -> BoxDomain {
        BoxDomain::unit(1).unwrap()
    }

    #[test]
    fn critical_exponent_examples() {
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        assert_relative_eq!(critical_exponent(&p, &[0.3, 0.3]).unwrap(), 4.0);
        let p = PairExponent::constant(1.5, 0.5).unwrap();
        assert_relative_eq!(critical_exponent(&p, &[0.3]).unwrap(), 6.0);
        let p = PairExponent::constant(1.2, 0.9).unwrap();
        assert!(matches!(
            critical_exponent(&p, &[0.3]),
            Err(Error::Supercritical { .. })
        ));
    }

    #[test]
    fn critical_exponent_increasing_in_order() {
        let x = [0.5, 0.5];
        let mut prev = 0.0;
        for k in 1..20 {
            let s = k as f64 * 0.045;
            let p = PairExponent::constant(2.0, s).unwrap();
            let c = critical_exponent(&p, &x).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(PairExponent::constant(1.0, 0.5).is_err());
        assert!(PairExponent::constant(2.0, 1.0).is_err());
        assert!(ScalarExponent::constant(0.9).is_err());
        assert!(PairExponent::example(1.0, 2.0, 0.5, &unit1()).is_err());
        assert!(PairExponent::example(2.0, 1.0, 0.5, &unit1()).is_err());
        let bad: PairFn = Arc::new(|x, y| 2.0 + 0.1 * (x[0] - y[0]));
        assert!(PairExponent::custom(bad, 0.5, None, &unit1(), 16).is_err());
        let ok: ScalarFn = Arc::new(|x| 2.0 + x[0]);
        assert!(ScalarExponent::custom(ok.clone(), Some((2.0, 2.5)), &unit1(), 16).is_err());
        assert!(ScalarExponent::custom(ok, Some((2.0, 3.0)), &unit1(), 16).is_ok());
    }

    #[test]
    fn example_exponent_values() {
        let d = BoxDomain::interval(-0.5, 0.5).unwrap();
        let p = PairExponent::example(2.0, 1.0, 0.25, &d).unwrap();
        assert_eq!(p.eval(&[0.2], &[0.2]), 2.0);
        assert_relative_eq!(p.eval(&[0.1], &[-0.3]), 2.4, epsilon = 1e-15);
        // outside the ball of radius R
        assert_eq!(p.eval(&[0.8], &[-0.7]), 2.0);
        let v = p.eval(&[0.55], &[-0.5]);
        assert!(v > 2.0 && v < 3.05);
    }

    #[test]
    fn example_exponent_symmetric_random() {
        let d = BoxDomain::new(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        let p = PairExponent::example(1.8, 1.5, 0.3, &d).unwrap();
        let mut seq = Halton::new(4);
        let mut u = [0.0; 4];
        for _ in 0..100 {
            seq.next_point(&mut u);
            let x = [3.0 * u[0] - 1.5, 3.0 * u[1] - 1.5];
            let y = [3.0 * u[2] - 1.5, 3.0 * u[3] - 1.5];
            assert_eq!(p.eval(&x, &y), p.eval(&y, &x));
            assert!(p.eval(&x, &y) >= p.lower() && p.eval(&x, &y) <= p.upper());
        }
    }

    #[test]
    fn log_holder_constant_is_zero() {
        let p = PairExponent::constant(2.0, 0.5).unwrap();
        let r = check_log_holder(&p, &unit1(), &[0.01, 0.1, 1.0], 200).unwrap();
        assert_eq!(r.sup_value, 0.0);
        assert!(r.per_epsilon.iter().all(|e| e.sup == 0.0));
    }

    #[test]
    fn log_holder_example_below_inverse_e() {
        let d = BoxDomain::interval(-0.5, 0.5).unwrap();
        let p = PairExponent::example(2.0, 1.0, 0.25, &d).unwrap();
        let r = check_log_holder(&p, &d, &[0.1], 500).unwrap();
        assert!(r.sup_value.is_finite());
        assert!(r.sup_value <= (-1.0f64).exp());
        assert!(r.sup_value > 0.0);
    }

    #[test]
    fn log_holder_slow_modulus_is_large() {
        let f: PairFn = Arc::new(|x, y| {
            let t = (x[0] - y[0]).abs();
            if t == 0.0 || t >= 0.5 {
                2.0
            } else {
                2.0 + 1.0 / (1.0 / t).ln()
            }
        });
        let d = unit1();
        let p = PairExponent::custom(f, 0.3, None, &d, 64).unwrap();
        let r = check_log_holder(&p, &d, &[1.0], 400).unwrap();
        // oracle: the same pairs against the exact diagonal infimum 2 give sup < 1
        assert!(r.sup_value > 0.5 && r.sup_value <= 1.0 + 1e-12, "{}", r.sup_value);
    }

    #[test]
    fn table_exponents() {
        let t = PiecewisePoly::new(vec![0.0, 0.5, 1.0], vec![vec![2.0, 1.0], vec![2.5, -1.0]]).unwrap();
        assert_relative_eq!(t.eval(0.25), 2.25);
        assert_relative_eq!(t.eval(0.75), 2.25);
        assert_relative_eq!(t.eval(2.0), 2.0);
        let q = ScalarExponent::table(t.clone(), None, &unit1(), 65).unwrap();
        assert_relative_eq!(q.upper(), 2.5);
        assert_relative_eq!(q.lower(), 2.0);
        let p = PairExponent::table(t, 0.4, None, &unit1(), 33).unwrap();
        assert_eq!(p.eval(&[0.1], &[0.9]), p.eval(&[0.9], &[0.1]));
    }

    #[test]
    fn conjugate_and_max_bounds() {
        let d = unit1();
        let q = ScalarExponent::affine(2.0, &[1.0], &d).unwrap();
        let c = ScalarExponent::conjugate(&q);
        assert_relative_eq!(c.lower(), 1.5);
        assert_relative_eq!(c.upper(), 2.0);
        assert_relative_eq!(c.eval(&[0.0]), 2.0);
        let m = ScalarExponent::max(&q, &ScalarExponent::constant(2.5).unwrap());
        assert_eq!(m.eval(&[0.0]), 2.5);
        assert_eq!(m.eval(&[1.0]), 3.0);
    }

    proptest! {
        #[test]
        fn builtins_are_exactly_symmetric(
            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, y0 in -2.0f64..2.0, y1 in -2.0f64..2.0,
            p0 in 1.1f64..3.0, slope in -0.5f64..0.5,
        ) {
            let d = BoxDomain::new(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
            let exps = [
                PairExponent::constant(p0, 0.5).unwrap(),
                PairExponent::example(p0, 1.2, 0.5, &d).unwrap(),
                PairExponent::affine_trace(p0 + 0.5, slope, 0.5, &d).unwrap(),
            ];
            let (x, y) = ([x0, x1], [y0, y1]);
            for p in &exps {
                prop_assert_eq!(p.eval(&x, &y), p.eval(&y, &x));
                prop_assert_eq!(p.eval(&x[..1], &y[..1]), p.eval(&y[..1], &x[..1]));
            }
        }
    }
}
