//! Nonlinearities `f(x, t)` with primitives, the cutoff `rho` and the modified
//! nonlinearity `F~ = rho F + (1 - rho) beta |t|^{p-}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::ScalarExponent;
use crate::grid::BoxDomain;
use crate::quadrature::Halton;
use crate::report::Assertion;

pub type NonlinearFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Built-in description of a nonlinearity, kept for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityTag {
    Zero,
    /// `lambda |t|^(r-2) t - |t|^(q-2) t`.
    Prototype { lambda: f64, r: String, q: String },
    Modified { base: Box<NonlinearityTag>, t2: f64, beta: f64, p_minus: f64 },
    Custom(String),
}

#[derive(Clone)]
pub struct Nonlinearity {
    f: NonlinearFn,
    primitive: NonlinearFn,
    /// `(C, q)` with `|f(x,t)| <= C (1 + |t|^(q(x)-1))`.
    pub growth: (f64, ScalarExponent),
    /// `f` is odd in `t` for `|t| < odd_radius`.
    pub odd_radius: f64,
    pub tag: NonlinearityTag,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("growth", &(self.growth.0, self.growth.1.describe()))
            .field("odd_radius", &self.odd_radius)
            .field("tag", &self.tag)
            .finish()
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        let z: NonlinearFn = Arc::new(|_, _| 0.0);
        Self {
            f: z.clone(),
            primitive: z,
            growth: (0.0, ScalarExponent::constant(2.0).expect("valid constant")),
            odd_radius: f64::INFINITY,
            tag: NonlinearityTag::Zero,
        }
    }

    /// `f = lambda |t|^(r-2) t - |t|^(q-2) t` with `r <= q` pointwise.
    pub fn prototype(lambda: f64, r: &ScalarExponent, q: &ScalarExponent) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if r.upper() > q.lower() {
            return Err(invalid("prototype needs r(x) <= q(x)"));
        }
        let (r1, q1) = (r.clone(), q.clone());
        let f: NonlinearFn = Arc::new(move |x, t| {
            if t == 0.0 {
                return 0.0;
            }
            let a = t.abs();
            t.signum() * (lambda * a.powf(r1.eval(x) - 1.0) - a.powf(q1.eval(x) - 1.0))
        });
        let (r2, q2) = (r.clone(), q.clone());
        let primitive: NonlinearFn = Arc::new(move |x, t| {
            if t == 0.0 {
                return 0.0;
            }
            let a = t.abs();
            let (re, qe) = (r2.eval(x), q2.eval(x));
            lambda * a.powf(re) / re - a.powf(qe) / qe
        });
        Ok(Self {
            f,
            primitive,
            growth: (lambda + 1.0, q.clone()),
            odd_radius: f64::INFINITY,
            tag: NonlinearityTag::Prototype {
                lambda,
                r: r.describe(),
                q: q.describe(),
            },
        })
    }

    /// User-supplied `f` and its primitive `F` with `F(x, 0) = 0`.
    pub fn custom(
        f: NonlinearFn,
        primitive: NonlinearFn,
        growth: (f64, ScalarExponent),
        odd_radius: f64,
        name: impl Into<String>,
    ) -> Self {
        Self {
            f,
            primitive,
            growth,
            odd_radius,
            tag: NonlinearityTag::Custom(name.into()),
        }
    }

    #[inline]
    pub fn f(&self, x: &[f64], t: f64) -> f64 {
        (self.f)(x, t)
    }

    /// Primitive `F(x, t) = int_0^t f(x, s) ds`.
    #[inline]
    pub fn primitive(&self, x: &[f64], t: f64) -> f64 {
        (self.primitive)(x, t)
    }

    /// Sampled growth, primitive and oddness checks on `x_samples` Halton points
    /// times a symmetric log-spaced `t` grid up to `t_max`.
    pub fn check(&self, domain: &BoxDomain, x_samples: usize, t_max: f64) -> Vec<Assertion> {
        let dim = domain.dim();
        let ts = t_grid(t_max, 40);
        let (c, q) = (&self.growth.0, &self.growth.1);
        let mut worst_growth = f64::NEG_INFINITY;
        let mut worst_deriv: f64 = 0.0;
        let mut worst_odd: f64 = 0.0;
        for x in sample_points(domain, x_samples) {
            let x = &x[..dim];
            for &t in &ts {
                let fx = self.f(x, t);
                worst_growth = worst_growth.max(fx.abs() - c * (1.0 + t.abs().powf(q.eval(x) - 1.0)));
                let h = 1e-6 * t.abs().max(1e-3);
                let fd = (self.primitive(x, t + h) - self.primitive(x, t - h)) / (2.0 * h);
                let rel = (fd - fx).abs() / fx.abs().max(1e-8);
                worst_deriv = worst_deriv.max(rel);
                if t.abs() < self.odd_radius {
                    let odd = (self.f(x, -t) + fx).abs() / fx.abs().max(1e-300);
                    worst_odd = worst_odd.max(odd);
                }
            }
        }
        vec![
            Assertion::le("growth", worst_growth, 0.0, 1e-12).with_detail("max |f| - C(1+|t|^(q-1))"),
            Assertion::le("primitive_derivative", worst_deriv, 1e-5, 0.0),
            Assertion::le("oddness", worst_odd, 1e-12, 0.0),
        ]
    }
}

/// Symmetric grid `+-t_max * 10^(-6 k / n)`, `k = 0..n`.
fn t_grid(t_max: f64, n: usize) -> Vec<f64> {
    let mut ts = Vec::with_capacity(2 * n + 2);
    for k in 0..=n {
        let t = t_max * 10f64.powf(-6.0 * k as f64 / n as f64);
        ts.push(t);
        ts.push(-t);
    }
    ts
}

fn sample_points(domain: &BoxDomain, n: usize) -> Vec<[f64; 2]> {
    let dim = domain.dim();
    let mut h = Halton::new(dim);
    let mut out = Vec::with_capacity(n);
    let mut u = [0.0; 2];
    for _ in 0..n {
        h.next_point(&mut u[..dim]);
        let mut x = [0.0; 2];
        for k in 0..dim {
            x[k] = domain.lower()[k] + domain.width(k) * u[k];
        }
        out.push(x);
    }
    out
}

/// Smooth even cutoff equal to 1 on `[-t2, t2]` and 0 outside `[-2 t2, 2 t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub t2: f64,
}

impl Cutoff {
    pub fn rho(&self, t: f64) -> f64 {
        let tau = ((t.abs() - self.t2) / self.t2).clamp(0.0, 1.0);
        1.0 - smoothstep(tau)
    }

    pub fn rho_prime(&self, t: f64) -> f64 {
        let tau = (t.abs() - self.t2) / self.t2;
        if tau <= 0.0 || tau >= 1.0 {
            return 0.0;
        }
        -t.signum() * 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / self.t2
    }

    /// Sampled checks of evenness, support, `|rho'| <= 2/t2` and `rho'(t) t <= 0`.
    pub fn check(&self, samples: usize) -> Vec<Assertion> {
        let mut even: f64 = 0.0;
        let mut support = true;
        let mut slope: f64 = 0.0;
        let mut sign = true;
        for k in 0..=samples {
            let t = 3.0 * self.t2 * k as f64 / samples as f64;
            even = even.max((self.rho(t) - self.rho(-t)).abs());
            if (t <= self.t2 && self.rho(t) != 1.0) || (t >= 2.0 * self.t2 && self.rho(t) != 0.0) {
                support = false;
            }
            slope = slope.max(self.rho_prime(t).abs().max(self.rho_prime(-t).abs()));
            sign &= self.rho_prime(t) * t <= 0.0 && self.rho_prime(-t) * -t <= 0.0;
        }
        vec![
            Assertion::close("rho_even", even, 0.0, 0.0),
            Assertion::flag("rho_support", support, "rho = 1 on [0,t2], 0 beyond 2 t2"),
            Assertion::le("rho_slope", slope * self.t2, 2.0, 0.0).with_detail("max |rho'| t2"),
            Assertion::flag("rho_sign", sign, "rho'(t) t <= 0"),
        ]
    }
}

fn smoothstep(tau: f64) -> f64 {
    tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
}

/// Quintic smoothstep cutoff on `[t2, 2 t2]`.
pub fn cutoff_default(t2: f64) -> Result<Cutoff> {
    if !(t2 > 0.0 && t2.is_finite()) {
        return Err(invalid(format!("t2 must be positive, got {t2}")));
    }
    Ok(Cutoff { t2 })
}

/// Cutoff with the tail coefficient `beta` and the exponent `p-` it multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub cutoff: Cutoff,
    pub beta: f64,
    pub p_minus: f64,
}

/// `min{1/p-, 1/(p+ 2^{p-} C^{p-})}`, the open upper bound for `beta`.
pub fn beta_limit(p_minus: f64, p_plus: f64, c_imb: f64) -> f64 {
    (1.0 / p_minus).min(1.0 / (p_plus * 2f64.powf(p_minus) * c_imb.powf(p_minus)))
}

impl CutoffProfile {
    pub fn new(t2: f64, beta: f64, p_minus: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if !(p_minus > 1.0) {
            return Err(invalid(format!("p- must exceed 1, got {p_minus}")));
        }
        Ok(Self {
            cutoff: cutoff_default(t2)?,
            beta,
            p_minus,
        })
    }

    /// `beta = 0.9 * beta_limit(p-, p+, c_imb)`.
    pub fn with_default_beta(t2: f64, p_minus: f64, p_plus: f64, c_imb: f64) -> Result<Self> {
        if !(c_imb > 0.0 && c_imb.is_finite()) {
            return Err(Error::Estimation(format!("imbedding constant {c_imb}")));
        }
        Self::new(t2, 0.9 * beta_limit(p_minus, p_plus, c_imb), p_minus)
    }

    pub fn t2(&self) -> f64 {
        self.cutoff.t2
    }

    pub fn check_beta(&self, p_plus: f64, c_imb: f64) -> Assertion {
        let lim = beta_limit(self.p_minus, p_plus, c_imb);
        Assertion {
            name: "beta_range".into(),
            passed: self.beta > 0.0 && self.beta < lim,
            lhs: self.beta,
            rhs: lim,
            detail: "0 < beta < min{1/p-, 1/(p+ 2^p- C^p-)}".into(),
        }
    }
}

/// Number of `x` samples times `t` samples used to verify `p- F~ - f~ t >= 0`.
pub const MODIFIED_X_SAMPLES: usize = 10;
pub const MODIFIED_T_SAMPLES: usize = 100;

/// `F~ = rho F + (1 - rho) beta |t|^{p-}` and `f~ = dF~/dt`. Construction fails when
/// `p- F~ - f~ t` is negative anywhere on a 1000-point `(x, t)` sample.
pub fn modified_nonlinearity(
    base: &Nonlinearity,
    cut: &CutoffProfile,
    domain: &BoxDomain,
) -> Result<Nonlinearity> {
    let out = build_modified(base, cut, domain)?;
    let worst = admissibility_margin(&out, cut, domain);
    if worst < 0.0 {
        return Err(Error::Nonlinearity(format!(
            "p- F~ - f~ t reaches {worst:e} on the sample grid"
        )));
    }
    Ok(out)
}

/// The modified pair without the admissibility check.
pub(crate) fn build_modified(
    base: &Nonlinearity,
    cut: &CutoffProfile,
    domain: &BoxDomain,
) -> Result<Nonlinearity> {
    let c = cut.cutoff;
    let (beta, pm) = (cut.beta, cut.p_minus);
    let b1 = base.clone();
    let f: NonlinearFn = Arc::new(move |x, t| {
        if t == 0.0 {
            return 0.0;
        }
        let r = c.rho(t);
        let tail = beta * pm * t.abs().powf(pm - 1.0) * t.signum();
        if r == 0.0 {
            return tail;
        }
        let rp = c.rho_prime(t);
        let big = beta * t.abs().powf(pm);
        rp * b1.primitive(x, t) + r * b1.f(x, t) - rp * big + (1.0 - r) * tail
    });
    let b2 = base.clone();
    let primitive: NonlinearFn = Arc::new(move |x, t| {
        if t == 0.0 {
            return 0.0;
        }
        let r = c.rho(t);
        let big = beta * t.abs().powf(pm);
        if r == 0.0 {
            return big;
        }
        r * b2.primitive(x, t) + (1.0 - r) * big
    });
    // |f~| <= C + beta p- |t|^{p- - 1} + (2/t2)(sup_band |F| + beta (2 t2)^{p-})
    let dim = domain.dim();
    let mut band = 0.0f64;
    for x in sample_points(domain, MODIFIED_X_SAMPLES) {
        for k in 0..=50 {
            let t = c.t2 * (1.0 + k as f64 / 50.0);
            band = band.max(base.primitive(&x[..dim], t).abs()).max(base.primitive(&x[..dim], -t).abs());
        }
    }
    let growth_c = base.growth.0 + beta * pm + 2.0 / c.t2 * (band + beta * (2.0 * c.t2).powf(pm));
    let q_pm = ScalarExponent::constant(pm)?;
    Ok(Nonlinearity {
        f,
        primitive,
        growth: (growth_c, ScalarExponent::max(&base.growth.1, &q_pm)),
        odd_radius: base.odd_radius,
        tag: NonlinearityTag::Modified {
            base: Box::new(base.tag.clone()),
            t2: c.t2,
            beta,
            p_minus: pm,
        },
    })
}

/// Smallest `p- F~ - f~ t` over the sample grid, each value relative to
/// `|p- F~| + |f~ t|` when that is not tiny.
pub fn admissibility_margin(nl: &Nonlinearity, cut: &CutoffProfile, domain: &BoxDomain) -> f64 {
    let dim = domain.dim();
    let t2 = cut.cutoff.t2;
    let mut worst = f64::INFINITY;
    for x in sample_points(domain, MODIFIED_X_SAMPLES) {
        let x = &x[..dim];
        for k in 0..MODIFIED_T_SAMPLES {
            // both signs, spanning (0, 3 t2]
            let t = 3.0 * t2 * (k / 2 + 1) as f64 / (MODIFIED_T_SAMPLES / 2) as f64;
            let t = if k % 2 == 0 { t } else { -t };
            let a = cut.p_minus * nl.primitive(x, t);
            let b = nl.f(x, t) * t;
            let scale = a.abs() + b.abs();
            let v = a - b;
            let v = if v < 0.0 && v.abs() <= 1e-12 * scale { 0.0 } else { v };
            worst = worst.min(v);
        }
    }
    worst
}
