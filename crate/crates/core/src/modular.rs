//! Lebesgue modulars, Luxemburg norms and the norm/modular inequalities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ScalarExponent;
use crate::grid::GridFunction;
use crate::quadrature::{CellQuadrature, CellRule};
use crate::report::Assertion;

const MOMENTS: usize = 16;
const BIN_SCALE: f64 = 1024.0;

/// A modular as a function of the scale: `lambda -> sum_j a_j lambda^(-e_j)`.
///
/// Terms are binned by exponent (bin width `1/1024`); each bin keeps the moments
/// `sum a (e - c)^k`, `k < 16`, around its centre `c`, so evaluation costs one
/// short series per bin instead of one power per term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModularTerms {
    bins: BTreeMap<i64, [f64; MOMENTS]>,
    min_exp: f64,
    max_exp: f64,
}

impl ModularTerms {
    pub fn new() -> Self {
        Self {
            bins: BTreeMap::new(),
            min_exp: f64::INFINITY,
            max_exp: f64::NEG_INFINITY,
        }
    }

    #[inline]
    pub fn add(&mut self, a: f64, e: f64) {
        if a == 0.0 {
            return;
        }
        let key = (e * BIN_SCALE).round() as i64;
        let d = e - key as f64 / BIN_SCALE;
        let m = self.bins.entry(key).or_insert([0.0; MOMENTS]);
        let mut pw = a;
        m[0] += a;
        if d != 0.0 {
            for slot in m.iter_mut().skip(1) {
                pw *= d;
                *slot += pw;
            }
        }
        self.min_exp = self.min_exp.min(e);
        self.max_exp = self.max_exp.max(e);
    }

    /// Append all terms of `other`; order of merges fixes the rounding.
    pub fn merge(&mut self, other: &ModularTerms) {
        for (k, m) in &other.bins {
            let t = self.bins.entry(*k).or_insert([0.0; MOMENTS]);
            for (a, b) in t.iter_mut().zip(m) {
                *a += b;
            }
        }
        self.min_exp = self.min_exp.min(other.min_exp);
        self.max_exp = self.max_exp.max(other.max_exp);
    }

    pub fn is_empty(&self) -> bool {
        self.bins.values().all(|m| m[0] == 0.0)
    }

    /// Modular at scale 1.
    pub fn total(&self) -> f64 {
        self.bins.values().map(|m| m[0]).sum()
    }

    /// Exponent range of the stored terms.
    pub fn exponent_range(&self) -> (f64, f64) {
        (self.min_exp, self.max_exp)
    }

    /// `sum a lambda^(-e)`.
    pub fn value(&self, lambda: f64) -> f64 {
        if lambda == 1.0 {
            return self.total();
        }
        let l = -lambda.ln();
        let mut acc = 0.0;
        for (k, m) in &self.bins {
            let c = *k as f64 / BIN_SCALE;
            let mut series = m[MOMENTS - 1];
            for j in (0..MOMENTS - 1).rev() {
                series = m[j] + series * l / (j + 1) as f64;
            }
            acc += (c * l).exp() * series;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgOptions {
    pub tol: f64,
    pub max_doublings: usize,
    pub max_iters: usize,
}

impl Default for LuxemburgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_doublings: 200,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgRoot {
    pub lambda: f64,
    pub iters: usize,
    pub residual: f64,
}

/// Smallest `lambda` with modular `<= 1`, by bracketed bisection from
/// `[guess/10, 10 guess]`. Returns 0 for an empty modular.
pub fn luxemburg_root(
    terms: &ModularTerms,
    guess: f64,
    opts: &LuxemburgOptions,
) -> Result<LuxemburgRoot> {
    if terms.is_empty() {
        return Ok(LuxemburgRoot {
            lambda: 0.0,
            iters: 0,
            residual: 0.0,
        });
    }
    let g = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
    let f = |l: f64| terms.value(l) - 1.0;
    let (mut lo, mut hi) = (g / 10.0, g * 10.0);
    let mut n = 0;
    while f(lo) < 0.0 {
        lo *= 0.5;
        n += 1;
        if n > opts.max_doublings || lo == 0.0 {
            return Err(Error::Bracket(n));
        }
    }
    n = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        n += 1;
        if n > opts.max_doublings || !hi.is_finite() {
            return Err(Error::Bracket(n));
        }
    }
    let mut iters = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let r = f(mid);
        iters += 1;
        if !r.is_finite() {
            return Err(Error::Bracket(iters));
        }
        if r.abs() <= opts.tol || iters >= opts.max_iters || hi - lo <= 4.0 * f64::EPSILON * mid {
            return Ok(LuxemburgRoot {
                lambda: mid,
                iters,
                residual: r.abs(),
            });
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Quadrature and tolerance settings shared by the Lebesgue routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularOptions {
    pub rule: CellRule,
    pub luxemburg: LuxemburgOptions,
    /// Relative slack for the checked inequalities.
    pub assert_tol: f64,
}

impl Default for ModularOptions {
    fn default() -> Self {
        Self {
            rule: CellRule::default(),
            luxemburg: LuxemburgOptions::default(),
            assert_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularReport {
    pub modular: f64,
    pub norm: f64,
    pub iters: usize,
    pub residual: f64,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

/// Terms `w |u(x)|^q(x)` at the quadrature points.
pub fn lebesgue_terms(u: &GridFunction, q: &ScalarExponent, quad: &CellQuadrature) -> ModularTerms {
    let vals = u.values();
    let mut t = ModularTerms::new();
    for pt in quad.points() {
        let v = pt.stencil.apply(vals).abs();
        if v > 0.0 {
            let e = q.eval(&pt.x[..u.dim()]);
            t.add(pt.weight * v.powf(e), e);
        }
    }
    t
}

fn quad_for(u: &GridFunction, opts: &ModularOptions) -> CellQuadrature {
    CellQuadrature::new(u.grid(), opts.rule)
}

/// `int |u|^q(x) dx`.
pub fn lebesgue_modular(u: &GridFunction, q: &ScalarExponent, opts: &ModularOptions) -> f64 {
    lebesgue_terms(u, q, &quad_for(u, opts)).total()
}

/// Luxemburg norm with its modular; the zero function has norm 0.
pub fn luxemburg_norm(
    u: &GridFunction,
    q: &ScalarExponent,
    opts: &ModularOptions,
) -> Result<ModularReport> {
    let terms = lebesgue_terms(u, q, &quad_for(u, opts));
    report_from_terms(&terms, u.sup_norm(), &opts.luxemburg)
}

pub(crate) fn report_from_terms(
    terms: &ModularTerms,
    guess: f64,
    opts: &LuxemburgOptions,
) -> Result<ModularReport> {
    let root = luxemburg_root(terms, guess, opts)?;
    Ok(ModularReport {
        modular: terms.total(),
        norm: root.lambda,
        iters: root.iters,
        residual: root.residual,
        assertions: Vec::new(),
    })
}

/// Norm/modular relations for a modular with exponents in `[lo, hi]`:
/// unit-modular characterisation, matching sides of 1, and the power sandwich.
pub fn norm_modular_assertions(
    terms: &ModularTerms,
    norm: f64,
    lo: f64,
    hi: f64,
    lux: &LuxemburgOptions,
    rel: f64,
) -> Vec<Assertion> {
    let rho = terms.total();
    let mut out = Vec::new();
    if norm > 0.0 {
        out.push(Assertion::close("unit_modular", terms.value(norm), 1.0, lux.tol));
    } else {
        out.push(Assertion::close("zero_norm_zero_modular", rho, 0.0, 0.0));
        return out;
    }
    let side = if (norm - 1.0).abs() <= rel {
        true
    } else {
        (rho - 1.0).signum() == (norm - 1.0).signum() || (rho - 1.0).abs() <= rel
    };
    out.push(Assertion {
        name: "same_side_of_one".into(),
        passed: side,
        lhs: rho,
        rhs: norm,
        detail: String::new(),
    });
    let (a, b) = if norm > 1.0 {
        (norm.powf(lo), norm.powf(hi))
    } else {
        (norm.powf(hi), norm.powf(lo))
    };
    out.push(Assertion::le("modular_lower_power", a, rho, rel));
    out.push(Assertion::le("modular_upper_power", rho, b, rel));
    out
}

/// Computes the norm and records the norm/modular relations as assertions.
pub fn check_norm_modular_relations(
    u: &GridFunction,
    q: &ScalarExponent,
    opts: &ModularOptions,
) -> Result<ModularReport> {
    let terms = lebesgue_terms(u, q, &quad_for(u, opts));
    let mut rep = report_from_terms(&terms, u.sup_norm(), &opts.luxemburg)?;
    rep.assertions = norm_modular_assertions(
        &terms,
        rep.norm,
        q.lower(),
        q.upper(),
        &opts.luxemburg,
        opts.assert_tol,
    );
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub pairing: f64,
    pub norm_u: f64,
    pub norm_v_conjugate: f64,
    pub assertion: Assertion,
}

/// `|int u v| <= 2 ||u||_q ||v||_q'` with `q' = q/(q-1)`.
pub fn holder_pairing(
    u: &GridFunction,
    v: &GridFunction,
    q: &ScalarExponent,
    opts: &ModularOptions,
) -> Result<HolderReport> {
    u.check_same_grid(v)?;
    let quad = quad_for(u, opts);
    let pairing: f64 = quad
        .points()
        .iter()
        .map(|pt| pt.weight * pt.stencil.apply(u.values()) * pt.stencil.apply(v.values()))
        .sum::<f64>()
        .abs();
    let qc = ScalarExponent::conjugate(q);
    let nu = report_from_terms(&lebesgue_terms(u, q, &quad), u.sup_norm(), &opts.luxemburg)?.norm;
    let nv = report_from_terms(&lebesgue_terms(v, &qc, &quad), v.sup_norm(), &opts.luxemburg)?.norm;
    Ok(HolderReport {
        pairing,
        norm_u: nu,
        norm_v_conjugate: nv,
        assertion: Assertion::le("holder", pairing, 2.0 * nu * nv, opts.assert_tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub norm_alpha: f64,
    pub norm_beta: f64,
    pub factor: f64,
    /// `None` when the precondition `alpha <= beta` failed and the check was skipped.
    pub assertion: Option<Assertion>,
    pub precondition_violation: Option<String>,
}

/// `||u||_alpha <= 2 (1 + |Omega|) ||u||_beta` for `alpha <= beta`.
pub fn exponent_comparison(
    u: &GridFunction,
    alpha: &ScalarExponent,
    beta: &ScalarExponent,
    opts: &ModularOptions,
) -> Result<ComparisonReport> {
    let quad = quad_for(u, opts);
    let dim = u.dim();
    let measure = u.grid().domain().measure();
    let factor = 2.0 * (1.0 + measure);
    let grid = u.grid();
    let bad = quad
        .points()
        .iter()
        .map(|pt| pt.x)
        .chain((0..grid.node_count()).map(|i| grid.node_coords(i)))
        .find(|x| alpha.eval(&x[..dim]) > beta.eval(&x[..dim]));
    if let Some(x) = bad {
        return Ok(ComparisonReport {
            norm_alpha: f64::NAN,
            norm_beta: f64::NAN,
            factor,
            assertion: None,
            precondition_violation: Some(format!("alpha > beta at {:?}", &x[..dim])),
        });
    }
    let na = report_from_terms(&lebesgue_terms(u, alpha, &quad), u.sup_norm(), &opts.luxemburg)?.norm;
    let nb = report_from_terms(&lebesgue_terms(u, beta, &quad), u.sup_norm(), &opts.luxemburg)?.norm;
    Ok(ComparisonReport {
        norm_alpha: na,
        norm_beta: nb,
        factor,
        assertion: Some(Assertion::le("exponent_comparison", na, factor * nb, opts.assert_tol)),
        precondition_violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxDomain, Grid};
    use crate::report::all_passed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
    }

    fn func(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::interpolate(|x| f(x[0]), grid1(n), false).unwrap()
    }

    fn q(c: f64) -> ScalarExponent {
        ScalarExponent::constant(c).unwrap()
    }

    #[test]
    fn terms_match_direct_sum() {
        let mut t = ModularTerms::new();
        let data = [(0.3, 1.5), (1.2, 1.5004), (0.7, 2.91), (2.0, 2.0)];
        for (a, e) in data {
            t.add(a, e);
        }
        for lam in [1e-3, 0.2, 1.0, 3.7, 250.0] {
            let direct: f64 = data.iter().map(|(a, e)| a * f64::powf(lam, -e)).sum();
            assert_relative_eq!(t.value(lam), direct, max_relative = 1e-13);
        }
        assert_eq!(t.exponent_range(), (1.5, 2.91));
    }

    #[test]
    fn lebesgue_modular_examples() {
        let o = ModularOptions::default();
        assert_eq!(lebesgue_modular(&func(5, |_| 0.0), &q(2.0), &o), 0.0);
        assert_relative_eq!(lebesgue_modular(&func(5, |_| 3.0), &q(2.0), &o), 9.0, epsilon = 1e-13);
        assert_relative_eq!(lebesgue_modular(&func(9, |x| x), &q(2.0), &o), 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn luxemburg_examples() {
        let o = ModularOptions::default();
        let qv = ScalarExponent::affine(2.0, &[1.0], &BoxDomain::unit(1).unwrap()).unwrap();
        let r = luxemburg_norm(&func(9, |_| 1.7), &qv, &o).unwrap();
        assert_relative_eq!(r.norm, 1.7, max_relative = 1e-10);
        assert_eq!(luxemburg_norm(&func(9, |_| 0.0), &qv, &o).unwrap().norm, 0.0);
        let r = luxemburg_norm(&func(9, |x| x), &q(2.0), &o).unwrap();
        assert_relative_eq!(r.norm, (1.0f64 / 3.0).sqrt(), max_relative = 1e-8);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn relation_examples() {
        let o = ModularOptions::default();
        let d = BoxDomain::unit(1).unwrap();
        let q23 = ScalarExponent::affine(2.0, &[1.0], &d).unwrap();
        let r = check_norm_modular_relations(&func(9, |_| 2.0), &q23, &o).unwrap();
        assert_relative_eq!(r.norm, 2.0, max_relative = 1e-10);
        assert!(r.modular >= 4.0 && r.modular <= 8.0);
        assert!(all_passed(&r.assertions));
        let r = check_norm_modular_relations(&func(9, |_| 1.0), &q23, &o).unwrap();
        assert_relative_eq!(r.norm, 1.0, max_relative = 1e-10);
        assert_relative_eq!(r.modular, 1.0, max_relative = 1e-12);
        let r = check_norm_modular_relations(&func(9, |_| 0.5), &q(2.0), &o).unwrap();
        assert_relative_eq!(r.norm, 0.5, max_relative = 1e-10);
        assert_relative_eq!(r.modular, 0.25, max_relative = 1e-12);
        assert!(all_passed(&r.assertions));
    }

    #[test]
    fn holder_examples() {
        let o = ModularOptions::default();
        let one = func(9, |_| 1.0);
        let h = holder_pairing(&one, &one, &q(2.0), &o).unwrap();
        assert_relative_eq!(h.pairing, 1.0, epsilon = 1e-12);
        assert!(h.assertion.passed);
        let h = holder_pairing(&func(9, |_| 0.0), &one, &q(2.0), &o).unwrap();
        assert_eq!(h.pairing, 0.0);
        assert!(h.assertion.passed);
        let h = holder_pairing(&func(9, |x| x), &func(9, |x| 1.0 - x), &q(2.0), &o).unwrap();
        assert_relative_eq!(h.pairing, 1.0 / 6.0, epsilon = 1e-9);
        assert_relative_eq!(h.norm_u, (1.0f64 / 3.0).sqrt(), max_relative = 1e-8);
        assert_relative_eq!(h.norm_v_conjugate, (1.0f64 / 3.0).sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn comparison_examples() {
        let o = ModularOptions::default();
        let c = exponent_comparison(&func(9, |_| 1.0), &q(2.0), &q(3.0), &o).unwrap();
        assert_relative_eq!(c.norm_alpha, 1.0, max_relative = 1e-10);
        assert_eq!(c.factor, 4.0);
        assert!(c.assertion.unwrap().passed);
        let c = exponent_comparison(&func(9, |_| 0.0), &q(2.0), &q(3.0), &o).unwrap();
        assert_eq!(c.norm_alpha, 0.0);
        let c = exponent_comparison(&func(33, |x| x), &q(2.0), &q(4.0), &o).unwrap();
        assert_relative_eq!(c.norm_beta, 0.2f64.powf(0.25), max_relative = 1e-4);
        let c = exponent_comparison(&func(9, |x| x), &q(3.0), &q(2.0), &o).unwrap();
        assert!(c.assertion.is_none() && c.precondition_violation.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn homogeneity_and_triangle(
            a in proptest::collection::vec(-3.0f64..3.0, 9),
            b in proptest::collection::vec(-3.0f64..3.0, 9),
            c in -5.0f64..5.0,
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
            let o = ModularOptions::default();
            let d = BoxDomain::unit(1).unwrap();
            let qv = ScalarExponent::affine(1.5, &[1.2], &d).unwrap();
            let g = grid1(9);
            let u = GridFunction::from_values(g.clone(), a, false).unwrap();
            let v = GridFunction::from_values(g, b, false).unwrap();
            let nu = luxemburg_norm(&u, &qv, &o).unwrap().norm;
            let ncu = luxemburg_norm(&u.scale(c), &qv, &o).unwrap().norm;
            prop_assert!((ncu - c.abs() * nu).abs() <= 1e-8 * (c.abs() * nu).max(1e-300));
            let nv = luxemburg_norm(&v, &qv, &o).unwrap().norm;
            let nuv = luxemburg_norm(&u.axpby(1.0, &v, 1.0).unwrap(), &qv, &o).unwrap().norm;
            prop_assert!(nuv <= nu + nv + 1e-8);
            let rep = check_norm_modular_relations(&u, &qv, &o).unwrap();
            prop_assert!(all_passed(&rep.assertions), "{:?}", rep.assertions);
        }

        #[test]
        fn constant_exponent_norm_is_root_of_modular(
            a in proptest::collection::vec(-3.0f64..3.0, 9),
            p in 1.1f64..4.0,
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
            let o = ModularOptions::default();
            let u = GridFunction::from_values(grid1(9), a, false).unwrap();
            let n = luxemburg_norm(&u, &q(p), &o).unwrap().norm;
            let m = lebesgue_modular(&u, &q(p), &o);
            prop_assert!((n - m.powf(1.0 / p)).abs() <= 1e-8 * n);
        }
    }
}
