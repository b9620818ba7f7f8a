use std::sync::Arc;

use fracpx::degiorgi::level_functional;
use fracpx::exponents::{PairExponent, ScalarExponent};
use fracpx::grid::{BoxDomain, Grid, GridFunction};
use fracpx::modular::{lebesgue_modular, luxemburg_norm, ModularOptions};
use fracpx::nonlocal::{gagliardo_modular, weak_form, Region};

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform(BoxDomain::unit(1).unwrap(), n).unwrap())
}

fn bump(g: &Arc<Grid>, amp: f64) -> GridFunction {
    GridFunction::interpolate(
        |x| amp * (std::f64::consts::PI * x[0]).sin(),
        g.clone(),
        true,
    )
    .unwrap()
}

#[test]
fn lebesgue_norm_of_identity() {
    let u = GridFunction::interpolate(|x| x[0], grid(65), false).unwrap();
    let q = ScalarExponent::constant(2.0).unwrap();
    let r = luxemburg_norm(&u, &q, &ModularOptions::default()).unwrap();
    assert!((r.norm - 3f64.sqrt().recip()).abs() < 1e-3, "{}", r.norm);
    assert!((r.modular - 1.0 / 3.0).abs() < 1e-3, "{}", r.modular);
}

#[test]
fn gagliardo_of_identity_matches_closed_form() {
    // 2 / (a (a + 1)) with a = p (1 - s) = 1
    let p = PairExponent::constant(2.0, 0.5).unwrap();
    for n in [17, 65] {
        let u = GridFunction::interpolate(|x| x[0], grid(n), false).unwrap();
        let m = gagliardo_modular(&u, &p, Region::Interior);
        assert!((m - 1.0).abs() < 1e-10, "n={n}: {m}");
    }
}

#[test]
fn modular_is_homogeneous_for_constant_exponent() {
    let g = grid(33);
    let p = PairExponent::constant(1.7, 0.4).unwrap();
    let one = gagliardo_modular(&bump(&g, 1.0), &p, Region::Full);
    let three = gagliardo_modular(&bump(&g, 3.0), &p, Region::Full);
    assert!(
        (three / one - 3f64.powf(1.7)).abs() < 1e-9 * three,
        "{one} {three}"
    );
}

#[test]
fn weak_form_on_the_diagonal_is_the_modular() {
    let g = grid(33);
    let p = PairExponent::constant(2.5, 0.3).unwrap();
    let u = bump(&g, 0.8);
    let a = weak_form(&u, &u, &p).unwrap();
    let m = gagliardo_modular(&u, &p, Region::Full);
    assert!((a - m).abs() < 1e-9 * m, "{a} {m}");

    // linear in the test function
    let v = GridFunction::interpolate(|x| x[0] * (1.0 - x[0]), g.clone(), true).unwrap();
    let w = GridFunction::from_values(
        g.clone(),
        u.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a + 2.0 * b)
            .collect(),
        true,
    )
    .unwrap();
    let lhs = weak_form(&u, &w, &p).unwrap();
    let rhs = a + 2.0 * weak_form(&u, &v, &p).unwrap();
    assert!(
        (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
        "{lhs} {rhs}"
    );
}

#[test]
fn level_functional_starts_at_the_modular_and_decreases() {
    let g = grid(65);
    let u = bump(&g, 2.0);
    let q = ScalarExponent::constant(2.5).unwrap();
    let (z0, m0) = level_functional(&u, &q, 0.0).unwrap();
    let full = lebesgue_modular(&u, &q, &ModularOptions::default());
    assert!((z0 - full).abs() < 1e-12 * full);
    assert!((m0 - 1.0).abs() < 0.05);
    let mut last = z0;
    for k in [0.5, 1.0, 1.5, 1.99, 2.5] {
        let (z, _) = level_functional(&u, &q, k).unwrap();
        assert!(z <= last);
        last = z;
    }
    assert_eq!(last, 0.0);
}
