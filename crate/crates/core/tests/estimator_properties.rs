mod common;

use common::data_point;
use orderest_core::estimators::{
    catalog_estimator, catalog_keys, clip_improve, CatalogKey, EquivariantEstimator,
};
use orderest_core::presets::example_models;
use orderest_core::solver::PsiBounds;
use orderest_core::{BivariateModel, Error, Mode, Target};
use proptest::prelude::*;

/// Every catalogued estimator that exists, with its model.
fn catalogued() -> Vec<(BivariateModel, CatalogKey, EquivariantEstimator)> {
    let mut out = Vec::new();
    for m in example_models() {
        for key in catalog_keys(&m) {
            match catalog_estimator(&key, &m) {
                Ok(e) => out.push((m.clone(), key, e)),
                Err(Error::Nonexistent(_)) => {}
                Err(e) => panic!("{key}: {e}"),
            }
        }
    }
    out
}

fn bounds(m: &BivariateModel, target: Target) -> PsiBounds {
    PsiBounds::closed_form(m, &common::catalog_loss(m), target).unwrap()
}

/// A smooth estimator family to clip: `a + b t` (location) or
/// `exp(a + b ln t)` (scale).
fn affine(mode: Mode, target: Target, a: f64, b: f64) -> EquivariantEstimator {
    match mode {
        Mode::Location => EquivariantEstimator::from_fn(mode, target, "affine", move |t| a + b * t),
        Mode::Scale => EquivariantEstimator::from_fn(mode, target, "affine", move |t| (a + b * t.ln()).exp()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn location_equivariance(u in 0.0f64..1.0, v in 0.0f64..1.0, c in -10.0f64..10.0) {
        for (m, key, e) in catalogued() {
            if m.mode() != Mode::Location {
                continue;
            }
            let (x1, x2) = data_point(&m, u, v);
            let shifted = e.evaluate(x1 + c, x2 + c).unwrap();
            let base = e.evaluate(x1, x2).unwrap();
            prop_assert!((shifted - base - c).abs() <= 1e-12 * (1.0 + x1.abs().max(x2.abs()) + c.abs()), "{key}: {shifted} {base} {c}");
        }
    }

    #[test]
    fn scale_equivariance(u in 0.0f64..1.0, v in 0.0f64..1.0, lb in -5.0f64..5.0) {
        let b = lb.exp();
        for (m, key, e) in catalogued() {
            if m.mode() != Mode::Scale {
                continue;
            }
            let (x1, x2) = data_point(&m, u, v);
            let ratio = e.evaluate(b * x1, b * x2).unwrap() / e.evaluate(x1, x2).unwrap();
            prop_assert!((ratio / b - 1.0).abs() <= 1e-10, "{key}: ratio {ratio} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clipping_is_idempotent_and_inside_the_band(i in 0usize..12, a in -3.0f64..3.0, b in -2.0f64..2.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (m, _, target) = common::triples().swap_remove(i);
        let bnd = bounds(&m, target);
        let e = affine(m.mode(), target, a, b);
        let once = clip_improve(&e, &bnd);
        let twice = clip_improve(&once, &bnd);
        let (x1, x2) = data_point(&m, u, v);
        let t = once.ancillary(x1, x2).unwrap();
        let p1 = once.psi(t).unwrap();
        prop_assert_eq!(p1, twice.psi(t).unwrap());
        let env = bnd.at(t).unwrap();
        prop_assert!(env.lower <= p1 && p1 <= env.upper, "{} {target}: {p1} not in {env:?}", m.id());
        let raw = e.psi(t).unwrap();
        if env.lower <= raw && raw <= env.upper {
            prop_assert_eq!(p1, raw);
        }
    }
}

#[test]
fn improved_entries_are_clipped_bases() {
    let mut checked = 0;
    for (m, key, improved) in catalogued() {
        let Some(base_kind) = key.kind.base() else { continue };
        let base_key = CatalogKey::new(key.model, key.target, base_kind);
        let base = catalog_estimator(&base_key, &m).unwrap();
        let clipped = clip_improve(&base, &bounds(&m, key.target));
        for k in 0..1000 {
            let u = (k as f64 * 0.618_033_988_75).fract();
            let v = (k as f64 * 0.754_877_666_25 + 0.1).fract();
            let (x1, x2) = data_point(&m, u, v);
            let a = improved.evaluate(x1, x2).unwrap();
            let b = clipped.evaluate(x1, x2).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{key} at ({x1}, {x2}): {a} vs {b}");
        }
        checked += 1;
    }
    assert!(checked >= 12, "only {checked} improved entries");
}

#[test]
fn catalog_rejects_unknown_and_mismatched_keys() {
    let m = BivariateModel::indep_gamma(1.0, 1.0).unwrap();
    assert!(catalog_estimator(&"bvn:smaller:blee".parse().unwrap(), &m).is_err());
    assert!(catalog_estimator(&"smaller:blee".parse().unwrap(), &m).is_err());
    let d = BivariateModel::dep_exp_gamma();
    assert!(matches!(catalog_estimator(&"larger:blee".parse().unwrap(), &d), Err(Error::Nonexistent(_))));
}
