mod common;

use common::TARGETS;
use orderest_core::presets::example_models;
use orderest_core::quad::{integrate, integrate_strict, Window};
use orderest_core::validate::sampler_histogram;
use orderest_core::{BivariateModel, Theta};
use proptest::prelude::*;

fn split(w: Window, at: f64) -> Vec<Window> {
    if w.lo < at && at < w.hi {
        let left = Window::new(w.lo, at, if w.lo.is_finite() { 0.5 * (w.lo + at) } else { w.center.min(at) }, w.scale);
        let right = Window::new(at, w.hi, if w.hi.is_finite() { 0.5 * (at + w.hi) } else { w.center.max(at) }, w.scale);
        vec![left, right]
    } else {
        vec![w]
    }
}

/// `int f(z1, z2) dz2` over the second coordinate's marginal window.
fn inner(model: &BivariateModel, z1: f64) -> f64 {
    let w = model.marginal_window(orderest_core::Target::Larger);
    split(w, z1)
        .into_iter()
        .map(|w| {
            let r = integrate(|z2| model.joint_density(z1, z2), &w, 1e-10).unwrap();
            assert!(r.converged || r.error < 1e-14, "z1={z1}: {r:?}");
            r.value
        })
        .sum()
}

#[test]
fn densities_integrate_to_one() {
    let mut models = example_models();
    models.push(BivariateModel::indep_gamma(0.2, 0.2).unwrap());
    models.push(BivariateModel::bvn(0.2, 0.4, -0.9).unwrap());
    for m in models {
        let w = m.marginal_window(orderest_core::Target::Smaller);
        let total = integrate_strict(|z1| inner(&m, z1), &w, 1e-8).unwrap().value;
        assert!((total - 1.0).abs() < 1e-4, "{}: {total}", m.id());
    }
}

#[test]
fn closed_form_marginals_match_the_joint_density() {
    for m in example_models() {
        let w = m.marginal_window(orderest_core::Target::Smaller);
        let (lo, hi) = w.core(3.0);
        for k in 1..6 {
            let z1 = lo + (hi - lo) * k as f64 / 6.0;
            let direct = inner(&m, z1);
            let closed = m.ln_marginal(orderest_core::Target::Smaller, z1).exp();
            assert!((direct - closed).abs() < 1e-7 * closed.max(1e-3), "{} z1={z1}: {direct} vs {closed}", m.id());
        }
    }
}

#[test]
fn samplers_match_densities() {
    let mut models = example_models();
    models.push(BivariateModel::indep_gamma(0.2, 0.2).unwrap());
    for (i, m) in models.iter().enumerate() {
        let check = sampler_histogram(m, 1_000_000, 8, 100 + i as u64).unwrap();
        assert!(check.max_z <= 5.0, "{}: max z {}", m.id(), check.max_z);
        let covered: f64 = check.expected.iter().sum();
        assert!(covered > 0.98, "{}: grid covers {covered}", m.id());
    }
}

#[test]
fn conditional_densities_integrate_to_one() {
    for m in example_models() {
        for target in TARGETS {
            for &t in &[0.3, 1.0, 2.5] {
                let (w, _, _) = m.conditional_normalizer(target, t, 1e-10).unwrap();
                let total = integrate_strict(|s| m.conditional_density(target, s, t).unwrap_or(0.0), &w, 1e-9)
                    .unwrap()
                    .value;
                assert!((total - 1.0).abs() < 1e-6, "{} {target} t={t}: {total}", m.id());
            }
        }
    }
}

proptest! {
    #[test]
    fn theta_order_is_enforced(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let r = Theta::new(a, b);
        prop_assert_eq!(r.is_ok(), a <= b);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>()) {
        let m = BivariateModel::cheriyan_gamma();
        let th = Theta::new(1.0, 2.0).unwrap();
        prop_assert_eq!(m.sample(&th, 16, seed).unwrap(), m.sample(&th, 16, seed).unwrap());
    }
}
