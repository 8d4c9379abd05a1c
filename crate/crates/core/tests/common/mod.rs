#![allow(dead_code)]

use orderest_core::presets::example_models;
use orderest_core::{BivariateModel, LossSpec, Mode, Target};

pub const TARGETS: [Target; 2] = [Target::Smaller, Target::Larger];

pub fn catalog_loss(model: &BivariateModel) -> LossSpec {
    LossSpec::from_name(model.catalog_loss().unwrap(), model.mode()).unwrap()
}

/// The twelve catalogued (model, loss, target) triples.
pub fn triples() -> Vec<(BivariateModel, LossSpec, Target)> {
    example_models()
        .into_iter()
        .flat_map(|m| TARGETS.map(|t| (m.clone(), catalog_loss(&m), t)))
        .collect()
}

/// Maps unit-interval coordinates to a valid `(lambda, t)` for `model`.
pub fn domain_point(model: &BivariateModel, a: f64, b: f64) -> (f64, f64) {
    match model.mode() {
        Mode::Location => {
            let lambda = 5.0 * a;
            if model.ancillary_support().0 >= 0.0 {
                (lambda, lambda + 0.05 + 5.0 * b)
            } else {
                (lambda, -5.0 + 10.0 * b)
            }
        }
        Mode::Scale => (20f64.powf(a), 0.05 * 400f64.powf(b)),
    }
}

/// Maps unit-interval coordinates to a data point inside the support.
pub fn data_point(model: &BivariateModel, a: f64, b: f64) -> (f64, f64) {
    match model.mode() {
        Mode::Location => {
            let x1 = -10.0 + 20.0 * a;
            if model.ancillary_support().0 >= 0.0 {
                (x1, x1 + 8.0 * b)
            } else {
                (x1, -10.0 + 20.0 * b)
            }
        }
        Mode::Scale => (0.01 * 2000f64.powf(a), 0.01 * 2000f64.powf(b)),
    }
}
