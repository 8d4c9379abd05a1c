//! Built-in simulation configurations.
//!
//! `fig1a`..`fig1h` compare the best location-equivariant estimator of the
//! smaller normal mean with its clipped version; `fig2a`..`fig2f` compare
//! four estimators of the smaller gamma scale.

use crate::error::{Error, Result};
use crate::estimators::{catalog_estimator, CatalogKey, EquivariantEstimator, EstimatorKind};
use crate::families::{BivariateModel, Mode, Target};
use crate::loss::LossSpec;
use crate::risksim::{risk_curve, RiskCurve};

pub const PRESET_NAMES: [&str; 14] = [
    "fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f", "fig1g", "fig1h", "fig2a", "fig2b",
    "fig2c", "fig2d", "fig2e", "fig2f",
];

const FIG1: [(f64, f64, f64); 8] = [
    (0.2, 0.4, -0.9),
    (10.0, 0.4, -0.5),
    (0.4, 10.0, -0.2),
    (2.0, 5.0, 0.0),
    (10.0, 0.4, 0.0),
    (0.4, 10.0, 0.2),
    (10.0, 0.4, 0.5),
    (0.2, 0.4, 0.9),
];

const FIG2: [(f64, f64); 6] = [(0.2, 0.2), (0.2, 1.0), (2.0, 1.0), (5.0, 1.0), (5.0, 10.0), (15.0, 15.0)];

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub model: BivariateModel,
    pub loss: LossSpec,
    pub target: Target,
    pub kinds: Vec<EstimatorKind>,
    pub lambda_grid: Vec<f64>,
    /// (base, improved) pairs whose risks are compared.
    pub pairs: Vec<(EstimatorKind, EstimatorKind)>,
}

impl Preset {
    pub fn estimators(&self) -> Result<Vec<EquivariantEstimator>> {
        self.kinds
            .iter()
            .map(|&k| catalog_estimator(&CatalogKey::new(Some(self.model.name()), self.target, k), &self.model))
            .collect()
    }

    /// Risk curves with common random numbers.
    pub fn run(&self, n: usize, seed: u64) -> Result<RiskCurve> {
        risk_curve(&self.model, &self.loss, &self.estimators()?, &self.lambda_grid, n, seed, true)
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let unknown = || Error::UnknownKey(format!("unknown preset '{name}' (expected fig1a..fig1h or fig2a..fig2f)"));
    let (fig, panel) = name.split_at(name.len().min(4));
    let idx = match panel.as_bytes() {
        [c @ b'a'..=b'h'] => (c - b'a') as usize,
        _ => return Err(unknown()),
    };
    use EstimatorKind::*;
    match fig {
        "fig1" => {
            let (s1, s2, rho) = FIG1[idx];
            Ok(Preset {
                name: name.to_string(),
                model: BivariateModel::bvn(s1, s2, rho)?,
                loss: LossSpec::squared_error(Mode::Location),
                target: Target::Smaller,
                kinds: vec![Blee, ImprovedBlee],
                lambda_grid: (0..=10).map(f64::from).collect(),
                pairs: vec![(Blee, ImprovedBlee)],
            })
        }
        "fig2" if idx < FIG2.len() => {
            let (a1, a2) = FIG2[idx];
            Ok(Preset {
                name: name.to_string(),
                model: BivariateModel::indep_gamma(a1, a2)?,
                loss: LossSpec::squared_error(Mode::Scale),
                target: Target::Smaller,
                kinds: vec![Bsee, Rmle, ImprovedBsee, ImprovedRmle],
                lambda_grid: (1..=10).map(f64::from).collect(),
                pairs: vec![(Bsee, ImprovedBsee), (Rmle, ImprovedRmle)],
            })
        }
        _ => Err(unknown()),
    }
}

/// One parameterization of every built-in family with a catalogued closed form.
pub fn example_models() -> Vec<BivariateModel> {
    vec![
        BivariateModel::bvn(1.0, 2.0, 0.3).expect("valid"),
        BivariateModel::dep_exp_gamma(),
        BivariateModel::indep_exp(1.0, 2.0).expect("valid"),
        BivariateModel::cheriyan_gamma(),
        BivariateModel::power_uniform(2.0, 3.0).expect("valid"),
        BivariateModel::indep_gamma(2.0, 3.0).expect("valid"),
    ]
}

/// `n x n` grid of `(lambda, t)` pairs inside the valid domain of `model`.
///
/// Location: lambda in [0, 5], t in [-5, 5], with t kept above lambda where
/// the ancillary support requires it. Scale: lambda in [1, 20] and t in
/// [0.05, 20], both log-spaced.
pub fn standard_grid(model: &BivariateModel, n: usize) -> Vec<(f64, f64)> {
    let lin = |lo: f64, hi: f64, i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let geo = |lo: f64, hi: f64, i: usize| lo * (hi / lo).powf(lin(0.0, 1.0, i));
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(match model.mode() {
                Mode::Location => {
                    let lambda = lin(0.0, 5.0, i);
                    if model.ancillary_support().0 >= 0.0 {
                        (lambda, lambda + 0.05 + lin(0.0, 5.0, j))
                    } else {
                        (lambda, lin(-5.0, 5.0, j))
                    }
                }
                Mode::Scale => (geo(1.0, 20.0, i), geo(0.05, 20.0, j)),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.estimators().unwrap().len(), p.kinds.len());
        }
        assert!(preset("fig2g").is_err());
        assert!(preset("fig3a").is_err());
        assert!(preset("fig").is_err());
        let e = preset("fig1e").unwrap();
        assert_eq!(e.model.id(), "bvn[s1=10;s2=0.4;rho=0]");
        let f = preset("fig2f").unwrap();
        assert_eq!(f.model.id(), "indep_gamma[a1=15;a2=15]");
    }

    #[test]
    fn standard_grid_stays_in_domain() {
        for m in example_models() {
            let g = standard_grid(&m, 20);
            assert_eq!(g.len(), 400);
            let (lo, hi) = m.ancillary_support();
            for (lambda, t) in g {
                assert!(t > lo && t <= hi, "{} {t}", m.id());
                assert!(lambda >= crate::solver::identity(m.mode()));
            }
        }
    }
}
