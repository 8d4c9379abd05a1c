//! Equivariant estimators, the clipping improvement and the estimator
//! catalog.
//!
//! A location estimator has the form `X_i - psi(D)` with `D = X2 - X1`, a
//! scale estimator the form `psi(T) X_i` with `T = X2 / X1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::closed_form::bvn_slopes;
use crate::families::{BivariateModel, Mode, ModelName, Target, Theta};
use crate::solver::PsiBounds;

pub type PsiFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Absolute tolerance below which two estimates count as equal.
pub const EQUALITY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct EquivariantEstimator {
    mode: Mode,
    target: Target,
    psi: PsiFn,
    label: String,
}

impl fmt::Debug for EquivariantEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivariantEstimator")
            .field("mode", &self.mode)
            .field("target", &self.target)
            .field("label", &self.label)
            .finish()
    }
}

impl EquivariantEstimator {
    pub fn new<F>(mode: Mode, target: Target, label: impl Into<String>, psi: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        EquivariantEstimator {
            mode,
            target,
            psi: Arc::new(psi),
            label: label.into(),
        }
    }

    /// Estimator with an infallible `psi`.
    pub fn from_fn<F>(mode: Mode, target: Target, label: impl Into<String>, psi: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(mode, target, label, move |t| Ok(psi(t)))
    }

    pub fn constant(mode: Mode, target: Target, label: impl Into<String>, c: f64) -> Self {
        Self::from_fn(mode, target, label, move |_| c)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `psi(t)`; scale estimators must return a positive multiplier.
    pub fn psi(&self, t: f64) -> Result<f64> {
        let v = (self.psi)(t)?;
        if v.is_nan() || (self.mode == Mode::Scale && !(v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "{} has invalid psi({t}) = {v}",
                self.label
            )));
        }
        Ok(v)
    }

    /// The ancillary statistic of the observation.
    pub fn ancillary(&self, x1: f64, x2: f64) -> Result<f64> {
        match self.mode {
            Mode::Location => Ok(x2 - x1),
            Mode::Scale => {
                if x1 > 0.0 && x2 > 0.0 {
                    Ok(x2 / x1)
                } else {
                    Err(Error::InvalidInput(format!(
                        "scale estimators need positive data, got ({x1}, {x2})"
                    )))
                }
            }
        }
    }

    pub fn evaluate(&self, x1: f64, x2: f64) -> Result<f64> {
        let t = self.ancillary(x1, x2)?;
        let xi = match self.target {
            Target::Smaller => x1,
            Target::Larger => x2,
        };
        let psi = self.psi(t)?;
        Ok(match self.mode {
            Mode::Location => xi - psi,
            Mode::Scale => psi * xi,
        })
    }
}

/// `psi*(t) = median(lower(t), psi(t), upper(t))`.
pub fn clip_improve(est: &EquivariantEstimator, bounds: &PsiBounds) -> EquivariantEstimator {
    let base = est.clone();
    let bounds = bounds.clone();
    EquivariantEstimator::new(est.mode, est.target, format!("improved {}", est.label), move |t| {
        let b = bounds.at(t)?;
        Ok(base.psi(t)?.max(b.lower).min(b.upper))
    })
}

/// Moves `psi(t)` a `fraction` of the way towards the band `[lower, upper]`
/// when it lies outside; `fraction = 1` is [`clip_improve`].
pub fn clip_improve_partial(
    est: &EquivariantEstimator,
    bounds: &PsiBounds,
    fraction: f64,
) -> Result<EquivariantEstimator> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!(
            "fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let base = est.clone();
    let bounds = bounds.clone();
    Ok(EquivariantEstimator::new(
        est.mode,
        est.target,
        format!("improved {} (fraction {fraction})", est.label),
        move |t| {
            let b = bounds.at(t)?;
            let p = base.psi(t)?;
            Ok(if p < b.lower {
                p + fraction * (b.lower - p)
            } else if p > b.upper {
                p - fraction * (p - b.upper)
            } else {
                p
            })
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Blee,
    Bsee,
    Rmle,
    ImprovedBlee,
    ImprovedBsee,
    ImprovedRmle,
    Custom,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Blee => "blee",
            EstimatorKind::Bsee => "bsee",
            EstimatorKind::Rmle => "rmle",
            EstimatorKind::ImprovedBlee => "improved_blee",
            EstimatorKind::ImprovedBsee => "improved_bsee",
            EstimatorKind::ImprovedRmle => "improved_rmle",
            EstimatorKind::Custom => "custom",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Blee => "BLEE",
            EstimatorKind::Bsee => "BSEE",
            EstimatorKind::Rmle => "RMLE",
            EstimatorKind::ImprovedBlee => "improved BLEE",
            EstimatorKind::ImprovedBsee => "improved BSEE",
            EstimatorKind::ImprovedRmle => "improved RMLE",
            EstimatorKind::Custom => "custom",
        }
    }

    /// The estimator an improved kind is built from.
    pub fn base(self) -> Option<EstimatorKind> {
        match self {
            EstimatorKind::ImprovedBlee => Some(EstimatorKind::Blee),
            EstimatorKind::ImprovedBsee => Some(EstimatorKind::Bsee),
            EstimatorKind::ImprovedRmle => Some(EstimatorKind::Rmle),
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EstimatorKind::Blee,
            EstimatorKind::Bsee,
            EstimatorKind::Rmle,
            EstimatorKind::ImprovedBlee,
            EstimatorKind::ImprovedBsee,
            EstimatorKind::ImprovedRmle,
            EstimatorKind::Custom,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::UnknownKey(format!("unknown estimator kind '{s}'")))
    }
}

/// `<model>:<target>:<kind>` or `<target>:<kind>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CatalogKey {
    pub model: Option<ModelName>,
    pub target: Target,
    pub kind: EstimatorKind,
}

impl CatalogKey {
    pub fn new(model: Option<ModelName>, target: Target, kind: EstimatorKind) -> Self {
        CatalogKey { model, target, kind }
    }
}

impl fmt::Display for CatalogKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = self.model {
            write!(f, "{m}:")?;
        }
        write!(f, "{}:{}", self.target, self.kind)
    }
}

impl FromStr for CatalogKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::UnknownKey(format!("malformed key '{s}'"));
        let (model, target, kind) = match parts.as_slice() {
            [m, t, k] => (Some(m.parse().map_err(|_| bad())?), t, k),
            [t, k] => (None, t, k),
            _ => return Err(bad()),
        };
        Ok(CatalogKey {
            model,
            target: target.parse().map_err(|_| bad())?,
            kind: kind.parse()?,
        })
    }
}

fn missing(model: &BivariateModel, target: Target, kind: EstimatorKind) -> Error {
    Error::UnknownKey(format!("{}:{target}:{kind}", model.name()))
}

/// Looks up a named estimator for `model`.
pub fn catalog_estimator(key: &CatalogKey, model: &BivariateModel) -> Result<EquivariantEstimator> {
    if let Some(m) = key.model {
        if m != model.name() {
            return Err(Error::UnknownKey(format!(
                "key {key} does not match model {}",
                model.name()
            )));
        }
    }
    let (target, kind) = (key.target, key.kind);
    let mode = model.mode();
    let label = kind.label();
    let est = |f: Box<dyn Fn(f64) -> f64 + Send + Sync>| {
        Ok(EquivariantEstimator::from_fn(mode, target, label, f))
    };
    let k = |c: f64| -> Result<EquivariantEstimator> {
        Ok(EquivariantEstimator::constant(mode, target, label, c))
    };
    use EstimatorKind::*;
    use Target::*;
    match model.name() {
        ModelName::Bvn => {
            let (s1, s2, rho) = model.bvn_params().expect("normal model");
            let (k1, k2) = bvn_slopes(s1, s2, rho);
            let slope = if target == Smaller { k1 } else { k2 };
            match kind {
                Blee => k(0.0),
                // the restricted MLE and the clipped BLEE coincide
                Rmle | ImprovedBlee => est(Box::new(move |d| slope * d.min(0.0))),
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::DepExpGamma => {
            let shift = |d: f64| -> Result<f64> {
                if d < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "D = {d} is outside the support of the dependent gamma model"
                    )));
                }
                Ok((4.0 * (2.0 + d) / (1.0 + d)).ln())
            };
            match (target, kind) {
                (Smaller, Blee) => k(6f64.ln()),
                (Smaller, ImprovedBlee) => Ok(EquivariantEstimator::new(mode, target, label, move |d| {
                    Ok(shift(d)?.max(6f64.ln()))
                })),
                (Larger, Blee | ImprovedBlee) => Err(Error::Nonexistent(
                    "the best equivariant estimator of the larger parameter under LINEX loss needs E[exp(Z2)], which is infinite".into(),
                )),
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::IndepExp => {
            let (s1, s2) = model.shape_params().expect("exponential model");
            let c = s1 * s2 / (s1 + s2);
            match (target, kind) {
                (Smaller, Blee) => k(s1),
                (Smaller, Rmle) => est(Box::new(|d| (-d).max(0.0))),
                (Smaller, ImprovedRmle) => est(Box::new(move |d| (-d).max(0.0) + c)),
                (Smaller, ImprovedBlee) => est(Box::new(move |d| (c - d).max(s1))),
                (Larger, Blee) => k(s2),
                (Larger, Rmle) => k(0.0),
                (Larger, ImprovedRmle) => k(c),
                (Larger, ImprovedBlee) => est(Box::new(move |d| s2.min(c + d.max(0.0)).max(c))),
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::CheriyanGamma => {
            let m = model.clone();
            let env = move |t: f64| {
                m.closed_form_bounds(&crate::loss::LossSpec::squared_error(Mode::Scale), target, t)
                    .map(|b| b.expect("catalogued bounds"))
            };
            match (target, kind) {
                (_, Bsee) => k(1.0 / 3.0),
                (Smaller, ImprovedBsee) => Ok(EquivariantEstimator::new(mode, target, label, move |t| {
                    Ok(env(t)?.upper.min(1.0 / 3.0))
                })),
                (Larger, ImprovedBsee) => Ok(EquivariantEstimator::new(mode, target, label, move |t| {
                    Ok(env(t)?.lower.max(1.0 / 3.0))
                })),
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::PowerUniform => {
            let (a1, a2) = model.shape_params().expect("power model");
            let kk = (a1 + a2 + 2.0) / (a1 + a2 + 1.0);
            let b1 = (a1 + 2.0) / (a1 + 1.0);
            let b2 = (a2 + 2.0) / (a2 + 1.0);
            match (target, kind) {
                (Smaller, Bsee) => k(b1),
                (Smaller, ImprovedBsee) => est(Box::new(move |t| b1.min(kk * t.max(1.0)).max(kk))),
                (Larger, Bsee) => k(b2),
                (Larger, ImprovedBsee) => est(Box::new(move |t| b2.max(kk * (1.0 / t).max(1.0)))),
                (Larger, Rmle) => est(Box::new(|t| (1.0 / t).max(1.0))),
                (Larger, ImprovedRmle) => est(Box::new(move |t| kk * (1.0 / t).max(1.0))),
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::IndepGamma => {
            let (a1, a2) = model.shape_params().expect("gamma model");
            let a = a1 + a2;
            match (target, kind) {
                (Smaller, Bsee) => k(1.0 / (a1 + 1.0)),
                (Smaller, Rmle) => est(Box::new(move |t| (1.0 / a1).min((1.0 + t) / a))),
                (Smaller, ImprovedRmle) => est(Box::new(move |t| (1.0 / a1).min((1.0 + t) / (a + 1.0)))),
                (Smaller, ImprovedBsee) => {
                    est(Box::new(move |t| (1.0 / (a1 + 1.0)).min((1.0 + t) / (a + 1.0))))
                }
                (Larger, Bsee) => k(1.0 / (a2 + 1.0)),
                (Larger, ImprovedBsee) => {
                    est(Box::new(move |t| (1.0 / (a2 + 1.0)).max((1.0 + 1.0 / t) / (a + 1.0))))
                }
                _ => Err(missing(model, target, kind)),
            }
        }
        ModelName::Custom => Err(missing(model, target, kind)),
    }
}

/// Every catalogued key for `model`, in a fixed order.
pub fn catalog_keys(model: &BivariateModel) -> Vec<CatalogKey> {
    use EstimatorKind::*;
    let mut keys = Vec::new();
    for target in [Target::Smaller, Target::Larger] {
        for kind in [Blee, Bsee, Rmle, ImprovedBlee, ImprovedBsee, ImprovedRmle] {
            let key = CatalogKey::new(Some(model.name()), target, kind);
            match catalog_estimator(&key, model) {
                Ok(_) | Err(Error::Nonexistent(_)) => keys.push(key),
                Err(_) => {}
            }
        }
    }
    keys
}

/// Monte Carlo estimate of `P[base(X) != improved(X)]` and its binomial
/// standard error.
pub fn estimate_difference_probability(
    base: &EquivariantEstimator,
    improved: &EquivariantEstimator,
    model: &BivariateModel,
    theta: &Theta,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if base.mode != improved.mode || base.target != improved.target {
        return Err(Error::Incompatible(format!(
            "{} ({:?}, {}) and {} ({:?}, {}) estimate different parameters",
            base.label, base.mode, base.target, improved.label, improved.mode, improved.target
        )));
    }
    if base.mode != model.mode() {
        return Err(Error::Incompatible(format!(
            "{:?} estimators cannot be applied to the {:?} model {}",
            base.mode,
            model.mode(),
            model.name()
        )));
    }
    let draws = model.sample(theta, n, seed)?;
    let mut differ = 0usize;
    for (x1, x2) in draws {
        if (base.evaluate(x1, x2)? - improved.evaluate(x1, x2)?).abs() > EQUALITY_TOL {
            differ += 1;
        }
    }
    let p = differ as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossSpec;

    fn key(s: &str) -> CatalogKey {
        s.parse().unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let blee = EquivariantEstimator::constant(Mode::Location, Target::Smaller, "BLEE", 0.0);
        assert_eq!(blee.evaluate(3.2, 5.0).unwrap(), 3.2);

        let bvn = BivariateModel::bvn(1.0, 1.0, 0.0).unwrap();
        let rmle = catalog_estimator(&key("smaller:rmle"), &bvn).unwrap();
        assert!((rmle.evaluate(2.0, 1.0).unwrap() - 1.5).abs() < 1e-15);

        let g = BivariateModel::indep_gamma(1.0, 1.0).unwrap();
        let imp = catalog_estimator(&key("indep_gamma:smaller:improved_bsee"), &g).unwrap();
        assert!((imp.evaluate(3.0, 9.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(imp.evaluate(0.0, 1.0).is_err());
    }

    #[test]
    fn clip_examples() {
        let zero = EquivariantEstimator::constant(Mode::Location, Target::Smaller, "BLEE", 0.0);
        let c = clip_improve(&zero, &PsiBounds::constant(2.0, 5.0));
        assert_eq!(c.psi(0.3).unwrap(), 2.0);
        assert_eq!(c.label(), "improved BLEE");
        let inside = EquivariantEstimator::from_fn(Mode::Location, Target::Smaller, "x", |t| t.sin());
        let c = clip_improve(&inside, &PsiBounds::constant(-1.0, 1.0));
        for t in [-3.0, 0.0, 2.0] {
            assert_eq!(c.psi(t).unwrap(), t.sin());
        }
        let bad = clip_improve(&zero, &PsiBounds::constant(1.0, 0.0));
        assert!(matches!(bad.psi(0.0), Err(Error::InvalidBounds { .. })));
        let half = clip_improve_partial(&zero, &PsiBounds::constant(2.0, 5.0), 0.5).unwrap();
        assert_eq!(half.psi(0.0).unwrap(), 1.0);
        assert!(clip_improve_partial(&zero, &PsiBounds::constant(2.0, 5.0), 1.5).is_err());
    }

    #[test]
    fn catalog_examples() {
        let g = BivariateModel::indep_gamma(2.0, 1.0).unwrap();
        let b = catalog_estimator(&key("indep_gamma:smaller:bsee"), &g).unwrap();
        assert!((b.evaluate(3.0, 1.0).unwrap() - 1.0).abs() < 1e-15);

        let d = BivariateModel::dep_exp_gamma();
        let imp = catalog_estimator(&key("dep_exp_gamma:smaller:improved_blee"), &d).unwrap();
        let (x1, x2) = (1.0, 1.5);
        let expect = x1 - (4.0 * 2.5 / 1.5f64).ln().max(6f64.ln());
        assert!((imp.evaluate(x1, x2).unwrap() - expect).abs() < 1e-15);
        assert!(matches!(
            catalog_estimator(&key("larger:blee"), &d),
            Err(Error::Nonexistent(_))
        ));
        assert!(matches!(
            catalog_estimator(&key("bvn:smaller:blee"), &d),
            Err(Error::UnknownKey(_))
        ));
        assert!(matches!(
            catalog_estimator(&key("smaller:bsee"), &d),
            Err(Error::UnknownKey(_))
        ));
        assert!("smaller".parse::<CatalogKey>().is_err());
        assert!("smaller:best".parse::<CatalogKey>().is_err());
        assert_eq!(key("bvn:larger:rmle").to_string(), "bvn:larger:rmle");
    }

    #[test]
    fn bvn_larger_rmle_is_max_form() {
        // rho s1 < s2: the estimate is max{X2, weighted mean}
        let (s1, s2, rho) = (1.0, 2.0, 0.3);
        let m = BivariateModel::bvn(s1, s2, rho).unwrap();
        let r = catalog_estimator(&key("bvn:larger:rmle"), &m).unwrap();
        let v = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2;
        for (x1, x2) in [(0.0, 1.0), (3.0, -1.0), (2.0, 2.5)] {
            let pooled = (s2 * (s2 - rho * s1) * x1 + s1 * (s1 - rho * s2) * x2) / v;
            assert!((r.evaluate(x1, x2).unwrap() - f64::max(x2, pooled)).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_probability() {
        let m = BivariateModel::indep_exp(1.0, 1.0).unwrap();
        let th = Theta::new(0.0, 0.0).unwrap();
        let blee = catalog_estimator(&key("smaller:blee"), &m).unwrap();
        let imp = catalog_estimator(&key("smaller:improved_blee"), &m).unwrap();
        assert_eq!(estimate_difference_probability(&blee, &blee, &m, &th, 1000, 1).unwrap().0, 0.0);
        let (p, se) = estimate_difference_probability(&blee, &imp, &m, &th, 100_000, 1).unwrap();
        assert!(p > 5.0 * se && se > 0.0, "{p} {se}");

        let n = BivariateModel::bvn(1.0, 2.0, 0.5).unwrap();
        let b = catalog_estimator(&key("smaller:blee"), &n).unwrap();
        let bounds = PsiBounds::closed_form(&n, &LossSpec::squared_error(Mode::Location), Target::Smaller).unwrap();
        let c = clip_improve(&b, &bounds);
        assert_eq!(estimate_difference_probability(&b, &c, &n, &th, 1000, 3).unwrap().0, 0.0);

        let larger = catalog_estimator(&key("larger:blee"), &m).unwrap();
        assert!(matches!(
            estimate_difference_probability(&blee, &larger, &m, &th, 10, 1),
            Err(Error::Incompatible(_))
        ));
    }
}
