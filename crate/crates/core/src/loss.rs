//! Bowl-shaped loss functions.
//!
//! A location loss is evaluated at the error `a - theta`, a scale loss at the
//! ratio `a / theta`. Both kinds share [`LossSpec`]; only the argument
//! convention and the zero (`argmin`) differ.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Location,
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    SquaredError,
    Linex,
    Custom,
}

impl LossName {
    pub fn as_str(self) -> &'static str {
        match self {
            LossName::SquaredError => "squared_error",
            LossName::Linex => "linex",
            LossName::Custom => "custom",
        }
    }
}

impl fmt::Display for LossName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_error" | "squared-error" | "se" => Ok(LossName::SquaredError),
            "linex" => Ok(LossName::Linex),
            other => Err(Error::Config(format!(
                "unknown loss '{other}' (expected squared_error or linex)"
            ))),
        }
    }
}

/// A loss `W` with its derivative `W'`.
#[derive(Clone)]
pub struct LossSpec {
    kind: LossKind,
    name: LossName,
    w: RealFn,
    w_prime: Option<RealFn>,
    argmin: f64,
}

impl fmt::Debug for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSpec")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("argmin", &self.argmin)
            .field("has_derivative", &self.w_prime.is_some())
            .finish()
    }
}

impl LossSpec {
    /// `W(t) = t^2` (location) or `W(t) = (t - 1)^2` (scale).
    pub fn squared_error(kind: LossKind) -> Self {
        let argmin = match kind {
            LossKind::Location => 0.0,
            LossKind::Scale => 1.0,
        };
        LossSpec {
            kind,
            name: LossName::SquaredError,
            w: Arc::new(move |t| (t - argmin) * (t - argmin)),
            w_prime: Some(Arc::new(move |t| 2.0 * (t - argmin))),
            argmin,
        }
    }

    /// `W(t) = e^t - t - 1`, a location loss.
    pub fn linex() -> Self {
        LossSpec {
            kind: LossKind::Location,
            name: LossName::Linex,
            w: Arc::new(|t: f64| t.exp_m1() - t),
            w_prime: Some(Arc::new(|t: f64| t.exp_m1())),
            argmin: 0.0,
        }
    }

    /// A user-supplied loss. `w_prime` must be given before the loss can be
    /// used by the solver.
    pub fn custom(kind: LossKind, w: RealFn, w_prime: Option<RealFn>) -> Self {
        let argmin = match kind {
            LossKind::Location => 0.0,
            LossKind::Scale => 1.0,
        };
        LossSpec {
            kind,
            name: LossName::Custom,
            w,
            w_prime,
            argmin,
        }
    }

    pub fn from_name(name: LossName, kind: LossKind) -> Result<Self> {
        match (name, kind) {
            (LossName::SquaredError, k) => Ok(Self::squared_error(k)),
            (LossName::Linex, LossKind::Location) => Ok(Self::linex()),
            (LossName::Linex, LossKind::Scale) => Err(Error::Config(
                "linex is only available as a location loss".into(),
            )),
            (LossName::Custom, _) => Err(Error::Config(
                "custom losses are constructed with LossSpec::custom".into(),
            )),
        }
    }

    pub fn parse(name: &str, kind: LossKind) -> Result<Self> {
        Self::from_name(name.parse()?, kind)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn name(&self) -> LossName {
        self.name
    }

    pub fn argmin(&self) -> f64 {
        self.argmin
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t.is_nan() {
            return Err(Error::InvalidInput("loss argument is NaN".into()));
        }
        if self.kind == LossKind::Scale && t <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "scale loss evaluated at non-positive argument {t}"
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok((self.w)(t))
    }

    pub fn deriv(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        match &self.w_prime {
            Some(d) => Ok(d(t)),
            None => Err(Error::Config(
                "custom loss has no derivative; supply w_prime".into(),
            )),
        }
    }

    /// Unchecked derivative for integrand evaluation; the caller guarantees
    /// the domain and the presence of `w_prime`.
    pub(crate) fn deriv_unchecked(&self) -> Result<RealFn> {
        self.w_prime.clone().ok_or_else(|| {
            Error::Config("custom loss has no derivative; supply w_prime".into())
        })
    }

    /// `ln |W'(t)|`, stable for large arguments of the built-in losses.
    pub(crate) fn ln_abs_deriv(&self, t: f64) -> f64 {
        match self.name {
            LossName::SquaredError => (2.0 * (t - self.argmin)).abs().ln(),
            LossName::Linex => {
                if t > 0.0 {
                    t + (-(-t).exp_m1()).ln()
                } else {
                    (-t.exp_m1()).ln()
                }
            }
            LossName::Custom => match &self.w_prime {
                Some(d) => d(t).abs().ln(),
                None => f64::NAN,
            },
        }
    }

    /// Numerical guard for the bowl-shape conditions on a sample grid.
    ///
    /// Checks that `W(argmin) = 0`, `W >= 0`, `W` is nonincreasing left of
    /// `argmin` and nondecreasing right of it, and that `W'` is
    /// nondecreasing. A grid cannot certify the almost-everywhere form of
    /// the derivative condition; it can only find counterexamples.
    pub fn check_bowl_conditions(&self, grid: &[f64]) -> ConditionReport {
        let mut report = ConditionReport::default();
        let mut pts: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|t| t.is_finite() && (self.kind == LossKind::Location || *t > 0.0))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() < 3 {
            report.insufficient_grid = true;
            return report;
        }

        let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs()).max(1.0);
        let at_min = (self.w)(self.argmin);
        if at_min.abs() > slack(at_min, 0.0) {
            report.violations.push(Violation {
                condition: Condition::C1,
                left: self.argmin,
                right: self.argmin,
                detail: format!("W(argmin) = {at_min}, expected 0"),
            });
        }
        for &t in &pts {
            let v = (self.w)(t);
            if v < -slack(v, 0.0) {
                report.violations.push(Violation {
                    condition: Condition::C1,
                    left: t,
                    right: t,
                    detail: format!("W({t}) = {v} is negative"),
                });
            }
        }
        for pair in pts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (wa, wb) = ((self.w)(a), (self.w)(b));
            if b <= self.argmin && wa < wb - slack(wa, wb) {
                report.violations.push(Violation {
                    condition: Condition::C1,
                    left: a,
                    right: b,
                    detail: format!("W increases left of argmin: W({a}) = {wa} < W({b}) = {wb}"),
                });
            }
            if a >= self.argmin && wa > wb + slack(wa, wb) {
                report.violations.push(Violation {
                    condition: Condition::C1,
                    left: a,
                    right: b,
                    detail: format!("W decreases right of argmin: W({a}) = {wa} > W({b}) = {wb}"),
                });
            }
            if let Some(d) = &self.w_prime {
                let (da, db) = (d(a), d(b));
                if da > db + slack(da, db) {
                    report.violations.push(Violation {
                        condition: Condition::C2,
                        left: a,
                        right: b,
                        detail: format!("W' decreases: W'({a}) = {da} > W'({b}) = {db}"),
                    });
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Zero at argmin, decreasing then increasing.
    C1,
    /// Nondecreasing derivative.
    C2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub left: f64,
    pub right: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionReport {
    pub violations: Vec<Violation>,
    /// Fewer than three usable grid points inside the loss domain.
    pub insufficient_grid: bool,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        !self.insufficient_grid && self.violations.is_empty()
    }

    pub fn violates(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_argmin() {
        let se = LossSpec::squared_error(LossKind::Location);
        assert_eq!(se.value(0.0).unwrap(), 0.0);
        assert_eq!(LossSpec::linex().value(0.0).unwrap(), 0.0);
        let sc = LossSpec::squared_error(LossKind::Scale);
        assert_eq!(sc.value(2.0).unwrap(), 1.0);
        assert_eq!(sc.value(1.0).unwrap(), 0.0);
    }

    #[test]
    fn derivatives() {
        assert_eq!(LossSpec::squared_error(LossKind::Location).deriv(3.0).unwrap(), 6.0);
        assert_eq!(LossSpec::linex().deriv(0.0).unwrap(), 0.0);
        let d = LossSpec::linex().deriv(2f64.ln()).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        // finite-difference cross-check of the same value
        let l = LossSpec::linex();
        let h = 1e-6;
        let x = 2f64.ln();
        let fd = (l.value(x + h).unwrap() - l.value(x - h).unwrap()) / (2.0 * h);
        assert!((fd - 1.0).abs() < 1e-8);
        assert_eq!(LossSpec::squared_error(LossKind::Scale).deriv(3.0).unwrap(), 4.0);
    }

    #[test]
    fn scale_domain_rejected() {
        let sc = LossSpec::squared_error(LossKind::Scale);
        assert!(matches!(sc.value(0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(sc.deriv(-1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn custom_without_derivative() {
        let l = LossSpec::custom(LossKind::Location, Arc::new(|t: f64| t.abs()), None);
        assert_eq!(l.value(-2.0).unwrap(), 2.0);
        assert!(matches!(l.deriv(1.0), Err(Error::Config(_))));
    }

    #[test]
    fn bowl_conditions() {
        let se = LossSpec::squared_error(LossKind::Location);
        assert!(se.check_bowl_conditions(&[-2.0, -1.0, 0.0, 1.0, 2.0]).passed());
        assert!(LossSpec::linex().check_bowl_conditions(&[-3.0, 0.0, 3.0]).passed());

        let bad = LossSpec::custom(
            LossKind::Location,
            Arc::new(|t: f64| -t),
            Some(Arc::new(|_| -1.0)),
        );
        let report = bad.check_bowl_conditions(&[-3.0, 0.0, 3.0]);
        assert!(!report.passed());
        assert!(report.violates(Condition::C1));
        assert!(!report.violates(Condition::C2));
    }

    #[test]
    fn bowl_conditions_detect_concave_derivative() {
        // W(t) = |t|^{1/2}: bowl-shaped but W' is not nondecreasing.
        let l = LossSpec::custom(
            LossKind::Location,
            Arc::new(|t: f64| t.abs().sqrt()),
            Some(Arc::new(|t: f64| t.signum() * 0.5 / t.abs().sqrt())),
        );
        let r = l.check_bowl_conditions(&[-2.0, -1.0, 0.5, 1.0, 2.0]);
        assert!(r.violates(Condition::C2));
        assert!(!r.violates(Condition::C1));
    }

    #[test]
    fn short_grid_is_reported() {
        let se = LossSpec::squared_error(LossKind::Scale);
        let r = se.check_bowl_conditions(&[-1.0, 0.0, 2.0]);
        assert!(r.insufficient_grid);
        assert!(!r.passed());
    }

    #[test]
    fn linex_scale_is_config_error() {
        assert!(matches!(
            LossSpec::parse("linex", LossKind::Scale),
            Err(Error::Config(_))
        ));
        assert!(LossSpec::parse("squared_error", LossKind::Scale).is_ok());
        assert!(LossSpec::parse("huber", LossKind::Location).is_err());
    }

    #[test]
    fn ln_abs_deriv_matches_direct() {
        let l = LossSpec::linex();
        for &t in &[-5.0, -0.3, 0.2, 4.0, 30.0] {
            let direct = l.deriv(t).unwrap().abs().ln();
            assert!((l.ln_abs_deriv(t) - direct).abs() < 1e-12, "t = {t}");
        }
        // stays finite where exp overflows
        assert!((l.ln_abs_deriv(1000.0) - 1000.0).abs() < 1e-9);
    }
}
