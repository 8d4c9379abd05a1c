//! Bivariate location and scale models.
//!
//! Every model is described by the density `f(z1, z2)` of the standardized
//! pair. Location models generate `X = Z + theta`, scale models
//! `X = theta * Z` (componentwise). For the solver each model also exposes
//! the one-dimensional slices of `f` that define the conditional density of
//! the pivotal `S` given the ancillary statistic:
//!
//! | mode     | target  | slice at `u`  | Jacobian |
//! |----------|---------|---------------|----------|
//! | location | smaller | `f(s, s + u)` | 1        |
//! | location | larger  | `f(s - u, s)` | 1        |
//! | scale    | smaller | `f(s, s u)`   | s        |
//! | scale    | larger  | `f(s / u, s)` | s        |

pub(crate) mod closed_form;

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::quad::{integrate_strict, Window};

pub use closed_form::EnvelopePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Bvn,
    DepExpGamma,
    IndepExp,
    CheriyanGamma,
    PowerUniform,
    IndepGamma,
    Custom,
}

impl ModelName {
    pub const BUILT_IN: [ModelName; 6] = [
        ModelName::Bvn,
        ModelName::DepExpGamma,
        ModelName::IndepExp,
        ModelName::CheriyanGamma,
        ModelName::PowerUniform,
        ModelName::IndepGamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Bvn => "bvn",
            ModelName::DepExpGamma => "dep_exp_gamma",
            ModelName::IndepExp => "indep_exp",
            ModelName::CheriyanGamma => "cheriyan_gamma",
            ModelName::PowerUniform => "power_uniform",
            ModelName::IndepGamma => "indep_gamma",
            ModelName::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::BUILT_IN
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

/// How the parameters enter the joint law.
pub type Mode = LossKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Smaller,
    Larger,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Smaller => "smaller",
            Target::Larger => "larger",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smaller" | "theta1" | "1" => Ok(Target::Smaller),
            "larger" | "theta2" | "2" => Ok(Target::Larger),
            other => Err(Error::Config(format!(
                "unknown target '{other}' (expected smaller or larger)"
            ))),
        }
    }
}

/// Standardized support of `(Z1, Z2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    FullPlane,
    /// `0 < z1 < z2`.
    Wedge,
    PositiveQuadrant,
    UnitSquare,
    Box {
        z1: (f64, f64),
        z2: (f64, f64),
    },
}

/// A point of the restricted parameter space `theta1 <= theta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    theta1: f64,
    theta2: f64,
}

impl Theta {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::InvalidInput("theta must be finite".into()));
        }
        if theta1 > theta2 {
            return Err(Error::InvalidInput(format!(
                "theta1 = {theta1} exceeds theta2 = {theta2}; the parameter space requires theta1 <= theta2"
            )));
        }
        Ok(Theta { theta1, theta2 })
    }

    /// The anchored point with gap `lambda`: `(0, lambda)` for location and
    /// `(1, lambda)` for scale.
    pub fn anchored(mode: Mode, lambda: f64) -> Result<Self> {
        match mode {
            Mode::Location => Theta::new(0.0, lambda),
            Mode::Scale => Theta::new(1.0, lambda),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::Smaller => self.theta1,
            Target::Larger => self.theta2,
        }
    }

    /// `theta2 - theta1` or `theta2 / theta1`.
    pub fn gap(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Location => self.theta2 - self.theta1,
            Mode::Scale => self.theta2 / self.theta1,
        }
    }

    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        if mode == Mode::Scale && self.theta1 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "scale parameters must be positive, got theta1 = {}",
                self.theta1
            )));
        }
        Ok(())
    }
}

pub type LnDensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A user-supplied standardized density, usable through the generic solver.
#[derive(Clone)]
pub struct CustomDensity {
    pub label: String,
    pub mode: Mode,
    /// `ln f(z1, z2)`; `-inf` off the support.
    pub ln_density: LnDensityFn,
    /// Bounding box of the support.
    pub z1: (f64, f64),
    pub z2: (f64, f64),
    /// Typical spread of the density; used to place quadrature nodes.
    pub scale_hint: f64,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("label", &self.label)
            .field("mode", &self.mode)
            .field("z1", &self.z1)
            .field("z2", &self.z2)
            .finish()
    }
}

#[derive(Debug, Clone)]
enum Family {
    Bvn { s1: f64, s2: f64, rho: f64 },
    DepExpGamma,
    IndepExp { s1: f64, s2: f64 },
    CheriyanGamma,
    PowerUniform { a1: f64, a2: f64 },
    IndepGamma { a1: f64, a2: f64, lg1: f64, lg2: f64 },
    Custom(CustomDensity),
}

/// Name and hyperparameters, as read from JSON config or CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct BivariateModel {
    family: Family,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

fn ln_neg_expm1(x: f64) -> f64 {
    // ln(1 - e^{-x}) for x > 0
    (-(-x).exp_m1()).ln()
}

impl BivariateModel {
    pub fn bvn(s1: f64, s2: f64, rho: f64) -> Result<Self> {
        let s1 = positive("s1", s1)?;
        let s2 = positive("s2", s2)?;
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (-1, 1), got {rho}")));
        }
        Ok(BivariateModel {
            family: Family::Bvn { s1, s2, rho },
        })
    }

    pub fn dep_exp_gamma() -> Self {
        BivariateModel {
            family: Family::DepExpGamma,
        }
    }

    pub fn indep_exp(s1: f64, s2: f64) -> Result<Self> {
        Ok(BivariateModel {
            family: Family::IndepExp {
                s1: positive("s1", s1)?,
                s2: positive("s2", s2)?,
            },
        })
    }

    pub fn cheriyan_gamma() -> Self {
        BivariateModel {
            family: Family::CheriyanGamma,
        }
    }

    pub fn power_uniform(a1: f64, a2: f64) -> Result<Self> {
        Ok(BivariateModel {
            family: Family::PowerUniform {
                a1: positive("a1", a1)?,
                a2: positive("a2", a2)?,
            },
        })
    }

    pub fn indep_gamma(a1: f64, a2: f64) -> Result<Self> {
        let a1 = positive("a1", a1)?;
        let a2 = positive("a2", a2)?;
        Ok(BivariateModel {
            family: Family::IndepGamma {
                a1,
                a2,
                lg1: ln_gamma(a1),
                lg2: ln_gamma(a2),
            },
        })
    }

    pub fn custom(density: CustomDensity) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a < b && !a.is_nan() && !b.is_nan();
        if !ok(density.z1) || !ok(density.z2) {
            return Err(Error::InvalidInput("custom support box is empty".into()));
        }
        positive("scale_hint", density.scale_hint)?;
        if density.mode == Mode::Scale && (density.z1.0 < 0.0 || density.z2.0 < 0.0) {
            return Err(Error::InvalidInput(
                "scale-mode support must lie in the positive quadrant".into(),
            ));
        }
        Ok(BivariateModel {
            family: Family::Custom(density),
        })
    }

    /// Build a model from a name and a hyperparameter map.
    pub fn from_parts(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let model: ModelName = name.parse()?;
        let expected: &[&str] = match model {
            ModelName::Bvn => &["s1", "s2", "rho"],
            ModelName::IndepExp => &["s1", "s2"],
            ModelName::PowerUniform | ModelName::IndepGamma => &["a1", "a2"],
            _ => &[],
        };
        if let Some(extra) = params.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "model {name} does not take parameter '{extra}'"
            )));
        }
        let get = |k: &str| {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("model {name} requires parameter '{k}'")))
        };
        match model {
            ModelName::Bvn => Self::bvn(get("s1")?, get("s2")?, get("rho")?),
            ModelName::DepExpGamma => Ok(Self::dep_exp_gamma()),
            ModelName::IndepExp => Self::indep_exp(get("s1")?, get("s2")?),
            ModelName::CheriyanGamma => Ok(Self::cheriyan_gamma()),
            ModelName::PowerUniform => Self::power_uniform(get("a1")?, get("a2")?),
            ModelName::IndepGamma => Self::indep_gamma(get("a1")?, get("a2")?),
            ModelName::Custom => Err(Error::Config("custom models cannot be built from config".into())),
        }
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        Self::from_parts(&cfg.name, &cfg.params)
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            name: self.name().as_str().to_string(),
            params: self
                .params()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    /// Compact identifier such as `bvn[s1=2;s2=5;rho=0]`.
    pub fn id(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            return self.name().to_string();
        }
        let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.name(), body.join(";"))
    }

    /// Inverse of [`BivariateModel::id`].
    pub fn parse_id(id: &str) -> Result<Self> {
        let (name, rest) = match id.find('[') {
            Some(i) => (&id[..i], Some(&id[i..])),
            None => (id, None),
        };
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("malformed model id '{id}'")))?;
            for kv in inner.split(';').filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("malformed parameter '{kv}'")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number in '{kv}'")))?;
                params.insert(k.to_string(), v);
            }
        }
        Self::from_parts(name, &params)
    }

    pub fn name(&self) -> ModelName {
        match self.family {
            Family::Bvn { .. } => ModelName::Bvn,
            Family::DepExpGamma => ModelName::DepExpGamma,
            Family::IndepExp { .. } => ModelName::IndepExp,
            Family::CheriyanGamma => ModelName::CheriyanGamma,
            Family::PowerUniform { .. } => ModelName::PowerUniform,
            Family::IndepGamma { .. } => ModelName::IndepGamma,
            Family::Custom(_) => ModelName::Custom,
        }
    }

    pub fn mode(&self) -> Mode {
        match &self.family {
            Family::Bvn { .. } | Family::DepExpGamma | Family::IndepExp { .. } => Mode::Location,
            Family::CheriyanGamma | Family::PowerUniform { .. } | Family::IndepGamma { .. } => {
                Mode::Scale
            }
            Family::Custom(c) => c.mode,
        }
    }

    pub fn support(&self) -> Support {
        match &self.family {
            Family::Bvn { .. } => Support::FullPlane,
            Family::DepExpGamma => Support::Wedge,
            Family::IndepExp { .. } | Family::CheriyanGamma | Family::IndepGamma { .. } => {
                Support::PositiveQuadrant
            }
            Family::PowerUniform { .. } => Support::UnitSquare,
            Family::Custom(c) => Support::Box { z1: c.z1, z2: c.z2 },
        }
    }

    /// Range of the ancillary statistic (`D = X2 - X1` or `T = X2 / X1`) at
    /// `theta1 = theta2`.
    pub fn ancillary_support(&self) -> (f64, f64) {
        match (&self.family, self.mode()) {
            (Family::DepExpGamma, _) => (0.0, f64::INFINITY),
            (_, Mode::Location) => (f64::NEG_INFINITY, f64::INFINITY),
            (_, Mode::Scale) => (0.0, f64::INFINITY),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match &self.family {
            Family::Bvn { s1, s2, rho } => vec![("s1", *s1), ("s2", *s2), ("rho", *rho)],
            Family::IndepExp { s1, s2 } => vec![("s1", *s1), ("s2", *s2)],
            Family::PowerUniform { a1, a2 } | Family::IndepGamma { a1, a2, .. } => {
                vec![("a1", *a1), ("a2", *a2)]
            }
            Family::DepExpGamma | Family::CheriyanGamma | Family::Custom(_) => Vec::new(),
        }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params().into_iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn ln_density(&self, z1: f64, z2: f64) -> f64 {
        let neg = f64::NEG_INFINITY;
        match &self.family {
            Family::Bvn { s1, s2, rho } => {
                let (a, b) = (z1 / s1, z2 / s2);
                let one_m = 1.0 - rho * rho;
                let q = a * a - 2.0 * rho * a * b + b * b;
                -(2.0 * PI * s1 * s2 * one_m.sqrt()).ln() - q / (2.0 * one_m)
            }
            Family::DepExpGamma => {
                if z1 > 0.0 && z2 > z1 {
                    LN_2 + z1.ln() + z2.ln() - z1 - z2
                } else {
                    neg
                }
            }
            Family::IndepExp { s1, s2 } => {
                if z1 > 0.0 && z2 > 0.0 {
                    -(s1 * s2).ln() - z1 / s1 - z2 / s2
                } else {
                    neg
                }
            }
            Family::CheriyanGamma => {
                if z1 > 0.0 && z2 > 0.0 {
                    -z1.max(z2) + ln_neg_expm1(z1.min(z2))
                } else {
                    neg
                }
            }
            Family::PowerUniform { a1, a2 } => {
                if z1 > 0.0 && z1 < 1.0 && z2 > 0.0 && z2 < 1.0 {
                    (a1 * a2).ln() + (a1 - 1.0) * z1.ln() + (a2 - 1.0) * z2.ln()
                } else {
                    neg
                }
            }
            Family::IndepGamma { a1, a2, lg1, lg2 } => {
                if z1 > 0.0 && z2 > 0.0 {
                    (a1 - 1.0) * z1.ln() + (a2 - 1.0) * z2.ln() - z1 - z2 - lg1 - lg2
                } else {
                    neg
                }
            }
            Family::Custom(c) => {
                if z1 < c.z1.0 || z1 > c.z1.1 || z2 < c.z2.0 || z2 > c.z2.1 {
                    neg
                } else {
                    (c.ln_density)(z1, z2)
                }
            }
        }
    }

    /// Standardized joint density; zero off the support.
    pub fn joint_density(&self, z1: f64, z2: f64) -> f64 {
        self.ln_density(z1, z2).exp()
    }

    /// The pair of density arguments that make up the slice at `(u, s)`.
    pub fn slice_point(&self, target: Target, u: f64, s: f64) -> (f64, f64) {
        match (self.mode(), target) {
            (Mode::Location, Target::Smaller) => (s, s + u),
            (Mode::Location, Target::Larger) => (s - u, s),
            (Mode::Scale, Target::Smaller) => (s, s * u),
            (Mode::Scale, Target::Larger) => (s / u, s),
        }
    }

    /// `ln` of the slice density at `(u, s)`, without the Jacobian.
    pub fn ln_slice(&self, target: Target, u: f64, s: f64) -> f64 {
        let (z1, z2) = self.slice_point(target, u, s);
        self.ln_density(z1, z2)
    }

    /// `ln` of the unnormalized conditional density of `S` given the
    /// ancillary at `u`, including the Jacobian in scale mode.
    pub fn ln_conditional_kernel(&self, target: Target, u: f64, s: f64) -> f64 {
        match self.mode() {
            Mode::Location => self.ln_slice(target, u, s),
            Mode::Scale => {
                if s > 0.0 {
                    s.ln() + self.ln_slice(target, u, s)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Range of `s` on which the slice at `u` can be positive, with hints
    /// for where its mass sits. `None` when the slice is empty.
    pub fn slice_window(&self, target: Target, u: f64) -> Option<Window> {
        if !u.is_finite() || (self.mode() == Mode::Scale && u <= 0.0) {
            return None;
        }
        let inf = f64::INFINITY;
        let w = match (&self.family, target) {
            (Family::Bvn { s1, s2, rho }, t) => {
                let v = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2;
                let sd = s1 * s2 * (1.0 - rho * rho).sqrt() / v.sqrt();
                let slope = match t {
                    Target::Smaller => (rho * s1 * s2 - s1 * s1) / v,
                    Target::Larger => (s2 * s2 - rho * s1 * s2) / v,
                };
                Window::new(-inf, inf, slope * u, sd)
            }
            (Family::DepExpGamma, Target::Smaller) => {
                if u <= 0.0 {
                    return None;
                }
                Window::new(0.0, inf, 1.0, 0.7)
            }
            (Family::DepExpGamma, Target::Larger) => {
                if u <= 0.0 {
                    return None;
                }
                Window::new(u, inf, u + 1.0, 0.7)
            }
            (Family::IndepExp { s1, s2 }, t) => {
                let m = 1.0 / (1.0 / s1 + 1.0 / s2);
                let lo = match t {
                    Target::Smaller => (-u).max(0.0),
                    Target::Larger => u.max(0.0),
                };
                Window::new(lo, inf, lo + m, m)
            }
            (Family::CheriyanGamma, t) => {
                let rate = match t {
                    Target::Smaller => u.max(1.0),
                    Target::Larger => (1.0 / u).max(1.0),
                };
                Window::new(0.0, inf, 2.5 / rate, 1.5 / rate)
            }
            (Family::PowerUniform { .. }, t) => {
                let hi = match t {
                    Target::Smaller => (1.0 / u).min(1.0),
                    Target::Larger => u.min(1.0),
                };
                Window::new(0.0, hi, 0.5 * hi, 0.5 * hi)
            }
            (Family::IndepGamma { a1, a2, .. }, t) => {
                let rate = match t {
                    Target::Smaller => 1.0 + u,
                    Target::Larger => 1.0 + 1.0 / u,
                };
                let shape = a1 + a2;
                Window::new(0.0, inf, shape / rate, shape.sqrt() / rate)
            }
            (Family::Custom(c), t) => return self.custom_slice_window(c, t, u),
        };
        Some(w)
    }

    fn custom_slice_window(&self, c: &CustomDensity, target: Target, u: f64) -> Option<Window> {
        let (z1, z2) = (c.z1, c.z2);
        let (mut lo, mut hi) = match (c.mode, target) {
            (Mode::Location, Target::Smaller) => (z1.0.max(z2.0 - u), z1.1.min(z2.1 - u)),
            (Mode::Location, Target::Larger) => ((z1.0 + u).max(z2.0), (z1.1 + u).min(z2.1)),
            (Mode::Scale, Target::Smaller) => (z1.0.max(z2.0 / u), z1.1.min(z2.1 / u)),
            (Mode::Scale, Target::Larger) => (z2.0.max(u * z1.0), z2.1.min(u * z1.1)),
        };
        if c.mode == Mode::Scale {
            lo = lo.max(0.0);
            hi = hi.max(lo);
        }
        if !(hi > lo) {
            return None;
        }
        let h = c.scale_hint;
        let probes: Vec<f64> = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (1..400).map(|k| lo + (hi - lo) * k as f64 / 400.0).collect(),
            (true, false) => (1..800).map(|k| lo + h * k as f64 / 8.0).collect(),
            (false, true) => (1..800).map(|k| hi - h * k as f64 / 8.0).collect(),
            (false, false) => (-800..=800).map(|k| h * k as f64 / 8.0).collect(),
        };
        let best = probes
            .iter()
            .map(|&s| (s, self.ln_conditional_kernel(target, u, s)))
            .filter(|(_, l)| l.is_finite())
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        let scale = if lo.is_finite() && hi.is_finite() {
            (0.5 * (hi - lo)).min(h)
        } else {
            h
        };
        Some(Window::new(lo, hi, best.0, scale))
    }

    /// Normalizer of the conditional density at `u` and the log offset it
    /// was computed under: the returned `z` satisfies
    /// `integral exp(kernel(s) - offset) ds = z`.
    pub fn conditional_normalizer(&self, target: Target, u: f64, rel_tol: f64) -> Result<(Window, f64, f64)> {
        let window = self
            .slice_window(target, u)
            .ok_or_else(|| Error::DegenerateConditional {
                t: u,
                reason: "the slice of the density is empty".into(),
            })?;
        let offset = self.kernel_offset(target, u, &window);
        if !offset.is_finite() {
            return Err(Error::DegenerateConditional {
                t: u,
                reason: "the density vanishes on the slice".into(),
            });
        }
        let r = integrate_strict(
            |s| (self.ln_conditional_kernel(target, u, s) - offset).exp(),
            &window,
            rel_tol,
        )?;
        if !(r.value > 0.0 && r.value.is_finite()) {
            return Err(Error::DegenerateConditional {
                t: u,
                reason: format!("normalizing integral is {}", r.value),
            });
        }
        Ok((window, offset, r.value))
    }

    /// Largest log-kernel value over a few probes near the window center.
    pub(crate) fn kernel_offset(&self, target: Target, u: f64, w: &Window) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for k in -8..=8 {
            let s = if w.lo.is_finite() && w.hi.is_finite() {
                let s = w.center + 0.125 * k as f64 * (w.hi - w.lo);
                if s <= w.lo || s >= w.hi {
                    continue;
                }
                s
            } else {
                w.center + 0.5 * k as f64 * w.scale
            };
            if s <= w.lo || s >= w.hi {
                continue;
            }
            best = best.max(self.ln_conditional_kernel(target, u, s));
        }
        best
    }

    /// Conditional density of `S` at `s` given the ancillary statistic
    /// equals `t`, normalized in `s`.
    pub fn conditional_density(&self, target: Target, s: f64, t: f64) -> Result<f64> {
        let (_, offset, z) = self.conditional_normalizer(target, t, 1e-11)?;
        Ok((self.ln_conditional_kernel(target, t, s) - offset).exp() / z)
    }

    /// `ln` of the marginal density of `Z1` (smaller) or `Z2` (larger).
    pub fn ln_marginal(&self, target: Target, z: f64) -> f64 {
        let neg = f64::NEG_INFINITY;
        match (&self.family, target) {
            (Family::Bvn { s1, s2, .. }, t) => {
                let s = if t == Target::Smaller { *s1 } else { *s2 };
                -0.5 * (2.0 * PI).ln() - s.ln() - 0.5 * (z / s) * (z / s)
            }
            (Family::DepExpGamma, t) => {
                if z <= 0.0 {
                    return neg;
                }
                match t {
                    // 2 g(z) (1 - G(z)) with g the Gamma(2, 1) density
                    Target::Smaller => LN_2 + z.ln() + z.ln_1p() - 2.0 * z,
                    // 2 g(z) G(z)
                    Target::Larger => {
                        let cdf = if z < 1e-3 {
                            z * z * (0.5 - z / 3.0 + z * z / 8.0)
                        } else {
                            -(-z).exp_m1() - z * (-z).exp()
                        };
                        LN_2 + z.ln() - z + cdf.ln()
                    }
                }
            }
            (Family::IndepExp { s1, s2 }, t) => {
                if z <= 0.0 {
                    return neg;
                }
                let s = if t == Target::Smaller { *s1 } else { *s2 };
                -s.ln() - z / s
            }
            (Family::CheriyanGamma, _) => {
                if z <= 0.0 {
                    neg
                } else {
                    z.ln() - z
                }
            }
            (Family::PowerUniform { a1, a2 }, t) => {
                if z <= 0.0 || z >= 1.0 {
                    return neg;
                }
                let a = if t == Target::Smaller { *a1 } else { *a2 };
                a.ln() + (a - 1.0) * z.ln()
            }
            (Family::IndepGamma { a1, a2, lg1, lg2 }, t) => {
                if z <= 0.0 {
                    return neg;
                }
                let (a, lg) = if t == Target::Smaller { (*a1, *lg1) } else { (*a2, *lg2) };
                (a - 1.0) * z.ln() - z - lg
            }
            (Family::Custom(c), t) => {
                let (own, other) = if t == Target::Smaller { (c.z1, c.z2) } else { (c.z2, c.z1) };
                if z < own.0 || z > own.1 {
                    return neg;
                }
                let pair = |w: f64| if t == Target::Smaller { (z, w) } else { (w, z) };
                let center = if other.0.is_finite() && other.1.is_finite() {
                    0.5 * (other.0 + other.1)
                } else if other.0.is_finite() {
                    other.0 + c.scale_hint
                } else if other.1.is_finite() {
                    other.1 - c.scale_hint
                } else {
                    0.0
                };
                let w = Window::new(other.0, other.1, center, c.scale_hint);
                match integrate_strict(
                    |v| {
                        let (a, b) = pair(v);
                        (c.ln_density)(a, b).exp()
                    },
                    &w,
                    1e-10,
                ) {
                    Ok(r) if r.value > 0.0 => r.value.ln(),
                    _ => neg,
                }
            }
        }
    }

    /// Range and mass hints of the marginal of `Z1` or `Z2`.
    pub fn marginal_window(&self, target: Target) -> Window {
        let inf = f64::INFINITY;
        let pick = |a: f64, b: f64| if target == Target::Smaller { a } else { b };
        match &self.family {
            Family::Bvn { s1, s2, .. } => Window::new(-inf, inf, 0.0, pick(*s1, *s2)),
            Family::DepExpGamma => Window::new(0.0, inf, pick(1.0, 2.5), pick(0.7, 1.2)),
            Family::IndepExp { s1, s2 } => {
                let s = pick(*s1, *s2);
                Window::new(0.0, inf, s, s)
            }
            Family::CheriyanGamma => Window::new(0.0, inf, 2.0, 1.4),
            Family::PowerUniform { .. } => Window::new(0.0, 1.0, 0.5, 0.5),
            Family::IndepGamma { a1, a2, .. } => {
                let a = pick(*a1, *a2);
                Window::new(0.0, inf, a, a.sqrt())
            }
            Family::Custom(c) => {
                let (lo, hi) = pick_pair(target, c.z1, c.z2);
                let center = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if lo.is_finite() {
                    lo + c.scale_hint
                } else if hi.is_finite() {
                    hi - c.scale_hint
                } else {
                    0.0
                };
                Window::new(lo, hi, center, c.scale_hint)
            }
        }
    }

    /// One standardized draw `(Z1, Z2)`.
    pub fn sample_standardized<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        Ok(match &self.family {
            Family::Bvn { s1, s2, rho } => {
                let n1: f64 = StandardNormal.sample(rng);
                let n2: f64 = StandardNormal.sample(rng);
                (s1 * n1, s2 * (rho * n1 + (1.0 - rho * rho).sqrt() * n2))
            }
            Family::DepExpGamma => {
                // order statistics of two Gamma(2, 1) variates
                let mut g = || -> f64 {
                    let a: f64 = Exp1.sample(rng);
                    let b: f64 = Exp1.sample(rng);
                    a + b
                };
                let (a, b) = (g(), g());
                (a.min(b), a.max(b))
            }
            Family::IndepExp { s1, s2 } => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                (s1 * a, s2 * b)
            }
            Family::CheriyanGamma => {
                let u0: f64 = Exp1.sample(rng);
                let u1: f64 = Exp1.sample(rng);
                let u2: f64 = Exp1.sample(rng);
                (u0 + u1, u0 + u2)
            }
            Family::PowerUniform { a1, a2 } => {
                let u: f64 = Open01.sample(rng);
                let v: f64 = Open01.sample(rng);
                (u.powf(1.0 / a1), v.powf(1.0 / a2))
            }
            Family::IndepGamma { a1, a2, .. } => {
                let g1 = Gamma::new(*a1, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
                let g2 = Gamma::new(*a2, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
                (g1.sample(rng), g2.sample(rng))
            }
            Family::Custom(c) => {
                return Err(Error::Config(format!(
                    "custom model '{}' has no sampler",
                    c.label
                )))
            }
        })
    }

    /// Map a standardized draw to the observation scale at `theta`.
    pub fn apply_theta(&self, theta: &Theta, z: (f64, f64)) -> (f64, f64) {
        match self.mode() {
            Mode::Location => (z.0 + theta.theta1(), z.1 + theta.theta2()),
            Mode::Scale => (z.0 * theta.theta1(), z.1 * theta.theta2()),
        }
    }

    /// `n` i.i.d. draws of `(X1, X2)` at `theta`; deterministic given `seed`.
    pub fn sample(&self, theta: &Theta, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        theta.check_mode(self.mode())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                self.sample_standardized(&mut rng)
                    .map(|z| self.apply_theta(theta, z))
            })
            .collect()
    }

    pub(crate) fn bvn_params(&self) -> Option<(f64, f64, f64)> {
        match self.family {
            Family::Bvn { s1, s2, rho } => Some((s1, s2, rho)),
            _ => None,
        }
    }

    pub(crate) fn shape_params(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::PowerUniform { a1, a2 } | Family::IndepGamma { a1, a2, .. } => Some((a1, a2)),
            Family::IndepExp { s1, s2 } => Some((s1, s2)),
            _ => None,
        }
    }
}

fn pick_pair(target: Target, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    match target {
        Target::Smaller => a,
        Target::Larger => b,
    }
}
