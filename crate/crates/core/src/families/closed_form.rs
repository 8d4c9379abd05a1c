//! Catalogued closed forms of `psi_lambda(t)` and of its envelope over lambda.

use super::{BivariateModel, Family, Mode, Target};
use crate::error::{Error, Result};
use crate::loss::{LossName, LossSpec};

/// Envelope values `(lower(t), upper(t))`; either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub lower: f64,
    pub upper: f64,
}

impl EnvelopePoint {
    fn new(lower: f64, upper: f64) -> Self {
        EnvelopePoint { lower, upper }
    }
}

const INF: f64 = f64::INFINITY;

/// `ln(4 (2 + u) / (1 + u))`, the LINEX shift of the dependent gamma model.
fn dep_exp_shift(u: f64) -> f64 {
    (4.0 * (2.0 + u) / (1.0 + u)).ln()
}

/// `(1 - (1+x)^-3) / (1 - (1+x)^-4)`, stable near zero.
fn cheriyan_ratio(x: f64) -> f64 {
    let l = x.ln_1p();
    (-3.0 * l).exp_m1() / (-4.0 * l).exp_m1()
}

fn cheriyan_smaller(u: f64) -> f64 {
    if u < 1.0 {
        cheriyan_ratio(u) / 3.0
    } else {
        u * cheriyan_ratio(1.0 / u) / 3.0
    }
}

fn cheriyan_larger(u: f64) -> f64 {
    if u <= 1.0 {
        cheriyan_ratio(u) / (3.0 * u)
    } else {
        cheriyan_ratio(1.0 / u) / 3.0
    }
}

/// Slopes `k1 = s1 (rho s2 - s1) / V` and `k2 = s2 (s2 - rho s1) / V` of the
/// normal model, snapped to zero in the degenerate cases.
pub(crate) fn bvn_slopes(s1: f64, s2: f64, rho: f64) -> (f64, f64) {
    let v = s1 * s1 + s2 * s2 - 2.0 * rho * s1 * s2;
    let snap = |a: f64, b: f64| {
        if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
            0.0
        } else {
            a - b
        }
    };
    (s1 * snap(rho * s2, s1) / v, s2 * snap(s2, rho * s1) / v)
}

impl BivariateModel {
    /// Loss under which the catalog carries closed forms for this model.
    pub fn catalog_loss(&self) -> Option<LossName> {
        match self.family {
            Family::DepExpGamma => Some(LossName::Linex),
            Family::Custom(_) => None,
            _ => Some(LossName::SquaredError),
        }
    }

    fn has_catalog_entry(&self, loss: &LossSpec) -> bool {
        loss.kind() == self.mode() && Some(loss.name()) == self.catalog_loss()
    }

    pub(crate) fn check_lambda(&self, lambda: f64) -> Result<()> {
        let ok = match self.mode() {
            Mode::Location => lambda >= 0.0 && lambda.is_finite(),
            Mode::Scale => lambda >= 1.0 && lambda.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "lambda = {lambda} is outside the {} domain",
                match self.mode() {
                    Mode::Location => "location [0, inf)",
                    Mode::Scale => "scale [1, inf)",
                }
            )))
        }
    }

    pub(crate) fn check_ancillary(&self, t: f64) -> Result<()> {
        let ok = t.is_finite() && (self.mode() == Mode::Location || t > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "ancillary value t = {t} is outside the support"
            )))
        }
    }

    /// Closed-form `psi_lambda(t)`, or `None` when the catalog has no entry
    /// for this model and loss.
    pub fn closed_form_psi(
        &self,
        loss: &LossSpec,
        target: Target,
        lambda: f64,
        t: f64,
    ) -> Result<Option<f64>> {
        if !self.has_catalog_entry(loss) {
            return Ok(None);
        }
        self.check_lambda(lambda)?;
        self.check_ancillary(t)?;
        let psi = match (&self.family, target) {
            (Family::Bvn { s1, s2, rho }, tg) => {
                let (k1, k2) = bvn_slopes(*s1, *s2, *rho);
                let k = if tg == Target::Smaller { k1 } else { k2 };
                k * (t - lambda)
            }
            (Family::DepExpGamma, tg) => {
                let u = t - lambda;
                if u < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "t = {t} lies below lambda = {lambda}, where the conditional law has no mass"
                    )));
                }
                match tg {
                    Target::Smaller => dep_exp_shift(u),
                    Target::Larger => u + dep_exp_shift(u),
                }
            }
            (Family::IndepExp { s1, s2 }, tg) => {
                let c = s1 * s2 / (s1 + s2);
                match tg {
                    Target::Smaller => (lambda - t).max(0.0) + c,
                    Target::Larger => (t - lambda).max(0.0) + c,
                }
            }
            (Family::CheriyanGamma, Target::Smaller) => cheriyan_smaller(t / lambda),
            (Family::CheriyanGamma, Target::Larger) => cheriyan_larger(t / lambda),
            (Family::PowerUniform { a1, a2 }, tg) => {
                let k = (a1 + a2 + 2.0) / (a1 + a2 + 1.0);
                match tg {
                    Target::Smaller => k * (t / lambda).max(1.0),
                    Target::Larger => k * (lambda / t).max(1.0),
                }
            }
            (Family::IndepGamma { a1, a2, .. }, tg) => {
                let d = a1 + a2 + 1.0;
                match tg {
                    Target::Smaller => (1.0 + t / lambda) / d,
                    Target::Larger => (1.0 + lambda / t) / d,
                }
            }
            (Family::Custom(_), _) => return Ok(None),
        };
        Ok(Some(psi))
    }

    /// Closed-form envelope `(inf, sup)` of `psi_lambda(t)` over lambda.
    pub fn closed_form_bounds(
        &self,
        loss: &LossSpec,
        target: Target,
        t: f64,
    ) -> Result<Option<EnvelopePoint>> {
        if !self.has_catalog_entry(loss) {
            return Ok(None);
        }
        self.check_ancillary(t)?;
        let b = match (&self.family, target) {
            (Family::Bvn { s1, s2, rho }, tg) => {
                let (k1, k2) = bvn_slopes(*s1, *s2, *rho);
                let k = if tg == Target::Smaller { k1 } else { k2 };
                // psi = k (t - lambda) sweeps from k t towards -sign(k) inf
                if k == 0.0 {
                    EnvelopePoint::new(0.0, 0.0)
                } else if k < 0.0 {
                    EnvelopePoint::new(k * t, INF)
                } else {
                    EnvelopePoint::new(-INF, k * t)
                }
            }
            (Family::DepExpGamma, tg) => {
                if t < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "t = {t} is outside the support [0, inf)"
                    )));
                }
                let ln8 = 8f64.ln();
                match tg {
                    Target::Smaller => EnvelopePoint::new(dep_exp_shift(t), ln8),
                    Target::Larger => EnvelopePoint::new(ln8, t + dep_exp_shift(t)),
                }
            }
            (Family::IndepExp { s1, s2 }, tg) => {
                let c = s1 * s2 / (s1 + s2);
                match tg {
                    Target::Smaller => EnvelopePoint::new((-t).max(0.0) + c, INF),
                    Target::Larger => EnvelopePoint::new(c, c + t.max(0.0)),
                }
            }
            (Family::CheriyanGamma, Target::Smaller) => {
                EnvelopePoint::new(0.25, cheriyan_smaller(t))
            }
            (Family::CheriyanGamma, Target::Larger) => EnvelopePoint::new(cheriyan_larger(t), INF),
            (Family::PowerUniform { a1, a2 }, tg) => {
                let k = (a1 + a2 + 2.0) / (a1 + a2 + 1.0);
                match tg {
                    Target::Smaller => EnvelopePoint::new(k, k * t.max(1.0)),
                    Target::Larger => EnvelopePoint::new(k * (1.0 / t).max(1.0), INF),
                }
            }
            (Family::IndepGamma { a1, a2, .. }, tg) => {
                let d = a1 + a2 + 1.0;
                match tg {
                    Target::Smaller => EnvelopePoint::new(1.0 / d, (1.0 + t) / d),
                    Target::Larger => EnvelopePoint::new((1.0 + 1.0 / t) / d, INF),
                }
            }
            (Family::Custom(_), _) => return Ok(None),
        };
        Ok(Some(b))
    }
}
