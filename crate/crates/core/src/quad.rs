//! Double-exponential quadrature.
//!
//! Finite intervals use the tanh-sinh map, half-lines the exp-sinh map and
//! the real line the sinh-sinh map. The trapezoid step is halved until two
//! successive estimates agree relative to the L1 mass of the integrand, so
//! sign-changing integrands whose value is near zero still terminate.
//! Algebraic endpoint singularities (e.g. `s^{-0.6}` at zero) are absorbed
//! by the double-exponential clustering of nodes.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const H0: f64 = 0.5;
const MAX_LEVEL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Integral of `|f|`.
    pub l1: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub converged: bool,
}

/// Integration range with placement hints.
///
/// `center` and `scale` locate the bulk of the integrand; they only matter
/// for unbounded ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub scale: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64, center: f64, scale: f64) -> Self {
        Window {
            lo,
            hi,
            center,
            scale,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    /// Interval `[center - k*scale, center + k*scale]` clipped to the range.
    pub fn core(&self, k: f64) -> (f64, f64) {
        (
            (self.center - k * self.scale).max(self.lo),
            (self.center + k * self.scale).min(self.hi),
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite { a: f64, b: f64 },
    Upper { a: f64, scale: f64 },
    Lower { b: f64, scale: f64 },
    Whole { center: f64, scale: f64 },
}

impl Map {
    fn from_window(w: &Window) -> Result<Map> {
        if !(w.lo < w.hi) {
            return Err(Error::Quadrature(format!(
                "empty integration range [{}, {}]",
                w.lo, w.hi
            )));
        }
        let scale = if w.scale.is_finite() && w.scale > 0.0 {
            w.scale
        } else {
            1.0
        };
        Ok(match (w.lo.is_finite(), w.hi.is_finite()) {
            (true, true) => Map::Finite { a: w.lo, b: w.hi },
            (true, false) => Map::Upper {
                a: w.lo,
                scale: (w.center - w.lo).max(scale),
            },
            (false, true) => Map::Lower {
                b: w.hi,
                scale: (w.hi - w.center).max(scale),
            },
            (false, false) => Map::Whole {
                center: if w.center.is_finite() { w.center } else { 0.0 },
                scale,
            },
        })
    }

    fn t_max(&self) -> f64 {
        match self {
            Map::Finite { .. } => 4.5,
            Map::Upper { .. } | Map::Lower { .. } => 5.0,
            Map::Whole { .. } => 4.5,
        }
    }

    /// Abscissa and Jacobian at trapezoid parameter `t`, or `None` when the
    /// node collapses onto an endpoint or the weight underflows.
    fn node(&self, t: f64) -> Option<(f64, f64)> {
        let v = FRAC_PI_2 * t.sinh();
        let dv = FRAC_PI_2 * t.cosh();
        let (x, w) = match *self {
            Map::Finite { a, b } => {
                let half = b - a;
                let (x, d) = if t >= 0.0 {
                    let d = half / (1.0 + (2.0 * v).exp());
                    (b - d, d)
                } else {
                    let d = half / (1.0 + (-2.0 * v).exp());
                    (a + d, d)
                };
                let e = (-v.abs()).exp();
                // sech^2(v) = 4 e^{-2|v|} / (1 + e^{-2|v|})^2
                let sech2 = 4.0 * e * e / ((1.0 + e * e) * (1.0 + e * e));
                if d == 0.0 || x <= a || x >= b {
                    return None;
                }
                (x, 0.5 * half * dv * sech2)
            }
            Map::Upper { a, scale } => {
                let e = v.exp();
                let x = a + scale * e;
                if x <= a || !x.is_finite() {
                    return None;
                }
                (x, scale * e * dv)
            }
            Map::Lower { b, scale } => {
                let e = v.exp();
                let x = b - scale * e;
                if x >= b || !x.is_finite() {
                    return None;
                }
                (x, scale * e * dv)
            }
            Map::Whole { center, scale } => {
                let x = center + scale * v.sinh();
                if !x.is_finite() {
                    return None;
                }
                (x, scale * v.cosh() * dv)
            }
        };
        if w > 0.0 && w.is_finite() {
            Some((x, w))
        } else {
            None
        }
    }
}

fn level_sum<F: Fn(f64) -> f64>(
    f: &F,
    map: &Map,
    h: f64,
    odd_only: bool,
) -> Result<(f64, f64)> {
    let k_max = (map.t_max() / h).floor() as i64;
    let (mut sum, mut abs) = (0.0, 0.0);
    let mut add = |t: f64| -> Result<()> {
        if let Some((x, w)) = map.node(t) {
            let fx = f(x);
            let term = fx * w;
            if !term.is_finite() {
                return Err(Error::Quadrature(format!(
                    "integrand is not finite at x = {x} (f = {fx})"
                )));
            }
            sum += term;
            abs += term.abs();
        }
        Ok(())
    };
    if !odd_only {
        add(0.0)?;
    }
    let (start, step) = if odd_only { (1, 2) } else { (1, 1) };
    let mut k = start;
    while k <= k_max {
        let t = k as f64 * h;
        add(t)?;
        add(-t)?;
        k += step;
    }
    Ok((sum, abs))
}

/// Integrate `f` over `window` to relative tolerance `rel_tol` (measured
/// against the L1 mass of `f`).
pub fn integrate<F: Fn(f64) -> f64>(f: F, window: &Window, rel_tol: f64) -> Result<QuadResult> {
    let map = Map::from_window(window)?;
    let mut h = H0;
    let (mut sum, mut abs) = level_sum(&f, &map, h, false)?;
    let mut prev = sum * h;
    let mut result = QuadResult {
        value: prev,
        l1: abs * h,
        error: f64::INFINITY,
        converged: false,
    };
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let (s, a) = level_sum(&f, &map, h, true)?;
        sum += s;
        abs += a;
        let value = sum * h;
        let l1 = abs * h;
        let error = (value - prev).abs();
        result = QuadResult {
            value,
            l1,
            error,
            converged: false,
        };
        if l1 == 0.0 || (level >= 2 && error <= rel_tol * l1) {
            result.converged = true;
            break;
        }
        prev = value;
    }
    Ok(result)
}

/// Like [`integrate`] but fails when the refinement does not converge.
pub fn integrate_strict<F: Fn(f64) -> f64>(f: F, window: &Window, rel_tol: f64) -> Result<QuadResult> {
    let r = integrate(f, window, rel_tol)?;
    if !r.converged {
        return Err(Error::Quadrature(format!(
            "no convergence on [{}, {}]: last change {:e} vs mass {:e}",
            window.lo, window.hi, r.error, r.l1
        )));
    }
    Ok(r)
}
