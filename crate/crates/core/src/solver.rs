//! Conditional-risk root finding, lambda envelopes and likelihood-ratio
//! monotonicity checks.
//!
//! For a location target, `psi_lambda(t)` is the root in `c` of
//! `G(c) = E[W'(S - c) | ancillary]`, which is nonincreasing in `c`. For a
//! scale target it is the root of `G(c) = E[S W'(c S) | ancillary]`, which is
//! nondecreasing in `c`; the bracket is then searched in `ln c`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::families::{BivariateModel, EnvelopePoint, Mode, Target};
use crate::loss::{LossSpec, RealFn};
use crate::quad::{integrate_strict, Window};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub quad_rel_tol: f64,
    pub bracket_init: f64,
    pub bracket_max_expansions: usize,
    pub lambda_grid: Vec<f64>,
    /// Integrand mass below which an unbounded tail is considered negligible.
    pub tail_cutoff: f64,
}

pub const DEFAULT_LAMBDA_MAX: f64 = 1e3;
pub const DEFAULT_LAMBDA_POINTS: usize = 64;

impl SolverOptions {
    pub fn for_mode(mode: Mode) -> Self {
        SolverOptions {
            abs_tol: 1e-10,
            quad_rel_tol: 1e-9,
            bracket_init: 1.0,
            bracket_max_expansions: 60,
            lambda_grid: lambda_grid(mode, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_POINTS),
            tail_cutoff: 1e-12,
        }
    }

    pub fn validate(&self, mode: Mode) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("quad_rel_tol", self.quad_rel_tol)?;
        positive("bracket_init", self.bracket_init)?;
        positive("tail_cutoff", self.tail_cutoff)?;
        if self.lambda_grid.is_empty() {
            return Err(Error::Config("lambda grid is empty".into()));
        }
        if self.lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("lambda grid must be strictly increasing".into()));
        }
        let min = identity(mode);
        if !(self.lambda_grid[0] >= min) || !self.lambda_grid.iter().all(|l| l.is_finite()) {
            return Err(Error::Config(format!(
                "lambda grid must lie in [{min}, inf)"
            )));
        }
        Ok(())
    }
}

/// The lambda value at which the two parameters coincide.
pub fn identity(mode: Mode) -> f64 {
    match mode {
        Mode::Location => 0.0,
        Mode::Scale => 1.0,
    }
}

/// Envelope grid: for location, zero followed by `points - 1` log-spaced
/// values in `[1e-3, max]`; for scale, `points` log-spaced values in `[1, max]`.
pub fn lambda_grid(mode: Mode, max: f64, points: usize) -> Vec<f64> {
    let logspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![hi];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    };
    match mode {
        Mode::Location => {
            let mut g = vec![0.0];
            if points > 1 {
                g.extend(logspace(1e-3_f64.min(max), max, points - 1));
            }
            g.dedup();
            g
        }
        Mode::Scale => {
            let mut g = logspace(1.0, max.max(1.0), points.max(1));
            g.dedup();
            g
        }
    }
}

/// A normalized one-dimensional law given by its log-kernel.
struct Law<'a> {
    ln_kernel: Box<dyn Fn(f64) -> f64 + 'a>,
    window: Window,
    ln_norm: f64,
}

impl Law<'_> {
    fn ln_pdf(&self, s: f64) -> f64 {
        (self.ln_kernel)(s) - self.ln_norm
    }
}

fn conditional_law<'a>(model: &'a BivariateModel, target: Target, u: f64, rel_tol: f64) -> Result<Law<'a>> {
    let (window, offset, z) = model.conditional_normalizer(target, u, rel_tol)?;
    Ok(Law {
        ln_kernel: Box::new(move |s| model.ln_conditional_kernel(target, u, s)),
        window,
        ln_norm: offset + z.ln(),
    })
}

fn marginal_law<'a>(model: &'a BivariateModel, target: Target, rel_tol: f64) -> Result<Law<'a>> {
    let window = model.marginal_window(target);
    let ln_kernel = move |z: f64| model.ln_marginal(target, z);
    let r = integrate_strict(|z| ln_kernel(z).exp(), &window, rel_tol)?;
    if !(r.value > 0.0 && r.value.is_finite()) {
        return Err(Error::DegenerateConditional {
            t: f64::NAN,
            reason: format!("marginal density integrates to {}", r.value),
        });
    }
    Ok(Law {
        ln_kernel: Box::new(ln_kernel),
        window,
        ln_norm: r.value.ln(),
    })
}

/// Evaluates the first-order equation of one law.
struct Equation<'a> {
    law: Law<'a>,
    loss: &'a LossSpec,
    deriv: RealFn,
    mode: Mode,
    opts: &'a SolverOptions,
}

impl<'a> Equation<'a> {
    fn new(law: Law<'a>, loss: &'a LossSpec, mode: Mode, opts: &'a SolverOptions) -> Result<Self> {
        Ok(Equation {
            deriv: loss.deriv_unchecked()?,
            law,
            loss,
            mode,
            opts,
        })
    }

    fn arg(&self, s: f64, c: f64) -> f64 {
        match self.mode {
            Mode::Location => s - c,
            Mode::Scale => c * s,
        }
    }

    fn integrand(&self, s: f64, c: f64) -> f64 {
        let lp = self.law.ln_pdf(s);
        if lp == f64::NEG_INFINITY || (self.mode == Mode::Scale && s <= 0.0) {
            return 0.0;
        }
        let jac = match self.mode {
            Mode::Location => 1.0,
            Mode::Scale => s,
        };
        let a = self.arg(s, c);
        let d = (self.deriv)(a);
        if d == 0.0 {
            return 0.0;
        }
        let v = d * jac * lp.exp();
        if v.is_finite() {
            v
        } else {
            d.signum() * (self.loss.ln_abs_deriv(a) + jac.ln() + lp).exp()
        }
    }

    fn ln_abs_integrand(&self, s: f64, c: f64) -> f64 {
        let lp = self.law.ln_pdf(s);
        let a = self.arg(s, c);
        let jac = match self.mode {
            Mode::Location => 0.0,
            Mode::Scale => s.ln(),
        };
        lp + self.loss.ln_abs_deriv(a) + jac
    }

    /// Rejects integrands whose unbounded tails do not decay: at far probes
    /// `center +- scale 2^k` the local mass `|g(s)| * (s - center)` must be
    /// below the cutoff or still shrinking.
    fn check_tails(&self, c: f64) -> Result<()> {
        let w = &self.law.window;
        let threshold = self.opts.tail_cutoff.ln();
        for (dir, open) in [(1.0, w.hi == f64::INFINITY), (-1.0, w.lo == f64::NEG_INFINITY)] {
            if !open {
                continue;
            }
            let probe = |k: i32| {
                let width = w.scale.max(1e-300) * 2f64.powi(k);
                let s = w.center + dir * width;
                self.ln_abs_integrand(s, c) + width.ln()
            };
            let (near, far) = (probe(40), probe(50));
            if far.is_nan() || (far > threshold && far >= near) {
                return Err(Error::Divergent(format!(
                    "the first-order integrand does not decay as s -> {}inf",
                    if dir > 0.0 { "+" } else { "-" }
                )));
            }
        }
        Ok(())
    }

    fn g(&self, c: f64) -> Result<f64> {
        integrate_strict(|s| self.integrand(s, c), &self.law.window, self.opts.quad_rel_tol)
            .map(|r| r.value)
    }

    fn start(&self) -> f64 {
        let w = &self.law.window;
        match self.mode {
            Mode::Location => w.center,
            Mode::Scale => {
                if w.center > 0.0 && w.center.is_finite() {
                    1.0 / w.center
                } else {
                    1.0
                }
            }
        }
    }

    /// `G` in the search variable `x` (`c` or `ln c`), signed so that a
    /// positive value means the root lies to the right.
    fn signed(&self, x: f64) -> Result<f64> {
        match self.mode {
            Mode::Location => self.g(x),
            Mode::Scale => self.g(x.exp()).map(|v| -v),
        }
    }

    fn to_c(&self, x: f64) -> f64 {
        match self.mode {
            Mode::Location => x,
            Mode::Scale => x.exp(),
        }
    }

    fn width(&self, lo: f64, hi: f64) -> f64 {
        self.to_c(hi) - self.to_c(lo)
    }

    fn solve(&self) -> Result<f64> {
        let c0 = self.start();
        self.check_tails(c0)?;
        let x0 = match self.mode {
            Mode::Location => c0,
            Mode::Scale => c0.ln(),
        };
        let mut half = self.opts.bracket_init;
        let (mut lo, mut hi) = (x0 - half, x0 + half);
        let mut glo = self.signed(lo)?;
        let mut ghi = self.signed(hi)?;
        let mut expansions = 0;
        while !(glo >= 0.0 && ghi <= 0.0) {
            if expansions >= self.opts.bracket_max_expansions {
                return Err(Error::NoSignChange {
                    lo: self.to_c(lo),
                    hi: self.to_c(hi),
                    expansions,
                });
            }
            half *= 2.0;
            expansions += 1;
            if glo < 0.0 {
                lo = x0 - half;
                glo = self.signed(lo)?;
            }
            if ghi > 0.0 {
                hi = x0 + half;
                ghi = self.signed(hi)?;
            }
        }
        if glo == 0.0 && ghi == 0.0 {
            return Ok(self.to_c(0.5 * (lo + hi)));
        }
        if glo == 0.0 {
            return self.zero_interval_mid(lo, lo, hi);
        }
        if ghi == 0.0 {
            return self.zero_interval_mid(hi, lo, hi);
        }
        for _ in 0..400 {
            if self.width(lo, hi) <= self.opts.abs_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = self.signed(mid)?;
            if gm > 0.0 {
                lo = mid;
            } else if gm < 0.0 {
                hi = mid;
            } else {
                return self.zero_interval_mid(mid, lo, hi);
            }
        }
        Ok(self.to_c(0.5 * (lo + hi)))
    }

    /// Midpoint of the interval around `x` on which `G` vanishes, given
    /// `G > 0` at `lo` (or `lo == x`) and `G < 0` at `hi` (or `hi == x`).
    fn zero_interval_mid(&self, x: f64, lo: f64, hi: f64) -> Result<f64> {
        let edge = |mut inside: f64, mut outside: f64| -> Result<f64> {
            for _ in 0..200 {
                if self.width(inside.min(outside), inside.max(outside)) <= self.opts.abs_tol {
                    break;
                }
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if self.signed(mid)? == 0.0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            Ok(inside)
        };
        let left = if lo < x { edge(x, lo)? } else { x };
        let right = if hi > x { edge(x, hi)? } else { x };
        Ok(self.to_c(0.5 * (left + right)))
    }
}

fn check_loss(model: &BivariateModel, loss: &LossSpec) -> Result<()> {
    if loss.kind() != model.mode() {
        return Err(Error::Config(format!(
            "{:?} loss cannot be used with the {:?} model {}",
            loss.kind(),
            model.mode(),
            model.name()
        )));
    }
    Ok(())
}

/// Standardized ancillary value `t - lambda` or `t / lambda`.
pub fn shifted_ancillary(mode: Mode, lambda: f64, t: f64) -> f64 {
    match mode {
        Mode::Location => t - lambda,
        Mode::Scale => t / lambda,
    }
}

fn conditional_equation<'a>(
    model: &'a BivariateModel,
    loss: &'a LossSpec,
    target: Target,
    lambda: f64,
    t: f64,
    opts: &'a SolverOptions,
) -> Result<Equation<'a>> {
    check_loss(model, loss)?;
    model.check_lambda(lambda)?;
    model.check_ancillary(t)?;
    let u = shifted_ancillary(model.mode(), lambda, t);
    let law = conditional_law(model, target, u, opts.quad_rel_tol.min(1e-10))?;
    Equation::new(law, loss, model.mode(), opts)
}

/// `psi_lambda(t)` by quadrature and bisection.
pub fn solve_psi_lambda(
    model: &BivariateModel,
    loss: &LossSpec,
    target: Target,
    lambda: f64,
    t: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    conditional_equation(model, loss, target, lambda, t, opts)?.solve()
}

/// Left side `G(c)` of the first-order equation, with the conditional law
/// normalized.
pub fn first_order_residual(
    model: &BivariateModel,
    loss: &LossSpec,
    target: Target,
    lambda: f64,
    t: f64,
    c: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    conditional_equation(model, loss, target, lambda, t, opts)?.g(c)
}

/// Constant of the best unrestricted equivariant estimator `X_i - c` or
/// `c X_i`, from the marginal law of the target coordinate.
pub fn solve_blee_constant(
    model: &BivariateModel,
    loss: &LossSpec,
    target: Target,
    opts: &SolverOptions,
) -> Result<f64> {
    check_loss(model, loss)?;
    let law = marginal_law(model, target, opts.quad_rel_tol.min(1e-10))?;
    Equation::new(law, loss, model.mode(), opts)?.solve()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    None,
}

impl Monotonicity {
    pub fn reversed(self) -> Self {
        match self {
            Monotonicity::Nondecreasing => Monotonicity::Nonincreasing,
            Monotonicity::Nonincreasing => Monotonicity::Nondecreasing,
            Monotonicity::None => Monotonicity::None,
        }
    }

    fn from_flags(up: bool, down: bool) -> Self {
        if up {
            Monotonicity::Nondecreasing
        } else if down {
            Monotonicity::Nonincreasing
        } else {
            Monotonicity::None
        }
    }
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Nondecreasing => "nondecreasing",
            Monotonicity::Nonincreasing => "nonincreasing",
            Monotonicity::None => "none",
        })
    }
}

/// Which monotone directions a sequence satisfies, in order, with slack
/// `rel_slack * max(1, |a|, |b|)` between neighbours. Infinite entries
/// compare as equal to each other.
pub fn monotone_flags(values: &[f64], rel_slack: f64) -> (bool, bool) {
    let (mut up, mut down) = (true, true);
    for w in values.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let slack = rel_slack * 1f64.max(a.abs()).max(b.abs());
        let slack = if slack.is_finite() { slack } else { 0.0 };
        if b < a - slack {
            up = false;
        }
        if b > a + slack {
            down = false;
        }
    }
    (up, down)
}

/// Classifies a sampled sequence; a constant sequence is reported as
/// nondecreasing.
pub fn classify_sequence(values: &[f64], rel_slack: f64) -> Monotonicity {
    let (up, down) = monotone_flags(values, rel_slack);
    Monotonicity::from_flags(up, down)
}

fn lr_flags(model: &BivariateModel, target: Target, lambda: f64, t: f64, s_grid: &[f64]) -> Result<(bool, bool)> {
    let mode = model.mode();
    let u_num = shifted_ancillary(mode, lambda, t);
    let mut logs = Vec::with_capacity(s_grid.len());
    let mut positive_den = 0;
    for &s in s_grid {
        let num = model.ln_slice(target, u_num, s);
        let den = model.ln_slice(target, t, s);
        match (num == f64::NEG_INFINITY, den == f64::NEG_INFINITY) {
            (true, true) => continue,
            (_, false) => {
                positive_den += 1;
                logs.push(num - den);
            }
            (false, true) => logs.push(f64::INFINITY),
        }
    }
    if positive_den < 2 {
        return Err(Error::InsufficientSupport(format!(
            "only {positive_den} grid points have positive denominator density at t = {t}"
        )));
    }
    Ok(monotone_flags(&logs, 1e-12))
}

/// Direction in `s` of the likelihood ratio between the slices at the
/// shifted ancillary (gap `lambda`) and at `t` (no gap).
pub fn check_lr_monotonicity(
    model: &BivariateModel,
    target: Target,
    lambda: f64,
    t: f64,
    s_grid: &[f64],
) -> Result<Monotonicity> {
    model.check_lambda(lambda)?;
    model.check_ancillary(t)?;
    let (up, down) = lr_flags(model, target, lambda, t, s_grid)?;
    Ok(Monotonicity::from_flags(up, down))
}

/// `points` interior points spanning the union of the numerator and
/// denominator slice windows.
pub fn default_s_grid(model: &BivariateModel, target: Target, lambda: f64, t: f64, points: usize) -> Vec<f64> {
    let u = shifted_ancillary(model.mode(), lambda, t);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for w in [model.slice_window(target, u), model.slice_window(target, t)]
        .into_iter()
        .flatten()
    {
        let (a, b) = w.core(8.0);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !(hi > lo) {
        return Vec::new();
    }
    (0..points)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / points as f64)
        .collect()
}

/// Direction of `lambda -> psi_lambda(t)` implied by the likelihood-ratio
/// checks over the options' lambda grid.
pub fn predicted_psi_direction(
    model: &BivariateModel,
    target: Target,
    t: f64,
    opts: &SolverOptions,
) -> Result<Monotonicity> {
    let mode = model.mode();
    let (mut up, mut down) = (true, true);
    let mut checked = 0;
    for &lambda in &opts.lambda_grid {
        if lambda == identity(mode) {
            continue;
        }
        let u = shifted_ancillary(mode, lambda, t);
        if model.slice_window(target, u).is_none() {
            continue;
        }
        let grid = default_s_grid(model, target, lambda, t, 200);
        let (a, b) = match lr_flags(model, target, lambda, t, &grid) {
            Ok(f) => f,
            Err(Error::InsufficientSupport(_)) => continue,
            Err(e) => return Err(e),
        };
        up &= a;
        down &= b;
        checked += 1;
    }
    if checked == 0 {
        return Ok(Monotonicity::None);
    }
    let ratio = Monotonicity::from_flags(up, down);
    Ok(match mode {
        Mode::Location => ratio,
        Mode::Scale => ratio.reversed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    GridApproximate,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::GridApproximate => "grid_approximate",
        })
    }
}

type EnvelopeFn = Arc<dyn Fn(f64) -> Result<EnvelopePoint> + Send + Sync>;

/// Envelope functions `t -> (lower(t), upper(t))`.
#[derive(Clone)]
pub struct PsiBounds {
    eval: EnvelopeFn,
    provenance: Provenance,
    lambda_grid: Option<Vec<f64>>,
}

impl fmt::Debug for PsiBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiBounds")
            .field("provenance", &self.provenance)
            .field("lambda_grid", &self.lambda_grid.as_ref().map(Vec::len))
            .finish()
    }
}

impl PsiBounds {
    pub fn new<F>(eval: F, provenance: Provenance) -> Self
    where
        F: Fn(f64) -> Result<EnvelopePoint> + Send + Sync + 'static,
    {
        PsiBounds {
            eval: Arc::new(eval),
            provenance,
            lambda_grid: None,
        }
    }

    pub fn from_fns<L, U>(lower: L, upper: U) -> Self
    where
        L: Fn(f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            move |t| {
                Ok(EnvelopePoint {
                    lower: lower(t),
                    upper: upper(t),
                })
            },
            Provenance::ClosedForm,
        )
    }

    pub fn constant(lower: f64, upper: f64) -> Self {
        Self::from_fns(move |_| lower, move |_| upper)
    }

    /// Catalogued bounds, or `None` when the model has no entry for `loss`.
    pub fn closed_form(model: &BivariateModel, loss: &LossSpec, target: Target) -> Option<Self> {
        model.catalog_loss()?;
        if model.closed_form_bounds(loss, target, 1.0).ok()?.is_none() {
            return None;
        }
        let (m, l) = (model.clone(), loss.clone());
        Some(Self::new(
            move |t| {
                m.closed_form_bounds(&l, target, t)?
                    .ok_or_else(|| Error::UnknownKey(format!("no closed-form bounds for {}", m.id())))
            },
            Provenance::ClosedForm,
        ))
    }

    /// Bounds from the lambda grid, computed lazily per `t`.
    pub fn grid(model: &BivariateModel, loss: &LossSpec, target: Target, opts: &SolverOptions) -> Self {
        let (m, l, o) = (model.clone(), loss.clone(), opts.clone());
        PsiBounds {
            eval: Arc::new(move |t| compute_bounds_grid(&m, &l, target, t, &o)),
            provenance: Provenance::GridApproximate,
            lambda_grid: Some(opts.lambda_grid.clone()),
        }
    }

    /// Closed form when catalogued, grid approximation otherwise.
    pub fn for_model(model: &BivariateModel, loss: &LossSpec, target: Target, opts: &SolverOptions) -> Self {
        Self::closed_form(model, loss, target).unwrap_or_else(|| Self::grid(model, loss, target, opts))
    }

    /// Both envelope values at `t`; fails when `lower > upper`.
    pub fn at(&self, t: f64) -> Result<EnvelopePoint> {
        let p = (self.eval)(t)?;
        if p.lower > p.upper || p.lower.is_nan() || p.upper.is_nan() {
            return Err(Error::InvalidBounds {
                t,
                lower: p.lower,
                upper: p.upper,
            });
        }
        Ok(p)
    }

    pub fn lower(&self, t: f64) -> Result<f64> {
        self.at(t).map(|p| p.lower)
    }

    pub fn upper(&self, t: f64) -> Result<f64> {
        self.at(t).map(|p| p.upper)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The lambda grid behind grid-approximate bounds.
    pub fn lambda_grid(&self) -> Option<&[f64]> {
        self.lambda_grid.as_deref()
    }
}

/// Envelope at `t`: catalogued when available, otherwise from the grid.
pub fn compute_bounds(
    model: &BivariateModel,
    loss: &LossSpec,
    target: Target,
    t: f64,
    opts: &SolverOptions,
) -> Result<(EnvelopePoint, Provenance)> {
    check_loss(model, loss)?;
    match model.closed_form_bounds(loss, target, t)? {
        Some(p) => Ok((p, Provenance::ClosedForm)),
        None => Ok((compute_bounds_grid(model, loss, target, t, opts)?, Provenance::GridApproximate)),
    }
}

const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Limit of the last three samples of a monotone sequence by Aitken's
/// delta-squared step; infinite when the increments do not shrink.
fn tail_limit(v: &[f64], direction: Monotonicity) -> f64 {
    let n = v.len();
    let last = v[n - 1];
    let sign = if direction == Monotonicity::Nonincreasing { -1.0 } else { 1.0 };
    if last.abs() > DIVERGENCE_THRESHOLD {
        return sign * f64::INFINITY;
    }
    if n < 3 {
        return last;
    }
    let d1 = v[n - 2] - v[n - 3];
    let d2 = last - v[n - 2];
    if d2.abs() <= 1e-12 * last.abs().max(1.0) || d1 == 0.0 {
        return last;
    }
    let r = d2 / d1;
    if r >= 0.95 {
        return sign * f64::INFINITY;
    }
    if r <= 0.0 {
        return last;
    }
    last + d2 * r / (1.0 - r)
}

/// Envelope at `t` from `psi_lambda(t)` sampled over the lambda grid.
pub fn compute_bounds_grid(
    model: &BivariateModel,
    loss: &LossSpec,
    target: Target,
    t: f64,
    opts: &SolverOptions,
) -> Result<EnvelopePoint> {
    check_loss(model, loss)?;
    opts.validate(model.mode())?;
    let mut lambdas = Vec::new();
    let mut values = Vec::new();
    let mut truncated = None;
    for &lambda in &opts.lambda_grid {
        match solve_psi_lambda(model, loss, target, lambda, t, opts) {
            Ok(v) => {
                if truncated.is_some() {
                    return Err(Error::InsufficientSupport(format!(
                        "the conditional law at t = {t} is proper on a disconnected set of lambda"
                    )));
                }
                lambdas.push(lambda);
                values.push(v);
            }
            Err(Error::DegenerateConditional { .. }) => {
                if let (Some(&last), None) = (lambdas.last(), truncated) {
                    truncated = Some((last, lambda));
                }
            }
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateConditional {
            t,
            reason: "no lambda in the grid gives a proper conditional law".into(),
        });
    }
    if let Some((mut ok, mut bad)) = truncated {
        // refine the edge of the valid lambda range
        let mut best = None;
        for _ in 0..40 {
            let mid = 0.5 * (ok + bad);
            match solve_psi_lambda(model, loss, target, mid, t, opts) {
                Ok(v) => {
                    ok = mid;
                    best = Some((mid, v));
                }
                Err(Error::DegenerateConditional { .. }) | Err(Error::Quadrature(_)) => bad = mid,
                Err(e) => return Err(e),
            }
        }
        if let Some((l, v)) = best {
            lambdas.push(l);
            values.push(v);
        }
    }
    let direction = predicted_psi_direction(model, target, t, opts)?;
    let (up, down) = monotone_flags(&values, 1e-9);
    let consistent = match direction {
        Monotonicity::Nondecreasing => up,
        Monotonicity::Nonincreasing => down,
        Monotonicity::None => true,
    };
    if !consistent {
        return Err(Error::Inconsistent(format!(
            "psi_lambda({t}) is not {direction} in lambda although the likelihood-ratio check predicts it"
        )));
    }
    let near = values[0];
    let far = if truncated.is_some() {
        *values.last().unwrap()
    } else {
        tail_limit(&values, direction)
    };
    let (lower, upper) = match direction {
        Monotonicity::Nondecreasing => (near, far),
        Monotonicity::Nonincreasing => (far, near),
        Monotonicity::None => values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
    };
    Ok(EnvelopePoint { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;

    fn loc() -> LossSpec {
        LossSpec::squared_error(LossKind::Location)
    }

    fn scale() -> LossSpec {
        LossSpec::squared_error(LossKind::Scale)
    }

    fn opts(mode: Mode) -> SolverOptions {
        SolverOptions::for_mode(mode)
    }

    #[test]
    fn solve_examples() {
        let o = opts(Mode::Location);
        let m = BivariateModel::bvn(1.0, 2.0, 0.0).unwrap();
        let v = solve_psi_lambda(&m, &loc(), Target::Smaller, 0.0, 1.0, &o).unwrap();
        assert!((v + 0.2).abs() < 1e-6, "{v}");

        let m = BivariateModel::indep_exp(1.0, 1.0).unwrap();
        let v = solve_psi_lambda(&m, &loc(), Target::Smaller, 0.0, -0.5, &o).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");

        let m = BivariateModel::power_uniform(1.0, 1.0).unwrap();
        let v = solve_psi_lambda(&m, &scale(), Target::Smaller, 1.0, 2.0, &opts(Mode::Scale)).unwrap();
        assert!((v - 8.0 / 3.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn residual_vanishes_at_root() {
        let o = opts(Mode::Scale);
        let m = BivariateModel::cheriyan_gamma();
        let c = solve_psi_lambda(&m, &scale(), Target::Larger, 2.0, 0.7, &o).unwrap();
        let g = first_order_residual(&m, &scale(), Target::Larger, 2.0, 0.7, c, &o).unwrap();
        assert!(g.abs() < 1e-8, "{g}");
    }

    #[test]
    fn blee_constants() {
        let o = opts(Mode::Location);
        let d = BivariateModel::dep_exp_gamma();
        let c = solve_blee_constant(&d, &LossSpec::linex(), Target::Smaller, &o).unwrap();
        assert!((c - 6f64.ln()).abs() < 1e-8, "{c}");
        match solve_blee_constant(&d, &LossSpec::linex(), Target::Larger, &o) {
            Err(Error::Divergent(_)) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
        let g = BivariateModel::indep_gamma(2.0, 1.0).unwrap();
        let c = solve_blee_constant(&g, &scale(), Target::Smaller, &opts(Mode::Scale)).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-8, "{c}");
    }

    #[test]
    fn lr_examples() {
        let m = BivariateModel::indep_exp(1.0, 1.0).unwrap();
        let grid: Vec<f64> = (1..=50).map(|k| 5.0 * k as f64 / 51.0).collect();
        assert_eq!(
            check_lr_monotonicity(&m, Target::Smaller, 1.0, 0.0, &grid).unwrap(),
            Monotonicity::Nondecreasing
        );
        let b = BivariateModel::bvn(1.0, 1.0, 0.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|k| -5.0 + 0.2 * k as f64).collect();
        assert_eq!(
            check_lr_monotonicity(&b, Target::Smaller, 1.0, 0.0, &grid).unwrap(),
            Monotonicity::Nondecreasing
        );
        assert_eq!(
            check_lr_monotonicity(&b, Target::Larger, 0.0, 0.3, &grid).unwrap(),
            Monotonicity::Nondecreasing
        );
        let p = BivariateModel::power_uniform(1.0, 1.0).unwrap();
        assert!(matches!(
            check_lr_monotonicity(&p, Target::Smaller, 2.0, 1.0, &[2.0, 3.0, 4.0]),
            Err(Error::InsufficientSupport(_))
        ));
    }

    #[test]
    fn grid_bounds_agree_with_closed_form() {
        let o = opts(Mode::Scale);
        let g = BivariateModel::indep_gamma(1.0, 1.0).unwrap();
        let b = compute_bounds_grid(&g, &scale(), Target::Smaller, 2.0, &o).unwrap();
        assert!((b.lower - 1.0 / 3.0).abs() < 1e-4, "{b:?}");
        assert!((b.upper - 1.0).abs() < 1e-4, "{b:?}");

        let o = opts(Mode::Location);
        let d = BivariateModel::dep_exp_gamma();
        let b = compute_bounds_grid(&d, &LossSpec::linex(), Target::Smaller, 3.0, &o).unwrap();
        assert!((b.lower - 5f64.ln()).abs() < 1e-4, "{b:?}");
        assert!((b.upper - 8f64.ln()).abs() < 1e-4, "{b:?}");

        let n = BivariateModel::bvn(1.0, 2.0, 0.5).unwrap();
        let b = compute_bounds_grid(&n, &loc(), Target::Smaller, 1.5, &o).unwrap();
        assert!(b.lower.abs() < 1e-6 && b.upper.abs() < 1e-6, "{b:?}");

        let e = BivariateModel::indep_exp(1.0, 2.0).unwrap();
        let b = compute_bounds_grid(&e, &loc(), Target::Smaller, 0.5, &o).unwrap();
        assert!((b.lower - 2.0 / 3.0).abs() < 1e-5 && b.upper == f64::INFINITY, "{b:?}");
    }

    #[test]
    fn compute_bounds_prefers_closed_form() {
        let o = opts(Mode::Location);
        let n = BivariateModel::bvn(1.0, 2.0, 0.5).unwrap();
        let (b, p) = compute_bounds(&n, &loc(), Target::Smaller, 4.0, &o).unwrap();
        assert_eq!(p, Provenance::ClosedForm);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let (_, p) = compute_bounds(&n, &LossSpec::linex(), Target::Smaller, 0.5, &o).unwrap();
        assert_eq!(p, Provenance::GridApproximate);
    }

    #[test]
    fn grid_validation() {
        let mut o = opts(Mode::Scale);
        assert!(o.validate(Mode::Scale).is_ok());
        o.lambda_grid = vec![0.5, 2.0];
        assert!(o.validate(Mode::Scale).is_err());
        o.lambda_grid = vec![];
        assert!(o.validate(Mode::Scale).is_err());
        let g = lambda_grid(Mode::Location, 1e3, 64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-3).abs() < 1e-15 && (g[63] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn sequence_classifier() {
        assert_eq!(classify_sequence(&[1.0, 1.0, 1.0], 1e-12), Monotonicity::Nondecreasing);
        assert_eq!(classify_sequence(&[3.0, 2.0, 2.0], 1e-12), Monotonicity::Nonincreasing);
        assert_eq!(classify_sequence(&[1.0, 2.0, 1.0], 1e-12), Monotonicity::None);
        assert_eq!(tail_limit(&[1.0, 2.0, 3.0], Monotonicity::Nondecreasing), f64::INFINITY);
        let geo = [1.0 + 0.5, 1.0 + 0.25, 1.0 + 0.125];
        assert!((tail_limit(&geo, Monotonicity::Nonincreasing) - 1.0).abs() < 1e-14);
    }
}
