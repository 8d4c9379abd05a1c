//! Monte Carlo risk estimation.
//!
//! Replicates are drawn in batches of [`BATCH`]. Batch `b` of a run with
//! seed `s` uses the ChaCha8 stream `b` under key `s`, so every batch can be
//! computed independently and the results are merged in batch order. A risk
//! curve derives the seed of grid point `g` as `derive_seed(seed, g)`.

use std::io::{Read, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EquivariantEstimator;
use crate::families::{BivariateModel, Mode, Target, Theta};
use crate::loss::LossSpec;
use crate::solver::identity;

/// Replicates per RNG stream.
pub const BATCH: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean_risk: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Means and co-moments of a vector of losses.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Moments {
            n: 0,
            mean: vec![0.0; k],
            comoment: vec![0.0; k * k],
        }
    }

    fn k(&self) -> usize {
        self.mean.len()
    }

    fn push(&mut self, x: &[f64], delta: &mut [f64]) {
        self.n += 1;
        let k = self.k();
        let n = self.n as f64;
        for i in 0..k {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let k = self.k();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..k).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] +=
                    other.comoment[i * k + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.comoment[i * self.k() + j] / (self.n - 1) as f64
        }
    }

    fn estimate(&self, i: usize, seed: u64) -> RiskEstimate {
        RiskEstimate {
            mean_risk: self.mean[i],
            std_error: (self.covariance(i, i).max(0.0) / self.n as f64).sqrt(),
            n: self.n,
            seed,
        }
    }
}

fn map_ordered<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

fn check_estimators(model: &BivariateModel, loss: &LossSpec, ests: &[&EquivariantEstimator]) -> Result<()> {
    let first = ests
        .first()
        .ok_or_else(|| Error::InvalidInput("no estimators given".into()))?;
    if loss.kind() != model.mode() {
        return Err(Error::Incompatible(format!(
            "{:?} loss used with the {:?} model {}",
            loss.kind(),
            model.mode(),
            model.name()
        )));
    }
    for e in ests {
        if e.mode() != model.mode() {
            return Err(Error::Incompatible(format!(
                "{} is a {:?} estimator but {} is a {:?} model",
                e.label(),
                e.mode(),
                model.name(),
                model.mode()
            )));
        }
        if e.target() != first.target() {
            return Err(Error::Incompatible(format!(
                "{} and {} estimate different parameters",
                first.label(),
                e.label()
            )));
        }
    }
    Ok(())
}

/// Joint loss moments of `ests` over `n` shared draws at `theta`.
fn simulate_joint(
    model: &BivariateModel,
    loss: &LossSpec,
    ests: &[&EquivariantEstimator],
    theta: &Theta,
    n: usize,
    seed: u64,
) -> Result<Moments> {
    if n == 0 {
        return Err(Error::InvalidInput("number of replicates must be at least 1".into()));
    }
    theta.check_mode(model.mode())?;
    let k = ests.len();
    let target_value = theta.get(ests[0].target());
    let batches = n.div_ceil(BATCH);
    let parts = map_ordered(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let size = BATCH.min(n - b * BATCH);
        let mut acc = Moments::new(k);
        let mut losses = vec![0.0; k];
        let mut delta = vec![0.0; k];
        for r in 0..size {
            let z = model.sample_standardized(&mut rng)?;
            let (x1, x2) = model.apply_theta(theta, z);
            for (slot, est) in losses.iter_mut().zip(ests) {
                let d = est.evaluate(x1, x2)?;
                let arg = match model.mode() {
                    Mode::Location => d - target_value,
                    Mode::Scale => d / target_value,
                };
                let w = loss.value(arg)?;
                if !w.is_finite() {
                    return Err(Error::Overflow {
                        replicate: (b * BATCH + r) as u64,
                        detail: format!("{} has loss {w} at x = ({x1}, {x2})", est.label()),
                    });
                }
                *slot = w;
            }
            acc.push(&losses, &mut delta);
        }
        Ok(acc)
    })?;
    let mut total = Moments::new(k);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Risk of `est` at `theta` from `n` replicates.
pub fn simulate_risk(
    model: &BivariateModel,
    loss: &LossSpec,
    est: &EquivariantEstimator,
    theta: &Theta,
    n: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_estimators(model, loss, &[est])?;
    Ok(simulate_joint(model, loss, &[est], theta, n, seed)?.estimate(0, seed))
}

/// Simulated risks over a lambda grid, with `theta1` anchored at 0
/// (location) or 1 (scale).
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub model: String,
    pub mode: Mode,
    pub target: Target,
    pub loss: String,
    pub labels: Vec<String>,
    pub lambda_grid: Vec<f64>,
    /// `risks[estimator][lambda]`.
    pub risks: Vec<Vec<RiskEstimate>>,
    pub base_theta: f64,
    pub common_random_numbers: bool,
    /// Per lambda, the covariance matrix of the per-replicate losses
    /// (row-major); present only with common random numbers.
    pub loss_covariance: Option<Vec<Vec<f64>>>,
}

impl RiskCurve {
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownKey(format!("no curve labelled '{label}'")))
    }

    pub fn curve(&self, label: &str) -> Result<&[RiskEstimate]> {
        Ok(&self.risks[self.index_of(label)?])
    }

    /// The parameter pair behind grid point `g`.
    pub fn theta(&self, g: usize) -> Result<Theta> {
        let l = self.lambda_grid[g];
        match self.mode {
            Mode::Location => Theta::new(self.base_theta, self.base_theta + l),
            Mode::Scale => Theta::new(self.base_theta, self.base_theta * l),
        }
    }
}

/// Risks of several estimators over `lambda_grid`. With
/// `common_random_numbers` all estimators at a grid point share the draws;
/// otherwise estimator `j > 0` uses its own derived seed.
pub fn risk_curve(
    model: &BivariateModel,
    loss: &LossSpec,
    estimators: &[EquivariantEstimator],
    lambda_grid: &[f64],
    n: usize,
    seed: u64,
    common_random_numbers: bool,
) -> Result<RiskCurve> {
    let refs: Vec<&EquivariantEstimator> = estimators.iter().collect();
    check_estimators(model, loss, &refs)?;
    for (i, e) in estimators.iter().enumerate() {
        if estimators[..i].iter().any(|o| o.label() == e.label()) {
            return Err(Error::InvalidInput(format!("duplicate estimator label '{}'", e.label())));
        }
    }
    let mode = model.mode();
    let base = identity(mode);
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if let Some(bad) = lambda_grid.iter().find(|&&l| !(l >= base) || !l.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda = {bad} is outside the domain [{base}, inf)"
        )));
    }
    let k = estimators.len();
    let per_point = map_ordered(lambda_grid.len(), |g| {
        let theta = Theta::anchored(mode, lambda_grid[g])?;
        let gs = derive_seed(seed, g as u64);
        if common_random_numbers {
            let m = simulate_joint(model, loss, &refs, &theta, n, gs)?;
            let est: Vec<RiskEstimate> = (0..k).map(|i| m.estimate(i, gs)).collect();
            let cov: Vec<f64> = (0..k * k).map(|ij| m.covariance(ij / k, ij % k)).collect();
            Ok((est, Some(cov)))
        } else {
            let est = (0..k)
                .map(|j| {
                    let s = if j == 0 { gs } else { derive_seed(gs, j as u64) };
                    simulate_joint(model, loss, &refs[j..=j], &theta, n, s).map(|m| m.estimate(0, s))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((est, None))
        }
    })?;
    let mut risks = vec![Vec::with_capacity(lambda_grid.len()); k];
    let mut covs = Vec::new();
    for (est, cov) in per_point {
        for (j, e) in est.into_iter().enumerate() {
            risks[j].push(e);
        }
        if let Some(c) = cov {
            covs.push(c);
        }
    }
    Ok(RiskCurve {
        model: model.id(),
        mode,
        target: estimators[0].target(),
        loss: loss.name().to_string(),
        labels: estimators.iter().map(|e| e.label().to_string()).collect(),
        lambda_grid: lambda_grid.to_vec(),
        risks,
        base_theta: base,
        common_random_numbers,
        loss_covariance: common_random_numbers.then_some(covs),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominancePoint {
    pub lambda: f64,
    pub base: f64,
    pub improved: f64,
    /// `improved - base`; negative where the improvement helps.
    pub difference: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub base_label: String,
    pub improved_label: String,
    pub points: Vec<DominancePoint>,
    /// Grid points where the improved risk exceeds the base risk by more
    /// than two standard errors.
    pub violations: usize,
    /// Lambda of the largest risk reduction.
    pub best_lambda: f64,
    pub max_improvement: f64,
    /// Interpolated lambdas where the difference changes sign between
    /// significant (beyond two standard errors) grid points.
    pub crossings: Vec<f64>,
}

/// Compares two curves of a risk table point by point.
pub fn dominance_report(curve: &RiskCurve, base_label: &str, improved_label: &str) -> Result<DominanceReport> {
    let (a, b) = (curve.index_of(base_label)?, curve.index_of(improved_label)?);
    let k = curve.labels.len();
    let points: Vec<DominancePoint> = curve
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let (ra, rb) = (&curve.risks[a][g], &curve.risks[b][g]);
            let var = match &curve.loss_covariance {
                Some(c) => {
                    let c = &c[g];
                    (c[a * k + a] + c[b * k + b] - 2.0 * c[a * k + b]).max(0.0) / ra.n as f64
                }
                None => ra.std_error.powi(2) + rb.std_error.powi(2),
            };
            DominancePoint {
                lambda,
                base: ra.mean_risk,
                improved: rb.mean_risk,
                difference: rb.mean_risk - ra.mean_risk,
                std_error: var.sqrt(),
            }
        })
        .collect();
    let violations = points
        .iter()
        .filter(|p| p.difference > 2.0 * p.std_error)
        .count();
    let best = points
        .iter()
        .min_by(|x, y| x.difference.total_cmp(&y.difference))
        .expect("nonempty grid");
    let mut crossings = Vec::new();
    let mut last: Option<&DominancePoint> = None;
    for p in points.iter().filter(|p| p.difference.abs() > 2.0 * p.std_error) {
        if let Some(q) = last {
            if q.difference.signum() != p.difference.signum() {
                let w = q.difference / (q.difference - p.difference);
                crossings.push(q.lambda + w * (p.lambda - q.lambda));
            }
        }
        last = Some(p);
    }
    Ok(DominanceReport {
        base_label: base_label.to_string(),
        improved_label: improved_label.to_string(),
        violations,
        best_lambda: best.lambda,
        max_improvement: -best.difference,
        points,
        crossings,
    })
}

/// Fixed-point decimal with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    let decimals = (12 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: [&str; 9] = ["model", "target", "loss", "estimator", "lambda", "risk", "stderr", "n", "seed"];

/// Writes one row per (estimator, lambda), estimator-major.
pub fn write_csv<W: Write>(curve: &RiskCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (label, row) in curve.labels.iter().zip(&curve.risks) {
        for (lambda, r) in curve.lambda_grid.iter().zip(row) {
            w.write_record([
                curve.model.as_str(),
                curve.target.as_str(),
                curve.loss.as_str(),
                label.as_str(),
                &format_sig12(*lambda),
                &format_sig12(r.mean_risk),
                &format_sig12(r.std_error),
                &r.n.to_string(),
                &r.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(curve: &RiskCurve) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(curve, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    model: String,
    target: String,
    loss: String,
    estimator: String,
    lambda: f64,
    risk: f64,
    stderr: f64,
    n: u64,
    seed: u64,
}

/// Reads a table written by [`write_csv`]. Loss covariances are not part
/// of the format, so the result has `common_random_numbers = false`.
pub fn read_csv<R: Read>(input: R) -> Result<RiskCurve> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    let mut head: Option<(String, String, String)> = None;
    let mut labels: Vec<String> = Vec::new();
    let mut grids: Vec<Vec<f64>> = Vec::new();
    let mut risks: Vec<Vec<RiskEstimate>> = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let key = (row.model.clone(), row.target.clone(), row.loss.clone());
        match &head {
            None => head = Some(key),
            Some(h) if *h != key => {
                return Err(Error::Parse("rows describe more than one configuration".into()))
            }
            _ => {}
        }
        let idx = match labels.iter().position(|l| *l == row.estimator) {
            Some(i) if i + 1 == labels.len() => i,
            Some(_) => return Err(Error::Parse(format!("rows of '{}' are not contiguous", row.estimator))),
            None => {
                labels.push(row.estimator.clone());
                grids.push(Vec::new());
                risks.push(Vec::new());
                labels.len() - 1
            }
        };
        grids[idx].push(row.lambda);
        risks[idx].push(RiskEstimate {
            mean_risk: row.risk,
            std_error: row.stderr,
            n: row.n,
            seed: row.seed,
        });
    }
    let (model, target, loss) = head.ok_or_else(|| Error::Parse("no rows".into()))?;
    if grids.iter().any(|g| *g != grids[0]) {
        return Err(Error::Parse("estimators use different lambda grids".into()));
    }
    let mode = BivariateModel::parse_id(&model)?.mode();
    Ok(RiskCurve {
        model,
        mode,
        target: target.parse()?,
        loss,
        labels,
        lambda_grid: grids.swap_remove(0),
        risks,
        base_theta: identity(mode),
        common_random_numbers: false,
        loss_covariance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{catalog_estimator, CatalogKey};

    fn est(model: &BivariateModel, key: &str) -> EquivariantEstimator {
        catalog_estimator(&key.parse::<CatalogKey>().unwrap(), model).unwrap()
    }

    #[test]
    fn constant_risks() {
        let m = BivariateModel::bvn(0.2, 0.4, -0.9).unwrap();
        let loss = LossSpec::squared_error(Mode::Location);
        let r = simulate_risk(&m, &loss, &est(&m, "smaller:blee"), &Theta::new(0.0, 2.0).unwrap(), 100_000, 7).unwrap();
        assert!((r.mean_risk - 0.04).abs() < 4.0 * r.std_error, "{r:?}");

        let g = BivariateModel::indep_gamma(1.0, 3.0).unwrap();
        let loss = LossSpec::squared_error(Mode::Scale);
        let r = simulate_risk(&g, &loss, &est(&g, "smaller:bsee"), &Theta::new(2.0, 5.0).unwrap(), 100_000, 7).unwrap();
        assert!((r.mean_risk - 0.5).abs() < 4.0 * r.std_error, "{r:?}");
    }

    #[test]
    fn vanishing_loss_gives_zero_risk() {
        let m = BivariateModel::indep_exp(1.0, 2.0).unwrap();
        let th = Theta::new(1.5, 4.0).unwrap();
        let exact = EquivariantEstimator::from_fn(Mode::Location, Target::Smaller, "oracle", |_| 0.0);
        let zero_loss = LossSpec::custom(
            Mode::Location,
            std::sync::Arc::new(|_| 0.0),
            Some(std::sync::Arc::new(|_| 0.0)),
        );
        let r = simulate_risk(&m, &zero_loss, &exact, &th, 1000, 1).unwrap();
        assert_eq!((r.mean_risk, r.std_error), (0.0, 0.0));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let m = BivariateModel::cheriyan_gamma();
        let loss = LossSpec::squared_error(Mode::Scale);
        let e = est(&m, "smaller:improved_bsee");
        let th = Theta::new(1.0, 3.0).unwrap();
        let a = simulate_risk(&m, &loss, &e, &th, 5000, 11).unwrap();
        let b = simulate_risk(&m, &loss, &e, &th, 5000, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_risk(&m, &loss, &e, &th, 5000, 12).unwrap();
        assert_ne!(a.mean_risk, c.mean_risk);
    }

    #[test]
    fn batch_merge_matches_direct_moments() {
        let xs: Vec<[f64; 2]> = (0..2500).map(|i| [(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let mut whole = Moments::new(2);
        let mut d = [0.0; 2];
        for x in &xs {
            whole.push(x, &mut d);
        }
        let mut merged = Moments::new(2);
        for chunk in xs.chunks(BATCH) {
            let mut m = Moments::new(2);
            for x in chunk {
                m.push(x, &mut d);
            }
            merged.merge(&m);
        }
        for i in 0..2 {
            assert!((whole.mean[i] - merged.mean[i]).abs() < 1e-14);
        }
        for ij in 0..4 {
            assert!((whole.comoment[ij] - merged.comoment[ij]).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_curve_matches_simulate_risk() {
        let m = BivariateModel::indep_gamma(2.0, 1.0).unwrap();
        let loss = LossSpec::squared_error(Mode::Scale);
        let e = est(&m, "smaller:rmle");
        let c = risk_curve(&m, &loss, &[e.clone()], &[3.0], 3000, 5, false).unwrap();
        let direct = simulate_risk(&m, &loss, &e, &Theta::new(1.0, 3.0).unwrap(), 3000, derive_seed(5, 0)).unwrap();
        assert_eq!(c.risks[0][0], direct);
        let crn = risk_curve(&m, &loss, &[e.clone()], &[3.0], 3000, 5, true).unwrap();
        assert_eq!(crn.risks[0][0], direct);
    }

    #[test]
    fn curve_validation() {
        let m = BivariateModel::indep_gamma(2.0, 1.0).unwrap();
        let loss = LossSpec::squared_error(Mode::Scale);
        let e = est(&m, "smaller:rmle");
        assert!(risk_curve(&m, &loss, &[e.clone()], &[0.5], 10, 1, true).is_err());
        assert!(risk_curve(&m, &loss, &[e.clone(), e.clone()], &[1.0], 10, 1, true).is_err());
        let larger = est(&m, "larger:bsee");
        assert!(matches!(
            risk_curve(&m, &loss, &[e, larger], &[1.0], 10, 1, true),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn overflow_names_replicate() {
        let m = BivariateModel::bvn(1.0, 1.0, 0.0).unwrap();
        let far = EquivariantEstimator::constant(Mode::Location, Target::Smaller, "far", -800.0);
        let err = simulate_risk(&m, &LossSpec::linex(), &far, &Theta::new(0.0, 0.0).unwrap(), 10, 1);
        assert!(matches!(err, Err(Error::Overflow { replicate: 0, .. })), "{err:?}");
    }

    #[test]
    fn identical_curves_have_zero_difference() {
        let m = BivariateModel::bvn(2.0, 5.0, 0.0).unwrap();
        let loss = LossSpec::squared_error(Mode::Location);
        let a = est(&m, "smaller:blee");
        let b = a.clone().with_label("copy");
        let c = risk_curve(&m, &loss, &[a, b], &[0.0, 1.0, 4.0], 2000, 3, true).unwrap();
        let r = dominance_report(&c, "BLEE", "copy").unwrap();
        assert!(r.points.iter().all(|p| p.difference == 0.0 && p.std_error == 0.0));
        assert_eq!(r.violations, 0);
        assert!(r.crossings.is_empty());
        assert!(dominance_report(&c, "BLEE", "nope").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = BivariateModel::bvn(2.0, 5.0, 0.0).unwrap();
        let loss = LossSpec::squared_error(Mode::Location);
        let ests = [est(&m, "smaller:blee"), est(&m, "smaller:improved_blee")];
        let c = risk_curve(&m, &loss, &ests, &[0.0, 0.5, 10.0], 2000, 42, true).unwrap();
        let text = to_csv_string(&c).unwrap();
        assert!(text.starts_with("model,target,loss,estimator,lambda,risk,stderr,n,seed\n"));
        assert!(text.contains("bvn[s1=2;s2=5;rho=0],smaller,squared_error,improved BLEE,"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(to_csv_string(&back).unwrap(), text);
        assert_eq!(back.labels, c.labels);
        assert_eq!(back.lambda_grid, c.lambda_grid);
        for (a, b) in back.risks.iter().flatten().zip(c.risks.iter().flatten()) {
            assert!((a.mean_risk - b.mean_risk).abs() <= 1e-11 * b.mean_risk.abs().max(1e-300));
            assert_eq!((a.n, a.seed), (b.n, b.seed));
        }
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.04), "0.0400000000000");
        assert_eq!(format_sig12(1234.5), "1234.50000000");
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(-2.5), "-2.50000000000");
    }
}
