//! Numerical self-checks: sampler against density, solver against closed forms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families::{BivariateModel, Target};
use crate::loss::LossSpec;
use crate::presets::standard_grid;
use crate::quad::{integrate, Window};
use crate::solver::{solve_psi_lambda, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCheck {
    pub draws: usize,
    pub edges1: Vec<f64>,
    pub edges2: Vec<f64>,
    /// Row-major `bins x bins` observed counts.
    pub observed: Vec<u64>,
    /// Cell probabilities from the density.
    pub expected: Vec<f64>,
    /// Largest `|observed - n p| / se` over the cells.
    pub max_z: f64,
}

/// Compares a 2-D histogram of `draws` standardized samples with the cell
/// probabilities of the joint density.
///
/// The grid spans the 0.1% to 99.9% pilot quantiles of each coordinate.
/// The binomial standard error of a cell count is floored at one count so
/// that cells with a fraction of an expected draw do not dominate.
pub fn sampler_histogram(model: &BivariateModel, draws: usize, bins: usize, seed: u64) -> Result<HistogramCheck> {
    if draws < 1000 || bins == 0 {
        return Err(Error::InvalidInput("need at least 1000 draws and one bin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let pilot = (0..100_000)
        .map(|_| model.sample_standardized(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    let edges = |pick: fn(&(f64, f64)) -> f64| {
        let mut v: Vec<f64> = pilot.iter().map(pick).collect();
        v.sort_by(f64::total_cmp);
        let lo = v[v.len() / 1000];
        let hi = v[v.len() - 1 - v.len() / 1000];
        (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect::<Vec<_>>()
    };
    let edges1 = edges(|p| p.0);
    let edges2 = edges(|p| p.1);

    let cell = |x: f64, e: &[f64]| -> Option<usize> {
        if x < e[0] || x >= e[bins] {
            return None;
        }
        let k = ((x - e[0]) / (e[bins] - e[0]) * bins as f64) as usize;
        Some(k.min(bins - 1))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![0u64; bins * bins];
    for _ in 0..draws {
        let (z1, z2) = model.sample_standardized(&mut rng)?;
        if let (Some(i), Some(j)) = (cell(z1, &edges1), cell(z2, &edges2)) {
            observed[i * bins + j] += 1;
        }
    }

    let mut expected = Vec::with_capacity(bins * bins);
    for i in 0..bins {
        for j in 0..bins {
            expected.push(cell_probability(model, (edges1[i], edges1[i + 1]), (edges2[j], edges2[j + 1]))?);
        }
    }
    let n = draws as f64;
    let max_z = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &p)| {
            let se = (n * p * (1.0 - p)).sqrt().max(1.0);
            (o as f64 - n * p).abs() / se
        })
        .fold(0.0, f64::max);
    Ok(HistogramCheck { draws, edges1, edges2, observed, expected, max_z })
}

/// Probability of a rectangle under the standardized density. The inner
/// integral is split on the diagonal, where the dependent families have a
/// kink or a jump.
pub fn cell_probability(model: &BivariateModel, x: (f64, f64), y: (f64, f64)) -> Result<f64> {
    let tol = 1e-9;
    let finite = |a: f64, b: f64| Window::new(a, b, 0.5 * (a + b), 0.5 * (b - a));
    let inner = |z1: f64| -> f64 {
        let f = |z2: f64| model.joint_density(z1, z2);
        let pieces = if y.0 < z1 && z1 < y.1 { vec![(y.0, z1), (z1, y.1)] } else { vec![y] };
        pieces.into_iter().map(|(a, b)| settled(integrate(f, &finite(a, b), tol))).sum()
    };
    let mut breaks = vec![x.0];
    for c in [y.0, y.1] {
        if x.0 < c && c < x.1 {
            breaks.push(c);
        }
    }
    breaks.push(x.1);
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let v = settled(integrate(inner, &finite(w[0], w[1]), tol));
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("cell [{}, {}] x [{}, {}] did not converge", x.0, x.1, y.0, y.1)));
        }
        total += v;
    }
    Ok(total)
}

/// Value of a quadrature that converged, or whose last change is below
/// `1e-9` in absolute terms, far under the resolution of a histogram cell.
/// Thin slivers next to a split point trip the relative test otherwise.
fn settled(r: Result<crate::quad::QuadResult>) -> f64 {
    match r {
        Ok(q) if q.converged || q.error <= 1e-9 => q.value,
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub points: usize,
    pub max_abs_diff: f64,
    /// `(lambda, t, closed form, solver)` at the largest difference.
    pub worst: (f64, f64, f64, f64),
}

/// Solver against the closed form on the `n x n` standard grid.
pub fn oracle_check(model: &BivariateModel, target: Target, n: usize, opts: &SolverOptions) -> Result<OracleCheck> {
    let loss = LossSpec::from_name(
        model
            .catalog_loss()
            .ok_or_else(|| Error::UnknownKey(format!("{} has no catalogued closed form", model.id())))?,
        model.mode(),
    )?;
    let mut out = OracleCheck { points: 0, max_abs_diff: 0.0, worst: (f64::NAN, f64::NAN, f64::NAN, f64::NAN) };
    for (lambda, t) in standard_grid(model, n) {
        let exact = model
            .closed_form_psi(&loss, target, lambda, t)?
            .ok_or_else(|| Error::UnknownKey(format!("{} has no closed form", model.id())))?;
        let solved = solve_psi_lambda(model, &loss, target, lambda, t, opts)?;
        let d = (exact - solved).abs();
        out.points += 1;
        if !(d <= out.max_abs_diff) {
            out.max_abs_diff = d;
            out.worst = (lambda, t, exact, solved);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_cells_factor() {
        let m = BivariateModel::indep_exp(1.0, 2.0).unwrap();
        let p = cell_probability(&m, (0.5, 1.0), (1.0, 3.0)).unwrap();
        let expect = ((-0.5f64).exp() - (-1.0f64).exp()) * ((-0.5f64).exp() - (-1.5f64).exp());
        assert!((p - expect).abs() < 1e-10, "{p} {expect}");
    }

    #[test]
    fn wedge_cell_below_diagonal_is_empty() {
        let m = BivariateModel::dep_exp_gamma();
        assert_eq!(cell_probability(&m, (2.0, 3.0), (0.5, 1.5)).unwrap(), 0.0);
    }

    #[test]
    fn oracle_check_on_a_small_grid() {
        let m = BivariateModel::indep_gamma(1.0, 1.0).unwrap();
        let r = oracle_check(&m, Target::Smaller, 3, &SolverOptions::for_mode(m.mode())).unwrap();
        assert_eq!(r.points, 9);
        assert!(r.max_abs_diff < 1e-6, "{r:?}");
    }
}
