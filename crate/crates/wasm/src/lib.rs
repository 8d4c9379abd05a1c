//! Browser bindings: psi curves, preset risk curves and single-point
//! improvement. Models are passed as ids such as `bvn[s1=1;s2=2;rho=0.3]`.

use std::fmt::Write;

use orderest_core::estimators::{catalog_estimator, clip_improve, CatalogKey};
use orderest_core::plot::{risk_curve_svg, Chart};
use orderest_core::presets::preset;
use orderest_core::risksim::to_csv_string;
use orderest_core::solver::{solve_psi_lambda, PsiBounds, SolverOptions};
use orderest_core::{BivariateModel, LossSpec, Mode, Target};
use wasm_bindgen::prelude::*;

const MAX_REPLICATES: usize = 200_000;

fn model_and_loss(model_id: &str) -> Result<(BivariateModel, LossSpec), String> {
    let model = BivariateModel::parse_id(model_id.trim()).map_err(|e| e.to_string())?;
    let loss = match model.catalog_loss() {
        Some(name) => LossSpec::from_name(name, model.mode()).map_err(|e| e.to_string())?,
        None => LossSpec::squared_error(model.mode()),
    };
    Ok((model, loss))
}

/// SVG of `t -> psi_lambda(t)` for each lambda, with the envelope bounds.
#[wasm_bindgen]
pub fn psi_curve_svg(model_id: &str, target: &str, t_min: f64, t_max: f64, lambdas: Vec<f64>) -> Result<String, String> {
    let (model, loss) = model_and_loss(model_id)?;
    let target: Target = target.parse().map_err(|e: orderest_core::Error| e.to_string())?;
    if !(t_min < t_max) || lambdas.is_empty() {
        return Err("need t_min < t_max and at least one lambda".into());
    }
    let (lo, hi) = model.ancillary_support();
    let (t_min, t_max) = (t_min.max(lo), t_max.min(hi));
    let opts = SolverOptions::for_mode(model.mode());
    let points = 80;
    let ts: Vec<f64> = (0..points)
        .map(|i| t_min + (t_max - t_min) * (i as f64 + 0.5) / points as f64)
        .collect();

    let mut chart = Chart::new(format!("{} ({target})", model.id()), "t", "psi");
    for &lambda in &lambdas {
        let curve = ts
            .iter()
            .map(|&t| (t, solve_psi_lambda(&model, &loss, target, lambda, t, &opts).unwrap_or(f64::NAN)))
            .collect();
        chart.add(format!("lambda = {lambda}"), curve);
    }
    let bounds = PsiBounds::for_model(&model, &loss, target, &opts);
    let env: Vec<_> = ts.iter().map(|&t| (t, bounds.at(t).ok())).collect();
    chart.add("lower bound", env.iter().map(|(t, p)| (*t, p.map_or(f64::NAN, |p| p.lower))).collect());
    chart.add("upper bound", env.iter().map(|(t, p)| (*t, p.map_or(f64::NAN, |p| p.upper))).collect());
    Ok(chart.to_svg())
}

fn run_preset(name: &str, n: usize, seed: u64) -> Result<orderest_core::risksim::RiskCurve, String> {
    if n == 0 || n > MAX_REPLICATES {
        return Err(format!("replicates must be between 1 and {MAX_REPLICATES}"));
    }
    let p = preset(name).map_err(|e| e.to_string())?;
    p.run(n, seed).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn preset_risk_svg(name: &str, n: usize, seed: u64) -> Result<String, String> {
    let curve = run_preset(name, n, seed)?;
    Ok(risk_curve_svg(&curve, &format!("{name}: {}", curve.model)))
}

#[wasm_bindgen]
pub fn preset_risk_csv(name: &str, n: usize, seed: u64) -> Result<String, String> {
    to_csv_string(&run_preset(name, n, seed)?).map_err(|e| e.to_string())
}

/// Base and improved estimates at one observation, as `name value` lines.
#[wasm_bindgen]
pub fn improve_point(model_id: &str, key: &str, x1: f64, x2: f64) -> Result<String, String> {
    let (model, loss) = model_and_loss(model_id)?;
    let key: CatalogKey = key.parse().map_err(|e: orderest_core::Error| e.to_string())?;
    let base = catalog_estimator(&key, &model).map_err(|e| e.to_string())?;
    let bounds = PsiBounds::for_model(&model, &loss, key.target, &SolverOptions::for_mode(model.mode()));
    let t = base.ancillary(x1, x2).map_err(|e| e.to_string())?;
    let env = bounds.at(t).map_err(|e| e.to_string())?;
    let improved = clip_improve(&base, &bounds);
    let statistic = match model.mode() {
        Mode::Location => "D = x2 - x1",
        Mode::Scale => "T = x2 / x1",
    };
    let mut out = String::new();
    let _ = writeln!(out, "estimator {} ({key})", base.label());
    let _ = writeln!(out, "ancillary {t} ({statistic})");
    let _ = writeln!(out, "base {}", base.evaluate(x1, x2).map_err(|e| e.to_string())?);
    let _ = writeln!(out, "lower {}", env.lower);
    let _ = writeln!(out, "upper {}", env.upper);
    let _ = writeln!(out, "improved {}", improved.evaluate(x1, x2).map_err(|e| e.to_string())?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(text: &str, name: &str) -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(name))
            .and_then(|v| v.split_whitespace().next())
            .and_then(|v| v.parse().ok())
            .unwrap_or(f64::NAN)
    }

    #[test]
    fn improve_point_clips_the_normal_blee() {
        let out = improve_point("bvn[s1=1;s2=1;rho=0]", "smaller:blee", 2.0, 1.0).unwrap();
        assert_eq!(value(&out, "base "), 2.0);
        assert_eq!(value(&out, "improved "), 1.5);
        assert!(improve_point("indep_gamma[a1=1;a2=1]", "smaller:bsee", 0.0, 1.0).is_err());
        assert!(improve_point("bvn[s1=1]", "smaller:blee", 0.0, 1.0).is_err());
    }

    #[test]
    fn psi_curves_have_one_line_per_lambda_plus_bounds() {
        let svg = psi_curve_svg("indep_gamma[a1=2;a2=3]", "smaller", 0.1, 5.0, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 5);
        assert!(psi_curve_svg("indep_gamma[a1=2;a2=3]", "middle", 0.1, 5.0, vec![1.0]).is_err());
        assert!(psi_curve_svg("indep_gamma[a1=2;a2=3]", "smaller", 5.0, 1.0, vec![1.0]).is_err());
    }

    #[test]
    fn preset_outputs_are_deterministic() {
        let a = preset_risk_csv("fig1a", 500, 7).unwrap();
        assert_eq!(a, preset_risk_csv("fig1a", 500, 7).unwrap());
        assert_eq!(a.lines().count(), 1 + 2 * 11);
        assert!(preset_risk_svg("fig2c", 500, 7).unwrap().contains("<svg"));
        assert!(preset_risk_csv("fig1z", 500, 7).is_err());
        assert!(preset_risk_csv("fig1a", 0, 7).is_err());
    }
}
