use std::collections::BTreeMap;
use std::path::PathBuf;

use orderest_core::estimators::{catalog_estimator, catalog_keys, clip_improve, CatalogKey, EquivariantEstimator, EstimatorKind};
use orderest_core::paired::{analyze_paired, PairedDataset};
use orderest_core::plot::risk_curve_svg;
use orderest_core::presets::preset;
use orderest_core::risksim::{dominance_report, risk_curve, to_csv_string};
use orderest_core::solver::{
    compute_bounds, lambda_grid, solve_psi_lambda, PsiBounds, SolverOptions, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_POINTS,
};
use orderest_core::{BivariateModel, Error, LossSpec, Mode, Target};

use crate::args::{AnalyzeArgs, BoundsArgs, Format, GlobalArgs, ImproveArgs, ModelArgs, PsiArgs, SimulateArgs};
use crate::Failure;

const SPRINTERS: &str = include_str!("../../../data/uk_sprinters.csv");

fn build_model(m: &ModelArgs) -> Result<BivariateModel, Failure> {
    let name = m.model.as_deref().ok_or_else(|| Failure::usage("--model is required"))?;
    let params: BTreeMap<String, f64> = [("s1", m.s1), ("s2", m.s2), ("rho", m.rho), ("a1", m.a1), ("a2", m.a2)]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    BivariateModel::from_parts(name, &params).map_err(|e| match e {
        Error::Config(_) => Failure::usage(e),
        e => e.into(),
    })
}

fn build_loss(m: &ModelArgs, model: &BivariateModel) -> Result<LossSpec, Failure> {
    match (&m.loss, model.catalog_loss()) {
        (Some(name), _) => LossSpec::parse(name, model.mode()).map_err(Failure::usage),
        (None, Some(name)) => Ok(LossSpec::from_name(name, model.mode())?),
        (None, None) => Ok(LossSpec::squared_error(model.mode())),
    }
}

fn parse_target(m: &ModelArgs) -> Result<Target, Failure> {
    m.target
        .as_deref()
        .ok_or_else(|| Failure::usage("--target is required"))?
        .parse()
        .map_err(Failure::usage)
}

fn solver_options(g: &GlobalArgs, mode: Mode) -> Result<SolverOptions, Failure> {
    let mut opts = SolverOptions::for_mode(mode);
    if let Some(tol) = g.abs_tol {
        opts.abs_tol = tol;
    }
    if g.lambda_grid_max.is_some() || g.lambda_grid_points.is_some() {
        let points = g.lambda_grid_points.unwrap_or(DEFAULT_LAMBDA_POINTS);
        if points == 0 {
            return Err(Failure::usage("--lambda-grid-points must be positive"));
        }
        opts.lambda_grid = lambda_grid(mode, g.lambda_grid_max.unwrap_or(DEFAULT_LAMBDA_MAX), points);
    }
    opts.validate(mode).map_err(Failure::usage)?;
    Ok(opts)
}

fn required<'a>(v: &'a Option<Vec<f64>>, flag: &str) -> Result<&'a [f64], Failure> {
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Failure::usage(format!("--{flag} needs at least one value"))),
    }
}

fn num(x: f64) -> String {
    format!("{x:.10}")
}

pub fn psi(g: &GlobalArgs, a: &PsiArgs) -> Result<(), Failure> {
    let model = build_model(&a.model)?;
    let loss = build_loss(&a.model, &model)?;
    let target = parse_target(&a.model)?;
    let lambdas = required(&a.lambda, "lambda")?;
    let ts = required(&a.t, "t")?;
    let opts = solver_options(g, model.mode())?;

    println!("model {}  loss {}  target {}", model.id(), loss.name(), target);
    println!("{:>12} {:>12} {:>20} {:>20} {:>12}", "lambda", "t", "closed_form", "solver", "abs_diff");
    for &lambda in lambdas {
        for &t in ts {
            let closed = model.closed_form_psi(&loss, target, lambda, t)?;
            let solved = solve_psi_lambda(&model, &loss, target, lambda, t, &opts)?;
            let (c, d) = match closed {
                Some(c) => (num(c), format!("{:.3e}", (c - solved).abs())),
                None => ("-".to_string(), "-".to_string()),
            };
            println!("{lambda:>12} {t:>12} {c:>20} {:>20} {d:>12}", num(solved));
        }
    }
    Ok(())
}

pub fn bounds(g: &GlobalArgs, a: &BoundsArgs) -> Result<(), Failure> {
    let model = build_model(&a.model)?;
    let loss = build_loss(&a.model, &model)?;
    let target = parse_target(&a.model)?;
    let ts = required(&a.t, "t")?;
    let opts = solver_options(g, model.mode())?;

    println!("model {}  loss {}  target {}", model.id(), loss.name(), target);
    println!("{:>12} {:>20} {:>20}  source", "t", "lower", "upper");
    for &t in ts {
        let (p, source) = compute_bounds(&model, &loss, target, t, &opts)?;
        println!("{t:>12} {:>20} {:>20}  {source}", num(p.lower), num(p.upper));
    }
    Ok(())
}

pub fn improve(g: &GlobalArgs, a: &ImproveArgs) -> Result<(), Failure> {
    let model = build_model(&a.model)?;
    let loss = build_loss(&a.model, &model)?;
    let key: CatalogKey = a
        .key
        .as_deref()
        .ok_or_else(|| Failure::usage("--key is required"))?
        .parse()
        .map_err(Failure::usage)?;
    let (x1, x2) = match (a.x1, a.x2) {
        (Some(x1), Some(x2)) => (x1, x2),
        _ => return Err(Failure::usage("--x1 and --x2 are required")),
    };
    let opts = solver_options(g, model.mode())?;
    let base = catalog_estimator(&key, &model).map_err(|e| match e {
        Error::UnknownKey(_) => Failure::usage(e),
        e => e.into(),
    })?;
    let bounds = PsiBounds::for_model(&model, &loss, key.target, &opts);
    let t = base.ancillary(x1, x2)?;
    let env = bounds.at(t)?;
    let improved = clip_improve(&base, &bounds);

    println!("model      {}", model.id());
    println!("estimator  {key} ({})", base.label());
    println!("ancillary  {}", num(t));
    println!("base       {}", num(base.evaluate(x1, x2)?));
    println!("psi        {}", num(base.psi(t)?));
    println!("lower      {}", num(env.lower));
    println!("upper      {}", num(env.upper));
    println!("bounds     {}", bounds.provenance());
    println!("improved   {}", num(improved.evaluate(x1, x2)?));
    Ok(())
}

struct Plan {
    name: String,
    model: BivariateModel,
    loss: LossSpec,
    target: Target,
    estimators: Vec<EquivariantEstimator>,
    lambdas: Vec<f64>,
    pairs: Vec<(EstimatorKind, EstimatorKind)>,
}

fn plan(a: &SimulateArgs) -> Result<Plan, Failure> {
    if let Some(name) = &a.preset {
        if a.model.model.is_some() || a.estimators.is_some() {
            return Err(Failure::usage("--preset cannot be combined with --model or --estimators"));
        }
        let p = preset(name).map_err(Failure::usage)?;
        return Ok(Plan {
            name: a.name.clone().unwrap_or_else(|| p.name.clone()),
            estimators: p.estimators()?,
            lambdas: a.lambda.clone().unwrap_or(p.lambda_grid),
            model: p.model,
            loss: p.loss,
            target: p.target,
            pairs: p.pairs,
        });
    }
    if a.model.model.is_none() {
        return Err(Failure::usage("either --preset or --model is required"));
    }
    let model = build_model(&a.model)?;
    let loss = build_loss(&a.model, &model)?;
    let target = parse_target(&a.model)?;
    let kinds: Vec<EstimatorKind> = match &a.estimators {
        Some(names) => names
            .iter()
            .map(|s| s.parse().map_err(Failure::usage))
            .collect::<Result<_, _>>()?,
        None => catalog_keys(&model)
            .into_iter()
            .filter(|k| k.target == target)
            .map(|k| k.kind)
            .collect(),
    };
    let mut estimators = Vec::new();
    let mut present = Vec::new();
    for kind in kinds {
        match catalog_estimator(&CatalogKey::new(Some(model.name()), target, kind), &model) {
            Ok(e) => {
                estimators.push(e);
                present.push(kind);
            }
            Err(Error::Nonexistent(_)) if a.estimators.is_none() => {}
            Err(e @ Error::UnknownKey(_)) => return Err(Failure::usage(e)),
            Err(e) => return Err(e.into()),
        }
    }
    if estimators.is_empty() {
        return Err(Failure::usage("no estimators selected"));
    }
    let pairs = present
        .iter()
        .filter_map(|&k| k.base().filter(|b| present.contains(b)).map(|b| (b, k)))
        .collect();
    let lambdas = match &a.lambda {
        Some(l) => l.clone(),
        None => match model.mode() {
            Mode::Location => (0..=10).map(f64::from).collect(),
            Mode::Scale => (1..=10).map(f64::from).collect(),
        },
    };
    Ok(Plan { name: a.name.clone().unwrap_or_else(|| "custom".into()), model, loss, target, estimators, lambdas, pairs })
}

pub fn simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<(), Failure> {
    let p = plan(a)?;
    if p.name.is_empty() || p.name.contains(['/', '\\']) {
        return Err(Failure::usage(format!("invalid output name '{}'", p.name)));
    }
    let n = g.n.unwrap_or(10_000);
    let seed = g.seed.unwrap_or(42);
    let curve = risk_curve(&p.model, &p.loss, &p.estimators, &p.lambdas, n, seed, !a.no_crn)?;

    let out_dir = g.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let format = g.format.unwrap_or(Format::Csv);
    if matches!(format, Format::Csv | Format::Both) {
        let path = out_dir.join(format!("{}.csv", p.name));
        std::fs::write(&path, to_csv_string(&curve)?)?;
        println!("wrote {}", path.display());
    }
    if matches!(format, Format::Svg | Format::Both) {
        let path = out_dir.join(format!("{}.svg", p.name));
        let title = format!("{}: {} ({}, {} parameter)", p.name, p.model.id(), p.loss.name(), p.target);
        std::fs::write(&path, risk_curve_svg(&curve, &title))?;
        println!("wrote {}", path.display());
    }
    for (base, improved) in &p.pairs {
        let r = dominance_report(&curve, base.label(), improved.label())?;
        let crossings = if r.crossings.is_empty() {
            "none".to_string()
        } else {
            r.crossings.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(", ")
        };
        println!(
            "{} vs {}: {} of {} points worse by > 2 SE, largest reduction {:.6} at lambda {}, crossings {}",
            r.improved_label,
            r.base_label,
            r.violations,
            r.points.len(),
            r.max_improvement,
            r.best_lambda,
            crossings
        );
    }
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let data = match &a.data {
        Some(path) => PairedDataset::from_csv(std::fs::File::open(path)?)?,
        None => PairedDataset::from_csv(SPRINTERS.as_bytes())?,
    };
    let r = analyze_paired(&data)?;
    println!("rows               {}", r.n);
    println!("means              {:.3} {:.3}", r.mean.0, r.mean.1);
    println!("variances          {:.3} {:.3}", r.variance.0, r.variance.1);
    println!("correlation        {:.3}", r.correlation);
    println!(
        "plug-in variances  {:.4} {:.4}  (divisor n + 1 = {})",
        r.plug_in_variance.0, r.plug_in_variance.1, r.plug_in_divisor
    );
    println!("plug-in rho        {:.3}", r.plug_in_rho);
    println!(
        "regime             rho*s2 {} s1, rho*s1 {} s2",
        r.regime_smaller.symbol(),
        r.regime_larger.symbol()
    );
    match r.improved {
        Some((e1, e2)) => println!("improved           {e1:.4} {e2:.4}"),
        None => println!("improved           - -  (plug-in correlation is +-1)"),
    }
    println!("note: the plug-in variances divide by n + 1 rather than n");
    Ok(())
}
