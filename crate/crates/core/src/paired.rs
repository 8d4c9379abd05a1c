//! Paired-observation analysis under a bivariate normal model with ordered means.

use std::io::Read;

use crate::error::{Error, Result};
use crate::estimators::{catalog_estimator, CatalogKey, EstimatorKind};
use crate::families::{BivariateModel, ModelName, Target};

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRow {
    pub label: String,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    rows: Vec<PairedRow>,
}

impl PairedDataset {
    pub fn new(rows: Vec<PairedRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 rows, got {}", rows.len())));
        }
        if let Some(r) = rows.iter().find(|r| !r.a.is_finite() || !r.b.is_finite()) {
            return Err(Error::InvalidInput(format!("row '{}' has a non-finite value", r.label)));
        }
        Ok(Self { rows })
    }

    /// Reads `label,value_a,value_b` records. A first line whose value columns
    /// are not numeric is treated as a header.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields, got {}", i + 1, rec.len())));
            }
            let a = rec[1].parse::<f64>();
            let b = rec[2].parse::<f64>();
            match (a, b) {
                (Ok(a), Ok(b)) => rows.push(PairedRow { label: rec[0].to_string(), a, b }),
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("line {}: values must be numeric", i + 1))),
            }
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[PairedRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Equal,
    Greater,
}

impl Comparison {
    fn of(x: f64, y: f64) -> Self {
        if (x - y).abs() <= 1e-12 * x.abs().max(y.abs()) {
            Comparison::Equal
        } else if x < y {
            Comparison::Less
        } else {
            Comparison::Greater
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Less => "<",
            Comparison::Equal => "=",
            Comparison::Greater => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n: usize,
    pub mean: (f64, f64),
    /// Sample variances with divisor `n - 1`.
    pub variance: (f64, f64),
    pub correlation: f64,
    /// Divisor applied to the sample variances to obtain the plug-in values.
    pub plug_in_divisor: f64,
    pub plug_in_variance: (f64, f64),
    pub plug_in_rho: f64,
    /// `rho * sigma2` compared with `sigma1`.
    pub regime_smaller: Comparison,
    /// `rho * sigma1` compared with `sigma2`.
    pub regime_larger: Comparison,
    /// Absent when the plug-in correlation is +-1 and the normal model is singular.
    pub improved: Option<(f64, f64)>,
}

/// Summary statistics, plug-in normal parameters and the restricted estimates
/// of both means computed from the pair of sample means.
///
/// The plug-in variances divide the sample variances by `n + 1`.
pub fn analyze_paired(data: &PairedDataset) -> Result<AnalysisReport> {
    let n = data.len();
    let nf = n as f64;
    let m1 = data.rows.iter().map(|r| r.a).sum::<f64>() / nf;
    let m2 = data.rows.iter().map(|r| r.b).sum::<f64>() / nf;
    let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
    for r in &data.rows {
        let (d1, d2) = (r.a - m1, r.b - m2);
        s11 += d1 * d1;
        s22 += d2 * d2;
        s12 += d1 * d2;
    }
    if s11 == 0.0 || s22 == 0.0 {
        return Err(Error::DegenerateData("a column has zero sample variance".into()));
    }
    let (v1, v2) = (s11 / (nf - 1.0), s22 / (nf - 1.0));
    let rho = s12 / (s11 * s22).sqrt();
    let divisor = nf + 1.0;
    let (p1, p2) = (v1 / divisor, v2 / divisor);
    let (sd1, sd2) = (p1.sqrt(), p2.sqrt());

    let improved = if rho.abs() < 1.0 {
        let model = BivariateModel::bvn(sd1, sd2, rho)?;
        let at = |target| -> Result<f64> {
            let key = CatalogKey::new(Some(ModelName::Bvn), target, EstimatorKind::Rmle);
            catalog_estimator(&key, &model)?.evaluate(m1, m2)
        };
        Some((at(Target::Smaller)?, at(Target::Larger)?))
    } else {
        None
    };
    Ok(AnalysisReport {
        n,
        mean: (m1, m2),
        variance: (v1, v2),
        correlation: rho,
        plug_in_divisor: divisor,
        plug_in_variance: (p1, p2),
        plug_in_rho: rho,
        regime_smaller: Comparison::of(rho * sd2, sd1),
        regime_larger: Comparison::of(rho * sd1, sd2),
        improved,
    })
}
