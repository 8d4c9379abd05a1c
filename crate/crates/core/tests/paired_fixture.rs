use orderest_core::paired::{analyze_paired, Comparison, PairedDataset};

const SPRINTERS: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/uk_sprinters.csv"));

fn round(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

#[test]
fn sprinters_summary_and_estimates() {
    let data = PairedDataset::from_csv(SPRINTERS.as_bytes()).unwrap();
    assert_eq!(data.len(), 10);
    let r = analyze_paired(&data).unwrap();
    assert_eq!((round(r.mean.0, 3), round(r.mean.1, 3)), (9.617, 9.488));
    assert_eq!((round(r.variance.0, 3), round(r.variance.1, 3)), (0.032, 0.063));
    assert_eq!(round(r.correlation, 3), 0.848);
    assert_eq!(r.plug_in_divisor, 11.0);
    assert_eq!(round(r.plug_in_variance.0, 4), 0.0029);
    assert_eq!(round(r.plug_in_variance.1, 4), 0.0058);
    assert_eq!(r.regime_smaller, Comparison::Greater);
    assert_eq!(r.regime_larger, Comparison::Less);
    let (i1, i2) = r.improved.unwrap();
    assert!((i1 - 9.66).abs() <= 0.005 && (i2 - 9.66).abs() <= 0.005, "{i1} {i2}");
}
