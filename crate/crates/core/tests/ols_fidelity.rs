//! Trend regression against exact-arithmetic and linear-algebra oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};
use talktrainer_core::analytics::{ols, AnalyticsError};

struct Fixture {
    x: Vec<f64>,
    y: Vec<f64>,
    beta: f64,
    intercept: f64,
    r_squared: f64,
}

fn fixture() -> Fixture {
    let text = include_str!("fixtures/ols_line.csv");
    let header = text.lines().next().unwrap().trim_start_matches("# ");
    let field = |k: &str| -> f64 {
        header.split_whitespace().find_map(|kv| kv.strip_prefix(&format!("{k}="))).unwrap().parse().unwrap()
    };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let (x, y) = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap())
        })
        .unzip();
    Fixture { x, y, beta: field("beta"), intercept: field("intercept"), r_squared: field("r_squared") }
}

/// Normal equations with nalgebra: (XᵀX)⁻¹Xᵀy, plus the slope's p-value.
fn normal_equations(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let yv = DVector::from_column_slice(y);
    let xtx = design.transpose() * &design;
    let inv = xtx.try_inverse().unwrap();
    let coef = &inv * design.transpose() * &yv;
    let resid = &yv - &design * &coef;
    let s2 = resid.dot(&resid) / (n as f64 - 2.0);
    let se = (s2 * inv[(1, 1)]).sqrt();
    let t = StudentsT::new(0.0, 1.0, n as f64 - 2.0).unwrap();
    let p = 2.0 * (1.0 - t.cdf((coef[1] / se).abs()));
    (coef[1], coef[0], p)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn recovers_seeded_slope() {
    let f = fixture();
    assert_eq!(f.x.len(), 100);
    let r = ols(&f.x, &f.y).unwrap();
    assert!((0.065..=0.075).contains(&r.beta), "{}", r.beta);
    assert!(r.r_squared > 0.9);
    assert!(rel(r.beta, f.beta) < 1e-9);
    assert!(rel(r.intercept, f.intercept) < 1e-9);
    assert!(rel(r.r_squared, f.r_squared) < 1e-9);
    let (b, a, _) = normal_equations(&f.x, &f.y);
    assert!(rel(r.beta, b) < 1e-9);
    assert!(rel(r.intercept, a) < 1e-9);
    assert!(r.p_value < 1e-12);
}

#[test]
fn noiseless_line_is_exact() {
    let x: Vec<f64> = (0..100).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|x| 0.07 * x).collect();
    let r = ols(&x, &y).unwrap();
    // 0.07 x is itself rounded, so exact means to the last bits.
    assert!(rel(r.beta, 0.07) < 4.0 * f64::EPSILON, "{}", r.beta);
    assert!(r.intercept.abs() < 1e-14);
    assert!(1.0 - r.r_squared < 1e-15);

    let y: Vec<f64> = x.iter().map(|x| 0.5 * x + 2.0).collect();
    let r = ols(&x, &y).unwrap();
    // Every value here is dyadic, so the arithmetic is exact.
    assert_eq!((r.beta, r.intercept, r.r_squared), (0.5, 2.0, 1.0));
    assert_eq!(r.p_value, 0.0);
}

#[test]
fn agrees_with_normal_equations_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.random_range(3..60);
        let slope = rng.random_range(-1.0..1.0);
        let noise = Normal::new(0.0, rng.random_range(0.01..2.0)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let y: Vec<f64> = x.iter().map(|x| slope * x + noise.sample(&mut rng)).collect();
        let r = ols(&x, &y).unwrap();
        let (b, a, p) = normal_equations(&x, &y);
        assert!(rel(r.beta, b) < 1e-9, "{} vs {b}", r.beta);
        assert!((r.intercept - a).abs() < 1e-9 * a.abs().max(1.0));
        assert!((r.p_value - p).abs() < 1e-9, "{} vs {p}", r.p_value);
    }
}

#[test]
fn rejects_degenerate_inputs() {
    assert_eq!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(AnalyticsError::DegenerateX));
    assert_eq!(ols(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalyticsError::TooFewPoints { n: 2 }));
    assert_eq!(ols(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(AnalyticsError::LengthMismatch { x: 3, y: 2 }));
}
