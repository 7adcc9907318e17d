mod common;

use common::{pearson_sq, ridge_by_inverse};
use nalgebra::DMatrix;
use proptest::prelude::*;
use pta_core::readout::{fit_ridge, mc_score, nmse, predict, squared_correlation};
use pta_core::rng::{seeded, symmetric_unit};

fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded(seed);
    DMatrix::from_fn(rows, cols, |_, _| symmetric_unit(&mut rng))
}

#[test]
fn ridge_matches_normal_equation_oracle() {
    let x = random(10, 50, 1);
    let y = random(3, 50, 2);
    let v = fit_ridge(&x, &y, 1e-8).unwrap();
    let oracle = ridge_by_inverse(&x, &y, 1e-8);
    assert!((&v.output_map - &oracle).amax() < 1e-8);
}

#[test]
fn ridge_residual_small_relative_to_rhs() {
    for seed in 0..10 {
        let x = random(20, 300, seed);
        let y = random(4, 300, seed + 100);
        let kappa = 1e-8;
        let v = fit_ridge(&x, &y, kappa).unwrap();
        let gram = &x * x.transpose() + DMatrix::identity(20, 20) * kappa;
        let rhs = &x * y.transpose();
        let residual = (gram * v.output_map.transpose() - &rhs).norm();
        assert!(residual <= 1e-8 * rhs.norm());
    }
}

#[test]
fn predict_matches_dot_products() {
    let x = random(6, 40, 3);
    let v = fit_ridge(&x, &random(2, 40, 4), 1e-3).unwrap();
    let out = predict(&v, &x).unwrap();
    for r in 0..2 {
        for t in 0..40 {
            let dot: f64 = (0..6).map(|k| v.output_map[(r, k)] * x[(k, t)]).sum();
            assert!((out[(r, t)] - dot).abs() < 1e-13);
        }
    }
}

#[test]
fn metrics_match_direct_formulas() {
    let mut rng = seeded(9);
    for _ in 0..50 {
        let p: Vec<f64> = (0..100).map(|_| symmetric_unit(&mut rng)).collect();
        let t: Vec<f64> = (0..100).map(|_| symmetric_unit(&mut rng) + 0.3).collect();
        let mt = t.iter().sum::<f64>() / 100.0;
        let var = t.iter().map(|v| (v - mt).powi(2)).sum::<f64>() / 100.0;
        let mse = p.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 100.0;
        assert!((nmse(&p, &t).unwrap() - mse / var).abs() < 1e-12);
        assert!((squared_correlation(&p, &t).unwrap() - pearson_sq(&p, &t)).abs() < 1e-12);
    }
}

#[test]
fn mc_is_additive_over_channels() {
    let p = random(8, 60, 10);
    let t = random(8, 60, 11);
    let whole = mc_score(&p, &t).unwrap();
    let top = mc_score(&p.rows(0, 3).into_owned(), &t.rows(0, 3).into_owned()).unwrap();
    let bottom = mc_score(&p.rows(3, 5).into_owned(), &t.rows(3, 5).into_owned()).unwrap();
    assert!((whole - top - bottom).abs() < 1e-12);
}

proptest! {
    #[test]
    fn correlation_is_affine_invariant(
        seed in any::<u64>(),
        slope in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
        offset in -100.0f64..100.0,
    ) {
        let mut rng = seeded(seed);
        let p: Vec<f64> = (0..64).map(|_| symmetric_unit(&mut rng)).collect();
        let t: Vec<f64> = (0..64).map(|_| symmetric_unit(&mut rng)).collect();
        let q: Vec<f64> = p.iter().map(|v| slope * v + offset).collect();
        let r1 = squared_correlation(&p, &t).unwrap();
        let r2 = squared_correlation(&q, &t).unwrap();
        let r3 = squared_correlation(&p, &q).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-9);
        prop_assert!((r3 - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r1));
    }
}
