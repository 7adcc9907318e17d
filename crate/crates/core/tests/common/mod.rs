//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Parlett-Reinsch balancing: a diagonal similarity by powers of two (exact in
/// floating point) that evens out row and column norms, as LAPACK's `gebal`.
pub fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut b = m.clone();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&k| k != i).map(|k| b[(k, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&k| k != i).map(|k| b[(i, k)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * (c + r) {
                converged = false;
                for k in 0..n {
                    b[(k, i)] *= f;
                    b[(i, k)] /= f;
                }
            }
        }
    }
    b
}

/// All eigenvalues as `(re, im)` via balancing followed by faer's general
/// (Hessenberg QR) eigensolver.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let m = balance(m);
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    f.eigenvalues()
        .expect("eigensolver failed")
        .iter()
        .map(|c| (c.re, c.im))
        .collect()
}

pub fn eigen_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    eigenvalues(m)
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .collect()
}

pub fn eigen_radius(m: &DMatrix<f64>) -> f64 {
    eigen_moduli(m).into_iter().fold(0.0, f64::max)
}

/// Edge-of-stability loss `N·λ²` with `net` held fixed.
pub fn loss_fixed_net(net: &[f64], gain: &[f64], bias: &[f64]) -> f64 {
    let n = net.len() as f64;
    let lambda: f64 = net
        .iter()
        .zip(gain)
        .zip(bias)
        .map(|((&s, &a), &b)| {
            let x = (a * s + b).tanh();
            ((1.0 - x * x) * a).abs().ln()
        })
        .sum::<f64>()
        / n;
    n * lambda * lambda
}

/// Fourth-order central difference of `f` at `x0`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x0: f64, h: f64) -> f64 {
    (-f(x0 + 2.0 * h) + 8.0 * f(x0 + h) - 8.0 * f(x0 - h) + f(x0 - 2.0 * h)) / (12.0 * h)
}

/// Ridge solution via explicit inverse of the normal matrix.
pub fn ridge_by_inverse(x: &DMatrix<f64>, y: &DMatrix<f64>, kappa: f64) -> DMatrix<f64> {
    let n = x.nrows();
    let gram = x * x.transpose() + DMatrix::identity(n, n) * kappa;
    let inv = gram.try_inverse().expect("invertible normal matrix");
    y * x.transpose() * inv
}

pub fn pearson_sq(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov * cov / (va * vb)
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
