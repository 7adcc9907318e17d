//! Spectral radius estimation by power iteration.
//!
//! A real matrix may have a dominant complex-conjugate pair (or a `±λ` pair),
//! in which case plain power iteration never settles on a direction. Each
//! iteration therefore fits the two-step recurrence `A²v ≈ p·Av + q·v` on the
//! iterates as well as the one-step ratio `Av ≈ μ·v`, and keeps whichever
//! model explains the iterates better.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            max_restarts: 3,
            seed: 0x05ee_d0f5_ca1e,
        }
    }
}

/// Largest eigenvalue modulus of a square matrix using default settings.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    PowerIteration::default().run(m)
}

struct Estimate {
    modulus: f64,
    residual: f64,
}

impl PowerIteration {
    pub fn run(&self, m: &DMatrix<f64>) -> Result<f64> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "spectral radius needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        if n == 0 {
            return Ok(0.0);
        }
        if m.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }

        let mut rng = rng::seeded(self.seed);
        let mut total = 0;
        // Restarts only happen when the iterate collapses into the null space.
        for _ in 0..=self.max_restarts {
            let start = DVector::from_fn(n, |_, _| rng::symmetric_unit(&mut rng));
            match self.iterate(m, start, &mut total)? {
                Some(rho) => return Ok(rho),
                None => continue,
            }
        }
        Err(Error::Convergence { iterations: total })
    }

    /// `Ok(None)` asks for a restart from a fresh random vector.
    fn iterate(
        &self,
        m: &DMatrix<f64>,
        start: DVector<f64>,
        total: &mut usize,
    ) -> Result<Option<f64>> {
        let mut v = start;
        let norm = v.norm();
        if norm == 0.0 {
            return Ok(None);
        }
        v /= norm;

        let mut previous = f64::NAN;
        let mut stable = 0;
        let mut w1 = DVector::zeros(v.len());
        let mut w2 = DVector::zeros(v.len());
        while *total < self.max_iterations {
            *total += 1;
            w1.gemv(1.0, m, &v, 0.0);
            w2.gemv(1.0, m, &w1, 0.0);
            let n1 = w1.norm();
            let n2 = w2.norm();
            if n1 == 0.0 || n2 == 0.0 {
                // Landed in the null space (or a nilpotent block).
                if n1 == 0.0 && previous.is_nan() {
                    return Ok(None);
                }
                return Ok(Some(0.0));
            }

            let est = best_estimate(&v, &w1, &w2);
            if !est.modulus.is_finite() {
                return Ok(None);
            }
            let change = (est.modulus - previous).abs() / est.modulus.max(f64::MIN_POSITIVE);
            if change < self.tolerance && est.residual < 1e-6 {
                stable += 1;
                if stable >= 3 {
                    return Ok(Some(est.modulus));
                }
            } else {
                stable = 0;
            }
            previous = est.modulus;

            v.copy_from(&w2);
            v /= n2;
        }
        Err(Error::Convergence { iterations: *total })
    }
}

fn best_estimate(v: &DVector<f64>, w1: &DVector<f64>, w2: &DVector<f64>) -> Estimate {
    // One-step model: w1 = mu v (v has unit norm).
    let mu = v.dot(w1);
    let r1 = (w1 - v * mu).norm() / w1.norm();
    let single = Estimate {
        modulus: mu.abs(),
        residual: r1,
    };

    // Two-step model: w2 = p w1 + q v, least squares via 2x2 normal equations.
    let a11 = w1.dot(w1);
    let a12 = w1.dot(v);
    let a22 = v.dot(v);
    let b1 = w1.dot(w2);
    let b2 = v.dot(w2);
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-14 * a11 * a22 {
        return single;
    }
    let p = (b1 * a22 - b2 * a12) / det;
    let q = (a11 * b2 - a12 * b1) / det;
    let r2 = (w2 - w1 * p - v * q).norm() / w2.norm();
    let disc = p * p + 4.0 * q;
    let modulus = if disc < 0.0 {
        (-q).sqrt()
    } else {
        let s = disc.sqrt();
        ((p + s) / 2.0).abs().max(((p - s) / 2.0).abs())
    };
    let pair = Estimate {
        modulus,
        residual: r2,
    };
    if single.residual <= pair.residual {
        single
    } else {
        pair
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_radius() {
        let m = DMatrix::<f64>::identity(7, 7);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_picks_largest_modulus() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -0.7]));
        assert!((spectral_radius(&m).unwrap() - 0.7).abs() < 1e-10);
    }

    #[test]
    fn rotation_pair() {
        // Eigenvalues 0.9 e^{±iπ/5} plus a smaller real one.
        let (c, s) = (std::f64::consts::PI / 5.0).sin_cos();
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[0.9 * s, -0.9 * c, 0.0, 0.9 * c, 0.9 * s, 0.0, 0.0, 0.0, 0.5],
        );
        assert!((spectral_radius(&m).unwrap() - 0.9).abs() < 1e-9);
    }

    #[test]
    fn zero_and_nilpotent() {
        assert_eq!(spectral_radius(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&m).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            spectral_radius(&DMatrix::zeros(2, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn too_few_iterations_reports_convergence_error() {
        let m = DMatrix::from_fn(30, 30, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0);
        let pi = PowerIteration {
            max_iterations: 4,
            max_restarts: 0,
            ..Default::default()
        };
        assert!(matches!(pi.run(&m), Err(Error::Convergence { .. })));
    }
}
