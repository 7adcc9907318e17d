//! Linear readout trained by ridge regression, plus evaluation metrics.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    /// `Y × N` reservoir-to-output matrix.
    pub output_map: DMatrix<f64>,
    pub regularization: f64,
}

/// Solves `V (X Xᵀ + κI) = Y Xᵀ` through a Cholesky factorization.
///
/// `states` is `N × M` (one state per column), `targets` is `Y × M`.
pub fn fit_ridge(
    states: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    kappa: f64,
) -> Result<ReadoutWeights> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "regularization must be non-negative, got {kappa}"
        )));
    }
    if states.ncols() == 0 {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    if states.ncols() != targets.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} state columns vs {} target columns",
            states.ncols(),
            targets.ncols()
        )));
    }
    let n = states.nrows();
    let xt = states.transpose();
    let yt = targets.transpose();
    let mut gram = xt.tr_mul(&xt);
    for i in 0..n {
        gram[(i, i)] += kappa;
    }
    let rhs = xt.tr_mul(&yt);
    let chol = Cholesky::new(gram).ok_or(Error::SingularSystem { kappa })?;
    let solution = chol.solve(&rhs);
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { kappa });
    }
    Ok(ReadoutWeights {
        output_map: solution.transpose(),
        regularization: kappa,
    })
}

/// `Y × M` readout outputs for `N × M` states (identity output function).
pub fn predict(v: &ReadoutWeights, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if v.output_map.ncols() != states.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "readout expects {} units, states have {}",
            v.output_map.ncols(),
            states.nrows()
        )));
    }
    Ok(&v.output_map * states)
}

fn check_pair(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::InvalidArgument(
            "metrics need at least two samples".into(),
        ));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean squared error divided by the population variance of the target.
pub fn nmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let m = mean(target);
    let var = target.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / target.len() as f64;
    if var <= 0.0 {
        return Err(Error::UndefinedMetric("target has zero variance".into()));
    }
    let mse = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse / var)
}

/// Squared Pearson correlation; zero when either side is constant.
pub fn squared_correlation(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let mp = mean(pred);
    let mt = mean(target);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(target) {
        let dp = p - mp;
        let dt = t - mt;
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(0.0);
    }
    Ok(((sxy * sxy) / (sxx * syy)).min(1.0))
}

/// Sum over delay channels of the squared correlation between each output
/// row and its delayed-input target row.
pub fn mc_score(preds: &DMatrix<f64>, delayed_inputs: &DMatrix<f64>) -> Result<f64> {
    if preds.shape() != delayed_inputs.shape() {
        return Err(Error::DimensionMismatch(format!(
            "predictions {:?} vs targets {:?}",
            preds.shape(),
            delayed_inputs.shape()
        )));
    }
    let mut total = 0.0;
    for k in 0..preds.nrows() {
        let p: Vec<f64> = preds.row(k).iter().copied().collect();
        let t: Vec<f64> = delayed_inputs.row(k).iter().copied().collect();
        total += squared_correlation(&p, &t)?;
    }
    Ok(total)
}

/// Per-output NMSE and r², and the MC sum when the task is memory capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmse: Vec<f64>,
    pub r_squared: Vec<f64>,
    pub mc: Option<f64>,
}

impl MetricReport {
    pub fn evaluate(
        preds: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        memory_capacity: bool,
    ) -> Result<Self> {
        if preds.shape() != targets.shape() {
            return Err(Error::DimensionMismatch(format!(
                "predictions {:?} vs targets {:?}",
                preds.shape(),
                targets.shape()
            )));
        }
        let mut nmse_all = Vec::with_capacity(preds.nrows());
        let mut r2_all = Vec::with_capacity(preds.nrows());
        for k in 0..preds.nrows() {
            let p: Vec<f64> = preds.row(k).iter().copied().collect();
            let t: Vec<f64> = targets.row(k).iter().copied().collect();
            // Constant MC channels are possible only on degenerate inputs.
            nmse_all.push(nmse(&p, &t).unwrap_or(f64::NAN));
            r2_all.push(squared_correlation(&p, &t)?);
        }
        let mc = memory_capacity.then(|| r2_all.iter().sum());
        Ok(Self {
            nmse: nmse_all,
            r_squared: r2_all,
            mc,
        })
    }
}
