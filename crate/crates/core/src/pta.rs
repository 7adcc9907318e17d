//! Phase Transition Adaptation.
//!
//! For a ring reservoir with unit cycle weight driven by the gained map
//! `x(t) = tanh(a ⊙ net(t) + b)`, the Jacobian at `x(t)` is a weighted cycle
//! whose weights are `η_k = (1 - x_k²)·a_k`. All of its eigenvalues share the
//! modulus `(Π|η_k|)^(1/N)`, so every local Lyapunov exponent equals
//! `λ(t) = mean_k log|η_k|`. Training minimizes `e(t) = N·λ(t)²` by SGD with
//! momentum on `a` and `b`, one update per time step, treating `net(t)` as
//! constant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::{Recurrent, ReservoirWeights, Runner, StateMap};

pub const DEFAULT_ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtaHyper {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch-mean exponent reaches this value.
    pub lambda_threshold: f64,
    pub washout: usize,
    /// Lower bound on `|η_k|` inside logarithms and divisions.
    pub eta_floor: f64,
}

impl Default for PtaHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            momentum: 0.9,
            max_epochs: 50,
            lambda_threshold: -0.1,
            washout: 100,
            eta_floor: DEFAULT_ETA_FLOOR,
        }
    }
}

impl PtaHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1], got {}",
                self.momentum
            )));
        }
        if self.lambda_threshold.is_nan() || self.lambda_threshold >= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda threshold must be negative, got {}",
                self.lambda_threshold
            )));
        }
        if self.eta_floor.is_nan() || self.eta_floor <= 0.0 {
            return Err(Error::InvalidConfig("eta floor must be positive".into()));
        }
        Ok(())
    }
}

/// Trainable gain and bias together with their momentum buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtaParameters {
    pub gain: DVector<f64>,
    pub bias: DVector<f64>,
    pub velocity_gain: DVector<f64>,
    pub velocity_bias: DVector<f64>,
}

impl PtaParameters {
    pub fn new(units: usize, init_gain: f64, init_bias: f64) -> Self {
        Self {
            gain: DVector::from_element(units, init_gain),
            bias: DVector::from_element(units, init_bias),
            velocity_gain: DVector::zeros(units),
            velocity_bias: DVector::zeros(units),
        }
    }

    pub fn state_map(&self) -> StateMap<'_> {
        StateMap::Gained {
            gain: &self.gain,
            bias: &self.bias,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epoch_mean_lambda: Vec<f64>,
    pub epochs_run: usize,
    /// Per-step exponents, only filled when requested.
    pub step_lambda: Option<Vec<f64>>,
}

/// `η_k = (1 - x_k²)·a_k`.
pub fn eta_values(x: &DVector<f64>, gain: &DVector<f64>) -> DVector<f64> {
    assert_eq!(x.len(), gain.len(), "state and gain lengths differ");
    x.zip_map(gain, |xk, ak| (1.0 - xk * xk) * ak)
}

/// Pushes `|η|` up to `floor`, keeping its sign (zero counts as positive).
#[inline]
pub fn clamp_eta(eta: f64, floor: f64) -> f64 {
    if eta.abs() >= floor {
        eta
    } else if eta < 0.0 {
        -floor
    } else {
        floor
    }
}

/// Closed-form local Lyapunov exponent of the ring reservoir.
pub fn local_lyapunov(eta: &DVector<f64>, floor: f64) -> f64 {
    let n = eta.len() as f64;
    eta.iter()
        .map(|&e| clamp_eta(e, floor).abs().ln())
        .sum::<f64>()
        / n
}

/// Materialized Jacobian of the gained ring map at state `x`.
pub fn jacobian_oracle(x: &DVector<f64>, gain: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    assert_eq!(gain.len(), n, "state and gain lengths differ");
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let col = if i == 0 { n - 1 } else { i - 1 };
        j[(i, col)] = (1.0 - x[i] * x[i]) * gain[i];
    }
    j
}

/// Gradients of `e(t) = N·λ(t)²` with respect to gain and bias.
pub fn pta_gradients(
    lambda: f64,
    eta: &DVector<f64>,
    x: &DVector<f64>,
    net: &DVector<f64>,
    gain: &DVector<f64>,
    floor: f64,
) -> (DVector<f64>, DVector<f64>) {
    let n = x.len();
    let mut grad_gain = DVector::zeros(n);
    let mut grad_bias = DVector::zeros(n);
    for i in 0..n {
        let (ga, gb) = unit_gradient(lambda, clamp_eta(eta[i], floor), x[i], net[i], gain[i]);
        grad_gain[i] = ga;
        grad_bias[i] = gb;
    }
    (grad_gain, grad_bias)
}

#[inline]
fn unit_gradient(lambda: f64, eta: f64, x: f64, net: f64, a: f64) -> (f64, f64) {
    let slope = 1.0 - x * x;
    let scale = lambda / eta;
    (
        2.0 * scale * slope * (1.0 - 2.0 * x * net * a),
        -4.0 * scale * x * slope * a,
    )
}

/// One momentum step: `v ← α v + (1-α) g`, then `p ← p - lr·v`.
pub fn pta_update(
    params: &mut PtaParameters,
    grad_gain: &DVector<f64>,
    grad_bias: &DVector<f64>,
    hyper: &PtaHyper,
) {
    let alpha = hyper.momentum;
    let lr = hyper.learning_rate;
    for i in 0..params.gain.len() {
        let vg = alpha * params.velocity_gain[i] + (1.0 - alpha) * grad_gain[i];
        let vb = alpha * params.velocity_bias[i] + (1.0 - alpha) * grad_bias[i];
        params.velocity_gain[i] = vg;
        params.velocity_bias[i] = vb;
        params.gain[i] -= lr * vg;
        params.bias[i] -= lr * vb;
    }
}

/// What the training loop reports after each epoch.
#[derive(Debug, Clone, Copy)]
pub struct EpochReport<'a> {
    /// 1-based epoch counter.
    pub epoch: usize,
    pub mean_lambda: f64,
    pub params: &'a PtaParameters,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    pub record_steps: bool,
}

fn check_ring(weights: &ReservoirWeights) -> Result<()> {
    match weights.recurrent {
        Recurrent::Ring { weight: 1.0, .. } => Ok(()),
        Recurrent::Ring { weight, .. } => Err(Error::InvalidConfig(format!(
            "PTA needs a unit ring weight, got {weight}"
        ))),
        Recurrent::Dense(_) => Err(Error::InvalidConfig("PTA needs a ring reservoir".into())),
    }
}

fn check_series(
    weights: &ReservoirWeights,
    series: &[&DMatrix<f64>],
    washout: usize,
) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("no training series given".into()));
    }
    for s in series {
        if s.nrows() != weights.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "series has {} input rows, reservoir expects {}",
                s.nrows(),
                weights.input_dim()
            )));
        }
        if s.ncols() <= washout {
            return Err(Error::InvalidArgument(format!(
                "series length {} must exceed washout {washout}",
                s.ncols()
            )));
        }
    }
    Ok(())
}

/// Runs PTA on one or more input series (each `U × T`).
pub fn train_pta(
    weights: &ReservoirWeights,
    series: &[&DMatrix<f64>],
    hyper: &PtaHyper,
    init_gain: f64,
    init_bias: f64,
) -> Result<(PtaParameters, TrainingTrace)> {
    train_pta_with(
        weights,
        series,
        hyper,
        PtaParameters::new(weights.units(), init_gain, init_bias),
        TrainOptions::default(),
        |_| Ok(()),
    )
}

/// Training loop with explicit initial parameters and a per-epoch observer.
pub fn train_pta_with<F>(
    weights: &ReservoirWeights,
    series: &[&DMatrix<f64>],
    hyper: &PtaHyper,
    mut params: PtaParameters,
    options: TrainOptions,
    mut observer: F,
) -> Result<(PtaParameters, TrainingTrace)>
where
    F: FnMut(EpochReport<'_>) -> Result<()>,
{
    hyper.validate()?;
    check_ring(weights)?;
    check_series(weights, series, hyper.washout)?;
    let n = weights.units();
    if params.gain.len() != n || params.bias.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "parameters sized {} for a reservoir of {n} units",
            params.gain.len()
        )));
    }

    let mut trace = TrainingTrace {
        step_lambda: options.record_steps.then(Vec::new),
        ..Default::default()
    };
    if hyper.max_epochs == 0 {
        return Ok((params, trace));
    }

    let floor = hyper.eta_floor;
    let alpha = hyper.momentum;
    let lr = hyper.learning_rate;
    let mut state = DVector::zeros(n);
    let mut net = DVector::zeros(n);
    let mut eta = vec![0.0; n];
    let mut u = vec![0.0; weights.input_dim()];

    loop {
        let mut lambda_sum = 0.0;
        let mut count = 0usize;
        for s in series {
            state.fill(0.0);
            for t in 0..s.ncols() {
                for (k, v) in u.iter_mut().enumerate() {
                    *v = s[(k, t)];
                }
                weights.net_input(&state, &u, &mut net);
                for i in 0..n {
                    state[i] = (params.gain[i] * net[i] + params.bias[i]).tanh();
                }
                if t < hyper.washout {
                    continue;
                }

                let mut log_sum = 0.0;
                for i in 0..n {
                    let e = clamp_eta((1.0 - state[i] * state[i]) * params.gain[i], floor);
                    eta[i] = e;
                    log_sum += e.abs().ln();
                }
                let lambda = log_sum / n as f64;
                if !lambda.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "local Lyapunov exponent became {lambda} at epoch {}, step {t}; \
                         training aborted",
                        trace.epochs_run + 1
                    )));
                }
                if let Some(steps) = trace.step_lambda.as_mut() {
                    steps.push(lambda);
                }
                lambda_sum += lambda;
                count += 1;

                for i in 0..n {
                    let (ga, gb) = unit_gradient(lambda, eta[i], state[i], net[i], params.gain[i]);
                    let vg = alpha * params.velocity_gain[i] + (1.0 - alpha) * ga;
                    let vb = alpha * params.velocity_bias[i] + (1.0 - alpha) * gb;
                    params.velocity_gain[i] = vg;
                    params.velocity_bias[i] = vb;
                    params.gain[i] -= lr * vg;
                    params.bias[i] -= lr * vb;
                }
            }
        }

        let mean = lambda_sum / count as f64;
        trace.epochs_run += 1;
        trace.epoch_mean_lambda.push(mean);
        log::debug!("pta epoch {}: mean lambda {mean:.5}", trace.epochs_run);
        observer(EpochReport {
            epoch: trace.epochs_run,
            mean_lambda: mean,
            params: &params,
        })?;
        if trace.epochs_run >= hyper.max_epochs || mean >= hyper.lambda_threshold {
            break;
        }
    }
    Ok((params, trace))
}

/// Mean local exponent along the trajectory driven by `input` with frozen
/// parameters, skipping the first `washout` steps.
pub fn mean_lyapunov(
    weights: &ReservoirWeights,
    params: &PtaParameters,
    input: &DMatrix<f64>,
    washout: usize,
    floor: f64,
) -> Result<f64> {
    check_series(weights, &[input], washout)?;
    let mut runner = Runner::new(weights, params.state_map());
    let mut u = vec![0.0; input.nrows()];
    let mut sum = 0.0;
    for t in 0..input.ncols() {
        for (k, v) in u.iter_mut().enumerate() {
            *v = input[(k, t)];
        }
        let x = runner.step(&u);
        if t >= washout {
            sum += x
                .iter()
                .zip(params.gain.iter())
                .map(|(&xk, &ak)| clamp_eta((1.0 - xk * xk) * ak, floor).abs().ln())
                .sum::<f64>()
                / x.len() as f64;
        }
    }
    Ok(sum / (input.ncols() - washout) as f64)
}
