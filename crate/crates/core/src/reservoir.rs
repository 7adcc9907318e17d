//! Reservoir construction and state updates.
//!
//! Two recurrent topologies are supported: a dense random matrix rescaled to
//! a target spectral radius (standard ESN), and a single ring where unit `i`
//! reads from unit `i - 1` and unit 0 reads from unit `N - 1`, all with the
//! same weight (Simple Cycle Reservoir). Ring reservoirs are never
//! materialized during stepping.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, symmetric_unit};
use crate::spectral::spectral_radius;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Dense,
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub n_units: usize,
    pub input_dim: usize,
    /// Target spectral radius for dense reservoirs; initial gain under PTA.
    pub spectral_radius: f64,
    pub input_scaling: f64,
    pub bias_scaling: f64,
    pub topology: Topology,
    /// Shared cycle weight for ring reservoirs.
    pub ring_weight: f64,
    pub seed: u64,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            n_units: 100,
            input_dim: 1,
            spectral_radius: 0.5,
            input_scaling: 0.1,
            bias_scaling: 0.0,
            topology: Topology::Ring,
            ring_weight: 1.0,
            seed: 0,
        }
    }
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::InvalidConfig("n_units must be positive".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        if self.topology == Topology::Ring && self.n_units < 2 {
            return Err(Error::InvalidConfig(format!(
                "ring reservoir needs at least 2 units, got {}",
                self.n_units
            )));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "spectral_radius must be positive, got {}",
                self.spectral_radius
            )));
        }
        if !(self.input_scaling >= 0.0 && self.bias_scaling >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scalings must be non-negative (input {}, bias {})",
                self.input_scaling, self.bias_scaling
            )));
        }
        if !self.ring_weight.is_finite() {
            return Err(Error::InvalidConfig("ring_weight must be finite".into()));
        }
        Ok(())
    }
}

/// Recurrent connectivity.
#[derive(Debug, Clone, PartialEq)]
pub enum Recurrent {
    Dense(DMatrix<f64>),
    Ring { units: usize, weight: f64 },
}

impl Recurrent {
    pub fn units(&self) -> usize {
        match self {
            Recurrent::Dense(m) => m.nrows(),
            Recurrent::Ring { units, .. } => *units,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Recurrent::Dense(m) => m.clone(),
            Recurrent::Ring { units, weight } => ring_matrix(*units, *weight),
        }
    }

    /// `out = Ŵ x`.
    pub fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Recurrent::Dense(m) => out.gemv(1.0, m, x, 0.0),
            Recurrent::Ring { units, weight } => {
                let n = *units;
                out[0] = weight * x[n - 1];
                for i in 1..n {
                    out[i] = weight * x[i - 1];
                }
            }
        }
    }
}

/// Dense `n × n` cycle matrix: nonzeros at `(i, i-1)` and `(0, n-1)`.
pub fn ring_matrix(n: usize, weight: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if n == 0 {
        return m;
    }
    m[(0, n - 1)] = weight;
    for i in 1..n {
        m[(i, i - 1)] = weight;
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights {
    pub recurrent: Recurrent,
    /// `N × U` input matrix.
    pub input: DMatrix<f64>,
    /// Fixed bias of the standard state map.
    pub bias: DVector<f64>,
}

impl ReservoirWeights {
    pub fn units(&self) -> usize {
        self.recurrent.units()
    }

    pub fn input_dim(&self) -> usize {
        self.input.ncols()
    }

    /// Builds weights from `config.seed` for the configured topology.
    pub fn from_config(config: &ReservoirConfig) -> Result<Self> {
        let mut rng = rng::seeded_stream(config.seed, rng::stream::WEIGHTS);
        match config.topology {
            Topology::Dense => init_dense(config, &mut rng),
            Topology::Ring => init_ring(config, &mut rng),
        }
    }

    /// `net = Ŵx + Wu`, written into `out`.
    pub fn net_input(&self, x: &DVector<f64>, u: &[f64], out: &mut DVector<f64>) {
        let n = self.units();
        assert_eq!(x.len(), n, "state length must equal the number of units");
        assert_eq!(u.len(), self.input_dim(), "input length mismatch");
        assert_eq!(out.len(), n, "output buffer length mismatch");
        self.recurrent.apply(x, out);
        for (k, &uk) in u.iter().enumerate() {
            if uk != 0.0 {
                out.axpy(uk, &self.input.column(k), 1.0);
            }
        }
    }
}

fn draw_input_and_bias<R: Rng + ?Sized>(
    config: &ReservoirConfig,
    rng: &mut R,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = config.n_units;
    let input = DMatrix::from_fn(n, config.input_dim, |_, _| {
        symmetric_unit(rng) * config.input_scaling
    });
    let bias = DVector::from_fn(n, |_, _| symmetric_unit(rng) * config.bias_scaling);
    (input, bias)
}

/// Dense random reservoir rescaled to `config.spectral_radius`.
pub fn init_dense<R: Rng + ?Sized>(
    config: &ReservoirConfig,
    rng: &mut R,
) -> Result<ReservoirWeights> {
    config.validate()?;
    if config.topology != Topology::Dense {
        return Err(Error::InvalidConfig(
            "init_dense requires dense topology".into(),
        ));
    }
    let n = config.n_units;
    let mut recurrent = DMatrix::from_fn(n, n, |_, _| symmetric_unit(rng));
    let current =
        spectral_radius(&recurrent).map_err(|e| e.context("rescaling dense reservoir"))?;
    if current == 0.0 {
        return Err(Error::InvalidConfig(
            "sampled recurrent matrix has zero spectral radius".into(),
        ));
    }
    recurrent *= config.spectral_radius / current;
    let (input, bias) = draw_input_and_bias(config, rng);
    Ok(ReservoirWeights {
        recurrent: Recurrent::Dense(recurrent),
        input,
        bias,
    })
}

/// Simple cycle reservoir with every cycle weight equal to `config.ring_weight`.
pub fn init_ring<R: Rng + ?Sized>(
    config: &ReservoirConfig,
    rng: &mut R,
) -> Result<ReservoirWeights> {
    config.validate()?;
    if config.topology != Topology::Ring {
        return Err(Error::InvalidConfig(
            "init_ring requires ring topology".into(),
        ));
    }
    let (input, bias) = draw_input_and_bias(config, rng);
    Ok(ReservoirWeights {
        recurrent: Recurrent::Ring {
            units: config.n_units,
            weight: config.ring_weight,
        },
        input,
        bias,
    })
}

/// `x' = tanh(Ŵx + Wu + b)`.
pub fn step_standard(w: &ReservoirWeights, x: &DVector<f64>, u: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(w.units());
    w.net_input(x, u, &mut out);
    out += &w.bias;
    out.apply(|v| *v = v.tanh());
    out
}

/// Gained map `x' = tanh(a ⊙ net + b)` with `net = Ŵx + Wu`; returns `(x', net)`.
pub fn step_gained(
    w: &ReservoirWeights,
    gain: &DVector<f64>,
    bias: &DVector<f64>,
    x: &DVector<f64>,
    u: &[f64],
) -> (DVector<f64>, DVector<f64>) {
    let n = w.units();
    assert_eq!(gain.len(), n, "gain length mismatch");
    assert_eq!(bias.len(), n, "bias length mismatch");
    let mut net = DVector::zeros(n);
    w.net_input(x, u, &mut net);
    let next = DVector::from_fn(n, |i, _| (gain[i] * net[i] + bias[i]).tanh());
    (next, net)
}

/// Which state map drives the reservoir.
#[derive(Debug, Clone, Copy)]
pub enum StateMap<'a> {
    /// `tanh(Ŵx + Wu + b)` with the fixed bias stored in the weights.
    Standard,
    /// `tanh(a ⊙ (Ŵx + Wu) + b)` with trainable gain and bias.
    Gained {
        gain: &'a DVector<f64>,
        bias: &'a DVector<f64>,
    },
}

/// Reusable single-trajectory driver that avoids per-step allocation.
pub struct Runner<'a> {
    weights: &'a ReservoirWeights,
    map: StateMap<'a>,
    pub state: DVector<f64>,
    pub net: DVector<f64>,
}

impl<'a> Runner<'a> {
    pub fn new(weights: &'a ReservoirWeights, map: StateMap<'a>) -> Self {
        let n = weights.units();
        if let StateMap::Gained { gain, bias } = map {
            assert_eq!(gain.len(), n, "gain length mismatch");
            assert_eq!(bias.len(), n, "bias length mismatch");
        }
        Self {
            weights,
            map,
            state: DVector::zeros(n),
            net: DVector::zeros(n),
        }
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    pub fn step(&mut self, u: &[f64]) -> &DVector<f64> {
        self.weights.net_input(&self.state, u, &mut self.net);
        match self.map {
            StateMap::Standard => {
                for ((x, &net), &b) in self
                    .state
                    .iter_mut()
                    .zip(self.net.iter())
                    .zip(self.weights.bias.iter())
                {
                    *x = (net + b).tanh();
                }
            }
            StateMap::Gained { gain, bias } => {
                for (((x, &net), &a), &b) in self
                    .state
                    .iter_mut()
                    .zip(self.net.iter())
                    .zip(gain.iter())
                    .zip(bias.iter())
                {
                    *x = (a * net + b).tanh();
                }
            }
        }
        &self.state
    }
}

/// Runs the reservoir from the zero state over the columns of `inputs`
/// (`U × T`) and returns the `N × (T - washout)` matrix of states for time
/// steps `washout..T`.
pub fn collect_states(
    w: &ReservoirWeights,
    map: StateMap<'_>,
    inputs: &DMatrix<f64>,
    washout: usize,
) -> Result<DMatrix<f64>> {
    let t_len = inputs.ncols();
    if t_len <= washout {
        return Err(Error::InvalidArgument(format!(
            "series length {t_len} must exceed washout {washout}"
        )));
    }
    if inputs.nrows() != w.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "inputs have {} rows, reservoir expects {}",
            inputs.nrows(),
            w.input_dim()
        )));
    }
    let mut runner = Runner::new(w, map);
    let mut out = DMatrix::zeros(w.units(), t_len - washout);
    let mut u = vec![0.0; inputs.nrows()];
    for t in 0..t_len {
        for (k, v) in u.iter_mut().enumerate() {
            *v = inputs[(k, t)];
        }
        let x = runner.step(&u);
        if t >= washout {
            out.column_mut(t - washout).copy_from(x);
        }
    }
    Ok(out)
}
