//! Benchmark dataset generators: memory capacity (MC), nonlinear
//! memorization (NLM), NARMA-20 and Mackey-Glass next-step prediction.
//!
//! Every dataset is a single scalar input stream with index-aligned targets
//! and a 3:1 train/test split whose validation segment is the last quarter
//! of the training segment (15000/5000/5000 at the default length 20000).

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::uniform;

pub const DEFAULT_LENGTH: usize = 20_000;
/// Washout recommended for every task except MC (which uses `2N`).
pub const DEFAULT_WASHOUT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Mc,
    Nlm,
    Narma20,
    Mg,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Mc => "mc",
            TaskKind::Nlm => "nlm",
            TaskKind::Narma20 => "narma20",
            TaskKind::Mg => "mg",
        }
    }

    /// Whether the score is memory capacity (higher is better) rather than NMSE.
    pub fn is_memory_capacity(self) -> bool {
        self == TaskKind::Mc
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" => Ok(TaskKind::Mc),
            "nlm" => Ok(TaskKind::Nlm),
            "narma20" | "narma" => Ok(TaskKind::Narma20),
            "mg" | "mackey-glass" | "mackeyglass" => Ok(TaskKind::Mg),
            other => Err(Error::InvalidArgument(format!("unknown task '{other}'"))),
        }
    }
}

/// Segment boundaries, 0-based and half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_end: usize,
    pub test_end: usize,
    pub val_len: usize,
}

impl Split {
    /// 3/4 train, 1/4 test, validation = last quarter-length of train.
    pub fn proportional(len: usize) -> Self {
        let train_end = len * 3 / 4;
        Self {
            train_end,
            test_end: len,
            val_len: len - train_end,
        }
    }

    pub fn train(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn validation(&self) -> Range<usize> {
        self.train_end - self.val_len..self.train_end
    }

    pub fn test(&self) -> Range<usize> {
        self.train_end..self.test_end
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.test_end != len || self.train_end >= self.test_end || self.val_len > self.train_end
        {
            return Err(Error::InvalidArgument(format!(
                "split {self:?} inconsistent with series length {len}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskKind,
    /// `U × T`.
    pub inputs: DMatrix<f64>,
    /// `Y × T`, aligned column-for-column with `inputs`.
    pub targets: DMatrix<f64>,
    pub split: Split,
    pub washout: usize,
}

/// Column slices of a dataset.
#[derive(Debug, Clone)]
pub struct Segment {
    pub range: Range<usize>,
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segment(&self, range: Range<usize>) -> Segment {
        let cols = range.len();
        Segment {
            inputs: self.inputs.columns(range.start, cols).into_owned(),
            targets: self.targets.columns(range.start, cols).into_owned(),
            range,
        }
    }

    /// `(train, validation, test)` segments.
    pub fn split(&self) -> Result<(Segment, Segment, Segment)> {
        self.split.validate(self.len())?;
        Ok((
            self.segment(self.split.train()),
            self.segment(self.split.validation()),
            self.segment(self.split.test()),
        ))
    }

    /// Delimited export: one row per step, inputs then targets, header first.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = Vec::new();
        for k in 0..self.inputs.nrows() {
            header.push(format!("input_{k}"));
        }
        for k in 0..self.targets.nrows() {
            header.push(format!("target_{k}"));
        }
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        let mut row = Vec::with_capacity(header.len());
        for t in 0..self.len() {
            row.clear();
            row.extend(self.inputs.column(t).iter().map(|v| format!("{v:e}")));
            row.extend(self.targets.column(t).iter().map(|v| format!("{v:e}")));
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`Dataset::write_csv`]; columns are assigned
    /// to inputs or targets from their header prefix.
    pub fn read_csv(path: &Path, task: TaskKind, washout: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
        let n_in = header.iter().filter(|h| h.starts_with("input_")).count();
        let n_out = header.len() - n_in;
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Format {
                        path: path.into(),
                        message: format!("bad number '{s}': {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            columns.push(row);
        }
        let len = columns.len();
        let inputs = DMatrix::from_fn(n_in, len, |k, t| columns[t][k]);
        let targets = DMatrix::from_fn(n_out, len, |k, t| columns[t][n_in + k]);
        Ok(Self {
            task,
            inputs,
            targets,
            split: Split::proportional(len),
            washout,
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.into(),
        message: e.to_string(),
    }
}

fn require_length(task: TaskKind, len: usize, minimum: usize) -> Result<()> {
    if len <= minimum {
        return Err(Error::InvalidArgument(format!(
            "{task} series of length {len} is too short (needs more than {minimum})"
        )));
    }
    Ok(())
}

/// Memory capacity: input uniform on `[0, 0.5]`, `2N` delay channels where
/// row `k - 1` holds `u(t - k)` (zero inside the first `k` steps).
pub fn gen_mc<R: Rng + ?Sized>(len: usize, n_units: usize, rng: &mut R) -> Result<Dataset> {
    let delays = 2 * n_units;
    require_length(TaskKind::Mc, len, delays + delays)?;
    let u: Vec<f64> = (0..len).map(|_| uniform(rng, 0.0, 0.5)).collect();
    Ok(Dataset {
        task: TaskKind::Mc,
        inputs: DMatrix::from_row_slice(1, len, &u),
        targets: delay_lines(&u, delays),
        split: Split::proportional(len),
        washout: delays,
    })
}

/// `delays × len` matrix whose row `k - 1` is `u` shifted right by `k`.
pub fn delay_lines(u: &[f64], delays: usize) -> DMatrix<f64> {
    DMatrix::from_fn(delays, u.len(), |row, t| {
        let k = row + 1;
        if t >= k {
            u[t - k]
        } else {
            0.0
        }
    })
}

/// Nonlinear memorization: input uniform on `[0, 1]`,
/// target `sin(nu · u(t - delta))` (input taken as zero before the start).
pub fn gen_nlm<R: Rng + ?Sized>(len: usize, nu: f64, delta: usize, rng: &mut R) -> Result<Dataset> {
    require_length(TaskKind::Nlm, len, delta + DEFAULT_WASHOUT)?;
    let u: Vec<f64> = (0..len).map(|_| uniform(rng, 0.0, 1.0)).collect();
    let d = nlm_targets(&u, nu, delta);
    Ok(Dataset {
        task: TaskKind::Nlm,
        inputs: DMatrix::from_row_slice(1, len, &u),
        targets: DMatrix::from_row_slice(1, len, &d),
        split: Split::proportional(len),
        washout: DEFAULT_WASHOUT,
    })
}

pub fn nlm_targets(u: &[f64], nu: f64, delta: usize) -> Vec<f64> {
    (0..u.len())
        .map(|t| {
            let past = if t >= delta { u[t - delta] } else { 0.0 };
            (nu * past).sin()
        })
        .collect()
}

pub const NARMA_ORDER: usize = 20;

/// NARMA-20 with input uniform on `[0, 0.5]`; the target at step `t` is
/// `d(t + 1)`, computed from inputs up to `u(t)` with zero history.
pub fn gen_narma20<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Dataset> {
    require_length(TaskKind::Narma20, len, NARMA_ORDER + DEFAULT_WASHOUT)?;
    let u: Vec<f64> = (0..len).map(|_| uniform(rng, 0.0, 0.5)).collect();
    let d = narma20_targets(&u);
    Ok(Dataset {
        task: TaskKind::Narma20,
        inputs: DMatrix::from_row_slice(1, len, &u),
        targets: DMatrix::from_row_slice(1, len, &d),
        split: Split::proportional(len),
        washout: DEFAULT_WASHOUT,
    })
}

pub fn narma20_targets(u: &[f64]) -> Vec<f64> {
    // history[j] holds d(j); d(0) = 0 and outputs start at d(1).
    let mut history = vec![0.0; u.len() + 1];
    let mut window_sum = 0.0; // sum of d(t-19..=t)
    for t in 0..u.len() {
        let d_t = history[t];
        let u_lag = if t >= NARMA_ORDER - 1 {
            u[t - (NARMA_ORDER - 1)]
        } else {
            0.0
        };
        let next = (0.3 * d_t + 0.05 * d_t * window_sum + 1.5 * u_lag * u[t] + 0.01).tanh();
        history[t + 1] = next;
        window_sum += next;
        if t + 1 >= NARMA_ORDER {
            window_sum -= history[t + 1 - NARMA_ORDER];
        }
    }
    history.split_off(1)
}

/// Mackey-Glass integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlass {
    pub beta: f64,
    pub gamma: f64,
    pub delay: f64,
    pub exponent: f64,
    /// RK4 step; `delay / step` must be an integer.
    pub step: f64,
    /// Internal steps per emitted (unit-spaced) sample.
    pub subsample: usize,
    pub initial: f64,
    /// Emitted samples discarded as integrator transient.
    pub transient: usize,
}

impl Default for MackeyGlass {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            delay: 30.0,
            exponent: 10.0,
            step: 0.1,
            subsample: 10,
            initial: 1.2,
            transient: 1000,
        }
    }
}

impl MackeyGlass {
    fn rate(&self, u: f64, lagged: f64) -> f64 {
        self.beta * lagged / (1.0 + lagged.powf(self.exponent)) - self.gamma * u
    }

    /// Integrates and returns `samples` unit-spaced values, starting right
    /// after the discarded transient.
    pub fn trajectory(&self, samples: usize) -> Result<Vec<f64>> {
        let lag_steps = (self.delay / self.step).round();
        if lag_steps < 3.0
            || ((lag_steps * self.step) - self.delay).abs() > 1e-9 * self.delay.max(1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "delay {} must be a multiple (>= 3) of the step {}",
                self.delay, self.step
            )));
        }
        if self.subsample == 0 {
            return Err(Error::InvalidConfig("subsample must be positive".into()));
        }
        let lag = lag_steps as usize;
        let fine_steps = (self.transient + samples) * self.subsample;
        let mut fine = Vec::with_capacity(fine_steps + 1);
        fine.push(self.initial);
        let initial = self.initial;
        let at = |fine: &[f64], idx: isize| -> f64 {
            if idx < 0 {
                initial
            } else {
                fine[idx as usize]
            }
        };
        let h = self.step;
        for i in 0..fine_steps {
            let u = fine[i];
            let base = i as isize - lag as isize;
            let lag0 = at(&fine, base);
            let lag1 = at(&fine, base + 1);
            // Cubic midpoint keeps the delayed term fourth-order accurate. The
            // stencil never straddles t = 0, where the derivative jumps.
            let lag_half = if base < 0 {
                initial
            } else if base == 0 {
                (5.0 * lag0 + 15.0 * lag1 - 5.0 * at(&fine, 2) + at(&fine, 3)) / 16.0
            } else {
                (-at(&fine, base - 1) + 9.0 * lag0 + 9.0 * lag1 - at(&fine, base + 2)) / 16.0
            };
            let k1 = self.rate(u, lag0);
            let k2 = self.rate(u + 0.5 * h * k1, lag_half);
            let k3 = self.rate(u + 0.5 * h * k2, lag_half);
            let k4 = self.rate(u + h * k3, lag1);
            let next = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() {
                return Err(Error::NonFinite(format!(
                    "Mackey-Glass trajectory diverged at internal step {i}"
                )));
            }
            fine.push(next);
        }
        Ok(fine
            .iter()
            .step_by(self.subsample)
            .skip(self.transient)
            .take(samples)
            .copied()
            .collect())
    }
}

/// Mackey-Glass next-step prediction; the target at `t` is the input at `t + 1`.
pub fn gen_mackey_glass(len: usize, params: &MackeyGlass) -> Result<Dataset> {
    if len < 2 {
        return Err(Error::InvalidArgument(
            "Mackey-Glass needs length >= 2".into(),
        ));
    }
    let series = params.trajectory(len + 1)?;
    Ok(Dataset {
        task: TaskKind::Mg,
        inputs: DMatrix::from_row_slice(1, len, &series[..len]),
        targets: DMatrix::from_row_slice(1, len, &series[1..]),
        split: Split::proportional(len),
        washout: DEFAULT_WASHOUT.min(len / 4),
    })
}

/// Generates the default-parameter dataset for `task`.
pub fn generate<R: Rng + ?Sized>(
    task: TaskKind,
    len: usize,
    n_units: usize,
    rng: &mut R,
) -> Result<Dataset> {
    match task {
        TaskKind::Mc => gen_mc(len, n_units, rng),
        TaskKind::Nlm => gen_nlm(len, std::f64::consts::SQRT_2, 30, rng),
        TaskKind::Narma20 => gen_narma20(len, rng),
        TaskKind::Mg => gen_mackey_glass(len, &MackeyGlass::default()),
    }
}
