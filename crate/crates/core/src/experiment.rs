//! Seeded experiment pipeline: dataset generation, reservoir construction,
//! optional PTA training, readout fitting and scoring, random search for the
//! ESN/SCR baselines, and aggregation over repetitions.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pta::{self, PtaHyper, PtaParameters, TrainOptions};
use crate::readout::{fit_ridge, mc_score, nmse, predict};
use crate::reservoir::{collect_states, ReservoirConfig, ReservoirWeights, StateMap, Topology};
use crate::rng::{self, open_unit_scaled, stream};
use crate::tasks::{self, Dataset, TaskKind};

/// Environment variable bounding the number of worker threads.
pub const THREADS_ENV: &str = "PTA_THREADS";

pub const MIN_SEARCH_BUDGET: usize = 10;
pub const MAX_SEARCH_BUDGET: usize = 200;

pub const NMSE_DEFINITION: &str = "mean squared error / population variance of the target";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Esn,
    Scr,
    Pta,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Esn => "esn",
            ModelKind::Scr => "scr",
            ModelKind::Pta => "pta",
        }
    }

    pub fn is_baseline(self) -> bool {
        self != ModelKind::Pta
    }

    fn topology(self) -> Topology {
        match self {
            ModelKind::Esn => Topology::Dense,
            ModelKind::Scr | ModelKind::Pta => Topology::Ring,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "esn" => Ok(ModelKind::Esn),
            "scr" => Ok(ModelKind::Scr),
            "pta" => Ok(ModelKind::Pta),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub model: ModelKind,
    /// `spectral_radius` is the initial PTA gain; baselines search it instead.
    pub reservoir: ReservoirConfig,
    pub pta: PtaHyper,
    pub kappa: f64,
    pub repetitions: usize,
    /// Random-search budget; `None` calibrates it against one PTA repetition.
    pub search_budget: Option<usize>,
    pub base_seed: u64,
    pub series_length: usize,
    /// Record the per-epoch test MC trace for PTA on MC.
    pub record_trace: bool,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::Mc,
            model: ModelKind::Pta,
            reservoir: ReservoirConfig::default(),
            pta: PtaHyper::default(),
            kappa: 1e-8,
            repetitions: 20,
            search_budget: None,
            base_seed: 0,
            series_length: tasks::DEFAULT_LENGTH,
            record_trace: true,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(task: TaskKind, model: ModelKind) -> Self {
        Self {
            task,
            model,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut r = self.reservoir.clone();
        r.topology = self.model.topology();
        r.validate()?;
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.search_budget == Some(0) {
            return Err(Error::InvalidConfig(
                "search budget must be at least 1".into(),
            ));
        }
        if self.kappa.is_nan() || self.kappa < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        if self.model == ModelKind::Pta {
            self.pta.validate()?;
        }
        Ok(())
    }

    /// Upper bound of the bias-scaling search: `ω` on MC, 1 otherwise.
    pub fn bias_search_upper(&self) -> f64 {
        if self.task.is_memory_capacity() {
            self.reservoir.input_scaling
        } else {
            1.0
        }
    }

    pub fn higher_is_better(&self) -> bool {
        self.task.is_memory_capacity()
    }
}

pub fn generate_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    let mut rng = rng::seeded_stream(seed, stream::DATASET);
    tasks::generate(cfg.task, cfg.series_length, cfg.reservoir.n_units, &mut rng)
}

/// Reservoir states for the whole series; column `j` is time `washout + j`.
pub struct StateBank {
    pub states: DMatrix<f64>,
    pub washout: usize,
}

impl StateBank {
    pub fn collect(weights: &ReservoirWeights, map: StateMap<'_>, ds: &Dataset) -> Result<Self> {
        Ok(Self {
            states: collect_states(weights, map, &ds.inputs, ds.washout)?,
            washout: ds.washout,
        })
    }

    fn columns(&self, range: &Range<usize>) -> Result<Range<usize>> {
        let start = range.start.max(self.washout);
        if start >= range.end {
            return Err(Error::InvalidArgument(format!(
                "segment {range:?} lies inside the washout of {}",
                self.washout
            )));
        }
        Ok(start - self.washout..range.end - self.washout)
    }

    /// Fits the readout on `fit` and scores it on `eval` (MC or NMSE).
    pub fn fit_and_score(
        &self,
        ds: &Dataset,
        fit: Range<usize>,
        eval: Range<usize>,
        kappa: f64,
    ) -> Result<f64> {
        let fit_cols = self.columns(&fit)?;
        let eval_cols = self.columns(&eval)?;
        let fit_t = fit_cols.start + self.washout;
        let eval_t = eval_cols.start + self.washout;
        let x_fit = self
            .states
            .columns(fit_cols.start, fit_cols.len())
            .into_owned();
        let y_fit = ds.targets.columns(fit_t, fit_cols.len()).into_owned();
        let readout = fit_ridge(&x_fit, &y_fit, kappa)?;
        let x_eval = self
            .states
            .columns(eval_cols.start, eval_cols.len())
            .into_owned();
        let y_eval = ds.targets.columns(eval_t, eval_cols.len()).into_owned();
        let pred = predict(&readout, &x_eval)?;
        if ds.task.is_memory_capacity() {
            mc_score(&pred, &y_eval)
        } else {
            let p: Vec<f64> = pred.row(0).iter().copied().collect();
            let t: Vec<f64> = y_eval.row(0).iter().copied().collect();
            nmse(&p, &t)
        }
    }

    pub fn test_score(&self, ds: &Dataset, kappa: f64) -> Result<f64> {
        self.fit_and_score(ds, ds.split.train(), ds.split.test(), kappa)
    }

    pub fn validation_score(&self, ds: &Dataset, kappa: f64) -> Result<f64> {
        let val = ds.split.validation();
        self.fit_and_score(ds, 0..val.start, val, kappa)
    }
}

/// One random-search sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spectral_radius: f64,
    pub bias_scaling: f64,
    pub weight_seed: u64,
}

impl Candidate {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, bias_upper: f64) -> Self {
        Self {
            spectral_radius: open_unit_scaled(rng, 1.0),
            bias_scaling: open_unit_scaled(rng, bias_upper),
            weight_seed: rng.random(),
        }
    }

    pub fn weights(&self, cfg: &ExperimentConfig) -> Result<ReservoirWeights> {
        let mut r = cfg.reservoir.clone();
        r.topology = cfg.model.topology();
        r.seed = self.weight_seed;
        match r.topology {
            Topology::Dense => r.spectral_radius = self.spectral_radius,
            Topology::Ring => r.ring_weight = self.spectral_radius,
        }
        r.bias_scaling = self.bias_scaling;
        ReservoirWeights::from_config(&r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Candidate,
    pub best_index: usize,
    pub best_validation: f64,
    pub evaluated: usize,
}

/// Index of the best score; NaN never wins and ties keep the first.
pub fn select_best(scores: &[f64], higher_is_better: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, b)) => {
                if higher_is_better {
                    s > b
                } else {
                    s < b
                }
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Random search with an injectable validation objective.
pub fn search_with<R, F>(
    budget: usize,
    bias_upper: f64,
    higher_is_better: bool,
    rng: &mut R,
    mut objective: F,
) -> Result<SearchOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&Candidate) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::InvalidArgument(
            "search budget must be at least 1".into(),
        ));
    }
    let candidates: Vec<Candidate> = (0..budget)
        .map(|_| Candidate::sample(rng, bias_upper))
        .collect();
    let mut scores = Vec::with_capacity(budget);
    let mut last_error = None;
    for c in &candidates {
        match objective(c) {
            Ok(s) => scores.push(s),
            Err(e) => {
                log::warn!("search candidate {c:?} failed: {e}");
                last_error = Some(e);
                scores.push(f64::NAN);
            }
        }
    }
    match select_best(&scores, higher_is_better) {
        Some(i) => Ok(SearchOutcome {
            best: candidates[i],
            best_index: i,
            best_validation: scores[i],
            evaluated: budget,
        }),
        None => Err(last_error
            .unwrap_or_else(|| Error::NonFinite("every search candidate scored NaN".into()))
            .context("random search found no usable configuration")),
    }
}

/// Validation-split random search over `(ρ, ω_b)` for the ESN/SCR baselines.
pub fn random_search<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    budget: usize,
    rng: &mut R,
) -> Result<SearchOutcome> {
    if !cfg.model.is_baseline() {
        return Err(Error::InvalidArgument(
            "random search applies to esn and scr only".into(),
        ));
    }
    search_with(
        budget,
        cfg.bias_search_upper(),
        cfg.higher_is_better(),
        rng,
        |c| {
            let w = c.weights(cfg)?;
            StateBank::collect(&w, StateMap::Standard, ds)?.validation_score(ds, cfg.kappa)
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_lambda: f64,
    pub test_mc: Option<f64>,
}

/// Outcome of one seeded repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    /// MC on memory-capacity tasks, NMSE otherwise.
    pub score: f64,
    pub selected: Option<SearchOutcome>,
    pub epochs_run: Option<usize>,
    /// Mean local exponent over the test segment with frozen parameters.
    pub test_lambda: Option<f64>,
    pub final_mean_gain: Option<f64>,
    pub final_mean_bias: Option<f64>,
    pub trace: Vec<EpochRecord>,
    pub seconds: f64,
}

/// Trains PTA on the training inputs and returns parameters with the trace.
pub fn train_on_dataset(
    cfg: &ExperimentConfig,
    weights: &ReservoirWeights,
    ds: &Dataset,
) -> Result<(PtaParameters, Vec<EpochRecord>, usize)> {
    let train_inputs = ds.inputs.columns(0, ds.split.train_end).into_owned();
    let want_trace = cfg.record_trace && ds.task.is_memory_capacity();
    let init = PtaParameters::new(weights.units(), cfg.reservoir.spectral_radius, 1.0);

    let mut trace = Vec::new();
    if want_trace {
        let lambda = pta::mean_lyapunov(
            weights,
            &init,
            &train_inputs,
            cfg.pta.washout,
            cfg.pta.eta_floor,
        )?;
        let mc = StateBank::collect(weights, init.state_map(), ds)?.test_score(ds, cfg.kappa)?;
        trace.push(EpochRecord {
            epoch: 0,
            mean_lambda: lambda,
            test_mc: Some(mc),
        });
    }
    let (params, t) = pta::train_pta_with(
        weights,
        &[&train_inputs],
        &cfg.pta,
        init,
        TrainOptions::default(),
        |report| {
            let test_mc = if want_trace {
                Some(
                    StateBank::collect(weights, report.params.state_map(), ds)?
                        .test_score(ds, cfg.kappa)?,
                )
            } else {
                None
            };
            trace.push(EpochRecord {
                epoch: report.epoch,
                mean_lambda: report.mean_lambda,
                test_mc,
            });
            Ok(())
        },
    )?;
    Ok((params, trace, t.epochs_run))
}

fn pta_weights(cfg: &ExperimentConfig, seed: u64) -> Result<ReservoirWeights> {
    let mut r = cfg.reservoir.clone();
    r.topology = Topology::Ring;
    r.ring_weight = 1.0;
    r.bias_scaling = 0.0;
    r.seed = seed;
    ReservoirWeights::from_config(&r)
}

/// Frozen-parameter mean exponent over the test segment of `ds`.
pub fn test_segment_lambda(
    cfg: &ExperimentConfig,
    weights: &ReservoirWeights,
    params: &PtaParameters,
    ds: &Dataset,
) -> Result<f64> {
    let test = ds.split.test();
    let lead = cfg.pta.washout.min(test.start);
    let cols = ds
        .inputs
        .columns(test.start - lead, test.len() + lead)
        .into_owned();
    pta::mean_lyapunov(weights, params, &cols, lead, cfg.pta.eta_floor)
}

/// Runs one repetition with the given seed.
pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<RunMetrics> {
    let budget = cfg.search_budget.unwrap_or(MIN_SEARCH_BUDGET);
    run_single_with_budget(cfg, seed, budget)
}

fn run_single_with_budget(cfg: &ExperimentConfig, seed: u64, budget: usize) -> Result<RunMetrics> {
    cfg.validate()?;
    let started = Instant::now();
    let ds = generate_dataset(cfg, seed)?;
    let mut metrics = RunMetrics {
        seed,
        score: f64::NAN,
        selected: None,
        epochs_run: None,
        test_lambda: None,
        final_mean_gain: None,
        final_mean_bias: None,
        trace: Vec::new(),
        seconds: 0.0,
    };
    match cfg.model {
        ModelKind::Pta => {
            let weights = pta_weights(cfg, seed)?;
            let (params, trace, epochs) = train_on_dataset(cfg, &weights, &ds)?;
            metrics.score = StateBank::collect(&weights, params.state_map(), &ds)?
                .test_score(&ds, cfg.kappa)?;
            metrics.test_lambda = Some(test_segment_lambda(cfg, &weights, &params, &ds)?);
            metrics.epochs_run = Some(epochs);
            metrics.final_mean_gain = Some(params.gain.mean());
            metrics.final_mean_bias = Some(params.bias.mean());
            metrics.trace = trace;
        }
        ModelKind::Esn | ModelKind::Scr => {
            let mut search_rng = rng::seeded_stream(seed, stream::SEARCH);
            let outcome = random_search(cfg, &ds, budget, &mut search_rng)?;
            let weights = outcome.best.weights(cfg)?;
            metrics.score = StateBank::collect(&weights, StateMap::Standard, &ds)?
                .test_score(&ds, cfg.kappa)?;
            metrics.selected = Some(outcome);
        }
    }
    metrics.seconds = started.elapsed().as_secs_f64();
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCalibration {
    pub pta_seconds: f64,
    pub evaluation_seconds: f64,
    pub budget: usize,
}

/// Budget that makes one baseline repetition cost about one PTA repetition,
/// clamped to `[MIN_SEARCH_BUDGET, MAX_SEARCH_BUDGET]`.
pub fn calibrate_budget(cfg: &ExperimentConfig) -> Result<BudgetCalibration> {
    let mut pta_cfg = cfg.clone();
    pta_cfg.model = ModelKind::Pta;
    let started = Instant::now();
    run_single_with_budget(&pta_cfg, cfg.base_seed, 1)?;
    let pta_seconds = started.elapsed().as_secs_f64();

    let ds = generate_dataset(cfg, cfg.base_seed)?;
    let mut rng = rng::seeded_stream(cfg.base_seed, stream::SEARCH);
    let candidate = Candidate::sample(&mut rng, cfg.bias_search_upper());
    let started = Instant::now();
    let w = candidate.weights(cfg)?;
    // A failed probe (e.g. a degenerate draw) still measures the cost.
    let _ = StateBank::collect(&w, StateMap::Standard, &ds)
        .and_then(|b| b.validation_score(&ds, cfg.kappa));
    let evaluation_seconds = started.elapsed().as_secs_f64().max(1e-9);

    let raw = (pta_seconds / evaluation_seconds).floor() as usize;
    Ok(BudgetCalibration {
        pta_seconds,
        evaluation_seconds,
        budget: raw.clamp(MIN_SEARCH_BUDGET, MAX_SEARCH_BUDGET),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFailure {
    pub repetition: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub task: TaskKind,
    pub model: ModelKind,
    pub config: ExperimentConfig,
    /// `"mc"` or `"nmse"`.
    pub metric: String,
    pub nmse_definition: String,
    pub runs: Vec<RunMetrics>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub search_budget: Option<usize>,
    pub calibration: Option<BudgetCalibration>,
    pub failures: Vec<RepetitionFailure>,
    pub complete: bool,
    pub wall_clock_seconds: f64,
}

impl ExperimentResult {
    pub fn scores(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.score).collect()
    }

    pub fn has_trace(&self) -> bool {
        self.runs.iter().any(|r| !r.trace.is_empty())
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs all repetitions (seed = base seed + index) and aggregates them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let started = Instant::now();
    let (budget, calibration) = if cfg.model.is_baseline() {
        match cfg.search_budget {
            Some(b) => (Some(b), None),
            None => {
                let c =
                    calibrate_budget(cfg).map_err(|e| e.context("calibrating search budget"))?;
                log::info!(
                    "{} {}: search budget {} (pta {:.3}s / evaluation {:.3}s)",
                    cfg.task,
                    cfg.model,
                    c.budget,
                    c.pta_seconds,
                    c.evaluation_seconds
                );
                (Some(c.budget), Some(c))
            }
        }
    } else {
        (None, None)
    };

    let job = |rep: usize| {
        let seed = cfg.base_seed.wrapping_add(rep as u64);
        let out = run_single_with_budget(cfg, seed, budget.unwrap_or(1));
        if let Ok(m) = &out {
            log::info!(
                "{} {} repetition {rep}: score {:.6e}",
                cfg.task,
                cfg.model,
                m.score
            );
        }
        (rep, seed, out)
    };
    let outcomes: Vec<(usize, u64, Result<RunMetrics>)> = match threads_from_env() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| (0..cfg.repetitions).into_par_iter().map(job).collect())
        }
        None => (0..cfg.repetitions).into_par_iter().map(job).collect(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (rep, seed, out) in outcomes {
        match out {
            Ok(m) => runs.push(m),
            Err(e) => {
                log::error!("{} {} repetition {rep} failed: {e}", cfg.task, cfg.model);
                failures.push(RepetitionFailure {
                    repetition: rep,
                    seed,
                    message: e
                        .context(format!("repetition {rep} (seed {seed})"))
                        .to_string(),
                });
            }
        }
    }
    let scores: Vec<f64> = runs.iter().map(|r| r.score).collect();
    let (mean, std) = mean_std(&scores);
    Ok(ExperimentResult {
        task: cfg.task,
        model: cfg.model,
        config: cfg.clone(),
        metric: if cfg.task.is_memory_capacity() {
            "mc"
        } else {
            "nmse"
        }
        .into(),
        nmse_definition: NMSE_DEFINITION.into(),
        complete: failures.is_empty(),
        runs,
        mean,
        std,
        search_budget: budget,
        calibration,
        failures,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
