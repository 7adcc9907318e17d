//! Reservoir computing with Echo State Networks, Simple Cycle Reservoirs and
//! Phase Transition Adaptation (PTA).
//!
//! PTA is an unsupervised, per-time-step gradient rule that adapts the gain
//! and bias of every neuron in a ring reservoir so that its local Lyapunov
//! exponent approaches zero from below, i.e. the edge of stability. Because
//! the Jacobian of a ring reservoir is itself a weighted cycle, the exponent
//! has a closed form and the whole update costs `O(N)` per step.
//!
//! Module map:
//!
//! * [`reservoir`]: weight construction, state updates, state collection.
//! * [`spectral`]: spectral radius by power iteration.
//! * [`pta`]: local Lyapunov exponents, gradients and the training loop.
//! * [`readout`]: ridge regression readout and evaluation metrics.
//! * [`tasks`]: MC, NLM, NARMA-20 and Mackey-Glass dataset generators.
//! * [`experiment`]: seeded repetitions, random search and aggregation.
//! * [`output`]: summary, trace and comparison-table files.

pub mod error;
pub mod experiment;
pub mod output;
pub mod pta;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod spectral;
pub mod tasks;

pub use error::{Error, Result};
pub use experiment::{
    random_search, run_experiment, run_single, ExperimentConfig, ExperimentResult, ModelKind,
    RunMetrics,
};
pub use pta::{PtaHyper, PtaParameters, TrainingTrace};
pub use readout::{MetricReport, ReadoutWeights};
pub use reservoir::{ReservoirConfig, ReservoirWeights, Topology};
pub use tasks::{Dataset, Split, TaskKind};
