//! Mode-targeted QAOA for weighted MaxCut with adaptive shot allocation.
//!
//! The crate provides an exact statevector simulator, mode-based estimators,
//! an adaptive per-point sampler, a TPE optimizer, fixed-shot baselines, an
//! optional target amplification stage and resource accounting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod baselines;
pub mod bo;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod resources;
pub mod rng;
pub mod shots;
pub mod simulator;
pub mod stage2;

pub use baselines::{optimize_exp_bo, optimize_exp_gd, EvalMode, GdConfig};
pub use bo::{
    optimize_map_bo, Method, RunResult, SearchConfig, StagnationConfig, StopReason, TpeConfig,
    Trial,
};
pub use error::{QaoaError, Result};
pub use estimators::{Counts, EvalStats};
pub use graph::{random_regular, Bitstring, Edge, MaxCutInstance, WeightScheme};
pub use resources::{MetricsReport, ResourceLedger};
pub use shots::{evaluate_point, AdaptiveConfig, PointEvaluation};
pub use simulator::{NoiseSpec, OutcomeDistribution, QaoaParams, QaoaSimulator};
pub use stage2::{amplify, AmplifyConfig, AmplifyResult};
