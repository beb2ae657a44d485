//! Simulation-extrapolation (SIMEX) correction for additive measurement error.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! threaded execution live in the companion `simex-cli` crate.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod data;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod extrapolant;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod scenario;
pub mod simex;
pub mod special;
pub mod uncertainty;

pub use data::{Contrast, ErrorSet, ObservedData, ValidationPairs};
pub use error::{Error, Result};
pub use estimators::{Estimate, Estimator, EstimatorSpec};
pub use extrapolant::{ExtrapolantFit, ExtrapolantKind};
pub use rng::RandomStream;
pub use simex::{run_simex, LambdaGrid, Method, SimexConfig, SimexData, SimexResult};
pub use scenario::{run_scenario, MetricsReport, ScenarioMethod, ScenarioSpec};
pub use uncertainty::{BootstrapSpec, Interval, VarianceReport};
