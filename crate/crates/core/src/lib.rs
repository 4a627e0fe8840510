//! Quarter-car suspension simulation and design toolkit.
//!
//! Three plants share one parameter set: a passive spring–damper strut, a
//! twin-accumulator strut with a massless internal node, and the latter
//! with a PI actuator closing the loop on body acceleration. Plants are
//! driven by ISO-class random roads or step bumps, scored with RMS ride
//! criteria, and tuned with an evolution strategy or a gain grid search.

pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod road;
pub mod simulate;

pub use control::{pi_output, tune_gains, PIGains, TuneConfig, TuneResult};
pub use error::{Error, Result};
pub use metrics::{performance_index, rms, weighted_cost, CostWeights, PerformanceIndex};
pub use model::{
    active_twin_derivative, natural_frequencies, passive_derivative, twin_derivative, ModelKind,
    PassiveState, PlantInput, SuspensionParams, TwinState,
};
pub use optimizer::{
    make_suspension_objective, optimize, optimize_from, optimize_suspension, ESConfig, Interval,
    OptimizationResult, ParamBounds, SuspensionObjective,
};
pub use road::{
    estimate_psd, generate_random_road, generate_step_road, target_psd, IsoRoadClass,
    RandomRoadSpec, RoadTrace, StepRoadSpec,
};
pub use simulate::{simulate_active, simulate_passive, simulate_twin, SimConfig, SimOutput};
