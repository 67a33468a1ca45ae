//! Monte Carlo sweeps, transition-scale extraction, collapse diagnostics and
//! level-flow tracing.

mod analysis;
mod assignment;
mod perturb;
mod sweep;
mod trace;

pub use analysis::{
    collapse_diagnostic, collapse_diagnostic_columns, collapse_spread, extract_mu_half,
    mu_half_of_column, MuHalf, Scaling, COLLAPSE_SAMPLES,
};
pub use assignment::min_cost_assignment;
pub use perturb::{scale_statistics, PerturbConfig, ScaleStatistics};
pub use sweep::{geometric, run_sweep, SweepCell, SweepConfig, SweepResult};
pub use trace::{
    trace_levels, EventKind, LevelEvent, LevelFlowTrace, PathPoint, TraceConfig, Waypoint,
    AMBIGUITY_COST, MAX_REFINEMENTS,
};
