//! Mixed-criticality timing toolkit.
//!
//! `mics` derives low worst-case execution-time budgets for dual-criticality
//! task sets from measured execution-time distributions, evaluates the
//! resulting design-time objectives (LC utilization bound, mode-switching
//! probability, EDF-VD schedulability), and validates them in a deterministic
//! preemptive uniprocessor scheduling simulator.
//!
//! The crate is organized around the analysis pipeline:
//!
//! - [`traces`] — ingest execution-time samples and build empirical
//!   distributions (the step function `alpha(t)` everything else consumes).
//! - [`anti_mics`] — derive a single low WCET budget and its overrun
//!   probability by minimizing the expected execution time metric.
//! - [`multi_mics`] — extract additional, lower WCET levels from multi-peaked
//!   distributions via the scalable metric, with a utilization-gain stopping
//!   rule.
//! - [`mc_model`] — the dual-criticality task model, utilization bounds,
//!   mode-switch probability, and the EDF-VD schedulability test.
//! - [`simulator`] — deterministic discrete-event EDF-VD simulation with
//!   run-time level selection, mode switching, LC degradation, and QoS /
//!   wasted-utilization metrics.
//! - [`taskgen`] — random task-set generation and acceptance-ratio sweeps
//!   over utilization bounds.
//! - [`cli`] — the `mics` command-line surface with reproducible run
//!   manifests.
//!
//! Every operation is pure or deterministic given its seed: identical inputs
//! produce bit-identical outputs, which the test suite and the `rerun`
//! subcommand rely on.
//!
//! See the crate examples (`cargo run --example analyze_trace`, ...) for one
//! runnable walk-through per capability.

pub mod anti_mics;
pub mod cli;
pub mod mc_model;
pub mod multi_mics;
pub mod profiles;
pub mod rng;
pub mod simulator;
pub mod taskgen;
pub mod traces;

pub use anti_mics::{derive_wcet_lo, eet, AntiMicsResult};
pub use mc_model::{
    edfvd_test, lc_utilization_bound, mode_switch_probability, system_goal, utilization,
    Criticality, DesignReport, EdfvdPolicy, McTask, McTaskSet, Mode,
};
pub use multi_mics::{derive_levels, seet, WcetLevels};
pub use simulator::{run, SimConfig, SimMetrics};
pub use taskgen::{assign_wcet_lo, generate_task_set, sweep, GenSpec, Policy};
pub use traces::{
    build_distribution, load_trace, stability_check, EmpiricalDistribution, ExecutionTrace,
};
