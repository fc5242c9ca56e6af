//! Simulation and control library for energy-harvesting base-station (BS)
//! sites with co-located mobile edge computing (MEC) servers.
//!
//! The library models a network of small-cell BSs, each powered by a solar
//! panel plus battery with a grid fallback, and each hosting an edge server
//! whose virtual machines (VMs) process the delay-sensitive share of the
//! cell's traffic. Everything advances in fixed 30-minute slots.
//!
//! Features:
//! - Per-slot site energy accounting (radio, VM pool, data transfer) and
//!   battery dynamics with grid top-up below a buffer threshold
//! - Limited-lookahead controller (`enaam`) selecting radio sleep modes and
//!   VM soft-scaling actions over a short forecast horizon
//! - Randomized admission baseline (`deta-r`) and a no-management baseline
//! - Distance-based clustering of BS sites and a network-impact procedure
//!   that switches off lightly loaded BSs and hands their users over
//! - Traffic/harvest forecasting: seasonal persistence and a small trained
//!   recurrent cell
//! - Deterministic, seed-driven scenario runner with CSV/JSON reporting
//!
//! All energy figures are joules per slot; traffic is MB per slot.

pub mod cluster;
pub mod controller;
pub mod energy;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod orchestrator;
pub mod scenario;
pub mod seeds;
pub mod traces;

pub use cluster::{adjacency, kmeans_partition, similarity, Partition, SimilarityMatrix, Topology};
pub use controller::{
    cost, deta_r_step, enaam_plan, enaam_step, feasibility_set, no_management_energy,
    predict_next_state, vm_provision, ControlAction, CostWeights, RadioMode, SearchConfig,
    SearchStats, SiteParams, SiteState, VmAssignment,
};
pub use energy::{
    bs_energy, load_factor, mec_energy, required_rate, step_battery, total_energy, tx_energy,
    vm_op_energy, BatteryParams, BatteryStep, EnergyBreakdown, EnergyParams, VmParams,
};
pub use error::{Error, Result};
pub use forecast::{fit, rmse, ForecastKind, Forecaster, ForecasterSpec, ForecastHorizon};
pub use metrics::{MetricsReport, SlotRecord, Summary};
pub use orchestrator::{
    energy_savings, feasible_offload_targets, network_impact, run_simulation, run_single_site,
    select_switch_offs, ClusterSlotPlan,
};
pub use scenario::{RunPolicy, ScenarioConfig};
pub use traces::{
    load_trace_csv, split_workload, synthesize_energy_profile, synthesize_load_profile,
    EnergyTrace, TraceKind, TrafficTrace, WorkloadSplit,
};
