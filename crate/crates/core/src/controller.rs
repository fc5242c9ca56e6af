//! Single-site decision engine: per-slot cost, feasible action set, one-step
//! state prediction, the limited-lookahead (`enaam`) search, and the
//! randomized (`deta-r`) and no-management baselines.
//!
//! The controller picks, for each slot, a radio mode (active or
//! power-saving) together with the delay-sensitive load to admit and the VM
//! pool that serves it. The lookahead search expands quantized actions over
//! a short forecast horizon, merges predicted states on a coarse grid, and
//! applies the first action of the cheapest path.

use std::collections::BTreeMap;

pub use crate::energy::RadioMode;
use crate::energy::{
    load_factor, required_rate, step_battery, total_energy, BatteryParams, EnergyBreakdown,
    EnergyParams, VmParams,
};
use crate::error::{Error, Result};
use crate::forecast::Forecaster;
use crate::traces::split_workload;
use rand::Rng;

/// Per-site dynamic state carried between slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteState {
    /// VMs left running by the previous slot's action.
    pub m_active: usize,
    /// Battery charge in joules at the slot boundary.
    pub beta: f64,
    /// Radio mode applied in the previous slot.
    pub zeta_prev: RadioMode,
}

/// One VM's share of the admitted load.
#[derive(Debug, Clone, PartialEq)]
pub struct VmAssignment {
    /// Load processed by this VM (MB).
    pub gamma: f64,
    /// Processing rate drawn from the discrete rate set (MB/s).
    pub f: f64,
    /// Load-dependent energy factor `(f / f_max)^2`.
    pub alpha: f64,
}

/// One slot's control decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAction {
    pub zeta: RadioMode,
    /// Delay-sensitive load admitted and served (MB).
    pub b_served: f64,
    /// VMs kept on this slot.
    pub m_count: usize,
    pub per_vm: Vec<VmAssignment>,
}

impl ControlAction {
    /// The power-saving action: radio asleep, no VMs, nothing served.
    pub fn sleep() -> Self {
        Self { zeta: RadioMode::Sleep, b_served: 0.0, m_count: 0, per_vm: Vec::new() }
    }

    /// Numeric radio-mode factor for reporting (`epsilon` or 1).
    pub fn zeta_factor(&self, epsilon: f64) -> f64 {
        self.zeta.factor(epsilon)
    }
}

/// Weighting between energy spend and unserved-load penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// `eta` in [0, 1]: 0 = energy only, 1 = served-load tracking only.
    pub eta: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { eta: 0.5 }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        Ok(())
    }
}

/// Lookahead search knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Lookahead depth in slots.
    pub horizon: usize,
    /// Quantization of the admitted-load interval.
    pub n_b_points: usize,
    /// Battery bins used when merging predicted states.
    pub n_beta_levels: usize,
    /// Loads below this (MB) put the radio to sleep.
    pub l_low: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { horizon: 3, n_b_points: 5, n_beta_levels: 64, l_low: 4.0 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("search.horizon must be at least 1".into()));
        }
        if self.n_b_points < 2 {
            return Err(Error::Config("search.n_b_points must be at least 2".into()));
        }
        if self.n_beta_levels < 2 {
            return Err(Error::Config("search.n_beta_levels must be at least 2".into()));
        }
        if !(self.l_low.is_finite() && self.l_low >= 0.0) {
            return Err(Error::Config(format!("search.l_low must be >= 0, got {}", self.l_low)));
        }
        Ok(())
    }
}

/// Static per-site physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteParams {
    pub energy: EnergyParams,
    pub battery: BatteryParams,
    /// Normalization reference: the largest per-slot load (MB).
    pub l_max: f64,
}

impl Default for SiteParams {
    fn default() -> Self {
        Self { energy: EnergyParams::default(), battery: BatteryParams::default(), l_max: 30.0 }
    }
}

impl SiteParams {
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.battery.validate()?;
        if !(self.l_max.is_finite() && self.l_max > 0.0) {
            return Err(Error::Config(format!("l_max must be positive, got {}", self.l_max)));
        }
        Ok(())
    }
}

/// Instrumentation from one lookahead call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Successor states generated (one per state-action expansion).
    pub nodes_expanded: usize,
    /// Largest feasible-action set seen at any node.
    pub max_actions: usize,
    /// Merges that combined states with different battery levels; stays 0
    /// when the battery grid is fine enough to separate every explored
    /// level.
    pub merged_collisions: usize,
}

/// Sizes a VM pool for a delay-sensitive workload (MB) and spreads the load
/// over it.
///
/// The pool is `ceil(gamma_hat / gamma_max)` VMs, floored at `m_min` and
/// capped at `m_cap`; each VM takes `gamma_max` until the remainder runs
/// out. When the cap truncates the pool, the served load is truncated with
/// it. Each VM gets the slowest discrete rate that still meets the
/// processing deadline.
pub fn vm_provision(gamma_hat: f64, vm: &VmParams) -> Result<(usize, Vec<VmAssignment>)> {
    if !gamma_hat.is_finite() || gamma_hat < 0.0 {
        return Err(Error::Domain(format!("workload must be >= 0, got {gamma_hat}")));
    }
    let m = ((gamma_hat / vm.gamma_max).ceil() as usize).clamp(vm.m_min, vm.m_cap);
    let served = gamma_hat.min(vm.m_cap as f64 * vm.gamma_max);
    let mut remaining = served;
    let mut per_vm = Vec::with_capacity(m);
    for _ in 0..m {
        let gamma = remaining.min(vm.gamma_max);
        remaining -= gamma;
        let f = required_rate(gamma, vm)?;
        let alpha = load_factor(f, vm.f_max)?;
        per_vm.push(VmAssignment { gamma, f, alpha });
    }
    Ok((m, per_vm))
}

/// Weighted slot cost: `(1 - eta) * theta_tot + eta * (gamma - b_served)^2`.
///
/// `gamma` is the delay-sensitive demand and `b_served` the part of it the
/// action admits; serving more than the demand is a domain error.
pub fn cost(theta_tot: f64, gamma: f64, b_served: f64, w: &CostWeights) -> Result<f64> {
    w.validate()?;
    if !(gamma.is_finite() && gamma >= 0.0) || !(b_served.is_finite() && b_served >= 0.0) {
        return Err(Error::Domain("cost terms must be >= 0".into()));
    }
    if b_served > gamma + 1e-9 * gamma.max(1.0) {
        return Err(Error::Domain(format!(
            "served load {b_served} exceeds the demand {gamma}"
        )));
    }
    let gap = gamma - b_served;
    Ok((1.0 - w.eta) * theta_tot + w.eta * gap * gap)
}

/// Smallest admitted load whose VM count rounds (half-up) to `m_min`.
fn gamma_lower(vm: &VmParams) -> f64 {
    (vm.m_min as f64 - 0.5) * vm.gamma_max
}

fn active_action(b: f64, vm: &VmParams) -> Result<ControlAction> {
    let (m, per_vm) = vm_provision(b, vm)?;
    let b_served: f64 = per_vm.iter().map(|a| a.gamma).sum();
    Ok(ControlAction { zeta: RadioMode::Active, b_served, m_count: m, per_vm })
}

/// Enumerates the quantized actions available for one slot.
///
/// Low predicted battery or a load below `l_low` forces the single
/// power-saving action. Otherwise the admitted load ranges over
/// `n_b_points` equally spaced values between the smallest load worth one
/// VM and the delay-sensitive demand; candidates whose deadline cannot be
/// met by any discrete rate are dropped. The set is never empty.
pub fn feasibility_set(
    l_hat: f64,
    beta_pred: f64,
    cfg: &SearchConfig,
    vm: &VmParams,
    bp: &BatteryParams,
) -> Result<Vec<ControlAction>> {
    if !l_hat.is_finite() || l_hat < 0.0 {
        return Err(Error::Domain(format!("forecast load must be >= 0, got {l_hat}")));
    }
    if beta_pred < bp.beta_low || l_hat < cfg.l_low {
        return Ok(vec![ControlAction::sleep()]);
    }
    let gamma_hat = split_workload(l_hat)?.gamma;
    let lo = gamma_lower(vm);
    let mut actions = Vec::with_capacity(cfg.n_b_points);
    if gamma_hat < lo {
        match active_action(gamma_hat, vm) {
            Ok(a) => actions.push(a),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    } else {
        let span = gamma_hat - lo;
        let steps = (cfg.n_b_points - 1) as f64;
        let mut last_b = f64::NAN;
        for i in 0..cfg.n_b_points {
            let b = lo + span * i as f64 / steps;
            if b == last_b {
                continue;
            }
            last_b = b;
            match active_action(b, vm) {
                Ok(a) => actions.push(a),
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if actions.is_empty() {
        actions.push(ControlAction::sleep());
    }
    Ok(actions)
}

/// Applies an action to a state under forecast load and harvest, returning
/// the successor state and the slot's energy breakdown.
///
/// VM switch events are the absolute change in pool size; the battery step
/// applies the grid top-up rule before charging the slot's consumption.
pub fn predict_next_state(
    state: &SiteState,
    action: &ControlAction,
    h_hat: f64,
    params: &SiteParams,
) -> Result<(SiteState, EnergyBreakdown)> {
    let fraction = action.b_served / params.l_max;
    let events = state.m_active.abs_diff(action.m_count);
    let alphas: Vec<f64> = action.per_vm.iter().map(|a| a.alpha).collect();
    let breakdown = total_energy(
        action.zeta,
        fraction,
        &alphas,
        events,
        action.b_served,
        &params.energy,
    )?;
    let step = step_battery(state.beta, h_hat, breakdown.theta_tot, &params.battery)?;
    let next = SiteState {
        m_active: action.m_count,
        beta: step.beta_next,
        zeta_prev: action.zeta,
    };
    Ok((next, breakdown))
}

/// A node's identity on the merge grid and the comparator that keeps the
/// best representative per cell.
type MergeKey = (usize, usize, bool);

#[derive(Debug, Clone)]
struct PathNode {
    state: SiteState,
    acc_cost: f64,
    /// First action of the path plus its slot-1 rank used for tie-breaks:
    /// lower energy first, then more served load, then fewer VMs.
    first: Option<(ControlAction, f64, f64, usize)>,
}

fn node_order(a: &PathNode, b: &PathNode) -> std::cmp::Ordering {
    let rank = |n: &PathNode| {
        let (theta, served, m) = match &n.first {
            Some((_, theta, served, m)) => (*theta, *served, *m),
            None => (0.0, 0.0, 0),
        };
        (n.acc_cost, theta, -served, m)
    };
    let (ca, ta, sa, ma) = rank(a);
    let (cb, tb, sb, mb) = rank(b);
    ca.total_cmp(&cb).then(ta.total_cmp(&tb)).then(sa.total_cmp(&sb)).then(ma.cmp(&mb))
}

fn beta_bin(beta: f64, beta_max: f64, levels: usize) -> usize {
    let idx = (beta / beta_max * levels as f64).floor() as isize;
    idx.clamp(0, levels as isize - 1) as usize
}

/// Limited-lookahead search over explicit per-slot forecasts.
///
/// `l_hats[k]` / `h_hats[k]` are the predicted load (MB, within
/// `[0, l_max]`) and harvest (J) for the k-th future slot; the first
/// `cfg.horizon` entries are used. Expands every feasible action from every
/// reachable state layer by layer, merging states that share a (VM count,
/// battery bin, radio mode) cell and keeping the cheapest accumulated cost,
/// then returns the first action of the best final path.
pub fn enaam_plan(
    state: &SiteState,
    l_hats: &[f64],
    h_hats: &[f64],
    cfg: &SearchConfig,
    params: &SiteParams,
    w: &CostWeights,
) -> Result<(ControlAction, SearchStats)> {
    cfg.validate()?;
    params.validate()?;
    w.validate()?;
    if l_hats.len() < cfg.horizon || h_hats.len() < cfg.horizon {
        return Err(Error::Domain(format!(
            "forecasts cover {} load / {} harvest slots, horizon needs {}",
            l_hats.len(),
            h_hats.len(),
            cfg.horizon
        )));
    }
    for &l in &l_hats[..cfg.horizon] {
        if !l.is_finite() || l < 0.0 || l > params.l_max {
            return Err(Error::Domain(format!(
                "forecast load {l} outside [0, {}]",
                params.l_max
            )));
        }
    }
    let mut stats = SearchStats::default();
    let mut layer: BTreeMap<MergeKey, PathNode> = BTreeMap::new();
    layer.insert(
        (state.m_active, beta_bin(state.beta, params.battery.beta_max, cfg.n_beta_levels),
         state.zeta_prev == RadioMode::Active),
        PathNode { state: *state, acc_cost: 0.0, first: None },
    );

    for k in 0..cfg.horizon {
        let gamma_k = split_workload(l_hats[k])?.gamma;
        let mut next_layer: BTreeMap<MergeKey, PathNode> = BTreeMap::new();
        for node in layer.values() {
            let actions =
                feasibility_set(l_hats[k], node.state.beta, cfg, &params.energy.vm, &params.battery)?;
            stats.max_actions = stats.max_actions.max(actions.len());
            for action in actions {
                let (next, breakdown) = predict_next_state(&node.state, &action, h_hats[k], params)?;
                stats.nodes_expanded += 1;
                let step_cost = cost(breakdown.theta_tot, gamma_k, action.b_served, w)?;
                let first = match &node.first {
                    Some(f) => Some(f.clone()),
                    None => {
                        Some((action.clone(), breakdown.theta_tot, action.b_served, action.m_count))
                    }
                };
                let candidate =
                    PathNode { state: next, acc_cost: node.acc_cost + step_cost, first };
                let key = (
                    next.m_active,
                    beta_bin(next.beta, params.battery.beta_max, cfg.n_beta_levels),
                    next.zeta_prev == RadioMode::Active,
                );
                match next_layer.entry(key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(candidate);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        if (e.get().state.beta - candidate.state.beta).abs() > 1e-9 {
                            stats.merged_collisions += 1;
                        }
                        if node_order(&candidate, e.get()) == std::cmp::Ordering::Less {
                            e.insert(candidate);
                        }
                    }
                }
            }
        }
        layer = next_layer;
    }

    let best = layer
        .values()
        .min_by(|a, b| node_order(a, b))
        .ok_or_else(|| Error::Domain("lookahead produced no candidate path".into()))?;
    let (action, ..) = best.first.clone().expect("horizon >= 1 sets a first action");
    Ok((action, stats))
}

/// Limited-lookahead step driven by fitted forecasters.
///
/// At slot `t` the forecasters are queried from origin `t - 1` (the last
/// observed slot) for `cfg.horizon` steps; forecast loads are clamped into
/// `[0, l_max]` before the search.
pub fn enaam_step(
    state: &SiteState,
    load_forecaster: &Forecaster,
    energy_forecaster: &Forecaster,
    t: usize,
    cfg: &SearchConfig,
    params: &SiteParams,
    w: &CostWeights,
) -> Result<(ControlAction, SearchStats)> {
    let origin = t
        .checked_sub(1)
        .ok_or_else(|| Error::Domain("no observed history before slot 0".into()))?;
    let l_hats: Vec<f64> = load_forecaster
        .horizon(origin, cfg.horizon)?
        .predictions
        .into_iter()
        .map(|l| l.clamp(0.0, params.l_max))
        .collect();
    let h_hats = energy_forecaster.horizon(origin, cfg.horizon)?.predictions;
    enaam_plan(state, &l_hats, &h_hats, cfg, params, w)
}

/// Randomized baseline: admits a random fraction of the delay-sensitive
/// demand, biased high when the forecast load is rising and low when it is
/// falling. Shares the power-saving rules with the lookahead controller.
pub fn deta_r_step(
    state: &SiteState,
    l_hat_t: f64,
    l_hat_t1: f64,
    rng: &mut impl Rng,
    cfg: &SearchConfig,
    params: &SiteParams,
) -> Result<ControlAction> {
    if !l_hat_t.is_finite() || l_hat_t < 0.0 {
        return Err(Error::Domain(format!("forecast load must be >= 0, got {l_hat_t}")));
    }
    if state.beta < params.battery.beta_low || l_hat_t < cfg.l_low {
        return Ok(ControlAction::sleep());
    }
    let gamma_hat = split_workload(l_hat_t.min(params.l_max))?.gamma;
    let fraction = if l_hat_t1 - l_hat_t > 0.0 {
        rng.gen_range(0.6..=1.0)
    } else {
        loop {
            let x: f64 = rng.gen_range(0.0..0.6);
            if x > 0.0 {
                break x;
            }
        }
    };
    active_action(fraction * gamma_hat, &params.energy.vm)
}

/// Site energy (J) when nothing is managed: radio always active at the
/// load-proportional draw, the full VM pool running flat out, and the whole
/// delay-sensitive demand transferred.
pub fn no_management_energy(l: f64, params: &SiteParams) -> Result<f64> {
    if !l.is_finite() || l < 0.0 || l > params.l_max {
        return Err(Error::Domain(format!("load {l} outside [0, {}]", params.l_max)));
    }
    let gamma = split_workload(l)?.gamma;
    let alphas = vec![1.0; params.energy.vm.m_cap];
    let breakdown = total_energy(
        RadioMode::Active,
        l / params.l_max,
        &alphas,
        0,
        gamma,
        &params.energy,
    )?;
    Ok(breakdown.theta_tot)
}
