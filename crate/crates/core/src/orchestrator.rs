//! Multi-site per-slot loop: coordinated switch-off planning inside each
//! cluster, per-BS policy execution, realized serving and battery
//! accounting, and the no-management baseline computed in the same pass.
//!
//! Each slot proceeds in two phases. The planning phase works on one-step
//! forecast loads: inside every cluster, lightly loaded BSs are switched
//! off one at a time (least network impact first) and their load is handed
//! to the feasible neighbor it burdens least. The execution phase runs the
//! configured policy on every remaining active BS — with forecast loads
//! raised by whatever was handed to it — then serves the realized traffic,
//! steps the batteries with realized harvest, and appends the realized
//! values to the forecasters.

use crate::cluster::{adjacency, kmeans_partition, Topology};
use crate::controller::{
    deta_r_step, enaam_plan, no_management_energy, ControlAction, RadioMode, SiteParams,
    SiteState,
};
use crate::energy::{step_battery, total_energy};
use crate::error::{Error, Result};
use crate::forecast::{fit, Forecaster};
use crate::metrics::{MetricsReport, SlotRecord};
use crate::scenario::{RunPolicy, ScenarioConfig};
use crate::seeds;
use crate::traces::{
    split_workload, synthesize_energy_profile, synthesize_load_profile, ENERGY_PROFILE_COUNT,
    LOAD_PROFILE_COUNT,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One cluster's switch-off decisions for one slot. Vectors span the whole
/// topology (entries outside the cluster stay untouched).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSlotPlan {
    /// BSs switched off by this plan, in the order they were selected.
    pub off_set: Vec<usize>,
    /// Per-BS extra normalized load received through handoffs.
    pub delta_load: Vec<f64>,
    /// Per-BS handoff receiver; set only for entries in `off_set`.
    pub targets: Vec<Option<usize>>,
}

/// Active neighbors of `n` that can absorb its whole load without
/// exceeding capacity: `{n' : L_n' + dL_n' + L_n <= 1}`.
pub fn feasible_offload_targets(
    n: usize,
    loads: &[f64],
    delta: &[f64],
    active: &[bool],
    neighbors: &[Vec<usize>],
) -> Vec<usize> {
    neighbors[n]
        .iter()
        .copied()
        .filter(|&m| active[m] && loads[m] + delta[m] + loads[n] <= 1.0)
        .collect()
}

/// Worst-case post-handoff load among the active neighbors of `n` if `n`
/// switched off: `max over n' of (L_n' + dL_n' + L_n)`.
///
/// A BS with no active neighbor has no defined impact (and cannot hand its
/// load anywhere), which is an error.
pub fn network_impact(
    n: usize,
    loads: &[f64],
    delta: &[f64],
    active: &[bool],
    neighbors: &[Vec<usize>],
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for &m in &neighbors[n] {
        if active[m] {
            let v = loads[m] + delta[m] + loads[n];
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or_else(|| {
        Error::Domain(format!("BS {n} has no active neighbor; network impact is undefined"))
    })
}

/// Sequential switch-off selection inside one cluster.
///
/// Starting from `initial_delta`, repeatedly picks the switch-off
/// candidate with the least network impact (ties to the lower id), hands
/// its full load to the feasible neighbor it burdens least (ties to the
/// lower id), and repeats until no candidate remains. A BS stops being a
/// candidate once it has received load, and the last active BS of the
/// cluster is never switched off. Candidates and targets are both
/// restricted to the cluster.
pub fn select_switch_offs(
    cluster: &[usize],
    loads: &[f64],
    neighbors: &[Vec<usize>],
    active_in: &[bool],
    initial_delta: &[f64],
) -> Result<ClusterSlotPlan> {
    let n_total = loads.len();
    if neighbors.len() != n_total || active_in.len() != n_total || initial_delta.len() != n_total
    {
        return Err(Error::Domain("per-BS vectors must all have the same length".into()));
    }
    for &b in cluster {
        if b >= n_total {
            return Err(Error::Domain(format!("cluster member {b} out of range")));
        }
        if !(0.0..=1.0).contains(&loads[b]) {
            return Err(Error::Domain(format!(
                "normalized load {} of BS {b} outside [0, 1]",
                loads[b]
            )));
        }
    }

    let mut in_cluster = vec![false; n_total];
    for &b in cluster {
        in_cluster[b] = true;
    }
    // Neighbor lists restricted to the cluster: handoffs never cross
    // cluster boundaries.
    let local: Vec<Vec<usize>> = (0..n_total)
        .map(|b| {
            if in_cluster[b] {
                neighbors[b].iter().copied().filter(|&m| in_cluster[m]).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    let mut active = active_in.to_vec();
    let mut delta = initial_delta.to_vec();
    let mut targets = vec![None; n_total];
    let mut off_set = Vec::new();

    loop {
        let active_count = cluster.iter().filter(|&&b| active[b]).count();
        if active_count <= 1 {
            break;
        }
        // Candidates: active, not yet a handoff receiver, with somewhere
        // to put their load.
        let mut best: Option<(f64, usize)> = None;
        for &b in cluster {
            if !active[b] || delta[b] > 0.0 {
                continue;
            }
            if feasible_offload_targets(b, loads, &delta, &active, &local).is_empty() {
                continue;
            }
            let impact = network_impact(b, loads, &delta, &active, &local)?;
            let better = match best {
                None => true,
                Some((bi, bb)) => impact < bi || (impact == bi && b < bb),
            };
            if better {
                best = Some((impact, b));
            }
        }
        let Some((_, off)) = best else { break };

        let target = feasible_offload_targets(off, loads, &delta, &active, &local)
            .into_iter()
            .min_by(|&a, &b| {
                let la = loads[a] + delta[a] + loads[off];
                let lb = loads[b] + delta[b] + loads[off];
                la.total_cmp(&lb).then(a.cmp(&b))
            })
            .expect("candidate has a feasible target");
        delta[target] += loads[off];
        active[off] = false;
        targets[off] = Some(target);
        off_set.push(off);
    }

    Ok(ClusterSlotPlan { off_set, delta_load: delta, targets })
}

/// Per-slot savings: `100 * (1 - managed/baseline)` elementwise.
pub fn energy_savings(managed: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    if managed.len() != baseline.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} managed vs {} baseline slots",
            managed.len(),
            baseline.len()
        )));
    }
    managed
        .iter()
        .zip(baseline)
        .map(|(&m, &b)| {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Domain(format!("baseline energy {b} is not positive")));
            }
            Ok(100.0 * (1.0 - m / b))
        })
        .collect()
}

/// Everything one BS carries through a run.
struct SiteRuntime {
    load: Vec<f64>,
    harvest: Vec<f64>,
    f_load: Forecaster,
    f_energy: Forecaster,
    state: SiteState,
    /// Admission stream for the randomized baseline.
    rng: ChaCha8Rng,
}

fn materialize_sites(cfg: &ScenarioConfig) -> Result<Vec<SiteRuntime>> {
    let total_slots = cfg.traces.train_slots + cfg.sim_slots;
    let spec = cfg.forecaster_spec();
    let mut sites = Vec::with_capacity(cfg.n_bs);
    for bs in 0..cfg.n_bs {
        let bs_u = bs as u64;
        let load_profile = if cfg.traces.load_profile == 0 {
            let mut rng =
                seeds::rng(cfg.master_seed, &[seeds::stream::LOAD_PROFILE_PICK, bs_u]);
            1 + rng.gen_range(0..LOAD_PROFILE_COUNT)
        } else {
            cfg.traces.load_profile
        };
        let energy_profile = if cfg.traces.energy_profile == 0 {
            let mut rng =
                seeds::rng(cfg.master_seed, &[seeds::stream::ENERGY_PROFILE_PICK, bs_u]);
            1 + rng.gen_range(0..ENERGY_PROFILE_COUNT)
        } else {
            cfg.traces.energy_profile
        };
        let load = synthesize_load_profile(
            load_profile,
            seeds::derive(cfg.master_seed, &[bs_u]),
            total_slots,
            cfg.traces.l_max,
        )?;
        let harvest = synthesize_energy_profile(
            energy_profile,
            seeds::derive(cfg.master_seed, &[bs_u]),
            total_slots,
            cfg.battery.beta_max,
        )?;
        let f_load = fit(
            &spec,
            &load[..cfg.traces.train_slots],
            seeds::derive(cfg.master_seed, &[seeds::stream::FORECAST_LOAD, bs_u]),
        )?;
        let f_energy = fit(
            &spec,
            &harvest[..cfg.traces.train_slots],
            seeds::derive(cfg.master_seed, &[seeds::stream::FORECAST_ENERGY, bs_u]),
        )?;
        let m_start = if cfg.policy == RunPolicy::None { cfg.vm.m_cap } else { 0 };
        sites.push(SiteRuntime {
            load,
            harvest,
            f_load,
            f_energy,
            state: SiteState {
                m_active: m_start,
                beta: cfg.battery.beta_up,
                zeta_prev: RadioMode::Active,
            },
            rng: seeds::rng(cfg.master_seed, &[seeds::stream::DETA_R, bs_u]),
        });
    }
    Ok(sites)
}

/// Realizes one BS's slot: serves the realized pool under the chosen
/// action, charges energy, steps the battery, and advances the site state.
///
/// `received_gamma` is realized delay-sensitive load handed over from
/// switched-off neighbors; `handed_off` marks a BS whose own load went to a
/// neighbor instead (so it no longer counts here).
#[allow(clippy::too_many_arguments)]
fn settle_bs(
    slot: usize,
    bs: usize,
    action: &ControlAction,
    own_load_mb: f64,
    received_gamma: f64,
    handed_off: bool,
    harvest: f64,
    state: &mut SiteState,
    params: &SiteParams,
) -> Result<SlotRecord> {
    let own_gamma = split_workload(own_load_mb)?.gamma;
    let pool = if handed_off { 0.0 } else { own_gamma } + received_gamma;
    let served = action.b_served.min(pool);
    let dropped = pool - served;
    let alphas: Vec<f64> = action.per_vm.iter().map(|a| a.alpha).collect();
    let events = state.m_active.abs_diff(action.m_count);
    let breakdown = total_energy(
        action.zeta,
        served / params.l_max,
        &alphas,
        events,
        served,
        &params.energy,
    )?;
    let step = step_battery(state.beta, harvest, breakdown.theta_tot, &params.battery)?;
    let max_mu = action
        .per_vm
        .iter()
        .filter(|a| a.gamma > 0.0)
        .map(|a| a.gamma / a.f)
        .fold(0.0, f64::max);
    *state = SiteState {
        m_active: action.m_count,
        beta: step.beta_next,
        zeta_prev: action.zeta,
    };
    Ok(SlotRecord {
        slot,
        bs_id: bs,
        theta_bs: breakdown.theta_bs,
        theta_mec: breakdown.theta_mec,
        theta_tx: breakdown.theta_tx,
        theta_tot: breakdown.theta_tot,
        q: step.purchased,
        beta: step.beta_next,
        served_mb: served,
        dropped_mb: dropped,
        zeta: action.zeta.factor(params.energy.epsilon),
        harvested: harvest,
        discarded: step.discarded,
        deficit: step.deficit,
        m_count: action.m_count,
        max_mu,
    })
}

/// Realizes one BS's slot under no management: radio always on, the whole
/// VM pool flat out, the entire delay-sensitive demand served.
fn settle_none(
    slot: usize,
    bs: usize,
    own_load_mb: f64,
    harvest: f64,
    state: &mut SiteState,
    params: &SiteParams,
) -> Result<SlotRecord> {
    let gamma = split_workload(own_load_mb)?.gamma;
    let alphas = vec![1.0; params.energy.vm.m_cap];
    let breakdown = total_energy(
        RadioMode::Active,
        own_load_mb / params.l_max,
        &alphas,
        0,
        gamma,
        &params.energy,
    )?;
    let step = step_battery(state.beta, harvest, breakdown.theta_tot, &params.battery)?;
    *state = SiteState {
        m_active: params.energy.vm.m_cap,
        beta: step.beta_next,
        zeta_prev: RadioMode::Active,
    };
    Ok(SlotRecord {
        slot,
        bs_id: bs,
        theta_bs: breakdown.theta_bs,
        theta_mec: breakdown.theta_mec,
        theta_tx: breakdown.theta_tx,
        theta_tot: breakdown.theta_tot,
        q: step.purchased,
        beta: step.beta_next,
        served_mb: gamma,
        dropped_mb: 0.0,
        zeta: 1.0,
        harvested: harvest,
        discarded: step.discarded,
        deficit: step.deficit,
        m_count: params.energy.vm.m_cap,
        // The busiest VM of the flat-out pool takes the first greedy
        // share at the maximum rate.
        max_mu: gamma.min(params.energy.vm.gamma_max) / params.energy.vm.f_max,
    })
}

/// Clamped forecast horizons for one BS at the given origin. Loads are
/// clamped into `[0, l_max]`; at least two steps are always requested so
/// the randomized policy can read the forecast trend.
fn forecast_bs(
    site: &SiteRuntime,
    origin: usize,
    horizon: usize,
    l_max: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let steps = horizon.max(2);
    let l_hats: Vec<f64> = site
        .f_load
        .horizon(origin, steps)?
        .predictions
        .into_iter()
        .map(|l| l.clamp(0.0, l_max))
        .collect();
    let h_hats = site.f_energy.horizon(origin, steps)?.predictions;
    Ok((l_hats, h_hats))
}

/// Runs the full multi-site scenario: topology and clusters are built
/// once, then every slot is planned and realized as described at the top
/// of this module. Deterministic in the scenario alone.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let params = cfg.site_params();
    let search = cfg.search_config();
    let weights = cfg.weights();
    let n = cfg.n_bs;

    let topology = match cfg.topology.source.as_str() {
        "synthetic" => Topology::synthetic(
            n,
            cfg.topology.side_meters,
            cfg.network.e_d,
            cfg.network.sigma_d,
            cfg.master_seed,
        )?,
        "csv" => {
            let path = cfg.topology.csv_path.as_ref().expect("validated");
            let topo = Topology::from_csv(
                std::path::Path::new(path),
                cfg.network.e_d,
                cfg.network.sigma_d,
            )?;
            if topo.n() != n {
                return Err(Error::Config(format!(
                    "topology.csv_path holds {} BSs but n_bs = {n}",
                    topo.n()
                )));
            }
            topo
        }
        _ => unreachable!("validated"),
    };
    let partition = kmeans_partition(&topology, cfg.network.k_clusters, cfg.master_seed)?;
    let neighbors = adjacency(&topology);

    let mut sites = materialize_sites(cfg)?;
    let mut switch_rngs: Vec<ChaCha8Rng> = (0..partition.clusters.len())
        .map(|ci| seeds::rng(cfg.master_seed, &[seeds::stream::DETA_R_SWITCH_OFF, ci as u64]))
        .collect();
    let mut commitments = vec![0usize; n];

    let mut records = Vec::with_capacity(n * cfg.sim_slots);
    let mut managed_per_slot = Vec::with_capacity(cfg.sim_slots);
    let mut baseline_per_slot = Vec::with_capacity(cfg.sim_slots);

    for t in 0..cfg.sim_slots {
        let abs = cfg.traces.train_slots + t;
        let origin = abs - 1;

        // Forecast phase.
        let mut l_hats = Vec::with_capacity(n);
        let mut h_hats = Vec::with_capacity(n);
        for site in &sites {
            let (l, h) = forecast_bs(site, origin, search.horizon, params.l_max)?;
            l_hats.push(l);
            h_hats.push(h);
        }
        let lam1: Vec<f64> = l_hats.iter().map(|l| l[0] / params.l_max).collect();

        // Planning phase.
        let mut active: Vec<bool> = commitments.iter().map(|&c| c == 0).collect();
        let mut delta = vec![0.0f64; n];
        let mut targets: Vec<Option<usize>> = vec![None; n];
        if cfg.policy != RunPolicy::None {
            for (ci, cluster) in partition.clusters.iter().enumerate() {
                // Loads of BSs still inside a commitment window are
                // reassigned (or dropped) before new switch-offs.
                for &b in cluster {
                    if active[b] {
                        continue;
                    }
                    let choice = feasible_offload_targets(b, &lam1, &delta, &active, &neighbors)
                        .into_iter()
                        .filter(|m| cluster.contains(m))
                        .min_by(|&x, &y| {
                            let lx = lam1[x] + delta[x] + lam1[b];
                            let ly = lam1[y] + delta[y] + lam1[b];
                            lx.total_cmp(&ly).then(x.cmp(&y))
                        });
                    if let Some(m) = choice {
                        delta[m] += lam1[b];
                    }
                    targets[b] = choice;
                }
                match cfg.policy {
                    RunPolicy::Enaam => {
                        let plan =
                            select_switch_offs(cluster, &lam1, &neighbors, &active, &delta)?;
                        for &off in &plan.off_set {
                            active[off] = false;
                            commitments[off] = cfg.network.commitment_slots;
                            targets[off] = plan.targets[off];
                        }
                        delta = plan.delta_load;
                    }
                    RunPolicy::DetaR => {
                        let actives: Vec<usize> =
                            cluster.iter().copied().filter(|&b| active[b]).collect();
                        if actives.len() > 1 {
                            let pick = actives[switch_rngs[ci].gen_range(0..actives.len())];
                            let choice =
                                feasible_offload_targets(pick, &lam1, &delta, &active, &neighbors)
                                    .into_iter()
                                    .filter(|m| cluster.contains(m))
                                    .min_by(|&x, &y| {
                                        (lam1[x] + delta[x])
                                            .total_cmp(&(lam1[y] + delta[y]))
                                            .then(x.cmp(&y))
                                    });
                            if let Some(m) = choice {
                                delta[m] += lam1[pick];
                                active[pick] = false;
                                commitments[pick] = cfg.network.commitment_slots;
                                targets[pick] = Some(m);
                            }
                        }
                    }
                    RunPolicy::None => unreachable!(),
                }
            }
        }

        // Execution phase.
        let l_reals: Vec<f64> = sites.iter().map(|s| s.load[abs]).collect();
        let gammas: Vec<f64> =
            l_reals.iter().map(|&l| split_workload(l).map(|s| s.gamma)).collect::<Result<_>>()?;
        let mut managed = 0.0;
        let mut baseline = 0.0;
        for bs in 0..n {
            let l_real = l_reals[bs];
            let h_real = sites[bs].harvest[abs];
            let record = if cfg.policy == RunPolicy::None {
                settle_none(t, bs, l_real, h_real, &mut sites[bs].state, &params)?
            } else {
                let action = if !active[bs] {
                    ControlAction::sleep()
                } else {
                    match cfg.policy {
                        RunPolicy::Enaam => {
                            let adj: Vec<f64> = l_hats[bs]
                                .iter()
                                .map(|l| (l + delta[bs] * params.l_max).clamp(0.0, params.l_max))
                                .collect();
                            enaam_plan(
                                &sites[bs].state,
                                &adj,
                                &h_hats[bs],
                                &search,
                                &params,
                                &weights,
                            )?
                            .0
                        }
                        RunPolicy::DetaR => {
                            let lt = (l_hats[bs][0] + delta[bs] * params.l_max)
                                .clamp(0.0, params.l_max);
                            let lt1 = (l_hats[bs][1] + delta[bs] * params.l_max)
                                .clamp(0.0, params.l_max);
                            let site = &mut sites[bs];
                            deta_r_step(&site.state, lt, lt1, &mut site.rng, &search, &params)?
                        }
                        RunPolicy::None => unreachable!(),
                    }
                };
                let received: f64 = (0..n)
                    .filter(|&m| targets[m] == Some(bs))
                    .map(|m| gammas[m])
                    .sum();
                settle_bs(
                    t,
                    bs,
                    &action,
                    l_real,
                    received,
                    targets[bs].is_some(),
                    h_real,
                    &mut sites[bs].state,
                    &params,
                )?
            };
            managed += record.theta_tot;
            baseline += no_management_energy(l_real, &params)?;
            records.push(record);
            sites[bs].f_load.push(l_real);
            sites[bs].f_energy.push(h_real);
        }
        managed_per_slot.push(managed);
        baseline_per_slot.push(baseline);

        for c in commitments.iter_mut() {
            *c = c.saturating_sub(1);
        }
    }

    let savings_percent = energy_savings(&managed_per_slot, &baseline_per_slot)?;
    Ok(MetricsReport {
        policy: cfg.policy,
        n_bs: n,
        records,
        managed_theta_per_slot: managed_per_slot,
        baseline_theta_per_slot: baseline_per_slot,
        savings_percent,
    })
}

/// Runs every BS as an isolated site: no topology, no clustering, no
/// switch-off or handoff — each site is driven by its own controller
/// alone. Traces, forecasters, and policy streams are seeded exactly as in
/// [`run_simulation`].
pub fn run_single_site(cfg: &ScenarioConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let params = cfg.site_params();
    let search = cfg.search_config();
    let weights = cfg.weights();
    let n = cfg.n_bs;

    let mut sites = materialize_sites(cfg)?;
    let mut records = Vec::with_capacity(n * cfg.sim_slots);
    let mut managed_per_slot = Vec::with_capacity(cfg.sim_slots);
    let mut baseline_per_slot = Vec::with_capacity(cfg.sim_slots);

    for t in 0..cfg.sim_slots {
        let abs = cfg.traces.train_slots + t;
        let origin = abs - 1;
        let mut managed = 0.0;
        let mut baseline = 0.0;
        for (bs, site) in sites.iter_mut().enumerate() {
            let l_real = site.load[abs];
            let h_real = site.harvest[abs];
            let record = if cfg.policy == RunPolicy::None {
                settle_none(t, bs, l_real, h_real, &mut site.state, &params)?
            } else {
                let (l_hats, h_hats) = forecast_bs(site, origin, search.horizon, params.l_max)?;
                let action = match cfg.policy {
                    RunPolicy::Enaam => {
                        enaam_plan(&site.state, &l_hats, &h_hats, &search, &params, &weights)?.0
                    }
                    RunPolicy::DetaR => deta_r_step(
                        &site.state,
                        l_hats[0],
                        l_hats[1],
                        &mut site.rng,
                        &search,
                        &params,
                    )?,
                    RunPolicy::None => unreachable!(),
                };
                settle_bs(t, bs, &action, l_real, 0.0, false, h_real, &mut site.state, &params)?
            };
            managed += record.theta_tot;
            baseline += no_management_energy(l_real, &params)?;
            records.push(record);
            site.f_load.push(l_real);
            site.f_energy.push(h_real);
        }
        managed_per_slot.push(managed);
        baseline_per_slot.push(baseline);
    }

    let savings_percent = energy_savings(&managed_per_slot, &baseline_per_slot)?;
    Ok(MetricsReport {
        policy: cfg.policy,
        n_bs: n,
        records,
        managed_theta_per_slot: managed_per_slot,
        baseline_theta_per_slot: baseline_per_slot,
        savings_percent,
    })
}
