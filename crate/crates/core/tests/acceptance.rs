//! Acceptance gate: ten end-to-end criteria, one test and one printed
//! PASS/FAIL line per criterion. Run with `--nocapture` to see every
//! line; any FAIL also fails the test with the measured detail.

use enaam_core::forecast::{k_step_rmse, last_value_k_step_rmse};
use enaam_core::{
    cost, enaam_step, feasibility_set, fit, predict_next_state, run_simulation, run_single_site,
    select_switch_offs, split_workload, synthesize_energy_profile, synthesize_load_profile,
    ControlAction, CostWeights, ForecastKind, ForecasterSpec, RadioMode, RunPolicy,
    ScenarioConfig, SearchConfig, SiteParams, SiteState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn verdict(number: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {number} ({name}): {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number} ({name}) failed: {detail}");
}

fn base_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig { master_seed: seed, ..ScenarioConfig::default() }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// ---------------------------------------------------------------- 1
// Constraint suite on the default 7-day, 24-BS scenario, seed-swept:
// every per-slot record respects the radio-mode set, the VM-count
// bounds, the battery floor, the load/served bounds, and the per-VM
// processing deadline. Runtime of one full run stays under a minute.
#[test]
fn criterion_01_constraint_suite() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    for seed in [1u64, 2, 3] {
        let cfg = base_config(seed);
        let eps = cfg.energy.epsilon;
        let report = run_simulation(&cfg).unwrap();
        for r in &report.records {
            if !(r.zeta == 1.0 || r.zeta == eps) {
                violations.push(format!("seed {seed} slot {} bs {}: zeta {}", r.slot, r.bs_id, r.zeta));
            }
            if r.zeta == 1.0 && !(r.m_count >= cfg.vm.m_min && r.m_count <= cfg.vm.m_cap) {
                violations.push(format!(
                    "seed {seed} slot {} bs {}: active VM count {}",
                    r.slot, r.bs_id, r.m_count
                ));
            }
            if r.m_count > cfg.vm.m_cap {
                violations.push(format!("seed {seed}: VM count {} above cap", r.m_count));
            }
            if r.beta < cfg.battery.beta_low - 1e-9 {
                violations.push(format!(
                    "seed {seed} slot {} bs {}: battery {} below floor",
                    r.slot, r.bs_id, r.beta
                ));
            }
            if !(0.0..=cfg.traces.l_max + 1e-9).contains(&r.served_mb) || r.dropped_mb < -1e-9 {
                violations.push(format!(
                    "seed {seed} slot {} bs {}: served {} dropped {}",
                    r.slot, r.bs_id, r.served_mb, r.dropped_mb
                ));
            }
            if !(0.0..=cfg.battery.beta_max + 1e-9).contains(&r.beta) || r.q < 0.0 {
                violations.push(format!("seed {seed}: battery {} purchase {}", r.beta, r.q));
            }
            if r.max_mu > cfg.vm.delta_seconds + 1e-12 {
                violations.push(format!(
                    "seed {seed} slot {} bs {}: VM sojourn {}s over deadline",
                    r.slot, r.bs_id, r.max_mu
                ));
            }
        }
        assert_eq!(report.records.len(), cfg.n_bs * cfg.sim_slots);
    }
    let elapsed = t0.elapsed();
    let ok = violations.is_empty() && elapsed.as_secs() < 60;
    verdict(
        1,
        "constraint suite",
        ok,
        &format!(
            "3 seeds x 336 slots x 24 BS, {} violations, {elapsed:?} wall",
            violations.len()
        ),
    );
}

// ---------------------------------------------------------------- 2
// Exhaustive-search oracle: on randomized small instances the lookahead's
// first action equals full path enumeration's under the documented
// tie-break. Instances whose fine battery quantization still merges
// distinct battery levels are redrawn (the merge is the approximation
// under test, and the quantization knob controls it).
fn oracle_first_action(
    state: &SiteState,
    l_hats: &[f64],
    h_hats: &[f64],
    cfg: &SearchConfig,
    params: &SiteParams,
    w: &CostWeights,
) -> ControlAction {
    #[derive(Clone)]
    struct Best {
        cost: f64,
        first_theta: f64,
        first_b: f64,
        first_m: usize,
        action: ControlAction,
    }
    #[allow(clippy::too_many_arguments)]
    fn explore(
        state: &SiteState,
        depth: usize,
        acc: f64,
        first: Option<(ControlAction, f64)>,
        l_hats: &[f64],
        h_hats: &[f64],
        cfg: &SearchConfig,
        params: &SiteParams,
        w: &CostWeights,
        best: &mut Option<Best>,
    ) {
        if depth == cfg.horizon {
            let (action, theta) = first.clone().unwrap();
            let cand = Best {
                cost: acc,
                first_theta: theta,
                first_b: action.b_served,
                first_m: action.m_count,
                action,
            };
            let better = match best {
                None => true,
                Some(b) => {
                    cand.cost
                        .total_cmp(&b.cost)
                        .then(cand.first_theta.total_cmp(&b.first_theta))
                        .then(b.first_b.total_cmp(&cand.first_b))
                        .then(cand.first_m.cmp(&b.first_m))
                        .is_lt()
                }
            };
            if better {
                *best = Some(cand);
            }
            return;
        }
        let gamma = split_workload(l_hats[depth]).unwrap().gamma;
        let actions =
            feasibility_set(l_hats[depth], state.beta, cfg, &params.energy.vm, &params.battery)
                .unwrap();
        for action in actions {
            let (next, breakdown) =
                predict_next_state(state, &action, h_hats[depth], params).unwrap();
            let c = cost(breakdown.theta_tot, gamma, action.b_served, w).unwrap();
            let first_next = first
                .clone()
                .or_else(|| Some((action.clone(), breakdown.theta_tot)));
            explore(
                &next,
                depth + 1,
                acc + c,
                first_next,
                l_hats,
                h_hats,
                cfg,
                params,
                w,
                best,
            );
        }
    }
    let mut best = None;
    explore(state, 0, 0.0, None, l_hats, h_hats, cfg, params, w, &mut best);
    best.expect("feasibility set is never empty").action
}

#[test]
fn criterion_02_oracle_equivalence() {
    let params = SiteParams::default();
    let w = CostWeights::default();
    let spec_template = ForecasterSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x00ac_ce55);
    let mut agreements = 0usize;
    let mut instances = 0usize;
    let mut redrawn = 0usize;
    let mut disagreement = None;
    while instances < 220 {
        let horizon = rng.gen_range(1..=3usize);
        let cfg = SearchConfig {
            horizon,
            n_b_points: rng.gen_range(2..=3usize),
            n_beta_levels: 1_000_000,
            ..SearchConfig::default()
        };
        let state = SiteState {
            m_active: rng.gen_range(0..=4usize),
            beta: rng.gen_range(0.0..=params.battery.beta_max),
            zeta_prev: if rng.gen_bool(0.5) { RadioMode::Active } else { RadioMode::Sleep },
        };
        let l_hats: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..=params.l_max)).collect();
        let h_hats: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..=30_000.0)).collect();

        // Feed the exact horizon values through a fitted seasonal
        // forecaster so the public slot-level entry point is what's
        // exercised.
        let spec = ForecasterSpec { season_length: horizon, ..spec_template.clone() };
        let mut hist = l_hats.clone();
        hist.extend_from_slice(&l_hats);
        let f_load = fit(&spec, &hist, 0).unwrap();
        let mut hist_h = h_hats.clone();
        hist_h.extend_from_slice(&h_hats);
        let f_energy = fit(&spec, &hist_h, 0).unwrap();

        let (action, stats) =
            enaam_step(&state, &f_load, &f_energy, 2 * horizon, &cfg, &params, &w).unwrap();
        if stats.merged_collisions > 0 {
            redrawn += 1;
            continue;
        }
        instances += 1;
        let oracle = oracle_first_action(&state, &l_hats, &h_hats, &cfg, &params, &w);
        if action == oracle {
            agreements += 1;
        } else if disagreement.is_none() {
            disagreement = Some(format!(
                "state {state:?} l_hats {l_hats:?}: search {action:?} vs oracle {oracle:?}"
            ));
        }
    }
    let ok = agreements == instances;
    verdict(
        2,
        "tree-search oracle equivalence",
        ok,
        &format!(
            "{agreements}/{instances} first actions agree ({redrawn} redrawn for bin collisions){}",
            disagreement.map(|d| format!("; first disagreement: {d}")).unwrap_or_default()
        ),
    );
}

// ---------------------------------------------------------------- 3
// Savings ordering at eta = 0 across 5 seeds: the lookahead beats the
// randomized baseline at both VM sizes by > 2 pp. The third leg of the
// stated ordering — gamma_max = 10 beating gamma_max = 5 by > 2 pp — is
// not attainable under this energy model (serving the larger minimum
// workload always costs more energy; see the decisions ledger) and is
// asserted as written, so this criterion reports FAIL on that leg.
#[test]
fn criterion_03_savings_ordering() {
    let seeds = [1u64, 2, 3, 4, 5];
    let mut e5 = Vec::new();
    let mut e10 = Vec::new();
    let mut d5 = Vec::new();
    let mut d10 = Vec::new();
    for &seed in &seeds {
        for (policy, gamma, sink) in [
            (RunPolicy::Enaam, 5.0, &mut e5),
            (RunPolicy::Enaam, 10.0, &mut e10),
            (RunPolicy::DetaR, 5.0, &mut d5),
            (RunPolicy::DetaR, 10.0, &mut d10),
        ] {
            let mut cfg = base_config(seed);
            cfg.policy = policy;
            cfg.eta = 0.0;
            cfg.vm.gamma_max = gamma;
            sink.push(run_simulation(&cfg).unwrap().mean_savings_percent().unwrap());
        }
    }
    let (me5, me10, md5, md10) = (mean(&e5), mean(&e10), mean(&d5), mean(&d10));
    let gap_e10_e5 = me10 - me5;
    let gap_e10_d10 = me10 - md10;
    let gap_e5_d5 = me5 - md5;
    let in_band = (40.0..=80.0).contains(&me5) && (40.0..=80.0).contains(&me10);
    let ok = gap_e10_e5 > 2.0 && gap_e10_d10 > 2.0 && gap_e5_d5 > 2.0;
    verdict(
        3,
        "savings ordering",
        ok,
        &format!(
            "means over 5 seeds: lookahead(10)={me10:.2}% lookahead(5)={me5:.2}% \
             random(10)={md10:.2}% random(5)={md5:.2}%; gaps: 10-vs-5={gap_e10_e5:+.2}pp \
             (needs >2), vs-random(10)={gap_e10_d10:+.2}pp, vs-random(5)={gap_e5_d5:+.2}pp; \
             40-80% reference band {}",
            if in_band { "met" } else { "not met (reference only)" }
        ),
    );
}

// ---------------------------------------------------------------- 4
// Mean savings are non-increasing in eta over {0.0 .. 0.9}, allowing
// noise inversions of at most 1 pp per adjacent pair, seed-averaged.
#[test]
fn criterion_04_eta_monotonicity() {
    let seeds = [1u64, 2, 3, 4, 5];
    let etas: Vec<f64> = (0..=9).map(|i| i as f64 / 10.0).collect();
    let mut means = Vec::new();
    for &eta in &etas {
        let mut runs = Vec::new();
        for &seed in &seeds {
            let mut cfg = base_config(seed);
            cfg.eta = eta;
            runs.push(run_simulation(&cfg).unwrap().mean_savings_percent().unwrap());
        }
        means.push(mean(&runs));
    }
    let mut worst = f64::NEG_INFINITY;
    for pair in means.windows(2) {
        worst = worst.max(pair[1] - pair[0]);
    }
    let ok = worst <= 1.0;
    let curve: Vec<String> = etas
        .iter()
        .zip(&means)
        .map(|(e, m)| format!("{e:.1}:{m:.2}"))
        .collect();
    verdict(
        4,
        "eta monotonicity",
        ok,
        &format!("means [{}], worst adjacent rise {worst:+.3}pp (allowed +1)", curve.join(" ")),
    );
}

// ---------------------------------------------------------------- 5
// Clustering gain: mean savings with 6-BS clusters (k=4 over 24 BSs)
// strictly exceed the independent-BS configuration (k=24) for both VM
// sizes.
#[test]
fn criterion_05_clustering_gain() {
    let seeds = [1u64, 2, 3];
    let mut details = Vec::new();
    let mut ok = true;
    for gamma in [5.0, 10.0] {
        let mut gains = Vec::new();
        for &seed in &seeds {
            let mut clustered = base_config(seed);
            clustered.vm.gamma_max = gamma;
            clustered.network.k_clusters = 4;
            let mut independent = clustered.clone();
            independent.network.k_clusters = 24;
            let c = run_simulation(&clustered).unwrap().mean_savings_percent().unwrap();
            let i = run_simulation(&independent).unwrap().mean_savings_percent().unwrap();
            gains.push(c - i);
        }
        let g = mean(&gains);
        ok &= g > 0.0;
        details.push(format!("gamma_max={gamma}: +{g:.2}pp (9-16pp reference)"));
    }
    verdict(5, "clustering gain", ok, &details.join("; "));
}

// ---------------------------------------------------------------- 6
// A multi-site run with all-singleton clusters is bit-identical to the
// single-site loop on the same traces and seeds, for both managed
// policies.
#[test]
fn criterion_06_degenerate_cluster_equivalence() {
    let mut checked = 0;
    for policy in [RunPolicy::Enaam, RunPolicy::DetaR] {
        let mut cfg = base_config(11);
        cfg.policy = policy;
        cfg.n_bs = 6;
        cfg.sim_slots = 96;
        cfg.network.k_clusters = 6;
        let multi = run_simulation(&cfg).unwrap();
        let single = run_single_site(&cfg).unwrap();
        assert_eq!(multi, single, "policy {policy} diverged");
        checked += multi.records.len();
    }
    verdict(
        6,
        "degenerate-cluster equivalence",
        true,
        &format!("{checked} records bit-identical across both policies"),
    );
}

// ---------------------------------------------------------------- 7
// Battery bookkeeping: per BS, cumulative harvest + purchases - drain -
// discard + deficit equals the net battery change, and purchases happen
// only when the slot starts below the buffer target.
#[test]
fn criterion_07_battery_bookkeeping() {
    let cfg = base_config(1);
    let report = run_simulation(&cfg).unwrap();
    let mut worst_rel = 0.0f64;
    let mut purchase_ok = true;
    for bs in 0..cfg.n_bs {
        let recs: Vec<_> = report.records.iter().filter(|r| r.bs_id == bs).collect();
        let lhs: f64 =
            recs.iter().map(|r| r.harvested + r.q - r.theta_tot - r.discarded + r.deficit).sum();
        let rhs = recs.last().unwrap().beta - cfg.battery.beta_up;
        let rel = (lhs - rhs).abs() / rhs.abs().max(1.0);
        worst_rel = worst_rel.max(rel);
        let mut beta_start = cfg.battery.beta_up;
        for r in &recs {
            if r.q > 0.0 && beta_start >= cfg.battery.beta_up {
                purchase_ok = false;
            }
            beta_start = r.beta;
        }
    }
    let ok = worst_rel <= 1e-6 && purchase_ok;
    verdict(
        7,
        "battery bookkeeping",
        ok,
        &format!(
            "worst per-BS relative closure error {worst_rel:.2e} (tolerance 1e-6); purchases only below buffer target: {purchase_ok}"
        ),
    );
}

// ---------------------------------------------------------------- 8
// Hand-traced 3-BS switch-off: loads 0.3/0.5/0.4 on a complete graph
// yield exactly one switch-off — BS A handed to C — with final loads
// B=0.5 and C=0.7.
#[test]
fn criterion_08_network_impact_procedure() {
    let loads = [0.3, 0.5, 0.4];
    let neighbors: Vec<Vec<usize>> = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
    let plan =
        select_switch_offs(&[0, 1, 2], &loads, &neighbors, &[true; 3], &[0.0; 3]).unwrap();
    let final_b = loads[1] + plan.delta_load[1];
    let final_c = loads[2] + plan.delta_load[2];
    let ok = plan.off_set == vec![0]
        && plan.targets[0] == Some(2)
        && (final_b - 0.5).abs() < 1e-12
        && (final_c - 0.7).abs() < 1e-12;
    verdict(
        8,
        "network-impact procedure",
        ok,
        &format!(
            "off set {:?}, target of A {:?}, final loads B={final_b} C={final_c}",
            plan.off_set, plan.targets[0]
        ),
    );
}

// ---------------------------------------------------------------- 9
// Forecaster gate: on each bundled synthetic trace both built-in
// forecasters beat last-value persistence at one step, and the seasonal
// forecaster is exact on a perfectly periodic input.
#[test]
fn criterion_09_forecaster_gate() {
    let recurrent = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
    let seasonal = ForecasterSpec::default();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: String, series: Vec<f64>| {
        let range = series.iter().cloned().fold(f64::MIN, f64::max)
            - series.iter().cloned().fold(f64::MAX, f64::min);
        let r = k_step_rmse(&recurrent, 7, &series, 1).unwrap() / range;
        let s = k_step_rmse(&seasonal, 7, &series, 1).unwrap() / range;
        let naive = last_value_k_step_rmse(&series, 0.67, 1).unwrap() / range;
        ok &= r < naive && s < naive;
        lines.push(format!("{name}: recurrent {r:.4} seasonal {s:.4} last-value {naive:.4}"));
    };
    for pid in 1..=4u32 {
        check(
            format!("load profile {pid}"),
            synthesize_load_profile(pid, 42 + pid as u64, 336, 30.0).unwrap(),
        );
    }
    for pid in 1..=3u32 {
        check(
            format!("energy profile {pid}"),
            synthesize_energy_profile(pid, 99 + pid as u64, 336, 490_000.0).unwrap(),
        );
    }
    // Exactly periodic input (one tabulated day repeated bit-for-bit):
    // seasonal persistence is exact.
    let day: Vec<f64> =
        (0..48).map(|t| 10.0 + 5.0 * (t as f64 * std::f64::consts::TAU / 48.0).sin()).collect();
    let periodic: Vec<f64> = (0..288).map(|t| day[t % 48]).collect();
    let s = k_step_rmse(&seasonal, 7, &periodic, 1).unwrap();
    ok &= s == 0.0;
    lines.push(format!("periodic: seasonal RMSE {s}"));
    verdict(9, "forecaster gate", ok, &lines.join("; "));
}

// ---------------------------------------------------------------- 10
// Complexity bound: the instrumented node counter never exceeds
// N_x * N_sigma * T, measured on coarse quantizations (where merging
// actually binds) and across randomized horizons.
#[test]
fn criterion_10_complexity_bound() {
    let params = SiteParams::default();
    let w = CostWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
    let mut max_ratio = 0.0f64;
    let mut ok = true;
    for _ in 0..300 {
        let levels = [2usize, 4, 8, 64];
        let cfg = SearchConfig {
            horizon: rng.gen_range(1..=3usize),
            n_b_points: rng.gen_range(2..=5usize),
            n_beta_levels: levels[rng.gen_range(0..levels.len())],
            ..SearchConfig::default()
        };
        let state = SiteState {
            m_active: rng.gen_range(0..=params.energy.vm.m_cap),
            beta: rng.gen_range(0.0..=params.battery.beta_max),
            zeta_prev: if rng.gen_bool(0.5) { RadioMode::Active } else { RadioMode::Sleep },
        };
        let l_hats: Vec<f64> = (0..cfg.horizon).map(|_| rng.gen_range(0.0..=params.l_max)).collect();
        let h_hats: Vec<f64> = (0..cfg.horizon).map(|_| rng.gen_range(0.0..=30_000.0)).collect();
        let stats = enaam_core::enaam_plan(&state, &l_hats, &h_hats, &cfg, &params, &w)
            .unwrap()
            .1;
        let n_x = (params.energy.vm.m_cap + 1) * cfg.n_beta_levels * 2;
        let bound = n_x * cfg.n_b_points * cfg.horizon;
        ok &= stats.nodes_expanded <= bound;
        max_ratio = max_ratio.max(stats.nodes_expanded as f64 / bound as f64);
    }
    verdict(
        10,
        "complexity bound",
        ok,
        &format!("300 instances, worst nodes/bound ratio {max_ratio:.4}"),
    );
}
