//! Randomized property checks for the structural invariants of the
//! library: energy accounting identities, battery conservation, workload
//! splitting, clustering geometry, and cost-ranking stability.

use enaam_core::{
    adjacency, bs_energy, cost, kmeans_partition, required_rate, similarity, split_workload,
    step_battery, total_energy, vm_provision, BatteryParams, CostWeights, EnergyParams,
    RadioMode, Topology, VmParams,
};
use proptest::prelude::*;

fn arb_mode() -> impl Strategy<Value = RadioMode> {
    prop_oneof![Just(RadioMode::Sleep), Just(RadioMode::Active)]
}

proptest! {
    /// The breakdown's total is exactly the sum of its parts.
    #[test]
    fn breakdown_sums(
        mode in arb_mode(),
        fraction in 0.0..=1.0f64,
        n_vm in 0usize..8,
        alpha in 0.0..=1.0f64,
        events in 0usize..5,
        b in 0.0..=30.0f64,
    ) {
        let p = EnergyParams::default();
        let alphas = vec![alpha; n_vm];
        let d = total_energy(mode, fraction, &alphas, events, b, &p).unwrap();
        prop_assert!((d.theta_tot - (d.theta_bs + d.theta_mec + d.theta_tx)).abs() < 1e-9);
        prop_assert!(d.theta_bs >= 0.0 && d.theta_mec >= 0.0 && d.theta_tx >= 0.0);
    }

    /// Sleeping is never costlier than being active, all else equal.
    #[test]
    fn sleep_no_costlier(fraction in 0.0..=1.0f64) {
        let p = EnergyParams::default();
        let active = bs_energy(RadioMode::Active, fraction, &p).unwrap();
        let sleep = bs_energy(RadioMode::Sleep, fraction, &p).unwrap();
        prop_assert!(sleep <= active);
    }

    /// Battery step conserves energy: the level change equals inflows
    /// minus outflows, corrected by the clamp bookkeeping, and purchasing
    /// happens exactly when the level starts below the buffer target.
    #[test]
    fn battery_conservation(
        beta_frac in 0.0..=1.0f64,
        h in 0.0..=60_000.0f64,
        theta in 0.0..=60_000.0f64,
    ) {
        let bp = BatteryParams::default();
        let beta = beta_frac * bp.beta_max;
        let s = step_battery(beta, h, theta, &bp).unwrap();
        let balance = beta + s.purchased + h - theta - s.discarded + s.deficit;
        prop_assert!((balance - s.beta_next).abs() < 1e-6);
        prop_assert!((0.0..=bp.beta_max).contains(&s.beta_next));
        prop_assert_eq!(s.purchased > 0.0, beta < bp.beta_up);
        prop_assert!(s.discarded >= 0.0 && s.deficit >= 0.0);
        prop_assert!(!(s.discarded > 0.0 && s.deficit > 0.0));
    }

    /// The 80/20 split is exact and recomposes to the original load.
    #[test]
    fn split_recomposes(l in 0.0..=1_000.0f64) {
        let s = split_workload(l).unwrap();
        prop_assert!((s.gamma + s.gamma_prime - l).abs() < 1e-9);
        prop_assert!((s.gamma - 0.8 * l).abs() < 1e-9);
        prop_assert!(s.gamma >= 0.0 && s.gamma_prime >= 0.0);
    }

    /// The provisioned pool always covers the served workload, respects
    /// the cap, and every VM meets the processing deadline.
    #[test]
    fn provision_serves_within_deadline(gamma in 0.0..=200.0f64) {
        let vm = VmParams::default();
        let (m, assignment) = vm_provision(gamma, &vm).unwrap();
        prop_assert!(m >= vm.m_min && m <= vm.m_cap);
        prop_assert_eq!(m, assignment.len());
        let served: f64 = assignment.iter().map(|a| a.gamma).sum();
        let expect = gamma.min(vm.m_cap as f64 * vm.gamma_max);
        prop_assert!((served - expect).abs() < 1e-9);
        for a in &assignment {
            prop_assert!(a.gamma <= vm.gamma_max + 1e-12);
            if a.gamma > 0.0 {
                prop_assert!(a.gamma / a.f <= vm.delta + 1e-12);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&a.alpha));
            } else {
                prop_assert_eq!(a.f, 0.0);
                prop_assert_eq!(a.alpha, 0.0);
            }
        }
    }

    /// `required_rate` returns the smallest listed rate meeting the
    /// deadline.
    #[test]
    fn rate_is_minimal_feasible(gamma in 0.0..=4.0f64) {
        let vm = VmParams::default();
        let f = required_rate(gamma, &vm).unwrap();
        if gamma == 0.0 {
            prop_assert_eq!(f, 0.0);
        } else {
            prop_assert!(gamma / f <= vm.delta + 1e-12);
            for &r in vm.rates.iter().filter(|&&r| r > 0.0 && r < f) {
                prop_assert!(gamma / r > vm.delta);
            }
        }
    }

    /// Similarity is symmetric with unit diagonal, zero beyond the
    /// neighborhood radius, and within [0, 1].
    #[test]
    fn similarity_geometry(seed in 0u64..1_000, n in 2usize..12) {
        let topo = Topology::synthetic(n, 150.0, 80.0, 30.0, seed).unwrap();
        let s = similarity(&topo);
        let adj = adjacency(&topo);
        for (i, adj_i) in adj.iter().enumerate() {
            prop_assert_eq!(s.get(i, i), 1.0);
            for j in 0..n {
                prop_assert_eq!(s.get(i, j), s.get(j, i));
                prop_assert!((0.0..=1.0).contains(&s.get(i, j)));
                let neighbors = adj_i.contains(&j);
                if i != j {
                    prop_assert_eq!(s.get(i, j) > 0.0, neighbors);
                }
            }
        }
    }

    /// Every BS lands in exactly one cluster and every cluster is
    /// non-empty.
    #[test]
    fn partition_covers_disjointly(seed in 0u64..1_000, n in 2usize..16, k_raw in 1usize..6) {
        let k = k_raw.min(n);
        let topo = Topology::synthetic(n, 150.0, 80.0, 30.0, seed).unwrap();
        let p = kmeans_partition(&topo, k, seed).unwrap();
        prop_assert_eq!(p.clusters.len(), k);
        let mut seen = vec![0usize; n];
        for c in &p.clusters {
            prop_assert!(!c.is_empty());
            for &b in c {
                seen[b] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    /// Scaling all energies by a positive factor never changes which of
    /// two equal-service actions has the lower cost when eta = 0.
    #[test]
    fn cost_ranking_scale_invariant(
        t1 in 1.0..=50_000.0f64,
        t2 in 1.0..=50_000.0f64,
        scale in 0.01..=100.0f64,
        b in 0.0..=20.0f64,
    ) {
        let w = CostWeights { eta: 0.0 };
        let gamma = 24.0;
        let c1 = cost(t1, gamma, b, &w).unwrap();
        let c2 = cost(t2, gamma, b, &w).unwrap();
        let s1 = cost(t1 * scale, gamma, b, &w).unwrap();
        let s2 = cost(t2 * scale, gamma, b, &w).unwrap();
        prop_assert_eq!(c1 < c2, s1 < s2);
    }
}
