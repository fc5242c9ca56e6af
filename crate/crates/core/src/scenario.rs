//! Scenario configuration: one TOML file holds every physical parameter,
//! search knob, clustering setting, and trace source for a run.
//!
//! Unknown keys are hard errors (silent typos in 30+ numeric parameters are
//! the dominant failure mode); omitted keys fall back to the documented
//! defaults, so an empty file is a complete, runnable scenario.

use std::path::Path;

use crate::cluster::{DEFAULT_E_D, DEFAULT_SIGMA_D};
use crate::controller::{CostWeights, SearchConfig, SiteParams};
use crate::energy::{BatteryParams, EnergyParams, VmParams};
use crate::error::{Error, Result};
use crate::forecast::{ForecastKind, ForecasterSpec};
use serde::{Deserialize, Serialize};

/// Which per-slot policy drives the managed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunPolicy {
    /// Limited-lookahead controller with clustered switch-off.
    Enaam,
    /// Randomized admission baseline.
    DetaR,
    /// No management: everything runs flat out.
    None,
}

impl std::fmt::Display for RunPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunPolicy::Enaam => "enaam",
            RunPolicy::DetaR => "deta-r",
            RunPolicy::None => "none",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for RunPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enaam" => Ok(RunPolicy::Enaam),
            "deta-r" => Ok(RunPolicy::DetaR),
            "none" => Ok(RunPolicy::None),
            other => Err(Error::Config(format!(
                "policy must be one of enaam, deta-r, none; got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    /// Lookahead depth in slots.
    pub horizon: usize,
    /// Quantization of the admitted-load interval.
    pub n_b_points: usize,
    /// Battery bins for state merging.
    pub n_beta_levels: usize,
    /// Sleep threshold on forecast load (MB).
    pub l_low: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let c = SearchConfig::default();
        Self {
            horizon: c.horizon,
            n_b_points: c.n_b_points,
            n_beta_levels: c.n_beta_levels,
            l_low: c.l_low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    /// BS operation power (W).
    pub theta0_watts: f64,
    /// Power-saving scale in (0, 1).
    pub epsilon: f64,
    /// Maximum wireless transmit power (W).
    pub p_tx_max_watts: f64,
    /// Idle network-interface energy (J per slot).
    pub theta_idle_nic: f64,
    /// Data-transfer energy (J per MB).
    pub theta_data_per_mb: f64,
    /// Slot duration (s).
    pub tau_seconds: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        let e = EnergyParams::default();
        Self {
            theta0_watts: e.theta0,
            epsilon: e.epsilon,
            p_tx_max_watts: e.p_tx_max,
            theta_idle_nic: e.theta_idle_nic,
            theta_data_per_mb: e.theta_data,
            tau_seconds: e.tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VmSection {
    /// Discrete processing rates (MB/s), ascending, starting at 0.
    pub rates: Vec<f64>,
    /// Idle VM energy (J per slot).
    pub theta_idle: f64,
    /// Full-load VM energy (J per slot).
    pub theta_max: f64,
    /// Energy per VM switch event (J).
    pub switch_overhead: f64,
    /// Largest per-VM workload (MB).
    pub gamma_max: f64,
    /// Per-VM processing deadline (s).
    pub delta_seconds: f64,
    /// VM pool size cap.
    pub m_cap: usize,
    /// Minimum VMs kept on while the radio is active.
    pub m_min: usize,
}

impl Default for VmSection {
    fn default() -> Self {
        let v = VmParams::default();
        Self {
            rates: v.rates.clone(),
            theta_idle: v.theta_idle,
            theta_max: v.theta_max,
            switch_overhead: v.switch_overhead,
            gamma_max: v.gamma_max,
            delta_seconds: v.delta,
            m_cap: v.m_cap,
            m_min: v.m_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySection {
    /// Capacity (J).
    pub beta_max: f64,
    /// Never-serve-below threshold (J).
    pub beta_low: f64,
    /// Grid top-up target (J).
    pub beta_up: f64,
}

impl Default for BatterySection {
    fn default() -> Self {
        let b = BatteryParams::default();
        Self { beta_max: b.beta_max, beta_low: b.beta_low, beta_up: b.beta_up }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    /// Number of K-means clusters.
    pub k_clusters: usize,
    /// Neighborhood radius (m).
    pub e_d: f64,
    /// Similarity bandwidth (m).
    pub sigma_d: f64,
    /// Slots a switched-off BS stays off.
    pub commitment_slots: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { k_clusters: 4, e_d: DEFAULT_E_D, sigma_d: DEFAULT_SIGMA_D, commitment_slots: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySection {
    /// "synthetic" (uniform square) or "csv".
    pub source: String,
    /// Square side for the synthetic layout (m).
    pub side_meters: f64,
    /// CSV path (rows `bs_id,x_meters,y_meters`) when source = "csv".
    pub csv_path: Option<String>,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self { source: "synthetic".into(), side_meters: 150.0, csv_path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    /// "seasonal-persistence" or "recurrent".
    pub kind: ForecastKind,
    pub season_length: usize,
    pub hidden_units: usize,
    pub epochs: usize,
    pub train_fraction: f64,
}

impl Default for ForecastSection {
    fn default() -> Self {
        let s = ForecasterSpec::default();
        Self {
            kind: s.kind,
            season_length: s.season_length,
            hidden_units: s.hidden_units,
            epochs: s.epochs,
            train_fraction: s.train_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracesSection {
    /// Warm-up slots observed before the simulated window (forecaster
    /// history).
    pub train_slots: usize,
    /// Load archetype 1..=4, or 0 for a per-BS seeded pick.
    pub load_profile: u32,
    /// Harvest archetype 1..=3, or 0 for a per-BS seeded pick.
    pub energy_profile: u32,
    /// Largest per-slot load (MB).
    pub l_max: f64,
}

impl Default for TracesSection {
    fn default() -> Self {
        Self { train_slots: 192, load_profile: 0, energy_profile: 0, l_max: 30.0 }
    }
}

/// Complete scenario: physical parameters, policy, knobs, and trace
/// sources. Every field has a default; an empty TOML file is valid.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Root seed; every random stream is derived from it.
    pub master_seed: u64,
    pub policy: RunPolicy,
    /// Number of BS sites.
    pub n_bs: usize,
    /// Simulated slots (after the warm-up window).
    pub sim_slots: usize,
    /// Cost weight in [0, 1].
    pub eta: f64,
    pub search: SearchSection,
    pub energy: EnergySection,
    pub vm: VmSection,
    pub battery: BatterySection,
    pub network: NetworkSection,
    pub topology: TopologySection,
    pub forecast: ForecastSection,
    pub traces: TracesSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            policy: RunPolicy::Enaam,
            n_bs: 24,
            sim_slots: 336,
            eta: 0.5,
            search: SearchSection::default(),
            energy: EnergySection::default(),
            vm: VmSection::default(),
            battery: BatterySection::default(),
            network: NetworkSection::default(),
            topology: TopologySection::default(),
            forecast: ForecastSection::default(),
            traces: TracesSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config serialize: {e}")))
    }

    /// Field-level validation; the error message names the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 {
            return Err(Error::Config("n_bs must be at least 1".into()));
        }
        self.weights().validate()?;
        self.search_config().validate()?;
        self.site_params().validate()?;
        if self.network.k_clusters == 0 || self.network.k_clusters > self.n_bs {
            return Err(Error::Config(format!(
                "network.k_clusters must lie in 1..={}, got {}",
                self.n_bs, self.network.k_clusters
            )));
        }
        if !(self.network.e_d.is_finite() && self.network.e_d > 0.0) {
            return Err(Error::Config(format!(
                "network.e_d must be positive, got {}",
                self.network.e_d
            )));
        }
        if !(self.network.sigma_d.is_finite() && self.network.sigma_d > 0.0) {
            return Err(Error::Config(format!(
                "network.sigma_d must be positive, got {}",
                self.network.sigma_d
            )));
        }
        if self.network.commitment_slots == 0 {
            return Err(Error::Config("network.commitment_slots must be at least 1".into()));
        }
        match self.topology.source.as_str() {
            "synthetic" => {
                if !(self.topology.side_meters.is_finite() && self.topology.side_meters > 0.0) {
                    return Err(Error::Config(format!(
                        "topology.side_meters must be positive, got {}",
                        self.topology.side_meters
                    )));
                }
            }
            "csv" => {
                if self.topology.csv_path.is_none() {
                    return Err(Error::Config(
                        "topology.csv_path is required when topology.source = \"csv\"".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "topology.source must be \"synthetic\" or \"csv\", got \"{other}\""
                )));
            }
        }
        self.forecaster_spec().validate()?;
        if self.traces.train_slots == 0 {
            return Err(Error::Config("traces.train_slots must be at least 1".into()));
        }
        if self.traces.load_profile > crate::traces::LOAD_PROFILE_COUNT {
            return Err(Error::Config(format!(
                "traces.load_profile must lie in 0..={}, got {}",
                crate::traces::LOAD_PROFILE_COUNT,
                self.traces.load_profile
            )));
        }
        if self.traces.energy_profile > crate::traces::ENERGY_PROFILE_COUNT {
            return Err(Error::Config(format!(
                "traces.energy_profile must lie in 0..={}, got {}",
                crate::traces::ENERGY_PROFILE_COUNT,
                self.traces.energy_profile
            )));
        }
        Ok(())
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights { eta: self.eta }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            horizon: self.search.horizon,
            n_b_points: self.search.n_b_points,
            n_beta_levels: self.search.n_beta_levels,
            l_low: self.search.l_low,
        }
    }

    pub fn site_params(&self) -> SiteParams {
        SiteParams {
            energy: EnergyParams {
                theta0: self.energy.theta0_watts,
                epsilon: self.energy.epsilon,
                p_tx_max: self.energy.p_tx_max_watts,
                theta_idle_nic: self.energy.theta_idle_nic,
                theta_data: self.energy.theta_data_per_mb,
                tau: self.energy.tau_seconds,
                vm: VmParams {
                    rates: self.vm.rates.clone(),
                    f_max: self.vm.rates.last().copied().unwrap_or(0.0),
                    theta_idle: self.vm.theta_idle,
                    theta_max: self.vm.theta_max,
                    switch_overhead: self.vm.switch_overhead,
                    gamma_max: self.vm.gamma_max,
                    delta: self.vm.delta_seconds,
                    m_cap: self.vm.m_cap,
                    m_min: self.vm.m_min,
                },
            },
            battery: BatteryParams {
                beta_max: self.battery.beta_max,
                beta_low: self.battery.beta_low,
                beta_up: self.battery.beta_up,
            },
            l_max: self.traces.l_max,
        }
    }

    pub fn forecaster_spec(&self) -> ForecasterSpec {
        ForecasterSpec {
            kind: self.forecast.kind,
            season_length: self.forecast.season_length,
            hidden_units: self.forecast.hidden_units,
            epochs: self.forecast.epochs,
            train_fraction: self.forecast.train_fraction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_empty_file_is_complete_default() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.n_bs, 24);
        assert_eq!(cfg.sim_slots, 336);
        assert_eq!(cfg.search.horizon, 3);
        assert_eq!(cfg.vm.m_cap, 27);
        assert_eq!(cfg.battery.beta_max, 490_000.0);
    }

    #[test]
    fn test_roundtrip_materializes_defaults() {
        let cfg = ScenarioConfig::from_toml_str("eta = 0.3\n[vm]\ngamma_max = 10.0\n").unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.eta, 0.3);
        assert_eq!(back.vm.gamma_max, 10.0);
        assert_eq!(back.vm.m_cap, 27);
    }

    #[test]
    fn test_unknown_key_rejected() {
        let err = ScenarioConfig::from_toml_str("etaa = 0.3\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ScenarioConfig::from_toml_str("[vm]\ngama_max = 10.0\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn test_eta_out_of_range_names_field() {
        let err = ScenarioConfig::from_toml_str("eta = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("eta"), "message: {err}");
    }

    #[test]
    fn test_k_clusters_bounds() {
        let err = ScenarioConfig::from_toml_str("n_bs = 4\n[network]\nk_clusters = 5\n")
            .unwrap_err();
        assert!(err.to_string().contains("k_clusters"), "message: {err}");
    }

    #[test]
    fn test_policy_parse() {
        let cfg = ScenarioConfig::from_toml_str("policy = \"deta-r\"\n").unwrap();
        assert_eq!(cfg.policy, RunPolicy::DetaR);
        assert_eq!("enaam".parse::<RunPolicy>().unwrap(), RunPolicy::Enaam);
        assert!("espresso".parse::<RunPolicy>().is_err());
        assert_eq!(RunPolicy::DetaR.to_string(), "deta-r");
    }

    #[test]
    fn test_csv_topology_requires_path() {
        let err = ScenarioConfig::from_toml_str("[topology]\nsource = \"csv\"\n").unwrap_err();
        assert!(err.to_string().contains("csv_path"), "message: {err}");
    }

    #[test]
    fn test_vm_rates_feed_f_max() {
        let cfg =
            ScenarioConfig::from_toml_str("[vm]\nrates = [0.0, 10.0, 40.0]\n").unwrap();
        assert_eq!(cfg.site_params().energy.vm.f_max, 40.0);
    }
}
