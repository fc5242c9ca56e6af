//! Site energy model and battery dynamics.
//!
//! Per slot, a site consumes radio energy (scaled by the sleep factor and
//! the served traffic fraction), edge-server energy (one term per running
//! VM plus switching overhead), and data-transfer energy between BS and
//! edge server. The battery integrates harvest minus consumption, with a
//! grid top-up whenever the level starts the slot below the buffer target.
//!
//! Units: energy in joules per slot, powers in watts (multiplied by the
//! slot length on entry), traffic in MB, rates in MB/s.

use crate::error::{Error, Result};

/// Radio operating mode of a BS.
///
/// `Sleep` keeps only a low-power receiver section alive (the `epsilon`
/// fraction of operating power); `Active` is full operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioMode {
    Sleep,
    Active,
}

impl RadioMode {
    /// Multiplier applied to the BS operating power.
    pub fn factor(self, epsilon: f64) -> f64 {
        match self {
            RadioMode::Sleep => epsilon,
            RadioMode::Active => 1.0,
        }
    }
}

/// Edge-server VM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VmParams {
    /// Discrete processing rates in MB/s, ascending, starting at 0 (off).
    pub rates: Vec<f64>,
    /// Maximum processing rate (last entry of `rates`).
    pub f_max: f64,
    /// Energy of an idle running VM, J per slot.
    pub theta_idle: f64,
    /// Energy of a fully loaded VM, J per slot.
    pub theta_max: f64,
    /// Overhead per VM on/off switch event, J.
    pub switch_overhead: f64,
    /// Maximum workload one VM accepts per slot, MB.
    pub gamma_max: f64,
    /// Per-slot processing deadline, s.
    pub delta: f64,
    /// Maximum number of VMs.
    pub m_cap: usize,
    /// Minimum number of running VMs while the radio is active.
    pub m_min: usize,
}

impl Default for VmParams {
    fn default() -> Self {
        Self {
            rates: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            f_max: 20.0,
            theta_idle: 4.0,
            theta_max: 10.0,
            switch_overhead: 20.0,
            gamma_max: 5.0,
            delta: 0.8,
            m_cap: 27,
            m_min: 1,
        }
    }
}

impl VmParams {
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.rates[0] != 0.0 {
            return Err(Error::Config("vm.rates must start at 0".into()));
        }
        if self.rates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("vm.rates must be strictly ascending".into()));
        }
        if (self.f_max - self.rates[self.rates.len() - 1]).abs() > 1e-12 {
            return Err(Error::Config("vm.f_max must equal the largest rate".into()));
        }
        if !(self.theta_idle >= 0.0 && self.theta_max >= self.theta_idle) {
            return Err(Error::Config(
                "vm.theta_idle_vm_j/theta_max_vm_j must satisfy 0 <= idle <= max".into(),
            ));
        }
        if self.switch_overhead < 0.0 {
            return Err(Error::Config("vm.switch_overhead_j must be non-negative".into()));
        }
        if !(self.gamma_max.is_finite() && self.gamma_max > 0.0) {
            return Err(Error::Config("vm.gamma_max_mb must be positive".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Config("vm.delta_s must be positive".into()));
        }
        if self.m_min == 0 || self.m_min > self.m_cap {
            return Err(Error::Config("vm.m_min must be in 1..=m_cap".into()));
        }
        if self.gamma_max > self.f_max * self.delta {
            return Err(Error::Config(
                "vm.gamma_max_mb exceeds what one VM can process within the deadline".into(),
            ));
        }
        Ok(())
    }
}

/// Site energy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    /// BS operating power, W.
    pub theta0: f64,
    /// Sleep-mode fraction of operating power, in (0, 1).
    pub epsilon: f64,
    /// Radio power attributable to serving traffic at full load, W.
    pub p_tx_max: f64,
    /// Always-on BS<->server link energy, J per slot.
    pub theta_idle_nic: f64,
    /// BS<->server transfer energy, J per MB.
    pub theta_data: f64,
    /// Slot length, s.
    pub tau: f64,
    pub vm: VmParams,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            theta0: 10.6,
            epsilon: 0.3,
            p_tx_max: 2.0,
            theta_idle_nic: 3.0,
            theta_data: 6.0,
            tau: 1800.0,
            vm: VmParams::default(),
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(Error::Config("energy.theta0_w must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("energy.epsilon must be in (0, 1)".into()));
        }
        if self.p_tx_max < 0.0 {
            return Err(Error::Config("energy.p_tx_max_w must be non-negative".into()));
        }
        if self.theta_idle_nic < 0.0 || self.theta_data < 0.0 {
            return Err(Error::Config(
                "energy.theta_idle_nic_j/theta_data_j_per_mb must be non-negative".into(),
            ));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config("energy.tau_s must be positive".into()));
        }
        self.vm.validate()
    }
}

/// Battery parameters, all in joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryParams {
    pub beta_max: f64,
    /// Below this level the controller forces the radio to sleep.
    pub beta_low: f64,
    /// Grid top-up target: slots starting below it purchase the difference.
    pub beta_up: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self { beta_max: 490_000.0, beta_low: 147_000.0, beta_up: 343_000.0 }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.beta_low && self.beta_low < self.beta_up && self.beta_up < self.beta_max) {
            return Err(Error::Config(
                "battery levels must satisfy 0 < beta_low_j < beta_up_j < beta_max_j".into(),
            ));
        }
        Ok(())
    }
}

/// Per-slot site energy, split by subsystem.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyBreakdown {
    pub theta_bs: f64,
    pub theta_mec: f64,
    pub theta_tx: f64,
    pub theta_tot: f64,
}

/// Result of one battery update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    /// Level at the next slot boundary, clamped to `[0, beta_max]`.
    pub beta_next: f64,
    /// Grid energy purchased at the slot start.
    pub purchased: f64,
    /// Harvest lost to the capacity clamp.
    pub discarded: f64,
    /// Shortfall absorbed by the zero clamp (demand the battery could not
    /// cover).
    pub deficit: f64,
}

/// Quadratic utilization factor of a VM processing at rate `f`.
pub fn load_factor(f: f64, f_max: f64) -> Result<f64> {
    if !(f_max.is_finite() && f_max > 0.0) {
        return Err(Error::Domain(format!("f_max must be positive, got {f_max}")));
    }
    if !f.is_finite() || f < 0.0 || f > f_max {
        return Err(Error::Domain(format!("rate {f} outside [0, {f_max}]")));
    }
    let r = f / f_max;
    Ok(r * r)
}

/// Energy of one running VM at utilization `alpha`, J per slot.
pub fn vm_op_energy(alpha: f64, vm: &VmParams) -> Result<f64> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(vm.theta_idle + alpha * (vm.theta_max - vm.theta_idle))
}

/// Edge-server energy: one operating term per running VM plus switching
/// overhead, J per slot.
pub fn mec_energy(alphas: &[f64], switch_events: usize, vm: &VmParams) -> Result<f64> {
    let mut total = switch_events as f64 * vm.switch_overhead;
    for &a in alphas {
        total += vm_op_energy(a, vm)?;
    }
    Ok(total)
}

/// Radio section energy, J per slot.
///
/// `served_fraction` is served traffic relative to the per-slot maximum; the
/// load-dependent term only applies while the radio is active.
pub fn bs_energy(mode: RadioMode, served_fraction: f64, p: &EnergyParams) -> Result<f64> {
    if !served_fraction.is_finite() || !(0.0..=1.0).contains(&served_fraction) {
        return Err(Error::Domain(format!("served fraction {served_fraction} outside [0, 1]")));
    }
    let base = mode.factor(p.epsilon) * p.theta0 * p.tau;
    let load = match mode {
        RadioMode::Active => served_fraction * p.p_tx_max * p.tau,
        RadioMode::Sleep => 0.0,
    };
    Ok(base + load)
}

/// BS<->edge-server transfer energy for `b_mb` of data, J per slot.
pub fn tx_energy(b_mb: f64, p: &EnergyParams) -> Result<f64> {
    if !b_mb.is_finite() || b_mb < 0.0 {
        return Err(Error::Domain(format!("transfer volume {b_mb} MB is negative")));
    }
    Ok(p.theta_idle_nic + p.theta_data * b_mb)
}

/// Total site energy for one slot, split by subsystem.
pub fn total_energy(
    mode: RadioMode,
    served_fraction: f64,
    alphas: &[f64],
    switch_events: usize,
    b_mb: f64,
    p: &EnergyParams,
) -> Result<EnergyBreakdown> {
    let theta_bs = bs_energy(mode, served_fraction, p)?;
    let theta_mec = mec_energy(alphas, switch_events, &p.vm)?;
    let theta_tx = tx_energy(b_mb, p)?;
    Ok(EnergyBreakdown { theta_bs, theta_mec, theta_tx, theta_tot: theta_bs + theta_mec + theta_tx })
}

/// Smallest positive processing rate that finishes `gamma_mb` within the
/// deadline; 0 when there is nothing to process.
pub fn required_rate(gamma_mb: f64, vm: &VmParams) -> Result<f64> {
    if !gamma_mb.is_finite() || gamma_mb < 0.0 {
        return Err(Error::Domain(format!("workload {gamma_mb} MB is negative")));
    }
    if gamma_mb == 0.0 {
        return Ok(0.0);
    }
    for &f in &vm.rates {
        if f > 0.0 && gamma_mb / f <= vm.delta {
            return Ok(f);
        }
    }
    Err(Error::Infeasible(format!(
        "no rate in {:?} MB/s processes {gamma_mb} MB within {} s",
        vm.rates, vm.delta
    )))
}

/// Advances the battery by one slot.
///
/// A grid purchase of `beta_up - beta` happens at the slot start whenever
/// the level is below the buffer target; the level is then integrated with
/// the harvest `h` and consumption `theta_tot` and clamped to
/// `[0, beta_max]`.
pub fn step_battery(beta: f64, h: f64, theta_tot: f64, bp: &BatteryParams) -> Result<BatteryStep> {
    if !beta.is_finite() || beta < 0.0 || beta > bp.beta_max {
        return Err(Error::Domain(format!("battery level {beta} outside [0, {}]", bp.beta_max)));
    }
    if !h.is_finite() || h < 0.0 {
        return Err(Error::Domain(format!("harvest {h} is negative")));
    }
    if !theta_tot.is_finite() || theta_tot < 0.0 {
        return Err(Error::Domain(format!("consumption {theta_tot} is negative")));
    }
    let purchased = (bp.beta_up - beta).max(0.0);
    let unclamped = beta + purchased + h - theta_tot;
    let beta_next = unclamped.clamp(0.0, bp.beta_max);
    Ok(BatteryStep {
        beta_next,
        purchased,
        discarded: (unclamped - bp.beta_max).max(0.0),
        deficit: (-unclamped).max(0.0),
    })
}
