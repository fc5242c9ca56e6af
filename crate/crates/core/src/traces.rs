//! Traffic and harvested-energy traces.
//!
//! A trace is one value per 30-minute slot: MB of offered load for traffic,
//! joules harvested for energy. Bundled synthetic generators produce diurnal
//! shapes (48 slots per day) with seeded multiplicative noise; measured data
//! can be ingested from header-less `slot,value` CSV files.

use crate::error::{Error, Result};
use crate::seeds;
use rand::Rng;
use std::path::Path;

/// Slots per day at 30 minutes per slot.
pub const SLOTS_PER_DAY: usize = 48;

/// Share of the offered load that is delay-sensitive and must be processed
/// by the edge server within the slot; the remainder is delay-tolerant.
pub const DELAY_SENSITIVE_SHARE: f64 = 0.8;

/// Number of bundled synthetic load profiles.
pub const LOAD_PROFILE_COUNT: u32 = 4;

/// Number of bundled synthetic harvest profiles.
pub const ENERGY_PROFILE_COUNT: u32 = 3;

/// Which kind of series a CSV file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Load,
    Energy,
}

/// Offered traffic for one BS, in MB per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    pub bs_id: usize,
    pub values: Vec<f64>,
    /// Upper bound on per-slot load; values never exceed it.
    pub l_max: f64,
    /// Slot duration in seconds.
    pub tau_s: f64,
}

impl TrafficTrace {
    pub fn new(bs_id: usize, values: Vec<f64>, l_max: f64, tau_s: f64) -> Result<Self> {
        if !(l_max.is_finite() && l_max > 0.0) {
            return Err(Error::Domain(format!("l_max must be positive, got {l_max}")));
        }
        if !(tau_s.is_finite() && tau_s > 0.0) {
            return Err(Error::Domain(format!("tau_s must be positive, got {tau_s}")));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 || v > l_max {
                return Err(Error::Validation(format!(
                    "traffic value {v} at slot {i} outside [0, {l_max}]"
                )));
            }
        }
        Ok(Self { bs_id, values, l_max, tau_s })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Harvested energy for one BS, in joules per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub bs_id: usize,
    pub values: Vec<f64>,
}

impl EnergyTrace {
    pub fn new(bs_id: usize, values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "harvest value {v} at slot {i} is negative or non-finite"
                )));
            }
        }
        Ok(Self { bs_id, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Split of one slot's offered load into delay-sensitive and delay-tolerant
/// parts, both in MB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSplit {
    /// Delay-sensitive share, processed by the edge server.
    pub gamma: f64,
    /// Delay-tolerant share.
    pub gamma_prime: f64,
}

/// Splits offered load `l` (MB) 80/20 into delay-sensitive and
/// delay-tolerant parts.
pub fn split_workload(l: f64) -> Result<WorkloadSplit> {
    if !l.is_finite() || l < 0.0 {
        return Err(Error::Domain(format!("load must be non-negative, got {l}")));
    }
    Ok(WorkloadSplit {
        gamma: DELAY_SENSITIVE_SHARE * l,
        gamma_prime: l - DELAY_SENSITIVE_SHARE * l,
    })
}

/// Gaussian bump on the 24-hour circle.
fn bump(h: f64, center: f64, width: f64) -> f64 {
    let mut d = (h - center).abs();
    if d > 12.0 {
        d = 24.0 - d;
    }
    (-d * d / (2.0 * width * width)).exp()
}

/// Daily load shape as a fraction of `l_max`, before noise. `h` is the hour
/// of day in [0, 24).
fn load_shape(profile_id: u32, h: f64) -> f64 {
    let s = match profile_id {
        // Residential: quiet nights, long build through the afternoon into a
        // broad evening peak.
        1 => {
            0.02 + 0.20 * bump(h, 12.0, 2.8)
                + 0.48 * bump(h, 17.0, 2.6)
                + 1.00 * bump(h, 20.5, 1.9)
        }
        // Office: morning and mid-afternoon humps with a lunch saddle.
        2 => {
            0.02 + 0.85 * bump(h, 10.5, 1.9)
                + 0.78 * bump(h, 15.5, 2.1)
                + 0.20 * bump(h, 13.0, 3.5)
        }
        // Commuter corridor: sharp rush-hour spikes, moderate midday.
        3 => {
            0.02 + 0.80 * bump(h, 8.0, 1.2)
                + 0.95 * bump(h, 18.0, 1.4)
                + 0.32 * bump(h, 13.0, 3.0)
        }
        // Nightlife district: active late evening through the small hours,
        // quiet mornings.
        4 => {
            0.06 + 0.85 * bump(h, 23.0, 1.9)
                + 0.55 * bump(h, 1.5, 1.7)
                + 0.28 * bump(h, 14.0, 3.2)
        }
        _ => unreachable!("profile id validated by caller"),
    };
    s.min(1.0)
}

/// Synthesizes a diurnal traffic trace.
///
/// `profile_id` selects one of [`LOAD_PROFILE_COUNT`] archetypes; the same
/// `(profile_id, seed)` pair always yields the same series. Values are in MB
/// per slot, clamped to `[0, l_max]`, with ±5% per-slot noise.
pub fn synthesize_load_profile(
    profile_id: u32,
    seed: u64,
    slots: usize,
    l_max: f64,
) -> Result<Vec<f64>> {
    if profile_id == 0 || profile_id > LOAD_PROFILE_COUNT {
        return Err(Error::Domain(format!(
            "load profile id must be in 1..={LOAD_PROFILE_COUNT}, got {profile_id}"
        )));
    }
    if slots == 0 {
        return Err(Error::Domain("slot count must be at least 1".into()));
    }
    if !(l_max.is_finite() && l_max > 0.0) {
        return Err(Error::Domain(format!("l_max must be positive, got {l_max}")));
    }
    let mut rng = seeds::rng(seed, &[seeds::stream::LOAD_TRACE, profile_id as u64]);
    let out = (0..slots)
        .map(|s| {
            let h = (s % SLOTS_PER_DAY) as f64 * 24.0 / SLOTS_PER_DAY as f64;
            let noise: f64 = rng.gen_range(-0.05..0.05);
            (load_shape(profile_id, h) * l_max * (1.0 + noise)).clamp(0.0, l_max)
        })
        .collect();
    Ok(out)
}

/// Daily harvest shape in joules. Zero outside the daylight window,
/// sine-squared bell within it.
fn energy_shape(profile_id: u32, h: f64, beta_max: f64) -> f64 {
    // (sunrise, sunset, peak as a fraction of battery capacity)
    let (rise, set, peak) = match profile_id {
        1 => (7.0, 19.0, 0.115),
        2 => (6.5, 19.5, 0.088),
        3 => (7.5, 18.5, 0.062),
        _ => unreachable!("profile id validated by caller"),
    };
    if h <= rise || h >= set {
        return 0.0;
    }
    let x = std::f64::consts::PI * (h - rise) / (set - rise);
    peak * beta_max * x.sin().powi(2)
}

/// Synthesizes a diurnal harvested-energy trace.
///
/// `profile_id` selects one of [`ENERGY_PROFILE_COUNT`] solar archetypes.
/// Values are joules per slot, zero outside the daylight window, and never
/// exceed `beta_max` after scaling.
pub fn synthesize_energy_profile(
    profile_id: u32,
    seed: u64,
    slots: usize,
    beta_max: f64,
) -> Result<Vec<f64>> {
    if profile_id == 0 || profile_id > ENERGY_PROFILE_COUNT {
        return Err(Error::Domain(format!(
            "energy profile id must be in 1..={ENERGY_PROFILE_COUNT}, got {profile_id}"
        )));
    }
    if slots == 0 {
        return Err(Error::Domain("slot count must be at least 1".into()));
    }
    if !(beta_max.is_finite() && beta_max > 0.0) {
        return Err(Error::Domain(format!("beta_max must be positive, got {beta_max}")));
    }
    let mut rng = seeds::rng(seed, &[seeds::stream::ENERGY_TRACE, profile_id as u64]);
    let out = (0..slots)
        .map(|s| {
            let h = (s % SLOTS_PER_DAY) as f64 * 24.0 / SLOTS_PER_DAY as f64;
            let noise: f64 = rng.gen_range(-0.05..0.05);
            (energy_shape(profile_id, h, beta_max) * (1.0 + noise)).clamp(0.0, beta_max)
        })
        .collect();
    Ok(out)
}

/// Reads a header-less `slot,value` CSV trace.
///
/// Slots must start at 0 and be contiguous; values must be non-negative
/// finite numbers in the original units (MB for load, J for energy).
pub fn load_trace_csv(path: &Path, kind: TraceKind) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let unit = match kind {
        TraceKind::Load => "MB",
        TraceKind::Energy => "J",
    };
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let slot_field = parts.next().unwrap_or("");
        let value_field = parts
            .next()
            .ok_or_else(|| Error::Parse { row, msg: "expected `slot,value`".into() })?;
        if parts.next().is_some() {
            return Err(Error::Parse { row, msg: "expected exactly two columns".into() });
        }
        let slot: usize = slot_field.trim().parse().map_err(|_| Error::Parse {
            row,
            msg: format!("invalid slot index `{slot_field}`"),
        })?;
        let value: f64 = value_field.trim().parse().map_err(|_| Error::Parse {
            row,
            msg: format!("invalid value `{value_field}`"),
        })?;
        if slot != values.len() {
            return Err(Error::Validation(format!(
                "row {row}: slot {slot} out of order, expected {}",
                values.len()
            )));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Validation(format!(
                "row {row}: value {value} {unit} is negative or non-finite"
            )));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Validation(format!("{} holds no rows", path.display())));
    }
    Ok(values)
}
