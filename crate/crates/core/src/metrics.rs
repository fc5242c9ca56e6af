//! Run output: per-slot per-BS records, per-slot savings against the
//! no-management baseline, and CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::RunPolicy;
use serde::Serialize;

/// One BS's accounting for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub bs_id: usize,
    /// Radio energy (J).
    pub theta_bs: f64,
    /// VM-pool energy including switch events (J).
    pub theta_mec: f64,
    /// Data-transfer energy (J).
    pub theta_tx: f64,
    /// Site total (J).
    pub theta_tot: f64,
    /// Grid purchase (J).
    pub q: f64,
    /// Battery at the slot's end (J).
    pub beta: f64,
    /// Delay-sensitive MB served at this site.
    pub served_mb: f64,
    /// Delay-sensitive MB neither served here nor handed off.
    pub dropped_mb: f64,
    /// Numeric radio-mode factor (epsilon or 1).
    pub zeta: f64,
    /// Harvested energy actually received (J); not in the CSV.
    pub harvested: f64,
    /// Harvest discarded at the capacity clamp (J); not in the CSV.
    pub discarded: f64,
    /// Consumption beyond the stored charge, absorbed at the zero clamp
    /// (J); not in the CSV.
    pub deficit: f64,
    /// VMs kept active this slot; not in the CSV.
    pub m_count: usize,
    /// Worst per-VM sojourn time gamma_m/f_m this slot (s); not in the
    /// CSV.
    pub max_mu: f64,
}

/// Full run output. Records are ordered by (slot, bs_id).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub policy: RunPolicy,
    pub n_bs: usize,
    pub records: Vec<SlotRecord>,
    /// Network-wide managed energy per slot (J).
    pub managed_theta_per_slot: Vec<f64>,
    /// Network-wide no-management energy per slot (J).
    pub baseline_theta_per_slot: Vec<f64>,
    /// `100 * (1 - managed/baseline)` per slot.
    pub savings_percent: Vec<f64>,
}

/// Aggregate figures serialized as the summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub policy: String,
    pub n_bs: usize,
    pub slots: usize,
    pub mean_savings_percent: Option<f64>,
    pub total_managed_j: f64,
    pub total_baseline_j: f64,
    pub total_grid_j: f64,
    pub total_served_mb: f64,
    pub total_dropped_mb: f64,
    pub mean_grid_j_per_slot: Option<f64>,
}

impl MetricsReport {
    pub fn slots(&self) -> usize {
        self.savings_percent.len()
    }

    /// Mean of the per-slot savings series; `None` for an empty run.
    pub fn mean_savings_percent(&self) -> Option<f64> {
        if self.savings_percent.is_empty() {
            return None;
        }
        Some(self.savings_percent.iter().sum::<f64>() / self.savings_percent.len() as f64)
    }

    pub fn summary(&self) -> Summary {
        let slots = self.slots();
        let total_grid: f64 = self.records.iter().map(|r| r.q).sum();
        Summary {
            policy: self.policy.to_string(),
            n_bs: self.n_bs,
            slots,
            mean_savings_percent: self.mean_savings_percent(),
            total_managed_j: self.managed_theta_per_slot.iter().sum(),
            total_baseline_j: self.baseline_theta_per_slot.iter().sum(),
            total_grid_j: total_grid,
            total_served_mb: self.records.iter().map(|r| r.served_mb).sum(),
            total_dropped_mb: self.records.iter().map(|r| r.dropped_mb).sum(),
            mean_grid_j_per_slot: if slots == 0 { None } else { Some(total_grid / slots as f64) },
        }
    }

    /// Writes the per-slot records as CSV with the header
    /// `slot,bs_id,theta_bs,theta_mec,theta_tx,theta_tot,q,beta,served_mb,dropped_mb,zeta`.
    pub fn write_metrics_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "slot,bs_id,theta_bs,theta_mec,theta_tx,theta_tot,q,beta,served_mb,dropped_mb,zeta"
        )?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.slot,
                r.bs_id,
                r.theta_bs,
                r.theta_mec,
                r.theta_tx,
                r.theta_tot,
                r.q,
                r.beta,
                r.served_mb,
                r.dropped_mb,
                r.zeta
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.summary())
            .map_err(|e| Error::Validation(format!("summary serialize: {e}")))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(slot: usize, bs_id: usize) -> SlotRecord {
        SlotRecord {
            slot,
            bs_id,
            theta_bs: 100.0,
            theta_mec: 20.0,
            theta_tx: 5.0,
            theta_tot: 125.0,
            q: 50.0,
            beta: 340_000.0,
            served_mb: 8.0,
            dropped_mb: 2.0,
            zeta: 1.0,
            harvested: 30.0,
            discarded: 0.0,
            deficit: 0.0,
            m_count: 2,
            max_mu: 0.5,
        }
    }

    fn report() -> MetricsReport {
        MetricsReport {
            policy: RunPolicy::Enaam,
            n_bs: 2,
            records: vec![record(0, 0), record(0, 1), record(1, 0), record(1, 1)],
            managed_theta_per_slot: vec![250.0, 250.0],
            baseline_theta_per_slot: vec![1000.0, 500.0],
            savings_percent: vec![75.0, 50.0],
        }
    }

    #[test]
    fn test_mean_savings() {
        assert_eq!(report().mean_savings_percent(), Some(62.5));
        let empty = MetricsReport {
            policy: RunPolicy::None,
            n_bs: 1,
            records: Vec::new(),
            managed_theta_per_slot: Vec::new(),
            baseline_theta_per_slot: Vec::new(),
            savings_percent: Vec::new(),
        };
        assert_eq!(empty.mean_savings_percent(), None);
        assert_eq!(empty.summary().slots, 0);
    }

    #[test]
    fn test_summary_totals() {
        let s = report().summary();
        assert_eq!(s.policy, "enaam");
        assert_eq!(s.slots, 2);
        assert_eq!(s.total_managed_j, 500.0);
        assert_eq!(s.total_baseline_j, 1500.0);
        assert_eq!(s.total_grid_j, 200.0);
        assert_eq!(s.total_served_mb, 32.0);
        assert_eq!(s.total_dropped_mb, 8.0);
        assert_eq!(s.mean_grid_j_per_slot, Some(100.0));
    }

    #[test]
    fn test_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        report().write_metrics_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "slot,bs_id,theta_bs,theta_mec,theta_tx,theta_tot,q,beta,served_mb,dropped_mb,zeta"
        );
        assert_eq!(lines.count(), 4);
        assert!(text.contains("0,1,100,20,5,125,50,340000,8,2,1"));
    }

    #[test]
    fn test_summary_json_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        report().write_summary_json(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["policy"], "enaam");
        assert_eq!(v["mean_savings_percent"], 62.5);
        assert_eq!(v["n_bs"], 2);
    }
}
