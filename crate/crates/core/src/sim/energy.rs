//! Affine per-node energy model: baseline drain plus a fixed cost per reconfiguration and per
//! controller status update.

use crate::error::{Error, Result};

/// Reconfiguration period (s) at which the default model yields its reference overhead.
pub const REFERENCE_RECONF_PERIOD_S: f64 = 20.0;
/// Energy overhead over baseline at the reference reconfiguration period.
pub const REFERENCE_RECONF_OVERHEAD: f64 = 0.20;
/// Status-update period (s) at which the default model yields its reference overhead.
pub const REFERENCE_STATUS_PERIOD_S: f64 = 3.0;
/// Energy overhead over baseline at the reference status-update period.
pub const REFERENCE_STATUS_OVERHEAD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Energy units per second with no control-plane activity.
    pub baseline_rate: f64,
    /// Energy units per reconfiguration.
    pub per_reconfiguration: f64,
    /// Energy units per status update.
    pub per_status_update: f64,
}

impl EnergyModel {
    /// Per-event costs chosen so that one reconfiguration every 20 s costs 20% on top of the
    /// baseline and one status update every 3 s costs 1%.
    pub fn calibrated(baseline_rate: f64) -> Self {
        EnergyModel {
            baseline_rate,
            per_reconfiguration: REFERENCE_RECONF_OVERHEAD * baseline_rate * REFERENCE_RECONF_PERIOD_S,
            per_status_update: REFERENCE_STATUS_OVERHEAD * baseline_rate * REFERENCE_STATUS_PERIOD_S,
        }
    }

    pub fn baseline(&self, duration_s: f64) -> f64 {
        self.baseline_rate * duration_s
    }

    /// Fractional overhead of an activity count over the baseline for the same duration.
    pub fn overhead(&self, reconfigurations: u64, status_updates: u64, duration_s: f64) -> Result<f64> {
        let total = energy_model(self, reconfigurations, status_updates, duration_s)?;
        let base = self.baseline(duration_s);
        if base == 0.0 {
            return Err(Error::InvalidScenario("baseline energy is zero".into()));
        }
        Ok((total - base) / base)
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel::calibrated(1.0)
    }
}

/// Energy spent by one node over `duration_s` seconds.
pub fn energy_model(model: &EnergyModel, reconfigurations: u64, status_updates: u64, duration_s: f64) -> Result<f64> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidScenario(format!("duration must be positive, got {duration_s}")));
    }
    Ok(model.baseline_rate * duration_s
        + model.per_reconfiguration * reconfigurations as f64
        + model.per_status_update * status_updates as f64)
}

/// Number of strictly periodic events in `(0, duration_s]`.
pub fn periodic_count(period_s: f64, duration_s: f64) -> u64 {
    if period_s <= 0.0 {
        return 0;
    }
    // tolerate float noise right at a multiple of the period
    ((duration_s / period_s) + 1e-9).floor() as u64
}
