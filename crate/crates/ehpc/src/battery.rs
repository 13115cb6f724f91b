//! Storage battery model: capacity bounds, per-slot charge/discharge limits,
//! efficiency coefficients, and the slot state transition.
//!
//! Units are fixed as joules (energy), watts (power), and seconds (time);
//! the slot duration `dt` is explicit everywhere and never assumed to be 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point grace applied before feasibility checks: a discharge request
/// exceeding the available energy by at most this amount (in joules) is clamped
/// down; anything larger is a hard error.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error)]
pub enum BatteryError {
    #[error("invalid battery config: {0}")]
    InvalidConfig(String),
    #[error("transmit power {p} W outside [0, {p_max}] W")]
    PowerOutOfRange { p: f64, p_max: f64 },
    #[error("state of battery {e_b} J outside [{e_min}, {e_max}] J")]
    SobOutOfRange { e_b: f64, e_min: f64, e_max: f64 },
    #[error("negative energy arrival {e_a} J")]
    NegativeArrival { e_a: f64 },
    #[error(
        "infeasible discharge: drawing {drawn} J but only {available} J above the minimum level"
    )]
    InfeasibleDischarge { drawn: f64, available: f64 },
}

/// Physical battery parameters.
///
/// `rho_c` in (0, 1] is the charging efficiency (stored energy per arrived
/// joule) and `rho_d` in [1, ∞) the discharging efficiency (joules drawn per
/// joule delivered to the transmitter). Both default to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatteryConfig {
    /// Minimum allowed energy level (J).
    pub e_min: f64,
    /// Maximum allowed energy level (J), i.e. battery capacity bound.
    pub e_max: f64,
    /// Maximum charging amount per slot (J).
    pub e_c_max: f64,
    /// Maximum transmit power drawn from the battery (W).
    pub p_max: f64,
    /// Slot duration (s).
    pub dt: f64,
    /// Charging efficiency in (0, 1].
    pub rho_c: f64,
    /// Discharging efficiency in [1, ∞).
    pub rho_d: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            e_min: 0.0,
            e_max: 50.0,
            e_c_max: 0.3,
            p_max: 0.5,
            dt: 1.0,
            rho_c: 1.0,
            rho_d: 1.0,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<(), BatteryError> {
        let err = |msg: String| Err(BatteryError::InvalidConfig(msg));
        if !(self.e_min < self.e_max) {
            return err(format!(
                "e_min {} must be below e_max {}",
                self.e_min, self.e_max
            ));
        }
        if !(self.dt > 0.0) {
            return err(format!("dt {} must be positive", self.dt));
        }
        if !(self.p_max > 0.0) {
            return err(format!("p_max {} must be positive", self.p_max));
        }
        if !(self.e_c_max > 0.0) {
            return err(format!("e_c_max {} must be positive", self.e_c_max));
        }
        if self.dt * self.p_max > self.e_max - self.e_min {
            return err(format!(
                "per-slot discharge dt*p_max = {} exceeds capacity {}",
                self.dt * self.p_max,
                self.e_max - self.e_min
            ));
        }
        if self.e_c_max > self.dt * self.p_max {
            return err(format!(
                "e_c_max {} exceeds per-slot discharge dt*p_max {}",
                self.e_c_max,
                self.dt * self.p_max
            ));
        }
        if self.headroom() <= 0.0 {
            return err(format!(
                "capacity {} must exceed e_c_max + dt*p_max = {}",
                self.e_max - self.e_min,
                self.e_c_max + self.dt * self.p_max
            ));
        }
        if !(self.rho_c > 0.0 && self.rho_c <= 1.0) {
            return err(format!("rho_c {} must lie in (0, 1]", self.rho_c));
        }
        if !(self.rho_d >= 1.0) {
            return err(format!("rho_d {} must be >= 1", self.rho_d));
        }
        Ok(())
    }

    /// Usable capacity e_max − e_min (J).
    pub fn capacity(&self) -> f64 {
        self.e_max - self.e_min
    }

    /// Capacity left over the per-slot charge and discharge amounts,
    /// e_max − e_min − e_c_max − dt·p_max. Must be positive for a valid
    /// drift-weight range.
    pub fn headroom(&self) -> f64 {
        self.e_max - self.e_min - self.e_c_max - self.dt * self.p_max
    }

    /// Largest feasible transmit power at energy level `e_b`: limited by both
    /// `p_max` and the energy available above `e_min` this slot.
    pub fn feasible_power_cap(&self, e_b: f64) -> f64 {
        self.p_max
            .min(((e_b - self.e_min) / (self.rho_d * self.dt)).max(0.0))
    }

    fn check_power(&self, p: f64) -> Result<f64, BatteryError> {
        if p < -FEASIBILITY_TOL || p > self.p_max + FEASIBILITY_TOL {
            return Err(BatteryError::PowerOutOfRange {
                p,
                p_max: self.p_max,
            });
        }
        Ok(p.clamp(0.0, self.p_max))
    }

    fn check_sob(&self, e_b: f64) -> Result<(), BatteryError> {
        if e_b < self.e_min - FEASIBILITY_TOL || e_b > self.e_max + FEASIBILITY_TOL {
            return Err(BatteryError::SobOutOfRange {
                e_b,
                e_min: self.e_min,
                e_max: self.e_max,
            });
        }
        Ok(())
    }
}

/// State of battery (SOB) at the beginning of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    /// Stored energy (J); always within [e_min, e_max].
    pub e_b: f64,
}

/// Energy actually harvested into the battery during a slot, given transmit
/// power `p` and arrived energy `e_a`: the minimum of the room left at the end
/// of the slot, the usable arrival `rho_c * e_a`, and the per-slot charge cap
/// `rho_c * e_c_max`.
pub fn harvestable(cfg: &BatteryConfig, e_b: f64, p: f64, e_a: f64) -> Result<f64, BatteryError> {
    let p = cfg.check_power(p)?;
    cfg.check_sob(e_b)?;
    if e_a < 0.0 {
        return Err(BatteryError::NegativeArrival { e_a });
    }
    let room = cfg.e_max - (e_b - cfg.dt * p);
    Ok(room
        .min(cfg.rho_c * e_a)
        .min(cfg.rho_c * cfg.e_c_max)
        .max(0.0))
}

/// Advances the battery one slot: draws `rho_d * dt * p` joules for
/// transmission, harvests what fits, and returns the new state together with
/// the harvested amount.
///
/// Discharging below `e_min` is a hard error; controllers must never produce
/// such a power. Requests over the limit by at most [`FEASIBILITY_TOL`] are
/// clamped to absorb floating-point round-off.
pub fn step(
    cfg: &BatteryConfig,
    state: &BatteryState,
    p: f64,
    e_a: f64,
) -> Result<(BatteryState, f64), BatteryError> {
    let mut p = cfg.check_power(p)?;
    cfg.check_sob(state.e_b)?;
    let available = state.e_b - cfg.e_min;
    let drawn = cfg.rho_d * cfg.dt * p;
    if drawn > available {
        if drawn - available > FEASIBILITY_TOL {
            return Err(BatteryError::InfeasibleDischarge { drawn, available });
        }
        p = available / (cfg.rho_d * cfg.dt);
    }
    let e_s = harvestable(cfg, state.e_b, p, e_a)?;
    let e_b_next = (state.e_b - cfg.rho_d * cfg.dt * p + e_s).clamp(cfg.e_min, cfg.e_max);
    Ok((BatteryState { e_b: e_b_next }, e_s))
}
