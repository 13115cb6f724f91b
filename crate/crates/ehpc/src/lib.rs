//! Online power control for an energy-harvesting transmitter over fading
//! channels.
//!
//! A transmitter draws power from a finite battery charged by a random energy
//! arrival process and sends over a fading channel. The controller here picks
//! the per-slot transmit power from the current battery level and channel
//! gain alone — no arrival or fading statistics — by minimizing a
//! drift-plus-penalty objective on a virtual queue, which yields a three-stage
//! closed-form law with a water-filling-like middle band. The crate bundles:
//!
//! * [`battery`] — the storage model: capacity bounds, per-slot charge and
//!   discharge limits, efficiency coefficients, and the slot transition.
//! * [`stochastic`] — compound-Poisson energy arrivals and fading gains
//!   (scalar Rayleigh, MISO/SIMO branch sums, MIMO largest singular value),
//!   with counter-based reproducible draws.
//! * [`controller`] — the closed-form power law, the virtual-queue machinery,
//!   and the outage rule for unbounded fading.
//! * [`baselines`] — energy-adaptive water-filling, greedy, and power-halving
//!   comparison controllers.
//! * [`bounds`] — the drift constant, admissible weight range, optimality-gap
//!   bounds, the outage constant, and the special functions behind them.
//! * [`oracle`] — a small-instance value-iteration oracle for the optimal
//!   long-term rate, used to check the gap bound empirically.
//! * [`sim`] — the Monte Carlo slot loop, replica aggregation, and parameter
//!   sweeps.
//! * [`config`] / [`cli`] — TOML scenarios and the `run`/`sweep`/`bounds`/
//!   `oracle` command-line front end.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `convergence` for the headline comparison and `bounds_report` for the
//! closed-form constants.

// validation guards are written `!(a < b)` so that NaN inputs fail closed
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod battery;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod controller;
pub mod numerics;
pub mod oracle;
pub mod sim;
pub mod stochastic;

pub use battery::{BatteryConfig, BatteryState};
pub use bounds::BoundReport;
pub use config::{parse_config, LoadedConfig, RateUnit};
pub use controller::{ControllerParams, ControllerState};
pub use sim::{
    run_replica, run_scenario, sweep, ControllerKind, ScenarioConfig, SimSummary, SlotRecord,
    SweepAxis, VChoice,
};
pub use stochastic::{ArrivalConfig, ChannelConfig, ChannelModel, SystemState};
