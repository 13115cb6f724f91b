//! Long-term rate versus the drift weight V over (0, v_max]: the rate climbs
//! steeply and then plateaus, which is why V = v_max is the right default.
//! Baselines ignore V and stay flat.
//!
//!     cargo run --release --example v_sweep

use ehpc::controller::ControllerParams;
use ehpc::sim::{sweep, ControllerKind, SweepAxis};
use ehpc::stochastic::gamma_max_for_outage;
use ehpc::ScenarioConfig;

fn main() {
    let base = ScenarioConfig {
        replicas: 40,
        seed: 9,
        ..ScenarioConfig::default()
    };
    let gamma_max = gamma_max_for_outage(&base.channel).unwrap();
    let params =
        ControllerParams::with_v_max(&base.battery, gamma_max, base.channel.outage_eta).unwrap();
    let fractions = [0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.85, 1.0];
    let points: Vec<f64> = fractions.iter().map(|f| f * params.v_max).collect();

    let table = sweep(
        &base,
        SweepAxis::V,
        &points,
        &[ControllerKind::Alg2, ControllerKind::Greedy],
    )
    .unwrap();

    println!(
        "v_max = {:.4}; gap bound B/V at v_max = {:.4} nats",
        params.v_max,
        params.gap_bound()
    );
    println!(
        "{:>10} {:>10} {:>12} {:>12}",
        "v/v_max", "v", "alg2", "greedy"
    );
    for (frac, row) in fractions.iter().zip(&table.rows) {
        println!(
            "{frac:>10.2} {:>10.4} {:>12.4} {:>12.4}",
            row.axis_value, row.cells[0].final_avg_rate, row.cells[1].final_avg_rate
        );
    }
}
