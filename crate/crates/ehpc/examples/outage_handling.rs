//! What the outage rule does: with unbounded fading, gains above the design
//! cap would make the closed-form power infeasible. The controller then
//! transmits just enough to hold the battery at its historical end-of-slot
//! average. This example counts outage events and shows that handling them
//! this way costs almost nothing relative to the truncated-channel run.
//!
//!     cargo run --release --example outage_handling

use ehpc::sim::{run_replica, run_scenario, ControllerKind};
use ehpc::stochastic::gamma_max_for_outage;
use ehpc::ScenarioConfig;

fn main() {
    let base = ScenarioConfig {
        replicas: 40,
        seed: 6,
        ..ScenarioConfig::default()
    };
    let gamma_max = gamma_max_for_outage(&base.channel).unwrap();

    let records = run_replica(
        &ScenarioConfig {
            controller: ControllerKind::Alg2,
            ..base
        },
        0,
    )
    .unwrap();
    let outages: Vec<_> = records.iter().filter(|r| r.gamma > gamma_max).collect();
    println!(
        "one replica, horizon {}: {} outage slots ({:.2}% vs designed {}%)",
        base.horizon,
        outages.len(),
        100.0 * outages.len() as f64 / records.len() as f64,
        100.0 * base.channel.outage_eta
    );
    let sample: Vec<String> = outages
        .iter()
        .take(5)
        .map(|r| format!("t={} gamma={:.1} p={:.3}", r.t, r.gamma, r.p))
        .collect();
    println!("first outage slots: {}", sample.join(", "));

    let alg1 = run_scenario(&ScenarioConfig {
        controller: ControllerKind::Alg1,
        ..base
    })
    .unwrap();
    let alg2 = run_scenario(&ScenarioConfig {
        controller: ControllerKind::Alg2,
        ..base
    })
    .unwrap();
    println!(
        "\ntruncated channel (alg1): {:.4} nats/slot\nunbounded channel (alg2): {:.4} nats/slot\nrelative difference: {:.3}%",
        alg1.final_avg_rate,
        alg2.final_avg_rate,
        100.0 * (alg1.final_avg_rate - alg2.final_avg_rate).abs() / alg2.final_avg_rate
    );
}
