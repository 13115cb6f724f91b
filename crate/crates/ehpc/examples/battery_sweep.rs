//! Long-term rate versus battery capacity: the drift-plus-penalty controller
//! converts storage into rate until the charge and power caps saturate it,
//! while the baselines barely react to capacity.
//!
//!     cargo run --release --example battery_sweep

use ehpc::sim::{sweep, ControllerKind, SweepAxis};
use ehpc::ScenarioConfig;

fn main() {
    let mut base = ScenarioConfig {
        replicas: 40,
        seed: 4,
        ..ScenarioConfig::default()
    };
    base.e_b0 = base.battery.e_max / 2.0; // half-full start at every capacity
    let points = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    let controllers = [
        ControllerKind::Alg2,
        ControllerKind::Eawf,
        ControllerKind::Greedy,
        ControllerKind::Halving,
    ];
    let table = sweep(&base, SweepAxis::EMax, &points, &controllers).unwrap();

    print!("{:>8}", "e_max");
    for kind in controllers {
        print!("{:>10}", kind.to_string());
    }
    println!();
    for row in &table.rows {
        print!("{:>8.0}", row.axis_value);
        for cell in &row.cells {
            print!("{:>10.4}", cell.final_avg_rate);
        }
        println!();
    }
    println!("\n(rates in nats/slot; initial level scales with capacity)");
}
