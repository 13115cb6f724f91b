//! Long-term rate versus the energy arrival rate lambda, for two mean unit
//! amounts: more harvested energy lifts the rate, with diminishing returns
//! as the power saturates the log.
//!
//!     cargo run --release --example arrival_sweep

use ehpc::sim::{sweep, ControllerKind, SweepAxis};
use ehpc::ScenarioConfig;

fn main() {
    let points = [0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
    println!(
        "{:>8} {:>16} {:>16} {:>16}",
        "lambda", "alg2 a=0.2", "greedy a=0.2", "alg2 a=0.1"
    );
    let mut columns = Vec::new();
    for (alpha, controllers) in [
        (0.2, vec![ControllerKind::Alg2, ControllerKind::Greedy]),
        (0.1, vec![ControllerKind::Alg2]),
    ] {
        let mut base = ScenarioConfig {
            replicas: 30,
            seed: 21,
            ..ScenarioConfig::default()
        };
        base.arrivals.alpha = alpha;
        let table = sweep(&base, SweepAxis::LambdaAlpha, &points, &controllers).unwrap();
        for (c, _) in controllers.iter().enumerate() {
            columns.push(
                table
                    .rows
                    .iter()
                    .map(|r| r.cells[c].final_avg_rate)
                    .collect::<Vec<_>>(),
            );
        }
    }
    for (i, lambda) in points.iter().enumerate() {
        println!(
            "{lambda:>8.1} {:>16.4} {:>16.4} {:>16.4}",
            columns[0][i], columns[1][i], columns[2][i]
        );
    }
}
