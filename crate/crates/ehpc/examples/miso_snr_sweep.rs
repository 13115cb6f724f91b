//! Multi-antenna beamforming: long-term rate versus per-branch SNR for
//! 1, 2, and 4 transmit antennas. The same controller applies unchanged —
//! only the gain distribution shifts with the beamforming gain.
//!
//!     cargo run --release --example miso_snr_sweep

use ehpc::sim::{sweep, ControllerKind, SweepAxis};
use ehpc::stochastic::db_to_linear;
use ehpc::{ChannelModel, ScenarioConfig};

fn main() {
    let snr_db = [0.0, 5.0, 10.0, 15.0, 20.0];
    let points: Vec<f64> = snr_db.iter().map(|&db| db_to_linear(db)).collect();

    print!("{:>8}", "snr_db");
    for n in [1u32, 2, 4] {
        print!("{:>12}", format!("alg2 n={n}"));
    }
    print!("{:>12}", "greedy n=1");
    println!();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    for n in [1u32, 2, 4] {
        let mut base = ScenarioConfig {
            replicas: 30,
            seed: 33,
            ..ScenarioConfig::default()
        };
        base.arrivals.lambda = 0.3;
        base.arrivals.alpha = 0.1;
        base.channel.model = if n == 1 {
            ChannelModel::RayleighScalar
        } else {
            ChannelModel::Miso { n }
        };
        let mut kinds = vec![ControllerKind::Alg2];
        if n == 1 {
            kinds.push(ControllerKind::Greedy);
        }
        let table = sweep(&base, SweepAxis::SnrN, &points, &kinds).unwrap();
        for (c, _) in kinds.iter().enumerate() {
            columns.push(
                table
                    .rows
                    .iter()
                    .map(|r| r.cells[c].final_avg_rate)
                    .collect(),
            );
        }
    }
    // columns: [alg2 n1, greedy n1, alg2 n2, alg2 n4]
    for (i, db) in snr_db.iter().enumerate() {
        println!(
            "{db:>8.0} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
            columns[0][i], columns[2][i], columns[3][i], columns[1][i]
        );
    }
}
