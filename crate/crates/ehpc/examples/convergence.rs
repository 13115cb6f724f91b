//! Time-averaged rate convergence of every controller on the default
//! scenario: the headline comparison between the drift-plus-penalty
//! controller and the three baselines.
//!
//!     cargo run --release --example convergence

use ehpc::sim::{run_scenario, ControllerKind};
use ehpc::ScenarioConfig;

fn main() {
    let base = ScenarioConfig {
        replicas: 40,
        seed: 1,
        ..ScenarioConfig::default()
    };
    let controllers = [
        ControllerKind::Alg1,
        ControllerKind::Alg2,
        ControllerKind::Eawf,
        ControllerKind::Greedy,
        ControllerKind::Halving,
    ];
    let checkpoints = [100usize, 500, 2_000, 5_000, 10_000, 19_999];

    println!(
        "time-averaged rate (nats/slot), {} replicas, horizon {}",
        base.replicas, base.horizon
    );
    print!("{:>10}", "slot");
    for kind in controllers {
        print!("{:>10}", kind.to_string());
    }
    println!();

    let mut finals = Vec::new();
    let mut series = Vec::new();
    for kind in controllers {
        let summary = run_scenario(&ScenarioConfig {
            controller: kind,
            ..base
        })
        .unwrap_or_else(|e| panic!("{kind}: {e}"));
        finals.push((kind, summary.final_avg_rate));
        series.push(summary.avg_rate_series);
    }
    for &t in &checkpoints {
        print!("{t:>10}");
        for s in &series {
            print!("{:>10.4}", s[t]);
        }
        println!();
    }

    let alg2 = finals
        .iter()
        .find(|(k, _)| *k == ControllerKind::Alg2)
        .unwrap()
        .1;
    println!("\ngain of alg2 over the alternatives:");
    for (kind, rate) in &finals {
        if *kind != ControllerKind::Alg2 && *kind != ControllerKind::Alg1 {
            println!("  vs {kind:<8} {:+.1}%", 100.0 * (alg2 / rate - 1.0));
        }
    }

    // the same comparison with a small battery, started half-full: the
    // ordering survives and convergence is much faster
    let mut small = base;
    small.battery.e_max = 10.0;
    small.e_b0 = 5.0;
    println!("\nsmall battery (e_max = 10 J, half-full start), final rates:");
    for kind in controllers {
        let summary = run_scenario(&ScenarioConfig {
            controller: kind,
            ..small
        })
        .unwrap_or_else(|e| panic!("{kind}: {e}"));
        println!("  {kind:<8} {:.4}", summary.final_avg_rate);
    }
}
