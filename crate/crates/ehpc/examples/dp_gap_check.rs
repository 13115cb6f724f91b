//! Empirical check of the optimality-gap bound on small discretized
//! instances: a value-iteration oracle computes the optimal long-term rate,
//! and the online controller's empirical rate must sit within B/V (plus the
//! measured discretization sensitivity) of it.
//!
//!     cargo run --release --example dp_gap_check

use ehpc::oracle::{default_instances, gap_check};

fn main() {
    println!(
        "{:<12} {:>9} {:>10} {:>8} {:>9} {:>8}  result",
        "instance", "vi_gain", "alg1_rate", "b_over_v", "eps_disc", "slack"
    );
    let mut all = true;
    for instance in default_instances() {
        let check = gap_check(&instance, 7).expect("gap check runs");
        println!(
            "{:<12} {:>9.4} {:>10.4} {:>8.4} {:>9.5} {:>8.4}  {}",
            check.instance,
            check.vi_gain,
            check.alg1_rate,
            check.b_over_v,
            check.eps_disc,
            check.slack,
            if check.pass { "PASS" } else { "FAIL" }
        );
        all &= check.pass;
    }
    println!(
        "\ngap bound {} on all instances",
        if all { "holds" } else { "VIOLATED" }
    );
}
