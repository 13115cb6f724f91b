//! One bounded-fading trajectory up close: gain, battery level, the two
//! power-law thresholds, and the chosen power per slot. Shows the
//! opportunistic water-filling behavior — the no-transmit threshold mirrors
//! the gain while the full-power threshold stays nearly flat.
//!
//!     cargo run --release --example threshold_trace

use ehpc::controller::ControllerParams;
use ehpc::sim::{run_replica, ControllerKind};
use ehpc::stochastic::gamma_max_for_outage;
use ehpc::ScenarioConfig;

fn main() {
    let cfg = ScenarioConfig {
        controller: ControllerKind::Alg1,
        horizon: 2_000,
        replicas: 1,
        seed: 42,
        ..ScenarioConfig::default()
    };
    let gamma_max = gamma_max_for_outage(&cfg.channel).unwrap();
    let params =
        ControllerParams::with_v_max(&cfg.battery, gamma_max, cfg.channel.outage_eta).unwrap();
    let records = run_replica(&cfg, 0).unwrap();

    println!(
        "v = v_max = {:.4}, gamma_max = {:.2}, queue bounds [{:.2}, {:.2}]",
        params.v, params.gamma_max, params.x_low, params.x_up
    );
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9} {:>8} {:>9}",
        "t", "gamma", "e_b", "th_zero", "th_full", "p", "x"
    );
    // steady-state window after the initial drain from the full battery
    for rec in records.iter().skip(1_000).take(30) {
        let e_b_start = rec.e_b_end + params.rho_d * params.dt * rec.p - rec.e_s;
        println!(
            "{:>6} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>8.3} {:>9.3}",
            rec.t,
            rec.gamma,
            e_b_start,
            params.threshold_zero_power(rec.gamma),
            params.threshold_full_power(rec.gamma),
            rec.p,
            rec.x.unwrap()
        );
    }

    let transmitting = records.iter().filter(|r| r.p > 0.0).count();
    println!(
        "\ntransmitted in {} of {} slots; battery stayed within [{:.2}, {:.2}] J",
        transmitting,
        records.len(),
        records
            .iter()
            .map(|r| r.e_b_end)
            .fold(f64::INFINITY, f64::min),
        records
            .iter()
            .map(|r| r.e_b_end)
            .fold(f64::NEG_INFINITY, f64::max),
    );
}
