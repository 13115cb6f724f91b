//! Closed-form constants and performance bounds for the default scenario:
//! the drift constant B, the admissible weight ceiling v_max, the queue
//! bounds, the bounded-fading gap B/V, the outage constant G, and the
//! combined bound — plus how the combined bound tightens with battery size.
//!
//!     cargo run --release --example bounds_report

use ehpc::bounds::bound_report;
use ehpc::controller::ControllerParams;
use ehpc::stochastic::{gamma_max_for_outage, linear_to_db};
use ehpc::{BatteryConfig, ChannelConfig, ScenarioConfig};

fn main() {
    let cfg = ScenarioConfig::default();
    let gamma_max = gamma_max_for_outage(&cfg.channel).unwrap();
    let params =
        ControllerParams::with_v_max(&cfg.battery, gamma_max, cfg.channel.outage_eta).unwrap();
    let report = bound_report(&cfg.battery, &params, &cfg.channel).unwrap();

    println!(
        "gain cap:        {:.4} linear = {:.2} dB at eta = {}",
        gamma_max,
        linear_to_db(gamma_max),
        report.eta
    );
    println!("drift constant:  B = {} J^2", report.b_const);
    println!("weight ceiling:  v_max = {:.4}", report.v_max);
    println!(
        "queue shift:     a = {} J, queue in [{}, {}] J",
        report.a_shift, report.x_low, report.x_up
    );
    println!(
        "bounded gap:     B/V = {:.4} nats at V = v_max",
        report.gap_bounded
    );
    println!("outage constant: G = {:.4} nats", report.g_const);
    println!(
        "combined bound:  (1-eta) B/V + eta G = {:.4} nats",
        report.gap_total
    );

    println!("\ncombined bound vs battery capacity:");
    println!("{:>8} {:>10} {:>12}", "e_max", "v_max", "bound");
    for e_max in [2.0, 5.0, 10.0, 20.0, 50.0, 200.0] {
        let battery = BatteryConfig {
            e_max,
            ..cfg.battery
        };
        let params = ControllerParams::with_v_max(&battery, gamma_max, report.eta).unwrap();
        let channel = ChannelConfig { ..cfg.channel };
        let r = bound_report(&battery, &params, &channel).unwrap();
        println!("{e_max:>8.0} {:>10.4} {:>12.4}", r.v_max, r.gap_total);
    }
}
