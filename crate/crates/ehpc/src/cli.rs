//! Command-line front end: `run`, `sweep`, `bounds`, and `oracle`
//! subcommands with machine-readable CSV/JSON outputs.
//!
//! Identical (config, seed) inputs produce byte-identical output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{bound_report, BoundReport, BoundsError};
use crate::config::{parse_config, ConfigError, LoadedConfig, RateUnit};
use crate::controller::{ControllerError, ControllerParams};
use crate::oracle::{default_instances, gap_check, GapCheck, OracleError};
use crate::sim::{
    run_scenario, run_scenario_traced, sweep, ControllerKind, ScenarioConfig, SimError, SimSummary,
    SlotRecord, SweepAxis, SweepTable, VChoice,
};
use crate::stochastic::{db_to_linear, gamma_max_for_outage, ChannelError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    BadArgument(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "ehpc",
    about = "Online power control simulation for an energy-harvesting transmitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output format for tabular results.
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Dotted-path config override, repeatable (e.g. battery.e_max_joule=10).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shortcut for run.replicas.
    #[arg(long)]
    replicas: Option<u64>,
    /// Shortcut for run.horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Shortcut for run.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and emit the running-mean rate series.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the full per-slot trace of every replica.
        #[arg(long)]
        trace: bool,
    },
    /// Rerun a scenario across an axis of values, one row per point.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis to vary: v | e_max | lambda_alpha | snr_n.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values; snr_n points are in dB.
        #[arg(long)]
        points: String,
        /// Comma-separated controllers to compare (default: the configured one).
        #[arg(long)]
        controllers: Option<String>,
    },
    /// Evaluate the closed-form constants and performance bounds.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the optimality-gap checks on the built-in small instances.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl CommonArgs {
    fn load(&self) -> Result<LoadedConfig, CliError> {
        let mut loaded = parse_config(self.config.as_deref(), &self.set)?;
        if let Some(replicas) = self.replicas {
            loaded.scenario.replicas = replicas;
        }
        if let Some(horizon) = self.horizon {
            loaded.scenario.horizon = horizon;
        }
        if let Some(seed) = self.seed {
            loaded.scenario.seed = seed;
            loaded.scenario.channel.seed = seed;
        }
        loaded.scenario.validate()?;
        Ok(loaded)
    }
}

/// Entry point for the binary; prints errors to stderr and returns the exit
/// code (0 only when everything requested completed and, for `oracle`, every
/// gap check passed).
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { common, trace } => {
            let loaded = common.load()?;
            let (summary, traces) = if trace {
                let (summary, traces) = run_scenario_traced(&loaded.scenario)?;
                (summary, Some(traces))
            } else {
                (run_scenario(&loaded.scenario)?, None)
            };
            emit_run(
                &summary,
                traces.as_deref(),
                &loaded.scenario,
                loaded.rate_unit,
                format_of(common.format),
                &common.out,
            )?;
            println!(
                "run: controller={} final_avg_rate={} stderr={} -> {}",
                loaded.scenario.controller,
                loaded.rate_unit.scale() * summary.final_avg_rate,
                loaded.rate_unit.scale() * summary.final_stderr,
                common.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            axis,
            points,
            controllers,
        } => {
            let loaded = common.load()?;
            let axis: SweepAxis = axis.parse().map_err(CliError::BadArgument)?;
            let mut values = parse_points(&points)?;
            if axis == SweepAxis::SnrN {
                values = values.into_iter().map(db_to_linear).collect();
            }
            let controllers = match controllers {
                Some(list) => list
                    .split(',')
                    .map(|c| c.parse::<ControllerKind>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::BadArgument)?,
                None => vec![loaded.scenario.controller],
            };
            let table = sweep(&loaded.scenario, axis, &values, &controllers)?;
            emit_sweep(
                &table,
                loaded.rate_unit,
                format_of(common.format),
                &common.out,
            )?;
            println!(
                "sweep: {} points on axis {} -> {}",
                values.len(),
                axis,
                common.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { common } => {
            let loaded = common.load()?;
            let scenario = &loaded.scenario;
            let gamma_max = gamma_max_for_outage(&scenario.channel)?;
            let eta = scenario.channel.outage_eta;
            let params = match scenario.v {
                VChoice::VMax => ControllerParams::with_v_max(&scenario.battery, gamma_max, eta)?,
                VChoice::Value(v) => ControllerParams::new(&scenario.battery, v, gamma_max, eta)?,
            };
            let report = bound_report(&scenario.battery, &params, &scenario.channel)?;
            emit_bounds(&report, &common.out)?;
            println!(
                "bounds: B={} V_max={} gap_total={} -> {}",
                report.b_const,
                report.v_max,
                report.gap_total,
                common.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { common } => {
            let seed = common.seed.unwrap_or(0);
            let mut checks = Vec::new();
            for instance in default_instances() {
                checks.push(gap_check(&instance, seed)?);
            }
            emit_oracle(&checks, format_of(common.format), &common.out)?;
            let all_pass = checks.iter().all(|c| c.pass);
            for check in &checks {
                println!(
                    "oracle[{}]: vi_gain={} alg1_rate={} b_over_v={} eps_disc={} slack={} {}",
                    check.instance,
                    check.vi_gain,
                    check.alg1_rate,
                    check.b_over_v,
                    check.eps_disc,
                    check.slack,
                    if check.pass { "PASS" } else { "FAIL" }
                );
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn format_of(f: OutputFormat) -> &'static str {
    match f {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

fn parse_points(points: &str) -> Result<Vec<f64>, CliError> {
    points
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::BadArgument(format!("bad sweep point '{p}'")))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Serialize)]
struct RunDoc {
    controller: String,
    horizon: u64,
    replicas: u64,
    rate_unit: RateUnit,
    final_avg_rate: f64,
    final_stderr: f64,
    t: Vec<u64>,
    mean_avg_rate: Vec<f64>,
    stderr: Vec<f64>,
}

/// Writes `summary.csv` (columns t, mean_avg_rate, stderr) or `summary.json`,
/// plus `trace.csv` when the per-slot records are supplied.
pub fn emit_run(
    summary: &SimSummary,
    traces: Option<&[Vec<SlotRecord>]>,
    scenario: &ScenarioConfig,
    rate_unit: RateUnit,
    format: &str,
    out_dir: &Path,
) -> Result<(), CliError> {
    let scale = rate_unit.scale();
    match format {
        "json" => {
            let doc = RunDoc {
                controller: scenario.controller.to_string(),
                horizon: scenario.horizon,
                replicas: scenario.replicas,
                rate_unit,
                final_avg_rate: scale * summary.final_avg_rate,
                final_stderr: scale * summary.final_stderr,
                t: (0..scenario.horizon).collect(),
                mean_avg_rate: summary.avg_rate_series.iter().map(|r| scale * r).collect(),
                stderr: summary.stderr_series.iter().map(|s| scale * s).collect(),
            };
            let body = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
            write_file(&out_dir.join("summary.json"), &body)?;
        }
        _ => {
            let mut csv = String::from("t,mean_avg_rate,stderr\n");
            for (t, (rate, stderr)) in summary
                .avg_rate_series
                .iter()
                .zip(&summary.stderr_series)
                .enumerate()
            {
                let _ = writeln!(csv, "{t},{},{}", scale * rate, scale * stderr);
            }
            write_file(&out_dir.join("summary.csv"), &csv)?;
        }
    }
    if let Some(traces) = traces {
        let mut csv = String::from("replica,t,e_a,gamma,p,rate,e_s,e_b_end,x\n");
        for (replica, records) in traces.iter().enumerate() {
            for r in records {
                let x = r.x.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{replica},{},{},{},{},{},{},{},{x}",
                    r.t, r.e_a, r.gamma, r.p, r.rate, r.e_s, r.e_b_end
                );
            }
        }
        write_file(&out_dir.join("trace.csv"), &csv)?;
    }
    Ok(())
}

/// One row per sweep point: the axis value, then rate and stderr per
/// controller.
pub fn emit_sweep(
    table: &SweepTable,
    rate_unit: RateUnit,
    format: &str,
    out_dir: &Path,
) -> Result<(), CliError> {
    let scale = rate_unit.scale();
    match format {
        "json" => {
            #[derive(Serialize)]
            struct SweepDoc<'a> {
                axis: &'a SweepAxis,
                rate_unit: RateUnit,
                rows: Vec<serde_json::Value>,
            }
            let rows = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    obj.insert(table.axis.to_string(), row.axis_value.into());
                    for cell in &row.cells {
                        obj.insert(
                            format!("{}_rate", cell.controller),
                            (scale * cell.final_avg_rate).into(),
                        );
                        obj.insert(
                            format!("{}_stderr", cell.controller),
                            (scale * cell.final_stderr).into(),
                        );
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            let doc = SweepDoc {
                axis: &table.axis,
                rate_unit,
                rows,
            };
            let body = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
            write_file(&out_dir.join("sweep.json"), &body)?;
        }
        _ => {
            let mut header = table.axis.to_string();
            if let Some(first) = table.rows.first() {
                for cell in &first.cells {
                    let _ = write!(
                        header,
                        ",{}_rate,{}_stderr",
                        cell.controller, cell.controller
                    );
                }
            }
            let mut csv = header + "\n";
            for row in &table.rows {
                let _ = write!(csv, "{}", row.axis_value);
                for cell in &row.cells {
                    let _ = write!(
                        csv,
                        ",{},{}",
                        scale * cell.final_avg_rate,
                        scale * cell.final_stderr
                    );
                }
                csv.push('\n');
            }
            write_file(&out_dir.join("sweep.csv"), &csv)?;
        }
    }
    Ok(())
}

/// The bound report is always JSON.
pub fn emit_bounds(report: &BoundReport, out_dir: &Path) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(report).expect("serializable") + "\n";
    write_file(&out_dir.join("bounds.json"), &body)
}

/// Gap-check table with a pass/fail column per instance.
pub fn emit_oracle(checks: &[GapCheck], format: &str, out_dir: &Path) -> Result<(), CliError> {
    match format {
        "json" => {
            let body = serde_json::to_string_pretty(checks).expect("serializable") + "\n";
            write_file(&out_dir.join("oracle.json"), &body)?;
        }
        _ => {
            let mut csv = String::from("instance,vi_gain,alg1_rate,b_over_v,eps_disc,slack,pass\n");
            for c in checks {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    c.instance, c.vi_gain, c.alg1_rate, c.b_over_v, c.eps_disc, c.slack, c.pass
                );
            }
            write_file(&out_dir.join("oracle.csv"), &csv)?;
        }
    }
    Ok(())
}
