//! `seamesh` subcommands. Exit codes: 0 success, 1 failure or scenario
//! errors, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use seamesh_core::engine::{
    build_redsea_scenario, redsea_cruise, redsea_r1_only, redsea_sparse, run_simulation, write_metrics_log,
    TerminalTrack,
};
use seamesh_core::mesh::{backhaul_budget, coverage_grid, initial_states};
use seamesh_core::model::{estimate_cost, has_errors, validate_scenario, Finding, Scenario};
use seamesh_core::radio::LinkBudget;

use crate::store::Store;
use crate::{api, DEFAULT_LISTEN, LISTEN_ENV, SCHEMA_VERSION};

/// Prefix naming a scenario bundled with the tool instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";
pub const BUILTINS: [&str; 3] = ["redsea", "redsea-r1-only", "redsea-sparse"];

#[derive(Parser, Debug)]
#[command(name = "seamesh", version, about = "Plan and simulate 802.11ax maritime mesh deployments")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scenario and list its findings.
    Validate { scenario: String },
    /// Link budget between two nodes of a scenario.
    Linkbudget {
        scenario: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Coverage grid over the planning area.
    Coverage {
        scenario: String,
        /// Cell size in metres.
        #[arg(long, default_value_t = 25.0)]
        resolution: f64,
        /// Where to write the grid document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a time-stepped simulation and write the metrics log.
    Simulate {
        scenario: String,
        /// Simulated seconds; defaults to the scenario's setting.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Time step in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// JSON list of terminal tracks. `builtin:cruise` is a boat running
        /// out to R6 and back.
        #[arg(long)]
        terminals: Option<String>,
        /// Metrics log path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bill of materials and total cost.
    Cost { scenario: String },
    /// Print a bundled scenario as JSON.
    Bundled {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUILTINS))]
        name: String,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = LISTEN_ENV, default_value = DEFAULT_LISTEN)]
        listen: SocketAddr,
        /// Keep scenarios as JSON documents in this directory.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the tool with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "seamesh: {msg}");
            1
        }
    }
}

pub fn load_scenario(arg: &str) -> Result<Scenario, String> {
    if let Some(name) = arg.strip_prefix(BUILTIN_PREFIX) {
        return match name {
            "redsea" => Ok(build_redsea_scenario()),
            "redsea-r1-only" => Ok(redsea_r1_only()),
            "redsea-sparse" => Ok(redsea_sparse()),
            _ => Err(format!("unknown bundled scenario {name}; known: {}", BUILTINS.join(", "))),
        };
    }
    let text = std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?;
    Scenario::from_json_str(&text).map_err(|e| format!("{arg}: {e}"))
}

fn load_terminals(arg: &str) -> Result<Vec<TerminalTrack>, String> {
    if arg == "builtin:cruise" {
        return Ok(redsea_cruise());
    }
    let text = std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("{arg}: {e}"))
}

fn print_findings(w: &mut dyn Write, findings: &[Finding]) -> io::Result<()> {
    for f in findings {
        writeln!(w, "{f}")?;
        if !f.nodes.is_empty() {
            writeln!(w, "  nodes: {}", f.nodes.join(", "))?;
        }
    }
    Ok(())
}

/// Loads and validates; warnings go to stderr, errors stop the command.
fn load_checked(arg: &str, err: &mut dyn Write) -> Result<Result<Scenario, i32>, Failure> {
    let s = load_scenario(arg).map_err(Failure)?;
    let findings = validate_scenario(&s);
    print_findings(err, &findings)?;
    if has_errors(&findings) {
        writeln!(err, "seamesh: scenario {} has validation errors", s.name)?;
        return Ok(Err(1));
    }
    Ok(Ok(s))
}

fn json_line(out: &mut dyn Write, v: &serde_json::Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let as_json = cli.json;
    match cli.command {
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario).map_err(Failure)?;
            let findings = validate_scenario(&s);
            let failed = has_errors(&findings);
            if as_json {
                json_line(out, &json!({ "schema_version": SCHEMA_VERSION, "valid": !failed, "findings": findings }))?;
            } else {
                print_findings(out, &findings)?;
                let (e, w) = findings.iter().fold((0, 0), |(e, w), f| if f.is_error() { (e + 1, w) } else { (e, w + 1) });
                writeln!(out, "{}: {e} error(s), {w} warning(s)", s.name)?;
            }
            Ok(i32::from(failed))
        }
        Command::Linkbudget { scenario, from, to } => {
            let s = load_scenario(&scenario).map_err(Failure)?;
            let st = initial_states(&s);
            let lb = backhaul_budget(&s, &st, &from, &to)?;
            if as_json {
                json_line(out, &json!({ "schema_version": SCHEMA_VERSION, "from": from, "to": to, "budget": lb }))?;
            } else {
                print_budget(out, &from, &to, &lb)?;
            }
            Ok(0)
        }
        Command::Coverage { scenario, resolution, out: path } => {
            let s = match load_checked(&scenario, err)? {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let grid = coverage_grid(&s, &initial_states(&s), resolution)?;
            let doc = grid.document();
            if let Some(p) = &path {
                let mut f = BufWriter::new(create(p)?);
                serde_json::to_writer(&mut f, &doc)?;
                f.flush()?;
            }
            let covered = grid.covered_count();
            let min = grid.cells.iter().map(|c| c.downlink_mbps).fold(f64::INFINITY, f64::min);
            if as_json && path.is_none() {
                serde_json::to_writer(&mut *out, &doc)?;
                writeln!(out)?;
            } else if as_json {
                json_line(
                    out,
                    &json!({
                        "schema_version": SCHEMA_VERSION, "cols": grid.cols, "rows": grid.rows,
                        "covered_cells": covered, "uncovered_cells": grid.cells.len() - covered,
                    }),
                )?;
            } else {
                writeln!(
                    out,
                    "{} x {} cells at {} m: {covered} covered, {} uncovered, min downlink {min:.2} Mbps",
                    grid.cols,
                    grid.rows,
                    resolution,
                    grid.cells.len() - covered
                )?;
                if let Some(p) = &path {
                    writeln!(out, "grid written to {}", p.display())?;
                }
            }
            Ok(0)
        }
        Command::Simulate { scenario, duration, seed, dt, terminals, out: path } => {
            let mut s = match load_checked(&scenario, err)? {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            if let Some(d) = duration {
                s.sim_params.duration_s = d;
            }
            if let Some(x) = seed {
                s.sim_params.seed = x;
            }
            if let Some(x) = dt {
                s.sim_params.dt_s = x;
            }
            let tracks = match &terminals {
                Some(t) => load_terminals(t).map_err(Failure)?,
                None => Vec::new(),
            };
            let sim = match run_simulation(&s, &tracks) {
                Ok(sim) => sim,
                Err(seamesh_core::Error::RejectedScenario(f)) => {
                    print_findings(err, &f)?;
                    return Ok(1);
                }
                Err(e) => return Err(e.into()),
            };
            let summary = match &path {
                Some(p) => write_metrics_log(sim, BufWriter::new(create(p)?))?,
                None => write_metrics_log(sim, BufWriter::new(&mut *out))?,
            };
            let report = json!({ "schema_version": SCHEMA_VERSION, "summary": summary });
            // keep stdout clean when the log itself went there
            let sink: &mut dyn Write = if path.is_some() { out } else { err };
            if as_json {
                json_line(sink, &report)?;
            } else {
                writeln!(
                    sink,
                    "{} records; node_off {}, node_on {}, link_lost {}, link_gained {}",
                    summary.records, summary.node_off, summary.node_on, summary.link_lost, summary.link_gained
                )?;
            }
            Ok(0)
        }
        Command::Cost { scenario } => {
            let s = match load_checked(&scenario, err)? {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let report = estimate_cost(&s, &s.prices)?;
            if as_json {
                json_line(
                    out,
                    &json!({
                        "schema_version": SCHEMA_VERSION, "currency": "USD", "items": report.items,
                        "total": report.total, "total_usd": report.total.to_string(),
                    }),
                )?;
            } else {
                for l in &report.items {
                    let count = l.count.map_or_else(|| "-".to_string(), |c| c.to_string());
                    let unit = l.unit_price.map_or_else(|| "-".to_string(), |c| c.to_string());
                    writeln!(out, "{:<14} {count:>4} x {unit:>9} = {:>10}", l.item.to_string(), l.total.to_string())?;
                }
                writeln!(out, "total {} USD", report.total)?;
            }
            Ok(0)
        }
        Command::Bundled { name } => {
            let s = load_scenario(&format!("{BUILTIN_PREFIX}{name}")).map_err(Failure)?;
            writeln!(out, "{}", s.to_json_pretty())?;
            Ok(0)
        }
        Command::Serve { listen, data_dir } => {
            let store = match data_dir {
                Some(d) => Store::with_dir(d)?,
                None => Store::in_memory(),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(api::serve(listen, Arc::new(store)))?;
            Ok(0)
        }
    }
}

fn create(p: &Path) -> Result<File, Failure> {
    File::create(p).map_err(|e| Failure(format!("cannot write {}: {e}", p.display())))
}

fn print_budget(out: &mut dyn Write, from: &str, to: &str, lb: &LinkBudget) -> io::Result<()> {
    writeln!(out, "{from} -> {to}")?;
    writeln!(out, "  distance      {:.1} m{}", lb.distance_m, if lb.beyond_horizon { " (beyond horizon)" } else { "" })?;
    writeln!(out, "  tx power      {:.1} dBm, gains {:.1} + {:.1} dBi", lb.tx_power_dbm, lb.tx_gain_dbi, lb.rx_gain_dbi)?;
    writeln!(out, "  path loss     {:.2} dB + {:.1} dB margin", lb.path_loss_db, lb.extra_loss_db)?;
    writeln!(out, "  rx power      {:.2} dBm", lb.rx_power_dbm)?;
    writeln!(out, "  noise floor   {:.2} dBm over {} MHz", lb.noise_floor_dbm, lb.channel_width_mhz.mhz())?;
    writeln!(out, "  snr           {:.2} dB", lb.snr_db)?;
    match lb.mcs {
        Some(m) => writeln!(
            out,
            "  mcs           {m} x {} ss: phy {:.1} Mbps, mac {:.1} Mbps",
            lb.spatial_streams, lb.phy_rate_mbps, lb.mac_rate_mbps
        ),
        None => writeln!(out, "  mcs           none (link unusable)"),
    }
}
