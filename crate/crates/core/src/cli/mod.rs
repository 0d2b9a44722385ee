// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Command-line front end.
//!
//! Data goes to stdout, diagnostics to stderr one per line. Exit codes are
//! shared by every command: 0 for ok / valid / feasible / statistical pass,
//! 1 for invalid input, 2 for a failed verification, an infeasible network
//! or a statistical mismatch.

pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::network::{network_report, NetworkReport};
use crate::transport::{
    compare_to_analytic, simulate_router_transit, Comparison, SimReport, TransportError,
    DEFAULT_SIGMA_THRESHOLD,
};
use crate::wiring::{build_plan, verify_plan, WiringPlan};
use config::{defaults, Config};
use format::{plan_from_json, plan_to_dot, plan_to_json, plan_to_table, report_to_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    InvalidInput = 1,
    Failed = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qrouter",
    version,
    about = "Wiring planner and feasibility analyzer for wavelength-routed star QKD networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlanFormat {
    Json,
    Dot,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the wavelength assignment for an n-port router
    Plan {
        n: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: PlanFormat,
        #[arg(long, default_value_t = defaults::MAX_NODES)]
        max_nodes: usize,
    },
    /// Check a JSON plan file for coloring violations
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = defaults::MAX_NODES)]
        max_nodes: usize,
    },
    /// Per-pair loss and crosstalk budgets for a network config
    Budget {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Monte Carlo router transit checked against the analytic model
    Simulate {
        config: PathBuf,
        /// z-score threshold; a tally passes when |z| is strictly below it
        #[arg(long, default_value_t = DEFAULT_SIGMA_THRESHOLD)]
        sigma: f64,
        /// Overrides sim.workers from the config
        #[arg(long)]
        workers: Option<usize>,
        /// Scale the analytic expectation before comparing (self-test)
        #[arg(long, hide = true)]
        perturb_analytic: Option<f64>,
    },
    /// Render a JSON plan file as Graphviz DOT
    ExportDot {
        plan: PathBuf,
        #[arg(long, default_value_t = defaults::MAX_NODES)]
        max_nodes: usize,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn data(&mut self, text: &str) {
        let _ = self.out.write_all(text.as_bytes());
        if !text.ends_with('\n') {
            let _ = self.out.write_all(b"\n");
        }
    }

    fn diag(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.err, "{}", line.as_ref());
    }

    fn invalid(&mut self, line: impl AsRef<str>) -> ExitStatus {
        self.diag(format!("error: {}", line.as_ref()));
        ExitStatus::InvalidInput
    }
}

/// Runs the CLI with `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    io.data(&text);
                    ExitStatus::Ok
                }
                _ => {
                    let _ = io.err.write_all(text.as_bytes());
                    ExitStatus::InvalidInput
                }
            };
        }
    };
    match cli.command {
        Command::Plan {
            n,
            format,
            max_nodes,
        } => cmd_plan(&mut io, n, format, max_nodes),
        Command::Verify { file, max_nodes } => cmd_verify(&mut io, &file, max_nodes),
        Command::Budget { config, format } => cmd_budget(&mut io, &config, format),
        Command::Simulate {
            config,
            sigma,
            workers,
            perturb_analytic,
        } => cmd_simulate(&mut io, &config, sigma, workers, perturb_analytic),
        Command::ExportDot { plan, max_nodes } => cmd_export_dot(&mut io, &plan, max_nodes),
    }
}

fn cmd_plan(io: &mut Io, n: usize, format: PlanFormat, max_nodes: usize) -> ExitStatus {
    if n > max_nodes {
        return io.invalid(format!(
            "{n} ports exceed the router size limit of {max_nodes} (raise it with --max-nodes)"
        ));
    }
    let plan = match build_plan(n) {
        Ok(plan) => plan,
        Err(e) => return io.invalid(e.to_string()),
    };
    let text = match format {
        PlanFormat::Json => plan_to_json(&plan),
        PlanFormat::Dot => plan_to_dot(&plan),
        PlanFormat::Table => plan_to_table(&plan),
    };
    io.data(&text);
    ExitStatus::Ok
}

fn read_file(io: &mut Io, path: &Path) -> Result<String, ExitStatus> {
    std::fs::read_to_string(path).map_err(|e| io.invalid(format!("{}: {e}", path.display())))
}

fn load_plan(io: &mut Io, path: &Path, max_nodes: usize) -> Result<WiringPlan, ExitStatus> {
    let text = read_file(io, path)?;
    plan_from_json(&text, max_nodes).map_err(|e| io.invalid(format!("{}: {e}", path.display())))
}

fn cmd_verify(io: &mut Io, path: &Path, max_nodes: usize) -> ExitStatus {
    let plan = match load_plan(io, path, max_nodes) {
        Ok(plan) => plan,
        Err(status) => return status,
    };
    let report = verify_plan(&plan);
    if report.valid {
        io.data(&format!(
            "valid: {} nodes, {} wavelengths",
            plan.n_nodes(),
            plan.color_count()
        ));
        return ExitStatus::Ok;
    }
    let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    io.data(&lines.join("\n"));
    io.diag(format!("invalid: {} violation(s)", report.violations.len()));
    ExitStatus::Failed
}

fn load_config(io: &mut Io, path: &Path) -> Result<Config, ExitStatus> {
    let text = read_file(io, path)?;
    Config::from_json(&text).map_err(|e| io.invalid(format!("{}: {e}", path.display())))
}

/// Builds the budget report for a config.
pub fn budget_report(config: &Config) -> Result<NetworkReport, String> {
    let net = config.star_network().map_err(|e| e.to_string())?;
    network_report(&net, &config.policy).map_err(|e| e.to_string())
}

fn cmd_budget(io: &mut Io, path: &Path, format: ReportFormat) -> ExitStatus {
    let config = match load_config(io, path) {
        Ok(c) => c,
        Err(status) => return status,
    };
    let report = match budget_report(&config) {
        Ok(r) => r,
        Err(e) => return io.invalid(e),
    };
    let text = match format {
        ReportFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes"),
        ReportFormat::Csv => report_to_csv(&report),
    };
    io.data(&text);
    let s = &report.summary;
    io.diag(format!("{} of {} pairs feasible", s.feasible_pairs, s.total_pairs));
    if report.all_feasible() {
        ExitStatus::Ok
    } else {
        ExitStatus::Failed
    }
}

/// What `simulate` prints.
#[derive(Serialize)]
pub struct SimulationOutput {
    pub report: SimReport,
    pub comparison: Comparison,
}

/// Runs the simulation described by `config` and compares it to the
/// analytic model.
pub fn run_simulation(
    config: &Config,
    sigma: f64,
    perturb_analytic: Option<f64>,
) -> Result<SimulationOutput, TransportError> {
    let mut report = simulate_router_transit(&config.sim_config())?;
    if let Some(factor) = perturb_analytic {
        report.perturb_analytic(factor);
    }
    let comparison = compare_to_analytic(&report, sigma);
    Ok(SimulationOutput { report, comparison })
}

fn cmd_simulate(
    io: &mut Io,
    path: &Path,
    sigma: f64,
    workers: Option<usize>,
    perturb_analytic: Option<f64>,
) -> ExitStatus {
    let mut config = match load_config(io, path) {
        Ok(c) => c,
        Err(status) => return status,
    };
    if !(sigma > 0.0) {
        return io.invalid(format!("--sigma must be positive, got {sigma}"));
    }
    if workers.is_some() {
        config.sim.workers = workers;
    }
    let output = match run_simulation(&config, sigma, perturb_analytic) {
        Ok(o) => o,
        Err(e) => return io.invalid(e.to_string()),
    };
    io.data(&serde_json::to_string_pretty(&output).expect("report serializes"));
    let failed: Vec<&str> = output
        .comparison
        .z_checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.tally.as_str())
        .collect();
    for name in &failed {
        io.diag(format!("mismatch: {name}"));
    }
    for r in output.comparison.ratio_checks.iter().filter(|r| !r.pass) {
        if r.simulated.is_some() {
            io.diag(format!("mismatch: leak_to_signal_ratio[{:+}]", r.offset));
        } else {
            io.diag(format!(
                "unobserved: leak_to_signal_ratio[{:+}] has no sampled arrivals; raise sim.trials",
                r.offset
            ));
        }
    }
    if output.comparison.pass {
        ExitStatus::Ok
    } else {
        ExitStatus::Failed
    }
}

fn cmd_export_dot(io: &mut Io, path: &Path, max_nodes: usize) -> ExitStatus {
    match load_plan(io, path, max_nodes) {
        Ok(plan) => {
            io.data(&plan_to_dot(&plan));
            ExitStatus::Ok
        }
        Err(status) => status,
    }
}
