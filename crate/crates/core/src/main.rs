//! Command-line front end for the runway capacity expansion solver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use runway_capex::config::ScenarioConfig;
use runway_capex::harness::{
    self, comparative_table, emit_plot_data, run_scenario, sweep, PlotKind,
};
use runway_capex::mc::oracle_compare;

/// Default oracle panel: demand levels on both sides of the triggers, with
/// the expansion sizes the solvers actually choose there.
const ORACLE_PANEL: [(f64, f64); 4] = [(5.0, 40.0), (10.0, 40.0), (20.0, 80.0), (50.0, 80.0)];

#[derive(Parser)]
#[command(
    name = "runway-capex",
    about = "Runway capacity expansion planning under demand uncertainty",
    version
)]
struct Cli {
    /// Scenario config file (flat key = value format); defaults are the
    /// baseline calibration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output files; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the Monte Carlo seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format (only `csv` is supported).
    #[arg(long, global = true, default_value = "csv")]
    format: String,

    /// Worker threads for path simulation and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the trigger decision.
    Solve,
    /// Run the configured parameter sweep (sweep.param / sweep.values).
    Sweep,
    /// Solve the 18-cell comparative study table.
    Table,
    /// Simulate demand sample paths to CSV.
    Simulate {
        /// Number of sample paths.
        #[arg(long, default_value_t = 5)]
        paths: u64,
    },
    /// Check the closed-form values against the Monte Carlo oracle.
    OracleCheck {
        /// Panel point as `q:dK`; repeatable. Defaults to the standard panel.
        #[arg(long, value_parser = parse_point)]
        point: Vec<PanelPoint>,
    },
}

#[derive(Debug, Clone, Copy)]
struct PanelPoint(f64, f64);

fn parse_point(s: &str) -> Result<PanelPoint, String> {
    let (q, dk) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `q:dK`, got `{s}`"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{v}` is not a number"))
    };
    Ok(PanelPoint(parse(q)?, parse(dk)?))
}

fn load_config(cli: &Cli) -> runway_capex::Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::parse(&fs::read_to_string(path)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

/// Writes `content` to `name` in the output directory, or to stdout.
fn deliver(out: &Option<PathBuf>, name: &str, content: &str) -> runway_capex::Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(Path::new(dir).join(name), content)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> runway_capex::Result<bool> {
    if cli.format != "csv" {
        return Err(runway_capex::ModelError::Config(format!(
            "unsupported format `{}`; only `csv` is available",
            cli.format
        )));
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| runway_capex::ModelError::Config(e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("note: built without the `parallel` feature; --threads ignored");
    }
    let cfg = load_config(cli)?;
    let mut ok = true;
    match &cli.command {
        Command::Solve => {
            let row = run_scenario(&cfg)?;
            match (row.q_trigger, row.dk) {
                (Some(q), Some(dk)) => {
                    println!("model: {}", row.scenario);
                    println!("trigger demand: {q:.1} ops/hour (exact {q})");
                    println!("expansion size: {dk} ops/hour");
                    if let Some(a1) = row.option_coefficient {
                        println!("option coefficient: {a1:.6e}");
                    }
                    println!(
                        "diagnostics: phi(b1) = {:.3e}, phi(b2) = {:.3e}, \
                         smooth pasting = {:.3e}",
                        row.diagnostics.phi_b1,
                        row.diagnostics.phi_b2,
                        row.diagnostics.smooth_pasting
                    );
                }
                _ => println!("model: {}: never invests", row.scenario),
            }
            ok = !row.flagged;
        }
        Command::Sweep => {
            let rows = sweep(&cfg)?;
            for row in &rows {
                match &row.outcome {
                    Ok(r) if r.flagged => {
                        eprintln!(
                            "warning: diagnostics out of tolerance at {} = {}",
                            row.param.as_str(),
                            row.value
                        );
                        ok = false;
                    }
                    Err(e) => eprintln!(
                        "warning: {} = {} failed: {e}",
                        row.param.as_str(),
                        row.value
                    ),
                    _ => {}
                }
            }
            let csv = harness::csv_to_string(|w| harness::write_sweep_csv(&rows, w))?;
            deliver(&cli.out, "sweep.csv", &csv)?;
        }
        Command::Table => {
            let cells = comparative_table(&cfg.cost, &cfg.capacity)?;
            let csv = harness::csv_to_string(|w| harness::write_table_csv(&cells, w))?;
            deliver(&cli.out, "table.csv", &csv)?;
        }
        Command::Simulate { paths } => {
            let csv = harness::csv_to_string(|w| {
                emit_plot_data(PlotKind::SamplePaths { count: *paths }, &cfg, w)
            })?;
            deliver(&cli.out, "paths.csv", &csv)?;
        }
        Command::OracleCheck { point } => {
            let panel: Vec<(f64, f64)> = if point.is_empty() {
                ORACLE_PANEL.to_vec()
            } else {
                point.iter().map(|p| (p.0, p.1)).collect()
            };
            let rows = oracle_compare(&panel, &cfg.cost, &cfg.demand, &cfg.capacity, &cfg.sim)?;
            for r in &rows {
                if r.z > 3.0 {
                    eprintln!(
                        "warning: |z| = {:.2} > 3 at (q = {}, dK = {})",
                        r.z, r.q, r.dk
                    );
                    ok = false;
                }
            }
            let csv = harness::csv_to_string(|w| harness::write_oracle_csv(&rows, w))?;
            deliver(&cli.out, "oracle.csv", &csv)?;
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        // downstream consumer closed the pipe; not an error
        Err(runway_capex::ModelError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
