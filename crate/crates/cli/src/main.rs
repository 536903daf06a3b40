use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fairlens_core::discovery::{
    count_directly_follows, mine_dependency_graph, to_process_net, DEFAULT_DEPENDENCY_THRESHOLD,
};
use fairlens_core::eventlog::{load_log_path, write_log_path, ColumnMap, CsvOptions};
use fairlens_core::report::{run_pipeline, PipelineConfig, ReportFormat};
use fairlens_core::triage_sim::{generate_from_scenario, Scenario};
use fairlens_core::Error;

#[derive(Parser)]
#[command(
    name = "fairlens",
    version,
    about = "Fairness analysis of ED triage event logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a JSON config.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `format`.
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Generate a synthetic event log from a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Discover a reference net from an event log.
    Discover {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPENDENCY_THRESHOLD)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a Graphviz file next to the JSON.
        #[arg(long)]
        dot: bool,
        /// Take `column_map` and `csv` from this pipeline config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn analyze(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: Option<ReportFormat>,
) -> anyhow::Result<()> {
    let mut config = PipelineConfig::from_path(config)?;
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(format) = format {
        config.format = format;
    }
    let summary = run_pipeline(&config)?;
    println!(
        "analysed {} cases ({} events loaded, {} rows rejected)",
        summary.cases_analyzed, summary.events_loaded, summary.rows_rejected_at_load
    );
    println!(
        "{} of 100 cells tested, {} significant",
        summary.tested_cells, summary.significant_cells
    );
    for line in &summary.justice_lines {
        println!("{line}");
    }
    for path in &summary.artifacts {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn simulate(scenario: &Path, out: &Path, seed: u64) -> anyhow::Result<()> {
    let scenario = Scenario::from_path(scenario)?;
    let log = generate_from_scenario(&scenario, seed)?;
    write_log_path(&log, out, &ColumnMap::default(), &CsvOptions::default())?;
    println!(
        "wrote {} cases ({} events) to {}",
        log.cases.len(),
        log.event_count(),
        out.display()
    );
    Ok(())
}

fn discover(
    log: &Path,
    tau: f64,
    out: &Path,
    dot: bool,
    config: Option<&Path>,
) -> anyhow::Result<()> {
    let (columns, csv) = match config {
        Some(path) => {
            let c = PipelineConfig::from_path(path)?;
            (c.column_map, c.csv)
        }
        None => (ColumnMap::default(), CsvOptions::default()),
    };
    let log = load_log_path(log, &columns, &csv)?;
    let graph = mine_dependency_graph(&count_directly_follows(&log), tau)?;
    let net = to_process_net(&graph)?;
    std::fs::write(out, net.to_json()? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote net with {} transitions and {} places to {}",
        net.transitions().len(),
        net.places().len(),
        out.display()
    );
    if dot {
        let dot_path = out.with_extension("dot");
        std::fs::write(&dot_path, net.to_dot())
            .with_context(|| format!("writing {}", dot_path.display()))?;
        println!("wrote {}", dot_path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            config,
            out,
            seed,
            format,
        } => analyze(&config, out, seed, format),
        Command::Simulate {
            scenario,
            out,
            seed,
        } => simulate(&scenario, &out, seed),
        Command::Discover {
            log,
            tau,
            out,
            dot,
            config,
        } => discover(&log, tau, &out, dot, config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
