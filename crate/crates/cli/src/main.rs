//! `cat0-audit`: audit finite metric spaces against CAT(0) obstructions.
//!
//! Exit codes: 0 satisfied/feasible, 1 violated/infeasible, 2 unknown,
//! 3 input error. A JSON report goes to stdout (or `--out`), a one-line
//! summary to stderr.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use report::{Report, EXIT_INPUT};

#[derive(Debug, Parser)]
#[command(name = "cat0-audit", version, about)]
pub struct Cli {
    /// Worker threads for parallel sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Boxtimes,
    Sixpoint,
    Ann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeMode {
    /// 60° between the lines, unit y-span, height 0.5.
    Default,
    /// Shape tuned so the five-point restrictions keep the ⊠-inequalities.
    Fit,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the metric axioms of a space file.
    Validate {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate or search an inequality family on a space.
    Check {
        path: PathBuf,
        #[arg(long, value_enum)]
        family: Family,
        /// Six-point parameters `a,b,c,s,t`; skips the parameter search.
        #[arg(long)]
        params: Option<String>,
        /// Labels for the roles `x0,x1,y0,y1,z0,z1`.
        #[arg(long)]
        labeling: Option<String>,
        /// Grid points per axis of the six-point search.
        #[arg(long, default_value_t = 9)]
        grid: usize,
        /// Number of sampled ANN certificates.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Largest number of blocks per ANN certificate.
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Points per ANN certificate (default: min(|X|, 6)).
        #[arg(long)]
        n: Option<usize>,
        /// Cap on point assignments tried per ANN certificate.
        #[arg(long, default_value_t = 5040)]
        assignments: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a six-point configuration in R³ and its stretched metric.
    Lebedeva {
        /// Parameters `a,b,c,s,t` with 0 < a < s < 1 and b, c, t in (0,1).
        #[arg(long)]
        params: String,
        /// `auto`, an absolute stretch, or a fraction of the metric bound such as `0.1x`.
        #[arg(long, default_value = "auto")]
        epsilon: String,
        #[arg(long, value_enum, default_value_t = ShapeMode::Default)]
        shape: ShapeMode,
        #[arg(long)]
        angle: Option<f64>,
        #[arg(long)]
        span: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        /// Directory receiving `config.json` and `metric.json`.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the report (default: stdout).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decide G-comparison for a vertex map into the space.
    Graph {
        path: PathBuf,
        /// `cycle:N`, `o3`, or a graph file.
        #[arg(long)]
        graph: String,
        /// Comma-separated labels, one per graph vertex.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value_t = cat0_core::graph::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of the Euclidean proof chain on a six-point configuration.
    Trace {
        path: PathBuf,
        /// Defaults to the parameters stored in the configuration file.
        #[arg(long)]
        params: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Check { .. } => "check",
            Command::Lebedeva { .. } => "lebedeva",
            Command::Graph { .. } => "graph",
            Command::Trace { .. } => "trace",
        }
    }

    fn report_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Validate { out, .. }
            | Command::Check { out, .. }
            | Command::Graph { out, .. }
            | Command::Trace { out, .. } => out.as_ref(),
            Command::Lebedeva { report, .. } => report.as_ref(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }

    let mut report = Report::new(cli.command.name(), cli.seed);
    if let Err(e) = commands::run(&cli, &mut report) {
        eprintln!("error: {e:#}");
        report.finish("error", EXIT_INPUT, serde_json::json!({ "error": format!("{e:#}") }));
    }
    if let Err(e) = report.emit(cli.command.report_path().map(|p| p.as_path())) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    ExitCode::from(report.exit_code as u8)
}
