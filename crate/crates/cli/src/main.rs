//! `dkprg`: run analytics, simulations and TSP solves from the command line.
//!
//! Exit status is 0 on success, 2 for invalid configuration or arguments and
//! 3 when reading or writing a file fails.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dkprg_core::game::{Placement, Semantics, TourPolicy};
use dkprg_core::harness::{
    self, default_table_sets, emit_figure_data, figure10_specs, figure_approx_specs,
    render_comparison, reproduce_tables, run_monte_carlo, trajectory_rows, write_table,
    ExperimentConfig, HarnessError, OutputFormat, SeriesSpec,
};
use dkprg_core::tsp::{self, io::load_instance, TspError};

#[derive(Parser)]
#[command(name = "dkprg", version, about = "Distributed m-stop restaurant game toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact expected trajectory `day,n_t,vp,a_s,a_u,f`.
    Analytic {
        #[arg(long)]
        agents: f64,
        #[arg(long)]
        stops: u32,
        #[arg(long, default_value_t = 1000)]
        horizon: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo replication of the game.
    Simulate(SimArgs),
    /// Exact, approximate and simulated utilization side by side.
    Compare(SimArgs),
    /// Write the reference progression tables as CSV files.
    ReproduceTables {
        #[arg(long, default_value = "tables")]
        out_dir: PathBuf,
    },
    /// Utilization curves for plotting.
    EmitFigures {
        /// JSON array of series specs; defaults to the exact curves plus the
        /// m = 2 and m = 3 approximations.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Solve a TSP instance given as a JSON descriptor plus CSV edge list.
    TspSolve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "budget")]
        exact: bool,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SimArgs {
    /// JSON experiment config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    stops: Option<usize>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    #[arg(long, value_enum)]
    placement: Option<PlacementArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    #[arg(long)]
    max_days: Option<u32>,
    /// Move evaluations per metaheuristic solve.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Tsp,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Concentrated,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Behavioral,
    Counting,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("writing output: {0}")]
    Stdout(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let io = match self {
            CliError::Harness(e) => e.is_io(),
            CliError::Stdout(_) => true,
            _ => false,
        };
        if io {
            3
        } else {
            2
        }
    }
}

impl SimArgs {
    fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        let g = &mut cfg.game;
        if let Some(n) = self.agents {
            g.n = n;
        }
        if let Some(m) = self.stops {
            g.m = m;
        }
        if let Some(p) = self.policy {
            g.tour_policy = match p {
                Policy::Tsp => TourPolicy::MetaheuristicTsp,
                Policy::Random => TourPolicy::UniformRandom,
            };
        }
        if let Some(p) = self.placement {
            g.placement = match p {
                PlacementArg::Concentrated => Placement::Concentrated,
                PlacementArg::Uniform => Placement::Uniform,
            };
        }
        if let Some(l) = self.lambda {
            g.lambda = l;
        }
        if let Some(d) = self.max_days {
            g.max_days = d;
        }
        if let Some(b) = self.budget {
            g.tsp_budget = b;
        }
        if let Some(r) = self.reps {
            cfg.replications = r;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(s) = self.semantics {
            cfg.semantics = match s {
                SemanticsArg::Behavioral => Semantics::Behavioral,
                SemanticsArg::Counting => Semantics::AnalyticCounting,
            };
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(o) = &self.output {
            cfg.output_path = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| io_error(path, e))?;
            Ok(())
        }
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(CliError::Stdout),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Harness(HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_target(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analytic {
            agents,
            stops,
            horizon,
            output,
        } => {
            let rows = trajectory_rows(agents, stops, horizon)?;
            emit(&write_table(&rows), output.as_deref())
        }
        Command::Simulate(args) => {
            let cfg = args.experiment()?;
            let report = run_monte_carlo(&cfg)?;
            let out = cfg.output_path.as_deref();
            let text = report.render(cfg.format).map_err(|source| HarnessError::Csv {
                path: csv_target(out),
                source,
            })?;
            emit(&text, out)?;
            eprintln!(
                "{} replications in {:.2?}",
                cfg.replications, report.elapsed
            );
            Ok(())
        }
        Command::Compare(args) => {
            let cfg = args.experiment()?;
            let rows = harness::compare(cfg.game.clone(), cfg.replications, cfg.master_seed, cfg.workers)?;
            let out = cfg.output_path.as_deref();
            let text = render_comparison(&rows, cfg.format).map_err(|source| HarnessError::Csv {
                path: csv_target(out),
                source,
            })?;
            emit(&text, out)
        }
        Command::ReproduceTables { out_dir } => {
            for (m, ns) in default_table_sets() {
                for path in reproduce_tables(m, &ns, &out_dir)? {
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::EmitFigures { spec, output, format } => {
            let specs: Vec<SeriesSpec> = match &spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
                }
                None => {
                    let mut s = figure10_specs();
                    s.extend(figure_approx_specs(2));
                    s.extend(figure_approx_specs(3));
                    s
                }
            };
            let data = emit_figure_data(&specs)?;
            let text = match format.map(OutputFormat::from).unwrap_or_default() {
                OutputFormat::Csv => data.to_csv().map_err(|source| HarnessError::Csv {
                    path: csv_target(output.as_deref()),
                    source,
                })?,
                OutputFormat::Json => data.to_json(),
            };
            emit(&text, output.as_deref())
        }
        Command::TspSolve {
            instance,
            exact,
            budget,
            seed,
        } => {
            let li = load_instance(&instance).map_err(HarnessError::from)?;
            let tour = if exact {
                tsp::solve_exact(&li.instance)?
            } else {
                tsp::solve_metaheuristic(&li.instance, budget, seed)?.0
            };
            let cost = tsp::tour_cost(&li.instance, &tour)?;
            let route: Vec<String> = li.label_route(&tour).iter().map(|v| v.to_string()).collect();
            let doc = serde_json::json!({
                "method": if exact { "exact" } else { "metaheuristic" },
                "cost": cost,
                "route": route.join("->"),
            });
            emit(&format!("{doc}\n"), None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
