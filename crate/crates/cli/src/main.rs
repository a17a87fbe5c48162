use clap::{Args, Parser, Subcommand};
use lockdown_opt::config::{ScenarioFile, SweepFile};
use lockdown_opt::herd::write_herd_csv;
use lockdown_opt::output::write_json;
use lockdown_opt::run::{run_min_time, run_scenario, write_summary_json, write_trajectory_csv};
use lockdown_opt::sweep::write_sweep_csv;
use lockdown_opt::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Optimal finite-window lockdown policies for an SIR epidemic.
#[derive(Parser)]
#[command(name = "lockdown-opt", version, about)]
struct Cli {
    /// TOML config file; CLI flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Scenario fields exposed as flags (highest precedence).
#[derive(Args)]
struct Overrides {
    /// Transmission rate per day.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Removal rate per day.
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Total population (scales absolute case counts).
    #[arg(long, global = true)]
    population: Option<f64>,
    /// Initial infected: absolute count (>= 1) or fraction (< 1).
    #[arg(long, global = true)]
    initial_infected: Option<f64>,
    /// Initial removed: absolute count (>= 1) or fraction (< 1).
    #[arg(long, global = true)]
    initial_removed: Option<f64>,
    /// Lockdown intensity floor in [0, 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Intervention window length in days.
    #[arg(long = "horizon-t", global = true)]
    horizon_t: Option<f64>,
    /// Integration step in days.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Switch-time tolerance in days.
    #[arg(long = "tol-t", global = true)]
    tol_t: Option<f64>,
    /// Solution route: psi-root, trisection, gradient or alpha-zero.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Iterations for the trisection solver.
    #[arg(long = "trisection-k", global = true)]
    trisection_k: Option<usize>,
    /// Objective-improvement tolerance for the gradient solver.
    #[arg(long = "gradient-tol", global = true)]
    gradient_tol: Option<f64>,
    /// Iteration cap for the gradient solver.
    #[arg(long = "gradient-max-iters", global = true)]
    gradient_max_iters: Option<usize>,
}

impl Overrides {
    fn as_file(&self) -> ScenarioFile {
        ScenarioFile {
            beta: self.beta,
            nu: self.nu,
            population: self.population,
            initial_infected: self.initial_infected,
            initial_removed: self.initial_removed,
            initial_susceptible: None,
            alpha: self.alpha,
            horizon_t: self.horizon_t,
            dt: self.dt,
            tol_t: self.tol_t,
            solver: self.solver.clone(),
            trisection_k: self.trisection_k,
            gradient_tol: self.gradient_tol,
            gradient_max_iters: self.gradient_max_iters,
            outputs: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario; writes trajectory.csv and summary.json.
    Scenario,
    /// Sweep one axis; writes sweep.csv.
    Sweep {
        /// Sweep axis: T, alpha, R0 or t0.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Sweep config file (alternative to --axis/--values).
        #[arg(long)]
        sweep_config: Option<PathBuf>,
    },
    /// Tabulate herd threshold and limit fraction per reproduction number;
    /// writes herd_table.csv.
    HerdTable {
        /// Comma-separated reproduction numbers (> 1).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 2.0, 2.5, 2.9, 3.0, 3.5])]
        r0: Vec<f64>,
        /// Initial susceptible fraction.
        #[arg(long, default_value_t = 1.0 - 1e-6)]
        s0: f64,
    },
    /// Minimal window length reaching S_herd - epsilon; writes min_time.json.
    MinTime {
        /// Target distance below the herd threshold.
        #[arg(long)]
        epsilon: f64,
    },
    /// Projected-gradient solve (shorthand for --solver gradient).
    Gradient,
}

fn scenario_config(cli: &Cli) -> Result<lockdown_opt::ScenarioConfig, CliError> {
    let base = match &cli.config {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    base.overlaid(&cli.overrides.as_file()).resolve()
}

fn main_inner(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Scenario => {
            let cfg = scenario_config(cli)?;
            let outcome = run_scenario(&cfg)?;
            let traj_path = cfg
                .trajectory_path
                .clone()
                .unwrap_or_else(|| cli.out_dir.join("trajectory.csv"));
            let summary_path = cfg
                .summary_path
                .clone()
                .unwrap_or_else(|| cli.out_dir.join("summary.json"));
            write_trajectory_csv(&traj_path, &outcome.trajectory)?;
            write_summary_json(&summary_path, &outcome.summary)?;
            println!(
                "t0* = {:.3} days, S_inf* = {:.6} ({})",
                outcome.summary.t0_star, outcome.summary.s_inf_star, outcome.summary.method
            );
            println!(
                "wrote {} and {}",
                traj_path.display(),
                summary_path.display()
            );
            Ok(())
        }
        Command::Sweep {
            axis,
            values,
            sweep_config,
        } => {
            let overrides = cli.overrides.as_file();
            let file = match (sweep_config, axis) {
                (Some(path), _) => {
                    let mut f = SweepFile::load(path)?;
                    if let Some(a) = axis {
                        f.axis = a.clone();
                    }
                    if !values.is_empty() {
                        f.values = values.clone();
                    }
                    if let Some(cfg_path) = &cli.config {
                        f.fixed = ScenarioFile::load(cfg_path)?.overlaid(&f.fixed);
                    }
                    f
                }
                (None, Some(a)) => SweepFile {
                    axis: a.clone(),
                    values: values.clone(),
                    fixed: match &cli.config {
                        Some(path) => ScenarioFile::load(path)?,
                        None => ScenarioFile::default(),
                    },
                },
                (None, None) => {
                    return Err(CliError::config(
                        "axis",
                        "provide --axis/--values or --sweep-config",
                    ))
                }
            };
            let cfg = file.resolve(&overrides)?;
            let rows = lockdown_opt::run_sweep(&cfg)?;
            let path = cli.out_dir.join("sweep.csv");
            write_sweep_csv(&path, &rows)?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
            Ok(())
        }
        Command::HerdTable { r0, s0 } => {
            let rows = lockdown_opt::herd_table(r0, *s0)?;
            let path = cli.out_dir.join("herd_table.csv");
            write_herd_csv(&path, &rows)?;
            for row in &rows {
                println!(
                    "R0 = {:>4}: S_herd = {:.2}, S_inf = {:.3}, after-threshold share = {:.0}%",
                    row.r0,
                    row.s_herd,
                    row.s_inf,
                    100.0 * row.after_threshold_ratio
                );
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::MinTime { epsilon } => {
            let cfg = scenario_config(cli)?;
            let report = run_min_time(&cfg, *epsilon)?;
            let path = cli.out_dir.join("min_time.json");
            write_json(&path, &report)?;
            println!(
                "T* = {:.2} days (switch at {:.2}, S_inf = {:.6})",
                report.t_star, report.t0_star_at_t_star, report.s_inf_achieved
            );
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Gradient => {
            let mut cfg = scenario_config(cli)?;
            cfg.solver = lockdown_opt::SolverChoice::Gradient;
            let outcome = run_scenario(&cfg)?;
            let traj_path = cli.out_dir.join("trajectory.csv");
            let summary_path = cli.out_dir.join("summary.json");
            write_trajectory_csv(&traj_path, &outcome.trajectory)?;
            write_summary_json(&summary_path, &outcome.summary)?;
            println!(
                "switch estimate {:.3} days, S_inf = {:.6} after {} iterations",
                outcome.summary.t0_star, outcome.summary.s_inf_star, outcome.summary.iterations
            );
            println!(
                "wrote {} and {}",
                traj_path.display(),
                summary_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
