use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsemix_cli::report::render;
use lsemix_cli::run::{self, Overrides};
use lsemix_cli::{parse_scenario, CliError, Result};

/// Stochastic order checks between location-scale mixtures of elliptical laws.
///
/// Exit status: 0 when every requested order is ordered or Monte Carlo
/// verified, 2 when some order fails, 3 when some verdict stays
/// inconclusive, 1 on usage, parse or runtime errors.
#[derive(Parser)]
#[command(name = "lsemix", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Suppress the per-order summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Option<Command>,
    /// Without a subcommand, `--spec` runs `check`.
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the orders in a scenario and write the JSON report (and CSV
    /// curves when the scenario has an `mc` section).
    Check(RunArgs),
    /// Write only the survival and stop-loss curve CSV.
    Curves(RunArgs),
    /// Test a whitespace-delimited square matrix for PSD, copositivity and
    /// complete positivity.
    Cones {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = run::DEFAULT_CONE_TOL)]
        tol: f64,
    },
    /// Tail-ratio limit and the two tail assumptions for a generator, or for
    /// the whole catalog when `--generator` is omitted.
    Assumptions {
        /// cauchy, exponential_power, laplace, normal, student or logistic.
        #[arg(long)]
        generator: Option<String>,
        /// Student degrees of freedom.
        #[arg(long)]
        m: Option<u32>,
        /// Exponential power shape.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        sigma1: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift2: f64,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory for the report and curves.
    #[arg(long, env = "LSEMIX_OUT_DIR", default_value = ".")]
    out: PathBuf,
    /// Root seed; overrides the scenario's seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count; overrides the scenario.
    #[arg(long)]
    samples: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<lsemix_cli::ScenarioSpec> {
        let path = self.spec.as_ref().ok_or_else(|| CliError::Usage("--spec is required".into()))?;
        parse_scenario(&run::read_file(path)?)
    }

    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, samples: self.samples }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let quiet = cli.quiet;
    match cli.command {
        None => check(&cli.run, quiet),
        Some(Command::Check(args)) => check(&args, quiet),
        Some(Command::Curves(args)) => {
            let spec = args.load()?;
            let csv = run::run_curves(&spec, &args.overrides())?;
            let path = run::write_output(&args.out, &spec.outputs.curves, &csv)?;
            if !quiet {
                println!("curves written to {}", path.display());
            }
            Ok(0)
        }
        Some(Command::Cones { matrix, tol }) => {
            let a = run::parse_matrix(&run::read_file(&matrix)?)?;
            print!("{}", render(&run::run_cones(&a, tol)?));
            Ok(0)
        }
        Some(Command::Assumptions { generator, m, s, sigma1, sigma2, shift1, shift2 }) => {
            let g = generator.map(|name| run::generator_by_name(&name, m, s)).transpose()?;
            print!("{}", render(&run::run_assumptions(g, sigma1, sigma2, shift1, shift2)?));
            Ok(0)
        }
    }
}

fn check(args: &RunArgs, quiet: bool) -> Result<i32> {
    let spec = args.load()?;
    let outcome = run::run_check(&spec, &args.overrides())?;
    let report_path = run::write_output(&args.out, &spec.outputs.report, &render(&outcome.report))?;
    let curves_path = match &outcome.curves {
        Some(csv) => Some(run::write_output(&args.out, &spec.outputs.curves, csv)?),
        None => None,
    };
    if !quiet {
        for order in outcome.report["orders"].as_array().into_iter().flatten() {
            let mc = match order.get("mc") {
                Some(m) if m["pass"] == true => "  (mc pass)",
                Some(_) => "  (mc fail)",
                None => "",
            };
            println!("{:<6} {}{mc}", order["order"].as_str().unwrap_or("?"), order["verdict"].as_str().unwrap_or("?"));
        }
        println!("report written to {}", report_path.display());
        if let Some(p) = curves_path {
            println!("curves written to {}", p.display());
        }
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
