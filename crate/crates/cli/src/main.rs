use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ks1d_cli::config::{load, RunConfig};
use ks1d_cli::verify::{Suite, ALL_SUITES};
use ks1d_cli::{convergence, parse_list, solve, sweep, thread_pool, verify, CliError, Outcome};

#[derive(Parser)]
#[command(
    name = "ks1d",
    version,
    about = "1D Kohn-Sham / Schrodinger-Poisson solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Device configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to output.dir from the config, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and convergence studies.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized verification.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the self-consistent problem once.
    Solve,
    /// Independent solves over a list of parameter values.
    Sweep {
        /// One of kt, beta, n, q, xc.c.
        #[arg(long)]
        param: String,
        /// Comma separated values.
        #[arg(long)]
        values: String,
    },
    /// Numerical checks of the analytic properties.
    Verify {
        /// Comma separated subset of bounds, trace, monotonicity, apriori,
        /// uniqueness, limit.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Eigenvalue and density errors against grid size.
    Convergence {
        /// Comma separated ascending element counts.
        #[arg(long, default_value = "250,500,1000,2000")]
        n: String,
    },
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.raw.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = load(path)?;
    let dir = out_dir(cli, &cfg);
    match &cli.command {
        Command::Solve => {
            let (outcome, s) = solve::run_solve(&cfg, &dir)?;
            println!(
                "converged={} iterations={} mu={} residual={:e}",
                s.converged, s.iterations, s.mu, s.fixed_point_residual
            );
            Ok(outcome)
        }
        Command::Sweep { param, values } => {
            let values: Vec<f64> = parse_list(values)?;
            let pool = thread_pool(cli.workers)?;
            let (outcome, points) = sweep::run_sweep(&cfg, param, &values, &dir, &pool)?;
            for p in &points {
                println!("{param}={} {}", p.value, p.status);
            }
            Ok(outcome)
        }
        Command::Verify { suite } => {
            let suites: Vec<Suite> = match suite {
                Some(s) => parse_list(s)?,
                None => ALL_SUITES.to_vec(),
            };
            let report = verify::run_verify(&cfg, &suites, cli.seed)?;
            verify::write_report(&report, &dir)?;
            println!(
                "gamma={} M={} rho_V={:?}",
                report.gamma, report.monotonicity_constant, report.rho_v
            );
            for c in &report.checks {
                println!("{:?}: {:?}", c.suite, c.status);
            }
            Ok(Outcome::Success)
        }
        Command::Convergence { n } => {
            let ns: Vec<usize> = parse_list(n)?;
            let pool = thread_pool(cli.workers)?;
            let study = convergence::run_convergence(&cfg, &ns, &pool)?;
            convergence::write_study(&study, &dir)?;
            print!("{}", convergence::table(&study));
            Ok(Outcome::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("ks1d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
