use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use filterstab_cli::config::EpsGrid;
use filterstab_cli::presets::bsc_preset;
use filterstab_cli::sweep::{check_assumptions, format_float};
use filterstab_cli::{run_sweep, write_outputs, CliError, ExperimentConfig, RunOptions, SweepOutcome};
use filterstab_core::bounds::{az_gaussian_bound, bound_report, bsc_lower_bound_curve, bsc_quantities, kz_asymptotic};

#[derive(Parser)]
#[command(name = "filterstab", version, about = "Stability index of the nonlinear filter for slowly switching chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a config and report the noise assumption checks.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the analytic bounds at every ε of the config.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate at a single ε.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the config's ε grid.
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate over the config's ε grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Preset binary symmetric channel sweep.
    Bsc {
        #[arg(long, default_value_t = 0.2)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `estimator.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Run even if the noise model fails the assumption checks.
    #[arg(long)]
    override_assumptions: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Validate { config } => validate(&ExperimentConfig::load(&config)?),
        Command::Bounds { config } => bounds(&ExperimentConfig::load(&config)?),
        Command::Estimate { config, eps, run } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.eps = EpsGrid { values: Some(vec![eps]), log_grid: None };
            experiment(cfg, run)
        }
        Command::Sweep { config, run } => experiment(ExperimentConfig::load(&config)?, run),
        Command::Bsc { p, lambda, run } => experiment(bsc_preset(p, lambda, 0), run),
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<ExitCode, CliError> {
    let spec = cfg.base_spec()?;
    let r = spec.noise().validate_assumptions();
    println!("states: {}", spec.dim());
    println!("eps grid: {:?}", cfg.eps_values()?);
    println!("a1 bounded densities: {}", r.a1_bounded);
    println!("a2 common support: {}", r.a2_common_support);
    println!("a3 finite cross-entropies: {}", r.a3_finite_cross_entropies);
    for (i, j) in &r.witnesses {
        println!("violation: states ({i}, {j})");
    }
    Ok(if r.admissible() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn bounds(cfg: &ExperimentConfig) -> Result<ExitCode, CliError> {
    let base = cfg.base_spec()?;
    check_assumptions(&base, false)?;
    if let Ok(az) = az_gaussian_bound(&base) {
        println!("az_gaussian_bound: {az:?}");
    }
    let bsc = base.as_bsc();
    if let Some(b) = bsc {
        let q = bsc_quantities(b.p)?;
        println!("bsc: D_p = {:?}, h(p) = {:?}", q.d_p, q.h_p);
    }
    println!("eps,theorem1_bound,d2_exact_limit,lemma2_bound,lemma2_exact_d2,lambda1_limit,coarse_d2_bound,ex_eq_lower,kz_asymptotic");
    for eps in cfg.eps_values()? {
        let spec = base.with_eps(eps)?;
        let r = bound_report(&spec)?;
        let (ex_eq, kz) = match bsc {
            Some(b) => (bsc_lower_bound_curve(b.p, b.lambda, eps).ok(), kz_asymptotic(b.p, b.lambda, eps).ok()),
            None => (None, None),
        };
        let cols = [
            Some(eps),
            Some(r.theorem1_bound),
            r.d2_exact_limit,
            Some(r.lemma2_bound),
            r.lemma2_exact_d2,
            Some(r.lambda1_limit),
            r.coarse_d2_bound,
            ex_eq,
            kz,
        ];
        println!("{}", cols.map(format_float).join(","));
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(mut cfg: ExperimentConfig, args: RunArgs) -> Result<ExitCode, CliError> {
    if let Some(seed) = args.seed {
        cfg.estimator.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let opts = RunOptions { workers: args.workers, override_assumptions: args.override_assumptions };
    let outcome = run_sweep(&cfg, opts)?;
    let paths = write_outputs(&cfg, &outcome, opts, &cfg.output.dir)?;
    summarize(&outcome);
    println!("wrote {}, {}, {}", paths.csv.display(), paths.plotdata.display(), paths.manifest.display());
    Ok(if outcome.has_failures() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn summarize(outcome: &SweepOutcome) {
    println!("{:>12} {:>12} {:>10} {:>12} {:>12}", "eps", "gamma", "stderr", "lambda1", "bound");
    for r in &outcome.rows {
        match &r.error {
            Some(e) => println!("{:>12.4e} failed: {e}", r.eps),
            None => println!(
                "{:>12.4e} {:>12.6} {:>10.2e} {:>12.6} {:>12.6}",
                r.eps,
                r.gamma_hat.unwrap_or(f64::NAN),
                r.gamma_stderr.unwrap_or(f64::NAN),
                r.lambda1_hat.unwrap_or(f64::NAN),
                r.theorem1_bound.unwrap_or(f64::NAN),
            ),
        }
    }
}
