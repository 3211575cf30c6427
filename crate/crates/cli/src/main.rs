use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cns_observer::experiment::{emit_plot_data, run_scenario, ScenarioConfig, ScenarioId};
use cns_observer::spectral::{
    design_kernels_density, design_kernels_velocity, eigenvalues_closed_form, optimal_nudging,
    FluidParams, KernelCoeffs, Observation, WaveNumber,
};
use cns_observer::Result;

/// Feedback observers for the compressible Navier-Stokes equations.
#[derive(Parser)]
#[command(name = "cnsobs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write CSV traces.
    Run(RunArgs),
    /// Print the preset configuration of a scenario as TOML.
    Preset {
        scenario: String,
    },
    /// Print kernel coefficients from the decay-rate design rule.
    Design(DesignArgs),
    /// Print closed-form eigenvalues per mode.
    Theory(TheoryArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(short, long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Preset scenario id (instead of a file).
    #[arg(short, long)]
    scenario: Option<String>,
    /// Override a field, e.g. `--set n_cells=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Skip writing files.
    #[arg(long)]
    no_write: bool,
}

#[derive(Args)]
struct FluidArgs {
    #[arg(long, default_value_t = 1.4)]
    gamma: f64,
    #[arg(long, default_value_t = 0.025)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    lam: f64,
    #[arg(long, default_value_t = 1.0)]
    rho0: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl FluidArgs {
    fn params(&self) -> Result<FluidParams> {
        FluidParams::new(self.gamma, self.mu, self.lam, self.rho0, self.dim)
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Target decay rate.
    #[arg(long)]
    rate: f64,
    /// Highest controlled |k|.
    #[arg(long, default_value_t = 3.0)]
    cutoff: f64,
    #[arg(long, default_value = "velocity")]
    observe: Observation,
    #[command(flatten)]
    fluid: FluidArgs,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 0.0)]
    phi_rho: f64,
    #[arg(long, default_value_t = 0.0)]
    phi_u: f64,
    #[arg(long, default_value = "velocity")]
    observe: Observation,
    /// Print modes |k| = 1..=kmax (one-dimensional lattice direction).
    #[arg(long, default_value_t = 3)]
    kmax: i64,
    #[command(flatten)]
    fluid: FluidArgs,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.3}"))
}

fn run(args: RunArgs) -> Result<()> {
    let config = match (&args.config, &args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path, &args.overrides)?,
        (None, Some(id)) => {
            ScenarioConfig::from_toml_str(&format!("scenario = \"{id}\""), &args.overrides)?
        }
        (None, None) => {
            return Err(cns_observer::Error::Config(
                "give --config FILE or --scenario ID".into(),
            ))
        }
    };
    let result = run_scenario(&config)?;
    println!("scenario {}", config.scenario);
    print!("{}", result.pretty_table());
    for row in &result.rows {
        if let Some((_, msg)) = &row.failure {
            eprintln!("row {}: {msg}", fmt_opt(row.value));
        }
    }
    if !args.no_write {
        let written = emit_plot_data(&result, &args.out)?;
        println!("wrote {} files under {}", written.len(), args.out.join(config.scenario.as_str()).display());
    }
    Ok(())
}

fn print_kernels(k: &KernelCoeffs) {
    println!("{:>6} {:>10} {:>10}", "|k|^2", "rho", "u");
    for (m, rho) in &k.rho {
        println!("{m:>6} {rho:>10.3} {:>10.3}", k.u_coeff(*m));
    }
    println!("coefficients vanish for |k| > {}", k.cutoff);
}

fn design(args: DesignArgs) -> Result<()> {
    let params = args.fluid.params()?;
    let kernels = match args.observe {
        Observation::Velocity => design_kernels_velocity(args.rate, args.cutoff, &params)?,
        Observation::Density => design_kernels_density(args.rate, args.cutoff, &params)?,
    };
    print_kernels(&kernels);
    Ok(())
}

fn theory(args: TheoryArgs) -> Result<()> {
    let params = args.fluid.params()?;
    let kernels = KernelCoeffs::uniform(args.observe, args.phi_rho, args.phi_u);
    println!(
        "{:>4} {:>18} {:>18} {:>8} {:>8} {:>12}",
        "k", "lambda_+", "lambda_-", "decay", "period", "best nudge"
    );
    for k in 1..=args.kmax {
        let mut comps = vec![0; params.dim];
        comps[0] = k;
        let wave = WaveNumber::new(comps)?;
        let e = eigenvalues_closed_form(&params, &kernels, &wave)?;
        let best = optimal_nudging(&params, &wave, args.observe)?;
        let c = |z: num_complex::Complex64| format!("{:.3}{:+.3}i", z.re, z.im);
        println!(
            "{k:>4} {:>18} {:>18} {:>8.3} {:>8} {:>12}",
            c(e.lambda_plus),
            c(e.lambda_minus),
            e.decay_rate,
            fmt_opt(e.period),
            format!("{:.3}@{:.3}", best.rate, best.coefficient)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Preset { scenario } => scenario
            .parse::<ScenarioId>()
            .and_then(|id| ScenarioConfig::preset(id).to_toml_string())
            .map(|text| print!("{text}")),
        Command::Design(args) => design(args),
        Command::Theory(args) => theory(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
