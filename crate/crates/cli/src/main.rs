use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steering_cli::commands::{cmd_decide, cmd_dilate, cmd_jm, cmd_verify, GlobalOptions, Output, Route};
use steering_cli::demo::{run_demo, DemoParams};
use steering_cli::error::CliError;
use steering_cli::scenario::ToleranceOverrides;
use steering_core::compat::DEFAULT_STRATEGY_CAP;

#[derive(Parser)]
#[command(
    name = "steer",
    version,
    about = "Decide steerability and joint measurability with verifiable certificates"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized demos.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest number of deterministic strategies the solver will enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_STRATEGY_CAP)]
    strategy_cap: usize,
    /// Override the Hermiticity tolerance (max-abs of A − A†).
    #[arg(long, global = true)]
    tol_hermiticity: Option<f64>,
    /// Override the PSD tolerance (smallest admissible eigenvalue is its negative).
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    /// Override the entrywise equality tolerance.
    #[arg(long, global = true)]
    tol_equality: Option<f64>,
    /// Override the eigenvalue cutoff below which a direction counts as kernel.
    #[arg(long, global = true)]
    tol_support: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Spatial,
    Temporal,
    Channel,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Decide steerability of a scenario file.
    Decide {
        file: PathBuf,
        /// Which reduction to use; `auto` picks it from the file kind.
        #[arg(long = "scenario", value_enum, default_value = "auto")]
        route: RouteArg,
        /// Re-check the certificate before reporting.
        #[arg(long)]
        verify: bool,
    },
    /// Decide joint measurability of a measurement assemblage.
    Jm {
        file: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Minimal Stinespring dilation of a channel.
    Dilate { file: PathBuf },
    /// Run a built-in demonstration.
    Demo {
        /// isotropic, appendix-a, appendix-b, appendix-c, embed, rand-channel or rand-assemblage.
        name: String,
        /// Number of measurement settings.
        #[arg(long)]
        settings: Option<usize>,
        /// Isotropic-state weight.
        #[arg(long)]
        lambda: Option<f64>,
        /// Measurement sharpness.
        #[arg(long)]
        eta: Option<f64>,
        /// Qutrit-pair state parameter in (0, 3/2].
        #[arg(long)]
        a: Option<f64>,
        /// Choi rank of the random channel.
        #[arg(long)]
        choi_rank: Option<usize>,
        /// Hilbert-space dimension.
        #[arg(long)]
        dim: Option<usize>,
        /// Directory the scenario files are written to.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-check a report's certificate against its scenario without solving.
    Verify { scenario: PathBuf, report: PathBuf },
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let g = &cli.global;
    let opts = GlobalOptions {
        tolerances: ToleranceOverrides {
            hermiticity_tol: g.tol_hermiticity,
            psd_tol: g.tol_psd,
            equality_tol: g.tol_equality,
            support_tol: g.tol_support,
        },
        strategy_cap: g.strategy_cap,
        seed: g.seed,
    };
    match cli.command {
        Command::Decide { file, route, verify } => {
            let route = match route {
                RouteArg::Spatial => Some(Route::Spatial),
                RouteArg::Temporal => Some(Route::Temporal),
                RouteArg::Channel => Some(Route::Channel),
                RouteArg::Auto => None,
            };
            cmd_decide(&file, route, verify, &opts)
        }
        Command::Jm { file, verify } => cmd_jm(&file, verify, &opts),
        Command::Dilate { file } => cmd_dilate(&file, &opts),
        Command::Demo {
            name,
            settings,
            lambda,
            eta,
            a,
            choi_rank,
            dim,
            out,
        } => {
            let params = DemoParams {
                settings,
                lambda,
                eta,
                a,
                seed: None,
                choi_rank,
                dim,
                out,
            };
            run_demo(&name, &params, &opts)
        }
        Command::Verify { scenario, report } => cmd_verify(&scenario, &report, &opts),
    }
}

fn fail(e: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&e.report()).expect("error reports always serialize")
        );
    } else {
        eprintln!("error[{}]: {e}", e.code());
    }
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let json = std::env::args().any(|a| a == "--json");
            return fail(&CliError::Usage(e.render().to_string().trim_end().to_string()), json);
        }
    };
    let json = cli.global.json;
    match run(cli) {
        Ok(out) => {
            let text = if json {
                serde_json::to_string_pretty(&out.json).expect("JSON values always serialize")
            } else {
                out.text
            };
            // A closed pipe downstream is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => fail(&e, json),
    }
}
