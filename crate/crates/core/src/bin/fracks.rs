use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracks::analysis::{build_test_function, default_beta, BlowupCriterion};
use fracks::inequality::{estimate_gns_constant, write_gns_csv, TrialFamily};
use fracks::runner::{
    self, exit_code, preset, preset_sweep, verify, RunConfig, Suite, SweepConfig, EXIT_CONFIG,
    EXIT_VERIFY,
};
use fracks::spectral::make_grid;
use fracks::{sci, Error};

#[derive(Parser)]
#[command(name = "fracks", version, about = "Keller-Segel with fractional diffusion: runs, sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named scenario.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides the configuration; default for presets: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a mass/scale phase sweep.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured number of concurrent cells.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Run a verification suite: operators, inequalities, oracles or all.
    Verify { suite: String },
    /// Estimate a GNS constant C(p, alpha).
    Gns {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = runner::REFERENCE_GNS_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Append-free CSV output (`p,alpha,C_hat,trials,seed`); stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the auxiliary test function and print its constants.
    Testfn {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        half_width: f64,
        /// Write `x,phi,phi_prime,omega` samples.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => 1,
            };
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(cmd: Command) -> fracks::Result<i32> {
    match cmd {
        Command::Run { source, out } => {
            let mut cfg = match (&source.config, &source.preset) {
                (Some(path), _) => RunConfig::load(path)?,
                (None, Some(name)) => preset(name, &PathBuf::from("runs").join(name))?,
                (None, None) => unreachable!("clap enforces a source"),
            };
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let report = runner::run(&cfg)?;
            for (k, v) in &report.summary {
                println!("{k}={v}");
            }
            Ok(exit_code(report.outcome()))
        }
        Command::Sweep {
            source,
            out,
            parallelism,
        } => {
            let mut cfg = match (&source.config, &source.preset) {
                (Some(path), _) => SweepConfig::load(path)?,
                (None, Some(name)) => preset_sweep(name, &PathBuf::from("runs").join(name))?,
                (None, None) => unreachable!("clap enforces a source"),
            };
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let points = runner::sweep(&cfg)?;
            let stdout = std::io::stdout();
            runner::write_phase_csv(&points, stdout.lock())
                .map_err(|e| Error::io(&cfg.output_dir, e))?;
            Ok(0)
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let checks = verify(suite)?;
            for c in &checks {
                println!("{c}");
            }
            Ok(if checks.iter().all(|c| c.passed) {
                0
            } else {
                EXIT_VERIFY
            })
        }
        Command::Gns {
            p,
            alpha,
            budget,
            seed,
            out,
        } => {
            let family = TrialFamily::standard(TrialFamily::reference_grid()?)?;
            let est = estimate_gns_constant(p, alpha, &family, budget, seed)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    write_gns_csv(std::slice::from_ref(&est), file).map_err(|e| Error::io(&path, e))?;
                }
                None => {
                    write_gns_csv(std::slice::from_ref(&est), std::io::stdout().lock())
                        .map_err(|e| Error::io("stdout", e))?;
                }
            }
            eprintln!(
                "argmax member {} params {:?}",
                est.argmax_member, est.argmax_params
            );
            Ok(0)
        }
        Command::Testfn {
            alpha,
            beta,
            n,
            half_width,
            out,
        } => {
            let beta = beta.unwrap_or_else(|| default_beta(alpha));
            let grid = make_grid(n, half_width)?;
            let tf = build_test_function(alpha, beta, &grid)?;
            let crit = BlowupCriterion::new(&tf, 1.0)?;
            println!("alpha={}", sci(alpha));
            println!("beta={}", sci(beta));
            println!("c_omega={}", sci(tf.c_omega));
            println!("omega_at_origin={}", sci(tf.omega_at_origin()));
            println!("kappa={}", sci(tf.profile().kappa()));
            println!("c_r={}", sci(crit.c_r));
            println!("balancing_c={}", sci(crit.c));
            println!("k2_effective={}", sci(crit.k2_effective));
            if let Some(path) = out {
                let mut text = String::from("x,phi,phi_prime,omega\n");
                for (i, x) in grid.coords().iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{},{}\n",
                        sci(*x),
                        sci(tf.phi[i]),
                        sci(tf.phi_prime[i]),
                        sci(tf.omega[i])
                    ));
                }
                std::fs::File::create(&path)
                    .and_then(|mut f| f.write_all(text.as_bytes()))
                    .map_err(|e| Error::io(&path, e))?;
            }
            Ok(0)
        }
    }
}
