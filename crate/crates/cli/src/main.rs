use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use willmore_cli::config::{Command, RunConfig};
use willmore_cli::error::CliError;
use willmore_cli::execute;
use willmore_core::Scheme;

#[derive(Args)]
struct Common {
    /// JSON run config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid samples per direction.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Energy of a torus of revolution with a convergence table, or of an OBJ mesh.
    Energy {
        /// Radii `R r`; `sqrt2` is accepted for `√2`.
        #[arg(long, num_args = 2, value_names = ["R", "r"], value_parser = parse_radius)]
        torus: Option<Vec<f64>>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Mode table of the second variation, coercivity constant and kernel cross-check.
    Spectrum {
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Gradient flow from an OBJ mesh or from a perturbed Clifford torus.
    Flow(FlowArgs),
    /// Split an OBJ mesh into a Möbius gauge and a normal graph.
    Decompose {
        input: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Write a perturbed, Möbius-moved Clifford torus as OBJ.
    Export {
        #[arg(long)]
        direction: Option<usize>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Energy excess along normal graphs of the S³ Clifford torus.
    Gapscan {
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
    },
    /// Energy of seeded Möbius images of the Clifford torus.
    Invariance {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Decompose seeded Möbius-moved graphs and compare with the truth.
    Roundtrip {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        amplitude: Option<f64>,
    },
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    direction: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    dt_init: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Keep the Möbius gauge drift instead of removing it on regraph.
    #[arg(long)]
    no_gauge_fixing: bool,
}

/// Willmore-energy experiments on tori near the Clifford torus.
#[derive(Parser)]
#[command(name = "willmore", version)]
struct Wrapper {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Sub,
}

fn parse_radius(s: &str) -> Result<f64, String> {
    match s {
        "sqrt2" | "√2" => Ok(std::f64::consts::SQRT_2),
        _ => s.parse().map_err(|e| format!("{s}: {e}")),
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown scheme {s}"))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn command_of(sub: &Sub) -> Command {
    match sub {
        Sub::Energy { .. } => Command::Energy,
        Sub::Spectrum { .. } => Command::Spectrum,
        Sub::Flow(_) => Command::Flow,
        Sub::Decompose { .. } => Command::Decompose,
        Sub::Export { .. } => Command::Export,
        Sub::Gapscan { .. } => Command::Gapscan,
        Sub::Invariance { .. } => Command::Invariance,
        Sub::Roundtrip { .. } => Command::Roundtrip,
    }
}

fn build_config(common: Common, sub: Sub) -> Result<RunConfig, CliError> {
    let command = command_of(&sub);
    let mut c = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            let c = RunConfig::from_json(&text)?;
            if c.command != command {
                return Err(CliError::Config(format!("{} is a {:?} config", path.display(), c.command)));
            }
            c
        }
        None => RunConfig::for_command(command),
    };
    set(&mut c.output_dir, common.out);
    set(&mut c.n, common.n);
    set(&mut c.seed, common.seed);
    match sub {
        Sub::Energy { torus, input } => {
            if let Some(t) = torus {
                (c.major, c.minor) = (t[0], t[1]);
            }
            c.input = input.or(c.input);
        }
        Sub::Spectrum { cutoff } => set(&mut c.cutoff, cutoff),
        Sub::Flow(a) => {
            c.input = a.input.or(c.input);
            set(&mut c.direction, a.direction);
            set(&mut c.amplitude, a.amplitude);
            set(&mut c.scheme, a.scheme);
            set(&mut c.max_steps, a.max_steps);
            set(&mut c.grad_tol, a.grad_tol);
            set(&mut c.dt_init, a.dt_init);
            set(&mut c.dt_max, a.dt_max);
            set(&mut c.snapshot_every, a.snapshot_every);
            if a.no_gauge_fixing {
                c.gauge_fixing = false;
            }
        }
        Sub::Decompose { input, tol, delta } => {
            c.input = Some(input);
            set(&mut c.decompose_tol, tol);
            set(&mut c.decompose_delta, delta);
        }
        Sub::Export { direction, amplitude, epsilon } => {
            set(&mut c.direction, direction);
            set(&mut c.amplitude, amplitude);
            set(&mut c.epsilon, epsilon);
        }
        Sub::Gapscan { amplitudes } => set(&mut c.amplitudes, amplitudes),
        Sub::Invariance { samples, epsilon } => {
            set(&mut c.samples, samples);
            set(&mut c.epsilon, epsilon);
        }
        Sub::Roundtrip { samples, epsilon, amplitude } => {
            set(&mut c.samples, samples);
            set(&mut c.epsilon, epsilon);
            set(&mut c.amplitude, amplitude);
        }
    }
    Ok(c)
}

fn main() -> ExitCode {
    let Wrapper { common, command } = Wrapper::parse();
    let print_only = common.print_config;
    let result = build_config(common, command).and_then(|config| {
        if print_only {
            println!("{}", serde_json::to_string_pretty(&config).expect("config serializes"));
            return Ok(());
        }
        let started = Instant::now();
        let summary = execute(&config)?;
        print!("{summary}");
        println!("outputs in {} ({:.2} s)", config.output_dir.display(), started.elapsed().as_secs_f64());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
