//! `cets` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cets::model::ModelParams;
use cets::output::{emit_outputs, parse_formats, PlotKind};
use cets::sweep::{noise_study, run_point, run_sweep, Axis, Dataset, NoiseConfig, PointOptions, RecoverMode, SweepSpec};
use cets::synth::{build_chain_circuit, build_triangle_circuit, export_circuit};
use cets::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cets", version, about = "Thermal-state circuits for small Ising magnets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline at one (beta, h) point and print the row as JSON.
    Point(PointArgs),
    /// Sweep a (beta, h) grid and write CSV/JSON/SVG outputs.
    Sweep(SweepArgs),
    /// Synthesize a circuit and write it in .cets text form.
    Circuit(CircuitArgs),
    /// Noise figures of merit (eta estimates, fidelities) at one point.
    NoiseStudy(PointArgs),
}

#[derive(Args, Debug, Clone)]
struct NoiseArgs {
    /// Depolarizing strength (1 = noiseless).
    #[arg(long, conflicts_with = "decay_profile")]
    eta: Option<f64>,
    /// JSON file of per-observable decay durations and T2.
    #[arg(long)]
    decay_profile: Option<PathBuf>,
    /// Recovery factor: a number in (0, 1], `auto`, or `off`.
    #[arg(long, value_parser = parse_recover)]
    recover: Option<RecoverMode>,
    /// Sample probe readouts with this many shots.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl NoiseArgs {
    fn noise(&self) -> Option<NoiseConfig> {
        if let Some(eta) = self.eta {
            Some(NoiseConfig::Depolarizing { eta })
        } else {
            self.decay_profile.clone().map(|path| NoiseConfig::DecayFile { path })
        }
    }

    fn point_options(&self) -> PointOptions {
        PointOptions {
            noise: self.noise().unwrap_or_default(),
            recover: self.recover.unwrap_or_default(),
            shots: self.shots,
            seed: self.seed.unwrap_or(0),
        }
    }
}

#[derive(Args, Debug)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    h: f64,
    #[arg(long = "J", default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scalar, `min:max:steps`, or comma-separated list.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    beta: Option<Axis>,
    /// Scalar, `min:max:steps`, or comma-separated list.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    h: Option<Axis>,
    #[arg(long = "J", allow_hyphen_values = true)]
    coupling: Option<f64>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg (default csv,svg).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    parallel: Option<usize>,
    /// M-vs-h, S-vs-h, M-heatmap, S-heatmap, ...
    #[arg(long, value_parser = parse_plot)]
    plot: Option<PlotKind>,
}

#[derive(Args, Debug)]
struct CircuitArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    h: f64,
    #[arg(long = "J", default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    /// Open chain of this many spins instead of the triangle.
    #[arg(long)]
    chain: Option<usize>,
    /// Prepend the probe qubit (triangle only).
    #[arg(long)]
    probe: bool,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_recover(s: &str) -> std::result::Result<RecoverMode, String> {
    match s {
        "auto" => Ok(RecoverMode::Auto),
        "off" | "none" => Ok(RecoverMode::Off),
        v => v
            .parse::<f64>()
            .map(RecoverMode::Fixed)
            .map_err(|_| format!("expected a number, `auto` or `off`, got {v:?}")),
    }
}

fn parse_axis(s: &str) -> std::result::Result<Axis, String> {
    Axis::parse(s).map_err(|e| e.to_string())
}

fn parse_plot(s: &str) -> std::result::Result<PlotKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::NumericConsistency(format!("serialization failed: {e}")))?;
    write_stdout(&format!("{s}\n"))
}

fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SweepSpec::from_json(&text).map_err(|e| e.context(format!("reading {}", path.display())))?
        }
        None => SweepSpec {
            formats: parse_formats("csv,svg")?,
            ..Default::default()
        },
    };
    if let Some(b) = &args.beta {
        spec.beta = b.clone();
    }
    if let Some(h) = &args.h {
        spec.h = h.clone();
    }
    if let Some(j) = args.coupling {
        spec.coupling = j;
    }
    if let Some(n) = args.noise.noise() {
        spec.noise = n;
    }
    if let Some(r) = args.noise.recover {
        spec.recover = r;
    }
    if args.noise.shots.is_some() {
        spec.shots = args.noise.shots;
    }
    if let Some(s) = args.noise.seed {
        spec.seed = s;
    }
    if let Some(p) = args.parallel {
        spec.parallelism = p;
    }
    if let Some(f) = &args.format {
        spec.formats = parse_formats(f)?;
    }
    if args.plot.is_some() {
        spec.plot = args.plot;
    }
    if args.out_dir.is_some() {
        spec.out_dir = args.out_dir.clone();
    }
    if spec.out_dir.is_none() && !spec.formats.is_empty() {
        spec.out_dir = Some(PathBuf::from("."));
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Point(a) => {
            let row = run_point(&ModelParams::triangle(a.coupling, a.h, a.beta), &a.noise.point_options())?;
            print_json(&row)
        }
        Command::NoiseStudy(a) => {
            let study = noise_study(&ModelParams::triangle(a.coupling, a.h, a.beta), &a.noise.point_options())?;
            print_json(&study)
        }
        Command::Sweep(a) => {
            let spec = sweep_spec(&a)?;
            let ds: Dataset = run_sweep(&spec)?;
            let dir = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            for path in emit_outputs(&ds, &spec.formats, &dir, spec.plot)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Circuit(a) => {
            let circuit = match a.chain {
                Some(_) if a.probe => {
                    return Err(Error::Usage("--probe is only available for the triangle".into()))
                }
                Some(n) => build_chain_circuit(&ModelParams::chain(n, a.coupling, a.h, a.beta))?,
                None => build_triangle_circuit(&ModelParams::triangle(a.coupling, a.h, a.beta), a.probe)?,
            };
            let text = export_circuit(&circuit);
            match a.out {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e)),
                None => write_stdout(&text),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
