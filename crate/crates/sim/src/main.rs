use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpmeq::channel::{ChannelProfile, NoiseReference};
use cpmeq::coding::Labeling;
use cpmeq::num::LogSum;
use cpmeq::DemodPrior;
use cpmeq_sim::{
    gnuplot_script, read_records, run_monte_carlo_with, write_records, BerRecord, Precision, Preset, SimConfig,
    SimError,
};

/// Monte Carlo BER simulation of the iterative CPM receiver.
#[derive(Debug, Parser)]
#[command(name = "cpmeq-sim", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a gnuplot script for a CSV written by a previous run.
    Gnuplot {
        csv: PathBuf,
        /// Outer iterations to draw (default: first and last).
        #[arg(long, value_delimiter = ',')]
        outer: Vec<usize>,
        /// Write the script here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Named parameter set; other flags override its values.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// tu6, proakis-c, flat or file:PATH.
    #[arg(long)]
    channel: Option<String>,
    /// Comma separated Eb/N0 points in dB (`inf` for noiseless).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ebn0: Option<Vec<f64>>,
    #[arg(long)]
    outer: Option<usize>,
    #[arg(long)]
    inner: Option<usize>,
    /// Frames per Eb/N0 point.
    #[arg(long)]
    frames: Option<usize>,
    /// Stop a point once the final iteration has this many bit errors.
    #[arg(long)]
    max_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output. Presets with several runs write one file per run,
    /// suffixed with the run label.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Cyclic prefix in symbols (default: shortest covering the channel).
    #[arg(long)]
    prefix: Option<usize>,
    /// Signal power the Eb/N0 refers to: received or transmitted.
    #[arg(long, value_parser = parse_noise_ref)]
    noise_ref: Option<NoiseReference>,
    /// Demodulator prior inside the inner loop: extrinsic or posterior.
    #[arg(long, value_parser = parse_demod_prior)]
    demod_prior: Option<DemodPrior>,
    /// Bit-to-symbol labeling: natural or gray.
    #[arg(long, value_parser = parse_labeling)]
    labeling: Option<Labeling>,
    /// Use the max-log approximation in the trellis recursions.
    #[arg(long)]
    max_log: bool,
    /// Damping factor in (0, 1] on the equalizer estimates.
    #[arg(long)]
    damping: Option<f64>,
    /// f32 or f64.
    #[arg(long, value_parser = parse_precision)]
    precision: Option<Precision>,
    /// Record wall-clock seconds per point in the CSV.
    #[arg(long)]
    timing: bool,
    /// Print the resolved parameters and exit.
    #[arg(long)]
    dump_config: bool,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

fn parse_noise_ref(s: &str) -> Result<NoiseReference, String> {
    s.parse().map_err(|e: cpmeq::Error| e.to_string())
}

fn parse_demod_prior(s: &str) -> Result<DemodPrior, String> {
    s.parse().map_err(|e: cpmeq::Error| e.to_string())
}

fn parse_labeling(s: &str) -> Result<Labeling, String> {
    s.parse().map_err(|e: cpmeq::Error| e.to_string())
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

fn load_channel(spec: &str) -> Result<ChannelProfile, SimError> {
    match spec.strip_prefix("file:") {
        Some(path) => Ok(ChannelProfile::load(Path::new(path))?),
        None => Ok(ChannelProfile::builtin(spec)?),
    }
}

fn resolve(args: &RunArgs) -> Result<Vec<SimConfig>, SimError> {
    let mut runs = match (args.preset, &args.channel) {
        (Some(p), _) => p.runs(),
        (None, Some(c)) => {
            let ch = load_channel(c)?;
            vec![SimConfig::new(&ch.name.clone(), ch)]
        }
        (None, None) => vec![SimConfig::new("tu6", ChannelProfile::tu6())],
    };
    for run in &mut runs {
        if let (Some(_), Some(c)) = (args.preset, &args.channel) {
            run.channel = load_channel(c)?;
        }
        if args.channel.is_some() || args.prefix.is_some() {
            run.link.prefix = match args.prefix {
                Some(p) => p,
                None => run.link.prefix_for_channel(run.channel.len()),
            };
        }
        if let Some(v) = &args.ebn0 {
            run.ebn0_db = v.clone();
        }
        if let Some(v) = args.outer {
            run.outer = v;
        }
        if let Some(v) = args.inner {
            run.inner = v;
        }
        if let Some(v) = args.frames {
            run.max_frames = v;
        }
        if let Some(v) = args.max_errors {
            run.max_errors = Some(v);
        }
        if let Some(v) = args.seed {
            run.seed = v;
        }
        if let Some(v) = args.noise_ref {
            run.noise_reference = v;
        }
        if let Some(v) = args.demod_prior {
            run.demod_prior = v;
        }
        if let Some(v) = args.labeling {
            run.link.labeling = v;
        }
        if args.max_log {
            run.log_sum = LogSum::MaxLog;
        }
        if args.damping.is_some() {
            run.damping = args.damping;
        }
        if let Some(v) = args.precision {
            run.precision = v;
        }
        run.timing = args.timing;
        run.validate()?;
    }
    Ok(runs)
}

fn output_path(base: &Path, run: &SimConfig, multi: bool) -> PathBuf {
    if !multi {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("ber");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{}.{ext}", run.label),
        None => format!("{stem}-{}", run.label),
    };
    base.with_file_name(name)
}

fn print_point(point: &[BerRecord]) {
    let first = &point[0];
    let last = &point[point.len() - 1];
    println!(
        "{:>8} {:>7} {:>11} {:>12.4e} {:>12.4e} {:>10.4e}",
        format!("{}", last.ebn0_db),
        last.frames,
        last.bit_errors,
        first.ber,
        last.ber,
        last.fer
    );
}

fn run(args: RunArgs) -> Result<(), SimError> {
    let runs = resolve(&args)?;
    if args.dump_config {
        for r in &runs {
            println!("{r}");
        }
        return Ok(());
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = args.threads {
            b = b.num_threads(n.max(1));
        }
        b.build()?
    };
    let multi = runs.len() > 1;
    for cfg in &runs {
        println!(
            "{}: {} outer x {} inner, up to {} frames per point",
            cfg.label, cfg.outer, cfg.inner, cfg.max_frames
        );
        println!(
            "{:>8} {:>7} {:>11} {:>12} {:>12} {:>10}",
            "Eb/N0", "frames", "bit_errors", "ber_first", "ber_last", "fer_last"
        );
        let records = pool.install(|| run_monte_carlo_with(cfg, print_point))?;
        if let Some(base) = &args.out {
            let path = output_path(base, cfg, multi);
            write_records(&records, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn gnuplot(csv: &Path, outer: &[usize], out: Option<&Path>) -> Result<(), SimError> {
    let records = read_records(csv)?;
    let script = gnuplot_script(&csv.display().to_string(), &records, outer);
    match out {
        Some(p) => std::fs::write(p, script).map_err(|source| SimError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{script}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Gnuplot { csv, outer, out }) => gnuplot(&csv, &outer, out.as_deref()),
        None => run(cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (SimError::Config(_) | SimError::Core(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
