use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crowdpose::pipeline::Method;
use crowdpose_cli::bench::DEFAULT_RUNS;
use crowdpose_cli::commands::{cmd_associate, cmd_bench, cmd_evaluate, cmd_synth, exit_code, AssociateArgs, SynthArgs};
use crowdpose_cli::config::{Config, Overrides};

#[derive(Parser)]
#[command(name = "crowdpose", version, about = "Crowd pose association: synthesize, associate, evaluate, benchmark")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Interference response level.
    #[arg(long, global = true, value_parser = unit_interval)]
    mu: Option<f64>,
    /// Heatmap Gaussian deviation (candidate response size).
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, value_parser = unit_interval)]
    peak_threshold: Option<f64>,
    #[arg(long, global = true)]
    bbox_nms_iou: Option<f64>,
    #[arg(long, global = true)]
    oks_dedup: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes: annotations and candidates per scene.
    Synth {
        /// Person count, a single number or an inclusive range such as 3-8.
        #[arg(long, value_parser = person_range, default_value = "3-8")]
        persons: (usize, usize),
        #[arg(long, value_parser = unit_interval, default_value_t = 0.5)]
        crowd_index: f64,
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 600)]
        height: u32,
        /// Location jitter in pixels.
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        #[arg(long, value_parser = unit_interval, default_value_t = 0.1)]
        fp_rate: f64,
        #[arg(long, value_parser = unit_interval, default_value_t = 0.15)]
        missing_rate: f64,
    },
    /// Group candidates, match proposals to joints and write poses.
    Associate {
        /// Candidates file.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Global)]
        method: MethodArg,
        /// Suppress overlapping proposals before grouping.
        #[arg(long)]
        bbox_nms: bool,
        /// Suppress near-duplicate poses afterwards.
        #[arg(long)]
        pose_dedup: bool,
    },
    /// Score results against annotations; prints the report as JSON.
    Evaluate {
        results: PathBuf,
        annotations: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the solver on sparse synthetic graphs.
    Bench {
        /// Person counts, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Global,
    Greedy,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn person_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a count"));
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let n = parse(s)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("`{s}` is not a non-empty range of positive counts"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        mu: cli.mu,
        sigma: cli.sigma,
        peak_threshold: cli.peak_threshold,
        bbox_nms_iou: cli.bbox_nms_iou,
        oks_dedup: cli.oks_dedup,
        seed: cli.seed,
    };
    let mut stdout = std::io::stdout().lock();
    let run = Config::load(cli.config.as_deref(), &overrides).and_then(|config| match cli.command {
        Command::Synth { persons, crowd_index, scenes, out, width, height, noise, fp_rate, missing_rate } => {
            let args = SynthArgs {
                persons,
                crowd_index,
                scenes,
                out,
                width,
                height,
                noise,
                false_positive_rate: fp_rate,
                missing_rate,
            };
            cmd_synth(&args, &config, &mut stdout)
        }
        Command::Associate { input, out, method, bbox_nms, pose_dedup } => {
            let method = match method {
                MethodArg::Global => Method::Global,
                MethodArg::Greedy => Method::Greedy,
            };
            let args = AssociateArgs { input, out, method, bbox_nms, pose_dedup };
            cmd_associate(&args, &config, &mut stdout).map(|_| ())
        }
        Command::Evaluate { results, annotations, out } => {
            cmd_evaluate(&results, &annotations, out.as_deref(), &config, &mut stdout).map(|_| ())
        }
        Command::Bench { sizes, runs } => cmd_bench(&sizes, runs, &config, &mut stdout).map(|_| ()),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
