use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use snapcomp::finetune::{OptimizerState, TrainConfig};
use snapcomp::io::{
    evaluate_file, finetune_job, init_job, read_sequence, report_json, run_job, run_sweep, wigner_snapshots,
    write_wigner_csv, JobError, JobSpec, SweepSpec, TargetSpec, WignerSpec,
};
use snapcomp::Problem;

/// Design SNAP/displacement gate sequences for a cavity mode.
#[derive(Parser)]
#[command(name = "snapcomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an initial sequence with the greedy initializer.
    Init(JobArgs),
    /// Finetune a stored sequence.
    Finetune {
        #[command(flatten)]
        job: JobArgs,
        /// Sequence JSON to start from.
        #[arg(long)]
        sequence: PathBuf,
        /// Optimizer checkpoint to resume from.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Initialize, then finetune.
    Run(JobArgs),
    /// Recompute all objectives of a stored sequence.
    Evaluate {
        #[arg(long)]
        sequence: PathBuf,
        /// Target descriptor as inline JSON or a file path.
        #[arg(long, required_unless_present = "config")]
        target: Option<String>,
        /// Job file to take the target from.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run a grid of jobs over T and, optionally, the subspace size N.
    Sweep {
        /// Sweep file `{base, lengths, sizes}`.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated sequence lengths, replacing those in the file.
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
        /// Comma-separated subspace sizes, replacing those in the file.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Export Wigner grids of one input state between the blocks of a sequence.
    Wigner {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long, required_unless_present = "config")]
        target: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Logical input state to follow.
        #[arg(long, default_value_t = 0)]
        state: usize,
        /// Quadrature range `lo,hi`.
        #[arg(long, default_value = "-5,5", value_parser = parse_range, allow_hyphen_values = true)]
        x_range: [f64; 2],
        #[arg(long, default_value = "-5,5", value_parser = parse_range, allow_hyphen_values = true)]
        p_range: [f64; 2],
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        /// Output directory for the CSV files.
        #[arg(long, default_value = "wigner")]
        out: PathBuf,
    },
}

/// Job fields; flags override values from `--config`.
#[derive(Args, Clone)]
struct JobArgs {
    /// Job file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target descriptor as inline JSON or a file path.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Number of blocks T.
    #[arg(short = 'T', long = "length")]
    length: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Training preset: `default` or `no-gc-high-lr`.
    #[arg(long)]
    preset: Option<String>,
    /// Initializer seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    log_every: Option<usize>,
    #[arg(long)]
    random_first_block: bool,
    #[arg(long)]
    no_auto_detect: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    job_id: Option<String>,
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok([f(lo)?, f(hi)?])
}

fn parse_target(arg: &str) -> Result<TargetSpec, JobError> {
    let s = arg.trim_start();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| JobError::parse(Path::new("--target"), e));
    }
    let p = Path::new(arg);
    let text = std::fs::read_to_string(p).map_err(|e| JobError::io(p, e))?;
    serde_json::from_str(&text).map_err(|e| JobError::parse(p, e))
}

impl JobArgs {
    fn spec(&self) -> Result<JobSpec, JobError> {
        let mut spec = match &self.config {
            Some(p) => JobSpec::from_file(p)?,
            None => {
                let target = self.target.as_deref().ok_or_else(|| JobError::Config("--target or --config is required".into()))?;
                let length = self.length.ok_or_else(|| JobError::Config("-T/--length or --config is required".into()))?;
                JobSpec::new("job", parse_target(target)?, 100, length)
            }
        };
        if let Some(t) = &self.target {
            spec.target = parse_target(t)?;
        }
        if let Some(d) = self.dim {
            spec.dim = d;
        }
        if let Some(t) = self.length {
            spec.length = t;
        }
        if let Some(l) = self.lambda {
            spec.lambda = Some(l);
        }
        if let Some(name) = &self.preset {
            let base = TrainConfig::preset(name, spec.effective_lambda())?;
            let keep = spec.train.take().unwrap_or_default();
            spec.train = Some(TrainConfig { iterations: keep.iterations, log_every: keep.log_every, seed: keep.seed, ..base });
        }
        if self.iterations.is_some() || self.log_every.is_some() {
            let mut t = spec.train.take().unwrap_or_default();
            if let Some(n) = self.iterations {
                t.iterations = n;
            }
            if let Some(n) = self.log_every {
                t.log_every = n;
            }
            spec.train = Some(t);
        }
        if let Some(s) = self.seed {
            spec.init.seed = s;
        }
        if self.random_first_block {
            spec.init.random_first_block = true;
        }
        if self.no_auto_detect {
            spec.init.auto_detect = false;
        }
        if let Some(d) = &self.output_dir {
            spec.output_dir = d.clone();
        }
        if let Some(id) = &self.job_id {
            spec.job_id = id.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn target_from(target: &Option<String>, config: &Option<PathBuf>) -> Result<TargetSpec, JobError> {
    match (target, config) {
        (Some(t), _) => parse_target(t),
        (None, Some(c)) => Ok(JobSpec::from_file(c)?.target),
        (None, None) => Err(JobError::Config("--target or --config is required".into())),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, JobError> {
    let text = std::fs::read_to_string(path).map_err(|e| JobError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| JobError::parse(path, e))
}

fn execute(cmd: Command) -> Result<String, JobError> {
    let out = match cmd {
        Command::Init(args) => {
            let spec = args.spec()?;
            let (seq, trace) = init_job(&spec)?;
            let dir = spec.output_dir.join(&spec.job_id);
            json!({
                "job_id": spec.job_id,
                "T": seq.len(),
                "initial_fidelity": trace.initial_fidelity,
                "fidelity": trace.records.last().map(|r| r.fidelity),
                "random_first_block": trace.records.first().is_some_and(|r| r.random),
                "sequence": dir.join("init_sequence.json"),
            })
        }
        Command::Finetune { job, sequence, resume } => {
            let spec = job.spec()?;
            let (seq, _) = read_sequence(&sequence)?;
            let state: Option<OptimizerState> = resume.as_deref().map(read_json).transpose()?;
            let o = finetune_job(&spec, &seq, state)?;
            serde_json::to_value(&o.summary).expect("summary serializes")
        }
        Command::Run(args) => {
            let spec = args.spec()?;
            let o = run_job(&spec)?;
            serde_json::to_value(&o.summary).expect("summary serializes")
        }
        Command::Evaluate { sequence, target, config, lambda } => {
            let target = target_from(&target, &config)?;
            let report = evaluate_file(&sequence, &target, lambda)?;
            return Ok(report_json(&report));
        }
        Command::Sweep { config, lengths, sizes } => {
            let mut sweep: SweepSpec = read_json(&config)?;
            if let Some(l) = lengths {
                sweep.lengths = l;
            }
            if let Some(s) = sizes {
                sweep.sizes = s;
            }
            let rows = run_sweep(&sweep)?;
            serde_json::to_value(&rows).expect("rows serialize")
        }
        Command::Wigner { sequence, target, config, state, x_range, p_range, resolution, out } => {
            let target = target_from(&target, &config)?;
            let (seq, _) = read_sequence(&sequence)?;
            let p = Problem::new(target.build(seq.dim())?)?;
            let spec = WignerSpec { state, x_range, p_range, resolution };
            let (xs, ps, grids) = wigner_snapshots(&p, &seq, &spec)?;
            std::fs::create_dir_all(&out).map_err(|e| JobError::io(&out, e))?;
            let mut files = Vec::new();
            for (t, g) in grids.iter().enumerate() {
                let path = out.join(format!("snapshot_{t:03}.csv"));
                write_wigner_csv(&path, &xs, &ps, g)?;
                files.push(path);
            }
            json!({ "snapshots": files })
        }
    };
    let mut s = serde_json::to_string_pretty(&out).expect("output serializes");
    s.push('\n');
    Ok(s)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
