use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ldrl::config::{KernelKind, ScheduleKind};
use ldrl::{run, CliError, CliResult, Command, ExperimentConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "ldrl",
    version,
    about = "Entropy-regularized RL through the tilted-matrix Perron triplet"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Spectral solve: spectral.json, driven.json, policy/steady_state/values CSVs.
    Solve,
    /// Finite-horizon soft Bellman tables: dp_values.csv.
    Dp,
    /// DP against spectral values over a horizon sweep: compare.csv.
    Compare,
    /// Model-free u-θ learners: learn_history.csv, policy.csv.
    Learn,
    /// Exact marginals and sampled trajectories: marginals/occupation/sweep CSVs.
    Simulate,
    /// Bulk rates over a list of β: sweep.csv.
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Driven,
    Prior,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sched {
    Constant,
    Polynomial,
    StepDecay,
}

#[derive(clap::Args)]
struct Flags {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled maze name or maze file.
    #[arg(long, global = true)]
    maze: Option<String>,
    /// Model JSON file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    beta_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long, global = true)]
    slip: Option<f64>,
    #[arg(long, global = true)]
    cyclic: Option<bool>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    schedule: Option<Sched>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    #[arg(long, global = true)]
    kernel: Option<Kernel>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn config(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if self.maze.is_some() || self.model.is_some() {
            cfg.maze = self.maze.clone();
            cfg.model = self.model.clone();
        }
        macro_rules! set {
            ($($field:ident).+ = $value:expr) => {
                if let Some(v) = $value {
                    cfg.$($field).+ = v;
                }
            };
        }
        set!(beta = self.beta.map(Some));
        set!(beta_list = self.beta_list.clone());
        set!(horizon = self.horizon);
        set!(horizons = self.horizons.clone());
        set!(slip = self.slip.map(Some));
        set!(cyclic = self.cyclic.map(Some));
        set!(solver.tol = self.tol);
        set!(seed = self.seed);
        set!(replicas = self.replicas);
        set!(learner.episodes = self.episodes);
        set!(simulate.trajectories = self.trajectories);
        set!(out = self.out.clone());
        set!(
            learner.schedule = self.schedule.map(|s| match s {
                Sched::Constant => ScheduleKind::Constant,
                Sched::Polynomial => ScheduleKind::Polynomial,
                Sched::StepDecay => ScheduleKind::StepDecay,
            })
        );
        set!(
            simulate.kernel = self.kernel.map(|k| match k {
                Kernel::Driven => KernelKind::Driven,
                Kernel::Prior => KernelKind::Prior,
            })
        );
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Dp => Command::Dp,
        Cmd::Compare => Command::Compare,
        Cmd::Learn => Command::Learn,
        Cmd::Simulate => Command::Simulate,
        Cmd::Sweep => Command::Sweep,
    };
    let mut out_dir = cli.flags.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let result = ldrl::init_threads().and_then(|()| {
        let cfg = cli.flags.config()?;
        out_dir = cfg.out.clone();
        run(command, &cfg)
    });
    match result {
        Ok(outcome) => {
            // A closed stdout (e.g. piped into `head`) is not a failure.
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", outcome.summary);
            for f in &outcome.artifacts.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            report(&out_dir, &err);
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Best-effort `error.json` next to the artifacts.
fn report(dir: &std::path::Path, err: &CliError) {
    let doc = ErrorDoc {
        kind: err.kind(),
        exit_code: err.exit_code(),
        message: err.to_string(),
    };
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = ldrl::output::write_json(&dir.join("error.json"), &doc);
    }
}
