use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdpik::conic::{write_sdpa, Backend, ExternalSolver, SolverOptions};
use sdpik::harness::{
    generate_observations, run_experiment, Asset, ExperimentConfig, Method, Noise, ObservationMode, PoseSource,
};
use sdpik::kinematics::schema::{observation_from_json, poses_from_json, skeleton_from_json};
use sdpik::local_ik::{random_init, solve_local, PenaltyConfig};
use sdpik::rounding::{sdp_ik, SdpIkOptions};
use sdpik::sdp::{build_sdp, embed_ground_truth};
use sdpik::{Error, Observation, ParamVector, Skeleton};

/// Equality residual and eigenvalue tolerance used by `validate`.
const VALIDATE_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "sdpik", version, about = "Inverse kinematics by semidefinite relaxation")]
struct Cli {
    /// Seed for random initializations and noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget per local trial and per relaxation solve, in seconds.
    #[arg(long, global = true)]
    budget_seconds: Option<f64>,
    /// Weight of the joint-limit penalty.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// External SDP solver command, with `{input}` and `{output}` placeholders.
    #[arg(long, global = true)]
    solver_command: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and print the result as JSON.
    Solve(SolveArgs),
    /// Run a method comparison and write CSV, summary and SVG box plots.
    Bench(BenchArgs),
    /// Write the relaxation of one instance as an SDPA sparse file.
    ExportSdp(ExportArgs),
    /// Check that shipped or given poses embed feasibly into their relaxations.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Skeleton file, or the name of a shipped asset (mini-hand, mini-body).
    #[arg(long)]
    skeleton: String,
    /// Targets file: {"observations": [{"joint": id, "y": [x, y, z]}]}.
    #[arg(long)]
    targets: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// local-gd, local-tr or sdp-ik.
    #[arg(long, default_value = "sdp-ik")]
    method: Method,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    skeleton: Option<String>,
    /// Pose file; defaults to the poses shipped with an asset skeleton.
    #[arg(long)]
    poses: Option<PathBuf>,
    #[arg(long)]
    max_poses: Option<usize>,
    /// all or end-effectors-plus-root.
    #[arg(long)]
    observation: Option<ObservationMode>,
    /// Noise radius in skeleton units; 0 disables noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Comma-separated subset of local-gd, local-tr, sdp-ik.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    inits: Option<usize>,
    /// Output directory; the CSV goes to stdout when neither this nor the config sets one.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Record measured wall times in the CSV (makes the CSV run-dependent).
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Skeleton file, or the name of a shipped asset.
    #[arg(long)]
    skeleton: String,
    /// Pose file; defaults to the poses shipped with an asset skeleton.
    #[arg(long)]
    poses: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    observation: ObservationMode,
    /// Check only the first N poses.
    #[arg(long)]
    max_poses: Option<usize>,
}

/// Failure classes with their exit codes.
enum Failure {
    /// Bad arguments, files or configuration: exit 2.
    Config(String),
    /// Solver failure or failed validation: exit 3.
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) => Failure::Solver(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(args) => solve(cli, args),
        Command::Bench(args) => bench(cli, args),
        Command::ExportSdp(args) => export(args),
        Command::Validate(args) => validate(args),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_skeleton(name: &str) -> Result<Skeleton, Failure> {
    match Asset::from_name(name) {
        Some(asset) => Ok(asset.skeleton()),
        None => Ok(skeleton_from_json(&read(Path::new(name))?)?),
    }
}

fn load_instance(args: &InstanceArgs) -> Result<(Skeleton, Observation), Failure> {
    let skeleton = load_skeleton(&args.skeleton)?;
    let obs = observation_from_json(&read(&args.targets)?)?;
    obs.validate(&skeleton)?;
    Ok((skeleton, obs))
}

fn penalty(cli: &Cli) -> PenaltyConfig {
    let mut cfg = PenaltyConfig::default();
    if let Some(l) = cli.lambda {
        cfg.lambda = l;
    }
    if let Some(b) = cli.budget_seconds {
        cfg.time_budget = b;
    }
    cfg
}

fn solver_options(cli: &Cli) -> SolverOptions {
    let mut opts = SolverOptions::from_env();
    if let Some(b) = cli.budget_seconds {
        opts.time_budget = b;
    }
    if let Some(cmd) = &cli.solver_command {
        opts.backend = Backend::External(ExternalSolver::new(cmd.clone()));
    }
    opts
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<(), Failure> {
    let (skeleton, obs) = load_instance(&args.instance)?;
    match args.method.local() {
        Some(local) => {
            let start = random_init(&skeleton, cli.seed);
            let result = solve_local(&skeleton, &obs, &start, &penalty(cli).with_method(local))?;
            print_json(&result)
        }
        None => {
            let options = SdpIkOptions { solver: solver_options(cli), refine: penalty(cli) };
            let result = sdp_ik(&skeleton, &obs, &options)?;
            print_json(&result)?;
            if result.solver_succeeded() {
                Ok(())
            } else {
                Err(Failure::Solver(format!(
                    "relaxation solve ended with status {}: {}",
                    result.diagnostics.solver.status, result.diagnostics.solver.message
                )))
            }
        }
    }
}

fn bench(cli: &Cli, args: &BenchArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.seed = cli.seed;
    if let Some(s) = &args.skeleton {
        cfg.skeleton = s.clone();
    }
    if let Some(p) = &args.poses {
        cfg.poses = PoseSource::File(p.clone());
    }
    if args.max_poses.is_some() {
        cfg.max_poses = args.max_poses;
    }
    if let Some(m) = args.observation {
        cfg.observation = m;
    }
    if let Some(r) = args.noise {
        cfg.noise = if r == 0.0 { Noise::None } else { Noise::Uniform { r_max: r } };
    }
    if let Some(m) = &args.methods {
        cfg.methods = m.clone();
    }
    if let Some(n) = args.inits {
        cfg.inits_per_pose = n;
    }
    if let Some(dir) = &args.output {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(l) = cli.lambda {
        cfg.lambda = l;
    }
    if let Some(b) = cli.budget_seconds {
        cfg.local_budget = b;
        cfg.sdp_budget = b;
    }
    if cli.solver_command.is_some() {
        cfg.solver_command = cli.solver_command.clone();
    }
    cfg.record_wall_time |= args.wall_time;

    let report = run_experiment(&cfg)?;
    match &cfg.output_dir {
        Some(dir) => {
            eprintln!("{:<9} {:>6} {:>8} {:>9} {:>12} {:>12}", "method", "trials", "failures", "converged", "median cost", "median norm");
            for m in &report.summary {
                let median = |b: &Option<sdpik::harness::BoxStats>| b.as_ref().map_or(f64::NAN, |b| b.median);
                eprintln!(
                    "{:<9} {:>6} {:>8} {:>9} {:>12.4e} {:>12.4e}",
                    m.method.name(),
                    m.trials,
                    m.failures,
                    m.converged,
                    median(&m.ik_cost),
                    median(&m.normalized_cost)
                );
            }
            eprintln!("wrote {}", dir.display());
        }
        None => print!("{}", report.csv_string()),
    }
    Ok(())
}

fn export(args: &ExportArgs) -> Result<(), Failure> {
    let (skeleton, obs) = load_instance(&args.instance)?;
    let (program, _) = build_sdp(&skeleton, &obs)?;
    write_sdpa(&program, &args.output)?;
    eprintln!(
        "wrote {}: {} variables, {} equalities, {} blocks",
        args.output.display(),
        program.num_vars,
        program.equalities.len(),
        program.blocks.len()
    );
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let skeleton = load_skeleton(&args.skeleton)?;
    let mut poses: Vec<ParamVector> = match (&args.poses, Asset::from_name(&args.skeleton)) {
        (Some(path), _) => poses_from_json(&read(path)?)?,
        (None, Some(asset)) => asset.poses(),
        (None, None) => return Err(Failure::Config("--poses is required for skeleton files".into())),
    };
    if let Some(n) = args.max_poses {
        poses.truncate(n);
    }
    let mut failed = 0;
    println!("pose,max_equality_residual,min_psd_eigenvalue,min_diagonal_entry,feasible");
    for (k, theta) in poses.iter().enumerate() {
        theta.check_dim(&skeleton)?;
        let obs = generate_observations(&skeleton, theta, args.observation)?;
        let (program, layout) = build_sdp(&skeleton, &obs)?;
        let r = embed_ground_truth(&skeleton, &obs, theta, &program, &layout)?.report;
        let ok = r.is_feasible(VALIDATE_TOLERANCE);
        failed += usize::from(!ok);
        println!("{k},{:e},{:e},{:e},{ok}", r.max_equality_residual, r.min_psd_eigenvalue, r.min_diagonal_entry);
    }
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} of {} poses exceed tolerance {VALIDATE_TOLERANCE:e}", poses.len())));
    }
    eprintln!("all {} poses embed within {VALIDATE_TOLERANCE:e}", poses.len());
    Ok(())
}
