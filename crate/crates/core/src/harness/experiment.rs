//! Method comparison over a pose set: trials, normalized costs and reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assets::{sample_poses, Asset};
use super::observe::{add_noise_rng, observe, observed_joints, ObservationMode};
use super::stats::BoxStats;
use super::svg::{box_plot, Scale};
use crate::conic::{Backend, ExternalSolver, SolverOptions};
use crate::error::{Error, Result};
use crate::kinematics::schema::{poses_from_json, skeleton_from_json};
use crate::kinematics::{Observation, ParamVector, Skeleton};
use crate::local_ik::{max_limit_violation, random_init_rng, solve_local, LocalMethod, PenaltyConfig};
use crate::rounding::{sdp_ik, SdpIkOptions};

/// Stream id reserved for observation noise; init ids never reach it.
const NOISE_STREAM: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LocalGd,
    LocalTr,
    SdpIk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::LocalGd, Method::LocalTr, Method::SdpIk];

    pub fn name(self) -> &'static str {
        match self {
            Method::LocalGd => "local-gd",
            Method::LocalTr => "local-tr",
            Method::SdpIk => "sdp-ik",
        }
    }

    /// The local optimizer behind a baseline method.
    pub fn local(self) -> Option<LocalMethod> {
        match self {
            Method::LocalGd => Some(LocalMethod::GradientDescent),
            Method::LocalTr => Some(LocalMethod::TrustRegion),
            Method::SdpIk => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected local-gd, local-tr or sdp-ik)")))
    }
}

/// Where the poses of an experiment come from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoseSource {
    /// The pose file shipped with an asset skeleton.
    #[default]
    Shipped,
    File(PathBuf),
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    #[default]
    None,
    /// Per-joint offsets of uniform direction and magnitude uniform on `[0, r_max]`.
    Uniform { r_max: f64 },
}

impl Noise {
    pub fn radius(self) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Uniform { r_max } => r_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Asset name (`mini-hand`, `mini-body`) or path to a skeleton file.
    pub skeleton: String,
    pub poses: PoseSource,
    /// Use only the first `max_poses` poses.
    pub max_poses: Option<usize>,
    pub observation: ObservationMode,
    /// Joint ids observed in addition to those chosen by `observation`.
    pub extra_observed: Vec<usize>,
    pub noise: Noise,
    pub methods: Vec<Method>,
    pub inits_per_pose: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub lambda: f64,
    /// Seconds per local trial.
    pub local_budget: f64,
    /// Seconds per relaxation solve.
    pub sdp_budget: f64,
    /// External solver command template; the embedded solver is used when unset.
    pub solver_command: Option<String>,
    /// Write measured wall times into the CSV. Off by default so that seeded
    /// runs produce identical files.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            skeleton: Asset::MiniHand.name().into(),
            poses: PoseSource::Shipped,
            max_poses: None,
            observation: ObservationMode::All,
            extra_observed: Vec::new(),
            noise: Noise::None,
            methods: Method::ALL.to_vec(),
            inits_per_pose: 20,
            seed: 0,
            output_dir: None,
            lambda: 100.0,
            local_budget: 30.0,
            sdp_budget: 120.0,
            solver_command: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON config; relative paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if Asset::from_name(&cfg.skeleton).is_none() {
            cfg.skeleton = base.join(&cfg.skeleton).to_string_lossy().into_owned();
        }
        if let PoseSource::File(p) = &mut cfg.poses {
            *p = base.join(&*p);
        }
        if let Some(dir) = &mut cfg.output_dir {
            *dir = base.join(&*dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inits_per_pose == 0 {
            return Err(Error::Config("inits_per_pose must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        let r = self.noise.radius();
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("noise radius must be non-negative, got {r}")));
        }
        if !(self.sdp_budget > 0.0) {
            return Err(Error::Config("sdp budget must be positive".into()));
        }
        self.penalty(LocalMethod::TrustRegion).validate()
    }

    fn penalty(&self, method: LocalMethod) -> PenaltyConfig {
        PenaltyConfig { time_budget: self.local_budget, ..PenaltyConfig::default() }
            .with_method(method)
            .with_lambda(self.lambda)
    }

    fn sdp_options(&self) -> SdpIkOptions {
        let mut solver = SolverOptions { time_budget: self.sdp_budget, ..SolverOptions::from_env() };
        if let Some(cmd) = &self.solver_command {
            solver.backend = Backend::External(ExternalSolver::new(cmd.clone()));
        }
        SdpIkOptions { solver, refine: self.penalty(LocalMethod::TrustRegion) }
    }

    /// Loads the skeleton and the (possibly truncated) pose list.
    pub fn load(&self) -> Result<(Skeleton, Vec<ParamVector>)> {
        let asset = Asset::from_name(&self.skeleton);
        let skeleton = match asset {
            Some(a) => a.skeleton(),
            None => {
                let text = std::fs::read_to_string(&self.skeleton).map_err(|e| Error::io(&self.skeleton, e))?;
                skeleton_from_json(&text)?
            }
        };
        let mut poses = match (&self.poses, asset) {
            (PoseSource::Shipped, Some(a)) => a.poses(),
            (PoseSource::Shipped, None) => {
                return Err(Error::Config("shipped poses exist only for asset skeletons".into()))
            }
            (PoseSource::File(path), _) => {
                poses_from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
            }
            (&PoseSource::Random { count, seed }, _) => {
                let half_width = asset.map_or(0.25 * skeleton.total_bone_length(), |a| a.translation_half_width());
                sample_poses(&skeleton, count, half_width, seed)
            }
        };
        if let Some(n) = self.max_poses {
            poses.truncate(n);
        }
        for p in &poses {
            p.check_dim(&skeleton)?;
        }
        Ok((skeleton, poses))
    }
}

/// Deterministic RNG for one (pose, stream) pair of a seeded experiment.
pub fn trial_rng(seed: u64, pose: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((pose as u64) << 32) | stream);
    rng
}

/// One method run on one pose from one initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub pose: usize,
    pub method: Method,
    /// Initialization id; always 0 for sdp-ik.
    pub init: usize,
    pub ik_cost: f64,
    /// `ik_cost` minus the smallest local `ik_cost` on the same pose.
    pub normalized_cost: f64,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
    /// Largest distance of an angle outside its limits.
    pub violation: f64,
    /// Set when the method returned an error; costs are then NaN.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    fn failed(pose: usize, method: Method, init: usize, wall_time: f64, err: Error) -> Self {
        Self {
            pose,
            method,
            init,
            ik_cost: f64::NAN,
            normalized_cost: f64::NAN,
            wall_time,
            converged: false,
            violation: f64::NAN,
            error: Some(err.to_string()),
        }
    }
}

/// Per-method distribution summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub converged: usize,
    pub ik_cost: Option<BoxStats>,
    pub normalized_cost: Option<BoxStats>,
    pub wall_time: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub skeleton: String,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<MethodSummary>,
}

/// Loads the inputs named by `cfg`, runs every trial and writes the reports
/// when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (skeleton, poses) = cfg.load()?;
    let report = run_trials(&skeleton, &poses, cfg)?;
    if let Some(dir) = &cfg.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Observation of pose `pose` under `cfg`, noise included.
pub fn pose_observation(skeleton: &Skeleton, theta: &ParamVector, pose: usize, cfg: &ExperimentConfig) -> Result<Observation> {
    let mut ids = observed_joints(skeleton, cfg.observation);
    ids.extend(&cfg.extra_observed);
    ids.sort_unstable();
    ids.dedup();
    let obs = observe(skeleton, theta, &ids)?;
    match cfg.noise {
        Noise::None => Ok(obs),
        Noise::Uniform { r_max } => add_noise_rng(&obs, r_max, &mut trial_rng(cfg.seed, pose, NOISE_STREAM)),
    }
}

/// Runs every method on every pose of an in-memory skeleton.
///
/// Each local method starts from the same `inits_per_pose` initializations,
/// drawn from the stream of `(seed, pose, init)`; sdp-ik runs once per pose.
/// Method errors are recorded in the trial and do not stop the run.
pub fn run_trials(skeleton: &Skeleton, poses: &[ParamVector], cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let sdp_options = cfg.sdp_options();
    let mut records = Vec::new();
    for (pose, theta) in poses.iter().enumerate() {
        let obs = pose_observation(skeleton, theta, pose, cfg)?;
        let first = records.len();
        for &method in &cfg.methods {
            match method.local() {
                Some(local) => {
                    let penalty = cfg.penalty(local);
                    for init in 0..cfg.inits_per_pose {
                        let start = random_init_rng(skeleton, &mut trial_rng(cfg.seed, pose, init as u64));
                        let clock = Instant::now();
                        records.push(match solve_local(skeleton, &obs, &start, &penalty) {
                            Ok(r) => TrialRecord {
                                pose,
                                method,
                                init,
                                ik_cost: r.ik_cost,
                                normalized_cost: f64::NAN,
                                wall_time: r.wall_time,
                                converged: r.converged,
                                violation: max_limit_violation(skeleton, &r.theta),
                                error: None,
                            },
                            Err(e) => TrialRecord::failed(pose, method, init, clock.elapsed().as_secs_f64(), e),
                        });
                    }
                }
                None => {
                    let clock = Instant::now();
                    let outcome = sdp_ik(skeleton, &obs, &sdp_options);
                    let wall_time = clock.elapsed().as_secs_f64();
                    records.push(match outcome {
                        Ok(r) => TrialRecord {
                            pose,
                            method,
                            init: 0,
                            ik_cost: r.refined_cost,
                            normalized_cost: f64::NAN,
                            wall_time,
                            converged: r.solver_succeeded() && r.diagnostics.refine_converged,
                            violation: max_limit_violation(skeleton, &r.theta),
                            error: None,
                        },
                        Err(e) => TrialRecord::failed(pose, method, 0, wall_time, e),
                    });
                }
            }
        }
        normalize_costs(&mut records[first..]);
    }
    let summary = summarize(&cfg.methods, &records);
    Ok(ExperimentReport { skeleton: skeleton.name().to_string(), config: cfg.clone(), records, summary })
}

/// Subtracts the per-pose baseline: the smallest finite local cost, or the
/// smallest finite cost of any method when no local trial succeeded.
fn normalize_costs(pose_records: &mut [TrialRecord]) {
    let min_of = |local_only: bool| {
        pose_records
            .iter()
            .filter(|r| !local_only || r.method.local().is_some())
            .map(|r| r.ik_cost)
            .filter(|c| c.is_finite())
            .reduce(f64::min)
    };
    let Some(baseline) = min_of(true).or_else(|| min_of(false)) else { return };
    for r in pose_records {
        r.normalized_cost = r.ik_cost - baseline;
    }
}

fn summarize(methods: &[Method], records: &[TrialRecord]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
            let column = |f: fn(&TrialRecord) -> f64| BoxStats::from_samples(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            MethodSummary {
                method,
                trials: rs.len(),
                failures: rs.iter().filter(|r| r.error.is_some()).count(),
                converged: rs.iter().filter(|r| r.converged).count(),
                ik_cost: column(|r| r.ik_cost),
                normalized_cost: column(|r| r.normalized_cost),
                wall_time: column(|r| r.wall_time),
            }
        })
        .collect()
}

/// CSV header of the trial table.
pub const CSV_HEADER: [&str; 8] = ["pose", "method", "init", "ik_cost", "normalized_cost", "wall_time", "converged", "violation"];

#[derive(Serialize)]
struct CsvRow {
    pose: usize,
    method: Method,
    init: usize,
    ik_cost: f64,
    normalized_cost: f64,
    wall_time: Option<f64>,
    converged: bool,
    violation: f64,
}

impl ExperimentReport {
    /// Writes the trial table; wall times are left empty unless the config
    /// asks for them.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(CsvRow {
                pose: r.pose,
                method: r.method,
                init: r.init,
                ik_cost: r.ik_cost,
                normalized_cost: r.normalized_cost,
                wall_time: self.config.record_wall_time.then_some(r.wall_time),
                converged: r.converged,
                violation: r.violation,
            })
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::io("csv", e))?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory succeeds");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    fn title(&self) -> String {
        let noise = match self.config.noise {
            Noise::None => "no noise".to_string(),
            Noise::Uniform { r_max } => format!("noise r_max {r_max}"),
        };
        format!("{}: {} observed, {noise}", self.skeleton, self.config.observation)
    }

    /// Writes `trials.csv`, `summary.json`, `ik_cost.svg` and `normalized_cost.svg`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: &str| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write("trials.csv", &self.csv_string())?;
        write("summary.json", &(serde_json::to_string_pretty(&self.summary)? + "\n"))?;
        let series = |f: fn(&MethodSummary) -> &Option<BoxStats>| -> Vec<(String, BoxStats)> {
            self.summary.iter().filter_map(|m| f(m).clone().map(|b| (m.method.to_string(), b))).collect()
        };
        write("ik_cost.svg", &box_plot(&self.title(), "ik cost", &series(|m| &m.ik_cost), Scale::Log))?;
        write(
            "normalized_cost.svg",
            &box_plot(&self.title(), "normalized cost", &series(|m| &m.normalized_cost), Scale::Linear),
        )?;
        Ok(())
    }
}
