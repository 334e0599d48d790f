//! Monte Carlo benchmark: configuration, seeding, per-step MSE and reports.
//!
//! One truth trajectory is drawn per master seed. Every run then draws its
//! own scans along that trajectory, and all methods in a run consume the same
//! scans. Random streams are keyed by `(master_seed, run, purpose)`, so a
//! run's numbers do not depend on how many runs there are or on scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{nn_step, pda_step, GateConfig};
use crate::clustering::GibbsConfig;
use crate::dp::{BaseMeasure, DEFAULT_TRUNCATION};
use crate::measurement_model::JointPriorConfig;
use crate::simulator::{positions, simulate_scans, simulate_trajectory, GroundTruth, ScenarioConfig};
use crate::tracker::{metric_bayes_step, naive_bayes_step, Belief, GaussianBelief, MotionModel, ObsModel, SystemModel};
use crate::types::{Point, Rect, State};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MetricBayes,
    NaiveBayes,
    Nn,
    Pda,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MetricBayes, Method::NaiveBayes, Method::Nn, Method::Pda];

    pub fn name(self) -> &'static str {
        match self {
            Method::MetricBayes => "metric_bayes",
            Method::NaiveBayes => "naive_bayes",
            Method::Nn => "nn",
            Method::Pda => "pda",
        }
    }

    fn stream_offset(self) -> u64 {
        match self {
            Method::MetricBayes => 1,
            Method::NaiveBayes => 2,
            Method::Nn => 3,
            Method::Pda => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::param(format!("unknown method {s:?}; expected one of metric_bayes, naive_bayes, nn, pda")))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Prior used by the clutter-aware filter, derived from the scenario unless overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPrior {
    pub alpha_t: f64,
    pub alpha_c: f64,
}

impl MetricPrior {
    pub fn from_scenario(sc: &ScenarioConfig) -> Self {
        MetricPrior {
            alpha_t: sc.detection_probability,
            alpha_c: sc.clutter_rate.max(1e-6),
        }
    }

    pub fn joint_prior(&self, sc: &ScenarioConfig) -> Result<JointPriorConfig> {
        // the target base is replaced with the filter prediction at every step
        JointPriorConfig::new(
            self.alpha_c,
            BaseMeasure::Uniform(sc.region),
            self.alpha_t,
            BaseMeasure::PointMass(Point::zeros()),
            DEFAULT_TRUNCATION,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    pub n_runs: usize,
    pub master_seed: u64,
    pub gibbs: GibbsConfig,
    pub gate: GateConfig,
    pub metric: MetricPrior,
    /// Initial belief is centred on the true time-0 state with these stds.
    pub initial_position_std: f64,
    pub initial_velocity_std: f64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn reference_scenario() -> Self {
        RunConfig::for_scenario(ScenarioConfig::reference_scenario())
    }

    /// Defaults for everything except the scenario.
    pub fn for_scenario(scenario: ScenarioConfig) -> Self {
        RunConfig {
            gate: GateConfig::from_scenario(&scenario),
            metric: MetricPrior::from_scenario(&scenario),
            scenario,
            methods: Method::ALL.to_vec(),
            n_runs: 200,
            master_seed: 0,
            gibbs: GibbsConfig::default(),
            initial_position_std: 10.0,
            initial_velocity_std: 10.0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.gibbs.validate()?;
        self.gate.validate()?;
        self.metric.joint_prior(&self.scenario)?;
        if self.n_runs == 0 {
            return Err(Error::param("n_runs must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("at least one method is required"));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::param("methods must not repeat"));
        }
        for (name, v) in [
            ("initial_position_std", self.initial_position_std),
            ("initial_velocity_std", self.initial_velocity_std),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn initial_belief(&self) -> Result<GaussianBelief> {
        let p = self.initial_position_std.powi(2);
        let v = self.initial_velocity_std.powi(2);
        GaussianBelief::new(self.scenario.initial_state, Matrix4::from_diagonal(&Vector4::new(p, p, v, v)))
    }

    pub fn system(&self) -> SystemModel {
        SystemModel {
            motion: self.scenario.motion.clone(),
            obs: self.scenario.obs.clone(),
        }
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let keys: ConfigKeys = toml::from_str(text).map_err(|e| Error::Parse {
            context: "config".into(),
            message: e.to_string(),
        })?;
        keys.into_run_config()
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                context: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Every key with its effective value.
    pub fn keys(&self) -> ConfigKeys {
        let sc = &self.scenario;
        let x0 = sc.initial_state;
        ConfigKeys {
            sigma: Some(sc.motion.sigma),
            dt: Some(sc.motion.dt),
            survival_prob: Some(sc.motion.survival_prob),
            survival_thinning: Some(sc.survival_thinning),
            meas_std: Some((sc.obs.noise_cov.trace() / 2.0).sqrt()),
            region_xmin: Some(sc.region.xmin),
            region_xmax: Some(sc.region.xmax),
            region_ymin: Some(sc.region.ymin),
            region_ymax: Some(sc.region.ymax),
            clutter_rate: Some(sc.clutter_rate),
            detection_probability: Some(sc.detection_probability),
            horizon: Some(sc.horizon),
            initial_x: Some(x0[0]),
            initial_y: Some(x0[1]),
            initial_vx: Some(x0[2]),
            initial_vy: Some(x0[3]),
            initial_position_std: Some(self.initial_position_std),
            initial_velocity_std: Some(self.initial_velocity_std),
            methods: Some(self.methods.iter().map(|m| m.name().to_string()).collect()),
            n_runs: Some(self.n_runs),
            master_seed: Some(self.master_seed),
            gibbs_sweeps: Some(self.gibbs.n_sweeps),
            gibbs_burn_in: Some(self.gibbs.burn_in),
            gate_probability: Some(self.gate.gate_probability),
            pda_detection_probability: Some(self.gate.detection_probability),
            pda_clutter_density: Some(self.gate.clutter_spatial_density),
            metric_alpha_t: Some(self.metric.alpha_t),
            metric_alpha_c: Some(self.metric.alpha_c),
            output: self.output.as_ref().map(|p| p.display().to_string()),
        }
    }

    /// SHA-256 of the JSON rendering of [`RunConfig::keys`], output path excluded.
    pub fn hash(&self) -> String {
        let mut keys = self.keys();
        keys.output = None;
        let json = serde_json::to_string(&keys).expect("config keys serialize");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Flat configuration keys. Missing keys take their built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigKeys {
    pub sigma: Option<f64>,
    pub dt: Option<f64>,
    pub survival_prob: Option<f64>,
    pub survival_thinning: Option<bool>,
    pub meas_std: Option<f64>,
    pub region_xmin: Option<f64>,
    pub region_xmax: Option<f64>,
    pub region_ymin: Option<f64>,
    pub region_ymax: Option<f64>,
    pub clutter_rate: Option<f64>,
    pub detection_probability: Option<f64>,
    pub horizon: Option<usize>,
    pub initial_x: Option<f64>,
    pub initial_y: Option<f64>,
    pub initial_vx: Option<f64>,
    pub initial_vy: Option<f64>,
    pub initial_position_std: Option<f64>,
    pub initial_velocity_std: Option<f64>,
    pub methods: Option<Vec<String>>,
    pub n_runs: Option<usize>,
    pub master_seed: Option<u64>,
    pub gibbs_sweeps: Option<usize>,
    pub gibbs_burn_in: Option<usize>,
    pub gate_probability: Option<f64>,
    pub pda_detection_probability: Option<f64>,
    pub pda_clutter_density: Option<f64>,
    pub metric_alpha_t: Option<f64>,
    pub metric_alpha_c: Option<f64>,
    pub output: Option<String>,
}

impl ConfigKeys {
    pub fn into_run_config(self) -> Result<RunConfig> {
        let d = ScenarioConfig::reference_scenario();
        let x0 = d.initial_state;
        let motion = MotionModel::constant_velocity(
            self.dt.unwrap_or(d.motion.dt),
            self.sigma.unwrap_or(d.motion.sigma),
            self.survival_prob.unwrap_or(d.motion.survival_prob),
        )?;
        let meas_std = self.meas_std.unwrap_or(10.0);
        if !(meas_std.is_finite() && meas_std > 0.0) {
            return Err(Error::param(format!("meas_std must be positive, got {meas_std}")));
        }
        let scenario = ScenarioConfig {
            motion,
            obs: ObsModel::position(meas_std),
            region: Rect::new(
                self.region_xmin.unwrap_or(d.region.xmin),
                self.region_xmax.unwrap_or(d.region.xmax),
                self.region_ymin.unwrap_or(d.region.ymin),
                self.region_ymax.unwrap_or(d.region.ymax),
            )?,
            clutter_rate: self.clutter_rate.unwrap_or(d.clutter_rate),
            detection_probability: self.detection_probability.unwrap_or(d.detection_probability),
            horizon: self.horizon.unwrap_or(d.horizon),
            initial_state: State::new(
                self.initial_x.unwrap_or(x0[0]),
                self.initial_y.unwrap_or(x0[1]),
                self.initial_vx.unwrap_or(x0[2]),
                self.initial_vy.unwrap_or(x0[3]),
            ),
            survival_thinning: self.survival_thinning.unwrap_or(d.survival_thinning),
        };
        scenario.validate()?;
        let mut cfg = RunConfig::for_scenario(scenario);
        if let Some(methods) = self.methods {
            cfg.methods = methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        cfg.n_runs = self.n_runs.unwrap_or(cfg.n_runs);
        cfg.master_seed = self.master_seed.unwrap_or(cfg.master_seed);
        cfg.gibbs.n_sweeps = self.gibbs_sweeps.unwrap_or(cfg.gibbs.n_sweeps);
        cfg.gibbs.burn_in = self.gibbs_burn_in.unwrap_or(cfg.gibbs.burn_in);
        cfg.gate.gate_probability = self.gate_probability.unwrap_or(cfg.gate.gate_probability);
        cfg.gate.detection_probability = self.pda_detection_probability.unwrap_or(cfg.gate.detection_probability);
        cfg.gate.clutter_spatial_density = self.pda_clutter_density.unwrap_or(cfg.gate.clutter_spatial_density);
        cfg.metric.alpha_t = self.metric_alpha_t.unwrap_or(cfg.metric.alpha_t);
        cfg.metric.alpha_c = self.metric_alpha_c.unwrap_or(cfg.metric.alpha_c);
        cfg.initial_position_std = self.initial_position_std.unwrap_or(cfg.initial_position_std);
        cfg.initial_velocity_std = self.initial_velocity_std.unwrap_or(cfg.initial_velocity_std);
        cfg.output = self.output.map(PathBuf::from);
        cfg.validate()?;
        Ok(cfg)
    }
}

const STREAMS_PER_RUN: u64 = 8;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Truth trajectory for `master_seed` (stream 0).
pub fn simulate_truth(cfg: &ScenarioConfig, master_seed: u64) -> Result<(Vec<State>, Vec<bool>)> {
    simulate_trajectory(cfg, &mut stream_rng(master_seed, 0))
}

/// Scans of run `run` along the given truth.
pub fn simulate_run(cfg: &ScenarioConfig, master_seed: u64, states: &[State], alive: &[bool], run: u64) -> Result<GroundTruth> {
    let mut rng = stream_rng(master_seed, 1 + run * STREAMS_PER_RUN);
    let scans = simulate_scans(states, alive, cfg, &mut rng)?;
    Ok(GroundTruth {
        states: states.to_vec(),
        scans,
        alive: alive.to_vec(),
    })
}

/// Runs one method over a sequence of scans and returns the posterior mean after each step.
pub fn run_method(cfg: &RunConfig, method: Method, scans: &[Vec<Point>], rng: &mut ChaCha8Rng) -> Result<Vec<State>> {
    let system = cfg.system();
    let start = cfg.initial_belief()?;
    let mut means = Vec::with_capacity(scans.len());
    match method {
        Method::MetricBayes => {
            let prior = cfg.metric.joint_prior(&cfg.scenario)?;
            let mut b = Belief::Gaussian(start);
            for scan in scans {
                b = metric_bayes_step(&b, scan, &prior, &cfg.gibbs, &system, rng)?.0;
                means.push(b.mean());
            }
        }
        Method::NaiveBayes => {
            let mut b = Belief::Gaussian(start);
            for scan in scans {
                b = naive_bayes_step(&b, scan, &system, rng)?;
                means.push(b.mean());
            }
        }
        Method::Nn | Method::Pda => {
            let step: fn(&GaussianBelief, &[Point], &SystemModel, &GateConfig) -> Result<GaussianBelief> =
                if method == Method::Nn { nn_step } else { pda_step };
            let mut b = start;
            for scan in scans {
                b = step(&b, scan, &system, &cfg.gate)?;
                means.push(b.mean);
            }
        }
    }
    Ok(means)
}

/// Per-step squared position error.
pub fn compute_mse(estimates: &[Point], truth: &[State]) -> Result<Vec<f64>> {
    if estimates.len() != truth.len() {
        return Err(Error::param(format!(
            "{} estimates for {} truth states",
            estimates.len(),
            truth.len()
        )));
    }
    Ok(estimates
        .iter()
        .zip(truth)
        .map(|(e, x)| (e - Point::new(x[0], x[1])).norm_squared())
        .collect())
}

/// Squared errors of every method in run `run`, in `cfg.methods` order.
pub fn run_once(cfg: &RunConfig, states: &[State], alive: &[bool], run: u64) -> Result<Vec<Vec<f64>>> {
    let gt = simulate_run(&cfg.scenario, cfg.master_seed, states, alive, run)?;
    let scans: Vec<Vec<Point>> = gt.scans.iter().map(|s| positions(s)).collect();
    cfg.methods
        .iter()
        .map(|&m| {
            let mut rng = stream_rng(cfg.master_seed, 1 + run * STREAMS_PER_RUN + m.stream_offset());
            let means = run_method(cfg, m, &scans, &mut rng)?;
            let est: Vec<Point> = means.iter().map(|x| Point::new(x[0], x[1])).collect();
            compute_mse(&est, states)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub config_hash: String,
    pub scr: f64,
    pub n_runs: usize,
    pub failed_runs: usize,
    pub mean_mse: Vec<(Method, f64)>,
    pub config: ConfigKeys,
    /// Left out of the sidecar unless explicitly recorded, so repeated runs stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub methods: Vec<Method>,
    /// `mse[m][k]`: mean squared position error of method `m` at step `k + 1`.
    pub mse: Vec<Vec<f64>>,
    pub metadata: ReportMetadata,
}

impl MseReport {
    pub fn horizon(&self) -> usize {
        self.mse.first().map_or(0, Vec::len)
    }

    pub fn mean_mse(&self, method: Method) -> Option<f64> {
        self.metadata.mean_mse.iter().find(|(m, _)| *m == method).map(|(_, v)| *v)
    }

    pub fn series(&self, method: Method) -> Option<&[f64]> {
        self.methods.iter().position(|&m| m == method).map(|i| self.mse[i].as_slice())
    }
}

pub fn run_monte_carlo(cfg: &RunConfig) -> Result<MseReport> {
    cfg.validate()?;
    let (states, alive) = simulate_truth(&cfg.scenario, cfg.master_seed)?;
    let outcomes: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, &states, &alive, r))
        .collect();

    let k = cfg.scenario.horizon;
    let mut sums = vec![vec![0.0; k]; cfg.methods.len()];
    let mut ok = 0usize;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(errs) => {
                ok += 1;
                for (sum, e) in sums.iter_mut().zip(&errs) {
                    for (s, v) in sum.iter_mut().zip(e) {
                        *s += v;
                    }
                }
            }
            Err(e) => log::warn!("run {r} failed and is excluded: {e}"),
        }
    }
    if ok == 0 {
        return Err(Error::Numeric("every Monte Carlo run failed".into()));
    }
    let mse: Vec<Vec<f64>> = sums
        .into_iter()
        .map(|s| s.into_iter().map(|v| v / ok as f64).collect())
        .collect();
    let mean_mse = cfg
        .methods
        .iter()
        .zip(&mse)
        .map(|(&m, s)| (m, s.iter().sum::<f64>() / k as f64))
        .collect();
    Ok(MseReport {
        methods: cfg.methods.clone(),
        mse,
        metadata: ReportMetadata {
            master_seed: cfg.master_seed,
            config_hash: cfg.hash(),
            scr: crate::simulator::compute_scr(&cfg.scenario),
            n_runs: cfg.n_runs,
            failed_runs: cfg.n_runs - ok,
            mean_mse,
            config: cfg.keys(),
            wall_time_secs: None,
        },
    })
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn format_csv(report: &MseReport) -> String {
    let mut out = String::from("step");
    for m in &report.methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for k in 0..report.horizon() {
        out.push_str(&(k + 1).to_string());
        for series in &report.mse {
            out.push_str(&format!(",{:.5e}", series[k]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<(Vec<Method>, Vec<Vec<f64>>)> {
    let err = |line: usize, msg: String| Error::Parse {
        context: format!("csv line {line}"),
        message: msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut cols = header.split(',');
    if cols.next() != Some("step") {
        return Err(err(1, "first column must be `step`".into()));
    }
    let methods: Vec<Method> = cols.map(str::parse).collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(err(1, "no method columns".into()));
    }
    let mut mse = vec![Vec::new(); methods.len()];
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != methods.len() + 1 {
            return Err(err(lineno, format!("expected {} fields, got {}", methods.len() + 1, fields.len())));
        }
        if fields[0].parse::<usize>().ok() != Some(i + 1) {
            return Err(err(lineno, format!("expected step {}, got {:?}", i + 1, fields[0])));
        }
        for (series, f) in mse.iter_mut().zip(&fields[1..]) {
            series.push(f.parse::<f64>().map_err(|e| err(lineno, format!("bad value {f:?}: {e}")))?);
        }
    }
    Ok((methods, mse))
}

/// Writes the CSV to `path` and the JSON metadata next to it.
pub fn write_report(report: &MseReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, format_csv(report)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let mut json = serde_json::to_string_pretty(&report.metadata).map_err(|e| Error::Parse {
        context: side.display().to_string(),
        message: e.to_string(),
    })?;
    json.push('\n');
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

/// Reads a report written by [`write_report`]. Series carry the CSV's 6-digit precision.
pub fn read_report(path: &Path) -> Result<MseReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (methods, mse) = parse_csv(&text)?;
    let side = sidecar_path(path);
    let json = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let metadata = serde_json::from_str(&json).map_err(|e| Error::Parse {
        context: side.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(MseReport { methods, mse, metadata })
}
