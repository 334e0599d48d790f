//! Ground truth and cluttered scan generation.
//!
//! # Replay format
//!
//! [`GroundTruth::write`] emits one line per time step, whitespace separated:
//!
//! ```text
//! step alive x y vx vy n [label zx zy]...
//! ```
//!
//! `step` counts from 1, `alive` is `1` or `0`, `n` is the number of
//! measurements, and each measurement is a label (`t` target, `c` clutter)
//! followed by its coordinates. Floats are written in shortest round-trip
//! form, so parsing recovers the exact values. Lines starting with `#` are
//! comments.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::tracker::{MotionModel, ObsModel};
use crate::types::{Origin, Point, Rect, State};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub motion: MotionModel,
    pub obs: ObsModel,
    pub region: Rect,
    /// Expected number of clutter points per scan.
    pub clutter_rate: f64,
    pub detection_probability: f64,
    /// Number of scans `K`.
    pub horizon: usize,
    /// State at time 0; the first scan is taken at time 1.
    pub initial_state: State,
    /// Terminate the target with probability `1 − p_s` per step.
    pub survival_thinning: bool,
}

impl ScenarioConfig {
    /// σ = 7, Δ = 1, σ′ = 10, λ = 5 over [−1000, 1000]², P_d = 0.95, K = 50.
    pub fn reference_scenario() -> Self {
        ScenarioConfig {
            motion: MotionModel::default(),
            obs: ObsModel::default(),
            region: Rect::centered_square(1000.0).expect("valid region"),
            clutter_rate: 5.0,
            detection_probability: 0.95,
            horizon: 50,
            initial_state: State::new(0.0, 0.0, 10.0, 10.0),
            survival_thinning: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.obs.validate()?;
        self.region.validate()?;
        if !(self.clutter_rate.is_finite() && self.clutter_rate >= 0.0) {
            return Err(Error::param(format!("clutter rate must be >= 0, got {}", self.clutter_rate)));
        }
        if !(self.detection_probability > 0.0 && self.detection_probability <= 1.0) {
            return Err(Error::param(format!(
                "detection probability {} outside (0, 1]",
                self.detection_probability
            )));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon must be at least 1"));
        }
        if !self.initial_state.iter().all(|v| v.is_finite()) {
            return Err(Error::param("initial state must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub z: Point,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub states: Vec<State>,
    pub scans: Vec<Vec<Measurement>>,
    pub alive: Vec<bool>,
}

/// States at times 1..=K and the per-step alive mask.
pub fn simulate_trajectory<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<(Vec<State>, Vec<bool>)> {
    cfg.validate()?;
    let std = cfg.motion.noise_std();
    let mut x = cfg.initial_state;
    let mut alive = true;
    let mut states = Vec::with_capacity(cfg.horizon);
    let mut mask = Vec::with_capacity(cfg.horizon);
    for k in 0..cfg.horizon {
        let noise = State::from_fn(|i, _| std[i] * rng.sample::<f64, _>(StandardNormal));
        x = cfg.motion.propagate(&x) + noise;
        if cfg.survival_thinning && k > 0 && alive {
            alive = rng.random::<f64>() < cfg.motion.survival_prob;
        }
        states.push(x);
        mask.push(alive);
    }
    Ok((states, mask))
}

/// One shuffled scan: a detection of `x` with probability `P_d` (only when
/// `alive`), plus Poisson clutter uniform over the region.
pub fn simulate_scan<R: Rng + ?Sized>(x: &State, alive: bool, cfg: &ScenarioConfig, rng: &mut R) -> Result<Vec<Measurement>> {
    let noise_l = cfg
        .obs
        .noise_cov
        .cholesky()
        .ok_or_else(|| Error::param("measurement covariance must be positive definite"))?
        .l();
    let mut scan = Vec::new();
    if alive && rng.random::<f64>() < cfg.detection_probability {
        let v = Point::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        scan.push(Measurement {
            z: cfg.obs.predict_measurement(x) + noise_l * v,
            origin: Origin::Target,
        });
    }
    if cfg.clutter_rate > 0.0 {
        let n = Poisson::new(cfg.clutter_rate)
            .map_err(|e| Error::param(format!("clutter rate: {e}")))?
            .sample(rng) as usize;
        scan.extend((0..n).map(|_| Measurement {
            z: cfg.region.sample(rng),
            origin: Origin::Clutter,
        }));
    }
    scan.shuffle(rng);
    Ok(scan)
}

pub fn simulate_scans<R: Rng + ?Sized>(
    states: &[State],
    alive: &[bool],
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<Vec<Measurement>>> {
    if states.len() != alive.len() {
        return Err(Error::Invariant("states and alive mask differ in length".into()));
    }
    states
        .iter()
        .zip(alive)
        .map(|(x, &a)| simulate_scan(x, a, cfg, rng))
        .collect()
}

pub fn simulate_ground_truth<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GroundTruth> {
    let (states, alive) = simulate_trajectory(cfg, rng)?;
    let scans = simulate_scans(&states, &alive, cfg, rng)?;
    Ok(GroundTruth { states, scans, alive })
}

/// Clutter spread over measurement noise: per-axis RMS of a uniform draw over
/// the region divided by the per-axis RMS measurement noise.
pub fn compute_scr(cfg: &ScenarioConfig) -> f64 {
    let w = cfg.region.width();
    let h = cfg.region.height();
    let clutter_rms = ((w * w + h * h) / 24.0).sqrt();
    let noise_rms = (cfg.obs.noise_cov.trace() / 2.0).sqrt();
    clutter_rms / noise_rms
}

pub fn positions(scan: &[Measurement]) -> Vec<Point> {
    scan.iter().map(|m| m.z).collect()
}

impl GroundTruth {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scans.len() != self.states.len() || self.alive.len() != self.states.len() {
            return Err(Error::Invariant("ground truth lists differ in length".into()));
        }
        for (k, scan) in self.scans.iter().enumerate() {
            let targets = scan.iter().filter(|m| m.origin == Origin::Target).count();
            if targets > 1 || (targets == 1 && !self.alive[k]) {
                return Err(Error::Invariant(format!("step {}: invalid target count {targets}", k + 1)));
            }
        }
        Ok(())
    }

    pub fn write(&self) -> String {
        let mut out = String::from("# step alive x y vx vy n [label zx zy]...\n");
        for (k, ((x, scan), alive)) in self.states.iter().zip(&self.scans).zip(&self.alive).enumerate() {
            let _ = write!(
                out,
                "{} {} {:?} {:?} {:?} {:?} {}",
                k + 1,
                u8::from(*alive),
                x[0],
                x[1],
                x[2],
                x[3],
                scan.len()
            );
            for m in scan {
                let label = match m.origin {
                    Origin::Target => 't',
                    Origin::Clutter => 'c',
                };
                let _ = write!(out, " {label} {:?} {:?}", m.z.x, m.z.y);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<GroundTruth> {
        let mut gt = GroundTruth {
            states: Vec::new(),
            scans: Vec::new(),
            alive: Vec::new(),
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                context: format!("replay line {}", lineno + 1),
                message: msg,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 7 {
                return Err(err(format!("expected at least 7 fields, got {}", toks.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
            let step: usize = toks[0].parse().map_err(|e| err(format!("bad step: {e}")))?;
            if step != gt.states.len() + 1 {
                return Err(err(format!("expected step {}, got {step}", gt.states.len() + 1)));
            }
            let alive = match toks[1] {
                "1" => true,
                "0" => false,
                other => return Err(err(format!("alive flag must be 0 or 1, got {other:?}"))),
            };
            let x = State::new(num(toks[2])?, num(toks[3])?, num(toks[4])?, num(toks[5])?);
            let n: usize = toks[6].parse().map_err(|e| err(format!("bad count: {e}")))?;
            if toks.len() != 7 + 3 * n {
                return Err(err(format!("{n} measurements need {} fields, got {}", 7 + 3 * n, toks.len())));
            }
            let scan = toks[7..]
                .chunks(3)
                .map(|c| {
                    let origin = match c[0] {
                        "t" => Origin::Target,
                        "c" => Origin::Clutter,
                        other => return Err(err(format!("label must be t or c, got {other:?}"))),
                    };
                    Ok(Measurement {
                        z: Point::new(num(c[1])?, num(c[2])?),
                        origin,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            gt.states.push(x);
            gt.alive.push(alive);
            gt.scans.push(scan);
        }
        gt.validate()?;
        Ok(gt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.write()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<GroundTruth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GroundTruth::parse(&text)
    }
}
