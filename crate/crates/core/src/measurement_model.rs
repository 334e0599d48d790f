//! Joint Dirichlet-process prior over clutter and target measurement parameters.
//!
//! Clutter parameters come from `G_c ~ DP(α_c, H_c)`. Target parameters come
//! from `G_t | Θ ~ DP(α_t, H_t + Σ_n δ_{θ_n})`, whose base has mass `1 + N`.
//! That process is sampled as `DP(α_t (1+N), (H_t + Σ δ_θ) / (1+N))`.
//!
//! Parameter points live in measurement space: a target measurement is
//! `N(w_n, Q_t)` and a clutter measurement is `N(θ_n, Q_c)`, where
//! measurement `n` uses the `n`-th parameter of its list.

use nalgebra::Matrix2;
use rand::Rng;

use crate::dp::{dp_posterior, sample_dp, BaseMeasure, DiscreteMeasure, DpParams};
use crate::types::{Gaussian2, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct JointPriorConfig {
    pub alpha_c: f64,
    pub base_c: BaseMeasure,
    pub alpha_t: f64,
    pub base_t: BaseMeasure,
    pub truncation: usize,
}

impl JointPriorConfig {
    pub fn new(
        alpha_c: f64,
        base_c: BaseMeasure,
        alpha_t: f64,
        base_t: BaseMeasure,
        truncation: usize,
    ) -> Result<Self> {
        let cfg = JointPriorConfig {
            alpha_c,
            base_c,
            alpha_t,
            base_t,
            truncation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_c", self.alpha_c), ("alpha_t", self.alpha_t)] {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::param(format!("{name} must be positive, got {a}")));
            }
        }
        if self.truncation == 0 {
            return Err(Error::param("truncation must be at least 1"));
        }
        Ok(())
    }

    pub fn clutter_params(&self) -> Result<DpParams> {
        DpParams::new(self.alpha_c, self.base_c.clone())
    }

    /// Same config with the target base replaced.
    pub fn with_target_base(&self, base_t: BaseMeasure) -> Self {
        JointPriorConfig {
            base_t,
            ..self.clone()
        }
    }

    /// Normalized parameters of `DP(α_t, H_t + Σ δ_θ)`.
    pub fn target_params(&self, theta: &[Point]) -> Result<DpParams> {
        if theta.is_empty() {
            return DpParams::new(self.alpha_t, self.base_t.clone());
        }
        let n = theta.len() as f64;
        // Unnormalized base H_t + Σ δ_θ has mass 1 + N; the normalized form
        // coincides with the DP posterior of DP(α, H_t) at α = 1.
        let unit = DpParams::new(1.0, self.base_t.clone())?;
        let base = dp_posterior(&unit, theta)?.base().clone();
        DpParams::new(self.alpha_t * (1.0 + n), base)
    }
}

/// Clutter and target parameter sets for one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanParams {
    pub theta: Vec<Point>,
    pub w: Vec<Point>,
}

impl ScanParams {
    pub fn n_k(&self) -> usize {
        self.theta.len()
    }
}

/// `G_c ~ DP(α_c, H_c)`.
pub fn draw_clutter_prior<R: Rng + ?Sized>(
    config: &JointPriorConfig,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    config.validate()?;
    sample_dp(&config.clutter_params()?, config.truncation, rng)
}

/// `Θ | G_c ~iid G_c`.
pub fn draw_theta<R: Rng + ?Sized>(
    g_c: &DiscreteMeasure,
    base_c: &BaseMeasure,
    n_k: usize,
    rng: &mut R,
) -> Vec<Point> {
    g_c.sample_n(base_c, n_k, rng)
}

/// `G_t | Θ ~ DP(α_t, H_t + Σ δ_θ)`.
pub fn draw_target_prior<R: Rng + ?Sized>(
    config: &JointPriorConfig,
    theta: &[Point],
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    config.validate()?;
    sample_dp(&config.target_params(theta)?, config.truncation, rng)
}

/// `W | G_t ~iid G_t`; `target_base` is the normalized base of `G_t`.
pub fn draw_w<R: Rng + ?Sized>(
    g_t: &DiscreteMeasure,
    target_base: &BaseMeasure,
    n_k: usize,
    rng: &mut R,
) -> Vec<Point> {
    g_t.sample_n(target_base, n_k, rng)
}

/// The full forward model for one scan: `G_c → Θ → G_t → W`.
pub fn generate_scan_params<R: Rng + ?Sized>(
    config: &JointPriorConfig,
    n_k: usize,
    rng: &mut R,
) -> Result<ScanParams> {
    if n_k == 0 {
        return Ok(ScanParams {
            theta: Vec::new(),
            w: Vec::new(),
        });
    }
    let g_c = draw_clutter_prior(config, rng)?;
    let theta = draw_theta(&g_c, &config.base_c, n_k, rng);
    let target = config.target_params(&theta)?;
    let g_t = sample_dp(&target, config.truncation, rng)?;
    let w = draw_w(&g_t, target.base(), n_k, rng);
    Ok(ScanParams { theta, w })
}

/// Target and clutter measurements emitted from one set of scan parameters:
/// `z_t[n] ~ N(w_n, q_t)`, `z_c[n] ~ N(θ_n, q_c)`.
pub fn emit_measurements<R: Rng + ?Sized>(
    params: &ScanParams,
    q_t: &Matrix2<f64>,
    q_c: &Matrix2<f64>,
    rng: &mut R,
) -> Result<(Vec<Point>, Vec<Point>)> {
    let emit = |centers: &[Point], q: &Matrix2<f64>, rng: &mut R| -> Result<Vec<Point>> {
        centers
            .iter()
            .map(|c| Ok(Gaussian2::new(*c, *q)?.sample(rng)))
            .collect()
    };
    let zt = emit(&params.w, q_t, rng)?;
    let zc = emit(&params.theta, q_c, rng)?;
    Ok((zt, zc))
}
