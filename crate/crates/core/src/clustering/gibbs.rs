//! Collapsed Gibbs sampling of scan partitions.
//!
//! The prior over partitions is a CRP with concentration `α_t + α_c`. A new
//! cluster draws its location from the two-component base
//! `(α_t H_t + α_c H_c) / (α_t + α_c)`, so each cluster's marginal likelihood
//! is the matching mixture of the target and clutter marginals.

use nalgebra::Matrix2;
use rand::Rng;

use super::marginal::{log_marginal, ClusterStats, NoiseModel};
use crate::dp::{crp_log_prob, BaseMeasure, CrpPartition};
use crate::measurement_model::JointPriorConfig;
use crate::types::{log_sum_exp, Gaussian2, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub n_sweeps: usize,
    pub burn_in: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            n_sweeps: 50,
            burn_in: 10,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 || self.burn_in >= self.n_sweeps {
            return Err(Error::param(format!(
                "need n_sweeps >= 1 and burn_in < n_sweeps, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Everything the sampler needs about one scan's prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanModel {
    pub alpha_t: f64,
    pub alpha_c: f64,
    pub base_t: BaseMeasure,
    pub base_c: BaseMeasure,
    pub noise: NoiseModel,
}

impl ScanModel {
    pub fn new(prior: &JointPriorConfig, meas_cov: &Matrix2<f64>) -> Result<Self> {
        prior.validate()?;
        Ok(ScanModel {
            alpha_t: prior.alpha_t,
            alpha_c: prior.alpha_c,
            base_t: prior.base_t.clone(),
            base_c: prior.base_c.clone(),
            noise: NoiseModel::new(*meas_cov)?,
        })
    }

    /// Scan model with the target base set from the filter prediction.
    ///
    /// Target locations are `H x`, so `H_t = N(ẑ, S − Q)`; a single target
    /// measurement then has predictive density `N(ẑ, S)`. When `S − Q` is not
    /// positive definite the base collapses to a point mass at `ẑ`.
    pub fn for_prediction(
        prior: &JointPriorConfig,
        predicted_meas: &Point,
        innovation_cov: &Matrix2<f64>,
        meas_cov: &Matrix2<f64>,
    ) -> Result<Self> {
        if innovation_cov.cholesky().is_none() {
            return Err(Error::Numeric("innovation covariance is not positive definite".into()));
        }
        let location_cov = innovation_cov - meas_cov;
        let base_t = match Gaussian2::new(*predicted_meas, location_cov) {
            Ok(g) => BaseMeasure::Gaussian(g),
            Err(_) => BaseMeasure::PointMass(*predicted_meas),
        };
        ScanModel::new(&prior.with_target_base(base_t), meas_cov)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_t + self.alpha_c
    }

    pub fn log_marginal_target(&self, stats: &ClusterStats) -> f64 {
        log_marginal(&self.base_t, stats, &self.noise)
    }

    pub fn log_marginal_clutter(&self, stats: &ClusterStats) -> f64 {
        log_marginal(&self.base_c, stats, &self.noise)
    }

    /// `ln m(C)` under the combined base.
    pub fn log_marginal(&self, stats: &ClusterStats) -> f64 {
        if stats.n == 0 {
            return 0.0;
        }
        let a = self.alpha();
        log_sum_exp(&[
            (self.alpha_t / a).ln() + self.log_marginal_target(stats),
            (self.alpha_c / a).ln() + self.log_marginal_clutter(stats),
        ])
    }

    /// `ln [α_t m_t(C) / (α_c m_c(C))]`: posterior log-odds that the cluster
    /// was opened from the target base rather than the clutter base.
    pub fn origin_log_odds(&self, stats: &ClusterStats) -> f64 {
        self.alpha_t.ln() + self.log_marginal_target(stats)
            - self.alpha_c.ln()
            - self.log_marginal_clutter(stats)
    }

    /// Unnormalized log posterior of a partition: CRP prior plus cluster marginals.
    pub fn log_joint(&self, points: &[Point], partition: &CrpPartition) -> f64 {
        let mut lp = crp_log_prob(self.alpha(), partition);
        for members in partition.members() {
            let stats = ClusterStats::from_points(members.iter().map(|&i| &points[i]), &self.noise);
            lp += self.log_marginal(&stats);
        }
        lp
    }
}

/// Sampler state: one label per point and per-cluster sufficient statistics.
pub struct GibbsSampler<'a> {
    model: &'a ScanModel,
    points: &'a [Point],
    labels: Vec<usize>,
    clusters: Vec<ClusterStats>,
    scratch: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// Starts from all-singletons.
    pub fn new(model: &'a ScanModel, points: &'a [Point]) -> Self {
        let clusters = points
            .iter()
            .map(|z| ClusterStats::from_points([z], &model.noise))
            .collect();
        GibbsSampler {
            model,
            points,
            labels: (0..points.len()).collect(),
            clusters,
            scratch: Vec::new(),
        }
    }

    pub fn partition(&self) -> CrpPartition {
        CrpPartition::from_labels(&self.labels)
    }

    pub fn log_joint(&self) -> f64 {
        let mut lp = crp_log_prob(self.model.alpha(), &self.partition());
        lp += self
            .clusters
            .iter()
            .map(|c| self.model.log_marginal(c))
            .sum::<f64>();
        lp
    }

    /// One systematic-scan sweep over all points.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.points.len() {
            self.resample_point(i, rng);
        }
    }

    fn resample_point<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) {
        let z = &self.points[i];
        let noise = &self.model.noise;
        let old = self.labels[i];
        self.clusters[old].remove(z, noise);
        if self.clusters[old].n == 0 {
            let last = self.clusters.len() - 1;
            self.clusters.swap_remove(old);
            if old != last {
                for l in self.labels.iter_mut() {
                    if *l == last {
                        *l = old;
                    }
                }
            }
        }

        let k = self.clusters.len();
        self.scratch.clear();
        for c in &self.clusters {
            let lw = (c.n as f64).ln() + self.model.log_marginal(&c.with(z, noise))
                - self.model.log_marginal(c);
            self.scratch.push(lw);
        }
        let single = ClusterStats::from_points([z], noise);
        self.scratch
            .push(self.model.alpha().ln() + self.model.log_marginal(&single));

        let max = self.scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = self.scratch.iter().map(|lw| (lw - max).exp()).sum();
        let mut u = rng.random::<f64>() * total;
        let mut chosen = k;
        for (j, lw) in self.scratch.iter().enumerate() {
            let w = (lw - max).exp();
            if u < w {
                chosen = j;
                break;
            }
            u -= w;
        }
        if chosen == k {
            self.clusters.push(single);
        } else {
            self.clusters[chosen].add(z, noise);
        }
        self.labels[i] = chosen;
    }
}

/// Runs `cfg.n_sweeps` sweeps and returns the highest-posterior partition
/// visited after burn-in.
pub fn gibbs_partition_with<R: Rng + ?Sized>(
    points: &[Point],
    model: &ScanModel,
    cfg: &GibbsConfig,
    rng: &mut R,
) -> Result<CrpPartition> {
    cfg.validate()?;
    match points.len() {
        0 => return Ok(CrpPartition::empty()),
        1 => return CrpPartition::from_assignments(vec![0]),
        _ => {}
    }
    let mut sampler = GibbsSampler::new(model, points);
    let mut best: Option<(f64, CrpPartition)> = None;
    for sweep in 0..cfg.n_sweeps {
        sampler.sweep(rng);
        if sweep < cfg.burn_in {
            continue;
        }
        let lp = sampler.log_joint();
        if best.as_ref().is_none_or(|(b, _)| lp > *b) {
            best = Some((lp, sampler.partition()));
        }
    }
    let (lp, partition) = best.expect("at least one post-burn-in sweep");
    if !lp.is_finite() {
        return Err(Error::Numeric(format!("partition log posterior is {lp}")));
    }
    Ok(partition)
}

/// Partitions one scan under `prior`, with the target base centred on the
/// predicted measurement.
pub fn gibbs_partition<R: Rng + ?Sized>(
    points: &[Point],
    prior: &JointPriorConfig,
    predicted_meas: &Point,
    innovation_cov: &Matrix2<f64>,
    meas_cov: &Matrix2<f64>,
    cfg: &GibbsConfig,
    rng: &mut R,
) -> Result<CrpPartition> {
    let model = ScanModel::for_prediction(prior, predicted_meas, innovation_cov, meas_cov)?;
    gibbs_partition_with(points, &model, cfg, rng)
}
