//! Single-target Bayes filtering: Gaussian and particle beliefs, plus the
//! clutter-aware and all-measurement step functions.

mod gaussian;
mod models;
mod particles;

use nalgebra::Matrix2;
use rand::Rng;

pub use gaussian::GaussianBelief;
pub use models::{MotionModel, ObsModel, SystemModel};
pub use particles::{ParticleBelief, DEFAULT_PARTICLES};

use crate::clustering::{
    classify_clusters, gibbs_partition_with, likelihood_ratio, ClusterStats, GibbsConfig, ScanModel,
    ScanPartitionResult,
};
use crate::measurement_model::JointPriorConfig;
use crate::types::{Point, State, StateCov};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Belief {
    Gaussian(GaussianBelief),
    Particles(ParticleBelief),
}

impl Belief {
    pub fn mean(&self) -> State {
        match self {
            Belief::Gaussian(g) => g.mean,
            Belief::Particles(p) => p.mean(),
        }
    }

    pub fn cov(&self) -> StateCov {
        match self {
            Belief::Gaussian(g) => g.cov,
            Belief::Particles(p) => p.cov(),
        }
    }

    pub fn position(&self) -> Point {
        let m = self.mean();
        Point::new(m[0], m[1])
    }

    pub fn predict<R: Rng + ?Sized>(&self, motion: &MotionModel, rng: &mut R) -> Belief {
        match self {
            Belief::Gaussian(g) => Belief::Gaussian(g.predict(motion)),
            Belief::Particles(p) => Belief::Particles(p.predict(motion, rng)),
        }
    }

    /// Conditions on `zs`, all assumed target-originated. Empty `zs` is a no-op.
    pub fn update<R: Rng + ?Sized>(&self, zs: &[Point], obs: &ObsModel, rng: &mut R) -> Result<Belief> {
        Ok(match self {
            Belief::Gaussian(g) => Belief::Gaussian(g.update(zs, obs)?),
            Belief::Particles(p) => Belief::Particles(p.update(zs, obs, rng)?),
        })
    }

    /// Predicted measurement and innovation covariance from the belief's moments.
    pub fn innovation(&self, obs: &ObsModel) -> (Point, Matrix2<f64>) {
        match self {
            Belief::Gaussian(g) => g.innovation(obs),
            Belief::Particles(p) => (obs.predict_measurement(&p.mean()), obs.innovation_cov(&p.cov())),
        }
    }
}

impl From<GaussianBelief> for Belief {
    fn from(g: GaussianBelief) -> Self {
        Belief::Gaussian(g)
    }
}

impl From<ParticleBelief> for Belief {
    fn from(p: ParticleBelief) -> Self {
        Belief::Particles(p)
    }
}

/// Splits the scan into target and clutter sets given an already-predicted
/// belief. The target cluster is demoted to clutter when the scan model finds
/// it no more likely target- than clutter-originated.
pub fn partition_scan<R: Rng + ?Sized>(
    predicted: &Belief,
    scan: &[Point],
    prior: &JointPriorConfig,
    gibbs: &GibbsConfig,
    obs: &ObsModel,
    rng: &mut R,
) -> Result<ScanPartitionResult> {
    if scan.is_empty() {
        return Ok(ScanPartitionResult::empty());
    }
    let (z_hat, s) = predicted.innovation(obs);
    let model = ScanModel::for_prediction(prior, &z_hat, &s, &obs.noise_cov)?;
    let partition = gibbs_partition_with(scan, &model, gibbs, rng)?;
    let mut result = classify_clusters(&partition, scan, &z_hat, &s)?;
    let stats = ClusterStats::from_points(result.target_indices().map(|i| &scan[i]), &model.noise);
    if result.target_cluster.is_some() && model.origin_log_odds(&stats) <= 0.0 {
        result.demote_target();
    }
    result.log_likelihood_ratio = likelihood_ratio(&result, scan, &predicted.mean(), obs, &prior.base_c)?;
    Ok(result)
}

/// One clutter-aware step: predict, partition the scan, update with the
/// target-labelled measurements only.
pub fn metric_bayes_step<R: Rng + ?Sized>(
    belief: &Belief,
    scan: &[Point],
    prior: &JointPriorConfig,
    gibbs: &GibbsConfig,
    system: &SystemModel,
    rng: &mut R,
) -> Result<(Belief, ScanPartitionResult)> {
    let predicted = belief.predict(&system.motion, rng);
    let result = partition_scan(&predicted, scan, prior, gibbs, &system.obs, rng)?;
    let targets: Vec<Point> = result.target_indices().map(|i| scan[i]).collect();
    let posterior = predicted.update(&targets, &system.obs, rng)?;
    Ok((posterior, result))
}

/// One step treating every measurement in the scan as target-originated.
pub fn naive_bayes_step<R: Rng + ?Sized>(
    belief: &Belief,
    scan: &[Point],
    system: &SystemModel,
    rng: &mut R,
) -> Result<Belief> {
    belief.predict(&system.motion, rng).update(scan, &system.obs, rng)
}
