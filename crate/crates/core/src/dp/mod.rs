//! Dirichlet-process primitives.
//!
//! Draws `G ~ DP(α, H)` are represented by truncated stick-breaking with an
//! explicit tail mass, so `Σ π_k + tail = 1` holds for every draw. Samplers
//! keep breaking until the tail drops below [`TAIL_TOLERANCE`].

mod base;
mod crp;
mod stick;

use rand::Rng;

pub use base::{BaseMeasure, Mixture};
pub use crp::{
    crp_log_prob, expected_cluster_count, expected_cluster_count_asymptotic,
    predictive_probabilities, sample_crp_partition, CrpPartition,
};
pub use stick::{
    sample_stick_breaking, sample_stick_breaking_to_tolerance, StickWeights, DEFAULT_TRUNCATION,
    MAX_BREAKS, TAIL_TOLERANCE,
};

use crate::types::Point;
use crate::{Error, Result};

/// Concentration and base measure of a Dirichlet process.
#[derive(Debug, Clone, PartialEq)]
pub struct DpParams {
    alpha: f64,
    base: BaseMeasure,
}

impl DpParams {
    pub fn new(alpha: f64, base: BaseMeasure) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param(format!("concentration must be positive, got {alpha}")));
        }
        let mass = base.total_mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::param(format!("base measure mass must be positive, got {mass}")));
        }
        Ok(DpParams { alpha, base })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> &BaseMeasure {
        &self.base
    }

    pub fn total_mass(&self) -> f64 {
        self.base.total_mass()
    }

    /// `DP(α, M)` with unnormalized `M` rewritten as `DP(α·|M|, M/|M|)`.
    pub fn normalized(&self) -> Result<DpParams> {
        let mass = self.total_mass();
        if mass == 1.0 {
            return Ok(self.clone());
        }
        let base = match &self.base {
            BaseMeasure::Mixture(m) => BaseMeasure::Mixture(m.scaled(1.0 / mass)?),
            other => other.clone(),
        };
        DpParams::new(self.alpha * mass, base)
    }
}

/// A truncated discrete random measure `Σ π_k δ_{θ_k}` plus unassigned tail mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Point>,
    pub weights: Vec<f64>,
    pub tail_mass: f64,
}

impl DiscreteMeasure {
    pub fn validate(&self) -> Result<()> {
        if self.atoms.len() != self.weights.len() {
            return Err(Error::Invariant("atoms and weights differ in length".into()));
        }
        if self.weights.iter().any(|w| *w < 0.0) || self.tail_mass < 0.0 {
            return Err(Error::Invariant("negative weight".into()));
        }
        let total = self.weights.iter().sum::<f64>() + self.tail_mass;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invariant(format!("weights sum to {total}")));
        }
        Ok(())
    }

    /// One draw from the measure. The tail is resolved with a fresh atom from `base`.
    pub fn sample<R: Rng + ?Sized>(&self, base: &BaseMeasure, rng: &mut R) -> Point {
        let mut u = rng.random::<f64>();
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            if u < *w {
                return *atom;
            }
            u -= w;
        }
        base.sample(rng)
    }

    pub fn sample_n<R: Rng + ?Sized>(
        &self,
        base: &BaseMeasure,
        n: usize,
        rng: &mut R,
    ) -> Vec<Point> {
        (0..n).map(|_| self.sample(base, rng)).collect()
    }
}

/// Truncated draw `G ~ DP(α, H)`. At least `truncation` atoms; more if the
/// tail is still above [`TAIL_TOLERANCE`].
pub fn sample_dp<R: Rng + ?Sized>(
    params: &DpParams,
    truncation: usize,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    let sticks = sample_stick_breaking_to_tolerance(
        params.alpha,
        truncation,
        TAIL_TOLERANCE,
        MAX_BREAKS,
        rng,
    )?;
    let atoms = (0..sticks.len()).map(|_| params.base.sample(rng)).collect();
    Ok(DiscreteMeasure {
        atoms,
        weights: sticks.weights,
        tail_mass: sticks.tail_mass,
    })
}

/// Posterior `DP(α + N, (α H + Σ δ_θ) / (α + N))` after observing `observations`.
pub fn dp_posterior(prior: &DpParams, observations: &[Point]) -> Result<DpParams> {
    if observations.is_empty() {
        return Ok(prior.clone());
    }
    let prior = prior.normalized()?;
    let n = observations.len() as f64;
    let post_alpha = prior.alpha + n;
    let base = BaseMeasure::mixture(
        prior.alpha / post_alpha,
        prior.base.clone(),
        observations.to_vec(),
        vec![1.0 / post_alpha; observations.len()],
    )?;
    DpParams::new(post_alpha, base)
}
