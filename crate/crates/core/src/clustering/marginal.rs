//! Closed-form cluster marginal likelihoods for Gaussian-location clusters
//! with known measurement covariance `Q`.
//!
//! A cluster `C` of points shares an unknown location `μ ~ H`, and each
//! member is `z ~ N(μ, Q)`. Everything needed to integrate `μ` out is kept in
//! [`ClusterStats`]: `n`, `Σ z`, and `Σ zᵀ Q⁻¹ z`.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::dp::BaseMeasure;
use crate::types::{log_sum_exp, Point};
use crate::{Error, Result};

/// Known measurement noise `Q`, with its precision and log-determinant cached.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    cov: Matrix2<f64>,
    precision: Matrix2<f64>,
    log_det: f64,
}

impl NoiseModel {
    pub fn new(cov: Matrix2<f64>) -> Result<Self> {
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numeric("measurement covariance is not positive definite".into()))?;
        let l = chol.l();
        Ok(NoiseModel {
            cov,
            precision: chol.inverse(),
            log_det: 2.0 * (l[(0, 0)].ln() + l[(1, 1)].ln()),
        })
    }

    pub fn cov(&self) -> &Matrix2<f64> {
        &self.cov
    }

    fn quad(&self, a: &Point, b: &Point) -> f64 {
        (a.transpose() * self.precision * b)[(0, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClusterStats {
    pub n: usize,
    pub sum: Point,
    /// `Σ zᵀ Q⁻¹ z`
    pub quad: f64,
}

impl ClusterStats {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>, noise: &NoiseModel) -> Self {
        let mut s = ClusterStats::default();
        for z in points {
            s.add(z, noise);
        }
        s
    }

    pub fn add(&mut self, z: &Point, noise: &NoiseModel) {
        self.n += 1;
        self.sum += z;
        self.quad += noise.quad(z, z);
    }

    pub fn remove(&mut self, z: &Point, noise: &NoiseModel) {
        self.n -= 1;
        if self.n == 0 {
            *self = ClusterStats::default();
        } else {
            self.sum -= z;
            self.quad -= noise.quad(z, z);
        }
    }

    pub fn with(&self, z: &Point, noise: &NoiseModel) -> Self {
        let mut s = *self;
        s.add(z, noise);
        s
    }

    pub fn centroid(&self) -> Option<Point> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// `ln ∫ Π_{z∈C} N(z; μ, Q) dH(μ)` under the normalized `base`.
///
/// The uniform case integrates `μ` over the whole plane and divides by the
/// region area, ignoring the region boundary. This is exact up to the
/// Gaussian mass that falls outside the region.
pub fn log_marginal(base: &BaseMeasure, stats: &ClusterStats, noise: &NoiseModel) -> f64 {
    let n = stats.n as f64;
    if stats.n == 0 {
        return 0.0;
    }
    let ln2pi = (2.0 * PI).ln();
    match base {
        BaseMeasure::Uniform(r) => {
            let ss = stats.quad - noise.quad(&stats.sum, &stats.sum) / n;
            -r.area().ln() - (n - 1.0) * ln2pi - 0.5 * (n - 1.0) * noise.log_det - n.ln()
                - 0.5 * ss.max(0.0)
        }
        BaseMeasure::Gaussian(g) => {
            let prior_prec = g.precision();
            let post_prec = prior_prec + noise.precision * n;
            let b = prior_prec * g.mean() + noise.precision * stats.sum;
            let c = (g.mean().transpose() * prior_prec * g.mean())[(0, 0)] + stats.quad;
            let Some(chol) = post_prec.cholesky() else {
                return f64::NEG_INFINITY;
            };
            let l = chol.l();
            let post_log_det = 2.0 * (l[(0, 0)].ln() + l[(1, 1)].ln());
            let solved = chol.solve(&b);
            -n * ln2pi - 0.5 * n * noise.log_det - 0.5 * g.log_det() - 0.5 * post_log_det
                - 0.5 * c
                + 0.5 * b.dot(&solved)
        }
        BaseMeasure::PointMass(p) => {
            let ss = stats.quad - 2.0 * noise.quad(p, &stats.sum) + n * noise.quad(p, p);
            -n * ln2pi - 0.5 * n * noise.log_det - 0.5 * ss.max(0.0)
        }
        BaseMeasure::Mixture(m) => {
            let total = m.total_mass();
            let mut terms = Vec::with_capacity(m.atoms().len() + 1);
            if m.base_weight() > 0.0 {
                terms.push(
                    (m.base_weight() * m.base().total_mass() / total).ln()
                        + log_marginal(m.base(), stats, noise),
                );
            }
            for (a, w) in m.atoms().iter().zip(m.atom_weights()) {
                if *w > 0.0 {
                    terms.push(
                        (w / total).ln() + log_marginal(&BaseMeasure::PointMass(*a), stats, noise),
                    );
                }
            }
            log_sum_exp(&terms)
        }
    }
}
