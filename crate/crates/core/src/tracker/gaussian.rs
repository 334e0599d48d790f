//! Kalman (linear-Gaussian) belief.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};

use super::models::{MotionModel, ObsModel};
use crate::types::{symmetrize4, Point, State, StateCov};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: State,
    pub cov: StateCov,
}

impl GaussianBelief {
    pub fn new(mean: State, cov: StateCov) -> Result<Self> {
        let b = GaussianBelief {
            mean,
            cov: symmetrize4(&cov),
        };
        if b.cov.cholesky().is_none() {
            return Err(Error::param("belief covariance must be positive definite"));
        }
        Ok(b)
    }

    pub fn predict(&self, motion: &MotionModel) -> GaussianBelief {
        let a = &motion.transition;
        GaussianBelief {
            mean: a * self.mean,
            cov: repair_cov(a * self.cov * a.transpose() + motion.process_noise()),
        }
    }

    /// Predicted measurement and innovation covariance `S = H P Hᵀ + Q`.
    pub fn innovation(&self, obs: &ObsModel) -> (Point, Matrix2<f64>) {
        (obs.predict_measurement(&self.mean), obs.innovation_cov(&self.cov))
    }

    /// Kalman update with one measurement (Joseph form).
    pub fn update_one(&self, z: &Point, obs: &ObsModel) -> Result<GaussianBelief> {
        let (z_hat, s) = self.innovation(obs);
        let chol = s
            .cholesky()
            .ok_or_else(|| Error::Numeric("innovation covariance is singular".into()))?;
        let pht = self.cov * obs.h.transpose();
        let gain = pht * chol.inverse();
        let mean = self.mean + gain * (z - z_hat);
        let ikh = Matrix4::identity() - gain * obs.h;
        let cov = ikh * self.cov * ikh.transpose() + gain * obs.noise_cov * gain.transpose();
        Ok(GaussianBelief {
            mean,
            cov: repair_cov(cov),
        })
    }

    /// Sequential updates, one per measurement.
    pub fn update(&self, zs: &[Point], obs: &ObsModel) -> Result<GaussianBelief> {
        zs.iter().try_fold(self.clone(), |b, z| b.update_one(z, obs))
    }
}

/// Symmetrizes, and floors eigenvalues if the result is not positive definite.
pub(crate) fn repair_cov(cov: StateCov) -> StateCov {
    let cov = symmetrize4(&cov);
    if cov.cholesky().is_some() {
        return cov;
    }
    let floor = 1e-9 * (cov.trace().abs() / 4.0).max(1.0);
    log::warn!("covariance lost positive definiteness; flooring eigenvalues at {floor:e}");
    let eig = SymmetricEigen::new(cov);
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    symmetrize4(&(eig.eigenvectors * Matrix4::from_diagonal(&vals) * eig.eigenvectors.transpose()))
}
