use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector4};

use crate::types::{Point, State};
use crate::{Error, Result};

/// Linear motion `x_k = A x_{k-1} + n_k` with `n_k ~ N(0, σ² diag(B Bᵀ))`.
///
/// Only the diagonal of `σ² B Bᵀ` is used, so position and velocity noise
/// are uncorrelated. With the default gain `B = Δ [½, ½, 1, 1]ᵀ` the
/// per-step position noise std is `σΔ/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub transition: Matrix4<f64>,
    pub noise_gain: Vector4<f64>,
    pub sigma: f64,
    pub dt: f64,
    /// Probability the target persists to the next step. Only the simulator uses it.
    pub survival_prob: f64,
}

impl MotionModel {
    pub fn constant_velocity(dt: f64, sigma: f64, survival_prob: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param(format!("time step must be positive, got {dt}")));
        }
        let mut a = Matrix4::identity();
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        let m = MotionModel {
            transition: a,
            noise_gain: Vector4::new(0.5, 0.5, 1.0, 1.0) * dt,
            sigma,
            dt,
            survival_prob,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param(format!("process noise std must be >= 0, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.survival_prob) {
            return Err(Error::param(format!(
                "survival probability {} outside [0, 1]",
                self.survival_prob
            )));
        }
        Ok(())
    }

    /// Per-component process noise standard deviations `σ |B_i|`.
    pub fn noise_std(&self) -> Vector4<f64> {
        self.noise_gain.abs() * self.sigma
    }

    pub fn process_noise(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&self.noise_std().component_mul(&self.noise_std()))
    }

    pub fn propagate(&self, x: &State) -> State {
        self.transition * x
    }
}

impl Default for MotionModel {
    fn default() -> Self {
        MotionModel::constant_velocity(1.0, 7.0, 0.95).expect("valid defaults")
    }
}

/// Linear observation `z = H x + v`, `v ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsModel {
    pub h: Matrix2x4<f64>,
    pub noise_cov: Matrix2<f64>,
}

impl ObsModel {
    /// Position-only observation with isotropic noise std `sigma` (m).
    pub fn position(sigma: f64) -> Self {
        ObsModel {
            h: Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            noise_cov: Matrix2::identity() * (sigma * sigma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_cov.cholesky().is_none() {
            return Err(Error::param("measurement covariance must be positive definite"));
        }
        Ok(())
    }

    pub fn predict_measurement(&self, x: &State) -> Point {
        self.h * x
    }

    pub fn innovation_cov(&self, cov: &Matrix4<f64>) -> Matrix2<f64> {
        self.h * cov * self.h.transpose() + self.noise_cov
    }
}

impl Default for ObsModel {
    fn default() -> Self {
        ObsModel::position(10.0)
    }
}

/// Motion and observation models together.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemModel {
    pub motion: MotionModel,
    pub obs: ObsModel,
}
