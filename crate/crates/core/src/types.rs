//! Shared geometric and Gaussian value types.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point in the 2-D measurement / parameter space (m).
pub type Point = Vector2<f64>;

/// Kinematic target state `[x, y, vx, vy]` (m, m/s).
pub type State = Vector4<f64>;

pub type StateCov = Matrix4<f64>;

/// Ground-truth origin of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Target,
    Clutter,
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let r = Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        };
        r.validate()?;
        Ok(r)
    }

    /// The square `[-half, half]²`.
    pub fn centered_square(half: f64) -> Result<Self> {
        Self::new(-half, half, -half, half)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.xmax <= self.xmin || self.ymax <= self.ymin {
            return Err(Error::param(format!("degenerate region {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let x = self.xmin + self.width() * rng.random::<f64>();
        let y = self.ymin + self.height() * rng.random::<f64>();
        Point::new(x, y)
    }
}

/// Bivariate Gaussian with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian2 {
    mean: Point,
    cov: Matrix2<f64>,
    chol: Matrix2<f64>,
    precision: Matrix2<f64>,
    log_det: f64,
}

impl Gaussian2 {
    pub fn new(mean: Point, cov: Matrix2<f64>) -> Result<Self> {
        let cov = symmetrize2(&cov);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numeric(format!("covariance is not positive definite: {cov:?}")))?;
        let l = chol.l();
        let log_det = 2.0 * (l[(0, 0)].ln() + l[(1, 1)].ln());
        let precision = chol.inverse();
        if !log_det.is_finite() || !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite Gaussian parameters".into()));
        }
        Ok(Gaussian2 {
            mean,
            cov,
            chol: l,
            precision,
            log_det,
        })
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix2<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &Matrix2<f64> {
        &self.precision
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Squared Mahalanobis distance of `z` from the mean.
    pub fn mahalanobis2(&self, z: &Point) -> f64 {
        let d = z - self.mean;
        (d.transpose() * self.precision * d)[(0, 0)]
    }

    pub fn log_pdf(&self, z: &Point) -> f64 {
        -(2.0 * PI).ln() - 0.5 * self.log_det - 0.5 * self.mahalanobis2(z)
    }

    pub fn pdf(&self, z: &Point) -> f64 {
        self.log_pdf(z).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let e = Point::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        self.mean + self.chol * e
    }
}

pub(crate) fn symmetrize2(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn symmetrize4(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Numerically stable `ln Σ exp(x_i)`.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
