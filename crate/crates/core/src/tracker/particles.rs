//! Weighted-particle belief with systematic resampling.

use rand::Rng;
use rand_distr::StandardNormal;

use super::gaussian::GaussianBelief;
use super::models::{MotionModel, ObsModel};
use crate::types::{log_sum_exp, symmetrize4, Gaussian2, Point, State, StateCov};
use crate::{Error, Result};

pub const DEFAULT_PARTICLES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief {
    pub points: Vec<State>,
    /// Normalized so that `logsumexp(log_weights) == 0`.
    pub log_weights: Vec<f64>,
}

impl ParticleBelief {
    pub fn from_gaussian<R: Rng + ?Sized>(g: &GaussianBelief, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("particle count must be positive"));
        }
        let l = g
            .cov
            .cholesky()
            .ok_or_else(|| Error::param("belief covariance must be positive definite"))?
            .l();
        let points = (0..n)
            .map(|_| g.mean + l * State::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let lw = -(n as f64).ln();
        Ok(ParticleBelief {
            points,
            log_weights: vec![lw; n],
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn predict<R: Rng + ?Sized>(&self, motion: &MotionModel, rng: &mut R) -> ParticleBelief {
        let std = motion.noise_std();
        let points = self
            .points
            .iter()
            .map(|x| {
                let noise = State::from_fn(|i, _| std[i] * rng.sample::<f64, _>(StandardNormal));
                motion.propagate(x) + noise
            })
            .collect();
        ParticleBelief {
            points,
            log_weights: self.log_weights.clone(),
        }
    }

    /// Reweights by `Π_z N(z; H x, Q)` and resamples when ESS drops below half.
    pub fn update<R: Rng + ?Sized>(&self, zs: &[Point], obs: &ObsModel, rng: &mut R) -> Result<ParticleBelief> {
        if zs.is_empty() {
            return Ok(self.clone());
        }
        let mut lw = self.log_weights.clone();
        for (w, x) in lw.iter_mut().zip(&self.points) {
            let lik = Gaussian2::new(obs.predict_measurement(x), obs.noise_cov)?;
            *w += zs.iter().map(|z| lik.log_pdf(z)).sum::<f64>();
        }
        let norm = log_sum_exp(&lw);
        if !norm.is_finite() {
            return Err(Error::Numeric("all particle weights vanished".into()));
        }
        lw.iter_mut().for_each(|w| *w -= norm);
        let out = ParticleBelief {
            points: self.points.clone(),
            log_weights: lw,
        };
        if out.ess() < out.len() as f64 / 2.0 {
            Ok(out.resample(rng))
        } else {
            Ok(out)
        }
    }

    pub fn ess(&self) -> f64 {
        1.0 / self.log_weights.iter().map(|w| (2.0 * w).exp()).sum::<f64>()
    }

    /// Systematic resampling to equal weights.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParticleBelief {
        let n = self.len();
        let step = 1.0 / n as f64;
        let u0: f64 = rng.random::<f64>() * step;
        let mut points = Vec::with_capacity(n);
        let mut cum = 0.0;
        let mut j = 0;
        for (x, w) in self.points.iter().zip(&self.log_weights) {
            cum += w.exp();
            while j < n && u0 + j as f64 * step < cum {
                points.push(*x);
                j += 1;
            }
        }
        // Rounding can leave the cumulative sum just under 1.
        while points.len() < n {
            points.push(*self.points.last().expect("nonempty"));
        }
        ParticleBelief {
            points,
            log_weights: vec![-(n as f64).ln(); n],
        }
    }

    pub fn mean(&self) -> State {
        self.points
            .iter()
            .zip(&self.log_weights)
            .map(|(x, w)| x * w.exp())
            .sum()
    }

    pub fn cov(&self) -> StateCov {
        let m = self.mean();
        let c: StateCov = self
            .points
            .iter()
            .zip(&self.log_weights)
            .map(|(x, w)| {
                let d = x - m;
                d * d.transpose() * w.exp()
            })
            .sum();
        symmetrize4(&c)
    }
}
