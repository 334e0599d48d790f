//! Nearest-neighbour and probabilistic data association filters.

use nalgebra::Matrix2;

use crate::simulator::ScenarioConfig;
use crate::tracker::{GaussianBelief, SystemModel};
use crate::types::{log_sum_exp, Gaussian2, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    /// Probability mass of the validation gate. `1.0` disables gating.
    pub gate_probability: f64,
    pub detection_probability: f64,
    /// Clutter density per m².
    pub clutter_spatial_density: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            gate_probability: 0.99,
            detection_probability: 0.95,
            clutter_spatial_density: 5.0 / 4.0e6,
        }
    }
}

impl GateConfig {
    pub fn new(gate_probability: f64, detection_probability: f64, clutter_spatial_density: f64) -> Result<Self> {
        let g = GateConfig {
            gate_probability,
            detection_probability,
            clutter_spatial_density,
        };
        g.validate()?;
        Ok(g)
    }

    /// Matches the scenario's detection probability and clutter density.
    /// Gating is switched off for clutter-free scenarios.
    pub fn from_scenario(sc: &ScenarioConfig) -> Self {
        let density = sc.clutter_rate / sc.region.area();
        GateConfig {
            gate_probability: if sc.clutter_rate == 0.0 { 1.0 } else { 0.99 },
            detection_probability: sc.detection_probability,
            clutter_spatial_density: density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gate_probability > 0.0 && self.gate_probability <= 1.0) {
            return Err(Error::param(format!(
                "gate probability {} outside (0, 1]",
                self.gate_probability
            )));
        }
        if !(self.detection_probability > 0.0 && self.detection_probability <= 1.0) {
            return Err(Error::param(format!(
                "detection probability {} outside (0, 1]",
                self.detection_probability
            )));
        }
        if !(self.clutter_spatial_density.is_finite() && self.clutter_spatial_density >= 0.0) {
            return Err(Error::param("clutter density must be finite and >= 0"));
        }
        Ok(())
    }

    /// Squared Mahalanobis gate radius, the χ²(2) quantile `−2 ln(1 − P_g)`.
    pub fn threshold(&self) -> f64 {
        if self.gate_probability >= 1.0 {
            f64::INFINITY
        } else {
            -2.0 * (1.0 - self.gate_probability).ln()
        }
    }
}

fn gated<'a>(scan: &'a [Point], pred: &Gaussian2, gate: &GateConfig) -> Vec<(&'a Point, f64)> {
    let t = gate.threshold();
    scan.iter()
        .map(|z| (z, pred.mahalanobis2(z)))
        .filter(|(_, d2)| *d2 <= t)
        .collect()
}

/// Predict, then update with the closest gated measurement, if any.
pub fn nn_step(
    belief: &GaussianBelief,
    scan: &[Point],
    system: &SystemModel,
    gate: &GateConfig,
) -> Result<GaussianBelief> {
    gate.validate()?;
    let predicted = belief.predict(&system.motion);
    let (z_hat, s) = predicted.innovation(&system.obs);
    let pred = Gaussian2::new(z_hat, s)?;
    // first minimum wins on ties
    let best = gated(scan, &pred, gate)
        .into_iter()
        .fold(None::<(&Point, f64)>, |acc, (z, d2)| match acc {
            Some((_, b)) if b <= d2 => acc,
            _ => Some((z, d2)),
        });
    match best {
        Some((z, _)) => predicted.update_one(z, &system.obs),
        None => Ok(predicted),
    }
}

/// Association probabilities for PDA. Index 0 is the no-detection
/// hypothesis; index `i ≥ 1` is `zs[i-1]`.
pub fn pda_weights(zs: &[Point], z_hat: &Point, s: &Matrix2<f64>, gate: &GateConfig) -> Result<Vec<f64>> {
    gate.validate()?;
    if zs.is_empty() {
        return Ok(vec![1.0]);
    }
    let pred = Gaussian2::new(*z_hat, *s)?;
    let pd = gate.detection_probability;
    let miss = gate.clutter_spatial_density * (1.0 - pd * gate.gate_probability);
    let mut logw = Vec::with_capacity(zs.len() + 1);
    logw.push(if miss > 0.0 { miss.ln() } else { f64::NEG_INFINITY });
    logw.extend(zs.iter().map(|z| pd.ln() + pred.log_pdf(z)));
    let norm = log_sum_exp(&logw);
    if !norm.is_finite() {
        return Err(Error::Numeric("all association weights vanished".into()));
    }
    Ok(logw.iter().map(|w| (w - norm).exp()).collect())
}

/// Predict, then update with the association-weighted innovation and the
/// spread-of-innovations covariance term.
pub fn pda_step(
    belief: &GaussianBelief,
    scan: &[Point],
    system: &SystemModel,
    gate: &GateConfig,
) -> Result<GaussianBelief> {
    gate.validate()?;
    let obs = &system.obs;
    let predicted = belief.predict(&system.motion);
    let (z_hat, s) = predicted.innovation(obs);
    let pred = Gaussian2::new(z_hat, s)?;
    let zs: Vec<Point> = gated(scan, &pred, gate).into_iter().map(|(z, _)| *z).collect();
    if zs.is_empty() {
        return Ok(predicted);
    }
    let beta = pda_weights(&zs, &z_hat, &s, gate)?;
    let gain = predicted.cov * obs.h.transpose() * pred.precision();

    let mut nu = Point::zeros();
    let mut spread = Matrix2::zeros();
    for (z, b) in zs.iter().zip(&beta[1..]) {
        let v = z - z_hat;
        nu += v * *b;
        spread += v * v.transpose() * *b;
    }
    spread -= nu * nu.transpose();

    // covariance after a certain single-measurement update
    let updated_cov = predicted.update_one(&z_hat, obs)?.cov;
    let cov = predicted.cov * beta[0] + updated_cov * (1.0 - beta[0]) + gain * spread * gain.transpose();
    GaussianBelief::new(predicted.mean + gain * nu, cov)
}

#[cfg(test)]
mod tests {
    use nalgebra::{Matrix4, Vector4};
    use proptest::prelude::*;

    use super::*;
    use crate::types::State;

    fn belief() -> GaussianBelief {
        GaussianBelief::new(
            State::new(0.0, 0.0, 10.0, 0.0),
            Matrix4::from_diagonal(&Vector4::new(100.0, 100.0, 25.0, 25.0)),
        )
        .unwrap()
    }

    fn sys() -> SystemModel {
        SystemModel::default()
    }

    fn prediction() -> (Point, Matrix2<f64>) {
        belief().predict(&sys().motion).innovation(&sys().obs)
    }

    /// Point at Mahalanobis distance `d` from the prediction along x.
    fn at_distance(d: f64) -> Point {
        let (z_hat, s) = prediction();
        z_hat + Point::new(d * s[(0, 0)].sqrt(), 0.0)
    }

    #[test]
    fn threshold_is_chi_square_quantile() {
        assert!((GateConfig::default().threshold() - 9.2103).abs() < 1e-4);
        assert_eq!(GateConfig::new(1.0, 1.0, 0.0).unwrap().threshold(), f64::INFINITY);
        assert!(GateConfig::new(0.0, 0.9, 0.0).is_err());
        assert!(GateConfig::new(0.9, 0.0, 0.0).is_err());
        assert!(GateConfig::new(0.9, 0.9, -1.0).is_err());
    }

    #[test]
    fn nn_at_prediction_is_kalman() {
        let (z_hat, _) = prediction();
        let nn = nn_step(&belief(), &[z_hat], &sys(), &GateConfig::default()).unwrap();
        let kf = belief().predict(&sys().motion).update_one(&z_hat, &sys().obs).unwrap();
        assert_eq!(nn, kf);
    }

    #[test]
    fn nn_picks_closest() {
        let near = at_distance(1.0);
        let far = at_distance(-3.0);
        let nn = nn_step(&belief(), &[far, near], &sys(), &GateConfig::default()).unwrap();
        let kf = belief().predict(&sys().motion).update_one(&near, &sys().obs).unwrap();
        assert_eq!(nn, kf);
    }

    #[test]
    fn nothing_in_gate_is_predict_only() {
        let outside = [at_distance(3.1), at_distance(-3.2)];
        let want = belief().predict(&sys().motion);
        assert_eq!(nn_step(&belief(), &outside, &sys(), &GateConfig::default()).unwrap(), want);
        assert_eq!(pda_step(&belief(), &outside, &sys(), &GateConfig::default()).unwrap(), want);
        // just inside the √9.21 radius
        let inside = [at_distance(3.03)];
        assert_ne!(nn_step(&belief(), &inside, &sys(), &GateConfig::default()).unwrap(), want);
    }

    #[test]
    fn pda_limit_is_kalman() {
        let z = at_distance(0.7);
        let gate = GateConfig::new(0.99, 1.0, 1e-300).unwrap();
        let pda = pda_step(&belief(), &[z], &sys(), &gate).unwrap();
        let kf = belief().predict(&sys().motion).update_one(&z, &sys().obs).unwrap();
        assert!((pda.mean - kf.mean).abs().max() < 1e-9);
        assert!((pda.cov - kf.cov).abs().max() < 1e-9);
    }

    #[test]
    fn pda_without_measurements() {
        let (z_hat, s) = prediction();
        assert_eq!(pda_weights(&[], &z_hat, &s, &GateConfig::default()).unwrap(), vec![1.0]);
    }

    #[test]
    fn pda_symmetric_pair() {
        let (z_hat, s) = prediction();
        let a = at_distance(1.5);
        let b = z_hat - (a - z_hat);
        let beta = pda_weights(&[a, b], &z_hat, &s, &GateConfig::default()).unwrap();
        assert!((beta[1] - beta[2]).abs() < 1e-15);
        let post = pda_step(&belief(), &[a, b], &sys(), &GateConfig::default()).unwrap();
        let pred = belief().predict(&sys().motion);
        assert!((post.mean.x - pred.mean.x).abs() < 1e-9);
        assert!((post.mean.y - pred.mean.y).abs() < 1e-9);
    }

    #[test]
    fn zero_clutter_all_agree_with_kalman() {
        let z = at_distance(2.0) + Point::new(0.0, 5.0);
        let gate = GateConfig::new(1.0, 1.0, 0.0).unwrap();
        let kf = belief().predict(&sys().motion).update_one(&z, &sys().obs).unwrap();
        let nn = nn_step(&belief(), &[z], &sys(), &gate).unwrap();
        let pda = pda_step(&belief(), &[z], &sys(), &gate).unwrap();
        assert!((nn.mean - kf.mean).abs().max() < 1e-9);
        assert!((pda.mean - kf.mean).abs().max() < 1e-9);
    }

    proptest! {
        #[test]
        fn betas_sum_to_one_and_pda_cov_dominates(
            ds in proptest::collection::vec((-2.5f64..2.5, -2.5f64..2.5), 2..6),
        ) {
            let (z_hat, s) = prediction();
            let sd = s[(0, 0)].sqrt();
            let zs: Vec<Point> = ds.iter().map(|&(a, b)| z_hat + Point::new(a * sd, b * sd) * 0.5).collect();
            let gate = GateConfig::default();
            let beta = pda_weights(&zs, &z_hat, &s, &gate).unwrap();
            prop_assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);

            let pda = pda_step(&belief(), &zs, &sys(), &gate).unwrap();
            let kf = belief().predict(&sys().motion).update_one(&zs[0], &sys().obs).unwrap();
            let diff = pda.cov - kf.cov;
            let min_eig = diff.symmetric_eigenvalues().min();
            prop_assert!(min_eig > -1e-9 * kf.cov.norm());
        }

        #[test]
        fn nn_translation_invariant(
            ds in proptest::collection::vec((-3f64..3.0, -3f64..3.0), 1..6),
            shift in (-1e3f64..1e3, -1e3f64..1e3),
        ) {
            let (z_hat, _) = prediction();
            let zs: Vec<Point> = ds.iter().map(|&(a, b)| z_hat + Point::new(a * 15.0, b * 15.0)).collect();
            let t = Point::new(shift.0, shift.1);
            let mut moved = belief();
            moved.mean.x += t.x;
            moved.mean.y += t.y;
            let zs2: Vec<Point> = zs.iter().map(|z| z + t).collect();
            let a = nn_step(&belief(), &zs, &sys(), &GateConfig::default()).unwrap();
            let b = nn_step(&moved, &zs2, &sys(), &GateConfig::default()).unwrap();
            prop_assert!((b.mean.x - a.mean.x - t.x).abs() < 1e-6);
            prop_assert!((b.mean.y - a.mean.y - t.y).abs() < 1e-6);
        }
    }
}
