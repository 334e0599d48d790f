//! Truncated stick-breaking (GEM) weights.

use rand::Rng;

use crate::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 200;
pub const TAIL_TOLERANCE: f64 = 1e-8;
pub const MAX_BREAKS: usize = 100_000;

/// Stick-breaking weights `π_1..π_K` plus the unbroken remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights {
    pub weights: Vec<f64>,
    pub tail_mass: f64,
}

impl StickWeights {
    /// Weights implied by break fractions `v_1..v_K`:
    /// `π_k = v_k ∏_{j<k} (1 - v_j)`, tail `∏_k (1 - v_k)`.
    pub fn from_breaks(breaks: &[f64]) -> Result<Self> {
        let mut sticks = StickWeights {
            weights: Vec::with_capacity(breaks.len()),
            tail_mass: 1.0,
        };
        for &v in breaks {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("break fraction {v} outside [0, 1]")));
            }
            sticks.push_break(v);
        }
        Ok(sticks)
    }

    fn push_break(&mut self, v: f64) {
        self.weights.push(v * self.tail_mass);
        self.tail_mass *= 1.0 - v;
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ π_k + tail`; equals 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.tail_mass
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param(format!("concentration must be positive, got {alpha}")));
    }
    Ok(())
}

/// One `Beta(1, α)` draw by inversion: `1 - U^{1/α}`.
fn beta_1_alpha<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>().powf(1.0 / alpha)
}

/// Exactly `truncation` breaks.
pub fn sample_stick_breaking<R: Rng + ?Sized>(
    alpha: f64,
    truncation: usize,
    rng: &mut R,
) -> Result<StickWeights> {
    check_alpha(alpha)?;
    if truncation == 0 {
        return Err(Error::param("truncation must be at least 1"));
    }
    let mut sticks = StickWeights {
        weights: Vec::with_capacity(truncation),
        tail_mass: 1.0,
    };
    for _ in 0..truncation {
        sticks.push_break(beta_1_alpha(alpha, rng));
    }
    Ok(sticks)
}

/// At least `min_truncation` breaks, then keeps breaking until the tail is
/// below `tail_tol` or `max_breaks` is reached.
pub fn sample_stick_breaking_to_tolerance<R: Rng + ?Sized>(
    alpha: f64,
    min_truncation: usize,
    tail_tol: f64,
    max_breaks: usize,
    rng: &mut R,
) -> Result<StickWeights> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::param(format!("tail tolerance {tail_tol} outside (0, 1)")));
    }
    let mut sticks = sample_stick_breaking(alpha, min_truncation, rng)?;
    while sticks.tail_mass >= tail_tol && sticks.len() < max_breaks {
        sticks.push_break(beta_1_alpha(alpha, rng));
    }
    if sticks.tail_mass >= tail_tol {
        log::warn!(
            "stick-breaking stopped at {} breaks with tail {:.3e} (alpha = {alpha})",
            sticks.len(),
            sticks.tail_mass
        );
    }
    Ok(sticks)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn single_break() {
        let s = StickWeights::from_breaks(&[0.3]).unwrap();
        assert_eq!(s.weights, vec![0.3]);
        assert!((s.tail_mass - 0.7).abs() < 1e-15);
    }

    #[test]
    fn breaks_outside_unit_interval_rejected() {
        assert!(StickWeights::from_breaks(&[1.5]).is_err());
        assert!(StickWeights::from_breaks(&[-0.1]).is_err());
    }

    #[test]
    fn invalid_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_stick_breaking(0.0, 10, &mut rng).is_err());
        assert!(sample_stick_breaking(-1.0, 10, &mut rng).is_err());
        assert!(sample_stick_breaking(f64::NAN, 10, &mut rng).is_err());
        assert!(sample_stick_breaking(1.0, 0, &mut rng).is_err());
    }

    #[test]
    fn telescopes_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = sample_stick_breaking(1.0, 200, &mut rng).unwrap();
            assert_eq!(s.len(), 200);
            assert!((s.total() - 1.0).abs() < 1e-12);
            assert!(s.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        }
    }

    #[test]
    fn first_weight_mean() {
        // E[π_1] = E[Beta(1, α)] = 1 / (1 + α)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_stick_breaking(1.0, 200, &mut rng).unwrap().weights[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean π_1 = {mean}");
    }

    #[test]
    fn expected_weights_decay_geometrically() {
        // E[π_k] = α^{k-1} / (1+α)^k; check k ≤ 5 within 3 standard errors.
        let alpha = 2.0;
        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<StickWeights> = (0..n)
            .map(|_| sample_stick_breaking(alpha, 5, &mut rng).unwrap())
            .collect();
        for k in 0..5 {
            let xs: Vec<f64> = draws.iter().map(|d| d.weights[k]).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let expected = alpha.powi(k as i32) / (1.0 + alpha).powi(k as i32 + 1);
            assert!(
                (mean - expected).abs() < 3.0 * se,
                "k={k}: mean {mean} expected {expected} se {se}"
            );
        }
    }

    #[test]
    fn tolerance_variant_extends_stick() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [0.5, 1.0, 5.0, 20.0] {
            let s = sample_stick_breaking_to_tolerance(alpha, 1, TAIL_TOLERANCE, MAX_BREAKS, &mut rng)
                .unwrap();
            assert!(s.tail_mass < TAIL_TOLERANCE);
            assert!((s.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tolerance_variant_respects_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_stick_breaking_to_tolerance(1e4, 1, TAIL_TOLERANCE, 50, &mut rng).unwrap();
        assert_eq!(s.len(), 50);
        assert!(s.tail_mass > TAIL_TOLERANCE);
    }
}
