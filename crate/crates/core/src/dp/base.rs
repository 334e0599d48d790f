//! Base measures for Dirichlet processes over 2-D parameter points.

use rand::Rng;

use crate::types::{Gaussian2, Point, Rect};
use crate::{Error, Result};

/// A (possibly unnormalized) measure on the plane.
///
/// `sample` always draws from the normalized measure. `density` is the
/// Lebesgue density of the absolutely continuous part; point masses are
/// reported separately through [`BaseMeasure::atom_mass`].
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMeasure {
    Uniform(Rect),
    Gaussian(Gaussian2),
    PointMass(Point),
    Mixture(Mixture),
}

/// `weight · base + Σ w_i δ_{atom_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    base_weight: f64,
    base: Box<BaseMeasure>,
    atoms: Vec<Point>,
    atom_weights: Vec<f64>,
}

impl Mixture {
    pub fn new(
        base_weight: f64,
        base: BaseMeasure,
        atoms: Vec<Point>,
        atom_weights: Vec<f64>,
    ) -> Result<Self> {
        if atoms.len() != atom_weights.len() {
            return Err(Error::param("mixture atoms and weights differ in length"));
        }
        if !(base_weight.is_finite() && base_weight >= 0.0)
            || atom_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::param("mixture weights must be finite and nonnegative"));
        }
        let m = Mixture {
            base_weight,
            base: Box::new(base),
            atoms,
            atom_weights,
        };
        if m.total_mass() <= 0.0 {
            return Err(Error::param("mixture has zero total mass"));
        }
        Ok(m)
    }

    pub fn base_weight(&self) -> f64 {
        self.base_weight
    }

    pub fn base(&self) -> &BaseMeasure {
        &self.base
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn atom_weights(&self) -> &[f64] {
        &self.atom_weights
    }

    pub fn total_mass(&self) -> f64 {
        self.base_weight * self.base.total_mass() + self.atom_weights.iter().sum::<f64>()
    }

    /// Every component scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Mixture> {
        Mixture::new(
            self.base_weight * factor,
            (*self.base).clone(),
            self.atoms.clone(),
            self.atom_weights.iter().map(|w| w * factor).collect(),
        )
    }
}

impl BaseMeasure {
    /// Builds `weight · base + Σ w_i δ_{atom_i}`, flattening when `base` is
    /// itself a mixture so nested posteriors stay one level deep.
    pub fn mixture(
        base_weight: f64,
        base: BaseMeasure,
        atoms: Vec<Point>,
        atom_weights: Vec<f64>,
    ) -> Result<BaseMeasure> {
        match base {
            BaseMeasure::Mixture(inner) => {
                let mut all_atoms = inner.atoms.clone();
                let mut all_weights: Vec<f64> =
                    inner.atom_weights.iter().map(|w| w * base_weight).collect();
                all_atoms.extend(atoms);
                all_weights.extend(atom_weights);
                Ok(BaseMeasure::Mixture(Mixture::new(
                    inner.base_weight * base_weight,
                    *inner.base,
                    all_atoms,
                    all_weights,
                )?))
            }
            other => Ok(BaseMeasure::Mixture(Mixture::new(
                base_weight,
                other,
                atoms,
                atom_weights,
            )?)),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            BaseMeasure::Mixture(m) => m.total_mass(),
            _ => 1.0,
        }
    }

    /// Draws one point from the normalized measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            BaseMeasure::Uniform(r) => r.sample(rng),
            BaseMeasure::Gaussian(g) => g.sample(rng),
            BaseMeasure::PointMass(p) => *p,
            BaseMeasure::Mixture(m) => {
                let total = m.total_mass();
                let mut u = rng.random::<f64>() * total;
                let base_mass = m.base_weight * m.base.total_mass();
                if u < base_mass {
                    return m.base.sample(rng);
                }
                u -= base_mass;
                for (atom, w) in m.atoms.iter().zip(&m.atom_weights) {
                    if u < *w {
                        return *atom;
                    }
                    u -= w;
                }
                // Rounding pushed u past the last atom.
                match m.atoms.iter().zip(&m.atom_weights).rev().find(|(_, w)| **w > 0.0) {
                    Some((atom, _)) => *atom,
                    None => m.base.sample(rng),
                }
            }
        }
    }

    /// Lebesgue density of the continuous part (unnormalized for mixtures).
    pub fn density(&self, p: &Point) -> f64 {
        match self {
            BaseMeasure::Uniform(r) => {
                if r.contains(p) {
                    1.0 / r.area()
                } else {
                    0.0
                }
            }
            BaseMeasure::Gaussian(g) => g.pdf(p),
            BaseMeasure::PointMass(_) => 0.0,
            BaseMeasure::Mixture(m) => m.base_weight * m.base.density(p),
        }
    }

    /// Mass carried by a point mass located exactly at `p`.
    pub fn atom_mass(&self, p: &Point) -> f64 {
        match self {
            BaseMeasure::PointMass(q) => {
                if q == p {
                    1.0
                } else {
                    0.0
                }
            }
            BaseMeasure::Mixture(m) => {
                m.base_weight * m.base.atom_mass(p)
                    + m.atoms
                        .iter()
                        .zip(&m.atom_weights)
                        .filter(|(a, _)| *a == p)
                        .map(|(_, w)| w)
                        .sum::<f64>()
            }
            _ => 0.0,
        }
    }

    /// Whether `p` lies in the support of the measure.
    pub fn support_contains(&self, p: &Point) -> bool {
        match self {
            BaseMeasure::Uniform(r) => r.contains(p),
            BaseMeasure::Gaussian(_) => p.iter().all(|v| v.is_finite()),
            BaseMeasure::PointMass(q) => q == p,
            BaseMeasure::Mixture(m) => {
                (m.base_weight > 0.0 && m.base.support_contains(p))
                    || m
                        .atoms
                        .iter()
                        .zip(&m.atom_weights)
                        .any(|(a, w)| *w > 0.0 && a == p)
            }
        }
    }
}
