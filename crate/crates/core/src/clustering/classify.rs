use nalgebra::Matrix2;

use crate::dp::{BaseMeasure, CrpPartition};
use crate::tracker::ObsModel;
use crate::types::{Gaussian2, Origin, Point, State};
use crate::{Error, Result};

/// Target/clutter split of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPartitionResult {
    pub labels: Vec<Origin>,
    pub cluster_assignments: CrpPartition,
    /// Index into `cluster_assignments` of the target cluster, if any.
    pub target_cluster: Option<usize>,
    pub m_t: usize,
    pub m_c: usize,
    /// Filled in by the tracker step; zero until then.
    pub log_likelihood_ratio: f64,
}

impl ScanPartitionResult {
    pub fn empty() -> Self {
        ScanPartitionResult {
            labels: Vec::new(),
            cluster_assignments: CrpPartition::empty(),
            target_cluster: None,
            m_t: 0,
            m_c: 0,
            log_likelihood_ratio: 0.0,
        }
    }

    pub fn target_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Origin::Target)
            .map(|(i, _)| i)
    }

    pub fn clutter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Origin::Clutter)
            .map(|(i, _)| i)
    }

    /// Relabels the target cluster as clutter (scan judged to be a missed detection).
    pub fn demote_target(&mut self) {
        self.labels.iter_mut().for_each(|l| *l = Origin::Clutter);
        self.target_cluster = None;
        self.m_c += self.m_t;
        self.m_t = 0;
    }
}

/// Labels as target the cluster whose centroid is most probable under
/// `N(predicted_meas, innovation_cov)`; every other cluster is clutter.
/// Ties go to the larger cluster, then to the lower cluster index.
pub fn classify_clusters(
    partition: &CrpPartition,
    points: &[Point],
    predicted_meas: &Point,
    innovation_cov: &Matrix2<f64>,
) -> Result<ScanPartitionResult> {
    partition.validate()?;
    if partition.num_items() != points.len() {
        return Err(Error::Invariant(format!(
            "partition covers {} items but scan has {}",
            partition.num_items(),
            points.len()
        )));
    }
    if points.is_empty() {
        return Ok(ScanPartitionResult::empty());
    }
    let pred = Gaussian2::new(*predicted_meas, *innovation_cov)?;

    let mut best: Option<(f64, usize, usize)> = None; // (d², size, index)
    for (k, members) in partition.members().iter().enumerate() {
        let centroid = members.iter().map(|&i| points[i]).sum::<Point>() / members.len() as f64;
        let d2 = pred.mahalanobis2(&centroid);
        let size = members.len();
        let better = match best {
            None => true,
            Some((bd2, bsize, _)) => {
                let tol = 1e-12 * bd2.abs().max(d2.abs()).max(1.0);
                if (d2 - bd2).abs() <= tol {
                    size > bsize
                } else {
                    d2 < bd2
                }
            }
        };
        if better {
            best = Some((d2, size, k));
        }
    }
    let (_, _, target) = best.expect("nonempty partition");
    let labels: Vec<Origin> = partition
        .assignments
        .iter()
        .map(|&a| if a == target { Origin::Target } else { Origin::Clutter })
        .collect();
    let m_t = partition.cluster_sizes[target];
    Ok(ScanPartitionResult {
        labels,
        cluster_assignments: partition.clone(),
        target_cluster: Some(target),
        m_t,
        m_c: points.len() - m_t,
        log_likelihood_ratio: 0.0,
    })
}

/// `ln L = Σ_{z∈Z_t} ln N(z; H x, Q) − Σ_{z∈Z_c} ln p_c(z)`.
///
/// `p_c` is the density of `clutter`. A clutter-labelled point where that
/// density vanishes makes the ratio `+∞`; callers treat that as a diagnostic
/// rather than an error.
pub fn likelihood_ratio(
    result: &ScanPartitionResult,
    points: &[Point],
    state: &State,
    obs: &ObsModel,
    clutter: &BaseMeasure,
) -> Result<f64> {
    if result.labels.len() != points.len() {
        return Err(Error::Invariant("labels and scan differ in length".into()));
    }
    let target_lik = Gaussian2::new(obs.predict_measurement(state), obs.noise_cov)?;
    let num: f64 = result
        .target_indices()
        .map(|i| target_lik.log_pdf(&points[i]))
        .sum();
    let mut den = 0.0;
    for i in result.clutter_indices() {
        let d = clutter.density(&points[i]);
        if d <= 0.0 {
            return Ok(f64::INFINITY);
        }
        den += d.ln();
    }
    Ok(num - den)
}
