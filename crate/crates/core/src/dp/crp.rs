//! Chinese restaurant process partitions and the DP predictive rule.

use rand::Rng;

use crate::{Error, Result};

/// A partition of `num_items` items into clusters `0..cluster_sizes.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CrpPartition {
    pub assignments: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
}

impl CrpPartition {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a partition from cluster labels, which must use every index
    /// in `0..K` at least once.
    pub fn from_assignments(assignments: Vec<usize>) -> Result<Self> {
        let k = assignments.iter().map(|&a| a + 1).max().unwrap_or(0);
        let mut sizes = vec![0; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        let p = CrpPartition {
            assignments,
            cluster_sizes: sizes,
        };
        p.validate()?;
        Ok(p)
    }

    /// Partition with clusters numbered in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut assignments = Vec::with_capacity(labels.len());
        let mut sizes = Vec::new();
        for &l in labels {
            let idx = match map.iter().find(|(from, _)| *from == l) {
                Some(&(_, to)) => to,
                None => {
                    map.push((l, sizes.len()));
                    sizes.push(0);
                    sizes.len() - 1
                }
            };
            sizes[idx] += 1;
            assignments.push(idx);
        }
        CrpPartition {
            assignments,
            cluster_sizes: sizes,
        }
    }

    pub fn num_items(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cluster_sizes.len();
        if let Some(bad) = self.assignments.iter().find(|&&a| a >= k) {
            return Err(Error::Invariant(format!(
                "assignment {bad} out of range for {k} clusters"
            )));
        }
        if self.cluster_sizes.iter().sum::<usize>() != self.assignments.len() {
            return Err(Error::Invariant("cluster sizes do not sum to item count".into()));
        }
        let mut counts = vec![0; k];
        for &a in &self.assignments {
            counts[a] += 1;
        }
        if counts != self.cluster_sizes {
            return Err(Error::Invariant("cluster sizes disagree with assignments".into()));
        }
        if self.cluster_sizes.contains(&0) {
            return Err(Error::Invariant("empty cluster".into()));
        }
        Ok(())
    }

    /// Same partition, clusters renumbered by first appearance.
    pub fn canonical(&self) -> Self {
        Self::from_labels(&self.assignments)
    }

    /// Item indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &a) in self.assignments.iter().enumerate() {
            out[a].push(i);
        }
        out
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param(format!("concentration must be positive, got {alpha}")));
    }
    Ok(())
}

/// `[n_1/(α+N), …, n_K/(α+N), α/(α+N)]`: join each existing cluster, or open a new one.
pub fn predictive_probabilities(alpha: f64, partition: &CrpPartition) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    partition.validate()?;
    let denom = alpha + partition.num_items() as f64;
    let mut probs: Vec<f64> = partition
        .cluster_sizes
        .iter()
        .map(|&n| n as f64 / denom)
        .collect();
    probs.push(alpha / denom);
    Ok(probs)
}

/// Sequential CRP draw over `n_items` items.
pub fn sample_crp_partition<R: Rng + ?Sized>(
    alpha: f64,
    n_items: usize,
    rng: &mut R,
) -> Result<CrpPartition> {
    check_alpha(alpha)?;
    if n_items == 0 {
        return Err(Error::param("n_items must be at least 1"));
    }
    let mut p = CrpPartition {
        assignments: Vec::with_capacity(n_items),
        cluster_sizes: Vec::new(),
    };
    for i in 0..n_items {
        let mut u = rng.random::<f64>() * (alpha + i as f64);
        let mut chosen = p.cluster_sizes.len();
        for (k, &n) in p.cluster_sizes.iter().enumerate() {
            if u < n as f64 {
                chosen = k;
                break;
            }
            u -= n as f64;
        }
        if chosen == p.cluster_sizes.len() {
            p.cluster_sizes.push(0);
        }
        p.cluster_sizes[chosen] += 1;
        p.assignments.push(chosen);
    }
    Ok(p)
}

/// Log probability of a partition under CRP(α):
/// `K ln α + ln Γ(α) − ln Γ(α+N) + Σ ln (n_k − 1)!`.
pub fn crp_log_prob(alpha: f64, partition: &CrpPartition) -> f64 {
    let n = partition.num_items();
    let rising: f64 = (0..n).map(|i| (alpha + i as f64).ln()).sum();
    let factorials: f64 = partition
        .cluster_sizes
        .iter()
        .map(|&s| (1..s).map(|j| (j as f64).ln()).sum::<f64>())
        .sum();
    partition.num_clusters() as f64 * alpha.ln() + factorials - rising
}

/// Exact `E[K_N] = Σ_{i=1}^{N} α / (α + i − 1)`.
///
/// For large `N` this behaves like `α ln N` (see
/// [`expected_cluster_count_asymptotic`]), which underestimates it for
/// small `N`.
pub fn expected_cluster_count(alpha: f64, n_items: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n_items == 0 {
        return Err(Error::param("n_items must be at least 1"));
    }
    Ok((0..n_items).map(|i| alpha / (alpha + i as f64)).sum())
}

/// The `α ln N` approximation.
pub fn expected_cluster_count_asymptotic(alpha: f64, n_items: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n_items == 0 {
        return Err(Error::param("n_items must be at least 1"));
    }
    Ok(alpha * (n_items as f64).ln())
}
