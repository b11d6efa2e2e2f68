//! External clustering evaluation: confusion matrix, accuracy under optimal
//! label matching, normalized mutual information, and the adjusted Rand
//! index.

use ndarray::Array2;

use crate::{Error, Result};

/// Contingency table of two labelings. Rows follow the sorted distinct true
/// labels, columns the sorted distinct predicted labels.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    pub counts: Array2<u64>,
    pub true_values: Vec<usize>,
    pub pred_values: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row-normalized percentages; every row sums to 100.
    pub fn row_percentages(&self) -> Array2<f64> {
        let (rows, cols) = self.counts.dim();
        let mut out = Array2::zeros((rows, cols));
        for r in 0..rows {
            let total: u64 = (0..cols).map(|c| self.counts[[r, c]]).sum();
            if total > 0 {
                for c in 0..cols {
                    out[[r, c]] = 100.0 * self.counts[[r, c]] as f64 / total as f64;
                }
            }
        }
        out
    }
}

fn check_lengths(truth: &[usize], pred: &[usize]) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::Data(format!(
            "label lengths differ: {} vs {}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Data("empty label vectors".into()));
    }
    Ok(())
}

fn distinct_sorted(labels: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn confusion(truth: &[usize], pred: &[usize]) -> Result<ConfusionMatrix> {
    check_lengths(truth, pred)?;
    let true_values = distinct_sorted(truth);
    let pred_values = distinct_sorted(pred);
    let row_of = |l: usize| true_values.binary_search(&l).unwrap();
    let col_of = |l: usize| pred_values.binary_search(&l).unwrap();
    let mut counts = Array2::zeros((true_values.len(), pred_values.len()));
    for (&t, &p) in truth.iter().zip(pred.iter()) {
        counts[[row_of(t), col_of(p)]] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        true_values,
        pred_values,
    })
}

// Min-cost assignment on a square cost matrix via shortest augmenting paths
// with dual potentials (Jonker-Volgenant style). Returns, for each column,
// the assigned row.
fn assign_min_cost(cost: &Array2<i64>) -> Vec<usize> {
    let n = cost.nrows();
    debug_assert_eq!(n, cost.ncols());
    const INF: i64 = i64::MAX / 4;
    // 1-based internals, standard formulation
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| row_of_col[j] - 1).collect()
}

/// Clustering accuracy: the best fraction of agreeing points over all
/// injective matchings of predicted to true labels, found by optimal
/// assignment on the negated confusion matrix (rectangular tables are padded
/// square with zeros).
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let cm = confusion(truth, pred)?;
    let (rows, cols) = cm.counts.dim();
    let side = rows.max(cols);
    let mut cost = Array2::zeros((side, side));
    for r in 0..side {
        for c in 0..side {
            let count = if r < rows && c < cols {
                cm.counts[[r, c]] as i64
            } else {
                0
            };
            cost[[r, c]] = -count;
        }
    }
    let assignment = assign_min_cost(&cost);
    let mut matched = 0u64;
    for (col, &row) in assignment.iter().enumerate() {
        if row < rows && col < cols {
            matched += cm.counts[[row, col]];
        }
    }
    Ok(matched as f64 / truth.len() as f64)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

// Same grouping regardless of the label values used.
fn partitions_equal(a: &[usize], b: &[usize]) -> bool {
    let canonical = |labels: &[usize]| -> Vec<usize> {
        let mut map = std::collections::BTreeMap::new();
        labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect()
    };
    canonical(a) == canonical(b)
}

/// Normalized mutual information with natural-log entropies and geometric
/// mean normalization: `I(U;V) / sqrt(H(U) H(V))`.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let cm = confusion(truth, pred)?;
    let n = truth.len() as f64;
    let (rows, cols) = cm.counts.dim();
    let row_sums: Vec<u64> = (0..rows)
        .map(|r| (0..cols).map(|c| cm.counts[[r, c]]).sum())
        .collect();
    let col_sums: Vec<u64> = (0..cols)
        .map(|c| (0..rows).map(|r| cm.counts[[r, c]]).sum())
        .collect();
    let h_u = entropy(&row_sums, n);
    let h_v = entropy(&col_sums, n);

    if h_u == 0.0 && h_v == 0.0 {
        // both single-cluster, hence the same partition
        return Ok(1.0);
    }
    if h_u == 0.0 || h_v == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let joint = cm.counts[[r, c]];
            if joint > 0 {
                let p = joint as f64 / n;
                mi += p * ((n * joint as f64) / (row_sums[r] as f64 * col_sums[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_u * h_v).sqrt()).clamp(0.0, 1.0))
}

fn pairs(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        n as f64 * (n - 1) as f64 / 2.0
    }
}

/// Adjusted Rand index under the permutation model. The degenerate
/// zero-denominator cases (both partitions all-singleton or single-cluster)
/// resolve to 1.0 when the partitions are equal and 0.0 otherwise.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let cm = confusion(truth, pred)?;
    let n = truth.len() as u64;
    let (rows, cols) = cm.counts.dim();
    let row_sums: Vec<u64> = (0..rows)
        .map(|r| (0..cols).map(|c| cm.counts[[r, c]]).sum())
        .collect();
    let col_sums: Vec<u64> = (0..cols)
        .map(|c| (0..rows).map(|r| cm.counts[[r, c]]).sum())
        .collect();

    let index: f64 = cm.counts.iter().map(|&c| pairs(c)).sum();
    let sum_a: f64 = row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: f64 = col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return Ok(if partitions_equal(truth, pred) { 1.0 } else { 0.0 });
    }
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < f64::EPSILON * total {
        return Ok(if partitions_equal(truth, pred) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max_index - expected))
}

/// ACC / NMI / ARI in one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        accuracy: accuracy(truth, pred)?,
        nmi: nmi(truth, pred)?,
        ari: ari(truth, pred)?,
    })
}

impl MetricsReport {
    /// Tabular form with percentages to two decimals.
    pub fn to_text(&self) -> String {
        format!(
            "ACC,NMI,ARI\n{:.2},{:.2},{:.2}\n",
            100.0 * self.accuracy,
            100.0 * self.nmi,
            100.0 * self.ari
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn confusion_identical_is_diagonal() {
        let labels = vec![0, 1, 2, 0, 1, 2];
        let cm = confusion(&labels, &labels).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(cm.counts[[r, c]], if r == c { 2 } else { 0 });
            }
        }
        assert_eq!(cm.total(), 6);
    }

    #[test]
    fn confusion_disjoint_labelings_all_ones() {
        let cm = confusion(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(cm.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn confusion_row_percentages_sum_100() {
        let cm = confusion(&[0, 0, 0, 1, 1], &[0, 1, 1, 0, 0]).unwrap();
        let pct = cm.row_percentages();
        for r in 0..2 {
            let sum: f64 = (0..2).map(|c| pct[[r, c]]).sum();
            assert_relative_eq!(sum, 100.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        // permutation invariance
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // independent halves
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_rectangular_padding() {
        // more predicted clusters than true ones
        let truth = vec![0, 0, 0, 1, 1, 1];
        let pred = vec![0, 0, 1, 2, 2, 2];
        // best matching: pred 0 -> true 0 (2), pred 2 -> true 1 (3)
        assert_relative_eq!(accuracy(&truth, &pred).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn nmi_examples() {
        assert_eq!(nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);

        // hand evaluation for [0,0,1,1,2,2] vs [0,0,1,1,1,1]
        let truth = [0, 0, 1, 1, 2, 2];
        let pred = [0, 0, 1, 1, 1, 1];
        let h_u = 3.0 * (-(1.0 / 3.0f64) * (1.0 / 3.0f64).ln());
        let h_v = -(1.0 / 3.0f64) * (1.0 / 3.0f64).ln() - (2.0 / 3.0f64) * (2.0 / 3.0f64).ln();
        let mi = (1.0 / 3.0) * (3.0f64).ln() + 2.0 * (1.0 / 3.0) * (1.5f64).ln();
        let expected = mi / (h_u * h_v).sqrt();
        assert_relative_eq!(nmi(&truth, &pred).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn nmi_single_cluster_edge_cases() {
        assert_eq!(nmi(&[0, 0, 0], &[5, 5, 5]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_relative_eq!(ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), -0.5);
    }

    #[test]
    fn ari_degenerate_cases() {
        // both single-cluster
        assert_eq!(ari(&[0, 0, 0], &[7, 7, 7]).unwrap(), 1.0);
        // both all-singletons
        assert_eq!(ari(&[0, 1, 2], &[5, 3, 1]).unwrap(), 1.0);
        // single-cluster vs all-singletons
        assert_eq!(ari(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn metrics_symmetric_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<usize> = (0..40).map(|_| rng.random_range(0..4)).collect();
        let pred: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
        assert_relative_eq!(
            nmi(&truth, &pred).unwrap(),
            nmi(&pred, &truth).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            ari(&truth, &pred).unwrap(),
            ari(&pred, &truth).unwrap(),
            epsilon = 1e-12
        );

        // relabel predicted clusters by a permutation
        let perm = [2usize, 0, 1];
        let relabeled: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        assert_relative_eq!(
            accuracy(&truth, &pred).unwrap(),
            accuracy(&truth, &relabeled).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            nmi(&truth, &pred).unwrap(),
            nmi(&truth, &relabeled).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            ari(&truth, &pred).unwrap(),
            ari(&truth, &relabeled).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(accuracy(&[0, 1], &[0]).is_err());
        assert!(nmi(&[0], &[0, 1]).is_err());
        assert!(ari(&[], &[]).is_err());
    }
}
