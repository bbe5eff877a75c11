//! External clustering scores: permutation-matched accuracy and NMI.
//!
//! NMI is normalized by the arithmetic mean of the two label entropies.

use crate::error::{Error, Result};

/// Predicted and true labels with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub predicted: Vec<usize>,
    pub truth: Vec<usize>,
    pub accuracy: f64,
    pub nmi: f64,
}

impl ClusterReport {
    pub fn new(predicted: Vec<usize>, truth: Vec<usize>) -> Result<Self> {
        let accuracy = clustering_accuracy(&predicted, &truth)?;
        let nmi = nmi(&predicted, &truth)?;
        Ok(ClusterReport {
            predicted,
            truth,
            accuracy,
            nmi,
        })
    }
}

/// Dense re-indexing of arbitrary label ids, in sorted id order.
fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let dense = labels
        .iter()
        .map(|l| ids.binary_search(l).expect("id present"))
        .collect();
    (dense, ids.len())
}

/// `table[i][j]` counts nodes with predicted cluster i and true class j.
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_lengths(pred, truth)?;
    let (p, kp) = densify(pred);
    let (t, kt) = densify(truth);
    let mut table = vec![vec![0usize; kt]; kp];
    for (&a, &b) in p.iter().zip(&t) {
        table[a][b] += 1;
    }
    Ok(table)
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted labels vs {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidParam("label vectors are empty".into()));
    }
    Ok(())
}

/// Minimum-cost perfect matching on a square matrix (Kuhn-Munkres with
/// potentials). Returns `row -> column`.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    const INF: i64 = i64::MAX / 4;
    // 1-based internals; column 0 is a virtual start
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut match_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        match_col[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if match_col[j] > 0 {
            assignment[match_col[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Largest number of nodes matched by any injective cluster -> class map.
pub fn best_matching_count(pred: &[usize], truth: &[usize]) -> Result<usize> {
    let table = contingency(pred, truth)?;
    let size = table.len().max(table[0].len());
    let max = pred.len() as i64;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let c = table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0);
                    max - c as i64
                })
                .collect()
        })
        .collect();
    let assignment = hungarian_min(&cost);
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0))
        .sum())
}

/// Fraction of nodes correctly clustered under the best injective mapping
/// of cluster ids onto class ids. Surplus clusters match nothing.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(best_matching_count(pred, truth)? as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(pred; truth) / ((H(pred) + H(truth)) / 2)`; 1 when both labelings are
/// constant, 0 when they share no information.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let h_pred = entropy(rows.iter().copied(), n);
    let h_truth = entropy(cols.iter().copied(), n);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    if mi <= 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_swapped() {
        let t = [0, 0, 1, 1, 1];
        assert_eq!(clustering_accuracy(&t, &t).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[1, 1, 0, 0, 0], &t).unwrap(), 1.0);
        assert_eq!(nmi(&t, &t).unwrap(), 1.0);
        assert!((nmi(&[5, 5, 2, 2, 2], &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thirty_two_of_thirty_four() {
        let truth: Vec<usize> = (0..34).map(|i| usize::from(i >= 17)).collect();
        let mut pred: Vec<usize> = truth.iter().map(|&l| 1 - l).collect();
        pred[0] = 1 - pred[0];
        pred[20] = 1 - pred[20];
        let acc = clustering_accuracy(&pred, &truth).unwrap();
        assert_eq!(acc, 32.0 / 34.0);
        assert_eq!(format!("{acc:.4}"), "0.9412");
    }

    #[test]
    fn independent_labelings() {
        assert_eq!(nmi(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_nmi() {
        // truth [0,0,1,1], pred [0,0,1,0]: contingency [[2,1],[0,1]]
        // I = 1/2 ln(4/3) + 1/4 ln(2/3) + 1/4 ln 2; H(t) = ln 2;
        // H(p) = -(3/4) ln(3/4) - (1/4) ln(1/4)
        let ln = f64::ln;
        let mi = 0.5 * ln(4.0 / 3.0) + 0.25 * ln(2.0 / 3.0) + 0.25 * ln(2.0);
        let hp = -0.75 * ln(0.75) - 0.25 * ln(0.25);
        let expected = mi / ((hp + ln(2.0)) / 2.0);
        let got = nmi(&[0, 0, 1, 0], &[0, 0, 1, 1]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.343_711_018_485_450_8).abs() < 1e-12, "{got}");
    }

    #[test]
    fn constant_labelings() {
        assert_eq!(nmi(&[3, 3, 3], &[0, 0, 0]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 0]).unwrap(), 0.0);
        assert_eq!(clustering_accuracy(&[0, 0, 0], &[0, 1, 0]).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn surplus_clusters_match_nothing() {
        // three clusters, two classes: best injective map covers two clusters
        let acc = clustering_accuracy(&[0, 1, 2, 2], &[0, 0, 1, 1]).unwrap();
        assert_eq!(acc, 0.75);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(clustering_accuracy(&[0], &[0, 1]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(nmi(&[0, 1], &[0]), Err(Error::DimensionMismatch(_))));
        assert!(nmi(&[], &[]).is_err());
    }

    #[test]
    fn report_bundles_scores() {
        let r = ClusterReport::new(vec![1, 1, 0], vec![0, 0, 1]).unwrap();
        assert_eq!((r.accuracy, r.nmi), (1.0, 1.0));
    }
}
