//! External clustering quality: purity, normalized mutual information, Rand
//! index and confusion matrices.
//!
//! Entropies use natural logarithms; the base cancels in NMI.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::max_weight_assignment;
use crate::clustering::Clustering;
use crate::error::{Error, Result};

/// Reference class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<usize>,
    num_classes: usize,
}

impl GroundTruth {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Config(format!(
                "class label {bad} is not below the class count {num_classes}"
            )));
        }
        Ok(Self { labels, num_classes })
    }

    /// Class count inferred as `max label + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, num_classes }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Purity, NMI and Rand index of one clustering against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub purity: f64,
    pub nmi: f64,
    pub rand_index: f64,
}

impl MetricReport {
    pub fn compute(pred: &Clustering, truth: &GroundTruth) -> Result<Self> {
        Self::from_labels(pred.labels(), truth.labels())
    }

    pub fn from_labels(pred: &[usize], truth: &[usize]) -> Result<Self> {
        Ok(Self {
            purity: purity(pred, truth)?,
            nmi: nmi(pred, truth)?,
            rand_index: rand_index(pred, truth)?,
        })
    }
}

/// Contingency counts: `table[cluster][class]`.
struct Contingency {
    table: Vec<Vec<usize>>,
    cluster_sizes: Vec<usize>,
    class_sizes: Vec<usize>,
    n: usize,
}

impl Contingency {
    fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
        }
        if pred.is_empty() {
            return Err(Error::Config("cannot score an empty labeling".into()));
        }
        let k = pred.iter().max().map_or(0, |m| m + 1);
        let c = truth.iter().max().map_or(0, |m| m + 1);
        let mut table = vec![vec![0usize; c]; k];
        let mut cluster_sizes = vec![0usize; k];
        let mut class_sizes = vec![0usize; c];
        for (&p, &t) in pred.iter().zip(truth) {
            table[p][t] += 1;
            cluster_sizes[p] += 1;
            class_sizes[t] += 1;
        }
        Ok(Self { table, cluster_sizes, class_sizes, n: pred.len() })
    }
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

fn pairs(m: usize) -> f64 {
    let m = m as f64;
    m * (m - 1.0) / 2.0
}

/// `(1/N) sum_k max_j |cluster_k ∩ class_j|`.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    let hits: usize = ct.table.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / ct.n as f64)
}

/// Mutual information over the mean of the two entropies.
///
/// Two single-block labelings score 1; if exactly one side is a single block
/// the score is 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    let h_pred = entropy(&ct.cluster_sizes, ct.n);
    let h_truth = entropy(&ct.class_sizes, ct.n);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let n = ct.n as f64;
    let mut mi = 0.0;
    for (k, row) in ct.table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                let indep = (ct.cluster_sizes[k] as f64 / n) * (ct.class_sizes[j] as f64 / n);
                mi += joint * libm::log(joint / indep);
            }
        }
    }
    Ok((2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0))
}

/// Fraction of vertex pairs on which both labelings agree about
/// co-membership, `(TP + TN) / (n choose 2)`.
pub fn rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    if ct.n < 2 {
        return Err(Error::Config("the Rand index needs at least two vertices".into()));
    }
    let total = pairs(ct.n);
    let tp: f64 = ct.table.iter().flatten().map(|&c| pairs(c)).sum();
    let same_cluster: f64 = ct.cluster_sizes.iter().map(|&c| pairs(c)).sum();
    let same_class: f64 = ct.class_sizes.iter().map(|&c| pairs(c)).sum();
    let fp = same_cluster - tp;
    let fn_ = same_class - tp;
    let tn = total - tp - fp - fn_;
    Ok((tp + tn) / total)
}

/// Square confusion matrix: rows are classes, columns are clusters, padded
/// to `max(#clusters, #classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
    /// `column_order[c]` is the cluster id shown in column `c`.
    pub column_order: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn diagonal_sum(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, row)| row[i]).sum()
    }
}

/// Confusion matrix; with `matched` the cluster columns are permuted by a
/// maximum-weight assignment so the diagonal sum is as large as possible.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], matched: bool) -> Result<ConfusionMatrix> {
    let ct = Contingency::new(pred, truth)?;
    let size = ct.cluster_sizes.len().max(ct.class_sizes.len());
    let raw: Vec<Vec<usize>> = (0..size)
        .map(|class| {
            (0..size)
                .map(|cluster| ct.table.get(cluster).and_then(|r| r.get(class)).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    let column_order: Vec<usize> = if matched {
        let weights: Vec<Vec<f64>> =
            raw.iter().map(|row| row.iter().map(|&c| c as f64).collect()).collect();
        max_weight_assignment(&weights)
    } else {
        (0..size).collect()
    };
    let counts = raw
        .iter()
        .map(|row| column_order.iter().map(|&c| row[c]).collect())
        .collect();
    Ok(ConfusionMatrix { counts, column_order })
}
