use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Hard assignment of `n` vertices to `k` clusters.
///
/// Labels produced by the clustering routines are canonical: clusters are
/// numbered in order of first appearance, so two runs that find the same
/// partition report the same label vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

impl Clustering {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("cluster count must be at least 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Config(format!("label {bad} is not below k = {k}")));
        }
        Ok(Self { labels, k })
    }

    /// Renumbers clusters by first appearance.
    pub fn canonical(labels: &[usize], k: usize) -> Result<Self> {
        let mut map = vec![usize::MAX; labels.iter().copied().max().map_or(0, |m| m + 1)];
        let mut next = 0;
        let relabeled = labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Self::new(relabeled, k.max(next))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Whether both clusterings induce the same partition of the vertices.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.len() == other.len()
            && Clustering::canonical(&self.labels, self.k).map(|c| c.labels)
                == Clustering::canonical(&other.labels, other.k).map(|c| c.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_relabeling() {
        let c = Clustering::canonical(&[2, 2, 0, 1, 0], 3).unwrap();
        assert_eq!(c.labels(), &[0, 0, 1, 2, 1]);
        assert!(c.same_partition(&Clustering::new(vec![1, 1, 0, 2, 0], 3).unwrap()));
        assert!(!c.same_partition(&Clustering::new(vec![1, 0, 0, 2, 0], 3).unwrap()));
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(Clustering::new(vec![0, 3], 3).is_err());
        assert!(Clustering::new(vec![], 0).is_err());
    }
}
