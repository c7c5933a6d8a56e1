//! Seeded multi-layer stochastic block models with planted ground truth.
//!
//! Every layer draws from its own ChaCha8 stream (`seed`, layer index) and
//! visits vertex pairs `i < j` in lexicographic order: one uniform decides
//! whether the edge exists, and weighted modes draw the weight only for
//! present edges. Instances are therefore a pure function of the config.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{LayerGraph, MultiLayerGraph};
use crate::metrics::GroundTruth;
use crate::rng;

/// Edge probabilities of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub p_in: f64,
    pub p_out: f64,
    /// An uninformative layer ignores the blocks and links every pair with
    /// the density the informative version would have on average.
    pub informative: bool,
}

impl LayerSpec {
    pub fn informative(p_in: f64, p_out: f64) -> Self {
        Self { p_in, p_out, informative: true }
    }

    pub fn noise(p_in: f64, p_out: f64) -> Self {
        Self { p_in, p_out, informative: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    Unit,
    /// Zero-truncated Poisson counts: zero draws are redrawn, so every
    /// present edge has a weight of at least 1.
    Poisson { mean: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsbmConfig {
    pub n: usize,
    pub k: usize,
    /// Explicit block sizes; near-equal contiguous blocks when absent.
    pub block_sizes: Option<Vec<usize>>,
    pub layers: Vec<LayerSpec>,
    pub weight_mode: WeightMode,
    pub seed: u64,
}

impl MsbmConfig {
    pub fn new(n: usize, k: usize, layers: Vec<LayerSpec>, seed: u64) -> Self {
        Self { n, k, block_sizes: None, layers, weight_mode: WeightMode::Unit, seed }
    }

    /// Block label of every vertex after validation.
    fn blocks(&self) -> Result<Vec<usize>> {
        if self.k == 0 || self.k > self.n {
            return Err(config(format!("need 1 <= k <= n (k = {}, n = {})", self.k, self.n)));
        }
        let sizes = match &self.block_sizes {
            Some(s) => {
                if s.len() != self.k || s.iter().sum::<usize>() != self.n || s.contains(&0) {
                    return Err(config(format!(
                        "block sizes {s:?} must be {} positive sizes summing to {}",
                        self.k, self.n
                    )));
                }
                s.clone()
            }
            None => near_equal(self.n, self.k),
        };
        if self.layers.is_empty() {
            return Err(config("at least one layer is required".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let in_range = |p: f64| (0.0..=1.0).contains(&p);
            if !in_range(l.p_in) || !in_range(l.p_out) {
                return Err(config(format!("layer {i}: probabilities must lie in [0, 1]")));
            }
            if l.informative && l.p_out > l.p_in {
                return Err(config(format!("layer {i}: p_out exceeds p_in")));
            }
        }
        if let WeightMode::Poisson { mean } = self.weight_mode {
            if !(mean > 0.0 && mean <= 500.0) {
                return Err(config(format!("Poisson mean must lie in (0, 500], got {mean}")));
            }
        }
        Ok(sizes.iter().enumerate().flat_map(|(b, &s)| core::iter::repeat(b).take(s)).collect())
    }
}

fn config(msg: String) -> Error {
    Error::Config(msg)
}

/// `k` contiguous sizes differing by at most one, larger blocks first.
fn near_equal(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|b| n / k + usize::from(b < n % k)).collect()
}

/// Probability of a uniform pair being inside one block.
fn same_block_fraction(blocks: &[usize], k: usize) -> f64 {
    let n = blocks.len();
    let mut sizes = vec![0usize; k];
    for &b in blocks {
        sizes[b] += 1;
    }
    let same: usize = sizes.iter().map(|s| s * s.saturating_sub(1) / 2).sum();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        0.0
    } else {
        same as f64 / pairs as f64
    }
}

fn draw_weight(r: &mut rng::Rng, mode: WeightMode) -> f64 {
    match mode {
        WeightMode::Unit => 1.0,
        WeightMode::Poisson { mean } => loop {
            let w = rng::poisson(r, mean);
            if w > 0 {
                break w as f64;
            }
        },
    }
}

/// Samples one layer; `prob(i, j)` gives the edge probability of pair `i < j`.
fn sample_layer(
    n: usize,
    seed: u64,
    stream: u64,
    mode: WeightMode,
    prob: impl Fn(usize, usize) -> f64,
) -> Result<LayerGraph> {
    let mut r = rng::stream(seed, stream);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng::uniform(&mut r) < prob(i, j) {
                let x = draw_weight(&mut r, mode);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    LayerGraph::new(w)
}

/// Samples every layer of the model.
pub fn generate(cfg: &MsbmConfig) -> Result<(MultiLayerGraph, GroundTruth)> {
    let blocks = cfg.blocks()?;
    let frac = same_block_fraction(&blocks, cfg.k);
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for (idx, spec) in cfg.layers.iter().enumerate() {
        let uniform = frac * spec.p_in + (1.0 - frac) * spec.p_out;
        let layer = sample_layer(cfg.n, cfg.seed, idx as u64, cfg.weight_mode, |i, j| {
            if !spec.informative {
                uniform
            } else if blocks[i] == blocks[j] {
                spec.p_in
            } else {
                spec.p_out
            }
        })?;
        layers.push(layer.with_name(format!("layer{idx}")));
    }
    Ok((MultiLayerGraph::new(layers)?, GroundTruth::new(blocks, cfg.k)?))
}

/// Edge probabilities of [`complementary_pair`]: inside a block, between
/// blocks of the same group, between groups.
pub const COMPLEMENTARY_PROBS: (f64, f64, f64) = (0.25, 0.12, 0.02);

/// Two layers that each see only half of the block structure.
///
/// Blocks are split into two groups in two different ways: the first layer
/// groups blocks `b < k/2` together, the second groups blocks by parity.
/// Within a group the blocks are only weakly distinguished, across groups
/// strongly, so each layer alone separates the groups but blurs the blocks
/// inside them, while the two groupings together pin down every block.
pub fn complementary_pair(n: usize, k: usize, seed: u64) -> Result<(MultiLayerGraph, GroundTruth)> {
    if k < 2 || k % 2 != 0 {
        return Err(config(format!("the complementary pair needs an even k >= 2, got {k}")));
    }
    if n < k {
        return Err(config(format!("need n >= k (n = {n}, k = {k})")));
    }
    let blocks: Vec<usize> =
        near_equal(n, k).iter().enumerate().flat_map(|(b, &s)| core::iter::repeat(b).take(s)).collect();
    let (p_block, p_group, p_other) = COMPLEMENTARY_PROBS;
    let half = k / 2;
    let groupings: [&dyn Fn(usize) -> usize; 2] = [&|b| usize::from(b >= half), &|b| b % 2];
    let mut layers = Vec::with_capacity(2);
    for (idx, group) in groupings.iter().enumerate() {
        let layer = sample_layer(n, seed, idx as u64, WeightMode::Unit, |i, j| {
            let (a, b) = (blocks[i], blocks[j]);
            if a == b {
                p_block
            } else if group(a) == group(b) {
                p_group
            } else {
                p_other
            }
        })?;
        layers.push(layer.with_name(format!("layer{idx}")));
    }
    Ok((MultiLayerGraph::new(layers)?, GroundTruth::new(blocks, k)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities_give_cliques() {
        let cfg = MsbmConfig::new(10, 3, vec![LayerSpec::informative(1.0, 0.0)], 5);
        let (mlg, truth) = generate(&cfg).unwrap();
        assert_eq!(truth.labels(), &[0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let w = mlg.layer(0).weights();
        for i in 0..10 {
            for j in 0..10 {
                let expected = if i != j && truth.labels()[i] == truth.labels()[j] { 1.0 } else { 0.0 };
                assert_eq!(w[(i, j)], expected);
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let mut cfg = MsbmConfig::new(
            40,
            4,
            vec![LayerSpec::informative(0.4, 0.1), LayerSpec::noise(0.4, 0.1)],
            77,
        );
        cfg.weight_mode = WeightMode::Poisson { mean: 2.0 };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 78;
        assert_ne!(generate(&cfg).unwrap().0, generate(&other).unwrap().0);
        assert_eq!(complementary_pair(40, 4, 3).unwrap(), complementary_pair(40, 4, 3).unwrap());
    }

    #[test]
    fn edge_count_within_binomial_band() {
        let cfg = MsbmConfig::new(200, 4, vec![LayerSpec::informative(0.3, 0.05)], 11);
        let (mlg, _) = generate(&cfg).unwrap();
        let same = 4.0 * (50.0 * 49.0 / 2.0);
        let cross = 200.0 * 199.0 / 2.0 - same;
        let mean = same * 0.3 + cross * 0.05;
        let var = same * 0.3 * 0.7 + cross * 0.05 * 0.95;
        let count = mlg.layer(0).edge_count() as f64;
        assert!((count - mean).abs() < 4.0 * var.sqrt(), "{count} vs {mean}");
    }

    #[test]
    fn poisson_weights_are_positive_integers() {
        let mut cfg = MsbmConfig::new(30, 2, vec![LayerSpec::informative(0.5, 0.2)], 1);
        cfg.weight_mode = WeightMode::Poisson { mean: 0.5 };
        let (mlg, _) = generate(&cfg).unwrap();
        let w = mlg.layer(0).weights();
        assert!(w.iter().all(|&x| x == 0.0 || (x >= 1.0 && x.fract() == 0.0)));
        assert!(w.iter().any(|&x| x > 0.0));
    }

    #[test]
    fn noise_layer_ignores_blocks() {
        let cfg = MsbmConfig::new(120, 2, vec![LayerSpec::noise(0.5, 0.0)], 9);
        let (mlg, truth) = generate(&cfg).unwrap();
        let w = mlg.layer(0).weights();
        let (mut same, mut cross) = ((0.0, 0.0), (0.0, 0.0));
        for i in 0..120 {
            for j in (i + 1)..120 {
                let slot = if truth.labels()[i] == truth.labels()[j] { &mut same } else { &mut cross };
                slot.0 += w[(i, j)];
                slot.1 += 1.0;
            }
        }
        let (ds, dc) = (same.0 / same.1, cross.0 / cross.1);
        // Expected density: (59/119) * 0.5 for both kinds of pair.
        assert!((ds - dc).abs() < 0.05, "{ds} vs {dc}");
    }

    #[test]
    fn explicit_block_sizes() {
        let mut cfg = MsbmConfig::new(6, 2, vec![LayerSpec::informative(1.0, 0.0)], 0);
        cfg.block_sizes = Some(vec![1, 5]);
        let (_, truth) = generate(&cfg).unwrap();
        assert_eq!(truth.labels(), &[0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn invalid_configs() {
        let ok = MsbmConfig::new(10, 2, vec![LayerSpec::informative(0.5, 0.1)], 0);
        let mut bad = vec![];
        let mut c = ok.clone();
        c.k = 11;
        bad.push(c);
        let mut c = ok.clone();
        c.layers = vec![];
        bad.push(c);
        let mut c = ok.clone();
        c.layers = vec![LayerSpec::informative(0.1, 0.5)];
        bad.push(c);
        let mut c = ok.clone();
        c.layers = vec![LayerSpec::informative(1.5, 0.5)];
        bad.push(c);
        let mut c = ok.clone();
        c.block_sizes = Some(vec![3, 3]);
        bad.push(c);
        let mut c = ok.clone();
        c.weight_mode = WeightMode::Poisson { mean: 0.0 };
        bad.push(c);
        for cfg in bad {
            assert!(matches!(generate(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
        assert!(complementary_pair(10, 3, 0).is_err());
        assert!(complementary_pair(3, 4, 0).is_err());
    }

    #[test]
    fn complementary_layers_pair_blocks_differently() {
        let (mlg, truth) = complementary_pair(80, 4, 2).unwrap();
        // Average weight between each pair of blocks.
        let density = |layer: usize, a: usize, b: usize| {
            let w = mlg.layer(layer).weights();
            let (mut s, mut c) = (0.0, 0.0);
            for i in 0..80 {
                for j in 0..80 {
                    if i != j && truth.labels()[i] == a && truth.labels()[j] == b {
                        s += w[(i, j)];
                        c += 1.0;
                    }
                }
            }
            s / c
        };
        // Layer 0 groups {0,1} and {2,3}; layer 1 groups {0,2} and {1,3}.
        assert!(density(0, 0, 1) > density(0, 0, 2));
        assert!(density(1, 0, 2) > density(1, 0, 1));
    }
}
