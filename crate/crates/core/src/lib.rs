//! Spectral clustering of multi-layer graphs through a joint spectrum.
//!
//! A multi-layer graph is a set of weighted undirected graphs ("layers")
//! sharing one vertex set. This crate combines the layers' Laplacian spectra
//! in two ways and clusters the shared vertices:
//!
//! | Method | Entry point | Idea |
//! |--------|-------------|------|
//! | joint factorization | [`ged::cluster_ged`] | one eigenvector basis `P` (with approximate inverse `Q`) fitted to every layer's random-walk Laplacian |
//! | spectral regularization | [`sr::cluster_sr`] | eigenvectors of one layer smoothed over the next layer, layers ordered greedily by mutual information |
//! | baselines | [`baselines`] | adjacency sums, spectral-kernel k-means, averaged Laplacian |
//!
//! Single-graph normalized spectral clustering lives in [`spectral`],
//! evaluation metrics in [`metrics`] and a seeded multi-layer stochastic block
//! model in [`synth`].
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; file formats and the command-line front end live in the
//! `jointspec-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assignment;
pub mod baselines;
pub mod clustering;
pub mod eigen;
pub mod error;
pub mod ged;
pub mod graph;
pub mod kmeans;
pub mod lbfgs;
pub mod metrics;
pub mod rng;
pub mod spectral;
pub mod sr;
pub mod synth;

pub use clustering::Clustering;
pub use error::{Error, Result};
pub use graph::{
    assemble_multilayer, degree_vector, laplacian, DegreeVector, LaplacianKind, LayerGraph,
    MultiLayerGraph,
};
pub use kmeans::{kmeans, KMeansConfig};
pub use metrics::{GroundTruth, MetricReport};
pub use spectral::{decompose, embed, spectral_cluster, Embedding, SpectralDecomposition};

pub use nalgebra::{DMatrix, DVector};
