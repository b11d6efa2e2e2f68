//! Three-stage unsupervised clustering pipeline.
//!
//! Stage I embeds the data with a dense autoencoder trained on a joint loss:
//! a spectral-gap clustering term computed from the normalized graph
//! Laplacian of the latent batch, plus the usual reconstruction MSE as a
//! regularizer. Stage II refines the compressed embedding with a
//! self-contained UMAP. Stage III clusters the refined embedding with
//! K-means or a merge-to-K DBSCAN variant, and the results are scored with
//! ACC / NMI / ARI.
//!
//! The crate is organized to mirror those stages:
//!
//! - [`dataset`] — IDX / CSV ingestion, synthetic blobs, subsampling
//! - [`nn`] — dense autoencoder with manual backprop and Adam
//! - [`spectral`] — similarity graph, normalized Laplacian, eigensolver,
//!   the spectral-gap loss and its analytic gradient
//! - [`trainer`] — Stage I driver (pre-training, then joint training)
//! - [`umap`] — Stage II (kNN graph, fuzzy calibration, spectral init, SGD layout)
//! - [`clustering`] — Stage III (K-means, DBSCAN, merge-to-K DBSCAN)
//! - [`metrics`] — confusion matrix, ACC (optimal matching), NMI, ARI
//! - [`plotting`] — deterministic SVG scatter / confusion renderings
//! - [`config`] / [`pipeline`] — flat key = value configuration and the
//!   CLI-facing orchestration of all stages

pub mod clustering;
pub mod config;
pub mod dataset;
mod error;
mod linalg;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod plotting;
pub mod spectral;
pub mod trainer;
pub mod umap;

pub use error::{Error, Result};
