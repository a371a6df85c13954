//! Codebook design for vector quantization.
//!
//! The crate provides four ways of building a codebook from a set of training
//! vectors:
//!
//! * conventional LBG refinement from a random initial codebook ([`lbg`]),
//! * affinity propagation with a uniform preference ([`ap`]),
//! * affinity propagation with network-support preferences, where each
//!   point's self-similarity is a multiple `rs` of its mean similarity to all
//!   other points ([`similarity::PreferenceMode::NetworkSupport`]),
//! * the hybrid pipeline that tunes `rs` for a target codebook size and then
//!   polishes the exemplar codebook with LBG ([`pipeline`]).
//!
//! The [`imageio`] module wraps these in an image-compression workflow:
//! PGM images are cut into blocks, encoded against a codebook, decoded and
//! scored by PSNR.
//!
//! Inner loops run on rayon when the `parallel` feature is enabled (the
//! default). Every parallel kernel produces bit-identical results to the
//! sequential build regardless of the number of worker threads.

pub mod ap;
mod error;
pub mod imageio;
pub mod lbg;
mod par;
pub mod pipeline;
pub mod similarity;
pub mod synth;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{
    assign_nearest, centroid, distortion, sq_dist, Assignment, Codebook, DistortionReport,
    Provenance, TrainingSet,
};
