//! Evaluation engine for cell instance segmentation benchmarks.
//!
//! The crate covers the whole scoring pipeline (label-map ingestion and
//! quality control, IoU-matched F1, runtime tolerance, five leaderboard
//! schemes, bootstrap rank stability and pairwise significance) plus the
//! post-processing decoders used by top-ranked segmentation methods, all
//! operating on dense prediction maps so they can be exercised without a
//! trained network.

pub mod decoders;
pub mod dense;
pub mod error;
pub mod labelmap;
pub mod metrics;
pub mod ranking;
pub mod stats;

pub use error::{Error, Result};
pub use labelmap::LabelMap;
