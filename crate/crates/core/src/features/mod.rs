//! Nonlinear complexity measures and per-subject feature vectors.

mod extract;
pub mod hfd;
pub mod sampen;

pub use extract::{
    extract_features, hfd_name, sampen_name, EpochMerge, FeatureVector, HFD_PREFIX, SAMPEN_PREFIX,
};
pub use hfd::{curve_length, higuchi_fd, higuchi_fit, HfdFit, HfdParams};
pub use sampen::{match_counts, sample_entropy, MatchCounts, SampEnParams, SdConvention};
