//! Feature matrices and the statistics computed on them.

mod correlation;
mod matrix;
mod normalize;
pub mod pca;
mod summary;

pub use correlation::{pearson_correlation, CorrelationMatrix};
pub use matrix::{write_named_matrix, FeatureMatrix};
pub use normalize::{zscore_normalize, Standardizer};
pub use pca::{component_names, explained_variance, fit_pca, project, PcaModel};
pub use summary::{group_summary, FeatureSummary, GroupStats};
