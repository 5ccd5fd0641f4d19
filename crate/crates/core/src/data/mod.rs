//! Dataset generation, ingestion, normalization and splitting.

mod clusters;
mod csv_io;
mod normalize;
mod split;

pub use clusters::{generate_clusters, ClusterSpec, ClusterVariant};
pub use csv_io::{load_csv, read_csv, read_features_csv, write_csv};
pub use normalize::{fit_normalizer, Normalizer};
pub use split::{order_classes_by_frequency, split_msets, stratified_folds, Fold, MSET_FRACTIONS};
