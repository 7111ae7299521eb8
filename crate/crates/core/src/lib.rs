//! Relative-attribute rank-matrix descriptors for visual place recognition.
//!
//! An image is embedded by ranking it against a fixed set of prototype
//! images under each of `M` linear attribute rankers. The resulting
//! `M×(N+1)` integer rank matrix is compared with two L1 dissimilarities:
//! BRS, which looks only at the query's own rank per attribute, and RRS,
//! which uses the whole matrix. Because descriptors only encode orderings,
//! any strictly increasing change of attribute strengths leaves them intact.
//!
//! Modules, bottom-up:
//!
//! - [`attribute_model`]: pairwise large-margin training of linear rankers.
//! - [`rank_descriptor`]: strength lists, rank rows and rank matrices.
//! - [`similarity`]: BRS, RRS and the raw-feature L1 baseline.
//! - [`place_partition`]: grid place labels and class sampling.
//! - [`retrieval_eval`]: databases, linear-scan retrieval, AP and the
//!   repeated-sampling experiment.
//! - [`data_io`]: file formats and the synthetic two-domain generator.

pub mod attribute_model;
pub mod data_io;
pub mod error;
pub mod features;
pub mod place_partition;
pub mod rank_descriptor;
pub mod retrieval_eval;
pub mod similarity;

pub use attribute_model::{
    pairwise_accuracy, strength, train, train_with_trace, AttributeModel, PairConstraint, Relation,
    TrainConfig, TrainingMeta,
};
pub use error::{Error, Result};
pub use features::{FeatureVector, Pose};
pub use place_partition::{cell_of, sample_classes, PlaceGrid, PlaceLabel};
pub use rank_descriptor::{
    build_descriptor, rank_row, strength_list, DescriptorBuilder, PrototypeSet, RankDescriptor,
    RankMatrix, StrengthList, TiePolicy,
};
pub use retrieval_eval::{
    average_precision, build_database, query, run_experiment, DescriptorDatabase, ExperimentReport,
    ExperimentSettings, QueryPrototypes, RetrievalResult,
};
pub use similarity::{abs_l1, brs, rrs, DissimilarityScore, Method};
