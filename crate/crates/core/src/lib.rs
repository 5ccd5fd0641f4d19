//! Multi-class classification built from binary classifiers under four
//! paradigms (One-vs-Rest, Similar-Classes Learning, One-vs-Previous and
//! One-vs-Previous with Similar Classes), with incremental updates as new
//! data and new classes arrive, plus the benchmark harness and CLI.

pub mod classifier;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod model;
pub mod paradigms;

pub use classifier::BinaryClassifier;
pub use error::{Error, Result};
pub use model::{
    BaseKind, ClassEntry, ClassExamples, ClassId, HyperParams, LabeledDataset, LabeledExample,
    ModelFile, Paradigm, ParadigmModel, DEFAULT_LAMBDA_SIM,
};
pub use paradigms::{
    is_similar, train, train_with_stats, TrainStats, UpdateReport, UpdateStrategy,
};
