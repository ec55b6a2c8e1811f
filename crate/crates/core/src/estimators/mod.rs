//! Data-driven state and observability estimators, plus the adaptive
//! observability filter that blends their outputs.

mod dataset;
mod filter;
mod net;
mod train;

pub use dataset::{curate_by_observability, CurateMode, TrainingDataset};
pub use filter::{
    alpha_from_observability, observability_filter_step, AlphaMap, ObservabilityFilterState,
};
pub use net::{EstimatorNet, WindowBuffer};
pub use train::{
    circular_loss, train, train_observability_estimator, within_order_fraction, EpochLoss,
    LossKind, TrainConfig, TrainingReport,
};
