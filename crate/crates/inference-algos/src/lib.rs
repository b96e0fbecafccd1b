//! Bayesian deep-learning algorithms written purely against the particle
//! runtime primitives: deep ensembles (centralized and hook-driven), diagonal
//! SWAG, SVGD, and the particle-pushforward predictive summary.

mod ensemble;
mod predict;
mod svgd;
mod swag;

pub use ensemble::{
    ensemble_epoch, ensemble_main, init_ensemble, train_ensemble_centralized,
    train_ensemble_distributed,
};
pub use predict::{ppush_predict, PredictiveSummary};
pub use svgd::{init_svgd, svgd_epoch, svgd_update, train_svgd, SvgdConfig, SvgdWeighting};
pub use swag::{
    register_moment_hooks, swag_batch, swag_sample, train_swag, SwagPosterior, MOM1_HOOK,
    MOM2_HOOK,
};

use autodiff_core::Tensor;

/// An in-memory dataset: ordered (data, label) batches.
pub type Batches = Vec<(Tensor, Tensor)>;
