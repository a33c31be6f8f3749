//! Social-sampling toolkit.
//!
//! Decision-probability kernels for popularity/performance choice models, an
//! idealized multi-agent simulator, maximum-likelihood fitting on user-day
//! panels, cross-validated model comparison, and trade-log processing that
//! turns raw copy-trading records into panels.
//!
//! Module map:
//! - [`models`]: pure choice kernels and the exact posterior over the best option.
//! - [`simulator`]: Bernoulli-reward agent simulations and parameter sweeps.
//! - [`inference`]: likelihood, Nelder-Mead fitting, profiles, trader ranking.
//! - [`evaluation`]: cross-validation, error measures, binned summaries, OLS.
//! - [`pipeline`]: trade-log parsing, popularity and performance reconstruction,
//!   imputation, panel construction, synthetic market generation.

pub mod error;
pub mod evaluation;
pub mod inference;
pub mod models;
pub mod optim;
pub mod panel;
pub mod pipeline;
pub mod rng;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use models::{
    binarize_signal, decision_probabilities, smoothing, BinarySignal, MarketSnapshot, ModelFamily, ModelSpec,
    PosteriorState, ProbabilityVector,
};
pub use panel::{PanelDataset, PanelDay};
