//! Closed-form Bayesian estimation of marginal and conditional independence
//! graphs for Gaussian data, with an empirical-Bayes conjugate prior.

pub mod cli;
pub mod error;
pub mod extsort;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod mathfn;
pub mod model;
pub mod optimize;
pub mod pairstats;
pub mod simulate;

pub use error::{BeamError, Result};
pub use inference::{adjust, select_edges, AdjustmentMethod, GraphResult, TestType};
pub use model::{fit_delta, standardize, DataMatrix, ModelFit, PriorSpec};
pub use pairstats::{compute_all_pairs, PairStat, PairTable};
