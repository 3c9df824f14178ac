//! Selection-adjusted confidence intervals for the mean of the group that
//! produced the largest observation in a normal means model.
//!
//! The crate is `no_std` with `alloc`. Randomness always comes from a
//! caller-supplied [`rand::Rng`].

#![cfg_attr(not(test), no_std)]
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod estimators;
pub mod gauss;
pub mod model;
pub mod optim;
pub mod procedures;
pub mod quad;
pub mod roots;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{EtaEstimator, HyperParams, MixingDensity};
pub use gauss::{LogProb, TruncatedNormal};
pub use model::{SelectedDatum, SelectiveMargin, SelectiveModel, SelectiveSampler};
pub use procedures::{Interval, Level};
