//! Predicting the sex of a seabird from the GPS track of one foraging trip.
//!
//! The crate covers the whole batch pipeline: parsing trajectories
//! ([`trajdata`]), kinematics ([`geokin`]), per-bird feature vectors
//! ([`featex`]), the `together` and `split` feature matrices ([`datasets`]),
//! Newton decision trees ([`trees`]), the boosted and bagged ensembles built
//! on them ([`boost`]), a linear SVM ([`linsvm`]), shared-fold cross
//! validation and majority voting ([`evalcv`]), a synthetic corpus
//! generator ([`synthgen`]) and the command layer behind the `shearwater`
//! binary ([`cli`]).

pub mod boost;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod evalcv;
pub mod featex;
pub mod geokin;
pub mod io;
pub mod linsvm;
pub mod matrix;
pub mod synthgen;
pub mod trajdata;
pub mod trees;

pub use error::{Error, Result};
