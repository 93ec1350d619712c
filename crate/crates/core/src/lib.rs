//! Noisy-label training through cross-model agreement.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] builds, corrupts, loads, splits and samples datasets while
//!   keeping the hidden ground truth around for evaluation.
//! * [`model`] is a small zoo of probability models with hand-derived
//!   gradients (MF, GMF, MLPs and the noisy-channel models).
//! * [`loss`] holds the likelihood expectations, KL terms and composite
//!   denoising objectives.
//! * [`train`] runs the alternating denoising routines and the baselines.
//! * [`eval`] computes ranking/classification metrics and the agreement
//!   diagnostics.
//! * [`experiment`] wires configs, grids, reports and comparisons together
//!   for the command line front end.
//!
//! Data-parallel inner loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.
//! Both paths produce bit-identical results.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod loss;
pub mod model;
pub mod par;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
