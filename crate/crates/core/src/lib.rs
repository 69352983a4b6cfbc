//! Base-station cell switching for energy saving.
//!
//! A synthetic single-station simulator ([`simkernel`]) built on closed-form
//! power, QoS and handover metrics ([`netmodel`]); neural surrogate estimators
//! trained from random-action data ([`estimators`]); a certainty-equivalent
//! approximate dynamic programming controller with an adaptive QoS threshold
//! ([`adp`]); comparison policies ([`baselines`]); and the experiment pipeline
//! ([`harness`]).

pub mod adp;
pub mod baselines;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod netmodel;
pub mod par;
pub mod seed;
pub mod simkernel;

pub use error::{Error, Result};
