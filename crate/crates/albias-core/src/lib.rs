//! Core algorithms for a desk-scale active text classification laboratory:
//! labeled corpora, two probabilistic text classifiers plus a linear SVM,
//! the pool-based acquisition loop, and diagnostics that quantify how much
//! an actively acquired training set is shaped by the acquisition strategy.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO; all file formats
//! and the command-line front end live in the companion `albias` crate.
//! Every routine is deterministic given its inputs and seeds.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod alcore;
pub mod corpus;
pub mod diagnostics;
mod error;
pub mod ftext;
mod math;
pub mod nbayes;
pub mod svmlin;

pub use error::CoreError;
