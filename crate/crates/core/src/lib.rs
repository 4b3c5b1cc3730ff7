//! Flag autotuning for bounded model checkers.
//!
//! The pipeline: extract static features from a C program, label a training
//! set by running a backend verifier over a grid of flag configurations,
//! train a decision tree on (features, flags) -> outcome class, and at
//! verification time pick the configuration with the best predicted class.
//!
//! Modules follow the pipeline stages:
//! - [`features`]: tolerant C tokenizer and the 11-feature vector
//! - [`flags`]: flag-space model, canonical grid, encoding, rendering
//! - [`backend`]: verifier invocation, verdicts, outcome classes
//! - [`campaign`]: labeling campaigns, dataset persistence, splits
//! - [`dtree`]: CART classifier with class balancing and serialization
//! - [`selection`]: runtime flag prediction over a grid
//! - [`report`]: comparison reports between two runs

pub mod backend;
pub mod campaign;
pub mod dtree;
pub mod features;
pub mod flags;
pub mod report;
pub mod selection;
