//! Verification toolkit for ontological models of product-state preparations.
//!
//! The crate computes distances between ontic-state distributions, checks the
//! preparation uninformativeness condition and its consequences for the
//! two-qubit preclusion experiment, rebuilds a box-model example by exhaustive
//! search, and simulates the N-system guessing game.

pub mod error;
pub mod game;
pub mod independence;
pub mod measures;
pub mod model_file;
pub mod models;
pub mod quantum;
pub mod toymodel;

pub use error::{Error, Result};
pub use measures::{Distribution, OnticSpace};
pub use models::{Experiment, OntologicalModel, PreparationGrid};
pub use quantum::PrepLabel;
