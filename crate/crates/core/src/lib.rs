pub mod cli;
pub mod error;
pub mod fingerprint;
pub mod gin;
pub mod influence;
pub mod loss;
pub mod masking;
pub mod molgraph;
pub mod motif;
pub mod smiles;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
