//! Conjectural Stackelberg games and the COSTAL learning dynamics.

pub mod analysis;
pub mod conjecture;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod training;

pub use error::{Error, Result};
