//! Degenerate Hitchin systems on maximally degenerate stable curves of
//! genus `g ≥ 2`, encoded by trivalent graphs.

pub mod cli;
pub mod error;
pub mod framed;
pub mod graph;
pub mod higgs;
pub mod hitchin;
pub mod io;
pub mod linalg;
pub mod mat2;
pub mod scalar;
pub mod sections;
pub mod spectral;

pub use error::{Error, Result};
