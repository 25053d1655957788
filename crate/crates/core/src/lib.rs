//! City-network analysis toolkit: affinity graphs built from commuter,
//! isolation and ICU data, normalized-cut spectral clustering, configurable
//! regional risk flags, and a discrete metapopulation SEIR simulator.

pub mod affinity;
pub mod clustering;
pub mod data;
mod error;
pub mod flags;
pub mod plot;
pub mod seir;
pub mod spectral;

pub use error::{Error, Result};
