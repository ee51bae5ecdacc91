pub mod codebook;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod losses;
pub mod refine;
pub mod render;

pub use error::{Error, Result};
