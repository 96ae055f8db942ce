pub mod bases;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod linalg;
pub mod multimeasure;
pub mod reconstruct;

pub use error::{Error, Result};
