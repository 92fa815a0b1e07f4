pub mod collision;
pub mod error;
pub mod grid;
pub mod lowrank;

pub use error::{Error, Result};
