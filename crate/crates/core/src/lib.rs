pub mod analysis;
pub mod cli;
pub mod dde;
pub mod embedding;
pub mod boxcover;
pub mod config;
pub mod models;
pub mod spline;
pub mod subdivision;
pub mod synthetic;
pub mod error;

pub use error::{Error, Result};
