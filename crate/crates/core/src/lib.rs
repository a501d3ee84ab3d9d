pub mod benchmark;
pub mod cli;
pub mod dos;
pub mod error;
pub mod matops;
pub mod quantizer;
pub mod sim;
pub mod synthesis;
pub mod topology;

pub use error::{Error, Result};
