//! File formats, audio decoding, configuration and the corpus-level
//! pipeline behind the `adress` command. Algorithms live in `adress_core`.

pub mod config;
pub mod error;
pub mod model_io;
pub mod pipeline;
pub mod report;
pub mod tables;
pub mod wav;

pub use error::{Error, Result};
