pub mod cli;
pub mod diversity;
pub mod dynamics;
pub mod error;
pub mod ingest;
pub mod io;
pub mod optim;
pub mod rank;
pub mod special;
pub mod walker;
pub mod zipf;

pub use error::{Error, Result};
