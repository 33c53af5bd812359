pub mod baseline;
pub mod dct;
pub mod error;
pub mod image;
pub mod lp;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod recovery;
pub mod sidecar;

pub use error::{Error, Result};
