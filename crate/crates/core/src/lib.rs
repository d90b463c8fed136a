pub mod algebra;
pub mod error;
pub mod format;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod nhh;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
