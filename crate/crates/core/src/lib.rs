//! Markovian master equations for open quantum systems.

pub mod bath;
pub mod equations;
pub mod error;
pub mod floquet;
pub mod generators;
pub mod hilbert;
pub mod jc3;
pub mod kernels;
pub mod metrics;
pub mod ops;
pub mod propagate;
pub mod quad;
pub mod special;
pub mod spinchain;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
