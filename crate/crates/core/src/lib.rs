//! Random Gilbert-Varshamov codes for joint source-channel coding over
//! discrete memoryless channels.
//!
//! * [`types`]: exact types, joint types and type classes.
//! * [`exponents`]: source reliability, random-coding, expurgated and RGV
//!   error exponents.
//! * [`codebook`]: recursive codebook construction and its diagnostics.
//! * [`sim`]: end-to-end Monte Carlo simulation and finite-length bounds.
//! * [`cli`]: experiment files, result documents and the subcommands of the
//!   `rgv-jscc` tool.

pub mod cli;
pub mod codebook;
pub mod error;
pub mod exponents;
pub mod ext;
pub mod rng;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use ext::ExtReal;
