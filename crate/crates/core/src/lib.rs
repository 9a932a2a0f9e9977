//! Expected-loss curves of averaged ensembles.

pub mod classification;
pub mod curves;
pub mod delta;
pub mod distributions;
pub mod ensembles;
pub mod error;
pub mod jet;
pub mod ldp;
pub mod losses;
pub mod numdiff;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod tensor;

pub use error::{Error, Result};
