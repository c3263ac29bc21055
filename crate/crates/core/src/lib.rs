//! Achievable-rate bounds and transmit covariance optimization for a
//! full-duplex MIMO decode-and-forward relay with limited transmitter and
//! receiver dynamic range and pilot-aided channel estimation.

pub mod approx;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod rates;
pub mod rng;

pub use error::{Error, Result};
