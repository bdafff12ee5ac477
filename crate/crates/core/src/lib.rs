//! Stinespring-curve synthesis for Lipschitz curves of quantum channels.

pub mod channel;
pub mod curves;
pub mod dilate;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod random;
pub mod repr;
pub mod smooth;

pub use error::{Error, Result};
