//! Channel curves used as synthesis targets.

pub mod expm;
pub mod gksl;
pub mod sampled;

pub use gksl::{semigroup_curve, timedep_markov_curve, GkslSegment, GkslSpec};
pub use sampled::sampled_kraus_curve;
