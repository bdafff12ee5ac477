//! Norms, diamond-norm evaluation and continuity certificates.

pub mod diamond;
pub mod lipschitz;
pub mod norms;
pub mod sdp;
pub mod sweep;

pub use diamond::{
    cptp_diamond_unit, diamond_distance, diamond_norm, pure_state_lower_bound, DiamondOptions,
    DiamondResult,
};
pub use lipschitz::{
    interpolation_certificate, lipschitz_estimate, lipschitz_from_derivative, LipschitzEstimate,
};
pub use norms::{op_norm, trace_norm};
pub use sweep::{refined_grid, step_grid, sup_distance, SupDistance};
