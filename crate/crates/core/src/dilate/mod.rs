//! Dilation of channel curves into closed-system Hamiltonian schedules.

pub mod curve;
pub mod frame;
pub mod schedule;
pub mod step;
pub mod synth;

pub use curve::{ChannelCurve, ChannelSource, Horizon};
pub use frame::{align_isometries, dilation_isometry, embed_unitary, AlignedFrame, Alignment};
pub use schedule::{DilationSchedule, ScheduleParams, Segment};
pub use step::select_step;
pub use synth::{synthesize, StepCertificate, Synthesis, SynthesisOptions, SynthesisReport};
