//! Brain-swarm interface pipeline.
//!
//! Two-state thoughts decoded by a Gaussian HMM from headset performance
//! metrics set the swarm gains; eye movements decoded from four frontal
//! electrodes set its drive. [`pipeline`] ties the decoders to the
//! potential-field [`swarm`] simulation.

pub mod eog;
pub mod hmm;
mod labels;
pub mod pipeline;
pub mod signal_io;
pub mod swarm;

pub use labels::{Direction, Thought, UnknownLabel};
