//! Measurement chain for irrelevant-speech experiments: signal processing and
//! intelligibility indices, calibrated stimulus synthesis, the serial-recall
//! protocol, the sigmoid performance model and the statistics that tie them together.

pub mod analysis;
pub mod intelligibility;
pub mod model;
pub mod protocol;
pub mod rng;
pub mod signal;
pub mod stimulus;
