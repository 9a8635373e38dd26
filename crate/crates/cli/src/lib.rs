//! Library surface of the experiment runner: configuration parsing and the
//! execution pipeline. The `fedids` binary is a thin argument layer over
//! these modules; integration tests drive both.

pub mod config;
pub mod pipeline;
pub mod synth;
