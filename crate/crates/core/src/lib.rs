//! Gate-level simulator for concurrent built-in self-test of asynchronous
//! handshake pipelines.

pub mod blocks;
pub mod cli;
pub mod codec;
pub mod harness;
pub mod kernel;
pub mod overhead;

pub use kernel::{LogicLevel, NetId, SimTime};
