//! Discrete-event gate-level simulation kernel.

mod error;
mod level;
mod netlist;
mod primitive;
mod sim;
mod trace;
mod vcd;

pub use error::SimError;
pub use level::{GateId, LogicLevel, NetId, SimTime};
pub use netlist::{Clamp, Gate, Net, Netlist, Port, PortDir};
pub use primitive::{eval_primitive, GateKind, Polarity};
pub use sim::{run, Event, Reactor, ReactorIo, SimConfig, Simulator, DEFAULT_EVENT_BUDGET};
pub use trace::Trace;
pub use vcd::write_vcd;
