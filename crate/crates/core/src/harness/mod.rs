//! Test-harness assembly: sources, merge, DUT, split, sinks and the
//! response analyzer, wired as one netlist and simulated together.

mod env;
mod loopback;
mod scenario;

pub use env::{Bd4Source, Comparator, Latency, Mismatch, MismatchLog, Ncl4Source, Sink, SinkWires, WordFeed, WordLog};
pub use loopback::{loopback, Loopback};
pub use scenario::{
    assemble, inject_fault, misr_signature, run_scenario, simulate, Assembly, EnvNets, FaultSpec,
    GoldenReference, HarnessError, Scenario, ScenarioResult, Stall, TestVectorSet, CHANNELS,
    DEFAULT_MISR_POLY,
};
