use thiserror::Error;

use super::level::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{kind} expects {expected} inputs, got {got}")]
    Arity {
        kind: &'static str,
        expected: String,
        got: usize,
    },
    #[error("net `{0}` already exists")]
    DuplicateNet(String),
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("net `{net}` has more than one driver")]
    MultipleDrivers { net: String },
    #[error("combinational cycle through nets {nets:?}")]
    CombinationalCycle { nets: Vec<String> },
    #[error("sequential gate driving `{net}` has no initial output level")]
    MissingInitialState { net: String },
    #[error("net `{net}` is not driven by the environment")]
    NotEnvironmentDriven { net: String },
    #[error("causality violation: event at t={at} scheduled while simulation is at t={now}")]
    Causality { at: SimTime, now: SimTime },
    #[error("event budget of {budget} exceeded; most active nets: {nets:?}")]
    EventBudgetExceeded { budget: u64, nets: Vec<String> },
}
