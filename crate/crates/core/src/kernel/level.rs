use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};

/// Simulation time in inverter delays (ID).
pub type SimTime = u64;

/// Three-valued logic level carried by a net.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub enum LogicLevel {
    Low,
    High,
    #[default]
    Unknown,
}

impl LogicLevel {
    pub fn from_bool(b: bool) -> Self {
        if b {
            LogicLevel::High
        } else {
            LogicLevel::Low
        }
    }

    pub fn is_known(self) -> bool {
        self != LogicLevel::Unknown
    }

    pub fn is_high(self) -> bool {
        self == LogicLevel::High
    }

    pub fn is_low(self) -> bool {
        self == LogicLevel::Low
    }

    /// `Some(bool)` for a driven level, `None` for `Unknown`.
    pub fn to_bool(self) -> Option<bool> {
        match self {
            LogicLevel::Low => Some(false),
            LogicLevel::High => Some(true),
            LogicLevel::Unknown => None,
        }
    }

    /// VCD scalar character.
    pub fn vcd_char(self) -> char {
        match self {
            LogicLevel::Low => '0',
            LogicLevel::High => '1',
            LogicLevel::Unknown => 'x',
        }
    }
}

impl Not for LogicLevel {
    type Output = LogicLevel;

    fn not(self) -> LogicLevel {
        match self {
            LogicLevel::Low => LogicLevel::High,
            LogicLevel::High => LogicLevel::Low,
            LogicLevel::Unknown => LogicLevel::Unknown,
        }
    }
}

impl From<bool> for LogicLevel {
    fn from(b: bool) -> Self {
        LogicLevel::from_bool(b)
    }
}

impl fmt::Display for LogicLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.vcd_char())
    }
}

/// Index of a net inside a [`Netlist`](super::Netlist).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Index of a gate inside a [`Netlist`](super::Netlist).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId(pub u32);

impl GateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
