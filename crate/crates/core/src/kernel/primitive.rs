//! Gate primitives and their steady-state evaluation rules.

use std::fmt;

use super::error::SimError;
use super::level::{LogicLevel, SimTime};

/// Bit mask of inverted C-element inputs; bit `i` set means input `i` is
/// complemented before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Polarity(pub u32);

impl Polarity {
    pub const NONE: Polarity = Polarity(0);

    pub fn inverted(inputs: &[usize]) -> Self {
        Polarity(inputs.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn is_inverted(self, input: usize) -> bool {
        self.0 & (1 << input) != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Inv,
    Buf,
    And2,
    Or2,
    Or4,
    Xor2,
    /// Inputs: `[select, in0, in1]`; output is `in1` when select is high.
    Mux2,
    /// Muller C-element with per-input polarity.
    Cel(Polarity),
    /// Inputs: `[data, enable]`; transparent while enable is high.
    Latch,
    /// Pure delay element (matched delay Δ).
    Delay,
    /// Capture/pass register. Inputs: `[data, trigger]`; samples data on
    /// either edge of the trigger.
    Capture,
}

impl GateKind {
    /// Returns `(min, max)` number of inputs; `max == None` for unbounded.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            GateKind::Inv | GateKind::Buf | GateKind::Delay => (1, Some(1)),
            GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => (2, Some(2)),
            GateKind::Or4 => (4, Some(4)),
            GateKind::Mux2 => (3, Some(3)),
            GateKind::Cel(_) => (2, Some(32)),
            GateKind::Latch | GateKind::Capture => (2, Some(2)),
        }
    }

    /// State-holding gates need an explicit initial output level.
    pub fn is_sequential(self) -> bool {
        matches!(self, GateKind::Cel(_) | GateKind::Latch | GateKind::Capture)
    }

    /// Gates that may legally close a feedback loop.
    pub fn breaks_cycles(self) -> bool {
        self.is_sequential() || self == GateKind::Delay
    }

    pub fn min_delay(self) -> SimTime {
        match self {
            GateKind::Buf => 0,
            _ => 1,
        }
    }

    /// Default delay in inverter delays.
    pub fn default_delay(self) -> SimTime {
        match self {
            GateKind::Or4 => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Inv => "INV",
            GateKind::Buf => "BUF",
            GateKind::And2 => "AND2",
            GateKind::Or2 => "OR2",
            GateKind::Or4 => "OR4",
            GateKind::Xor2 => "XOR2",
            GateKind::Mux2 => "MUX2",
            GateKind::Cel(_) => "CEL",
            GateKind::Latch => "LATCH",
            GateKind::Delay => "DELAY",
            GateKind::Capture => "CAPTURE",
        }
    }

    pub fn check_arity(self, got: usize) -> Result<(), SimError> {
        let (min, max) = self.arity();
        if got < min || max.is_some_and(|m| got > m) {
            return Err(SimError::Arity {
                kind: self.name(),
                expected: match max {
                    Some(m) if m == min => format!("{min}"),
                    Some(m) => format!("{min}..={m}"),
                    None => format!("{min}.."),
                },
                got,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates a level-sensitive primitive.
///
/// `prev_output` is the gate's last decided output; C-elements and latches
/// return it while their hold condition applies. Capture registers are
/// edge-sensitive and are rejected here; the simulator tracks their trigger
/// history.
pub fn eval_primitive(
    kind: GateKind,
    inputs: &[LogicLevel],
    prev_output: LogicLevel,
) -> Result<LogicLevel, SimError> {
    kind.check_arity(inputs.len())?;
    if kind == GateKind::Capture {
        return Err(SimError::Config(
            "CAPTURE is edge-triggered and has no level-sensitive evaluation".into(),
        ));
    }
    Ok(eval_unchecked(kind, inputs, prev_output))
}

pub(crate) fn eval_unchecked(
    kind: GateKind,
    inputs: &[LogicLevel],
    prev: LogicLevel,
) -> LogicLevel {
    use LogicLevel::*;
    let any_unknown = || inputs.iter().any(|l| !l.is_known());
    match kind {
        GateKind::Inv => !inputs[0],
        GateKind::Buf | GateKind::Delay => inputs[0],
        GateKind::And2 => {
            if any_unknown() {
                Unknown
            } else {
                LogicLevel::from_bool(inputs[0].is_high() && inputs[1].is_high())
            }
        }
        GateKind::Or2 | GateKind::Or4 => {
            if any_unknown() {
                Unknown
            } else {
                LogicLevel::from_bool(inputs.iter().any(|l| l.is_high()))
            }
        }
        GateKind::Xor2 => {
            if any_unknown() {
                Unknown
            } else {
                LogicLevel::from_bool(inputs[0] != inputs[1])
            }
        }
        GateKind::Mux2 => {
            if any_unknown() {
                Unknown
            } else if inputs[0].is_high() {
                inputs[2]
            } else {
                inputs[1]
            }
        }
        GateKind::Cel(pol) => {
            let mut common: Option<LogicLevel> = None;
            let mut unknown = false;
            for (i, &l) in inputs.iter().enumerate() {
                let eff = if pol.is_inverted(i) { !l } else { l };
                if !eff.is_known() {
                    unknown = true;
                    continue;
                }
                match common {
                    None => common = Some(eff),
                    Some(c) if c != eff => return prev,
                    Some(_) => {}
                }
            }
            match (common, unknown) {
                (Some(c), false) => c,
                (Some(c), true) if c == prev => prev,
                _ => Unknown,
            }
        }
        GateKind::Latch => match inputs[1] {
            High => inputs[0],
            Low => prev,
            Unknown => {
                if inputs[0] == prev {
                    prev
                } else {
                    Unknown
                }
            }
        },
        GateKind::Capture => prev,
    }
}
