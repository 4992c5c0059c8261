use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::LogicLevel;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    #[error("illegal dual-rail codeword (hi={hi}, lo={lo})")]
    IllegalCodeword { hi: LogicLevel, lo: LogicLevel },
    #[error("user and test inputs are both valid")]
    MutualExclusion,
    #[error("rail level is unknown")]
    Unknown,
}

/// Which stream a word on a two-phase channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamPhase {
    User,
    Test,
}

impl StreamPhase {
    pub fn other(self) -> Self {
        match self {
            StreamPhase::User => StreamPhase::Test,
            StreamPhase::Test => StreamPhase::User,
        }
    }
}

impl fmt::Display for StreamPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamPhase::User => "USER",
            StreamPhase::Test => "TEST",
        })
    }
}

/// Symbol carried by one four-phase dual-rail bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NclSymbol {
    Null,
    Zero,
    One,
}

impl NclSymbol {
    pub fn bit(b: bool) -> Self {
        if b {
            NclSymbol::One
        } else {
            NclSymbol::Zero
        }
    }
}

/// One-hot four-phase dual-rail bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualRailBit {
    pub hi: LogicLevel,
    pub lo: LogicLevel,
}

impl DualRailBit {
    pub const NULL: DualRailBit = DualRailBit {
        hi: LogicLevel::Low,
        lo: LogicLevel::Low,
    };
    pub const LO: DualRailBit = DualRailBit {
        hi: LogicLevel::Low,
        lo: LogicLevel::High,
    };
    pub const HI: DualRailBit = DualRailBit {
        hi: LogicLevel::High,
        lo: LogicLevel::Low,
    };

    pub fn new(hi: LogicLevel, lo: LogicLevel) -> Self {
        DualRailBit { hi, lo }
    }

    pub fn is_null(self) -> bool {
        self == Self::NULL
    }

    pub fn is_valid(self) -> bool {
        self == Self::LO || self == Self::HI
    }
}

impl fmt::Display for DualRailBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.hi, self.lo)
    }
}

/// Level-encoded dual-rail bit: value rail and phase rail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LedrBit {
    pub val: LogicLevel,
    pub phs: LogicLevel,
}

impl LedrBit {
    pub fn new(val: LogicLevel, phs: LogicLevel) -> Self {
        LedrBit { val, phs }
    }

    /// Odd parity marks the user phase. `None` while a rail is unknown.
    pub fn phase(self) -> Option<StreamPhase> {
        let v = self.val.to_bool()?;
        let p = self.phs.to_bool()?;
        Some(if v ^ p {
            StreamPhase::User
        } else {
            StreamPhase::Test
        })
    }
}

impl fmt::Display for LedrBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.val, self.phs)
    }
}

pub fn ncl_encode(symbol: NclSymbol) -> DualRailBit {
    match symbol {
        NclSymbol::Null => DualRailBit::NULL,
        NclSymbol::Zero => DualRailBit::LO,
        NclSymbol::One => DualRailBit::HI,
    }
}

pub fn ncl_decode(rails: DualRailBit) -> Result<NclSymbol, CodecError> {
    use LogicLevel::*;
    match (rails.hi, rails.lo) {
        (Low, Low) => Ok(NclSymbol::Null),
        (Low, High) => Ok(NclSymbol::Zero),
        (High, Low) => Ok(NclSymbol::One),
        (High, High) => Err(CodecError::IllegalCodeword {
            hi: rails.hi,
            lo: rails.lo,
        }),
        _ => Err(CodecError::Unknown),
    }
}

pub fn ledr_encode(bit: bool, phase: StreamPhase) -> LedrBit {
    let user = phase == StreamPhase::User;
    LedrBit::new(LogicLevel::from_bool(bit), LogicLevel::from_bool(bit ^ user))
}

/// # Panics
/// Never for known rails; unknown rails decode as `(false, Test)`.
pub fn ledr_decode(rails: LedrBit) -> (bool, StreamPhase) {
    (
        rails.val.is_high(),
        rails.phase().unwrap_or(StreamPhase::Test),
    )
}

/// Two-phase to four-phase: the rail pair belonging to the word's phase
/// carries the bit, the other one is NULL.
pub fn utd_to_fourphase(rails: LedrBit) -> (DualRailBit, DualRailBit) {
    let (bit, phase) = ledr_decode(rails);
    let code = ncl_encode(NclSymbol::bit(bit));
    match phase {
        StreamPhase::User => (code, DualRailBit::NULL),
        StreamPhase::Test => (DualRailBit::NULL, code),
    }
}

/// Four-phase to two-phase. Holds `prev` while both inputs are NULL.
pub fn fourphase_to_utd(
    ud: DualRailBit,
    td: DualRailBit,
    prev: LedrBit,
) -> Result<LedrBit, CodecError> {
    let u = ncl_decode(ud)?;
    let t = ncl_decode(td)?;
    match (u, t) {
        (NclSymbol::Null, NclSymbol::Null) => Ok(prev),
        (s, NclSymbol::Null) => Ok(ledr_encode(s == NclSymbol::One, StreamPhase::User)),
        (NclSymbol::Null, s) => Ok(ledr_encode(s == NclSymbol::One, StreamPhase::Test)),
        _ => Err(CodecError::MutualExclusion),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Completion {
    AllValid,
    AllNull,
    Incomplete,
}

pub fn completion_detect(word: &[DualRailBit]) -> Result<Completion, CodecError> {
    let mut valid = 0;
    let mut null = 0;
    for &b in word {
        match ncl_decode(b)? {
            NclSymbol::Null => null += 1,
            _ => valid += 1,
        }
    }
    Ok(if null == word.len() {
        Completion::AllNull
    } else if valid == word.len() {
        Completion::AllValid
    } else {
        Completion::Incomplete
    })
}

/// Encodes the low `width` bits of `word`, bit 0 first.
pub fn ncl_encode_word(word: u64, width: usize) -> Vec<DualRailBit> {
    (0..width)
        .map(|i| ncl_encode(NclSymbol::bit(word >> i & 1 == 1)))
        .collect()
}

pub fn ledr_encode_word(word: u64, width: usize, phase: StreamPhase) -> Vec<LedrBit> {
    (0..width)
        .map(|i| ledr_encode(word >> i & 1 == 1, phase))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicLevel::*;

    #[test]
    fn ncl_table() {
        assert_eq!(ncl_encode(NclSymbol::Zero), DualRailBit::new(Low, High));
        assert_eq!(ncl_encode(NclSymbol::One), DualRailBit::new(High, Low));
        assert_eq!(ncl_encode(NclSymbol::Null), DualRailBit::new(Low, Low));
        assert_eq!(ncl_decode(DualRailBit::new(Low, High)), Ok(NclSymbol::Zero));
        assert_eq!(ncl_decode(DualRailBit::NULL), Ok(NclSymbol::Null));
        assert!(matches!(
            ncl_decode(DualRailBit::new(High, High)),
            Err(CodecError::IllegalCodeword { .. })
        ));
    }

    #[test]
    fn ledr_table() {
        assert_eq!(ledr_encode(false, StreamPhase::User), LedrBit::new(Low, High));
        assert_eq!(ledr_encode(true, StreamPhase::User), LedrBit::new(High, Low));
        assert_eq!(ledr_encode(false, StreamPhase::Test), LedrBit::new(Low, Low));
        assert_eq!(ledr_encode(true, StreamPhase::Test), LedrBit::new(High, High));
        assert_eq!(ledr_decode(LedrBit::new(High, Low)), (true, StreamPhase::User));
        assert_eq!(ledr_decode(LedrBit::new(Low, Low)), (false, StreamPhase::Test));
        assert_eq!(ledr_decode(LedrBit::new(High, High)), (true, StreamPhase::Test));
        for b in [false, true] {
            for p in [StreamPhase::User, StreamPhase::Test] {
                assert_eq!(ledr_decode(ledr_encode(b, p)), (b, p));
            }
        }
    }

    #[test]
    fn conversions() {
        assert_eq!(
            utd_to_fourphase(LedrBit::new(Low, Low)),
            (DualRailBit::NULL, DualRailBit::LO)
        );
        assert_eq!(
            utd_to_fourphase(LedrBit::new(High, Low)),
            (DualRailBit::HI, DualRailBit::NULL)
        );
        let any = LedrBit::new(High, High);
        assert_eq!(
            fourphase_to_utd(DualRailBit::LO, DualRailBit::NULL, any),
            Ok(LedrBit::new(Low, High))
        );
        assert_eq!(
            fourphase_to_utd(DualRailBit::NULL, DualRailBit::NULL, any),
            Ok(any)
        );
        assert_eq!(
            fourphase_to_utd(DualRailBit::HI, DualRailBit::HI, any),
            Err(CodecError::MutualExclusion)
        );
    }

    #[test]
    fn completion() {
        use DualRailBit as D;
        assert_eq!(completion_detect(&[D::LO, D::HI]), Ok(Completion::AllValid));
        assert_eq!(completion_detect(&[D::NULL, D::NULL]), Ok(Completion::AllNull));
        assert_eq!(completion_detect(&[D::LO, D::NULL]), Ok(Completion::Incomplete));
        assert!(completion_detect(&[D::new(High, High)]).is_err());
    }

    #[test]
    fn ud_stream_gets_null_spacers() {
        let states = [
            LedrBit::new(Low, Low),
            LedrBit::new(Low, High),
            LedrBit::new(High, Low),
            LedrBit::new(High, High),
        ];
        for &a in &states {
            for &b in &states {
                if a.phase() == b.phase() {
                    continue;
                }
                let (ua, _) = utd_to_fourphase(a);
                let (ub, _) = utd_to_fourphase(b);
                assert!(ua.is_null() || ub.is_null(), "{a} -> {b}");
            }
        }
    }
}
