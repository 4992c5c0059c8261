//! Channel encodings and protocol monitors.

mod monitor;
mod words;

pub use monitor::{hex, ChannelKind, ChannelMonitor, MonitorReport, Violation, WordRecord};
pub use words::{
    completion_detect, fourphase_to_utd, ledr_decode, ledr_encode, ledr_encode_word, ncl_decode,
    ncl_encode, ncl_encode_word, utd_to_fourphase, CodecError, Completion, DualRailBit, LedrBit,
    NclSymbol, StreamPhase,
};
