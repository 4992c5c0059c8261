use cbist::codec::{
    completion_detect, fourphase_to_utd, hex, ledr_decode, ledr_encode, ledr_encode_word,
    ncl_decode, ncl_encode, ncl_encode_word, utd_to_fourphase, ChannelKind, ChannelMonitor,
    CodecError, Completion, DualRailBit, LedrBit, NclSymbol, StreamPhase,
};
use cbist::kernel::{LogicLevel, NetId, SimTime};
use proptest::prelude::*;

use LogicLevel::{High, Low};

fn lv(b: bool) -> LogicLevel {
    LogicLevel::from_bool(b)
}

fn dr(hi: u8, lo: u8) -> DualRailBit {
    DualRailBit::new(lv(hi == 1), lv(lo == 1))
}

type Rails = (u8, u8);

/// `(val, phs) -> (user rails, test rails)` written out by hand.
const CONVERSION: [(Rails, Rails, Rails); 4] = [
    ((0, 0), (0, 0), (0, 1)),
    ((0, 1), (0, 1), (0, 0)),
    ((1, 0), (1, 0), (0, 0)),
    ((1, 1), (0, 0), (1, 0)),
];

#[test]
fn conversion_rows() {
    for ((v, p), (uh, ul), (th, tl)) in CONVERSION {
        let rails = LedrBit::new(lv(v == 1), lv(p == 1));
        assert_eq!(utd_to_fourphase(rails), (dr(uh, ul), dr(th, tl)), "row {v}{p}");
        let back = fourphase_to_utd(dr(uh, ul), dr(th, tl), LedrBit::new(Low, Low)).unwrap();
        assert_eq!(back, rails, "row {v}{p}");
    }
}

#[test]
fn both_streams_valid_is_rejected() {
    let r = fourphase_to_utd(DualRailBit::HI, DualRailBit::LO, LedrBit::new(Low, Low));
    assert_eq!(r, Err(CodecError::MutualExclusion));
}

#[test]
fn null_pair_holds_previous_rails() {
    let prev = LedrBit::new(High, Low);
    assert_eq!(fourphase_to_utd(DualRailBit::NULL, DualRailBit::NULL, prev), Ok(prev));
}

#[test]
fn illegal_dual_rail_codeword() {
    assert!(matches!(
        ncl_decode(DualRailBit::new(High, High)),
        Err(CodecError::IllegalCodeword { .. })
    ));
    assert_eq!(ncl_decode(DualRailBit::new(LogicLevel::Unknown, Low)), Err(CodecError::Unknown));
}

#[test]
fn completion_states() {
    assert_eq!(completion_detect(&ncl_encode_word(0b101, 3)), Ok(Completion::AllValid));
    assert_eq!(completion_detect(&[DualRailBit::NULL; 3]), Ok(Completion::AllNull));
    assert_eq!(
        completion_detect(&[DualRailBit::NULL, DualRailBit::HI]),
        Ok(Completion::Incomplete)
    );
}

#[test]
fn hex_uses_two_digits_per_byte() {
    assert_eq!(hex(0x9B, 8), "9B");
    assert_eq!(hex(0x3, 4), "03");
    assert_eq!(hex(0x1FF, 9), "01FF");
}

fn phase_strategy() -> impl Strategy<Value = StreamPhase> {
    prop_oneof![Just(StreamPhase::User), Just(StreamPhase::Test)]
}

proptest! {
    #[test]
    fn ledr_round_trip(bit in any::<bool>(), phase in phase_strategy()) {
        prop_assert_eq!(ledr_decode(ledr_encode(bit, phase)), (bit, phase));
    }

    #[test]
    fn ncl_round_trip(bit in any::<bool>()) {
        let s = NclSymbol::bit(bit);
        prop_assert_eq!(ncl_decode(ncl_encode(s)), Ok(s));
    }

    #[test]
    fn two_to_four_to_two(bit in any::<bool>(), phase in phase_strategy(), pv in any::<bool>(), pp in any::<bool>()) {
        let rails = ledr_encode(bit, phase);
        let (u, t) = utd_to_fourphase(rails);
        prop_assert!(u.is_null() ^ t.is_null());
        prop_assert_eq!(fourphase_to_utd(u, t, LedrBit::new(lv(pv), lv(pp))), Ok(rails));
    }

    #[test]
    fn word_parity_is_uniform(word in any::<u64>(), width in 1usize..=64, phase in phase_strategy()) {
        let bits = ledr_encode_word(word, width, phase);
        prop_assert_eq!(bits.len(), width);
        prop_assert!(bits.iter().all(|b| b.phase() == Some(phase)));
        let back = bits.iter().enumerate().fold(0u64, |w, (i, b)| w | (u64::from(b.val.is_high()) << i));
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        prop_assert_eq!(back, word & mask);
    }
}

/// Drives a bundled four-phase channel monitor through a scripted exchange.
fn bd4_replay(words: &[u64], glitch_at: Option<usize>) -> ChannelMonitor {
    let mut m = ChannelMonitor::new(ChannelKind::Bd4 {
        req: NetId(0),
        ack: NetId(1),
        data: (2..10).map(NetId).collect(),
        phase: StreamPhase::User,
    });
    let snap = |req: bool, ack: bool, d: u64| {
        let mut v = vec![lv(req), lv(ack)];
        v.extend((0..8).map(|i| lv(d >> i & 1 == 1)));
        v
    };
    let mut t: SimTime = 0;
    m.step(&snap(false, false, 0), t);
    for (i, &w) in words.iter().enumerate() {
        t += 1;
        m.step(&snap(false, false, w), t);
        t += 1;
        m.step(&snap(true, false, w), t);
        if glitch_at == Some(i) {
            t += 1;
            m.step(&snap(true, false, w ^ 1), t);
        }
        t += 1;
        m.step(&snap(true, true, w), t);
        t += 1;
        m.step(&snap(false, true, w), t);
        t += 1;
        m.step(&snap(false, false, w), t);
    }
    m
}

proptest! {
    #[test]
    fn bd4_monitor_records_every_clean_transfer(words in prop::collection::vec(0u64..256, 1..40)) {
        let r = bd4_replay(&words, None).into_report();
        prop_assert!(r.is_clean());
        prop_assert_eq!(r.values(), words);
    }

    #[test]
    fn bd4_monitor_flags_data_changes_during_request(words in prop::collection::vec(0u64..256, 1..20), at in 0usize..20) {
        let at = at % words.len();
        let r = bd4_replay(&words, Some(at)).into_report();
        prop_assert!(r.violations.iter().any(|v| v.rule == "bd4.data_instability"));
    }
}

#[test]
fn ledr_monitor_alternates_and_flags_torn_words() {
    let rails: Vec<(NetId, NetId)> = (0..2).map(|i| (NetId(1 + 2 * i), NetId(2 + 2 * i))).collect();
    let kind = ChannelKind::Ledr2 { rails, ack: NetId(0) };
    let snap = |ack: bool, word: u64, phase: StreamPhase| {
        let mut v = vec![lv(ack)];
        for b in ledr_encode_word(word, 2, phase) {
            v.push(b.val);
            v.push(b.phs);
        }
        v
    };
    let mut m = ChannelMonitor::new(kind.clone());
    m.step(&snap(false, 0, StreamPhase::Test), 0);
    let seq = [(2, StreamPhase::User), (1, StreamPhase::Test), (3, StreamPhase::User)];
    let mut ack = false;
    for (i, &(w, p)) in seq.iter().enumerate() {
        let t = 10 * (i as SimTime + 1);
        m.step(&snap(ack, w, p), t);
        ack = !ack;
        m.step(&snap(ack, w, p), t + 5);
    }
    let r = m.into_report();
    assert!(r.is_clean(), "{:?}", r.violations);
    let phases: Vec<StreamPhase> = r.words.iter().map(|w| w.phase).collect();
    assert_eq!(phases, vec![StreamPhase::User, StreamPhase::Test, StreamPhase::User]);
    assert_eq!(r.values(), vec![2, 1, 3]);

    let mut m = ChannelMonitor::new(kind);
    m.step(&snap(false, 0, StreamPhase::Test), 0);
    let mut torn = snap(false, 0, StreamPhase::Test);
    let user = snap(false, 3, StreamPhase::User);
    torn[1] = user[1];
    torn[2] = user[2];
    m.step(&torn, 10);
    torn[0] = High;
    m.step(&torn, 15);
    let r = m.into_report();
    assert!(r.violations.iter().any(|v| v.rule == "ledr.phase_tear"));
}
