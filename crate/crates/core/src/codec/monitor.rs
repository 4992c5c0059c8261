//! Protocol-conformance monitors. They only read the trace.

use std::fmt::Write as _;

use serde::Serialize;

use super::words::StreamPhase;
use crate::kernel::{LogicLevel, NetId, SimTime, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub time: SimTime,
    pub rule: &'static str,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WordRecord {
    pub phase: StreamPhase,
    pub value: u64,
    pub time: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MonitorReport {
    pub violations: Vec<Violation>,
    pub transfers: usize,
    pub words: Vec<WordRecord>,
}

impl MonitorReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn values(&self) -> Vec<u64> {
        self.words.iter().map(|w| w.value).collect()
    }

    pub fn to_text(&self, channel: &str, width: usize) -> String {
        let mut s = format!(
            "channel {channel}: {} transfers, {} violations\n",
            self.transfers,
            self.violations.len()
        );
        for v in &self.violations {
            let _ = writeln!(s, "  t={} {} {}", v.time, v.rule, v.description);
        }
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(s, "  word {i} {} {} t={}", w.phase, hex(w.value, width), w.time);
        }
        s
    }

    pub fn violations_csv(&self) -> String {
        let mut s = String::from("time,rule,description\n");
        for v in &self.violations {
            let _ = writeln!(s, "{},{},\"{}\"", v.time, v.rule, v.description.replace('"', "'"));
        }
        s
    }

    pub fn words_csv(&self, width: usize) -> String {
        let mut s = String::from("index,phase,value,time\n");
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", w.phase, hex(w.value, width), w.time);
        }
        s
    }

    fn violate(&mut self, time: SimTime, rule: &'static str, description: impl Into<String>) {
        self.violations.push(Violation {
            time,
            rule,
            description: description.into(),
        });
    }

    fn complete(&mut self, phase: StreamPhase, value: u64, time: SimTime) {
        self.transfers += 1;
        self.words.push(WordRecord { phase, value, time });
    }
}

/// Upper-case hex, two digits per started byte.
pub fn hex(value: u64, width: usize) -> String {
    let digits = width.div_ceil(8).max(1) * 2;
    format!("{value:0digits$X}")
}

/// Channel wiring understood by [`ChannelMonitor`]. Data nets are listed
/// least significant bit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelKind {
    /// Four-phase bundled data; every word belongs to `phase`.
    Bd4 {
        req: NetId,
        ack: NetId,
        data: Vec<NetId>,
        phase: StreamPhase,
    },
    /// Four-phase dual-rail with NULL spacers; rails are `(hi, lo)`.
    Ncl4 {
        rails: Vec<(NetId, NetId)>,
        ack: NetId,
        phase: StreamPhase,
    },
    /// Two-phase bundled data; a word is USER when REQ is high.
    Bd2 {
        req: NetId,
        ack: NetId,
        data: Vec<NetId>,
    },
    /// Two-phase level-encoded dual-rail; rails are `(val, phs)`.
    Ledr2 {
        rails: Vec<(NetId, NetId)>,
        ack: NetId,
    },
}

impl ChannelKind {
    /// Nets in snapshot order.
    pub fn nets(&self) -> Vec<NetId> {
        match self {
            ChannelKind::Bd4 { req, ack, data, .. } | ChannelKind::Bd2 { req, ack, data } => {
                let mut v = vec![*req, *ack];
                v.extend(data);
                v
            }
            ChannelKind::Ncl4 { rails, ack, .. } | ChannelKind::Ledr2 { rails, ack } => {
                let mut v = vec![*ack];
                v.extend(rails.iter().flat_map(|&(a, b)| [a, b]));
                v
            }
        }
    }

    pub fn width(&self) -> usize {
        match self {
            ChannelKind::Bd4 { data, .. } | ChannelKind::Bd2 { data, .. } => data.len(),
            ChannelKind::Ncl4 { rails, .. } | ChannelKind::Ledr2 { rails, .. } => rails.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FourPhase {
    /// REQ low, ACK low (BD) / waiting for a valid codeword (NCL).
    Idle,
    /// REQ high or codeword valid, ACK low.
    Offered,
    /// ACK high, waiting for REQ low / NULL.
    Acked,
    /// REQ low or NULL, ACK still high.
    Released,
}

#[derive(Debug, Clone)]
enum State {
    Fresh,
    Four(FourPhase),
    Bd2 { pending: bool },
    Ledr {
        /// Parity of the last complete word (true = odd = user).
        parity: bool,
        complete: bool,
        word: u64,
    },
}

#[derive(Debug, Clone)]
pub struct ChannelMonitor {
    kind: ChannelKind,
    nets: Vec<NetId>,
    prev: Vec<LogicLevel>,
    state: State,
    report: MonitorReport,
}

fn bits(levels: &[LogicLevel]) -> u64 {
    levels
        .iter()
        .enumerate()
        .fold(0, |w, (i, l)| w | (u64::from(l.is_high()) << i))
}

fn rose(prev: LogicLevel, now: LogicLevel) -> bool {
    prev.is_low() && now.is_high()
}

fn fell(prev: LogicLevel, now: LogicLevel) -> bool {
    prev.is_high() && now.is_low()
}

impl ChannelMonitor {
    pub fn new(kind: ChannelKind) -> Self {
        let nets = kind.nets();
        ChannelMonitor {
            prev: vec![LogicLevel::Unknown; nets.len()],
            nets,
            kind,
            state: State::Fresh,
            report: MonitorReport::default(),
        }
    }

    pub fn nets(&self) -> &[NetId] {
        &self.nets
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn report(&self) -> &MonitorReport {
        &self.report
    }

    pub fn into_report(self) -> MonitorReport {
        self.report
    }

    /// Replays the channel's nets from a finished trace.
    pub fn observe(mut self, trace: &Trace) -> MonitorReport {
        for (t, snap) in trace.snapshots(&self.nets.clone()) {
            self.step(&snap, t);
        }
        self.report
    }

    /// Replays the trace and also reports whether a transfer was left
    /// offered but unacknowledged at the end.
    pub fn observe_with_state(mut self, trace: &Trace) -> (MonitorReport, bool) {
        for (t, snap) in trace.snapshots(&self.nets.clone()) {
            self.step(&snap, t);
        }
        let pending = self.pending();
        (self.report, pending)
    }

    /// True while a transfer is offered and not yet acknowledged.
    pub fn pending(&self) -> bool {
        match self.state {
            State::Fresh => false,
            State::Four(st) => st == FourPhase::Offered,
            State::Bd2 { pending } => pending,
            State::Ledr { complete, parity, .. } => {
                complete || ledr_parities(&self.prev[1..]).iter().any(|&p| p != parity)
            }
        }
    }

    /// Feeds one joint snapshot of the channel nets (in [`ChannelKind::nets`]
    /// order) taken at time `t`.
    pub fn step(&mut self, snap: &[LogicLevel], t: SimTime) {
        debug_assert_eq!(snap.len(), self.nets.len());
        if snap == self.prev.as_slice() {
            return;
        }
        if matches!(self.state, State::Fresh) {
            if snap.iter().all(|l| l.is_known()) {
                self.init(snap);
                self.prev = snap.to_vec();
            }
            return;
        }
        let prev = std::mem::replace(&mut self.prev, snap.to_vec());
        match self.kind {
            ChannelKind::Bd4 { phase, .. } => self.step_bd4(&prev, snap, t, phase),
            ChannelKind::Ncl4 { phase, .. } => self.step_ncl4(&prev, snap, t, phase),
            ChannelKind::Bd2 { .. } => self.step_bd2(&prev, snap, t),
            ChannelKind::Ledr2 { .. } => self.step_ledr(&prev, snap, t),
        }
    }

    fn init(&mut self, snap: &[LogicLevel]) {
        self.state = match &self.kind {
            ChannelKind::Bd4 { .. } => State::Four(match (snap[0].is_high(), snap[1].is_high()) {
                (false, false) => FourPhase::Idle,
                (true, false) => FourPhase::Offered,
                (true, true) => FourPhase::Acked,
                (false, true) => FourPhase::Released,
            }),
            ChannelKind::Ncl4 { .. } => {
                let ack = snap[0].is_high();
                let (valid, null) = ncl_census(&snap[1..]);
                State::Four(match (ack, valid, null) {
                    (false, true, _) => FourPhase::Offered,
                    (false, _, _) => FourPhase::Idle,
                    (true, _, true) => FourPhase::Released,
                    (true, _, _) => FourPhase::Acked,
                })
            }
            ChannelKind::Bd2 { .. } => State::Bd2 {
                pending: snap[0] != snap[1],
            },
            ChannelKind::Ledr2 { .. } => {
                let pars = ledr_parities(&snap[1..]);
                let odd = pars.iter().filter(|&&p| p).count();
                State::Ledr {
                    parity: odd * 2 > pars.len(),
                    complete: false,
                    word: 0,
                }
            }
        };
    }

    fn step_bd4(&mut self, prev: &[LogicLevel], snap: &[LogicLevel], t: SimTime, phase: StreamPhase) {
        let State::Four(mut st) = self.state else {
            return;
        };
        let (req_up, req_dn) = (rose(prev[0], snap[0]), fell(prev[0], snap[0]));
        let (ack_up, ack_dn) = (rose(prev[1], snap[1]), fell(prev[1], snap[1]));
        let data_changed = prev[2..] != snap[2..];
        if data_changed && st == FourPhase::Offered && !req_up {
            self.report.violate(
                t,
                "bd4.data_instability",
                format!(
                    "data changed from {} to {} while REQ high and ACK low",
                    hex(bits(&prev[2..]), snap.len() - 2),
                    hex(bits(&snap[2..]), snap.len() - 2)
                ),
            );
        }
        if req_up || req_dn {
            match (st, req_up) {
                (FourPhase::Idle, true) => st = FourPhase::Offered,
                (FourPhase::Acked, false) => st = FourPhase::Released,
                _ => self.report.violate(
                    t,
                    "bd4.req_order",
                    format!("REQ {} out of sequence", if req_up { "rose" } else { "fell" }),
                ),
            }
        }
        if ack_up || ack_dn {
            match (st, ack_up) {
                (FourPhase::Offered, true) => {
                    st = FourPhase::Acked;
                    self.report.complete(phase, bits(&prev[2..]), t);
                }
                (FourPhase::Released, false) => st = FourPhase::Idle,
                _ => self.report.violate(
                    t,
                    "bd4.ack_order",
                    format!("ACK {} out of sequence", if ack_up { "rose" } else { "fell" }),
                ),
            }
        }
        self.state = State::Four(st);
    }

    fn step_ncl4(&mut self, prev: &[LogicLevel], snap: &[LogicLevel], t: SimTime, phase: StreamPhase) {
        let State::Four(mut st) = self.state else {
            return;
        };
        let rails = &snap[1..];
        let prails = &prev[1..];
        for (i, c) in rails.chunks(2).enumerate() {
            let p = &prails[2 * i..2 * i + 2];
            if c[0].is_high() && c[1].is_high() && !(p[0].is_high() && p[1].is_high()) {
                self.report
                    .violate(t, "ncl.illegal_codeword", format!("bit {i} has both rails high"));
            }
        }
        let any_rise = rails.iter().zip(prails).any(|(&n, &p)| rose(p, n));
        let any_fall = rails.iter().zip(prails).any(|(&n, &p)| fell(p, n));
        let (valid, null) = ncl_census(rails);
        let (ack_up, ack_dn) = (rose(prev[0], snap[0]), fell(prev[0], snap[0]));

        match st {
            FourPhase::Idle | FourPhase::Offered if any_fall => self.report.violate(
                t,
                "ncl.data_instability",
                "rail withdrawn before acknowledge",
            ),
            FourPhase::Acked | FourPhase::Released if any_rise => self.report.violate(
                t,
                "ncl.alternation",
                "rail raised before NULL spacer was acknowledged",
            ),
            _ => {}
        }
        if st == FourPhase::Idle && valid {
            st = FourPhase::Offered;
            self.report.complete(phase, first_rail_value(rails), t);
        } else if st == FourPhase::Acked && null {
            st = FourPhase::Released;
        }
        if ack_up || ack_dn {
            match (st, ack_up) {
                (FourPhase::Offered, true) => st = FourPhase::Acked,
                (FourPhase::Released, false) => st = FourPhase::Idle,
                _ => self.report.violate(
                    t,
                    "ncl.ack_order",
                    format!(
                        "ACK {} before the codeword was {}",
                        if ack_up { "rose" } else { "fell" },
                        if ack_up { "complete" } else { "NULL" }
                    ),
                ),
            }
        }
        self.state = State::Four(st);
    }

    fn step_bd2(&mut self, prev: &[LogicLevel], snap: &[LogicLevel], t: SimTime) {
        let State::Bd2 { mut pending } = self.state else {
            return;
        };
        let req_t = prev[0] != snap[0];
        let ack_t = prev[1] != snap[1];
        if pending && !req_t && prev[2..] != snap[2..] {
            self.report.violate(
                t,
                "bd2.data_instability",
                format!(
                    "data changed from {} to {} during a pending transfer",
                    hex(bits(&prev[2..]), snap.len() - 2),
                    hex(bits(&snap[2..]), snap.len() - 2)
                ),
            );
        }
        if req_t {
            if pending {
                self.report
                    .violate(t, "bd2.overrun", "REQ toggled before previous transfer was acknowledged");
            }
            pending = true;
        }
        if ack_t {
            if pending {
                let phase = if snap[0].is_high() {
                    StreamPhase::User
                } else {
                    StreamPhase::Test
                };
                let data = if req_t { &snap[2..] } else { &prev[2..] };
                self.report.complete(phase, bits(data), t);
                pending = false;
            } else {
                self.report
                    .violate(t, "bd2.spurious_ack", "ACK toggled with no transfer pending");
            }
        }
        self.state = State::Bd2 { pending };
    }

    fn step_ledr(&mut self, prev: &[LogicLevel], snap: &[LogicLevel], t: SimTime) {
        let State::Ledr {
            mut parity,
            mut complete,
            mut word,
        } = self.state
        else {
            return;
        };
        let now = ledr_parities(&snap[1..]);
        let before = ledr_parities(&prev[1..]);
        let target = !parity;
        let rails_changed = prev[1..] != snap[1..];
        let ack_t = prev[0] != snap[0];

        if rails_changed {
            if complete {
                self.report.violate(
                    t,
                    "ledr.overrun",
                    "rails changed before the completed word was acknowledged",
                );
            } else {
                for (i, (&b, &n)) in before.iter().zip(&now).enumerate() {
                    if b == target && n != target {
                        self.report.violate(
                            t,
                            "ledr.parity_reversal",
                            format!("bit {i} reverted to the previous phase"),
                        );
                    }
                }
            }
            if !complete && now.iter().all(|&p| p == target) {
                complete = true;
                word = first_rail_value(&snap[1..]);
            }
        }
        if ack_t {
            let arrived = now.iter().filter(|&&p| p == target).count();
            if complete {
                let phase = if target {
                    StreamPhase::User
                } else {
                    StreamPhase::Test
                };
                self.report.complete(phase, word, t);
                parity = target;
                complete = false;
            } else if arrived > 0 {
                self.report.violate(
                    t,
                    "ledr.phase_tear",
                    format!(
                        "acknowledged with mixed parity ({arrived} of {} bits in the new phase)",
                        now.len()
                    ),
                );
            } else {
                self.report
                    .violate(t, "ledr.spurious_ack", "ACK toggled with no word present");
            }
        }
        self.state = State::Ledr {
            parity,
            complete,
            word,
        };
    }
}

fn ncl_census(rails: &[LogicLevel]) -> (bool, bool) {
    let mut valid = true;
    let mut null = true;
    for c in rails.chunks(2) {
        let v = c[0].is_high() ^ c[1].is_high();
        let z = c[0].is_low() && c[1].is_low();
        valid &= v;
        null &= z;
    }
    (valid, null)
}

fn first_rail_value(rails: &[LogicLevel]) -> u64 {
    rails
        .chunks(2)
        .enumerate()
        .fold(0, |w, (i, c)| w | (u64::from(c[0].is_high()) << i))
}

fn ledr_parities(rails: &[LogicLevel]) -> Vec<bool> {
    rails
        .chunks(2)
        .map(|c| c[0].is_high() ^ c[1].is_high())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicLevel::*;

    fn bd4() -> ChannelMonitor {
        ChannelMonitor::new(ChannelKind::Bd4 {
            req: NetId(0),
            ack: NetId(1),
            data: vec![NetId(2), NetId(3)],
            phase: StreamPhase::User,
        })
    }

    #[test]
    fn bd4_clean_exchange() {
        let mut m = bd4();
        m.step(&[Low, Low, Low, Low], 0);
        m.step(&[Low, Low, High, Low], 1);
        m.step(&[High, Low, High, Low], 3);
        m.step(&[High, High, High, Low], 5);
        m.step(&[Low, High, High, Low], 6);
        m.step(&[Low, Low, High, Low], 7);
        let r = m.into_report();
        assert!(r.is_clean(), "{:?}", r.violations);
        assert_eq!(r.transfers, 1);
        assert_eq!(r.values(), vec![1]);
    }

    #[test]
    fn bd4_data_instability() {
        let mut m = bd4();
        m.step(&[Low, Low, Low, Low], 0);
        m.step(&[High, Low, High, Low], 3);
        m.step(&[High, Low, High, High], 4);
        m.step(&[High, High, High, High], 5);
        let r = m.into_report();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, "bd4.data_instability");
    }

    #[test]
    fn ledr_phase_tear() {
        let mut m = ChannelMonitor::new(ChannelKind::Ledr2 {
            rails: vec![(NetId(1), NetId(2)), (NetId(3), NetId(4))],
            ack: NetId(0),
        });
        m.step(&[Low, Low, Low, Low, Low], 0);
        // bit 0 moves to USER, bit 1 lags behind the acknowledge
        m.step(&[Low, High, Low, Low, Low], 2);
        m.step(&[High, High, Low, Low, Low], 3);
        let r = m.into_report();
        assert_eq!(r.violations[0].rule, "ledr.phase_tear");
    }

    #[test]
    fn ledr_two_words() {
        let mut m = ChannelMonitor::new(ChannelKind::Ledr2 {
            rails: vec![(NetId(1), NetId(2))],
            ack: NetId(0),
        });
        m.step(&[Low, Low, Low], 0);
        m.step(&[Low, High, Low], 1);
        m.step(&[High, High, Low], 2);
        m.step(&[High, High, High], 3);
        m.step(&[Low, High, High], 4);
        let r = m.into_report();
        assert!(r.is_clean());
        assert_eq!(
            r.words.iter().map(|w| (w.phase, w.value)).collect::<Vec<_>>(),
            vec![(StreamPhase::User, 1), (StreamPhase::Test, 1)]
        );
    }

    #[test]
    fn ncl_illegal_and_alternation() {
        let mut m = ChannelMonitor::new(ChannelKind::Ncl4 {
            rails: vec![(NetId(1), NetId(2))],
            ack: NetId(0),
            phase: StreamPhase::Test,
        });
        m.step(&[Low, Low, Low], 0);
        m.step(&[Low, High, Low], 1);
        m.step(&[High, High, Low], 2);
        m.step(&[High, High, High], 3);
        let r = m.into_report();
        assert_eq!(r.transfers, 1);
        let rules: Vec<_> = r.violations.iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"ncl.illegal_codeword"));
        assert!(rules.contains(&"ncl.alternation"));
    }

    #[test]
    fn hex_formatting() {
        assert_eq!(hex(0x9B, 8), "9B");
        assert_eq!(hex(0x3, 2), "03");
        assert_eq!(hex(0x1FF, 9), "01FF");
    }
}
