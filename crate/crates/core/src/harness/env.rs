//! Environment processes: four-phase sources and sinks for both encodings,
//! and the response analyzer.

use std::sync::{Arc, Mutex};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kernel::{LogicLevel, NetId, Reactor, ReactorIo, SimTime};

use LogicLevel::{High, Low};

/// Words observed by a sink, with the tick at which each was acknowledged.
pub type WordLog = Arc<Mutex<Vec<(u64, SimTime)>>>;

/// Analyzer mismatch: (response index, expected, got, time).
pub type Mismatch = (usize, u64, u64, SimTime);

pub type MismatchLog = Arc<Mutex<Vec<Mismatch>>>;

/// Response latency of an environment process, uniform in `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Latency {
    lo: SimTime,
    hi: SimTime,
    rng: ChaCha8Rng,
}

impl Latency {
    pub fn new(lo: SimTime, hi: SimTime, seed: u64) -> Self {
        Latency {
            lo: lo.max(1),
            hi: hi.max(lo.max(1)),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn fixed(t: SimTime) -> Self {
        Self::new(t, t, 0)
    }

    pub fn draw(&mut self) -> SimTime {
        if self.lo == self.hi {
            self.lo
        } else {
            self.rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Ordered words offered by a source.
#[derive(Debug, Clone)]
pub struct WordFeed {
    words: Vec<u64>,
    repeat: bool,
    next: usize,
}

impl WordFeed {
    pub fn new(words: Vec<u64>, repeat: bool) -> Self {
        WordFeed {
            words,
            repeat,
            next: 0,
        }
    }

    /// Word number `i` of the stream, if it exists.
    pub fn word(&self, i: usize) -> Option<u64> {
        if self.words.is_empty() {
            None
        } else if self.repeat {
            Some(self.words[i % self.words.len()])
        } else {
            self.words.get(i).copied()
        }
    }
}

impl Iterator for WordFeed {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let w = self.word(self.next)?;
        self.next += 1;
        Some(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SrcState {
    /// Waiting for the acknowledge to return low.
    WaitRelease,
    Offering,
    Withdrawing,
    Done,
}

/// Four-phase bundled-data source: data first, request after a setup time.
pub struct Bd4Source {
    req: NetId,
    ack: NetId,
    data: Vec<NetId>,
    feed: WordFeed,
    lat: Latency,
    driven: u64,
    state: SrcState,
}

impl Bd4Source {
    pub fn new(req: NetId, ack: NetId, data: Vec<NetId>, feed: WordFeed, lat: Latency) -> Self {
        Bd4Source {
            req,
            ack,
            data,
            feed,
            lat,
            driven: 0,
            state: SrcState::WaitRelease,
        }
    }

    fn offer(&mut self, io: &mut ReactorIo<'_>) {
        let Some(w) = self.feed.next() else {
            self.state = SrcState::Done;
            return;
        };
        let t = self.lat.draw();
        for (i, &n) in self.data.iter().enumerate() {
            let b = w >> i & 1 == 1;
            if b != (self.driven >> i & 1 == 1) {
                io.drive(n, LogicLevel::from_bool(b), t);
            }
        }
        self.driven = w;
        let setup = self.lat.draw();
        io.drive(self.req, High, t + setup);
        self.state = SrcState::Offering;
    }
}

impl Reactor for Bd4Source {
    fn drives(&self) -> Vec<NetId> {
        let mut v = vec![self.req];
        v.extend(&self.data);
        v
    }

    fn watches(&self) -> Vec<NetId> {
        vec![self.ack]
    }

    fn start(&mut self, io: &mut ReactorIo<'_>) {
        if io.is_high(self.ack) {
            self.state = SrcState::WaitRelease;
        } else {
            self.offer(io);
        }
    }

    fn react(&mut self, io: &mut ReactorIo<'_>) {
        let ack = io.is_high(self.ack);
        match self.state {
            SrcState::Offering if ack => {
                let t = self.lat.draw();
                io.drive(self.req, Low, t);
                self.state = SrcState::Withdrawing;
            }
            SrcState::Withdrawing | SrcState::WaitRelease if !ack => self.offer(io),
            _ => {}
        }
    }
}

/// Four-phase dual-rail source: each rail rises and falls after its own
/// latency, with NULL spacers between words.
pub struct Ncl4Source {
    rails: Vec<(NetId, NetId)>,
    ack: NetId,
    feed: WordFeed,
    lat: Latency,
    raised: Vec<NetId>,
    state: SrcState,
}

impl Ncl4Source {
    pub fn new(rails: Vec<(NetId, NetId)>, ack: NetId, feed: WordFeed, lat: Latency) -> Self {
        Ncl4Source {
            rails,
            ack,
            feed,
            lat,
            raised: Vec::new(),
            state: SrcState::WaitRelease,
        }
    }

    fn offer(&mut self, io: &mut ReactorIo<'_>) {
        let Some(w) = self.feed.next() else {
            self.state = SrcState::Done;
            return;
        };
        self.raised.clear();
        for (i, &(hi, lo)) in self.rails.iter().enumerate() {
            let rail = if w >> i & 1 == 1 { hi } else { lo };
            let t = self.lat.draw();
            io.drive(rail, High, t);
            self.raised.push(rail);
        }
        self.state = SrcState::Offering;
    }
}

impl Reactor for Ncl4Source {
    fn drives(&self) -> Vec<NetId> {
        self.rails.iter().flat_map(|&(h, l)| [h, l]).collect()
    }

    fn watches(&self) -> Vec<NetId> {
        vec![self.ack]
    }

    fn start(&mut self, io: &mut ReactorIo<'_>) {
        if io.is_high(self.ack) {
            self.state = SrcState::WaitRelease;
        } else {
            self.offer(io);
        }
    }

    fn react(&mut self, io: &mut ReactorIo<'_>) {
        let ack = io.is_high(self.ack);
        match self.state {
            SrcState::Offering if ack => {
                for i in 0..self.raised.len() {
                    let t = self.lat.draw();
                    io.drive(self.raised[i], Low, t);
                }
                self.state = SrcState::Withdrawing;
            }
            SrcState::Withdrawing | SrcState::WaitRelease if !ack => self.offer(io),
            _ => {}
        }
    }
}

/// Comparison against expected responses, raising a sticky flag on the
/// first mismatch.
pub struct Comparator {
    pub expected: WordFeed,
    pub flag: NetId,
    pub raised: bool,
    pub mismatches: MismatchLog,
}

impl Comparator {
    fn check(&mut self, index: usize, got: u64, io: &mut ReactorIo<'_>) {
        let exp = self.expected.word(index);
        if exp != Some(got) {
            self.mismatches
                .lock()
                .expect("mismatch log")
                .push((index, exp.unwrap_or(u64::MAX), got, io.now()));
            if !self.raised {
                self.raised = true;
                io.drive(self.flag, High, 0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SinkState {
    Idle,
    Acking,
    Acked,
    Releasing,
}

/// How a sink recognises a word.
pub enum SinkWires {
    Bundled { req: NetId, data: Vec<NetId> },
    DualRail { rails: Vec<(NetId, NetId)> },
}

/// Four-phase sink for either encoding. Samples the word when its own
/// acknowledge rises; optionally compares it (response analyzer).
pub struct Sink {
    wires: SinkWires,
    ack: NetId,
    lat: Latency,
    log: WordLog,
    cmp: Option<Comparator>,
    state: SinkState,
    count: usize,
}

impl Sink {
    pub fn new(wires: SinkWires, ack: NetId, lat: Latency, log: WordLog, cmp: Option<Comparator>) -> Self {
        Sink {
            wires,
            ack,
            lat,
            log,
            cmp,
            state: SinkState::Idle,
            count: 0,
        }
    }

    /// `Some(true)` when a word is offered, `Some(false)` when the channel
    /// has returned to zero, `None` in between.
    fn offered(&self, io: &ReactorIo<'_>) -> Option<bool> {
        match &self.wires {
            SinkWires::Bundled { req, .. } => Some(io.is_high(*req)),
            SinkWires::DualRail { rails } => {
                let mut valid = true;
                let mut null = true;
                for &(h, l) in rails {
                    let (h, l) = (io.is_high(h), io.is_high(l));
                    valid &= h ^ l;
                    null &= !h && !l;
                }
                if valid {
                    Some(true)
                } else if null {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    fn sample(&self, io: &ReactorIo<'_>) -> u64 {
        let nets: Vec<NetId> = match &self.wires {
            SinkWires::Bundled { data, .. } => data.clone(),
            SinkWires::DualRail { rails } => rails.iter().map(|&(h, _)| h).collect(),
        };
        nets.iter()
            .enumerate()
            .fold(0, |w, (i, &n)| w | (u64::from(io.is_high(n)) << i))
    }
}

impl Reactor for Sink {
    fn drives(&self) -> Vec<NetId> {
        let mut v = vec![self.ack];
        if let Some(c) = &self.cmp {
            v.push(c.flag);
        }
        v
    }

    fn watches(&self) -> Vec<NetId> {
        let mut v = vec![self.ack];
        match &self.wires {
            SinkWires::Bundled { req, .. } => v.push(*req),
            SinkWires::DualRail { rails } => v.extend(rails.iter().flat_map(|&(h, l)| [h, l])),
        }
        v
    }

    fn start(&mut self, io: &mut ReactorIo<'_>) {
        self.state = if io.is_high(self.ack) {
            SinkState::Acked
        } else {
            SinkState::Idle
        };
        self.react(io);
    }

    fn react(&mut self, io: &mut ReactorIo<'_>) {
        let ack = io.is_high(self.ack);
        let offered = self.offered(io);
        match self.state {
            SinkState::Idle if offered == Some(true) => {
                let t = self.lat.draw();
                io.drive(self.ack, High, t);
                self.state = SinkState::Acking;
            }
            SinkState::Acking if ack => {
                let w = self.sample(io);
                self.log.lock().expect("word log").push((w, io.now()));
                if let Some(c) = self.cmp.as_mut() {
                    c.check(self.count, w, io);
                }
                self.count += 1;
                self.state = SinkState::Acked;
                if offered == Some(false) {
                    self.react(io);
                }
            }
            SinkState::Acked if offered == Some(false) => {
                let t = self.lat.draw();
                io.drive(self.ack, Low, t);
                self.state = SinkState::Releasing;
            }
            SinkState::Releasing if !ack => {
                self.state = SinkState::Idle;
                if offered == Some(true) {
                    self.react(io);
                }
            }
            _ => {}
        }
    }
}
