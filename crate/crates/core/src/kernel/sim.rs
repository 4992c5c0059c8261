//! Event-driven simulation engine.
//!
//! Events are processed in nondecreasing time; ties are broken by insertion
//! order. All events of one instant that are already queued form a delta
//! batch: they are applied together (last write per net wins), then the
//! fan-out gates of every changed net are re-evaluated, then environment
//! reactors watching those nets are called. Zero-delay consequences form the
//! next delta batch at the same instant.
//!
//! Gate outputs use inertial delay: a scheduled output change that is
//! contradicted by a later evaluation before it matures is cancelled.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::error::SimError;
use super::level::{GateId, LogicLevel, NetId, SimTime};
use super::netlist::Netlist;
use super::primitive::{eval_unchecked, GateKind};
use super::trace::Trace;

pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

/// A timed level change on one net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub net: NetId,
    pub level: LogicLevel,
}

impl Event {
    pub fn new(time: SimTime, net: NetId, level: LogicLevel) -> Self {
        Event { time, net, level }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub event_budget: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// An environment process co-simulated with the netlist.
///
/// A reactor owns a set of environment-driven nets and is woken whenever one
/// of its watched nets changes.
pub trait Reactor: Send {
    fn drives(&self) -> Vec<NetId>;
    fn watches(&self) -> Vec<NetId>;
    /// Called once at t=0 after reset settling.
    fn start(&mut self, io: &mut ReactorIo<'_>);
    fn react(&mut self, io: &mut ReactorIo<'_>);
}

pub struct ReactorIo<'a> {
    now: SimTime,
    levels: &'a [LogicLevel],
    drives: &'a mut Vec<(NetId, LogicLevel, SimTime)>,
}

impl ReactorIo<'_> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn level(&self, net: NetId) -> LogicLevel {
        self.levels[net.index()]
    }

    pub fn is_high(&self, net: NetId) -> bool {
        self.levels[net.index()].is_high()
    }

    /// Schedules `net` to `level` after `delay` ticks (transport semantics).
    pub fn drive(&mut self, net: NetId, level: LogicLevel, delay: SimTime) {
        self.drives.push((net, level, delay));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Queued {
    time: SimTime,
    seq: u64,
    net: NetId,
    level: LogicLevel,
    /// 0 for environment events, otherwise the pending-output token.
    token: u64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    token: u64,
    level: LogicLevel,
}

pub struct Simulator {
    netlist: Netlist,
    config: SimConfig,
    fanout: Vec<Vec<GateId>>,
    values: Vec<LogicLevel>,
    held: Vec<LogicLevel>,
    last_trigger: Vec<LogicLevel>,
    pending: Vec<Option<Pending>>,
    clamp: Vec<Option<(LogicLevel, SimTime)>>,
    heap: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    next_token: u64,
    now: SimTime,
    started: bool,
    trace: Trace,
    reactors: Vec<Box<dyn Reactor>>,
    watchers: Vec<Vec<usize>>,
    owner: Vec<Option<usize>>,
    events: u64,
    toggles: Vec<u64>,
    // scratch
    scratch: Vec<LogicLevel>,
    touched: Vec<NetId>,
    touched_mark: Vec<bool>,
    gate_stamp: Vec<u64>,
    reactor_stamp: Vec<u64>,
    epoch: u64,
    inputs_buf: Vec<LogicLevel>,
    drives_buf: Vec<(NetId, LogicLevel, SimTime)>,
}

impl Simulator {
    /// Validates the netlist and settles its reset state.
    pub fn new(netlist: &Netlist, config: SimConfig) -> Result<Self, SimError> {
        netlist.check_cycles()?;
        let n = netlist.net_count();
        let gates = netlist.gates();
        for g in gates {
            if g.kind.is_sequential() && !netlist.nets()[g.output.index()].init.is_known() {
                return Err(SimError::MissingInitialState {
                    net: netlist.net_name(g.output).to_string(),
                });
            }
        }
        let mut fanout = vec![Vec::new(); n];
        for (i, g) in gates.iter().enumerate() {
            for &inp in &g.inputs {
                let list: &mut Vec<GateId> = &mut fanout[inp.index()];
                if list.last() != Some(&GateId(i as u32)) {
                    list.push(GateId(i as u32));
                }
            }
        }
        let mut values: Vec<LogicLevel> = netlist.nets().iter().map(|n| n.init).collect();
        let mut clamp = vec![None; n];
        for c in netlist.clamps() {
            clamp[c.net.index()] = Some((c.level, c.from));
            if c.from == 0 {
                values[c.net.index()] = c.level;
            }
        }
        settle(netlist, &fanout, &clamp, &mut values)?;

        let held: Vec<LogicLevel> = gates.iter().map(|g| values[g.output.index()]).collect();
        let last_trigger: Vec<LogicLevel> = gates
            .iter()
            .map(|g| match g.kind {
                GateKind::Capture => values[g.inputs[1].index()],
                _ => LogicLevel::Unknown,
            })
            .collect();

        let mut trace = Trace::new(netlist.nets().iter().map(|n| n.name.clone()).collect());
        for (i, &v) in values.iter().enumerate() {
            if v.is_known() {
                trace.record(NetId(i as u32), 0, v);
            }
        }

        let mut sim = Simulator {
            netlist: netlist.clone(),
            config,
            fanout,
            values,
            held,
            last_trigger,
            pending: vec![None; n],
            clamp,
            heap: BinaryHeap::new(),
            seq: 0,
            next_token: 1,
            now: 0,
            started: false,
            trace,
            reactors: Vec::new(),
            watchers: vec![Vec::new(); n],
            owner: vec![None; n],
            events: 0,
            toggles: vec![0; n],
            scratch: vec![LogicLevel::Unknown; n],
            touched: Vec::new(),
            touched_mark: vec![false; n],
            gate_stamp: vec![0; gates.len()],
            reactor_stamp: Vec::new(),
            epoch: 0,
            inputs_buf: Vec::with_capacity(8),
            drives_buf: Vec::new(),
        };
        for c in netlist.clamps() {
            if c.from > 0 {
                sim.push(c.from, c.net, c.level, 0);
            }
        }
        Ok(sim)
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn level(&self, net: NetId) -> LogicLevel {
        self.values[net.index()]
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Registers an environment process. Its driven nets must have no gate
    /// driver and no other reactor.
    pub fn add_reactor(&mut self, reactor: Box<dyn Reactor>) -> Result<(), SimError> {
        let idx = self.reactors.len();
        for net in reactor.drives() {
            if !self.netlist.is_env_driven(net) || self.owner[net.index()].is_some() {
                return Err(SimError::NotEnvironmentDriven {
                    net: self.netlist.net_name(net).to_string(),
                });
            }
            self.owner[net.index()] = Some(idx);
        }
        for net in reactor.watches() {
            self.watchers[net.index()].push(idx);
        }
        self.reactors.push(reactor);
        self.reactor_stamp.push(0);
        Ok(())
    }

    /// Enqueues an environment stimulus.
    pub fn schedule(&mut self, event: Event) -> Result<(), SimError> {
        if event.time < self.now {
            return Err(SimError::Causality {
                at: event.time,
                now: self.now,
            });
        }
        if event.net.index() >= self.values.len() {
            return Err(SimError::UnknownNet(event.net.to_string()));
        }
        if !self.netlist.is_env_driven(event.net) {
            return Err(SimError::NotEnvironmentDriven {
                net: self.netlist.net_name(event.net).to_string(),
            });
        }
        self.push(event.time, event.net, event.level, 0);
        Ok(())
    }

    fn push(&mut self, time: SimTime, net: NetId, level: LogicLevel, token: u64) {
        self.seq += 1;
        self.heap.push(Reverse(Queued {
            time,
            seq: self.seq,
            net,
            level,
            token,
        }));
    }

    fn start(&mut self) -> Result<(), SimError> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        let mut reactors = std::mem::take(&mut self.reactors);
        for r in reactors.iter_mut() {
            let mut io = ReactorIo {
                now: 0,
                levels: &self.values,
                drives: &mut self.drives_buf,
            };
            r.start(&mut io);
            self.flush_drives()?;
        }
        self.reactors = reactors;
        Ok(())
    }

    fn flush_drives(&mut self) -> Result<(), SimError> {
        let drives = std::mem::take(&mut self.drives_buf);
        for &(net, level, delay) in &drives {
            if self.owner[net.index()].is_none() {
                return Err(SimError::NotEnvironmentDriven {
                    net: self.netlist.net_name(net).to_string(),
                });
            }
            self.push(self.now + delay, net, level, 0);
        }
        self.drives_buf = drives;
        self.drives_buf.clear();
        Ok(())
    }

    /// Processes every event with time <= `until`.
    pub fn run(&mut self, until: SimTime) -> Result<(), SimError> {
        self.start()?;
        while let Some(Reverse(top)) = self.heap.peek() {
            if top.time > until {
                break;
            }
            let t = top.time;
            self.now = t;
            self.step(t)?;
        }
        self.trace.set_end(self.now);
        Ok(())
    }

    /// True when no live event is queued.
    pub fn is_quiescent(&self) -> bool {
        self.heap.iter().all(|Reverse(q)| {
            q.token != 0 && self.pending[q.net.index()].is_none_or(|p| p.token != q.token)
        })
    }

    fn step(&mut self, t: SimTime) -> Result<(), SimError> {
        loop {
            let mut any = false;
            while let Some(Reverse(q)) = self.heap.peek().copied() {
                if q.time != t {
                    break;
                }
                self.heap.pop();
                let ni = q.net.index();
                if q.token != 0 {
                    match self.pending[ni] {
                        Some(p) if p.token == q.token => self.pending[ni] = None,
                        _ => continue,
                    }
                }
                any = true;
                self.events += 1;
                if self.events > self.config.event_budget {
                    return Err(self.budget_error());
                }
                let level = match self.clamp[ni] {
                    Some((stuck, from)) if t >= from => stuck,
                    _ => q.level,
                };
                if !self.touched_mark[ni] {
                    self.touched_mark[ni] = true;
                    self.touched.push(q.net);
                }
                self.scratch[ni] = level;
            }
            if !any {
                return Ok(());
            }
            self.epoch += 1;
            let touched = std::mem::take(&mut self.touched);
            let mut dirty: Vec<GateId> = Vec::new();
            let mut woken: Vec<usize> = Vec::new();
            for &net in &touched {
                let ni = net.index();
                self.touched_mark[ni] = false;
                let new = self.scratch[ni];
                if new == self.values[ni] {
                    continue;
                }
                self.values[ni] = new;
                self.toggles[ni] += 1;
                self.trace.record(net, t, new);
                for &g in &self.fanout[ni] {
                    if self.gate_stamp[g.index()] != self.epoch {
                        self.gate_stamp[g.index()] = self.epoch;
                        dirty.push(g);
                    }
                }
                for &r in &self.watchers[ni] {
                    if self.reactor_stamp[r] != self.epoch {
                        self.reactor_stamp[r] = self.epoch;
                        woken.push(r);
                    }
                }
            }
            self.touched = touched;
            self.touched.clear();

            dirty.sort_unstable();
            for g in dirty {
                self.evaluate(g, t);
            }

            if !woken.is_empty() {
                woken.sort_unstable();
                let mut reactors = std::mem::take(&mut self.reactors);
                for r in woken {
                    let mut io = ReactorIo {
                        now: t,
                        levels: &self.values,
                        drives: &mut self.drives_buf,
                    };
                    reactors[r].react(&mut io);
                    if let Err(e) = self.flush_drives() {
                        self.reactors = reactors;
                        return Err(e);
                    }
                }
                self.reactors = reactors;
            }
        }
    }

    fn evaluate(&mut self, gid: GateId, t: SimTime) {
        let gi = gid.index();
        let gate = &self.netlist.gates()[gi];
        let kind = gate.kind;
        let out = gate.output;
        let delay = gate.delay;
        let target = if kind == GateKind::Capture {
            let data = self.values[gate.inputs[0].index()];
            let trig = self.values[gate.inputs[1].index()];
            if trig != self.last_trigger[gi] {
                self.last_trigger[gi] = trig;
                self.held[gi] = data;
            }
            self.held[gi]
        } else {
            self.inputs_buf.clear();
            self.inputs_buf
                .extend(gate.inputs.iter().map(|n| self.values[n.index()]));
            let v = eval_unchecked(kind, &self.inputs_buf, self.held[gi]);
            self.held[gi] = v;
            v
        };
        let oi = out.index();
        if let Some(p) = self.pending[oi] {
            if p.level == target {
                return;
            }
            self.pending[oi] = None;
        }
        if target != self.values[oi] {
            let token = self.next_token;
            self.next_token += 1;
            self.pending[oi] = Some(Pending {
                token,
                level: target,
            });
            self.push(t + delay, out, target, token);
        }
    }

    fn budget_error(&self) -> SimError {
        let mut idx: Vec<usize> = (0..self.toggles.len()).collect();
        idx.sort_by_key(|&i| (Reverse(self.toggles[i]), i));
        SimError::EventBudgetExceeded {
            budget: self.config.event_budget,
            nets: idx
                .into_iter()
                .take(5)
                .filter(|&i| self.toggles[i] > 0)
                .map(|i| self.netlist.nets()[i].name.clone())
                .collect(),
        }
    }
}

/// Propagates reset levels through combinational gates and delay elements
/// until a fixpoint; sequential outputs keep their declared levels.
fn settle(
    netlist: &Netlist,
    fanout: &[Vec<GateId>],
    clamp: &[Option<(LogicLevel, SimTime)>],
    values: &mut [LogicLevel],
) -> Result<(), SimError> {
    let gates = netlist.gates();
    let mut work: Vec<GateId> = (0..gates.len() as u32)
        .map(GateId)
        .filter(|g| !gates[g.index()].kind.is_sequential())
        .rev()
        .collect();
    let mut in_work = vec![false; gates.len()];
    for g in &work {
        in_work[g.index()] = true;
    }
    let limit = 64 * (gates.len() + 1);
    let mut steps = 0;
    let mut buf = Vec::new();
    while let Some(g) = work.pop() {
        in_work[g.index()] = false;
        steps += 1;
        if steps > limit {
            return Err(SimError::Config(
                "reset state does not settle (oscillating loop)".into(),
            ));
        }
        let gate = &gates[g.index()];
        let o = gate.output.index();
        if matches!(clamp[o], Some((_, 0))) {
            continue;
        }
        buf.clear();
        buf.extend(gate.inputs.iter().map(|n| values[n.index()]));
        let v = eval_unchecked(gate.kind, &buf, values[o]);
        if v != values[o] {
            values[o] = v;
            for &f in &fanout[o] {
                if !gates[f.index()].kind.is_sequential() && !in_work[f.index()] {
                    in_work[f.index()] = true;
                    work.push(f);
                }
            }
        }
    }
    Ok(())
}

/// Runs `netlist` with a list of environment stimuli and returns the trace.
pub fn run(netlist: &Netlist, stimuli: &[Event], until: SimTime) -> Result<Trace, SimError> {
    let mut sim = Simulator::new(netlist, SimConfig::default())?;
    for &e in stimuli {
        sim.schedule(e)?;
    }
    sim.run(until)?;
    Ok(sim.into_trace())
}
