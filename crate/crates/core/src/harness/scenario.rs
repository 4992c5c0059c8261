use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::env::{Bd4Source, Comparator, Latency, Ncl4Source, Sink, SinkWires, Mismatch, WordFeed, WordLog};
use crate::blocks::{
    build_2phase_dut_bd, build_2phase_dut_cd, build_merge_bd, build_merge_cd, build_split_bd,
    build_split_cd, DelayProfile, Delays, DeltaPolicy, DutStyle,
};
use crate::codec::{hex, ChannelKind, ChannelMonitor, MonitorReport, StreamPhase};
use crate::kernel::{
    LogicLevel, NetId, Netlist, SimConfig, SimError, SimTime, Simulator, Trace, DEFAULT_EVENT_BUDGET,
};

use LogicLevel::{High, Low};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("deadlock at t={time}: {delivered} of {expected} user words delivered; channel `{channel}` is stalled")]
    Deadlock {
        channel: String,
        delivered: usize,
        expected: usize,
        time: SimTime,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVectorSet {
    pub vectors: Vec<u64>,
    pub repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GoldenReference {
    /// The response must equal the vector.
    #[default]
    Echo,
    /// Expected response per vector.
    Table(BTreeMap<u64, u64>),
}

/// A stuck-at fault on a hierarchical net path such as `dut.s2.reg.b3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub net: String,
    pub stuck_at: bool,
    pub from: SimTime,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub style: DutStyle,
    pub stages: usize,
    pub width: usize,
    pub delta: DeltaPolicy,
    pub comb: Vec<SimTime>,
    pub user_words: Vec<u64>,
    pub vectors: TestVectorSet,
    pub golden: GoldenReference,
    pub faults: Vec<FaultSpec>,
    pub delays: DelayProfile,
    /// Stop after this tick even if traffic is still flowing.
    pub max_ticks: Option<SimTime>,
    /// Keep running until this many test responses were analysed.
    pub min_responses: usize,
    pub event_budget: u64,
}

impl Scenario {
    pub fn new(style: DutStyle, stages: usize, width: usize) -> Self {
        Scenario {
            style,
            stages,
            width,
            delta: DeltaPolicy::Auto,
            comb: Vec::new(),
            user_words: Vec::new(),
            vectors: TestVectorSet {
                vectors: vec![0],
                repeat: true,
            },
            golden: GoldenReference::Echo,
            faults: Vec::new(),
            delays: DelayProfile::Fixed,
            max_ticks: None,
            min_responses: 1,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if self.width == 0 || self.width > 64 {
            return cfg(format!("width {} outside 1..=64", self.width));
        }
        if self.stages == 0 {
            return cfg("stages must be at least 1".into());
        }
        self.delays.validate()?;
        let limit = if self.width == 64 { u64::MAX } else { (1u64 << self.width) - 1 };
        for &w in self.user_words.iter().chain(&self.vectors.vectors) {
            if w > limit {
                return cfg(format!("word {w:X} does not fit in {} bits", self.width));
            }
        }
        if self.vectors.vectors.is_empty() {
            return cfg("test vector set is empty".into());
        }
        if let GoldenReference::Table(t) = &self.golden {
            for v in &self.vectors.vectors {
                if !t.contains_key(v) {
                    return cfg(format!("golden table has no entry for vector {v:X}"));
                }
            }
        }
        if self.style == DutStyle::Cd && matches!(self.delta, DeltaPolicy::Fixed(_)) {
            return cfg("a matched delay only applies to the bundled-data style".into());
        }
        Ok(())
    }

    /// Expected test responses in emission order.
    fn expected(&self) -> WordFeed {
        let exp: Vec<u64> = match &self.golden {
            GoldenReference::Echo => self.vectors.vectors.clone(),
            GoldenReference::Table(t) => self.vectors.vectors.iter().map(|v| t[v]).collect(),
        };
        WordFeed::new(exp, self.vectors.repeat)
    }
}

/// Channel names in pipeline order.
pub const CHANNELS: [&str; 6] = ["user_in", "test_in", "utd_in", "utd_out", "user_out", "test_out"];

/// Environment-facing nets of an assembled scenario.
#[derive(Debug, Clone)]
pub struct EnvNets {
    pub user_src: Vec<NetId>,
    pub test_src: Vec<NetId>,
    pub user_src_req: Option<NetId>,
    pub test_src_req: Option<NetId>,
    pub user_src_ack: NetId,
    pub test_src_ack: NetId,
    pub user_sink_ack: NetId,
    pub tra_ack: NetId,
    pub cmp_dev: NetId,
}

/// Complete netlist of source, merge, DUT, split and sinks, plus the
/// channel wiring used by monitors.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub netlist: Netlist,
    pub channels: Vec<(String, ChannelKind)>,
    pub env: EnvNets,
}

fn bus(nl: &mut Netlist, prefix: &str, k: usize) -> Result<Vec<NetId>, SimError> {
    (0..k).map(|i| nl.add_net(format!("{prefix}.b{i}"), Low)).collect()
}

fn rails(nl: &mut Netlist, prefix: &str, k: usize) -> Result<Vec<(NetId, NetId)>, SimError> {
    (0..k)
        .map(|i| {
            Ok((
                nl.add_net(format!("{prefix}.b{i}.hi"), Low)?,
                nl.add_net(format!("{prefix}.b{i}.lo"), Low)?,
            ))
        })
        .collect()
}

fn pick(map: &BTreeMap<String, NetId>, name: &str) -> NetId {
    map[name]
}

pub fn assemble(sc: &Scenario) -> Result<Assembly, HarnessError> {
    sc.validate()?;
    let k = sc.width;
    let mut delays = Delays::new(sc.delays);
    let mut nl = Netlist::new();
    let user_sink_ack = nl.add_net("user_out.ack", Low)?;
    let tra_ack = nl.add_net("test_out.ack", High)?;
    let cmp_dev = nl.add_net("cmp_dev", Low)?;
    let utd_in_ack = nl.add_net("utd_in.ack", Low)?;
    let utd_out_ack = nl.add_net("utd_out.ack", Low)?;

    let b = |i: usize| format!("b{i}");
    match sc.style {
        DutStyle::Bd => {
            let ureq = nl.add_net("user_in.req", Low)?;
            let treq = nl.add_net("test_in.req", Low)?;
            let ud = bus(&mut nl, "user_in", k)?;
            let td = bus(&mut nl, "test_in", k)?;

            let (merge, _) = build_merge_bd(k, &mut delays, sc.delta)?;
            let (dut, _) = build_2phase_dut_bd(sc.stages, k, sc.delta, &sc.comb, &mut delays)?;
            let (split, _) = build_split_bd(k, &mut delays)?;

            let mut bind: Vec<(String, NetId)> = vec![
                ("rU".into(), ureq),
                ("rT".into(), treq),
                ("aUT".into(), utd_in_ack),
            ];
            for i in 0..k {
                bind.push((format!("ud.{}", b(i)), ud[i]));
                bind.push((format!("td.{}", b(i)), td[i]));
            }
            let mp = nl.instantiate("merge", &merge, &as_refs(&bind))?;
            let utd: Vec<NetId> = (0..k).map(|i| pick(&mp, &format!("utd.{}", b(i)))).collect();

            let mut bind: Vec<(String, NetId)> = vec![
                ("r_in".into(), pick(&mp, "rUT")),
                ("a_in".into(), utd_in_ack),
                ("a_out".into(), utd_out_ack),
            ];
            for (i, &n) in utd.iter().enumerate() {
                bind.push((format!("d_in.{}", b(i)), n));
            }
            let dp = nl.instantiate("dut", &dut, &as_refs(&bind))?;
            let dout: Vec<NetId> = (0..k).map(|i| pick(&dp, &format!("d_out.{}", b(i)))).collect();

            let mut bind: Vec<(String, NetId)> = vec![
                ("rUT".into(), pick(&dp, "r_out")),
                ("aU".into(), user_sink_ack),
                ("aT".into(), tra_ack),
                ("aUT".into(), utd_out_ack),
            ];
            for (i, &n) in dout.iter().enumerate() {
                bind.push((format!("utd.{}", b(i)), n));
            }
            let sp = nl.instantiate("split", &split, &as_refs(&bind))?;

            let channels = vec![
                ("user_in".into(), ChannelKind::Bd4 { req: ureq, ack: pick(&mp, "aU"), data: ud.clone(), phase: StreamPhase::User }),
                ("test_in".into(), ChannelKind::Bd4 { req: treq, ack: pick(&mp, "aT"), data: td.clone(), phase: StreamPhase::Test }),
                ("utd_in".into(), ChannelKind::Bd2 { req: pick(&mp, "rUT"), ack: utd_in_ack, data: utd }),
                ("utd_out".into(), ChannelKind::Bd2 { req: pick(&dp, "r_out"), ack: utd_out_ack, data: dout.clone() }),
                ("user_out".into(), ChannelKind::Bd4 { req: pick(&sp, "rU"), ack: user_sink_ack, data: dout.clone(), phase: StreamPhase::User }),
                ("test_out".into(), ChannelKind::Bd4 { req: pick(&sp, "rT"), ack: tra_ack, data: dout, phase: StreamPhase::Test }),
            ];
            let env = EnvNets {
                user_src: ud,
                test_src: td,
                user_src_req: Some(ureq),
                test_src_req: Some(treq),
                user_src_ack: pick(&mp, "aU"),
                test_src_ack: pick(&mp, "aT"),
                user_sink_ack,
                tra_ack,
                cmp_dev,
            };
            Ok(Assembly { netlist: nl, channels, env })
        }
        DutStyle::Cd => {
            let ud = rails(&mut nl, "user_in", k)?;
            let td = rails(&mut nl, "test_in", k)?;

            let (merge, _) = build_merge_cd(k, &mut delays)?;
            let (dut, _) = build_2phase_dut_cd(sc.stages, k, &sc.comb, &mut delays)?;
            let (split, _) = build_split_cd(k, &mut delays)?;

            let mut bind: Vec<(String, NetId)> = vec![("aUT".into(), utd_in_ack)];
            for i in 0..k {
                bind.push((format!("ud.{}.hi", b(i)), ud[i].0));
                bind.push((format!("ud.{}.lo", b(i)), ud[i].1));
                bind.push((format!("td.{}.hi", b(i)), td[i].0));
                bind.push((format!("td.{}.lo", b(i)), td[i].1));
            }
            let mp = nl.instantiate("merge", &merge, &as_refs(&bind))?;
            let utd: Vec<(NetId, NetId)> = (0..k)
                .map(|i| (pick(&mp, &format!("utd.{}.val", b(i))), pick(&mp, &format!("utd.{}.phs", b(i)))))
                .collect();

            let mut bind: Vec<(String, NetId)> =
                vec![("a_in".into(), utd_in_ack), ("a_out".into(), utd_out_ack)];
            for (i, &(v, p)) in utd.iter().enumerate() {
                bind.push((format!("in.{}.val", b(i)), v));
                bind.push((format!("in.{}.phs", b(i)), p));
            }
            let dp = nl.instantiate("dut", &dut, &as_refs(&bind))?;
            let dout: Vec<(NetId, NetId)> = (0..k)
                .map(|i| (pick(&dp, &format!("out.{}.val", b(i))), pick(&dp, &format!("out.{}.phs", b(i)))))
                .collect();

            let mut bind: Vec<(String, NetId)> = vec![
                ("aU".into(), user_sink_ack),
                ("aT".into(), tra_ack),
                ("aUT".into(), utd_out_ack),
            ];
            for (i, &(v, p)) in dout.iter().enumerate() {
                bind.push((format!("utd.{}.val", b(i)), v));
                bind.push((format!("utd.{}.phs", b(i)), p));
            }
            let sp = nl.instantiate("split", &split, &as_refs(&bind))?;
            let out_rails = |s: &str| -> Vec<(NetId, NetId)> {
                (0..k)
                    .map(|i| (pick(&sp, &format!("{s}.{}.hi", b(i))), pick(&sp, &format!("{s}.{}.lo", b(i)))))
                    .collect()
            };
            let channels = vec![
                ("user_in".into(), ChannelKind::Ncl4 { rails: ud.clone(), ack: pick(&mp, "aU"), phase: StreamPhase::User }),
                ("test_in".into(), ChannelKind::Ncl4 { rails: td.clone(), ack: pick(&mp, "aT"), phase: StreamPhase::Test }),
                ("utd_in".into(), ChannelKind::Ledr2 { rails: utd, ack: utd_in_ack }),
                ("utd_out".into(), ChannelKind::Ledr2 { rails: dout, ack: utd_out_ack }),
                ("user_out".into(), ChannelKind::Ncl4 { rails: out_rails("ud"), ack: user_sink_ack, phase: StreamPhase::User }),
                ("test_out".into(), ChannelKind::Ncl4 { rails: out_rails("td"), ack: tra_ack, phase: StreamPhase::Test }),
            ];
            let env = EnvNets {
                user_src: ud.iter().flat_map(|&(h, l)| [h, l]).collect(),
                test_src: td.iter().flat_map(|&(h, l)| [h, l]).collect(),
                user_src_req: None,
                test_src_req: None,
                user_src_ack: pick(&mp, "aU"),
                test_src_ack: pick(&mp, "aT"),
                user_sink_ack,
                tra_ack,
                cmp_dev,
            };
            Ok(Assembly { netlist: nl, channels, env })
        }
    }
}

fn as_refs(v: &[(String, NetId)]) -> Vec<(&str, NetId)> {
    v.iter().map(|(s, n)| (s.as_str(), *n)).collect()
}

/// Clamps the net at `fault.net` in `netlist`.
pub fn inject_fault(netlist: &mut Netlist, fault: &FaultSpec) -> Result<(), HarnessError> {
    let net = netlist
        .net_id(&fault.net)
        .map_err(|_| HarnessError::Config(format!("unknown net path `{}`", fault.net)))?;
    if netlist.is_env_driven(net) {
        return Err(HarnessError::Config(format!(
            "`{}` is driven by the environment and cannot carry a fault",
            fault.net
        )));
    }
    netlist.clamp(net, LogicLevel::from_bool(fault.stuck_at), fault.from)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub width: usize,
    pub user_out: Vec<(u64, SimTime)>,
    pub test_responses: Vec<(u64, SimTime)>,
    /// Mismatches seen by the analyzer: (response index, expected, got, t).
    pub mismatches: Vec<Mismatch>,
    pub cmp_dev: Vec<(SimTime, LogicLevel)>,
    pub reports: BTreeMap<String, MonitorReport>,
    pub trace: Trace,
    pub events: u64,
    pub end_time: SimTime,
    /// Set when the run went quiet before every user word came out.
    pub stall: Option<Stall>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stall {
    pub channel: String,
    pub delivered: usize,
    pub expected: usize,
    pub time: SimTime,
}

impl From<Stall> for HarnessError {
    fn from(s: Stall) -> Self {
        HarnessError::Deadlock {
            channel: s.channel,
            delivered: s.delivered,
            expected: s.expected,
            time: s.time,
        }
    }
}

impl ScenarioResult {
    pub fn user_values(&self) -> Vec<u64> {
        self.user_out.iter().map(|w| w.0).collect()
    }

    pub fn response_values(&self) -> Vec<u64> {
        self.test_responses.iter().map(|w| w.0).collect()
    }

    pub fn detection_time(&self) -> Option<SimTime> {
        self.cmp_dev.iter().find(|(_, l)| l.is_high()).map(|&(t, _)| t)
    }

    pub fn violation_count(&self) -> usize {
        self.reports.values().map(|r| r.violations.len()).sum()
    }

    pub fn verdict(&self) -> String {
        match self.detection_time() {
            Some(t) => format!("DETECTED at t={t}"),
            None => "NO-FAULT".to_string(),
        }
    }

    /// `stream,index,value,time` rows for user output and test responses.
    pub fn streams_csv(&self) -> String {
        let mut s = String::from("stream,index,value,time\n");
        for (name, list) in [("user_out", &self.user_out), ("test_response", &self.test_responses)] {
            for (i, (v, t)) in list.iter().enumerate() {
                let _ = writeln!(s, "{name},{i},{},{t}", hex(*v, self.width));
            }
        }
        s
    }

    /// One line per monitor violation across all channels.
    pub fn violations_csv(&self) -> String {
        let mut s = String::from("channel,time,rule,description\n");
        for name in CHANNELS {
            if let Some(r) = self.reports.get(name) {
                for v in &r.violations {
                    let _ = writeln!(s, "{name},{},{},\"{}\"", v.time, v.rule, v.description.replace('"', "'"));
                }
            }
        }
        s
    }

    pub fn report_text(&self) -> String {
        let mut s = String::new();
        for name in CHANNELS {
            if let Some(r) = self.reports.get(name) {
                s.push_str(&r.to_text(name, self.width));
            }
        }
        s
    }
}

/// Simulates a scenario end to end; a deadlock is an error.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioResult, HarnessError> {
    let r = simulate(sc)?;
    match r.stall {
        Some(s) => Err(s.into()),
        None => Ok(r),
    }
}

/// Like [`run_scenario`] but returns the partial result of a deadlocked run.
pub fn simulate(sc: &Scenario) -> Result<ScenarioResult, HarnessError> {
    let mut asm = assemble(sc)?;
    for f in &sc.faults {
        inject_fault(&mut asm.netlist, f)?;
    }
    run_assembly(sc, asm)
}

fn env_latency(profile: DelayProfile, salt: u64) -> Latency {
    match profile {
        DelayProfile::Fixed => Latency::fixed(1),
        DelayProfile::Uniform { lo, hi, seed } => {
            Latency::new(lo, hi, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
        }
    }
}

pub(crate) fn run_assembly(sc: &Scenario, asm: Assembly) -> Result<ScenarioResult, HarnessError> {
    let Assembly { netlist, channels, env } = asm;
    let mut sim = Simulator::new(
        &netlist,
        SimConfig {
            event_budget: sc.event_budget,
        },
    )?;
    let user_log: WordLog = Arc::new(Mutex::new(Vec::new()));
    let tra_log: WordLog = Arc::new(Mutex::new(Vec::new()));
    let mismatches = Arc::new(Mutex::new(Vec::new()));
    let user_feed = WordFeed::new(sc.user_words.clone(), false);
    let test_feed = WordFeed::new(sc.vectors.vectors.clone(), sc.vectors.repeat);
    let cmp = Comparator {
        expected: sc.expected(),
        flag: env.cmp_dev,
        raised: false,
        mismatches: mismatches.clone(),
    };
    let lat = |salt| env_latency(sc.delays, salt);

    let (user_out_kind, test_out_kind) = (&channels[4].1, &channels[5].1);
    match sc.style {
        DutStyle::Bd => {
            sim.add_reactor(Box::new(Bd4Source::new(
                env.user_src_req.expect("bundled request"),
                env.user_src_ack,
                env.user_src.clone(),
                user_feed,
                lat(1),
            )))?;
            sim.add_reactor(Box::new(Bd4Source::new(
                env.test_src_req.expect("bundled request"),
                env.test_src_ack,
                env.test_src.clone(),
                test_feed,
                lat(2),
            )))?;
        }
        DutStyle::Cd => {
            let pairs = |v: &[NetId]| v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
            sim.add_reactor(Box::new(Ncl4Source::new(pairs(&env.user_src), env.user_src_ack, user_feed, lat(1))))?;
            sim.add_reactor(Box::new(Ncl4Source::new(pairs(&env.test_src), env.test_src_ack, test_feed, lat(2))))?;
        }
    }
    let wires = |kind: &ChannelKind| match kind {
        ChannelKind::Bd4 { req, data, .. } => SinkWires::Bundled {
            req: *req,
            data: data.clone(),
        },
        ChannelKind::Ncl4 { rails, .. } => SinkWires::DualRail { rails: rails.clone() },
        _ => unreachable!("output channels are four-phase"),
    };
    sim.add_reactor(Box::new(Sink::new(wires(user_out_kind), env.user_sink_ack, lat(3), user_log.clone(), None)))?;
    sim.add_reactor(Box::new(Sink::new(wires(test_out_kind), env.tra_ack, lat(4), tra_log.clone(), Some(cmp))))?;

    let until = sc.max_ticks.unwrap_or(SimTime::MAX);
    let mut horizon: SimTime = 0;
    loop {
        horizon = horizon.saturating_add(RUN_CHUNK).min(until);
        sim.run(horizon)?;
        let users = user_log.lock().expect("word log").len();
        let tests = tra_log.lock().expect("word log").len();
        let done = users >= sc.user_words.len() && tests >= sc.min_responses;
        if done || horizon == until || sim.is_quiescent() {
            break;
        }
    }
    let quiescent = sim.is_quiescent();
    let events = sim.events_processed();
    let end_time = sim.now();
    let trace = sim.into_trace();

    let mut reports = BTreeMap::new();
    let mut stalled: Option<String> = None;
    for (name, kind) in &channels {
        let mon = ChannelMonitor::new(kind.clone());
        let (report, pending) = mon.observe_with_state(&trace);
        if pending {
            stalled = Some(name.clone());
        }
        reports.insert(name.clone(), report);
    }
    let user_out = user_log.lock().expect("word log").clone();
    let stall = (quiescent && user_out.len() < sc.user_words.len()).then(|| Stall {
        channel: stalled.unwrap_or_else(|| "user_in".into()),
        delivered: user_out.len(),
        expected: sc.user_words.len(),
        time: end_time,
    });
    let cmp_dev = trace.wave(env.cmp_dev).to_vec();
    let test_responses = tra_log.lock().expect("word log").clone();
    let mismatches = mismatches.lock().expect("mismatch log").clone();
    Ok(ScenarioResult {
        width: sc.width,
        user_out,
        test_responses,
        mismatches,
        cmp_dev,
        reports,
        trace,
        events,
        end_time,
        stall,
    })
}

/// Multiple-input signature register over `words`, 16 bits, shifting left
/// with feedback polynomial `poly`.
pub fn misr_signature(words: &[u64], poly: u16) -> u16 {
    words.iter().fold(0u16, |sig, &w| {
        let fb = sig & 0x8000 != 0;
        let mut s = sig << 1;
        if fb {
            s ^= poly;
        }
        s ^ (w as u16) ^ ((w >> 16) as u16) ^ ((w >> 32) as u16) ^ ((w >> 48) as u16)
    })
}

/// Ticks simulated between checks of the stop condition.
const RUN_CHUNK: SimTime = 256;

pub const DEFAULT_MISR_POLY: u16 = 0x1021;
