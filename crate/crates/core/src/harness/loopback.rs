//! Merge wired straight into split, with sources and sinks on both streams.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::env::{Bd4Source, Latency, Ncl4Source, Sink, SinkWires, WordFeed, WordLog};
use super::scenario::HarnessError;
use crate::blocks::{build_merge_bd, build_merge_cd, build_split_bd, build_split_cd, DelayProfile, Delays, DeltaPolicy, DutStyle};
use crate::codec::{ChannelKind, ChannelMonitor, MonitorReport, StreamPhase};
use crate::kernel::{LogicLevel, NetId, Netlist, SimConfig, SimTime, Simulator, Trace};

use LogicLevel::{High, Low};

#[derive(Debug, Clone)]
pub struct Loopback {
    pub user_out: Vec<u64>,
    pub test_out: Vec<u64>,
    /// Monitor reports keyed by channel name (`user_in`, `test_in`, `utd`,
    /// `user_out`, `test_out`).
    pub reports: BTreeMap<String, MonitorReport>,
    pub channels: Vec<(String, ChannelKind)>,
    pub trace: Trace,
}

impl Loopback {
    pub fn channel(&self, name: &str) -> &ChannelKind {
        &self.channels.iter().find(|(n, _)| n == name).expect("known channel").1
    }
}

fn bind(v: &[(String, NetId)]) -> Vec<(&str, NetId)> {
    v.iter().map(|(s, n)| (s.as_str(), *n)).collect()
}

/// Sends `user` and `test` through merge and split and runs until quiet.
pub fn loopback(
    style: DutStyle,
    k: usize,
    user: &[u64],
    test: &[u64],
    profile: DelayProfile,
) -> Result<Loopback, HarnessError> {
    let mut delays = Delays::new(profile);
    let mut nl = Netlist::new();
    let u_ack = nl.add_net("user_out.ack", Low)?;
    let t_ack = nl.add_net("test_out.ack", High)?;
    let utd_ack = nl.add_net("utd.ack", Low)?;
    let b = |i: usize| format!("b{i}");
    let channels: Vec<(String, ChannelKind)>;
    let (src_u, src_t): (Vec<NetId>, Vec<NetId>);
    let (reqs, acks): (Vec<NetId>, Vec<NetId>);
    match style {
        DutStyle::Bd => {
            let ur = nl.add_net("user_in.req", Low)?;
            let tr = nl.add_net("test_in.req", Low)?;
            src_u = (0..k).map(|i| nl.add_net(format!("user_in.{}", b(i)), Low)).collect::<Result<_, _>>()?;
            src_t = (0..k).map(|i| nl.add_net(format!("test_in.{}", b(i)), Low)).collect::<Result<_, _>>()?;
            let (merge, _) = build_merge_bd(k, &mut delays, DeltaPolicy::Auto)?;
            let (split, _) = build_split_bd(k, &mut delays)?;
            let mut v = vec![("rU".to_string(), ur), ("rT".to_string(), tr), ("aUT".to_string(), utd_ack)];
            for i in 0..k {
                v.push((format!("ud.{}", b(i)), src_u[i]));
                v.push((format!("td.{}", b(i)), src_t[i]));
            }
            let mp = nl.instantiate("merge", &merge, &bind(&v))?;
            let utd: Vec<NetId> = (0..k).map(|i| mp[&format!("utd.{}", b(i))]).collect();
            let mut v = vec![
                ("rUT".to_string(), mp["rUT"]),
                ("aU".to_string(), u_ack),
                ("aT".to_string(), t_ack),
                ("aUT".to_string(), utd_ack),
            ];
            for (i, &n) in utd.iter().enumerate() {
                v.push((format!("utd.{}", b(i)), n));
            }
            let sp = nl.instantiate("split", &split, &bind(&v))?;
            let ud: Vec<NetId> = (0..k).map(|i| sp[&format!("ud.{}", b(i))]).collect();
            let td: Vec<NetId> = (0..k).map(|i| sp[&format!("td.{}", b(i))]).collect();
            reqs = vec![ur, tr];
            acks = vec![mp["aU"], mp["aT"]];
            channels = vec![
                ("user_in".into(), ChannelKind::Bd4 { req: ur, ack: mp["aU"], data: src_u.clone(), phase: StreamPhase::User }),
                ("test_in".into(), ChannelKind::Bd4 { req: tr, ack: mp["aT"], data: src_t.clone(), phase: StreamPhase::Test }),
                ("utd".into(), ChannelKind::Bd2 { req: mp["rUT"], ack: utd_ack, data: utd }),
                ("user_out".into(), ChannelKind::Bd4 { req: sp["rU"], ack: u_ack, data: ud, phase: StreamPhase::User }),
                ("test_out".into(), ChannelKind::Bd4 { req: sp["rT"], ack: t_ack, data: td, phase: StreamPhase::Test }),
            ];
        }
        DutStyle::Cd => {
            let rails = |nl: &mut Netlist, p: &str| -> Result<Vec<(NetId, NetId)>, HarnessError> {
                (0..k)
                    .map(|i| Ok((nl.add_net(format!("{p}.{}.hi", b(i)), Low)?, nl.add_net(format!("{p}.{}.lo", b(i)), Low)?)))
                    .collect()
            };
            let ur = rails(&mut nl, "user_in")?;
            let tr = rails(&mut nl, "test_in")?;
            let (merge, _) = build_merge_cd(k, &mut delays)?;
            let (split, _) = build_split_cd(k, &mut delays)?;
            let mut v = vec![("aUT".to_string(), utd_ack)];
            for i in 0..k {
                v.push((format!("ud.{}.hi", b(i)), ur[i].0));
                v.push((format!("ud.{}.lo", b(i)), ur[i].1));
                v.push((format!("td.{}.hi", b(i)), tr[i].0));
                v.push((format!("td.{}.lo", b(i)), tr[i].1));
            }
            let mp = nl.instantiate("merge", &merge, &bind(&v))?;
            let utd: Vec<(NetId, NetId)> = (0..k)
                .map(|i| (mp[&format!("utd.{}.val", b(i))], mp[&format!("utd.{}.phs", b(i))]))
                .collect();
            let mut v = vec![("aU".to_string(), u_ack), ("aT".to_string(), t_ack), ("aUT".to_string(), utd_ack)];
            for (i, &(x, y)) in utd.iter().enumerate() {
                v.push((format!("utd.{}.val", b(i)), x));
                v.push((format!("utd.{}.phs", b(i)), y));
            }
            let sp = nl.instantiate("split", &split, &bind(&v))?;
            let out = |s: &str| -> Vec<(NetId, NetId)> {
                (0..k).map(|i| (sp[&format!("{s}.{}.hi", b(i))], sp[&format!("{s}.{}.lo", b(i))])).collect()
            };
            src_u = ur.iter().flat_map(|&(h, l)| [h, l]).collect();
            src_t = tr.iter().flat_map(|&(h, l)| [h, l]).collect();
            reqs = Vec::new();
            acks = vec![mp["aU"], mp["aT"]];
            channels = vec![
                ("user_in".into(), ChannelKind::Ncl4 { rails: ur, ack: mp["aU"], phase: StreamPhase::User }),
                ("test_in".into(), ChannelKind::Ncl4 { rails: tr, ack: mp["aT"], phase: StreamPhase::Test }),
                ("utd".into(), ChannelKind::Ledr2 { rails: utd, ack: utd_ack }),
                ("user_out".into(), ChannelKind::Ncl4 { rails: out("ud"), ack: u_ack, phase: StreamPhase::User }),
                ("test_out".into(), ChannelKind::Ncl4 { rails: out("td"), ack: t_ack, phase: StreamPhase::Test }),
            ];
        }
    }

    let mut sim = Simulator::new(&nl, SimConfig::default())?;
    let lat = |salt: u64| match profile {
        DelayProfile::Fixed => Latency::fixed(1),
        DelayProfile::Uniform { lo, hi, seed } => Latency::new(lo, hi, seed ^ salt),
    };
    let pairs = |v: &[NetId]| v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
    let feeds = [WordFeed::new(user.to_vec(), false), WordFeed::new(test.to_vec(), false)];
    for (i, feed) in feeds.into_iter().enumerate() {
        let src = if i == 0 { &src_u } else { &src_t };
        match style {
            DutStyle::Bd => sim.add_reactor(Box::new(Bd4Source::new(reqs[i], acks[i], src.clone(), feed, lat(i as u64 + 1))))?,
            DutStyle::Cd => sim.add_reactor(Box::new(Ncl4Source::new(pairs(src), acks[i], feed, lat(i as u64 + 1))))?,
        }
    }
    let logs: [WordLog; 2] = [Arc::new(Mutex::new(Vec::new())), Arc::new(Mutex::new(Vec::new()))];
    for (i, ack) in [u_ack, t_ack].into_iter().enumerate() {
        let wires = match &channels[3 + i].1 {
            ChannelKind::Bd4 { req, data, .. } => SinkWires::Bundled { req: *req, data: data.clone() },
            ChannelKind::Ncl4 { rails, .. } => SinkWires::DualRail { rails: rails.clone() },
            _ => unreachable!("output channels are four-phase"),
        };
        sim.add_reactor(Box::new(Sink::new(wires, ack, lat(i as u64 + 3), logs[i].clone(), None)))?;
    }
    sim.run(SimTime::MAX)?;
    let trace = sim.into_trace();
    let reports = channels
        .iter()
        .map(|(n, kind)| (n.clone(), ChannelMonitor::new(kind.clone()).observe(&trace)))
        .collect();
    let values = |l: &WordLog| l.lock().expect("word log").iter().map(|w| w.0).collect();
    Ok(Loopback {
        user_out: values(&logs[0]),
        test_out: values(&logs[1]),
        reports,
        channels,
        trace,
    })
}
