//! Netlist builders for merge/split elements, pipelines and completion
//! detectors.

mod bd;
mod cd;

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::{GateKind, LogicLevel, NetId, Netlist, Polarity, Port, PortDir, SimError, SimTime};

pub use bd::{build_2phase_dut_bd, build_bd_pipeline, build_merge_bd, build_split_bd};
pub use cd::{build_2phase_dut_cd, build_completion_detector, build_merge_cd, build_split_cd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DutStyle {
    Bd,
    Cd,
}

impl std::fmt::Display for DutStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DutStyle::Bd => "BD",
            DutStyle::Cd => "CD",
        })
    }
}

/// How matched delays on bundled-data request paths are sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaPolicy {
    /// Longest data-path delay plus one tick.
    #[default]
    Auto,
    Fixed(SimTime),
}

/// Gate delay assignment used while building.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DelayProfile {
    /// Per-kind defaults.
    #[default]
    Fixed,
    /// Every gate delay drawn uniformly from `[lo, hi]`.
    Uniform { lo: SimTime, hi: SimTime, seed: u64 },
}

impl DelayProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            DelayProfile::Uniform { lo, hi, .. } if lo == 0 || lo > hi => Err(SimError::Config(
                format!("uniform delay range [{lo}, {hi}] must satisfy 1 <= lo <= hi"),
            )),
            _ => Ok(()),
        }
    }
}

/// Stream of gate delays drawn from a [`DelayProfile`].
#[derive(Debug, Clone)]
pub struct Delays {
    profile: DelayProfile,
    rng: ChaCha8Rng,
}

impl Delays {
    pub fn new(profile: DelayProfile) -> Self {
        let seed = match profile {
            DelayProfile::Uniform { seed, .. } => seed,
            DelayProfile::Fixed => 0,
        };
        Delays {
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn fixed() -> Self {
        Self::new(DelayProfile::Fixed)
    }

    pub fn profile(&self) -> DelayProfile {
        self.profile
    }

    pub fn gate(&mut self, kind: GateKind) -> SimTime {
        match self.profile {
            DelayProfile::Fixed => kind.default_delay(),
            DelayProfile::Uniform { lo, hi, .. } => {
                self.rng.gen_range(lo..=hi).max(kind.min_delay())
            }
        }
    }
}

/// Named ports of a built block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockPorts(pub BTreeMap<String, Port>);

impl BlockPorts {
    pub fn from_netlist(nl: &Netlist) -> Self {
        BlockPorts(nl.ports().clone())
    }

    pub fn get(&self, name: &str) -> Result<NetId, SimError> {
        self.0
            .get(name)
            .map(|p| p.net)
            .ok_or_else(|| SimError::UnknownNet(format!("port {name}")))
    }

    pub fn dir(&self, name: &str) -> Option<PortDir> {
        self.0.get(name).map(|p| p.dir)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

pub(crate) fn check_width(k: usize) -> Result<(), SimError> {
    if k == 0 {
        return Err(SimError::Config("width must be at least 1".into()));
    }
    if k > 64 {
        return Err(SimError::Config("width above 64 bits is not supported".into()));
    }
    Ok(())
}

pub(crate) fn check_stages(n: usize) -> Result<(), SimError> {
    if n == 0 {
        return Err(SimError::Config("stage count must be at least 1".into()));
    }
    Ok(())
}

pub(crate) struct Builder<'a> {
    pub nl: Netlist,
    pub d: &'a mut Delays,
}

impl<'a> Builder<'a> {
    pub fn new(d: &'a mut Delays) -> Self {
        Builder {
            nl: Netlist::new(),
            d,
        }
    }

    pub fn input(&mut self, name: &str, init: LogicLevel) -> Result<NetId, SimError> {
        let n = self.nl.add_net(name, init)?;
        self.nl.add_port(name, n, PortDir::Input);
        Ok(n)
    }

    pub fn output(&mut self, name: &str, net: NetId) {
        self.nl.add_port(name, net, PortDir::Output);
    }

    pub fn probe(&mut self, name: &str, net: NetId) {
        self.nl.add_port(name, net, PortDir::Probe);
    }

    /// Gate with a delay drawn from the profile.
    pub fn g(
        &mut self,
        kind: GateKind,
        inputs: &[NetId],
        name: &str,
        init: LogicLevel,
    ) -> Result<NetId, SimError> {
        let d = self.d.gate(kind);
        self.nl.gate(kind, inputs, name, init, d)
    }

    pub fn gd(
        &mut self,
        kind: GateKind,
        inputs: &[NetId],
        name: &str,
        init: LogicLevel,
        delay: SimTime,
    ) -> Result<NetId, SimError> {
        self.nl.gate(kind, inputs, name, init, delay)
    }

    pub fn delay_of(&self, net: NetId) -> SimTime {
        self.nl
            .driver(net)
            .map_or(0, |g| self.nl.gate_at(g).delay)
    }

    /// A matched delay; zero becomes a zero-delay buffer.
    pub fn matched(&mut self, input: NetId, name: &str, delta: SimTime) -> Result<NetId, SimError> {
        if delta == 0 {
            self.gd(GateKind::Buf, &[input], name, LogicLevel::Unknown, 0)
        } else {
            self.gd(GateKind::Delay, &[input], name, LogicLevel::Unknown, delta)
        }
    }

    /// OR-reduces `inputs` with OR4/OR2 gates.
    pub fn or_tree(&mut self, inputs: &[NetId], prefix: &str) -> Result<NetId, SimError> {
        let mut level = inputs.to_vec();
        let mut depth = 0;
        while level.len() > 1 {
            let mut next = Vec::new();
            for (j, chunk) in level.chunks(4).enumerate() {
                let name = format!("{prefix}.or{depth}_{j}");
                let out = match chunk.len() {
                    1 => chunk[0],
                    2 => self.g(GateKind::Or2, chunk, &name, LogicLevel::Unknown)?,
                    3 => self.g(
                        GateKind::Or4,
                        &[chunk[0], chunk[1], chunk[2], chunk[2]],
                        &name,
                        LogicLevel::Unknown,
                    )?,
                    _ => self.g(GateKind::Or4, chunk, &name, LogicLevel::Unknown)?,
                };
                next.push(out);
            }
            level = next;
            depth += 1;
        }
        Ok(level[0])
    }

    /// Balanced tree of two-input C-elements; depth is `ceil(log2(len))`.
    /// A single input is returned unchanged.
    pub fn cel_tree(
        &mut self,
        inputs: &[NetId],
        prefix: &str,
        init: LogicLevel,
    ) -> Result<NetId, SimError> {
        let mut level = inputs.to_vec();
        let mut depth = 0;
        while level.len() > 1 {
            let mut next = Vec::new();
            for (j, pair) in level.chunks(2).enumerate() {
                if pair.len() == 1 {
                    next.push(pair[0]);
                } else {
                    let name = format!("{prefix}.c{depth}_{j}");
                    next.push(self.g(GateKind::Cel(Polarity::NONE), pair, &name, init)?);
                }
            }
            level = next;
            depth += 1;
        }
        Ok(level[0])
    }

    pub fn finish(self) -> (Netlist, BlockPorts) {
        let ports = BlockPorts::from_netlist(&self.nl);
        (self.nl, ports)
    }
}

pub(crate) fn cel_inv2() -> GateKind {
    GateKind::Cel(Polarity::inverted(&[1]))
}

pub(crate) fn bit(i: usize) -> String {
    format!("b{i}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_profile_is_seeded() {
        let p = DelayProfile::Uniform {
            lo: 1,
            hi: 10,
            seed: 7,
        };
        let a: Vec<_> = {
            let mut d = Delays::new(p);
            (0..20).map(|_| d.gate(GateKind::Inv)).collect()
        };
        let b: Vec<_> = {
            let mut d = Delays::new(p);
            (0..20).map(|_| d.gate(GateKind::Inv)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (1..=10).contains(&x)));
        assert!(DelayProfile::Uniform { lo: 0, hi: 3, seed: 0 }.validate().is_err());
    }

    #[test]
    fn cel_tree_depth() {
        let mut d = Delays::fixed();
        let mut b = Builder::new(&mut d);
        let ins: Vec<NetId> = (0..8)
            .map(|i| b.input(&format!("i{i}"), LogicLevel::Low).unwrap())
            .collect();
        let out = b.cel_tree(&ins, "t", LogicLevel::Low).unwrap();
        let depth = b.nl.longest_path(ins[0], out, |_| true).unwrap();
        assert_eq!(depth, 3);
    }
}
