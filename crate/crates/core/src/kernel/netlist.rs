//! Flat netlist of named nets and primitive gates, plus hierarchical
//! composition of sub-netlists through named ports.

use std::collections::{BTreeMap, HashMap};

use super::error::SimError;
use super::level::{GateId, LogicLevel, NetId, SimTime};
use super::primitive::GateKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub init: LogicLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    pub delay: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortDir {
    /// Driven from outside the block.
    Input,
    /// Driven by the block.
    Output,
    /// Internal net exposed for observation only.
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Port {
    pub net: NetId,
    pub dir: PortDir,
}

/// A net clamped to a constant level from `from` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clamp {
    pub net: NetId,
    pub level: LogicLevel,
    pub from: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct Netlist {
    nets: Vec<Net>,
    gates: Vec<Gate>,
    drivers: Vec<Option<GateId>>,
    by_name: HashMap<String, NetId>,
    ports: BTreeMap<String, Port>,
    clamps: Vec<Clamp>,
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_net(&mut self, name: impl Into<String>, init: LogicLevel) -> Result<NetId, SimError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(SimError::DuplicateNet(name));
        }
        let id = NetId(self.nets.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.nets.push(Net { name, init });
        self.drivers.push(None);
        Ok(id)
    }

    /// Adds a gate driving `output`. Enforces arity, minimum delay and the
    /// single-driver rule.
    pub fn add_gate(
        &mut self,
        kind: GateKind,
        inputs: &[NetId],
        output: NetId,
        delay: SimTime,
    ) -> Result<GateId, SimError> {
        kind.check_arity(inputs.len())?;
        if delay < kind.min_delay() {
            return Err(SimError::Config(format!(
                "{kind} driving `{}` needs delay >= {}, got {delay}",
                self.net_name(output),
                kind.min_delay()
            )));
        }
        for &n in inputs.iter().chain(std::iter::once(&output)) {
            if n.index() >= self.nets.len() {
                return Err(SimError::UnknownNet(n.to_string()));
            }
        }
        if self.drivers[output.index()].is_some() {
            return Err(SimError::MultipleDrivers {
                net: self.net_name(output).to_string(),
            });
        }
        let id = GateId(self.gates.len() as u32);
        self.gates.push(Gate {
            kind,
            inputs: inputs.to_vec(),
            output,
            delay,
        });
        self.drivers[output.index()] = Some(id);
        Ok(id)
    }

    /// Creates the output net and its driving gate in one step.
    pub fn gate(
        &mut self,
        kind: GateKind,
        inputs: &[NetId],
        output_name: impl Into<String>,
        init: LogicLevel,
        delay: SimTime,
    ) -> Result<NetId, SimError> {
        let out = self.add_net(output_name, init)?;
        self.add_gate(kind, inputs, out, delay)?;
        Ok(out)
    }

    pub fn add_port(&mut self, name: impl Into<String>, net: NetId, dir: PortDir) {
        self.ports.insert(name.into(), Port { net, dir });
    }

    pub fn port(&self, name: &str) -> Result<NetId, SimError> {
        self.ports
            .get(name)
            .map(|p| p.net)
            .ok_or_else(|| SimError::UnknownNet(format!("port {name}")))
    }

    pub fn ports(&self) -> &BTreeMap<String, Port> {
        &self.ports
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_at(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn gate_mut(&mut self, id: GateId) -> &mut Gate {
        &mut self.gates[id.index()]
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.index()].name
    }

    pub fn net_id(&self, name: &str) -> Result<NetId, SimError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| SimError::UnknownNet(name.to_string()))
    }

    pub fn driver(&self, net: NetId) -> Option<GateId> {
        self.drivers[net.index()]
    }

    /// Nets with no driving gate are driven by the environment.
    pub fn is_env_driven(&self, net: NetId) -> bool {
        self.drivers[net.index()].is_none()
    }

    pub fn set_init(&mut self, net: NetId, level: LogicLevel) {
        self.nets[net.index()].init = level;
    }

    pub fn clamps(&self) -> &[Clamp] {
        &self.clamps
    }

    /// Clamps a gate-driven net to `level` from time `from` on.
    pub fn clamp(&mut self, net: NetId, level: LogicLevel, from: SimTime) -> Result<(), SimError> {
        if net.index() >= self.nets.len() {
            return Err(SimError::UnknownNet(net.to_string()));
        }
        if self.is_env_driven(net) {
            return Err(SimError::Config(format!(
                "cannot clamp environment-driven net `{}`",
                self.net_name(net)
            )));
        }
        if !level.is_known() {
            return Err(SimError::Config("clamp level must be 0 or 1".into()));
        }
        self.clamps.push(Clamp { net, level, from });
        Ok(())
    }

    /// Copies `block` into `self` under the hierarchical prefix `instance`.
    ///
    /// Each binding connects a block port to an existing net of `self`.
    /// Input ports may bind to any net; output ports may only bind to nets
    /// that have no driver yet, which lets feedback paths be closed after
    /// the fact. Returns the location of every block port in `self`.
    pub fn instantiate(
        &mut self,
        instance: &str,
        block: &Netlist,
        bindings: &[(&str, NetId)],
    ) -> Result<BTreeMap<String, NetId>, SimError> {
        let mut map: Vec<Option<NetId>> = vec![None; block.nets.len()];
        for &(port, target) in bindings {
            let p = block
                .ports
                .get(port)
                .ok_or_else(|| SimError::UnknownNet(format!("{instance}: port {port}")))?;
            if target.index() >= self.nets.len() {
                return Err(SimError::UnknownNet(target.to_string()));
            }
            match p.dir {
                PortDir::Input => {
                    if !block.is_env_driven(p.net) {
                        return Err(SimError::Config(format!(
                            "{instance}: input port {port} is driven inside the block"
                        )));
                    }
                }
                PortDir::Output => {
                    if !self.is_env_driven(target) {
                        return Err(SimError::MultipleDrivers {
                            net: self.net_name(target).to_string(),
                        });
                    }
                }
                PortDir::Probe => {
                    return Err(SimError::Config(format!(
                        "{instance}: probe port {port} cannot be bound"
                    )))
                }
            }
            if let Some(prev) = map[p.net.index()] {
                if prev != target {
                    return Err(SimError::Config(format!(
                        "{instance}: port {port} bound twice"
                    )));
                }
            }
            map[p.net.index()] = Some(target);
        }
        for (i, net) in block.nets.iter().enumerate() {
            if map[i].is_none() {
                let name = if instance.is_empty() {
                    net.name.clone()
                } else {
                    format!("{instance}.{}", net.name)
                };
                map[i] = Some(self.add_net(name, net.init)?);
            } else if let Some(target) = map[i] {
                // a bound output takes the block's reset level
                if !block.is_env_driven(NetId(i as u32)) {
                    self.nets[target.index()].init = net.init;
                }
            }
        }
        let remap = |n: NetId| map[n.index()].expect("all nets mapped");
        for g in &block.gates {
            let inputs: Vec<NetId> = g.inputs.iter().map(|&n| remap(n)).collect();
            self.add_gate(g.kind, &inputs, remap(g.output), g.delay)?;
        }
        for c in &block.clamps {
            self.clamps.push(Clamp {
                net: remap(c.net),
                ..*c
            });
        }
        Ok(block
            .ports
            .iter()
            .map(|(name, p)| (name.clone(), remap(p.net)))
            .collect())
    }

    /// Rejects feedback loops made only of combinational gates.
    pub fn check_cycles(&self) -> Result<(), SimError> {
        // Kahn's algorithm over nets, edges through non-breaking gates.
        let n = self.nets.len();
        let mut indeg = vec![0usize; n];
        let mut fanout: Vec<Vec<NetId>> = vec![Vec::new(); n];
        for g in &self.gates {
            if g.kind.breaks_cycles() {
                continue;
            }
            for &i in &g.inputs {
                fanout[i.index()].push(g.output);
                indeg[g.output.index()] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = stack.pop() {
            seen += 1;
            for &o in &fanout[i] {
                indeg[o.index()] -= 1;
                if indeg[o.index()] == 0 {
                    stack.push(o.index());
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            let nets = (0..n)
                .filter(|&i| indeg[i] > 0)
                .take(8)
                .map(|i| self.nets[i].name.clone())
                .collect();
            Err(SimError::CombinationalCycle { nets })
        }
    }

    /// Static longest path (sum of gate delays) from `from` to `to`, only
    /// traversing gates accepted by `through`. Returns `None` when `to` is
    /// unreachable.
    pub fn longest_path(
        &self,
        from: NetId,
        to: NetId,
        through: impl Fn(&Gate) -> bool,
    ) -> Option<SimTime> {
        let mut fanout: Vec<Vec<&Gate>> = vec![Vec::new(); self.nets.len()];
        for g in self.gates.iter().filter(|g| through(g)) {
            for &i in &g.inputs {
                fanout[i.index()].push(g);
            }
        }
        // memo: None = unvisited, Some(None) = unreachable / on stack
        let mut memo: Vec<Option<Option<SimTime>>> = vec![None; self.nets.len()];
        fn visit(
            n: NetId,
            to: NetId,
            fanout: &[Vec<&Gate>],
            memo: &mut Vec<Option<Option<SimTime>>>,
        ) -> Option<SimTime> {
            if n == to {
                return Some(0);
            }
            if let Some(m) = memo[n.index()] {
                return m;
            }
            memo[n.index()] = Some(None);
            let mut best: Option<SimTime> = None;
            for g in &fanout[n.index()] {
                if let Some(rest) = visit(g.output, to, fanout, memo) {
                    let d = g.delay + rest;
                    best = Some(best.map_or(d, |b| b.max(d)));
                }
            }
            memo[n.index()] = Some(best);
            best
        }
        visit(from, to, &fanout, &mut memo)
    }
}
