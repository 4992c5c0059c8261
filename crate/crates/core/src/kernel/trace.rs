use super::level::{LogicLevel, NetId, SimTime};

/// Per-net waveform: ordered `(time, level)` entries. The first entry of a
/// net is its settled reset level at t=0 (omitted while the level is
/// unknown); every further entry is a transition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    names: Vec<String>,
    waves: Vec<Vec<(SimTime, LogicLevel)>>,
    end: SimTime,
}

impl Trace {
    pub fn new(names: Vec<String>) -> Self {
        let waves = vec![Vec::new(); names.len()];
        Trace {
            names,
            waves,
            end: 0,
        }
    }

    /// Records `level` on `net` at `time`. A second change at the same
    /// instant overwrites the first (zero-time glitches are not kept).
    pub(crate) fn record(&mut self, net: NetId, time: SimTime, level: LogicLevel) {
        let w = &mut self.waves[net.index()];
        match w.last_mut() {
            Some(last) if last.0 == time => {
                last.1 = level;
                let n = w.len();
                if n >= 2 && w[n - 2].1 == level {
                    w.pop();
                }
            }
            Some(last) if last.1 == level => {}
            _ => w.push((time, level)),
        }
        self.end = self.end.max(time);
    }

    pub(crate) fn set_end(&mut self, t: SimTime) {
        self.end = self.end.max(t);
    }

    pub fn end_time(&self) -> SimTime {
        self.end
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn net_count(&self) -> usize {
        self.names.len()
    }

    pub fn wave(&self, net: NetId) -> &[(SimTime, LogicLevel)] {
        &self.waves[net.index()]
    }

    /// True when no net ever carried a known level.
    pub fn is_empty(&self) -> bool {
        self.waves.iter().all(|w| w.is_empty())
    }

    pub fn level_at(&self, net: NetId, t: SimTime) -> LogicLevel {
        let w = &self.waves[net.index()];
        match w.partition_point(|&(ts, _)| ts <= t) {
            0 => LogicLevel::Unknown,
            i => w[i - 1].1,
        }
    }

    pub fn final_level(&self, net: NetId) -> LogicLevel {
        self.waves[net.index()]
            .last()
            .map_or(LogicLevel::Unknown, |&(_, l)| l)
    }

    /// Times at which `net` changed after reset.
    pub fn edges(&self, net: NetId) -> impl Iterator<Item = (SimTime, LogicLevel)> + '_ {
        let w = &self.waves[net.index()];
        let skip = usize::from(w.first().is_some_and(|&(t, _)| t == 0));
        w.iter().skip(skip).copied()
    }

    /// Joint snapshots of `nets`: the reset snapshot at t=0 followed by one
    /// snapshot per instant at which any of them changed.
    pub fn snapshots(&self, nets: &[NetId]) -> Vec<(SimTime, Vec<LogicLevel>)> {
        let mut times: Vec<SimTime> = nets
            .iter()
            .flat_map(|&n| self.waves[n.index()].iter().map(|&(t, _)| t))
            .collect();
        times.push(0);
        times.sort_unstable();
        times.dedup();
        let mut cursors = vec![0usize; nets.len()];
        let mut current = vec![LogicLevel::Unknown; nets.len()];
        let mut out = Vec::with_capacity(times.len());
        for t in times {
            for (i, &n) in nets.iter().enumerate() {
                let w = &self.waves[n.index()];
                while cursors[i] < w.len() && w[cursors[i]].0 <= t {
                    current[i] = w[cursors[i]].1;
                    cursors[i] += 1;
                }
            }
            out.push((t, current.clone()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicLevel::*;

    #[test]
    fn same_instant_overwrites_and_collapses() {
        let mut tr = Trace::new(vec!["a".into()]);
        let a = NetId(0);
        tr.record(a, 0, Low);
        tr.record(a, 4, High);
        tr.record(a, 4, Low);
        assert_eq!(tr.wave(a), &[(0, Low)]);
        tr.record(a, 6, High);
        assert_eq!(tr.level_at(a, 5), Low);
        assert_eq!(tr.level_at(a, 6), High);
        assert_eq!(tr.edges(a).collect::<Vec<_>>(), vec![(6, High)]);
    }

    #[test]
    fn snapshots_merge_nets() {
        let mut tr = Trace::new(vec!["a".into(), "b".into()]);
        tr.record(NetId(0), 0, Low);
        tr.record(NetId(1), 0, Low);
        tr.record(NetId(0), 3, High);
        tr.record(NetId(1), 5, High);
        let s = tr.snapshots(&[NetId(0), NetId(1)]);
        assert_eq!(
            s,
            vec![
                (0, vec![Low, Low]),
                (3, vec![High, Low]),
                (5, vec![High, High])
            ]
        );
    }
}
