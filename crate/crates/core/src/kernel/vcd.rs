//! Value-change-dump export.

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::level::{LogicLevel, NetId, SimTime};
use super::trace::Trace;

fn ident(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            break;
        }
    }
    s
}

#[derive(Default)]
struct Scope {
    vars: Vec<(String, usize)>,
    children: BTreeMap<String, Scope>,
}

fn write_scope<W: Write>(w: &mut W, name: &str, scope: &Scope) -> io::Result<()> {
    writeln!(w, "$scope module {name} $end")?;
    for (leaf, idx) in &scope.vars {
        writeln!(w, "$var wire 1 {} {} $end", ident(*idx), leaf)?;
    }
    for (child, sub) in &scope.children {
        write_scope(w, child, sub)?;
    }
    writeln!(w, "$upscope $end")
}

/// Writes `nets` of `trace` (all nets when `None`). Dotted net names become
/// nested scopes; one tick is written as 1 ns.
pub fn write_vcd<W: Write>(w: &mut W, trace: &Trace, nets: Option<&[NetId]>) -> io::Result<()> {
    let all: Vec<NetId> = match nets {
        Some(n) => n.to_vec(),
        None => (0..trace.net_count() as u32).map(NetId).collect(),
    };
    writeln!(w, "$timescale 1ns $end")?;
    let mut root = Scope::default();
    for &n in &all {
        let name = &trace.names()[n.index()];
        let mut parts: Vec<&str> = name.split('.').collect();
        let leaf = parts.pop().unwrap_or(name);
        let mut s = &mut root;
        for p in parts {
            s = s.children.entry(p.to_string()).or_default();
        }
        s.vars.push((leaf.to_string(), n.index()));
    }
    write_scope(w, "top", &root)?;
    writeln!(w, "$enddefinitions $end")?;

    let mut changes: Vec<(SimTime, usize, LogicLevel)> = Vec::new();
    for &n in &all {
        for &(t, l) in trace.wave(n) {
            changes.push((t, n.index(), l));
        }
    }
    changes.sort_by_key(|&(t, i, _)| (t, i));
    writeln!(w, "#0")?;
    writeln!(w, "$dumpvars")?;
    for &n in &all {
        let l = trace.level_at(n, 0);
        writeln!(w, "{}{}", l.vcd_char(), ident(n.index()))?;
    }
    writeln!(w, "$end")?;
    let mut cur: Option<SimTime> = Some(0);
    for (t, i, l) in changes {
        if t == 0 {
            continue;
        }
        if cur != Some(t) {
            writeln!(w, "#{t}")?;
            cur = Some(t);
        }
        writeln!(w, "{}{}", l.vcd_char(), ident(i))?;
    }
    if cur != Some(trace.end_time()) {
        writeln!(w, "#{}", trace.end_time())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scopes_and_changes() {
        let mut tr = Trace::new(vec!["dut.s1.c".into(), "top_req".into()]);
        tr.record(NetId(0), 0, LogicLevel::Low);
        tr.record(NetId(1), 0, LogicLevel::Low);
        tr.record(NetId(0), 3, LogicLevel::High);
        let mut buf = Vec::new();
        write_vcd(&mut buf, &tr, None).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("$scope module dut $end"));
        assert!(s.contains("$scope module s1 $end"));
        assert!(s.contains("$var wire 1 ! c $end"));
        assert!(s.contains("#3\n1!"));
    }

    #[test]
    fn identifiers_are_unique() {
        let ids: std::collections::HashSet<String> = (0..20000).map(ident).collect();
        assert_eq!(ids.len(), 20000);
    }
}
