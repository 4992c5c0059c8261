//! Bundled-data builders.

use super::{bit, cel_inv2, check_stages, check_width, BlockPorts, Builder, DeltaPolicy, Delays};
use crate::kernel::{GateKind, LogicLevel, NetId, Netlist, SimError, SimTime};

use LogicLevel::{High, Low, Unknown};

/// Four-to-two phase merge for bundled data.
///
/// Ports: inputs `rU`, `rT`, `ud.b*`, `td.b*`, `aUT`; outputs `aU`, `aT`,
/// `rUT`, `utd.b*`; probe `m` (the C-element output before the matched
/// delay).
pub fn build_merge_bd(
    k: usize,
    delays: &mut Delays,
    delta: DeltaPolicy,
) -> Result<(Netlist, BlockPorts), SimError> {
    check_width(k)?;
    let mut b = Builder::new(delays);
    let ru = b.input("rU", Low)?;
    let rt = b.input("rT", Low)?;
    let aut = b.input("aUT", Low)?;
    let ud: Vec<NetId> = (0..k)
        .map(|i| b.input(&format!("ud.{}", bit(i)), Low))
        .collect::<Result<_, _>>()?;
    let td: Vec<NetId> = (0..k)
        .map(|i| b.input(&format!("td.{}", bit(i)), Low))
        .collect::<Result<_, _>>()?;

    let m = b.g(cel_inv2(), &[ru, rt], "m", Low)?;
    let mut outs = Vec::with_capacity(k);
    for i in 0..k {
        let o = b.g(GateKind::Mux2, &[m, td[i], ud[i]], &format!("utd.{}", bit(i)), Unknown)?;
        outs.push(o);
    }
    let delta = match delta {
        DeltaPolicy::Fixed(d) => d,
        DeltaPolicy::Auto => {
            outs.iter()
                .filter_map(|&o| b.nl.longest_path(m, o, |g| !g.kind.is_sequential()))
                .max()
                .unwrap_or(0)
                + 1
        }
    };
    let rut = b.matched(m, "rUT", delta)?;
    let au = b.g(GateKind::Buf, &[aut], "aU", Unknown)?;
    let at = b.g(GateKind::Inv, &[aut], "aT", Unknown)?;

    b.output("rUT", rut);
    b.output("aU", au);
    b.output("aT", at);
    for (i, &o) in outs.iter().enumerate() {
        b.output(&format!("utd.{}", bit(i)), o);
    }
    b.probe("m", m);
    Ok(b.finish())
}

/// Two-to-four phase split for bundled data.
///
/// Ports: inputs `rUT`, `utd.b*`, `aU`, `aT`; outputs `rU`, `rT`, `ud.b*`,
/// `td.b*` (the data bus is forked, so `ud.b*` and `td.b*` alias `utd.b*`),
/// `aUT`.
pub fn build_split_bd(k: usize, delays: &mut Delays) -> Result<(Netlist, BlockPorts), SimError> {
    check_width(k)?;
    let mut b = Builder::new(delays);
    let rut = b.input("rUT", Low)?;
    let au = b.input("aU", Low)?;
    let at = b.input("aT", High)?;
    let data: Vec<NetId> = (0..k)
        .map(|i| b.input(&format!("utd.{}", bit(i)), Low))
        .collect::<Result<_, _>>()?;

    let d = b.d.gate(GateKind::Inv);
    let ru = b.gd(GateKind::Buf, &[rut], "rU", Unknown, d)?;
    let rt = b.gd(GateKind::Inv, &[rut], "rT", Unknown, d)?;
    let aut = b.g(cel_inv2(), &[au, at], "aUT", Low)?;

    b.output("rU", ru);
    b.output("rT", rt);
    b.output("aUT", aut);
    for (i, &n) in data.iter().enumerate() {
        b.output(&format!("ud.{}", bit(i)), n);
        b.output(&format!("td.{}", bit(i)), n);
    }
    Ok(b.finish())
}

/// Four-phase bundled-data Muller pipeline with normally transparent
/// latches.
///
/// Stage `i` (1-based): `s{i}.c = CEL(r_i, !c_{i+1})`, `s{i}.le = INV(c)`,
/// `s{i}.q.b* = LATCH(d, le)`, `s{i}.req_out = DELAY(c)`. Ports: inputs
/// `r_in`, `d_in.b*`, `a_out`; outputs `a_in`, `r_out`, `d_out.b*`.
pub fn build_bd_pipeline(
    n: usize,
    k: usize,
    delta: SimTime,
    comb: &[SimTime],
    delays: &mut Delays,
) -> Result<(Netlist, BlockPorts), SimError> {
    check_stages(n)?;
    check_width(k)?;
    let mut b = Builder::new(delays);
    let r_in = b.input("r_in", Low)?;
    let a_out = b.input("a_out", Low)?;
    let mut data: Vec<NetId> = (0..k)
        .map(|i| b.input(&format!("d_in.{}", bit(i)), Low))
        .collect::<Result<_, _>>()?;

    // One C-element output net per stage.
    let cs: Vec<NetId> = (1..=n)
        .map(|i| b.nl.add_net(format!("s{i}.c"), Low))
        .collect::<Result<_, _>>()?;
    let mut req = r_in;
    for i in 0..n {
        let s = i + 1;
        let next = if i + 1 < n { cs[i + 1] } else { a_out };
        let d = b.d.gate(GateKind::Cel(Default::default()));
        b.nl.add_gate(cel_inv2(), &[req, next], cs[i], d)?;
        let le = b.g(GateKind::Inv, &[cs[i]], &format!("s{s}.le"), High)?;
        let mut q = Vec::with_capacity(k);
        for (j, &dj) in data.iter().enumerate() {
            let l = b.g(GateKind::Latch, &[dj, le], &format!("s{s}.q.{}", bit(j)), Low)?;
            q.push(l);
        }
        if let Some(&cd) = comb.get(i).filter(|&&c| c > 0) {
            q = q
                .iter()
                .enumerate()
                .map(|(j, &l)| b.gd(GateKind::Delay, &[l], &format!("s{s}.comb.{}", bit(j)), Unknown, cd))
                .collect::<Result<_, _>>()?;
        }
        data = q;
        req = b.matched(cs[i], &format!("s{s}.req_out"), delta)?;
    }
    let a_in = b.gd(GateKind::Buf, &[cs[0]], "a_in", Unknown, 0)?;
    b.output("a_in", a_in);
    b.output("r_out", req);
    for (j, &d) in data.iter().enumerate() {
        b.output(&format!("d_out.{}", bit(j)), d);
    }
    Ok(b.finish())
}

/// Two-phase bundled-data pipeline with capture/pass registers.
///
/// Stage `i`: `s{i}.c = CEL(r_i, !c_{i+1})`, `s{i}.reg.b* = CAPTURE(d, c)`,
/// optional `s{i}.comb.b*` delay, and `s{i}.req_out` matched delay. Ports:
/// inputs `r_in`, `d_in.b*`, `a_out`; outputs `a_in`, `r_out`, `d_out.b*`.
pub fn build_2phase_dut_bd(
    n: usize,
    k: usize,
    delta: DeltaPolicy,
    comb: &[SimTime],
    delays: &mut Delays,
) -> Result<(Netlist, BlockPorts), SimError> {
    check_stages(n)?;
    check_width(k)?;
    let mut b = Builder::new(delays);
    let r_in = b.input("r_in", Low)?;
    let a_out = b.input("a_out", Low)?;
    let mut data: Vec<NetId> = (0..k)
        .map(|i| b.input(&format!("d_in.{}", bit(i)), Low))
        .collect::<Result<_, _>>()?;

    let cs: Vec<NetId> = (1..=n)
        .map(|i| b.nl.add_net(format!("s{i}.c"), Low))
        .collect::<Result<_, _>>()?;
    let mut req = r_in;
    for i in 0..n {
        let s = i + 1;
        let next = if i + 1 < n { cs[i + 1] } else { a_out };
        let d = b.d.gate(GateKind::Cel(Default::default()));
        b.nl.add_gate(cel_inv2(), &[req, next], cs[i], d)?;
        let mut q = Vec::with_capacity(k);
        let mut path = 0;
        for (j, &dj) in data.iter().enumerate() {
            let r = b.g(GateKind::Capture, &[dj, cs[i]], &format!("s{s}.reg.{}", bit(j)), Low)?;
            path = path.max(b.delay_of(r));
            q.push(r);
        }
        let cd = comb.get(i).copied().unwrap_or(0);
        if cd > 0 {
            q = q
                .iter()
                .enumerate()
                .map(|(j, &r)| b.gd(GateKind::Delay, &[r], &format!("s{s}.comb.{}", bit(j)), Unknown, cd))
                .collect::<Result<_, _>>()?;
        }
        data = q;
        let dl = match delta {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Auto => path + cd + 1,
        };
        req = b.matched(cs[i], &format!("s{s}.req_out"), dl)?;
    }
    let a_in = b.gd(GateKind::Buf, &[cs[0]], "a_in", Unknown, 0)?;
    b.output("a_in", a_in);
    b.output("r_out", req);
    for (j, &d) in data.iter().enumerate() {
        b.output(&format!("d_out.{}", bit(j)), d);
    }
    Ok(b.finish())
}
