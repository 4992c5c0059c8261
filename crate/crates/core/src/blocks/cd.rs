//! Completion-detection builders: dual-rail four-phase on the outside,
//! level-encoded dual-rail two-phase between merge and split.

use super::{bit, cel_inv2, check_stages, check_width, BlockPorts, Builder, Delays};
use crate::kernel::{GateKind, LogicLevel, NetId, Netlist, SimError, SimTime};

use LogicLevel::{High, Low, Unknown};

fn rail_inputs(b: &mut Builder<'_>, bus: &str, k: usize, r0: &str, r1: &str) -> Result<Vec<(NetId, NetId)>, SimError> {
    (0..k)
        .map(|i| {
            let x = b.input(&format!("{bus}.{}.{r0}", bit(i)), Low)?;
            let y = b.input(&format!("{bus}.{}.{r1}", bit(i)), Low)?;
            Ok((x, y))
        })
        .collect()
}

/// OR per bit followed by a C-element tree. Ports: inputs `b*.hi`, `b*.lo`;
/// output `done` (high once every bit is valid, low once every bit is NULL).
pub fn build_completion_detector(k: usize, delays: &mut Delays) -> Result<(Netlist, BlockPorts), SimError> {
    check_width(k)?;
    let mut b = Builder::new(delays);
    let mut any = Vec::with_capacity(k);
    for i in 0..k {
        let hi = b.input(&format!("{}.hi", bit(i)), Low)?;
        let lo = b.input(&format!("{}.lo", bit(i)), Low)?;
        any.push(b.g(GateKind::Or2, &[hi, lo], &format!("{}.any", bit(i)), Unknown)?);
    }
    let root = b.cel_tree(&any, "cd", Low)?;
    let done = if k == 1 {
        b.gd(GateKind::Buf, &[root], "done", Unknown, 0)?
    } else {
        root
    };
    b.output("done", done);
    Ok(b.finish())
}

/// Four-phase dual-rail to two-phase level-encoded merge.
///
/// Per bit: `val = CEL(ud.hi | td.hi, !(ud.lo | td.lo))` and
/// `phs = CEL(ud.lo | td.hi, !(ud.hi | td.lo))`. The acknowledges follow
/// `aUT`, and each source is released only after the other stream has
/// returned to NULL. Ports: inputs `ud.b*.hi/lo`, `td.b*.hi/lo`, `aUT`;
/// outputs `utd.b*.val/phs`, `aU`, `aT`.
pub fn build_merge_cd(k: usize, delays: &mut Delays) -> Result<(Netlist, BlockPorts), SimError> {
    check_width(k)?;
    let mut b = Builder::new(delays);
    let aut = b.input("aUT", Low)?;
    let ud = rail_inputs(&mut b, "ud", k, "hi", "lo")?;
    let td = rail_inputs(&mut b, "td", k, "hi", "lo")?;
    for i in 0..k {
        let p = bit(i);
        let (uh, ul) = ud[i];
        let (th, tl) = td[i];
        let o1 = b.g(GateKind::Or2, &[uh, th], &format!("{p}.set_val"), Unknown)?;
        let o2 = b.g(GateKind::Or2, &[ul, tl], &format!("{p}.clr_val"), Unknown)?;
        let o3 = b.g(GateKind::Or2, &[ul, th], &format!("{p}.set_phs"), Unknown)?;
        let o4 = b.g(GateKind::Or2, &[uh, tl], &format!("{p}.clr_phs"), Unknown)?;
        let val = b.g(cel_inv2(), &[o1, o2], &format!("utd.{p}.val"), Low)?;
        let phs = b.g(cel_inv2(), &[o3, o4], &format!("utd.{p}.phs"), Low)?;
        b.output(&format!("utd.{p}.val"), val);
        b.output(&format!("utd.{p}.phs"), phs);
    }
    let ud_rails: Vec<NetId> = ud.iter().flat_map(|&(h, l)| [h, l]).collect();
    let td_rails: Vec<NetId> = td.iter().flat_map(|&(h, l)| [h, l]).collect();
    let any_u = b.or_tree(&ud_rails, "any_ud")?;
    let any_t = b.or_tree(&td_rails, "any_td")?;
    let naut = b.g(GateKind::Inv, &[aut], "naUT", Unknown)?;
    let au = b.g(GateKind::Or2, &[aut, any_t], "aU", Unknown)?;
    let at = b.g(GateKind::Or2, &[naut, any_u], "aT", Unknown)?;
    b.output("aU", au);
    b.output("aT", at);
    Ok(b.finish())
}

/// Two-phase level-encoded to four-phase dual-rail split.
///
/// Per bit the phase `p = val ^ phs` enables one output pair; the value rail
/// is delayed (`b*.value`) so it settles while both pairs are disabled,
/// which keeps the outputs glitch-free and makes NULL spacers appear
/// between consecutive codewords. Ports: inputs `utd.b*.val/phs`, `aU`,
/// `aT`; outputs `ud.b*.hi/lo`, `td.b*.hi/lo`, `aUT`.
pub fn build_split_cd(k: usize, delays: &mut Delays) -> Result<(Netlist, BlockPorts), SimError> {
    check_width(k)?;
    let mut b = Builder::new(delays);
    let au = b.input("aU", Low)?;
    let at = b.input("aT", High)?;
    let utd = rail_inputs(&mut b, "utd", k, "val", "phs")?;
    for (i, &(val, phs)) in utd.iter().enumerate() {
        let p = bit(i);
        let d_xor = b.d.gate(GateKind::Xor2);
        let d_np = b.d.gate(GateKind::Inv);
        let d_nv = b.d.gate(GateKind::Inv);
        let d_au = b.d.gate(GateKind::And2);
        let d_at = b.d.gate(GateKind::And2);
        let v_delay = d_xor + d_au.max(d_np + d_at) + 1;
        let du = (v_delay + d_nv + 1).saturating_sub(d_xor + d_au).max(1);
        let dt = (v_delay + d_nv + 1).saturating_sub(d_xor + d_np + d_at).max(1);

        let par = b.gd(GateKind::Xor2, &[val, phs], &format!("{p}.parity"), Unknown, d_xor)?;
        let npar = b.gd(GateKind::Inv, &[par], &format!("{p}.nparity"), Unknown, d_np)?;
        let v = b.gd(GateKind::Delay, &[val], &format!("{p}.value"), Unknown, v_delay)?;
        let nv = b.gd(GateKind::Inv, &[v], &format!("{p}.nvalue"), Unknown, d_nv)?;
        let pu_d = b.gd(GateKind::Delay, &[par], &format!("{p}.user_dly"), Unknown, du)?;
        let pt_d = b.gd(GateKind::Delay, &[npar], &format!("{p}.test_dly"), Unknown, dt)?;
        let pu = b.gd(GateKind::And2, &[par, pu_d], &format!("{p}.user_en"), Unknown, d_au)?;
        let pt = b.gd(GateKind::And2, &[npar, pt_d], &format!("{p}.test_en"), Unknown, d_at)?;
        let uh = b.g(GateKind::And2, &[v, pu], &format!("ud.{p}.hi"), Unknown)?;
        let ul = b.g(GateKind::And2, &[nv, pu], &format!("ud.{p}.lo"), Unknown)?;
        let th = b.g(GateKind::And2, &[v, pt], &format!("td.{p}.hi"), Unknown)?;
        let tl = b.g(GateKind::And2, &[nv, pt], &format!("td.{p}.lo"), Unknown)?;
        b.output(&format!("ud.{p}.hi"), uh);
        b.output(&format!("ud.{p}.lo"), ul);
        b.output(&format!("td.{p}.hi"), th);
        b.output(&format!("td.{p}.lo"), tl);
    }
    let aut = b.g(cel_inv2(), &[au, at], "aUT", Low)?;
    b.output("aUT", aut);
    Ok(b.finish())
}

/// Level-encoded dual-rail two-phase pipeline.
///
/// Each stage latches its input rails while `s{i}.en` is high. The stage
/// phase `s{i}.phase` is the C-element tree over the per-bit parities of
/// the latched word. The stage is busy while its word is unconsumed
/// downstream (`s{i}.pending = phase ^ ack_next`) or not yet acknowledged
/// upstream (`s{i}.fresh = phase ^ ack`). A non-overlapping pair
/// (`s{i}.en` for the data latches, `s{i}.closed` for the acknowledge
/// latch) makes `s{i}.ack` follow the phase only while the data latches
/// are closed. Ports: inputs `in.b*.val/phs`, `a_out`; outputs
/// `out.b*.val/phs`, `a_in`.
pub fn build_2phase_dut_cd(
    n: usize,
    k: usize,
    comb: &[SimTime],
    delays: &mut Delays,
) -> Result<(Netlist, BlockPorts), SimError> {
    check_stages(n)?;
    check_width(k)?;
    let mut b = Builder::new(delays);
    let a_out = b.input("a_out", Low)?;
    let mut data = rail_inputs(&mut b, "in", k, "val", "phs")?;

    // One acknowledge net per stage.
    let acks: Vec<NetId> = (1..=n)
        .map(|s| b.nl.add_net(format!("s{s}.ack"), Low))
        .collect::<Result<_, _>>()?;
    for i in 0..n {
        let s = i + 1;
        let ack_next = if i + 1 < n { acks[i + 1] } else { a_out };
        let en = b.nl.add_net(format!("s{s}.en"), High)?;
        let nm = b.nl.add_net(format!("s{s}.nclosed"), High)?;

        let mut out = Vec::with_capacity(k);
        let mut parities = Vec::with_capacity(k);
        for (j, &(val, phs)) in data.iter().enumerate() {
            let p = format!("s{s}.{}", bit(j));
            let v = b.g(GateKind::Latch, &[val, en], &format!("{p}.val"), Low)?;
            let h = b.g(GateKind::Latch, &[phs, en], &format!("{p}.phs"), Low)?;
            parities.push(b.g(GateKind::Xor2, &[v, h], &format!("{p}.parity"), Unknown)?);
            out.push((v, h));
        }
        let tree = b.cel_tree(&parities, &format!("s{s}.cd"), Low)?;
        let phase = if k == 1 {
            b.g(GateKind::Buf, &[tree], &format!("s{s}.phase"), Unknown)?
        } else {
            tree
        };
        let x = b.g(GateKind::Xor2, &[phase, ack_next], &format!("s{s}.pending"), Unknown)?;
        let y = b.g(GateKind::Xor2, &[phase, acks[i]], &format!("s{s}.fresh"), Unknown)?;
        let busy = b.g(GateKind::Or2, &[x, y], &format!("s{s}.busy"), Unknown)?;
        let open = b.g(GateKind::Inv, &[busy], &format!("s{s}.open"), Unknown)?;
        let d = b.d.gate(GateKind::And2);
        b.nl.add_gate(GateKind::And2, &[open, nm], en, d)?;
        let nen = b.g(GateKind::Inv, &[en], &format!("s{s}.nen"), Unknown)?;
        let closed = b.g(GateKind::Latch, &[busy, nen], &format!("s{s}.closed"), Low)?;
        let d = b.d.gate(GateKind::Inv);
        b.nl.add_gate(GateKind::Inv, &[closed], nm, d)?;
        let d = b.d.gate(GateKind::Latch);
        b.nl.add_gate(GateKind::Latch, &[phase, closed], acks[i], d)?;

        let cd = comb.get(i).copied().unwrap_or(0);
        if cd > 0 {
            out = out
                .iter()
                .enumerate()
                .map(|(j, &(v, h))| {
                    let p = format!("s{s}.comb.{}", bit(j));
                    Ok((
                        b.gd(GateKind::Delay, &[v], &format!("{p}.val"), Unknown, cd)?,
                        b.gd(GateKind::Delay, &[h], &format!("{p}.phs"), Unknown, cd)?,
                    ))
                })
                .collect::<Result<_, SimError>>()?;
        }
        data = out;
    }
    let a_in = b.gd(GateKind::Buf, &[acks[0]], "a_in", Unknown, 0)?;
    b.output("a_in", a_in);
    for (j, &(v, h)) in data.iter().enumerate() {
        b.output(&format!("out.{}.val", bit(j)), v);
        b.output(&format!("out.{}.phs", bit(j)), h);
    }
    Ok(b.finish())
}
