use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cbist::blocks::{DelayProfile, DeltaPolicy, DutStyle};
use cbist::codec::{
    fourphase_to_utd, ledr_encode_word, ncl_decode, utd_to_fourphase, ChannelKind, DualRailBit, LedrBit,
    NclSymbol, StreamPhase,
};
use cbist::harness::{assemble, loopback, run_scenario, FaultSpec, Scenario, ScenarioResult, TestVectorSet};
use cbist::kernel::{run, Event, GateKind, LogicLevel, Netlist, Polarity, SimTime};
use cbist::overhead::{published, AreaModelExact, DataLines, DelayModelExact};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use LogicLevel::{High, Low};

fn check(failures: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

fn rel_err(computed: f64, expected: f64) -> f64 {
    (computed - expected).abs() / expected.abs()
}

fn lv(b: bool) -> LogicLevel {
    LogicLevel::from_bool(b)
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn fault_scenario(style: DutStyle) -> Scenario {
    let site = match style {
        DutStyle::Bd => "dut.s2.reg.b3",
        DutStyle::Cd => "split.b3.value",
    };
    let mut sc = Scenario::new(style, 3, 8);
    sc.user_words = vec![0x12, 0x3F, 0xC4, 0x3F, 0x21];
    sc.vectors = TestVectorSet {
        vectors: vec![0x9B],
        repeat: true,
    };
    sc.faults = vec![FaultSpec {
        net: site.into(),
        stuck_at: false,
        from: 0,
    }];
    sc
}

fn criterion_1_fault_detection() -> Vec<String> {
    let mut f = Vec::new();
    for style in [DutStyle::Bd, DutStyle::Cd] {
        let sc = fault_scenario(style);
        let start = Instant::now();
        let r = match run_scenario(&sc) {
            Ok(r) => r,
            Err(e) => {
                f.push(format!("{style}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        check(&mut f, r.user_values() == vec![0x12, 0x37, 0xC4, 0x37, 0x21], || {
            format!("{style}: user output {:02X?}", r.user_values())
        });
        let responses = r.response_values();
        check(&mut f, !responses.is_empty() && responses.iter().all(|&v| v == 0x93), || {
            format!("{style}: responses {responses:02X?}")
        });
        let first = r.test_responses.first().map(|&(_, t)| t);
        check(&mut f, first.is_some() && r.detection_time() == first, || {
            format!("{style}: cmp_dev rose at {:?}, first response at {first:?}", r.detection_time())
        });
        check(&mut f, elapsed < Duration::from_secs(1), || format!("{style}: took {elapsed:?}"));
        println!("  {style}: user {:02X?}, first response 93 at {first:?}, {elapsed:?}", r.user_values());
    }
    f
}

fn criterion_2_transparency() -> Vec<String> {
    let mut f = Vec::new();
    let start = Instant::now();
    for style in [DutStyle::Bd, DutStyle::Cd] {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ seed);
            let mut sc = Scenario::new(style, 3, 8);
            sc.user_words = (0..1000).map(|_| rng.gen_range(0..256)).collect();
            let count = rng.gen_range(1..=16);
            sc.vectors = TestVectorSet {
                vectors: (0..count).map(|_| rng.gen_range(0..256)).collect(),
                repeat: true,
            };
            sc.delta = DeltaPolicy::Auto;
            sc.delays = DelayProfile::Uniform { lo: 1, hi: 10, seed };
            let r = match run_scenario(&sc) {
                Ok(r) => r,
                Err(e) => {
                    f.push(format!("{style} seed {seed}: {e}"));
                    continue;
                }
            };
            check(&mut f, r.user_values() == sc.user_words, || format!("{style} seed {seed}: user stream differs"));
            check(&mut f, r.violation_count() == 0, || {
                format!("{style} seed {seed}: {} violations", r.violation_count())
            });
            check(&mut f, r.cmp_dev.iter().all(|(_, l)| *l == Low), || format!("{style} seed {seed}: cmp_dev rose"));
        }
    }
    let elapsed = start.elapsed();
    check(&mut f, elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"));
    println!("  40 runs of 1000 words in {elapsed:?}");
    f
}

fn criterion_3_conversion_table() -> Vec<String> {
    let mut f = Vec::new();
    let table = [
        ((false, false), (0, 0), (0, 1)),
        ((false, true), (0, 1), (0, 0)),
        ((true, false), (1, 0), (0, 0)),
        ((true, true), (0, 0), (1, 0)),
    ];
    let dr = |(h, l): (u8, u8)| DualRailBit::new(lv(h == 1), lv(l == 1));
    for ((v, p), u, t) in table {
        let rails = LedrBit::new(lv(v), lv(p));
        check(&mut f, utd_to_fourphase(rails) == (dr(u), dr(t)), || format!("row {rails} forward"));
        for prev in [LedrBit::new(Low, Low), LedrBit::new(High, High)] {
            check(&mut f, fourphase_to_utd(dr(u), dr(t), prev) == Ok(rails), || format!("row {rails} back"));
        }
    }
    for k in 1..=4usize {
        let words: Vec<u64> = (0..1u64 << k).collect();
        for phase in [StreamPhase::User, StreamPhase::Test] {
            for &w in &words {
                let rails = ledr_encode_word(w, k, phase);
                let round = rails.iter().enumerate().all(|(i, &r)| {
                    let (u, t) = utd_to_fourphase(r);
                    let (live, idle) = if phase == StreamPhase::User { (u, t) } else { (t, u) };
                    ncl_decode(live) == Ok(NclSymbol::bit(w >> i & 1 == 1))
                        && idle == DualRailBit::NULL
                        && fourphase_to_utd(u, t, LedrBit::new(Low, Low)) == Ok(r)
                });
                check(&mut f, round, || format!("pure k={k} {phase} word {w}"));
            }
        }
        let reversed: Vec<u64> = words.iter().rev().copied().collect();
        for style in [DutStyle::Cd, DutStyle::Bd] {
            let lb = match loopback(style, k, &words, &reversed, DelayProfile::Fixed) {
                Ok(lb) => lb,
                Err(e) => {
                    f.push(format!("{style} k={k}: {e}"));
                    continue;
                }
            };
            check(&mut f, lb.user_out == words, || format!("{style} k={k}: user {:?}", lb.user_out));
            check(&mut f, lb.test_out == reversed, || format!("{style} k={k}: test {:?}", lb.test_out));
            for (name, r) in &lb.reports {
                check(&mut f, r.is_clean(), || format!("{style} k={k} {name}: {:?}", r.violations));
            }
            if let ChannelKind::Ledr2 { rails, .. } = lb.channel("utd") {
                for w in &lb.reports["utd"].words {
                    let seen: Vec<LedrBit> = rails
                        .iter()
                        .map(|&(v, p)| LedrBit::new(lb.trace.level_at(v, w.time), lb.trace.level_at(p, w.time)))
                        .collect();
                    check(&mut f, seen == ledr_encode_word(w.value, k, w.phase), || {
                        format!("k={k} t={}: rails {seen:?}", w.time)
                    });
                }
            }
        }
    }
    f
}

fn utd_rails(sc: &Scenario, channel: &str) -> Option<Vec<(cbist::NetId, cbist::NetId)>> {
    let asm = assemble(sc).ok()?;
    asm.channels.into_iter().find(|(n, _)| n == channel).and_then(|(_, k)| match k {
        ChannelKind::Ledr2 { rails, .. } => Some(rails),
        _ => None,
    })
}

fn alternation_failures(style: DutStyle, sc: &Scenario, r: &ScenarioResult, f: &mut Vec<String>) {
    for ch in ["utd_in", "utd_out"] {
        let rep = &r.reports[ch];
        check(f, rep.words.len() >= 1000, || format!("{style} {ch}: {} transfers", rep.words.len()));
        check(f, rep.is_clean(), || format!("{style} {ch}: {} violations", rep.violations.len()));
        let alternates = rep.words.iter().enumerate().all(|(i, w)| {
            w.phase == if i % 2 == 0 { StreamPhase::User } else { StreamPhase::Test }
        });
        check(f, alternates, || format!("{style} {ch}: phases do not alternate"));
        if style == DutStyle::Cd {
            let Some(rails) = utd_rails(sc, ch) else {
                f.push(format!("{ch}: not level-encoded"));
                continue;
            };
            for w in &rep.words {
                let uniform = rails.iter().all(|&(v, p)| {
                    let b = LedrBit::new(r.trace.level_at(v, w.time), r.trace.level_at(p, w.time));
                    b.phase() == Some(w.phase)
                });
                check(f, uniform, || format!("{ch} t={}: mixed parity", w.time));
            }
        }
    }
}

fn criterion_4_alternation_and_parity() -> Vec<String> {
    let mut f = Vec::new();
    for style in [DutStyle::Bd, DutStyle::Cd] {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sc = Scenario::new(style, 3, 8);
        sc.user_words = (0..1000).map(|_| rng.gen_range(0..256)).collect();
        sc.vectors = TestVectorSet {
            vectors: vec![0x5A, 0xA5, 0x9B],
            repeat: true,
        };
        sc.delays = DelayProfile::Uniform { lo: 1, hi: 10, seed: 4 };
        match run_scenario(&sc) {
            Ok(r) => alternation_failures(style, &sc, &r, &mut f),
            Err(e) => f.push(format!("{style}: {e}")),
        }
    }
    f
}

fn criterion_5_area_model() -> Vec<String> {
    let mut f = Vec::new();
    let pct = |v: Rational64| v.to_f64().unwrap();
    let bd = AreaModelExact::new(DutStyle::Bd);
    let cd = AreaModelExact::new(DutStyle::Cd);
    let asym = DataLines::Asymptotic;
    let mut cmp = |label: String, computed: f64, expected: f64| {
        let e = rel_err(computed, expected);
        println!("  {label}: {computed:.2} vs {expected:.2} ({:.2}%)", e * 100.0);
        check(&mut f, e <= 0.01, || format!("{label}: rel_err {:.2}%", e * 100.0));
    };
    cmp("BD n=1".into(), pct(bd.overhead(1, asym).unwrap().percent()), 217.0);
    cmp("BD limit".into(), pct(bd.limit_percent(asym)), 117.0);
    for n in [1u32, 2, 4, 8, 16] {
        cmp(format!("CD n={n}"), pct(cd.overhead(n, asym).unwrap().percent()), 5.7 + 94.0 / f64::from(n));
    }
    let exact = bd.overhead(1, asym).unwrap().percent();
    check(&mut f, exact == Rational64::new(650, 3), || format!("BD n=1 is {exact}"));
    f
}

fn criterion_6_delay_model() -> Vec<String> {
    let mut f = Vec::new();
    let pct = |v: Rational64| v.to_f64().unwrap();
    let bd = DelayModelExact::new(DutStyle::Bd, 8);
    for n in 1..=16u32 {
        let c = pct(bd.overhead(n).unwrap().percent());
        let e = rel_err(c, 17.0 + 117.0 / f64::from(n));
        println!("  BD n={n}: {c:.3} vs {:.3} ({:.2}%)", 17.0 + 117.0 / f64::from(n), e * 100.0);
        check(&mut f, e <= 0.01, || format!("BD n={n}: rel_err {:.2}%", e * 100.0));
    }
    // (k, n, value worked out by hand from (n + 8) / (n (2 ceil(log2 k) + 9)))
    let hand = [
        (2u32, 1u32, 900.0 / 11.0),
        (4, 2, 1000.0 / 26.0),
        (8, 1, 60.0),
        (8, 4, 20.0),
        (16, 16, 2400.0 / 272.0),
    ];
    for (k, n, expected) in hand {
        let c = pct(DelayModelExact::new(DutStyle::Cd, k).overhead(n).unwrap().percent());
        check(&mut f, (c - expected).abs() < 1e-9, || format!("CD k={k} n={n}: {c} vs hand {expected}"));
    }
    for k in [2u32, 4, 8, 16] {
        let m = DelayModelExact::new(DutStyle::Cd, k);
        for n in 1..=16u32 {
            let c = pct(m.overhead(n).unwrap().percent());
            let e = rel_err(c, published::delay_cd(n, k));
            check(&mut f, e <= 0.01, || format!("CD k={k} n={n}: rel_err {:.2}%", e * 100.0));
        }
    }
    f
}

fn two_input_run(kind: GateKind, seq: &[(bool, bool)], init: bool, rest: (bool, bool)) -> Vec<bool> {
    const STEP: SimTime = 4;
    let mut nl = Netlist::new();
    let a = nl.add_net("a", lv(rest.0)).unwrap();
    let b = nl.add_net("b", lv(rest.1)).unwrap();
    let q = nl.gate(kind, &[a, b], "q", lv(init), 1).unwrap();
    let stim: Vec<Event> = seq
        .iter()
        .enumerate()
        .flat_map(|(i, &(x, y))| {
            let t = 1 + STEP * i as SimTime;
            [Event::new(t, a, lv(x)), Event::new(t, b, lv(y))]
        })
        .collect();
    let trace = run(&nl, &stim, 1 + STEP * seq.len() as SimTime).unwrap();
    (1..=seq.len()).map(|i| trace.level_at(q, STEP * i as SimTime).is_high()).collect()
}

fn criterion_7_primitive_oracles() -> Vec<String> {
    let mut mismatches = 0usize;
    let mut runs = 0usize;
    for len in 1..=8usize {
        for code in 0..1usize << (2 * len) {
            let seq: Vec<(bool, bool)> = (0..len).map(|i| (code >> (2 * i) & 1 == 1, code >> (2 * i + 1) & 1 == 1)).collect();
            for init in [false, true] {
                let mut q = init;
                let cel: Vec<bool> = seq
                    .iter()
                    .map(|&(a, b)| {
                        if a == b {
                            q = a;
                        }
                        q
                    })
                    .collect();
                let mut q = init;
                let latch: Vec<bool> = seq
                    .iter()
                    .map(|&(d, en)| {
                        if en {
                            q = d;
                        }
                        q
                    })
                    .collect();
                mismatches += usize::from(two_input_run(GateKind::Cel(Polarity::NONE), &seq, init, (init, init)) != cel);
                mismatches += usize::from(two_input_run(GateKind::Latch, &seq, init, (false, false)) != latch);
                runs += 2;
            }
        }
    }
    println!("  {runs} sequences, {mismatches} mismatches");
    if mismatches == 0 {
        vec![]
    } else {
        vec![format!("{mismatches} mismatches")]
    }
}

fn criterion_8_short_delta() -> Vec<String> {
    let mut f = Vec::new();
    let mut sc = Scenario::new(DutStyle::Bd, 3, 8);
    sc.user_words = vec![0x3F, 0xC0, 0x0F, 0xF0];
    sc.vectors = TestVectorSet {
        vectors: vec![0x9B],
        repeat: true,
    };
    sc.delta = DeltaPolicy::Fixed(0);
    sc.comb = vec![2, 2, 2];
    match run_scenario(&sc) {
        Ok(r) => {
            let rules: Vec<&str> = r.reports.values().flat_map(|m| m.violations.iter().map(|v| v.rule)).collect();
            check(&mut f, rules.contains(&"bd2.data_instability"), || format!("rules seen: {rules:?}"));
        }
        Err(e) => f.push(e.to_string()),
    }
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cbist"))
        .arg("run")
        .arg(configs().join("short_delta_bd.json"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    check(&mut f, out.status.code() == Some(3), || format!("exit code {:?}", out.status.code()));
    f
}

fn criterion_9_determinism() -> Vec<String> {
    let mut f = Vec::new();
    for cfg in ["fault_bd.json", "fault_cd.json"] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let out = Command::new(env!("CARGO_BIN_EXE_cbist"))
                .arg("run")
                .arg(configs().join(cfg))
                .arg("--out-dir")
                .arg(d.path())
                .output()
                .unwrap();
            check(&mut f, out.status.code() == Some(2), || format!("{cfg}: exit {:?}", out.status.code()));
        }
        for name in ["trace.vcd", "streams.csv", "violations.csv"] {
            let a = std::fs::read(dirs[0].path().join(name));
            let b = std::fs::read(dirs[1].path().join(name));
            match (a, b) {
                (Ok(a), Ok(b)) => check(&mut f, !a.is_empty() && a == b, || format!("{cfg} {name} differs")),
                _ => f.push(format!("{cfg} {name} missing")),
            }
        }
    }
    f
}

type Criterion = (u32, &'static str, fn() -> Vec<String>);

const CRITERIA: [Criterion; 9] = [
    (1, "fault detection", criterion_1_fault_detection),
    (2, "transparency", criterion_2_transparency),
    (3, "conversion table", criterion_3_conversion_table),
    (4, "alternation and parity", criterion_4_alternation_and_parity),
    (5, "area model", criterion_5_area_model),
    (6, "delay model", criterion_6_delay_model),
    (7, "primitive oracles", criterion_7_primitive_oracles),
    (8, "short delta", criterion_8_short_delta),
    (9, "determinism", criterion_9_determinism),
];

fn main() {
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        let findings = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            vec![format!("panicked: {msg}")]
        });
        if findings.is_empty() {
            println!("PASS criterion {id} ({name})");
        } else {
            failed += 1;
            println!("FAIL criterion {id} ({name}): {}", findings.join("; "));
        }
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
