use cbist::blocks::DutStyle;
use cbist::overhead::{
    check_published, sweep_area, sweep_csv, sweep_delay, AreaModelExact, AreaModelF64, DataLines,
    DelayModelExact, SweepSpec, SWEEP_HEADER,
};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Gate-count closed forms in percent, written out per style.
fn area_oracle(style: DutStyle, n: i64, dl: Option<i64>) -> Rational64 {
    match (style, dl) {
        (DutStyle::Bd, None) => r(100 * (12 + 14 * n), 12 * n),
        (DutStyle::Bd, Some(d)) => r(100 * (16 + 12 * d + 16 + 14 * d * n), n * (14 + 12 * d)),
        (DutStyle::Cd, None) => r(100 * (44 + 22 + 4 * n), 70 * n),
        (DutStyle::Cd, Some(d)) => r(100 * (2 + 44 * d + 14 + 22 * d + 4 * d * n), n * (2 + 70 * d)),
    }
}

fn clog2(k: i64) -> i64 {
    let mut c = 0;
    while (1 << c) < k {
        c += 1;
    }
    c
}

fn delay_oracle(style: DutStyle, n: i64, k: i64) -> Rational64 {
    match style {
        DutStyle::Bd => r(100 * (5 + 2 + n), 6 * n),
        DutStyle::Cd => r(100 * (4 + 4 + n), n * (9 + 2 * clog2(k))),
    }
}

fn style() -> impl Strategy<Value = DutStyle> {
    prop_oneof![Just(DutStyle::Bd), Just(DutStyle::Cd)]
}

fn lines() -> impl Strategy<Value = Option<i64>> {
    prop_oneof![Just(None), (1i64..=64).prop_map(Some)]
}

fn to_dl(d: Option<i64>) -> DataLines {
    d.map_or(DataLines::Asymptotic, |d| DataLines::Count(d as u32))
}

proptest! {
    #[test]
    fn area_matches_oracle(s in style(), n in 1u32..=64, d in lines()) {
        let b = AreaModelExact::new(s).overhead(n, to_dl(d)).unwrap();
        prop_assert_eq!(b.percent(), area_oracle(s, i64::from(n), d));
    }

    #[test]
    fn delay_matches_oracle(s in style(), n in 1u32..=64, k in 1u32..=64) {
        let b = DelayModelExact::new(s, k).overhead(n).unwrap();
        prop_assert_eq!(b.percent(), delay_oracle(s, i64::from(n), i64::from(k)));
    }

    #[test]
    fn breakdown_sums_to_total(s in style(), n in 1u32..=64, d in lines(), per in 0i64..=20, f in 2i64..=8) {
        let m = AreaModelExact::new(s).with_comb(r(per, 1), r(f, 2));
        let b = m.overhead(n, to_dl(d)).unwrap();
        prop_assert_eq!(b.merge_pct() + b.split_pct() + b.node_pct() + b.comb_pct(), b.percent());
    }

    #[test]
    fn overhead_falls_with_stages_toward_limit(s in style(), n in 1u32..=63, d in lines(), k in 1u32..=64) {
        let a = AreaModelExact::new(s);
        let (p, q) = (a.overhead(n, to_dl(d)).unwrap().percent(), a.overhead(n + 1, to_dl(d)).unwrap().percent());
        prop_assert!(q < p);
        prop_assert!(q > a.limit_percent(to_dl(d)));
        let dm = DelayModelExact::new(s, k);
        let (p, q) = (dm.overhead(n).unwrap().percent(), dm.overhead(n + 1).unwrap().percent());
        prop_assert!(q < p);
        prop_assert!(q > dm.limit_percent());
    }

    #[test]
    fn limit_is_the_large_n_value(s in style(), d in lines()) {
        let m = AreaModelExact::new(s);
        let big = m.overhead(1_000_000, to_dl(d)).unwrap().percent();
        let gap = (big - m.limit_percent(to_dl(d))).to_f64().unwrap();
        prop_assert!((0.0..1e-3).contains(&gap));
    }

    #[test]
    fn float_scalar_agrees(s in style(), n in 1u32..=64, d in lines()) {
        let f = AreaModelF64::new(s).overhead(n, to_dl(d)).unwrap().percent();
        let e = AreaModelExact::new(s).overhead(n, to_dl(d)).unwrap().percent().to_f64().unwrap();
        prop_assert!((f - e).abs() <= 1e-9 * e.abs());
    }
}

#[test]
fn published_check_rows() {
    let rows = check_published();
    assert_eq!(rows.len(), 89);
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.label.as_str()).collect();
    let mut expect: Vec<String> = (6..=16).map(|n| format!("delay BD n={n}")).collect();
    expect.push("delay BD limit".into());
    assert_eq!(failed, expect);
    for row in &rows {
        assert_eq!(row.pass, row.rel_err <= 0.01, "{row}");
    }
}

#[test]
fn sweep_csv_layout() {
    let spec = SweepSpec {
        style: DutStyle::Bd,
        n: 1..=8,
        dl: DataLines::Asymptotic,
        comb_per_dl: r(0, 1),
        area_comb_factor: None,
        delay_comb_factor: None,
    };
    let rows = sweep_area(&spec).unwrap();
    let csv = sweep_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 9);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[..4], ["area", "BD", "1", "asymptotic"]);
    let total: f64 = first[4].parse().unwrap();
    assert!((total - 650.0 / 3.0).abs() < 1e-3, "{}", lines[1]);
    assert!(sweep_delay(&spec).is_err());

    let cd = SweepSpec { style: DutStyle::Cd, n: 1..=1, dl: DataLines::Count(8), ..spec };
    let rows = sweep_delay(&cd).unwrap();
    assert!((rows[0].total - 60.0).abs() < 1e-12);
    let slow = SweepSpec { delay_comb_factor: Some(r(3, 1)), ..cd };
    assert!(sweep_delay(&slow).is_err());
}
