//! Closed-form area (transistor count) and delay (inverter delay) overheads
//! of the test infrastructure relative to the native pipeline.

use std::fmt::{self, Debug, Write as _};

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use thiserror::Error;

use crate::blocks::DutStyle;

/// Scalar usable by the overhead models.
pub trait Scalar: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OverheadError {
    #[error("stage count must be at least 1")]
    ZeroStages,
    #[error("data-line count must be at least 1")]
    ZeroDataLines,
    #[error("invalid factor: {0}")]
    Factor(String),
}

fn lit<T: Scalar>(v: i64) -> T {
    T::from_i64(v).expect("small integer fits every scalar")
}

fn frac<T: Scalar>(num: i64, den: i64) -> T {
    lit::<T>(num) / lit::<T>(den)
}

fn to_f64<T: Scalar>(v: &T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Number of data lines, or the large-width limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataLines {
    Count(u32),
    Asymptotic,
}

impl fmt::Display for DataLines {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataLines::Count(n) => write!(f, "{n}"),
            DataLines::Asymptotic => f.write_str("asymptotic"),
        }
    }
}

/// Transistor count `a + b·DL`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> Affine<T> {
    pub fn new(a: i64, b: i64) -> Self {
        Affine { a: lit(a), b: lit(b) }
    }

    /// Value at `dl` lines; in the limit only the per-line slope survives
    /// once numerator and denominator are divided by DL.
    pub fn eval(&self, dl: DataLines) -> T {
        match dl {
            DataLines::Count(d) => self.a.clone() + self.b.clone() * lit(i64::from(d)),
            DataLines::Asymptotic => self.b.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaModel<T> {
    pub style: DutStyle,
    pub native_node: Affine<T>,
    pub merge: Affine<T>,
    pub node: Affine<T>,
    pub split: Affine<T>,
    /// Transistors per data line of combinational logic in each stage.
    pub comb_per_dl: T,
    /// Growth of the combinational logic under test conversion (CD only).
    pub comb_factor: T,
}

/// Absolute counts and the resulting percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown<T> {
    pub native: T,
    pub merge: T,
    pub split: T,
    pub node: T,
    pub comb: T,
}

impl<T: Scalar> Breakdown<T> {
    pub fn test_total(&self) -> T {
        self.merge.clone() + self.split.clone() + self.node.clone() + self.comb.clone()
    }

    fn pct(&self, part: &T) -> T {
        lit::<T>(100) * part.clone() / self.native.clone()
    }

    pub fn percent(&self) -> T {
        self.pct(&self.test_total())
    }

    pub fn merge_pct(&self) -> T {
        self.pct(&self.merge)
    }

    pub fn split_pct(&self) -> T {
        self.pct(&self.split)
    }

    pub fn node_pct(&self) -> T {
        self.pct(&self.node)
    }

    pub fn comb_pct(&self) -> T {
        self.pct(&self.comb)
    }
}

fn check_factor<T: Scalar>(f: &T, lo: i64, hi: Option<i64>) -> Result<(), OverheadError> {
    let below = *f < lit(lo);
    let above = hi.is_some_and(|h| *f > lit(h));
    if below || above {
        return Err(OverheadError::Factor(format!("{:?} outside the allowed range", f)));
    }
    Ok(())
}

impl<T: Scalar> AreaModel<T> {
    pub fn new(style: DutStyle) -> Self {
        match style {
            DutStyle::Bd => AreaModel {
                style,
                native_node: Affine::new(14, 12),
                merge: Affine::new(16, 12),
                node: Affine::new(0, 14),
                split: Affine::new(16, 0),
                comb_per_dl: lit(0),
                comb_factor: lit(1),
            },
            DutStyle::Cd => AreaModel {
                style,
                native_node: Affine::new(2, 70),
                merge: Affine::new(2, 44),
                node: Affine::new(0, 4),
                split: Affine::new(14, 22),
                comb_per_dl: lit(0),
                comb_factor: lit(2),
            },
        }
    }

    pub fn with_comb(mut self, per_dl: T, factor: T) -> Self {
        self.comb_per_dl = per_dl;
        self.comb_factor = factor;
        self
    }

    pub fn overhead(&self, n: u32, dl: DataLines) -> Result<Breakdown<T>, OverheadError> {
        if n == 0 {
            return Err(OverheadError::ZeroStages);
        }
        if dl == DataLines::Count(0) {
            return Err(OverheadError::ZeroDataLines);
        }
        check_factor(&self.comb_factor, 1, None)?;
        if self.comb_per_dl < lit(0) {
            return Err(OverheadError::Factor("negative combinational size".into()));
        }
        let n_t: T = lit(i64::from(n));
        let comb_stage = Affine {
            a: lit(0),
            b: self.comb_per_dl.clone(),
        }
        .eval(dl);
        let growth = match self.style {
            DutStyle::Bd => lit(0),
            DutStyle::Cd => self.comb_factor.clone() - lit(1),
        };
        Ok(Breakdown {
            native: n_t.clone() * (self.native_node.eval(dl) + comb_stage.clone()),
            merge: self.merge.eval(dl),
            split: self.split.eval(dl),
            node: n_t.clone() * self.node.eval(dl),
            comb: n_t * growth * comb_stage,
        })
    }

    /// Overhead as the stage count grows without bound.
    pub fn limit_percent(&self, dl: DataLines) -> T {
        let b = self.overhead(1, dl).expect("one stage is valid");
        let growth = b.comb.clone();
        lit::<T>(100) * (b.node + growth) / b.native
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel<T> {
    pub style: DutStyle,
    pub k: u32,
    pub native_stage: T,
    pub merge: T,
    pub node: T,
    pub split: T,
    /// Slow-down of the converted combinational logic (CD only), reported
    /// beside the pipeline overhead.
    pub comb_factor: T,
}

/// `ceil(log2(k))` for `k >= 1`.
pub fn ceil_log2(k: u32) -> u32 {
    if k <= 1 {
        0
    } else {
        32 - (k - 1).leading_zeros()
    }
}

impl<T: Scalar> DelayModel<T> {
    pub fn new(style: DutStyle, k: u32) -> Self {
        match style {
            DutStyle::Bd => DelayModel {
                style,
                k,
                native_stage: lit(6),
                merge: lit(5),
                node: lit(1),
                split: lit(2),
                comb_factor: lit(1),
            },
            DutStyle::Cd => DelayModel {
                style,
                k,
                native_stage: lit(9 + 2 * i64::from(ceil_log2(k.max(1)))),
                merge: lit(4),
                node: lit(1),
                split: lit(4),
                comb_factor: lit(2),
            },
        }
    }

    pub fn with_comb_factor(mut self, f: T) -> Self {
        self.comb_factor = f;
        self
    }

    pub fn overhead(&self, n: u32) -> Result<Breakdown<T>, OverheadError> {
        if n == 0 {
            return Err(OverheadError::ZeroStages);
        }
        if self.k == 0 {
            return Err(OverheadError::ZeroDataLines);
        }
        if self.style == DutStyle::Cd && (self.comb_factor < frac(3, 2) || self.comb_factor > lit(2)) {
            return Err(OverheadError::Factor(format!(
                "combinational delay factor {:?} outside [1.5, 2]",
                self.comb_factor
            )));
        }
        let n_t: T = lit(i64::from(n));
        Ok(Breakdown {
            native: n_t.clone() * self.native_stage.clone(),
            merge: self.merge.clone(),
            split: self.split.clone(),
            node: n_t * self.node.clone(),
            comb: lit(0),
        })
    }

    pub fn limit_percent(&self) -> T {
        lit::<T>(100) * self.node.clone() / self.native_stage.clone()
    }

    /// Extra delay of converted combinational logic, in percent of its
    /// native delay.
    pub fn comb_penalty_percent(&self) -> T {
        lit::<T>(100) * (self.comb_factor.clone() - lit(1))
    }
}

pub type AreaModelF64 = AreaModel<f64>;
pub type AreaModelExact = AreaModel<Rational64>;
pub type DelayModelF64 = DelayModel<f64>;
pub type DelayModelExact = DelayModel<Rational64>;

/// Published rounded closed forms, in percent.
pub mod published {
    use super::ceil_log2;

    pub fn area_bd(n: u32) -> f64 {
        117.0 + 100.0 / f64::from(n)
    }

    pub fn area_cd(n: u32) -> f64 {
        5.7 + 94.0 / f64::from(n)
    }

    pub fn delay_bd(n: u32) -> f64 {
        17.0 + 117.0 / f64::from(n)
    }

    /// The CD delay form is a plain fraction; [`cd_delay_scale`] turns it
    /// into percent.
    pub fn delay_cd(n: u32, k: u32) -> f64 {
        let n = f64::from(n);
        let c = f64::from(ceil_log2(k));
        (n + 8.0) / (n * (2.0 * c + 9.0)) * cd_delay_scale()
    }

    pub fn cd_delay_scale() -> f64 {
        100.0
    }
}

/// One comparison against a published number.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub label: String,
    pub computed: f64,
    pub published: f64,
    pub rel_err: f64,
    pub pass: bool,
}

pub const CHECK_TOLERANCE: f64 = 0.01;

impl CheckRow {
    pub fn new(label: impl Into<String>, computed: f64, published: f64) -> Self {
        let rel_err = ((computed - published) / published).abs();
        CheckRow {
            label: label.into(),
            computed,
            published,
            rel_err,
            pass: rel_err <= CHECK_TOLERANCE,
        }
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: computed {:.4} published {:.4} rel_err {:.4}%",
            if self.pass { "PASS" } else { "FAIL" },
            self.label,
            self.computed,
            self.published,
            self.rel_err * 100.0
        )
    }
}

/// Every closed-form agreement, evaluated exactly and rounded only here.
pub fn check_published() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let bd = AreaModelExact::new(DutStyle::Bd);
    let cd = AreaModelExact::new(DutStyle::Cd);
    let asym = DataLines::Asymptotic;
    let area = |m: &AreaModelExact, n| to_f64(&m.overhead(n, asym).expect("valid").percent());
    rows.push(CheckRow::new("area BD n=1 asymptotic", area(&bd, 1), 217.0));
    rows.push(CheckRow::new("area BD limit", to_f64(&bd.limit_percent(asym)), 117.0));
    for n in [1, 2, 4, 8, 16] {
        rows.push(CheckRow::new(format!("area CD n={n}"), area(&cd, n), published::area_cd(n)));
    }
    rows.push(CheckRow::new("area CD limit", to_f64(&cd.limit_percent(asym)), 5.7));

    let dbd = DelayModelExact::new(DutStyle::Bd, 8);
    for n in 1..=16 {
        let v = to_f64(&dbd.overhead(n).expect("valid").percent());
        rows.push(CheckRow::new(format!("delay BD n={n}"), v, published::delay_bd(n)));
    }
    rows.push(CheckRow::new("delay BD limit", to_f64(&dbd.limit_percent()), 17.0));
    for k in [2, 4, 8, 16] {
        let m = DelayModelExact::new(DutStyle::Cd, k);
        for n in 1..=16 {
            let v = to_f64(&m.overhead(n).expect("valid").percent());
            rows.push(CheckRow::new(format!("delay CD k={k} n={n}"), v, published::delay_cd(n, k)));
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Area,
    Delay,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Area => "area",
            Metric::Delay => "delay",
        })
    }
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub metric: Metric,
    pub style: DutStyle,
    pub n: u32,
    pub width: DataLines,
    pub total: f64,
    pub merge: f64,
    pub split: f64,
    pub node: f64,
    pub comb: f64,
    pub comb_factor: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub style: DutStyle,
    pub n: std::ops::RangeInclusive<u32>,
    pub dl: DataLines,
    pub comb_per_dl: Rational64,
    pub area_comb_factor: Option<Rational64>,
    pub delay_comb_factor: Option<Rational64>,
}

fn row(metric: Metric, style: DutStyle, n: u32, width: DataLines, b: &Breakdown<Rational64>, cf: &Rational64) -> SweepRow {
    SweepRow {
        metric,
        style,
        n,
        width,
        total: to_f64(&b.percent()),
        merge: to_f64(&b.merge_pct()),
        split: to_f64(&b.split_pct()),
        node: to_f64(&b.node_pct()),
        comb: to_f64(&b.comb_pct()),
        comb_factor: to_f64(cf),
    }
}

pub fn sweep_area(spec: &SweepSpec) -> Result<Vec<SweepRow>, OverheadError> {
    let mut m = AreaModelExact::new(spec.style);
    let factor = spec.area_comb_factor.unwrap_or(m.comb_factor);
    m = m.with_comb(spec.comb_per_dl, factor);
    spec.n
        .clone()
        .map(|n| Ok(row(Metric::Area, spec.style, n, spec.dl, &m.overhead(n, spec.dl)?, &m.comb_factor)))
        .collect()
}

pub fn sweep_delay(spec: &SweepSpec) -> Result<Vec<SweepRow>, OverheadError> {
    let k = match spec.dl {
        DataLines::Count(k) => k,
        DataLines::Asymptotic => {
            return Err(OverheadError::Factor("delay needs a concrete data width".into()))
        }
    };
    let mut m = DelayModelExact::new(spec.style, k);
    if let Some(f) = spec.delay_comb_factor {
        m = m.with_comb_factor(f);
    }
    spec.n
        .clone()
        .map(|n| Ok(row(Metric::Delay, spec.style, n, spec.dl, &m.overhead(n)?, &m.comb_factor)))
        .collect()
}

pub const SWEEP_HEADER: &str = "metric,style,n,width,total_pct,merge_pct,split_pct,node_pct,comb_pct,comb_factor";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.metric, r.style, r.n, r.width, r.total, r.merge, r.split, r.node, r.comb, r.comb_factor
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn bd_area_exact() {
        let m = AreaModelExact::new(DutStyle::Bd);
        let b = m.overhead(1, DataLines::Asymptotic).unwrap();
        assert_eq!(b.percent(), r(650, 3));
        assert_eq!(m.limit_percent(DataLines::Asymptotic), r(350, 3));
        let b = m.overhead(2, DataLines::Count(8)).unwrap();
        assert_eq!(b.native, r(2 * (14 + 96), 1));
        assert_eq!(b.test_total(), r(16 + 96 + 2 * 112 + 16, 1));
    }

    #[test]
    fn cd_area_exact() {
        let m = AreaModelExact::new(DutStyle::Cd);
        assert_eq!(m.overhead(1, DataLines::Asymptotic).unwrap().percent(), r(100, 1));
        let b = m.overhead(3, DataLines::Count(4)).unwrap();
        assert_eq!(b.native, r(3 * 282, 1));
        assert_eq!(b.merge + b.split + b.node, r(178 + 102 + 48, 1));
    }

    #[test]
    fn delay_exact() {
        let bd = DelayModelExact::new(DutStyle::Bd, 8);
        assert_eq!(bd.overhead(1).unwrap().percent(), r(400, 3));
        assert_eq!(bd.limit_percent(), r(50, 3));
        let cd = DelayModelExact::new(DutStyle::Cd, 8);
        assert_eq!(cd.overhead(1).unwrap().percent(), r(60, 1));
        assert_eq!(cd.comb_penalty_percent(), r(100, 1));
    }

    #[test]
    fn generic_float_matches_exact() {
        let f = AreaModelF64::new(DutStyle::Cd).overhead(5, DataLines::Count(16)).unwrap();
        let e = AreaModelExact::new(DutStyle::Cd).overhead(5, DataLines::Count(16)).unwrap();
        assert!((f.percent() - e.percent().to_f64().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = [1, 2, 3, 4, 5, 8, 9, 16, 17].map(ceil_log2).to_vec();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = AreaModelExact::new(DutStyle::Bd);
        assert_eq!(m.overhead(0, DataLines::Asymptotic), Err(OverheadError::ZeroStages));
        assert_eq!(m.overhead(1, DataLines::Count(0)), Err(OverheadError::ZeroDataLines));
        assert_eq!(DelayModelExact::new(DutStyle::Cd, 0).overhead(1), Err(OverheadError::ZeroDataLines));
        let bad = DelayModelExact::new(DutStyle::Cd, 4).with_comb_factor(r(5, 2));
        assert!(matches!(bad.overhead(1), Err(OverheadError::Factor(_))));
    }
}
