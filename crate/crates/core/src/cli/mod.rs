//! Command-line front end.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use thiserror::Error;

use crate::blocks::DutStyle;
use crate::harness::{assemble, simulate, HarnessError, ScenarioResult};
use crate::kernel::write_vcd;
use crate::overhead::{
    check_published, sweep_area, sweep_csv, sweep_delay, DataLines, OverheadError, SweepRow,
    SweepSpec,
};

pub use config::{
    parse_hex, DeltaConfig, FaultConfig, GoldenConfig, Limits, Outputs, ScenarioConfig, StuckKind,
    VectorConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DETECTED: i32 = 2;
pub const EXIT_VIOLATIONS: i32 = 3;

/// Environment variable naming the default artifact directory.
pub const OUT_DIR_ENV: &str = "CBIST_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Overhead(#[from] OverheadError),
    #[error("{failed} of {total} published-value checks failed")]
    CheckFailed { failed: usize, total: usize },
}

#[derive(Debug, Parser)]
#[command(name = "cbist", version, about = "Concurrent built-in self-test simulator for handshake pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file and write its artifacts.
    Run(RunArgs),
    /// Print every net path of a scenario's assembled netlist.
    ListNets(ListArgs),
    /// Area and delay overhead sweeps.
    Overhead(OverheadArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Artifact directory; overrides the config and the environment.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Print the per-channel monitor report.
    #[arg(long)]
    pub report: bool,
    /// List net paths instead of simulating.
    #[arg(long)]
    pub list_nets: bool,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Bd,
    Cd,
}

impl From<StyleArg> for DutStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Bd => DutStyle::Bd,
            StyleArg::Cd => DutStyle::Cd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Area,
    Delay,
    Both,
}

#[derive(Debug, Args)]
pub struct OverheadArgs {
    /// Style to evaluate; both when omitted.
    #[arg(long, value_enum)]
    pub style: Option<StyleArg>,
    /// Stage count or range such as `1..8`.
    #[arg(long, default_value = "1")]
    pub n: String,
    /// Data lines for the area model, or `asymptotic`.
    #[arg(long)]
    pub dl: Option<String>,
    /// Data lines for the delay model.
    #[arg(long)]
    pub k: Option<u32>,
    /// Which model; inferred from `--dl` / `--k` when omitted.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Combinational transistors per data line and stage.
    #[arg(long, default_value = "0")]
    pub comb_per_dl: String,
    /// Transistor growth of converted combinational logic (CD).
    #[arg(long)]
    pub area_comb_factor: Option<String>,
    /// Delay growth of converted combinational logic (CD), 1.5 to 2.
    #[arg(long)]
    pub delay_comb_factor: Option<String>,
    /// Write the sweep here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Compare the models with the published closed forms.
    #[arg(long = "check-paper")]
    pub check_published: bool,
}

/// Parses `3`, `1..8` or `1..=8` into an inclusive range.
pub fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<u32>, CliError> {
    let bad = || CliError::Config(format!("`{s}` is not a stage count or range"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?,
        None => {
            let v = num(s)?;
            v..=v
        }
    };
    if r.is_empty() {
        return Err(bad());
    }
    if *r.start() == 0 {
        return Err(OverheadError::ZeroStages.into());
    }
    Ok(r)
}

/// Parses `2`, `1.5` or `3/2` exactly.
pub fn parse_ratio(s: &str) -> Result<Rational64, CliError> {
    let bad = || CliError::Config(format!("`{s}` is not a number"));
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(a, b));
    }
    match t.split_once('.') {
        Some((int, dec)) => {
            if dec.len() > 9 || !dec.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let scale = 10i64.pow(dec.len() as u32);
            let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let d: i64 = if dec.is_empty() { 0 } else { dec.parse().map_err(|_| bad())? };
            let sign = if t.starts_with('-') { -1 } else { 1 };
            Ok(Rational64::new(whole * scale + sign * d, scale))
        }
        None => t.parse::<i64>().map(Rational64::from_integer).map_err(|_| bad()),
    }
}

fn parse_dl(s: &str) -> Result<DataLines, CliError> {
    if s.eq_ignore_ascii_case("asymptotic") || s.eq_ignore_ascii_case("inf") {
        return Ok(DataLines::Asymptotic);
    }
    let v: u32 = s
        .parse()
        .map_err(|_| CliError::Config(format!("`{s}` is not a data-line count")))?;
    if v == 0 {
        return Err(OverheadError::ZeroDataLines.into());
    }
    Ok(DataLines::Count(v))
}

fn out_dir(flag: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.outputs.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes every configured artifact of a finished run into `dir`.
pub fn write_artifacts(result: &ScenarioResult, outputs: &Outputs, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Write {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    if let Some(name) = &outputs.vcd {
        let path = dir.join(name);
        let werr = |e| CliError::Write {
            path: path.clone(),
            source: e,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(werr)?);
        write_vcd(&mut w, &result.trace, None).map_err(werr)?;
        w.flush().map_err(werr)?;
        written.push(path);
    }
    let texts = [
        (&outputs.streams_csv, result.streams_csv()),
        (&outputs.violations_csv, result.violations_csv()),
        (&outputs.report, format!("{}{}\n", result.report_text(), result.verdict())),
    ];
    for (name, body) in texts {
        if let Some(name) = name {
            let path = dir.join(name);
            write_file(&path, body.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Exit status of a completed run.
pub fn exit_status(result: &ScenarioResult) -> i32 {
    if result.violation_count() > 0 {
        EXIT_VIOLATIONS
    } else if result.detection_time().is_some() {
        EXIT_DETECTED
    } else {
        EXIT_OK
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = ScenarioConfig::load(&args.config)?;
    if args.list_nets {
        return list_nets(&cfg, out);
    }
    let sc = cfg.to_scenario()?;
    let result = simulate(&sc)?;
    let dir = out_dir(args.out_dir.as_deref(), &cfg);
    write_artifacts(&result, &cfg.outputs, &dir)?;
    if let Some(stall) = result.stall.clone() {
        return Err(HarnessError::from(stall).into());
    }
    let io = |e| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    if args.report {
        write!(out, "{}", result.report_text()).map_err(io)?;
    }
    writeln!(
        out,
        "user words: {}/{} delivered, test responses: {}, violations: {}",
        result.user_out.len(),
        sc.user_words.len(),
        result.test_responses.len(),
        result.violation_count()
    )
    .map_err(io)?;
    for (i, exp, got, t) in &result.mismatches {
        writeln!(
            out,
            "mismatch: response {i} expected {} got {} at t={t}",
            crate::codec::hex(*exp, sc.width),
            crate::codec::hex(*got, sc.width)
        )
        .map_err(io)?;
    }
    writeln!(out, "{}", result.verdict()).map_err(io)?;
    Ok(exit_status(&result))
}

fn list_nets(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let sc = cfg.to_scenario()?;
    let asm = assemble(&sc)?;
    let nl = &asm.netlist;
    let io = |e| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    for i in 0..nl.net_count() {
        let id = crate::kernel::NetId(i as u32);
        let src = if nl.is_env_driven(id) { "env" } else { "gate" };
        writeln!(out, "{}\t{src}", nl.net_name(id)).map_err(io)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_list_nets(args: &ListArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    list_nets(&ScenarioConfig::load(&args.config)?, out)
}

pub fn cmd_overhead(args: &OverheadArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    if args.check_published {
        let rows = check_published();
        for r in &rows {
            writeln!(out, "{r}").map_err(io)?;
        }
        let failed = rows.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            return Err(CliError::CheckFailed {
                failed,
                total: rows.len(),
            });
        }
        return Ok(EXIT_OK);
    }
    let metric = args.metric.unwrap_or(match (&args.dl, args.k) {
        (Some(_), None) => MetricArg::Area,
        (None, Some(_)) => MetricArg::Delay,
        _ => MetricArg::Both,
    });
    let n = parse_range(&args.n)?;
    let dl = match &args.dl {
        Some(s) => parse_dl(s)?,
        None => DataLines::Asymptotic,
    };
    let k = args.k.unwrap_or(match dl {
        DataLines::Count(d) => d,
        DataLines::Asymptotic => 8,
    });
    if k == 0 {
        return Err(OverheadError::ZeroDataLines.into());
    }
    let styles: Vec<DutStyle> = match args.style {
        Some(s) => vec![s.into()],
        None => vec![DutStyle::Bd, DutStyle::Cd],
    };
    let comb_per_dl = parse_ratio(&args.comb_per_dl)?;
    let area_f = args.area_comb_factor.as_deref().map(parse_ratio).transpose()?;
    let delay_f = args.delay_comb_factor.as_deref().map(parse_ratio).transpose()?;
    let mut rows: Vec<SweepRow> = Vec::new();
    for style in styles {
        let spec = |width| SweepSpec {
            style,
            n: n.clone(),
            dl: width,
            comb_per_dl,
            area_comb_factor: area_f,
            delay_comb_factor: delay_f,
        };
        if matches!(metric, MetricArg::Area | MetricArg::Both) {
            rows.extend(sweep_area(&spec(dl))?);
        }
        if matches!(metric, MetricArg::Delay | MetricArg::Both) {
            rows.extend(sweep_delay(&spec(DataLines::Count(k)))?);
        }
    }
    let csv = sweep_csv(&rows);
    match &args.csv {
        Some(p) => write_file(p, csv.as_bytes())?,
        None => out.write_all(csv.as_bytes()).map_err(io)?,
    }
    if matches!(metric, MetricArg::Area | MetricArg::Both) {
        eprintln!("note: request delay elements and test generator/analyzer are excluded from the transistor counts");
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the chosen command, returning the process exit
/// status. Errors are reported on standard error.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let res = match &cli.command {
        Command::Run(a) => cmd_run(a, &mut out),
        Command::ListNets(a) => cmd_list_nets(a, &mut out),
        Command::Overhead(a) => cmd_overhead(a, &mut out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
