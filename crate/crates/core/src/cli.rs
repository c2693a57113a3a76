//! Command-line front end: `mmse`, `bounds`, `mi`, `sweep`, `verify` and
//! `fading`, writing CSV (with `#` metadata lines) or JSON.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a violation, 2 on bad
//! flags or inputs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::alphabet::{product_alphabet_with_cap, make_scalar, Alphabet, Constellation, DEFAULT_ALPHABET_CAP};
use crate::bounds::{mmse_bounds, mmse_lower_bound};
use crate::channel::{received_constellation, sample_rayleigh, ChannelMatrix};
use crate::error::Error;
use crate::fading::{
    average_mi_with, diversity_slope, ChannelSampling, DEFAULT_NOISE_DRAWS, DEFAULT_TRIALS, DEFAULT_WINDOW_DB,
};
use crate::mi::{db_range, default_tail_cap, mi_asymptote, mi_bounds, mi_mc_derivative, mi_mc_sweep, SnrGrid};
use crate::mmse::{
    mmse_mimo_mc, mmse_simo, McConfig, McEstimate, NoiseSampling, DEFAULT_CHUNK, DEFAULT_SAMPLES,
    MAX_QUADRATURE_ALPHABET,
};
use crate::numerics::{derive_seed, QuadratureRule, RngStream, Snr};

/// Seed domains, so every command sees the same draws for the same role.
const CHANNEL_SEED: u64 = 0;
const MMSE_SEED: u64 = 1;
const MI_SEED: u64 = 2;
const DERIVATIVE_SEED: u64 = 3;

const DERIVATIVE_STEP: f64 = 0.01;
const DERIVATIVE_REL_TOL: f64 = 0.02;
const VERIFY_SNR_DB: &str = "-5:5:25";
const FADING_SNR_DB: &str = "12:1:24";

#[derive(Parser, Debug)]
#[command(name = "mimo-mmse", version, about = "MMSE, bounds and mutual information for finite-alphabet MIMO channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// MMSE per snr point (quadrature for single-antenna inputs, else Monte Carlo)
    Mmse(LinkArgs),
    /// Lower and upper MMSE bounds and the MI bounds built from them
    Bounds(LinkArgs),
    /// Monte Carlo mutual information
    Mi(LinkArgs),
    /// MMSE, bounds and MI side by side
    Sweep(LinkArgs),
    /// Check the bound sandwich and the MI–MMSE derivative identity; exit 1 on violation
    Verify(LinkArgs),
    /// Average MI over Rayleigh channels and the slope of the MI gap
    Fading(FadingArgs),
}

#[derive(Args, Debug)]
struct AlphabetArgs {
    /// bpsk, qpsk, psk<m> or qam<m>
    #[arg(long, conflicts_with = "alphabet_file")]
    constellation: Option<String>,
    /// JSON alphabet: {"nt":K,"points":[{"re":[..],"im":[..]}],"probs":[..]}
    #[arg(long)]
    alphabet_file: Option<PathBuf>,
    /// Transmit antennas; the scalar constellation is used on each
    #[arg(long, conflicts_with = "alphabet_file")]
    nt: Option<usize>,
    /// Largest product alphabet allowed
    #[arg(long, default_value_t = DEFAULT_ALPHABET_CAP)]
    max_alphabet: usize,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Required whenever random draws are used
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CHUNK)]
    chunk: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Midpoint)]
    noise_sampling: NoiseArg,
    /// Worker threads (output does not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Units for mutual information columns
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
}

#[derive(Args, Debug)]
struct LinkArgs {
    #[command(flatten)]
    alphabet: AlphabetArgs,
    /// `rayleigh` or a channel JSON file
    #[arg(long, conflicts_with = "channel_scalar")]
    channel: Option<String>,
    /// Scalar channel `re` or `re,im`
    #[arg(long, allow_hyphen_values = true)]
    channel_scalar: Option<String>,
    /// Receive antennas for `--channel rayleigh`
    #[arg(long)]
    n: Option<usize>,
    /// `start:step:stop` or a single value, in dB
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FadingArgs {
    #[command(flatten)]
    alphabet: AlphabetArgs,
    /// Receive antennas
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, allow_hyphen_values = true, default_value = FADING_SNR_DB)]
    snr_db: String,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Fit window `lo:hi` in dB
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, value_enum, default_value_t = ChannelArg::Mixture)]
    channel_sampling: ChannelArg,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Units {
    Bits,
    Nats,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NoiseArg {
    Midpoint,
    Plain,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ChannelArg {
    Mixture,
    Rayleigh,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LN_2.recip(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure(msg.into()))
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let threads = match &cli.command {
        Command::Fading(f) => f.mc.threads,
        Command::Mmse(l) | Command::Bounds(l) | Command::Mi(l) | Command::Sweep(l) | Command::Verify(l) => l.mc.threads,
    };
    let result = match threads {
        Some(0) => usage("--threads must be at least 1"),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => usage(format!("cannot start {n} threads: {e}")),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(report) => {
            let _ = out.write_all(report.text.as_bytes());
            if report.violation { 1 } else { 0 }
        }
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

struct Report {
    text: String,
    violation: bool,
}

fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Mmse(a) => link_command("mmse", a),
        Command::Bounds(a) => link_command("bounds", a),
        Command::Mi(a) => link_command("mi", a),
        Command::Sweep(a) => link_command("sweep", a),
        Command::Verify(a) => link_command("verify", a),
        Command::Fading(a) => fading_command(a),
    }
}

enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
}

/// Output table plus metadata; rendered to CSV or JSON.
struct Table {
    command: &'static str,
    meta: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    fit: Option<Vec<(&'static str, Value)>>,
}

fn format_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command={}", self.command);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_num(*v),
                    Cell::Text(t) => t.clone(),
                    Cell::Flag(b) => b.to_string(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        if let Some(fit) = &self.fit {
            let parts: Vec<String> = fit
                .iter()
                .map(|(k, v)| match v {
                    Value::Number(n) => format!("{k}={}", format_num(n.as_f64().unwrap_or(f64::NAN))),
                    Value::String(t) => format!("{k}={t}"),
                    other => format!("{k}={other}"),
                })
                .collect();
            let _ = writeln!(s, "# fit {}", parts.join(" "));
        }
        s
    }

    fn json(&self) -> String {
        let num = |v: f64| serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null);
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(v) => num(*v),
                            Cell::Text(t) => Value::String(t.clone()),
                            Cell::Flag(b) => Value::Bool(*b),
                        })
                        .collect(),
                )
            })
            .collect();
        let mut doc = json!({
            "command": self.command,
            "meta": meta,
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(fit) = &self.fit {
            let fit: Map<String, Value> = fit.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            doc["fit"] = Value::Object(fit);
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("output serializes");
        text.push('\n');
        text
    }
}

fn load_alphabet(args: &AlphabetArgs, meta: &mut Vec<(String, String)>) -> CliResult<Alphabet> {
    if let Some(path) = &args.alphabet_file {
        let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let a = Alphabet::from_json_str(&text)?;
        if a.len() > args.max_alphabet {
            return Err(Error::AlphabetTooLarge { size: a.len(), cap: args.max_alphabet }.into());
        }
        meta.push(("alphabet".into(), format!("file {}", path.display())));
        meta.push(("nt".into(), a.n_t().to_string()));
        meta.push(("points".into(), a.len().to_string()));
        return Ok(a);
    }
    let name = args.constellation.as_deref().unwrap_or("bpsk");
    let kind: Constellation = name.parse()?;
    let nt = args.nt.unwrap_or(1);
    if nt == 0 {
        return usage("--nt must be at least 1");
    }
    let a = product_alphabet_with_cap(&make_scalar(kind)?, nt, args.max_alphabet)?;
    meta.push(("constellation".into(), kind.to_string()));
    meta.push(("nt".into(), nt.to_string()));
    meta.push(("points".into(), a.len().to_string()));
    Ok(a)
}

fn parse_scalar(text: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = text.split(',').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Failure(format!("--channel-scalar: cannot parse `{s}`")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => usage(format!("--channel-scalar expects `re` or `re,im`, got `{text}`")),
    }
}

fn require_seed(seed: Option<u64>, why: &str) -> CliResult<u64> {
    seed.ok_or_else(|| Failure(format!("--seed is required for {why}")))
}

fn load_channel(args: &LinkArgs, a: &Alphabet, meta: &mut Vec<(String, String)>) -> CliResult<ChannelMatrix> {
    if args.n.is_some() && args.channel.as_deref() != Some("rayleigh") {
        return usage("--n only applies to --channel rayleigh");
    }
    let h = match (&args.channel, &args.channel_scalar) {
        (Some(kind), _) if kind == "rayleigh" => {
            let seed = require_seed(args.mc.seed, "--channel rayleigh")?;
            let n = args.n.unwrap_or(1);
            if n == 0 {
                return usage("--n must be at least 1");
            }
            meta.push(("channel".into(), format!("rayleigh {n}x{}", a.n_t())));
            sample_rayleigh(&RngStream::new(derive_seed(seed, CHANNEL_SEED), 0), n, a.n_t())?
        }
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{path}: {e}")))?;
            let h = ChannelMatrix::from_json_str(&text)?;
            meta.push(("channel".into(), format!("file {path}")));
            h
        }
        (None, scalar) => {
            let c = match scalar {
                Some(text) => parse_scalar(text)?,
                None => Complex64::new(1.0, 0.0),
            };
            meta.push(("channel".into(), "scalar".into()));
            ChannelMatrix::scalar(c)?
        }
    };
    if h.n_tx() != a.n_t() {
        return usage(format!(
            "channel has {} transmit columns but the alphabet has nt = {}",
            h.n_tx(),
            a.n_t()
        ));
    }
    meta.push(("h".into(), h.to_json()));
    Ok(h)
}

fn parse_snr_db(text: &str) -> CliResult<(Vec<f64>, Vec<Snr>)> {
    let bad = |e: String| Failure(format!("--snr-db: {e}"));
    let nums: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("cannot parse `{p}`"))))
        .collect::<CliResult<_>>()?;
    let (start, step, stop) = match nums.as_slice() {
        [v] => (*v, 1.0, *v),
        [start, step, stop] => (*start, *step, *stop),
        _ => return Err(bad(format!("expected `start:step:stop` or a value, got `{text}`"))),
    };
    let snrs = db_range(start, step, stop).map_err(|e| bad(e.to_string()))?;
    let dbs = (0..snrs.len()).map(|k| start + k as f64 * step).collect();
    Ok((dbs, snrs))
}

fn mc_config(args: &McArgs, seed: u64, domain: u64, default_samples: usize) -> CliResult<McConfig> {
    let sampling = match args.noise_sampling {
        NoiseArg::Midpoint => NoiseSampling::MidpointMixture,
        NoiseArg::Plain => NoiseSampling::Plain,
    };
    Ok(McConfig::new(derive_seed(seed, domain), args.samples.unwrap_or(default_samples), args.chunk)?.sampling(sampling))
}

fn mc_meta(args: &McArgs, seed: Option<u64>, default_samples: usize, meta: &mut Vec<(String, String)>) {
    if let Some(seed) = seed {
        meta.push(("seed".into(), seed.to_string()));
    }
    meta.push(("samples".into(), args.samples.unwrap_or(default_samples).to_string()));
    meta.push(("chunk".into(), args.chunk.to_string()));
    let sampling = match args.noise_sampling {
        NoiseArg::Midpoint => "midpoint",
        NoiseArg::Plain => "plain",
    };
    meta.push(("noise_sampling".into(), sampling.into()));
}

/// MMSE at each point: quadrature when the input is scalar and small,
/// Monte Carlo otherwise.
fn mmse_column(
    h: &ChannelMatrix,
    a: &Alphabet,
    snrs: &[Snr],
    mc: &McArgs,
    rule: &QuadratureRule,
    meta: &mut Vec<(String, String)>,
) -> CliResult<Vec<McEstimate>> {
    if a.len() == 2 && a.is_equiprobable() {
        // with two points the genie bound is the exact mmse
        meta.push(("mmse_method".into(), "binary-exact".into()));
        let rc = received_constellation(h, a)?;
        return snrs
            .iter()
            .map(|&s| {
                Ok(McEstimate {
                    mean: mmse_lower_bound(&rc, a, s, rule)?,
                    std_error: 0.0,
                    samples: 0,
                })
            })
            .collect();
    }
    if a.n_t() == 1 && a.len() <= MAX_QUADRATURE_ALPHABET {
        meta.push(("mmse_method".into(), "quadrature".into()));
        return snrs
            .iter()
            .map(|&s| {
                Ok(McEstimate {
                    mean: mmse_simo(h, a, s, rule)?,
                    std_error: 0.0,
                    samples: 0,
                })
            })
            .collect();
    }
    meta.push(("mmse_method".into(), "monte-carlo".into()));
    let seed = require_seed(mc.seed, "Monte Carlo MMSE")?;
    let cfg = mc_config(mc, seed, MMSE_SEED, DEFAULT_SAMPLES)?;
    Ok(snrs.iter().map(|&s| mmse_mimo_mc(h, a, s, &cfg)).collect::<crate::error::Result<_>>()?)
}

fn link_command(command: &'static str, args: &LinkArgs) -> CliResult<Report> {
    let mut meta = vec![("version".to_string(), format!("mimo-mmse {}", env!("CARGO_PKG_VERSION")))];
    let a = load_alphabet(&args.alphabet, &mut meta)?;
    let h = load_channel(args, &a, &mut meta)?;
    let snr_text = match (&args.snr_db, command) {
        (Some(t), _) => t.clone(),
        (None, "verify") => VERIFY_SNR_DB.to_string(),
        (None, _) => return usage("--snr-db is required"),
    };
    let (dbs, snrs) = parse_snr_db(&snr_text)?;
    meta.push(("snr_db".into(), snr_text));
    let uses_mc = matches!(command, "mi" | "sweep" | "verify")
        || (command == "mmse" && !(a.len() == 2 && a.is_equiprobable()) && !(a.n_t() == 1 && a.len() <= MAX_QUADRATURE_ALPHABET));
    if uses_mc {
        require_seed(args.mc.seed, &format!("`{command}`"))?;
        mc_meta(&args.mc, args.mc.seed, DEFAULT_SAMPLES, &mut meta);
    }
    let units = args.output.units;
    let rule = QuadratureRule::default();
    let rc = received_constellation(&h, &a)?;

    let mut violation = false;
    let (columns, rows): (Vec<&'static str>, Vec<Vec<Cell>>) = match command {
        "mmse" => {
            let mmse = mmse_column(&h, &a, &snrs, &args.mc, &rule, &mut meta)?;
            let rows = dbs
                .iter()
                .zip(&mmse)
                .map(|(db, m)| vec![Cell::Num(*db), Cell::Num(m.mean), Cell::Num(m.std_error)])
                .collect();
            (vec!["snr_db", "mmse", "mmse_se"], rows)
        }
        "bounds" => {
            if !a.is_equiprobable() {
                return Err(Error::NonUniformPrior.into());
            }
            meta.push(("units".into(), units.name().into()));
            let cap = default_tail_cap(&rc, &a)?;
            let mut rows = Vec::new();
            for (db, &s) in dbs.iter().zip(&snrs) {
                let b = mmse_bounds(&rc, &a, s, &rule)?;
                let m = mi_bounds(&rc, &a, s, cap)?;
                rows.push(vec![
                    Cell::Num(*db),
                    Cell::Num(b.lower),
                    Cell::Num(b.upper),
                    Cell::Num(m.lower * units.scale()),
                    Cell::Num(m.upper * units.scale()),
                ]);
            }
            (vec!["snr_db", "lower", "upper", "mi_lb", "mi_ub"], rows)
        }
        "mi" => {
            meta.push(("units".into(), units.name().into()));
            let cfg = mc_config(&args.mc, args.mc.seed.unwrap_or_default(), MI_SEED, DEFAULT_SAMPLES)?;
            let mi = mi_mc_sweep(&h, &a, &snrs, &cfg)?;
            let rows = dbs
                .iter()
                .zip(&mi)
                .map(|(db, e)| vec![Cell::Num(*db), Cell::Num(e.mean * units.scale()), Cell::Num(e.std_error * units.scale())])
                .collect();
            (vec!["snr_db", "mi", "mi_se"], rows)
        }
        "sweep" => {
            meta.push(("units".into(), units.name().into()));
            let mmse = mmse_column(&h, &a, &snrs, &args.mc, &rule, &mut meta)?;
            let cfg = mc_config(&args.mc, args.mc.seed.unwrap_or_default(), MI_SEED, DEFAULT_SAMPLES)?;
            let mi = mi_mc_sweep(&h, &a, &snrs, &cfg)?;
            let cap = if a.is_equiprobable() {
                Some(default_tail_cap(&rc, &a)?)
            } else {
                meta.push(("bounds".into(), "NaN: non-uniform prior".into()));
                None
            };
            let mut rows = Vec::new();
            for (k, (db, &s)) in dbs.iter().zip(&snrs).enumerate() {
                let (lb, ub, mlb, mub) = match cap {
                    Some(cap) => {
                        let b = mmse_bounds(&rc, &a, s, &rule)?;
                        let m = mi_bounds(&rc, &a, s, cap)?;
                        (b.lower, b.upper, m.lower, m.upper)
                    }
                    None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
                };
                let u = units.scale();
                rows.push(vec![
                    Cell::Num(*db),
                    Cell::Num(mmse[k].mean),
                    Cell::Num(mmse[k].std_error),
                    Cell::Num(lb),
                    Cell::Num(ub),
                    Cell::Num(mi[k].mean * u),
                    Cell::Num(mi[k].std_error * u),
                    Cell::Num(mlb * u),
                    Cell::Num(mub * u),
                ]);
            }
            (
                vec!["snr_db", "mmse", "mmse_se", "lower", "upper", "mi", "mi_se", "mi_lb", "mi_ub"],
                rows,
            )
        }
        "verify" => {
            let rows = verify_rows(&h, &a, &dbs, &snrs, &args.mc, &rule, &mut meta)?;
            violation = rows.iter().any(|r| matches!(r.last(), Some(Cell::Flag(false))));
            (vec!["check", "snr_db", "value", "low", "high", "pass"], rows)
        }
        _ => unreachable!("link commands are fixed"),
    };
    let table = Table {
        command,
        meta,
        columns,
        rows,
        fit: None,
    };
    Ok(Report {
        text: table.render(args.output.format),
        violation,
    })
}

fn check_row(check: &str, db: f64, value: f64, low: f64, high: f64) -> Vec<Cell> {
    let pass = value >= low && value <= high;
    vec![
        Cell::Text(check.into()),
        Cell::Num(db),
        Cell::Num(value),
        Cell::Num(low),
        Cell::Num(high),
        Cell::Flag(pass),
    ]
}

/// Bound sandwiches (MMSE and MI, equiprobable inputs only) and the
/// derivative identity at every snr point. Values in nats.
fn verify_rows(
    h: &ChannelMatrix,
    a: &Alphabet,
    dbs: &[f64],
    snrs: &[Snr],
    mc: &McArgs,
    rule: &QuadratureRule,
    meta: &mut Vec<(String, String)>,
) -> CliResult<Vec<Vec<Cell>>> {
    let seed = require_seed(mc.seed, "`verify`")?;
    let rc = received_constellation(h, a)?;
    let mmse = mmse_column(h, a, snrs, mc, rule, meta)?;
    let mi = mi_mc_sweep(h, a, snrs, &mc_config(mc, seed, MI_SEED, DEFAULT_SAMPLES)?)?;
    let deriv_cfg = mc_config(mc, seed, DERIVATIVE_SEED, DEFAULT_SAMPLES)?;
    let stepped = |factor: f64| -> CliResult<Vec<McEstimate>> {
        let moved = snrs.iter().map(|s| Snr::new(s.linear() * factor)).collect::<Result<Vec<_>, _>>()?;
        mmse_column(h, a, &moved, mc, rule, &mut Vec::new())
    };
    let below = stepped(1.0 - DERIVATIVE_STEP)?;
    let above = stepped(1.0 + DERIVATIVE_STEP)?;
    meta.push(("units".into(), "nats".into()));
    meta.push((
        "derivative".into(),
        format!("central difference, step {DERIVATIVE_STEP}, against simpson mean of mmse over the step, tolerance 3se + {DERIVATIVE_REL_TOL} relative"),
    ));
    let cap = if a.is_equiprobable() {
        Some(default_tail_cap(&rc, a)?)
    } else {
        meta.push(("sandwich".into(), "skipped: non-uniform prior".into()));
        None
    };
    let mut rows = Vec::new();
    for (k, (&db, &s)) in dbs.iter().zip(snrs).enumerate() {
        if let Some(cap) = cap {
            let b = mmse_bounds(&rc, a, s, rule)?;
            let m = &mmse[k];
            rows.push(check_row("mmse_sandwich", db, m.mean, b.lower - 3.0 * m.std_error, b.upper + 3.0 * m.std_error));
            let mb = mi_bounds(&rc, a, s, cap)?;
            let e = &mi[k];
            rows.push(check_row("mi_sandwich", db, e.mean, mb.lower - 3.0 * e.std_error, mb.upper + 3.0 * e.std_error));
        }
        if s.linear() > 0.0 {
            let d = mi_mc_derivative(h, a, s, DERIVATIVE_STEP, &deriv_cfg)?;
            // the difference quotient is the mean of the mmse over the step, not its
            // midpoint value; compare against Simpson's rule on that interval
            let (m, lo, hi) = (&mmse[k], &below[k], &above[k]);
            let reference = (lo.mean + 4.0 * m.mean + hi.mean) / 6.0;
            let reference_se = (lo.std_error + 4.0 * m.std_error + hi.std_error) / 6.0;
            let joint = (d.std_error.powi(2) + reference_se.powi(2)).sqrt();
            let tol = 3.0 * joint + DERIVATIVE_REL_TOL * reference;
            rows.push(check_row("derivative", db, d.mean, reference - tol, reference + tol));
        }
    }
    Ok(rows)
}

fn parse_window(text: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Failure(format!("--window: cannot parse `{s}`")))
    };
    match parts.as_slice() {
        [lo, hi] => Ok((num(lo)?, num(hi)?)),
        _ => usage(format!("--window expects `lo:hi`, got `{text}`")),
    }
}

fn fading_command(args: &FadingArgs) -> CliResult<Report> {
    let mut meta = vec![("version".to_string(), format!("mimo-mmse {}", env!("CARGO_PKG_VERSION")))];
    let a = load_alphabet(&args.alphabet, &mut meta)?;
    let seed = require_seed(args.mc.seed, "`fading`")?;
    let (dbs, snrs) = parse_snr_db(&args.snr_db)?;
    let grid = SnrGrid::new(snrs)?;
    let window = match &args.window {
        Some(w) => parse_window(w)?,
        None => DEFAULT_WINDOW_DB,
    };
    let sampling = match args.channel_sampling {
        ChannelArg::Mixture => ChannelSampling::ScaleMixture,
        ChannelArg::Rayleigh => ChannelSampling::Rayleigh,
    };
    meta.push(("n".into(), args.n.to_string()));
    meta.push(("channel".into(), "rayleigh".into()));
    meta.push((
        "channel_sampling".into(),
        match sampling {
            ChannelSampling::ScaleMixture => "mixture",
            ChannelSampling::Rayleigh => "rayleigh",
        }
        .into(),
    ));
    meta.push(("trials".into(), args.trials.to_string()));
    meta.push(("snr_db".into(), args.snr_db.clone()));
    mc_meta(&args.mc, Some(seed), DEFAULT_NOISE_DRAWS, &mut meta);
    meta.push(("units".into(), args.output.units.name().into()));

    let cfg = mc_config(&args.mc, seed, MI_SEED, DEFAULT_NOISE_DRAWS)?;
    let result = average_mi_with(args.n, &a, &grid, args.trials, &cfg, sampling)?;
    let asymptote = mi_asymptote(&a);
    let fit = diversity_slope(&result, asymptote, window)?;
    let u = args.output.units.scale();
    let rows = dbs
        .iter()
        .zip(&result.avg_mi)
        .zip(&result.std_error)
        .map(|((db, mi), se)| {
            vec![
                Cell::Num(*db),
                Cell::Num(mi * u),
                Cell::Num(se * u),
                Cell::Num((asymptote - mi) * u),
            ]
        })
        .collect();
    let table = Table {
        command: "fading",
        meta,
        columns: vec!["snr_db", "avg_mi", "std_error", "gap"],
        rows,
        fit: Some(vec![
            ("slope", json!(fit.slope)),
            ("intercept", json!(fit.intercept)),
            ("r_squared", json!(fit.r_squared)),
            ("window_db", Value::String(format!("{}:{}", window.0, window.1))),
        ]),
    };
    Ok(Report {
        text: table.render(args.output.format),
        violation: false,
    })
}
