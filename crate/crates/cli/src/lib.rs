//! Configuration and dispatch for the `hybridop` binary.
//!
//! A [`RunConfig`] is assembled from defaults, an optional `key=value` file and
//! command-line flags, in that order. [`run`] executes it and returns the
//! report; the binary writes the report and maps the verdict to an exit code.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use hybrid_operator::analysis::{
    global_rate_experiment, pointwise_bound_check, simultaneous_convergence_experiment, tail_decay_experiment,
    voronovskaja_experiment, voronovskaja_s0_report, DEFAULT_N_SWEEP,
};
use hybrid_operator::function::{bundled, BUNDLED_NAMES};
use hybrid_operator::moments::{central_moment_recurrence, raw_moment_closed};
use hybrid_operator::operator::{apply, derivative_of_operator};
use hybrid_operator::smoothing::steklov_property_report;
use hybrid_operator::{
    EvalConfig, ExperimentReport, FunctionSpec, IntervalPair, OperatorParams, Polynomial, ReportRow, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative agreement required between a computed value and its exact polynomial reference.
pub const EXACT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Moments,
    Voronovskaja,
    Converge,
    BoundCheck,
    GlobalRate,
    Steklov,
    Tails,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Eval,
        Command::Moments,
        Command::Voronovskaja,
        Command::Converge,
        Command::BoundCheck,
        Command::GlobalRate,
        Command::Steklov,
        Command::Tails,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Moments => "moments",
            Command::Voronovskaja => "voronovskaja",
            Command::Converge => "converge",
            Command::BoundCheck => "bound-check",
            Command::GlobalRate => "global-rate",
            Command::Steklov => "steklov",
            Command::Tails => "tails",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}`, expected csv or json")),
        }
    }
}

/// Everything one invocation needs. `order` is `s` or `r` depending on the command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: f64,
    pub c: f64,
    pub function: String,
    pub order: u32,
    pub x: f64,
    pub x_range: (f64, f64),
    pub x_count: usize,
    pub n_sweep: Vec<f64>,
    pub central: bool,
    pub max_order: u32,
    pub outer: (f64, f64),
    pub inner: (f64, f64),
    pub modulus_interval: (f64, f64),
    pub h_grid: Vec<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
    pub truncation_tolerance: f64,
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let eval = EvalConfig::default();
        Self {
            command,
            n: 50.0,
            c: 1.0,
            function: "exp_neg".into(),
            order: 0,
            x: 1.0,
            x_range: (0.5, 2.0),
            x_count: 7,
            n_sweep: DEFAULT_N_SWEEP.to_vec(),
            central: false,
            max_order: 4,
            outer: (0.2, 2.0),
            inner: (0.6, 1.4),
            modulus_interval: (0.0, 8.0),
            h_grid: vec![0.2, 0.1, 0.05, 0.025],
            delta: 0.5,
            gamma: 0.0,
            out: None,
            format: Format::Csv,
            seed: 0,
            threads: None,
            truncation_tolerance: eval.truncation_tolerance,
            rel_tolerance: eval.quadrature.rel_tolerance,
            abs_tolerance: eval.quadrature.abs_tolerance,
        }
    }

    /// Set one field from its textual form. Keys match the config-file keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "command" => self.command = value.parse()?,
            "n" => self.n = parse_num(value)?,
            "c" => self.c = parse_num(value)?,
            "fn" => self.function = value.to_string(),
            "s" | "r" => self.order = parse_num(value)?,
            "x" => self.x = parse_num(value)?,
            "x_range" => self.x_range = parse_pair(value)?,
            "x_count" => self.x_count = parse_num(value)?,
            "n_sweep" => self.n_sweep = parse_list(value)?,
            "central" => self.central = parse_num(value)?,
            "max" => self.max_order = parse_num(value)?,
            "outer" => self.outer = parse_pair(value)?,
            "inner" => self.inner = parse_pair(value)?,
            "modulus_interval" => self.modulus_interval = parse_pair(value)?,
            "h_grid" => self.h_grid = parse_list(value)?,
            "delta" => self.delta = parse_num(value)?,
            "gamma" => self.gamma = parse_num(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "seed" => self.seed = parse_num(value)?,
            "threads" => self.threads = Some(parse_num(value)?),
            "truncation_tolerance" => self.truncation_tolerance = parse_num(value)?,
            "rel_tolerance" => self.rel_tolerance = parse_num(value)?,
            "abs_tolerance" => self.abs_tolerance = parse_num(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Apply parsed `key=value` entries in order.
    pub fn apply_entries(&mut self, entries: &[ConfigEntry]) -> Result<(), ConfigError> {
        for e in entries {
            self.set(&e.key, &e.value).map_err(|message| ConfigError {
                line: e.line,
                field: e.key.clone(),
                message,
            })?;
        }
        Ok(())
    }

    /// The configuration as a `key=value` file that [`parse_config`] reads back.
    pub fn to_config_string(&self) -> String {
        let pair = |(a, b): (f64, f64)| format!("{a},{b}");
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("command={}", self.command.as_str()),
            format!("n={}", self.n),
            format!("c={}", self.c),
            format!("fn={}", self.function),
            format!("s={}", self.order),
            format!("x={}", self.x),
            format!("x_range={}", pair(self.x_range)),
            format!("x_count={}", self.x_count),
            format!("n_sweep={}", list(&self.n_sweep)),
            format!("central={}", self.central),
            format!("max={}", self.max_order),
            format!("outer={}", pair(self.outer)),
            format!("inner={}", pair(self.inner)),
            format!("modulus_interval={}", pair(self.modulus_interval)),
            format!("h_grid={}", list(&self.h_grid)),
            format!("delta={}", self.delta),
            format!("gamma={}", self.gamma),
        ];
        if let Some(out) = &self.out {
            lines.push(format!("out={}", out.display()));
        }
        lines.push(format!("format={}", self.format.as_str()));
        lines.push(format!("seed={}", self.seed));
        if let Some(t) = self.threads {
            lines.push(format!("threads={t}"));
        }
        lines.push(format!("truncation_tolerance={}", self.truncation_tolerance));
        lines.push(format!("rel_tolerance={}", self.rel_tolerance));
        lines.push(format!("abs_tolerance={}", self.abs_tolerance));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    pub fn eval_config(&self) -> anyhow::Result<EvalConfig> {
        let mut cfg = EvalConfig::default();
        cfg.truncation_tolerance = self.truncation_tolerance;
        cfg.quadrature.rel_tolerance = self.rel_tolerance;
        cfg.quadrature.abs_tolerance = self.abs_tolerance;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> anyhow::Result<OperatorParams> {
        Ok(OperatorParams::new(self.n, self.c)?)
    }

    /// The selected function: a bundled name or comma-separated polynomial coefficients.
    pub fn function_spec(&self) -> anyhow::Result<FunctionSpec> {
        resolve_function(&self.function)
    }

    /// `x_count` evenly spaced points over `x_range`.
    pub fn x_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.x_range;
        if self.x_count == 1 {
            return vec![lo];
        }
        (0..self.x_count)
            .map(|i| lo + (hi - lo) * i as f64 / (self.x_count - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_sweep.is_empty() || self.h_grid.is_empty() || self.x_count == 0 {
            bail!("grids must be nonempty");
        }
        if self.x_range.0 > self.x_range.1 || self.x_range.0 < 0.0 {
            bail!("x_range must satisfy 0 <= lo <= hi");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        self.function_spec()?;
        self.eval_config()?;
        Ok(())
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e| format!("cannot parse `{s}`: {e}"))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_num(p.trim())).collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

pub fn resolve_function(name: &str) -> anyhow::Result<FunctionSpec> {
    if let Some(f) = bundled(name) {
        return Ok(f);
    }
    if let Ok(coeffs) = parse_list(name) {
        if !coeffs.is_empty() {
            return Ok(FunctionSpec::polynomial_from(format!("poly[{name}]"), coeffs));
        }
    }
    Err(anyhow!(
        "unknown function `{name}`: expected one of {} or comma-separated polynomial coefficients",
        BUNDLED_NAMES.join(", ")
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}, field `{}`: {}", self.line, self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Read `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError {
                line: i + 1,
                field: line.to_string(),
                message: "expected key=value".into(),
            });
        };
        entries.push(ConfigEntry {
            line: i + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

/// Parse a config text on top of the defaults for `command`.
pub fn config_from_str(command: Command, text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new(command);
    cfg.apply_entries(&parse_config(text)?)?;
    Ok(cfg)
}

/// Execute the configured command on a pool of `threads` workers.
pub fn run(config: &RunConfig) -> anyhow::Result<ExperimentReport> {
    config.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building worker pool")?;
    let report = pool.install(|| dispatch(config))?;
    Ok(report
        .with_meta("command", config.command.as_str())
        .with_meta("seed", config.seed)
        .with_meta("config", config.to_config_string()))
}

fn dispatch(cfg: &RunConfig) -> anyhow::Result<ExperimentReport> {
    let eval = cfg.eval_config()?;
    let f = cfg.function_spec()?;
    let report = match cfg.command {
        Command::Eval => eval_report(cfg, &f, &eval)?,
        Command::Moments => moments_report(cfg, &eval)?,
        Command::Voronovskaja if cfg.order == 0 => voronovskaja_s0_report(&f, cfg.x, cfg.c, &cfg.n_sweep, &eval)?,
        Command::Voronovskaja => voronovskaja_experiment(&f, cfg.order, cfg.x, cfg.c, &cfg.n_sweep, &eval)?,
        Command::Converge => simultaneous_convergence_experiment(&f, cfg.order, &cfg.x_grid(), &cfg.n_sweep, cfg.c, &eval)?,
        Command::BoundCheck => {
            pointwise_bound_check(&f, cfg.order, &cfg.n_sweep, &cfg.x_grid(), cfg.c, cfg.modulus_interval, &eval)?
        }
        Command::GlobalRate => {
            let intervals = IntervalPair::new(cfg.outer, cfg.inner)?;
            global_rate_experiment(&f, cfg.order, intervals, cfg.c, &cfg.n_sweep, &eval)?
        }
        Command::Steklov => {
            let intervals = IntervalPair::new(cfg.outer, cfg.inner)?;
            steklov_property_report(&f, cfg.order, intervals, &cfg.h_grid)?
        }
        Command::Tails => tail_decay_experiment(cfg.x, cfg.delta, cfg.gamma, cfg.c, &cfg.n_sweep, &eval)?,
    };
    Ok(report)
}

/// `Σ_j a_j M_{n,j}`, differentiated `r` times.
fn exact_image(poly: &Polynomial, r: u32, params: &OperatorParams) -> Polynomial {
    let mut acc = Polynomial::constant(0.0);
    for (j, &a) in poly.coeffs().iter().enumerate() {
        acc = &acc + &raw_moment_closed(params, j as u32).poly.scale(a);
    }
    (0..r).fold(acc, |p, _| p.derivative())
}

/// Shortest decimal rendering that the error estimate still resolves.
pub fn format_value(value: f64, error: f64) -> String {
    let digits = if error > 0.0 {
        (-error.log10()).ceil().clamp(1.0, 15.0) as usize
    } else {
        15
    };
    let s = format!("{value:.digits$}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn eval_report(cfg: &RunConfig, f: &FunctionSpec, eval: &EvalConfig) -> anyhow::Result<ExperimentReport> {
    let p = cfg.params()?;
    let v = if cfg.order == 0 {
        apply(f, cfg.x, &p, eval)
    } else {
        derivative_of_operator(f, cfg.order, cfg.x, &p, eval)
    }
    .with_context(|| format!("evaluating at n = {}, c = {}, x = {}", cfg.n, cfg.c, cfg.x))?;
    let err = v.error_bound();
    let reference = f
        .polynomial()
        .map(|poly| exact_image(poly, cfg.order, &p).eval(cfg.x))
        .unwrap_or(f64::NAN);
    let agrees = reference.is_nan() || (v.value - reference).abs() <= EXACT_TOLERANCE * reference.abs().max(1.0) + err;
    let lhs = if cfg.order == 0 {
        format!("L_{{n,c}}({}; x={})", f.label(), cfg.x)
    } else {
        format!("d^{}/dx^{} L_{{n,c}}({}; x={})", cfg.order, cfg.order, f.label(), cfg.x)
    };
    let summary = format!("{lhs} = {} ± {err:.1e}", format_value(v.value, err));
    Ok(ExperimentReport::new(
        vec![ReportRow::new(format!("x={}", cfg.x), cfg.n, v.value, reference)],
        if agrees { Verdict::Pass } else { Verdict::Fail },
        summary,
    )
    .with_meta("experiment", "eval")
    .with_meta("function", f.label())
    .with_meta("c", cfg.c)
    .with_meta("error_bound", err))
}

/// Moments at `x_count` seeded uniform samples of `x_range`, against their polynomials.
fn moments_report(cfg: &RunConfig, eval: &EvalConfig) -> anyhow::Result<ExperimentReport> {
    let p = cfg.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.x_range;
    let mut xs: Vec<f64> = (0..cfg.x_count)
        .map(|_| if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect();
    xs.sort_by(f64::total_cmp);
    let polys: Vec<Polynomial> = if cfg.central {
        central_moment_recurrence(&p, cfg.max_order).into_iter().map(|m| m.poly).collect()
    } else {
        (0..=cfg.max_order).map(|m| raw_moment_closed(&p, m).poly).collect()
    };
    let mut rows = Vec::new();
    let mut ok = true;
    for (m, poly) in polys.iter().enumerate() {
        for &x in &xs {
            let g = if cfg.central {
                FunctionSpec::centered_power(x, m)
            } else {
                FunctionSpec::monomial(m)
            };
            let v = apply(&g, x, &p, eval).with_context(|| format!("moment {m} at n = {}, x = {x}", cfg.n))?;
            let reference = poly.eval(x);
            ok &= (v.value - reference).abs() <= EXACT_TOLERANCE * reference.abs() + v.error_bound();
            rows.push(ReportRow::new(format!("m={m};x={x}"), cfg.n, v.value, reference));
        }
    }
    let kind = if cfg.central { "central" } else { "raw" };
    let summary = format!(
        "{kind} moments 0..={} at {} sampled x: operator {} the moment polynomials",
        cfg.max_order,
        xs.len(),
        if ok { "matches" } else { "deviates from" }
    );
    Ok(ExperimentReport::new(rows, if ok { Verdict::Pass } else { Verdict::Fail }, summary)
        .with_meta("experiment", "moments")
        .with_meta("kind", kind)
        .with_meta("c", cfg.c))
}

/// Exit status for a finished run: 0 unless the verdict failed.
pub fn exit_code(report: &ExperimentReport) -> i32 {
    if report.verdict.is_fail() {
        2
    } else {
        0
    }
}

/// The report in the configured format.
pub fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    }
}
