use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hybrid_operator_cli::{exit_code, parse_config, render, run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "hybridop", version, about = "Evaluate hybrid summation-integral operators and run convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evaluate the operator (or its s-th derivative) at one point.
    Eval(Flags),
    /// Tabulate raw or central moments at seeded sample points.
    Moments(Flags),
    /// Extrapolate the Voronovskaja limit and compare coefficient readings.
    Voronovskaja(Flags),
    /// Simultaneous convergence of normalized derivatives along an n sweep.
    Converge(Flags),
    /// Pointwise modulus bound on an (n, x) grid.
    BoundCheck(Flags),
    /// Sup-norm rate on an inner interval against the modulus envelope.
    GlobalRate(Flags),
    /// Steklov mean properties along an h grid.
    Steklov(Flags),
    /// Tail mass decay along an n sweep.
    Tails(Flags),
}

#[derive(Args, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// key=value file; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// bundled name (t0..t6, exp_neg, exp_neg_sin, abs32, abs1, inv1p) or coefficients "a0,a1,..."
    #[arg(long = "fn", allow_hyphen_values = true)]
    function: Option<String>,
    #[arg(long)]
    x: Option<f64>,
    /// derivative order s
    #[arg(long, conflicts_with = "r")]
    s: Option<u32>,
    /// derivative order r
    #[arg(long)]
    r: Option<u32>,
    /// central instead of raw moments
    #[arg(long)]
    central: bool,
    /// highest moment order
    #[arg(long)]
    max: Option<u32>,
    /// "lo,hi"
    #[arg(long)]
    x_range: Option<String>,
    #[arg(long)]
    x_count: Option<usize>,
    /// comma-separated n values
    #[arg(long)]
    n_sweep: Option<String>,
    /// "a,b"
    #[arg(long)]
    outer: Option<String>,
    /// "a1,b1"
    #[arg(long)]
    inner: Option<String>,
    /// "lo,hi" interval of the modulus in bound-check
    #[arg(long)]
    modulus_interval: Option<String>,
    /// comma-separated decreasing h values
    #[arg(long)]
    h_grid: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// report file
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads, default all logical cores
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    truncation_tolerance: Option<f64>,
    #[arg(long)]
    rel_tolerance: Option<f64>,
    #[arg(long)]
    abs_tolerance: Option<f64>,
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k: &'static str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        push("n", self.n.map(|x| x.to_string()));
        push("c", self.c.map(|x| x.to_string()));
        push("fn", self.function.clone());
        push("x", self.x.map(|x| x.to_string()));
        push("s", self.s.or(self.r).map(|x| x.to_string()));
        push("central", self.central.then(|| "true".to_string()));
        push("max", self.max.map(|x| x.to_string()));
        push("x_range", self.x_range.clone());
        push("x_count", self.x_count.map(|x| x.to_string()));
        push("n_sweep", self.n_sweep.clone());
        push("outer", self.outer.clone());
        push("inner", self.inner.clone());
        push("modulus_interval", self.modulus_interval.clone());
        push("h_grid", self.h_grid.clone());
        push("delta", self.delta.map(|x| x.to_string()));
        push("gamma", self.gamma.map(|x| x.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("format", self.format.clone());
        push("seed", self.seed.map(|x| x.to_string()));
        push("threads", self.threads.map(|x| x.to_string()));
        push("truncation_tolerance", self.truncation_tolerance.map(|x| x.to_string()));
        push("rel_tolerance", self.rel_tolerance.map(|x| x.to_string()));
        push("abs_tolerance", self.abs_tolerance.map(|x| x.to_string()));
        v
    }
}

fn build(command: Command, flags: &Flags) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::new(command);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let entries = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.apply_entries(&entries).with_context(|| format!("in {}", path.display()))?;
        // the subcommand decides what runs, whatever the file says
        cfg.command = command;
    }
    for (key, value) in flags.entries() {
        cfg.set(key, &value).map_err(|m| anyhow::anyhow!("flag --{}: {m}", key.replace('_', "-")))?;
    }
    Ok(cfg)
}

fn execute(command: Command, flags: &Flags) -> anyhow::Result<i32> {
    let cfg = build(command, flags)?;
    let report = run(&cfg)?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, render(&report, cfg.format)).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", report.verdict_line());
    Ok(exit_code(&report))
}

fn main() -> ExitCode {
    // usage errors exit with 1 so that 2 stays reserved for failed verdicts
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, flags) = match &cli.command {
        Sub::Eval(f) => (Command::Eval, f),
        Sub::Moments(f) => (Command::Moments, f),
        Sub::Voronovskaja(f) => (Command::Voronovskaja, f),
        Sub::Converge(f) => (Command::Converge, f),
        Sub::BoundCheck(f) => (Command::BoundCheck, f),
        Sub::GlobalRate(f) => (Command::GlobalRate, f),
        Sub::Steklov(f) => (Command::Steklov, f),
        Sub::Tails(f) => (Command::Tails, f),
    };
    match execute(command, flags) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
