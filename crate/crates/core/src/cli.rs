//! The `mslevy` command line.
//!
//! Every command reads a [`RunConfig`] (defaults, then an optional JSON file,
//! then `--set key=value` and the global flags), validates it, runs, and
//! writes a CSV that starts with `#` provenance lines. Exit codes: 0
//! success, 1 failed check, 2 configuration error, 3 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaDescriptor, AlphaFunction};
use crate::error::{Error, Result};
use crate::shotnoise::{generate_points, sample_path, ProcessKind};
use crate::spectra::{
    chernoff_h, chernoff_sup, coarse_exponents, delta_estimate, estimate_fg, hausdorff_curve,
    holder_estimate, large_deviation_curve, legendre_empirical, partition_tau, predicted_holder, concave_hull,
    ChernoffParams, CoarseExponentField, FgOptions, Side, SpectrumCurve,
};
use crate::stable_norm::schelling_f;
use crate::validation::{empirical_char_fn, scaling_fit, tangent_check, MCConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mslevy", version, about = "Multistable Lévy motion simulation and multifractal analysis")]
pub struct Cli {
    /// JSON run configuration; fields not given keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override one config field, the value read as JSON (e.g. `--set resolution=512`).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample one process path on the grid `j / resolution`.
    Simulate,
    /// Closed-form spectrum (`family`: hausdorff, large-deviation, hull).
    TheorySpectrum,
    /// Spectrum estimated from one simulated path (`family`: large-deviation, legendre).
    EstimateSpectrum,
    /// Estimated against predicted pointwise Hölder exponents.
    HolderMap,
    #[command(subcommand)]
    Validate(Check),
    /// Theoretical and empirical spectra side by side.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Check {
    Charfn,
    Scaling,
    Tangent,
    Schelling,
    Chernoff,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TheorySpectrum => "theory-spectrum",
            Command::EstimateSpectrum => "estimate-spectrum",
            Command::HolderMap => "holder-map",
            Command::Validate(Check::Charfn) => "validate charfn",
            Command::Validate(Check::Scaling) => "validate scaling",
            Command::Validate(Check::Tangent) => "validate tangent",
            Command::Validate(Check::Schelling) => "validate schelling",
            Command::Validate(Check::Chernoff) => "validate chernoff",
            Command::Report => "report",
        }
    }
}

/// Parameters of a run. Each command reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: AlphaDescriptor,
    pub seed: u64,
    /// Number of series terms `N`; the level cut in Monte-Carlo checks.
    pub truncation: usize,
    /// Grid size `n` of simulated paths.
    pub resolution: usize,
    pub process: String,
    /// Resolutions for estimators and scaling fits.
    pub n_list: Vec<usize>,
    /// `β` or `h` grid of spectra.
    pub grid: Vec<f64>,
    pub family: String,
    pub eps_schedule: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// Evaluation times of `holder-map`.
    pub times: Vec<f64>,
    /// Dyadic levels `[lo, hi]` of the Hölder regression.
    pub levels: [u32; 2],
    pub beta: f64,
    pub eps: f64,
    pub s: f64,
    /// Right end of the char-fn interval; the point of scaling and tangent checks.
    pub t: f64,
    pub thetas: Vec<f64>,
    pub r_list: Vec<f64>,
    pub replicas: usize,
    pub clt_multiplier: f64,
    pub abs_tolerance: f64,
    /// Grid points of `validate schelling` on [1.05, 1.95].
    pub schelling_points: usize,
    /// Side length of the (λ, p) sweep of `validate chernoff`.
    pub chernoff_sweep: usize,
    pub chernoff_grid: usize,
    pub chernoff_tolerance: f64,
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    let m = (k - 1) as f64;
    (0..k).map(|i| (a * (m - i as f64) + b * i as f64) / m).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: AlphaDescriptor {
                kind: "constant".into(),
                params: vec![1.5],
                min_set_dimension: None,
            },
            seed: 0,
            truncation: 1000,
            resolution: 1024,
            process: "B".into(),
            n_list: (6..=10).map(|k| 1 << k).collect(),
            grid: linspace(0.0, 2.0, 81),
            family: "large-deviation".into(),
            eps_schedule: vec![0.1, 0.05],
            q_grid: linspace(-2.0, 5.0, 29),
            times: (1..20).map(|i| i as f64 / 20.0).collect(),
            levels: [3, 9],
            beta: 0.3,
            eps: 0.05,
            s: 0.0,
            t: 0.5,
            thetas: vec![0.5, 1.0, 2.0],
            r_list: vec![0.125, 0.0625, 0.03125, 0.015625],
            replicas: 1000,
            clt_multiplier: 3.0,
            abs_tolerance: 0.0,
            schelling_points: 100,
            chernoff_sweep: 20,
            chernoff_grid: 1_000_000,
            chernoff_tolerance: 1e-9,
        }
    }
}

impl RunConfig {
    /// Defaults, then the JSON file, then `--set` overrides, then `--seed`.
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let mut value = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let file: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                serde_json::to_value(file).map_err(|e| Error::Config(e.to_string()))?
            }
            None => serde_json::to_value(RunConfig::default()).map_err(|e| Error::Config(e.to_string()))?,
        };
        for item in &cli.overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{item}' is not KEY=VALUE")))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let slot = value
                .get_mut(key)
                .ok_or_else(|| Error::Config(format!("unknown config field '{key}'")))?;
            *slot = parsed;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn alpha(&self) -> Result<AlphaFunction> {
        AlphaFunction::from_descriptor(&self.alpha)
    }

    fn process(&self) -> Result<ProcessKind> {
        self.process.parse()
    }

    fn mc(&self) -> Result<MCConfig> {
        let cfg = MCConfig {
            replicas: self.replicas,
            seed_base: self.seed,
            truncation: self.truncation,
            clt_multiplier: self.clt_multiplier,
            abs_tolerance: self.abs_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn grid(&self) -> Result<&[f64]> {
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        Ok(&self.grid)
    }

    fn fields(&self) -> Result<Vec<CoarseExponentField>> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        let points = generate_points(self.seed, self.truncation)?;
        let path = sample_path(&points, &self.alpha()?, self.process()?, self.resolution)?;
        self.n_list.iter().map(|&n| coarse_exponents(&path, n)).collect()
    }
}

/// Result of a command: the CSV body and whether its checks passed.
struct Output {
    columns: &'static str,
    rows: Vec<String>,
    notes: Vec<String>,
    passed: bool,
}

impl Output {
    fn new(columns: &'static str) -> Self {
        Output {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }
}

/// Shortest round-trip decimal, `-inf` for the sentinel.
fn num(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn curve_rows(curve: &SpectrumCurve, with_reliable: bool) -> Vec<String> {
    (0..curve.len())
        .map(|i| {
            if with_reliable {
                format!("{},{},{}", num(curve.grid[i]), curve.values[i], curve.is_reliable(i))
            } else {
                format!("{},{}", num(curve.grid[i]), curve.values[i])
            }
        })
        .collect()
}

fn simulate(cfg: &RunConfig) -> Result<Output> {
    let points = generate_points(cfg.seed, cfg.truncation)?;
    let path = sample_path(&points, &cfg.alpha()?, cfg.process()?, cfg.resolution)?;
    let mut out = Output::new("t,value");
    out.rows = path
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| format!("{},{}", num(path.time(j)), num(*v)))
        .collect();
    Ok(out)
}

fn theory_spectrum(cfg: &RunConfig) -> Result<Output> {
    let alpha = cfg.alpha()?;
    let (c, d) = alpha.bounds();
    let curve = match cfg.family.as_str() {
        "hausdorff" => hausdorff_curve(c, d, alpha.min_set_dimension(), cfg.grid()?)?,
        "large-deviation" => large_deviation_curve(c, d, cfg.grid()?)?,
        "hull" => concave_hull(&hausdorff_curve(c, d, alpha.min_set_dimension(), cfg.grid()?)?)?,
        other => return Err(Error::Config(format!("unknown theoretical family '{other}'"))),
    };
    let mut out = Output::new("x,value");
    out.rows = curve_rows(&curve, false);
    Ok(out)
}

fn estimated(cfg: &RunConfig, fields: &[CoarseExponentField], family: &str) -> Result<SpectrumCurve> {
    match family {
        "large-deviation" => estimate_fg(fields, cfg.grid()?, &cfg.eps_schedule, FgOptions::default()),
        "legendre" => legendre_empirical(&partition_tau(fields, &cfg.q_grid)?, cfg.grid()?),
        other => Err(Error::Config(format!("unknown estimated family '{other}'"))),
    }
}

fn estimate_spectrum(cfg: &RunConfig) -> Result<Output> {
    let fields = cfg.fields()?;
    let curve = estimated(cfg, &fields, &cfg.family)?;
    let mut out = Output::new("beta,value,reliable");
    out.rows = curve_rows(&curve, true);
    Ok(out)
}

fn holder_map(cfg: &RunConfig) -> Result<Output> {
    let alpha = cfg.alpha()?;
    let points = generate_points(cfg.seed, cfg.truncation)?;
    let path = sample_path(&points, &alpha, cfg.process()?, cfg.resolution)?;
    let levels = cfg.levels[0]..=cfg.levels[1];
    let mut out = Output::new("t,h_est,h_pred");
    for &t in &cfg.times {
        let h_est = match holder_estimate(&path, t, levels.clone()) {
            Ok(h) => h,
            Err(Error::Degenerate(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        let h_pred = predicted_holder(&alpha, &delta_estimate(&points, t)?)?;
        out.rows.push(format!("{},{},{}", num(t), num(h_est), num(h_pred)));
    }
    Ok(out)
}

fn validate_charfn(cfg: &RunConfig) -> Result<Output> {
    let report = empirical_char_fn(&cfg.alpha()?, cfg.s, cfg.t, &cfg.thetas, &cfg.mc()?)?;
    let mut out = Output::new("theta,empirical_re,empirical_im,theoretical,distance,std_error,truncation_slack,tolerance,pass");
    for e in &report.entries {
        out.rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            num(e.theta),
            num(e.empirical.re),
            num(e.empirical.im),
            num(e.theoretical),
            num(e.distance),
            num(e.std_error),
            num(e.truncation_slack),
            num(e.tolerance),
            e.pass
        ));
    }
    out.passed = report.all_pass();
    Ok(out)
}

fn validate_scaling(cfg: &RunConfig) -> Result<Output> {
    let fit = scaling_fit(&cfg.alpha()?, cfg.beta, cfg.eps, cfg.t, &cfg.n_list, &cfg.mc()?, cfg.process()?)?;
    let mut out = Output::new("n,probability");
    out.rows = fit
        .n_list
        .iter()
        .zip(&fit.probabilities)
        .map(|(n, p)| format!("{n},{}", num(*p)))
        .collect();
    out.notes = vec![
        format!("regime: {:?}", fit.regime),
        format!("slope: {}", fit.slope.map_or("none".into(), num)),
        format!("predicted: [{}, {}]", num(fit.predicted.0), num(fit.predicted.1)),
        format!("reliable: {}", fit.reliable),
        format!("contained: {}", fit.contained),
    ];
    out.passed = fit.contained;
    Ok(out)
}

/// Passes when every empirical value is within the Monte-Carlo allowance of
/// the exact law at its `r`.
fn validate_tangent(cfg: &RunConfig) -> Result<Output> {
    let mc = cfg.mc()?;
    let theta = cfg.thetas.first().copied().unwrap_or(1.0);
    let points = tangent_check(&cfg.alpha()?, cfg.t, &cfg.r_list, theta, &mc)?;
    let allowance = mc.clt_multiplier / (mc.replicas as f64).sqrt() + mc.abs_tolerance;
    let mut out = Output::new("r,empirical_re,empirical_im,limit,exact,distance");
    for p in &points {
        out.rows.push(format!(
            "{},{},{},{},{},{}",
            num(p.r),
            num(p.empirical.re),
            num(p.empirical.im),
            num(p.limit),
            num(p.exact),
            num(p.distance)
        ));
        out.passed &= (p.empirical - p.exact).norm() <= allowance;
    }
    out.notes.push(format!("theta: {}", num(theta)));
    Ok(out)
}

fn validate_schelling(cfg: &RunConfig) -> Result<Output> {
    if cfg.schelling_points < 2 {
        return Err(Error::Config("schelling_points must be at least 2".into()));
    }
    let mut out = Output::new("beta,value");
    for beta in linspace(1.05, 1.95, cfg.schelling_points) {
        let f = schelling_f(beta)?;
        out.passed &= f > 0.0;
        out.rows.push(format!("{},{}", num(beta), num(f)));
    }
    Ok(out)
}

/// Closed-form supremum against the maximum of `H` on a uniform grid over
/// the relevant half-line `[0, ±20]`.
fn validate_chernoff(cfg: &RunConfig) -> Result<Output> {
    if cfg.chernoff_sweep < 2 || cfg.chernoff_grid < 2 {
        return Err(Error::Config("chernoff_sweep and chernoff_grid must be at least 2".into()));
    }
    const SPAN: f64 = 20.0;
    let k = cfg.chernoff_sweep;
    let mut out = Output::new("lambda,p,closed_form,brute_force,abs_diff");
    for i in 0..k {
        for j in 0..k {
            let lambda = (i as f64 + 0.5) / k as f64;
            let p = (j as f64 + 0.5) / k as f64;
            if i == j {
                continue;
            }
            let params = ChernoffParams::new(lambda, p)?;
            let (side, dir) = if p < lambda { (Side::PositiveT, 1.0) } else { (Side::NegativeT, -1.0) };
            let closed = chernoff_sup(params, side)?.value;
            let m = cfg.chernoff_grid;
            let brute = (0..m)
                .map(|g| chernoff_h(params, dir * SPAN * g as f64 / (m - 1) as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            let diff = (closed - brute).abs();
            out.passed &= diff <= cfg.chernoff_tolerance;
            out.rows.push(format!("{},{},{},{},{}", num(lambda), num(p), num(closed), num(brute), num(diff)));
        }
    }
    Ok(out)
}

fn report(cfg: &RunConfig) -> Result<Output> {
    let alpha = cfg.alpha()?;
    let (c, d) = alpha.bounds();
    let fg = large_deviation_curve(c, d, cfg.grid()?)?;
    let fh = hausdorff_curve(c, d, alpha.min_set_dimension(), cfg.grid()?)?;
    let fields = cfg.fields()?;
    let fg_emp = estimated(cfg, &fields, "large-deviation")?;
    let fl_emp = estimated(cfg, &fields, "legendre")?;
    let mut out = Output::new("beta,fg_theory,fh_theory,fg_empirical,fg_reliable,fl_empirical,fl_reliable");
    for i in 0..cfg.grid.len() {
        out.rows.push(format!(
            "{},{},{},{},{},{},{}",
            num(cfg.grid[i]),
            fg.values[i],
            fh.values[i],
            fg_emp.values[i],
            fg_emp.is_reliable(i),
            fl_emp.values[i],
            fl_emp.is_reliable(i)
        ));
    }
    Ok(out)
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Output> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::TheorySpectrum => theory_spectrum(cfg),
        Command::EstimateSpectrum => estimate_spectrum(cfg),
        Command::HolderMap => holder_map(cfg),
        Command::Validate(Check::Charfn) => validate_charfn(cfg),
        Command::Validate(Check::Scaling) => validate_scaling(cfg),
        Command::Validate(Check::Tangent) => validate_tangent(cfg),
        Command::Validate(Check::Schelling) => validate_schelling(cfg),
        Command::Validate(Check::Chernoff) => validate_chernoff(cfg),
        Command::Report => report(cfg),
    }
}

fn write_output(w: &mut dyn Write, command: Command, cfg: &RunConfig, out: &Output) -> io::Result<()> {
    writeln!(w, "# mslevy {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# command: {}", command.name())?;
    writeln!(w, "# config: {}", serde_json::to_string(cfg).map_err(io::Error::other)?)?;
    writeln!(w, "# seed: {}", cfg.seed)?;
    for note in &out.notes {
        writeln!(w, "# {note}")?;
    }
    if matches!(command, Command::Validate(_)) {
        writeln!(w, "# result: {}", if out.passed { "PASS" } else { "FAIL" })?;
    }
    writeln!(w, "{}", out.columns)?;
    for row in &out.rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::Domain(_) | Error::Config(_) | Error::InsufficientData(_) => EXIT_CONFIG,
        Error::Numeric { .. } | Error::Degenerate(_) => EXIT_CHECK_FAILED,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let cfg = match RunConfig::resolve(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return if matches!(e, Error::Io(_)) { EXIT_CONFIG } else { exit_code(&e) };
        }
    };
    let run = || dispatch(cli.command, &cfg);
    let result = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
        None => run(),
    };
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cli.out {
        Some(path) => File::create(path).and_then(|f| write_output(&mut BufWriter::new(f), cli.command, &cfg, &out)),
        None => write_output(&mut io::stdout().lock(), cli.command, &cfg, &out),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    if out.passed {
        EXIT_OK
    } else {
        eprintln!("{}: check failed", cli.command.name());
        EXIT_CHECK_FAILED
    }
}

/// Parses `args` (program name first) and runs; argument errors exit with 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
