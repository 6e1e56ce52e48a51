//! Command-line front end: argument definitions, subcommands and run
//! manifests.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    decay_check, score_b, score_b_hosking, score_s_exact, table_processes, BasisMethod, DecayCase, ExactProcess,
    TableProcess,
};
use crate::bestbasis::{
    best_basis_1factor, best_basis_kfactor, cw_best_basis, render_ascii, whitcher_basis, CostSpec, Frequency,
    WHITCHER_THRESHOLD,
};
use crate::error::Error;
use crate::filters::{parse_filter, Family, QmfPair};
use crate::gegenbauer::{autocovariance, GegenbauerModel, ACV_TOL, BETA_TOL, DEFAULT_SIGMA2};
use crate::simulate::{simulate_hosking, simulate_wp, SimConfig};
use crate::wpt::{WpNode, WpTree};

/// Largest series length for the exact (dense `N × N`) score paths.
pub const MAX_EXACT_N: usize = 1024;

const UNITS: &str = "Frequencies are in cycles per sample, in [0, 1/2], given as decimals (0.375) \
or rationals (1/12). Memory parameters d are dimensionless; series lengths are N = 2^J samples.";

#[derive(Debug, Parser)]
#[command(name = "wpgegen", version, about = "Wavelet packet simulation of k-factor Gegenbauer processes", after_help = UNITS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Seed for every random draw (ChaCha20 streams).
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Output file; a JSON run manifest is written next to it as
    /// `<out>.manifest.json`. Defaults to standard output (no manifest).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a best-ortho-basis; writes the tree as JSON plus an ASCII band picture.
    #[command(after_help = UNITS)]
    Basis(BasisArgs),
    /// Simulate series; long-format CSV (replicate, t, value).
    #[command(after_help = UNITS)]
    Simulate(SimulateArgs),
    /// Exact autocovariances; CSV (h, gamma, rho).
    #[command(after_help = UNITS)]
    Acv(AcvArgs),
    /// S (and optionally B) scores for one model; CSV per filter and method.
    #[command(after_help = UNITS)]
    Score(ScoreArgs),
    /// S scores over the four benchmark processes and the filter grid.
    #[command(after_help = UNITS)]
    Table1(TableArgs),
    /// B and B_pen scores over the benchmark grid, with a Hosking row per process.
    #[command(after_help = UNITS)]
    Table2(Table2Args),
    /// Packet covariance decay against the predicted exponents; CSV.
    #[command(after_help = UNITS)]
    Decay(DecayArgs),
    /// Wall-clock seconds of basis construction per depth; CSV (J, method, seconds).
    #[command(after_help = UNITS)]
    Bench(BenchArgs),
    /// Filter coefficients; CSV (index, h, g).
    Filters(FiltersArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum BasisChoice {
    Ours,
    CwIndicator,
    CwThreshold,
    Whitcher,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Gegenbauer factor "d,nu" (repeatable); nu in cycles/sample.
    #[arg(long = "factor", value_parser = parse_factor)]
    pub factors: Vec<(f64, Frequency)>,
    /// Innovation variance σ²; 2π makes white noise have unit spectral density.
    #[arg(long, default_value_t = DEFAULT_SIGMA2)]
    pub sigma2: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<GegenbauerModel, CliError> {
        if self.factors.is_empty() {
            return Err(CliError::Usage("at least one --factor d,nu is required".into()));
        }
        Ok(GegenbauerModel::new(self.factors.iter().map(|(d, nu)| (*d, nu.value())).collect(), self.sigma2)?)
    }

    fn frequencies(&self) -> Vec<Frequency> {
        self.factors.iter().map(|f| f.1).collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BasisArgs {
    /// Singularity frequency (repeatable), cycles/sample.
    #[arg(long = "nu", value_parser = parse_frequency)]
    pub nus: Vec<Frequency>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tree depth J (series length 2^J).
    #[arg(long = "J", default_value_t = 8)]
    pub depth: u32,
    #[arg(long, value_enum, default_value_t = BasisChoice::Ours)]
    pub method: BasisChoice,
    /// Filter label (db10, sym8, coif5, bl6 or family:q); used by whitcher.
    #[arg(long, default_value = "db10")]
    pub filter: String,
    /// Gain threshold for whitcher (default 0.01) or variance threshold for cw-threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Width of the ASCII rendering in columns.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SimMethod {
    Wp,
    Hosking,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SimMethod::Wp)]
    pub method: SimMethod,
    /// Series length is 2^J.
    #[arg(long = "J", default_value_t = 8)]
    pub depth: u32,
    #[arg(long, default_value = "db10")]
    pub filter: String,
    /// Basis used by the wp method when no --tree is given.
    #[arg(long, value_enum, default_value_t = BasisChoice::Ours)]
    pub basis: BasisChoice,
    /// Tree JSON file ({"J":..,"leaves":[[j,p],..]}) overriding --basis.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AcvArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest lag in samples.
    #[arg(long, default_value_t = 255)]
    pub max_lag: usize,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = ACV_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Filter label (repeatable).
    #[arg(long = "filter", default_values_t = vec!["db10".to_string()])]
    pub filters: Vec<String>,
    /// Basis method (repeatable): ours or whitcher.
    #[arg(long = "method", value_parser = parse_method, default_values_t = vec![BasisMethod::Ours])]
    pub methods: Vec<BasisMethod>,
    /// Series length is 2^J (J <= 10).
    #[arg(long = "J", default_value_t = 8)]
    pub depth: u32,
    /// Replicates for the simulated B score; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub replicates: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    /// Benchmark process id (1..4, repeatable); all when omitted.
    #[arg(long = "process")]
    pub processes: Vec<usize>,
    /// Restrict to one family (daubechies, symmlet, coiflet, battle-lemarie).
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Series length is 2^J (J <= 10).
    #[arg(long = "J", default_value_t = 8)]
    pub depth: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Table2Args {
    #[command(flatten)]
    pub table: TableArgs,
    /// Simulated series per cell.
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecayArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "db4")]
    pub filter: String,
    /// Series length is 2^J (J <= 10).
    #[arg(long = "J", default_value_t = 10)]
    pub depth: u32,
    /// Use the full tree at this level as the basis.
    #[arg(long, default_value_t = 2)]
    pub level: u32,
    /// Tree JSON file overriding --level.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 6)]
    pub j_min: u32,
    #[arg(long, default_value_t = 13)]
    pub j_max: u32,
    /// Singularity frequency (repeatable), cycles/sample.
    #[arg(long = "nu", value_parser = parse_frequency, default_values_t = vec![Frequency::rational(1, 12).unwrap()])]
    pub nus: Vec<Frequency>,
    #[arg(long, default_value = "db10")]
    pub filter: String,
    /// Timed repetitions; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiltersArgs {
    /// Filter label (db4, sym8, coif3, bl2, daubechies:6, ...).
    #[arg(long, default_value = "db4")]
    pub filter: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
    Io(io::Error),
}

impl CliError {
    /// 1 for invalid input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

fn parse_frequency(s: &str) -> Result<Frequency, String> {
    s.parse::<Frequency>().map_err(|e| e.to_string())
}

fn parse_factor(s: &str) -> Result<(f64, Frequency), String> {
    let (d, nu) = s.split_once(',').ok_or_else(|| format!("expected d,nu but got '{s}'"))?;
    let d: f64 = d.trim().parse().map_err(|_| format!("bad memory parameter '{d}'"))?;
    Ok((d, parse_frequency(nu)?))
}

fn parse_method(s: &str) -> Result<BasisMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Reproducibility record written beside every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, A: Serialize> {
    pub subcommand: &'a str,
    pub flags: &'a A,
    pub seed: u64,
    pub version: &'a str,
    pub outputs: Vec<String>,
}

struct Sink<'a> {
    common: &'a Common,
    outputs: Vec<String>,
}

impl<'a> Sink<'a> {
    fn new(common: &'a Common) -> Self {
        Sink { common, outputs: Vec::new() }
    }

    /// Primary output: the `--out` file or standard output.
    fn primary(&mut self, bytes: &[u8]) -> io::Result<()> {
        match &self.common.out {
            Some(p) => {
                fs::write(p, bytes)?;
                self.outputs.push(p.display().to_string());
                Ok(())
            }
            None => io::stdout().lock().write_all(bytes),
        }
    }

    /// Secondary output `<out>.<suffix>`, or standard output after the primary.
    fn secondary(&mut self, suffix: &str, bytes: &[u8]) -> io::Result<()> {
        match &self.common.out {
            Some(p) => {
                let path = with_suffix(p, suffix);
                fs::write(&path, bytes)?;
                self.outputs.push(path.display().to_string());
                Ok(())
            }
            None => io::stdout().lock().write_all(bytes),
        }
    }

    fn finish<A: Serialize>(self, subcommand: &str, flags: &A) -> Result<(), CliError> {
        if let Some(p) = &self.common.out {
            let manifest = RunManifest {
                subcommand,
                flags,
                seed: self.common.seed,
                version: env!("CARGO_PKG_VERSION"),
                outputs: self.outputs,
            };
            let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
            fs::write(with_suffix(p, "manifest.json"), json + "\n")?;
        }
        Ok(())
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(io::Error::other(e.to_string())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_exact_depth(depth: u32) -> Result<(), CliError> {
    if depth == 0 || (1usize << depth.min(31)) > MAX_EXACT_N {
        return Err(CliError::Usage(format!("exact scores need 1 <= J <= 10 (N <= {MAX_EXACT_N}), got J = {depth}")));
    }
    Ok(())
}

fn build_basis(
    choice: BasisChoice,
    nus: &[Frequency],
    model: Option<&GegenbauerModel>,
    filter: &QmfPair,
    depth: u32,
    threshold: Option<f64>,
) -> Result<WpTree, CliError> {
    if nus.is_empty() {
        return Err(CliError::Usage("at least one frequency (--nu or --factor) is required".into()));
    }
    let need_model = || model.ok_or_else(|| CliError::Usage("cw methods need the model: pass --factor d,nu".into()));
    Ok(match choice {
        BasisChoice::Ours if nus.len() == 1 => best_basis_1factor(&nus[0], depth)?,
        BasisChoice::Ours => best_basis_kfactor(nus, depth)?,
        BasisChoice::Whitcher => whitcher_basis(nus, filter, depth, threshold.unwrap_or(WHITCHER_THRESHOLD))?,
        BasisChoice::CwIndicator => cw_best_basis(need_model()?, depth, CostSpec::SingularityIndicator, BETA_TOL)?,
        BasisChoice::CwThreshold => {
            let delta = threshold.ok_or_else(|| CliError::Usage("cw-threshold needs --threshold".into()))?;
            cw_best_basis(need_model()?, depth, CostSpec::ThresholdFunctional { delta }, BETA_TOL)?
        }
    })
}

fn read_tree(path: &Path) -> Result<WpTree, CliError> {
    Ok(WpTree::from_json(&fs::read_to_string(path)?)?)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Basis(a) => cmd_basis(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Acv(a) => cmd_acv(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Table1(a) => cmd_table1(&a),
        Command::Table2(a) => cmd_table2(&a),
        Command::Decay(a) => cmd_decay(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Filters(a) => cmd_filters(&a),
    }
}

pub fn cmd_basis(a: &BasisArgs) -> Result<(), CliError> {
    let filter = parse_filter(&a.filter)?;
    let nus = if a.nus.is_empty() { a.model.frequencies() } else { a.nus.clone() };
    let model = if a.model.factors.is_empty() { None } else { Some(a.model.model()?) };
    let tree = build_basis(a.method, &nus, model.as_ref(), &filter, a.depth, a.threshold)?;
    let mut sink = Sink::new(&a.common);
    sink.primary((tree.to_json() + "\n").as_bytes())?;
    sink.secondary("txt", render_ascii(&tree, a.width).as_bytes())?;
    sink.finish("basis", a)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    if a.depth == 0 || a.depth > 24 {
        return Err(CliError::Usage(format!("--J must lie in 1..=24, got {}", a.depth)));
    }
    let model = a.model.model()?;
    let series = match a.method {
        SimMethod::Hosking => simulate_hosking(&model, 1 << a.depth, a.common.seed, a.replicates)?,
        SimMethod::Wp => {
            let filter = parse_filter(&a.filter)?;
            let tree = match &a.tree {
                Some(p) => read_tree(p)?,
                None => build_basis(a.basis, &a.model.frequencies(), Some(&model), &filter, a.depth, None)?,
            };
            simulate_wp(&SimConfig::new(model, tree, filter, a.common.seed, a.replicates)?)?
        }
    };
    let rows: Vec<Vec<String>> = series
        .iter()
        .enumerate()
        .flat_map(|(r, x)| x.iter().enumerate().map(move |(t, v)| vec![r.to_string(), t.to_string(), v.to_string()]))
        .collect();
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&["replicate", "t", "value"], &rows)?)?;
    sink.finish("simulate", a)
}

pub fn cmd_acv(a: &AcvArgs) -> Result<(), CliError> {
    let acv = autocovariance(&a.model.model()?, a.max_lag, a.tol)?;
    let rho = acv.rho();
    let rows: Vec<Vec<String>> = acv
        .gamma
        .iter()
        .zip(&rho)
        .enumerate()
        .map(|(h, (g, r))| vec![h.to_string(), g.to_string(), r.to_string()])
        .collect();
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&["h", "gamma", "rho"], &rows)?)?;
    sink.finish("acv", a)
}

const SCORE_HEADER: [&str; 11] =
    ["process", "family", "q", "method", "leaf_count", "lambda", "hs_error", "S", "B", "B_pen", "seed"];

struct Cell {
    process: String,
    family: String,
    q: String,
    method: String,
    leaf_count: Option<usize>,
    lambda: f64,
    hs_error: Option<f64>,
    s: Option<f64>,
    b: Option<f64>,
    b_pen: Option<f64>,
    seed: Option<u64>,
}

impl Cell {
    fn row(&self) -> Vec<String> {
        vec![
            self.process.clone(),
            self.family.clone(),
            self.q.clone(),
            self.method.clone(),
            self.leaf_count.map(|v| v.to_string()).unwrap_or_default(),
            self.lambda.to_string(),
            opt(self.hs_error),
            opt(self.s),
            opt(self.b),
            opt(self.b_pen),
            self.seed.map(|v| v.to_string()).unwrap_or_default(),
        ]
    }
}

/// One grid cell; basis failures (`BasisNotFound`) become empty cells.
fn score_cell(
    process: &ExactProcess,
    label: &str,
    nus: &[Frequency],
    filter: &QmfPair,
    method: BasisMethod,
    depth: u32,
    sim: Option<(usize, u64)>,
) -> Result<Cell, CliError> {
    let mut cell = Cell {
        process: label.to_string(),
        family: filter.family.name().to_string(),
        q: filter.q.to_string(),
        method: method.name().to_string(),
        leaf_count: None,
        lambda: process.lambda,
        hs_error: None,
        s: None,
        b: None,
        b_pen: None,
        seed: sim.map(|s| s.1),
    };
    let tree = match method.build(nus, filter, depth) {
        Ok(t) => t,
        Err(Error::BasisNotFound(_)) => return Ok(cell),
        Err(e) => return Err(e.into()),
    };
    let r = score_s_exact(process, &tree, filter, method.name())?;
    cell.leaf_count = Some(r.leaf_count);
    cell.hs_error = Some(r.hs_error);
    cell.s = Some(r.s);
    if let Some((m, seed)) = sim {
        let (b, b_pen) = score_b(process, &tree, filter, m, seed)?;
        cell.b = Some(b);
        cell.b_pen = Some(b_pen);
    }
    Ok(cell)
}

pub fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    check_exact_depth(a.depth)?;
    let model = a.model.model()?;
    let process = ExactProcess::new(&model, 1 << a.depth, ACV_TOL)?;
    let label = a.model.factors.iter().map(|(d, nu)| format!("({d};{nu})")).collect::<Vec<_>>().join("+");
    let sim = (a.replicates > 0).then_some((a.replicates, a.common.seed));
    let mut rows = Vec::new();
    for f in &a.filters {
        let filter = parse_filter(f)?;
        for &m in &a.methods {
            rows.push(score_cell(&process, &label, &a.model.frequencies(), &filter, m, a.depth, sim)?.row());
        }
    }
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&SCORE_HEADER, &rows)?)?;
    sink.finish("score", a)
}

fn selected_processes(a: &TableArgs) -> Result<Vec<TableProcess>, CliError> {
    let all = table_processes();
    if let Some(bad) = a.processes.iter().find(|&&p| p == 0 || p > all.len()) {
        return Err(CliError::Usage(format!("--process must lie in 1..={}, got {bad}", all.len())));
    }
    Ok(all.into_iter().filter(|p| a.processes.is_empty() || a.processes.contains(&p.id)).collect())
}

fn table_rows(a: &TableArgs, sim: Option<(usize, u64)>) -> Result<Vec<Vec<String>>, CliError> {
    check_exact_depth(a.depth)?;
    let families: Vec<Family> = match a.family {
        Some(f) => vec![f],
        None => Family::ALL.to_vec(),
    };
    let mut rows = Vec::new();
    for tp in selected_processes(a)? {
        let process = ExactProcess::new(&tp.model()?, 1 << a.depth, ACV_TOL)?;
        let label = tp.id.to_string();
        if let Some((m, seed)) = sim {
            let b = score_b_hosking(&process, m, seed)?;
            rows.push(
                Cell {
                    process: label.clone(),
                    family: String::new(),
                    q: String::new(),
                    method: "hosking".into(),
                    leaf_count: None,
                    lambda: process.lambda,
                    hs_error: None,
                    s: None,
                    b: Some(b),
                    b_pen: None,
                    seed: Some(seed),
                }
                .row(),
            );
        }
        for &fam in &families {
            for &q in fam.table_orders() {
                let filter = crate::filters::make_filter(fam, q)?;
                for m in [BasisMethod::Whitcher, BasisMethod::Ours] {
                    rows.push(score_cell(&process, &label, &tp.frequencies(), &filter, m, a.depth, sim)?.row());
                }
            }
        }
    }
    Ok(rows)
}

pub fn cmd_table1(a: &TableArgs) -> Result<(), CliError> {
    let rows = table_rows(a, None)?;
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&SCORE_HEADER, &rows)?)?;
    sink.finish("table1", a)
}

pub fn cmd_table2(a: &Table2Args) -> Result<(), CliError> {
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let rows = table_rows(&a.table, Some((a.replicates, a.table.common.seed)))?;
    let mut sink = Sink::new(&a.table.common);
    sink.primary(&csv_bytes(&SCORE_HEADER, &rows)?)?;
    sink.finish("table2", a)
}

pub fn cmd_decay(a: &DecayArgs) -> Result<(), CliError> {
    check_exact_depth(a.depth)?;
    let model = a.model.model()?;
    let filter = parse_filter(&a.filter)?;
    let tree = match &a.tree {
        Some(p) => read_tree(p)?,
        None => {
            if a.level > a.depth {
                return Err(CliError::Usage(format!("--level {} exceeds --J {}", a.level, a.depth)));
            }
            WpTree::new(a.depth, (0..1u64 << a.level).map(|p| WpNode { j: a.level, p }).collect())?
        }
    };
    if tree.depth() != a.depth {
        return Err(CliError::Usage(format!("tree depth {} differs from --J {}", tree.depth(), a.depth)));
    }
    let results = decay_check(&model, &filter, &tree, ACV_TOL)?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let p = &r.prediction;
            let case = match p.case {
                DecayCase::BothDetail => "both_detail",
                DecayCase::OneScaling => "one_scaling",
                DecayCase::BothScaling => "both_scaling",
            };
            vec![
                p.first.0.to_string(),
                p.first.1.to_string(),
                p.second.0.to_string(),
                p.second.1.to_string(),
                case.to_string(),
                p.predicted.to_string(),
                r.fitted.to_string(),
                r.pairs.to_string(),
            ]
        })
        .collect();
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&["j1", "p1", "j2", "p2", "case", "predicted", "fitted", "pairs"], &rows)?)?;
    sink.finish("decay", a)
}

fn min_time<T>(repeats: usize, mut f: impl FnMut() -> Result<T, Error>) -> Result<f64, CliError> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.j_min > a.j_max || a.j_max > 20 {
        return Err(CliError::Usage(format!("need j-min <= j-max <= 20, got {}..{}", a.j_min, a.j_max)));
    }
    let filter = parse_filter(&a.filter)?;
    let mut rows = Vec::new();
    for j in a.j_min..=a.j_max {
        let ours = min_time(a.repeats, || best_basis_kfactor(&a.nus, j))?;
        rows.push(vec![j.to_string(), "ours".into(), ours.to_string()]);
        let whit = min_time(a.repeats, || whitcher_basis(&a.nus, &filter, j, WHITCHER_THRESHOLD))?;
        rows.push(vec![j.to_string(), "whitcher".into(), whit.to_string()]);
    }
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&["J", "method", "seconds"], &rows)?)?;
    sink.finish("bench", a)
}

pub fn cmd_filters(a: &FiltersArgs) -> Result<(), CliError> {
    let f = parse_filter(&a.filter)?;
    let (h, hs) = f.branch(crate::filters::Branch::Low);
    let (g, gs) = f.branch(crate::filters::Branch::High);
    let lo = hs.min(gs);
    let hi = (hs + h.len() as i64).max(gs + g.len() as i64);
    let at = |c: &[f64], s: i64, k: i64| {
        let i = k - s;
        if i >= 0 && (i as usize) < c.len() {
            c[i as usize].to_string()
        } else {
            String::new()
        }
    };
    let rows: Vec<Vec<String>> = (lo..hi).map(|k| vec![k.to_string(), at(h, hs, k), at(g, gs, k)]).collect();
    let mut sink = Sink::new(&a.common);
    sink.primary(&csv_bytes(&["index", "h", "g"], &rows)?)?;
    sink.finish("filters", a)
}
