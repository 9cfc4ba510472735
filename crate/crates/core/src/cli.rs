//! Batch front-end: sweep manifests, parallel dispatch over chain lengths,
//! CSV/JSON records.

use crate::channels::{parse_channel, ChannelStack, ChannelSuperop};
use crate::commutant::{basis_for, Ensemble};
use crate::error::{RtnError, RtnResult};
use crate::observables::{
    clifford_ipr_stat, coherent_information_sweep, coherent_purities_sweep, ipr_boundary, ln_haar_ipr,
    ln_orthogonal_ipr_stat, ln_page_purity, purity_boundary, relative_coherence_sweep, xeb_sweep, Problem,
};
use crate::oracles::{mc_average, rw_purity, McObservable};
use crate::rtn::{DepthResult, LayerDiagnostics, TruncationParams};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Default bond for `reduce-bench`: the full-basis dense update at
/// `4 n_B²` does not fit in memory for k = 4.
pub const REDUCE_BENCH_CHI: usize = 64;

pub const COLUMNS: [&str; 13] = [
    "ensemble",
    "k",
    "d",
    "N",
    "t",
    "value",
    "log_value",
    "reference_value",
    "deviation",
    "chi_used",
    "discarded_weight",
    "wall_time_s",
    "seed",
];

#[derive(Debug, Parser)]
#[command(name = "replica-tn", version, about = "Averaged observables of brickwork random circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Kind,
    /// unitary | orthogonal | clifford
    #[arg(long, global = true, default_value = "unitary")]
    pub ensemble: String,
    #[arg(long, global = true, default_value_t = 2)]
    pub k: usize,
    #[arg(long, global = true, default_value_t = 2)]
    pub d: usize,
    /// Comma-separated chain lengths.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Depth range `a..b` (inclusive) or a single depth.
    #[arg(long, global = true)]
    pub t: Option<String>,
    /// Subsystem `a..b`, 1-based inclusive. Defaults to the left half.
    #[arg(long, global = true)]
    pub region: Option<String>,
    /// Channel after every gate: `id` or `dep:<p>`.
    #[arg(long, global = true, visible_alias = "device", default_value = "id")]
    pub noise: String,
    #[arg(long, global = true, value_enum)]
    pub reference: Option<Reference>,
    /// Logical qudits for coherent-info.
    #[arg(long = "K", global = true, default_value_t = 1)]
    pub k_logical: usize,
    /// Divide coherent information by `K ln d`.
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Maximum bond dimension [default: 4 n_B², 64 for reduce-bench]
    #[arg(long, global = true)]
    pub chi: Option<usize>,
    #[arg(long, global = true, default_value_t = TruncationParams::DEFAULT_CUTOFF)]
    pub cutoff: f64,
    /// Truncation frame; `auto` uses the metric frame for k >= 3.
    #[arg(long, global = true, value_enum, default_value = "auto")]
    pub frame: Frame,
    /// Worker threads [default: one per core]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples per point (oracle).
    #[arg(long, global = true, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write per-depth MPS diagnostics as JSON lines.
    #[arg(long, global = true)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Averaged inverse participation ratio `E[Σ_x p(x)^k]`.
    Ipr,
    /// Averaged subsystem purity `E[Tr ρ_A^k]`.
    Purity,
    /// Second relative coherence of the noisy averaged state (k = 2).
    Coherence,
    /// Second coherent information with `K` Bell-paired qudits (k = 2).
    CoherentInfo,
    /// Linear cross-entropy benchmark against a noisy device (k = 2).
    Xeb,
    /// Monte Carlo estimate, with the contraction as reference.
    Oracle {
        #[arg(long, value_enum, default_value = "ipr")]
        observable: OracleObservable,
    },
    /// Full vs irrep-reduced contraction: values and timing.
    ReduceBench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Rw,
    Page,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Auto,
    Raw,
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleObservable {
    Ipr,
    Purity,
    FullPurity,
    Xeb,
    CoherentB,
    CoherentRb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// A validated run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub kind: Kind,
    pub ensemble: Ensemble,
    pub k: usize,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub t_min: usize,
    pub t_max: usize,
    pub region: Option<(usize, usize)>,
    pub noise: String,
    #[serde(skip)]
    pub channel: ChannelSuperop,
    pub reference: Option<Reference>,
    pub k_logical: usize,
    pub normalize: bool,
    pub chi_max: Option<usize>,
    pub cutoff: f64,
    pub metric: bool,
    pub threads: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub diagnostics: Option<PathBuf>,
}

/// Parse `a..b` (inclusive) or a single integer.
pub fn parse_range(s: &str) -> RtnResult<RangeInclusive<usize>> {
    let bad = || RtnError::Invalid(format!("bad range `{s}`, expected a..b"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim_start_matches('=').trim()),
        None => (s.trim(), s.trim()),
    };
    let a = usize::from_str(a).map_err(|_| bad())?;
    let b = usize::from_str(b).map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn invalid(msg: impl Into<String>) -> RtnError {
    RtnError::Invalid(msg.into())
}

impl RunManifest {
    pub fn from_cli(cli: &Cli) -> RtnResult<Self> {
        let ensemble = Ensemble::from_str(&cli.ensemble)?;
        let (k, d) = (cli.k, cli.d);
        if d < 2 {
            return Err(invalid(format!("d must be >= 2, got {d}")));
        }
        if cli.n.is_empty() {
            return Err(invalid("--N is required"));
        }
        if let Some(&n) = cli.n.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(invalid(format!("N must be even and >= 2, got {n}")));
        }
        let t = cli.t.as_deref().ok_or_else(|| invalid("--t is required"))?;
        let t = parse_range(t)?;
        if *t.start() < 1 {
            return Err(invalid("depths start at 1"));
        }
        let region = cli.region.as_deref().map(parse_range).transpose()?.map(|r| (*r.start(), *r.end()));
        if let Some((a, b)) = region {
            let n_min = *cli.n.iter().min().unwrap();
            if a < 1 || b > n_min {
                return Err(invalid(format!("region {a}..{b} outside 1..{n_min}")));
            }
        }
        let channel = parse_channel(&cli.noise, d)?;
        if cli.cutoff < 0.0 || !cli.cutoff.is_finite() {
            return Err(invalid(format!("cutoff must be a finite non-negative number, got {}", cli.cutoff)));
        }
        if cli.chi == Some(0) || cli.threads == Some(0) {
            return Err(invalid("--chi and --threads must be positive"));
        }
        let k2_only = |what: &str| -> RtnResult<()> {
            if k != 2 || ensemble != Ensemble::Unitary {
                return Err(invalid(format!("{what} is defined for the unitary ensemble at k = 2")));
            }
            Ok(())
        };
        match cli.command {
            Kind::Ipr => {
                basis_for(ensemble, k, d)?;
            }
            Kind::Purity => {
                basis_for(ensemble, k, d)?;
                match cli.reference {
                    Some(Reference::Rw) => {
                        k2_only("the random-walk reference")?;
                        if region.is_some_and(|(a, _)| a != 1) {
                            return Err(invalid("the random-walk reference needs a region starting at site 1"));
                        }
                        if !channel.is_identity() {
                            return Err(invalid("the random-walk reference is for noiseless circuits"));
                        }
                    }
                    Some(Reference::Page) if k != 2 || !channel.is_identity() => {
                        return Err(invalid("the Page reference is for noiseless k = 2 purity"));
                    }
                    _ => {}
                }
            }
            Kind::Coherence | Kind::Xeb => k2_only(&format!("{:?}", cli.command).to_lowercase())?,
            Kind::CoherentInfo => {
                k2_only("coherent-info")?;
                if channel.p.is_none() && !channel.is_identity() {
                    return Err(invalid("coherent-info takes `id` or `dep:<p>` noise"));
                }
                if let Some(&n) = cli.n.iter().find(|&&n| cli.k_logical < 1 || 2 * cli.k_logical > n) {
                    return Err(invalid(format!("need 1 <= K <= N/2, got K={} at N={n}", cli.k_logical)));
                }
            }
            Kind::Oracle { observable } => {
                if ensemble == Ensemble::Clifford {
                    return Err(invalid("Monte Carlo sampling supports unitary and orthogonal gates"));
                }
                if cli.samples < 2 {
                    return Err(invalid("--samples must be >= 2"));
                }
                if observable != OracleObservable::Ipr {
                    k2_only("this oracle observable")?;
                }
                if channel.p.is_none() && !channel.is_identity() {
                    return Err(invalid("the oracle takes `id` or `dep:<p>` noise"));
                }
            }
            Kind::ReduceBench => {
                if ensemble != Ensemble::Unitary || k < 2 {
                    return Err(invalid("reduce-bench runs the unitary ensemble with k >= 2"));
                }
                basis_for(ensemble, k, d)?;
            }
        }
        let metric = match cli.frame {
            Frame::Auto => k >= 3 || cli.command == Kind::ReduceBench,
            Frame::Raw => false,
            Frame::Metric => true,
        };
        Ok(Self {
            kind: cli.command,
            ensemble,
            k,
            d,
            n_list: cli.n.clone(),
            t_min: *t.start(),
            t_max: *t.end(),
            region,
            noise: cli.noise.clone(),
            channel,
            reference: cli.reference,
            k_logical: cli.k_logical,
            normalize: cli.normalize,
            chi_max: cli.chi,
            cutoff: cli.cutoff,
            metric,
            threads: cli.threads,
            seed: cli.seed,
            samples: cli.samples,
            output: cli.output.clone(),
            format: cli.format,
            diagnostics: cli.diagnostics.clone(),
        })
    }

    fn trunc(&self, n_basis: usize) -> TruncationParams {
        let base = TruncationParams::default_for(n_basis);
        let fallback = if self.kind == Kind::ReduceBench { REDUCE_BENCH_CHI } else { base.chi_max };
        TruncationParams { chi_max: self.chi_max.unwrap_or(fallback), cutoff: self.cutoff, ..base }
    }

    fn region_for(&self, n: usize) -> (usize, usize) {
        self.region.unwrap_or((1, n / 2))
    }

    fn noise_rate(&self) -> f64 {
        self.channel.p.unwrap_or(0.0)
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub ensemble: String,
    pub k: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: usize,
    pub value: f64,
    pub log_value: f64,
    pub reference_value: Option<f64>,
    pub deviation: Option<f64>,
    pub chi_used: usize,
    pub discarded_weight: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_wall_time_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DiagnosticLine<'a> {
    #[serde(rename = "N")]
    n: usize,
    t: usize,
    #[serde(flatten)]
    layer: &'a LayerDiagnostics,
}

/// Rows of one chain length, or why they could not be computed.
struct Chunk {
    n: usize,
    rows: RtnResult<Vec<Record>>,
    diagnostics: Vec<(usize, LayerDiagnostics)>,
}

pub struct RunOutput {
    pub records: Vec<Record>,
    /// `(N, message)` for every chain length that failed.
    pub failures: Vec<(usize, String)>,
    diagnostics: Vec<(usize, usize, LayerDiagnostics)>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            3
        }
    }
}

struct Row {
    t: usize,
    value: f64,
    log_value: f64,
    reference: Option<f64>,
    chi: usize,
    discarded: f64,
    wall: f64,
    n_samples: Option<usize>,
    std_error: Option<f64>,
    reference_wall: Option<f64>,
    layer: LayerDiagnostics,
}

impl Row {
    fn from_depth(r: &DepthResult, value: f64, log_value: f64, reference: Option<f64>, wall: f64) -> Self {
        Self {
            t: r.t,
            value,
            log_value,
            reference,
            chi: r.diagnostics.max_bond,
            discarded: r.diagnostics.discarded_weight,
            wall,
            n_samples: None,
            std_error: None,
            reference_wall: None,
            layer: r.diagnostics.clone(),
        }
    }
}

/// Run a depth sweep, stamping each depth with the time since the start.
fn timed_sweep(problem: &Problem, m: &RunManifest, trunc: &TruncationParams) -> RtnResult<Vec<(DepthResult, f64)>> {
    let start = Instant::now();
    let mut out = Vec::new();
    problem.network()?.evolve(m.t_min, m.t_max, trunc, false, |r| out.push((r, start.elapsed().as_secs_f64())))?;
    Ok(out)
}

fn averaged_rows(
    m: &RunManifest,
    n: usize,
    boundary: &crate::observables::BoundarySpec,
    basis: &crate::commutant::CommutantBasis,
    reference: impl Fn(usize) -> RtnResult<Option<f64>>,
) -> RtnResult<Vec<Row>> {
    let stack = ChannelStack::uniform(m.channel.clone(), m.k);
    let problem = Problem {
        stack: (!stack.is_identity()).then_some(&stack),
        metric: m.metric,
        ..Problem::clean(basis, m.d, n, boundary)
    };
    timed_sweep(&problem, m, &m.trunc(basis.len()))?
        .into_iter()
        .map(|(r, wall)| Ok(Row::from_depth(&r, r.value.value(), r.value.ln_abs(), reference(r.t)?, wall)))
        .collect()
}

fn derived_rows(rows: RtnResult<Vec<(DepthResult, f64)>>, start: Instant, reference: Option<f64>) -> RtnResult<Vec<Row>> {
    let wall = start.elapsed().as_secs_f64();
    Ok(rows?.iter().map(|(r, v)| Row::from_depth(r, *v, v.abs().ln(), reference, wall)).collect())
}

fn ipr_reference(m: &RunManifest, n: usize) -> Option<f64> {
    if !m.channel.is_identity() {
        return None;
    }
    let ln_dim = n as f64 * (m.d as f64).ln();
    Some(match m.ensemble {
        Ensemble::Unitary => ln_haar_ipr(ln_dim, m.k).exp(),
        Ensemble::Orthogonal => ln_orthogonal_ipr_stat(ln_dim, m.k).exp(),
        Ensemble::Clifford => clifford_ipr_stat(m.d, n, m.k),
    })
}

fn purity_reference_kind(m: &RunManifest, n: usize) -> Option<Reference> {
    let (a, _) = m.region_for(n);
    match m.reference {
        Some(r) => Some(r),
        None if m.k == 2 && m.ensemble == Ensemble::Unitary && a == 1 && m.channel.is_identity() => Some(Reference::Rw),
        None => None,
    }
}

fn oracle_rows(m: &RunManifest, n: usize, observable: OracleObservable) -> RtnResult<Vec<Row>> {
    let p = m.noise_rate();
    let (a, b) = m.region_for(n);
    let obs = match observable {
        OracleObservable::Ipr => McObservable::Ipr { k: m.k },
        OracleObservable::Purity => McObservable::Purity { first: a, last: b, k: 2 },
        OracleObservable::FullPurity => McObservable::FullPurity,
        OracleObservable::Xeb => McObservable::XebKernel,
        OracleObservable::CoherentB => McObservable::CoherentB { k_logical: m.k_logical },
        OracleObservable::CoherentRb => McObservable::CoherentRB { k_logical: m.k_logical },
    };
    // contraction of the same per-sample quantity
    let basis = basis_for(m.ensemble, m.k, m.d)?;
    let trunc = m.trunc(basis.len());
    let reference: Vec<DepthResult> = match observable {
        OracleObservable::CoherentB | OracleObservable::CoherentRb => {
            let (tb, trb) = coherent_purities_sweep(m.d, n, m.k_logical, m.t_min, m.t_max, p, &trunc)?;
            if observable == OracleObservable::CoherentB {
                tb
            } else {
                trb
            }
        }
        _ => {
            let (boundary, stack) = match observable {
                OracleObservable::Ipr => (ipr_boundary(&basis, m.d, n)?, ChannelStack::uniform(m.channel.clone(), m.k)),
                OracleObservable::Purity => (purity_boundary(&basis, m.d, n, a, b)?, ChannelStack::uniform(m.channel.clone(), 2)),
                OracleObservable::FullPurity => {
                    (purity_boundary(&basis, m.d, n, 1, n)?, ChannelStack::uniform(m.channel.clone(), 2))
                }
                _ => (
                    ipr_boundary(&basis, m.d, n)?,
                    ChannelStack::new(vec![crate::channels::identity_choi(m.d), m.channel.clone()])?,
                ),
            };
            let problem = Problem {
                stack: (!stack.is_identity()).then_some(&stack),
                metric: m.metric,
                ..Problem::clean(&basis, m.d, n, &boundary)
            };
            problem.sweep(m.t_min, m.t_max, &trunc)?
        }
    };
    reference
        .iter()
        .map(|r| {
            let start = Instant::now();
            let est = mc_average(m.ensemble, m.d, n, r.t, &obs, p, m.samples, m.seed)?;
            let mut row = Row::from_depth(r, est.mean, est.mean.abs().ln(), Some(r.value.value()), start.elapsed().as_secs_f64());
            row.n_samples = Some(est.n_samples);
            row.std_error = Some(est.std_error);
            Ok(row)
        })
        .collect()
}

fn reduce_rows(m: &RunManifest, n: usize) -> RtnResult<Vec<Row>> {
    let basis = basis_for(m.ensemble, m.k, m.d)?;
    let boundary = ipr_boundary(&basis, m.d, n)?;
    let trunc = TruncationParams { block_svd: false, ..m.trunc(basis.len()) };
    let base = Problem { metric: m.metric, ..Problem::clean(&basis, m.d, n, &boundary) };
    let full = timed_sweep(&base, m, &trunc)?;
    let reduced = timed_sweep(&Problem { reduce: true, ..base }, m, &trunc)?;
    Ok(full
        .iter()
        .zip(&reduced)
        .map(|((f, fw), (r, rw))| {
            let mut row = Row::from_depth(r, r.value.value(), r.value.ln_abs(), Some(f.value.value()), *rw);
            row.reference_wall = Some(*fw);
            row
        })
        .collect())
}

fn rows_for(m: &RunManifest, n: usize) -> RtnResult<Vec<Row>> {
    let start = Instant::now();
    let p = m.noise_rate();
    match m.kind {
        Kind::Ipr => {
            let basis = basis_for(m.ensemble, m.k, m.d)?;
            let boundary = ipr_boundary(&basis, m.d, n)?;
            let reference = ipr_reference(m, n);
            averaged_rows(m, n, &boundary, &basis, |_| Ok(reference))
        }
        Kind::Purity => {
            let basis = basis_for(m.ensemble, m.k, m.d)?;
            let (a, b) = m.region_for(n);
            let boundary = purity_boundary(&basis, m.d, n, a, b)?;
            let ln_d = (m.d as f64).ln();
            averaged_rows(m, n, &boundary, &basis, |t| match purity_reference_kind(m, n) {
                Some(Reference::Rw) => Ok(Some(rw_purity(n, b, m.d, t)?)),
                Some(Reference::Page) => {
                    let size = (b + 1 - a) as f64;
                    Ok(Some(ln_page_purity(size * ln_d, (n as f64 - size) * ln_d).exp()))
                }
                None => Ok(None),
            })
        }
        Kind::Coherence => {
            let stack = ChannelStack::uniform(m.channel.clone(), 2);
            let reference = (p == 1.0).then_some(0.0);
            derived_rows(relative_coherence_sweep(m.d, n, m.t_min, m.t_max, &stack, &m.trunc(2)), start, reference)
        }
        Kind::CoherentInfo => {
            let full = if m.normalize { 1.0 } else { m.k_logical as f64 * (m.d as f64).ln() };
            let reference = (p == 0.0).then_some(full);
            let rows = coherent_information_sweep(m.d, n, m.k_logical, m.t_min, m.t_max, p, &m.trunc(2), m.normalize);
            derived_rows(rows, start, reference)
        }
        Kind::Xeb => {
            let dim = (m.d as f64).powi(n as i32);
            let reference = m.channel.is_identity().then_some((dim - 1.0) / (dim + 1.0));
            derived_rows(xeb_sweep(m.d, n, m.t_min, m.t_max, &m.channel, &m.trunc(2)), start, reference)
        }
        Kind::Oracle { observable } => oracle_rows(m, n, observable),
        Kind::ReduceBench => reduce_rows(m, n),
    }
}

fn chunk_for(m: &RunManifest, n: usize) -> Chunk {
    let mut diagnostics = Vec::new();
    let rows = rows_for(m, n).map(|rows| {
        rows.into_iter()
            .map(|r| {
                if m.diagnostics.is_some() {
                    diagnostics.push((r.t, r.layer.clone()));
                }
                Record {
                    ensemble: m.ensemble.to_string(),
                    k: m.k,
                    d: m.d,
                    n,
                    t: r.t,
                    value: r.value,
                    log_value: r.log_value,
                    reference_value: r.reference,
                    deviation: r.reference.map(|x| r.value - x),
                    chi_used: r.chi,
                    discarded_weight: r.discarded,
                    wall_time_s: r.wall,
                    seed: m.seed,
                    n_samples: r.n_samples,
                    std_error: r.std_error,
                    reference_wall_time_s: r.reference_wall,
                }
            })
            .collect()
    });
    Chunk { n, rows, diagnostics }
}

/// Failed chain lengths get one NaN row per depth.
fn failed_rows(m: &RunManifest, n: usize) -> Vec<Record> {
    (m.t_min..=m.t_max)
        .map(|t| Record {
            ensemble: m.ensemble.to_string(),
            k: m.k,
            d: m.d,
            n,
            t,
            value: f64::NAN,
            log_value: f64::NAN,
            reference_value: None,
            deviation: None,
            chi_used: 0,
            discarded_weight: f64::NAN,
            wall_time_s: 0.0,
            seed: m.seed,
            n_samples: None,
            std_error: None,
            reference_wall_time_s: None,
        })
        .collect()
}

/// Compute every row; one worker per chain length.
pub fn run(m: &RunManifest) -> RunOutput {
    use rayon::prelude::*;
    let work = || m.n_list.par_iter().map(|&n| chunk_for(m, n)).collect::<Vec<_>>();
    let chunks = match m.threads.map(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build()) {
        Some(Ok(pool)) => pool.install(work),
        _ => work(),
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = Vec::new();
    for c in chunks {
        match c.rows {
            Ok(rows) => records.extend(rows),
            Err(e) => {
                failures.push((c.n, e.to_string()));
                records.extend(failed_rows(m, c.n));
            }
        }
        diagnostics.extend(c.diagnostics.into_iter().map(|(t, d)| (c.n, t, d)));
    }
    records.sort_by(|a, b| (a.n, a.t).cmp(&(b.n, b.t)));
    diagnostics.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    RunOutput { records, failures, diagnostics }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn extra_columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Oracle { .. } => &["n_samples", "std_error"],
        Kind::ReduceBench => &["reference_wall_time_s"],
        _ => &[],
    }
}

pub fn write_csv<W: Write>(kind: Kind, records: &[Record], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    header.extend_from_slice(extra_columns(kind));
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.ensemble.clone(),
            r.k.to_string(),
            r.d.to_string(),
            r.n.to_string(),
            r.t.to_string(),
            num(r.value),
            num(r.log_value),
            opt(r.reference_value),
            opt(r.deviation),
            r.chi_used.to_string(),
            num(r.discarded_weight),
            num(r.wall_time_s),
            r.seed.to_string(),
        ];
        match kind {
            Kind::Oracle { .. } => {
                row.push(r.n_samples.map(|x| x.to_string()).unwrap_or_default());
                row.push(opt(r.std_error));
            }
            Kind::ReduceBench => row.push(opt(r.reference_wall_time_s)),
            _ => {}
        }
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn write_json<W: Write>(records: &[Record], w: W) -> io::Result<()> {
    // non-finite numbers become null
    serde_json::to_writer_pretty(w, records).map_err(io::Error::other)
}

/// Write records and diagnostics to the manifest's destinations.
pub fn emit(m: &RunManifest, out: &RunOutput) -> io::Result<()> {
    let sink: Box<dyn Write> = match &m.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    match m.format {
        Format::Csv => write_csv(m.kind, &out.records, sink)?,
        Format::Json => {
            let mut sink = sink;
            write_json(&out.records, &mut sink)?;
            writeln!(sink)?;
        }
    }
    if let Some(path) = &m.diagnostics {
        let mut w = BufWriter::new(File::create(path)?);
        for (n, t, layer) in &out.diagnostics {
            serde_json::to_writer(&mut w, &DiagnosticLine { n: *n, t: *t, layer })?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Parse, validate, run and write. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    let manifest = match RunManifest::from_cli(&cli) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out = run(&manifest);
    for (n, msg) in &out.failures {
        eprintln!("N={n}: {msg}");
    }
    if let Err(e) = emit(&manifest, &out) {
        eprintln!("error: writing output: {e}");
        return 3;
    }
    out.exit_code()
}
