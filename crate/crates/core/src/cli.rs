//! The `rankdiv` command line. Every subcommand validates its inputs, computes
//! all results in memory, then writes its outputs atomically together with a
//! `manifest.json` from which the run can be replayed byte for byte.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diversity::{
    analyze_window, diversity_over_epochs, EpochOptions, FitReport, DEFAULT_DELTA,
};
use crate::dynamics::{
    averaged_correlation, fit_flight_distribution, flight_histogram, sigma_hat, Family,
    FlightHistogram,
};
use crate::error::Error;
use crate::ingest::{ingest_files, IngestOptions, InputFormat, MalformedLines, Slice, TokenPolicy};
use crate::io::write_atomic;
use crate::rank::{load_rank_series, overlap, top_k, top_k_excluding, RankTable, TranslationMap};
use crate::walker::{simulate, WalkConfig, DEFAULT_BURN_IN};
use crate::zipf::{fit, fit_all, ZipfFamily, ZipfModelFit};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Rank diversity, rank dynamics and rank-frequency models for ranked time series.
#[derive(Debug, Parser)]
#[command(name = "rankdiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Aggregate 1-gram TSV or `id,slice,score` CSV files into per-slice frequency tables
    Ingest(IngestArgs),
    /// Turn frequency tables into rank tables, optionally exporting top-n lists
    Rank(RankArgs),
    /// Rank diversity of a window of slices and its sigmoid fit
    Diversity(DiversityArgs),
    /// Flight histograms per rank band, their Gaussian and Lorentzian fits, and sigma_hat
    Flights(FlightsArgs),
    /// Time correlation of normalized flights averaged over randomly sampled ranks
    Correlation(CorrelationArgs),
    /// Simulate the scale-invariant Gaussian rank walk
    Simulate(SimulateArgs),
    /// Fit the rank-frequency models m1..m5 to one slice
    Fitzipf(FitZipfArgs),
    /// Overlap of the top-n lists of two series, slice by slice
    Overlap(OverlapArgs),
    /// Re-run the command recorded in a manifest and check its outputs are identical
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Seed for every random choice; a random seed is drawn and logged when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, short)]
    out: PathBuf,
    /// Format of tabular exports
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SliceRange {
    /// First slice to use
    #[arg(long)]
    from: Option<Slice>,
    /// Last slice to use
    #[arg(long)]
    to: Option<Slice>,
}

impl SliceRange {
    fn range(&self) -> Result<RangeInclusive<Slice>, Failure> {
        let r = self.from.unwrap_or(Slice::MIN)..=self.to.unwrap_or(Slice::MAX);
        if r.is_empty() {
            return Err(Failure::Usage(format!(
                "--from {} is after --to {}",
                r.start(),
                r.end()
            )));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InputKind {
    /// `token TAB year TAB match_count TAB volume_count`
    Ngram,
    /// `id,slice,score` with a header line
    Score,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Input files; `.gz` files are decompressed on the fly
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Drop `_TAG` part-of-speech suffixes
    #[arg(long)]
    strip_pos_tags: bool,
    #[arg(long)]
    lowercase: bool,
    /// Reject tokens with non-alphabetic characters
    #[arg(long)]
    alphabetic_only: bool,
    /// Drop aggregated entries with a smaller count
    #[arg(long, default_value_t = 0)]
    min_count: u64,
    /// Abort on the first malformed line instead of skipping it
    #[arg(long)]
    strict: bool,
    /// Input format; guessed from each file name when absent
    #[arg(long, value_enum)]
    input_format: Option<InputKind>,
    #[command(flatten)]
    range: SliceRange,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    /// Directory of `<slice>.tsv` tables
    tables: PathBuf,
    #[command(flatten)]
    range: SliceRange,
    /// Also export the top-n tokens of every slice
    #[arg(long)]
    top: Option<usize>,
    /// File of tokens (one per line) left out of the top-n lists
    #[arg(long, requires = "top")]
    stoplist: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct DiversityArgs {
    /// Directory of `<slice>.tsv` tables
    tables: PathBuf,
    #[command(flatten)]
    range: SliceRange,
    /// Largest rank analyzed; defaults to the size of the smallest table
    #[arg(long)]
    k_max: Option<usize>,
    /// Width of the log10 k bins
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Also fit every run of this many consecutive slices
    #[arg(long)]
    epoch_length: Option<usize>,
    /// Slices between epoch starts; defaults to the epoch length
    #[arg(long, requires = "epoch_length")]
    epoch_stride: Option<usize>,
    #[command(flatten)]
    common: Common,
}

/// Inclusive rank band written `LO-HI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct Band(u32, u32);

impl FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s
            .split_once('-')
            .ok_or_else(|| format!("expected LO-HI, got {s:?}"))?;
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad band start {lo:?}: {e}"))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad band end {hi:?}: {e}"))?;
        if lo == 0 || lo > hi {
            return Err(format!("band {s:?} must satisfy 1 <= LO <= HI"));
        }
        Ok(Band(lo, hi))
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Args, Serialize)]
struct FlightsArgs {
    /// Directory of `<slice>.tsv` tables
    tables: PathBuf,
    #[command(flatten)]
    range: SliceRange,
    /// Band of starting ranks, `LO-HI`; repeat for several bands
    #[arg(long = "band", default_value = "1-10")]
    bands: Vec<Band>,
    /// Histogram bin width
    #[arg(long, default_value_t = 0.01)]
    binwidth: f64,
    /// Largest initial rank of tokens entering sigma_hat
    #[arg(long)]
    k_max: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct CorrelationArgs {
    /// Directory of `<slice>.tsv` tables
    tables: PathBuf,
    #[command(flatten)]
    range: SliceRange,
    /// Number of ranks sampled from the first slice
    #[arg(long, default_value_t = 50)]
    sample_size: usize,
    /// Largest lag
    #[arg(long, default_value_t = 10)]
    tau_max: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Number of items
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Number of recorded slices
    #[arg(long, default_value_t = 209)]
    t: usize,
    /// Relative width of the Gaussian rank steps
    #[arg(long, default_value_t = 0.0575)]
    sigma_hat: f64,
    /// Steps discarded before recording
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct FitZipfArgs {
    /// Directory of `<slice>.tsv` tables
    tables: PathBuf,
    /// Slice to fit; defaults to the last one
    #[arg(long)]
    slice: Option<Slice>,
    /// Model family; repeat for several, all five when absent
    #[arg(long = "family")]
    families: Vec<ZipfFamily>,
    /// First rank entering the fit (10 de-weights the head)
    #[arg(long, default_value_t = 1)]
    min_rank: usize,
    /// Last rank entering the fit; defaults to the table size
    #[arg(long)]
    max_rank: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct OverlapArgs {
    /// Directory of reference `<slice>.tsv` tables
    reference: PathBuf,
    /// Directory of `<slice>.tsv` tables compared with the reference
    other: PathBuf,
    /// Translation map `source TAB target` into the reference language; identity when absent
    #[arg(long)]
    map: Option<PathBuf>,
    /// List length
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Tokens left out of the reference lists
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Tokens left out of the other lists
    #[arg(long)]
    other_stoplist: Option<PathBuf>,
    #[command(flatten)]
    range: SliceRange,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    /// Manifest written by an earlier run
    manifest: PathBuf,
    /// Write the replayed outputs here instead of the recorded directory
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Rank(_) => "rank",
            Command::Diversity(_) => "diversity",
            Command::Flights(_) => "flights",
            Command::Correlation(_) => "correlation",
            Command::Simulate(_) => "simulate",
            Command::Fitzipf(_) => "fitzipf",
            Command::Overlap(_) => "overlap",
            Command::Replay(_) => "replay",
        }
    }

    fn common(&self) -> Option<&Common> {
        match self {
            Command::Ingest(a) => Some(&a.common),
            Command::Rank(a) => Some(&a.common),
            Command::Diversity(a) => Some(&a.common),
            Command::Flights(a) => Some(&a.common),
            Command::Correlation(a) => Some(&a.common),
            Command::Simulate(a) => Some(&a.common),
            Command::Fitzipf(a) => Some(&a.common),
            Command::Overlap(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }

    fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Command::Ingest(a) => a.paths.clone(),
            Command::Rank(RankArgs {
                tables, stoplist, ..
            }) => std::iter::once(tables.clone())
                .chain(stoplist.clone())
                .collect(),
            Command::Diversity(a) => vec![a.tables.clone()],
            Command::Flights(a) => vec![a.tables.clone()],
            Command::Correlation(a) => vec![a.tables.clone()],
            Command::Fitzipf(a) => vec![a.tables.clone()],
            Command::Overlap(a) => [
                Some(&a.reference),
                Some(&a.other),
                a.map.as_ref(),
                a.stoplist.as_ref(),
                a.other_stoplist.as_ref(),
            ]
            .into_iter()
            .flatten()
            .cloned()
            .collect(),
            Command::Simulate(_) | Command::Replay(_) => Vec::new(),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Run(Error::NotConverged { .. }) => EXIT_NUMERICAL,
            Failure::Run(_) | Failure::Mismatch(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Run(e) => write!(f, "{e}"),
            Failure::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Run(Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Command-line arguments after the program name, with the seed made explicit.
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    /// Output files, relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            source_name: path.display().to_string(),
            line: e.line() as u64,
            reason: e.to_string(),
        })
    }
}

fn sha256_file(path: &Path) -> Result<String, Failure> {
    let mut file = File::open(path).map_err(|e| io_failure(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = io::Read::read(&mut file, &mut buf).map_err(|e| io_failure(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digests of every input file; directories contribute their regular files
/// (manifests and hidden files excepted) in name order.
fn digest_inputs(paths: &[PathBuf]) -> Result<Vec<FileDigest>, Failure> {
    let mut out = Vec::new();
    for path in paths {
        let meta = fs::metadata(path).map_err(|e| io_failure(path, e))?;
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| io_failure(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .filter(|p| {
                    let name = p
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    name.ends_with(".tsv") && !name.starts_with('.')
                })
                .collect();
            files.sort();
            for f in files {
                out.push(FileDigest {
                    path: f.display().to_string(),
                    sha256: sha256_file(&f)?,
                });
            }
        } else {
            out.push(FileDigest {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
        }
    }
    Ok(out)
}

/// Refuses output directories that hold an input, so no run overwrites its data.
fn check_out_dir(out: &Path, inputs: &[PathBuf]) -> Result<(), Failure> {
    let Ok(out) = out.canonicalize() else {
        return Ok(());
    };
    for input in inputs {
        let Ok(p) = input.canonicalize() else {
            continue;
        };
        let dir = if p.is_dir() {
            Some(p.as_path())
        } else {
            p.parent()
        };
        if dir == Some(out.as_path()) {
            return Err(Failure::Usage(format!(
                "output directory {} holds the input {}",
                out.display(),
                input.display()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn write(&self, format: Format, w: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(&self.columns).map_err(io::Error::other)?;
                for row in &self.rows {
                    c.write_record(row.iter().map(Cell::to_string))
                        .map_err(io::Error::other)?;
                }
                c.flush()
            }
            Format::Json => {
                writeln!(w, "[")?;
                for (i, row) in self.rows.iter().enumerate() {
                    write!(w, "  {{")?;
                    for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                        let sep = if j == 0 { "" } else { ", " };
                        write!(
                            w,
                            "{sep}\"{col}\": {}",
                            serde_json::to_string(cell).map_err(io::Error::other)?
                        )?;
                    }
                    writeln!(w, "}}{}", if i + 1 == self.rows.len() { "" } else { "," })?;
                }
                writeln!(w, "]")
            }
        }
    }
}

type Fill = Box<dyn Fn(&mut dyn Write) -> io::Result<()>>;

struct Artifact {
    name: String,
    fill: Fill,
}

fn table_artifact(stem: &str, format: Format, table: Table) -> Artifact {
    Artifact {
        name: format!("{stem}.{}", format.ext()),
        fill: Box::new(move |w| table.write(format, w)),
    }
}

fn json_artifact(name: &str, value: &impl Serialize) -> Result<Artifact, Failure> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Failure::Run(Error::Domain(e.to_string())))?;
    bytes.push(b'\n');
    Ok(Artifact {
        name: name.to_string(),
        fill: Box::new(move |w| w.write_all(&bytes)),
    })
}

fn rank_table_artifacts(tables: Vec<RankTable>) -> Vec<Artifact> {
    tables
        .into_iter()
        .map(|t| Artifact {
            name: format!("{}.tsv", t.slice()),
            fill: Box::new(move |w| t.write_tsv(w)),
        })
        .collect()
}

struct Outcome {
    artifacts: Vec<Artifact>,
    /// Printed on stdout once every output is written.
    summary: String,
}

fn load_tables(dir: &Path, range: &SliceRange) -> Result<Vec<RankTable>, Failure> {
    Ok(load_rank_series(dir, range.range()?)?)
}

fn read_stoplist(path: &Path) -> Result<HashSet<String>, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    let mut out = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_failure(path, e))?;
        let t = line.trim();
        if !t.is_empty() {
            out.insert(t.to_string());
        }
    }
    Ok(out)
}

fn top_list<'a>(
    table: &'a RankTable,
    n: usize,
    stop: Option<&HashSet<String>>,
) -> Result<Vec<&'a str>, Failure> {
    Ok(match stop {
        Some(s) => top_k_excluding(table, n, s)?,
        None => top_k(table, n)?,
    })
}

fn cmd_ingest(a: &IngestArgs) -> Result<Outcome, Failure> {
    let opts = IngestOptions {
        policy: TokenPolicy {
            strip_pos_tags: a.strip_pos_tags,
            lowercase: a.lowercase,
            alphabetic_only: a.alphabetic_only,
            min_count: a.min_count,
        },
        range: a.range.range()?,
        malformed: if a.strict {
            MalformedLines::Abort
        } else {
            MalformedLines::Skip
        },
        format: a.input_format.map(|k| match k {
            InputKind::Ngram => InputFormat::NgramTsv,
            InputKind::Score => InputFormat::ScoreCsv,
        }),
    };
    let (tables, stats) = ingest_files(&a.paths, &opts)?;
    let mut summary = String::new();
    let mut table = Table::new(&["slice", "tokens", "total"]);
    for t in &tables {
        summary.push_str(&format!("{}\t{} tokens\n", t.slice, t.len()));
        table.push(vec![
            Cell::Int(t.slice),
            Cell::Int(t.len() as i64),
            Cell::Num(t.total()),
        ]);
    }
    summary.push_str(&format!(
        "{} records read, {} malformed lines skipped, {} tokens rejected, {} out of range, {} below min count",
        stats.records_read, stats.malformed_lines, stats.rejected_tokens, stats.out_of_range, stats.below_min_count
    ));
    let mut artifacts: Vec<Artifact> = tables
        .into_iter()
        .map(|t| Artifact {
            name: format!("{}.tsv", t.slice),
            fill: Box::new(move |w| t.write_tsv(w)),
        })
        .collect();
    artifacts.push(table_artifact("ingest_summary", a.common.format, table));
    artifacts.push(json_artifact("ingest_stats.json", &stats)?);
    Ok(Outcome { artifacts, summary })
}

fn cmd_rank(a: &RankArgs) -> Result<Outcome, Failure> {
    let tables = load_tables(&a.tables, &a.range)?;
    let stop = a.stoplist.as_deref().map(read_stoplist).transpose()?;
    let mut artifacts = Vec::new();
    if let Some(n) = a.top {
        let mut table = Table::new(&["slice", "rank", "token"]);
        for t in &tables {
            for (i, token) in top_list(t, n, stop.as_ref())?.into_iter().enumerate() {
                table.push(vec![
                    Cell::Int(t.slice()),
                    Cell::Int(i as i64 + 1),
                    Cell::Text(token.to_string()),
                ]);
            }
        }
        artifacts.push(table_artifact("top", a.common.format, table));
    }
    let summary = format!("{} rank tables", tables.len());
    artifacts.splice(0..0, rank_table_artifacts(tables));
    Ok(Outcome { artifacts, summary })
}

fn cmd_diversity(a: &DiversityArgs) -> Result<Outcome, Failure> {
    if !(a.delta > 0.0 && a.delta.is_finite()) {
        return Err(Failure::Usage(format!(
            "--delta must be positive, got {}",
            a.delta
        )));
    }
    if matches!((a.range.from, a.range.to), (Some(f), Some(t)) if f == t) {
        return Err(Failure::Usage(
            "the window must span at least 2 slices".into(),
        ));
    }
    let tables = load_tables(&a.tables, &a.range)?;
    if tables.len() < 2 {
        return Err(Failure::Usage(format!(
            "the window holds {} slice; at least 2 are needed",
            tables.len()
        )));
    }
    let k_max = match a.k_max {
        Some(0) => return Err(Failure::Usage("--k-max must be positive".into())),
        Some(k) => k,
        None => tables.iter().map(RankTable::len).min().unwrap_or(0),
    };
    let (curve, sigmoid) = analyze_window(&tables, k_max, a.delta)?;
    let format = a.common.format;

    let mut raw = Table::new(&["k", "d_raw"]);
    for (k, d) in curve.raw() {
        raw.push(vec![Cell::Int(k as i64), Cell::Num(d)]);
    }
    let mut windowed = Table::new(&["bin_center", "d_windowed", "phi_fit"]);
    for p in &curve.windowed {
        windowed.push(vec![
            Cell::Num(p.center),
            Cell::Num(p.mean),
            Cell::Num(sigmoid.phi(p.center)),
        ]);
    }
    let report = FitReport::new(&curve, &sigmoid);
    let mut artifacts = vec![
        table_artifact("diversity_raw", format, raw),
        table_artifact("diversity_windowed", format, windowed),
        json_artifact("diversity_fit.json", &report)?,
    ];
    if let Some(length) = a.epoch_length {
        let opts = EpochOptions {
            length,
            stride: a.epoch_stride.unwrap_or(length),
            k_max,
            delta: a.delta,
        };
        let mut epochs = Table::new(&[
            "first", "last", "mu", "sigma", "mse", "k_minus", "k_plus", "error",
        ]);
        for e in diversity_over_epochs(&tables, opts)? {
            let mut row = vec![Cell::Int(e.first), Cell::Int(e.last)];
            match e.fit {
                Ok(f) => {
                    row.extend([f.mu, f.sigma, f.mse, f.k_minus, f.k_plus].map(Cell::Num));
                    row.push(Cell::Text(String::new()));
                }
                Err(err) => {
                    row.extend((0..5).map(|_| Cell::Num(f64::NAN)));
                    row.push(Cell::Text(err.to_string()));
                }
            }
            epochs.push(row);
        }
        artifacts.push(table_artifact("epochs", format, epochs));
    }
    let summary = format!(
        "mu = {}, sigma = {}, mse = {}, k- = {:.1}, k+ = {:.1} over {} slices",
        sigmoid.mu, sigmoid.sigma, sigmoid.mse, sigmoid.k_minus, sigmoid.k_plus, curve.t
    );
    Ok(Outcome { artifacts, summary })
}

fn histogram_table(h: &FlightHistogram) -> Table {
    let mut t = Table::new(&["bin_center", "density"]);
    for &(c, d) in &h.bins {
        t.push(vec![Cell::Num(c), Cell::Num(d)]);
    }
    t
}

fn histogram_report(h: &FlightHistogram) -> Result<serde_json::Value, Failure> {
    let mut fits = Vec::new();
    for family in [Family::Gaussian, Family::Lorentzian] {
        fits.push(match fit_flight_distribution(h, family) {
            Ok(f) => serde_json::to_value(f).expect("plain struct"),
            Err(Error::Domain(reason)) => serde_json::json!({ "family": family, "error": reason }),
            Err(e) => return Err(e.into()),
        });
    }
    Ok(serde_json::json!({
        "band": [h.band.0, h.band.1],
        "binwidth": h.binwidth,
        "sample_count": h.sample_count,
        "fits": fits,
    }))
}

fn cmd_flights(a: &FlightsArgs) -> Result<Outcome, Failure> {
    if !(a.binwidth > 0.0 && a.binwidth.is_finite()) {
        return Err(Failure::Usage(format!(
            "--binwidth must be positive, got {}",
            a.binwidth
        )));
    }
    let tables = load_tables(&a.tables, &a.range)?;
    let sigma = sigma_hat(&tables, a.k_max.unwrap_or(usize::MAX))?;
    let format = a.common.format;
    let mut artifacts = Vec::new();
    let mut hists = Vec::new();
    let mut reports = Vec::new();
    for band in &a.bands {
        let h = flight_histogram(&tables, (band.0, band.1), a.binwidth)?;
        reports.push(histogram_report(&h)?);
        artifacts.push(table_artifact(
            &format!("flights_{band}"),
            format,
            histogram_table(&h),
        ));
        hists.push(h);
    }
    let average = if hists.len() > 1 {
        let avg = FlightHistogram::average(&hists)?;
        artifacts.push(table_artifact(
            "flights_average",
            format,
            histogram_table(&avg),
        ));
        histogram_report(&avg)?
    } else {
        serde_json::Value::Null
    };
    let report = serde_json::json!({ "sigma_hat": sigma, "bands": reports, "average": average });
    artifacts.push(json_artifact("flights_fit.json", &report)?);
    let summary = format!("sigma_hat = {} from {} tokens", sigma.value, sigma.tokens);
    Ok(Outcome { artifacts, summary })
}

fn cmd_correlation(a: &CorrelationArgs, seed: u64) -> Result<Outcome, Failure> {
    let tables = load_tables(&a.tables, &a.range)?;
    let result = averaged_correlation(&tables, a.sample_size, a.tau_max, seed)?;
    let mut c = Table::new(&["tau", "C"]);
    for (tau, v) in result.c.iter().enumerate() {
        c.push(vec![Cell::Int(tau as i64), Cell::Num(*v)]);
    }
    let mut sample = Table::new(&["token", "rank"]);
    for (token, rank) in &result.sample {
        sample.push(vec![Cell::Text(token.clone()), Cell::Int(*rank as i64)]);
    }
    let summary = format!(
        "C_1 = {} averaged over {} ranks",
        result.c.get(1).copied().unwrap_or(f64::NAN),
        result.sample.len()
    );
    Ok(Outcome {
        artifacts: vec![
            table_artifact("correlation", a.common.format, c),
            table_artifact("correlation_sample", a.common.format, sample),
        ],
        summary,
    })
}

fn cmd_simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome, Failure> {
    let config = WalkConfig {
        n_items: a.n,
        n_steps: a.t,
        sigma_hat: a.sigma_hat,
        seed,
        burn_in: a.burn_in,
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let tables = simulate(&config)?;
    Ok(Outcome {
        artifacts: rank_table_artifacts(tables),
        summary: format!(
            "{} items over {} slices, sigma_hat = {}, seed = {seed}",
            a.n, a.t, a.sigma_hat
        ),
    })
}

fn cmd_fitzipf(a: &FitZipfArgs) -> Result<Outcome, Failure> {
    let tables = load_rank_series(&a.tables, Slice::MIN..=Slice::MAX)?;
    let table = match a.slice {
        Some(s) => tables.iter().find(|t| t.slice() == s).ok_or_else(|| {
            Failure::Run(Error::Domain(format!(
                "no table for slice {s} in {}",
                a.tables.display()
            )))
        })?,
        None => tables
            .last()
            .expect("load_rank_series returns at least one table"),
    };
    let hi = a.max_rank.unwrap_or(table.len());
    let k_range = a.min_rank..=hi;
    let mut families = a.families.clone();
    families.sort();
    families.dedup();
    let fits: Vec<ZipfModelFit> = if families.is_empty() || families == ZipfFamily::ALL {
        fit_all(table, k_range)?
    } else {
        families
            .iter()
            .map(|&f| fit(f, table, k_range.clone()))
            .collect::<crate::Result<_>>()?
    };
    let reports: Vec<_> = fits.iter().map(ZipfModelFit::report).collect();
    let mut artifacts = vec![json_artifact("zipf_fits.json", &reports)?];
    let mut summary = String::new();
    for f in &fits {
        let family = f.spec().family;
        let mut t = Table::new(&["k", "log10_ratio"]);
        for &(k, r) in &f.log_ratio_curve.points {
            t.push(vec![Cell::Int(k as i64), Cell::Num(r)]);
        }
        artifacts.push(table_artifact(
            &format!("zipf_ratio_{family}"),
            a.common.format,
            t,
        ));
        summary.push_str(&format!(
            "{family}: chi2 = {}, dof = {}, p = {}\n",
            f.chi2.value, f.dof, f.p_value
        ));
    }
    summary.pop();
    Ok(Outcome { artifacts, summary })
}

fn cmd_overlap(a: &OverlapArgs) -> Result<Outcome, Failure> {
    if a.n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    let reference = load_tables(&a.reference, &a.range)?;
    let other = load_tables(&a.other, &a.range)?;
    let map = match &a.map {
        Some(p) => TranslationMap::load(p)?,
        None => TranslationMap::identity(),
    };
    let stop = a.stoplist.as_deref().map(read_stoplist).transpose()?;
    let other_stop = a.other_stoplist.as_deref().map(read_stoplist).transpose()?;
    let mut table = Table::new(&["slice", "overlap"]);
    for r in &reference {
        let Some(o) = other.iter().find(|o| o.slice() == r.slice()) else {
            continue;
        };
        let value = overlap(
            &top_list(r, a.n, stop.as_ref())?,
            &top_list(o, a.n, other_stop.as_ref())?,
            &map,
        )?;
        table.push(vec![Cell::Int(r.slice()), Cell::Num(value)]);
    }
    if table.rows.is_empty() {
        return Err(Failure::Run(Error::Domain(
            "the two series share no slice".into(),
        )));
    }
    let summary = format!(
        "overlap of top-{} lists over {} slices",
        a.n,
        table.rows.len()
    );
    Ok(Outcome {
        artifacts: vec![table_artifact("overlap", a.common.format, table)],
        summary,
    })
}

fn write_outputs(out: &Path, artifacts: Vec<Artifact>) -> Result<Vec<FileDigest>, Failure> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let mut digests = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = out.join(&a.name);
        write_atomic(&path, |w| (a.fill)(w))?;
        digests.push(FileDigest {
            sha256: sha256_file(&path)?,
            path: a.name,
        });
    }
    Ok(digests)
}

/// Runs one analysis command and writes its outputs and manifest.
fn execute(command: Command, mut args: Vec<String>) -> Result<RunManifest, Failure> {
    let common = command
        .common()
        .expect("replay is handled by the caller")
        .clone();
    let seed = common.seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        if matches!(command, Command::Simulate(_) | Command::Correlation(_)) {
            warn!("no --seed given; using random seed {s}");
        } else {
            info!("no --seed given; recording random seed {s}");
        }
        s
    });
    if common.seed.is_none() {
        args.extend(["--seed".to_string(), seed.to_string()]);
    }
    let inputs = command.inputs();
    check_out_dir(&common.out, &inputs)?;
    let input_digests = digest_inputs(&inputs)?;

    let outcome = match &command {
        Command::Ingest(a) => cmd_ingest(a)?,
        Command::Rank(a) => cmd_rank(a)?,
        Command::Diversity(a) => cmd_diversity(a)?,
        Command::Flights(a) => cmd_flights(a)?,
        Command::Correlation(a) => cmd_correlation(a, seed)?,
        Command::Simulate(a) => cmd_simulate(a, seed)?,
        Command::Fitzipf(a) => cmd_fitzipf(a)?,
        Command::Overlap(a) => cmd_overlap(a)?,
        Command::Replay(_) => unreachable!(),
    };
    let outputs = write_outputs(&common.out, outcome.artifacts)?;
    let mut parameters = serde_json::to_value(&command).expect("arguments serialize");
    if let Some(p) = parameters
        .get_mut(command.name())
        .and_then(|p| p.get_mut("common"))
    {
        p["seed"] = serde_json::json!(seed);
    }
    let manifest = RunManifest {
        tool: "rankdiv".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        args,
        parameters,
        seed,
        inputs: input_digests,
        outputs,
    };
    let path = common.out.join(MANIFEST_NAME);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    crate::io::write_bytes_atomic(&path, &bytes)?;
    println!("{}", outcome.summary);
    Ok(manifest)
}

/// Replaces the value of `--out`/`-o` in a recorded argument list.
fn override_out(args: &mut [String], out: &Path) {
    let new = out.display().to_string();
    let mut i = 0;
    while i < args.len() {
        if (args[i] == "--out" || args[i] == "-o") && i + 1 < args.len() {
            args[i + 1] = new.clone();
            i += 2;
            continue;
        }
        if args[i].starts_with("--out=") {
            args[i] = format!("--out={new}");
        }
        i += 1;
    }
}

fn replay(r: &ReplayArgs) -> Result<RunManifest, Failure> {
    let recorded = RunManifest::load(&r.manifest)?;
    let mut args = recorded.args.clone();
    if let Some(out) = &r.out {
        override_out(&mut args, out);
    }
    let argv = std::iter::once("rankdiv".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Failure::Usage(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Failure::Usage("a manifest cannot record a replay".into()));
    }
    let fresh = execute(cli.command, args)?;
    if fresh
        .inputs
        .iter()
        .map(|d| &d.sha256)
        .ne(recorded.inputs.iter().map(|d| &d.sha256))
    {
        return Err(Failure::Mismatch(
            "inputs differ from the recorded digests".into(),
        ));
    }
    if fresh.outputs != recorded.outputs {
        let differing: Vec<&str> = recorded
            .outputs
            .iter()
            .filter(|d| !fresh.outputs.contains(d))
            .map(|d| d.path.as_str())
            .collect();
        return Err(Failure::Mismatch(format!(
            "outputs differ: {}",
            differing.join(", ")
        )));
    }
    println!("replay identical: {} outputs", fresh.outputs.len());
    Ok(fresh)
}

fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage, 2 data error, 3 numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let raw: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match cli.command {
        Command::Replay(r) => replay(&r),
        command => execute(command, raw),
    };
    match result {
        Ok(_) => EXIT_OK,
        Err(f) => {
            eprintln!("rankdiv: {f}");
            f.code()
        }
    }
}
