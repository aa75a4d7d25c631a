//! Streaming ingestion of raw corpus files into per-slice frequency tables.
//!
//! Two input formats are understood:
//!
//! * Google Books 1-gram TSV: `token TAB year TAB match_count TAB volume_count`
//!   (optionally gzip-compressed, detected by a `.gz` extension);
//! * a generic ranked-series CSV with header `id,slice,score`, where `score`
//!   is any non-negative real (ratings, points, ...).
//!
//! Records are folded into a [`TableBuilder`] one at a time; only per-slice
//! aggregates are kept in memory. Builders for different files can be merged
//! in any order, which is what [`ingest_files`] does in parallel.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Time index of a slice: a year, or the ordinal of a rating period.
pub type Slice = i64;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRecord {
    pub token: String,
    pub slice: Slice,
    /// Occurrence count for corpus data; a non-negative score for generic series.
    pub count: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenPolicy {
    /// Drop `_TAG` part-of-speech suffixes (`word_NOUN` becomes `word`).
    pub strip_pos_tags: bool,
    pub lowercase: bool,
    /// Reject tokens containing any non-alphabetic character.
    pub alphabetic_only: bool,
    /// Aggregated (slice, token) entries below this count are dropped.
    pub min_count: u64,
}

/// What to do with a line that does not parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MalformedLines {
    #[default]
    Skip,
    Abort,
}

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    NgramTsv,
    ScoreCsv,
}

impl InputFormat {
    /// Guesses the format from the file name: `.csv` (possibly `.csv.gz`) is
    /// the generic score CSV, everything else is read as 1-gram TSV.
    pub fn from_path(path: &Path) -> Self {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".csv") {
            InputFormat::ScoreCsv
        } else {
            InputFormat::NgramTsv
        }
    }
}

fn parse_error(source_name: &str, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        reason: reason.into(),
    }
}

/// Parses one line of the 1-gram TSV format. The volume count (fourth field)
/// is ignored, and the token is returned verbatim.
pub fn parse_ngram_line(line: &str, line_no: u64) -> Result<FrequencyRecord> {
    parse_ngram_line_from(line, line_no, "<input>")
}

fn parse_ngram_line_from(line: &str, line_no: u64, source_name: &str) -> Result<FrequencyRecord> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut fields = line.split('\t');
    let (Some(token), Some(slice), Some(count)) = (fields.next(), fields.next(), fields.next())
    else {
        return Err(parse_error(
            source_name,
            line_no,
            "expected at least 3 tab-separated fields",
        ));
    };
    if token.is_empty() {
        return Err(parse_error(source_name, line_no, "empty token"));
    }
    let slice: Slice = slice
        .parse()
        .map_err(|_| parse_error(source_name, line_no, format!("bad slice {slice:?}")))?;
    let count: u64 = count
        .parse()
        .map_err(|_| parse_error(source_name, line_no, format!("bad count {count:?}")))?;
    Ok(FrequencyRecord {
        token: token.to_string(),
        slice,
        count: count as f64,
    })
}

/// Splits a trailing part-of-speech tag (`_` followed by uppercase ASCII
/// letters) off `token`. Returns `None` if the token is only a tag, such as
/// `_NOUN_` or `_START_`.
fn strip_pos_tag(token: &str) -> Option<&str> {
    let is_tag = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_uppercase());
    let mut rest = token;
    while let Some(pos) = rest.rfind('_') {
        if pos == 0 || !is_tag(&rest[pos + 1..]) {
            break;
        }
        rest = &rest[..pos];
    }
    let bare = rest.trim_end_matches('_');
    if bare.starts_with('_') && is_tag(&bare[1..]) {
        return None;
    }
    Some(rest)
}

/// Applies `policy` to a raw token: tag stripping, then lowercasing, then the
/// alphabetic filter. `None` means the record is dropped.
pub fn normalize_token(token: &str, policy: &TokenPolicy) -> Option<String> {
    let mut t = token;
    if policy.strip_pos_tags {
        t = strip_pos_tag(t)?;
    }
    let t = if policy.lowercase {
        t.to_lowercase()
    } else {
        t.to_string()
    };
    if t.is_empty() {
        return None;
    }
    if policy.alphabetic_only && !t.chars().all(char::is_alphabetic) {
        return None;
    }
    Some(t)
}

/// All counts observed for one slice, after normalization and merging.
#[derive(Debug, Clone, PartialEq)]
pub struct YearlyFrequencyTable {
    pub slice: Slice,
    entries: HashMap<String, f64>,
    total: f64,
}

impl YearlyFrequencyTable {
    pub fn new(slice: Slice, entries: HashMap<String, f64>) -> Self {
        let total = sorted_entries(&entries).iter().map(|(_, c)| c).sum();
        Self {
            slice,
            entries,
            total,
        }
    }

    pub fn from_pairs<S: Into<String>>(
        slice: Slice,
        pairs: impl IntoIterator<Item = (S, f64)>,
    ) -> Self {
        let mut entries = HashMap::new();
        for (token, count) in pairs {
            *entries.entry(token.into()).or_insert(0.0) += count;
        }
        Self::new(slice, entries)
    }

    pub fn entries(&self) -> &HashMap<String, f64> {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    /// Entries by descending count, ties by ascending token bytes.
    pub fn sorted(&self) -> Vec<(&str, f64)> {
        sorted_entries(&self.entries)
    }

    /// Writes the table as `token TAB count` lines, sorted by [`Self::sorted`].
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (token, count) in self.sorted() {
            writeln!(w, "{token}\t{count}")?;
        }
        w.flush()
    }

    pub fn read_tsv<R: BufRead>(slice: Slice, reader: R, source_name: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = line.map_err(|e| parse_error(source_name, line_no, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (token, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_error(source_name, line_no, "expected `token TAB count`"))?;
            let count: f64 = count
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite() && *c >= 0.0)
                .ok_or_else(|| parse_error(source_name, line_no, format!("bad count {count:?}")))?;
            if entries.insert(token.to_string(), count).is_some() {
                return Err(parse_error(
                    source_name,
                    line_no,
                    format!("duplicate token {token:?}"),
                ));
            }
        }
        Ok(Self::new(slice, entries))
    }
}

pub(crate) fn sorted_entries(entries: &HashMap<String, f64>) -> Vec<(&str, f64)> {
    let mut v: Vec<(&str, f64)> = entries.iter().map(|(t, &c)| (t.as_str(), c)).collect();
    v.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.as_bytes().cmp(b.0.as_bytes()))
    });
    v
}

/// Bookkeeping of what happened to the input while building tables.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct IngestStats {
    pub records_read: u64,
    pub malformed_lines: u64,
    /// Records whose token the policy rejected.
    pub rejected_tokens: u64,
    pub out_of_range: u64,
    /// Aggregated entries dropped by `min_count`.
    pub below_min_count: u64,
    /// Sum of counts of every record that did not end up in a table.
    pub dropped_mass: f64,
}

impl IngestStats {
    fn merge(&mut self, other: &IngestStats) {
        self.records_read += other.records_read;
        self.malformed_lines += other.malformed_lines;
        self.rejected_tokens += other.rejected_tokens;
        self.out_of_range += other.out_of_range;
        self.below_min_count += other.below_min_count;
        self.dropped_mass += other.dropped_mass;
    }
}

/// Incremental per-slice aggregation of [`FrequencyRecord`]s.
///
/// Merging is associative and commutative, so builders filled from different
/// files may be combined in any order.
#[derive(Debug, Clone)]
pub struct TableBuilder {
    policy: TokenPolicy,
    range: RangeInclusive<Slice>,
    slices: BTreeMap<Slice, HashMap<String, f64>>,
    stats: IngestStats,
}

impl TableBuilder {
    pub fn new(policy: TokenPolicy, range: RangeInclusive<Slice>) -> Result<Self> {
        if range.is_empty() {
            return Err(Error::domain(format!(
                "empty slice range {}..={}",
                range.start(),
                range.end()
            )));
        }
        Ok(Self {
            policy,
            range,
            slices: BTreeMap::new(),
            stats: IngestStats::default(),
        })
    }

    pub fn push(&mut self, record: FrequencyRecord) {
        self.stats.records_read += 1;
        if !self.range.contains(&record.slice) {
            self.stats.out_of_range += 1;
            self.stats.dropped_mass += record.count;
            return;
        }
        let Some(token) = normalize_token(&record.token, &self.policy) else {
            self.stats.rejected_tokens += 1;
            self.stats.dropped_mass += record.count;
            return;
        };
        *self
            .slices
            .entry(record.slice)
            .or_default()
            .entry(token)
            .or_insert(0.0) += record.count;
    }

    pub fn record_malformed(&mut self) {
        self.stats.malformed_lines += 1;
    }

    pub fn merge(mut self, other: TableBuilder) -> TableBuilder {
        debug_assert_eq!(self.policy, other.policy);
        let (mut small, large) = if self.slices.len() < other.slices.len() {
            (std::mem::take(&mut self.slices), other.slices)
        } else {
            (other.slices, std::mem::take(&mut self.slices))
        };
        let mut merged = large;
        for (slice, entries) in std::mem::take(&mut small) {
            let target = merged.entry(slice).or_default();
            for (token, count) in entries {
                *target.entry(token).or_insert(0.0) += count;
            }
        }
        self.slices = merged;
        self.stats.merge(&other.stats);
        self
    }

    /// Applies `min_count` and returns the non-empty tables in slice order.
    pub fn finish(self) -> (Vec<YearlyFrequencyTable>, IngestStats) {
        let mut stats = self.stats;
        let min = self.policy.min_count as f64;
        let mut tables = Vec::with_capacity(self.slices.len());
        for (slice, mut entries) in self.slices {
            entries.retain(|_, count| {
                if *count < min {
                    stats.below_min_count += 1;
                    stats.dropped_mass += *count;
                    false
                } else {
                    true
                }
            });
            if !entries.is_empty() {
                tables.push(YearlyFrequencyTable::new(slice, entries));
            }
        }
        (tables, stats)
    }
}

/// Builds one table per slice of `range` from an in-memory record stream.
pub fn build_tables(
    records: impl IntoIterator<Item = FrequencyRecord>,
    policy: &TokenPolicy,
    range: RangeInclusive<Slice>,
) -> Result<(Vec<YearlyFrequencyTable>, IngestStats)> {
    let mut builder = TableBuilder::new(policy.clone(), range)?;
    for r in records {
        builder.push(r);
    }
    Ok(builder.finish())
}

/// Streams 1-gram TSV lines from `reader` into `builder`.
pub fn read_ngram_stream<R: BufRead>(
    mut reader: R,
    source_name: &str,
    malformed: MalformedLines,
    builder: &mut TableBuilder,
) -> Result<()> {
    let mut line = String::new();
    let mut line_no = 0u64;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(source_name, e))?;
        if n == 0 {
            return Ok(());
        }
        line_no += 1;
        let text = line.strip_suffix('\n').unwrap_or(&line);
        if text.is_empty() {
            continue;
        }
        match parse_ngram_line_from(text, line_no, source_name) {
            Ok(record) => builder.push(record),
            Err(e) => match malformed {
                MalformedLines::Abort => return Err(e),
                MalformedLines::Skip => builder.record_malformed(),
            },
        }
    }
}

/// Streams a generic `id,slice,score` CSV from `reader` into `builder`.
pub fn read_score_csv<R: Read>(
    reader: R,
    source_name: &str,
    malformed: MalformedLines,
    builder: &mut TableBuilder,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source_name, 1, e.to_string()))?
        .clone();
    let expected = ["id", "slice", "score"];
    if headers.len() < 3 || headers.iter().take(3).map(str::trim).ne(expected) {
        return Err(parse_error(
            source_name,
            1,
            "expected header `id,slice,score`",
        ));
    }
    let mut record = csv::StringRecord::new();
    loop {
        let line_no = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => return Ok(()),
            Ok(true) => {}
            Err(e) => {
                if e.is_io_error() {
                    return Err(parse_error(source_name, line_no, e.to_string()));
                }
                match malformed {
                    MalformedLines::Abort => {
                        return Err(parse_error(source_name, line_no, e.to_string()))
                    }
                    MalformedLines::Skip => {
                        builder.record_malformed();
                        continue;
                    }
                }
            }
        }
        match parse_score_record(&record) {
            Some(r) => builder.push(r),
            None => match malformed {
                MalformedLines::Abort => {
                    return Err(parse_error(
                        source_name,
                        line_no,
                        "expected `id,slice,score` with integer slice and non-negative score",
                    ))
                }
                MalformedLines::Skip => builder.record_malformed(),
            },
        }
    }
}

fn parse_score_record(record: &csv::StringRecord) -> Option<FrequencyRecord> {
    if record.len() < 3 {
        return None;
    }
    let token = record.get(0)?.trim();
    let slice = record.get(1)?.trim().parse().ok()?;
    let score: f64 = record.get(2)?.trim().parse().ok()?;
    if token.is_empty() || !score.is_finite() || score < 0.0 {
        return None;
    }
    Some(FrequencyRecord {
        token: token.to_string(),
        slice,
        count: score,
    })
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    Ok(if gz {
        Box::new(BufReader::with_capacity(1 << 20, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(1 << 20, file))
    })
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub policy: TokenPolicy,
    pub range: RangeInclusive<Slice>,
    pub malformed: MalformedLines,
    /// Forces a format instead of guessing it per file name.
    pub format: Option<InputFormat>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            policy: TokenPolicy::default(),
            range: Slice::MIN..=Slice::MAX,
            malformed: MalformedLines::Skip,
            format: None,
        }
    }
}

/// Reads a single corpus file into a fresh builder.
pub fn ingest_file(path: &Path, opts: &IngestOptions) -> Result<TableBuilder> {
    let mut builder = TableBuilder::new(opts.policy.clone(), opts.range.clone())?;
    let name = path.display().to_string();
    let reader = open_input(path)?;
    match opts.format.unwrap_or_else(|| InputFormat::from_path(path)) {
        InputFormat::NgramTsv => read_ngram_stream(reader, &name, opts.malformed, &mut builder)?,
        InputFormat::ScoreCsv => read_score_csv(reader, &name, opts.malformed, &mut builder)?,
    }
    Ok(builder)
}

/// Reads every file (in parallel) and merges the per-file aggregates.
pub fn ingest_files(
    paths: &[PathBuf],
    opts: &IngestOptions,
) -> Result<(Vec<YearlyFrequencyTable>, IngestStats)> {
    let empty = TableBuilder::new(opts.policy.clone(), opts.range.clone())?;
    let merged = paths
        .par_iter()
        .map(|p| ingest_file(p, opts))
        .try_reduce(|| empty.clone(), |a, b| Ok(a.merge(b)))?;
    Ok(merged.finish())
}

/// Writes `<slice>.tsv` for every table into `dir`.
pub fn save_frequency_tables(tables: &[YearlyFrequencyTable], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.tsv", t.slice));
            crate::io::write_atomic(&path, |w| t.write_tsv(w))?;
            Ok(path)
        })
        .collect()
}

/// Loads every `<slice>.tsv` file of `dir` whose slice falls in `range`.
pub fn load_frequency_tables(
    dir: &Path,
    range: RangeInclusive<Slice>,
) -> Result<Vec<YearlyFrequencyTable>> {
    let mut out = Vec::new();
    for (slice, path) in crate::io::slice_files(dir)? {
        if !range.contains(&slice) {
            continue;
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        out.push(YearlyFrequencyTable::read_tsv(
            slice,
            BufReader::new(file),
            &path.display().to_string(),
        )?);
    }
    if out.is_empty() {
        warn!("no frequency tables found in {}", dir.display());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(token: &str, slice: Slice, count: f64) -> FrequencyRecord {
        FrequencyRecord {
            token: token.into(),
            slice,
            count,
        }
    }

    #[test]
    fn parses_ngram_lines() {
        assert_eq!(
            parse_ngram_line("the\t2000\t53\t13", 1).unwrap(),
            rec("the", 2000, 53.0)
        );
        assert_eq!(
            parse_ngram_line("word_NOUN\t1900\t7\t2", 1).unwrap(),
            rec("word_NOUN", 1900, 7.0)
        );
        // the volume count is optional
        assert_eq!(parse_ngram_line("x\t1\t2", 1).unwrap(), rec("x", 1, 2.0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_ngram_line("bad\tline", 17) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
        assert!(parse_ngram_line("w\tyear\t3\t1", 1).is_err());
        assert!(parse_ngram_line("w\t1990\t-3\t1", 1).is_err());
        assert!(parse_ngram_line("w\t1990\t2.5\t1", 1).is_err());
    }

    #[test]
    fn normalization_examples() {
        let lower = TokenPolicy {
            lowercase: true,
            ..Default::default()
        };
        assert_eq!(normalize_token("The", &lower).as_deref(), Some("the"));
        let strip = TokenPolicy {
            strip_pos_tags: true,
            ..Default::default()
        };
        assert_eq!(
            normalize_token("word_NOUN", &strip).as_deref(),
            Some("word")
        );
        assert_eq!(
            normalize_token("word_NOUN_VERB", &strip).as_deref(),
            Some("word")
        );
        assert_eq!(normalize_token("_NOUN_", &strip), None);
        assert_eq!(normalize_token("_START_", &strip), None);
        assert_eq!(normalize_token("_NOUN", &strip), None);
        assert_eq!(
            normalize_token("snake_case", &strip).as_deref(),
            Some("snake_case")
        );
        let alpha = TokenPolicy {
            alphabetic_only: true,
            ..Default::default()
        };
        assert_eq!(normalize_token("c3po", &alpha), None);
        assert_eq!(normalize_token("año", &alpha).as_deref(), Some("año"));
    }

    #[test]
    fn order_is_strip_then_lowercase_then_filter() {
        let all = TokenPolicy {
            strip_pos_tags: true,
            lowercase: true,
            alphabetic_only: true,
            min_count: 0,
        };
        // Lowercasing first would turn the tag into `_noun` and make the filter reject it.
        assert_eq!(
            normalize_token("House_NOUN", &all).as_deref(),
            Some("house")
        );
    }

    #[test]
    fn merges_normalized_duplicates() {
        let lower = TokenPolicy {
            lowercase: true,
            ..Default::default()
        };
        let (tables, _) = build_tables(
            vec![rec("The", 2000, 3.0), rec("the", 2000, 5.0)],
            &lower,
            1990..=2010,
        )
        .unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].slice, 2000);
        assert_eq!(tables[0].get("the"), Some(8.0));
        assert_eq!(tables[0].total(), 8.0);
    }

    #[test]
    fn empty_stream_gives_no_tables() {
        let (tables, stats) = build_tables(vec![], &TokenPolicy::default(), 0..=10).unwrap();
        assert!(tables.is_empty());
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn empty_range_is_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let r = build_tables(vec![], &TokenPolicy::default(), 10..=0);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn range_and_min_count_filtering() {
        let policy = TokenPolicy {
            min_count: 3,
            ..Default::default()
        };
        let (tables, stats) = build_tables(
            vec![
                rec("a", 1, 2.0),
                rec("a", 1, 2.0),
                rec("b", 1, 2.0),
                rec("c", 5, 9.0),
            ],
            &policy,
            0..=2,
        )
        .unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].get("a"), Some(4.0));
        assert_eq!(tables[0].get("b"), None);
        assert_eq!(stats.out_of_range, 1);
        assert_eq!(stats.below_min_count, 1);
        assert_eq!(stats.dropped_mass, 11.0);
    }

    #[test]
    fn skip_and_abort_on_malformed_lines() {
        let data = "a\t1\t3\t1\nbroken\nb\t1\t4\t1\n";
        let mut b = TableBuilder::new(TokenPolicy::default(), 0..=5).unwrap();
        read_ngram_stream(data.as_bytes(), "mem", MalformedLines::Skip, &mut b).unwrap();
        let (tables, stats) = b.finish();
        assert_eq!(stats.malformed_lines, 1);
        assert_eq!(tables[0].len(), 2);

        let mut b = TableBuilder::new(TokenPolicy::default(), 0..=5).unwrap();
        let err =
            read_ngram_stream(data.as_bytes(), "mem", MalformedLines::Abort, &mut b).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn score_csv_ingestion() {
        let data = "id,slice,score\nkasparov,1,2851\ncarlsen,1,2872.5\nkasparov,2,2812\nbad,x,1\n";
        let mut b = TableBuilder::new(TokenPolicy::default(), 0..=5).unwrap();
        read_score_csv(data.as_bytes(), "mem", MalformedLines::Skip, &mut b).unwrap();
        let (tables, stats) = b.finish();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[0].get("carlsen"), Some(2872.5));
        assert_eq!(stats.malformed_lines, 1);

        let mut b = TableBuilder::new(TokenPolicy::default(), 0..=5).unwrap();
        let err = read_score_csv(
            "name,year,elo\n".as_bytes(),
            "mem",
            MalformedLines::Skip,
            &mut b,
        );
        assert!(err.is_err());
    }

    #[test]
    fn tsv_round_trip_is_bit_exact() {
        let t = YearlyFrequencyTable::from_pairs(
            2000,
            [
                ("the", 53.0),
                ("of", 40.0),
                ("and", 40.0),
                ("zebra", 1.0),
                ("elo", 2851.25),
            ],
        );
        let mut first = Vec::new();
        t.write_tsv(&mut first).unwrap();
        assert_eq!(
            String::from_utf8(first.clone()).unwrap(),
            "elo\t2851.25\nthe\t53\nand\t40\nof\t40\nzebra\t1\n"
        );
        let back = YearlyFrequencyTable::read_tsv(2000, first.as_slice(), "mem").unwrap();
        assert_eq!(back, t);
        let mut second = Vec::new();
        back.write_tsv(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn format_detection() {
        assert_eq!(
            InputFormat::from_path(Path::new("chess.csv")),
            InputFormat::ScoreCsv
        );
        assert_eq!(
            InputFormat::from_path(Path::new("x.CSV.gz")),
            InputFormat::ScoreCsv
        );
        assert_eq!(
            InputFormat::from_path(Path::new("googlebooks-eng-all-1gram-20120701-a.gz")),
            InputFormat::NgramTsv
        );
    }
}
