//! Rank tables, rank trajectories, top-n lists and cross-list overlap.
//!
//! Tables built together share one interned [`Vocabulary`], so comparing the
//! occupants of a rank across slices is an integer comparison. Tables with
//! unrelated vocabularies are still accepted everywhere; they are aligned on
//! the fly by token text.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::ingest::{sorted_entries, Slice, YearlyFrequencyTable};

pub type TokenId = u32;

/// Append-only string interner.
#[derive(Debug, Default, Clone)]
pub struct Vocabulary {
    tokens: Vec<Box<str>>,
    index: HashMap<Box<str>, TokenId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = TokenId::try_from(self.tokens.len()).expect("vocabulary exceeds u32 ids");
        self.tokens.push(token.into());
        self.index.insert(token.into(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Counts {
    Observed(Vec<f64>),
    /// No observed frequencies (simulated rankings): the count at rank `k`
    /// of an `N`-item table is reported as `N - k + 1`.
    RankScore,
}

/// One slice's bijection between tokens and ranks `1..=N`.
#[derive(Debug, Clone)]
pub struct RankTable {
    slice: Slice,
    vocab: Arc<Vocabulary>,
    ids: Vec<TokenId>,
    counts: Counts,
}

impl RankTable {
    fn from_parts(
        slice: Slice,
        vocab: Arc<Vocabulary>,
        ids: Vec<TokenId>,
        counts: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::domain(format!(
                "rank table for slice {slice} is empty"
            )));
        }
        let mut seen = vec![false; vocab.len()];
        for &id in &ids {
            if std::mem::replace(&mut seen[id as usize], true) {
                return Err(Error::domain(format!(
                    "token {:?} appears twice in slice {slice}",
                    vocab.token(id)
                )));
            }
        }
        if let Some(c) = &counts {
            if c.len() != ids.len() {
                return Err(Error::domain("counts and tokens differ in length"));
            }
            if let Some(k) = c.windows(2).position(|w| w[1] > w[0]) {
                return Err(Error::domain(format!(
                    "counts increase between ranks {} and {} in slice {slice}",
                    k + 1,
                    k + 2
                )));
            }
        }
        Ok(Self {
            slice,
            vocab,
            ids,
            counts: counts.map_or(Counts::RankScore, Counts::Observed),
        })
    }

    /// Builds a ranking from tokens already listed in rank order.
    pub fn from_ranked<S: AsRef<str>>(
        slice: Slice,
        tokens: &[S],
        counts: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let ids = tokens.iter().map(|t| vocab.intern(t.as_ref())).collect();
        Self::from_parts(slice, Arc::new(vocab), ids, counts)
    }

    pub fn slice(&self) -> Slice {
        self.slice
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Token ids in rank order (`ids()[k - 1]` holds rank `k`).
    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    /// Token at 1-based rank `k`.
    pub fn token(&self, k: usize) -> &str {
        self.vocab.token(self.ids[k - 1])
    }

    pub fn count(&self, k: usize) -> f64 {
        match &self.counts {
            Counts::Observed(c) => c[k - 1],
            Counts::RankScore => (self.ids.len() - k + 1) as f64,
        }
    }

    pub fn has_observed_counts(&self) -> bool {
        matches!(self.counts, Counts::Observed(_))
    }

    pub fn total(&self) -> f64 {
        (1..=self.len()).map(|k| self.count(k)).sum()
    }

    /// Rank of `token`, by linear scan.
    pub fn rank_of(&self, token: &str) -> Option<usize> {
        let id = self.vocab.id(token)?;
        self.ids.iter().position(|&x| x == id).map(|p| p + 1)
    }

    /// `(rank, token, count)` in rank order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, f64)> + '_ {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (i + 1, self.vocab.token(id), self.count(i + 1)))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.ids.iter().map(|&id| self.vocab.token(id))
    }

    /// Writes `rank TAB token TAB count` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, token, count) in self.iter() {
            writeln!(w, "{k}\t{token}\t{count}")?;
        }
        w.flush()
    }

    pub fn read_tsv<R: BufRead>(slice: Slice, reader: R, source_name: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i as u64 + 1;
            let err = |reason: String| Error::Parse {
                source_name: source_name.to_string(),
                line: line_no,
                reason,
            };
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            let (Some(rank), Some(token), Some(count), None) =
                (f.next(), f.next(), f.next(), f.next())
            else {
                return Err(err("expected `rank TAB token TAB count`".into()));
            };
            let rank: usize = rank
                .parse()
                .map_err(|_| err(format!("bad rank {rank:?}")))?;
            if rank != tokens.len() + 1 {
                return Err(err(format!(
                    "expected rank {}, found {rank}",
                    tokens.len() + 1
                )));
            }
            let count: f64 = count
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite())
                .ok_or_else(|| err(format!("bad count {count:?}")))?;
            tokens.push(token.to_string());
            counts.push(count);
        }
        Self::from_ranked(slice, &tokens, Some(counts))
    }
}

impl PartialEq for RankTable {
    fn eq(&self, other: &Self) -> bool {
        self.slice == other.slice && self.len() == other.len() && self.iter().eq(other.iter())
    }
}

/// Ranks a frequency table: descending count, ties by ascending token bytes.
pub fn rank_table(freq: &YearlyFrequencyTable) -> Result<RankTable> {
    let mut builder = SeriesBuilder::new();
    builder.push_frequencies(freq)?;
    Ok(builder.finish().pop().expect("one table pushed"))
}

/// Collects rank tables that share one vocabulary.
#[derive(Debug, Default)]
pub struct SeriesBuilder {
    vocab: Vocabulary,
    pending: Vec<(Slice, Vec<TokenId>, Option<Vec<f64>>)>,
}

impl SeriesBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_frequencies(&mut self, freq: &YearlyFrequencyTable) -> Result<()> {
        if freq.is_empty() {
            return Err(Error::domain(format!(
                "frequency table for slice {} is empty",
                freq.slice
            )));
        }
        let sorted = sorted_entries(freq.entries());
        let ids = sorted.iter().map(|(t, _)| self.vocab.intern(t)).collect();
        let counts = sorted.iter().map(|(_, c)| *c).collect();
        self.pending.push((freq.slice, ids, Some(counts)));
        Ok(())
    }

    pub fn push_ranked<S: AsRef<str>>(
        &mut self,
        slice: Slice,
        tokens: &[S],
        counts: Option<Vec<f64>>,
    ) {
        let ids = tokens
            .iter()
            .map(|t| self.vocab.intern(t.as_ref()))
            .collect();
        self.pending.push((slice, ids, counts));
    }

    pub fn push_table(&mut self, table: &RankTable) {
        let ids = table.tokens().map(|t| self.vocab.intern(t)).collect();
        let counts = match &table.counts {
            Counts::Observed(c) => Some(c.clone()),
            Counts::RankScore => None,
        };
        self.pending.push((table.slice, ids, counts));
    }

    pub(crate) fn vocabulary_mut(&mut self) -> &mut Vocabulary {
        &mut self.vocab
    }

    pub(crate) fn push_ids(&mut self, slice: Slice, ids: Vec<TokenId>, counts: Option<Vec<f64>>) {
        self.pending.push((slice, ids, counts));
    }

    /// Tables sorted by slice.
    pub fn try_finish(self) -> Result<Vec<RankTable>> {
        let vocab = Arc::new(self.vocab);
        let mut tables = self
            .pending
            .into_iter()
            .map(|(slice, ids, counts)| RankTable::from_parts(slice, vocab.clone(), ids, counts))
            .collect::<Result<Vec<_>>>()?;
        tables.sort_by_key(|t| t.slice);
        Ok(tables)
    }

    pub(crate) fn finish(self) -> Vec<RankTable> {
        self.try_finish().expect("builder invariants hold")
    }
}

/// Ranks every frequency table into a series sharing one vocabulary.
pub fn rank_series(freqs: &[YearlyFrequencyTable]) -> Result<Vec<RankTable>> {
    let mut builder = SeriesBuilder::new();
    for f in freqs {
        builder.push_frequencies(f)?;
    }
    let tables = builder.try_finish()?;
    check_ordered(&tables)?;
    Ok(tables)
}

/// Re-interns `tables` into one shared vocabulary (no-op if already shared).
pub fn unify(tables: &[RankTable]) -> Vec<RankTable> {
    if shares_vocabulary(tables) {
        return tables.to_vec();
    }
    let mut b = SeriesBuilder::new();
    for t in tables {
        b.push_table(t);
    }
    b.finish()
}

pub(crate) fn shares_vocabulary(tables: &[RankTable]) -> bool {
    tables
        .windows(2)
        .all(|w| Arc::ptr_eq(&w[0].vocab, &w[1].vocab))
}

/// Token ids of every table in one common id space; borrowed when the tables
/// already share a vocabulary.
pub(crate) fn aligned_ids(tables: &[RankTable]) -> (Vec<Cow<'_, [TokenId]>>, usize) {
    if shares_vocabulary(tables) {
        let n = tables.first().map_or(0, |t| t.vocab.len());
        return (
            tables
                .iter()
                .map(|t| Cow::Borrowed(t.ids.as_slice()))
                .collect(),
            n,
        );
    }
    let mut common: HashMap<&str, TokenId> = HashMap::new();
    let ids = tables
        .iter()
        .map(|t| {
            Cow::Owned(
                t.tokens()
                    .map(|tok| {
                        let next = common.len() as TokenId;
                        *common.entry(tok).or_insert(next)
                    })
                    .collect(),
            )
        })
        .collect();
    (ids, common.len())
}

/// Inverse of a table: `index[id]` is the 1-based rank of `id`, or 0 if absent.
pub(crate) fn rank_index(ids: &[TokenId], vocab_len: usize) -> Vec<u32> {
    let mut index = vec![0u32; vocab_len];
    for (i, &id) in ids.iter().enumerate() {
        index[id as usize] = i as u32 + 1;
    }
    index
}

/// Checks that tables are sorted by strictly increasing slice.
pub fn check_ordered(tables: &[RankTable]) -> Result<()> {
    if let Some(w) = tables.windows(2).find(|w| w[0].slice >= w[1].slice) {
        return Err(Error::domain(format!(
            "tables must be in strictly increasing slice order (found {} before {})",
            w[0].slice, w[1].slice
        )));
    }
    Ok(())
}

/// The tables whose slice lies in `range`.
pub fn window(tables: &[RankTable], range: RangeInclusive<Slice>) -> &[RankTable] {
    let start = tables.partition_point(|t| t.slice < *range.start());
    let end = tables.partition_point(|t| t.slice <= *range.end());
    &tables[start..end.max(start)]
}

/// One token's rank over time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTrajectory {
    pub token: String,
    /// `(slice, rank)` sorted by slice; slices where the token is absent are skipped.
    pub points: Vec<(Slice, u32)>,
}

impl RankTrajectory {
    pub fn rank_at(&self, slice: Slice) -> Option<u32> {
        self.points
            .binary_search_by_key(&slice, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rank of `token` in every table where it appears.
pub fn trajectory(token: &str, tables: &[RankTable]) -> RankTrajectory {
    let mut points: Vec<(Slice, u32)> = tables
        .iter()
        .filter_map(|t| t.rank_of(token).map(|k| (t.slice, k as u32)))
        .collect();
    points.sort_unstable();
    RankTrajectory {
        token: token.to_string(),
        points,
    }
}

/// First `n` tokens by rank.
pub fn top_k(table: &RankTable, n: usize) -> Result<Vec<&str>> {
    if n == 0 || n > table.len() {
        return Err(Error::domain(format!(
            "top_k: n = {n} outside 1..={} for slice {}",
            table.len(),
            table.slice
        )));
    }
    Ok(table.tokens().take(n).collect())
}

/// First `n` tokens by rank after removing every token listed in `stoplist`.
pub fn top_k_excluding<'a>(
    table: &'a RankTable,
    n: usize,
    stoplist: &HashSet<String>,
) -> Result<Vec<&'a str>> {
    let kept: Vec<&str> = table
        .tokens()
        .filter(|t| !stoplist.contains(*t))
        .take(n)
        .collect();
    if n == 0 || kept.len() < n {
        return Err(Error::domain(format!(
            "top_k: only {} tokens of slice {} survive the stoplist, {n} requested",
            kept.len(),
            table.slice
        )));
    }
    Ok(kept)
}

/// Token-to-token translation into a reference language.
#[derive(Debug, Clone, Default)]
pub struct TranslationMap {
    map: Option<HashMap<String, String>>,
    duplicates: usize,
}

impl TranslationMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut map = HashMap::new();
        let mut duplicates = 0;
        for (src, dst) in pairs {
            let src = src.into();
            if map.contains_key(&src) {
                warn!("duplicate translation for {src:?}; keeping the first");
                duplicates += 1;
                continue;
            }
            map.insert(src, dst.into());
        }
        Self {
            map: Some(map),
            duplicates,
        }
    }

    /// Reads `source_token TAB target_token` lines.
    pub fn read_tsv<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                source_name: source_name.into(),
                line: i as u64 + 1,
                reason: e.to_string(),
            })?;
            if line.is_empty() {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| Error::Parse {
                source_name: source_name.into(),
                line: i as u64 + 1,
                reason: "expected `source_token TAB target_token`".into(),
            })?;
            pairs.push((src.to_string(), dst.to_string()));
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(BufReader::new(file), &path.display().to_string())
    }

    pub fn translate<'a>(&'a self, token: &'a str) -> Option<&'a str> {
        match &self.map {
            None => Some(token),
            Some(m) => m.get(token).map(String::as_str),
        }
    }

    /// Number of source tokens that appeared more than once in the input.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

/// Fraction of `other` whose translation lands in `reference`.
///
/// Counted as a set intersection: several `other` tokens translating to the
/// same reference token count once. Untranslatable tokens count as misses.
pub fn overlap<S: AsRef<str>, T: AsRef<str>>(
    reference: &[S],
    other: &[T],
    mapping: &TranslationMap,
) -> Result<f64> {
    if reference.len() != other.len() || reference.is_empty() {
        return Err(Error::domain(format!(
            "overlap needs two non-empty lists of equal length (got {} and {})",
            reference.len(),
            other.len()
        )));
    }
    let reference: HashSet<&str> = reference.iter().map(AsRef::as_ref).collect();
    let hits: HashSet<&str> = other
        .iter()
        .filter_map(|t| mapping.translate(t.as_ref()))
        .filter(|t| reference.contains(t))
        .collect();
    Ok(hits.len() as f64 / other.len() as f64)
}

/// Loads a directory of `<slice>.tsv` tables, accepting both the frequency
/// (`token TAB count`) and the rank (`rank TAB token TAB count`) layouts.
pub fn load_rank_series(dir: &Path, range: RangeInclusive<Slice>) -> Result<Vec<RankTable>> {
    let mut builder = SeriesBuilder::new();
    let mut any = false;
    for (slice, path) in crate::io::slice_files(dir)? {
        if !range.contains(&slice) {
            continue;
        }
        any = true;
        let name = path.display().to_string();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let columns = text.lines().next().map_or(0, |l| l.split('\t').count());
        if columns == 3 {
            builder.push_table(&RankTable::read_tsv(slice, text.as_bytes(), &name)?);
        } else {
            builder.push_frequencies(&YearlyFrequencyTable::read_tsv(
                slice,
                text.as_bytes(),
                &name,
            )?)?;
        }
    }
    if !any {
        return Err(Error::domain(format!(
            "no <slice>.tsv tables in {}",
            dir.display()
        )));
    }
    builder.try_finish()
}

/// Writes `<slice>.tsv` rank tables into `dir`.
pub fn save_rank_series(tables: &[RankTable], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn freq(slice: Slice, pairs: &[(&str, f64)]) -> YearlyFrequencyTable {
        YearlyFrequencyTable::from_pairs(slice, pairs.iter().map(|&(t, c)| (t, c)))
    }

    #[test]
    fn ties_break_lexicographically() {
        let t = rank_table(&freq(1, &[("c", 5.0), ("a", 10.0), ("b", 5.0)])).unwrap();
        let got: Vec<_> = t.iter().map(|(k, tok, _)| (tok, k)).collect();
        assert_eq!(got, vec![("a", 1), ("b", 2), ("c", 3)]);
    }

    #[test]
    fn single_entry_and_empty() {
        let t = rank_table(&freq(1, &[("x", 1.0)])).unwrap();
        assert_eq!(t.rank_of("x"), Some(1));
        assert!(rank_table(&freq(1, &[])).is_err());
    }

    #[test]
    fn trajectories() {
        let tables = rank_series(&[
            freq(1800, &[("a", 3.0), ("b", 2.0)]),
            freq(1801, &[("b", 3.0), ("a", 2.0), ("c", 1.0)]),
            freq(1802, &[("b", 3.0), ("c", 2.0)]),
        ])
        .unwrap();
        assert_eq!(trajectory("a", &tables).points, vec![(1800, 1), (1801, 2)]);
        assert_eq!(trajectory("c", &tables).points, vec![(1801, 3), (1802, 2)]);
        assert!(trajectory("zzz", &tables).is_empty());
        let only = rank_series(&[
            freq(1899, &[("q", 1.0)]),
            freq(1900, &[("p", 1.0), ("only", 0.5)]),
        ])
        .unwrap();
        assert_eq!(trajectory("only", &only).points, vec![(1900, 2)]);
    }

    #[test]
    fn top_k_bounds() {
        let t = rank_table(&freq(1, &[("a", 3.0), ("b", 2.0), ("c", 1.0)])).unwrap();
        assert_eq!(top_k(&t, 1).unwrap(), vec!["a"]);
        assert_eq!(top_k(&t, 3).unwrap(), vec!["a", "b", "c"]);
        assert!(top_k(&t, 4).is_err());
        assert!(top_k(&t, 0).is_err());
        let stop: HashSet<String> = ["a".to_string()].into();
        assert_eq!(top_k_excluding(&t, 2, &stop).unwrap(), vec!["b", "c"]);
        assert!(top_k_excluding(&t, 3, &stop).is_err());
    }

    #[test]
    fn overlap_examples() {
        let id = TranslationMap::identity();
        assert_eq!(overlap(&["a", "b"], &["a", "b"], &id).unwrap(), 1.0);
        assert_eq!(overlap(&["a", "b"], &["c", "d"], &id).unwrap(), 0.0);
        assert!(overlap(&["a"], &["a", "b"], &id).is_err());

        let fr_en =
            TranslationMap::from_pairs([("le", "the"), ("la", "the"), ("de", "of"), ("le", "it")]);
        assert_eq!(fr_en.duplicates(), 1);
        assert_eq!(fr_en.translate("le"), Some("the"));
        // `le` and `la` both map to `the`: counted once.
        let v = overlap(&["the", "of", "and"], &["le", "la", "de"], &fr_en).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        // unmapped tokens are misses
        let v = overlap(&["the", "of"], &["xyz", "de"], &fr_en).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn translation_tsv() {
        let m = TranslationMap::read_tsv("chat\tcat\nchien\tdog\nchat\tpussy\n".as_bytes(), "m")
            .unwrap();
        assert_eq!(m.translate("chat"), Some("cat"));
        assert_eq!(m.duplicates(), 1);
        assert!(TranslationMap::read_tsv("nocolumns\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn rank_tsv_round_trip() {
        let t = rank_table(&freq(7, &[("a", 3.0), ("b", 2.5), ("c", 2.5)])).unwrap();
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        assert_eq!(
            std::str::from_utf8(&buf).unwrap(),
            "1\ta\t3\n2\tb\t2.5\n3\tc\t2.5\n"
        );
        let back = RankTable::read_tsv(7, buf.as_slice(), "m").unwrap();
        assert_eq!(back, t);
        assert!(RankTable::read_tsv(7, "2\ta\t3\n".as_bytes(), "m").is_err());
        assert!(RankTable::read_tsv(7, "1\ta\t3\n2\tb\t4\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn windows_and_unification() {
        let a = rank_table(&freq(1, &[("x", 2.0), ("y", 1.0)])).unwrap();
        let b = rank_table(&freq(2, &[("y", 2.0), ("x", 1.0)])).unwrap();
        let c = rank_table(&freq(3, &[("z", 2.0), ("x", 1.0)])).unwrap();
        let all = vec![a, b, c];
        assert!(!shares_vocabulary(&all));
        let u = unify(&all);
        assert!(shares_vocabulary(&u));
        assert_eq!(u, all);
        assert_eq!(window(&u, 2..=3).len(), 2);
        assert_eq!(window(&u, 5..=9).len(), 0);
        assert!(check_ordered(&[u[1].clone(), u[0].clone()]).is_err());
    }

    proptest! {
        #[test]
        fn rank_table_is_a_sorted_permutation(
            counts in proptest::collection::hash_map("[a-z]{1,6}", 0u32..50, 1..100)
        ) {
            let f = YearlyFrequencyTable::from_pairs(0, counts.iter().map(|(t, &c)| (t.clone(), c as f64)));
            let t = rank_table(&f).unwrap();
            // oracle: full sort with the same tie rule
            let mut expected: Vec<(&String, u32)> = counts.iter().map(|(t, &c)| (t, c)).collect();
            expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.as_bytes().cmp(b.0.as_bytes())));
            let got: Vec<(&str, f64)> = t.iter().map(|(_, tok, c)| (tok, c)).collect();
            prop_assert_eq!(got.len(), expected.len());
            for ((gt, gc), (et, ec)) in got.iter().zip(&expected) {
                prop_assert_eq!(*gt, et.as_str());
                prop_assert_eq!(*gc, *ec as f64);
            }
            for k in 1..t.len() {
                prop_assert!(t.count(k) >= t.count(k + 1));
            }
        }

        #[test]
        fn overlap_is_permutation_invariant(
            mut a in proptest::collection::vec("[a-e]", 1..8),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut b = a.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            b.shuffle(&mut rng);
            let id = TranslationMap::identity();
            let v1 = overlap(&a, &b, &id).unwrap();
            a.shuffle(&mut rng);
            let v2 = overlap(&a, &b, &id).unwrap();
            prop_assert_eq!(v1, v2);
        }
    }
}
