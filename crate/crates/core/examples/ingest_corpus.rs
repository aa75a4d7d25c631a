//! Aggregates a 1-gram TSV file into per-year frequency tables and ranks them.
//!
//! ```text
//! cargo run --example ingest_corpus [-- path/to/1gram.tsv]
//! ```

use std::path::PathBuf;

use rank_diversity::ingest::{ingest_files, IngestOptions, TokenPolicy};
use rank_diversity::rank::{rank_series, top_k};

fn main() -> rank_diversity::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/tests/fixtures/corpus_3slice.tsv"
            ))
        });
    let opts = IngestOptions {
        policy: TokenPolicy {
            strip_pos_tags: true,
            lowercase: true,
            ..TokenPolicy::default()
        },
        ..IngestOptions::default()
    };
    let (tables, stats) = ingest_files(&[path], &opts)?;
    println!(
        "{} records, {} malformed lines skipped, {} tokens rejected",
        stats.records_read, stats.malformed_lines, stats.rejected_tokens
    );
    let ranked = rank_series(&tables)?;
    for (freq, ranks) in tables.iter().zip(&ranked) {
        println!(
            "{}: {} types, {} tokens, top 5 {:?}",
            freq.slice,
            freq.len(),
            freq.total(),
            top_k(ranks, 5)?
        );
    }
    Ok(())
}
