//! Overlap of the most frequent words of two languages through a translation
//! map, per year.
//!
//! ```text
//! cargo run --example translation_overlap
//! ```

use rank_diversity::rank::{overlap, top_k, RankTable, TranslationMap};

fn main() -> rank_diversity::Result<()> {
    let english = [
        (1900, ["the", "of", "and", "to", "in"]),
        (1950, ["the", "of", "and", "to", "a"]),
    ];
    let spanish = [
        (1900, ["de", "la", "que", "el", "en"]),
        (1950, ["de", "la", "el", "y", "en"]),
    ];
    let map = TranslationMap::from_pairs([
        ("de", "of"),
        ("la", "the"),
        ("el", "the"),
        ("y", "and"),
        ("en", "in"),
    ]);
    for ((year, en), (_, es)) in english.iter().zip(&spanish) {
        let en = RankTable::from_ranked(*year, en, None)?;
        let es = RankTable::from_ranked(*year, es, None)?;
        let value = overlap(&top_k(&en, 5)?, &top_k(&es, 5)?, &map)?;
        println!("{year}: overlap of top 5 = {value:.2}");
    }
    Ok(())
}
