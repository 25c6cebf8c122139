use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::{CorpusPartition, DocumentRecord};

/// Accumulates records into per-domain partitions. Duplicate URLs within a
/// (domain, language) keep the record with the longest text, then the one
/// whose serialized form sorts first, so the outcome does not depend on
/// insertion order and `merge` is associative.
#[derive(Debug, Default)]
pub struct Grouper {
    docs: BTreeMap<(String, String), BTreeMap<String, DocumentRecord>>,
}

impl Grouper {
    pub fn insert(&mut self, rec: DocumentRecord) {
        let slot = self
            .docs
            .entry((rec.domain.clone(), rec.lang.clone()))
            .or_default();
        match slot.entry(rec.url.clone()) {
            Entry::Vacant(v) => {
                v.insert(rec);
            }
            Entry::Occupied(mut o) => {
                if prefer(&rec, o.get()) == Ordering::Less {
                    o.insert(rec);
                }
            }
        }
    }

    pub fn merge(&mut self, other: Grouper) {
        for (_, by_url) in other.docs {
            for (_, rec) in by_url {
                self.insert(rec);
            }
        }
    }

    pub fn finish(self) -> BTreeMap<String, CorpusPartition> {
        let mut out: BTreeMap<String, CorpusPartition> = BTreeMap::new();
        for ((domain, lang), by_url) in self.docs {
            out.entry(domain.clone())
                .or_insert_with(|| CorpusPartition::new(domain))
                .by_lang
                .insert(lang, by_url.into_values().collect());
        }
        out
    }
}

// Less means `a` wins.
fn prefer(a: &DocumentRecord, b: &DocumentRecord) -> Ordering {
    b.raw_length.cmp(&a.raw_length).then_with(|| {
        let sa = serde_json::to_string(a).expect("records serialize");
        let sb = serde_json::to_string(b).expect("records serialize");
        sa.cmp(&sb)
    })
}

/// Groups records by domain and language, deduplicating URLs.
pub fn group_by_domain(
    records: impl IntoIterator<Item = DocumentRecord>,
) -> BTreeMap<String, CorpusPartition> {
    let mut g = Grouper::default();
    for r in records {
        g.insert(r);
    }
    g.finish()
}
