//! Shared test helpers: an independent reference implementation of the
//! permutation hash and table builders driven by slot patterns.

// not every test target uses every helper
#![allow(dead_code)]

use permhash::{InsertionStrategy, NodeId, NodeTable};

/// Direct transcription of the rem/div/insert loop over machine integers,
/// kept deliberately separate from the library's digit extraction and
/// streaming head tracking. `None` marks a free slot.
pub fn oracle_permutation(
    slots: &[Option<&str>],
    mut key: u128,
    strategy: InsertionStrategy,
) -> Vec<String> {
    let mut seq: Vec<Option<&str>> = Vec::with_capacity(slots.len());
    for (i, slot) in slots.iter().enumerate() {
        let base = (i + 1) as u128;
        let digit = (key % base) as usize;
        key /= base;
        let idx = match strategy {
            InsertionStrategy::FromStart => digit,
            InsertionStrategy::FromEnd => seq.len() - digit,
        };
        seq.insert(idx, *slot);
    }
    seq.into_iter().flatten().map(str::to_owned).collect()
}

/// Build a table whose slot `i` is live iff `live[i]`, going through the
/// public add/remove path (dead slots are removed after construction, so
/// they leave markers). The last slot must be live.
pub fn table_from_pattern(live: &[bool], strategy: InsertionStrategy) -> NodeTable {
    assert!(live.last().copied().unwrap_or(true), "table cannot end in a marker");
    let labels: Vec<String> = (0..live.len()).map(|i| format!("n{i}")).collect();
    let mut table = NodeTable::new(
        labels
            .iter()
            .map(|l| NodeId::new(l.clone()).unwrap())
            .collect(),
        strategy,
    )
    .unwrap();
    for (i, live) in live.iter().enumerate() {
        if !live {
            table = table.remove(&NodeId::new(labels[i].clone()).unwrap()).unwrap();
        }
    }
    assert_eq!(table.slot_count(), live.len());
    table
}

/// The slot pattern as the oracle wants it: `Some(label)` per live slot.
pub fn pattern_labels(live: &[bool]) -> Vec<Option<String>> {
    live.iter()
        .enumerate()
        .map(|(i, live)| live.then(|| format!("n{i}")))
        .collect()
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}
