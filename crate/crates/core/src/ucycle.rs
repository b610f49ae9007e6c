//! Universal cycles of shorthand permutations.
//!
//! For a node set of size `n`, a cycle is a length-`n!` symbol sequence in
//! which every cyclic window of `n - 1` symbols is a distinct duplicate-free
//! sequence (a shorthand permutation: the missing symbol is implied).
//! Reading the cycle as `n!` equal circle segments gives each node exactly
//! `n!/n` segments, and substituting a removed node by the next surviving
//! symbol redistributes its segments equally among the survivors while
//! leaving every survivor's own segments untouched.
//!
//! Construction here is a brute-force depth-first search for a Hamiltonian
//! cycle over the windows, linked by `n - 2`-symbol overlap, which is all
//! desk scale needs; the result is deterministic for a fixed node ordering
//! because children are explored in node-set order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::key::HashKey;
use crate::table::NodeId;

/// Default node-expansion budget for the n = 6 search.
pub const DEFAULT_BUILD_BUDGET: u64 = 100_000_000;

/// Largest node set `build_cycle` accepts.
pub const MAX_BUILD_NODES: usize = 6;

/// A verified universal cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    symbols: Vec<NodeId>,
    nodes: Vec<NodeId>,
}

impl Cycle {
    pub fn symbols(&self) -> &[NodeId] {
        &self.symbols
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn into_symbols(self) -> Vec<NodeId> {
        self.symbols
    }
}

/// Why a sequence fails verification, anchored at the first offending
/// window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleViolation {
    EmptyNodeSet,
    DuplicateNodeInSet { index: usize },
    UnknownSymbol { index: usize },
    WrongLength { expected: u128, actual: usize },
    DuplicateInWindow { window_index: usize },
    RepeatedWindow { window_index: usize, first_seen: usize },
}

/// Verification outcome; `violation` is `None` exactly when `valid`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub valid: bool,
    pub violation: Option<CycleViolation>,
}

impl CycleReport {
    fn ok() -> Self {
        CycleReport {
            valid: true,
            violation: None,
        }
    }

    fn fail(violation: CycleViolation) -> Self {
        CycleReport {
            valid: false,
            violation: Some(violation),
        }
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Check the universal-cycle invariants: length `n!`, every cyclic window of
/// `n - 1` symbols duplicate-free, all windows distinct.
pub fn verify_cycle(symbols: &[NodeId], node_set: &[NodeId]) -> CycleReport {
    if node_set.is_empty() {
        return CycleReport::fail(CycleViolation::EmptyNodeSet);
    }
    for (i, node) in node_set.iter().enumerate() {
        if node_set[..i].contains(node) {
            return CycleReport::fail(CycleViolation::DuplicateNodeInSet { index: i });
        }
    }
    for (i, symbol) in symbols.iter().enumerate() {
        if !node_set.contains(symbol) {
            return CycleReport::fail(CycleViolation::UnknownSymbol { index: i });
        }
    }
    let n = node_set.len();
    let expected = factorial(n);
    if symbols.len() as u128 != expected {
        return CycleReport::fail(CycleViolation::WrongLength {
            expected,
            actual: symbols.len(),
        });
    }
    let window_len = n - 1;
    let mut seen: HashMap<Vec<&NodeId>, usize> = HashMap::with_capacity(symbols.len());
    for start in 0..symbols.len() {
        let window: Vec<&NodeId> = (0..window_len)
            .map(|offset| &symbols[(start + offset) % symbols.len()])
            .collect();
        for (i, sym) in window.iter().enumerate() {
            if window[..i].contains(sym) {
                return CycleReport::fail(CycleViolation::DuplicateInWindow {
                    window_index: start,
                });
            }
        }
        if let Some(first_seen) = seen.insert(window, start) {
            return CycleReport::fail(CycleViolation::RepeatedWindow {
                window_index: start,
                first_seen,
            });
        }
    }
    CycleReport::ok()
}

/// Build a universal cycle for `node_set` with the default budget.
pub fn build_cycle(node_set: &[NodeId]) -> Result<Cycle> {
    build_cycle_with_budget(node_set, DEFAULT_BUILD_BUDGET)
}

/// Build a universal cycle by depth-first search for a Hamiltonian cycle
/// over shorthand permutations; `budget` caps the number of search-node
/// expansions. Supported sizes are 2 ..= 6 (the search space at 7 is out of
/// desk range).
pub fn build_cycle_with_budget(node_set: &[NodeId], budget: u64) -> Result<Cycle> {
    let n = node_set.len();
    if !(2..=MAX_BUILD_NODES).contains(&n) {
        return Err(Error::UnsupportedSize(n));
    }
    for (i, node) in node_set.iter().enumerate() {
        if node_set[..i].contains(node) {
            return Err(Error::DuplicateNode(node.as_str().to_owned()));
        }
    }

    // Windows as index vectors; successors of w are w[1..] extended by
    // either of the two symbols absent from w[1..], tried in node order.
    let total = factorial(n) as usize;
    let window_len = n - 1;
    let start: Vec<u8> = (0..window_len as u8).collect();
    let mut path: Vec<Vec<u8>> = vec![start.clone()];
    let mut visited: HashSet<Vec<u8>> = HashSet::with_capacity(total);
    visited.insert(start.clone());
    // per-depth iterator position over the (at most two) candidate symbols
    let mut choice: Vec<u8> = vec![0];
    let mut expansions: u64 = 0;

    'search: loop {
        if path.len() == total {
            // close the cycle: the start window must extend the last one
            let last = path.last().unwrap();
            if start[..window_len - 1] == last[1..] {
                let symbols = path
                    .iter()
                    .map(|w| node_set[w[0] as usize].clone())
                    .collect();
                return Ok(Cycle {
                    symbols,
                    nodes: node_set.to_vec(),
                });
            }
        } else {
            let depth = path.len() - 1;
            let current = path[depth].clone();
            while choice[depth] < n as u8 {
                let candidate = choice[depth];
                choice[depth] += 1;
                if current[1..].contains(&candidate) {
                    continue;
                }
                let mut next: Vec<u8> = current[1..].to_vec();
                next.push(candidate);
                if visited.contains(&next) {
                    continue;
                }
                expansions += 1;
                if expansions > budget {
                    return Err(Error::BudgetExceeded);
                }
                visited.insert(next.clone());
                path.push(next);
                choice.push(0);
                continue 'search;
            }
        }
        // dead end or unclosable full path: backtrack
        let dropped = path.pop().unwrap();
        choice.pop();
        visited.remove(&dropped);
        if path.is_empty() {
            // a universal cycle always exists for these sizes, so an
            // exhausted search means the caller's node set was unusable
            return Err(Error::BudgetExceeded);
        }
    }
}

/// Replace every symbol in `removed` by the next symbol in cycle order that
/// survives, scanning forward and wrapping past the end. Survivors' symbols
/// keep their positions.
pub fn substitute_removed(symbols: &[NodeId], removed: &BTreeSet<NodeId>) -> Result<Vec<NodeId>> {
    if removed.is_empty() {
        return Ok(symbols.to_vec());
    }
    if !symbols.iter().any(|s| !removed.contains(s)) {
        return Err(Error::NoSurvivors);
    }
    let mut out = Vec::with_capacity(symbols.len());
    for i in 0..symbols.len() {
        if removed.contains(&symbols[i]) {
            let survivor = (1..symbols.len())
                .map(|step| &symbols[(i + step) % symbols.len()])
                .find(|s| !removed.contains(*s))
                .expect("survivor exists");
            out.push(survivor.clone());
        } else {
            out.push(symbols[i].clone());
        }
    }
    Ok(out)
}

/// Node for `key` on the circle the cycle describes: segment `key mod n!`
/// holds the symbol at that index, with removed symbols resolved the same
/// way as `substitute_removed`.
pub fn cycle_lookup(
    symbols: &[NodeId],
    key: &HashKey,
    removed: &BTreeSet<NodeId>,
) -> Result<NodeId> {
    if symbols.is_empty() || !symbols.iter().any(|s| !removed.contains(s)) {
        return Err(Error::NoSurvivors);
    }
    let len = num_bigint::BigUint::from(symbols.len());
    let idx_big = key.value() % &len;
    let idx: usize = idx_big.try_into().expect("index below cycle length");
    if !removed.contains(&symbols[idx]) {
        return Ok(symbols[idx].clone());
    }
    let survivor = (1..symbols.len())
        .map(|step| &symbols[(idx + step) % symbols.len()])
        .find(|s| !removed.contains(*s))
        .expect("survivor exists");
    Ok(survivor.clone())
}

/// Exact multiset counts of the symbols.
pub fn count_symbols(symbols: &[NodeId]) -> BTreeMap<NodeId, u64> {
    let mut counts = BTreeMap::new();
    for symbol in symbols {
        *counts.entry(symbol.clone()).or_insert(0) += 1;
    }
    counts
}
