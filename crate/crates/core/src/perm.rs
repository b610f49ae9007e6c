//! The permutation hash engine.
//!
//! The key is read as mixed-radix digits, one per table slot: slot `i` uses
//! base `i + 1`, so the digit is `key mod (i + 1)` and the key is then
//! divided by `i + 1`. Each slot's symbol is inserted into the permutation
//! built so far at the position the strategy derives from the digit. Free
//! slots consume their digit exactly like occupied ones (their markers are
//! filtered from the output), which is what keeps every surviving node's
//! ordering decisions pinned to the same parts of the key after a removal.
//!
//! Over keys `0 .. L!` (L = slot count) every ordering of the L slot symbols
//! is produced exactly once, so the head of the filtered permutation is
//! exactly uniform over live nodes, and adding or removing a node remaps the
//! minimal number of keys. Keys wider than the table needs are fine: the
//! leftover quotient after the last slot is discarded.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::key::HashKey;
use crate::table::{NodeId, NodeTable, Slot};

/// A duplicate-free ordering of exactly the live nodes of a table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<NodeId>,
}

impl Permutation {
    pub fn first(&self) -> Option<&NodeId> {
        self.order.first()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeId> {
        self.order.iter()
    }

    pub fn into_vec(self) -> Vec<NodeId> {
        self.order
    }
}

/// Slot symbol during permutation construction. Free markers are distinct
/// per slot index so that "every ordering of the L symbols appears exactly
/// once over keys 0..L!" is well defined even with several free slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Symbol<'a> {
    Live(&'a NodeId),
    Free(usize),
}

/// The mixed-radix digits of `key` for a table of `len` slots, least
/// significant first. Digit `i` is in `[0, i]`.
fn slot_digits(key: &BigUint, len: usize) -> Vec<u32> {
    let mut digits = Vec::with_capacity(len);
    let mut rest = key.clone();
    let mut next = 1usize;
    while next <= len {
        // Quotients shrink by a factorial; switch to machine arithmetic as
        // soon as the remainder fits.
        if let Some(mut small) = rest.to_u128() {
            for base in next..=len {
                digits.push((small % base as u128) as u32);
                small /= base as u128;
            }
            return digits;
        }
        let base = BigUint::from(next);
        let (q, r) = rest.div_rem(&base);
        digits.push(r.to_u32().expect("remainder below slot count"));
        rest = q;
        next += 1;
    }
    digits
}

/// Full slot-symbol ordering for `key`, free markers included.
pub(crate) fn raw_permutation<'t>(table: &'t NodeTable, key: &HashKey) -> Result<Vec<Symbol<'t>>> {
    if table.slot_count() == 0 {
        return Err(Error::EmptyTable);
    }
    let digits = slot_digits(key.value(), table.slot_count());
    let strategy = table.strategy();
    let mut seq: Vec<Symbol<'t>> = Vec::with_capacity(table.slot_count());
    for (i, slot) in table.slots().iter().enumerate() {
        let idx = strategy.insert_index(seq.len(), digits[i] as usize);
        let symbol = match slot {
            Slot::Occupied(id) => Symbol::Live(id),
            Slot::Free => Symbol::Free(i),
        };
        seq.insert(idx, symbol);
    }
    Ok(seq)
}

/// The hash function proper: the ordering of all live nodes selected by
/// `key`, using the strategy bound to the table.
pub fn permute(table: &NodeTable, key: &HashKey) -> Result<Permutation> {
    let order = raw_permutation(table, key)?
        .into_iter()
        .filter_map(|s| match s {
            Symbol::Live(id) => Some(id.clone()),
            Symbol::Free(_) => None,
        })
        .collect();
    Ok(Permutation { order })
}

/// First element of the permutation for tables without free slots.
///
/// Tracks only the current head: a slot's symbol replaces it whenever the
/// strategy places that symbol at position zero. Cannot cope with markers,
/// hence the tombstone-free precondition.
pub fn first_simple<'t>(table: &'t NodeTable, key: &HashKey) -> Result<&'t NodeId> {
    if table.slot_count() == 0 {
        return Err(Error::EmptyTable);
    }
    if table.slots().iter().any(Slot::is_free) {
        return Err(Error::HasTombstones);
    }
    let digits = slot_digits(key.value(), table.slot_count());
    let strategy = table.strategy();
    let mut head: Option<&NodeId> = None;
    for (i, slot) in table.slots().iter().enumerate() {
        if strategy.insert_index(i, digits[i] as usize) == 0 {
            head = slot.node();
        }
    }
    // slot 0 always inserts at position 0, so a head exists
    Ok(head.expect("non-empty table yields a head"))
}

/// First live element of the permutation, skipping free markers, without
/// materializing the permutation.
///
/// State: the earliest live symbol seen so far and its position in the
/// partial permutation. Positions before it hold only markers, so a live
/// insertion at or before that position becomes the new earliest, and a
/// marker insertion there merely shifts it right by one.
pub fn first_live<'t>(table: &'t NodeTable, key: &HashKey) -> Result<&'t NodeId> {
    if table.live_count() == 0 {
        return Err(Error::NoLiveNodes);
    }
    let digits = slot_digits(key.value(), table.slot_count());
    let strategy = table.strategy();
    let mut best: Option<(usize, &NodeId)> = None;
    for (i, slot) in table.slots().iter().enumerate() {
        let idx = strategy.insert_index(i, digits[i] as usize);
        match (slot, &mut best) {
            (Slot::Occupied(id), None) => best = Some((idx, id)),
            (Slot::Occupied(id), Some((pos, _))) if idx <= *pos => best = Some((idx, id)),
            (Slot::Free, Some((pos, _))) if idx <= *pos => *pos += 1,
            _ => {}
        }
    }
    Ok(best.expect("live slot present").1)
}

/// Largest node count `n` with `n! <= 2^bits`, i.e. how many nodes a key of
/// the given width can choose between with exact uniformity.
pub fn capacity(bits: u64) -> u64 {
    assert!(bits >= 1, "bits must be positive");
    let limit = BigUint::one() << bits;
    let mut factorial = BigUint::one();
    let mut n = 0u64;
    loop {
        let next = &factorial * BigUint::from(n + 1);
        if next > limit {
            return n;
        }
        factorial = next;
        n += 1;
    }
}

/// Smallest key width `b` with `2^b >= n! * 2^margin_bits`.
pub fn min_key_bits(n: u64, margin_bits: u64) -> u64 {
    assert!(n >= 1, "node count must be positive");
    let mut factorial = BigUint::one();
    for i in 2..=n {
        factorial *= BigUint::from(i);
    }
    // ceil(log2(n!)): bits() is floor(log2)+1, exact powers of two land on it
    let bits = factorial.bits();
    let ceil_log2 = if factorial == BigUint::one() << (bits - 1) {
        bits - 1
    } else {
        bits
    };
    ceil_log2 + margin_bits
}

/// Outcome of the key-entropy check for a lookup against a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntropyGuard {
    /// ceil(log2(L!)) for the table's slot count.
    pub required_bits: u64,
    pub source_bits: u64,
    /// True when `required_bits > source_bits - 32`, i.e. the key is too
    /// narrow for the relative bias over orderings to stay below 2^-32.
    pub breached: bool,
}

/// Check whether `key` carries enough entropy for `table`. Callers decide
/// whether a breach is a warning or an error; the hash functions themselves
/// never reject a key for being the wrong size.
pub fn entropy_guard(table: &NodeTable, key: &HashKey) -> EntropyGuard {
    let required_bits = if table.slot_count() == 0 {
        0
    } else {
        min_key_bits(table.slot_count() as u64, 0)
    };
    let breached = i128::from(required_bits) > i128::from(key.source_bits()) - 32;
    EntropyGuard {
        required_bits,
        source_bits: key.source_bits(),
        breached,
    }
}
