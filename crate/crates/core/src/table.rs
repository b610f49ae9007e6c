//! Node identities and the slot table that records membership history.
//!
//! A [`NodeTable`] is an ordered list of slots, each either occupied by a
//! node or holding a free marker left behind by a removal. The order of
//! slots is the order in which nodes were added (removals never shift the
//! survivors), which is exactly the state the permutation hash needs: slot
//! `i` is driven by the base-`i+1` digit of the key, and that assignment
//! must never change for a node that stays in the table.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha512};

use crate::error::{Error, Result};

/// Identifier of a node: a non-empty UTF-8 label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::EmptyNodeLabel);
        }
        Ok(NodeId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;

    fn try_from(label: String) -> Result<Self> {
        NodeId::new(label)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

/// How a key digit is turned into an insertion position.
///
/// When the permutation built so far has length `L`, the digit for the next
/// slot lies in `[0, L]`. `FromStart` inserts at that distance from the head
/// (the reference formulation); `FromEnd` inserts at that distance from the
/// tail (the tree/table formulation). Both are bijections on `[0, L]`, which
/// is all the algorithm requires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionStrategy {
    FromStart,
    FromEnd,
}

impl InsertionStrategy {
    /// Insertion index for `digit` into a sequence of current length `len`.
    pub fn insert_index(self, len: usize, digit: usize) -> usize {
        debug_assert!(digit <= len);
        match self {
            InsertionStrategy::FromStart => digit,
            InsertionStrategy::FromEnd => len - digit,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InsertionStrategy::FromStart => "from_start",
            InsertionStrategy::FromEnd => "from_end",
        }
    }

    /// Parse the serialized name, `"from_start"` or `"from_end"`.
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "from_start" => Some(InsertionStrategy::FromStart),
            "from_end" => Some(InsertionStrategy::FromEnd),
            _ => None,
        }
    }
}

impl fmt::Display for InsertionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One position in a [`NodeTable`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Occupied(NodeId),
    Free,
}

impl Slot {
    pub fn node(&self) -> Option<&NodeId> {
        match self {
            Slot::Occupied(id) => Some(id),
            Slot::Free => None,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Slot::Free)
    }
}

/// Ordered slots plus the insertion strategy bound at creation.
///
/// Invariants maintained by every constructor and mutator:
/// - occupied labels are pairwise distinct;
/// - the last slot, if any, is occupied (trailing markers are trimmed).
///
/// Tables are immutable values; [`NodeTable::add`] and [`NodeTable::remove`]
/// return new tables, so a shared table can be read concurrently without
/// locking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeTable {
    slots: Vec<Slot>,
    strategy: InsertionStrategy,
}

/// Wire form of a table: `{"version":1,"strategy":...,"slots":[...]}` with
/// `null` marking a free slot. Field order is the canonical key order.
#[derive(Serialize, Deserialize)]
struct TableFile {
    version: u32,
    strategy: InsertionStrategy,
    slots: Vec<Option<String>>,
}

const TABLE_FILE_VERSION: u32 = 1;

impl NodeTable {
    /// Build a table with all slots occupied, in the given order.
    pub fn new(nodes: Vec<NodeId>, strategy: InsertionStrategy) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if nodes[..i].contains(node) {
                return Err(Error::DuplicateNode(node.as_str().to_owned()));
            }
        }
        Ok(NodeTable {
            slots: nodes.into_iter().map(Slot::Occupied).collect(),
            strategy,
        })
    }

    pub fn strategy(&self) -> InsertionStrategy {
        self.strategy
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn live_count(&self) -> usize {
        self.slots.iter().filter(|s| !s.is_free()).count()
    }

    /// Occupied node ids in slot order.
    pub fn live_nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.slots.iter().filter_map(Slot::node)
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.live_nodes().any(|n| n == node)
    }

    /// Add a node: it fills the lowest-index free slot if one exists,
    /// otherwise a new slot is appended.
    pub fn add(&self, node: NodeId) -> Result<NodeTable> {
        if self.contains(&node) {
            return Err(Error::DuplicateNode(node.as_str().to_owned()));
        }
        let mut slots = self.slots.clone();
        match slots.iter_mut().find(|s| s.is_free()) {
            Some(free) => *free = Slot::Occupied(node),
            None => slots.push(Slot::Occupied(node)),
        }
        Ok(NodeTable {
            slots,
            strategy: self.strategy,
        })
    }

    /// Remove a node: its slot becomes a free marker, then any trailing
    /// free slots (possibly several, if the marker cascades into older
    /// ones) are deleted.
    pub fn remove(&self, node: &NodeId) -> Result<NodeTable> {
        let pos = self
            .slots
            .iter()
            .position(|s| s.node() == Some(node))
            .ok_or_else(|| Error::NodeNotFound(node.as_str().to_owned()))?;
        let mut slots = self.slots.clone();
        slots[pos] = Slot::Free;
        while slots.last().is_some_and(Slot::is_free) {
            slots.pop();
        }
        Ok(NodeTable {
            slots,
            strategy: self.strategy,
        })
    }

    /// Canonical UTF-8 JSON encoding. The same table always serializes to
    /// identical bytes.
    pub fn serialize(&self) -> Vec<u8> {
        let file = TableFile {
            version: TABLE_FILE_VERSION,
            strategy: self.strategy,
            slots: self
                .slots
                .iter()
                .map(|s| s.node().map(|n| n.as_str().to_owned()))
                .collect(),
        };
        serde_json::to_vec(&file).expect("table serialization cannot fail")
    }

    pub fn deserialize(bytes: &[u8]) -> Result<NodeTable> {
        let file: TableFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            detail: e.to_string(),
        })?;
        if file.version != TABLE_FILE_VERSION {
            return Err(Error::InvariantViolation(format!(
                "unsupported table file version {}",
                file.version
            )));
        }
        if file.slots.last().is_some_and(Option::is_none) {
            return Err(Error::InvariantViolation(
                "table ends with a free slot".to_owned(),
            ));
        }
        let mut slots = Vec::with_capacity(file.slots.len());
        let mut seen: Vec<&str> = Vec::new();
        for label in &file.slots {
            match label {
                None => slots.push(Slot::Free),
                Some(label) => {
                    if seen.contains(&label.as_str()) {
                        return Err(Error::InvariantViolation(format!(
                            "duplicate label {label:?}"
                        )));
                    }
                    seen.push(label);
                    let id = NodeId::new(label.clone()).map_err(|_| {
                        Error::InvariantViolation("empty node label".to_owned())
                    })?;
                    slots.push(Slot::Occupied(id));
                }
            }
        }
        Ok(NodeTable {
            slots,
            strategy: file.strategy,
        })
    }

    /// Short hex digest of the canonical encoding, embedded in analysis
    /// reports so a report can be tied back to its exact inputs.
    pub fn fingerprint(&self) -> String {
        let digest = Sha512::digest(self.serialize());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}
