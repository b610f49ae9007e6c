//! The classic circle algorithm, made deterministic.
//!
//! Each node owns `k` points on a circle of `2^point_bits` positions; a key
//! maps to a point and is owned by the next node point clockwise (the
//! smallest point at or above it, wrapping around). Points are derived by
//! hashing the node label with a replica index and an attempt number, so a
//! ring is a pure function of its configuration and the order in which
//! nodes were added and removed. When two nodes contend for a point the
//! incumbent keeps it and the newcomer rehashes with the next attempt
//! number; letting the newcomer win would transfer keys between existing
//! nodes, which the remapping property forbids.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::{sha512_chunks, HashKey};
use crate::table::NodeId;

/// Maximum attempt number tried while resolving a point collision.
const MAX_ATTEMPTS: u32 = 1 << 16;

/// Circle size and replica count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingConfig {
    /// Circle positions are `point_bits`-bit integers; 32 or 64.
    pub point_bits: u32,
    /// Points placed per node.
    pub replicas_k: u32,
}

impl RingConfig {
    pub fn new(point_bits: u32, replicas_k: u32) -> Result<Self> {
        if point_bits != 32 && point_bits != 64 {
            return Err(Error::InvariantViolation(format!(
                "point_bits must be 32 or 64, got {point_bits}"
            )));
        }
        if replicas_k == 0 {
            return Err(Error::InvariantViolation(
                "replicas_k must be at least 1".to_owned(),
            ));
        }
        Ok(RingConfig {
            point_bits,
            replicas_k,
        })
    }

    /// Circle perimeter `2^point_bits`.
    pub fn range(&self) -> u128 {
        1u128 << self.point_bits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogOp {
    Add,
    Remove,
}

/// Ring state: the resolved point map plus the insertion log that fully
/// determines it. Values are immutable; mutations return new states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingState {
    config: RingConfig,
    points: BTreeMap<u64, NodeId>,
    nodes: BTreeSet<NodeId>,
    log: Vec<(NodeId, LogOp)>,
}

/// Wire form: configuration and log only; the point map is reconstructed by
/// replay.
#[derive(Serialize, Deserialize)]
struct RingFile {
    version: u32,
    point_bits: u32,
    replicas_k: u32,
    log: Vec<(String, LogOp)>,
}

const RING_FILE_VERSION: u32 = 1;

/// Point for (label, replica, attempt): the leading `point_bits` bits of
/// SHA-512(label || 0x00 || replica_be32 || 0x00 || attempt_be32).
fn point_for(label: &NodeId, replica: u32, attempt: u32, point_bits: u32) -> u64 {
    let digest = sha512_chunks(&[
        label.as_bytes(),
        &[0x00],
        &replica.to_be_bytes(),
        &[0x00],
        &attempt.to_be_bytes(),
    ]);
    let word = u64::from_be_bytes(digest[..8].try_into().unwrap());
    word >> (64 - point_bits)
}

impl RingState {
    pub fn new(config: RingConfig) -> Self {
        RingState {
            config,
            points: BTreeMap::new(),
            nodes: BTreeSet::new(),
            log: Vec::new(),
        }
    }

    pub fn config(&self) -> RingConfig {
        self.config
    }

    pub fn points(&self) -> &BTreeMap<u64, NodeId> {
        &self.points
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn log(&self) -> &[(NodeId, LogOp)] {
        &self.log
    }

    /// Add a node: place its `k` points, bumping the attempt number past
    /// occupied positions, and append to the log.
    pub fn add(&self, node: NodeId) -> Result<RingState> {
        if self.nodes.contains(&node) {
            return Err(Error::DuplicateNode(node.as_str().to_owned()));
        }
        let mut next = self.clone();
        for replica in 0..self.config.replicas_k {
            let mut attempt = 0u32;
            loop {
                let point = point_for(&node, replica, attempt, self.config.point_bits);
                if let std::collections::btree_map::Entry::Vacant(slot) =
                    next.points.entry(point)
                {
                    slot.insert(node.clone());
                    break;
                }
                attempt += 1;
                if attempt > MAX_ATTEMPTS {
                    return Err(Error::PointSpaceExhausted(node.as_str().to_owned()));
                }
            }
        }
        next.nodes.insert(node.clone());
        next.log.push((node, LogOp::Add));
        Ok(next)
    }

    /// Remove a node: delete exactly its points, append to the log.
    pub fn remove(&self, node: &NodeId) -> Result<RingState> {
        if !self.nodes.contains(node) {
            return Err(Error::NodeNotFound(node.as_str().to_owned()));
        }
        let mut next = self.clone();
        next.points.retain(|_, owner| owner != node);
        next.nodes.remove(node);
        next.log.push((node.clone(), LogOp::Remove));
        Ok(next)
    }

    /// Owner of a raw circle position: the node with the smallest point at
    /// or above it, wrapping to the smallest point overall. Ownership is
    /// half-open `(previous point, point]`, so a key landing exactly on a
    /// node point belongs to that node.
    pub fn owner_of_point(&self, position: u64) -> Result<&NodeId> {
        if self.points.is_empty() {
            return Err(Error::EmptyRing);
        }
        Ok(self
            .points
            .range(position..)
            .next()
            .or_else(|| self.points.iter().next())
            .map(|(_, owner)| owner)
            .expect("non-empty point map"))
    }

    /// Owner of `key`: the key is truncated to the circle width (leading
    /// bits, so a key built by `derive_key` at any wider width agrees with
    /// one derived directly at `point_bits`) and looked up clockwise.
    pub fn lookup(&self, key: &HashKey) -> Result<&NodeId> {
        self.owner_of_point(key.leading_bits(self.config.point_bits))
    }

    /// Lengths of the consecutive arcs between points, in point order; the
    /// first entry is the wrapping arc that ends at the smallest point.
    /// Lengths always sum to `2^point_bits`.
    pub fn segment_lengths(&self) -> Result<Vec<u128>> {
        if self.points.is_empty() {
            return Err(Error::EmptyRing);
        }
        let pts: Vec<u64> = self.points.keys().copied().collect();
        let range = self.config.range();
        let mut lengths = Vec::with_capacity(pts.len());
        let first = u128::from(pts[0]);
        let last = u128::from(*pts.last().unwrap());
        lengths.push(first + range - last);
        for pair in pts.windows(2) {
            lengths.push(u128::from(pair[1]) - u128::from(pair[0]));
        }
        Ok(lengths)
    }

    pub fn serialize(&self) -> Vec<u8> {
        let file = RingFile {
            version: RING_FILE_VERSION,
            point_bits: self.config.point_bits,
            replicas_k: self.config.replicas_k,
            log: self
                .log
                .iter()
                .map(|(id, op)| (id.as_str().to_owned(), *op))
                .collect(),
        };
        serde_json::to_vec(&file).expect("ring serialization cannot fail")
    }

    /// Rebuild a ring by replaying the logged operations in order.
    pub fn deserialize(bytes: &[u8]) -> Result<RingState> {
        let file: RingFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            detail: e.to_string(),
        })?;
        if file.version != RING_FILE_VERSION {
            return Err(Error::InvariantViolation(format!(
                "unsupported ring file version {}",
                file.version
            )));
        }
        let mut state = RingState::new(RingConfig::new(file.point_bits, file.replicas_k)?);
        for (label, op) in file.log {
            let node = NodeId::new(label)
                .map_err(|_| Error::InvariantViolation("empty node label".to_owned()))?;
            state = match op {
                LogOp::Add => state.add(node)?,
                LogOp::Remove => state.remove(&node)?,
            };
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::derive_key;

    fn id(label: &str) -> NodeId {
        NodeId::new(label).unwrap()
    }

    fn ring32(k: u32) -> RingState {
        RingState::new(RingConfig::new(32, k).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(RingConfig::new(32, 1).is_ok());
        assert!(RingConfig::new(64, 3).is_ok());
        assert!(RingConfig::new(16, 1).is_err());
        assert!(RingConfig::new(32, 0).is_err());
    }

    #[test]
    fn add_places_k_points() {
        let r = ring32(3).add(id("alpha")).unwrap();
        assert_eq!(r.points().len(), 3);
        assert!(r.points().values().all(|n| n.as_str() == "alpha"));
    }

    // Golden points computed with an independent SHA-512 implementation.
    #[test]
    fn point_placement_golden_vector() {
        let r = ring32(1).add(id("alpha")).unwrap();
        assert_eq!(r.points().keys().copied().collect::<Vec<_>>(), [1337726517]);
        let r = r.add(id("beta")).unwrap();
        assert!(r.points().contains_key(&109433814));
    }

    #[test]
    fn lookup_golden_vectors() {
        // alpha at 1337726517, beta at 109433814 on the 32-bit circle
        let r = ring32(1).add(id("alpha")).unwrap().add(id("beta")).unwrap();
        let cases = [("hello", "beta"), ("world", "beta"), ("zzz", "alpha")];
        for (input, want) in cases {
            let key = derive_key(input.as_bytes(), 32).unwrap();
            assert_eq!(r.lookup(&key).unwrap().as_str(), want, "{input}");
        }
        // wider keys truncate to the same point
        for (input, want) in cases {
            let key = derive_key(input.as_bytes(), 512).unwrap();
            assert_eq!(r.lookup(&key).unwrap().as_str(), want, "{input} (512)");
        }
    }

    #[test]
    fn key_on_a_node_point_belongs_to_that_node() {
        let r = ring32(1).add(id("alpha")).unwrap().add(id("beta")).unwrap();
        for (point, owner) in r.points() {
            let key = HashKey::new((*point).into(), 32).unwrap();
            assert_eq!(r.lookup(&key).unwrap(), owner);
        }
    }

    #[test]
    fn single_node_owns_every_key() {
        let r = ring32(2).add(id("alpha")).unwrap();
        for input in ["a", "b", "c", "anything"] {
            let key = derive_key(input.as_bytes(), 32).unwrap();
            assert_eq!(r.lookup(&key).unwrap().as_str(), "alpha");
        }
    }

    #[test]
    fn empty_ring_errors() {
        let r = ring32(1);
        let key = derive_key(b"x", 32).unwrap();
        assert_eq!(r.lookup(&key).unwrap_err(), Error::EmptyRing);
        assert_eq!(r.segment_lengths().unwrap_err(), Error::EmptyRing);
    }

    #[test]
    fn remove_deletes_exactly_the_nodes_points() {
        let r = ring32(4).add(id("alpha")).unwrap().add(id("beta")).unwrap();
        let alpha_points: Vec<u64> = r
            .points()
            .iter()
            .filter(|(_, n)| n.as_str() == "alpha")
            .map(|(p, _)| *p)
            .collect();
        let r2 = r.remove(&id("beta")).unwrap();
        assert_eq!(
            r2.points().keys().copied().collect::<Vec<_>>(),
            alpha_points
        );
        let r3 = r2.remove(&id("alpha")).unwrap();
        assert!(r3.points().is_empty());
    }

    #[test]
    fn remove_absent_node_fails() {
        let r = ring32(1).add(id("alpha")).unwrap();
        assert_eq!(
            r.remove(&id("beta")).unwrap_err(),
            Error::NodeNotFound("beta".to_owned())
        );
        assert_eq!(
            r.add(id("alpha")).unwrap_err(),
            Error::DuplicateNode("alpha".to_owned())
        );
    }

    #[test]
    fn segment_lengths_sum_to_perimeter() {
        let mut r = ring32(5);
        for label in ["a", "b", "c", "d"] {
            r = r.add(id(label)).unwrap();
        }
        let lengths = r.segment_lengths().unwrap();
        assert_eq!(lengths.len(), 20);
        assert_eq!(lengths.iter().sum::<u128>(), 1u128 << 32);

        let one = ring32(1).add(id("solo")).unwrap();
        assert_eq!(one.segment_lengths().unwrap(), vec![1u128 << 32]);
    }

    #[test]
    fn two_point_segments() {
        let r = ring32(1).add(id("alpha")).unwrap().add(id("beta")).unwrap();
        let pts: Vec<u64> = r.points().keys().copied().collect();
        let diff = u128::from(pts[1]) - u128::from(pts[0]);
        assert_eq!(
            r.segment_lengths().unwrap(),
            vec![(1u128 << 32) - diff, diff]
        );
    }

    #[test]
    fn replay_reproduces_state() {
        let mut r = RingState::new(RingConfig::new(64, 3).unwrap());
        for label in ["a", "b", "c", "d", "e"] {
            r = r.add(id(label)).unwrap();
        }
        r = r.remove(&id("c")).unwrap();
        r = r.add(id("f")).unwrap();
        let replayed = RingState::deserialize(&r.serialize()).unwrap();
        assert_eq!(replayed, r);
        assert_eq!(replayed.serialize(), r.serialize());
    }

    #[test]
    fn serialized_schema_shape() {
        let r = ring32(3).add(id("alpha")).unwrap();
        assert_eq!(
            String::from_utf8(r.serialize()).unwrap(),
            r#"{"version":1,"point_bits":32,"replicas_k":3,"log":[["alpha","add"]]}"#
        );
    }
}
