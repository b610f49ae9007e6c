//! Consistent hashing with exact uniformity.
//!
//! The central idea: instead of placing nodes at random points on a circle,
//! read the key as mixed-radix digits and use them to build a permutation
//! of the node table. Over a full digit range every ordering appears
//! exactly once, so key distribution is perfectly uniform, and because each
//! node's position decisions are pinned to fixed parts of the key, adding
//! or removing a node remaps only the minimal set of keys.
//!
//! Modules:
//! - [`table`]: node identities and the slot table recording membership
//!   history (removals leave free markers so survivors keep their digits).
//! - [`key`]: arbitrary-precision keys and byte-string key derivation.
//! - [`perm`]: the permutation hash itself, single-result variants, and
//!   key-entropy capacity bounds.
//! - [`ring`]: the classic circle algorithm, deterministic, as a baseline.
//! - [`ucycle`]: universal cycles of shorthand permutations, the circle
//!   construction that motivates the permutation view.
//! - [`analysis`]: exact censuses, remap matrices, the simple-mod baseline
//!   and ring statistics.

pub mod analysis;
pub mod error;
pub mod key;
pub mod perm;
pub mod ring;
pub mod table;
pub mod ucycle;

pub use error::{Error, Result};
pub use key::{derive_key, HashKey};
pub use perm::{capacity, entropy_guard, first_live, first_simple, min_key_bits, permute, Permutation};
pub use table::{InsertionStrategy, NodeId, NodeTable, Slot};
