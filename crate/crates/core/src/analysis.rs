//! The verification engine: exact censuses, remap matrices, the simple-mod
//! baseline, and the classic ring's statistical behaviour.
//!
//! Exact modes enumerate every key in `[0, L!)` for a table of `L` slots,
//! which is what turns the uniformity and remapping claims into checkable
//! facts rather than estimates; sampled modes use a seeded generator so
//! every report is reproducible from its embedded inputs.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::key::HashKey;
use crate::perm::{first_live, min_key_bits};
use crate::table::{InsertionStrategy, NodeTable};

/// Exact mode is capped here: 8! = 40320 keys.
pub const EXACT_SLOT_CAP: usize = 8;

/// Key range for a census or remap run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Enumerate keys `0 .. L!` where `L` is the slot count (the larger of
    /// the two for a remap).
    Exact,
    /// `samples` seeded random keys, wide enough for the table.
    Sampled { samples: u64, seed: u64 },
}

/// Serialized form of the key range actually used, embedded in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyRange {
    Exact { keys: u64 },
    Sampled { samples: u64, seed: u64, key_bits: u64 },
}

/// First-position counts per node over a key range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusReport {
    pub table_fingerprint: String,
    pub strategy: InsertionStrategy,
    pub slot_count: usize,
    pub live_count: usize,
    pub key_range: KeyRange,
    pub counts: BTreeMap<String, u64>,
}

fn factorial_u64(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Seeded keys wide enough that the residual bias over a table of `slots`
/// slots is below 2^-64.
fn sampled_key_bits(slots: usize) -> u64 {
    let needed = min_key_bits(slots.max(1) as u64, 64);
    needed.div_ceil(64) * 64
}

fn random_key(rng: &mut ChaCha8Rng, bits: u64) -> HashKey {
    let words = (bits / 64) as usize;
    let mut value = BigUint::from(0u8);
    for _ in 0..words {
        value = (value << 64u32) | BigUint::from(rng.next_u64());
    }
    HashKey::new(value, bits).expect("generated key fits its width")
}

/// Count first-position hits over an explicit exact key range. Counting is
/// associative over subranges, which is what makes census reports
/// independent of any internal partitioning.
fn census_range(
    table: &NodeTable,
    from: u64,
    to: u64,
    counts: &mut BTreeMap<String, u64>,
) -> Result<()> {
    for k in from..to {
        let node = first_live(table, &HashKey::from_u128(u128::from(k)))?;
        *counts.entry(node.as_str().to_owned()).or_insert(0) += 1;
    }
    Ok(())
}

/// First-position census of `table` under its bound strategy.
pub fn census(table: &NodeTable, mode: Mode) -> Result<CensusReport> {
    if table.live_count() == 0 {
        return Err(Error::NoLiveNodes);
    }
    let mut counts: BTreeMap<String, u64> = table
        .live_nodes()
        .map(|n| (n.as_str().to_owned(), 0))
        .collect();
    let key_range = match mode {
        Mode::Exact => {
            if table.slot_count() > EXACT_SLOT_CAP {
                return Err(Error::RangeTooLarge {
                    cap: EXACT_SLOT_CAP,
                    actual: table.slot_count(),
                });
            }
            let keys = factorial_u64(table.slot_count());
            census_range(table, 0, keys, &mut counts)?;
            KeyRange::Exact { keys }
        }
        Mode::Sampled { samples, seed } => {
            let key_bits = sampled_key_bits(table.slot_count());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let node = first_live(table, &random_key(&mut rng, key_bits))?;
                *counts.entry(node.as_str().to_owned()).or_insert(0) += 1;
            }
            KeyRange::Sampled {
                samples,
                seed,
                key_bits,
            }
        }
    };
    Ok(CensusReport {
        table_fingerprint: table.fingerprint(),
        strategy: table.strategy(),
        slot_count: table.slot_count(),
        live_count: table.live_count(),
        key_range,
        counts,
    })
}

/// Key movement between two tables: `matrix[old_owner][new_owner]` counts
/// over the shared key range, plus moved/unmoved totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RemapReport {
    pub before_fingerprint: String,
    pub after_fingerprint: String,
    pub strategy: InsertionStrategy,
    pub key_range: KeyRange,
    pub matrix: BTreeMap<String, BTreeMap<String, u64>>,
    pub moved: u64,
    pub unmoved: u64,
}

impl RemapReport {
    /// Row sums, which equal the before-table census over the same range.
    pub fn row_totals(&self) -> BTreeMap<String, u64> {
        self.matrix
            .iter()
            .map(|(old, row)| (old.clone(), row.values().sum()))
            .collect()
    }
}

/// Full movement matrix between `before` and `after`, which must share a
/// strategy. Exact mode enumerates `[0, L!)` for the larger slot count `L`.
pub fn remap_matrix(before: &NodeTable, after: &NodeTable, mode: Mode) -> Result<RemapReport> {
    if before.strategy() != after.strategy() {
        return Err(Error::StrategyMismatch);
    }
    if before.live_count() == 0 || after.live_count() == 0 {
        return Err(Error::NoLiveNodes);
    }
    let slots = before.slot_count().max(after.slot_count());
    let mut matrix: BTreeMap<String, BTreeMap<String, u64>> = before
        .live_nodes()
        .map(|n| (n.as_str().to_owned(), BTreeMap::new()))
        .collect();
    let mut moved = 0u64;
    let mut unmoved = 0u64;
    let mut tally = |old: &str, new: &str| {
        *matrix
            .entry(old.to_owned())
            .or_default()
            .entry(new.to_owned())
            .or_insert(0) += 1;
        if old == new {
            unmoved += 1;
        } else {
            moved += 1;
        }
    };
    let key_range = match mode {
        Mode::Exact => {
            if slots > EXACT_SLOT_CAP {
                return Err(Error::RangeTooLarge {
                    cap: EXACT_SLOT_CAP,
                    actual: slots,
                });
            }
            let keys = factorial_u64(slots);
            for k in 0..keys {
                let key = HashKey::from_u128(u128::from(k));
                tally(
                    first_live(before, &key)?.as_str(),
                    first_live(after, &key)?.as_str(),
                );
            }
            KeyRange::Exact { keys }
        }
        Mode::Sampled { samples, seed } => {
            let key_bits = sampled_key_bits(slots);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let key = random_key(&mut rng, key_bits);
                tally(
                    first_live(before, &key)?.as_str(),
                    first_live(after, &key)?.as_str(),
                );
            }
            KeyRange::Sampled {
                samples,
                seed,
                key_bits,
            }
        }
    };
    Ok(RemapReport {
        before_fingerprint: before.fingerprint(),
        after_fingerprint: after.fingerprint(),
        strategy: before.strategy(),
        key_range,
        matrix,
        moved,
        unmoved,
    })
}

/// The baseline hash: index `key mod n`.
pub fn simple_mod_hash(key: &HashKey, n: u64) -> u64 {
    assert!(n >= 1, "modulus must be positive");
    let r = key.value() % BigUint::from(n);
    u64::try_from(r).expect("remainder below modulus")
}

/// Exact survival fraction of the simple-mod hash when the code count grows
/// from `n` to `n + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurvivalReport {
    pub n: u64,
    pub m: u64,
    pub keys: u64,
    pub survivors: u64,
    /// Reduced fraction `survivors / keys`, e.g. `"1/4"`.
    pub fraction: String,
}

/// Count keys in `[0, n*(n+1)*m)` with `k mod n == k mod (n+1)` by direct
/// enumeration. The fraction is always exactly `1/(n+1)`: survival of the
/// simple hash is the complement of what the permutation hash remaps.
pub fn simple_mod_survival(n: u64, m: u64) -> SurvivalReport {
    assert!(n >= 1 && m >= 1, "n and m must be positive");
    let keys = n * (n + 1) * m;
    let survivors = (0..keys).filter(|k| k % n == k % (n + 1)).count() as u64;
    let gcd = survivors.gcd(&keys);
    let fraction = if survivors == 0 {
        "0".to_owned()
    } else {
        format!("{}/{}", survivors / gcd, keys / gcd)
    };
    SurvivalReport {
        n,
        m,
        keys,
        survivors,
        fraction,
    }
}

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

fn stat(samples: &[f64]) -> Stat {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() < 2 {
        0.0
    } else {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Stat {
        mean,
        std_error: (var / n).sqrt(),
    }
}

/// Spread of per-node load on fresh random rings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpreadReport {
    pub node_count: usize,
    pub points_per_node: usize,
    pub trials: u32,
    pub seed: u64,
    /// Sample mean over trials of (mean per-node load / minimum per-node
    /// load) within a trial.
    pub mean_min_ratio: Stat,
    /// Sample mean over trials of (maximum per-node load / mean per-node
    /// load) within a trial.
    pub max_mean_ratio: Stat,
}

/// Draw `count` distinct points on the 64-bit circle.
fn random_points(rng: &mut ChaCha8Rng, count: usize) -> Vec<u64> {
    let mut points = Vec::with_capacity(count);
    let mut seen = std::collections::HashSet::with_capacity(count);
    while points.len() < count {
        let p = rng.next_u64();
        if seen.insert(p) {
            points.push(p);
        }
    }
    points
}

/// Segment length ending at each point of the sorted point list, on the
/// full 64-bit circle.
fn segment_lengths_of(sorted: &[(u64, usize)]) -> Vec<u128> {
    let range = 1u128 << 64;
    let mut lengths = Vec::with_capacity(sorted.len());
    let first = u128::from(sorted[0].0);
    let last = u128::from(sorted[sorted.len() - 1].0);
    lengths.push(first + range - last);
    for pair in sorted.windows(2) {
        lengths.push(u128::from(pair[1].0) - u128::from(pair[0].0));
    }
    lengths
}

/// Measure per-node load spread across `trials` fresh rings of `node_count`
/// nodes with `k` uniformly random points each. Per-node load is the sum of
/// the node's segment lengths; each trial contributes one mean/min and one
/// max/mean ratio. Estimates stabilise around a hundred trials and up.
pub fn ring_spread_stats(node_count: usize, k: usize, trials: u32, seed: u64) -> SpreadReport {
    assert!(node_count >= 1 && k >= 1 && trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_min = Vec::with_capacity(trials as usize);
    let mut max_mean = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let points = random_points(&mut rng, node_count * k);
        let mut tagged: Vec<(u64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i / k))
            .collect();
        tagged.sort_unstable();
        let lengths = segment_lengths_of(&tagged);
        let mut loads = vec![0.0f64; node_count];
        for ((_, node), len) in tagged.iter().zip(&lengths) {
            loads[*node] += *len as f64;
        }
        let mean = loads.iter().sum::<f64>() / node_count as f64;
        let min = loads.iter().copied().fold(f64::INFINITY, f64::min);
        let max = loads.iter().copied().fold(0.0f64, f64::max);
        mean_min.push(mean / min);
        max_mean.push(max / mean);
    }
    SpreadReport {
        node_count,
        points_per_node: k,
        trials,
        seed,
        mean_min_ratio: stat(&mean_min),
        max_mean_ratio: stat(&max_mean),
    }
}

/// Pooled median-to-mean segment length ratio for rings of single random
/// points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianMeanReport {
    pub points: usize,
    pub trials: u32,
    pub seed: u64,
    pub segments: u64,
    /// Median of all segment lengths pooled across trials, divided by their
    /// mean. Around ln 2 for many points; exactly 1 for a single point.
    pub median_mean_ratio: f64,
}

/// Pool segment lengths from `trials` fresh rings of `points` random points
/// and compare the pooled median against the pooled mean. Meaningful runs
/// use ten thousand trials and up.
pub fn ring_median_mean(points: usize, trials: u32, seed: u64) -> MedianMeanReport {
    assert!(points >= 1 && trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u128> = Vec::with_capacity(points * trials as usize);
    for _ in 0..trials {
        let mut pts: Vec<(u64, usize)> = random_points(&mut rng, points)
            .into_iter()
            .map(|p| (p, 0))
            .collect();
        pts.sort_unstable();
        pool.extend(segment_lengths_of(&pts));
    }
    pool.sort_unstable();
    let mean = pool.iter().map(|&l| l as f64).sum::<f64>() / pool.len() as f64;
    let median = if pool.len() % 2 == 1 {
        pool[pool.len() / 2] as f64
    } else {
        (pool[pool.len() / 2 - 1] as f64 + pool[pool.len() / 2] as f64) / 2.0
    };
    MedianMeanReport {
        points,
        trials,
        seed,
        segments: pool.len() as u64,
        median_mean_ratio: median / mean,
    }
}
