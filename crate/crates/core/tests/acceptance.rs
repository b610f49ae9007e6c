//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`). Exact checks carry zero tolerance;
//! the statistical checks pin their bands and seeds here.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{factorial, oracle_permutation, pattern_labels, table_from_pattern};
use permhash::analysis::{census, remap_matrix, ring_median_mean, ring_spread_stats, simple_mod_survival, Mode};
use permhash::ring::{RingConfig, RingState};
use permhash::ucycle::{build_cycle, count_symbols, substitute_removed, verify_cycle};
use permhash::{
    capacity, first_live, first_simple, permute, HashKey, InsertionStrategy, NodeId, NodeTable,
};

use InsertionStrategy::{FromEnd, FromStart};

fn id(label: &str) -> NodeId {
    NodeId::new(label).unwrap()
}

fn nodes(n: usize) -> Vec<NodeId> {
    (0..n).map(|i| id(&format!("n{i}"))).collect()
}

fn report(criterion: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("acceptance {criterion}: {status} — {detail}");
    assert!(passed, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: for L in 2..=8, both strategies, the exact census over
/// [0, L!) gives every node exactly L!/L first positions. Zero tolerance,
/// under five seconds.
#[test]
fn criterion_01_exact_uniformity() {
    let start = Instant::now();
    for strategy in [FromStart, FromEnd] {
        for slots in 2..=8usize {
            let table = NodeTable::new(nodes(slots), strategy).unwrap();
            let report = census(&table, Mode::Exact).unwrap();
            let expected = (factorial(slots) / slots as u128) as u64;
            assert_eq!(report.counts.len(), slots);
            for (node, &count) in &report.counts {
                assert_eq!(
                    count, expected,
                    "L={slots} {strategy:?}: node {node} got {count}, want {expected}"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "1 (exact uniformity)",
        elapsed.as_secs_f64() < 5.0,
        &format!("L=2..8, both strategies, every count L!/L; {elapsed:?}"),
    );
}

/// Criterion 2: the from-end table of three nodes reproduces the reference
/// permutation table for keys 0..5 exactly.
#[test]
fn criterion_02_reference_permutation_table() {
    let table = NodeTable::new(
        vec![id("alpha"), id("beta"), id("gamma")],
        FromEnd,
    )
    .unwrap();
    let expected: [&[&str]; 6] = [
        &["alpha", "beta", "gamma"],
        &["beta", "alpha", "gamma"],
        &["alpha", "gamma", "beta"],
        &["beta", "gamma", "alpha"],
        &["gamma", "alpha", "beta"],
        &["gamma", "beta", "alpha"],
    ];
    for (key, want) in expected.iter().enumerate() {
        let perm = permute(&table, &HashKey::from_u128(key as u128)).unwrap();
        let got: Vec<&str> = perm.iter().map(NodeId::as_str).collect();
        assert_eq!(&got, want, "key {key}");
    }
    report(
        "2 (reference golden table)",
        true,
        "keys 0..5 reproduce all six permutations",
    );
}

/// Criterion 3: adding node n+1 to an n-node table moves keys only into the
/// new node's column, exactly n!/n keys from each old node, over
/// [0, (n+1)!). Includes the reference n=2 case (keys 4 and 5).
#[test]
fn criterion_03_minimal_remapping_on_add() {
    for strategy in [FromStart, FromEnd] {
        for n in 2..=7usize {
            let before = NodeTable::new(nodes(n), strategy).unwrap();
            let new_node = id(&format!("n{n}"));
            let after = before.add(new_node.clone()).unwrap();
            let matrix = remap_matrix(&before, &after, Mode::Exact).unwrap().matrix;
            let stolen = (factorial(n) / n as u128) as u64;
            for (old, row) in &matrix {
                for (new, &count) in row {
                    if new == old {
                        continue;
                    }
                    assert_eq!(
                        new,
                        new_node.as_str(),
                        "{strategy:?} n={n}: {count} keys moved {old} -> {new}"
                    );
                    assert_eq!(
                        count, stolen,
                        "{strategy:?} n={n}: new node got {count} from {old}, want {stolen}"
                    );
                }
                assert_eq!(
                    row.get(new_node.as_str()),
                    Some(&stolen),
                    "{strategy:?} n={n}: {old} donated nothing"
                );
            }
        }
    }
    // the reference case: [alpha,beta] -> [alpha,beta,gamma] moves exactly
    // key 4 from alpha and key 5 from beta
    let before = NodeTable::new(vec![id("alpha"), id("beta")], FromEnd).unwrap();
    let after = before.add(id("gamma")).unwrap();
    for key in 0u128..6 {
        let old = first_live(&before, &HashKey::from_u128(key)).unwrap().clone();
        let new = first_live(&after, &HashKey::from_u128(key)).unwrap();
        match key {
            4 => {
                assert_eq!(old.as_str(), "alpha");
                assert_eq!(new.as_str(), "gamma");
            }
            5 => {
                assert_eq!(old.as_str(), "beta");
                assert_eq!(new.as_str(), "gamma");
            }
            _ => assert_eq!(&old, new),
        }
    }
    report(
        "3 (minimal remapping on add)",
        true,
        "n=2..7 both strategies: movement only into the new column, n!/n each",
    );
}

/// Criterion 4: removing any single node (a) filters the permutation of
/// every key in [0, n!), and (b) splits the removed node's keys exactly
/// equally among survivors.
#[test]
fn criterion_04_removal_identity_and_redistribution() {
    for strategy in [FromStart, FromEnd] {
        for n in 3..=7usize {
            let table = NodeTable::new(nodes(n), strategy).unwrap();
            let range = factorial(n);
            for victim in nodes(n) {
                let shrunk = table.remove(&victim).unwrap();
                let mut gains: BTreeMap<String, u64> = BTreeMap::new();
                for key in 0..range {
                    let key = HashKey::from_u128(key);
                    let full: Vec<NodeId> = permute(&table, &key).unwrap().into_vec();
                    let filtered: Vec<NodeId> =
                        full.iter().filter(|m| **m != victim).cloned().collect();
                    assert_eq!(
                        permute(&shrunk, &key).unwrap().into_vec(),
                        filtered,
                        "{strategy:?} n={n} victim {victim}"
                    );
                    if full[0] == victim {
                        let heir = first_live(&shrunk, &key).unwrap();
                        *gains.entry(heir.as_str().to_owned()).or_insert(0) += 1;
                    }
                }
                let expected = (factorial(n) / n as u128 / (n as u128 - 1)) as u64;
                assert_eq!(gains.len(), n - 1, "{strategy:?} n={n} victim {victim}");
                for (heir, &count) in &gains {
                    assert_eq!(
                        count, expected,
                        "{strategy:?} n={n} victim {victim}: heir {heir}"
                    );
                }
            }
        }
    }
    report(
        "4 (removal identity and redistribution)",
        true,
        "n=3..7: filtered permutations match, equal splits among survivors",
    );
}

/// Criterion 5: one hundred thousand seeded random cases against the
/// reference implementation; zero mismatches allowed.
#[test]
fn criterion_05_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut cases = 0u64;
    for _ in 0..50_000 {
        let slots = 1 + (rng.next_u32() as usize % 12);
        let pattern: Vec<bool> = (0..slots)
            .map(|i| i + 1 == slots || rng.next_u32() % 3 != 0)
            .collect();
        let key_value = (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64());
        for strategy in [FromStart, FromEnd] {
            let table = table_from_pattern(&pattern, strategy);
            let labels = pattern_labels(&pattern);
            let slots_ref: Vec<Option<&str>> = labels.iter().map(|l| l.as_deref()).collect();
            let expected = oracle_permutation(&slots_ref, key_value, strategy);
            let key = HashKey::from_u128(key_value);
            let head = first_live(&table, &key).unwrap();
            assert_eq!(head.as_str(), expected[0], "{pattern:?} {key_value} {strategy:?}");
            let full: Vec<String> = permute(&table, &key)
                .unwrap()
                .iter()
                .map(|n| n.as_str().to_owned())
                .collect();
            assert_eq!(full, expected);
            assert_eq!(head, permute(&table, &key).unwrap().first().unwrap());
            if pattern.iter().all(|&l| l) {
                assert_eq!(first_simple(&table, &key).unwrap(), head);
            }
            cases += 1;
        }
    }
    report(
        "5 (oracle equivalence)",
        cases == 100_000,
        &format!("{cases} random cases, zero mismatches"),
    );
}

/// Criterion 6: key-width capacities, reference and derived values.
#[test]
fn criterion_06_capacity() {
    assert_eq!(capacity(32), 12);
    assert_eq!(capacity(512), 98);
    assert_eq!(capacity(64), 20);
    report("6 (capacity)", true, "32->12, 512->98, 64->20");
}

/// Criterion 7: the reference 24-element cycle and its removal counts;
/// built cycles verify for n=2..5; survivor counts stay exactly equal for
/// every removal subset at n<=5. Under sixty seconds.
#[test]
fn criterion_07_universal_cycles() {
    let start = Instant::now();
    let labels = [
        "alpha", "beta", "gamma", "alpha", "beta", "delta", "alpha", "gamma", "beta", "alpha",
        "gamma", "delta", "beta", "alpha", "delta", "gamma", "beta", "delta", "gamma", "alpha",
        "delta", "beta", "gamma", "delta",
    ];
    let reference: Vec<NodeId> = labels.iter().map(|l| id(l)).collect();
    let node_set = vec![id("alpha"), id("beta"), id("gamma"), id("delta")];
    assert!(verify_cycle(&reference, &node_set).valid);

    let after_gamma = substitute_removed(&reference, &[id("gamma")].into()).unwrap();
    let counts = count_symbols(&after_gamma);
    assert_eq!(counts.len(), 3);
    assert!(counts.values().all(|&c| c == 8), "{counts:?}");

    let after_both =
        substitute_removed(&reference, &[id("gamma"), id("delta")].into()).unwrap();
    let counts = count_symbols(&after_both);
    assert_eq!(counts.len(), 2);
    assert!(counts.values().all(|&c| c == 12), "{counts:?}");

    for n in 2..=5usize {
        let node_set = nodes(n);
        let cycle = build_cycle(&node_set).unwrap();
        assert!(
            verify_cycle(cycle.symbols(), &node_set).valid,
            "built cycle invalid at n={n}"
        );
        // every removal subset keeps survivor counts exactly equal
        for mask in 1..(1u32 << n) - 1 {
            let removed: BTreeSet<NodeId> = node_set
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, node)| node.clone())
                .collect();
            let survivors = substitute_removed(cycle.symbols(), &removed).unwrap();
            let counts = count_symbols(&survivors);
            let survivor_count = n - removed.len();
            assert_eq!(counts.len(), survivor_count);
            let expected = factorial(n) as u64 / survivor_count as u64;
            assert!(
                counts.values().all(|&c| c == expected),
                "n={n} mask={mask:b}: {counts:?}"
            );
        }
    }
    let elapsed = start.elapsed();
    report(
        "7 (universal cycles)",
        elapsed.as_secs_f64() < 60.0,
        &format!("reference counts 8/8/8 and 12/12, all subsets equal at n<=5; {elapsed:?}"),
    );
}

/// Criterion 8: the simple-mod survival fraction is exactly 1/(n+1).
#[test]
fn criterion_08_simple_mod_survival() {
    for n in 1..=10u64 {
        for m in 1..=5u64 {
            let r = simple_mod_survival(n, m);
            assert_eq!(r.survivors * (n + 1), r.keys, "n={n} m={m}");
            assert_eq!(r.fraction, format!("1/{}", n + 1), "n={n} m={m}");
        }
    }
    report("8 (simple-mod survival)", true, "exact 1/(n+1) for n=1..10, m=1..5");
}

/// Exact ownership comparison between two ring states: owners are constant
/// between consecutive points of the union point set, so checking each
/// union point covers the whole circle.
fn ownership_changes(before: &RingState, after: &RingState) -> Vec<(String, String)> {
    let mut boundary: BTreeSet<u64> = before.points().keys().copied().collect();
    boundary.extend(after.points().keys());
    let mut changes = Vec::new();
    for point in boundary {
        let old = before.owner_of_point(point).unwrap();
        let new = after.owner_of_point(point).unwrap();
        if old != new {
            changes.push((old.as_str().to_owned(), new.as_str().to_owned()));
        }
    }
    changes
}

/// Criterion 9: on the classic ring, adding a node only acquires ownership
/// and removing one only releases it, verified exactly on the segment
/// boundaries.
#[test]
fn criterion_09_ring_remap_minimality() {
    for (node_count, k) in [(10usize, 1u32), (25, 5), (50, 20)] {
        let mut ring = RingState::new(RingConfig::new(32, k).unwrap());
        for i in 0..node_count {
            ring = ring.add(id(&format!("node{i:02}"))).unwrap();
        }
        // add: every changed arc now belongs to the new node
        let grown = ring.add(id("newcomer")).unwrap();
        let changes = ownership_changes(&ring, &grown);
        assert!(!changes.is_empty(), "{node_count}/{k}: newcomer owns nothing");
        for (_, new) in &changes {
            assert_eq!(new, "newcomer", "{node_count}/{k}: foreign transfer {changes:?}");
        }
        // remove: every changed arc came from the removed node
        let victim = id(&format!("node{:02}", node_count / 2));
        let shrunk = ring.remove(&victim).unwrap();
        let changes = ownership_changes(&ring, &shrunk);
        assert!(!changes.is_empty());
        for (old, _) in &changes {
            assert_eq!(old, victim.as_str(), "{node_count}/{k}: {changes:?}");
        }
    }
    report(
        "9 (ring remap minimality)",
        true,
        "adds acquire only, removes release only, exact boundary comparison",
    );
}

/// Criterion 10a: pooled median/mean segment ratio for ten single-point
/// nodes lies in [0.64, 0.75] (the reference quotes 25/36; the exact
/// ten-point value is about 0.741).
#[test]
fn criterion_10a_ring_median_mean() {
    let start = Instant::now();
    let stats = ring_median_mean(10, 10_000, 7);
    let ratio = stats.median_mean_ratio;
    let ok = (0.64..=0.75).contains(&ratio);
    report(
        "10a (ring median/mean)",
        ok && start.elapsed().as_secs_f64() < 120.0,
        &format!("ratio {ratio:.4} over {} segments; {:?}", stats.segments, start.elapsed()),
    );
}

/// Criterion 10b: per-node load spread at 100 nodes: the mean/min ratio at
/// k=100 must lie in [1.05, 1.25] and its sample mean must strictly
/// decrease at k=400 and k=800.
///
/// The measured mean/min ratio at 100 nodes, k=100 is ~1.31: the minimum
/// over 100 per-node loads sits ~2.5 standard deviations below the mean,
/// not ~1. The quoted ~1.1 corresponds to about a thousand nodes (or to a
/// one-sigma spread), so the band check fails for an honest implementation
/// at this instance size; the monotone-decrease check holds.
#[test]
fn criterion_10b_ring_spread() {
    let start = Instant::now();
    let spread_100 = ring_spread_stats(100, 100, 300, 11);
    let spread_400 = ring_spread_stats(100, 400, 300, 12);
    let spread_800 = ring_spread_stats(100, 800, 300, 13);
    let r100 = spread_100.mean_min_ratio.mean;
    let r400 = spread_400.mean_min_ratio.mean;
    let r800 = spread_800.mean_min_ratio.mean;
    let in_band = (1.05..=1.25).contains(&r100);
    let decreasing = r100 > r400 && r400 > r800;
    report(
        "10b (ring load spread)",
        in_band && decreasing && start.elapsed().as_secs_f64() < 120.0,
        &format!(
            "mean/min at k=100: {r100:.4} (band 1.05..1.25, in_band={in_band}); \
             k=400: {r400:.4}, k=800: {r800:.4} (strictly decreasing={decreasing}); {:?}",
            start.elapsed()
        ),
    );
}
