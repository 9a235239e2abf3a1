use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stgl_core::analysis::{compute_fla, JacobianMatrix};
use stgl_core::evaluation::{auc_roc, average_precision};
use stgl_core::graph::{
    chronological_split, read_snapshot, write_snapshot, Direction, Interaction, NodeFeatures, TemporalGraph,
    DEFAULT_RATIOS,
};
use stgl_core::sampling::{recent_neighbors, uniform_neighbors};

fn graph_strategy() -> impl Strategy<Value = TemporalGraph> {
    (3usize..12).prop_flat_map(|n| {
        prop::collection::vec((0..n, 1..n, 0u32..40), 1..120).prop_map(move |rows| {
            let rows = rows
                .into_iter()
                .map(|(u, off, t)| Interaction::new(u as u32, ((u + off) % n) as u32, t as f64))
                .collect();
            TemporalGraph::from_interactions(rows, NodeFeatures::default(), Some(n)).unwrap()
        })
    })
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Bidirected), Just(Direction::Directed)]
}

/// Interactions of `v` strictly before `t` under `dir`, oldest first.
fn brute_history(g: &TemporalGraph, v: u32, t: f64, dir: Direction) -> Vec<(u32, f64, u32)> {
    let mut out = Vec::new();
    for e in 0..g.num_edges() {
        let (s, d, ts) = (g.src(e), g.dst(e), g.timestamp(e));
        if ts >= t {
            continue;
        }
        if s == v {
            out.push((d, ts, e as u32));
        } else if d == v && dir == Direction::Bidirected {
            out.push((s, ts, e as u32));
        }
    }
    out
}

proptest! {
    #[test]
    fn recent_is_the_newest_strictly_earlier_suffix(
        g in graph_strategy(), k in 1usize..8, t in 0u32..45, v in 0u32..3, dir in direction(),
    ) {
        let t = t as f64;
        let nb = recent_neighbors(&g, v, t, k, dir).unwrap();
        let hist = brute_history(&g, v, t, dir);
        let want: Vec<(u32, f64, u32)> = hist.iter().rev().take(k).copied().collect();
        let got: Vec<(u32, f64, u32)> = nb.entries.iter().map(|e| (e.neighbor, e.timestamp, e.edge)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn uniform_draws_distinct_earlier_interactions(
        g in graph_strategy(), k in 1usize..8, t in 0u32..45, v in 0u32..3, dir in direction(), seed in any::<u64>(),
    ) {
        let t = t as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = uniform_neighbors(&g, v, t, k, dir, &mut rng).unwrap();
        let hist = brute_history(&g, v, t, dir);
        prop_assert_eq!(nb.len(), k.min(hist.len()));
        let mut edges: Vec<u32> = nb.entries.iter().map(|e| e.edge).collect();
        for w in nb.entries.windows(2) {
            prop_assert!(w[0].edge > w[1].edge, "newest first");
        }
        for e in &nb.entries {
            prop_assert!(e.timestamp < t);
            prop_assert!(hist.contains(&(e.neighbor, e.timestamp, e.edge)));
        }
        edges.dedup();
        prop_assert_eq!(edges.len(), nb.len());
    }

    #[test]
    fn snapshot_roundtrip_is_identity(g in graph_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.stgl");
        write_snapshot(&g, &p).unwrap();
        prop_assert_eq!(read_snapshot(&p).unwrap(), g);
    }

    #[test]
    fn split_never_separates_equal_timestamps(g in graph_strategy()) {
        if let Ok(split) = chronological_split(&g, DEFAULT_RATIOS) {
            prop_assert!(split.train_end_idx <= split.val_end_idx);
            prop_assert!(split.val_end_idx <= split.num_edges);
            let ts = g.timestamps();
            for b in [split.train_end_idx, split.val_end_idx] {
                if b > 0 && b < ts.len() {
                    prop_assert!(ts[b - 1] < ts[b]);
                }
            }
            for v in &split.inductive_nodes {
                prop_assert!(split.train().all(|e| g.src(e) != *v && g.dst(e) != *v));
            }
        }
    }

    #[test]
    fn ap_and_auc_are_permutation_invariant(
        pairs in prop::collection::vec((0u8..6, any::<bool>()), 2..40), seed in any::<u64>(),
    ) {
        prop_assume!(pairs.iter().any(|p| p.1) && pairs.iter().any(|p| !p.1));
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let ap = average_precision(&scores, &labels).unwrap();
        let auc = auc_roc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap) && (0.0..=1.0).contains(&auc));

        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l2: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        prop_assert!((average_precision(&s2, &l2).unwrap() - ap).abs() < 1e-12);
        prop_assert!((auc_roc(&s2, &l2).unwrap() - auc).abs() < 1e-12);

        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auc_roc(&neg, &labels).unwrap() - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn fla_scales_inversely_with_jacobian_squared(
        rows in 1usize..5, extra in 1usize..6, seed in any::<u64>(), c in 0.1f64..10.0,
    ) {
        let cols = rows + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<f64> = (0..rows).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let j = JacobianMatrix::new(rows, cols, data, labels).unwrap();
        let a = compute_fla(&j, 0.0).unwrap();
        prop_assume!(a.jitter == 0.0);
        let b = compute_fla(&j.scaled(c), 0.0).unwrap();
        prop_assert!(a.fla > 0.0);
        prop_assert!((b.fla * c * c - a.fla).abs() <= 1e-6 * a.fla);
    }
}
