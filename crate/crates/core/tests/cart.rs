mod common;

use common::gen::random_training;
use common::oracles::{brute_force_nominal, brute_force_ordered};
use mlcart::cart::{
    best_split, cross_validate_on, export_tree, gini_impurity, grow_tree_on, import_tree_json, prune, Direction,
    ExportFormat, GrowControls, Tree, VarKind, CP_CAP,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grown(seed: u64, n: usize, cp: f64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = random_training(&mut rng, n, 4, 5, 0.1);
    let controls = GrowControls { cp, min_split: 8, min_bucket: 3, ..GrowControls::default() };
    grow_tree_on(&data, None, &controls).unwrap()
}

#[test]
fn gini_of_published_root() {
    let g = gini_impurity(105_495, 70_505).unwrap();
    assert!((g - 0.480238).abs() < 1e-6);
    assert_eq!(gini_impurity(3, 3).unwrap(), 0.5);
    assert!(gini_impurity(0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_split_is_the_exhaustive_optimum(seed in any::<u64>(), n in 2usize..60, min_bucket in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_training(&mut rng, n, 3, 5, 0.2);
        for (v, var) in data.features.variables.iter().enumerate() {
            let col = &data.features.columns[v];
            if col.iter().all(|x| x.is_nan()) {
                continue;
            }
            let got = best_split(col, &data.response, var.kind(), min_bucket).unwrap();
            let want = match var.kind() {
                VarKind::Ordered => brute_force_ordered(col, &data.response, min_bucket),
                VarKind::Categorical { .. } => brute_force_nominal(col, &data.response, min_bucket),
            };
            match (got, want) {
                (None, None) => {}
                (Some(c), Some((gain, parts))) => {
                    prop_assert!((c.improvement - gain).abs() <= 1e-12);
                    let left: Vec<bool> = col
                        .iter()
                        .filter(|x| !x.is_nan())
                        .map(|&x| c.rule.direction(x) == Some(Direction::Left))
                        .collect();
                    let flipped: Vec<bool> = left.iter().map(|b| !b).collect();
                    prop_assert!(parts.iter().any(|p| *p == left || *p == flipped));
                }
                (g, w) => prop_assert!(false, "got {:?}, oracle {:?}", g, w.map(|x| x.0)),
            }
        }
    }

    #[test]
    fn children_partition_their_parent(seed in any::<u64>(), n in 20usize..300) {
        let tree = grown(seed, n, 0.0);
        for node in &tree.nodes {
            if let Some((l, r)) = node.children {
                let (a, b) = (&tree.nodes[l], &tree.nodes[r]);
                prop_assert_eq!([a.counts[0] + b.counts[0], a.counts[1] + b.counts[1]], node.counts);
                prop_assert_eq!(a.depth, node.depth + 1);
                prop_assert!(a.n() >= 3 && b.n() >= 3);
            }
        }
    }

    #[test]
    fn cp_table_starts_at_the_root(seed in any::<u64>(), n in 20usize..300) {
        let tree = grown(seed, n, 0.0);
        let first = &tree.cp_table[0];
        prop_assert_eq!(first.n_splits, 0);
        prop_assert_eq!(first.cp, CP_CAP);
        prop_assert_eq!(first.rel_error, 1.0);
        for w in tree.cp_table.windows(2) {
            prop_assert!(w[1].cp < w[0].cp);
            prop_assert!(w[1].n_splits > w[0].n_splits);
            prop_assert!(w[1].rel_error <= w[0].rel_error);
        }
        prop_assert_eq!(tree.cp_table.last().unwrap().n_splits, tree.n_splits());
    }

    #[test]
    fn pruning_is_idempotent_and_monotone(seed in any::<u64>(), a in 0.0f64..0.2, b in 0.0f64..0.2) {
        let tree = grown(seed, 250, 0.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = prune(&tree, lo);
        prop_assert_eq!(&prune(&p, lo), &p);
        prop_assert!(prune(&tree, hi).n_splits() <= p.n_splits());
        prop_assert_eq!(prune(&tree, 0.0).n_splits(), tree.n_splits());
        prop_assert_eq!(prune(&tree, 1.0).n_splits(), 0);
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>()) {
        let tree = grown(seed, 150, 0.01);
        let back = import_tree_json(&export_tree(&tree, ExportFormat::Json)).unwrap();
        prop_assert_eq!(back, tree);
    }

    #[test]
    fn every_row_reaches_a_leaf(seed in any::<u64>(), row in proptest::collection::vec(
        prop_oneof![Just(f64::NAN), -3.0f64..8.0, Just(f64::INFINITY)], 0..6)) {
        let tree = grown(seed, 200, 0.0);
        let p = tree.predict_values(&row);
        prop_assert!(tree.nodes[p.leaf].is_leaf());
        prop_assert_eq!(p.prob, tree.nodes[p.leaf].predicted_prob());
    }
}

#[test]
fn cross_validation_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = random_training(&mut rng, 300, 4, 5, 0.1);
    let controls = GrowControls { cp: 0.0, rng_seed: 5, ..GrowControls::default() };
    let a = cross_validate_on(&data, &controls, false).unwrap();
    let b = cross_validate_on(&data, &controls, false).unwrap();
    assert_eq!(a, b);
    assert!(a.selected_row < a.tree.cp_table.len());
    assert!(a.tree.cp_table.iter().all(|r| r.x_error.is_some() && r.x_std.is_some()));
    let one_se = cross_validate_on(&data, &controls, true).unwrap();
    assert!(one_se.selected_tree().n_splits() <= a.selected_tree().n_splits());
}
