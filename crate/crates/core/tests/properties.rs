use std::collections::BTreeSet;

use mms_core::domination::{dominates, group_tail_bundles, pick_dominated, TailBundle};
use mms_core::instance::{make_instance, to_ordered, Bundle, Instance, ItemKind, OrderedInstance};
use mms_core::matching::{envy_free_matching, hall_deficient_split, max_matching, BipartiteGraph};
use mms_core::mms::{
    meets_all, mms_value, normalize_pair, structured_partition_chores, structured_partition_goods, OracleMethod,
};
use mms_core::reductions::{
    reduce_pair_blockable, reduce_pair_from_high, reduce_pigeonhole_pair, reduce_single_item, verify_step,
};
use mms_core::value::int;
use mms_core::Rational;
use proptest::prelude::*;

fn bundle() -> impl Strategy<Value = Bundle> {
    proptest::collection::btree_set(1usize..=12, 0..=6).prop_map(Bundle::new)
}

fn instance(kind: ItemKind, n: std::ops::RangeInclusive<usize>, extra: usize) -> impl Strategy<Value = Instance> {
    n.prop_flat_map(move |n| {
        (0..=n + extra).prop_flat_map(move |m| {
            proptest::collection::vec(proptest::collection::vec(0i64..=20, m), n).prop_map(move |rows| {
                let sign = if kind == ItemKind::Chores { -1 } else { 1 };
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| int(sign * v)).collect())
                    .collect();
                make_instance(kind, rows).unwrap()
            })
        })
    })
}

fn graph() -> impl Strategy<Value = BipartiteGraph> {
    (0usize..=6, 0usize..=6).prop_flat_map(|(x, y)| {
        proptest::collection::vec(any::<bool>(), x * y).prop_map(move |bits| {
            BipartiteGraph::from_edges(x, y, (0..x * y).filter(|&k| bits[k]).map(|k| (k / y, k % y)))
        })
    })
}

fn mu(inst: &Instance, a: usize) -> Rational {
    mms_value(inst, a, OracleMethod::BranchAndBound).unwrap().mu
}

/// Largest matching by trying every subset of edges one X vertex at a time.
fn brute_max_matching(g: &BipartiteGraph, x: usize, used: &mut Vec<bool>) -> usize {
    if x == g.x_size {
        return 0;
    }
    let mut best = brute_max_matching(g, x + 1, used);
    for &y in &g.adjacency[x] {
        if !used[y] {
            used[y] = true;
            best = best.max(1 + brute_max_matching(g, x + 1, used));
            used[y] = false;
        }
    }
    best
}

fn ordered(inst: &Instance) -> OrderedInstance {
    to_ordered(inst)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn domination_is_a_partial_order(a in bundle(), b in bundle(), c in bundle()) {
        prop_assert!(dominates(&a, &a).is_some());
        if dominates(&a, &b).is_some() && dominates(&b, &a).is_some() {
            prop_assert_eq!(&a, &b);
        }
        if dominates(&a, &b).is_some() && dominates(&b, &c).is_some() {
            prop_assert!(dominates(&a, &c).is_some());
        }
    }

    #[test]
    fn domination_implies_value_order(a in bundle(), b in bundle(), raw in proptest::collection::vec(0i64..=30, 12)) {
        let mut goods = raw.clone();
        goods.sort_unstable_by(|x, y| y.cmp(x));
        let value = |row: &[i64], bundle: &Bundle| bundle.items().iter().map(|&j| row[j - 1]).sum::<i64>();
        if dominates(&a, &b).is_some() {
            prop_assert!(value(&goods, &a) >= value(&goods, &b));
            let chores: Vec<i64> = goods.iter().map(|v| -v).collect();
            prop_assert!(value(&chores, &a) <= value(&chores, &b));
        }
    }

    #[test]
    fn picked_bundle_dominates_or_is_dominated(tails in proptest::collection::vec(proptest::collection::btree_set(5usize..=9, 3), 1..8)) {
        let tails: Vec<TailBundle> = tails
            .into_iter()
            .enumerate()
            .map(|(i, s)| TailBundle { agent: i + 1, bundle: Bundle::new(s) })
            .collect();
        for group in group_tail_bundles(&tails, 3, 5, 4).into_values() {
            let worst = pick_dominated(&group, ItemKind::Goods).unwrap();
            let best = pick_dominated(&group, ItemKind::Chores).unwrap();
            for t in &group {
                prop_assert!(dominates(&t.bundle, &worst.bundle).is_some());
                prop_assert!(dominates(&best.bundle, &t.bundle).is_some());
            }
        }
    }

    #[test]
    fn max_matching_is_maximum(g in graph()) {
        let m = max_matching(&g);
        prop_assert!(m.pairs.iter().all(|&(x, y)| g.has_edge(x, y)));
        let ys: BTreeSet<usize> = m.pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(ys.len(), m.len());
        prop_assert_eq!(m.len(), brute_max_matching(&g, 0, &mut vec![false; g.y_size]));
    }

    #[test]
    fn envy_free_matching_properties(g in graph()) {
        let m = envy_free_matching(&g);
        prop_assert!(m.is_envy_free(&g));
        let all: Vec<usize> = (0..g.x_size).collect();
        if g.x_size > 0 && g.neighbourhood(&all).len() >= g.x_size {
            prop_assert!(!m.is_empty());
        }
    }

    #[test]
    fn hall_split_is_deficient(g in graph()) {
        match hall_deficient_split(&g) {
            Some((xs, ys)) => {
                prop_assert!(xs.len() > ys.len());
                prop_assert_eq!(g.neighbourhood(&xs), ys);
            }
            None => prop_assert_eq!(max_matching(&g).len(), g.x_size),
        }
    }

    #[test]
    fn ordering_sorts_and_records_ranks(inst in instance(ItemKind::Goods, 1..=3, 5)) {
        let ord = ordered(&inst);
        prop_assert!(ord.instance.is_ordered());
        for a in 1..=inst.n() {
            for (pos, &src) in ord.source_ranks[a - 1].iter().enumerate() {
                prop_assert_eq!(ord.instance.value(a, pos + 1), inst.value(a, src));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn goods_rules_emit_valid_steps(inst in instance(ItemKind::Goods, 2..=4, 6)) {
        let ord = ordered(&inst);
        let mus: Vec<Rational> = (1..=inst.n()).map(|a| mu(&ord.instance, a)).collect();
        let steps = [
            reduce_single_item(&ord.instance, &mus),
            reduce_pair_blockable(&ord.instance, &mus),
            reduce_pigeonhole_pair(&ord, &mus),
            reduce_pair_from_high(&ord, &mus),
        ];
        for step in steps.into_iter().flatten() {
            prop_assert!(verify_step(&ord.instance, &step).unwrap(), "{:?}", step);
        }
    }

    #[test]
    fn chores_pair_blockable_is_valid(inst in instance(ItemKind::Chores, 2..=4, 5)) {
        let ord = ordered(&inst);
        let mus: Vec<Rational> = (1..=inst.n()).map(|a| mu(&ord.instance, a)).collect();
        if let Some(step) = reduce_pair_blockable(&ord.instance, &mus) {
            prop_assert!(verify_step(&ord.instance, &step).unwrap(), "{:?}", step);
        }
    }

    #[test]
    fn single_chores_never_cost_more_than_the_share(inst in instance(ItemKind::Chores, 1..=4, 5)) {
        for a in 1..=inst.n() {
            let share = mu(&inst, a);
            prop_assert!(inst.row(a).iter().all(|v| *v >= share));
        }
    }

    #[test]
    fn structured_goods_partitions(inst in instance(ItemKind::Goods, 2..=4, 5)) {
        let ord = ordered(&inst);
        let n = inst.n();
        for a in 1..=n {
            let share = mu(&ord.instance, a);
            let sp = structured_partition_goods(&ord, a).unwrap();
            prop_assert!(sp.partition.check_partition(inst.m()).is_ok());
            prop_assert!(meets_all(&ord.instance, a, &share, &sp.partition));
            let high = ord.instance.row(a).iter().filter(|v| **v >= share).count();
            if inst.m() > n {
                for j in 1..=high.min(n - 1) {
                    prop_assert!(sp.partition.bundles.contains(&Bundle::new([j])));
                }
            }
        }
    }

    #[test]
    fn structured_chores_partitions(inst in instance(ItemKind::Chores, 2..=4, 3)) {
        let ord = ordered(&inst);
        let (n, m) = (inst.n(), inst.m());
        if m <= n || m - n >= n {
            return Ok(());
        }
        let c = m - n;
        for a in 1..=n {
            let share = mu(&ord.instance, a);
            let sp = structured_partition_chores(&ord, a).unwrap();
            prop_assert!(sp.partition.check_partition(m).is_ok());
            prop_assert!(meets_all(&ord.instance, a, &share, &sp.partition));
            let singles: Vec<usize> = sp.partition.bundles.iter().filter(|b| b.len() == 1).map(|b| b.items()[0]).collect();
            prop_assert_eq!(singles.clone(), (1..=singles.len()).collect::<Vec<_>>());
            // a bundle of k >= 2 chores leaves room for n - (c - k + 2) singletons
            if let Some(k) = sp.partition.bundles.iter().map(Bundle::len).filter(|&k| k >= 2).max() {
                prop_assert!(singles.len() + c + 2 >= n + k);
            }
            let pairs: Vec<&Bundle> = sp.partition.bundles.iter().filter(|b| b.len() == 2 && b.items()[0] >= n).collect();
            if !pairs.is_empty() {
                prop_assert!(pairs.contains(&&Bundle::new([n, n + 1])));
            }
        }
    }

    #[test]
    fn pair_normalization_keeps_mms_partitions(inst in instance(ItemKind::Chores, 2..=3, 4)) {
        let ord = ordered(&inst);
        let n = inst.n();
        for a in 1..=n {
            let rec = mms_value(&ord.instance, a, OracleMethod::BranchAndBound).unwrap();
            let moved = normalize_pair(&rec.witness, n);
            prop_assert!(meets_all(&ord.instance, a, &rec.mu, &moved));
            prop_assert_eq!(moved.partition_type(), rec.witness.partition_type());
            for j in 1..n {
                let pos = |p: &mms_core::Allocation| p.bundles.iter().position(|b| b.contains(j));
                prop_assert_eq!(pos(&moved), pos(&rec.witness));
            }
        }
    }
}
