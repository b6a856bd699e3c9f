//! Instances, bundles, allocations and the ordered-instance transform.
//!
//! Agents and items are numbered from 1. In an ordered goods instance item 1 is
//! every agent's best good; in an ordered chores instance item 1 is every
//! agent's worst chore, so item indices follow decreasing absolute value in
//! both cases.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{format_rational, Rational};

pub type AgentId = usize;
pub type ItemId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Goods,
    Chores,
}

impl ItemKind {
    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Goods => "goods",
            ItemKind::Chores => "chores",
        }
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sorted set of 1-based item ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Bundle(Vec<ItemId>);

impl From<Vec<ItemId>> for Bundle {
    fn from(v: Vec<ItemId>) -> Self {
        Bundle::new(v)
    }
}

impl From<Bundle> for Vec<ItemId> {
    fn from(b: Bundle) -> Self {
        b.0
    }
}

impl Bundle {
    pub fn new(items: impl IntoIterator<Item = ItemId>) -> Self {
        let mut v: Vec<ItemId> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Bundle(v)
    }

    pub fn empty() -> Self {
        Bundle(Vec::new())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Smallest item id, i.e. the most valuable good or the worst chore.
    pub fn first(&self) -> Option<ItemId> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<ItemId> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &Bundle) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        Bundle::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn without(&self, item: ItemId) -> Bundle {
        Bundle(self.0.iter().copied().filter(|&j| j != item).collect())
    }

    pub fn with(&self, item: ItemId) -> Bundle {
        Bundle::new(self.0.iter().copied().chain(std::iter::once(item)))
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// An n-partition of the items; bundle `i - 1` belongs to agent `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub bundles: Vec<Bundle>,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>) -> Self {
        Allocation { bundles }
    }

    pub fn bundle(&self, agent: AgentId) -> &Bundle {
        &self.bundles[agent - 1]
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    /// Checks that the bundles are pairwise disjoint and cover `1..=m` exactly.
    pub fn check_partition(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m + 1];
        for b in &self.bundles {
            for &j in b.items() {
                if j == 0 || j > m {
                    return Err(Error::ShapeMismatch(format!("item {j} outside 1..={m}")));
                }
                if seen[j] {
                    return Err(Error::ShapeMismatch(format!("item {j} appears twice")));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = (1..=m).find(|&j| !seen[j]) {
            return Err(Error::ShapeMismatch(format!("item {j} is not allocated")));
        }
        Ok(())
    }

    pub fn partition_type(&self) -> PartitionType {
        PartitionType::of(self)
    }
}

/// Sorted bundle cardinalities of a partition, e.g. `(1, 2, 3, 4)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionType(Vec<usize>);

impl PartitionType {
    pub fn new(mut sizes: Vec<usize>) -> Self {
        sizes.sort_unstable();
        PartitionType(sizes)
    }

    pub fn of(alloc: &Allocation) -> Self {
        PartitionType::new(alloc.bundles.iter().map(Bundle::len).collect())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for PartitionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// n agents, m items, additive valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    kind: ItemKind,
    m: usize,
    valuations: Vec<Vec<Rational>>,
}

pub fn make_instance(kind: ItemKind, valuations: Vec<Vec<Rational>>) -> Result<Instance> {
    if valuations.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let m = valuations[0].len();
    for (i, row) in valuations.iter().enumerate() {
        if row.len() != m {
            return Err(Error::RaggedMatrix {
                row: i + 1,
                expected: m,
                found: row.len(),
            });
        }
        for (j, v) in row.iter().enumerate() {
            let ok = match kind {
                ItemKind::Goods => !v.is_negative(),
                ItemKind::Chores => !v.is_positive(),
            };
            if !ok {
                return Err(Error::SignViolation {
                    agent: i + 1,
                    item: j + 1,
                    value: format_rational(v),
                    kind: kind.name(),
                });
            }
        }
    }
    Ok(Instance { kind, m, valuations })
}

impl Instance {
    /// Residual instances may have no agents left; callers guarantee the sign
    /// and shape invariants.
    pub(crate) fn from_parts(kind: ItemKind, m: usize, valuations: Vec<Vec<Rational>>) -> Self {
        debug_assert!(valuations.iter().all(|r| r.len() == m));
        Instance { kind, m, valuations }
    }

    pub fn kind(&self) -> ItemKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, agent: AgentId) -> &[Rational] {
        &self.valuations[agent - 1]
    }

    pub fn value(&self, agent: AgentId, item: ItemId) -> &Rational {
        &self.valuations[agent - 1][item - 1]
    }

    pub fn valuations(&self) -> &[Vec<Rational>] {
        &self.valuations
    }

    pub fn bundle_value(&self, agent: AgentId, bundle: &Bundle) -> Rational {
        bundle_value(self, agent, bundle)
    }

    /// True when every row is sorted in the ordered-instance sense for its kind.
    pub fn is_ordered(&self) -> bool {
        self.valuations.iter().all(|row| {
            row.windows(2).all(|w| match self.kind {
                ItemKind::Goods => w[0] >= w[1],
                ItemKind::Chores => w[0] <= w[1],
            })
        })
    }
}

pub fn bundle_value(instance: &Instance, agent: AgentId, bundle: &Bundle) -> Rational {
    let row = instance.row(agent);
    bundle
        .items()
        .iter()
        .fold(Rational::zero(), |acc, &j| acc + &row[j - 1])
}

/// An ordered instance together with the per-agent sort that produced it:
/// `source_ranks[i][j]` is the original item placed at ordered position `j + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedInstance {
    pub instance: Instance,
    pub source_ranks: Vec<Vec<ItemId>>,
}

impl OrderedInstance {
    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn m(&self) -> usize {
        self.instance.m()
    }

    pub fn kind(&self) -> ItemKind {
        self.instance.kind()
    }

    /// Wraps an instance that is already ordered, with identity ranks.
    pub fn assume_ordered(instance: Instance) -> Result<Self> {
        if !instance.is_ordered() {
            return Err(Error::PreconditionUnmet("instance is not ordered".into()));
        }
        let ranks = vec![(1..=instance.m()).collect(); instance.n()];
        Ok(OrderedInstance {
            instance,
            source_ranks: ranks,
        })
    }
}

pub fn to_ordered(instance: &Instance) -> OrderedInstance {
    let mut rows = Vec::with_capacity(instance.n());
    let mut ranks = Vec::with_capacity(instance.n());
    for row in instance.valuations() {
        let mut idx: Vec<ItemId> = (1..=instance.m()).collect();
        // stable: ties keep original id order
        match instance.kind() {
            ItemKind::Goods => idx.sort_by(|&a, &b| row[b - 1].cmp(&row[a - 1])),
            ItemKind::Chores => idx.sort_by(|&a, &b| row[a - 1].cmp(&row[b - 1])),
        }
        rows.push(idx.iter().map(|&j| row[j - 1].clone()).collect());
        ranks.push(idx);
    }
    OrderedInstance {
        instance: Instance::from_parts(instance.kind(), instance.m(), rows),
        source_ranks: ranks,
    }
}

/// Converts an allocation of the ordered instance into one of the original
/// instance that is at least as good for every agent.
///
/// Goods are handed out from item 1 (best) upwards and chores from item m
/// (mildest) downwards; the holder of each ordered item takes its most valued
/// remaining original item, lowest id on ties.
pub fn lift_allocation(
    ordered: &OrderedInstance,
    ordered_alloc: &Allocation,
    original: &Instance,
) -> Result<Allocation> {
    let m = original.m();
    if ordered.m() != m || ordered.n() != original.n() {
        return Err(Error::ShapeMismatch(
            "ordered instance does not match the original".into(),
        ));
    }
    if ordered_alloc.len() != original.n() {
        return Err(Error::ShapeMismatch(format!(
            "allocation has {} bundles for {} agents",
            ordered_alloc.len(),
            original.n()
        )));
    }
    ordered_alloc.check_partition(m)?;

    let mut holder = vec![0usize; m + 1];
    for (a, b) in ordered_alloc.bundles.iter().enumerate() {
        for &j in b.items() {
            holder[j] = a + 1;
        }
    }
    let order: Vec<ItemId> = match original.kind() {
        ItemKind::Goods => (1..=m).collect(),
        ItemKind::Chores => (1..=m).rev().collect(),
    };
    let mut taken = vec![false; m + 1];
    let mut picks: Vec<Vec<ItemId>> = vec![Vec::new(); original.n()];
    for j in order {
        let agent = holder[j];
        let row = original.row(agent);
        let mut best: Option<ItemId> = None;
        for cand in 1..=m {
            if taken[cand] {
                continue;
            }
            match best {
                Some(b) if row[cand - 1] <= row[b - 1] => {}
                _ => best = Some(cand),
            }
        }
        let pick = best.expect("one item remains per ordered item");
        taken[pick] = true;
        picks[agent - 1].push(pick);
    }
    Ok(Allocation::new(picks.into_iter().map(Bundle::new).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{int, ratio};

    fn goods(rows: &[&[i64]]) -> Instance {
        make_instance(
            ItemKind::Goods,
            rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn make_instance_examples() {
        let inst = goods(&[&[1, 2], &[2, 1]]);
        assert_eq!((inst.n(), inst.m()), (2, 2));
        let err = make_instance(ItemKind::Goods, vec![vec![int(1), int(-1)]]).unwrap_err();
        assert!(matches!(err, Error::SignViolation { agent: 1, item: 2, .. }));
        let chores = make_instance(ItemKind::Chores, vec![vec![int(-3), int(0)], vec![int(-1), int(-1)]]).unwrap();
        assert_eq!((chores.n(), chores.m()), (2, 2));
        assert_eq!(make_instance(ItemKind::Goods, vec![]), Err(Error::EmptyMatrix));
        assert!(matches!(
            make_instance(ItemKind::Goods, vec![vec![int(1)], vec![]]),
            Err(Error::RaggedMatrix { .. })
        ));
    }

    #[test]
    fn bundle_value_examples() {
        let inst = goods(&[&[3, 2, 1]]);
        assert_eq!(bundle_value(&inst, 1, &Bundle::new([1, 3])), int(4));
        assert_eq!(bundle_value(&inst, 1, &Bundle::empty()), int(0));
        let frac = make_instance(ItemKind::Goods, vec![vec![ratio(1, 2), ratio(1, 3)]]).unwrap();
        assert_eq!(bundle_value(&frac, 1, &Bundle::new([1, 2])), ratio(5, 6));
    }

    #[test]
    fn to_ordered_sorts_and_records_ranks() {
        let o = to_ordered(&goods(&[&[1, 3, 2]]));
        assert_eq!(o.instance.row(1), &[int(3), int(2), int(1)]);
        assert_eq!(o.source_ranks[0], vec![2, 3, 1]);

        let already = goods(&[&[5, 4, 4], &[2, 2, 0]]);
        let o = to_ordered(&already);
        assert_eq!(o.instance, already);
        assert!(o.source_ranks.iter().all(|r| r == &vec![1, 2, 3]));

        let chores = make_instance(ItemKind::Chores, vec![vec![int(-1), int(-5), int(-3)]]).unwrap();
        let o = to_ordered(&chores);
        assert_eq!(o.instance.row(1), &[int(-5), int(-3), int(-1)]);
        assert_eq!(o.source_ranks[0], vec![2, 3, 1]);
    }

    #[test]
    fn lift_identity_on_ordered_input() {
        let inst = goods(&[&[5, 3, 1], &[4, 4, 2]]);
        let o = to_ordered(&inst);
        let alloc = Allocation::new(vec![Bundle::new([1]), Bundle::new([2, 3])]);
        let lifted = lift_allocation(&o, &alloc, &inst).unwrap();
        for a in 1..=2 {
            assert_eq!(
                bundle_value(&inst, a, lifted.bundle(a)),
                bundle_value(&o.instance, a, alloc.bundle(a))
            );
        }
    }

    #[test]
    fn lift_two_agent_example() {
        // enumerated by hand: agent 1 holds ordered item 1 and takes its
        // favourite original item 2; agent 2 is left with item 1, its favourite
        let inst = goods(&[&[1, 3], &[3, 1]]);
        let o = to_ordered(&inst);
        let alloc = Allocation::new(vec![Bundle::new([1]), Bundle::new([2])]);
        let lifted = lift_allocation(&o, &alloc, &inst).unwrap();
        assert_eq!(lifted.bundles, vec![Bundle::new([2]), Bundle::new([1])]);
        assert_eq!(bundle_value(&inst, 1, lifted.bundle(1)), int(3));
        assert_eq!(bundle_value(&inst, 2, lifted.bundle(2)), int(3));
    }

    #[test]
    fn lift_rejects_bad_shape() {
        let inst = goods(&[&[1, 3], &[3, 1]]);
        let o = to_ordered(&inst);
        let alloc = Allocation::new(vec![Bundle::new([1]), Bundle::new([1])]);
        assert!(matches!(
            lift_allocation(&o, &alloc, &inst),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn check_partition_detects_gaps() {
        let a = Allocation::new(vec![Bundle::new([1, 2]), Bundle::empty()]);
        assert!(a.check_partition(2).is_ok());
        assert!(a.check_partition(3).is_err());
        assert_eq!(a.partition_type().sizes(), &[0, 2]);
    }
}
