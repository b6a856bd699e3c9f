//! The domination order on bundles of an ordered instance and grouping of
//! tail bundles by shared subsets.
//!
//! `B` dominates `B'` when an injection `f: B' -> B` with `f(j) <= j` exists,
//! i.e. every item of `B'` can be matched to a distinct item of `B` that is at
//! least as early in the common order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{AgentId, Bundle, ItemId, ItemKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominationWitness {
    /// `(j, f(j))` for every `j` of the dominated bundle, ascending in `j`.
    pub mapping: Vec<(ItemId, ItemId)>,
}

impl DominationWitness {
    pub fn image(&self, j: ItemId) -> Option<ItemId> {
        self.mapping.iter().find(|(a, _)| *a == j).map(|&(_, b)| b)
    }
}

/// Greedy construction: scan `b_prime` ascending and give each item the
/// smallest unused item of `b` that is not later than it. If the smallest
/// candidate is unavailable no assignment exists, because the items of `B'`
/// processed so far already use up every earlier slot.
pub fn dominates(b: &Bundle, b_prime: &Bundle) -> Option<DominationWitness> {
    if b.len() < b_prime.len() {
        return None;
    }
    let src = b.items();
    let mut next = 0;
    let mut mapping = Vec::with_capacity(b_prime.len());
    for &j in b_prime.items() {
        if next < src.len() && src[next] <= j {
            mapping.push((j, src[next]));
            next += 1;
        } else {
            return None;
        }
    }
    Some(DominationWitness { mapping })
}

pub fn strictly_dominates(b: &Bundle, b_prime: &Bundle) -> bool {
    b != b_prime && dominates(b, b_prime).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TailBundle {
    pub agent: AgentId,
    pub bundle: Bundle,
}

/// A `(k-1)`-subset shared by several size-`k` tail bundles.
pub type SubsetKey = Bundle;

/// Registers every size-`k` tail under each of its `k` subsets of size `k - 1`.
pub fn group_tail_bundles(tails: &[TailBundle], k: usize, c: usize, n: usize) -> BTreeMap<SubsetKey, Vec<TailBundle>> {
    let mut groups: BTreeMap<SubsetKey, Vec<TailBundle>> = BTreeMap::new();
    if k < 2 {
        return groups;
    }
    for t in tails.iter().filter(|t| t.bundle.len() == k) {
        debug_assert!(t.bundle.items().iter().all(|&j| j >= n && j <= n + c));
        for &drop in t.bundle.items() {
            groups.entry(t.bundle.without(drop)).or_default().push(t.clone());
        }
    }
    for members in groups.values_mut() {
        members.sort();
    }
    groups
}

/// Within a group sharing `S`, the bundle `S ∪ {g}` with the latest extra item
/// (goods: dominated by all others) or the earliest (chores: dominating all
/// others). Ties go to the lowest agent id.
pub fn pick_dominated(group: &[TailBundle], kind: ItemKind) -> Result<TailBundle> {
    let first = group.first().ok_or(Error::EmptyGroup)?;
    let key = |t: &TailBundle| t.bundle.items().to_vec();
    let pick = group.iter().fold(first, |best, t| {
        let better = match kind {
            ItemKind::Goods => key(t) > key(best),
            ItemKind::Chores => key(t) < key(best),
        };
        if better || (key(t) == key(best) && t.agent < best.agent) {
            t
        } else {
            best
        }
    });
    Ok(pick.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(items: &[usize]) -> Bundle {
        Bundle::new(items.iter().copied())
    }

    #[test]
    fn figure_pair() {
        let w = dominates(&b(&[3, 7, 8, 11, 14]), &b(&[6, 7, 11, 13])).unwrap();
        for &(j, f) in &w.mapping {
            assert!(f <= j);
        }
        assert!(strictly_dominates(&b(&[3, 7, 8, 11, 14]), &b(&[6, 7, 11, 13])));
    }

    #[test]
    fn basic_cases() {
        let w = dominates(&b(&[2, 4]), &b(&[2, 4])).unwrap();
        assert_eq!(w.mapping, vec![(2, 2), (4, 4)]);
        assert!(!strictly_dominates(&b(&[2, 4]), &b(&[2, 4])));
        assert!(dominates(&b(&[2, 5]), &b(&[1, 4])).is_none());
        assert!(!strictly_dominates(&b(&[1]), &b(&[2, 3])));
    }

    #[test]
    fn grouping() {
        let n = 5;
        let tails = vec![
            TailBundle {
                agent: 1,
                bundle: b(&[5, 6, 7]),
            },
            TailBundle {
                agent: 2,
                bundle: b(&[5, 6, 8]),
            },
        ];
        let g = group_tail_bundles(&tails, 3, 4, n);
        assert_eq!(g[&b(&[5, 6])].len(), 2);
        let single = group_tail_bundles(&tails[..1], 3, 4, n);
        assert_eq!(single.len(), 3);
    }

    #[test]
    fn pick_examples() {
        let g = vec![
            TailBundle {
                agent: 1,
                bundle: b(&[5, 6, 9]),
            },
            TailBundle {
                agent: 2,
                bundle: b(&[5, 6, 11]),
            },
        ];
        assert_eq!(pick_dominated(&g, ItemKind::Goods).unwrap().bundle, b(&[5, 6, 11]));
        assert_eq!(pick_dominated(&g, ItemKind::Chores).unwrap().bundle, b(&[5, 6, 9]));
        assert_eq!(pick_dominated(&g[..1], ItemKind::Goods).unwrap().agent, 1);
        assert_eq!(pick_dominated(&[], ItemKind::Goods), Err(Error::EmptyGroup));
    }
}
