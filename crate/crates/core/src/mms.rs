//! Maximin shares: exact values with witness partitions, structured MMS
//! partitions, and threshold-feasibility search.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Bundle, Instance, ItemId, ItemKind, OrderedInstance};
use crate::search::{self, Found, ScaledRow};
use crate::value::Rational;

/// Default bound on `n^m` for exhaustive enumeration.
pub const DEFAULT_ORACLE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMethod {
    /// Enumerate all `n^m` item-to-bundle assignments.
    Exhaustive,
    /// Decision search with pruning, driven by a binary search on the share.
    #[default]
    BranchAndBound,
}

impl std::str::FromStr for OracleMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(OracleMethod::Exhaustive),
            "bnb" | "branch-and-bound" => Ok(OracleMethod::BranchAndBound),
            other => Err(Error::Parse(format!("unknown oracle method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MmsRecord {
    pub agent: AgentId,
    pub mu: Rational,
    pub witness: Allocation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredPartition {
    pub partition: Allocation,
    pub singleton_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdVector {
    pub thresholds: Vec<Rational>,
}

impl ThresholdVector {
    pub fn new(thresholds: Vec<Rational>) -> Self {
        ThresholdVector { thresholds }
    }
}

pub(crate) fn check_space(n: usize, m: usize, cap: u64) -> Result<()> {
    let size = BigUint::from(n).pow(m as u32);
    if size > BigUint::from(cap) {
        return Err(Error::TooLarge {
            size: format!("{n}^{m}"),
            cap,
        });
    }
    Ok(())
}

fn to_allocation(n: usize, bins: Vec<Vec<usize>>) -> Allocation {
    let mut bundles: Vec<Bundle> = bins
        .into_iter()
        .map(|b| Bundle::new(b.into_iter().map(|i| i + 1)))
        .collect();
    bundles.resize(n, Bundle::empty());
    Allocation::new(bundles)
}

pub fn mms_value(instance: &Instance, agent: AgentId, method: OracleMethod) -> Result<MmsRecord> {
    mms_value_capped(instance, agent, method, DEFAULT_ORACLE_CAP)
}

pub fn mms_value_capped(instance: &Instance, agent: AgentId, method: OracleMethod, cap: u64) -> Result<MmsRecord> {
    if agent == 0 || agent > instance.n() {
        return Err(Error::PreconditionUnmet(format!("agent {agent} out of range")));
    }
    let n = instance.n();
    let m = instance.m();
    let row = ScaledRow::new(instance.row(agent));
    let chores = instance.kind() == ItemKind::Chores;
    let (best, bins) = match method {
        OracleMethod::Exhaustive => {
            check_space(n, m, cap)?;
            exhaustive(&row.weights, n, chores)
        }
        OracleMethod::BranchAndBound => {
            let items: Vec<usize> = (0..m).collect();
            if chores {
                search::min_max(&row.weights, &items, n)
            } else {
                search::max_min(&row.weights, &items, n)
            }
        }
    };
    let mag = row.to_rational(&best);
    Ok(MmsRecord {
        agent,
        mu: if chores { -mag } else { mag },
        witness: to_allocation(n, bins),
    })
}

/// MMS of every agent, in agent order.
pub fn mms_all(instance: &Instance, method: OracleMethod, cap: u64) -> Result<Vec<MmsRecord>> {
    (1..=instance.n())
        .map(|a| mms_value_capped(instance, a, method, cap))
        .collect()
}

/// Odometer over all `n^m` assignments. Goods maximise the lightest bin;
/// chores minimise the heaviest.
fn exhaustive(w: &[BigInt], n: usize, chores: bool) -> (BigInt, Vec<Vec<usize>>) {
    let m = w.len();
    let wi: Option<Vec<i128>> = w.iter().map(|v| v.to_i128()).collect();
    let total: BigInt = w.iter().sum();
    let (best, assign) = match wi {
        Some(wi) if total.bits() < 120 => {
            let (b, a) = odometer(&wi, n, chores);
            (BigInt::from(b), a)
        }
        _ => odometer(w, n, chores),
    };
    let mut bins = vec![Vec::new(); n];
    for (j, &b) in assign.iter().enumerate().take(m) {
        bins[b].push(j);
    }
    (best, bins)
}

fn odometer<T>(w: &[T], n: usize, chores: bool) -> (T, Vec<usize>)
where
    T: Clone + Ord + Zero + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let m = w.len();
    let mut assign = vec![0usize; m];
    let mut sums = vec![T::zero(); n];
    sums[0] = w.iter().cloned().fold(T::zero(), |a, b| a + b);
    let score = |sums: &[T]| -> T {
        if chores {
            sums.iter().max().cloned().unwrap()
        } else {
            sums.iter().min().cloned().unwrap()
        }
    };
    let mut best = score(&sums);
    let mut best_assign = assign.clone();
    loop {
        let mut k = 0;
        loop {
            if k == m {
                return (best, best_assign);
            }
            let from = assign[k];
            sums[from] = sums[from].clone() - w[k].clone();
            if from + 1 < n {
                assign[k] = from + 1;
                sums[from + 1] = sums[from + 1].clone() + w[k].clone();
                break;
            }
            assign[k] = 0;
            sums[0] = sums[0].clone() + w[k].clone();
            k += 1;
        }
        let s = score(&sums);
        let better = if chores { s < best } else { s > best };
        if better {
            best = s;
            best_assign = assign.clone();
        }
    }
}

/// True when every bundle of `partition` is worth at least `mu` to `agent`.
pub fn meets_all(instance: &Instance, agent: AgentId, mu: &Rational, partition: &Allocation) -> bool {
    partition.bundles.iter().all(|b| &instance.bundle_value(agent, b) >= mu)
}

/// Number of leading goods valued at least `mu`; on instances with
/// `m = n + c`, `n > c > 0` and `mu` the agent's share it is at least `n - c`.
pub fn count_high_items(ordered: &OrderedInstance, agent: AgentId, mu: &Rational) -> Result<usize> {
    let inst = &ordered.instance;
    let k = count_at_least(inst.row(agent), mu);
    let (n, m) = (inst.n(), inst.m());
    if inst.kind() == ItemKind::Goods && m > n && n > m - n && k < n - (m - n) {
        return Err(Error::InternalInvariantViolation(format!(
            "agent {agent} values only {k} goods at its share, fewer than n - c = {}",
            n - (m - n)
        )));
    }
    Ok(k)
}

fn count_at_least(row: &[Rational], mu: &Rational) -> usize {
    row.iter().take_while(|v| *v >= mu).count()
}

/// Items `1..=s` as singletons followed by `bins`.
fn with_singletons(s: usize, bins: Vec<Vec<usize>>) -> Allocation {
    let mut bundles: Vec<Bundle> = (1..=s).map(|j| Bundle::new([j])).collect();
    let mut rest: Vec<Bundle> = bins
        .into_iter()
        .map(|b| Bundle::new(b.into_iter().map(|i| i + 1)))
        .collect();
    rest.sort_by_key(|b| (b.is_empty(), b.first()));
    bundles.extend(rest);
    Allocation::new(bundles)
}

fn count_singletons(a: &Allocation) -> usize {
    a.bundles.iter().filter(|b| b.len() == 1).count()
}

pub fn structured_partition_goods(ordered: &OrderedInstance, agent: AgentId) -> Result<StructuredPartition> {
    let inst = &ordered.instance;
    if inst.kind() != ItemKind::Goods {
        return Err(Error::PreconditionUnmet("goods instance required".into()));
    }
    let rec = mms_value(inst, agent, OracleMethod::BranchAndBound)?;
    structured_goods(inst, agent, &rec.mu)
}

/// An MMS partition in which goods `1..=min(n-1, k)` are singletons, `k` being
/// the number of goods worth at least `mu`. No MMS partition has more
/// singletons when `m > n`, since a singleton must be one of those `k` goods
/// and `n` singletons cannot cover `m > n` goods.
pub(crate) fn structured_goods(inst: &Instance, agent: AgentId, mu: &Rational) -> Result<StructuredPartition> {
    let (n, m) = (inst.n(), inst.m());
    if m <= n {
        let mut bundles: Vec<Bundle> = (1..=m).map(|j| Bundle::new([j])).collect();
        bundles.resize(n, Bundle::empty());
        return Ok(StructuredPartition {
            partition: Allocation::new(bundles),
            singleton_count: m,
        });
    }
    if mu.is_zero() {
        let pool: Vec<usize> = (n - 1..m).collect();
        let partition = with_singletons(n - 1, vec![pool]);
        return Ok(StructuredPartition {
            singleton_count: count_singletons(&partition),
            partition,
        });
    }
    let row = ScaledRow::new(inst.row(agent));
    let t = row.ceil_of(mu);
    let s = (n - 1).min(count_at_least(inst.row(agent), mu));
    let rest: Vec<usize> = (s..m).collect();
    match search::cover(&row.weights, &rest, n - s, &t, None, 0) {
        Found::Yes(bins) => {
            let partition = with_singletons(s, bins);
            Ok(StructuredPartition {
                singleton_count: count_singletons(&partition),
                partition,
            })
        }
        _ => Err(Error::InternalInvariantViolation(format!(
            "agent {agent}: no MMS partition with goods 1..={s} as singletons"
        ))),
    }
}

pub fn structured_partition_chores(ordered: &OrderedInstance, agent: AgentId) -> Result<StructuredPartition> {
    let inst = &ordered.instance;
    if inst.kind() != ItemKind::Chores {
        return Err(Error::PreconditionUnmet("chores instance required".into()));
    }
    let rec = mms_value(inst, agent, OracleMethod::BranchAndBound)?;
    structured_chores(inst, agent, &rec.mu)
}

/// An MMS partition with the largest possible number `s` of singletons, which
/// are chores `1..=s`, and with a qualifying size-2 bundle moved to `{n, n+1}`.
pub(crate) fn structured_chores(inst: &Instance, agent: AgentId, mu: &Rational) -> Result<StructuredPartition> {
    let (n, m) = (inst.n(), inst.m());
    if m <= n {
        let mut bundles: Vec<Bundle> = (1..=m).map(|j| Bundle::new([j])).collect();
        bundles.resize(n, Bundle::empty());
        return Ok(StructuredPartition {
            partition: Allocation::new(bundles),
            singleton_count: m,
        });
    }
    let row = ScaledRow::new(inst.row(agent));
    let cap = row.floor_cost_of(mu);
    for s in (0..n).rev() {
        let rest: Vec<usize> = (s..m).collect();
        if let Found::Yes(bins) = search::pack(&row.weights, &rest, n - s, &cap, None, 0) {
            let partition = normalize_pair(&with_singletons(s, bins), n);
            return Ok(StructuredPartition {
                singleton_count: count_singletons(&partition),
                partition,
            });
        }
    }
    Err(Error::InternalInvariantViolation(format!(
        "agent {agent}: share {mu} admits no partition"
    )))
}

/// Moves the first size-2 bundle that avoids chores `1..n-1` onto `{n, n+1}`
/// by swapping positions, keeping every cardinality and chores `1..n-1` fixed.
/// In an ordered chores instance the result is an MMS partition whenever the
/// input is.
pub fn normalize_pair(partition: &Allocation, n: usize) -> Allocation {
    let pair = partition
        .bundles
        .iter()
        .enumerate()
        .filter(|(_, b)| b.len() == 2 && b.items().iter().all(|&j| j >= n))
        .min_by_key(|(_, b)| b.items().to_vec())
        .map(|(k, _)| k);
    let Some(k) = pair else {
        return partition.clone();
    };
    let (x, y) = (partition.bundles[k].items()[0], partition.bundles[k].items()[1]);
    let mut out = partition.clone();
    // y > x >= n, so the first swap leaves y in place
    swap_items(&mut out, x, n);
    swap_items(&mut out, y, n + 1);
    out
}

fn swap_items(a: &mut Allocation, p: ItemId, q: ItemId) {
    if p == q {
        return;
    }
    for b in &mut a.bundles {
        let has_p = b.contains(p);
        let has_q = b.contains(q);
        if has_p && !has_q {
            *b = b.without(p).with(q);
        } else if has_q && !has_p {
            *b = b.without(q).with(p);
        }
    }
}

/// Rebuilds a chores MMS partition that has a bundle of size `k >= 2` into one
/// with at least `n - (c - k + 2)` singletons (`m = n + c`, `n > c > 0`): keep
/// `c - k + 2` bundles holding many chores, including a size-`k` one, and give
/// every other bundle a single chore, pulling chores out of the kept bundles
/// as needed.
pub fn raise_singletons_chores(partition: &Allocation, n: usize, m: usize, k: usize) -> Result<Allocation> {
    if m <= n || n <= m - n || k < 2 {
        return Err(Error::PreconditionUnmet(
            "requires m = n + c with n > c > 0 and k >= 2".into(),
        ));
    }
    let c = m - n;
    if k > c + 1 {
        return Err(Error::PreconditionUnmet(format!(
            "no bundle of size {k} fits {c} extra chores"
        )));
    }
    let r = c - k + 2;
    let anchor = partition
        .bundles
        .iter()
        .position(|b| b.len() == k)
        .ok_or_else(|| Error::PreconditionUnmet(format!("no bundle of size {k}")))?;
    let mut others: Vec<usize> = (0..partition.len()).filter(|&b| b != anchor).collect();
    others.sort_by(|&a, &b| {
        partition.bundles[b]
            .len()
            .cmp(&partition.bundles[a].len())
            .then(a.cmp(&b))
    });
    let mut kept: Vec<Bundle> = vec![partition.bundles[anchor].clone()];
    kept.extend(others.iter().take(r - 1).map(|&b| partition.bundles[b].clone()));
    let held: usize = kept.iter().map(Bundle::len).sum();
    if held < 2 * (c - k + 1) + k {
        return Err(Error::InternalInvariantViolation(
            "kept bundles hold too few chores".into(),
        ));
    }
    let mut loose: Vec<ItemId> = others
        .iter()
        .skip(r - 1)
        .flat_map(|&b| partition.bundles[b].items().to_vec())
        .collect();
    while loose.len() < n - r {
        // removing a chore never lowers a bundle's value
        let big = (0..kept.len())
            .max_by_key(|&b| (kept[b].len(), std::cmp::Reverse(b)))
            .unwrap();
        let j = kept[big].last().unwrap();
        kept[big] = kept[big].without(j);
        loose.push(j);
    }
    loose.sort_unstable();
    let mut bundles: Vec<Bundle> = loose.into_iter().map(|j| Bundle::new([j])).collect();
    bundles.extend(kept);
    Ok(Allocation::new(bundles))
}

/// Goods: an MMS partition with goods `1..=singles` as singletons and the
/// remaining bundles of exactly the given cardinalities, if one exists.
pub fn partition_with_sizes(
    instance: &Instance,
    agent: AgentId,
    mu: &Rational,
    singles: usize,
    sizes: &[usize],
) -> Option<Allocation> {
    let m = instance.m();
    if singles > m || instance.row(agent)[..singles].iter().any(|v| v < mu) {
        return None;
    }
    let row = ScaledRow::new(instance.row(agent));
    let t = row.ceil_of(mu);
    let rest: Vec<usize> = (singles..m).collect();
    match search::cover(&row.weights, &rest, sizes.len(), &t, Some(sizes), 0) {
        Found::Yes(bins) => {
            let mut bundles: Vec<Bundle> = (1..=singles).map(|j| Bundle::new([j])).collect();
            bundles.extend(bins.into_iter().map(|b| Bundle::new(b.into_iter().map(|i| i + 1))));
            Some(Allocation::new(bundles))
        }
        _ => None,
    }
}

pub fn find_allocation_meeting(instance: &Instance, thresholds: &ThresholdVector) -> Result<Option<Allocation>> {
    find_allocation_meeting_capped(instance, thresholds, DEFAULT_ORACLE_CAP)
}

/// Complete search for an allocation with `v_i(A_i) >= x_i` for every agent;
/// `None` proves that none exists.
pub fn find_allocation_meeting_capped(
    instance: &Instance,
    thresholds: &ThresholdVector,
    cap: u64,
) -> Result<Option<Allocation>> {
    check_space(instance.n(), instance.m(), cap)?;
    match search_meeting(instance, &thresholds.thresholds, 0)? {
        Found::Yes(a) => Ok(Some(a)),
        Found::No => Ok(None),
        Found::GaveUp => unreachable!("unbounded search cannot give up"),
    }
}

/// Threshold search with a node budget (`0` = unbounded).
pub(crate) fn search_meeting(instance: &Instance, x: &[Rational], budget: u64) -> Result<Found<Allocation>> {
    let n = instance.n();
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!("{} thresholds for {n} agents", x.len())));
    }
    let chores = instance.kind() == ItemKind::Chores;
    let rows: Vec<ScaledRow> = (1..=n).map(|a| ScaledRow::new(instance.row(a))).collect();
    let mut need = Vec::with_capacity(n);
    for (r, xa) in rows.iter().zip(x) {
        if chores {
            let cap = r.floor_cost_of(xa);
            if cap.is_negative() {
                return Ok(Found::No);
            }
            need.push(cap);
        } else {
            need.push(r.ceil_of(xa));
        }
    }
    Ok(match search::assign_meeting(&rows, &need, chores, budget) {
        Found::Yes(bins) => Found::Yes(to_allocation(n, bins)),
        Found::No => Found::No,
        Found::GaveUp => Found::GaveUp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_instance, to_ordered};
    use crate::value::int;

    fn inst<R: AsRef<[i64]>>(kind: ItemKind, rows: &[R]) -> Instance {
        make_instance(
            kind,
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| int(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn both(i: &Instance, a: AgentId) -> Rational {
        let e = mms_value(i, a, OracleMethod::Exhaustive).unwrap();
        let b = mms_value(i, a, OracleMethod::BranchAndBound).unwrap();
        assert_eq!(e.mu, b.mu);
        for rec in [&e, &b] {
            rec.witness.check_partition(i.m()).unwrap();
            let min = rec.witness.bundles.iter().map(|x| i.bundle_value(a, x)).min().unwrap();
            assert_eq!(min, rec.mu);
        }
        e.mu
    }

    #[test]
    fn mms_examples() {
        let one = inst(ItemKind::Goods, &[&[5, 3]]);
        let rec = mms_value(&one, 1, OracleMethod::BranchAndBound).unwrap();
        assert_eq!(rec.mu, int(8));
        assert_eq!(rec.witness.bundles, vec![Bundle::new([1, 2])]);
        assert_eq!(both(&inst(ItemKind::Goods, &[&[3, 2, 1, 1], &[3, 2, 1, 1]]), 1), int(3));
        assert_eq!(both(&inst(ItemKind::Goods, &[&[1, 1], &[1, 1]]), 1), int(1));
        assert_eq!(both(&inst(ItemKind::Chores, &[&[-4, -3, -2, -1]; 3]), 1), int(-4));
        assert_eq!(both(&inst(ItemKind::Goods, &[&[2, 2]; 3]), 2), int(0));
    }

    #[test]
    fn exhaustive_respects_cap() {
        let big = inst(ItemKind::Goods, &[&[1; 12]; 5]);
        assert!(matches!(
            mms_value_capped(&big, 1, OracleMethod::Exhaustive, 1000),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn structured_goods_example() {
        let o = to_ordered(&inst(ItemKind::Goods, &[&[4, 3, 2, 1]; 3]));
        let sp = structured_partition_goods(&o, 1).unwrap();
        assert_eq!(
            sp.partition.bundles,
            vec![Bundle::new([1]), Bundle::new([2]), Bundle::new([3, 4])]
        );
        assert_eq!(sp.singleton_count, 2);

        let sq = to_ordered(&inst(ItemKind::Goods, &[&[3, 2, 1]; 3]));
        assert_eq!(structured_partition_goods(&sq, 2).unwrap().singleton_count, 3);

        let zero = to_ordered(&inst(ItemKind::Goods, &[&[5, 0, 0, 0, 0]; 3]));
        let sp = structured_partition_goods(&zero, 1).unwrap();
        assert_eq!(
            sp.partition.bundles,
            vec![Bundle::new([1]), Bundle::new([2]), Bundle::new([3, 4, 5])]
        );
    }

    #[test]
    fn structured_chores_example() {
        let o = to_ordered(&inst(ItemKind::Chores, &[&[-4, -3, -2, -1]; 3]));
        let sp = structured_partition_chores(&o, 1).unwrap();
        assert_eq!(
            sp.partition.bundles,
            vec![Bundle::new([1]), Bundle::new([2]), Bundle::new([3, 4])]
        );
        let sq = to_ordered(&inst(ItemKind::Chores, &[&[-3, -2, -1]; 3]));
        assert_eq!(structured_partition_chores(&sq, 1).unwrap().singleton_count, 3);
    }

    #[test]
    fn normalize_pair_examples() {
        let a = Allocation::new(vec![
            Bundle::new([1]),
            Bundle::new([2]),
            Bundle::new([4, 5]),
            Bundle::new([3]),
        ]);
        assert_eq!(normalize_pair(&a, 4), a);
        // n = 3: pair {4, 5} avoids {1, 2} and becomes {3, 4}
        let b = Allocation::new(vec![Bundle::new([1]), Bundle::new([2, 3]), Bundle::new([4, 5])]);
        let got = normalize_pair(&b, 3);
        assert_eq!(
            got.bundles,
            vec![Bundle::new([1]), Bundle::new([2, 5]), Bundle::new([3, 4])]
        );
        let c = Allocation::new(vec![Bundle::new([1, 2]), Bundle::new([3, 6]), Bundle::new([4, 5])]);
        let got = normalize_pair(&c, 3);
        assert!(got.bundles.contains(&Bundle::new([3, 4])));
        got.check_partition(6).unwrap();
    }

    #[test]
    fn threshold_search_examples() {
        let i = inst(ItemKind::Goods, &[&[3, 2, 1, 1], &[3, 2, 1, 1]]);
        let a = find_allocation_meeting(&i, &ThresholdVector::new(vec![int(3), int(3)]))
            .unwrap()
            .unwrap();
        assert!(a.bundles.iter().all(|b| i.bundle_value(1, b) >= int(3)));
        let none = find_allocation_meeting(&i, &ThresholdVector::new(vec![int(8), int(8)])).unwrap();
        assert!(none.is_none());
        let zero = find_allocation_meeting(&i, &ThresholdVector::new(vec![int(0), int(0)])).unwrap();
        assert!(zero.is_some());
    }

    #[test]
    fn count_high_examples() {
        let o = to_ordered(&inst(ItemKind::Goods, &[&[4, 3, 2, 1]; 3]));
        assert_eq!(count_high_items(&o, 1, &int(3)).unwrap(), 2);
        assert_eq!(count_high_items(&o, 1, &int(0)).unwrap(), 4);
    }

    #[test]
    fn raise_singletons_example() {
        // n = 4, c = 2: bundles of sizes (1, 1, 2, 2) with a size-2 bundle
        let a = Allocation::new(vec![
            Bundle::new([1, 5]),
            Bundle::new([2, 6]),
            Bundle::new([3]),
            Bundle::new([4]),
        ]);
        let got = raise_singletons_chores(&a, 4, 6, 2).unwrap();
        got.check_partition(6).unwrap();
        assert!(got.bundles.iter().filter(|b| b.len() == 1).count() >= 4 - 2);
    }
}
