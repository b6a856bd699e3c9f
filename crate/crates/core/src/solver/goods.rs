//! Goods: the generic dispatcher, the `m <= 2n + 2` reduction, the
//! envy-free-matching step, the domination recursion for large `n`, and the
//! dedicated case analyses for `n + 6` and `n + 7` goods.

use crate::domination::{group_tail_bundles, pick_dominated, TailBundle};
use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Bundle, Instance, ItemId, ItemKind, OrderedInstance};
use crate::matching::{envy_free_matching, hall_deficient_split, max_matching, BipartiteGraph};
use crate::mms::{self, meets_all, partition_with_sizes, OracleMethod};
use crate::reductions::{
    apply_mapped, reduce_pair_blockable, reduce_pair_from_high, reduce_pigeonhole_pair, reduce_single_item, Award,
    ReductionStep, Rule,
};
use crate::value::Rational;

use super::{base_case, identical_base, meeting, run, Action, Round, SolveOutcome, SolverConfig};

pub fn solve(instance: &Instance) -> SolveOutcome {
    solve_with(instance, &SolverConfig::default())
}

pub fn solve_with(instance: &Instance, config: &SolverConfig) -> SolveOutcome {
    if instance.kind() != ItemKind::Goods {
        return SolveOutcome::unresolved("the goods solver needs a goods instance".into(), None);
    }
    run(instance, config, dispatch)
}

/// `m <= n + 6` with `n != 3`.
pub fn solve_c6(instance: &Instance, config: &SolverConfig) -> Result<SolveOutcome> {
    let (n, m) = (instance.n(), instance.m());
    if instance.kind() != ItemKind::Goods || m > n + 6 {
        return Err(Error::PreconditionUnmet(format!(
            "expected goods with m <= n + 6, got {n}x{m}"
        )));
    }
    if n == 3 && m == 9 {
        return Err(Error::NEqualsThree);
    }
    Ok(solve_with(instance, config))
}

/// `n >= 8` and `m <= n + 7`.
pub fn solve_c7(instance: &Instance, config: &SolverConfig) -> Result<SolveOutcome> {
    let (n, m) = (instance.n(), instance.m());
    if n < 8 {
        return Err(Error::TooFewAgents(n));
    }
    if instance.kind() != ItemKind::Goods || m > n + 7 {
        return Err(Error::PreconditionUnmet(format!(
            "expected goods with m <= n + 7, got {n}x{m}"
        )));
    }
    Ok(solve_with(instance, config))
}

/// Whether instances of this shape are always solved constructively.
fn safe(round: &Round, n: usize, m: usize) -> bool {
    n <= 2 || m <= n || n as u128 >= round.n_c(ItemKind::Goods, m - n)
}

fn dispatch(round: &Round) -> Result<Option<Action>> {
    if let Some(a) = base_case(round)? {
        return Ok(Some(a));
    }
    let (n, m) = (round.n(), round.m());
    let (inst, ord, mu) = (round.inst(), round.ordered, round.mu);
    let c = m - n;

    if let Some(s) = reduce_single_item(inst, mu).filter(|_| safe(round, n - 1, m - 1)) {
        return Ok(Some(Action::step(s)));
    }
    let pair_safe = safe(round, n - 1, m - 2);
    let simple = [
        reduce_pigeonhole_pair(ord, mu),
        reduce_pair_from_high(ord, mu),
        reduce_pair_blockable(inst, mu),
    ];
    if let Some(s) = simple.into_iter().flatten().find(|_| pair_safe) {
        return Ok(Some(Action::step(s)));
    }

    let routed = match (c, n) {
        (0..=5, _) | (6, 5..) | (7, 9..) => Some(Action::step(reduce_2n2(ord, mu)?)),
        (6, 4) => four_by_ten(round)?,
        (7, 8) => eight_by_fifteen(round)?,
        _ if c >= 3 && n as u128 >= round.n_c(ItemKind::Goods, c) => theorem1_step(round)?,
        _ => None,
    };
    if routed.is_some() {
        return Ok(routed);
    }
    identical_base(round)
}

/// One agent and one or two goods, for any ordered instance with
/// `m <= 2n + 2`: good 1 if someone accepts it, else `{n, n+1}` if someone
/// accepts that, else a pair around a good that nearly every agent's MMS
/// partition puts in a 2-bundle.
pub fn reduce_2n2(ordered: &OrderedInstance, mu: &[Rational]) -> Result<ReductionStep> {
    let inst = &ordered.instance;
    let (n, m) = (inst.n(), inst.m());
    if inst.kind() != ItemKind::Goods || n < 2 || m > 2 * n + 2 || m < 2 {
        return Err(Error::PreconditionUnmet(format!(
            "reduce_2n2 needs goods with m <= 2n + 2, got {n}x{m}"
        )));
    }
    if let Some(a) = (1..=n).find(|&a| inst.value(a, 1) >= &mu[a - 1]) {
        return Ok(ReductionStep::single(Rule::SingleItem, a, Bundle::new([1])));
    }
    if let Some(s) = reduce_pigeonhole_pair(ordered, mu) {
        return Ok(s);
    }
    // holders[g] = (agent, partner) for each agent whose witness pairs g
    let mut holders: Vec<Vec<(AgentId, ItemId)>> = vec![Vec::new(); n];
    for a in 1..=n {
        let witness = mms::mms_value(inst, a, OracleMethod::BranchAndBound)?.witness;
        for b in witness.bundles.iter().filter(|b| b.len() == 2) {
            let (x, y) = (b.items()[0], b.items()[1]);
            for (g, partner) in [(x, y), (y, x)] {
                if g < n {
                    holders[g].push((a, partner));
                }
            }
        }
    }
    for (g, hs) in holders.iter().enumerate().skip(1) {
        if hs.len() + 1 >= n {
            let lacking = (1..=n).find(|a| !hs.iter().any(|h| h.0 == *a));
            let (owner, bundle) = dominated_pair(g, hs);
            let to = match lacking {
                Some(l) if inst.bundle_value(l, &bundle) >= mu[l - 1] => l,
                _ => owner,
            };
            return Ok(ReductionStep::single(Rule::MostlyOverlappingPair, to, bundle));
        }
    }
    Err(Error::InternalInvariantViolation(
        "no good is paired by n - 1 agents although every 2-bundle meets goods 1..n-1".into(),
    ))
}

/// Among pairs `{g, x}`, the one with the worst partner and its lowest holder.
fn dominated_pair(g: ItemId, holders: &[(AgentId, ItemId)]) -> (AgentId, Bundle) {
    let x = holders.iter().map(|h| h.1).max().expect("non-empty holders");
    let owner = holders
        .iter()
        .filter(|h| h.1 == x)
        .map(|h| h.0)
        .min()
        .expect("holder of the maximum");
    (owner, Bundle::new([g, x]))
}

/// Uses an MMS partition of `agent` with at least `n - 1` bundles of at most
/// two goods (or `n - 2` singletons) to either allocate everything through a
/// perfect matching or remove the agents of a non-empty envy-free matching,
/// each with two goods.
pub fn efm_step(ordered: &OrderedInstance, agent: AgentId, partition: &Allocation, mu: &[Rational]) -> Result<Action> {
    let inst = &ordered.instance;
    let n = inst.n();
    let mu_a = &mu[agent - 1];
    if *mu_a == Rational::from_integer(0.into()) {
        return Err(Error::PreconditionUnmet(
            "agent has a zero share; use the pigeonhole pair".into(),
        ));
    }
    if partition.len() != n || !meets_all(inst, agent, mu_a, partition) {
        return Err(Error::PreconditionUnmet("not an MMS partition of the agent".into()));
    }
    let bundles = &partition.bundles;
    let accepts = |a: AgentId, b: usize| inst.bundle_value(a, &bundles[b]) >= mu[a - 1];
    let graph = |xs: &[AgentId], ys: &[usize]| {
        let mut g = BipartiteGraph::new(xs.len(), ys.len());
        for (x, &a) in xs.iter().enumerate() {
            for (y, &b) in ys.iter().enumerate() {
                if accepts(a, b) {
                    g.add_edge(x, y);
                }
            }
        }
        g
    };

    let all: Vec<AgentId> = (1..=n).collect();
    let every: Vec<usize> = (0..n).collect();
    let full = max_matching(&graph(&all, &every));
    if full.len() == n {
        let mut out = vec![Bundle::empty(); n];
        for &(x, y) in &full.pairs {
            out[x] = bundles[y].clone();
        }
        return Ok(Action::finish(Allocation::new(out), Rule::EfmPerfect));
    }

    let small: Vec<usize> = (0..n).filter(|&b| bundles[b].len() <= 2).collect();
    let singles: Vec<usize> = (0..n).filter(|&b| bundles[b].len() == 1).collect();
    let others: Vec<AgentId> = all.iter().copied().filter(|&a| a != agent).collect();

    if small.len() + 1 >= n {
        let (np, app) = hall_deficient_split(&graph(&others, &small)).ok_or_else(|| {
            Error::InternalInvariantViolation("small bundles saturate the other agents but no perfect matching".into())
        })?;
        let np: Vec<AgentId> = np.into_iter().map(|x| others[x]).collect();
        let app: Vec<usize> = app.into_iter().map(|y| small[y]).collect();
        let xs: Vec<AgentId> = all.iter().copied().filter(|a| !np.contains(a)).collect();
        let ys: Vec<usize> = small.iter().copied().filter(|b| !app.contains(b)).collect();
        let efm = envy_free_matching(&graph(&xs, &ys));
        if efm.is_empty() {
            return Err(Error::InternalInvariantViolation("empty envy-free matching".into()));
        }
        let matched: Vec<(AgentId, usize)> = efm.pairs.iter().map(|&(x, y)| (xs[x], ys[y])).collect();
        return Ok(Action::step(batch(inst, bundles, &matched)));
    }

    if singles.len() + 2 >= n {
        let m1 = max_matching(&graph(&others, &singles));
        if m1.len() == singles.len() {
            let awards = m1
                .pairs
                .iter()
                .map(|&(x, y)| Award {
                    agent: others[x],
                    bundle: bundles[singles[y]].clone(),
                })
                .collect();
            return Ok(Action::step(ReductionStep {
                rule: Rule::SingleItem,
                awards,
            }));
        }
        let efm = envy_free_matching(&graph(&all, &singles));
        if efm.is_empty() {
            return Err(Error::PreconditionUnmet(
                "no envy-free matching onto the singletons".into(),
            ));
        }
        let matched: Vec<(AgentId, usize)> = efm.pairs.iter().map(|&(x, y)| (all[x], singles[y])).collect();
        return Ok(Action::step(batch(inst, bundles, &matched)));
    }
    Err(Error::PreconditionUnmet(
        "partition has fewer than n - 1 bundles of at most two goods".into(),
    ))
}

/// Matched pairs are handed out as they are; each matched singleton is
/// topped up with the worst good outside every matched bundle.
fn batch(inst: &Instance, bundles: &[Bundle], matched: &[(AgentId, usize)]) -> ReductionStep {
    let mut used = vec![false; inst.m() + 1];
    for &(_, b) in matched {
        for &j in bundles[b].items() {
            used[j] = true;
        }
    }
    let mut awards: Vec<Award> = matched
        .iter()
        .filter(|&&(_, b)| bundles[b].len() != 1)
        .map(|&(a, b)| Award {
            agent: a,
            bundle: bundles[b].clone(),
        })
        .collect();
    let mut singles: Vec<(AgentId, ItemId)> = matched
        .iter()
        .filter(|&&(_, b)| bundles[b].len() == 1)
        .map(|&(a, b)| (a, bundles[b].items()[0]))
        .collect();
    singles.sort_by_key(|s| s.1);
    for (a, j) in singles {
        let pad = (1..=inst.m()).rev().find(|&k| !used[k]);
        let bundle = match pad {
            Some(k) => {
                used[k] = true;
                Bundle::new([j, k])
            }
            None => Bundle::new([j]),
        };
        awards.push(Award { agent: a, bundle });
    }
    awards.sort_by_key(|a| a.agent);
    ReductionStep {
        rule: Rule::EfmBatch,
        awards,
    }
}

/// The smallest bundle made only of goods `n..`, lexicographically first on
/// ties.
pub(crate) fn tail_bundle(partition: &Allocation, n: usize) -> Option<Bundle> {
    partition
        .bundles
        .iter()
        .filter(|b| b.first().is_some_and(|f| f >= n))
        .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.items().cmp(b.items())))
        .cloned()
}

/// The domination recursion for `n >= n_c`: the pigeonhole pair, the
/// matching step for agents with mostly small bundles, then a group of
/// same-size tails sharing all but one good, whose dominated member is handed
/// out while everybody outside the group takes one of the best goods.
pub fn theorem1_step(round: &Round) -> Result<Option<Action>> {
    let (n, m) = (round.n(), round.m());
    let (inst, ord, mu) = (round.inst(), round.ordered, round.mu);
    if m <= n + 2 {
        return Err(Error::PreconditionUnmet("needs m >= n + 3".into()));
    }
    let c = m - n;
    if let Some(s) = reduce_pigeonhole_pair(ord, mu) {
        return Ok(Some(Action::step(s)));
    }
    let mut tails = Vec::new();
    let mut partitions = Vec::with_capacity(n);
    for a in 1..=n {
        let sp = mms::structured_goods(inst, a, &mu[a - 1])?;
        if let Some(t) = tail_bundle(&sp.partition, n) {
            tails.push(TailBundle { agent: a, bundle: t });
        }
        partitions.push(sp.partition);
    }
    for a in 1..=n {
        let p = &partitions[a - 1];
        let small = p.bundles.iter().filter(|b| b.len() <= 2).count();
        let singles = p.bundles.iter().filter(|b| b.len() == 1).count();
        if small + 1 >= n || singles + 2 >= n {
            if let Ok(action) = efm_step(ord, a, p, mu) {
                return Ok(Some(action));
            }
        }
    }
    for k in 3..=c.saturating_sub(2) {
        let t = ((c - k + 1) as u128).max(round.n_c(ItemKind::Goods, c - k + 1).saturating_add(1));
        if t > n as u128 {
            continue;
        }
        let t = t as usize;
        for members in group_tail_bundles(&tails, k, c, n).into_values() {
            if members.len() < t {
                continue;
            }
            let group = &members[..t];
            let pick = pick_dominated(group, ItemKind::Goods)?;
            let outside: Vec<AgentId> = (1..=n).filter(|a| !group.iter().any(|g| g.agent == *a)).collect();
            if let Some(mut awards) = singles_matching(inst, mu, &outside) {
                awards.push(Award {
                    agent: pick.agent,
                    bundle: pick.bundle,
                });
                return Ok(Some(Action::step(ReductionStep {
                    rule: Rule::Domination,
                    awards,
                })));
            }
        }
    }
    Ok(None)
}

/// Gives goods `1..=|agents|` to `agents`, each a good it accepts.
fn singles_matching(inst: &Instance, mu: &[Rational], agents: &[AgentId]) -> Option<Vec<Award>> {
    let q = agents.len();
    let mut g = BipartiteGraph::new(q, q);
    for (x, &a) in agents.iter().enumerate() {
        for j in 1..=q {
            if inst.value(a, j) >= &mu[a - 1] {
                g.add_edge(x, j - 1);
            }
        }
    }
    let mm = max_matching(&g);
    (mm.len() == q).then(|| {
        mm.pairs
            .iter()
            .map(|&(x, y)| Award {
                agent: agents[x],
                bundle: Bundle::new([y + 1]),
            })
            .collect()
    })
}

fn accepts_item(inst: &Instance, mu: &[Rational], a: AgentId, j: ItemId) -> bool {
    inst.value(a, j) >= &mu[a - 1]
}

fn singles_step(rule: Rule, singles: &[(AgentId, ItemId)], extra: Vec<Award>) -> ReductionStep {
    let mut awards: Vec<Award> = singles
        .iter()
        .map(|&(a, j)| Award {
            agent: a,
            bundle: Bundle::new([j]),
        })
        .collect();
    awards.extend(extra);
    ReductionStep { rule, awards }
}

/// The residual of `step`, searched for an allocation giving every remaining
/// agent at least its current MMS.
fn finish_after(round: &Round, step: ReductionStep) -> Result<Option<Action>> {
    let res = apply_mapped(round.inst(), &step)?;
    let x: Vec<Rational> = res.agents.iter().map(|&a| round.mu[a - 1].clone()).collect();
    Ok(meeting(round, &res.instance, &x)?.map(|alloc| Action::then_finish(step, alloc, Rule::ThresholdSearch)))
}

/// Four agents and ten goods.
fn four_by_ten(round: &Round) -> Result<Option<Action>> {
    let (inst, ord, mu) = (round.inst(), round.ordered, round.mu);
    let (n, m) = (round.n(), round.m());
    let high1: Vec<AgentId> = (1..=n).filter(|&a| accepts_item(inst, mu, a, 1)).collect();
    if high1.is_empty() {
        return Ok(Some(Action::step(reduce_2n2(ord, mu)?)));
    }
    if let [a] = high1[..] {
        return Ok(Some(Action::step(ReductionStep::single(
            Rule::PairFromHigh,
            a,
            Bundle::new([1, m]),
        ))));
    }
    let high2: Vec<AgentId> = (1..=n).filter(|&a| accepts_item(inst, mu, a, 2)).collect();
    match high2[..] {
        [a] => {
            return Ok(Some(Action::step(ReductionStep::single(
                Rule::PairFromHigh,
                a,
                Bundle::new([2, m]),
            ))));
        }
        [a, b, ..] => {
            return Ok(Some(Action::step(singles_step(
                Rule::SingleItem,
                &[(a, 1), (b, 2)],
                vec![],
            ))));
        }
        [] => {}
    }
    for &r in &high1 {
        let step = ReductionStep::single(Rule::SingleItem, r, Bundle::new([1]));
        if let Some(action) = finish_after(round, step)? {
            return Ok(Some(action));
        }
    }
    Ok(None)
}

/// Partition types used by the eight-agent analysis: number of leading
/// singletons and the sizes of the remaining bundles.
const T3: (usize, &[usize]) = (4, &[2, 2, 3, 4]);
const T4: (usize, &[usize]) = (4, &[2, 3, 3, 3]);
const T5: (usize, &[usize]) = (3, &[2, 2, 2, 3, 3]);

/// The partner of `g` in a 2-bundle of `p`, if any.
fn pair_partner(p: &Allocation, g: ItemId) -> Option<ItemId> {
    p.bundles.iter().find(|b| b.len() == 2 && b.contains(g)).map(|b| {
        if b.items()[0] == g {
            b.items()[1]
        } else {
            b.items()[0]
        }
    })
}

/// Eight agents and fifteen goods.
fn eight_by_fifteen(round: &Round) -> Result<Option<Action>> {
    let (inst, ord, mu) = (round.inst(), round.ordered, round.mu);
    let n = round.n();
    let all: Vec<AgentId> = (1..=n).collect();

    // an agent valuing good 3 below its share has mostly 2-bundles
    for &a in &all {
        if !accepts_item(inst, mu, a, 3) {
            let sp = mms::structured_goods(inst, a, &mu[a - 1])?;
            if let Ok(action) = efm_step(ord, a, &sp.partition, mu) {
                return Ok(Some(action));
            }
        }
    }
    if let Some(s) = reduce_pigeonhole_pair(ord, mu) {
        return Ok(Some(Action::step(s)));
    }

    let six: Vec<AgentId> = all.iter().copied().filter(|&a| accepts_item(inst, mu, a, 6)).collect();
    if let Some(&i) = six.first() {
        if six.len() == 1 {
            return Ok(Some(Action::step(ReductionStep::single(
                Rule::PairFromHigh,
                i,
                Bundle::new([6, 15]),
            ))));
        }
        let five: Vec<AgentId> = all
            .iter()
            .copied()
            .filter(|&a| a != i && accepts_item(inst, mu, a, 5))
            .collect();
        if let [i1] = five[..] {
            let step = ReductionStep {
                rule: Rule::PairFromHigh,
                awards: vec![
                    Award {
                        agent: i,
                        bundle: Bundle::new([6, 14]),
                    },
                    Award {
                        agent: i1,
                        bundle: Bundle::new([5, 15]),
                    },
                ],
            };
            return Ok(Some(Action::step(step)));
        }
        let (i1, i2) = (five[0], five[1]);
        let rest: Vec<AgentId> = all
            .iter()
            .copied()
            .filter(|a| ![i, i1, i2].contains(a))
            .take(3)
            .collect();
        let singles = [(rest[0], 1), (rest[1], 2), (rest[2], 3), (i2, 4), (i1, 5), (i, 6)];
        return Ok(Some(Action::step(singles_step(Rule::SingleItem, &singles, vec![]))));
    }

    // at most one bundle with more than two goods
    for &a in &all {
        for s in 0..=5 {
            let mut sizes = vec![2; 7 - s];
            sizes.push(1 + s);
            if let Some(p) = partition_with_sizes(inst, a, &mu[a - 1], s, &sizes) {
                if let Ok(action) = efm_step(ord, a, &p, mu) {
                    return Ok(Some(action));
                }
            }
        }
    }

    // agents with five singletons
    let five: Vec<AgentId> = all.iter().copied().filter(|&a| accepts_item(inst, mu, a, 5)).collect();
    if (1..=4).contains(&five.len()) {
        let k = five.len();
        let singles: Vec<(AgentId, ItemId)> = (1..k).map(|j| (five[j - 1], j)).collect();
        let extra = vec![Award {
            agent: five[k - 1],
            bundle: Bundle::new([5, 15]),
        }];
        return Ok(Some(Action::step(singles_step(Rule::PairFromHigh, &singles, extra))));
    }
    if five.len() >= 5 {
        let np = &five[..5];
        let rest: Vec<AgentId> = all.iter().copied().filter(|a| !np.contains(a)).collect();
        for x in 0..5 {
            for y in x + 1..5 {
                for (p, q) in [(np[x], np[y]), (np[y], np[x])] {
                    let singles = [(rest[0], 1), (rest[1], 2), (rest[2], 3), (p, 4), (q, 5)];
                    if let Some(action) = finish_after(round, singles_step(Rule::SingleItem, &singles, vec![]))? {
                        return Ok(Some(action));
                    }
                }
            }
        }
        return Ok(None);
    }

    // every agent now has three or four singletons
    let mut typed: Vec<(AgentId, u8, Allocation)> = Vec::with_capacity(n);
    for &a in &all {
        let found = [(3u8, T3), (4, T4), (5, T5)]
            .into_iter()
            .find_map(|(t, (s, sizes))| partition_with_sizes(inst, a, &mu[a - 1], s, sizes).map(|p| (a, t, p)));
        match found {
            Some(f) => typed.push(f),
            None => return Ok(None),
        }
    }
    let t4: Vec<&(AgentId, u8, Allocation)> = typed.iter().filter(|t| t.1 == 4).collect();
    if t4.len() >= 7 {
        for g in 5..=7 {
            let sharers: Vec<(AgentId, ItemId)> = t4
                .iter()
                .filter_map(|t| pair_partner(&t.2, g).map(|x| (t.0, x)))
                .collect();
            if sharers.len() < 3 {
                continue;
            }
            let sharers = &sharers[..3];
            let (owner, bundle) = dominated_pair(g, sharers);
            let np: Vec<AgentId> = sharers.iter().map(|s| s.0).collect();
            let spare: Vec<AgentId> = t4.iter().map(|t| t.0).filter(|a| !np.contains(a)).take(2).collect();
            let (i, i1) = (spare[0], spare[1]);
            let rest: Vec<AgentId> = all
                .iter()
                .copied()
                .filter(|a| !np.contains(a) && *a != i && *a != i1)
                .collect();
            let singles = [(rest[0], 1), (rest[1], 2), (rest[2], 3)];
            let ok = |a: AgentId| inst.bundle_value(a, &bundle) >= mu[a - 1];
            if !ok(i) || !ok(i1) {
                let other = if !ok(i) { i1 } else { i };
                let to = if ok(other) { other } else { owner };
                let extra = vec![Award { agent: to, bundle }];
                return Ok(Some(Action::step(singles_step(
                    Rule::MostlyOverlappingPair,
                    &singles,
                    extra,
                ))));
            }
            let mut with4 = singles.to_vec();
            with4.push((i1, 4));
            let extra = vec![Award { agent: i, bundle }];
            return finish_after(round, singles_step(Rule::MostlyOverlappingPair, &with4, extra));
        }
        return Ok(None);
    }
    for g in 5..=7 {
        let holders: Vec<(AgentId, ItemId)> = typed
            .iter()
            .filter_map(|t| pair_partner(&t.2, g).map(|x| (t.0, x)))
            .collect();
        if holders.len() < 4 {
            continue;
        }
        let mut group: Vec<(AgentId, ItemId)> = holders[..4].to_vec();
        let fifth = all
            .iter()
            .copied()
            .find(|a| !group.iter().any(|h| h.0 == *a))
            .expect("eight agents");
        if let Some(h) = holders.iter().find(|h| h.0 == fifth) {
            group.push(*h);
        }
        let members: Vec<AgentId> = group.iter().map(|h| h.0).chain([fifth]).collect();
        let rest: Vec<AgentId> = all.iter().copied().filter(|a| !members.contains(a)).collect();
        let (owner, bundle) = dominated_pair(g, &group);
        let lacking = group.len() == 4;
        let to = if lacking && inst.bundle_value(fifth, &bundle) >= mu[fifth - 1] {
            fifth
        } else {
            owner
        };
        let singles = [(rest[0], 1), (rest[1], 2), (rest[2], 3)];
        let extra = vec![Award { agent: to, bundle }];
        return Ok(Some(Action::step(singles_step(
            Rule::MostlyOverlappingPair,
            &singles,
            extra,
        ))));
    }
    Ok(None)
}
