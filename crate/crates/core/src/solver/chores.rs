//! Chores: structured partitions with the `{n, n+1}` pair, the
//! mostly-small-bundles base, and domination steps that hand out the
//! dominating tail of a group.

use crate::domination::{group_tail_bundles, pick_dominated, TailBundle};
use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Bundle, Instance, ItemKind};
use crate::mms::{self, StructuredPartition};
use crate::reductions::{reduce_by_domination, reduce_pair_blockable, ReductionStep, Rule};

use super::goods::tail_bundle;
use super::{base_case, identical_base, run, Action, Round, SolveOutcome, SolverConfig};

pub fn solve_chores(instance: &Instance) -> SolveOutcome {
    solve_chores_with(instance, &SolverConfig::default())
}

pub fn solve_chores_with(instance: &Instance, config: &SolverConfig) -> SolveOutcome {
    if instance.kind() != ItemKind::Chores {
        return SolveOutcome::unresolved("the chores solver needs a chores instance".into(), None);
    }
    run(instance, config, dispatch)
}

fn safe(round: &Round, n: usize, m: usize) -> bool {
    n <= 2 || m <= n || n as u128 >= round.n_c(ItemKind::Chores, m - n)
}

fn dispatch(round: &Round) -> Result<Option<Action>> {
    if let Some(a) = base_case(round)? {
        return Ok(Some(a));
    }
    let (n, m) = (round.n(), round.m());
    let inst = round.inst();
    // a single chore never costs more than a whole MMS bundle
    for a in 1..=n {
        if inst.row(a).iter().any(|v| v < round.mu_of(a)) {
            return Err(Error::InternalInvariantViolation(format!(
                "agent {a} has a chore below its share"
            )));
        }
    }
    let c = m - n;
    if n > c {
        if let Some(a) = pipeline(round, c)? {
            return Ok(Some(a));
        }
    }
    if let Some(s) = reduce_pair_blockable(inst, round.mu).filter(|_| safe(round, n - 1, m - 2)) {
        return Ok(Some(Action::step(s)));
    }
    identical_base(round)
}

fn pipeline(round: &Round, c: usize) -> Result<Option<Action>> {
    let n = round.n();
    let inst = round.inst();
    let parts: Vec<StructuredPartition> = (1..=n)
        .map(|a| mms::structured_chores(inst, a, round.mu_of(a)))
        .collect::<Result<_>>()?;

    for a in 1..=n {
        if let Some(action) = mostly_small(round, a, &parts[a - 1].partition) {
            return Ok(Some(action));
        }
    }

    let tails: Vec<TailBundle> = (1..=n)
        .filter_map(|a| tail_bundle(&parts[a - 1].partition, n).map(|bundle| TailBundle { agent: a, bundle }))
        .collect();

    // the pair group: every size-2 tail is {n, n+1}
    let pair_group: Vec<AgentId> = tails.iter().filter(|t| t.bundle.len() == 2).map(|t| t.agent).collect();
    let t = threshold(round, c, c - 1);
    if t <= n && pair_group.len() >= t {
        let owner = pair_group[0];
        let outside: Vec<AgentId> = (1..=n).filter(|a| !pair_group[..t].contains(a)).collect();
        let step = reduce_by_domination(
            round.ordered,
            owner,
            &Bundle::new([n, n + 1]),
            &outside,
            Rule::PairDomination,
            round.mu,
        )?;
        return Ok(Some(Action::step(step)));
    }

    for k in 3..c {
        let t = threshold(round, c - k + 2, c - k + 1);
        if t > n {
            continue;
        }
        for members in group_tail_bundles(&tails, k, c, n).into_values() {
            if members.len() < t {
                continue;
            }
            let group = &members[..t];
            let pick = pick_dominated(group, ItemKind::Chores)?;
            let outside: Vec<AgentId> = (1..=n).filter(|a| !group.iter().any(|g| g.agent == *a)).collect();
            let step = reduce_by_domination(
                round.ordered,
                pick.agent,
                &pick.bundle,
                &outside,
                Rule::Domination,
                round.mu,
            )?;
            return Ok(Some(Action::step(step)));
        }
    }
    Ok(None)
}

/// `max(floor, n_{c'} + 1)`, saturating.
fn threshold(round: &Round, floor: usize, c_prime: usize) -> usize {
    let nc = round.n_c(ItemKind::Chores, c_prime).saturating_add(1);
    usize::try_from(nc).unwrap_or(usize::MAX).max(floor)
}

/// An agent whose partition has `n - 1` bundles of fewer than two chores, or
/// `n - 2` of them and one more pair.
fn mostly_small(round: &Round, agent: AgentId, partition: &Allocation) -> Option<Action> {
    let (n, m) = (round.n(), round.m());
    let inst = round.inst();
    let bundles = &partition.bundles;
    let small: Vec<usize> = (0..n).filter(|&b| bundles[b].len() < 2).collect();
    let others: Vec<AgentId> = (1..=n).filter(|&a| a != agent).collect();
    let accepts = |a: AgentId, b: &Bundle| inst.bundle_value(a, b) >= *round.mu_of(a);

    if small.len() + 1 >= n {
        let big = (0..n).find(|b| !small[..n - 1].contains(b)).expect("n bundles");
        let mut out = vec![Bundle::empty(); n];
        for (&a, &b) in others.iter().zip(&small) {
            out[a - 1] = bundles[b].clone();
        }
        out[agent - 1] = bundles[big].clone();
        return Some(Action::finish(Allocation::new(out), Rule::MostlySmallBase));
    }
    let pairs: Vec<usize> = (0..n).filter(|&b| bundles[b].len() == 2).collect();
    if small.len() + 2 != n || pairs.is_empty() {
        return None;
    }
    for &p in &pairs {
        let rest = (0..n).find(|&b| b != p && !small.contains(&b)).expect("n bundles");
        if let Some(&taker) = others.iter().find(|&&a| accepts(a, &bundles[p])) {
            let mut out = vec![Bundle::empty(); n];
            out[taker - 1] = bundles[p].clone();
            out[agent - 1] = bundles[rest].clone();
            let mut pool = small.iter();
            for &a in others.iter().filter(|&&a| a != taker) {
                out[a - 1] = bundles[*pool.next()?].clone();
            }
            return Some(Action::finish(Allocation::new(out), Rule::MostlySmallBase));
        }
        if safe(round, n - 1, m - 2) {
            return Some(Action::step(ReductionStep::single(
                Rule::MostlySmall,
                agent,
                bundles[p].clone(),
            )));
        }
    }
    None
}
