//! Valid reductions: award bundles to some agents and recurse on the rest,
//! never lowering a remaining agent's MMS. Steps are recorded in replayable
//! traces and can be re-checked against an exact oracle.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Bundle, Instance, ItemId, ItemKind, OrderedInstance};
use crate::mms::{self, OracleMethod, DEFAULT_ORACLE_CAP};
use crate::value::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    SingleItem,
    PairBlockable,
    PigeonholePair,
    PairFromHigh,
    MostlyOverlappingPair,
    Domination,
    PairDomination,
    EfmBatch,
    MostlySmall,
    IdenticalPartitionBase,
    TwoAgentBase,
    SingleAgent,
    Singletons,
    EfmPerfect,
    MostlySmallBase,
    ThresholdSearch,
    Exhaustive,
}

impl Rule {
    pub const ALL: [Rule; 17] = [
        Rule::SingleItem,
        Rule::PairBlockable,
        Rule::PigeonholePair,
        Rule::PairFromHigh,
        Rule::MostlyOverlappingPair,
        Rule::Domination,
        Rule::PairDomination,
        Rule::EfmBatch,
        Rule::MostlySmall,
        Rule::IdenticalPartitionBase,
        Rule::TwoAgentBase,
        Rule::SingleAgent,
        Rule::Singletons,
        Rule::EfmPerfect,
        Rule::MostlySmallBase,
        Rule::ThresholdSearch,
        Rule::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::SingleItem => "single_item",
            Rule::PairBlockable => "pair_blockable",
            Rule::PigeonholePair => "pigeonhole_pair",
            Rule::PairFromHigh => "pair_from_high",
            Rule::MostlyOverlappingPair => "mostly_overlapping_pair",
            Rule::Domination => "domination",
            Rule::PairDomination => "pair_domination",
            Rule::EfmBatch => "efm_batch",
            Rule::MostlySmall => "mostly_small",
            Rule::IdenticalPartitionBase => "identical_partition_base",
            Rule::TwoAgentBase => "two_agent_base",
            Rule::SingleAgent => "single_agent",
            Rule::Singletons => "singletons",
            Rule::EfmPerfect => "efm_perfect",
            Rule::MostlySmallBase => "mostly_small_base",
            Rule::ThresholdSearch => "threshold_search",
            Rule::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Award {
    pub agent: AgentId,
    pub bundle: Bundle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub rule: Rule,
    pub awards: Vec<Award>,
}

impl ReductionStep {
    pub fn single(rule: Rule, agent: AgentId, bundle: Bundle) -> Self {
        ReductionStep {
            rule,
            awards: vec![Award { agent, bundle }],
        }
    }

    pub fn agents(&self) -> Vec<AgentId> {
        self.awards.iter().map(|a| a.agent).collect()
    }

    pub fn items(&self) -> Vec<ItemId> {
        self.awards
            .iter()
            .flat_map(|a| a.bundle.items().iter().copied())
            .collect()
    }
}

/// Steps in application order, then the allocation of what is left. Ids in
/// every step and in `final` refer to the instance the trace was built for;
/// agents removed by a step hold an empty bundle in `final`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    #[serde(rename = "final")]
    pub final_allocation: Allocation,
    /// How the residual instance was finished.
    pub base: Rule,
}

fn mu_at(mu: &[Rational], agent: AgentId) -> &Rational {
    &mu[agent - 1]
}

/// Any agent valuing a single good at least at its MMS takes it: the largest
/// qualifying good, then the lowest agent.
pub fn reduce_single_item(instance: &Instance, mu: &[Rational]) -> Option<ReductionStep> {
    if instance.kind() != ItemKind::Goods {
        return None;
    }
    for j in (1..=instance.m()).rev() {
        for a in 1..=instance.n() {
            if instance.value(a, j) >= mu_at(mu, a) {
                return Some(ReductionStep::single(Rule::SingleItem, a, Bundle::new([j])));
            }
        }
    }
    None
}

/// A pair worth `mu` to one agent and at most `mu` to every other agent.
pub fn reduce_pair_blockable(instance: &Instance, mu: &[Rational]) -> Option<ReductionStep> {
    let (n, m) = (instance.n(), instance.m());
    let row_pair = |a: AgentId, j: ItemId, k: ItemId| instance.value(a, j) + instance.value(a, k);
    for a in 1..=n {
        for j in 1..=m {
            for k in j + 1..=m {
                if row_pair(a, j, k) < *mu_at(mu, a) {
                    continue;
                }
                if (1..=n).filter(|&b| b != a).all(|b| row_pair(b, j, k) <= *mu_at(mu, b)) {
                    return Some(ReductionStep::single(Rule::PairBlockable, a, Bundle::new([j, k])));
                }
            }
        }
    }
    None
}

/// Goods `{n, n+1}` to the lowest agent for which they reach its MMS. Every
/// MMS partition of anyone else has a bundle with two of the first `n + 1`
/// goods, which dominates this pair.
pub fn reduce_pigeonhole_pair(ordered: &OrderedInstance, mu: &[Rational]) -> Option<ReductionStep> {
    let inst = &ordered.instance;
    let n = inst.n();
    if inst.kind() != ItemKind::Goods || inst.m() < n + 1 {
        return None;
    }
    let pair = Bundle::new([n, n + 1]);
    (1..=n)
        .find(|&a| inst.bundle_value(a, &pair) >= *mu_at(mu, a))
        .map(|a| ReductionStep::single(Rule::PigeonholePair, a, pair))
}

/// A good reaching the MMS of exactly one agent goes to that agent together
/// with the worst other good. The largest such good is used.
pub fn reduce_pair_from_high(ordered: &OrderedInstance, mu: &[Rational]) -> Option<ReductionStep> {
    let inst = &ordered.instance;
    let (n, m) = (inst.n(), inst.m());
    if inst.kind() != ItemKind::Goods || m < 2 {
        return None;
    }
    for j in (1..=m).rev() {
        let high: Vec<AgentId> = (1..=n).filter(|&a| inst.value(a, j) >= mu_at(mu, a)).collect();
        if let [a] = high[..] {
            let worst = if j == m { m - 1 } else { m };
            return Some(ReductionStep::single(Rule::PairFromHigh, a, Bundle::new([j, worst])));
        }
    }
    None
}

/// Composite domination step: goods `1..=q` go to the `q` agents outside the
/// group (in the given order) and `bundle` goes to `owner`.
///
/// Fails unless each singleton recipient values its good at least at its MMS
/// and the owner's bundle reaches the owner's MMS.
pub fn reduce_by_domination(
    ordered: &OrderedInstance,
    owner: AgentId,
    bundle: &Bundle,
    singles_to: &[AgentId],
    rule: Rule,
    mu: &[Rational],
) -> Result<ReductionStep> {
    let inst = &ordered.instance;
    let mut awards = Vec::with_capacity(singles_to.len() + 1);
    for (idx, &a) in singles_to.iter().enumerate() {
        let j = idx + 1;
        if bundle.contains(j) || a == owner {
            return Err(Error::PreconditionUnmet(format!(
                "singleton {j} collides with the dominated bundle"
            )));
        }
        if inst.value(a, j) < mu_at(mu, a) {
            return Err(Error::PreconditionUnmet(format!(
                "agent {a} values good {j} below its MMS"
            )));
        }
        awards.push(Award {
            agent: a,
            bundle: Bundle::new([j]),
        });
    }
    if inst.bundle_value(owner, bundle) < *mu_at(mu, owner) {
        return Err(Error::PreconditionUnmet(format!(
            "agent {owner} values {bundle} below its MMS"
        )));
    }
    awards.push(Award {
        agent: owner,
        bundle: bundle.clone(),
    });
    Ok(ReductionStep { rule, awards })
}

/// When at least `n - 1` agents accept one agent's MMS partition, hand it out:
/// the odd agent (if any) takes its favourite bundle first.
pub fn base_identical_partitions(instance: &Instance, mu: &[Rational]) -> Result<Option<Allocation>> {
    let n = instance.n();
    for owner in 1..=n {
        let witness = mms::mms_value(instance, owner, OracleMethod::BranchAndBound)?.witness;
        if let Some(alloc) = hand_out(instance, mu, &witness) {
            return Ok(Some(alloc));
        }
    }
    Ok(None)
}

/// Assigns the bundles of `partition` to agents when all but at most one
/// agent find every bundle acceptable.
pub(crate) fn hand_out(instance: &Instance, mu: &[Rational], partition: &Allocation) -> Option<Allocation> {
    let n = instance.n();
    let odd: Vec<AgentId> = (1..=n)
        .filter(|&a| !mms::meets_all(instance, a, mu_at(mu, a), partition))
        .collect();
    let mut bundles = vec![Bundle::empty(); n];
    let mut pool: Vec<usize> = (0..partition.len()).collect();
    match odd[..] {
        [] => {}
        [a] => {
            let best = pool
                .iter()
                .copied()
                .filter(|&b| instance.bundle_value(a, &partition.bundles[b]) >= *mu_at(mu, a))
                .max_by(|&x, &y| {
                    let vx = instance.bundle_value(a, &partition.bundles[x]);
                    let vy = instance.bundle_value(a, &partition.bundles[y]);
                    vx.cmp(&vy).then(y.cmp(&x))
                })?;
            bundles[a - 1] = partition.bundles[best].clone();
            pool.retain(|&b| b != best);
        }
        _ => return None,
    }
    let mut rest = pool.into_iter();
    for a in 1..=n {
        if !odd.contains(&a) {
            bundles[a - 1] = partition.bundles[rest.next()?].clone();
        }
    }
    Some(Allocation::new(bundles))
}

/// A residual instance together with the ids its agents and items had in the
/// instance it was cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    pub instance: Instance,
    pub agents: Vec<AgentId>,
    pub items: Vec<ItemId>,
}

fn check_step(instance: &Instance, step: &ReductionStep) -> Result<()> {
    let mut agents = BTreeSet::new();
    let mut items = BTreeSet::new();
    for award in &step.awards {
        if award.agent == 0 || award.agent > instance.n() || !agents.insert(award.agent) {
            return Err(Error::DanglingReference(format!("agent {}", award.agent)));
        }
        for &j in award.bundle.items() {
            if j == 0 || j > instance.m() || !items.insert(j) {
                return Err(Error::DanglingReference(format!("item {j}")));
            }
        }
    }
    Ok(())
}

/// Removes the awarded agents and items, renumbering what is left in order.
pub fn apply(instance: &Instance, step: &ReductionStep) -> Result<Instance> {
    Ok(apply_mapped(instance, step)?.instance)
}

pub fn apply_mapped(instance: &Instance, step: &ReductionStep) -> Result<Residual> {
    check_step(instance, step)?;
    let gone_agents: BTreeSet<AgentId> = step.agents().into_iter().collect();
    let gone_items: BTreeSet<ItemId> = step.items().into_iter().collect();
    let agents: Vec<AgentId> = (1..=instance.n()).filter(|a| !gone_agents.contains(a)).collect();
    let items: Vec<ItemId> = (1..=instance.m()).filter(|j| !gone_items.contains(j)).collect();
    let valuations = agents
        .iter()
        .map(|&a| items.iter().map(|&j| instance.value(a, j).clone()).collect())
        .collect();
    Ok(Residual {
        instance: Instance::from_parts(instance.kind(), items.len(), valuations),
        agents,
        items,
    })
}

/// Exact validity check: every awarded agent reaches its MMS
/// and no remaining agent's MMS drops.
pub fn verify_step(instance: &Instance, step: &ReductionStep) -> Result<bool> {
    verify_step_with(instance, step, OracleMethod::BranchAndBound, DEFAULT_ORACLE_CAP)
}

pub fn verify_step_with(instance: &Instance, step: &ReductionStep, method: OracleMethod, cap: u64) -> Result<bool> {
    let residual = apply_mapped(instance, step)?;
    for award in &step.awards {
        let mu = mms::mms_value_capped(instance, award.agent, method, cap)?.mu;
        if instance.bundle_value(award.agent, &award.bundle) < mu {
            return Ok(false);
        }
    }
    for (idx, &a) in residual.agents.iter().enumerate() {
        let before = mms::mms_value_capped(instance, a, method, cap)?.mu;
        let after = mms::mms_value_capped(&residual.instance, idx + 1, method, cap)?.mu;
        if after < before {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Structural replay: steps in order, then `final`. Returns the combined
/// allocation when together they partition the items over all agents.
pub fn replay_trace(n: usize, m: usize, trace: &ReductionTrace) -> Result<Allocation> {
    let mut bundles = vec![None::<Bundle>; n];
    let mut used = vec![false; m + 1];
    let mut take = |agent: AgentId, bundle: &Bundle, bundles: &mut Vec<Option<Bundle>>| -> Result<()> {
        if agent == 0 || agent > n || bundles[agent - 1].is_some() {
            return Err(Error::DanglingReference(format!("agent {agent}")));
        }
        for &j in bundle.items() {
            if j == 0 || j > m || used[j] {
                return Err(Error::DanglingReference(format!("item {j}")));
            }
            used[j] = true;
        }
        bundles[agent - 1] = Some(bundle.clone());
        Ok(())
    };
    for step in &trace.steps {
        for award in &step.awards {
            take(award.agent, &award.bundle, &mut bundles)?;
        }
    }
    if trace.final_allocation.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "final allocation has {} bundles for {n} agents",
            trace.final_allocation.len()
        )));
    }
    for (idx, b) in trace.final_allocation.bundles.iter().enumerate() {
        match &bundles[idx] {
            Some(_) if !b.is_empty() => {
                return Err(Error::ShapeMismatch(format!(
                    "agent {} was removed but holds {b}",
                    idx + 1
                )));
            }
            Some(_) => {}
            None => take(idx + 1, b, &mut bundles)?,
        }
    }
    let alloc = Allocation::new(bundles.into_iter().map(Option::unwrap_or_default).collect());
    alloc.check_partition(m)?;
    Ok(alloc)
}

/// Verdict for each step of a trace, each checked against the residual it was
/// applied to.
pub fn verify_trace_steps(instance: &Instance, trace: &ReductionTrace) -> Result<Vec<bool>> {
    verify_trace_steps_with(instance, trace, OracleMethod::BranchAndBound, DEFAULT_ORACLE_CAP)
}

pub fn verify_trace_steps_with(
    instance: &Instance,
    trace: &ReductionTrace,
    method: OracleMethod,
    cap: u64,
) -> Result<Vec<bool>> {
    let mut current = Residual {
        instance: instance.clone(),
        agents: (1..=instance.n()).collect(),
        items: (1..=instance.m()).collect(),
    };
    let mut verdicts = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let local = localize(&current, step)?;
        verdicts.push(verify_step_with(&current.instance, &local, method, cap)?);
        let next = apply_mapped(&current.instance, &local)?;
        current = Residual {
            agents: next.agents.iter().map(|&a| current.agents[a - 1]).collect(),
            items: next.items.iter().map(|&j| current.items[j - 1]).collect(),
            instance: next.instance,
        };
    }
    Ok(verdicts)
}

/// Rewrites a step from top-level ids into the ids of `residual`.
pub(crate) fn localize(residual: &Residual, step: &ReductionStep) -> Result<ReductionStep> {
    let find = |ids: &[usize], x: usize, what: &str| -> Result<usize> {
        ids.iter()
            .position(|&y| y == x)
            .map(|p| p + 1)
            .ok_or_else(|| Error::DanglingReference(format!("{what} {x}")))
    };
    let awards = step
        .awards
        .iter()
        .map(|aw| {
            let agent = find(&residual.agents, aw.agent, "agent")?;
            let items = aw
                .bundle
                .items()
                .iter()
                .map(|&j| find(&residual.items, j, "item"))
                .collect::<Result<Vec<_>>>()?;
            Ok(Award {
                agent,
                bundle: Bundle::new(items),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReductionStep {
        rule: step.rule,
        awards,
    })
}

/// Rewrites a step from the ids of `residual` into top-level ids.
pub(crate) fn globalize(residual: &Residual, step: &ReductionStep) -> ReductionStep {
    ReductionStep {
        rule: step.rule,
        awards: step
            .awards
            .iter()
            .map(|aw| Award {
                agent: residual.agents[aw.agent - 1],
                bundle: Bundle::new(aw.bundle.items().iter().map(|&j| residual.items[j - 1])),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::make_instance;
    use crate::value::int;

    fn goods(rows: &[&[i64]]) -> Instance {
        make_instance(
            ItemKind::Goods,
            rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
        )
        .unwrap()
    }

    fn mus(inst: &Instance) -> Vec<Rational> {
        mms::mms_all(inst, OracleMethod::Exhaustive, DEFAULT_ORACLE_CAP)
            .unwrap()
            .into_iter()
            .map(|r| r.mu)
            .collect()
    }

    #[test]
    fn single_item_prefers_largest_item() {
        let inst = goods(&[&[3, 2, 1, 1], &[3, 2, 1, 1]]);
        let mu = mus(&inst);
        assert_eq!(mu[0], int(3));
        let step = reduce_single_item(&inst, &mu).unwrap();
        assert_eq!(
            step.awards,
            vec![Award {
                agent: 1,
                bundle: Bundle::new([1])
            }]
        );
        assert!(verify_step(&inst, &step).unwrap());
        let zero = vec![int(0), int(0)];
        assert_eq!(
            reduce_single_item(&inst, &zero).unwrap().awards[0].bundle,
            Bundle::new([4])
        );
        assert!(reduce_single_item(&inst, &[int(4), int(4)]).is_none());
    }

    #[test]
    fn pair_blockable_example() {
        let inst = goods(&[&[2, 2, 1, 1], &[2, 2, 1, 1]]);
        let mu = mus(&inst);
        assert_eq!(mu[0], int(3));
        let step = reduce_pair_blockable(&inst, &mu).unwrap();
        assert_eq!(step.awards[0].bundle, Bundle::new([1, 3]));
        assert!(verify_step(&inst, &step).unwrap());
    }

    #[test]
    fn pigeonhole_example() {
        let inst = goods(&[&[5, 4, 3, 2, 1], &[5, 4, 3, 2, 1], &[5, 4, 3, 2, 1]]);
        let mu = mus(&inst);
        assert_eq!(mu[0], int(5));
        let ord = OrderedInstance::assume_ordered(inst.clone()).unwrap();
        let step = reduce_pigeonhole_pair(&ord, &mu).unwrap();
        assert_eq!(step.awards[0].bundle, Bundle::new([3, 4]));
        assert!(verify_step(&inst, &step).unwrap());
    }

    #[test]
    fn apply_compacts() {
        let inst = goods(&[&[4, 3, 2, 1], &[4, 3, 2, 1], &[4, 3, 2, 1]]);
        let step = ReductionStep::single(Rule::SingleItem, 2, Bundle::new([2]));
        let r = apply_mapped(&inst, &step).unwrap();
        assert_eq!((r.instance.n(), r.instance.m()), (2, 3));
        assert_eq!(r.agents, vec![1, 3]);
        assert_eq!(r.items, vec![1, 3, 4]);
        assert!(r.instance.is_ordered());
        let bad = ReductionStep::single(Rule::SingleItem, 4, Bundle::new([1]));
        assert!(matches!(apply(&inst, &bad), Err(Error::DanglingReference(_))));
    }

    #[test]
    fn verify_rejects_bad_steps() {
        let inst = goods(&[&[3, 3, 1, 1], &[3, 3, 1, 1]]);
        let under = ReductionStep::single(Rule::SingleItem, 1, Bundle::new([3]));
        assert!(!verify_step(&inst, &under).unwrap());
        let greedy = ReductionStep::single(Rule::PairBlockable, 1, Bundle::new([1, 2]));
        assert!(!verify_step(&inst, &greedy).unwrap());
    }

    #[test]
    fn identical_base() {
        let inst = goods(&[&[3, 2, 2, 1], &[3, 2, 2, 1], &[1, 1, 1, 5]]);
        let mu = mus(&inst);
        let alloc = base_identical_partitions(&inst, &mu).unwrap().unwrap();
        for a in 1..=3 {
            assert!(inst.bundle_value(a, alloc.bundle(a)) >= mu[a - 1]);
        }
    }

    #[test]
    fn replay_checks_partition() {
        let trace = ReductionTrace {
            steps: vec![ReductionStep::single(Rule::SingleItem, 2, Bundle::new([1]))],
            final_allocation: Allocation::new(vec![Bundle::new([2, 3]), Bundle::empty()]),
            base: Rule::SingleAgent,
        };
        let alloc = replay_trace(2, 3, &trace).unwrap();
        assert_eq!(alloc.bundle(2), &Bundle::new([1]));
        let mut broken = trace.clone();
        broken.final_allocation = Allocation::new(vec![Bundle::new([2]), Bundle::empty()]);
        assert!(replay_trace(2, 3, &broken).is_err());
    }
}
