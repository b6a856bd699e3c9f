//! The reduction loop shared by the goods and chores solvers.
//!
//! Each round recomputes exact MMS values of the residual instance and asks a
//! dispatcher for an action: reduction steps to apply, a final allocation of
//! the residual, or nothing. When the dispatcher has nothing, a threshold search
//! looks for an allocation giving every remaining agent its MMS in the
//! original instance. A result is reported as solved only after the lifted
//! allocation is certified against exact MMS values of the original instance.

pub mod chores;
pub mod goods;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundTable;
use crate::error::{Error, Result};
use crate::instance::{lift_allocation, to_ordered, AgentId, Allocation, Bundle, Instance, ItemKind, OrderedInstance};
use crate::mms::{self, check_space, OracleMethod, DEFAULT_ORACLE_CAP};
use crate::reductions::{self, globalize, hand_out, ReductionStep, ReductionTrace, Residual, Rule};
use crate::search::Found;
use crate::value::Rational;

pub use chores::{solve_chores, solve_chores_with};
pub use goods::{efm_step, reduce_2n2, solve, solve_c6, solve_c7, solve_with, theorem1_step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solved,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    /// Allocation of the original instance; present when solved.
    pub allocation: Option<Allocation>,
    /// Steps and final allocation in the ids of the ordered instance.
    pub trace: Option<ReductionTrace>,
    pub diagnostic: String,
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        self.status == Status::Solved
    }

    fn unresolved(diagnostic: String, trace: Option<ReductionTrace>) -> Self {
        SolveOutcome {
            status: Status::Unresolved,
            allocation: None,
            trace,
            diagnostic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Largest `n^m` for which a complete (unbudgeted) search is run.
    pub oracle_cap: u64,
    /// Oracle for MMS values and certification.
    pub method: OracleMethod,
    pub bounds: BoundTable,
    /// Node budget for the last-resort search above the cap (`0` disables it).
    pub search_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            oracle_cap: DEFAULT_ORACLE_CAP,
            method: OracleMethod::BranchAndBound,
            bounds: BoundTable::default(),
            search_budget: 2_000_000,
        }
    }
}

/// What a dispatcher wants done with the residual. Step ids refer to the
/// residual the action was computed for; the final allocation refers to the
/// residual left after those steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub steps: Vec<ReductionStep>,
    pub finish: Option<(Allocation, Rule)>,
}

impl Action {
    pub fn step(step: ReductionStep) -> Self {
        Action {
            steps: vec![step],
            finish: None,
        }
    }

    pub fn finish(alloc: Allocation, rule: Rule) -> Self {
        Action {
            steps: Vec::new(),
            finish: Some((alloc, rule)),
        }
    }

    pub fn then_finish(step: ReductionStep, alloc: Allocation, rule: Rule) -> Self {
        Action {
            steps: vec![step],
            finish: Some((alloc, rule)),
        }
    }

    /// The first step's rule, or the finishing rule.
    pub fn rule(&self) -> Option<Rule> {
        self.steps.first().map(|s| s.rule).or(self.finish.as_ref().map(|f| f.1))
    }
}

/// Read-only context handed to dispatchers.
pub struct Round<'a> {
    pub config: &'a SolverConfig,
    pub ordered: &'a OrderedInstance,
    /// MMS of the residual agents in the residual instance.
    pub mu: &'a [Rational],
    /// MMS of the residual agents in the original instance.
    pub mu0: &'a [Rational],
}

impl Round<'_> {
    pub fn n(&self) -> usize {
        self.ordered.n()
    }

    pub fn m(&self) -> usize {
        self.ordered.m()
    }

    pub fn inst(&self) -> &Instance {
        &self.ordered.instance
    }

    pub fn mu_of(&self, agent: AgentId) -> &Rational {
        &self.mu[agent - 1]
    }

    pub fn n_c(&self, kind: ItemKind, c: usize) -> u128 {
        self.config.bounds.n_c(kind, c as i64).unwrap_or(u128::MAX)
    }
}

type Dispatcher = fn(&Round) -> Result<Option<Action>>;

pub(crate) fn run(instance: &Instance, config: &SolverConfig, dispatch: Dispatcher) -> SolveOutcome {
    match run_inner(instance, config, dispatch) {
        Ok(outcome) => outcome,
        Err(e) => SolveOutcome::unresolved(format!("{e}"), None),
    }
}

fn run_inner(instance: &Instance, config: &SolverConfig, dispatch: Dispatcher) -> Result<SolveOutcome> {
    let ordered = to_ordered(instance);
    let (n, m) = (instance.n(), instance.m());
    // per-agent sorting leaves every agent's MMS unchanged
    let mu_orig: Vec<Rational> = mms::mms_all(instance, config.method, config.oracle_cap)?
        .into_iter()
        .map(|r| r.mu)
        .collect();

    let mut steps: Vec<ReductionStep> = Vec::new();
    let mut current = Residual {
        instance: ordered.instance.clone(),
        agents: (1..=n).collect(),
        items: (1..=m).collect(),
    };
    let mut notes: Vec<String> = Vec::new();
    let (final_local, base) = loop {
        let res_ordered = OrderedInstance::assume_ordered(current.instance.clone())?;
        let mu: Vec<Rational> = mms::mms_all(&current.instance, config.method, config.oracle_cap)?
            .into_iter()
            .map(|r| r.mu)
            .collect();
        let mu0: Vec<Rational> = current.agents.iter().map(|&a| mu_orig[a - 1].clone()).collect();
        let round = Round {
            config,
            ordered: &res_ordered,
            mu: &mu,
            mu0: &mu0,
        };
        let action = match dispatch(&round) {
            Ok(Some(a)) if !a.steps.is_empty() || a.finish.is_some() => Some(a),
            Ok(_) => None,
            Err(e) => {
                notes.push(format!(
                    "dispatcher gave up at {}x{}: {e}",
                    current.instance.n(),
                    current.instance.m()
                ));
                None
            }
        };
        let action = match action {
            Some(a) => a,
            None => match fallback(&round)? {
                Some(a) => a,
                None => {
                    notes.push(format!(
                        "no allocation found for the {}x{} residual",
                        current.instance.n(),
                        current.instance.m()
                    ));
                    let trace = partial_trace(&steps, n);
                    return Ok(SolveOutcome::unresolved(notes.join("; "), Some(trace)));
                }
            },
        };
        let start = current.clone();
        for step in &action.steps {
            let global = globalize(&start, step);
            current = residual_without(&ordered.instance, &current, &global)?;
            steps.push(global);
        }
        if let Some((alloc, rule)) = action.finish {
            break (alloc, rule);
        }
    };

    let final_allocation = globalize_allocation(&current, &final_local, n)?;
    let trace = ReductionTrace {
        steps,
        final_allocation,
        base,
    };
    let combined = reductions::replay_trace(n, m, &trace)?;
    let lifted = lift_allocation(&ordered, &combined, instance)?;
    let short: Vec<AgentId> = (1..=n)
        .filter(|&a| instance.bundle_value(a, lifted.bundle(a)) < mu_orig[a - 1])
        .collect();
    if !short.is_empty() {
        notes.push(format!("certification failed for agents {short:?}"));
        return Ok(SolveOutcome::unresolved(notes.join("; "), Some(trace)));
    }
    Ok(SolveOutcome {
        status: crate::solver::Status::Solved,
        allocation: Some(lifted),
        trace: Some(trace),
        diagnostic: notes.join("; "),
    })
}

fn partial_trace(steps: &[ReductionStep], n: usize) -> ReductionTrace {
    ReductionTrace {
        steps: steps.to_vec(),
        final_allocation: Allocation::new(vec![Bundle::empty(); n]),
        base: Rule::Exhaustive,
    }
}

/// Removes a step given in top-level ids from `current`.
fn residual_without(top: &Instance, current: &Residual, global: &ReductionStep) -> Result<Residual> {
    let gone_agents = global.agents();
    let gone_items = global.items();
    for a in &gone_agents {
        if !current.agents.contains(a) {
            return Err(Error::DanglingReference(format!("agent {a}")));
        }
    }
    for j in &gone_items {
        if !current.items.contains(j) {
            return Err(Error::DanglingReference(format!("item {j}")));
        }
    }
    let agents: Vec<AgentId> = current
        .agents
        .iter()
        .copied()
        .filter(|a| !gone_agents.contains(a))
        .collect();
    let items: Vec<usize> = current
        .items
        .iter()
        .copied()
        .filter(|j| !gone_items.contains(j))
        .collect();
    let valuations = agents
        .iter()
        .map(|&a| items.iter().map(|&j| top.value(a, j).clone()).collect())
        .collect();
    Ok(Residual {
        instance: Instance::from_parts(top.kind(), items.len(), valuations),
        agents,
        items,
    })
}

fn globalize_allocation(residual: &Residual, alloc: &Allocation, n: usize) -> Result<Allocation> {
    if alloc.len() != residual.agents.len() {
        return Err(Error::InternalInvariantViolation(format!(
            "final allocation has {} bundles for {} agents",
            alloc.len(),
            residual.agents.len()
        )));
    }
    let mut bundles = vec![Bundle::empty(); n];
    for (idx, b) in alloc.bundles.iter().enumerate() {
        bundles[residual.agents[idx] - 1] = Bundle::new(b.items().iter().map(|&j| residual.items[j - 1]));
    }
    Ok(Allocation::new(bundles))
}

/// Search for an allocation meeting the original MMS of every remaining agent.
/// Complete below the oracle cap, budgeted above it.
fn fallback(round: &Round) -> Result<Option<Action>> {
    let inst = round.inst();
    let complete = check_space(inst.n(), inst.m(), round.config.oracle_cap).is_ok();
    let budget = if complete { 0 } else { round.config.search_budget };
    if !complete && budget == 0 {
        return Ok(None);
    }
    Ok(match mms::search_meeting(inst, round.mu0, budget)? {
        Found::Yes(alloc) => Some(Action::finish(alloc, Rule::Exhaustive)),
        Found::No | Found::GaveUp => None,
    })
}

/// Threshold search with a budget appropriate to the instance size.
pub(crate) fn meeting(round: &Round, inst: &Instance, x: &[Rational]) -> Result<Option<Allocation>> {
    let complete = check_space(inst.n(), inst.m(), round.config.oracle_cap).is_ok();
    let budget = if complete { 0 } else { round.config.search_budget.max(1) };
    Ok(match mms::search_meeting(inst, x, budget)? {
        Found::Yes(a) => Some(a),
        _ => None,
    })
}

/// Shared base cases: one agent, at most one item each, two agents.
pub(crate) fn base_case(round: &Round) -> Result<Option<Action>> {
    let (n, m) = (round.n(), round.m());
    let inst = round.inst();
    if n == 1 {
        return Ok(Some(Action::finish(
            Allocation::new(vec![Bundle::new(1..=m)]),
            Rule::SingleAgent,
        )));
    }
    if m <= n {
        let bundles = (1..=n)
            .map(|j| if j <= m { Bundle::new([j]) } else { Bundle::empty() })
            .collect();
        return Ok(Some(Action::finish(Allocation::new(bundles), Rule::Singletons)));
    }
    if n == 2 {
        let witness = mms::mms_value(inst, 1, OracleMethod::BranchAndBound)?.witness;
        return Ok(hand_out(inst, round.mu, &witness).map(|a| Action::finish(a, Rule::TwoAgentBase)));
    }
    Ok(None)
}

/// At least `n - 1` agents share an MMS partition.
pub(crate) fn identical_base(round: &Round) -> Result<Option<Action>> {
    Ok(reductions::base_identical_partitions(round.inst(), round.mu)?
        .map(|a| Action::finish(a, Rule::IdenticalPartitionBase)))
}
