//! Adversary strategies. A strategy resolves every nondeterministic choice:
//! who is corrupted, what corrupted parties do, and which enabled item runs
//! next at every node.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    apply_event, enabled_items, Action, Configuration, LocalState, PartyId, Protocol, Scheduled,
    SystemParams,
};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observability {
    /// May not look at honest parties' local states.
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionTiming {
    /// The corrupted set is fixed immediately after the root.
    Static,
    Adaptive,
}

type CorruptionRule = dyn Fn(&Configuration) -> BTreeSet<PartyId> + Send + Sync;

/// Corruption is a rule evaluated at every node before scheduling. Its
/// result is unioned into the node's corrupted set: once corrupted, always
/// corrupted.
#[derive(Clone)]
pub struct CorruptionPolicy {
    pub timing: CorruptionTiming,
    pub rule: Arc<CorruptionRule>,
}

impl CorruptionPolicy {
    pub fn none() -> Self {
        Self::fixed(BTreeSet::new())
    }

    pub fn fixed(parties: BTreeSet<PartyId>) -> Self {
        Self {
            timing: CorruptionTiming::Static,
            rule: Arc::new(move |_| parties.clone()),
        }
    }

    pub fn adaptive(rule: impl Fn(&Configuration) -> BTreeSet<PartyId> + Send + Sync + 'static) -> Self {
        Self {
            timing: CorruptionTiming::Adaptive,
            rule: Arc::new(rule),
        }
    }

    /// Declared static, but the rule may still misbehave; used to exercise
    /// validation.
    pub fn declared_static(rule: impl Fn(&Configuration) -> BTreeSet<PartyId> + Send + Sync + 'static) -> Self {
        Self {
            timing: CorruptionTiming::Static,
            rule: Arc::new(rule),
        }
    }
}

impl fmt::Debug for CorruptionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorruptionPolicy").field("timing", &self.timing).finish_non_exhaustive()
    }
}

/// What the scheduler sees at a node. `enabled` and `decisions` are
/// observable metadata; everything else must come from `config`.
pub struct ScheduleView<'a> {
    pub config: &'a Configuration,
    pub enabled: &'a [Scheduled],
    /// Current decision of every party, per the protocol's extractor.
    pub decisions: &'a [Option<Value>],
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Run(Scheduled),
    /// The node is terminal.
    Stop,
}

pub trait Scheduler: Send + Sync {
    fn choose(&self, view: &ScheduleView<'_>) -> Choice;
}

impl<F> Scheduler for F
where
    F: Fn(&ScheduleView<'_>) -> Choice + Send + Sync,
{
    fn choose(&self, view: &ScheduleView<'_>) -> Choice {
        self(view)
    }
}

/// Controls corrupted parties.
pub trait ByzantineBehavior: Send + Sync {
    fn action(&self, me: PartyId, state: &LocalState, protocol: &dyn Protocol) -> Action;
}

/// Corrupted parties send nothing and never step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl ByzantineBehavior for Silent {
    fn action(&self, _: PartyId, _: &LocalState, _: &dyn Protocol) -> Action {
        Action::Halt
    }
}

/// Corrupted parties run the honest algorithm as if their input were the
/// configured value (their own input when none is configured).
#[derive(Debug, Clone, Default)]
pub struct Mimic {
    pub inputs: BTreeMap<PartyId, Value>,
    pub default_input: Option<Value>,
}

impl Mimic {
    pub fn all(input: Value) -> Self {
        Self {
            inputs: BTreeMap::new(),
            default_input: Some(input),
        }
    }

    pub fn per_party(inputs: BTreeMap<PartyId, Value>) -> Self {
        Self {
            inputs,
            default_input: None,
        }
    }

    pub fn honest_like() -> Self {
        Self::default()
    }
}

impl ByzantineBehavior for Mimic {
    fn action(&self, me: PartyId, state: &LocalState, protocol: &dyn Protocol) -> Action {
        match self.inputs.get(&me).or(self.default_input.as_ref()) {
            Some(input) if *input != state.initial => protocol.next_action(me, &state.with_initial(input.clone())),
            _ => protocol.next_action(me, state),
        }
    }
}

/// Arbitrary behavior given by a closure.
pub struct Scripted<F>(pub F);

impl<F> ByzantineBehavior for Scripted<F>
where
    F: Fn(PartyId, &LocalState, &dyn Protocol) -> Action + Send + Sync,
{
    fn action(&self, me: PartyId, state: &LocalState, protocol: &dyn Protocol) -> Action {
        (self.0)(me, state, protocol)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopRule {
    /// Terminal only when nothing is left to schedule.
    WhenIdle,
    /// Terminal once every listed party has decided.
    Decided(BTreeSet<PartyId>),
    /// Terminal once every party not corrupted at the node has decided.
    HonestDecided,
}

/// Deterministic scheduler used by all shipped strategies.
///
/// Pending deliveries always go first, in `(sender, receiver, seq)` order,
/// which is FIFO per link with the sender index as the tiebreak. When no
/// delivery is allowed the first party in `order` with an enabled step
/// moves. It reads only enabled items, decisions and the corrupted set.
#[derive(Debug, Clone)]
pub struct PriorityScheduler {
    /// Step priority. Parties missing from the list never step.
    pub order: Vec<PartyId>,
    /// When set, only messages whose sender and receiver both lie in the
    /// set are delivered.
    pub deliver_within: Option<BTreeSet<PartyId>>,
    /// Messages from these senders stay pending.
    pub held_senders: BTreeSet<PartyId>,
    /// Messages to parties that already decided stay pending.
    pub hold_to_decided: bool,
    pub stop: StopRule,
}

impl PriorityScheduler {
    pub fn by_index(n: usize) -> Self {
        Self::with_order((0..n).map(PartyId).collect())
    }

    pub fn with_order(order: Vec<PartyId>) -> Self {
        Self {
            order,
            deliver_within: None,
            held_senders: BTreeSet::new(),
            hold_to_decided: false,
            stop: StopRule::WhenIdle,
        }
    }

    pub fn stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    fn should_stop(&self, view: &ScheduleView<'_>) -> bool {
        let decided = |p: &PartyId| view.decisions.get(p.0).is_some_and(Option::is_some);
        match &self.stop {
            StopRule::WhenIdle => false,
            StopRule::Decided(set) => set.iter().all(decided),
            StopRule::HonestDecided => (0..view.config.n())
                .map(PartyId)
                .filter(|p| !view.config.is_corrupted(*p))
                .all(|p| decided(&p)),
        }
    }

    fn deliverable(&self, view: &ScheduleView<'_>, item: &Scheduled) -> bool {
        let Scheduled::Deliver(id) = item else {
            return false;
        };
        if self.held_senders.contains(&id.sender) {
            return false;
        }
        if let Some(within) = &self.deliver_within {
            if !within.contains(&id.sender) || !within.contains(&id.receiver) {
                return false;
            }
        }
        !(self.hold_to_decided && view.decisions.get(id.receiver.0).is_some_and(Option::is_some))
    }
}

impl Scheduler for PriorityScheduler {
    fn choose(&self, view: &ScheduleView<'_>) -> Choice {
        if self.should_stop(view) {
            return Choice::Stop;
        }
        if let Some(item) = view.enabled.iter().find(|item| self.deliverable(view, item)) {
            return Choice::Run(*item);
        }
        self.order
            .iter()
            .map(|p| Scheduled::Step(*p))
            .find(|item| view.enabled.contains(item))
            .map_or(Choice::Stop, Choice::Run)
    }
}

/// A complete adversary strategy.
#[derive(Clone)]
pub struct AdversaryStrategy {
    pub name: String,
    /// Corruption budget `t`.
    pub budget: usize,
    pub corruption: CorruptionPolicy,
    pub observability: Observability,
    pub scheduler: Arc<dyn Scheduler>,
    pub behavior: Arc<dyn ByzantineBehavior>,
}

impl fmt::Debug for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversaryStrategy")
            .field("name", &self.name)
            .field("budget", &self.budget)
            .field("corruption", &self.corruption)
            .field("observability", &self.observability)
            .finish_non_exhaustive()
    }
}

impl AdversaryStrategy {
    /// No corruptions; deliver everything in canonical order and step
    /// parties by index until nothing is enabled.
    pub fn benign(budget: usize) -> Self {
        Self {
            name: "benign".into(),
            budget,
            corruption: CorruptionPolicy::none(),
            observability: Observability::Weak,
            scheduler: Arc::new(|view: &ScheduleView<'_>| {
                view.enabled.first().copied().map_or(Choice::Stop, Choice::Run)
            }),
            behavior: Arc::new(Silent),
        }
    }

    pub fn new(
        name: impl Into<String>,
        budget: usize,
        corruption: CorruptionPolicy,
        scheduler: impl Scheduler + 'static,
        behavior: impl ByzantineBehavior + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            budget,
            corruption,
            observability: Observability::Weak,
            scheduler: Arc::new(scheduler),
            behavior: Arc::new(behavior),
        }
    }

    pub fn with_observability(mut self, observability: Observability) -> Self {
        self.observability = observability;
        self
    }

    /// Corrupted set for `config` given its parent's set (`None` at the
    /// root). Fails when the budget or the static discipline is broken.
    pub fn corrupted_at(&self, parent: Option<&BTreeSet<PartyId>>, config: &Configuration) -> Result<BTreeSet<PartyId>> {
        let mut set = parent.cloned().unwrap_or_default();
        let fresh = (self.corruption.rule)(config);
        if let Some(p) = fresh.iter().find(|p| p.0 >= config.n()) {
            return Err(Error::UnknownParty(*p));
        }
        if let (Some(parent), CorruptionTiming::Static) = (parent, self.corruption.timing) {
            if let Some(late) = fresh.iter().find(|p| !parent.contains(p)) {
                return Err(Error::StrategyViolation(format!(
                    "static adversary corrupts {late} after the root"
                )));
            }
        }
        set.extend(fresh);
        if set.len() > self.budget {
            return Err(Error::StrategyViolation(format!(
                "corruption budget exceeded: {} corrupted, t = {}",
                set.len(),
                self.budget
            )));
        }
        Ok(set)
    }

    pub fn view_decisions(config: &Configuration, protocol: &dyn Protocol) -> Vec<Option<Value>> {
        config.parties.iter().map(|s| protocol.decision(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Budget,
    StaticDiscipline,
    Observability,
    IllegalChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
    /// Number of probed nodes exhibiting this kind of violation.
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub probed_nodes: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn record(&mut self, kind: ViolationKind, detail: String) {
        match self.violations.iter_mut().find(|v| v.kind == kind) {
            Some(v) => v.occurrences += 1,
            None => self.violations.push(Violation {
                kind,
                detail,
                occurrences: 1,
            }),
        }
    }
}

/// Replaces `who`'s input by a value it cannot have had.
fn perturb_input(config: &Configuration, who: PartyId) -> Configuration {
    let mut perturbed = config.clone();
    let original = &config.parties[who.0];
    let flipped = Value::tuple([Value::sym("perturbed"), original.initial.clone()]);
    perturbed.parties[who.0] = Arc::new(original.with_initial(flipped));
    perturbed
}

/// Probes every execution prefix up to `probe_depth` and reports violations
/// of the corruption budget `params.t`, the static discipline, and (for
/// weak strategies) observability: the scheduler's choice must not change
/// when an honest party's input is perturbed while all observable metadata
/// stays fixed.
pub fn validate_strategy(
    strategy: &AdversaryStrategy,
    params: &SystemParams,
    protocol: &dyn Protocol,
    initial: &Configuration,
    probe_depth: usize,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let probe = AdversaryStrategy {
        budget: usize::MAX,
        ..strategy.clone()
    };
    let root_set = (strategy.corruption.rule)(initial);
    let mut root = initial.clone();
    root.corrupted = root_set.clone();
    let mut queue = VecDeque::from([(root, 0usize)]);

    while let Some((config, depth)) = queue.pop_front() {
        report.probed_nodes += 1;
        if config.corrupted.len() > params.t {
            report.record(
                ViolationKind::Budget,
                format!("corruption budget exceeded: {} corrupted, t = {}", config.corrupted.len(), params.t),
            );
        }
        if strategy.corruption.timing == CorruptionTiming::Static && config.corrupted != root_set {
            report.record(
                ViolationKind::StaticDiscipline,
                format!("static adversary changed its corrupted set to {:?} at depth {depth}", config.corrupted),
            );
        }
        let enabled = match enabled_items(&config, protocol, &probe) {
            Ok(e) => e,
            Err(e) => {
                report.record(ViolationKind::IllegalChoice, e.to_string());
                continue;
            }
        };
        let decisions = AdversaryStrategy::view_decisions(&config, protocol);
        let view = ScheduleView {
            config: &config,
            enabled: &enabled,
            decisions: &decisions,
            depth,
        };
        let choice = strategy.scheduler.choose(&view);

        if strategy.observability == Observability::Weak {
            for who in (0..config.n()).map(PartyId).filter(|p| !config.is_corrupted(*p)) {
                let perturbed = perturb_input(&config, who);
                let alt = strategy.scheduler.choose(&ScheduleView {
                    config: &perturbed,
                    ..view
                });
                if alt != choice {
                    report.record(
                        ViolationKind::Observability,
                        format!("schedule depends on honest {who}'s input at depth {depth}: {choice:?} vs {alt:?}"),
                    );
                }
            }
        }

        let Choice::Run(item) = choice else { continue };
        if depth >= probe_depth {
            continue;
        }
        if !enabled.contains(&item) {
            report.record(ViolationKind::IllegalChoice, format!("scheduled {item} which is not enabled"));
            continue;
        }
        match apply_event(&config, item, protocol, &probe) {
            Ok(successors) => {
                for s in successors {
                    let mut next = s.config;
                    let fresh = (strategy.corruption.rule)(&next);
                    next.corrupted.extend(fresh);
                    queue.push_back((next, depth + 1));
                }
            }
            Err(e) => report.record(ViolationKind::IllegalChoice, e.to_string()),
        }
    }
    report
}
