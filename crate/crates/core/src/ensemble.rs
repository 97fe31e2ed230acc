//! Ensembles: the probability-weighted execution tree induced by fixing a
//! protocol, an adversary strategy and an initial configuration.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryStrategy, Choice, ScheduleView};
use crate::error::{Error, Result};
use crate::model::{apply_event, enabled_items, Configuration, LocalEvent, LocalState, PartyId, Protocol, SystemParams};
use crate::rational::Ratio;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Internal,
    /// The strategy declared the configuration terminal.
    Terminal,
    /// Expansion stopped at the depth limit.
    Cut,
}

/// The local event on the edge into a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub party: PartyId,
    pub event: LocalEvent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub config: Configuration,
    pub via: Option<Transition>,
    /// Ordered children with their edge weights.
    pub children: Vec<(Ratio, NodeId)>,
    pub status: NodeStatus,
    /// Product of edge weights from the root.
    pub reach: Ratio,
}

impl EnsembleNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Completeness {
    Complete,
    Truncated { residual: Ratio },
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        matches!(self, Completeness::Complete)
    }

    pub fn residual(&self) -> Ratio {
        match self {
            Completeness::Complete => Ratio::zero(),
            Completeness::Truncated { residual } => residual.clone(),
        }
    }
}

/// A probability that is exact for complete ensembles and an interval
/// `[lower, upper]` when part of the mass was cut off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measured {
    pub lower: Ratio,
    pub upper: Ratio,
}

impl Measured {
    pub fn exact(value: Ratio) -> Self {
        Self {
            lower: value.clone(),
            upper: value,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn value(&self) -> Option<&Ratio> {
        self.is_exact().then_some(&self.lower)
    }
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lower)
        } else {
            write!(f, "[{}, {}]", self.lower, self.upper)
        }
    }
}

type Predicate = dyn Fn(PartyId, &LocalState) -> bool + Send + Sync;

/// A first-hit event: a predicate over one party's local state.
#[derive(Clone)]
pub struct EventSpec {
    pub label: String,
    predicate: Arc<Predicate>,
}

impl fmt::Debug for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("EventSpec").field(&self.label).finish()
    }
}

impl EventSpec {
    pub fn new(label: impl Into<String>, predicate: impl Fn(PartyId, &LocalState) -> bool + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            predicate: Arc::new(predicate),
        }
    }

    pub fn always() -> Self {
        Self::new("always", |_, _| true)
    }

    pub fn never() -> Self {
        Self::new("never", |_, _| false)
    }

    /// The party's decision extractor yields `value`.
    pub fn decided(protocol: Arc<dyn Protocol>, value: Value) -> Self {
        Self::new(format!("decided {value}"), move |_, s| protocol.decision(s).as_ref() == Some(&value))
    }

    pub fn decided_any(protocol: Arc<dyn Protocol>) -> Self {
        Self::new("decided", move |_, s| protocol.decision(s).is_some())
    }

    /// `event` appears exactly once, as the last history element.
    pub fn performed(event: LocalEvent) -> Self {
        Self::new(format!("performed {event}"), move |_, s| s.performed_last(&event))
    }

    pub fn holds(&self, party: PartyId, state: &LocalState) -> bool {
        (self.predicate)(party, state)
    }

    pub fn implies(self, other: EventSpec) -> Self {
        let label = format!("{} and {}", self.label, other.label);
        Self::new(label, move |p, s| self.holds(p, s) && other.holds(p, s))
    }
}

/// Probability that every listed party decides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationReport {
    pub probability: Measured,
    /// `None` when the ensemble is truncated and the answer is open.
    pub holds: Option<bool>,
}

#[derive(Clone)]
pub struct Ensemble {
    nodes: Vec<EnsembleNode>,
    pub params: SystemParams,
    pub completeness: Completeness,
    pub protocol: Arc<dyn Protocol>,
    pub strategy: String,
}

impl fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ensemble")
            .field("nodes", &self.nodes.len())
            .field("params", &self.params)
            .field("completeness", &self.completeness)
            .field("protocol", &self.protocol.name())
            .field("strategy", &self.strategy)
            .finish()
    }
}

/// Expands the full tree. At each node the strategy either stops (terminal
/// node) or picks one enabled item; deterministic items give one child,
/// object accesses one child per return value. Nodes at `depth_limit` that
/// the strategy would continue are cut and their mass is reported as
/// residual.
pub fn build_ensemble(
    protocol: Arc<dyn Protocol>,
    strategy: &AdversaryStrategy,
    initial: Configuration,
    depth_limit: usize,
) -> Result<Ensemble> {
    let mut root = initial;
    if root.n() == 0 {
        return Err(Error::InvalidParams("no parties".into()));
    }
    root.corrupted = strategy.corrupted_at(None, &root)?;
    let mut nodes = vec![EnsembleNode {
        id: NodeId(0),
        parent: None,
        depth: 0,
        config: root,
        via: None,
        children: Vec::new(),
        status: NodeStatus::Internal,
        reach: Ratio::one(),
    }];
    let mut residual = Ratio::zero();
    let mut queue = VecDeque::from([NodeId(0)]);

    while let Some(id) = queue.pop_front() {
        let (choice, enabled) = {
            let node = &nodes[id.0];
            let enabled = enabled_items(&node.config, protocol.as_ref(), strategy)?;
            let decisions = AdversaryStrategy::view_decisions(&node.config, protocol.as_ref());
            let view = ScheduleView {
                config: &node.config,
                enabled: &enabled,
                decisions: &decisions,
                depth: node.depth,
            };
            (strategy.scheduler.choose(&view), enabled)
        };
        let item = match choice {
            Choice::Stop => {
                nodes[id.0].status = NodeStatus::Terminal;
                continue;
            }
            Choice::Run(item) => item,
        };
        if !enabled.contains(&item) {
            return Err(Error::StrategyViolation(format!("scheduled {item}, which is not enabled")));
        }
        if nodes[id.0].depth >= depth_limit {
            nodes[id.0].status = NodeStatus::Cut;
            residual += &nodes[id.0].reach;
            continue;
        }
        let successors = apply_event(&nodes[id.0].config, item, protocol.as_ref(), strategy)?;
        let parent_set = nodes[id.0].config.corrupted.clone();
        let depth = nodes[id.0].depth + 1;
        let reach = nodes[id.0].reach.clone();
        for s in successors {
            let mut config = s.config;
            config.corrupted = strategy.corrupted_at(Some(&parent_set), &config)?;
            let child = NodeId(nodes.len());
            nodes.push(EnsembleNode {
                id: child,
                parent: Some(id),
                depth,
                config,
                via: Some(Transition {
                    party: s.party,
                    event: s.event,
                }),
                children: Vec::new(),
                status: NodeStatus::Internal,
                reach: &reach * &s.weight,
            });
            nodes[id.0].children.push((s.weight, child));
            queue.push_back(child);
        }
    }

    let n = nodes[0].config.n();
    let f = nodes.iter().map(|v| v.config.corrupted.len()).max().unwrap_or(0);
    let completeness = if residual.is_zero() {
        Completeness::Complete
    } else {
        Completeness::Truncated { residual }
    };
    Ok(Ensemble {
        nodes,
        params: SystemParams {
            n,
            t: strategy.budget.min(n.saturating_sub(1)),
            f,
        },
        completeness,
        protocol,
        strategy: strategy.name.clone(),
    })
}

impl Ensemble {
    /// Assembles an ensemble from raw nodes, recomputing reach
    /// probabilities and checking the tree shape and edge weights.
    pub fn from_parts(
        mut nodes: Vec<EnsembleNode>,
        params: SystemParams,
        completeness: Completeness,
        protocol: Arc<dyn Protocol>,
        strategy: String,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Document("no nodes".into()));
        }
        for (k, node) in nodes.iter().enumerate() {
            if node.id != NodeId(k) {
                return Err(Error::Document(format!("node {k} carries id {}", node.id)));
            }
        }
        let mut parent = vec![None; nodes.len()];
        for node in &nodes {
            if !node.children.is_empty() {
                let total: Ratio = node.children.iter().map(|(w, _)| w).sum();
                if !total.is_one() {
                    return Err(Error::Document(format!("weights out of {} sum to {total}", node.id)));
                }
            }
            for (w, c) in &node.children {
                if !(w > &Ratio::zero()) || c.0 >= nodes.len() || c.0 == 0 || parent[c.0].is_some() {
                    return Err(Error::Document(format!("bad edge {} -> {c}", node.id)));
                }
                parent[c.0] = Some(node.id);
            }
        }
        if parent.iter().skip(1).any(Option::is_none) {
            return Err(Error::Document("unreachable node".into()));
        }
        // Children always follow their parents in BFS numbering.
        for k in 0..nodes.len() {
            nodes[k].parent = parent[k];
            nodes[k].reach = match parent[k] {
                None => Ratio::one(),
                Some(p) => {
                    if p.0 >= k {
                        return Err(Error::Document("nodes are not in breadth-first order".into()));
                    }
                    let w = nodes[p.0]
                        .children
                        .iter()
                        .find(|(_, c)| c.0 == k)
                        .map(|(w, _)| w.clone())
                        .expect("edge exists");
                    &nodes[p.0].reach * w
                }
            };
        }
        Ok(Self {
            nodes,
            params,
            completeness,
            protocol,
            strategy,
        })
    }

    pub fn root(&self) -> &EnsembleNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[EnsembleNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&EnsembleNode> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.completeness.is_complete()
    }

    pub fn require_complete(&self) -> Result<()> {
        match &self.completeness {
            Completeness::Complete => Ok(()),
            Completeness::Truncated { residual } => Err(Error::Truncated(residual.to_string())),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &EnsembleNode> {
        self.nodes.iter().filter(|v| v.is_leaf())
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|v| v.depth).max().unwrap_or(0)
    }

    /// Inputs at the root.
    pub fn inputs(&self) -> Vec<Value> {
        self.root().config.inputs()
    }

    /// Parties corrupted at some node.
    pub fn ever_corrupted(&self) -> std::collections::BTreeSet<PartyId> {
        self.nodes.iter().flat_map(|v| v.config.corrupted.iter().copied()).collect()
    }

    /// Parties never corrupted on any path.
    pub fn honest_parties(&self) -> Vec<PartyId> {
        let bad = self.ever_corrupted();
        (0..self.params.n).map(PartyId).filter(|p| !bad.contains(p)).collect()
    }

    /// Product of the edge weights from the root to `node`.
    pub fn path_probability(&self, node: NodeId) -> Result<Ratio> {
        let mut current = self.node(node)?;
        let mut p = Ratio::one();
        while let Some(parent) = current.parent {
            let parent = &self.nodes[parent.0];
            let (w, _) = parent
                .children
                .iter()
                .find(|(_, c)| *c == current.id)
                .expect("parent lists child");
            p *= w;
            current = parent;
        }
        Ok(p)
    }

    /// Child positions from the root to `node`.
    pub fn position(&self, node: NodeId) -> Result<Vec<usize>> {
        let mut current = self.node(node)?;
        let mut path = Vec::new();
        while let Some(parent) = current.parent {
            let parent = &self.nodes[parent.0];
            path.push(parent.children.iter().position(|(_, c)| *c == current.id).expect("child"));
            current = parent;
        }
        path.reverse();
        Ok(path)
    }

    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        let mut current = Some(node);
        while let Some(c) = current {
            if c == ancestor {
                return true;
            }
            current = self.nodes[c.0].parent;
        }
        false
    }

    /// Root-to-leaf node sequences (maximal paths).
    pub fn paths(&self) -> Vec<Vec<NodeId>> {
        self.leaves()
            .map(|leaf| {
                let mut path = vec![leaf.id];
                let mut current = leaf;
                while let Some(p) = current.parent {
                    path.push(p);
                    current = &self.nodes[p.0];
                }
                path.reverse();
                path
            })
            .collect()
    }

    pub fn leaf_mass(&self) -> Ratio {
        self.leaves().map(|v| &v.reach).sum()
    }

    /// The earliest node on each path where the predicate holds for
    /// `party`. The result is an antichain.
    pub fn first_hit_nodes(&self, party: PartyId, event: &EventSpec) -> Vec<NodeId> {
        let mut hits = Vec::new();
        let mut stack = vec![NodeId(0)];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id.0];
            match node.config.parties.get(party.0) {
                Some(state) if event.holds(party, state) => hits.push(id),
                _ => stack.extend(node.children.iter().rev().map(|(_, c)| *c)),
            }
        }
        hits.sort();
        hits
    }

    /// Probability that `party` ever satisfies `event`. For truncated
    /// ensembles the upper end adds the mass of cut leaves not yet hit.
    pub fn event_probability(&self, party: PartyId, event: &EventSpec) -> Measured {
        let hits = self.first_hit_nodes(party, event);
        let lower: Ratio = hits.iter().map(|h| &self.nodes[h.0].reach).sum();
        let open: Ratio = self
            .nodes
            .iter()
            .filter(|v| v.status == NodeStatus::Cut)
            .filter(|v| !hits.iter().any(|h| self.is_ancestor(*h, v.id)))
            .map(|v| &v.reach)
            .sum();
        Measured {
            upper: lower.clone() + open,
            lower,
        }
    }

    pub fn decision_probability(&self, party: PartyId, value: &Value) -> Measured {
        self.event_probability(party, &EventSpec::decided(self.protocol.clone(), value.clone()))
    }

    /// Values decided by `party` anywhere in the tree, in canonical order.
    pub fn decided_values(&self, party: PartyId) -> Vec<Value> {
        let mut values: Vec<Value> = self
            .leaves()
            .filter_map(|v| v.config.parties.get(party.0))
            .filter_map(|s| self.protocol.decision(s))
            .collect();
        values.sort();
        values.dedup();
        values
    }

    /// Probability that every party in `parties` decides.
    pub fn check_probabilistic_termination(&self, parties: &[PartyId]) -> TerminationReport {
        let all_decided = |v: &EnsembleNode| {
            parties
                .iter()
                .all(|p| v.config.parties.get(p.0).is_some_and(|s| self.protocol.decision(s).is_some()))
        };
        let lower: Ratio = self
            .leaves()
            .filter(|v| v.status != NodeStatus::Cut && all_decided(v))
            .map(|v| &v.reach)
            .sum();
        let open: Ratio = self
            .leaves()
            .filter(|v| v.status == NodeStatus::Cut && !all_decided(v))
            .map(|v| &v.reach)
            .sum();
        let decided_cut: Ratio = self
            .leaves()
            .filter(|v| v.status == NodeStatus::Cut && all_decided(v))
            .map(|v| &v.reach)
            .sum();
        let lower = lower + decided_cut;
        let probability = Measured {
            upper: lower.clone() + open,
            lower,
        };
        let holds = if probability.is_exact() {
            Some(probability.lower.is_one())
        } else if probability.upper < Ratio::one() {
            Some(false)
        } else {
            None
        };
        TerminationReport { probability, holds }
    }

    /// Agreement on every path: honest parties that decide at a leaf
    /// decide the same value. Returns the first offending leaf.
    pub fn agreement_violation(&self, parties: &[PartyId]) -> Option<NodeId> {
        self.leaves()
            .find(|v| {
                let mut decided = parties
                    .iter()
                    .filter_map(|p| v.config.parties.get(p.0))
                    .filter_map(|s| self.protocol.decision(s));
                match decided.next() {
                    Some(first) => decided.any(|d| d != first),
                    None => false,
                }
            })
            .map(|v| v.id)
    }

    /// Same tree: node for node, configurations, edge labels and weights.
    pub fn structurally_equal(&self, other: &Ensemble) -> bool {
        self.params == other.params && self.completeness == other.completeness && self.nodes == other.nodes
    }
}
