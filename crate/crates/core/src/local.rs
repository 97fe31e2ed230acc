//! Per-party local ensembles and probabilistic indistinguishability.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, NodeId};
use crate::error::{Error, Result};
use crate::model::{LocalEvent, LocalState, PartyId};
use crate::rational::Ratio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalNode {
    pub state: Arc<LocalState>,
    /// Probability that the party ever holds `state`.
    pub probability: Ratio,
    /// Indices into the arena, ordered by local state.
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// Source ensemble nodes where the party first holds `state`, with
    /// their path probabilities.
    pub sources: Vec<(NodeId, Ratio)>,
}

/// The tree of a party's distinct local states, each labeled with its reach
/// probability. Nodes are stored in breadth-first order; index 0 is the
/// root.
#[derive(Debug, Clone)]
pub struct LocalEnsemble {
    pub party: PartyId,
    pub nodes: Vec<LocalNode>,
}

/// The label compared by indistinguishability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub state: LocalState,
    #[serde(with = "crate::rational::serde_fraction")]
    pub probability: Ratio,
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<input {}, {} events", self.state.initial, self.state.history.len())?;
        if let Some(last) = self.state.last_event() {
            write!(f, ", last {last}")?;
        }
        write!(f, ", p={}>", self.probability)
    }
}

/// First position (child indices from the root) where two local ensembles
/// differ. A missing side means one tree has no node there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub path: Vec<usize>,
    pub left: Option<NodeLabel>,
    pub right: Option<NodeLabel>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |l: &Option<NodeLabel>| l.as_ref().map_or("none".to_string(), |l| l.to_string());
        write!(f, "at {:?}: {} vs {}", self.path, side(&self.left), side(&self.right))
    }
}

impl LocalEnsemble {
    pub fn root(&self) -> &LocalNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, index: usize) -> NodeLabel {
        let node = &self.nodes[index];
        NodeLabel {
            state: node.state.as_ref().clone(),
            probability: node.probability.clone(),
        }
    }

    pub fn depth(&self, mut index: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[index].parent {
            index = p;
            d += 1;
        }
        d
    }

    /// Index of the node reached by following child positions.
    pub fn at(&self, path: &[usize]) -> Option<usize> {
        let mut cur = 0;
        for &k in path {
            cur = *self.nodes[cur].children.get(k)?;
        }
        Some(cur)
    }

    /// Finds the node labeled with `state`.
    pub fn find(&self, state: &LocalState) -> Option<usize> {
        self.nodes.iter().position(|n| n.state.as_ref() == state)
    }
}

/// Builds the local ensemble of `party` with the worklist construction:
/// starting from the set of ensemble nodes where the party first holds a
/// state, probability mass is pushed down through descendants that keep the
/// state (stuttering) until it reaches a node with a new state; those nodes
/// are grouped by state (merging) and become the next local nodes.
pub fn build_local_ensemble(ens: &Ensemble, party: PartyId) -> Result<LocalEnsemble> {
    ens.require_complete()?;
    if party.0 >= ens.params.n {
        return Err(Error::UnknownParty(party));
    }
    let root = ens.root();
    let mut nodes = vec![LocalNode {
        state: root.config.parties[party.0].clone(),
        probability: Ratio::zero(),
        children: Vec::new(),
        parent: None,
        sources: vec![(root.id, root.reach.clone())],
    }];
    let mut queue = VecDeque::from([0usize]);

    while let Some(index) = queue.pop_front() {
        let state = nodes[index].state.clone();
        let sources = nodes[index].sources.clone();
        nodes[index].probability = sources.iter().map(|(_, p)| p).sum();

        let mut next: BTreeMap<Arc<LocalState>, Vec<(NodeId, Ratio)>> = BTreeMap::new();
        let mut propagation: VecDeque<(NodeId, Ratio)> = VecDeque::new();
        for (v, p) in &sources {
            for (w, u) in &ens.nodes()[v.0].children {
                propagation.push_back((*u, p * w));
            }
        }
        while let Some((u, p)) = propagation.pop_front() {
            let node = &ens.nodes()[u.0];
            let here = &node.config.parties[party.0];
            if Arc::ptr_eq(here, &state) || **here == *state {
                for (w, c) in &node.children {
                    propagation.push_back((*c, &p * w));
                }
            } else {
                next.entry(here.clone()).or_default().push((u, p));
            }
        }
        for (child_state, child_sources) in next {
            let child = nodes.len();
            nodes.push(LocalNode {
                state: child_state,
                probability: Ratio::zero(),
                children: Vec::new(),
                parent: Some(index),
                sources: child_sources,
            });
            nodes[index].children.push(child);
            queue.push_back(child);
        }
    }
    Ok(LocalEnsemble { party, nodes })
}

fn require_same_party(a: &LocalEnsemble, b: &LocalEnsemble) -> Result<()> {
    if a.party == b.party {
        Ok(())
    } else {
        Err(Error::PartyMismatch(a.party, b.party))
    }
}

/// The first difference in pre-order, comparing labels and then children
/// position by position.
pub fn divergence_witness(a: &LocalEnsemble, b: &LocalEnsemble) -> Result<Option<Divergence>> {
    require_same_party(a, b)?;
    Ok(diverge(a, 0, b, 0, &mut Vec::new()))
}

fn diverge(a: &LocalEnsemble, x: usize, b: &LocalEnsemble, y: usize, path: &mut Vec<usize>) -> Option<Divergence> {
    let (nx, ny) = (&a.nodes[x], &b.nodes[y]);
    if nx.state != ny.state || nx.probability != ny.probability {
        return Some(Divergence {
            path: path.clone(),
            left: Some(a.label(x)),
            right: Some(b.label(y)),
        });
    }
    for k in 0..nx.children.len().max(ny.children.len()) {
        path.push(k);
        let found = match (nx.children.get(k), ny.children.get(k)) {
            (Some(&cx), Some(&cy)) => diverge(a, cx, b, cy, path),
            (cx, cy) => Some(Divergence {
                path: path.clone(),
                left: cx.map(|&i| a.label(i)),
                right: cy.map(|&i| b.label(i)),
            }),
        };
        path.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Exact equality of the labeled trees.
pub fn local_ensembles_equal(a: &LocalEnsemble, b: &LocalEnsemble) -> Result<bool> {
    Ok(divergence_witness(a, b)?.is_none())
}

/// Whether `a` and `b` induce the same local ensemble for `party`.
pub fn indistinguishable(a: &Ensemble, b: &Ensemble, party: PartyId) -> Result<bool> {
    local_ensembles_equal(&build_local_ensemble(a, party)?, &build_local_ensemble(b, party)?)
}

/// Sum of node probabilities over local states in which `action` occurs
/// exactly once, as the last event.
pub fn action_probability_local(lens: &LocalEnsemble, action: &LocalEvent) -> Ratio {
    lens.nodes
        .iter()
        .filter(|n| n.state.performed_last(action))
        .map(|n| &n.probability)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryStrategy;
    use crate::ensemble::{build_ensemble, EventSpec};
    use crate::model::{Action, Configuration, Protocol, StepContent};
    use crate::protocols::{CoinDemo, CoinRule};
    use crate::rational::{one, ratio};
    use crate::value::Value;

    fn coin_ensemble(n: usize) -> Ensemble {
        let protocol: Arc<dyn Protocol> = Arc::new(CoinDemo::new(n, 1, CoinRule::Copy));
        let initial = Configuration::initial(&vec![Value::Bot; n], protocol.as_ref());
        build_ensemble(protocol, &AdversaryStrategy::benign(0), initial, 8).unwrap()
    }

    /// p0 flips a coin and p1 then takes one step that ignores the coin,
    /// so p1 reaches the same state on both branches.
    struct Merge;

    impl Protocol for Merge {
        fn name(&self) -> &str {
            "merge"
        }

        fn next_action(&self, me: PartyId, state: &LocalState) -> Action {
            match (me.0, state.history.len()) {
                (0, 0) => Action::Access("coin-0".into()),
                (1, 0) => Action::Step(StepContent::new("tick")),
                _ => Action::Halt,
            }
        }

        fn objects(&self) -> Vec<crate::model::RegisteredObject> {
            CoinDemo::new(2, 1, CoinRule::Copy).objects()
        }
    }

    #[test]
    fn untouched_party_has_single_node() {
        let ens = coin_ensemble(2);
        let lens = build_local_ensemble(&ens, PartyId(1)).unwrap();
        assert_eq!(lens.len(), 1);
        assert_eq!(lens.root().probability, one());
    }

    #[test]
    fn observer_splits_in_halves() {
        let ens = coin_ensemble(1);
        let lens = build_local_ensemble(&ens, PartyId(0)).unwrap();
        assert_eq!(lens.len(), 3);
        let probs: Vec<Ratio> = lens.root().children.iter().map(|&c| lens.nodes[c].probability.clone()).collect();
        assert_eq!(probs, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn identical_states_merge() {
        let protocol: Arc<dyn Protocol> = Arc::new(Merge);
        let initial = Configuration::initial(&[Value::Bot, Value::Bot], protocol.as_ref());
        let ens = build_ensemble(protocol, &AdversaryStrategy::benign(0), initial, 8).unwrap();
        // root, two coin children, one tick below each.
        assert_eq!(ens.len(), 5);
        let lens = build_local_ensemble(&ens, PartyId(1)).unwrap();
        assert_eq!(lens.len(), 2);
        let child = &lens.nodes[lens.root().children[0]];
        assert_eq!(child.probability, one());
        assert_eq!(child.sources.len(), 2);
    }

    #[test]
    fn truncated_ensemble_is_rejected() {
        let protocol: Arc<dyn Protocol> = Arc::new(CoinDemo::new(1, 1, CoinRule::Copy));
        let initial = Configuration::initial(&[Value::Bot], protocol.as_ref());
        let ens = build_ensemble(protocol, &AdversaryStrategy::benign(0), initial, 0).unwrap();
        assert!(matches!(build_local_ensemble(&ens, PartyId(0)), Err(Error::Truncated(_))));
    }

    #[test]
    fn equality_and_witnesses() {
        let ens = coin_ensemble(1);
        let lens = build_local_ensemble(&ens, PartyId(0)).unwrap();
        assert!(local_ensembles_equal(&lens, &lens).unwrap());
        assert_eq!(divergence_witness(&lens, &lens).unwrap(), None);

        let mut skewed = lens.clone();
        let c = skewed.root().children[1];
        skewed.nodes[c].probability = ratio(1, 3);
        assert!(!local_ensembles_equal(&lens, &skewed).unwrap());
        let w = divergence_witness(&lens, &skewed).unwrap().unwrap();
        assert_eq!(w.path, vec![1]);
        assert_eq!(w.right.unwrap().probability, ratio(1, 3));

        let mut other = lens.clone();
        let c = other.root().children[0];
        Arc::make_mut(&mut other.nodes[c].state).initial = Value::sym("x");
        let w = divergence_witness(&lens, &other).unwrap().unwrap();
        assert_eq!(w.path.len(), 1);

        let mut wrong = lens.clone();
        wrong.party = PartyId(1);
        assert_eq!(local_ensembles_equal(&lens, &wrong), Err(Error::PartyMismatch(PartyId(0), PartyId(1))));
    }

    #[test]
    fn missing_child_is_reported() {
        let ens = coin_ensemble(1);
        let lens = build_local_ensemble(&ens, PartyId(0)).unwrap();
        let mut pruned = lens.clone();
        pruned.nodes[0].children.pop();
        let w = divergence_witness(&lens, &pruned).unwrap().unwrap();
        assert_eq!(w.path, vec![1]);
        assert!(w.left.is_some() && w.right.is_none());
    }

    #[test]
    fn action_probability_matches_event_probability() {
        let ens = coin_ensemble(1);
        let lens = build_local_ensemble(&ens, PartyId(0)).unwrap();
        let heads = LocalEvent::PobAccess {
            object: CoinDemo::coin_id(0),
            value: Value::Int(1),
        };
        assert_eq!(action_probability_local(&lens, &heads), ratio(1, 2));
        let absent = LocalEvent::Step(StepContent::new("never"));
        assert_eq!(action_probability_local(&lens, &absent), Ratio::zero());
        let m = ens.event_probability(PartyId(0), &EventSpec::performed(heads.clone()));
        assert_eq!(m.value(), Some(&action_probability_local(&lens, &heads)));
    }

    #[test]
    fn indistinguishable_is_reflexive() {
        let ens = coin_ensemble(2);
        assert!(indistinguishable(&ens, &ens, PartyId(0)).unwrap());
        assert!(indistinguishable(&ens, &ens, PartyId(1)).unwrap());
    }
}
