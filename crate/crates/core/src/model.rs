//! Parties, local states, configurations and the single-event transition
//! relation of the asynchronous message-passing model with probabilistic
//! objects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryStrategy;
use crate::error::{Error, Result};
use crate::rational::Ratio;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub usize);

impl PartyId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// `n` parties, corruption budget `t`, and `f`, the largest number of
/// parties actually corrupted on any path of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub t: usize,
    pub f: usize,
}

impl SystemParams {
    pub fn new(n: usize, t: usize, f: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if t >= n {
            return Err(Error::InvalidParams(format!("t={t} must be below n={n}")));
        }
        if f > t {
            return Err(Error::InvalidParams(format!("f={f} exceeds t={t}")));
        }
        Ok(Self { n, t, f })
    }

    /// The optimally resilient setting `n = 3t + 1`.
    pub fn byzantine(t: usize, f: usize) -> Result<Self> {
        Self::new(3 * t + 1, t, f)
    }

    pub fn is_optimal_resilience(&self) -> bool {
        self.n == 3 * self.t + 1
    }

    pub fn require_optimal_resilience(&self) -> Result<()> {
        if self.is_optimal_resilience() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "n={} must equal 3t+1 for t={}",
                self.n, self.t
            )))
        }
    }

    pub fn parties(&self) -> impl Iterator<Item = PartyId> {
        (0..self.n).map(PartyId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId {
    pub sender: PartyId,
    pub receiver: PartyId,
    /// Position of the message among all messages `sender` sent to
    /// `receiver`.
    pub seq: u64,
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}#{}", self.sender, self.receiver, self.seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Message {
    pub id: MessageId,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Outgoing {
    pub to: PartyId,
    pub payload: Value,
}

/// Content of a local step: a label, the messages sent, and an optional
/// decision.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepContent {
    pub action: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sends: Vec<Outgoing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Value>,
}

impl StepContent {
    pub fn new(action: impl Into<String>) -> Self {
        Self {
            action: action.into(),
            sends: Vec::new(),
            decision: None,
        }
    }

    pub fn send(mut self, to: PartyId, payload: Value) -> Self {
        self.sends.push(Outgoing { to, payload });
        self
    }

    /// Sends `payload` to every party in `0..n` except `me`.
    pub fn broadcast(mut self, me: PartyId, n: usize, payload: Value) -> Self {
        for to in (0..n).map(PartyId).filter(|p| *p != me) {
            self.sends.push(Outgoing {
                to,
                payload: payload.clone(),
            });
        }
        self
    }

    pub fn decide(mut self, value: Value) -> Self {
        self.decision = Some(value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalEvent {
    Step(StepContent),
    Deliver { message: Message },
    PobAccess { object: String, value: Value },
}

impl fmt::Display for LocalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalEvent::Step(step) => {
                write!(f, "{}", step.action)?;
                if !step.sends.is_empty() {
                    write!(f, " sends={}", step.sends.len())?;
                }
                if let Some(d) = &step.decision {
                    write!(f, " decide={d}")?;
                }
                Ok(())
            }
            LocalEvent::Deliver { message } => write!(f, "recv {} {}", message.id, message.payload),
            LocalEvent::PobAccess { object, value } => write!(f, "{object}={value}"),
        }
    }
}

/// A party's local state: its initial datum and the full sequence of local
/// events so far. Because the history only grows, a state never repeats
/// along an execution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocalState {
    pub initial: Value,
    pub history: Vec<LocalEvent>,
}

impl LocalState {
    pub fn new(initial: Value) -> Self {
        Self {
            initial,
            history: Vec::new(),
        }
    }

    pub fn last_event(&self) -> Option<&LocalEvent> {
        self.history.last()
    }

    /// The most recent decision recorded by a step.
    pub fn last_decision(&self) -> Option<&Value> {
        self.history.iter().rev().find_map(|e| match e {
            LocalEvent::Step(s) => s.decision.as_ref(),
            _ => None,
        })
    }

    pub fn delivered(&self) -> impl Iterator<Item = &Message> {
        self.history.iter().filter_map(|e| match e {
            LocalEvent::Deliver { message } => Some(message),
            _ => None,
        })
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepContent> {
        self.history.iter().filter_map(|e| match e {
            LocalEvent::Step(s) => Some(s),
            _ => None,
        })
    }

    pub fn pob_values<'a>(&'a self, object: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
        self.history.iter().filter_map(move |e| match e {
            LocalEvent::PobAccess { object: o, value } if o == object => Some(value),
            _ => None,
        })
    }

    /// `event` occurs exactly once and is the last element of the history.
    pub fn performed_last(&self, event: &LocalEvent) -> bool {
        self.history.last() == Some(event) && self.history.iter().filter(|e| *e == event).count() == 1
    }

    /// Number of messages this party has sent to `to` so far.
    pub fn sent_to(&self, to: PartyId) -> u64 {
        self.steps()
            .flat_map(|s| s.sends.iter())
            .filter(|o| o.to == to)
            .count() as u64
    }

    pub fn with_initial(&self, initial: Value) -> Self {
        Self {
            initial,
            history: self.history.clone(),
        }
    }
}

/// What a party's algorithm (or a corrupted party's controller) wants to
/// do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Step(StepContent),
    Access(String),
    /// Nothing to do until another message arrives.
    Wait,
    /// Terminal local state.
    Halt,
}

impl Action {
    pub fn is_enabled(&self) -> bool {
        matches!(self, Action::Step(_) | Action::Access(_))
    }
}

/// A probabilistic object: a finite distribution over return values that
/// depends on the object's state, plus a state transition per outcome.
pub trait ProbObject: Send + Sync + fmt::Debug {
    fn sample(&self, state: &Value) -> Vec<(Value, Ratio)>;
    fn transition(&self, state: &Value, returned: &Value) -> Value;
}

#[derive(Debug, Clone)]
pub struct RegisteredObject {
    pub id: String,
    pub initial: Value,
    pub object: Arc<dyn ProbObject>,
}

/// Stateless biased coin returning `1` with probability `p_one` and `0`
/// otherwise.
#[derive(Debug, Clone)]
pub struct Coin {
    pub p_one: Ratio,
}

impl Coin {
    pub fn fair() -> Self {
        Self {
            p_one: crate::rational::ratio(1, 2),
        }
    }

    pub fn biased(p_one: Ratio) -> Self {
        Self { p_one }
    }
}

impl ProbObject for Coin {
    fn sample(&self, _state: &Value) -> Vec<(Value, Ratio)> {
        [
            (Value::Int(0), Ratio::one() - &self.p_one),
            (Value::Int(1), self.p_one.clone()),
        ]
        .into_iter()
        .filter(|(_, w)| !w.is_zero())
        .collect()
    }

    fn transition(&self, state: &Value, _returned: &Value) -> Value {
        state.clone()
    }
}

/// A one-shot shared draw: the first access samples from `outcomes`, every
/// later access returns the same value with certainty. Models common coins
/// and other correlated randomness.
#[derive(Debug, Clone)]
pub struct SharedDraw {
    pub outcomes: Vec<(Value, Ratio)>,
}

impl SharedDraw {
    pub fn uniform(values: impl IntoIterator<Item = Value>) -> Self {
        let values: Vec<Value> = values.into_iter().collect();
        let w = crate::rational::ratio(1, values.len() as i64);
        Self {
            outcomes: values.into_iter().map(|v| (v, w.clone())).collect(),
        }
    }

    /// Initial (undrawn) state.
    pub fn fresh() -> Value {
        Value::Bot
    }
}

impl ProbObject for SharedDraw {
    fn sample(&self, state: &Value) -> Vec<(Value, Ratio)> {
        match state {
            Value::Tuple(drawn) if drawn.len() == 1 => vec![(drawn[0].clone(), Ratio::one())],
            _ => self.outcomes.clone(),
        }
    }

    fn transition(&self, _state: &Value, returned: &Value) -> Value {
        Value::Tuple(vec![returned.clone()])
    }
}

/// An algorithm: each party's next action is a function of its local state
/// alone. All randomness goes through registered probabilistic objects.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &str;

    fn next_action(&self, me: PartyId, state: &LocalState) -> Action;

    fn decision(&self, state: &LocalState) -> Option<Value> {
        state.last_decision().cloned()
    }

    fn objects(&self) -> Vec<RegisteredObject> {
        Vec::new()
    }

    fn object(&self, id: &str) -> Option<Arc<dyn ProbObject>> {
        self.objects().into_iter().find(|o| o.id == id).map(|o| o.object)
    }
}

/// Global snapshot: local states, pending messages per ordered link,
/// probabilistic-object states, and the parties corrupted so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ConfigRepr", try_from = "ConfigRepr")]
pub struct Configuration {
    pub parties: Vec<Arc<LocalState>>,
    pub links: BTreeMap<(PartyId, PartyId), Vec<Message>>,
    pub pobs: BTreeMap<String, Value>,
    pub corrupted: BTreeSet<PartyId>,
}

impl Configuration {
    /// Every party starts in `⟨input, []⟩`, links are empty, objects are in
    /// their registered initial states.
    pub fn initial(inputs: &[Value], protocol: &dyn Protocol) -> Self {
        Self {
            parties: inputs
                .iter()
                .map(|v| Arc::new(LocalState::new(v.clone())))
                .collect(),
            links: BTreeMap::new(),
            pobs: protocol
                .objects()
                .into_iter()
                .map(|o| (o.id, o.initial))
                .collect(),
            corrupted: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn state(&self, p: PartyId) -> Result<&LocalState> {
        self.parties
            .get(p.0)
            .map(|s| s.as_ref())
            .ok_or(Error::UnknownParty(p))
    }

    pub fn inputs(&self) -> Vec<Value> {
        self.parties.iter().map(|s| s.initial.clone()).collect()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Message> {
        self.links.values().flatten()
    }

    pub fn pending_count(&self) -> usize {
        self.links.values().map(Vec::len).sum()
    }

    pub fn is_corrupted(&self, p: PartyId) -> bool {
        self.corrupted.contains(&p)
    }

    fn push_event(&mut self, p: PartyId, event: LocalEvent) {
        Arc::make_mut(&mut self.parties[p.0]).history.push(event);
    }
}

#[derive(Serialize, Deserialize)]
struct LinkRepr {
    from: PartyId,
    to: PartyId,
    messages: Vec<Message>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    party_states: Vec<LocalState>,
    pending_links: Vec<LinkRepr>,
    pob_states: BTreeMap<String, Value>,
    #[serde(default)]
    corrupted: BTreeSet<PartyId>,
}

impl From<Configuration> for ConfigRepr {
    fn from(c: Configuration) -> Self {
        Self {
            party_states: c.parties.iter().map(|s| s.as_ref().clone()).collect(),
            pending_links: c
                .links
                .into_iter()
                .map(|((from, to), messages)| LinkRepr { from, to, messages })
                .collect(),
            pob_states: c.pobs,
            corrupted: c.corrupted,
        }
    }
}

impl TryFrom<ConfigRepr> for Configuration {
    type Error = String;

    fn try_from(r: ConfigRepr) -> std::result::Result<Self, String> {
        let mut links = BTreeMap::new();
        for link in r.pending_links {
            if link.messages.is_empty() {
                continue;
            }
            if link
                .messages
                .iter()
                .any(|m| m.id.sender != link.from || m.id.receiver != link.to)
            {
                return Err(format!("message filed on the wrong link {}->{}", link.from, link.to));
            }
            links.insert((link.from, link.to), link.messages);
        }
        Ok(Self {
            parties: r.party_states.into_iter().map(Arc::new).collect(),
            links,
            pobs: r.pob_states,
            corrupted: r.corrupted,
        })
    }
}

/// An item the adversary may schedule next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheduled {
    Deliver(MessageId),
    Step(PartyId),
}

impl fmt::Display for Scheduled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheduled::Deliver(id) => write!(f, "deliver {id}"),
            Scheduled::Step(p) => write!(f, "step {p}"),
        }
    }
}

/// One outgoing edge of an ensemble node.
#[derive(Debug, Clone)]
pub struct Successor {
    pub config: Configuration,
    pub weight: Ratio,
    pub party: PartyId,
    pub event: LocalEvent,
}

/// The action party `p` takes in `config`: the algorithm's for honest
/// parties, the adversary's for corrupted ones.
pub fn party_action(
    config: &Configuration,
    p: PartyId,
    protocol: &dyn Protocol,
    strategy: &AdversaryStrategy,
) -> Result<Action> {
    let state = config.state(p)?;
    Ok(if config.is_corrupted(p) {
        strategy.behavior.action(p, state, protocol)
    } else {
        protocol.next_action(p, state)
    })
}

/// All items that may legally be scheduled: every pending message, and
/// every party with a step or object access to perform. Deliveries come
/// first, ordered by `(sender, receiver, seq)`; steps follow by party index.
pub fn enabled_items(
    config: &Configuration,
    protocol: &dyn Protocol,
    strategy: &AdversaryStrategy,
) -> Result<Vec<Scheduled>> {
    let mut items: Vec<Scheduled> = config.pending().map(|m| Scheduled::Deliver(m.id)).collect();
    items.sort();
    for p in (0..config.n()).map(PartyId) {
        if party_action(config, p, protocol, strategy)?.is_enabled() {
            items.push(Scheduled::Step(p));
        }
    }
    Ok(items)
}

/// Checks that a distribution has strictly positive weights summing to 1
/// and returns it in canonical (return value) order.
pub fn checked_distribution(id: &str, mut dist: Vec<(Value, Ratio)>) -> Result<Vec<(Value, Ratio)>> {
    let malformed = |reason: String| Error::MalformedObject {
        id: id.to_string(),
        reason,
    };
    if dist.is_empty() {
        return Err(malformed("empty support".into()));
    }
    if let Some((v, w)) = dist.iter().find(|(_, w)| !w.is_positive()) {
        return Err(malformed(format!("non-positive weight {w} for {v}")));
    }
    let total: Ratio = dist.iter().map(|(_, w)| w).sum();
    if !total.is_one() {
        return Err(malformed(format!("weights sum to {total}")));
    }
    dist.sort_by(|a, b| a.0.cmp(&b.0));
    if dist.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(malformed("duplicate return value".into()));
    }
    Ok(dist)
}

/// Applies one scheduled item. Deterministic items yield a single successor
/// of weight 1; an object access yields one successor per return value,
/// weighted by the object's distribution and ordered by return value.
pub fn apply_event(
    config: &Configuration,
    scheduled: Scheduled,
    protocol: &dyn Protocol,
    strategy: &AdversaryStrategy,
) -> Result<Vec<Successor>> {
    match scheduled {
        Scheduled::Deliver(id) => {
            let link = (id.sender, id.receiver);
            let pos = config
                .links
                .get(&link)
                .and_then(|msgs| msgs.iter().position(|m| m.id == id))
                .ok_or(Error::NotPending(id))?;
            config.state(id.receiver)?;
            let mut next = config.clone();
            let msgs = next.links.get_mut(&link).expect("link exists");
            let message = msgs.remove(pos);
            if msgs.is_empty() {
                next.links.remove(&link);
            }
            let event = LocalEvent::Deliver { message };
            next.push_event(id.receiver, event.clone());
            Ok(vec![Successor {
                config: next,
                weight: Ratio::one(),
                party: id.receiver,
                event,
            }])
        }
        Scheduled::Step(p) => match party_action(config, p, protocol, strategy)? {
            Action::Step(content) => {
                let mut next = config.clone();
                let sender_state = config.state(p)?;
                let mut counters: BTreeMap<PartyId, u64> = BTreeMap::new();
                for out in &content.sends {
                    config.state(out.to)?;
                    let seq = counters
                        .entry(out.to)
                        .or_insert_with(|| sender_state.sent_to(out.to));
                    let message = Message {
                        id: MessageId {
                            sender: p,
                            receiver: out.to,
                            seq: *seq,
                        },
                        payload: out.payload.clone(),
                    };
                    *seq += 1;
                    next.links.entry((p, out.to)).or_default().push(message);
                }
                let event = LocalEvent::Step(content);
                next.push_event(p, event.clone());
                Ok(vec![Successor {
                    config: next,
                    weight: Ratio::one(),
                    party: p,
                    event,
                }])
            }
            Action::Access(object) => {
                let behavior = protocol
                    .object(&object)
                    .ok_or_else(|| Error::UnknownObject(object.clone()))?;
                let state = config
                    .pobs
                    .get(&object)
                    .ok_or_else(|| Error::UnknownObject(object.clone()))?;
                let dist = checked_distribution(&object, behavior.sample(state))?;
                Ok(dist
                    .into_iter()
                    .map(|(value, weight)| {
                        let mut next = config.clone();
                        next.pobs
                            .insert(object.clone(), behavior.transition(state, &value));
                        let event = LocalEvent::PobAccess {
                            object: object.clone(),
                            value,
                        };
                        next.push_event(p, event.clone());
                        Successor {
                            config: next,
                            weight,
                            party: p,
                            event,
                        }
                    })
                    .collect())
            }
            Action::Wait | Action::Halt => Err(Error::NotEnabled(p)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryStrategy;
    use crate::rational::ratio;

    /// p0 accesses `coin` once, then halts; p1 broadcasts once.
    struct Probe {
        coin: Coin,
    }

    impl Protocol for Probe {
        fn name(&self) -> &str {
            "probe"
        }

        fn next_action(&self, me: PartyId, state: &LocalState) -> Action {
            match (me.0, state.history.len()) {
                (0, 0) => Action::Access("coin".into()),
                (1, 0) => Action::Step(StepContent::new("hello").broadcast(me, 2, Value::sym("hi"))),
                _ => Action::Halt,
            }
        }

        fn objects(&self) -> Vec<RegisteredObject> {
            vec![RegisteredObject {
                id: "coin".into(),
                initial: Value::Bot,
                object: Arc::new(self.coin.clone()),
            }]
        }
    }

    fn setup(coin: Coin) -> (Probe, AdversaryStrategy, Configuration) {
        let protocol = Probe { coin };
        let strategy = AdversaryStrategy::benign(0);
        let config = Configuration::initial(&[Value::sym("a"), Value::sym("b")], &protocol);
        (protocol, strategy, config)
    }

    #[test]
    fn fair_coin_branches_in_halves() {
        let (protocol, strategy, config) = setup(Coin::fair());
        let succ = apply_event(&config, Scheduled::Step(PartyId(0)), &protocol, &strategy).unwrap();
        assert_eq!(succ.len(), 2);
        assert!(succ.iter().all(|s| s.weight == ratio(1, 2)));
        assert_ne!(succ[0].config.parties[0].history, succ[1].config.parties[0].history);
    }

    #[test]
    fn biased_coin_weights_follow_the_object() {
        let (protocol, strategy, config) = setup(Coin::biased(ratio(1, 3)));
        let succ = apply_event(&config, Scheduled::Step(PartyId(0)), &protocol, &strategy).unwrap();
        let weights: Vec<(Value, Ratio)> = succ
            .iter()
            .map(|s| match &s.event {
                LocalEvent::PobAccess { value, .. } => (value.clone(), s.weight.clone()),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(weights, vec![(Value::Int(0), ratio(2, 3)), (Value::Int(1), ratio(1, 3))]);
    }

    #[test]
    fn delivery_moves_message_into_history() {
        let (protocol, strategy, config) = setup(Coin::fair());
        let sent = apply_event(&config, Scheduled::Step(PartyId(1)), &protocol, &strategy).unwrap();
        assert_eq!(sent.len(), 1);
        let after_send = &sent[0].config;
        assert_eq!(after_send.pending_count(), 1);
        let id = after_send.pending().next().unwrap().id;
        assert_eq!(id, MessageId { sender: PartyId(1), receiver: PartyId(0), seq: 0 });

        let delivered = apply_event(after_send, Scheduled::Deliver(id), &protocol, &strategy).unwrap();
        assert_eq!(delivered.len(), 1);
        assert_eq!(delivered[0].weight, Ratio::one());
        let next = &delivered[0].config;
        assert_eq!(next.pending_count(), 0);
        assert_eq!(next.parties[0].delivered().count(), 1);
        // Delivering it again is an error.
        assert_eq!(
            apply_event(next, Scheduled::Deliver(id), &protocol, &strategy).unwrap_err(),
            Error::NotPending(id)
        );
    }

    #[test]
    fn halted_party_cannot_step() {
        let (protocol, strategy, config) = setup(Coin::fair());
        let after = apply_event(&config, Scheduled::Step(PartyId(1)), &protocol, &strategy).unwrap();
        assert_eq!(
            apply_event(&after[0].config, Scheduled::Step(PartyId(1)), &protocol, &strategy).unwrap_err(),
            Error::NotEnabled(PartyId(1))
        );
        assert_eq!(
            apply_event(&config, Scheduled::Step(PartyId(7)), &protocol, &strategy).unwrap_err(),
            Error::UnknownParty(PartyId(7))
        );
    }

    #[derive(Debug)]
    struct Lopsided;

    impl ProbObject for Lopsided {
        fn sample(&self, _: &Value) -> Vec<(Value, Ratio)> {
            vec![(Value::Int(0), ratio(1, 2)), (Value::Int(1), ratio(1, 3))]
        }
        fn transition(&self, s: &Value, _: &Value) -> Value {
            s.clone()
        }
    }

    #[test]
    fn malformed_object_is_rejected() {
        let err = checked_distribution("lop", Lopsided.sample(&Value::Bot)).unwrap_err();
        assert!(matches!(err, Error::MalformedObject { .. }), "{err}");
        let err = checked_distribution("neg", vec![(Value::Int(0), ratio(3, 2)), (Value::Int(1), ratio(-1, 2))])
            .unwrap_err();
        assert!(matches!(err, Error::MalformedObject { .. }));
    }

    #[test]
    fn shared_draw_is_fixed_after_first_access() {
        let draw = SharedDraw::uniform([Value::Int(0), Value::Int(1), Value::Int(2)]);
        let first = draw.sample(&SharedDraw::fresh());
        assert_eq!(first.len(), 3);
        let state = draw.transition(&SharedDraw::fresh(), &Value::Int(2));
        assert_eq!(draw.sample(&state), vec![(Value::Int(2), Ratio::one())]);
    }

    #[test]
    fn configuration_json_round_trip() {
        let (protocol, strategy, config) = setup(Coin::fair());
        let sent = apply_event(&config, Scheduled::Step(PartyId(1)), &protocol, &strategy).unwrap();
        let json = serde_json::to_string(&sent[0].config).unwrap();
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sent[0].config);
    }
}
