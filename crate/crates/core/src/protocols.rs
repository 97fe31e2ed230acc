//! Shipped protocols: the composed agreement model (a report stage followed
//! by election rounds), a coin demo, and two mocks used by the
//! falsification harness.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Action, Coin, LocalEvent, LocalState, PartyId, Protocol, RegisteredObject, SharedDraw, StepContent};
use crate::rational::{ratio, Ratio};
use crate::value::Value;

const REPORT: &str = "report";
const PROMOTE: &str = "promote";

fn report(v: &Value) -> Value {
    Value::tuple([Value::sym(REPORT), v.clone()])
}

fn promote(round: usize, v: &Value) -> Value {
    Value::tuple([Value::sym(PROMOTE), Value::Int(round as i64), v.clone()])
}

/// Which broadcast a payload belongs to: `0` for reports, `r` for round-`r`
/// promotes.
fn classify(payload: &Value) -> Option<(usize, &Value)> {
    let items = payload.as_tuple()?;
    match items {
        [Value::Sym(tag), v] if tag == REPORT => Some((0, v)),
        [Value::Sym(tag), Value::Int(r), v] if tag == PROMOTE && *r > 0 => Some((*r as usize, v)),
        _ => None,
    }
}

/// Desk-scale model of the sequential composition.
///
/// Stage 1 (report model): every party broadcasts its input and waits for
/// the first `n − t` reports, its own included at the position of its
/// broadcast. If some value occurs at least `t + 1` times among them the
/// party decides it; such a value is unique and carried by at least one
/// honest reporter. Otherwise the party moves to stage 2 with its own input.
///
/// Stage 2 (election model): in round `r` every party promotes its value
/// and waits for the first `n − t` round-`r` promotes, which form its set of
/// completed broadcasts. A shared coin then elects an index uniformly from
/// `0..n`; an elected completed broadcast is decided, otherwise the party
/// moves to round `r + 1` keeping its value. After `explicit_rounds` rounds
/// a final round draws a uniform permutation and elects the first completed
/// index in it, which is the exact limit of repeating the uniform election
/// with an unchanged completed set.
#[derive(Debug, Clone)]
pub struct ComposedToy {
    pub n: usize,
    pub t: usize,
    pub explicit_rounds: usize,
    objects: Vec<RegisteredObject>,
}

impl ComposedToy {
    pub const DEFAULT_ROUNDS: usize = 3;

    pub fn new(n: usize, t: usize) -> Self {
        Self::with_rounds(n, t, Self::DEFAULT_ROUNDS)
    }

    pub fn with_rounds(n: usize, t: usize, explicit_rounds: usize) -> Self {
        let mut objects: Vec<RegisteredObject> = (1..=explicit_rounds)
            .map(|r| RegisteredObject {
                id: Self::coin_id(r),
                initial: SharedDraw::fresh(),
                object: Arc::new(SharedDraw::uniform((0..n as i64).map(Value::Int))),
            })
            .collect();
        objects.push(RegisteredObject {
            id: Self::tail_id().into(),
            initial: SharedDraw::fresh(),
            object: Arc::new(SharedDraw::uniform(permutations(n).into_iter().map(|p| {
                Value::Tuple(p.into_iter().map(|i| Value::Int(i as i64)).collect())
            }))),
        });
        Self {
            n,
            t,
            explicit_rounds,
            objects,
        }
    }

    pub fn coin_id(round: usize) -> String {
        format!("ams-coin-{round}")
    }

    pub fn tail_id() -> &'static str {
        "ams-tail"
    }

    fn quorum(&self) -> usize {
        self.n - self.t
    }

    /// The first `n − t` distinct senders of broadcast `round`, with their
    /// values, in history order.
    pub fn completed(&self, me: PartyId, state: &LocalState, round: usize) -> Option<Vec<(PartyId, Value)>> {
        let mut seen: Vec<(PartyId, Value)> = Vec::new();
        for event in &state.history {
            let entry = match event {
                LocalEvent::Step(step) => step
                    .sends
                    .first()
                    .and_then(|o| classify(&o.payload))
                    .filter(|(r, _)| *r == round)
                    .map(|(_, v)| (me, v.clone())),
                LocalEvent::Deliver { message } => classify(&message.payload)
                    .filter(|(r, _)| *r == round)
                    .map(|(_, v)| (message.id.sender, v.clone())),
                LocalEvent::PobAccess { .. } => None,
            };
            if let Some((p, v)) = entry {
                if !seen.iter().any(|(q, _)| *q == p) {
                    seen.push((p, v));
                    if seen.len() == self.quorum() {
                        return Some(seen);
                    }
                }
            }
        }
        None
    }

    /// Stage-1 outcome from a full set of reports: the value reported at
    /// least `t + 1` times, or `None` for ⊥.
    pub fn report_outcome(&self, reports: &[(PartyId, Value)]) -> Option<Value> {
        let values: Vec<&Value> = reports.iter().map(|(_, v)| v).collect();
        let distinct: BTreeSet<&Value> = values.iter().copied().collect();
        distinct
            .into_iter()
            .find(|v| values.iter().filter(|w| **w == *v).count() > self.t)
            .cloned()
    }

    fn promotes_sent(state: &LocalState) -> usize {
        state
            .steps()
            .filter(|s| s.sends.first().and_then(|o| classify(&o.payload)).is_some_and(|(r, _)| r > 0))
            .count()
    }

    fn elected(&self, round: usize, drawn: &Value, completed: &[(PartyId, Value)]) -> Option<Value> {
        let value_of = |i: i64| {
            completed
                .iter()
                .find(|(p, _)| p.0 as i64 == i)
                .map(|(_, v)| v.clone())
        };
        if round <= self.explicit_rounds {
            drawn.as_int().and_then(value_of)
        } else {
            drawn.as_tuple()?.iter().filter_map(Value::as_int).find_map(value_of)
        }
    }
}

impl Protocol for ComposedToy {
    fn name(&self) -> &str {
        "composed-toy"
    }

    fn next_action(&self, me: PartyId, state: &LocalState) -> Action {
        if state.last_decision().is_some() {
            return Action::Halt;
        }
        let own = &state.initial;
        if state.steps().next().is_none() {
            return Action::Step(StepContent::new(REPORT).broadcast(me, self.n, report(own)));
        }
        let round = Self::promotes_sent(state);
        if round == 0 {
            let Some(reports) = self.completed(me, state, 0) else {
                return Action::Wait;
            };
            return Action::Step(match self.report_outcome(&reports) {
                Some(v) => StepContent::new("rm-decide").decide(v),
                None => StepContent::new(PROMOTE).broadcast(me, self.n, promote(1, own)),
            });
        }
        let Some(completed) = self.completed(me, state, round) else {
            return Action::Wait;
        };
        let coin = if round <= self.explicit_rounds {
            Self::coin_id(round)
        } else {
            Self::tail_id().to_string()
        };
        let Some(drawn) = state.pob_values(&coin).next() else {
            return Action::Access(coin);
        };
        match self.elected(round, drawn, &completed) {
            Some(v) => Action::Step(StepContent::new("ams-decide").decide(v)),
            None if round <= self.explicit_rounds => {
                Action::Step(StepContent::new(PROMOTE).broadcast(me, self.n, promote(round + 1, own)))
            }
            None => Action::Halt,
        }
    }

    fn objects(&self) -> Vec<RegisteredObject> {
        self.objects.clone()
    }

    fn object(&self, id: &str) -> Option<Arc<dyn crate::model::ProbObject>> {
        self.objects.iter().find(|o| o.id == id).map(|o| o.object.clone())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinRule {
    /// Decide the value of the last flip.
    Copy,
    /// Decide 1 if any flip returned 1, else 0.
    Or,
    /// Decide 1 if any flip returned 1, else stay undecided.
    OrElseUndecided,
}

/// Party 0 flips a sequence of independent coins and decides from their
/// values; every other party halts immediately. The decision is read off
/// the state, so no extra step follows the last flip.
#[derive(Debug, Clone)]
pub struct CoinDemo {
    pub n: usize,
    pub biases: Vec<Ratio>,
    pub rule: CoinRule,
}

impl CoinDemo {
    pub fn new(n: usize, flips: usize, rule: CoinRule) -> Self {
        Self::with_biases(n, vec![ratio(1, 2); flips], rule)
    }

    pub fn with_biases(n: usize, biases: Vec<Ratio>, rule: CoinRule) -> Self {
        Self { n, biases, rule }
    }

    pub fn coin_id(k: usize) -> String {
        format!("coin-{k}")
    }

    fn flips<'a>(&'a self, state: &'a LocalState) -> impl Iterator<Item = &'a Value> + 'a {
        state.history.iter().filter_map(|e| match e {
            LocalEvent::PobAccess { value, .. } => Some(value),
            _ => None,
        })
    }
}

impl Protocol for CoinDemo {
    fn name(&self) -> &str {
        "coin-demo"
    }

    fn next_action(&self, me: PartyId, state: &LocalState) -> Action {
        let done = self.flips(state).count();
        if me.0 == 0 && done < self.biases.len() {
            Action::Access(Self::coin_id(done))
        } else {
            Action::Halt
        }
    }

    fn decision(&self, state: &LocalState) -> Option<Value> {
        let flips: Vec<&Value> = self.flips(state).collect();
        if flips.is_empty() || flips.len() < self.biases.len() {
            return None;
        }
        let any_one = flips.iter().any(|v| **v == Value::Int(1));
        match self.rule {
            CoinRule::Copy => flips.last().map(|v| (*v).clone()),
            CoinRule::Or => Some(Value::Int(any_one as i64)),
            CoinRule::OrElseUndecided => any_one.then_some(Value::Int(1)),
        }
    }

    fn objects(&self) -> Vec<RegisteredObject> {
        self.biases
            .iter()
            .enumerate()
            .map(|(k, p)| RegisteredObject {
                id: Self::coin_id(k),
                initial: Value::Bot,
                object: Arc::new(Coin::biased(p.clone())),
            })
            .collect()
    }
}

/// Every party decides `value` in its first step.
#[derive(Debug, Clone)]
pub struct MockFixed {
    pub n: usize,
    pub value: Value,
}

impl MockFixed {
    pub fn new(n: usize, value: Value) -> Self {
        Self { n, value }
    }
}

impl Protocol for MockFixed {
    fn name(&self) -> &str {
        "mock-fixed"
    }

    fn next_action(&self, _: PartyId, state: &LocalState) -> Action {
        if state.history.is_empty() {
            Action::Step(StepContent::new("decide").decide(self.value.clone()))
        } else {
            Action::Halt
        }
    }
}

/// Every party reads one shared coin that shows 1 with probability `x`, then
/// decides `bias` on 1 and ⊥ on 0.
#[derive(Debug, Clone)]
pub struct MockBiased {
    pub n: usize,
    pub bias: Value,
    pub x: Ratio,
}

impl MockBiased {
    pub const COIN: &'static str = "bias-coin";

    pub fn new(n: usize, bias: Value, x: Ratio) -> Result<Self> {
        if x <= Ratio::zero() || x > Ratio::one() {
            return Err(Error::InvalidParams(format!("bias probability {x} outside (0, 1]")));
        }
        Ok(Self { n, bias, x })
    }
}

impl Protocol for MockBiased {
    fn name(&self) -> &str {
        "mock-biased"
    }

    fn next_action(&self, _: PartyId, state: &LocalState) -> Action {
        match (state.pob_values(Self::COIN).next(), state.steps().next()) {
            (None, _) => Action::Access(Self::COIN.into()),
            (Some(coin), None) => {
                let d = if *coin == Value::Int(1) { self.bias.clone() } else { Value::Bot };
                Action::Step(StepContent::new("decide").decide(d))
            }
            _ => Action::Halt,
        }
    }

    fn objects(&self) -> Vec<RegisteredObject> {
        let outcomes = [(Value::Int(1), self.x.clone()), (Value::Int(0), Ratio::one() - &self.x)]
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .collect();
        vec![RegisteredObject {
            id: Self::COIN.into(),
            initial: SharedDraw::fresh(),
            object: Arc::new(SharedDraw { outcomes }),
        }]
    }
}

/// Protocols selectable by name.
pub fn protocol_by_name(name: &str, n: usize, t: usize) -> Result<Arc<dyn Protocol>> {
    Ok(match name {
        "composed-toy" => Arc::new(ComposedToy::new(n, t)),
        "coin-demo" => Arc::new(CoinDemo::new(n, 1, CoinRule::Copy)),
        "mock-fixed" => Arc::new(MockFixed::new(n, Value::sym("a"))),
        "mock-biased" => Arc::new(MockBiased::new(n, Value::sym("z"), ratio(1, 2))?),
        other => return Err(Error::InvalidParams(format!("unknown protocol {other}"))),
    })
}

pub const PROTOCOL_NAMES: [&str; 4] = ["composed-toy", "coin-demo", "mock-fixed", "mock-biased"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Message, MessageId};

    fn deliver(from: usize, to: usize, payload: Value) -> LocalEvent {
        LocalEvent::Deliver {
            message: Message {
                id: MessageId {
                    sender: PartyId(from),
                    receiver: PartyId(to),
                    seq: 0,
                },
                payload,
            },
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn report_stage_needs_t_plus_one_matches() {
        let toy = ComposedToy::new(4, 1);
        let a = Value::sym("a");
        let b = Value::sym("b");
        let reports = |vs: &[&Value]| -> Vec<(PartyId, Value)> {
            vs.iter().enumerate().map(|(i, v)| (PartyId(i), (*v).clone())).collect()
        };
        assert_eq!(toy.report_outcome(&reports(&[&a, &a, &b])), Some(a.clone()));
        assert_eq!(toy.report_outcome(&reports(&[&a, &b, &Value::sym("c")])), None);
    }

    #[test]
    fn party_reports_then_waits() {
        let toy = ComposedToy::new(4, 1);
        let mut state = LocalState::new(Value::sym("a"));
        let Action::Step(first) = toy.next_action(PartyId(0), &state) else {
            panic!("expected a step");
        };
        assert_eq!(first.sends.len(), 3);
        state.history.push(LocalEvent::Step(first));
        assert_eq!(toy.next_action(PartyId(0), &state), Action::Wait);
        state.history.push(deliver(1, 0, report(&Value::sym("a"))));
        state.history.push(deliver(2, 0, report(&Value::sym("b"))));
        let Action::Step(step) = toy.next_action(PartyId(0), &state) else {
            panic!("expected a decision");
        };
        assert_eq!(step.decision, Some(Value::sym("a")));
        state.history.push(LocalEvent::Step(step));
        assert_eq!(toy.next_action(PartyId(0), &state), Action::Halt);
    }

    #[test]
    fn mixed_reports_lead_to_the_election() {
        let toy = ComposedToy::new(4, 1);
        let mut state = LocalState::new(Value::sym("a"));
        for event in [
            deliver(1, 0, report(&Value::sym("b"))),
            deliver(2, 0, report(&Value::sym("c"))),
        ] {
            state.history.push(event);
        }
        let Action::Step(step) = toy.next_action(PartyId(0), &state) else { panic!() };
        assert_eq!(step.action, REPORT);
        state.history.push(LocalEvent::Step(step));
        let Action::Step(step) = toy.next_action(PartyId(0), &state) else { panic!() };
        assert_eq!(step.action, PROMOTE);
        assert_eq!(step.sends[0].payload, promote(1, &Value::sym("a")));
        state.history.push(LocalEvent::Step(step));
        state.history.push(deliver(2, 0, promote(1, &Value::sym("c"))));
        state.history.push(deliver(3, 0, promote(1, &Value::sym("z"))));
        assert_eq!(toy.next_action(PartyId(0), &state), Action::Access(ComposedToy::coin_id(1)));
        // Electing p3 decides its promoted value.
        state.history.push(LocalEvent::PobAccess {
            object: ComposedToy::coin_id(1),
            value: Value::Int(3),
        });
        let Action::Step(step) = toy.next_action(PartyId(0), &state) else { panic!() };
        assert_eq!(step.decision, Some(Value::sym("z")));
    }

    #[test]
    fn tail_elects_first_completed_in_permutation() {
        let toy = ComposedToy::with_rounds(4, 1, 0);
        let completed = vec![(PartyId(0), Value::sym("a")), (PartyId(2), Value::sym("c")), (PartyId(3), Value::sym("d"))];
        let perm = Value::Tuple([1, 3, 0, 2].map(Value::Int).to_vec());
        assert_eq!(toy.elected(1, &perm, &completed), Some(Value::sym("d")));
    }

    #[test]
    fn coin_demo_decides_without_extra_step() {
        let demo = CoinDemo::new(1, 1, CoinRule::Copy);
        let mut state = LocalState::new(Value::Bot);
        assert_eq!(demo.decision(&state), None);
        state.history.push(LocalEvent::PobAccess {
            object: CoinDemo::coin_id(0),
            value: Value::Int(1),
        });
        assert_eq!(demo.decision(&state), Some(Value::Int(1)));
        assert_eq!(demo.next_action(PartyId(0), &state), Action::Halt);
    }

    #[test]
    fn mock_biased_rejects_bad_bias() {
        assert!(MockBiased::new(4, Value::sym("z"), ratio(0, 1)).is_err());
        assert!(MockBiased::new(4, Value::sym("z"), ratio(1, 1)).is_ok());
    }

    #[test]
    fn names_resolve() {
        for name in PROTOCOL_NAMES {
            assert_eq!(protocol_by_name(name, 4, 1).unwrap().name(), name);
        }
        assert!(protocol_by_name("nope", 4, 1).is_err());
    }
}
