//! The four lower-bound scenarios as executable strategies, the pairwise
//! indistinguishability checks between them, and a harness that looks for
//! protocols beating the validity bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::adversary::{
    AdversaryStrategy, ByzantineBehavior, CorruptionPolicy, Mimic, PriorityScheduler, Silent, StopRule,
};
use crate::agreement::multiset::{find_balanced_submultiset, qv_guarantee_branch, InputMultiset};
use crate::ensemble::{build_ensemble, Ensemble};
use crate::error::{Error, Result};
use crate::local::{action_probability_local, build_local_ensemble, divergence_witness, Divergence, LocalEnsemble};
use crate::model::{Configuration, LocalEvent, PartyId, Protocol, SystemParams};
use crate::rational::{serde_fraction, Ratio};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    E1,
    E2,
    E3,
    E4,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::E1),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            "E4" => Ok(Self::E4),
            _ => Err(Error::InvalidParams(format!("unknown scenario {s}"))),
        }
    }
}

pub type PartySet = BTreeSet<PartyId>;

/// The cast: per-party inputs, the sets `F`, `T`, `M`, `U`, the bogus value
/// and the designated values `u` (for E3) and `w` (for E4).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioParams {
    pub inputs: Vec<Value>,
    pub params: SystemParams,
    pub f_hat: usize,
    pub f_set: PartySet,
    pub t_set: PartySet,
    pub m_set: PartySet,
    pub u_set: PartySet,
    pub v_f: Value,
    pub u: Option<Value>,
    pub w: Option<Value>,
}

fn set(ix: impl IntoIterator<Item = usize>) -> PartySet {
    ix.into_iter().map(PartyId).collect()
}

impl ScenarioParams {
    pub fn new(inputs: Vec<Value>, t: usize, f_hat: usize, f_set: PartySet, t_set: PartySet, m_set: PartySet, v_f: Value) -> Result<Self> {
        let sp = Self {
            params: SystemParams::new(inputs.len(), t, f_hat)?,
            inputs,
            f_hat,
            f_set,
            t_set,
            m_set,
            u_set: PartySet::new(),
            v_f,
            u: None,
            w: None,
        };
        sp.validate()?;
        Ok(sp)
    }

    /// Picks `M` as the lowest-index holders of the balanced submultiset,
    /// then `F` as the `f_hat` lowest remaining parties and `T` as the rest.
    pub fn derive(inputs: Vec<Value>, t: usize, f_hat: usize, v_f: Value) -> Result<Self> {
        let params = SystemParams::new(inputs.len(), t, f_hat)?;
        let vin = InputMultiset::new(inputs.clone());
        let sub = find_balanced_submultiset(&vin, &params)?;
        let mut need = sub.counts().into_iter().map(|(v, c)| (v.clone(), c)).collect::<BTreeMap<_, _>>();
        let mut m_set = PartySet::new();
        for (i, v) in inputs.iter().enumerate() {
            if let Some(c) = need.get_mut(v).filter(|c| **c > 0) {
                *c -= 1;
                m_set.insert(PartyId(i));
            }
        }
        let rest: Vec<PartyId> = (0..inputs.len()).map(PartyId).filter(|p| !m_set.contains(p)).collect();
        let f_set = rest[..f_hat].iter().copied().collect();
        let t_set = rest[f_hat..].iter().copied().collect();
        Self::new(inputs, t, f_hat, f_set, t_set, m_set, v_f)
    }

    /// Sets `u` and `U = {p ∈ M | v_p = u}`.
    pub fn with_u(mut self, u: Value) -> Result<Self> {
        self.u_set = self.m_set.iter().copied().filter(|p| self.inputs[p.0] == u).collect();
        self.u = Some(u);
        self.validate()?;
        Ok(self)
    }

    pub fn with_w(mut self, w: Value) -> Result<Self> {
        self.w = Some(w);
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn vin(&self) -> InputMultiset {
        InputMultiset::new(self.inputs.clone())
    }

    /// Inputs of `M`.
    pub fn m_values(&self) -> InputMultiset {
        InputMultiset::new(self.m_set.iter().map(|p| self.inputs[p.0].clone()))
    }

    pub fn m_minus_u(&self) -> PartySet {
        self.m_set.difference(&self.u_set).copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let SystemParams { n, t, .. } = self.params;
        self.params.require_optimal_resilience()?;
        if self.f_hat == 0 || self.f_hat > t {
            return bad(format!("need 0 < f_hat <= t, got {}", self.f_hat));
        }
        if self.f_set.len() != self.f_hat || self.t_set.len() != t {
            return bad(format!("|F| = {} and |T| = {} must be f_hat = {} and t = {t}", self.f_set.len(), self.t_set.len(), self.f_hat));
        }
        let all: Vec<PartyId> = self.f_set.iter().chain(&self.t_set).chain(&self.m_set).copied().collect();
        if all.len() != n || all.iter().collect::<BTreeSet<_>>().len() != n || all.iter().any(|p| p.0 >= n) {
            return bad("F, T and M must partition the parties".into());
        }
        let vin = self.vin();
        if qv_guarantee_branch(&vin, &self.params) {
            return bad(format!("max_mult({vin}) - f_hat >= 2t+1"));
        }
        let m = self.m_values();
        if m.len() != n - t - self.f_hat || m.max_mult()? > t {
            return bad(format!("inputs of M {m} are not a balanced submultiset"));
        }
        if vin.contains(&self.v_f) {
            return bad(format!("v_f = {} is an input", self.v_f));
        }
        if !self.u_set.is_subset(&self.m_set) || self.u_set.len() > t {
            return bad("U must be a subset of M of size at most t".into());
        }
        if let Some(u) = &self.u {
            if !m.contains(u) {
                return bad(format!("u = {u} is not an input of M"));
            }
            if self.u_set.iter().any(|p| self.inputs[p.0] != *u) {
                return bad("U must hold u".into());
            }
        }
        if let Some(w) = &self.w {
            if m.contains(w) || *w == self.v_f {
                return bad(format!("w = {w} must lie outside M's inputs and differ from v_f"));
            }
        }
        Ok(())
    }
}

/// JSON scenario parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub kind: ScenarioKind,
    pub n: usize,
    pub t: usize,
    pub f_hat: usize,
    pub vin: Vec<Value>,
    #[serde(rename = "F", default)]
    pub f_set: Option<Vec<usize>>,
    #[serde(rename = "T", default)]
    pub t_set: Option<Vec<usize>>,
    #[serde(rename = "M", default)]
    pub m_set: Option<Vec<usize>>,
    #[serde(rename = "U", default)]
    pub u_set: Option<Vec<usize>>,
    pub v_f: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

impl ScenarioFile {
    /// Party sets are derived when `F`, `T` and `M` are all absent. `u` may
    /// be given directly or through `U`.
    pub fn to_params(&self) -> Result<ScenarioParams> {
        if self.vin.len() != self.n {
            return Err(Error::InvalidParams(format!("{} inputs for n = {}", self.vin.len(), self.n)));
        }
        let mut sp = match (&self.f_set, &self.t_set, &self.m_set) {
            (None, None, None) => ScenarioParams::derive(self.vin.clone(), self.t, self.f_hat, self.v_f.clone())?,
            (Some(f), Some(t), Some(m)) => ScenarioParams::new(
                self.vin.clone(),
                self.t,
                self.f_hat,
                set(f.iter().copied()),
                set(t.iter().copied()),
                set(m.iter().copied()),
                self.v_f.clone(),
            )?,
            _ => return Err(Error::InvalidParams("give all of F, T and M or none".into())),
        };
        let u = match (&self.u, &self.u_set) {
            (Some(u), _) => Some(u.clone()),
            (None, Some(us)) => {
                let held: BTreeSet<&Value> = us.iter().filter_map(|i| self.vin.get(*i)).collect();
                match held.into_iter().collect::<Vec<_>>()[..] {
                    [u] => Some(u.clone()),
                    _ => return Err(Error::InvalidParams("U must hold a single value".into())),
                }
            }
            (None, None) => None,
        };
        if let Some(u) = u {
            sp = sp.with_u(u)?;
            if let Some(us) = &self.u_set {
                if set(us.iter().copied()) != sp.u_set {
                    return Err(Error::InvalidParams(format!("U must be the holders of u in M: {:?}", sp.u_set)));
                }
            }
        }
        if let Some(w) = &self.w {
            sp = sp.with_w(w.clone())?;
        }
        Ok(sp)
    }
}

/// Smallest input value other than `excluded`.
fn replacement(inputs: &[Value], excluded: &Value) -> Result<Value> {
    InputMultiset::new(inputs.iter().cloned())
        .distinct()
        .into_iter()
        .find(|v| v != excluded)
        .ok_or_else(|| Error::InvalidParams(format!("no input value other than {excluded}")))
}

/// Everything needed to build one scenario; fields are public so callers
/// can derive variants.
#[derive(Clone)]
pub struct ScenarioSetup {
    pub kind: ScenarioKind,
    pub protocol: Arc<dyn Protocol>,
    pub inputs: Vec<Value>,
    pub corrupted: PartySet,
    pub budget: usize,
    pub behavior: Arc<dyn ByzantineBehavior>,
    pub scheduler: PriorityScheduler,
    /// Number of corrupted parties the construction prescribes.
    pub f: usize,
}

impl fmt::Debug for ScenarioSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioSetup")
            .field("kind", &self.kind)
            .field("inputs", &self.inputs)
            .field("corrupted", &self.corrupted)
            .field("scheduler", &self.scheduler)
            .finish_non_exhaustive()
    }
}

impl ScenarioSetup {
    pub fn strategy(&self) -> AdversaryStrategy {
        AdversaryStrategy {
            name: self.kind.to_string(),
            budget: self.budget,
            corruption: CorruptionPolicy::fixed(self.corrupted.clone()),
            observability: crate::adversary::Observability::Weak,
            scheduler: Arc::new(self.scheduler.clone()),
            behavior: self.behavior.clone(),
        }
    }

    pub fn initial(&self) -> Configuration {
        Configuration::initial(&self.inputs, self.protocol.as_ref())
    }

    pub fn build(&self, depth: usize) -> Result<ScenarioRun> {
        let ensemble = build_ensemble(self.protocol.clone(), &self.strategy(), self.initial(), depth)?;
        Ok(ScenarioRun {
            kind: self.kind,
            effective_inputs: InputMultiset::new(self.inputs.clone()),
            f: self.f,
            ensemble,
        })
    }
}

/// Prepares scenario `kind`. `M ∪ F` traffic is delivered as soon as it is
/// pending (FIFO per link, then by sender), parties of `M ∪ F` step in index
/// order, `T` never moves, messages to parties that already decided stay
/// pending, and the run ends once the watched parties have decided.
pub fn scenario_setup(kind: ScenarioKind, sp: &ScenarioParams, protocol: Arc<dyn Protocol>) -> Result<ScenarioSetup> {
    sp.validate()?;
    let t = sp.params.t;
    let active: PartySet = sp.m_set.union(&sp.f_set).copied().collect();
    let mut inputs = sp.inputs.clone();
    let with_bogus = |inputs: &mut Vec<Value>| {
        for p in &sp.f_set {
            inputs[p.0] = sp.v_f.clone();
        }
    };
    let (corrupted, behavior, watched, f): (PartySet, Arc<dyn ByzantineBehavior>, PartySet, usize) = match kind {
        ScenarioKind::E1 => (sp.f_set.clone(), Arc::new(Mimic::all(sp.v_f.clone())), sp.m_set.clone(), sp.f_hat),
        ScenarioKind::E2 => {
            with_bogus(&mut inputs);
            (sp.t_set.clone(), Arc::new(Silent), sp.m_set.clone(), t)
        }
        ScenarioKind::E3 => {
            let u = sp.u.clone().ok_or_else(|| Error::InvalidParams("E3 needs u".into()))?;
            let v_prime = replacement(&sp.inputs, &u)?;
            with_bogus(&mut inputs);
            for v in inputs.iter_mut().filter(|v| **v == u) {
                *v = v_prime.clone();
            }
            (sp.u_set.clone(), Arc::new(Mimic::all(u)), sp.m_minus_u(), sp.u_set.len())
        }
        ScenarioKind::E4 => {
            let w = sp.w.clone().ok_or_else(|| Error::InvalidParams("E4 needs w".into()))?;
            let v = replacement(&sp.inputs, &w)?;
            with_bogus(&mut inputs);
            for x in inputs.iter_mut().filter(|x| **x == w) {
                *x = v.clone();
            }
            (PartySet::new(), Arc::new(Silent), sp.m_set.clone(), 0)
        }
    };
    let scheduler = PriorityScheduler {
        order: active.iter().copied().collect(),
        deliver_within: Some(active),
        held_senders: sp.t_set.clone(),
        hold_to_decided: true,
        stop: StopRule::Decided(watched),
    };
    Ok(ScenarioSetup {
        kind,
        protocol,
        inputs,
        corrupted,
        budget: t,
        behavior,
        scheduler,
        f,
    })
}

/// A built scenario with its metadata.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub kind: ScenarioKind,
    pub ensemble: Ensemble,
    pub effective_inputs: InputMultiset,
    /// Prescribed number of corrupted parties.
    pub f: usize,
}

pub fn build_scenario(kind: ScenarioKind, sp: &ScenarioParams, protocol: Arc<dyn Protocol>, depth: usize) -> Result<ScenarioRun> {
    scenario_setup(kind, sp, protocol)?.build(depth)
}

/// Parties that must not tell `E1` from `other` apart.
pub fn required_parties(other: ScenarioKind, sp: &ScenarioParams) -> PartySet {
    match other {
        ScenarioKind::E3 => sp.m_minus_u(),
        _ => sp.m_set.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueProbability {
    pub value: Value,
    #[serde(with = "serde_fraction")]
    pub left: Ratio,
    #[serde(with = "serde_fraction")]
    pub right: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyPairReport {
    pub party: PartyId,
    pub indistinguishable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Divergence>,
    pub decisions: Vec<ValueProbability>,
    pub decisions_equal: bool,
    /// Every action in either local ensemble has the same probability in
    /// both.
    pub actions_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub left: ScenarioKind,
    pub right: ScenarioKind,
    pub parties: Vec<PartyPairReport>,
    pub pass: bool,
}

/// Actions ending some local state of either ensemble.
fn actions(a: &LocalEnsemble, b: &LocalEnsemble) -> BTreeSet<LocalEvent> {
    a.nodes
        .iter()
        .chain(&b.nodes)
        .filter_map(|n| n.state.last_event().cloned())
        .collect()
}

/// Compares two ensembles from the viewpoint of each listed party.
pub fn compare_for(left: &Ensemble, right: &Ensemble, parties: &PartySet) -> Result<Vec<PartyPairReport>> {
    parties
        .iter()
        .map(|&p| {
            let la = build_local_ensemble(left, p)?;
            let lb = build_local_ensemble(right, p)?;
            let witness = divergence_witness(&la, &lb)?;
            let mut values: BTreeSet<Value> = left.decided_values(p).into_iter().collect();
            values.extend(right.decided_values(p));
            let decisions: Vec<ValueProbability> = values
                .into_iter()
                .map(|value| ValueProbability {
                    left: left.decision_probability(p, &value).lower,
                    right: right.decision_probability(p, &value).lower,
                    value,
                })
                .collect();
            let decisions_equal = decisions.iter().all(|d| d.left == d.right);
            let actions_equal = actions(&la, &lb)
                .iter()
                .all(|act| action_probability_local(&la, act) == action_probability_local(&lb, act));
            Ok(PartyPairReport {
                party: p,
                indistinguishable: witness.is_none(),
                witness,
                decisions,
                decisions_equal,
                actions_equal,
            })
        })
        .collect()
}

/// Checks `E1` against `E2`, `E3` or `E4` for the parties the construction
/// requires.
pub fn verify_scenario_pair(e1: &ScenarioRun, other: &ScenarioRun, sp: &ScenarioParams) -> Result<PairReport> {
    if e1.kind != ScenarioKind::E1 || other.kind == ScenarioKind::E1 {
        return Err(Error::InvalidParams(format!("expected E1 and another scenario, got {} and {}", e1.kind, other.kind)));
    }
    let parties = compare_for(&e1.ensemble, &other.ensemble, &required_parties(other.kind, sp))?;
    let pass = parties.iter().all(|p| p.indistinguishable && p.decisions_equal && p.actions_equal);
    Ok(PairReport {
        left: e1.kind,
        right: other.kind,
        parties,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PointOutcome {
    /// The guaranteed branch applies; nothing to improve.
    Skipped,
    /// Agreement or termination failed in E1.
    Precondition { reason: String },
    NoImprovement,
    /// Some `u` of `M`'s inputs beats its fair share; E3 then decides
    /// inside its inputs with probability below its bound.
    FirstCase {
        u: Value,
        #[serde(with = "serde_fraction")]
        p1: Ratio,
        #[serde(with = "serde_fraction")]
        share: Ratio,
        #[serde(with = "serde_fraction")]
        measured: Ratio,
        #[serde(with = "serde_fraction")]
        bound: Ratio,
        violated: bool,
    },
    /// Some `w` outside `M`'s inputs and `v_f` is decided with positive
    /// probability; E4 has no corruptions yet decides outside its inputs.
    SecondCase {
        w: Value,
        #[serde(with = "serde_fraction")]
        p1: Ratio,
        #[serde(with = "serde_fraction")]
        measured: Ratio,
        #[serde(with = "serde_fraction")]
        bound: Ratio,
        violated: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub inputs: Vec<Value>,
    pub f_hat: usize,
    /// `P¹(v)` for every value decided in E1 by the first party of `M`.
    pub p1: Vec<(Value, String)>,
    #[serde(flatten)]
    pub outcome: PointOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsifyReport {
    pub protocol: String,
    pub points: Vec<GridPoint>,
}

impl FalsifyReport {
    pub fn violations(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter(|p| {
            matches!(
                p.outcome,
                PointOutcome::FirstCase { violated: true, .. } | PointOutcome::SecondCase { violated: true, .. }
            )
        })
    }

    pub fn no_strict_improvement(&self) -> bool {
        self.points
            .iter()
            .all(|p| matches!(p.outcome, PointOutcome::Skipped | PointOutcome::NoImprovement))
    }
}

/// The bogus value used by the harness.
pub fn harness_bogus() -> Value {
    Value::sym("v_f")
}

/// Probability that `party` decides a value of `values`.
fn mass_in(ens: &Ensemble, party: PartyId, values: &InputMultiset) -> Ratio {
    values.distinct().iter().map(|v| ens.decision_probability(party, v).lower).sum()
}

/// Evaluates one grid point.
pub fn falsify_point(protocol: Arc<dyn Protocol>, inputs: Vec<Value>, t: usize, f_hat: usize, depth: usize) -> Result<GridPoint> {
    let params = SystemParams::new(inputs.len(), t, f_hat)?;
    let point = |p1, outcome| GridPoint {
        inputs: inputs.clone(),
        f_hat,
        p1,
        outcome,
    };
    if qv_guarantee_branch(&InputMultiset::new(inputs.clone()), &params) {
        return Ok(point(Vec::new(), PointOutcome::Skipped));
    }
    let sp = ScenarioParams::derive(inputs.clone(), t, f_hat, harness_bogus())?;
    let e1 = build_scenario(ScenarioKind::E1, &sp, protocol.clone(), depth)?;
    let ens = &e1.ensemble;
    ens.require_complete()?;
    let m: Vec<PartyId> = sp.m_set.iter().copied().collect();
    let termination = ens.check_probabilistic_termination(&m);
    if termination.holds != Some(true) {
        return Ok(point(
            Vec::new(),
            PointOutcome::Precondition {
                reason: format!("parties of M decide with probability {}", termination.probability),
            },
        ));
    }
    if let Some(node) = ens.agreement_violation(&ens.honest_parties()) {
        return Ok(point(
            Vec::new(),
            PointOutcome::Precondition {
                reason: format!("honest parties disagree at {node}"),
            },
        ));
    }
    let focus = m[0];
    let p1: Vec<(Value, Ratio)> = ens
        .decided_values(focus)
        .into_iter()
        .map(|v| {
            let p = ens.decision_probability(focus, &v).lower;
            (v, p)
        })
        .collect();
    let p1_strings = p1.iter().map(|(v, p)| (v.clone(), p.to_string())).collect();
    let n_minus_t = Ratio::from_integer((params.n - t).into());
    let m_values = sp.m_values();
    let p1_of = |v: &Value| p1.iter().find(|(w, _)| w == v).map_or(Ratio::zero(), |(_, p)| p.clone());

    let first = m_values.distinct().into_iter().find_map(|u| {
        let share = Ratio::from_integer(m_values.mult(&u).into()) / &n_minus_t;
        let p = p1_of(&u);
        (p > share).then_some((u, p, share))
    });
    if let Some((u, p, share)) = first {
        let sp3 = sp.clone().with_u(u.clone())?;
        let e3 = build_scenario(ScenarioKind::E3, &sp3, protocol, depth)?;
        e3.ensemble.require_complete()?;
        let witness = *sp3.m_minus_u().iter().next().ok_or_else(|| Error::InvalidParams("M equals U".into()))?;
        let measured = mass_in(&e3.ensemble, witness, &e3.effective_inputs);
        let bound = Ratio::one() - Ratio::from_integer(e3.f.into()) / &n_minus_t;
        return Ok(point(
            p1_strings,
            PointOutcome::FirstCase {
                u,
                p1: p,
                share,
                violated: measured < bound,
                measured,
                bound,
            },
        ));
    }

    let second = p1
        .iter()
        .find(|(w, p)| !w.is_bot() && !m_values.contains(w) && *w != sp.v_f && !p.is_zero())
        .cloned();
    if let Some((w, p)) = second {
        let sp4 = sp.clone().with_w(w.clone())?;
        let e4 = build_scenario(ScenarioKind::E4, &sp4, protocol, depth)?;
        e4.ensemble.require_complete()?;
        let measured = mass_in(&e4.ensemble, focus, &e4.effective_inputs);
        let bound = Ratio::one();
        return Ok(point(
            p1_strings,
            PointOutcome::SecondCase {
                w,
                p1: p,
                violated: measured < bound,
                measured,
                bound,
            },
        ));
    }
    Ok(point(p1_strings, PointOutcome::NoImprovement))
}

/// Every multiset of size `n` over `alphabet`, as a sorted input vector.
pub fn input_grid(alphabet: &[Value], n: usize) -> Vec<Vec<Value>> {
    fn go(alphabet: &[Value], from: usize, left: usize, cur: &mut Vec<Value>, out: &mut Vec<Vec<Value>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in from..alphabet.len() {
            cur.push(alphabet[k].clone());
            go(alphabet, k, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut sorted = alphabet.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = Vec::new();
    go(&sorted, 0, n, &mut Vec::new(), &mut out);
    out
}

/// Runs `falsify_point` over every input multiset over `alphabet` and every
/// `f_hat` in `f_values`.
pub fn falsification_harness(
    protocol: Arc<dyn Protocol>,
    params: SystemParams,
    alphabet: &[Value],
    f_values: &[usize],
    depth: usize,
) -> Result<FalsifyReport> {
    params.require_optimal_resilience()?;
    let mut points = Vec::new();
    for inputs in input_grid(alphabet, params.n) {
        for &f_hat in f_values {
            points.push(falsify_point(protocol.clone(), inputs.clone(), params.t, f_hat, depth)?);
        }
    }
    Ok(FalsifyReport {
        protocol: protocol.name().to_string(),
        points,
    })
}
