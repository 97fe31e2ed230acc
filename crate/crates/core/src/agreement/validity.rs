//! Qualitative and weak validity verdicts on ensembles.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::agreement::multiset::{qv_guarantee_branch, InputMultiset};
use crate::ensemble::{Ensemble, EventSpec, NodeId};
use crate::error::{Error, Result};
use crate::model::PartyId;
use crate::rational::{serde_fraction, Ratio};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Guaranteed,
    Probabilistic,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Guaranteed => "guaranteed",
            Branch::Probabilistic => "probabilistic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QvVerdict {
    pub branch: Branch,
    /// `max_mult(vin) − f`.
    pub condition: i64,
    pub f: usize,
    #[serde(with = "serde_fraction")]
    pub bound: Ratio,
    #[serde(with = "serde_fraction")]
    pub measured: Ratio,
    pub pass: bool,
    /// Honest party attaining the measured minimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_party: Option<PartyId>,
    /// A node where an honest party holds a decision outside the inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside_decision: Option<NodeId>,
}

impl fmt::Display for QvVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} branch (max_mult - f = {}, f = {}): measured {} vs bound {} -> {}",
            self.branch,
            self.condition,
            self.f,
            self.measured,
            self.bound,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

fn honest_decision_outside(ens: &Ensemble, inside: impl Fn(&Value) -> bool + Send + Sync + 'static) -> Option<NodeId> {
    let protocol = ens.protocol.clone();
    let outside = EventSpec::new("decision outside", move |_, s| protocol.decision(s).is_some_and(|d| !inside(&d)));
    ens.honest_parties()
        .into_iter()
        .flat_map(|p| ens.first_hit_nodes(p, &outside))
        .min()
}

/// For each honest party that decides with positive probability, the
/// probability that it decides a value of `values`; the minimum is the
/// measured probability.
pub fn probability_in(ens: &Ensemble, values: &[Value]) -> Vec<(PartyId, Ratio)> {
    let any = EventSpec::decided_any(ens.protocol.clone());
    ens.honest_parties()
        .into_iter()
        .filter(|p| !ens.event_probability(*p, &any).lower.is_zero())
        .map(|p| {
            let mass: Ratio = values.iter().map(|v| ens.decision_probability(p, v).lower).sum();
            (p, mass)
        })
        .collect()
}

/// Checks the ensemble against the validity bound for its own `f`:
/// decisions must lie in `vin` when `max_mult(vin) − f ≥ 2t + 1`, and
/// otherwise lie in `vin` with probability at least `1 − f/(n − t)`.
pub fn check_qualitative_validity(ens: &Ensemble, vin: &InputMultiset) -> Result<QvVerdict> {
    ens.require_complete()?;
    let inputs = InputMultiset::new(ens.inputs());
    if &inputs != vin {
        return Err(Error::Precondition(format!("ensemble inputs {inputs} differ from {vin}")));
    }
    let params = ens.params;
    let condition = vin.max_mult()? as i64 - params.f as i64;
    let distinct = vin.distinct();
    let per_party = probability_in(ens, &distinct);
    let (worst_party, measured) = per_party
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1))
        .map_or((None, Ratio::one()), |(p, m)| (Some(*p), m.clone()));
    let inside = vin.clone();
    let outside_decision = honest_decision_outside(ens, move |d| inside.contains(d));
    let (branch, bound, pass) = if qv_guarantee_branch(vin, &params) {
        (Branch::Guaranteed, Ratio::one(), outside_decision.is_none())
    } else {
        let bound = Ratio::one() - Ratio::new(params.f.into(), (params.n - params.t).into());
        let pass = measured >= bound;
        (Branch::Probabilistic, bound, pass)
    };
    Ok(QvVerdict {
        branch,
        condition,
        f: params.f,
        bound,
        measured,
        pass,
        worst_party,
        outside_decision,
    })
}

/// The input shared by at least `2t + 1` honest parties, if any.
pub fn honest_majority_input(ens: &Ensemble) -> Option<Value> {
    let inputs = ens.inputs();
    let honest = InputMultiset::new(ens.honest_parties().into_iter().map(|p| inputs[p.0].clone()));
    let shared = honest
        .counts()
        .into_iter()
        .find(|(_, c)| *c > 2 * ens.params.t)
        .map(|(v, _)| v.clone());
    shared
}

/// When `2t + 1` honest parties share input `v`, every honest decision on
/// every path must be `v`.
pub fn check_weak_validity(ens: &Ensemble, vin: &InputMultiset) -> Result<bool> {
    ens.require_complete()?;
    let inputs = InputMultiset::new(ens.inputs());
    if &inputs != vin {
        return Err(Error::Precondition(format!("ensemble inputs {inputs} differ from {vin}")));
    }
    let v = honest_majority_input(ens)
        .ok_or_else(|| Error::Precondition("no input is shared by 2t+1 honest parties".into()))?;
    Ok(honest_decision_outside(ens, move |d| *d == v).is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::adversary::{AdversaryStrategy, CorruptionPolicy, Mimic, PriorityScheduler, StopRule};
    use crate::ensemble::build_ensemble;
    use crate::model::{Configuration, Protocol};
    use crate::protocols::MockFixed;
    use crate::rational::ratio;

    fn fixed(value: &str, inputs: &[&str], corrupt: &[usize]) -> Ensemble {
        let protocol: Arc<dyn Protocol> = Arc::new(MockFixed::new(inputs.len(), Value::sym(value)));
        let inputs: Vec<Value> = inputs.iter().map(|v| Value::sym(*v)).collect();
        let initial = Configuration::initial(&inputs, protocol.as_ref());
        let strategy = AdversaryStrategy::new(
            "fixed",
            1,
            CorruptionPolicy::fixed(corrupt.iter().map(|i| PartyId(*i)).collect()),
            PriorityScheduler::by_index(inputs.len()).stop(StopRule::HonestDecided),
            Mimic::honest_like(),
        );
        build_ensemble(protocol, &strategy, initial, 16).unwrap()
    }

    #[test]
    fn failure_free_run_measures_one() {
        let ens = fixed("a", &["a", "b", "a", "c"], &[]);
        let v = check_qualitative_validity(&ens, &InputMultiset::parse(&["a", "b", "a", "c"])).unwrap();
        assert_eq!(v.branch, Branch::Probabilistic);
        assert_eq!(v.measured, Ratio::one());
        assert_eq!(v.bound, Ratio::one());
        assert!(v.pass);
    }

    #[test]
    fn outside_decision_fails_guaranteed_branch() {
        let ens = fixed("z", &["a", "a", "a", "a"], &[3]);
        let v = check_qualitative_validity(&ens, &InputMultiset::parse(&["a", "a", "a", "a"])).unwrap();
        assert_eq!(v.branch, Branch::Guaranteed);
        assert_eq!(v.condition, 3);
        assert!(!v.pass);
        assert!(v.outside_decision.is_some());
        assert_eq!(v.measured, Ratio::zero());
    }

    #[test]
    fn probabilistic_bound_uses_ensemble_f() {
        let ens = fixed("z", &["a", "b", "a", "c"], &[3]);
        let v = check_qualitative_validity(&ens, &InputMultiset::parse(&["a", "b", "a", "c"])).unwrap();
        assert_eq!(v.f, 1);
        assert_eq!(v.bound, ratio(2, 3));
        assert!(!v.pass);
    }

    #[test]
    fn input_mismatch_is_rejected() {
        let ens = fixed("a", &["a", "a", "a", "a"], &[]);
        assert!(check_qualitative_validity(&ens, &InputMultiset::parse(&["a", "a", "a", "b"])).is_err());
    }

    #[test]
    fn weak_validity_examples() {
        let vin = InputMultiset::parse(&["a", "a", "a", "b"]);
        assert!(check_weak_validity(&fixed("a", &["a", "a", "a", "b"], &[]), &vin).unwrap());
        assert!(!check_weak_validity(&fixed("b", &["a", "a", "a", "b"], &[]), &vin).unwrap());
        let mixed = InputMultiset::parse(&["a", "a", "b", "c"]);
        assert!(matches!(
            check_weak_validity(&fixed("a", &["a", "a", "b", "c"], &[]), &mixed),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn verdict_json_shape() {
        let ens = fixed("a", &["a", "a", "a", "a"], &[]);
        let v = check_qualitative_validity(&ens, &InputMultiset::parse(&["a", "a", "a", "a"])).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["branch"], "guaranteed");
        assert_eq!(json["bound"], "1/1");
        assert_eq!(json["measured"], "1/1");
        assert_eq!(json["pass"], true);
    }
}
