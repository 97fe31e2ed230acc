use std::sync::Arc;

use ensemblelab::adversary::AdversaryStrategy;
use ensemblelab::agreement::{
    ams_decision_bound, find_balanced_submultiset, qv_guarantee_branch, ElectionModel, InputMultiset, XSpec,
};
use ensemblelab::ensemble::{build_ensemble, Ensemble, EventSpec};
use ensemblelab::local::{action_probability_local, build_local_ensemble};
use ensemblelab::model::{Configuration, PartyId, Protocol, SystemParams};
use ensemblelab::protocols::{CoinDemo, CoinRule};
use ensemblelab::rational::ratio;
use ensemblelab::{Ratio, Value};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rule() -> impl Strategy<Value = CoinRule> {
    prop_oneof![Just(CoinRule::Copy), Just(CoinRule::Or), Just(CoinRule::OrElseUndecided)]
}

fn biases() -> impl Strategy<Value = Vec<Ratio>> {
    prop::collection::vec((1i64..7, 2i64..8).prop_map(|(p, q)| ratio(p.min(q - 1), q)), 1..4)
}

fn coin(n: usize, biases: Vec<Ratio>, rule: CoinRule, depth: usize) -> Ensemble {
    let protocol: Arc<dyn Protocol> = Arc::new(CoinDemo::with_biases(n, biases, rule));
    let initial = Configuration::initial(&vec![Value::Bot; n], protocol.as_ref());
    build_ensemble(protocol, &AdversaryStrategy::benign(0), initial, depth).unwrap()
}

proptest! {
    #[test]
    fn leaf_mass_is_one(n in 1usize..3, b in biases(), r in rule()) {
        let ens = coin(n, b, r, 32);
        prop_assert!(ens.is_complete());
        prop_assert!(ens.leaf_mass().is_one());
    }

    #[test]
    fn first_hits_form_an_antichain(n in 1usize..3, b in biases(), r in rule()) {
        let ens = coin(n, b, r, 32);
        let event = EventSpec::decided_any(ens.protocol.clone());
        let hits = ens.first_hit_nodes(PartyId(0), &event);
        for x in &hits {
            for y in &hits {
                prop_assert!(x == y || !ens.is_ancestor(*x, *y));
            }
        }
    }

    #[test]
    fn decisions_partition_termination(b in biases(), r in rule()) {
        let ens = coin(1, b, r, 32);
        let total: Ratio = ens
            .decided_values(PartyId(0))
            .iter()
            .map(|v| ens.decision_probability(PartyId(0), v).lower)
            .sum();
        let term = ens.check_probabilistic_termination(&[PartyId(0)]);
        prop_assert_eq!(&total, &term.probability.lower);
        for v in ens.decided_values(PartyId(0)) {
            let p = ens.decision_probability(PartyId(0), &v).lower;
            let protocol = ens.protocol.clone();
            let not = EventSpec::new("other decision", move |_, s| protocol.decision(s).is_some_and(|d| d != v));
            prop_assert_eq!(p + ens.event_probability(PartyId(0), &not).lower, term.probability.lower.clone());
        }
    }

    #[test]
    fn intervals_narrow_with_depth(b in biases(), r in rule(), d in 0usize..4) {
        let shallow = coin(1, b.clone(), r, d);
        let deep = coin(1, b, r, d + 1);
        let event = EventSpec::decided_any(shallow.protocol.clone());
        let s = shallow.event_probability(PartyId(0), &event);
        let t = deep.event_probability(PartyId(0), &event);
        prop_assert!(s.lower <= t.lower && t.upper <= s.upper);
        prop_assert!(s.lower <= s.upper);
        prop_assert_eq!(&s.upper - &s.lower, shallow.completeness.residual());
    }

    #[test]
    fn local_action_probability_matches_first_hits(n in 1usize..3, b in biases(), r in rule()) {
        let ens = coin(n, b, r, 32);
        for p in 0..n {
            let lens = build_local_ensemble(&ens, PartyId(p)).unwrap();
            prop_assert!(lens.len() <= ens.len());
            for node in &lens.nodes {
                if let Some(event) = node.state.last_event() {
                    let global = ens.event_probability(PartyId(p), &EventSpec::performed(event.clone()));
                    prop_assert_eq!(Some(&action_probability_local(&lens, event)), global.value());
                }
            }
        }
    }

    #[test]
    fn balanced_submultiset_exists(t in 1usize..4, raw in prop::collection::vec(0u8..5, 10), f_pick in 0usize..3) {
        let n = 3 * t + 1;
        let f = 1 + f_pick % t;
        let vin = InputMultiset::new(raw.iter().cycle().take(n).map(|k| Value::Int(i64::from(*k))));
        let params = SystemParams::new(n, t, f).unwrap();
        prop_assume!(!qv_guarantee_branch(&vin, &params));
        let m = find_balanced_submultiset(&vin, &params).unwrap();
        prop_assert_eq!(m.len(), n - t - f);
        prop_assert!(m.is_submultiset_of(&vin));
        prop_assert!(m.max_mult().unwrap() <= t);
    }

    #[test]
    fn election_bound_holds(t in 1usize..4, f_pick in 0usize..3, prefix in prop::collection::vec(0usize..4, 0..5), tail in 0usize..4) {
        let n = 3 * t + 1;
        let f = 1 + f_pick % t;
        let x = |k: usize| n - t + k % (t + 1);
        let model = ElectionModel::new(n, t, f, XSpec { prefix: prefix.iter().map(|k| x(*k)).collect(), tail: x(tail) }).unwrap();
        let q = ams_decision_bound(&model).unwrap();
        prop_assert!(q > Ratio::zero());
        prop_assert!(q <= model.bound());
        prop_assert_eq!(q == model.bound(), model.is_minimal());
    }
}
