//! Running the composed agreement model under Byzantine strategies.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::adversary::{AdversaryStrategy, CorruptionPolicy, Mimic, PriorityScheduler, Silent, StopRule};
use crate::ensemble::{build_ensemble, Ensemble};
use crate::error::Result;
use crate::model::{Configuration, PartyId, Protocol, SystemParams};
use crate::protocols::ComposedToy;
use crate::value::Value;

/// Depth that lets every shipped strategy finish on four parties with the
/// default number of explicit rounds.
pub const DEFAULT_DEPTH: usize = 128;

/// Builds the ensemble of the composed model for the given inputs (one per
/// party, `n = 3t + 1`).
pub fn run_composed_protocol(inputs: &[Value], strategy: &AdversaryStrategy, depth: usize) -> Result<Ensemble> {
    run_composed_with(ComposedToy::new(inputs.len(), 0), inputs, strategy, depth)
}

/// As `run_composed_protocol` with an explicit protocol instance; its `t`
/// is taken from `strategy.budget`.
pub fn run_composed_with(protocol: ComposedToy, inputs: &[Value], strategy: &AdversaryStrategy, depth: usize) -> Result<Ensemble> {
    let params = SystemParams::byzantine(strategy.budget, 0)?;
    if params.n != inputs.len() {
        params.require_optimal_resilience()?;
        return Err(crate::error::Error::InvalidParams(format!(
            "{} inputs for n = {} (t = {})",
            inputs.len(),
            params.n,
            params.t
        )));
    }
    let protocol: Arc<dyn Protocol> = Arc::new(ComposedToy::with_rounds(params.n, params.t, protocol.explicit_rounds));
    let initial = Configuration::initial(inputs, protocol.as_ref());
    build_ensemble(protocol, strategy, initial, depth)
}

/// Byzantine strategy used throughout the validity suite: `corrupted`
/// parties run the protocol with input `bogus`, all messages are delivered
/// in canonical order as soon as they are sent, and parties step in
/// `order` until every honest party has decided.
pub fn mimic_strategy(t: usize, corrupted: BTreeSet<PartyId>, order: Vec<PartyId>, bogus: Value) -> AdversaryStrategy {
    let name = format!("mimic{:?}-order{:?}", corrupted.iter().map(|p| p.0).collect::<Vec<_>>(), order.iter().map(|p| p.0).collect::<Vec<_>>());
    AdversaryStrategy::new(
        name,
        t,
        CorruptionPolicy::fixed(corrupted),
        PriorityScheduler::with_order(order).stop(StopRule::HonestDecided),
        Mimic::all(bogus),
    )
}

/// As `mimic_strategy`, but corrupted parties stay silent.
pub fn silent_strategy(t: usize, corrupted: BTreeSet<PartyId>, order: Vec<PartyId>) -> AdversaryStrategy {
    AdversaryStrategy::new(
        "silent",
        t,
        CorruptionPolicy::fixed(corrupted),
        PriorityScheduler::with_order(order).stop(StopRule::HonestDecided),
        Silent,
    )
}

/// No corruption; parties step by index.
pub fn failure_free(t: usize) -> AdversaryStrategy {
    let n = 3 * t + 1;
    AdversaryStrategy::new(
        "failure-free",
        t,
        CorruptionPolicy::none(),
        PriorityScheduler::by_index(n).stop(StopRule::HonestDecided),
        Silent,
    )
}
