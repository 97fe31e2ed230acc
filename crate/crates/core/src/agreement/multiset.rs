//! Input multisets and balanced submultisets.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::value::Value;

/// A multiset of values, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputMultiset {
    values: Vec<Value>,
}

impl InputMultiset {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Self {
        let mut values: Vec<Value> = values.into_iter().collect();
        values.sort();
        Self { values }
    }

    pub fn parse(items: &[&str]) -> Self {
        Self::new(items.iter().map(|s| Value::parse(s)))
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.values.binary_search(v).is_ok()
    }

    pub fn mult(&self, v: &Value) -> usize {
        mult(v, &self.values)
    }

    pub fn max_mult(&self) -> Result<usize> {
        max_mult(&self.values)
    }

    /// Values with their multiplicities, in canonical order.
    pub fn counts(&self) -> BTreeMap<&Value, usize> {
        let mut counts = BTreeMap::new();
        for v in &self.values {
            *counts.entry(v).or_insert(0) += 1;
        }
        counts
    }

    pub fn distinct(&self) -> Vec<Value> {
        self.counts().into_keys().cloned().collect()
    }

    pub fn is_submultiset_of(&self, other: &InputMultiset) -> bool {
        let theirs = other.counts();
        self.counts().iter().all(|(v, c)| theirs.get(v).is_some_and(|d| d >= c))
    }
}

impl fmt::Display for InputMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.values.iter().map(Value::to_string).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

pub fn mult(v: &Value, m: &[Value]) -> usize {
    m.iter().filter(|w| *w == v).count()
}

pub fn max_mult(m: &[Value]) -> Result<usize> {
    m.iter()
        .map(|v| mult(v, m))
        .max()
        .ok_or_else(|| Error::Precondition("max_mult of an empty multiset".into()))
}

/// Whether `max_mult(vin) − f ≥ 2t + 1`.
#[allow(clippy::int_plus_one)]
pub fn qv_guarantee_branch(vin: &InputMultiset, params: &SystemParams) -> bool {
    let m = vin.max_mult().unwrap_or(0) as i64;
    m - params.f as i64 >= 2 * params.t as i64 + 1
}

/// A submultiset of size `n − t − f` in which no value occurs more than `t`
/// times. When every multiplicity is at most `t` it is the smallest
/// `n − t − f` values; otherwise `t` copies of the most frequent value
/// (smallest on ties) followed by the smallest `t − f + 1` other values.
pub fn find_balanced_submultiset(vin: &InputMultiset, params: &SystemParams) -> Result<InputMultiset> {
    let SystemParams { n, t, f } = *params;
    params.require_optimal_resilience()?;
    if vin.len() != n {
        return Err(Error::Precondition(format!("|vin| = {} but n = {n}", vin.len())));
    }
    if f == 0 || f > t {
        return Err(Error::Precondition(format!("need 0 < f <= t, got f = {f}, t = {t}")));
    }
    if qv_guarantee_branch(vin, params) {
        return Err(Error::Precondition(format!("max_mult(vin) - f >= 2t+1 for {vin}")));
    }
    let size = n - t - f;
    let top = vin.max_mult()?;
    if top <= t {
        return Ok(InputMultiset::new(vin.values()[..size].iter().cloned()));
    }
    let v = vin
        .counts()
        .into_iter()
        .find(|(_, c)| *c == top)
        .map(|(v, _)| v.clone())
        .expect("nonempty");
    let others: Vec<Value> = vin.values().iter().filter(|w| **w != v).take(t - f + 1).cloned().collect();
    let m = InputMultiset::new(std::iter::repeat_n(v, t).chain(others));
    debug_assert_eq!(m.len(), size);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(items: &[&str]) -> InputMultiset {
        InputMultiset::parse(items)
    }

    /// Every size-`k` submultiset, by choosing index subsets.
    fn submultisets(vin: &InputMultiset, k: usize) -> Vec<InputMultiset> {
        let n = vin.len();
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| InputMultiset::new((0..n).filter(|i| mask >> i & 1 == 1).map(|i| vin.values()[i].clone())))
            .collect()
    }

    #[test]
    fn multiplicities() {
        assert_eq!(ms(&["a", "a", "b", "c"]).mult(&Value::sym("a")), 2);
        assert_eq!(ms(&["a", "a", "b", "c"]).mult(&Value::sym("d")), 0);
        assert_eq!(ms(&["a", "a", "a", "a", "b", "c", "d"]).mult(&Value::sym("a")), 4);
        assert_eq!(ms(&["a", "a", "b", "c"]).max_mult().unwrap(), 2);
        assert_eq!(ms(&["a", "b", "c", "d"]).max_mult().unwrap(), 1);
        assert_eq!(ms(&["a", "a", "a", "a"]).max_mult().unwrap(), 4);
        assert!(ms(&[]).max_mult().is_err());
    }

    #[test]
    fn guarantee_branch_examples() {
        let p = |f| SystemParams::byzantine(1, f).unwrap();
        assert!(qv_guarantee_branch(&ms(&["a", "a", "a", "a"]), &p(0)));
        assert!(qv_guarantee_branch(&ms(&["a", "a", "a", "a"]), &p(1)));
        assert!(!qv_guarantee_branch(&ms(&["a", "a", "b", "c"]), &p(1)));
        assert!(qv_guarantee_branch(&ms(&["a", "a", "a", "b"]), &p(0)));
    }

    fn check(vin: &InputMultiset, params: SystemParams) {
        let m = find_balanced_submultiset(vin, &params).unwrap();
        let size = params.n - params.t - params.f;
        assert_eq!(m.len(), size);
        assert!(m.max_mult().unwrap() <= params.t);
        assert!(m.is_submultiset_of(vin));
        assert!(submultisets(vin, size).iter().any(|s| s.max_mult().unwrap() <= params.t));
    }

    #[test]
    fn balanced_examples() {
        let p41 = SystemParams::byzantine(1, 1).unwrap();
        check(&ms(&["a", "a", "b", "c"]), p41);
        assert_eq!(find_balanced_submultiset(&ms(&["a", "a", "b", "c"]), &p41).unwrap(), ms(&["a", "b"]));
        check(&ms(&["a", "b", "c", "d"]), p41);
        let p72 = SystemParams::byzantine(2, 1).unwrap();
        let vin = ms(&["a", "a", "a", "a", "b", "c", "d"]);
        check(&vin, p72);
        assert_eq!(find_balanced_submultiset(&vin, &p72).unwrap(), ms(&["a", "a", "b", "c"]));
    }

    #[test]
    fn balanced_preconditions() {
        let p = SystemParams::byzantine(1, 1).unwrap();
        assert!(find_balanced_submultiset(&ms(&["a", "a", "a", "a"]), &p).is_err());
        let p0 = SystemParams::byzantine(1, 0).unwrap();
        assert!(find_balanced_submultiset(&ms(&["a", "a", "b", "c"]), &p0).is_err());
        assert!(find_balanced_submultiset(&ms(&["a", "b", "c"]), &p).is_err());
        let off = SystemParams::new(5, 1, 1).unwrap();
        assert!(find_balanced_submultiset(&ms(&["a", "b", "c", "d", "e"]), &off).is_err());
    }

    #[test]
    fn ties_pick_the_smallest_value() {
        let p = SystemParams::byzantine(2, 2).unwrap();
        let vin = ms(&["a", "a", "a", "b", "b", "b", "c"]);
        let m = find_balanced_submultiset(&vin, &p).unwrap();
        assert_eq!(m, ms(&["a", "a", "b"]));
    }
}
