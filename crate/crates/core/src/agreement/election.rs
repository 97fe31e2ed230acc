//! The election-round model: the probability that repeated uniform
//! elections first pick a broadcast completed only by corrupted parties.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Ratio;

/// Per-round counts `x_1, x_2, …` of completed broadcasts, given as a
/// finite prefix followed by a constant tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionModel {
    pub n: usize,
    pub t: usize,
    pub f: usize,
    pub prefix: Vec<usize>,
    pub tail: usize,
}

/// `prefix;tail`, the prefix separated by commas or spaces and possibly
/// empty, e.g. `;3` or `4,3;3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XSpec {
    pub prefix: Vec<usize>,
    pub tail: usize,
}

impl FromStr for XSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("bad x-spec {s:?}, expected \"prefix;tail\""));
        let (prefix, tail) = s.split_once(';').ok_or_else(bad)?;
        let prefix = prefix
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<Vec<usize>>>()?;
        let tail = tail.trim().parse().map_err(|_| bad())?;
        Ok(Self { prefix, tail })
    }
}

impl fmt::Display for XSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix: Vec<String> = self.prefix.iter().map(usize::to_string).collect();
        write!(f, "{};{}", prefix.join(","), self.tail)
    }
}

impl ElectionModel {
    pub fn new(n: usize, t: usize, f: usize, x: XSpec) -> Result<Self> {
        let model = Self {
            n,
            t,
            f,
            prefix: x.prefix,
            tail: x.tail,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn constant(n: usize, t: usize, f: usize, x: usize) -> Result<Self> {
        Self::new(n, t, f, XSpec { prefix: Vec::new(), tail: x })
    }

    pub fn validate(&self) -> Result<()> {
        if self.t >= self.n || self.f > self.t {
            return Err(Error::InvalidParams(format!("need f <= t < n, got n={} t={} f={}", self.n, self.t, self.f)));
        }
        let low = self.n - self.t;
        if let Some(x) = self.prefix.iter().chain([&self.tail]).find(|x| **x < low || **x > self.n) {
            return Err(Error::InvalidParams(format!("x = {x} outside [{low}, {}]", self.n)));
        }
        Ok(())
    }

    /// `f/(n − t)`.
    pub fn bound(&self) -> Ratio {
        Ratio::new(self.f.into(), (self.n - self.t).into())
    }

    /// Whether every round has exactly `n − t` completed broadcasts.
    pub fn is_minimal(&self) -> bool {
        let low = self.n - self.t;
        self.tail == low && self.prefix.iter().all(|x| *x == low)
    }
}

/// `Q = Σ_i (f/n) Π_{j<i} (n − x_j)/n`: the prefix is summed term by term
/// and the constant tail `x` contributes `(f/n)·(n/x) = f/x` times the
/// probability of reaching it.
pub fn ams_decision_bound(model: &ElectionModel) -> Result<Ratio> {
    model.validate()?;
    let n = Ratio::from_integer(model.n.into());
    let per_round = Ratio::from_integer(model.f.into()) / &n;
    let mut reach = Ratio::one();
    let mut q = Ratio::zero();
    for x in &model.prefix {
        q += &reach * &per_round;
        reach *= (&n - Ratio::from_integer((*x).into())) / &n;
    }
    q += reach * Ratio::new(model.f.into(), model.tail.into());
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn closed_form_examples() {
        assert_eq!(ams_decision_bound(&ElectionModel::constant(4, 1, 0, 3).unwrap()).unwrap(), Ratio::zero());
        assert_eq!(ams_decision_bound(&ElectionModel::constant(4, 1, 1, 3).unwrap()).unwrap(), ratio(1, 3));
        assert_eq!(ams_decision_bound(&ElectionModel::constant(7, 2, 2, 5).unwrap()).unwrap(), ratio(2, 5));
        let m = ElectionModel::new(4, 1, 1, "4;3".parse().unwrap()).unwrap();
        assert_eq!(ams_decision_bound(&m).unwrap(), ratio(1, 4));
    }

    /// Truncated series summed round by round, compared with the closed
    /// form's remaining mass.
    #[test]
    fn series_partial_sums_approach_closed_form() {
        let m = ElectionModel::new(7, 2, 2, "6,5;5".parse().unwrap()).unwrap();
        let q = ams_decision_bound(&m).unwrap();
        let n = ratio(7, 1);
        let xs: Vec<usize> = m.prefix.iter().copied().chain(std::iter::repeat_n(m.tail, 60)).collect();
        let mut reach = Ratio::one();
        let mut partial = Ratio::zero();
        for x in &xs {
            partial += &reach * ratio(2, 7);
            reach *= (&n - Ratio::from_integer((*x).into())) / &n;
        }
        assert!(partial <= q);
        // What is left after 62 rounds is the tail closed form at the
        // remaining reach.
        assert_eq!(&q - &partial, reach * ratio(2, 5));
    }

    #[test]
    fn x_below_quorum_is_rejected() {
        assert!(ElectionModel::constant(4, 1, 1, 2).is_err());
        assert!(ElectionModel::new(4, 1, 1, "2;3".parse().unwrap()).is_err());
        assert!(ElectionModel::constant(4, 1, 1, 5).is_err());
        assert!(ElectionModel::constant(4, 1, 2, 3).is_err());
    }

    #[test]
    fn xspec_parsing() {
        assert_eq!(";3".parse::<XSpec>().unwrap(), XSpec { prefix: vec![], tail: 3 });
        assert_eq!("4 3,4;3".parse::<XSpec>().unwrap(), XSpec { prefix: vec![4, 3, 4], tail: 3 });
        assert!("3".parse::<XSpec>().is_err());
        assert!("a;3".parse::<XSpec>().is_err());
        assert_eq!("4,3;3".parse::<XSpec>().unwrap().to_string(), "4,3;3");
    }
}
