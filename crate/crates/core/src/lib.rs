//! Exact probability ensembles for randomized message-passing protocols
//! under explicit adversary strategies.

pub mod adversary;
pub mod agreement;
pub mod ensemble;
pub mod local;
pub mod error;
pub mod export;
pub mod model;
pub mod protocols;
pub mod rational;
pub mod scenarios;
pub mod value;

pub use error::{Error, Result};
pub use rational::Ratio;
pub use value::Value;
