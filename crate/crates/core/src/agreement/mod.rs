//! Validity machinery: multisets, verdicts, the election bound, and the
//! composed agreement model.

pub mod composed;
pub mod election;
pub mod multiset;
pub mod validity;

pub use composed::{failure_free, mimic_strategy, run_composed_protocol, silent_strategy};
pub use election::{ams_decision_bound, ElectionModel, XSpec};
pub use multiset::{find_balanced_submultiset, max_mult, mult, qv_guarantee_branch, InputMultiset};
pub use validity::{check_qualitative_validity, check_weak_validity, Branch, QvVerdict};
