//! Request records, segments induced by a request batch, and pruning of
//! uncontested segments and hopeless requests.

pub(crate) mod prune;
mod request;
mod segments;

pub use prune::{classify_contested, prune, ConstraintKey, Contested, PruneOutcome};
pub use request::{GroupDemand, Predicate, RequestRecord};
pub use segments::{compute_segments, compute_segments_with, Segment};
