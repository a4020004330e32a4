//! Group analytics computed over sessions of one question.

mod comparison;
mod errors;
mod filter;
mod overview;
mod recommend;
mod stats;

pub use comparison::{comparison, ComparisonSummary, StageSummary};
pub use errors::{common_errors, zipper, ErrorSummary, Zipper};
pub use filter::{group_filter, GroupFilter};
pub use overview::{overview, OverviewStats};
pub use recommend::{recommend, recommend_in_model, RecommendError, RecommendedNode, RecommendedPath};
pub use stats::FiveNumber;

pub(crate) use comparison::comparison_of;
pub(crate) use errors::{common_errors_of, failing_enders};
pub(crate) use overview::overview_of;
pub(crate) use recommend::recommend_from_traces;
