//! JSON payloads shared by the HTTP service, the CLI and the web client.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    common_errors_of, comparison_of, failing_enders, group_filter, overview_of, recommend_from_traces,
    ComparisonSummary, ErrorSummary, GroupFilter, OverviewStats, RecommendError, RecommendedPath,
};
use crate::ingest::Session;
use crate::manifest::QuestionManifest;
use crate::model::{build_model, filter_model, EngagementSeries, PathNode, TransitionModel, TransitionView};

pub const VIEWS_SCHEMA: &str = "qlens-views/1";
pub const RECOMMENDATION_SCHEMA: &str = "qlens-recommendation/1";
pub const EXPORT_SCHEMA: &str = "qlens-analytics/1";

pub const DEFAULT_TOP_ERRORS: usize = 10;

fn default_top_errors() -> usize {
    DEFAULT_TOP_ERRORS
}

/// Everything that selects and shapes one group's views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupQuery {
    #[serde(default)]
    pub filter: GroupFilter,
    /// Transitions traversed fewer times are hidden.
    #[serde(default)]
    pub min_count: u32,
    #[serde(default = "default_top_errors")]
    pub top_errors: usize,
}

impl Default for GroupQuery {
    fn default() -> Self {
        Self {
            filter: GroupFilter::default(),
            min_count: 0,
            top_errors: DEFAULT_TOP_ERRORS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewsPayload {
    pub schema: String,
    pub question_id: String,
    pub title: String,
    pub query: GroupQuery,
    pub overview: OverviewStats,
    pub transition: TransitionView,
    pub engagement: EngagementSeries,
    pub comparison: ComparisonSummary,
    pub errors: Vec<ErrorSummary>,
}

impl ViewsPayload {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("views serialize")
    }
}

/// Filters `sessions` and builds the model for the group.
pub fn group_model(sessions: &[Session], manifest: &QuestionManifest, filter: &GroupFilter) -> TransitionModel {
    let group = group_filter(sessions, filter, manifest);
    let mut model = build_model(&group, manifest);
    model.group = filter.clone();
    model
}

/// Views of an already built group model.
pub fn build_views(model: &TransitionModel, manifest: &QuestionManifest, query: &GroupQuery) -> ViewsPayload {
    ViewsPayload {
        schema: VIEWS_SCHEMA.to_string(),
        question_id: manifest.question_id.clone(),
        title: manifest.title.clone(),
        query: query.clone(),
        overview: overview_of(&model.traces),
        transition: filter_model(model, query.min_count),
        engagement: model.engagement.clone(),
        comparison: comparison_of(&model.traces, manifest.condition_count()),
        errors: common_errors_of(&model.traces, manifest, query.top_errors),
    }
}

pub fn compose_views(sessions: &[Session], manifest: &QuestionManifest, query: &GroupQuery) -> ViewsPayload {
    build_views(&group_model(sessions, manifest, &query.filter), manifest, query)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ViewsError {
    #[error("no common error at rank {0}")]
    NoSuchError(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendationStatus {
    Ok,
    NoCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationPayload {
    pub schema: String,
    pub question_id: String,
    pub status: RecommendationStatus,
    pub error: ErrorSummary,
    /// Hybrid-state path of a failing session that ends at the error: the
    /// one with the smallest session id.
    pub error_path: Vec<PathNode>,
    pub error_path_session: Option<String>,
    pub recommended: Option<RecommendedPath>,
}

impl RecommendationPayload {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recommendation serializes")
    }
}

/// Recommendation for the common error at 1-based `rank` of the group.
pub fn recommendation_for_rank(
    model: &TransitionModel,
    manifest: &QuestionManifest,
    rank: usize,
    top_errors: usize,
) -> Result<RecommendationPayload, ViewsError> {
    let errors = common_errors_of(&model.traces, manifest, top_errors.max(rank));
    let error = rank
        .checked_sub(1)
        .and_then(|i| errors.into_iter().nth(i))
        .ok_or(ViewsError::NoSuchError(rank))?;
    Ok(recommendation_for(model, manifest, error))
}

pub fn recommendation_for(
    model: &TransitionModel,
    manifest: &QuestionManifest,
    error: ErrorSummary,
) -> RecommendationPayload {
    let m = manifest.condition_count();
    let representative = failing_enders(&error.answer, &model.traces, m).into_values().next();
    let (status, recommended) = match recommend_from_traces(&error.answer, &model.traces, manifest) {
        Ok(path) => (RecommendationStatus::Ok, Some(path)),
        Err(RecommendError::NoCoverage(_)) => (RecommendationStatus::NoCoverage, None),
        Err(RecommendError::NotAnError(_)) => unreachable!("common errors are below full mark"),
    };
    RecommendationPayload {
        schema: RECOMMENDATION_SCHEMA.to_string(),
        question_id: manifest.question_id.clone(),
        status,
        error,
        error_path: representative.map(|t| t.nodes.clone()).unwrap_or_default(),
        error_path_session: representative.map(|t| t.session_id.clone()),
        recommended,
    }
}

/// Offline bundle: the group's views plus a recommendation per listed error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsExport {
    pub schema: String,
    pub views: ViewsPayload,
    pub recommendations: Vec<RecommendationPayload>,
}

pub fn export_analytics(sessions: &[Session], manifest: &QuestionManifest, query: &GroupQuery) -> AnalyticsExport {
    let model = group_model(sessions, manifest, &query.filter);
    let views = build_views(&model, manifest, query);
    let recommendations = views
        .errors
        .iter()
        .map(|e| recommendation_for(&model, manifest, e.clone()))
        .collect();
    AnalyticsExport {
        schema: EXPORT_SCHEMA.to_string(),
        views,
        recommendations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{golden_session, product_question, session_from_answers};

    #[test]
    fn views_are_deterministic() {
        let m = product_question();
        let sessions = vec![
            golden_session(),
            session_from_answers("s1", "u1", 3, &[&[6, 4, 3, 5, 2, 1], &[6, 3, 1, 5, 4, 2]]),
        ];
        let q = GroupQuery::default();
        let a = compose_views(&sessions, &m, &q).to_json();
        let b = compose_views(&sessions, &m, &q).to_json();
        assert_eq!(a, b);
        let back: ViewsPayload = serde_json::from_str(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn recommendation_by_rank() {
        let m = product_question();
        let sessions = vec![
            golden_session(),
            session_from_answers("s1", "u1", 3, &[&[6, 4, 3, 5, 2, 1], &[6, 3, 1, 5, 4, 2]]),
        ];
        let model = group_model(&sessions, &m, &GroupFilter::default());
        let r = recommendation_for_rank(&model, &m, 1, 10).unwrap();
        assert_eq!(r.status, RecommendationStatus::Ok);
        assert_eq!(r.error_path_session.as_deref(), Some("golden"));
        assert_eq!(r.error_path.len(), 7);
        assert_eq!(r.recommended.unwrap().length, 1);
        assert_eq!(recommendation_for_rank(&model, &m, 2, 10), Err(ViewsError::NoSuchError(2)));
        assert_eq!(recommendation_for_rank(&model, &m, 0, 10), Err(ViewsError::NoSuchError(0)));
    }

    #[test]
    fn uncovered_error() {
        let m = product_question();
        let model = group_model(&[golden_session()], &m, &GroupFilter::default());
        let r = recommendation_for_rank(&model, &m, 1, 10).unwrap();
        assert_eq!(r.status, RecommendationStatus::NoCoverage);
        assert!(r.recommended.is_none());
    }

    #[test]
    fn query_defaults_from_empty_json() {
        let q: GroupQuery = serde_json::from_str("{}").unwrap();
        assert_eq!(q, GroupQuery::default());
    }
}
