use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conditions::{stage_of, Stage};
use crate::ingest::Session;
use crate::manifest::QuestionManifest;

/// Conjunction of optional grade, score and student predicates.
///
/// Sets are ordered, so equivalent filters serialize identically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grades: Option<BTreeSet<u8>>,
    /// Score = stage of the final answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeSet<Stage>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student: Option<String>,
}

impl GroupFilter {
    pub fn is_empty(&self) -> bool {
        self.grades.is_none() && self.scores.is_none() && self.student.is_none()
    }

    pub fn grades(grades: impl IntoIterator<Item = u8>) -> Self {
        Self {
            grades: Some(grades.into_iter().collect()),
            ..Self::default()
        }
    }

    pub fn scores(scores: impl IntoIterator<Item = Stage>) -> Self {
        Self {
            scores: Some(scores.into_iter().collect()),
            ..Self::default()
        }
    }

    pub fn and(mut self, other: GroupFilter) -> Self {
        fn meet<T: Ord + Clone>(a: Option<BTreeSet<T>>, b: Option<BTreeSet<T>>) -> Option<BTreeSet<T>> {
            match (a, b) {
                (Some(a), Some(b)) => Some(a.intersection(&b).cloned().collect()),
                (a, None) => a,
                (None, b) => b,
            }
        }
        self.grades = meet(self.grades, other.grades);
        self.scores = meet(self.scores, other.scores);
        if other.student.is_some() {
            self.student = other.student;
        }
        self
    }

    pub fn matches(&self, session: &Session, manifest: &QuestionManifest) -> bool {
        if let Some(grades) = &self.grades {
            if !grades.contains(&session.grade) {
                return false;
            }
        }
        if let Some(student) = &self.student {
            if &session.student_id != student {
                return false;
            }
        }
        if let Some(scores) = &self.scores {
            if !scores.contains(&stage_of(&session.final_answer, manifest)) {
                return false;
            }
        }
        true
    }
}

/// Sessions matching `filter`, in their original order.
pub fn group_filter(sessions: &[Session], filter: &GroupFilter, manifest: &QuestionManifest) -> Vec<Session> {
    sessions
        .iter()
        .filter(|s| filter.matches(s, manifest))
        .cloned()
        .collect()
}
