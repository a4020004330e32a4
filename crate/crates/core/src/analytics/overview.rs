use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::conditions::Stage;
use crate::ingest::Session;
use crate::manifest::QuestionManifest;
use crate::model::SessionTrace;

use super::errors::traces;

/// Distribution panel data. Each histogram counts distinct students; a
/// student with several sessions is represented by the last one given.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverviewStats {
    pub student_count: u32,
    pub session_count: u32,
    pub score_histogram: BTreeMap<Stage, u32>,
    pub grade_histogram: BTreeMap<u8, u32>,
    /// Whole minutes of total session time.
    pub time_histogram: BTreeMap<u64, u32>,
}

pub fn overview(sessions: &[Session], manifest: &QuestionManifest) -> OverviewStats {
    overview_of(&traces(sessions, manifest))
}

pub(crate) fn overview_of(traces: &[SessionTrace]) -> OverviewStats {
    let mut latest: HashMap<&str, &SessionTrace> = HashMap::new();
    for t in traces {
        latest.insert(&t.student_id, t);
    }
    let mut stats = OverviewStats {
        student_count: latest.len() as u32,
        session_count: traces.len() as u32,
        ..OverviewStats::default()
    };
    for s in latest.values() {
        *stats.score_histogram.entry(s.final_stage).or_default() += 1;
        *stats.grade_histogram.entry(s.grade).or_default() += 1;
        *stats.time_histogram.entry(s.total_time_ms / 60_000).or_default() += 1;
    }
    stats
}
