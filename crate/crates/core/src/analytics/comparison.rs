use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::conditions::Stage;
use crate::ingest::Session;
use crate::manifest::QuestionManifest;
use crate::model::SessionTrace;

use super::errors::traces;
use super::stats::FiveNumber;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    /// (session, step) occupancies at this stage, the empty start included.
    pub hit_times: u32,
    /// Per condition: hits whose answer fulfils it.
    pub condition_times: Vec<u32>,
    /// Duration of each contiguous stay at this stage, in ms.
    pub dwell_samples: Vec<u64>,
    pub dwell: Option<FiveNumber>,
    /// Moves out of this stage that did not raise it.
    pub drop_stop_count: u32,
    pub distinct_students: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub student_count: u32,
    pub session_count: u32,
    pub total_time: Option<FiveNumber>,
    /// One entry per stage 0..=m.
    pub stages: Vec<StageSummary>,
}

pub fn comparison(sessions: &[Session], manifest: &QuestionManifest) -> ComparisonSummary {
    comparison_of(&traces(sessions, manifest), manifest.condition_count())
}

pub(crate) fn comparison_of(traces: &[SessionTrace], m: usize) -> ComparisonSummary {
    let mut stages: Vec<StageSummary> = (0..=m)
        .map(|stage| StageSummary {
            stage,
            hit_times: 0,
            condition_times: vec![0; m],
            dwell_samples: Vec::new(),
            dwell: None,
            drop_stop_count: 0,
            distinct_students: 0,
        })
        .collect();
    let mut students_at: Vec<HashSet<&str>> = vec![HashSet::new(); m + 1];

    for t in traces {
        for (i, node) in t.nodes.iter().enumerate() {
            let s = &mut stages[node.stage];
            s.hit_times += 1;
            for (c, bit) in node.conditions.iter().enumerate() {
                if bit {
                    s.condition_times[c] += 1;
                }
            }
            students_at[node.stage].insert(&t.student_id);
            if let Some(next) = t.nodes.get(i + 1) {
                if next.stage <= node.stage {
                    s.drop_stop_count += 1;
                }
            }
        }
        let mut run_start = 0;
        for i in 1..=t.nodes.len() {
            let stage = t.nodes[run_start].stage;
            if i < t.nodes.len() && t.nodes[i].stage == stage {
                continue;
            }
            let end = t.nodes.get(i).map_or(t.total_time_ms, |n| n.time_elapse_ms);
            stages[stage]
                .dwell_samples
                .push(end.saturating_sub(t.nodes[run_start].time_elapse_ms));
            run_start = i;
        }
    }

    for (s, students) in stages.iter_mut().zip(&students_at) {
        s.distinct_students = students.len() as u32;
        s.dwell = FiveNumber::from_samples(s.dwell_samples.iter().map(|&d| d as f64));
    }
    let students: HashSet<&str> = traces.iter().map(|t| t.student_id.as_str()).collect();
    ComparisonSummary {
        student_count: students.len() as u32,
        session_count: traces.len() as u32,
        total_time: FiveNumber::from_samples(traces.iter().map(|t| t.total_time_ms as f64)),
        stages,
    }
}
