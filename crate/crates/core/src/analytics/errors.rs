use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::answer::IntermediateAnswer;
use crate::conditions::{eval_all, ConditionArray, Stage};
use crate::ingest::Session;
use crate::manifest::QuestionManifest;
use crate::model::SessionTrace;

/// Per-step occurrence counts of one answer, split by cohort. Index = step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zipper {
    /// Sessions that ended below full mark.
    pub encounters_fail: Vec<u32>,
    /// Full-mark sessions.
    pub encounters_pass: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// 1-based.
    pub rank: usize,
    pub answer: IntermediateAnswer,
    pub stage: Stage,
    pub conditions: ConditionArray,
    /// Distinct failing students whose final answer is this one.
    pub fail_enders: u32,
    pub fail_sessions: u32,
    pub encounters_fail: Vec<u32>,
    pub encounters_pass: Vec<u32>,
    /// Distinct full-mark students whose path contains this answer.
    pub bypass_count: u32,
}

pub(crate) fn traces(sessions: &[Session], manifest: &QuestionManifest) -> Vec<SessionTrace> {
    sessions
        .par_iter()
        .map(|s| SessionTrace::from_session(s, manifest))
        .collect()
}

pub(crate) fn max_step(traces: &[SessionTrace]) -> usize {
    traces.iter().map(|t| t.nodes.len() - 1).max().unwrap_or(0)
}

/// Counts every occurrence of `error` at each step, split into failing and
/// full-mark sessions.
pub fn zipper(error: &IntermediateAnswer, sessions: &[Session], manifest: &QuestionManifest) -> Zipper {
    zipper_of(error, &traces(sessions, manifest), manifest.condition_count())
}

pub(crate) fn zipper_of(error: &IntermediateAnswer, traces: &[SessionTrace], m: usize) -> Zipper {
    let len = max_step(traces) + 1;
    let mut z = Zipper {
        encounters_fail: vec![0; len],
        encounters_pass: vec![0; len],
    };
    for t in traces {
        let side = if t.final_stage == m {
            &mut z.encounters_pass
        } else {
            &mut z.encounters_fail
        };
        for node in t.nodes.iter().filter(|n| &n.answer == error) {
            side[node.step] += 1;
        }
    }
    z
}

#[derive(Default)]
struct Candidate<'a> {
    enders: HashSet<&'a str>,
    sessions: u32,
    fail: Vec<u32>,
    pass: Vec<u32>,
    bypass: HashSet<&'a str>,
}

/// Common incorrect final answers, most frequent first.
///
/// Ranking: distinct failing students ending at the answer, then total
/// encounters among failing sessions, then the answer itself.
pub fn common_errors(sessions: &[Session], manifest: &QuestionManifest, top_n: usize) -> Vec<ErrorSummary> {
    common_errors_of(&traces(sessions, manifest), manifest, top_n)
}

pub(crate) fn common_errors_of(
    traces: &[SessionTrace],
    manifest: &QuestionManifest,
    top_n: usize,
) -> Vec<ErrorSummary> {
    let m = manifest.condition_count();
    let len = max_step(traces) + 1;
    let mut candidates: HashMap<&IntermediateAnswer, Candidate> = HashMap::new();
    for t in traces.iter().filter(|t| t.final_stage < m) {
        let c = candidates.entry(t.final_answer()).or_insert_with(|| Candidate {
            fail: vec![0; len],
            pass: vec![0; len],
            ..Candidate::default()
        });
        c.enders.insert(&t.student_id);
        c.sessions += 1;
    }
    for t in traces {
        let pass = t.final_stage == m;
        for node in &t.nodes {
            if let Some(c) = candidates.get_mut(&node.answer) {
                if pass {
                    c.pass[node.step] += 1;
                    c.bypass.insert(&t.student_id);
                } else {
                    c.fail[node.step] += 1;
                }
            }
        }
    }

    let mut ranked: Vec<(&IntermediateAnswer, Candidate)> = candidates.into_iter().collect();
    let key = |c: &Candidate| (c.enders.len(), c.fail.iter().sum::<u32>());
    ranked.sort_by(|(a, ca), (b, cb)| key(cb).cmp(&key(ca)).then_with(|| a.cmp(b)));
    ranked
        .into_iter()
        .take(top_n)
        .enumerate()
        .map(|(i, (answer, c))| {
            let (conditions, stage) = eval_all(answer, manifest);
            ErrorSummary {
                rank: i + 1,
                answer: answer.clone(),
                stage,
                conditions,
                fail_enders: c.enders.len() as u32,
                fail_sessions: c.sessions,
                encounters_fail: c.fail,
                encounters_pass: c.pass,
                bypass_count: c.bypass.len() as u32,
            }
        })
        .collect()
}

/// Failing sessions that end at `error`, keyed by session id.
pub(crate) fn failing_enders<'a>(
    error: &IntermediateAnswer,
    traces: &'a [SessionTrace],
    m: usize,
) -> BTreeMap<&'a str, &'a SessionTrace> {
    traces
        .iter()
        .filter(|t| t.final_stage < m && t.final_answer() == error)
        .map(|t| (t.session_id.as_str(), t))
        .collect()
}
