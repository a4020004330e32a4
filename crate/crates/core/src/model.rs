//! Two-level hybrid-state transition model.
//!
//! Level 1 keys states by `(step, stage)` and carries condition and
//! engagement aggregates; level 2 keeps the multiset of intermediate answers
//! seen at each state plus a directed graph over answers used for
//! recommendation.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::GroupFilter;
use crate::answer::IntermediateAnswer;
use crate::conditions::{eval_all, ConditionArray, Stage};
use crate::ingest::Session;
use crate::manifest::QuestionManifest;

pub const MODEL_SCHEMA: &str = "qlens-model/1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("no state at step {step}, stage {stage}")]
    NoSuchState { step: usize, stage: Stage },
    #[error("session `{0}` is not part of this model")]
    UnknownStudent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateKey {
    pub step: usize,
    pub stage: Stage,
}

impl StateKey {
    pub const START: StateKey = StateKey { step: 0, stage: 0 };

    pub fn new(step: usize, stage: Stage) -> Self {
        Self { step, stage }
    }
}

/// One distinct answer seen at a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerStat {
    pub answer: IntermediateAnswer,
    /// Sessions that held this answer at this state.
    pub count: u32,
    pub students: u32,
    pub mean_time_ms: f64,
    pub mean_traj_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub step: usize,
    pub stage: Stage,
    /// Distinct students at this state.
    pub width_students: u32,
    pub width_sessions: u32,
    /// Per condition: distinct students here whose answer fulfils it.
    pub condition_counts: Vec<u32>,
    /// Sessions whose last step is this state.
    pub terminal_sessions: u32,
    /// Sorted by count descending, then answer.
    pub answers: Vec<AnswerStat>,
}

impl HybridState {
    pub fn key(&self) -> StateKey {
        StateKey::new(self.step, self.stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateKey,
    pub to: StateKey,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerEdge {
    pub from: IntermediateAnswer,
    pub to: IntermediateAnswer,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathNode {
    pub step: usize,
    pub stage: Stage,
    pub conditions: ConditionArray,
    pub answer: IntermediateAnswer,
    pub time_elapse_ms: u64,
    pub traj_len_px: f64,
}

/// The hybrid-state path of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub session_id: String,
    pub student_id: String,
    pub grade: u8,
    pub final_stage: Stage,
    pub total_time_ms: u64,
    pub nodes: Vec<PathNode>,
}

impl SessionTrace {
    pub fn from_session(session: &Session, manifest: &QuestionManifest) -> Self {
        let mut nodes = Vec::with_capacity(session.steps.len() + 1);
        let empty = manifest.empty_answer();
        let (conditions, stage) = eval_all(&empty, manifest);
        nodes.push(PathNode {
            step: 0,
            stage,
            conditions,
            answer: empty,
            time_elapse_ms: 0,
            traj_len_px: 0.0,
        });
        for step in &session.steps {
            let (conditions, stage) = eval_all(&step.answer, manifest);
            nodes.push(PathNode {
                step: step.index,
                stage,
                conditions,
                answer: step.answer.clone(),
                time_elapse_ms: step.time_elapse_ms,
                traj_len_px: step.traj_len_px,
            });
        }
        let final_stage = nodes.last().map_or(0, |n| n.stage);
        Self {
            session_id: session.session_id.clone(),
            student_id: session.student_id.clone(),
            grade: session.grade,
            final_stage,
            total_time_ms: session.total_time_ms,
            nodes,
        }
    }

    pub fn contains(&self, answer: &IntermediateAnswer) -> bool {
        self.nodes.iter().any(|n| &n.answer == answer)
    }

    pub fn final_answer(&self) -> &IntermediateAnswer {
        &self.nodes.last().expect("trace has a start node").answer
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementPoint {
    /// 1-based step index.
    pub step: usize,
    /// Mean time spent on this step (since the previous one).
    pub mean_time_ms: f64,
    /// Mean cursor path length travelled during this step.
    pub mean_traj_px: f64,
    /// Sessions that reached this step.
    pub active_count: u32,
    /// Sessions that went on to the next step.
    pub progressed_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngagementSeries {
    pub steps: Vec<EngagementPoint>,
}

pub fn engagement(sessions: &[Session]) -> EngagementSeries {
    let max_step = sessions.iter().map(Session::len).max().unwrap_or(0);
    let mut sums = vec![(0.0f64, 0.0f64, 0u32); max_step];
    for s in sessions {
        let mut prev_t = 0u64;
        let mut prev_len = 0.0;
        for (i, step) in s.steps.iter().enumerate() {
            let slot = &mut sums[i];
            slot.0 += step.time_elapse_ms.saturating_sub(prev_t) as f64;
            slot.1 += step.traj_len_px - prev_len;
            slot.2 += 1;
            prev_t = step.time_elapse_ms;
            prev_len = step.traj_len_px;
        }
    }
    let steps = (0..max_step)
        .map(|i| {
            let (time, traj, active) = sums[i];
            EngagementPoint {
                step: i + 1,
                mean_time_ms: time / f64::from(active),
                mean_traj_px: traj / f64::from(active),
                active_count: active,
                progressed_count: sums.get(i + 1).map_or(0, |n| n.2),
            }
        })
        .collect();
    EngagementSeries { steps }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    pub schema: String,
    pub question_id: String,
    pub group: GroupFilter,
    pub condition_count: usize,
    pub max_step: usize,
    pub session_count: u32,
    pub student_count: u32,
    /// Sorted by (step, stage).
    pub states: Vec<HybridState>,
    /// Sorted by (from, to).
    pub transitions: Vec<Transition>,
    /// Level-2 graph over consecutive answers, all sessions aggregated.
    pub level2: Vec<AnswerEdge>,
    pub engagement: EngagementSeries,
    /// Sorted by session id.
    pub traces: Vec<SessionTrace>,
}

#[derive(Default)]
struct AnswerAcc<'a> {
    count: u32,
    students: HashSet<&'a str>,
    time: f64,
    traj: f64,
}

struct StateAcc<'a> {
    students: HashSet<&'a str>,
    sessions: u32,
    terminal: u32,
    condition_students: Vec<HashSet<&'a str>>,
    answers: HashMap<&'a IntermediateAnswer, AnswerAcc<'a>>,
}

impl<'a> StateAcc<'a> {
    fn new(m: usize) -> Self {
        Self {
            students: HashSet::new(),
            sessions: 0,
            terminal: 0,
            condition_students: vec![HashSet::new(); m],
            answers: HashMap::new(),
        }
    }
}

/// Builds the model for a group of sessions of one question.
pub fn build_model(sessions: &[Session], manifest: &QuestionManifest) -> TransitionModel {
    let m = manifest.condition_count();
    let mut traces: Vec<SessionTrace> = sessions
        .par_iter()
        .map(|s| SessionTrace::from_session(s, manifest))
        .collect();
    traces.sort_by(|a, b| a.session_id.cmp(&b.session_id));

    let mut states: BTreeMap<StateKey, StateAcc> = BTreeMap::new();
    states.insert(StateKey::START, StateAcc::new(m));
    let mut transitions: BTreeMap<(StateKey, StateKey), u32> = BTreeMap::new();
    let mut level2: BTreeMap<(&IntermediateAnswer, &IntermediateAnswer), u32> = BTreeMap::new();
    let mut students = HashSet::new();

    for trace in &traces {
        let student = trace.student_id.as_str();
        students.insert(student);
        for node in &trace.nodes {
            let acc = states
                .entry(StateKey::new(node.step, node.stage))
                .or_insert_with(|| StateAcc::new(m));
            acc.students.insert(student);
            acc.sessions += 1;
            for (i, bit) in node.conditions.iter().enumerate() {
                if bit {
                    acc.condition_students[i].insert(student);
                }
            }
            let a = acc.answers.entry(&node.answer).or_default();
            a.count += 1;
            a.students.insert(student);
            a.time += node.time_elapse_ms as f64;
            a.traj += node.traj_len_px;
        }
        if let Some(last) = trace.nodes.last() {
            states
                .get_mut(&StateKey::new(last.step, last.stage))
                .expect("inserted above")
                .terminal += 1;
        }
        for pair in trace.nodes.windows(2) {
            let from = StateKey::new(pair[0].step, pair[0].stage);
            let to = StateKey::new(pair[1].step, pair[1].stage);
            *transitions.entry((from, to)).or_default() += 1;
            *level2.entry((&pair[0].answer, &pair[1].answer)).or_default() += 1;
        }
    }

    let states: Vec<HybridState> = states
        .into_iter()
        .map(|(key, acc)| {
            let mut answers: Vec<AnswerStat> = acc
                .answers
                .into_iter()
                .map(|(answer, a)| AnswerStat {
                    answer: answer.clone(),
                    count: a.count,
                    students: a.students.len() as u32,
                    mean_time_ms: a.time / f64::from(a.count),
                    mean_traj_px: a.traj / f64::from(a.count),
                })
                .collect();
            answers.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.answer.cmp(&y.answer)));
            HybridState {
                step: key.step,
                stage: key.stage,
                width_students: acc.students.len() as u32,
                width_sessions: acc.sessions,
                condition_counts: acc
                    .condition_students
                    .iter()
                    .map(|s| s.len() as u32)
                    .collect(),
                terminal_sessions: acc.terminal,
                answers,
            }
        })
        .collect();

    TransitionModel {
        schema: MODEL_SCHEMA.to_string(),
        question_id: manifest.question_id.clone(),
        group: GroupFilter::default(),
        condition_count: m,
        max_step: sessions.iter().map(Session::len).max().unwrap_or(0),
        session_count: traces.len() as u32,
        student_count: students.len() as u32,
        states,
        transitions: transitions
            .into_iter()
            .map(|((from, to), count)| Transition { from, to, count })
            .collect(),
        level2: level2
            .into_iter()
            .map(|((from, to), count)| AnswerEdge {
                from: from.clone(),
                to: to.clone(),
                count,
            })
            .collect(),
        engagement: engagement(sessions),
        traces,
    }
}

/// Data behind one condition glyph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Glyph {
    pub step: usize,
    pub stage: Stage,
    pub width: u32,
    pub condition_counts: Vec<u32>,
}

/// States and transitions left visible after hiding thin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionView {
    pub min_count: u32,
    pub condition_count: usize,
    pub max_step: usize,
    pub states: Vec<HybridState>,
    pub transitions: Vec<Transition>,
}

impl TransitionModel {
    pub fn state(&self, step: usize, stage: Stage) -> Option<&HybridState> {
        let key = StateKey::new(step, stage);
        self.states
            .binary_search_by(|s| s.key().cmp(&key))
            .ok()
            .map(|i| &self.states[i])
    }

    pub fn inflow(&self, key: StateKey) -> u32 {
        self.transitions
            .iter()
            .filter(|t| t.to == key)
            .map(|t| t.count)
            .sum()
    }

    pub fn outflow(&self, key: StateKey) -> u32 {
        self.transitions
            .iter()
            .filter(|t| t.from == key)
            .map(|t| t.count)
            .sum()
    }

    pub fn trace(&self, session_id: &str) -> Option<&SessionTrace> {
        self.traces
            .binary_search_by(|t| t.session_id.as_str().cmp(session_id))
            .ok()
            .map(|i| &self.traces[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

pub fn state_glyph(model: &TransitionModel, step: usize, stage: Stage) -> Result<Glyph, ModelError> {
    let state = model
        .state(step, stage)
        .ok_or(ModelError::NoSuchState { step, stage })?;
    Ok(Glyph {
        step,
        stage,
        width: state.width_students,
        condition_counts: state.condition_counts.clone(),
    })
}

/// The `k` most frequent answers at a state.
pub fn top_answers(
    model: &TransitionModel,
    step: usize,
    stage: Stage,
    k: usize,
) -> Result<Vec<AnswerStat>, ModelError> {
    let state = model
        .state(step, stage)
        .ok_or(ModelError::NoSuchState { step, stage })?;
    Ok(state.answers.iter().take(k).cloned().collect())
}

/// Hides transitions with fewer than `min_count` traversals and the states
/// left without any visible transition. The start state always stays.
pub fn filter_model(model: &TransitionModel, min_count: u32) -> TransitionView {
    let transitions: Vec<Transition> = model
        .transitions
        .iter()
        .filter(|t| t.count >= min_count)
        .copied()
        .collect();
    let touched: HashSet<StateKey> = transitions.iter().flat_map(|t| [t.from, t.to]).collect();
    let states = model
        .states
        .iter()
        .filter(|s| s.key() == StateKey::START || touched.contains(&s.key()))
        .cloned()
        .collect();
    TransitionView {
        min_count,
        condition_count: model.condition_count,
        max_step: model.max_step,
        states,
        transitions,
    }
}

pub fn student_path(model: &TransitionModel, session_id: &str) -> Result<Vec<PathNode>, ModelError> {
    model
        .trace(session_id)
        .map(|t| t.nodes.clone())
        .ok_or_else(|| ModelError::UnknownStudent(session_id.to_string()))
}
