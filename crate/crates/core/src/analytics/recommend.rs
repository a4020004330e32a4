use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::IntermediateAnswer;
use crate::conditions::{eval_all, ConditionArray, Stage};
use crate::ingest::Session;
use crate::manifest::QuestionManifest;
use crate::model::{SessionTrace, TransitionModel};

use super::errors::traces;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecommendError {
    #[error("no full-mark session passes through {0}")]
    NoCoverage(IntermediateAnswer),
    #[error("{0} already fulfils every condition")]
    NotAnError(IntermediateAnswer),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedNode {
    pub answer: IntermediateAnswer,
    pub stage: Stage,
    pub conditions: ConditionArray,
    /// Traversals of the edge leading here; absent for the error itself.
    pub edge_count: Option<u32>,
    /// Share of the predecessor's outgoing traversals taken by that edge.
    pub edge_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedPath {
    pub error: IntermediateAnswer,
    pub error_stage: Stage,
    /// Starts at the error, ends at the first full-mark answer.
    pub nodes: Vec<RecommendedNode>,
    pub qualifying_sessions: u32,
    pub qualifying_students: u32,
    /// Number of edges.
    pub length: usize,
    /// Edges along which the stage decreases.
    pub regressions: usize,
    pub ups_and_downs: bool,
}

type Graph<'a> = HashMap<&'a IntermediateAnswer, BTreeMap<&'a IntermediateAnswer, u32>>;

/// Recovery path from `error` mined from full-mark sessions that passed
/// through it.
///
/// Only those sessions contribute edges. From each answer the walk takes the
/// most travelled edge (higher destination stage, then smaller answer on
/// ties) among those that can still reach a full-mark answer without
/// revisiting the path.
pub fn recommend(
    error: &IntermediateAnswer,
    sessions: &[Session],
    manifest: &QuestionManifest,
) -> Result<RecommendedPath, RecommendError> {
    recommend_from_traces(error, &traces(sessions, manifest), manifest)
}

/// Same as [`recommend`], over the traces already held by a group model.
pub fn recommend_in_model(
    error: &IntermediateAnswer,
    model: &TransitionModel,
    manifest: &QuestionManifest,
) -> Result<RecommendedPath, RecommendError> {
    recommend_from_traces(error, &model.traces, manifest)
}

pub(crate) fn recommend_from_traces(
    error: &IntermediateAnswer,
    traces: &[SessionTrace],
    manifest: &QuestionManifest,
) -> Result<RecommendedPath, RecommendError> {
    let m = manifest.condition_count();
    let (error_conditions, error_stage) = eval_all(error, manifest);
    if error_stage == m {
        return Err(RecommendError::NotAnError(error.clone()));
    }
    let qualifying: Vec<&SessionTrace> = traces
        .iter()
        .filter(|t| t.final_stage == m && t.contains(error))
        .collect();
    if qualifying.is_empty() {
        return Err(RecommendError::NoCoverage(error.clone()));
    }

    let mut graph: Graph = HashMap::new();
    let mut stages: HashMap<&IntermediateAnswer, Stage> = HashMap::new();
    for t in &qualifying {
        for node in &t.nodes {
            stages.insert(&node.answer, node.stage);
        }
        for pair in t.nodes.windows(2) {
            *graph
                .entry(&pair[0].answer)
                .or_default()
                .entry(&pair[1].answer)
                .or_default() += 1;
        }
    }

    let mut on_path: HashSet<&IntermediateAnswer> = HashSet::from([error]);
    let mut nodes = vec![RecommendedNode {
        answer: error.clone(),
        stage: error_stage,
        conditions: error_conditions,
        edge_count: None,
        edge_probability: None,
    }];
    let mut current = error;
    while stages[current] < m {
        let out = &graph[current];
        let total: u32 = out.values().sum();
        let mut options: Vec<(&IntermediateAnswer, u32)> = out
            .iter()
            .filter(|(a, _)| !on_path.contains(*a))
            .map(|(a, c)| (*a, *c))
            .collect();
        options.sort_by_key(|&(a, c)| (Reverse(c), Reverse(stages[a]), a));
        let (next, count) = options
            .into_iter()
            .find(|(a, _)| reaches_full_mark(a, &graph, &stages, &on_path, m))
            .expect("a qualifying session leaves every answer on the path toward full mark");
        let (conditions, stage) = eval_all(next, manifest);
        nodes.push(RecommendedNode {
            answer: next.clone(),
            stage,
            conditions,
            edge_count: Some(count),
            edge_probability: Some(f64::from(count) / f64::from(total)),
        });
        on_path.insert(next);
        current = next;
    }

    let regressions = nodes.windows(2).filter(|w| w[1].stage < w[0].stage).count();
    let students: HashSet<&str> = qualifying.iter().map(|t| t.student_id.as_str()).collect();
    Ok(RecommendedPath {
        error: error.clone(),
        error_stage,
        length: nodes.len() - 1,
        nodes,
        qualifying_sessions: qualifying.len() as u32,
        qualifying_students: students.len() as u32,
        regressions,
        ups_and_downs: regressions > 0,
    })
}

fn reaches_full_mark(
    start: &IntermediateAnswer,
    graph: &Graph,
    stages: &HashMap<&IntermediateAnswer, Stage>,
    blocked: &HashSet<&IntermediateAnswer>,
    m: usize,
) -> bool {
    let mut seen: HashSet<&IntermediateAnswer> = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        if stages[a] == m {
            return true;
        }
        for next in graph.get(a).into_iter().flat_map(BTreeMap::keys) {
            if !blocked.contains(next) && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}
