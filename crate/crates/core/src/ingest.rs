//! Raw mouse-event logs to per-session intermediate-answer sequences.
//!
//! A drag is a mouse-down followed by the next mouse-up with both endpoints
//! inside ROIs. Drags that change the answer become steps; the cursor
//! trajectory is the polyline through every recorded event position.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::IntermediateAnswer;
use crate::manifest::{QuestionManifest, RoiBox, RoiRole};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no events ingested ({skipped} malformed lines skipped)")]
    EmptyInput { skipped: usize },
    #[error("no manifest for question `{0}`")]
    UnknownQuestion(String),
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Down,
    Up,
    Move,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    #[serde(rename = "session")]
    pub session_id: String,
    #[serde(rename = "student")]
    pub student_id: String,
    #[serde(rename = "question")]
    pub question_id: String,
    pub grade: u8,
    /// Milliseconds since the session started.
    pub t: i64,
    pub x: i32,
    pub y: i32,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorEvent {
    pub t: u64,
    pub x: i32,
    pub y: i32,
    pub kind: EventKind,
}

/// All events of one session, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionEvents {
    pub session_id: String,
    pub student_id: String,
    pub question_id: String,
    pub grade: u8,
    pub events: Vec<CursorEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    /// Sorted by session id.
    pub sessions: Vec<SessionEvents>,
    pub malformed: Vec<MalformedRecord>,
    pub event_count: usize,
}

/// Parses a line-delimited JSON event log. Bad lines are recorded and skipped.
pub fn parse_events(reader: impl BufRead) -> Result<ParsedLog, IngestError> {
    let mut groups: BTreeMap<String, SessionEvents> = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut event_count = 0;

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut reject = |reason: String| {
            malformed.push(MalformedRecord {
                line: line_no,
                reason,
            })
        };
        let raw: RawEvent = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                reject(e.to_string());
                continue;
            }
        };
        if raw.t < 0 {
            reject(format!("negative timestamp {}", raw.t));
            continue;
        }
        if !(1..=12).contains(&raw.grade) {
            reject(format!("grade {} outside 1..=12", raw.grade));
            continue;
        }
        let cursor = CursorEvent {
            t: raw.t as u64,
            x: raw.x,
            y: raw.y,
            kind: raw.kind,
        };
        match groups.get_mut(&raw.session_id) {
            Some(group) => {
                if group.student_id != raw.student_id
                    || group.question_id != raw.question_id
                    || group.grade != raw.grade
                {
                    reject(format!(
                        "session `{}` metadata differs from its first event",
                        raw.session_id
                    ));
                    continue;
                }
                group.events.push(cursor);
            }
            None => {
                groups.insert(
                    raw.session_id.clone(),
                    SessionEvents {
                        session_id: raw.session_id,
                        student_id: raw.student_id,
                        question_id: raw.question_id,
                        grade: raw.grade,
                        events: vec![cursor],
                    },
                );
            }
        }
        event_count += 1;
    }

    if event_count == 0 {
        return Err(IngestError::EmptyInput {
            skipped: malformed.len(),
        });
    }
    let mut sessions: Vec<SessionEvents> = groups.into_values().collect();
    for s in &mut sessions {
        // stable: equal timestamps keep file order
        s.events.sort_by_key(|e| e.t);
    }
    Ok(ParsedLog {
        sessions,
        malformed,
        event_count,
    })
}

/// ROI containing the point, or 0.
pub fn hit_test(x: i32, y: i32, rois: &[RoiBox]) -> u32 {
    rois.iter()
        .find(|r| r.contains(x, y))
        .map_or(0, |r| r.id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragAction {
    pub from_roi: u32,
    pub to_roi: u32,
    pub t_down: u64,
    pub t_up: u64,
    /// Cursor path length from the down event to the up event.
    pub path_len_px: f64,
    /// Cumulative cursor path length from session start to the up event.
    pub cursor_len_px: f64,
}

/// Counts of interactions that did not become steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DragTally {
    pub unpaired_downs: usize,
    pub unpaired_ups: usize,
    /// Down/up pairs with an endpoint outside every ROI.
    pub off_roi: usize,
    /// Drags that left the answer unchanged.
    pub noop: usize,
}

impl DragTally {
    /// Pairs and halves that never formed a drag action.
    pub fn dropped(&self) -> usize {
        self.unpaired_downs + self.unpaired_ups + self.off_roi
    }
}

impl AddAssign for DragTally {
    fn add_assign(&mut self, rhs: Self) {
        self.unpaired_downs += rhs.unpaired_downs;
        self.unpaired_ups += rhs.unpaired_ups;
        self.off_roi += rhs.off_roi;
        self.noop += rhs.noop;
    }
}

fn dist(a: (i32, i32), b: (i32, i32)) -> f64 {
    let dx = f64::from(a.0 - b.0);
    let dy = f64::from(a.1 - b.1);
    dx.hypot(dy)
}

/// Pairs each mouse-down with the next mouse-up. `events` must be time-sorted.
pub fn pair_drags(events: &[CursorEvent], rois: &[RoiBox]) -> (Vec<DragAction>, DragTally) {
    let mut drags = Vec::new();
    let mut tally = DragTally::default();
    let mut cursor = 0.0;
    let mut last: Option<(i32, i32)> = None;
    // (roi, t, cumulative length) at the pending down
    let mut pending: Option<(u32, u64, f64)> = None;

    for e in events {
        let here = (e.x, e.y);
        if let Some(prev) = last {
            cursor += dist(prev, here);
        }
        last = Some(here);
        match e.kind {
            EventKind::Move => {}
            EventKind::Down => {
                if pending.is_some() {
                    tally.unpaired_downs += 1;
                }
                pending = Some((hit_test(e.x, e.y, rois), e.t, cursor));
            }
            EventKind::Up => match pending.take() {
                None => tally.unpaired_ups += 1,
                Some((from, t_down, at_down)) => {
                    let to = hit_test(e.x, e.y, rois);
                    if from == 0 || to == 0 {
                        tally.off_roi += 1;
                    } else {
                        drags.push(DragAction {
                            from_roi: from,
                            to_roi: to,
                            t_down,
                            t_up: e.t,
                            path_len_px: cursor - at_down,
                            cursor_len_px: cursor,
                        });
                    }
                }
            },
        }
    }
    if pending.is_some() {
        tally.unpaired_downs += 1;
    }
    (drags, tally)
}

/// Applies one drag to an answer.
///
/// * source → slot inserts the element; an occupant of the target slot goes
///   back to the pool, and an element already placed elsewhere moves.
/// * slot → slot moves the element, exchanging with any occupant.
/// * slot → source removes the element.
/// * anything else, or an empty source slot, leaves the answer unchanged.
pub fn apply_drag(
    answer: &IntermediateAnswer,
    drag: &DragAction,
    manifest: &QuestionManifest,
) -> IntermediateAnswer {
    let (Some(from), Some(to)) = (manifest.roi(drag.from_roi), manifest.roi(drag.to_roi)) else {
        return answer.clone();
    };
    let mut next = answer.clone();
    match (from.role, to.role) {
        (RoiRole::Source { element }, RoiRole::Slot { slot }) => {
            if let Some(prev) = next.position_of(element) {
                next.set(prev, None);
            }
            next.set(slot - 1, Some(element));
        }
        (RoiRole::Slot { slot: a }, RoiRole::Slot { slot: b }) => {
            let moving = next.get(a - 1);
            if moving.is_some() && a != b {
                let occupant = next.get(b - 1);
                next.set(b - 1, moving);
                next.set(a - 1, occupant);
            }
        }
        (RoiRole::Slot { slot }, RoiRole::Source { .. }) => next.set(slot - 1, None),
        _ => {}
    }
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based.
    pub index: usize,
    pub answer: IntermediateAnswer,
    /// Session start to this step.
    pub time_elapse_ms: u64,
    /// Cumulative cursor path length, session start to this step.
    pub traj_len_px: f64,
}

/// One student's attempt at one question. Step 0, the empty answer at t=0,
/// is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub student_id: String,
    pub question_id: String,
    pub grade: u8,
    pub steps: Vec<Step>,
    pub total_time_ms: u64,
    pub total_traj_px: f64,
    pub final_answer: IntermediateAnswer,
}

impl Session {
    /// Answer after `step` (0 = empty answer).
    pub fn answer_at(&self, step: usize) -> Option<&IntermediateAnswer> {
        match step {
            0 => None,
            s => self.steps.get(s - 1).map(|st| &st.answer),
        }
    }

    /// Answers at steps 0..=n with the empty answer first.
    pub fn answers(&self) -> impl Iterator<Item = std::borrow::Cow<'_, IntermediateAnswer>> {
        let empty = IntermediateAnswer::empty(self.final_answer.len());
        std::iter::once(std::borrow::Cow::Owned(empty))
            .chain(self.steps.iter().map(|s| std::borrow::Cow::Borrowed(&s.answer)))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BuiltSession {
    pub session: Session,
    pub drags: Vec<DragAction>,
    pub tally: DragTally,
}

/// Replays one session's drags into a step sequence.
pub fn build_session(
    events: &SessionEvents,
    manifest: &QuestionManifest,
) -> Result<BuiltSession, IngestError> {
    if events.question_id != manifest.question_id {
        return Err(IngestError::UnknownQuestion(events.question_id.clone()));
    }
    let (drags, mut tally) = pair_drags(&events.events, &manifest.rois);

    let mut answer = manifest.empty_answer();
    let mut steps = Vec::new();
    for drag in &drags {
        let next = apply_drag(&answer, drag, manifest);
        if next == answer {
            tally.noop += 1;
            continue;
        }
        answer = next;
        steps.push(Step {
            index: steps.len() + 1,
            answer: answer.clone(),
            time_elapse_ms: drag.t_up,
            traj_len_px: drag.cursor_len_px,
        });
    }

    let total_time_ms = events.events.last().map_or(0, |e| e.t);
    let total_traj_px = events
        .events
        .windows(2)
        .map(|w| dist((w[0].x, w[0].y), (w[1].x, w[1].y)))
        .sum();
    Ok(BuiltSession {
        session: Session {
            session_id: events.session_id.clone(),
            student_id: events.student_id.clone(),
            question_id: events.question_id.clone(),
            grade: events.grade,
            steps,
            total_time_ms,
            total_traj_px,
            final_answer: answer,
        },
        drags,
        tally,
    })
}

/// Sessions built from a parsed log plus diagnostics.
#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub sessions: Vec<Session>,
    pub malformed: Vec<MalformedRecord>,
    pub tally: DragTally,
}

/// Builds every session of `log`; all must belong to `manifest`'s question.
pub fn build_sessions(
    log: &ParsedLog,
    manifest: &QuestionManifest,
) -> Result<IngestOutcome, IngestError> {
    if let Some(stray) = log
        .sessions
        .iter()
        .find(|s| s.question_id != manifest.question_id)
    {
        return Err(IngestError::UnknownQuestion(stray.question_id.clone()));
    }
    let built: Vec<BuiltSession> = log
        .sessions
        .par_iter()
        .map(|s| build_session(s, manifest))
        .collect::<Result<_, _>>()?;
    let mut tally = DragTally::default();
    let sessions = built
        .into_iter()
        .map(|b| {
            tally += b.tally;
            b.session
        })
        .collect();
    Ok(IngestOutcome {
        sessions,
        malformed: log.malformed.clone(),
        tally,
    })
}
