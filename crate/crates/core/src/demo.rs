//! Bundled demo questions and small hand-built sessions.
//!
//! The product question asks for two three-digit numbers built from the digit
//! cards 1..6 whose product is largest (`631 x 542`). The sorting question
//! orders five lengths from shortest to longest.

use crate::answer::{ElementId, IntermediateAnswer};
use crate::ingest::{build_session, CursorEvent, EventKind, Session, SessionEvents, Step};
use crate::manifest::QuestionManifest;

pub const PRODUCT_QUESTION_JSON: &str = include_str!("../data/product_question.json");
pub const SORTING_QUESTION_JSON: &str = include_str!("../data/sorting_question.json");

pub fn product_question() -> QuestionManifest {
    QuestionManifest::from_json(PRODUCT_QUESTION_JSON).expect("bundled manifest is valid")
}

pub fn sorting_question() -> QuestionManifest {
    QuestionManifest::from_json(SORTING_QUESTION_JSON).expect("bundled manifest is valid")
}

/// Raw cursor events of one product-question session that places 6, 5, 4,
/// 3, 2, 1 into slots 1, 4, 2, 3, 5, 6 and ends at `(6,4,3,5,2,1)`.
pub fn golden_session_events() -> SessionEvents {
    let m = product_question();
    let mut events = Vec::new();
    let placements = [(6, 1), (5, 4), (4, 2), (3, 3), (2, 5), (1, 6)];
    for (k, (element, slot)) in placements.into_iter().enumerate() {
        let from = m.source_roi(ElementId(element)).expect("element has a source").center();
        let to = m.slot_roi(slot).expect("slot has a box").center();
        let t0 = 1000 + 2000 * k as u64;
        events.push(CursorEvent { t: t0, x: from.0, y: from.1, kind: EventKind::Down });
        for j in 1..5 {
            let x = from.0 + (to.0 - from.0) * j / 5;
            let y = from.1 + (to.1 - from.1) * j / 5;
            events.push(CursorEvent { t: t0 + 20 * j as u64, x, y, kind: EventKind::Move });
        }
        events.push(CursorEvent { t: t0 + 100, x: to.0, y: to.1, kind: EventKind::Up });
    }
    SessionEvents {
        session_id: "golden".into(),
        student_id: "golden-student".into(),
        question_id: m.question_id.clone(),
        grade: 4,
        events,
    }
}

pub fn golden_session() -> Session {
    build_session(&golden_session_events(), &product_question())
        .expect("golden events match the product question")
        .session
}

/// A product-question session stepping through `answers` (digits, `0` for an
/// empty slot). Step `i` happens at `1000 * i` ms with `100 * i` px of
/// cursor travel.
pub fn session_from_answers(id: &str, student: &str, grade: u8, answers: &[&[u32]]) -> Session {
    session_with_slots(6, "q-product", id, student, grade, answers)
}

pub fn session_with_slots(
    slot_count: usize,
    question_id: &str,
    id: &str,
    student: &str,
    grade: u8,
    answers: &[&[u32]],
) -> Session {
    let steps: Vec<Step> = answers
        .iter()
        .enumerate()
        .map(|(i, d)| {
            assert_eq!(d.len(), slot_count, "answer width");
            Step {
                index: i + 1,
                answer: IntermediateAnswer::from_digits(d),
                time_elapse_ms: 1000 * (i as u64 + 1),
                traj_len_px: 100.0 * (i as f64 + 1.0),
            }
        })
        .collect();
    Session {
        session_id: id.to_string(),
        student_id: student.to_string(),
        question_id: question_id.to_string(),
        grade,
        final_answer: steps
            .last()
            .map_or_else(|| IntermediateAnswer::empty(slot_count), |s| s.answer.clone()),
        total_time_ms: 1000 * steps.len() as u64,
        total_traj_px: 100.0 * steps.len() as f64,
        steps,
    }
}
