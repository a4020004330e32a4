#![allow(dead_code)]

use proptest::prelude::*;
use qlens_core::demo::session_from_answers;
use qlens_core::Session;

pub const FULL: [u32; 6] = [6, 3, 1, 5, 4, 2];

/// A small pool of product-question answers so that sessions share states.
pub const POOL: [[u32; 6]; 8] = [
    [6, 0, 0, 0, 0, 0],
    [6, 0, 0, 5, 0, 0],
    [6, 4, 3, 5, 2, 1],
    [6, 5, 4, 3, 2, 1],
    [6, 3, 4, 5, 2, 1],
    [1, 2, 3, 4, 5, 6],
    [6, 3, 1, 5, 2, 4],
    FULL,
];

fn answer_path() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..POOL.len(), 0..8).prop_map(|mut v| {
        v.dedup();
        v
    })
}

/// Sessions over [`POOL`]; `(student, grade)` drawn from a small range so
/// students repeat.
pub fn sessions(max: usize) -> impl Strategy<Value = Vec<Session>> {
    prop::collection::vec((0u8..6, 2u8..5, answer_path()), 0..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (student, grade, path))| {
                let answers: Vec<&[u32]> = path.iter().map(|&p| &POOL[p][..]).collect();
                session_from_answers(&format!("s{i:03}"), &format!("u{student}"), grade, &answers)
            })
            .collect()
    })
}

/// Sessions that always pass through `POOL[2]`, ending at full mark or not.
pub fn sessions_through_error(max: usize) -> impl Strategy<Value = Vec<Session>> {
    prop::collection::vec((answer_path(), answer_path(), any::<bool>()), 1..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (before, after, finish))| {
                let mut path: Vec<usize> = before;
                path.push(2);
                path.extend(after);
                if finish {
                    path.push(POOL.len() - 1);
                }
                path.dedup();
                let answers: Vec<&[u32]> = path.iter().map(|&p| &POOL[p][..]).collect();
                session_from_answers(&format!("s{i:03}"), &format!("u{}", i % 5), 3, &answers)
            })
            .collect()
    })
}
