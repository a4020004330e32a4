//! Analytics over mouse-event logs of multi-step drag-and-drop questions.
//!
//! Raw cursor events are replayed into per-session step sequences
//! ([`ingest`]), each intermediate answer is scored against the question's
//! conditions ([`conditions`]), and the group is summarised as a two-level
//! hybrid-state transition model ([`model`]) with distribution, comparison
//! and common-error views on top ([`analytics`], [`views`]).

pub mod analytics;
pub mod answer;
pub mod conditions;
pub mod demo;
pub mod ingest;
pub mod manifest;
pub mod model;
pub mod synth;
pub mod views;

pub use answer::{ElementId, IntermediateAnswer};
pub use conditions::{ConditionArray, Stage};
pub use ingest::Session;
pub use manifest::QuestionManifest;
