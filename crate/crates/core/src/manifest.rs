//! Question manifests: declarative ROIs, slots, elements and conditions.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{ElementId, IntermediateAnswer};
use crate::conditions::{eval_all, ConditionError, ConditionSpec, MAX_CONDITIONS};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("question must declare at least one slot")]
    NoSlots,
    #[error("duplicate element id {0}")]
    DuplicateElement(ElementId),
    #[error("element {0} has a non-finite value")]
    BadElementValue(ElementId),
    #[error("ROI ids must be >= 1 and unique (offending id {0})")]
    BadRoiId(u32),
    #[error("ROI {0} is not a proper box (need x0 < x1 and y0 < y1)")]
    DegenerateRoi(u32),
    #[error("ROIs {0} and {1} overlap")]
    OverlappingRois(u32, u32),
    #[error("ROI {roi} refers to unknown {what}")]
    UnknownRoiTarget { roi: u32, what: String },
    #[error("slot {0} has {1} slot ROIs (need exactly one)")]
    SlotRoiCount(usize, usize),
    #[error("invalid correct answer: {0}")]
    BadCorrectAnswer(String),
    #[error("at most {MAX_CONDITIONS} conditions are supported, got {0}")]
    TooManyConditions(usize),
    #[error("condition ids must run 1..=m in order; found {found} at position {position}")]
    ConditionIds { position: usize, found: u32 },
    #[error("condition {id}: {source}")]
    Condition {
        id: u32,
        #[source]
        source: ConditionError,
    },
    #[error("condition {0}: declared kind does not match its expression")]
    KindMismatch(u32),
    #[error("correct answer fulfils only {stage} of {m} conditions")]
    CorrectAnswerUnfulfilled { stage: usize, m: usize },
    #[error("solution step {0}: {1}")]
    BadSolutionStep(usize, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    /// Numeric value used by `val(...)` comparisons.
    pub value: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum RoiRole {
    Source { element: ElementId },
    /// 1-based slot index.
    Slot { slot: usize },
    Inert,
}

/// Axis-aligned interactive region; containment is edge-inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiBox {
    pub id: u32,
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
    #[serde(flatten)]
    pub role: RoiRole,
}

impl RoiBox {
    pub fn contains(&self, x: i32, y: i32) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    fn overlaps(&self, other: &RoiBox) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    pub fn center(&self) -> (i32, i32) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionManifest {
    pub question_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub slot_count: usize,
    pub elements: Vec<Element>,
    pub rois: Vec<RoiBox>,
    pub correct_answer: IntermediateAnswer,
    pub conditions: Vec<ConditionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_steps: Option<Vec<IntermediateAnswer>>,
}

impl QuestionManifest {
    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let manifest: QuestionManifest = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn condition_count(&self) -> usize {
        self.conditions.len()
    }

    pub fn has_element(&self, id: ElementId) -> bool {
        self.elements.iter().any(|e| e.id == id)
    }

    pub fn element_value(&self, id: ElementId) -> Option<f64> {
        self.elements.iter().find(|e| e.id == id).map(|e| e.value)
    }

    pub fn roi(&self, id: u32) -> Option<&RoiBox> {
        self.rois.iter().find(|r| r.id == id)
    }

    /// ROI the element is dragged out of.
    pub fn source_roi(&self, element: ElementId) -> Option<&RoiBox> {
        self.rois
            .iter()
            .find(|r| r.role == RoiRole::Source { element })
    }

    /// ROI of a 1-based slot.
    pub fn slot_roi(&self, slot: usize) -> Option<&RoiBox> {
        self.rois.iter().find(|r| r.role == RoiRole::Slot { slot })
    }

    pub fn empty_answer(&self) -> IntermediateAnswer {
        IntermediateAnswer::empty(self.slot_count)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.slot_count == 0 {
            return Err(ManifestError::NoSlots);
        }

        let mut element_ids = HashSet::new();
        for e in &self.elements {
            if !element_ids.insert(e.id) {
                return Err(ManifestError::DuplicateElement(e.id));
            }
            if !e.value.is_finite() {
                return Err(ManifestError::BadElementValue(e.id));
            }
        }

        let mut roi_ids = HashSet::new();
        let mut slot_rois = vec![0usize; self.slot_count];
        for roi in &self.rois {
            if roi.id == 0 || !roi_ids.insert(roi.id) {
                return Err(ManifestError::BadRoiId(roi.id));
            }
            if roi.x0 >= roi.x1 || roi.y0 >= roi.y1 {
                return Err(ManifestError::DegenerateRoi(roi.id));
            }
            match roi.role {
                RoiRole::Source { element } if !element_ids.contains(&element) => {
                    return Err(ManifestError::UnknownRoiTarget {
                        roi: roi.id,
                        what: format!("element {element}"),
                    })
                }
                RoiRole::Slot { slot } if slot == 0 || slot > self.slot_count => {
                    return Err(ManifestError::UnknownRoiTarget {
                        roi: roi.id,
                        what: format!("slot {slot}"),
                    })
                }
                RoiRole::Slot { slot } => slot_rois[slot - 1] += 1,
                _ => {}
            }
        }
        for (i, a) in self.rois.iter().enumerate() {
            for b in &self.rois[i + 1..] {
                if a.overlaps(b) {
                    return Err(ManifestError::OverlappingRois(a.id, b.id));
                }
            }
        }
        if let Some((slot, &n)) = slot_rois.iter().enumerate().find(|(_, &n)| n != 1) {
            return Err(ManifestError::SlotRoiCount(slot + 1, n));
        }

        self.check_answer(&self.correct_answer)
            .map_err(ManifestError::BadCorrectAnswer)?;
        if !self.correct_answer.is_complete() {
            return Err(ManifestError::BadCorrectAnswer("has empty slots".into()));
        }

        if self.conditions.len() > MAX_CONDITIONS {
            return Err(ManifestError::TooManyConditions(self.conditions.len()));
        }
        for (i, spec) in self.conditions.iter().enumerate() {
            if spec.id as usize != i + 1 {
                return Err(ManifestError::ConditionIds {
                    position: i + 1,
                    found: spec.id,
                });
            }
            spec.expr
                .check_references(self.slot_count, |e| element_ids.contains(&e))
                .map_err(|source| ManifestError::Condition { id: spec.id, source })?;
            if spec.expr.kind() != spec.kind {
                return Err(ManifestError::KindMismatch(spec.id));
            }
        }
        let (_, stage) = eval_all(&self.correct_answer, self);
        if stage != self.conditions.len() {
            return Err(ManifestError::CorrectAnswerUnfulfilled {
                stage,
                m: self.conditions.len(),
            });
        }

        if let Some(steps) = &self.solution_steps {
            for (i, step) in steps.iter().enumerate() {
                self.check_answer(step)
                    .map_err(|msg| ManifestError::BadSolutionStep(i + 1, msg))?;
            }
        }
        Ok(())
    }

    fn check_answer(&self, answer: &IntermediateAnswer) -> Result<(), String> {
        if answer.len() != self.slot_count {
            return Err(format!(
                "has {} slots, question has {}",
                answer.len(),
                self.slot_count
            ));
        }
        if !answer.is_injective() {
            return Err("places an element twice".into());
        }
        if let Some(e) = answer.slots().iter().flatten().find(|e| !self.has_element(**e)) {
            return Err(format!("uses undeclared element {e}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{product_question, PRODUCT_QUESTION_JSON};

    fn manifest_json() -> serde_json::Value {
        serde_json::from_str(PRODUCT_QUESTION_JSON).unwrap()
    }

    fn load(v: serde_json::Value) -> Result<QuestionManifest, ManifestError> {
        QuestionManifest::from_json(&v.to_string())
    }

    #[test]
    fn demo_manifest_is_valid() {
        let m = product_question();
        assert_eq!(m.slot_count, 6);
        assert_eq!(m.condition_count(), 6);
        assert_eq!(m.source_roi(ElementId(6)).unwrap().id, 6);
        assert_eq!(m.slot_roi(1).unwrap().id, 7);
    }

    #[test]
    fn roi_json_shape() {
        let roi: RoiBox = serde_json::from_str(
            r#"{"id":3,"x0":0,"y0":0,"x1":10,"y1":10,"role":"slot","slot":2}"#,
        )
        .unwrap();
        assert_eq!(roi.role, RoiRole::Slot { slot: 2 });
        let inert: RoiBox =
            serde_json::from_str(r#"{"id":4,"x0":0,"y0":0,"x1":10,"y1":10,"role":"inert"}"#)
                .unwrap();
        assert_eq!(inert.role, RoiRole::Inert);
    }

    #[test]
    fn rejects_overlapping_rois() {
        let mut v = manifest_json();
        // Move source 2 onto source 1's right edge: touching edges overlap.
        v["rois"][1]["x0"] = v["rois"][0]["x1"].clone();
        assert!(matches!(load(v), Err(ManifestError::OverlappingRois(1, 2))));
    }

    #[test]
    fn rejects_duplicate_roi_ids() {
        let mut v = manifest_json();
        v["rois"][1]["id"] = 1.into();
        assert!(matches!(load(v), Err(ManifestError::BadRoiId(1))));
    }

    #[test]
    fn rejects_bad_correct_answer() {
        let mut v = manifest_json();
        v["correct_answer"] = serde_json::json!([6, 3, 1, 5, 4]);
        assert!(matches!(load(v), Err(ManifestError::BadCorrectAnswer(_))));
        let mut v = manifest_json();
        v["correct_answer"] = serde_json::json!([6, 3, 1, 5, 4, null]);
        assert!(matches!(load(v), Err(ManifestError::BadCorrectAnswer(_))));
        let mut v = manifest_json();
        v["correct_answer"] = serde_json::json!([6, 3, 1, 5, 4, 6]);
        assert!(matches!(load(v), Err(ManifestError::BadCorrectAnswer(_))));
    }

    #[test]
    fn rejects_conditions_with_unknown_references() {
        let mut v = manifest_json();
        v["conditions"][0]["expr"] = "slot(9) = correct".into();
        assert!(matches!(load(v), Err(ManifestError::Condition { id: 1, .. })));
    }

    #[test]
    fn rejects_noncontiguous_condition_ids() {
        let mut v = manifest_json();
        v["conditions"][2]["id"] = 7.into();
        assert!(matches!(
            load(v),
            Err(ManifestError::ConditionIds { position: 3, found: 7 })
        ));
    }

    #[test]
    fn rejects_kind_mismatch() {
        let mut v = manifest_json();
        v["conditions"][0]["kind"] = "relational".into();
        assert!(matches!(load(v), Err(ManifestError::KindMismatch(1))));
    }

    #[test]
    fn rejects_unsatisfiable_correct_answer() {
        let mut v = manifest_json();
        v["conditions"][0]["expr"] = "slot(1) = elem(1)".into();
        assert!(matches!(
            load(v),
            Err(ManifestError::CorrectAnswerUnfulfilled { stage: 5, m: 6 })
        ));
    }

    #[test]
    fn rejects_missing_slot_roi() {
        let mut v = manifest_json();
        v["rois"][6]["slot"] = 2.into();
        assert!(matches!(load(v), Err(ManifestError::SlotRoiCount(1, 0))));
    }
}
