//! Intermediate answers: the slot-assignment vector a student has built so far.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a draggable element (a digit card, a name tag, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Contents of every answer slot, `None` for an empty slot.
///
/// Ordering is lexicographic over the slot vector with an empty slot sorting
/// before any element; rankings use it as their final tie-break.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntermediateAnswer {
    slots: Vec<Option<ElementId>>,
}

impl IntermediateAnswer {
    pub fn empty(slot_count: usize) -> Self {
        Self {
            slots: vec![None; slot_count],
        }
    }

    pub fn from_slots(slots: Vec<Option<ElementId>>) -> Self {
        Self { slots }
    }

    /// Shorthand used heavily by tests: `0` marks an empty slot.
    pub fn from_digits(digits: &[u32]) -> Self {
        Self {
            slots: digits
                .iter()
                .map(|&d| (d != 0).then_some(ElementId(d)))
                .collect(),
        }
    }

    pub fn slots(&self) -> &[Option<ElementId>] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Zero-based slot lookup.
    pub fn get(&self, slot: usize) -> Option<ElementId> {
        self.slots.get(slot).copied().flatten()
    }

    pub fn set(&mut self, slot: usize, element: Option<ElementId>) {
        self.slots[slot] = element;
    }

    /// Zero-based slot holding `element`, if placed.
    pub fn position_of(&self, element: ElementId) -> Option<usize> {
        self.slots.iter().position(|s| *s == Some(element))
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    pub fn filled(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// True when no element occupies two slots.
    pub fn is_injective(&self) -> bool {
        let mut seen: Vec<ElementId> = self.slots.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

impl fmt::Display for IntermediateAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, slot) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match slot {
                Some(e) => write!(f, "{e}")?,
                None => f.write_str("∅")?,
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_marks_empty_slots() {
        let a = IntermediateAnswer::from_digits(&[6, 0, 0, 5, 0, 0]);
        assert_eq!(a.to_string(), "(6,∅,∅,5,∅,∅)");
    }

    #[test]
    fn serializes_as_array_with_nulls() {
        let a = IntermediateAnswer::from_digits(&[6, 0, 3]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[6,null,3]");
        let back: IntermediateAnswer = serde_json::from_str("[6,null,3]").unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn empty_sorts_before_placed() {
        let a = IntermediateAnswer::from_digits(&[0, 1]);
        let b = IntermediateAnswer::from_digits(&[1, 0]);
        assert!(a < b);
    }

    #[test]
    fn injectivity() {
        assert!(IntermediateAnswer::from_digits(&[1, 2, 0, 0]).is_injective());
        assert!(!IntermediateAnswer::from_digits(&[1, 2, 1, 0]).is_injective());
    }
}
