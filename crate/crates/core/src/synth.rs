//! Synthetic event logs for demos and load tests.
//!
//! Each simulated student follows one of three behaviours: the intended
//! solution order, a greedy fill that tends to put the highest-valued card
//! into the next free slot (and is sometimes repaired afterwards by
//! exchanges), or a random walk over legal drags.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{ElementId, IntermediateAnswer};
use crate::ingest::{EventKind, RawEvent};
use crate::manifest::{QuestionManifest, RoiBox};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("behaviour probabilities must be non-negative and sum to 1 (got {0})")]
    BehaviorMix(f64),
    #[error("grade weights must name grades 1..=12 with positive total weight")]
    Grades,
    #[error("think time needs a positive median and a non-negative sigma")]
    ThinkTime,
    #[error("manifest has no ROI for {0}")]
    MissingRoi(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMix {
    pub intended: f64,
    pub greedy: f64,
    pub random_walk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinkTime {
    pub median_ms: f64,
    /// Log-space standard deviation.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub students: usize,
    pub sessions_per_student: usize,
    /// Grade -> relative weight.
    pub grades: BTreeMap<u8, f64>,
    pub behavior: BehaviorMix,
    pub think_time: ThinkTime,
    /// Cap on drags per session.
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            students: 100,
            sessions_per_student: 1,
            grades: (2..=6).map(|g| (g, 1.0)).collect(),
            behavior: BehaviorMix {
                intended: 0.4,
                greedy: 0.35,
                random_walk: 0.25,
            },
            think_time: ThinkTime {
                median_ms: 2500.0,
                sigma: 0.6,
            },
            max_steps: 30,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let b = self.behavior;
        let sum = b.intended + b.greedy + b.random_walk;
        if [b.intended, b.greedy, b.random_walk].iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::BehaviorMix(sum));
        }
        let total: f64 = self.grades.values().sum();
        if self.grades.is_empty()
            || !(total > 0.0)
            || self.grades.iter().any(|(g, w)| !(1..=12).contains(g) || *w < 0.0)
        {
            return Err(SynthError::Grades);
        }
        if !(self.think_time.median_ms > 0.0) || !(self.think_time.sigma >= 0.0) {
            return Err(SynthError::ThinkTime);
        }
        Ok(())
    }
}

/// Speed of a simulated drag, px per ms.
const DRAG_SPEED: f64 = 1.5;
const MOVE_INTERVAL_MS: i64 = 20;
/// Chance a greedy student notices the mistake and repairs it.
const REPAIR_CHANCE: f64 = 0.3;
/// Chance a greedy student picks the best remaining card.
const GREEDY_BEST: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Drag {
    Place { element: ElementId, slot: usize },
    Exchange { from: usize, to: usize },
    Remove { slot: usize },
}

struct Sim<'a> {
    manifest: &'a QuestionManifest,
    rng: ChaCha8Rng,
    think: LogNormal<f64>,
}

impl Sim<'_> {
    fn order_by_value(&self) -> Vec<ElementId> {
        let mut elements: Vec<(f64, ElementId)> = self.manifest.elements.iter().map(|e| (e.value, e.id)).collect();
        elements.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        elements.into_iter().map(|(_, id)| id).collect()
    }

    fn greedy_fill(&mut self, answer: &IntermediateAnswer, best: f64) -> Vec<Drag> {
        let mut remaining: Vec<ElementId> = self
            .order_by_value()
            .into_iter()
            .filter(|e| answer.position_of(*e).is_none())
            .collect();
        let mut drags = Vec::new();
        for slot in 0..answer.len() {
            if answer.get(slot).is_some() || remaining.is_empty() {
                continue;
            }
            let i = if self.rng.random::<f64>() < best {
                0
            } else {
                self.rng.random_range(0..remaining.len())
            };
            drags.push(Drag::Place {
                element: remaining.remove(i),
                slot,
            });
        }
        drags
    }

    fn greedy(&mut self) -> Vec<Drag> {
        let m = self.manifest;
        let mut answer = m.empty_answer();
        let mut drags = self.greedy_fill(&answer, GREEDY_BEST);
        for d in &drags {
            answer = apply(&answer, *d);
        }
        if self.rng.random::<f64>() >= REPAIR_CHANCE {
            return drags;
        }
        for slot in 0..answer.len() {
            let want = m.correct_answer.get(slot);
            if answer.get(slot) == want {
                continue;
            }
            let drag = match want.and_then(|e| answer.position_of(e)) {
                Some(from) => Drag::Exchange { from, to: slot },
                None => match want {
                    Some(element) => Drag::Place { element, slot },
                    None => Drag::Remove { slot },
                },
            };
            answer = apply(&answer, drag);
            drags.push(drag);
        }
        drags
    }

    /// Places the solution steps in order, then the remaining correct cards.
    fn intended(&mut self) -> Vec<Drag> {
        let m = self.manifest;
        let mut drags = Vec::new();
        let mut answer = m.empty_answer();
        let mut targets = m.solution_steps.clone().unwrap_or_default();
        targets.push(m.correct_answer.clone());
        for target in targets {
            for slot in 0..target.len() {
                if let Some(element) = target.get(slot) {
                    if answer.get(slot) != Some(element) {
                        let d = Drag::Place { element, slot };
                        answer = apply(&answer, d);
                        drags.push(d);
                    }
                }
            }
        }
        drags
    }

    fn random_walk(&mut self, max_steps: usize) -> Vec<Drag> {
        let n = self.manifest.slot_count;
        let elements: Vec<ElementId> = self.manifest.elements.iter().map(|e| e.id).collect();
        let mut answer = self.manifest.empty_answer();
        let mut drags = Vec::new();
        while drags.len() < max_steps {
            if answer.filled() == n.min(elements.len()) && self.rng.random::<f64>() < 0.35 {
                break;
            }
            let slot = self.rng.random_range(0..n);
            let roll = self.rng.random::<f64>();
            let drag = if roll < 0.6 || answer.filled() < 2 {
                Drag::Place {
                    element: *elements.choose(&mut self.rng).expect("manifest has elements"),
                    slot,
                }
            } else if roll < 0.9 {
                Drag::Exchange {
                    from: self.rng.random_range(0..n),
                    to: slot,
                }
            } else {
                Drag::Remove { slot }
            };
            let next = apply(&answer, drag);
            if next != answer {
                answer = next;
                drags.push(drag);
            }
        }
        drags
    }

    fn point_in(&mut self, roi: &RoiBox) -> (i32, i32) {
        let inset = |lo: i32, hi: i32| if hi - lo > 4 { (lo + 2, hi - 2) } else { (lo, hi) };
        let (x0, x1) = inset(roi.x0, roi.x1);
        let (y0, y1) = inset(roi.y0, roi.y1);
        (self.rng.random_range(x0..=x1), self.rng.random_range(y0..=y1))
    }

    fn rois_of(&self, drag: Drag, answer: &IntermediateAnswer) -> Result<(&RoiBox, &RoiBox), SynthError> {
        let m = self.manifest;
        let slot_roi = |s: usize| m.slot_roi(s + 1).ok_or_else(|| SynthError::MissingRoi(format!("slot {}", s + 1)));
        let source_roi = |e: ElementId| m.source_roi(e).ok_or_else(|| SynthError::MissingRoi(format!("element {e}")));
        Ok(match drag {
            Drag::Place { element, slot } => (source_roi(element)?, slot_roi(slot)?),
            Drag::Exchange { from, to } => (slot_roi(from)?, slot_roi(to)?),
            Drag::Remove { slot } => {
                let e = answer.get(slot).expect("removal targets a filled slot");
                (slot_roi(slot)?, source_roi(e)?)
            }
        })
    }

    fn session_events(&mut self, drags: &[Drag]) -> Result<Vec<(i64, i32, i32, EventKind)>, SynthError> {
        let mut out = Vec::new();
        let mut t: i64 = 0;
        let mut answer = self.manifest.empty_answer();
        out.push((t, 0, 0, EventKind::Move));
        for &drag in drags {
            let (from, to) = self.rois_of(drag, &answer)?;
            let (from, to) = (*from, *to);
            t += (self.think.sample(&mut self.rng).round() as i64).max(MOVE_INTERVAL_MS);
            let a = self.point_in(&from);
            let b = self.point_in(&to);
            out.push((t, a.0, a.1, EventKind::Down));
            let dist = f64::from(b.0 - a.0).hypot(f64::from(b.1 - a.1));
            let duration = ((dist / DRAG_SPEED).ceil() as i64).max(MOVE_INTERVAL_MS);
            let moves = duration / MOVE_INTERVAL_MS;
            for k in 1..moves {
                let f = k as f64 / moves as f64;
                let x = a.0 + (f64::from(b.0 - a.0) * f).round() as i32;
                let y = a.1 + (f64::from(b.1 - a.1) * f).round() as i32;
                out.push((t + k * MOVE_INTERVAL_MS, x, y, EventKind::Move));
            }
            t += moves * MOVE_INTERVAL_MS;
            out.push((t, b.0, b.1, EventKind::Up));
            answer = apply(&answer, drag);
        }
        Ok(out)
    }
}

fn apply(answer: &IntermediateAnswer, drag: Drag) -> IntermediateAnswer {
    let mut next = answer.clone();
    match drag {
        Drag::Place { element, slot } => {
            if let Some(old) = next.position_of(element) {
                next.set(old, None);
            }
            next.set(slot, Some(element));
        }
        Drag::Exchange { from, to } => {
            let (a, b) = (next.get(from), next.get(to));
            if a.is_some() {
                next.set(from, b);
                next.set(to, a);
            }
        }
        Drag::Remove { slot } => next.set(slot, None),
    }
    next
}

/// Generates a log for `manifest`. Same config, same bytes.
pub fn generate(manifest: &QuestionManifest, config: &SynthConfig) -> Result<Vec<RawEvent>, SynthError> {
    config.validate()?;
    let think = LogNormal::new(config.think_time.median_ms.ln(), config.think_time.sigma)
        .map_err(|_| SynthError::ThinkTime)?;
    let grades: Vec<u8> = config.grades.keys().copied().collect();
    let grade_dist = WeightedIndex::new(config.grades.values()).map_err(|_| SynthError::Grades)?;
    let b = config.behavior;
    let behavior_dist = WeightedIndex::new([b.intended, b.greedy, b.random_walk])
        .map_err(|_| SynthError::BehaviorMix(b.intended + b.greedy + b.random_walk))?;
    let mut sim = Sim {
        manifest,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        think,
    };

    let mut events = Vec::new();
    for student in 0..config.students {
        let student_id = format!("u{student:05}");
        let grade = grades[grade_dist.sample(&mut sim.rng)];
        for k in 0..config.sessions_per_student {
            let mut drags = match behavior_dist.sample(&mut sim.rng) {
                0 => sim.intended(),
                1 => sim.greedy(),
                _ => sim.random_walk(config.max_steps),
            };
            drags.truncate(config.max_steps);
            let session_id = format!("{}-{student_id}-{k}", manifest.question_id);
            for (t, x, y, kind) in sim.session_events(&drags)? {
                events.push(RawEvent {
                    session_id: session_id.clone(),
                    student_id: student_id.clone(),
                    question_id: manifest.question_id.clone(),
                    grade,
                    t,
                    x,
                    y,
                    kind,
                });
            }
        }
    }
    Ok(events)
}

/// Writes events as JSON lines.
pub fn write_log(events: &[RawEvent], mut out: impl Write) -> Result<(), SynthError> {
    for e in events {
        serde_json::to_writer(&mut out, e).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
