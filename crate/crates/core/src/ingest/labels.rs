use std::fmt::Write as _;

use crate::EventClass;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LabelError {
    #[error("line {line}: expected 'start stop class'")]
    Syntax { line: usize },
    #[error("line {line}: unknown class '{class}'")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: span {start}..{stop} is empty or negative")]
    NegativeSpan { line: usize, start: f64, stop: f64 },
    #[error("events {first:?} and {second:?} overlap")]
    Overlap { first: (f64, f64), second: (f64, f64) },
    #[error("event ending at {stop} s exceeds recording duration {duration} s")]
    PastEnd { stop: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelEvent {
    pub start_s: f64,
    pub stop_s: f64,
    pub class: EventClass,
}

impl LabelEvent {
    pub fn overlap(&self, start_s: f64, stop_s: f64) -> f64 {
        (self.stop_s.min(stop_s) - self.start_s.max(start_s)).max(0.0)
    }
}

/// Sorted, non-overlapping class spans for one recording.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSet {
    pub recording_id: String,
    events: Vec<LabelEvent>,
}

impl LabelSet {
    /// Sorts and validates `events`.
    pub fn new(recording_id: impl Into<String>, mut events: Vec<LabelEvent>) -> Result<Self, LabelError> {
        for (i, e) in events.iter().enumerate() {
            if !(e.start_s >= 0.0 && e.start_s < e.stop_s) {
                return Err(LabelError::NegativeSpan {
                    line: i + 1,
                    start: e.start_s,
                    stop: e.stop_s,
                });
            }
        }
        events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for pair in events.windows(2) {
            if pair[1].start_s < pair[0].stop_s {
                return Err(LabelError::Overlap {
                    first: (pair[0].start_s, pair[0].stop_s),
                    second: (pair[1].start_s, pair[1].stop_s),
                });
            }
        }
        Ok(LabelSet {
            recording_id: recording_id.into(),
            events,
        })
    }

    pub fn events(&self) -> &[LabelEvent] {
        &self.events
    }

    /// Checks that every event ends within a recording of `duration_s`.
    pub fn check_duration(&self, duration_s: f64) -> Result<(), LabelError> {
        match self.events.last() {
            Some(e) if e.stop_s > duration_s + 1e-9 => Err(LabelError::PastEnd {
                stop: e.stop_s,
                duration: duration_s,
            }),
            _ => Ok(()),
        }
    }

    /// Class with the largest overlap with `[start_s, stop_s)`, if any
    /// event overlaps it. Ties go to the earlier event.
    pub fn majority_class(&self, start_s: f64, stop_s: f64) -> Option<EventClass> {
        let mut best: Option<(f64, EventClass)> = None;
        for e in &self.events {
            let ov = e.overlap(start_s, stop_s);
            if ov > 0.0 && best.is_none_or(|(b, _)| ov > b) {
                best = Some((ov, e.class));
            }
        }
        best.map(|(_, c)| c)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{} {} {}", e.start_s, e.stop_s, e.class);
        }
        out
    }
}

/// Parses the three-column label format. Lines starting with `#` and blank
/// lines are ignored.
pub fn parse_labels(text: &str) -> Result<LabelSet, LabelError> {
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(LabelError::Syntax { line });
        }
        let start: f64 = cols[0].parse().map_err(|_| LabelError::Syntax { line })?;
        let stop: f64 = cols[1].parse().map_err(|_| LabelError::Syntax { line })?;
        let class: EventClass = cols[2].parse().map_err(|class| LabelError::UnknownClass { line, class })?;
        if !(start >= 0.0 && start < stop) {
            return Err(LabelError::NegativeSpan { line, start, stop });
        }
        events.push(LabelEvent {
            start_s: start,
            stop_s: stop,
            class,
        });
    }
    LabelSet::new("", events)
}
