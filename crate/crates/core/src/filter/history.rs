//! Observable event record: Y jumps and named defaults, with CSV I/O.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ObligorId, PortfolioState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("event time must be finite and positive, got {0}")]
    InvalidTime(f64),
    #[error("event times must be strictly increasing: {next} after {last}")]
    NonIncreasing { last: f64, next: f64 },
    #[error("event at {time} lies beyond the horizon {horizon}")]
    BeyondHorizon { time: f64, horizon: f64 },
    #[error("horizon must be finite and non-negative, got {0}")]
    InvalidHorizon(f64),
    #[error("obligor {0} defaults twice")]
    RepeatedDefault(ObligorId),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Portfolio(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    YJump,
    Default(ObligorId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Event {
    pub fn y_jump(time: f64) -> Self {
        Event {
            time,
            kind: EventKind::YJump,
        }
    }

    pub fn default(time: f64, obligor: ObligorId) -> Self {
        Event {
            time,
            kind: EventKind::Default(obligor),
        }
    }
}

/// Events observed on `(0, horizon]`, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct EventHistory {
    events: Vec<Event>,
    horizon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    time: f64,
    kind: String,
    obligor: Option<ObligorId>,
}

impl EventHistory {
    pub fn new(events: Vec<Event>, horizon: f64) -> Result<Self, HistoryError> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(HistoryError::InvalidHorizon(horizon));
        }
        let mut last = 0.0;
        let mut seen = Vec::new();
        for e in &events {
            if !(e.time > 0.0) || !e.time.is_finite() {
                return Err(HistoryError::InvalidTime(e.time));
            }
            if e.time <= last {
                return Err(HistoryError::NonIncreasing { last, next: e.time });
            }
            if e.time > horizon {
                return Err(HistoryError::BeyondHorizon {
                    time: e.time,
                    horizon,
                });
            }
            if let EventKind::Default(id) = e.kind {
                if seen.contains(&id) {
                    return Err(HistoryError::RepeatedDefault(id));
                }
                seen.push(id);
            }
            last = e.time;
        }
        Ok(EventHistory { events, horizon })
    }

    pub fn empty(horizon: f64) -> Result<Self, HistoryError> {
        Self::new(Vec::new(), horizon)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Events up to and including `t`, with horizon `t`.
    pub fn truncated(&self, t: f64) -> Result<Self, HistoryError> {
        let events = self.events.iter().copied().filter(|e| e.time <= t).collect();
        Self::new(events, t)
    }

    /// Same events, different horizon (must not cut any event off).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self, HistoryError> {
        Self::new(self.events.clone(), horizon)
    }

    pub fn y_jump_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::YJump).count()
    }

    /// Default record at the horizon for a `k`-name book.
    pub fn portfolio(&self, k: usize) -> Result<PortfolioState, HistoryError> {
        let mut p = PortfolioState::new(k)?;
        for e in &self.events {
            if let EventKind::Default(id) = e.kind {
                p.record_default(id, e.time)?;
            }
        }
        Ok(p)
    }

    /// Parses `time,kind,obligor` rows; `kind` is `yjump` or `default`.
    pub fn read_csv<R: Read>(reader: R, horizon: f64) -> Result<Self, HistoryError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut events = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec.map_err(|e| HistoryError::Csv {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            // header is line 1, so data rows start at line 2
            let line = events.len() as u64 + 2;
            let kind = match (row.kind.to_ascii_lowercase().as_str(), row.obligor) {
                ("yjump", None) => EventKind::YJump,
                ("default", Some(id)) => EventKind::Default(id),
                ("yjump", Some(_)) => {
                    return Err(HistoryError::Csv {
                        line,
                        message: "yjump rows must leave obligor empty".into(),
                    })
                }
                ("default", None) => {
                    return Err(HistoryError::Csv {
                        line,
                        message: "default rows need an obligor".into(),
                    })
                }
                (other, _) => {
                    return Err(HistoryError::Csv {
                        line,
                        message: format!("unknown event kind '{other}'"),
                    })
                }
            };
            events.push(Event { time: row.time, kind });
        }
        Self::new(events, horizon)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HistoryError> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.events {
            let (kind, obligor) = match e.kind {
                EventKind::YJump => ("yjump", None),
                EventKind::Default(id) => ("default", Some(id)),
            };
            w.serialize(Row {
                time: e.time,
                kind: kind.into(),
                obligor,
            })
            .map_err(|e| HistoryError::Io(e.to_string()))?;
        }
        if self.events.is_empty() {
            w.write_record(["time", "kind", "obligor"])
                .map_err(|e| HistoryError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| HistoryError::Io(e.to_string()))
    }
}
