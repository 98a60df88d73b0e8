//! In-memory event log model and ingestion.
//!
//! An [`EventLog`] is a list of [`Case`]s, each holding its [`Event`]s in
//! timestamp order. Logs are built once (by [`parse_csv`], [`parse_xes`] or
//! [`EventLog::new`]) and never mutated afterwards; filtering produces a new
//! log.

mod csv_io;
mod timestamp;
mod xes;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{parse_csv, parse_csv_reader, write_csv, ColumnMapping, ParseWarning};
pub use timestamp::{parse_offset, TimestampFormat, DEFAULT_PATTERN};
pub use xes::{parse_xes, parse_xes_reader, write_xes};

/// UTC instant with millisecond precision.
pub type Timestamp = DateTime<Utc>;

pub type Attributes = BTreeMap<String, Scalar>;

/// Label of the artificial node preceding the first event of every case.
pub const START_LABEL: &str = "START";
/// Label of the artificial node following the last event of every case.
pub const END_LABEL: &str = "END";

pub fn is_reserved_label(label: &str) -> bool {
    label == START_LABEL || label == END_LABEL
}

/// Truncates an instant to whole milliseconds.
pub fn to_millis(ts: DateTime<Utc>) -> Timestamp {
    ts.trunc_subsecs(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Scalar {
    String(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Timestamp(Timestamp),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::String(s) => f.write_str(s),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x}"),
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Timestamp(ts) => {
                f.write_str(&ts.to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
            }
        }
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::String(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
    pub resource: Option<String>,
    pub attributes: Attributes,
}

impl Event {
    pub fn new(case_id: impl Into<String>, activity: impl AsRef<str>, timestamp: Timestamp) -> Self {
        Event {
            case_id: case_id.into(),
            activity: activity.as_ref().trim().to_owned(),
            timestamp: to_millis(timestamp),
            resource: None,
            attributes: Attributes::new(),
        }
    }

    pub fn with_resource(mut self, resource: impl Into<String>) -> Self {
        self.resource = Some(resource.into());
        self
    }
}

/// All events of one process instance, ordered by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    case_id: String,
    events: Vec<Event>,
    case_attributes: Attributes,
}

impl Case {
    /// Builds a case, sorting `events` by timestamp. Ties keep their input
    /// order.
    pub fn new(
        case_id: impl Into<String>,
        mut events: Vec<Event>,
        case_attributes: Attributes,
    ) -> Result<Self> {
        let case_id = case_id.into();
        let invalid = |reason: String| Error::InvalidCase {
            case_id: case_id.clone(),
            reason,
        };
        if events.is_empty() {
            return Err(invalid("case has no events".into()));
        }
        for event in &mut events {
            if event.case_id != case_id {
                return Err(invalid(format!(
                    "event belongs to case {:?}",
                    event.case_id
                )));
            }
            event.activity = event.activity.trim().to_owned();
            if event.activity.is_empty() {
                return Err(invalid("empty activity label".into()));
            }
            if is_reserved_label(&event.activity) {
                return Err(invalid(format!(
                    "activity label {:?} is reserved",
                    event.activity
                )));
            }
            event.timestamp = to_millis(event.timestamp);
        }
        events.sort_by_key(|e| e.timestamp);
        Ok(Case {
            case_id,
            events,
            case_attributes,
        })
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn case_attributes(&self) -> &Attributes {
        &self.case_attributes
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> + '_ {
        self.events.iter().map(|e| e.activity.as_str())
    }

    pub fn first_timestamp(&self) -> Timestamp {
        self.events[0].timestamp
    }

    pub fn last_timestamp(&self) -> Timestamp {
        self.events[self.events.len() - 1].timestamp
    }

    pub fn contains_activity(&self, activity: &str) -> bool {
        self.activities().any(|a| a == activity)
    }

    pub fn count_activity(&self, activity: &str) -> usize {
        self.activities().filter(|a| *a == activity).count()
    }
}

/// An immutable collection of cases. May be empty (e.g. after filtering),
/// in which case `time_span` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    cases: Vec<Case>,
    activity_alphabet: BTreeSet<String>,
    time_span: Option<(Timestamp, Timestamp)>,
}

impl EventLog {
    pub fn new(cases: Vec<Case>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cases.len());
        for case in &cases {
            if !seen.insert(case.case_id.as_str()) {
                return Err(Error::DuplicateCase(case.case_id.clone()));
            }
        }
        Ok(Self::from_checked(cases))
    }

    fn from_checked(cases: Vec<Case>) -> Self {
        let mut activity_alphabet = BTreeSet::new();
        let mut time_span: Option<(Timestamp, Timestamp)> = None;
        for case in &cases {
            for event in &case.events {
                if !activity_alphabet.contains(&event.activity) {
                    activity_alphabet.insert(event.activity.clone());
                }
            }
            let (first, last) = (case.first_timestamp(), case.last_timestamp());
            time_span = Some(match time_span {
                None => (first, last),
                Some((lo, hi)) => (lo.min(first), hi.max(last)),
            });
        }
        EventLog {
            cases,
            activity_alphabet,
            time_span,
        }
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn activity_alphabet(&self) -> &BTreeSet<String> {
        &self.activity_alphabet
    }

    pub fn time_span(&self) -> Option<(Timestamp, Timestamp)> {
        self.time_span
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn num_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn num_events(&self) -> usize {
        self.cases.iter().map(|c| c.events.len()).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> + '_ {
        self.cases.iter().flat_map(|c| c.events.iter())
    }

    pub fn case(&self, case_id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.case_id == case_id)
    }

    /// Sublog of the cases whose ids are in `keep`, in original order.
    pub fn retain_cases(&self, keep: &HashSet<&str>) -> EventLog {
        let cases = self
            .cases
            .iter()
            .filter(|c| keep.contains(c.case_id.as_str()))
            .cloned()
            .collect();
        Self::from_checked(cases)
    }

    pub fn into_cases(self) -> Vec<Case> {
        self.cases
    }
}

/// Case-level selection: all attribute equalities must hold and the first
/// event must fall in `[from, to)` when those bounds are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseFilter {
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default)]
    pub from: Option<Timestamp>,
    #[serde(default)]
    pub to: Option<Timestamp>,
}

impl CaseFilter {
    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty() && self.from.is_none() && self.to.is_none()
    }

    pub fn matches(&self, case: &Case) -> bool {
        let attrs_ok = self.attributes.iter().all(|(key, expected)| {
            case.case_attributes
                .get(key)
                .is_some_and(|v| v.to_string() == *expected)
        });
        let start = case.first_timestamp();
        attrs_ok
            && self.from.is_none_or(|from| start >= from)
            && self.to.is_none_or(|to| start < to)
    }
}

/// Returns the sublog of cases matching `filter`. The input is untouched.
pub fn filter_cases(log: &EventLog, filter: &CaseFilter) -> EventLog {
    for key in filter.attributes.keys() {
        if !log.cases.iter().any(|c| c.case_attributes.contains_key(key)) {
            log::warn!("filter attribute {key:?} is not present on any case");
        }
    }
    let cases = log
        .cases
        .iter()
        .filter(|c| filter.matches(c))
        .cloned()
        .collect();
    EventLog::from_checked(cases)
}
