//! The thirteen viability criteria, grouped into five perspectives.
//!
//! | perspective | criteria |
//! |---|---|
//! | task   | standardization, maturity, determinism, failure rate |
//! | time   | frequency, duration, urgency |
//! | data   | structuredness |
//! | system | interfaces, stability, number of systems |
//! | human  | resources, proneness to human error |
//!
//! Nine criteria are computed from the event log. Determinism,
//! structuredness, interfaces and stability need user-interface
//! interaction data that process-aware information systems do not record;
//! they are filled from [`AssessmentConfig::external_evidence`] or reported
//! as [`Status::NotEvaluable`].

mod config;
mod human;
mod system;
mod task;
mod time;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::EventLog;

pub use config::{AssessmentConfig, Bucket, BusinessHours, Evidence, Ramp};
pub use human::{eval_human_error_proneness, eval_resources};
pub use system::{eval_external, eval_number_of_systems, NO_UI_DATA_REASON};
pub use task::{
    compliance_sets, eval_failure_rate, eval_maturity, eval_standardization, ComplianceSets,
};
pub use time::{eval_duration, eval_frequency, eval_urgency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    Task,
    Time,
    Data,
    System,
    Human,
}

impl Perspective {
    pub const ALL: [Perspective; 5] = [
        Perspective::Task,
        Perspective::Time,
        Perspective::Data,
        Perspective::System,
        Perspective::Human,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Perspective::Task => "Task",
            Perspective::Time => "Time",
            Perspective::Data => "Data",
            Perspective::System => "System",
            Perspective::Human => "Human",
        }
    }
}

/// Declaration order is the framework order, so `Ord` sorts by
/// (perspective, criterion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    Standardization,
    Maturity,
    Determinism,
    FailureRate,
    Frequency,
    Duration,
    Urgency,
    Structuredness,
    Interfaces,
    Stability,
    NumberOfSystems,
    Resources,
    HumanErrorProneness,
}

impl CriterionId {
    pub const ALL: [CriterionId; 13] = [
        CriterionId::Standardization,
        CriterionId::Maturity,
        CriterionId::Determinism,
        CriterionId::FailureRate,
        CriterionId::Frequency,
        CriterionId::Duration,
        CriterionId::Urgency,
        CriterionId::Structuredness,
        CriterionId::Interfaces,
        CriterionId::Stability,
        CriterionId::NumberOfSystems,
        CriterionId::Resources,
        CriterionId::HumanErrorProneness,
    ];

    pub fn perspective(self) -> Perspective {
        use CriterionId::*;
        match self {
            Standardization | Maturity | Determinism | FailureRate => Perspective::Task,
            Frequency | Duration | Urgency => Perspective::Time,
            Structuredness => Perspective::Data,
            Interfaces | Stability | NumberOfSystems => Perspective::System,
            Resources | HumanErrorProneness => Perspective::Human,
        }
    }

    /// Criteria that cannot be derived from a process-level event log.
    pub fn is_external(self) -> bool {
        matches!(
            self,
            CriterionId::Determinism
                | CriterionId::Structuredness
                | CriterionId::Interfaces
                | CriterionId::Stability
        )
    }

    pub fn as_str(self) -> &'static str {
        use CriterionId::*;
        match self {
            Standardization => "standardization",
            Maturity => "maturity",
            Determinism => "determinism",
            FailureRate => "failure_rate",
            Frequency => "frequency",
            Duration => "duration",
            Urgency => "urgency",
            Structuredness => "structuredness",
            Interfaces => "interfaces",
            Stability => "stability",
            NumberOfSystems => "number_of_systems",
            Resources => "resources",
            HumanErrorProneness => "human_error_proneness",
        }
    }

    pub fn title(self) -> &'static str {
        use CriterionId::*;
        match self {
            Standardization => "Standardization",
            Maturity => "Maturity",
            Determinism => "Determinism",
            FailureRate => "Failure rate",
            Frequency => "Frequency",
            Duration => "Duration",
            Urgency => "Urgency",
            Structuredness => "Structuredness of data",
            Interfaces => "Interfaces",
            Stability => "Stability",
            NumberOfSystems => "Number of systems",
            Resources => "Resources",
            HumanErrorProneness => "Proneness to human error",
        }
    }

    /// Metric that feeds the normalized score.
    pub fn headline_metric(self) -> Option<&'static str> {
        use CriterionId::*;
        Some(match self {
            Standardization => "min_coverage",
            Maturity => "compliant_variant_share",
            FailureRate => "failure_rate",
            Frequency => "mean_per_bucket",
            Duration => "delta",
            Urgency => "out_of_hours_ratio",
            Resources => "n_distinct_users_on_activity",
            HumanErrorProneness => "human_error_rate",
            NumberOfSystems => "n_distinct_systems",
            Determinism | Structuredness | Interfaces | Stability => return None,
        })
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionId::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownCriterion(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Computed,
    External,
    NotEvaluable { reason: String },
}

pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion_id: CriterionId,
    pub perspective: Perspective,
    pub status: Status,
    pub metrics: Metrics,
    pub normalized_score: Option<f64>,
    pub narrative: String,
}

impl CriterionResult {
    pub(crate) fn computed(id: CriterionId, metrics: Metrics, narrative: String, config: &AssessmentConfig) -> Self {
        let normalized_score = id
            .headline_metric()
            .and_then(|m| metrics.get(m))
            .zip(config.ramp(id))
            .map(|(x, ramp)| ramp.apply(*x));
        CriterionResult {
            criterion_id: id,
            perspective: id.perspective(),
            status: Status::Computed,
            metrics,
            normalized_score,
            narrative,
        }
    }

    pub(crate) fn not_evaluable(id: CriterionId, reason: impl Into<String>, narrative: String) -> Self {
        CriterionResult {
            criterion_id: id,
            perspective: id.perspective(),
            status: Status::NotEvaluable {
                reason: reason.into(),
            },
            metrics: Metrics::new(),
            normalized_score: None,
            narrative,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn is_evaluable(&self) -> bool {
        !matches!(self.status, Status::NotEvaluable { .. })
    }
}

pub(crate) fn ensure_target(log: &EventLog, config: &AssessmentConfig) -> Result<()> {
    if log.activity_alphabet().contains(config.target_activity.as_str()) {
        Ok(())
    } else {
        Err(Error::UnknownActivity(config.target_activity.clone()))
    }
}

pub(crate) fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Evaluates all thirteen criteria for `config.target_activity`, in
/// framework order. The evaluators are independent and run on scoped
/// threads.
pub fn assess(log: &EventLog, config: &AssessmentConfig) -> Result<Vec<CriterionResult>> {
    config.validate()?;
    ensure_target(log, config)?;
    let results: Vec<Result<CriterionResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = CriterionId::ALL
            .into_iter()
            .map(|id| scope.spawn(move || evaluate(id, log, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion evaluator panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Evaluates a single criterion.
pub fn evaluate(id: CriterionId, log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    use CriterionId::*;
    match id {
        Standardization => eval_standardization(log, config),
        Maturity => eval_maturity(log, config, config.maturity_window),
        FailureRate => eval_failure_rate(log, config),
        Frequency => eval_frequency(log, config),
        Duration => eval_duration(log, config),
        Urgency => eval_urgency(log, config),
        Resources => eval_resources(log, config),
        HumanErrorProneness => eval_human_error_proneness(log, config),
        NumberOfSystems => eval_number_of_systems(log, config, &config.system_attribute),
        Determinism | Structuredness | Interfaces | Stability => eval_external(id, config),
    }
}
