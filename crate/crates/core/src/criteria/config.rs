use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, FixedOffset, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use super::CriterionId;
use crate::context::Node;
use crate::error::{Error, Result};
use crate::event_log::{is_reserved_label, Timestamp};

/// Everything an assessment of one activity needs besides the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentConfig {
    pub target_activity: String,
    /// Compliant predecessors. Derived from the `auto_predecessors` most
    /// frequent ones when absent.
    pub valid_predecessors: Option<BTreeSet<String>>,
    pub valid_successors: Option<BTreeSet<String>>,
    pub auto_predecessors: usize,
    pub auto_successors: usize,
    pub failure_terminal_activities: BTreeSet<String>,
    pub rework_counts_as_failure: bool,
    pub business_hours: BusinessHours,
    pub frequency_bucket: Bucket,
    pub maturity_window: Bucket,
    pub robot_resource_patterns: Vec<String>,
    /// Case (or event) attribute naming the source system.
    pub system_attribute: String,
    pub external_evidence: BTreeMap<CriterionId, Evidence>,
    /// Overrides of the default score ramps.
    pub normalization: BTreeMap<CriterionId, Ramp>,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        AssessmentConfig {
            target_activity: String::new(),
            valid_predecessors: None,
            valid_successors: None,
            auto_predecessors: 5,
            auto_successors: 2,
            failure_terminal_activities: BTreeSet::new(),
            rework_counts_as_failure: true,
            business_hours: BusinessHours::default(),
            frequency_bucket: Bucket::Day,
            maturity_window: Bucket::Month,
            robot_resource_patterns: Vec::new(),
            system_attribute: "(case) Source".into(),
            external_evidence: BTreeMap::new(),
            normalization: BTreeMap::new(),
        }
    }
}

impl AssessmentConfig {
    pub fn for_activity(activity: impl Into<String>) -> Self {
        AssessmentConfig {
            target_activity: activity.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let target = self.target_activity.trim();
        if target.is_empty() {
            return Err(Error::InvalidConfig("target_activity is empty".into()));
        }
        if is_reserved_label(target) {
            return Err(Error::InvalidConfig(format!(
                "target_activity {target:?} is a reserved label"
            )));
        }
        self.business_hours.validate()?;
        for set in [&self.valid_predecessors, &self.valid_successors].into_iter().flatten() {
            if set.is_empty() {
                return Err(Error::InvalidConfig("valid predecessor/successor sets must not be empty".into()));
            }
        }
        if self.auto_predecessors == 0 || self.auto_successors == 0 {
            return Err(Error::InvalidConfig("auto_predecessors/auto_successors must be positive".into()));
        }
        for (id, ev) in &self.external_evidence {
            if !id.is_external() {
                return Err(Error::InvalidConfig(format!(
                    "external evidence given for {id}, which is computed from the log"
                )));
            }
            if !(0.0..=1.0).contains(&ev.value) {
                return Err(Error::InvalidConfig(format!(
                    "external evidence for {id} must lie in [0, 1], got {}",
                    ev.value
                )));
            }
        }
        for (id, ramp) in &self.normalization {
            if !ramp.zero_at.is_finite() || !ramp.one_at.is_finite() || ramp.zero_at == ramp.one_at {
                return Err(Error::InvalidConfig(format!(
                    "normalization for {id}: zero_at and one_at must be finite and distinct"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn valid_set(&self, configured: &Option<BTreeSet<String>>) -> Option<BTreeSet<Node>> {
        configured
            .as_ref()
            .map(|s| s.iter().map(|l| Node::from(l.as_str())).collect())
    }

    pub fn is_robot(&self, resource: &str) -> bool {
        let resource = resource.to_lowercase();
        self.robot_resource_patterns
            .iter()
            .any(|p| !p.is_empty() && resource.contains(&p.to_lowercase()))
    }

    pub fn ramp(&self, id: CriterionId) -> Option<Ramp> {
        self.normalization
            .get(&id)
            .copied()
            .or_else(|| Ramp::default_for(id, self.frequency_bucket))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub value: f64,
    #[serde(default)]
    pub note: String,
}

/// Piecewise-linear map of a metric onto `[0, 1]`: `zero_at` scores 0,
/// `one_at` scores 1, linear in between, clamped outside. `one_at` may be
/// below `zero_at` for metrics where less is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ramp {
    pub zero_at: f64,
    pub one_at: f64,
}

impl Ramp {
    pub const fn new(zero_at: f64, one_at: f64) -> Self {
        Ramp { zero_at, one_at }
    }

    pub fn apply(&self, x: f64) -> f64 {
        ((x - self.zero_at) / (self.one_at - self.zero_at)).clamp(0.0, 1.0)
    }

    pub fn default_for(id: CriterionId, bucket: Bucket) -> Option<Ramp> {
        use CriterionId::*;
        Some(match id {
            Standardization | Maturity => Ramp::new(0.5, 1.0),
            FailureRate => Ramp::new(0.2, 0.0),
            Frequency => Ramp::new(
                0.0,
                match bucket {
                    Bucket::Day => 20.0,
                    Bucket::Week => 100.0,
                    Bucket::Month => 400.0,
                },
            ),
            Duration => Ramp::new(0.0, 30.0),
            Urgency => Ramp::new(0.0, 0.5),
            Resources => Ramp::new(1.0, 50.0),
            HumanErrorProneness => Ramp::new(0.0, 0.2),
            NumberOfSystems => Ramp::new(0.0, 3.0),
            Determinism | Structuredness | Interfaces | Stability => return None,
        })
    }
}

/// Calendar bucket for frequency counts and maturity windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Day,
    Week,
    Month,
}

impl Bucket {
    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Day => "day",
            Bucket::Week => "week",
            Bucket::Month => "month",
        }
    }

    /// First day of the bucket containing `date`. Weeks start on Monday.
    pub fn start_of(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => date - chrono::Duration::days(date.weekday().num_days_from_monday() as i64),
            Bucket::Month => date.with_day(1).unwrap(),
        }
    }

    pub fn next(self, start: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => start.succ_opt().unwrap(),
            Bucket::Week => start + chrono::Duration::days(7),
            Bucket::Month => start.checked_add_months(chrono::Months::new(1)).unwrap(),
        }
    }

    /// Bucket starts from the bucket holding `first` to the one holding `last`.
    pub fn range(self, first: NaiveDate, last: NaiveDate) -> Vec<NaiveDate> {
        let mut out = Vec::new();
        let mut cur = self.start_of(first);
        let end = self.start_of(last);
        while cur <= end {
            out.push(cur);
            cur = self.next(cur);
        }
        out
    }
}

impl std::str::FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "day" => Ok(Bucket::Day),
            "week" => Ok(Bucket::Week),
            "month" => Ok(Bucket::Month),
            other => Err(Error::InvalidConfig(format!("unknown bucket {other:?}"))),
        }
    }
}

/// Working window: weekdays plus a daily `[start, end)` clock range in a
/// fixed UTC offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusinessHours {
    pub weekdays: Vec<Weekday>,
    #[serde(with = "clock")]
    pub start: NaiveTime,
    #[serde(with = "clock")]
    pub end: NaiveTime,
    pub utc_offset: String,
}

impl Default for BusinessHours {
    fn default() -> Self {
        BusinessHours {
            weekdays: vec![
                Weekday::Mon,
                Weekday::Tue,
                Weekday::Wed,
                Weekday::Thu,
                Weekday::Fri,
            ],
            start: NaiveTime::from_hms_opt(8, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
            utc_offset: "+00:00".into(),
        }
    }
}

impl BusinessHours {
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidConfig(format!(
                "business hours start {} must precede end {}",
                self.start, self.end
            )));
        }
        self.offset().map(|_| ())
    }

    pub fn offset(&self) -> Result<FixedOffset> {
        crate::event_log::parse_offset(&self.utc_offset)
    }

    /// Whether `ts` falls inside the window. `offset` is `self.offset()`,
    /// passed in so hot loops parse it once.
    pub fn contains(&self, ts: Timestamp, offset: FixedOffset) -> bool {
        let local = ts.with_timezone(&offset);
        let time = local.time();
        self.weekdays.contains(&local.weekday()) && time >= self.start && time < self.end
    }
}

mod clock {
    use chrono::NaiveTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format("%H:%M").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveTime::parse_from_str(&raw, "%H:%M")
            .or_else(|_| NaiveTime::parse_from_str(&raw, "%H:%M:%S"))
            .map_err(|_| serde::de::Error::custom(format!("invalid clock time {raw:?}, expected HH:MM")))
    }
}
