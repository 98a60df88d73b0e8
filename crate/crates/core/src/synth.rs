//! Synthetic event logs with a ground-truth ledger.
//!
//! Every quantity in the [`GroundTruthLedger`] is counted while the log is
//! emitted, so evaluators can be checked against it for exact equality
//! instead of statistical tolerance.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::BusinessHours;
use crate::error::{Error, Result};
use crate::event_log::{
    is_reserved_label, write_csv, write_xes, Attributes, Case, Event, EventLog, Scalar, Timestamp,
    END_LABEL, START_LABEL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantTemplate {
    pub activities: Vec<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GapDistribution {
    Fixed { ms: i64 },
    Uniform { min_ms: i64, max_ms: i64 },
}

impl GapDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        match *self {
            GapDistribution::Fixed { ms } => ms,
            GapDistribution::Uniform { min_ms, max_ms } => rng.gen_range(min_ms..=max_ms),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartWindow {
    pub from: Timestamp,
    pub to: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_cases: usize,
    pub variant_templates: Vec<VariantTemplate>,
    pub target_activity: String,
    pub failure_terminal_activity: String,
    /// Chance that a case containing the target repeats it.
    pub rework_probability: f64,
    /// Chance that a non-reworked target case ends in the failure activity.
    pub terminal_failure_probability: f64,
    pub user_pool: Vec<String>,
    pub robot_pool: Vec<String>,
    pub robot_user_share: f64,
    pub out_of_hours_share: f64,
    pub business_hours: BusinessHours,
    pub inter_event_gap: GapDistribution,
    pub start_window: StartWindow,
    pub system_attribute: String,
    /// Source systems assigned uniformly per case; empty for none.
    pub system_ids: Vec<String>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_cases: 100,
            variant_templates: vec![VariantTemplate {
                activities: vec!["Create".into(), "Change Quantity".into(), "Approve".into()],
                probability: 1.0,
            }],
            target_activity: "Change Quantity".into(),
            failure_terminal_activity: "Delete Purchase Order Item".into(),
            rework_probability: 0.0,
            terminal_failure_probability: 0.0,
            user_pool: vec!["user_000".into()],
            robot_pool: vec!["batch_job".into()],
            robot_user_share: 0.0,
            out_of_hours_share: 0.0,
            business_hours: BusinessHours::default(),
            inter_event_gap: GapDistribution::Uniform {
                min_ms: 60_000,
                max_ms: 3 * 86_400_000,
            },
            start_window: StartWindow {
                from: Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap(),
                to: Utc.with_ymd_and_hms(2018, 12, 31, 0, 0, 0).unwrap(),
            },
            system_attribute: "(case) Source".into(),
            system_ids: Vec::new(),
            seed: 0,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        field,
        reason: reason.into(),
    }
}

fn check_probability(field: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(field, format!("{p} is not a probability")))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 {
            return Err(invalid("n_cases", "must be positive"));
        }
        let check_label = |field: &'static str, label: &str| -> Result<()> {
            if label.trim().is_empty() || label.trim() != label {
                return Err(invalid(field, format!("label {label:?} is empty or padded")));
            }
            if is_reserved_label(label) {
                return Err(invalid(field, format!("label {label:?} is reserved")));
            }
            Ok(())
        };
        check_label("target_activity", &self.target_activity)?;
        check_label("failure_terminal_activity", &self.failure_terminal_activity)?;
        if self.target_activity == self.failure_terminal_activity {
            return Err(invalid("failure_terminal_activity", "must differ from the target"));
        }
        if self.variant_templates.is_empty() {
            return Err(invalid("variant_templates", "at least one template required"));
        }
        let mut total = 0.0;
        for t in &self.variant_templates {
            check_probability("variant_templates", t.probability)?;
            total += t.probability;
            if t.activities.is_empty() {
                return Err(invalid("variant_templates", "empty activity sequence"));
            }
            for a in &t.activities {
                check_label("variant_templates", a)?;
                if *a == self.failure_terminal_activity {
                    return Err(invalid(
                        "variant_templates",
                        "templates must not contain the failure terminal activity",
                    ));
                }
            }
            if t.activities.iter().filter(|a| **a == self.target_activity).count() > 1 {
                return Err(invalid(
                    "variant_templates",
                    "templates may contain the target at most once; rework is planted",
                ));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("variant_templates", format!("probabilities sum to {total}")));
        }
        check_probability("rework_probability", self.rework_probability)?;
        check_probability("terminal_failure_probability", self.terminal_failure_probability)?;
        check_probability("robot_user_share", self.robot_user_share)?;
        check_probability("out_of_hours_share", self.out_of_hours_share)?;
        if self.robot_user_share < 1.0 && self.user_pool.is_empty() {
            return Err(invalid("user_pool", "empty while human executions are possible"));
        }
        if self.robot_user_share > 0.0 && self.robot_pool.is_empty() {
            return Err(invalid("robot_pool", "empty while robot executions are possible"));
        }
        match self.inter_event_gap {
            GapDistribution::Fixed { ms } if ms < 1 => {
                return Err(invalid("inter_event_gap", "gap must be at least 1 ms"))
            }
            GapDistribution::Uniform { min_ms, max_ms } if min_ms < 1 || max_ms < min_ms => {
                return Err(invalid("inter_event_gap", "need 1 <= min_ms <= max_ms"))
            }
            _ => {}
        }
        if self.start_window.from > self.start_window.to {
            return Err(invalid("start_window", "from is after to"));
        }
        self.business_hours
            .validate()
            .map_err(|e| invalid("business_hours", e.to_string()))?;
        if self.out_of_hours_share < 1.0 && self.business_hours.weekdays.is_empty() {
            return Err(invalid("business_hours", "no weekdays, in-hours executions impossible"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantCount {
    pub sequence: Vec<String>,
    pub count: usize,
    /// Earliest start among the variant's cases.
    pub first_start: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub from: String,
    pub to: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRef {
    pub case_id: String,
    pub position: usize,
}

/// Ground truth recorded while generating a synthetic log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLedger {
    pub seed: u64,
    pub target_activity: String,
    pub failure_terminal_activity: String,
    pub n_cases: usize,
    pub n_events: usize,
    pub first_timestamp: Timestamp,
    pub last_timestamp: Timestamp,
    pub variant_counts: Vec<VariantCount>,
    pub dfg_pairs: Vec<PairCount>,
    pub cases_with_target: BTreeSet<String>,
    pub rework_cases: BTreeSet<String>,
    pub terminal_failure_cases: BTreeSet<String>,
    pub target_executions: usize,
    /// Target executions per local calendar day (business-hours offset).
    pub target_per_day: BTreeMap<NaiveDate, usize>,
    pub out_of_hours_events: BTreeSet<EventRef>,
    pub target_executions_by_resource: BTreeMap<String, usize>,
    pub robot_target_executions: usize,
    /// Distinct resources over all events of each case containing the target.
    pub resources_per_target_case: BTreeMap<String, usize>,
    pub case_throughput_ms: BTreeMap<String, i64>,
    pub systems_on_target_cases: BTreeSet<String>,
}

struct Clock<'a> {
    hours: &'a BusinessHours,
    offset: FixedOffset,
}

impl Clock<'_> {
    fn local(&self, t: Timestamp) -> NaiveDateTime {
        t.with_timezone(&self.offset).naive_local()
    }

    fn utc(&self, local: NaiveDateTime) -> Timestamp {
        self.offset
            .from_local_datetime(&local)
            .single()
            .expect("fixed offsets are unambiguous")
            .with_timezone(&Utc)
    }

    fn working(&self, local: NaiveDateTime) -> bool {
        let time = local.time();
        self.hours.weekdays.contains(&local.weekday()) && self.hours.start <= time && time < self.hours.end
    }

    /// Earliest instant at or after `t` inside the working window.
    fn next_working(&self, t: Timestamp) -> Timestamp {
        let local = self.local(t);
        if self.working(local) {
            return t;
        }
        let mut day = local.date();
        if self.hours.weekdays.contains(&day.weekday()) && local.time() < self.hours.start {
            return self.utc(day.and_time(self.hours.start));
        }
        for _ in 0..7 {
            day = day.succ_opt().unwrap();
            if self.hours.weekdays.contains(&day.weekday()) {
                return self.utc(day.and_time(self.hours.start));
            }
        }
        unreachable!("validated: at least one working weekday")
    }

    /// Earliest instant at or after `t` outside the working window.
    fn next_off(&self, t: Timestamp) -> Timestamp {
        let local = self.local(t);
        if self.working(local) {
            self.utc(local.date().and_time(self.hours.end))
        } else {
            t
        }
    }
}

/// Generates a log and its ledger. Pure function of `spec`.
pub fn generate(spec: &SynthSpec) -> Result<(EventLog, GroundTruthLedger)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clock = Clock {
        hours: &spec.business_hours,
        offset: spec.business_hours.offset()?,
    };
    let target = spec.target_activity.as_str();
    let window_ms = (spec.start_window.to - spec.start_window.from).num_milliseconds();

    let mut variants: BTreeMap<Vec<String>, (usize, Timestamp)> = BTreeMap::new();
    let mut pairs: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut ledger = GroundTruthLedger {
        seed: spec.seed,
        target_activity: spec.target_activity.clone(),
        failure_terminal_activity: spec.failure_terminal_activity.clone(),
        n_cases: 0,
        n_events: 0,
        first_timestamp: spec.start_window.from,
        last_timestamp: spec.start_window.from,
        variant_counts: Vec::new(),
        dfg_pairs: Vec::new(),
        cases_with_target: BTreeSet::new(),
        rework_cases: BTreeSet::new(),
        terminal_failure_cases: BTreeSet::new(),
        target_executions: 0,
        target_per_day: BTreeMap::new(),
        out_of_hours_events: BTreeSet::new(),
        target_executions_by_resource: BTreeMap::new(),
        robot_target_executions: 0,
        resources_per_target_case: BTreeMap::new(),
        case_throughput_ms: BTreeMap::new(),
        systems_on_target_cases: BTreeSet::new(),
    };
    let mut first_ts: Option<Timestamp> = None;
    let mut last_ts: Option<Timestamp> = None;
    let mut cases = Vec::with_capacity(spec.n_cases);

    for i in 0..spec.n_cases {
        let case_id = format!("case_{i:06}");

        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let template = spec
            .variant_templates
            .iter()
            .find(|t| {
                acc += t.probability;
                draw < acc
            })
            .unwrap_or_else(|| spec.variant_templates.last().unwrap());
        let mut sequence = template.activities.clone();
        if let Some(pos) = sequence.iter().position(|a| a == target) {
            if rng.gen_bool(spec.rework_probability) {
                sequence.insert(pos + 1, target.to_owned());
                ledger.rework_cases.insert(case_id.clone());
            } else if rng.gen_bool(spec.terminal_failure_probability) {
                sequence.push(spec.failure_terminal_activity.clone());
                ledger.terminal_failure_cases.insert(case_id.clone());
            }
        }
        let has_target = sequence.iter().any(|a| a == target);

        let mut attributes = Attributes::new();
        if !spec.system_ids.is_empty() {
            let system = &spec.system_ids[rng.gen_range(0..spec.system_ids.len())];
            attributes.insert(spec.system_attribute.clone(), Scalar::String(system.clone()));
            if has_target {
                ledger.systems_on_target_cases.insert(system.clone());
            }
        }

        let mut t = spec.start_window.from + Duration::milliseconds(rng.gen_range(0..=window_ms));
        let mut events = Vec::with_capacity(sequence.len());
        let mut case_resources = BTreeSet::new();
        let mut prev = START_LABEL.to_owned();
        for (position, activity) in sequence.iter().enumerate() {
            if position > 0 {
                t += Duration::milliseconds(spec.inter_event_gap.sample(&mut rng));
            }
            let is_target = activity == target;
            if is_target {
                if rng.gen_bool(spec.out_of_hours_share) {
                    t = clock.next_off(t);
                    ledger.out_of_hours_events.insert(EventRef {
                        case_id: case_id.clone(),
                        position,
                    });
                } else {
                    t = clock.next_working(t);
                }
            }
            let robot = rng.gen_bool(spec.robot_user_share);
            let pool = if robot { &spec.robot_pool } else { &spec.user_pool };
            let resource = pool[rng.gen_range(0..pool.len())].clone();

            if is_target {
                ledger.target_executions += 1;
                *ledger
                    .target_per_day
                    .entry(t.with_timezone(&clock.offset).date_naive())
                    .or_default() += 1;
                *ledger
                    .target_executions_by_resource
                    .entry(resource.clone())
                    .or_default() += 1;
                ledger.robot_target_executions += robot as usize;
            }
            case_resources.insert(resource.clone());
            *pairs.entry((prev, activity.clone())).or_default() += 1;
            prev = activity.clone();
            first_ts = Some(first_ts.map_or(t, |f| f.min(t)));
            last_ts = Some(last_ts.map_or(t, |l| l.max(t)));
            events.push(Event::new(&case_id, activity, t).with_resource(resource));
        }
        *pairs.entry((prev, END_LABEL.to_owned())).or_default() += 1;
        let start = events[0].timestamp;
        let entry = variants.entry(sequence).or_insert((0, start));
        entry.0 += 1;
        entry.1 = entry.1.min(start);
        ledger.n_events += events.len();
        ledger.n_cases += 1;
        ledger
            .case_throughput_ms
            .insert(case_id.clone(), (t - events[0].timestamp).num_milliseconds());
        if has_target {
            ledger.cases_with_target.insert(case_id.clone());
            ledger
                .resources_per_target_case
                .insert(case_id.clone(), case_resources.len());
        }
        cases.push(Case::new(case_id, events, attributes)?);
    }

    ledger.first_timestamp = first_ts.expect("at least one event");
    ledger.last_timestamp = last_ts.expect("at least one event");
    ledger.variant_counts = variants
        .into_iter()
        .map(|(sequence, (count, first_start))| VariantCount {
            sequence,
            count,
            first_start,
        })
        .collect();
    ledger.dfg_pairs = pairs
        .into_iter()
        .map(|((from, to), count)| PairCount { from, to, count })
        .collect();
    Ok((EventLog::new(cases)?, ledger))
}

/// Reads a spec from TOML, or JSON when the file ends in `.json`.
pub fn load_spec(path: impl AsRef<Path>) -> Result<SynthSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        let invalid = |e: toml::de::Error| Error::InvalidConfig(format!("{}: {e}", path.display()));
        let mut table: toml::Table = text.parse().map_err(invalid)?;
        crate::toml_value::normalize_datetimes(&mut table);
        table.try_into().map_err(invalid)
    }
}

/// Writes `log.csv`, `log.xes` and `ledger.json` into `dir`.
pub fn write_output(dir: impl AsRef<Path>, log: &EventLog, ledger: &GroundTruthLedger) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let path = dir.join(name);
        fs::File::create(&path)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(path, e))
    };
    write_csv(log, create("log.csv")?)?;
    write_xes(log, create("log.xes")?)?;
    let mut json = serde_json::to_string_pretty(ledger)?;
    json.push('\n');
    let path = dir.join("ledger.json");
    fs::write(&path, json).map_err(|e| Error::io(path, e))
}
