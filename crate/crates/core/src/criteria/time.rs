use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::{ensure_target, ratio, AssessmentConfig, CriterionId, CriterionResult, Metrics};
use crate::error::Result;
use crate::event_log::EventLog;

const MS_PER_DAY: f64 = 86_400_000.0;

/// Target occurrences per calendar bucket, zero-filled over the log's
/// time span. Buckets follow the business-hours offset.
pub(crate) fn bucket_counts(log: &EventLog, config: &AssessmentConfig) -> Result<BTreeMap<NaiveDate, usize>> {
    let offset = config.business_hours.offset()?;
    let bucket = config.frequency_bucket;
    let local_date = |ts: crate::event_log::Timestamp| ts.with_timezone(&offset).date_naive();
    let Some((lo, hi)) = log.time_span() else {
        return Ok(BTreeMap::new());
    };
    let mut counts: BTreeMap<NaiveDate, usize> = bucket
        .range(local_date(lo), local_date(hi))
        .into_iter()
        .map(|d| (d, 0))
        .collect();
    for e in log.events().filter(|e| e.activity == config.target_activity) {
        *counts
            .get_mut(&bucket.start_of(local_date(e.timestamp)))
            .expect("event inside time span") += 1;
    }
    Ok(counts)
}

pub fn eval_frequency(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let counts = bucket_counts(log, config)?;
    let total: usize = counts.values().sum();
    let min = counts.values().copied().min().unwrap_or(0);
    let max = counts.values().copied().max().unwrap_or(0);
    let mean = ratio(total, counts.len());
    let bucket = config.frequency_bucket.as_str();
    let metrics: Metrics = [
        ("total_occurrences", total as f64),
        ("n_buckets", counts.len() as f64),
        ("mean_per_bucket", mean),
        ("min_per_bucket", min as f64),
        ("max_per_bucket", max as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();
    let narrative = format!(
        "The activity occurs {total} times over {} {bucket}s: {mean:.1} per {bucket} on average, \
         at least {min} and at most {max}.",
        counts.len(),
    );
    Ok(CriterionResult::computed(CriterionId::Frequency, metrics, narrative, config))
}

pub fn eval_duration(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let (mut with_ms, mut with_n) = (0i128, 0usize);
    let (mut without_ms, mut without_n) = (0i128, 0usize);
    for case in log.cases() {
        let throughput = (case.last_timestamp() - case.first_timestamp()).num_milliseconds() as i128;
        if case.contains_activity(&config.target_activity) {
            with_ms += throughput;
            with_n += 1;
        } else {
            without_ms += throughput;
            without_n += 1;
        }
    }
    let mean_days = |ms: i128, n: usize| ms as f64 / n as f64 / MS_PER_DAY;
    let mean_with = mean_days(with_ms, with_n);
    let mut metrics: Metrics = [
        ("mean_throughput_with", mean_with),
        ("mean_throughput_all", mean_days(with_ms + without_ms, with_n + without_n)),
        ("n_cases_with", with_n as f64),
        ("n_cases_without", without_n as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();

    let own_time = "The activity's own execution time is not evaluable: events carry a single \
                    completion timestamp and no start timestamp.";
    let narrative = if without_n > 0 {
        let mean_without = mean_days(without_ms, without_n);
        metrics.insert("mean_throughput_without".into(), mean_without);
        metrics.insert("delta".into(), mean_with - mean_without);
        format!(
            "Cases including the activity take {mean_with:.1} days on average, cases without it \
             {mean_without:.1} days (delta {:.1} days). {own_time}",
            mean_with - mean_without
        )
    } else {
        format!(
            "Cases including the activity take {mean_with:.1} days on average. Every case contains \
             the activity, so the with/without delta is not evaluable. {own_time}"
        )
    };
    Ok(CriterionResult::computed(CriterionId::Duration, metrics, narrative, config))
}

pub fn eval_urgency(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let hours = &config.business_hours;
    let offset = hours.offset()?;
    let (mut total, mut outside) = (0usize, 0usize);
    for e in log.events().filter(|e| e.activity == config.target_activity) {
        total += 1;
        outside += !hours.contains(e.timestamp, offset) as usize;
    }
    let share = ratio(outside, total);
    let metrics: Metrics = [
        ("n_executions", total as f64),
        ("n_out_of_hours", outside as f64),
        ("out_of_hours_ratio", share),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();
    let narrative = format!(
        "{:.1}% of the {total} executions fall outside business hours ({} to {}, UTC{}).",
        share * 100.0,
        hours.start.format("%H:%M"),
        hours.end.format("%H:%M"),
        hours.utc_offset,
    );
    Ok(CriterionResult::computed(CriterionId::Urgency, metrics, narrative, config))
}
