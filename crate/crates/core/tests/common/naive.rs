//! Brute-force recomputation over raw rows. Shares no code with the
//! library: grouping, sorting, calendars and clocks are redone by hand.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, FixedOffset, NaiveDate, Timelike, Weekday};

use rpa_viability::event_log::{Case, Event, EventLog, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub case: String,
    pub activity: String,
    pub ts: Timestamp,
    pub resource: Option<String>,
}

pub fn to_log(rows: &[Row]) -> EventLog {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for r in rows {
        if !grouped.contains_key(&r.case) {
            order.push(r.case.clone());
        }
        let mut e = Event::new(&r.case, &r.activity, r.ts);
        e.resource = r.resource.clone();
        grouped.entry(r.case.clone()).or_default().push(e);
    }
    let cases = order
        .into_iter()
        .map(|id| {
            let events = grouped.remove(&id).unwrap();
            Case::new(id, events, Default::default()).unwrap()
        })
        .collect();
    EventLog::new(cases).unwrap()
}

/// Rows of each case, insertion sort by timestamp (stable on ties).
pub fn traces(rows: &[Row]) -> Vec<(String, Vec<Row>)> {
    let mut out: Vec<(String, Vec<Row>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(id, _)| *id == r.case) {
            Some((_, v)) => v.push(r.clone()),
            None => out.push((r.case.clone(), vec![r.clone()])),
        }
    }
    for (_, v) in &mut out {
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1].ts > v[j].ts {
                v.swap(j - 1, j);
                j -= 1;
            }
        }
    }
    out
}

fn labels(trace: &[Row]) -> Vec<String> {
    trace.iter().map(|r| r.activity.clone()).collect()
}

pub fn variants(rows: &[Row]) -> BTreeMap<Vec<String>, usize> {
    let mut out = BTreeMap::new();
    for (_, t) in traces(rows) {
        *out.entry(labels(&t)).or_insert(0) += 1;
    }
    out
}

pub fn dfg(rows: &[Row]) -> BTreeMap<(String, String), usize> {
    let mut out = BTreeMap::new();
    for (_, t) in traces(rows) {
        let mut seq = vec!["START".to_string()];
        seq.extend(labels(&t));
        seq.push("END".into());
        for w in seq.windows(2) {
            *out.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
        }
    }
    out
}

pub struct Failure {
    pub with: usize,
    pub rework: usize,
    pub terminal: usize,
    pub failed: usize,
}

pub fn failure(rows: &[Row], target: &str, terminal_label: &str) -> Failure {
    let mut f = Failure {
        with: 0,
        rework: 0,
        terminal: 0,
        failed: 0,
    };
    for (_, t) in traces(rows) {
        let n = t.iter().filter(|r| r.activity == target).count();
        if n == 0 {
            continue;
        }
        f.with += 1;
        let is_rework = n >= 2;
        let is_terminal = t[t.len() - 1].activity == terminal_label;
        f.rework += is_rework as usize;
        f.terminal += is_terminal as usize;
        f.failed += (is_rework || is_terminal) as usize;
    }
    f
}

/// Per-day target counts from the first to the last event day, zeros included.
pub fn daily_counts(rows: &[Row], target: &str, offset: FixedOffset) -> Vec<usize> {
    let day = |ts: Timestamp| -> NaiveDate {
        let local = ts.naive_utc() + Duration::seconds(offset.local_minus_utc() as i64);
        local.date()
    };
    let first = rows.iter().map(|r| day(r.ts)).min().unwrap();
    let last = rows.iter().map(|r| day(r.ts)).max().unwrap();
    let mut out = Vec::new();
    let mut d = first;
    while d <= last {
        out.push(rows.iter().filter(|r| r.activity == target && day(r.ts) == d).count());
        d = d.succ_opt().unwrap();
    }
    out
}

/// Mean case duration in days for cases with and without the target.
pub fn throughput(rows: &[Row], target: &str) -> (f64, Option<f64>) {
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for (_, t) in traces(rows) {
        let ms = (t[t.len() - 1].ts - t[0].ts).num_milliseconds() as f64;
        if t.iter().any(|r| r.activity == target) {
            with.push(ms);
        } else {
            without.push(ms);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64 / 86_400_000.0;
    (mean(&with), (!without.is_empty()).then(|| mean(&without)))
}

/// Target executions outside Mon-Fri 08:00-18:00 in the given offset.
pub fn out_of_hours(rows: &[Row], target: &str, offset: FixedOffset) -> (usize, usize) {
    let mut total = 0;
    let mut outside = 0;
    for r in rows.iter().filter(|r| r.activity == target) {
        total += 1;
        let local = r.ts.naive_utc() + Duration::seconds(offset.local_minus_utc() as i64);
        let weekend = matches!(local.weekday(), Weekday::Sat | Weekday::Sun);
        let hour = local.hour();
        if weekend || !(8..18).contains(&hour) {
            outside += 1;
        }
    }
    (total, outside)
}

/// Distinct users on the target and mean distinct users per target case.
pub fn resources(rows: &[Row], target: &str) -> (usize, f64) {
    let users: BTreeSet<&String> = rows
        .iter()
        .filter(|r| r.activity == target)
        .filter_map(|r| r.resource.as_ref())
        .collect();
    let mut per_case = Vec::new();
    for (_, t) in traces(rows) {
        if t.iter().any(|r| r.activity == target) {
            let distinct: BTreeSet<&String> = t.iter().filter_map(|r| r.resource.as_ref()).collect();
            per_case.push(distinct.len() as f64);
        }
    }
    (users.len(), per_case.iter().sum::<f64>() / per_case.len() as f64)
}
