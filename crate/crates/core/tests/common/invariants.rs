//! Structural invariants shared by the property tests and the acceptance
//! runner. Each check returns a description of the first violation.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};

use super::naive::{self, Row};
use super::relative_eq;
use rpa_viability::context::{build_dfg, Node};
use rpa_viability::criteria::{assess, eval_duration, eval_frequency, AssessmentConfig, CriterionId, CriterionResult};
use rpa_viability::event_log::{filter_cases, parse_xes_reader, write_xes, CaseFilter, EventLog};
use rpa_viability::scoring::{aggregate, build_scorecard, Provenance, Weights};
use rpa_viability::synth::{generate, SynthSpec};
use rpa_viability::variants::{build_variant_table, coverage_filter};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn variant_counts_sum(log: &EventLog) -> Check {
    let table = build_variant_table(log).map_err(|e| e.to_string())?;
    let sum: usize = table.variants().iter().map(|v| v.count()).sum();
    ensure(sum == log.num_cases(), || format!("variant counts sum {sum} != {} cases", log.num_cases()))?;
    let ids: BTreeSet<&str> = table.variants().iter().flat_map(|v| v.case_ids.iter().map(String::as_str)).collect();
    ensure(ids.len() == log.num_cases(), || "variants do not partition the cases".into())
}

/// In-degree = out-degree = occurrences per activity; START and END carry
/// one edge per case; all edges count events plus cases.
pub fn dfg_conservation(log: &EventLog) -> Check {
    let dfg = build_dfg(log).map_err(|e| e.to_string())?;
    let mut inflow: BTreeMap<&Node, usize> = BTreeMap::new();
    let mut outflow: BTreeMap<&Node, usize> = BTreeMap::new();
    for ((a, b), n) in &dfg {
        *outflow.entry(a).or_default() += n;
        *inflow.entry(b).or_default() += n;
    }
    for activity in log.activity_alphabet() {
        let node = Node::activity(activity.as_str());
        let occurrences = log.events().filter(|e| e.activity == *activity).count();
        let (i, o) = (inflow.get(&node).copied(), outflow.get(&node).copied());
        ensure(i == Some(occurrences) && o == Some(occurrences), || {
            format!("{activity}: in {i:?} out {o:?} occurrences {occurrences}")
        })?;
    }
    ensure(outflow.get(&Node::Start) == Some(&log.num_cases()), || "START edges != cases".into())?;
    ensure(inflow.get(&Node::End) == Some(&log.num_cases()), || "END edges != cases".into())?;
    let total: usize = dfg.values().sum();
    ensure(total == log.num_events() + log.num_cases(), || {
        format!("{total} pairs != {} events + {} cases", log.num_events(), log.num_cases())
    })
}

fn case_ids(log: &EventLog) -> BTreeSet<String> {
    log.cases().iter().map(|c| c.case_id().to_owned()).collect()
}

pub fn coverage_filter_monotone(log: &EventLog, lo: f64, hi: f64) -> Check {
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let table = build_variant_table(log).map_err(|e| e.to_string())?;
    let small = case_ids(&coverage_filter(&table, log, lo).map_err(|e| e.to_string())?);
    let large = case_ids(&coverage_filter(&table, log, hi).map_err(|e| e.to_string())?);
    ensure(small.is_subset(&large), || format!("coverage {lo} keeps cases dropped at {hi}"))?;
    let full = coverage_filter(&table, log, 1.0).map_err(|e| e.to_string())?;
    ensure(full == *log, || "coverage 1.0 is not the identity".into())
}

pub fn filter_idempotent(log: &EventLog, from_day: u32, span_days: u32) -> Check {
    let from = Utc.with_ymd_and_hms(2018, 3, 5, 0, 0, 0).unwrap() + chrono::Duration::days(from_day as i64);
    let filter = CaseFilter {
        attributes: Default::default(),
        from: Some(from),
        to: Some(from + chrono::Duration::days(span_days as i64)),
    };
    let once = filter_cases(log, &filter);
    let twice = filter_cases(&once, &filter);
    ensure(once == twice, || "case filter is not idempotent".into())
}

pub fn aggregate_scale_invariant(results: &[CriterionResult], weights: &[f64], scale: f64) -> Check {
    let w: Weights = CriterionId::ALL.into_iter().zip(weights.iter().copied()).collect();
    let scaled: Weights = w.iter().map(|(k, v)| (*k, v * scale)).collect();
    match (aggregate(results, &w), aggregate(results, &scaled)) {
        (Ok(Some(a)), Ok(Some(b))) => ensure(relative_eq(a, b) || (a - b).abs() < 1e-12, || format!("{a} != {b}")),
        (Ok(a), Ok(b)) => ensure(a == b, || format!("{a:?} != {b:?}")),
        (Err(a), Err(b)) => ensure(a.to_string() == b.to_string(), || format!("{a} vs {b}")),
        (a, b) => Err(format!("{a:?} vs {b:?}")),
    }
}

pub fn scorecard_complete(log: &EventLog, target: &str) -> Check {
    let results = assess(log, &AssessmentConfig::for_activity(target)).map_err(|e| e.to_string())?;
    let provenance = Provenance {
        generated_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
        log_fingerprint: "sha256:test".into(),
    };
    let sc = build_scorecard(target, results, &Weights::new(), provenance).map_err(|e| e.to_string())?;
    let ids: BTreeSet<CriterionId> = sc.results.iter().map(|r| r.criterion_id).collect();
    ensure(sc.results.len() == 13 && ids.len() == 13, || format!("{} results", sc.results.len()))
}

/// Buckets sum to the total and the with/without means recombine.
pub fn time_recombination(log: &EventLog, target: &str) -> Check {
    let config = AssessmentConfig::for_activity(target);
    let f = eval_frequency(log, &config).map_err(|e| e.to_string())?;
    let (n, mean, total) = (
        f.metric("n_buckets").unwrap(),
        f.metric("mean_per_bucket").unwrap(),
        f.metric("total_occurrences").unwrap(),
    );
    ensure(relative_eq(n * mean, total), || format!("{n} * {mean} != {total}"))?;
    let d = eval_duration(log, &config).map_err(|e| e.to_string())?;
    let m = |k: &str| d.metric(k).unwrap_or(0.0);
    let recombined = (m("mean_throughput_with") * m("n_cases_with") + m("mean_throughput_without") * m("n_cases_without"))
        / (m("n_cases_with") + m("n_cases_without"));
    ensure(relative_eq(recombined, m("mean_throughput_all")) || (recombined - m("mean_throughput_all")).abs() < 1e-12, || {
        format!("recombined {recombined} != {}", m("mean_throughput_all"))
    })
}

pub fn xes_round_trip(log: &EventLog) -> Check {
    let mut buf = Vec::new();
    write_xes(log, &mut buf).map_err(|e| e.to_string())?;
    let back = parse_xes_reader(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure(back == *log, || "XES round trip changed the log".into())
}

pub fn generator_deterministic(spec: &SynthSpec) -> Check {
    let a = generate(spec).map_err(|e| e.to_string())?;
    let b = generate(spec).map_err(|e| e.to_string())?;
    ensure(a == b, || format!("seed {} is not reproducible", spec.seed))
}

/// Module outputs equal the naive recomputation over the raw rows.
pub fn brute_force_equivalence(rows: &[Row]) -> Check {
    use rpa_viability::criteria::{eval_failure_rate, eval_resources, eval_urgency};
    let log = naive::to_log(rows);
    let target = "T";
    let mut config = AssessmentConfig::for_activity(target);
    config.failure_terminal_activities = ["D".to_owned()].into();

    let table = build_variant_table(&log).map_err(|e| e.to_string())?;
    let got: BTreeMap<Vec<String>, usize> = table.variants().iter().map(|v| (v.sequence.clone(), v.count())).collect();
    ensure(got == naive::variants(rows), || "variant table differs".into())?;

    let dfg: BTreeMap<(String, String), usize> = build_dfg(&log)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|((a, b), n)| ((a.to_string(), b.to_string()), n))
        .collect();
    ensure(dfg == naive::dfg(rows), || "dfg differs".into())?;

    let metric = |r: &CriterionResult, k: &str| r.metric(k).ok_or_else(|| format!("{} lacks {k}", r.criterion_id));
    let close = |name: &str, got: f64, want: f64| ensure(relative_eq(got, want), || format!("{name}: {got} != {want}"));

    let fr = eval_failure_rate(&log, &config).map_err(|e| e.to_string())?;
    let nf = naive::failure(rows, target, "D");
    close("rework_ratio", metric(&fr, "rework_ratio")?, nf.rework as f64 / nf.with as f64)?;
    close("terminal_failure_ratio", metric(&fr, "terminal_failure_ratio")?, nf.terminal as f64 / nf.with as f64)?;
    close("failure_rate", metric(&fr, "failure_rate")?, nf.failed as f64 / nf.with as f64)?;

    let offset = config.business_hours.offset().unwrap();
    let freq = eval_frequency(&log, &config).map_err(|e| e.to_string())?;
    let days = naive::daily_counts(rows, target, offset);
    close("n_buckets", metric(&freq, "n_buckets")?, days.len() as f64)?;
    close("mean_per_bucket", metric(&freq, "mean_per_bucket")?, days.iter().sum::<usize>() as f64 / days.len() as f64)?;
    close("min_per_bucket", metric(&freq, "min_per_bucket")?, *days.iter().min().unwrap() as f64)?;
    close("max_per_bucket", metric(&freq, "max_per_bucket")?, *days.iter().max().unwrap() as f64)?;

    let dur = eval_duration(&log, &config).map_err(|e| e.to_string())?;
    let (with, without) = naive::throughput(rows, target);
    close("mean_throughput_with", metric(&dur, "mean_throughput_with")?, with)?;
    match (dur.metric("mean_throughput_without"), without) {
        (None, None) => {}
        (Some(a), Some(b)) if relative_eq(a, b) => {}
        (got, want) => return Err(format!("mean_throughput_without {got:?} != {want:?}")),
    }

    let urg = eval_urgency(&log, &config).map_err(|e| e.to_string())?;
    let (total, outside) = naive::out_of_hours(rows, target, offset);
    close("out_of_hours_ratio", metric(&urg, "out_of_hours_ratio")?, outside as f64 / total as f64)?;

    let res = eval_resources(&log, &config).map_err(|e| e.to_string())?;
    let (users, mean_users) = naive::resources(rows, target);
    if users == 0 {
        ensure(!res.is_evaluable(), || "resources evaluable without users".into())
    } else {
        close("n_distinct_users_on_activity", metric(&res, "n_distinct_users_on_activity")?, users as f64)?;
        close("mean_users_per_case", metric(&res, "mean_users_per_case")?, mean_users)
    }
}
