#![allow(dead_code)]

pub mod invariants;
pub mod naive;
pub mod strategies;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveTime, TimeZone, Utc, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rpa_viability::criteria::{AssessmentConfig, BusinessHours, CriterionId, CriterionResult, Status};
use rpa_viability::synth::{GapDistribution, GroundTruthLedger, StartWindow, SynthSpec, VariantTemplate};

pub const TARGET: &str = "Change Quantity";
pub const FAILURE: &str = "Delete Item";
const ALPHABET: [&str; 7] = ["Create", "Approve", "Receive", "Invoice", "Clear", "Check", "Block"];
const WEEKDAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

/// A valid spec drawn from `seed`. The first template always contains the
/// target and carries at least half the probability mass.
pub fn random_spec(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n_templates = rng.gen_range(1..=5);
    let mut templates = Vec::new();
    for i in 0..n_templates {
        let len = rng.gen_range(0..=5);
        let mut activities: Vec<String> = (0..len)
            .map(|_| ALPHABET.choose(&mut rng).unwrap().to_string())
            .collect();
        if i == 0 || rng.gen_bool(0.5) {
            let pos = rng.gen_range(0..=activities.len());
            activities.insert(pos, TARGET.into());
        }
        if activities.is_empty() {
            activities.push("Create".into());
        }
        templates.push(VariantTemplate {
            activities,
            probability: 0.0,
        });
    }
    let weights: Vec<f64> = (0..n_templates).map(|_| rng.gen_range(0.05..1.0)).collect();
    let rest: f64 = weights[1..].iter().sum();
    let first = 0.5 + 0.5 * rng.gen::<f64>();
    templates[0].probability = first;
    for (t, w) in templates.iter_mut().zip(&weights).skip(1) {
        t.probability = (1.0 - first) * w / rest;
    }
    if n_templates == 1 {
        templates[0].probability = 1.0;
    }

    let mut weekdays: Vec<Weekday> = WEEKDAYS.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
    if weekdays.is_empty() {
        weekdays.push(Weekday::Wed);
    }
    let business_hours = BusinessHours {
        weekdays,
        start: NaiveTime::from_hms_opt(rng.gen_range(6..=10), 0, 0).unwrap(),
        end: NaiveTime::from_hms_opt(rng.gen_range(15..=20), 30, 0).unwrap(),
        utc_offset: ["+00:00", "+02:00", "-05:00", "+05:30"].choose(&mut rng).unwrap().to_string(),
    };
    let inter_event_gap = if rng.gen_bool(0.3) {
        GapDistribution::Fixed {
            ms: rng.gen_range(1..=86_400_000),
        }
    } else {
        let min_ms = rng.gen_range(1..=3_600_000);
        GapDistribution::Uniform {
            min_ms,
            max_ms: min_ms + rng.gen_range(0..=5 * 86_400_000),
        }
    };
    let from = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap() + Duration::days(rng.gen_range(0..60));
    let robot_user_share = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.6) };

    SynthSpec {
        n_cases: rng.gen_range(30..=400),
        variant_templates: templates,
        target_activity: TARGET.into(),
        failure_terminal_activity: FAILURE.into(),
        rework_probability: rng.gen_range(0.0..0.3),
        terminal_failure_probability: rng.gen_range(0.0..0.2),
        user_pool: (0..rng.gen_range(1..=20)).map(|i| format!("user_{i:03}")).collect(),
        robot_pool: vec!["batch_00".into(), "batch_01".into()],
        robot_user_share,
        out_of_hours_share: rng.gen_range(0.0..0.7),
        business_hours,
        inter_event_gap,
        start_window: StartWindow {
            from,
            to: from + Duration::days(rng.gen_range(1..300)),
        },
        system_attribute: "(case) Source".into(),
        system_ids: (0..rng.gen_range(0..=3)).map(|i| format!("sys_{i}")).collect(),
        seed,
    }
}

/// The assessment config matching a spec's planted semantics.
pub fn config_for(spec: &SynthSpec) -> AssessmentConfig {
    let mut config = AssessmentConfig::for_activity(&spec.target_activity);
    config.failure_terminal_activities = [spec.failure_terminal_activity.clone()].into();
    config.business_hours = spec.business_hours.clone();
    config.robot_resource_patterns = spec.robot_pool.clone();
    config.system_attribute = spec.system_attribute.clone();
    config
}

pub fn relative_eq(actual: f64, expected: f64) -> bool {
    actual == expected || (actual - expected).abs() <= 1e-9 * expected.abs().max(actual.abs())
}

/// Expected metrics per criterion, read off the ledger. `None` means the
/// criterion must be NotEvaluable.
pub fn expectations(spec: &SynthSpec, ledger: &GroundTruthLedger) -> BTreeMap<CriterionId, Option<BTreeMap<&'static str, f64>>> {
    let target = spec.target_activity.as_str();
    let offset = spec.business_hours.offset().unwrap();
    let mut out = BTreeMap::new();

    // neighbours of the target, node keys ordered START < activities < END
    let node_key = |label: &str| -> (u8, String) {
        match label {
            "START" => (0, String::new()),
            "END" => (2, String::new()),
            other => (1, other.to_owned()),
        }
    };
    let mut preds: Vec<((u8, String), usize)> = Vec::new();
    let mut succs: Vec<((u8, String), usize)> = Vec::new();
    for p in &ledger.dfg_pairs {
        if p.to == target {
            preds.push((node_key(&p.from), p.count));
        }
        if p.from == target {
            succs.push((node_key(&p.to), p.count));
        }
    }
    let top = |mut v: Vec<((u8, String), usize)>, k: usize| {
        let total: usize = v.iter().map(|x| x.1).sum();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        let covered: usize = v.iter().map(|x| x.1).sum();
        let set: BTreeSet<(u8, String)> = v.into_iter().map(|x| x.0).collect();
        (set, covered as f64 / total as f64)
    };
    let (valid_pred, pred_cov) = top(preds, 5);
    let (valid_succ, succ_cov) = top(succs, 2);

    let containing: Vec<_> = ledger
        .variant_counts
        .iter()
        .filter(|v| v.sequence.iter().any(|a| a == target))
        .collect();
    let alphabet: BTreeSet<&String> = ledger.variant_counts.iter().flat_map(|v| &v.sequence).collect();
    out.insert(
        CriterionId::Standardization,
        Some(BTreeMap::from([
            ("n_variants_containing", containing.len() as f64),
            ("n_variants", ledger.variant_counts.len() as f64),
            ("n_distinct_activities", alphabet.len() as f64),
            ("pred_coverage", pred_cov),
            ("succ_coverage", succ_cov),
            ("min_coverage", pred_cov.min(succ_cov)),
            ("n_valid_predecessors", valid_pred.len() as f64),
            ("n_valid_successors", valid_succ.len() as f64),
        ])),
    );

    let (mut compliant, mut rework, mut terminal, mut off_path) = (0, 0, 0, 0);
    let mut new_per_month: BTreeMap<(i32, u32), usize> = BTreeMap::new();
    for v in &containing {
        let seq = &v.sequence;
        let is_rework = seq.iter().filter(|a| *a == target).count() > 1;
        let is_terminal = seq.last().unwrap() == &spec.failure_terminal_activity;
        let is_off = (0..seq.len()).filter(|&i| seq[i] == target).any(|i| {
            let pred = if i == 0 { node_key("START") } else { node_key(&seq[i - 1]) };
            let succ = seq.get(i + 1).map_or(node_key("END"), |s| node_key(s));
            !valid_pred.contains(&pred) || !valid_succ.contains(&succ)
        });
        compliant += (!is_rework && !is_terminal && !is_off) as usize;
        rework += is_rework as usize;
        terminal += is_terminal as usize;
        off_path += is_off as usize;
        let d = v.first_start.with_timezone(&offset);
        *new_per_month.entry((d.year(), d.month())).or_default() += 1;
    }
    let first = ledger.first_timestamp.with_timezone(&offset).date_naive();
    let last = ledger.last_timestamp.with_timezone(&offset).date_naive();
    let n_months = (last.year() * 12 + last.month() as i32) - (first.year() * 12 + first.month() as i32) + 1;
    let n = containing.len();
    out.insert(
        CriterionId::Maturity,
        Some(BTreeMap::from([
            ("n_variants_containing", n as f64),
            ("n_compliant_variants", compliant as f64),
            ("n_incompliant_variants", (n - compliant) as f64),
            ("compliant_variant_share", compliant as f64 / n as f64),
            ("n_rework_variants", rework as f64),
            ("n_terminal_failure_variants", terminal as f64),
            ("n_off_path_variants", off_path as f64),
            ("n_windows", n_months as f64),
            ("new_variants_per_window_mean", n as f64 / n_months as f64),
            ("new_variants_per_window_max", *new_per_month.values().max().unwrap() as f64),
        ])),
    );

    let with = ledger.cases_with_target.len() as f64;
    let n_rework = ledger.rework_cases.len() as f64;
    let n_terminal = ledger.terminal_failure_cases.len() as f64;
    let failed = ledger.rework_cases.union(&ledger.terminal_failure_cases).count() as f64;
    let failure_rate = failed / with;
    out.insert(
        CriterionId::FailureRate,
        Some(BTreeMap::from([
            ("n_cases_with_target", with),
            ("n_rework_cases", n_rework),
            ("n_terminal_failure_cases", n_terminal),
            ("n_failed_cases", failed),
            ("rework_ratio", n_rework / with),
            ("terminal_failure_ratio", n_terminal / with),
            ("component_sum", (n_rework + n_terminal) / with),
            ("overlap_ratio", (n_rework + n_terminal - failed) / with),
            ("failure_rate", failure_rate),
        ])),
    );

    let n_days = (last - first).num_days() + 1;
    let total = ledger.target_executions as f64;
    let min_day = if ledger.target_per_day.len() as i64 == n_days {
        *ledger.target_per_day.values().min().unwrap()
    } else {
        0
    };
    out.insert(
        CriterionId::Frequency,
        Some(BTreeMap::from([
            ("total_occurrences", total),
            ("n_buckets", n_days as f64),
            ("mean_per_bucket", total / n_days as f64),
            ("min_per_bucket", min_day as f64),
            ("max_per_bucket", *ledger.target_per_day.values().max().unwrap() as f64),
        ])),
    );

    let day = 86_400_000.0;
    let (mut with_ms, mut without_ms) = (0i64, 0i64);
    for (case, ms) in &ledger.case_throughput_ms {
        if ledger.cases_with_target.contains(case) {
            with_ms += ms;
        } else {
            without_ms += ms;
        }
    }
    let without = ledger.n_cases as f64 - with;
    let mean_with = with_ms as f64 / with / day;
    let mut duration = BTreeMap::from([
        ("mean_throughput_with", mean_with),
        ("mean_throughput_all", (with_ms + without_ms) as f64 / ledger.n_cases as f64 / day),
        ("n_cases_with", with),
        ("n_cases_without", without),
    ]);
    if without > 0.0 {
        let mean_without = without_ms as f64 / without / day;
        duration.insert("mean_throughput_without", mean_without);
        duration.insert("delta", mean_with - mean_without);
    }
    out.insert(CriterionId::Duration, Some(duration));

    let ooh = ledger.out_of_hours_events.len() as f64;
    out.insert(
        CriterionId::Urgency,
        Some(BTreeMap::from([
            ("n_executions", total),
            ("n_out_of_hours", ooh),
            ("out_of_hours_ratio", ooh / total),
        ])),
    );

    let users_sum: usize = ledger.resources_per_target_case.values().sum();
    out.insert(
        CriterionId::Resources,
        Some(BTreeMap::from([
            ("n_distinct_users_on_activity", ledger.target_executions_by_resource.len() as f64),
            ("mean_users_per_case", users_sum as f64 / with),
            ("missing_resource_ratio", 0.0),
        ])),
    );

    let human_share = (total - ledger.robot_target_executions as f64) / total;
    out.insert(
        CriterionId::HumanErrorProneness,
        Some(BTreeMap::from([
            ("failure_rate", failure_rate),
            ("human_share", human_share),
            ("human_error_rate", failure_rate * human_share),
        ])),
    );

    out.insert(
        CriterionId::NumberOfSystems,
        (!spec.system_ids.is_empty()).then(|| {
            BTreeMap::from([("n_distinct_systems", ledger.systems_on_target_cases.len() as f64)])
        }),
    );
    for id in CriterionId::ALL.into_iter().filter(|id| id.is_external()) {
        out.insert(id, None);
    }
    out
}

/// Mismatches between results and expectations, one line each.
pub fn mismatches(
    results: &[CriterionResult],
    expected: &BTreeMap<CriterionId, Option<BTreeMap<&'static str, f64>>>,
) -> Vec<String> {
    let mut out = Vec::new();
    for r in results {
        let id = r.criterion_id;
        match (&expected[&id], &r.status) {
            (None, Status::NotEvaluable { .. }) => {}
            (None, status) => out.push(format!("{id}: expected not evaluable, got {status:?}")),
            (Some(_), Status::NotEvaluable { reason }) => out.push(format!("{id}: not evaluable: {reason}")),
            (Some(metrics), _) => {
                let actual: BTreeSet<&str> = r.metrics.keys().map(String::as_str).collect();
                let wanted: BTreeSet<&str> = metrics.keys().copied().collect();
                if actual != wanted {
                    out.push(format!("{id}: metric keys {actual:?} != {wanted:?}"));
                }
                for (name, want) in metrics {
                    match r.metric(name) {
                        Some(got) if relative_eq(got, *want) => {}
                        got => out.push(format!("{id}.{name}: got {got:?}, ledger {want}")),
                    }
                }
            }
        }
    }
    out
}
