use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{ensure_target, ratio, AssessmentConfig, Bucket, CriterionId, CriterionResult, Metrics};
use crate::context::{activity_context, build_dfg, coverage, ActivityContext, Direction, Node};
use crate::error::Result;
use crate::event_log::EventLog;
use crate::variants::{build_variant_table, variants_containing, Variant};

/// Valid neighbour sets of the target, either configured or the most
/// frequent ones.
#[derive(Debug, Clone)]
pub struct ComplianceSets {
    pub context: ActivityContext,
    pub predecessors: BTreeSet<Node>,
    pub successors: BTreeSet<Node>,
    pub derived_predecessors: bool,
    pub derived_successors: bool,
}

pub fn compliance_sets(log: &EventLog, config: &AssessmentConfig) -> Result<ComplianceSets> {
    ensure_target(log, config)?;
    let dfg = build_dfg(log)?;
    let context = activity_context(&dfg, &config.target_activity)?;
    let configured_pred = config.valid_set(&config.valid_predecessors);
    let configured_succ = config.valid_set(&config.valid_successors);
    Ok(ComplianceSets {
        derived_predecessors: configured_pred.is_none(),
        derived_successors: configured_succ.is_none(),
        predecessors: configured_pred
            .unwrap_or_else(|| context.top_k(Direction::In, config.auto_predecessors)),
        successors: configured_succ
            .unwrap_or_else(|| context.top_k(Direction::Out, config.auto_successors)),
        context,
    })
}

fn join_nodes(set: &BTreeSet<Node>) -> String {
    set.iter().map(Node::as_str).collect::<Vec<_>>().join(", ")
}

pub fn eval_standardization(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    let sets = compliance_sets(log, config)?;
    let table = build_variant_table(log)?;
    let containing = variants_containing(&table, &config.target_activity).len();
    let pred = coverage(&sets.context, &sets.predecessors, Direction::In)?;
    let succ = coverage(&sets.context, &sets.successors, Direction::Out)?;

    let metrics: Metrics = [
        ("n_variants_containing", containing as f64),
        ("n_variants", table.len() as f64),
        ("n_distinct_activities", log.activity_alphabet().len() as f64),
        ("pred_coverage", pred),
        ("succ_coverage", succ),
        ("min_coverage", pred.min(succ)),
        ("n_valid_predecessors", sets.predecessors.len() as f64),
        ("n_valid_successors", sets.successors.len() as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();

    let source = |derived: bool| if derived { "most frequent" } else { "configured" };
    let narrative = format!(
        "{:.1}% of incoming transitions come from the {} {} valid predecessors ({}); \
         {:.1}% of outgoing transitions go to the {} {} valid successors ({}). \
         The activity appears in {} of {} variants over {} distinct activities.",
        pred * 100.0,
        sets.predecessors.len(),
        source(sets.derived_predecessors),
        join_nodes(&sets.predecessors),
        succ * 100.0,
        sets.successors.len(),
        source(sets.derived_successors),
        join_nodes(&sets.successors),
        containing,
        table.len(),
        log.activity_alphabet().len(),
    );
    Ok(CriterionResult::computed(CriterionId::Standardization, metrics, narrative, config))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Deviation {
    Rework,
    TerminalFailure,
    OffPath,
}

/// Reasons a variant is incompliant; empty when compliant.
pub(crate) fn variant_deviations(
    variant: &Variant,
    sets: &ComplianceSets,
    config: &AssessmentConfig,
) -> Vec<Deviation> {
    let target = config.target_activity.as_str();
    let seq = &variant.sequence;
    let mut out = Vec::new();
    if config.rework_counts_as_failure && variant.occurrences(target) > 1 {
        out.push(Deviation::Rework);
    }
    if seq
        .last()
        .is_some_and(|last| config.failure_terminal_activities.contains(last))
    {
        out.push(Deviation::TerminalFailure);
    }
    let off_path = seq.iter().enumerate().filter(|(_, a)| *a == target).any(|(i, _)| {
        let pred = if i == 0 { Node::Start } else { Node::from(seq[i - 1].as_str()) };
        let succ = seq.get(i + 1).map_or(Node::End, |s| Node::from(s.as_str()));
        !sets.predecessors.contains(&pred) || !sets.successors.contains(&succ)
    });
    if off_path {
        out.push(Deviation::OffPath);
    }
    out
}

pub fn eval_maturity(log: &EventLog, config: &AssessmentConfig, window: Bucket) -> Result<CriterionResult> {
    let sets = compliance_sets(log, config)?;
    let table = build_variant_table(log)?;
    let containing = variants_containing(&table, &config.target_activity);
    let offset = config.business_hours.offset()?;

    let mut compliant = 0usize;
    let mut rework = 0usize;
    let mut terminal = 0usize;
    let mut off_path = 0usize;
    let mut first_seen: BTreeMap<chrono::NaiveDate, usize> = BTreeMap::new();
    let case_start: HashMap<&str, _> = log
        .cases()
        .iter()
        .map(|c| (c.case_id(), c.first_timestamp()))
        .collect();
    for variant in &containing {
        let deviations = variant_deviations(variant, &sets, config);
        if deviations.is_empty() {
            compliant += 1;
        }
        rework += deviations.contains(&Deviation::Rework) as usize;
        terminal += deviations.contains(&Deviation::TerminalFailure) as usize;
        off_path += deviations.contains(&Deviation::OffPath) as usize;

        let first = variant
            .case_ids
            .iter()
            .map(|id| case_start[id.as_str()])
            .min()
            .expect("variant has cases");
        let bucket = window.start_of(first.with_timezone(&offset).date_naive());
        *first_seen.entry(bucket).or_default() += 1;
    }

    let (lo, hi) = log.time_span().expect("non-empty log");
    let windows = window.range(
        lo.with_timezone(&offset).date_naive(),
        hi.with_timezone(&offset).date_naive(),
    );
    let n = containing.len();
    let max_new = first_seen.values().copied().max().unwrap_or(0);
    let metrics: Metrics = [
        ("n_variants_containing", n as f64),
        ("n_compliant_variants", compliant as f64),
        ("n_incompliant_variants", (n - compliant) as f64),
        ("compliant_variant_share", ratio(compliant, n)),
        ("n_rework_variants", rework as f64),
        ("n_terminal_failure_variants", terminal as f64),
        ("n_off_path_variants", off_path as f64),
        ("n_windows", windows.len() as f64),
        ("new_variants_per_window_mean", ratio(n, windows.len())),
        ("new_variants_per_window_max", max_new as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();

    let narrative = format!(
        "{n} variants contain the activity; {compliant} follow compliant predecessors and successors \
         while {} are incompliant ({rework} rework the activity, {terminal} end in a failure activity, \
         {off_path} leave the valid neighbourhood). On average {:.2} new variants appear per {}.",
        n - compliant,
        ratio(n, windows.len()),
        window.as_str(),
    );
    Ok(CriterionResult::computed(CriterionId::Maturity, metrics, narrative, config))
}

/// Case-level failure decomposition over cases containing the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FailureCounts {
    pub cases_with_target: usize,
    pub rework: usize,
    pub terminal: usize,
    pub failed: usize,
    pub both: usize,
}

impl FailureCounts {
    pub fn failure_rate(&self) -> f64 {
        ratio(self.failed, self.cases_with_target)
    }
}

pub(crate) fn failure_counts(log: &EventLog, config: &AssessmentConfig) -> FailureCounts {
    let target = config.target_activity.as_str();
    let mut counts = FailureCounts {
        cases_with_target: 0,
        rework: 0,
        terminal: 0,
        failed: 0,
        both: 0,
    };
    for case in log.cases() {
        let occurrences = case.count_activity(target);
        if occurrences == 0 {
            continue;
        }
        counts.cases_with_target += 1;
        let rework = occurrences >= 2;
        let last = &case.events()[case.events().len() - 1].activity;
        let terminal = config.failure_terminal_activities.contains(last);
        counts.rework += rework as usize;
        counts.terminal += terminal as usize;
        counts.both += (rework && terminal) as usize;
        if (rework && config.rework_counts_as_failure) || terminal {
            counts.failed += 1;
        }
    }
    counts
}

pub fn eval_failure_rate(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let c = failure_counts(log, config);
    let rework_ratio = ratio(c.rework, c.cases_with_target);
    let terminal_ratio = ratio(c.terminal, c.cases_with_target);
    let failure_rate = c.failure_rate();
    let metrics: Metrics = [
        ("n_cases_with_target", c.cases_with_target as f64),
        ("n_rework_cases", c.rework as f64),
        ("n_terminal_failure_cases", c.terminal as f64),
        ("n_failed_cases", c.failed as f64),
        ("rework_ratio", rework_ratio),
        ("terminal_failure_ratio", terminal_ratio),
        ("component_sum", rework_ratio + terminal_ratio),
        ("overlap_ratio", ratio(c.both, c.cases_with_target)),
        ("failure_rate", failure_rate),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();

    let mut narrative = format!(
        "Of {} cases executing the activity, {:.2}% rework it and {:.2}% end in a failure activity; \
         the combined failure rate (cases with either) is {:.2}%.",
        c.cases_with_target,
        rework_ratio * 100.0,
        terminal_ratio * 100.0,
        failure_rate * 100.0,
    );
    if c.both > 0 && config.rework_counts_as_failure {
        narrative.push_str(&format!(
            " {} cases show both, so the union is below the sum of the components ({:.2}%).",
            c.both,
            (rework_ratio + terminal_ratio) * 100.0
        ));
    } else if c.both == 0 && config.rework_counts_as_failure {
        narrative.push_str(" The two failure modes are disjoint, so the union equals their sum.");
    }
    if !config.rework_counts_as_failure {
        narrative.push_str(" Rework is not counted as failure under this configuration.");
    }
    Ok(CriterionResult::computed(CriterionId::FailureRate, metrics, narrative, config))
}
