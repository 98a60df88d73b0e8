use std::collections::BTreeSet;

use super::task::failure_counts;
use super::{ensure_target, ratio, AssessmentConfig, CriterionId, CriterionResult, Metrics};
use crate::error::Result;
use crate::event_log::EventLog;

pub fn eval_resources(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let target = config.target_activity.as_str();
    let mut users: BTreeSet<&str> = BTreeSet::new();
    let (mut executions, mut missing) = (0usize, 0usize);
    let (mut target_cases, mut users_in_cases) = (0usize, 0usize);

    for case in log.cases() {
        if !case.contains_activity(target) {
            continue;
        }
        target_cases += 1;
        let mut case_users = BTreeSet::new();
        for e in case.events() {
            if let Some(r) = e.resource.as_deref() {
                case_users.insert(r);
            }
            if e.activity == target {
                executions += 1;
                match e.resource.as_deref() {
                    Some(r) => {
                        users.insert(r);
                    }
                    None => missing += 1,
                }
            }
        }
        users_in_cases += case_users.len();
    }

    if users.is_empty() {
        return Ok(CriterionResult::not_evaluable(
            CriterionId::Resources,
            "no resource attribute",
            format!("None of the {executions} executions records an executing resource."),
        ));
    }

    let mean_users = ratio(users_in_cases, target_cases);
    let metrics: Metrics = [
        ("n_distinct_users_on_activity", users.len() as f64),
        ("mean_users_per_case", mean_users),
        ("missing_resource_ratio", ratio(missing, executions)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();
    let mut narrative = format!(
        "{} different users execute the activity; cases containing it involve {mean_users:.2} users on average.",
        users.len()
    );
    if missing > 0 {
        narrative.push_str(&format!(" {missing} executions lack a resource and are not counted."));
    }
    Ok(CriterionResult::computed(CriterionId::Resources, metrics, narrative, config))
}

/// Failure rate scaled by the share of executions done by humans. Events
/// without a resource count as human.
pub fn eval_human_error_proneness(log: &EventLog, config: &AssessmentConfig) -> Result<CriterionResult> {
    ensure_target(log, config)?;
    let failure_rate = failure_counts(log, config).failure_rate();
    let (mut executions, mut human) = (0usize, 0usize);
    for e in log.events().filter(|e| e.activity == config.target_activity) {
        executions += 1;
        let robot = e.resource.as_deref().is_some_and(|r| config.is_robot(r));
        human += !robot as usize;
    }
    let human_share = ratio(human, executions);
    let rate = failure_rate * human_share;
    let metrics: Metrics = [
        ("failure_rate", failure_rate),
        ("human_share", human_share),
        ("human_error_rate", rate),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();
    let narrative = if human == executions {
        format!(
            "All executions are performed by humans, so every failure ({:.2}% of cases) is attributed to human error.",
            failure_rate * 100.0
        )
    } else {
        format!(
            "{:.1}% of executions are performed by humans; attributing failures proportionally gives a human error rate of {:.2}%.",
            human_share * 100.0,
            rate * 100.0
        )
    };
    Ok(CriterionResult::computed(CriterionId::HumanErrorProneness, metrics, narrative, config))
}
