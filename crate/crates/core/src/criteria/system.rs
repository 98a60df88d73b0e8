use std::collections::BTreeSet;

use super::{AssessmentConfig, CriterionId, CriterionResult, Metrics, Status};
use crate::error::{Error, Result};
use crate::event_log::{Case, EventLog};

/// Reason reported for criteria that need presentation-layer data.
pub const NO_UI_DATA_REASON: &str = "requires user-interface interaction data";

fn system_of(case: &Case, attribute: &str) -> Option<String> {
    case.case_attributes()
        .get(attribute)
        .or_else(|| case.events().iter().find_map(|e| e.attributes.get(attribute)))
        .map(ToString::to_string)
}

pub fn eval_number_of_systems(
    log: &EventLog,
    config: &AssessmentConfig,
    system_attribute: &str,
) -> Result<CriterionResult> {
    let present = log.cases().iter().any(|c| system_of(c, system_attribute).is_some());
    if !present {
        return Ok(CriterionResult::not_evaluable(
            CriterionId::NumberOfSystems,
            "no system attribute in log",
            format!("The log has no {system_attribute:?} attribute identifying source systems."),
        ));
    }
    let systems: BTreeSet<String> = log
        .cases()
        .iter()
        .filter(|c| c.contains_activity(&config.target_activity))
        .filter_map(|c| system_of(c, system_attribute))
        .collect();
    let metrics: Metrics = [("n_distinct_systems".to_owned(), systems.len() as f64)].into();
    let narrative = format!(
        "Cases executing the activity originate from {} distinct source system(s) according to {system_attribute:?}. \
         The count is a lower bound: a roofing system such as an ERP may hide further subsystems.",
        systems.len()
    );
    Ok(CriterionResult::computed(CriterionId::NumberOfSystems, metrics, narrative, config))
}

/// Determinism, structuredness, interfaces and stability: passes through
/// supplied evidence, otherwise not evaluable.
pub fn eval_external(id: CriterionId, config: &AssessmentConfig) -> Result<CriterionResult> {
    if !id.is_external() {
        return Err(Error::UnknownCriterion(id.to_string()));
    }
    Ok(match config.external_evidence.get(&id) {
        Some(evidence) => CriterionResult {
            criterion_id: id,
            perspective: id.perspective(),
            status: Status::External,
            metrics: Metrics::from([("evidence_value".to_owned(), evidence.value)]),
            normalized_score: Some(evidence.value),
            narrative: if evidence.note.is_empty() {
                "Externally supplied evidence.".to_owned()
            } else {
                format!("Externally supplied evidence: {}", evidence.note)
            },
        },
        None => CriterionResult::not_evaluable(
            id,
            NO_UI_DATA_REASON,
            format!(
                "{} cannot be evaluated from a process-level event log; it needs data on the \
                 interaction with the user interface.",
                id.title()
            ),
        ),
    })
}
