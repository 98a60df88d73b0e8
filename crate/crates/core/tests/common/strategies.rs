use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;

use super::naive::Row;
use rpa_viability::criteria::{CriterionId, CriterionResult, Status};

pub const ACTIVITIES: [&str; 5] = ["A", "B", "C", "T", "D"];

/// Raw rows for 1..=50 cases, interleaved across cases, on a 4-hour grid so
/// timestamp ties occur. Some row always carries the target `T`.
pub fn arb_rows() -> impl Strategy<Value = Vec<Row>> {
    let event = (0usize..ACTIVITIES.len(), 0i64..360, proptest::option::of(0usize..6));
    let case = proptest::collection::vec(event, 1..8);
    proptest::collection::vec(case, 1..=50).prop_map(|cases| {
        let base = Utc.with_ymd_and_hms(2018, 3, 5, 0, 0, 0).unwrap();
        let longest = cases.iter().map(Vec::len).max().unwrap();
        let mut rows = Vec::new();
        for i in 0..longest {
            for (c, events) in cases.iter().enumerate() {
                if let Some(&(a, slot, user)) = events.get(i) {
                    rows.push(Row {
                        case: format!("case{c}"),
                        activity: ACTIVITIES[a].to_owned(),
                        ts: base + Duration::hours(4 * slot),
                        resource: user.map(|u| if u == 5 { "batch_0".into() } else { format!("u{u}") }),
                    });
                }
            }
        }
        if !rows.iter().any(|r| r.activity == "T") {
            rows[0].activity = "T".into();
        }
        rows
    })
}

/// Thirteen results with arbitrary scores; `None` marks not evaluable.
pub fn arb_results() -> impl Strategy<Value = Vec<CriterionResult>> {
    proptest::collection::vec(proptest::option::of(0.0f64..=1.0), 13).prop_map(|scores| {
        CriterionId::ALL
            .into_iter()
            .zip(scores)
            .map(|(id, score)| CriterionResult {
                criterion_id: id,
                perspective: id.perspective(),
                status: match score {
                    Some(_) => Status::Computed,
                    None => Status::NotEvaluable {
                        reason: "test".into(),
                    },
                },
                metrics: Default::default(),
                normalized_score: score,
                narrative: String::new(),
            })
            .collect()
    })
}
