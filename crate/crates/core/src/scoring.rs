//! Scorecards: the thirteen criterion results for one activity, an
//! optional weighted aggregate, and JSON / Markdown rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::{CriterionId, CriterionResult, Perspective, Status};
use crate::error::{Error, Result};
use crate::event_log::Timestamp;

pub const SCHEMA_VERSION: &str = "1";

/// JSON Schema of the report produced by [`render_json`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub type Weights = BTreeMap<CriterionId, f64>;

/// Where a scorecard came from. `generated_at` is supplied by the caller
/// so rendering stays reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generated_at: Timestamp,
    pub log_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scorecard {
    pub schema_version: String,
    pub activity: String,
    #[serde(with = "iso_millis")]
    pub generated_at: Timestamp,
    pub log_fingerprint: String,
    pub aggregate: Option<f64>,
    pub evaluable_count: usize,
    pub scored_count: usize,
    pub weights: Weights,
    pub narrative: String,
    pub results: Vec<CriterionResult>,
}

impl Scorecard {
    pub fn result(&self, id: CriterionId) -> &CriterionResult {
        self.results
            .iter()
            .find(|r| r.criterion_id == id)
            .expect("scorecard holds every criterion")
    }
}

mod iso_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// Content hash of a file, `sha256:<hex>`.
pub fn fingerprint_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("sha256:{}", hex::encode(hasher.finalize())))
}

/// Weighted mean of the normalized scores; unscored results are left out
/// of both sums. Missing weights default to 1.
pub fn aggregate(results: &[CriterionResult], weights: &Weights) -> Result<Option<f64>> {
    for (id, w) in weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::InvalidWeight {
                criterion: id.to_string(),
                weight: *w,
            });
        }
    }
    let (mut num, mut den, mut any) = (0.0, 0.0, false);
    for r in results {
        if let Some(score) = r.normalized_score {
            let w = weights.get(&r.criterion_id).copied().unwrap_or(1.0);
            num += w * score;
            den += w;
            any = true;
        }
    }
    if !any {
        return Ok(None);
    }
    if den == 0.0 {
        return Err(Error::AllWeightsZero);
    }
    Ok(Some(num / den))
}

pub fn build_scorecard(
    activity: &str,
    mut results: Vec<CriterionResult>,
    weights: &Weights,
    provenance: Provenance,
) -> Result<Scorecard> {
    let ids: BTreeSet<CriterionId> = results.iter().map(|r| r.criterion_id).collect();
    if results.len() != CriterionId::ALL.len() || ids.len() != CriterionId::ALL.len() {
        let missing: Vec<_> = CriterionId::ALL
            .iter()
            .filter(|id| !ids.contains(id))
            .map(|id| id.as_str())
            .collect();
        return Err(Error::IncompleteResults(format!(
            "got {} results, missing [{}]",
            results.len(),
            missing.join(", ")
        )));
    }
    results.sort_by_key(|r| r.criterion_id);
    let aggregate = aggregate(&results, weights)?;
    let not_evaluable: Vec<&str> = results
        .iter()
        .filter(|r| !r.is_evaluable())
        .map(|r| r.criterion_id.as_str())
        .collect();
    let evaluable_count = results.len() - not_evaluable.len();
    let scored_count = results.iter().filter(|r| r.normalized_score.is_some()).count();
    let mut narrative = format!("{evaluable_count} of {} criteria could be evaluated", results.len());
    if not_evaluable.is_empty() {
        narrative.push('.');
    } else {
        narrative.push_str(&format!(
            "; {} not evaluable ({}) and excluded from the aggregate.",
            not_evaluable.len(),
            not_evaluable.join(", ")
        ));
    }
    let weights = CriterionId::ALL
        .iter()
        .map(|id| (*id, weights.get(id).copied().unwrap_or(1.0)))
        .collect();
    Ok(Scorecard {
        schema_version: SCHEMA_VERSION.to_owned(),
        activity: activity.to_owned(),
        generated_at: provenance.generated_at,
        log_fingerprint: provenance.log_fingerprint,
        aggregate,
        evaluable_count,
        scored_count,
        weights,
        narrative,
        results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

pub fn render(scorecard: &Scorecard, format: Format) -> Vec<u8> {
    match format {
        Format::Json => render_json(scorecard).into_bytes(),
        Format::Markdown => render_markdown(scorecard).into_bytes(),
    }
}

pub fn render_json(scorecard: &Scorecard) -> String {
    let mut out = serde_json::to_string_pretty(scorecard).expect("scorecard serializes");
    out.push('\n');
    out
}

pub fn parse_json(text: &str) -> Result<Scorecard> {
    Ok(serde_json::from_str(text)?)
}

fn fmt_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.4}")
    }
}

pub fn render_markdown(sc: &Scorecard) -> String {
    let mut out = format!("# RPA viability scorecard: {}\n\n", sc.activity);
    out.push_str(&format!(
        "- generated: {}\n- log: `{}`\n- aggregate score: {}\n- evaluable criteria: {} of {}\n\n{}\n",
        sc.generated_at.to_rfc3339_opts(SecondsFormat::Millis, true),
        sc.log_fingerprint,
        sc.aggregate.map_or("n/a".to_owned(), |a| format!("{a:.3}")),
        sc.evaluable_count,
        sc.results.len(),
        sc.narrative,
    ));
    for perspective in Perspective::ALL {
        out.push_str(&format!("\n## {}\n", perspective.title()));
        for r in sc.results.iter().filter(|r| r.perspective == perspective) {
            let status = match &r.status {
                Status::Computed => "computed".to_owned(),
                Status::External => "external evidence".to_owned(),
                Status::NotEvaluable { reason } => format!("not evaluable ({reason})"),
            };
            out.push_str(&format!("\n### {}\n\n", r.criterion_id.title()));
            out.push_str(&format!(
                "- status: {status}\n- score: {}\n- weight: {}\n",
                r.normalized_score.map_or("n/a".to_owned(), |s| format!("{s:.3}")),
                fmt_number(sc.weights.get(&r.criterion_id).copied().unwrap_or(1.0)),
            ));
            if !r.metrics.is_empty() {
                out.push_str("\n| metric | value |\n|---|---|\n");
                for (k, v) in &r.metrics {
                    out.push_str(&format!("| {k} | {} |\n", fmt_number(*v)));
                }
            }
            out.push_str(&format!("\n{}\n", r.narrative));
        }
    }
    out
}
