//! Trace variants: cases grouped by their exact activity sequence.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::EventLog;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub sequence: Vec<String>,
    pub case_ids: Vec<String>,
}

impl Variant {
    pub fn count(&self) -> usize {
        self.case_ids.len()
    }

    pub fn contains(&self, activity: &str) -> bool {
        self.sequence.iter().any(|a| a == activity)
    }

    pub fn occurrences(&self, activity: &str) -> usize {
        self.sequence.iter().filter(|a| *a == activity).count()
    }

    /// Sequence joined with `→`.
    pub fn label(&self) -> String {
        self.sequence.join("→")
    }
}

/// Variants sorted by count (descending), ties by lexicographic sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantTable {
    variants: Vec<Variant>,
    total_cases: usize,
}

impl VariantTable {
    pub fn variants(&self) -> &[Variant] {
        &self.variants
    }

    pub fn total_cases(&self) -> usize {
        self.total_cases
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn share(&self, variant: &Variant) -> f64 {
        variant.count() as f64 / self.total_cases as f64
    }

    /// Variant of the given case, if any.
    pub fn variant_of(&self, case_id: &str) -> Option<&Variant> {
        self.variants
            .iter()
            .find(|v| v.case_ids.iter().any(|c| c == case_id))
    }
}

pub fn build_variant_table(log: &EventLog) -> Result<VariantTable> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut index: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut variants: Vec<Variant> = Vec::new();
    for case in log.cases() {
        let seq: Vec<&str> = case.activities().collect();
        let slot = *index.entry(seq).or_insert_with_key(|seq| {
            variants.push(Variant {
                sequence: seq.iter().map(|s| s.to_string()).collect(),
                case_ids: Vec::new(),
            });
            variants.len() - 1
        });
        variants[slot].case_ids.push(case.case_id().to_owned());
    }
    variants.sort_by(|a, b| b.count().cmp(&a.count()).then_with(|| a.sequence.cmp(&b.sequence)));
    Ok(VariantTable {
        variants,
        total_cases: log.num_cases(),
    })
}

/// Number of leading variants needed to reach `fraction` of all cases.
pub fn coverage_prefix_len(table: &VariantTable, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let total = table.total_cases as f64;
    let mut cumulative = 0usize;
    for (i, v) in table.variants.iter().enumerate() {
        cumulative += v.count();
        // relative slack so that e.g. 9/10 >= 0.9 despite rounding
        if cumulative as f64 / total >= fraction * (1.0 - 1e-12) {
            return Ok(i + 1);
        }
    }
    Ok(table.variants.len())
}

/// Keeps the cases of the shortest prefix of the variant table whose
/// cumulative share reaches `fraction`.
pub fn coverage_filter(table: &VariantTable, log: &EventLog, fraction: f64) -> Result<EventLog> {
    let n = coverage_prefix_len(table, fraction)?;
    let keep: HashSet<&str> = table.variants[..n]
        .iter()
        .flat_map(|v| v.case_ids.iter().map(String::as_str))
        .collect();
    Ok(log.retain_cases(&keep))
}

pub fn variants_containing<'a>(table: &'a VariantTable, activity: &str) -> Vec<&'a Variant> {
    table.variants.iter().filter(|v| v.contains(activity)).collect()
}

/// TSV with columns rank, count, share, sequence.
pub fn render_tsv(table: &VariantTable) -> String {
    let mut out = String::from("rank\tcount\tshare\tsequence\n");
    for (i, v) in table.variants.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            i + 1,
            v.count(),
            table.share(v),
            v.label()
        ));
    }
    out
}
