use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::timestamp::{parse_offset, TimestampFormat, DEFAULT_PATTERN};
use super::{is_reserved_label, Attributes, Case, Event, EventLog, Scalar};
use crate::error::{Error, Result};

/// Which CSV columns hold the case id, activity, timestamp and so on.
///
/// Without a header row, columns are referenced by 0-based index
/// (`"0"`, `"1"`, ...). Any column that is neither mapped nor a case
/// attribute ends up in the event's attribute map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub case_id_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
    pub timestamp_pattern: String,
    /// Offset applied to timestamps that carry no zone.
    pub utc_offset: String,
    pub resource_column: Option<String>,
    pub case_attribute_columns: Vec<String>,
    /// Columns whose name starts with this prefix are case attributes too.
    pub case_attribute_prefix: Option<String>,
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            case_id_column: "Case ID".into(),
            activity_column: "Activity".into(),
            timestamp_column: "Complete Timestamp".into(),
            timestamp_pattern: DEFAULT_PATTERN.into(),
            utc_offset: "+00:00".into(),
            resource_column: Some("Resource".into()),
            case_attribute_columns: Vec::new(),
            case_attribute_prefix: Some("(case) ".into()),
            delimiter: ',',
            has_header: true,
        }
    }
}

impl ColumnMapping {
    pub fn validate(&self) -> Result<()> {
        let core = [
            &self.case_id_column,
            &self.activity_column,
            &self.timestamp_column,
        ];
        if core[0] == core[1] || core[0] == core[2] || core[1] == core[2] {
            return Err(Error::InvalidMapping(
                "case id, activity and timestamp columns must be distinct".into(),
            ));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::InvalidMapping(format!(
                "delimiter {:?} is not a single-byte character",
                self.delimiter
            )));
        }
        parse_offset(&self.utc_offset)?;
        Ok(())
    }

    pub fn timestamp_format(&self) -> Result<TimestampFormat> {
        Ok(TimestampFormat::new(
            &self.timestamp_pattern,
            parse_offset(&self.utc_offset)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug)]
struct Layout {
    width: usize,
    case_id: usize,
    activity: usize,
    timestamp: usize,
    resource: Option<usize>,
    case_attrs: Vec<(usize, String)>,
    event_attrs: Vec<(usize, String)>,
}

impl Layout {
    fn resolve(header: Option<&csv::StringRecord>, width: usize, mapping: &ColumnMapping) -> Result<Self> {
        let names: Vec<String> = match header {
            Some(h) => h.iter().map(|s| s.trim().to_owned()).collect(),
            None => (0..width).map(|i| i.to_string()).collect(),
        };
        let find = |col: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == col.trim())
                .ok_or_else(|| Error::MissingColumn(col.to_owned()))
        };
        let case_id = find(&mapping.case_id_column)?;
        let activity = find(&mapping.activity_column)?;
        let timestamp = find(&mapping.timestamp_column)?;
        // an absent resource column leaves resources unset
        let resource = mapping.resource_column.as_deref().and_then(|c| find(c).ok());
        let mut case_cols = BTreeSet::new();
        for col in &mapping.case_attribute_columns {
            case_cols.insert(find(col)?);
        }
        if let Some(prefix) = &mapping.case_attribute_prefix {
            case_cols.extend(
                names
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| n.starts_with(prefix.as_str()))
                    .map(|(i, _)| i),
            );
        }
        let mapped = [Some(case_id), Some(activity), Some(timestamp), resource];
        let mut case_attrs = Vec::new();
        let mut event_attrs = Vec::new();
        for (i, name) in names.into_iter().enumerate() {
            if mapped.contains(&Some(i)) {
                continue;
            }
            if case_cols.contains(&i) {
                case_attrs.push((i, name));
            } else {
                event_attrs.push((i, name));
            }
        }
        Ok(Layout {
            width,
            case_id,
            activity,
            timestamp,
            resource,
            case_attrs,
            event_attrs,
        })
    }
}

/// Parses a CSV event log. Warnings (conflicting case attributes) are
/// also forwarded to the `log` facade.
pub fn parse_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<(EventLog, Vec<ParseWarning>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(std::io::BufReader::new(file), mapping)
}

struct CaseBuilder {
    case_id: String,
    events: Vec<Event>,
    attributes: Attributes,
}

pub fn parse_csv_reader<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<(EventLog, Vec<ParseWarning>)> {
    mapping.validate()?;
    let format = mapping.timestamp_format()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .has_headers(mapping.has_header)
        .flexible(true)
        .from_reader(reader);

    let header = if mapping.has_header {
        Some(rdr.headers()?.clone())
    } else {
        None
    };
    let mut layout: Option<Layout> = match &header {
        Some(h) => Some(Layout::resolve(Some(h), h.len(), mapping)?),
        None => None,
    };

    let mut builders: Vec<CaseBuilder> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut warnings = Vec::new();
    let missing_resource = |lay: &Layout| match &mapping.resource_column {
        Some(col) if lay.resource.is_none() => Some(ParseWarning {
            line: 1,
            message: format!("resource column {col:?} not found; resources left empty"),
        }),
        _ => None,
    };
    warnings.extend(layout.as_ref().and_then(missing_resource));
    let mut record = csv::StringRecord::new();

    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if layout.is_none() {
            let lay = Layout::resolve(None, record.len(), mapping)?;
            warnings.extend(missing_resource(&lay));
            layout = Some(lay);
        }
        let lay = layout.as_ref().unwrap();
        if record.len() != lay.width {
            return Err(Error::MalformedRow {
                line,
                expected: lay.width,
                found: record.len(),
            });
        }
        let case_id = record[lay.case_id].trim();
        let activity = record[lay.activity].trim();
        if activity.is_empty() {
            return Err(Error::EmptyActivity { line });
        }
        if is_reserved_label(activity) {
            return Err(Error::ReservedLabel {
                line,
                label: activity.to_owned(),
            });
        }
        let timestamp = format.parse_line(&record[lay.timestamp], line)?;
        let mut event = Event::new(case_id, activity, timestamp);
        event.resource = lay
            .resource
            .map(|i| record[i].trim())
            .filter(|r| !r.is_empty())
            .map(str::to_owned);
        for (i, name) in &lay.event_attrs {
            let value = &record[*i];
            if !value.is_empty() {
                event.attributes.insert(name.clone(), Scalar::from(value));
            }
        }

        let slot = match index.get(case_id) {
            Some(&slot) => {
                let builder = &builders[slot];
                for (i, name) in &lay.case_attrs {
                    let value = &record[*i];
                    match builder.attributes.get(name) {
                        Some(Scalar::String(first)) if first != value => {
                            let message = format!(
                                "case {case_id:?}: attribute {name:?} is {value:?}, keeping first value {first:?}"
                            );
                            log::warn!("line {line}: {message}");
                            warnings.push(ParseWarning { line, message });
                        }
                        _ => {}
                    }
                }
                slot
            }
            None => {
                let mut attributes = Attributes::new();
                for (i, name) in &lay.case_attrs {
                    attributes.insert(name.clone(), Scalar::from(&record[*i]));
                }
                builders.push(CaseBuilder {
                    case_id: case_id.to_owned(),
                    events: Vec::new(),
                    attributes,
                });
                index.insert(case_id.to_owned(), builders.len() - 1);
                builders.len() - 1
            }
        };
        builders[slot].events.push(event);
    }

    if builders.is_empty() {
        return Err(Error::EmptyLog);
    }
    let cases = builders
        .into_iter()
        .map(|b| Case::new(b.case_id, b.events, b.attributes))
        .collect::<Result<Vec<_>>>()?;
    Ok((EventLog::new(cases)?, warnings))
}

/// Writes `log` using the default [`ColumnMapping`] layout: the four core
/// columns, then every case attribute key, then every event attribute key.
pub fn write_csv<W: Write>(log: &EventLog, writer: W) -> Result<()> {
    let mut case_keys = BTreeSet::new();
    let mut event_keys = BTreeSet::new();
    for case in log.cases() {
        case_keys.extend(case.case_attributes().keys().cloned());
        for e in case.events() {
            event_keys.extend(e.attributes.keys().cloned());
        }
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["Case ID", "Activity", "Resource", "Complete Timestamp"];
    header.extend(case_keys.iter().map(String::as_str));
    header.extend(event_keys.iter().map(String::as_str));
    wtr.write_record(&header)?;

    for case in log.cases() {
        for e in case.events() {
            let mut row = vec![
                e.case_id.clone(),
                e.activity.clone(),
                e.resource.clone().unwrap_or_default(),
                e.timestamp.format(DEFAULT_PATTERN).to_string(),
            ];
            for key in &case_keys {
                row.push(
                    case.case_attributes()
                        .get(key)
                        .map(ToString::to_string)
                        .unwrap_or_default(),
                );
            }
            for key in &event_keys {
                row.push(e.attributes.get(key).map(ToString::to_string).unwrap_or_default());
            }
            wtr.write_record(&row)?;
        }
    }
    wtr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
