use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Utc};

use super::{to_millis, Timestamp};
use crate::error::{Error, Result};

/// Timestamp parser built from a `chrono` strftime pattern.
///
/// Patterns containing a zone token (`%z`, `%:z`, `%#z`) are parsed as
/// zoned instants; all others are local times at `default_offset`. The
/// special pattern `rfc3339` accepts ISO 8601 / RFC 3339 strings.
#[derive(Debug, Clone)]
pub struct TimestampFormat {
    pattern: String,
    zoned: bool,
    date_only: bool,
    default_offset: FixedOffset,
}

pub const DEFAULT_PATTERN: &str = "%Y/%m/%d %H:%M:%S%.3f";

impl TimestampFormat {
    pub fn new(pattern: &str, default_offset: FixedOffset) -> Self {
        let zoned = ["%z", "%:z", "%#z", "%::z"]
            .iter()
            .any(|tok| pattern.contains(tok));
        let date_only = !["%H", "%I", "%k", "%l", "%T", "%R", "%X", "%s"]
            .iter()
            .any(|tok| pattern.contains(tok));
        TimestampFormat {
            pattern: pattern.to_owned(),
            zoned,
            date_only,
            default_offset,
        }
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn parse(&self, raw: &str) -> Option<Timestamp> {
        let raw = raw.trim();
        let utc = if self.pattern.eq_ignore_ascii_case("rfc3339") {
            DateTime::parse_from_rfc3339(raw).ok()?.with_timezone(&Utc)
        } else if self.zoned {
            DateTime::parse_from_str(raw, &self.pattern)
                .ok()?
                .with_timezone(&Utc)
        } else {
            let naive = if self.date_only {
                NaiveDate::parse_from_str(raw, &self.pattern)
                    .ok()?
                    .and_hms_opt(0, 0, 0)?
            } else {
                NaiveDateTime::parse_from_str(raw, &self.pattern).ok()?
            };
            self.default_offset
                .from_local_datetime(&naive)
                .single()?
                .with_timezone(&Utc)
        };
        Some(to_millis(utc))
    }

    pub(crate) fn parse_line(&self, raw: &str, line: u64) -> Result<Timestamp> {
        self.parse(raw).ok_or_else(|| Error::TimestampParse {
            line,
            raw: raw.to_owned(),
            pattern: self.pattern.clone(),
        })
    }
}

pub fn parse_offset(raw: &str) -> Result<FixedOffset> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("utc") || raw.eq_ignore_ascii_case("z") {
        return Ok(FixedOffset::east_opt(0).unwrap());
    }
    raw.parse::<FixedOffset>()
        .map_err(|_| Error::InvalidConfig(format!("invalid UTC offset {raw:?}")))
}
