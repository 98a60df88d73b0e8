use toml::{Table, Value};

/// Replaces TOML datetime literals by their string form so that
/// `from = 2018-01-01T00:00:00Z` and the quoted spelling mean the same.
pub(crate) fn normalize_datetimes(table: &mut Table) {
    for (_, value) in table.iter_mut() {
        normalize(value);
    }
}

fn normalize(value: &mut Value) {
    match value {
        Value::Datetime(dt) => *value = Value::String(dt.to_string()),
        Value::Table(t) => normalize_datetimes(t),
        Value::Array(items) => items.iter_mut().for_each(normalize),
        _ => {}
    }
}

/// Parses a command-line value as TOML, falling back to a bare string.
pub(crate) fn parse_scalar(raw: &str) -> Value {
    let mut value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()));
    normalize(&mut value);
    value
}

/// Inserts `value` at `path`, creating intermediate tables.
pub(crate) fn insert_path(table: &mut Table, path: &[&str], value: Value) -> Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut cursor = table;
    for key in parents {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| format!("{key:?} is not a table"))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
