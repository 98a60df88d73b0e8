//! Command-line front end. [`run`] is the whole program minus process exit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SubsecRound, Utc};
use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Deserialize;
use toml::{Table, Value};

use crate::context::{activity_context, build_dfg, render_context};
use crate::criteria::{assess, AssessmentConfig, Bucket, CriterionId};
use crate::error::Error;
use crate::event_log::{filter_cases, parse_csv, parse_xes, CaseFilter, ColumnMapping, EventLog, Timestamp};
use crate::scoring::{build_scorecard, fingerprint_file, render, Format, Provenance, Weights, REPORT_SCHEMA};
use crate::synth::{generate, load_spec, write_output};
use crate::toml_value::{insert_path, normalize_datetimes, parse_scalar};
use crate::variants::{build_variant_table, coverage_filter, render_tsv};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "RPA_VIABILITY_CONFIG";

/// Parse warnings printed before the rest are summarized.
const MAX_WARNINGS: usize = 20;

/// The config file: `[assessment]`, `[filter]`, `[weights]`, `[mapping]`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub assessment: AssessmentConfig,
    pub filter: FilterConfig,
    pub weights: Weights,
    pub mapping: ColumnMapping,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub attributes: BTreeMap<String, String>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    /// Keep the most frequent variants covering at least this share of cases.
    pub variant_coverage: Option<f64>,
}

impl FilterConfig {
    pub fn case_filter(&self) -> CaseFilter {
        CaseFilter {
            attributes: self.attributes.clone(),
            from: self.from,
            to: self.to,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rpa-viability",
    version,
    about = "Assess the RPA viability of process activities from event logs"
)]
struct Cli {
    /// More diagnostics on stderr (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate all thirteen criteria for one activity and print the scorecard.
    Analyze(AnalyzeArgs),
    /// Print the variant table as TSV.
    Variants(LogArgs),
    /// Print ranked predecessors and successors of an activity.
    Context {
        activity: String,
        #[command(flatten)]
        input: LogArgs,
    },
    /// List activities with occurrence and case counts as TSV.
    Activities(LogArgs),
    /// Generate a synthetic log and its ground-truth ledger.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the JSON schema of analyze reports.
    ReportSchema,
}

#[derive(Debug, Args)]
struct LogArgs {
    /// Event log, XES when the extension is .xes and CSV otherwise.
    #[arg(long)]
    log: PathBuf,
    /// TOML config file.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// TOML column mapping; replaces the config's [mapping] table.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Override any config value, e.g. `assessment.auto_predecessors=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Keep cases whose attribute equals the value.
    #[arg(long = "filter", value_name = "ATTRIBUTE=VALUE")]
    filter: Vec<String>,
    /// Keep cases starting at or after this instant (RFC 3339).
    #[arg(long)]
    from: Option<String>,
    /// Keep cases starting before this instant (RFC 3339).
    #[arg(long)]
    to: Option<String>,
    /// Keep the most frequent variants covering this share of cases.
    #[arg(long)]
    variant_coverage: Option<f64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: LogArgs,
    /// Target activity; overrides assessment.target_activity.
    #[arg(long)]
    activity: Option<String>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report timestamp (RFC 3339); defaults to now.
    #[arg(long)]
    generated_at: Option<String>,
    /// Frequency bucket: day, week or month.
    #[arg(long)]
    bucket: Option<Bucket>,
    #[arg(long = "weight", value_name = "CRITERION=WEIGHT")]
    weights: Vec<String>,
    /// Score for an externally assessed criterion.
    #[arg(long = "evidence", value_name = "CRITERION=SCORE")]
    evidence: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

fn data(context: impl std::fmt::Display) -> impl FnOnce(Error) -> Failure {
    move |e| Failure::Data(format!("{context}: {e}"))
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    1
                }
            };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(failure) => {
            let (Failure::Usage(msg) | Failure::Data(msg)) = &failure;
            let _ = writeln!(stderr, "error: {msg}");
            failure.code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    match command {
        Command::Analyze(args) => analyze(args, stdout, stderr),
        Command::Variants(input) => {
            let (_, log) = load(&input, &Overrides::default(), stderr)?;
            let table = build_variant_table(&log).map_err(data(input.log.display()))?;
            emit(stdout, render_tsv(&table).as_bytes())
        }
        Command::Context { activity, input } => {
            let (_, log) = load(&input, &Overrides::default(), stderr)?;
            let dfg = build_dfg(&log).map_err(data(input.log.display()))?;
            let ctx = activity_context(&dfg, &activity).map_err(data(input.log.display()))?;
            emit(stdout, render_context(&ctx).as_bytes())
        }
        Command::Activities(input) => {
            let (_, log) = load(&input, &Overrides::default(), stderr)?;
            emit(stdout, render_activities(&log).as_bytes())
        }
        Command::Generate { spec, out } => {
            let parsed = load_spec(&spec).map_err(data(spec.display()))?;
            let (log, ledger) = generate(&parsed).map_err(data(spec.display()))?;
            write_output(&out, &log, &ledger).map_err(data(out.display()))?;
            let _ = writeln!(
                stderr,
                "wrote {} cases, {} events to {}",
                log.num_cases(),
                log.num_events(),
                out.display()
            );
            Ok(())
        }
        Command::ReportSchema => emit(stdout, REPORT_SCHEMA.as_bytes()),
    }
}

fn emit(stdout: &mut dyn Write, bytes: &[u8]) -> Outcome<()> {
    stdout
        .write_all(bytes)
        .map_err(|e| Failure::Data(format!("<stdout>: {e}")))
}

fn render_activities(log: &EventLog) -> String {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for case in log.cases() {
        let mut seen = std::collections::BTreeSet::new();
        for a in case.activities() {
            let entry = counts.entry(a).or_default();
            entry.0 += 1;
            if seen.insert(a) {
                entry.1 += 1;
            }
        }
    }
    let mut rows: Vec<_> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.0.cmp(b.0)));
    let mut out = String::from("activity\toccurrences\tcases\n");
    for (activity, (occurrences, cases)) in rows {
        out.push_str(&format!("{activity}\t{occurrences}\t{cases}\n"));
    }
    out
}

/// Analyze-only flags that map onto config keys.
#[derive(Default)]
struct Overrides<'a> {
    activity: Option<&'a str>,
    bucket: Option<Bucket>,
    weights: &'a [String],
    evidence: &'a [String],
}

fn split_pair<'a>(flag: &str, raw: &'a str) -> Outcome<(&'a str, &'a str)> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| Failure::Usage(format!("{flag} expects KEY=VALUE, got {raw:?}")))
}

fn criterion_number(flag: &str, raw: &str) -> Outcome<(CriterionId, f64)> {
    let (id, value) = split_pair(flag, raw)?;
    let id: CriterionId = id
        .parse()
        .map_err(|_| Failure::Usage(format!("{flag}: unknown criterion {id:?}")))?;
    let value: f64 = value
        .parse()
        .map_err(|_| Failure::Usage(format!("{flag}: {value:?} is not a number")))?;
    Ok((id, value))
}

/// Config file, then --mapping, then --set, then dedicated flags.
fn resolve_config(input: &LogArgs, overrides: &Overrides) -> Outcome<ConfigFile> {
    let read_table = |path: &Path| -> Outcome<Table> {
        let text = fs::read_to_string(path).map_err(|e| data(path.display())(Error::io(path, e)))?;
        let mut table: Table = text
            .parse()
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        normalize_datetimes(&mut table);
        Ok(table)
    };
    let mut table = match &input.config {
        Some(path) => read_table(path)?,
        None => Table::new(),
    };
    if let Some(path) = &input.mapping {
        table.insert("mapping".into(), Value::Table(read_table(path)?));
    }
    let set = |table: &mut Table, path: &[&str], value: Value| {
        insert_path(table, path, value).map_err(|e| Failure::Usage(format!("cannot set {}: {e}", path.join("."))))
    };
    for raw in &input.set {
        let (key, value) = split_pair("--set", raw)?;
        let path: Vec<&str> = key.split('.').collect();
        set(&mut table, &path, parse_scalar(value))?;
    }
    for raw in &input.filter {
        let (attribute, value) = split_pair("--filter", raw)?;
        set(&mut table, &["filter", "attributes", attribute], Value::String(value.into()))?;
    }
    if let Some(from) = &input.from {
        set(&mut table, &["filter", "from"], Value::String(from.clone()))?;
    }
    if let Some(to) = &input.to {
        set(&mut table, &["filter", "to"], Value::String(to.clone()))?;
    }
    if let Some(fraction) = input.variant_coverage {
        set(&mut table, &["filter", "variant_coverage"], Value::Float(fraction))?;
    }
    if let Some(activity) = overrides.activity {
        set(&mut table, &["assessment", "target_activity"], Value::String(activity.into()))?;
    }
    if let Some(bucket) = overrides.bucket {
        set(&mut table, &["assessment", "frequency_bucket"], Value::String(bucket.as_str().into()))?;
    }
    for raw in overrides.weights {
        let (id, w) = criterion_number("--weight", raw)?;
        set(&mut table, &["weights", id.as_str()], Value::Float(w))?;
    }
    for raw in overrides.evidence {
        let (id, v) = criterion_number("--evidence", raw)?;
        set(&mut table, &["assessment", "external_evidence", id.as_str(), "value"], Value::Float(v))?;
    }
    let source = input
        .config
        .as_ref()
        .map_or_else(|| "<command line>".to_owned(), |p| p.display().to_string());
    table
        .try_into()
        .map_err(|e: toml::de::Error| Failure::Data(format!("{source}: invalid configuration: {}", e.message())))
}

/// Resolves the config, parses the log and applies filters.
fn load(input: &LogArgs, overrides: &Overrides, stderr: &mut dyn Write) -> Outcome<(ConfigFile, EventLog)> {
    let config = resolve_config(input, overrides)?;
    let path = &input.log;
    let is_xes = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("xes"));
    let log = if is_xes {
        parse_xes(path).map_err(data(path.display()))?
    } else {
        let (log, warnings) = parse_csv(path, &config.mapping).map_err(data(path.display()))?;
        for w in warnings.iter().take(MAX_WARNINGS) {
            let _ = writeln!(stderr, "warning: {}: {w}", path.display());
        }
        if warnings.len() > MAX_WARNINGS {
            let _ = writeln!(
                stderr,
                "warning: {}: {} more warnings suppressed",
                path.display(),
                warnings.len() - MAX_WARNINGS
            );
        }
        log
    };
    log::info!("{}: {} cases, {} events", path.display(), log.num_cases(), log.num_events());

    let case_filter = config.filter.case_filter();
    let mut log = if case_filter.is_empty() {
        log
    } else {
        filter_cases(&log, &case_filter)
    };
    if let Some(fraction) = config.filter.variant_coverage {
        let table = build_variant_table(&log).map_err(data(path.display()))?;
        log = coverage_filter(&table, &log, fraction).map_err(data(path.display()))?;
    }
    if log.is_empty() {
        return Err(Failure::Data(format!("{}: no cases left after filtering", path.display())));
    }
    log::info!("after filtering: {} cases, {} events", log.num_cases(), log.num_events());
    Ok((config, log))
}

fn analyze(args: AnalyzeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    let generated_at = match &args.generated_at {
        Some(raw) => DateTime::parse_from_rfc3339(raw)
            .map_err(|e| Failure::Usage(format!("--generated-at {raw:?}: {e}")))?
            .with_timezone(&Utc),
        None => Utc::now(),
    }
    .trunc_subsecs(3);
    let overrides = Overrides {
        activity: args.activity.as_deref(),
        bucket: args.bucket,
        weights: &args.weights,
        evidence: &args.evidence,
    };
    let (config, log) = load(&args.input, &overrides, stderr)?;
    let activity = config.assessment.target_activity.clone();
    if activity.trim().is_empty() {
        return Err(Failure::Usage(
            "analyze needs a target activity: pass --activity or set assessment.target_activity".into(),
        ));
    }
    let path = &args.input.log;
    let results = assess(&log, &config.assessment).map_err(data(path.display()))?;
    let provenance = Provenance {
        generated_at,
        log_fingerprint: fingerprint_file(path).map_err(data(path.display()))?,
    };
    let scorecard = build_scorecard(&activity, results, &config.weights, provenance)
        .map_err(data(format!("activity {activity:?}")))?;
    let bytes = render(&scorecard, args.format);
    match &args.out {
        Some(out) => fs::write(out, bytes).map_err(|e| data(out.display())(Error::io(out, e))),
        None => emit(stdout, &bytes),
    }
}
