use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{Case, Event, EventLog, Provenance, RawAttributes};
use crate::error::{Error, Result};

fn col(name: &str) -> Option<String> {
    Some(name.to_string())
}

/// Maps logical fields to CSV header names. Attribute columns default to
/// their own key name; set one to `null` when the file has no such column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub case_id: String,
    pub activity: String,
    pub timestamp: String,
    #[serde(default = "default_race")]
    pub race: Option<String>,
    #[serde(default = "default_age")]
    pub age: Option<String>,
    #[serde(default = "default_gender")]
    pub gender: Option<String>,
    #[serde(default = "default_insurance")]
    pub insurance: Option<String>,
    #[serde(default = "default_language")]
    pub language: Option<String>,
    #[serde(default = "default_acuity")]
    pub acuity: Option<String>,
    #[serde(default = "default_disposition")]
    pub disposition: Option<String>,
}

fn default_race() -> Option<String> {
    col("race")
}
fn default_age() -> Option<String> {
    col("age")
}
fn default_gender() -> Option<String> {
    col("gender")
}
fn default_insurance() -> Option<String> {
    col("insurance")
}
fn default_language() -> Option<String> {
    col("language")
}
fn default_acuity() -> Option<String> {
    col("acuity")
}
fn default_disposition() -> Option<String> {
    col("disposition")
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            case_id: "case_id".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            race: default_race(),
            age: default_age(),
            gender: default_gender(),
            insurance: default_insurance(),
            language: default_language(),
            acuity: default_acuity(),
            disposition: default_disposition(),
        }
    }
}

impl ColumnMap {
    /// `(config key, header name)` for every mapped column, in output order.
    fn mapped(&self) -> Vec<(&'static str, &str)> {
        let mut out = vec![
            ("case_id", self.case_id.as_str()),
            ("activity", self.activity.as_str()),
            ("timestamp", self.timestamp.as_str()),
        ];
        let optional = [
            ("race", &self.race),
            ("age", &self.age),
            ("gender", &self.gender),
            ("insurance", &self.insurance),
            ("language", &self.language),
            ("acuity", &self.acuity),
            ("disposition", &self.disposition),
        ];
        out.extend(
            optional
                .into_iter()
                .filter_map(|(k, v)| v.as_deref().map(|v| (k, v))),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvOptions {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// chrono format string.
    #[serde(default = "default_timestamp_format")]
    pub timestamp_format: String,
}

fn default_delimiter() -> char {
    ','
}

fn default_timestamp_format() -> String {
    "%Y-%m-%d %H:%M:%S".into()
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: default_delimiter(),
            timestamp_format: default_timestamp_format(),
        }
    }
}

impl CsvOptions {
    fn delimiter_byte(&self) -> Result<u8> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| {
                Error::config(
                    "csv.delimiter",
                    "delimiter must be a single ASCII character",
                )
            })
    }
}

#[derive(Default)]
struct Interner(HashSet<Arc<str>>);

impl Interner {
    fn get(&mut self, s: &str) -> Arc<str> {
        if let Some(v) = self.0.get(s) {
            return Arc::clone(v);
        }
        let v: Arc<str> = Arc::from(s);
        self.0.insert(Arc::clone(&v));
        v
    }

    fn opt(&mut self, s: Option<&str>) -> Option<Arc<str>> {
        s.filter(|s| !s.trim().is_empty()).map(|s| self.get(s))
    }
}

fn parse_acuity(raw: &str) -> Option<u8> {
    let v: f64 = raw.trim().parse().ok()?;
    (v.fract() == 0.0 && (1.0..=5.0).contains(&v)).then_some(v as u8)
}

struct Layout {
    case_id: usize,
    activity: usize,
    timestamp: usize,
    race: Option<usize>,
    age: Option<usize>,
    gender: Option<usize>,
    insurance: Option<usize>,
    language: Option<usize>,
    acuity: Option<usize>,
    disposition: Option<usize>,
    extra: Vec<(usize, Arc<str>)>,
}

fn layout(headers: &csv::StringRecord, columns: &ColumnMap) -> Result<Layout> {
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let find = |key: &str, name: &str| -> Result<usize> {
        position.get(name).copied().ok_or_else(|| {
            Error::config(
                format!("column_map.{key}"),
                format!("column `{name}` not found in header"),
            )
        })
    };
    let opt = |key: &str, name: &Option<String>| -> Result<Option<usize>> {
        name.as_deref().map(|n| find(key, n)).transpose()
    };
    let mapped: HashSet<&str> = columns.mapped().into_iter().map(|(_, n)| n).collect();
    let extra = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !mapped.contains(h))
        .map(|(i, h)| (i, Arc::from(h)))
        .collect();
    Ok(Layout {
        case_id: find("case_id", &columns.case_id)?,
        activity: find("activity", &columns.activity)?,
        timestamp: find("timestamp", &columns.timestamp)?,
        race: opt("race", &columns.race)?,
        age: opt("age", &columns.age)?,
        gender: opt("gender", &columns.gender)?,
        insurance: opt("insurance", &columns.insurance)?,
        language: opt("language", &columns.language)?,
        acuity: opt("acuity", &columns.acuity)?,
        disposition: opt("disposition", &columns.disposition)?,
        extra,
    })
}

/// Reads a CSV event log.
///
/// Rows with an empty case id or activity, an unparseable timestamp, or a
/// malformed record are skipped and counted in `provenance.rows_rejected`.
pub fn load_log<R: Read>(
    reader: R,
    source: &str,
    columns: &ColumnMap,
    options: &CsvOptions,
) -> Result<EventLog> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(options.delimiter_byte()?)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let layout = layout(csv.headers()?, columns)?;

    let mut interner = Interner::default();
    let mut index: HashMap<Arc<str>, usize> = HashMap::new();
    let mut grouped: Vec<(Arc<str>, Vec<Event>)> = Vec::new();
    let mut rows_read = 0;
    let mut rejected = 0;

    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
            Err(_) => {
                rows_read += 1;
                rejected += 1;
                continue;
            }
        }
        rows_read += 1;
        let field = |i: Option<usize>| i.and_then(|i| record.get(i));

        let case_id = field(Some(layout.case_id)).map(str::trim).unwrap_or("");
        let activity = field(Some(layout.activity)).map(str::trim).unwrap_or("");
        let timestamp = field(Some(layout.timestamp))
            .and_then(|t| NaiveDateTime::parse_from_str(t.trim(), &options.timestamp_format).ok());
        let (false, false, Some(timestamp)) = (case_id.is_empty(), activity.is_empty(), timestamp)
        else {
            rejected += 1;
            continue;
        };

        let case_id = interner.get(case_id);
        let attributes = RawAttributes {
            race: interner.opt(field(layout.race)),
            age: interner.opt(field(layout.age)),
            gender: interner.opt(field(layout.gender)),
            insurance: interner.opt(field(layout.insurance)),
            language: interner.opt(field(layout.language)),
            disposition: interner.opt(field(layout.disposition)),
            acuity: field(layout.acuity).and_then(parse_acuity),
        };
        let mut extra = BTreeMap::new();
        for (i, name) in &layout.extra {
            if let Some(v) = record.get(*i).filter(|v| !v.is_empty()) {
                extra.insert(Arc::clone(name), interner.get(v));
            }
        }
        let event = Event {
            case_id: Arc::clone(&case_id),
            activity: interner.get(activity),
            timestamp,
            attributes,
            extra,
        };
        let slot = *index.entry(Arc::clone(&case_id)).or_insert_with(|| {
            grouped.push((case_id, Vec::new()));
            grouped.len() - 1
        });
        grouped[slot].1.push(event);
    }

    if grouped.is_empty() {
        return Err(Error::EmptyInput { rejected });
    }
    let cases = grouped
        .into_iter()
        .map(|(id, events)| Case::new(id, events))
        .collect::<Result<Vec<_>>>()?;
    EventLog::new(
        cases,
        Provenance {
            source: source.to_string(),
            rows_read,
            rows_rejected: rejected,
        },
    )
}

pub fn load_log_path(path: &Path, columns: &ColumnMap, options: &CsvOptions) -> Result<EventLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_log(
        BufReader::new(file),
        &path.display().to_string(),
        columns,
        options,
    )
}

/// Writes the log in the layout [`load_log`] reads back: mapped columns
/// first, then every extra column in sorted order.
pub fn write_log<W: Write>(
    log: &EventLog,
    writer: W,
    columns: &ColumnMap,
    options: &CsvOptions,
) -> Result<()> {
    let mapped = columns.mapped();
    let mapped_names: HashSet<&str> = mapped.iter().map(|(_, n)| *n).collect();
    let extra_keys: BTreeSet<Arc<str>> = log
        .cases
        .iter()
        .flat_map(|c| c.events.iter())
        .flat_map(|e| e.extra.keys().cloned())
        .filter(|k| !mapped_names.contains(&**k))
        .collect();

    let mut csv = csv::WriterBuilder::new()
        .delimiter(options.delimiter_byte()?)
        .from_writer(writer);
    let header: Vec<&str> = mapped
        .iter()
        .map(|(_, n)| *n)
        .chain(extra_keys.iter().map(|k| &**k))
        .collect();
    csv.write_record(&header)?;

    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for event in log.cases.iter().flat_map(|c| c.events.iter()) {
        row.clear();
        let a = &event.attributes;
        for (key, _) in &mapped {
            let text = |v: &Option<Arc<str>>| v.as_deref().unwrap_or("").to_string();
            row.push(match *key {
                "case_id" => event.case_id.to_string(),
                "activity" => event.activity.to_string(),
                "timestamp" => event
                    .timestamp
                    .format(&options.timestamp_format)
                    .to_string(),
                "race" => text(&a.race),
                "age" => text(&a.age),
                "gender" => text(&a.gender),
                "insurance" => text(&a.insurance),
                "language" => text(&a.language),
                "acuity" => a.acuity.map(|v| v.to_string()).unwrap_or_default(),
                "disposition" => text(&a.disposition),
                other => unreachable!("unmapped key {other}"),
            });
        }
        for key in &extra_keys {
            row.push(
                event
                    .extra
                    .get(key)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_log_path(
    log: &EventLog,
    path: &Path,
    columns: &ColumnMap,
    options: &CsvOptions,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_log(log, BufWriter::new(file), columns, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<EventLog> {
        load_log(
            text.as_bytes(),
            "inline",
            &ColumnMap::default(),
            &CsvOptions::default(),
        )
    }

    const HEADER: &str =
        "case_id,activity,timestamp,race,age,gender,insurance,language,acuity,disposition,note";

    #[test]
    fn sorts_events_within_case() {
        let text = format!(
            "{HEADER}\n\
             1,Triage in the ED,2150-01-01 10:05:00,WHITE,40,F,,ENGLISH,3,,\n\
             1,Enter the ED,2150-01-01 10:00:00,WHITE,40,F,,ENGLISH,,,\n\
             1,Discharge from the ED,2150-01-01 12:00:00,WHITE,40,F,,ENGLISH,,HOME,\n"
        );
        let log = load(&text).unwrap();
        assert_eq!(log.cases.len(), 1);
        let acts: Vec<_> = log.cases[0].events.iter().map(|e| &*e.activity).collect();
        assert_eq!(
            acts,
            ["Enter the ED", "Triage in the ED", "Discharge from the ED"]
        );
        assert_eq!(log.cases[0].events[1].attributes.acuity, Some(3));
    }

    #[test]
    fn partitions_interleaved_cases() {
        let text = format!(
            "{HEADER}\n\
             1,A,2150-01-01 10:00:00,,,,,,,,\n\
             2,A,2150-01-01 10:01:00,,,,,,,,\n\
             1,B,2150-01-01 10:02:00,,,,,,,,\n\
             2,B,2150-01-01 10:03:00,,,,,,,,\n"
        );
        let log = load(&text).unwrap();
        assert_eq!(log.cases.len(), 2);
        for case in &log.cases {
            assert_eq!(case.events.len(), 2);
            assert!(case.events.iter().all(|e| e.case_id == case.case_id));
        }
    }

    #[test]
    fn rejects_bad_timestamp_and_counts_it() {
        let text = format!(
            "{HEADER}\n\
             1,A,2150-01-01 10:00:00,,,,,,,,\n\
             1,B,not-a-date,,,,,,,,\n\
             1,C,2150-01-01 10:02:00,,,,,,,,\n"
        );
        let log = load(&text).unwrap();
        assert_eq!(log.provenance.rows_rejected, 1);
        assert_eq!(log.provenance.rows_read, 3);
        assert_eq!(log.event_count(), 2);
    }

    #[test]
    fn rejects_empty_case_id() {
        let text =
            format!("{HEADER}\n,A,2150-01-01 10:00:00,,,,,,,,\n1,A,2150-01-01 10:00:00,,,,,,,,\n");
        let log = load(&text).unwrap();
        assert_eq!(log.provenance.rows_rejected, 1);
    }

    #[test]
    fn missing_mapped_column_is_config_error() {
        let text = "case_id,activity,ts\n1,A,2150-01-01 10:00:00\n";
        let err = load(text).unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "column_map.timestamp"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_valid_rows_is_empty_input() {
        let text = format!("{HEADER}\n1,A,garbage,,,,,,,,\n");
        assert!(matches!(
            load(&text),
            Err(Error::EmptyInput { rejected: 1 })
        ));
        assert!(matches!(
            load(HEADER),
            Err(Error::EmptyInput { rejected: 0 })
        ));
    }

    #[test]
    fn unmapped_columns_land_in_extra() {
        let text = format!("{HEADER}\n1,A,2150-01-01 10:00:00,,,,,,,,hello\n");
        let log = load(&text).unwrap();
        let e = &log.cases[0].events[0];
        assert_eq!(e.extra.get("note").map(|v| &**v), Some("hello"));
    }

    #[test]
    fn custom_delimiter_and_format() {
        let columns = ColumnMap {
            case_id: "stay_id".into(),
            race: None,
            age: None,
            gender: None,
            insurance: None,
            language: None,
            disposition: None,
            acuity: None,
            ..ColumnMap::default()
        };
        let options = CsvOptions {
            delimiter: ';',
            timestamp_format: "%d/%m/%Y %H:%M".into(),
        };
        let text = "stay_id;activity;timestamp\n7;A;02/01/2150 10:00\n";
        let log = load_log(text.as_bytes(), "x", &columns, &options).unwrap();
        assert_eq!(
            log.cases[0].events[0].timestamp.to_string(),
            "2150-01-02 10:00:00"
        );
    }

    #[test]
    fn acuity_accepts_float_spelling() {
        assert_eq!(parse_acuity("3.0"), Some(3));
        assert_eq!(parse_acuity("2"), Some(2));
        assert_eq!(parse_acuity("6"), None);
        assert_eq!(parse_acuity("2.5"), None);
        assert_eq!(parse_acuity(""), None);
    }

    #[test]
    fn config_json_requires_core_columns() {
        let err =
            serde_json::from_str::<ColumnMap>(r#"{"case_id":"a","activity":"b"}"#).unwrap_err();
        assert!(err.to_string().contains("timestamp"));
        let cm: ColumnMap =
            serde_json::from_str(r#"{"case_id":"a","activity":"b","timestamp":"c","age":null}"#)
                .unwrap();
        assert_eq!(cm.age, None);
        assert_eq!(cm.race.as_deref(), Some("race"));
    }
}
