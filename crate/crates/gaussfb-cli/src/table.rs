//! CSV output and the matching reader.
//!
//! Files start with `#` comment lines carrying the version and the resolved
//! configuration, followed by a header row. Numbers are written with 12
//! significant digits, missing values as empty fields.

use gaussfb::scenarios::{Report, Strategy, SweepParameter};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Column order of sweep tables.
pub const SWEEP_COLUMNS: [&str; 13] = [
    "parameter",
    "value",
    "strategy",
    "squeezing_bound",
    "min_eigenvalue",
    "entanglement_bound",
    "log_negativity",
    "efficiency_threshold",
    "coupling_threshold",
    "pure",
    "tight_squeezing",
    "tight_entanglement",
    "entangled",
];

/// One sweep point for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub strategy: Strategy,
    pub squeezing_bound: f64,
    pub min_eigenvalue: f64,
    pub entanglement_bound: Option<f64>,
    pub log_negativity: Option<f64>,
    pub efficiency_threshold: Option<f64>,
    pub coupling_threshold: Option<f64>,
    pub pure: bool,
    pub tight_squeezing: bool,
    pub tight_entanglement: Option<bool>,
    pub entangled: Option<bool>,
}

impl SweepRow {
    pub fn new(parameter: SweepParameter, value: f64, r: &Report) -> Self {
        Self {
            parameter,
            value,
            strategy: r.spec.strategy,
            squeezing_bound: r.bounds.squeezing_bound,
            min_eigenvalue: r.achieved.min_eigenvalue,
            entanglement_bound: r.bounds.entanglement_bound,
            log_negativity: r.achieved.log_negativity,
            efficiency_threshold: r.thresholds.efficiency,
            coupling_threshold: r.thresholds.coupling,
            pure: r.achieved.pure,
            tight_squeezing: r.bounds.tight_squeezing,
            tight_entanglement: r.bounds.tight_entanglement,
            entangled: r.achieved.log_negativity.map(|e| e > 0.0),
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            enum_name(&self.parameter),
            number(self.value),
            enum_name(&self.strategy),
            number(self.squeezing_bound),
            number(self.min_eigenvalue),
            opt(self.entanglement_bound.map(number)),
            opt(self.log_negativity.map(number)),
            opt(self.efficiency_threshold.map(number)),
            opt(self.coupling_threshold.map(number)),
            self.pure.to_string(),
            self.tight_squeezing.to_string(),
            opt(self.tight_entanglement.map(|b| b.to_string())),
            opt(self.entangled.map(|b| b.to_string())),
        ]
    }
}

/// 12 significant digits.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<String>) -> String {
    v.unwrap_or_default()
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}

fn write_table(comments: &[String], header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))?);
    Ok(out)
}

pub fn write_sweep(comments: &[String], rows: &[SweepRow]) -> Result<String, CliError> {
    let header: Vec<String> = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    write_table(comments, &header, rows.iter().map(SweepRow::fields))
}

/// Reads a table written by [`write_sweep`], checking the column order.
pub fn read_sweep(text: &str) -> Result<Vec<SweepRow>, CliError> {
    let mut r = reader(text);
    let header = r.headers().map_err(csv_err)?;
    if !header.iter().eq(SWEEP_COLUMNS) {
        return Err(CliError::Output(format!("unexpected sweep header {header:?}")));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

/// Flattens a JSON document into `key,value` rows; nested keys are joined
/// with `.` and array elements are addressed by index.
pub fn write_flat(comments: &[String], doc: &Value) -> Result<String, CliError> {
    let mut rows = Vec::new();
    flatten(doc, String::new(), &mut rows);
    write_table(comments, &["key".into(), "value".into()], rows.into_iter().map(|(k, v)| vec![k, v]))
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(v, join(k), out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(v, join(&i.to_string()), out)),
        Value::Null => out.push((prefix, String::new())),
        Value::Bool(b) => out.push((prefix, b.to_string())),
        Value::Number(n) => out.push((prefix, n.as_f64().map(number).unwrap_or_else(|| n.to_string()))),
        Value::String(s) => out.push((prefix, s.clone())),
    }
}

/// A CSV table as read back: comment lines, header and raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Value of a `key,value` table entry.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.rows.iter().find(|r| r[0] == key).map(|r| r[1].as_str())
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes())
}

pub fn read_table(text: &str) -> Result<Table, CliError> {
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect();
    let mut r = reader(text);
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok(Table { comments, header, rows })
}

/// Per-step means (and integrated currents) of every trajectory.
pub fn write_trajectories(comments: &[String], ens: &gaussfb::trajectories::Ensemble) -> Result<String, CliError> {
    let Some(first) = ens.records.first() else {
        return write_table(comments, &["trajectory".into(), "time".into()], std::iter::empty());
    };
    let modes = first.means[0].len() / 2;
    let mut header = vec!["trajectory".to_string(), "time".to_string()];
    for k in 1..=modes {
        header.push(format!("x{k}"));
        header.push(format!("p{k}"));
    }
    if let Some(y) = &first.currents {
        header.extend((1..=y[0].len()).map(|k| format!("y{k}")));
    }
    let rows = ens.records.iter().flat_map(|rec| {
        rec.times.iter().enumerate().map(move |(i, t)| {
            let mut row = vec![rec.index.to_string(), number(*t)];
            row.extend(rec.means[i].iter().map(|v| number(*v)));
            if let Some(y) = &rec.currents {
                row.extend(y[i].iter().map(|v| number(*v)));
            }
            row
        })
    });
    write_table(comments, &header, rows)
}
