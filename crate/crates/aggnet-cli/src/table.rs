//! Result tables and their on-disk formats.
//!
//! Both emitters are hand-rolled so output bytes depend only on the table
//! contents: floats are printed with 17 significant digits (which
//! round-trips f64 exactly), metadata keys are sorted, and absent values
//! (NaN) are written as `NaN` in CSV and `null` in JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// An ordered table of numeric records plus a metadata echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl ResultTable {
    /// Sorts rows lexicographically over the first `key_cols` columns so
    /// output is independent of evaluation order.
    pub fn sort_by_leading(&mut self, key_cols: usize) {
        self.rows.sort_by(|a, b| {
            for k in 0..key_cols.min(a.len()) {
                match a[k].total_cmp(&b[k]) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        });
    }

    /// CSV with `# key=value` metadata lines, a header row, and one line
    /// per record at full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }

    /// JSON with a metadata object, the column list, and a row array.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"metadata\": {");
        let mut first = true;
        for (k, v) in &self.metadata {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "\n    {}: {}", json_string(k), json_string(v)).unwrap();
        }
        out.push_str("\n  },\n  \"columns\": [");
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&json_string(c));
        }
        out.push_str("],\n  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("\n    [");
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                if v.is_nan() {
                    out.push_str("null");
                } else {
                    out.push_str(&fmt_float(*v));
                }
            }
            out.push(']');
        }
        out.push_str("\n  ]\n}\n");
        out
    }

    /// Parses the CSV format emitted by [`ResultTable::to_csv`]. Half of
    /// the format contract; exercised by the round-trip tests.
    #[allow(dead_code)]
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut metadata = BTreeMap::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| format!("bad metadata line: {line}"))?;
                metadata.insert(k.to_string(), v.to_string());
            } else if !saw_header {
                columns = line.split(',').map(str::to_string).collect();
                saw_header = true;
            } else {
                let row: Result<Vec<f64>, _> = line
                    .split(',')
                    .map(|f| f.parse::<f64>().map_err(|e| format!("bad value {f}: {e}")))
                    .collect();
                rows.push(row?);
            }
        }
        if !saw_header {
            return Err("missing header row".into());
        }
        Ok(ResultTable { columns, rows, metadata })
    }

    /// Parses the JSON format emitted by [`ResultTable::to_json`];
    /// `null` entries come back as NaN.
    #[allow(dead_code)]
    pub fn from_json(text: &str) -> Result<Self, String> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| e.to_string())?;
        let obj = value.as_object().ok_or("expected a JSON object")?;
        let mut metadata = BTreeMap::new();
        for (k, v) in obj
            .get("metadata")
            .and_then(|m| m.as_object())
            .ok_or("missing metadata object")?
        {
            metadata.insert(k.clone(), v.as_str().ok_or("metadata must be strings")?.to_string());
        }
        let columns = obj
            .get("columns")
            .and_then(|c| c.as_array())
            .ok_or("missing columns array")?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or("columns must be strings"))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = obj
            .get("rows")
            .and_then(|r| r.as_array())
            .ok_or("missing rows array")?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or("rows must be arrays")?
                    .iter()
                    .map(|v| {
                        if v.is_null() {
                            Ok(f64::NAN)
                        } else {
                            v.as_f64().ok_or("row entries must be numbers or null")
                        }
                    })
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResultTable { columns, rows, metadata })
    }

    /// Bitwise equality (NaN-aware), used by the round-trip tests.
    #[allow(dead_code)]
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.columns == other.columns
            && self.metadata == other.metadata
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| {
                    a.len() == b.len()
                        && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
                })
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}
