use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::ResultTable;
use crate::error::{Error, Result};

/// Mean and standard error of one (sweep value, metric) group. NaN rows
/// from failed trials are left out of `count`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Groups rows by (sweep value, metric) in first-appearance order.
pub fn aggregate(table: &ResultTable) -> Vec<Aggregate> {
    let mut keys: Vec<(f64, &str)> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for row in &table.rows {
        let key = (row.sweep_value, row.metric.as_str());
        let idx = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                groups.push(Vec::new());
                keys.len() - 1
            }
        };
        if !row.value.is_nan() {
            groups[idx].push(row.value);
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((sweep_value, metric), v)| {
            let n = v.len();
            let mean = if n == 0 {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / n as f64
            };
            let std_error = if n < 2 {
                0.0
            } else {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            };
            Aggregate {
                sweep_value,
                metric: metric.to_string(),
                count: n,
                mean,
                std_error,
            }
        })
        .collect()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the long-format table to any writer.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "scenario",
        "sweep_name",
        "sweep_value",
        "trial",
        "seed",
        "metric",
        "value",
    ])?;
    let scenario = table.scenario.id();
    for r in &table.rows {
        w.write_record([
            scenario,
            &table.sweep_name,
            &r.sweep_value.to_string(),
            &r.trial.to_string(),
            &r.seed.to_string(),
            &r.metric,
            &r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plotdata<W: Write>(table: &ResultTable, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "scenario",
        "sweep_name",
        "sweep_value",
        "metric",
        "count",
        "mean",
        "std_error",
    ])?;
    for a in aggregate(table) {
        w.write_record([
            table.scenario.id(),
            &table.sweep_name,
            &a.sweep_value.to_string(),
            &a.metric,
            &a.count.to_string(),
            &a.mean.to_string(),
            &a.std_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    write_csv(table, f).map_err(csv_err(path))
}

pub fn emit_plotdata(table: &ResultTable, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    write_plotdata(table, f).map_err(csv_err(path))
}

/// Run metadata plus the failure log, as TOML.
pub fn emit_metadata(table: &ResultTable, path: &Path) -> Result<()> {
    let mut doc = toml::Table::new();
    let md: toml::Table = table
        .metadata
        .iter()
        .map(|(k, v)| (k.clone(), toml::Value::String(v.clone())))
        .collect();
    doc.insert("metadata".into(), toml::Value::Table(md));
    let failures: Vec<toml::Value> = table
        .failures
        .iter()
        .map(|f| {
            let mut t = toml::Table::new();
            t.insert(
                "grid_index".into(),
                toml::Value::Integer(f.grid_index as i64),
            );
            t.insert("sweep_value".into(), toml::Value::Float(f.sweep_value));
            t.insert("trial".into(), toml::Value::Integer(f.trial as i64));
            t.insert("seed".into(), toml::Value::String(f.seed.to_string()));
            t.insert("message".into(), toml::Value::String(f.message.clone()));
            toml::Value::Table(t)
        })
        .collect();
    doc.insert("failures".into(), toml::Value::Array(failures));
    let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(io_err(path))
}
