use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// A named table of string cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DescriptorRef {
    pub name: Option<String>,
    pub hash: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<DescriptorRef>,
    pub params: BTreeMap<String, String>,
}

/// The cacheable part of a run: everything except timing.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Outputs {
    pub values: BTreeMap<String, String>,
    pub tables: Vec<Table>,
    pub metadata: BTreeMap<String, String>,
    /// Names of identities or checks that failed; nonempty means exit code 1.
    pub failures: Vec<String>,
}

impl Outputs {
    pub fn value(&mut self, key: &str, v: impl Display) {
        self.values.insert(key.into(), v.to_string());
    }

    pub fn meta(&mut self, key: &str, v: impl Display) {
        self.metadata.insert(key.into(), v.to_string());
    }
}

/// Exact values are strings; the only float is the wall time.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Inputs,
    #[serde(flatten)]
    pub outputs: Outputs,
    pub status: &'static str,
    pub wall_time_s_approx: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
    Csv,
}

impl RunReport {
    pub fn write(&self, format: Format, out: &mut impl Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => self.write_csv(out),
            Format::Human => self.write_human(out),
        }
    }

    fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.outputs.tables.is_empty() {
            w.write_record(["key", "value"])?;
            for (k, v) in &self.outputs.values {
                w.write_record([k, v])?;
            }
        }
        // several tables go one after another, each with its own header
        for table in &self.outputs.tables {
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
        }
        w.flush()
    }

    fn write_human(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.command)?;
        if let Some(d) = &self.inputs.descriptor {
            writeln!(
                out,
                "  descriptor: {} ({})",
                d.name.as_deref().unwrap_or("unnamed"),
                &d.hash[..12.min(d.hash.len())]
            )?;
        }
        for (k, v) in &self.inputs.params {
            writeln!(out, "  {k} = {v}")?;
        }
        if !self.outputs.values.is_empty() {
            writeln!(out)?;
            let width = self.outputs.values.keys().map(|k| k.chars().count()).max().unwrap_or(0);
            for (k, v) in &self.outputs.values {
                writeln!(out, "{k:<width$}  {v}")?;
            }
        }
        for table in &self.outputs.tables {
            writeln!(out)?;
            write_aligned(table, out)?;
        }
        if !self.outputs.metadata.is_empty() {
            writeln!(out)?;
            for (k, v) in &self.outputs.metadata {
                writeln!(out, "# {k}: {v}")?;
            }
        }
        if !self.outputs.failures.is_empty() {
            writeln!(out)?;
            for f in &self.outputs.failures {
                writeln!(out, "FAILED: {f}")?;
            }
        }
        Ok(())
    }
}

fn write_aligned(table: &Table, out: &mut impl Write) -> io::Result<()> {
    if !table.name.is_empty() {
        writeln!(out, "{}", table.name)?;
    }
    let mut widths: Vec<usize> = table.columns.iter().map(|c| c.chars().count()).collect();
    for row in &table.rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(&table.columns))?;
    for row in &table.rows {
        writeln!(out, "{}", line(row))?;
    }
    Ok(())
}
