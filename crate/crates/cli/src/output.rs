use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use mechlab::model::InstanceDoc;
use mechlab::ObjectiveKind;

use crate::Failure;

/// CSV writer over a file or stdout.
pub struct CsvSink {
    writer: csv::Writer<Box<dyn Write>>,
    target: String,
}

fn csv_failure(target: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{target}: {e}"))
}

impl CsvSink {
    pub fn open(path: Option<&str>) -> Result<Self, Failure> {
        let (sink, target): (Box<dyn Write>, String) = match path {
            Some(p) => (Box::new(File::create(p).map_err(|e| csv_failure(p, e))?), p.to_string()),
            None => (Box::new(io::stdout().lock()), "stdout".to_string()),
        };
        Ok(Self { writer: csv::Writer::from_writer(sink), target })
    }

    pub fn header(&mut self, fields: &[&str]) -> Result<(), Failure> {
        self.writer.write_record(fields).map_err(|e| csv_failure(&self.target, e))
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        self.writer.write_record(fields).map_err(|e| csv_failure(&self.target, e))
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.writer.flush().map_err(|e| csv_failure(&self.target, e))
    }
}

/// `runs/audit.csv` -> `runs/audit.worst-mom.json`
pub fn witness_path(out: &str, kind: ObjectiveKind) -> String {
    let path = Path::new(out);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("audit");
    path.with_file_name(format!("{stem}.worst-{kind}.json")).to_string_lossy().into_owned()
}

pub fn compact_json(doc: &InstanceDoc) -> String {
    mechlab::Instance::try_from(doc.clone())
        .map(|i| i.to_json().split_whitespace().collect())
        .unwrap_or_default()
}

/// Left-aligned plain-text table.
pub fn table(rows: &[[String; 7]]) -> String {
    let mut widths = [0usize; 7];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
