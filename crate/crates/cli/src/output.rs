//! CSV tables, the JSON-lines row log and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clarkchaos::experiments::ExperimentReport;
use serde::Serialize;

use crate::CliError;

pub const ROWS_FILE: &str = "results.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `header` and `rows` as comma-separated text with `\n` line ends.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Parameter columns of a report in order of first appearance.
fn parameter_columns(report: &ExperimentReport) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for row in &report.rows {
        for (k, _) in &row.parameters {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

/// Table of a report: its parameter columns (blank where a row lacks one),
/// then estimate, se and replicas.
pub fn report_table(report: &ExperimentReport) -> (Vec<String>, Vec<Vec<String>>) {
    let params = parameter_columns(report);
    let mut header = params.clone();
    header.extend(["estimate", "se", "replicas"].map(String::from));
    let rows = report
        .rows
        .iter()
        .map(|row| {
            let mut cells: Vec<String> = params
                .iter()
                .map(|p| row.parameters.iter().find(|(k, _)| k == p).map(|(_, v)| v.to_string()).unwrap_or_default())
                .collect();
            cells.push(row.estimate.to_string());
            cells.push(row.se.to_string());
            cells.push(row.replicas.to_string());
            cells
        })
        .collect();
    (header, rows)
}

/// One-line human summary, e.g. `log-phi: slope=0.28 slope_se=0.003 expected=0.125`.
pub fn summary_line(report: &ExperimentReport) -> String {
    let parts: Vec<String> = report.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}: {}", report.experiment, parts.join(" "))
}

/// Output directory of one invocation. Every file it writes lives under `dir`.
pub struct OutputDir {
    dir: PathBuf,
    rows: BufWriter<File>,
    written: BTreeMap<String, Vec<PathBuf>>,
}

impl OutputDir {
    /// Creates the directory and truncates the row log.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let rows = OpenOptions::new().create(true).write(true).truncate(true).open(dir.join(ROWS_FILE))?;
        Ok(OutputDir { dir: dir.to_path_buf(), rows: BufWriter::new(rows), written: BTreeMap::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes `<name>.csv`, `<name>_summary.csv` and appends the rows to the log.
    pub fn write_report(&mut self, report: &ExperimentReport) -> Result<(), CliError> {
        let table = self.dir.join(format!("{}.csv", report.experiment));
        let (header, rows) = report_table(report);
        write_csv(&table, &header, &rows)?;
        let summary = self.dir.join(format!("{}_summary.csv", report.experiment));
        let pairs: Vec<Vec<String>> = report.summary.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
        write_csv(&summary, &["key".to_string(), "value".to_string()], &pairs)?;
        for row in &report.rows {
            serde_json::to_writer(&mut self.rows, row)?;
            self.rows.write_all(b"\n")?;
        }
        self.rows.flush()?;
        self.written.insert(report.experiment.clone(), vec![table, summary]);
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(mut self, manifest: Manifest) -> Result<PathBuf, CliError> {
        self.rows.flush()?;
        let manifest = Manifest { outputs: std::mem::take(&mut self.written), ..manifest };
        let path = self.dir.join(MANIFEST_FILE);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(path)
    }
}

/// Reproducibility record of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Seed of each experiment run, by name.
    pub seeds: BTreeMap<String, u64>,
    /// Effective configuration as TOML.
    pub config: String,
    pub started: String,
    pub finished: String,
    pub outputs: BTreeMap<String, Vec<PathBuf>>,
}
