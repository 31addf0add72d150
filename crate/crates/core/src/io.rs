//! File formats: instance JSON, schedule JSON lines, and CSV tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Measure, MeasureVector};
use crate::model::{Instance, Schedule};
use crate::simulate::{SimulationReport, SIM_MEASURES};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, instance)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let inst: Instance = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    inst.check()?;
    Ok(inst)
}

/// One line of a schedules file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub instance_id: String,
    pub schedule_id: String,
    pub machine_order: Vec<Vec<usize>>,
    pub start: Vec<f64>,
}

impl ScheduleRecord {
    pub fn new(instance_id: &str, schedule_id: &str, schedule: &Schedule) -> Self {
        ScheduleRecord {
            instance_id: instance_id.to_string(),
            schedule_id: schedule_id.to_string(),
            machine_order: schedule.machine_order().to_vec(),
            start: schedule.start().to_vec(),
        }
    }

    pub fn to_schedule(&self, instance: &Arc<Instance>) -> Result<Schedule> {
        Schedule::new(Arc::clone(instance), self.machine_order.clone(), self.start.clone())
    }
}

pub fn write_schedules(path: &Path, records: &[ScheduleRecord]) -> Result<()> {
    let mut w = create(path)?;
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_schedules(path: &Path) -> Result<Vec<ScheduleRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Schema(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
        );
    }
    Ok(out)
}

/// Formats an optional value as a CSV cell; missing values are blank.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SIMULATION_HEADER: [&str; 8] =
    ["schedule_id", "R", "seed", "avg_makespan", "frac_within_deadline", "frac_on_time", "total_delay", "instance_id"];

/// Simulation CSV row; per-job deadline columns are appended when present.
pub struct SimulationRow<'a> {
    pub schedule_id: &'a str,
    pub instance_id: &'a str,
    pub report: &'a SimulationReport,
}

pub fn write_simulation_csv(path: &Path, rows: &[SimulationRow<'_>]) -> Result<()> {
    let with_deadlines = rows.iter().any(|r| r.report.deadline_stats.is_some());
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = SIMULATION_HEADER.to_vec();
    if with_deadlines {
        header.extend(["total_deadline_delay", "late_jobs", "frac_runs_late"]);
    }
    w.write_record(&header)?;
    for row in rows {
        let r = row.report;
        let mut rec = vec![
            row.schedule_id.to_string(),
            r.replications.to_string(),
            r.seed.to_string(),
            r.avg_makespan.to_string(),
            r.frac_within_deadline.to_string(),
            r.frac_on_time.to_string(),
            r.total_delay.to_string(),
            row.instance_id.to_string(),
        ];
        if with_deadlines {
            let d = r.deadline_stats;
            rec.extend([
                cell(d.map(|d| d.total_deadline_delay)),
                cell(d.map(|d| d.late_jobs)),
                cell(d.map(|d| d.frac_runs_late)),
            ]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn measures_header() -> Vec<String> {
    std::iter::once("schedule_id".to_string()).chain(Measure::ALL.iter().map(|m| m.name().to_string())).collect()
}

pub fn write_measures_csv(path: &Path, rows: &[(&str, &MeasureVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(measures_header())?;
    for (id, v) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend(Measure::ALL.iter().map(|&m| cell(v.get(m))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file held as strings, with column lookup.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    source: String,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(Error::Schema(format!("{}: empty file", path.display())));
        }
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Table { header, rows, source: path.display().to_string() })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Schema(format!("{}: missing column {name}", self.source)))
    }

    /// Parses a cell; blank is `None`.
    pub fn number(&self, row: usize, col: usize) -> Result<Option<f64>> {
        let s = self.rows[row][col].trim();
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Schema(format!("{}: row {}: not a number: {s:?}", self.source, row + 2)))
    }
}

/// Simulation columns present in a simulation table, in standard order.
pub fn simulation_columns(table: &Table) -> Vec<String> {
    SIM_MEASURES
        .iter()
        .map(|s| s.to_string())
        .chain(["total_deadline_delay", "late_jobs", "frac_runs_late"].map(String::from))
        .filter(|c| table.column(c).is_some())
        .collect()
}
