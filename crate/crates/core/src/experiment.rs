//! Experiment pipeline: generate, evaluate, correlate, compare, time.
//!
//! Output layout under the root directory:
//!
//! ```text
//! instances/inst_000.json        schedules/inst_000.jsonl
//! eval/<dist>/simulation.csv     eval/<dist>/measures.csv
//! correlate/<dist>/correlations.csv, boxplot.csv, boxplot_<sim>.svg
//! compare/<a>_vs_<b>.csv         timing/timing.csv (timing mode only)
//! manifest.json
//! ```

use std::collections::HashMap;
use std::fs;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generate::{self, BufferPlan, EssConfig, InstanceGenConfig};
use crate::io::{self, ScheduleRecord, SimulationRow, Table};
use crate::measures::{self, EsdScope, LambdaRule, Measure, MeasureConfig, MeasureVector};
use crate::model::Instance;
use crate::rng::{derive_seed, label_key};
use crate::simulate::{self, SimulationOptions, SimulationReport};
use crate::stats::{self, CorrelationTable, InstanceColumns, MwuResult};
use crate::stochastic::DistributionSpec;
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: usize,
    pub arcs: usize,
    pub m: usize,
}

fn grid(ns: &[usize], arcs: &[usize], ms: &[usize]) -> Vec<GridCell> {
    let mut out = Vec::new();
    for &n in ns {
        for &a in arcs {
            for &m in ms {
                out.push(GridCell { n, arcs: a, m });
            }
        }
    }
    out
}

pub fn small_grid() -> Vec<GridCell> {
    grid(&[30], &[15, 30, 75], &[4, 8])
}

pub fn large_grid() -> Vec<GridCell> {
    grid(&[100], &[50, 100, 250], &[6, 12])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub grid: Vec<GridCell>,
    /// Instances per grid cell.
    pub replicates: usize,
    /// Earliest-start schedules per instance.
    pub ess_per_instance: usize,
    pub ess_max_attempts: usize,
    pub buffer_plan: BufferPlan,
    /// Duration laws, e.g. `N25`, `LN50`, `Exp`, `normal:0.3`.
    pub dists: Vec<String>,
    pub replications: usize,
    /// Quantile level for the λ factors of the threshold measures.
    pub lambda_quantile: f64,
    pub esd_scope: EsdScope,
    /// Comma-separated measure list or `all`.
    pub measures: String,
    pub seed: u64,
    pub timing: bool,
    pub timing_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: small_grid().into_iter().chain(large_grid()).collect(),
            replicates: 2,
            ess_per_instance: 10,
            ess_max_attempts: 20,
            buffer_plan: BufferPlan::default(),
            dists: ["N25", "LN25", "N50", "LN50", "Exp"].map(String::from).to_vec(),
            replications: 1000,
            lambda_quantile: 0.7,
            esd_scope: EsdScope::AllPredecessors,
            measures: "all".into(),
            seed: 1,
            timing: false,
            timing_repeats: 3,
        }
    }
}

impl ExperimentConfig {
    /// Small grid, one instance per cell, R = 100, two laws.
    pub fn fast() -> Self {
        ExperimentConfig::default().into_fast()
    }

    pub fn into_fast(self) -> Self {
        ExperimentConfig {
            grid: small_grid(),
            replicates: 1,
            replications: 100,
            dists: vec!["N25".into(), "Exp".into()],
            ..self
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.grid.is_empty() || self.replicates == 0 || self.ess_per_instance == 0 || self.replications == 0 {
            return Err(Error::Argument("grid, replicates, schedules per instance and replications must be non-empty".into()));
        }
        if self.grid.iter().any(|c| c.n == 0 || c.m == 0 || c.arcs > c.n * (c.n - 1) / 2) {
            return Err(Error::Argument("invalid grid cell".into()));
        }
        if self.dists.is_empty() {
            return Err(Error::Argument("at least one distribution is required".into()));
        }
        self.distributions()?;
        self.measure_config()?;
        Ok(())
    }

    pub fn distributions(&self) -> Result<Vec<DistributionSpec>> {
        self.dists.iter().map(|d| d.parse()).collect()
    }

    pub fn measure_config(&self) -> Result<MeasureConfig> {
        if !(self.lambda_quantile > 0.0 && self.lambda_quantile < 1.0) {
            return Err(Error::Argument(format!("lambda quantile must lie in (0, 1), got {}", self.lambda_quantile)));
        }
        Ok(MeasureConfig {
            enabled: measures::parse_measure_list(&self.measures)?,
            threshold_lambda: LambdaRule::Quantile(self.lambda_quantile),
            esd_scope: self.esd_scope,
            ..MeasureConfig::default()
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn instance_id(index: usize) -> String {
    format!("inst_{index:03}")
}

/// Paths of the output tree.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }
    pub fn instance_path(&self, id: &str) -> PathBuf {
        self.root.join("instances").join(format!("{id}.json"))
    }
    pub fn schedules_path(&self, id: &str) -> PathBuf {
        self.root.join("schedules").join(format!("{id}.jsonl"))
    }
    pub fn schedule_files(&self) -> Result<Vec<PathBuf>> {
        let dir = self.root.join("schedules");
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        Ok(files)
    }
    pub fn eval_dir(&self, label: &str) -> PathBuf {
        self.root.join("eval").join(label)
    }
    pub fn correlate_dir(&self, label: &str) -> PathBuf {
        self.root.join("correlate").join(label)
    }
    pub fn compare_path(&self, a: &str, b: &str) -> PathBuf {
        self.root.join("compare").join(format!("{a}_vs_{b}.csv"))
    }
    pub fn timing_path(&self) -> PathBuf {
        self.root.join("timing").join("timing.csv")
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GenReport {
    pub instances: usize,
    pub schedules: usize,
    pub failures: Vec<String>,
}

/// One instance and its buffered schedule population.
pub fn generate_population(cfg: &ExperimentConfig, index: usize, cell: GridCell) -> Result<(Instance, Vec<ScheduleRecord>, Vec<String>)> {
    let id = instance_id(index);
    let template: DistributionSpec = cfg.dists.first().map(|d| d.parse()).transpose()?.unwrap_or_else(|| DistributionSpec::normal(1.0, 0.25));
    let gen_cfg = InstanceGenConfig {
        dist: template,
        ..InstanceGenConfig::new(cell.n, cell.arcs, cell.m, derive_seed(cfg.seed, &[1, index as u64]))
    };
    let instance = Arc::new(generate::gen_instance(&gen_cfg)?);
    let ess_cfg = EssConfig { max_attempts: cfg.ess_max_attempts };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for k in 0..cfg.ess_per_instance {
        let key = [index as u64, k as u64];
        let es = match generate::gen_earliest_start(&instance, derive_seed(cfg.seed, &[2, key[0], key[1]]), &ess_cfg) {
            Ok(es) => es,
            Err(e) => {
                failures.push(format!("{id} schedule {k}: {e}"));
                continue;
            }
        };
        match generate::diversify_buffers(&es, &cfg.buffer_plan, derive_seed(cfg.seed, &[3, key[0], key[1]])) {
            Ok(buffered) => records.extend(
                buffered.iter().map(|b| ScheduleRecord::new(&id, &format!("{id}:e{k:02}:{}", b.label), &b.schedule)),
            ),
            Err(e) => failures.push(format!("{id} schedule {k}: {e}")),
        }
    }
    Ok((Arc::unwrap_or_clone(instance), records, failures))
}

pub fn cmd_gen(cfg: &ExperimentConfig, ws: &Workspace) -> Result<GenReport> {
    cfg.check()?;
    let cells: Vec<(usize, GridCell)> = (0..cfg.replicates)
        .flat_map(|rep| cfg.grid.iter().enumerate().map(move |(c, &cell)| (rep * cfg.grid.len() + c, cell)))
        .collect();
    let results: Vec<_> = cells.par_iter().map(|&(i, cell)| (i, generate_population(cfg, i, cell))).collect();
    let mut report = GenReport::default();
    for (i, res) in results {
        match res {
            Ok((inst, records, failures)) => {
                let id = instance_id(i);
                io::write_instance(&ws.instance_path(&id), &inst)?;
                io::write_schedules(&ws.schedules_path(&id), &records)?;
                report.instances += 1;
                report.schedules += records.len();
                report.failures.extend(failures);
            }
            Err(e) => report.failures.push(format!("{}: {e}", instance_id(i))),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub replications: usize,
    pub seed: u64,
    pub measures: MeasureConfig,
}

impl EvalSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(EvalSettings { replications: cfg.replications, seed: cfg.seed, measures: cfg.measure_config()? })
    }
}

#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub schedule_id: String,
    pub instance_id: String,
    pub report: SimulationReport,
    pub measures: MeasureVector,
}

/// Simulation seed of one schedule under one duration law.
pub fn schedule_seed(master: u64, dist_label: &str, schedule_id: &str) -> u64 {
    derive_seed(master, &[label_key(dist_label), label_key(schedule_id)])
}

/// Simulates and measures every schedule of one instance under `dist`.
/// Failing schedules are reported and skipped.
pub fn evaluate_records(
    instance: &Arc<Instance>,
    records: &[ScheduleRecord],
    dist: &DistributionSpec,
    settings: &EvalSettings,
) -> (Vec<EvalRecord>, Vec<String>) {
    let dists = instance.with_dist(*dist).dists();
    let label = dist.label();
    let results: Vec<Result<EvalRecord>> = records
        .par_iter()
        .map(|rec| {
            let schedule = rec.to_schedule(instance)?;
            let measures = measures::evaluate_all_with(&schedule, &dists, &settings.measures)?;
            let opts = SimulationOptions::new(settings.replications, schedule_seed(settings.seed, &label, &rec.schedule_id));
            let report = simulate::simulate(&schedule, &dists, &opts)?;
            Ok(EvalRecord { schedule_id: rec.schedule_id.clone(), instance_id: rec.instance_id.clone(), report, measures })
        })
        .collect();
    let mut ok = Vec::with_capacity(records.len());
    let mut errors = Vec::new();
    for (rec, res) in records.iter().zip(results) {
        match res {
            Ok(r) => {
                errors.extend(r.measures.errors.iter().map(|(m, e)| format!("{} {m}: {e}", rec.schedule_id)));
                ok.push(r);
            }
            Err(e) => errors.push(format!("{}: {e}", rec.schedule_id)),
        }
    }
    (ok, errors)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalReport {
    pub schedules: usize,
    pub errors: Vec<String>,
}

/// Evaluates schedule files; each file's instance is looked up by its
/// `instance_id` in `instances_dir`.
pub fn cmd_eval(
    schedule_files: &[PathBuf],
    instances_dir: &Path,
    dist: &DistributionSpec,
    settings: &EvalSettings,
    out_dir: &Path,
) -> Result<EvalReport> {
    let mut all = Vec::new();
    let mut report = EvalReport::default();
    let mut cache: HashMap<String, Arc<Instance>> = HashMap::new();
    for file in schedule_files {
        let records = io::read_schedules(file)?;
        let mut by_instance: Vec<(String, Vec<ScheduleRecord>)> = Vec::new();
        for rec in records {
            match by_instance.last_mut() {
                Some((id, group)) if *id == rec.instance_id => group.push(rec),
                _ => by_instance.push((rec.instance_id.clone(), vec![rec])),
            }
        }
        for (id, group) in by_instance {
            let instance = match cache.get(&id) {
                Some(inst) => Arc::clone(inst),
                None => {
                    let inst = Arc::new(io::read_instance(&instances_dir.join(format!("{id}.json")))?);
                    cache.insert(id.clone(), Arc::clone(&inst));
                    inst
                }
            };
            let (rows, errors) = evaluate_records(&instance, &group, dist, settings);
            report.errors.extend(errors);
            all.extend(rows);
        }
    }
    report.schedules = all.len();
    write_eval(out_dir, &all)?;
    Ok(report)
}

pub fn write_eval(out_dir: &Path, rows: &[EvalRecord]) -> Result<()> {
    let sim: Vec<SimulationRow<'_>> = rows
        .iter()
        .map(|r| SimulationRow { schedule_id: &r.schedule_id, instance_id: &r.instance_id, report: &r.report })
        .collect();
    io::write_simulation_csv(&out_dir.join("simulation.csv"), &sim)?;
    let meas: Vec<(&str, &MeasureVector)> = rows.iter().map(|r| (r.schedule_id.as_str(), &r.measures)).collect();
    io::write_measures_csv(&out_dir.join("measures.csv"), &meas)
}

/// Joins an evaluation directory into per-instance columns.
pub fn load_eval(eval_dir: &Path) -> Result<Vec<InstanceColumns>> {
    let sim = Table::read(&eval_dir.join("simulation.csv"))?;
    let meas = Table::read(&eval_dir.join("measures.csv"))?;
    let sim_id = sim.require("schedule_id")?;
    let meas_id = meas.require("schedule_id")?;
    let inst_col = sim.column("instance_id");
    let sim_cols = io::simulation_columns(&sim);
    if sim_cols.is_empty() {
        return Err(Error::Schema(format!("{}: no simulation measure columns", eval_dir.display())));
    }
    let rm_cols: Vec<(String, usize)> =
        meas.header.iter().enumerate().filter(|(i, _)| *i != meas_id).map(|(i, h)| (h.clone(), i)).collect();
    if rm_cols.is_empty() {
        return Err(Error::Schema(format!("{}: no measure columns", eval_dir.display())));
    }
    if sim.rows.is_empty() {
        return Err(Error::Schema(format!("{}: no schedules", eval_dir.display())));
    }
    let meas_rows: HashMap<&str, usize> = meas.rows.iter().enumerate().map(|(i, r)| (r[meas_id].as_str(), i)).collect();

    let mut groups: Vec<InstanceColumns> = Vec::new();
    let sim_idx: Vec<usize> = sim_cols.iter().map(|c| sim.require(c)).collect::<Result<_>>()?;
    for row in 0..sim.rows.len() {
        let id = &sim.rows[row][sim_id];
        let Some(&mrow) = meas_rows.get(id.as_str()) else {
            return Err(Error::Schema(format!("schedule {id} has no measure row")));
        };
        let inst = match inst_col {
            Some(c) => sim.rows[row][c].clone(),
            None => id.split(':').next().unwrap_or_default().to_string(),
        };
        if groups.last().is_none_or(|g| g.instance != inst) {
            groups.push(InstanceColumns {
                instance: inst,
                rm: rm_cols.iter().map(|(h, _)| (h.clone(), Vec::new())).collect(),
                sim: sim_cols.iter().map(|h| (h.clone(), Vec::new())).collect(),
            });
        }
        let g = groups.last_mut().expect("group pushed above");
        for ((_, col), (_, values)) in rm_cols.iter().zip(g.rm.iter_mut()) {
            values.push(meas.number(mrow, *col)?);
        }
        for (&col, (name, values)) in sim_idx.iter().zip(g.sim.iter_mut()) {
            values.push(sim.number(row, col)?.ok_or_else(|| Error::Schema(format!("schedule {id}: blank {name}")))?);
        }
    }
    Ok(groups)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// Correlation tables and box plots for one evaluation directory.
pub fn cmd_correlate(eval_dir: &Path, out_dir: &Path) -> Result<CorrelationTable> {
    let table = stats::correlation_study(&load_eval(eval_dir)?)?;
    fs::create_dir_all(out_dir)?;

    let mut w = csv::Writer::from_path(out_dir.join("correlations.csv"))?;
    w.write_record(["instance", "rm", "sim_measure", "rho", "abs_rho", "degenerate"])?;
    for r in &table.rows {
        w.write_record([&r.instance, &r.rm, &r.sim_measure, &num(r.rho), &num(r.abs), &u8::from(r.degenerate).to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("boxplot.csv"))?;
    w.write_record(["rm", "sim_measure", "count", "min", "q1", "median", "q3", "max", "mean", "strong"])?;
    for s in &table.summaries {
        w.write_record([
            s.rm.clone(),
            s.sim_measure.clone(),
            s.count.to_string(),
            num(s.min),
            num(s.q1),
            num(s.median),
            num(s.q3),
            num(s.max),
            num(s.mean),
            u8::from(s.strong).to_string(),
        ])?;
    }
    w.flush()?;

    let mut sims: Vec<&str> = Vec::new();
    for s in &table.summaries {
        if !sims.contains(&s.sim_measure.as_str()) {
            sims.push(&s.sim_measure);
        }
    }
    for sim in sims {
        let boxes: Vec<_> = table.summaries.iter().filter(|s| s.sim_measure == sim).collect();
        fs::write(out_dir.join(format!("boxplot_{sim}.svg")), svg::boxplot(&format!("|rho| vs {sim}"), &boxes))?;
    }
    Ok(table)
}

/// Mann-Whitney U per simulation measure between two simulation CSVs.
pub fn cmd_compare(a: &Path, b: &Path, out: &Path) -> Result<Vec<(String, MwuResult)>> {
    let ta = Table::read(a)?;
    let tb = Table::read(b)?;
    let cols = io::simulation_columns(&ta);
    if cols != io::simulation_columns(&tb) {
        return Err(Error::Schema(format!("{} and {} have unmatched columns", a.display(), b.display())));
    }
    if cols.is_empty() {
        return Err(Error::Schema(format!("{}: no simulation measure columns", a.display())));
    }
    let column = |t: &Table, name: &str| -> Result<Vec<f64>> {
        let c = t.require(name)?;
        (0..t.rows.len()).filter_map(|r| t.number(r, c).transpose()).collect()
    };
    let mut out_rows = Vec::new();
    for name in &cols {
        out_rows.push((name.clone(), stats::mann_whitney_u(&column(&ta, name)?, &column(&tb, name)?)?));
    }
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["sim_measure", "n1", "n2", "U", "p_value", "exact"])?;
    for (name, r) in &out_rows {
        w.write_record([name.clone(), r.n1.to_string(), r.n2.to_string(), r.u.to_string(), r.p_value.to_string(), u8::from(r.exact).to_string()])?;
    }
    w.flush()?;
    Ok(out_rows)
}

pub const SIM_BASELINE: &str = "100Sim";

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub measure: String,
    pub schedules: usize,
    pub total_ms: f64,
}

/// Wall-clock time to evaluate every schedule from scratch with each
/// measure, averaged over `repeats`, plus the cost of `sim_replications`
/// simulation runs per schedule.
pub fn time_measures(
    instance: &Arc<Instance>,
    records: &[ScheduleRecord],
    dist: &DistributionSpec,
    measures: &[Measure],
    config: &MeasureConfig,
    repeats: usize,
    sim_replications: usize,
) -> Result<Vec<TimingRow>> {
    let schedules: Vec<_> = records.iter().map(|r| r.to_schedule(instance)).collect::<Result<_>>()?;
    let dists = instance.with_dist(*dist).dists();
    let repeats = repeats.max(1);
    let mut rows = Vec::new();
    for &m in measures {
        let t0 = Instant::now();
        for _ in 0..repeats {
            for s in &schedules {
                let _ = black_box(measures::evaluate_one(black_box(s), &dists, m, config));
            }
        }
        rows.push(TimingRow { measure: m.name().to_string(), schedules: schedules.len(), total_ms: ms(t0) / repeats as f64 });
    }
    let t0 = Instant::now();
    for rep in 0..repeats {
        for (k, s) in schedules.iter().enumerate() {
            let opts = SimulationOptions::new(sim_replications, derive_seed(rep as u64, &[k as u64]));
            black_box(simulate::simulate(black_box(s), &dists, &opts)?);
            black_box(measures::cmax(s));
        }
    }
    rows.push(TimingRow { measure: SIM_BASELINE.into(), schedules: schedules.len(), total_ms: ms(t0) / repeats as f64 });
    Ok(rows)
}

fn ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

pub fn write_timing(path: &Path, instance: &str, rows: &[TimingRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["instance", "measure", "schedules", "total_ms", "per_schedule_us"])?;
    for r in rows {
        let per = if r.schedules == 0 { 0.0 } else { r.total_ms * 1e3 / r.schedules as f64 };
        w.write_record([instance.to_string(), r.measure.clone(), r.schedules.to_string(), format!("{:.4}", r.total_ms), format!("{per:.3}")])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub stages: Vec<StageTime>,
    pub generation_failures: Vec<String>,
    pub eval_errors: Vec<String>,
}

/// Every file under `root`, relative and sorted, except the manifest.
pub fn list_files(root: &Path) -> Result<Vec<String>> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, root, out)?;
            } else if let Ok(rel) = path.strip_prefix(root) {
                let rel = rel.to_string_lossy().replace('\\', "/");
                if rel != "manifest.json" {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

/// The whole experiment: generation, evaluation and correlation per law,
/// comparison of the first law against the others, optional timing.
pub fn run_pipeline(cfg: &ExperimentConfig, ws: &Workspace) -> Result<RunManifest> {
    cfg.check()?;
    fs::create_dir_all(&ws.root)?;
    let mut stages = Vec::new();
    let mut stage = |name: &str, t0: Instant| stages.push(StageTime { stage: name.into(), seconds: t0.elapsed().as_secs_f64() });

    let t0 = Instant::now();
    let gen = cmd_gen(cfg, ws)?;
    stage("gen", t0);

    let settings = EvalSettings::from_config(cfg)?;
    let files = ws.schedule_files()?;
    let instances_dir = ws.root.join("instances");
    let dists = cfg.distributions()?;
    let mut eval_errors = Vec::new();
    for d in &dists {
        let t0 = Instant::now();
        let rep = cmd_eval(&files, &instances_dir, d, &settings, &ws.eval_dir(&d.label()))?;
        eval_errors.extend(rep.errors.into_iter().map(|e| format!("{}: {e}", d.label())));
        stage(&format!("eval/{}", d.label()), t0);
    }

    let t0 = Instant::now();
    for d in &dists {
        cmd_correlate(&ws.eval_dir(&d.label()), &ws.correlate_dir(&d.label()))?;
    }
    stage("correlate", t0);

    let t0 = Instant::now();
    if let Some((first, rest)) = dists.split_first() {
        for other in rest {
            cmd_compare(
                &ws.eval_dir(&first.label()).join("simulation.csv"),
                &ws.eval_dir(&other.label()).join("simulation.csv"),
                &ws.compare_path(&first.label(), &other.label()),
            )?;
        }
    }
    stage("compare", t0);

    if cfg.timing {
        let t0 = Instant::now();
        if let Some(file) = files.first() {
            let records = io::read_schedules(file)?;
            if let Some(rec) = records.first() {
                let inst = Arc::new(io::read_instance(&ws.instance_path(&rec.instance_id))?);
                let mc = settings.measures.clone();
                let rows = time_measures(&inst, &records, &dists[0], &mc.enabled, &mc, cfg.timing_repeats, 100)?;
                write_timing(&ws.timing_path(), &rec.instance_id, &rows)?;
            }
        }
        stage("time", t0);
    }

    let manifest = RunManifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        files: list_files(&ws.root)?,
        stages,
        generation_failures: gen.failures,
        eval_errors,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(ws.root.join("manifest.json"), text)?;
    Ok(manifest)
}
