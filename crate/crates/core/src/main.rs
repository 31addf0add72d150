use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use robsched::experiment::{self, EvalSettings, ExperimentConfig, Workspace};
use robsched::measures::parse_measure_list;
use robsched::{io, DistributionSpec};

#[derive(Parser)]
#[command(name = "robsched", version, about = "Robustness measures for stochastic parallel-machine schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Small grid, R = 100.
    #[arg(long)]
    fast: bool,
    /// Comma-separated measures (e.g. RM1,RM15,Cmax) or `all`.
    #[arg(long)]
    measures: Option<String>,
    /// Duration law such as N25, LN50, Exp or normal:0.3; repeatable.
    #[arg(long = "dist")]
    dists: Vec<String>,
    /// Simulation replications per schedule.
    #[arg(long)]
    replications: Option<usize>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if self.fast {
            cfg = cfg.into_fast();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(m) = &self.measures {
            cfg.measures = m.clone();
        }
        if !self.dists.is_empty() {
            cfg.dists = self.dists.clone();
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances and buffered schedule populations.
    Gen(Common),
    /// Simulate and measure schedules.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Schedule files; defaults to every file in <out>/schedules.
        #[arg(long, num_args = 1..)]
        schedules: Vec<PathBuf>,
    },
    /// Spearman correlations between measures and simulation results.
    Correlate {
        #[command(flatten)]
        common: Common,
        /// Evaluation directory; defaults to <out>/eval/<dist> for each law.
        #[arg(long)]
        eval: Option<PathBuf>,
    },
    /// Mann-Whitney U tests between two simulation CSVs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Time each measure against a 100-replication simulation.
    Time {
        #[command(flatten)]
        common: Common,
        /// Schedule file; defaults to the first file in <out>/schedules.
        #[arg(long)]
        schedules: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// gen, eval, correlate and compare in one run.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Also write timing/timing.csv.
        #[arg(long)]
        timing: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(common) => {
            let cfg = common.config()?;
            let report = experiment::cmd_gen(&cfg, &Workspace::new(&common.out))?;
            eprintln!("{} instances, {} schedules", report.instances, report.schedules);
            for f in &report.failures {
                eprintln!("generation failure: {f}");
            }
        }
        Command::Eval { common, schedules } => {
            let cfg = common.config()?;
            let ws = Workspace::new(&common.out);
            let files = if schedules.is_empty() { ws.schedule_files()? } else { schedules };
            let settings = EvalSettings::from_config(&cfg)?;
            for d in cfg.distributions()? {
                let report = experiment::cmd_eval(&files, &common.out.join("instances"), &d, &settings, &ws.eval_dir(&d.label()))?;
                eprintln!("{}: {} schedules evaluated", d.label(), report.schedules);
                for e in &report.errors {
                    eprintln!("{}: {e}", d.label());
                }
            }
        }
        Command::Correlate { common, eval } => {
            let ws = Workspace::new(&common.out);
            match eval {
                Some(dir) => {
                    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "eval".into());
                    experiment::cmd_correlate(&dir, &ws.correlate_dir(&name))?;
                }
                None => {
                    for d in common.config()?.distributions()? {
                        experiment::cmd_correlate(&ws.eval_dir(&d.label()), &ws.correlate_dir(&d.label()))?;
                    }
                }
            }
        }
        Command::Compare { a, b, output } => {
            for (name, r) in experiment::cmd_compare(&a, &b, &output)? {
                println!("{name}: U = {}, p = {:.4}", r.u, r.p_value);
            }
        }
        Command::Time { common, schedules, repeats } => {
            let cfg = common.config()?;
            let ws = Workspace::new(&common.out);
            let file = match schedules {
                Some(f) => f,
                None => match ws.schedule_files()?.into_iter().next() {
                    Some(f) => f,
                    None => bail!("no schedule files in {}", common.out.display()),
                },
            };
            let records = io::read_schedules(&file)?;
            let Some(first) = records.first() else { bail!("{} holds no schedules", file.display()) };
            let inst = Arc::new(io::read_instance(&ws.instance_path(&first.instance_id))?);
            let mc = cfg.measure_config()?;
            let dist: DistributionSpec = cfg.dists[0].parse()?;
            let measures = parse_measure_list(&cfg.measures)?;
            let rows = experiment::time_measures(&inst, &records, &dist, &measures, &mc, repeats, 100)?;
            experiment::write_timing(&ws.timing_path(), &first.instance_id, &rows)?;
            for r in rows {
                println!("{:>7} {:>10.3} ms", r.measure, r.total_ms);
            }
        }
        Command::Pipeline { common, timing } => {
            let mut cfg = common.config()?;
            cfg.timing |= timing;
            let manifest = experiment::run_pipeline(&cfg, &Workspace::new(&common.out))?;
            eprintln!("{} files written to {}", manifest.files.len(), common.out.display());
            for f in manifest.generation_failures.iter().chain(&manifest.eval_errors) {
                eprintln!("warning: {f}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
