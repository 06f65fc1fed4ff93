use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rsrag_core::bench::{
    build_knowledge_store, emit_report, emit_sweep, run_task, sweep, write_timings, Pipeline, Report,
    ReportFormat, SweepGrid,
};
use rsrag_core::knowledge::{load_dataset, load_dataset_files, write_dataset, Dataset, TaskKind};
use rsrag_core::retrieval::Query;
use rsrag_core::store::{AnnParams, VectorStore};
use rsrag_core::synthetic::{synthetic_dataset, SyntheticSpec};
use serde_json::json;

use crate::config::{AnnArgs, ConfigArgs};
use crate::error::CliError;
use crate::server;

#[derive(Debug, Parser)]
#[command(name = "rsrag", version, about = "Knowledge-grounded retrieval and evaluation for remote sensing imagery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct DataArgs {
    /// Directory holding records.jsonl and tasks.jsonl.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["records", "tasks"])]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "tasks")]
    pub records: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "records")]
    pub tasks: Option<PathBuf>,
}

impl DataArgs {
    pub fn load(&self) -> Result<Dataset, CliError> {
        match (&self.data, &self.records, &self.tasks) {
            (Some(dir), _, _) => Ok(load_dataset(dir)?),
            (None, Some(r), Some(t)) => Ok(load_dataset_files(r, t)?),
            _ => Err(CliError::input("MissingInput", "pass --data DIR or --records PATH --tasks PATH")),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub text: Option<String>,
    /// Image path or URI.
    #[arg(long)]
    pub image: Option<String>,
}

impl QueryArgs {
    fn query(&self) -> Query {
        Query::new(self.text.clone(), self.image.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    TopK,
    Alpha,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (records.jsonl, tasks.jsonl) for offline runs.
    Synth {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        records: usize,
        /// Examples per record and task, all in the test split.
        #[arg(long, default_value = "captioning", value_delimiter = ',')]
        tasks: Vec<TaskKind>,
        /// The full-size benchmark counts instead of --records/--tasks.
        #[arg(long)]
        full_size: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build documents, chunks, embeddings and both collections; write a snapshot.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        ann: AnnArgs,
    },
    /// Rebuild the ANN index of a snapshot in place.
    Index {
        #[arg(long, value_name = "DIR")]
        snapshot: PathBuf,
        #[command(flatten)]
        ann: AnnArgs,
    },
    /// Rank knowledge records for one query.
    Retrieve {
        #[arg(long, value_name = "DIR")]
        snapshot: PathBuf,
        #[arg(long, default_value = "captioning")]
        task: TaskKind,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Retrieve, fuse, prompt and generate for one query.
    Answer {
        #[arg(long, value_name = "DIR")]
        snapshot: PathBuf,
        #[arg(long, default_value = "captioning")]
        task: TaskKind,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate one task; writes report.json, report.txt and timings.json.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        task: TaskKind,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Use an existing snapshot instead of ingesting the dataset.
        #[arg(long, value_name = "DIR")]
        snapshot: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the top-k or alpha grid; writes under <out>/sweeps/<task>/<grid-hash>.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        task: TaskKind,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_name = "DIR")]
        snapshot: Option<PathBuf>,
        /// Comma-separated values replacing the default grid on the swept axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Serve the retrieval and answer endpoints over HTTP.
    Serve {
        /// Defaults to `RSRAG_SNAPSHOT_DIR`.
        #[arg(long, value_name = "DIR")]
        snapshot: Option<PathBuf>,
        /// Defaults to `RSRAG_PORT`, then 8080.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value = "captioning")]
        task: TaskKind,
        /// Maximum requests handled at once.
        #[arg(long, default_value_t = 64)]
        max_concurrency: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn print_json(value: &serde_json::Value) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_snapshot(dir: &Path) -> Result<(VectorStore, String), CliError> {
    Ok(VectorStore::load_with_id(dir)?)
}

fn pipeline_for(
    task: TaskKind,
    config: &ConfigArgs,
    data: &Dataset,
    snapshot: Option<&Path>,
) -> Result<Pipeline, CliError> {
    let (store, cfg) = match snapshot {
        Some(dir) => {
            let (store, _) = load_snapshot(dir)?;
            let cfg = config.resolve(task, Some(&store))?;
            (store, cfg)
        }
        None => {
            let cfg = config.resolve(task, None)?;
            let (store, _) = build_knowledge_store(data, &cfg, AnnParams::default())?;
            (store, cfg)
        }
    };
    Ok(Pipeline::from_config(Arc::new(store), cfg)?)
}

fn ingest(data: &DataArgs, out: &Path, config: &ConfigArgs, ann: &AnnArgs) -> Result<(), CliError> {
    let dataset = data.load()?;
    let cfg = config.resolve(TaskKind::Captioning, None)?;
    let (store, report) = build_knowledge_store(&dataset, &cfg, ann.params(AnnParams::default()))?;
    let id = store.persist(out)?;
    print_json(&json!({
        "snapshot_dir": out,
        "snapshot_id": id,
        "counts": store.counts(),
        "ingest": report,
    }))
}

fn index(snapshot: &Path, ann: &AnnArgs) -> Result<(), CliError> {
    let (mut rebuilt, _) = load_snapshot(snapshot)?;
    rebuilt.set_ann_params(ann.params(rebuilt.ann_params()));
    rebuilt.build_index();
    let id = rebuilt.persist(snapshot)?;
    print_json(&json!({"snapshot_dir": snapshot, "snapshot_id": id, "ann": rebuilt.ann_params()}))
}

fn retrieve(snapshot: &Path, task: TaskKind, query: &QueryArgs, config: &ConfigArgs) -> Result<(), CliError> {
    let (store, id) = load_snapshot(snapshot)?;
    let cfg = config.resolve(task, Some(&store))?;
    let pipeline = Pipeline::from_config(Arc::new(store), cfg)?;
    let q = query.query();
    q.validate()?;
    let outcome = pipeline.retrieve(&q)?;
    print_json(&server::retrieve_body(&outcome, pipeline.config(), &id))
}

fn answer(snapshot: &Path, task: TaskKind, query: &QueryArgs, config: &ConfigArgs) -> Result<(), CliError> {
    let (store, id) = load_snapshot(snapshot)?;
    let cfg = config.resolve(task, Some(&store))?;
    let pipeline = Pipeline::from_config(Arc::new(store), cfg)?;
    let a = pipeline.answer(&query.query())?;
    print_json(&server::answer_body(&a, pipeline.config(), &id))
}

fn bench(data: &DataArgs, task: TaskKind, out: &Path, snapshot: Option<&Path>, config: &ConfigArgs) -> Result<(), CliError> {
    let dataset = data.load()?;
    let pipeline = pipeline_for(task, config, &dataset, snapshot)?;
    let run = run_task(task, &dataset, &pipeline)?;
    emit_report(&run.report, out, ReportFormat::MachineReadable)?;
    emit_report(&run.report, out, ReportFormat::TableText)?;
    write_timings(out, std::slice::from_ref(&run.timings))?;
    print!("{}", run.report.render_text());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    data: &DataArgs,
    task: TaskKind,
    axis: Axis,
    out: &Path,
    snapshot: Option<&Path>,
    values: &[f64],
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let dataset = data.load()?;
    let pipeline = pipeline_for(task, config, &dataset, snapshot)?;
    let base = pipeline.config();
    let mut grid = match axis {
        Axis::TopK => SweepGrid::top_k_grid(base.alpha),
        Axis::Alpha => SweepGrid::alpha_grid(base.top_k),
    };
    if !values.is_empty() {
        match axis {
            Axis::TopK => {
                grid.top_k = values
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(CliError::input("ConfigInvalid", format!("top-k value {v} is not a positive integer")))
                        }
                    })
                    .collect::<Result<_, _>>()?
            }
            Axis::Alpha => grid.alpha = values.to_vec(),
        }
    }
    let (report, timings) = sweep(task, &dataset, &pipeline, &grid)?;
    let dir = emit_sweep(&report, &timings, out)?;
    print!("{}", report.render_text());
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn resolve_serve_target(snapshot: &Option<PathBuf>, port: Option<u16>) -> Result<(Option<PathBuf>, u16), CliError> {
    let dir = snapshot
        .clone()
        .or_else(|| std::env::var_os("RSRAG_SNAPSHOT_DIR").map(PathBuf::from));
    let port = match port {
        Some(p) => p,
        None => match std::env::var("RSRAG_PORT") {
            Ok(p) => p
                .parse()
                .map_err(|_| CliError::input("ConfigInvalid", format!("RSRAG_PORT={p:?} is not a port")))?,
            Err(_) => 8080,
        },
    };
    Ok((dir, port))
}

fn synth(out: &Path, records: usize, tasks: &[TaskKind], full_size: bool, seed: u64) -> Result<(), CliError> {
    let spec = if full_size {
        SyntheticSpec { seed, ..SyntheticSpec::full_scale() }
    } else {
        if records == 0 {
            return Err(CliError::input("ConfigInvalid", "--records must be positive"));
        }
        SyntheticSpec {
            records,
            tasks: tasks.iter().map(|&t| (t, (0, records))).collect(),
            seed,
        }
    };
    let dataset = synthetic_dataset(&spec).map_err(CliError::from)?;
    write_dataset(&dataset, out)?;
    print_json(&json!({"out": out, "records": dataset.records().len(), "stats": dataset.stats()}))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth {
            out,
            records,
            tasks,
            full_size,
            seed,
        } => synth(out, *records, tasks, *full_size, *seed),
        Command::Ingest { data, out, config, ann } => ingest(data, out, config, ann),
        Command::Index { snapshot, ann } => index(snapshot, ann),
        Command::Retrieve {
            snapshot,
            task,
            query,
            config,
        } => retrieve(snapshot, *task, query, config),
        Command::Answer {
            snapshot,
            task,
            query,
            config,
        } => answer(snapshot, *task, query, config),
        Command::Bench {
            data,
            task,
            out,
            snapshot,
            config,
        } => bench(data, *task, out, snapshot.as_deref(), config),
        Command::Sweep {
            data,
            task,
            axis,
            out,
            snapshot,
            values,
            config,
        } => run_sweep(data, *task, *axis, out, snapshot.as_deref(), values, config),
        Command::Serve {
            snapshot,
            port,
            bind,
            task,
            max_concurrency,
            config,
        } => {
            let (dir, port) = resolve_serve_target(snapshot, *port)?;
            let state = server::ServiceState::new(*task, config.clone(), dir);
            if let Err(e) = state.reload() {
                eprintln!("{}", e.json_line());
            }
            server::serve(state, bind, port, *max_concurrency)
        }
    }
}
