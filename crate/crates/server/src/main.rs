use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use palm_core::ingestion::{
    parse_survey_csv, serialize_engagement_csv, serialize_grade_scale, serialize_grades_csv, serialize_layout,
};
use palm_core::relevance::GraphExport;
use palm_core::stats::{render_markdown, run_comparison, InstrumentDefinition, DEFAULT_ALPHA_NORMALITY};
use palm_core::synth::{generate, SynthSpec};
use palm_core::SnapshotStore;
use palm_server::config::{process_env, ServiceConfig};
use palm_server::pipeline::{self, InputFiles, PipelineError};
use tokio::net::TcpListener;

#[derive(Parser)]
#[command(name = "palm", version, about = "Curriculum learning map: ingest, compute, serve and analyze")]
struct Cli {
    /// palm.toml-style configuration file.
    #[arg(long, global = true, env = "PALM_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs and stage them in the store.
    Ingest {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        engagement: Option<PathBuf>,
        #[arg(long)]
        grades: Option<PathBuf>,
        #[arg(long)]
        grade_scale: Option<PathBuf>,
    },
    /// Build a snapshot from the staged inputs and publish it.
    Compute,
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Pre/post questionnaire comparison.
    Analyze {
        /// `tpb`, `lads` or a path to an instrument definition JSON file.
        #[arg(long)]
        instrument: String,
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        post: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA_NORMALITY)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Write the published relevance graph.
    ExportGraph {
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic curriculum and engagement data set.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 180)]
        courses: usize,
        #[arg(long, default_value_t = 50)]
        students: usize,
        #[arg(long, default_value_t = 20)]
        per_student: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Json,
    Csv,
}

/// Exit status 2 for bad input, 1 for everything else.
enum Failure {
    Validation(String),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Internal(e.into())
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    if e.is_validation() {
        Failure::Validation(e.to_string())
    } else {
        Failure::Internal(e.into())
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "palm=info,palm_core=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config =
        ServiceConfig::load(cli.config.as_deref(), &process_env()).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(store) = cli.store {
        config.store_path = store;
    }
    match cli.command {
        Command::Ingest { layout, engagement, grades, grade_scale } => {
            let files = InputFiles::read(&layout, engagement.as_deref(), grades.as_deref(), grade_scale.as_deref())
                .map_err(|e| Failure::Validation(e.to_string()))?;
            let scale = config.grade_scale().map_err(|e| Failure::Validation(e.to_string()))?;
            let validated = pipeline::validate(&files, scale).map_err(|e| pipeline_failure(e.into()))?;
            let store = SnapshotStore::open(&config.store_path)?;
            {
                let _guard = store.writer();
                pipeline::stage(store.root(), &validated).map_err(pipeline_failure)?;
            }
            print_json(&validated.summary(None))?;
        }
        Command::Compute => {
            let store = SnapshotStore::open(&config.store_path)?;
            let _guard = store.writer();
            let staged = pipeline::load_staged(store.root()).map_err(pipeline_failure)?;
            let snapshot = pipeline::build(&staged, &config.map_config(None)).map_err(pipeline_failure)?;
            let published = store.publish_locked(snapshot)?;
            print_json(&staged.summary(Some(published.snapshot_id.clone())))?;
        }
        Command::Serve { port, host } => {
            let port = port.unwrap_or(config.listen_port);
            let state = Arc::new(palm_server::app_state(&config)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = TcpListener::bind((host.as_str(), port)).await?;
                let addr = listener.local_addr()?;
                println!("listening on http://{addr}");
                std::io::stdout().flush()?;
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                palm_server::serve(listener, state, &config.cors_allowed_origins, shutdown).await
            })?;
        }
        Command::Analyze { instrument, pre, post, alpha, format } => {
            let instrument = load_instrument(&instrument)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::Validation(format!("--alpha must be in (0, 1), got {alpha}")));
            }
            let parse = |p: &Path| -> Result<_, Failure> {
                let bytes = fs::read(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
                parse_survey_csv(&bytes, &instrument).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))
            };
            let (pre, post) = (parse(&pre)?, parse(&post)?);
            let cmp = run_comparison(&pre.sets, &post.sets, &instrument, alpha)
                .map_err(|e| Failure::Validation(e.to_string()))?;
            match format {
                Format::Md => emit(&render_markdown(&cmp.reports, "Pre", "Post"))?,
                Format::Json => print_json(&cmp)?,
            }
            if !cmp.excluded.is_empty() {
                eprintln!("excluded unpaired respondents: {}", cmp.excluded.join(", "));
            }
        }
        Command::ExportGraph { format, out } => {
            let store = SnapshotStore::open(&config.store_path)?;
            let snap = store
                .current()
                .ok_or_else(|| Failure::Validation("no snapshot has been published; run `palm compute`".into()))?;
            let export = GraphExport::from(&snap.layers.relevance);
            let text = match format {
                GraphFormat::Json => serde_json::to_string_pretty(&export)? + "\n",
                GraphFormat::Csv => {
                    let mut s = String::from("a,b,similarity,thickness\n");
                    for e in &export.edges {
                        s.push_str(&format!("{},{},{},{}\n", e.a, e.b, e.similarity, e.thickness));
                    }
                    s
                }
            };
            match out {
                Some(path) => fs::write(&path, text)?,
                None => emit(&text)?,
            }
        }
        Command::Generate { out, courses, students, per_student, seed } => {
            let data = generate::<f64>(SynthSpec { courses, students, courses_per_student: per_student, seed });
            fs::create_dir_all(&out)?;
            fs::write(out.join("layout.json"), serialize_layout(&data.layout))?;
            fs::write(out.join("engagement.csv"), serialize_engagement_csv(&data.engagement))?;
            fs::write(out.join("grades.csv"), serialize_grades_csv(&data.grades))?;
            fs::write(out.join("grade_scale.json"), serialize_grade_scale(&data.scale))?;
            println!("wrote {} courses and {} engagement rows to {}", courses, data.engagement.len(), out.display());
        }
    }
    Ok(())
}

fn load_instrument(name: &str) -> Result<InstrumentDefinition, Failure> {
    if let Some(def) = InstrumentDefinition::preset(name) {
        return Ok(def);
    }
    let bytes = fs::read(name).map_err(|e| {
        Failure::Validation(format!("instrument {name:?} is neither tpb, lads nor a readable file: {e}"))
    })?;
    let def: InstrumentDefinition =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Validation(format!("{name}: {e}")))?;
    def.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(def)
}

/// Writes to stdout; a reader that went away early is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<S: serde::Serialize>(value: &S) -> Result<(), Failure> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}
