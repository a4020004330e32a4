//! `qlens`: operate the QLens pipeline from the command line.

mod table;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qlens_core::analytics::GroupFilter;
use qlens_core::manifest::ManifestError;
use qlens_core::synth::{generate, write_log, BehaviorMix, SynthConfig};
use qlens_core::views::{export_analytics, group_model, GroupQuery, RecommendationPayload, ViewsPayload};
use qlens_core::QuestionManifest;
use qlens_service::{Service, Store};

#[derive(Parser)]
#[command(name = "qlens", version, about = "Analytics over mouse-event logs of multi-step questions")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, default_value = "qlens-store")]
    store: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Register a question manifest and ingest an event log for it.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
    /// Print the views payload of a group.
    Report {
        question: String,
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Write a synthetic event log.
    Generate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON generator config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        students: Option<usize>,
        #[arg(long)]
        sessions_per_student: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Behaviour mix as three probabilities: intended,greedy,random-walk.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        mix: Option<Vec<f64>>,
    },
    /// Recommended path for one ranked common error.
    Recommend {
        question: String,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Write views, recommendations and optionally the model to files.
    Export {
        question: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory of the built frontend, served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=12))]
    grades: Option<Vec<u8>>,
    #[arg(long, value_delimiter = ',')]
    scores: Option<Vec<usize>>,
    #[arg(long)]
    student: Option<String>,
    #[arg(long, default_value_t = 0)]
    min_count: u32,
    #[arg(long, default_value_t = qlens_core::views::DEFAULT_TOP_ERRORS)]
    top_errors: usize,
}

impl GroupArgs {
    fn query(&self) -> GroupQuery {
        GroupQuery {
            filter: GroupFilter {
                grades: self.grades.as_ref().map(|g| g.iter().copied().collect()),
                scores: self.scores.as_ref().map(|s| s.iter().copied().collect()),
                student: self.student.clone().filter(|s| !s.is_empty()),
            },
            min_count: self.min_count,
            top_errors: self.top_errors,
        }
    }
}

/// Errors that exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("{what} `{}` not found", path.display())).into());
    }
    Ok(())
}

fn load_manifest(path: &Path) -> Result<QuestionManifest> {
    require_file(path, "manifest")?;
    QuestionManifest::load(path).map_err(|e: ManifestError| anyhow::anyhow!("invalid manifest `{}`: {e}", path.display()))
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn open_service(store: &Path) -> Result<Service> {
    Ok(Service::new(Store::open(store)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { manifest, log } => {
            let manifest = load_manifest(&manifest)?;
            require_file(&log, "log")?;
            let body = fs::read(&log).with_context(|| format!("reading {}", log.display()))?;
            let service = open_service(&cli.store)?;
            service.add_manifest(&manifest)?;
            let report = service.post_ingest(&manifest.question_id, &body)?;
            match cli.format {
                Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&report)?)),
                Format::Table => emit(&table::ingest(&report)),
            }
        }
        Command::Report { question, group } => {
            let service = open_service(&cli.store)?;
            let payload = service.get_views(&question, &group.query())?;
            match cli.format {
                // Exactly the bytes the HTTP endpoint serves.
                Format::Json => emit(&payload),
                Format::Table => emit(&table::views(&serde_json::from_str::<ViewsPayload>(&payload)?)),
            }
        }
        Command::Generate { manifest, out, config, students, sessions_per_student, seed, mix } => {
            let manifest = load_manifest(&manifest)?;
            let mut cfg = match config {
                Some(path) => {
                    require_file(&path, "config")?;
                    serde_json::from_str(&fs::read_to_string(&path)?)
                        .with_context(|| format!("invalid generator config `{}`", path.display()))?
                }
                None => SynthConfig::default(),
            };
            if let Some(n) = students {
                cfg.students = n;
            }
            if let Some(n) = sessions_per_student {
                cfg.sessions_per_student = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = mix {
                cfg.behavior = BehaviorMix {
                    intended: m[0],
                    greedy: m[1],
                    random_walk: m[2],
                };
            }
            cfg.validate().map_err(|e| UsageError(e.to_string()))?;
            let events = generate(&manifest, &cfg)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_log(&events, io::BufWriter::new(file))?;
            eprintln!("wrote {} events to {}", events.len(), out.display());
            Ok(())
        }
        Command::Recommend { question, rank, group } => {
            let service = open_service(&cli.store)?;
            let payload = service.get_recommendation(&question, rank, &group.query())?;
            match cli.format {
                Format::Json => emit(&payload),
                Format::Table => emit(&table::recommendation(&serde_json::from_str::<RecommendationPayload>(
                    &payload,
                )?)),
            }
        }
        Command::Export { question, out, model_out, group } => {
            let store = Store::open(&cli.store)?;
            let manifest = store
                .manifest(&question)?
                .ok_or_else(|| anyhow::anyhow!("unknown question `{question}`"))?;
            let sessions = store.sessions(&question)?;
            let query = group.query();
            let export = export_analytics(&sessions, &manifest, &query);
            fs::write(&out, serde_json::to_string(&export)?).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = model_out {
                let model = group_model(&sessions, &manifest, &query.filter);
                fs::write(&path, model.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Serve { addr, static_dir } => {
            let service = Arc::new(open_service(&cli.store)?);
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(qlens_service::serve(service, addr, static_dir))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
