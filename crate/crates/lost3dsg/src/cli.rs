//! Command-line front end. [`run`] returns the process exit status:
//! 0 on success, 2 for invalid input (arguments, config, scenario files),
//! 1 for failures while running.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lost3dsg_core::{
    Component, ComponentSet, HashedTrigramEmbedder, Providers, SentenceEmbedder, WordVectorTable,
};

use crate::config::{EmbedderChoice, RunConfig};
use crate::export::export_graph;
use crate::harness::{
    self, ablation_json, ablation_table, memory_report, paper_subsets, replay_with, reports_json, run_ablation_with,
    HarnessError, ReplayOptions,
};
use crate::remote::RemoteEmbedder;
use crate::scenario::{load_scenario_file, Scenario};
use crate::vectors::{bundled_word_vectors, load_word_vectors_file};

#[derive(Parser, Debug)]
#[command(name = "lost3dsg", version, about = "Replay scripted scenes through the lost3dsg scene graph")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay one scenario; writes metrics.json, graph.json and frames.json.
    Replay(ReplayArgs),
    /// Replay every scenario in a directory once per component subset;
    /// writes ablation.json and ablation.txt.
    Ablate(AblateArgs),
    /// Replay one scenario and compare its object storage with a per-voxel
    /// embedding map; writes memory.json.
    Memory(MemoryArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EmbedderFlag {
    Local,
    Remote,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured sentence embedder.
    #[arg(long, value_enum)]
    embedder: Option<EmbedderFlag>,
    /// Remote embedder URL; overrides the configured endpoint.
    #[arg(long)]
    endpoint: Option<String>,
    /// Shuffle detections inside each frame with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct AblateArgs {
    /// Directory of scenario `.json` files.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Semicolon-separated subsets such as `full;l,d;d`. Defaults to the
    /// six published subsets.
    #[arg(long)]
    ablate_subsets: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MemoryArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use this voxel count instead of deriving it from the scene bounds.
    #[arg(long, conflicts_with = "voxel_res")]
    voxels: Option<u64>,
    /// Voxel side length in meters.
    #[arg(long, default_value_t = 0.025)]
    voxel_res: f64,
    #[arg(long, default_value_t = harness::CLIP_EMBEDDING_DIM)]
    embedding_dim: u64,
    #[arg(long, default_value_t = harness::BASELINE_BYTES_PER_FLOAT)]
    bytes_per_float: u64,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Scenario(_) | HarnessError::EmptyInput(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Setup {
    config: RunConfig,
    words: WordVectorTable,
    embedder: Box<dyn SentenceEmbedder>,
    seed: Option<u64>,
}

impl Setup {
    fn providers(&self) -> Providers<'_> {
        Providers::new(&self.words, self.embedder.as_ref())
    }

    fn options(&self) -> ReplayOptions {
        ReplayOptions {
            shuffle_seed: self.seed,
        }
    }
}

fn setup(common: &Common) -> Result<Setup, Failure> {
    let config = match &common.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| Failure::Invalid(e.to_string()))?,
        None => RunConfig::default(),
    };
    let words = match &config.word_vectors {
        Some(p) => load_word_vectors_file(p)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?,
        None => bundled_word_vectors(),
    };
    let kind = match common.embedder {
        Some(EmbedderFlag::Local) => EmbedderChoice::Local,
        Some(EmbedderFlag::Remote) => EmbedderChoice::Remote,
        None => config.embedder.kind,
    };
    let embedder: Box<dyn SentenceEmbedder> = match kind {
        EmbedderChoice::Local => Box::new(HashedTrigramEmbedder),
        EmbedderChoice::Remote => {
            let endpoint = common
                .endpoint
                .clone()
                .or_else(|| config.embedder.endpoint.clone())
                .ok_or_else(|| Failure::Invalid("remote embedder needs --endpoint".into()))?;
            Box::new(
                RemoteEmbedder::new(endpoint)
                    .with_timeout(config.embedder.timeout)
                    .with_env_token(),
            )
        }
    };
    Ok(Setup {
        config,
        words,
        embedder,
        seed: common.seed,
    })
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario_file(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write_outputs(dir: &Path, files: &[(&str, &str)]) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_subsets(spec: &str) -> Result<Vec<ComponentSet>, Failure> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            if s.eq_ignore_ascii_case("full") {
                return Ok(ComponentSet::FULL);
            }
            let parts = s
                .split(',')
                .map(|c| {
                    Component::parse(c.trim())
                        .ok_or_else(|| Failure::Invalid(format!("unknown component {c:?} in --ablate-subsets")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ComponentSet::new(parts).map_err(|e| Failure::Invalid(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Failure::Invalid("--ablate-subsets names no subset".into()))
            } else {
                Ok(v)
            }
        })
}

fn cmd_replay(args: &ReplayArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load(&args.scenario)?;
    let s = setup(&args.common)?;
    let r = replay_with(&scenario, &s.config.tracker, &s.providers(), s.options())?;
    write_outputs(
        &args.out,
        &[
            ("metrics.json", &r.metrics.to_json()),
            ("graph.json", &export_graph(r.scene.graph())),
            ("frames.json", &reports_json(&r.reports)),
        ],
    )?;
    let m = &r.metrics;
    let _ = writeln!(
        stdout,
        "{}: detections {} deletions {} updates {}",
        scenario.name, m.detections, m.deletions, m.updates
    );
    Ok(())
}

fn cmd_ablate(args: &AblateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let entries = std::fs::read_dir(&args.scenario)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.scenario.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Invalid(format!(
            "{}: no scenario files",
            args.scenario.display()
        )));
    }
    let scenarios = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let subsets = match &args.ablate_subsets {
        Some(spec) => parse_subsets(spec)?,
        None => paper_subsets(),
    };
    let s = setup(&args.common)?;
    let rows = run_ablation_with(&scenarios, &subsets, &s.config.tracker, &s.providers(), s.options())?;
    let table = ablation_table(&rows);
    write_outputs(
        &args.out,
        &[("ablation.json", &ablation_json(&rows)), ("ablation.txt", &table)],
    )?;
    let _ = stdout.write_all(table.as_bytes());
    Ok(())
}

fn cmd_memory(args: &MemoryArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load(&args.scenario)?;
    if !(args.voxel_res > 0.0 && args.voxel_res.is_finite()) {
        return Err(Failure::Invalid("--voxel-res must be positive".into()));
    }
    let s = setup(&args.common)?;
    let r = replay_with(&scenario, &s.config.tracker, &s.providers(), s.options())?;
    let voxels = match args.voxels {
        Some(n) => n,
        None => harness::scene_bounds(&r.peak).map_or(0, |b| harness::voxel_count(&b, args.voxel_res)),
    };
    let report = memory_report(&r.peak, voxels, args.embedding_dim, args.bytes_per_float);
    write_outputs(&args.out, &[("memory.json", &report.to_json())])?;
    let _ = writeln!(
        stdout,
        "{} objects: {} B; {} voxels x {} x {} B: {} B",
        report.object_count,
        report.object_bytes,
        report.voxel_count,
        report.embedding_dim,
        report.bytes_per_float,
        report.voxel_bytes
    );
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Replay(a) => cmd_replay(a, stdout),
        Command::Ablate(a) => cmd_ablate(a, stdout),
        Command::Memory(a) => cmd_memory(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}
