use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tokenflow::compiler::{compile_with, emit_contract_text, CompilationMode};
use tokenflow::generate::{dataset_model, simulate_log, DATASETS};
use tokenflow::model::{parse_bpmn, validate_model, write_bpmn, ProcessModel, Severity};
use tokenflow::replay::{inject_noise, replay, table, CostReport, EventLog, ReplayOptions};
use tokenflow::repository::{ArtifactBundle, Repository};
use tokenflow::services::{router, Engine};

#[derive(Parser)]
#[command(name = "tokenflow", version, about = "Compile BPMN models to process contracts and run them on a simulated ledger")]
struct Cli {
    /// Artifact repository directory.
    #[arg(long, global = true, default_value = ".tokenflow")]
    repo: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a model, store the bundle and write its artifacts.
    Compile {
        model: PathBuf,
        #[arg(long, default_value = "full")]
        mode: CompilationMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report structural and type diagnostics.
    Validate { model: PathBuf },
    /// Replay an event log against a stored model.
    Replay {
        /// Bundle hash in the repository.
        #[arg(long)]
        model: String,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "full")]
        mode: CompilationMode,
        /// Text table goes here, JSON rows next to it with a .jsonl extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
    /// Write a dataset-shaped model and a simulated log.
    Generate {
        /// One of the dataset names, e.g. "Supply chain".
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        traces: usize,
        /// Fraction of traces made non-conforming.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_model(path: &Path) -> Result<(Vec<u8>, ProcessModel)> {
    let xml = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let m = parse_bpmn(&xml).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok((xml, m))
}

fn compile_cmd(repo: &Repository, path: &Path, mode: CompilationMode, out: Option<&Path>) -> Result<()> {
    let (xml, m) = load_model(path)?;
    let resolve = |h: &str| repo.get(h).ok().and_then(|b| String::from_utf8(b.bpmn_xml).ok());
    let comp = compile_with(&m, mode, &resolve).map_err(|e| anyhow::anyhow!("{e}"))?;
    let bundle = ArtifactBundle::from_compilation(&xml, &comp);
    let hash = repo.put(&bundle)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for c in &comp.contracts {
            let h = c.hash();
            let short = &h[..16.min(h.len())];
            fs::write(dir.join(format!("{short}.ir.json")), c.to_bytes())?;
            fs::write(dir.join(format!("{short}.txt")), emit_contract_text(c))?;
        }
        fs::write(dir.join("dictionary.json"), serde_json::to_string_pretty(&comp.dictionary)?)?;
    }
    println!("{hash}");
    Ok(())
}

fn validate_cmd(path: &Path) -> Result<()> {
    let (_, m) = load_model(path)?;
    let ds = validate_model(&m);
    for d in &ds {
        println!("{d}");
    }
    let errors = ds.iter().filter(|d| d.severity == Severity::Error).count();
    if errors > 0 {
        bail!("{errors} error(s)");
    }
    println!("ok");
    Ok(())
}

fn replay_cmd(repo: &Repository, hash: &str, log: &Path, mode: CompilationMode, report: Option<&Path>) -> Result<()> {
    let bundle = repo.get(hash)?;
    let m = parse_bpmn(&bundle.bpmn_xml).map_err(|e| anyhow::anyhow!("stored model: {e}"))?;
    let text = fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let log = EventLog::parse(&text)?;
    let main = replay(&m, &log, mode, ReplayOptions::default())?;
    println!("conforming {} non-conforming {}", main.conforming, main.non_conforming);
    if let Some(out) = report {
        // overheads need every mode
        let mut modes = Vec::new();
        for x in [CompilationMode::Basic, CompilationMode::Default, CompilationMode::Optimized, CompilationMode::Full] {
            let cost = if x == mode { main.cost.clone() } else { replay(&m, &log, x, ReplayOptions::default())?.cost };
            modes.push(cost);
        }
        let name = if m.name.is_empty() { m.id.clone() } else { m.name.clone() };
        let r = CostReport { process: name, tested_traces: log.len(), modes };
        let t = table(std::slice::from_ref(&r));
        fs::write(out, &t)?;
        fs::write(out.with_extension("jsonl"), r.to_json_lines())?;
        print!("{t}");
    }
    Ok(())
}

fn generate_cmd(dataset: &str, seed: u64, traces: usize, noise: f64, out: &Path) -> Result<()> {
    let Some(shape) = DATASETS.iter().find(|s| s.name.eq_ignore_ascii_case(dataset)) else {
        let names: Vec<&str> = DATASETS.iter().map(|s| s.name).collect();
        bail!("unknown dataset `{dataset}`, expected one of: {}", names.join(", "));
    };
    let g = dataset_model(shape, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = simulate_log(&g, &mut rng, traces, 200);
    if noise > 0.0 {
        log = inject_noise(&log, &g.model, noise, seed).map_err(anyhow::Error::msg)?;
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("model.bpmn"), write_bpmn(&g.model))?;
    fs::write(out.join("log.txt"), log.to_text())?;
    println!("{} {} traces -> {}", shape.name, log.len(), out.display());
    Ok(())
}

async fn serve(repo: Repository, listen: &str) -> Result<()> {
    let engine = Arc::new(Engine::new(repo));
    let listener = tokio::net::TcpListener::bind(listen).await?;
    println!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine)).await?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let repo = Repository::open(&cli.repo).with_context(|| format!("opening {}", cli.repo.display()))?;
    match cli.cmd {
        Cmd::Compile { model, mode, out } => compile_cmd(&repo, &model, mode, out.as_deref()),
        Cmd::Validate { model } => validate_cmd(&model),
        Cmd::Replay { model, log, mode, report } => replay_cmd(&repo, &model, &log, mode, report.as_deref()),
        Cmd::Generate { dataset, seed, traces, noise, out } => generate_cmd(&dataset, seed, traces, noise, &out),
        Cmd::Serve { listen } => tokio::runtime::Runtime::new()?.block_on(serve(repo, &listen)),
    }
}
