use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use agentmarket::analysis::{decision_sweep, efficiency, rho_grid};
use agentmarket::io::{
    load_scenario, load_sweep_config, read_round_summaries, read_stored_efficiency, write_run, write_sweep, IoError, RunMeta,
    EFFICIENCY_JSON, MANIFEST_JSON,
};
use agentmarket::llm::{ChatClient, ClientError, HttpChatClient, LlmClientConfig, ReqwestTransport, ScriptedClient};
use agentmarket::sim::{run, Engine, LlmBackend, SimError};

#[derive(Parser)]
#[command(name = "agentmarket", version, about = "Double auction market simulator with rule, linear and language-model agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LlmArg {
    Scripted,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: runs/<name>-seed<N>]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where language-model agents get decisions [default: the scenario's llm.mode]
        #[arg(long, value_enum)]
        llm: Option<LlmArg>,
        /// JSONL script for scripted mode. Without one, personas use rule stand-ins.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Query one agent over a grid of price-to-fundamental ratios.
    Sweep {
        agent_config: PathBuf,
        /// start:end:step, inclusive
        #[arg(long, default_value = "0.1:3.5:0.1")]
        grid: String,
        #[arg(long, default_value_t = 5)]
        trials: u32,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: sweeps/<agent label>]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        llm: Option<LlmArg>,
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Recompute the efficiency report from a run directory.
    Report { run_dir: PathBuf },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(c) => Failure::Config(format!("invalid configuration at {c}")),
            IoError::Read { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::Config(format!("invalid configuration at {c}")),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn now() -> String {
    OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default()
}

/// A chat client when one is configured; `None` means rule stand-ins.
fn client(
    mode: LlmArg,
    script: Option<&Path>,
    config: &LlmClientConfig,
) -> Result<Option<Box<dyn ChatClient>>, Failure> {
    let client_err = |e: ClientError| Failure::Config(e.to_string());
    match mode {
        LlmArg::Scripted => match script {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                Ok(Some(Box::new(ScriptedClient::from_jsonl(&text).map_err(client_err)?)))
            }
            None => Ok(None),
        },
        LlmArg::Http => {
            let transport = ReqwestTransport::new().map_err(client_err)?;
            Ok(Some(Box::new(HttpChatClient::from_env(config.clone(), Box::new(transport)).map_err(client_err)?)))
        }
    }
}

fn default_mode(config: &LlmClientConfig) -> LlmArg {
    match config.mode {
        agentmarket::llm::LlmMode::Scripted => LlmArg::Scripted,
        agentmarket::llm::LlmMode::Http => LlmArg::Http,
    }
}

fn mode_name(mode: LlmArg, has_client: bool) -> &'static str {
    match (mode, has_client) {
        (LlmArg::Http, _) => "http",
        (LlmArg::Scripted, true) => "scripted",
        (LlmArg::Scripted, false) => "surrogate",
    }
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    llm: Option<LlmArg>,
    script: Option<&Path>,
) -> Result<(), Failure> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let mode = llm.unwrap_or_else(|| default_mode(&scenario.llm));
    let uses_llm = scenario.agents.iter().any(|a| a.engine == Engine::Llm);
    let mut client = if uses_llm { client(mode, script, &scenario.llm)? } else { None };
    if uses_llm && client.is_none() {
        eprintln!("note: no script given; language-model agents use rule stand-ins");
    }
    let model = client.as_ref().map(|c| c.model_id().to_string());
    let llm_mode = if uses_llm { mode_name(mode, client.is_some()) } else { "none" };
    let backend = match client.as_deref_mut() {
        Some(c) => LlmBackend::Client(c),
        None => LlmBackend::Surrogate,
    };

    let started_at = now();
    let output = run(&scenario, backend)?;
    let finished_at = now();
    let name = if scenario.name.is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
    } else {
        scenario.name.clone()
    };
    let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(format!("{name}-seed{}", scenario.seed)));
    let meta = RunMeta { llm_mode: llm_mode.to_string(), model, started_at, finished_at };
    let manifest = write_run(&dir, &scenario, &output, &meta)?;
    print!("{}", std::fs::read_to_string(dir.join("summary.txt")).context("reading summary")?);
    println!("Wrote {} files to {} (manifest {MANIFEST_JSON})", manifest.files.len(), dir.display());
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("--grid: expected start:end:step, got `{text}`"));
    let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    rho_grid(a, b, step).map_err(|e| Failure::Config(format!("--grid: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    path: &Path,
    grid: &str,
    trials: u32,
    seed: Option<u64>,
    out: Option<PathBuf>,
    llm: Option<LlmArg>,
    script: Option<&Path>,
) -> Result<(), Failure> {
    let mut config = load_sweep_config(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if trials == 0 {
        return Err(Failure::Config("--trials: must be at least 1".into()));
    }
    let grid = parse_grid(grid)?;
    let (agent, market, book) = config.parts().map_err(|e| Failure::Config(format!("invalid configuration at {e}")))?;
    let mode = llm.unwrap_or_else(|| default_mode(&config.llm));
    let mut client =
        if config.agent.engine == Engine::Llm { client(mode, script, &config.llm)? } else { None };
    let mut backend = match client.as_deref_mut() {
        Some(c) => LlmBackend::Client(c),
        None => LlmBackend::Surrogate,
    };
    let result = decision_sweep(&agent, &market, &grid, trials, &book, &mut backend)
        .map_err(|e| Failure::Runtime(e.into()))?;
    let dir = out.unwrap_or_else(|| PathBuf::from("sweeps").join(&agent.label));
    let files = write_sweep(&dir, std::slice::from_ref(&result))?;
    println!("{} over {} grid points, {} trials each", result.agent_type, grid.len(), trials);
    for (rho, decision) in result.modal_decisions() {
        println!("  rho {rho:<6} {}", decision.as_str());
    }
    println!("Wrote {} ({} rows) to {}", files[0].name, files[0].rows, dir.display());
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<(), Failure> {
    let rows = read_round_summaries(dir)?;
    let report = efficiency(&rows).map_err(|e| Failure::Runtime(e.into()))?;
    print!("{report}");
    if let Some(saved) = read_stored_efficiency(dir)? {
        if saved != report {
            let path = dir.join(EFFICIENCY_JSON);
            return Err(Failure::Runtime(anyhow::anyhow!("{} disagrees with rounds.csv", path.display())));
        }
        println!("Matches the report written at run time.");
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let scenario = load_scenario(path)?;
    let specs = scenario.agent_specs().map_err(|e| Failure::Config(format!("invalid configuration at {e}")))?;
    println!(
        "{}: ok ({} agents, {} rounds, initial price {})",
        path.display(),
        specs.len(),
        scenario.trading_rounds(),
        scenario.initial_price
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, out, llm, script } => cmd_run(&scenario, seed, out, llm, script.as_deref()),
        Command::Sweep { agent_config, grid, trials, seed, out, llm, script } => {
            cmd_sweep(&agent_config, &grid, trials, seed, out, llm, script.as_deref())
        }
        Command::Report { run_dir } => cmd_report(&run_dir),
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
