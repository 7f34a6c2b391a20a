//! The `diakit` command line: `check`, `generate` and `simulate`.
//!
//! Exit codes: 0 success, 1 parse or check errors, 2 scenario or runtime
//! errors, 3 I/O errors.

pub mod gateway;
pub mod wire;

use std::fmt;
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use diakit_core::codegen::MANIFEST_FILE;
use diakit_core::{check, generate_manifest, generate_stubs, parse, CheckedSpec};
use diakit_runtime::newscast::reference_logic;
use diakit_runtime::sim::{Scenario, SimError, Simulation};
use diakit_runtime::trace::to_jsonl;
use diakit_runtime::EventKind;

use gateway::Gateway;

#[derive(Debug, Parser)]
#[command(name = "diakit", version, about = "Design, generate and simulate sense/compute/control applications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and type-check design files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write the framework manifest and programming stubs.
    Generate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write only the manifest.
        #[arg(long)]
        manifest_only: bool,
    },
    /// Run a scenario with the built-in component logic and write its trace.
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Serve the console on this port (0 picks one) and start paused.
        #[arg(long)]
        serve: Option<u16>,
        /// Wall-clock milliseconds between ticks while serving.
        #[arg(long, default_value_t = 200)]
        tick_ms: u64,
    },
}

/// A failed run: its exit code and, unless already reported, a message.
pub struct Failure {
    pub code: u8,
    pub error: Option<anyhow::Error>,
}

impl Failure {
    fn reported(code: u8) -> Failure {
        Failure { code, error: None }
    }
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exit {}", self.code)?;
        if let Some(e) = &self.error {
            write!(f, ": {e:#}")?;
        }
        Ok(())
    }
}

trait ExitWith<T> {
    fn exit_with(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit_with(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: Some(e.into()),
        })
    }
}

const PARSE: u8 = 1;
const SCENARIO: u8 = 2;
const IO: u8 = 3;

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Check { files } => {
            let spec = load_spec(&files)?;
            writeln!(
                out,
                "OK: {} devices, {} contexts, {} controllers",
                spec.devices().count(),
                spec.contexts().count(),
                spec.controllers().count()
            )
            .exit_with(IO)
        }
        Command::Generate {
            files,
            out: dir,
            manifest_only,
        } => {
            let spec = load_spec(&files)?;
            generate(&spec, &dir, manifest_only, out)
        }
        Command::Simulate {
            files,
            scenario,
            trace,
            serve,
            tick_ms,
        } => {
            let spec = Arc::new(load_spec(&files)?);
            simulate(spec, &scenario, &trace, serve, Duration::from_millis(tick_ms), out)
        }
    }
}

/// Reads, parses and checks `files`, printing every diagnostic to standard
/// error.
pub fn load_spec(files: &[PathBuf]) -> Result<CheckedSpec, Failure> {
    let mut texts = Vec::new();
    for f in files {
        let text = fs::read_to_string(f)
            .with_context(|| format!("cannot read {}", f.display()))
            .exit_with(IO)?;
        texts.push((f.display().to_string(), text));
    }
    let (model, diags) = parse(&texts);
    for d in &diags {
        eprintln!("{d}");
    }
    if diags.iter().any(|d| d.is_error()) {
        return Err(Failure::reported(PARSE));
    }
    check(&model).map_err(|errors| {
        for e in &errors {
            eprintln!("{e}");
        }
        Failure::reported(PARSE)
    })
}

fn generate(spec: &CheckedSpec, dir: &Path, manifest_only: bool, out: &mut dyn Write) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .exit_with(IO)?;
    let manifest = generate_manifest(spec);
    let mut written = Vec::new();
    if !manifest_only {
        written = generate_stubs(&manifest, dir).exit_with(IO)?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_canonical_string())
        .with_context(|| format!("cannot write {}", path.display()))
        .exit_with(IO)?;
    written.insert(0, path);
    for p in written {
        writeln!(out, "wrote {}", p.display()).exit_with(IO)?;
    }
    Ok(())
}

fn sim_failure(e: SimError) -> Failure {
    Failure {
        code: SCENARIO,
        error: Some(match e {
            SimError::Scenario(m) => anyhow!("invalid scenario: {m}"),
            SimError::Runtime(r) => anyhow!("{}: {r}", r.code()),
        }),
    }
}

fn simulate(
    spec: Arc<CheckedSpec>,
    scenario_path: &Path,
    trace_path: &Path,
    serve: Option<u16>,
    interval: Duration,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let text = fs::read_to_string(scenario_path)
        .with_context(|| format!("cannot read {}", scenario_path.display()))
        .exit_with(IO)?;
    let scenario = Scenario::from_json_str(&text)
        .with_context(|| format!("invalid scenario {}", scenario_path.display()))
        .exit_with(SCENARIO)?;
    let mut sim = Simulation::new(spec, reference_logic(), scenario).map_err(sim_failure)?;

    let outcome = match serve {
        None => sim.run_to_end(),
        Some(port) => {
            let listener = TcpListener::bind(("127.0.0.1", port))
                .with_context(|| format!("cannot listen on port {port}"))
                .exit_with(IO)?;
            let feed = gateway::feed();
            sim.on_snapshot(gateway::publisher(feed.clone()));
            sim.set_paused(true);
            let gw = Gateway::start(listener, sim.steering(), sim.snapshots(), feed)
                .context("cannot start the console server")
                .exit_with(IO)?;
            resume_on_signal(&sim)?;
            writeln!(out, "LISTENING {}", gw.local_addr().port()).exit_with(IO)?;
            out.flush().exit_with(IO)?;
            let outcome = sim.run_live(interval);
            gw.shutdown(Duration::from_secs(2)).exit_with(IO)?;
            outcome
        }
    };

    fs::write(trace_path, to_jsonl(sim.records()))
        .with_context(|| format!("cannot write {}", trace_path.display()))
        .exit_with(IO)?;
    outcome.map_err(sim_failure)?;
    let commands = sim.records().iter().filter(|r| r.kind == EventKind::Command).count();
    writeln!(
        out,
        "OK: {} ticks, {} records, {} commands",
        sim.tick(),
        sim.records().len(),
        commands
    )
    .exit_with(IO)
}

#[cfg(unix)]
fn resume_on_signal(sim: &Simulation) -> Result<(), Failure> {
    use signal_hook::consts::SIGUSR1;
    use signal_hook::iterator::Signals;

    let mut signals = Signals::new([SIGUSR1]).context("cannot install the SIGUSR1 handler").exit_with(IO)?;
    let steering = sim.steering();
    std::thread::spawn(move || {
        for _ in signals.forever() {
            if steering.resume().is_err() {
                break;
            }
        }
    });
    Ok(())
}

#[cfg(not(unix))]
fn resume_on_signal(_: &Simulation) -> Result<(), Failure> {
    Ok(())
}
