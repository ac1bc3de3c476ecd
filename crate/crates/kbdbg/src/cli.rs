//! Command-line interface.

use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use kbdbg_core::diagnosis::{
    is_valid_candidate, leading_diagnoses, Diagnosis, DiagnosisError, DiagnosisProblem,
};
use kbdbg_core::logic::{parse_axioms, parse_kb, KnowledgeBase, LogicError};
use kbdbg_core::selection::{diagnosis_priors, Answer, FaultModel, Strategy};
use kbdbg_core::session::{
    benchmark, run_simulated_session, start_session, BenchConfig, GeneratorParams, Regime,
    SessionConfig, SessionError, SessionResult, Status, TargetSpec, DEFAULT_SIGMA,
};
use thiserror::Error;

use crate::api;
use crate::store::SessionStore;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kbdbg", version, about = "Interactive knowledge-base debugger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a knowledge base and report whether it is faulty.
    Check { kb: PathBuf },
    /// List leading diagnoses with their prior probabilities.
    Diagnose {
        kb: PathBuf,
        #[arg(long, default_value_t = DiagnosisProblem::DEFAULT_MAX_LEADING)]
        n: usize,
    },
    /// Debug a knowledge base interactively by answering yes/no queries.
    Debug {
        kb: PathBuf,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Run a session against a simulated user who knows the intended KB.
    Simulate {
        #[arg(long)]
        kb: PathBuf,
        /// Comma-separated axiom ids of the target diagnosis.
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        /// Axioms (one `id: formula` per line) the intended KB adds.
        #[arg(long)]
        ext: Option<PathBuf>,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Benchmark strategies on generated faulty knowledge bases.
    Bench(BenchArgs),
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data_dir: PathBuf,
        /// Directory holding the web interface bundle.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// entropy, split or random
    #[arg(long, default_value = "entropy")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of leading diagnoses.
    #[arg(long, default_value_t = DiagnosisProblem::DEFAULT_MAX_LEADING)]
    pub n: usize,
}

impl SessionArgs {
    fn config(&self) -> SessionConfig {
        let strategy = match self.strategy {
            Strategy::Random { seed: 0 } => Strategy::Random { seed: self.seed },
            s => s,
        };
        SessionConfig {
            strategy,
            sigma: self.sigma,
            max_leading: self.n,
            ..SessionConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = GeneratorParams::default().groups)]
    pub groups: usize,
    #[arg(long, default_value_t = GeneratorParams::default().group_size)]
    pub group_size: usize,
    #[arg(long, default_value_t = GeneratorParams::default().base_atoms)]
    pub base_atoms: usize,
    #[arg(long, default_value = "uniform")]
    pub regime: Regime,
    #[arg(long, value_delimiter = ',', default_value = "entropy,split,random")]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 for wall-clock times so output is reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: LogicError },
    #[error("{0}")]
    Infeasible(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Infeasible(_) => EXIT_INPUT,
            CliError::Session(SessionError::Diagnosis(DiagnosisError::InfeasibleProblem(_))) => {
                EXIT_INPUT
            }
            _ => EXIT_USAGE,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_kb(path: &Path) -> Result<(String, KnowledgeBase), CliError> {
    let text = read(path)?;
    let kb = parse_kb(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((text, kb))
}

fn out_err(e: io::Error) -> CliError {
    CliError::Other(e.into())
}

fn fmt_diagnosis(d: &Diagnosis) -> String {
    d.to_string()
}

fn check(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, kb) = load_kb(path)?;
    let everything = kb.ontology_ids().map(str::to_string).collect();
    if !is_valid_candidate(&kb, &everything).map_err(SessionError::from)? {
        return Err(CliError::Infeasible(
            "background and positive tests are inconsistent or entail a negative test".into(),
        ));
    }
    let faulty = !is_valid_candidate(&kb, &Default::default()).map_err(SessionError::from)?;
    writeln!(
        out,
        "{} ontology, {} background, {} positive, {} negative axioms",
        kb.ontology.len(),
        kb.background.len(),
        kb.positive.len(),
        kb.negative.len()
    )
    .map_err(out_err)?;
    writeln!(out, "{}", if faulty { "faulty" } else { "ok" }).map_err(out_err)?;
    Ok(())
}

fn diagnose(path: &Path, n: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, kb) = load_kb(path)?;
    let problem = DiagnosisProblem::new(kb, n).map_err(SessionError::from)?;
    let leading = leading_diagnoses(&problem).map_err(SessionError::from)?;
    if leading.len() == 1 && leading[0].is_empty() {
        writeln!(out, "no faults: the knowledge base meets every requirement").map_err(out_err)?;
        return Ok(());
    }
    let priors = diagnosis_priors::<f64>(&leading, &problem.kb, &FaultModel::default())
        .map_err(SessionError::from)?;
    for (d, p) in priors.ranked() {
        writeln!(out, "{:>7.4}  {}", p, fmt_diagnosis(d)).map_err(out_err)?;
    }
    Ok(())
}

fn print_ranking(
    session: &kbdbg_core::session::DebugSession,
    out: &mut dyn Write,
) -> io::Result<()> {
    for (d, p) in session.ranked() {
        writeln!(out, "  {:>6.2}%  {}", p * 100.0, fmt_diagnosis(d))?;
    }
    Ok(())
}

fn print_outcome(
    session: &kbdbg_core::session::DebugSession,
    out: &mut dyn Write,
) -> io::Result<()> {
    match (session.status(), session.final_diagnosis()) {
        (Status::Finished, Some(d)) if d.is_empty() => writeln!(out, "no faults found"),
        (Status::Finished, Some(d)) => writeln!(out, "faulty axioms: {}", fmt_diagnosis(d)),
        (status, _) => {
            writeln!(out, "stopped: {status}; remaining diagnoses:")?;
            print_ranking(session, out)
        }
    }
}

/// Terminal question loop. Ends at a terminal status, on `quit`, or at end of input.
pub fn debug_loop(
    kb: KnowledgeBase,
    config: SessionConfig,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut session = start_session(kb, config)?;
    let mut line = String::new();
    while let Some(q) = session.pending_query().cloned() {
        writeln!(out, "\nDiagnoses:").map_err(out_err)?;
        print_ranking(&session, out).map_err(out_err)?;
        writeln!(
            out,
            "Should the intended knowledge base entail: {}?",
            q.text()
        )
        .map_err(out_err)?;
        let answer = loop {
            write!(out, "[yes/no/quit] > ").map_err(out_err)?;
            out.flush().map_err(out_err)?;
            line.clear();
            if input.read_line(&mut line).map_err(out_err)? == 0 {
                writeln!(out).map_err(out_err)?;
                return Ok(());
            }
            let reply = line.trim();
            if matches!(reply.to_ascii_lowercase().as_str(), "q" | "quit" | "exit") {
                return Ok(());
            }
            match reply.parse::<Answer>() {
                Ok(a) => break a,
                Err(_) => writeln!(out, "please answer yes or no").map_err(out_err)?,
            }
        };
        session.answer(answer)?;
    }
    writeln!(out).map_err(out_err)?;
    print_outcome(&session, out).map_err(out_err)?;
    Ok(())
}

fn simulate(
    kb_path: &Path,
    target: &[String],
    ext: Option<&Path>,
    args: &SessionArgs,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (_, kb) = load_kb(kb_path)?;
    let mut intended = TargetSpec::new(Diagnosis::new(
        target.iter().map(|s| s.trim()).filter(|s| !s.is_empty()),
    ));
    if let Some(p) = ext {
        intended.extension = parse_axioms(&read(p)?).map_err(|source| CliError::Parse {
            path: p.to_path_buf(),
            source,
        })?;
    }
    let session = run_simulated_session(kb, &intended, args.config())?;
    for h in session.history() {
        writeln!(out, "{}? {}", h.query.text(), h.answer).map_err(out_err)?;
    }
    print_outcome(&session, out).map_err(out_err)?;
    let result = SessionResult::of(&session, Some(&intended));
    writeln!(
        out,
        "queries: {}, strategy: {}, correct: {}",
        result.queries_asked,
        result.strategy,
        result.correct == Some(true)
    )
    .map_err(out_err)?;
    Ok(())
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = BenchConfig {
        runs: args.runs,
        generator: GeneratorParams {
            groups: args.groups,
            group_size: args.group_size,
            base_atoms: args.base_atoms,
        },
        strategies: args.strategies.clone(),
        regime: args.regime,
        seed: args.seed,
        sigma: args.sigma,
        timing: !args.no_timing,
        ..BenchConfig::default()
    };
    let report = benchmark(&config)?;
    let csv = report.to_csv();
    let mut summary = String::new();
    for a in report.aggregates.iter().filter(|a| a.run == "mean") {
        summary.push_str(&format!(
            "{:<8} mean queries {:.3}, correct {:.1}%\n",
            a.strategy,
            a.queries_asked,
            a.correct * 100.0
        ));
    }
    if let Some(r) = report.query_ratio("entropy", "split") {
        summary.push_str(&format!("entropy/split query ratio: {r:.3}\n"));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, csv).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            write!(out, "{summary}").map_err(out_err)?;
            writeln!(out, "wrote {}", path.display()).map_err(out_err)?;
        }
        None => {
            write!(out, "{csv}").map_err(out_err)?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn serve(
    host: &str,
    port: u16,
    data_dir: &Path,
    static_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid address {host}:{port}: {e}")))?;
    let store = SessionStore::open(data_dir).map_err(anyhow::Error::from)?;
    let app = api::router(Arc::new(store), static_dir);
    let runtime = tokio::runtime::Runtime::new().map_err(anyhow::Error::from)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}

pub fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Check { kb } => check(&kb, out),
        Command::Diagnose { kb, n } => diagnose(&kb, n, out),
        Command::Debug { kb, session } => {
            let (_, kb) = load_kb(&kb)?;
            debug_loop(kb, session.config(), input, out)
        }
        Command::Simulate {
            kb,
            target,
            ext,
            session,
        } => simulate(&kb, &target, ext.as_deref(), &session, out),
        Command::Bench(args) => bench(&args, out),
        Command::Serve {
            port,
            host,
            data_dir,
            static_dir,
        } => serve(&host, port, &data_dir, static_dir),
    }
}

/// Runs the command line `args` and returns the process exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match execute(cli, input, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
