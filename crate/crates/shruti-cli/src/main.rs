//! Command-line front end: encode corpora into recitation files, verify them
//! at all three layers, drive simulation sweeps, and maintain multi-digest
//! ledger files.
//!
//! Exit codes are part of the contract: 0 success, 1 integrity failure,
//! 2 input error, 3 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use shruti::corpus::{semantic_digest, Corpus};
use shruti::integrity::verify_full;
use shruti::ledger::{
    canonical_event, tamper_experiment, verify_chain, Chain, ChainPolicy, SchemeRegistry,
};
use shruti::network::sim::{run_simulation, SimConfig};
use shruti::patha::{encode, parse_recitation_file, render_recitation_file, spec_for, PathaKind};

const EXIT_INTEGRITY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "shruti",
    version,
    about = "Redundant chant-pattern encodings with layered integrity checking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode every verse of a corpus under one patha.
    Encode(EncodeArgs),
    /// Verify a recitation file against its corpus at all three layers.
    Verify(VerifyArgs),
    /// Run a seeded fault-injection simulation sweep.
    Simulate(SimulateArgs),
    /// Maintain and probe multi-digest ledger files.
    #[command(subcommand)]
    Ledger(LedgerCommand),
}

#[derive(Args)]
struct EncodeArgs {
    /// Corpus JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Patha kind to encode under.
    #[arg(long)]
    patha: String,
    /// Output recitation file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpus JSON file the recitations claim to realize.
    #[arg(long)]
    config: PathBuf,
    /// Recitation file to check.
    recitation: PathBuf,
    /// Write the report JSON here as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for metrics.csv, summary.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Append one JSON event to a chain file (created if missing).
    Append(LedgerAppendArgs),
    /// Recompute every digest in a chain file.
    Verify(LedgerVerifyArgs),
    /// Print the tamper-detection table over (m, c) as CSV.
    Experiment(LedgerExperimentArgs),
}

#[derive(Args)]
struct LedgerAppendArgs {
    /// Chain file (JSON lines). A missing file starts a fresh chain.
    #[arg(long)]
    config: PathBuf,
    /// Event payload as JSON; stored in canonical form.
    payload: String,
    /// Where to write the grown chain; defaults to the input file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme count when starting a fresh chain.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args)]
struct LedgerVerifyArgs {
    /// Chain file (JSON lines).
    #[arg(long)]
    config: PathBuf,
    /// Acceptance threshold: a link is valid when at least this many schemes
    /// verify. Defaults to all of them.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct LedgerExperimentArgs {
    /// Number of digest schemes.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Chain length for the sweep.
    #[arg(long, default_value_t = 50)]
    blocks: u64,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure destined for stderr plus a specific exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn integrity(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INTEGRITY,
            message: message.into(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_corpus(path: &Path) -> Result<Corpus, Failure> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_encode(args: &EncodeArgs) -> Result<(), Failure> {
    let kind: PathaKind = args
        .patha
        .parse()
        .map_err(|e| Failure::usage(format!("{e}")))?;
    let corpus = load_corpus(&args.config)?;
    let spec = spec_for(kind);
    let recitations: Vec<_> = corpus
        .verses
        .iter()
        .map(|verse| encode(verse, &spec))
        .collect();
    let text = render_recitation_file(&recitations)
        .expect("freshly encoded chains are structurally valid");
    emit(&args.out, &text)
}

#[derive(Serialize)]
struct VerseReport {
    verse_id: String,
    kind: String,
    textual: bool,
    phonetic: bool,
    semantic: bool,
    overall: bool,
    /// Chain indices the textual layer flagged.
    flagged: Vec<usize>,
    /// Chain indices whose recited contour is off.
    mismatches: Vec<usize>,
    structure_error: Option<String>,
    /// Occurrences rewritten while reaching the semantic digest.
    repaired: usize,
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    verses: Vec<VerseReport>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&args.config)?;
    let text = read_file(&args.recitation)?;
    let recitations = parse_recitation_file(&text, &corpus)
        .map_err(|e| Failure::input(format!("{}: {e}", args.recitation.display())))?;
    let mut verses = Vec::with_capacity(recitations.len());
    for recitation in &recitations {
        let verse = corpus.get(&recitation.verse_id).ok_or_else(|| {
            Failure::input(format!(
                "verse {:?} is not in the corpus",
                recitation.verse_id
            ))
        })?;
        let report = verify_full(recitation, &semantic_digest(verse));
        verses.push(VerseReport {
            verse_id: recitation.verse_id.clone(),
            kind: recitation.kind.name().to_string(),
            textual: report.textual.passed,
            phonetic: report.phonetic.passed,
            semantic: report.semantic.passed,
            overall: report.overall,
            flagged: report
                .textual
                .flagged
                .iter()
                .map(|f| f.chain_index)
                .collect(),
            mismatches: report.phonetic.mismatches.clone(),
            structure_error: report
                .textual
                .structure_error
                .as_ref()
                .map(|e| e.to_string()),
            repaired: report.semantic.repaired,
        });
    }
    let report = VerifyReport {
        passed: verses.iter().all(|v| v.overall),
        verses,
    };
    let mut rendered = serde_json::to_string_pretty(&report).expect("reports always serialize");
    rendered.push('\n');
    if let Some(path) = &args.out {
        write_file(path, &rendered)?;
    }
    print!("{rendered}");
    if report.passed {
        Ok(())
    } else {
        Err(Failure::integrity("verification failed".to_string()))
    }
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: String,
    seed: u64,
    config: SimConfig,
    outputs: Vec<String>,
    duration_seconds: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = read_file(&args.config)?;
    let mut config: SimConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let started = Instant::now();
    let run = run_simulation(&config).map_err(|e| Failure::input(format!("{e}")))?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", args.out.display())))?;

    let metrics_path = args.out.join("metrics.csv");
    write_file(&metrics_path, &run.csv())?;
    let mut summary =
        serde_json::to_string_pretty(&run.summary).expect("summaries always serialize");
    summary.push('\n');
    let summary_path = args.out.join("summary.json");
    write_file(&summary_path, &summary)?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config,
        outputs: vec!["metrics.csv".to_string(), "summary.json".to_string()],
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifests always serialize");
    manifest_text.push('\n');
    write_file(&args.out.join("manifest.json"), &manifest_text)?;

    println!("metrics: {}", metrics_path.display());
    println!("summary: {}", summary_path.display());
    println!("manifest: {}", args.out.join("manifest.json").display());
    Ok(())
}

fn load_or_new_chain(path: &Path, k: usize) -> Result<Chain, Failure> {
    if path.exists() {
        let text = read_file(path)?;
        Chain::load(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    } else {
        let registry = SchemeRegistry::standard(k)
            .map_err(|e| Failure::usage(format!("cannot start a chain: {e}")))?;
        Ok(Chain::new(registry))
    }
}

fn cmd_ledger_append(args: &LedgerAppendArgs) -> Result<(), Failure> {
    let value: serde_json::Value = serde_json::from_str(&args.payload)
        .map_err(|e| Failure::input(format!("payload is not valid JSON: {e}")))?;
    let mut chain = load_or_new_chain(&args.config, args.k)?;
    let block = chain.append(&canonical_event(&value));
    println!("appended block {}", block.height);
    let target = args.out.as_ref().unwrap_or(&args.config);
    write_file(target, &chain.save())
}

#[derive(Serialize)]
struct ChainReportOut {
    valid: bool,
    first_invalid: Option<u64>,
    mismatch_counts: std::collections::BTreeMap<String, u64>,
}

fn cmd_ledger_verify(args: &LedgerVerifyArgs) -> Result<(), Failure> {
    let text = read_file(&args.config)?;
    let chain = Chain::load(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    let k = chain.registry().len();
    let m = args.m.unwrap_or(k);
    let policy = ChainPolicy::new(k, m).map_err(|e| Failure::usage(format!("{e}")))?;
    let report = verify_chain(&chain, policy);
    let out = ChainReportOut {
        valid: report.valid,
        first_invalid: report.first_invalid,
        mismatch_counts: report.mismatch_counts,
    };
    let mut rendered = serde_json::to_string_pretty(&out).expect("reports always serialize");
    rendered.push('\n');
    print!("{rendered}");
    if report.valid {
        Ok(())
    } else {
        Err(Failure::integrity(format!(
            "chain invalid at height {}",
            report.first_invalid.expect("invalid chains name a height")
        )))
    }
}

fn cmd_ledger_experiment(args: &LedgerExperimentArgs) -> Result<(), Failure> {
    if args.k < 1 {
        return Err(Failure::usage("experiment needs at least one scheme"));
    }
    let registry = SchemeRegistry::standard(args.k).map_err(|e| Failure::usage(format!("{e}")))?;
    let mut chain = Chain::new(registry);
    for n in 0..args.blocks {
        chain.append(&canonical_event(&serde_json::json!({
            "event": "experiment",
            "n": n,
        })));
    }
    let mut csv = String::from("k,m,c,detection\n");
    for m in 1..=args.k {
        let policy = ChainPolicy::new(args.k, m).expect("1 ≤ m ≤ k by construction");
        for c in 0..=args.k {
            let outcome = tamper_experiment(&chain, c, policy).expect("c ≤ k by construction");
            csv.push_str(&format!("{},{m},{c},{}\n", args.k, outcome.detection));
        }
    }
    emit(&args.out, &csv)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Ledger(LedgerCommand::Append(args)) => cmd_ledger_append(args),
        Command::Ledger(LedgerCommand::Verify(args)) => cmd_ledger_verify(args),
        Command::Ledger(LedgerCommand::Experiment(args)) => cmd_ledger_experiment(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
