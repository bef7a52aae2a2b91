use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sleec_bench::bench::{model_suite, run_bench, scenario_suite, synthetic_suite, Suite};
use sleec_bench::cases::generate_test_cases;
use sleec_bench::fixtures::{scenario_config, SCENARIO};
use sleec_bench::report::{write_latency_csv, BenchReport, STAGES};
use sleec_bench::runner::{RunError, Transport};
use sleec_bench::synthetic::{generate_synthetic_ruleset, SyntheticSpec};
use sleec_core::analysis::{analyze, AnalysisMode};
use sleec_core::{
    compile, format_ruleset, parse_ruleset, ConditionSnapshot, Ruleset, SnapshotMode,
};
use sleec_enforcement::config::ClockMode;
use sleec_enforcement::{
    BusMessage, Clock, InProcessBus, LoopConfig, ProbeBatch, Transport as _, VirtualClock,
    WallClock,
};
use sleec_server::{serve, RequestLog, ServerState};
use tokio::io::{AsyncBufReadExt, BufReader};

/// Exit code for bad input files and arguments clap cannot check.
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sleec",
    version,
    about = "Parse, analyse, serve and enforce SLEEC rulesets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a ruleset parses and resolves.
    Parse {
        file: PathBuf,
        /// Print the syntax tree as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a ruleset in canonical layout.
    Fmt {
        file: PathBuf,
        /// Exit 1 instead of printing when the file is not canonical.
        #[arg(long)]
        check: bool,
    },
    /// Run the static and exhaustive analyses.
    Analyze {
        file: PathBuf,
        /// Sample this many snapshots instead of enumerating.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate one snapshot and print the obligations as JSON.
    Step {
        /// Ruleset to evaluate; the built-in scenario if omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        snapshot: PathBuf,
        /// Treat unbound booleans as false.
        #[arg(long)]
        lenient: bool,
    },
    /// Run the model server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Run the enforcement loop, reading probe batches as JSON lines on
    /// stdin and writing record-channel messages as JSON lines on stdout.
    Loop {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate test cases with expected obligations.
    GenTests {
        /// Ruleset to sample; the built-in scenario if omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 750)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic ruleset with one fresh condition per clause.
    GenSynthetic {
        #[arg(long)]
        rules: usize,
        #[arg(long)]
        clauses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay generated cases, compare with expectations and report latencies.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// The assistive-care scenario (default).
    #[arg(long, conflicts_with_all = ["synthetic_grid", "model"])]
    scenario: bool,
    /// All 110 synthetic grid rulesets.
    #[arg(long, conflicts_with = "model")]
    synthetic_grid: bool,
    /// A single synthetic ruleset with this many rules (needs --clauses).
    #[arg(long, requires = "clauses", conflicts_with_all = ["synthetic_grid", "model", "scenario"])]
    rules: Option<usize>,
    #[arg(long, requires = "rules")]
    clauses: Option<usize>,
    /// Any ruleset; full-loop runs need --config for its task mapping.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Cases per ruleset; 750 for the scenario and 50 otherwise by default.
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "in-process")]
    transport: Transport,
    /// Use a running model server instead of spawning one.
    #[arg(long)]
    server: Option<String>,
    /// Loop configuration supplying the capability to task mapping.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse { file, json } => cmd_parse(&file, json),
        Command::Fmt { file, check } => cmd_fmt(&file, check),
        Command::Analyze {
            file,
            samples,
            seed,
            json,
        } => cmd_analyze(&file, samples, seed, json),
        Command::Step {
            model,
            snapshot,
            lenient,
        } => cmd_step(model.as_deref(), &snapshot, lenient),
        Command::Serve { addr } => runtime().block_on(cmd_serve(addr)),
        Command::Loop { config } => runtime().block_on(cmd_loop(&config)),
        Command::GenTests {
            model,
            cases,
            seed,
            out,
        } => cmd_gen_tests(model.as_deref(), cases, seed, out.as_deref()),
        Command::GenSynthetic {
            rules,
            clauses,
            seed,
            out,
        } => cmd_gen_synthetic(rules, clauses, seed, out.as_deref()),
        Command::Bench(args) => runtime().block_on(cmd_bench(args)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

/// Exit code and message.
struct Failure(u8, String);

type CmdResult = Result<u8, Failure>;

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure(USAGE, message.to_string())
}

fn failed(message: impl std::fmt::Display) -> Failure {
    Failure(1, message.to_string())
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime")
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| failed(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<(String, Ruleset), Failure> {
    let text = read(path)?;
    let rs = parse_ruleset(&text).map_err(|e| failed(e.render(&path.display().to_string())))?;
    Ok((text, rs))
}

fn cmd_parse(file: &Path, json: bool) -> CmdResult {
    let (_, rs) = load_model(file)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rs).expect("rulesets serialize")
        );
    } else {
        let clauses: usize = rs.rules.iter().map(|r| r.clause_count()).sum();
        println!(
            "{}: {} rules, {} clauses, {} monitored, {} capabilities, {} invariants",
            file.display(),
            rs.rules.len(),
            clauses,
            rs.vocabulary.monitored.len(),
            rs.vocabulary.capabilities.len(),
            rs.invariants.len()
        );
    }
    Ok(0)
}

fn cmd_fmt(file: &Path, check: bool) -> CmdResult {
    let (text, rs) = load_model(file)?;
    let formatted = format_ruleset(&rs);
    if check {
        if formatted == text {
            return Ok(0);
        }
        eprintln!("{} is not canonically formatted", file.display());
        return Ok(1);
    }
    print!("{formatted}");
    Ok(0)
}

fn cmd_analyze(file: &Path, samples: Option<u64>, seed: u64, json: bool) -> CmdResult {
    let (_, rs) = load_model(file)?;
    let mode = match samples {
        Some(samples) => AnalysisMode::Sampled { samples, seed },
        None => AnalysisMode::Exhaustive,
    };
    let report = analyze(&rs, mode).map_err(|e| failed(format!("{}: {e}", e.code())))?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("reports serialize")
        );
    } else {
        for d in &report.diagnostics {
            println!("{d}");
        }
        println!(
            "{}: {} errors, {} warnings, {} infos",
            file.display(),
            report.errors,
            report.warnings,
            report.infos
        );
    }
    Ok(u8::from(report.errors > 0))
}

fn cmd_step(model: Option<&Path>, snapshot: &Path, lenient: bool) -> CmdResult {
    let rs = match model {
        Some(path) => load_model(path)?.1,
        None => parse_ruleset(SCENARIO).expect("scenario fixture parses"),
    };
    let machine = compile(&rs).map_err(|e| failed(e.to_string()))?;
    let snap: ConditionSnapshot = serde_json::from_str(&read(snapshot)?)
        .map_err(|e| usage(format!("{}: not a snapshot: {e}", snapshot.display())))?;
    let mode = if lenient {
        SnapshotMode::Lenient
    } else {
        SnapshotMode::Strict
    };
    match machine.step_with(&snap, mode) {
        Ok(set) => {
            println!(
                "{}",
                serde_json::to_string(&set).expect("obligation sets serialize")
            );
            Ok(0)
        }
        Err(e) => {
            println!(
                "{}",
                serde_json::to_string(&e).expect("step errors serialize")
            );
            eprintln!("{}: {e}", e.code());
            Ok(1)
        }
    }
}

async fn cmd_serve(addr: SocketAddr) -> CmdResult {
    eprintln!("model server listening on http://{addr}");
    serve(addr, ServerState::new().with_log(RequestLog::stderr()))
        .await
        .map_err(|e| failed(format!("server failed: {e}")))?;
    Ok(0)
}

async fn cmd_loop(config_path: &Path) -> CmdResult {
    let config = LoopConfig::load(config_path).map_err(|e| usage(format!("{}: {e}", e.code())))?;
    let model_path = config
        .model_path
        .clone()
        .ok_or_else(|| usage("the configuration has no model_path"))?;
    let model = read(&model_path)?;
    let clock: Arc<dyn Clock> = match config.clock {
        ClockMode::Wall => Arc::new(WallClock::new()),
        ClockMode::Virtual => Arc::new(VirtualClock::new(0)),
    };
    let bus = Arc::new(InProcessBus::new());
    let records_channel = config.channels.records.clone();
    let handle = sleec_enforcement::start(config, &model, bus.clone(), clock)
        .await
        .map_err(|e| failed(format!("{}: {e}", e.code())))?;
    eprintln!(
        "enforcement loop running on session {}",
        handle.session_id()
    );
    let mut records = bus.subscribe(&records_channel);
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    let mut pending = 0usize;
    let mut input_open = true;
    loop {
        tokio::select! {
            _ = tokio::signal::ctrl_c() => break,
            line = lines.next_line(), if input_open => match line {
                Ok(Some(line)) if line.trim().is_empty() => {}
                Ok(Some(line)) => match serde_json::from_str::<ProbeBatch>(&line) {
                    Ok(batch) => {
                        pending += 1;
                        handle.inject(batch.case, batch.samples);
                    }
                    Err(e) => eprintln!("skipping malformed probe batch: {e}"),
                },
                _ => input_open = false,
            },
            Some(msg) = records.recv() => {
                if !matches!(msg, BusMessage::Notice { .. }) {
                    pending = pending.saturating_sub(1);
                }
                println!("{}", serde_json::to_string(&msg).expect("messages serialize"));
            }
        }
        if !input_open && pending == 0 {
            break;
        }
    }
    handle.shutdown().await.map_err(|e| failed(e.to_string()))?;
    Ok(0)
}

fn cmd_gen_tests(model: Option<&Path>, cases: usize, seed: u64, out: Option<&Path>) -> CmdResult {
    if cases == 0 {
        return Err(usage("--cases must be at least 1"));
    }
    let rs = match model {
        Some(path) => load_model(path)?.1,
        None => parse_ruleset(SCENARIO).expect("scenario fixture parses"),
    };
    let cases = generate_test_cases(&rs, cases, seed);
    let text = serde_json::to_string_pretty(&cases).expect("cases serialize") + "\n";
    write_or_print(out, &text)?;
    Ok(0)
}

fn cmd_gen_synthetic(rules: usize, clauses: usize, seed: u64, out: Option<&Path>) -> CmdResult {
    let spec = SyntheticSpec::new(rules, clauses, seed).map_err(usage)?;
    write_or_print(out, &format_ruleset(&generate_synthetic_ruleset(spec)))?;
    Ok(0)
}

async fn cmd_bench(args: BenchArgs) -> CmdResult {
    let config = match &args.config {
        Some(path) => {
            Some(LoopConfig::load(path).map_err(|e| usage(format!("{}: {e}", e.code())))?)
        }
        None => None,
    };
    let per_model = args.cases.unwrap_or(50);
    if args.cases == Some(0) {
        return Err(usage("--cases must be at least 1"));
    }
    let suites: Vec<Suite> = if args.synthetic_grid {
        SyntheticSpec::grid(args.seed)
            .into_iter()
            .map(|spec| synthetic_suite(spec, per_model))
            .collect()
    } else if let (Some(r), Some(c)) = (args.rules, args.clauses) {
        let spec = SyntheticSpec::new(r, c, args.seed).map_err(usage)?;
        vec![synthetic_suite(spec, per_model)]
    } else if let Some(path) = &args.model {
        let model = read(path)?;
        let config = match (&config, args.transport) {
            (Some(c), _) => c.clone(),
            (None, Transport::FullLoop) => {
                return Err(usage("--transport full-loop with --model needs --config"))
            }
            (None, _) => LoopConfig::new(""),
        };
        let name = path
            .file_stem()
            .map_or("model".into(), |s| s.to_string_lossy().into_owned());
        vec![model_suite(&name, &model, config, per_model, args.seed)
            .map_err(|e| failed(e.to_string()))?]
    } else {
        let mut suite = scenario_suite(args.cases.unwrap_or(750), args.seed);
        if let Some(c) = config {
            suite.config = c;
        } else {
            suite.config = scenario_config("");
        }
        vec![suite]
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| failed(format!("cannot create {}: {e}", args.out.display())))?;
    let csv_path = args.out.join("latency.csv");
    let (report, results) =
        match run_bench(&suites, args.transport, args.server.as_deref(), args.seed).await {
            Ok(done) => done,
            Err(RunError { kind, partial }) => {
                let _ = write_latency_csv(&csv_path, [("partial", partial.records.as_slice())]);
                return Err(failed(format!(
                    "run aborted: {kind}; partial results in {}",
                    csv_path.display()
                )));
            }
        };
    report
        .write_json(&args.out.join("report.json"))
        .map_err(|e| failed(format!("cannot write report: {e}")))?;
    write_latency_csv(
        &csv_path,
        suites
            .iter()
            .zip(&results)
            .map(|(s, r)| (s.name.as_str(), r.records.as_slice())),
    )
    .map_err(|e| failed(format!("cannot write {}: {e}", csv_path.display())))?;
    print_summary(&report);
    println!("reports written to {}", args.out.display());
    Ok(u8::from(report.matches() != report.cases()))
}

fn print_summary(report: &BenchReport) {
    for s in &report.suites {
        println!(
            "{}: {}/{} matches over {}",
            s.name, s.matches, s.cases, report.transport
        );
        for m in s.mismatches.iter().take(5) {
            println!(
                "  mismatch {}: expected {:?}, got {:?}",
                m.id, m.expected, m.actual
            );
        }
    }
    if report.suites.len() == 1 {
        let s = &report.suites[0];
        println!(
            "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "stage (ms)", "mean", "min", "p75", "p99", "max", "std"
        );
        for stage in STAGES {
            if let Some(st) = s.stages.get(stage) {
                println!(
                    "{stage:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                    st.mean, st.min, st.p75, st.p99, st.max, st.std
                );
            }
        }
    } else {
        println!("total: {}/{} matches", report.matches(), report.cases());
    }
    if let Some(Ok(fits)) = &report.fits {
        for f in &fits.fits {
            println!("fit {}: R² = {:.4}", f.model, f.r_squared);
        }
    }
}
