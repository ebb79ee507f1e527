use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use swati::assignment::{assignment_records, Method};
use swati::config::EngineConfig;
use swati::corpus::{corpus_stats, generate_synthetic, load_corpus, Corpus, CorpusFormat, Strictness};
use swati::extraction::{extract_batch, extraction_stats, ExtractionRecord};
use swati::ledger::{verify_file, Ledger, Verdict};
use swati::manifest::RunManifest;
use swati::metrics::{
    bench_scaling, quality, utility_cdf, write_cdf_csv, write_quality_csv, write_timing_csv, BenchConfig,
};
use swati::pipeline::{build_market, match_epoch, MatchParams};
use swati::willingness::WillingnessState;

const CDF_BINS: usize = 20;

#[derive(Parser)]
#[command(name = "swati", version, about = "Skill- and willingness-aware volunteer task assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Engine config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reject unknown fields in corpus records.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        volunteers: Option<usize>,
        #[arg(long)]
        tasks: Option<usize>,
    },
    /// Extract skills and cues from every document.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Assign tasks and commit the result to a ledger.
    Match {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "swati")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        epochs: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time and compare methods on generated markets.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending market sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400])]
        sizes: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Check a ledger file for tampering.
    Verify {
        ledger: PathBuf,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }
}

fn at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::new("io", format!("{}: {e}", path.display()))
}

macro_rules! from_error {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new($kind, e)
            }
        })*
    };
}

from_error! {
    std::io::Error => "io",
    swati::config::ConfigError => "config",
    swati::corpus::CorpusError => "corpus",
    swati::extraction::ExtractionError => "extraction",
    swati::pipeline::PipelineError => "pipeline",
    swati::metrics::MetricsError => "metrics",
    swati::ledger::LedgerError => "ledger",
    serde_json::Error => "serialization",
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    match path {
        Some(p) => Ok(EngineConfig::load(p)?),
        None => Ok(EngineConfig::default()),
    }
}

fn strictness(strict: bool) -> Strictness {
    if strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    }
}

fn read_corpus(path: &Path, strict: bool) -> Result<Corpus, CliError> {
    load_corpus(path, CorpusFormat::Jsonl, strictness(strict))
        .map_err(|e| CliError::new("corpus", format!("{}: {e}", path.display())))
}

fn manifest(command: &str, common: &Common, cfg: &EngineConfig) -> Result<RunManifest, CliError> {
    let mut m = RunManifest::new(command, cfg);
    m.arg("strict", common.strict);
    if let Some(p) = &common.config {
        m.input(p).map_err(at(p))?;
    }
    for p in [&cfg.ontology, &cfg.cue_rules, &cfg.history].into_iter().flatten() {
        m.input(p).map_err(at(p))?;
    }
    Ok(m)
}

fn finish(mut m: RunManifest, out: &Path) -> Result<(), CliError> {
    m.record_outputs(out)?.write(out)?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(at(path))?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(at(path))?;
    Ok(())
}

fn cmd_gen(common: Common, seed: Option<u64>, volunteers: Option<usize>, tasks: Option<usize>) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let seed = seed
        .or(cfg.seeds.synthetic)
        .ok_or_else(|| CliError::new("seed", "gen needs --seed or seeds.synthetic in the config"))?;
    let ontology = cfg.load_ontology()?;
    let mut syn = cfg.synthetic.clone();
    syn.seed = seed;
    if let Some(n) = volunteers {
        syn.n_volunteers = n;
    }
    if let Some(n) = tasks {
        syn.n_tasks = n;
    }
    let corpus = generate_synthetic(&syn, &ontology)?;
    std::fs::create_dir_all(&common.out)?;
    corpus.save(common.out.join("corpus.jsonl"))?;
    write_json(&common.out.join("corpus_stats.json"), &corpus_stats(&corpus))?;

    let mut m = manifest("gen", &common, &cfg)?;
    m.seed("synthetic", seed)
        .arg("volunteers", syn.n_volunteers)
        .arg("tasks", syn.n_tasks);
    finish(m, &common.out)
}

fn cmd_extract(common: Common, corpus_path: PathBuf) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let corpus = read_corpus(&corpus_path, common.strict)?;
    let ontology = cfg.load_ontology()?;
    let extractor = cfg.extractor(&ontology)?;
    let docs: Vec<_> = corpus.documents().cloned().collect();
    let results = extract_batch(extractor.as_ref(), &docs, cfg.parallelism())?;

    std::fs::create_dir_all(&common.out)?;
    let volunteer_results = &results[..corpus.volunteers.len()];
    #[derive(Serialize)]
    struct Report {
        all: swati::extraction::ExtractionStats,
        volunteers: swati::extraction::ExtractionStats,
        tasks: swati::extraction::ExtractionStats,
    }
    let report = Report {
        all: extraction_stats(&results, &ontology),
        volunteers: extraction_stats(volunteer_results, &ontology),
        tasks: extraction_stats(&results[corpus.volunteers.len()..], &ontology),
    };
    write_jsonl(
        &common.out.join("extraction.jsonl"),
        results.into_iter().map(|r| ExtractionRecord::new(r, &ontology)),
    )?;
    write_json(&common.out.join("extraction_stats.json"), &report)?;

    let mut m = manifest("extract", &common, &cfg)?;
    m.input(&corpus_path).map_err(at(&corpus_path))?;
    finish(m, &common.out)
}

fn cmd_match(
    common: Common,
    corpus_path: PathBuf,
    method: Method,
    epochs: u64,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let seed = seed.or(cfg.seeds.random);
    if method == Method::Random && seed.is_none() {
        return Err(CliError::new("seed", "method random needs --seed or seeds.random in the config"));
    }
    if epochs == 0 {
        return Err(CliError::new("args", "--epochs must be at least 1"));
    }
    let corpus = read_corpus(&corpus_path, common.strict)?;
    let ontology = cfg.load_ontology()?;
    let histories = cfg.load_histories()?;
    let extractor = cfg.extractor(&ontology)?;
    let market = build_market(&corpus, extractor.as_ref(), &ontology, &cfg.vectorizer, cfg.parallelism())?;

    let mut ledger = Ledger::new();
    let mut task_ids = market.task_ids();
    task_ids.sort();
    for t in &task_ids {
        ledger.post_task(t)?;
    }

    let params = MatchParams {
        method,
        histories: &histories,
        capacities: &cfg.capacity,
        willingness: &cfg.willingness,
        utility: &cfg.utility,
        seed,
    };
    let mut state = WillingnessState::new();
    let mut records = Vec::new();
    let mut all_pairs = swati::assignment::Assignment::default();
    for epoch in 1..=epochs {
        let pending: Vec<_> = market
            .tasks
            .iter()
            .filter(|t| ledger.state(&t.id) == Some(swati::ledger::TaskState::Posted))
            .cloned()
            .collect();
        if pending.is_empty() {
            log::info!("epoch {epoch}: no pending tasks, stopping");
            break;
        }
        let params = MatchParams {
            seed: params.seed.map(|s| s.wrapping_add(epoch - 1)),
            ..params
        };
        let (matrix, assignment) = match_epoch(&market.profiles, &pending, &params, &mut state, epoch)?;
        ledger.commit_assignment(&assignment)?;
        log::info!("epoch {epoch}: {} of {} pending tasks assigned", assignment.len(), pending.len());
        records.extend(assignment_records(&assignment, &matrix));
        all_pairs.pairs.extend(assignment.pairs);
    }

    std::fs::create_dir_all(&common.out)?;
    write_jsonl(&common.out.join("assignments.jsonl"), &records)?;
    let q = quality(&all_pairs, market.tasks.len())?.labeled(method.name());
    write_quality_csv(File::create(common.out.join("quality.csv"))?, std::slice::from_ref(&q))?;
    write_cdf_csv(
        File::create(common.out.join("cdf.csv"))?,
        &[(method.name().to_string(), utility_cdf(&all_pairs, CDF_BINS))],
    )?;
    ledger.save(common.out.join("ledger.bin"))?;
    ledger.export_jsonl(BufWriter::new(File::create(common.out.join("ledger.jsonl"))?))?;

    let mut m = manifest("match", &common, &cfg)?;
    m.input(&corpus_path).map_err(at(&corpus_path))?;
    m.arg("method", method).arg("epochs", epochs);
    if let Some(s) = seed {
        m.seed("random", s);
    }
    m.arg("ledger_head", hex::encode(ledger.head()));
    finish(m, &common.out)?;
    println!("{}", serde_json::to_string(&q)?);
    Ok(())
}

fn cmd_bench(common: Common, sizes: Vec<usize>, seed: Option<u64>, reps: usize) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let seed = seed
        .or(cfg.seeds.synthetic)
        .ok_or_else(|| CliError::new("seed", "bench needs --seed or seeds.synthetic in the config"))?;
    let ontology = cfg.load_ontology()?;
    let mut bench = BenchConfig::new(sizes.clone(), Method::ALL.to_vec(), seed);
    bench.repetitions = reps;
    bench.synthetic = cfg.synthetic.clone();
    bench.vectorizer = cfg.vectorizer.clone();
    bench.willingness = cfg.willingness.clone();
    bench.utility = cfg.utility;
    bench.capacities = cfg.capacity.clone();
    let timings = bench_scaling(&bench, &ontology)?;

    // Quality and CDF on the largest market.
    let largest = *sizes.last().expect("bench_scaling rejects empty sizes");
    let mut syn = cfg.synthetic.clone();
    syn.seed = seed;
    syn.n_volunteers = largest;
    syn.n_tasks = largest;
    let corpus = generate_synthetic(&syn, &ontology)?;
    let extractor = cfg.extractor(&ontology)?;
    let market = build_market(&corpus, extractor.as_ref(), &ontology, &cfg.vectorizer, cfg.parallelism())?;
    let histories = cfg.load_histories()?;
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for method in Method::ALL {
        let params = MatchParams {
            method,
            histories: &histories,
            capacities: &cfg.capacity,
            willingness: &cfg.willingness,
            utility: &cfg.utility,
            seed: Some(seed),
        };
        let (_, a) = match_epoch(&market.profiles, &market.tasks, &params, &mut WillingnessState::new(), 1)?;
        reports.push(quality(&a, market.tasks.len())?.labeled(method.name()));
        curves.push((method.name().to_string(), utility_cdf(&a, CDF_BINS)));
    }

    std::fs::create_dir_all(&common.out)?;
    write_timing_csv(File::create(common.out.join("timing.csv"))?, &timings)?;
    write_quality_csv(File::create(common.out.join("quality.csv"))?, &reports)?;
    write_cdf_csv(File::create(common.out.join("cdf.csv"))?, &curves)?;

    let mut m = manifest("bench", &common, &cfg)?;
    m.seed("synthetic", seed)
        .arg("sizes", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","))
        .arg("reps", reps);
    finish(m, &common.out)
}

fn cmd_verify(path: PathBuf) -> Result<bool, CliError> {
    let verdict = verify_file(&path).map_err(|e| CliError::new("ledger", format!("{}: {e}", path.display())))?;
    println!("{}", serde_json::to_string(&verdict)?);
    if let Verdict::Tampered {
        first_bad_index,
        reason,
    } = &verdict
    {
        eprintln!("ledger {} fails at record {first_bad_index}: {reason}", path.display());
    }
    Ok(verdict.is_ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen {
            common,
            seed,
            volunteers,
            tasks,
        } => cmd_gen(common, seed, volunteers, tasks).map(|_| true),
        Command::Extract { common, corpus } => cmd_extract(common, corpus).map(|_| true),
        Command::Match {
            common,
            corpus,
            method,
            epochs,
            seed,
        } => cmd_match(common, corpus, method, epochs, seed).map(|_| true),
        Command::Bench {
            common,
            sizes,
            seed,
            reps,
        } => cmd_bench(common, sizes, seed, reps).map(|_| true),
        Command::Verify { ledger } => cmd_verify(ledger),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind, "message": e.message });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
