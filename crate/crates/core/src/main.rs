use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use nl2code::corpus::{self, corpus_self_check, generate_corpus, standard_problems};
use nl2code::evalkit::{self, corpus_prompts, EvalSettings, Metric, NeighborIndex};
use nl2code::gradcheck::{self, CheckShape};
use nl2code::minic::{self, RunStatus};
use nl2code::rng::SplitMix64;
use nl2code::seq2seq::{generate_from_prompt, Decoding};
use nl2code::trainer::{self, load_checkpoint, TrainConfig};

/// Natural-language comment to mini-C program, with a character-level
/// LSTM encoder-decoder.
#[derive(Debug, Parser)]
#[command(name = "nl2code", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic corpus as JSON Lines.
    GenCorpus(GenCorpusArgs),
    /// Train a model on a corpus.
    Train(TrainArgs),
    /// Generate programs for a prompt.
    Generate(GenerateArgs),
    /// Syntax-check a mini-C file.
    Check(CheckArgs),
    /// Run a mini-C file.
    Run(RunArgs),
    /// Find the most similar corpus program.
    Nn(NnArgs),
    /// Evaluate a checkpoint against its corpus.
    Eval(EvalArgs),
    /// Finite-difference gradient checks.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenCorpusArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    per_problem: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the functional tests here.
    #[arg(long)]
    tests_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 32)]
    embed: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    reverse_input: bool,
    /// Samples per update.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long)]
    max_train_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    #[arg(long)]
    max_updates: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Greedy,
    Sample,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    prompt: String,
    #[arg(long, value_enum, default_value_t = Mode::Greedy)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 600)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    #[arg(long)]
    file: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct RunArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    stdin: PathBuf,
    #[arg(long, default_value_t = minic::DEFAULT_STEP_LIMIT)]
    step_limit: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MetricArg {
    Chars,
    Structure,
    Identifiers,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Chars => Metric::Chars,
            MetricArg::Structure => Metric::Structure,
            MetricArg::Identifiers => Metric::Identifiers,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct NnArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    tests: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0.5)]
    temperature: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 600)]
    max_len: usize,
}

#[derive(Debug, Args, Serialize)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random models per suite.
    #[arg(long, default_value_t = 20)]
    count: u64,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn header(name: &str, seed: Option<u64>, config: &impl Serialize, corpus: Option<&Path>) -> Result<()> {
    let hash = match corpus {
        Some(p) => sha256_file(p)?,
        None => "-".to_string(),
    };
    let seed = seed.map_or("-".to_string(), |s| s.to_string());
    let config = serde_json::to_string(config)?;
    eprintln!("# nl2code {name} seed={seed} config={config} corpus_sha256={hash}");
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn gen_corpus(a: &GenCorpusArgs) -> Result<ExitCode> {
    header("gen-corpus", Some(a.seed), a, None)?;
    let specs = standard_problems();
    let c = generate_corpus(&specs, a.per_problem, a.seed)?;
    let report = corpus_self_check(&c, &specs);
    if !report.ok {
        bail!("self-check failed: {:?}", report.failures);
    }
    corpus::write_samples(&a.out, &c.samples)?;
    if let Some(t) = &a.tests_out {
        corpus::write_tests(t, &c.tests)?;
    }
    for p in &report.problems {
        eprintln!("{}: {} samples, {} parse, {} pass", p.problem_id, p.samples, p.parsed, p.passed);
    }
    Ok(ExitCode::SUCCESS)
}

fn train(a: &TrainArgs) -> Result<ExitCode> {
    header("train", Some(a.seed), a, Some(&a.corpus))?;
    let samples = corpus::read_samples(&a.corpus)?;
    let cfg = TrainConfig {
        hidden: a.hidden,
        embed: a.embed,
        layers: a.layers,
        lr: a.lr,
        clip_norm: a.clip,
        epochs: a.epochs,
        seed: a.seed,
        batch_accumulation: a.batch,
        max_train_len: a.max_train_len,
        checkpoint_every: a.checkpoint_every,
        input_reversal: a.reverse_input,
        max_updates: a.max_updates,
        ..TrainConfig::default()
    };
    let run = trainer::train(&samples, &cfg, Some(&a.out_dir))?;
    eprintln!(
        "trained {} epochs, {} updates, skipped {}, final mean_char_loss {}",
        run.checkpoint.epoch,
        run.checkpoint.updates,
        run.skipped,
        run.checkpoint
            .mean_char_loss
            .map_or("-".to_string(), |l| l.to_string())
    );
    Ok(ExitCode::SUCCESS)
}

fn generate(a: &GenerateArgs) -> Result<ExitCode> {
    header("generate", Some(a.seed), a, None)?;
    let ck = load_checkpoint(&a.checkpoint)?;
    let decoding = match a.mode {
        Mode::Greedy => Decoding::Greedy,
        Mode::Sample => Decoding::Temperature(a.temperature),
    };
    let mut rng = SplitMix64::new(a.seed);
    for k in 0..a.n {
        let g = generate_from_prompt(&ck.params, &a.prompt, decoding, a.max_len, &mut rng)?;
        if a.n > 1 {
            println!("/* sample {} */", k + 1);
        }
        print!("{}", g.text);
        if !g.text.ends_with('\n') {
            println!();
        }
        if !g.terminated {
            log::warn!("sample {} hit max_len before <eos>", k + 1);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(a: &CheckArgs) -> Result<ExitCode> {
    header("check", None, a, None)?;
    let text = read_text(&a.file)?;
    let r = minic::check_syntax(&text);
    if r.valid {
        println!("valid");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("invalid: {}", r.message.unwrap_or_default());
        Ok(ExitCode::from(1))
    }
}

fn run(a: &RunArgs) -> Result<ExitCode> {
    header("run", None, a, None)?;
    let text = read_text(&a.file)?;
    let input = read_text(&a.stdin)?;
    let out = minic::run_source(&text, &input, a.step_limit)?;
    print!("{}", out.stdout);
    match out.status {
        RunStatus::Ok => Ok(ExitCode::SUCCESS),
        RunStatus::StepLimit => {
            eprintln!("step limit of {} reached", a.step_limit);
            Ok(ExitCode::from(1))
        }
        RunStatus::RuntimeError => {
            let e = out.error.expect("runtime errors carry details");
            eprintln!("runtime error: {e}");
            Ok(ExitCode::from(1))
        }
    }
}

fn nn(a: &NnArgs) -> Result<ExitCode> {
    header("nn", None, a, Some(&a.corpus))?;
    let query = read_text(&a.query)?;
    let samples = corpus::read_samples(&a.corpus)?;
    let codes: Vec<&str> = samples.iter().map(|s| s.code.as_str()).collect();
    let Some(hit) = NeighborIndex::new(&codes).nearest(&query, a.metric.into())? else {
        bail!("corpus {} is empty", a.corpus.display());
    };
    println!("index {} score {}", hit.index, hit.score);
    print!("{}", samples[hit.index].code);
    Ok(ExitCode::SUCCESS)
}

fn eval(a: &EvalArgs) -> Result<ExitCode> {
    header("eval", Some(a.seed), a, Some(&a.corpus))?;
    let ck = load_checkpoint(&a.checkpoint)?;
    let samples = corpus::read_samples(&a.corpus)?;
    let tests = corpus::read_tests(&a.tests)?;
    let settings = EvalSettings {
        n_samples: a.samples,
        temperature: a.temperature,
        max_len: a.max_len,
        seed: a.seed,
    };
    let prompts = corpus_prompts(&samples);
    let report = evalkit::evaluate_model(&ck.params, &samples, &tests, &prompts, &settings)?;
    std::fs::write(&a.out, report.to_json()).with_context(|| format!("writing {}", a.out.display()))?;
    let o = &report.overall;
    eprintln!(
        "samples {} parse {:.3} pass {:.3} memorized {:.3} median char-fix {}",
        o.samples_drawn,
        o.parse_rate,
        o.functional_pass_rate,
        o.exact_memorization_rate,
        o.median_char_fix.map_or("-".to_string(), |m| format!("{m:.4}"))
    );
    Ok(ExitCode::SUCCESS)
}

fn grad_check(a: &GradcheckArgs) -> Result<ExitCode> {
    header("gradcheck", Some(a.seed), a, None)?;
    let mut worst: f64 = 0.0;
    for layers in [1, 2] {
        let shape = CheckShape {
            layers,
            ..CheckShape::default()
        };
        let reports = gradcheck::check_many(a.seed, a.count, &shape)?;
        let max = reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
        let params: usize = reports.iter().map(|r| r.params_checked).sum();
        println!("seq2seq layers={layers} models={} params={params} max_rel_err={max:e}", reports.len());
        worst = worst.max(max);
    }
    println!("max_rel_err={worst:e}");
    Ok(if worst < 1e-4 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                eprintln!("{}", Cli::command().render_usage());
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Train(a) => train(a),
        Command::Generate(a) => generate(a),
        Command::Check(a) => check(a),
        Command::Run(a) => run(a),
        Command::Nn(a) => nn(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => grad_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
