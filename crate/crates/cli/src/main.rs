//! `oovrec` — recover context-list words from ASR decoder output.
//!
//! Subcommands cover the whole pipeline: `build-confusion` constructs
//! substitution-cost matrices, `simulate` produces synthetic corpora,
//! `recover` runs the two-pass matcher and merges transcripts, and
//! `evaluate` scores reports against ground truth. Every command writes a
//! `.manifest.json` with digests of its inputs and outputs.

mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use oovrec_core::align::{load_cost_matrix, make_hard_matrix_with, CostMatrix};
use oovrec_core::confusion::{
    build_acoustic_matrix, build_append_matrix, build_phonetic_matrix, build_weighted_matrix,
    harvest_phone_stats, load_phone_pairs, SimilarityConfig,
};
use oovrec_core::evaluate::{
    eval_sentence_level, eval_verification, eval_word_level, load_truth, to_markdown, write_truth,
};
use oovrec_core::phoneset::{load_lexicon, load_phone_symbols, load_phoneset, Lexicon, PhoneSet};
use oovrec_core::recovery::{
    load_context, read_hypotheses, read_reports, recover_utterance, write_context,
    write_hypotheses, write_reports, Hypothesis, RecoveryConfig, RecoveryReport,
};
use oovrec_core::simulate::{generate_corpus, CorpusMode, CorruptionModel, DEFAULT_TEMPERATURE};

use manifest::ManifestBuilder;

/// Flag combinations clap cannot express; reported with the usage exit
/// code (2) rather than the data-error code (1).
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not a nonnegative number"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

#[derive(Parser)]
#[command(name = "oovrec", version, about = "Context-word recovery for ASR transcripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a substitution-cost matrix and write it as TSV.
    BuildConfusion(BuildConfusionArgs),
    /// Run two-pass recovery over decoder output and merge transcripts.
    Recover(RecoverArgs),
    /// Score a recovery report against ground-truth labels.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus for end-to-end testing.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Hard,
    Phonetic,
    Acoustic,
    Append,
    Weighted,
}

#[derive(Args, Serialize)]
#[command(after_help = "\
FORMATS:
  phones.tsv       one phone symbol per line, `#` comments ignored
  features.tsv     header `phone<TAB>f1...fD`, one row per phone, values in [0,1]
  phonepairs.tsv   `utt_id<TAB>ref phones<TAB>hyp phones` (space-separated symbols)
  costmatrix.tsv   header `#I=1\\t#D=1\\t#label=hard`, then `phone_a<TAB>phone_b<TAB>cost`

EXAMPLE:
  oovrec build-confusion --method phonetic \\
      --phones data/phones.tsv --features data/features.tsv --out phonetic.tsv")]
struct BuildConfusionArgs {
    /// Matrix construction method.
    #[arg(long, value_enum)]
    method: Method,
    /// Phone inventory (phones.tsv).
    #[arg(long)]
    phones: PathBuf,
    /// Articulatory feature table (features.tsv); required for phonetic
    /// and for rebuilding ensembles.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Reference/hypothesis phone pairs (phonepairs.tsv); required for
    /// acoustic and for rebuilding ensembles.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Pre-built acoustic matrix, an alternative ensemble input.
    #[arg(long)]
    acoustic_matrix: Option<PathBuf>,
    /// Pre-built phonetic matrix, an alternative ensemble input.
    #[arg(long)]
    phonetic_matrix: Option<PathBuf>,
    /// Qualification threshold: a phone needs strictly more substitutions.
    #[arg(long, default_value_t = 100)]
    min_subs: u64,
    /// Exponent applied to the acoustic error ratio.
    #[arg(long, default_value_t = 4)]
    exponent: u32,
    /// Price acoustic pairs by their own substitution counts.
    #[arg(long, default_value_t = false)]
    per_pair: bool,
    /// Acoustic share in the weighted ensemble.
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    w: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_nonnegative)]
    insert_cost: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_nonnegative)]
    delete_cost: f64,
    /// Output matrix path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[command(after_help = "\
FORMATS:
  hypotheses (JSONL, one utterance per line):
    {\"utt_id\":\"u1\",\"words\":[{\"w\":\"!SIL\",\"start_ms\":800,\"end_ms\":1300,\"phones\":[\"b\",\"r\",\"n\",\"o\"]}]}
    `phones` is mandatory for \"!SIL\" segments, optional otherwise.
  context.tsv      `surface<TAB>optional phones`; without phones the surface
                   is phonemized through the lexicon
  lexicon.tsv      `word<TAB>space-separated phones`, one pronunciation per line
  report.jsonl     one record per utterance: recoveries (surface, pass, cost,
                   start_ms, end_ms), merged transcript words, diagnostics

EXAMPLE:
  oovrec recover --phones data/phones.tsv --lexicon data/lexicon.tsv \\
      --normal data/demo/normal.jsonl --oov data/demo/oov.jsonl \\
      --context data/demo/context.tsv --matrix phonetic.tsv --out report.jsonl")]
struct RecoverArgs {
    /// Phone inventory (phones.tsv).
    #[arg(long)]
    phones: PathBuf,
    /// Pronunciation lexicon (lexicon.tsv).
    #[arg(long)]
    lexicon: PathBuf,
    /// Primary-decoder hypotheses (JSONL).
    #[arg(long)]
    normal: PathBuf,
    /// OOV-decoder hypotheses with !SIL segments (JSONL).
    #[arg(long)]
    oov: PathBuf,
    /// Context word list (context.tsv).
    #[arg(long)]
    context: PathBuf,
    /// Substitution-cost matrix (costmatrix.tsv).
    #[arg(long)]
    matrix: PathBuf,
    /// Reject fuzzy matches costing more than this.
    #[arg(long, default_value_t = 10.0, value_parser = parse_nonnegative)]
    cost_threshold: f64,
    /// Longest window, in words, considered by pass 2.
    #[arg(long, default_value_t = 5)]
    max_span: usize,
    /// Compare cost / variant length against the threshold.
    #[arg(long, default_value_t = false)]
    length_normalize: bool,
    /// Cap on pronunciation variants per context entry.
    #[arg(long, default_value_t = 16)]
    max_variants: usize,
    /// Worker threads; output is identical regardless of the value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output report path (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EvalModeArg {
    Word,
    Verify,
    Sentence,
}

#[derive(Args, Serialize)]
#[command(after_help = "\
FORMATS:
  truth.jsonl (one utterance per line):
    {\"utt_id\":\"u1\",\"labels\":[{\"surface\":\"brno\",\"start_ms\":800,\"end_ms\":1300}]}
  Output: a Markdown summary on stdout (rates at one decimal, Pass 2 column
  cumulative) and a JSON summary with cumulative and incremental rates plus
  a per-surface breakdown.

EXAMPLE:
  oovrec evaluate --mode sentence --window-ms 500 \\
      --report report.jsonl --truth truth.jsonl --json-out eval.json")]
struct EvaluateArgs {
    /// Evaluation regime.
    #[arg(long, value_enum)]
    mode: EvalModeArg,
    /// Recovery report (report.jsonl).
    #[arg(long)]
    report: PathBuf,
    /// Ground-truth labels (truth.jsonl).
    #[arg(long)]
    truth: PathBuf,
    /// Timing slack for sentence-level matching, in milliseconds.
    #[arg(long, default_value_t = 500)]
    window_ms: u64,
    /// Machine-readable summary path.
    #[arg(long, default_value = "eval.json")]
    json_out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SimModeArg {
    Word,
    Sentence,
}

#[derive(Args, Serialize)]
#[command(after_help = "\
Writes normal.jsonl, oov.jsonl, context.tsv, truth.jsonl, and manifest.json
into --out-dir, in exactly the formats `recover` and `evaluate` consume.
A fixed seed reproduces the corpus byte for byte.

EXAMPLE:
  oovrec simulate --mode sentence --n 500 --seed 42 \\
      --p-sub 0.25 --p-del 0.05 --p-ins 0.05 \\
      --phones data/phones.tsv --lexicon data/lexicon.tsv \\
      --context data/context.tsv --bias-matrix phonetic.tsv --out-dir corpus/")]
struct SimulateArgs {
    /// Corpus shape: one word per utterance, or a full sentence.
    #[arg(long, value_enum)]
    mode: SimModeArg,
    /// Phone inventory (phones.tsv).
    #[arg(long)]
    phones: PathBuf,
    /// Pronunciation lexicon; also the filler-word source.
    #[arg(long)]
    lexicon: PathBuf,
    /// Context word list to embed.
    #[arg(long)]
    context: PathBuf,
    /// Number of utterances.
    #[arg(long)]
    n: usize,
    /// Generator seed; fixes the corpus bytes.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_probability)]
    p_sub: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    p_del: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    p_ins: f64,
    /// Cost matrix steering substitution sampling toward cheap confusions.
    #[arg(long)]
    bias_matrix: Option<PathBuf>,
    /// Softmax temperature for biased substitution sampling.
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE, value_parser = parse_positive)]
    temperature: f64,
    /// Cap on pronunciation variants per context entry.
    #[arg(long, default_value_t = 16)]
    max_variants: usize,
    /// Directory for the corpus files.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildConfusion(args) => run_build_confusion(args),
        Command::Recover(args) => run_recover(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<UsageError>() {
                std::process::ExitCode::from(2)
            } else {
                std::process::ExitCode::from(1)
            }
        }
    }
}

/// Load the phone set, taking the feature table only when the command
/// actually consults it; everything else runs on the bare inventory.
fn load_set(phones: &Path, features: Option<&Path>) -> Result<PhoneSet> {
    Ok(match features {
        Some(f) => load_phoneset(phones, f)?,
        None => PhoneSet::inventory_only(load_phone_symbols(phones)?)?,
    })
}

fn load_lexicon_verbose(path: &Path, phoneset: &PhoneSet) -> Result<Lexicon> {
    let lexicon = load_lexicon(path, phoneset)?;
    for warning in lexicon.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(lexicon)
}

fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn run_build_confusion(args: BuildConfusionArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("build-confusion", &args);
    manifest.input(&args.phones);

    let cfg = SimilarityConfig {
        min_substitutions: args.min_subs,
        exponent: args.exponent,
        ensemble_weight: args.w,
        per_pair: args.per_pair,
    };
    let (insert, delete) = (args.insert_cost, args.delete_cost);

    let build_acoustic = |set: &PhoneSet, pairs_path: &Path| -> Result<CostMatrix> {
        let records = load_phone_pairs(pairs_path, set)?;
            let pairs: Vec<_> = records.into_iter().map(|(_, r, h)| (r, h)).collect();
        let stats = harvest_phone_stats(&pairs, set)?;
        Ok(build_acoustic_matrix(&stats, &cfg, set, insert, delete)?)
    };

    let (set, matrix) = match args.method {
        Method::Hard => {
            let set = load_set(&args.phones, None)?;
            let matrix = make_hard_matrix_with(&set, insert, delete);
            (set, matrix)
        }
        Method::Phonetic => {
            let Some(features) = &args.features else {
                return usage_error("--method phonetic requires --features");
            };
            manifest.input(features);
            let set = load_set(&args.phones, Some(features))?;
            let matrix = build_phonetic_matrix(&set, insert, delete)?;
            (set, matrix)
        }
        Method::Acoustic => {
            let Some(pairs) = &args.pairs else {
                return usage_error("--method acoustic requires --pairs");
            };
            manifest.input(pairs);
            let set = load_set(&args.phones, args.features.as_deref())?;
            let matrix = build_acoustic(&set, pairs)?;
            (set, matrix)
        }
        Method::Append | Method::Weighted => {
            // Either rebuild both parents from raw inputs or load them
            // from previously written matrices.
            let (set, acoustic, phonetic) = match (
                &args.pairs,
                &args.features,
                &args.acoustic_matrix,
                &args.phonetic_matrix,
            ) {
                (Some(pairs), Some(features), _, _) => {
                    manifest.input(pairs);
                    manifest.input(features);
                    let set = load_set(&args.phones, Some(features))?;
                    let acoustic = build_acoustic(&set, pairs)?;
                    let phonetic = build_phonetic_matrix(&set, insert, delete)?;
                    (set, acoustic, phonetic)
                }
                (_, _, Some(am), Some(pm)) => {
                    manifest.input(am);
                    manifest.input(pm);
                    let set = load_set(&args.phones, args.features.as_deref())?;
                    let acoustic = load_cost_matrix(am, &set)?;
                    let phonetic = load_cost_matrix(pm, &set)?;
                    (set, acoustic, phonetic)
                }
                _ => {
                    return usage_error(
                        "ensembles need --pairs and --features, or --acoustic-matrix and --phonetic-matrix",
                    )
                }
            };
            let matrix = match args.method {
                Method::Append => build_append_matrix(&acoustic, &phonetic)?,
                _ => build_weighted_matrix(&acoustic, &phonetic, args.w)?,
            };
            (set, matrix)
        }
    };

    matrix.write_tsv(&args.out, &set)?;
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))?;

    let n = set.len();
    println!("label: {}", matrix.label().as_str());
    println!("phones: {n}, ordered pairs: {}", n * n);
    println!("non-default entries: {}", matrix.non_default_count());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_recover(args: RecoverArgs) -> Result<()> {
    if args.jobs == 0 {
        return usage_error("--jobs must be at least 1");
    }
    let mut manifest = ManifestBuilder::new("recover", &args);
    for input in [
        &args.phones,
        &args.lexicon,
        &args.context,
        &args.matrix,
        &args.normal,
        &args.oov,
    ] {
        manifest.input(input);
    }

    let set = load_set(&args.phones, None)?;
    let lexicon = load_lexicon_verbose(&args.lexicon, &set)?;
    let context = load_context(&args.context, &lexicon, &set, args.max_variants)?;
    let matrix = load_cost_matrix(&args.matrix, &set)?;
    let cfg = RecoveryConfig {
        cost_threshold: args.cost_threshold,
        max_span_words: args.max_span,
        length_normalize: args.length_normalize,
        ..RecoveryConfig::default()
    };
    cfg.validate()?;

    let normal = read_hypotheses(&args.normal, &set)?;
    let oov = read_hypotheses(&args.oov, &set)?;

    let mut oov_by_id = std::collections::HashMap::with_capacity(oov.len());
    for hyp in &oov {
        if oov_by_id.insert(hyp.utt_id.as_str(), hyp).is_some() {
            bail!("duplicate utterance {:?} in {}", hyp.utt_id, args.oov.display());
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(normal.len());
    let mut pairs: Vec<(&Hypothesis, &Hypothesis)> = Vec::with_capacity(normal.len());
    let mut skipped = 0usize;
    for hyp in &normal {
        if !seen.insert(hyp.utt_id.as_str()) {
            bail!("duplicate utterance {:?} in {}", hyp.utt_id, args.normal.display());
        }
        match oov_by_id.remove(hyp.utt_id.as_str()) {
            Some(other) => pairs.push((hyp, other)),
            None => {
                eprintln!("warning: {:?} has no OOV-side decode, skipping", hyp.utt_id);
                skipped += 1;
            }
        }
    }
    for hyp in oov_by_id.into_values() {
        eprintln!("warning: {:?} has no primary decode, skipping", hyp.utt_id);
        skipped += 1;
    }

    // Utterances are independent; the pool size never changes the output
    // because results are collected back in input order.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("cannot build worker pool")?;
    let results: Vec<oovrec_core::Result<RecoveryReport>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(n, o)| recover_utterance(n, o, &context, &matrix, &cfg, &lexicon))
            .collect()
    });
    let mut reports = Vec::with_capacity(results.len());
    for result in results {
        reports.push(result?);
    }

    let mut out = Vec::new();
    write_reports(&mut out, &reports)?;
    std::fs::write(&args.out, out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    manifest.output(&args.out);
    manifest.skipped(skipped);
    manifest.write(&manifest_path_for(&args.out))?;

    let total: usize = reports.iter().map(|r| r.recovered.len()).sum();
    let pass1: usize = reports
        .iter()
        .flat_map(|r| &r.recovered)
        .filter(|r| r.pass == 1)
        .count();
    println!(
        "{} utterances, {} recoveries ({} in pass 1), {} skipped",
        reports.len(),
        total,
        pass1,
        skipped
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("evaluate", &args);
    manifest.input(&args.report);
    manifest.input(&args.truth);

    let reports = read_reports(&args.report)?;
    let truth = load_truth(&args.truth)?;
    let result = match args.mode {
        EvalModeArg::Word => eval_word_level(&reports, &truth)?,
        EvalModeArg::Verify => eval_verification(&reports, &truth)?,
        EvalModeArg::Sentence => eval_sentence_level(&reports, &truth, args.window_ms)?,
    };

    print!("{}", to_markdown(&result));
    let json = serde_json::to_string_pretty(&result).expect("result serialize");
    std::fs::write(&args.json_out, json + "\n")
        .with_context(|| format!("cannot write {}", args.json_out.display()))?;
    manifest.output(&args.json_out);
    manifest.write(&manifest_path_for(&args.json_out))?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("simulate", &args);
    manifest.input(&args.phones);
    manifest.input(&args.lexicon);
    manifest.input(&args.context);
    manifest.input_opt(&args.bias_matrix);

    let set = load_set(&args.phones, None)?;
    let lexicon = load_lexicon_verbose(&args.lexicon, &set)?;
    let context = load_context(&args.context, &lexicon, &set, args.max_variants)?;

    let mut model = CorruptionModel::new(args.p_sub, args.p_del, args.p_ins, args.seed);
    model.temperature = args.temperature;
    if let Some(bias_path) = &args.bias_matrix {
        model = model.with_bias(load_cost_matrix(bias_path, &set)?);
    }
    let mode = match args.mode {
        SimModeArg::Word => CorpusMode::Word,
        SimModeArg::Sentence => CorpusMode::Sentence,
    };
    let corpus = generate_corpus(&context, args.n, &model, &lexicon, &set, mode)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf> {
        let path = args.out_dir.join(name);
        std::fs::write(&path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    };

    let mut buf = Vec::new();
    write_hypotheses(&mut buf, &corpus.normal_hypotheses(), &set)?;
    manifest.output(&write("normal.jsonl", &buf)?);

    buf.clear();
    write_hypotheses(&mut buf, &corpus.oov_hypotheses(), &set)?;
    manifest.output(&write("oov.jsonl", &buf)?);

    buf.clear();
    write_context(&mut buf, &corpus.context, &set)?;
    manifest.output(&write("context.tsv", &buf)?);

    buf.clear();
    write_truth(
        &mut buf,
        corpus
            .utterances
            .iter()
            .map(|u| (u.utt_id.as_str(), u.labels.as_slice())),
    )?;
    manifest.output(&write("truth.jsonl", &buf)?);

    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!(
        "{} utterances ({} mode), context entries: {}",
        corpus.utterances.len(),
        mode.as_str(),
        corpus.context.len()
    );
    println!("wrote corpus to {}", args.out_dir.display());
    Ok(())
}
