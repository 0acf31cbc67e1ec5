use std::collections::{BTreeMap, HashMap};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use detext_core::corpus::{
    ingest_source_as, normalize_corpus, split_corpus, subsample_groups, SplitRatios, DEFAULT_SPEC_REPAIRS,
};
use detext_core::eval::{emit_report, evaluate_by_range, ingest_external_scores, ReportFormat};
use detext_core::features::{build_vocabulary, tokenize, vectorize, VocabConfig};
use detext_core::rephrase::{
    generate_pairs, Backend, CheckpointStore, GenerateConfig, HttpBackend, HttpConfig, MockBackend, PromptTemplate,
    RetryPolicy,
};
use detext_core::svm::{train_smo_with_features, SvmConfig};
use detext_core::{BucketSpec, Corpus, Error, Label, ScoredRecord, SvmModel, Vocabulary};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{BackendChoice, BuildCorpusArgs, EvaluateArgs, FormatChoice, RephraseArgs, ScoreArgs, TrainArgs};
use crate::error::CliError;
use crate::provenance::{sidecar, write_file, Provenance};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const SPEC_FILE: &str = "bucket_spec.txt";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const MODEL_FILE: &str = "model.svm";
pub const VOCAB_FILE: &str = "vocab.tsv";

fn split_file(name: &str) -> String {
    format!("{name}.jsonl")
}

fn utf8(path: &Path, bytes: Vec<u8>) -> Result<String, CliError> {
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("{} is not UTF-8: {e}", path.display())).into())
}

/// Explicit spec file, else `bucket_spec.txt` next to `data`, else the default.
fn resolve_spec(explicit: Option<&Path>, data: Option<&Path>, prov: &mut Provenance) -> Result<BucketSpec, CliError> {
    let sibling = data
        .and_then(Path::parent)
        .map(|d| d.join(SPEC_FILE))
        .filter(|p| p.is_file());
    let Some(path) = explicit.map(Path::to_path_buf).or(sibling) else {
        prov.note("bucket_spec", "built-in");
        prov.note("bucket_spec_repairs", DEFAULT_SPEC_REPAIRS);
        return Ok(BucketSpec::default());
    };
    let bytes = prov.read_input(&path)?;
    let spec = BucketSpec::parse(&utf8(&path, bytes)?)?;
    if spec.is_default() {
        prov.note("bucket_spec_repairs", DEFAULT_SPEC_REPAIRS);
    }
    Ok(spec)
}

fn read_corpus(path: &Path, spec: BucketSpec, prov: &mut Provenance) -> Result<Corpus, CliError> {
    let bytes = prov.read_input(path)?;
    Corpus::read_jsonl(&bytes[..], spec).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())).into(),
        e => e.into(),
    })
}

fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CliError> {
    write_file(path, corpus.to_jsonl_string().as_bytes())
}

fn bucket_counts_json(corpus: &Corpus) -> Value {
    let m: serde_json::Map<String, Value> = corpus
        .bucket_counts()
        .into_iter()
        .map(|(b, n)| (b.to_string(), json!(n)))
        .collect();
    Value::Object(m)
}

fn write_splits(out_dir: &Path, corpus: &Corpus, ratios: SplitRatios, seed: u64, prov: &mut Provenance) -> Result<(), CliError> {
    let splits = split_corpus(corpus, ratios, seed)?;
    for (name, part) in splits.parts() {
        write_corpus(&out_dir.join(split_file(name)), part)?;
        prov.note(&format!("{name}_records"), part.len());
        log::info!("{name}: {} records", part.len());
    }
    prov.note(
        "split",
        json!({ "seed": seed, "ratios": format!("{},{},{}", ratios.train, ratios.test, ratios.val) }),
    );
    Ok(())
}

pub fn build_corpus(a: &BuildCorpusArgs, prov: &mut Provenance) -> Result<(), CliError> {
    let spec = resolve_spec(a.bucket_spec.as_deref(), None, prov)?;
    let mut chunks: HashMap<_, usize> = HashMap::new();
    for &(source, n) in &a.chunks {
        if !a.inputs.iter().any(|(s, _)| *s == source) {
            return Err(CliError::Usage(format!("--chunk names {source}, which has no --input")));
        }
        chunks.insert(source, n);
    }

    let mut seen: HashMap<_, usize> = HashMap::new();
    let mut records = Vec::new();
    for (source, path) in &a.inputs {
        let k = seen.entry(*source).or_default();
        let prefix = if *k == 0 {
            source.as_str().to_string()
        } else {
            format!("{source}.{k}")
        };
        *k += 1;
        let bytes = prov.read_input(path)?;
        let got = ingest_source_as(&bytes[..], *source, &prefix, &spec, chunks.get(source).copied())?;
        log::info!("{}: {} admissible sentences", path.display(), got.len());
        records.extend(got);
    }
    let mut provenance = BTreeMap::new();
    provenance.insert("bucket_spec".to_string(), spec.to_text());
    let mut corpus = Corpus::new(records, spec.clone(), provenance)?;
    prov.note("ingested_records", corpus.len());
    if let Some(target) = a.target_per_bucket {
        corpus = normalize_corpus(&corpus, target as usize, a.seed)?;
    }
    prov.note("corpus_records", corpus.len());
    prov.note("bucket_counts", bucket_counts_json(&corpus));
    prov.note("corpus", json!(corpus.provenance));

    write_file(&a.out_dir.join(SPEC_FILE), spec.to_text().as_bytes())?;
    write_corpus(&a.out_dir.join(CORPUS_FILE), &corpus)?;
    write_splits(&a.out_dir, &corpus, a.ratios, a.seed, prov)?;
    prov.write(&a.out_dir.join(PROVENANCE_FILE))
}

fn upstream_split(in_dir: &Path, prov: &mut Provenance) -> Result<(SplitRatios, u64, BTreeMap<String, String>), CliError> {
    let path = in_dir.join(PROVENANCE_FILE);
    let bytes = prov.read_input(&path)?;
    let v: Value = serde_json::from_slice(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let missing = || Error::Data(format!("{} has no split seed and ratios", path.display()));
    let split = &v["run"]["split"];
    let seed = split["seed"].as_u64().ok_or_else(missing)?;
    let ratios: SplitRatios = split["ratios"].as_str().ok_or_else(missing)?.parse()?;
    let corpus_prov = serde_json::from_value(v["run"]["corpus"].clone()).unwrap_or_default();
    Ok((ratios, seed, corpus_prov))
}

pub fn rephrase(a: &RephraseArgs, threads: Option<usize>, prov: &mut Provenance) -> Result<(), CliError> {
    let spec = resolve_spec(Some(&a.in_dir.join(SPEC_FILE)), None, prov)?;
    let mut corpus = read_corpus(&a.in_dir.join(CORPUS_FILE), spec.clone(), prov)?;
    let (ratios, split_seed, upstream) = upstream_split(&a.in_dir, prov)?;
    corpus.provenance = upstream;

    let template = match &a.prompt_template {
        Some(p) => {
            let bytes = prov.read_input(p)?;
            PromptTemplate::new(utf8(p, bytes)?.trim_end_matches(['\n', '\r']))?
        }
        None => PromptTemplate::default(),
    };
    let backend: Box<dyn Backend> = match a.backend {
        BackendChoice::Mock => {
            let mut m = MockBackend::new(a.seed).with_replace_fraction(a.mock_replace_fraction)?;
            if let Some(p) = &a.mock_wordlist {
                let bytes = prov.read_input(p)?;
                m = m.with_wordlist(MockBackend::parse_wordlist(&utf8(p, bytes)?))?;
            }
            Box::new(m)
        }
        BackendChoice::Http => {
            let mut c = HttpConfig::new(&a.backend_url);
            c.model = a.llm_model.clone();
            c.temperature = a.temperature;
            c.timeout = Duration::from_secs(a.timeout_secs);
            if c.api_key.is_none() {
                log::warn!("{} is not set; sending requests without credentials", detext_core::rephrase::API_KEY_ENV);
            }
            Box::new(HttpBackend::new(c)?)
        }
    };
    let workers = threads.map_or(a.workers as usize, |t| t.min(a.workers as usize));
    let config = GenerateConfig {
        workers,
        min_interval: match a.backend {
            BackendChoice::Http => Duration::from_millis(a.min_interval_ms),
            BackendChoice::Mock => Duration::ZERO,
        },
        retry: RetryPolicy {
            max_attempts: a.max_attempts,
            base_delay: Duration::from_millis(a.base_delay_ms),
        },
        template,
    };

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::persistence(&a.out_dir, e))?;
    let ck = a.checkpoint.clone().unwrap_or_else(|| a.out_dir.join("checkpoint.jsonl"));
    let mut store = CheckpointStore::open(&ck)?;
    let resumed = store.len();
    let paired = generate_pairs(&corpus, backend.as_ref(), &mut store, &config)?;
    prov.note("checkpointed_before_run", resumed);
    prov.note("corpus_records", paired.len());
    prov.note("bucket_counts", bucket_counts_json(&paired));
    prov.note("corpus", json!(paired.provenance));

    write_file(&a.out_dir.join(SPEC_FILE), spec.to_text().as_bytes())?;
    write_corpus(&a.out_dir.join(CORPUS_FILE), &paired)?;
    write_splits(&a.out_dir, &paired, ratios, split_seed, prov)?;
    prov.write(&a.out_dir.join(PROVENANCE_FILE))
}

pub fn train(a: &TrainArgs, prov: &mut Provenance) -> Result<(), CliError> {
    let spec = resolve_spec(a.bucket_spec.as_deref(), Some(&a.train), prov)?;
    let mut corpus = read_corpus(&a.train, spec, prov)?;
    if let Some(n) = a.max_train {
        corpus = subsample_groups(&corpus, n as usize, a.seed)?;
    }
    let vcfg = VocabConfig {
        min_df: a.min_df as usize,
        max_features: (a.max_features > 0).then_some(a.max_features),
        lowercase: !a.no_lowercase,
        sublinear_tf: a.sublinear_tf,
        l2_normalize: !a.no_l2_normalize,
    };
    let docs: Vec<Vec<String>> = corpus
        .records()
        .par_iter()
        .map(|r| tokenize(&r.text, vcfg.lowercase))
        .collect();
    let vocab = build_vocabulary(&docs, vcfg)?;
    let vectors: Vec<_> = docs.par_iter().map(|d| vectorize(d, &vocab)).collect();
    let labels: Vec<i8> = corpus
        .records()
        .iter()
        .map(|r| if r.label == Label::Machine { 1 } else { -1 })
        .collect();
    let scfg = SvmConfig {
        c: a.c,
        gamma: a.gamma,
        tol: a.tol,
        max_passes: a.max_passes,
        cache_bytes: a.cache_mb.saturating_mul(1 << 20),
        seed: a.seed,
    };
    log::info!("training on {} records, {} features", vectors.len(), vocab.len());
    let model = train_smo_with_features(&vectors, &labels, &scfg, vocab.len())?;
    log::info!(
        "{} support vectors, {} iterations, converged: {}",
        model.n_support(),
        model.meta.iterations,
        model.meta.converged
    );

    let mut m = Vec::new();
    model.write(&mut m).expect("writing to a Vec cannot fail");
    let mut v = Vec::new();
    vocab.write(&mut v).expect("writing to a Vec cannot fail");
    write_file(&a.model.join(MODEL_FILE), &m)?;
    write_file(&a.model.join(VOCAB_FILE), &v)?;
    prov.note("train_records", corpus.len());
    prov.note("vocabulary_size", vocab.len());
    prov.note("gamma_resolved", model.gamma);
    prov.note("support_vectors", model.n_support());
    prov.note("iterations", model.meta.iterations);
    prov.note("converged", model.meta.converged);
    prov.write(&a.model.join(PROVENANCE_FILE))
}

fn load_model(dir: &Path, prov: &mut Provenance) -> Result<(SvmModel, Vocabulary), CliError> {
    let m = prov.read_input(&dir.join(MODEL_FILE))?;
    let v = prov.read_input(&dir.join(VOCAB_FILE))?;
    Ok((SvmModel::read(&m[..])?, Vocabulary::read(&v[..])?))
}

pub fn evaluate(a: &EvaluateArgs, prov: &mut Provenance) -> Result<(), CliError> {
    let spec = resolve_spec(a.bucket_spec.as_deref(), Some(&a.data), prov)?;
    let corpus = read_corpus(&a.data, spec.clone(), prov)?;
    let (scored, threshold) = if let Some(dir) = &a.model {
        let (model, vocab) = load_model(dir, prov)?;
        let texts: Vec<&str> = corpus.records().iter().map(|r| r.text.as_str()).collect();
        let scores = model.decision_values(&vocab.transform_all(&texts));
        let scored = corpus
            .records()
            .iter()
            .zip(scores)
            .map(|(r, score)| ScoredRecord {
                record_id: r.id.clone(),
                label: r.label,
                score,
                bucket: r.bucket.expect("corpus records carry buckets"),
            })
            .collect::<Vec<_>>();
        (scored, a.threshold.unwrap_or(0.0))
    } else {
        let path: &PathBuf = a.scores.as_ref().expect("clap requires --model or --scores");
        let bytes = prov.read_input(path)?;
        let ext = ingest_external_scores(&bytes[..], &corpus, a.strict)?;
        prov.note("records_missing_scores", ext.missing.len());
        (ext.scored, a.threshold.or(ext.threshold).unwrap_or(0.0))
    };
    let report = evaluate_by_range(&scored, &spec, threshold)?;
    prov.note("threshold", threshold);
    prov.note("scored_records", scored.len());
    match report.aggregate.auc {
        Some(auc) => log::info!("aggregate AUC {auc:.4} over {} records", report.aggregate.n()),
        None => log::warn!("aggregate AUC undefined: one class is missing"),
    }
    let format = match a.format {
        FormatChoice::Csv => ReportFormat::Csv,
        FormatChoice::Json => ReportFormat::Json,
    };
    let text = emit_report(&report, format);
    match &a.out {
        Some(out) => {
            write_file(out, text.as_bytes())?;
            prov.write(&sidecar(out))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::persistence("<stdout>", e).into())
        }
    }
}

pub fn score(a: &ScoreArgs, prov: &mut Provenance) -> Result<(), CliError> {
    let (model, vocab) = load_model(&a.model, prov)?;
    let mut input = String::new();
    std::io::stdin()
        .lock()
        .read_to_string(&mut input)
        .map_err(|e| Error::persistence("<stdin>", e))?;
    let lines: Vec<&str> = input.lines().collect();
    let values = model.decision_values(&vocab.transform_all(&lines));
    let mut out = BufWriter::new(std::io::stdout().lock());
    for v in values {
        writeln!(out, "{v}").map_err(|e| Error::persistence("<stdout>", e))?;
    }
    out.flush().map_err(|e| Error::persistence("<stdout>", e).into())
}
