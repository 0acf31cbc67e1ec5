//! The machine half of each pair: prompting a chat-completion endpoint (or
//! the offline mock) to rephrase every human sentence, with a checkpoint
//! store so interrupted runs resume where they stopped.

mod http;
mod mock;
mod store;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{count_words, truncate_words, Corpus, Label, TextRecord, MAX_WORDS, MIN_WORDS};
use crate::error::{Error, Result};

pub use http::{HttpBackend, HttpConfig, API_KEY_ENV, DEFAULT_MODEL};
pub use mock::{MockBackend, DEFAULT_REPLACE_FRACTION, DEFAULT_WORDLIST};
pub use store::CheckpointStore;

pub const DEFAULT_TEMPLATE: &str =
    "Please rephrase this sentence, make sure the words length is equal to the given sentence: {sentence}";
const PLACEHOLDER: &str = "{sentence}";

/// Suffix that turns a human record id into the id of its machine partner.
pub const MACHINE_ID_SUFFIX: &str = "-m";

/// A prompt with exactly one `{sentence}` slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    prefix: String,
    suffix: String,
}

impl PromptTemplate {
    pub fn new(template: &str) -> Result<Self> {
        let mut parts = template.split(PLACEHOLDER);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(prefix), Some(suffix), None) => Ok(PromptTemplate {
                prefix: prefix.to_string(),
                suffix: suffix.to_string(),
            }),
            _ => Err(Error::Config(format!(
                "prompt template must contain {PLACEHOLDER} exactly once"
            ))),
        }
    }

    pub fn render(&self, sentence: &str) -> String {
        format!("{}{}{}", self.prefix, sentence, self.suffix)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::new(DEFAULT_TEMPLATE).expect("default template is valid")
    }
}

pub fn build_prompt(sentence: &str) -> String {
    PromptTemplate::default().render(sentence)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RephraseRequest {
    pub source_record_id: String,
    pub prompt: String,
    pub target_word_count: usize,
    /// The bare sentence, for backends that do not parse prompts.
    pub sentence: String,
}

impl RephraseRequest {
    pub fn for_record(record: &TextRecord, template: &PromptTemplate) -> Self {
        RephraseRequest {
            source_record_id: record.id.clone(),
            prompt: template.render(&record.text),
            target_word_count: record.word_count,
            sentence: record.text.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Http => "http",
            BackendKind::Mock => "mock",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RephraseResult {
    pub source_record_id: String,
    pub machine_text: String,
    pub backend: BackendKind,
    pub attempt_count: u32,
    /// Unix time in milliseconds.
    pub received_at: u64,
}

/// Why a single backend call failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx.
    Transient { status: Option<u16>, message: String },
    /// Retrying will not help: other 4xx, malformed responses.
    Fatal { status: Option<u16>, message: String },
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Returns the completion text for one request.
    fn complete(&self, request: &RephraseRequest) -> std::result::Result<String, BackendError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each further failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << (attempt - 1).min(16))
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Calls the backend until it produces text. Transient failures are retried
/// with exponential backoff up to `policy.max_attempts`; an empty completion
/// earns one extra attempt before it becomes a content error.
pub fn rephrase_one(request: &RephraseRequest, backend: &dyn Backend, policy: RetryPolicy) -> Result<RephraseResult> {
    if policy.max_attempts == 0 {
        return Err(Error::Config("max_attempts must be at least 1".into()));
    }
    let mut attempts = 0u32;
    let mut failures = 0u32;
    let mut empty_retried = false;
    loop {
        attempts += 1;
        match backend.complete(request) {
            Ok(text) => {
                let text = text.trim();
                if !text.is_empty() {
                    return Ok(RephraseResult {
                        source_record_id: request.source_record_id.clone(),
                        machine_text: text.to_string(),
                        backend: backend.kind(),
                        attempt_count: attempts,
                        received_at: now_millis(),
                    });
                }
                if empty_retried {
                    return Err(Error::Content {
                        record_id: request.source_record_id.clone(),
                        message: format!("empty completion after {attempts} attempts"),
                    });
                }
                log::debug!("empty completion for {}, retrying", request.source_record_id);
                empty_retried = true;
            }
            Err(BackendError::Fatal { status, message }) => {
                return Err(Error::Transport {
                    attempts,
                    status,
                    message,
                })
            }
            Err(BackendError::Transient { status, message }) => {
                failures += 1;
                if failures >= policy.max_attempts {
                    return Err(Error::Transport {
                        attempts,
                        status,
                        message,
                    });
                }
                let delay = policy.delay_after(failures);
                log::debug!(
                    "{}: attempt {attempts} failed ({message}), retrying in {delay:?}",
                    request.source_record_id
                );
                thread::sleep(delay);
            }
        }
    }
}

/// Enforces a minimum interval between request starts across all workers.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

struct Throttled<'a> {
    inner: &'a dyn Backend,
    limiter: &'a RateLimiter,
}

impl Backend for Throttled<'_> {
    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }

    fn complete(&self, request: &RephraseRequest) -> std::result::Result<String, BackendError> {
        self.limiter.wait();
        self.inner.complete(request)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateConfig {
    /// Maximum number of requests in flight.
    pub workers: usize,
    /// Minimum time between request starts.
    pub min_interval: Duration,
    pub retry: RetryPolicy,
    pub template: PromptTemplate,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            workers: 4,
            min_interval: Duration::from_millis(100),
            retry: RetryPolicy::default(),
            template: PromptTemplate::default(),
        }
    }
}

/// Pairs every human record with a machine rephrase.
///
/// Records already in `store` are not requested again; new results are
/// appended to the store as they arrive, and the store is compacted once
/// every record has a result. The output holds every human record plus one
/// machine record per admissible rephrase, ordered by id. Humans whose
/// rephrase came back under the word floor keep `pair_id` unset and are
/// listed under the `rephrase_rejected` provenance key.
pub fn generate_pairs(
    corpus: &Corpus,
    backend: &dyn Backend,
    store: &mut CheckpointStore,
    config: &GenerateConfig,
) -> Result<Corpus> {
    if let Some(r) = corpus.records().iter().find(|r| r.label != Label::Human) {
        return Err(Error::Config(format!(
            "generate_pairs expects human records only, found {} record {:?}",
            r.label,
            r.id
        )));
    }
    if config.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let mut writer = store.appender()?;

    let pending: Vec<RephraseRequest> = corpus
        .records()
        .iter()
        .filter(|r| !store.contains(&r.id))
        .map(|r| RephraseRequest::for_record(r, &config.template))
        .collect();
    log::info!(
        "rephrasing {} of {} records ({} checkpointed)",
        pending.len(),
        corpus.len(),
        corpus.len() - pending.len()
    );

    let limiter = RateLimiter {
        interval: config.min_interval,
        next: Mutex::new(None),
    };
    let throttled = Throttled {
        inner: backend,
        limiter: &limiter,
    };
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let mut first_error: Option<Error> = None;
    let workers = config.workers.min(pending.len()).max(1);

    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Result<RephraseResult>>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, next, stop, throttled) = (&pending, &next, &stop, &throttled);
            scope.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(request) = pending.get(i) else { break };
                    let outcome = rephrase_one(request, throttled, config.retry);
                    if outcome.is_err() {
                        stop.store(true, Ordering::Relaxed);
                    }
                    if tx.send(outcome).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        // Single writer: results are committed in completion order.
        for outcome in rx {
            let committed = outcome.and_then(|result| {
                writer.append(&result)?;
                store.insert(result);
                Ok(())
            });
            if let Err(e) = committed {
                stop.store(true, Ordering::Relaxed);
                first_error.get_or_insert(e);
            }
        }
    });
    drop(writer);
    if let Some(e) = first_error {
        return Err(e);
    }
    store.compact()?;

    assemble_pairs(corpus, store, backend.kind())
}

fn assemble_pairs(corpus: &Corpus, store: &CheckpointStore, kind: BackendKind) -> Result<Corpus> {
    let spec = corpus.bucket_spec();
    let mut records = Vec::with_capacity(corpus.len() * 2);
    let mut rejected = Vec::new();
    for human in corpus.records() {
        let result = store
            .get(&human.id)
            .ok_or_else(|| Error::Data(format!("no rephrase for record {:?}", human.id)))?;
        let text = truncate_words(&result.machine_text, MAX_WORDS);
        let word_count = count_words(&text);
        let mut human = human.clone();
        if word_count < MIN_WORDS {
            log::warn!(
                "dropping rephrase of {}: {word_count} words is under the {MIN_WORDS}-word floor",
                human.id
            );
            human.pair_id = None;
            rejected.push(human.id.clone());
            records.push(human);
            continue;
        }
        human.pair_id = Some(human.id.clone());
        records.push(TextRecord {
            id: format!("{}{MACHINE_ID_SUFFIX}", human.id),
            text,
            label: Label::Machine,
            source: human.source,
            word_count,
            bucket: spec.assign(word_count),
            pair_id: Some(human.id.clone()),
        });
        records.push(human);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    rejected.sort();

    let mut provenance: BTreeMap<String, String> = corpus.provenance.clone();
    provenance.insert("rephrase_backend".into(), kind.as_str().into());
    provenance.insert("rephrase_pairs".into(), (corpus.len() - rejected.len()).to_string());
    provenance.insert("rephrase_rejected".into(), rejected.join(","));
    Corpus::new(records, spec.clone(), provenance)
}
