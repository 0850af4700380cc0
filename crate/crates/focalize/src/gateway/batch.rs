//! Single-excerpt and multi-run corpus annotation.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use chrono::Utc;
use focalize_core::annotation::AnnotationRecord;
use focalize_core::corpus::Excerpt;
use focalize_core::label::{parse_label, FocalizationLabel};
use focalize_core::prompt::{build_prompt, confidence_from_logprob, PromptTemplate};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{
    BackendConfig, CacheKey, CachedCompletion, ChatClient, GatewayError, ResponseCache,
    TokenBucket,
};

/// `{model}:run{run}:prompt-{prompt_id}`, runs counted from 1.
pub fn annotator_id(model: &str, run: u32, template: &PromptTemplate) -> String {
    format!("{model}:run{run}:prompt-{}", template.id)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    /// HTTP requests sent, retries included.
    pub network_calls: u64,
    pub retries: u64,
    pub cache_hits: u64,
    /// Records forced to `Invalid` by a request failure.
    pub failed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    /// Sorted by `(annotator_id, excerpt_id)`.
    pub records: Vec<AnnotationRecord>,
    pub stats: BatchStats,
}

/// A client plus optional cache and rate limiter.
pub struct Gateway {
    client: ChatClient,
    cache: Option<ResponseCache>,
    limiter: Option<TokenBucket>,
    cache_hits: AtomicU64,
}

impl Gateway {
    pub fn new(config: BackendConfig, cache: Option<ResponseCache>) -> Result<Self, GatewayError> {
        let limiter = config
            .requests_per_second
            .map(|r| TokenBucket::new(r, config.max_in_flight as f64));
        Ok(Self {
            client: ChatClient::new(config)?,
            cache,
            limiter,
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        self.client.config()
    }

    pub fn stats(&self) -> BatchStats {
        BatchStats {
            network_calls: self.client.attempts(),
            retries: self.client.retries(),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            failed: 0,
        }
    }

    /// Annotate one excerpt for one run, consulting the cache first.
    pub fn annotate_excerpt(
        &self,
        template: &PromptTemplate,
        excerpt: &Excerpt,
        run: u32,
    ) -> Result<AnnotationRecord, GatewayError> {
        let config = self.client.config();
        let key = CacheKey {
            model_name: config.model_name.clone(),
            prompt_id: template.id.name().into(),
            template_body: template.body.clone(),
            excerpt_text: excerpt.text.clone(),
            top_p: config.top_p,
            run,
        };
        let entry = match self.cache.as_ref().and_then(|c| c.get(&key)) {
            Some(hit) => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                hit
            }
            None => {
                if let Some(l) = &self.limiter {
                    l.acquire();
                }
                let result = self.client.complete(&build_prompt(template, &excerpt.text))?;
                let entry = CachedCompletion {
                    key,
                    result,
                    created_at: Utc::now(),
                };
                if let Some(c) = &self.cache {
                    c.put(&entry)?;
                }
                entry
            }
        };
        let confidence = match entry.result.first_token_logprob {
            Some(l) => confidence_from_logprob(l)
                .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?,
            None => None,
        };
        let mut record = AnnotationRecord::new(
            excerpt.excerpt_id.clone(),
            annotator_id(&config.model_name, run, template),
            parse_label(&entry.result.raw_text),
            entry.created_at,
        )
        .with_confidence(confidence);
        record.raw_output = Some(entry.result.raw_text);
        Ok(record)
    }

    /// `runs x excerpts` records. Request failures become `Invalid` records
    /// carrying the error text; credential and cache failures abort.
    pub fn annotate_corpus(
        &self,
        template: &PromptTemplate,
        excerpts: &[Excerpt],
        runs: u32,
    ) -> Result<BatchOutput, GatewayError> {
        if runs == 0 {
            return Err(GatewayError::InvalidConfig("runs must be at least 1".into()));
        }
        let jobs: Vec<(u32, &Excerpt)> = (1..=runs)
            .flat_map(|r| excerpts.iter().map(move |e| (r, e)))
            .collect();
        let before = self.stats();
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let failed = AtomicU64::new(0);
        let fatal: Mutex<Option<GatewayError>> = Mutex::new(None);
        let records = Mutex::new(Vec::with_capacity(jobs.len()));
        let workers = self.config().max_in_flight.min(jobs.len()).max(1);
        let model = &self.config().model_name;
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if abort.load(Ordering::Relaxed) {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(run, excerpt)) = jobs.get(i) else {
                        return;
                    };
                    let record = match self.annotate_excerpt(template, excerpt, run) {
                        Ok(r) => r,
                        Err(e) if e.is_fatal() => {
                            abort.store(true, Ordering::Relaxed);
                            fatal.lock().expect("lock").get_or_insert(e);
                            return;
                        }
                        Err(e) => {
                            warn!("{} run {run}: {e}", excerpt.excerpt_id);
                            failed.fetch_add(1, Ordering::Relaxed);
                            let mut r = AnnotationRecord::new(
                                excerpt.excerpt_id.clone(),
                                annotator_id(model, run, template),
                                FocalizationLabel::Invalid,
                                Utc::now(),
                            );
                            r.error = Some(e.to_string());
                            r
                        }
                    };
                    records.lock().expect("lock").push(record);
                });
            }
        });
        if let Some(e) = fatal.into_inner().expect("lock") {
            return Err(e);
        }
        let mut records = records.into_inner().expect("lock");
        records.sort_by(|a, b| {
            (&a.annotator_id, &a.excerpt_id).cmp(&(&b.annotator_id, &b.excerpt_id))
        });
        let after = self.stats();
        let stats = BatchStats {
            network_calls: after.network_calls - before.network_calls,
            retries: after.retries - before.retries,
            cache_hits: after.cache_hits - before.cache_hits,
            failed: failed.into_inner(),
        };
        info!(
            "annotated {} records: {} network calls, {} retries, {} cache hits, {} failed",
            records.len(),
            stats.network_calls,
            stats.retries,
            stats.cache_hits,
            stats.failed
        );
        Ok(BatchOutput { records, stats })
    }
}
