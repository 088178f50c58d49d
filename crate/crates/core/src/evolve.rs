//! Island-model evolutionary search.
//!
//! Each iteration picks one island by a Boltzmann draw over mean pool
//! scores, shows the generator the island's best successes and failures,
//! scores the returned candidates and files them back into that island.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crystal::{parse_formula, Structure, StructureSource};
use crate::generate::{
    Demonstration, GenerateError, GenerationRequest, Generator, RuleBasedGenerator, DEFAULT_BATCH, DEFAULT_TEMPERATURE,
};
use crate::metrics::{summarize, MetricsBlock, DEFAULT_WINDOW};
use crate::oracle::{needed_properties, Oracle};
use crate::property::{Property, PropertyVector};
use crate::record::{CandidateRecord, Pool, RejectInfo};
use crate::tasks::{score_structure, ScoreBreakdown, Task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Generator(#[from] GenerateError),
}

/// Best-first list of records with at most one entry per formula.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryPool {
    entries: Vec<CandidateRecord>,
    capacity: Option<usize>,
}

fn identity(r: &CandidateRecord) -> &str {
    if r.formula.is_empty() {
        r.reject.as_ref().map_or("", |x| x.raw.as_str())
    } else {
        &r.formula
    }
}

impl MemoryPool {
    pub fn new(capacity: Option<usize>) -> Self {
        Self { entries: Vec::new(), capacity }
    }

    /// Inserts keeping score order; a duplicate formula keeps the higher
    /// score (the earlier entry on ties). Returns whether the pool changed.
    pub fn insert(&mut self, record: CandidateRecord) -> bool {
        if let Some(pos) = self.entries.iter().position(|e| identity(e) == identity(&record)) {
            if record.score.composite <= self.entries[pos].score.composite {
                return false;
            }
            self.entries.remove(pos);
        }
        let at = self.entries.partition_point(|e| e.score.composite >= record.score.composite);
        self.entries.insert(at, record);
        if let Some(cap) = self.capacity {
            self.entries.truncate(cap.max(1));
        }
        true
    }

    pub fn entries(&self) -> &[CandidateRecord] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&CandidateRecord> {
        self.entries.first()
    }

    pub fn mean_score(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|e| e.score.composite).sum::<f64>() / self.entries.len() as f64)
        }
    }

    pub fn top(&self, k: usize) -> &[CandidateRecord] {
        &self.entries[..k.min(self.entries.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub id: usize,
    pub success: MemoryPool,
    pub failure: MemoryPool,
    /// Candidates ever filed into this island.
    pub u: usize,
}

impl Island {
    pub fn new(id: usize, capacity: Option<usize>) -> Self {
        Self { id, success: MemoryPool::new(capacity), failure: MemoryPool::new(capacity), u: 0 }
    }

    /// Mean success-pool score, else mean failure-pool score, else 0.
    pub fn mean_score(&self) -> f64 {
        self.success.mean_score().or_else(|| self.failure.mean_score()).unwrap_or(0.0)
    }

    fn file(&mut self, record: CandidateRecord) {
        match record.pool {
            Pool::Success => self.success.insert(record),
            Pool::Failure => self.failure.insert(record),
        };
    }
}

/// Annealed Boltzmann temperature T0·(1 − (u mod N)/N).
pub fn temperature(u: usize, t0: f64, schedule_n: usize) -> f64 {
    let n = schedule_n as f64;
    t0 * (1.0 - (u % schedule_n) as f64 / n)
}

/// Softmax of `scores / tau`, computed with max subtraction.
pub fn boltzmann_probabilities(scores: &[f64], tau: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Draws an island index with Boltzmann probabilities.
pub fn boltzmann_select<R: Rng + ?Sized>(scores: &[f64], tau: f64, rng: &mut R) -> usize {
    assert!(!scores.is_empty(), "at least one island");
    let probs = boltzmann_probabilities(scores, tau);
    let mut r: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        if r < *p {
            return i;
        }
        r -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Up to `k` best successes followed by up to `k` best failures.
pub fn sample_demonstrations(island: &Island, k: usize) -> Vec<Demonstration> {
    island.success.top(k).iter().chain(island.failure.top(k)).map(Demonstration::from).collect()
}

/// Files a scored record into the island and counts it.
pub fn update_population(island: &mut Island, record: CandidateRecord) {
    island.u += 1;
    island.file(record);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub islands: usize,
    pub iterations: usize,
    pub batch: usize,
    pub demos_per_pool: usize,
    pub t0: f64,
    pub schedule_n: usize,
    pub seed: u64,
    /// Reference entries scored into every island before the first
    /// iteration.
    pub seeds_per_island: usize,
    pub pool_capacity: Option<usize>,
    /// Sampling temperature passed to the generator.
    pub temperature: f64,
    /// Switch to the rule-based generator when the configured one is
    /// unavailable instead of aborting.
    pub fallback_rules: bool,
    pub window: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            islands: 5,
            iterations: 50,
            batch: DEFAULT_BATCH,
            demos_per_pool: 2,
            t0: 0.1,
            schedule_n: 10_000,
            seed: 0,
            seeds_per_island: 3,
            pool_capacity: None,
            temperature: DEFAULT_TEMPERATURE,
            fallback_rules: false,
            window: DEFAULT_WINDOW,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::InvalidConfig(m.to_string()));
        if self.islands < 1 {
            return bad("islands must be at least 1");
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if self.batch < 1 {
            return bad("batch must be at least 1");
        }
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return bad("t0 must be positive");
        }
        if self.schedule_n < 1 {
            return bad("schedule_n must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.pool_capacity == Some(0) {
            return bad("pool capacity must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub island: usize,
    pub tau: f64,
    /// Mean pool score of every island before the draw.
    pub mean_scores: Vec<f64>,
    pub cumulative_hit_rate: f64,
    /// Best composite score over all success pools, if any.
    pub elite_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub records: Vec<CandidateRecord>,
    pub seeds: Vec<CandidateRecord>,
    pub islands: Vec<Island>,
    pub trace: Vec<TraceRow>,
    pub metrics: MetricsBlock,
}

impl CampaignResult {
    /// Union of every island's success pool, best first, one entry per
    /// formula.
    pub fn success_union(&self) -> Vec<CandidateRecord> {
        success_union(&self.islands)
    }
}

pub fn success_union(islands: &[Island]) -> Vec<CandidateRecord> {
    let mut pool = MemoryPool::new(None);
    for island in islands {
        for r in island.success.entries() {
            pool.insert(r.clone());
        }
    }
    pool.entries
}

fn elite(islands: &[Island]) -> Option<f64> {
    islands
        .iter()
        .filter_map(|i| i.success.best().map(|r| r.score.composite))
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
}

fn evaluate(structure: Structure, oracle: &Oracle, needed: &BTreeSet<Property>, task: &Task) -> (Structure, PropertyVector, ScoreBreakdown) {
    let props = oracle.predict(&structure, needed);
    let score = score_structure(&props, &structure, task);
    (structure, props, score)
}

fn seed_records(task: &Task, oracle: &Oracle, needed: &BTreeSet<Property>, cfg: &CampaignConfig, rng: &mut ChaCha8Rng) -> Vec<(Structure, PropertyVector, ScoreBreakdown)> {
    let formulas: Vec<&str> = oracle.db().iter().map(|(f, _)| f).collect();
    let picked: Vec<&str> = formulas.choose_multiple(rng, cfg.seeds_per_island).copied().collect();
    picked
        .into_iter()
        .filter_map(|f| {
            let composition = parse_formula(f).ok()?;
            Structure::placeholder(&composition, StructureSource::Reference).ok()
        })
        .map(|s| evaluate(s, oracle, needed, task))
        .collect()
}

/// Runs the island-model loop for `cfg.iterations` iterations.
///
/// The temperature for iteration n uses the candidate count of the island
/// drawn at iteration n − 1 (island 0 for the first draw).
pub fn run_campaign(
    task: &Task,
    generator: &mut dyn Generator,
    oracle: &Oracle,
    cfg: &CampaignConfig,
) -> Result<CampaignResult, EvolveError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let needed = needed_properties(task);
    let mut islands: Vec<Island> = (0..cfg.islands).map(|i| Island::new(i, cfg.pool_capacity)).collect();

    let mut seeds = Vec::new();
    let seeded = seed_records(task, oracle, &needed, cfg, &mut rng);
    for island in &mut islands {
        for (s, props, score) in &seeded {
            let record = CandidateRecord {
                iteration: 0,
                island: island.id,
                formula: s.reduced_formula().to_string(),
                structure: Some(s.clone()),
                properties: props.clone(),
                pool: Pool::of(score),
                score: score.clone(),
                generator: "seed".into(),
                reject: None,
            };
            island.file(record.clone());
            seeds.push(record);
        }
    }

    let mut fallback: Option<RuleBasedGenerator> = None;
    let mut records: Vec<CandidateRecord> = Vec::new();
    let mut successes = 0usize;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut previous = 0usize;

    for n in 1..=cfg.iterations {
        let tau = temperature(islands[previous].u, cfg.t0, cfg.schedule_n);
        let mean_scores: Vec<f64> = islands.iter().map(Island::mean_score).collect();
        let idx = boltzmann_select(&mean_scores, tau, &mut rng);
        previous = idx;

        let demos = sample_demonstrations(&islands[idx], cfg.demos_per_pool);
        let request = GenerationRequest::new(task, n, demos, cfg.batch).with_temperature(cfg.temperature);
        let active: &mut dyn Generator = match fallback.as_mut() {
            Some(f) => f,
            None => &mut *generator,
        };
        let tag = active.tag();
        let outcome = match active.generate(&request) {
            Ok(o) => Ok(o),
            Err(GenerateError::GeneratorUnavailable(reason)) if cfg.fallback_rules && fallback.is_none() => {
                log::warn!("generator unavailable ({reason}); continuing with the rule-based generator");
                let parents = seeded.iter().map(|(s, _, _)| s.clone()).collect();
                let f = fallback.insert(RuleBasedGenerator::new(cfg.seed).with_cold_start(parents));
                f.generate(&request)
            }
            Err(e) => Err(e),
        };
        let tag = if fallback.is_some() { "rules".to_string() } else { tag };
        let outcome = match outcome {
            Ok(o) => o,
            Err(GenerateError::ExhaustedAttempts(attempts)) => {
                log::warn!("iteration {n}: no candidate after {attempts} attempts");
                Default::default()
            }
            Err(e) => return Err(e.into()),
        };

        let evaluated: Vec<_> = outcome
            .candidates
            .into_par_iter()
            .map(|s| evaluate(s, oracle, &needed, task))
            .collect();
        let mut batch: Vec<CandidateRecord> = evaluated
            .into_iter()
            .map(|(s, properties, score)| CandidateRecord {
                iteration: n,
                island: idx,
                formula: s.reduced_formula().to_string(),
                structure: Some(s),
                properties,
                pool: Pool::of(&score),
                score,
                generator: tag.clone(),
                reject: None,
            })
            .collect();
        for reject in outcome.rejects {
            let score = ScoreBreakdown::rejected(task);
            batch.push(CandidateRecord {
                iteration: n,
                island: idx,
                formula: reject.formula.clone().unwrap_or_default(),
                structure: None,
                properties: PropertyVector::new(),
                pool: Pool::Failure,
                score,
                generator: tag.clone(),
                reject: Some(RejectInfo {
                    reason: reject.error.code().to_string(),
                    detail: reject.error.to_string(),
                    raw: reject.raw,
                }),
            });
        }
        for record in batch {
            if record.score.success {
                successes += 1;
            }
            update_population(&mut islands[idx], record.clone());
            records.push(record);
        }

        trace.push(TraceRow {
            iteration: n,
            island: idx,
            tau,
            mean_scores,
            cumulative_hit_rate: if records.is_empty() { 0.0 } else { 100.0 * successes as f64 / records.len() as f64 },
            elite_score: elite(&islands),
        });
    }

    let metrics = summarize(&records, task, oracle.db(), cfg.window);
    Ok(CampaignResult { records, seeds, islands, trace, metrics })
}
