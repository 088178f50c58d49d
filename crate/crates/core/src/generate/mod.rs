//! Candidate generators: an LLM chat client, a rule-based mutator and a
//! deterministic replay of recorded payloads.

mod llm;
mod parse;
mod prompt;
mod replay;
mod rule_based;

pub use crate::http::RetryPolicy;
pub use llm::{LlmGenerator, LLM_API_KEY_ENV, LLM_BASE_URL_ENV};
pub use parse::parse_candidates;
pub use prompt::build_prompt;
pub use replay::ReplayGenerator;
pub use rule_based::RuleBasedGenerator;

use serde_json::Value;
use thiserror::Error;

use crate::chem::RuleId;
use crate::crystal::{canonical_formula, CrystalError, Structure};
use crate::property::PropertyVector;
use crate::record::{CandidateRecord, Pool};
use crate::tasks::{ScoreBreakdown, Task};

/// Sampling temperature used when a request does not set one.
pub const DEFAULT_TEMPERATURE: f64 = 0.8;

/// Candidates requested per generation call by default.
pub const DEFAULT_BATCH: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("no JSON array found in model output")]
    NoJsonFound,
    #[error("generator unavailable: {0}")]
    GeneratorUnavailable(String),
    #[error("no candidate produced after {0} attempts")]
    ExhaustedAttempts(usize),
    #[error("replay file {path}: {reason}")]
    Replay { path: String, reason: String },
}

/// A scored example shown to the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub formula: String,
    pub structure: Option<Structure>,
    pub properties: PropertyVector,
    pub score: ScoreBreakdown,
    pub pool: Pool,
}

impl From<&CandidateRecord> for Demonstration {
    fn from(r: &CandidateRecord) -> Self {
        Self {
            formula: r.formula.clone(),
            structure: r.structure.clone(),
            properties: r.properties.clone(),
            score: r.score.clone(),
            pool: r.pool,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationRequest<'a> {
    pub task: &'a Task,
    pub iteration: usize,
    pub demonstrations: Vec<Demonstration>,
    /// Prompt text of the design rules; empty on the initial generation.
    pub rules: Vec<String>,
    pub batch: usize,
    pub temperature: f64,
}

impl<'a> GenerationRequest<'a> {
    /// Attaches every design rule when `iteration > 0`.
    pub fn new(task: &'a Task, iteration: usize, demonstrations: Vec<Demonstration>, batch: usize) -> Self {
        let rules = if iteration > 0 { RuleId::all().map(RuleId::prompt_text).collect() } else { Vec::new() };
        Self { task, iteration, demonstrations, rules, batch: batch.max(1), temperature: DEFAULT_TEMPERATURE }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }
}

/// A payload that failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub raw: String,
    /// Declared formula, canonicalized when possible.
    pub formula: Option<String>,
    pub error: CrystalError,
}

impl Reject {
    pub fn from_value(value: &Value, error: CrystalError) -> Self {
        let formula = value
            .get("formula")
            .and_then(Value::as_str)
            .map(|f| canonical_formula(f).unwrap_or_else(|_| f.to_string()));
        Self { raw: value.to_string(), formula, error }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationOutcome {
    pub candidates: Vec<Structure>,
    pub rejects: Vec<Reject>,
    pub transcript: Option<String>,
}

impl GenerationOutcome {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty() && self.rejects.is_empty()
    }
}

/// A candidate source π.
pub trait Generator {
    /// Short tag stored on every record this generator produces.
    fn tag(&self) -> String;

    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<GenerationOutcome, GenerateError>;
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn tag(&self) -> String {
        (**self).tag()
    }

    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<GenerationOutcome, GenerateError> {
        (**self).generate(request)
    }
}
