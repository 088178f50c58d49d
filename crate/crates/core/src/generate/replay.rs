use std::path::Path;

use serde_json::Value;

use super::{GenerateError, GenerationOutcome, GenerationRequest, Generator, Reject};
use crate::crystal::{candidate_from_json, CrystalError, StructureSource};

/// Replays generation payloads from a JSONL file, `batch` lines per call.
#[derive(Debug, Clone)]
pub struct ReplayGenerator {
    path: String,
    lines: Vec<String>,
    cursor: usize,
}

impl ReplayGenerator {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GenerateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GenerateError::Replay {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(Self::from_jsonl(path.display().to_string(), &text))
    }

    pub fn from_jsonl(name: impl Into<String>, text: &str) -> Self {
        let lines = text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
        Self { path: name.into(), lines, cursor: 0 }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.lines.len() - self.cursor
    }

    pub fn next_batch(&mut self, batch: usize) -> GenerationOutcome {
        let end = (self.cursor + batch).min(self.lines.len());
        let mut outcome = GenerationOutcome::default();
        for line in &self.lines[self.cursor..end] {
            match serde_json::from_str::<Value>(line) {
                Ok(value) => match candidate_from_json(&value, StructureSource::Replay) {
                    Ok(s) => outcome.candidates.push(s),
                    Err(e) => outcome.rejects.push(Reject::from_value(&value, e)),
                },
                Err(e) => outcome.rejects.push(Reject {
                    raw: line.clone(),
                    formula: None,
                    error: CrystalError::MalformedPayload(e.to_string()),
                }),
            }
        }
        self.cursor = end;
        outcome
    }
}

impl Generator for ReplayGenerator {
    fn tag(&self) -> String {
        format!("replay:{}", self.path)
    }

    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<GenerationOutcome, GenerateError> {
        Ok(self.next_batch(request.batch))
    }
}
