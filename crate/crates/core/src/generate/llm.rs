use reqwest::blocking::Client;
use serde_json::{json, Value};

use super::{build_prompt, parse_candidates, GenerateError, GenerationOutcome, GenerationRequest, Generator, Reject};
use crate::crystal::{CrystalError, StructureSource};
use crate::http::RetryPolicy;

pub const LLM_API_KEY_ENV: &str = "LLEMA_LLM_API_KEY";
pub const LLM_BASE_URL_ENV: &str = "LLEMA_LLM_BASE_URL";

/// Chat-completions client: one `POST {base}/v1/chat/completions` per
/// request.
pub struct LlmGenerator {
    base: String,
    api_key: Option<String>,
    model: String,
    policy: RetryPolicy,
    client: Client,
}

impl LlmGenerator {
    pub fn new(base: impl Into<String>, api_key: Option<String>, model: impl Into<String>, policy: RetryPolicy) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            api_key,
            model: model.into(),
            client: policy.client(),
            policy,
        }
    }

    /// Endpoint and key from the environment.
    pub fn from_env(model: impl Into<String>, policy: RetryPolicy) -> Result<Self, GenerateError> {
        let base = std::env::var(LLM_BASE_URL_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GenerateError::GeneratorUnavailable(format!("{LLM_BASE_URL_ENV} is not set")))?;
        Ok(Self::new(base, std::env::var(LLM_API_KEY_ENV).ok(), model, policy))
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, GenerateError> {
        let url = format!("{}/v1/chat/completions", self.base);
        let body = json!({
            "model": self.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .policy
            .send(|| {
                let req = self.client.post(&url).json(&body);
                match &self.api_key {
                    Some(key) => req.bearer_auth(key),
                    None => req,
                }
            })
            .map_err(GenerateError::GeneratorUnavailable)?;
        if !resp.status().is_success() {
            return Err(GenerateError::GeneratorUnavailable(format!("HTTP {}", resp.status())));
        }
        let value: Value = resp.json().map_err(|e| GenerateError::GeneratorUnavailable(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GenerateError::GeneratorUnavailable("response has no choices[0].message.content".into()))
    }
}

impl Generator for LlmGenerator {
    fn tag(&self) -> String {
        format!("llm:{}", self.model)
    }

    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<GenerationOutcome, GenerateError> {
        let text = self.complete(&build_prompt(request), request.temperature)?;
        let mut outcome = match parse_candidates(&text, StructureSource::Generated) {
            Ok(outcome) => outcome,
            Err(GenerateError::NoJsonFound) => {
                log::warn!("model reply held no JSON array");
                GenerationOutcome {
                    rejects: vec![Reject {
                        raw: text.clone(),
                        formula: None,
                        error: CrystalError::MalformedPayload("no JSON array in reply".into()),
                    }],
                    ..Default::default()
                }
            }
            Err(e) => return Err(e),
        };
        outcome.transcript = Some(text);
        Ok(outcome)
    }
}
