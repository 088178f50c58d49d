//! HTTP clients for a remote reference database and a remote surrogate.

use std::collections::BTreeMap;

use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::{json, Value};

pub use crate::http::RetryPolicy;

use super::{Fragment, OracleError, Surrogate, DB_COLUMNS};
use crate::crystal::{write_cif, Structure};
use crate::property::Property;

pub const MP_API_KEY_ENV: &str = "LLEMA_MP_API_KEY";
pub const MP_BASE_URL_ENV: &str = "LLEMA_MP_BASE_URL";
pub const SURROGATE_URL_ENV: &str = "LLEMA_SURROGATE_URL";

/// `GET {base}/materials?formula=...` returning an object keyed by the
/// reference-database column names.
pub struct RemoteReference {
    base: String,
    api_key: Option<String>,
    policy: RetryPolicy,
    client: Client,
}

impl RemoteReference {
    pub fn new(base: impl Into<String>, api_key: Option<String>, policy: RetryPolicy) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), api_key, client: policy.client(), policy }
    }

    /// Configured from the environment, if the base URL is set.
    pub fn from_env() -> Option<Self> {
        let base = std::env::var(MP_BASE_URL_ENV).ok().filter(|s| !s.is_empty())?;
        Some(Self::new(base, std::env::var(MP_API_KEY_ENV).ok(), RetryPolicy::default()))
    }

    /// Known values for `formula`; every failure degrades to `None`.
    pub fn fetch(&self, formula: &str) -> Option<Fragment> {
        let url = format!("{}/materials", self.base);
        let resp = self.policy.send(|| {
            let req = self.client.get(&url).query(&[("formula", formula)]);
            match &self.api_key {
                Some(key) => req.header("X-API-KEY", key),
                None => req,
            }
        });
        let resp = match resp {
            Ok(r) if r.status().is_success() => r,
            Ok(r) => {
                if r.status().as_u16() != 404 {
                    log::warn!("reference lookup for {formula}: HTTP {}", r.status());
                }
                return None;
            }
            Err(e) => {
                log::warn!("reference lookup for {formula} failed: {e}; using local data only");
                return None;
            }
        };
        let body: Value = match resp.json() {
            Ok(v) => v,
            Err(e) => {
                log::warn!("reference lookup for {formula}: bad JSON: {e}");
                return None;
            }
        };
        let obj = body.as_object()?;
        Some(
            DB_COLUMNS
                .iter()
                .filter_map(|p| obj.get(p.as_str()).and_then(Value::as_f64).filter(|v| v.is_finite()).map(|v| (*p, v)))
                .collect(),
        )
    }
}

/// `POST {base}/predict` with `{cif, properties}` returning `{values}`.
pub struct RemoteSurrogate {
    base: String,
    capabilities: Vec<Property>,
    policy: RetryPolicy,
    client: Client,
}

#[derive(Deserialize)]
struct PredictResponse {
    values: BTreeMap<String, Option<f64>>,
}

impl RemoteSurrogate {
    pub fn new(base: impl Into<String>, capabilities: Vec<Property>, policy: RetryPolicy) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            capabilities,
            client: policy.client(),
            policy,
        }
    }

    pub fn from_env(capabilities: Vec<Property>) -> Option<Self> {
        let base = std::env::var(SURROGATE_URL_ENV).ok().filter(|s| !s.is_empty())?;
        Some(Self::new(base, capabilities, RetryPolicy::default()))
    }

    fn failure(&self, reason: impl Into<String>) -> OracleError {
        OracleError::Surrogate { name: self.base.clone(), reason: reason.into() }
    }
}

impl Surrogate for RemoteSurrogate {
    fn name(&self) -> &str {
        &self.base
    }

    fn capabilities(&self) -> &[Property] {
        &self.capabilities
    }

    fn predict(&self, structure: &Structure, property: Property) -> Result<f64, OracleError> {
        self.predict_many(structure, &[property])?
            .remove(&property)
            .ok_or_else(|| self.failure(format!("no value for {property}")))
    }

    fn predict_many(&self, structure: &Structure, properties: &[Property]) -> Result<BTreeMap<Property, f64>, OracleError> {
        let url = format!("{}/predict", self.base);
        let body = json!({
            "cif": write_cif(structure),
            "properties": properties.iter().map(|p| p.as_str()).collect::<Vec<_>>(),
        });
        let resp = self.policy.send(|| self.client.post(&url).json(&body)).map_err(|e| self.failure(e))?;
        if !resp.status().is_success() {
            return Err(self.failure(format!("HTTP {}", resp.status())));
        }
        let parsed: PredictResponse = resp.json().map_err(|e| self.failure(e.to_string()))?;
        Ok(properties
            .iter()
            .filter_map(|p| parsed.values.get(p.as_str()).copied().flatten().filter(|v| v.is_finite()).map(|v| (*p, v)))
            .collect())
    }
}
