//! Audit records shared by the generators, the campaign loop and metrics.

use serde::{Deserialize, Serialize};

use crate::crystal::Structure;
use crate::property::{Property, PropertyVector};
use crate::tasks::ScoreBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Success,
    Failure,
}

impl Pool {
    pub fn of(score: &ScoreBreakdown) -> Self {
        if score.success {
            Pool::Success
        } else {
            Pool::Failure
        }
    }
}

/// Why a generated payload never became a structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectInfo {
    /// Machine-readable reason code.
    pub reason: String,
    pub detail: String,
    /// The payload text as the generator produced it.
    pub raw: String,
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub iteration: usize,
    pub island: usize,
    /// Reduced formula of the structure; for rejects, the declared formula
    /// if it could be canonicalized, else empty.
    pub formula: String,
    pub structure: Option<Structure>,
    pub properties: PropertyVector,
    pub score: ScoreBreakdown,
    pub pool: Pool,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject: Option<RejectInfo>,
}

impl CandidateRecord {
    pub fn value(&self, property: Property) -> Option<f64> {
        self.properties.value(property)
    }

    pub fn is_reject(&self) -> bool {
        self.reject.is_some()
    }

    pub fn elements(&self) -> Vec<&str> {
        self.structure.as_ref().map(Structure::elements).unwrap_or_default()
    }
}
