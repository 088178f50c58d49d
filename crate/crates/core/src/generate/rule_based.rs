use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GenerateError, GenerationOutcome, GenerationRequest, Generator};
use crate::chem::{apply_rule, RuleId};
use crate::crystal::Structure;
use crate::record::Pool;

/// Probability of drawing a parent from the success pool when both pools
/// offer parents.
pub const SUCCESS_PARENT_PROBABILITY: f64 = 0.8;

/// Attempts allowed per requested candidate.
const ATTEMPTS_PER_CANDIDATE: usize = 20;

/// Mutates demonstration structures with the concrete design rules.
#[derive(Debug, Clone)]
pub struct RuleBasedGenerator {
    rng: ChaCha8Rng,
    cold_start: Vec<Structure>,
}

impl RuleBasedGenerator {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), cold_start: Vec::new() }
    }

    /// Parents used while no demonstration carries a structure.
    pub fn with_cold_start(mut self, parents: Vec<Structure>) -> Self {
        self.cold_start = parents;
        self
    }
}

impl Generator for RuleBasedGenerator {
    fn tag(&self) -> String {
        "rules".to_string()
    }

    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<GenerationOutcome, GenerateError> {
        let parents = |pool: Pool| -> Vec<&Structure> {
            request
                .demonstrations
                .iter()
                .filter(|d| d.pool == pool)
                .filter_map(|d| d.structure.as_ref())
                .collect()
        };
        let successes = parents(Pool::Success);
        let mut failures = parents(Pool::Failure);
        if successes.is_empty() && failures.is_empty() {
            failures = self.cold_start.iter().collect();
        }
        let max_attempts = ATTEMPTS_PER_CANDIDATE * request.batch;
        if successes.is_empty() && failures.is_empty() {
            return Err(GenerateError::ExhaustedAttempts(max_attempts));
        }
        let rules: Vec<RuleId> = RuleId::concrete().collect();
        let mut emitted = BTreeSet::new();
        let mut outcome = GenerationOutcome::default();
        let mut attempts = 0;
        while outcome.candidates.len() < request.batch && attempts < max_attempts {
            attempts += 1;
            let from_success = !successes.is_empty()
                && (failures.is_empty() || self.rng.random_bool(SUCCESS_PARENT_PROBABILITY));
            let pool = if from_success { &successes } else { &failures };
            let parent = *pool.choose(&mut self.rng).expect("pool is non-empty");
            let rule = *rules.choose(&mut self.rng).expect("concrete rules exist");
            let Ok(mutants) = apply_rule(rule, parent, &mut self.rng) else {
                continue;
            };
            for m in mutants {
                if outcome.candidates.len() < request.batch && emitted.insert(m.reduced_formula().to_string()) {
                    outcome.candidates.push(m);
                }
            }
        }
        if outcome.candidates.is_empty() {
            return Err(GenerateError::ExhaustedAttempts(attempts));
        }
        Ok(outcome)
    }
}
