use serde_json::Value;

use super::{GenerateError, GenerationOutcome, Reject};
use crate::crystal::{candidate_from_json, StructureSource};

/// The first JSON array of objects in `text`, skipping prose, code fences
/// and bracketed text that is not JSON.
fn first_array(text: &str) -> Option<Vec<Value>> {
    for (i, _) in text.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(items))) = stream.next() {
            if items.iter().all(Value::is_object) {
                return Some(items);
            }
        }
    }
    None
}

/// Extracts candidates from model output. Invalid entries become rejects.
pub fn parse_candidates(text: &str, source: StructureSource) -> Result<GenerationOutcome, GenerateError> {
    let items = first_array(text).ok_or(GenerateError::NoJsonFound)?;
    let mut outcome = GenerationOutcome::default();
    for item in &items {
        match candidate_from_json(item, source) {
            Ok(s) => outcome.candidates.push(s),
            Err(e) => outcome.rejects.push(Reject::from_value(item, e)),
        }
    }
    Ok(outcome)
}
