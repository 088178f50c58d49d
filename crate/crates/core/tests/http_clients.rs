mod common;

use std::time::Duration;

use common::MockServer;
use llema::crystal::{parse_formula, Structure, StructureSource};
use llema::generate::{GenerateError, GenerationRequest, Generator, LlmGenerator, RetryPolicy};
use llema::oracle::{Oracle, ReferenceDb, RemoteReference, RemoteSurrogate, Surrogate};
use llema::property::{Property, Provenance};
use llema::tasks::load_task;

fn fast() -> RetryPolicy {
    RetryPolicy { retries: 2, backoff: Duration::from_millis(5), timeout: Duration::from_secs(5) }
}

fn chat(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

const TWO: &str = r#"[{"formula": "ZnO", "lattice": {"a": 4.6, "b": 4.6, "c": 4.6, "alpha": 90, "beta": 90, "gamma": 90},
  "sites": [{"element": "Zn", "frac": [0, 0, 0]}, {"element": "O", "frac": [0.5, 0.5, 0.5]}]},
 {"formula": "MgO", "lattice": {"a": -1, "b": 4.2, "c": 4.2, "alpha": 90, "beta": 90, "gamma": 90},
  "sites": [{"element": "Mg", "frac": [0, 0, 0]}, {"element": "O", "frac": [0.5, 0.5, 0.5]}]}]"#;

fn structure(formula: &str) -> Structure {
    Structure::placeholder(&parse_formula(formula).unwrap(), StructureSource::Generated).unwrap()
}

#[test]
fn llm_parses_candidates_and_rejects() {
    let server = MockServer::start(vec![(200, chat(&format!("Sure.\n```json\n{TWO}\n```")))]);
    let task = load_task("wide_bandgap").unwrap();
    let mut llm = LlmGenerator::new(&server.base, Some("k".into()), "stub", fast());
    let outcome = llm.generate(&GenerationRequest::new(&task, 1, vec![], 2)).unwrap();
    assert_eq!(outcome.candidates.len(), 1);
    assert_eq!(outcome.candidates[0].reduced_formula(), "ZnO");
    assert_eq!(outcome.rejects.len(), 1);
    assert_eq!(outcome.rejects[0].formula.as_deref(), Some("MgO"));
    assert_eq!(llm.tag(), "llm:stub");
    let request = &server.requests()[0];
    assert!(request.starts_with("POST /v1/chat/completions"));
    assert!(request.to_ascii_lowercase().contains("authorization: bearer k"));
    assert!(request.contains("\"temperature\":0.8"));
}

#[test]
fn llm_retries_server_errors() {
    let server = MockServer::start(vec![(500, "{}".into()), (200, chat(TWO))]);
    let task = load_task("wide_bandgap").unwrap();
    let mut llm = LlmGenerator::new(&server.base, None, "stub", fast());
    assert!(llm.generate(&GenerationRequest::new(&task, 1, vec![], 2)).is_ok());
    assert_eq!(server.hits(), 2);
}

#[test]
fn llm_unavailable_after_three_failures() {
    let server = MockServer::start(vec![(500, "{}".into())]);
    let task = load_task("wide_bandgap").unwrap();
    let mut llm = LlmGenerator::new(&server.base, None, "stub", fast());
    let err = llm.generate(&GenerationRequest::new(&task, 1, vec![], 2)).unwrap_err();
    assert!(matches!(err, GenerateError::GeneratorUnavailable(_)));
    assert_eq!(server.hits(), 3);
}

#[test]
fn llm_prose_reply_becomes_reject() {
    let server = MockServer::start(vec![(200, chat("I cannot help with that."))]);
    let task = load_task("wide_bandgap").unwrap();
    let mut llm = LlmGenerator::new(&server.base, None, "stub", fast());
    let outcome = llm.generate(&GenerationRequest::new(&task, 0, vec![], 2)).unwrap();
    assert!(outcome.candidates.is_empty());
    assert_eq!(outcome.rejects.len(), 1);
}

#[test]
fn remote_reference_fills_missing_local_values() {
    let body = serde_json::json!({"band_gap": 5.9, "formation_energy": -2.5, "energy_above_hull": 0.0}).to_string();
    let server = MockServer::start(vec![(200, body)]);
    let remote = RemoteReference::new(&server.base, Some("secret".into()), fast());
    let oracle = Oracle::new(ReferenceDb::empty()).with_remote(remote);
    let task = load_task("wide_bandgap").unwrap();
    let props = oracle.predict(&structure("ScN"), &llema::oracle::needed_properties(&task));
    assert_eq!(props.value(Property::BandGap), Some(5.9));
    assert_eq!(props.source(Property::BandGap), Provenance::Reference);
    let request = &server.requests()[0];
    assert!(request.starts_with("GET /materials?formula=NSc") || request.starts_with("GET /materials?formula=ScN"));
    assert!(request.to_ascii_lowercase().contains("x-api-key: secret"));
}

#[test]
fn remote_reference_degrades_to_none() {
    let server = MockServer::start(vec![(404, "{}".into())]);
    let remote = RemoteReference::new(&server.base, None, fast());
    assert_eq!(remote.fetch("ZnO"), None);
    assert_eq!(server.hits(), 1);
    let down = MockServer::start(vec![(503, "{}".into())]);
    assert_eq!(RemoteReference::new(&down.base, None, fast()).fetch("ZnO"), None);
    assert_eq!(down.hits(), 3);
}

#[test]
fn remote_surrogate_batches_properties() {
    let body = serde_json::json!({"values": {"band_gap": 3.1, "bulk_modulus": null}}).to_string();
    let server = MockServer::start(vec![(200, body)]);
    let surrogate = RemoteSurrogate::new(&server.base, vec![Property::BandGap, Property::BulkModulus], fast());
    let values = surrogate.predict_many(&structure("ZnO"), &[Property::BandGap, Property::BulkModulus]).unwrap();
    assert_eq!(values.get(&Property::BandGap), Some(&3.1));
    assert!(!values.contains_key(&Property::BulkModulus));
    let request = &server.requests()[0];
    assert!(request.starts_with("POST /predict"));
    assert!(request.contains("data_ZnO"));
}
