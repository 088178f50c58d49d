//! Prompt snapshots. Set `LLEMA_BLESS=1` to rewrite the fixtures after an
//! intentional wording change.

use std::path::PathBuf;

use llema::crystal::{parse_formula, Structure, StructureSource};
use llema::generate::{build_prompt, Demonstration, GenerationRequest};
use llema::oracle::{needed_properties, Oracle, ReferenceDb};
use llema::record::Pool;
use llema::tasks::{load_task, score_structure, Task};

fn demo(task: &Task, formula: &str) -> Demonstration {
    let oracle = Oracle::new(ReferenceDb::fixture());
    let s = Structure::placeholder(&parse_formula(formula).unwrap(), StructureSource::Reference).unwrap();
    let properties = oracle.predict(&s, &needed_properties(task));
    let score = score_structure(&properties, &s, task);
    Demonstration { formula: formula.into(), structure: Some(s), pool: Pool::of(&score), properties, score }
}

fn check(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prompts").join(format!("{name}.txt"));
    if std::env::var_os("LLEMA_BLESS").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, golden, "prompt for {name} drifted from its snapshot");
}

#[test]
fn initial_wide_bandgap_prompt() {
    let task = load_task("wide_bandgap").unwrap();
    check("wide_bandgap_initial", &build_prompt(&GenerationRequest::new(&task, 0, vec![], 2)));
}

#[test]
fn high_k_prompt_with_demonstrations() {
    let task = load_task("high_k_dielectric").unwrap();
    let demos = vec![demo(&task, "HfO2"), demo(&task, "ZrO2"), demo(&task, "SrTiO3"), demo(&task, "MgO")];
    check("high_k_dielectric_iter3", &build_prompt(&GenerationRequest::new(&task, 3, demos, 2)));
}

#[test]
fn solid_state_electrolyte_prompt_with_unknown_candidate() {
    let task = load_task("solid_state_electrolyte").unwrap();
    let demos = vec![demo(&task, "Li3N"), demo(&task, "ScN")];
    check("solid_state_electrolyte_iter1", &build_prompt(&GenerationRequest::new(&task, 1, demos, 1)));
}

#[test]
fn prompt_is_pure() {
    let task = load_task("hard_coating").unwrap();
    let a = build_prompt(&GenerationRequest::new(&task, 2, vec![demo(&task, "TiN")], 2));
    let b = build_prompt(&GenerationRequest::new(&task, 2, vec![demo(&task, "TiN")], 2));
    assert_eq!(a, b);
}
