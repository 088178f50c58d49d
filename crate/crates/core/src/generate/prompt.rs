use std::fmt::Write as _;

use super::{Demonstration, GenerationRequest};
use crate::property::Property;
use crate::record::Pool;
use crate::tasks::Constraint;

/// At most four decimals, trailing zeros dropped.
fn short(value: f64) -> String {
    let text = format!("{value:.4}");
    let text = text.trim_end_matches('0').trim_end_matches('.');
    if text == "-0" { "0".to_string() } else { text.to_string() }
}

fn with_unit(value: f64, property: Property) -> String {
    if property.unit().is_empty() {
        short(value)
    } else {
        format!("{} {}", short(value), property.unit())
    }
}

fn render_demo(out: &mut String, index: usize, demo: &Demonstration, constraints: &[Constraint]) {
    let label = match demo.pool {
        Pool::Success => "success",
        Pool::Failure => "failure",
    };
    let formula = if demo.formula.is_empty() { "(unparseable output)" } else { &demo.formula };
    let _ = writeln!(out, "### Example {index} ({label})");
    let _ = writeln!(out, "Formula: {formula}");
    let props: Vec<String> = demo
        .properties
        .iter()
        .map(|(p, v)| match v.value {
            Some(x) => format!("{p} = {}", with_unit(x, p)),
            None => format!("{p} = missing"),
        })
        .collect();
    if props.is_empty() {
        let _ = writeln!(out, "Properties: none");
    } else {
        let _ = writeln!(out, "Properties: {}", props.join(", "));
    }
    let _ = writeln!(out, "Constraint verdicts:");
    for (c, s) in constraints.iter().zip(&demo.score.per_constraint_phi) {
        let verdict = if s.phi >= 0.0 { "satisfied" } else { "violated" };
        let _ = writeln!(out, "- {c}: {verdict} (phi = {:.3})", s.phi);
    }
    let _ = writeln!(out, "Composite score: {:.3}", demo.score.composite);
}

/// Renders the four prompt sections: objective and constraints, design
/// rules (after the first generation), demonstrations, and the output
/// format. Pure in its input.
pub fn build_prompt(req: &GenerationRequest<'_>) -> String {
    let task = req.task;
    let mut out = String::new();

    out.push_str("## Role and objective\n");
    out.push_str("You are an expert materials scientist proposing new inorganic crystalline materials.\n");
    let _ = writeln!(out, "Task: {}", task.name());
    if !task.description().is_empty() {
        let _ = writeln!(out, "Objective: {}", task.description());
    }
    out.push_str("Every candidate must satisfy all of these constraints:\n");
    for c in task.constraints() {
        let _ = writeln!(out, "- {c}");
    }

    if !req.rules.is_empty() {
        out.push_str("\n## Evolution rules\n");
        out.push_str("Derive new candidates from the examples below by applying one or more of these design rules:\n");
        for rule in &req.rules {
            let _ = writeln!(out, "{rule}");
        }
    }

    out.push_str("\n## Demonstrations\n");
    if req.demonstrations.is_empty() {
        out.push_str("No evaluated candidates yet.\n");
    } else {
        out.push_str("Successful examples satisfy every constraint; failed examples show which constraints they violate.\n");
        for (i, demo) in req.demonstrations.iter().enumerate() {
            out.push('\n');
            render_demo(&mut out, i + 1, demo, task.constraints());
        }
    }

    out.push_str("\n## Output format\n");
    let (noun, object) = if req.batch == 1 { ("candidate", "object") } else { ("candidates", "objects") };
    let _ = writeln!(
        out,
        "Return exactly {} new {noun} as a JSON array with exactly {} {object} of the form:",
        req.batch, req.batch
    );
    out.push_str(
        "{\"formula\": \"BaTiO3\", \"lattice\": {\"a\": 4.0, \"b\": 4.0, \"c\": 4.0, \"alpha\": 90.0, \"beta\": 90.0, \"gamma\": 90.0}, \
         \"sites\": [{\"element\": \"Ba\", \"frac\": [0.0, 0.0, 0.0]}]}\n",
    );
    out.push_str("Lengths are in angstrom and angles in degrees. List every atom of the cell explicitly with fractional coordinates (space group P1).\n");
    out.push_str("Do not propose formulas from the examples. Reply with the JSON array only.\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::property::{PropertyValue, PropertyVector, Provenance};
    use crate::tasks::{composite_score, load_task};

    fn demo(task: &crate::tasks::Task, formula: &str, gap: f64) -> Demonstration {
        let props: PropertyVector = [
            (Property::BandGap, PropertyValue::new(gap, Provenance::Reference)),
            (Property::FormationEnergy, PropertyValue::new(-2.0, Provenance::Reference)),
            (Property::EnergyAboveHull, PropertyValue::missing()),
        ]
        .into_iter()
        .collect();
        let score = composite_score(&props, &[], task);
        Demonstration { formula: formula.into(), structure: None, pool: Pool::of(&score), properties: props, score }
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(7.767189934455573), "7.7672");
        assert_eq!(short(22.0), "22");
        assert_eq!(short(-0.00001), "0");
        assert_eq!(short(0.1), "0.1");
    }

    #[test]
    fn initial_prompt_has_no_rules() {
        let task = load_task("wide_bandgap").unwrap();
        let p = build_prompt(&GenerationRequest::new(&task, 0, vec![], 2));
        assert!(p.contains("2.5") && p.contains("eV"));
        assert!(!p.contains("## Evolution rules"));
        assert!(p.contains("exactly 2 new candidates"));
    }

    #[test]
    fn demos_and_rules_rendered() {
        let task = load_task("wide_bandgap").unwrap();
        let demos = vec![demo(&task, "ZnO", 3.3), demo(&task, "MgO", 7.0), demo(&task, "GaN", 1.0), demo(&task, "CdS", 2.0)];
        let p = build_prompt(&GenerationRequest::new(&task, 3, demos, 1));
        assert_eq!(p.matches("### Example").count(), 4);
        assert!(p.contains("## Evolution rules"));
        assert!(p.contains("19. "));
        assert!(p.contains("exactly 1 new candidate as"));
        let sections: Vec<usize> = ["## Role", "## Evolution", "## Demonstrations", "## Output"]
            .iter()
            .map(|h| p.find(h).unwrap())
            .collect();
        assert!(sections.windows(2).all(|w| w[0] < w[1]));
    }
}
