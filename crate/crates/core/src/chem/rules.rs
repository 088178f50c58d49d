//! The nineteen evolutionary generation rules.
//!
//! Eight rules have purely compositional semantics and are executable
//! against the composition + lattice data model; the rest are guidance text
//! that only reaches a generator through its prompt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{element_info, periodic_table, same_group_substitutes, ChemError, ElementInfo};
use crate::crystal::{reduced_composition, Composition, Site, Structure, StructureSource};
use crate::tasks::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleCapability {
    Concrete,
    PromptOnly,
}

/// One of the nineteen generation rules, numbered 1..=19.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RuleId(u8);

struct RuleText {
    name: &'static str,
    guidance: &'static str,
    schema: &'static str,
}

const RULES: [RuleText; 19] = [
    RuleText { name: "Same-group substitution", guidance: "swap an element for another member of its periodic group", schema: "A2B3 -> C2D3, C in group(A), D in group(B)" },
    RuleText { name: "Stoichiometry-preserving substitution", guidance: "keep every count and swap in chemically similar elements", schema: "A2B3C4 -> D2E3F4, D~A, E~B, F~C" },
    RuleText { name: "Oxidation-state substitution", guidance: "swap an element for one that adopts the same oxidation state", schema: "A(2+)B(-) -> C(2+)D(-)" },
    RuleText { name: "Functional-group substitution", guidance: "exchange a functional group for one with comparable chemistry", schema: "R-X -> R-Y, X~Y" },
    RuleText { name: "Motif replacement", guidance: "replace a structural fragment with one playing the same role", schema: "ABC-ring -> DEF-ring" },
    RuleText { name: "Prototype substitution", guidance: "keep the crystal prototype (for example perovskite ABX3) and change its elements", schema: "ABX3 -> CDY3" },
    RuleText { name: "Layered intercalation", guidance: "place guest atoms between the layers of a layered host", schema: "[ABC] -> [ABC].D" },
    RuleText { name: "Coordination mutation", guidance: "change the number of ligands around a central atom", schema: "A(L)4 -> A(L)6" },
    RuleText { name: "Redox variant", guidance: "shift the stoichiometry to a neighbouring redox configuration", schema: "A2B3 -> A3B4" },
    RuleText { name: "Structural isomer", guidance: "rearrange connectivity without changing the formula", schema: "A-B-C-D -> A-C-B-D" },
    RuleText { name: "Group-based recombination", guidance: "combine fragments taken from two known compounds", schema: "(A-B-C) + (D-E-F) -> A-E-C" },
    RuleText { name: "Surface functionalization", guidance: "attach a functional group to the surface of a known material", schema: "ABC -> ABC-X" },
    RuleText { name: "Template combinatorics", guidance: "fill the slots of a known formula template with compatible elements", schema: "ABX3 -> C-D-E3" },
    RuleText { name: "Inverse property conditioning", guidance: "propose compositions conditioned on the target property", schema: "target: high hardness => A2B" },
    RuleText { name: "Phase-diagram extrapolation", guidance: "propose a compound lying between two known stable phases", schema: "(A-B), (B-C) -> A-C" },
    RuleText { name: "Retrosynthetic forward design", guidance: "propose a plausible product of known precursors", schema: "A + B -> C" },
    RuleText { name: "Functional analog", guidance: "substitute a different compound that serves the same function", schema: "A2B3 (insulator) -> C4D6 (insulator)" },
    RuleText { name: "Size-compatible substitution", guidance: "replace a site with an element of similar size so the structure stays stable", schema: "ABX3 -> A'BX3, r(A') ~ r(A)" },
    RuleText { name: "Periodic-trend analog", guidance: "substitute neighbours in the same group so periodic trends are respected", schema: "A2B3 -> C2D3, C~A, D~B" },
];

const CONCRETE: [u8; 8] = [1, 2, 3, 6, 9, 13, 18, 19];

/// Maximum |Δ electronegativity| for two same-group elements to count as
/// chemically similar.
pub const SIMILAR_EN_DELTA: f64 = 0.5;

/// Allowed substitute/original mass ratio for size-compatible substitution
/// (a stand-in for an ionic-radius criterion).
pub const MASS_RATIO_RANGE: (f64, f64) = (0.5, 2.0);

impl RuleId {
    pub fn new(n: u8) -> Option<Self> {
        (1..=19).contains(&n).then_some(RuleId(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = RuleId> {
        (1..=19).map(RuleId)
    }

    pub fn concrete() -> impl Iterator<Item = RuleId> {
        CONCRETE.into_iter().map(RuleId)
    }

    pub fn capability(self) -> RuleCapability {
        if CONCRETE.contains(&self.0) {
            RuleCapability::Concrete
        } else {
            RuleCapability::PromptOnly
        }
    }

    pub fn name(self) -> &'static str {
        RULES[self.0 as usize - 1].name
    }

    pub fn schema(self) -> &'static str {
        RULES[self.0 as usize - 1].schema
    }

    /// One-line text used when the rule is injected into a prompt.
    pub fn prompt_text(self) -> String {
        let r = &RULES[self.0 as usize - 1];
        format!("{}. {}: {}. Schema: {}", self.0, r.name, r.guidance, r.schema)
    }
}

impl TryFrom<u8> for RuleId {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        RuleId::new(n).ok_or_else(|| format!("rule number {n} outside 1..=19"))
    }
}

impl From<RuleId> for u8 {
    fn from(r: RuleId) -> u8 {
        r.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.0)
    }
}

type Neighbourhood = fn(&ElementInfo) -> Vec<&'static str>;

fn same_group(e: &ElementInfo) -> Vec<&'static str> {
    same_group_substitutes(&e.symbol).unwrap_or_default()
}

fn similar(e: &ElementInfo) -> Vec<&'static str> {
    let Some(en) = e.electronegativity else {
        return Vec::new();
    };
    same_group(e)
        .into_iter()
        .filter(|s| {
            element_info(s)
                .ok()
                .and_then(|o| o.electronegativity)
                .is_some_and(|other| (other - en).abs() <= SIMILAR_EN_DELTA)
        })
        .collect()
}

fn same_oxidation_state(e: &ElementInfo) -> Vec<&'static str> {
    periodic_table()
        .iter()
        .filter(|o| o.symbol != e.symbol && e.shares_oxidation_state(o))
        .map(|o| o.symbol.as_str())
        .collect()
}

fn period_adjacent(e: &ElementInfo) -> Vec<&'static str> {
    same_group(e)
        .into_iter()
        .filter(|s| element_info(s).is_ok_and(|o| o.period.abs_diff(e.period) == 1))
        .collect()
}

fn prototype_partner(e: &ElementInfo) -> Vec<&'static str> {
    let mut out: BTreeSet<&'static str> = same_group(e).into_iter().collect();
    out.extend(same_oxidation_state(e));
    out.into_iter().collect()
}

fn size_compatible(e: &ElementInfo) -> Vec<&'static str> {
    let (lo, hi) = MASS_RATIO_RANGE;
    same_oxidation_state(e)
        .into_iter()
        .filter(|s| {
            element_info(s).is_ok_and(|o| {
                let ratio = o.atomic_mass / e.atomic_mass;
                (lo..=hi).contains(&ratio)
            })
        })
        .collect()
}

/// The most electronegative element when it has a negative oxidation state;
/// every other element is treated as a cation.
fn anion_of(elements: &[&str]) -> Option<&'static ElementInfo> {
    elements
        .iter()
        .filter_map(|s| element_info(s).ok())
        .filter(|e| e.electronegativity.is_some())
        .max_by(|a, b| a.electronegativity.partial_cmp(&b.electronegativity).unwrap())
        .filter(|e| e.common_oxidation_states.iter().any(|&s| s < 0))
}

fn relabel(parent: &Structure, mapping: &BTreeMap<String, String>) -> Result<Structure, ChemError> {
    let sites = parent
        .sites()
        .iter()
        .map(|s| {
            let el = mapping.get(s.element()).map(String::as_str).unwrap_or(s.element());
            Site::new(el, s.frac()).map_err(|_| ChemError::UnknownElement(el.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Structure::new(*parent.lattice(), sites, StructureSource::Generated)
        .map_err(|e| ChemError::NoValidSubstitute(e.to_string()))
}

/// How many of the parent's element types a substitution rule touches.
#[derive(Clone, Copy)]
enum Scope {
    /// A random non-empty subset of the attemptable elements.
    Subset,
    /// Every slot is refilled from its neighbourhood including itself;
    /// at least one must change.
    AllSlots,
    /// Exactly one cation element.
    OneCation,
}

fn substitute<R: Rng + ?Sized>(
    parent: &Structure,
    neighbourhood: Neighbourhood,
    scope: Scope,
    rng: &mut R,
) -> Result<Vec<Structure>, ChemError> {
    let elements = parent.elements();
    let pool: Vec<&str> = match scope {
        Scope::OneCation => {
            let anion = anion_of(&elements).map(|a| a.symbol.as_str());
            elements.iter().copied().filter(|e| Some(*e) != anion).collect()
        }
        _ => elements.clone(),
    };
    let options: Vec<(&str, Vec<&'static str>)> = pool
        .iter()
        .map(|&el| (el, element_info(el).map(neighbourhood).unwrap_or_default()))
        .filter(|(_, subs)| !subs.is_empty())
        .collect();
    if options.is_empty() {
        return Err(ChemError::NoValidSubstitute(parent.reduced_formula().to_string()));
    }

    let chosen: Vec<usize> = match scope {
        Scope::Subset => {
            let picked: Vec<usize> = (0..options.len()).filter(|_| rng.random_bool(0.5)).collect();
            if picked.is_empty() {
                vec![rng.random_range(0..options.len())]
            } else {
                picked
            }
        }
        Scope::AllSlots => (0..options.len()).collect(),
        Scope::OneCation => vec![rng.random_range(0..options.len())],
    };

    let mut taken: BTreeSet<String> = elements.iter().map(|s| s.to_string()).collect();
    let mut mapping = BTreeMap::new();
    for idx in chosen {
        let (el, subs) = &options[idx];
        let mut free: Vec<&str> = subs.iter().copied().filter(|s| !taken.contains(*s)).collect();
        if matches!(scope, Scope::AllSlots) {
            free.push(el);
        }
        let Some(&target) = free.choose(rng) else {
            continue;
        };
        if target != *el {
            taken.insert(target.to_string());
            mapping.insert(el.to_string(), target.to_string());
        }
    }
    if mapping.is_empty() {
        return Ok(Vec::new());
    }
    Ok(vec![relabel(parent, &mapping)?])
}

fn redox_variant<R: Rng + ?Sized>(parent: &Structure, rng: &mut R) -> Result<Vec<Structure>, ChemError> {
    let counts = parent.composition();
    let reduced = reduced_composition(&counts);
    let formula_units = counts.values().next().copied().unwrap_or(1) / reduced.values().next().copied().unwrap_or(1);
    let first: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
    for delta in [first, -first] {
        if reduced.values().any(|&n| n as i64 + delta < 1) {
            continue;
        }
        let shifted: Composition = reduced
            .iter()
            .map(|(el, &n)| (el.clone(), (n as i64 + delta) as u32 * formula_units))
            .collect();
        if reduced_composition(&shifted) == reduced {
            continue;
        }
        let mutant = Structure::on_grid(&shifted, *parent.lattice(), StructureSource::Generated)
            .map_err(|e| ChemError::NoValidSubstitute(e.to_string()))?;
        return Ok(vec![mutant]);
    }
    Ok(Vec::new())
}

/// Applies a concrete rule to `parent`. Lattice parameters are copied
/// unchanged; the result is empty when the rule was attemptable but produced
/// no distinct mutant.
pub fn apply_rule<R: Rng + ?Sized>(rule: RuleId, parent: &Structure, rng: &mut R) -> Result<Vec<Structure>, ChemError> {
    match rule.number() {
        1 => substitute(parent, same_group, Scope::Subset, rng),
        2 => substitute(parent, similar, Scope::Subset, rng),
        3 => substitute(parent, same_oxidation_state, Scope::Subset, rng),
        6 => substitute(parent, prototype_partner, Scope::OneCation, rng),
        9 => redox_variant(parent, rng),
        13 => substitute(parent, same_group, Scope::AllSlots, rng),
        18 => substitute(parent, size_compatible, Scope::OneCation, rng),
        19 => substitute(parent, period_adjacent, Scope::Subset, rng),
        n => Err(ChemError::PromptOnlyRule(n)),
    }
}

/// Whether the structure satisfies every element-containment, exclusion and
/// abundance filter of the task.
pub fn composition_passes_filters(structure: &Structure, task: &Task) -> bool {
    let elements = structure.elements();
    task.constraints()
        .iter()
        .filter_map(|c| c.composition_verdict(&elements))
        .all(|ok| ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{parse_formula, Lattice};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn structure(formula: &str) -> Structure {
        let lattice = Lattice::new(5.0, 5.0, 7.0, 90.0, 90.0, 120.0).unwrap();
        Structure::on_grid(&parse_formula(formula).unwrap(), lattice, StructureSource::Reference).unwrap()
    }

    fn mutants_over_seeds(rule: u8, parent: &Structure, seeds: u64) -> Vec<Structure> {
        (0..seeds)
            .flat_map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                apply_rule(RuleId::new(rule).unwrap(), parent, &mut rng).unwrap()
            })
            .collect()
    }

    #[test]
    fn capabilities() {
        let concrete: Vec<u8> = RuleId::all()
            .filter(|r| r.capability() == RuleCapability::Concrete)
            .map(RuleId::number)
            .collect();
        assert_eq!(concrete, [1, 2, 3, 6, 9, 13, 18, 19]);
        assert_eq!(RuleId::all().count(), 19);
        assert!(RuleId::new(0).is_none() && RuleId::new(20).is_none());
    }

    #[test]
    fn prompt_only_rule_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = apply_rule(RuleId::new(4).unwrap(), &structure("Ga2O3"), &mut rng).unwrap_err();
        assert_eq!(err, ChemError::PromptOnlyRule(4));
    }

    #[test]
    fn same_group_reaches_indium_oxide() {
        let parent = structure("Ga2O3");
        let mutants = mutants_over_seeds(1, &parent, 200);
        let hit = mutants.iter().find(|m| m.reduced_formula() == "In2O3").expect("Ga->In reachable");
        assert_eq!(hit.lattice(), parent.lattice());
        let mut expected: Vec<u32> = parent.composition().into_values().collect();
        expected.sort();
        for m in &mutants {
            let mut counts: Vec<u32> = m.composition().into_values().collect();
            counts.sort();
            assert_eq!(counts, expected);
        }
    }

    #[test]
    fn same_group_reaches_alumina() {
        assert!(mutants_over_seeds(1, &structure("Ga2O3"), 200).iter().any(|m| m.reduced_formula() == "Al2O3"));
    }

    #[test]
    fn oxidation_state_swap_reaches_strontium() {
        let parent = structure("CaTiO3");
        let mutants = mutants_over_seeds(3, &parent, 2000);
        assert!(mutants.iter().any(|m| m.elements().contains(&"Sr") && !m.elements().contains(&"Ca")));
    }

    #[test]
    fn redox_variant_shifts_counts() {
        let parent = structure("Ga2O3");
        let formulas: BTreeSet<String> = mutants_over_seeds(9, &parent, 20)
            .iter()
            .map(|m| m.reduced_formula().to_string())
            .collect();
        assert!(formulas.contains("Ga3O4"));
        assert!(formulas.contains("GaO2"));
        assert_eq!(formulas.len(), 2);
    }

    #[test]
    fn redox_variant_on_one_to_one_is_empty() {
        assert!(mutants_over_seeds(9, &structure("ZnO"), 10).is_empty());
    }

    #[test]
    fn prototype_substitution_keeps_anion() {
        for m in mutants_over_seeds(6, &structure("BaTiO3"), 200) {
            assert!(m.elements().contains(&"O"));
            assert_eq!(m.composition()["O"], 3);
        }
    }

    #[test]
    fn size_compatible_mass_ratio() {
        let parent = structure("BaTiO3");
        for m in mutants_over_seeds(18, &parent, 200) {
            let new: Vec<&str> = m.elements().into_iter().filter(|e| !parent.elements().contains(e)).collect();
            let old: Vec<&str> = parent.elements().into_iter().filter(|e| !m.elements().contains(e)).collect();
            assert_eq!((new.len(), old.len()), (1, 1));
            let ratio = element_info(new[0]).unwrap().atomic_mass / element_info(old[0]).unwrap().atomic_mass;
            assert!((0.5..=2.0).contains(&ratio));
        }
    }

    #[test]
    fn period_adjacent_only() {
        let parent = structure("Ga2O3");
        for m in mutants_over_seeds(19, &parent, 200) {
            for el in m.elements() {
                assert!(["Ga", "Al", "In", "O", "S"].contains(&el), "{el}");
            }
        }
    }

    #[test]
    fn noble_gas_has_no_similar_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = apply_rule(RuleId::new(2).unwrap(), &structure("He"), &mut rng).unwrap_err();
        assert!(matches!(err, ChemError::NoValidSubstitute(_)));
    }
}
