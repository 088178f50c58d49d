//! Periodic-table knowledge base and the composition mutation operators.
//!
//! The element table ships as a CSV resource compiled into the crate. A
//! different table (same header) can be installed once, before first use,
//! with [`install_table`].

mod rules;

pub use rules::{apply_rule, composition_passes_filters, RuleCapability, RuleId};

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

const BUNDLED_TABLE: &str = include_str!("../../data/elements.csv");

/// Version tag of the bundled element table.
pub const TABLE_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChemError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("rule {0} is prompt-only and has no executable operator")]
    PromptOnlyRule(u8),
    #[error("no valid substitute for any element of {0}")]
    NoValidSubstitute(String),
    #[error("invalid element table: {0}")]
    InvalidTable(String),
    #[error("an element table is already installed")]
    TableAlreadyInstalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementInfo {
    pub symbol: String,
    pub atomic_number: u8,
    pub group: u8,
    pub period: u8,
    /// Standard atomic weight in amu.
    pub atomic_mass: f64,
    /// Pauling electronegativity; absent for the lighter noble gases.
    pub electronegativity: Option<f64>,
    pub common_oxidation_states: Vec<i8>,
    pub earth_abundant: bool,
    pub toxic: bool,
}

impl ElementInfo {
    pub fn shares_oxidation_state(&self, other: &ElementInfo) -> bool {
        self.common_oxidation_states
            .iter()
            .any(|s| other.common_oxidation_states.contains(s))
    }
}

#[derive(Deserialize)]
struct Row {
    symbol: String,
    z: u8,
    group: u8,
    period: u8,
    mass: f64,
    electronegativity: Option<f64>,
    oxidation_states: Option<String>,
    earth_abundant: bool,
    toxic: bool,
}

/// Immutable element lookup table, ordered by atomic number.
#[derive(Debug, Clone)]
pub struct PeriodicTable {
    elements: Vec<ElementInfo>,
    by_symbol: HashMap<String, usize>,
}

impl PeriodicTable {
    pub fn from_csv(text: &str) -> Result<Self, ChemError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut elements = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| ChemError::InvalidTable(e.to_string()))?;
            if !(1..=18).contains(&row.group) || !(1..=7).contains(&row.period) {
                return Err(ChemError::InvalidTable(format!(
                    "{}: group/period out of range",
                    row.symbol
                )));
            }
            let common_oxidation_states = match row.oxidation_states.as_deref() {
                None | Some("") => Vec::new(),
                Some(list) => list
                    .split(';')
                    .map(|s| s.trim().parse::<i8>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| ChemError::InvalidTable(format!("{}: {e}", row.symbol)))?,
            };
            elements.push(ElementInfo {
                symbol: row.symbol,
                atomic_number: row.z,
                group: row.group,
                period: row.period,
                atomic_mass: row.mass,
                electronegativity: row.electronegativity,
                common_oxidation_states,
                earth_abundant: row.earth_abundant,
                toxic: row.toxic,
            });
        }
        elements.sort_by_key(|e| e.atomic_number);
        let mut by_symbol = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if by_symbol.insert(e.symbol.clone(), i).is_some() {
                return Err(ChemError::InvalidTable(format!("duplicate symbol {}", e.symbol)));
            }
        }
        if elements.is_empty() {
            return Err(ChemError::InvalidTable("no rows".into()));
        }
        Ok(Self { elements, by_symbol })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ChemError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ChemError::InvalidTable(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv(&text)
    }

    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_TABLE).expect("bundled element table is valid")
    }

    pub fn get(&self, symbol: &str) -> Option<&ElementInfo> {
        self.by_symbol.get(symbol).map(|&i| &self.elements[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementInfo> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

static TABLE: OnceLock<PeriodicTable> = OnceLock::new();

/// The process-wide element table (the bundled one unless another was
/// installed first).
pub fn periodic_table() -> &'static PeriodicTable {
    TABLE.get_or_init(PeriodicTable::bundled)
}

/// Replaces the bundled table. Must run before anything reads the table.
pub fn install_table(table: PeriodicTable) -> Result<(), ChemError> {
    TABLE.set(table).map_err(|_| ChemError::TableAlreadyInstalled)
}

pub fn element_info(symbol: &str) -> Result<&'static ElementInfo, ChemError> {
    periodic_table()
        .get(symbol)
        .ok_or_else(|| ChemError::UnknownElement(symbol.to_string()))
}

pub fn is_known_element(symbol: &str) -> bool {
    periodic_table().get(symbol).is_some()
}

/// All other elements of the same group, ordered by atomic number.
pub fn same_group_substitutes(symbol: &str) -> Result<Vec<&'static str>, ChemError> {
    let info = element_info(symbol)?;
    Ok(periodic_table()
        .iter()
        .filter(|e| e.group == info.group && e.symbol != info.symbol)
        .map(|e| e.symbol.as_str())
        .collect())
}

/// Canonical capitalization of a symbol-like token (`"zn"` -> `"Zn"`).
pub fn normalize_symbol(raw: &str) -> String {
    let mut chars = raw.trim().chars();
    match chars.next() {
        Some(first) => first
            .to_uppercase()
            .chain(chars.flat_map(|c| c.to_lowercase()))
            .collect(),
        None => String::new(),
    }
}
