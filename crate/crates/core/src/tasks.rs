//! Discovery tasks, per-constraint rewards and the composite score.
//!
//! A constraint's reward Φ is 1 when satisfied and a negative normalized
//! distance to feasibility otherwise, so Φ ≥ 0 exactly when the constraint
//! holds. The composite score is the weighted sum of the Φ values.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem;
use crate::crystal::Structure;
use crate::property::{Property, PropertyVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("task file {path}: {reason}")]
    Parse { path: String, reason: String },
}

/// Lower bound on the normalizer of threshold constraints.
pub const MIN_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Min(f64),
    Max(f64),
    Range(f64, f64),
    ContainsAny(Vec<String>),
    Excludes(Vec<String>),
    EarthAbundantOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    property: Option<Property>,
    condition: Condition,
    weight: f64,
}

impl Constraint {
    fn numeric(property: Property, condition: Condition) -> Result<Self, TaskError> {
        let c = Self { property: Some(property), condition, weight: 1.0 };
        c.validate()?;
        Ok(c)
    }

    pub fn min(property: Property, threshold: f64) -> Result<Self, TaskError> {
        Self::numeric(property, Condition::Min(threshold))
    }

    pub fn max(property: Property, threshold: f64) -> Result<Self, TaskError> {
        Self::numeric(property, Condition::Max(threshold))
    }

    pub fn range(property: Property, lower: f64, upper: f64) -> Result<Self, TaskError> {
        Self::numeric(property, Condition::Range(lower, upper))
    }

    pub fn contains_any<S: AsRef<str>>(elements: &[S]) -> Result<Self, TaskError> {
        let c = Self { property: None, condition: Condition::ContainsAny(symbols(elements)), weight: 1.0 };
        c.validate()?;
        Ok(c)
    }

    pub fn excludes<S: AsRef<str>>(elements: &[S]) -> Result<Self, TaskError> {
        let c = Self { property: None, condition: Condition::Excludes(symbols(elements)), weight: 1.0 };
        c.validate()?;
        Ok(c)
    }

    pub fn earth_abundant_only() -> Self {
        Self { property: None, condition: Condition::EarthAbundantOnly, weight: 1.0 }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn property(&self) -> Option<Property> {
        self.property
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_numeric(&self) -> bool {
        self.property.is_some()
    }

    fn validate(&self) -> Result<(), TaskError> {
        let bad = |msg: String| Err(TaskError::InvalidConstraint(msg));
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return bad(format!("{self}: weight must be finite and non-negative"));
        }
        match &self.condition {
            Condition::Min(t) | Condition::Max(t) if !t.is_finite() => bad(format!("{self}: non-finite threshold")),
            Condition::Range(l, u) if !(l.is_finite() && u.is_finite() && l < u) => {
                bad(format!("{self}: range needs finite lower < upper"))
            }
            Condition::ContainsAny(list) | Condition::Excludes(list) => {
                if list.is_empty() {
                    return bad(format!("{self}: empty element list"));
                }
                match list.iter().find(|s| !chem::is_known_element(s)) {
                    Some(s) => bad(format!("unknown element `{s}`")),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Whether `value` satisfies a numeric constraint; element constraints
    /// return `None`.
    pub fn satisfied_by(&self, value: f64) -> Option<bool> {
        match self.condition {
            Condition::Min(t) => Some(value >= t),
            Condition::Max(t) => Some(value <= t),
            Condition::Range(l, u) => Some(value >= l && value <= u),
            _ => None,
        }
    }

    /// Verdict of an element constraint for a set of element symbols;
    /// numeric constraints return `None`.
    pub fn composition_verdict(&self, elements: &[&str]) -> Option<bool> {
        match &self.condition {
            Condition::ContainsAny(list) => Some(elements.iter().any(|e| list.iter().any(|l| l == e))),
            Condition::Excludes(list) => Some(!elements.iter().any(|e| list.iter().any(|l| l == e))),
            Condition::EarthAbundantOnly => Some(
                elements
                    .iter()
                    .all(|e| chem::element_info(e).is_ok_and(|info| info.earth_abundant)),
            ),
            _ => None,
        }
    }
}

fn symbols<S: AsRef<str>>(elements: &[S]) -> Vec<String> {
    elements.iter().map(|s| chem::normalize_symbol(s.as_ref())).collect()
}

fn trim_float(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = |p: Property| {
            if p.unit().is_empty() {
                String::new()
            } else {
                format!(" {}", p.unit())
            }
        };
        match (&self.condition, self.property) {
            (Condition::Min(t), Some(p)) => write!(f, "{p} >= {}{}", trim_float(*t), unit(p)),
            (Condition::Max(t), Some(p)) => write!(f, "{p} <= {}{}", trim_float(*t), unit(p)),
            (Condition::Range(l, u), Some(p)) => {
                write!(f, "{p} in [{}, {}]{}", trim_float(*l), trim_float(*u), unit(p))
            }
            (Condition::ContainsAny(list), _) => write!(f, "contains any of {}", list.join(", ")),
            (Condition::Excludes(list), _) => write!(f, "excludes {}", list.join(", ")),
            (Condition::EarthAbundantOnly, _) => f.write_str("earth-abundant elements only"),
            (_, None) => f.write_str("invalid constraint"),
        }
    }
}

/// Normalized reward for one numeric constraint. Missing and non-finite
/// values score −1.
pub fn phi(value: Option<f64>, constraint: &Constraint) -> f64 {
    let Some(v) = value.filter(|v| v.is_finite()) else {
        return -1.0;
    };
    let (dist, scale) = match constraint.condition {
        Condition::Min(t) => ((t - v).max(0.0), t.abs().max(MIN_SCALE)),
        Condition::Max(t) => ((v - t).max(0.0), t.abs().max(MIN_SCALE)),
        Condition::Range(l, u) => ((l - v).max(0.0).max(v - u), u - l),
        _ => return -1.0,
    };
    if dist <= 0.0 {
        1.0
    } else {
        -(dist / scale).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// True when `a` is at least as good as `b`.
    pub fn no_worse(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a >= b,
            Direction::Minimize => a <= b,
        }
    }

    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub property: Property,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoAxes {
    pub x: Axis,
    pub y: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    name: String,
    description: String,
    constraints: Vec<Constraint>,
    pareto: ParetoAxes,
}

impl Task {
    /// Validates the constraints and normalizes their weights to sum to 1.
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        mut constraints: Vec<Constraint>,
        pareto: ParetoAxes,
    ) -> Result<Self, TaskError> {
        if !constraints.iter().any(Constraint::is_numeric) {
            return Err(TaskError::InvalidConstraint("a task needs at least one numeric constraint".into()));
        }
        for c in &constraints {
            c.validate()?;
        }
        let total: f64 = constraints.iter().map(|c| c.weight).sum();
        if total <= 0.0 {
            return Err(TaskError::InvalidConstraint("weights sum to zero".into()));
        }
        if (total - 1.0).abs() > 1e-12 {
            for c in &mut constraints {
                c.weight /= total;
            }
        }
        Ok(Self { name: name.into(), description: description.into(), constraints, pareto })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn pareto(&self) -> ParetoAxes {
        self.pareto
    }

    /// Properties referenced by numeric constraints, in constraint order.
    pub fn constrained_properties(&self) -> Vec<Property> {
        let mut out = Vec::new();
        for p in self.constraints.iter().filter_map(Constraint::property) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    pub fn to_toml(&self) -> String {
        let file = TaskFile {
            task: Header { name: self.name.clone(), description: self.description.clone() },
            constraint: self.constraints.iter().map(ConstraintSpec::from).collect(),
            pareto: self.pareto,
        };
        toml::to_string(&file).expect("task serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, TaskError> {
        parse_task(text, "<inline>")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintScore {
    pub constraint: String,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub per_constraint_phi: Vec<ConstraintScore>,
    pub composite: f64,
    pub success: bool,
}

impl ScoreBreakdown {
    fn from_phis(task: &Task, phis: Vec<f64>) -> Self {
        let composite = task.constraints.iter().zip(&phis).map(|(c, p)| c.weight * p).sum();
        let success = phis.iter().all(|&p| p >= 0.0);
        let per_constraint_phi = task
            .constraints
            .iter()
            .zip(phis)
            .map(|(c, phi)| ConstraintScore { constraint: c.to_string(), phi })
            .collect();
        Self { per_constraint_phi, composite, success }
    }

    /// Score of a candidate that never became a valid structure: Φ = −1 on
    /// every constraint.
    pub fn rejected(task: &Task) -> Self {
        Self::from_phis(task, vec![-1.0; task.constraints.len()])
    }
}

/// Scores a property vector and element set against every constraint.
pub fn composite_score(props: &PropertyVector, elements: &[&str], task: &Task) -> ScoreBreakdown {
    let phis = task
        .constraints
        .iter()
        .map(|c| match c.property {
            Some(p) => phi(props.value(p), c),
            None => match c.composition_verdict(elements) {
                Some(true) => 1.0,
                _ => -1.0,
            },
        })
        .collect();
    ScoreBreakdown::from_phis(task, phis)
}

pub fn score_structure(props: &PropertyVector, structure: &Structure, task: &Task) -> ScoreBreakdown {
    composite_score(props, &structure.elements(), task)
}

#[derive(Serialize, Deserialize)]
struct TaskFile {
    task: Header,
    constraint: Vec<ConstraintSpec>,
    pareto: ParetoAxes,
}

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    #[serde(default)]
    description: String,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Min,
    Max,
    Range,
    ContainsAny,
    Excludes,
    EarthAbundantOnly,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    property: Option<Property>,
    kind: Kind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bounds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

impl From<&Constraint> for ConstraintSpec {
    fn from(c: &Constraint) -> Self {
        let (kind, bounds, elements) = match &c.condition {
            Condition::Min(t) => (Kind::Min, vec![*t], vec![]),
            Condition::Max(t) => (Kind::Max, vec![*t], vec![]),
            Condition::Range(l, u) => (Kind::Range, vec![*l, *u], vec![]),
            Condition::ContainsAny(list) => (Kind::ContainsAny, vec![], list.clone()),
            Condition::Excludes(list) => (Kind::Excludes, vec![], list.clone()),
            Condition::EarthAbundantOnly => (Kind::EarthAbundantOnly, vec![], vec![]),
        };
        Self { property: c.property, kind, bounds, elements, weight: Some(c.weight) }
    }
}

impl ConstraintSpec {
    fn into_constraint(self) -> Result<Constraint, TaskError> {
        let bad = |m: &str| TaskError::InvalidConstraint(m.to_string());
        let numeric = |n: usize| -> Result<Property, TaskError> {
            if self.bounds.len() != n {
                return Err(bad(&format!("expected {n} bound(s), found {}", self.bounds.len())));
            }
            self.property.ok_or_else(|| bad("numeric constraint without property"))
        };
        let c = match self.kind {
            Kind::Min => Constraint::min(numeric(1)?, self.bounds[0])?,
            Kind::Max => Constraint::max(numeric(1)?, self.bounds[0])?,
            Kind::Range => Constraint::range(numeric(2)?, self.bounds[0], self.bounds[1])?,
            Kind::ContainsAny => Constraint::contains_any(&self.elements)?,
            Kind::Excludes => Constraint::excludes(&self.elements)?,
            Kind::EarthAbundantOnly => Constraint::earth_abundant_only(),
        };
        let c = c.with_weight(self.weight.unwrap_or(1.0));
        c.validate()?;
        Ok(c)
    }
}

fn parse_task(text: &str, origin: &str) -> Result<Task, TaskError> {
    let file: TaskFile = toml::from_str(text).map_err(|e| TaskError::Parse {
        path: origin.to_string(),
        reason: e.message().to_string(),
    })?;
    let constraints = file
        .constraint
        .into_iter()
        .map(ConstraintSpec::into_constraint)
        .collect::<Result<Vec<_>, _>>()?;
    Task::new(file.task.name, file.task.description, constraints, file.pareto)
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../data/tasks/", $name, ".toml")))),*]
    };
}

const BUILTINS: &[(&str, &str)] = builtin![
    "wide_bandgap",
    "saw_baw",
    "high_k_dielectric",
    "solid_state_electrolyte",
    "piezo_energy_harvester",
    "transparent_conductor",
    "insulating_dielectric",
    "photovoltaic_absorber",
    "hard_coating",
    "hard_stiff_ceramic",
    "aerospace_structural",
    "acousto_optic",
    "low_density_structural",
    "toxic_free_perovskite",
    "photovoltaic_absorber_strict",
    "hard_coating_strict",
    "transparent_conductor_strict",
    "aerospace_structural_strict",
];

/// The fourteen benchmark task names.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n).filter(|n| !n.ends_with("_strict"))
}

/// Alternate task variants with the tighter thresholds of the longer task
/// descriptions.
pub fn strict_variant_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n).filter(|n| n.ends_with("_strict"))
}

pub fn builtin_task(name: &str) -> Result<Task, TaskError> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| TaskError::UnknownTask(name.to_string()))?;
    parse_task(text, name)
}

/// Loads a builtin by name, or a TOML task file by path.
pub fn load_task(reference: &str) -> Result<Task, TaskError> {
    if BUILTINS.iter().any(|(n, _)| *n == reference) {
        return builtin_task(reference);
    }
    let path = Path::new(reference);
    if !path.is_file() {
        return Err(TaskError::UnknownTask(reference.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| TaskError::Parse {
        path: reference.to_string(),
        reason: e.to_string(),
    })?;
    parse_task(&text, reference)
}
