//! Hierarchical property prediction.
//!
//! Each property is resolved independently: exact reference match, then a
//! same-prototype reference match, then quantities derived from the
//! structure or from other properties, then the first capable surrogate.
//! Anything still unresolved is reported as missing.

mod remote;
mod synthetic;

pub use remote::{RemoteReference, RemoteSurrogate, RetryPolicy};
pub use synthetic::SyntheticSurrogate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::crystal::{canonical_formula, parse_formula, reduced_composition, Composition, Structure};
use crate::property::{Property, PropertyValue, PropertyVector, Provenance};
use crate::tasks::Task;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Seebeck coefficient is zero")]
    ZeroSeebeck,
    #[error("reference database: {0}")]
    InvalidDb(String),
    #[error("surrogate `{name}` failed: {reason}")]
    Surrogate { name: String, reason: String },
}

const FIXTURE_DB: &str = include_str!("../../data/reference.csv");

/// Properties a reference database row may carry, in CSV column order.
pub const DB_COLUMNS: [Property; 9] = [
    Property::BandGap,
    Property::FormationEnergy,
    Property::EnergyAboveHull,
    Property::BulkModulus,
    Property::ShearModulus,
    Property::DielectricConstant,
    Property::PiezoelectricCoefficient,
    Property::Seebeck,
    Property::PowerFactor,
];

/// Known values for one reference formula.
pub type Fragment = BTreeMap<Property, f64>;

/// Element set plus sorted reduced counts (the anonymized prototype, so
/// BaTiO3 and SrZrO3 both have prototype [1, 1, 3]).
type PrototypeKey = (Vec<String>, Vec<u32>);

fn prototype_key(composition: &Composition) -> PrototypeKey {
    let reduced = reduced_composition(composition);
    let elements = reduced.keys().cloned().collect();
    let mut counts: Vec<u32> = reduced.values().copied().collect();
    counts.sort_unstable();
    (elements, counts)
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceDb {
    entries: BTreeMap<String, Fragment>,
    by_prototype: HashMap<PrototypeKey, BTreeSet<String>>,
}

impl ReferenceDb {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled ~100-row fixture database.
    pub fn fixture() -> Self {
        Self::from_csv(FIXTURE_DB).expect("bundled reference database is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| OracleError::InvalidDb(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Self, OracleError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| OracleError::InvalidDb(e.to_string()))?.clone();
        let formula_col = headers
            .iter()
            .position(|h| h == "formula")
            .ok_or_else(|| OracleError::InvalidDb("missing `formula` column".into()))?;
        let columns: Vec<(usize, Property)> = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.parse::<Property>().ok().filter(|p| DB_COLUMNS.contains(p)).map(|p| (i, p)))
            .collect();
        let mut db = Self::default();
        for (row_no, record) in reader.records().enumerate() {
            let record = record.map_err(|e| OracleError::InvalidDb(e.to_string()))?;
            let line = row_no + 2;
            let raw = record.get(formula_col).unwrap_or("");
            let formula =
                canonical_formula(raw).map_err(|e| OracleError::InvalidDb(format!("line {line}: `{raw}`: {e}")))?;
            let mut fragment = Fragment::new();
            for &(col, property) in &columns {
                let cell = record.get(col).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                let value: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| OracleError::InvalidDb(format!("line {line}: bad {property} value `{cell}`")))?;
                fragment.insert(property, value);
            }
            db.insert(&formula, fragment)?;
        }
        Ok(db)
    }

    /// Adds an entry under a canonical formula; duplicates are an error.
    pub fn insert(&mut self, formula: &str, fragment: Fragment) -> Result<(), OracleError> {
        let formula = canonical_formula(formula).map_err(|e| OracleError::InvalidDb(format!("`{formula}`: {e}")))?;
        if self.entries.contains_key(&formula) {
            return Err(OracleError::InvalidDb(format!("duplicate formula {formula}")));
        }
        let composition = parse_formula(&formula).map_err(|e| OracleError::InvalidDb(e.to_string()))?;
        self.by_prototype.entry(prototype_key(&composition)).or_default().insert(formula.clone());
        self.entries.insert(formula, fragment);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, formula: &str) -> bool {
        lookup_exact(self, formula).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Fragment)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Exact match on the canonical form of `formula`.
pub fn lookup_exact<'a>(db: &'a ReferenceDb, formula: &str) -> Option<&'a Fragment> {
    let key = canonical_formula(formula).ok()?;
    db.entries.get(&key)
}

/// Entry with the same element set and anonymized prototype as `s`; ties go
/// to the lexicographically smallest formula.
pub fn lookup_similar<'a>(db: &'a ReferenceDb, s: &Structure) -> Option<(&'a str, &'a Fragment)> {
    let formulas = db.by_prototype.get(&prototype_key(&s.composition()))?;
    let first = formulas.iter().next()?;
    db.entries.get_key_value(first).map(|(k, v)| (k.as_str(), v))
}

/// Electrical conductivity in S/cm from a Seebeck coefficient in μV/K and a
/// power factor in W·m⁻¹·K⁻², using σ = PF / S².
pub fn conductivity_from(seebeck_uv_per_k: f64, power_factor: f64) -> Result<f64, OracleError> {
    if seebeck_uv_per_k == 0.0 {
        return Err(OracleError::ZeroSeebeck);
    }
    let s = seebeck_uv_per_k / 1e6;
    let sigma_si = power_factor / (s * s);
    Ok(sigma_si / 100.0)
}

/// A property predictor consulted when the reference database has no value.
/// Implementations must be deterministic and shareable across threads.
pub trait Surrogate: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> &[Property];

    fn predict(&self, structure: &Structure, property: Property) -> Result<f64, OracleError>;

    /// Predicts several properties at once; remote models override this to
    /// make a single request.
    fn predict_many(&self, structure: &Structure, properties: &[Property]) -> Result<BTreeMap<Property, f64>, OracleError> {
        properties.iter().map(|&p| self.predict(structure, p).map(|v| (p, v))).collect()
    }

    fn can_predict(&self, property: Property) -> bool {
        self.capabilities().contains(&property)
    }
}

/// Properties needed to score and report a candidate for `task`.
pub fn needed_properties(task: &Task) -> BTreeSet<Property> {
    let mut needed: BTreeSet<Property> = task.constrained_properties().into_iter().collect();
    needed.insert(Property::EnergyAboveHull);
    needed.insert(Property::Density);
    let axes = task.pareto();
    needed.insert(axes.x.property);
    needed.insert(axes.y.property);
    needed
}

/// Reference data and surrogates wired together.
#[derive(Default)]
pub struct Oracle {
    db: ReferenceDb,
    remote: Option<RemoteReference>,
    surrogates: Vec<Box<dyn Surrogate>>,
}

impl Oracle {
    pub fn new(db: ReferenceDb) -> Self {
        Self { db, remote: None, surrogates: Vec::new() }
    }

    pub fn with_remote(mut self, remote: RemoteReference) -> Self {
        self.remote = Some(remote);
        self
    }

    pub fn with_surrogate(mut self, surrogate: impl Surrogate + 'static) -> Self {
        self.surrogates.push(Box::new(surrogate));
        self
    }

    pub fn db(&self) -> &ReferenceDb {
        &self.db
    }

    pub fn predict(&self, structure: &Structure, needed: &BTreeSet<Property>) -> PropertyVector {
        predict(structure, needed, &self.db, self.remote.as_ref(), &self.surrogates)
    }
}

struct Resolver<'a> {
    structure: &'a Structure,
    exact: Option<Fragment>,
    similar: Option<&'a Fragment>,
    surrogates: &'a [Box<dyn Surrogate>],
    surrogate_cache: HashMap<usize, BTreeMap<Property, f64>>,
}

impl Resolver<'_> {
    /// Database and surrogate resolution, without derivation.
    fn direct(&mut self, property: Property) -> Option<PropertyValue> {
        if let Some(&v) = self.exact.as_ref().and_then(|f| f.get(&property)) {
            return Some(PropertyValue::new(v, Provenance::Reference));
        }
        if let Some(&v) = self.similar.and_then(|f| f.get(&property)) {
            return Some(PropertyValue::new(v, Provenance::Reference));
        }
        self.surrogate(property)
    }

    fn surrogate(&mut self, property: Property) -> Option<PropertyValue> {
        let (idx, surrogate) = self.surrogates.iter().enumerate().find(|(_, s)| s.can_predict(property))?;
        if let Some(cached) = self.surrogate_cache.get(&idx) {
            return cached.get(&property).map(|&v| PropertyValue::new(v, Provenance::Surrogate));
        }
        match surrogate.predict(self.structure, property) {
            Ok(v) if v.is_finite() => Some(PropertyValue::new(v, Provenance::Surrogate)),
            Ok(v) => {
                log::warn!("surrogate {} returned non-finite {property} = {v}", surrogate.name());
                None
            }
            Err(e) => {
                log::warn!("{e}; treating {property} as missing");
                None
            }
        }
    }

    fn prefetch(&mut self, pending: &[Property]) {
        for (idx, surrogate) in self.surrogates.iter().enumerate() {
            let wanted: Vec<Property> = pending.iter().copied().filter(|p| surrogate.can_predict(*p)).collect();
            if wanted.len() < 2 {
                continue;
            }
            match surrogate.predict_many(self.structure, &wanted) {
                Ok(values) => {
                    self.surrogate_cache.insert(idx, values);
                }
                Err(e) => {
                    log::warn!("{e}; treating its properties as missing");
                    self.surrogate_cache.insert(idx, BTreeMap::new());
                }
            }
        }
    }
}

/// Resolves every property in `needed` for one structure.
pub fn predict(
    structure: &Structure,
    needed: &BTreeSet<Property>,
    db: &ReferenceDb,
    remote: Option<&RemoteReference>,
    surrogates: &[Box<dyn Surrogate>],
) -> PropertyVector {
    let formula = structure.reduced_formula();
    let mut exact = lookup_exact(db, formula).cloned();
    let needs_db = |p: &Property| DB_COLUMNS.contains(p);
    let local_complete = exact.as_ref().is_some_and(|f| needed.iter().filter(|p| needs_db(p)).all(|p| f.contains_key(p)));
    if !local_complete {
        if let Some(fetched) = remote.and_then(|r| r.fetch(formula)) {
            let merged = exact.get_or_insert_with(Fragment::new);
            for (p, v) in fetched {
                merged.entry(p).or_insert(v);
            }
        }
    }
    let mut resolver = Resolver {
        structure,
        exact,
        similar: lookup_similar(db, structure).map(|(_, f)| f),
        surrogates,
        surrogate_cache: HashMap::new(),
    };

    let mut pending: Vec<Property> = needed
        .iter()
        .copied()
        .filter(|p| *p != Property::Density)
        .filter(|p| {
            let in_db = |f: &Fragment| f.contains_key(p);
            !(resolver.exact.as_ref().is_some_and(in_db) || resolver.similar.is_some_and(in_db))
        })
        .collect();
    if pending.contains(&Property::ElectricalConductivity) {
        pending.extend([Property::Seebeck, Property::PowerFactor]);
    }
    resolver.prefetch(&pending);

    let mut out = PropertyVector::new();
    for &property in needed {
        let value = match property {
            Property::Density => match structure.density() {
                Ok(rho) => PropertyValue::new(rho, Provenance::Derived),
                Err(_) => PropertyValue::missing(),
            },
            Property::ElectricalConductivity => {
                let derived = match (resolver.direct(Property::Seebeck), resolver.direct(Property::PowerFactor)) {
                    (Some(s), Some(pf)) => conductivity_from(s.value.unwrap_or(0.0), pf.value.unwrap_or(0.0)).ok(),
                    _ => None,
                };
                match derived {
                    Some(sigma) => PropertyValue::new(sigma, Provenance::Derived),
                    None => resolver.direct(property).unwrap_or_else(PropertyValue::missing),
                }
            }
            _ => resolver.direct(property).unwrap_or_else(PropertyValue::missing),
        };
        out.insert(property, value);
    }
    out
}
