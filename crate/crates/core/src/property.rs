//! Property identifiers, units and provenance-tagged property vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    BandGap,
    FormationEnergy,
    EnergyAboveHull,
    BulkModulus,
    ShearModulus,
    DielectricConstant,
    PiezoelectricCoefficient,
    ElectricalConductivity,
    Density,
    Seebeck,
    PowerFactor,
}

impl Property {
    pub const ALL: [Property; 11] = [
        Property::BandGap,
        Property::FormationEnergy,
        Property::EnergyAboveHull,
        Property::BulkModulus,
        Property::ShearModulus,
        Property::DielectricConstant,
        Property::PiezoelectricCoefficient,
        Property::ElectricalConductivity,
        Property::Density,
        Property::Seebeck,
        Property::PowerFactor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::BandGap => "band_gap",
            Property::FormationEnergy => "formation_energy",
            Property::EnergyAboveHull => "energy_above_hull",
            Property::BulkModulus => "bulk_modulus",
            Property::ShearModulus => "shear_modulus",
            Property::DielectricConstant => "dielectric_constant",
            Property::PiezoelectricCoefficient => "piezoelectric_coefficient",
            Property::ElectricalConductivity => "electrical_conductivity",
            Property::Density => "density",
            Property::Seebeck => "seebeck",
            Property::PowerFactor => "power_factor",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Property::BandGap => "eV",
            Property::FormationEnergy | Property::EnergyAboveHull => "eV/atom",
            Property::BulkModulus | Property::ShearModulus => "GPa",
            Property::DielectricConstant => "",
            Property::PiezoelectricCoefficient => "pC/N",
            Property::ElectricalConductivity => "S/cm",
            Property::Density => "g/cm^3",
            Property::Seebeck => "uV/K",
            Property::PowerFactor => "W/(m K^2)",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

/// Where a property value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reference,
    Derived,
    Surrogate,
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyValue {
    pub value: Option<f64>,
    pub source: Provenance,
}

impl PropertyValue {
    pub fn missing() -> Self {
        Self { value: None, source: Provenance::Missing }
    }

    pub fn new(value: f64, source: Provenance) -> Self {
        Self { value: Some(value), source }
    }
}

/// Per-property values for one candidate, in the fixed unit of each
/// [`Property`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyVector(BTreeMap<Property, PropertyValue>);

impl PropertyVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, property: Property, value: PropertyValue) {
        self.0.insert(property, value);
    }

    pub fn get(&self, property: Property) -> Option<&PropertyValue> {
        self.0.get(&property)
    }

    /// The numeric value, if present and not missing.
    pub fn value(&self, property: Property) -> Option<f64> {
        self.0.get(&property).and_then(|v| v.value)
    }

    pub fn source(&self, property: Property) -> Provenance {
        self.0.get(&property).map_or(Provenance::Missing, |v| v.source)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Property, &PropertyValue)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Property, PropertyValue)> for PropertyVector {
    fn from_iter<I: IntoIterator<Item = (Property, PropertyValue)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
