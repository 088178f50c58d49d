//! Deterministic stand-in for trained property models.
//!
//! Values come from a handful of composition descriptors passed through a
//! logistic squash into each property's plausible range, plus a seeded
//! per-(formula, property) jitter. The numbers are plausible, not physical.

use crate::chem::element_info;
use crate::crystal::Structure;
use crate::property::Property;

use super::{OracleError, Surrogate};

const CAPABILITIES: [Property; 9] = [
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

/// Scale of the hash jitter inside the logistic argument.
const JITTER: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Descriptor {
    /// Mass-weighted mean Pauling electronegativity / 4.
    en: f64,
    /// Atom-fraction mean group / 18.
    group: f64,
    /// Atom-fraction mean period / 7.
    period: f64,
    /// Density in g/cm³ / 10, clamped to [0, 2].
    density: f64,
}

fn descriptor(s: &Structure) -> Descriptor {
    let (mut mass, mut en_mass, mut group, mut period, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for site in s.sites() {
        let info = element_info(site.element()).expect("structure elements are known");
        mass += info.atomic_mass;
        en_mass += info.atomic_mass * info.electronegativity.unwrap_or(0.0);
        group += info.group as f64;
        period += info.period as f64;
        n += 1.0;
    }
    let density = s.density().unwrap_or(0.0);
    Descriptor {
        en: en_mass / mass / 4.0,
        group: group / n / 18.0,
        period: period / n / 7.0,
        density: (density / 10.0).clamp(0.0, 2.0),
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSurrogate {
    seed: u64,
}

impl SyntheticSurrogate {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Jitter in [−1, 1] determined by (seed, formula, property).
    fn jitter(&self, formula: &str, property: Property) -> f64 {
        let h = fnv1a(&[&self.seed.to_le_bytes(), formula.as_bytes(), property.as_str().as_bytes()]);
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn value(&self, d: Descriptor, j: f64, property: Property) -> f64 {
        let en = d.en - 0.6;
        let grp = d.group - 0.5;
        let per = d.period - 0.4;
        let rho = d.density - 0.4;
        let (z, lo, hi) = match property {
            Property::BandGap => (4.0 * en - 2.0 * per - 0.5, 0.0, 8.0),
            Property::FormationEnergy => (-4.0 * en + per + 0.3, -4.0, 1.0),
            Property::EnergyAboveHull => (2.0 * per - 1.5, 0.0, 0.5),
            Property::BulkModulus => (3.0 * rho - 2.0 * per - 0.5, 10.0, 500.0),
            Property::ShearModulus => (3.0 * rho - 3.0 * per - 1.0, 10.0, 500.0),
            Property::DielectricConstant => (2.0 * per + 2.0 * grp - 0.5, 1.0, 100.0),
            Property::PiezoelectricCoefficient => (1.5 * en + grp - 0.5, 0.0, 20.0),
            Property::Seebeck => (2.0 * en, -300.0, 300.0),
            Property::PowerFactor => {
                let t = logistic(grp + JITTER * j);
                return 10f64.powf(-5.0 + t * (5e-3f64.log10() + 5.0));
            }
            Property::ElectricalConductivity | Property::Density => return f64::NAN,
        };
        lo + (hi - lo) * logistic(z + JITTER * j)
    }
}

impl Surrogate for SyntheticSurrogate {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn capabilities(&self) -> &[Property] {
        &CAPABILITIES
    }

    fn predict(&self, structure: &Structure, property: Property) -> Result<f64, OracleError> {
        if !self.can_predict(property) {
            return Err(OracleError::Surrogate {
                name: "synthetic".into(),
                reason: format!("{property} not supported"),
            });
        }
        let j = self.jitter(structure.reduced_formula(), property);
        Ok(self.value(descriptor(structure), j, property))
    }
}
