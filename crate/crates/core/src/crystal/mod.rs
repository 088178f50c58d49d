//! Crystal-structure data model and structure-derived quantities.
//!
//! A [`Structure`] is always valid once constructed: the lattice is
//! geometrically realizable, every site names a known element with
//! coordinates wrapped into `[0, 1)`, and the reduced formula is recomputed
//! from the sites rather than taken from input.

mod cif;

pub use cif::{parse_cif, write_cif};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{self, normalize_symbol};

/// Element symbol to integer count.
pub type Composition = BTreeMap<String, u32>;

/// Grams per atomic mass unit.
pub const AMU_TO_GRAM: f64 = 1.660_539_066_60e-24;

/// Cubic ångström to cubic centimetre.
const A3_TO_CM3: f64 = 1e-24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrystalError {
    #[error("composition is empty")]
    EmptyComposition,
    #[error("cell angles do not describe a realizable cell")]
    DegenerateCell,
    #[error("missing CIF tag `{0}`")]
    MissingTag(String),
    #[error("malformed number on line {0}")]
    MalformedNumber(usize),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("structure has no sites")]
    EmptySites,
    #[error("non-finite fractional coordinate")]
    InvalidCoordinate,
    #[error("malformed formula `{0}`")]
    MalformedFormula(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
}

impl CrystalError {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            CrystalError::EmptyComposition => "EmptyComposition",
            CrystalError::DegenerateCell => "DegenerateCell",
            CrystalError::MissingTag(_) => "MissingTag",
            CrystalError::MalformedNumber(_) => "MalformedNumber",
            CrystalError::UnknownElement(_) => "UnknownElement",
            CrystalError::InvalidLattice(_) => "InvalidLattice",
            CrystalError::EmptySites => "EmptySites",
            CrystalError::InvalidCoordinate => "InvalidCoordinate",
            CrystalError::MalformedFormula(_) => "MalformedFormula",
            CrystalError::MalformedPayload(_) => "MalformedPayload",
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Divides every count by the composition's greatest common divisor.
pub fn reduced_composition(composition: &Composition) -> Composition {
    let divisor = composition.values().copied().fold(0, gcd).max(1);
    composition
        .iter()
        .map(|(el, n)| (el.clone(), n / divisor))
        .collect()
}

/// Canonical reduced formula: alphabetical element order with oxygen moved
/// last, counts of one omitted.
pub fn reduce_formula(composition: &Composition) -> Result<String, CrystalError> {
    if composition.is_empty() || composition.values().any(|&n| n == 0) {
        return Err(CrystalError::EmptyComposition);
    }
    Ok(format_formula(&reduced_composition(composition)))
}

fn format_formula(composition: &Composition) -> String {
    let mut out = String::new();
    let mut push = |el: &str, n: u32| {
        out.push_str(el);
        if n != 1 {
            out.push_str(&n.to_string());
        }
    };
    for (el, &n) in composition.iter().filter(|(el, _)| el.as_str() != "O") {
        push(el, n);
    }
    if let Some(&n) = composition.get("O") {
        push("O", n);
    }
    out
}

/// Parses a formula such as `"BaTiO3"`, `"O3Ti1Ba1"` or `"Hf0.5Zr0.5O2"`.
///
/// Fractional counts are scaled by the smallest power of ten that makes all
/// of them integral. Symbols must be known elements.
pub fn parse_formula(formula: &str) -> Result<Composition, CrystalError> {
    let malformed = || CrystalError::MalformedFormula(formula.to_string());
    let mut terms: Vec<(String, String)> = Vec::new();
    let mut chars = formula.trim().chars().peekable();
    while let Some(c) = chars.next() {
        if !c.is_ascii_uppercase() {
            return Err(malformed());
        }
        let mut symbol = c.to_string();
        while let Some(&l) = chars.peek().filter(|l| l.is_ascii_lowercase()) {
            symbol.push(l);
            chars.next();
        }
        let mut count = String::new();
        while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit() || **d == '.') {
            count.push(d);
            chars.next();
        }
        terms.push((symbol, count));
    }
    if terms.is_empty() {
        return Err(CrystalError::EmptyComposition);
    }

    let decimals = terms
        .iter()
        .filter_map(|(_, n)| n.split_once('.').map(|(_, frac)| frac.len()))
        .max()
        .unwrap_or(0);
    if decimals > 6 {
        return Err(malformed());
    }
    let scale = 10u64.pow(decimals as u32);

    let mut composition = Composition::new();
    for (symbol, count) in terms {
        if !chem::is_known_element(&symbol) {
            return Err(CrystalError::UnknownElement(symbol));
        }
        let value: f64 = if count.is_empty() {
            1.0
        } else {
            count.parse().map_err(|_| malformed())?
        };
        let scaled = (value * scale as f64).round();
        if scaled < 1.0 || scaled > u32::MAX as f64 {
            return Err(malformed());
        }
        *composition.entry(symbol).or_insert(0) += scaled as u32;
    }
    Ok(reduced_composition(&composition))
}

/// Canonical form of an arbitrary formula string.
pub fn canonical_formula(formula: &str) -> Result<String, CrystalError> {
    reduce_formula(&parse_formula(formula)?)
}

/// Unit-cell parameters: lengths in Å, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeParams", into = "LatticeParams")]
pub struct Lattice {
    a: f64,
    b: f64,
    c: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

/// Unvalidated lattice parameters, as they appear in generation payloads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl From<Lattice> for LatticeParams {
    fn from(l: Lattice) -> Self {
        LatticeParams { a: l.a, b: l.b, c: l.c, alpha: l.alpha, beta: l.beta, gamma: l.gamma }
    }
}

impl TryFrom<LatticeParams> for Lattice {
    type Error = CrystalError;

    fn try_from(p: LatticeParams) -> Result<Self, Self::Error> {
        Lattice::new(p.a, p.b, p.c, p.alpha, p.beta, p.gamma)
    }
}

impl Lattice {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self, CrystalError> {
        for (name, len) in [("a", a), ("b", b), ("c", c)] {
            if !(len.is_finite() && len > 0.0) {
                return Err(CrystalError::InvalidLattice(format!("{name} = {len} must be positive")));
            }
        }
        for (name, angle) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(angle.is_finite() && angle > 0.0 && angle < 180.0) {
                return Err(CrystalError::InvalidLattice(format!(
                    "{name} = {angle} must lie strictly between 0 and 180 degrees"
                )));
            }
        }
        let lattice = Lattice { a, b, c, alpha, beta, gamma };
        if lattice.volume_factor() <= 1e-10 {
            return Err(CrystalError::InvalidLattice("angles do not describe a realizable cell".into()));
        }
        Ok(lattice)
    }

    pub fn cubic(a: f64) -> Result<Self, CrystalError> {
        Self::new(a, a, a, 90.0, 90.0, 90.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn params(&self) -> LatticeParams {
        (*self).into()
    }

    // 1 - cos²α - cos²β - cos²γ + 2 cosα cosβ cosγ
    fn volume_factor(&self) -> f64 {
        let (ca, cb, cg) = (
            self.alpha.to_radians().cos(),
            self.beta.to_radians().cos(),
            self.gamma.to_radians().cos(),
        );
        1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg
    }

    fn is_orthogonal(&self) -> bool {
        self.alpha == 90.0 && self.beta == 90.0 && self.gamma == 90.0
    }
}

/// Triclinic cell volume in Å³.
pub fn cell_volume(lattice: &Lattice) -> Result<f64, CrystalError> {
    if lattice.is_orthogonal() {
        return Ok(lattice.a * lattice.b * lattice.c);
    }
    let factor = lattice.volume_factor();
    if factor <= 0.0 {
        return Err(CrystalError::DegenerateCell);
    }
    Ok(lattice.a * lattice.b * lattice.c * factor.sqrt())
}

/// Wraps a fractional coordinate into `[0, 1)`. Values within 5e-7 of 1
/// snap to 0 so six-decimal output never prints `1.000000`.
pub fn wrap_fractional(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 - 5e-7 {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SitePayload", into = "SitePayload")]
pub struct Site {
    element: String,
    frac: [f64; 3],
}

/// Unvalidated site, as it appears in generation payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePayload {
    pub element: String,
    pub frac: [f64; 3],
}

impl From<Site> for SitePayload {
    fn from(s: Site) -> Self {
        SitePayload { element: s.element, frac: s.frac }
    }
}

impl TryFrom<SitePayload> for Site {
    type Error = CrystalError;

    fn try_from(p: SitePayload) -> Result<Self, Self::Error> {
        Site::new(&p.element, p.frac)
    }
}

impl Site {
    pub fn new(element: &str, frac: [f64; 3]) -> Result<Self, CrystalError> {
        let symbol = normalize_symbol(element);
        if !chem::is_known_element(&symbol) {
            return Err(CrystalError::UnknownElement(element.trim().to_string()));
        }
        if frac.iter().any(|x| !x.is_finite()) {
            return Err(CrystalError::InvalidCoordinate);
        }
        Ok(Site { element: symbol, frac: frac.map(wrap_fractional) })
    }

    pub fn element(&self) -> &str {
        &self.element
    }

    pub fn frac(&self) -> [f64; 3] {
        self.frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureSource {
    Generated,
    Reference,
    Replay,
}

impl fmt::Display for StructureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureSource::Generated => "generated",
            StructureSource::Reference => "reference",
            StructureSource::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr", into = "StructureRepr")]
pub struct Structure {
    reduced_formula: String,
    lattice: Lattice,
    sites: Vec<Site>,
    source: StructureSource,
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    #[serde(default)]
    reduced_formula: String,
    lattice: Lattice,
    sites: Vec<Site>,
    source: StructureSource,
}

impl From<Structure> for StructureRepr {
    fn from(s: Structure) -> Self {
        StructureRepr {
            reduced_formula: s.reduced_formula,
            lattice: s.lattice,
            sites: s.sites,
            source: s.source,
        }
    }
}

impl TryFrom<StructureRepr> for Structure {
    type Error = CrystalError;

    fn try_from(r: StructureRepr) -> Result<Self, Self::Error> {
        Structure::new(r.lattice, r.sites, r.source)
    }
}

impl Structure {
    pub fn new(lattice: Lattice, sites: Vec<Site>, source: StructureSource) -> Result<Self, CrystalError> {
        if sites.is_empty() {
            return Err(CrystalError::EmptySites);
        }
        let mut composition = Composition::new();
        for site in &sites {
            *composition.entry(site.element.clone()).or_insert(0) += 1;
        }
        let reduced_formula = reduce_formula(&composition)?;
        Ok(Structure { reduced_formula, lattice, sites, source })
    }

    pub fn reduced_formula(&self) -> &str {
        &self.reduced_formula
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn source(&self) -> StructureSource {
        self.source
    }

    pub fn with_source(mut self, source: StructureSource) -> Self {
        self.source = source;
        self
    }

    /// Site counts per element (not reduced).
    pub fn composition(&self) -> Composition {
        let mut composition = Composition::new();
        for site in &self.sites {
            *composition.entry(site.element.clone()).or_insert(0) += 1;
        }
        composition
    }

    pub fn elements(&self) -> Vec<&str> {
        let mut els: Vec<&str> = self.sites.iter().map(|s| s.element.as_str()).collect();
        els.sort_unstable();
        els.dedup();
        els
    }

    pub fn volume(&self) -> Result<f64, CrystalError> {
        cell_volume(&self.lattice)
    }

    /// Mass density in g/cm³.
    pub fn density(&self) -> Result<f64, CrystalError> {
        density(self)
    }

    /// Builds a placeholder cell for a composition: a cubic box of about
    /// 15 Å³ per atom with atoms laid out on a regular grid. Used to seed
    /// islands from reference entries that carry no coordinates.
    pub fn placeholder(composition: &Composition, source: StructureSource) -> Result<Self, CrystalError> {
        if composition.is_empty() {
            return Err(CrystalError::EmptyComposition);
        }
        let lattice_len = |n: usize| (n as f64 * 15.0).cbrt();
        let n_atoms: u32 = composition.values().sum();
        let lattice = Lattice::cubic(lattice_len(n_atoms as usize))?;
        Self::on_grid(composition, lattice, source)
    }

    /// Lays the atoms of `composition` out on a regular grid inside
    /// `lattice`, in composition order.
    pub fn on_grid(composition: &Composition, lattice: Lattice, source: StructureSource) -> Result<Self, CrystalError> {
        let n_atoms: u32 = composition.values().sum();
        if n_atoms == 0 {
            return Err(CrystalError::EmptyComposition);
        }
        let side = (n_atoms as f64).cbrt().ceil() as u32;
        let step = 1.0 / side as f64;
        let mut sites = Vec::with_capacity(n_atoms as usize);
        let mut slot = 0u32;
        for (element, &count) in composition {
            for _ in 0..count {
                let (i, j, k) = (slot % side, (slot / side) % side, slot / (side * side));
                sites.push(Site::new(element, [i as f64 * step, j as f64 * step, k as f64 * step])?);
                slot += 1;
            }
        }
        Structure::new(lattice, sites, source)
    }
}

/// Mass density in g/cm³ computed from site masses and cell volume.
pub fn density(structure: &Structure) -> Result<f64, CrystalError> {
    let volume = structure.volume()?;
    let mass_amu: f64 = structure
        .sites
        .iter()
        .map(|s| {
            chem::element_info(&s.element)
                .map(|e| e.atomic_mass)
                .map_err(|_| CrystalError::UnknownElement(s.element.clone()))
        })
        .sum::<Result<f64, _>>()?;
    Ok(mass_amu * AMU_TO_GRAM / (volume * A3_TO_CM3))
}

/// A candidate as a generator emits it: declared formula (informational),
/// lattice parameters, and explicit sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationPayload {
    #[serde(default)]
    pub formula: Option<String>,
    pub lattice: LatticeParams,
    pub sites: Vec<SitePayload>,
}

impl From<&Structure> for GenerationPayload {
    fn from(s: &Structure) -> Self {
        GenerationPayload {
            formula: Some(s.reduced_formula.clone()),
            lattice: s.lattice.params(),
            sites: s.sites.iter().cloned().map(Into::into).collect(),
        }
    }
}

/// Validates a generation payload into a [`Structure`]. The declared formula
/// is ignored in favour of the site composition.
pub fn candidate_from_generation(
    payload: &GenerationPayload,
    source: StructureSource,
) -> Result<Structure, CrystalError> {
    let lattice = Lattice::try_from(payload.lattice)?;
    let sites = payload
        .sites
        .iter()
        .map(|s| Site::new(&s.element, s.frac))
        .collect::<Result<Vec<_>, _>>()?;
    Structure::new(lattice, sites, source)
}

/// Parses a JSON value into a payload and validates it.
pub fn candidate_from_json(value: &serde_json::Value, source: StructureSource) -> Result<Structure, CrystalError> {
    let payload: GenerationPayload = serde_json::from_value(value.clone())
        .map_err(|e| CrystalError::MalformedPayload(e.to_string()))?;
    candidate_from_generation(&payload, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn comp(pairs: &[(&str, u32)]) -> Composition {
        pairs.iter().map(|(e, n)| (e.to_string(), *n)).collect()
    }

    #[test]
    fn reduce_formula_examples() {
        assert_eq!(reduce_formula(&comp(&[("Hf", 2), ("Zr", 2), ("O", 8)])).unwrap(), "HfZrO4");
        assert_eq!(reduce_formula(&comp(&[("Si", 1)])).unwrap(), "Si");
        assert_eq!(reduce_formula(&comp(&[("Ba", 1), ("Ti", 1), ("O", 3)])).unwrap(), "BaTiO3");
        assert_eq!(reduce_formula(&Composition::new()), Err(CrystalError::EmptyComposition));
    }

    #[test]
    fn formula_parsing_canonicalizes() {
        assert_eq!(canonical_formula("O3Ti1Ba1").unwrap(), "BaTiO3");
        assert_eq!(canonical_formula("Ba2Ti2O6").unwrap(), "BaTiO3");
        assert_eq!(canonical_formula("Hf0.5Zr0.5O2").unwrap(), "HfZrO4");
        assert_eq!(canonical_formula("SiC").unwrap(), "CSi");
        assert!(matches!(canonical_formula("Xx2O"), Err(CrystalError::UnknownElement(_))));
        assert!(matches!(canonical_formula("ba"), Err(CrystalError::MalformedFormula(_))));
        assert!(matches!(canonical_formula("Ba0O"), Err(CrystalError::MalformedFormula(_))));
    }

    #[test]
    fn volumes() {
        assert_eq!(cell_volume(&Lattice::cubic(4.0).unwrap()).unwrap(), 64.0);
        let ortho = Lattice::new(3.0, 4.0, 5.0, 90.0, 90.0, 90.0).unwrap();
        assert_eq!(cell_volume(&ortho).unwrap(), 60.0);
        // abc·sin γ = 45 · sin 120° = 38.97114...
        let hex = Lattice::new(3.0, 3.0, 5.0, 90.0, 90.0, 120.0).unwrap();
        assert_abs_diff_eq!(cell_volume(&hex).unwrap(), 38.9711, epsilon = 1e-4);
    }

    #[test]
    fn lattice_invariants() {
        assert!(Lattice::new(-2.0, 1.0, 1.0, 90.0, 90.0, 90.0).is_err());
        assert!(Lattice::new(1.0, 1.0, 1.0, 90.0, 90.0, 180.0).is_err());
        // three coplanar axes
        assert!(Lattice::new(1.0, 1.0, 1.0, 120.0, 120.0, 120.0).is_err());
        assert!(Lattice::new(1.0, 1.0, 1.0, 60.0, 60.0, 60.0).is_ok());
    }

    fn rock_salt(a: f64) -> Structure {
        let na = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
        let cl = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5], [0.5, 0.5, 0.5]];
        let sites = na
            .iter()
            .map(|f| Site::new("Na", *f).unwrap())
            .chain(cl.iter().map(|f| Site::new("Cl", *f).unwrap()))
            .collect();
        Structure::new(Lattice::cubic(a).unwrap(), sites, StructureSource::Reference).unwrap()
    }

    #[test]
    fn rock_salt_density() {
        // 4·(22.990 + 35.453) amu / (5.64 Å)³ by hand: 2.1638 g/cm³
        let s = rock_salt(5.64);
        assert_eq!(s.reduced_formula(), "ClNa");
        assert!((s.density().unwrap() - 2.164).abs() / 2.164 < 0.01);
    }

    #[test]
    fn diamond_silicon_density() {
        let fracs = [
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.0],
            [0.5, 0.0, 0.5],
            [0.0, 0.5, 0.5],
            [0.25, 0.25, 0.25],
            [0.75, 0.75, 0.25],
            [0.75, 0.25, 0.75],
            [0.25, 0.75, 0.75],
        ];
        let sites = fracs.iter().map(|f| Site::new("Si", *f).unwrap()).collect();
        let s = Structure::new(Lattice::cubic(5.431).unwrap(), sites, StructureSource::Reference).unwrap();
        assert!((s.density().unwrap() - 2.329).abs() < 2e-3);
    }

    #[test]
    fn coordinates_wrap() {
        let s = Site::new("Si", [1.25, -0.25, 3.0]).unwrap();
        assert_abs_diff_eq!(s.frac()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s.frac()[1], 0.75, epsilon = 1e-15);
        assert_eq!(s.frac()[2], 0.0);
        assert_eq!(Site::new("Si", [0.9999999, 0.0, 0.0]).unwrap().frac()[0], 0.0);
        assert!(Site::new("Si", [f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn formula_is_recomputed_on_deserialize() {
        let json = r#"{"reduced_formula":"Bogus","lattice":{"a":4,"b":4,"c":4,"alpha":90,"beta":90,"gamma":90},
            "sites":[{"element":"Zn","frac":[0,0,0]},{"element":"Zn","frac":[0.5,0.5,0.5]},{"element":"O","frac":[0.5,0,0]}],
            "source":"generated"}"#;
        let s: Structure = serde_json::from_str(json).unwrap();
        assert_eq!(s.reduced_formula(), "Zn2O");
    }

    #[test]
    fn generation_payloads() {
        let zno = serde_json::json!({
            "formula": "ZnO",
            "lattice": {"a": 3.25, "b": 3.25, "c": 5.2, "alpha": 90, "beta": 90, "gamma": 120},
            "sites": [
                {"element": "Zn", "frac": [0.3333, 0.6667, 0.0]},
                {"element": "Zn", "frac": [0.6667, 0.3333, 0.5]},
                {"element": "O", "frac": [0.3333, 0.6667, 0.382]},
                {"element": "O", "frac": [0.6667, 0.3333, 0.882]}
            ]
        });
        let s = candidate_from_json(&zno, StructureSource::Generated).unwrap();
        assert_eq!(s.reduced_formula(), "ZnO");

        let lying = serde_json::json!({
            "formula": "ZnO",
            "lattice": {"a": 4, "b": 4, "c": 4, "alpha": 90, "beta": 90, "gamma": 90},
            "sites": [
                {"element": "Zn", "frac": [0, 0, 0]},
                {"element": "Zn", "frac": [0.5, 0.5, 0.5]},
                {"element": "O", "frac": [0.5, 0, 0]}
            ]
        });
        assert_eq!(candidate_from_json(&lying, StructureSource::Generated).unwrap().reduced_formula(), "Zn2O");

        let mut bent = zno.clone();
        bent["lattice"]["gamma"] = serde_json::json!(200.0);
        let err = candidate_from_json(&bent, StructureSource::Generated).unwrap_err();
        assert_eq!(err.code(), "InvalidLattice");
    }

    #[test]
    fn placeholder_is_valid() {
        let s = Structure::placeholder(&parse_formula("Ga2O3").unwrap(), StructureSource::Reference).unwrap();
        assert_eq!(s.reduced_formula(), "Ga2O3");
        assert_eq!(s.sites().len(), 5);
        assert_abs_diff_eq!(s.volume().unwrap(), 75.0, epsilon = 1e-9);
    }
}
