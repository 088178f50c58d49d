//! Minimal P1 CIF dialect: cell lengths and angles plus one `atom_site`
//! loop with explicit fractional coordinates. Unknown tags and loops are
//! skipped; symmetry operations are not expanded.

use std::fmt::Write as _;

use super::{CrystalError, Lattice, Site, Structure, StructureSource};
use crate::chem::{self, normalize_symbol};

const CELL_TAGS: [&str; 6] = [
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
];

/// Splits a CIF line into whitespace-separated tokens, honouring single and
/// double quotes.
fn tokens(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = line.trim_start();
    while !rest.is_empty() {
        let quote = rest.chars().next().filter(|c| *c == '\'' || *c == '"');
        let (token, tail) = match quote {
            Some(q) => match rest[1..].find(q) {
                Some(end) => (&rest[1..end + 1], &rest[end + 2..]),
                None => (&rest[1..], ""),
            },
            None => match rest.find(char::is_whitespace) {
                Some(end) => (&rest[..end], &rest[end..]),
                None => (rest, ""),
            },
        };
        out.push(token);
        rest = tail.trim_start();
    }
    out
}

/// Parses a CIF number, dropping a trailing standard uncertainty such as
/// `4.0123(4)`.
fn number(token: &str, line: usize) -> Result<f64, CrystalError> {
    let bare = token.split('(').next().unwrap_or(token);
    bare.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or(CrystalError::MalformedNumber(line))
}

/// `"Ti4+"` -> `"Ti"`, `"O1"` -> `"O"`.
fn symbol_from(token: &str) -> String {
    let letters: String = token.chars().take_while(|c| c.is_ascii_alphabetic()).take(2).collect();
    let candidate = normalize_symbol(&letters);
    if candidate.len() == 2 && !chem::is_known_element(&candidate) {
        let single = normalize_symbol(&letters[..1]);
        if chem::is_known_element(&single) {
            return single;
        }
    }
    candidate
}

struct Loop {
    headers: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

pub fn parse_cif(text: &str) -> Result<Structure, CrystalError> {
    let mut cell: [Option<f64>; 6] = [None; 6];
    let mut loops: Vec<Loop> = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut in_text_field = false;

    while i < lines.len() {
        let line_no = i + 1;
        let line = lines[i];
        i += 1;
        if line.starts_with(';') {
            in_text_field = !in_text_field;
            continue;
        }
        let trimmed = line.trim();
        if in_text_field || trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.eq_ignore_ascii_case("loop_") {
            let mut lp = Loop { headers: Vec::new(), rows: Vec::new() };
            while i < lines.len() && lines[i].trim().starts_with('_') {
                lp.headers.push(lines[i].trim().to_ascii_lowercase());
                i += 1;
            }
            while i < lines.len() {
                let row = lines[i].trim();
                if row.is_empty()
                    || row.starts_with('_')
                    || row.starts_with('#')
                    || row.starts_with(';')
                    || row.eq_ignore_ascii_case("loop_")
                    || row.starts_with("data_")
                {
                    break;
                }
                lp.rows.push((i + 1, tokens(row).into_iter().map(str::to_string).collect()));
                i += 1;
            }
            loops.push(lp);
            continue;
        }
        if trimmed.starts_with('_') {
            let toks = tokens(trimmed);
            let tag = toks[0].to_ascii_lowercase();
            if let Some(slot) = CELL_TAGS.iter().position(|t| *t == tag) {
                let value = toks.get(1).ok_or(CrystalError::MalformedNumber(line_no))?;
                cell[slot] = Some(number(value, line_no)?);
            }
        }
    }

    let mut params = [0.0; 6];
    for (slot, tag) in CELL_TAGS.iter().enumerate() {
        params[slot] = cell[slot].ok_or_else(|| CrystalError::MissingTag(tag.to_string()))?;
    }
    let lattice = Lattice::new(params[0], params[1], params[2], params[3], params[4], params[5])?;

    let atom_loop = loops
        .iter()
        .find(|l| l.headers.iter().any(|h| h == "_atom_site_fract_x"))
        .ok_or_else(|| CrystalError::MissingTag("_atom_site_fract_x".into()))?;
    let column = |tag: &str| atom_loop.headers.iter().position(|h| h == tag);
    let mut coord_cols = [0usize; 3];
    for (k, tag) in ["_atom_site_fract_x", "_atom_site_fract_y", "_atom_site_fract_z"].iter().enumerate() {
        coord_cols[k] = column(tag).ok_or_else(|| CrystalError::MissingTag(tag.to_string()))?;
    }
    let symbol_col = column("_atom_site_type_symbol")
        .or_else(|| column("_atom_site_label"))
        .ok_or_else(|| CrystalError::MissingTag("_atom_site_type_symbol".into()))?;

    let mut sites = Vec::with_capacity(atom_loop.rows.len());
    for (line_no, row) in &atom_loop.rows {
        let field = |col: usize| row.get(col).ok_or(CrystalError::MalformedNumber(*line_no));
        let raw_symbol = field(symbol_col)?;
        let symbol = symbol_from(raw_symbol);
        if !chem::is_known_element(&symbol) {
            return Err(CrystalError::UnknownElement(raw_symbol.clone()));
        }
        let mut frac = [0.0; 3];
        for k in 0..3 {
            frac[k] = number(field(coord_cols[k])?, *line_no)?;
        }
        sites.push(Site::new(&symbol, frac)?);
    }
    Structure::new(lattice, sites, StructureSource::Reference)
}

/// Serializes a structure in the dialect [`parse_cif`] reads, with six
/// decimals on every number and `\n` line endings.
pub fn write_cif(structure: &Structure) -> String {
    let l = structure.lattice();
    let mut out = String::new();
    let formula = structure.reduced_formula();
    let _ = writeln!(out, "data_{formula}");
    let _ = writeln!(out, "_symmetry_space_group_name_H-M 'P 1'");
    for (tag, value) in CELL_TAGS.iter().zip([l.a(), l.b(), l.c(), l.alpha(), l.beta(), l.gamma()]) {
        let _ = writeln!(out, "{tag:<18} {value:.6}");
    }
    let _ = writeln!(out, "_chemical_formula_sum '{formula}'");
    out.push_str("loop_\n_atom_site_label\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n");
    let mut counters: std::collections::HashMap<&str, usize> = Default::default();
    for site in structure.sites() {
        let n = counters.entry(site.element()).or_insert(0);
        *n += 1;
        let [x, y, z] = site.frac();
        let _ = writeln!(
            out,
            "{}{} {} {x:.6} {y:.6} {z:.6}",
            site.element(),
            n,
            site.element()
        );
    }
    out
}
