//! Campaign metrics over a record stream.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::oracle::ReferenceDb;
use crate::property::Property;
use crate::record::CandidateRecord;
use crate::tasks::{Direction, ParetoAxes, Task};

/// Energy above hull, in eV/atom, at or below which a material is stable.
pub const STABILITY_HULL: f64 = 0.1;

/// Iterations per convergence-trace window unless configured otherwise.
pub const DEFAULT_WINDOW: usize = 10;

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

fn is_stable(r: &CandidateRecord) -> bool {
    r.score.success && r.value(Property::EnergyAboveHull).is_some_and(|h| h <= STABILITY_HULL)
}

/// Percentage of records satisfying every constraint.
pub fn hit_rate(records: &[CandidateRecord]) -> f64 {
    percent(records.iter().filter(|r| r.score.success).count(), records.len())
}

/// Percentage of all records that succeed and have a known hull energy of
/// at most [`STABILITY_HULL`].
pub fn stability_rate(records: &[CandidateRecord]) -> f64 {
    percent(records.iter().filter(|r| is_stable(r)).count(), records.len())
}

/// Same numerator as [`stability_rate`], over successful records only.
pub fn stability_among_valid(records: &[CandidateRecord]) -> f64 {
    let valid = records.iter().filter(|r| r.score.success).count();
    percent(records.iter().filter(|r| is_stable(r)).count(), valid)
}

/// Percentage of records whose formula is an exact key of `db`.
pub fn memorization_rate(records: &[CandidateRecord], db: &ReferenceDb) -> f64 {
    percent(records.iter().filter(|r| !r.formula.is_empty() && db.contains(&r.formula)).count(), records.len())
}

/// Per element, the number of records containing it divided by the largest
/// such count.
pub fn element_coverage(records: &[CandidateRecord]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        let elements: BTreeSet<&str> = r.elements().into_iter().collect();
        for e in elements {
            *counts.entry(e.to_string()).or_insert(0) += 1;
        }
    }
    let max = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().map(|(e, n)| (e, n as f64 / max as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceWindow {
    pub window: usize,
    pub valid_fraction: f64,
}

/// Success fraction per window of `window` consecutive iterations
/// (iterations 1..=window form window 0). Windows without records are
/// skipped.
pub fn convergence_trace(records: &[CandidateRecord], window: usize) -> Vec<TraceWindow> {
    assert!(window >= 1, "window must be at least 1");
    let mut tallies: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in records {
        let w = r.iteration.saturating_sub(1) / window;
        let t = tallies.entry(w).or_insert((0, 0));
        t.1 += 1;
        if r.score.success {
            t.0 += 1;
        }
    }
    tallies
        .into_iter()
        .map(|(window, (ok, n))| TraceWindow { window, valid_fraction: ok as f64 / n as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub formula: String,
    pub x: f64,
    pub y: f64,
}

/// True when `p` is no worse than `q` on both axes and strictly better on
/// one.
pub fn dominates(p: &ParetoPoint, q: &ParetoPoint, dx: Direction, dy: Direction) -> bool {
    dx.no_worse(p.x, q.x) && dy.no_worse(p.y, q.y) && (dx.better(p.x, q.x) || dy.better(p.y, q.y))
}

/// The non-dominated subset of `points`, in input order. Points with equal
/// coordinates are all kept.
pub fn pareto_front(points: &[ParetoPoint], dx: Direction, dy: Direction) -> Vec<ParetoPoint> {
    let key = |v: f64, d: Direction| if d == Direction::Maximize { v } else { -v };
    let finite: Vec<usize> = (0..points.len()).filter(|&i| points[i].x.is_finite() && points[i].y.is_finite()).collect();
    let mut order = finite.clone();
    // Best x first; the sweep then only needs the best y seen at strictly
    // better x.
    order.sort_by(|&a, &b| key(points[b].x, dx).total_cmp(&key(points[a].x, dx)));
    let mut keep = vec![false; points.len()];
    let mut best_prev = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let x = key(points[order[i]].x, dx);
        let mut j = i;
        while j < order.len() && key(points[order[j]].x, dx) == x {
            j += 1;
        }
        let group = &order[i..j];
        let group_best = group.iter().map(|&k| key(points[k].y, dy)).fold(f64::NEG_INFINITY, f64::max);
        if group_best > best_prev {
            for &k in group {
                if key(points[k].y, dy) == group_best {
                    keep[k] = true;
                }
            }
        }
        best_prev = best_prev.max(group_best);
        i = j;
    }
    finite.into_iter().filter(|&k| keep[k]).map(|k| points[k].clone()).collect()
}

/// Successful records with both axis values, as Pareto candidates. A
/// formula proposed more than once counts once, at its first occurrence.
pub fn pareto_points(records: &[CandidateRecord], axes: ParetoAxes) -> Vec<ParetoPoint> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .filter(|r| r.score.success && seen.insert(r.formula.as_str()))
        .filter_map(|r| {
            let x = r.value(axes.x.property).filter(|v| v.is_finite())?;
            let y = r.value(axes.y.property).filter(|v| v.is_finite())?;
            Some(ParetoPoint { formula: r.formula.clone(), x, y })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub task: String,
    pub records: usize,
    pub hit_rate: f64,
    pub stability_rate: f64,
    pub stability_among_valid: f64,
    pub memorization_rate: f64,
    pub pareto_x: Property,
    pub pareto_y: Property,
    pub pareto_front: Vec<ParetoPoint>,
    pub element_coverage: BTreeMap<String, f64>,
    pub window: usize,
    pub trace: Vec<TraceWindow>,
}

pub fn summarize(records: &[CandidateRecord], task: &Task, db: &ReferenceDb, window: usize) -> MetricsBlock {
    let axes = task.pareto();
    MetricsBlock {
        task: task.name().to_string(),
        records: records.len(),
        hit_rate: hit_rate(records),
        stability_rate: stability_rate(records),
        stability_among_valid: stability_among_valid(records),
        memorization_rate: memorization_rate(records, db),
        pareto_x: axes.x.property,
        pareto_y: axes.y.property,
        pareto_front: pareto_front(&pareto_points(records, axes), axes.x.direction, axes.y.direction),
        element_coverage: element_coverage(records),
        window,
        trace: convergence_trace(records, window),
    }
}
