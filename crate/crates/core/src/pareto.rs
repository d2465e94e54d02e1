//! Dominance between (time, cost) outcomes, both minimized.

use serde::{Deserialize, Serialize};

/// Coordinates closer than this in both objectives are the same outcome.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub time_h: f64,
    pub cost: f64,
}

impl Point2 {
    pub fn new(time_h: f64, cost: f64) -> Self {
        Point2 { time_h, cost }
    }

    fn near(&self, other: &Point2) -> bool {
        (self.time_h - other.time_h).abs() <= DEDUP_TOL && (self.cost - other.cost).abs() <= DEDUP_TOL
    }
}

/// `a` is no worse than `b` in both objectives and differs in at least one.
pub fn dominates(a: &Point2, b: &Point2) -> bool {
    a.time_h <= b.time_h && a.cost <= b.cost && (a.time_h < b.time_h || a.cost < b.cost)
}

/// Keeps the nondominated points, sorted by ascending time.
///
/// Near-identical points (within [`DEDUP_TOL`] per coordinate) collapse to
/// the one that came first in the input.
pub fn filter_nondominated<T>(points: Vec<(Point2, T)>) -> Vec<(Point2, T)> {
    let mut tagged: Vec<(usize, Point2, T)> = points
        .into_iter()
        .enumerate()
        .map(|(i, (p, t))| (i, p, t))
        .collect();
    tagged.sort_by(|a, b| {
        a.1.time_h
            .total_cmp(&b.1.time_h)
            .then(a.1.cost.total_cmp(&b.1.cost))
            .then(a.0.cmp(&b.0))
    });

    // Scanning by (time, cost): a point survives iff its cost is strictly
    // below every cost seen so far.
    let mut kept: Vec<(usize, Point2, T)> = Vec::new();
    let mut best_cost = f64::INFINITY;
    for item in tagged {
        if let Some(last) = kept.last_mut() {
            if last.1.near(&item.1) {
                if item.0 < last.0 {
                    *last = item;
                }
                continue;
            }
        }
        if item.1.cost < best_cost {
            best_cost = item.1.cost;
            kept.push(item);
        }
    }
    kept.into_iter().map(|(_, p, t)| (p, t)).collect()
}

/// How one point relates to another point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standing {
    /// Some point of the other set dominates it.
    Dominated,
    /// It dominates at least one point of the other set and is not dominated.
    Dominating,
    /// Neither dominated nor dominating.
    Nondominated,
}

impl std::fmt::Display for Standing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Standing::Dominated => "dominated",
            Standing::Dominating => "dominating",
            Standing::Nondominated => "nondominated",
        })
    }
}

pub fn standing(p: &Point2, others: &[Point2]) -> Standing {
    if others.iter().any(|o| dominates(o, p)) {
        Standing::Dominated
    } else if others.iter().any(|o| dominates(p, o)) {
        Standing::Dominating
    } else {
        Standing::Nondominated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontComparison {
    /// Points of A dominated by at least one point of B.
    pub a_dominated_by_b: usize,
    /// Points of B dominated by at least one point of A.
    pub b_dominated_by_a: usize,
    /// Points of either set that no point of the other set dominates.
    pub mutual_nondominated: usize,
    pub a_standing: Vec<Standing>,
    pub b_standing: Vec<Standing>,
}

pub fn front_compare(a: &[Point2], b: &[Point2]) -> FrontComparison {
    let a_standing: Vec<Standing> = a.iter().map(|p| standing(p, b)).collect();
    let b_standing: Vec<Standing> = b.iter().map(|p| standing(p, a)).collect();
    let dominated = |s: &[Standing]| s.iter().filter(|&&x| x == Standing::Dominated).count();
    let a_dominated_by_b = dominated(&a_standing);
    let b_dominated_by_a = dominated(&b_standing);
    FrontComparison {
        a_dominated_by_b,
        b_dominated_by_a,
        mutual_nondominated: a.len() + b.len() - a_dominated_by_b - b_dominated_by_a,
        a_standing,
        b_standing,
    }
}
