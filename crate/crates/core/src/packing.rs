//! Packing and covering on finite point clouds: the conflict graph at a threshold, exact
//! branch-and-bound solvers for small instances, and deterministic greedy heuristics.
//!
//! Every solver works on an [`Adjacency`] whose edges join points at distance `≤ ε̃`, where
//! `ε̃` is the snapped scale from [`snap`]. The same graph serves both problems: a separated
//! set is an independent set, and a spanning set is a dominating set (a cover by closed
//! neighbourhoods).

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest instance the branch-and-bound solvers accept.
pub const EXACT_THRESHOLD: usize = 24;

/// Largest instance exhaustive subset oracles are run on.
pub const ORACLE_THRESHOLD: usize = 12;

/// Relative nudge applied to every queried scale.
pub const SNAP: f64 = 1e-12;

/// Anything that can report pairwise distances between indexed points.
pub trait PointCloud: Sync {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The effective threshold `ε(1 + 10⁻¹²)`. Separated means `d > ε̃`, covered means `d ≤ ε̃`.
pub fn snap(eps: f64) -> f64 {
    eps * (1.0 + SNAP)
}

/// `log Σ exp(v)`, stable for large magnitudes. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Neighbour lists of the graph `i ~ j ⇔ d(i, j) ≤ threshold`, over local indices `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    /// Builds the graph on `subset` (local index `k` stands for `subset[k]`).
    pub fn build<C: PointCloud + ?Sized>(cloud: &C, subset: &[usize], threshold: f64) -> Self {
        let neighbors = (0..subset.len())
            .into_par_iter()
            .map(|a| {
                let pa = subset[a];
                (0..subset.len())
                    .filter(|&b| b != a && cloud.dist(pa, subset[b]) <= threshold)
                    .map(|b| b as u32)
                    .collect()
            })
            .collect();
        Self { neighbors }
    }

    pub fn from_lists(neighbors: Vec<Vec<u32>>) -> Self {
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Closed neighbourhoods as bitmasks; only valid for `len ≤ 64`.
    fn closed_masks(&self) -> Vec<u64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(i, ns)| ns.iter().fold(1u64 << i, |m, &j| m | (1u64 << j)))
            .collect()
    }

    fn check_exact(&self) -> Result<()> {
        if self.len() > EXACT_THRESHOLD {
            return Err(Error::OracleTooLarge {
                size: self.len(),
                threshold: EXACT_THRESHOLD,
            });
        }
        Ok(())
    }
}

/// Maximum independent set by branch-and-bound.
pub fn exact_max_independent(adj: &Adjacency) -> Result<Vec<usize>> {
    let weights = vec![0.0; adj.len()];
    exact_max_weight_independent(adj, &weights).map(|(_, set)| set)
}

/// Maximum-weight independent set, with weights given as logarithms. Returns the log of the
/// optimal total weight and one optimal set (lexicographically first among the branches
/// explored, so the output is deterministic).
pub fn exact_max_weight_independent(
    adj: &Adjacency,
    log_weights: &[f64],
) -> Result<(f64, Vec<usize>)> {
    adj.check_exact()?;
    let n = adj.len();
    if n == 0 {
        return Ok((f64::NEG_INFINITY, Vec::new()));
    }
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|v| (v - shift).exp()).collect();
    let masks = adj.closed_masks();

    struct Search<'a> {
        w: &'a [f64],
        masks: &'a [u64],
        best: f64,
        best_set: u64,
    }
    impl Search<'_> {
        fn bound(&self, cand: u64) -> f64 {
            let mut s = 0.0;
            let mut c = cand;
            while c != 0 {
                s += self.w[c.trailing_zeros() as usize];
                c &= c - 1;
            }
            s
        }
        fn go(&mut self, cand: u64, chosen: u64, value: f64) {
            if cand == 0 {
                // relative slack keeps ties on the first-found set
                if value > self.best * (1.0 + 1e-14) {
                    self.best = value;
                    self.best_set = chosen;
                }
                return;
            }
            if value + self.bound(cand) <= self.best * (1.0 + 1e-14) {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            self.go(cand & !self.masks[v], chosen | (1 << v), value + self.w[v]);
            self.go(cand & !(1u64 << v), chosen, value);
        }
    }

    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut search = Search {
        w: &w,
        masks: &masks,
        best: -1.0,
        best_set: 0,
    };
    search.go(all, 0, 0.0);
    let set: Vec<usize> = (0..n).filter(|&i| search.best_set >> i & 1 == 1).collect();
    Ok((shift + search.best.ln(), set))
}

/// Minimum dominating set (cover by closed neighbourhoods) by branch-and-bound.
pub fn exact_min_cover(adj: &Adjacency) -> Result<Vec<usize>> {
    adj.check_exact()?;
    let n = adj.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let masks = adj.closed_masks();
    // covering[e] = centres whose ball contains e
    let covering: Vec<Vec<usize>> = (0..n)
        .map(|e| {
            let mut cs: Vec<usize> = (0..n).filter(|&c| masks[c] >> e & 1 == 1).collect();
            cs.sort_by_key(|&c| std::cmp::Reverse(masks[c].count_ones()));
            cs
        })
        .collect();
    let max_ball = masks.iter().map(|m| m.count_ones()).max().unwrap_or(1);

    struct Search<'a> {
        masks: &'a [u64],
        covering: &'a [Vec<usize>],
        max_ball: u32,
        best: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, uncovered: u64, chosen: &mut Vec<usize>) {
            if uncovered == 0 {
                if chosen.len() < self.best.len() {
                    self.best = chosen.clone();
                }
                return;
            }
            let lower = chosen.len() + uncovered.count_ones().div_ceil(self.max_ball) as usize;
            if lower >= self.best.len() {
                return;
            }
            // branch on the uncovered point with the fewest covering centres
            let mut pick = usize::MAX;
            let mut fewest = usize::MAX;
            let mut u = uncovered;
            while u != 0 {
                let e = u.trailing_zeros() as usize;
                if self.covering[e].len() < fewest {
                    fewest = self.covering[e].len();
                    pick = e;
                }
                u &= u - 1;
            }
            for k in 0..self.covering[pick].len() {
                let c = self.covering[pick][k];
                chosen.push(c);
                self.go(uncovered & !self.masks[c], chosen);
                chosen.pop();
            }
        }
    }

    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut search = Search {
        masks: &masks,
        covering: &covering,
        max_ball,
        best: (0..n).collect(),
    };
    search.go(all, &mut Vec::new());
    let mut best = search.best;
    best.sort_unstable();
    Ok(best)
}

/// Maximal separated set in index order: accept a point when no accepted point is adjacent.
/// The result is also a cover, since every rejected point has an accepted neighbour.
pub fn greedy_separated(adj: &Adjacency) -> Vec<usize> {
    let mut blocked = vec![false; adj.len()];
    let mut accepted = Vec::new();
    for i in 0..adj.len() {
        if blocked[i] {
            continue;
        }
        accepted.push(i);
        for &j in adj.neighbors(i) {
            blocked[j as usize] = true;
        }
    }
    accepted
}

/// Standard greedy cover: repeatedly take the centre covering the most uncovered points,
/// lowest index on ties.
pub fn greedy_cover(adj: &Adjacency) -> Vec<usize> {
    let n = adj.len();
    let mut covered = vec![false; n];
    let mut gain: Vec<usize> = (0..n).map(|i| adj.neighbors(i).len() + 1).collect();
    let mut remaining = n;
    let mut centers = Vec::new();
    while remaining > 0 {
        let mut best = 0;
        for i in 1..n {
            if gain[i] > gain[best] {
                best = i;
            }
        }
        centers.push(best);
        let newly: Vec<usize> = std::iter::once(best)
            .chain(adj.neighbors(best).iter().map(|&j| j as usize))
            .filter(|&e| !covered[e])
            .collect();
        for e in newly {
            covered[e] = true;
            remaining -= 1;
            gain[e] -= 1;
            for &c in adj.neighbors(e) {
                gain[c as usize] -= 1;
            }
        }
    }
    centers.sort_unstable();
    centers
}

/// Greedy max-weight separated set: visit points by decreasing weight (lowest index on ties)
/// and accept each one not adjacent to an accepted point. Returns the log total weight.
pub fn greedy_max_weight_separated(adj: &Adjacency, log_weights: &[f64]) -> (f64, Vec<usize>) {
    let mut order: Vec<usize> = (0..adj.len()).collect();
    order.sort_by(|&a, &b| log_weights[b].total_cmp(&log_weights[a]).then(a.cmp(&b)));
    let mut blocked = vec![false; adj.len()];
    let mut accepted = Vec::new();
    for i in order {
        if blocked[i] {
            continue;
        }
        accepted.push(i);
        for &j in adj.neighbors(i) {
            blocked[j as usize] = true;
        }
    }
    accepted.sort_unstable();
    let logs: Vec<f64> = accepted.iter().map(|&i| log_weights[i]).collect();
    (log_sum_exp(&logs), accepted)
}

pub mod oracle {
    //! Exhaustive subset enumeration over at most [`ORACLE_THRESHOLD`](super::ORACLE_THRESHOLD) points.

    use super::Adjacency;
    use crate::error::{Error, Result};

    fn check(adj: &Adjacency) -> Result<()> {
        if adj.len() > super::ORACLE_THRESHOLD {
            return Err(Error::OracleTooLarge {
                size: adj.len(),
                threshold: super::ORACLE_THRESHOLD,
            });
        }
        Ok(())
    }

    fn independent(adj: &Adjacency, mask: u32) -> bool {
        (0..adj.len())
            .filter(|&i| mask >> i & 1 == 1)
            .all(|i| adj.neighbors(i).iter().all(|&j| mask >> j & 1 == 0))
    }

    pub fn max_independent(adj: &Adjacency) -> Result<usize> {
        check(adj)?;
        Ok((0u32..1 << adj.len())
            .filter(|&m| independent(adj, m))
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0))
    }

    /// Linear weights.
    pub fn max_weight(adj: &Adjacency, weights: &[f64]) -> Result<f64> {
        check(adj)?;
        Ok((0u32..1 << adj.len())
            .filter(|&m| independent(adj, m))
            .map(|m| {
                (0..adj.len())
                    .filter(|&i| m >> i & 1 == 1)
                    .map(|i| weights[i])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max))
    }

    pub fn min_cover(adj: &Adjacency) -> Result<usize> {
        check(adj)?;
        let n = adj.len();
        Ok((0u32..1 << n)
            .filter(|&m| {
                (0..n).all(|e| {
                    m >> e & 1 == 1 || adj.neighbors(e).iter().any(|&c| m >> c & 1 == 1)
                })
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap_or(0))
    }
}
