//! The acting group `Z^d`, its box Følner sets, and the temperedness / two-sidedness checks.
//!
//! Group elements are integer vectors with coordinatewise addition; the identity is the zero
//! vector. Finite subsets are kept sorted lexicographically so that every downstream
//! enumeration is reproducible.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The group `Z^rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    rank: usize,
}

impl GroupSpec {
    pub fn new(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParameter("group rank must be at least 1".into()));
        }
        Ok(Self { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank])
    }

    pub fn element(&self, coords: Vec<i64>) -> Result<GroupElement> {
        if coords.len() != self.rank {
            return Err(Error::GroupMismatch {
                left: self.rank,
                right: coords.len(),
            });
        }
        Ok(GroupElement(coords))
    }
}

/// An element of `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    /// Shorthand for rank-1 elements.
    pub fn scalar(v: i64) -> Self {
        Self(vec![v])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.rank(), other.rank());
        GroupElement(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.rank(), other.rank());
        GroupElement(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement(self.0.iter().map(|a| -a).collect())
    }

    /// `|g|_∞`, the word length used by the geometric weights.
    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|a| a.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }
}

/// A non-empty finite subset of `Z^d`, deduplicated and sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FolnerSet {
    elements: Vec<GroupElement>,
}

impl FolnerSet {
    pub fn new(mut elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("a Følner set must be non-empty".into()));
        }
        let rank = elements[0].rank();
        if let Some(bad) = elements.iter().find(|g| g.rank() != rank) {
            return Err(Error::GroupMismatch {
                left: rank,
                right: bad.rank(),
            });
        }
        elements.sort();
        elements.dedup();
        Ok(Self { elements })
    }

    pub fn singleton(g: GroupElement) -> Self {
        Self { elements: vec![g] }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.elements[0].rank()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.elements.iter()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }

    /// `gF`.
    pub fn translate(&self, g: &GroupElement) -> FolnerSet {
        // translation preserves lexicographic order
        FolnerSet {
            elements: self.elements.iter().map(|f| g.add(f)).collect(),
        }
    }

    /// `F^{-1}`.
    pub fn inverse(&self) -> FolnerSet {
        let mut elements: Vec<_> = self.elements.iter().map(GroupElement::inverse).collect();
        elements.reverse();
        FolnerSet { elements }
    }

    /// The product set `AB = {a + b}`, by exhaustive enumeration with hash-set dedup.
    pub fn product(&self, other: &FolnerSet) -> FolnerSet {
        let mut seen: HashSet<GroupElement> = HashSet::with_capacity(self.len() + other.len());
        for a in &self.elements {
            for b in &other.elements {
                seen.insert(a.add(b));
            }
        }
        let mut elements: Vec<_> = seen.into_iter().collect();
        elements.sort();
        FolnerSet { elements }
    }

    pub fn symmetric_difference_size(&self, other: &FolnerSet) -> usize {
        let only_self = self.elements.iter().filter(|g| !other.contains(g)).count();
        let only_other = other.elements.iter().filter(|g| !self.contains(g)).count();
        only_self + only_other
    }
}

/// The box `{0, …, n−1}^rank`.
pub fn folner_boxes(group: &GroupSpec, n: usize) -> Result<FolnerSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("box side n must be at least 1".into()));
    }
    centered_box(group, 0, n as i64 - 1)
}

/// The box `{lo, …, hi}^rank`, enumerated in lexicographic order.
pub fn centered_box(group: &GroupSpec, lo: i64, hi: i64) -> Result<FolnerSet> {
    if hi < lo {
        return Err(Error::InvalidParameter(format!("empty box [{lo}, {hi}]")));
    }
    let side = (hi - lo + 1) as usize;
    let total = side
        .checked_pow(group.rank() as u32)
        .ok_or_else(|| Error::InvalidParameter("box too large".into()))?;
    let mut elements = Vec::with_capacity(total);
    let mut digits = vec![lo; group.rank()];
    for _ in 0..total {
        elements.push(GroupElement(digits.clone()));
        for d in digits.iter_mut().rev() {
            if *d < hi {
                *d += 1;
                break;
            }
            *d = lo;
        }
    }
    Ok(FolnerSet { elements })
}

/// `L_n = {0, m, 2m, …, (n−1)m} ⊂ mZ`, the Følner sets of the index-`m` subgroup.
pub fn subgroup_boxes(group: &GroupSpec, m: usize, n: usize) -> Result<FolnerSet> {
    if group.rank() != 1 {
        return Err(Error::InvalidParameter(format!(
            "subgroup boxes are defined for rank 1 only, got rank {}",
            group.rank()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("m and n must be at least 1".into()));
    }
    Ok(FolnerSet {
        elements: (0..n as i64).map(|j| GroupElement::scalar(j * m as i64)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `F_n = {0, …, n−1}^d`.
    Boxes,
    /// `F_n = {0, m, …, (n−1)m}` inside `Z`.
    Subgroup { m: usize },
}

/// A Følner sequence `n ↦ F_n`, generated lazily.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolnerSchedule {
    group: GroupSpec,
    kind: ScheduleKind,
    label: String,
}

impl FolnerSchedule {
    pub fn boxes(group: GroupSpec) -> Self {
        Self {
            group,
            kind: ScheduleKind::Boxes,
            label: format!("boxes {{0..n-1}}^{}", group.rank()),
        }
    }

    pub fn subgroup(group: GroupSpec, m: usize) -> Result<Self> {
        // validates rank and m
        subgroup_boxes(&group, m, 1)?;
        Ok(Self {
            group,
            kind: ScheduleKind::Subgroup { m },
            label: format!("subgroup {m}Z boxes {{0,{m},..,(n-1){m}}}"),
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set(&self, n: usize) -> Result<FolnerSet> {
        match self.kind {
            ScheduleKind::Boxes => folner_boxes(&self.group, n),
            ScheduleKind::Subgroup { m } => subgroup_boxes(&self.group, m, n),
        }
    }

    fn check_element(&self, g: &GroupElement) -> Result<()> {
        if g.rank() != self.group.rank() {
            return Err(Error::GroupMismatch {
                left: self.group.rank(),
                right: g.rank(),
            });
        }
        Ok(())
    }
}

/// `|gF_n △ F_n| / |F_n|`, from exact integer counts.
pub fn folner_defect(schedule: &FolnerSchedule, g: &GroupElement, n: usize) -> Result<f64> {
    schedule.check_element(g)?;
    let f = schedule.set(n)?;
    let shifted = f.translate(g);
    Ok(shifted.symmetric_difference_size(&f) as f64 / f.len() as f64)
}

/// `|F_n g △ F_n| / |F_n|`. On an abelian group this coincides with [`folner_defect`].
pub fn two_sided_defect(schedule: &FolnerSchedule, g: &GroupElement, n: usize) -> Result<f64> {
    schedule.check_element(g)?;
    let f = schedule.set(n)?;
    // right translation: f + g, elementwise
    let shifted = FolnerSet {
        elements: f.iter().map(|x| x.add(g)).collect(),
    };
    Ok(shifted.symmetric_difference_size(&f) as f64 / f.len() as f64)
}

/// `max_{2 ≤ n ≤ up_to_n} |⋃_{j<n} F_j^{-1} F_n| / |F_n|`.
pub fn tempered_constant(schedule: &FolnerSchedule, up_to_n: usize) -> Result<f64> {
    if up_to_n < 2 {
        return Err(Error::InvalidParameter("up_to_n must be at least 2".into()));
    }
    // inverses of F_1..F_{n-1}, accumulated
    let mut inverses: HashSet<GroupElement> = HashSet::new();
    let mut best = 0.0f64;
    for n in 2..=up_to_n {
        inverses.extend(schedule.set(n - 1)?.iter().map(GroupElement::inverse));
        let current = schedule.set(n)?;
        let mut union: HashSet<GroupElement> =
            HashSet::with_capacity(inverses.len() + current.len());
        for a in &inverses {
            for b in current.iter() {
                union.insert(a.add(b));
            }
        }
        best = best.max(union.len() as f64 / current.len() as f64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(d: usize) -> GroupSpec {
        GroupSpec::new(d).unwrap()
    }

    #[test]
    fn boxes_have_expected_size_and_order() {
        let b = folner_boxes(&z(2), 3).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.elements()[0], GroupElement::new(vec![0, 0]));
        assert_eq!(b.elements()[1], GroupElement::new(vec![0, 1]));
        assert_eq!(b.elements()[8], GroupElement::new(vec![2, 2]));
        assert!(b.elements().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn defect_of_unit_shift_on_line() {
        let s = FolnerSchedule::boxes(z(1));
        for n in [1usize, 2, 5, 100] {
            let d = folner_defect(&s, &GroupElement::scalar(1), n).unwrap();
            let expected = if n == 1 { 2.0 } else { 2.0 / n as f64 };
            assert!((d - expected).abs() < 1e-15, "n={n}: {d}");
        }
    }

    #[test]
    fn defect_of_box_in_plane_matches_counting() {
        // shifting an n×n box by (1,0) leaves n cells on each side
        let s = FolnerSchedule::boxes(z(2));
        let d = folner_defect(&s, &GroupElement::new(vec![1, 0]), 10).unwrap();
        assert!((d - 20.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn two_sided_equals_left_defect_for_abelian_group() {
        let s = FolnerSchedule::boxes(z(2));
        let g = GroupElement::new(vec![2, -1]);
        for n in 1..8 {
            assert_eq!(
                folner_defect(&s, &g, n).unwrap(),
                two_sided_defect(&s, &g, n).unwrap()
            );
        }
    }

    #[test]
    fn tempered_constant_of_line_boxes() {
        let s = FolnerSchedule::boxes(z(1));
        assert_eq!(tempered_constant(&s, 2).unwrap(), 1.0);
        // the ratio (2n-2)/n is increasing, so the max is at the top
        let c = tempered_constant(&s, 40).unwrap();
        assert!((c - 78.0 / 40.0).abs() < 1e-15);
        assert!(c <= 2.0);
    }

    #[test]
    fn subgroup_boxes_are_spaced() {
        let l = subgroup_boxes(&z(1), 3, 4).unwrap();
        let v: Vec<i64> = l.iter().map(|g| g.coords()[0]).collect();
        assert_eq!(v, vec![0, 3, 6, 9]);
        assert!(subgroup_boxes(&z(2), 3, 4).is_err());
    }

    #[test]
    fn product_and_inverse() {
        let a = folner_boxes(&z(1), 3).unwrap();
        let inv = a.inverse();
        assert_eq!(inv.elements()[0], GroupElement::scalar(-2));
        let p = inv.product(&a);
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let s = FolnerSchedule::boxes(z(2));
        let err = folner_defect(&s, &GroupElement::scalar(1), 3).unwrap_err();
        assert_eq!(err, Error::GroupMismatch { left: 2, right: 1 });
    }
}
