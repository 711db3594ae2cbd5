//! The full shift `X^G` over an alphabet, with the summable product metric
//! `D(x, y) = Σ_g α_g d(x_g, y_g)`, its Bowen and average orbit metrics, and finite window
//! enumeration.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_actions::{centered_box, FolnerSet, GroupElement, GroupSpec};
use crate::metric_spaces::Alphabet;
use crate::packing::PointCloud;

/// Default cap on the number of enumerated window configurations.
pub const DEFAULT_ENUMERATION_CAP: usize = 2_000_000;

/// Geometric weights `α_g = base^{|g|_∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    base: f64,
}

impl Default for WeightFunction {
    fn default() -> Self {
        Self { base: 0.5 }
    }
}

impl WeightFunction {
    pub fn geometric(base: f64) -> Result<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight base must lie in (0,1), got {base}"
            )));
        }
        Ok(Self { base })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn alpha(&self, g: &GroupElement) -> f64 {
        self.alpha_at(g.sup_norm())
    }

    /// `α` on the sphere `|g|_∞ = k`.
    pub fn alpha_at(&self, k: u64) -> f64 {
        self.base.powi(k.min(i32::MAX as u64) as i32)
    }

    /// Number of `g ∈ Z^rank` with `|g|_∞ = k`.
    pub fn shell_size(rank: usize, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let outer = (2 * k + 1) as f64;
        let inner = (2 * k - 1) as f64;
        outer.powi(rank as i32) - inner.powi(rank as i32)
    }

    /// `Σ_{|g|_∞ > k} α_g`.
    pub fn tail(&self, rank: usize, k: u64) -> f64 {
        if rank == 1 {
            return 2.0 * self.base.powi(k as i32 + 1) / (1.0 - self.base);
        }
        let mut sum = 0.0;
        let mut j = k + 1;
        loop {
            let term = Self::shell_size(rank, j) * self.alpha_at(j);
            sum += term;
            // terms are eventually decreasing; stop once they no longer register
            if term <= sum * 1e-18 && j > k + 8 {
                break;
            }
            j += 1;
        }
        sum
    }

    /// `M = Σ_g α_g`; `(1+b)/(1−b)` on `Z`.
    pub fn total_mass(&self, rank: usize) -> f64 {
        1.0 + self.tail(rank, 0)
    }

    /// Smallest `k` with `tail(k)·diam < eps/2`.
    pub fn radius_for(&self, rank: usize, diam: f64, eps: f64) -> u64 {
        let mut k = 0;
        while self.tail(rank, k) * diam >= eps / 2.0 {
            k += 1;
        }
        k
    }
}

/// A point of `X^G` that equals a default symbol outside a finite support. The declared
/// bounding box contains the support and moves with the shift.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationDoc", into = "ConfigurationDoc")]
pub struct Configuration {
    values: BTreeMap<GroupElement, usize>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

/// JSON form of a [`Configuration`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationDoc {
    pub rank: usize,
    #[serde(default)]
    pub support: Vec<(Vec<i64>, usize)>,
    #[serde(default)]
    pub bbox: Option<(Vec<i64>, Vec<i64>)>,
}

impl Configuration {
    /// The configuration equal to the default symbol everywhere.
    pub fn constant(rank: usize) -> Self {
        Self {
            values: BTreeMap::new(),
            lo: vec![0; rank],
            hi: vec![0; rank],
        }
    }

    /// Builds a configuration from its support; the bounding box is the smallest box
    /// containing it (the origin for an empty support).
    pub fn from_support(rank: usize, support: impl IntoIterator<Item = (GroupElement, usize)>) -> Result<Self> {
        let values: BTreeMap<_, _> = support.into_iter().collect();
        if let Some(bad) = values.keys().find(|g| g.rank() != rank) {
            return Err(Error::GroupMismatch {
                left: rank,
                right: bad.rank(),
            });
        }
        let (mut lo, mut hi) = (vec![0; rank], vec![0; rank]);
        if let Some(first) = values.keys().next() {
            lo = first.coords().to_vec();
            hi = lo.clone();
            for g in values.keys() {
                for (k, &c) in g.coords().iter().enumerate() {
                    lo[k] = lo[k].min(c);
                    hi[k] = hi[k].max(c);
                }
            }
        }
        Ok(Self { values, lo, hi })
    }

    /// Replaces the bounding box; it must contain the support.
    pub fn with_bbox(mut self, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != self.rank() || hi.len() != self.rank() {
            return Err(Error::GroupMismatch {
                left: self.rank(),
                right: lo.len(),
            });
        }
        let inside = |g: &GroupElement| {
            g.coords()
                .iter()
                .enumerate()
                .all(|(k, &c)| lo[k] <= c && c <= hi[k])
        };
        if !self.values.keys().all(inside) {
            return Err(Error::InvalidParameter("support leaves the bounding box".into()));
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.lo.len()
    }

    pub fn support(&self) -> &BTreeMap<GroupElement, usize> {
        &self.values
    }

    pub fn bbox(&self) -> (&[i64], &[i64]) {
        (&self.lo, &self.hi)
    }

    /// `x_g`, with `default` outside the support.
    pub fn get(&self, g: &GroupElement, default: usize) -> usize {
        self.values.get(g).copied().unwrap_or(default)
    }

    /// `σ_h x = (x_{g+h})_g`.
    pub fn shift(&self, h: &GroupElement) -> Configuration {
        let values = self.values.iter().map(|(g, &v)| (g.sub(h), v)).collect();
        let move_by = |v: &[i64]| v.iter().zip(h.coords()).map(|(a, b)| a - b).collect();
        Configuration {
            values,
            lo: move_by(&self.lo),
            hi: move_by(&self.hi),
        }
    }
}

impl TryFrom<ConfigurationDoc> for Configuration {
    type Error = Error;

    fn try_from(doc: ConfigurationDoc) -> Result<Self> {
        let c = Configuration::from_support(
            doc.rank,
            doc.support
                .into_iter()
                .map(|(g, v)| (GroupElement::new(g), v)),
        )?;
        match doc.bbox {
            Some((lo, hi)) => c.with_bbox(lo, hi),
            None => Ok(c),
        }
    }
}

impl From<Configuration> for ConfigurationDoc {
    fn from(c: Configuration) -> Self {
        ConfigurationDoc {
            rank: c.rank(),
            support: c
                .values
                .into_iter()
                .map(|(g, v)| (g.coords().to_vec(), v))
                .collect(),
            bbox: Some((c.lo, c.hi)),
        }
    }
}

/// The full shift over an alphabet, with truncation window `S = {−k..k}^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    alphabet: Arc<Alphabet>,
    group: GroupSpec,
    weights: WeightFunction,
    window_radius: u64,
    window: FolnerSet,
    default_symbol: usize,
    tail_bound: f64,
}

impl ShiftSystem {
    /// A system whose window is the smallest box with `tail(S)·diam(X) < eps_min/2`.
    pub fn new(
        alphabet: Alphabet,
        group: GroupSpec,
        weights: WeightFunction,
        default_symbol: usize,
        eps_min: f64,
    ) -> Result<Self> {
        if !(eps_min > 0.0) {
            return Err(Error::InvalidParameter(format!("eps_min must be positive, got {eps_min}")));
        }
        let radius = weights.radius_for(group.rank(), alphabet.diameter(), eps_min);
        Self::with_window_radius(alphabet, group, weights, default_symbol, radius)
    }

    pub fn with_window_radius(
        alphabet: Alphabet,
        group: GroupSpec,
        weights: WeightFunction,
        default_symbol: usize,
        radius: u64,
    ) -> Result<Self> {
        if default_symbol >= alphabet.len() {
            return Err(Error::IndexOutOfRange {
                index: default_symbol,
                len: alphabet.len(),
            });
        }
        let r = radius as i64;
        let window = centered_box(&group, -r, r)?;
        let tail_bound = weights.tail(group.rank(), radius) * alphabet.diameter();
        Ok(Self {
            alphabet: Arc::new(alphabet),
            group,
            weights,
            window_radius: radius,
            window,
            default_symbol,
            tail_bound,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn weights(&self) -> &WeightFunction {
        &self.weights
    }

    pub fn window(&self) -> &FolnerSet {
        &self.window
    }

    pub fn window_radius(&self) -> u64 {
        self.window_radius
    }

    pub fn default_symbol(&self) -> usize {
        self.default_symbol
    }

    /// `Σ_{g∉S} α_g · diam(X)`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.total_mass(self.group.rank())
    }

    /// Window radius this system would pick for smallest scale `eps`.
    pub fn radius_for(&self, eps: f64) -> u64 {
        self.weights
            .radius_for(self.group.rank(), self.alphabet.diameter(), eps)
    }

    /// Same alphabet and weights with a different window radius.
    pub fn with_radius(&self, radius: u64) -> Result<Self> {
        Self::with_window_radius(
            (*self.alphabet).clone(),
            self.group,
            self.weights,
            self.default_symbol,
            radius,
        )
    }

    pub(crate) fn check_config(&self, x: &Configuration) -> Result<()> {
        if x.rank() != self.group.rank() {
            return Err(Error::GroupMismatch {
                left: self.group.rank(),
                right: x.rank(),
            });
        }
        let len = self.alphabet.len();
        if let Some(&v) = x.values.values().find(|&&v| v >= len) {
            return Err(Error::AlphabetMismatch(format!(
                "symbol {v} outside an alphabet of {len} points"
            )));
        }
        Ok(())
    }

    /// `Σ_{c} α_{c−h} d(x_c, y_c)` over the coordinates where either configuration leaves
    /// the default, i.e. the exact `D(σ_h x, σ_h y)`.
    pub(crate) fn shifted_distance(&self, x: &Configuration, y: &Configuration, h: &GroupElement) -> f64 {
        let mut sites: Vec<&GroupElement> = x.values.keys().chain(y.values.keys()).collect();
        sites.sort();
        sites.dedup();
        sites
            .into_iter()
            .map(|c| {
                let d = self.alphabet.dist(
                    x.get(c, self.default_symbol),
                    y.get(c, self.default_symbol),
                );
                if d == 0.0 {
                    0.0
                } else {
                    self.weights.alpha(&c.sub(h)) * d
                }
            })
            .sum()
    }
}

/// A value of the truncated product metric with the bound on what truncation dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `Σ_{g∈S} α_g d(x_g, y_g)`, exact whenever `x` and `y` agree outside `S`.
pub fn product_metric(sys: &ShiftSystem, x: &Configuration, y: &Configuration) -> Result<MetricValue> {
    sys.check_config(x)?;
    sys.check_config(y)?;
    let value = sys
        .window
        .iter()
        .map(|g| {
            let d = sys.alphabet.dist(x.get(g, sys.default_symbol), y.get(g, sys.default_symbol));
            sys.weights.alpha(g) * d
        })
        .sum();
    Ok(MetricValue {
        value,
        tail_bound: sys.tail_bound,
    })
}

/// `σ_h`.
pub fn shift_apply(sys: &ShiftSystem, h: &GroupElement, x: &Configuration) -> Result<Configuration> {
    sys.check_config(x)?;
    if h.rank() != sys.group.rank() {
        return Err(Error::GroupMismatch {
            left: sys.group.rank(),
            right: h.rank(),
        });
    }
    Ok(x.shift(h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OrbitMetric {
    /// `d_F = max_{g∈F} D(gx, gy)`.
    #[default]
    Sup,
    /// `d̄_F = (1/|F|) Σ_{g∈F} D(gx, gy)`.
    Average,
}

/// A system, an orbit segment `F` and which orbit metric to use.
#[derive(Debug, Clone)]
pub struct BowenContext<'a> {
    pub system: &'a ShiftSystem,
    pub f: FolnerSet,
    pub mode: OrbitMetric,
}

impl<'a> BowenContext<'a> {
    pub fn new(system: &'a ShiftSystem, f: FolnerSet, mode: OrbitMetric) -> Result<Self> {
        if f.rank() != system.group.rank() {
            return Err(Error::GroupMismatch {
                left: system.group.rank(),
                right: f.rank(),
            });
        }
        Ok(Self { system, f, mode })
    }
}

/// `d_F(x, y)` or `d̄_F(x, y)`, computed without truncation.
pub fn bowen_distance(ctx: &BowenContext, x: &Configuration, y: &Configuration) -> Result<f64> {
    ctx.system.check_config(x)?;
    ctx.system.check_config(y)?;
    let values = ctx.f.iter().map(|h| ctx.system.shifted_distance(x, y, h));
    Ok(match ctx.mode {
        OrbitMetric::Sup => values.fold(0.0, f64::max),
        OrbitMetric::Average => values.sum::<f64>() / ctx.f.len() as f64,
    })
}

/// Pinned coordinates of a cylinder set.
pub type Constraints = BTreeMap<GroupElement, usize>;

/// All configurations supported on a site set, each site ranging over its own symbol list,
/// indexed positionally in lexicographic order (first site most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEnumerator {
    rank: usize,
    sites: Vec<GroupElement>,
    choices: Vec<Vec<usize>>,
    len: usize,
}

impl WindowEnumerator {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sites(&self) -> &[GroupElement] {
        &self.sites
    }

    pub fn choices(&self) -> &[Vec<usize>] {
        &self.choices
    }

    /// Symbol at each site for configuration `idx`.
    pub fn symbols(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sites.len()];
        for (slot, ch) in out.iter_mut().zip(&self.choices).rev() {
            *slot = ch[idx % ch.len()];
            idx /= ch.len();
        }
        out
    }

    pub fn config(&self, idx: usize) -> Configuration {
        let support = self.sites.iter().cloned().zip(self.symbols(idx));
        let c = Configuration::from_support(self.rank, support).expect("sites share the rank");
        match (self.sites.first(), self.sites.last()) {
            (Some(_), Some(_)) => {
                let mut lo = vec![i64::MAX; self.rank];
                let mut hi = vec![i64::MIN; self.rank];
                for g in &self.sites {
                    for (k, &v) in g.coords().iter().enumerate() {
                        lo[k] = lo[k].min(v);
                        hi[k] = hi[k].max(v);
                    }
                }
                c.with_bbox(lo, hi).expect("support lies in the site box")
            }
            _ => c,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.len).map(move |i| self.config(i))
    }
}

/// Configurations on `S·F` with symbols from `net`, default elsewhere.
pub fn window_configurations(sys: &ShiftSystem, net: &[usize], f: &FolnerSet) -> Result<WindowEnumerator> {
    cylinder_configurations(sys, net, f, &Constraints::new(), DEFAULT_ENUMERATION_CAP)
}

/// As [`window_configurations`] with some coordinates pinned, under an explicit cap.
pub fn cylinder_configurations(
    sys: &ShiftSystem,
    net: &[usize],
    f: &FolnerSet,
    constraints: &Constraints,
    cap: usize,
) -> Result<WindowEnumerator> {
    if net.is_empty() {
        return Err(Error::InvalidParameter("symbol net must be non-empty".into()));
    }
    let len = sys.alphabet.len();
    if let Some(&index) = net.iter().chain(constraints.values()).find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let sites = sys.window.product(f).elements().to_vec();
    for g in constraints.keys() {
        if sites.binary_search(g).is_err() {
            return Err(Error::InvalidParameter(format!(
                "constraint at {:?} lies outside the window S·F",
                g.coords()
            )));
        }
    }
    let choices: Vec<Vec<usize>> = sites
        .iter()
        .map(|g| match constraints.get(g) {
            Some(&v) => vec![v],
            None => net.to_vec(),
        })
        .collect();
    let required: f64 = choices.iter().map(|c| c.len() as f64).product();
    if required > cap as f64 {
        return Err(Error::CapExceeded {
            cap: "enumeration",
            required,
            limit: cap,
        });
    }
    Ok(WindowEnumerator {
        rank: sys.group.rank(),
        sites,
        choices,
        len: required as usize,
    })
}

/// `a × b` over the same group and weights, with the max metric on symbols.
pub fn product_system(a: &ShiftSystem, b: &ShiftSystem) -> Result<ShiftSystem> {
    if a.group != b.group {
        return Err(Error::GroupMismatch {
            left: a.group.rank(),
            right: b.group.rank(),
        });
    }
    if a.weights != b.weights {
        return Err(Error::InvalidParameter("product systems need identical weights".into()));
    }
    let alphabet = Alphabet::product(&a.alphabet, &b.alphabet)?;
    let default = a.default_symbol * b.alphabet.len() + b.default_symbol;
    ShiftSystem::with_window_radius(
        alphabet,
        a.group,
        a.weights,
        default,
        a.window_radius.max(b.window_radius),
    )
}

/// The same shift over the alphabet with all coordinates multiplied by `factor`.
pub fn coordinate_scaling(sys: &ShiftSystem, factor: f64) -> Result<ShiftSystem> {
    let alphabet = sys.alphabet.scaled(factor)?;
    ShiftSystem::with_window_radius(
        alphabet,
        sys.group,
        sys.weights,
        sys.default_symbol,
        sys.window_radius,
    )
}

/// Materialized window configurations viewed as a point cloud under `d_F` or `d̄_F`.
/// Distances are exact: both configurations take the default outside the sites.
#[derive(Debug, Clone)]
pub struct ConfigCloud {
    alphabet: Arc<Alphabet>,
    n_sites: usize,
    symbols: Vec<u32>,
    /// `weights[h·n_sites + c] = α_{site_c − h}` for `h ∈ F`.
    weights: Vec<f64>,
    n_f: usize,
    mode: OrbitMetric,
    len: usize,
}

impl ConfigCloud {
    pub fn new(ctx: &BowenContext, windows: &WindowEnumerator) -> Self {
        let n_sites = windows.sites.len();
        let mut symbols = Vec::with_capacity(windows.len * n_sites);
        for i in 0..windows.len {
            symbols.extend(windows.symbols(i).into_iter().map(|s| s as u32));
        }
        let mut weights = Vec::with_capacity(ctx.f.len() * n_sites);
        for h in ctx.f.iter() {
            for c in &windows.sites {
                weights.push(ctx.system.weights.alpha(&c.sub(h)));
            }
        }
        Self {
            alphabet: ctx.system.alphabet.clone(),
            n_sites,
            symbols,
            weights,
            n_f: ctx.f.len(),
            mode: ctx.mode,
            len: windows.len,
        }
    }

    pub fn symbols(&self, i: usize) -> &[u32] {
        &self.symbols[i * self.n_sites..(i + 1) * self.n_sites]
    }
}

impl PointCloud for ConfigCloud {
    fn len(&self) -> usize {
        self.len
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.symbols(i), self.symbols(j));
        let diffs: Vec<(usize, f64)> = a
            .iter()
            .zip(b)
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(c, (&x, &y))| (c, self.alphabet.dist(x as usize, y as usize)))
            .collect();
        if diffs.is_empty() {
            return 0.0;
        }
        let per_h = (0..self.n_f).map(|h| {
            let w = &self.weights[h * self.n_sites..(h + 1) * self.n_sites];
            diffs.iter().map(|&(c, d)| w[c] * d).sum::<f64>()
        });
        match self.mode {
            OrbitMetric::Sup => per_h.fold(0.0, f64::max),
            OrbitMetric::Average => per_h.sum::<f64>() / self.n_f as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_actions::folner_boxes;
    use proptest::prelude::*;

    fn z() -> GroupSpec {
        GroupSpec::new(1).unwrap()
    }

    fn g(v: i64) -> GroupElement {
        GroupElement::scalar(v)
    }

    fn net_system(k: usize, radius: u64) -> ShiftSystem {
        ShiftSystem::with_window_radius(
            Alphabet::unit_interval_net(k).unwrap(),
            z(),
            WeightFunction::default(),
            0,
            radius,
        )
        .unwrap()
    }

    #[test]
    fn weight_sums_on_the_line() {
        let w = WeightFunction::default();
        assert!((w.total_mass(1) - 3.0).abs() < 1e-15);
        assert!((w.tail(1, 2) - 0.5).abs() < 1e-15);
        // Z^2: Σ_k (8k) 2^{-k} + 1 = 1 + 8·2 = 17
        assert!((w.total_mass(2) - 17.0).abs() < 1e-9);
        let direct: f64 = (3..200).map(|k| 8.0 * k as f64 * 0.5f64.powi(k)).sum();
        assert!((w.tail(2, 2) - direct).abs() < 1e-12);
    }

    #[test]
    fn window_radius_meets_tail_condition() {
        let sys = ShiftSystem::new(Alphabet::unit_interval_net(11).unwrap(), z(), WeightFunction::default(), 0, 0.01).unwrap();
        let k = sys.window_radius();
        assert!(sys.tail_bound() < 0.005);
        assert!(WeightFunction::default().tail(1, k - 1) >= 0.005);
        assert_eq!(sys.window().len(), 2 * k as usize + 1);
    }

    #[test]
    fn product_metric_examples() {
        let sys = net_system(3, 5);
        let x = Configuration::constant(1);
        assert_eq!(product_metric(&sys, &x, &x).unwrap().value, 0.0);
        let y0 = Configuration::from_support(1, [(g(0), 2)]).unwrap();
        assert_eq!(product_metric(&sys, &x, &y0).unwrap().value, 1.0);
        let y1 = Configuration::from_support(1, [(g(1), 2)]).unwrap();
        assert_eq!(product_metric(&sys, &x, &y1).unwrap().value, 0.5);
        let bad = Configuration::from_support(1, [(g(0), 7)]).unwrap();
        assert!(matches!(product_metric(&sys, &x, &bad), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn bowen_examples() {
        let sys = net_system(3, 5);
        let x = Configuration::constant(1);
        let y = Configuration::from_support(1, [(g(0), 2)]).unwrap();
        let f = folner_boxes(&z(), 2).unwrap();
        let sup = BowenContext::new(&sys, f.clone(), OrbitMetric::Sup).unwrap();
        let avg = BowenContext::new(&sys, f, OrbitMetric::Average).unwrap();
        assert_eq!(bowen_distance(&sup, &x, &y).unwrap(), 1.0);
        assert_eq!(bowen_distance(&avg, &x, &y).unwrap(), 0.75);
        let single = BowenContext::new(&sys, FolnerSet::singleton(g(0)), OrbitMetric::Sup).unwrap();
        assert_eq!(
            bowen_distance(&single, &x, &y).unwrap(),
            product_metric(&sys, &x, &y).unwrap().value
        );
    }

    #[test]
    fn shift_examples() {
        let sys = net_system(3, 2);
        let x = Configuration::from_support(1, [(g(1), 2)]).unwrap();
        let y = shift_apply(&sys, &g(1), &x).unwrap();
        assert_eq!(y.get(&g(0), 0), 2);
        assert_eq!(shift_apply(&sys, &g(0), &x).unwrap(), x);
        assert_eq!(shift_apply(&sys, &g(-1), &y).unwrap(), x);
    }

    #[test]
    fn enumeration_counts_and_order() {
        let sys = net_system(3, 1);
        let f = FolnerSet::singleton(g(0));
        // |SF| = 3
        assert_eq!(window_configurations(&sys, &[0], &f).unwrap().len(), 1);
        let e = window_configurations(&sys, &[0, 2], &f).unwrap();
        assert_eq!(e.len(), 8);
        assert_eq!(e.symbols(0), vec![0, 0, 0]);
        assert_eq!(e.symbols(1), vec![0, 0, 2]);
        assert_eq!(e.symbols(4), vec![2, 0, 0]);
        let f2 = folner_boxes(&z(), 2).unwrap();
        assert_eq!(window_configurations(&sys, &[0, 1, 2], &f2).unwrap().len(), 81);
        let capped = cylinder_configurations(&sys, &[0, 1, 2], &f2, &Constraints::new(), 80);
        assert_eq!(
            capped.unwrap_err(),
            Error::CapExceeded {
                cap: "enumeration",
                required: 81.0,
                limit: 80
            }
        );
    }

    #[test]
    fn cylinders_pin_sites() {
        let sys = net_system(3, 1);
        let f = FolnerSet::singleton(g(0));
        let mut pins = Constraints::new();
        pins.insert(g(0), 1);
        let e = cylinder_configurations(&sys, &[0, 1, 2], &f, &pins, 100).unwrap();
        assert_eq!(e.len(), 9);
        assert!(e.iter().all(|c| c.get(&g(0), 0) == 1));
        pins.insert(g(5), 1);
        assert!(cylinder_configurations(&sys, &[0, 1], &f, &pins, 100).is_err());
    }

    #[test]
    fn config_cloud_matches_bowen_distance() {
        let sys = net_system(3, 1);
        let f = folner_boxes(&z(), 2).unwrap();
        for mode in [OrbitMetric::Sup, OrbitMetric::Average] {
            let ctx = BowenContext::new(&sys, f.clone(), mode).unwrap();
            let e = window_configurations(&sys, &[0, 1, 2], &f).unwrap();
            let cloud = ConfigCloud::new(&ctx, &e);
            for i in (0..e.len()).step_by(7) {
                for j in (0..e.len()).step_by(5) {
                    let direct = bowen_distance(&ctx, &e.config(i), &e.config(j)).unwrap();
                    assert!((cloud.dist(i, j) - direct).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn products_and_scaling() {
        let a = net_system(3, 2);
        let one = ShiftSystem::with_window_radius(
            Alphabet::abs1d("pt", vec![0.0]).unwrap(),
            z(),
            WeightFunction::default(),
            0,
            2,
        )
        .unwrap();
        let p = product_system(&a, &one).unwrap();
        assert_eq!(p.alphabet().len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.alphabet().dist(i, j), a.alphabet().dist(i, j));
            }
        }
        let q = product_system(&a, &net_system(4, 1)).unwrap();
        assert_eq!(q.alphabet().len(), 12);
        let s = coordinate_scaling(&net_system(2, 2), 2.0).unwrap();
        assert_eq!(s.alphabet().line_points().unwrap(), &[0.0, 2.0]);
        let other = ShiftSystem::with_window_radius(
            Alphabet::unit_interval_net(2).unwrap(),
            GroupSpec::new(2).unwrap(),
            WeightFunction::default(),
            0,
            1,
        )
        .unwrap();
        assert!(matches!(product_system(&a, &other), Err(Error::GroupMismatch { .. })));
    }

    #[test]
    fn configuration_json_round_trip() {
        let x = Configuration::from_support(2, [(GroupElement::new(vec![1, -1]), 3)]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(serde_json::from_str::<Configuration>(&s).unwrap(), x);
    }

    fn config_strategy() -> impl Strategy<Value = Configuration> {
        prop::collection::btree_map(-4i64..=4, 0usize..5, 0..6).prop_map(|m| {
            Configuration::from_support(1, m.into_iter().map(|(k, v)| (g(k), v)))
                .unwrap()
                .with_bbox(vec![-4], vec![4])
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn orbit_metric_invariants(x in config_strategy(), y in config_strategy(), z3 in config_strategy(), n in 1usize..5) {
            let sys = net_system(5, 12);
            let f = folner_boxes(&z(), n).unwrap();
            let big = folner_boxes(&z(), n + 2).unwrap();
            let sup = BowenContext::new(&sys, f.clone(), OrbitMetric::Sup).unwrap();
            let avg = BowenContext::new(&sys, f, OrbitMetric::Average).unwrap();
            let sup_big = BowenContext::new(&sys, big, OrbitMetric::Sup).unwrap();
            let ds = bowen_distance(&sup, &x, &y).unwrap();
            prop_assert!(ds + 1e-15 >= bowen_distance(&avg, &x, &y).unwrap());
            prop_assert!(ds <= bowen_distance(&sup_big, &x, &y).unwrap() + 1e-15);
            let dxy = product_metric(&sys, &x, &y).unwrap().value;
            let dyz = product_metric(&sys, &y, &z3).unwrap().value;
            let dxz = product_metric(&sys, &x, &z3).unwrap().value;
            prop_assert!(dxz <= dxy + dyz + 1e-12);
            // enlarging S moves the truncated value by at most the tail bound
            let small = net_system(5, 2);
            let trunc = product_metric(&small, &x, &y).unwrap();
            prop_assert!((dxy - trunc.value).abs() <= trunc.tail_bound + 1e-12);
        }

        #[test]
        fn shift_is_a_group_action(x in config_strategy(), a in -5i64..5, b in -5i64..5) {
            let sys = net_system(5, 2);
            let ab = shift_apply(&sys, &g(a + b), &x).unwrap();
            let seq = shift_apply(&sys, &g(a), &shift_apply(&sys, &g(b), &x).unwrap()).unwrap();
            prop_assert_eq!(ab, seq);
        }
    }
}
