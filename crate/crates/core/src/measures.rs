//! Invariant measures on shift systems and their ε-entropies: Bowen-ball masses, Katok
//! ε-entropy (sup and average orbit metric), Brin–Katok local entropy and the convex
//! combination entropy `F(μ, ε) = Σ λ_j h_{μ_j}(ε)`.
//!
//! Katok counts are computed on the window model used by the entropy curves: configurations
//! on `S·F` with the default symbol elsewhere, carrying the pushed-forward measure. Small
//! windows are enumerated and covered greedily (or exhaustively up to the oracle threshold).
//! Large windows of product measures use a product of per-site covers at radius `ε/M`, whose
//! union lies inside a Bowen ball because `Σ_g α_g = M`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{Caps, EpsTail};
use crate::dimensions::{estimate_from_tails, DimensionEstimate};
use crate::error::{Error, Result};
use crate::group_actions::{FolnerSchedule, FolnerSet, GroupElement};
use crate::metric_spaces::{tail_window, Alphabet, MetricKind};
use crate::packing::{self, snap, Adjacency, PointCloud, ORACLE_THRESHOLD};
use crate::shift_systems::{
    bowen_distance, cylinder_configurations, BowenContext, ConfigCloud, Configuration, Constraints, OrbitMetric,
    ShiftSystem,
};

const PROB_TOL: f64 = 1e-12;
/// Largest alphabet handled by the generic (quadratic) per-site routines.
const GENERIC_SITE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Product,
    Empirical,
    Dirac,
}

/// A configuration with an integer multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub config: Configuration,
    pub multiplicity: u64,
}

/// A shift-invariant (product, dirac at a fixed point) or empirical measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub enum MeasureSpec {
    /// i.i.d. sites; `None` means uniform over the alphabet.
    Product { site_weights: Option<Vec<f64>> },
    Empirical { samples: Vec<Sample> },
    Dirac { atom: Configuration },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub kind: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Sample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<Configuration>,
}

impl TryFrom<MeasureDoc> for MeasureSpec {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        match doc.kind {
            MeasureKind::Product => match doc.site_weights {
                Some(w) => Self::product(w),
                None => Ok(Self::uniform()),
            },
            MeasureKind::Empirical => Self::empirical(
                doc.samples
                    .ok_or_else(|| Error::Parse("empirical measure needs samples".into()))?,
            ),
            MeasureKind::Dirac => Ok(Self::dirac(
                doc.atom.ok_or_else(|| Error::Parse("dirac measure needs an atom".into()))?,
            )),
        }
    }
}

impl From<MeasureSpec> for MeasureDoc {
    fn from(m: MeasureSpec) -> Self {
        let mut doc = MeasureDoc {
            kind: m.kind(),
            site_weights: None,
            samples: None,
            atom: None,
        };
        match m {
            MeasureSpec::Product { site_weights } => doc.site_weights = site_weights,
            MeasureSpec::Empirical { samples } => doc.samples = Some(samples),
            MeasureSpec::Dirac { atom } => doc.atom = Some(atom),
        }
        doc
    }
}

impl MeasureSpec {
    /// The uniform product measure (quantized Lebesgue on a net).
    pub fn uniform() -> Self {
        Self::Product { site_weights: None }
    }

    pub fn product(site_weights: Vec<f64>) -> Result<Self> {
        check_probability(&site_weights)?;
        Ok(Self::Product {
            site_weights: Some(site_weights),
        })
    }

    pub fn empirical(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|s| s.multiplicity == 0) {
            return Err(Error::InvalidParameter(
                "empirical measures need samples with positive multiplicity".into(),
            ));
        }
        Ok(Self::Empirical { samples })
    }

    /// `(1/|F|) Σ_{h∈F} δ_{σ_h x}`.
    pub fn empirical_orbit(sys: &ShiftSystem, x: &Configuration, f: &FolnerSet) -> Result<Self> {
        sys.check_config(x)?;
        let samples = f
            .iter()
            .map(|h| Sample {
                config: x.shift(h),
                multiplicity: 1,
            })
            .collect();
        Self::empirical(samples)
    }

    pub fn dirac(atom: Configuration) -> Self {
        Self::Dirac { atom }
    }

    pub fn kind(&self) -> MeasureKind {
        match self {
            Self::Product { .. } => MeasureKind::Product,
            Self::Empirical { .. } => MeasureKind::Empirical,
            Self::Dirac { .. } => MeasureKind::Dirac,
        }
    }

    /// Checks the measure against a system's alphabet and rank.
    pub fn validate_for(&self, sys: &ShiftSystem) -> Result<()> {
        match self {
            Self::Product { site_weights: Some(w) } if w.len() != sys.alphabet().len() => Err(Error::AlphabetMismatch(
                format!("{} site weights for {} alphabet points", w.len(), sys.alphabet().len()),
            )),
            Self::Product { .. } => Ok(()),
            Self::Empirical { samples } => samples.iter().try_for_each(|s| sys.check_config(&s.config)),
            Self::Dirac { atom } => sys.check_config(atom),
        }
    }
}

fn check_probability(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter("probability entries must be finite and non-negative".into()));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// A finite convex combination `Σ λ_j μ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, MeasureSpec)>", into = "Vec<(f64, MeasureSpec)>")]
pub struct ConvexCombination {
    components: Vec<(f64, MeasureSpec)>,
}

impl ConvexCombination {
    pub fn new(components: Vec<(f64, MeasureSpec)>) -> Result<Self> {
        let lambdas: Vec<f64> = components.iter().map(|c| c.0).collect();
        check_probability(&lambdas)?;
        if lambdas.iter().any(|&l| l > 1.0) {
            return Err(Error::InvalidParameter("weights must lie in [0, 1]".into()));
        }
        Ok(Self { components })
    }

    pub fn single(mu: MeasureSpec) -> Self {
        Self {
            components: vec![(1.0, mu)],
        }
    }

    pub fn components(&self) -> &[(f64, MeasureSpec)] {
        &self.components
    }
}

impl TryFrom<Vec<(f64, MeasureSpec)>> for ConvexCombination {
    type Error = Error;

    fn try_from(v: Vec<(f64, MeasureSpec)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ConvexCombination> for Vec<(f64, MeasureSpec)> {
    fn from(c: ConvexCombination) -> Self {
        c.components
    }
}

/// Per-site probabilities: uniform or explicit.
#[derive(Debug, Clone, Copy)]
enum SiteLaw<'a> {
    Uniform,
    Explicit(&'a [f64]),
}

impl SiteLaw<'_> {
    fn of(site_weights: &Option<Vec<f64>>) -> SiteLaw<'_> {
        match site_weights {
            Some(w) => SiteLaw::Explicit(w),
            None => SiteLaw::Uniform,
        }
    }

    fn prob(&self, a: &Alphabet, i: usize) -> f64 {
        match self {
            SiteLaw::Uniform => 1.0 / a.len() as f64,
            SiteLaw::Explicit(w) => w[i],
        }
    }
}

/// Mass of the open ball `{b : d(a, b) < r}` in one site.
fn site_ball_mass(alphabet: &Alphabet, law: SiteLaw, center: usize, r: f64) -> f64 {
    match law {
        SiteLaw::Uniform => uniform_ball_count(alphabet, center, r) as f64 / alphabet.len() as f64,
        SiteLaw::Explicit(w) => (0..alphabet.len())
            .filter(|&b| alphabet.dist(center, b) < r)
            .map(|b| w[b])
            .sum(),
    }
}

fn uniform_ball_count(alphabet: &Alphabet, center: usize, r: f64) -> usize {
    if let Some(factors) = alphabet.factors() {
        return factors
            .iter()
            .zip(alphabet.split_index(center))
            .map(|(f, i)| uniform_ball_count(f, i, r))
            .product();
    }
    if let Some(pts) = alphabet.line_points() {
        let c = pts[center];
        let lo = pts.partition_point(|&p| p <= c - r);
        let hi = pts.partition_point(|&p| p < c + r);
        // guard against rounding in c ± r
        let count = (lo..hi).filter(|&i| (pts[i] - c).abs() < r).count();
        return count;
    }
    (0..alphabet.len()).filter(|&b| alphabet.dist(center, b) < r).count()
}

/// `max_a μ_site(B(a, r))`, or `None` when the alphabet is too large to scan.
fn max_site_ball_mass(alphabet: &Alphabet, law: SiteLaw, r: f64) -> Option<f64> {
    match (law, alphabet.factors()) {
        (SiteLaw::Uniform, Some(factors)) => factors
            .iter()
            .map(|f| max_site_ball_mass(f, SiteLaw::Uniform, r))
            .product(),
        _ => {
            if let Some(pts) = alphabet.line_points() {
                // open window of half-width r centred at each point, two pointers
                let (mut lo, mut hi, mut best, mut mass) = (0usize, 0usize, 0.0f64, 0.0f64);
                for c in 0..pts.len() {
                    while hi < pts.len() && pts[hi] - pts[c] < r {
                        mass += law.prob(alphabet, hi);
                        hi += 1;
                    }
                    while pts[c] - pts[lo] >= r {
                        mass -= law.prob(alphabet, lo);
                        lo += 1;
                    }
                    best = best.max(mass);
                }
                return Some(best.min(1.0));
            }
            (alphabet.len() <= GENERIC_SITE_LIMIT).then(|| {
                (0..alphabet.len())
                    .map(|c| site_ball_mass(alphabet, law, c, r))
                    .fold(0.0, f64::max)
            })
        }
    }
}

/// Log of the number of open balls of radius `t` (centred at alphabet points) needed to cover
/// site mass `q`.
fn site_cover_log(alphabet: &Alphabet, law: SiteLaw, t: f64, q: f64) -> Result<f64> {
    if let (SiteLaw::Uniform, Some(factors)) = (law, alphabet.factors()) {
        // balls of the max metric are products of factor balls
        let qf = q.powf(1.0 / factors.len() as f64);
        return factors.iter().map(|f| site_cover_log(f, SiteLaw::Uniform, t, qf)).sum();
    }
    let masses: Vec<f64> = if let Some(pts) = alphabet.line_points() {
        // disjoint sweep blocks: centre is the last point within t of the block start
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < pts.len() {
            let mut c = i;
            while c + 1 < pts.len() && pts[c + 1] - pts[i] < t {
                c += 1;
            }
            let mut j = c;
            let mut mass = 0.0;
            for k in i..pts.len() {
                if pts[k] - pts[c] >= t {
                    break;
                }
                mass += law.prob(alphabet, k);
                j = k;
            }
            blocks.push(mass);
            i = j + 1;
        }
        blocks
    } else if alphabet.len() <= GENERIC_SITE_LIMIT {
        let all: Vec<usize> = (0..alphabet.len()).collect();
        let adj = Adjacency::build(alphabet, &all, t.next_down());
        let probs: Vec<f64> = all.iter().map(|&i| law.prob(alphabet, i)).collect();
        let count = greedy_mass_cover(&adj, &probs, q).len();
        return Ok((count as f64).ln());
    } else {
        return Err(Error::UnsupportedMetric(format!(
            "per-site cover of a {:?} alphabet with {} points",
            alphabet.kind(),
            alphabet.len()
        )));
    };
    let mut sorted = masses;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut count = 0usize;
    for m in sorted {
        if acc >= q - PROB_TOL {
            break;
        }
        acc += m;
        count += 1;
    }
    Ok((count.max(1) as f64).ln())
}

/// Certified bracket for the mass of a Bowen ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMass {
    pub log_lower: f64,
    pub log_upper: f64,
    pub method: BallMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallMethod {
    /// Point masses (dirac or empirical), exact.
    Atomic,
    /// Window patterns enumerated; the bracket comes from the truncation tail only.
    Enumerated,
    /// Per-site inner and outer balls.
    Factorized,
}

impl BallMass {
    pub fn lower(&self) -> f64 {
        self.log_lower.exp()
    }

    pub fn upper(&self) -> f64 {
        self.log_upper.exp()
    }

    pub fn is_exact(&self) -> bool {
        self.log_lower == self.log_upper
    }

    fn exact(p: f64) -> Self {
        Self {
            log_lower: p.ln(),
            log_upper: p.ln(),
            method: BallMethod::Atomic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallOptions {
    /// Largest number of window patterns to enumerate before factorizing.
    pub enumeration_cap: usize,
    /// Largest accepted `upper − lower`.
    pub tolerance: f64,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self {
            enumeration_cap: 1 << 16,
            tolerance: 1.0,
        }
    }
}

/// `μ(B_F(center, ε))` under `d_F` (sup) or `d̄_F` (average).
pub fn measure_of_bowen_ball(mu: &MeasureSpec, ctx: &BowenContext, center: &Configuration, epsilon: f64) -> Result<BallMass> {
    measure_of_bowen_ball_with(mu, ctx, center, epsilon, &BallOptions::default())
}

pub fn measure_of_bowen_ball_with(
    mu: &MeasureSpec,
    ctx: &BowenContext,
    center: &Configuration,
    epsilon: f64,
    opts: &BallOptions,
) -> Result<BallMass> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let sys = ctx.system;
    mu.validate_for(sys)?;
    sys.check_config(center)?;
    let eps = snap(epsilon);
    let mass = match mu {
        MeasureSpec::Dirac { atom } => {
            let inside = bowen_distance(ctx, center, atom)? < eps;
            BallMass::exact(if inside { 1.0 } else { 0.0 })
        }
        MeasureSpec::Empirical { samples } => {
            let total: u64 = samples.iter().map(|s| s.multiplicity).sum();
            let mut hit = 0u64;
            for s in samples {
                if bowen_distance(ctx, center, &s.config)? < eps {
                    hit += s.multiplicity;
                }
            }
            BallMass::exact(hit as f64 / total as f64)
        }
        MeasureSpec::Product { site_weights } => {
            let law = SiteLaw::of(site_weights);
            let sites = sys.window().product(&ctx.f).elements().to_vec();
            let patterns = (sys.alphabet().len() as f64).powi(sites.len() as i32);
            if patterns <= opts.enumeration_cap as f64 {
                enumerated_ball(ctx, law, center, &sites, eps)
            } else {
                factorized_ball(ctx, law, center, &sites, eps)
            }
        }
    };
    let width = mass.upper() - mass.lower();
    if width > opts.tolerance {
        return Err(Error::InsufficientWindow {
            width,
            tolerance: opts.tolerance,
        });
    }
    Ok(mass)
}

fn enumerated_ball(ctx: &BowenContext, law: SiteLaw, center: &Configuration, sites: &[GroupElement], eps: f64) -> BallMass {
    let sys = ctx.system;
    let a = sys.alphabet();
    let k = a.len();
    let x: Vec<usize> = sites.iter().map(|g| center.get(g, sys.default_symbol())).collect();
    let dist: Vec<Vec<f64>> = x.iter().map(|&xc| (0..k).map(|b| a.dist(xc, b)).collect()).collect();
    let weights: Vec<Vec<f64>> = ctx
        .f
        .iter()
        .map(|h| sites.iter().map(|c| sys.weights().alpha(&c.sub(h))).collect())
        .collect();
    let tail = sys.tail_bound();
    let (mut inner, mut outer) = (0.0, 0.0);
    let mut digits = vec![0usize; sites.len()];
    loop {
        let per_h = weights
            .iter()
            .map(|w| w.iter().zip(&digits).zip(&dist).map(|((wc, &y), dc)| wc * dc[y]).sum::<f64>());
        let v = match ctx.mode {
            OrbitMetric::Sup => per_h.fold(0.0, f64::max),
            OrbitMetric::Average => per_h.sum::<f64>() / ctx.f.len() as f64,
        };
        if v < eps {
            let p: f64 = digits.iter().map(|&y| law.prob(a, y)).product();
            outer += p;
            if v + tail < eps {
                inner += p;
            }
        }
        // odometer
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return BallMass {
                    log_lower: inner.min(1.0).ln(),
                    log_upper: outer.min(1.0).ln(),
                    method: BallMethod::Enumerated,
                };
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Largest `α_{c−h}` over `h ∈ F`, i.e. `b^{dist_∞(c, F)}`.
fn max_alpha_to(sys: &ShiftSystem, f: &FolnerSet, c: &GroupElement) -> f64 {
    let d = if f.rank() == 1 {
        let x = c.coords()[0];
        let pos = f.elements().partition_point(|g| g.coords()[0] < x);
        let mut best = u64::MAX;
        for i in [pos.wrapping_sub(1), pos] {
            if let Some(g) = f.elements().get(i) {
                best = best.min(g.coords()[0].abs_diff(x));
            }
        }
        best
    } else {
        f.iter().map(|h| c.sub(h).sup_norm()).min().unwrap_or(u64::MAX)
    };
    sys.weights().alpha_at(d)
}

fn factorized_ball(ctx: &BowenContext, law: SiteLaw, center: &Configuration, sites: &[GroupElement], eps: f64) -> BallMass {
    let sys = ctx.system;
    let a = sys.alphabet();
    let t_in = (eps - sys.tail_bound()) / sys.total_mass();
    let mut cache: HashMap<(usize, u64), f64> = HashMap::new();
    let mut log_mass = |sym: usize, r: f64| -> f64 {
        *cache
            .entry((sym, r.to_bits()))
            .or_insert_with(|| if r > 0.0 { site_ball_mass(a, law, sym, r).ln() } else { f64::NEG_INFINITY })
    };
    let mut log_lower = 0.0;
    let mut log_upper = 0.0;
    for c in sites {
        let sym = center.get(c, sys.default_symbol());
        log_lower += log_mass(sym, t_in);
        if ctx.mode == OrbitMetric::Sup {
            log_upper += log_mass(sym, eps / max_alpha_to(sys, &ctx.f, c));
        }
    }
    BallMass {
        log_lower,
        log_upper,
        method: BallMethod::Factorized,
    }
}

/// Brin–Katok value `−log μ(B_F(x, ε))/|F|` as a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrinKatok {
    pub n: usize,
    pub folner_size: usize,
    pub value_lower: f64,
    /// `None` when the certified lower mass is zero.
    pub value_upper: Option<f64>,
    pub method: BallMethod,
}

pub fn brin_katok_estimate(
    mu: &MeasureSpec,
    ctx: &BowenContext,
    x: &Configuration,
    epsilon: f64,
) -> Result<BrinKatok> {
    if mu.kind() == MeasureKind::Empirical {
        return Err(Error::InvalidParameter("Brin-Katok entropy needs a product or dirac measure".into()));
    }
    let mass = measure_of_bowen_ball(mu, ctx, x, epsilon)?;
    let size = ctx.f.len() as f64;
    Ok(BrinKatok {
        n: ctx.f.len(),
        folner_size: ctx.f.len(),
        value_lower: (-mass.log_upper / size).max(0.0),
        value_upper: mass.log_lower.is_finite().then(|| (-mass.log_lower / size).max(0.0)),
        method: mass.method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KatokMethod {
    Trivial,
    Exact,
    Greedy,
    ProductCover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatokRow {
    pub n: usize,
    pub folner_size: usize,
    /// Log of the number of balls in the constructed cover.
    pub log_r: f64,
    /// `log_r / |F_n|`.
    pub normalized: f64,
    /// Certified lower bound on `log R/|F_n|`, when available.
    pub lower_bound: Option<f64>,
    pub method: KatokMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatokEstimate {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: OrbitMetric,
    pub per_n: Vec<KatokRow>,
}

impl KatokEstimate {
    /// Max and min of the normalized value over the largest `⌈fraction·len⌉` values of n.
    pub fn tail(&self, fraction: f64) -> EpsTail {
        let (lo, hi) = tail_window(self.per_n.len(), fraction);
        let vals = self.per_n[lo..hi].iter().map(|r| r.normalized);
        EpsTail {
            epsilon: self.epsilon,
            tail_max: vals.clone().fold(f64::NEG_INFINITY, f64::max),
            tail_min: vals.fold(f64::INFINITY, f64::min),
        }
    }
}

/// The δ family reported in place of the δ → 0 limit.
pub const DELTA_FAMILY: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

/// Greedy mass cover: repeatedly add the centre whose closed neighbourhood holds the most
/// uncovered mass (lowest index on ties) until the covered mass reaches `target`.
pub fn greedy_mass_cover(adj: &Adjacency, masses: &[f64], target: f64) -> Vec<usize> {
    let n = adj.len();
    let mut covered = vec![false; n];
    let mut gain: Vec<f64> = (0..n)
        .map(|i| masses[i] + adj.neighbors(i).iter().map(|&j| masses[j as usize]).sum::<f64>())
        .collect();
    let mut acc = 0.0;
    let mut remaining = n;
    let mut centers = Vec::new();
    while acc < target - PROB_TOL && remaining > 0 {
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
            acc += masses[e];
            gain[e] -= masses[e];
            for &c in adj.neighbors(e) {
                gain[c as usize] -= masses[e];
            }
        }
        // a fully covered neighbourhood never wins again
        gain[best] = f64::NEG_INFINITY;
    }
    centers.sort_unstable();
    centers
}

/// Minimal number of centres whose closed neighbourhoods hold mass `≥ target`, by exhaustive
/// subset search.
pub fn exhaustive_mass_cover(adj: &Adjacency, masses: &[f64], target: f64) -> Result<usize> {
    let n = adj.len();
    if n > ORACLE_THRESHOLD {
        return Err(Error::OracleTooLarge {
            size: n,
            threshold: ORACLE_THRESHOLD,
        });
    }
    let closed: Vec<u32> = (0..n)
        .map(|i| adj.neighbors(i).iter().fold(1u32 << i, |m, &j| m | (1 << j)))
        .collect();
    let mut best = n;
    for subset in 0u32..(1 << n) {
        let size = subset.count_ones() as usize;
        if size >= best {
            continue;
        }
        let union = (0..n).filter(|&i| subset >> i & 1 == 1).fold(0u32, |m, i| m | closed[i]);
        let mass: f64 = (0..n).filter(|&i| union >> i & 1 == 1).map(|i| masses[i]).sum();
        if mass >= target - PROB_TOL {
            best = size;
        }
    }
    Ok(best)
}

/// Point cloud of empirical samples under the Bowen metric, with precomputed distances.
struct SampleCloud {
    n: usize,
    dist: Vec<f64>,
}

impl PointCloud for SampleCloud {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }
}

/// Minimal cover size from greedy mass cover, greedy full cover and (small instances) the
/// exhaustive search, all on open balls.
fn cover_count<C: PointCloud + ?Sized>(cloud: &C, masses: &[f64], eps: f64, target: f64) -> Result<(usize, bool, f64)> {
    let all: Vec<usize> = (0..cloud.len()).collect();
    let adj = Adjacency::build(cloud, &all, eps.next_down());
    let max_gain = (0..adj.len())
        .map(|i| masses[i] + adj.neighbors(i).iter().map(|&j| masses[j as usize]).sum::<f64>())
        .fold(0.0, f64::max);
    if adj.len() <= ORACLE_THRESHOLD {
        return Ok((exhaustive_mass_cover(&adj, masses, target)?, true, max_gain));
    }
    let greedy = greedy_mass_cover(&adj, masses, target);
    let covered: f64 = {
        let mut hit = vec![false; adj.len()];
        for &c in &greedy {
            hit[c] = true;
            for &j in adj.neighbors(c) {
                hit[j as usize] = true;
            }
        }
        (0..adj.len()).filter(|&i| hit[i]).map(|i| masses[i]).sum()
    };
    assert!(covered >= target - 1e-9, "greedy mass cover stopped below its target");
    let full = packing::greedy_cover(&adj).len();
    Ok((greedy.len().min(full), false, max_gain))
}

/// `R_μ(F_n, δ)` along a schedule at one scale.
pub fn katok_entropy(
    mu: &MeasureSpec,
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    n_grid: &[usize],
    epsilon: f64,
    delta: f64,
    mode: OrbitMetric,
) -> Result<KatokEstimate> {
    katok_entropy_with(mu, sys, schedule, n_grid, epsilon, delta, mode, &Caps::default())
}

#[allow(clippy::too_many_arguments)]
pub fn katok_entropy_with(
    mu: &MeasureSpec,
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    n_grid: &[usize],
    epsilon: f64,
    delta: f64,
    mode: OrbitMetric,
    caps: &Caps,
) -> Result<KatokEstimate> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_grid.is_empty() {
        return Err(Error::InvalidGrid("n_grid must be non-empty".into()));
    }
    mu.validate_for(sys)?;
    let per_n = n_grid
        .par_iter()
        .map(|&n| {
            let f = schedule.set(n)?;
            katok_row(mu, sys, &f, n, epsilon, delta, mode, caps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KatokEstimate {
        epsilon,
        delta,
        mode,
        per_n,
    })
}

/// A single Katok row on an explicit orbit segment `F` (reported with `n = |F|`).
pub fn katok_at(
    mu: &MeasureSpec,
    sys: &ShiftSystem,
    f: &FolnerSet,
    epsilon: f64,
    delta: f64,
    mode: OrbitMetric,
    caps: &Caps,
) -> Result<KatokRow> {
    if !(0.0..1.0).contains(&delta) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("need epsilon > 0 and delta in [0, 1), got {epsilon}, {delta}")));
    }
    mu.validate_for(sys)?;
    katok_row(mu, sys, f, f.len(), epsilon, delta, mode, caps)
}

#[allow(clippy::too_many_arguments)]
fn katok_row(
    mu: &MeasureSpec,
    sys: &ShiftSystem,
    f: &FolnerSet,
    n: usize,
    epsilon: f64,
    delta: f64,
    mode: OrbitMetric,
    caps: &Caps,
) -> Result<KatokRow> {
    let size = f.len() as f64;
    let eps = snap(epsilon);
    let target = 1.0 - delta;
    let row = |log_r: f64, lower: Option<f64>, method| KatokRow {
        n,
        folner_size: f.len(),
        log_r,
        normalized: log_r / size,
        lower_bound: lower.map(|l: f64| l.max(0.0)),
        method,
    };
    // centres of the cover, the atoms' masses, and a cloud for each orbit metric
    let (clouds, masses): (Vec<Box<dyn PointCloud>>, Vec<f64>) = match mu {
        MeasureSpec::Dirac { .. } => return Ok(row(0.0, Some(0.0), KatokMethod::Trivial)),
        MeasureSpec::Empirical { samples } => {
            let total: u64 = samples.iter().map(|s| s.multiplicity).sum();
            let masses = samples.iter().map(|s| s.multiplicity as f64 / total as f64).collect();
            let mut clouds: Vec<Box<dyn PointCloud>> = Vec::new();
            for m in metrics_for(mode) {
                let ctx = BowenContext::new(sys, f.clone(), m)?;
                let k = samples.len();
                let mut dist = vec![0.0; k * k];
                for i in 0..k {
                    for j in i + 1..k {
                        let d = bowen_distance(&ctx, &samples[i].config, &samples[j].config)?;
                        dist[i * k + j] = d;
                        dist[j * k + i] = d;
                    }
                }
                clouds.push(Box::new(SampleCloud { n: k, dist }));
            }
            (clouds, masses)
        }
        MeasureSpec::Product { site_weights } => {
            let law = SiteLaw::of(site_weights);
            let a = sys.alphabet();
            let sites = sys.window().product(f).len();
            let patterns = (a.len() as f64).powi(sites as i32);
            if patterns > caps.pairwise as f64 {
                return product_cover_row(sys, f, law, eps, delta, mode).map(|(log_r, lower)| {
                    row(log_r, lower, KatokMethod::ProductCover)
                });
            }
            let net: Vec<usize> = (0..a.len()).collect();
            let windows = cylinder_configurations(sys, &net, f, &Constraints::new(), caps.enumeration)?;
            let masses = (0..windows.len())
                .map(|i| windows.symbols(i).iter().map(|&y| law.prob(a, y)).product())
                .collect();
            let mut clouds: Vec<Box<dyn PointCloud>> = Vec::new();
            for m in metrics_for(mode) {
                let ctx = BowenContext::new(sys, f.clone(), m)?;
                clouds.push(Box::new(ConfigCloud::new(&ctx, &windows)));
            }
            (clouds, masses)
        }
    };
    // in average mode the sup-metric cover is also admissible, since its balls are smaller
    let mut best: Option<(usize, bool, f64)> = None;
    for cloud in &clouds {
        let (count, exact, max_gain) = cover_count(cloud.as_ref(), &masses, eps, target)?;
        best = Some(match best {
            None => (count, exact, max_gain),
            Some((c, e, g)) => (c.min(count), e && exact, g),
        });
    }
    let (count, exact, max_gain) = best.expect("at least one metric");
    let lower = (target.ln() - max_gain.ln()) / size;
    Ok(row(
        (count as f64).ln(),
        Some(lower),
        if exact { KatokMethod::Exact } else { KatokMethod::Greedy },
    ))
}

fn metrics_for(mode: OrbitMetric) -> Vec<OrbitMetric> {
    match mode {
        OrbitMetric::Sup => vec![OrbitMetric::Sup],
        OrbitMetric::Average => vec![OrbitMetric::Average, OrbitMetric::Sup],
    }
}

/// Product of identical per-site covers at radius `ε/M` reaching mass `(1−δ)^{1/|S·F|}` each.
/// In sup mode the certified lower bound is `(log(1−δ) − |F|·log max_a μ(B(a, ε)))/|F|`.
fn product_cover_row(
    sys: &ShiftSystem,
    f: &FolnerSet,
    law: SiteLaw,
    eps: f64,
    delta: f64,
    mode: OrbitMetric,
) -> Result<(f64, Option<f64>)> {
    let a = sys.alphabet();
    let sites = sys.window().product(f).len() as f64;
    let t = eps / sys.total_mass();
    let q = (1.0 - delta).powf(1.0 / sites);
    let log_r = sites * site_cover_log(a, law, t, q)?;
    let lower = match mode {
        OrbitMetric::Sup => max_site_ball_mass(a, law, eps).map(|p| ((1.0 - delta).ln() - f.len() as f64 * p.ln()) / f.len() as f64),
        OrbitMetric::Average => None,
    };
    Ok((log_r, lower))
}

/// One value per n of `Σ λ_j · (normalized Katok value of μ_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexRow {
    pub n: usize,
    pub value: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn convex_eps_entropy(
    combo: &ConvexCombination,
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    n_grid: &[usize],
    epsilon: f64,
    delta: f64,
    mode: OrbitMetric,
    caps: &Caps,
) -> Result<Vec<ConvexRow>> {
    let mut values = vec![0.0; n_grid.len()];
    for (lambda, mu) in combo.components() {
        let k = katok_entropy_with(mu, sys, schedule, n_grid, epsilon, delta, mode, caps)?;
        for (v, r) in values.iter_mut().zip(&k.per_n) {
            *v += lambda * r.normalized;
        }
    }
    Ok(n_grid.iter().zip(values).map(|(&n, value)| ConvexRow { n, value }).collect())
}

/// Aggregates `F(μ_ε, ε)/log(1/ε)` over a family indexed by decreasing ε, exactly as
/// [`crate::dimensions::mdim_estimate`] does for topological curves.
#[allow(clippy::too_many_arguments)]
pub fn measure_mdim_along_family(
    family: &[(f64, ConvexCombination)],
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    n_grid: &[usize],
    delta: f64,
    mode: OrbitMetric,
    caps: &Caps,
) -> Result<DimensionEstimate> {
    let tails = family
        .iter()
        .map(|(eps, combo)| {
            let rows = convex_eps_entropy(combo, sys, schedule, n_grid, *eps, delta, mode, caps)?;
            let (lo, hi) = tail_window(rows.len(), 1.0 / 3.0);
            let vals = rows[lo..hi].iter().map(|r| r.value);
            Ok(EpsTail {
                epsilon: *eps,
                tail_max: vals.clone().fold(f64::NEG_INFINITY, f64::max),
                tail_min: vals.fold(f64::INFINITY, f64::min),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut est = estimate_from_tails(&tails, 1.0, 1.0 / 3.0)?;
    est.diagnostics
        .push("evaluates the supplied family only; no supremum over families is taken".into());
    Ok(est)
}

/// Whether an alphabet admits the product-cover path at any window size.
pub fn supports_product_cover(alphabet: &Alphabet, uniform: bool) -> bool {
    match alphabet.kind() {
        MetricKind::Abs1d => true,
        MetricKind::Product if uniform => alphabet
            .factors()
            .is_some_and(|fs| fs.iter().all(|f| supports_product_cover(f, true))),
        _ => alphabet.len() <= GENERIC_SITE_LIMIT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::count_window;
    use crate::group_actions::{folner_boxes, GroupSpec};
    use crate::metric_spaces::CountMode;
    use crate::shift_systems::WeightFunction;
    use proptest::prelude::*;

    fn z() -> GroupSpec {
        GroupSpec::new(1).unwrap()
    }

    fn two_symbols(radius: u64) -> ShiftSystem {
        ShiftSystem::with_window_radius(
            Alphabet::abs1d("two", vec![0.0, 1.0]).unwrap(),
            z(),
            WeightFunction::default(),
            0,
            radius,
        )
        .unwrap()
    }

    fn boxes() -> FolnerSchedule {
        FolnerSchedule::boxes(z())
    }

    #[test]
    fn measure_json_round_trip_and_validation() {
        let m = MeasureSpec::product(vec![0.25, 0.75]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"kind":"product","site_weights":[0.25,0.75]}"#);
        assert_eq!(serde_json::from_str::<MeasureSpec>(&text).unwrap(), m);
        assert!(MeasureSpec::product(vec![0.5, 0.6]).is_err());
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"kind":"dirac"}"#).is_err());
        assert!(ConvexCombination::new(vec![(0.5, MeasureSpec::uniform())]).is_err());
        assert!(m.validate_for(&ShiftSystem::with_window_radius(Alphabet::unit_interval_net(3).unwrap(), z(), WeightFunction::default(), 0, 1).unwrap()).is_err());
    }

    #[test]
    fn dirac_ball_and_katok() {
        let sys = two_symbols(3);
        let atom = Configuration::constant(1);
        let mu = MeasureSpec::dirac(atom.clone());
        let ctx = BowenContext::new(&sys, folner_boxes(&z(), 5).unwrap(), OrbitMetric::Sup).unwrap();
        assert_eq!(measure_of_bowen_ball(&mu, &ctx, &atom, 0.01).unwrap().upper(), 1.0);
        let k = katok_entropy(&mu, &sys, &boxes(), &[1, 4, 16], 0.1, 0.05, OrbitMetric::Sup).unwrap();
        assert!(k.per_n.iter().all(|r| r.log_r == 0.0 && r.normalized == 0.0));
        // the orbit measure of a fixed point behaves like the dirac
        let orbit = MeasureSpec::empirical_orbit(&sys, &atom, &folner_boxes(&z(), 3).unwrap()).unwrap();
        let k = katok_entropy(&orbit, &sys, &boxes(), &[2], 0.1, 0.0, OrbitMetric::Sup).unwrap();
        assert_eq!(k.per_n[0].log_r, 0.0);
    }

    /// Ball mass by brute force over a wider window, using the configuration-level metric.
    fn oracle_ball(sys: &ShiftSystem, f: &FolnerSet, extra: i64, eps: f64) -> f64 {
        let wide = crate::group_actions::centered_box(&z(), -(sys.window_radius() as i64 + extra), sys.window_radius() as i64 + extra)
            .unwrap()
            .product(f);
        let ctx = BowenContext::new(sys, f.clone(), OrbitMetric::Sup).unwrap();
        let x = Configuration::constant(1);
        let m = wide.len();
        let mut hit = 0u64;
        for bits in 0u64..(1 << m) {
            let y = Configuration::from_support(1, wide.iter().enumerate().map(|(i, g)| (g.clone(), (bits >> i & 1) as usize))).unwrap();
            if bowen_distance(&ctx, &x, &y).unwrap() < snap(eps) {
                hit += 1;
            }
        }
        hit as f64 / (1u64 << m) as f64
    }

    #[test]
    fn two_symbol_ball_bracket_contains_oracle() {
        for n in 1..=4 {
            let sys = two_symbols(4);
            let f = folner_boxes(&z(), n).unwrap();
            let ctx = BowenContext::new(&sys, f.clone(), OrbitMetric::Sup).unwrap();
            let mass = measure_of_bowen_ball(&MeasureSpec::uniform(), &ctx, &Configuration::constant(1), 0.4).unwrap();
            assert_eq!(mass.method, BallMethod::Enumerated);
            let oracle = oracle_ball(&sys, &f, 2, 0.4);
            assert!(mass.lower() <= oracle + 1e-15 && oracle <= mass.upper() + 1e-15, "n={n}");
            // every F-coordinate is pinned
            assert!(mass.upper() <= 0.5f64.powi(n as i32) + 1e-15);
            let fact = factorized_ball(&ctx, SiteLaw::Uniform, &Configuration::constant(1), sys.window().product(&f).elements(), snap(0.4));
            assert!(fact.log_lower <= mass.log_lower + 1e-12 && mass.log_upper <= fact.log_upper + 1e-12);
        }
    }

    #[test]
    fn everything_fits_in_a_huge_ball() {
        let sys = two_symbols(2);
        let ctx = BowenContext::new(&sys, folner_boxes(&z(), 2).unwrap(), OrbitMetric::Sup).unwrap();
        let eps = 10.0 * sys.total_mass();
        let m = measure_of_bowen_ball(&MeasureSpec::uniform(), &ctx, &Configuration::constant(1), eps).unwrap();
        assert!(m.is_exact());
        assert!((m.upper() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_tolerance_is_enforced() {
        let sys = two_symbols(1);
        let ctx = BowenContext::new(&sys, folner_boxes(&z(), 2).unwrap(), OrbitMetric::Sup).unwrap();
        let opts = BallOptions {
            tolerance: 1e-6,
            ..BallOptions::default()
        };
        let r = measure_of_bowen_ball_with(&MeasureSpec::uniform(), &ctx, &Configuration::constant(1), 1.2, &opts);
        assert!(matches!(r, Err(Error::InsufficientWindow { .. })));
    }

    #[test]
    fn one_pattern_per_ball_gives_log_two() {
        let sys = two_symbols(0);
        let k = katok_entropy(&MeasureSpec::uniform(), &sys, &boxes(), &[1, 2, 3], 0.4, 0.0, OrbitMetric::Sup).unwrap();
        for r in &k.per_n {
            assert_eq!(r.method, KatokMethod::Exact);
            assert!((r.normalized - 2f64.ln()).abs() < 1e-12);
        }
        // larger windows: greedy still needs one ball per F-pattern
        let sys = two_symbols(2);
        let k = katok_entropy(&MeasureSpec::uniform(), &sys, &boxes(), &[4, 6], 0.4, 0.0, OrbitMetric::Sup).unwrap();
        for r in &k.per_n {
            assert!(r.normalized >= 2f64.ln() - 1e-12);
            assert!(r.normalized <= 2f64.ln() * (r.n as f64 + 2.0) / r.n as f64 + 1e-12);
        }
    }

    #[test]
    fn monotone_in_delta_and_epsilon() {
        let sys = two_symbols(2);
        let mu = MeasureSpec::product(vec![0.3, 0.7]).unwrap();
        let value = |eps: f64, delta: f64| {
            katok_entropy(&mu, &sys, &boxes(), &[3, 5], eps, delta, OrbitMetric::Sup).unwrap().per_n[1].normalized
        };
        let by_delta: Vec<f64> = DELTA_FAMILY.iter().map(|&d| value(0.3, d)).collect();
        assert!(by_delta.windows(2).all(|w| w[0] <= w[1]));
        assert!(value(0.6, 0.05) <= value(0.3, 0.05));
    }

    #[test]
    fn average_mode_below_sup_and_katok_below_spanning() {
        let sys = ShiftSystem::with_window_radius(Alphabet::unit_interval_net(3).unwrap(), z(), WeightFunction::default(), 0, 1).unwrap();
        let mu = MeasureSpec::uniform();
        for eps in [0.2, 0.45, 0.7] {
            let sup = katok_entropy(&mu, &sys, &boxes(), &[1, 2, 3, 4], eps, 0.05, OrbitMetric::Sup).unwrap();
            let avg = katok_entropy(&mu, &sys, &boxes(), &[1, 2, 3, 4], eps, 0.05, OrbitMetric::Average).unwrap();
            for (s, a) in sup.per_n.iter().zip(&avg.per_n) {
                assert!(a.log_r <= s.log_r);
                let f = folner_boxes(&z(), s.n).unwrap();
                let spanning = count_window(&sys, &f, eps, CountMode::Greedy).unwrap().spanning;
                assert!(s.log_r <= (spanning as f64).ln() + 1e-12, "eps={eps} n={}", s.n);
                assert!(s.lower_bound.unwrap() <= s.normalized + 1e-12);
            }
        }
    }

    #[test]
    fn brin_katok_on_distance_one_alphabet() {
        let k = 3usize;
        let sys = ShiftSystem::new(Alphabet::abs1d("k", (0..k).map(|i| i as f64).collect()).unwrap(), z(), WeightFunction::default(), 0, 0.4).unwrap();
        let mu = MeasureSpec::uniform();
        let log_k = (k as f64).ln();
        let mut prev_gap = f64::INFINITY;
        for n in [8, 32, 128] {
            let ctx = BowenContext::new(&sys, folner_boxes(&z(), n).unwrap(), OrbitMetric::Sup).unwrap();
            let bk = brin_katok_estimate(&mu, &ctx, &Configuration::constant(1), 0.4).unwrap();
            // F and its two neighbours are pinned, so the value approaches log k from above
            assert!(bk.value_lower >= log_k - 1e-12);
            assert!(bk.value_upper.unwrap() >= bk.value_lower);
            let gap = bk.value_lower - log_k;
            assert!(gap <= prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 0.05);
        let dirac = MeasureSpec::dirac(Configuration::constant(1));
        let ctx = BowenContext::new(&sys, folner_boxes(&z(), 4).unwrap(), OrbitMetric::Sup).unwrap();
        let bk = brin_katok_estimate(&dirac, &ctx, &Configuration::constant(1), 0.4).unwrap();
        assert_eq!((bk.value_lower, bk.value_upper), (0.0, Some(0.0)));
    }

    #[test]
    fn quantized_lebesgue_katok_exceeds_log_inverse_two_eps() {
        let eps = 0.01;
        let sys = ShiftSystem::new(Alphabet::unit_interval_net(401).unwrap(), z(), WeightFunction::default(), 0, eps).unwrap();
        let k = katok_entropy(&MeasureSpec::uniform(), &sys, &boxes(), &[64, 256], eps, 0.05, OrbitMetric::Sup).unwrap();
        for r in &k.per_n {
            assert_eq!(r.method, KatokMethod::ProductCover);
            let floor = (1.0 / (2.0 * eps)).ln();
            assert!(r.lower_bound.unwrap() >= floor - 0.5);
            assert!(r.normalized >= r.lower_bound.unwrap());
        }
    }

    #[test]
    fn convex_combination_is_linear() {
        let sys = two_symbols(0);
        let dirac = MeasureSpec::dirac(Configuration::constant(1));
        let half = ConvexCombination::new(vec![(0.5, dirac.clone()), (0.5, MeasureSpec::uniform())]).unwrap();
        let v = convex_eps_entropy(&half, &sys, &boxes(), &[2, 3], 0.4, 0.0, OrbitMetric::Sup, &Caps::default()).unwrap();
        assert!(v.iter().all(|r| (r.value - 0.5 * 2f64.ln()).abs() < 1e-12));
        let two_diracs = ConvexCombination::new(vec![(0.5, dirac.clone()), (0.5, dirac.clone())]).unwrap();
        let v = convex_eps_entropy(&two_diracs, &sys, &boxes(), &[3], 0.4, 0.0, OrbitMetric::Sup, &Caps::default()).unwrap();
        assert_eq!(v[0].value, 0.0);
        let single = ConvexCombination::single(MeasureSpec::uniform());
        let split = ConvexCombination::new(vec![(0.5, MeasureSpec::uniform()), (0.5, MeasureSpec::uniform())]).unwrap();
        let a = convex_eps_entropy(&single, &sys, &boxes(), &[3], 0.4, 0.1, OrbitMetric::Sup, &Caps::default()).unwrap();
        let b = convex_eps_entropy(&split, &sys, &boxes(), &[3], 0.4, 0.1, OrbitMetric::Sup, &Caps::default()).unwrap();
        assert_eq!(a, b);
        let k = katok_entropy(&MeasureSpec::uniform(), &sys, &boxes(), &[3], 0.4, 0.1, OrbitMetric::Sup).unwrap();
        assert_eq!(a[0].value, k.per_n[0].normalized);
    }

    #[test]
    fn constant_dirac_family_is_zero() {
        let sys = two_symbols(0);
        let grid = crate::metric_spaces::geometric_grid(0.1, 0.5, 6);
        let family: Vec<(f64, ConvexCombination)> = grid
            .iter()
            .map(|&e| (e, ConvexCombination::single(MeasureSpec::dirac(Configuration::constant(1)))))
            .collect();
        let est = measure_mdim_along_family(&family, &sys, &boxes(), &[2, 4], 0.05, OrbitMetric::Sup, &Caps::default()).unwrap();
        assert_eq!(est.upper, 0.0);
    }

    #[test]
    fn site_cover_of_line_matches_sweep_oracle() {
        // spacing 0.1, open radius 0.25: a ball holds at most 5 points, so 11 points need 3
        let a = Alphabet::unit_interval_net(11).unwrap();
        let log = site_cover_log(&a, SiteLaw::Uniform, 0.25, 1.0).unwrap();
        assert_eq!(log.exp().round() as usize, 3);
        let cube = Alphabet::unit_cube_net(2, 11).unwrap();
        let log = site_cover_log(&cube, SiteLaw::Uniform, 0.25, 1.0).unwrap();
        assert_eq!(log.exp().round() as usize, 9);
        assert!((max_site_ball_mass(&a, SiteLaw::Uniform, 0.25).unwrap() - 5.0 / 11.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn greedy_mass_cover_never_beats_exhaustive(
            n in 2usize..=ORACLE_THRESHOLD,
            edges in proptest::collection::vec((0usize..12, 0usize..12), 0..30),
            raw in proptest::collection::vec(0.01f64..1.0, 12),
            target in 0.3f64..1.0,
        ) {
            let mut lists = vec![Vec::new(); n];
            for (a, b) in edges {
                let (a, b) = (a % n, b % n);
                if a != b && !lists[a].contains(&(b as u32)) {
                    lists[a].push(b as u32);
                    lists[b].push(a as u32);
                }
            }
            let adj = Adjacency::from_lists(lists);
            let total: f64 = raw[..n].iter().sum();
            let masses: Vec<f64> = raw[..n].iter().map(|m| m / total).collect();
            let greedy = greedy_mass_cover(&adj, &masses, target);
            let mut hit = vec![false; n];
            for &c in &greedy {
                hit[c] = true;
                for &j in adj.neighbors(c) { hit[j as usize] = true; }
            }
            let covered: f64 = (0..n).filter(|&i| hit[i]).map(|i| masses[i]).sum();
            prop_assert!(covered >= target - 1e-9);
            prop_assert!(greedy.len() >= exhaustive_mass_cover(&adj, &masses, target).unwrap());
        }
    }
}
