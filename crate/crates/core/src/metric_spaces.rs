//! Finite point clouds standing in for compact metric alphabets, their packing and covering
//! numbers, box-dimension estimates, and the sparse-cluster set with prescribed entropy
//! dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::{self, snap, Adjacency, PointCloud};

/// Default cap on generated alphabet sizes.
pub const DEFAULT_POINT_CAP: usize = 200_000;

/// Above this many points a greedy cover is replaced by a maximal separated set (which is
/// also a cover) to keep the work linear in the number of edges.
const GREEDY_COVER_LIMIT: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Points on the real line with `|x − y|`.
    Abs1d,
    /// Points in `R^m` with the sup norm.
    Supmd,
    /// An explicit distance matrix.
    Matrix,
    /// Cartesian product of alphabets with the max metric.
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Exact,
    #[default]
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Coords { dim: usize, flat: Vec<f64> },
    Matrix { n: usize, dist: Vec<f64> },
    Product { factors: Vec<Alphabet>, len: usize },
}

/// A finite metric space. Point indices are stable once constructed; 1-d alphabets are
/// stored sorted, so index order is coordinate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetDoc", into = "AlphabetDoc")]
pub struct Alphabet {
    label: String,
    kind: MetricKind,
    storage: Storage,
    resolution: Option<f64>,
}

/// JSON form of an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetDoc {
    pub label: String,
    pub metric: MetricKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<AlphabetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite coordinate {v}")));
    }
    Ok(())
}

impl Alphabet {
    /// Points on the line; sorted and deduplicated.
    pub fn abs1d(label: impl Into<String>, mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("alphabet must be non-empty".into()));
        }
        check_finite(&points)?;
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self {
            label: label.into(),
            kind: MetricKind::Abs1d,
            storage: Storage::Coords { dim: 1, flat: points },
            resolution: None,
        })
    }

    /// Points in `R^m` under the sup norm; duplicates removed keeping first occurrences.
    pub fn supmd(label: impl Into<String>, points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParameter("alphabet must be non-empty".into()))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter(
                "all points need the same positive dimension".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            check_finite(p)?;
            // -0.0 and 0.0 are the same point
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if seen.insert(key) {
                flat.extend_from_slice(p);
            }
        }
        Ok(Self {
            label: label.into(),
            kind: MetricKind::Supmd,
            storage: Storage::Coords { dim, flat },
            resolution: None,
        })
    }

    /// An explicit row-major distance matrix. Symmetry, zero diagonal, positive off-diagonal
    /// entries and the triangle inequality are validated (all triples up to 60 points, a
    /// fixed-seed sample of triples above that).
    pub fn matrix(label: impl Into<String>, n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 || dist.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "distance matrix needs {n}x{n} entries, got {}",
                dist.len()
            )));
        }
        check_finite(&dist)?;
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if a != b {
                    return Err(Error::InvalidParameter(format!("asymmetric at ({i},{j})")));
                }
                if a <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "distinct points {i} and {j} at distance {a}"
                    )));
                }
            }
        }
        let violates = |i: usize, j: usize, k: usize| {
            dist[i * n + k] > (dist[i * n + j] + dist[j * n + k]) * (1.0 + 1e-12)
        };
        if n <= 60 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if violates(i, j, k) {
                            return Err(Error::InvalidParameter(format!(
                                "triangle inequality fails on ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..20_000 {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if violates(i, j, k) {
                    return Err(Error::InvalidParameter(format!(
                        "triangle inequality fails on ({i},{j},{k})"
                    )));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            kind: MetricKind::Matrix,
            storage: Storage::Matrix { n, dist },
            resolution: None,
        })
    }

    /// `a × b` with the max metric. Index `i·|b| + j` stands for `(a_i, b_j)`.
    pub fn product(a: &Alphabet, b: &Alphabet) -> Result<Self> {
        let mut factors = Vec::new();
        for x in [a, b] {
            match &x.storage {
                Storage::Product { factors: f, .. } => factors.extend(f.iter().cloned()),
                _ => factors.push(x.clone()),
            }
        }
        Self::product_of(factors)
    }

    fn product_of(factors: Vec<Alphabet>) -> Result<Self> {
        let len = factors
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.len()))
            .ok_or_else(|| Error::InvalidParameter("product alphabet too large".into()))?;
        let label = factors
            .iter()
            .map(|f| f.label.as_str())
            .collect::<Vec<_>>()
            .join(" x ");
        let resolution = factors
            .iter()
            .map(|f| f.resolution)
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
        Ok(Self {
            label,
            kind: MetricKind::Product,
            storage: Storage::Product { factors, len },
            resolution,
        })
    }

    /// The uniform net `{j/(k−1)}` of `[0,1]` with `k ≥ 2` points, resolution `1/(k−1)`.
    pub fn unit_interval_net(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("a net of [0,1] needs k >= 2".into()));
        }
        let h = 1.0 / (k - 1) as f64;
        let points = (0..k).map(|j| j as f64 * h).collect();
        Ok(Self::abs1d(format!("[0,1] net k={k}"), points)?.with_resolution(h))
    }

    /// The product of `m` copies of [`Alphabet::unit_interval_net`], a net of `[0,1]^m`.
    pub fn unit_cube_net(m: usize, k: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("cube dimension must be >= 1".into()));
        }
        let line = Self::unit_interval_net(k)?;
        if m == 1 {
            return Ok(line);
        }
        let mut a = Self::product_of(vec![line; m])?;
        a.label = format!("[0,1]^{m} net k={k}");
        Ok(a)
    }

    /// `{0} ∪ {1/n : 1 ≤ n ≤ n_max}`.
    pub fn harmonic(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        let points = std::iter::once(0.0)
            .chain((1..=n_max).map(|n| 1.0 / n as f64))
            .collect();
        Self::abs1d(format!("{{0}} u {{1/n : n <= {n_max}}}"), points)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = Some(resolution);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// How finely this alphabet samples the compact space it represents, if declared.
    pub fn resolution(&self) -> Option<f64> {
        self.resolution
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Coords { dim, flat } => flat.len() / dim,
            Storage::Matrix { n, .. } => *n,
            Storage::Product { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Factor alphabets of a product, or `None`.
    pub fn factors(&self) -> Option<&[Alphabet]> {
        match &self.storage {
            Storage::Product { factors, .. } => Some(factors),
            _ => None,
        }
    }

    /// Sorted coordinates of a 1-d alphabet.
    pub fn line_points(&self) -> Option<&[f64]> {
        match (&self.kind, &self.storage) {
            (MetricKind::Abs1d, Storage::Coords { flat, .. }) => Some(flat),
            _ => None,
        }
    }

    /// Coordinates of point `i`, for coordinate-backed alphabets (products concatenate).
    pub fn coords(&self, i: usize) -> Option<Vec<f64>> {
        match &self.storage {
            Storage::Coords { dim, flat } => flat.get(i * dim..(i + 1) * dim).map(<[f64]>::to_vec),
            Storage::Matrix { .. } => None,
            Storage::Product { factors, .. } => {
                let mut out = Vec::new();
                for (f, idx) in factors.iter().zip(self.split_index(i)) {
                    out.extend(f.coords(idx)?);
                }
                Some(out)
            }
        }
    }

    /// Mixed-radix digits of a product index, most significant factor first.
    pub fn split_index(&self, mut i: usize) -> Vec<usize> {
        match &self.storage {
            Storage::Product { factors, .. } => {
                let mut digits = vec![0; factors.len()];
                for (d, f) in digits.iter_mut().zip(factors).rev() {
                    *d = i % f.len();
                    i /= f.len();
                }
                digits
            }
            _ => vec![i],
        }
    }

    /// Distance between points `i` and `j`; panics on out-of-range indices.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Coords { dim, flat } => {
                let (a, b) = (&flat[i * dim..(i + 1) * dim], &flat[j * dim..(j + 1) * dim]);
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
            Storage::Matrix { n, dist } => dist[i * n + j],
            Storage::Product { factors, .. } => {
                let (di, dj) = (self.split_index(i), self.split_index(j));
                factors
                    .iter()
                    .zip(di.iter().zip(&dj))
                    .map(|(f, (&a, &b))| f.dist(a, b))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Checked form of [`Alphabet::dist`].
    pub fn pairwise_distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        Ok(self.dist(i, j))
    }

    pub fn diameter(&self) -> f64 {
        match &self.storage {
            Storage::Coords { dim, flat } => (0..*dim)
                .map(|k| {
                    let vals = flat.iter().skip(k).step_by(*dim);
                    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                    hi - lo
                })
                .fold(0.0, f64::max),
            Storage::Matrix { dist, .. } => dist.iter().copied().fold(0.0, f64::max),
            Storage::Product { factors, .. } => {
                factors.iter().map(Alphabet::diameter).fold(0.0, f64::max)
            }
        }
    }

    /// Every distance multiplied by `factor` (coordinates scaled). Explicit matrices are
    /// rejected so that scaling stays a statement about coordinates.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {factor}")));
        }
        let storage = match &self.storage {
            Storage::Coords { dim, flat } => Storage::Coords {
                dim: *dim,
                flat: flat.iter().map(|v| v * factor).collect(),
            },
            Storage::Matrix { .. } => {
                return Err(Error::UnsupportedMetric("explicit-matrix".into()))
            }
            Storage::Product { factors, len } => Storage::Product {
                factors: factors
                    .iter()
                    .map(|f| f.scaled(factor))
                    .collect::<Result<_>>()?,
                len: *len,
            },
        };
        Ok(Self {
            label: format!("{} scaled by {factor}", self.label),
            kind: self.kind,
            storage,
            resolution: self.resolution.map(|r| r * factor),
        })
    }

    /// Errors unless the declared resolution is at most a quarter of `eps_min`.
    pub fn check_resolution(&self, eps_min: f64) -> Result<()> {
        match self.resolution {
            Some(r) if r > eps_min / 4.0 * (1.0 + 1e-9) => Err(Error::ResolutionTooCoarse {
                resolution: r,
                required: eps_min / 4.0,
            }),
            _ => Ok(()),
        }
    }
}

impl PointCloud for Alphabet {
    fn len(&self) -> usize {
        Alphabet::len(self)
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        Alphabet::dist(self, i, j)
    }
}

impl TryFrom<AlphabetDoc> for Alphabet {
    type Error = Error;

    fn try_from(doc: AlphabetDoc) -> Result<Self> {
        let mut a = match doc.metric {
            MetricKind::Abs1d => {
                if doc.points.iter().any(|p| p.len() != 1) {
                    return Err(Error::Parse("abs1d points must have one coordinate".into()));
                }
                Alphabet::abs1d(doc.label, doc.points.iter().map(|p| p[0]).collect())?
            }
            MetricKind::Supmd => Alphabet::supmd(doc.label, doc.points)?,
            MetricKind::Matrix => {
                let m = doc
                    .matrix
                    .ok_or_else(|| Error::Parse("matrix metric needs a \"matrix\" field".into()))?;
                let n = (m.len() as f64).sqrt().round() as usize;
                Alphabet::matrix(doc.label, n, m)?
            }
            MetricKind::Product => {
                if doc.factors.is_empty() {
                    return Err(Error::Parse("product metric needs \"factors\"".into()));
                }
                let factors = doc
                    .factors
                    .into_iter()
                    .map(Alphabet::try_from)
                    .collect::<Result<Vec<_>>>()?;
                Alphabet::product_of(factors)?.with_label(doc.label)
            }
        };
        if doc.resolution.is_some() {
            a.resolution = doc.resolution;
        }
        Ok(a)
    }
}

impl From<Alphabet> for AlphabetDoc {
    fn from(a: Alphabet) -> Self {
        let (points, matrix, factors) = match a.storage {
            Storage::Coords { dim, flat } => (
                flat.chunks(dim).map(<[f64]>::to_vec).collect(),
                None,
                Vec::new(),
            ),
            Storage::Matrix { dist, .. } => (Vec::new(), Some(dist), Vec::new()),
            Storage::Product { factors, .. } => (
                Vec::new(),
                None,
                factors.into_iter().map(AlphabetDoc::from).collect(),
            ),
        };
        AlphabetDoc {
            label: a.label,
            metric: a.kind,
            points,
            matrix,
            factors,
            resolution: a.resolution,
        }
    }
}

/// A packing or covering number together with whether it is certified optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Count {
    pub value: u64,
    pub exact: bool,
}

/// An extremal set on a subset of the alphabet, by global point index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCount {
    pub count: usize,
    pub exact: bool,
    pub witness: Vec<usize>,
}

/// `r(X, d, ε)` and `s(X, d, ε)` for a whole alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub epsilon: f64,
    pub spanning: u64,
    pub separated: u64,
    pub spanning_exact: bool,
    pub separated_exact: bool,
    /// Spanning centres are always taken from the counted set itself.
    pub internal_centers: bool,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

fn check_subset(a: &Alphabet, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter("subset must be non-empty".into()));
    }
    let len = a.len();
    if let Some(&index) = subset.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index, len });
    }
    Ok(())
}

/// Leftmost-first sweep on sorted reals; optimal for `d > ε̃` packings on the line.
fn sweep_separated(sorted: &[(f64, usize)], thr: f64) -> Vec<usize> {
    let mut out = vec![sorted[0].1];
    let mut last = sorted[0].0;
    for &(x, i) in &sorted[1..] {
        if x - last > thr {
            out.push(i);
            last = x;
        }
    }
    out
}

/// Optimal internal cover on the line: for the leftmost uncovered point `p`, the centre is
/// the largest point `≤ p + ε̃`, which then covers everything up to `centre + ε̃`.
fn sweep_spanning(sorted: &[(f64, usize)], thr: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let p = sorted[i].0;
        let mut c = i;
        while c + 1 < sorted.len() && sorted[c + 1].0 - p <= thr {
            c += 1;
        }
        out.push(sorted[c].1);
        let center = sorted[c].0;
        i = c + 1;
        while i < sorted.len() && sorted[i].0 - center <= thr {
            i += 1;
        }
    }
    out
}

fn sorted_line(a: &Alphabet, subset: &[usize]) -> Option<Vec<(f64, usize)>> {
    let pts = a.line_points()?;
    let mut v: Vec<(f64, usize)> = subset.iter().map(|&i| (pts[i], i)).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Some(v)
}

/// Largest `(d, ε)`-separated subset of `subset` (pairwise `d > ε`).
///
/// Line alphabets are solved exactly by a sweep at any size. Otherwise exact mode runs
/// branch-and-bound (at most [`packing::EXACT_THRESHOLD`] points) and greedy mode builds a
/// maximal separated set in index order.
pub fn max_separated(
    a: &Alphabet,
    subset: &[usize],
    epsilon: f64,
    mode: CountMode,
) -> Result<SetCount> {
    check_eps(epsilon)?;
    check_subset(a, subset)?;
    let thr = snap(epsilon);
    if let Some(line) = sorted_line(a, subset) {
        let mut witness = sweep_separated(&line, thr);
        witness.sort_unstable();
        return Ok(SetCount {
            count: witness.len(),
            exact: true,
            witness,
        });
    }
    let adj = Adjacency::build(a, subset, thr);
    let (local, exact) = match mode {
        CountMode::Exact => (packing::exact_max_independent(&adj)?, true),
        CountMode::Greedy => (packing::greedy_separated(&adj), false),
    };
    let witness: Vec<usize> = local.into_iter().map(|k| subset[k]).collect();
    Ok(SetCount {
        count: witness.len(),
        exact,
        witness,
    })
}

/// Smallest `(d, ε)`-spanning subset of `subset`, centres drawn from `subset` itself.
pub fn min_spanning(
    a: &Alphabet,
    subset: &[usize],
    epsilon: f64,
    mode: CountMode,
) -> Result<SetCount> {
    check_eps(epsilon)?;
    check_subset(a, subset)?;
    let thr = snap(epsilon);
    if let Some(line) = sorted_line(a, subset) {
        let mut witness = sweep_spanning(&line, thr);
        witness.sort_unstable();
        return Ok(SetCount {
            count: witness.len(),
            exact: true,
            witness,
        });
    }
    let adj = Adjacency::build(a, subset, thr);
    let (local, exact) = match mode {
        CountMode::Exact => (packing::exact_min_cover(&adj)?, true),
        CountMode::Greedy if subset.len() <= GREEDY_COVER_LIMIT => {
            (packing::greedy_cover(&adj), false)
        }
        CountMode::Greedy => (packing::greedy_separated(&adj), false),
    };
    let witness: Vec<usize> = local.into_iter().map(|k| subset[k]).collect();
    Ok(SetCount {
        count: witness.len(),
        exact,
        witness,
    })
}

/// `s(X, d, ε)` for the whole alphabet. For products this is the product of the factor
/// counts, which is a lower bound (products of separated sets stay separated under the
/// max metric) and is flagged inexact unless there is a single non-trivial factor.
pub fn separated_number(a: &Alphabet, epsilon: f64, mode: CountMode) -> Result<Count> {
    if let Some(factors) = a.factors() {
        return combine(factors, |f| separated_number(f, epsilon, mode));
    }
    let all: Vec<usize> = (0..a.len()).collect();
    let c = max_separated(a, &all, epsilon, mode)?;
    Ok(Count {
        value: c.count as u64,
        exact: c.exact,
    })
}

/// `r(X, d, ε)` for the whole alphabet. For products, the product of factor covers is a
/// cover, so the product of counts is an upper bound.
pub fn spanning_number(a: &Alphabet, epsilon: f64, mode: CountMode) -> Result<Count> {
    if let Some(factors) = a.factors() {
        return combine(factors, |f| spanning_number(f, epsilon, mode));
    }
    let all: Vec<usize> = (0..a.len()).collect();
    let c = min_spanning(a, &all, epsilon, mode)?;
    Ok(Count {
        value: c.count as u64,
        exact: c.exact,
    })
}

fn combine(factors: &[Alphabet], f: impl Fn(&Alphabet) -> Result<Count>) -> Result<Count> {
    let counts = factors.iter().map(f).collect::<Result<Vec<_>>>()?;
    let value = counts.iter().try_fold(1u64, |acc, c| acc.checked_mul(c.value));
    let value = value.ok_or_else(|| Error::InvalidParameter("count overflows u64".into()))?;
    let nontrivial = counts.iter().filter(|c| c.value > 1).count();
    Ok(Count {
        value,
        exact: nontrivial <= 1 && counts.iter().all(|c| c.exact),
    })
}

/// Both counts of the whole alphabet at one scale.
pub fn count(a: &Alphabet, epsilon: f64, mode: CountMode) -> Result<CountResult> {
    let s = separated_number(a, epsilon, mode)?;
    let r = spanning_number(a, epsilon, mode)?;
    Ok(CountResult {
        epsilon,
        spanning: r.value,
        separated: s.value,
        spanning_exact: r.exact,
        separated_exact: s.exact,
        internal_centers: true,
    })
}

/// Checks a scale grid: at least `min_len` values, positive, below 1, strictly decreasing
/// with a constant ratio.
pub fn validate_geometric_grid(eps_grid: &[f64], min_len: usize) -> Result<()> {
    if eps_grid.len() < min_len {
        return Err(Error::GridTooShort {
            len: eps_grid.len(),
            min: min_len,
        });
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidGrid("scales must lie in (0, 1)".into()));
    }
    let ratio = eps_grid[1] / eps_grid[0];
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidGrid("scales must decrease".into()));
    }
    for w in eps_grid.windows(2) {
        let q = w[1] / w[0];
        if (q - ratio).abs() > 1e-6 * ratio {
            return Err(Error::InvalidGrid(format!(
                "grid is not geometric: ratio {q} vs {ratio}"
            )));
        }
    }
    Ok(())
}

/// `n` scales `eps_max·ratio^k`, `k = 0..count`.
pub fn geometric_grid(eps_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps_max * ratio.powi(k as i32)).collect()
}

/// Index range `[start, len)` of the smallest `⌈fraction·len⌉` scales.
pub fn tail_window(len: usize, fraction: f64) -> (usize, usize) {
    let size = ((len as f64 * fraction).ceil() as usize).clamp(1, len.max(1));
    (len - size, len)
}

/// Least-squares slope of `y` against `x`.
pub fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDimEstimate {
    /// Max of `log r(ε)/log(1/ε)` over the fit window.
    pub upper_slope: f64,
    /// Min of the same ratios.
    pub lower_slope: f64,
    /// `(ε, log r(X, d, ε))` over the whole grid.
    pub curve: Vec<(f64, f64)>,
    pub fit_window: (usize, usize),
    /// Least-squares slope of `log r` against `log(1/ε)` over the fit window.
    pub lsq_slope: f64,
    /// Whether every covering number in the curve is certified optimal.
    pub exact: bool,
}

/// `(ε, log r(X, d, ε))` over a grid.
pub fn log_covering_curve(a: &Alphabet, eps_grid: &[f64]) -> Result<Vec<(f64, f64, bool)>> {
    eps_grid
        .iter()
        .map(|&e| {
            let r = spanning_number(a, e, CountMode::Greedy)?;
            Ok((e, (r.value as f64).ln(), r.exact))
        })
        .collect()
}

/// Upper and lower box dimension proxies over the smallest third of the grid.
pub fn box_dimension(a: &Alphabet, eps_grid: &[f64]) -> Result<BoxDimEstimate> {
    box_dimension_with_window(a, eps_grid, 1.0 / 3.0)
}

pub fn box_dimension_with_window(
    a: &Alphabet,
    eps_grid: &[f64],
    window_fraction: f64,
) -> Result<BoxDimEstimate> {
    validate_geometric_grid(eps_grid, 6)?;
    a.check_resolution(*eps_grid.last().expect("validated non-empty"))?;
    let raw = log_covering_curve(a, eps_grid)?;
    let fit_window = tail_window(raw.len(), window_fraction);
    let window = &raw[fit_window.0..fit_window.1];
    let ratios: Vec<f64> = window.iter().map(|&(e, l, _)| l / (1.0 / e).ln()).collect();
    let slope_pts: Vec<(f64, f64)> = window.iter().map(|&(e, l, _)| ((1.0 / e).ln(), l)).collect();
    Ok(BoxDimEstimate {
        upper_slope: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lower_slope: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        curve: raw.iter().map(|&(e, l, _)| (e, l)).collect(),
        fit_window,
        lsq_slope: lsq_slope(&slope_pts),
        exact: raw.iter().all(|r| r.2),
    })
}

/// `(ε, ε^θ · log r(X, d, ε))` over the grid.
pub fn tame_growth_profile(a: &Alphabet, theta: f64, eps_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    Ok(log_covering_curve(a, eps_grid)?
        .into_iter()
        .map(|(e, l, _)| (e, e.powf(theta) * l))
        .collect())
}

/// `ε_k = exp(−k^{1/s})`.
pub fn entdim_scale(s: f64, k: usize) -> f64 {
    (-(k as f64).powf(1.0 / s)).exp()
}

/// Smallest `k0 ≥ 1` from which `f(k) = ε_k·e^{αk}` is below 1 and decreasing.
pub fn entdim_k0(s: f64, alpha: f64) -> Result<usize> {
    check_entdim_params(s, alpha)?;
    let log_f = |k: f64| alpha * k - k.powf(1.0 / s);
    let slope = |k: f64| alpha - k.powf(1.0 / s - 1.0) / s;
    // log f is concave for s < 1, so once both hold they hold forever
    (1..10_000usize)
        .find(|&k| log_f(k as f64) < 0.0 && slope(k as f64) < 0.0)
        .ok_or_else(|| Error::InvalidParameter("no admissible k0 below 10000".into()))
}

fn check_entdim_params(s: f64, alpha: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0,1), got {s}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// `{0} ∪ ⋃_{k0 ≤ k ≤ k_max} {j·ε_k : 1 ≤ j ≤ ⌊e^{αk}⌋}` with `ε_k = exp(−k^{1/s})`.
///
/// Its covering numbers grow like `exp(α (log 1/ε)^s)`: at scale `ε_k` the `k`-th cluster
/// alone needs about `e^{αk}` balls. The construction is faithful for scales in
/// `[ε_{k_max}, ε_{k0}]`; see [`entdim_valid_window`].
pub fn generate_entdim_set(
    s: f64,
    alpha: f64,
    k0: usize,
    k_max: usize,
    point_cap: usize,
) -> Result<Alphabet> {
    check_entdim_params(s, alpha)?;
    let k_min = entdim_k0(s, alpha)?;
    if k0 < k_min {
        return Err(Error::InvalidParameter(format!(
            "k0 = {k0} is below the admissible start {k_min}"
        )));
    }
    if k_max < k0 {
        return Err(Error::InvalidParameter("k_max must be >= k0".into()));
    }
    let sizes: Vec<usize> = (k0..=k_max)
        .map(|k| (alpha * k as f64).exp().floor() as usize)
        .collect();
    let total = 1.0 + sizes.iter().map(|&m| m as f64).sum::<f64>();
    if total > point_cap as f64 {
        return Err(Error::CapExceeded {
            cap: "entdim point",
            required: total,
            limit: point_cap,
        });
    }
    let mut points = vec![0.0];
    for (k, &m) in (k0..=k_max).zip(&sizes) {
        let eps_k = entdim_scale(s, k);
        points.extend((1..=m).map(|j| j as f64 * eps_k));
    }
    Alphabet::abs1d(
        format!("entdim set s={s} alpha={alpha} k={k0}..{k_max}"),
        points,
    )
}

/// `[ε_{k_max}, ε_{k0}]`, the scales at which the truncated set represents the infinite one.
pub fn entdim_valid_window(s: f64, k0: usize, k_max: usize) -> (f64, f64) {
    (entdim_scale(s, k_max), entdim_scale(s, k0))
}
