//! ε-entropy counts for full shifts: enumerated window counts under the Bowen metric,
//! closed-form product bounds, and assembly of entropy curves over `(ε, n)` grids.
//!
//! Closed-form rows bracket `(1/|F|) log s(X^G, D_F, ε)` from both sides:
//!
//! * lower: configurations built from a `(d, ε/α_j)`-separated set at each coordinate at
//!   Chebyshev distance `j` from `F` (default symbol elsewhere) are `(D_F, ε)`-separated,
//!   since two of them that differ at such a coordinate `c` differ by more than `ε` after
//!   shifting by the nearest `h ∈ F`. The `j = 0` term alone is `log s(X, d, ε)`.
//! * upper: `(|S·F|/|F|) log r(X, d, ε/(2M))`, with `S` the truncation window for `ε`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_actions::{centered_box, FolnerSchedule, FolnerSet, GroupElement};
use crate::metric_spaces::{separated_number, spanning_number, CountMode};
use crate::packing::{self, snap, Adjacency, PointCloud};
use crate::shift_systems::{
    cylinder_configurations, BowenContext, ConfigCloud, Constraints, OrbitMetric, ShiftSystem,
    DEFAULT_ENUMERATION_CAP,
};

/// Resource limits for enumeration-based counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Window configurations that may be enumerated.
    pub enumeration: usize,
    /// Configurations whose pairwise distances may be materialized.
    pub pairwise: usize,
    /// Largest branch-and-bound instance.
    pub exact: usize,
    /// Largest exhaustive-oracle instance.
    pub oracle: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            enumeration: DEFAULT_ENUMERATION_CAP,
            pairwise: 6_000,
            exact: packing::EXACT_THRESHOLD,
            oracle: packing::ORACLE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveMethod {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "greedy")]
    Greedy,
    /// `log_separated` holds the closed-form lower bound, `log_spanning` the upper bound.
    #[serde(rename = "closed-form-lower")]
    ClosedFormLower,
    /// Both columns hold the closed-form upper bound.
    #[serde(rename = "closed-form-upper")]
    ClosedFormUpper,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::Exact => "exact",
            CurveMethod::Greedy => "greedy",
            CurveMethod::ClosedFormLower => "closed-form-lower",
            CurveMethod::ClosedFormUpper => "closed-form-upper",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => CurveMethod::Exact,
            "greedy" => CurveMethod::Greedy,
            "closed-form-lower" => CurveMethod::ClosedFormLower,
            "closed-form-upper" => CurveMethod::ClosedFormUpper,
            other => return Err(Error::Parse(format!("unknown method {other:?}"))),
        })
    }
}

/// One `(ε, n)` cell. Counts are natural logs, not yet divided by `|F_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub n: usize,
    pub folner_size: usize,
    pub log_separated: f64,
    pub log_spanning: f64,
    pub method: CurveMethod,
}

impl CurveRow {
    pub fn normalized_separated(&self) -> f64 {
        self.log_separated / self.folner_size as f64
    }

    pub fn normalized_spanning(&self) -> f64 {
        self.log_spanning / self.folner_size as f64
    }
}

/// Limsup/liminf proxies in `n` at one scale: max and min of `log_separated/|F_n|` over the
/// largest `n` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsTail {
    pub epsilon: f64,
    pub tail_max: f64,
    pub tail_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub label: String,
    /// Sorted by ε descending, then n ascending.
    pub rows: Vec<CurveRow>,
    /// One entry per ε, in row order.
    pub tails: Vec<EpsTail>,
    pub tail_fraction: f64,
}

pub const CSV_HEADER: &str = "epsilon,n,folner_size,log_separated,log_spanning,method";

impl EntropyCurve {
    /// Sorts rows and recomputes the tail statistics.
    pub fn from_rows(label: impl Into<String>, mut rows: Vec<CurveRow>, tail_fraction: f64) -> Self {
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon).then(a.n.cmp(&b.n)));
        let mut tails = Vec::new();
        let mut start = 0;
        while start < rows.len() {
            let eps = rows[start].epsilon;
            let end = start + rows[start..].iter().take_while(|r| r.epsilon == eps).count();
            let group = &rows[start..end];
            let take = ((group.len() as f64 * tail_fraction).ceil() as usize).clamp(1, group.len());
            let vals: Vec<f64> = group[group.len() - take..]
                .iter()
                .map(CurveRow::normalized_separated)
                .collect();
            tails.push(EpsTail {
                epsilon: eps,
                tail_max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                tail_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            });
            start = end;
        }
        Self {
            label: label.into(),
            rows,
            tails,
            tail_fraction,
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.tails.iter().map(|t| t.epsilon).collect()
    }

    pub fn row(&self, epsilon: f64, n: usize) -> Option<&CurveRow> {
        self.rows.iter().find(|r| r.epsilon == epsilon && r.n == n)
    }

    /// CSV with 17 significant digits per float, so parsing restores the rows bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{},{},{:.16e},{:.16e},{}",
                r.epsilon,
                r.n,
                r.folner_size,
                r.log_separated,
                r.log_spanning,
                r.method.as_str()
            );
        }
        out
    }

    pub fn from_csv(label: impl Into<String>, text: &str, tail_fraction: f64) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("line {}: expected 6 fields", i + 2)));
            }
            let float = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))
            };
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))
            };
            rows.push(CurveRow {
                epsilon: float(f[0])?,
                n: int(f[1])?,
                folner_size: int(f[2])?,
                log_separated: float(f[3])?,
                log_spanning: float(f[4])?,
                method: CurveMethod::parse(f[5])?,
            });
        }
        Ok(Self::from_rows(label, rows, tail_fraction))
    }
}

/// Separated and spanning counts of the enumerated window configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCount {
    pub separated: usize,
    pub spanning: usize,
    pub separated_exact: bool,
    pub spanning_exact: bool,
    pub configurations: usize,
}

/// Counts over all configurations supported on `S·F` with every alphabet symbol, under the
/// sup Bowen metric `d_F`.
pub fn count_window(sys: &ShiftSystem, f: &FolnerSet, epsilon: f64, mode: CountMode) -> Result<WindowCount> {
    count_window_with(sys, f, epsilon, mode, OrbitMetric::Sup, &Constraints::new(), &Caps::default())
}

/// [`count_window`] with an orbit metric, cylinder constraints and explicit caps.
pub fn count_window_with(
    sys: &ShiftSystem,
    f: &FolnerSet,
    epsilon: f64,
    mode: CountMode,
    orbit: OrbitMetric,
    constraints: &Constraints,
    caps: &Caps,
) -> Result<WindowCount> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let net: Vec<usize> = (0..sys.alphabet().len()).collect();
    let windows = cylinder_configurations(sys, &net, f, constraints, caps.enumeration)?;
    if windows.len() > caps.pairwise {
        return Err(Error::CapExceeded {
            cap: "pairwise",
            required: windows.len() as f64,
            limit: caps.pairwise,
        });
    }
    let ctx = BowenContext::new(sys, f.clone(), orbit)?;
    let cloud = ConfigCloud::new(&ctx, &windows);
    count_cloud(&cloud, epsilon, mode, caps)
}

/// Separated and spanning counts of any point cloud.
pub fn count_cloud<C: PointCloud>(cloud: &C, epsilon: f64, mode: CountMode, caps: &Caps) -> Result<WindowCount> {
    let all: Vec<usize> = (0..cloud.len()).collect();
    let adj = Adjacency::build(cloud, &all, snap(epsilon));
    let exact = mode == CountMode::Exact;
    if exact && cloud.len() > caps.exact {
        return Err(Error::OracleTooLarge {
            size: cloud.len(),
            threshold: caps.exact,
        });
    }
    let (separated, spanning) = if exact {
        (
            packing::exact_max_independent(&adj)?.len(),
            packing::exact_min_cover(&adj)?.len(),
        )
    } else {
        (
            packing::greedy_separated(&adj).len(),
            packing::greedy_cover(&adj).len(),
        )
    };
    Ok(WindowCount {
        separated,
        spanning,
        separated_exact: exact,
        spanning_exact: exact,
        configurations: cloud.len(),
    })
}

/// `|F + {−j..j}^d|`, the number of coordinates within Chebyshev distance `j` of `F`.
pub fn dilation_size(f: &FolnerSet, j: u64) -> usize {
    let j = j as i64;
    if f.rank() == 1 {
        // union of the intervals [x − j, x + j] over sorted x
        let mut total = 0i64;
        let mut covered_to = i64::MIN;
        for g in f.iter() {
            let (lo, hi) = (g.coords()[0] - j, g.coords()[0] + j);
            let start = lo.max(covered_to.saturating_add(1));
            if hi >= start {
                total += hi - start + 1;
            }
            covered_to = covered_to.max(hi);
        }
        return total as usize;
    }
    let rank = f.rank();
    let mut lo = vec![i64::MAX; rank];
    let mut hi = vec![i64::MIN; rank];
    for g in f.iter() {
        for (k, &c) in g.coords().iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let box_size: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).product();
    if box_size as usize == f.len() {
        return lo.iter().zip(&hi).map(|(a, b)| (b - a + 1 + 2 * j) as usize).product();
    }
    let group = crate::group_actions::GroupSpec::new(rank).expect("rank >= 1");
    f.product(&centered_box(&group, -j, j).expect("non-empty box")).len()
}

/// Chebyshev distance from `c` to the nearest element of `F`.
fn distance_to(f: &FolnerSet, c: &GroupElement) -> u64 {
    f.iter().map(|g| c.sub(g).sup_norm()).min().unwrap_or(u64::MAX)
}

/// How many free (unpinned) coordinates sit at each Chebyshev distance from `F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellProfile {
    /// `shells[j]` for `j = 0..=k_max`; `shells[0]` counts the free sites of `F` itself.
    pub shells: Vec<usize>,
    pub folner_size: usize,
}

pub fn shell_profile(f: &FolnerSet, k_max: u64, pins: &Constraints) -> ShellProfile {
    let mut shells = Vec::with_capacity(k_max as usize + 1);
    let mut prev = 0;
    for j in 0..=k_max {
        let now = dilation_size(f, j);
        shells.push(now - prev);
        prev = now;
    }
    for c in pins.keys() {
        let d = distance_to(f, c);
        if d <= k_max {
            shells[d as usize] -= 1;
        }
    }
    ShellProfile {
        shells,
        folner_size: f.len(),
    }
}

/// Per-site log counts needed by the closed-form bounds at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTable {
    pub epsilon: f64,
    /// `log s(X, d, ε/α_j)` for `j = 0, 1, …` while the scale is below the diameter.
    pub log_site: Vec<f64>,
    /// `log r(X, d, ε/(2M))`.
    pub log_r_fine: f64,
    /// Radius of the truncation window chosen for `ε`.
    pub window_radius: u64,
    pub separated_exact: bool,
}

pub fn scale_table(sys: &ShiftSystem, epsilon: f64, mode: CountMode) -> Result<ScaleTable> {
    let a = sys.alphabet();
    let diam = a.diameter();
    let mut log_site = Vec::new();
    let mut exact = true;
    let mut j = 0u64;
    loop {
        let scale = epsilon / sys.weights().alpha_at(j);
        if scale >= diam && j > 0 {
            break;
        }
        let c = separated_number(a, scale, mode)?;
        exact &= c.exact;
        log_site.push((c.value as f64).ln());
        if scale >= diam {
            break;
        }
        j += 1;
    }
    let r = spanning_number(a, epsilon / (2.0 * sys.total_mass()), mode)?;
    Ok(ScaleTable {
        epsilon,
        log_site,
        log_r_fine: (r.value as f64).ln(),
        window_radius: sys.radius_for(epsilon),
        separated_exact: exact,
    })
}

/// Closed-form per-site bounds on `(1/|F|) log` of the counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormBounds {
    /// `log s(X, d, ε)` scaled by the free fraction of `F`.
    pub lower: f64,
    /// Lower bound using every coordinate near `F`; at least `lower`.
    pub refined_lower: f64,
    /// `((|S·F| − pinned)/|F|) · log r(X, d, ε/(2M))`.
    pub upper: f64,
}

fn bounds_from(profile: &ShellProfile, table: &ScaleTable, sf_size: usize, pinned_in_sf: usize) -> ClosedFormBounds {
    let n = profile.folner_size as f64;
    let lower = profile.shells[0] as f64 * table.log_site[0] / n;
    let refined: f64 = profile
        .shells
        .iter()
        .zip(&table.log_site)
        .map(|(&k, &l)| k as f64 * l)
        .sum::<f64>()
        / n;
    ClosedFormBounds {
        lower,
        refined_lower: refined.max(lower),
        upper: (sf_size - pinned_in_sf) as f64 * table.log_r_fine / n,
    }
}

/// Closed-form bounds for the full shift with window `S` at scale `ε`.
pub fn closed_form_bounds(sys: &ShiftSystem, f_n: &FolnerSet, s: &FolnerSet, epsilon: f64) -> Result<ClosedFormBounds> {
    closed_form_bounds_pinned(sys, f_n, s, epsilon, &Constraints::new())
}

/// [`closed_form_bounds`] on a cylinder: pinned coordinates contribute nothing.
pub fn closed_form_bounds_pinned(
    sys: &ShiftSystem,
    f_n: &FolnerSet,
    s: &FolnerSet,
    epsilon: f64,
    pins: &Constraints,
) -> Result<ClosedFormBounds> {
    let table = scale_table(sys, epsilon, CountMode::Greedy)?;
    let profile = shell_profile(f_n, table.log_site.len() as u64 - 1, pins);
    let sf = s.product(f_n);
    let pinned_in_sf = pins.keys().filter(|g| sf.contains(g)).count();
    Ok(bounds_from(&profile, &table, sf.len(), pinned_in_sf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    #[default]
    Lower,
    Upper,
}

/// How an entropy curve is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub mode: CountMode,
    pub orbit: OrbitMetric,
    pub caps: Caps,
    /// Fraction of the largest `n` values used for the tail statistics.
    pub tail_fraction: f64,
    /// Which closed-form bound fills `log_separated` when enumeration is out of reach.
    pub closed_form_side: BoundSide,
    /// Skip enumeration even where it would fit.
    pub force_closed_form: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            mode: CountMode::Greedy,
            orbit: OrbitMetric::Sup,
            caps: Caps::default(),
            tail_fraction: 1.0 / 3.0,
            closed_form_side: BoundSide::Lower,
            force_closed_form: false,
        }
    }
}

fn enumerable(sys: &ShiftSystem, f: &FolnerSet, pins: &Constraints, caps: &Caps) -> bool {
    let sites = dilation_size(f, sys.window_radius());
    let free = sites.saturating_sub(pins.len()) as f64;
    (sys.alphabet().len() as f64).powf(free) <= caps.pairwise as f64
}

/// One row per `(ε, n)`; enumerated where the window fits the caps, closed-form otherwise.
pub fn entropy_curve(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    eps_grid: &[f64],
    n_grid: &[usize],
    mode: CountMode,
) -> Result<EntropyCurve> {
    let opts = CurveOptions {
        mode,
        ..CurveOptions::default()
    };
    entropy_curve_with(sys, schedule, eps_grid, n_grid, &opts, &Constraints::new())
}

pub fn entropy_curve_with(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
    pins: &Constraints,
) -> Result<EntropyCurve> {
    let site = |_: &ScaleTable, _: usize| None;
    curve_engine(sys, schedule, eps_grid, n_grid, opts, pins, &site, schedule.label())
}

/// Replacement for the `j = 0` per-site term of a scale table (used by weighted counting).
pub(crate) type SiteOverride<'a> = dyn Fn(&ScaleTable, usize) -> Option<f64> + Sync + 'a;

/// Shared driver for entropy and pressure curves. `site_override(table, n)` may replace
/// `log_site[0]`; enumerated cells are only used when it returns `None`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn curve_engine(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
    pins: &Constraints,
    site_override: &SiteOverride,
    label: &str,
) -> Result<EntropyCurve> {
    if eps_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::InvalidGrid("eps_grid and n_grid must be non-empty".into()));
    }
    if let Some(&e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidGrid(format!("non-positive scale {e}")));
    }
    if n_grid.contains(&0) {
        return Err(Error::InvalidGrid("n must be at least 1".into()));
    }
    let tables: Vec<ScaleTable> = eps_grid
        .par_iter()
        .map(|&e| scale_table(sys, e, opts.mode))
        .collect::<Result<_>>()?;
    let sets: Vec<FolnerSet> = n_grid.iter().map(|&n| schedule.set(n)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..tables.len())
        .flat_map(|i| (0..sets.len()).map(move |k| (i, k)))
        .collect();
    let rows: Vec<CurveRow> = cells
        .par_iter()
        .map(|&(i, k)| {
            let (table, f, n) = (&tables[i], &sets[k], n_grid[k]);
            let replaced = site_override(table, n);
            if replaced.is_none() && !opts.force_closed_form && enumerable(sys, f, pins, &opts.caps) {
                let mode = opts.mode;
                let count = |m| count_window_with(sys, f, table.epsilon, m, opts.orbit, pins, &opts.caps);
                let (wc, method) = match count(mode) {
                    Err(Error::OracleTooLarge { .. }) => (count(CountMode::Greedy)?, CurveMethod::Greedy),
                    other => (
                        other?,
                        if mode == CountMode::Exact {
                            CurveMethod::Exact
                        } else {
                            CurveMethod::Greedy
                        },
                    ),
                };
                return Ok(CurveRow {
                    epsilon: table.epsilon,
                    n,
                    folner_size: f.len(),
                    log_separated: (wc.separated as f64).ln(),
                    log_spanning: (wc.spanning as f64).ln(),
                    method,
                });
            }
            let mut table = table.clone();
            if let Some(v) = replaced {
                table.log_site[0] = v;
            }
            let profile = shell_profile(f, table.log_site.len() as u64 - 1, pins);
            let sf_size = dilation_size(f, table.window_radius);
            let pinned_in_sf = pins
                .keys()
                .filter(|g| distance_to(f, g) <= table.window_radius)
                .count();
            let b = bounds_from(&profile, &table, sf_size, pinned_in_sf);
            let size = f.len() as f64;
            let (sep, method) = match opts.closed_form_side {
                BoundSide::Lower => (b.refined_lower, CurveMethod::ClosedFormLower),
                BoundSide::Upper => (b.upper, CurveMethod::ClosedFormUpper),
            };
            Ok(CurveRow {
                epsilon: table.epsilon,
                n,
                folner_size: f.len(),
                log_separated: sep * size,
                log_spanning: b.upper * size,
                method,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EntropyCurve::from_rows(
        format!("{} | {label}", sys.alphabet().label()),
        rows,
        opts.tail_fraction,
    ))
}

/// Restricts window enumeration to a cylinder: returns the constraints after checking that
/// they lie inside `S·F`.
pub fn cylinder_subset(sys: &ShiftSystem, f: &FolnerSet, constraints: &Constraints) -> Result<Constraints> {
    let len = sys.alphabet().len();
    for (g, &v) in constraints {
        if v >= len {
            return Err(Error::IndexOutOfRange { index: v, len });
        }
        if distance_to(f, g) > sys.window_radius() {
            return Err(Error::InvalidParameter(format!(
                "constraint at {:?} lies outside the window S·F",
                g.coords()
            )));
        }
    }
    Ok(constraints.clone())
}

/// Per-ε tail statistics keyed by the bit pattern of ε.
pub fn tails_by_eps(curve: &EntropyCurve) -> BTreeMap<u64, EpsTail> {
    curve.tails.iter().map(|t| (t.epsilon.to_bits(), *t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_actions::{folner_boxes, GroupSpec};
    use crate::metric_spaces::Alphabet;
    use crate::shift_systems::{window_configurations, WeightFunction};
    use proptest::prelude::*;

    fn z() -> GroupSpec {
        GroupSpec::new(1).unwrap()
    }

    fn sys(a: Alphabet, radius: u64) -> ShiftSystem {
        ShiftSystem::with_window_radius(a, z(), WeightFunction::default(), 0, radius).unwrap()
    }

    #[test]
    fn one_symbol_counts_one() {
        let s = sys(Alphabet::abs1d("pt", vec![0.0]).unwrap(), 2);
        let f = folner_boxes(&z(), 3).unwrap();
        let c = count_window(&s, &f, 0.1, CountMode::Exact).unwrap();
        assert_eq!((c.separated, c.spanning), (1, 1));
    }

    #[test]
    fn two_symbols_single_site() {
        let s = sys(Alphabet::abs1d("two", vec![0.0, 1.0]).unwrap(), 0);
        let f = FolnerSet::singleton(GroupElement::scalar(0));
        let c = count_window(&s, &f, 0.4, CountMode::Exact).unwrap();
        assert_eq!(c.separated, 2);
    }

    #[test]
    fn eleven_point_net_matches_exhaustive_count() {
        // S = {0}, F = {0,1}: 121 configurations on two sites
        let s = sys(Alphabet::unit_interval_net(11).unwrap(), 0);
        let f = folner_boxes(&z(), 2).unwrap();
        let greedy = count_window(&s, &f, 0.3, CountMode::Greedy).unwrap();
        assert_eq!(greedy.configurations, 121);
        // d_F((a0,a1),(b0,b1)) = max(|a0−b0| + |a1−b1|/2, |a0−b0|/2 + |a1−b1|); an explicit
        // separated family: first coordinate in {0, .4, .8}, second in {0, .4, .8}
        let e = window_configurations(&s, &(0..11).collect::<Vec<_>>(), &f).unwrap();
        let pts: Vec<(f64, f64)> = (0..e.len())
            .map(|i| {
                let v = e.symbols(i);
                (v[0] as f64 / 10.0, v[1] as f64 / 10.0)
            })
            .collect();
        let d = |p: (f64, f64), q: (f64, f64)| {
            let (a, b) = ((p.0 - q.0).abs(), (p.1 - q.1).abs());
            (a + b / 2.0).max(a / 2.0 + b)
        };
        // the oracle here is a direct greedy pass with the closed-form distance
        let mut chosen: Vec<(f64, f64)> = Vec::new();
        for &p in &pts {
            if chosen.iter().all(|&q| d(p, q) > snap(0.3)) {
                chosen.push(p);
            }
        }
        assert_eq!(greedy.separated, chosen.len());
    }

    #[test]
    fn closed_form_examples() {
        let a = Alphabet::unit_interval_net(17).unwrap();
        let s = sys(a, 4);
        let f = folner_boxes(&z(), 5).unwrap();
        let b = closed_form_bounds(&s, &f, s.window(), 0.05).unwrap();
        assert!((b.lower - 17f64.ln()).abs() < 1e-12);
        assert!(b.refined_lower >= b.lower);
        // M = 3, so the upper bound uses r(X, ε/6)
        let r = spanning_number(s.alphabet(), 0.05 / 6.0, CountMode::Greedy).unwrap();
        let sf = s.window().product(&f).len() as f64;
        assert!((b.upper - sf / 5.0 * (r.value as f64).ln()).abs() < 1e-12);
        let pt = sys(Alphabet::abs1d("pt", vec![0.5]).unwrap(), 4);
        let b0 = closed_form_bounds(&pt, &f, pt.window(), 0.05).unwrap();
        assert_eq!((b0.lower, b0.refined_lower, b0.upper), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dilation_sizes() {
        let f = folner_boxes(&z(), 4).unwrap();
        assert_eq!(dilation_size(&f, 0), 4);
        assert_eq!(dilation_size(&f, 2), 8);
        let l = crate::group_actions::subgroup_boxes(&z(), 3, 4).unwrap();
        // {0,3,6,9} ± 1 = {-1..10}
        assert_eq!(dilation_size(&l, 1), 12);
        assert_eq!(dilation_size(&l, 0), 4);
        let z2 = GroupSpec::new(2).unwrap();
        let b = folner_boxes(&z2, 3).unwrap();
        assert_eq!(dilation_size(&b, 1), 25);
        let generic = FolnerSet::new(vec![GroupElement::new(vec![0, 0]), GroupElement::new(vec![5, 5])]).unwrap();
        assert_eq!(dilation_size(&generic, 1), 18);
    }

    #[test]
    fn shell_profile_excludes_pins() {
        let f = folner_boxes(&z(), 4).unwrap();
        let mut pins = Constraints::new();
        pins.insert(GroupElement::scalar(0), 1);
        pins.insert(GroupElement::scalar(-2), 1);
        let p = shell_profile(&f, 3, &pins);
        assert_eq!(p.shells, vec![3, 2, 1, 2]);
    }

    #[test]
    fn curve_rows_sorted_with_tails() {
        let s = sys(Alphabet::abs1d("two", vec![0.0, 1.0]).unwrap(), 1);
        let sched = FolnerSchedule::boxes(z());
        let curve = entropy_curve(&s, &sched, &[0.3, 0.2], &[1, 2, 3], CountMode::Exact).unwrap();
        assert_eq!(curve.rows.len(), 6);
        assert_eq!(curve.rows[0].epsilon, 0.3);
        assert_eq!(curve.rows[0].n, 1);
        assert_eq!(curve.tails.len(), 2);
        for t in &curve.tails {
            assert!(t.tail_min <= t.tail_max);
        }
    }

    #[test]
    fn one_symbol_curve_is_zero() {
        let s = ShiftSystem::new(Alphabet::abs1d("pt", vec![0.0]).unwrap(), z(), WeightFunction::default(), 0, 1e-3).unwrap();
        let sched = FolnerSchedule::boxes(z());
        let curve = entropy_curve(&s, &sched, &[0.1, 0.01, 0.001], &[1, 10, 100], CountMode::Greedy).unwrap();
        assert!(curve.rows.iter().all(|r| r.log_separated == 0.0));
    }

    #[test]
    fn exact_counts_sit_inside_closed_form_bounds() {
        let s = sys(Alphabet::abs1d("two", vec![0.0, 1.0]).unwrap(), 1);
        for n in 1..=2 {
            let f = folner_boxes(&z(), n).unwrap();
            for eps in [0.05, 0.2, 0.4, 0.7] {
                let c = count_window(&s, &f, eps, CountMode::Exact).unwrap();
                let b = closed_form_bounds(&s, &f, s.window(), eps).unwrap();
                let half = closed_form_bounds(&s, &f, s.window(), eps / 2.0).unwrap();
                let norm = (c.separated as f64).ln() / n as f64;
                assert!(b.lower <= norm + 1e-12, "n={n} eps={eps}");
                assert!(norm <= half.upper + 1e-12);
                assert!(c.spanning <= c.separated);
            }
        }
    }

    #[test]
    fn seventeen_symbol_net_below_gap() {
        let a = Alphabet::unit_interval_net(17).unwrap();
        let s = ShiftSystem::new(a, z(), WeightFunction::default(), 0, 0.01).unwrap();
        let sched = FolnerSchedule::boxes(z());
        let opts = CurveOptions::default();
        let curve = entropy_curve_with(&s, &sched, &[0.05, 0.02], &[4, 64, 1024], &opts, &Constraints::new()).unwrap();
        for r in &curve.rows {
            let b = closed_form_bounds(&s, &folner_boxes(&z(), r.n).unwrap(), s.window(), r.epsilon).unwrap();
            assert!((b.lower - 17f64.ln()).abs() < 1e-12);
            assert!(r.normalized_separated() >= b.lower);
        }
        // the boundary contribution fades as n grows
        let big = curve.row(0.02, 1024).unwrap().normalized_separated();
        assert!(big - 17f64.ln() < 0.15);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let s = ShiftSystem::new(Alphabet::unit_interval_net(101).unwrap(), z(), WeightFunction::default(), 0, 0.04).unwrap();
        let curve = entropy_curve(&s, &FolnerSchedule::boxes(z()), &[0.3, 0.1, 1.0 / 30.0], &[8, 16], CountMode::Greedy).unwrap();
        let back = EntropyCurve::from_csv(curve.label.clone(), &curve.to_csv(), curve.tail_fraction).unwrap();
        assert_eq!(curve, back);
        assert!(EntropyCurve::from_csv("x", "bad header\n", 0.3).is_err());
    }

    #[test]
    fn pinned_cylinder_counts() {
        let s = sys(Alphabet::abs1d("three", vec![0.0, 0.5, 1.0]).unwrap(), 1);
        let f = FolnerSet::singleton(GroupElement::scalar(0));
        let mut pins = Constraints::new();
        pins.insert(GroupElement::scalar(0), 1);
        let net: Vec<usize> = (0..3).collect();
        let e = cylinder_configurations(&s, &net, &f, &pins, 1000).unwrap();
        assert_eq!(e.len(), 9);
        assert!(cylinder_subset(&s, &f, &pins).is_ok());
        pins.insert(GroupElement::scalar(4), 0);
        assert!(cylinder_subset(&s, &f, &pins).is_err());
    }

    proptest! {
        #[test]
        fn window_sandwich_and_greedy_agreement(
            pts in prop::collection::btree_set(0u32..20, 2..4),
            eps in 0.02f64..0.9,
        ) {
            // S = {0}, F = {0,1}, at most 9 configurations
            let a = Alphabet::abs1d("r", pts.iter().map(|&p| p as f64 / 20.0).collect()).unwrap();
            let s = sys(a, 0);
            let f = folner_boxes(&z(), 2).unwrap();
            let ex = count_window(&s, &f, eps, CountMode::Exact).unwrap();
            let half = count_window(&s, &f, eps / 2.0, CountMode::Exact).unwrap();
            prop_assert!(ex.spanning <= ex.separated && ex.separated <= half.spanning);
            let gr = count_window(&s, &f, eps, CountMode::Greedy).unwrap();
            prop_assert!(gr.separated <= ex.separated && gr.spanning >= ex.spanning);
            let bigger = count_window(&s, &f, eps * 1.5, CountMode::Exact).unwrap();
            prop_assert!(bigger.separated <= ex.separated);
        }
    }
}
