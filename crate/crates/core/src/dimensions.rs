//! Dimension estimates from entropy curves: upper/lower (s-scaled) metric mean dimension,
//! infinite entropy dimension, local mean dimension of cylinders, and the power-rule and
//! self-product experiments.
//!
//! The double limit `n → ∞` then `ε → 0` is approximated in two stages. Per scale, the
//! curve already carries max/min of `log s/|F_n|` over its largest `n`. Across scales, the
//! ratio `tail/(log 1/ε)^s` is taken over the smallest third of the grid, where the upper
//! estimate is the max and the lower estimate the min.

use serde::{Deserialize, Serialize};

use crate::counting::{entropy_curve_with, CurveOptions, EntropyCurve, EpsTail};
use crate::error::{Error, Result};
use crate::group_actions::FolnerSchedule;
use crate::metric_spaces::{lsq_slope, tail_window};
use crate::shift_systems::{product_system, Constraints, ShiftSystem};

/// Minimum number of distinct scales for any estimate.
pub const MIN_SCALES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub upper: f64,
    pub lower: f64,
    pub scaling_exponent_s: f64,
    /// Tail statistics per scale, before division by `(log 1/ε)^s`.
    pub per_eps: Vec<EpsTail>,
    pub fit_window: (usize, usize),
    /// Least-squares slope of `tail_max` against `(log 1/ε)^s` over the fit window.
    pub lsq_slope: f64,
    pub diagnostics: Vec<String>,
}

impl DimensionEstimate {
    /// `tail_max/(log 1/ε)^s` at each scale of the fit window.
    pub fn window_ratios(&self) -> Vec<(f64, f64)> {
        let s = self.scaling_exponent_s;
        self.per_eps[self.fit_window.0..self.fit_window.1]
            .iter()
            .map(|t| (t.epsilon, t.tail_max / (1.0 / t.epsilon).ln().powf(s)))
            .collect()
    }
}

/// Aggregates per-scale tails into an estimate. `tails` must be ordered by decreasing ε.
pub fn estimate_from_tails(tails: &[EpsTail], s: f64, window_fraction: f64) -> Result<DimensionEstimate> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("scaling exponent must be positive, got {s}")));
    }
    let mut eps: Vec<f64> = tails.iter().map(|t| t.epsilon).collect();
    eps.dedup();
    if eps.len() < MIN_SCALES || eps.len() != tails.len() {
        return Err(Error::GridTooShort {
            len: eps.len(),
            min: MIN_SCALES,
        });
    }
    if tails.windows(2).any(|w| w[1].epsilon >= w[0].epsilon) {
        return Err(Error::InvalidGrid("scales must be strictly decreasing".into()));
    }
    if tails[0].epsilon >= (-1.0f64).exp() {
        return Err(Error::InvalidGrid(format!(
            "largest scale {} must lie below 1/e",
            tails[0].epsilon
        )));
    }
    let fit_window = tail_window(tails.len(), window_fraction);
    let mut diagnostics = vec![format!(
        "fit window: smallest {} of {} scales; limits approximated by per-scale tails over the largest n, then max/min of ratios over the window",
        fit_window.1 - fit_window.0,
        tails.len()
    )];
    if tails.iter().all(|t| t.tail_max == 0.0 && t.tail_min == 0.0) {
        diagnostics.push("degenerate curve: every entropy value is zero".into());
        return Ok(DimensionEstimate {
            upper: 0.0,
            lower: 0.0,
            scaling_exponent_s: s,
            per_eps: tails.to_vec(),
            fit_window,
            lsq_slope: 0.0,
            diagnostics,
        });
    }
    let window = &tails[fit_window.0..fit_window.1];
    let denom = |e: f64| (1.0 / e).ln().powf(s);
    let upper = window
        .iter()
        .map(|t| t.tail_max / denom(t.epsilon))
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = window
        .iter()
        .map(|t| t.tail_min / denom(t.epsilon))
        .fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = window.iter().map(|t| (denom(t.epsilon), t.tail_max)).collect();
    Ok(DimensionEstimate {
        upper,
        lower,
        scaling_exponent_s: s,
        per_eps: tails.to_vec(),
        fit_window,
        lsq_slope: lsq_slope(&pts),
        diagnostics,
    })
}

/// Upper and lower s-scaled metric mean dimension of a curve (`s = 1` for plain mdim).
pub fn mdim_estimate(curve: &EntropyCurve, s: f64) -> Result<DimensionEstimate> {
    estimate_from_tails(&curve.tails, s, 1.0 / 3.0)
}

/// Thresholds and window for [`entdim_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntDimOptions {
    pub tau_hi: f64,
    pub tau_lo: f64,
    pub window_fraction: f64,
}

impl Default for EntDimOptions {
    fn default() -> Self {
        Self {
            tau_hi: 5.0,
            tau_lo: 0.2,
            window_fraction: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntDimEstimate {
    pub s_grid: Vec<f64>,
    pub transition_lo: f64,
    pub transition_hi: f64,
    /// Upper s-scaled estimate at each s.
    pub values_at_s: Vec<f64>,
    /// Slope of `log(tail_max/(log 1/ε)^s)` against `log log(1/ε)` over the fit window;
    /// positive means the ratio is still growing as ε shrinks.
    pub trend_at_s: Vec<f64>,
    pub found: bool,
    pub diagnostics: Vec<String>,
}

/// Locates the critical exponent where the s-scaled ratio switches from diverging to
/// vanishing. An exponent counts as diverging when its ratio exceeds `tau_hi` or is still
/// increasing across the fit window, and as vanishing when it is not diverging and its ratio
/// is below `tau_lo` or decreasing.
pub fn entdim_estimate(curve: &EntropyCurve, s_grid: &[f64]) -> Result<EntDimEstimate> {
    entdim_estimate_with(curve, s_grid, &EntDimOptions::default())
}

pub fn entdim_estimate_with(curve: &EntropyCurve, s_grid: &[f64], opts: &EntDimOptions) -> Result<EntDimEstimate> {
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("s_grid must be non-empty and increasing".into()));
    }
    if s_grid.iter().any(|&s| !(s > 0.0 && s <= 2.0)) {
        return Err(Error::InvalidGrid("s values must lie in (0, 2]".into()));
    }
    let mut values = Vec::with_capacity(s_grid.len());
    let mut trends = Vec::with_capacity(s_grid.len());
    let mut diagnostics = Vec::new();
    for &s in s_grid {
        let est = estimate_from_tails(&curve.tails, s, opts.window_fraction)?;
        let window = &est.per_eps[est.fit_window.0..est.fit_window.1];
        let pts: Vec<(f64, f64)> = window
            .iter()
            .filter(|t| t.tail_max > 0.0)
            .map(|t| {
                let l = (1.0 / t.epsilon).ln();
                (l.ln(), t.tail_max.ln() - s * l.ln())
            })
            .collect();
        // an identically zero curve decays at every s
        trends.push(if pts.len() < 2 { -1.0 } else { lsq_slope(&pts) });
        values.push(est.upper);
    }
    let diverging: Vec<bool> = values
        .iter()
        .zip(&trends)
        .map(|(&v, &t)| v > opts.tau_hi || t > 0.0)
        .collect();
    let vanishing: Vec<bool> = values
        .iter()
        .zip(&trends)
        .zip(&diverging)
        .map(|((&v, &t), &d)| !d && (v < opts.tau_lo || t < 0.0))
        .collect();
    let lo_idx = diverging.iter().rposition(|&d| d);
    let hi_idx = vanishing
        .iter()
        .enumerate()
        .position(|(i, &v)| v && lo_idx.is_none_or(|lo| i > lo));
    let transition_lo = lo_idx.map_or(0.0, |i| s_grid[i]);
    if lo_idx.is_none() {
        diagnostics.push("no diverging exponent in the grid; lower end set to 0".into());
    }
    let (transition_hi, found) = match hi_idx {
        Some(i) => (s_grid[i], true),
        None => {
            diagnostics.push("no vanishing exponent above the diverging ones; upper end set to the largest s".into());
            (*s_grid.last().expect("non-empty"), false)
        }
    };
    Ok(EntDimEstimate {
        s_grid: s_grid.to_vec(),
        transition_lo,
        transition_hi,
        values_at_s: values,
        trend_at_s: trends,
        found,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRuleResult {
    pub full: DimensionEstimate,
    pub sub: DimensionEstimate,
    /// `sub.upper / full.upper`.
    pub ratio: f64,
}

/// Mean dimension of the `mZ`-action (Følner sets `{0, m, …, (n−1)m}`, normalized by `n`)
/// against the `Z`-action.
pub fn power_rule_experiment(
    sys: &ShiftSystem,
    m: usize,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
) -> Result<PowerRuleResult> {
    if sys.group().rank() != 1 {
        return Err(Error::InvalidParameter("the power rule experiment needs rank 1".into()));
    }
    let full_curve = entropy_curve_with(sys, &FolnerSchedule::boxes(*sys.group()), eps_grid, n_grid, opts, &Constraints::new())?;
    let sub_curve = entropy_curve_with(sys, &FolnerSchedule::subgroup(*sys.group(), m)?, eps_grid, n_grid, opts, &Constraints::new())?;
    let full = mdim_estimate(&full_curve, 1.0)?;
    let sub = mdim_estimate(&sub_curve, 1.0)?;
    let ratio = if full.upper == 0.0 { f64::NAN } else { sub.upper / full.upper };
    Ok(PowerRuleResult { full, sub, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductResult {
    pub single: DimensionEstimate,
    pub squared: DimensionEstimate,
}

/// Mean dimension of `X` and of `X × X` with the max metric.
pub fn product_experiment(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
) -> Result<ProductResult> {
    let squared_sys = product_system(sys, sys)?;
    let single = mdim_estimate(&entropy_curve_with(sys, schedule, eps_grid, n_grid, opts, &Constraints::new())?, 1.0)?;
    let squared = mdim_estimate(
        &entropy_curve_with(&squared_sys, schedule, eps_grid, n_grid, opts, &Constraints::new())?,
        1.0,
    )?;
    Ok(ProductResult { single, squared })
}

/// Mean dimension of the cylinder fixing `constraints`; each pinned coordinate must lie in
/// the truncation window `S`.
pub fn local_mdim_estimate(
    sys: &ShiftSystem,
    constraints: &Constraints,
    schedule: &FolnerSchedule,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
) -> Result<DimensionEstimate> {
    let len = sys.alphabet().len();
    for (g, &v) in constraints {
        if v >= len {
            return Err(Error::IndexOutOfRange { index: v, len });
        }
        if !sys.window().contains(g) {
            return Err(Error::InvalidParameter(format!(
                "constraint at {:?} lies outside the truncation window",
                g.coords()
            )));
        }
    }
    let curve = entropy_curve_with(sys, schedule, eps_grid, n_grid, opts, constraints)?;
    mdim_estimate(&curve, 1.0)
}
