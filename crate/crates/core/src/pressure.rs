//! Birkhoff sums and the ε-scale topological pressure
//! `P_F(f, ε) = sup_E Σ_{x∈E} exp(S_F f(x))` over `(d_F, ε)`-separated sets `E`.
//!
//! Small windows are enumerated and solved as a max-weight separated set. Large windows use
//! the closed-form lower bound of the entropy curves with the central per-site factor
//! replaced by `c + log W(ε)`, where `W` is the best per-site separated sum of `e^φ`: products
//! of per-site separated sets over `F` are `d_F`-separated and their weights factorize.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{curve_engine, dilation_size, CurveOptions, EntropyCurve, EpsTail, ScaleTable};
use crate::dimensions::{estimate_from_tails, DimensionEstimate};
use crate::error::{Error, Result};
use crate::group_actions::{FolnerSchedule, FolnerSet};
use crate::metric_spaces::{tail_window, Alphabet, CountMode};
use crate::packing::{self, log_sum_exp, snap, Adjacency, EXACT_THRESHOLD};
use crate::shift_systems::{
    cylinder_configurations, BowenContext, ConfigCloud, Configuration, Constraints, ShiftSystem,
};

const GENERIC_SITE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Constant,
    Coordinate,
    Sum,
}

/// `f(x) = c + φ(x_e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialDoc", into = "PotentialDoc")]
pub struct Potential {
    kind: PotentialKind,
    c: f64,
    phi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialDoc {
    pub kind: PotentialKind,
    #[serde(default)]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
}

impl TryFrom<PotentialDoc> for Potential {
    type Error = Error;

    fn try_from(d: PotentialDoc) -> Result<Self> {
        match (d.kind, d.phi) {
            (PotentialKind::Constant, None) => Self::constant(d.c),
            (PotentialKind::Coordinate, Some(phi)) if d.c == 0.0 => Self::coordinate(phi),
            (PotentialKind::Sum, Some(phi)) => Self::sum(d.c, phi),
            (kind, _) => Err(Error::Parse(format!("inconsistent fields for a {kind:?} potential"))),
        }
    }
}

impl From<Potential> for PotentialDoc {
    fn from(p: Potential) -> Self {
        Self {
            kind: p.kind,
            c: p.c,
            phi: p.phi,
        }
    }
}

impl Potential {
    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Constant,
            c: 0.0,
            phi: None,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        check_finite(&[c])?;
        Ok(Self {
            kind: PotentialKind::Constant,
            c,
            phi: None,
        })
    }

    pub fn coordinate(phi: Vec<f64>) -> Result<Self> {
        check_finite(&phi)?;
        Ok(Self {
            kind: PotentialKind::Coordinate,
            c: 0.0,
            phi: Some(phi),
        })
    }

    pub fn sum(c: f64, phi: Vec<f64>) -> Result<Self> {
        check_finite(&phi)?;
        check_finite(&[c])?;
        Ok(Self {
            kind: PotentialKind::Sum,
            c,
            phi: Some(phi),
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn phi(&self) -> Option<&[f64]> {
        self.phi.as_deref()
    }

    /// `f + k`.
    pub fn plus(&self, k: f64) -> Self {
        let kind = match self.kind {
            PotentialKind::Constant => PotentialKind::Constant,
            _ => PotentialKind::Sum,
        };
        Self {
            kind,
            c: self.c + k,
            phi: self.phi.clone(),
        }
    }

    /// `k·f`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            kind: self.kind,
            c: self.c * k,
            phi: self.phi.as_ref().map(|p| p.iter().map(|v| v * k).collect()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.phi.as_ref().is_none_or(|p| p.iter().all(|&v| v == 0.0))
    }

    pub fn label(&self) -> String {
        match self.kind {
            PotentialKind::Constant => format!("f = {}", self.c),
            PotentialKind::Coordinate => "f = phi(x_e)".into(),
            PotentialKind::Sum => format!("f = {} + phi(x_e)", self.c),
        }
    }

    /// `f` at a configuration with coordinate symbol `a` at the identity.
    pub fn at_symbol(&self, a: usize) -> f64 {
        self.c + self.phi.as_ref().map_or(0.0, |p| p[a])
    }

    /// `‖f‖ = max_a |c + φ(a)|` over `len` alphabet points.
    pub fn sup_norm(&self, len: usize) -> f64 {
        match &self.phi {
            None => self.c.abs(),
            Some(_) => (0..len).map(|a| self.at_symbol(a).abs()).fold(0.0, f64::max),
        }
    }

    pub fn validate_for(&self, sys: &ShiftSystem) -> Result<()> {
        match &self.phi {
            Some(p) if p.len() != sys.alphabet().len() => Err(Error::AlphabetMismatch(format!(
                "potential table has {} values for {} alphabet points",
                p.len(),
                sys.alphabet().len()
            ))),
            _ => Ok(()),
        }
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("potential values must be finite".into()));
    }
    Ok(())
}

/// `S_F f(x) = Σ_{g∈F} f(σ_g x)`.
pub fn birkhoff_sum(sys: &ShiftSystem, f: &FolnerSet, pot: &Potential, x: &Configuration) -> Result<f64> {
    pot.validate_for(sys)?;
    sys.check_config(x)?;
    let identity = sys.group().identity();
    Ok(f
        .iter()
        .map(|g| pot.at_symbol(x.shift(g).get(&identity, sys.default_symbol())))
        .sum())
}

/// `log P_F(f, ε)` over the window configurations on `S·F`.
pub fn pressure_count(
    sys: &ShiftSystem,
    f: &FolnerSet,
    pot: &Potential,
    epsilon: f64,
    mode: CountMode,
    caps: &crate::counting::Caps,
) -> Result<(f64, bool)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    pot.validate_for(sys)?;
    let net: Vec<usize> = (0..sys.alphabet().len()).collect();
    let windows = cylinder_configurations(sys, &net, f, &Constraints::new(), caps.enumeration)?;
    if windows.len() > caps.pairwise {
        return Err(Error::CapExceeded {
            cap: "pairwise",
            required: windows.len() as f64,
            limit: caps.pairwise,
        });
    }
    let f_pos: Vec<usize> = f
        .iter()
        .map(|g| windows.sites().binary_search(g).expect("F lies inside S·F"))
        .collect();
    let log_weights: Vec<f64> = (0..windows.len())
        .map(|i| {
            let sym = windows.symbols(i);
            f_pos.iter().map(|&p| pot.at_symbol(sym[p])).sum()
        })
        .collect();
    let ctx = BowenContext::new(sys, f.clone(), crate::shift_systems::OrbitMetric::Sup)?;
    let cloud = ConfigCloud::new(&ctx, &windows);
    let all: Vec<usize> = (0..windows.len()).collect();
    let adj = Adjacency::build(&cloud, &all, snap(epsilon));
    if mode == CountMode::Exact && adj.len() <= caps.exact.min(EXACT_THRESHOLD) {
        let (v, _) = packing::exact_max_weight_independent(&adj, &log_weights)?;
        Ok((v, true))
    } else {
        Ok((packing::greedy_max_weight_separated(&adj, &log_weights).0, false))
    }
}

/// `max_E log Σ_{a∈E} e^{w_a}` over ε-separated `E ⊂ A`: exact on lines and small alphabets.
fn site_max_weight(alphabet: &Alphabet, log_w: &[f64], epsilon: f64) -> Result<f64> {
    let eps = snap(epsilon);
    if let Some(pts) = alphabet.line_points() {
        // weighted interval scheduling over sorted points
        let mut best = vec![f64::NEG_INFINITY; pts.len() + 1];
        let mut prev = 0usize;
        for i in 0..pts.len() {
            while prev < i && pts[i] - pts[prev] > eps {
                prev += 1;
            }
            // points 0..prev are separated from i
            let take = if prev == 0 { log_w[i] } else { log_sum_exp(&[best[prev], log_w[i]]) };
            best[i + 1] = best[i].max(take);
        }
        return Ok(best[pts.len()]);
    }
    if alphabet.len() > GENERIC_SITE_LIMIT {
        return Err(Error::UnsupportedMetric(format!(
            "weighted per-site packing of a {:?} alphabet with {} points",
            alphabet.kind(),
            alphabet.len()
        )));
    }
    let all: Vec<usize> = (0..alphabet.len()).collect();
    let adj = Adjacency::build(alphabet, &all, eps);
    if adj.len() <= EXACT_THRESHOLD {
        return Ok(packing::exact_max_weight_independent(&adj, log_w)?.0);
    }
    Ok(packing::greedy_max_weight_separated(&adj, log_w).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureRow {
    pub epsilon: f64,
    pub n: usize,
    pub folner_size: usize,
    pub log_pressure: f64,
    /// `log_pressure / |F_n|`.
    pub normalized: f64,
    pub method: crate::counting::CurveMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub potential_label: String,
    /// Whether the potential was multiplied by `log(1/ε)` at each scale.
    pub rescaled: bool,
    pub rows: Vec<PressureRow>,
    pub tails: Vec<EpsTail>,
}

pub const PRESSURE_CSV_HEADER: &str = "epsilon,n,folner_size,log_pressure,normalized,method";

impl PressureCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(PRESSURE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{},{},{:.16e},{:.16e},{}\n",
                r.epsilon,
                r.n,
                r.folner_size,
                r.log_pressure,
                r.normalized,
                r.method.as_str()
            ));
        }
        out
    }

    fn from_entropy(curve: &EntropyCurve, label: String, rescaled: bool) -> Self {
        let rows = curve
            .rows
            .iter()
            .map(|r| PressureRow {
                epsilon: r.epsilon,
                n: r.n,
                folner_size: r.folner_size,
                log_pressure: r.log_separated,
                normalized: r.normalized_separated(),
                method: r.method,
            })
            .collect();
        Self {
            potential_label: label,
            rescaled,
            rows,
            tails: curve.tails.clone(),
        }
    }
}

/// Pressure rows on the `(ε, n)` grid. With `rescale`, the potential at scale `ε` is
/// `f·log(1/ε)`, as in the definition of the pressure mean dimension.
pub fn pressure_curve(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    pot: &Potential,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
    rescale: bool,
) -> Result<PressureCurve> {
    pot.validate_for(sys)?;
    let label = pot.label();
    let none = Constraints::new();
    let at_scale = |eps: f64| if rescale { pot.scaled((1.0 / eps).ln()) } else { pot.clone() };
    if pot.is_zero() {
        let site = |_: &ScaleTable, _: usize| None;
        let curve = curve_engine(sys, schedule, eps_grid, n_grid, opts, &none, &site, &label)?;
        return Ok(PressureCurve::from_entropy(&curve, label, rescale));
    }
    let alphabet = sys.alphabet();
    let site = |table: &ScaleTable, _: usize| -> Option<f64> {
        let p = at_scale(table.epsilon);
        match p.phi() {
            None => Some(table.log_site[0] + p.c()),
            Some(phi) => site_max_weight(alphabet, phi, table.epsilon).ok().map(|w| p.c() + w),
        }
    };
    let mut curve = curve_engine(sys, schedule, eps_grid, n_grid, opts, &none, &site, &label)?;
    // enumerated cells replace the closed form where the window fits
    let sets: Vec<FolnerSet> = n_grid.iter().map(|&n| schedule.set(n)).collect::<Result<_>>()?;
    let enumerated: Vec<Option<(f64, bool)>> = curve
        .rows
        .par_iter()
        .map(|row| {
            let k = n_grid.iter().position(|&n| n == row.n).expect("row from the grid");
            let f = &sets[k];
            let sites = dilation_size(f, sys.window_radius()) as f64;
            if opts.force_closed_form || (alphabet.len() as f64).powf(sites) > opts.caps.pairwise as f64 {
                return Ok(None);
            }
            pressure_count(sys, f, &at_scale(row.epsilon), row.epsilon, opts.mode, &opts.caps).map(Some)
        })
        .collect::<Result<_>>()?;
    for (row, e) in curve.rows.iter_mut().zip(enumerated) {
        if let Some((v, exact)) = e {
            row.log_separated = v;
            row.method = if exact {
                crate::counting::CurveMethod::Exact
            } else {
                crate::counting::CurveMethod::Greedy
            };
        }
    }
    let curve = EntropyCurve::from_rows(curve.label.clone(), curve.rows, opts.tail_fraction);
    Ok(PressureCurve::from_entropy(&curve, label, rescale))
}

/// Pressure mean dimension: rescale by `log(1/ε)`, take the n-tail, then the ε-window.
pub fn pressure_mdim(
    sys: &ShiftSystem,
    schedule: &FolnerSchedule,
    pot: &Potential,
    eps_grid: &[f64],
    n_grid: &[usize],
    opts: &CurveOptions,
) -> Result<DimensionEstimate> {
    pressure_mdim_from_curve(&pressure_curve(sys, schedule, pot, eps_grid, n_grid, opts, true)?)
}

/// [`pressure_mdim`] on an already rescaled curve.
pub fn pressure_mdim_from_curve(curve: &PressureCurve) -> Result<DimensionEstimate> {
    if !curve.rescaled {
        return Err(Error::InvalidParameter("pressure mdim needs a curve rescaled by log(1/eps)".into()));
    }
    let mut est = estimate_from_tails(&curve.tails, 1.0, 1.0 / 3.0)?;
    est.diagnostics
        .push("potential rescaled by log(1/eps) before counting; n-tail taken before the eps-window".into());
    Ok(est)
}

/// Max and min of the normalized pressure over the largest n at one scale.
pub fn pressure_tail(rows: &[PressureRow], fraction: f64) -> Option<(f64, f64)> {
    if rows.is_empty() {
        return None;
    }
    let (lo, hi) = tail_window(rows.len(), fraction);
    let v = rows[lo..hi].iter().map(|r| r.normalized);
    Some((v.clone().fold(f64::NEG_INFINITY, f64::max), v.fold(f64::INFINITY, f64::min)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{entropy_curve_with, Caps};
    use crate::dimensions::mdim_estimate;
    use crate::group_actions::{folner_boxes, GroupElement, GroupSpec};
    use crate::metric_spaces::geometric_grid;
    use crate::shift_systems::{window_configurations, WeightFunction};
    use proptest::prelude::*;

    fn z() -> GroupSpec {
        GroupSpec::new(1).unwrap()
    }

    fn net(k: usize, radius: u64) -> ShiftSystem {
        ShiftSystem::with_window_radius(Alphabet::unit_interval_net(k).unwrap(), z(), WeightFunction::default(), 0, radius).unwrap()
    }

    #[test]
    fn birkhoff_examples() {
        let sys = net(5, 1);
        let f = folner_boxes(&z(), 2).unwrap();
        let x = Configuration::from_support(1, [(GroupElement::scalar(0), 2), (GroupElement::scalar(1), 1)]).unwrap();
        let phi: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        assert!((birkhoff_sum(&sys, &f, &Potential::coordinate(phi).unwrap(), &x).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(birkhoff_sum(&sys, &f, &Potential::zero(), &x).unwrap(), 0.0);
        assert_eq!(birkhoff_sum(&sys, &f, &Potential::constant(1.5).unwrap(), &x).unwrap(), 3.0);
    }

    #[test]
    fn potential_json() {
        let p: Potential = serde_json::from_str(r#"{"kind":"sum","c":0.5,"phi":[0.0,1.0]}"#).unwrap();
        assert_eq!(p.at_symbol(1), 1.5);
        assert!(serde_json::from_str::<Potential>(r#"{"kind":"coordinate"}"#).is_err());
        let back: Potential = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn zero_potential_is_separated_count() {
        let sys = net(3, 1);
        let f = folner_boxes(&z(), 2).unwrap();
        let (v, _) = pressure_count(&sys, &f, &Potential::zero(), 0.3, CountMode::Greedy, &Caps::default()).unwrap();
        let s = crate::counting::count_window(&sys, &f, 0.3, CountMode::Greedy).unwrap().separated;
        assert!((v - (s as f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn constant_shift_is_exact() {
        let sys = net(3, 1);
        for n in [1, 2, 3] {
            let f = folner_boxes(&z(), n).unwrap();
            let phi = vec![0.1, -0.4, 0.7];
            let base = Potential::coordinate(phi).unwrap();
            for c in [-2.0, 0.5, 3.0] {
                for mode in [CountMode::Exact, CountMode::Greedy] {
                    let (a, _) = pressure_count(&sys, &f, &base, 0.2, mode, &Caps::default()).unwrap();
                    let (b, _) = pressure_count(&sys, &f, &base.plus(c), 0.2, mode, &Caps::default()).unwrap();
                    assert!((b - (a + c * f.len() as f64)).abs() <= 1e-12, "n={n} c={c}");
                }
            }
        }
    }

    /// Exhaustive over all separated subsets.
    fn oracle(sys: &ShiftSystem, f: &FolnerSet, pot: &Potential, eps: f64) -> f64 {
        let net: Vec<usize> = (0..sys.alphabet().len()).collect();
        let w = window_configurations(sys, &net, f).unwrap();
        let ctx = BowenContext::new(sys, f.clone(), crate::shift_systems::OrbitMetric::Sup).unwrap();
        let configs: Vec<Configuration> = w.iter().collect();
        let weights: Vec<f64> = configs.iter().map(|x| birkhoff_sum(sys, f, pot, x).unwrap().exp()).collect();
        let k = configs.len();
        assert!(k <= 10);
        let mut best = 0.0f64;
        for mask in 1u32..(1 << k) {
            let members: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let separated = members.iter().all(|&i| {
                members
                    .iter()
                    .all(|&j| i == j || crate::shift_systems::bowen_distance(&ctx, &configs[i], &configs[j]).unwrap() > snap(eps))
            });
            if separated {
                best = best.max(members.iter().map(|&i| weights[i]).sum());
            }
        }
        best.ln()
    }

    proptest! {
        #[test]
        fn exact_pressure_matches_oracle_and_prop_properties(
            phi in proptest::collection::vec(-2.0f64..2.0, 3),
            psi in proptest::collection::vec(-2.0f64..2.0, 3),
            eps in 0.05f64..1.5,
            p in 0.0f64..1.0,
        ) {
            // 3 symbols, window {0, 1}: 9 configurations
            let sys = net(3, 0);
            let f = folner_boxes(&z(), 2).unwrap();
            let caps = Caps::default();
            let fp = Potential::coordinate(phi.clone()).unwrap();
            let hp = Potential::coordinate(psi.clone()).unwrap();
            let lp = |pot: &Potential| pressure_count(&sys, &f, pot, eps, CountMode::Exact, &caps).unwrap().0;
            let (a, b) = (lp(&fp), lp(&hp));
            prop_assert!((a - oracle(&sys, &f, &fp, eps)).abs() < 1e-9);
            let max_diff = phi.iter().zip(&psi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!((a - b).abs() <= f.len() as f64 * max_diff + 1e-12);
            let upper: Vec<f64> = phi.iter().zip(&psi).map(|(x, y)| x.max(*y)).collect();
            prop_assert!(a <= lp(&Potential::coordinate(upper).unwrap()) + 1e-12);
            let mix: Vec<f64> = phi.iter().zip(&psi).map(|(x, y)| p * x + (1.0 - p) * y).collect();
            prop_assert!(lp(&Potential::coordinate(mix).unwrap()) <= p * a + (1.0 - p) * b + 1e-12);
        }
    }

    #[test]
    fn line_dp_matches_brute_force() {
        let a = Alphabet::abs1d("pts", vec![0.0, 0.1, 0.15, 0.4, 0.45, 0.9]).unwrap();
        let w: [f64; 6] = [0.3, -1.0, 2.0, 0.1, 0.5, -0.2];
        for eps in [0.04, 0.08, 0.2, 0.5] {
            let mut best = f64::NEG_INFINITY;
            for mask in 1u32..64 {
                let m: Vec<usize> = (0..6).filter(|&i| mask >> i & 1 == 1).collect();
                let ok = m.windows(2).all(|p| a.dist(p[0], p[1]) > snap(eps));
                if ok {
                    best = best.max(m.iter().map(|&i| w[i].exp()).sum::<f64>().ln());
                }
            }
            assert!((site_max_weight(&a, &w, eps).unwrap() - best).abs() < 1e-12, "eps={eps}");
        }
    }

    #[test]
    fn zero_potential_rows_equal_entropy_rows() {
        let grid = geometric_grid(0.1, 0.5, 6);
        let sys = ShiftSystem::new(Alphabet::unit_interval_net(1281).unwrap(), z(), WeightFunction::default(), 0, *grid.last().unwrap()).unwrap();
        let sched = FolnerSchedule::boxes(z());
        let opts = CurveOptions::default();
        let n_grid = [16, 64, 256];
        let ent = entropy_curve_with(&sys, &sched, &grid, &n_grid, &opts, &Constraints::new()).unwrap();
        let pc = pressure_curve(&sys, &sched, &Potential::zero(), &grid, &n_grid, &opts, true).unwrap();
        for (e, p) in ent.rows.iter().zip(&pc.rows) {
            assert_eq!(e.log_separated, p.log_pressure);
        }
        let plain = mdim_estimate(&ent, 1.0).unwrap();
        assert_eq!(pressure_mdim(&sys, &sched, &Potential::zero(), &grid, &n_grid, &opts).unwrap().upper, plain.upper);
        let c = 0.3;
        let shifted = pressure_mdim(&sys, &sched, &Potential::constant(c).unwrap(), &grid, &n_grid, &opts).unwrap();
        assert!((shifted.upper - (plain.upper + c)).abs() < 1e-9);
        // ‖f‖ bound
        let phi: Vec<f64> = (0..1281).map(|i| 0.4 * (i as f64 / 1280.0) - 0.2).collect();
        let pot = Potential::coordinate(phi).unwrap();
        let b = pot.sup_norm(1281);
        let est = pressure_mdim(&sys, &sched, &pot, &grid, &n_grid, &opts).unwrap();
        assert!(est.upper >= plain.upper - b - 0.1 && est.upper <= plain.upper + b + 0.1);
    }
}
