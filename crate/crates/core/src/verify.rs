//! Named check suites reproducing the reference examples, inequality chains and oracle
//! equivalences at desk scale. Every check is deterministic; the serialized report is the
//! reproducibility payload.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counting::{closed_form_bounds, count_window, entropy_curve_with, Caps, CurveOptions};
use crate::dimensions::{entdim_estimate, mdim_estimate, power_rule_experiment, product_experiment};
use crate::error::{Error, Result};
use crate::group_actions::{folner_boxes, FolnerSchedule, GroupElement, GroupSpec};
use crate::measures::{
    exhaustive_mass_cover, greedy_mass_cover, katok_at, katok_entropy, measure_mdim_along_family, ConvexCombination,
    MeasureSpec,
};
use crate::metric_spaces::{
    box_dimension, entdim_k0, generate_entdim_set, geometric_grid, separated_number, spanning_number, Alphabet, CountMode,
};
use crate::packing::{self, oracle, snap, Adjacency};
use crate::pressure::{pressure_count, pressure_mdim, Potential};
use crate::rate_distortion::{
    binary_hamming_rate, mutual_information, rate_at_distortion, rd_inequality_suite, BaOptions, JointDistribution,
    RDProblem,
};
use crate::shift_systems::{Configuration, Constraints, OrbitMetric, ShiftSystem, WeightFunction};

const SEED: u64 = 0x6d64_696d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PaperExamples,
    Inequalities,
    Oracles,
    All,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::PaperExamples => "paper-examples",
            Suite::Inequalities => "inequalities",
            Suite::Oracles => "oracles",
            Suite::All => "all",
        }
    }

    fn includes(&self, group: Group) -> bool {
        match self {
            Suite::All => true,
            Suite::PaperExamples => group == Group::Examples,
            Suite::Inequalities => group == Group::Inequalities,
            Suite::Oracles => group == Group::Oracles,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-examples" => Ok(Suite::PaperExamples),
            "inequalities" => Ok(Suite::Inequalities),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite '{other}' (expected paper-examples, inequalities, oracles or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Examples,
    Inequalities,
    Oracles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|measured − expected| ≤ tolerance`.
    Within,
    /// `measured ≥ expected − tolerance`.
    AtLeast,
    /// `measured ≤ expected + tolerance`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub comparison: Comparison,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(criterion: u32, name: impl Into<String>, comparison: Comparison, expected: f64, tolerance: f64, measured: f64) -> Self {
        let passed = match comparison {
            Comparison::Within => (measured - expected).abs() <= tolerance,
            Comparison::AtLeast => measured >= expected - tolerance,
            Comparison::AtMost => measured <= expected + tolerance,
        };
        Self {
            criterion,
            name: name.into(),
            comparison,
            expected,
            measured,
            tolerance,
            passed: passed && measured.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub tolerance_scale: f64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Checks grouped by criterion, in criterion order.
    pub fn by_criterion(&self) -> Vec<(u32, Vec<&Check>)> {
        let mut ids: Vec<u32> = self.checks.iter().map(|c| c.criterion).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|id| (id, self.checks.iter().filter(|c| c.criterion == id).collect()))
            .collect()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<4} {:<58} {:>9} {:>14} {:>14} {:>10}  result",
            "crit", "check", "cmp", "expected", "measured", "tolerance"
        )?;
        for c in &self.checks {
            let cmp = match c.comparison {
                Comparison::Within => "within",
                Comparison::AtLeast => "at-least",
                Comparison::AtMost => "at-most",
            };
            writeln!(
                f,
                "{:<4} {:<58} {:>9} {:>14.6e} {:>14.6e} {:>10.2e}  {}",
                c.criterion,
                c.name,
                cmp,
                c.expected,
                c.measured,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        let failed = self.failures().len();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Runs a suite. `tolerance_scale` multiplies every tolerance.
pub fn run_suite(suite: Suite, tolerance_scale: f64) -> Result<VerifyReport> {
    run_suite_timed(suite, tolerance_scale).map(|(report, _)| report)
}

/// [`run_suite`] plus the wall time spent per criterion. A step feeding several criteria
/// counts in full towards each. Timings are kept out of the report so it stays reproducible.
pub fn run_suite_timed(suite: Suite, tolerance_scale: f64) -> Result<(VerifyReport, BTreeMap<u32, Duration>)> {
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance scale must be positive, got {tolerance_scale}"
        )));
    }
    type Step = fn(&mut Checks) -> Result<()>;
    let steps: [(Group, Step); 15] = [
        (Group::Examples, harmonic_box_dimension),
        (Group::Examples, interval_net_mdim),
        (Group::Examples, harmonic_shift_mdim),
        (Group::Examples, power_rule),
        (Group::Examples, self_product),
        (Group::Examples, entropy_dimension),
        (Group::Examples, katok_lebesgue),
        (Group::Examples, pressure_shift),
        (Group::Inequalities, counting_chain),
        (Group::Inequalities, katok_below_spanning),
        (Group::Inequalities, rd_chain),
        (Group::Oracles, binary_hamming),
        (Group::Oracles, mutual_information_checks),
        (Group::Oracles, pressure_exactness),
        (Group::Oracles, oracle_equivalence),
    ];
    let mut checks = Checks {
        scale: tolerance_scale,
        out: Vec::new(),
    };
    let mut timings: BTreeMap<u32, Duration> = BTreeMap::new();
    for (group, step) in steps {
        if suite.includes(group) {
            let first = checks.out.len();
            let start = Instant::now();
            step(&mut checks)?;
            let spent = start.elapsed();
            let mut ids: Vec<u32> = checks.out[first..].iter().map(|c| c.criterion).collect();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                *timings.entry(id).or_default() += spent;
            }
        }
    }
    let mut out = checks.out;
    // stable: keeps the within-criterion order
    out.sort_by_key(|c| c.criterion);
    let report = VerifyReport {
        suite,
        tolerance_scale,
        checks: out,
    };
    Ok((report, timings))
}

struct Checks {
    scale: f64,
    out: Vec<Check>,
}

impl Checks {
    fn within(&mut self, criterion: u32, name: impl Into<String>, expected: f64, tol: f64, measured: f64) {
        self.out
            .push(Check::new(criterion, name, Comparison::Within, expected, tol * self.scale, measured));
    }

    fn at_least(&mut self, criterion: u32, name: impl Into<String>, bound: f64, tol: f64, measured: f64) {
        self.out
            .push(Check::new(criterion, name, Comparison::AtLeast, bound, tol * self.scale, measured));
    }

    fn at_most(&mut self, criterion: u32, name: impl Into<String>, bound: f64, tol: f64, measured: f64) {
        self.out
            .push(Check::new(criterion, name, Comparison::AtMost, bound, tol * self.scale, measured));
    }

    fn zero(&mut self, criterion: u32, name: impl Into<String>, violations: usize) {
        self.within(criterion, name, 0.0, 0.0, violations as f64);
    }
}

fn z() -> GroupSpec {
    GroupSpec::new(1).expect("rank 1")
}

/// `[0,1]` net whose resolution is a quarter of the smallest scale.
fn interval_net_system(grid: &[f64]) -> Result<ShiftSystem> {
    let emin = *grid.last().expect("non-empty grid");
    let k = (4.0 / emin).ceil() as usize + 1;
    ShiftSystem::new(Alphabet::unit_interval_net(k)?, z(), WeightFunction::default(), 0, emin)
}

fn harmonic_box_dimension(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.1, 10f64.powf(-1.0 / 3.0), 13);
    let b = box_dimension(&Alphabet::harmonic(100_000)?, &grid)?;
    c.within(1, "harmonic set box dimension, upper", 0.5, 0.05, b.upper_slope);
    c.within(1, "harmonic set box dimension, lower", 0.5, 0.05, b.lower_slope);
    Ok(())
}

fn interval_net_mdim(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.1, 0.5, 9);
    let sys = interval_net_system(&grid)?;
    let opts = CurveOptions {
        mode: CountMode::Exact,
        ..CurveOptions::default()
    };
    let curve = entropy_curve_with(&sys, &FolnerSchedule::boxes(z()), &grid, &[64, 256, 1024, 4096], &opts, &Constraints::new())?;
    let est = mdim_estimate(&curve, 1.0)?;
    c.within(2, "[0,1]-net full shift mdim, upper", 1.0, 0.1, est.upper);
    c.within(2, "[0,1]-net full shift mdim, lower", 1.0, 0.1, est.lower);
    // enumerated counts at n <= 3 must sit between the closed-form bounds; base 0.25 keeps
    // the window small enough to enumerate while meeting the tail condition
    let coarse = ShiftSystem::new(Alphabet::unit_interval_net(3)?, z(), WeightFunction::geometric(0.25)?, 0, 0.5)?;
    let mut violations = 0;
    for n in 1..=3 {
        let f = folner_boxes(&z(), n)?;
        for eps in [0.5, 0.7, 0.9] {
            let w = count_window(&coarse, &f, eps, CountMode::Greedy)?;
            let b = closed_form_bounds(&coarse, &f, coarse.window(), eps)?;
            let per_site = |v: usize| (v as f64).ln() / n as f64;
            if per_site(w.separated) < b.refined_lower - 1e-12 || per_site(w.spanning) > b.upper + 1e-12 {
                violations += 1;
            }
        }
    }
    c.zero(2, "coarse-net enumerated counts (n <= 3) outside closed-form bounds", violations);
    Ok(())
}

fn harmonic_shift_mdim(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(1e-3, 10f64.powf(-1.0 / 3.0), 10);
    let sys = ShiftSystem::new(Alphabet::harmonic(1_000_000)?, z(), WeightFunction::default(), 0, *grid.last().expect("grid"))?;
    let curve = entropy_curve_with(
        &sys,
        &FolnerSchedule::boxes(z()),
        &grid,
        &[64, 256, 1024, 4096],
        &CurveOptions::default(),
        &Constraints::new(),
    )?;
    let est = mdim_estimate(&curve, 1.0)?;
    c.within(3, "harmonic-alphabet full shift mdim, upper", 0.5, 0.07, est.upper);
    c.within(3, "harmonic-alphabet full shift mdim, lower", 0.5, 0.07, est.lower);
    Ok(())
}

fn power_rule(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.1, 0.5, 9);
    let sys = interval_net_system(&grid)?;
    for (m, tol) in [(2usize, 0.2), (3, 0.36)] {
        let r = power_rule_experiment(&sys, m, &grid, &[64, 256, 1024, 4096], &CurveOptions::default())?;
        c.within(4, format!("power rule ratio sub/full, m = {m}"), m as f64, tol, r.ratio);
    }
    Ok(())
}

fn self_product(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.1, 0.5, 7);
    let sys = interval_net_system(&grid)?;
    let r = product_experiment(&sys, &FolnerSchedule::boxes(z()), &grid, &[64, 256, 1024], &CurveOptions::default())?;
    c.within(5, "squared-system mdim vs twice single", 2.0 * r.single.upper, 0.2, r.squared.upper);
    Ok(())
}

fn entropy_dimension(c: &mut Checks) -> Result<()> {
    let (s, alpha, k_max) = (0.5, 1.0, 12);
    let k0 = entdim_k0(s, alpha)?.max(2);
    let set = generate_entdim_set(s, alpha, k0, k_max, 1_000_000)?;
    // log(1/ε) from 60 to 143, inside the faithful window of the construction
    let (l_min, l_max, count) = (60.0f64, 143.0f64, 12);
    let grid: Vec<f64> = (0..count)
        .map(|i| (-(l_min * (l_max / l_min).powf(i as f64 / (count - 1) as f64))).exp())
        .collect();
    let sys = ShiftSystem::new(set, z(), WeightFunction::default(), 0, *grid.last().expect("grid"))?;
    let curve = entropy_curve_with(
        &sys,
        &FolnerSchedule::boxes(z()),
        &grid,
        &[4096, 16384, 65536, 262144],
        &CurveOptions::default(),
        &Constraints::new(),
    )?;
    let s_grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let ent = entdim_estimate(&curve, &s_grid)?;
    c.at_most(6, "entropy dimension transition, lower end <= 0.6", 0.6, 0.0, ent.transition_lo);
    c.at_least(6, "entropy dimension transition, upper end >= 0.4", 0.4, 0.0, ent.transition_hi);
    c.at_most(6, "plain mdim of the entdim-set shift", 0.1, 0.0, mdim_estimate(&curve, 1.0)?.upper);
    c.within(7, "max tail ratio log N / (log 1/eps)^0.5", 1.0, 0.15, mdim_estimate(&curve, s)?.upper);
    Ok(())
}

fn katok_lebesgue(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.02, 0.4, 7);
    let emin = *grid.last().expect("grid");
    let k = (4.0 / emin).ceil() as usize + 1;
    let sched = FolnerSchedule::boxes(z());
    let n_grid = [1024, 4096, 16384];
    let delta = 0.05;
    let mu = MeasureSpec::uniform();
    for m in [1usize, 2] {
        let sys = ShiftSystem::new(Alphabet::unit_cube_net(m, k)?, z(), WeightFunction::default(), 0, emin)?;
        for &eps in &grid {
            let est = katok_entropy(&mu, &sys, &sched, &n_grid, eps, delta, OrbitMetric::Sup)?;
            let bound = m as f64 * (1.0 / (2.0 * eps)).ln() - 0.5;
            c.at_least(8, format!("Katok lower bound, m = {m}, eps = {eps:.3e}"), bound, 0.0, est.tail(1.0 / 3.0).tail_min);
        }
        let family: Vec<(f64, ConvexCombination)> =
            grid.iter().map(|&e| (e, ConvexCombination::single(mu.clone()))).collect();
        let d = measure_mdim_along_family(&family, &sys, &sched, &n_grid, delta, OrbitMetric::Sup, &Caps::default())?;
        c.within(8, format!("quantized Lebesgue family ratio, m = {m}, upper"), m as f64, 0.15, d.upper);
        c.within(8, format!("quantized Lebesgue family ratio, m = {m}, lower"), m as f64, 0.15, d.lower);
    }
    Ok(())
}

fn pressure_shift(c: &mut Checks) -> Result<()> {
    let grid = geometric_grid(0.1, 0.5, 6);
    let sys = interval_net_system(&grid)?;
    let sched = FolnerSchedule::boxes(z());
    let n_grid = [64, 256, 1024];
    let opts = CurveOptions::default();
    let plain = mdim_estimate(&entropy_curve_with(&sys, &sched, &grid, &n_grid, &opts, &Constraints::new())?, 1.0)?;
    for k in [-0.5, 0.5, 2.0] {
        let p = pressure_mdim(&sys, &sched, &Potential::constant(k)?, &grid, &n_grid, &opts)?;
        c.within(12, format!("pressure mdim of f = {k} vs mdim + {k}"), plain.upper + k, 0.1, p.upper);
    }
    Ok(())
}

/// Small systems with enumerable windows, shared by the inequality and exactness checks.
struct Fixture {
    name: &'static str,
    sys: ShiftSystem,
    n_grid: Vec<usize>,
    measures: Vec<(&'static str, MeasureSpec)>,
    phi: Vec<f64>,
}

fn fixtures() -> Result<Vec<Fixture>> {
    let three = ShiftSystem::with_window_radius(
        Alphabet::abs1d("three points", vec![0.0, 0.5, 1.0])?,
        z(),
        WeightFunction::default(),
        0,
        1,
    )?;
    let periodic = Configuration::from_support(
        1,
        (0..6).map(|i| (GroupElement::scalar(i - 2), (i as usize) % 3)),
    )?;
    let orbit = MeasureSpec::empirical_orbit(&three, &periodic, &folner_boxes(&z(), 3)?)?;
    let plane = GroupSpec::new(2)?;
    let bits = ShiftSystem::with_window_radius(
        Alphabet::abs1d("two points", vec![0.0, 1.0])?,
        plane,
        WeightFunction::default(),
        0,
        0,
    )?;
    Ok(vec![
        Fixture {
            name: "three-point shift on Z",
            sys: three,
            n_grid: vec![1, 2, 3],
            measures: vec![
                ("uniform", MeasureSpec::uniform()),
                ("product", MeasureSpec::product(vec![0.6, 0.3, 0.1])?),
                ("dirac", MeasureSpec::dirac(Configuration::constant(1))),
                ("empirical", orbit),
            ],
            phi: vec![0.3, -0.8, 1.1],
        },
        Fixture {
            name: "two-point shift on Z^2",
            sys: bits,
            n_grid: vec![1, 2],
            measures: vec![
                ("uniform", MeasureSpec::uniform()),
                ("product", MeasureSpec::product(vec![0.7, 0.3])?),
            ],
            phi: vec![0.5, -0.25],
        },
    ])
}

fn random_cloud(rng: &mut ChaCha8Rng, max_points: usize) -> Result<Alphabet> {
    let n = rng.gen_range(3..=max_points);
    let points = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    Alphabet::supmd("random cloud", points)
}

fn counting_chain(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    for _ in 0..200 {
        let a = random_cloud(&mut rng, 16)?;
        let eps = rng.gen_range(0.05..0.5);
        let r = spanning_number(&a, eps, CountMode::Exact)?;
        let s = separated_number(&a, eps, CountMode::Exact)?;
        let r_half = spanning_number(&a, eps / 2.0, CountMode::Exact)?;
        if !(r.exact && s.exact && r_half.exact) || r.value > s.value || s.value > r_half.value {
            violations += 1;
        }
    }
    c.zero(9, "r(eps) <= s(eps) <= r(eps/2) on 200 random clouds (exact)", violations);
    Ok(())
}

fn katok_below_spanning(c: &mut Checks) -> Result<()> {
    let eps_grid = [0.2, 0.4, 0.7];
    let opts = CurveOptions {
        mode: CountMode::Exact,
        ..CurveOptions::default()
    };
    let caps = Caps::default();
    for fx in fixtures()? {
        let sched = FolnerSchedule::boxes(*fx.sys.group());
        let curve = entropy_curve_with(&fx.sys, &sched, &eps_grid, &fx.n_grid, &opts, &Constraints::new())?;
        let mut violations = 0;
        for (_, mu) in &fx.measures {
            for &n in &fx.n_grid {
                let f = sched.set(n)?;
                for &eps in &eps_grid {
                    let row = curve.row(eps, n).expect("grid cell");
                    for delta in [0.2, 0.05] {
                        let k = katok_at(mu, &fx.sys, &f, eps, delta, OrbitMetric::Sup, &caps)?;
                        if k.normalized > row.normalized_spanning() + 1e-12 {
                            violations += 1;
                        }
                    }
                }
            }
        }
        c.zero(9, format!("Katok above log spanning, {}", fx.name), violations);
    }
    Ok(())
}

fn rd_chain(c: &mut Checks) -> Result<()> {
    let opts = BaOptions::default();
    let eps_grid = [0.15, 0.3];
    let (mut holder, mut katok, mut rows) = (0, 0, 0);
    for fx in fixtures()? {
        let f = folner_boxes(fx.sys.group(), 1)?;
        for (_, mu) in &fx.measures {
            let report = rd_inequality_suite(mu, &fx.sys, &f, &eps_grid, &opts)?;
            for r in &report.rows {
                rows += 1;
                holder += usize::from(!(r.l1_le_l2 && r.l2_le_l4 && r.l2_le_linf));
                katok += usize::from(!r.linf_le_katok);
            }
        }
    }
    c.zero(9, format!("R_L1(2eps) <= R_L2(2eps) <= R_Linf(eps) violations over {rows} cells"), holder);
    c.zero(9, format!("R_Linf(eps) > Katok(eps) + 1e-6 over {rows} cells"), katok);
    Ok(())
}

fn binary_hamming(c: &mut Checks) -> Result<()> {
    let prob = RDProblem::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]])?;
    for d in [0.05, 0.1, 0.2, 0.3, 0.4] {
        let r = rate_at_distortion(&prob, d, &BaOptions::default())?;
        c.within(10, format!("Blahut-Arimoto binary Hamming rate at D = {d}"), binary_hamming_rate(d), 1e-4, r.rate);
    }
    Ok(())
}

fn mutual_information_checks(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (kx, ky) = (rng.gen_range(2..6), rng.gen_range(2..6));
        let px = random_probability(&mut rng, kx);
        let py = random_probability(&mut rng, ky);
        worst = worst.max(mutual_information(&JointDistribution::product(&px, &py)?).abs());
    }
    c.within(11, "max |I| over 50 product joints", 0.0, 1e-12, worst);
    let j = JointDistribution::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]])?;
    let direct = 0.8 * (0.4f64 / 0.25).ln() + 0.2 * (0.1f64 / 0.25).ln();
    c.within(11, "I of [[0.4,0.1],[0.1,0.4]]", direct, 1e-6, mutual_information(&j));
    Ok(())
}

fn random_probability(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn pressure_exactness(c: &mut Checks) -> Result<()> {
    let caps = Caps::default();
    let mut worst = 0.0f64;
    for fx in fixtures()? {
        let sched = FolnerSchedule::boxes(*fx.sys.group());
        let bases = [Potential::coordinate(fx.phi.clone())?, Potential::sum(0.25, fx.phi.clone())?];
        for base in &bases {
            for &n in &fx.n_grid {
                let f = sched.set(n)?;
                for eps in [0.2, 0.6] {
                    for mode in [CountMode::Exact, CountMode::Greedy] {
                        let (a, _) = pressure_count(&fx.sys, &f, base, eps, mode, &caps)?;
                        for k in [-1.5, 0.7, 3.0] {
                            let (b, _) = pressure_count(&fx.sys, &f, &base.plus(k), eps, mode, &caps)?;
                            worst = worst.max((b - a - k * f.len() as f64).abs());
                        }
                    }
                }
            }
        }
    }
    c.within(12, "max |log P(f + c) - log P(f) - c|F|| over fixtures", 0.0, 1e-12, worst);
    Ok(())
}

fn oracle_equivalence(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 13);
    let (mut sep, mut span, mut weighted, mut greedy_katok, mut undercovered) = (0, 0, 0, 0, 0);
    let instances = 200;
    for _ in 0..instances {
        let a = random_cloud(&mut rng, packing::ORACLE_THRESHOLD)?;
        let eps = rng.gen_range(0.05..0.6);
        let all: Vec<usize> = (0..a.len()).collect();
        let adj = Adjacency::build(&a, &all, snap(eps));
        sep += usize::from(packing::exact_max_independent(&adj)?.len() != oracle::max_independent(&adj)?);
        span += usize::from(packing::exact_min_cover(&adj)?.len() != oracle::min_cover(&adj)?);
        let log_w: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lin: Vec<f64> = log_w.iter().map(|w| w.exp()).collect();
        let (v, _) = packing::exact_max_weight_independent(&adj, &log_w)?;
        let o = oracle::max_weight(&adj, &lin)?.ln();
        weighted += usize::from((v - o).abs() > 1e-9 * o.abs().max(1.0));
        // open balls, as in Katok covers
        let open = Adjacency::build(&a, &all, snap(eps).next_down());
        let masses = random_probability(&mut rng, a.len());
        for delta in [0.05, 0.2] {
            let target = 1.0 - delta;
            let centers = greedy_mass_cover(&open, &masses, target);
            greedy_katok += usize::from(centers.len() < exhaustive_mass_cover(&open, &masses, target)?);
            let covered: f64 = (0..a.len())
                .filter(|&i| centers.iter().any(|&ctr| ctr == i || a.dist(i, ctr) < snap(eps)))
                .map(|i| masses[i])
                .sum();
            undercovered += usize::from(covered < target - 1e-12);
        }
    }
    c.zero(13, format!("separated count != exhaustive on {instances} instances"), sep);
    c.zero(13, format!("spanning count != exhaustive on {instances} instances"), span);
    c.zero(13, format!("max-weight value != exhaustive on {instances} instances"), weighted);
    c.zero(13, "greedy Katok cover below exhaustive minimum", greedy_katok);
    c.zero(13, "greedy Katok cover below the mass target", undercovered);
    Ok(())
}
