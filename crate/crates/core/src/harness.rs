//! Seeded experiment sweeps with CSV/JSON output and post-run checks.
//!
//! A sweep is the cartesian product `kinds × ks × m_rules × ns`; each point
//! draws `instances` instances with seeds `base_seed + i`. Points that are
//! infeasible or too large are listed up front and skipped. Instances fan out
//! over rayon workers and are collected in seed order, so output bytes do not
//! depend on the worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{b_bound, eta_bound_max_constrained, eta_from_ceff, p_soln_lower_bound};
use crate::ensembles::{generate, EnsembleKind, EnsembleSpec};
use crate::estimators::{Estimator, EstimatorKind};
use crate::gsat::{self, gsat_solve, GsatConfig};
use crate::kv;
use crate::quantum::{p_solution, single_step_from_ceff};
use crate::sat::{format_bits, parse_dimacs, Assignment};
use crate::{Error, Result, DEFAULT_STATE_CAP};

/// How the clause count of a point is derived from `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MRule {
    Abs(u64),
    /// `m = round(μ·n²)`
    Mu(f64),
    /// `m = round(α·n)`
    Alpha(f64),
    /// The ensemble maximum.
    Max,
}

impl MRule {
    pub fn resolve(self, n: u32, k: u32, kind: EnsembleKind) -> Result<u64> {
        let nf = f64::from(n);
        Ok(match self {
            MRule::Abs(m) => m,
            MRule::Mu(mu) => (mu * nf * nf).round() as u64,
            MRule::Alpha(a) => (a * nf).round() as u64,
            MRule::Max => kind.max_clauses(n, k)?,
        })
    }
}

impl fmt::Display for MRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MRule::Abs(m) => write!(f, "abs:{m}"),
            MRule::Mu(mu) => write!(f, "mu:{mu}"),
            MRule::Alpha(a) => write!(f, "alpha:{a}"),
            MRule::Max => f.write_str("max"),
        }
    }
}

impl FromStr for MRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "max" {
            return Ok(MRule::Max);
        }
        let bad = || Error::input(format!("bad m rule `{s}` (use abs:M, mu:X, alpha:X or max)"));
        let (tag, val) = s.split_once(':').ok_or_else(bad)?;
        let positive = |v: f64| if v.is_finite() && v > 0.0 { Ok(v) } else { Err(bad()) };
        match tag {
            "abs" => val.parse().map(MRule::Abs).map_err(|_| bad()),
            "mu" => positive(val.parse().map_err(|_| bad())?).map(MRule::Mu),
            "alpha" => positive(val.parse().map_err(|_| bad())?).map(MRule::Alpha),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Gsat,
}

impl Figure {
    pub const ALL: [Figure; 7] =
        [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Gsat];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Gsat => "gsat",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|fig| fig.as_str() == s.trim())
            .ok_or_else(|| Error::input(format!("unknown figure `{s}`")))
    }
}

/// Relationship asserted over the summary after a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "check")]
pub enum Expectation {
    /// Mean `P_soln` is at least the point's lower bound wherever one exists.
    BoundHolds,
    /// `1 − P_soln` trends down in `n` within each series.
    ErrorDecreases,
    /// Mean `P_soln` lies in `[lo, hi]` for every point with this `k`.
    Band { k: u32, lo: f64, hi: f64 },
    /// Reports the `n` with `P_soln = 1` for this `k`; never fails.
    RecordExact { k: u32 },
    /// GSAT median flips fit a line in `n` with at least this `R²`.
    LinearMedian { min_r2: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub figure: Option<Figure>,
    pub ns: Vec<u32>,
    pub ks: Vec<u32>,
    pub m_rules: Vec<MRule>,
    pub kinds: Vec<EnsembleKind>,
    /// `None` picks per kind: neighborhood estimator for maximal instances,
    /// the matching ML table otherwise.
    pub estimator: Option<EstimatorKind>,
    pub instances: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    pub quantum: bool,
    pub analysis: bool,
    pub gsat: bool,
    pub gsat_max_tries: u64,
    pub gsat_max_flips: Option<u64>,
    /// Adds a non-deterministic `wall_time` column.
    pub timing: bool,
    pub state_cap: u32,
    pub expectations: Vec<Expectation>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            figure: None,
            ns: Vec::new(),
            ks: vec![3],
            m_rules: vec![MRule::Max],
            kinds: vec![EnsembleKind::MaxConstrained],
            estimator: None,
            instances: 100,
            base_seed: 0,
            output: None,
            quantum: true,
            analysis: true,
            gsat: false,
            gsat_max_tries: GsatConfig::default().max_tries,
            gsat_max_flips: None,
            timing: false,
            state_cap: 16,
            expectations: Vec::new(),
        }
    }
}

fn range(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).collect()
}

impl ExperimentConfig {
    /// Desk-scale preset for a figure. Axes beyond the state cap are
    /// truncated; maximally constrained points use few instances since every
    /// planted solution gives the same probability.
    pub fn preset(figure: Figure) -> Self {
        let base = ExperimentConfig { figure: Some(figure), ..Self::default() };
        let bounds = vec![Expectation::BoundHolds];
        match figure {
            Figure::Fig1 => ExperimentConfig {
                ns: range(6, 16),
                ks: vec![3, 4],
                instances: 3,
                expectations: vec![Expectation::BoundHolds, Expectation::ErrorDecreases],
                ..base
            },
            Figure::Fig2 => ExperimentConfig {
                ns: range(6, 16),
                ks: vec![3, 4],
                kinds: vec![EnsembleKind::MaxConstrainedBalanced],
                instances: 3,
                expectations: vec![
                    Expectation::RecordExact { k: 3 },
                    Expectation::Band { k: 4, lo: 0.35, hi: 0.65 },
                ],
                ..base
            },
            Figure::Fig3 | Figure::Fig5 => ExperimentConfig {
                ns: vec![10, 20],
                m_rules: [1.0, 2.0, 4.0, 8.0, 10.0, 20.0, 40.0, 80.0]
                    .into_iter()
                    .map(MRule::Alpha)
                    .collect(),
                kinds: vec![if figure == Figure::Fig3 {
                    EnsembleKind::RandomSoluble
                } else {
                    EnsembleKind::Balanced
                }],
                state_cap: 20,
                expectations: bounds,
                ..base
            },
            Figure::Fig4 => ExperimentConfig {
                ns: range(6, 20),
                m_rules: vec![MRule::Mu(18.0), MRule::Mu(8.0), MRule::Mu(1.0)],
                kinds: vec![EnsembleKind::RandomSoluble],
                state_cap: 20,
                expectations: bounds,
                ..base
            },
            Figure::Fig6 => ExperimentConfig {
                ns: range(6, 20),
                m_rules: vec![MRule::Mu(8.0), MRule::Mu(1.0)],
                kinds: vec![EnsembleKind::Balanced],
                state_cap: 20,
                expectations: bounds,
                ..base
            },
            Figure::Gsat => ExperimentConfig {
                ns: vec![10, 14, 18, 22, 26, 30],
                quantum: false,
                analysis: false,
                gsat: true,
                expectations: vec![Expectation::LinearMedian { min_r2: 0.9 }],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::input("instances must be at least 1"));
        }
        if self.ns.is_empty() || self.ks.is_empty() || self.m_rules.is_empty() || self.kinds.is_empty() {
            return Err(Error::input("n, k, m and kind lists must be non-empty"));
        }
        if !self.quantum && !self.gsat {
            return Err(Error::input("nothing to run: enable quantum or gsat"));
        }
        if self.analysis && !self.quantum {
            return Err(Error::input("analysis needs the quantum pass"));
        }
        self.gsat_config(0).validate()
    }

    pub fn gsat_config(&self, seed: u64) -> GsatConfig {
        GsatConfig { max_flips_per_try: self.gsat_max_flips, max_tries: self.gsat_max_tries, seed }
    }

    /// Parse `key = value` text. A `figure` key loads that preset first and
    /// the remaining keys override it.
    pub fn from_config(text: &str) -> Result<Self> {
        let entries = kv::parse(text)?;
        let mut cfg = match entries.iter().find(|e| e.key == "figure") {
            Some(e) if e.value != "custom" => Self::preset(kv::value(e)?),
            _ => Self::default(),
        };
        for e in &entries {
            match e.key.as_str() {
                "figure" => {}
                "n" => cfg.ns = parse_ns(e)?,
                "k" => cfg.ks = kv::list(e)?,
                "m" => cfg.m_rules = kv::list(e)?,
                "kind" => cfg.kinds = kv::list(e)?,
                "estimator" => {
                    cfg.estimator = match e.value.as_str() {
                        "auto" => None,
                        _ => Some(kv::value(e)?),
                    }
                }
                "instances" => cfg.instances = kv::value(e)?,
                "base_seed" => cfg.base_seed = kv::value(e)?,
                "output" => cfg.output = Some(PathBuf::from(&e.value)),
                "quantum" => cfg.quantum = kv::value(e)?,
                "analysis" => cfg.analysis = kv::value(e)?,
                "gsat" => cfg.gsat = kv::value(e)?,
                "gsat_max_tries" => cfg.gsat_max_tries = kv::value(e)?,
                "gsat_max_flips" => cfg.gsat_max_flips = Some(kv::value(e)?),
                "timing" => cfg.timing = kv::value(e)?,
                "state_cap" => cfg.state_cap = kv::value(e)?,
                other => return Err(Error::parse(e.line, format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; parses back to the same sweep.
    pub fn to_config(&self) -> String {
        fn join<T: fmt::Display>(items: &[T]) -> String {
            items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        let figure = self.figure.map_or("custom", Figure::as_str);
        let _ = writeln!(s, "figure = {figure}");
        let _ = writeln!(s, "n = {}", join(&self.ns));
        let _ = writeln!(s, "k = {}", join(&self.ks));
        let _ = writeln!(s, "m = {}", join(&self.m_rules));
        let _ = writeln!(s, "kind = {}", join(&self.kinds));
        let est = self.estimator.map_or("auto".to_string(), |e| e.to_string());
        let _ = writeln!(s, "estimator = {est}");
        let _ = writeln!(s, "instances = {}", self.instances);
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        let _ = writeln!(s, "quantum = {}", self.quantum);
        let _ = writeln!(s, "analysis = {}", self.analysis);
        let _ = writeln!(s, "gsat = {}", self.gsat);
        let _ = writeln!(s, "gsat_max_tries = {}", self.gsat_max_tries);
        if let Some(f) = self.gsat_max_flips {
            let _ = writeln!(s, "gsat_max_flips = {f}");
        }
        let _ = writeln!(s, "timing = {}", self.timing);
        let _ = writeln!(s, "state_cap = {}", self.state_cap);
        s
    }
}

/// `n` accepts a comma list whose items may be inclusive ranges `a..b`.
fn parse_ns(e: &kv::Entry) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Error::parse(e.line, format!("bad n item `{item}`"));
        match item.split_once("..") {
            Some((lo, hi)) => {
                let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
                let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

pub fn default_estimator(kind: EnsembleKind) -> EstimatorKind {
    match kind {
        EnsembleKind::MaxConstrained => EstimatorKind::MaxConstrainedEq7,
        EnsembleKind::RandomSoluble => EstimatorKind::MlRandom,
        EnsembleKind::Balanced | EnsembleKind::MaxConstrainedBalanced => EstimatorKind::MlBalanced,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    pub n: u32,
    pub k: u32,
    pub m: u64,
    pub m_rule: String,
    pub ensemble: EnsembleKind,
    pub estimator: EstimatorKind,
}

impl Point {
    fn series_key(&self) -> (u32, EnsembleKind, EstimatorKind, String) {
        (self.k, self.ensemble, self.estimator, self.m_rule.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub n: u32,
    pub k: u32,
    pub m_rule: String,
    pub ensemble: EnsembleKind,
    pub reason: String,
}

/// Feasible points in sweep order plus the skipped ones with reasons.
pub fn preflight(cfg: &ExperimentConfig) -> (Vec<Point>, Vec<SkippedPoint>) {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &kind in &cfg.kinds {
        for &k in &cfg.ks {
            for rule in &cfg.m_rules {
                for &n in &cfg.ns {
                    let estimator = cfg.estimator.unwrap_or_else(|| default_estimator(kind));
                    match check_point(cfg, n, k, *rule, kind, estimator) {
                        Ok(m) => points.push(Point {
                            n,
                            k,
                            m,
                            m_rule: rule.to_string(),
                            ensemble: kind,
                            estimator,
                        }),
                        Err(reason) => skipped.push(SkippedPoint {
                            n,
                            k,
                            m_rule: rule.to_string(),
                            ensemble: kind,
                            reason,
                        }),
                    }
                }
            }
        }
    }
    (points, skipped)
}

fn check_point(
    cfg: &ExperimentConfig,
    n: u32,
    k: u32,
    rule: MRule,
    kind: EnsembleKind,
    estimator: EstimatorKind,
) -> std::result::Result<u64, String> {
    let max = kind.max_clauses(n, k).map_err(|e| e.to_string())?;
    let m = rule.resolve(n, k, kind).map_err(|e| e.to_string())?;
    if m > max {
        return Err(format!("m = {m} exceeds the {kind} maximum {max}"));
    }
    if kind.is_maximal() && m != max {
        return Err(format!("{kind} requires m = {max}, rule gives {m}"));
    }
    if cfg.quantum && n > cfg.state_cap {
        return Err(format!("n = {n} exceeds the state-vector cap {}", cfg.state_cap));
    }
    if cfg.quantum {
        let maximal = m == max && !kind.is_balanced();
        let ok = match estimator {
            EstimatorKind::ExactOneSat => k == 1,
            EstimatorKind::MaxConstrainedEq7 => maximal,
            EstimatorKind::ComplementBased => maximal && n > 2 * k,
            EstimatorKind::MlRandom | EstimatorKind::MlBalanced => true,
        };
        if !ok {
            return Err(format!("estimator {estimator} does not apply to {kind} with n = {n}, k = {k}"));
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: u32,
    pub k: u32,
    pub m: u64,
    pub ensemble: EnsembleKind,
    pub estimator: EstimatorKind,
    pub instance_seed: u64,
    pub p_soln: Option<f64>,
    /// `(1 − |η|)²` for the planted solution.
    pub p_soln_lower_bound: Option<f64>,
    pub eta_abs: Option<f64>,
    pub gsat_steps: Option<u64>,
    pub gsat_solved: Option<bool>,
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    /// Plot abscissa: `m/n` for the clause-density sweeps, `n` otherwise.
    pub x: f64,
    #[serde(flatten)]
    pub point: Point,
    pub instances: usize,
    pub mean: Option<f64>,
    pub sem: Option<f64>,
    /// Ensemble-level lower bound on `P_soln`, when one applies.
    pub bound: Option<f64>,
    pub mean_eta_abs: Option<f64>,
    pub gsat_median_flips: Option<f64>,
    pub gsat_censored: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub skipped: Vec<SkippedPoint>,
    pub checks: Vec<CheckResult>,
}

impl ExperimentResult {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn run_instance(cfg: &ExperimentConfig, point: &Point, seed: u64) -> Result<ResultRow> {
    let start = Instant::now();
    let spec = EnsembleSpec::new(point.n, point.k, point.m, point.ensemble, seed)?;
    let inst = generate(&spec)?;
    let mut row = ResultRow {
        n: point.n,
        k: point.k,
        m: point.m,
        ensemble: point.ensemble,
        estimator: point.estimator,
        instance_seed: seed,
        p_soln: None,
        p_soln_lower_bound: None,
        eta_abs: None,
        gsat_steps: None,
        gsat_solved: None,
        wall_time: None,
    };
    if cfg.quantum {
        let est = Estimator::prepare(point.estimator, &inst)?;
        let ceff = est.ceff_table(&inst.conflict_table()?);
        let state = single_step_from_ceff(point.n, &ceff)?;
        row.p_soln = Some(p_solution(&state, &inst)?.p);
        if cfg.analysis {
            let sol = inst.planted_solution().expect("generated instances are planted");
            let eta = eta_from_ceff(point.n, sol, &ceff).norm();
            row.eta_abs = Some(eta);
            row.p_soln_lower_bound = Some(p_soln_lower_bound(eta));
        }
    }
    if cfg.gsat {
        let out = gsat_solve(&inst, &cfg.gsat_config(gsat::instance_seed(&cfg.gsat_config(0), seed)))?;
        row.gsat_steps = Some(out.flips);
        row.gsat_solved = Some(out.solved);
    }
    if cfg.timing {
        row.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(row)
}

/// Lower bound on mean `P_soln` for a point: `(1 − bound)²` with the
/// closed-form bound for the neighborhood estimator and `B` for ML tables.
pub fn point_bound(point: &Point) -> Result<Option<f64>> {
    Ok(match point.estimator {
        EstimatorKind::ExactOneSat | EstimatorKind::ComplementBased => Some(1.0),
        EstimatorKind::MaxConstrainedEq7 => {
            eta_bound_max_constrained(point.n, point.k).map(p_soln_lower_bound)
        }
        EstimatorKind::MlRandom | EstimatorKind::MlBalanced => {
            let balanced = point.estimator == EstimatorKind::MlBalanced;
            Some(b_bound(point.n, point.k, point.m, balanced)?.p_soln_lower_bound())
        }
    })
}

fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(xs: &[f64]) -> f64 {
    use statrs::statistics::{Data, Median};
    Data::new(xs.to_vec()).median()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (points, skipped) = preflight(cfg);
    for s in &skipped {
        log::warn!("skipping n={} k={} m={} {}: {}", s.n, s.k, s.m_rule, s.ensemble, s.reason);
    }
    let density_x = matches!(cfg.figure, Some(Figure::Fig3 | Figure::Fig5));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for point in &points {
        log::info!("n={} k={} m={} {} {}", point.n, point.k, point.m, point.ensemble, point.estimator);
        let seeds: Vec<u64> =
            (0..cfg.instances as u64).map(|i| cfg.base_seed.wrapping_add(i)).collect();
        let point_rows: Vec<ResultRow> =
            seeds.par_iter().map(|&s| run_instance(cfg, point, s)).collect::<Result<_>>()?;
        let ps: Vec<f64> = point_rows.iter().filter_map(|r| r.p_soln).collect();
        let etas: Vec<f64> = point_rows.iter().filter_map(|r| r.eta_abs).collect();
        let flips: Vec<f64> = point_rows.iter().filter_map(|r| r.gsat_steps.map(|s| s as f64)).collect();
        let (mean, sem) = if ps.is_empty() { (None, None) } else {
            let (m, s) = mean_sem(&ps);
            (Some(m), Some(s))
        };
        summary.push(SummaryRow {
            x: if density_x { point.m as f64 / f64::from(point.n) } else { f64::from(point.n) },
            point: point.clone(),
            instances: point_rows.len(),
            mean,
            sem,
            bound: if cfg.analysis { point_bound(point)? } else { None },
            mean_eta_abs: (!etas.is_empty()).then(|| mean_sem(&etas).0),
            gsat_median_flips: (!flips.is_empty()).then(|| median(&flips)),
            gsat_censored: cfg
                .gsat
                .then(|| point_rows.iter().filter(|r| r.gsat_solved == Some(false)).count()),
        });
        rows.extend(point_rows);
    }
    let checks = cfg.expectations.iter().map(|e| check(e, &summary)).collect();
    Ok(ExperimentResult { config: cfg.clone(), rows, summary, skipped, checks })
}

type Series<'a> = BTreeMap<(u32, EnsembleKind, EstimatorKind, String), Vec<&'a SummaryRow>>;

fn series(summary: &[SummaryRow]) -> Series<'_> {
    let mut out: Series<'_> = BTreeMap::new();
    for row in summary {
        out.entry(row.point.series_key()).or_default().push(row);
    }
    for rows in out.values_mut() {
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    out
}

/// Least-squares line `y = a + b·x`; returns `(a, b, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

/// Slack for comparing simulated probabilities with bounds.
const BOUND_TOL: f64 = 1e-9;

fn check(exp: &Expectation, summary: &[SummaryRow]) -> CheckResult {
    let mut details = Vec::new();
    let mut passed = true;
    let name = match exp {
        Expectation::BoundHolds => "bound_holds".to_string(),
        Expectation::ErrorDecreases => "error_decreases".to_string(),
        Expectation::Band { k, lo, hi } => format!("band_k{k}_{lo}_{hi}"),
        Expectation::RecordExact { k } => format!("exact_n_k{k}"),
        Expectation::LinearMedian { .. } => "linear_median".to_string(),
    };
    match *exp {
        Expectation::BoundHolds => {
            for row in summary {
                if let (Some(mean), Some(bound)) = (row.mean, row.bound) {
                    if bound > 0.0 && mean < bound - BOUND_TOL {
                        passed = false;
                        details.push(format!("n={} m={}: mean {mean:.6} < bound {bound:.6}", row.point.n, row.point.m));
                    }
                }
            }
        }
        Expectation::ErrorDecreases => {
            for ((k, ..), rows) in series(summary) {
                let pts: Vec<(f64, f64)> =
                    rows.iter().filter_map(|r| r.mean.map(|p| (r.x, 1.0 - p))).collect();
                if pts.len() < 2 {
                    continue;
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
                let (_, slope, _) = linear_fit(&xs, &ys);
                let ok = ys.iter().all(|&y| y >= -BOUND_TOL) && slope < 0.0 && ys[ys.len() - 1] < ys[0];
                passed &= ok;
                details.push(format!("k={k}: slope {slope:.3e}, first {:.3e}, last {:.3e}", ys[0], ys[ys.len() - 1]));
            }
        }
        Expectation::Band { k, lo, hi } => {
            for row in summary.iter().filter(|r| r.point.k == k) {
                if let Some(mean) = row.mean {
                    if !(lo..=hi).contains(&mean) {
                        passed = false;
                        details.push(format!("n={}: {mean:.6}", row.point.n));
                    }
                }
            }
        }
        Expectation::RecordExact { k } => {
            let exact: Vec<String> = summary
                .iter()
                .filter(|r| r.point.k == k && r.mean.is_some_and(|p| (p - 1.0).abs() < BOUND_TOL))
                .map(|r| r.point.n.to_string())
                .collect();
            details.push(format!("P = 1 at n = [{}]", exact.join(",")));
        }
        Expectation::LinearMedian { min_r2 } => {
            for ((k, ..), rows) in series(summary) {
                let pts: Vec<(f64, f64)> =
                    rows.iter().filter_map(|r| r.gsat_median_flips.map(|f| (r.x, f))).collect();
                if pts.len() < 3 {
                    continue;
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let (a, b, r2) = linear_fit(&xs, &ys);
                passed &= r2 >= min_r2;
                details.push(format!("k={k}: median ≈ {a:.3} + {b:.3}·n, R² = {r2:.4}"));
            }
        }
    }
    CheckResult { name, passed, detail: details.join("; ") }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or(String::new(), f)
}

/// Header comment lines echoing the configuration and fixed policies.
fn header(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    for line in cfg.to_config().lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "# gsat_tie_policy = {}", gsat::TIE_POLICY);
    let _ = writeln!(s, "# gsat_sideways_policy = {}", gsat::SIDEWAYS_POLICY);
    s
}

impl ExperimentResult {
    pub fn rows_csv(&self) -> String {
        let mut s = header(&self.config);
        s.push_str("n,k,m,ensemble,estimator,instance_seed,p_soln,p_soln_lower_bound,eta_abs,gsat_steps");
        s.push_str(if self.config.timing { ",wall_time\n" } else { "\n" });
        for r in &self.rows {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.k,
                r.m,
                r.ensemble,
                r.estimator,
                r.instance_seed,
                opt(r.p_soln, num),
                opt(r.p_soln_lower_bound, num),
                opt(r.eta_abs, num),
                opt(r.gsat_steps, |v| v.to_string()),
            );
            if self.config.timing {
                let _ = write!(s, ",{}", opt(r.wall_time, num));
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = header(&self.config);
        s.push_str("x,n,k,m,m_rule,ensemble,estimator,instances,mean,sem,bound,mean_eta_abs,gsat_median_flips,gsat_censored\n");
        for r in &self.summary {
            let p = &r.point;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                num(r.x),
                p.n,
                p.k,
                p.m,
                p.m_rule,
                p.ensemble,
                p.estimator,
                r.instances,
                opt(r.mean, num),
                opt(r.sem, num),
                opt(r.bound, num),
                opt(r.mean_eta_abs, num),
                opt(r.gsat_median_flips, num),
                opt(r.gsat_censored, |v| v.to_string()),
            );
        }
        s
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            config: &'a str,
            gsat_tie_policy: &'a str,
            gsat_sideways_policy: &'a str,
            summary: &'a [SummaryRow],
            skipped: &'a [SkippedPoint],
            checks: &'a [CheckResult],
        }
        let config = self.config.to_config();
        serde_json::to_string_pretty(&Doc {
            config: &config,
            gsat_tie_policy: gsat::TIE_POLICY,
            gsat_sideways_policy: gsat::SIDEWAYS_POLICY,
            summary: &self.summary,
            skipped: &self.skipped,
            checks: &self.checks,
        })
        .expect("summary serialises")
    }

    /// Write `rows.csv`, `summary.csv` and `summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("rows.csv"), self.rows_csv())?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub n: u32,
    pub k: u32,
    pub m: usize,
    pub estimator: EstimatorKind,
    pub p_soln: f64,
    pub solutions: Vec<Assignment>,
    /// Most probable assignments, highest first, ties by index.
    pub top: Vec<(Assignment, f64)>,
    pub notes: Vec<String>,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}, k = {}, m = {}, estimator = {}", self.n, self.k, self.m, self.estimator)?;
        writeln!(f, "p_soln = {:.12}", self.p_soln)?;
        let sols: Vec<String> = self.solutions.iter().map(|&s| format_bits(s, self.n)).collect();
        writeln!(f, "solutions ({}): {}", sols.len(), sols.join(" "))?;
        writeln!(f, "most probable:")?;
        for &(a, p) in &self.top {
            writeln!(f, "  {}  {p:.12}", format_bits(a, self.n))?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

/// Run one step on a DIMACS instance. Solution sets come from brute force,
/// so `n` is limited by `cap`.
pub fn solve_dimacs(text: &str, estimator: EstimatorKind, cap: u32, top: usize) -> Result<SolveReport> {
    let inst = parse_dimacs(text)?;
    inst.check_cap(cap)?;
    let est = Estimator::prepare(estimator, &inst)?;
    let conflicts = inst.conflict_table()?;
    let ceff = est.ceff_table(&conflicts);
    let state = single_step_from_ceff(inst.n(), &ceff)?;
    let prob = p_solution(&state, &inst)?;
    let mut ranked: Vec<(Assignment, f64)> =
        (0..1u64 << inst.n()).map(|a| (a, state.probability(a))).collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.truncate(top);
    let mut notes = Vec::new();
    if prob.solutions.is_empty() {
        notes.push("no assignment satisfies every clause, so the instance is insoluble and p_soln = 0".into());
    }
    if inst.m() == 0 {
        notes.push("empty formula: every assignment is a solution".into());
    }
    Ok(SolveReport {
        n: inst.n(),
        k: inst.k(),
        m: inst.m(),
        estimator,
        p_soln: prob.p,
        solutions: prob.solutions,
        top: ranked,
        notes,
    })
}

pub fn solve_file(path: &Path, estimator: EstimatorKind) -> Result<SolveReport> {
    let text = std::fs::read_to_string(path)?;
    solve_dimacs(&text, estimator, DEFAULT_STATE_CAP, 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_rules_parse_and_resolve() {
        for s in ["abs:30", "mu:8", "alpha:2.5", "max"] {
            assert_eq!(s.parse::<MRule>().unwrap().to_string(), s);
        }
        assert!("mu:-1".parse::<MRule>().is_err());
        assert!("10".parse::<MRule>().is_err());
        let kind = EnsembleKind::RandomSoluble;
        assert_eq!(MRule::Mu(8.0).resolve(10, 3, kind).unwrap(), 800);
        assert_eq!(MRule::Alpha(2.5).resolve(10, 3, kind).unwrap(), 25);
        assert_eq!(MRule::Max.resolve(10, 3, kind).unwrap(), 840);
    }

    #[test]
    fn config_roundtrip() {
        for fig in Figure::ALL {
            let cfg = ExperimentConfig::preset(fig);
            let back = ExperimentConfig::from_config(&cfg.to_config()).unwrap();
            assert_eq!(back, cfg, "{fig}");
        }
        let cfg = ExperimentConfig::from_config(
            "figure = fig3\nn = 10\nm = alpha:10, alpha:20\ninstances = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.ns, vec![10]);
        assert_eq!(cfg.m_rules.len(), 2);
        assert_eq!(cfg.instances, 7);
        assert_eq!(cfg.kinds, vec![EnsembleKind::RandomSoluble]);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::from_config("n = 5\ninstances = 0\n").is_err());
        assert!(matches!(
            ExperimentConfig::from_config("n = 5\nbogus = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ExperimentConfig::from_config("n = 7..5\n").is_err());
        assert_eq!(ExperimentConfig::from_config("n = 3..5, 9\n").unwrap().ns, vec![3, 4, 5, 9]);
    }

    #[test]
    fn preflight_rejects_infeasible_points() {
        let cfg = ExperimentConfig {
            ns: vec![8, 10, 20],
            m_rules: vec![MRule::Mu(8.0)],
            kinds: vec![EnsembleKind::RandomSoluble],
            state_cap: 16,
            ..ExperimentConfig::default()
        };
        let (points, skipped) = preflight(&cfg);
        assert_eq!(points.iter().map(|p| p.n).collect::<Vec<_>>(), vec![10]);
        assert_eq!(skipped.len(), 2);
        assert!(skipped[0].reason.contains("exceeds"));
        assert!(skipped[1].reason.contains("cap"));

        let cfg = ExperimentConfig {
            ns: vec![8],
            m_rules: vec![MRule::Abs(10)],
            estimator: Some(EstimatorKind::MaxConstrainedEq7),
            kinds: vec![EnsembleKind::RandomSoluble],
            ..ExperimentConfig::default()
        };
        let (points, skipped) = preflight(&cfg);
        assert!(points.is_empty());
        assert!(skipped[0].reason.contains("does not apply"));
    }

    #[test]
    fn single_instance_summary() {
        let cfg = ExperimentConfig {
            ns: vec![8],
            m_rules: vec![MRule::Abs(60)],
            kinds: vec![EnsembleKind::RandomSoluble],
            instances: 1,
            base_seed: 11,
            ..ExperimentConfig::default()
        };
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.summary[0].mean, res.rows[0].p_soln);
        assert_eq!(res.summary[0].sem, Some(0.0));
        assert_eq!(res.rows[0].instance_seed, 11);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_and_sem() {
        let (m, s) = mean_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn solve_worked_example() {
        let r = solve_dimacs("p cnf 2 2\n-1 0\n-2 0\n", EstimatorKind::ExactOneSat, 24, 4).unwrap();
        assert_eq!(r.top[0].0, 0);
        assert!((r.top[0].1 - 1.0).abs() < 1e-12);
        assert!((r.p_soln - 1.0).abs() < 1e-12);
        assert!(r.to_string().contains("00  1.000000000000"));
    }

    #[test]
    fn solve_insoluble_and_empty() {
        let r = solve_dimacs("p cnf 1 2\n1 0\n-1 0\n", EstimatorKind::ExactOneSat, 24, 4).unwrap();
        assert_eq!(r.p_soln, 0.0);
        assert!(r.solutions.is_empty());
        assert!(r.notes[0].contains("insoluble"));

        let r = solve_dimacs("c width 2\np cnf 3 0\n", EstimatorKind::MlRandom, 24, 8).unwrap();
        for (_, p) in &r.top {
            assert!((p - 0.125).abs() < 1e-12);
        }
        assert!((r.p_soln - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_refuses_inapplicable_estimator() {
        let text = "p cnf 3 1\n1 2 0\n";
        match solve_dimacs(text, EstimatorKind::MaxConstrainedEq7, 24, 4) {
            Err(Error::Contract(msg)) => assert!(msg.contains("ml_random"), "{msg}"),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
