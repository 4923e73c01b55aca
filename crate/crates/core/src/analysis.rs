//! Error analysis of the approximate phase step.
//!
//! With `δ(s) = i^c_eff(s) − i^y(s)` (`y` = bad values of `s`), the solution's
//! final amplitude is `1 + η` with
//! `η = 2^(-n/2) Σ_y C(n,y)·u_y·δ_y` and `δ_y` the mean of `δ` over the
//! assignments at distance `y` from the solution. The grouping is exact, so
//! `η` computed here must match the simulated amplitude to rounding.

use num_complex::Complex64;
use serde::Serialize;

use crate::combinatorics::binomial;
use crate::estimators::{ml_table_from_model, ConflictModel, Estimator, EstimatorKind};
use crate::quantum::{i_pow, inv_sqrt_dim, neg_i_pow, p_solution, single_step_from_ceff};
use crate::sat::{Assignment, SatInstance};
use crate::{Error, Result};

/// Mean phase error `δ_y` for each distance `y = 0..=n` from `solution`.
pub fn phase_errors_by_distance(n: u32, solution: Assignment, ceff: &[u32]) -> Vec<Complex64> {
    let mut sums = vec![Complex64::new(0.0, 0.0); n as usize + 1];
    for (s, &c) in ceff.iter().enumerate() {
        let y = (s as u64 ^ solution).count_ones();
        sums[y as usize] += i_pow(c) - i_pow(y);
    }
    sums.iter()
        .enumerate()
        .map(|(y, sum)| sum / binomial(n.into(), y as u64) as f64)
        .collect()
}

/// `η` from per-assignment `c_eff` values.
pub fn eta_from_ceff(n: u32, solution: Assignment, ceff: &[u32]) -> Complex64 {
    let deltas = phase_errors_by_distance(n, solution, ceff);
    let scale = inv_sqrt_dim(n);
    deltas
        .iter()
        .enumerate()
        .map(|(y, d)| {
            let u_y = neg_i_pow(y as u32) * scale;
            u_y * d * binomial(n.into(), y as u64) as f64
        })
        .sum::<Complex64>()
        * scale
}

fn check_solution(inst: &SatInstance, solution: Assignment) -> Result<()> {
    if solution >> inst.n() != 0 || inst.conflicts(solution) != 0 {
        return Err(Error::contract(format!(
            "assignment {solution} does not solve the instance"
        )));
    }
    Ok(())
}

pub fn eta(inst: &SatInstance, solution: Assignment, kind: EstimatorKind) -> Result<Complex64> {
    check_solution(inst, solution)?;
    let est = Estimator::prepare(kind, inst)?;
    let ceff = est.ceff_table(&inst.conflict_table()?);
    Ok(eta_from_ceff(inst.n(), solution, &ceff))
}

/// Closed-form bound on `|η|` for maximally constrained k-SAT with the
/// neighborhood estimator. `None` when `n − k + 3 < n/2`, where the
/// binomial tail bound does not apply.
pub fn eta_bound_max_constrained(n: u32, k: u32) -> Option<f64> {
    if k < 3 {
        // errors need y >= n - k + 3 > n
        return Some(0.0);
    }
    if 2 * (n + 3) < 2 * k + n {
        return None;
    }
    let t = f64::from(k - 3);
    let nf = f64::from(n);
    let tail = binomial(n.into(), (k - 3).into()) as f64 * (nf + 1.0 - t) / (nf + 1.0 - 2.0 * t);
    Some(tail * (1.0 - nf).exp2())
}

/// `2^(-(n-1)) Σ_{y ≥ n−k+3} C(n,y)`: the bound before the tail estimate.
pub fn eta_tail_sum_max_constrained(n: u32, k: u32) -> f64 {
    let start = (n + 3).saturating_sub(k);
    let tail: f64 = (start..=n).map(|y| binomial(n.into(), y.into()) as f64).sum();
    tail * (1.0 - f64::from(n)).exp2()
}

/// Lower bound `(1 − |η|)²` on the probability of the solution, taken as 0
/// once `|η| ≥ 1`.
pub fn p_soln_lower_bound(eta_abs: f64) -> f64 {
    let gap = (1.0 - eta_abs).clamp(0.0, 1.0);
    gap * gap
}

/// Error bookkeeping for one instance and estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub eta_re: f64,
    pub eta_im: f64,
    pub eta_abs: f64,
    /// Closed-form bound on `|η|`, when one applies to the instance.
    pub eta_abs_bound: Option<f64>,
    pub p_soln_exact: f64,
    pub p_soln_lower_bound: f64,
}

impl ErrorReport {
    pub fn eta(&self) -> Complex64 {
        Complex64::new(self.eta_re, self.eta_im)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

/// Simulate the step and compute `η`, its bound (for maximal instances
/// with the neighborhood estimator) and both solution probabilities.
pub fn error_report(
    inst: &SatInstance,
    solution: Assignment,
    kind: EstimatorKind,
) -> Result<ErrorReport> {
    check_solution(inst, solution)?;
    let est = Estimator::prepare(kind, inst)?;
    let ceff = est.ceff_table(&inst.conflict_table()?);
    let eta = eta_from_ceff(inst.n(), solution, &ceff);
    let state = single_step_from_ceff(inst.n(), &ceff)?;
    let p_exact = p_solution(&state, inst)?.p;
    let eta_abs_bound = match kind {
        EstimatorKind::MaxConstrainedEq7 => eta_bound_max_constrained(inst.n(), inst.k()),
        EstimatorKind::ExactOneSat | EstimatorKind::ComplementBased => Some(0.0),
        _ => None,
    };
    Ok(ErrorReport {
        eta_re: eta.re,
        eta_im: eta.im,
        eta_abs: eta.norm(),
        eta_abs_bound,
        p_soln_exact: p_exact,
        p_soln_lower_bound: p_soln_lower_bound(eta.norm()),
    })
}

/// Ensemble-averaged bound on `|η|` for the maximum-likelihood estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleBound {
    /// `B = 2^(-n)·2·Σ_y C(n,y)·p_y`.
    pub b: f64,
    /// Misclassification probability `p_y` for `y = 0..=n`.
    pub p_y: Vec<f64>,
    /// Large-`n` shortcut `2·p_{n/2}`; diagnostic only.
    pub asymptotic: f64,
}

impl EnsembleBound {
    pub fn p_soln_lower_bound(&self) -> f64 {
        p_soln_lower_bound(self.b)
    }
}

pub fn b_bound(n: u32, k: u32, m: u64, balanced: bool) -> Result<EnsembleBound> {
    let model = ConflictModel::new(n, k, m, balanced)?;
    let table = ml_table_from_model(&model);
    let p_y: Vec<f64> = (0..=n)
        .map(|y| {
            let correct: f64 = table
                .entries()
                .iter()
                .enumerate()
                .filter(|&(_, &j)| j == y)
                .map(|(c, _)| model.p_conf(c as u64, y))
                .sum();
            (1.0 - correct).max(0.0)
        })
        .collect();
    let weighted: f64 = p_y
        .iter()
        .enumerate()
        .map(|(y, p)| binomial(n.into(), y as u64) as f64 * p)
        .sum();
    let b = 2.0 * weighted * (-f64::from(n)).exp2();
    let asymptotic = 2.0 * p_y[(n / 2) as usize];
    Ok(EnsembleBound { b, p_y, asymptotic })
}

/// `erf⁻¹(1/2)` to double precision.
pub const ZETA: f64 = 0.476_936_276_204_469_9;

/// Inverse error function on `(-1, 1)` by Newton iteration on `erf`.
pub fn erf_inv(y: f64) -> f64 {
    assert!(y > -1.0 && y < 1.0, "erf_inv domain is (-1, 1)");
    // Winitzki's closed-form approximation as the starting point
    let a = 0.147;
    let ln = (1.0 - y * y).ln();
    let t = 2.0 / (std::f64::consts::PI * a) + ln / 2.0;
    let mut x = y.signum() * ((t * t - ln / a).sqrt() - t).sqrt();
    let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
    for _ in 0..50 {
        let step = (statrs::function::erf::erf(x) - y) / (two_over_sqrt_pi * (-x * x).exp());
        x -= step;
        if step.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Clause-density threshold `μ_crit` above which `m = μ·n²` keeps `B < 1`
/// asymptotically.
pub fn mu_crit(k: u32) -> Result<f64> {
    let zeta = erf_inv(0.5);
    let z2 = zeta * zeta;
    match k {
        0 | 1 => Err(Error::input(format!("mu_crit needs k >= 2, got {k}"))),
        2 => Ok(27.0 * z2 / (2.0 + 18.0 * z2)),
        _ => {
            let span = f64::from((1u32 << k) - 1);
            Ok(2.0 * span.powi(3) * z2 / f64::from(k * k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, m_max, EnsembleKind, EnsembleSpec};
    use crate::quantum::run_single_step;

    fn maximal(n: u32, k: u32, seed: u64) -> SatInstance {
        generate(&EnsembleSpec::maximal(n, k, false, seed).unwrap()).unwrap()
    }

    #[test]
    fn zero_error_cases() {
        let one = maximal(6, 1, 1);
        let sol = one.planted_solution().unwrap();
        assert!(eta(&one, sol, EstimatorKind::ExactOneSat).unwrap().norm() < 1e-15);
        let two = maximal(7, 2, 1);
        let sol = two.planted_solution().unwrap();
        assert!(eta(&two, sol, EstimatorKind::MaxConstrainedEq7).unwrap().norm() < 1e-15);
    }

    #[test]
    fn eta_matches_simulated_amplitude() {
        let inst = maximal(10, 3, 4);
        let sol = inst.planted_solution().unwrap();
        let e = eta(&inst, sol, EstimatorKind::MaxConstrainedEq7).unwrap();
        let state = run_single_step(&inst, EstimatorKind::MaxConstrainedEq7).unwrap();
        let amp = state.amplitude(sol) - Complex64::new(1.0, 0.0);
        assert!((e - amp).norm() < 1e-10);
        assert!(e.norm() <= 2f64.powi(-9) + 1e-15);
        assert!(e.norm() > 0.0);
    }

    #[test]
    fn eta_rejects_non_solutions() {
        let inst = maximal(6, 2, 0);
        let bad = inst.planted_solution().unwrap() ^ 1;
        assert!(matches!(eta(&inst, bad, EstimatorKind::MaxConstrainedEq7), Err(Error::Contract(_))));
    }

    #[test]
    fn phase_errors_are_bounded() {
        let inst = generate(&EnsembleSpec::new(9, 3, 60, EnsembleKind::RandomSoluble, 2).unwrap())
            .unwrap();
        let est = Estimator::prepare(EstimatorKind::MlRandom, &inst).unwrap();
        let ceff = est.ceff_table(&inst.conflict_table().unwrap());
        for d in phase_errors_by_distance(9, inst.planted_solution().unwrap(), &ceff) {
            assert!(d.norm() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn eta_bound_values() {
        for n in 3..30 {
            assert_eq!(eta_bound_max_constrained(n, 3), Some((1.0 - f64::from(n)).exp2()));
            assert_eq!(eta_bound_max_constrained(n, 2), Some(0.0));
            assert_eq!(eta_bound_max_constrained(n, 1), Some(0.0));
        }
        // condition n - k + 3 >= n/2 fails for n = 4, k = 6
        assert_eq!(eta_bound_max_constrained(4, 6), None);
        assert!(eta_bound_max_constrained(6, 6).is_some());
    }

    #[test]
    fn eta_bound_dominates_tail_sum() {
        for k in 3..=6 {
            for n in k..=40 {
                if let Some(b) = eta_bound_max_constrained(n, k) {
                    assert!(b >= eta_tail_sum_max_constrained(n, k) * (1.0 - 1e-12), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn eta_bound_decreases_in_n() {
        for k in 3..=6u32 {
            let start = 2 * (k - 3) + 1;
            let vals: Vec<f64> = (start.max(k)..=40)
                .filter_map(|n| eta_bound_max_constrained(n, k))
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "k={k}: {vals:?}");
        }
    }

    #[test]
    fn eta_within_bound_sweep() {
        for k in [3, 4] {
            for n in 6..=14 {
                let inst = maximal(n, k, u64::from(n));
                let sol = inst.planted_solution().unwrap();
                let e = eta(&inst, sol, EstimatorKind::MaxConstrainedEq7).unwrap();
                let bound = eta_bound_max_constrained(n, k).unwrap();
                assert!(e.norm() <= bound + 1e-12, "n={n} k={k}: {} > {bound}", e.norm());
            }
        }
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(p_soln_lower_bound(0.0), 1.0);
        assert_eq!(p_soln_lower_bound(1.0), 0.0);
        assert_eq!(p_soln_lower_bound(1.7), 0.0);
        let want = (1.0 - 2f64.powi(-9)).powi(2);
        let got = p_soln_lower_bound(eta_bound_max_constrained(10, 3).unwrap());
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.9961).abs() < 1e-4);
    }

    #[test]
    fn b_bound_special_cases() {
        for n in 1..=12 {
            let b = b_bound(n, 1, u64::from(n), false).unwrap();
            assert!(b.b.abs() < 1e-12, "n={n}: {}", b.b);
        }
        let (n, k) = (8, 3);
        let b = b_bound(n, k, m_max(n, k).unwrap(), false).unwrap();
        for y in 0..=n - k {
            assert!(b.p_y[y as usize].abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn b_bound_shrinks_with_more_clauses() {
        let vals: Vec<f64> = [100, 200, 400, 800]
            .into_iter()
            .map(|m| b_bound(10, 3, m, false).unwrap().b)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vals:?}");
    }

    #[test]
    fn inverse_erf() {
        assert!((erf_inv(0.5) - ZETA).abs() < 1e-15);
        for y in [-0.9, -0.3, 0.0, 0.1, 0.77, 0.999] {
            assert!((statrs::function::erf::erf(erf_inv(y)) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn mu_crit_values() {
        assert!((mu_crit(2).unwrap() - 1.01).abs() < 0.01);
        assert!((mu_crit(3).unwrap() - 17.3).abs() < 0.1);
        let k4 = 2.0 * 15f64.powi(3) * ZETA * ZETA / 16.0;
        assert!((mu_crit(4).unwrap() - k4).abs() < 1e-12);
        assert!((k4 - 96.0).abs() < 0.1);
        assert!(mu_crit(1).is_err());
    }

    #[test]
    fn report_serialises() {
        let inst = maximal(8, 3, 0);
        let sol = inst.planted_solution().unwrap();
        let r = error_report(&inst, sol, EstimatorKind::MaxConstrainedEq7).unwrap();
        assert!((r.p_soln_exact - (Complex64::new(1.0, 0.0) + r.eta()).norm_sqr()).abs() < 1e-12);
        assert!(r.p_soln_exact >= r.p_soln_lower_bound - 1e-12);
        assert!(r.eta_abs <= r.eta_abs_bound.unwrap());
        let json = r.to_json();
        assert!(json.contains("\"eta_abs_bound\":"));
    }
}
