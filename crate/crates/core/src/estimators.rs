//! Effective conflict counts `c_eff`.
//!
//! The phase step needs, for every assignment, the number of conflicts it
//! would have in the maximally constrained 1-SAT problem sharing the
//! instance's solution, i.e. its number of bad values `j`. The estimators
//! here approximate `j` from information that does not require knowing the
//! solution: the assignment's own conflict count, its neighbors' counts, its
//! complement's count, or a maximum-likelihood table over the ensemble.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, ln_binomial};
use crate::ensembles::{m_max, m_max_bal};
use crate::sat::{complement, full_mask, Assignment, SatInstance};
use crate::{Error, Result};

/// Conflicts of an assignment with `j` bad values in the maximally
/// constrained instance: `C(n,k) − C(n−j,k)`.
pub fn c_max(n: u32, k: u32, j: u32) -> u64 {
    assert!(j <= n, "j = {j} exceeds n = {n}");
    binomial(n.into(), k.into()) - binomial((n - j).into(), k.into())
}

/// Conflicts of an assignment with `j` bad values in the maximally
/// constrained balanced instance: the sum over odd `i` of
/// `C(j,i)·C(n−j,k−i)`.
pub fn c_max_bal(n: u32, k: u32, j: u32) -> u64 {
    assert!(j <= n, "j = {j} exceeds n = {n}");
    (1..=k)
        .step_by(2)
        .map(|i| binomial(j.into(), i.into()) * binomial((n - j).into(), (k - i).into()))
        .sum()
}

/// The unique `j ≤ n − k` with `c_max(j) = c`, if any.
fn invert_c_max(n: u32, k: u32, c: u64) -> Option<u32> {
    (0..=n - k).find(|&j| c_max(n, k, j) == c)
}

/// If `inst` contains every clause consistent with a single solution,
/// return that solution.
///
/// Each of the `C(n,k)` variable sets must carry `2^k − 1` clauses; the one
/// missing pattern on each set is the solution restricted to that set, and
/// the restrictions must agree.
pub fn maximal_solution(inst: &SatInstance) -> Option<Assignment> {
    let (n, k) = (inst.n(), inst.k());
    if inst.m() as u64 != m_max(n, k).ok()? {
        return None;
    }
    let per_set = (1usize << k) - 1;
    let mut known = 0u64;
    let mut solution = 0u64;
    for group in inst.clauses().chunks(per_set) {
        let mask = group[0].mask();
        if group.iter().any(|c| c.mask() != mask) {
            return None;
        }
        // xor of all 2^k patterns is 0 for k > 1 (and 1 for k = 1),
        // so the missing one is the xor of the present ones (adjusted)
        let mut missing = group.iter().fold(0u64, |acc, c| acc ^ c.falsifying_bits());
        if k == 1 {
            missing ^= mask;
        }
        if (solution ^ missing) & known & mask != 0 {
            return None;
        }
        known |= mask;
        solution |= missing;
    }
    (known == full_mask(n)).then_some(solution)
}

fn neighbor_from_counts(n: u32, k: u32, a: Assignment, conflicts: impl Fn(Assignment) -> u32) -> u32 {
    let c = u64::from(conflicts(a));
    let ceiling = binomial(n.into(), k.into());
    if c < ceiling {
        return invert_c_max(n, k, c).expect("conflict count inconsistent with maximal structure");
    }
    let fewer = (0..n)
        .filter(|&i| u64::from(conflicts(a ^ (1 << i))) < c)
        .count() as u32;
    if fewer > 0 {
        fewer
    } else {
        n - k + 2
    }
}

fn complement_from_counts(
    n: u32,
    k: u32,
    a: Assignment,
    conflicts: impl Fn(Assignment) -> u32,
) -> u32 {
    let ceiling = binomial(n.into(), k.into());
    let c = u64::from(conflicts(a));
    if c < ceiling {
        return invert_c_max(n, k, c).expect("conflict count inconsistent with maximal structure");
    }
    let c_comp = u64::from(conflicts(complement(a, n)));
    n - invert_c_max(n, k, c_comp).expect("complement count inconsistent with maximal structure")
}

fn require_maximal(inst: &SatInstance) -> Result<Assignment> {
    maximal_solution(inst).ok_or_else(|| {
        Error::contract(format!(
            "instance (n = {}, k = {}, m = {}) is not maximally constrained; try ml_random",
            inst.n(),
            inst.k(),
            inst.m()
        ))
    })
}

fn require_complement_coverage(inst: &SatInstance) -> Result<()> {
    if inst.n() <= 2 * inst.k() {
        return Err(Error::contract(format!(
            "complement estimator needs n > 2k, got n = {}, k = {}",
            inst.n(),
            inst.k()
        )));
    }
    Ok(())
}

/// Neighborhood estimate for a maximally constrained instance: `j` when
/// `j ≤ n − k + 1`, otherwise `n − k + 2`.
pub fn ceff_max_constrained(inst: &SatInstance, a: Assignment) -> Result<u32> {
    require_maximal(inst)?;
    check_range(inst, a)?;
    Ok(neighbor_from_counts(inst.n(), inst.k(), a, |b| inst.conflicts(b)))
}

/// Exact bad-value count from the conflicts of `a` and of its complement;
/// requires a maximally constrained instance with `n > 2k`.
pub fn ceff_complement(inst: &SatInstance, a: Assignment) -> Result<u32> {
    require_maximal(inst)?;
    require_complement_coverage(inst)?;
    check_range(inst, a)?;
    Ok(complement_from_counts(inst.n(), inst.k(), a, |b| inst.conflicts(b)))
}

fn check_range(inst: &SatInstance, a: Assignment) -> Result<()> {
    if a > full_mask(inst.n()) {
        return Err(Error::input(format!("assignment {a} out of range for n = {}", inst.n())));
    }
    Ok(())
}

/// Hypergeometric model of conflict counts in a planted-solution ensemble.
///
/// An assignment with `j` bad values conflicts with `c_max(j)` of the
/// `m_max` allowed clauses; drawing `m` of them without replacement gives
/// `P_conf(c | j)`.
#[derive(Clone, Debug)]
pub struct ConflictModel {
    pub n: u32,
    pub k: u32,
    pub m: u64,
    pub balanced: bool,
    m_max: u64,
    c_max: Vec<u64>,
}

impl ConflictModel {
    pub fn new(n: u32, k: u32, m: u64, balanced: bool) -> Result<Self> {
        let max = if balanced { m_max_bal(n, k)? } else { m_max(n, k)? };
        if m > max {
            return Err(Error::Ensemble(format!("m = {m} exceeds the ensemble maximum {max}")));
        }
        let c_max = (0..=n)
            .map(|j| if balanced { c_max_bal(n, k, j) } else { c_max(n, k, j) })
            .collect();
        Ok(ConflictModel { n, k, m, balanced, m_max: max, c_max })
    }

    pub fn m_max(&self) -> u64 {
        self.m_max
    }

    pub fn c_max(&self, j: u32) -> u64 {
        self.c_max[j as usize]
    }

    /// `ln P_conf(c | j)`; exactly `-inf` outside the hypergeometric support.
    pub fn ln_p_conf(&self, c: u64, j: u32) -> f64 {
        let hits = self.c_max(j);
        let misses = self.m_max - hits;
        if c > hits || c > self.m || self.m - c > misses {
            return f64::NEG_INFINITY;
        }
        ln_binomial(hits, c) + ln_binomial(misses, self.m - c) - ln_binomial(self.m_max, self.m)
    }

    pub fn p_conf(&self, c: u64, j: u32) -> f64 {
        self.ln_p_conf(c, j).exp()
    }

    /// `ln P_bad(j) = ln(2^-n · C(n,j))`.
    pub fn ln_p_bad(&self, j: u32) -> f64 {
        ln_binomial(self.n.into(), j.into()) - f64::from(self.n) * std::f64::consts::LN_2
    }

    /// Unnormalised log posterior of `j` given `c` conflicts.
    pub fn ln_score(&self, c: u64, j: u32) -> f64 {
        self.ln_p_conf(c, j) + self.ln_p_bad(j)
    }
}

/// Relative slack under which two log scores count as tied.
const TIE_RTOL: f64 = 1e-9;

/// Maximum-likelihood map from conflict count to `c_eff`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlTable {
    pub n: u32,
    pub k: u32,
    pub m: u64,
    pub balanced: bool,
    ceff: Vec<u32>,
    ln_winner: Vec<f64>,
}

impl MlTable {
    pub fn ceff(&self, c: u32) -> u32 {
        match self.ceff.get(c as usize) {
            Some(&j) => j,
            // counts above m cannot come from an m-clause instance
            None => c.min(self.n),
        }
    }

    pub fn entries(&self) -> &[u32] {
        &self.ceff
    }

    /// Log score of the chosen `j`, or `None` where every `j` had zero
    /// likelihood and the fallback `min(c, n)` was used.
    pub fn winner_log_likelihood(&self, c: u32) -> Option<f64> {
        self.ln_winner.get(c as usize).copied().filter(|v| v.is_finite())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,c_eff,log_likelihood\n");
        for (c, (&j, &ll)) in self.ceff.iter().zip(&self.ln_winner).enumerate() {
            if ll.is_finite() {
                out.push_str(&format!("{c},{j},{ll:.12e}\n"));
            } else {
                out.push_str(&format!("{c},{j},\n"));
            }
        }
        out
    }
}

/// For each `c ∈ [0, m]`, the `j` maximising `P_conf(c|j)·P_bad(j)`, ties to
/// the smallest `j`.
pub fn build_ml_table(n: u32, k: u32, m: u64, balanced: bool) -> Result<MlTable> {
    let model = ConflictModel::new(n, k, m, balanced)?;
    Ok(ml_table_from_model(&model))
}

pub(crate) fn ml_table_from_model(model: &ConflictModel) -> MlTable {
    let n = model.n;
    let mut ceff = Vec::with_capacity(model.m as usize + 1);
    let mut ln_winner = Vec::with_capacity(model.m as usize + 1);
    let mut unexplained = Vec::new();
    for c in 0..=model.m {
        let scores: Vec<f64> = (0..=n).map(|j| model.ln_score(c, j)).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            unexplained.push(c);
            ceff.push(c.min(u64::from(n)) as u32);
            ln_winner.push(f64::NEG_INFINITY);
            continue;
        }
        let slack = TIE_RTOL * best.abs().max(1.0);
        let j = scores.iter().position(|&s| s >= best - slack).unwrap();
        ceff.push(j as u32);
        ln_winner.push(scores[j]);
    }
    if let (Some(first), Some(last)) = (unexplained.first(), unexplained.last()) {
        log::debug!(
            "no j explains {} conflict counts in [{first}, {last}] (n = {n}, k = {}, m = {}); using c_eff = min(c, n)",
            unexplained.len(),
            model.k,
            model.m
        );
    }
    MlTable { n, k: model.k, m: model.m, balanced: model.balanced, ceff, ln_winner }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Conflict count itself; exact for 1-SAT.
    ExactOneSat,
    /// Conflicts plus neighbor comparison on maximally constrained instances.
    MaxConstrainedEq7,
    /// Conflicts of the assignment and of its complement.
    ComplementBased,
    /// Maximum likelihood over the random planted-solution ensemble.
    MlRandom,
    /// Maximum likelihood over the balanced ensemble.
    MlBalanced,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::ExactOneSat,
        EstimatorKind::MaxConstrainedEq7,
        EstimatorKind::ComplementBased,
        EstimatorKind::MlRandom,
        EstimatorKind::MlBalanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::ExactOneSat => "exact_one_sat",
            EstimatorKind::MaxConstrainedEq7 => "max_constrained_eq7",
            EstimatorKind::ComplementBased => "complement_based",
            EstimatorKind::MlRandom => "ml_random",
            EstimatorKind::MlBalanced => "ml_balanced",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown estimator `{s}`")))
    }
}

/// An estimator checked against one instance, with any table prebuilt.
#[derive(Clone, Debug)]
pub struct Estimator {
    kind: EstimatorKind,
    n: u32,
    k: u32,
    table: Option<MlTable>,
}

impl Estimator {
    pub fn prepare(kind: EstimatorKind, inst: &SatInstance) -> Result<Self> {
        let table = match kind {
            EstimatorKind::ExactOneSat => {
                if inst.k() != 1 {
                    return Err(Error::contract(format!(
                        "exact_one_sat needs a 1-SAT instance, got k = {}",
                        inst.k()
                    )));
                }
                None
            }
            EstimatorKind::MaxConstrainedEq7 => {
                require_maximal(inst)?;
                None
            }
            EstimatorKind::ComplementBased => {
                require_maximal(inst)?;
                require_complement_coverage(inst)?;
                None
            }
            EstimatorKind::MlRandom | EstimatorKind::MlBalanced => {
                let balanced = kind == EstimatorKind::MlBalanced;
                let table = build_ml_table(inst.n(), inst.k(), inst.m() as u64, balanced)
                    .map_err(|e| Error::contract(format!("{kind} not applicable: {e}")))?;
                Some(table)
            }
        };
        Ok(Estimator { kind, n: inst.n(), k: inst.k(), table })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn ml_table(&self) -> Option<&MlTable> {
        self.table.as_ref()
    }

    /// `c_eff(a)` evaluated through `conflicts`, which must count conflicts
    /// of the instance this estimator was prepared for.
    pub fn estimate_with(&self, a: Assignment, conflicts: impl Fn(Assignment) -> u32) -> u32 {
        match self.kind {
            EstimatorKind::ExactOneSat => conflicts(a),
            EstimatorKind::MaxConstrainedEq7 => neighbor_from_counts(self.n, self.k, a, conflicts),
            EstimatorKind::ComplementBased => complement_from_counts(self.n, self.k, a, conflicts),
            EstimatorKind::MlRandom | EstimatorKind::MlBalanced => {
                self.table.as_ref().expect("ml table").ceff(conflicts(a))
            }
        }
    }

    /// `c_eff` for every assignment, given the instance's conflict table.
    pub fn ceff_table(&self, conflicts: &[u32]) -> Vec<u32> {
        debug_assert_eq!(conflicts.len(), 1usize << self.n);
        match self.kind {
            EstimatorKind::ExactOneSat => conflicts.to_vec(),
            EstimatorKind::MlRandom | EstimatorKind::MlBalanced => {
                let table = self.table.as_ref().expect("ml table");
                let unexplained = conflicts
                    .iter()
                    .filter(|&&c| table.winner_log_likelihood(c).is_none())
                    .count();
                if unexplained > 0 {
                    log::warn!(
                        "{unexplained} assignments have conflict counts no j explains; using c_eff = min(c, n) for them"
                    );
                }
                conflicts.iter().map(|&c| table.ceff(c)).collect()
            }
            _ => (0..conflicts.len() as u64)
                .map(|a| self.estimate_with(a, |b| conflicts[b as usize]))
                .collect(),
        }
    }
}

/// `c_eff(a)` under `kind` for a single assignment.
pub fn estimate(kind: EstimatorKind, inst: &SatInstance, a: Assignment) -> Result<u32> {
    check_range(inst, a)?;
    let est = Estimator::prepare(kind, inst)?;
    Ok(est.estimate_with(a, |b| inst.conflicts(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, EnsembleKind, EnsembleSpec};
    use crate::sat::{hamming_distance, Clause};

    fn maximal(n: u32, k: u32, seed: u64) -> SatInstance {
        generate(&EnsembleSpec::maximal(n, k, false, seed).unwrap()).unwrap()
    }

    #[test]
    fn c_max_values() {
        // n=4, k=2, one bad value: 6 - 3 = 3
        assert_eq!(c_max(4, 2, 1), 3);
        let inst = maximal(4, 2, 0);
        let sol = inst.planted_solution().unwrap();
        assert_eq!(u64::from(inst.conflicts(sol ^ 0b0100)), c_max(4, 2, 1));
        for n in 1..10 {
            for k in 1..=n {
                assert_eq!(c_max(n, k, 0), 0);
            }
            for j in 0..=n {
                assert_eq!(c_max(n, 1, j), u64::from(j));
            }
        }
    }

    #[test]
    fn c_max_shape() {
        for n in 1..=12 {
            for k in 1..=n.min(5) {
                let top = binomial(n.into(), k.into());
                for j in 0..n - k {
                    assert!(c_max(n, k, j) < c_max(n, k, j + 1));
                }
                for j in n - k + 1..=n {
                    assert_eq!(c_max(n, k, j), top);
                }
            }
        }
    }

    #[test]
    fn c_max_bal_values() {
        assert_eq!(c_max_bal(7, 3, 0), 0);
        assert_eq!(c_max_bal(4, 3, 2), 2);
        let inst = generate(&EnsembleSpec::maximal(4, 3, true, 0).unwrap()).unwrap();
        let sol = inst.planted_solution().unwrap();
        assert_eq!(u64::from(inst.conflicts(sol ^ 0b0110)), 2);
    }

    #[test]
    fn maximal_conflicts_follow_c_max() {
        for n in 1..=8 {
            for k in 1..=n.min(3) {
                for balanced in [false, true] {
                    let inst = generate(&EnsembleSpec::maximal(n, k, balanced, u64::from(n * k)).unwrap())
                        .unwrap();
                    let sol = inst.planted_solution().unwrap();
                    for (a, &c) in inst.conflict_table().unwrap().iter().enumerate() {
                        let j = hamming_distance(a as u64, sol);
                        let want = if balanced { c_max_bal(n, k, j) } else { c_max(n, k, j) };
                        assert_eq!(u64::from(c), want);
                    }
                }
            }
        }
    }

    #[test]
    fn detects_maximal_structure() {
        for (n, k) in [(1, 1), (4, 1), (5, 2), (6, 3), (4, 4)] {
            for seed in 0..4 {
                let inst = maximal(n, k, seed);
                assert_eq!(maximal_solution(&inst), inst.planted_solution());
                let stripped = SatInstance::new(n, k, inst.clauses().to_vec(), None).unwrap();
                assert_eq!(maximal_solution(&stripped), inst.planted_solution());
            }
        }
        let partial = generate(&EnsembleSpec::new(6, 3, 100, EnsembleKind::RandomSoluble, 1).unwrap())
            .unwrap();
        assert_eq!(maximal_solution(&partial), None);
        // insoluble 1-SAT: both polarities of V1
        let both = SatInstance::new(
            1,
            1,
            vec![Clause::from_literals(&[1]).unwrap(), Clause::from_literals(&[-1]).unwrap()],
            None,
        )
        .unwrap();
        assert_eq!(maximal_solution(&both), None);
    }

    #[test]
    fn neighbor_structure() {
        for n in 3..=8 {
            for k in 1..=3.min(n) {
                let inst = maximal(n, k, 7);
                let sol = inst.planted_solution().unwrap();
                let table = inst.conflict_table().unwrap();
                for a in 0..1u64 << n {
                    let j = hamming_distance(a, sol);
                    let c = table[a as usize];
                    let nbrs: Vec<u32> = (0..n).map(|i| table[(a ^ 1 << i) as usize]).collect();
                    let fewer = nbrs.iter().filter(|&&x| x < c).count() as u32;
                    if j <= n - k + 1 {
                        assert_eq!(fewer, j);
                    } else {
                        assert!(nbrs.iter().all(|&x| x == c));
                    }
                }
            }
        }
    }

    #[test]
    fn neighbor_estimator_errors_only_far_from_solution() {
        for n in 4..=8 {
            for k in 2..=4.min(n) {
                let inst = maximal(n, k, 11);
                let sol = inst.planted_solution().unwrap();
                for a in 0..1u64 << n {
                    let j = hamming_distance(a, sol);
                    let got = ceff_max_constrained(&inst, a).unwrap();
                    let want = if j <= n - k + 1 { j } else { n - k + 2 };
                    assert_eq!(got, want);
                    if got != j {
                        assert!(j >= n - k + 3, "n={n} k={k} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn neighbor_estimator_examples() {
        let inst = maximal(6, 3, 2);
        let sol = inst.planted_solution().unwrap();
        assert_eq!(ceff_max_constrained(&inst, sol).unwrap(), 0);
        assert_eq!(ceff_max_constrained(&inst, complement(sol, 6)).unwrap(), 5);
        for n in 2..=9 {
            let inst = maximal(n, 2, 5);
            let sol = inst.planted_solution().unwrap();
            for a in 0..1u64 << n {
                assert_eq!(ceff_max_constrained(&inst, a).unwrap(), hamming_distance(a, sol));
            }
        }
        let partial = generate(&EnsembleSpec::new(6, 3, 50, EnsembleKind::RandomSoluble, 1).unwrap())
            .unwrap();
        assert!(matches!(ceff_max_constrained(&partial, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn complement_estimator_is_exact() {
        let inst = maximal(7, 3, 4);
        let sol = inst.planted_solution().unwrap();
        assert_eq!(ceff_complement(&inst, sol).unwrap(), 0);
        assert_eq!(ceff_complement(&inst, complement(sol, 7)).unwrap(), 7);
        for a in 0..128 {
            assert_eq!(ceff_complement(&inst, a).unwrap(), hamming_distance(a, sol));
        }
        assert!(matches!(ceff_complement(&maximal(6, 3, 0), 0), Err(Error::Contract(_))));
    }

    #[test]
    fn ml_table_degenerate_cases() {
        for (n, k) in [(6, 2), (7, 3), (8, 3), (8, 4)] {
            let m = m_max(n, k).unwrap();
            let table = build_ml_table(n, k, m, false).unwrap();
            for j in 0..=n - k {
                assert_eq!(table.ceff(c_max(n, k, j) as u32), j);
            }
        }
        for n in 1..=10 {
            let table = build_ml_table(n, 1, u64::from(n), false).unwrap();
            assert_eq!(table.entries(), (0..=n).collect::<Vec<_>>().as_slice());
        }
    }

    #[test]
    fn ml_table_fallback_for_impossible_counts() {
        // m = m_max: only c_max values occur; others fall back to min(c, n)
        let table = build_ml_table(5, 2, 30, false).unwrap();
        assert_eq!(table.winner_log_likelihood(1), None);
        assert_eq!(table.ceff(1), 1);
        assert_eq!(table.ceff(29), 5);
        assert!(table.winner_log_likelihood(4).is_some());
        assert!(table.to_csv().starts_with("c,c_eff,log_likelihood\n0,0,"));
    }

    #[test]
    fn ml_random_agrees_with_neighbor_estimator_near_solution() {
        for n in 3..=8 {
            for k in 1..=3.min(n) {
                let inst = maximal(n, k, 9);
                let sol = inst.planted_solution().unwrap();
                let ml = Estimator::prepare(EstimatorKind::MlRandom, &inst).unwrap();
                let nb = Estimator::prepare(EstimatorKind::MaxConstrainedEq7, &inst).unwrap();
                let table = inst.conflict_table().unwrap();
                let (a_ml, a_nb) = (ml.ceff_table(&table), nb.ceff_table(&table));
                for a in 0..1usize << n {
                    if hamming_distance(a as u64, sol) <= n - k {
                        assert_eq!(a_ml[a], a_nb[a]);
                    }
                }
            }
        }
    }

    #[test]
    fn ml_estimates_depend_only_on_conflicts() {
        let inst = generate(&EnsembleSpec::new(8, 3, 60, EnsembleKind::RandomSoluble, 3).unwrap())
            .unwrap();
        let est = Estimator::prepare(EstimatorKind::MlRandom, &inst).unwrap();
        let table = inst.conflict_table().unwrap();
        let ceff = est.ceff_table(&table);
        for a in 0..256 {
            for b in 0..256 {
                if table[a] == table[b] {
                    assert_eq!(ceff[a], ceff[b]);
                }
            }
        }
    }

    #[test]
    fn estimate_dispatch() {
        let one = maximal(5, 1, 0);
        for a in 0..32 {
            assert_eq!(estimate(EstimatorKind::ExactOneSat, &one, a).unwrap(), one.conflicts(a));
        }
        let three = maximal(7, 3, 0);
        assert!(matches!(
            estimate(EstimatorKind::ExactOneSat, &three, 0),
            Err(Error::Contract(_))
        ));
        assert!(estimate(EstimatorKind::MaxConstrainedEq7, &three, 200).is_err());
        let too_many = generate(&EnsembleSpec::new(5, 3, 60, EnsembleKind::RandomSoluble, 0).unwrap())
            .unwrap();
        assert!(matches!(
            estimate(EstimatorKind::MlBalanced, &too_many, 0),
            Err(Error::Contract(_))
        ));
        for kind in EstimatorKind::ALL {
            assert_eq!(kind.as_str().parse::<EstimatorKind>().unwrap(), kind);
        }
    }

    #[test]
    fn table_and_single_paths_agree() {
        let inst = maximal(7, 3, 8);
        let table = inst.conflict_table().unwrap();
        for kind in [
            EstimatorKind::MaxConstrainedEq7,
            EstimatorKind::ComplementBased,
            EstimatorKind::MlRandom,
            EstimatorKind::MlBalanced,
        ] {
            let Ok(est) = Estimator::prepare(kind, &inst) else {
                continue;
            };
            let full = est.ceff_table(&table);
            for a in 0..128u64 {
                assert_eq!(full[a as usize], estimate(kind, &inst, a).unwrap(), "{kind}");
            }
        }
    }
}
