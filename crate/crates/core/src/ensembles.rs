//! Planted-solution k-SAT ensembles.
//!
//! With respect to a planted solution `r`, a clause on variable set `V` is
//! *allowed* when its falsifying pattern differs from `r` restricted to `V`.
//! The balanced ensembles further require the pattern to differ from the
//! solution in an odd number of positions, which makes both polarities of
//! every variable equally common.
//!
//! Allowed clauses are indexed `0..count` by (lexicographic rank of the
//! variable set, rank of the pattern among the set's allowed patterns), so a
//! uniform subset of `m` distinct clauses is a uniform subset of `m` distinct
//! indices and the full list never has to be materialised.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, combination_unrank, combinations};
use crate::kv;
use crate::sat::{full_mask, Assignment, Clause, SatInstance, MAX_VARS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    MaxConstrained,
    RandomSoluble,
    Balanced,
    MaxConstrainedBalanced,
}

impl EnsembleKind {
    pub fn is_balanced(self) -> bool {
        matches!(self, EnsembleKind::Balanced | EnsembleKind::MaxConstrainedBalanced)
    }

    pub fn is_maximal(self) -> bool {
        matches!(self, EnsembleKind::MaxConstrained | EnsembleKind::MaxConstrainedBalanced)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::MaxConstrained => "max_constrained",
            EnsembleKind::RandomSoluble => "random_soluble",
            EnsembleKind::Balanced => "balanced",
            EnsembleKind::MaxConstrainedBalanced => "max_constrained_balanced",
        }
    }

    /// Largest clause count the ensemble admits.
    pub fn max_clauses(self, n: u32, k: u32) -> Result<u64> {
        if self.is_balanced() {
            m_max_bal(n, k)
        } else {
            m_max(n, k)
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "max_constrained" => EnsembleKind::MaxConstrained,
            "random_soluble" | "random" => EnsembleKind::RandomSoluble,
            "balanced" => EnsembleKind::Balanced,
            "max_constrained_balanced" => EnsembleKind::MaxConstrainedBalanced,
            other => return Err(Error::input(format!("unknown ensemble kind `{other}`"))),
        })
    }
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        return Err(Error::input(format!("n = {n} outside 1..={MAX_VARS}")));
    }
    if k == 0 || k > n {
        return Err(Error::input(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

/// Clause count of a maximally constrained soluble instance:
/// `C(n,k)·(2^k − 1)`.
pub fn m_max(n: u32, k: u32) -> Result<u64> {
    check_nk(n, k)?;
    Ok(binomial(n.into(), k.into()) * ((1u64 << k) - 1))
}

/// Clause count of a maximally constrained balanced instance:
/// `C(n,k)·2^(k−1)`.
pub fn m_max_bal(n: u32, k: u32) -> Result<u64> {
    check_nk(n, k)?;
    Ok(binomial(n.into(), k.into()) << (k - 1))
}

/// Gather the bits of `a` selected by `vars` (1-based) into a `k`-bit value.
fn restrict(a: Assignment, vars: &[u32]) -> u64 {
    vars.iter()
        .enumerate()
        .fold(0, |acc, (i, &v)| acc | ((a >> (v - 1) & 1) << i))
}

/// Allowed `k`-bit falsifying patterns for a variable set whose solution
/// restriction is `sol`, ascending.
fn allowed_patterns(k: u32, sol: u64, balanced: bool) -> Vec<u64> {
    (0..1u64 << k)
        .filter(|&p| {
            let bad = (p ^ sol).count_ones();
            if balanced {
                bad % 2 == 1
            } else {
                bad > 0
            }
        })
        .collect()
}

/// Indexable view of the allowed clauses for one planted solution.
#[derive(Clone, Debug)]
pub struct AllowedClauses {
    n: u32,
    k: u32,
    solution: Assignment,
    balanced: bool,
    per_set: u64,
    total: u64,
}

impl AllowedClauses {
    pub fn new(n: u32, k: u32, solution: Assignment, balanced: bool) -> Result<Self> {
        check_nk(n, k)?;
        if solution > full_mask(n) {
            return Err(Error::input(format!("solution {solution} out of range for n = {n}")));
        }
        let per_set = if balanced { 1u64 << (k - 1) } else { (1u64 << k) - 1 };
        let total = binomial(n.into(), k.into()) * per_set;
        Ok(AllowedClauses { n, k, solution, balanced, per_set, total })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// The `index`-th allowed clause in canonical order.
    pub fn clause_at(&self, index: u64) -> Clause {
        assert!(index < self.total, "allowed clause index out of range");
        let vars: Vec<u32> = combination_unrank(self.n, self.k, index / self.per_set)
            .into_iter()
            .map(|v| v + 1)
            .collect();
        let sol = restrict(self.solution, &vars);
        let pattern = allowed_patterns(self.k, sol, self.balanced)[(index % self.per_set) as usize];
        Clause::new(&vars, pattern).expect("unranked clause is well formed")
    }
}

/// Every allowed clause for `solution`, in canonical order (variable set,
/// then pattern).
pub fn enumerate_allowed_clauses(
    n: u32,
    k: u32,
    solution: Assignment,
    balanced: bool,
) -> Result<Vec<Clause>> {
    let allowed = AllowedClauses::new(n, k, solution, balanced)?;
    let mut out = Vec::with_capacity(allowed.len() as usize);
    for combo in combinations(n, k) {
        let vars: Vec<u32> = combo.into_iter().map(|v| v + 1).collect();
        let sol = restrict(solution, &vars);
        for p in allowed_patterns(k, sol, balanced) {
            out.push(Clause::new(&vars, p)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: u32,
    pub k: u32,
    pub m: u64,
    pub kind: EnsembleKind,
    pub seed: u64,
    /// Drawn uniformly from the seeded generator when absent.
    pub solution: Option<Assignment>,
}

impl EnsembleSpec {
    pub fn new(n: u32, k: u32, m: u64, kind: EnsembleKind, seed: u64) -> Result<Self> {
        let spec = EnsembleSpec { n, k, m, kind, seed, solution: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec for the maximally constrained member of `kind`'s family.
    pub fn maximal(n: u32, k: u32, balanced: bool, seed: u64) -> Result<Self> {
        let kind = if balanced {
            EnsembleKind::MaxConstrainedBalanced
        } else {
            EnsembleKind::MaxConstrained
        };
        Self::new(n, k, kind.max_clauses(n, k)?, kind, seed)
    }

    pub fn with_solution(mut self, solution: Assignment) -> Result<Self> {
        self.solution = Some(solution);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let max = self.kind.max_clauses(self.n, self.k)?;
        if self.m > max {
            return Err(Error::Ensemble(format!(
                "m = {} exceeds the {} maximum of {max} for n = {}, k = {}",
                self.m, self.kind, self.n, self.k
            )));
        }
        if self.kind.is_maximal() && self.m != max {
            return Err(Error::Ensemble(format!(
                "{} requires m = {max}, got {}",
                self.kind, self.m
            )));
        }
        if let Some(s) = self.solution {
            if s > full_mask(self.n) {
                return Err(Error::input(format!("solution {s} out of range")));
            }
        }
        Ok(())
    }

    pub fn to_config(&self) -> String {
        let mut out = format!(
            "n = {}\nk = {}\nm = {}\nkind = {}\nseed = {}\n",
            self.n, self.k, self.m, self.kind, self.seed
        );
        if let Some(s) = self.solution {
            out.push_str(&format!("solution = {}\n", crate::sat::format_bits(s, self.n)));
        }
        out
    }

    /// Parse a `key = value` block. `m` may be omitted (or `max`) for the
    /// maximally constrained kinds; `solution` is a bit string, `V_n` first.
    pub fn from_config(text: &str) -> Result<Self> {
        let entries = kv::parse(text)?;
        let get = |key: &str| entries.iter().find(|e| e.key == key);
        let need = |key: &str| get(key).ok_or_else(|| Error::parse(0, format!("missing key `{key}`")));
        if let Some(e) = entries
            .iter()
            .find(|e| !["n", "k", "m", "kind", "seed", "solution"].contains(&e.key.as_str()))
        {
            return Err(Error::parse(e.line, format!("unknown key `{}`", e.key)));
        }
        let n: u32 = kv::value(need("n")?)?;
        let k: u32 = kv::value(need("k")?)?;
        let kind: EnsembleKind = kv::value(need("kind")?)?;
        let seed: u64 = match get("seed") {
            Some(e) => kv::value(e)?,
            None => 0,
        };
        let m = match get("m") {
            Some(e) if e.value != "max" => kv::value(e)?,
            _ if kind.is_maximal() || get("m").is_some() => kind.max_clauses(n, k)?,
            _ => return Err(Error::parse(0, "missing key `m`")),
        };
        let mut spec = EnsembleSpec::new(n, k, m, kind, seed)?;
        if let Some(e) = get("solution") {
            let (s, width) = crate::sat::parse_bits(&e.value)
                .ok_or_else(|| Error::parse(e.line, "solution must be a bit string"))?;
            if width != n {
                return Err(Error::parse(e.line, format!("solution has {width} bits, n = {n}")));
            }
            spec = spec.with_solution(s)?;
        }
        Ok(spec)
    }
}

/// Draw an instance: the planted solution (if unspecified) and then `m`
/// distinct allowed clauses uniformly without replacement.
pub fn generate(spec: &EnsembleSpec) -> Result<SatInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let solution = match spec.solution {
        Some(s) => s,
        None => rng.random_range(0..=full_mask(spec.n)),
    };
    let allowed = AllowedClauses::new(spec.n, spec.k, solution, spec.kind.is_balanced())?;
    let clauses = if spec.m == allowed.len() {
        enumerate_allowed_clauses(spec.n, spec.k, solution, spec.kind.is_balanced())?
    } else {
        let total = usize::try_from(allowed.len())
            .map_err(|_| Error::Resource("allowed clause count exceeds usize".into()))?;
        let mut idx = rand::seq::index::sample(&mut rng, total, spec.m as usize).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| allowed.clause_at(i as u64)).collect()
    };
    SatInstance::new(spec.n, spec.k, clauses, Some(solution))
}

/// All satisfying assignments, ascending. Refuses `n` above `cap`.
pub fn brute_force_solutions(inst: &SatInstance, cap: u32) -> Result<Vec<Assignment>> {
    inst.check_cap(cap)?;
    Ok((0..=full_mask(inst.n()))
        .filter(|&a| inst.clauses().iter().all(|c| !c.conflicts_with(a)))
        .collect())
}
