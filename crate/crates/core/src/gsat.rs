//! GSAT local search baseline.
//!
//! Each step flips the variable whose flip gives the largest drop in the
//! conflict count, breaking ties uniformly at random. Sideways and uphill
//! flips are taken when nothing improves. A try ends after
//! `max_flips_per_try` flips, and the next try restarts from a fresh random
//! assignment.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::ensembles::{generate, EnsembleSpec};
use crate::sat::{full_mask, Assignment, SatInstance};
use crate::{Error, Result};

/// Policy strings echoed into result metadata.
pub const TIE_POLICY: &str = "uniform_random";
pub const SIDEWAYS_POLICY: &str = "always_flip_best";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GsatConfig {
    /// `None` means `2n`.
    pub max_flips_per_try: Option<u64>,
    pub max_tries: u64,
    pub seed: u64,
}

impl Default for GsatConfig {
    fn default() -> Self {
        GsatConfig { max_flips_per_try: None, max_tries: 100, seed: 0 }
    }
}

impl GsatConfig {
    pub fn with_seed(seed: u64) -> Self {
        GsatConfig { seed, ..Self::default() }
    }

    pub fn flips_per_try(&self, n: u32) -> u64 {
        self.max_flips_per_try.unwrap_or(2 * u64::from(n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_tries == 0 || self.max_flips_per_try == Some(0) {
            return Err(Error::input("GSAT needs max_tries >= 1 and max_flips_per_try >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GsatOutcome {
    pub solved: bool,
    /// Variable flips over all tries.
    pub flips: u64,
    /// Random initialisations performed.
    pub tries: u64,
    /// `flips + tries`.
    pub total_steps: u64,
    /// `tries·n` value choices spent on initialisation.
    pub init_cost: u64,
    pub assignment: Option<Assignment>,
}

/// One flip decision: the assignment before the flip, all variables tied for
/// the best conflict change, and the variable flipped (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub before: Assignment,
    pub best: Vec<u32>,
    pub flipped: u32,
}

/// Change in conflict count from flipping each variable.
pub fn flip_deltas(inst: &SatInstance, a: Assignment) -> Vec<i64> {
    let mut delta = vec![0i64; inst.n() as usize];
    for clause in inst.clauses() {
        let diff = (a ^ clause.falsifying_bits()) & clause.mask();
        match diff.count_ones() {
            0 => {
                let mut bits = clause.mask();
                while bits != 0 {
                    delta[bits.trailing_zeros() as usize] -= 1;
                    bits &= bits - 1;
                }
            }
            1 => delta[diff.trailing_zeros() as usize] += 1,
            _ => {}
        }
    }
    delta
}

fn run(inst: &SatInstance, cfg: &GsatConfig, mut trace: Option<&mut Vec<TraceStep>>) -> Result<GsatOutcome> {
    cfg.validate()?;
    let n = inst.n();
    let per_try = cfg.flips_per_try(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut flips = 0u64;
    for t in 1..=cfg.max_tries {
        let mut a: Assignment = rng.random::<u64>() & full_mask(n);
        let mut cost = inst.conflicts(a);
        let mut used = 0;
        while cost != 0 && used < per_try && n > 0 {
            let delta = flip_deltas(inst, a);
            let low = *delta.iter().min().expect("n > 0");
            let best: Vec<u32> = (0..n).filter(|&v| delta[v as usize] == low).collect();
            let v = best[rng.random_range(0..best.len())];
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TraceStep { before: a, best, flipped: v });
            }
            a ^= 1 << v;
            cost = (i64::from(cost) + low) as u32;
            used += 1;
        }
        flips += used;
        if cost == 0 {
            return Ok(GsatOutcome {
                solved: true,
                flips,
                tries: t,
                total_steps: flips + t,
                init_cost: t * u64::from(n),
                assignment: Some(a),
            });
        }
    }
    let tries = cfg.max_tries;
    Ok(GsatOutcome {
        solved: false,
        flips,
        tries,
        total_steps: flips + tries,
        init_cost: tries * u64::from(n),
        assignment: None,
    })
}

pub fn gsat_solve(inst: &SatInstance, cfg: &GsatConfig) -> Result<GsatOutcome> {
    run(inst, cfg, None)
}

/// As [`gsat_solve`], also returning every flip decision.
pub fn gsat_solve_traced(inst: &SatInstance, cfg: &GsatConfig) -> Result<(GsatOutcome, Vec<TraceStep>)> {
    let mut trace = Vec::new();
    let out = run(inst, cfg, Some(&mut trace))?;
    Ok((out, trace))
}

/// GSAT seed for an instance: the run seed offset by the instance seed.
pub fn instance_seed(cfg: &GsatConfig, spec_seed: u64) -> u64 {
    cfg.seed.wrapping_add(spec_seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub n: u32,
    pub instances: usize,
    /// Flip counts; unsolved instances count at the full flip budget.
    pub median_flips: f64,
    pub q1_flips: f64,
    pub q3_flips: f64,
    pub median_total_steps: f64,
    /// Instances not solved within the budget.
    pub censored: usize,
}

/// Per-`n` flip statistics over the instances drawn from `specs`.
pub fn median_cost(specs: &[EnsembleSpec], cfg: &GsatConfig) -> Result<Vec<MedianRow>> {
    cfg.validate()?;
    let outcomes: Vec<(u32, GsatOutcome)> = specs
        .par_iter()
        .map(|spec| {
            let inst = generate(spec)?;
            let run_cfg = GsatConfig { seed: instance_seed(cfg, spec.seed), ..*cfg };
            Ok((spec.n, gsat_solve(&inst, &run_cfg)?))
        })
        .collect::<Result<_>>()?;
    let mut by_n: BTreeMap<u32, Vec<&GsatOutcome>> = BTreeMap::new();
    for (n, out) in &outcomes {
        by_n.entry(*n).or_default().push(out);
    }
    Ok(by_n
        .into_iter()
        .map(|(n, outs)| {
            let mut flips = Data::new(outs.iter().map(|o| o.flips as f64).collect::<Vec<_>>());
            let steps = Data::new(outs.iter().map(|o| o.total_steps as f64).collect::<Vec<_>>());
            MedianRow {
                n,
                instances: outs.len(),
                median_flips: flips.median(),
                q1_flips: flips.lower_quartile(),
                q3_flips: flips.upper_quartile(),
                median_total_steps: steps.median(),
                censored: outs.iter().filter(|o| !o.solved).count(),
            }
        })
        .collect())
}
