//! State-vector engine for the single-step search `φ = U·R·ψ`.
//!
//! All phases are powers of `i` and come from exact lookup tables, so the
//! only rounding in a step is the `2^(-n/2)` scaling and the additions of
//! the Walsh butterflies.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::ensembles::brute_force_solutions;
use crate::estimators::{Estimator, EstimatorKind};
use crate::sat::{hamming_distance, SatInstance};
use crate::{Error, Result, DEFAULT_STATE_CAP};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `i^r` for `r = 0..4`.
pub const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `(-i)^r` for `r = 0..4`.
pub const NEG_I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, -1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
];

#[inline]
pub fn i_pow(c: u32) -> Complex64 {
    I_POW[(c & 3) as usize]
}

#[inline]
pub fn neg_i_pow(d: u32) -> Complex64 {
    NEG_I_POW[(d & 3) as usize]
}

/// `e^(-iπn/4)` from its eight exact values.
pub fn global_phase(n: u32) -> Complex64 {
    let s = FRAC_1_SQRT_2;
    match n % 8 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(s, -s),
        2 => Complex64::new(0.0, -1.0),
        3 => Complex64::new(-s, -s),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-s, s),
        6 => Complex64::new(0.0, 1.0),
        _ => Complex64::new(s, s),
    }
}

/// `Γ` multipliers `γ_h = i^h·e^(-iπn/4)` for `h = 0..=n`.
pub fn gamma_phases(n: u32) -> Vec<Complex64> {
    let g = global_phase(n);
    (0..=n).map(|h| i_pow(h) * g).collect()
}

/// `2^(-n/2)`, exact for even `n`.
pub fn inv_sqrt_dim(n: u32) -> f64 {
    let half = f64::from(n / 2);
    let base = (-half).exp2();
    if n % 2 == 1 {
        base * FRAC_1_SQRT_2
    } else {
        base
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: u32,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_n(n: u32, cap: u32) -> Result<()> {
        if n == 0 {
            return Err(Error::input("state vector needs n >= 1"));
        }
        if n > cap {
            return Err(Error::Resource(format!(
                "n = {n} exceeds the state-vector cap of {cap}"
            )));
        }
        Ok(())
    }

    pub fn uniform(n: u32) -> Result<Self> {
        Self::uniform_with_cap(n, DEFAULT_STATE_CAP)
    }

    pub fn uniform_with_cap(n: u32, cap: u32) -> Result<Self> {
        Self::check_n(n, cap)?;
        let a = Complex64::new(inv_sqrt_dim(n), 0.0);
        Ok(StateVector { n, amps: vec![a; 1 << n] })
    }

    /// The classical state `|index⟩`.
    pub fn basis(n: u32, index: u64) -> Result<Self> {
        Self::check_n(n, DEFAULT_STATE_CAP)?;
        if index >> n != 0 {
            return Err(Error::input(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index as usize] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Wrap raw amplitudes; the length must be `2^n` and the norm 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::input(format!("length {len} is not 2^n with n >= 1")));
        }
        let state = StateVector { n: len.trailing_zeros(), amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::input(format!("squared norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps[index as usize]
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amps[index as usize].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiply amplitude `s` by `i^(conflicts[s] mod 4)`.
    pub fn apply_phase(&mut self, conflicts: &[u32]) {
        assert_eq!(conflicts.len(), self.amps.len(), "conflict table length");
        for (a, &c) in self.amps.iter_mut().zip(conflicts) {
            *a *= i_pow(c);
        }
    }

    /// In-place normalised Walsh transform,
    /// `φ_r = 2^(-n/2) Σ_s (-1)^|r∧s| ψ_s`.
    pub fn walsh_transform(&mut self) {
        fwht(&mut self.amps);
        let scale = inv_sqrt_dim(self.n);
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    /// Multiply amplitude `r` by `γ_|r|`.
    pub fn apply_gamma(&mut self) {
        let gamma = gamma_phases(self.n);
        for (r, a) in self.amps.iter_mut().enumerate() {
            *a *= gamma[r.count_ones() as usize];
        }
    }

    /// The mixing operator `U = W·Γ·W`.
    pub fn apply_mixing(&mut self) {
        self.walsh_transform();
        self.apply_gamma();
        self.walsh_transform();
    }

    /// `index,real,imag` rows for debugging.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,real,imag\n");
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(out, "{i},{:.12e},{:.12e}", a.re, a.im);
        }
        out
    }
}

/// Unnormalised in-place Walsh-Hadamard butterfly over a power-of-two slice.
pub fn fwht(data: &mut [Complex64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
}

pub fn uniform_superposition(n: u32) -> Result<StateVector> {
    StateVector::uniform(n)
}

pub fn apply_phase_r(mut state: StateVector, conflicts: &[u32]) -> StateVector {
    state.apply_phase(conflicts);
    state
}

pub fn walsh_transform(mut state: StateVector) -> StateVector {
    state.walsh_transform();
    state
}

pub fn apply_gamma(mut state: StateVector) -> StateVector {
    state.apply_gamma();
    state
}

pub fn apply_u(mut state: StateVector) -> StateVector {
    state.apply_mixing();
    state
}

/// `φ = U·R·ψ` for a given table of effective conflict counts.
pub fn single_step_from_ceff(n: u32, ceff: &[u32]) -> Result<StateVector> {
    let mut state = StateVector::uniform(n)?;
    state.apply_phase(ceff);
    state.apply_mixing();
    Ok(state)
}

/// Result of one run of the algorithm with its bookkeeping.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: StateVector,
    /// Per-assignment conflict counts from the single oracle pass.
    pub conflicts: Vec<u32>,
    /// Per-assignment `c_eff` driving the phase step.
    pub ceff: Vec<u32>,
    /// Number of passes of the conflict oracle over the assignments.
    pub oracle_passes: usize,
}

pub fn run_single_step_detailed(
    inst: &SatInstance,
    kind: EstimatorKind,
) -> Result<StepOutcome> {
    let estimator = Estimator::prepare(kind, inst)?;
    let conflicts = inst.conflict_table()?;
    let ceff = estimator.ceff_table(&conflicts);
    let state = single_step_from_ceff(inst.n(), &ceff)?;
    Ok(StepOutcome { state, conflicts, ceff, oracle_passes: 1 })
}

pub fn run_single_step(inst: &SatInstance, kind: EstimatorKind) -> Result<StateVector> {
    run_single_step_detailed(inst, kind).map(|o| o.state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionProbability {
    pub p: f64,
    pub solutions: Vec<u64>,
}

impl SolutionProbability {
    pub fn soluble(&self) -> bool {
        !self.solutions.is_empty()
    }
}

/// Total probability of measuring a satisfying assignment (0 and no
/// solutions listed for an insoluble instance).
pub fn p_solution(state: &StateVector, inst: &SatInstance) -> Result<SolutionProbability> {
    if state.n() != inst.n() {
        return Err(Error::input(format!(
            "state has n = {}, instance has n = {}",
            state.n(),
            inst.n()
        )));
    }
    let solutions = brute_force_solutions(inst, DEFAULT_STATE_CAP)?;
    let p = solutions.iter().map(|&s| state.probability(s)).sum::<f64>().min(1.0);
    Ok(SolutionProbability { p, solutions })
}

/// Dense `U` from its closed form `U_rs = 2^(-n/2)·(-i)^d(r,s)`, row-major.
pub fn dense_mixing_closed_form(n: u32) -> Result<Vec<Complex64>> {
    StateVector::check_n(n, 12)?;
    let dim = 1u64 << n;
    let scale = inv_sqrt_dim(n);
    Ok((0..dim)
        .flat_map(|r| (0..dim).map(move |s| neg_i_pow(hamming_distance(r, s)) * scale))
        .collect())
}

/// Dense `W·Γ·W`, built column by column by applying the fast operators to
/// basis vectors; row-major.
pub fn dense_mixing_factored(n: u32) -> Result<Vec<Complex64>> {
    StateVector::check_n(n, 12)?;
    let dim = 1usize << n;
    let mut out = vec![ZERO; dim * dim];
    for s in 0..dim {
        let mut col = StateVector::basis(n, s as u64)?;
        col.apply_mixing();
        for (r, a) in col.amps.iter().enumerate() {
            out[r * dim + s] = *a;
        }
    }
    Ok(out)
}

/// The register superposition `Ψ = ½(|0⟩ − i|1⟩ − |2⟩ + i|3⟩)`.
pub fn register_superposition() -> [Complex64; 4] {
    [0.5 * NEG_I_POW[0], 0.5 * NEG_I_POW[1], 0.5 * NEG_I_POW[2], 0.5 * NEG_I_POW[3]]
}

/// Build `Ψ` from `|11⟩` with two single-bit gates: the mixing matrix
/// `(1 1; 1 −1)/√2` on the high bit, then `(−i 1; 1 −i)/√2` on the low bit.
pub fn prepare_register_superposition() -> [Complex64; 4] {
    let s = FRAC_1_SQRT_2;
    let h = [[ONE * s, ONE * s], [ONE * s, -ONE * s]];
    let g = [
        [Complex64::new(0.0, -s), ONE * s],
        [ONE * s, Complex64::new(0.0, -s)],
    ];
    let mut reg = [ZERO; 4];
    reg[3] = ONE;
    apply_single_bit(&mut reg, 1, &h);
    apply_single_bit(&mut reg, 0, &g);
    reg
}

fn apply_single_bit(reg: &mut [Complex64; 4], bit: usize, gate: &[[Complex64; 2]; 2]) {
    let stride = 1 << bit;
    for base in 0..4 {
        if base & stride != 0 {
            continue;
        }
        let (a0, a1) = (reg[base], reg[base | stride]);
        reg[base] = gate[0][0] * a0 + gate[0][1] * a1;
        reg[base | stride] = gate[1][0] * a0 + gate[1][1] * a1;
    }
}

/// Outcome of simulating the phase step with a two-qubit work register.
#[derive(Clone, Debug)]
pub struct RegisterTrick {
    pub main: StateVector,
    pub register: [Complex64; 4],
    /// `‖joint − main ⊗ register‖₂` after the reversible addition.
    pub residual: f64,
}

/// Residual above which the joint state is not considered a product state.
pub const FACTOR_RESIDUAL_TOL: f64 = 1e-12;

/// Simulate the joint `(n+2)`-bit system: tensor `state` with `Ψ`, apply
/// `|s, x⟩ → |s, x + c(s) mod 4⟩`, and factor the result back into a main
/// register and `Ψ`.
pub fn register_phase_trick(state: &StateVector, conflicts: &[u32]) -> Result<RegisterTrick> {
    let dim = state.amps.len();
    if conflicts.len() != dim {
        return Err(Error::input("conflict table length differs from state length"));
    }
    let psi = register_superposition();
    // joint index = 4·s + x
    let mut joint = vec![ZERO; dim * 4];
    for (s, &a) in state.amps.iter().enumerate() {
        let c = conflicts[s] as usize;
        for (x, &r) in psi.iter().enumerate() {
            joint[4 * s + (x + c) % 4] = a * r;
        }
    }
    // project each block onto Ψ
    let main: Vec<Complex64> = joint
        .chunks_exact(4)
        .map(|block| block.iter().zip(&psi).map(|(b, r)| r.conj() * b).sum())
        .collect();
    let residual = joint
        .chunks_exact(4)
        .zip(&main)
        .flat_map(|(block, &m)| block.iter().zip(&psi).map(move |(b, r)| (b - m * r).norm_sqr()))
        .sum::<f64>()
        .sqrt();
    if residual > FACTOR_RESIDUAL_TOL {
        return Err(Error::Verification(format!(
            "joint state does not factor: residual {residual:e}"
        )));
    }
    Ok(RegisterTrick {
        main: StateVector { n: state.n, amps: main },
        register: psi,
        residual,
    })
}
