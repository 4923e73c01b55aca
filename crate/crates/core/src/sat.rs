//! Assignments, clauses, instances and conflict counting.
//!
//! An assignment is the integer whose bit `i - 1` holds the value of
//! variable `V_i` (`V_1` is the least significant bit). A clause is stored
//! as the single pattern of its variables that falsifies it: `mask` selects
//! the clause's variables and `falsify` holds the falsifying values at those
//! positions, so `a` conflicts with the clause iff `a & mask == falsify`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use crate::{Error, Result};

/// An `n`-bit truth assignment; bit `i - 1` is variable `V_i`.
pub type Assignment = u64;

/// Largest supported variable count (assignments are `u64` bit strings).
pub const MAX_VARS: u32 = 63;

/// Bit mask with the low `n` bits set.
#[inline]
pub fn full_mask(n: u32) -> u64 {
    debug_assert!(n <= MAX_VARS);
    (1u64 << n) - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    mask: u64,
    falsify: u64,
}

impl Clause {
    /// Build a clause from strictly increasing 1-based variable indices and
    /// a `k`-bit falsifying pattern (bit `i` is the falsifying value of
    /// `vars[i]`).
    pub fn new(vars: &[u32], pattern: u64) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::input("clause needs at least one variable"));
        }
        if !vars.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input(format!(
                "clause variables must be strictly increasing, got {vars:?}"
            )));
        }
        if vars[0] == 0 || *vars.last().unwrap() > MAX_VARS {
            return Err(Error::input(format!("variable index out of range in {vars:?}")));
        }
        if vars.len() < 64 && pattern >> vars.len() != 0 {
            return Err(Error::input(format!(
                "pattern {pattern:#b} wider than {} variables",
                vars.len()
            )));
        }
        let mut mask = 0;
        let mut falsify = 0;
        for (i, &v) in vars.iter().enumerate() {
            let bit = 1u64 << (v - 1);
            mask |= bit;
            if pattern >> i & 1 == 1 {
                falsify |= bit;
            }
        }
        Ok(Clause { mask, falsify })
    }

    /// Build a clause from DIMACS-style literals (`+v` is `V_v`, `-v` is
    /// `NOT V_v`), in any order.
    pub fn from_literals(lits: &[i64]) -> Result<Self> {
        let mut mask = 0u64;
        let mut falsify = 0u64;
        for &lit in lits {
            let var = lit.unsigned_abs();
            if var == 0 || var > u64::from(MAX_VARS) {
                return Err(Error::input(format!("literal {lit} out of range")));
            }
            let bit = 1u64 << (var - 1);
            if mask & bit != 0 {
                return Err(Error::input(format!("variable {var} appears twice in clause")));
            }
            mask |= bit;
            // +v is false when V_v = 0, -v is false when V_v = 1
            if lit < 0 {
                falsify |= bit;
            }
        }
        if mask == 0 {
            return Err(Error::input("empty clause"));
        }
        Ok(Clause { mask, falsify })
    }

    /// Build a clause directly from a variable mask and the falsifying
    /// values at those positions.
    pub fn from_masks(mask: u64, falsify: u64) -> Self {
        debug_assert!(mask != 0 && falsify & !mask == 0);
        Clause { mask, falsify }
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Falsifying values placed at the clause's variable positions.
    #[inline]
    pub fn falsifying_bits(&self) -> u64 {
        self.falsify
    }

    pub fn width(&self) -> u32 {
        self.mask.count_ones()
    }

    /// 1-based variable indices, increasing.
    pub fn vars(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.width() as usize);
        let mut m = self.mask;
        while m != 0 {
            out.push(m.trailing_zeros() + 1);
            m &= m - 1;
        }
        out
    }

    /// The `k`-bit falsifying pattern, bit `i` for the `i`-th variable.
    pub fn pattern(&self) -> u64 {
        let mut out = 0;
        let mut m = self.mask;
        let mut i = 0;
        while m != 0 {
            let bit = m & m.wrapping_neg();
            if self.falsify & bit != 0 {
                out |= 1 << i;
            }
            i += 1;
            m &= m - 1;
        }
        out
    }

    pub fn literals(&self) -> Vec<i64> {
        self.vars()
            .into_iter()
            .map(|v| {
                let v = i64::from(v);
                if self.falsify >> (v - 1) & 1 == 1 {
                    -v
                } else {
                    v
                }
            })
            .collect()
    }

    /// True iff `a` restricted to the clause's variables is the falsifying
    /// pattern.
    #[inline]
    pub fn conflicts_with(&self, a: Assignment) -> bool {
        a & self.mask == self.falsify
    }

    fn max_var(&self) -> u32 {
        64 - self.mask.leading_zeros()
    }
}

impl Ord for Clause {
    /// Canonical order: variable lists lexicographically, then pattern.
    fn cmp(&self, other: &Self) -> Ordering {
        self.vars()
            .cmp(&other.vars())
            .then_with(|| self.pattern().cmp(&other.pattern()))
    }
}

impl PartialOrd for Clause {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A k-SAT instance with distinct clauses, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatInstance {
    n: u32,
    k: u32,
    clauses: Vec<Clause>,
    planted: Option<Assignment>,
}

impl SatInstance {
    pub fn new(
        n: u32,
        k: u32,
        mut clauses: Vec<Clause>,
        planted: Option<Assignment>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_VARS {
            return Err(Error::input(format!("n = {n} outside 1..={MAX_VARS}")));
        }
        if k == 0 || k > n {
            return Err(Error::input(format!("k = {k} outside 1..={n}")));
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        for c in &clauses {
            if c.width() != k {
                return Err(Error::input(format!(
                    "clause {:?} has width {}, expected {k}",
                    c.literals(),
                    c.width()
                )));
            }
            if c.max_var() > n {
                return Err(Error::input(format!(
                    "clause {:?} mentions a variable above n = {n}",
                    c.literals()
                )));
            }
            if !seen.insert(*c) {
                return Err(Error::input(format!("duplicate clause {:?}", c.literals())));
            }
        }
        if let Some(s) = planted {
            if s > full_mask(n) {
                return Err(Error::input(format!("planted solution {s} out of range")));
            }
            if let Some(c) = clauses.iter().find(|c| c.conflicts_with(s)) {
                return Err(Error::contract(format!(
                    "planted solution conflicts with clause {:?}",
                    c.literals()
                )));
            }
        }
        clauses.sort_unstable();
        Ok(SatInstance { n, k, clauses, planted })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn planted_solution(&self) -> Option<Assignment> {
        self.planted
    }

    /// Number of clauses falsified by `a`. `a` must lie in `[0, 2^n)`.
    pub fn conflicts(&self, a: Assignment) -> u32 {
        debug_assert!(a <= full_mask(self.n));
        self.clauses.iter().filter(|c| c.conflicts_with(a)).count() as u32
    }

    /// Conflict counts for every assignment, indexed by assignment.
    ///
    /// Each clause adds one to the `2^(n-k)` assignments that agree with its
    /// falsifying pattern, so the cost is `m·2^(n-k)` rather than `m·2^n`.
    pub fn conflict_table(&self) -> Result<Vec<u32>> {
        self.check_cap(crate::DEFAULT_STATE_CAP)?;
        let full = full_mask(self.n);
        let mut table = vec![0u32; 1usize << self.n];
        for c in &self.clauses {
            let free = full & !c.mask;
            let mut sub = 0u64;
            loop {
                table[(sub | c.falsify) as usize] += 1;
                // next submask of `free`
                sub = sub.wrapping_sub(free) & free;
                if sub == 0 {
                    break;
                }
            }
        }
        Ok(table)
    }

    pub(crate) fn check_cap(&self, cap: u32) -> Result<()> {
        if self.n > cap {
            Err(Error::Resource(format!(
                "n = {} exceeds the enumeration cap of {cap}",
                self.n
            )))
        } else {
            Ok(())
        }
    }
}

pub fn clause_conflicts(clause: &Clause, a: Assignment, n: u32) -> Result<bool> {
    if n > MAX_VARS || clause.max_var() > n {
        return Err(Error::input(format!(
            "clause {:?} mentions a variable above n = {n}",
            clause.literals()
        )));
    }
    if a > full_mask(n) {
        return Err(Error::input(format!("assignment {a} out of range for n = {n}")));
    }
    Ok(clause.conflicts_with(a))
}

pub fn conflict_count(inst: &SatInstance, a: Assignment) -> Result<u32> {
    if a > full_mask(inst.n) {
        return Err(Error::input(format!(
            "assignment {a} out of range for n = {}",
            inst.n
        )));
    }
    Ok(inst.conflicts(a))
}

#[inline]
pub fn popcount(a: Assignment) -> u32 {
    a.count_ones()
}

#[inline]
pub fn hamming_distance(r: Assignment, s: Assignment) -> u32 {
    (r ^ s).count_ones()
}

/// The `n` assignments at Hamming distance one from `a`, flipping bit 0
/// first.
pub fn neighbors(a: Assignment, n: u32) -> Vec<Assignment> {
    (0..n).map(|i| a ^ (1 << i)).collect()
}

#[inline]
pub fn complement(a: Assignment, n: u32) -> Assignment {
    !a & full_mask(n)
}

/// `n`-character bit string, most significant variable (`V_n`) first.
pub fn format_bits(a: Assignment, n: u32) -> String {
    (0..n).rev().map(|i| if a >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<(Assignment, u32)> {
    let n = s.len() as u32;
    if n == 0 || n > MAX_VARS || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return None;
    }
    u64::from_str_radix(s, 2).ok().map(|a| (a, n))
}

/// Parse a DIMACS CNF file whose clauses all have the same width.
///
/// Recognised comments: `c planted <bits>` records a known solution and
/// `c width <k>` fixes the clause width (needed only for empty formulas).
pub fn parse_dimacs(text: &str) -> Result<SatInstance> {
    let mut header: Option<(u32, usize, usize)> = None;
    let mut planted: Option<(Assignment, usize)> = None;
    let mut declared_width: Option<u32> = None;
    let mut clauses: Vec<(Clause, usize)> = Vec::new();
    let mut pending: Vec<i64> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
                return Err(Error::parse(line_no, format!("unexpected token `{line}`")));
            }
            let mut words = rest.split_whitespace();
            match words.next() {
                Some("planted") => {
                    let bits = words
                        .next()
                        .and_then(parse_bits)
                        .ok_or_else(|| Error::parse(line_no, "malformed planted solution"))?;
                    planted = Some((bits.0, line_no));
                }
                Some("width") => {
                    let k = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| Error::parse(line_no, "malformed width comment"))?;
                    declared_width = Some(k);
                }
                _ => {}
            }
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate problem line"));
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() != 4 || words[0] != "p" || words[1] != "cnf" {
                return Err(Error::parse(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let n: u32 = words[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad variable count"))?;
            let m: usize = words[3]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad clause count"))?;
            if n == 0 || n > MAX_VARS {
                return Err(Error::parse(line_no, format!("n = {n} outside 1..={MAX_VARS}")));
            }
            header = Some((n, m, line_no));
            continue;
        }
        let Some((n, _, _)) = header else {
            return Err(Error::parse(line_no, "clause before problem line"));
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad literal `{tok}`")))?;
            if pending.is_empty() {
                pending_line = line_no;
            }
            if lit == 0 {
                let clause = Clause::from_literals(&pending)
                    .map_err(|e| Error::parse(pending_line, e.to_string()))?;
                if clause.max_var() > n {
                    return Err(Error::parse(
                        pending_line,
                        format!("literal beyond declared n = {n}"),
                    ));
                }
                clauses.push((clause, pending_line));
                pending.clear();
            } else {
                pending.push(lit);
            }
        }
    }

    let (n, m, header_line) = header.ok_or_else(|| Error::parse(1, "missing problem line"))?;
    if !pending.is_empty() {
        return Err(Error::parse(pending_line, "clause not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(Error::parse(
            header_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    let k = match (clauses.first(), declared_width) {
        (Some((c, _)), _) => c.width(),
        (None, Some(k)) => k,
        (None, None) => 1,
    };
    let mut seen = HashSet::with_capacity(clauses.len());
    for (c, line) in &clauses {
        if c.width() != k {
            return Err(Error::parse(
                *line,
                format!("clause width {} differs from k = {k}", c.width()),
            ));
        }
        if !seen.insert(*c) {
            return Err(Error::parse(*line, "duplicate clause"));
        }
    }
    if k > n {
        return Err(Error::parse(header_line, format!("clause width {k} exceeds n = {n}")));
    }
    if let Some((s, line)) = planted {
        if s > full_mask(n) {
            return Err(Error::parse(line, "planted solution wider than n"));
        }
        if clauses.iter().any(|(c, _)| c.conflicts_with(s)) {
            return Err(Error::parse(line, "planted solution violates a clause"));
        }
    }
    SatInstance::new(
        n,
        k,
        clauses.into_iter().map(|(c, _)| c).collect(),
        planted.map(|p| p.0),
    )
}

pub fn emit_dimacs(inst: &SatInstance) -> String {
    let mut out = String::new();
    if let Some(s) = inst.planted {
        let _ = writeln!(out, "c planted {}", format_bits(s, inst.n));
    }
    if inst.clauses.is_empty() {
        let _ = writeln!(out, "c width {}", inst.k);
    }
    let _ = writeln!(out, "p cnf {} {}", inst.n, inst.clauses.len());
    for c in &inst.clauses {
        for lit in c.literals() {
            let _ = write!(out, "{lit} ");
        }
        out.push_str("0\n");
    }
    out
}
