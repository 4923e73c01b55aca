//! Integer combinatorics shared by the ensemble and estimator code.

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
///
/// Exact for every result that fits in a `u64`; panics on overflow.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// Natural log of `C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else {
        statrs::function::factorial::ln_binomial(n, k)
    }
}

/// Lexicographic rank of a strictly increasing `k`-combination of `0..n`.
pub fn combination_rank(n: u32, combo: &[u32]) -> u64 {
    let k = combo.len() as u64;
    let mut rank = 0u64;
    let mut prev: i64 = -1;
    for (pos, &c) in combo.iter().enumerate() {
        let remaining = k - pos as u64 - 1;
        for skipped in (prev + 1) as u32..c {
            rank += binomial(u64::from(n - skipped - 1), remaining);
        }
        prev = i64::from(c);
    }
    rank
}

/// Inverse of [`combination_rank`]: the `rank`-th `k`-combination of `0..n`
/// in lexicographic order.
pub fn combination_unrank(n: u32, k: u32, mut rank: u64) -> Vec<u32> {
    let mut out = Vec::with_capacity(k as usize);
    let mut next = 0u32;
    for pos in 0..k {
        let remaining = u64::from(k - pos - 1);
        loop {
            let block = binomial(u64::from(n - next - 1), remaining);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Iterator over all `k`-combinations of `0..n` in lexicographic order.
pub fn combinations(n: u32, k: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = binomial(u64::from(n), u64::from(k));
    (0..total).map(move |r| combination_unrank(n, k, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(63, 31), 916_312_070_471_295_267);
    }

    #[test]
    fn pascal_rule() {
        for n in 1..40u64 {
            for k in 1..n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
        }
    }

    #[test]
    fn ln_binomial_matches_exact() {
        for n in 0..50u64 {
            for k in 0..=n {
                let exact = (binomial(n, k) as f64).ln();
                assert!((ln_binomial(n, k) - exact).abs() < 1e-9, "C({n},{k})");
            }
        }
        assert_eq!(ln_binomial(2, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn rank_unrank_roundtrip() {
        for n in 1..9u32 {
            for k in 0..=n {
                let all: Vec<_> = combinations(n, k).collect();
                assert_eq!(all.len() as u64, binomial(u64::from(n), u64::from(k)));
                for (r, c) in all.iter().enumerate() {
                    assert!(c.windows(2).all(|w| w[0] < w[1]));
                    assert_eq!(combination_rank(n, c), r as u64);
                }
                assert!(all.windows(2).all(|w| w[0] < w[1]), "lexicographic order");
            }
        }
    }
}
