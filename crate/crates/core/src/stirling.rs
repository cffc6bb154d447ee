//! Unsigned Stirling numbers of the first kind.
//!
//! `s(n, j)` counts permutations of `n` elements with exactly `j` cycles and
//! satisfies `s(n + 1, j) = n s(n, j) + s(n, j - 1)`. The numbers are the
//! exponents that turn a product of bigeometric derivatives into a geometric
//! derivative, so they are kept as exact integers.

use crate::{Error, Result};

/// Largest `n` for which the table is kept in exact 64-bit arithmetic.
/// `s(20, 1) = 19!` is the largest first-column entry in range.
pub const MAX_EXACT_N: usize = 20;

/// Triangular table of `s(n, j)` for `0 <= j <= n <= max_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirlingTable {
    max_n: usize,
    rows: Vec<Vec<u64>>,
}

impl StirlingTable {
    pub fn new(max_n: usize) -> Result<Self> {
        if max_n > MAX_EXACT_N {
            return Err(Error::StirlingOverflow {
                n: max_n,
                j: 1,
                max: MAX_EXACT_N,
            });
        }
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![1]);
        for n in 0..max_n {
            let prev = &rows[n];
            let mut next = vec![0u64; n + 2];
            for (j, slot) in next.iter_mut().enumerate().skip(1) {
                let stay = prev.get(j).copied().unwrap_or(0);
                let join = prev[j - 1];
                // The cap guarantees no overflow; checked ops keep that honest.
                *slot = (n as u64)
                    .checked_mul(stay)
                    .and_then(|v| v.checked_add(join))
                    .ok_or(Error::StirlingOverflow {
                        n: n + 1,
                        j,
                        max: MAX_EXACT_N,
                    })?;
            }
            rows.push(next);
        }
        Ok(Self { max_n, rows })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn get(&self, n: usize, j: usize) -> Result<u64> {
        if j > n {
            return Err(Error::InvalidArgument(format!(
                "stirling number requires j <= n, got n = {n}, j = {j}"
            )));
        }
        if n > self.max_n {
            return Err(Error::InvalidArgument(format!(
                "n = {n} exceeds table size {}",
                self.max_n
            )));
        }
        Ok(self.rows[n][j])
    }

    /// Row `n`, i.e. `[s(n, 0), ..., s(n, n)]`.
    pub fn row(&self, n: usize) -> Option<&[u64]> {
        self.rows.get(n).map(Vec::as_slice)
    }
}

/// Unsigned Stirling number of the first kind `s(n, j)`.
///
/// Arguments are signed so that negative input can be rejected rather than
/// wrapped.
pub fn stirling_unsigned(n: i64, j: i64) -> Result<u64> {
    if n < 0 || j < 0 {
        return Err(Error::InvalidArgument(format!(
            "stirling arguments must be non-negative, got n = {n}, j = {j}"
        )));
    }
    if j > n {
        return Err(Error::InvalidArgument(format!(
            "stirling number requires j <= n, got n = {n}, j = {j}"
        )));
    }
    let (n, j) = (n as usize, j as usize);
    if n > MAX_EXACT_N {
        return Err(Error::StirlingOverflow {
            n,
            j,
            max: MAX_EXACT_N,
        });
    }
    StirlingTable::new(n)?.get(n, j)
}

/// Truncated generating series `sum_{j=m}^{N} (-1)^{j-m} s(j,m) u^j / j!`.
///
/// Converges to `(ln(1+u))^m / m!` for `|u| < 1`. The terms are carried as
/// `s(j,m)/j!`, which obey `c(j+1,m) = (j c(j,m) + c(j,m-1)) / (j+1)` and stay
/// bounded, so `N` is not limited by the exact integer range.
pub fn stirling_log_series(m: usize, u: f64, terms: usize) -> Result<f64> {
    if !(u.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "series requires |u| < 1, got u = {u}"
        )));
    }
    if terms < m {
        return Err(Error::InvalidArgument(format!(
            "series needs N >= m, got N = {terms}, m = {m}"
        )));
    }
    // column[k] = s(j, k) / j! for the current j, k = 0..=m
    let mut column = vec![0.0f64; m + 1];
    column[0] = 1.0;
    let mut power = 1.0; // u^j
    let mut sum = 0.0;
    for j in 0..=terms {
        if j >= m {
            let sign = if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * column[m] * power;
        }
        if j == terms {
            break;
        }
        let jf = j as f64;
        for k in (0..=m).rev() {
            let join = if k > 0 { column[k - 1] } else { 0.0 };
            column[k] = (jf * column[k] + join) / (jf + 1.0);
        }
        power *= u;
    }
    Ok(sum)
}
