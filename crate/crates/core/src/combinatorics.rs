//! Exact counting and enumeration of count vectors.

use crate::error::{Error, Result};

/// `C(n, r)` in checked 128-bit arithmetic.
pub fn binomial(n: u64, r: u64) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) is divisible by (i + 1) after the multiply.
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or(Error::Overflow("binomial coefficient"))?
            / u128::from(i + 1);
    }
    Ok(acc)
}

/// Number of size-`n` multisets drawn from `k` symbols, `C(k + n - 1, n)`.
pub fn multiset_coefficient(k: u64, n: u64) -> Result<u128> {
    if k == 0 {
        return Ok(u128::from(n == 0));
    }
    binomial(k + n - 1, n)
}

/// All vectors of `k` nonnegative integers summing to `n`, in ascending
/// lexicographic order (`[0, .., 0, n]` first, `[n, 0, .., 0]` last).
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u32>>,
}

impl Compositions {
    pub fn new(n: u32, k: usize) -> Self {
        let current = (k > 0).then(|| {
            let mut v = vec![0; k];
            v[k - 1] = n;
            v
        });
        Self { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.take()?;
        let mut c = out.clone();
        if advance(&mut c) {
            self.current = Some(c);
        }
        Some(out)
    }
}

fn advance(c: &mut [u32]) -> bool {
    let k = c.len();
    let mut tail = c[k - 1];
    let mut i = k - 1;
    while i > 0 {
        i -= 1;
        if tail > 0 {
            c[i] += 1;
            for x in &mut c[i + 1..k - 1] {
                *x = 0;
            }
            c[k - 1] = tail - 1;
            return true;
        }
        tail += c[i];
    }
    false
}
