//! Shared trial-division oracle, independent of the sieve under test.

use smoothdist::SmoothWindow;

/// Smallest and largest prime factor by trial division; `(1, 1)` for 1.
pub fn extreme_factors(mut n: u64) -> (u64, u64) {
    if n <= 1 {
        return (n, n);
    }
    let mut spf = 0u64;
    let mut lpf = 0u64;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            if spf == 0 {
                spf = d;
            }
            lpf = d;
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        if spf == 0 {
            spf = n;
        }
        lpf = n;
    }
    (spf, lpf)
}

pub fn member(n: u64, w: &SmoothWindow) -> bool {
    if n == 1 {
        return true;
    }
    if n == 0 {
        return false;
    }
    let (spf, lpf) = extreme_factors(n);
    (spf as f64) >= w.y_lo() && (lpf as f64) <= w.y_hi()
}

#[allow(dead_code)]
pub fn psi(x: u64, w: &SmoothWindow) -> u64 {
    (1..=x).filter(|&n| member(n, w)).count() as u64
}
