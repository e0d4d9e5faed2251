//! Segmented sieving of smallest/largest prime factors and the exact
//! counting functions built on top of it.
//!
//! Everything downstream (estimates, weights, Weyl sums, censuses) treats
//! the counts produced here as ground truth, so this module is deliberately
//! boring: one sieve, checked against trial division, streamed in segments
//! so that ranges up to 10^9 never materialize a full table.
//!
//! A window `[y_lo, y_hi]` selects integers all of whose prime factors lie
//! in that closed interval; `1` qualifies vacuously. Counts over `[1, x]`
//! fold per-segment tallies in segment order, which keeps results identical
//! between the sequential and parallel engines.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use serde::Serialize;

/// Default number of integers per sieve segment.
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 22;

/// Counts are exact 64-bit; arguments beyond this are rejected outright.
pub const MAX_X: u64 = (1 << 63) - 1;

/// Largest base prime the default configuration will sieve with, which
/// caps `range_hi` at roughly `BASE_PRIME_LIMIT^2`.
pub const BASE_PRIME_LIMIT: u64 = 1 << 26;

/// The pair `(y', y)` defining the set of integers whose prime factors all
/// lie in the closed interval `[y', y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothWindow {
    y_lo: f64,
    y_hi: f64,
}

impl SmoothWindow {
    pub fn new(y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(y_lo.is_finite() && y_hi.is_finite()) || y_lo < 1.0 {
            return Err(Error::domain(format!(
                "window bounds must be finite with y_lo >= 1, got ({y_lo}, {y_hi})"
            )));
        }
        if y_lo > y_hi {
            return Err(Error::domain(format!(
                "window requires y_lo <= y_hi, got ({y_lo}, {y_hi})"
            )));
        }
        Ok(SmoothWindow { y_lo, y_hi })
    }

    pub fn y_lo(&self) -> f64 {
        self.y_lo
    }

    pub fn y_hi(&self) -> f64 {
        self.y_hi
    }

    /// Inclusive at both ends: a prime `p` is admissible iff `y' <= p <= y`.
    #[inline]
    pub fn admits_prime(&self, p: u64) -> bool {
        (p as f64) >= self.y_lo && (p as f64) <= self.y_hi
    }

    /// Membership decided from the extreme prime factors of `n`.
    #[inline]
    pub fn member_from_factors(&self, n: u64, spf: u64, lpf: u64) -> bool {
        if n == 1 {
            return true;
        }
        if n == 0 {
            return false;
        }
        (spf as f64) >= self.y_lo && (lpf as f64) <= self.y_hi
    }

    /// Stand-alone membership test by trial division. Intended for single
    /// calls; bulk work should stream a [`FactorTable`].
    pub fn member(&self, n: u64) -> bool {
        if n == 1 {
            return true;
        }
        if n == 0 {
            return false;
        }
        let (spf, lpf) = extreme_factors(n);
        self.member_from_factors(n, spf, lpf)
    }
}

/// Smallest and largest prime factor of `n > 1` by trial division.
fn extreme_factors(mut n: u64) -> (u64, u64) {
    let mut spf = 0u64;
    let mut lpf = 0u64;
    let mut record = |p: u64| {
        if spf == 0 {
            spf = p;
        }
        lpf = p;
    };
    while n % 2 == 0 {
        record(2);
        n /= 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            record(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 2;
    }
    if n > 1 {
        record(n);
    }
    (spf, lpf)
}

/// Simple sieve of Eratosthenes, ascending primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::with_capacity(if n > 16 { n / (n.ilog2() as usize) } else { 8 });
    let mut i = 2usize;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    for (v, &c) in composite.iter().enumerate().skip(2) {
        if !c {
            primes.push(v as u64);
        }
    }
    primes
}

/// Sieving configuration: segment length and the base-prime budget.
#[derive(Clone, Debug)]
pub struct SieveConfig {
    pub segment_len: usize,
    pub base_prime_limit: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        let budget = std::env::var("SMOOTHDIST_MEMORY_BUDGET")
            .ok()
            .and_then(|v| v.parse::<u64>().ok());
        // 16 bytes of working state per integer in a segment.
        let segment_len = budget
            .map(|b| ((b / 16).clamp(1 << 16, 1 << 26)) as usize)
            .unwrap_or(DEFAULT_SEGMENT_LEN);
        SieveConfig {
            segment_len,
            base_prime_limit: BASE_PRIME_LIMIT,
        }
    }
}

/// Smallest/largest prime factors for every integer in `[range_lo, range_hi)`.
///
/// `1` maps to `(1, 1)` by convention; `0`, if present, maps to `(0, 0)`.
#[derive(Debug)]
pub struct FactorTable {
    range_lo: u64,
    range_hi: u64,
    /// Smallest base prime dividing n, or 0 when none does.
    spf_small: Vec<u32>,
    /// Largest base prime dividing n, or 0 when none does.
    lpf_small: Vec<u32>,
    /// n with all base-prime powers divided out: 1, or a prime > sqrt(range_hi).
    rem: Vec<u64>,
    primes: Vec<u64>,
}

impl FactorTable {
    pub fn build(range_lo: u64, range_hi: u64) -> Result<FactorTable> {
        let cfg = SieveConfig::default();
        let primes = base_primes_for(&cfg, range_hi)?;
        Self::build_with(&cfg, &primes, range_lo, range_hi)
    }

    fn build_with(
        cfg: &SieveConfig,
        base_primes: &[u64],
        range_lo: u64,
        range_hi: u64,
    ) -> Result<FactorTable> {
        if range_lo >= range_hi {
            return Err(Error::domain(format!(
                "empty factor-table range [{range_lo}, {range_hi})"
            )));
        }
        let len = (range_hi - range_lo) as usize;
        if len > cfg.segment_len.max(DEFAULT_SEGMENT_LEN) {
            return Err(Error::capacity(format!(
                "factor-table range of {len} integers exceeds the segment budget of {} \
                 (set SMOOTHDIST_MEMORY_BUDGET or stream in segments)",
                cfg.segment_len.max(DEFAULT_SEGMENT_LEN)
            )));
        }
        let mut spf_small = vec![0u32; len];
        let mut lpf_small = vec![0u32; len];
        let mut rem: Vec<u64> = (range_lo..range_hi).collect();

        for &p in base_primes {
            if p.saturating_mul(p) >= range_hi {
                break;
            }
            let start = if range_lo <= p {
                p
            } else {
                range_lo.div_ceil(p) * p
            };
            let mut m = start;
            while m < range_hi {
                let i = (m - range_lo) as usize;
                if spf_small[i] == 0 {
                    spf_small[i] = p as u32;
                }
                lpf_small[i] = p as u32;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                }
                m += p;
            }
        }

        Ok(FactorTable {
            range_lo,
            range_hi,
            spf_small,
            lpf_small,
            rem,
            primes: base_primes.to_vec(),
        })
    }

    pub fn range_lo(&self) -> u64 {
        self.range_lo
    }

    pub fn range_hi(&self) -> u64 {
        self.range_hi
    }

    /// Ascending base primes used for sieving.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    #[inline]
    fn index(&self, n: u64) -> usize {
        debug_assert!(n >= self.range_lo && n < self.range_hi);
        (n - self.range_lo) as usize
    }

    /// Smallest prime factor; `1` for `n = 1`.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        if n <= 1 {
            return n;
        }
        let i = self.index(n);
        if self.spf_small[i] != 0 {
            self.spf_small[i] as u64
        } else {
            // No base prime divides n, so n itself is prime.
            self.rem[i]
        }
    }

    /// Largest prime factor; `1` for `n = 1`.
    #[inline]
    pub fn lpf(&self, n: u64) -> u64 {
        if n <= 1 {
            return n;
        }
        let i = self.index(n);
        if self.rem[i] > 1 {
            self.rem[i]
        } else {
            self.lpf_small[i] as u64
        }
    }

    #[inline]
    pub fn is_member(&self, n: u64, w: &SmoothWindow) -> bool {
        w.member_from_factors(n, self.spf(n), self.lpf(n))
    }

    /// Full prime factorization of `n` in ascending order, with multiplicity.
    pub fn factorize(&self, n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        if n <= 1 {
            return out;
        }
        let mut m = n;
        for &p in &self.primes {
            if p * p > m {
                break;
            }
            if m % p == 0 {
                let mut e = 0u32;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        if m > 1 {
            out.push((m, 1));
        }
        out
    }
}

/// `log p` when `n = p^k`, `0` otherwise (and for `n = 1`).
pub fn von_mangoldt(n: u64, table: &FactorTable) -> Result<f64> {
    if n < 1 || n < table.range_lo() || n >= table.range_hi() {
        return Err(Error::domain(format!(
            "von_mangoldt: n = {n} outside table window [{}, {})",
            table.range_lo(),
            table.range_hi()
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let p = table.spf(n);
    let mut m = n;
    while m % p == 0 {
        m /= p;
    }
    Ok(if m == 1 { (p as f64).ln() } else { 0.0 })
}

fn base_primes_for(cfg: &SieveConfig, range_hi: u64) -> Result<Vec<u64>> {
    let need = (range_hi as f64).sqrt().ceil() as u64 + 1;
    if need > cfg.base_prime_limit {
        return Err(Error::capacity(format!(
            "range_hi = {range_hi} needs base primes up to {need}, beyond the limit {}",
            cfg.base_prime_limit
        )));
    }
    Ok(primes_up_to(need))
}

/// Splits `[lo, hi)` into segments, builds the factor table for each and
/// folds `f` over them in segment order.
pub fn fold_segments<T, F>(lo: u64, hi: u64, cfg: &SieveConfig, mode: ExecMode, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &FactorTable) -> T + Sync,
{
    if lo >= hi {
        return Ok(Vec::new());
    }
    let base = base_primes_for(cfg, hi)?;
    let seg_len = cfg.segment_len as u64;
    let n_segs = ((hi - lo) + seg_len - 1) / seg_len;
    let results = exec::map_indexed(mode, n_segs as usize, |i| {
        let s_lo = lo + (i as u64) * seg_len;
        let s_hi = (s_lo + seg_len).min(hi);
        let table = FactorTable::build_with(cfg, &base, s_lo, s_hi)
            .expect("segment bounds are within the configured budget");
        f(i, &table)
    });
    Ok(results)
}

/// A segment paired with the number of window members strictly below it,
/// for consumers that need running values of the counting function.
pub struct CountedSegment<'a> {
    pub table: &'a FactorTable,
    pub count_before: u64,
}

/// Two-phase streaming scan of `[1, x]`: the first pass tallies members per
/// segment so that the second pass can hand each segment its starting count.
pub fn fold_segments_with_count<T, F>(
    x: u64,
    w: &SmoothWindow,
    cfg: &SieveConfig,
    mode: ExecMode,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, CountedSegment<'_>) -> T + Sync,
{
    if x > MAX_X {
        return Err(Error::capacity(format!("x = {x} exceeds the 2^63 - 1 budget")));
    }
    let counts = fold_segments(1, x + 1, cfg, mode, |_, table| {
        let mut c = 0u64;
        for n in table.range_lo()..table.range_hi() {
            if table.is_member(n, w) {
                c += 1;
            }
        }
        c
    })?;
    let mut prefix = Vec::with_capacity(counts.len());
    let mut acc = 0u64;
    for c in &counts {
        prefix.push(acc);
        acc += c;
    }
    fold_segments(1, x + 1, cfg, mode, |i, table| {
        f(
            i,
            CountedSegment {
                table,
                count_before: prefix[i],
            },
        )
    })
}

/// Exact count of `1 <= n <= x` with all prime factors in the window.
pub fn psi(x: u64, w: &SmoothWindow) -> u64 {
    psi_with(&SieveConfig::default(), ExecMode::default(), x, w)
}

pub fn psi_with(cfg: &SieveConfig, mode: ExecMode, x: u64, w: &SmoothWindow) -> u64 {
    if x == 0 {
        return 0;
    }
    psi_multi_with(cfg, mode, x, std::slice::from_ref(w))[0]
}

/// Counts several windows in one streaming pass.
pub fn psi_multi(x: u64, windows: &[SmoothWindow]) -> Vec<u64> {
    psi_multi_with(&SieveConfig::default(), ExecMode::default(), x, windows)
}

pub fn psi_multi_with(
    cfg: &SieveConfig,
    mode: ExecMode,
    x: u64,
    windows: &[SmoothWindow],
) -> Vec<u64> {
    assert!(x <= MAX_X, "x = {x} exceeds the 2^63 - 1 budget");
    if x == 0 || windows.is_empty() {
        return vec![0; windows.len()];
    }
    let partials = fold_segments(1, x + 1, cfg, mode, |_, table| {
        let mut counts = vec![0u64; windows.len()];
        for n in table.range_lo()..table.range_hi() {
            let spf = table.spf(n);
            let lpf = table.lpf(n);
            for (c, w) in counts.iter_mut().zip(windows) {
                if w.member_from_factors(n, spf, lpf) {
                    *c += 1;
                }
            }
        }
        counts
    })
    .expect("x + 1 fits the sieve budget checked by the caller");
    let mut totals = vec![0u64; windows.len()];
    for part in partials {
        for (t, p) in totals.iter_mut().zip(part) {
            *t += p;
        }
    }
    totals
}

/// Per-residue tallies `Psi(x, [y',y]; q, a)` for all residues `a mod q`.
pub fn psi_residues(x: u64, w: &SmoothWindow, q: u64) -> Result<Vec<u64>> {
    psi_residues_with(&SieveConfig::default(), ExecMode::default(), x, w, q)
}

pub fn psi_residues_with(
    cfg: &SieveConfig,
    mode: ExecMode,
    x: u64,
    w: &SmoothWindow,
    q: u64,
) -> Result<Vec<u64>> {
    if q == 0 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    if x > MAX_X {
        return Err(Error::capacity(format!("x = {x} exceeds the 2^63 - 1 budget")));
    }
    if x == 0 {
        return Ok(vec![0; q as usize]);
    }
    let partials = fold_segments(1, x + 1, cfg, mode, |_, table| {
        let mut counts = vec![0u64; q as usize];
        for n in table.range_lo()..table.range_hi() {
            if table.is_member(n, w) {
                counts[(n % q) as usize] += 1;
            }
        }
        counts
    })?;
    let mut totals = vec![0u64; q as usize];
    for part in partials {
        for (t, p) in totals.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(totals)
}

/// Exact count restricted to `n ≡ a (mod q)`.
pub fn psi_progression(x: u64, w: &SmoothWindow, q: u64, a: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    if a >= q {
        return Err(Error::domain(format!("residue a = {a} must satisfy 0 <= a < q = {q}")));
    }
    Ok(psi_residues(x, w, q)?[a as usize])
}

/// Ascending list of window members `<= x`.
pub fn smooth_numbers(x: u64, w: &SmoothWindow) -> Vec<u64> {
    smooth_numbers_with(&SieveConfig::default(), ExecMode::default(), x, w)
}

pub fn smooth_numbers_with(
    cfg: &SieveConfig,
    mode: ExecMode,
    x: u64,
    w: &SmoothWindow,
) -> Vec<u64> {
    assert!(x <= MAX_X, "x = {x} exceeds the 2^63 - 1 budget");
    if x == 0 {
        return Vec::new();
    }
    let chunks = fold_segments(1, x + 1, cfg, mode, |_, table| {
        let mut out = Vec::new();
        for n in table.range_lo()..table.range_hi() {
            if table.is_member(n, w) {
                out.push(n);
            }
        }
        out
    })
    .expect("x + 1 fits the sieve budget checked by the caller");
    chunks.concat()
}
