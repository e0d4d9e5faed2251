//! Strong-recurrence analysis: how often `||theta n^k||` is small over the
//! smooth numbers, recovery of the small denominator behind such structure,
//! and a desk-scale audit of the bootstrapping disjunction.

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::phase::{checked_power, dist_to_integer, Frequency, PhaseReducer};
use crate::sieve::{fold_segments, SieveConfig, SmoothWindow};
use crate::weyl::{convergents, qtheta_norm_freq};
use serde::Serialize;

const WITNESS_CAP: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceCensus {
    pub theta: Frequency,
    pub k: u32,
    pub eps: f64,
    pub total: u64,
    pub hits: u64,
    pub fraction: f64,
    /// First few hitting members, for inspection.
    pub witnesses: Vec<u64>,
}

/// Counts smooth `n <= limit` with `||theta n^k|| <= eps` (closed at the
/// threshold).
pub fn census(
    limit: u64,
    w: &SmoothWindow,
    k: u32,
    theta: &Frequency,
    eps: f64,
) -> Result<RecurrenceCensus> {
    if !(0.0 < eps && eps < 0.5) {
        return Err(Error::domain(format!("census needs 0 < eps < 1/2, got {eps}")));
    }
    if k == 0 {
        return Err(Error::domain("census needs degree k >= 1"));
    }
    checked_power(limit.max(1), k)?;
    let cfg = SieveConfig::default();
    let mode = ExecMode::default();
    let hit_test: Box<dyn Fn(u64) -> bool + Sync> = match *theta {
        Frequency::Rational { num, den } => Box::new(move |n: u64| {
            let nk = (n as u128).pow(k) % den as u128;
            let r = (nk * num.rem_euclid(den as i64) as u128 % den as u128) as u64;
            (r.min(den - r) as f64) / den as f64 <= eps
        }),
        Frequency::Real(t) => {
            let reducer = PhaseReducer::new(t);
            Box::new(move |n: u64| {
                dist_to_integer(reducer.phase((n as u128).pow(k))) <= eps
            })
        }
    };
    let parts = fold_segments(1, limit + 1, &cfg, mode, |_, table| {
        let mut total = 0u64;
        let mut hits = 0u64;
        let mut witnesses = Vec::new();
        for n in table.range_lo()..table.range_hi() {
            if !table.is_member(n, w) {
                continue;
            }
            total += 1;
            if hit_test(n) {
                hits += 1;
                if witnesses.len() < WITNESS_CAP {
                    witnesses.push(n);
                }
            }
        }
        (total, hits, witnesses)
    })?;
    let mut total = 0u64;
    let mut hits = 0u64;
    let mut witnesses = Vec::new();
    for (t, h, ws) in parts {
        total += t;
        hits += h;
        for w in ws {
            if witnesses.len() < WITNESS_CAP {
                witnesses.push(w);
            }
        }
    }
    Ok(RecurrenceCensus {
        theta: *theta,
        k,
        eps,
        total,
        hits,
        fraction: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
        witnesses,
    })
}

/// Certification thresholds for the recovered denominator; the underlying
/// exponents are unspecified, so these are refit-friendly configuration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecoverConfig {
    pub c: f64,
    pub kappa: f64,
    /// Denominators below this are scanned exhaustively on top of the
    /// continued-fraction candidates.
    pub scan_limit: u64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig {
            c: 10.0,
            kappa: 3.0,
            scan_limit: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecoveredQ {
    pub q: u64,
    pub err: f64,
    pub certified: bool,
    pub threshold: f64,
}

/// The `q <= q_max` minimizing `||q theta||`, certified when the error fits
/// the strong-recurrence conclusion shape at scale `x_scale^k`.
pub fn recover_q(
    census: &RecurrenceCensus,
    q_max: u64,
    x_scale: u64,
    cfg: &RecoverConfig,
) -> Result<RecoveredQ> {
    if q_max < 1 {
        return Err(Error::domain("recover_q needs q_max >= 1"));
    }
    if census.fraction <= 0.0 {
        return Err(Error::domain("census carries no hits; nothing to recover"));
    }
    let mut best: Option<(u64, f64)> = None;
    let mut consider = |q: u64| {
        if q == 0 || q > q_max {
            return;
        }
        let err = qtheta_norm_freq(q, &census.theta);
        let better = match best {
            None => true,
            Some((bq, berr)) => err < berr || (err == berr && q < bq),
        };
        if better {
            best = Some((q, err));
        }
    };
    for (_, q) in convergents(&census.theta, q_max) {
        consider(q);
    }
    for q in 1..=q_max.min(cfg.scan_limit) {
        consider(q);
    }
    let (q, err) = best.expect("q = 1 is always considered");
    let threshold = cfg.c * census.eps * census.fraction.powf(-cfg.kappa)
        / (x_scale as f64).powi(census.k as i32);
    Ok(RecoveredQ {
        q,
        err,
        certified: err <= threshold,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BootstrapConfig {
    /// Branch one reads `eps' >= branch_c * delta / Delta_obs`.
    pub branch_c: f64,
    /// Branch two reads `||theta|| <= branch_big_c * Delta_obs * eps' / (delta N^k)`.
    pub branch_big_c: f64,
    /// Minimum number of sampled intervals in the concentration scan.
    pub min_intervals: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            branch_c: 0.5,
            branch_big_c: 10.0,
            min_intervals: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapReport {
    pub theta: Frequency,
    pub k: u32,
    pub n_anchor: u64,
    pub l_min: u64,
    pub eps_prime: f64,
    pub delta: f64,
    /// Size of `A = S([y', y]) cap [N, 2N]`.
    pub a_size: u64,
    /// Members hitting `||m^k theta|| <= eps'`.
    pub hits: u64,
    pub hits_fraction: f64,
    /// Whether the requested recurrence level `delta` was actually met.
    pub recurrence_ok: bool,
    /// Measured interval-concentration factor over the sampled grid.
    pub delta_obs: f64,
    pub hypothesis_ok: bool,
    /// Branches are evaluated at the measured fraction, the largest level
    /// at which the premise genuinely holds.
    pub branch_large_eps: bool,
    pub branch_theta_small: bool,
    pub config: BootstrapConfig,
}

impl BootstrapReport {
    /// The disjunction, meaningful when the hypothesis held.
    pub fn some_branch_holds(&self) -> bool {
        self.branch_large_eps || self.branch_theta_small
    }
}

/// Desk-scale audit of the bootstrapping disjunction on `A = S cap [N, 2N]`:
/// measures the concentration factor over a deterministic interval grid,
/// checks the smallness hypothesis on `theta`, counts recurrent members and
/// reports which conclusion branch holds at the configured constants.
pub fn bootstrap_audit(
    theta: &Frequency,
    k: u32,
    n_anchor: u64,
    w: &SmoothWindow,
    l_min: u64,
    eps_prime: f64,
    delta: f64,
    cfg: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if l_min < 1 || l_min > n_anchor {
        return Err(Error::domain(format!(
            "interval floor L = {l_min} outside [1, N = {n_anchor}]"
        )));
    }
    if !(0.0 < eps_prime && eps_prime < 1.0) || !(0.0 < delta && delta <= 1.0) {
        return Err(Error::domain("bootstrap audit needs eps', delta in (0, 1)"));
    }
    checked_power(2 * n_anchor, k)?;
    let sieve_cfg = SieveConfig::default();
    let mode = ExecMode::default();
    // Members of [N, 2N], ascending.
    let chunks = fold_segments(n_anchor, 2 * n_anchor + 1, &sieve_cfg, mode, |_, t| {
        let mut v = Vec::new();
        for n in t.range_lo()..t.range_hi() {
            if t.is_member(n, w) {
                v.push(n);
            }
        }
        v
    })?;
    let members: Vec<u64> = chunks.concat();
    if members.is_empty() {
        return Err(Error::domain("A = S cap [N, 2N] is empty".to_string()));
    }
    let a_size = members.len() as u64;

    // Concentration factor over a stratified deterministic grid: lengths
    // L 2^j, starts evenly spaced.
    let mut lengths = Vec::new();
    let mut len = l_min;
    while len <= n_anchor {
        lengths.push(len);
        match len.checked_mul(2) {
            Some(next) => len = next,
            None => break,
        }
    }
    let starts_per_len = cfg.min_intervals.div_ceil(lengths.len()).max(2);
    let mut delta_obs = 0.0f64;
    for &l in &lengths {
        for i in 0..starts_per_len {
            let span = n_anchor - l;
            let start = n_anchor + (span as u128 * i as u128 / (starts_per_len - 1).max(1) as u128) as u64;
            let lo = members.partition_point(|&m| m <= start);
            let hi = members.partition_point(|&m| m <= start + l);
            let count = (hi - lo) as u64;
            let conc = count as f64 * n_anchor as f64 / (a_size as f64 * l as f64);
            delta_obs = delta_obs.max(conc);
        }
    }

    let theta_norm = qtheta_norm_freq(1, theta);
    let nf = n_anchor as f64;
    let hypothesis_ok = theta_norm <= eps_prime / (l_min as f64 * nf.powi(k as i32 - 1));

    // Recurrent members of A.
    let hits = match *theta {
        Frequency::Rational { num, den } => {
            let a_red = num.rem_euclid(den as i64) as u128;
            members
                .iter()
                .filter(|&&m| {
                    let mk = (m as u128).pow(k) % den as u128;
                    let r = (mk * a_red % den as u128) as u64;
                    (r.min(den - r) as f64) / den as f64 <= eps_prime
                })
                .count() as u64
        }
        Frequency::Real(t) => {
            let reducer = PhaseReducer::new(t);
            members
                .iter()
                .filter(|&&m| dist_to_integer(reducer.phase((m as u128).pow(k))) <= eps_prime)
                .count() as u64
        }
    };

    let hits_fraction = hits as f64 / a_size as f64;
    let delta_eff = hits_fraction;
    let branch_large_eps = delta_eff == 0.0 || eps_prime >= cfg.branch_c * delta_eff / delta_obs;
    let branch_theta_small = delta_eff > 0.0
        && theta_norm <= cfg.branch_big_c * delta_obs * eps_prime / (delta_eff * nf.powi(k as i32));
    Ok(BootstrapReport {
        theta: *theta,
        k,
        n_anchor,
        l_min,
        eps_prime,
        delta,
        a_size,
        hits,
        hits_fraction,
        recurrence_ok: hits_fraction >= delta,
        delta_obs,
        hypothesis_ok,
        branch_large_eps,
        branch_theta_small,
        config: *cfg,
    })
}
