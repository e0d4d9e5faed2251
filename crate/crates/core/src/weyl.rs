//! Smooth Weyl sums, Diophantine data for frequencies, major-arc membership
//! and the factorization triple behind the bilinear decompositions.

use crate::chars::gcd;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::kahan::KahanComplex;
use crate::phase::{checked_power, unit_phase, Frequency, PhaseReducer};
use crate::saddle::Saddle;
use crate::sieve::{fold_segments, psi_with, SieveConfig, SmoothWindow};
use num_complex::Complex64;
use serde::Serialize;

const RATIONAL_TABLE_CAP: u64 = 1 << 22;

/// A rational approximation `a/q` to a frequency, with `err = |q theta - a|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RationalApprox {
    pub a: i64,
    pub q: u64,
    pub err: f64,
}

impl RationalApprox {
    /// Diophantine quality `q + x^k ||q theta||` at scale `(x, k)`.
    pub fn quality(&self, x: f64, k: u32) -> f64 {
        self.q as f64 + x.powi(k as i32) * self.err
    }
}

/// Continued-fraction convergents `(a, q)` of `theta` with `q <= q_max`.
pub fn convergents(theta: &Frequency, q_max: u64) -> Vec<(i64, u64)> {
    match *theta {
        Frequency::Rational { num, den } => {
            // Exact Euclidean expansion.
            let mut out = Vec::new();
            let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1u128, 1i128, 0u128);
            let (mut a, mut b) = (num as i128, den as i128);
            while b != 0 {
                let digit = a.div_euclid(b);
                (a, b) = (b, a.rem_euclid(b));
                let p2 = digit * p1 + p0;
                let q2 = digit as u128 * q1 + q0;
                (p0, q0, p1, q1) = (p1, q1, p2, q2);
                if q1 > q_max as u128 {
                    break;
                }
                out.push((p1 as i64, q1 as u64));
            }
            out
        }
        Frequency::Real(t) => {
            let mut out = Vec::new();
            let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1u128, 1i128, 0u128);
            let mut x = t;
            for _ in 0..64 {
                let digit = x.floor();
                if !(0.0..=1.8e18).contains(&digit) {
                    break;
                }
                let d = digit as i128;
                let p2 = d * p1 + p0;
                let q2 = d as u128 * q1 + q0;
                (p0, q0, p1, q1) = (p1, q1, p2, q2);
                if q1 > q_max as u128 {
                    break;
                }
                out.push((p1 as i64, q1 as u64));
                let frac = x - digit;
                // Below this the expansion is noise from the f64 input.
                if frac < 1e-15 {
                    break;
                }
                x = 1.0 / frac;
            }
            out
        }
    }
}

/// `||q theta||` exactly for rationals, via a two-product otherwise.
pub fn qtheta_norm_freq(q: u64, theta: &Frequency) -> f64 {
    match *theta {
        Frequency::Rational { num, den } => {
            let r = ((q as u128 * num.rem_euclid(den as i64) as u128) % den as u128) as u64;
            (r.min(den - r) as f64) / den as f64
        }
        Frequency::Real(t) => crate::phase::qtheta_norm(q, t),
    }
}

/// Best rational approximation with denominator at most `q_max`: the
/// continued-fraction convergent minimizing `||q theta||`.
pub fn dirichlet_approx(theta: &Frequency, q_max: u64) -> Result<RationalApprox> {
    if q_max < 1 {
        return Err(Error::domain("dirichlet_approx needs q_max >= 1"));
    }
    let mut best: Option<RationalApprox> = None;
    for (a, q) in convergents(theta, q_max) {
        let err = qtheta_norm_freq(q, theta);
        let better = match &best {
            None => true,
            Some(b) => err < b.err,
        };
        if better {
            best = Some(RationalApprox { a, q, err });
        }
    }
    Ok(best.unwrap_or(RationalApprox {
        a: 0,
        q: 1,
        err: qtheta_norm_freq(1, theta),
    }))
}

/// Major-arc membership report: the witness pair when `theta` lies in some
/// arc `{|q theta - a| <= Q x^-k, 0 <= a < q <= Q, (a, q) = 1}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MajorArcWitness {
    pub member: bool,
    pub a: i64,
    pub q: u64,
    pub dist: f64,
    pub threshold: f64,
}

pub fn major_arc_member(theta: &Frequency, q_param: f64, x: u64, k: u32) -> Result<MajorArcWitness> {
    if q_param < 1.0 {
        return Err(Error::domain("major arc parameter Q must be >= 1"));
    }
    let xk = (x as f64).powi(k as i32);
    let eps = q_param / xk;
    let q_cap = q_param.floor() as u64;
    let mut best: Option<(i64, u64, f64)> = None;
    let mut consider = |a: i64, q: u64| {
        if q == 0 || a < 0 || a as u64 >= q || gcd(a.unsigned_abs(), q) != 1 {
            return;
        }
        let d = signed_qtheta_minus_a(q, a, theta).abs();
        if best.map(|(_, _, bd)| d < bd).unwrap_or(true) {
            best = Some((a, q, d));
        }
    };
    for (a, q) in convergents(theta, q_cap) {
        consider(a, q);
    }
    // Convergents are complete best approximations when the arcs are
    // narrower than 1/(2Q); otherwise sweep denominators directly.
    if 2.0 * eps * q_param * q_param >= 1.0 {
        if q_cap > 10_000_000 {
            return Err(Error::capacity(
                "major-arc brute-force sweep above 1e7 denominators".to_string(),
            ));
        }
        for q in 1..=q_cap {
            let a = (q as f64 * theta.value()).round() as i64;
            consider(a, q);
        }
    }
    let (a, q, dist) = best.unwrap_or((0, 1, theta.value()));
    Ok(MajorArcWitness {
        member: dist <= eps,
        a,
        q,
        dist,
        threshold: eps,
    })
}

fn signed_qtheta_minus_a(q: u64, a: i64, theta: &Frequency) -> f64 {
    match *theta {
        Frequency::Rational { num, den } => {
            (q as i128 * num as i128 - a as i128 * den as i128) as f64 / den as f64
        }
        Frequency::Real(t) => {
            let qf = q as f64;
            let p = qf * t;
            let err = qf.mul_add(t, -p);
            (p - a as f64) + err
        }
    }
}

/// The smooth Weyl sum `sum over n in S(x, [y', y]) of e(theta n^k)`.
pub fn weyl_sum(x: u64, w: &SmoothWindow, k: u32, theta: &Frequency) -> Result<Complex64> {
    weyl_sum_with(&SieveConfig::default(), ExecMode::default(), x, w, k, theta)
}

pub fn weyl_sum_with(
    cfg: &SieveConfig,
    mode: ExecMode,
    x: u64,
    w: &SmoothWindow,
    k: u32,
    theta: &Frequency,
) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::domain("weyl_sum needs degree k >= 1"));
    }
    if x == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    checked_power(x, k)?;
    let partials: Vec<KahanComplex> = match *theta {
        Frequency::Rational { num, den } => {
            if den > RATIONAL_TABLE_CAP {
                return Err(Error::capacity(format!(
                    "rational frequency denominator {den} exceeds the phase-table cap {RATIONAL_TABLE_CAP}"
                )));
            }
            // e(a n^k / q) depends on n mod q only; build the exact table.
            let table: Vec<Complex64> = (0..den)
                .map(|r| {
                    let rk = crate::chars::pow_mod(r, k as u64, den);
                    let phase = (num.rem_euclid(den as i64) as u128 * rk as u128 % den as u128) as f64
                        / den as f64;
                    unit_phase(phase)
                })
                .collect();
            fold_segments(1, x + 1, cfg, mode, |_, t| {
                let mut acc = KahanComplex::new();
                for n in t.range_lo()..t.range_hi() {
                    if t.is_member(n, w) {
                        acc.add(table[(n % den) as usize]);
                    }
                }
                acc
            })?
        }
        Frequency::Real(th) => {
            let reducer = PhaseReducer::new(th);
            fold_segments(1, x + 1, cfg, mode, |_, t| {
                let mut acc = KahanComplex::new();
                for n in t.range_lo()..t.range_hi() {
                    if t.is_member(n, w) {
                        let m = (n as u128).pow(k);
                        acc.add(unit_phase(reducer.phase(m)));
                    }
                }
                acc
            })?
        }
    };
    let mut total = KahanComplex::new();
    for p in partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// The unique `(u, v, p)` with `n = u v`, `v` the smallest initial factor of
/// the descending prime factorization exceeding `m_cut`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FactorTriple {
    pub u: u64,
    pub v: u64,
    pub p: u64,
}

pub fn factor_triple(n: u64, m_cut: u64, w: &SmoothWindow) -> Result<FactorTriple> {
    if n <= m_cut {
        return Err(Error::domain(format!("factor_triple needs n > M, got n = {n}, M = {m_cut}")));
    }
    if !w.member(n) {
        return Err(Error::domain(format!(
            "factor_triple: n = {n} is not [{}, {}]-smooth",
            w.y_lo(),
            w.y_hi()
        )));
    }
    // Prime factors in decreasing order with multiplicity.
    let mut factors: Vec<u64> = Vec::new();
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        while m % d == 0 {
            factors.push(d);
            m /= d;
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    factors.reverse();
    let mut v = 1u64;
    let mut p = 0u64;
    for &f in &factors {
        v *= f;
        p = f;
        if v > m_cut {
            break;
        }
    }
    debug_assert!(v > m_cut);
    Ok(FactorTriple { u: n / v, v, p })
}

/// Configurable exponent for the major-arc envelope; the underlying bound only
/// asserts existence of `c > 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DichotomyConfig {
    pub c: f64,
    /// Witness denominators are drawn below `x^witness_exp`.
    pub witness_exp: f64,
    /// Major arcs use `Q = x^major_exp`.
    pub major_exp: f64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            c: 0.05,
            witness_exp: 0.1,
            major_exp: 1.0 / 12.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub x: u64,
    pub k: u32,
    pub theta: Frequency,
    pub psi: u64,
    pub weyl_abs: f64,
    pub ratio: f64,
    pub major_arc: MajorArcWitness,
    /// Witness with minimal quality `q + x^k ||q theta||` below `x^0.1`.
    pub witness: RationalApprox,
    pub quality: f64,
    pub envelope: f64,
    /// Exponent that would make the envelope exact, for re-fitting `c`.
    pub fitted_c: Option<f64>,
    pub config: DichotomyConfig,
}

pub fn dichotomy_report(
    x: u64,
    w: &SmoothWindow,
    k: u32,
    theta: &Frequency,
    cfg: &DichotomyConfig,
) -> Result<DichotomyReport> {
    let sieve_cfg = SieveConfig::default();
    let mode = ExecMode::default();
    let psi = psi_with(&sieve_cfg, mode, x, w);
    if psi == 0 {
        return Err(Error::domain("empty smooth set; nothing to report"));
    }
    let e = weyl_sum_with(&sieve_cfg, mode, x, w, k, theta)?;
    let ratio = e.norm() / psi as f64;
    let xf = x as f64;
    let major_arc = major_arc_member(theta, xf.powf(cfg.major_exp), x, k)?;

    // Among convergents below x^0.1 pick the minimal-quality witness.
    let q_cap = xf.powf(cfg.witness_exp).floor() as u64;
    let mut witness: Option<(RationalApprox, f64)> = None;
    for (a, q) in convergents(theta, q_cap.max(1)) {
        let approx = RationalApprox {
            a,
            q,
            err: qtheta_norm_freq(q, theta),
        };
        let quality = approx.quality(xf, k);
        if witness.map(|(_, bq)| quality < bq).unwrap_or(true) {
            witness = Some((approx, quality));
        }
    }
    let (witness, quality) = witness.unwrap_or((
        RationalApprox {
            a: 0,
            q: 1,
            err: qtheta_norm_freq(1, theta),
        },
        1.0 + xf.powi(k as i32) * qtheta_norm_freq(1, theta),
    ));

    let saddle = Saddle::new(w.y_hi().max(2.0))?;
    let alpha = saddle.solve_alpha(xf, w.y_hi().max(2.0))?.alpha;
    let envelope = quality.powf(-cfg.c + 2.0 * (1.0 - alpha)) * xf.ln().powi(5);
    let fitted_c = if quality > 1.0 && ratio > 0.0 {
        Some(2.0 * (1.0 - alpha) - (ratio / xf.ln().powi(5)).ln() / quality.ln())
    } else {
        None
    };
    Ok(DichotomyReport {
        x,
        k,
        theta: *theta,
        psi,
        weyl_abs: e.norm(),
        ratio,
        major_arc,
        witness,
        quality,
        envelope,
        fitted_c,
        config: *cfg,
    })
}
