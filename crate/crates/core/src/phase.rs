//! High-accuracy phase arithmetic for exponential sums.
//!
//! Evaluating `e(theta n^k)` at `n^k ~ 10^21` cannot go through a plain
//! `f64` product: the fractional part drowns in rounding. A frequency is
//! therefore carried as a 128-bit fixed-point fraction; multiplying by the
//! integer `n^k` with wrapping arithmetic keeps exactly the fractional bits.
//! Any `f64` in `[2^-75, 1)` converts to this representation without loss,
//! so the reduction is exact up to the final 53-bit readout.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// A frequency on the torus, kept exact when it is a small rational.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Frequency {
    /// `num / den` reduced mod 1; exponential sums over this variant use
    /// exact modular arithmetic.
    Rational { num: i64, den: u64 },
    /// An arbitrary real, reduced to `[0, 1)`.
    Real(f64),
}

impl Frequency {
    pub fn rational(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::domain("rational frequency needs den >= 1"));
        }
        let g = gcd_i(num.unsigned_abs(), den);
        let (num, den) = (num / g as i64, den / g);
        let num = num.rem_euclid(den as i64);
        Ok(Frequency::Rational { num, den })
    }

    pub fn real(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::domain("frequency must be finite"));
        }
        Ok(Frequency::Real(theta.rem_euclid(1.0)))
    }

    /// The value as a float in `[0, 1)`.
    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Rational { num, den } => num as f64 / den as f64,
            Frequency::Real(t) => t,
        }
    }
}

fn gcd_i(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `frac(theta * m)` for integer `m`, exact for `theta >= 2^-75`.
pub struct PhaseReducer {
    /// theta as a Q0.128 fraction; exact whenever theta >= 2^-75.
    theta_fp: u128,
    /// Fallback for tiny theta, where the direct product is safe.
    theta_tiny: Option<f64>,
}

impl PhaseReducer {
    pub fn new(theta: f64) -> Self {
        let t = theta.rem_euclid(1.0);
        if t < 2f64.powi(-75) {
            return PhaseReducer {
                theta_fp: 0,
                theta_tiny: Some(t),
            };
        }
        // Split t * 2^128 into two exact 64-bit halves.
        let hi_f = t * 2f64.powi(64);
        let hi = hi_f.floor();
        let rem = hi_f - hi; // exact: both operands share the same scale
        let lo = (rem * 2f64.powi(64)).round_ties_even();
        let mut fp = ((hi as u128) << 64).wrapping_add(lo as u128);
        if fp == 0 && t > 0.0 {
            fp = 1;
        }
        PhaseReducer {
            theta_fp: fp,
            theta_tiny: None,
        }
    }

    /// Fractional part of `theta * m`, in `[0, 1)`.
    #[inline]
    pub fn phase(&self, m: u128) -> f64 {
        if let Some(t) = self.theta_tiny {
            return (t * m as f64).fract();
        }
        let frac = self.theta_fp.wrapping_mul(m);
        // Top 53 bits of the 128-bit fraction.
        ((frac >> 75) as u64) as f64 * 2f64.powi(-53)
    }
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn unit_phase(t: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * t).sin_cos();
    Complex64::new(c, s)
}

/// Distance of a phase in `[0, 1)` to the nearest integer.
#[inline]
pub fn dist_to_integer(t: f64) -> f64 {
    t.min(1.0 - t)
}

/// `||q * theta||` via an exact two-product, good to ~1e-18 absolute.
pub fn qtheta_norm(q: u64, theta: f64) -> f64 {
    let qf = q as f64;
    let p = qf * theta;
    let err = qf.mul_add(theta, -p);
    let r = p.round_ties_even();
    ((p - r) + err).abs()
}

/// `n^k` with an overflow and phase-accuracy budget.
///
/// Beyond `2^105` the tiny-theta fallback path would lose the phase, so the
/// power is capped there; every test-scale workload sits far below.
pub fn checked_power(n: u64, k: u32) -> Result<u128> {
    let v = (n as u128)
        .checked_pow(k)
        .ok_or_else(|| Error::capacity(format!("n^k overflows 128 bits for n = {n}, k = {k}")))?;
    if v >= 1u128 << 105 {
        return Err(Error::capacity(format!(
            "n^k = {v} exceeds the 2^105 phase-accuracy budget (n = {n}, k = {k})"
        )));
    }
    Ok(v)
}
