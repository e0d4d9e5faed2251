//! Equidistribution diagnostics: weighted sums over short intervals and
//! progressions, per-residue deviation tables, short-progression counting
//! bounds and twisted-sum smallness, each reported against its prediction
//! with an honest regime flag.

use crate::chars::{euler_phi, gcd, psi_character, DirichletCharacter};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::kahan::Kahan;
use crate::sieve::{fold_segments, psi_residues_with, psi_with, SieveConfig, SmoothWindow};
use crate::weights::HWeight;
use serde::Serialize;

/// Implicit-constant configuration echoed into every report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EquidConfig {
    /// Stand-in for the results' unspecified absolute constants.
    pub implicit_c: f64,
    /// Moduli count as in-regime up to `(log x)^modulus_exp`.
    pub modulus_exp: f64,
}

impl Default for EquidConfig {
    fn default() -> Self {
        EquidConfig {
            implicit_c: 4.0,
            modulus_exp: 2.0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EquidParams {
    pub op: &'static str,
    pub y_lo: f64,
    pub y_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_anchor: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_modulus: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquidReport {
    pub observed: f64,
    pub predicted: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub regime_ok: bool,
    pub params: EquidParams,
}

impl EquidReport {
    fn assemble(observed: f64, predicted: f64, regime_ok: bool, params: EquidParams) -> Self {
        let abs_err = (observed - predicted).abs();
        EquidReport {
            observed,
            predicted,
            abs_err,
            rel_err: abs_err / predicted.abs().max(1e-300),
            regime_ok,
            params,
        }
    }
}

/// Window-level hypotheses shared by the results here: `y` above `(log x)^2`
/// and at most `x`, with `y'` at most `sqrt(y)`.
pub fn window_regime_ok(x: f64, w: &SmoothWindow) -> bool {
    let lx = x.ln();
    w.y_hi() > lx * lx && w.y_hi() <= x && w.y_lo() * w.y_lo() <= w.y_hi()
}

fn check_trick_modulus(q: u64, w: &SmoothWindow) -> Result<()> {
    if q == 0 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    let mut m = q;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            if d as f64 >= w.y_lo() {
                return Err(Error::hypothesis(format!(
                    "modulus {q} has prime factor {d} >= y' = {}",
                    w.y_lo()
                )));
            }
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 && m as f64 >= w.y_lo() {
        return Err(Error::hypothesis(format!(
            "modulus {q} has prime factor {m} >= y' = {}",
            w.y_lo()
        )));
    }
    Ok(())
}

/// `sum of h over (N0, N0 + N1]` against the prediction `N1`.
pub fn short_interval_sum(
    n_anchor: u64,
    n0: u64,
    n1: u64,
    w: &SmoothWindow,
) -> Result<EquidReport> {
    let mut rep = short_progression_sum(n_anchor, n0, n1, w, 1, 0)?.report;
    rep.params = EquidParams {
        op: "short_interval_sum",
        y_lo: w.y_lo(),
        y_hi: w.y_hi(),
        n_anchor: Some(n_anchor),
        n0: Some(n0),
        n1: Some(n1),
        ..Default::default()
    };
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortProgressionReport {
    pub report: EquidReport,
    /// The three error terms of the short-progression estimate, evaluated
    /// at the experiment's parameters.
    pub error_envelope: [f64; 3],
}

/// `sum of h over (N0, N0 + N1], n = a mod q` against `N1 / phi(q)`.
pub fn short_progression_sum(
    n_anchor: u64,
    n0: u64,
    n1: u64,
    w: &SmoothWindow,
    q: u64,
    a: u64,
) -> Result<ShortProgressionReport> {
    if q == 0 {
        return Err(Error::domain("modulus q must be >= 1"));
    }
    if a >= q {
        return Err(Error::domain(format!("residue a = {a} must be below q = {q}")));
    }
    if gcd(a, q) != 1 && q > 1 {
        return Err(Error::domain(format!("residue a = {a} not coprime to q = {q}")));
    }
    if q > 1 {
        check_trick_modulus(q, w)?;
    }
    if !(n_anchor <= n0 && n0 + n1 <= 2 * n_anchor) {
        return Err(Error::domain(format!(
            "interval ({n0}, {}] not inside [N, 2N] = [{n_anchor}, {}]",
            n0 + n1,
            2 * n_anchor
        )));
    }
    let cfg = SieveConfig::default();
    let mode = ExecMode::default();
    let hw = HWeight::with(&cfg, mode, n_anchor, w)?;
    let observed = if n1 == 0 {
        0.0
    } else {
        let parts = fold_segments(n0 + 1, n0 + n1 + 1, &cfg, mode, |_, t| {
            let mut acc = Kahan::new();
            for n in t.range_lo()..t.range_hi() {
                if n % q == a {
                    acc.add(hw.eval_member(n, t.is_member(n, w)));
                }
            }
            acc
        })?;
        let mut acc = Kahan::new();
        for p in parts {
            acc.merge(p);
        }
        acc.value()
    };
    let phi = euler_phi(q) as f64;
    let predicted = n1 as f64 / phi;
    let nf = n_anchor as f64;
    let ln_n = nf.ln();
    let length_ok = n1 as f64 >= nf * (-(ln_n.powf(0.25)) / 4.0).exp();
    let regime_ok = length_ok && window_regime_ok(nf, w);
    let params = EquidParams {
        op: "short_progression_sum",
        y_lo: w.y_lo(),
        y_hi: w.y_hi(),
        n_anchor: Some(n_anchor),
        n0: Some(n0),
        n1: Some(n1),
        q: Some(q),
        a: Some(a),
        ..Default::default()
    };
    let lll = ln_n.ln().ln();
    let ll = ln_n.ln();
    let error_envelope = [
        predicted * lll / ll,
        nf / (phi * ln_n.powf(1.0 / 24.0)),
        nf / ln_n.powf(0.2),
    ];
    Ok(ShortProgressionReport {
        report: EquidReport::assemble(observed, predicted, regime_ok, params),
        error_envelope,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidueRow {
    pub a: u64,
    pub count: u64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProgressionEquidReport {
    pub x: u64,
    pub q: u64,
    pub psi_total: u64,
    pub max_deviation: f64,
    pub rows: Vec<ResidueRow>,
    pub regime_ok: bool,
    pub config: EquidConfig,
}

/// Per-residue table of `phi(q) Psi(x; q, a) / Psi(x) - 1` over the reduced
/// residues, with the maximum deviation.
pub fn progression_equid(
    x: u64,
    w: &SmoothWindow,
    q: u64,
    cfg: &EquidConfig,
) -> Result<ProgressionEquidReport> {
    if q > 1 {
        check_trick_modulus(q, w)?;
    }
    let counts = psi_residues_with(&SieveConfig::default(), ExecMode::default(), x, w, q)?;
    let psi_total: u64 = counts.iter().sum();
    if psi_total == 0 {
        return Err(Error::domain("empty smooth set".to_string()));
    }
    let phi = euler_phi(q) as f64;
    let mut rows = Vec::new();
    let mut max_deviation = 0.0f64;
    for (a, &count) in counts.iter().enumerate() {
        if gcd(a as u64, q) != 1 && q > 1 {
            continue;
        }
        let deviation = (phi * count as f64 / psi_total as f64 - 1.0).abs();
        max_deviation = max_deviation.max(deviation);
        rows.push(ResidueRow {
            a: a as u64,
            count,
            deviation,
        });
    }
    let xf = x as f64;
    let regime_ok = window_regime_ok(xf, w) && (q as f64) <= xf.ln().powf(cfg.modulus_exp);
    Ok(ProgressionEquidReport {
        x,
        q,
        psi_total,
        max_deviation,
        rows,
        regime_ok,
        config: *cfg,
    })
}

/// An arithmetic progression `start, start + step, ...` of `len` terms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Progression {
    pub start: u64,
    pub len: u64,
    pub step: u64,
}

impl Progression {
    pub fn last(&self) -> u64 {
        self.start + (self.len.saturating_sub(1)) * self.step
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountBoundReport {
    pub x: u64,
    pub progression: Progression,
    pub observed: u64,
    pub bound: f64,
    pub within: bool,
    pub alpha: f64,
    pub config: EquidConfig,
}

/// Checks `#(S cap P) <= C (x/|P|)^(1-alpha) Psi(x) |P| log x / x` for a
/// progression `P` inside `[x, 2x]`.
pub fn short_interval_count_bound(
    x: u64,
    w: &SmoothWindow,
    p: Progression,
    cfg: &EquidConfig,
) -> Result<CountBoundReport> {
    if p.len == 0 || p.step == 0 {
        return Err(Error::domain("progression needs len >= 1 and step >= 1"));
    }
    if p.start < x || p.last() > 2 * x {
        return Err(Error::domain(format!(
            "progression [{}..{}] not inside [x, 2x] = [{x}, {}]",
            p.start,
            p.last(),
            2 * x
        )));
    }
    let sieve_cfg = SieveConfig::default();
    let mode = ExecMode::default();
    // Dense progressions stream the sieve; sparse ones test points directly.
    let observed: u64 = if p.len.saturating_mul(64) >= (p.last() - p.start + 1) {
        let parts = fold_segments(p.start, p.last() + 1, &sieve_cfg, mode, |_, t| {
            let mut c = 0u64;
            for n in t.range_lo()..t.range_hi() {
                if n >= p.start && (n - p.start) % p.step == 0 && t.is_member(n, w) {
                    c += 1;
                }
            }
            c
        })?;
        parts.into_iter().sum()
    } else {
        (0..p.len)
            .filter(|i| w.member(p.start + i * p.step))
            .count() as u64
    };
    let saddle = crate::saddle::Saddle::new(w.y_hi().max(2.0))?;
    let alpha = saddle.solve_alpha(x as f64, w.y_hi().max(2.0))?.alpha;
    let psi_x = psi_with(&sieve_cfg, mode, x, w) as f64;
    let xf = x as f64;
    let len = p.len as f64;
    let bound = (xf / len).powf(1.0 - alpha) * psi_x * len / xf * xf.ln();
    Ok(CountBoundReport {
        x,
        progression: p,
        observed,
        bound,
        within: (observed as f64) <= cfg.implicit_c * bound,
        alpha,
        config: *cfg,
    })
}

/// `|Psi(x, chi)| / Psi(x)` against the `(log x)^(-1/5)` envelope.
pub fn character_sum_smallness(
    x: u64,
    w: &SmoothWindow,
    chi: &DirichletCharacter,
    cfg: &EquidConfig,
) -> Result<EquidReport> {
    if chi.is_principal() {
        return Err(Error::domain(
            "character sum smallness needs a non-principal character; use psi directly".to_string(),
        ));
    }
    let psi_total = psi_with(&SieveConfig::default(), ExecMode::default(), x, w);
    if psi_total == 0 {
        return Err(Error::domain("empty smooth set".to_string()));
    }
    let twisted = psi_character(x, w, chi);
    let observed = twisted.norm() / psi_total as f64;
    let xf = x as f64;
    let predicted = xf.ln().powf(-0.2);
    let regime_ok =
        window_regime_ok(xf, w) && (chi.modulus() as f64) <= xf.ln().powf(cfg.modulus_exp);
    let params = EquidParams {
        op: "character_sum_smallness",
        y_lo: w.y_lo(),
        y_hi: w.y_hi(),
        x: Some(x),
        chi_modulus: Some(chi.modulus()),
        ..Default::default()
    };
    Ok(EquidReport::assemble(observed, predicted, regime_ok, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(lo: f64, hi: f64) -> SmoothWindow {
        SmoothWindow::new(lo, hi).unwrap()
    }

    #[test]
    fn empty_interval_is_trivial() {
        let w = window(1.0, 100.0);
        let rep = short_interval_sum(10_000, 10_000, 0, &w).unwrap();
        assert_eq!(rep.observed, 0.0);
        assert_eq!(rep.predicted, 0.0);
    }

    #[test]
    fn interval_ordering_violations() {
        let w = window(1.0, 100.0);
        assert!(short_interval_sum(10_000, 9_000, 10, &w).is_err());
        assert!(short_interval_sum(10_000, 15_000, 6_000, &w).is_err());
    }

    #[test]
    fn full_dyadic_block_tracks_length() {
        // N = 1e5 desk version of the short-interval law.
        let n: u64 = 100_000;
        let y = (n as f64).ln().powi(4);
        let w = window(1.0, y);
        let rep = short_interval_sum(n, n, n, &w).unwrap();
        assert!(rep.regime_ok);
        assert!(rep.rel_err <= 0.2, "rel_err = {}", rep.rel_err);
    }

    #[test]
    fn progression_sum_reduces_to_interval_bit_for_bit() {
        let n: u64 = 50_000;
        let w = window(1.0, 2_000.0);
        let a = short_interval_sum(n, n + 10, 20_000, &w).unwrap();
        let b = short_progression_sum(n, n + 10, 20_000, &w, 1, 0).unwrap();
        assert_eq!(a.observed.to_bits(), b.report.observed.to_bits());
    }

    #[test]
    fn progression_sum_near_prediction() {
        let n: u64 = 100_000;
        let y = (n as f64).ln().powi(4);
        let w = window(4.0, y);
        let rep = short_progression_sum(n, n, n / 2, &w, 3, 1).unwrap();
        assert!(rep.report.rel_err <= 0.25, "rel_err = {}", rep.report.rel_err);
        assert_eq!(rep.error_envelope.len(), 3);
    }

    #[test]
    fn progression_sum_hypothesis_checks() {
        let w = window(4.0, 10_000.0);
        // gcd(a, q) > 1.
        assert!(short_progression_sum(10_000, 10_000, 100, &w, 3, 0).is_err());
        // q with a prime factor at or above y' = 4.
        assert!(matches!(
            short_progression_sum(10_000, 10_000, 100, &w, 5, 1),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn progression_equid_trivial_and_checked() {
        let w = window(4.0, 5_000.0);
        let cfg = EquidConfig::default();
        let rep = progression_equid(100_000, &w, 1, &cfg).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        // q = 2 with y' = 1 violates the hypothesis.
        let w1 = window(1.0, 5_000.0);
        assert!(matches!(
            progression_equid(100_000, &w1, 2, &cfg),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn progression_equid_small_deviation() {
        // Desk echo at x = 1e6 with the window above the modulus primes.
        let x: u64 = 1_000_000;
        let w = window(16.0, 36_000.0);
        let cfg = EquidConfig::default();
        for q in [2u64, 3, 6] {
            let rep = progression_equid(x, &w, q, &cfg).unwrap();
            assert!(
                rep.max_deviation <= 0.2,
                "q = {q}: max deviation {}",
                rep.max_deviation
            );
            // Reduced classes only.
            assert_eq!(rep.rows.len() as u64, euler_phi(q));
        }
    }

    #[test]
    fn residue_counts_are_consistent() {
        // Sum over reduced residues equals the count restricted to
        // gcd(n, q) = 1.
        let x: u64 = 50_000;
        let w = window(4.0, 1_000.0);
        let cfg = EquidConfig::default();
        let rep = progression_equid(x, &w, 6, &cfg).unwrap();
        let reduced_total: u64 = rep.rows.iter().map(|r| r.count).sum();
        // y' = 4 > 3 means every member is coprime to 6.
        assert_eq!(reduced_total, rep.psi_total);
    }

    #[test]
    fn count_bound_examples() {
        let x: u64 = 1_000_000;
        let y = (x as f64).ln().powi(3);
        let w = window(1.0, y);
        let cfg = EquidConfig::default();
        //

        // Full interval: the bound is generous.
        let full = short_interval_count_bound(
            x,
            &w,
            Progression {
                start: x,
                len: x,
                step: 1,
            },
            &cfg,
        )
        .unwrap();
        assert!(full.within);
        // Short window of length 1e3.
        let short = short_interval_count_bound(
            x,
            &w,
            Progression {
                start: x,
                len: 1_000,
                step: 1,
            },
            &cfg,
        )
        .unwrap();
        assert!(short.within, "observed {} bound {}", short.observed, short.bound);
        // Single point.
        let point = short_interval_count_bound(
            x,
            &w,
            Progression {
                start: x + 1,
                len: 1,
                step: 1,
            },
            &cfg,
        )
        .unwrap();
        assert!(point.observed <= 1);
        assert!(point.within);
        // Domain check.
        assert!(short_interval_count_bound(
            x,
            &w,
            Progression {
                start: x - 10,
                len: 5,
                step: 1,
            },
            &cfg,
        )
        .is_err());
    }

    #[test]
    fn corollary_style_progression_bound() {
        // |S(2N) cap P| <= C Delta Psi(2N) |P| / N for |P| >= N / log N.
        let n: u64 = 1_000_000;
        let nf = n as f64;
        let w = window(1.0, nf.ln().powi(3));
        let cfg = EquidConfig::default();
        let len = (nf / nf.ln()) as u64;
        let p = Progression {
            start: n + 7,
            len,
            step: 2,
        };
        let rep = short_interval_count_bound(n, &w, p, &cfg).unwrap();
        let delta = nf.ln().ln().ln() + nf.ln().powf(1.0 - 1.0 / 24.0);
        let psi_2n = crate::sieve::psi(2 * n, &w) as f64;
        let cor_bound = cfg.implicit_c * delta * psi_2n * len as f64 / nf;
        assert!(
            (rep.observed as f64) <= cor_bound,
            "observed {} vs corollary bound {cor_bound}",
            rep.observed
        );
    }

    #[test]
    fn character_smallness_report() {
        let x: u64 = 1_000_000;
        let w = window(16.0, 36_000.0);
        let cfg = EquidConfig::default();
        let chis = DirichletCharacter::group(3).unwrap();
        let nontrivial = chis.iter().find(|c| !c.is_principal()).unwrap();
        let rep = character_sum_smallness(x, &w, nontrivial, &cfg).unwrap();
        assert!(rep.regime_ok);
        // Within a generous constant of the envelope.
        assert!(
            rep.observed <= 5.0 * rep.predicted,
            "observed {} envelope {}",
            rep.observed,
            rep.predicted
        );
        // Principal characters are rejected.
        let principal = chis.iter().find(|c| c.is_principal()).unwrap();
        assert!(character_sum_smallness(x, &w, principal, &cfg).is_err());
        // Out-of-regime inputs still report, flagged.
        let tiny = character_sum_smallness(100, &window(1.0, 67_000.0), nontrivial, &cfg).unwrap();
        assert!(!tiny.regime_ok);
    }
}
