//! Saddle-point solver and the closed-form estimates built on truncated
//! Euler products.
//!
//! The saddle point `alpha(x, y)` is the stationary point of
//! `sigma -> x^sigma * zeta(sigma, y)`, i.e. the root of
//! `sum over p <= y of log p / (p^sigma - 1) = log x`. Everything here is a
//! pure function of a shared prime table, so one [`Saddle`] engine can be
//! reused across a whole parameter grid.

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::kahan::Kahan;
use crate::sieve::{primes_up_to, SmoothWindow};
use serde::Serialize;

/// Absolute tolerance for the saddle point itself.
const ALPHA_TOL: f64 = 1e-12;
/// Bracket floor; the solver never reports a smaller exponent.
const SIGMA_FLOOR: f64 = 1e-6;
/// Chunk length for compensated prime sums. Fixed so that the sequential
/// and parallel engines produce bit-identical values.
const SUM_CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SaddleContext {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub zeta_alpha_y: f64,
    /// log x / log y.
    pub u: f64,
    /// Residual of the stationarity equation at `alpha`, in units of log x.
    pub residual: f64,
    /// Set when the root lies above 1 (x below the y-regime) and the
    /// context was clamped to `alpha = 1`.
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MvRegime {
    NearOne,
    SmallSigma,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MvEnvelope {
    pub lower: f64,
    pub upper: f64,
    pub regime: MvRegime,
}

/// Envelope constants for the product bounds; the asymptotic statement only
/// fixes orders of magnitude, so the factors are configuration echoed into
/// reports.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MvConfig {
    pub near_one_lo: f64,
    pub near_one_hi: f64,
    pub err_mult: f64,
}

impl Default for MvConfig {
    fn default() -> Self {
        MvConfig {
            near_one_lo: 0.5,
            near_one_hi: 2.0,
            err_mult: 2.0,
        }
    }
}

/// Reusable saddle-point engine over a fixed prime table.
pub struct Saddle {
    y_max: f64,
    primes: Vec<u64>,
    ln_primes: Vec<f64>,
}

impl Saddle {
    /// Builds an engine valid for every `y <= y_max`.
    pub fn new(y_max: f64) -> Result<Self> {
        if !(y_max.is_finite()) || y_max < 2.0 {
            return Err(Error::domain(format!("saddle engine needs y_max >= 2, got {y_max}")));
        }
        if y_max > 2e9 {
            return Err(Error::capacity(format!(
                "prime table to y_max = {y_max} exceeds the 2e9 budget"
            )));
        }
        let primes = primes_up_to(y_max.floor() as u64);
        let ln_primes = primes.iter().map(|&p| (p as f64).ln()).collect();
        Ok(Saddle {
            y_max,
            primes,
            ln_primes,
        })
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    fn prime_count_below(&self, y: f64) -> usize {
        self.primes.partition_point(|&p| (p as f64) <= y)
    }

    /// `sum over p <= y of log p / (p^sigma - 1)` and its sigma-derivative,
    /// in one compensated pass.
    fn saddle_sum(&self, sigma: f64, y: f64, mode: ExecMode) -> (f64, f64) {
        let n = self.prime_count_below(y);
        let chunks = (n + SUM_CHUNK - 1) / SUM_CHUNK;
        let partials = exec::map_indexed(mode, chunks, |ci| {
            let lo = ci * SUM_CHUNK;
            let hi = (lo + SUM_CHUNK).min(n);
            let mut f = Kahan::new();
            let mut df = Kahan::new();
            for i in lo..hi {
                let lp = self.ln_primes[i];
                let ps = (sigma * lp).exp();
                let den = ps - 1.0;
                f.add(lp / den);
                df.add(-lp * lp * ps / (den * den));
            }
            (f, df)
        });
        let mut f = Kahan::new();
        let mut df = Kahan::new();
        for (pf, pdf) in partials {
            f.merge(pf);
            df.merge(pdf);
        }
        (f.value(), df.value())
    }

    /// Truncated Euler product `prod over p <= y of (1 - p^-sigma)^-1`,
    /// evaluated as a compensated log-sum.
    pub fn truncated_zeta(&self, sigma: f64, y: f64) -> Result<f64> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::domain(format!("truncated_zeta needs sigma > 0, got {sigma}")));
        }
        self.check_y(y)?;
        let n = self.prime_count_below(y);
        let chunks = (n + SUM_CHUNK - 1) / SUM_CHUNK;
        let partials = exec::map_indexed(ExecMode::default(), chunks, |ci| {
            let lo = ci * SUM_CHUNK;
            let hi = (lo + SUM_CHUNK).min(n);
            let mut acc = Kahan::new();
            for i in lo..hi {
                let ps = (-sigma * self.ln_primes[i]).exp();
                acc.add(-(-ps).ln_1p());
            }
            acc
        });
        let mut acc = Kahan::new();
        for p in partials {
            acc.merge(p);
        }
        Ok(acc.value().exp())
    }

    fn check_y(&self, y: f64) -> Result<()> {
        if !(2.0..=self.y_max).contains(&y) {
            return Err(Error::domain(format!(
                "y = {y} outside the engine range [2, {}]",
                self.y_max
            )));
        }
        Ok(())
    }

    /// Solves the stationarity equation for `alpha(x, y)` by bisection on
    /// `[1e-6, 1]` refined with Newton steps.
    pub fn solve_alpha(&self, x: f64, y: f64) -> Result<SaddleContext> {
        self.check_y(y)?;
        if !(x.is_finite()) || x <= 1.0 {
            return Err(Error::domain(format!("solve_alpha needs x > 1, got {x}")));
        }
        let mode = ExecMode::default();
        let target = x.ln();
        let f_at = |s: f64| {
            let (f, df) = self.saddle_sum(s, y, mode);
            (f - target, df)
        };

        let (mut lo, mut hi) = (SIGMA_FLOOR, 1.0);
        let (f_hi, _) = f_at(hi);
        if f_hi > 0.0 {
            // Root above sigma = 1: x is too small relative to y.
            let zeta = self.truncated_zeta(1.0, y)?;
            return Ok(SaddleContext {
                x,
                y,
                alpha: 1.0,
                zeta_alpha_y: zeta,
                u: target / y.ln(),
                residual: f_hi / target,
                clamped: true,
            });
        }
        // Bisection to a rough bracket.
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            let (fm, _) = f_at(mid);
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-3 {
                break;
            }
        }
        // Newton refinement; falls back to bisection when a step leaves the
        // bracket or the derivative degenerates.
        let mut s = 0.5 * (lo + hi);
        for _ in 0..60 {
            let (fs, dfs) = f_at(s);
            if fs > 0.0 {
                lo = s.max(lo);
            } else {
                hi = s.min(hi);
            }
            let step = if dfs.is_finite() && dfs != 0.0 {
                fs / dfs
            } else {
                f64::NAN
            };
            let next = s - step;
            let next = if step.is_finite() && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if (next - s).abs() <= ALPHA_TOL {
                s = next;
                break;
            }
            s = next;
        }
        let (fs, _) = f_at(s);
        let zeta = self.truncated_zeta(s, y)?;
        Ok(SaddleContext {
            x,
            y,
            alpha: s,
            zeta_alpha_y: zeta,
            u: target / y.ln(),
            residual: fs / target,
            clamped: false,
        })
    }

    /// Hildebrand-Tenenbaum main term `x^a z(a,y) / (a sqrt(2 pi log x log y))`.
    pub fn ht_estimate(&self, ctx: &SaddleContext) -> f64 {
        let root = (2.0 * std::f64::consts::PI * ctx.x.ln() * ctx.y.ln()).sqrt();
        (ctx.alpha * ctx.x.ln()).exp() * ctx.zeta_alpha_y / (ctx.alpha * root)
    }

    /// Main term for the window count: `g_{P(y')}(alpha) * ht_estimate`.
    ///
    /// Outside the stated regime (`y_lo` beyond a power of `log x`) the value
    /// is still computed; the returned flag reports regime membership.
    pub fn brt_estimate(&self, x: f64, w: &SmoothWindow) -> Result<BrtEstimate> {
        let ctx = self.solve_alpha(x, w.y_hi())?;
        let below: Vec<u64> = self
            .primes
            .iter()
            .copied()
            .take_while(|&p| (p as f64) < w.y_lo())
            .collect();
        let g = restricted_euler(&below, ctx.alpha)?;
        // Soft regime check: y' <= (log x)^4 and y > (log x)^2.
        let lx = x.ln();
        let regime_ok = w.y_lo() <= lx.powi(4) && w.y_hi() > lx.powi(2);
        Ok(BrtEstimate {
            value: g * self.ht_estimate(&ctx),
            restricted_factor: g,
            ctx,
            regime_ok,
        })
    }

    /// Prediction `baseline * d^{-alpha(x, y)}` for the dilated count.
    pub fn dilation_prediction(
        &self,
        x: f64,
        w: &SmoothWindow,
        d: f64,
        baseline: f64,
    ) -> Result<f64> {
        if !(1.0..=x / w.y_hi()).contains(&d) {
            return Err(Error::domain(format!(
                "dilation factor d = {d} outside [1, x/y] = [1, {}]",
                x / w.y_hi()
            )));
        }
        let ctx = self.solve_alpha(x, w.y_hi())?;
        Ok(baseline * (-ctx.alpha * d.ln()).exp())
    }

    /// Order-of-magnitude envelope for the truncated Euler product.
    pub fn mv_product_bounds(&self, sigma: f64, y: f64, cfg: &MvConfig) -> Result<MvEnvelope> {
        self.check_y(y)?;
        let ly = y.ln();
        if sigma < 2.0 / ly || sigma > 1.0 {
            return Err(Error::domain(format!(
                "mv_product_bounds needs 2/log y <= sigma <= 1, got sigma = {sigma}, y = {y}"
            )));
        }
        if sigma >= (2.0 / ly).max(1.0 - 4.0 / ly) {
            return Ok(MvEnvelope {
                lower: cfg.near_one_lo * ly,
                upper: cfg.near_one_hi * ly,
                regime: MvRegime::NearOne,
            });
        }
        let t = (1.0 - sigma) * ly;
        let main = y.powf(1.0 - sigma) / t;
        let err = 1.0 / t + y.powf(-sigma);
        let spread = cfg.err_mult * main * err;
        Ok(MvEnvelope {
            lower: ((main - spread).exp()) / (1.0 - sigma),
            upper: ((main + spread).exp()) / (1.0 - sigma),
            regime: MvRegime::SmallSigma,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BrtEstimate {
    pub value: f64,
    pub restricted_factor: f64,
    pub ctx: SaddleContext,
    pub regime_ok: bool,
}

/// Restricted Euler product `g_m(sigma) = prod over p | m of (1 - p^-sigma)`
/// for `m` given by its ascending prime list.
pub fn restricted_euler(primes: &[u64], sigma: f64) -> Result<f64> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::domain(format!("restricted_euler needs sigma > 0, got {sigma}")));
    }
    let mut acc = Kahan::new();
    for &p in primes {
        let ps = (-sigma * (p as f64).ln()).exp();
        acc.add((-ps).ln_1p());
    }
    Ok(acc.value().exp())
}

/// Main term of the classical expansion
/// `alpha = 1 - log(u log(u+1)) / log y + O(1/log y)`.
pub fn alpha_main_term(x: f64, y: f64) -> f64 {
    let u = x.ln() / y.ln();
    1.0 - (u * (u + 1.0).ln()).ln() / y.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_examples() {
        let s = Saddle::new(1e4).unwrap();
        assert!((s.truncated_zeta(1.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
        // Product over {2, 3, 5, 7}: (1/2 * 2/3 * 4/5 * 6/7)^-1 = 105/24.
        assert!((s.truncated_zeta(1.0, 10.0).unwrap() - 4.375).abs() < 1e-12);
        assert!((s.truncated_zeta(60.0, 100.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.truncated_zeta(0.0, 10.0).is_err());
        assert!(s.truncated_zeta(-1.0, 10.0).is_err());
    }

    #[test]
    fn restricted_euler_examples() {
        assert_eq!(restricted_euler(&[], 1.0).unwrap(), 1.0);
        assert!((restricted_euler(&[2], 1.0).unwrap() - 0.5).abs() < 1e-15);
        let direct: f64 = [2u64, 3, 5]
            .iter()
            .map(|&p| 1.0 - (p as f64).powf(-0.8))
            .product();
        assert!((restricted_euler(&[2, 3, 5], 0.8).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn alpha_solver_residual_and_bounds() {
        let s = Saddle::new(1e6).unwrap();
        for (x, y) in [(1e4, 100.0), (1e6, 1e3), (1e6, 316.0), (1e8, 1e4), (3e4, 173.0)] {
            let ctx = s.solve_alpha(x, y).unwrap();
            assert!(!ctx.clamped);
            assert!(ctx.alpha > 0.0 && ctx.alpha < 1.0001);
            assert!(
                ctx.residual.abs() <= 1e-9,
                "residual {} at x={x}, y={y}",
                ctx.residual
            );
        }
    }

    #[test]
    fn alpha_near_one_when_x_equals_y() {
        let s = Saddle::new(200.0).unwrap();
        let ctx = s.solve_alpha(100.0, 100.0).unwrap();
        // sum over p <= 100 of log p / (p - 1) is about log 100, so the
        // saddle point sits near 1.
        assert!(ctx.alpha >= 0.9, "alpha = {}", ctx.alpha);
    }

    #[test]
    fn alpha_clamps_below_regime() {
        let s = Saddle::new(1e4).unwrap();
        let ctx = s.solve_alpha(3.0, 1e4).unwrap();
        assert!(ctx.clamped);
        assert_eq!(ctx.alpha, 1.0);
    }

    #[test]
    fn alpha_matches_main_term() {
        let s = Saddle::new(1e4).unwrap();
        // log x < y <= x keeps the expansion applicable.
        let x: f64 = 1e6;
        let y = x.ln().powi(3);
        let ctx = s.solve_alpha(x, y).unwrap();
        let diff = (ctx.alpha - alpha_main_term(x, y)).abs();
        assert!(diff <= 3.0 / y.ln(), "diff = {diff}");
    }

    #[test]
    fn alpha_monotone_in_x_and_y() {
        let s = Saddle::new(1e5).unwrap();
        let xs = [1e4, 3e4, 1e5, 3e5, 1e6];
        let ys = [500.0, 2_000.0, 10_000.0, 100_000.0];
        for &y in &ys {
            let mut last = f64::INFINITY;
            for &x in &xs {
                let a = s.solve_alpha(x, y).unwrap().alpha;
                assert!(a <= last + 1e-10, "alpha not nonincreasing in x at ({x}, {y})");
                last = a;
            }
        }
        for &x in &xs {
            let mut last = 0.0;
            for &y in &ys {
                if y > x {
                    continue;
                }
                let a = s.solve_alpha(x, y).unwrap().alpha;
                assert!(a >= last - 1e-10, "alpha not nondecreasing in y at ({x}, {y})");
                last = a;
            }
        }
    }

    #[test]
    fn alpha_dilation_stability() {
        // |alpha(cx, y) - alpha(x, y)| stays O(1/log y) for c in [1, 2].
        let s = Saddle::new(1e4).unwrap();
        let (x, y) = (1e6, 1e3);
        let base = s.solve_alpha(x, y).unwrap().alpha;
        for c in [1.0, 1.25, 1.5, 2.0] {
            let a = s.solve_alpha(c * x, y).unwrap().alpha;
            assert!(
                (a - base).abs() <= 2.0 / y.ln(),
                "c = {c}: |{a} - {base}| too large"
            );
        }
    }

    #[test]
    fn ht_scaling_in_c() {
        // ht(cx, y) / ht(x, y) tracks c^alpha within 5% for c in [1, 2].
        let s = Saddle::new(1e4).unwrap();
        let (x, y) = (1e6, 1e3);
        let base_ctx = s.solve_alpha(x, y).unwrap();
        let base = s.ht_estimate(&base_ctx);
        for c in [1.2, 1.5, 2.0f64] {
            let ctx = s.solve_alpha(c * x, y).unwrap();
            let ratio = s.ht_estimate(&ctx) / base;
            let predicted = c.powf(base_ctx.alpha);
            assert!(
                (ratio / predicted - 1.0).abs() < 0.05,
                "c = {c}: {ratio} vs {predicted}"
            );
        }
    }

    #[test]
    fn ht_at_x_equals_y_tracks_floor() {
        // Every integer is x-smooth, so the main term should land within a
        // factor 2 of x itself.
        let s = Saddle::new(1e4).unwrap();
        for x in [1e4f64, 5e3] {
            let ctx = s.solve_alpha(x, x).unwrap();
            let ht = s.ht_estimate(&ctx);
            assert!(ht >= x / 2.0 && ht <= 2.0 * x, "x = {x}: ht = {ht}");
        }
    }

    #[test]
    fn brt_reduces_to_ht_for_y_lo_one() {
        let s = Saddle::new(1e4).unwrap();
        let w_full = SmoothWindow::new(1.0, 1e3).unwrap();
        let est = s.brt_estimate(1e6, &w_full).unwrap();
        let ctx = s.solve_alpha(1e6, 1e3).unwrap();
        assert_eq!(est.value, s.ht_estimate(&ctx));
        assert_eq!(est.restricted_factor, 1.0);
        // y_lo = 3 picks up exactly the p = 2 factor.
        let w3 = SmoothWindow::new(3.0, 1e3).unwrap();
        let est3 = s.brt_estimate(1e6, &w3).unwrap();
        let expect = 1.0 - 2f64.powf(-est3.ctx.alpha);
        assert!((est3.restricted_factor - expect).abs() < 1e-14);
    }

    #[test]
    fn dilation_prediction_domain() {
        let s = Saddle::new(1e4).unwrap();
        let w = SmoothWindow::new(16.0, 1e3).unwrap();
        let base = 1234.5;
        assert_eq!(s.dilation_prediction(1e7, &w, 1.0, base).unwrap(), base);
        assert!(s.dilation_prediction(1e7, &w, 0.5, base).is_err());
        assert!(s.dilation_prediction(1e7, &w, 2e4, base).is_err());
        // d = x / y_hi is the legal boundary.
        let v = s.dilation_prediction(1e7, &w, 1e7 / 1e3, base).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn mv_envelope_brackets_direct_product() {
        // Near-one points sit close enough to sigma = 1 for the default
        // factors (the implied constants of the near-one branch degenerate
        // towards its lower boundary); small-sigma points use the
        // exponential formula with its stated error envelope.
        let s = Saddle::new(1e4).unwrap();
        let cfg = MvConfig::default();
        let ly4 = (1e4f64).ln();
        for (sigma, y) in [
            (1.0, 100.0),
            (1.0, 1e3),
            (1.0, 1e4),
            (0.99, 100.0),
            (1.0 - 0.1 / ly4, 1e4),
            (0.5, 1e4),
            (0.35, 1e3),
        ] {
            let env = s.mv_product_bounds(sigma, y, &cfg).unwrap();
            let direct = s.truncated_zeta(sigma, y).unwrap();
            assert!(
                env.lower <= direct && direct <= env.upper,
                "sigma={sigma}, y={y}: {direct} outside [{}, {}] ({:?})",
                env.lower,
                env.upper,
                env.regime
            );
        }
    }

    #[test]
    fn mv_regime_boundary_is_near_one() {
        let s = Saddle::new(1e4).unwrap();
        let y: f64 = 1e4;
        let sigma = 1.0 - 4.0 / y.ln();
        let env = s.mv_product_bounds(sigma, y, &MvConfig::default()).unwrap();
        assert_eq!(env.regime, MvRegime::NearOne);
        let below = s
            .mv_product_bounds(sigma - 0.01, y, &MvConfig::default())
            .unwrap();
        assert_eq!(below.regime, MvRegime::SmallSigma);
        assert!(s.mv_product_bounds(0.1, y, &MvConfig::default()).is_err());
    }

    #[test]
    fn rankin_domination() {
        // psi(x, (1, y)) <= x^sigma zeta(sigma, y) on a grid up to 1e6.
        let s = Saddle::new(1e3).unwrap();
        for (x, y) in [
            (1_000u64, 30.0),
            (10_000, 100.0),
            (100_000, 50.0),
            (1_000_000, 500.0),
        ] {
            let w = SmoothWindow::new(1.0, y).unwrap();
            let count = crate::sieve::psi(x, &w) as f64;
            let alpha = s.solve_alpha(x as f64, y).unwrap().alpha;
            for sigma in [alpha, 0.9, 1.0] {
                let bound = (x as f64).powf(sigma) * s.truncated_zeta(sigma, y).unwrap();
                assert!(count <= bound * (1.0 + 1e-12), "x={x}, y={y}, sigma={sigma}");
            }
        }
    }
}
