//! Two-parameter Mittag-Leffler function E_{a,r}(z) = sum_k z^k / Gamma(a k + r).
//!
//! This is the numerical kernel of every propagator in the crate: the
//! homogeneous solution operator is the Fourier multiplier
//! E_{a,1}(-|xi|^b t^a) and its derivative involves E_{a,a}.
//!
//! Three evaluation regimes:
//! - power series near the origin (with a certified first-omitted-term bound
//!   and a round-off bound from the accumulated absolute sum),
//! - inverse-power asymptotic expansion far out,
//! - a deformed Hankel-contour quadrature of the Bromwich-type integral
//!   representation in between (uniformly accurate, also used as a fallback
//!   when the alternating series loses digits to cancellation).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gamma::rgamma;
use crate::quad::{composite_gauss, gauss_legendre, log_breaks};

/// Parameters (a, r) of E_{a,r}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub alpha: f64,
    pub rho: f64,
}

impl MlParams {
    /// alpha must be positive (solver paths stay in (0, 1]); rho positive and finite.
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::OutOfRegime(format!("alpha = {alpha} must be > 0")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::OutOfRegime(format!("rho = {rho} must be > 0")));
        }
        Ok(Self { alpha, rho })
    }
}

/// Which evaluation path produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlRegime {
    Series,
    Asymptotic,
    Crossover,
}

/// Value plus the regime that produced it and an absolute error estimate.
#[derive(Debug, Clone, Copy)]
pub struct MlEvaluation {
    pub value: Complex64,
    pub regime: MlRegime,
    pub est_error: f64,
}

/// Regime radii and caps. Defaults: series for |z| <= 5, asymptotics for
/// |z| >= 50, contour quadrature in between.
#[derive(Debug, Clone)]
pub struct MlConfig {
    pub series_radius: f64,
    pub asymptotic_radius: f64,
    pub series_cap: usize,
    /// Relative accuracy target of the unified evaluator.
    pub target_rel: f64,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            series_radius: 5.0,
            asymptotic_radius: 50.0,
            series_cap: 10_000,
            target_rel: 1e-12,
        }
    }
}

/// Power series with term-ratio truncation.
///
/// The returned `est_error` is the certified tail bound plus a round-off term
/// proportional to the accumulated absolute sum, so cancellation-dominated
/// evaluations report themselves as inaccurate instead of lying.
pub fn ml_series(params: MlParams, z: Complex64, tol: f64) -> Result<MlEvaluation> {
    ml_series_with(&MlConfig::default(), params, z, tol)
}

pub fn ml_series_with(
    cfg: &MlConfig,
    params: MlParams,
    z: Complex64,
    tol: f64,
) -> Result<MlEvaluation> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRegime(format!("tol = {tol} must be > 0")));
    }
    if z.norm() > cfg.series_radius {
        return Err(Error::OutOfRegime(format!(
            "|z| = {} above series radius {}",
            z.norm(),
            cfg.series_radius
        )));
    }
    let (value, est_error) = series_sum(params, z, tol, cfg.series_cap)?;
    Ok(MlEvaluation {
        value,
        regime: MlRegime::Series,
        est_error,
    })
}

fn series_sum(params: MlParams, z: Complex64, tol: f64, cap: usize) -> Result<(Complex64, f64)> {
    let MlParams { alpha, rho } = params;
    let mut term = Complex64::new(rgamma(rho), 0.0); // k = 0
    let mut sum = term;
    let mut abs_sum = term.norm();
    let mut prev_abs = term.norm();
    let mut decreasing = 0usize;
    for k in 0..cap {
        // t_{k+1} = t_k * z * Gamma(a k + r) / Gamma(a (k+1) + r), via lgamma
        // so neither z^k nor the Gamma values overflow on their own.
        let (lg_num, s_num) = crate::gamma::ln_gamma(alpha * k as f64 + rho);
        let (lg_den, s_den) = crate::gamma::ln_gamma(alpha * (k + 1) as f64 + rho);
        let ratio = s_num * s_den * (lg_num - lg_den).exp();
        // Gamma(a k + r) may sit on a pole only for non-positive arguments,
        // which rho > 0 excludes; the ratio is finite.
        term *= z * ratio;
        if k == 0 && term.norm() == 0.0 && rgamma(rho) == 0.0 {
            // degenerate start; cannot happen for rho > 0
        }
        let t_abs = term.norm();
        if !t_abs.is_finite() {
            return Err(Error::NonConvergent(format!(
                "series term overflowed at k = {}",
                k + 1
            )));
        }
        sum += term;
        abs_sum += t_abs;
        if t_abs == 0.0 {
            // only happens for z = 0: the tail vanishes identically
            return Ok((sum, f64::EPSILON * abs_sum));
        }
        if t_abs < prev_abs {
            decreasing += 1;
            let r = t_abs / prev_abs;
            if decreasing >= 2 && r < 0.95 {
                let tail = t_abs * r / (1.0 - r);
                if tail < tol {
                    let est = tail + f64::EPSILON * abs_sum;
                    return Ok((sum, est));
                }
            }
        } else {
            decreasing = 0;
        }
        prev_abs = t_abs;
    }
    if decreasing == 0 {
        return Err(Error::NonConvergent(format!(
            "term magnitudes still growing after {cap} terms (|z| = {})",
            z.norm()
        )));
    }
    Err(Error::NonConvergent(format!(
        "tail bound did not reach tol = {tol:e} within {cap} terms"
    )))
}

/// Truncated inverse-power expansion
/// E_{a,r}(z) ~ -sum_{k=1}^{terms} z^{-k} / Gamma(r - a k),
/// valid far out in the sector |arg z| > a pi / 2 (the algebraically decaying
/// directions). `est_error` is the magnitude of the first omitted term.
pub fn ml_asymptotic(params: MlParams, z: Complex64, terms: usize) -> Result<MlEvaluation> {
    ml_asymptotic_with(&MlConfig::default(), params, z, terms)
}

pub fn ml_asymptotic_with(
    cfg: &MlConfig,
    params: MlParams,
    z: Complex64,
    terms: usize,
) -> Result<MlEvaluation> {
    if z.norm() < cfg.asymptotic_radius {
        return Err(Error::OutOfRegime(format!(
            "|z| = {} below asymptotic radius {}",
            z.norm(),
            cfg.asymptotic_radius
        )));
    }
    if z.arg().abs() <= 0.5 * params.alpha * std::f64::consts::PI {
        return Err(Error::OutOfRegime(format!(
            "arg z = {} inside the exponential-growth sector |arg z| <= alpha pi / 2",
            z.arg()
        )));
    }
    let (value, first_omitted) = asymptotic_sum(params, z, terms);
    Ok(MlEvaluation {
        value,
        regime: MlRegime::Asymptotic,
        est_error: first_omitted,
    })
}

fn asymptotic_sum(params: MlParams, z: Complex64, terms: usize) -> (Complex64, f64) {
    let MlParams { alpha, rho } = params;
    let zinv = z.inv();
    let mut pow = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..=terms {
        pow *= zinv;
        sum -= pow * rgamma(rho - alpha * k as f64);
    }
    let first_omitted = (pow * zinv).norm() * rgamma(rho - alpha * (terms + 1) as f64).abs();
    (sum, first_omitted)
}

/// Adaptive variant for the unified evaluator: stops at the target or at the
/// optimal truncation point, and adds the exponentially small correction
/// (1/a) z^{(1-r)/a} exp(z^{1/a}) inside the mixed sector |arg z| < a pi.
fn asymptotic_adaptive(params: MlParams, z: Complex64, target_abs: f64) -> (Complex64, f64) {
    let MlParams { alpha, rho } = params;
    let zinv = z.inv();
    let mut pow = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last_mag = f64::INFINITY;
    let mut best_err = f64::INFINITY;
    for k in 1..=120usize {
        let coeff = rgamma(rho - alpha * k as f64);
        let term = pow * zinv * coeff;
        pow *= zinv;
        if coeff == 0.0 {
            continue; // Gamma pole: the term vanishes, not a smallness signal
        }
        let mag = term.norm();
        if mag > last_mag && k > 2 {
            best_err = last_mag; // divergence onset: stop before adding
            break;
        }
        sum -= term;
        last_mag = mag;
        best_err = mag;
        if mag < target_abs {
            break;
        }
    }
    let mut est = best_err;
    // Mixed-sector exponential term (decaying there); negligible unless
    // arg z approaches the algebraic/exponential boundary.
    let arg = z.arg().abs();
    if arg < alpha * std::f64::consts::PI {
        let w = complex_pow(z, 1.0 / alpha);
        if w.re < 650.0 {
            let contrib = complex_pow(z, (1.0 - rho) / alpha) * w.exp() / alpha;
            sum += contrib;
            est += f64::EPSILON * contrib.norm();
        }
    }
    (sum, est)
}

fn complex_pow(z: Complex64, s: f64) -> Complex64 {
    // principal branch, via (ln|z|, arg z)
    let ln_r = z.norm().ln();
    let th = z.arg();
    let m = (s * ln_r).exp();
    Complex64::new(m * (s * th).cos(), m * (s * th).sin())
}

/// Deformed Hankel-contour quadrature of
/// E_{a,r}(z) = (1/2 pi i) int e^zeta zeta^{a-r} / (zeta^a - z) dzeta
/// (+ the residue (1/a) z^{(1-r)/a} e^{z^{1/a}} when the pole is enclosed).
///
/// Two rays at angles +-psi joined by a circle of radius r0; Gauss-Legendre
/// panels on each piece. The error estimate comes from re-evaluating at a
/// coarser node count.
pub fn ml_integral(params: MlParams, z: Complex64) -> Result<MlEvaluation> {
    if z.norm() == 0.0 {
        return Ok(MlEvaluation {
            value: Complex64::new(rgamma(params.rho), 0.0),
            regime: MlRegime::Crossover,
            est_error: f64::EPSILON,
        });
    }
    let fine = hankel_quadrature(params, z, 16, 10, 48)?;
    let coarse = hankel_quadrature(params, z, 10, 7, 28)?;
    let est = (fine - coarse).norm() + f64::EPSILON * fine.norm();
    Ok(MlEvaluation {
        value: fine,
        regime: MlRegime::Crossover,
        est_error: est,
    })
}

fn hankel_quadrature(
    params: MlParams,
    z: Complex64,
    ray_pts: usize,
    ray_panels: usize,
    arc_pts: usize,
) -> Result<Complex64> {
    let MlParams { alpha, rho } = params;
    let zr = z.norm();
    let zarg = z.arg();
    let pi = std::f64::consts::PI;

    // Pole of the integrand on the principal branch, if any.
    let pole = if zarg.abs() < 0.999 * alpha * pi {
        Some((zr.powf(1.0 / alpha), zarg / alpha))
    } else {
        None
    };

    // Contour opening angle: keep a clear angular margin to the pole.
    let mut psi = 0.75 * pi;
    let mut include_pole = false;
    let mut r0 = 1.0f64;
    if let Some((pr, pa)) = pole {
        let pa_abs = pa.abs();
        if pa_abs >= psi + 0.10 {
            // pole safely outside the default opening
        } else if pa_abs >= 0.5 * pi + 0.25 {
            // exclude: close the opening below the pole angle
            psi = (pa_abs - 0.15).max(0.5 * pi + 0.05);
        } else {
            // pole near the positive axis: enclose it and add the residue
            psi = (pa_abs + 0.30).max(0.70 * pi).min(0.95 * pi);
            include_pole = true;
            if pr <= 1.6 * r0 {
                r0 = 0.5 * pr;
            }
        }
        if include_pole && pr <= r0 * 1.5 {
            r0 = 0.5 * pr;
        }
    }
    if r0 < 1e-8 {
        r0 = 1e-8;
    }

    let cos_psi = psi.cos(); // < 0
    let r_end = 42.0 / (-cos_psi);

    let mut total = Complex64::new(0.0, 0.0);

    // integrand e^zeta zeta^{a-r} / (zeta^a - z), with zeta given as (r, theta)
    let f = |r: f64, theta: f64| -> Complex64 {
        let ln_r = r.ln();
        let e_zeta = {
            let m = (r * theta.cos()).exp();
            let ph = r * theta.sin();
            Complex64::new(m * ph.cos(), m * ph.sin())
        };
        let zeta_pow = {
            let s = alpha - rho;
            let m = (s * ln_r).exp();
            Complex64::new(m * (s * theta).cos(), m * (s * theta).sin())
        };
        let zeta_alpha = {
            let m = (alpha * ln_r).exp();
            Complex64::new(m * (alpha * theta).cos(), m * (alpha * theta).sin())
        };
        e_zeta * zeta_pow / (zeta_alpha - z)
    };

    // Rays: zeta = r e^{+-i psi}, dzeta = e^{+-i psi} dr. Log-spaced panels.
    let breaks = log_breaks(r0, r_end, ray_panels);
    let (nodes, weights) = composite_gauss(&breaks, ray_pts);
    let e_plus = Complex64::new(psi.cos(), psi.sin());
    let e_minus = e_plus.conj();
    let mut ray_sum = Complex64::new(0.0, 0.0);
    for (r, w) in nodes.iter().zip(&weights) {
        // outbound on +psi minus inbound on -psi
        ray_sum += (f(*r, psi) * e_plus - f(*r, -psi) * e_minus) * *w;
    }
    total += ray_sum;

    // Circle: zeta = r0 e^{i phi}, dzeta = i r0 e^{i phi} dphi, phi in [-psi, psi].
    let (gx, gw) = gauss_legendre(arc_pts);
    let mut arc_sum = Complex64::new(0.0, 0.0);
    for (x, w) in gx.iter().zip(&gw) {
        let phi = psi * x;
        let zeta = Complex64::new(r0 * phi.cos(), r0 * phi.sin());
        arc_sum += f(r0, phi) * Complex64::new(0.0, 1.0) * zeta * (w * psi);
    }
    total += arc_sum;

    let mut value = total / Complex64::new(0.0, 2.0 * pi);
    if include_pole {
        if let Some((pr, pa)) = pole {
            if pr > r0 {
                let zeta_star = Complex64::new(pr * pa.cos(), pr * pa.sin());
                if zeta_star.re < 650.0 {
                    value += complex_pow(z, (1.0 - rho) / alpha) * zeta_star.exp() / alpha;
                } else {
                    return Err(Error::OutOfRegime(format!(
                        "residue term overflows: Re z^(1/alpha) = {}",
                        zeta_star.re
                    )));
                }
            }
        }
    }
    Ok(value)
}

/// Unified evaluator: dispatches series / crossover / asymptotic by |z|,
/// falling back from the series to the contour when the certified series
/// error (round-off included) misses the relative target.
pub fn ml(params: MlParams, z: Complex64) -> Result<MlEvaluation> {
    ml_with(&MlConfig::default(), params, z)
}

pub fn ml_with(cfg: &MlConfig, params: MlParams, z: Complex64) -> Result<MlEvaluation> {
    let MlParams { alpha, rho } = params;
    if z.norm() == 0.0 {
        return Ok(MlEvaluation {
            value: Complex64::new(rgamma(rho), 0.0),
            regime: MlRegime::Series,
            est_error: f64::EPSILON,
        });
    }
    // E_{1,1} is the exponential; keep it exact across the whole range.
    if alpha == 1.0 && rho == 1.0 {
        let value = z.exp();
        return Ok(MlEvaluation {
            value,
            regime: MlRegime::Series,
            est_error: 2.0 * f64::EPSILON * value.norm(),
        });
    }
    let r = z.norm();
    if r <= cfg.series_radius {
        match series_sum(params, z, cfg.target_rel, cfg.series_cap) {
            Ok((value, est)) if est <= 1e-11 * value.norm().max(1e-16) => {
                return Ok(MlEvaluation {
                    value,
                    regime: MlRegime::Series,
                    est_error: est,
                });
            }
            Ok(_) | Err(Error::NonConvergent(_)) if alpha < 1.0 => {
                return ml_integral(params, z);
            }
            Ok((value, est)) => {
                return Ok(MlEvaluation {
                    value,
                    regime: MlRegime::Series,
                    est_error: est,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let in_algebraic_sector = z.arg().abs() > 0.5 * alpha * std::f64::consts::PI + 0.02;
    if r >= cfg.asymptotic_radius && in_algebraic_sector {
        let (value, est) = asymptotic_adaptive(params, z, cfg.target_rel * 1e-3);
        if est <= cfg.target_rel.max(1e-11 * value.norm()) || alpha >= 1.0 {
            return Ok(MlEvaluation {
                value,
                regime: MlRegime::Asymptotic,
                est_error: est,
            });
        }
        // unusually hard corner: let the contour decide
        return ml_integral(params, z);
    }
    if alpha >= 1.0 {
        // alpha = 1, rho != 1 outside the series disk: the asymptotic series
        // covers the algebraic sector; nothing else is supported.
        if in_algebraic_sector {
            let (value, est) = asymptotic_adaptive(params, z, cfg.target_rel * 1e-3);
            return Ok(MlEvaluation {
                value,
                regime: MlRegime::Asymptotic,
                est_error: est,
            });
        }
        return Err(Error::OutOfRegime(
            "alpha = 1 with rho != 1 outside the series disk and the algebraic sector".into(),
        ));
    }
    ml_integral(params, z)
}

/// Fast evaluation of E along a fixed ray arg w = phase, via a log-spaced
/// table with cubic interpolation. Built once per propagator call and shared
/// across lattice modes; validated against direct evaluation on construction.
pub struct MlRayTable {
    params: MlParams,
    phase: f64,
    y_min: f64,
    step: f64,
    values: Vec<Complex64>, // g(y) = E(e^y e^{i phase}) * (1 + e^y)
    valid: bool,
}

impl MlRayTable {
    pub fn build(params: MlParams, phase: f64, w_min: f64, w_max: f64) -> Result<Self> {
        let w_min = w_min.max(1e-14);
        let w_max = w_max.max(w_min * 10.0);
        let span = (w_max / w_min).ln();
        let per_unit = 176.0; // points per e-fold (cubic interp needs density for ~1e-10)
        let n = ((span * per_unit).ceil() as usize + 8).max(64);
        let step = span / (n - 7) as f64;
        let y_min = w_min.ln() - 3.0 * step;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let y = y_min + step * i as f64;
            let w = y.exp();
            let zw = Complex64::from_polar(w, phase);
            let e = ml(params, zw)?;
            values.push(e.value * (1.0 + w));
        }
        let mut table = Self {
            params,
            phase,
            y_min,
            step,
            values,
            valid: true,
        };
        // spot-check the interpolation against direct evaluation
        let mut worst: f64 = 0.0;
        for i in 0..24 {
            let frac = (i as f64 + 0.381) / 24.0;
            let w = w_min * ((w_max / w_min).powf(frac));
            let direct = ml(params, Complex64::from_polar(w, phase))?.value;
            let interp = table.interp(w);
            let denom = direct.norm().max(1e-300);
            worst = worst.max((interp - direct).norm() / denom);
        }
        if worst > 5e-10 {
            table.valid = false;
        }
        Ok(table)
    }

    /// Whether interpolation passed its self-check (false falls back to
    /// direct evaluation on every call).
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// E_{a,r}(w e^{i phase}) for w >= 0.
    pub fn eval(&self, w: f64) -> Result<Complex64> {
        if !self.valid || w <= 0.0 || !self.in_range(w) {
            return Ok(ml(self.params, Complex64::from_polar(w.max(0.0), self.phase))?.value);
        }
        Ok(self.interp(w))
    }

    fn in_range(&self, w: f64) -> bool {
        let y = w.ln();
        let i = (y - self.y_min) / self.step;
        i >= 1.0 && i < (self.values.len() - 3) as f64
    }

    fn interp(&self, w: f64) -> Complex64 {
        let y = w.ln();
        let t = (y - self.y_min) / self.step;
        let i = t.floor() as usize;
        let i = i.clamp(1, self.values.len() - 3);
        let s = t - i as f64;
        // 4-point Lagrange cubic through values[i-1..=i+2] (uniform grid)
        let p0 = self.values[i - 1];
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        let p3 = self.values[i + 2];
        let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        let g = p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3;
        g / (1.0 + w)
    }
}
