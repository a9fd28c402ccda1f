//! Real gamma-function helpers used by the Mittag-Leffler kernels.
//!
//! `libm` supplies the IEEE-accurate `tgamma`/`lgamma_r`; what the series and
//! asymptotic expansions actually need is the *reciprocal* gamma, which is
//! entire and silently absorbs the poles at non-positive integers.

use std::f64::consts::PI;

/// Gamma function for real arguments (poles return +/- infinity).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Natural log of |Gamma(x)| together with the sign of Gamma(x).
pub fn ln_gamma(x: f64) -> (f64, f64) {
    let (l, s) = libm::lgamma_r(x);
    (l, s as f64)
}

/// Reciprocal gamma 1/Gamma(x), entire in x.
///
/// For x <= 0.5 the reflection formula 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
/// is used, so non-positive integer arguments map to exactly 0.
pub fn rgamma(x: f64) -> f64 {
    if x > 0.5 {
        let (l, s) = libm::lgamma_r(x);
        if l > 700.0 {
            return 0.0;
        }
        s as f64 * (-l).exp()
    } else {
        if x == x.floor() {
            return 0.0; // pole of Gamma
        }
        // sin(pi x) via argument reduction keeps accuracy for large |x|
        let sin_pix = sin_pi(x);
        let (l, s) = libm::lgamma_r(1.0 - x);
        if l > 700.0 {
            // Gamma(1-x) overflows; 1/Gamma(x) is huge but sin may cancel.
            // The product sin(pi x) * Gamma(1-x) / pi overflows anyway.
            return f64::INFINITY * sin_pix.signum() * s as f64;
        }
        sin_pix * s as f64 * l.exp() / PI
    }
}

/// sin(pi x) with exact argument reduction to avoid accuracy loss for large x.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    (PI * r).sin()
}
