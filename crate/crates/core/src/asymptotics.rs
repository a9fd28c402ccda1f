//! Long-time decay experiments: norm sweeps over logarithmic time grids,
//! log-log slope fits against the t^{-alpha/2} / t^{-alpha} dichotomy, the
//! elliptic-profile comparison with its t^{-2 alpha} gap, and the triviality
//! probe (a nonzero datum forces t^alpha ||u(t)|| to a positive limit).

use num_complex::Complex64;
use serde::Serialize;

use crate::cauchy::{
    contour_invert, picard_solve, solve_shifted_system, CauchyProblem, SectorContour, SectorPoint,
};
use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::spectral::Field;

/// Which norm a series tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec {
    pub gamma: f64,
    pub homogeneous: bool,
}

impl NormSpec {
    /// Evaluate on a field. Homogeneous norms go through the seminorm
    /// quadrature (identical value, no zero-mean membership gate): solution
    /// fields legitimately carry nonzero mass while their homogeneous norm
    /// decays, and the zero mode has zero weight for gamma > 0.
    pub fn evaluate(&self, f: &Field) -> Result<f64> {
        if self.homogeneous {
            Ok(f.sobolev_seminorm(self.gamma))
        } else {
            f.sobolev_norm(self.gamma, false)
        }
    }
}

/// Which solver path produced a series (contour inversion has t-independent
/// cost and is preferred at large times; Picard serves as the cross-check
/// for t <= 10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverPath {
    Contour,
    Picard,
    Eigen,
}

impl std::fmt::Display for SolverPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverPath::Contour => write!(f, "contour"),
            SolverPath::Picard => write!(f, "picard"),
            SolverPath::Eigen => write!(f, "eigen"),
        }
    }
}

/// A norm traced over strictly increasing positive times.
#[derive(Debug, Clone, Serialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub norm_spec: NormSpec,
    pub solver_path: SolverPath,
}

impl NormSeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        norm_spec: NormSpec,
        solver_path: SolverPath,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Config("times/values length mismatch".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|&t| t <= 0.0) {
            return Err(Error::Config(
                "times must be strictly increasing and positive".into(),
            ));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Config("norm values must be finite and >= 0".into()));
        }
        Ok(Self {
            times,
            values,
            norm_spec,
            solver_path,
        })
    }

    /// CSV rows (t, norm, gamma, homogeneous, solver_path).
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::from("t,norm,gamma,homogeneous,solver_path\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!(
                "{t:.17e},{v:.17e},{},{},{}\n",
                self.norm_spec.gamma, self.norm_spec.homogeneous, self.solver_path
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Least-squares fit of a decaying power law on a log-log window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub max_residual: f64,
}

/// Plain least squares; shared by every slope fit in the crate.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateWindow(format!(
            "need >= 2 points, have {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::DegenerateWindow("x values are all equal".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, max_residual))
}

/// Fit log(value) against log(t) over the window; needs at least 8 positive
/// points inside it.
pub fn decay_fit(series: &NormSeries, window: (f64, f64)) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in series.times.iter().zip(&series.values) {
        if *t >= window.0 && *t <= window.1 {
            if *v <= 0.0 {
                return Err(Error::DegenerateWindow(format!(
                    "non-positive value {v} at t = {t}"
                )));
            }
            xs.push(t.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::DegenerateWindow(format!(
            "only {} points in window [{}, {}]",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let (slope, intercept, max_residual) = linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        slope,
        intercept,
        window,
        max_residual,
    })
}

/// Log-spaced time grid, inclusive of both ends.
pub fn log_times(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || points < 2 {
        return Err(Error::Config(format!(
            "bad time grid: t_min = {t_min}, t_max = {t_max}, points = {points}"
        )));
    }
    let ratio = (t_max / t_min).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|j| t_min * (ratio * j as f64).exp())
        .collect())
}

/// Trace the requested norm of u(t) over the time grid.
pub fn sweep_norms(
    problem: &CauchyProblem,
    times: &[f64],
    spec: NormSpec,
    path: SolverPath,
) -> Result<NormSeries> {
    if times.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let u = match path {
            SolverPath::Contour => {
                let contour = SectorContour::auto(problem, t)?;
                contour_invert(problem, t, &contour)?
            }
            SolverPath::Picard => {
                let z = SectorPoint::real(t, &problem.orders)?;
                picard_solve(problem, z, 1e-9)?.0
            }
            SolverPath::Eigen => {
                return Err(Error::Config(
                    "the eigenexpansion path applies to interval problems only".into(),
                ))
            }
        };
        values.push(spec.evaluate(&u)?);
    }
    NormSeries::new(times.to_vec(), values, spec, path)
}

/// Solve the elliptic profile equation
/// ((-Lap)^{beta/2} - p) v = t^{-alpha}/Gamma(1-alpha) a.
/// Requires a certified gap p <= -delta0 < 0 (Lax-Milgram coercivity);
/// the output scales exactly like t^{-alpha}.
pub fn elliptic_profile_solve(problem: &CauchyProblem, t: f64) -> Result<Field> {
    if problem.potential().delta0() <= 0.0 {
        return Err(Error::NotCoercive);
    }
    if !(t > 0.0) {
        return Err(Error::Config(format!("t = {t} must be > 0")));
    }
    let alpha = problem.orders.alpha;
    let scale = t.powf(-alpha) / gamma(1.0 - alpha);
    let a_hat = problem.datum().to_spectral();
    let rhs: Vec<Complex64> = a_hat.values().iter().map(|v| v * scale).collect();
    let (v, _) = solve_shifted_system(problem, Complex64::new(0.0, 0.0), rhs)?;
    v.inverse_transform()
}

/// ||u(t) - v(t)||_{H^{beta/2}} over the time grid (both solves per point).
pub fn profile_gap(problem: &CauchyProblem, times: &[f64]) -> Result<NormSeries> {
    if problem.potential().delta0() <= 0.0 {
        return Err(Error::NotCoercive);
    }
    let spec = NormSpec {
        gamma: problem.orders.beta / 2.0,
        homogeneous: false,
    };
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let contour = SectorContour::auto(problem, t)?;
        let u = contour_invert(problem, t, &contour)?;
        let v = elliptic_profile_solve(problem, t)?;
        let diff = u.add_scaled(&v, Complex64::new(-1.0, 0.0))?;
        values.push(spec.evaluate(&diff)?);
    }
    NormSeries::new(times.to_vec(), values, spec, SolverPath::Contour)
}

/// Outcome of the triviality probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    /// The datum is zero (and so is the solution).
    Trivial,
    /// t^alpha ||u(t)||_{H^{beta/2}} stabilized at a positive limit,
    /// certifying a nonzero datum.
    PositiveLimit { limit: f64, drift: f64 },
}

/// Probe the dichotomy: if ||u(t)||_{H^{beta/2}} = o(t^{-alpha}) the datum
/// must vanish. Computes q(t) = t^alpha ||u(t)||_{H^{beta/2}} over the grid;
/// the verdict is POSITIVE_LIMIT when the tail estimate exceeds 10x its
/// drift, TRIVIAL when a = 0, and `Inconclusive` otherwise.
///
/// The probed quantity carries the t^alpha scaling (the limit equals
/// ||((-Lap)^{beta/2} - p)^{-1} a||_{H^{beta/2}} / Gamma(1-alpha)).
pub fn triviality_probe(problem: &CauchyProblem, times: &[f64]) -> Result<Verdict> {
    if problem.potential().delta0() <= 0.0 {
        return Err(Error::NotCoercive);
    }
    if times.len() < 4 {
        return Err(Error::Config("need at least 4 probe times".into()));
    }
    if problem.datum().l2_norm() == 0.0 {
        return Ok(Verdict::Trivial);
    }
    let alpha = problem.orders.alpha;
    let spec = NormSpec {
        gamma: problem.orders.beta / 2.0,
        homogeneous: false,
    };
    let mut scaled = Vec::with_capacity(times.len());
    for &t in times {
        let contour = SectorContour::auto(problem, t)?;
        let u = contour_invert(problem, t, &contour)?;
        scaled.push(t.powf(alpha) * spec.evaluate(&u)?);
    }
    // examine the trailing half
    let tail = &scaled[scaled.len() / 2..];
    let limit = tail.iter().sum::<f64>() / tail.len() as f64;
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(0.0f64, f64::max);
    let drift = hi - lo;
    if limit > 10.0 * drift {
        Ok(Verdict::PositiveLimit { limit, drift })
    } else {
        Err(Error::Inconclusive(format!(
            "t^alpha ||u|| tail limit {limit:e} within 10x drift {drift:e}"
        )))
    }
}

/// Fit summary written next to each norm-series CSV.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub max_residual: f64,
    pub theorem_case: String,
}
