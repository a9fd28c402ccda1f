//! Scenario dispatch: each experiment builds its problem from the config,
//! runs the relevant solver path, writes CSV/JSON artifacts, and checks the
//! theorem-case assertions. Exit status of the CLI is 0 iff every assertion
//! passes. Given the same config the artifacts are byte-identical.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::asymptotics::{
    decay_fit, elliptic_profile_solve, log_times, profile_gap, sweep_norms, triviality_probe,
    FitSummary, NormSpec, SolverPath, Verdict,
};
use crate::bounded::{
    assemble_operator, decay_check_bounded, eigen_solve, regularity_blowup_probe, IntervalProblem,
};
use crate::cauchy::{
    analyticity_probe, contour_invert_with_report, picard_envelope, picard_solve, SectorContour,
    SectorPoint,
};
use crate::config::{ExperimentConfig, Scenario};
use crate::error::{Error, Result};

/// One checked theorem case.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub case: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    fn check(case: &str, pass: bool, detail: String) -> Self {
        Self {
            case: case.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    /// First failed assertion as an error, for assert-only mode.
    pub fn into_result(self) -> Result<Self> {
        if let Some(bad) = self.assertions.iter().find(|a| !a.pass) {
            return Err(Error::AssertionFailure {
                case: bad.case.clone(),
                detail: bad.detail.clone(),
            });
        }
        Ok(self)
    }
}

struct Emitter {
    dir: Option<PathBuf>,
    artifacts: Vec<PathBuf>,
}

impl Emitter {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(|d| d.to_path_buf()),
            artifacts: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, series: &crate::asymptotics::NormSeries) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            series.write_csv(&path)?;
            self.artifacts.push(path);
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
            std::fs::write(&path, text)?;
            self.artifacts.push(path);
        }
        Ok(())
    }

    fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            let mut text = String::new();
            for row in rows {
                text.push_str(
                    &serde_json::to_string(row)
                        .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?,
                );
                text.push('\n');
            }
            std::fs::write(&path, text)?;
            self.artifacts.push(path);
        }
        Ok(())
    }
}

/// Run a scenario. `out_dir = None` suppresses artifacts (assert-only mode).
pub fn run(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    resolution_scale: u32,
) -> Result<RunOutcome> {
    if resolution_scale == 0 || !resolution_scale.is_power_of_two() {
        return Err(Error::Config(
            "resolution scale must be a power of two >= 1".into(),
        ));
    }
    let mut emit = Emitter::new(out_dir)?;
    emit.json("config_echo.json", config)?;
    let assertions = match config.scenario {
        Scenario::CauchyDecay => cauchy_decay(config, resolution_scale, &mut emit)?,
        Scenario::ProfileGap => profile_gap_scenario(config, resolution_scale, &mut emit)?,
        Scenario::Triviality => triviality(config, resolution_scale, &mut emit)?,
        Scenario::BoundedDecay => bounded_decay(config, resolution_scale, &mut emit)?,
        Scenario::BlowupProbe => blowup_probe(config, resolution_scale, &mut emit)?,
        Scenario::Analyticity => analyticity(config, resolution_scale, &mut emit)?,
        Scenario::Crosscheck => crosscheck(config, resolution_scale, &mut emit)?,
    };
    emit.json("assertions.json", &assertions)?;
    Ok(RunOutcome {
        scenario: config.scenario,
        assertions,
        artifacts: emit.artifacts,
    })
}

fn cauchy_decay(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let problem = config.cauchy_problem(scale)?;
    let orders = problem.orders;
    let times = config.times()?;
    let spec = NormSpec {
        gamma: orders.beta / 2.0,
        homogeneous: true,
    };
    let series = sweep_norms(&problem, &times, spec, SolverPath::Contour)?;
    emit.csv("norms.csv", &series)?;
    let window = config.fit_window()?;
    let fit = decay_fit(&series, window)?;
    let d = problem.grid().dim() as f64;
    let (case, pass, detail, theorem_case) = if d > orders.beta {
        let sharp = problem.potential().delta0() > 0.0 || problem.potential().is_zero();
        if sharp {
            (
                "thm-1.1/d>beta sharp t^-alpha",
                (fit.slope + orders.alpha).abs() <= 0.05,
                format!("slope {:.4} vs -alpha = {:.4}", fit.slope, -orders.alpha),
                "d > beta, sharp rate -alpha",
            )
        } else {
            (
                "thm-1.1/d>beta upper bound",
                fit.slope <= -orders.alpha + 0.05,
                format!("slope {:.4} <= -alpha + 0.05", fit.slope),
                "d > beta, upper bound t^-alpha",
            )
        }
    } else {
        (
            "thm-1.1/d<=beta",
            fit.slope <= -orders.alpha / 2.0 + 0.05,
            format!(
                "slope {:.4} <= -alpha/2 + 0.05 = {:.4}",
                fit.slope,
                -orders.alpha / 2.0 + 0.05
            ),
            "d <= beta, bound t^-alpha/2",
        )
    };
    emit.json(
        "fit.json",
        &FitSummary {
            slope: fit.slope,
            intercept: fit.intercept,
            window: fit.window,
            max_residual: fit.max_residual,
            theorem_case: theorem_case.to_string(),
        },
    )?;
    // stability under doubling t_min (drift gate from the fit-window policy)
    let fit2 = decay_fit(&series, (window.0 * 2.0, window.1))?;
    let drift = (fit2.slope - fit.slope).abs();
    Ok(vec![
        Assertion::check(case, pass, detail),
        Assertion::check(
            "fit-window/slope drift under doubled t_min",
            drift < 0.02,
            format!("drift {drift:.4}"),
        ),
    ])
}

fn profile_gap_scenario(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let problem = config.cauchy_problem(scale)?;
    let orders = problem.orders;
    let times = config.times()?;
    let gap = profile_gap(&problem, &times)?;
    emit.csv("profile_gap.csv", &gap)?;
    let window = config.fit_window()?;
    let fit = decay_fit(&gap, window)?;
    emit.json(
        "fit.json",
        &FitSummary {
            slope: fit.slope,
            intercept: fit.intercept,
            window: fit.window,
            max_residual: fit.max_residual,
            theorem_case: "||u - v||_{H^{beta/2}} = O(t^{-2 alpha})".to_string(),
        },
    )?;
    let want = -2.0 * orders.alpha;
    Ok(vec![Assertion::check(
        "eq-1.4/profile gap t^-2alpha",
        (fit.slope - want).abs() <= 0.1,
        format!("slope {:.4} vs {want:.4} +- 0.1", fit.slope),
    )])
}

fn triviality(config: &ExperimentConfig, scale: u32, emit: &mut Emitter) -> Result<Vec<Assertion>> {
    let problem = config.cauchy_problem(scale)?;
    let orders = problem.orders;
    let times = config.times()?;
    let verdict = triviality_probe(&problem, &times)?;
    emit.json("verdict.json", &verdict)?;
    let datum_is_zero = problem.datum().l2_norm() == 0.0;
    let mut out = Vec::new();
    match (&verdict, datum_is_zero) {
        (Verdict::Trivial, true) => {
            out.push(Assertion::check(
                "coro-1.2/zero datum",
                true,
                "TRIVIAL verdict for a = 0".into(),
            ));
        }
        (Verdict::PositiveLimit { limit, drift }, false) => {
            // the limit must match Gamma(1-alpha)^{-1} ||(A - p)^{-1} a||_{H^{beta/2}},
            // which is exactly ||v(1)||_{H^{beta/2}} by the profile scaling
            let v1 = elliptic_profile_solve(&problem, 1.0)?;
            let reference = v1.sobolev_norm(orders.beta / 2.0, false)?;
            let rel = (limit - reference).abs() / reference;
            out.push(Assertion::check(
                "coro-1.2/positive limit",
                rel <= 0.05,
                format!("t^alpha ||u|| -> {limit:.6e} vs elliptic reference {reference:.6e} (rel {rel:.3e}, drift {drift:.2e})"),
            ));
        }
        (v, _) => {
            out.push(Assertion::check(
                "coro-1.2/dichotomy",
                false,
                format!("unexpected verdict {v:?} for datum_is_zero = {datum_is_zero}"),
            ));
        }
    }
    Ok(out)
}

fn interval_problem(config: &ExperimentConfig, scale: u32) -> Result<IntervalProblem> {
    let ic = config
        .interval
        .as_ref()
        .ok_or_else(|| Error::Config("missing [interval] section".into()))?;
    let orders = config.orders()?;
    let n = ic.basis_size * scale as usize;
    let datum_kind = ic.datum.as_deref().unwrap_or("smooth");
    let a: Vec<f64> = match datum_kind {
        "mode_one" => (1..=n).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect(),
        "smooth" => (1..=n).map(|k| 1.0 / (k as f64 * k as f64)).collect(),
        other => {
            return Err(Error::Config(format!(
                "interval.datum = {other:?} (expected mode_one | smooth)"
            )))
        }
    };
    let depth = ic.potential_depth.unwrap_or(1.0);
    let amp = ic.potential_amplitude.unwrap_or(1.0);
    let l = ic.length;
    IntervalProblem::with_potential_fn(l, orders, a, move |x| {
        -depth - amp * (std::f64::consts::PI * x / l).sin()
    })
}

fn bounded_decay(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let problem = interval_problem(config, scale)?;
    let orders = problem.orders;
    let eig = eigen_solve(&assemble_operator(&problem)?)?;
    if let Some(dir) = emit.dir.clone() {
        let path = dir.join("eigensystem.csv");
        eig.write_csv(&path)?;
        emit.artifacts.push(path);
    }
    let times = config.times()?;
    let gammas = [0.0, orders.beta / 2.0, orders.beta];
    let mut slopes = Vec::new();
    let mut out = Vec::new();
    for (i, &g) in gammas.iter().enumerate() {
        let (series, fit) = decay_check_bounded(&problem, &eig, &times, g)?;
        emit.csv(&format!("bounded_norms_gamma{i}.csv"), &series)?;
        emit.json(
            &format!("bounded_fit_gamma{i}.json"),
            &FitSummary {
                slope: fit.slope,
                intercept: fit.intercept,
                window: fit.window,
                max_residual: fit.max_residual,
                theorem_case: format!("thm-1.3 gamma = {g}"),
            },
        )?;
        out.push(Assertion::check(
            &format!("thm-1.3/decay rate at gamma = {g:.3}"),
            (fit.slope + orders.alpha).abs() <= 0.05,
            format!("slope {:.4} vs -alpha = {:.4}", fit.slope, -orders.alpha),
        ));
        slopes.push(fit.slope);
    }
    let spread = slopes
        .iter()
        .fold(0.0f64, |acc, s| acc.max((s - slopes[0]).abs()));
    out.push(Assertion::check(
        "thm-1.3/rate independent of gamma",
        spread <= 0.04,
        format!("slope spread {spread:.4} across gamma in {{0, beta/2, beta}}"),
    ));
    Ok(out)
}

fn blowup_probe(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let ic = config
        .interval
        .as_ref()
        .ok_or_else(|| Error::Config("missing [interval] section".into()))?;
    let orders = config.orders()?;
    let delta = ic.delta.unwrap_or(0.2);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("interval.delta = {delta} outside (0,1)")));
    }
    let n = ic.basis_size * scale as usize;
    let l = ic.length;
    let depth = ic.potential_depth.unwrap_or(1.0);
    let amp = ic.potential_amplitude.unwrap_or(1.0);
    let pot = move |x: f64| -depth - amp * (std::f64::consts::PI * x / l).sin();
    // eigensystem first, then the rough datum with prescribed eigen-coefficients
    let shell = IntervalProblem::with_potential_fn(l, orders, vec![0.0; n], pot)?;
    let eig = eigen_solve(&assemble_operator(&shell)?)?;
    let d: Vec<f64> = (1..=n)
        .map(|k| (k as f64).powf(-0.5 - delta / 4.0))
        .collect();
    let a = eig.synthesize(&d);
    let problem = IntervalProblem::with_potential_fn(l, orders, a, pot)?;
    let gamma_idx = orders.beta * (1.0 + delta);
    let t = config.time.as_ref().map(|t| t.t_min).unwrap_or(50.0);
    let mut n_list = Vec::new();
    let mut nn = 64usize.min(n);
    while nn <= n {
        n_list.push(nn);
        nn *= 2;
    }
    let table = regularity_blowup_probe(&problem, &eig, gamma_idx, t, &n_list)?;
    emit.json("blowup_table.json", &table)?;
    let min_growth = table
        .growth_ratios
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let scaling_rel =
        (table.t_scaling_ratio - table.expected_t_scaling).abs() / table.expected_t_scaling;
    Ok(vec![
        Assertion::check(
            "eq-1.7/partial sums unbounded",
            min_growth > 1.05,
            format!("min S_2N/S_N = {min_growth:.4} over doublings {n_list:?}"),
        ),
        Assertion::check(
            "eq-1.7/leading part scales t^-2alpha",
            scaling_rel <= 0.05,
            format!(
                "S(2t)/S(t) = {:.5} vs 2^-2alpha = {:.5} (rel {scaling_rel:.3e})",
                table.t_scaling_ratio, table.expected_t_scaling
            ),
        ),
    ])
}

fn analyticity(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let problem = config.cauchy_problem(scale)?;
    let pc = config
        .probe
        .as_ref()
        .ok_or_else(|| Error::Config("missing [probe] section".into()))?;
    if pc.points < 4 {
        return Err(Error::Config("probe.points must be >= 4".into()));
    }
    let radii = log_times(pc.radius_min, pc.radius_max, pc.points)?;
    let theta0 = problem.theta0();
    let mut out = Vec::new();
    let mut tables = Vec::new();
    for frac in &pc.ray_fractions {
        let angle = frac * theta0;
        let table = analyticity_probe(&problem, angle, &radii)?;
        out.push(Assertion::check(
            &format!("eq-2.7/short-time slope on ray {frac:.2} theta0"),
            (table.fitted_slope - table.reference_slope).abs() <= 0.05,
            format!(
                "slope {:.4} vs -(gamma/beta) alpha = {:.4}",
                table.fitted_slope, table.reference_slope
            ),
        ));
        tables.push(table);
    }
    emit.json("analyticity.json", &tables)?;
    Ok(out)
}

fn crosscheck(
    config: &ExperimentConfig,
    scale: u32,
    emit: &mut Emitter,
) -> Result<Vec<Assertion>> {
    let problem = config.cauchy_problem(scale)?;
    let orders = problem.orders;
    let times = config
        .crosscheck_times
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 5.0]);
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    let a_norm = problem.datum().l2_norm();
    for &t in &times {
        let z = SectorPoint::real(t, &orders)?;
        let (up, report) = picard_solve(&problem, z, 1e-8)?;
        let contour = SectorContour::auto(&problem, t)?;
        let (uc, creport) = contour_invert_with_report(&problem, t, &contour)?;
        let rel = up.rel_l2_distance(&uc)?;
        out.push(Assertion::check(
            &format!("eq-2.3/cross-path agreement at t = {t}"),
            rel <= 1e-6,
            format!("||picard - contour|| / ||picard|| = {rel:.3e}"),
        ));
        // increment envelope with C fitted from the first increment
        let c_fit = report.increment_norms[0] / a_norm;
        let mut env_ok = true;
        let mut worst = 0.0f64;
        for (n, inc) in report.increment_norms.iter().enumerate().skip(1) {
            let env = picard_envelope(c_fit, orders.alpha, t, n) * a_norm;
            let ratio = inc / env;
            worst = worst.max(ratio);
            if *inc > env * (1.0 + 1e-9) {
                env_ok = false;
            }
        }
        out.push(Assertion::check(
            &format!("eq-2.6/increment envelope at t = {t}"),
            env_ok,
            format!(
                "max increment/envelope = {worst:.4} over {} iterates",
                report.iterates_used
            ),
        ));
        diagnostics.push(serde_json::json!({
            "t": t,
            "picard": report,
            "contour": creport,
            "cross_path_rel": rel,
        }));
    }
    emit.jsonl("diagnostics.jsonl", &diagnostics)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_decay_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
scenario = "cauchy_decay"
[orders]
alpha = 0.3
beta = 0.5
[grid]
dim = 1
n_per_dim = 128
half_width = 20.0
[potential]
kind = "constant"
value = -1.0
[datum]
kind = "gaussian"
sigma = 1.0
amplitude = 1.0
[time]
t_min = 100.0
t_max = 10000.0
points = 12
"#,
        )
        .unwrap()
    }

    #[test]
    fn cauchy_decay_scenario_passes_end_to_end() {
        let dir = std::env::temp_dir().join("fraclab_runner_decay");
        let _ = std::fs::remove_dir_all(&dir);
        let outcome = run(&small_decay_config(), Some(&dir), 1).unwrap();
        assert!(outcome.all_passed(), "{:?}", outcome.assertions);
        assert!(dir.join("norms.csv").exists());
        assert!(dir.join("fit.json").exists());
        assert!(dir.join("config_echo.json").exists());
    }

    #[test]
    fn rerun_reproduces_artifacts_byte_identically() {
        let dir1 = std::env::temp_dir().join("fraclab_runner_repro1");
        let dir2 = std::env::temp_dir().join("fraclab_runner_repro2");
        let _ = std::fs::remove_dir_all(&dir1);
        let _ = std::fs::remove_dir_all(&dir2);
        let cfg = small_decay_config();
        run(&cfg, Some(&dir1), 1).unwrap();
        run(&cfg, Some(&dir2), 1).unwrap();
        for name in ["norms.csv", "fit.json", "assertions.json"] {
            let a = std::fs::read(dir1.join(name)).unwrap();
            let b = std::fs::read(dir2.join(name)).unwrap();
            assert_eq!(a, b, "artifact {name} not reproducible");
        }
    }

    #[test]
    fn check_only_mode_writes_nothing() {
        let outcome = run(&small_decay_config(), None, 1).unwrap();
        assert!(outcome.artifacts.is_empty());
        assert!(outcome.all_passed());
    }

    #[test]
    fn resolution_scale_must_be_power_of_two() {
        assert!(matches!(
            run(&small_decay_config(), None, 3),
            Err(Error::Config(_))
        ));
    }
}
