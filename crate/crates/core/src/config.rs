//! Experiment configuration: a TOML file names a scenario and the problem
//! data; every tolerance and window the scenario uses is echoed back into
//! the output JSON for provenance.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::CauchyProblem;
use crate::error::{Error, Result};
use crate::spectral::{Field, FractionalOrders, Potential, Representation, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    CauchyDecay,
    ProfileGap,
    Triviality,
    BoundedDecay,
    BlowupProbe,
    Analyticity,
    Crosscheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrdersConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Sobolev index for norms and probes; defaults to beta/2.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n_per_dim: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialConfig {
    Zero,
    /// p = value everywhere (value <= 0).
    Constant { value: f64 },
    /// p(x) = -depth - amplitude cos(pi x_1 / L); requires depth >= amplitude.
    CosineWell { depth: f64, amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumConfig {
    Zero,
    Gaussian {
        sigma: f64,
        amplitude: f64,
    },
    /// Sum of lattice modes with signed integer indices.
    Modes {
        indices: Vec<Vec<i64>>,
        amplitudes: Vec<f64>,
    },
    /// Rough datum with spectral coefficients amplitude (1+|k|)^{-exponent}.
    PowerLaw {
        exponent: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalConfig {
    pub length: f64,
    pub basis_size: usize,
    /// "mode_one" | "smooth" (coefficients 1/n^2); the blow-up probe builds
    /// its own eigen-coefficient datum from `delta`.
    pub datum: Option<String>,
    /// p(x) = -depth - amplitude sin(pi x / L) on the interval.
    pub potential_depth: Option<f64>,
    pub potential_amplitude: Option<f64>,
    /// Blow-up probe roughness: gamma = beta (1 + delta), (a,phi_n) = n^{-1/2-delta/4}.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Ray angles as fractions of theta0.
    pub ray_fractions: Vec<f64>,
    pub radius_min: f64,
    pub radius_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub out_dir: Option<String>,
    pub seed: Option<u64>,
    pub orders: OrdersConfig,
    pub grid: Option<GridConfig>,
    pub potential: Option<PotentialConfig>,
    pub datum: Option<DatumConfig>,
    pub time: Option<TimeConfig>,
    pub fit: Option<FitConfig>,
    pub interval: Option<IntervalConfig>,
    pub probe: Option<ProbeConfig>,
    /// Cross-check times (crosscheck scenario); defaults to [0.5, 1, 5].
    pub crosscheck_times: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn orders(&self) -> Result<FractionalOrders> {
        let gamma = self.orders.gamma.unwrap_or(self.orders.beta / 2.0);
        FractionalOrders::new(self.orders.alpha, self.orders.beta, gamma)
    }

    /// Assemble the Cauchy problem for the unbounded-domain scenarios.
    pub fn cauchy_problem(&self, resolution_scale: u32) -> Result<CauchyProblem> {
        let gc = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing [grid] section".into()))?;
        let n = gc
            .n_per_dim
            .checked_mul(resolution_scale as usize)
            .ok_or_else(|| Error::Config("grid.n_per_dim overflow".into()))?;
        let grid = SpectralGrid::new(gc.dim, n, gc.half_width)?;
        let a = self.build_datum(&grid)?;
        let p = self.build_potential(&grid)?;
        CauchyProblem::new(self.orders()?, a, p)
    }

    pub fn build_datum(&self, grid: &Arc<SpectralGrid>) -> Result<Field> {
        let datum = self
            .datum
            .as_ref()
            .ok_or_else(|| Error::Config("missing [datum] section".into()))?;
        Ok(match datum {
            DatumConfig::Zero => Field::zeros(grid.clone(), Representation::Physical),
            DatumConfig::Gaussian { sigma, amplitude } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Config("datum.sigma must be > 0".into()));
                }
                Field::gaussian(grid.clone(), *sigma, *amplitude)
            }
            DatumConfig::Modes {
                indices,
                amplitudes,
            } => {
                if indices.len() != amplitudes.len() || indices.is_empty() {
                    return Err(Error::Config(
                        "datum.indices and datum.amplitudes must match and be nonempty".into(),
                    ));
                }
                let mut f = Field::zeros(grid.clone(), Representation::Physical);
                for (k, amp) in indices.iter().zip(amplitudes) {
                    if k.len() != grid.dim() {
                        return Err(Error::Config(format!(
                            "mode index {k:?} has wrong dimension"
                        )));
                    }
                    let mode = Field::single_mode(grid.clone(), k, *amp);
                    f = f.add_scaled(&mode, Complex64::new(1.0, 0.0))?;
                }
                f
            }
            DatumConfig::PowerLaw {
                exponent,
                amplitude,
            } => {
                let mut hat = Field::zeros(grid.clone(), Representation::Spectral);
                for flat in 0..grid.len() {
                    let k = grid.signed_index(flat);
                    let kn = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
                    hat.values_mut()[flat] =
                        Complex64::new(amplitude * (1.0 + kn).powf(-exponent), 0.0);
                }
                hat.inverse_transform()?
            }
        })
    }

    pub fn build_potential(&self, grid: &Arc<SpectralGrid>) -> Result<Potential> {
        let pc = self
            .potential
            .as_ref()
            .ok_or_else(|| Error::Config("missing [potential] section".into()))?;
        match pc {
            PotentialConfig::Zero => Ok(Potential::zero(grid.clone())),
            PotentialConfig::Constant { value } => Potential::constant(grid.clone(), *value),
            PotentialConfig::CosineWell { depth, amplitude } => {
                if !(*amplitude >= 0.0 && depth >= amplitude) {
                    return Err(Error::Config(
                        "cosine well needs depth >= amplitude >= 0 to keep p <= 0".into(),
                    ));
                }
                let l = grid.half_width();
                let delta0 = depth - amplitude;
                Potential::from_fn(grid.clone(), delta0, |x| {
                    -depth - amplitude * (std::f64::consts::PI * x[0] / l).cos()
                })
            }
        }
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let tc = self
            .time
            .as_ref()
            .ok_or_else(|| Error::Config("missing [time] section".into()))?;
        if tc.points == 0 {
            return Err(Error::Config("time.points must be > 0".into()));
        }
        crate::asymptotics::log_times(tc.t_min, tc.t_max, tc.points.max(2))
    }

    pub fn fit_window(&self) -> Result<(f64, f64)> {
        if let Some(FitConfig {
            window: Some((a, b)),
        }) = &self.fit
        {
            if !(*a > 0.0 && b > a) {
                return Err(Error::Config(format!("bad fit.window ({a}, {b})")));
            }
            return Ok((*a, *b));
        }
        let tc = self
            .time
            .as_ref()
            .ok_or_else(|| Error::Config("missing [time] section for the fit window".into()))?;
        Ok((tc.t_min, tc.t_max))
    }
}
