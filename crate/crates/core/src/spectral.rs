//! Discrete surrogate of R^d: a periodic lattice on [-L, L)^d with the
//! frequency convention xi_k = k/(2L) matching the e^{2 pi i xi.x} kernel.
//!
//! The transforms carry the physical quadrature weights, so the discrete
//! Plancherel identity holds exactly: h^d sum |u_j|^2 = (2L)^-d sum |u^_k|^2.
//! All Fourier symbols are functions of |xi| in this convention; the
//! Laplacian symbol is (2 pi |xi|)^2 and the 2 pi factor is absorbed into
//! the Riesz symbol |xi|^beta consistently (decay-rate conclusions do not
//! depend on that choice; see README).

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Orders (alpha, beta, gamma): Caputo order in time, Riesz order in space,
/// and the Sobolev index used by norms and probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrders {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FractionalOrders {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "orders.alpha = {alpha} must lie in (0, 1)"
            )));
        }
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::Config(format!(
                "orders.beta = {beta} must lie in (0, 2]"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "orders.gamma = {gamma} must be finite and >= 0"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// Midpoint of the admissible sector interval (pi/2, min(pi, pi/(2 alpha))).
    pub fn theta0(&self) -> f64 {
        let hi = (std::f64::consts::PI / (2.0 * self.alpha)).min(std::f64::consts::PI);
        0.5 * (std::f64::consts::FRAC_PI_2 + hi)
    }
}

/// Which side of the transform the stored values live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Physical => write!(f, "physical"),
            Representation::Spectral => write!(f, "spectral"),
        }
    }
}

/// Periodic lattice [-L, L)^d with n points per dimension (n a power of two).
pub struct SpectralGrid {
    dim: usize,
    n_per_dim: usize,
    half_width: f64,
    xi_abs: Vec<f64>,
    phase: Vec<f64>, // (-1)^(k_1+...+k_d), the shift from x_j = -L + j h
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n_per_dim", &self.n_per_dim)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n_per_dim: usize, half_width: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("grid.dim = {dim} must be 1, 2 or 3")));
        }
        if n_per_dim < 8 || !n_per_dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.n_per_dim = {n_per_dim} must be a power of two >= 8"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::Config(format!(
                "grid.half_width = {half_width} must be > 0"
            )));
        }
        let len = n_per_dim.pow(dim as u32);
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n_per_dim);
        let fft_inv = planner.plan_fft_inverse(n_per_dim);

        let mut xi_abs = vec![0.0; len];
        let mut phase = vec![1.0; len];
        let n = n_per_dim as i64;
        for (flat, (xa, ph)) in xi_abs.iter_mut().zip(phase.iter_mut()).enumerate() {
            let mut rem = flat;
            let mut sq = 0.0;
            let mut ksum = 0i64;
            for _ in 0..dim {
                let k = (rem % n_per_dim) as i64;
                rem /= n_per_dim;
                let signed = if k <= n / 2 { k } else { k - n };
                let xi = signed as f64 / (2.0 * half_width);
                sq += xi * xi;
                ksum += k;
            }
            *xa = sq.sqrt();
            *ph = if ksum % 2 == 0 { 1.0 } else { -1.0 };
        }
        Ok(Arc::new(Self {
            dim,
            n_per_dim,
            half_width,
            xi_abs,
            phase,
            fft_fwd,
            fft_inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_dim(&self) -> usize {
        self.n_per_dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.xi_abs.len()
    }

    /// Physical lattice spacing h = 2L/n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_per_dim as f64
    }

    /// |xi_k| for the flat index.
    pub fn xi_abs(&self, flat: usize) -> f64 {
        self.xi_abs[flat]
    }

    pub fn xi_abs_all(&self) -> &[f64] {
        &self.xi_abs
    }

    /// Physical coordinates of the flat index (first `dim` entries valid).
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let h = self.spacing();
        let mut rem = flat;
        for d in 0..self.dim {
            let j = rem % self.n_per_dim;
            rem /= self.n_per_dim;
            out[d] = -self.half_width + j as f64 * h;
        }
        out
    }

    /// Signed integer frequency index vector of the flat index.
    pub fn signed_index(&self, flat: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        let n = self.n_per_dim as i64;
        let mut rem = flat;
        for d in 0..self.dim {
            let k = (rem % self.n_per_dim) as i64;
            rem /= self.n_per_dim;
            out[d] = if k <= n / 2 { k } else { k - n };
        }
        out
    }

    /// Flat index of an integer frequency vector (entries in [-n/2, n/2)).
    pub fn flat_of_signed(&self, k: &[i64]) -> usize {
        let n = self.n_per_dim as i64;
        let mut flat = 0usize;
        for d in (0..self.dim).rev() {
            let kk = k[d].rem_euclid(n) as usize;
            flat = flat * self.n_per_dim + kk;
        }
        flat
    }

    pub fn same_grid(a: &Arc<SpectralGrid>, b: &Arc<SpectralGrid>) -> bool {
        Arc::ptr_eq(a, b)
            || (a.dim == b.dim && a.n_per_dim == b.n_per_dim && a.half_width == b.half_width)
    }
}

/// Complex lattice function in either representation.
#[derive(Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    repr: Representation,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("repr", &self.repr)
            .finish()
    }
}

impl Field {
    pub fn new(
        grid: Arc<SpectralGrid>,
        values: Vec<Complex64>,
        repr: Representation,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, repr })
    }

    pub fn zeros(grid: Arc<SpectralGrid>, repr: Representation) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            repr,
        }
    }

    /// Physical-space field from a function of the coordinates.
    pub fn from_physical_fn(grid: Arc<SpectralGrid>, f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut f = f;
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let x = grid.coords(flat);
            values.push(f(&x[..grid.dim()]));
        }
        Self {
            grid,
            values,
            repr: Representation::Physical,
        }
    }

    /// Isotropic Gaussian amplitude * exp(-|x|^2 / (2 sigma^2)).
    pub fn gaussian(grid: Arc<SpectralGrid>, sigma: f64, amplitude: f64) -> Self {
        Self::from_physical_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new(amplitude * (-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    /// Single lattice mode e^{2 pi i xi_k . x} with the given signed index.
    pub fn single_mode(grid: Arc<SpectralGrid>, k: &[i64], amplitude: f64) -> Self {
        let two_l = 2.0 * grid.half_width();
        Self::from_physical_fn(grid, |x| {
            let phase: f64 = x
                .iter()
                .zip(k)
                .map(|(x, k)| 2.0 * std::f64::consts::PI * (*k as f64 / two_l) * x)
                .sum();
            Complex64::new(amplitude * phase.cos(), amplitude * phase.sin())
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn expect_repr(&self, expected: Representation) -> Result<()> {
        if self.repr != expected {
            return Err(Error::RepresentationMismatch {
                expected: expected.to_string(),
                found: self.repr.to_string(),
            });
        }
        Ok(())
    }

    /// DFT normalized as the Riemann sum of the continuum transform:
    /// u^(xi_k) = h^d sum_j u(x_j) e^{-2 pi i xi_k . x_j}.
    pub fn forward_transform(&self) -> Result<Field> {
        self.expect_repr(Representation::Physical)?;
        let mut out = self.clone();
        out.transform_in_place(true);
        Ok(out)
    }

    /// Inverse transform; the round trip is the identity to machine precision.
    pub fn inverse_transform(&self) -> Result<Field> {
        self.expect_repr(Representation::Spectral)?;
        let mut out = self.clone();
        out.transform_in_place(false);
        Ok(out)
    }

    /// A spectral copy of the field, transforming if needed.
    pub fn to_spectral(&self) -> Field {
        match self.repr {
            Representation::Spectral => self.clone(),
            Representation::Physical => {
                let mut out = self.clone();
                out.transform_in_place(true);
                out
            }
        }
    }

    /// A physical copy of the field, transforming if needed.
    pub fn to_physical(&self) -> Field {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Spectral => {
                let mut out = self.clone();
                out.transform_in_place(false);
                out
            }
        }
    }

    fn transform_in_place(&mut self, forward: bool) {
        let grid = self.grid.clone();
        let n = grid.n_per_dim;
        let dim = grid.dim;
        let fft = if forward {
            grid.fft_fwd.clone()
        } else {
            grid.fft_inv.clone()
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let vol_factor = if forward {
            grid.spacing().powi(dim as i32)
        } else {
            (2.0 * grid.half_width).powi(-(dim as i32))
        };

        // the lattice-shift phase lives on the spectral side
        if !forward {
            for (v, ph) in self.values.iter_mut().zip(&grid.phase) {
                *v *= *ph;
            }
        }

        let len = self.values.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..dim {
            let stride = n.pow(axis as u32);
            let lines = len / n;
            for li in 0..lines {
                let inner = li % stride;
                let outer = li / stride;
                let base = outer * stride * n + inner;
                if stride == 1 {
                    let seg = &mut self.values[base..base + n];
                    fft.process_with_scratch(seg, &mut scratch);
                } else {
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = self.values[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        self.values[base + j * stride] = *l;
                    }
                }
            }
        }

        if forward {
            for (v, ph) in self.values.iter_mut().zip(&grid.phase) {
                *v *= *ph * vol_factor;
            }
            self.repr = Representation::Spectral;
        } else {
            for v in self.values.iter_mut() {
                *v *= vol_factor;
            }
            self.repr = Representation::Physical;
        }
    }

    /// Riesz symbol |xi|^beta applied spectrally; the zero mode maps to 0.
    ///
    /// beta in (0, 2] is the operator itself; a negative beta is accepted as
    /// the pseudo-inverse on mean-zero fields (the zero mode still maps to 0,
    /// so nothing ever divides by |xi| = 0). The input representation is kept.
    pub fn riesz_apply(&self, beta: f64) -> Result<Field> {
        if !(beta.abs() > 0.0 && beta.abs() <= 2.0) {
            return Err(Error::Config(format!(
                "riesz order beta = {beta} must satisfy 0 < |beta| <= 2"
            )));
        }
        let mut hat = self.to_spectral();
        for (v, &xa) in hat.values.iter_mut().zip(self.grid.xi_abs_all()) {
            if xa == 0.0 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= xa.powf(beta);
            }
        }
        Ok(match self.repr {
            Representation::Spectral => hat,
            Representation::Physical => {
                hat.transform_in_place(false);
                hat
            }
        })
    }

    /// l2 norm with the representation's quadrature weight (Plancherel-equal).
    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let w = match self.repr {
            Representation::Physical => self.grid.spacing().powi(self.grid.dim as i32),
            Representation::Spectral => (2.0 * self.grid.half_width).powi(-(self.grid.dim as i32)),
        };
        (sq * w).sqrt()
    }

    /// Sobolev norm of index gamma: |xi|^gamma (homogeneous) or
    /// (1+|xi|^2)^{gamma/2} weights on the spectral coefficients.
    ///
    /// The homogeneous variant enforces the zero-mean membership condition
    /// |u^(0)| <= 1e-10 * l2 mass and fails with `NotInHomogeneousSpace`
    /// otherwise; `sobolev_seminorm` computes the same quadrature without the
    /// membership gate (the zero mode carries zero weight for gamma > 0
    /// either way).
    pub fn sobolev_norm(&self, gamma: f64, homogeneous: bool) -> Result<f64> {
        let hat = self.to_spectral();
        if homogeneous {
            let l2_sq: f64 = hat.values.iter().map(|v| v.norm_sqr()).sum();
            let zero_mode = hat.values[0].norm();
            let tol = 1e-10;
            if zero_mode > tol * l2_sq.sqrt() {
                return Err(Error::NotInHomogeneousSpace {
                    zero_mode,
                    tolerance: tol,
                });
            }
        }
        Ok(hat.weighted_spectral_norm(gamma, homogeneous))
    }

    /// Homogeneous-weight quadrature without the membership gate; for
    /// gamma > 0 it equals the value `sobolev_norm` would certify, because
    /// the zero mode has zero weight. The decay experiments track this.
    pub fn sobolev_seminorm(&self, gamma: f64) -> f64 {
        self.to_spectral().weighted_spectral_norm(gamma, true)
    }

    fn weighted_spectral_norm(&self, gamma: f64, homogeneous: bool) -> f64 {
        debug_assert_eq!(self.repr, Representation::Spectral);
        let mut sq = 0.0;
        for (v, &xa) in self.values.iter().zip(self.grid.xi_abs_all()) {
            let w = if homogeneous {
                if xa == 0.0 {
                    if gamma == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    xa.powf(2.0 * gamma)
                }
            } else {
                (1.0 + xa * xa).powf(gamma)
            };
            sq += w * v.norm_sqr();
        }
        let vol = (2.0 * self.grid.half_width).powi(-(self.grid.dim as i32));
        (sq * vol).sqrt()
    }

    /// self + c * other, in self's representation.
    pub fn add_scaled(&self, other: &Field, c: Complex64) -> Result<Field> {
        if !SpectralGrid::same_grid(&self.grid, &other.grid) {
            return Err(Error::Config("fields live on different grids".into()));
        }
        let rhs = if other.repr == self.repr {
            other.clone()
        } else {
            match self.repr {
                Representation::Physical => other.to_physical(),
                Representation::Spectral => other.to_spectral(),
            }
        };
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&rhs.values) {
            *a += c * b;
        }
        Ok(out)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in self.values.iter_mut() {
            *v *= c;
        }
    }

    /// Relative l2 distance ||self - other|| / ||self||.
    pub fn rel_l2_distance(&self, other: &Field) -> Result<f64> {
        let diff = self.add_scaled(other, Complex64::new(-1.0, 0.0))?;
        let denom = self.l2_norm();
        Ok(if denom == 0.0 {
            diff.l2_norm()
        } else {
            diff.l2_norm() / denom
        })
    }

    /// Flat binary snapshot: header (dim: u32, n_per_dim: u32, L: f64,
    /// representation flag: u8), then interleaved re/im f64 pairs, row-major,
    /// all little-endian.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(17 + 16 * self.values.len());
        buf.extend_from_slice(&(self.grid.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.grid.n_per_dim as u32).to_le_bytes());
        buf.extend_from_slice(&self.grid.half_width.to_le_bytes());
        buf.push(match self.repr {
            Representation::Physical => 0u8,
            Representation::Spectral => 1u8,
        });
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<Field> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 17 {
            return Err(Error::Config("snapshot too short".into()));
        }
        let dim = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let repr = match bytes[16] {
            0 => Representation::Physical,
            1 => Representation::Spectral,
            other => return Err(Error::Config(format!("bad representation flag {other}"))),
        };
        let grid = SpectralGrid::new(dim, n, l)?;
        let expected = 17 + 16 * grid.len();
        if bytes.len() != expected {
            return Err(Error::Config(format!(
                "snapshot payload length {} != expected {}",
                bytes.len(),
                expected
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        for chunk in bytes[17..].chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            values.push(Complex64::new(re, im));
        }
        Field::new(grid, values, repr)
    }
}

/// Bounded-above-by-zero potential with an optional certified gap:
/// p <= 0 everywhere, and p <= -delta0 when delta0 > 0.
#[derive(Clone)]
pub struct Potential {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
    delta0: f64,
}

impl Potential {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<f64>, delta0: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "potential length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if !(delta0 >= 0.0) {
            return Err(Error::Config(format!("delta0 = {delta0} must be >= 0")));
        }
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max > 0.0 {
            return Err(Error::Config(format!(
                "potential must satisfy p <= 0; max value {max}"
            )));
        }
        if delta0 > 0.0 && max > -delta0 {
            return Err(Error::Config(format!(
                "certified bound violated: max p = {max} > -delta0 = {}",
                -delta0
            )));
        }
        Ok(Self {
            grid,
            values,
            delta0,
        })
    }

    pub fn zero(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            delta0: 0.0,
        }
    }

    pub fn constant(grid: Arc<SpectralGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n], (-c).max(0.0))
    }

    pub fn from_fn(
        grid: Arc<SpectralGrid>,
        delta0: f64,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let x = grid.coords(flat);
            values.push(f(&x[..grid.dim()]));
        }
        Self::new(grid, values, delta0)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn as_constant(&self) -> Option<f64> {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first).then_some(first)
    }

    /// Pointwise product p * f in physical space (f converted if needed).
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if !SpectralGrid::same_grid(&self.grid, f.grid()) {
            return Err(Error::Config("potential and field grids differ".into()));
        }
        let mut out = f.to_physical();
        for (v, p) in out.values.iter_mut().zip(&self.values) {
            *v *= *p;
        }
        Ok(out)
    }
}
