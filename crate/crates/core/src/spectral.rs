//! Frequency grids, spectral amplitudes, and time-domain transforms.
//!
//! Every object downstream (filters, POVM elements, joint amplitudes) lives
//! on a shared uniform [`FrequencyGrid`]. Integrals over frequency are
//! composite-trapezoid sums with the grid's quadrature weights: half weights
//! at the endpoints, full spacing inside, so the weights sum to the grid
//! span. A continuum ket |ω⟩ is represented on the grid as the indicator of
//! the nearest point scaled by the inverse square root of its weight, which
//! keeps the discrete basis orthonormal under the weighted inner product.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform frequency grid with composite-trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
    spacing: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Builds a uniform grid of `n_points` points covering
    /// `[omega_min, omega_max]`.
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Arc<Self>> {
        if !omega_min.is_finite() {
            return Err(Error::Domain {
                name: "omega_min",
                value: omega_min,
                reason: "must be finite",
            });
        }
        if !omega_max.is_finite() || omega_max <= omega_min {
            return Err(Error::Domain {
                name: "omega_max",
                value: omega_max,
                reason: "must be finite and greater than omega_min",
            });
        }
        if n_points < 2 {
            return Err(Error::Domain {
                name: "n_points",
                value: n_points as f64,
                reason: "need at least two points for a trapezoid rule",
            });
        }
        let spacing = (omega_max - omega_min) / (n_points - 1) as f64;
        let points: Vec<f64> = (0..n_points)
            .map(|i| omega_min + i as f64 * spacing)
            .collect();
        let mut weights = vec![spacing; n_points];
        weights[0] = 0.5 * spacing;
        weights[n_points - 1] = 0.5 * spacing;
        Ok(Arc::new(Self {
            omega_min,
            omega_max,
            n_points,
            spacing,
            points,
            weights,
        }))
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Midpoint of the covered interval.
    pub fn center(&self) -> f64 {
        0.5 * (self.omega_min + self.omega_max)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoid quadrature weights; they sum to the grid span.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the grid point closest to `omega`.
    pub fn nearest_index(&self, omega: f64) -> usize {
        let raw = ((omega - self.omega_min) / self.spacing).round();
        (raw.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Whether two grids describe the same discretization. Shared `Arc`s
    /// short-circuit; otherwise the defining parameters are compared.
    pub fn same_grid(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other)
            || (self.omega_min == other.omega_min
                && self.omega_max == other.omega_max
                && self.n_points == other.n_points)
    }
}

/// Complex spectral amplitude sampled on a [`FrequencyGrid`].
///
/// The weighted inner product ⟨f|g⟩ = Σᵢ wᵢ conj(fᵢ) gᵢ approximates
/// ∫ conj(f) g dω on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: Arc<FrequencyGrid>,
    values: Vec<Complex64>,
}

impl SpectralAmplitude {
    pub fn new(grid: Arc<FrequencyGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<FrequencyGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&w| f(w)).collect();
        Self { grid, values }
    }

    /// Normalized Gaussian wave packet centered at `center` with intensity
    /// standard deviation `sigma`.
    pub fn gaussian(grid: Arc<FrequencyGrid>, center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain {
                name: "sigma",
                value: sigma,
                reason: "must be positive and finite",
            });
        }
        let raw = Self::from_fn(grid, |w| {
            let x = (w - center) / (2.0 * sigma);
            Complex64::new((-x * x).exp(), 0.0)
        });
        raw.normalized()
    }

    /// Normalized spectrum of a one-sided exponential pulse: decay rate
    /// `kappa` in time, carrier `center`. The spectral profile is a
    /// Lorentzian amplitude of half width `kappa / 2`.
    pub fn exponential(grid: Arc<FrequencyGrid>, center: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain {
                name: "kappa",
                value: kappa,
                reason: "must be positive and finite",
            });
        }
        let raw = Self::from_fn(grid, |w| {
            (Complex64::new(0.5 * kappa, -(w - center))).inv()
        });
        raw.normalized()
    }

    /// Normalized boxcar amplitude covering `[lo, hi]`.
    pub fn flat(grid: Arc<FrequencyGrid>, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain {
                name: "hi",
                value: hi,
                reason: "must be greater than lo",
            });
        }
        let raw = Self::from_fn(grid, |w| {
            if w >= lo && w <= hi {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        raw.normalized()
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Quadrature approximation of ∫ |f|² dω.
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, &w)| w * v.norm_sqr())
            .sum()
    }

    /// Rescales to unit norm. Amplitudes that are already normalized within
    /// 1e-12 are returned unchanged, which makes normalization idempotent.
    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 || !n2.is_finite() {
            return Err(Error::ZeroNorm);
        }
        if (n2 - 1.0).abs() <= 1e-12 {
            return Ok(self.clone());
        }
        let scale = 1.0 / n2.sqrt();
        let values = self.values.iter().map(|v| v * scale).collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Weighted inner product ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if !self.grid.same_grid(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), &w) in self
            .values
            .iter()
            .zip(other.values.iter())
            .zip(self.grid.weights())
        {
            // Grouping conj(a)·b first keeps ⟨f|f⟩ exactly real: both
            // imaginary-part products are the same multiplication.
            acc += (a.conj() * b) * w;
        }
        Ok(acc)
    }

    /// Transforms to the time domain at the requested instants:
    /// f(t) = (2π)^(-1/2) Σᵢ wᵢ fᵢ exp(-i ωᵢ t).
    ///
    /// The instants must be strictly increasing. No FFT is used; the cost is
    /// O(n_points · n_times) and the instants are arbitrary.
    pub fn to_time_domain(&self, times: &[f64]) -> Result<TemporalAmplitude> {
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let values = times
            .iter()
            .map(|&t| {
                let mut acc = Complex64::new(0.0, 0.0);
                for ((v, &w), &omega) in self
                    .values
                    .iter()
                    .zip(self.grid.weights())
                    .zip(self.grid.points())
                {
                    acc += w * v * Complex64::from_polar(1.0, -omega * t);
                }
                acc * norm
            })
            .collect();
        TemporalAmplitude::new(times.to_vec(), values)
    }

    /// Time-lens transform: applies the quadratic spectral phase
    /// exp(-i α ν² / 2) with ν measured from the grid center, transforms to
    /// the time domain, and applies the quadratic temporal phase
    /// exp(-i β t² / 2). For β = 1/α the output magnitude reproduces the
    /// input spectrum with the frequency axis rescaled to t = -α ν.
    pub fn time_lens(&self, alpha: f64, beta: f64, times: &[f64]) -> Result<TemporalAmplitude> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                reason: "must be nonzero and finite",
            });
        }
        if !beta.is_finite() {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                reason: "must be finite",
            });
        }
        let center = self.grid.center();
        let chirped = Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(self.grid.points())
                .map(|(v, &omega)| {
                    let nu = omega - center;
                    v * Complex64::from_polar(1.0, -0.5 * alpha * nu * nu)
                })
                .collect(),
        };
        let transformed = chirped.to_time_domain(times)?;
        let values = transformed
            .values()
            .iter()
            .zip(transformed.times())
            .map(|(v, &t)| v * Complex64::from_polar(1.0, -0.5 * beta * t * t))
            .collect();
        TemporalAmplitude::new(transformed.times().to_vec(), values)
    }
}

/// Complex amplitude sampled at strictly increasing instants.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalAmplitude {
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl TemporalAmplitude {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.is_empty() || times.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::NonMonotonicTimes);
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// |f(t)|² at each instant.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Trapezoid approximation of ∫ |f(t)|² dt over the sampled instants.
    pub fn energy(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..self.times.len() - 1 {
            let dt = self.times[i + 1] - self.times[i];
            acc += 0.5 * dt * (self.values[i].norm_sqr() + self.values[i + 1].norm_sqr());
        }
        acc
    }
}

/// Detection window `[t0, t0 + dt]` with detector efficiency `eta`, sampled
/// by the midpoint rule with `n_samples` instants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    t0: f64,
    dt: f64,
    eta: f64,
    n_samples: usize,
}

impl TimeWindow {
    pub fn new(t0: f64, dt: f64, eta: f64, n_samples: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::Domain {
                name: "t0",
                value: t0,
                reason: "must be finite",
            });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain {
                name: "dt",
                value: dt,
                reason: "must be positive and finite",
            });
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain {
                name: "eta",
                value: eta,
                reason: "must lie in [0, 1]",
            });
        }
        if n_samples == 0 {
            return Err(Error::Domain {
                name: "n_samples",
                value: 0.0,
                reason: "need at least one midpoint sample",
            });
        }
        Ok(Self {
            t0,
            dt,
            eta,
            n_samples,
        })
    }

    /// Window with the default sampling density of 20 instants per 1/Γ of
    /// filter memory (at least one), adequate for purity errors below 1e-3.
    pub fn auto(t0: f64, dt: f64, eta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain {
                name: "gamma",
                value: gamma,
                reason: "must be positive and finite",
            });
        }
        let n = (20.0 * gamma * dt).ceil().max(1.0) as usize;
        Self::new(t0, dt, eta, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Midpoint-rule sample instants.
    pub fn sample_times(&self) -> Vec<f64> {
        let step = self.dt / self.n_samples as f64;
        (0..self.n_samples)
            .map(|j| self.t0 + (j as f64 + 0.5) * step)
            .collect()
    }
}
