//! Heralded single-photon states from a two-photon joint amplitude.
//!
//! One photon of a pair (the herald) passes a frequency filter and is
//! detected; the partner (the signal) is thereby prepared in a conditional
//! state. Resolving the herald outcome finely (a specific detection mode, or
//! a single time stamp) leaves the signal pure; ignoring the outcome mixes
//! the conditionals and lowers the purity. Narrowing the filter restores
//! purity at the cost of heralding efficiency — `tradeoff_curve` tabulates
//! that exchange.
//!
//! Density matrices here are kernels on the signal grid: ρⱼₗ ≈ ρ(ωⱼ,ωₗ) with
//! trace Σⱼ qⱼ ρⱼⱼ = 1 and purity Σⱼₗ qⱼqₗ |ρⱼₗ|² under the grid quadrature.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cascade::MAX_TWO_PHOTON_POINTS;
use crate::error::{Error, Result};
use crate::filters::{FilterChain, FilterSpec};
use crate::povm::{time_state, WEIGHT_FLOOR};
use crate::spectral::{FrequencyGrid, SpectralAmplitude, TimeWindow};

/// Joint spectral amplitude Φ(ω, ω′) of a photon pair; ω runs over the
/// herald (filtered and detected) grid, ω′ over the signal grid. Stored
/// row-major with the herald index slowest and normalized so that
/// Σᵢⱼ qᵢq′ⱼ |Φᵢⱼ|² = 1.
#[derive(Debug, Clone)]
pub struct JointAmplitude {
    herald_grid: Arc<FrequencyGrid>,
    signal_grid: Arc<FrequencyGrid>,
    values: Vec<Complex64>,
}

impl JointAmplitude {
    /// Wraps and normalizes a row-major sample matrix.
    pub fn new(
        herald_grid: Arc<FrequencyGrid>,
        signal_grid: Arc<FrequencyGrid>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        for grid in [&herald_grid, &signal_grid] {
            if grid.n_points() > MAX_TWO_PHOTON_POINTS {
                return Err(Error::GridTooLarge {
                    n: grid.n_points(),
                    max: MAX_TWO_PHOTON_POINTS,
                });
            }
        }
        let expected = herald_grid.n_points() * signal_grid.n_points();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        let mut jsa = Self {
            herald_grid,
            signal_grid,
            values,
        };
        let n2 = jsa.norm_sqr();
        if n2 < WEIGHT_FLOOR {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n2.sqrt();
        for v in &mut jsa.values {
            *v *= s;
        }
        Ok(jsa)
    }

    /// Builds from a closure over (ω_herald, ω_signal); normalized.
    pub fn from_fn(
        herald_grid: Arc<FrequencyGrid>,
        signal_grid: Arc<FrequencyGrid>,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        for grid in [&herald_grid, &signal_grid] {
            if grid.n_points() > MAX_TWO_PHOTON_POINTS {
                return Err(Error::GridTooLarge {
                    n: grid.n_points(),
                    max: MAX_TWO_PHOTON_POINTS,
                });
            }
        }
        let mut values = Vec::with_capacity(herald_grid.n_points() * signal_grid.n_points());
        for &omega in herald_grid.points() {
            for &omega_prime in signal_grid.points() {
                values.push(f(omega, omega_prime));
            }
        }
        Self::new(herald_grid, signal_grid, values)
    }

    pub fn herald_grid(&self) -> &Arc<FrequencyGrid> {
        &self.herald_grid
    }

    pub fn signal_grid(&self) -> &Arc<FrequencyGrid> {
        &self.signal_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.signal_grid.n_points() + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        let q_signal = self.signal_grid.weights();
        let ns = self.signal_grid.n_points();
        self.herald_grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &qi)| {
                let row = &self.values[i * ns..(i + 1) * ns];
                qi * row
                    .iter()
                    .zip(q_signal)
                    .map(|(v, &w)| w * v.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Herald-side marginal density mᵢ = Σⱼ q′ⱼ |Φᵢⱼ|² (per unit ω, so that
    /// Σᵢ qᵢ mᵢ = 1).
    pub fn herald_marginal(&self) -> Vec<f64> {
        let q_signal = self.signal_grid.weights();
        let ns = self.signal_grid.n_points();
        (0..self.herald_grid.n_points())
            .map(|i| {
                self.values[i * ns..(i + 1) * ns]
                    .iter()
                    .zip(q_signal)
                    .map(|(v, &w)| w * v.norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// Downconversion-style correlated double Gaussian,
/// Φ ∝ exp(−(ω+ω′−2ω_p)²/(4σ₊²))·exp(−(ω−ω′)²/(4σ₋²)), normalized.
/// σ₊ = σ₋ gives a separable (Schmidt-number-1) pair.
pub fn correlated_gaussian_jsa(
    herald_grid: Arc<FrequencyGrid>,
    signal_grid: Arc<FrequencyGrid>,
    pump_center: f64,
    sigma_plus: f64,
    sigma_minus: f64,
) -> Result<JointAmplitude> {
    for (name, value) in [("sigma_plus", sigma_plus), ("sigma_minus", sigma_minus)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Domain {
                name,
                value,
                reason: "width must be positive and finite",
            });
        }
    }
    if !pump_center.is_finite() {
        return Err(Error::Domain {
            name: "pump_center",
            value: pump_center,
            reason: "must be finite",
        });
    }
    JointAmplitude::from_fn(herald_grid, signal_grid, |w, wp| {
        let sum = (w + wp - 2.0 * pump_center) / (2.0 * sigma_plus);
        let diff = (w - wp) / (2.0 * sigma_minus);
        Complex64::new((-sum * sum - diff * diff).exp(), 0.0)
    })
}

/// Product pair Φ(ω,ω′) = a(ω)·b(ω′): heralding leaves the signal photon in
/// b regardless of the herald outcome.
pub fn separable_jsa(
    herald_amplitude: &SpectralAmplitude,
    signal_amplitude: &SpectralAmplitude,
) -> Result<JointAmplitude> {
    let ns = signal_amplitude.grid().n_points();
    let mut values = Vec::with_capacity(herald_amplitude.grid().n_points() * ns);
    for a in herald_amplitude.values() {
        for b in signal_amplitude.values() {
            values.push(a * b);
        }
    }
    JointAmplitude::new(
        herald_amplitude.grid().clone(),
        signal_amplitude.grid().clone(),
        values,
    )
}

/// Signal-side density matrix conditioned on a herald detection, plus the
/// probability of that detection.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    grid: Arc<FrequencyGrid>,
    density: DMatrix<Complex64>,
    probability: f64,
}

impl HeraldedState {
    fn from_unnormalized(
        grid: Arc<FrequencyGrid>,
        mut density: DMatrix<Complex64>,
        probability: f64,
    ) -> Result<Self> {
        if probability < WEIGHT_FLOOR {
            return Err(Error::OutcomeUnreachable {
                weight: probability,
                floor: WEIGHT_FLOOR,
            });
        }
        density /= Complex64::new(probability, 0.0);
        Ok(Self {
            grid,
            density,
            probability,
        })
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    /// Density-matrix kernel ρⱼₗ on the signal grid.
    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.density
    }

    /// Probability of the heralding detection this state is conditioned on.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    /// Tr ρ = Σⱼ qⱼ ρⱼⱼ; 1 up to rounding by construction.
    pub fn trace(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(j, &q)| q * self.density[(j, j)].re)
            .sum()
    }

    /// Tr ρ² = Σⱼₗ qⱼqₗ |ρⱼₗ|².
    pub fn purity(&self) -> f64 {
        let qw = self.grid.weights();
        let n = self.grid.n_points();
        let mut acc = 0.0;
        for j in 0..n {
            // Diagonal once, off-diagonal twice via Hermitian symmetry.
            acc += qw[j] * qw[j] * self.density[(j, j)].norm_sqr();
            for l in j + 1..n {
                acc += 2.0 * qw[j] * qw[l] * self.density[(j, l)].norm_sqr();
            }
        }
        acc
    }

    /// Largest deviation |ρⱼₗ − conj(ρₗⱼ)| from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.grid.n_points();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for l in j..n {
                worst = worst.max((self.density[(j, l)] - self.density[(l, j)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest operator eigenvalue, from the Hermitian matrix
    /// √qⱼ ρⱼₗ √qₗ whose spectrum equals the kernel operator's.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.grid.n_points();
        let qw = self.grid.weights();
        let m = DMatrix::from_fn(n, n, |j, l| (qw[j] * qw[l]).sqrt() * self.density[(j, l)]);
        let eig = m.symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks the state is a physical density operator: Hermitian, unit
    /// trace, positive semidefinite, purity in (0, 1].
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let herm = self.hermiticity_residual();
        if herm > 1e-12 {
            return fail(format!("hermiticity residual {herm:e} exceeds 1e-12"));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return fail(format!("trace {tr} deviates from 1 beyond 1e-10"));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-10 {
            return fail(format!("negative eigenvalue {min_eig:e} below -1e-10"));
        }
        let purity = self.purity();
        if !(purity > 0.0 && purity <= 1.0 + 1e-12) {
            return fail(format!("purity {purity} outside (0, 1]"));
        }
        Ok(())
    }
}

fn check_herald_filter(phi: &JointAmplitude, filter: &FilterSpec) -> Result<()> {
    if !filter.grid().same_grid(phi.herald_grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Probability of heralding in detection mode φₖ behind the filter, and the
/// conditional (pure) signal amplitude:
/// cⱼ ∝ Σᵢ qᵢ Tᵢ φ*ₖᵢ Φᵢⱼ,  Pₖ = Σⱼ q′ⱼ |cⱼ|².
pub fn herald_outcome(
    phi: &JointAmplitude,
    filter: &FilterSpec,
    phi_k: &SpectralAmplitude,
) -> Result<(f64, SpectralAmplitude)> {
    check_herald_filter(phi, filter)?;
    if !phi_k.grid().same_grid(phi.herald_grid()) {
        return Err(Error::GridMismatch);
    }
    let mode_norm = phi_k.norm_sqr();
    if (mode_norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized {
            norm_sqr: mode_norm,
            tolerance: 1e-6,
        });
    }
    let nh = phi.herald_grid().n_points();
    let ns = phi.signal_grid().n_points();
    let qh = phi.herald_grid().weights();
    let t = filter.transmission();
    let mut c = vec![Complex64::new(0.0, 0.0); ns];
    for i in 0..nh {
        let coeff = qh[i] * t[i] * phi_k.values()[i].conj();
        if coeff.norm_sqr() == 0.0 {
            continue;
        }
        let row = &phi.values()[i * ns..(i + 1) * ns];
        for (acc, v) in c.iter_mut().zip(row) {
            *acc += coeff * v;
        }
    }
    let p_k: f64 = c
        .iter()
        .zip(phi.signal_grid().weights())
        .map(|(v, &w)| w * v.norm_sqr())
        .sum();
    if p_k < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: p_k,
            floor: WEIGHT_FLOOR,
        });
    }
    let amplitude = SpectralAmplitude::new(phi.signal_grid().clone(), c)?.normalized()?;
    Ok((p_k, amplitude))
}

/// Signal state when the herald photon is known to have been transmitted
/// but the outcome (mode, time) is not recorded:
/// ρⱼₗ = (1/𝒫)·Σᵢ qᵢ|Tᵢ|² Φᵢⱼ Φ*ᵢₗ with 𝒫 = Σᵢ qᵢ|Tᵢ|² mᵢ.
pub fn herald_mixed(phi: &JointAmplitude, filter: &FilterSpec) -> Result<HeraldedState> {
    check_herald_filter(phi, filter)?;
    let nh = phi.herald_grid().n_points();
    let ns = phi.signal_grid().n_points();
    let qh = phi.herald_grid().weights();
    let t = filter.transmission();
    // Rows √(qᵢ)|Tᵢ| Φᵢ· ; then ρ̃ = conj(AᴴA).
    let a = DMatrix::from_fn(nh, ns, |i, j| {
        (qh[i].sqrt() * t[i].norm()) * phi.value(i, j)
    });
    let rho = a.ad_mul(&a).conjugate();
    let probability: f64 = phi
        .herald_marginal()
        .iter()
        .zip(qh)
        .zip(t)
        .map(|((&m, &q), tv)| q * tv.norm_sqr() * m)
        .sum();
    HeraldedState::from_unnormalized(phi.signal_grid().clone(), rho, probability)
}

/// Signal state heralded by a click inside a time window at the transmitted
/// port: the probability-weighted mixture of the per-time-sample pure
/// conditionals, ρ = (1/𝒫_I)·Σⱼ λⱼ |c⁽ᵗʲ⁾⟩⟨c⁽ᵗʲ⁾|.
pub fn herald_windowed(
    phi: &JointAmplitude,
    filter: &FilterSpec,
    window: &TimeWindow,
) -> Result<HeraldedState> {
    check_herald_filter(phi, filter)?;
    let chain = FilterChain::single(filter.clone());
    let nh = phi.herald_grid().n_points();
    let ns = phi.signal_grid().n_points();
    let qh = phi.herald_grid().weights();
    let times = window.sample_times();
    let mut rows: DMatrix<Complex64> = DMatrix::zeros(times.len(), ns);
    for (row_index, &t) in times.iter().enumerate() {
        let (w, psi) = time_state(&chain, 0, t, window.eta())?;
        let lambda = w * window.dt() / window.n_samples() as f64;
        let scale = lambda.sqrt();
        for i in 0..nh {
            let coeff = scale * qh[i] * psi.values()[i].conj();
            let phi_row = &phi.values()[i * ns..(i + 1) * ns];
            for (j, v) in phi_row.iter().enumerate() {
                rows[(row_index, j)] += coeff * v;
            }
        }
    }
    let rho = rows.ad_mul(&rows).conjugate();
    let probability: f64 = phi
        .signal_grid()
        .weights()
        .iter()
        .enumerate()
        .map(|(j, &q)| q * rho[(j, j)].re)
        .sum();
    HeraldedState::from_unnormalized(phi.signal_grid().clone(), rho, probability)
}

/// One row of the purity/efficiency trade-off table.
#[derive(Debug, Clone, Copy)]
pub struct TradeoffPoint {
    pub gamma: f64,
    pub dt: f64,
    pub purity: f64,
    /// Probability of the heralding click (filter transmission, window, and
    /// detector efficiency all folded in).
    pub efficiency: f64,
}

/// Cross product of filters and windows, one `herald_windowed` evaluation
/// per (filter, window) pair, in the given order (filters outer).
pub fn tradeoff_curve(
    phi: &JointAmplitude,
    filters: &[FilterSpec],
    windows: &[TimeWindow],
) -> Result<Vec<TradeoffPoint>> {
    if filters.is_empty() || windows.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: 0,
        });
    }
    let mut points = Vec::with_capacity(filters.len() * windows.len());
    for filter in filters {
        for window in windows {
            let state = herald_windowed(phi, filter, window)?;
            points.push(TradeoffPoint {
                gamma: filter.gamma(),
                dt: window.dt(),
                purity: state.purity(),
                efficiency: state.probability(),
            });
        }
    }
    Ok(points)
}
