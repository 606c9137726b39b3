//! POVM elements for filtered single-photon detection.
//!
//! Three representations cover every element that arises here:
//!
//! - `Pure`: a weighted rank-one projector w |ψ⟩⟨ψ| with ψ normalized;
//! - `Diagonal`: a frequency-diagonal element ∫ d(ω) |ω⟩⟨ω| dω stored as its
//!   density d on the grid;
//! - `Ensemble`: a weighted sum Σⱼ λⱼ |ψⱼ⟩⟨ψⱼ| of (generally non-orthogonal)
//!   rank-one projectors, the natural form of time-windowed elements.
//!
//! Traces and Hilbert–Schmidt products of ensembles are evaluated through
//! the Gram matrix Gⱼₗ = ⟨ψⱼ|ψₗ⟩: Tr Π = Σⱼ λⱼ and Tr Π² = Σⱼₗ λⱼλₗ |Gⱼₗ|²,
//! so no dense frequency-space operator is ever materialized. A `Diagonal`
//! element has divergent rank in the continuum; its purity is regularized at
//! the grid resolution h (Tr D² := h Σᵢ wᵢ dᵢ²), which reproduces the limit
//! of densely sampled time windows.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::{FilterChain, FilterSpec};
use crate::spectral::{FrequencyGrid, SpectralAmplitude, TimeWindow};

/// Weights below this floor mean the outcome cannot occur at any
/// experimentally meaningful rate; constructors refuse to normalize by them.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// Tolerance for "the input state must be normalized" preconditions.
const STATE_NORM_TOL: f64 = 1e-6;

fn weighted_dot(weights: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&w, x), y) in weights.iter().zip(a).zip(b) {
        acc += w * x.conj() * y;
    }
    acc
}

fn check_normalized(state: &SpectralAmplitude) -> Result<()> {
    let n2 = state.norm_sqr();
    if (n2 - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::NotNormalized {
            norm_sqr: n2,
            tolerance: STATE_NORM_TOL,
        });
    }
    Ok(())
}

/// A single POVM element on the one-photon subspace.
#[derive(Debug, Clone)]
pub enum PovmElement {
    /// w |ψ⟩⟨ψ| with ψ normalized on the grid.
    Pure {
        weight: f64,
        amplitude: SpectralAmplitude,
    },
    /// ∫ d(ω) |ω⟩⟨ω| dω stored as the density d ≥ 0 on the grid.
    Diagonal {
        grid: Arc<FrequencyGrid>,
        density: Vec<f64>,
    },
    /// Σⱼ λⱼ |ψⱼ⟩⟨ψⱼ| with each ψⱼ normalized; the ψⱼ need not be orthogonal.
    Ensemble {
        weights: Vec<f64>,
        amplitudes: Vec<SpectralAmplitude>,
    },
}

impl PovmElement {
    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        match self {
            PovmElement::Pure { amplitude, .. } => amplitude.grid(),
            PovmElement::Diagonal { grid, .. } => grid,
            PovmElement::Ensemble { amplitudes, .. } => amplitudes[0].grid(),
        }
    }

    /// Tr Π. For a diagonal element this is ∫ d(ω) dω.
    pub fn trace(&self) -> f64 {
        match self {
            PovmElement::Pure { weight, .. } => *weight,
            PovmElement::Diagonal { grid, density } => density
                .iter()
                .zip(grid.weights())
                .map(|(&d, &w)| w * d)
                .sum(),
            PovmElement::Ensemble { weights, .. } => weights.iter().sum(),
        }
    }

    /// Tr Π² through the Gram matrix (see the module docs for the diagonal
    /// regularization).
    pub fn trace_sqr(&self) -> f64 {
        match self {
            PovmElement::Pure { weight, .. } => weight * weight,
            PovmElement::Diagonal { grid, density } => {
                let h = grid.spacing();
                h * density
                    .iter()
                    .zip(grid.weights())
                    .map(|(&d, &w)| w * d * d)
                    .sum::<f64>()
            }
            PovmElement::Ensemble {
                weights,
                amplitudes,
            } => {
                let qw = amplitudes[0].grid().weights();
                let n = weights.len();
                let mut acc = 0.0;
                for j in 0..n {
                    let gjj = weighted_dot(qw, amplitudes[j].values(), amplitudes[j].values());
                    acc += weights[j] * weights[j] * gjj.norm_sqr();
                    for l in j + 1..n {
                        let g = weighted_dot(qw, amplitudes[j].values(), amplitudes[l].values());
                        acc += 2.0 * weights[j] * weights[l] * g.norm_sqr();
                    }
                }
                acc
            }
        }
    }

    /// Purity Tr Π² / (Tr Π)², in (0, 1] for any physical element. Returns
    /// NaN for an element of zero trace (for example a window with η = 0).
    pub fn purity(&self) -> f64 {
        let tr = self.trace();
        self.trace_sqr() / (tr * tr)
    }

    /// Effective number of modes the element addresses: 1 / purity.
    pub fn d_eff(&self) -> f64 {
        1.0 / self.purity()
    }

    /// Hilbert–Schmidt product Tr(Π₁ Π₂) between two elements on one grid.
    pub fn hs_product(&self, other: &Self) -> Result<f64> {
        if !self.grid().same_grid(other.grid()) {
            return Err(Error::GridMismatch);
        }
        use PovmElement::*;
        let value = match (self, other) {
            (Diagonal { grid, density: d1 }, Diagonal { density: d2, .. }) => {
                let h = grid.spacing();
                h * d1
                    .iter()
                    .zip(d2)
                    .zip(grid.weights())
                    .map(|((&a, &b), &w)| w * a * b)
                    .sum::<f64>()
            }
            (Diagonal { grid, density }, rank) | (rank, Diagonal { grid, density }) => {
                let qw = grid.weights();
                rank.components()
                    .iter()
                    .map(|(lambda, psi)| {
                        lambda
                            * psi
                                .values()
                                .iter()
                                .zip(density)
                                .zip(qw)
                                .map(|((v, &d), &w)| w * d * v.norm_sqr())
                                .sum::<f64>()
                    })
                    .sum()
            }
            (a, b) => {
                let qw = self.grid().weights();
                let mut acc = 0.0;
                for (la, pa) in a.components() {
                    for (lb, pb) in b.components() {
                        let g = weighted_dot(qw, pa.values(), pb.values());
                        acc += la * lb * g.norm_sqr();
                    }
                }
                acc
            }
        };
        Ok(value)
    }

    /// Kernel diagonal weighted by the quadrature, i.e. the spectral density
    /// the element assigns to each grid point. For a diagonal element this
    /// is the stored density itself.
    pub fn diagonal_density(&self) -> Vec<f64> {
        match self {
            PovmElement::Pure { weight, amplitude } => amplitude
                .values()
                .iter()
                .zip(amplitude.grid().weights())
                .map(|(v, &w)| w * weight * v.norm_sqr())
                .collect(),
            PovmElement::Diagonal { density, .. } => density.clone(),
            PovmElement::Ensemble {
                weights,
                amplitudes,
            } => {
                let grid = amplitudes[0].grid();
                let mut acc = vec![0.0; grid.n_points()];
                for (lambda, psi) in weights.iter().zip(amplitudes) {
                    for (a, v) in acc.iter_mut().zip(psi.values()) {
                        *a += lambda * v.norm_sqr();
                    }
                }
                for (a, &w) in acc.iter_mut().zip(grid.weights()) {
                    *a *= w;
                }
                acc
            }
        }
    }

    /// Largest operator eigenvalue. For an ensemble the nonzero spectrum
    /// equals that of the Hermitian matrix Bⱼₗ = √(λⱼλₗ) Gⱼₗ.
    pub fn max_eigenvalue(&self) -> f64 {
        match self {
            PovmElement::Pure { weight, .. } => *weight,
            PovmElement::Diagonal { density, .. } => {
                density.iter().copied().fold(0.0, f64::max)
            }
            PovmElement::Ensemble {
                weights,
                amplitudes,
            } => {
                let qw = amplitudes[0].grid().weights();
                let n = weights.len();
                let b = DMatrix::from_fn(n, n, |j, l| {
                    let g = weighted_dot(qw, amplitudes[j].values(), amplitudes[l].values());
                    (weights[j] * weights[l]).sqrt() * g
                });
                let eig = b.symmetric_eigen();
                eig.eigenvalues.iter().copied().fold(0.0, f64::max)
            }
        }
    }

    /// Born-rule probability of this outcome on a normalized input state.
    pub fn detection_probability(&self, state: &SpectralAmplitude) -> Result<f64> {
        if !self.grid().same_grid(state.grid()) {
            return Err(Error::GridMismatch);
        }
        check_normalized(state)?;
        let p = match self {
            PovmElement::Diagonal { grid, density } => state
                .values()
                .iter()
                .zip(density)
                .zip(grid.weights())
                .map(|((v, &d), &w)| w * d * v.norm_sqr())
                .sum(),
            rank => {
                let qw = self.grid().weights();
                rank.components()
                    .iter()
                    .map(|(lambda, psi)| {
                        lambda * weighted_dot(qw, psi.values(), state.values()).norm_sqr()
                    })
                    .sum()
            }
        };
        Ok(p)
    }

    /// Checks the element is a valid effect: nonnegative weights and
    /// densities, normalized ensemble amplitudes, and no operator eigenvalue
    /// above 1 (within 1e-8, the midpoint-rule overshoot allowance at the
    /// default window sampling).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        match self {
            PovmElement::Pure { weight, amplitude } => {
                if !weight.is_finite() || *weight < 0.0 {
                    return fail(format!("pure element weight {weight} is not in [0, ∞)"));
                }
                if (amplitude.norm_sqr() - 1.0).abs() > 1e-8 {
                    return fail("pure element amplitude is not normalized".into());
                }
            }
            PovmElement::Diagonal { density, .. } => {
                if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return fail("diagonal density has negative or non-finite entries".into());
                }
            }
            PovmElement::Ensemble {
                weights,
                amplitudes,
            } => {
                if weights.len() != amplitudes.len() || weights.is_empty() {
                    return fail("ensemble weights and amplitudes differ in length".into());
                }
                if weights.iter().any(|l| !l.is_finite() || *l < 0.0) {
                    return fail("ensemble weights must be nonnegative".into());
                }
                for a in amplitudes {
                    if (a.norm_sqr() - 1.0).abs() > 1e-8 {
                        return fail("ensemble amplitude is not normalized".into());
                    }
                }
            }
        }
        let max_eig = self.max_eigenvalue();
        if max_eig > 1.0 + 1e-8 {
            return fail(format!(
                "largest eigenvalue {max_eig} exceeds 1; the element is not an effect"
            ));
        }
        if self.trace() > 0.0 {
            let purity = self.purity();
            if !(purity > 0.0 && purity <= 1.0 + 1e-12) {
                return fail(format!("purity {purity} outside (0, 1]"));
            }
        }
        Ok(())
    }

    fn components(&self) -> Vec<(f64, &SpectralAmplitude)> {
        match self {
            PovmElement::Pure { weight, amplitude } => vec![(*weight, amplitude)],
            PovmElement::Ensemble {
                weights,
                amplitudes,
            } => weights.iter().copied().zip(amplitudes.iter()).collect(),
            PovmElement::Diagonal { .. } => Vec::new(),
        }
    }
}

/// Element for detecting the photon in mode φ behind the filter:
/// Πₖ = wₖ |Tφₖ⟩⟨Tφₖ| with amplitude ∝ T*(ω) φₖ(ω) and
/// wₖ = ∫ |T|² |φₖ|² dω.
pub fn ideal_element(filter: &FilterSpec, mode: &SpectralAmplitude) -> Result<PovmElement> {
    filtered_projector(filter.grid(), filter.transmission(), mode)
}

/// Companion element on the reflected port: amplitude ∝ R*(ω) φₖ(ω) with
/// weight uₖ = 1 - wₖ.
pub fn reflected_element(filter: &FilterSpec, mode: &SpectralAmplitude) -> Result<PovmElement> {
    filtered_projector(filter.grid(), filter.reflection(), mode)
}

fn filtered_projector(
    grid: &Arc<FrequencyGrid>,
    response: &[Complex64],
    mode: &SpectralAmplitude,
) -> Result<PovmElement> {
    if !grid.same_grid(mode.grid()) {
        return Err(Error::GridMismatch);
    }
    check_normalized(mode)?;
    let values: Vec<Complex64> = response
        .iter()
        .zip(mode.values())
        .map(|(c, v)| c.conj() * v)
        .collect();
    let raw = SpectralAmplitude::new(grid.clone(), values)?;
    let weight = raw.norm_sqr();
    if weight < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight,
            floor: WEIGHT_FLOOR,
        });
    }
    Ok(PovmElement::Pure {
        weight,
        amplitude: raw.normalized()?,
    })
}

/// No-click element of the ideal spectral measurement: the photon is
/// reflected regardless of mode, Π_null = ∫ |R(ω)|² |ω⟩⟨ω| dω.
pub fn null_element(filter: &FilterSpec) -> PovmElement {
    PovmElement::Diagonal {
        grid: filter.grid().clone(),
        density: filter.reflection().iter().map(|r| r.norm_sqr()).collect(),
    }
}

/// Weight and normalized amplitude of the time-stamped detection state at
/// port `port` of the chain: Ψ_t(ω) ∝ C*(ω) e^{iωt} with detection weight
/// w = (η / 2π) ∫ |C|² dω per unit time.
///
/// The detector efficiency η scales the weight only; the returned amplitude
/// (and hence every purity built from it) is independent of η.
pub fn time_state(
    chain: &FilterChain,
    port: usize,
    t: f64,
    eta: f64,
) -> Result<(f64, SpectralAmplitude)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            reason: "must lie in [0, 1]",
        });
    }
    let coeff = chain.port_coefficient(port)?;
    let grid = chain.grid().clone();
    let k: f64 = coeff
        .iter()
        .zip(grid.weights())
        .map(|(c, &w)| w * c.norm_sqr())
        .sum();
    if k < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: k,
            floor: WEIGHT_FLOOR,
        });
    }
    let scale = 1.0 / k.sqrt();
    let values: Vec<Complex64> = coeff
        .iter()
        .zip(grid.points())
        .map(|(c, &omega)| c.conj() * Complex64::from_polar(scale, omega * t))
        .collect();
    let weight = eta * k / (2.0 * std::f64::consts::PI);
    Ok((weight, SpectralAmplitude::new(grid, values)?))
}

/// Overlap ⟨Ψ_t|Ψ_t'⟩ between two time-stamped detection states at one port.
/// For a Lorentzian filter this approaches e^{-Γ|t'-t|} e^{iω₀(t'-t)}.
pub fn overlap_time(chain: &FilterChain, port: usize, t: f64, t_prime: f64) -> Result<Complex64> {
    let coeff = chain.port_coefficient(port)?;
    let grid = chain.grid();
    let dt = t_prime - t;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = 0.0;
    for ((c, &w), &omega) in coeff.iter().zip(grid.weights()).zip(grid.points()) {
        let p = w * c.norm_sqr();
        k += p;
        acc += p * Complex64::from_polar(1.0, omega * dt);
    }
    if k < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: k,
            floor: WEIGHT_FLOOR,
        });
    }
    Ok(acc / k)
}

/// Continuum overlap of two time-stamped states behind a Lorentzian filter:
/// e^{-γ|dt|} e^{iω₀ dt} with dt = t' - t.
pub fn closed_form_overlap(gamma: f64, omega0: f64, dt: f64) -> Complex64 {
    Complex64::from_polar((-gamma * dt.abs()).exp(), omega0 * dt)
}

/// POVM element for "a click in `[t0, t0 + dt]` at this port", discretized
/// by the midpoint rule: Π_I ≈ Σⱼ λⱼ |Ψ_tⱼ⟩⟨Ψ_tⱼ| with λⱼ = w·dt/n.
pub fn window_element(chain: &FilterChain, port: usize, window: &TimeWindow) -> Result<PovmElement> {
    let coeff = chain.port_coefficient(port)?;
    let grid = chain.grid().clone();
    let k: f64 = coeff
        .iter()
        .zip(grid.weights())
        .map(|(c, &w)| w * c.norm_sqr())
        .sum();
    if k < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: k,
            floor: WEIGHT_FLOOR,
        });
    }
    let scale = 1.0 / k.sqrt();
    let base: Vec<Complex64> = coeff.iter().map(|c| c.conj() * scale).collect();
    let w_rate = window.eta() * k / (2.0 * std::f64::consts::PI);
    let lambda = w_rate * window.dt() / window.n_samples() as f64;
    let times = window.sample_times();
    let mut weights = Vec::with_capacity(times.len());
    let mut amplitudes = Vec::with_capacity(times.len());
    for &t in &times {
        let values: Vec<Complex64> = base
            .iter()
            .zip(grid.points())
            .map(|(b, &omega)| b * Complex64::from_polar(1.0, omega * t))
            .collect();
        weights.push(lambda);
        amplitudes.push(SpectralAmplitude::new(grid.clone(), values)?);
    }
    Ok(PovmElement::Ensemble {
        weights,
        amplitudes,
    })
}

/// Continuum purity of a time-window element behind a Lorentzian filter as a
/// function of x = Γ·Δt: (e^{-2x} + 2x - 1) / (2x²), with the small-x series
/// used below x = 0.01 to avoid cancellation.
pub fn closed_form_purity(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            reason: "gamma·dt must be nonnegative and finite",
        });
    }
    if x < 0.01 {
        // 1 - (2/3)x + (1/3)x² - (2/15)x³ + (2/45)x⁴ + O(x⁵)
        return Ok(1.0 + x * (-2.0 / 3.0 + x * (1.0 / 3.0 + x * (-2.0 / 15.0 + x * 2.0 / 45.0))));
    }
    Ok(((-2.0 * x).exp() + 2.0 * x - 1.0) / (2.0 * x * x))
}

/// Orthonormal detection-mode basis on a grid.
///
/// Bin bases tile a frequency interval with boxcar modes (constant over a
/// run of grid points); they are exactly orthonormal by construction. The
/// Hermite-Gauss family is re-orthonormalized on the grid so that pairwise
/// inner products are δⱼₗ to machine precision.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    grid: Arc<FrequencyGrid>,
    kind: BasisKind,
}

#[derive(Debug, Clone)]
enum BasisKind {
    /// Half-open index ranges [a, b), ascending and disjoint.
    Bins { ranges: Vec<(usize, usize)> },
    Modes { modes: Vec<SpectralAmplitude> },
}

impl ModeBasis {
    /// Complete basis with one bin per grid point; this is the finest (and
    /// the only complete) bin tiling of the grid.
    pub fn grid_bins(grid: Arc<FrequencyGrid>) -> Self {
        let ranges = (0..grid.n_points()).map(|i| (i, i + 1)).collect();
        Self {
            grid,
            kind: BasisKind::Bins { ranges },
        }
    }

    /// Boxcar bins of width `width` tiling `[lo, hi]` (clipped to the grid).
    pub fn boxcar_bins(grid: Arc<FrequencyGrid>, lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain {
                name: "hi",
                value: hi,
                reason: "bin range must have positive length",
            });
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Domain {
                name: "width",
                value: width,
                reason: "bin width must be positive and finite",
            });
        }
        let per_bin = (width / grid.spacing()).round().max(1.0) as usize;
        let start = grid.nearest_index(lo.max(grid.omega_min()));
        let stop = grid.nearest_index(hi.min(grid.omega_max())) + 1;
        if stop <= start {
            return Err(Error::InvalidBasis("bin range misses the grid".into()));
        }
        let mut ranges = Vec::new();
        let mut a = start;
        while a < stop {
            let mut b = (a + per_bin).min(stop);
            // The inclusive endpoint would otherwise leave a runt bin much
            // thinner than `width`; let the last bin absorb it instead.
            if stop - b < per_bin {
                b = stop;
            }
            ranges.push((a, b));
            a = b;
        }
        Ok(Self {
            grid,
            kind: BasisKind::Bins { ranges },
        })
    }

    /// Default coarse binning for a filter: bins of width 2Γ covering
    /// ω₀ ± 40Γ.
    pub fn default_bins(filter: &FilterSpec) -> Result<Self> {
        let g = filter.gamma();
        let w0 = filter.omega0();
        Self::boxcar_bins(filter.grid().clone(), w0 - 40.0 * g, w0 + 40.0 * g, 2.0 * g)
    }

    /// Hermite-Gauss modes centered at `center` with width scale `scale`,
    /// re-orthonormalized on the grid.
    pub fn hermite_gauss(
        grid: Arc<FrequencyGrid>,
        center: f64,
        scale: f64,
        count: usize,
    ) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain {
                name: "scale",
                value: scale,
                reason: "must be positive and finite",
            });
        }
        if count == 0 || count > grid.n_points() {
            return Err(Error::InvalidBasis(format!(
                "mode count {count} must be in 1..={}",
                grid.n_points()
            )));
        }
        let mut modes: Vec<Vec<Complex64>> = Vec::with_capacity(count);
        let inv_sqrt_scale = 1.0 / scale.sqrt();
        let norm0 = std::f64::consts::PI.powf(-0.25);
        for n in 0..count {
            let values: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&omega| {
                    let x = (omega - center) / scale;
                    // Normalized Hermite-function recurrence.
                    let mut hm1 = 0.0;
                    let mut h = norm0 * (-0.5 * x * x).exp();
                    for k in 0..n {
                        let next = x * (2.0 / (k as f64 + 1.0)).sqrt() * h
                            - (k as f64 / (k as f64 + 1.0)).sqrt() * hm1;
                        hm1 = h;
                        h = next;
                    }
                    Complex64::new(h * inv_sqrt_scale, 0.0)
                })
                .collect();
            modes.push(values);
        }
        // Two rounds of modified Gram-Schmidt pin the Gram matrix to the
        // identity even when the grid truncates the higher modes.
        let qw = grid.weights();
        for _round in 0..2 {
            for j in 0..modes.len() {
                for l in 0..j {
                    let (head, tail) = modes.split_at_mut(j);
                    let proj = weighted_dot(qw, &head[l], &tail[0]);
                    for (v, u) in tail[0].iter_mut().zip(&head[l]) {
                        *v -= proj * u;
                    }
                }
                let n2: f64 = modes[j]
                    .iter()
                    .zip(qw)
                    .map(|(v, &w)| w * v.norm_sqr())
                    .sum();
                if n2 < 1e-24 {
                    return Err(Error::InvalidBasis(
                        "Hermite-Gauss modes are linearly dependent on this grid".into(),
                    ));
                }
                let s = 1.0 / n2.sqrt();
                for v in modes[j].iter_mut() {
                    *v *= s;
                }
            }
        }
        let modes = modes
            .into_iter()
            .map(|values| SpectralAmplitude::new(grid.clone(), values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            kind: BasisKind::Modes { modes },
        })
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            BasisKind::Bins { ranges } => ranges.len(),
            BasisKind::Modes { modes } => modes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index ranges of a bin basis, if this is one.
    pub fn bin_ranges(&self) -> Option<&[(usize, usize)]> {
        match &self.kind {
            BasisKind::Bins { ranges } => Some(ranges),
            BasisKind::Modes { .. } => None,
        }
    }

    /// Materializes mode `k` as a normalized amplitude.
    pub fn mode(&self, k: usize) -> Result<SpectralAmplitude> {
        match &self.kind {
            BasisKind::Bins { ranges } => {
                let &(a, b) = ranges.get(k).ok_or(Error::IndexOutOfRange {
                    what: "mode basis",
                    index: k,
                    len: ranges.len(),
                })?;
                let measure: f64 = self.grid.weights()[a..b].iter().sum();
                let height = 1.0 / measure.sqrt();
                let mut values = vec![Complex64::new(0.0, 0.0); self.grid.n_points()];
                for v in &mut values[a..b] {
                    *v = Complex64::new(height, 0.0);
                }
                SpectralAmplitude::new(self.grid.clone(), values)
            }
            BasisKind::Modes { modes } => modes
                .get(k)
                .cloned()
                .ok_or(Error::IndexOutOfRange {
                    what: "mode basis",
                    index: k,
                    len: modes.len(),
                }),
        }
    }

    /// The same basis with mode `k` removed; useful for probing how the
    /// completeness residual reacts to missing outcomes.
    pub fn excluding(&self, k: usize) -> Result<Self> {
        if k >= self.len() {
            return Err(Error::IndexOutOfRange {
                what: "mode basis",
                index: k,
                len: self.len(),
            });
        }
        let kind = match &self.kind {
            BasisKind::Bins { ranges } => {
                let mut ranges = ranges.clone();
                ranges.remove(k);
                BasisKind::Bins { ranges }
            }
            BasisKind::Modes { modes } => {
                let mut modes = modes.clone();
                modes.remove(k);
                BasisKind::Modes { modes }
            }
        };
        Ok(Self {
            grid: self.grid.clone(),
            kind,
        })
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        match &self.kind {
            BasisKind::Bins { ranges } => {
                // Disjoint bins are exactly orthogonal; only the norms can
                // wobble at machine precision.
                let mut worst: f64 = 0.0;
                for &(a, b) in ranges {
                    let measure: f64 = self.grid.weights()[a..b].iter().sum();
                    let height_sq = 1.0 / measure;
                    let n2: f64 = self.grid.weights()[a..b]
                        .iter()
                        .map(|&w| w * height_sq)
                        .sum();
                    worst = worst.max((n2 - 1.0).abs());
                }
                worst
            }
            BasisKind::Modes { modes } => {
                let qw = self.grid.weights();
                let mut worst: f64 = 0.0;
                for j in 0..modes.len() {
                    for l in j..modes.len() {
                        let g = weighted_dot(qw, modes[j].values(), modes[l].values());
                        let target = if j == l { 1.0 } else { 0.0 };
                        worst = worst.max((g - target).norm());
                    }
                }
                worst
            }
        }
    }
}

/// Residuals of Σₖ Πₖ + Π_null against the identity for a bin basis.
#[derive(Debug, Clone, Copy)]
pub struct CompletenessReport {
    /// max over grid points of |density(Σₖ Πₖ) + |R|² - 1|.
    pub max_diagonal_residual: f64,
    /// Largest weighted off-diagonal kernel entry of Σₖ Πₖ; zero for the
    /// complete per-point tiling.
    pub max_offdiagonal: f64,
    /// Whether every grid point is covered by some bin.
    pub full_cover: bool,
}

/// Sums the transmitted-port elements over a bin basis and reports how far
/// Σₖ Πₖ + Π_null is from the identity. Only bin bases tile the grid in a
/// way that makes this comparison meaningful; other bases are rejected.
pub fn completeness_residual(basis: &ModeBasis, filter: &FilterSpec) -> Result<CompletenessReport> {
    if !basis.grid().same_grid(filter.grid()) {
        return Err(Error::GridMismatch);
    }
    let ranges = basis.bin_ranges().ok_or_else(|| {
        Error::InvalidBasis("completeness check requires a bin basis tiling the grid".into())
    })?;
    let grid = filter.grid();
    let qw = grid.weights();
    let t = filter.transmission();
    let r = filter.reflection();
    let mut density = vec![0.0f64; grid.n_points()];
    let mut covered = vec![false; grid.n_points()];
    let mut max_offdiag: f64 = 0.0;
    for &(a, b) in ranges {
        let measure: f64 = qw[a..b].iter().sum();
        for i in a..b {
            // Kernel diagonal of wₖ|Tφₖ⟩⟨Tφₖ| at point i is |Tᵢ|²/mₖ.
            density[i] += qw[i] * t[i].norm_sqr() / measure;
            covered[i] = true;
        }
        for i in a..b {
            for l in i + 1..b {
                let entry = (qw[i] * qw[l]).sqrt() * t[i].norm() * t[l].norm() / measure;
                max_offdiag = max_offdiag.max(entry);
            }
        }
    }
    let mut max_diag: f64 = 0.0;
    for i in 0..grid.n_points() {
        let residual = (density[i] + r[i].norm_sqr() - 1.0).abs();
        max_diag = max_diag.max(residual);
    }
    Ok(CompletenessReport {
        max_diagonal_residual: max_diag,
        max_offdiagonal: max_offdiag,
        full_cover: covered.iter().all(|&c| c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn lorentzian_setup(
        omega0: f64,
        gamma: f64,
        half_span: f64,
        per_gamma: usize,
    ) -> (Arc<FrequencyGrid>, FilterSpec) {
        let n = (2.0 * half_span * per_gamma as f64).round() as usize + 1;
        let grid =
            FrequencyGrid::new(omega0 - half_span * gamma, omega0 + half_span * gamma, n).unwrap();
        let filter = FilterSpec::lorentzian(grid.clone(), omega0, gamma).unwrap();
        (grid, filter)
    }

    #[test]
    fn transmitted_and_reflected_weights_sum_to_one() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let mode = SpectralAmplitude::gaussian(grid, 1000.5, 2.0).unwrap();
        let t = ideal_element(&filter, &mode).unwrap();
        let r = reflected_element(&filter, &mode).unwrap();
        let (PovmElement::Pure { weight: w, .. }, PovmElement::Pure { weight: u, .. }) = (&t, &r)
        else {
            panic!("expected pure elements");
        };
        assert_abs_diff_eq!(w + u, 1.0, epsilon = 1e-12);
        assert!(*w > 0.0 && *u > 0.0);
    }

    #[test]
    fn ideal_amplitude_uses_conjugate_transmission() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let mode = SpectralAmplitude::gaussian(grid.clone(), 1000.0, 2.0).unwrap();
        let element = ideal_element(&filter, &mode).unwrap();
        let PovmElement::Pure { amplitude, .. } = &element else {
            panic!("expected a pure element");
        };
        let i = grid.nearest_index(1001.0);
        // conj(T)·φ has the phase of conj(T); at ω₀+Γ that phase is -π/4.
        let expected_phase = filter.transmission()[i].conj().arg();
        assert_abs_diff_eq!(amplitude.values()[i].arg(), expected_phase, epsilon = 1e-12);
    }

    #[test]
    fn null_element_trace_matches_reflection_integral() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let element = null_element(&filter);
        let expected: f64 = filter
            .transmission()
            .iter()
            .zip(grid.weights())
            .map(|(t, &w)| w * (1.0 - t.norm_sqr()))
            .sum();
        assert_abs_diff_eq!(element.trace(), expected, epsilon = 1e-12);
    }

    #[test]
    fn unreachable_outcome_is_reported() {
        let grid = FrequencyGrid::new(0.0, 10.0, 101).unwrap();
        let mut t = vec![Complex64::new(0.0, 0.0); 101];
        for v in t.iter_mut().take(40) {
            *v = Complex64::new(0.9, 0.0);
        }
        let filter = FilterSpec::from_transmission(grid.clone(), &t).unwrap();
        // Mode supported entirely where T vanishes.
        let mode = SpectralAmplitude::flat(grid, 6.0, 9.0).unwrap();
        assert!(matches!(
            ideal_element(&filter, &mode),
            Err(Error::OutcomeUnreachable { .. })
        ));
    }

    #[test]
    fn time_state_weight_scales_with_eta_and_bandwidth() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 60.0, 25);
        let bandwidth = filter.effective_bandwidth();
        let chain = FilterChain::single(filter);
        let (w_full, amp_full) = time_state(&chain, 0, 0.3, 1.0).unwrap();
        let (w_half, amp_half) = time_state(&chain, 0, 0.3, 0.5).unwrap();
        // w = η Γ_eff / 2 for a single Lorentzian filter.
        assert_abs_diff_eq!(w_full, bandwidth / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w_half, 0.5 * w_full, epsilon = 1e-14);
        assert_eq!(amp_full.values(), amp_half.values());
        assert_abs_diff_eq!(amp_full.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eta_zero_gives_zero_weight_but_valid_state() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 60.0, 25);
        let chain = FilterChain::single(filter);
        let (w, amp) = time_state(&chain, 0, 0.0, 0.0).unwrap();
        assert_eq!(w, 0.0);
        assert_abs_diff_eq!(amp.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_decays_with_filter_memory() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 100.0, 50);
        let chain = FilterChain::single(filter);
        let ov = overlap_time(&chain, 0, 0.0, 1.0).unwrap();
        let expected = closed_form_overlap(1.0, 1000.0, 1.0);
        assert!((ov - expected).norm() < 1e-2);
        assert_relative_eq!(ov.norm(), (-1.0f64).exp(), max_relative = 1e-2);
    }

    #[test]
    fn window_trace_is_rate_times_duration() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 100.0, 50);
        let bandwidth = filter.effective_bandwidth();
        let chain = FilterChain::single(filter);
        let window = TimeWindow::auto(0.0, 2.0, 1.0, 1.0).unwrap();
        let element = window_element(&chain, 0, &window).unwrap();
        // Tr Π = w·Δt = (Γ_eff/2)·Δt for η = 1.
        assert_abs_diff_eq!(element.trace(), bandwidth, epsilon = 1e-10);
    }

    #[test]
    fn window_purity_is_independent_of_eta_and_trace_scales() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 80.0, 40);
        let chain = FilterChain::single(filter);
        let w_full = TimeWindow::auto(0.0, 3.0, 1.0, 1.0).unwrap();
        let w_part = TimeWindow::auto(0.0, 3.0, 0.37, 1.0).unwrap();
        let full = window_element(&chain, 0, &w_full).unwrap();
        let part = window_element(&chain, 0, &w_part).unwrap();
        assert_abs_diff_eq!(full.purity(), part.purity(), epsilon = 1e-12);
        assert_relative_eq!(part.trace(), 0.37 * full.trace(), max_relative = 1e-12);
    }

    #[test]
    fn single_sample_window_is_pure() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 80.0, 40);
        let chain = FilterChain::single(filter);
        let window = TimeWindow::new(0.0, 0.04, 1.0, 1).unwrap();
        let element = window_element(&chain, 0, &window).unwrap();
        assert_abs_diff_eq!(element.purity(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(element.d_eff(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn wide_window_sum_reproduces_transmission_density() {
        // Over one full period 2π/h of the discrete grid the time integral
        // of |Ψ_t⟩⟨Ψ_t| collapses to the diagonal element with density
        // |T(ω)|²; the sample count drops out of the diagonal entirely.
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 20.0, 10);
        let chain = FilterChain::single(filter.clone());
        let period = 2.0 * std::f64::consts::PI / grid.spacing();
        let window = TimeWindow::new(-0.5 * period, period, 1.0, 16).unwrap();
        let element = window_element(&chain, 0, &window).unwrap();
        let density = element.diagonal_density();
        let mut worst: f64 = 0.0;
        for (i, (&d, t)) in density.iter().zip(filter.transmission()).enumerate() {
            // Endpoint weights are h/2, so the first and last points carry
            // half the density by construction; skip them.
            if i == 0 || i + 1 == grid.n_points() {
                continue;
            }
            worst = worst.max((d - t.norm_sqr()).abs());
        }
        assert!(worst <= 1e-2, "max density deviation {worst:e}");
    }

    #[test]
    fn closed_form_purity_frozen_values() {
        assert!(matches!(closed_form_purity(-1.0), Err(Error::Domain { .. })));
        assert_abs_diff_eq!(closed_form_purity(0.0).unwrap(), 1.0, epsilon = 1e-15);
        // (e^{-2} + 1)/2 and friends, evaluated once and pinned.
        assert_abs_diff_eq!(closed_form_purity(1.0).unwrap(), 0.567_667_641_618_3, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_purity(0.1).unwrap(), 0.936_537_653_899_1, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_purity(10.0).unwrap(), 0.095_000_000_010_3, epsilon = 1e-12);
        // The probe points straddle the branch switchover 2e-9 apart in x,
        // where |dP/dx| ≈ 2/3; the gap must be pure slope, not a jump.
        let below = closed_form_purity(0.009_999_999).unwrap();
        let above = closed_form_purity(0.010_000_001).unwrap();
        assert_abs_diff_eq!(below, above, epsilon = 2e-9);
        // At the switchover itself the series matches the direct branch.
        let x = 0.01_f64;
        let series =
            1.0 + x * (-2.0 / 3.0 + x * (1.0 / 3.0 + x * (-2.0 / 15.0 + x * 2.0 / 45.0)));
        assert_abs_diff_eq!(closed_form_purity(x).unwrap(), series, epsilon = 1e-11);
    }

    #[test]
    fn window_element_stays_below_identity() {
        let (_, filter) = lorentzian_setup(1000.0, 1.0, 60.0, 30);
        let chain = FilterChain::single(filter);
        for gdt in [0.5, 2.0, 10.0] {
            let window = TimeWindow::auto(-0.5 * gdt, gdt, 1.0, 1.0).unwrap();
            let element = window_element(&chain, 0, &window).unwrap();
            let max_eig = element.max_eigenvalue();
            assert!(
                max_eig <= 1.0 + 1e-8,
                "eigenvalue {max_eig} exceeds 1 at gamma*dt = {gdt}"
            );
            element.validate().unwrap();
        }
    }

    #[test]
    fn detection_probability_of_diagonal_element() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let state = SpectralAmplitude::gaussian(grid.clone(), 1000.0, 3.0).unwrap();
        let p_null = null_element(&filter).detection_probability(&state).unwrap();
        let expected: f64 = state
            .values()
            .iter()
            .zip(filter.reflection())
            .zip(grid.weights())
            .map(|((v, r), &w)| w * r.norm_sqr() * v.norm_sqr())
            .sum();
        assert_abs_diff_eq!(p_null, expected, epsilon = 1e-14);
        assert!((0.0..=1.0).contains(&p_null));
    }

    #[test]
    fn detection_probability_rejects_unnormalized_states() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let state = SpectralAmplitude::from_fn(grid, |_| Complex64::new(0.2, 0.0));
        assert!(matches!(
            null_element(&filter).detection_probability(&state),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn complete_bin_basis_resolves_identity() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 30.0, 15);
        let basis = ModeBasis::grid_bins(grid);
        let report = completeness_residual(&basis, &filter).unwrap();
        assert!(report.full_cover);
        assert!(report.max_diagonal_residual <= 1e-10);
        assert_eq!(report.max_offdiagonal, 0.0);
    }

    #[test]
    fn missing_bin_leaves_transmission_hole() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 30.0, 15);
        let basis = ModeBasis::grid_bins(grid.clone());
        let k = grid.nearest_index(1000.5);
        let punctured = basis.excluding(k).unwrap();
        let report = completeness_residual(&punctured, &filter).unwrap();
        assert!(!report.full_cover);
        let expected = filter.transmission()[k].norm_sqr();
        assert_abs_diff_eq!(report.max_diagonal_residual, expected, epsilon = 1e-12);
    }

    #[test]
    fn hermite_gauss_basis_is_orthonormal_but_rejected_for_completeness() {
        let grid = FrequencyGrid::new(980.0, 1020.0, 801).unwrap();
        let filter = FilterSpec::lorentzian(grid.clone(), 1000.0, 1.0).unwrap();
        let basis = ModeBasis::hermite_gauss(grid, 1000.0, 2.0, 6).unwrap();
        assert!(basis.orthonormality_residual() <= 1e-10);
        assert!(matches!(
            completeness_residual(&basis, &filter),
            Err(Error::InvalidBasis(_))
        ));
        // Transmitted + reflected still split each mode's unit weight.
        for k in 0..basis.len() {
            let mode = basis.mode(k).unwrap();
            let t = ideal_element(&filter, &mode).unwrap();
            let r = reflected_element(&filter, &mode).unwrap();
            assert_abs_diff_eq!(t.trace() + r.trace(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn boxcar_bins_cover_requested_range() {
        let grid = FrequencyGrid::new(0.0, 100.0, 1001).unwrap();
        let basis = ModeBasis::boxcar_bins(grid, 20.0, 80.0, 5.0).unwrap();
        assert_eq!(basis.len(), 12);
        assert!(basis.orthonormality_residual() <= 1e-12);
        let first = basis.mode(0).unwrap();
        assert_abs_diff_eq!(first.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hs_product_is_symmetric_across_representations() {
        let (grid, filter) = lorentzian_setup(1000.0, 1.0, 40.0, 20);
        let chain = FilterChain::single(filter.clone());
        let window = TimeWindow::auto(0.0, 1.0, 1.0, 1.0).unwrap();
        let ensemble = window_element(&chain, 0, &window).unwrap();
        let pure = ideal_element(
            &filter,
            &SpectralAmplitude::gaussian(grid, 1000.0, 1.5).unwrap(),
        )
        .unwrap();
        let diag = null_element(&filter);
        for (a, b) in [(&ensemble, &pure), (&ensemble, &diag), (&pure, &diag)] {
            let ab = a.hs_product(b).unwrap();
            let ba = b.hs_product(a).unwrap();
            assert_relative_eq!(ab, ba, max_relative = 1e-12);
            assert!(ab >= 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn window_purity_stays_physical(
            gdt in 0.05f64..12.0,
            eta in 0.05f64..1.0,
            t0 in -3.0f64..3.0,
        ) {
            let grid = FrequencyGrid::new(960.0, 1040.0, 1601).unwrap();
            let filter = FilterSpec::lorentzian(grid, 1000.0, 1.0).unwrap();
            let chain = FilterChain::single(filter);
            let window = TimeWindow::auto(t0, gdt, eta, 1.0).unwrap();
            let element = window_element(&chain, 0, &window).unwrap();
            let purity = element.purity();
            prop_assert!(purity > 0.0 && purity <= 1.0 + 1e-12, "purity {}", purity);
            prop_assert!(element.d_eff() >= 1.0 - 1e-12);
        }
    }
}
