//! Two-filter cascades and joint detection of photon pairs.
//!
//! A photon transmitted by the first filter is detected at time t; a photon
//! reflected by the first filter and transmitted by the second is detected
//! at time t′. The pair of clicks projects onto a two-photon state
//! Ψ_{t,t′}(ω,ω′) built from the exchange-symmetrized product of the two
//! single-click states, with a weight W normalizing the stored amplitude.
//!
//! Conventions: the symmetrized amplitude is stored without a 1/√2; the
//! exchange double-counting is absorbed into W = ‖raw‖²/2, which makes W
//! equal the two-term sum w·w′·(1 + |⟨Ψ′_{t′}|Ψ_t⟩|²) of direct and exchange
//! contributions. Detector efficiency η is one scalar applied per detection,
//! so it enters W quadratically; detectors with different efficiencies can
//! be modeled by passing √(η₀η₁).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::FilterSpec;
use crate::povm::WEIGHT_FLOOR;
use crate::spectral::FrequencyGrid;

/// Largest per-axis grid size for two-photon matrices (memory guard:
/// 4096² complex entries is 256 MiB).
pub const MAX_TWO_PHOTON_POINTS: usize = 4096;

const TAU: f64 = std::f64::consts::TAU;

/// Two-photon amplitude A(ω,ω′) sampled on grid × grid, stored row-major
/// (first index varies slowest).
#[derive(Debug, Clone)]
pub struct TwoPhotonAmplitude {
    grid: Arc<FrequencyGrid>,
    values: Vec<Complex64>,
    symmetric: bool,
}

impl TwoPhotonAmplitude {
    /// Wraps a row-major matrix of samples. With `symmetric` set, the matrix
    /// must satisfy A(ω,ω′) = A(ω′,ω) to 1e-12 relative to its largest entry.
    pub fn new(grid: Arc<FrequencyGrid>, values: Vec<Complex64>, symmetric: bool) -> Result<Self> {
        let n = grid.n_points();
        if n > MAX_TWO_PHOTON_POINTS {
            return Err(Error::GridTooLarge {
                n,
                max: MAX_TWO_PHOTON_POINTS,
            });
        }
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        let amplitude = Self {
            grid,
            values,
            symmetric,
        };
        if symmetric {
            let scale = amplitude
                .values
                .iter()
                .fold(0.0f64, |m, v| m.max(v.norm()));
            if amplitude.symmetry_residual() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Validation(
                    "two-photon amplitude marked symmetric is not exchange-symmetric".into(),
                ));
            }
        }
        Ok(amplitude)
    }

    /// Builds the matrix from a closure over frequency pairs. The size guard
    /// is applied before any allocation.
    pub fn from_fn(
        grid: Arc<FrequencyGrid>,
        symmetric: bool,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let n = grid.n_points();
        if n > MAX_TWO_PHOTON_POINTS {
            return Err(Error::GridTooLarge {
                n,
                max: MAX_TWO_PHOTON_POINTS,
            });
        }
        let mut values = Vec::with_capacity(n * n);
        for &omega in grid.points() {
            for &omega_prime in grid.points() {
                values.push(f(omega, omega_prime));
            }
        }
        Self::new(grid, values, symmetric)
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_points() + j]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// ‖A‖² = Σᵢⱼ qᵢqⱼ |Aᵢⱼ|² — plain L², with no exchange factor.
    pub fn norm_sqr(&self) -> f64 {
        let qw = self.grid.weights();
        let n = self.grid.n_points();
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.values[i * n..(i + 1) * n];
            let partial: f64 = row.iter().zip(qw).map(|(v, &w)| w * v.norm_sqr()).sum();
            acc += qw[i] * partial;
        }
        acc
    }

    /// ⟨A|B⟩ = Σᵢⱼ qᵢqⱼ conj(Aᵢⱼ) Bᵢⱼ.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if !self.grid.same_grid(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let qw = self.grid.weights();
        let n = self.grid.n_points();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let a_row = &self.values[i * n..(i + 1) * n];
            let b_row = &other.values[i * n..(i + 1) * n];
            let mut partial = Complex64::new(0.0, 0.0);
            for ((a, b), &w) in a_row.iter().zip(b_row).zip(qw) {
                partial += w * a.conj() * b;
            }
            acc += qw[i] * partial;
        }
        Ok(acc)
    }

    /// Returns the amplitude scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 < WEIGHT_FLOOR {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n2.sqrt();
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        Ok(out)
    }

    /// Largest exchange asymmetry max |Aᵢⱼ − Aⱼᵢ|.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.grid.n_points();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.values[i * n + j] - self.values[j * n + i]).norm());
            }
        }
        worst
    }
}

fn shared_grid<'a>(filter0: &'a FilterSpec, filter1: &FilterSpec) -> Result<&'a Arc<FrequencyGrid>> {
    if !filter0.grid().same_grid(filter1.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(filter0.grid())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Port coefficients and weights of the two-filter cascade: transmitted at
/// the first filter (C₀ = T) and transmitted at the second after reflection
/// at the first (C₁ = R·T₁). Returns (C₀, C₁, w, w′) with w = η/(2π)·Σ q|C|².
fn cascade_ports(
    filter0: &FilterSpec,
    filter1: &FilterSpec,
    eta: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>, f64, f64)> {
    let grid = shared_grid(filter0, filter1)?;
    check_eta(eta)?;
    let c0: Vec<Complex64> = filter0.transmission().to_vec();
    let c1: Vec<Complex64> = filter0
        .reflection()
        .iter()
        .zip(filter1.transmission())
        .map(|(r, t1)| r * t1)
        .collect();
    let qw = grid.weights();
    let k0: f64 = c0.iter().zip(qw).map(|(c, &w)| w * c.norm_sqr()).sum();
    let k1: f64 = c1.iter().zip(qw).map(|(c, &w)| w * c.norm_sqr()).sum();
    let w = eta * k0 / TAU;
    let w_prime = eta * k1 / TAU;
    if w < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: w,
            floor: WEIGHT_FLOOR,
        });
    }
    if w_prime < WEIGHT_FLOOR {
        return Err(Error::OutcomeUnreachable {
            weight: w_prime,
            floor: WEIGHT_FLOOR,
        });
    }
    Ok((c0, c1, w, w_prime))
}

/// Overlap ⟨Ψ′_{t′}|Ψ_t⟩ between the time-stamped detection states of the
/// two cascade ports:
/// (η/(2π√(ww′)))·Σᵢ qᵢ T*(ωᵢ) R(ωᵢ) T₁(ωᵢ) e^{iωᵢ(t−t′)}.
///
/// The efficiency cancels between numerator and √(ww′); it is accepted so
/// the weights can be formed (and rejected as unreachable when η = 0).
pub fn cross_overlap(
    filter0: &FilterSpec,
    filter1: &FilterSpec,
    t: f64,
    t_prime: f64,
    eta: f64,
) -> Result<Complex64> {
    let grid = shared_grid(filter0, filter1)?;
    let (c0, c1, w, w_prime) = cascade_ports(filter0, filter1, eta)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (((c, d), &qwi), &omega) in c0.iter().zip(&c1).zip(grid.weights()).zip(grid.points()) {
        acc += qwi * c.conj() * d * Complex64::from_polar(1.0, omega * (t - t_prime));
    }
    Ok(acc * eta / (TAU * (w * w_prime).sqrt()))
}

/// Two-photon projector for a click at time t behind the first filter and a
/// click at t′ behind the second. Returns the weight W and the unit-norm
/// symmetrized amplitude; W = w·w′·(1 + |⟨Ψ′_{t′}|Ψ_t⟩|²).
pub fn two_photon_projector(
    filter0: &FilterSpec,
    filter1: &FilterSpec,
    t: f64,
    t_prime: f64,
    eta: f64,
) -> Result<(f64, TwoPhotonAmplitude)> {
    let grid = shared_grid(filter0, filter1)?.clone();
    let n = grid.n_points();
    if n > MAX_TWO_PHOTON_POINTS {
        return Err(Error::GridTooLarge {
            n,
            max: MAX_TWO_PHOTON_POINTS,
        });
    }
    let (c0, c1, _, _) = cascade_ports(filter0, filter1, eta)?;
    let scale = eta / TAU;
    let f: Vec<Complex64> = c0
        .iter()
        .zip(grid.points())
        .map(|(c, &omega)| scale * c.conj() * Complex64::from_polar(1.0, omega * t))
        .collect();
    let g: Vec<Complex64> = c1
        .iter()
        .zip(grid.points())
        .map(|(c, &omega)| c.conj() * Complex64::from_polar(1.0, omega * t_prime))
        .collect();
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            values.push(f[i] * g[j] + g[i] * f[j]);
        }
    }
    let raw = TwoPhotonAmplitude::new(grid, values, true)?;
    let norm_sqr = raw.norm_sqr();
    if norm_sqr < WEIGHT_FLOOR {
        return Err(Error::ZeroNorm);
    }
    // The plain L² norm² counts each unordered frequency pair twice; the
    // physical weight carries half of it, which reproduces the direct +
    // exchange two-term sum.
    let weight = norm_sqr / 2.0;
    Ok((weight, raw.normalized()?))
}

/// Born-rule probability density (per t per t′) that a normalized,
/// exchange-symmetric two-photon input Φ triggers both cascade detectors:
/// W·|⟨Ψ_{t,t′}|Φ⟩|².
pub fn joint_detection_probability(
    phi: &TwoPhotonAmplitude,
    filter0: &FilterSpec,
    filter1: &FilterSpec,
    t: f64,
    t_prime: f64,
    eta: f64,
) -> Result<f64> {
    let grid = shared_grid(filter0, filter1)?;
    if !grid.same_grid(phi.grid()) {
        return Err(Error::GridMismatch);
    }
    let n2 = phi.norm_sqr();
    if (n2 - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized {
            norm_sqr: n2,
            tolerance: 1e-6,
        });
    }
    if !phi.is_symmetric() {
        return Err(Error::Validation(
            "joint detection requires an exchange-symmetric two-photon amplitude".into(),
        ));
    }
    let (weight, amplitude) = two_photon_projector(filter0, filter1, t, t_prime, eta)?;
    Ok(weight * amplitude.inner_product(phi)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralAmplitude;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pair(detuning: f64, per_gamma: usize, half_span: f64) -> (FilterSpec, FilterSpec) {
        let omega0 = 1000.0;
        let lo = omega0 - half_span;
        let hi = omega0 + detuning + half_span;
        let n = ((hi - lo) * per_gamma as f64).round() as usize + 1;
        let grid = FrequencyGrid::new(lo, hi, n).unwrap();
        let f0 = FilterSpec::lorentzian(grid.clone(), omega0, 1.0).unwrap();
        let f1 = FilterSpec::lorentzian(grid, omega0 + detuning, 1.0).unwrap();
        (f0, f1)
    }

    #[test]
    fn identical_filters_match_direct_quadrature_oracle() {
        let (f0, f1) = pair(0.0, 20, 60.0);
        let computed = cross_overlap(&f0, &f1, 0.7, 0.7, 0.8).unwrap();
        // Independent oracle: rebuild the integrand from the analytic
        // Lorentzian response instead of the stored arrays.
        let grid = f0.grid();
        let (mut num, mut k0, mut k1) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for (&omega, &w) in grid.points().iter().zip(grid.weights()) {
            let d = omega - 1000.0;
            let den = Complex64::new(1.0, -d);
            let t = Complex64::new(1.0, 0.0) / den;
            let r = Complex64::new(0.0, -d) / den;
            let c1 = r * t;
            num += w * t.conj() * c1;
            k0 += w * t.norm_sqr();
            k1 += w * c1.norm_sqr();
        }
        let oracle = num / (k0 * k1).sqrt();
        assert!((computed - oracle).norm() <= 1e-10);
    }

    #[test]
    fn far_detuned_ports_are_nearly_orthogonal() {
        let (f0, f1) = pair(100.0, 8, 60.0);
        let ov = cross_overlap(&f0, &f1, 0.0, 0.0, 1.0).unwrap();
        assert!(ov.norm() <= 0.05, "overlap magnitude {}", ov.norm());
        // Exchange term of W is bounded by the same quantity squared.
        let (w, amp) = two_photon_projector(&f0, &f1, 0.0, 0.0, 1.0).unwrap();
        let qw = f0.grid().weights();
        let k0: f64 = f0
            .transmission()
            .iter()
            .zip(qw)
            .map(|(t, &w)| w * t.norm_sqr())
            .sum();
        let k1: f64 = f0
            .reflection()
            .iter()
            .zip(f1.transmission())
            .zip(qw)
            .map(|((r, t), &w)| w * (r * t).norm_sqr())
            .sum();
        let direct = (k0 / TAU) * (k1 / TAU);
        assert!((w - direct) / direct <= 1e-3, "exchange term too large");
        assert!(amp.symmetry_residual() <= 1e-14);
    }

    #[test]
    fn weight_factorizes_into_direct_and_exchange_terms() {
        let (f0, f1) = pair(1.0, 12, 40.0);
        for &t in &[0.0, 0.4, 1.3] {
            for &tp in &[0.0, 0.9, 2.0] {
                let (w2, _) = two_photon_projector(&f0, &f1, t, tp, 0.7).unwrap();
                let ov = cross_overlap(&f0, &f1, t, tp, 0.7).unwrap();
                let qw = f0.grid().weights();
                let k0: f64 = f0
                    .transmission()
                    .iter()
                    .zip(qw)
                    .map(|(c, &w)| w * c.norm_sqr())
                    .sum();
                let k1: f64 = f0
                    .reflection()
                    .iter()
                    .zip(f1.transmission())
                    .zip(qw)
                    .map(|((r, c), &w)| w * (r * c).norm_sqr())
                    .sum();
                let w = 0.7 * k0 / TAU;
                let w_prime = 0.7 * k1 / TAU;
                let expected = w * w_prime * (1.0 + ov.norm_sqr());
                assert_relative_eq!(w2, expected, max_relative = 1e-10);
                assert!(w2 >= w * w_prime * (1.0 - 1e-12));
                assert!(w2 <= 2.0 * w * w_prime * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn self_projection_returns_the_weight() {
        let (f0, f1) = pair(1.0, 16, 50.0);
        let (w, amp) = two_photon_projector(&f0, &f1, 0.2, 0.5, 1.0).unwrap();
        let p = joint_detection_probability(&amp, &f0, &f1, 0.2, 0.5, 1.0).unwrap();
        assert_relative_eq!(p, w, max_relative = 1e-12);
    }

    #[test]
    fn dead_band_support_cannot_trigger_both_detectors() {
        // A filter fully absorbing on [4, 6]: T = 0 there, |R| = 1.
        let grid = FrequencyGrid::new(0.0, 10.0, 501).unwrap();
        let f0 = FilterSpec::from_transmission_fn(grid.clone(), |omega| {
            if (4.0..=6.0).contains(&omega) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.8, 0.0)
            }
        })
        .unwrap();
        let f1 = f0.clone();
        // Symmetric two-photon state supported only inside the dead band,
        // where T and R·T₁ both vanish.
        let blob = SpectralAmplitude::gaussian(grid.clone(), 5.0, 0.1).unwrap();
        let phi = TwoPhotonAmplitude::from_fn(grid.clone(), true, |w, wp| {
            let i = grid.nearest_index(w);
            let j = grid.nearest_index(wp);
            blob.values()[i] * blob.values()[j]
        })
        .unwrap()
        .normalized()
        .unwrap();
        let p = joint_detection_probability(&phi, &f0, &f1, 0.0, 0.3, 1.0).unwrap();
        assert!(p <= 1e-20, "probability {p} should vanish");
    }

    #[test]
    fn separable_input_matches_four_factor_oracle() {
        let (f0, f1) = pair(1.0, 12, 40.0);
        let grid = f0.grid().clone();
        let a = SpectralAmplitude::gaussian(grid.clone(), 1000.0, 1.5).unwrap();
        let b = SpectralAmplitude::gaussian(grid.clone(), 1001.0, 0.8).unwrap();
        let phi = TwoPhotonAmplitude::from_fn(grid.clone(), true, |w, wp| {
            let i = grid.nearest_index(w);
            let j = grid.nearest_index(wp);
            a.values()[i] * b.values()[j] + b.values()[i] * a.values()[j]
        })
        .unwrap()
        .normalized()
        .unwrap();
        let (t, tp, eta) = (0.3, 0.6, 1.0);
        let p = joint_detection_probability(&phi, &f0, &f1, t, tp, eta).unwrap();

        // Oracle: expand ⟨f⊗g + g⊗f | a⊗b + b⊗a⟩ into four 1D quadratures.
        let qw = grid.weights();
        let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
            x.iter()
                .zip(y)
                .zip(qw)
                .map(|((u, v), &w)| w * u.conj() * v)
                .sum()
        };
        let f: Vec<Complex64> = f0
            .transmission()
            .iter()
            .zip(grid.points())
            .map(|(c, &omega)| (eta / TAU) * c.conj() * Complex64::from_polar(1.0, omega * t))
            .collect();
        let g: Vec<Complex64> = f0
            .reflection()
            .iter()
            .zip(f1.transmission())
            .zip(grid.points())
            .map(|((r, c), &omega)| (r * c).conj() * Complex64::from_polar(1.0, omega * tp))
            .collect();
        // Symmetrized-state normalizations.
        let phi_norm = (2.0 * (dot(a.values(), a.values()).re * dot(b.values(), b.values()).re
            + dot(a.values(), b.values()).norm_sqr()))
        .sqrt();
        let raw_norm = (2.0 * (dot(&f, &f).re * dot(&g, &g).re + dot(&f, &g).norm_sqr())).sqrt();
        let contraction = 2.0
            * (dot(&f, a.values()) * dot(&g, b.values())
                + dot(&f, b.values()) * dot(&g, a.values()));
        let w_oracle = raw_norm * raw_norm / 2.0;
        let p_oracle = w_oracle * (contraction / (raw_norm * phi_norm)).norm_sqr();
        assert_relative_eq!(p, p_oracle, max_relative = 1e-8);
    }

    #[test]
    fn oversized_grids_are_rejected_before_allocation() {
        let grid = FrequencyGrid::new(0.0, 1.0, MAX_TWO_PHOTON_POINTS + 1).unwrap();
        let result = TwoPhotonAmplitude::from_fn(grid.clone(), false, |_, _| {
            Complex64::new(1.0, 0.0)
        });
        assert!(matches!(result, Err(Error::GridTooLarge { .. })));
        let f = FilterSpec::lorentzian(grid, 0.5, 0.01).unwrap();
        assert!(matches!(
            two_photon_projector(&f, &f, 0.0, 0.0, 1.0),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn zero_efficiency_is_an_unreachable_outcome() {
        let (f0, f1) = pair(0.0, 10, 30.0);
        assert!(matches!(
            cross_overlap(&f0, &f1, 0.0, 0.0, 0.0),
            Err(Error::OutcomeUnreachable { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn weight_respects_exchange_bounds(
            t in -2.0f64..2.0,
            tp in -2.0f64..2.0,
            detuning in 0.0f64..10.0,
        ) {
            let (f0, f1) = pair(detuning, 8, 40.0);
            let (w2, amp) = two_photon_projector(&f0, &f1, t, tp, 1.0).unwrap();
            let ov = cross_overlap(&f0, &f1, t, tp, 1.0).unwrap();
            prop_assert!(ov.norm() <= 1.0 + 1e-12);
            let qw = f0.grid().weights();
            let k0: f64 = f0.transmission().iter().zip(qw).map(|(c, &w)| w * c.norm_sqr()).sum();
            let k1: f64 = f0
                .reflection()
                .iter()
                .zip(f1.transmission())
                .zip(qw)
                .map(|((r, c), &w)| w * (r * c).norm_sqr())
                .sum();
            let ww = (k0 / TAU) * (k1 / TAU);
            prop_assert!(w2 >= ww * (1.0 - 1e-12));
            prop_assert!(w2 <= 2.0 * ww * (1.0 + 1e-12));
            prop_assert!(amp.symmetry_residual() <= 1e-13);
        }
    }
}
