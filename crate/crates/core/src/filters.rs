//! Two-port frequency filters and filter cascades.
//!
//! A lossless filter splits each monochromatic component into a transmitted
//! part T(ω) and a reflected part R(ω). Losslessness imposes two pointwise
//! conditions: |T|² + |R|² = 1 and T R* + T* R = 0. Both are enforced at
//! construction; filters that violate them are rejected rather than
//! propagated into the measurement analysis.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{FrequencyGrid, SpectralAmplitude};

/// Pointwise tolerance for the two unitarity conditions.
pub const UNITARITY_TOL: f64 = 1e-12;

type TransmissionModel = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Sampled two-port filter response on a frequency grid.
#[derive(Clone)]
pub struct FilterSpec {
    grid: Arc<FrequencyGrid>,
    omega0: f64,
    gamma: f64,
    t: Vec<Complex64>,
    r: Vec<Complex64>,
    // Analytic transmission when the filter was built from a model; used to
    // refine root searches below the grid resolution.
    t_model: Option<TransmissionModel>,
}

impl fmt::Debug for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterSpec")
            .field("omega0", &self.omega0)
            .field("gamma", &self.gamma)
            .field("n_points", &self.grid.n_points())
            .field("has_model", &self.t_model.is_some())
            .finish()
    }
}

impl FilterSpec {
    /// Lorentzian filter of half width `gamma` centered at `omega0`:
    /// T = Γ / (Γ - i(ω - ω₀)), R = -i(ω - ω₀) / (Γ - i(ω - ω₀)).
    ///
    /// Logs a warning when `omega0 / gamma < 100`; the narrowband envelope
    /// description starts to lose accuracy for such broad filters.
    pub fn lorentzian(grid: Arc<FrequencyGrid>, omega0: f64, gamma: f64) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(Error::Domain {
                name: "omega0",
                value: omega0,
                reason: "must be finite",
            });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain {
                name: "gamma",
                value: gamma,
                reason: "must be positive and finite",
            });
        }
        if omega0 / gamma < 100.0 {
            log::warn!(
                "filter bandwidth gamma = {gamma} is not small against omega0 = {omega0}; \
                 the narrowband description may be inaccurate"
            );
        }
        let mut t = Vec::with_capacity(grid.n_points());
        let mut r = Vec::with_capacity(grid.n_points());
        for &omega in grid.points() {
            let d = Complex64::new(gamma, -(omega - omega0));
            t.push(Complex64::new(gamma, 0.0) / d);
            r.push(Complex64::new(0.0, -(omega - omega0)) / d);
        }
        let model: TransmissionModel = Arc::new(move |omega: f64| {
            Complex64::new(gamma, 0.0) / Complex64::new(gamma, -(omega - omega0))
        });
        let spec = Self {
            grid,
            omega0,
            gamma,
            t,
            r,
            t_model: Some(model),
        };
        spec.check_unitarity()?;
        Ok(spec)
    }

    /// Builds a filter from tabulated transmission samples. The reflection is
    /// completed as R = i e^{i arg T} √(1 - |T|²), which satisfies both
    /// unitarity conditions exactly; any lossless completion differs from
    /// this one only by a sign that no measurement functional resolves.
    pub fn from_transmission(grid: Arc<FrequencyGrid>, samples: &[Complex64]) -> Result<Self> {
        Self::build_from_samples(grid, samples.to_vec(), None)
    }

    /// Like [`FilterSpec::from_transmission`], but keeps the closure as an
    /// analytic model so root searches can evaluate T between grid points.
    pub fn from_transmission_fn(
        grid: Arc<FrequencyGrid>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let samples: Vec<Complex64> = grid.points().iter().map(|&w| f(w)).collect();
        Self::build_from_samples(grid, samples, Some(Arc::new(f) as TransmissionModel))
    }

    fn build_from_samples(
        grid: Arc<FrequencyGrid>,
        t: Vec<Complex64>,
        t_model: Option<TransmissionModel>,
    ) -> Result<Self> {
        if t.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: t.len(),
            });
        }
        for v in &t {
            if !v.re.is_finite() || !v.im.is_finite() || v.norm_sqr() > 1.0 + 1e-12 {
                return Err(Error::Domain {
                    name: "transmission",
                    value: v.norm(),
                    reason: "|T| must be finite and at most 1",
                });
            }
        }
        let r: Vec<Complex64> = t
            .iter()
            .map(|v| {
                let mag = (1.0 - v.norm_sqr()).max(0.0).sqrt();
                // i e^{i arg T}: arg(0) = 0, so fully absorbing points get R = i.
                Complex64::from_polar(mag, v.arg() + std::f64::consts::FRAC_PI_2)
            })
            .collect();
        // Peak transmission locates the center; the bandwidth integral sets
        // the width scale used for root tolerances and default sampling.
        let peak = t
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let omega0 = grid.points()[peak];
        let gamma = effective_bandwidth_of(&grid, &t);
        if !(gamma > 0.0) {
            return Err(Error::Domain {
                name: "transmission",
                value: gamma,
                reason: "transmission is identically zero",
            });
        }
        let spec = Self {
            grid,
            omega0,
            gamma,
            t,
            r,
            t_model,
        };
        spec.check_unitarity()?;
        Ok(spec)
    }

    fn check_unitarity(&self) -> Result<()> {
        let (mag, cross) = self.unitarity_residuals();
        let worst = mag.max(cross);
        if worst > UNITARITY_TOL {
            // Locate the worst point for the error message.
            let mut at = self.grid.points()[0];
            let mut best = -1.0;
            for ((tv, rv), &omega) in self.t.iter().zip(&self.r).zip(self.grid.points()) {
                let m = (tv.norm_sqr() + rv.norm_sqr() - 1.0).abs();
                let c = (tv * rv.conj() + tv.conj() * rv).norm();
                if m.max(c) > best {
                    best = m.max(c);
                    at = omega;
                }
            }
            return Err(Error::NotUnitary {
                residual: worst,
                omega: at,
            });
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    /// Center frequency (peak of |T|² for tabulated filters).
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Width scale: the model half width, or the bandwidth integral for
    /// tabulated filters.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transmission(&self) -> &[Complex64] {
        &self.t
    }

    pub fn reflection(&self) -> &[Complex64] {
        &self.r
    }

    /// Largest pointwise violations of the two unitarity conditions:
    /// max ||T|² + |R|² - 1| and max |T R* + T* R|.
    pub fn unitarity_residuals(&self) -> (f64, f64) {
        let mut mag: f64 = 0.0;
        let mut cross: f64 = 0.0;
        for (tv, rv) in self.t.iter().zip(&self.r) {
            mag = mag.max((tv.norm_sqr() + rv.norm_sqr() - 1.0).abs());
            cross = cross.max((tv * rv.conj() + tv.conj() * rv).norm());
        }
        (mag, cross)
    }

    /// Effective bandwidth (1/π) ∫ |T|² dω over the grid. For a Lorentzian
    /// on an unbounded domain this equals Γ; grid truncation reduces it.
    pub fn effective_bandwidth(&self) -> f64 {
        effective_bandwidth_of(&self.grid, &self.t)
    }

    /// |T(ω)|² at an arbitrary frequency: exact for model-backed filters,
    /// linear interpolation of the samples otherwise.
    pub fn power_transmission_at(&self, omega: f64) -> f64 {
        if let Some(model) = &self.t_model {
            return model(omega).norm_sqr();
        }
        let pts = self.grid.points();
        if omega <= pts[0] {
            return self.t[0].norm_sqr();
        }
        if omega >= pts[pts.len() - 1] {
            return self.t[pts.len() - 1].norm_sqr();
        }
        let x = (omega - self.grid.omega_min()) / self.grid.spacing();
        let i = (x.floor() as usize).min(pts.len() - 2);
        let frac = x - i as f64;
        let a = self.t[i].norm_sqr();
        let b = self.t[i + 1].norm_sqr();
        a + (b - a) * frac
    }

    /// Splits an amplitude into its transmitted and reflected parts
    /// (T·f, R·f). Energy is conserved: ‖Tf‖² + ‖Rf‖² = ‖f‖².
    pub fn apply(&self, f: &SpectralAmplitude) -> Result<(SpectralAmplitude, SpectralAmplitude)> {
        if !self.grid.same_grid(f.grid()) {
            return Err(Error::GridMismatch);
        }
        let tv: Vec<Complex64> = f.values().iter().zip(&self.t).map(|(v, t)| v * t).collect();
        let rv: Vec<Complex64> = f.values().iter().zip(&self.r).map(|(v, r)| v * r).collect();
        Ok((
            SpectralAmplitude::new(self.grid.clone(), tv)?,
            SpectralAmplitude::new(self.grid.clone(), rv)?,
        ))
    }
}

fn effective_bandwidth_of(grid: &FrequencyGrid, t: &[Complex64]) -> f64 {
    let integral: f64 = t
        .iter()
        .zip(grid.weights())
        .map(|(v, &w)| w * v.norm_sqr())
        .sum();
    integral / std::f64::consts::PI
}

/// Sequence of filters sharing one grid; light reaches filter k only after
/// reflecting off filters 0..k.
#[derive(Debug, Clone)]
pub struct FilterChain {
    filters: Vec<FilterSpec>,
}

impl FilterChain {
    pub fn new(filters: Vec<FilterSpec>) -> Result<Self> {
        let first = filters.first().ok_or(Error::LengthMismatch {
            expected: 1,
            got: 0,
        })?;
        let grid = first.grid().clone();
        if filters.iter().any(|f| !grid.same_grid(f.grid())) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { filters })
    }

    pub fn single(filter: FilterSpec) -> Self {
        Self {
            filters: vec![filter],
        }
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        self.filters[0].grid()
    }

    pub fn filter(&self, k: usize) -> Result<&FilterSpec> {
        self.filters.get(k).ok_or(Error::IndexOutOfRange {
            what: "filter chain",
            index: k,
            len: self.filters.len(),
        })
    }

    /// Amplitude reaching the transmitted port of filter `k`:
    /// C_k(ω) = T_k(ω) · Π_{j<k} R_j(ω).
    pub fn port_coefficient(&self, k: usize) -> Result<Vec<Complex64>> {
        if k >= self.filters.len() {
            return Err(Error::IndexOutOfRange {
                what: "filter chain",
                index: k,
                len: self.filters.len(),
            });
        }
        let n = self.grid().n_points();
        let mut coeff = vec![Complex64::new(1.0, 0.0); n];
        for f in &self.filters[..k] {
            for (c, r) in coeff.iter_mut().zip(f.reflection()) {
                *c *= r;
            }
        }
        for (c, t) in coeff.iter_mut().zip(self.filters[k].transmission()) {
            *c *= t;
        }
        Ok(coeff)
    }

    /// Amplitude reflected off the entire chain: Π_j R_j(ω).
    pub fn residual_coefficient(&self) -> Vec<Complex64> {
        let n = self.grid().n_points();
        let mut coeff = vec![Complex64::new(1.0, 0.0); n];
        for f in &self.filters {
            for (c, r) in coeff.iter_mut().zip(f.reflection()) {
                *c *= r;
            }
        }
        coeff
    }

    /// Largest pointwise violation of Σ_k |C_k|² + |Π R|² = 1.
    pub fn partition_residual(&self) -> Result<f64> {
        let n = self.grid().n_points();
        let mut total = vec![0.0f64; n];
        for k in 0..self.filters.len() {
            for (acc, c) in total.iter_mut().zip(self.port_coefficient(k)?) {
                *acc += c.norm_sqr();
            }
        }
        for (acc, c) in total.iter_mut().zip(self.residual_coefficient()) {
            *acc += c.norm_sqr();
        }
        Ok(total
            .iter()
            .map(|&s| (s - 1.0).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn standard_grid(omega0: f64, gamma: f64, half_span: f64, per_gamma: usize) -> Arc<FrequencyGrid> {
        let n = (2.0 * half_span * per_gamma as f64).round() as usize + 1;
        FrequencyGrid::new(omega0 - half_span * gamma, omega0 + half_span * gamma, n).unwrap()
    }

    #[test]
    fn lorentzian_transmission_at_one_gamma_detuning() {
        // T(ω₀ + Γ) = Γ/(Γ - iΓ) = (1 + i)/2.
        let grid = standard_grid(1000.0, 1.0, 50.0, 10);
        let f = FilterSpec::lorentzian(grid.clone(), 1000.0, 1.0).unwrap();
        let idx = grid.nearest_index(1001.0);
        assert_abs_diff_eq!(grid.points()[idx], 1001.0, epsilon = 1e-9);
        let t = f.transmission()[idx];
        assert_abs_diff_eq!(t.re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.im, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lorentzian_satisfies_unitarity_pointwise() {
        let grid = standard_grid(1000.0, 1.0, 100.0, 50);
        let f = FilterSpec::lorentzian(grid, 1000.0, 1.0).unwrap();
        let (mag, cross) = f.unitarity_residuals();
        assert!(mag <= 1e-12, "magnitude residual {mag:e}");
        assert!(cross <= 1e-12, "cross residual {cross:e}");
    }

    #[test]
    fn effective_bandwidth_reflects_grid_truncation() {
        // ∫_{-SΓ}^{SΓ} |T|² dω = 2Γ·atan(S), so the bandwidth integral over
        // a ±50Γ grid is (2/π)·atan(50)·Γ ≈ 0.98727Γ.
        let gamma = 2.5;
        let grid = standard_grid(1000.0, gamma, 50.0, 40);
        let f = FilterSpec::lorentzian(grid, 1000.0, gamma).unwrap();
        let expected = 2.0 / std::f64::consts::PI * 50.0f64.atan() * gamma;
        assert_relative_eq!(f.effective_bandwidth(), expected, max_relative = 1e-6);
        assert_relative_eq!(f.effective_bandwidth(), 0.98727 * gamma, max_relative = 1e-4);
    }

    #[test]
    fn tabulated_completion_is_unitary_and_preserves_t() {
        let grid = standard_grid(500.0, 1.0, 20.0, 20);
        let base = FilterSpec::lorentzian(grid.clone(), 500.0, 1.0).unwrap();
        let f = FilterSpec::from_transmission(grid, base.transmission()).unwrap();
        assert_eq!(f.transmission(), base.transmission());
        let (mag, cross) = f.unitarity_residuals();
        assert!(mag <= 1e-12 && cross <= 1e-12);
    }

    #[test]
    fn overunity_transmission_is_rejected() {
        let grid = FrequencyGrid::new(0.0, 10.0, 11).unwrap();
        let mut t = vec![Complex64::new(0.5, 0.0); 11];
        t[3] = Complex64::new(1.0, 0.1);
        assert!(matches!(
            FilterSpec::from_transmission(grid, &t),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn fully_absorbing_points_complete_to_unit_reflection() {
        let grid = FrequencyGrid::new(0.0, 10.0, 11).unwrap();
        let t = vec![Complex64::new(0.0, 0.0); 11];
        let f = FilterSpec::from_transmission(grid, &t);
        // All-zero transmission has no bandwidth; the constructor refuses it.
        assert!(f.is_err());
        let grid = FrequencyGrid::new(0.0, 10.0, 11).unwrap();
        let mut t = vec![Complex64::new(0.0, 0.0); 11];
        t[5] = Complex64::new(0.8, 0.0);
        let f = FilterSpec::from_transmission(grid, &t).unwrap();
        assert_abs_diff_eq!(f.reflection()[0].im, 1.0, epsilon = 1e-15);
        let (mag, cross) = f.unitarity_residuals();
        assert!(mag <= 1e-12 && cross <= 1e-12);
    }

    #[test]
    fn apply_splits_energy_exactly() {
        let grid = standard_grid(300.0, 1.0, 30.0, 20);
        let filter = FilterSpec::lorentzian(grid.clone(), 300.0, 1.0).unwrap();
        let pulse = SpectralAmplitude::gaussian(grid, 301.0, 2.0).unwrap();
        let (t, r) = filter.apply(&pulse).unwrap();
        assert_abs_diff_eq!(
            t.norm_sqr() + r.norm_sqr(),
            pulse.norm_sqr(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn chain_rejects_mixed_grids() {
        let g1 = standard_grid(100.0, 1.0, 10.0, 10);
        let g2 = standard_grid(100.0, 1.0, 10.0, 11);
        let f1 = FilterSpec::lorentzian(g1, 100.0, 1.0).unwrap();
        let f2 = FilterSpec::lorentzian(g2, 100.0, 1.0).unwrap();
        assert!(matches!(
            FilterChain::new(vec![f1, f2]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn port_coefficient_indices_are_checked() {
        let grid = standard_grid(100.0, 1.0, 10.0, 10);
        let chain = FilterChain::single(FilterSpec::lorentzian(grid, 100.0, 1.0).unwrap());
        assert!(chain.port_coefficient(0).is_ok());
        assert!(matches!(
            chain.port_coefficient(1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn chain_partitions_unity(
            detunings in proptest::collection::vec(-5.0f64..5.0, 1..5),
            gammas in proptest::collection::vec(0.4f64..3.0, 4),
        ) {
            let grid = FrequencyGrid::new(980.0, 1020.0, 801).unwrap();
            let filters: Vec<FilterSpec> = detunings
                .iter()
                .zip(&gammas)
                .map(|(&d, &g)| FilterSpec::lorentzian(grid.clone(), 1000.0 + d, g).unwrap())
                .collect();
            let chain = FilterChain::new(filters).unwrap();
            prop_assert!(chain.partition_residual().unwrap() <= 1e-12);
        }

        #[test]
        fn tabulated_filters_stay_unitary(
            scale in 0.05f64..1.0,
            phase in -3.0f64..3.0,
            width in 0.5f64..4.0,
        ) {
            let grid = FrequencyGrid::new(-10.0, 10.0, 401).unwrap();
            let t: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&w| {
                    Complex64::from_polar(
                        scale * (-w * w / (2.0 * width * width)).exp(),
                        phase * w,
                    )
                })
                .collect();
            let f = FilterSpec::from_transmission(grid, &t).unwrap();
            let (mag, cross) = f.unitarity_residuals();
            prop_assert!(mag <= 1e-12);
            prop_assert!(cross <= 1e-12);
        }
    }
}
