//! Scenario configuration for the command-line tool.
//!
//! A scenario file is either a sectioned key=value text file or a JSON
//! document with the same shape. Both forms reject unknown sections and
//! keys so that typos fail loudly instead of silently running defaults.
//!
//! ```text
//! # comments start with '#' or ';'
//! [grid]
//! omega_min = 980.0
//! omega_max = 1020.0
//! n_points = 2001
//!
//! [filter]            ; repeat the section to cascade filters
//! model = lorentzian
//! omega0 = 1000.0
//! gamma = 1.0
//!
//! [state]
//! preset = exponential
//! center = 1000.0
//! kappa = 0.5
//!
//! [window]
//! t0 = -1.0
//! dt = 2.0
//! eta = 1.0
//! ```
//!
//! All physical quantities share one user-chosen frequency unit (the shipped
//! examples use the filter bandwidth, Γ = 1) and its inverse time unit.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filters::FilterSpec;
use crate::herald::{correlated_gaussian_jsa, separable_jsa, JointAmplitude};
use crate::spectral::{FrequencyGrid, SpectralAmplitude, TimeWindow};

/// Frequency-axis description: `[grid]` / `[signal_grid]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

/// One `[filter]` section; repeats cascade in listed order.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// `lorentzian` (default when omega0/gamma are given) or `table`.
    pub model: Option<String>,
    pub omega0: Option<f64>,
    pub gamma: Option<f64>,
    /// Table file with columns omega, Re T, Im T; interpolated onto the grid.
    pub path: Option<String>,
}

/// `[state]` / `[state2]` sections describing a single-photon spectrum.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    /// `gaussian`, `exponential`, `flat`, or `table`.
    pub preset: Option<String>,
    pub center: Option<f64>,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Table file with columns omega, Re φ, Im φ; interpolated, then normalized.
    pub path: Option<String>,
}

/// `[window]` section: detection interval `[t0, t0+dt]` with efficiency η.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub t0: f64,
    pub dt: f64,
    pub eta: f64,
    /// Number of time samples; omit (or 0) to pick automatically.
    #[serde(default)]
    pub n_time_samples: Option<usize>,
}

/// `[purity_curve]` section: list of Γ·Δt values to sweep.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurityCurveConfig {
    pub gamma_dt: Vec<f64>,
}

/// `[jsa]` section describing the photon-pair joint spectrum.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JsaConfig {
    /// `correlated_gaussian`, `separable`, or `table`.
    pub preset: Option<String>,
    pub pump_center: Option<f64>,
    pub sigma_plus: Option<f64>,
    pub sigma_minus: Option<f64>,
    pub herald_center: Option<f64>,
    pub herald_sigma: Option<f64>,
    pub signal_center: Option<f64>,
    pub signal_sigma: Option<f64>,
    /// Table file with columns omega_herald, omega_signal, Re Φ, Im Φ in
    /// row-major order over herald grid × signal grid.
    pub path: Option<String>,
}

/// `[herald_sweep]` section: filter bandwidths × window lengths. The herald
/// filter is a Lorentzian at `omega0` rebuilt for every swept `gamma`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldSweepConfig {
    pub omega0: f64,
    pub gammas: Vec<f64>,
    pub dts: Vec<f64>,
    pub t0: f64,
    pub eta: f64,
}

/// `[output]` section; `--out` on the command line overrides `path`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<String>,
    /// Only `csv` is supported.
    pub format: Option<String>,
}

/// Parsed scenario file; which sections are required depends on the command.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub grid: Option<GridConfig>,
    pub filters: Vec<FilterConfig>,
    pub state: Option<StateConfig>,
    pub state2: Option<StateConfig>,
    pub window: Option<WindowConfig>,
    pub purity_curve: Option<PurityCurveConfig>,
    pub jsa: Option<JsaConfig>,
    pub signal_grid: Option<GridConfig>,
    pub herald_sweep: Option<HeraldSweepConfig>,
    pub output: Option<OutputConfig>,
    /// Directory of the source file; table paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Reads a scenario file, dispatching on the extension: `.json` is parsed
/// as JSON, anything else as the sectioned key=value format.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg = if is_json {
        parse_json(&text)?
    } else {
        parse_sectioned(&text)?
    };
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    cfg.validate_common()?;
    Ok(cfg)
}

/// Parses the JSON form of the scenario file.
pub fn parse_json(text: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON config: {e}")))
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(idx) => &line[..idx],
        None => line,
    }
}

const SECTIONS: &[&str] = &[
    "grid",
    "filter",
    "state",
    "state2",
    "window",
    "purity_curve",
    "jsa",
    "signal_grid",
    "herald_sweep",
    "output",
];

/// Parses the sectioned key=value form of the scenario file.
pub fn parse_sectioned(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut section: Option<String> = None;
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| {
                    Error::Config(format!("line {line_no}: unterminated section header"))
                })?
                .trim()
                .to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown section [{name}]"
                )));
            }
            if name == "filter" {
                cfg.filters.push(FilterConfig::default());
            } else if !seen.insert(name.clone()) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate section [{name}]"
                )));
            }
            section = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let section = section.as_deref().ok_or_else(|| {
            Error::Config(format!("line {line_no}: key `{key}` appears before any section"))
        })?;
        apply_key(&mut cfg, section, &key, value, line_no)?;
    }
    Ok(cfg)
}

fn parse_f64(value: &str, key: &str, line_no: usize) -> Result<f64> {
    value.parse().map_err(|_| {
        Error::Config(format!("line {line_no}: `{key}` is not a number: `{value}`"))
    })
}

fn parse_usize(value: &str, key: &str, line_no: usize) -> Result<usize> {
    value.parse().map_err(|_| {
        Error::Config(format!("line {line_no}: `{key}` is not a non-negative integer: `{value}`"))
    })
}

fn parse_list(value: &str, key: &str, line_no: usize) -> Result<Vec<f64>> {
    let items: Result<Vec<f64>> = value
        .split([',', ' ', '\t'])
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(s, key, line_no))
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(Error::Config(format!("line {line_no}: `{key}` list is empty")));
    }
    Ok(items)
}

fn apply_key(
    cfg: &mut ScenarioConfig,
    section: &str,
    key: &str,
    value: &str,
    line_no: usize,
) -> Result<()> {
    let unknown = || {
        Err(Error::Config(format!(
            "line {line_no}: unknown key `{key}` in section [{section}]"
        )))
    };
    match section {
        "grid" | "signal_grid" => {
            let slot = if section == "grid" {
                &mut cfg.grid
            } else {
                &mut cfg.signal_grid
            };
            let grid = slot.get_or_insert(GridConfig {
                omega_min: f64::NAN,
                omega_max: f64::NAN,
                n_points: 0,
            });
            match key {
                "omega_min" => grid.omega_min = parse_f64(value, key, line_no)?,
                "omega_max" => grid.omega_max = parse_f64(value, key, line_no)?,
                "n_points" => grid.n_points = parse_usize(value, key, line_no)?,
                _ => return unknown(),
            }
        }
        "filter" => {
            let filter = cfg.filters.last_mut().ok_or_else(|| {
                Error::Config(format!("line {line_no}: [filter] key outside a section"))
            })?;
            match key {
                "model" => filter.model = Some(value.to_ascii_lowercase()),
                "omega0" => filter.omega0 = Some(parse_f64(value, key, line_no)?),
                "gamma" => filter.gamma = Some(parse_f64(value, key, line_no)?),
                "path" => filter.path = Some(value.to_string()),
                _ => return unknown(),
            }
        }
        "state" | "state2" => {
            let slot = if section == "state" {
                &mut cfg.state
            } else {
                &mut cfg.state2
            };
            let state = slot.get_or_insert(StateConfig::default());
            match key {
                "preset" => state.preset = Some(value.to_ascii_lowercase()),
                "center" => state.center = Some(parse_f64(value, key, line_no)?),
                "sigma" => state.sigma = Some(parse_f64(value, key, line_no)?),
                "kappa" => state.kappa = Some(parse_f64(value, key, line_no)?),
                "lo" => state.lo = Some(parse_f64(value, key, line_no)?),
                "hi" => state.hi = Some(parse_f64(value, key, line_no)?),
                "path" => state.path = Some(value.to_string()),
                _ => return unknown(),
            }
        }
        "window" => {
            let window = cfg.window.get_or_insert(WindowConfig {
                t0: f64::NAN,
                dt: f64::NAN,
                eta: f64::NAN,
                n_time_samples: None,
            });
            match key {
                "t0" => window.t0 = parse_f64(value, key, line_no)?,
                "dt" => window.dt = parse_f64(value, key, line_no)?,
                "eta" => window.eta = parse_f64(value, key, line_no)?,
                "n_time_samples" => {
                    window.n_time_samples = Some(parse_usize(value, key, line_no)?)
                }
                _ => return unknown(),
            }
        }
        "purity_curve" => {
            let curve = cfg
                .purity_curve
                .get_or_insert(PurityCurveConfig { gamma_dt: vec![] });
            match key {
                "gamma_dt" => curve.gamma_dt = parse_list(value, key, line_no)?,
                _ => return unknown(),
            }
        }
        "jsa" => {
            let jsa = cfg.jsa.get_or_insert(JsaConfig::default());
            match key {
                "preset" => jsa.preset = Some(value.to_ascii_lowercase()),
                "pump_center" => jsa.pump_center = Some(parse_f64(value, key, line_no)?),
                "sigma_plus" => jsa.sigma_plus = Some(parse_f64(value, key, line_no)?),
                "sigma_minus" => jsa.sigma_minus = Some(parse_f64(value, key, line_no)?),
                "herald_center" => jsa.herald_center = Some(parse_f64(value, key, line_no)?),
                "herald_sigma" => jsa.herald_sigma = Some(parse_f64(value, key, line_no)?),
                "signal_center" => jsa.signal_center = Some(parse_f64(value, key, line_no)?),
                "signal_sigma" => jsa.signal_sigma = Some(parse_f64(value, key, line_no)?),
                "path" => jsa.path = Some(value.to_string()),
                _ => return unknown(),
            }
        }
        "herald_sweep" => {
            let sweep = cfg.herald_sweep.get_or_insert(HeraldSweepConfig {
                omega0: f64::NAN,
                gammas: vec![],
                dts: vec![],
                t0: f64::NAN,
                eta: f64::NAN,
            });
            match key {
                "omega0" => sweep.omega0 = parse_f64(value, key, line_no)?,
                "gammas" => sweep.gammas = parse_list(value, key, line_no)?,
                "dts" => sweep.dts = parse_list(value, key, line_no)?,
                "t0" => sweep.t0 = parse_f64(value, key, line_no)?,
                "eta" => sweep.eta = parse_f64(value, key, line_no)?,
                _ => return unknown(),
            }
        }
        "output" => {
            let output = cfg.output.get_or_insert(OutputConfig::default());
            match key {
                "path" => output.path = Some(value.to_string()),
                "format" => output.format = Some(value.to_ascii_lowercase()),
                _ => return unknown(),
            }
        }
        _ => return unknown(),
    }
    Ok(())
}

impl ScenarioConfig {
    fn validate_common(&self) -> Result<()> {
        for grid in [&self.grid, &self.signal_grid].into_iter().flatten() {
            if !grid.omega_min.is_finite() || !grid.omega_max.is_finite() || grid.n_points == 0 {
                return Err(Error::Config(
                    "grid section needs omega_min, omega_max and n_points".into(),
                ));
            }
        }
        if let Some(window) = &self.window {
            if !window.t0.is_finite() || !window.dt.is_finite() || !window.eta.is_finite() {
                return Err(Error::Config("window section needs t0, dt and eta".into()));
            }
        }
        if let Some(sweep) = &self.herald_sweep {
            if sweep.gammas.is_empty()
                || sweep.dts.is_empty()
                || !sweep.omega0.is_finite()
                || !sweep.t0.is_finite()
                || !sweep.eta.is_finite()
            {
                return Err(Error::Config(
                    "herald_sweep section needs omega0, gammas, dts, t0 and eta".into(),
                ));
            }
        }
        if let Some(output) = &self.output {
            if let Some(format) = &output.format {
                if format != "csv" {
                    return Err(Error::Config(format!(
                        "unsupported output format `{format}` (only csv)"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match &self.base_dir {
            Some(base) => base.join(p),
            None => p.to_path_buf(),
        }
    }

    pub fn require_grid(&self) -> Result<Arc<FrequencyGrid>> {
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing [grid] section".into()))?;
        build_grid(grid)
    }

    pub fn require_signal_grid(&self) -> Result<Arc<FrequencyGrid>> {
        let grid = self
            .signal_grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing [signal_grid] section".into()))?;
        build_grid(grid)
    }

    /// Builds every configured filter on `grid`, in listed order.
    pub fn build_filters(&self, grid: &Arc<FrequencyGrid>) -> Result<Vec<FilterSpec>> {
        if self.filters.is_empty() {
            return Err(Error::Config("missing [filter] section".into()));
        }
        self.filters
            .iter()
            .map(|f| self.build_filter(f, grid))
            .collect()
    }

    fn build_filter(&self, cfg: &FilterConfig, grid: &Arc<FrequencyGrid>) -> Result<FilterSpec> {
        let model = cfg.model.clone().unwrap_or_else(|| {
            if cfg.path.is_some() {
                "table".into()
            } else {
                "lorentzian".into()
            }
        });
        match model.as_str() {
            "lorentzian" => {
                let omega0 = need(cfg.omega0, "filter", "omega0")?;
                let gamma = need(cfg.gamma, "filter", "gamma")?;
                FilterSpec::lorentzian(grid.clone(), omega0, gamma)
            }
            "table" => {
                let path = cfg
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("filter table needs `path`".into()))?;
                let table = read_table(&self.resolve(path), 3)?;
                let samples = interpolate_complex(&table, grid)?;
                FilterSpec::from_transmission(grid.clone(), &samples)
            }
            other => Err(Error::Config(format!("unknown filter model `{other}`"))),
        }
    }

    pub fn build_state(&self, grid: &Arc<FrequencyGrid>) -> Result<SpectralAmplitude> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Config("missing [state] section".into()))?;
        self.build_state_from(state, grid)
    }

    /// Second input spectrum for interference scenarios; defaults to `[state]`.
    pub fn build_state2(&self, grid: &Arc<FrequencyGrid>) -> Result<SpectralAmplitude> {
        match &self.state2 {
            Some(state) => self.build_state_from(state, grid),
            None => self.build_state(grid),
        }
    }

    fn build_state_from(
        &self,
        cfg: &StateConfig,
        grid: &Arc<FrequencyGrid>,
    ) -> Result<SpectralAmplitude> {
        let preset = cfg.preset.clone().unwrap_or_else(|| {
            if cfg.path.is_some() {
                "table".into()
            } else {
                "gaussian".into()
            }
        });
        let state = match preset.as_str() {
            "gaussian" => SpectralAmplitude::gaussian(
                grid.clone(),
                need(cfg.center, "state", "center")?,
                need(cfg.sigma, "state", "sigma")?,
            )?,
            "exponential" => SpectralAmplitude::exponential(
                grid.clone(),
                need(cfg.center, "state", "center")?,
                need(cfg.kappa, "state", "kappa")?,
            )?,
            "flat" => SpectralAmplitude::flat(
                grid.clone(),
                need(cfg.lo, "state", "lo")?,
                need(cfg.hi, "state", "hi")?,
            )?,
            "table" => {
                let path = cfg
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("state table needs `path`".into()))?;
                let table = read_table(&self.resolve(path), 3)?;
                let samples = interpolate_complex(&table, grid)?;
                SpectralAmplitude::new(grid.clone(), samples)?
            }
            other => return Err(Error::Config(format!("unknown state preset `{other}`"))),
        };
        state.normalized()
    }

    /// Builds the detection window; `gamma` sets the automatic sample count
    /// when `n_time_samples` is absent.
    pub fn build_window(&self, gamma: f64) -> Result<TimeWindow> {
        let window = self
            .window
            .as_ref()
            .ok_or_else(|| Error::Config("missing [window] section".into()))?;
        match window.n_time_samples {
            Some(n) if n > 0 => TimeWindow::new(window.t0, window.dt, window.eta, n),
            _ => TimeWindow::auto(window.t0, window.dt, window.eta, gamma),
        }
    }

    pub fn build_jsa(
        &self,
        herald_grid: &Arc<FrequencyGrid>,
        signal_grid: &Arc<FrequencyGrid>,
    ) -> Result<JointAmplitude> {
        let jsa = self
            .jsa
            .as_ref()
            .ok_or_else(|| Error::Config("missing [jsa] section".into()))?;
        let preset = jsa.preset.clone().unwrap_or_else(|| {
            if jsa.path.is_some() {
                "table".into()
            } else {
                "correlated_gaussian".into()
            }
        });
        match preset.as_str() {
            "correlated_gaussian" => correlated_gaussian_jsa(
                herald_grid.clone(),
                signal_grid.clone(),
                need(jsa.pump_center, "jsa", "pump_center")?,
                need(jsa.sigma_plus, "jsa", "sigma_plus")?,
                need(jsa.sigma_minus, "jsa", "sigma_minus")?,
            ),
            "separable" => {
                let herald = SpectralAmplitude::gaussian(
                    herald_grid.clone(),
                    need(jsa.herald_center, "jsa", "herald_center")?,
                    need(jsa.herald_sigma, "jsa", "herald_sigma")?,
                )?;
                let signal = SpectralAmplitude::gaussian(
                    signal_grid.clone(),
                    need(jsa.signal_center, "jsa", "signal_center")?,
                    need(jsa.signal_sigma, "jsa", "signal_sigma")?,
                )?;
                separable_jsa(&herald, &signal)
            }
            "table" => {
                let path = jsa
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("jsa table needs `path`".into()))?;
                let table = read_table(&self.resolve(path), 4)?;
                build_jsa_table(&table, herald_grid, signal_grid)
            }
            other => Err(Error::Config(format!("unknown jsa preset `{other}`"))),
        }
    }
}

fn need<T: Copy>(value: Option<T>, section: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("[{section}] is missing `{key}`")))
}

pub fn build_grid(cfg: &GridConfig) -> Result<Arc<FrequencyGrid>> {
    FrequencyGrid::new(cfg.omega_min, cfg.omega_max, cfg.n_points)
}

/// Reads a whitespace- or comma-separated numeric table with `cols` columns.
/// Lines starting with `#` are comments.
fn read_table(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read table {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split([',', ' ', '\t'])
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::Config(format!(
                        "{} line {}: not a number: `{s}`",
                        path.display(),
                        idx + 1
                    ))
                })
            })
            .collect();
        let row = row?;
        if row.len() != cols {
            return Err(Error::Config(format!(
                "{} line {}: expected {cols} columns, got {}",
                path.display(),
                idx + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: empty table", path.display())));
    }
    Ok(rows)
}

/// Linearly interpolates a 3-column (omega, Re, Im) table onto the grid.
/// The table must be sorted by omega and cover the whole grid span.
fn interpolate_complex(table: &[Vec<f64>], grid: &Arc<FrequencyGrid>) -> Result<Vec<Complex64>> {
    for pair in table.windows(2) {
        if pair[1][0] <= pair[0][0] {
            return Err(Error::Config(
                "table omega column must be strictly increasing".into(),
            ));
        }
    }
    let (first, last) = (table[0][0], table[table.len() - 1][0]);
    if grid.omega_min() < first - 1e-9 || grid.omega_max() > last + 1e-9 {
        return Err(Error::Config(format!(
            "table covers [{first}, {last}] but the grid spans [{}, {}]",
            grid.omega_min(),
            grid.omega_max()
        )));
    }
    let mut out = Vec::with_capacity(grid.n_points());
    let mut seg = 0usize;
    for &omega in grid.points() {
        while seg + 2 < table.len() && table[seg + 1][0] < omega {
            seg += 1;
        }
        let (a, b) = (&table[seg], &table[seg + 1]);
        let s = ((omega - a[0]) / (b[0] - a[0])).clamp(0.0, 1.0);
        out.push(Complex64::new(
            a[1] + s * (b[1] - a[1]),
            a[2] + s * (b[2] - a[2]),
        ));
    }
    Ok(out)
}

/// Assembles a joint amplitude from rows (omega_herald, omega_signal, Re, Im)
/// in row-major order over herald grid × signal grid.
fn build_jsa_table(
    table: &[Vec<f64>],
    herald_grid: &Arc<FrequencyGrid>,
    signal_grid: &Arc<FrequencyGrid>,
) -> Result<JointAmplitude> {
    let (nh, ns) = (herald_grid.n_points(), signal_grid.n_points());
    if table.len() != nh * ns {
        return Err(Error::Config(format!(
            "jsa table has {} rows, expected {} ({} herald × {} signal points)",
            table.len(),
            nh * ns,
            nh,
            ns
        )));
    }
    let tol_h = 1e-9 * (herald_grid.omega_max() - herald_grid.omega_min()).abs();
    let tol_s = 1e-9 * (signal_grid.omega_max() - signal_grid.omega_min()).abs();
    let mut values = Vec::with_capacity(nh * ns);
    for i in 0..nh {
        for j in 0..ns {
            let row = &table[i * ns + j];
            if (row[0] - herald_grid.points()[i]).abs() > tol_h
                || (row[1] - signal_grid.points()[j]).abs() > tol_s
            {
                return Err(Error::Config(format!(
                    "jsa table row {} is ({}, {}), expected grid point ({}, {})",
                    i * ns + j + 1,
                    row[0],
                    row[1],
                    herald_grid.points()[i],
                    signal_grid.points()[j]
                )));
            }
            values.push(Complex64::new(row[2], row[3]));
        }
    }
    JointAmplitude::new(herald_grid.clone(), signal_grid.clone(), values)
}
