//! Command-line front end: scenario loading, dispatch, deterministic CSV.
//!
//! Every command reads one scenario file (see [`crate::config`]) and emits a
//! CSV table with a header row, `,` separators, `.` decimal points, and all
//! floating-point values printed as `{:.11e}` (12 significant digits). Row
//! order is fixed by the iteration orders documented per command, so a given
//! config always produces byte-identical output.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
//! numerical validation fails (purity-curve agreement beyond tolerance, or
//! any failed `povm-check` row).

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::filters::{FilterChain, FilterSpec};
use crate::hom::coincidence_map;
use crate::herald::herald_windowed;
use crate::povm::{
    closed_form_overlap, closed_form_purity, completeness_residual, overlap_time, time_state,
    window_element, ModeBasis,
};
use crate::spectral::{FrequencyGrid, TimeWindow};

/// Frequency-filtered single-photon detection: spectra, purities,
/// heralding trade-offs, two-photon interference and self-checks.
#[derive(Debug, Parser)]
#[command(name = "povm", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-dependent detection probability density per cascade port.
    Spectrum(CommonArgs),
    /// Detection-window purity against the closed form, per Γ·Δt value.
    PurityCurve(CommonArgs),
    /// Heralded-state purity and efficiency over a bandwidth × window sweep.
    Herald(CommonArgs),
    /// Two-photon coincidence map |A(ω,ω′)|² over the frequency grid.
    HomMap(CommonArgs),
    /// Library self-check: unitarity, completeness, overlap and weight laws.
    PovmCheck(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (sectioned key=value, or JSON when the extension is .json).
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path; defaults to the [output] path, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Agreement tolerance for purity-curve (default 1e-2).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

/// Failure classes carrying the process exit code.
#[derive(Debug)]
pub enum CliFailure {
    /// Configuration, input or I/O problem — exit code 2.
    Config(Error),
    /// A numerical validation failed — exit code 3.
    Validation(String),
}

impl fmt::Display for CliFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliFailure::Config(e) => write!(f, "{e}"),
            CliFailure::Validation(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliFailure {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliFailure::Config(_) => 2,
            CliFailure::Validation(_) => 3,
        }
    }
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        CliFailure::Config(e)
    }
}

struct CmdOutput {
    csv: String,
    /// Set when the table was produced but a validation threshold was missed.
    failure: Option<String>,
}

impl CmdOutput {
    fn ok(csv: String) -> Self {
        CmdOutput { csv, failure: None }
    }
}

/// Runs one parsed command line to completion, writing its table.
pub fn run(cli: &Cli) -> std::result::Result<(), CliFailure> {
    let args = match &cli.command {
        Command::Spectrum(args)
        | Command::PurityCurve(args)
        | Command::Herald(args)
        | Command::HomMap(args)
        | Command::PovmCheck(args) => args,
    };
    let cfg = load_config(&args.config).map_err(CliFailure::Config)?;
    let output = match &cli.command {
        Command::Spectrum(_) => cmd_spectrum(&cfg)?,
        Command::PurityCurve(_) => cmd_purity_curve(&cfg, args.tolerance.unwrap_or(1e-2))?,
        Command::Herald(_) => cmd_herald(&cfg)?,
        Command::HomMap(_) => cmd_hom_map(&cfg)?,
        Command::PovmCheck(_) => cmd_povm_check(&cfg)?,
    };
    write_output(args, &cfg, &output.csv).map_err(CliFailure::Config)?;
    match output.failure {
        Some(msg) => Err(CliFailure::Validation(msg)),
        None => Ok(()),
    }
}

fn write_output(args: &CommonArgs, cfg: &ScenarioConfig, csv: &str) -> Result<()> {
    // --out wins, then the [output] path (relative to the working
    // directory), then stdout.
    let destination = args.out.clone().or_else(|| {
        cfg.output
            .as_ref()
            .and_then(|o| o.path.as_ref())
            .map(PathBuf::from)
    });
    match destination {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Formats a float with 12 significant digits; normalizes -0.0 to 0.0 so
/// output bytes never depend on rounding direction.
fn fmt_f(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// `spectrum`: rows `t,port_index,probability_density`, times outer,
/// cascade ports (0-based, in `[filter]` order) inner.
fn cmd_spectrum(cfg: &ScenarioConfig) -> std::result::Result<CmdOutput, CliFailure> {
    let grid = cfg.require_grid()?;
    let filters = cfg.build_filters(&grid)?;
    let gamma_hint = filters.iter().map(FilterSpec::gamma).fold(f64::MIN, f64::max);
    let window = cfg.build_window(gamma_hint)?;
    let state = cfg.build_state(&grid)?;
    let chain = FilterChain::new(filters)?;
    let eta = window.eta();
    let mut csv = String::from("t,port_index,probability_density\n");
    for &t in &window.sample_times() {
        for port in 0..chain.len() {
            // Unit-efficiency weight; the physical density is linear in η,
            // so η = 0 cleanly yields zero instead of an unreachable outcome.
            let (w, psi) = time_state(&chain, port, t, 1.0)?;
            let amp = psi.inner_product(&state)?;
            let density = eta * w * amp.norm_sqr();
            writeln!(csv, "{},{port},{}", fmt_f(t), fmt_f(density)).expect("string write");
        }
    }
    Ok(CmdOutput::ok(csv))
}

/// `purity-curve`: rows `gamma_dt,purity_numeric,purity_closed_form,d_eff,
/// agreement` in the configured order; exits 3 when any relative agreement
/// exceeds the tolerance.
fn cmd_purity_curve(
    cfg: &ScenarioConfig,
    tolerance: f64,
) -> std::result::Result<CmdOutput, CliFailure> {
    let grid = cfg.require_grid()?;
    let filters = cfg.build_filters(&grid)?;
    let curve = cfg
        .purity_curve
        .as_ref()
        .ok_or_else(|| Error::Config("missing [purity_curve] section".into()))?;
    let gamma = filters[0].gamma();
    let chain = FilterChain::single(filters.into_iter().next().expect("nonempty"));
    let mut csv = String::from("gamma_dt,purity_numeric,purity_closed_form,d_eff,agreement\n");
    let mut worst: f64 = 0.0;
    for &x in &curve.gamma_dt {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Config(format!("gamma_dt entries must be positive, got {x}")).into());
        }
        let dt = x / gamma;
        // Fixed midpoint sampling: enough samples that the discretization
        // error stays well under the default 1e-2 agreement tolerance.
        let n = ((20.0 * x).ceil() as usize).clamp(64, 256);
        let window = TimeWindow::new(-dt / 2.0, dt, 1.0, n)?;
        let element = window_element(&chain, 0, &window)?;
        let numeric = element.purity();
        let closed = closed_form_purity(x)?;
        let agreement = (numeric - closed).abs() / closed;
        worst = worst.max(agreement);
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f(x),
            fmt_f(numeric),
            fmt_f(closed),
            fmt_f(element.d_eff()),
            fmt_f(agreement)
        )
        .expect("string write");
    }
    let failure = (worst > tolerance).then(|| {
        format!("purity agreement {worst:.3e} exceeds tolerance {tolerance:.3e}")
    });
    Ok(CmdOutput { csv, failure })
}

/// `herald`: rows `gamma,dt,purity,efficiency`, bandwidths outer (in listed
/// order), window lengths inner.
fn cmd_herald(cfg: &ScenarioConfig) -> std::result::Result<CmdOutput, CliFailure> {
    let herald_grid = cfg.require_grid()?;
    let signal_grid = cfg.require_signal_grid()?;
    let jsa = cfg.build_jsa(&herald_grid, &signal_grid)?;
    let sweep = cfg
        .herald_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [herald_sweep] section".into()))?;
    let mut csv = String::from("gamma,dt,purity,efficiency\n");
    for &gamma in &sweep.gammas {
        let filter = FilterSpec::lorentzian(herald_grid.clone(), sweep.omega0, gamma)?;
        for &dt in &sweep.dts {
            let window = TimeWindow::auto(sweep.t0, dt, sweep.eta, gamma)?;
            let state = herald_windowed(&jsa, &filter, &window)?;
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_f(gamma),
                fmt_f(dt),
                fmt_f(state.purity()),
                fmt_f(state.probability())
            )
            .expect("string write");
        }
    }
    Ok(CmdOutput::ok(csv))
}

/// `hom-map`: rows `omega,omega_prime,coincidence` over grid², first
/// frequency outer. Uses the first `[filter]` and `[state]`/`[state2]`.
fn cmd_hom_map(cfg: &ScenarioConfig) -> std::result::Result<CmdOutput, CliFailure> {
    let grid = cfg.require_grid()?;
    let filters = cfg.build_filters(&grid)?;
    let phi1 = cfg.build_state(&grid)?;
    let phi2 = cfg.build_state2(&grid)?;
    let map = coincidence_map(&phi1, &phi2, &filters[0])?;
    let mut csv = String::from("omega,omega_prime,coincidence\n");
    let points = grid.points();
    for (i, &omega) in points.iter().enumerate() {
        for (j, &omega_prime) in points.iter().enumerate() {
            writeln!(
                csv,
                "{},{},{}",
                fmt_f(omega),
                fmt_f(omega_prime),
                fmt_f(map.value(i, j))
            )
            .expect("string write");
        }
    }
    Ok(CmdOutput::ok(csv))
}

/// One `povm-check` row: the check name, its residual, the threshold it must
/// stay below, and pass/fail.
struct CheckRow {
    name: &'static str,
    value: f64,
    threshold: f64,
}

/// `povm-check`: rows `check,value,threshold,status`. Unitarity and
/// completeness run on the configured grid; the closed-form overlap and
/// weight-factorization identities run on canonical internal grids sized
/// from the filter parameters, so they need `lorentzian` filters.
fn cmd_povm_check(cfg: &ScenarioConfig) -> std::result::Result<CmdOutput, CliFailure> {
    let grid = cfg.require_grid()?;
    let filters = cfg.build_filters(&grid)?;
    for f in &cfg.filters {
        let is_lorentzian = f.path.is_none()
            && f.model.as_deref().map_or(true, |m| m == "lorentzian");
        if !is_lorentzian {
            return Err(Error::Config(
                "povm-check requires lorentzian [filter] sections".into(),
            )
            .into());
        }
    }

    let mut rows = Vec::new();

    let unitarity = filters
        .iter()
        .map(|f| {
            let (mag, cross) = f.unitarity_residuals();
            mag.max(cross)
        })
        .fold(0.0f64, f64::max);
    rows.push(CheckRow {
        name: "filter_unitarity",
        value: unitarity,
        threshold: 1e-12,
    });

    let basis = ModeBasis::grid_bins(grid.clone());
    let report = completeness_residual(&basis, &filters[0])?;
    rows.push(CheckRow {
        name: "completeness_diagonal",
        value: report.max_diagonal_residual,
        threshold: 1e-10,
    });
    rows.push(CheckRow {
        name: "completeness_offdiagonal",
        value: report.max_offdiagonal,
        threshold: 1e-10,
    });

    // Closed-form overlap on the canonical span ω₀ ± 100Γ, spacing Γ/50.
    let (omega0, gamma) = (filters[0].omega0(), filters[0].gamma());
    let overlap_grid = FrequencyGrid::new(
        omega0 - 100.0 * gamma,
        omega0 + 100.0 * gamma,
        10_001,
    )?;
    let overlap_chain =
        FilterChain::single(FilterSpec::lorentzian(overlap_grid, omega0, gamma)?);
    let mut overlap_dev: f64 = 0.0;
    for k in 0..=25 {
        let dt = 0.2 * k as f64 / gamma;
        let numeric = overlap_time(&overlap_chain, 0, 0.0, dt)?;
        let closed = closed_form_overlap(gamma, omega0, dt);
        overlap_dev = overlap_dev.max((numeric - closed).norm());
    }
    rows.push(CheckRow {
        name: "overlap_closed_form",
        value: overlap_dev,
        threshold: 1e-2,
    });

    // Two-detection weight factorization W = w·w′(1 + |⟨Ψ′|Ψ⟩|²) on a
    // coarser internal grid covering both filters.
    let second = cfg.filters.get(1).unwrap_or(&cfg.filters[0]);
    let (omega1, gamma1) = (
        second.omega0.expect("validated above"),
        second.gamma.expect("validated above"),
    );
    let lo = (omega0 - 40.0 * gamma).min(omega1 - 40.0 * gamma1);
    let hi = (omega0 + 40.0 * gamma).max(omega1 + 40.0 * gamma1);
    let pair_grid = FrequencyGrid::new(lo, hi, 2_001)?;
    let filter0 = FilterSpec::lorentzian(pair_grid.clone(), omega0, gamma)?;
    let filter1 = FilterSpec::lorentzian(pair_grid.clone(), omega1, gamma1)?;
    let pair_chain = FilterChain::new(vec![filter0.clone(), filter1.clone()])?;
    let mut w_dev: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let t = 0.5 * a as f64 / gamma;
            let t_prime = 0.5 * b as f64 / gamma1;
            let (w_joint, _) =
                crate::cascade::two_photon_projector(&filter0, &filter1, t, t_prime, 1.0)?;
            let (w0, _) = time_state(&pair_chain, 0, t, 1.0)?;
            let (w1, _) = time_state(&pair_chain, 1, t_prime, 1.0)?;
            let cross = crate::cascade::cross_overlap(&filter0, &filter1, t, t_prime, 1.0)?;
            let expected = w0 * w1 * (1.0 + cross.norm_sqr());
            w_dev = w_dev.max((w_joint - expected).abs() / w_joint);
        }
    }
    rows.push(CheckRow {
        name: "weight_factorization",
        value: w_dev,
        threshold: 1e-8,
    });

    let mut csv = String::from("check,value,threshold,status\n");
    let mut failed = Vec::new();
    for row in &rows {
        let pass = row.value <= row.threshold;
        if !pass {
            failed.push(format!("{} = {:.3e} > {:.3e}", row.name, row.value, row.threshold));
        }
        writeln!(
            csv,
            "{},{},{},{}",
            row.name,
            fmt_f(row.value),
            fmt_f(row.threshold),
            if pass { "pass" } else { "fail" }
        )
        .expect("string write");
    }
    let failure = (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join("; ")));
    Ok(CmdOutput { csv, failure })
}

/// Installs a minimal stderr logger for the `log` facade. CSV output never
/// goes through the logger, so diagnostics cannot perturb determinism.
pub fn init_logger() {
    struct StderrLogger;
    impl log::Log for StderrLogger {
        fn enabled(&self, metadata: &log::Metadata<'_>) -> bool {
            metadata.level() <= log::Level::Warn
        }
        fn log(&self, record: &log::Record<'_>) {
            if self.enabled(record.metadata()) {
                eprintln!("{}: {}", record.level(), record.args());
            }
        }
        fn flush(&self) {}
    }
    static LOGGER: StderrLogger = StderrLogger;
    // Ignore the error if a logger is already set (e.g. in tests).
    let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Warn));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width_significand() {
        assert_eq!(fmt_f(0.095), "9.50000000000e-2");
        assert_eq!(fmt_f(-0.0), "0.00000000000e0");
        assert_eq!(fmt_f(12345.678), "1.23456780000e4");
    }

    #[test]
    fn exit_codes_match_failure_classes() {
        let config = CliFailure::Config(Error::Config("x".into()));
        assert_eq!(config.exit_code(), 2);
        let validation = CliFailure::Validation("y".into());
        assert_eq!(validation.exit_code(), 3);
    }
}
