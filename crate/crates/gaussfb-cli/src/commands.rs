//! The subcommands. Each turns a resolved configuration into an output
//! document; writing it out is left to the caller.

use gaussfb::bounds::SpectralData;
use gaussfb::dynamics::lyapunov_steady_state;
use gaussfb::feedback::{closed_loop, feedback_gain, FeedbackLaw};
use gaussfb::scenarios::{run_scenario, sweep, AchievedReport, BoundsReport, ClosedLoopReport, ThresholdReport};
use gaussfb::symplectic::{log_negativity, Bipartition};
use gaussfb::trajectories::{ensemble_statistics, simulate_closed_loop_from, simulate_conditional};
use gaussfb::VERSION;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::{FeedbackMode, RunConfig};
use crate::table::{self, SweepRow};
use crate::{CliError, Format};

/// Deviations this small count as agreement regardless of standard errors.
pub const SE_FLOOR: f64 = 1e-9;

/// Achieved values this close to a bound count as saturating it.
pub const SATURATION_TOL: f64 = 1e-6;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct SpectralOutput {
    pub alpha_up: Vec<f64>,
    pub alpha_vectors: Vec<Vec<f64>>,
    pub delta_down: Vec<f64>,
    pub delta_vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct BoundsOutput {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub bounds: BoundsReport,
    pub spectral: SpectralOutput,
}

#[derive(Debug, Serialize)]
pub struct SteadyOutput {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub sigma_c: Vec<Vec<f64>>,
    pub achieved_squeezing: f64,
    pub log_negativity: Option<f64>,
    pub pt_min_symplectic_eigenvalue: Option<f64>,
    pub symplectic_eigenvalues: Vec<f64>,
    pub pure: bool,
    pub riccati_residual: f64,
    pub non_unique: bool,
    /// Steady state without monitoring.
    pub unconditional_sigma: Vec<Vec<f64>>,
    pub unconditional_log_negativity: Option<f64>,
    pub closed_loop: ClosedLoopReport,
    pub bounds: BoundsReport,
    pub thresholds: ThresholdReport,
}

#[derive(Debug, Serialize)]
pub struct SweepOutput {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
pub struct TightnessOutput {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub tight_squeezing: bool,
    pub squeezing_bound: f64,
    pub achieved_squeezing: f64,
    pub squeezing_saturated: bool,
    pub tight_entanglement: Option<bool>,
    pub entanglement_bound: Option<f64>,
    pub achieved_log_negativity: Option<f64>,
    pub entanglement_saturated: Option<bool>,
    pub pure: bool,
}

#[derive(Debug, Serialize)]
pub struct SimulateOutput {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    /// Samples pooled over trajectories and recorded times in the window.
    pub samples: usize,
    pub window: [f64; 2],
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Spread of the conditional means.
    pub tau: Vec<Vec<f64>>,
    pub tau_se: Vec<Vec<f64>>,
    /// Conditional covariance averaged over the window.
    pub sigma_c: Vec<Vec<f64>>,
    /// Reconstructed unconditional covariance `σ_c + τ`.
    pub sigma: Vec<Vec<f64>>,
    /// Stationary covariance predicted for the simulated dynamics.
    pub predicted_sigma: Vec<Vec<f64>>,
    /// Stationary conditional covariance from the Riccati solver.
    pub riccati_sigma_c: Vec<Vec<f64>>,
    pub feedback_gain: Vec<Vec<f64>>,
    /// Largest `|σ - σ_pred| / SE` over all entries.
    pub max_deviation_in_se: f64,
    /// Every entry of `σ` and of the mean within 3 standard errors.
    pub within_3se: bool,
}

/// Rendered output of one command.
pub struct Output {
    pub main: String,
    /// Optional second file, `(path, contents)`.
    pub raw: Option<(std::path::PathBuf, String)>,
}

fn comments(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let json = serde_json::to_string(cfg).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(vec![format!("gaussfb {VERSION}"), format!("config {json}")])
}

fn render<T: Serialize>(doc: &T, cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Output(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let value = serde_json::to_value(doc).map_err(|e| CliError::Output(e.to_string()))?;
            table::write_flat(&comments(cfg)?, &value)
        }
    }
}

pub fn bounds(cfg: RunConfig, format: Format) -> Result<Output, CliError> {
    let sys = cfg.scenario.system()?;
    let spectral = SpectralData::new(&sys.dd)?;
    let bounds = gaussfb::scenarios::bounds_report(&sys)?;
    let doc = BoundsOutput {
        version: VERSION,
        command: "bounds",
        spectral: SpectralOutput {
            alpha_up: spectral.alpha_up,
            alpha_vectors: rows(&spectral.alpha_vectors),
            delta_down: spectral.delta_down,
            delta_vectors: rows(&spectral.delta_vectors),
        },
        bounds,
        config: cfg,
    };
    Ok(Output { main: render(&doc, &doc.config, format)?, raw: None })
}

pub fn steady(cfg: RunConfig, format: Format) -> Result<Output, CliError> {
    let report = run_scenario(&cfg.scenario)?;
    let sys = cfg.scenario.system()?;
    let unconditional = lyapunov_steady_state(&sys.dd)?;
    let unconditional_log_negativity = sys
        .is_entangling()
        .then(|| log_negativity(&unconditional, &Bipartition::two_mode()))
        .transpose()?;
    let AchievedReport {
        sigma_c,
        min_eigenvalue,
        log_negativity,
        pt_min_symplectic_eigenvalue,
        symplectic_eigenvalues,
        pure,
        riccati_residual,
        non_unique,
    } = report.achieved;
    let doc = SteadyOutput {
        version: VERSION,
        command: "steady",
        config: cfg,
        sigma_c,
        achieved_squeezing: min_eigenvalue,
        log_negativity,
        pt_min_symplectic_eigenvalue,
        symplectic_eigenvalues,
        pure,
        riccati_residual,
        non_unique,
        unconditional_sigma: rows(unconditional.matrix()),
        unconditional_log_negativity,
        closed_loop: report.closed_loop,
        bounds: report.bounds,
        thresholds: report.thresholds,
    };
    Ok(Output { main: render(&doc, &doc.config, format)?, raw: None })
}

pub fn sweep_cmd(cfg: RunConfig, format: Format) -> Result<Output, CliError> {
    let sw = cfg.sweep()?;
    let grid = sw.grid.as_deref().unwrap_or_default();
    let mut out = Vec::with_capacity(grid.len() * sw.strategies.len());
    let per_strategy = sw
        .strategies
        .iter()
        .map(|s| sweep(&cfg.scenario.clone().with_strategy(*s), sw.parameter, grid))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, v) in grid.iter().enumerate() {
        for reports in &per_strategy {
            out.push(SweepRow::new(sw.parameter, *v, &reports[i]));
        }
    }
    let main = match format {
        Format::Csv => table::write_sweep(&comments(&cfg)?, &out)?,
        Format::Json => render(&SweepOutput { version: VERSION, command: "sweep", config: cfg.clone(), rows: out }, &cfg, format)?,
    };
    Ok(Output { main, raw: None })
}

pub fn check_tightness(cfg: RunConfig, format: Format) -> Result<Output, CliError> {
    let r = run_scenario(&cfg.scenario)?;
    let saturated = |a: f64, b: f64| (a - b).abs() <= SATURATION_TOL;
    let doc = TightnessOutput {
        version: VERSION,
        command: "check-tightness",
        config: cfg,
        tight_squeezing: r.bounds.tight_squeezing,
        squeezing_bound: r.bounds.squeezing_bound,
        achieved_squeezing: r.achieved.min_eigenvalue,
        squeezing_saturated: saturated(r.achieved.min_eigenvalue, r.bounds.squeezing_bound),
        tight_entanglement: r.bounds.tight_entanglement,
        entanglement_bound: r.bounds.entanglement_bound,
        achieved_log_negativity: r.achieved.log_negativity,
        entanglement_saturated: r.achieved.log_negativity.zip(r.bounds.entanglement_bound).map(|(a, b)| saturated(a, b)),
        pure: r.achieved.pure,
    };
    Ok(Output { main: render(&doc, &doc.config, format)?, raw: None })
}

pub fn simulate(mut cfg: RunConfig, format: Format) -> Result<Output, CliError> {
    let sys = cfg.scenario.system()?;
    let (m, sol) = sys.conditional_state()?;
    let alpha1 = SpectralData::new(&sys.dd)?.alpha_up[0];
    let sim = cfg.simulate.as_mut().ok_or_else(|| CliError::Config("missing [simulate] section".into()))?;
    let tcfg = sim.trajectory_config()?;
    let burn_in = *sim.burn_in.get_or_insert((10.0 / alpha1).min(0.5 * tcfg.t_final));
    let dim = 2 * sys.dd.modes();
    let r0 = DVector::zeros(dim);
    let (ens, predicted, gain) = match sim.feedback {
        FeedbackMode::Optimal => {
            let fb = FeedbackLaw::new(feedback_gain(&sol.sigma, &m)?.gain() * sim.feedback_scale);
            let predicted = lyapunov_steady_state(closed_loop(&sys.dd, &m, &fb)?.dynamics())?;
            let ens = simulate_closed_loop_from(&sys.dd, &m, &fb, &sol.sigma, &r0, &tcfg)?;
            (ens, predicted, fb.gain().clone())
        }
        FeedbackMode::None => {
            let predicted = lyapunov_steady_state(&sys.dd)?;
            let ens = simulate_conditional(&sys.dd, &m, &predicted, &r0, &tcfg)?;
            (ens, predicted, DMatrix::zeros(dim, m.c().nrows()))
        }
    };
    let raw_path = sim.raw_out.clone();
    let st = ensemble_statistics(&ens, burn_in, tcfg.t_final)?;

    let mut worst = 0.0_f64;
    let mut within = true;
    for ((s, p), se) in st.sigma.iter().zip(predicted.matrix().iter()).zip(st.tau_se.iter()) {
        let dev = (s - p).abs();
        worst = worst.max(dev / (se + SE_FLOOR));
        within &= dev <= 3.0 * se + SE_FLOOR;
    }
    for (mu, se) in st.mean.iter().zip(st.mean_se.iter()) {
        within &= mu.abs() <= 3.0 * se + SE_FLOOR;
    }

    let raw = match raw_path {
        Some(path) => Some((path, table::write_trajectories(&comments(&cfg)?, &ens)?)),
        None => None,
    };
    let doc = SimulateOutput {
        version: VERSION,
        command: "simulate",
        samples: st.samples,
        window: [burn_in, tcfg.t_final],
        mean: st.mean.iter().copied().collect(),
        mean_se: st.mean_se.iter().copied().collect(),
        tau: rows(&st.tau),
        tau_se: rows(&st.tau_se),
        sigma_c: rows(&st.sigma_c),
        sigma: rows(&st.sigma),
        predicted_sigma: rows(predicted.matrix()),
        riccati_sigma_c: rows(sol.sigma.matrix()),
        feedback_gain: rows(&gain),
        max_deviation_in_se: worst,
        within_3se: within,
        config: cfg,
    };
    Ok(Output { main: render(&doc, &doc.config, format)?, raw })
}
