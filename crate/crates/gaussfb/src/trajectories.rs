//! Stochastic simulation of the conditional first moments, with or without
//! feedback, and ensemble statistics of the simulated trajectories.
//!
//! The conditional covariance is deterministic; it is integrated once with
//! RK4 and shared by every trajectory. Means are advanced with
//! Euler–Maruyama. Trajectory `i` draws its noise from a ChaCha8 stream
//! selected by `(seed, i)`, so results do not depend on thread scheduling.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::conditioning::{riccati_path, riccati_steady_state, MeasurementSetup};
use crate::dynamics::DriftDiffusion;
use crate::feedback::FeedbackLaw;
use crate::symplectic::CovarianceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    /// Also record the measured currents, integrated over each stride.
    pub record_currents: bool,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be at least dt, got {}",
                self.t_final
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Times at which samples are recorded.
    pub fn record_times(&self) -> Vec<f64> {
        (0..=self.steps())
            .step_by(self.record_stride)
            .map(|k| k as f64 * self.dt)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub times: Vec<f64>,
    /// Conditional means at each recorded time.
    pub means: Vec<DVector<f64>>,
    /// Integrated currents `∫ y dt` over the stride ending at each recorded
    /// time (zero at the first sample).
    pub currents: Option<Vec<DVector<f64>>>,
}

/// Trajectories of one run together with the shared conditional covariance.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub records: Vec<TrajectoryRecord>,
    /// Conditional covariance at each recorded time.
    pub sigma_c_path: Arc<Vec<DMatrix<f64>>>,
}

struct Plan {
    dim: usize,
    noise_dim: usize,
    /// `A + BC`.
    drift: DMatrix<f64>,
    c: DMatrix<f64>,
    /// Per-step noise gain `K(t) + B`, column-major.
    gains: Vec<DMatrix<f64>>,
    steps: usize,
    stride: usize,
    dt: f64,
    currents: bool,
}

/// Conditional trajectories without feedback:
/// `dr = A r dt + K(t) dw`, `y dt = C r dt + dw`.
pub fn simulate_conditional(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    sigma_c0: &CovarianceMatrix,
    r0: &DVector<f64>,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble> {
    let b = DMatrix::zeros(2 * dd.modes(), m.c().nrows());
    run(dd, m, &b, sigma_c0, r0, cfg)
}

/// Closed-loop trajectories started from the stationary conditional state
/// with zero mean.
pub fn simulate_closed_loop(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    fb: &FeedbackLaw,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble> {
    let sigma = riccati_steady_state(dd, m, None)?.sigma;
    let r0 = DVector::zeros(2 * dd.modes());
    simulate_closed_loop_from(dd, m, fb, &sigma, &r0, cfg)
}

/// Closed-loop trajectories `dr = (A + BC) r dt + (K(t) + B) dw`.
pub fn simulate_closed_loop_from(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    fb: &FeedbackLaw,
    sigma_c0: &CovarianceMatrix,
    r0: &DVector<f64>,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble> {
    run(dd, m, fb.gain(), sigma_c0, r0, cfg)
}

fn run(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    b: &DMatrix<f64>,
    sigma_c0: &CovarianceMatrix,
    r0: &DVector<f64>,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble> {
    cfg.validate()?;
    let dim = 2 * dd.modes();
    if r0.len() != dim || sigma_c0.modes() != dd.modes() || m.modes() != dd.modes() {
        return Err(Error::Dimension("initial state, dynamics and measurement differ in size".into()));
    }
    if b.shape() != (dim, m.c().nrows()) {
        return Err(Error::Dimension(format!(
            "feedback gain is {}x{}, expected {}x{}",
            b.nrows(),
            b.ncols(),
            dim,
            m.c().nrows()
        )));
    }
    let steps = cfg.steps();
    let path = riccati_path(dd, m, sigma_c0, cfg.dt, steps)?;
    let gains = path.iter().map(|s| m.gain(s) + b).collect();
    let sigma_c_path = Arc::new(path.into_iter().step_by(cfg.record_stride).collect());
    let plan = Plan {
        dim,
        noise_dim: m.c().nrows(),
        drift: dd.drift() + b * m.c(),
        c: m.c().clone(),
        gains,
        steps,
        stride: cfg.record_stride,
        dt: cfg.dt,
        currents: cfg.record_currents,
    };
    let records = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| simulate_one(&plan, r0, cfg.seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { records, sigma_c_path })
}

fn simulate_one(plan: &Plan, r0: &DVector<f64>, seed: u64, index: usize) -> Result<TrajectoryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let (dim, nd, dt) = (plan.dim, plan.noise_dim, plan.dt);
    let sqrt_dt = dt.sqrt();
    let mut r = r0.clone();
    let mut next = DVector::zeros(dim);
    let mut dw = DVector::zeros(nd);
    let mut y_acc = DVector::zeros(nd);
    let samples = plan.steps / plan.stride + 1;
    let mut times = Vec::with_capacity(samples);
    let mut means = Vec::with_capacity(samples);
    let mut currents = plan.currents.then(|| Vec::with_capacity(samples));
    times.push(0.0);
    means.push(r.clone());
    if let Some(c) = currents.as_mut() {
        c.push(DVector::zeros(nd));
    }
    for k in 0..plan.steps {
        for w in dw.iter_mut() {
            *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        }
        if plan.currents {
            y_acc.gemv(dt, &plan.c, &r, 1.0);
            y_acc += &dw;
        }
        next.copy_from(&r);
        next.gemv(dt, &plan.drift, &r, 1.0);
        next.gemv(1.0, &plan.gains[k], &dw, 1.0);
        std::mem::swap(&mut r, &mut next);
        if (k + 1) % plan.stride == 0 {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { trajectory: index, step: k + 1 });
            }
            times.push((k + 1) as f64 * dt);
            means.push(r.clone());
            if let Some(c) = currents.as_mut() {
                c.push(y_acc.clone());
                y_acc.fill(0.0);
            }
        }
    }
    Ok(TrajectoryRecord { index, times, means, currents })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStatistics {
    /// Number of pooled samples.
    pub samples: usize,
    pub mean: DVector<f64>,
    pub mean_se: DVector<f64>,
    /// Covariance `τ` of the conditional means.
    pub tau: DMatrix<f64>,
    pub tau_se: DMatrix<f64>,
    /// Conditional covariance averaged over the window.
    pub sigma_c: DMatrix<f64>,
    /// Unconditional covariance `σ_c + τ`.
    pub sigma: DMatrix<f64>,
}

/// Moments pooled over all trajectories and recorded times in
/// `[t_start, t_end]`. Standard errors come from batch means over groups
/// of trajectories, or over time blocks for a single trajectory.
pub fn ensemble_statistics(ens: &Ensemble, t_start: f64, t_end: f64) -> Result<EnsembleStatistics> {
    let first = ens.records.first().ok_or(Error::EmptyWindow)?;
    let eps = 1e-9 * t_end.abs().max(1.0);
    let idx: Vec<usize> = first
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= t_start - eps && **t <= t_end + eps)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let dim = first.means[0].len();

    let batches: Vec<Vec<&DVector<f64>>> = if ens.records.len() >= 2 {
        let n_batches = ens.records.len().min(20);
        let per = ens.records.len().div_ceil(n_batches);
        ens.records
            .chunks(per)
            .map(|chunk| chunk.iter().flat_map(|rec| idx.iter().map(|&i| &rec.means[i])).collect())
            .collect()
    } else {
        let n_batches = idx.len().min(10);
        let per = idx.len().div_ceil(n_batches);
        idx.chunks(per).map(|c| c.iter().map(|&i| &first.means[i]).collect()).collect()
    };
    let all: Vec<&DVector<f64>> = batches.iter().flatten().copied().collect();
    let (mean, tau) = moments(&all, dim);

    let batch_moments: Vec<_> = batches.iter().filter(|b| b.len() >= 2).map(|b| moments(b, dim)).collect();
    let nb = batch_moments.len();
    let mut mean_se = DVector::zeros(dim);
    let mut tau_se = DMatrix::zeros(dim, dim);
    if nb >= 2 {
        let nbf = nb as f64;
        let bm = batch_moments.iter().fold(DVector::zeros(dim), |acc, (m, _)| acc + m) / nbf;
        let bt = batch_moments.iter().fold(DMatrix::zeros(dim, dim), |acc, (_, t)| acc + t) / nbf;
        for (m, t) in &batch_moments {
            mean_se += (m - &bm).map(|v| v * v);
            tau_se += (t - &bt).map(|v| v * v);
        }
        let norm = 1.0 / ((nbf - 1.0) * nbf);
        mean_se = mean_se.map(|v| (v * norm).sqrt());
        tau_se = tau_se.map(|v| (v * norm).sqrt());
    }

    let sigma_c = idx
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, &i| acc + &ens.sigma_c_path[i])
        / idx.len() as f64;
    let sigma = &sigma_c + &tau;
    Ok(EnsembleStatistics { samples: all.len(), mean, mean_se, tau, tau_se, sigma_c, sigma })
}

fn moments(xs: &[&DVector<f64>], dim: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().fold(DVector::zeros(dim), |acc, x| acc + *x) / n;
    let mut cov = DMatrix::zeros(dim, dim);
    for x in xs {
        let d = *x - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    let denom = if xs.len() > 1 { n - 1.0 } else { 1.0 };
    (mean, cov / denom)
}
