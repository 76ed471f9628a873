//! Canonical set-ups (free single mode, free two modes with equal or unequal
//! baths, parametrically coupled modes) and the reports built from them.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::bounds::{self, SpectralData};
use crate::conditioning::{
    apply_efficiency, measurement_matrices, standard_unravelling, riccati_steady_state, LossPort, MeasurementSetup,
    RiccatiSolution, UnravellingKind, UnravellingMatrix,
};
use crate::dynamics::{
    lyapunov_steady_state, thermal_drift_diffusion, CouplingOperators, DriftDiffusion, HamiltonianMatrix,
    ThermalBathSpec,
};
use crate::feedback::{closed_loop, feedback_gain};
use crate::linalg::{self, max_abs};
use crate::symplectic::{log_negativity, log_pt_gap, symplectic_eigenvalues, Bipartition};
use crate::{Error, Result, VERSION};

/// Upper end of the coupling bracket searched by [`coupling_zero_crossing`].
pub const COUPLING_BRACKET_MAX: f64 = 0.499;

/// Symplectic eigenvalues within this distance of 1 count as pure.
pub const PURITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FreeSingle,
    FreeTwoMode,
    FreeUnequalBaths,
    Parametric,
}

impl ScenarioKind {
    pub fn modes(self) -> usize {
        match self {
            ScenarioKind::FreeSingle => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The unravelling that saturates the bound for this kind.
    Optimal,
    /// Homodyne detection (local for one mode, nonlocal for two).
    Homodyne,
    /// No monitoring.
    None,
}

/// Noise model for the port through which undetected signal is lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossPortModel {
    /// Port variance equal to the largest variance of the unmonitored
    /// steady state (`1 + 2N` for a free mode).
    #[default]
    Unconditional,
    /// Vacuum port; the unravelling scales as `η·U`.
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Thermal occupations, one per mode; a single number is shared by all
    /// modes.
    #[serde(deserialize_with = "one_or_many")]
    pub occupations: Vec<f64>,
    /// Parametric coupling (ignored unless `kind = parametric`).
    #[serde(default)]
    pub chi: f64,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Local-oscillator phase of the single-mode unravellings.
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub loss_port: LossPortModel,
}

fn one() -> f64 {
    1.0
}

fn default_strategy() -> Strategy {
    Strategy::Optimal
}

fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl ScenarioSpec {
    fn base(kind: ScenarioKind, occupations: Vec<f64>) -> Self {
        Self {
            kind,
            occupations,
            chi: 0.0,
            efficiency: 1.0,
            strategy: Strategy::Optimal,
            phi: 0.0,
            loss_port: LossPortModel::Unconditional,
        }
    }

    pub fn free_single(n: f64) -> Self {
        Self::base(ScenarioKind::FreeSingle, vec![n])
    }

    pub fn free_two_mode(n: f64) -> Self {
        Self::base(ScenarioKind::FreeTwoMode, vec![n, n])
    }

    pub fn free_unequal_baths(n1: f64, n2: f64) -> Self {
        Self::base(ScenarioKind::FreeUnequalBaths, vec![n1, n2])
    }

    pub fn parametric(chi: f64, n: f64) -> Self {
        Self { chi, ..Self::base(ScenarioKind::Parametric, vec![n, n]) }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.efficiency = eta;
        self
    }

    pub fn with_loss_port(mut self, port: LossPortModel) -> Self {
        self.loss_port = port;
        self
    }

    /// Checks ranges and expands a shared occupation to every mode.
    /// Stability of the parametric coupling is left to the numerical stage.
    pub fn resolve(&self) -> Result<Self> {
        let mut out = self.clone();
        let modes = self.kind.modes();
        if out.occupations.len() == 1 && modes == 2 && self.kind != ScenarioKind::FreeUnequalBaths {
            out.occupations = vec![out.occupations[0]; 2];
        }
        if out.occupations.len() != modes {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs {modes} occupation(s), got {}",
                self.kind,
                out.occupations.len()
            )));
        }
        if let Some(bad) = out.occupations.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
            return Err(Error::InvalidParameter(format!("occupation must be non-negative, got {bad}")));
        }
        if matches!(self.kind, ScenarioKind::FreeTwoMode | ScenarioKind::Parametric)
            && out.occupations[0] != out.occupations[1]
        {
            return Err(Error::InvalidParameter(format!(
                "{:?} uses equal baths; use free_unequal_baths for different occupations",
                self.kind
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter(format!("efficiency must lie in [0, 1], got {}", self.efficiency)));
        }
        if !self.chi.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidParameter("chi and phi must be finite".into()));
        }
        if self.kind != ScenarioKind::Parametric {
            out.chi = 0.0;
        }
        Ok(out)
    }

    pub fn system(&self) -> Result<System> {
        let spec = self.resolve()?;
        let bath = ThermalBathSpec::new(spec.occupations.clone())?;
        let h = match spec.kind {
            ScenarioKind::Parametric => HamiltonianMatrix::parametric(spec.chi),
            kind => HamiltonianMatrix::zero(kind.modes()),
        };
        let (dd, c_ops) = thermal_drift_diffusion(&h, &bath)?;
        Ok(System { spec, bath, dd, c_ops })
    }
}

/// A resolved scenario with its dynamics.
#[derive(Debug, Clone)]
pub struct System {
    pub spec: ScenarioSpec,
    pub bath: ThermalBathSpec,
    pub dd: DriftDiffusion,
    pub c_ops: CouplingOperators,
}

impl System {
    pub fn is_entangling(&self) -> bool {
        self.spec.kind.modes() == 2
    }

    pub fn unravelling(&self) -> Result<UnravellingMatrix> {
        let kind = match (self.spec.strategy, self.spec.kind) {
            (Strategy::None, _) => return Ok(UnravellingMatrix::unmonitored(self.c_ops.channels())),
            (Strategy::Optimal, ScenarioKind::FreeSingle) => UnravellingKind::OptimalSqueeze { phi: self.spec.phi },
            (Strategy::Optimal, ScenarioKind::FreeUnequalBaths) => UnravellingKind::OptimalEntangleUnequal,
            (Strategy::Optimal, _) => UnravellingKind::OptimalEntangle,
            (Strategy::Homodyne, ScenarioKind::FreeSingle) => UnravellingKind::HomodyneSingle { phi: self.spec.phi },
            (Strategy::Homodyne, _) => UnravellingKind::HomodyneNonlocal,
        };
        let u = standard_unravelling(kind, &self.bath)?;
        let port = match self.spec.loss_port {
            LossPortModel::Vacuum => LossPort::Vacuum,
            LossPortModel::Unconditional => LossPort::unconditional(&self.dd)?,
        };
        apply_efficiency(&u, self.spec.efficiency, port)
    }

    pub fn measurement(&self) -> Result<MeasurementSetup> {
        measurement_matrices(&self.c_ops, &self.unravelling()?)
    }

    pub fn conditional_state(&self) -> Result<(MeasurementSetup, RiccatiSolution)> {
        let m = self.measurement()?;
        let sol = riccati_steady_state(&self.dd, &m, None)?;
        Ok((m, sol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub squeezing_bound: f64,
    pub entanglement_bound: Option<f64>,
    pub eig_product_bound: f64,
    pub pt_nu_lower_bound: Option<f64>,
    pub tight_squeezing: bool,
    pub tight_entanglement: Option<bool>,
    pub alpha_up: Vec<f64>,
    pub delta_down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievedReport {
    pub sigma_c: Vec<Vec<f64>>,
    /// Smallest eigenvalue of the conditional covariance.
    pub min_eigenvalue: f64,
    pub log_negativity: Option<f64>,
    pub pt_min_symplectic_eigenvalue: Option<f64>,
    pub symplectic_eigenvalues: Vec<f64>,
    pub pure: bool,
    pub riccati_residual: f64,
    pub non_unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedLoopReport {
    pub feedback_gain: Vec<Vec<f64>>,
    /// `‖Lyapunov(A', D') - σ_c‖_max` under the optimal gain.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Efficiency below which the strategy no longer entangles.
    pub efficiency: Option<f64>,
    /// Coupling above which nonlocal homodyne detection entangles.
    pub coupling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub spec: ScenarioSpec,
    pub bounds: BoundsReport,
    pub achieved: AchievedReport,
    pub closed_loop: ClosedLoopReport,
    pub thresholds: ThresholdReport,
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn bounds_report(sys: &System) -> Result<BoundsReport> {
    let dd = &sys.dd;
    let spectral = SpectralData::new(dd)?;
    let two = sys.is_entangling();
    Ok(BoundsReport {
        squeezing_bound: bounds::squeezing_bound(dd)?,
        entanglement_bound: two.then(|| bounds::entanglement_bound(dd)).transpose()?,
        eig_product_bound: bounds::eig_product_bound(dd)?,
        pt_nu_lower_bound: two.then(|| bounds::pt_nu_lower_bound(dd)).transpose()?,
        tight_squeezing: bounds::tightness_squeezing(dd)?,
        tight_entanglement: two
            .then(|| bounds::tightness_entanglement(dd, &Bipartition::two_mode()))
            .transpose()?,
        alpha_up: spectral.alpha_up,
        delta_down: spectral.delta_down,
    })
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<Report> {
    let sys = spec.system()?;
    let bounds = bounds_report(&sys)?;
    let (m, sol) = sys.conditional_state()?;
    let sigma = &sol.sigma;
    let nu = symplectic_eigenvalues(sigma)?;
    let pt = sys
        .is_entangling()
        .then(|| crate::symplectic::pt_min_symplectic_eigenvalue(sigma, &Bipartition::two_mode()))
        .transpose()?;
    let achieved = AchievedReport {
        sigma_c: rows(sigma.matrix()),
        min_eigenvalue: linalg::min_eigenvalue(sigma.matrix()),
        log_negativity: sys
            .is_entangling()
            .then(|| log_negativity(sigma, &Bipartition::two_mode()))
            .transpose()?,
        pt_min_symplectic_eigenvalue: pt,
        pure: nu.iter().all(|v| (v - 1.0).abs() <= PURITY_TOL),
        symplectic_eigenvalues: nu,
        riccati_residual: sol.residual,
        non_unique: sol.non_unique,
    };

    let fb = feedback_gain(sigma, &m)?;
    let cl = closed_loop(&sys.dd, &m, &fb)?;
    let sigma_cl = lyapunov_steady_state(cl.dynamics())?;
    let closed = ClosedLoopReport {
        feedback_gain: rows(fb.gain()),
        residual: max_abs(&(sigma_cl.matrix() - sigma.matrix())),
    };

    let efficiency = if sys.is_entangling() && sys.spec.strategy != Strategy::None {
        match threshold_efficiency(&sys.spec) {
            Ok(v) => Some(v),
            Err(Error::NoSignChange { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let coupling = (sys.spec.kind == ScenarioKind::Parametric)
        .then(|| threshold_coupling_value(sys.spec.occupations[0]));

    Ok(Report {
        version: VERSION.to_string(),
        spec: sys.spec.clone(),
        bounds,
        achieved,
        closed_loop: closed,
        thresholds: ThresholdReport { efficiency, coupling },
    })
}

/// `-log2 ν̃₋` of the conditional steady state; positive iff entangled.
pub fn entanglement_gap(spec: &ScenarioSpec) -> Result<f64> {
    let sys = spec.system()?;
    if !sys.is_entangling() {
        return Err(Error::InvalidParameter("entanglement needs a two-mode scenario".into()));
    }
    let (_, sol) = sys.conditional_state()?;
    log_pt_gap(&sol.sigma, &Bipartition::two_mode())
}

/// Entanglement gaps this close to zero count as the crossing itself.
const GAP_TOL: f64 = 1e-10;

fn bisect(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if fa.abs() <= GAP_TOL {
        return Ok(a);
    }
    if fb.abs() <= GAP_TOL {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Efficiency in `[lo, 1]` at which the conditional steady state of
/// `spec`'s strategy stops being entangled, located by bisection.
pub fn efficiency_zero_crossing(spec: &ScenarioSpec, lo: f64, tol: f64) -> Result<f64> {
    bisect(|eta| entanglement_gap(&spec.clone().with_efficiency(eta)), lo, 1.0, tol)
}

/// Efficiency threshold for entanglement. The free system with equal baths
/// and the optimal strategy has the closed form `(1 + 2N) / (2(1 + N))`;
/// other cases are solved numerically to `1e-4` on `[1/2, 1]`.
pub fn threshold_efficiency(spec: &ScenarioSpec) -> Result<f64> {
    let spec = spec.resolve()?;
    if spec.kind.modes() != 2 {
        return Err(Error::InvalidParameter("efficiency threshold needs an entangling scenario".into()));
    }
    if spec.kind == ScenarioKind::FreeTwoMode
        && spec.strategy == Strategy::Optimal
        && spec.loss_port == LossPortModel::Unconditional
    {
        let n = spec.occupations[0];
        return Ok((1.0 + 2.0 * n) / (2.0 * (1.0 + n)));
    }
    efficiency_zero_crossing(&spec, 0.5, 1e-4)
}

/// Coupling at which nonlocal homodyne detection starts to entangle the
/// parametric system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingThreshold {
    pub chi_t: f64,
    /// `-log2 ν̃₋` of the homodyne steady state at `chi_t`; zero up to
    /// solver accuracy.
    pub homodyne_gap_at_threshold: f64,
}

fn threshold_coupling_value(n: f64) -> f64 {
    n / (1.0 + 2.0 * n)
}

/// `χ_t = N / (1 + 2N)` with a numerical cross-check.
pub fn threshold_coupling(n: f64) -> Result<CouplingThreshold> {
    let chi_t = threshold_coupling_value(n);
    let spec = ScenarioSpec::parametric(chi_t, n).with_strategy(Strategy::Homodyne);
    Ok(CouplingThreshold { chi_t, homodyne_gap_at_threshold: entanglement_gap(&spec)? })
}

/// Coupling where `spec`'s strategy starts to entangle, located by
/// bisection on `[0, 0.499]`. Closer to the instability at `χ = 1/2` the
/// steady-state entries grow like `1/(1 - 2χ)` and the Riccati residual
/// can no longer meet its absolute tolerance in double precision.
pub fn coupling_zero_crossing(spec: &ScenarioSpec, tol: f64) -> Result<f64> {
    let mut s = spec.clone();
    bisect(
        |chi| {
            s.chi = chi;
            entanglement_gap(&s)
        },
        0.0,
        COUPLING_BRACKET_MAX,
        tol,
    )
}

/// Scenario parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// All occupations at once.
    Occupation,
    Occupation1,
    Occupation2,
    Chi,
    Efficiency,
    Phi,
}

impl SweepParameter {
    pub fn apply(self, spec: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut s = spec.resolve()?;
        match self {
            SweepParameter::Occupation => s.occupations.iter_mut().for_each(|n| *n = value),
            SweepParameter::Occupation1 => s.occupations[0] = value,
            SweepParameter::Occupation2 => {
                if s.occupations.len() < 2 {
                    return Err(Error::InvalidParameter("occupation2 needs a two-mode scenario".into()));
                }
                s.occupations[1] = value;
            }
            SweepParameter::Chi => s.chi = value,
            SweepParameter::Efficiency => s.efficiency = value,
            SweepParameter::Phi => s.phi = value,
        }
        s.resolve()
    }
}

/// Runs `template` at every grid value, in grid order.
pub fn sweep(template: &ScenarioSpec, parameter: SweepParameter, grid: &[f64]) -> Result<Vec<Report>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("sweep grid contains {bad}")));
    }
    let specs = grid.iter().map(|&v| parameter.apply(template, v)).collect::<Result<Vec<_>>>()?;
    specs.par_iter().map(run_scenario).collect()
}
