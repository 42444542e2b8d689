use crate::anisotropy::Anisotropy;
use crate::curvature::{curvature_from_support, CurvatureBundle};
use crate::error::{FlowError, Result};
use crate::extents::{extents_with_bundle, ExtentReport};
use crate::flow::extinction::Extinction;
use crate::state::{Gauge, SupportState};
use serde::{Deserialize, Serialize};

/// Time-stepping controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// Courant factor `C_cfl` of the step rule.
    pub cfl: f64,
    /// Stop once `r_in` falls below this fraction of its initial value.
    pub r_stop_fraction: f64,
    /// Time between records; derived from the outer-ball extinction time when absent.
    pub record_interval: Option<f64>,
    /// Number of records aimed for when `record_interval` is derived.
    pub records: usize,
    pub max_halvings: u32,
    pub max_steps: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Controls { cfl: 0.2, r_stop_fraction: 1e-2, record_interval: None, records: 100, max_halvings: 20, max_steps: 2_000_000 }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FlowError::InvalidParameter(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.r_stop_fraction > 0.0 && self.r_stop_fraction < 1.0) {
            return bad(format!("r_stop_fraction must lie in (0, 1), got {}", self.r_stop_fraction));
        }
        if let Some(dt) = self.record_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("record_interval must be positive, got {dt}"));
            }
        }
        if self.records == 0 || self.max_steps == 0 {
            return bad("records and max_steps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ExtinctionThreshold,
    StepLimit,
    /// The step could not be completed even after the allowed halvings.
    ConvexityLoss,
}

/// Recorded states of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SupportState>,
    /// Extents of each recorded state.
    pub extents: Vec<ExtentReport>,
    pub termination: Termination,
    /// The error that ended the run when it did not reach the threshold.
    pub failure: Option<FlowError>,
    pub steps: usize,
    pub rollbacks: usize,
    pub extinction: Option<Extinction>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn r_in(&self) -> Vec<f64> {
        self.extents.iter().map(|e| e.r_in).collect()
    }
}

/// Normal speed `F = ψ(X) R^{1/2}` and the resulting time derivative of the
/// sampled function, plus the quantities entering the step rule.
#[derive(Debug, Clone)]
pub struct Velocity {
    pub speed: Vec<f64>,
    pub rate: Vec<f64>,
    pub min_radius: f64,
    pub psi_max: f64,
}

pub fn velocity(state: &SupportState, psi: &Anisotropy) -> Result<Velocity> {
    let bundle = curvature_from_support(state)?;
    velocity_with_bundle(state, &bundle, psi)
}

pub(crate) fn velocity_with_bundle(state: &SupportState, bundle: &CurvatureBundle, psi: &Anisotropy) -> Result<Velocity> {
    let grid = state.grid();
    let center = psi.frame_center(grid.dim, grid.mode)?;
    let mut speed = Vec::with_capacity(grid.len());
    let mut rate = Vec::with_capacity(grid.len());
    let mut psi_max = 0.0f64;
    for i in 0..grid.len() {
        let (value, _) = psi.value_grad3(&bundle.position[i], &center);
        psi_max = psi_max.max(value);
        let f = value * bundle.scalar[i].sqrt();
        speed.push(f);
        rate.push(match state.gauge {
            Gauge::GaussSupport => -f,
            Gauge::RadialAxisym => {
                let r = state.values()[i];
                let g = bundle.derivs.grad_t[i];
                -(f / r) * (r * r + g * g).sqrt()
            }
        });
    }
    Ok(Velocity { speed, rate, min_radius: bundle.min_radius(), psi_max })
}

/// Largest stable step for the current state.
pub fn stable_dt(state: &SupportState, v: &Velocity, cfl: f64) -> f64 {
    let n = state.dim() as f64;
    cfl * v.min_radius * v.min_radius / (v.psi_max * (n * (n - 1.0)).sqrt()) * state.grid().spacing_factor()
}

fn rk4(state: &SupportState, first: &Velocity, psi: &Anisotropy, dt: f64) -> Result<(SupportState, CurvatureBundle)> {
    let y = state.values();
    let stage = |k: &[f64], a: f64| -> Result<Velocity> {
        let values: Vec<f64> = y.iter().zip(k).map(|(y, k)| y + a * dt * k).collect();
        velocity(&state.with_values(values, state.t + a * dt)?, psi)
    };
    let k1 = &first.rate;
    let k2 = stage(k1, 0.5)?.rate;
    let k3 = stage(&k2, 0.5)?.rate;
    let k4 = stage(&k3, 1.0)?.rate;
    let next: Vec<f64> = (0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    let out = state.with_values(next, state.t + dt)?;
    // The accepted state itself must be a valid body.
    let bundle = curvature_from_support(&out)?;
    Ok((out, bundle))
}

fn step(state: &SupportState, psi: &Anisotropy, dt: f64, gauge: Gauge) -> Result<SupportState> {
    if state.gauge != gauge {
        return Err(FlowError::GaugeMismatch(format!("state is in the {:?} gauge", state.gauge)));
    }
    if !(dt > 0.0) {
        return Err(FlowError::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let v = velocity(state, psi)?;
    Ok(rk4(state, &v, psi, dt)?.0)
}

/// One classical Runge–Kutta step of `S_t = −ψ(X) R^{1/2}`.
pub fn step_gauss(state: &SupportState, psi: &Anisotropy, dt: f64) -> Result<SupportState> {
    step(state, psi, dt, Gauge::GaussSupport)
}

/// One Runge–Kutta step of `r_t = −(F/r)√(r² + |∇̄r|²)` on an axisymmetric grid.
pub fn step_radial_axisym(state: &SupportState, psi: &Anisotropy, dt: f64) -> Result<SupportState> {
    step(state, psi, dt, Gauge::RadialAxisym)
}

fn recoverable(e: &FlowError) -> bool {
    matches!(e, FlowError::ConvexityLoss { .. } | FlowError::StarShapeLoss { .. } | FlowError::GaugeResolution { .. } | FlowError::NonFinite { .. })
}

/// Smallest width `min_z S(z) + S(−z)` over the grid nodes; `r_in ≤ w_min/2`.
fn node_min_width(state: &SupportState) -> Option<f64> {
    if state.gauge != Gauge::GaussSupport {
        return None;
    }
    let grid = state.grid();
    let s = state.values();
    Some((0..grid.len()).map(|i| s[i] + s[grid.antipode(i)]).fold(f64::INFINITY, f64::min))
}

/// Integrates the flow until `r_in` drops below the stop threshold.
///
/// Errors are returned only for invalid input; failures during the run end
/// it early with the reason recorded in [`Trajectory::termination`].
pub fn run(initial: &SupportState, psi: &Anisotropy, controls: &Controls) -> Result<Trajectory> {
    controls.validate()?;
    psi.validate()?;
    let grid = initial.grid().clone();
    psi.frame_center(grid.dim, grid.mode)?;
    let n = grid.dim as f64;

    let bundle = curvature_from_support(initial)?;
    let ext0 = extents_with_bundle(initial, &bundle)?;
    let r_stop = controls.r_stop_fraction * ext0.r_in;
    let interval = match controls.record_interval {
        Some(dt) => dt,
        None => {
            let x0 = psi.frame_center(grid.dim, grid.mode)?;
            let d = ext0.outer_center.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let inf_psi = psi.jet_bounds_radial((d - ext0.r_out).max(0.0), d + ext0.r_out).inf_psi;
            ext0.r_out * ext0.r_out / (2.0 * (n * (n - 1.0)).sqrt() * inf_psi) / controls.records as f64
        }
    };

    let mut traj = Trajectory {
        states: vec![initial.clone()],
        extents: vec![ext0],
        termination: Termination::StepLimit,
        failure: None,
        steps: 0,
        rollbacks: 0,
        extinction: None,
    };
    let mut state = initial.clone();
    let mut next_record = 1usize;
    let mut v = velocity_with_bundle(&state, &bundle, psi)?;

    loop {
        if traj.steps >= controls.max_steps {
            traj.termination = Termination::StepLimit;
            traj.failure = Some(FlowError::StepLimit { steps: controls.max_steps, t: state.t });
            break;
        }
        let target = next_record as f64 * interval;
        let mut dt = stable_dt(&state, &v, controls.cfl);
        let mut lands = false;
        if state.t + dt >= target * (1.0 - 1e-12) {
            dt = target - state.t;
            lands = true;
        }
        let mut attempt = 0;
        let next = loop {
            match rk4(&state, &v, psi, dt) {
                Ok(s) => break Ok(s),
                Err(e) if recoverable(&e) && attempt < controls.max_halvings => {
                    attempt += 1;
                    traj.rollbacks += 1;
                    dt *= 0.5;
                    lands = false;
                }
                Err(e) => break Err(e),
            }
        };
        let (mut next, bundle) = match next {
            Ok(s) => s,
            Err(e) => {
                traj.termination = Termination::ConvexityLoss;
                traj.failure = Some(e);
                break;
            }
        };
        if lands {
            // Land exactly on the record time.
            next.t = target;
        }
        traj.steps += 1;
        state = next;
        let below = match node_min_width(&state) {
            Some(w) if 0.5 * w >= r_stop => None,
            _ => {
                let ext = extents_with_bundle(&state, &bundle)?;
                (ext.r_in < r_stop).then_some(ext)
            }
        };
        if let Some(ext) = below {
            traj.states.push(state);
            traj.extents.push(ext);
            traj.termination = Termination::ExtinctionThreshold;
            break;
        }
        if lands {
            traj.extents.push(extents_with_bundle(&state, &bundle)?);
            traj.states.push(state.clone());
            next_record += 1;
        }
        v = velocity_with_bundle(&state, &bundle, psi)?;
    }
    Ok(traj)
}
