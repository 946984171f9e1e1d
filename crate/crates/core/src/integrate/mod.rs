//! Time stepping of the n-body system.
//!
//! Three methods are available: classical RK4 and velocity Verlet with a
//! fixed step, and the adaptive Dormand-Prince 5(4) pair. Every driver lands
//! exactly on the requested output times and, once the run reaches `t = 1`,
//! carries the [`QuadratureState`] integrals along with the accepted steps.

mod dopri;
mod quadrature;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, EnergyReport, ParticleState};
use system::{flat_accelerations, Derivative, NBody};

pub use quadrature::{advance_quadrature, Integrands, QuadratureState, DIAGNOSTIC_START};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    #[serde(alias = "dopri5", alias = "dormand-prince")]
    DormandPrince54Adaptive,
    VelocityVerlet,
}

/// Stepper settings. Fixed-step methods use `initial_step` as their step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            method: Method::DormandPrince54Adaptive,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 1e-3,
            max_step: 10.0,
            min_step: 1e-12,
        }
    }
}

impl StepperConfig {
    pub fn fixed(method: Method, dt: f64) -> Self {
        Self {
            method,
            initial_step: dt,
            max_step: dt,
            min_step: dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("stepper: {msg}")));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step.is_finite())
        {
            return bad("steps must satisfy 0 < min_step <= initial_step <= max_step");
        }
        Ok(())
    }
}

/// One output sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: ParticleState,
    pub report: EnergyReport,
    /// Present from `t = 1` on, when the run passed through `t = 1`.
    pub quad: Option<QuadratureState>,
}

impl Sample {
    pub fn new(state: ParticleState, quad: Option<QuadratureState>) -> Result<Self> {
        let report = model::energy_report(&state)?;
        Ok(Self {
            state,
            report,
            quad,
        })
    }

    pub fn t(&self) -> f64 {
        self.state.t()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Samples at strictly increasing times, starting at the initial time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: StepStats,
}

impl Trajectory {
    /// Builds a trajectory from stored states; no quadrature data.
    pub fn from_states(states: Vec<ParticleState>) -> Result<Self> {
        if states.windows(2).any(|w| !(w[1].t() > w[0].t())) {
            return Err(Error::NonMonotoneTimes);
        }
        let samples = states
            .into_iter()
            .map(|s| Sample::new(s, None))
            .collect::<Result<_>>()?;
        Ok(Self {
            samples,
            stats: StepStats::default(),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::t).collect()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Sample whose time matches `t` to within a relative `1e-9`.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.samples.iter().find(|s| (s.t() - t).abs() <= tol)
    }

    /// Samples with `lo <= t <= hi` (inclusive up to relative `1e-9`).
    pub fn window(&self, lo: f64, hi: f64) -> Vec<&Sample> {
        let (lo, hi) = (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9));
        self.samples
            .iter()
            .filter(|s| s.t() >= lo && s.t() <= hi)
            .collect()
    }

    /// Prefix of the trajectory up to and including `t_end`.
    pub fn truncated(&self, t_end: f64) -> Trajectory {
        let cut = t_end * (1.0 + 1e-9);
        Trajectory {
            samples: self
                .samples
                .iter()
                .filter(|s| s.t() <= cut)
                .cloned()
                .collect(),
            stats: self.stats,
        }
    }
}

/// Same positions and time, negated velocities.
pub fn time_reverse(state: &ParticleState) -> ParticleState {
    ParticleState::from_parts(
        state.t(),
        state.positions().to_vec(),
        state.velocities().iter().map(|v| -v).collect(),
    )
}

/// One step of `method` with step `dt`. The adaptive pair takes a single
/// unchecked step of its fifth-order solution.
pub fn step_fixed(state: &ParticleState, dt: f64, method: Method) -> Result<ParticleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {dt}")));
    }
    let y0 = state.to_flat();
    let y1 = match method {
        Method::Rk4Fixed => rk4_step(&y0, dt)?,
        Method::VelocityVerlet => verlet_step(&y0, &flat_accelerations(&y0)?, dt)?.0,
        Method::DormandPrince54Adaptive => {
            let k1 = NBody.eval(&y0)?;
            dopri::step(&NBody, &y0, &k1, dt)?.y1
        }
    };
    let t1 = state.t() + dt;
    let next = ParticleState::from_flat(t1, &y1);
    if !next.is_finite() {
        return Err(Error::NumericalBlowup { t: t1 });
    }
    Ok(next)
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let k1 = NBody.eval(y)?;
    let k2 = NBody.eval(&axpy(y, 0.5 * h, &k1))?;
    let k3 = NBody.eval(&axpy(y, 0.5 * h, &k2))?;
    let k4 = NBody.eval(&axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Kick-drift-kick; returns the new state and its accelerations.
fn verlet_step(y: &[f64], acc: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let half = y.len() / 2;
    let mut out = y.to_vec();
    for i in 0..half {
        out[half + i] += 0.5 * h * acc[i];
        out[i] += h * out[half + i];
    }
    let acc1 = flat_accelerations(&out)?;
    for i in 0..half {
        out[half + i] += 0.5 * h * acc1[i];
    }
    Ok((out, acc1))
}

/// Landing points of a run: output times plus `t = 1` when the run crosses it.
fn checkpoints(t0: f64, t_end: f64, output_times: &[f64]) -> Result<Vec<(f64, bool)>> {
    if !(t_end > t0) {
        return Err(Error::InvalidConfig(format!(
            "t_end = {t_end} must exceed the start time {t0}"
        )));
    }
    let tol = 1e-12 * t_end.abs().max(1.0);
    let mut prev = t0;
    for &t in output_times {
        if !(t >= t0 - tol && t <= t_end + tol) || t < prev {
            return Err(Error::InvalidConfig(format!(
                "output time {t} is unsorted or outside [{t0}, {t_end}]"
            )));
        }
        prev = t;
    }
    let mut points: Vec<(f64, bool)> = output_times
        .iter()
        .filter(|&&t| t > t0 + tol)
        .map(|&t| (t, true))
        .collect();
    if t0 < DIAGNOSTIC_START && DIAGNOSTIC_START < t_end {
        points.push((DIAGNOSTIC_START, false));
    }
    points.push((t_end, true));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(points.len());
    for (t, out) in points {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() <= tol => last.1 |= out,
            _ => merged.push((t, out)),
        }
    }
    Ok(merged)
}

fn initial_quad(state: &ParticleState) -> Option<QuadratureState> {
    (state.t() == DIAGNOSTIC_START).then(QuadratureState::start)
}

/// Integrates with the configured method. The first sample is the initial
/// state; further samples land exactly on `output_times` and on `t_end`.
pub fn integrate(
    state: &ParticleState,
    t_end: f64,
    config: &StepperConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    match config.method {
        Method::DormandPrince54Adaptive => integrate_adaptive(state, t_end, config, output_times),
        Method::Rk4Fixed | Method::VelocityVerlet => {
            integrate_fixed(state, t_end, config, output_times)
        }
    }
}

/// Widest quadrature panel relative to `t`. Accepted steps wider than this
/// (slowly varying motion) are split into several Simpson panels.
const QUAD_PANEL_FRACTION: f64 = 0.05;

/// Dormand-Prince 5(4) with proportional step-size control on the mixed
/// RMS error norm. Quadrature panels inside each accepted step are
/// evaluated with the pair's continuous extension.
pub fn integrate_adaptive(
    state: &ParticleState,
    t_end: f64,
    config: &StepperConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 5.0;

    config.validate()?;
    let points = checkpoints(state.t(), t_end, output_times)?;
    let mut quad = initial_quad(state);
    let mut samples = vec![Sample::new(state.clone(), quad)?];
    let mut stats = StepStats::default();

    let mut t = state.t();
    let mut y = state.to_flat();
    let mut k1 = NBody.eval(&y)?;
    let mut h = config.initial_step;
    let mut left = match quad {
        Some(_) => Some(Integrands::of(state)?),
        None => None,
    };

    for &(target, is_output) in &points {
        while t < target {
            let proposed = h.min(config.max_step);
            // stretch by up to 1% rather than leave a sliver before the target
            let landing = t + 1.01 * proposed >= target;
            let h_try = if landing { target - t } else { proposed };
            let step = dopri::step(&NBody, &y, &k1, h_try)?;
            let err = dopri::error_norm(&step.err, &y, &step.y1, config.rel_tol, config.abs_tol);
            if !err.is_finite() || step.y1.iter().any(|c| !c.is_finite()) {
                return Err(Error::NumericalBlowup { t: t + h_try });
            }
            if err <= 1.0 {
                let t_new = if landing { target } else { t + h_try };
                if let (Some(q), Some(l)) = (quad.as_mut(), left.as_mut()) {
                    let panels = (h_try / (QUAD_PANEL_FRACTION * t)).ceil().max(1.0) as usize;
                    let at = |theta: f64, time: f64| {
                        Integrands::of(&ParticleState::from_flat(time, &step.dense(&y, h_try, theta)))
                    };
                    for j in 0..panels {
                        let (ta, tb) = (j as f64 / panels as f64, (j + 1) as f64 / panels as f64);
                        let t_right = if j + 1 == panels { t_new } else { t + tb * h_try };
                        let mid = at(0.5 * (ta + tb), 0.5 * (l.t + t_right))?;
                        let right = if j + 1 == panels {
                            Integrands::of(&ParticleState::from_flat(t_new, &step.y1))?
                        } else {
                            at(tb, t_right)?
                        };
                        *q = q.add_panel(*l, mid, right)?;
                        *l = right;
                    }
                }
                t = t_new;
                y = step.y1;
                k1 = step.k7;
                stats.accepted += 1;
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                h = if landing {
                    (h_try * fac).max(proposed)
                } else {
                    h_try * fac
                };
            } else {
                stats.rejected += 1;
                h = h_try * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                if h < config.min_step {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        if quad.is_none() && t == DIAGNOSTIC_START {
            quad = Some(QuadratureState::start());
            left = Some(Integrands::of(&ParticleState::from_flat(t, &y))?);
        }
        if is_output {
            samples.push(Sample::new(ParticleState::from_flat(t, &y), quad)?);
        }
    }
    Ok(Trajectory { samples, stats })
}

/// Fixed-step RK4 or velocity Verlet. The step before each landing point is
/// shortened to hit it exactly; quadrature midpoints use Hermite
/// interpolation from the endpoint accelerations.
pub fn integrate_fixed(
    state: &ParticleState,
    t_end: f64,
    config: &StepperConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    let dt = config.initial_step;
    let points = checkpoints(state.t(), t_end, output_times)?;
    let mut quad = initial_quad(state);
    let mut samples = vec![Sample::new(state.clone(), quad)?];
    let mut stats = StepStats::default();

    let mut t = state.t();
    let mut y = state.to_flat();
    let mut acc = flat_accelerations(&y)?;

    for &(target, is_output) in &points {
        while t < target {
            let landing = t + 1.000001 * dt >= target;
            let h = if landing { target - t } else { dt };
            let t_new = if landing { target } else { t + h };
            let (y_new, acc_new) = match config.method {
                Method::VelocityVerlet => verlet_step(&y, &acc, h)?,
                _ => {
                    let y1 = rk4_step(&y, h)?;
                    let a1 = flat_accelerations(&y1)?;
                    (y1, a1)
                }
            };
            if y_new.iter().any(|c| !c.is_finite()) {
                return Err(Error::NumericalBlowup { t: t_new });
            }
            if let Some(q) = quad.as_mut() {
                let s0 = ParticleState::from_flat(t, &y);
                let s1 = ParticleState::from_flat(t_new, &y_new);
                let mid = quadrature::hermite_midpoint(
                    &s0,
                    &system::triples(&acc),
                    &s1,
                    &system::triples(&acc_new),
                );
                *q = q.add_panel(Integrands::of(&s0)?, Integrands::of(&mid)?, Integrands::of(&s1)?)?;
            }
            t = t_new;
            y = y_new;
            acc = acc_new;
            stats.accepted += 1;
        }
        if quad.is_none() && t == DIAGNOSTIC_START {
            quad = Some(QuadratureState::start());
        }
        if is_output {
            samples.push(Sample::new(ParticleState::from_flat(t, &y), quad)?);
        }
    }
    Ok(Trajectory { samples, stats })
}

/// Log-uniform grid `t_start * 10^(k / per_decade)` up to `t_end` inclusive.
pub fn geometric_grid(t_start: f64, t_end: f64, per_decade: u32) -> Vec<f64> {
    assert!(t_start > 0.0 && per_decade > 0);
    let decades = (t_end / t_start).log10();
    let steps = (decades * per_decade as f64 + 1e-9).floor() as i64;
    (0..=steps)
        .map(|k| t_start * 10f64.powf(k as f64 / per_decade as f64))
        .collect()
}

#[cfg(test)]
mod tests;
