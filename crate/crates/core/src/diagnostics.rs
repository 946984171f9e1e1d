//! Residuals of the exact identities satisfied by every repulsive solution
//! and signed margins of its a-priori bounds.
//!
//! For `t >= 1`, with `C = E_kin^rel(1) + E_pot(1)`:
//!
//! * `d/dt [t^2 (E_kin^rel + E_pot)] = t E_pot`
//! * `E_kin^rel(t) + E_pot(t) = C/t - (1/t) int_1^t E_kin^rel(s) ds`
//! * `d^2 I/dt^2 = 2E - E_pot` with `I = 1/2 sum |x_i|^2`
//! * `|v_i| <= sqrt(2E(0))`, `|x_i - x_j| >= 1/sqrt(2E(0))`
//!
//! Exact dynamics make every residual vanish; what remains is integration,
//! quadrature or finite-difference error. Margins are signed, `>= 0` meaning
//! the bound holds.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{QuadratureState, Sample, Trajectory, DIAGNOSTIC_START};
use crate::model::{self, EnergyReport, ParticleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    /// Finite-difference mismatch of the derivative identity; needs both neighbours.
    pub residual_a: Option<f64>,
    pub residual_b: Option<f64>,
    /// `None` when the trajectory has no sample at `t = 1`.
    pub c_constant: Option<f64>,
    pub t_epot: f64,
    /// `E_kin^rel t^2 / ln^2 t`, reported from `t = e` on.
    pub e_rel_scaled: Option<f64>,
    pub velocity_margin: f64,
    /// `None` for a single particle.
    pub distance_margin: Option<f64>,
    pub virial_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundMonitors {
    pub velocity_margin: f64,
    pub distance_margin: Option<f64>,
    pub t_epot: f64,
    pub e_rel_scaled: Option<f64>,
}

fn require_window(t: f64) -> Result<()> {
    if t < DIAGNOSTIC_START {
        Err(Error::NotInDiagnosticWindow { t })
    } else {
        Ok(())
    }
}

fn relative_energy(report: &EnergyReport) -> Result<f64> {
    report
        .e_kin_rel
        .ok_or(Error::UndefinedAtTime { t: report.t })
}

/// `C = h(1) = E_kin^rel(1) + E_pot(1)`, from the report at `t = 1`.
pub fn c_constant(report_at_one: &EnergyReport) -> Result<f64> {
    if report_at_one.t != DIAGNOSTIC_START {
        return Err(Error::NotApplicable(format!(
            "the constant is defined at t = 1, got a report at t = {}",
            report_at_one.t
        )));
    }
    Ok(relative_energy(report_at_one)? + report_at_one.e_pot)
}

/// `E_kin^rel(t) + E_pot(t) + (1/t) int_1^t E_kin^rel - C/t`.
pub fn theorem_b_residual(report: &EnergyReport, quad: &QuadratureState, c: f64) -> Result<f64> {
    let t = report.t;
    require_window(t)?;
    Ok(relative_energy(report)? + report.e_pot + (quad.int_e_rel() - c) / t)
}

fn check_triple(samples: &[(f64, EnergyReport); 3]) -> Result<(f64, f64)> {
    let [t0, t1, t2] = [samples[0].0, samples[1].0, samples[2].0];
    if !(t0 > 0.0 && t1 > t0 && t2 > t1) {
        return Err(Error::NonMonotoneTimes);
    }
    Ok((t1 - t0, t2 - t1))
}

/// Central difference of `F = t^2 (E_kin^rel + E_pot)` at the middle sample,
/// minus `t E_pot` there. The three-point formula is second order on
/// unevenly spaced samples.
pub fn theorem_a_residual(samples: &[(f64, EnergyReport); 3]) -> Result<f64> {
    let (h0, h1) = check_triple(samples)?;
    let f = |(t, r): &(f64, EnergyReport)| -> Result<f64> {
        Ok(t * t * (relative_energy(r)? + r.e_pot))
    };
    let (f0, f1, f2) = (f(&samples[0])?, f(&samples[1])?, f(&samples[2])?);
    let derivative =
        (h0 * h0 * f2 - h1 * h1 * f0 - (h0 * h0 - h1 * h1) * f1) / (h0 * h1 * (h0 + h1));
    let (t, mid) = &samples[1];
    Ok(derivative - t * mid.e_pot)
}

/// Second difference of the inertia at the middle sample minus
/// `2 E - E_pot` there.
pub fn virial_residual(samples: &[(f64, EnergyReport); 3]) -> Result<f64> {
    let (h0, h1) = check_triple(samples)?;
    let [i0, i1, i2] = [samples[0].1.inertia, samples[1].1.inertia, samples[2].1.inertia];
    let second = 2.0 * (h0 * i2 - (h0 + h1) * i1 + h1 * i0) / (h0 * h1 * (h0 + h1));
    let mid = &samples[1].1;
    Ok(second - (2.0 * mid.e_total - mid.e_pot))
}

/// Upper bound on every speed implied by energy conservation.
pub fn velocity_bound(e0: f64) -> f64 {
    (2.0 * e0).sqrt()
}

/// Lower bound on every separation implied by energy conservation.
pub fn distance_floor(e0: f64) -> f64 {
    1.0 / (2.0 * e0).sqrt()
}

pub fn bound_monitors(state: &ParticleState, report: &EnergyReport, e0: f64) -> Result<BoundMonitors> {
    let t = report.t;
    let vmax = state
        .velocities()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let distance_margin = if state.len() >= 2 {
        Some(model::min_pairwise_distance(state)? - distance_floor(e0))
    } else {
        None
    };
    let e_rel_scaled = match report.e_kin_rel {
        Some(rel) if t >= E => Some(rel * t * t / t.ln().powi(2)),
        _ => None,
    };
    Ok(BoundMonitors {
        velocity_margin: velocity_bound(e0) - vmax,
        distance_margin,
        t_epot: t * report.e_pot,
        e_rel_scaled,
    })
}

/// `int_1^T E_kin^rel - int_1^(T/2) E_kin^rel` from the integrals at `T/2` and `T`.
pub fn integral_convergence_check(at_half: &QuadratureState, at_full: &QuadratureState) -> Result<f64> {
    let horizon = at_full.t();
    if horizon < 4.0 {
        return Err(Error::InsufficientHorizon(format!(
            "tail check needs T >= 4, got {horizon}"
        )));
    }
    if (at_half.t() - 0.5 * horizon).abs() > 1e-9 * horizon {
        return Err(Error::NotApplicable(format!(
            "expected integrals at T/2 = {}, got t = {}",
            0.5 * horizon,
            at_half.t()
        )));
    }
    Ok(at_full.int_e_rel() - at_half.int_e_rel())
}

fn triple(a: &Sample, b: &Sample, c: &Sample) -> [(f64, EnergyReport); 3] {
    [(a.t(), a.report), (b.t(), b.report), (c.t(), c.report)]
}

/// Consecutive triples of samples lying on the log-uniform grid
/// `10^(k / per_decade)`; off-grid reference samples are skipped.
pub fn grid_triples(trajectory: &Trajectory, per_decade: u32) -> Vec<[(f64, EnergyReport); 3]> {
    let on_grid: Vec<&Sample> = trajectory
        .samples
        .iter()
        .filter(|s| is_grid_time(s.t(), per_decade))
        .collect();
    on_grid
        .windows(3)
        .filter(|w| {
            let k = |s: &Sample| (s.t().log10() * per_decade as f64).round() as i64;
            k(w[1]) == k(w[0]) + 1 && k(w[2]) == k(w[1]) + 1
        })
        .map(|w| triple(w[0], w[1], w[2]))
        .collect()
}

pub fn is_grid_time(t: f64, per_decade: u32) -> bool {
    if !(t > 0.0) {
        return false;
    }
    let k = t.log10() * per_decade as f64;
    (k - k.round()).abs() < 1e-9 * k.abs().max(1.0)
}

/// Per-sample diagnostics of a trajectory whose first sample is the initial
/// state. `residual_b` needs the sample at `t = 1` and quadrature data.
pub fn evaluate(trajectory: &Trajectory) -> Result<Vec<DiagnosticRecord>> {
    let e0 = trajectory.first().report.e_total;
    let c = match trajectory.sample_at(DIAGNOSTIC_START) {
        Some(s) if s.quad.is_some() => Some(c_constant(&s.report)?),
        _ => None,
    };
    let samples = &trajectory.samples;
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let monitors = bound_monitors(&s.state, &s.report, e0)?;
            let (residual_a, virial) = if k > 0 && k + 1 < samples.len() && samples[k - 1].t() > 0.0 {
                let tri = triple(&samples[k - 1], s, &samples[k + 1]);
                (theorem_a_residual(&tri).ok(), virial_residual(&tri).ok())
            } else {
                (None, None)
            };
            let residual_b = match (c, s.quad) {
                (Some(c), Some(q)) if s.t() >= DIAGNOSTIC_START => {
                    Some(theorem_b_residual(&s.report, &q, c)?)
                }
                _ => None,
            };
            Ok(DiagnosticRecord {
                t: s.t(),
                residual_a,
                residual_b,
                c_constant: c,
                t_epot: monitors.t_epot,
                e_rel_scaled: monitors.e_rel_scaled,
                velocity_margin: monitors.velocity_margin,
                distance_margin: monitors.distance_margin,
                virial_residual: virial,
            })
        })
        .collect()
}
