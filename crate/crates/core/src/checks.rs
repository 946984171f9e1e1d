//! Pass/fail checks over a finished run.
//!
//! Every check reports the measured quantity (already normalised, e.g. a
//! relative error), the limit it is held to, a signed margin (`>= 0` passes)
//! and a verdict. Checks that do not apply to the run (a single particle, a
//! horizon too short for a tail comparison, ...) are reported as such and
//! never fail.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, DEFAULT_TAIL_FRACTION};
use crate::diagnostics::{self, DiagnosticRecord};
use crate::error::Result;
use crate::integrate::{self, Sample, StepperConfig, Trajectory};
use crate::model::{self, ParticleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: Option<f64>,
    /// Human-readable limit, e.g. `<= 1e-7`.
    pub limit: String,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn short(x: f64) -> String {
    let s = format!("{x}");
    if s.len() <= 8 {
        s
    } else {
        format!("{x:.6e}").replace(".000000", "")
    }
}

impl CheckOutcome {
    fn judged(name: &str, measured: f64, limit: String, margin: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            limit,
            margin: Some(margin),
            verdict: if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail },
            note: None,
        }
    }

    /// Passes when `measured <= limit`.
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self::judged(name, measured, format!("<= {}", short(limit)), limit - measured)
    }

    /// Passes when `measured >= limit`.
    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self::judged(name, measured, format!(">= {}", short(limit)), measured - limit)
    }

    /// Passes when `measured < limit`.
    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        let mut c = Self::judged(name, measured, format!("< {}", short(limit)), limit - measured);
        if measured >= limit {
            c.verdict = Verdict::Fail;
        }
        c
    }

    /// Passes when every value lies in `[lo, hi]`; reports the worst one.
    pub fn within(name: &str, values: &[f64], lo: f64, hi: f64) -> Self {
        let worst = values
            .iter()
            .copied()
            .min_by(|a, b| {
                let m = |x: f64| (x - lo).min(hi - x);
                m(*a).total_cmp(&m(*b))
            })
            .unwrap_or(f64::NAN);
        let margin = (worst - lo).min(hi - worst);
        Self::judged(name, worst, format!("in [{lo}, {hi}]"), if margin.is_nan() { -1.0 } else { margin })
    }

    pub fn not_applicable(name: &str, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured: None,
            limit: String::new(),
            margin: None,
            verdict: Verdict::NotApplicable,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Limits applied by the check battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative energy error.
    pub energy: f64,
    /// Momentum and angular momentum drift relative to their natural scale.
    pub momenta: f64,
    /// Relative slack on the velocity bound and the distance floor.
    pub bound_slack: f64,
    /// Integral identity residual in units of `C/t`.
    pub theorem_b: f64,
    /// Finite-difference derivative residual in units of `t E_pot`.
    pub theorem_a: f64,
    /// Second-difference virial residual in units of `E(0)`.
    pub virial: f64,
    /// Finite-difference checks start here (the early transient is excluded).
    pub fd_window_start: f64,
    /// Relative slack on `t E_pot <= C`.
    pub corollary_a_slack: f64,
    /// Bound on `e_rel_scaled` over the last decade relative to its start.
    pub erel_scaled_growth: f64,
    /// Expected ratio of the `v*` error estimates at `T` and `T/2`.
    pub vstar_rate: f64,
    pub vstar_rate_tolerance: f64,
    /// Required ratio of the `v*` separation to the largest error estimate.
    pub vstar_distinctness: f64,
    /// Required growth of the minimum distance over the last decade.
    pub distance_growth: f64,
    /// Accepted convergence ratios when sample spacing halves.
    pub order_ratio_min: f64,
    pub order_ratio_max: f64,
    pub scaling: f64,
    pub reversal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy: 1e-7,
            momenta: 1e-9,
            bound_slack: 1e-9,
            theorem_b: 1e-5,
            theorem_a: 1e-3,
            virial: 1e-3,
            fd_window_start: 10.0,
            corollary_a_slack: 1e-9,
            erel_scaled_growth: 4.0,
            vstar_rate: 0.5,
            vstar_rate_tolerance: 0.2,
            vstar_distinctness: 10.0,
            distance_growth: 10.0,
            order_ratio_min: 3.5,
            order_ratio_max: 4.5,
            scaling: 1e-6,
            reversal: 1e-6,
        }
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

/// Natural magnitudes of the total momentum and angular momentum: `n` times
/// the speed bound, and the largest `sum_i |x_i| |v_i|` along the run.
fn momentum_scales(trajectory: &Trajectory) -> (f64, f64) {
    let first = &trajectory.first().state;
    let e0 = trajectory.first().report.e_total;
    let p = first.len() as f64 * diagnostics::velocity_bound(e0);
    let l = trajectory
        .samples
        .iter()
        .map(|s| {
            s.state
                .positions()
                .iter()
                .zip(s.state.velocities())
                .map(|(x, v)| x.norm() * v.norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    (p, l)
}

pub fn conservation_checks(trajectory: &Trajectory, tol: &Tolerances) -> Vec<CheckOutcome> {
    let first = trajectory.first();
    let e0 = first.report.e_total;
    let mut out = Vec::new();
    let energy = max_of(
        trajectory
            .samples
            .iter()
            .map(|s| (s.report.e_total - e0).abs() / e0.abs()),
    )
    .unwrap_or(0.0);
    out.push(if e0 > 0.0 {
        CheckOutcome::at_most("energy-conservation", energy, tol.energy)
    } else {
        CheckOutcome::not_applicable("energy-conservation", "E(0) = 0")
    });

    let (p_scale, l_scale) = momentum_scales(trajectory);
    let p0 = first.state.total_momentum();
    let l0 = first.state.angular_momentum();
    let dp = max_of(trajectory.samples.iter().map(|s| (s.state.total_momentum() - p0).norm()));
    let dl = max_of(trajectory.samples.iter().map(|s| (s.state.angular_momentum() - l0).norm()));
    for (name, drift, scale) in [("momentum", dp, p_scale), ("angular-momentum", dl, l_scale)] {
        out.push(if scale > 0.0 {
            CheckOutcome::at_most(name, drift.unwrap_or(0.0) / scale, tol.momenta)
        } else {
            CheckOutcome::not_applicable(name, "no motion")
        });
    }
    out
}

fn bound_checks(trajectory: &Trajectory, records: &[DiagnosticRecord], tol: &Tolerances) -> Vec<CheckOutcome> {
    let e0 = trajectory.first().report.e_total;
    let vb = diagnostics::velocity_bound(e0);
    let v = max_of(records.iter().map(|r| -r.velocity_margin / vb)).unwrap_or(f64::NEG_INFINITY);
    let mut out = vec![CheckOutcome::at_least("velocity-bound", -v, -tol.bound_slack)];
    let floor = diagnostics::distance_floor(e0);
    out.push(match max_of(records.iter().filter_map(|r| r.distance_margin).map(|m| -m / floor)) {
        Some(d) => CheckOutcome::at_least("distance-floor", -d, -tol.bound_slack),
        None => CheckOutcome::not_applicable("distance-floor", "single particle"),
    });
    out
}

fn identity_checks(
    trajectory: &Trajectory,
    records: &[DiagnosticRecord],
    per_decade: Option<u32>,
    tol: &Tolerances,
) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let c = records.iter().find_map(|r| r.c_constant);
    match c {
        Some(c) if c > 0.0 => {
            let b = max_of(
                records
                    .iter()
                    .filter_map(|r| r.residual_b.map(|res| res.abs() / (c / r.t))),
            )
            .unwrap_or(0.0);
            out.push(CheckOutcome::at_most("theorem-b", b, tol.theorem_b));
            let ratio = max_of(records.iter().filter(|r| r.t >= 1.0).map(|r| r.t_epot / c)).unwrap_or(0.0);
            out.push(CheckOutcome::at_most("corollary-a", ratio - 1.0, tol.corollary_a_slack));
        }
        _ => {
            out.push(CheckOutcome::not_applicable("theorem-b", "run does not reach t = 1 with C > 0"));
            out.push(CheckOutcome::not_applicable("corollary-a", "run does not reach t = 1 with C > 0"));
        }
    }

    let triples = per_decade
        .map(|p| diagnostics::grid_triples(trajectory, p))
        .unwrap_or_default();
    let in_window: Vec<_> = triples
        .iter()
        .filter(|tri| tri[1].0 >= tol.fd_window_start * (1.0 - 1e-12))
        .collect();
    let note = format!("grid triples with t >= {}", tol.fd_window_start);
    if in_window.is_empty() {
        out.push(CheckOutcome::not_applicable("theorem-a", "no geometric grid triples in window"));
        out.push(CheckOutcome::not_applicable("virial", "no geometric grid triples in window"));
        return out;
    }
    let n = trajectory.first().state.len();
    if n >= 2 {
        let a = max_of(in_window.iter().map(|tri| {
            let (t, r) = tri[1];
            diagnostics::theorem_a_residual(tri).map_or(f64::INFINITY, |res| res.abs() / (t * r.e_pot))
        }))
        .unwrap_or(0.0);
        out.push(CheckOutcome::at_most("theorem-a", a, tol.theorem_a).with_note(note.clone()));
    } else {
        out.push(CheckOutcome::not_applicable("theorem-a", "E_pot = 0 for a single particle"));
    }
    let e0 = trajectory.first().report.e_total;
    let v = max_of(
        in_window
            .iter()
            .map(|tri| diagnostics::virial_residual(tri).map_or(f64::INFINITY, |res| res.abs() / e0)),
    )
    .unwrap_or(0.0);
    out.push(CheckOutcome::at_most("virial", v, tol.virial).with_note(note));
    out
}

fn decay_checks(trajectory: &Trajectory, records: &[DiagnosticRecord], tol: &Tolerances) -> Vec<CheckOutcome> {
    let horizon = trajectory.last().t();
    let mut out = Vec::new();
    let start = records.iter().find(|r| (r.t - horizon / 10.0).abs() <= 1e-9 * horizon);
    match start.and_then(|r| r.e_rel_scaled) {
        Some(base) if base > 0.0 => {
            let worst = max_of(
                records
                    .iter()
                    .filter(|r| r.t >= horizon / 10.0 * (1.0 - 1e-12))
                    .filter_map(|r| r.e_rel_scaled),
            )
            .unwrap_or(0.0);
            out.push(
                CheckOutcome::at_most("erel-scaled-bounded", worst / base, tol.erel_scaled_growth)
                    .with_note("max over the last decade relative to its start"),
            );
        }
        _ => out.push(CheckOutcome::not_applicable(
            "erel-scaled-bounded",
            "needs E_kin^rel > 0 at T/10 >= e",
        )),
    }

    let int_at = |t: f64| trajectory.sample_at(t).and_then(|s| s.quad).map(|q| q.int_e_rel());
    let tail = match (int_at(horizon / 20.0), int_at(horizon / 10.0), int_at(horizon / 2.0)) {
        (Some(a), Some(b), Some(c)) if b > a => {
            let late = trajectory.last().quad.map(|q| q.int_e_rel()).unwrap_or(0.0) - c;
            Some(late / (b - a))
        }
        _ => None,
    };
    out.push(match tail {
        Some(r) => CheckOutcome::below("tail-integral", r, 1.0)
            .with_note("[T/2, T] increment over [T/20, T/10] increment"),
        None => CheckOutcome::not_applicable("tail-integral", "needs quadrature at T/20 >= 1 and a positive early increment"),
    });
    out
}

fn asymptotic_checks(trajectory: &Trajectory, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let horizon = trajectory.last().t();
    let n = trajectory.first().state.len();
    let full = asymptotics::extract_vstar(trajectory, DEFAULT_TAIL_FRACTION).ok();
    let half_traj = trajectory.truncated(horizon / 2.0);
    let half = if (half_traj.last().t() - horizon / 2.0).abs() <= 1e-9 * horizon {
        asymptotics::extract_vstar(&half_traj, DEFAULT_TAIL_FRACTION).ok()
    } else {
        None
    };

    match (&full, &half) {
        (Some(f), Some(h)) => {
            let ratios: Vec<f64> = f
                .error
                .iter()
                .zip(&h.error)
                .filter(|(_, b)| **b > 0.0)
                .map(|(a, b)| a / b)
                .collect();
            out.push(if ratios.is_empty() {
                CheckOutcome::not_applicable("vstar-rate", "velocities already constant")
            } else {
                CheckOutcome::within(
                    "vstar-rate",
                    &ratios,
                    tol.vstar_rate - tol.vstar_rate_tolerance,
                    tol.vstar_rate + tol.vstar_rate_tolerance,
                )
                .with_note("error estimate at T over the one at T/2, per particle")
            });
        }
        _ => out.push(CheckOutcome::not_applicable("vstar-rate", "needs samples at T/4 and T/2 and a decade")),
    }

    match (&full, n >= 2) {
        (Some(f), true) => {
            let sep = asymptotics::min_vstar_separation(&f.v_star).unwrap_or(0.0);
            let err = f.error.iter().copied().fold(0.0, f64::max);
            out.push(if err > 0.0 {
                CheckOutcome::at_least("vstar-distinct", sep / err, tol.vstar_distinctness)
            } else {
                CheckOutcome::at_least("vstar-distinct", sep, 0.0)
                    .with_note("velocities constant; separation itself reported")
            });
            // chord slope over [T/2, T] converges to the same limit
            if let Some(mid) = trajectory.sample_at(f.t_ref) {
                let last = trajectory.last();
                let worst = (0..n)
                    .map(|i| {
                        let chord = (last.state.positions()[i] - mid.state.positions()[i]) / (last.t() - mid.t());
                        let d = (f.v_star[i] - chord).norm();
                        if f.error[i] > 0.0 {
                            d / f.error[i]
                        } else if d == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(0.0, f64::max);
                out.push(CheckOutcome::at_most("vstar-chord", worst, 10.0));
            }
        }
        (_, false) => out.push(CheckOutcome::not_applicable("vstar-distinct", "single particle")),
        (None, true) => out.push(CheckOutcome::not_applicable("vstar-distinct", "horizon shorter than a decade")),
    }

    let window = (horizon / 10.0, horizon);
    if n >= 2 && horizon / 10.0 > 0.0 {
        match asymptotics::fit_growth_constants(trajectory, window) {
            Ok((c1, c2)) => {
                let mut positive = CheckOutcome::judged("growth-c1", c1, "> 0".into(), c1);
                if c1 <= 0.0 {
                    positive.verdict = Verdict::Fail;
                }
                out.push(positive);
                let e0 = trajectory.first().report.e_total;
                out.push(
                    CheckOutcome::at_most("growth-c2", c2, 2.0 * diagnostics::velocity_bound(e0))
                        .with_note("triangle inequality on the speed bound"),
                );
                let d = |s: &Sample| model::min_pairwise_distance(&s.state);
                if let Some(early) = trajectory.sample_at(horizon / 10.0) {
                    let ratio = d(trajectory.last())? / d(early)?;
                    out.push(CheckOutcome::at_least("distance-growth", ratio, tol.distance_growth));
                }
                if let Some(f) = &full {
                    let sep = asymptotics::min_vstar_separation(&f.v_star).unwrap_or(0.0);
                    let r = d(trajectory.last())? / horizon;
                    let margin = (r - 0.5 * sep).min(2.0 * c2 - r);
                    out.push(CheckOutcome {
                        name: "growth-consistency".into(),
                        measured: Some(r),
                        limit: format!("in [{:.4e}, {:.4e}]", 0.5 * sep, 2.0 * c2),
                        margin: Some(margin),
                        verdict: if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail },
                        note: None,
                    });
                }
            }
            Err(e) => out.push(CheckOutcome::not_applicable("growth-c1", e.to_string())),
        }
    } else {
        out.push(CheckOutcome::not_applicable("growth-c1", "single particle"));
    }

    match &full {
        Some(f) => match asymptotics::extract_xstar(trajectory, &f.v_star, window) {
            Ok(x) => {
                let worst = x
                    .residual
                    .iter()
                    .zip(&x.constant_residual)
                    .map(|(r, c)| if *c > 0.0 { r / c } else if *r == 0.0 { 0.0 } else { f64::INFINITY })
                    .fold(0.0, f64::max);
                // nested least-squares models: equality up to rounding when b = 0
                out.push(
                    CheckOutcome::at_most("drift-model", worst, 1.0 + 1e-12)
                        .with_note("log-model residual over constant-model residual"),
                );
            }
            Err(e) => out.push(CheckOutcome::not_applicable("drift-model", e.to_string())),
        },
        None => out.push(CheckOutcome::not_applicable("drift-model", "horizon shorter than a decade")),
    }
    Ok(out)
}

/// Checks computable from a single run. `per_decade` is the geometric
/// sampling density, or `None` for fixed spacing (no finite-difference checks).
pub fn run_checks(
    trajectory: &Trajectory,
    records: &[DiagnosticRecord],
    per_decade: Option<u32>,
    tol: &Tolerances,
) -> Result<Vec<CheckOutcome>> {
    let mut out = conservation_checks(trajectory, tol);
    out.extend(bound_checks(trajectory, records, tol));
    out.extend(identity_checks(trajectory, records, per_decade, tol));
    out.extend(decay_checks(trajectory, records, tol));
    out.extend(asymptotic_checks(trajectory, tol)?);
    Ok(out)
}

type Normalized = fn(&[(f64, model::EnergyReport); 3], f64) -> Option<f64>;

fn normalized_a(tri: &[(f64, model::EnergyReport); 3], _e0: f64) -> Option<f64> {
    let (t, r) = tri[1];
    diagnostics::theorem_a_residual(tri).ok().map(|res| res.abs() / (t * r.e_pot))
}

fn normalized_virial(tri: &[(f64, model::EnergyReport); 3], e0: f64) -> Option<f64> {
    diagnostics::virial_residual(tri).ok().map(|res| res.abs() / e0)
}

/// Residuals below this (in the units of the identity checks) are at
/// rounding level and carry no convergence information.
const ORDER_NOISE_FLOOR: f64 = 1e-9;

/// Ratios of the normalised finite-difference residuals of a run sampled at
/// `per_decade` over those of a run at `2 * per_decade`, at common samples
/// with `t >= start`.
pub fn order_ratios(
    coarse: &Trajectory,
    fine: &Trajectory,
    per_decade: u32,
    start: f64,
    residual: Normalized,
) -> Vec<f64> {
    let e0 = coarse.first().report.e_total;
    let collect = |traj: &Trajectory, per: u32| -> Vec<(f64, f64)> {
        diagnostics::grid_triples(traj, per)
            .iter()
            .filter(|tri| tri[1].0 >= start * (1.0 - 1e-12) && diagnostics::is_grid_time(tri[1].0, per_decade))
            .filter_map(|tri| residual(tri, e0).map(|r| (tri[1].0, r)))
            .collect()
    };
    let a = collect(coarse, per_decade);
    let b = collect(fine, 2 * per_decade);
    a.iter()
        .filter(|(_, x)| *x > ORDER_NOISE_FLOOR)
        .filter_map(|(t, x)| {
            b.iter()
                .find(|(u, _)| (u - t).abs() <= 1e-9 * t)
                .map(|(_, y)| x / y)
        })
        .collect()
}

pub fn order_checks(coarse: &Trajectory, fine: &Trajectory, per_decade: u32, tol: &Tolerances) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let cases: [(&str, Normalized); 2] = [("theorem-a-order", normalized_a), ("virial-order", normalized_virial)];
    for (name, f) in cases {
        if coarse.first().state.len() < 2 {
            out.push(CheckOutcome::not_applicable(name, "free motion: difference formulas are exact"));
            continue;
        }
        let ratios = order_ratios(coarse, fine, per_decade, tol.fd_window_start, f);
        out.push(if ratios.is_empty() {
            CheckOutcome::not_applicable(name, "no common grid triples above rounding level")
        } else {
            CheckOutcome::within(name, &ratios, tol.order_ratio_min, tol.order_ratio_max)
                .with_note(format!("residual ratio, {} vs {} samples per decade", per_decade, 2 * per_decade))
        });
    }
    out
}

/// Scales positions by `lambda` and velocities by `lambda^(-1/2)`, runs both
/// states, and compares at times related by `lambda^(3/2)`. Returns the
/// largest position mismatch relative to the configuration size.
pub fn scaling_mismatch(
    state: &ParticleState,
    t_end: f64,
    config: &StepperConfig,
    output_times: &[f64],
    lambda: f64,
) -> Result<f64> {
    let scaled = ParticleState::new(
        state.t() * lambda.powf(1.5),
        state.positions().iter().map(|x| x * lambda).collect(),
        state.velocities().iter().map(|v| v / lambda.sqrt()).collect(),
    )?;
    let k = lambda.powf(1.5);
    let a = integrate::integrate(state, t_end, config, output_times)?;
    let scaled_times: Vec<f64> = output_times.iter().map(|t| t * k).collect();
    let b = integrate::integrate(&scaled, t_end * k, config, &scaled_times)?;
    let mut worst = 0.0f64;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let size = x.state.positions().iter().map(|p| p.norm()).fold(0.0, f64::max) * lambda;
        for (p, q) in x.state.positions().iter().zip(y.state.positions()) {
            worst = worst.max((q - p * lambda).norm() / size);
        }
    }
    Ok(worst)
}

/// Forward for `span`, reverse, forward for `span`, reverse; returns the
/// largest coordinate difference from the starting state.
pub fn reversal_mismatch(state: &ParticleState, span: f64, config: &StepperConfig) -> Result<f64> {
    let forward = |s: &ParticleState| -> Result<ParticleState> {
        Ok(integrate::integrate(s, s.t() + span, config, &[])?.last().state.clone())
    };
    let once = integrate::time_reverse(&forward(state)?);
    let back = integrate::time_reverse(&forward(&once)?);
    let worst = state
        .to_flat()
        .iter()
        .zip(back.to_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(worst)
}

pub fn all_passed(checks: &[CheckOutcome]) -> bool {
    checks.iter().all(|c| !c.failed())
}

/// Plain-text table of the checks.
pub fn render_table(checks: &[CheckOutcome]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>12}  {:>12}  {:<28}  verdict\n", "check", "measured", "margin", "limit");
    for c in checks {
        let num = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
        s.push_str(&format!(
            "{:<width$}  {:>12}  {:>12}  {:<28}  {}",
            c.name,
            num(c.measured),
            num(c.margin),
            c.limit,
            c.verdict
        ));
        if let Some(note) = &c.note {
            if c.verdict == Verdict::NotApplicable {
                s.push_str(&format!("  ({note})"));
            }
        }
        s.push('\n');
    }
    s
}
