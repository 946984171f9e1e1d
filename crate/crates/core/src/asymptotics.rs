//! Scattering data of a trajectory: limiting velocities `v_i*`, offsets
//! `x_i*` with the coefficient of the logarithmic drift, the envelope
//! constants of linear separation growth, and decay-rate fits.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Sample, Trajectory};
use crate::model::{self, Vec3};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
/// Minimum number of samples for any least-squares fit.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct VStar {
    pub v_star: Vec<Vec3>,
    /// `|v_i(T) - v_i(t')|` with `t'` the last sample at or before `tail_fraction * T`.
    pub error: Vec<f64>,
    /// The comparison time `t'`.
    pub t_ref: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XStarFit {
    pub x_star: Vec<Vec3>,
    pub log_drift: Vec<Vec3>,
    /// RMS residual of the `a + b ln t` model, per particle.
    pub residual: Vec<f64>,
    /// RMS residual of the constant-only model, per particle.
    pub constant_residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `value ~ A t^p`
    Power,
    /// `value ~ C ln^2 t / t^2`
    PowerTimesLogSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Fitted `p` for [`DecayModel::Power`]; `None` for the fixed-shape model.
    pub exponent: Option<f64>,
    pub prefactor: f64,
    /// RMS of the log residuals for `Power`, max relative deviation for
    /// `PowerTimesLogSquared`.
    pub residual: f64,
}

/// Least-squares fit of `y ~ a + b s`; returns `(a, b, rms residual)`.
pub fn linear_fit(s: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = s.len();
    if n != y.len() || n == 0 {
        return Err(Error::Fit(format!("{n} abscissae for {} values", y.len())));
    }
    let mean_s = s.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = s.iter().map(|v| (v - mean_s).powi(2)).sum();
    if !(sxx > 1e-14 * mean_s.abs().max(1.0).powi(2) * n as f64) {
        return Err(Error::Fit("rank-deficient design: abscissae do not vary".into()));
    }
    let sxy: f64 = s.iter().zip(y).map(|(a, b)| (a - mean_s) * (b - mean_y)).sum();
    let b = sxy / sxx;
    let a = mean_y - b * mean_s;
    let ss: f64 = s.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    Ok((a, b, (ss / n as f64).sqrt()))
}

fn rms_about_mean(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

fn require_span(samples: &[&Sample], what: &str) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientHorizon(format!(
            "{what} needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (lo, hi) = (samples[0].t(), samples[samples.len() - 1].t());
    if !(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-9)) {
        return Err(Error::InsufficientHorizon(format!(
            "{what} needs a window spanning a decade, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `v_i* = v_i(T)` with the Cauchy error proxy against an earlier sample.
pub fn extract_vstar(trajectory: &Trajectory, tail_fraction: f64) -> Result<VStar> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::Domain(format!("tail_fraction {tail_fraction} outside (0, 1)")));
    }
    let last = trajectory.last();
    let horizon = last.t();
    let first_positive = trajectory.samples.iter().map(Sample::t).find(|&t| t > 0.0);
    match first_positive {
        Some(t0) if horizon >= 10.0 * t0 * (1.0 - 1e-9) => {}
        _ => {
            return Err(Error::InsufficientHorizon(format!(
                "trajectory ending at {horizon} does not cover a decade"
            )))
        }
    }
    let cut = tail_fraction * horizon * (1.0 + 1e-9);
    let reference = trajectory
        .samples
        .iter()
        .rev()
        .find(|s| s.t() <= cut)
        .ok_or_else(|| Error::InsufficientHorizon(format!("no sample before {cut}")))?;
    let v_star = last.state.velocities().to_vec();
    let error = v_star
        .iter()
        .zip(reference.state.velocities())
        .map(|(a, b)| (a - b).norm())
        .collect();
    Ok(VStar {
        v_star,
        error,
        t_ref: reference.t(),
    })
}

/// Fits `x_i(t) - t v_i*` by `a + b ln t` per particle and coordinate over
/// the samples in `window`.
pub fn extract_xstar(trajectory: &Trajectory, v_star: &[Vec3], window: (f64, f64)) -> Result<XStarFit> {
    let samples = trajectory.window(window.0, window.1);
    let n = trajectory.first().state.len();
    if v_star.len() != n {
        return Err(Error::InvalidState(format!(
            "{} limiting velocities for {n} particles",
            v_star.len()
        )));
    }
    if samples.len() >= 2 {
        // a design with a single distinct time is rank-deficient regardless of span
        linear_fit(
            &samples.iter().map(|s| s.t().ln()).collect::<Vec<_>>(),
            &vec![0.0; samples.len()],
        )?;
    }
    require_span(&samples, "positional drift fit")?;
    let ln_t: Vec<f64> = samples.iter().map(|s| s.t().ln()).collect();
    let mut fit = XStarFit {
        x_star: Vec::with_capacity(n),
        log_drift: Vec::with_capacity(n),
        residual: Vec::with_capacity(n),
        constant_residual: Vec::with_capacity(n),
    };
    for (i, vs) in v_star.iter().enumerate() {
        let mut a = Vec3::zeros();
        let mut b = Vec3::zeros();
        let (mut ss, mut ss_const) = (0.0, 0.0);
        for k in 0..3 {
            let y: Vec<f64> = samples
                .iter()
                .map(|s| s.state.positions()[i][k] - s.t() * vs[k])
                .collect();
            let (ak, bk, rk) = linear_fit(&ln_t, &y)?;
            a[k] = ak;
            b[k] = bk;
            ss += rk * rk;
            ss_const += rms_about_mean(&y).powi(2);
        }
        fit.x_star.push(a);
        fit.log_drift.push(b);
        fit.residual.push((ss / 3.0).sqrt());
        fit.constant_residual.push((ss_const / 3.0).sqrt());
    }
    Ok(fit)
}

/// Envelope constants `(c1, c2)`: smallest `min_ij |x_i - x_j| / t` and
/// largest `max_ij |x_i - x_j| / t` over the samples in `window`.
pub fn fit_growth_constants(trajectory: &Trajectory, window: (f64, f64)) -> Result<(f64, f64)> {
    if trajectory.first().state.len() < 2 {
        return Err(Error::NotApplicable("growth constants need n >= 2".into()));
    }
    let samples: Vec<&Sample> = trajectory
        .window(window.0, window.1)
        .into_iter()
        .filter(|s| s.t() > 0.0)
        .collect();
    if samples.is_empty() {
        return Err(Error::InsufficientHorizon(format!(
            "no samples in [{}, {}]",
            window.0, window.1
        )));
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for s in samples {
        c1 = c1.min(model::min_pairwise_distance(&s.state)? / s.t());
        c2 = c2.max(model::max_pairwise_distance(&s.state)? / s.t());
    }
    if !(c1 > 0.0) {
        return Err(Error::Fit(format!("non-positive lower growth rate {c1}")));
    }
    Ok((c1, c2))
}

/// Fits a decay law to positive samples `(t, value)` with `t > e`.
pub fn fit_decay_rate(series: &[(f64, f64)], model: DecayModel) -> Result<DecayFit> {
    if let Some(&(t, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("value {v} at t = {t} is not positive")));
    }
    if let Some(&(t, _)) = series.iter().find(|(t, _)| !(*t > E)) {
        return Err(Error::Domain(format!("t = {t} is not beyond e")));
    }
    if series.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientHorizon(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            series.len()
        )));
    }
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (t, _)| (lo.min(*t), hi.max(*t)));
    if hi < 10.0 * lo * (1.0 - 1e-9) {
        return Err(Error::InsufficientHorizon(format!(
            "decay fit needs a decade, got [{lo}, {hi}]"
        )));
    }
    match model {
        DecayModel::Power => {
            let ln_t: Vec<f64> = series.iter().map(|(t, _)| t.ln()).collect();
            let ln_v: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
            let (a, p, rms) = linear_fit(&ln_t, &ln_v)?;
            Ok(DecayFit {
                model,
                exponent: Some(p),
                prefactor: a.exp(),
                residual: rms,
            })
        }
        DecayModel::PowerTimesLogSquared => {
            let shape = |t: f64| t.ln().powi(2) / (t * t);
            let mean_log_ratio =
                series.iter().map(|&(t, v)| (v / shape(t)).ln()).sum::<f64>() / series.len() as f64;
            let c = mean_log_ratio.exp();
            let dev = series
                .iter()
                .map(|&(t, v)| (v / (c * shape(t)) - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(DecayFit {
                model,
                exponent: None,
                prefactor: c,
                residual: dev,
            })
        }
    }
}

/// Windows used by [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    pub tail_fraction: f64,
    /// Window for the positional drift and the growth envelope.
    pub fit_window: (f64, f64),
    /// Window for the decay-rate fits.
    pub decay_window: (f64, f64),
}

impl SummaryOptions {
    /// Last decade for the drift and growth fits, last two decades (never
    /// reaching below `e`) for the decay fits.
    pub fn for_horizon(t_end: f64) -> Self {
        Self {
            tail_fraction: DEFAULT_TAIL_FRACTION,
            fit_window: (t_end / 10.0, t_end),
            decay_window: ((t_end / 100.0).max(E * (1.0 + 1e-12)), t_end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary {
    pub n: usize,
    pub t_end: f64,
    pub v_star: Vec<[f64; 3]>,
    /// Per-particle Cauchy error estimate of `v_star`.
    pub v_star_error: Option<Vec<f64>>,
    pub x_star: Option<Vec<[f64; 3]>>,
    pub log_drift_coeffs: Option<Vec<[f64; 3]>>,
    pub drift_fit_residual: Option<Vec<f64>>,
    pub drift_constant_residual: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub min_vstar_separation: Option<f64>,
    pub epot_rate: Option<f64>,
    pub erel_rate: Option<f64>,
    /// Prefactor of the `ln^2 t / t^2` fit of `E_kin^rel`.
    pub erel_log2_prefactor: Option<f64>,
}

fn arrays(v: &[Vec3]) -> Vec<[f64; 3]> {
    v.iter().map(|a| [a.x, a.y, a.z]).collect()
}

/// Smallest `|v_i* - v_j*|` over distinct pairs.
pub fn min_vstar_separation(v_star: &[Vec3]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..v_star.len() {
        for j in i + 1..v_star.len() {
            let d = (v_star[i] - v_star[j]).norm();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            Error::InsufficientHorizon(_) | Error::NotApplicable(_) | Error::Domain(_) | Error::Fit(_),
        ) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Computes every asymptotic quantity that the trajectory supports; fits
/// without enough data (or not applicable to `n`) are left out. Only the
/// stored states are used, so a trajectory reloaded from disk gives the same
/// summary.
pub fn summarize(trajectory: &Trajectory, options: &SummaryOptions) -> Result<AsymptoticSummary> {
    let last = trajectory.last();
    let n = last.state.len();
    let vstar = optional(extract_vstar(trajectory, options.tail_fraction))?;
    let v_star = last.state.velocities().to_vec();
    let xfit = optional(extract_xstar(trajectory, &v_star, options.fit_window))?;
    let growth = optional(fit_growth_constants(trajectory, options.fit_window))?;

    let decay_samples = trajectory.window(options.decay_window.0, options.decay_window.1);
    let mut epot = Vec::with_capacity(decay_samples.len());
    let mut erel = Vec::with_capacity(decay_samples.len());
    for s in &decay_samples {
        epot.push((s.t(), model::potential_energy(&s.state)?));
        erel.push((s.t(), model::relative_kinetic_energy(&s.state)?));
    }
    let epot_fit = optional(fit_decay_rate(&epot, DecayModel::Power))?;
    let erel_fit = optional(fit_decay_rate(&erel, DecayModel::Power))?;
    let erel_log2 = optional(fit_decay_rate(&erel, DecayModel::PowerTimesLogSquared))?;

    Ok(AsymptoticSummary {
        n,
        t_end: last.t(),
        v_star: arrays(&v_star),
        v_star_error: vstar.map(|v| v.error),
        x_star: xfit.as_ref().map(|f| arrays(&f.x_star)),
        log_drift_coeffs: xfit.as_ref().map(|f| arrays(&f.log_drift)),
        drift_fit_residual: xfit.as_ref().map(|f| f.residual.clone()),
        drift_constant_residual: xfit.as_ref().map(|f| f.constant_residual.clone()),
        c1: growth.map(|g| g.0),
        c2: growth.map(|g| g.1),
        min_vstar_separation: min_vstar_separation(&v_star),
        epot_rate: epot_fit.and_then(|f| f.exponent),
        erel_rate: erel_fit.and_then(|f| f.exponent),
        erel_log2_prefactor: erel_log2.map(|f| f.prefactor),
    })
}
