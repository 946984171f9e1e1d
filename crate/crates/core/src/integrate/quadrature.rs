//! Running integrals `int_1^t E_kin^rel(s) ds` and `int_1^t s E_pot(s) ds`,
//! accumulated with composite Simpson panels on the accepted-step grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahan::CompensatedSum;
use crate::model::{self, ParticleState, Vec3};

/// Start of the window on which the integrals are defined.
pub const DIAGNOSTIC_START: f64 = 1.0;

/// Integrand values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrands {
    pub t: f64,
    pub e_kin_rel: f64,
    pub e_pot: f64,
}

impl Integrands {
    pub fn of(state: &ParticleState) -> Result<Self> {
        Ok(Self {
            t: state.t(),
            e_kin_rel: model::relative_kinetic_energy(state)?,
            e_pot: model::potential_energy(state)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureState {
    t: f64,
    int_e_rel: CompensatedSum,
    int_t_epot: CompensatedSum,
}

impl QuadratureState {
    /// Both integrals vanish at the start of the window.
    pub fn start() -> Self {
        Self {
            t: DIAGNOSTIC_START,
            int_e_rel: CompensatedSum::new(),
            int_t_epot: CompensatedSum::new(),
        }
    }

    /// Upper limit of the integrals.
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn int_e_rel(&self) -> f64 {
        self.int_e_rel.value()
    }

    /// `int_1^t g(s)/s^2 ds` with `g = s^2 E_kin^rel`; the same number as
    /// [`Self::int_e_rel`].
    pub fn int_g_over_s2(&self) -> f64 {
        self.int_e_rel()
    }

    pub fn int_t_epot(&self) -> f64 {
        self.int_t_epot.value()
    }

    /// Extends both integrals by one Simpson panel. `mid` must sit at the
    /// midpoint of `left` and `right`, and `left` at the current upper limit.
    pub fn add_panel(&self, left: Integrands, mid: Integrands, right: Integrands) -> Result<Self> {
        if left.t < DIAGNOSTIC_START {
            return Err(Error::NotInDiagnosticWindow { t: left.t });
        }
        if !(right.t > left.t) {
            return Err(Error::NonMonotoneTimes);
        }
        let h = right.t - left.t;
        let tol = 1e-12 * right.t.abs().max(1.0);
        if (mid.t - 0.5 * (left.t + right.t)).abs() > tol || (left.t - self.t).abs() > tol {
            return Err(Error::NonMonotoneTimes);
        }
        let simpson = |f: fn(&Integrands) -> f64| {
            h / 6.0 * (f(&left) + 4.0 * f(&mid) + f(&right))
        };
        let mut next = *self;
        next.int_e_rel.add(simpson(|p| p.e_kin_rel));
        next.int_t_epot.add(simpson(|p| p.t * p.e_pot));
        next.t = right.t;
        Ok(next)
    }
}

/// Advances the integrals across `[before.t, after.t]`, where the two states
/// are consecutive points of one trajectory. The midpoint state comes from
/// quintic Hermite interpolation of the positions with the force-law
/// accelerations at both ends; the midpoint velocity is the derivative of
/// that quintic.
pub fn advance_quadrature(
    quad: &QuadratureState,
    before: &ParticleState,
    after: &ParticleState,
) -> Result<QuadratureState> {
    if before.t() < DIAGNOSTIC_START {
        return Err(Error::NotInDiagnosticWindow { t: before.t() });
    }
    let a0 = model::accelerations(before)?;
    let a1 = model::accelerations(after)?;
    let mid = hermite_midpoint(before, &a0, after, &a1);
    quad.add_panel(
        Integrands::of(before)?,
        Integrands::of(&mid)?,
        Integrands::of(after)?,
    )
}

pub(crate) fn hermite_midpoint(
    s0: &ParticleState,
    a0: &[Vec3],
    s1: &ParticleState,
    a1: &[Vec3],
) -> ParticleState {
    let h = s1.t() - s0.t();
    let n = s0.len();
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let (x0, x1) = (s0.positions()[i], s1.positions()[i]);
        let (v0, v1) = (s0.velocities()[i], s1.velocities()[i]);
        xs.push((x0 + x1) * 0.5 + (v0 - v1) * (5.0 * h / 32.0) + (a0[i] + a1[i]) * (h * h / 64.0));
        vs.push((x1 - x0) * (15.0 / (8.0 * h)) - (v0 + v1) * (7.0 / 16.0) - (a0[i] - a1[i]) * (h / 32.0));
    }
    ParticleState::from_parts(0.5 * (s0.t() + s1.t()), xs, vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    /// Two particles receding along x with separation `t`: E_pot = 1/t.
    fn receding(t: f64) -> Integrands {
        Integrands {
            t,
            e_kin_rel: 0.0,
            e_pot: 1.0 / t,
        }
    }

    #[test]
    fn synthetic_t_epot_integral() {
        let panels = 64;
        let h = (E - 1.0) / panels as f64;
        let mut q = QuadratureState::start();
        for k in 0..panels {
            let a = 1.0 + k as f64 * h;
            let b = if k + 1 == panels { E } else { a + h };
            q = q
                .add_panel(receding(a), receding(0.5 * (a + b)), receding(b))
                .unwrap();
        }
        // int_1^e s * (1/s) ds
        assert!((q.int_t_epot() - (E - 1.0)).abs() < 1e-14);
        assert_eq!(q.int_e_rel(), 0.0);
        assert_eq!(q.t(), E);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let f = |t: f64| Integrands {
            t,
            e_kin_rel: t * t * t - 2.0 * t + 1.0,
            e_pot: 0.0,
        };
        let q = QuadratureState::start().add_panel(f(1.0), f(2.0), f(3.0)).unwrap();
        // int_1^3 (t^3 - 2t + 1) dt = 20 - 8 + 2
        assert!((q.int_e_rel() - 14.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_times_before_window() {
        let q = QuadratureState::start();
        let p = |t| Integrands { t, e_kin_rel: 1.0, e_pot: 1.0 };
        assert!(matches!(
            q.add_panel(p(0.5), p(0.75), p(1.0)),
            Err(Error::NotInDiagnosticWindow { .. })
        ));
        assert!(q.add_panel(p(1.0), p(1.0), p(1.0)).is_err());
        assert!(q.add_panel(p(1.0), p(1.2), p(2.0)).is_err());
    }

    #[test]
    fn self_similar_data_leaves_relative_integral_unchanged() {
        // v = x/t exactly; not a solution, so the panel is fed directly
        let at = |t: f64| {
            ParticleState::from_arrays(
                t,
                &[[-t, 0.0, 0.0], [t, 0.0, 0.0]],
                &[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            )
            .unwrap()
        };
        let p = |t: f64| Integrands::of(&at(t)).unwrap();
        let q = QuadratureState::start().add_panel(p(1.0), p(1.25), p(1.5)).unwrap();
        assert_eq!(q.int_e_rel(), 0.0);
        // int_1^1.5 s / (2 s) ds
        assert!((q.int_t_epot() - 0.25).abs() < 1e-15);
        assert!(matches!(
            advance_quadrature(&QuadratureState::start(), &at(0.5), &at(1.0)),
            Err(Error::NotInDiagnosticWindow { .. })
        ));
    }

    #[test]
    fn hermite_midpoint_exact_for_quintic_motion() {
        // the interpolant reproduces quintic motion exactly
        let x = |t: f64| t.powi(5);
        let v = |t: f64| 5.0 * t.powi(4);
        let a = |t: f64| 20.0 * t.powi(3);
        let st = |t: f64| ParticleState::from_arrays(t, &[[x(t), 0.0, 0.0]], &[[v(t), 0.0, 0.0]]).unwrap();
        let (t0, t1) = (1.0, 1.4);
        let m = hermite_midpoint(
            &st(t0),
            &[Vec3::new(a(t0), 0.0, 0.0)],
            &st(t1),
            &[Vec3::new(a(t1), 0.0, 0.0)],
        );
        assert!((m.positions()[0].x - x(1.2)).abs() < 1e-12);
        assert!((m.velocities()[0].x - v(1.2)).abs() < 1e-12);
    }
}
