//! Phase-space state of n unit charges with unit mass, the repulsive Coulomb
//! force field acting on them, and the scalar functionals derived from it.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel;

pub type Vec3 = Vector3<f64>;

/// Snapshot of the whole system at one instant.
///
/// Positions and velocities have equal length `n >= 1`, all components are
/// finite and no two particles coincide. The constructor enforces this; the
/// integrators build intermediate stages through the unchecked path and rely
/// on the force kernel to report coincidences.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    t: f64,
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
}

impl ParticleState {
    pub fn new(t: f64, positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidState("at least one particle is required".into()));
        }
        if positions.len() != velocities.len() {
            return Err(Error::InvalidState(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        let state = Self::from_parts(t, positions, velocities);
        if !state.is_finite() {
            return Err(Error::InvalidState("non-finite component".into()));
        }
        for i in 0..state.len() {
            for j in (i + 1)..state.len() {
                if state.positions[i] == state.positions[j] {
                    return Err(Error::DegenerateConfiguration { i, j });
                }
            }
        }
        Ok(state)
    }

    pub(crate) fn from_parts(t: f64, positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Self {
        debug_assert_eq!(positions.len(), velocities.len());
        Self {
            t,
            positions,
            velocities,
        }
    }

    /// Convenience constructor from plain coordinate triples.
    pub fn from_arrays(t: f64, positions: &[[f64; 3]], velocities: &[[f64; 3]]) -> Result<Self> {
        Self::new(
            t,
            positions.iter().map(|p| Vec3::from(*p)).collect(),
            velocities.iter().map(|v| Vec3::from(*v)).collect(),
        )
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.velocities
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .positions
                .iter()
                .chain(&self.velocities)
                .all(|v| v.iter().all(|c| c.is_finite()))
    }

    /// Flattened phase-space vector: all positions, then all velocities.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 * self.len());
        for p in self.positions.iter().chain(&self.velocities) {
            out.extend_from_slice(p.as_slice());
        }
        out
    }

    pub(crate) fn from_flat(t: f64, y: &[f64]) -> Self {
        let n = y.len() / 6;
        let read = |k: usize| Vec3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
        Self::from_parts(t, (0..n).map(read).collect(), (n..2 * n).map(read).collect())
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.velocities.iter().sum()
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.positions
            .iter()
            .zip(&self.velocities)
            .map(|(x, v)| x.cross(v))
            .sum()
    }
}

/// Energies and inertia of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_total: f64,
    /// Kinetic energy relative to the self-similar profile `v = x/t`;
    /// `None` for `t <= 0`.
    pub e_kin_rel: Option<f64>,
    pub inertia: f64,
    pub inertia_rate: f64,
}

/// Acceleration of every particle: `a_i = sum_{j != i} (x_i - x_j) / |x_i - x_j|^3`.
pub fn accelerations(state: &ParticleState) -> Result<Vec<Vec3>> {
    kernel::accelerations(state.positions())
}

/// `E_pot = 1/2 sum_{i != j} 1/|x_i - x_j|`, zero for a single particle.
pub fn potential_energy(state: &ParticleState) -> Result<f64> {
    kernel::potential_energy(state.positions())
}

pub fn kinetic_energy(state: &ParticleState) -> f64 {
    0.5 * state.velocities.iter().map(|v| v.norm_squared()).sum::<f64>()
}

/// `1/2 sum |v_i - x_i/t|^2`. Undefined for `t <= 0`.
pub fn relative_kinetic_energy(state: &ParticleState) -> Result<f64> {
    let t = state.t;
    if !(t > 0.0) {
        return Err(Error::UndefinedAtTime { t });
    }
    Ok(0.5
        * state
            .positions
            .iter()
            .zip(&state.velocities)
            .map(|(x, v)| (v - x / t).norm_squared())
            .sum::<f64>())
}

/// Returns `(I, dI/dt) = (1/2 sum |x_i|^2, sum x_i . v_i)`.
pub fn moment_of_inertia(state: &ParticleState) -> (f64, f64) {
    let inertia = 0.5 * state.positions.iter().map(|x| x.norm_squared()).sum::<f64>();
    let rate = state
        .positions
        .iter()
        .zip(&state.velocities)
        .map(|(x, v)| x.dot(v))
        .sum::<f64>();
    (inertia, rate)
}

pub fn energy_report(state: &ParticleState) -> Result<EnergyReport> {
    let e_kin = kinetic_energy(state);
    let e_pot = potential_energy(state)?;
    let e_kin_rel = if state.t > 0.0 {
        Some(relative_kinetic_energy(state)?)
    } else {
        None
    };
    let (inertia, inertia_rate) = moment_of_inertia(state);
    Ok(EnergyReport {
        t: state.t,
        e_kin,
        e_pot,
        e_total: e_kin + e_pot,
        e_kin_rel,
        inertia,
        inertia_rate,
    })
}

/// Symmetric matrix of separations with zero diagonal.
pub fn pairwise_distances(state: &ParticleState) -> Vec<Vec<f64>> {
    let n = state.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = (state.positions[i] - state.positions[j]).norm();
            d[i][j] = r;
            d[j][i] = r;
        }
    }
    d
}

pub fn min_pairwise_distance(state: &ParticleState) -> Result<f64> {
    extreme_pairwise_distance(state, f64::min)
}

pub fn max_pairwise_distance(state: &ParticleState) -> Result<f64> {
    extreme_pairwise_distance(state, f64::max)
}

fn extreme_pairwise_distance(state: &ParticleState, pick: fn(f64, f64) -> f64) -> Result<f64> {
    let n = state.len();
    if n < 2 {
        return Err(Error::NotApplicable(
            "pairwise distance needs at least two particles".into(),
        ));
    }
    let x = &state.positions;
    let mut best = (x[0] - x[1]).norm();
    for i in 0..n {
        for j in (i + 1)..n {
            best = pick(best, (x[i] - x[j]).norm());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(t: f64, x: &[[f64; 3]], v: &[[f64; 3]]) -> ParticleState {
        ParticleState::from_arrays(t, x, v).unwrap()
    }

    fn collinear3() -> ParticleState {
        state(
            0.0,
            &[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            &[[0.0; 3]; 3],
        )
    }

    #[test]
    fn single_particle_feels_no_force() {
        let s = state(0.0, &[[3.0, -1.0, 2.0]], &[[0.0; 3]]);
        assert_eq!(accelerations(&s).unwrap(), vec![Vec3::zeros()]);
        assert_eq!(potential_energy(&s).unwrap(), 0.0);
    }

    #[test]
    fn two_body_unit_separation() {
        let s = state(0.0, &[[0.0; 3], [1.0, 0.0, 0.0]], &[[0.0; 3]; 2]);
        let a = accelerations(&s).unwrap();
        assert_eq!(a[0], Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(a[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn collinear_three() {
        let s = collinear3();
        let a = accelerations(&s).unwrap();
        assert_eq!(a[0], Vec3::new(-1.25, 0.0, 0.0));
        assert_eq!(a[1], Vec3::zeros());
        assert_eq!(a[2], Vec3::new(1.25, 0.0, 0.0));
        assert_relative_eq!(potential_energy(&s).unwrap(), 2.5, epsilon = 1e-15);
        assert_eq!(min_pairwise_distance(&s).unwrap(), 1.0);
        assert_eq!(max_pairwise_distance(&s).unwrap(), 2.0);
    }

    #[test]
    fn potential_at_separation_two() {
        let s = state(0.0, &[[0.0; 3], [0.0, 2.0, 0.0]], &[[0.0; 3]; 2]);
        assert_eq!(potential_energy(&s).unwrap(), 0.5);
    }

    #[test]
    fn kinetic_energies() {
        let s = state(0.0, &[[0.0; 3], [1.0, 0.0, 0.0]], &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert_eq!(kinetic_energy(&s), 1.0);
        let s = state(0.0, &[[0.0; 3]], &[[0.0, 3.0, 4.0]]);
        assert_eq!(kinetic_energy(&s), 12.5);
        assert_eq!(kinetic_energy(&collinear3()), 0.0);
    }

    #[test]
    fn relative_kinetic_energy_cases() {
        let s = state(2.0, &[[2.0, 0.0, 0.0]], &[[0.0; 3]]);
        assert_eq!(relative_kinetic_energy(&s).unwrap(), 0.5);

        let s = state(4.0, &[[4.0, -8.0, 2.0], [1.0, 1.0, 1.0]], &[[1.0, -2.0, 0.5], [0.25, 0.25, 0.25]]);
        assert_eq!(relative_kinetic_energy(&s).unwrap(), 0.0);

        for t in [0.0, -1.0] {
            let s = state(t, &[[1.0, 0.0, 0.0]], &[[0.0; 3]]);
            assert!(matches!(
                relative_kinetic_energy(&s),
                Err(Error::UndefinedAtTime { .. })
            ));
        }
    }

    #[test]
    fn inertia_cases() {
        let s = state(0.0, &[[0.0; 3]], &[[5.0, 0.0, 0.0]]);
        assert_eq!(moment_of_inertia(&s), (0.0, 0.0));
        let s = state(0.0, &[[1.0, 1.0, 0.0]], &[[2.0, 0.0, 0.0]]);
        assert_eq!(moment_of_inertia(&s), (1.0, 2.0));
        let x = [0.3, -1.2, 0.7];
        let v = [0.5, 0.1, -0.4];
        let s = state(
            0.0,
            &[x, [-x[0], -x[1], -x[2]]],
            &[v, [-v[0], -v[1], -v[2]]],
        );
        let xv = Vec3::from(x).dot(&Vec3::from(v));
        assert_relative_eq!(moment_of_inertia(&s).1, 2.0 * xv, epsilon = 1e-15);
    }

    #[test]
    fn energy_report_two_body_at_rest() {
        let s = state(0.0, &[[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]], &[[0.0; 3]; 2]);
        let r = energy_report(&s).unwrap();
        assert_eq!(r.e_kin, 0.0);
        assert_eq!(r.e_pot, 1.0);
        assert_eq!(r.e_total, 1.0);
        assert_eq!(r.e_kin_rel, None);
    }

    #[test]
    fn energy_report_free_particle() {
        let s = state(3.0, &[[1.0, 2.0, 3.0]], &[[0.1, 0.2, 0.3]]);
        let r = energy_report(&s).unwrap();
        assert_eq!(r.e_pot, 0.0);
        assert_eq!(r.e_total, r.e_kin);
        assert!(r.e_kin_rel.is_some());
    }

    #[test]
    fn distance_matrix_is_symmetric_with_zero_diagonal() {
        let d = pairwise_distances(&collinear3());
        for i in 0..3 {
            assert_eq!(d[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
        let s = state(0.0, &[[0.0; 3], [0.0, 0.0, 3.0]], &[[0.0; 3]; 2]);
        assert_eq!(min_pairwise_distance(&s).unwrap(), 3.0);
    }

    #[test]
    fn min_distance_needs_two_particles() {
        let s = state(0.0, &[[0.0; 3]], &[[0.0; 3]]);
        assert!(matches!(min_pairwise_distance(&s), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn constructor_rejects_bad_states() {
        assert!(matches!(
            ParticleState::from_arrays(0.0, &[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], &[[0.0; 3]; 2]),
            Err(Error::DegenerateConfiguration { i: 0, j: 1 })
        ));
        assert!(ParticleState::from_arrays(0.0, &[[f64::NAN, 0.0, 0.0]], &[[0.0; 3]]).is_err());
        assert!(ParticleState::from_arrays(0.0, &[[0.0; 3]], &[[0.0; 3]; 2]).is_err());
        assert!(ParticleState::from_arrays(0.0, &[], &[]).is_err());
    }

    #[test]
    fn coincident_particles_are_reported_by_the_kernel() {
        let s = ParticleState::from_parts(
            0.0,
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()],
            vec![Vec3::zeros(); 3],
        );
        assert!(matches!(
            accelerations(&s),
            Err(Error::DegenerateConfiguration { i: 0, j: 2 })
        ));
        assert!(matches!(
            potential_energy(&s),
            Err(Error::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn flat_round_trip() {
        let s = state(1.5, &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], &[[7.0, 8.0, 9.0], [10.0, 11.0, 12.0]]);
        let y = s.to_flat();
        assert_eq!(y, (1..=12).map(f64::from).collect::<Vec<_>>());
        assert_eq!(ParticleState::from_flat(1.5, &y), s);
    }
}
