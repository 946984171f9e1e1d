//! Initial conditions and the head-on two-body ground truth.
//!
//! Random clouds are drawn from a ChaCha20 stream seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. Each attempt draws all n positions
//! (uniform in the ball, by rejection from the enclosing cube); attempts
//! repeat on the same stream until every separation clears
//! `min_initial_separation`. Velocities are drawn afterwards, also uniform
//! in a ball. The same seed therefore always yields the same state.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParticleState, Vec3};

pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    TwoBodyHeadOn,
    #[serde(rename = "collinear-3")]
    Collinear3,
    RandomCloud,
    RegularPolygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub seed: u64,
    pub position_radius: f64,
    pub speed_radius: f64,
    pub min_initial_separation: f64,
    pub head_on_separation: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::RandomCloud,
            n: 5,
            seed: 20_240_601,
            position_radius: 2.0,
            speed_radius: 0.5,
            min_initial_separation: 0.5,
            head_on_separation: 1.0,
        }
    }
}

impl ScenarioSpec {
    pub fn of_kind(kind: ScenarioKind) -> Self {
        let n = match kind {
            ScenarioKind::TwoBodyHeadOn => 2,
            ScenarioKind::Collinear3 => 3,
            ScenarioKind::RandomCloud => 5,
            ScenarioKind::RegularPolygon => 4,
        };
        Self {
            kind,
            n,
            ..Self::default()
        }
    }

    pub fn random_cloud(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }

    /// Particle count actually produced by [`build`].
    pub fn particle_count(&self) -> usize {
        match self.kind {
            ScenarioKind::TwoBodyHeadOn => 2,
            ScenarioKind::Collinear3 => 3,
            ScenarioKind::RandomCloud | ScenarioKind::RegularPolygon => self.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("scenario: {msg}")));
        if self.n < 1 {
            return bad("n must be at least 1");
        }
        if !(self.position_radius > 0.0 && self.speed_radius > 0.0) {
            return bad("radii must be positive");
        }
        if !(self.min_initial_separation > 0.0) {
            return bad("min_initial_separation must be positive");
        }
        if !(self.head_on_separation > 0.0 && self.head_on_separation.is_finite()) {
            return bad("head_on_separation must be positive");
        }
        Ok(())
    }
}

/// Initial state at `t = 0`.
pub fn build(spec: &ScenarioSpec) -> Result<ParticleState> {
    spec.validate()?;
    let at_rest = |positions: Vec<Vec3>| {
        let n = positions.len();
        ParticleState::new(0.0, positions, vec![Vec3::zeros(); n])
    };
    match spec.kind {
        ScenarioKind::TwoBodyHeadOn => {
            let h = 0.5 * spec.head_on_separation;
            at_rest(vec![Vec3::new(-h, 0.0, 0.0), Vec3::new(h, 0.0, 0.0)])
        }
        ScenarioKind::Collinear3 => at_rest(vec![
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
        ]),
        ScenarioKind::RegularPolygon => at_rest(
            (0..spec.n)
                .map(|k| {
                    let phi = TAU * k as f64 / spec.n as f64;
                    Vec3::new(phi.cos(), phi.sin(), 0.0)
                })
                .collect(),
        ),
        ScenarioKind::RandomCloud => random_cloud(spec),
    }
}

fn uniform_in_ball(rng: &mut ChaCha20Rng, radius: f64) -> Vec3 {
    loop {
        let p = Vec3::new(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
        );
        if p.norm_squared() <= 1.0 {
            return p * radius;
        }
    }
}

fn random_cloud(spec: &ScenarioSpec) -> Result<ParticleState> {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let min_sep2 = spec.min_initial_separation.powi(2);
    for _ in 0..MAX_ATTEMPTS {
        let positions: Vec<Vec3> = (0..spec.n)
            .map(|_| uniform_in_ball(&mut rng, spec.position_radius))
            .collect();
        let separated = (0..spec.n).all(|i| {
            ((i + 1)..spec.n).all(|j| (positions[i] - positions[j]).norm_squared() >= min_sep2)
        });
        if separated {
            let velocities = (0..spec.n)
                .map(|_| uniform_in_ball(&mut rng, spec.speed_radius))
                .collect();
            return ParticleState::new(0.0, positions, velocities);
        }
    }
    Err(Error::InfeasibleSpec {
        attempts: MAX_ATTEMPTS,
    })
}

/// Separation and relative speed of the symmetric head-on pair started at
/// rest with separation `d`.
///
/// The pair obeys `r'^2/4 + 1/r = 1/d`. Writing `r = d + s^2` removes the
/// turning-point singularity of `dt = dr / (2 sqrt(1/d - 1/r))`, giving
/// `t(s) = int_0^s sqrt(d (d + u^2)) du`, which is evaluated by adaptive
/// Gauss-Kronrod quadrature and inverted by Newton's method.
pub fn two_body_radial_oracle(d: f64, t_query: f64) -> Result<(f64, f64)> {
    if !(d > 0.0 && d.is_finite()) || !(t_query >= 0.0 && t_query.is_finite()) {
        return Err(Error::Domain(format!(
            "oracle needs d > 0 and t >= 0, got d = {d}, t = {t_query}"
        )));
    }
    if t_query == 0.0 {
        return Ok((d, 0.0));
    }
    let s = invert_oracle_time(d, t_query);
    let r = d + s * s;
    let rdot = 2.0 * ((r - d) / (r * d)).sqrt();
    Ok((r, rdot))
}

/// Absolute accuracy of the oracle's time integral.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

fn oracle_speed_factor(d: f64, s: f64) -> f64 {
    (d * (d + s * s)).sqrt()
}

fn oracle_time(d: f64, s: f64) -> f64 {
    integrate_gk15(&|u| oracle_speed_factor(d, u), 0.0, s, ORACLE_TOLERANCE)
}

fn invert_oracle_time(d: f64, t: f64) -> f64 {
    // t(s) is convex with t' >= d and t' >= sqrt(d) s, so both guesses are
    // upper bounds and Newton descends monotonically from the smaller one.
    let mut s = (t / d).min((2.0 * t / d.sqrt()).sqrt());
    for _ in 0..100 {
        let residual = oracle_time(d, s) - t;
        let ds = residual / oracle_speed_factor(d, s);
        s -= ds;
        if ds.abs() <= 1e-15 * s.max(1.0) {
            break;
        }
    }
    s
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate and |Kronrod - Gauss| on one interval.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Recursive bisection until the local Gauss-Kronrod error drops below a
/// share of `tol` proportional to the interval length.
pub(crate) fn integrate_gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 50 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    /// Closed-form parameterisation of the head-on pair:
    /// `r = d cosh^2 u`, `t = d^(3/2) (u + sinh u cosh u) / 2`.
    fn cosh_oracle(d: f64, t: f64) -> f64 {
        let time = |u: f64| d.powf(1.5) * (u + u.sinh() * u.cosh()) / 2.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        while time(hi) < t {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if time(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d * (0.5 * (lo + hi)).cosh().powi(2)
    }

    #[test]
    fn head_on_at_rest() {
        let s = build(&ScenarioSpec::of_kind(ScenarioKind::TwoBodyHeadOn)).unwrap();
        let r = model::energy_report(&s).unwrap();
        assert_eq!((r.e_pot, r.e_kin, r.e_total), (1.0, 0.0, 1.0));
        assert_eq!(s.positions()[0], Vec3::new(-0.5, 0.0, 0.0));
    }

    #[test]
    fn collinear_and_polygon() {
        let s = build(&ScenarioSpec::of_kind(ScenarioKind::Collinear3)).unwrap();
        assert_eq!(s.positions()[1], Vec3::zeros());
        let s = build(&ScenarioSpec::of_kind(ScenarioKind::RegularPolygon)).unwrap();
        assert_eq!(s.total_momentum(), Vec3::zeros());
        for (x, a) in s.positions().iter().zip(model::accelerations(&s).unwrap()) {
            // outward and radial
            assert!(x.dot(&a) > 0.0);
            assert!(x.cross(&a).norm() < 1e-14);
        }
    }

    #[test]
    fn seeded_cloud_is_deterministic_and_separated() {
        let spec = ScenarioSpec::default();
        let a = build(&spec).unwrap();
        let b = build(&spec).unwrap();
        assert_eq!(a.to_flat().iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
                   b.to_flat().iter().map(|c| c.to_bits()).collect::<Vec<_>>());
        assert!(model::min_pairwise_distance(&a).unwrap() >= spec.min_initial_separation);
        for (x, v) in a.positions().iter().zip(a.velocities()) {
            assert!(x.norm() <= spec.position_radius);
            assert!(v.norm() <= spec.speed_radius);
        }
        let other = build(&ScenarioSpec { seed: spec.seed + 1, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn infeasible_cloud() {
        let spec = ScenarioSpec {
            n: 50,
            position_radius: 0.1,
            min_initial_separation: 1.0,
            ..ScenarioSpec::default()
        };
        assert!(matches!(build(&spec), Err(Error::InfeasibleSpec { attempts: MAX_ATTEMPTS })));
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            ScenarioSpec { n: 0, ..Default::default() },
            ScenarioSpec { position_radius: 0.0, ..Default::default() },
            ScenarioSpec { speed_radius: -1.0, ..Default::default() },
            ScenarioSpec { min_initial_separation: 0.0, ..Default::default() },
            ScenarioSpec { head_on_separation: 0.0, ..Default::default() },
        ] {
            assert!(matches!(build(&spec), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn gauss_kronrod_on_known_integrals() {
        let v = integrate_gk15(&|x: f64| x.exp(), 0.0, 3.0, 1e-13);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
        let v = integrate_gk15(&|x: f64| x.powi(20), -1.0, 1.0, 1e-14);
        assert!((v - 2.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_at_start() {
        assert_eq!(two_body_radial_oracle(1.0, 0.0).unwrap(), (1.0, 0.0));
        assert!(two_body_radial_oracle(0.0, 1.0).is_err());
        assert!(two_body_radial_oracle(1.0, -1.0).is_err());
    }

    #[test]
    fn oracle_matches_closed_form() {
        for d in [0.5, 1.0, 3.0] {
            for t in [1e-3, 0.1, 1.0, 10.0, 100.0, 1000.0] {
                let (r, rdot) = two_body_radial_oracle(d, t).unwrap();
                let expected = cosh_oracle(d, t);
                assert!((r - expected).abs() <= 1e-11 * expected, "d={d} t={t}: {r} vs {expected}");
                // energy of the reduced problem
                assert!((rdot * rdot / 4.0 + 1.0 / r - 1.0 / d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_asymptotic_speed() {
        let (r, rdot) = two_body_radial_oracle(1.0, 1e3).unwrap();
        // each particle recedes at rdot/2 -> 1
        assert!((rdot / 2.0 - 1.0).abs() < 1e-3);
        let ratio = r / 1e3;
        assert!(ratio < 2.0 && ratio > 2.0 - 1e-2, "r/t = {ratio}");
        let (_, rdot4) = two_body_radial_oracle(4.0, 1e4).unwrap();
        assert!((rdot4 - 1.0).abs() < 1e-2);
    }
}
