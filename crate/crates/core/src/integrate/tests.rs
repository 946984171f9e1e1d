use super::*;
use crate::model::{self, Vec3};
use crate::scenarios::{self, ScenarioKind, ScenarioSpec};

fn head_on() -> ParticleState {
    scenarios::build(&ScenarioSpec::of_kind(ScenarioKind::TwoBodyHeadOn)).unwrap()
}

fn cloud(n: usize, seed: u64) -> ParticleState {
    scenarios::build(&ScenarioSpec::random_cloud(n, seed)).unwrap()
}

fn max_coord_diff(a: &ParticleState, b: &ParticleState) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn energy(s: &ParticleState) -> f64 {
    model::energy_report(s).unwrap().e_total
}

fn tight() -> StepperConfig {
    StepperConfig::default()
}

#[test]
fn free_particle_moves_in_a_straight_line() {
    let s = ParticleState::from_arrays(0.0, &[[1.0, -2.0, 0.5]], &[[0.25, -1.5, 2.0]]).unwrap();
    for method in [Method::Rk4Fixed, Method::VelocityVerlet, Method::DormandPrince54Adaptive] {
        let next = step_fixed(&s, 0.5, method).unwrap();
        assert_eq!(next.t(), 0.5);
        assert_eq!(next.velocities(), s.velocities());
        let expected = s.positions()[0] + s.velocities()[0] * 0.5;
        assert!((next.positions()[0] - expected).norm() < 1e-15, "{method:?}");
    }
}

#[test]
fn step_rejects_nonpositive_dt() {
    let s = head_on();
    assert!(step_fixed(&s, 0.0, Method::Rk4Fixed).is_err());
    assert!(step_fixed(&s, -1.0, Method::VelocityVerlet).is_err());
}

#[test]
fn rk4_single_step_against_fine_reference() {
    let s = head_on();
    let dt = 1e-3;
    let one = step_fixed(&s, dt, Method::Rk4Fixed).unwrap();
    let mut reference = s.clone();
    for _ in 0..1000 {
        reference = step_fixed(&reference, 1e-6, Method::Rk4Fixed).unwrap();
    }
    let sep = |st: &ParticleState| model::min_pairwise_distance(st).unwrap();
    assert!(sep(&one) > sep(&s));
    assert!(max_coord_diff(&one, &reference) < 1e-14);
    assert!((energy(&one) - energy(&s)).abs() <= 1e-12);
}

#[test]
fn rk4_is_fourth_order() {
    let s = cloud(3, 7);
    let t_end = 2.0;
    let run = |dt: f64| {
        integrate(&s, t_end, &StepperConfig::fixed(Method::Rk4Fixed, dt), &[])
            .unwrap()
            .last()
            .state
            .clone()
    };
    let reference = run(1e-4);
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| max_coord_diff(&run(dt), &reference))
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((13.0..19.0).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn verlet_energy_error_is_bounded_without_drift() {
    let s = head_on();
    let out = geometric_grid(0.01, 10.0, 64);
    let traj = integrate(&s, 10.0, &StepperConfig::fixed(Method::VelocityVerlet, 1e-3), &out).unwrap();
    let e0 = energy(&s);
    let errs: Vec<f64> = traj.samples.iter().map(|x| x.report.e_total - e0).collect();
    let max_err = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    // second-order method: error stays at the O(dt^2) level ...
    assert!(max_err < 1e-6, "max energy error {max_err}");
    // ... and does not accumulate once the pair has separated
    let late: Vec<f64> = traj.window(5.0, 10.0).iter().map(|x| x.report.e_total - e0).collect();
    let drift = late.last().unwrap() - late.first().unwrap();
    assert!(drift.abs() <= 1e-8, "secular drift {drift}");
}

#[test]
fn tighter_tolerance_conserves_energy_better() {
    let s = head_on();
    let err = |rel_tol: f64| {
        let cfg = StepperConfig { rel_tol, ..tight() };
        let traj = integrate(&s, 100.0, &cfg, &[]).unwrap();
        (traj.last().report.e_total - energy(&s)).abs()
    };
    let loose = err(1e-6);
    let strict = err(1e-9);
    assert!(loose >= 10.0 * strict, "loose {loose:e} strict {strict:e}");
}

#[test]
fn free_particle_steps_only_limited_by_max_step() {
    let s = ParticleState::from_arrays(0.0, &[[1.0, 2.0, 3.0]], &[[0.5, -0.25, 1.0]]).unwrap();
    let cfg = StepperConfig { max_step: 2.0, ..tight() };
    let traj = integrate(&s, 100.0, &cfg, &[]).unwrap();
    // geometric ramp-up from the initial step, then max_step strides
    let ramp = (cfg.max_step / cfg.initial_step).log(5.0).ceil() as usize;
    assert!(traj.stats.accepted <= 50 + ramp + 1, "{:?}", traj.stats);
    assert_eq!(traj.stats.rejected, 0);
    let end = &traj.last().state;
    let expected = s.positions()[0] + s.velocities()[0] * 100.0;
    assert!((end.positions()[0] - expected).norm() < 1e-12);
}

#[test]
fn adaptive_agrees_with_fine_rk4() {
    let s = cloud(4, 11);
    let out = [10.0, 50.0];
    let dp = integrate(&s, 100.0, &tight(), &out).unwrap();
    let rk = integrate(&s, 100.0, &StepperConfig::fixed(Method::Rk4Fixed, 1e-4), &out).unwrap();
    assert_eq!(dp.times(), rk.times());
    for (a, b) in dp.samples.iter().zip(&rk.samples) {
        let d = max_coord_diff(&a.state, &b.state);
        assert!(d <= 1e-6, "t = {}: {d:e}", a.t());
    }
}

#[test]
fn samples_land_on_requested_times() {
    let s = cloud(3, 1);
    let out = geometric_grid(1.0, 100.0, 16);
    let traj = integrate(&s, 100.0, &tight(), &out).unwrap();
    let mut expected = vec![0.0];
    expected.extend(&out);
    assert_eq!(traj.times(), expected);
    assert_eq!(traj.last().t(), 100.0);
    // quadrature starts exactly at t = 1
    assert!(traj.samples[0].quad.is_none());
    let q1 = traj.samples[1].quad.unwrap();
    assert_eq!((q1.t(), q1.int_e_rel(), q1.int_t_epot()), (1.0, 0.0, 0.0));
    for w in traj.samples[1..].windows(2) {
        let (a, b) = (w[0].quad.unwrap(), w[1].quad.unwrap());
        assert!(b.int_e_rel() >= a.int_e_rel() && b.int_t_epot() > a.int_t_epot());
        assert_eq!(b.t(), w[1].t());
    }
}

#[test]
fn no_quadrature_when_starting_after_one() {
    let s = step_fixed(&head_on(), 2.0, Method::Rk4Fixed).unwrap();
    let traj = integrate(&s, 10.0, &tight(), &[5.0]).unwrap();
    assert!(traj.samples.iter().all(|x| x.quad.is_none()));
}

#[test]
fn output_time_validation() {
    let s = head_on();
    assert!(integrate(&s, 0.0, &tight(), &[]).is_err());
    assert!(integrate(&s, 10.0, &tight(), &[5.0, 2.0]).is_err());
    assert!(integrate(&s, 10.0, &tight(), &[11.0]).is_err());
    let bad = StepperConfig { rel_tol: 0.0, ..tight() };
    assert!(matches!(integrate(&s, 10.0, &bad, &[]), Err(Error::InvalidConfig(_))));
    let bad = StepperConfig { min_step: 1.0, initial_step: 0.1, ..tight() };
    assert!(bad.validate().is_err());
}

#[test]
fn step_underflow_is_reported() {
    let cfg = StepperConfig {
        rel_tol: 1e-16,
        abs_tol: 1e-300,
        min_step: 1e-3,
        initial_step: 1e-2,
        ..tight()
    };
    let s = ParticleState::from_arrays(0.0, &[[0.0; 3], [1e-3, 0.0, 0.0]], &[[0.0; 3]; 2]).unwrap();
    assert!(matches!(
        integrate(&s, 1.0, &cfg, &[]),
        Err(Error::StepUnderflow { .. })
    ));
}

#[test]
fn reversal_basics() {
    let s = cloud(4, 3);
    assert_eq!(time_reverse(&time_reverse(&s)), s);
    let r = time_reverse(&s);
    let (a, b) = (model::energy_report(&s).unwrap(), model::energy_report(&r).unwrap());
    assert_eq!((a.e_kin, a.e_pot, a.inertia), (b.e_kin, b.e_pot, b.inertia));
}

#[test]
fn forward_reverse_forward_round_trip() {
    let s = head_on();
    let fwd = integrate(&s, 10.0, &tight(), &[]).unwrap().last().state.clone();
    let back = integrate(&time_reverse(&fwd), 20.0, &tight(), &[]).unwrap();
    let end = time_reverse(&back.last().state);
    let d = s
        .positions()
        .iter()
        .chain(s.velocities())
        .zip(end.positions().iter().chain(end.velocities()))
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    assert!(d <= 1e-6, "round trip error {d:e}");
}

#[test]
fn long_run_conserves_energy_and_momenta() {
    let out = geometric_grid(1.0, 1000.0, 16);
    for s in [cloud(5, 21), cloud(3, 5), head_on()] {
        let traj = integrate(&s, 1000.0, &tight(), &out).unwrap();
        let e0 = energy(&s);
        let p0 = s.total_momentum();
        let l0 = s.angular_momentum();
        let p_scale: f64 = s.velocities().iter().map(|v| v.norm()).sum::<f64>().max(p0.norm());
        let l_scale: f64 = s
            .positions()
            .iter()
            .zip(s.velocities())
            .map(|(x, v)| x.norm() * v.norm())
            .sum::<f64>()
            .max(l0.norm());
        let floor = 1.0 / (2.0 * e0).sqrt();
        for x in &traj.samples {
            assert!((x.report.e_total - e0).abs() / e0 <= 1e-7, "t = {}", x.t());
            if p_scale > 0.0 {
                assert!((x.state.total_momentum() - p0).norm() <= 1e-9 * p_scale);
            }
            if l_scale > 0.0 {
                assert!((x.state.angular_momentum() - l0).norm() <= 1e-9 * l_scale);
            }
            let vmax = x.state.velocities().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(vmax <= (2.0 * e0).sqrt() * (1.0 + 1e-9));
            assert!(model::min_pairwise_distance(&x.state).unwrap() >= floor * (1.0 - 1e-9));
        }
    }
}

#[test]
fn scaling_symmetry() {
    let lambda: f64 = 4.0;
    let s = cloud(4, 8);
    let scaled = ParticleState::new(
        0.0,
        s.positions().iter().map(|x| x * lambda).collect(),
        s.velocities().iter().map(|v| v / lambda.sqrt()).collect(),
    )
    .unwrap();
    let time_factor = lambda.powf(1.5);
    let out = geometric_grid(1.0, 100.0, 8);
    let out_scaled: Vec<f64> = out.iter().map(|t| t * time_factor).collect();
    let a = integrate(&s, 100.0, &tight(), &out).unwrap();
    let b = integrate(&scaled, 100.0 * time_factor, &tight(), &out_scaled).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((y.t() - x.t() * time_factor).abs() < 1e-9 * y.t().max(1.0));
        let size = x.state.positions().iter().map(|p| p.norm()).fold(0.0, f64::max) * lambda;
        for (p, q) in x.state.positions().iter().zip(y.state.positions()) {
            assert!((q - p * lambda).norm() <= 1e-6 * size, "t = {}", x.t());
        }
    }
}

#[test]
fn polygon_keeps_its_symmetry() {
    let s = scenarios::build(&ScenarioSpec::of_kind(ScenarioKind::RegularPolygon)).unwrap();
    let n = s.len();
    let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::TAU / n as f64);
    let traj = integrate(&s, 100.0, &tight(), &geometric_grid(0.1, 100.0, 8)).unwrap();
    for x in &traj.samples {
        let p = x.state.positions();
        let scale = p[0].norm();
        for k in 0..n {
            assert!((rot * p[k] - p[(k + 1) % n]).norm() <= 1e-8 * scale, "t = {}", x.t());
        }
    }
}

#[test]
fn quadrature_converges_to_fine_fixed_step_run() {
    let s = cloud(3, 2);
    let out = [2.0, 10.0];
    let reference = integrate(&s, 10.0, &StepperConfig::fixed(Method::Rk4Fixed, 2.5e-4), &out).unwrap();
    let max_rel_err = |rel_tol: f64| {
        let cfg = StepperConfig { rel_tol, abs_tol: 1e-3 * rel_tol, ..tight() };
        let run = integrate(&s, 10.0, &cfg, &out).unwrap();
        run.samples[1..]
            .iter()
            .zip(&reference.samples[1..])
            .flat_map(|(a, b)| {
                let (qa, qb) = (a.quad.unwrap(), b.quad.unwrap());
                [
                    (qa.int_e_rel() - qb.int_e_rel()).abs() / qb.int_e_rel(),
                    (qa.int_t_epot() - qb.int_t_epot()).abs() / qb.int_t_epot(),
                ]
            })
            .fold(0.0, f64::max)
    };
    // Simpson panels on the accepted steps: O(h^4) on the step grid
    let default = max_rel_err(1e-9);
    let strict = max_rel_err(1e-12);
    assert!(default < 1e-5, "{default:e}");
    assert!(strict < 1e-8, "{strict:e}");
}

#[test]
fn advance_quadrature_agrees_with_inline_panels() {
    let s = cloud(3, 4);
    let traj = integrate(&s, 4.0, &StepperConfig::fixed(Method::Rk4Fixed, 1e-3), &geometric_grid(1.0, 4.0, 400)).unwrap();
    let mut q = traj.samples[1].quad.unwrap();
    for w in traj.samples[1..].windows(2) {
        q = advance_quadrature(&q, &w[0].state, &w[1].state).unwrap();
    }
    let inline = traj.last().quad.unwrap();
    assert!((q.int_t_epot() - inline.int_t_epot()).abs() < 1e-8 * inline.int_t_epot());
    assert!((q.int_e_rel() - inline.int_e_rel()).abs() < 1e-8 * inline.int_e_rel().max(1.0));
}

#[test]
fn geometric_grid_hits_decades_exactly() {
    let g = geometric_grid(1.0, 1000.0, 16);
    assert_eq!(g.len(), 49);
    assert_eq!(g[0], 1.0);
    assert_eq!(g[16], 10.0);
    assert_eq!(g[32], 100.0);
    assert_eq!(g[48], 1000.0);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
}
