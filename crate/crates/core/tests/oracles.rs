//! Physical sanity checks on small configurations.

use meshless_stokes::config::{Flow, SimConfig};
use meshless_stokes::scenarios::{run_notch, run_shear, solve_once};
use meshless_stokes::ColloidState;

#[test]
fn quiescent_box_leaves_free_disk_at_rest() {
    let cfg = SimConfig::preset("quiescent").unwrap();
    let run = solve_once(&cfg).unwrap();
    let sol = &run.solve.solution;
    let v = sol.colloid_velocity[0];
    assert!(v[0].hypot(v[1]) < 1e-8, "velocity {v:?}");
    assert!(sol.colloid_angular_velocity[0].abs() < 1e-8);
    let (f, t) = run.forces(&cfg.geometry.colloids).unwrap()[0];
    assert!(f[0].hypot(f[1]) < 1e-6 && t.abs() < 1e-6, "load {f:?} {t}");
}

#[test]
fn centred_disk_in_channel_does_not_drift_or_spin() {
    let cfg = SimConfig::preset("channel").unwrap();
    let run = solve_once(&cfg).unwrap();
    let sol = &run.solve.solution;
    let v = sol.colloid_velocity[0];
    assert!(v[0] > 0.0 && v[0] < 1.0, "axial speed {}", v[0]);
    assert!(v[1].abs() < 1e-6 * v[0], "lateral {}", v[1]);
    assert!(sol.colloid_angular_velocity[0].abs() < 1e-6 * v[0]);
}

#[test]
fn small_disk_in_shear_rotates_with_half_the_vorticity() {
    let mut cfg = SimConfig::preset("shear").unwrap();
    cfg.geometry.colloids = vec![ColloidState::disk(0.5, [0.0, 0.0])];
    let run = solve_once(&cfg).unwrap();
    let sol = &run.solve.solution;
    let v = sol.colloid_velocity[0];
    let rate = -0.5;
    let w = sol.colloid_angular_velocity[0];
    assert!(((w - rate) / rate).abs() < 0.02, "angular velocity {w}");
    assert!(v[0].hypot(v[1]) < 1e-3, "translation {v:?}");
}

fn flat_channel() -> SimConfig {
    let text = include_str!("../configs/notch.toml").replace("depth = 0.5", "depth = 0.0");
    let mut cfg = SimConfig::parse(&text).unwrap();
    cfg.time.steps = 8;
    cfg
}

#[test]
fn flat_notch_reduces_to_channel_transport() {
    let report = run_notch(&flat_channel()).unwrap();
    assert!(report.trajectory.is_complete());
    assert!(report.x_monotone);
}

#[test]
fn centred_square_does_not_drift() {
    let mut cfg = flat_channel();
    cfg.geometry.colloids[0].position[1] = 0.0;
    let report = run_notch(&cfg).unwrap();
    assert!(report.trajectory.is_complete());
    assert!(report.x_monotone);
    let (lo, hi) = cfg.geometry.outer.bounding_box();
    assert!(report.max_y_drift < 1e-3 * (hi[1] - lo[1]), "drift {}", report.max_y_drift);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let cfg = SimConfig::preset("channel").unwrap();
    let a = solve_once(&cfg).unwrap().solve.solution;
    let b = solve_once(&cfg).unwrap().solve.solution;
    assert_eq!(a.colloid_velocity, b.colloid_velocity);
    assert_eq!(a.colloid_angular_velocity, b.colloid_angular_velocity);
}

#[test]
fn reversing_the_shear_retraces_the_pair() {
    let mut cfg = SimConfig::preset("shear").unwrap();
    cfg.time.steps = 4;
    let forward = run_shear(&cfg).unwrap().trajectory;
    assert!(forward.is_complete());
    cfg.geometry.colloids = forward.states.last().unwrap().clone();
    cfg.flow = Flow::Couette { shear_rate: -1.0 };
    let back = run_shear(&cfg).unwrap().trajectory;
    assert!(back.is_complete());
    let (start, end) = (&forward.states[0], back.states.last().unwrap());
    let moved = start
        .iter()
        .zip(forward.states.last().unwrap())
        .map(|(a, b)| (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]))
        .fold(0.0, f64::max);
    assert!(moved > 0.1, "forward run barely moved: {moved}");
    for (a, b) in start.iter().zip(end) {
        let radius = 1.0;
        let err = (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]);
        assert!(err < 5e-2 * radius, "returned within {err}");
    }
}
