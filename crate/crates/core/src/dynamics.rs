//! Predictor-corrector time integration of the colloid positions.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{evaluate_force_torque, solve_stokes, ColloidMode, FlowData, SolveOptions};
use crate::colloid::{wrap_angle, ColloidState, Vec2};
use crate::error::{Error, Result};
use crate::pointcloud::{colloid_gap, generate_cloud, wall_gap, Geometry, OuterBoundary, RefinementSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// X* = Xⁿ + Δt(3Fⁿ − 3Fⁿ⁻¹)/2, Xⁿ⁺¹ = Xⁿ + Δt(5F* + 8Fⁿ − Fⁿ⁻¹)/12.
    #[default]
    DifferencePc,
    /// Same corrector with the classical predictor Δt(3Fⁿ − Fⁿ⁻¹)/2.
    ClassicalAb2,
}

/// One step of X' = F(X). Without history (first step) a forward-Euler
/// predictor and trapezoidal corrector are used. Returns the new state.
pub fn step(
    x: &[f64],
    f_now: &[f64],
    f_prev: Option<&[f64]>,
    dt: f64,
    scheme: Scheme,
    eval: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let n = x.len();
    match f_prev {
        None => {
            let pred: Vec<f64> = (0..n).map(|i| x[i] + dt * f_now[i]).collect();
            let fs = eval(&pred)?;
            Ok((0..n).map(|i| x[i] + 0.5 * dt * (f_now[i] + fs[i])).collect())
        }
        Some(fp) => {
            let back = match scheme {
                Scheme::DifferencePc => 3.0,
                Scheme::ClassicalAb2 => 1.0,
            };
            let pred: Vec<f64> = (0..n).map(|i| x[i] + dt * (3.0 * f_now[i] - back * fp[i]) / 2.0).collect();
            let fs = eval(&pred)?;
            Ok((0..n)
                .map(|i| x[i] + dt * (5.0 * fs[i] + 8.0 * f_now[i] - fp[i]) / 12.0)
                .collect())
        }
    }
}

/// Integrates X' = F(X) for `steps` steps and returns every state.
pub fn integrate(
    x0: &[f64],
    dt: f64,
    steps: usize,
    scheme: Scheme,
    eval: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![x0.to_vec()];
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..steps {
        let x = out.last().unwrap().clone();
        let f = eval(&x)?;
        let next = step(&x, &f, prev.as_deref(), dt, scheme, eval)?;
        prev = Some(f);
        out.push(next);
    }
    Ok(out)
}

/// Diagnostics of one right-hand-side evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalDiagnostics {
    pub points: usize,
    pub dofs: usize,
    pub iterations: usize,
    pub residual: f64,
    pub max_force: f64,
    pub max_torque: f64,
    pub min_gap: f64,
    pub levels: u32,
    pub seconds: f64,
}

/// Rigid velocities (Ẋ, Θ̇) of every colloid for a configuration.
pub trait RigidBodyRhs {
    fn eval(&mut self, states: &[ColloidState]) -> Result<(Vec<[f64; 3]>, EvalDiagnostics)>;
}

/// F from a free-mode Stokes solve on a freshly generated cloud.
pub struct StokesRhs<'a> {
    pub outer: OuterBoundary,
    pub refinement: RefinementSpec,
    /// Upper bound for automatic refinement; `None` keeps `refinement`.
    pub max_levels: Option<u32>,
    pub order: usize,
    pub nu: f64,
    pub wall_velocity: &'a dyn Fn(Vec2) -> Vec2,
    pub solve: SolveOptions,
    /// Gap guard: gaps below `min_gap_factor · Δx_0` are rejected.
    pub min_gap_factor: f64,
}

/// Smallest colloid-colloid or colloid-wall gap.
pub fn min_gap(outer: &OuterBoundary, states: &[ColloidState], probe: f64) -> f64 {
    let mut g = f64::INFINITY;
    for (i, a) in states.iter().enumerate() {
        g = g.min(wall_gap(outer, a, probe));
        for b in &states[i + 1..] {
            g = g.min(colloid_gap(a, b, probe));
        }
    }
    g
}

impl StokesRhs<'_> {
    /// Adds levels until the gap holds `min_gap_factor` spacings of the third
    /// layer level. In narrower gaps the layers of the two sides merge into an
    /// irregular middle band and the staggered stencils next to it become
    /// ill-conditioned enough to stall the Krylov solver.
    fn refinement_for(&self, gap: f64) -> RefinementSpec {
        let mut spec = self.refinement;
        if let Some(max) = self.max_levels {
            while spec.levels < max && gap < self.min_gap_factor * spec.level_spacing(3) {
                spec.levels += 1;
            }
        }
        spec
    }
}

impl RigidBodyRhs for StokesRhs<'_> {
    fn eval(&mut self, states: &[ColloidState]) -> Result<(Vec<[f64; 3]>, EvalDiagnostics)> {
        let t0 = Instant::now();
        let probe = self.refinement.finest() / 2f64.powi(self.max_levels.unwrap_or(0).saturating_sub(self.refinement.levels) as i32);
        let gap = min_gap(&self.outer, states, probe);
        let spec = self.refinement_for(gap);
        let dx0 = spec.finest();
        if gap < self.min_gap_factor * dx0 {
            return Err(Error::Resolution(format!(
                "gap {gap:.4e} is below {} x the finest spacing {dx0:.4e}; increase the number of refinement levels",
                self.min_gap_factor
            )));
        }
        let geometry = Geometry::new(self.outer.clone(), states.to_vec());
        let mut cloud = generate_cloud(&geometry, &spec, states)?;
        cloud.prepare(self.order)?;
        let zero = |_: Vec2| [0.0, 0.0];
        let data = FlowData {
            nu: self.nu,
            body_force: &zero,
            force_divergence: Some(&|_| 0.0),
            wall_velocity: self.wall_velocity,
        };
        let solved = solve_stokes(&cloud, self.order, &data, states, ColloidMode::Free, &self.solve)?;
        let mut diag = EvalDiagnostics {
            points: cloud.len(),
            dofs: solved.report.dofs,
            iterations: solved.report.iterations,
            residual: solved.report.relative_residual,
            min_gap: gap,
            levels: spec.levels,
            ..EvalDiagnostics::default()
        };
        for (k, s) in states.iter().enumerate() {
            let (f, t) = evaluate_force_torque(&cloud, &solved.stencils, &solved.solution, k, s)?;
            diag.max_force = diag.max_force.max(f[0].hypot(f[1]));
            diag.max_torque = diag.max_torque.max(t.abs());
        }
        let sol = &solved.solution;
        let v = (0..states.len())
            .map(|k| {
                [
                    sol.colloid_velocity[k][0],
                    sol.colloid_velocity[k][1],
                    sol.colloid_angular_velocity[k],
                ]
            })
            .collect();
        diag.seconds = t0.elapsed().as_secs_f64();
        Ok((v, diag))
    }
}

fn pack(states: &[ColloidState]) -> Vec<f64> {
    states
        .iter()
        .flat_map(|s| [s.position[0], s.position[1], s.orientation])
        .collect()
}

fn unpack(template: &[ColloidState], x: &[f64]) -> Vec<ColloidState> {
    template
        .iter()
        .enumerate()
        .map(|(k, s)| ColloidState {
            position: [x[3 * k], x[3 * k + 1]],
            orientation: wrap_angle(x[3 * k + 2]),
            ..s.clone()
        })
        .collect()
}

fn with_velocities(states: &[ColloidState], v: &[[f64; 3]]) -> Vec<ColloidState> {
    states
        .iter()
        .zip(v)
        .map(|(s, v)| ColloidState {
            velocity: [v[0], v[1]],
            angular_velocity: v[2],
            ..s.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunStatus {
    Completed,
    Stopped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    /// States with the velocities evaluated at that configuration.
    pub states: Vec<Vec<ColloidState>>,
    /// Evaluations performed in each step.
    pub diagnostics: Vec<Vec<EvalDiagnostics>>,
    pub status: RunStatus,
}

impl TrajectoryRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,colloid_id,x,y,theta,vx,vy,omega\n");
        for (t, states) in self.times.iter().zip(&self.states) {
            for (k, c) in states.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{:.16e},{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t,
                    c.position[0],
                    c.position[1],
                    c.orientation,
                    c.velocity[0],
                    c.velocity[1],
                    c.angular_velocity
                );
            }
        }
        s
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("step,eval,points,dofs,iters,residual,max_force,max_torque,min_gap,levels,seconds\n");
        for (n, evals) in self.diagnostics.iter().enumerate() {
            for (e, d) in evals.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{n},{e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                    d.points, d.dofs, d.iterations, d.residual, d.max_force, d.max_torque, d.min_gap, d.levels, d.seconds
                );
            }
        }
        s
    }

    pub fn is_complete(&self) -> bool {
        !matches!(self.status, RunStatus::Failed(_))
    }
}

/// Runs `steps` predictor-corrector steps, one new cloud per evaluation.
/// A failing evaluation ends the run with the partial trajectory.
/// `stop` ends the run early once it returns true for an accepted state.
pub fn evolve(
    initial: &[ColloidState],
    dt: f64,
    steps: usize,
    scheme: Scheme,
    rhs: &mut dyn RigidBodyRhs,
    stop: &dyn Fn(&[ColloidState]) -> bool,
) -> TrajectoryRecord {
    let mut record = TrajectoryRecord {
        dt,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
        status: RunStatus::Completed,
    };
    let template = initial.to_vec();
    let (mut f_now, first) = match rhs.eval(initial) {
        Ok(r) => r,
        Err(e) => {
            record.times.push(0.0);
            record.states.push(initial.to_vec());
            record.status = RunStatus::Failed(e.to_string());
            return record;
        }
    };
    record.times.push(0.0);
    record.states.push(with_velocities(initial, &f_now));
    record.diagnostics.push(vec![first]);
    let mut x = pack(initial);
    let mut f_prev: Option<Vec<f64>> = None;
    for n in 0..steps {
        if stop(record.states.last().unwrap()) {
            record.status = RunStatus::Stopped;
            break;
        }
        let mut evals = Vec::new();
        let flat_now: Vec<f64> = f_now.iter().flatten().copied().collect();
        let mut eval = |y: &[f64]| -> Result<Vec<f64>> {
            let (v, d) = rhs.eval(&unpack(&template, y))?;
            evals.push(d);
            Ok(v.iter().flatten().copied().collect())
        };
        let next = step(&x, &flat_now, f_prev.as_deref(), dt, scheme, &mut eval).and_then(|next| {
            let (v, d) = rhs.eval(&unpack(&template, &next))?;
            Ok((next, v, d))
        });
        match next {
            Ok((next, v, d)) => {
                evals.push(d);
                f_prev = Some(flat_now);
                f_now = v;
                x = next;
                let states = unpack(&template, &x);
                record.times.push((n + 1) as f64 * dt);
                record.states.push(with_velocities(&states, &f_now));
                record.diagnostics.push(evals);
            }
            Err(e) => {
                record.diagnostics.push(evals);
                record.status = RunStatus::Failed(e.to_string());
                break;
            }
        }
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(lambda: f64) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |x: &[f64]| Ok(x.iter().map(|v| lambda * v).collect())
    }

    #[test]
    fn constant_rhs_is_exact() {
        let c = 0.7;
        let mut f = |_: &[f64]| Ok(vec![c]);
        let x = step(&[1.0], &[c], Some(&[c]), 0.1, Scheme::DifferencePc, &mut f).unwrap();
        assert!((x[0] - (1.0 + 0.1 * c)).abs() < 1e-15);
        let x = step(&[1.0], &[c], None, 0.1, Scheme::DifferencePc, &mut f).unwrap();
        assert!((x[0] - (1.0 + 0.1 * c)).abs() < 1e-15);
    }

    #[test]
    fn zero_history_keeps_state() {
        let mut f = |_: &[f64]| Ok(vec![0.0, 0.0]);
        let x = step(&[1.0, -2.0], &[0.0, 0.0], Some(&[0.0, 0.0]), 0.1, Scheme::DifferencePc, &mut f).unwrap();
        assert_eq!(x, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_is_third_order_locally() {
        let lambda = 1.0;
        let dt = 0.1;
        let x = step(&[1.0], &[lambda], None, dt, Scheme::DifferencePc, &mut linear(lambda)).unwrap();
        let exact = (lambda * dt).exp();
        assert!(((x[0] - exact) / exact).abs() < 2e-4);
    }

    #[test]
    fn zero_steps_records_initial_state() {
        struct Still;
        impl RigidBodyRhs for Still {
            fn eval(&mut self, s: &[ColloidState]) -> Result<(Vec<[f64; 3]>, EvalDiagnostics)> {
                Ok((vec![[0.0; 3]; s.len()], EvalDiagnostics::default()))
            }
        }
        let init = vec![ColloidState::disk(1.0, [0.0, 0.0])];
        let rec = evolve(&init, 0.1, 0, Scheme::DifferencePc, &mut Still, &|_| false);
        assert_eq!(rec.times, vec![0.0]);
        assert_eq!(rec.states.len(), 1);
        assert!(rec.is_complete());
        assert!(rec.to_csv().starts_with("t,colloid_id,x,y,theta,vx,vy,omega\n0.0000000000000000e0,0,"));
    }

    #[test]
    fn rigid_rotation_field_moves_colloids_on_circles() {
        // F = (−y, x, 1): exact solution is rotation at unit rate
        struct Rot;
        impl RigidBodyRhs for Rot {
            fn eval(&mut self, s: &[ColloidState]) -> Result<(Vec<[f64; 3]>, EvalDiagnostics)> {
                Ok((
                    s.iter().map(|c| [-c.position[1], c.position[0], 1.0]).collect(),
                    EvalDiagnostics::default(),
                ))
            }
        }
        let init = vec![ColloidState::disk(0.1, [1.0, 0.0])];
        let rec = evolve(&init, 0.01, 100, Scheme::ClassicalAb2, &mut Rot, &|_| false);
        let last = &rec.states.last().unwrap()[0];
        assert!((last.position[0] - 1f64.cos()).abs() < 1e-5);
        assert!((last.position[1] - 1f64.sin()).abs() < 1e-5);
        assert!((last.orientation - 1.0).abs() < 1e-12);
        assert_eq!(rec.times.len(), 101);
        assert_eq!(rec.diagnostics[1].len(), 2);
    }

    #[test]
    fn failure_keeps_partial_record() {
        struct FailLater(usize);
        impl RigidBodyRhs for FailLater {
            fn eval(&mut self, s: &[ColloidState]) -> Result<(Vec<[f64; 3]>, EvalDiagnostics)> {
                self.0 += 1;
                if self.0 > 4 {
                    return Err(Error::Resolution("too close".into()));
                }
                Ok((vec![[1.0, 0.0, 0.0]; s.len()], EvalDiagnostics::default()))
            }
        }
        let init = vec![ColloidState::disk(0.1, [0.0, 0.0])];
        let rec = evolve(&init, 0.1, 10, Scheme::DifferencePc, &mut FailLater(0), &|_| false);
        assert!(!rec.is_complete());
        assert_eq!(rec.times.len(), 2);
    }
}
