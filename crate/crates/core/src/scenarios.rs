//! Benchmark scenarios driven by a [`SimConfig`].

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::{evaluate_force_torque, solve_stokes, ColloidMode, FlowData, StokesSolve};
use crate::colloid::{ColloidState, Shape, Vec2};
use crate::config::{Flow, SimConfig};
use crate::dynamics::{evolve, StokesRhs, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::linsolve::KrylovReport;
use crate::output::{fmt17, krylov_json};
use crate::pointcloud::{generate_cloud, Geometry, OuterBoundary, PointCloud, RefinementSpec};

/// A solved configuration: the cloud and everything computed on it.
pub struct FieldRun {
    pub cloud: PointCloud,
    pub solve: StokesSolve,
}

/// Generates and prepares the cloud for `colloids` inside `outer`.
pub fn build_cloud(outer: &OuterBoundary, colloids: &[ColloidState], spec: &RefinementSpec, m: usize) -> Result<PointCloud> {
    let geometry = Geometry::new(outer.clone(), colloids.to_vec());
    let mut cloud = generate_cloud(&geometry, spec, colloids)?;
    cloud.prepare(m)?;
    Ok(cloud)
}

/// Solves the Stokes problem on a prepared cloud with the given flow.
pub fn solve_on(
    cfg: &SimConfig,
    cloud: &PointCloud,
    outer: &OuterBoundary,
    flow: &Flow,
    colloids: &[ColloidState],
    mode: ColloidMode,
) -> Result<StokesSolve> {
    let wall = flow.wall_velocity(outer);
    let force = flow.body_force(cfg.nu);
    let div = flow.force_divergence();
    let data = FlowData {
        nu: cfg.nu,
        body_force: &force,
        force_divergence: Some(&div),
        wall_velocity: &wall,
    };
    solve_stokes(cloud, cfg.order, &data, colloids, mode, &cfg.solver.options())
}

/// Solves the configuration exactly as written.
pub fn solve_once(cfg: &SimConfig) -> Result<FieldRun> {
    let outer = &cfg.geometry.outer;
    let colloids = &cfg.geometry.colloids;
    let cloud = build_cloud(outer, colloids, &cfg.refinement, cfg.order)?;
    let solve = solve_on(cfg, &cloud, outer, &cfg.flow, colloids, cfg.colloid_mode)?;
    Ok(FieldRun { cloud, solve })
}

impl FieldRun {
    pub fn summary(&self, scenario: &str, case: &str) -> Value {
        let mut v = json!({
            "scenario": scenario,
            "case": case,
            "points": self.cloud.len(),
            "krylov": krylov_json(&self.solve.report),
        });
        let sol = &self.solve.solution;
        if !sol.colloid_velocity.is_empty() {
            v["colloid_velocity"] = json!(sol.colloid_velocity);
            v["colloid_angular_velocity"] = json!(sol.colloid_angular_velocity);
        }
        v
    }

    /// Force and torque on every colloid.
    pub fn forces(&self, colloids: &[ColloidState]) -> Result<Vec<(Vec2, f64)>> {
        colloids
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut c = *c;
                c.velocity = self.solve.solution.colloid_velocity[k];
                c.angular_velocity = self.solve.solution.colloid_angular_velocity[k];
                evaluate_force_torque(&self.cloud, &self.solve.stencils, &self.solve.solution, k, &c)
            })
            .collect()
    }
}

/// Discrete RMS errors of velocity (vector norm) and pressure over all
/// points. Both pressures have their point mean removed first.
pub fn rms_errors(cloud: &PointCloud, solve: &StokesSolve, exact: &dyn Fn(Vec2) -> (Vec2, f64)) -> (f64, f64) {
    let n = cloud.len() as f64;
    let ex: Vec<(Vec2, f64)> = cloud.positions.iter().map(|&x| exact(x)).collect();
    let sol = &solve.solution;
    let mean_ex = ex.iter().map(|e| e.1).sum::<f64>() / n;
    let mean_p = sol.pressure.iter().sum::<f64>() / n;
    let mut eu = 0.0;
    let mut ep = 0.0;
    for (i, (u, p)) in ex.iter().enumerate() {
        let d = [sol.velocity[i][0] - u[0], sol.velocity[i][1] - u[1]];
        eu += d[0] * d[0] + d[1] * d[1];
        let dp = (sol.pressure[i] - mean_p) - (p - mean_ex);
        ep += dp * dp;
    }
    ((eu / n).sqrt(), (ep / n).sqrt())
}

/// Least-squares slope of −log(err) against log(N).
pub fn fitted_order(ns: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub points: usize,
    pub err_u: f64,
    pub err_p: f64,
    pub report: KrylovReport,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub order: usize,
    pub rows: Vec<ConvergenceRow>,
    pub order_u: f64,
    pub order_p: f64,
}

impl ConvergenceReport {
    /// `N,h,err_u,err_p` rows followed by a `fit` row holding the orders.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,h,err_u,err_p\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.n, fmt17(r.h), fmt17(r.err_u), fmt17(r.err_p));
        }
        let _ = writeln!(s, "fit,,{},{}", fmt17(self.order_u), fmt17(self.order_p));
        s
    }

    pub fn summary(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "scenario": "converge",
                    "order": self.order,
                    "N": r.n,
                    "points": r.points,
                    "err_u": r.err_u,
                    "err_p": r.err_p,
                    "krylov": krylov_json(&r.report),
                })
            })
            .collect();
        out.push(json!({
            "scenario": "converge",
            "order": self.order,
            "fitted_order_u": self.order_u,
            "fitted_order_p": self.order_p,
        }));
        out
    }
}

/// Manufactured solution on the unit square at every configured N.
pub fn run_convergence(cfg: &SimConfig) -> Result<ConvergenceReport> {
    let ns = &cfg.converge.resolutions;
    if ns.len() < 3 {
        return Err(Error::Config("converge.resolutions needs at least 3 entries".into()));
    }
    let outer = OuterBoundary::unit_square();
    let flow = Flow::Manufactured;
    let exact = flow.exact(&outer, cfg.nu).expect("manufactured flow has an exact field");
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let h = 1.0 / n as f64;
        let spec = RefinementSpec::new(h, 1, 1)?;
        let cloud = build_cloud(&outer, &[], &spec, cfg.order)?;
        let solve = solve_on(cfg, &cloud, &outer, &flow, &[], ColloidMode::Prescribed)?;
        let (err_u, err_p) = rms_errors(&cloud, &solve, &exact);
        rows.push(ConvergenceRow {
            n,
            h,
            points: cloud.len(),
            err_u,
            err_p,
            report: solve.report,
        });
    }
    let nf: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let eu: Vec<f64> = rows.iter().map(|r| r.err_u).collect();
    let ep: Vec<f64> = rows.iter().map(|r| r.err_p).collect();
    Ok(ConvergenceReport {
        order: cfg.order,
        order_u: fitted_order(&nf, &eu),
        order_p: fitted_order(&nf, &ep),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LubricationRow {
    pub gap: f64,
    pub levels: u32,
    pub points: usize,
    pub force: Vec2,
    pub force_magnitude: f64,
    pub torque: f64,
    pub iterations: usize,
}

pub struct CylinderReport {
    /// The configured (eccentric) case.
    pub field: FieldRun,
    /// RMS error of u_θ against A r + B/r in the concentric case.
    pub couette_rms: f64,
    /// RMS velocity and pressure errors when both walls rotate together.
    pub rigid_rms: (f64, f64),
    pub lubrication: Vec<LubricationRow>,
}

impl CylinderReport {
    /// Force magnitude strictly increases as the gap shrinks.
    pub fn monotone(&self) -> bool {
        self.lubrication.windows(2).all(|w| w[1].force_magnitude > w[0].force_magnitude)
    }

    pub fn lubrication_csv(&self) -> String {
        let mut s = String::from("gap,levels,points,fx,fy,force,torque,iters\n");
        for r in &self.lubrication {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt17(r.gap),
                r.levels,
                r.points,
                fmt17(r.force[0]),
                fmt17(r.force[1]),
                fmt17(r.force_magnitude),
                fmt17(r.torque),
                r.iterations
            );
        }
        s
    }

    pub fn summary(&self) -> Vec<Value> {
        let mut out = vec![self.field.summary("cylinders", "configured")];
        out.push(json!({
            "scenario": "cylinders",
            "case": "concentric",
            "couette_rms_u_theta": self.couette_rms,
            "rigid_rotation_rms_u": self.rigid_rms.0,
            "rigid_rotation_rms_p": self.rigid_rms.1,
        }));
        for r in &self.lubrication {
            let mut v = serde_json::to_value(r).expect("row serializes");
            v["scenario"] = json!("cylinders");
            v["case"] = json!("lubrication");
            out.push(v);
        }
        out.push(json!({"scenario": "cylinders", "case": "lubrication", "monotone": self.monotone()}));
        out
    }
}

/// Smallest level count at or above `spec.levels` whose finest spacing
/// fits `across` times into `gap`.
pub fn levels_for_gap(spec: &RefinementSpec, gap: f64, across: f64) -> RefinementSpec {
    let mut s = *spec;
    while s.finest() * across > gap * (1.0 + 1e-9) {
        s.levels += 1;
    }
    s
}

struct CylinderSetup {
    center: Vec2,
    r1: f64,
    w1: f64,
    inner: ColloidState,
    flow: Flow,
}

fn cylinder_setup(cfg: &SimConfig) -> Result<CylinderSetup> {
    let OuterBoundary::Circle { center, radius: r1 } = cfg.geometry.outer else {
        return Err(Error::Config("cylinders needs a circular outer boundary".into()));
    };
    let Flow::Rotation { omega: w1, .. } = cfg.flow else {
        return Err(Error::Config("cylinders needs flow.kind = \"rotation\"".into()));
    };
    let inner = match cfg.geometry.colloids.as_slice() {
        [c @ ColloidState { shape: Shape::Disk { .. }, .. }] => *c,
        _ => return Err(Error::Config("cylinders needs exactly one disk colloid".into())),
    };
    Ok(CylinderSetup {
        center,
        r1,
        w1,
        inner,
        flow: Flow::Rotation { omega: w1, center },
    })
}

/// Concentric oracles: RMS error of u_θ against A r + B/r, and RMS velocity
/// and pressure errors when both walls rotate together.
pub fn run_concentric(cfg: &SimConfig) -> Result<(f64, (f64, f64))> {
    let CylinderSetup { center, r1, w1, inner, flow } = cylinder_setup(cfg)?;
    let outer = &cfg.geometry.outer;
    let r2 = inner.shape.feature_size();
    let w2 = inner.angular_velocity;
    let mut concentric = inner;
    concentric.position = center;
    concentric.velocity = [0.0, 0.0];
    let cloud = build_cloud(outer, &[concentric], &cfg.refinement, cfg.order)?;
    let solve = solve_on(cfg, &cloud, outer, &flow, &[concentric], ColloidMode::Prescribed)?;
    let a = (w1 * r1 * r1 - w2 * r2 * r2) / (r1 * r1 - r2 * r2);
    let b = (w2 - w1) * r1 * r1 * r2 * r2 / (r1 * r1 - r2 * r2);
    let mut sum = 0.0;
    for (i, x) in cloud.positions.iter().enumerate() {
        let d = [x[0] - center[0], x[1] - center[1]];
        let r = d[0].hypot(d[1]);
        let u = solve.solution.velocity[i];
        let ut = (d[0] * u[1] - d[1] * u[0]) / r;
        let e = ut - (a * r + b / r);
        sum += e * e;
    }
    let couette_rms = (sum / cloud.len() as f64).sqrt();

    concentric.angular_velocity = w1;
    let rigid = solve_on(cfg, &cloud, outer, &flow, &[concentric], ColloidMode::Prescribed)?;
    let rigid_rms = rms_errors(&cloud, &rigid, &|x| ([-w1 * (x[1] - center[1]), w1 * (x[0] - center[0])], 0.0));
    Ok((couette_rms, rigid_rms))
}

/// Force on the inner cylinder as the configured gap is halved
/// `cylinders.gap_halvings` times, refining so that the gap always holds
/// `cylinders.points_across_gap` finest spacings.
pub fn run_lubrication(cfg: &SimConfig) -> Result<Vec<LubricationRow>> {
    let CylinderSetup { center, r1, inner, flow, .. } = cylinder_setup(cfg)?;
    let outer = &cfg.geometry.outer;
    let r2 = inner.shape.feature_size();
    let offset = [inner.position[0] - center[0], inner.position[1] - center[1]];
    let e0 = offset[0].hypot(offset[1]);
    let dir = if e0 > 0.0 { [offset[0] / e0, offset[1] / e0] } else { [1.0, 0.0] };
    let gap0 = r1 - r2 - e0;
    let mut rows = Vec::new();
    for k in 0..=cfg.cylinders.gap_halvings {
        let gap = gap0 / 2f64.powi(k as i32);
        let e = r1 - r2 - gap;
        let mut c = inner;
        c.position = [center[0] + e * dir[0], center[1] + e * dir[1]];
        let spec = levels_for_gap(&cfg.refinement, gap, cfg.cylinders.points_across_gap);
        let cloud = build_cloud(outer, &[c], &spec, cfg.order)?;
        let solve = solve_on(cfg, &cloud, outer, &flow, &[c], ColloidMode::Prescribed)?;
        let (force, torque) = evaluate_force_torque(&cloud, &solve.stencils, &solve.solution, 0, &c)?;
        rows.push(LubricationRow {
            gap,
            levels: spec.levels,
            points: cloud.len(),
            force,
            force_magnitude: force[0].hypot(force[1]),
            torque,
            iterations: solve.report.iterations,
        });
    }
    Ok(rows)
}

/// Rotating cylinders: the outer wall spins with the rotation flow, the
/// inner cylinder (first colloid) spins at its prescribed rate.
pub fn run_cylinders(cfg: &SimConfig) -> Result<CylinderReport> {
    let setup = cylinder_setup(cfg)?;
    let outer = &cfg.geometry.outer;
    let field = {
        let cloud = build_cloud(outer, &[setup.inner], &cfg.refinement, cfg.order)?;
        let solve = solve_on(cfg, &cloud, outer, &setup.flow, &[setup.inner], ColloidMode::Prescribed)?;
        FieldRun { cloud, solve }
    };
    let (couette_rms, rigid_rms) = run_concentric(cfg)?;
    Ok(CylinderReport {
        field,
        couette_rms,
        rigid_rms,
        lubrication: run_lubrication(cfg)?,
    })
}

/// Force and torque on the colloid as (Fx, Fy, T).
pub type Drag = [f64; 3];

fn drag_norm(d: &Drag) -> f64 {
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub struct ChannelReport {
    pub u_max: f64,
    pub colloid_speed: f64,
    pub zero: Drag,
    pub drag_u: Drag,
    pub drag_v: Drag,
    pub drag_uv: Drag,
    /// Free-mode rigid velocities (Ẋ, Ẏ, Θ̇).
    pub drift: [f64; 3],
    /// Prescribed-mode drag with the free-mode velocities substituted.
    pub balance: Drag,
    /// Force and torque left on the colloid by the free-mode solve.
    pub free_residual: Drag,
    pub free: FieldRun,
}

impl ChannelReport {
    pub fn linearity_residual(&self) -> f64 {
        let d: Drag = std::array::from_fn(|i| self.drag_uv[i] - self.drag_u[i] - self.drag_v[i]);
        drag_norm(&d) / drag_norm(&self.drag_uv)
    }

    /// ‖drag(U, V_drift)‖ relative to the drag on the colloid held at rest.
    pub fn balance_residual(&self) -> f64 {
        drag_norm(&self.balance) / drag_norm(&self.drag_u)
    }

    pub fn free_residual_relative(&self) -> f64 {
        drag_norm(&self.free_residual) / drag_norm(&self.drag_u)
    }

    pub fn summary(&self) -> Vec<Value> {
        vec![
            self.free.summary("channel", "free"),
            json!({
                "scenario": "channel",
                "u_max": self.u_max,
                "colloid_speed": self.colloid_speed,
                "drag_zero": self.zero,
                "drag_u": self.drag_u,
                "drag_v": self.drag_v,
                "drag_uv": self.drag_uv,
                "linearity_residual": self.linearity_residual(),
                "drift": self.drift,
                "balance_drag": self.balance,
                "balance_residual": self.balance_residual(),
                "free_force_residual": self.free_residual_relative(),
            }),
        ]
    }
}

/// Disk in a Poiseuille channel: prescribed-mode drags, linearity, free drift
/// and the drag balance at the drift velocity.
pub fn run_channel(cfg: &SimConfig) -> Result<ChannelReport> {
    let Flow::Poiseuille { u_max } = cfg.flow else {
        return Err(Error::Config("channel needs flow.kind = \"poiseuille\"".into()));
    };
    let base = match cfg.geometry.colloids.as_slice() {
        [c] => *c,
        _ => return Err(Error::Config("channel needs exactly one colloid".into())),
    };
    let outer = &cfg.geometry.outer;
    let v = cfg.channel.colloid_speed;
    let cloud = build_cloud(outer, &[base], &cfg.refinement, cfg.order)?;
    let drag = |u: f64, vel: [f64; 3]| -> Result<Drag> {
        let mut c = base;
        c.velocity = [vel[0], vel[1]];
        c.angular_velocity = vel[2];
        let flow = Flow::Poiseuille { u_max: u };
        let solve = solve_on(cfg, &cloud, outer, &flow, &[c], ColloidMode::Prescribed)?;
        let (f, t) = evaluate_force_torque(&cloud, &solve.stencils, &solve.solution, 0, &c)?;
        Ok([f[0], f[1], t])
    };
    let zero = drag(0.0, [0.0; 3])?;
    let drag_u = drag(u_max, [0.0; 3])?;
    let drag_v = drag(0.0, [v, 0.0, 0.0])?;
    let drag_uv = drag(u_max, [v, 0.0, 0.0])?;

    let mut c = base;
    c.velocity = [0.0, 0.0];
    c.angular_velocity = 0.0;
    let solve = solve_on(cfg, &cloud, outer, &cfg.flow, &[c], ColloidMode::Free)?;
    let sol = &solve.solution;
    let drift = [sol.colloid_velocity[0][0], sol.colloid_velocity[0][1], sol.colloid_angular_velocity[0]];
    let free = FieldRun { cloud, solve };
    let (f, t) = free.forces(&[c])?[0];
    let free_residual = [f[0], f[1], t];
    let FieldRun { cloud, solve } = free;
    let balance = {
        let mut c = base;
        c.velocity = [drift[0], drift[1]];
        c.angular_velocity = drift[2];
        let flow = Flow::Poiseuille { u_max };
        let s = solve_on(cfg, &cloud, outer, &flow, &[c], ColloidMode::Prescribed)?;
        let (f, t) = evaluate_force_torque(&cloud, &s.stencils, &s.solution, 0, &c)?;
        [f[0], f[1], t]
    };
    Ok(ChannelReport {
        u_max,
        colloid_speed: v,
        zero,
        drag_u,
        drag_v,
        drag_uv,
        drift,
        balance,
        free_residual,
        free: FieldRun { cloud, solve },
    })
}

/// Builds the colloid right-hand side for a time-dependent run.
pub fn stokes_rhs<'a>(cfg: &SimConfig, wall: &'a dyn Fn(Vec2) -> Vec2) -> StokesRhs<'a> {
    StokesRhs {
        outer: cfg.geometry.outer.clone(),
        refinement: cfg.refinement,
        max_levels: cfg.time.max_levels,
        order: cfg.order,
        nu: cfg.nu,
        wall_velocity: wall,
        solve: cfg.solver.options(),
        min_gap_factor: cfg.time.min_gap_factor,
    }
}

fn free_colloids(cfg: &SimConfig) -> Vec<ColloidState> {
    cfg.geometry
        .colloids
        .iter()
        .map(|c| ColloidState {
            velocity: [0.0, 0.0],
            angular_velocity: 0.0,
            ..*c
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    /// The pair passes and then separates monotonically in x.
    Open,
    /// The relative angle sweeps a full turn.
    Closed,
    /// Neither happened within the run.
    Undetermined,
}

/// Classifies a two-colloid trajectory from the separation X₂ − X₁.
/// Returns the class and the unwrapped relative angle swept.
pub fn classify_pair(record: &TrajectoryRecord) -> (PairClass, f64) {
    let d: Vec<Vec2> = record
        .states
        .iter()
        .map(|s| [s[1].position[0] - s[0].position[0], s[1].position[1] - s[0].position[1]])
        .collect();
    let mut swept = 0.0;
    for w in d.windows(2) {
        let a0 = w[0][1].atan2(w[0][0]);
        let a1 = w[1][1].atan2(w[1][0]);
        let mut da = a1 - a0;
        if da > TAU / 2.0 {
            da -= TAU;
        } else if da < -TAU / 2.0 {
            da += TAU;
        }
        swept += da;
    }
    if swept.abs() >= TAU {
        return (PairClass::Closed, swept);
    }
    let dist: Vec<f64> = d.iter().map(|v| v[0].hypot(v[1])).collect();
    let closest = dist
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let passed = d.first().zip(d.last()).is_some_and(|(a, b)| a[0] * b[0] < 0.0);
    let after = &d[closest..];
    let separating = after.len() >= 3 && after.windows(2).all(|w| w[1][0].abs() >= w[0][0].abs());
    if passed && separating {
        (PairClass::Open, swept)
    } else {
        (PairClass::Undetermined, swept)
    }
}

pub struct ShearReport {
    pub trajectory: TrajectoryRecord,
    pub class: PairClass,
    pub swept_angle: f64,
    /// max_t ‖X₁ + X₂ − 2c‖ with c the box centre.
    pub max_antisymmetry: f64,
    pub max_force_residual: f64,
    pub max_torque_residual: f64,
}

impl ShearReport {
    pub fn summary(&self) -> Vec<Value> {
        vec![json!({
            "scenario": "shear",
            "status": self.trajectory.status,
            "steps": self.trajectory.times.len() - 1,
            "class": self.class,
            "swept_angle": self.swept_angle,
            "max_antisymmetry": self.max_antisymmetry,
            "max_force_residual": self.max_force_residual,
            "max_torque_residual": self.max_torque_residual,
            "max_iterations": max_iterations(&self.trajectory),
        })]
    }
}

fn max_iterations(record: &TrajectoryRecord) -> usize {
    record.diagnostics.iter().flatten().map(|d| d.iterations).max().unwrap_or(0)
}

fn max_residuals(record: &TrajectoryRecord) -> (f64, f64) {
    record
        .diagnostics
        .iter()
        .flatten()
        .fold((0.0, 0.0), |acc, d| (acc.0.max(d.max_force), acc.1.max(d.max_torque)))
}

/// True once the configured wall-clock budget, if any, is spent.
fn wall_budget(cfg: &SimConfig) -> impl Fn() -> bool {
    let start = std::time::Instant::now();
    let budget = cfg.time.wall_seconds;
    move || budget.is_some_and(|b| start.elapsed().as_secs_f64() >= b)
}

/// Two free colloids in the imposed shear flow.
pub fn run_shear(cfg: &SimConfig) -> Result<ShearReport> {
    if !matches!(cfg.flow, Flow::Couette { .. }) {
        return Err(Error::Config("shear needs flow.kind = \"couette\"".into()));
    }
    let init = free_colloids(cfg);
    if init.len() != 2 {
        return Err(Error::Config("shear needs exactly two colloids".into()));
    }
    let wall = cfg.flow.wall_velocity(&cfg.geometry.outer);
    let mut rhs = stokes_rhs(cfg, &wall);
    let separation = |s: &[ColloidState]| [s[1].position[0] - s[0].position[0], s[1].position[1] - s[0].position[1]];
    let last = std::cell::Cell::new(separation(&init));
    let swept = std::cell::Cell::new(0.0);
    let out_of_time = wall_budget(cfg);
    let full_turn = |s: &[ColloidState]| {
        let (a, b) = (last.get(), separation(s));
        swept.set(swept.get() + (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]));
        last.set(b);
        swept.get().abs() >= TAU || out_of_time()
    };
    let trajectory = evolve(&init, cfg.time.dt, cfg.time.steps, cfg.time.scheme, &mut rhs, &full_turn);
    let (lo, hi) = cfg.geometry.outer.bounding_box();
    let c = [lo[0] + hi[0], lo[1] + hi[1]];
    let max_antisymmetry = trajectory
        .states
        .iter()
        .map(|s| (s[0].position[0] + s[1].position[0] - c[0]).hypot(s[0].position[1] + s[1].position[1] - c[1]))
        .fold(0.0, f64::max);
    let (class, swept_angle) = classify_pair(&trajectory);
    let (max_force_residual, max_torque_residual) = max_residuals(&trajectory);
    Ok(ShearReport {
        trajectory,
        class,
        swept_angle,
        max_antisymmetry,
        max_force_residual,
        max_torque_residual,
    })
}

pub struct NotchReport {
    pub trajectory: TrajectoryRecord,
    pub exited: bool,
    pub x_monotone: bool,
    pub max_y_drift: f64,
    pub max_force_residual: f64,
    pub max_torque_residual: f64,
}

impl NotchReport {
    pub fn summary(&self) -> Vec<Value> {
        vec![json!({
            "scenario": "notch",
            "status": self.trajectory.status,
            "steps": self.trajectory.times.len() - 1,
            "exited": self.exited,
            "x_monotone": self.x_monotone,
            "max_y_drift": self.max_y_drift,
            "max_force_residual": self.max_force_residual,
            "max_torque_residual": self.max_torque_residual,
            "max_iterations": max_iterations(&self.trajectory),
        })]
    }
}

/// A single free colloid carried by the Poiseuille flow until it passes
/// `notch.exit_x` or the step budget runs out.
pub fn run_notch(cfg: &SimConfig) -> Result<NotchReport> {
    if !matches!(cfg.flow, Flow::Poiseuille { .. }) {
        return Err(Error::Config("notch needs flow.kind = \"poiseuille\"".into()));
    }
    let init = free_colloids(cfg);
    if init.len() != 1 {
        return Err(Error::Config("notch needs exactly one colloid".into()));
    }
    let exit = cfg.notch.exit_x.unwrap_or(f64::INFINITY);
    let wall = cfg.flow.wall_velocity(&cfg.geometry.outer);
    let mut rhs = stokes_rhs(cfg, &wall);
    let out_of_time = wall_budget(cfg);
    let stop = |s: &[ColloidState]| s[0].position[0] > exit || out_of_time();
    let trajectory = evolve(&init, cfg.time.dt, cfg.time.steps, cfg.time.scheme, &mut rhs, &stop);
    let xs: Vec<f64> = trajectory.states.iter().map(|s| s[0].position[0]).collect();
    let y0 = init[0].position[1];
    let max_y_drift = trajectory
        .states
        .iter()
        .map(|s| (s[0].position[1] - y0).abs())
        .fold(0.0, f64::max);
    let (max_force_residual, max_torque_residual) = max_residuals(&trajectory);
    Ok(NotchReport {
        exited: xs.last().is_some_and(|&x| x > exit),
        x_monotone: xs.windows(2).all(|w| w[1] > w[0]),
        max_y_drift,
        max_force_residual,
        max_torque_residual,
        trajectory,
    })
}
