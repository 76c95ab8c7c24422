//! Monolithic block system [K G; B L] for velocity, rigid-body velocities,
//! pressure and the zero-mean multiplier.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colloid::{ColloidState, Vec2};
use crate::error::{Error, Result};
use crate::linsolve::{solve_block_system, AmgOptions, BlockSolveOptions, GmresOptions, KrylovReport, SparseMatrix, Triplets};
use crate::pointcloud::{PointCloud, Region};
use crate::stencils::{curlcurl_stencil, staggered_stencil, standard_mls_stencil, stress_stencil, MlsOperator, Stencil, StressStencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColloidMode {
    /// Rigid velocities are given; boundary rows are Dirichlet data.
    #[default]
    Prescribed,
    /// Rigid velocities are unknowns closed by zero force and torque.
    Free,
}

/// Index layout. The ũ block holds 2 velocity components per point followed
/// (in free mode) by 3 rigid DOFs per colloid; the p block holds one pressure
/// per point followed by the multiplier λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub points: usize,
    pub colloids: usize,
    pub mode: ColloidMode,
}

impl DofMap {
    pub fn velocity(&self, point: usize, component: usize) -> usize {
        2 * point + component
    }

    /// Rigid DOF `component` (0, 1: Ẋ; 2: Θ̇) of colloid `k`, free mode only.
    pub fn rigid(&self, k: usize, component: usize) -> Option<usize> {
        (self.mode == ColloidMode::Free).then(|| 2 * self.points + 3 * k + component)
    }

    pub fn pressure(&self, point: usize) -> usize {
        point
    }

    pub fn multiplier(&self) -> usize {
        self.points
    }

    pub fn n_u(&self) -> usize {
        2 * self.points + if self.mode == ColloidMode::Free { 3 * self.colloids } else { 0 }
    }

    pub fn n_p(&self) -> usize {
        self.points + 1
    }

    pub fn total(&self) -> usize {
        self.n_u() + self.n_p()
    }

    pub fn rigid_dofs(&self) -> Vec<usize> {
        (0..self.colloids)
            .flat_map(|k| (0..3).filter_map(move |c| self.rigid(k, c)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub k: SparseMatrix,
    pub g: SparseMatrix,
    pub b: SparseMatrix,
    pub l: SparseMatrix,
    pub f: Vec<f64>,
    pub rhs_p: Vec<f64>,
}

impl BlockSystem {
    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.extend_from_slice(&self.rhs_p);
        r
    }

    /// Writes K.mtx, G.mtx, B.mtx and L.mtx into `dir`.
    pub fn export_matrix_market(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in [("K", &self.k), ("G", &self.g), ("B", &self.b), ("L", &self.l)] {
            let path = dir.join(format!("{name}.mtx"));
            fs::write(&path, m.to_matrix_market()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub velocity: Vec<Vec2>,
    pub pressure: Vec<f64>,
    pub colloid_velocity: Vec<Vec2>,
    pub colloid_angular_velocity: Vec<f64>,
    pub multiplier: f64,
}

impl FieldSolution {
    pub fn flat_velocity(&self) -> Vec<f64> {
        self.velocity.iter().flatten().copied().collect()
    }
}

/// Body force, its divergence and the outer-wall velocity.
pub struct FlowData<'a> {
    pub nu: f64,
    pub body_force: &'a dyn Fn(Vec2) -> Vec2,
    /// Analytic ∇·f; when absent it is computed with MLS gradient stencils.
    pub force_divergence: Option<&'a dyn Fn(Vec2) -> f64>,
    pub wall_velocity: &'a dyn Fn(Vec2) -> Vec2,
}

/// All stencils needed by the assembly.
#[derive(Debug, Clone)]
pub struct StencilSet {
    pub order: usize,
    pub nu: f64,
    pub curlcurl: Vec<Stencil>,
    /// Unconstrained staggered gradient; `None` at boundary points.
    pub gradient: Vec<Option<Stencil>>,
    /// Staggered Laplacian, Neumann-constrained at boundary points.
    pub laplacian: Vec<Stencil>,
    /// Stress reconstruction at colloid surface points.
    pub stress: Vec<Option<StressStencil>>,
}

pub fn build_stencils(cloud: &PointCloud, m: usize, nu: f64) -> Result<StencilSet> {
    let n = cloud.len();
    let mut set = StencilSet {
        order: m,
        nu,
        curlcurl: Vec::with_capacity(n),
        gradient: Vec::with_capacity(n),
        laplacian: Vec::with_capacity(n),
        stress: Vec::with_capacity(n),
    };
    for i in 0..n {
        let boundary = cloud.regions[i].is_boundary();
        set.curlcurl.push(curlcurl_stencil(i, cloud, m)?);
        let (grad, lap) = staggered_stencil(i, cloud, m, boundary)?;
        set.gradient.push((!boundary).then_some(grad));
        set.laplacian.push(lap);
        set.stress.push(match cloud.regions[i] {
            Region::Colloid(_) => Some(stress_stencil(i, cloud, m, nu)?),
            _ => None,
        });
    }
    Ok(set)
}

/// Δs_j = half the distance to the two neighbouring points of a closed curve.
pub fn arclength_weights(points: &[Vec2]) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Geometry(format!("closed boundary needs at least 3 points, got {n}")));
    }
    let dist = |a: Vec2, b: Vec2| (a[0] - b[0]).hypot(a[1] - b[1]);
    Ok((0..n)
        .map(|j| 0.5 * (dist(points[(j + n - 1) % n], points[j]) + dist(points[j], points[(j + 1) % n])))
        .collect())
}

/// Row scale for Dirichlet velocity rows, ν/ε_i².
fn dirichlet_scale(cloud: &PointCloud, nu: f64, i: usize) -> f64 {
    nu / (cloud.support[i] * cloud.support[i])
}

fn force_divergences(cloud: &PointCloud, m: usize, data: &FlowData) -> Result<Vec<f64>> {
    if let Some(div) = data.force_divergence {
        return Ok(cloud.positions.iter().map(|&x| div(x)).collect());
    }
    let f: Vec<Vec2> = cloud.positions.iter().map(|&x| (data.body_force)(x)).collect();
    if f.iter().all(|v| v[0] == 0.0 && v[1] == 0.0) {
        return Ok(vec![0.0; cloud.len()]);
    }
    let mut out = Vec::with_capacity(cloud.len());
    for i in 0..cloud.len() {
        let s = standard_mls_stencil(i, cloud, m, MlsOperator::Gradient)?;
        let d: f64 = s
            .points
            .iter()
            .enumerate()
            .map(|(k, &p)| s.rows[0][k] * f[p][0] + s.rows[1][k] * f[p][1])
            .sum();
        out.push(d);
    }
    Ok(out)
}

pub fn assemble(
    cloud: &PointCloud,
    stencils: &StencilSet,
    data: &FlowData,
    colloids: &[ColloidState],
    mode: ColloidMode,
) -> Result<(BlockSystem, DofMap)> {
    let n = cloud.len();
    let nu = data.nu;
    let dofs = DofMap {
        points: n,
        colloids: colloids.len(),
        mode,
    };
    if cloud.colloid_ranges.len() != colloids.len() {
        return Err(Error::Assembly(format!(
            "cloud has {} colloid surfaces but {} colloid states were given",
            cloud.colloid_ranges.len(),
            colloids.len()
        )));
    }
    if mode == ColloidMode::Free {
        if let Some(k) = cloud.colloid_ranges.iter().position(|r| r.is_empty()) {
            return Err(Error::Assembly(format!("free colloid {k} has no boundary points")));
        }
    }
    let (nu_dofs, np_dofs) = (dofs.n_u(), dofs.n_p());
    let mut k = Triplets::new(nu_dofs, nu_dofs);
    let mut g = Triplets::new(nu_dofs, np_dofs);
    let mut b = Triplets::new(np_dofs, nu_dofs);
    let mut l = Triplets::new(np_dofs, np_dofs);
    let mut f = vec![0.0; nu_dofs];
    let mut rhs_p = vec![0.0; np_dofs];
    let div_f = force_divergences(cloud, stencils.order, data)?;

    for i in 0..n {
        let x = cloud.positions[i];
        let fi = (data.body_force)(x);
        match cloud.regions[i] {
            Region::Interior => {
                let cc = &stencils.curlcurl[i];
                let grad = stencils.gradient[i].as_ref().ok_or_else(|| {
                    Error::Assembly(format!("missing staggered gradient at interior point {i}"))
                })?;
                for c in 0..2 {
                    let row = dofs.velocity(i, c);
                    for (q, &p) in cc.points.iter().enumerate() {
                        for d in 0..2 {
                            k.push(row, dofs.velocity(p, d), nu * cc.rows[c][2 * q + d]);
                        }
                    }
                    for (q, &p) in grad.points.iter().enumerate() {
                        g.push(row, dofs.pressure(p), grad.rows[c][q]);
                    }
                    f[row] = fi[c];
                }
            }
            Region::OuterWall => {
                let s = dirichlet_scale(cloud, nu, i);
                let w = (data.wall_velocity)(x);
                for c in 0..2 {
                    let row = dofs.velocity(i, c);
                    k.push(row, row, s);
                    f[row] = s * w[c];
                }
            }
            Region::Colloid(ci) => {
                let s = dirichlet_scale(cloud, nu, i);
                let state = &colloids[ci];
                for c in 0..2 {
                    let row = dofs.velocity(i, c);
                    k.push(row, row, s);
                }
                match mode {
                    ColloidMode::Prescribed => {
                        let v = state.rigid_velocity(x);
                        for c in 0..2 {
                            f[dofs.velocity(i, c)] = s * v[c];
                        }
                    }
                    ColloidMode::Free => {
                        let r = [x[0] - state.position[0], x[1] - state.position[1]];
                        let rig = |c| dofs.rigid(ci, c).expect("free mode");
                        // u − Ẋ − Θ̇ × r = 0 with Θ̇ × r = (−Θ̇ r_y, Θ̇ r_x)
                        k.push(dofs.velocity(i, 0), rig(0), -s);
                        k.push(dofs.velocity(i, 0), rig(2), s * r[1]);
                        k.push(dofs.velocity(i, 1), rig(1), -s);
                        k.push(dofs.velocity(i, 1), rig(2), -s * r[0]);
                    }
                }
            }
        }

        // pressure row
        let lap = &stencils.laplacian[i];
        let row = dofs.pressure(i);
        for (q, &p) in lap.points.iter().enumerate() {
            l.push(row, dofs.pressure(p), lap.rows[0][q]);
        }
        l.push(row, dofs.multiplier(), 1.0);
        l.push(dofs.multiplier(), row, 1.0);
        rhs_p[row] = div_f[i];
        if let (Some(beta), Some(nrm)) = (&lap.constraint, cloud.normals[i]) {
            let beta = beta[0];
            let cc = &stencils.curlcurl[i];
            for (q, &p) in cc.points.iter().enumerate() {
                for d in 0..2 {
                    let ncc = nrm[0] * cc.rows[0][2 * q + d] + nrm[1] * cc.rows[1][2 * q + d];
                    b.push(row, dofs.velocity(p, d), -beta * nu * ncc);
                }
            }
            rhs_p[row] -= beta * (nrm[0] * fi[0] + nrm[1] * fi[1]);
        }
    }

    if mode == ColloidMode::Free {
        for (ci, state) in colloids.iter().enumerate() {
            let range = cloud.colloid_ranges[ci].clone();
            let ds = arclength_weights(&cloud.positions[range.clone()])?;
            for (j, w) in range.zip(ds) {
                let st = stencils.stress[j]
                    .as_ref()
                    .ok_or_else(|| Error::Assembly(format!("missing stress stencil at colloid point {j}")))?;
                let nrm = cloud.normals[j].expect("colloid points carry normals");
                let x = cloud.positions[j];
                let r = [x[0] - state.position[0], x[1] - state.position[1]];
                // traction t_c = Σ_d σ_cd n_d; torque r_x t_y − r_y t_x
                let weights = [
                    (0, [w, 0.0]),
                    (1, [0.0, w]),
                    (2, [-w * r[1], w * r[0]]),
                ];
                for (comp, tw) in weights {
                    let row = dofs.rigid(ci, comp).expect("free mode");
                    for c in 0..2 {
                        if tw[c] == 0.0 {
                            continue;
                        }
                        for d in 0..2 {
                            let coef = tw[c] * nrm[d];
                            let srow = 2 * c + d;
                            for (q, &p) in st.velocity.points.iter().enumerate() {
                                for e in 0..2 {
                                    k.push(row, dofs.velocity(p, e), coef * st.velocity.rows[srow][2 * q + e]);
                                }
                            }
                            for (q, &p) in st.pressure.points.iter().enumerate() {
                                g.push(row, dofs.pressure(p), coef * st.pressure.rows[srow][q]);
                            }
                        }
                    }
                }
            }
        }
    }

    Ok((
        BlockSystem {
            k: k.build(),
            g: g.build(),
            b: b.build(),
            l: l.build(),
            f,
            rhs_p,
        },
        dofs,
    ))
}

/// Traction and moment quadrature over colloid `ci`'s surface.
pub fn evaluate_force_torque(
    cloud: &PointCloud,
    stencils: &StencilSet,
    solution: &FieldSolution,
    ci: usize,
    state: &ColloidState,
) -> Result<(Vec2, f64)> {
    let range = cloud.colloid_ranges[ci].clone();
    let ds = arclength_weights(&cloud.positions[range.clone()])?;
    let u = solution.flat_velocity();
    let mut force = [0.0; 2];
    let mut torque = 0.0;
    for (j, w) in range.zip(ds) {
        let st = stencils.stress[j]
            .as_ref()
            .ok_or_else(|| Error::Assembly(format!("missing stress stencil at colloid point {j}")))?;
        let sigma = st.evaluate(&solution.pressure, &u);
        let nrm = cloud.normals[j].expect("colloid points carry normals");
        let t = [
            sigma[0][0] * nrm[0] + sigma[0][1] * nrm[1],
            sigma[1][0] * nrm[0] + sigma[1][1] * nrm[1],
        ];
        let x = cloud.positions[j];
        let r = [x[0] - state.position[0], x[1] - state.position[1]];
        force[0] += w * t[0];
        force[1] += w * t[1];
        torque += w * (r[0] * t[1] - r[1] * t[0]);
    }
    Ok((force, torque))
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub gmres: GmresOptions,
    pub amg: AmgOptions,
    pub precondition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gmres: GmresOptions::default(),
            amg: AmgOptions::default(),
            precondition: true,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        let mut o = SolveOptions::default();
        o.gmres.tol = tol;
        o
    }
}

/// Solves the assembled system; non-convergence is an error carrying the
/// final residual.
pub fn solve_system(
    system: &BlockSystem,
    dofs: &DofMap,
    colloids: &[ColloidState],
    opts: &SolveOptions,
) -> Result<(FieldSolution, KrylovReport)> {
    let labels: Vec<usize> = (0..dofs.n_u()).map(|i| if i < 2 * dofs.points { i % 2 } else { 2 }).collect();
    let block_opts = BlockSolveOptions {
        gmres: opts.gmres.clone(),
        amg: opts.amg.clone(),
        schur_border: dofs.rigid_dofs(),
        laplacian_multiplier: Some(dofs.multiplier()),
        schur_labels: Some(labels),
        precondition: opts.precondition,
    };
    let (x, report) = solve_block_system(&system.k, &system.g, &system.b, &system.l, &system.rhs(), &block_opts)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.relative_residual,
        });
    }
    let nu = dofs.n_u();
    let velocity = (0..dofs.points).map(|i| [x[2 * i], x[2 * i + 1]]).collect();
    let pressure = x[nu..nu + dofs.points].to_vec();
    let (colloid_velocity, colloid_angular_velocity) = match dofs.mode {
        ColloidMode::Free => (
            (0..dofs.colloids)
                .map(|c| [x[dofs.rigid(c, 0).unwrap()], x[dofs.rigid(c, 1).unwrap()]])
                .collect(),
            (0..dofs.colloids).map(|c| x[dofs.rigid(c, 2).unwrap()]).collect(),
        ),
        ColloidMode::Prescribed => (
            colloids.iter().map(|c| c.velocity).collect(),
            colloids.iter().map(|c| c.angular_velocity).collect(),
        ),
    };
    Ok((
        FieldSolution {
            velocity,
            pressure,
            colloid_velocity,
            colloid_angular_velocity,
            multiplier: x[nu + dofs.multiplier()],
        },
        report,
    ))
}

/// Stencils, assembly and solve for a prepared cloud.
pub struct StokesSolve {
    pub stencils: StencilSet,
    pub system: BlockSystem,
    pub dofs: DofMap,
    pub solution: FieldSolution,
    pub report: KrylovReport,
}

pub fn solve_stokes(
    cloud: &PointCloud,
    m: usize,
    data: &FlowData,
    colloids: &[ColloidState],
    mode: ColloidMode,
    opts: &SolveOptions,
) -> Result<StokesSolve> {
    let t0 = std::time::Instant::now();
    let stencils = build_stencils(cloud, m, data.nu)?;
    let (system, dofs) = assemble(cloud, &stencils, data, colloids, mode)?;
    let build_s = t0.elapsed().as_secs_f64();
    let (solution, mut report) = solve_system(&system, &dofs, colloids, opts)?;
    report.setup_s += build_s;
    Ok(StokesSolve {
        stencils,
        system,
        dofs,
        solution,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn arclength_examples() {
        let a = 0.7;
        let n = 40;
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [a * t.cos(), a * t.sin()]
            })
            .collect();
        let ds = arclength_weights(&pts).unwrap();
        let chord = 2.0 * a * (std::f64::consts::PI / n as f64).sin();
        for d in &ds {
            assert!((d - chord).abs() < 1e-14);
            assert!((d - TAU * a / n as f64).abs() < 1e-2 * chord);
        }
        let s = 0.1;
        let mut sq = Vec::new();
        let per = 10;
        for e in 0..4 {
            for k in 0..per {
                let t = k as f64 * s;
                sq.push(match e {
                    0 => [t, 0.0],
                    1 => [1.0, t],
                    2 => [1.0 - t, 1.0],
                    _ => [0.0, 1.0 - t],
                });
            }
        }
        let total: f64 = arclength_weights(&sq).unwrap().iter().sum();
        assert!((total - 4.0).abs() <= 2.0 * s * s);
        assert!(arclength_weights(&pts[..2]).is_err());
    }

    #[test]
    fn dof_map_layout() {
        let d = DofMap {
            points: 10,
            colloids: 2,
            mode: ColloidMode::Free,
        };
        assert_eq!(d.n_u(), 26);
        assert_eq!(d.rigid(1, 2), Some(25));
        assert_eq!(d.n_p(), 11);
        assert_eq!(d.total(), 37);
        assert_eq!(d.rigid_dofs(), vec![20, 21, 22, 23, 24, 25]);
        let p = DofMap {
            mode: ColloidMode::Prescribed,
            ..d
        };
        assert_eq!(p.rigid(0, 0), None);
        assert_eq!(p.n_u(), 20);
    }
}
