//! Finite-difference-like stencils generated from local least-squares fits:
//! standard MLS operators, staggered gradient/Laplacian, divergence-free
//! curl-curl and surface stress.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::basis::{wls_solve, DivFreeBasis, ScalarBasis, WlsFailure, WlsProblem, WlsSolution};
use crate::colloid::Vec2;
use crate::error::{Error, Result};
use crate::pointcloud::{pair_weight, PointCloud};

/// Linear map from DOFs at `points` to one or more output values.
///
/// Columns are laid out point-major: column `k * components + c` holds the
/// coefficient of component `c` at `points[k]`. `points[0]` is the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub center: usize,
    pub points: Vec<usize>,
    pub components: usize,
    pub rows: Vec<Vec<f64>>,
    /// Coefficient multiplying the Neumann right-hand side, one per row.
    pub constraint: Option<Vec<f64>>,
}

impl Stencil {
    pub fn outputs(&self) -> usize {
        self.rows.len()
    }

    /// Applies the stencil to a field with `components` values per point,
    /// stored point-major.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let nc = self.components;
        self.rows
            .iter()
            .map(|row| {
                self.points
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| (0..nc).map(|c| row[k * nc + c] * field[p * nc + c]).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Like [`Stencil::apply`] plus β·g for constrained stencils.
    pub fn apply_with_constraint(&self, field: &[f64], g: f64) -> Vec<f64> {
        let mut out = self.apply(field);
        if let Some(beta) = &self.constraint {
            for (o, b) in out.iter_mut().zip(beta) {
                *o += b * g;
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("neighbor_index");
        for r in 0..self.rows.len() {
            for c in 0..self.components {
                let _ = write!(s, ",coeff{r}_{c}");
            }
        }
        s.push('\n');
        for (k, p) in self.points.iter().enumerate() {
            let _ = write!(s, "{p}");
            for row in &self.rows {
                for c in 0..self.components {
                    let _ = write!(s, ",{:.16e}", row[k * self.components + c]);
                }
            }
            s.push('\n');
        }
        if let Some(beta) = &self.constraint {
            s.push_str("constraint");
            for b in beta {
                let _ = write!(s, ",{b:.16e}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlsOperator {
    Value,
    Gradient,
    Laplacian,
    /// Second derivatives (xx, xy, yy).
    Hessian,
}

/// Stress σ* = −q* I + (ν/2)(∇v* + ∇v*ᵀ) split into pressure and velocity
/// parts; rows are σ_xx, σ_xy, σ_yx, σ_yy.
#[derive(Debug, Clone, PartialEq)]
pub struct StressStencil {
    pub pressure: Stencil,
    pub velocity: Stencil,
}

impl StressStencil {
    pub fn evaluate(&self, pressure: &[f64], velocity: &[f64]) -> [[f64; 2]; 2] {
        let p = self.pressure.apply(pressure);
        let v = self.velocity.apply(velocity);
        [[p[0] + v[0], p[1] + v[1]], [p[2] + v[2], p[3] + v[3]]]
    }
}

/// Centre plus neighbours with their pair weights (W_ii = 2).
fn gather(cloud: &PointCloud, i: usize) -> (Vec<usize>, Vec<f64>) {
    let mut pts = Vec::with_capacity(cloud.neighbors(i).len() + 1);
    let mut w = Vec::with_capacity(pts.capacity());
    pts.push(i);
    w.push(pair_weight(0.0, cloud.support[i], cloud.support[i]));
    pts.extend_from_slice(cloud.neighbors(i));
    w.extend_from_slice(cloud.adjacency.weights(i));
    (pts, w)
}

/// A solved local fit. Rank-deficient fits are accepted as long as every
/// requested functional is determined by the samples.
struct Fit {
    point: usize,
    sol: WlsSolution,
    /// S A + T C, which equals the identity on determined directions; only
    /// formed for rank-deficient fits.
    reproduction: Option<DMatrix<f64>>,
}

impl Fit {
    fn new(point: usize, problem: &WlsProblem) -> Result<Self> {
        let sol = wls_solve(problem).map_err(|f| Error::SingularStencil {
            point,
            reason: match f {
                WlsFailure::InvalidWeights => "no positive weights".into(),
                WlsFailure::DependentConstraints => "constraint rows are dependent".into(),
            },
        })?;
        let reproduction = (!sol.is_full_rank()).then(|| {
            let mut r = &sol.sample_map * &problem.design;
            if let Some(c) = &problem.constraints {
                r += &sol.constraint_map * c;
            }
            r
        });
        Ok(Fit { point, sol, reproduction })
    }

    fn check(&self, functional: &[f64]) -> Result<()> {
        let Some(reproduction) = &self.reproduction else {
            return Ok(());
        };
        let d = DVector::from_column_slice(functional);
        let residual = reproduction.tr_mul(&d) - &d;
        if residual.norm() > 1e-8 * d.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::SingularStencil {
                point: self.point,
                reason: format!(
                    "fit has rank {} of {} and the requested operator is undetermined",
                    self.sol.rank, self.sol.unknowns
                ),
            });
        }
        Ok(())
    }

    fn sample_weights(&self, functional: &[f64]) -> Result<Vec<f64>> {
        self.check(functional)?;
        Ok(self.sol.sample_weights(functional))
    }

    fn constraint_weight(&self, functional: &[f64]) -> f64 {
        self.sol.constraint_weights(functional)[0]
    }
}

/// D^α_h u_i = Σ_j α_ij u_j from a standard MLS fit over π_m.
pub fn standard_mls_stencil(i: usize, cloud: &PointCloud, m: usize, op: MlsOperator) -> Result<Stencil> {
    let xi = cloud.positions[i];
    let basis = ScalarBasis::new(m, xi, cloud.support[i]);
    let (points, w) = gather(cloud, i);
    let mut design = DMatrix::zeros(points.len(), basis.len());
    for (r, &p) in points.iter().enumerate() {
        for (c, v) in basis.values(cloud.positions[p]).into_iter().enumerate() {
            design[(r, c)] = v;
        }
    }
    let fit = Fit::new(i, &WlsProblem::new(design, DVector::from_vec(w)))?;
    let functionals: Vec<Vec<f64>> = match op {
        MlsOperator::Value => vec![basis.values(xi)],
        MlsOperator::Gradient => basis.gradient(xi).into_iter().collect(),
        MlsOperator::Laplacian => vec![basis.laplacian(xi)],
        MlsOperator::Hessian => vec![
            basis.derivative(xi, 2, 0),
            basis.derivative(xi, 1, 1),
            basis.derivative(xi, 0, 2),
        ],
    };
    Ok(Stencil {
        center: i,
        points,
        components: 1,
        rows: functionals.iter().map(|d| fit.sample_weights(d)).collect::<Result<_>>()?,
        constraint: None,
    })
}

/// Converts weights on edge differences φ_j − φ_i into a nodal stencil row.
fn difference_row(edge_weights: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(edge_weights.len() + 1);
    row.push(-edge_weights.iter().sum::<f64>());
    row.extend_from_slice(edge_weights);
    row
}

/// Basis values at edge midpoints, without the constant monomial: edge
/// samples (differences, radial components) vanish at x_i, so the fit is
/// taken over the polynomials of π_m vanishing at the centre.
fn midpoint_design(cloud: &PointCloud, i: usize, basis: &ScalarBasis) -> DMatrix<f64> {
    let xi = cloud.positions[i];
    let nbrs = cloud.neighbors(i);
    let mut design = DMatrix::zeros(nbrs.len(), basis.len() - 1);
    for (r, &j) in nbrs.iter().enumerate() {
        let xj = cloud.positions[j];
        let mid = [0.5 * (xi[0] + xj[0]), 0.5 * (xi[1] + xj[1])];
        for (c, v) in basis.values(mid).into_iter().enumerate().skip(1) {
            design[(r, c - 1)] = v;
        }
    }
    design
}

fn drop_constant(v: &[f64]) -> Vec<f64> {
    v[1..].to_vec()
}

/// Staggered gradient ½∇p*(x_i) and Laplacian ¼∇²p*(x_i), where p* fits the
/// edge differences φ_j − φ_i at edge midpoints.
///
/// With `neumann`, the fit is constrained so that ½∇p*(x_i)·n̂_i equals the
/// Neumann datum g_i; both stencils then carry β_i multiplying g_i.
pub fn staggered_stencil(i: usize, cloud: &PointCloud, m: usize, neumann: bool) -> Result<(Stencil, Stencil)> {
    let xi = cloud.positions[i];
    let normal = match (neumann, cloud.normals[i]) {
        (true, None) => {
            return Err(Error::Usage(format!("Neumann constraint requested at interior point {i}")));
        }
        (true, Some(n)) => Some(n),
        (false, _) => None,
    };
    let basis = ScalarBasis::new(m, xi, cloud.support[i]);
    let nbrs = cloud.neighbors(i);
    let design = midpoint_design(cloud, i, &basis);
    let weights = DVector::from_column_slice(cloud.adjacency.weights(i));
    let grad = basis.gradient(xi);
    let mut problem = WlsProblem::new(design, weights);
    if let Some(n) = normal {
        let row = DMatrix::from_fn(1, basis.len() - 1, |_, k| 0.5 * (grad[0][k + 1] * n[0] + grad[1][k + 1] * n[1]));
        problem = problem.with_constraints(row);
    }
    let fit = Fit::new(i, &problem)?;
    let half_grad: Vec<Vec<f64>> = grad.iter().map(|g| g[1..].iter().map(|v| 0.5 * v).collect()).collect();
    let quarter_lap: Vec<f64> = basis.laplacian(xi)[1..].iter().map(|v| 0.25 * v).collect();
    let mut points = Vec::with_capacity(nbrs.len() + 1);
    points.push(i);
    points.extend_from_slice(nbrs);
    let beta = |d: &[f64]| normal.map(|_| fit.constraint_weight(d));
    let gradient = Stencil {
        center: i,
        points: points.clone(),
        components: 1,
        rows: half_grad
            .iter()
            .map(|d| fit.sample_weights(d).map(|a| difference_row(&a)))
            .collect::<Result<_>>()?,
        constraint: normal.map(|_| half_grad.iter().map(|d| beta(d).unwrap_or(0.0)).collect()),
    };
    let laplacian = Stencil {
        center: i,
        points,
        components: 1,
        rows: vec![difference_row(&fit.sample_weights(&quarter_lap)?)],
        constraint: beta(&quarter_lap).map(|b| vec![b]),
    };
    Ok((gradient, laplacian))
}

/// Vector reconstruction ½∇q*(x_i) and divergence ¼∇²q*(x_i) from the
/// radial components ½(u_i + u_j)·(x_j − x_i) sampled at edge midpoints.
pub fn staggered_vector_ops(i: usize, cloud: &PointCloud, m: usize) -> Result<(Stencil, Stencil)> {
    let xi = cloud.positions[i];
    let basis = ScalarBasis::new(m, xi, cloud.support[i]);
    let nbrs = cloud.neighbors(i);
    let design = midpoint_design(cloud, i, &basis);
    let weights = DVector::from_column_slice(cloud.adjacency.weights(i));
    let fit = Fit::new(i, &WlsProblem::new(design, weights))?;
    let grad = basis.gradient(xi);
    let lap = basis.laplacian(xi);
    let functionals = [
        drop_constant(&grad[0]).iter().map(|v| 0.5 * v).collect::<Vec<_>>(),
        drop_constant(&grad[1]).iter().map(|v| 0.5 * v).collect::<Vec<_>>(),
        drop_constant(&lap).iter().map(|v| 0.25 * v).collect::<Vec<_>>(),
    ];
    let mut points = Vec::with_capacity(nbrs.len() + 1);
    points.push(i);
    points.extend_from_slice(nbrs);
    let ncols = 2 * points.len();
    let to_row = |d: &[f64]| -> Result<Vec<f64>> {
        let a = fit.sample_weights(d)?;
        let mut row = vec![0.0; ncols];
        for (k, &j) in nbrs.iter().enumerate() {
            let xj = cloud.positions[j];
            let e = [xj[0] - xi[0], xj[1] - xi[1]];
            for c in 0..2 {
                let v = 0.5 * a[k] * e[c];
                row[2 * (k + 1) + c] += v;
                row[c] += v;
            }
        }
        Ok(row)
    };
    let recon = Stencil {
        center: i,
        points: points.clone(),
        components: 2,
        rows: vec![to_row(&functionals[0])?, to_row(&functionals[1])?],
        constraint: None,
    };
    let div = Stencil {
        center: i,
        points,
        components: 2,
        rows: vec![to_row(&functionals[2])?],
        constraint: None,
    };
    Ok((recon, div))
}

fn divfree_fit(i: usize, cloud: &PointCloud, m: usize) -> Result<(DivFreeBasis, Vec<usize>, Fit)> {
    let xi = cloud.positions[i];
    let basis = DivFreeBasis::new(m, xi, cloud.support[i]);
    let (points, w) = gather(cloud, i);
    let mut design = DMatrix::zeros(2 * points.len(), basis.len());
    let mut weights = DVector::zeros(2 * points.len());
    for (r, &p) in points.iter().enumerate() {
        for (c, v) in basis.values(cloud.positions[p]).into_iter().enumerate() {
            design[(2 * r, c)] = v[0];
            design[(2 * r + 1, c)] = v[1];
        }
        weights[2 * r] = w[r];
        weights[2 * r + 1] = w[r];
    }
    let fit = Fit::new(i, &WlsProblem::new(design, weights))?;
    Ok((basis, points, fit))
}

/// ∇×∇×_h u_i from a fit over the divergence-free space π^div_m.
pub fn curlcurl_stencil(i: usize, cloud: &PointCloud, m: usize) -> Result<Stencil> {
    let (basis, points, fit) = divfree_fit(i, cloud, m)?;
    let cc = basis.curlcurl(cloud.positions[i]);
    let rows = (0..2)
        .map(|c| {
            let d: Vec<f64> = cc.iter().map(|e| e[c]).collect();
            fit.sample_weights(&d)
        })
        .collect::<Result<_>>()?;
    Ok(Stencil {
        center: i,
        points,
        components: 2,
        rows,
        constraint: None,
    })
}

/// Gradient tensor (∂_x u, ∂_y u, ∂_x v, ∂_y v) of the divergence-free fit.
pub fn divfree_gradient_stencil(i: usize, cloud: &PointCloud, m: usize) -> Result<Stencil> {
    let (basis, points, fit) = divfree_fit(i, cloud, m)?;
    let g = basis.gradient(cloud.positions[i]);
    let rows = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(c, d)| {
            let f: Vec<f64> = g.iter().map(|e| e[c][d]).collect();
            fit.sample_weights(&f)
        })
        .collect::<Result<_>>()?;
    Ok(Stencil {
        center: i,
        points,
        components: 2,
        rows,
        constraint: None,
    })
}

/// Surface stress reconstruction at boundary point `j`.
pub fn stress_stencil(j: usize, cloud: &PointCloud, m: usize, nu: f64) -> Result<StressStencil> {
    if cloud.normals[j].is_none() {
        return Err(Error::Usage(format!("stress requested at interior point {j}")));
    }
    let value = standard_mls_stencil(j, cloud, m, MlsOperator::Value)?;
    let q = &value.rows[0];
    let neg: Vec<f64> = q.iter().map(|v| -v).collect();
    let zero = vec![0.0; q.len()];
    let pressure = Stencil {
        center: j,
        points: value.points.clone(),
        components: 1,
        rows: vec![neg.clone(), zero.clone(), zero, neg],
        constraint: None,
    };
    let grad = divfree_gradient_stencil(j, cloud, m)?;
    let half = 0.5 * nu;
    let (gxx, gxy, gyx, gyy) = (&grad.rows[0], &grad.rows[1], &grad.rows[2], &grad.rows[3]);
    let sym: Vec<f64> = gxy.iter().zip(gyx).map(|(a, b)| half * (a + b)).collect();
    let velocity = Stencil {
        center: j,
        points: grad.points,
        components: 2,
        rows: vec![
            gxx.iter().map(|a| 2.0 * half * a).collect(),
            sym.clone(),
            sym,
            gyy.iter().map(|a| 2.0 * half * a).collect(),
        ],
        constraint: None,
    };
    Ok(StressStencil { pressure, velocity })
}

/// Evaluates a vector field at the cloud points as a point-major flat array.
pub fn sample_vector(cloud: &PointCloud, f: impl Fn(Vec2) -> Vec2) -> Vec<f64> {
    cloud.positions.iter().flat_map(|&x| f(x)).collect()
}

pub fn sample_scalar(cloud: &PointCloud, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
    cloud.positions.iter().map(|&x| f(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{jittered_unit_square, Region};

    fn cloud(n: usize, m: usize, seed: u64) -> PointCloud {
        let mut c = jittered_unit_square(n, 0.3, seed);
        c.prepare(m).unwrap();
        c
    }

    fn interior_point(c: &PointCloud) -> usize {
        (0..c.len())
            .filter(|&i| c.regions[i] == Region::Interior)
            .min_by(|&a, &b| {
                let d = |i: usize| (c.positions[i][0] - 0.5).hypot(c.positions[i][1] - 0.5);
                d(a).total_cmp(&d(b))
            })
            .unwrap()
    }

    /// Dense minimum-norm WLS solve written out directly, for comparison.
    fn dense_laplacian_oracle(pos: &[Vec2], w: &[f64], h: f64) -> Vec<f64> {
        let basis = ScalarBasis::new(2, pos[0], h);
        let n = pos.len();
        let a = DMatrix::from_fn(n, basis.len(), |r, c| basis.values(pos[r])[c] * w[r].sqrt());
        let pinv = a.clone().pseudo_inverse(1e-12).unwrap();
        let d = DVector::from_vec(basis.laplacian(pos[0]));
        let coef = pinv.transpose() * d;
        (0..n).map(|r| coef[r] * w[r].sqrt()).collect()
    }

    #[test]
    fn five_point_laplacian() {
        let h = 0.1;
        let pos = vec![[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]];
        let mut c = PointCloud::from_points(pos.clone(), vec![None; 5], vec![Region::Interior; 5], vec![h; 5]);
        c.support = vec![1.5 * h; 5];
        c.adjacency = crate::pointcloud::build_neighbors(&c);
        let s = standard_mls_stencil(0, &c, 2, MlsOperator::Laplacian).unwrap();
        let mut w = vec![2.0];
        w.extend_from_slice(c.adjacency.weights(0));
        let oracle = dense_laplacian_oracle(&pos, &w, 1.5 * h);
        for (k, &p) in s.points.iter().enumerate() {
            assert!((s.rows[0][k] - oracle[p]).abs() < 1e-8 / (h * h));
            let expect = if p == 0 { -4.0 } else { 1.0 };
            assert!((s.rows[0][k] * h * h - expect).abs() < 1e-10);
        }
        // the mixed derivative is not determined by the cross
        assert!(matches!(
            standard_mls_stencil(0, &c, 2, MlsOperator::Hessian),
            Err(Error::SingularStencil { point: 0, .. })
        ));
    }

    #[test]
    fn standard_gradient_of_quadratic() {
        let c = cloud(12, 2, 1);
        let u = sample_scalar(&c, |x| x[0] * x[0]);
        for i in 0..c.len() {
            let s = standard_mls_stencil(i, &c, 2, MlsOperator::Gradient).unwrap();
            let g = s.apply(&u);
            assert!((g[0] - 2.0 * c.positions[i][0]).abs() < 1e-9);
            assert!(g[1].abs() < 1e-9);
            for row in &s.rows {
                assert!(row.iter().sum::<f64>().abs() < 1e-12 * row.iter().map(|v| v.abs()).sum::<f64>());
            }
        }
    }

    #[test]
    fn staggered_linear_and_quadratic() {
        let c = cloud(10, 2, 2);
        let lin = sample_scalar(&c, |x| 0.7 * x[0] - 1.3 * x[1]);
        let quad = sample_scalar(&c, |x| x[0] * x[0] + x[1] * x[1]);
        for i in 0..c.len() {
            let (g, l) = staggered_stencil(i, &c, 2, false).unwrap();
            if c.regions[i] == Region::Interior {
                assert!(l.rows[0][0] < 0.0, "diagonal {} at {i}", l.rows[0][0]);
            }
            let gv = g.apply(&lin);
            assert!((gv[0] - 0.7).abs() < 1e-10 && (gv[1] + 1.3).abs() < 1e-10);
            let scale: f64 = l.rows[0].iter().map(|v| v.abs()).sum();
            assert!(l.apply(&lin)[0].abs() < 1e-12 * scale, "{} {scale}", l.apply(&lin)[0]);
            assert!((l.apply(&quad)[0] - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn staggered_neumann_constraint() {
        let c = cloud(10, 2, 3);
        let f = |x: Vec2| 1.0 + x[0] - 2.0 * x[1] + 0.3 * x[0] * x[1] + 0.5 * x[0] * x[0] - x[1] * x[1];
        let grad = |x: Vec2| [1.0 + 0.3 * x[1] + x[0], -2.0 + 0.3 * x[0] - 2.0 * x[1]];
        let field = sample_scalar(&c, f);
        let mut tested = 0;
        for i in 0..c.len() {
            let Some(n) = c.normals[i] else {
                assert!(matches!(staggered_stencil(i, &c, 2, true), Err(Error::Usage(_))));
                continue;
            };
            let gx = grad(c.positions[i]);
            let g = gx[0] * n[0] + gx[1] * n[1];
            let (gs, ls) = staggered_stencil(i, &c, 2, true).unwrap();
            assert!((ls.apply_with_constraint(&field, g)[0] - (1.0 - 2.0)).abs() < 1e-9);
            let gv = gs.apply_with_constraint(&field, g);
            assert!((gv[0] * n[0] + gv[1] * n[1] - g).abs() < 1e-9);
            tested += 1;
        }
        assert!(tested > 0);
    }

    #[test]
    fn staggered_vector_diagnostics() {
        let c = cloud(10, 2, 4);
        let i = interior_point(&c);
        let (r, d) = staggered_vector_ops(i, &c, 2).unwrap();
        let one = sample_vector(&c, |_| [1.0, 0.0]);
        let rv = r.apply(&one);
        assert!((rv[0] - 1.0).abs() < 1e-10 && rv[1].abs() < 1e-10);
        assert!(d.apply(&one)[0].abs() < 1e-10);
        let hyper = sample_vector(&c, |x| [x[0], -x[1]]);
        assert!(d.apply(&hyper)[0].abs() < 1e-9);
        let radial = sample_vector(&c, |x| [x[0], x[1]]);
        assert!((d.apply(&radial)[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn curlcurl_examples() {
        let c = cloud(10, 2, 5);
        let shear = sample_vector(&c, |x| [x[1], 0.0]);
        let rot = sample_vector(&c, |x| [-x[1], x[0]]);
        let quad = sample_vector(&c, |x| [x[1] * x[1], 0.0]);
        for i in 0..c.len() {
            let s = curlcurl_stencil(i, &c, 2).unwrap();
            for v in s.apply(&shear).into_iter().chain(s.apply(&rot)) {
                assert!(v.abs() < 1e-10 * s.rows[0].iter().map(|a| a.abs()).sum::<f64>().max(1.0));
            }
            let q = s.apply(&quad);
            assert!((q[0] + 2.0).abs() < 1e-9 && q[1].abs() < 1e-9);
        }
    }

    #[test]
    fn stress_examples() {
        let c = cloud(10, 2, 6);
        let j = (0..c.len()).find(|&i| c.normals[i].is_some()).unwrap();
        let s = stress_stencil(j, &c, 2, 1.0).unwrap();
        let zero_u = vec![0.0; 2 * c.len()];
        let p0 = vec![2.5; c.len()];
        let sig = s.evaluate(&p0, &zero_u);
        assert!((sig[0][0] + 2.5).abs() < 1e-12 && (sig[1][1] + 2.5).abs() < 1e-12);
        assert!(sig[0][1].abs() < 1e-12 && sig[1][0].abs() < 1e-12);
        let zero_p = vec![0.0; c.len()];
        let rot = sample_vector(&c, |x| [-(x[1] - 0.5), x[0] - 0.5]);
        let sig = s.evaluate(&zero_p, &rot);
        for row in sig {
            for v in row {
                assert!(v.abs() < 1e-10);
            }
        }
        let shear = sample_vector(&c, |x| [x[1], 0.0]);
        let sig = s.evaluate(&zero_p, &shear);
        assert!((sig[0][1] - 0.5).abs() < 1e-9 && (sig[1][0] - 0.5).abs() < 1e-9);
        assert!(sig[0][0].abs() < 1e-9 && sig[1][1].abs() < 1e-9);
        let interior = interior_point(&c);
        assert!(matches!(stress_stencil(interior, &c, 2, 1.0), Err(Error::Usage(_))));
    }
}
