//! Shifted/scaled polynomial bases and the weighted least-squares kernel
//! shared by every stencil generator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::colloid::Vec2;

/// Relative cutoff below which singular values are treated as zero.
pub const PINV_TOL: f64 = 1e-12;

/// ∂^p_ξ ∂^q_η (ξ^a η^b) evaluated at (ξ, η).
fn monomial_derivative(a: u32, b: u32, p: u32, q: u32, xi: f64, eta: f64) -> f64 {
    if p > a || q > b {
        return 0.0;
    }
    let falling = |n: u32, k: u32| (0..k).fold(1.0, |acc, t| acc * (n - t) as f64);
    falling(a, p) * falling(b, q) * xi.powi((a - p) as i32) * eta.powi((b - q) as i32)
}

/// Monomials ((x−c)/h)^a ((y−c)/h)^b with a + b ≤ m, ordered by total degree.
#[derive(Debug, Clone)]
pub struct ScalarBasis {
    pub order: usize,
    pub center: Vec2,
    pub scale: f64,
    exponents: Vec<(u32, u32)>,
}

impl ScalarBasis {
    pub fn new(order: usize, center: Vec2, scale: f64) -> Self {
        assert!(scale > 0.0, "basis scale must be positive");
        let mut exponents = Vec::with_capacity((order + 1) * (order + 2) / 2);
        for d in 0..=order as u32 {
            for a in (0..=d).rev() {
                exponents.push((a, d - a));
            }
        }
        ScalarBasis {
            order,
            center,
            scale,
            exponents,
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    fn local(&self, x: Vec2) -> (f64, f64) {
        ((x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale)
    }

    /// ∂^p_x ∂^q_y of every basis element at `x`.
    pub fn derivative(&self, x: Vec2, p: u32, q: u32) -> Vec<f64> {
        let (xi, eta) = self.local(x);
        let f = self.scale.powi(-((p + q) as i32));
        self.exponents
            .iter()
            .map(|&(a, b)| f * monomial_derivative(a, b, p, q, xi, eta))
            .collect()
    }

    pub fn values(&self, x: Vec2) -> Vec<f64> {
        self.derivative(x, 0, 0)
    }

    pub fn gradient(&self, x: Vec2) -> [Vec<f64>; 2] {
        [self.derivative(x, 1, 0), self.derivative(x, 0, 1)]
    }

    pub fn laplacian(&self, x: Vec2) -> Vec<f64> {
        let xx = self.derivative(x, 2, 0);
        let yy = self.derivative(x, 0, 2);
        xx.iter().zip(&yy).map(|(a, b)| a + b).collect()
    }
}

/// Divergence-free vector polynomials of degree ≤ m, generated as rotated
/// gradients (∂_y ψ, −∂_x ψ) of scaled stream-function monomials ψ of degree
/// 1..=m+1.
#[derive(Debug, Clone)]
pub struct DivFreeBasis {
    pub order: usize,
    pub center: Vec2,
    pub scale: f64,
    stream: Vec<(u32, u32)>,
}

impl DivFreeBasis {
    pub fn new(order: usize, center: Vec2, scale: f64) -> Self {
        assert!(order >= 1, "divergence-free basis needs order >= 1");
        assert!(scale > 0.0, "basis scale must be positive");
        let mut stream = Vec::new();
        for d in 1..=(order as u32 + 1) {
            for a in (0..=d).rev() {
                stream.push((a, d - a));
            }
        }
        DivFreeBasis {
            order,
            center,
            scale,
            stream,
        }
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    fn local(&self, x: Vec2) -> (f64, f64) {
        ((x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale)
    }

    /// Physical derivative ∂^p_x ∂^q_y of the stream function of each element,
    /// with the element itself normalised as (∂_η ψ, −∂_ξ ψ) in local units.
    fn stream_derivative(&self, x: Vec2, p: u32, q: u32) -> Vec<f64> {
        let (xi, eta) = self.local(x);
        self.stream
            .iter()
            .map(|&(a, b)| monomial_derivative(a, b, p, q, xi, eta))
            .collect()
    }

    /// Vector value of every element at `x`.
    pub fn values(&self, x: Vec2) -> Vec<[f64; 2]> {
        let dy = self.stream_derivative(x, 0, 1);
        let dx = self.stream_derivative(x, 1, 0);
        dy.iter().zip(&dx).map(|(u, v)| [*u, -*v]).collect()
    }

    /// Gradient tensor g[c][d] = ∂_d e_c of every element at `x`.
    pub fn gradient(&self, x: Vec2) -> Vec<[[f64; 2]; 2]> {
        let h = 1.0 / self.scale;
        let xy = self.stream_derivative(x, 1, 1);
        let yy = self.stream_derivative(x, 0, 2);
        let xx = self.stream_derivative(x, 2, 0);
        (0..self.len())
            .map(|k| [[h * xy[k], h * yy[k]], [-h * xx[k], -h * xy[k]]])
            .collect()
    }

    /// Analytic divergence of each element (identically zero).
    pub fn divergence(&self, x: Vec2) -> Vec<f64> {
        self.gradient(x).iter().map(|g| g[0][0] + g[1][1]).collect()
    }

    /// ∇×∇×e = (∂_y ω, −∂_x ω) with ω = ∂_x e_y − ∂_y e_x = −∇²ψ.
    pub fn curlcurl(&self, x: Vec2) -> Vec<[f64; 2]> {
        let h2 = self.scale.powi(-2);
        let xxx = self.stream_derivative(x, 3, 0);
        let xyy = self.stream_derivative(x, 1, 2);
        let xxy = self.stream_derivative(x, 2, 1);
        let yyy = self.stream_derivative(x, 0, 3);
        (0..self.len())
            .map(|k| {
                let dy_lap = xxy[k] + yyy[k];
                let dx_lap = xxx[k] + xyy[k];
                [-h2 * dy_lap, h2 * dx_lap]
            })
            .collect()
    }
}

/// Weighted least-squares problem min ‖√W (A c − s)‖ subject to C c = g.
#[derive(Debug, Clone)]
pub struct WlsProblem {
    /// Basis evaluations, one row per sample equation.
    pub design: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub constraints: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WlsFailure {
    InvalidWeights,
    DependentConstraints,
}

/// Linear maps from sample values and constraint right-hand sides to the
/// fitted coefficients: c = S s + T g.
#[derive(Debug, Clone)]
pub struct WlsSolution {
    pub sample_map: DMatrix<f64>,
    pub constraint_map: DMatrix<f64>,
    /// Numerical rank of the (reduced) weighted design matrix.
    pub rank: usize,
    /// Number of free coefficients the rank is compared against.
    pub unknowns: usize,
}

impl WlsSolution {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.unknowns
    }

    pub fn coefficients(&self, samples: &[f64], rhs: &[f64]) -> DVector<f64> {
        let mut c = &self.sample_map * DVector::from_column_slice(samples);
        if !rhs.is_empty() {
            c += &self.constraint_map * DVector::from_column_slice(rhs);
        }
        c
    }

    /// Stencil weights on each sample for the functional d·c.
    pub fn sample_weights(&self, functional: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(functional);
        (self.sample_map.transpose() * d).iter().copied().collect()
    }

    /// Weights on each constraint right-hand side for the functional d·c.
    pub fn constraint_weights(&self, functional: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(functional);
        (self.constraint_map.transpose() * d).iter().copied().collect()
    }
}

impl WlsProblem {
    pub fn new(design: DMatrix<f64>, weights: DVector<f64>) -> Self {
        WlsProblem {
            design,
            weights,
            constraints: None,
        }
    }

    pub fn with_constraints(mut self, c: DMatrix<f64>) -> Self {
        self.constraints = Some(c);
        self
    }

    /// Weighted normal-equations matrix M = Aᵀ W A.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let wa = DMatrix::from_fn(self.design.nrows(), self.design.ncols(), |r, c| {
            self.weights[r] * self.design[(r, c)]
        });
        self.design.transpose() * wa
    }
}

/// Plane rotation of columns `i < j` of a column-major `n`-row buffer.
fn rotate_columns(data: &mut [f64], n: usize, i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(j * n);
    let xi = &mut head[i * n..(i + 1) * n];
    let xj = &mut tail[..n];
    for (x, y) in xi.iter_mut().zip(xj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// One-sided Jacobi SVD of a square matrix: returns (U, σ, V) with
/// B = U diag(σ) Vᵀ. Columns with σ = 0 leave U zero.
fn jacobi_svd(mut b: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = b.ncols();
    let rows = b.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut norms: Vec<f64> = (0..n).map(|k| b.column(k).norm_squared()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta) = (norms[i], norms[j]);
                let bs = b.as_slice();
                let gamma: f64 = bs[i * rows..(i + 1) * rows]
                    .iter()
                    .zip(&bs[j * rows..(j + 1) * rows])
                    .map(|(x, y)| x * y)
                    .sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(b.as_mut_slice(), rows, i, j, c, s);
                rotate_columns(v.as_mut_slice(), n, i, j, c, s);
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
        // refresh the running norms against drift
        for (k, nk) in norms.iter_mut().enumerate() {
            *nk = b.column(k).norm_squared();
        }
    }
    let sigma = DVector::from_fn(n, |k, _| b.column(k).norm());
    for k in 0..n {
        if sigma[k] > 0.0 {
            b.column_mut(k).scale_mut(1.0 / sigma[k]);
        }
    }
    (b, sigma, v)
}

/// Thin SVD factors (U, σ, Vᵀ) of `a`: column-pivoted Householder QR of the
/// tall orientation, A P = Q R, then a Jacobi SVD of Rᵀ, which converges in
/// a few sweeps because pivoting grades R.
fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let factor = |m: &DMatrix<f64>| {
        let qr = m.clone().col_piv_qr();
        // Rᵀ = X Σ Yᵀ gives A = (Q Y) Σ (P X)ᵀ
        let (mut x, s, y) = jacobi_svd(qr.r().transpose());
        qr.p().inv_permute_rows(&mut x);
        (qr.q() * y, s, x)
    };
    if a.nrows() >= a.ncols() {
        let (u, s, v) = factor(a);
        (u, s, v.transpose())
    } else {
        let (v, s, u) = factor(&a.transpose());
        (u, s, v.transpose())
    }
}

/// A⁺ = P R⁻¹ Qᵀ for a tall `a` with A P = Q R, when the bounds
/// σ_min ≥ 1/‖R⁻¹‖_F and σ_max ≤ ‖R‖_F prove that no singular value falls
/// below the truncation cut. Otherwise `None`.
fn full_rank_pinv(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.ncols();
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rinv = r.solve_upper_triangular(&DMatrix::identity(n, n))?;
    if !(1.0 / rinv.norm() > 1e2 * PINV_TOL * r.norm()) {
        return None;
    }
    let mut x = rinv * qr.q().transpose();
    qr.p().inv_permute_rows(&mut x);
    Some(x)
}

/// Pseudo-inverse of `a` with relative truncation, plus its numerical rank.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    if a.ncols() == 0 || a.nrows() == 0 {
        return (DMatrix::zeros(a.ncols(), a.nrows()), 0);
    }
    let full = if a.nrows() >= a.ncols() {
        full_rank_pinv(a)
    } else {
        full_rank_pinv(&a.transpose()).map(|p| p.transpose())
    };
    if let Some(p) = full {
        return (p, a.nrows().min(a.ncols()));
    }
    let (u, sv, vt) = thin_svd(a);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = PINV_TOL * smax;
    let mut rank = 0;
    let mut scaled_vt = vt;
    for (k, &s) in sv.iter().enumerate() {
        let inv = if s > cut && s > 0.0 {
            rank += 1;
            1.0 / s
        } else {
            0.0
        };
        scaled_vt.row_mut(k).scale_mut(inv);
    }
    (scaled_vt.transpose() * u.transpose(), rank)
}

/// Solves the weighted least-squares problem with pseudo-inverse semantics.
///
/// The √W-scaled design matrix is factored by SVD, so the result is the
/// minimum-norm minimiser when the fit is rank deficient. Equality
/// constraints are eliminated through a null-space basis of C and hold
/// exactly.
pub fn wls_solve(problem: &WlsProblem) -> Result<WlsSolution, WlsFailure> {
    let a = &problem.design;
    let w = &problem.weights;
    if w.iter().any(|&x| !(x >= 0.0)) || !w.iter().any(|&x| x > 0.0) {
        return Err(WlsFailure::InvalidWeights);
    }
    let rows = a.nrows();
    let nb = a.ncols();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let scaled = DMatrix::from_fn(rows, nb, |r, c| sw[r] * a[(r, c)]);
    match &problem.constraints {
        None => {
            let (pinv, rank) = pseudo_inverse(&scaled);
            let mut sample_map = pinv;
            for r in 0..rows {
                sample_map.column_mut(r).scale_mut(sw[r]);
            }
            Ok(WlsSolution {
                sample_map,
                constraint_map: DMatrix::zeros(nb, 0),
                rank,
                unknowns: nb,
            })
        }
        Some(c) => {
            let nc = c.nrows();
            let ctc = c.transpose() * c;
            let eig = SymmetricEigen::new(ctc);
            let emax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
            let mut null_cols = Vec::new();
            for k in 0..nb {
                if eig.eigenvalues[k] <= 1e-12 * emax {
                    null_cols.push(eig.eigenvectors.column(k).into_owned());
                }
            }
            if nb - null_cols.len() != nc {
                return Err(WlsFailure::DependentConstraints);
            }
            let null = if null_cols.is_empty() {
                DMatrix::zeros(nb, 0)
            } else {
                DMatrix::from_columns(&null_cols)
            };
            // particular solution map C⁺ = Cᵀ (C Cᵀ)⁻¹
            let cct = c * c.transpose();
            let cct_inv = cct.try_inverse().ok_or(WlsFailure::DependentConstraints)?;
            let c_plus = c.transpose() * cct_inv;
            let reduced = &scaled * &null;
            let (pinv, rank) = pseudo_inverse(&reduced);
            let mut z_map = pinv;
            for r in 0..rows {
                z_map.column_mut(r).scale_mut(sw[r]);
            }
            let sample_map = &null * &z_map;
            let constraint_map = (DMatrix::identity(nb, nb) - &sample_map * a) * c_plus;
            Ok(WlsSolution {
                sample_map,
                constraint_map,
                rank,
                unknowns: nb - nc,
            })
        }
    }
}
