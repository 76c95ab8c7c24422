//! Sparse linear algebra for the block Stokes system: CSR storage,
//! smoothed-aggregation AMG, the block-triangular preconditioner and GMRES.

mod amg;
mod csr;
mod gmres;

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

pub use amg::{amg_setup, AmgHierarchy, AmgOptions};
pub use csr::{SparseMatrix, Triplets};
pub use gmres::{gmres, GmresOptions};

use crate::basis::pseudo_inverse;
use crate::error::{Error, Result};

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A linear map y = A x of fixed dimension.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KrylovReport {
    pub dofs: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    pub history: Vec<f64>,
    pub setup_s: f64,
    pub solve_s: f64,
    pub converged: bool,
    /// Some AMG hierarchy fell back to a direct solve.
    pub fallback: bool,
}

impl KrylovReport {
    pub const CSV_HEADER: &'static str = "dofs,iters,setup_s,solve_s,total_s";

    pub fn total_s(&self) -> f64 {
        self.setup_s + self.solve_s
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e}",
            self.dofs,
            self.iterations,
            self.setup_s,
            self.solve_s,
            self.total_s()
        );
        s
    }
}

/// S̃ = K − G diag(L)⁻¹ B.
pub fn approx_schur(k: &SparseMatrix, g: &SparseMatrix, b: &SparseMatrix, l: &SparseMatrix) -> Result<SparseMatrix> {
    let diag = l.diagonal();
    let mut scale = vec![0.0; b.nrows()];
    for (r, s) in scale.iter_mut().enumerate() {
        if b.row_nnz(r) == 0 {
            continue;
        }
        if diag[r] == 0.0 {
            return Err(Error::PreconditionerSetup(format!(
                "zero diagonal in pressure row {r} coupled to velocity"
            )));
        }
        *s = 1.0 / diag[r];
    }
    let gdb = g.matmul(&b.scale_rows(&scale));
    Ok(k.add(1.0, &gdb, -1.0))
}

/// Approximate inverse of a matrix whose "border" unknowns (a few rows and
/// columns that break AMG, e.g. a zero-diagonal multiplier) are eliminated
/// exactly around an AMG V-cycle on the remaining block.
#[derive(Debug, Clone)]
pub struct BorderedAmg {
    inner: Vec<usize>,
    border: Vec<usize>,
    amg: AmgHierarchy,
    a_bi: SparseMatrix,
    /// M(A_ib), one column per border unknown.
    w: DMatrix<f64>,
    schur_inv: DMatrix<f64>,
}

impl BorderedAmg {
    pub fn new(a: &SparseMatrix, border: &[usize], labels: Option<&[usize]>, opts: &AmgOptions) -> Result<Self> {
        let n = a.nrows();
        let mut is_border = vec![false; n];
        for &b in border {
            is_border[b] = true;
        }
        let inner: Vec<usize> = (0..n).filter(|&i| !is_border[i]).collect();
        let border: Vec<usize> = (0..n).filter(|&i| is_border[i]).collect();
        let a_ii = a.submatrix(&inner, &inner);
        let inner_labels: Option<Vec<usize>> = labels.map(|l| inner.iter().map(|&i| l[i]).collect());
        let amg = amg_setup(&a_ii, inner_labels.as_deref(), opts)?;
        let a_ib = a.submatrix(&inner, &border);
        let a_bi = a.submatrix(&border, &inner);
        let a_bb = a.submatrix(&border, &border).to_dense();
        let nb = border.len();
        let mut w = DMatrix::zeros(inner.len(), nb);
        let dense_ib = a_ib.to_dense();
        for c in 0..nb {
            let col: Vec<f64> = dense_ib.column(c).iter().copied().collect();
            let z = amg.cycle(&col);
            w.set_column(c, &DVector::from_vec(z));
        }
        let mut schur = a_bb;
        for c in 0..nb {
            let prod = a_bi.mul_vec(w.column(c).as_slice());
            for r in 0..nb {
                schur[(r, c)] -= prod[r];
            }
        }
        let schur_inv = if nb == 0 { DMatrix::zeros(0, 0) } else { pseudo_inverse(&schur).0 };
        Ok(BorderedAmg {
            inner,
            border,
            amg,
            a_bi,
            w,
            schur_inv,
        })
    }

    pub fn hierarchy(&self) -> &AmgHierarchy {
        &self.amg
    }
}

impl LinearOperator for BorderedAmg {
    fn dim(&self) -> usize {
        self.inner.len() + self.border.len()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let r_i: Vec<f64> = self.inner.iter().map(|&i| r[i]).collect();
        let y = self.amg.cycle(&r_i);
        if self.border.is_empty() {
            for (k, &i) in self.inner.iter().enumerate() {
                z[i] = y[k];
            }
            return;
        }
        let ay = self.a_bi.mul_vec(&y);
        let rhs = DVector::from_iterator(self.border.len(), self.border.iter().zip(&ay).map(|(&b, v)| r[b] - v));
        let zb = &self.schur_inv * rhs;
        let corr = &self.w * &zb;
        for (k, &i) in self.inner.iter().enumerate() {
            z[i] = y[k] - corr[k];
        }
        for (k, &b) in self.border.iter().enumerate() {
            z[b] = zb[k];
        }
    }
}

/// Approximate inverse of a Neumann-type operator with a zero row-sum
/// (constants in its null space) bordered by a mean-value multiplier:
/// [A 1; 1ᵀ 0]. The V-cycle result is projected to zero mean, the mean is
/// set from the constraint residual, and the multiplier absorbs the mean of
/// the remaining residual.
#[derive(Debug, Clone)]
pub struct MeanConstrainedAmg {
    inner: Vec<usize>,
    multiplier: usize,
    a_ii: SparseMatrix,
    amg: AmgHierarchy,
}

impl MeanConstrainedAmg {
    pub fn new(a: &SparseMatrix, multiplier: usize, opts: &AmgOptions) -> Result<Self> {
        let n = a.nrows();
        let inner: Vec<usize> = (0..n).filter(|&i| i != multiplier).collect();
        for &i in &inner {
            if a.get(i, multiplier) != 1.0 || a.get(multiplier, i) != 1.0 {
                return Err(Error::PreconditionerSetup(format!(
                    "multiplier border is not all ones at unknown {i}"
                )));
            }
        }
        let a_ii = a.submatrix(&inner, &inner);
        let amg = amg_setup(&a_ii, None, opts)?;
        Ok(MeanConstrainedAmg {
            inner,
            multiplier,
            a_ii,
            amg,
        })
    }

    pub fn hierarchy(&self) -> &AmgHierarchy {
        &self.amg
    }
}

impl LinearOperator for MeanConstrainedAmg {
    fn dim(&self) -> usize {
        self.inner.len() + 1
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.inner.len() as f64;
        let r_i: Vec<f64> = self.inner.iter().map(|&i| r[i]).collect();
        let mut y = self.amg.cycle(&r_i);
        let mean = y.iter().sum::<f64>() / n;
        y.iter_mut().for_each(|v| *v -= mean);
        let ay = self.a_ii.mul_vec(&y);
        let lambda = r_i.iter().zip(&ay).map(|(a, b)| a - b).sum::<f64>() / n;
        let shift = r[self.multiplier] / n;
        for (k, &i) in self.inner.iter().enumerate() {
            z[i] = y[k] + shift;
        }
        z[self.multiplier] = lambda;
    }
}

/// The 2×2 block operator [K G; B L] acting on (ũ, p).
#[derive(Debug, Clone)]
pub struct BlockOperator<'a> {
    pub k: &'a SparseMatrix,
    pub g: &'a SparseMatrix,
    pub b: &'a SparseMatrix,
    pub l: &'a SparseMatrix,
}

impl LinearOperator for BlockOperator<'_> {
    fn dim(&self) -> usize {
        self.k.nrows() + self.l.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.k.nrows();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.k.mul_vec_into(xu, yu);
        self.g.mul_vec_add(1.0, xp, yu);
        self.l.mul_vec_into(xp, yp);
        self.b.mul_vec_add(1.0, xu, yp);
    }
}

/// Upper block-triangular preconditioner: z_p = M_L r_p,
/// z_ũ = M_S̃ (r_ũ − G z_p).
pub struct BlockPreconditioner<'a> {
    pub schur: &'a dyn LinearOperator,
    pub laplacian: &'a dyn LinearOperator,
    pub g: &'a SparseMatrix,
}

impl LinearOperator for BlockPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.schur.dim() + self.laplacian.dim()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let nu = self.schur.dim();
        let (ru, rp) = r.split_at(nu);
        let (zu, zp) = z.split_at_mut(nu);
        self.laplacian.apply(rp, zp);
        let mut t = ru.to_vec();
        self.g.mul_vec_add(-1.0, zp, &mut t);
        self.schur.apply(&t, zu);
    }
}

/// Options for [`solve_block_system`].
#[derive(Debug, Clone, Default)]
pub struct BlockSolveOptions {
    pub gmres: GmresOptions,
    pub amg: AmgOptions,
    /// Border unknowns of S̃ (indices local to the ũ block).
    pub schur_border: Vec<usize>,
    /// Index of the zero-mean multiplier within the p block, if any.
    pub laplacian_multiplier: Option<usize>,
    /// Aggregation labels for the ũ block.
    pub schur_labels: Option<Vec<usize>>,
    pub precondition: bool,
}

/// Solves [K G; B L] (u, p) = (f, g) with preconditioned GMRES.
pub fn solve_block_system(
    k: &SparseMatrix,
    g: &SparseMatrix,
    b: &SparseMatrix,
    l: &SparseMatrix,
    rhs: &[f64],
    opts: &BlockSolveOptions,
) -> Result<(Vec<f64>, KrylovReport)> {
    let op = BlockOperator { k, g, b, l };
    if !opts.precondition {
        let (x, rep) = gmres(&op, &IdentityOperator(op.dim()), rhs, None, &opts.gmres);
        return Ok((x, rep));
    }
    let t0 = Instant::now();
    let s = approx_schur(k, g, b, l)?;
    let ms = BorderedAmg::new(&s, &opts.schur_border, opts.schur_labels.as_deref(), &opts.amg)?;
    let ml: Box<dyn LinearOperator> = match opts.laplacian_multiplier {
        Some(m) => Box::new(MeanConstrainedAmg::new(l, m, &opts.amg)?),
        None => Box::new(BorderedAmg::new(l, &[], None, &opts.amg)?),
    };
    let setup = t0.elapsed().as_secs_f64();
    let pre = BlockPreconditioner {
        schur: &ms,
        laplacian: ml.as_ref(),
        g,
    };
    let (x, mut rep) = gmres(&op, &pre, rhs, None, &opts.gmres);
    rep.setup_s = setup;
    rep.fallback = ms.hierarchy().used_fallback();
    Ok((x, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_examples() {
        let i2 = SparseMatrix::identity(2);
        let l = SparseMatrix::diagonal_matrix(&[2.0, 2.0]);
        let s = approx_schur(&i2, &i2, &i2, &l).unwrap();
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let zero = SparseMatrix::zeros(2, 2);
        let k = SparseMatrix::diagonal_matrix(&[3.0, 4.0]);
        assert_eq!(approx_schur(&k, &i2, &zero, &l).unwrap(), k);
        let l0 = SparseMatrix::diagonal_matrix(&[2.0, 0.0]);
        assert!(matches!(approx_schur(&i2, &i2, &i2, &l0), Err(Error::PreconditionerSetup(_))));
    }

    #[test]
    fn exact_block_preconditioner() {
        let n = 5;
        let i = SparseMatrix::identity(n);
        let z = SparseMatrix::zeros(n, n);
        let rhs: Vec<f64> = (0..2 * n).map(|k| k as f64 - 2.0).collect();
        let opts = BlockSolveOptions {
            precondition: true,
            ..BlockSolveOptions::default()
        };
        let (x, rep) = solve_block_system(&i, &z, &z, &i, &rhs, &opts).unwrap();
        assert_eq!(rep.iterations, 1);
        for (a, b) in x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-14);
        }
        let ms = BorderedAmg::new(&i, &[], None, &AmgOptions::default()).unwrap();
        let pre = BlockPreconditioner {
            schur: &ms,
            laplacian: &ms,
            g: &z,
        };
        let mut out = vec![1.0; 2 * n];
        pre.apply(&[0.0; 10], &mut out);
        assert_eq!(out, vec![0.0; 10]);
    }

    #[test]
    fn mean_constrained_exact_for_small_symmetric_systems() {
        // singular 1D Neumann Laplacian bordered by a mean constraint
        let n = 30;
        let mut t = Triplets::new(n + 1, n + 1);
        for i in 0..n {
            let mut d = 0.0;
            if i > 0 {
                t.push(i, i - 1, -1.0);
                d += 1.0;
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                d += 1.0;
            }
            t.push(i, i, d);
            t.push(i, n, 1.0);
            t.push(n, i, 1.0);
        }
        let a = t.build();
        let m = MeanConstrainedAmg::new(&a, n, &AmgOptions::default()).unwrap();
        let r: Vec<f64> = (0..=n).map(|k| (k as f64 * 0.7).sin()).collect();
        let mut z = vec![0.0; n + 1];
        m.apply(&r, &mut z);
        let exact = a.to_dense().lu().solve(&DVector::from_column_slice(&r)).unwrap();
        for k in 0..=n {
            assert!((z[k] - exact[k]).abs() < 1e-9 * exact.amax());
        }
    }

    #[test]
    fn bordered_zero_diagonal_rows() {
        // 1D Dirichlet Laplacian with two extra unknowns coupled through
        // zero-diagonal rows, as for rigid-body force balances
        let n = 40;
        let mut t = Triplets::new(n + 2, n + 2);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        t.push(3, n, -0.5);
        t.push(n, 3, 1.0);
        t.push(n, 4, 1.0);
        t.push(20, n + 1, 1.0);
        t.push(n + 1, 21, -1.0);
        let a = t.build();
        let m = BorderedAmg::new(&a, &[n, n + 1], None, &AmgOptions::default()).unwrap();
        let r: Vec<f64> = (0..n + 2).map(|k| (k as f64 * 0.3).cos()).collect();
        let mut z = vec![0.0; n + 2];
        m.apply(&r, &mut z);
        let exact = a.to_dense().lu().solve(&DVector::from_column_slice(&r)).unwrap();
        for k in 0..n + 2 {
            assert!((z[k] - exact[k]).abs() < 1e-9 * exact.amax());
        }
    }

    #[test]
    fn krylov_csv() {
        let rep = KrylovReport {
            dofs: 10,
            iterations: 3,
            setup_s: 0.5,
            solve_s: 0.25,
            ..KrylovReport::default()
        };
        assert_eq!(KrylovReport::CSV_HEADER, "dofs,iters,setup_s,solve_s,total_s");
        assert!(rep.csv_row().starts_with("10,3,5.0000000000000000e-1,"));
    }
}
