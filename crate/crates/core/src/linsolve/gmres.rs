use std::time::Instant;

use super::{norm, KrylovReport, LinearOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-6,
            max_iter: 1000,
            restart: 200,
        }
    }
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
///
/// Convergence is judged on the true residual ‖b − A x‖ / ‖b‖. When the
/// iteration limit is hit the best iterate is returned with
/// `converged = false`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &GmresOptions,
) -> (Vec<f64>, KrylovReport) {
    let start = Instant::now();
    let n = b.len();
    let mut report = KrylovReport {
        dofs: n,
        ..KrylovReport::default()
    };
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.converged = true;
        report.history.push(0.0);
        report.solve_s = start.elapsed().as_secs_f64();
        return (x, report);
    }
    let mut r = true_residual(a, &x, b);
    let mut rel = norm(&r) / bnorm;
    report.history.push(rel);
    let restart = opts.restart.max(1);
    'outer: while rel > opts.tol && report.iterations < opts.max_iter {
        let beta = norm(&r);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && report.iterations < opts.max_iter {
            let mut zk = vec![0.0; n];
            m.apply(&v[k], &mut zk);
            let mut w = vec![0.0; n];
            a.apply(&zk, &mut w);
            z.push(zk);
            for (j, vj) in v.iter().enumerate() {
                let hj: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / d;
                sn[k] = h[k + 1][k] / d;
            }
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            report.iterations += 1;
            k += 1;
            let est = g[k].abs() / bnorm;
            report.history.push(est);
            let breakdown = hn <= 1e-14 * beta;
            if est <= opts.tol || breakdown {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[j]) {
                *xi += yj * zi;
            }
        }
        r = true_residual(a, &x, b);
        let new_rel = norm(&r) / bnorm;
        let stalled = new_rel >= rel * (1.0 - 1e-12);
        rel = new_rel;
        if stalled && rel > opts.tol {
            break 'outer;
        }
    }
    report.relative_residual = rel;
    report.converged = rel <= opts.tol;
    report.solve_s = start.elapsed().as_secs_f64();
    (x, report)
}

fn true_residual(a: &dyn LinearOperator, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; b.len()];
    a.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::{IdentityOperator, SparseMatrix};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_one_iteration() {
        let a = SparseMatrix::identity(10);
        let b: Vec<f64> = (0..10).map(|i| i as f64 + 1.0).collect();
        let (x, rep) = gmres(&a, &IdentityOperator(10), &b, None, &GmresOptions::default());
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_random_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let mut d = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) / (n as f64).sqrt());
        for i in 0..n {
            d[(i, i)] += 3.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = SparseMatrix::from_dense(&d);
        let opts = GmresOptions {
            tol: 1e-12,
            ..GmresOptions::default()
        };
        let (x, rep) = gmres(&a, &IdentityOperator(n), &b, None, &opts);
        let exact = d.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let err = (DVector::from_vec(x) - &exact).norm() / exact.norm();
        assert!(err <= 1e-8, "{err}");
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn restart_and_iteration_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60;
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { rng.gen_range(-0.1..0.1) });
        let a = SparseMatrix::from_dense(&d);
        let b = vec![1.0; n];
        let opts = GmresOptions {
            tol: 1e-10,
            max_iter: 400,
            restart: 5,
        };
        let (_, rep) = gmres(&a, &IdentityOperator(n), &b, None, &opts);
        assert!(rep.converged, "{:?}", rep.relative_residual);
        let opts = GmresOptions {
            tol: 1e-14,
            max_iter: 3,
            restart: 200,
        };
        let (x, rep) = gmres(&a, &IdentityOperator(n), &b, None, &opts);
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(x.len(), n);
    }

    #[test]
    fn zero_rhs() {
        let a = SparseMatrix::identity(4);
        let (x, rep) = gmres(&a, &IdentityOperator(4), &[0.0; 4], None, &GmresOptions::default());
        assert_eq!(x, vec![0.0; 4]);
        assert!(rep.converged && rep.iterations == 0);
    }
}
