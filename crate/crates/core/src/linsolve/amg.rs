//! Smoothed-aggregation algebraic multigrid used as a fixed V-cycle
//! preconditioner.

use nalgebra::{DMatrix, DVector};

use super::csr::{SparseMatrix, Triplets};
use crate::basis::pseudo_inverse;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AmgOptions {
    /// Strength threshold on the symmetrized matrix.
    pub strength: f64,
    pub max_coarse: usize,
    pub jacobi_weight: f64,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub max_levels: usize,
    /// Coarsening is considered stagnant when n_coarse > ratio · n_fine.
    pub stagnation_ratio: f64,
    /// Largest operator that the stagnation fallback factorizes densely.
    pub max_direct: usize,
}

impl Default for AmgOptions {
    fn default() -> Self {
        AmgOptions {
            strength: 0.08,
            max_coarse: 64,
            jacobi_weight: 2.0 / 3.0,
            pre_sweeps: 1,
            post_sweeps: 1,
            max_levels: 25,
            stagnation_ratio: 0.9,
            max_direct: 6000,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: SparseMatrix,
    p: SparseMatrix,
    r: SparseMatrix,
    inv_diag: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Coarse {
    /// Dense pseudo-inverse (tolerates the singular Neumann Laplacian).
    Dense(DMatrix<f64>),
    /// Purely diagonal operator.
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse_a: SparseMatrix,
    coarse: Coarse,
    options: AmgOptions,
    fallback: bool,
}

impl AmgHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.levels.iter().map(|l| l.a.nrows()).collect();
        v.push(self.coarse_a.nrows());
        v
    }

    /// True when coarsening stagnated and the remaining operator is solved
    /// directly.
    pub fn used_fallback(&self) -> bool {
        self.fallback
    }

    pub fn dim(&self) -> usize {
        self.levels.first().map_or(self.coarse_a.nrows(), |l| l.a.nrows())
    }

    /// One V-cycle applied to `r` from a zero initial guess.
    pub fn cycle(&self, r: &[f64]) -> Vec<f64> {
        self.cycle_level(0, r)
    }

    fn cycle_level(&self, k: usize, b: &[f64]) -> Vec<f64> {
        if k == self.levels.len() {
            return match &self.coarse {
                Coarse::Dense(inv) => (inv * DVector::from_column_slice(b)).as_slice().to_vec(),
                Coarse::Diagonal(d) => b.iter().zip(d).map(|(x, di)| if *di != 0.0 { x / di } else { 0.0 }).collect(),
            };
        }
        let lvl = &self.levels[k];
        let w = self.options.jacobi_weight;
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut res = b.to_vec();
        for sweep in 0..self.options.pre_sweeps {
            if sweep > 0 {
                residual(&lvl.a, &x, b, &mut res);
            }
            for i in 0..n {
                x[i] += w * lvl.inv_diag[i] * res[i];
            }
        }
        residual(&lvl.a, &x, b, &mut res);
        let rc = lvl.r.mul_vec(&res);
        let ec = self.cycle_level(k + 1, &rc);
        lvl.p.mul_vec_add(1.0, &ec, &mut x);
        for _ in 0..self.options.post_sweeps {
            residual(&lvl.a, &x, b, &mut res);
            for i in 0..n {
                x[i] += w * lvl.inv_diag[i] * res[i];
            }
        }
        x
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64], out: &mut [f64]) {
    a.mul_vec_into(x, out);
    for (o, bi) in out.iter_mut().zip(b) {
        *o = bi - *o;
    }
}

fn is_diagonal(a: &SparseMatrix) -> bool {
    (0..a.nrows()).all(|r| a.row(r).all(|(c, _)| c == r))
}

fn inverse_diagonal(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 0.0 }).collect()
}

/// Strong-connection graph of ½(A + Aᵀ) restricted to equal labels.
fn strength_graph(a: &SparseMatrix, labels: &[usize], theta: f64) -> Vec<Vec<usize>> {
    let at = a.transpose();
    let sym = a.add(0.5, &at, 0.5);
    let diag: Vec<f64> = sym.diagonal().iter().map(|d| d.abs()).collect();
    (0..sym.nrows())
        .map(|i| {
            sym.row(i)
                .filter(|&(j, v)| j != i && labels[i] == labels[j] && v.abs() >= theta * (diag[i] * diag[j]).sqrt() && v != 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Greedy aggregation in three passes; returns the aggregate id of every
/// node and the number of aggregates.
fn aggregate(strong: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let n = strong.len();
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] != NONE || strong[i].is_empty() {
            continue;
        }
        if strong[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let snapshot = agg.clone();
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(&j) = strong[i].iter().find(|&&j| snapshot[j] != NONE) {
                agg[i] = snapshot[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            agg[i] = count;
            for &j in &strong[i] {
                if agg[j] == NONE {
                    agg[j] = count;
                }
            }
            count += 1;
        }
    }
    (agg, count)
}

/// Spectral radius estimate of D⁻¹A by power iteration.
fn spectral_radius(a: &SparseMatrix, inv_diag: &[f64]) -> f64 {
    let n = a.nrows();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0).collect();
    let mut rho = 0.0;
    for _ in 0..20 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for v in &mut x {
            *v /= norm;
        }
        let mut y = a.mul_vec(&x);
        for (yi, di) in y.iter_mut().zip(inv_diag) {
            *yi *= di;
        }
        rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y;
    }
    rho
}

fn dense_inverse(a: &SparseMatrix) -> DMatrix<f64> {
    let d = a.to_dense();
    if let Some(inv) = d.clone().lu().try_inverse() {
        if inv.iter().all(|v| v.is_finite()) {
            let cond = inv.amax() * d.amax();
            if cond < 1e13 {
                return inv;
            }
        }
    }
    pseudo_inverse(&d).0
}

/// Builds the hierarchy. `labels` (one per unknown) restricts aggregation to
/// unknowns sharing a label, e.g. the velocity component.
pub fn amg_setup(a: &SparseMatrix, labels: Option<&[usize]>, options: &AmgOptions) -> Result<AmgHierarchy> {
    if a.nrows() != a.ncols() {
        return Err(Error::PreconditionerSetup(format!(
            "AMG needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut labels: Vec<usize> = labels.map_or_else(|| vec![0; a.nrows()], <[usize]>::to_vec);
    let mut levels = Vec::new();
    let mut current = a.clone();
    let mut fallback = false;
    loop {
        let n = current.nrows();
        if n <= options.max_coarse || levels.len() + 1 >= options.max_levels || is_diagonal(&current) {
            break;
        }
        let inv_diag = inverse_diagonal(&current);
        let strong = strength_graph(&current, &labels, options.strength);
        let (agg, nc) = aggregate(&strong);
        if nc as f64 > options.stagnation_ratio * n as f64 || nc == 0 {
            fallback = n > options.max_coarse;
            break;
        }
        let mut sizes = vec![0usize; nc];
        for &g in &agg {
            sizes[g] += 1;
        }
        let mut tent = Triplets::new(n, nc);
        let mut coarse_labels = vec![0; nc];
        for (i, &g) in agg.iter().enumerate() {
            tent.push(i, g, 1.0 / (sizes[g] as f64).sqrt());
            coarse_labels[g] = labels[i];
        }
        let tent = tent.build();
        let rho = spectral_radius(&current, &inv_diag);
        let omega = if rho > 0.0 { (4.0 / 3.0) / rho } else { 0.0 };
        let smoother = current.scale_rows(&inv_diag);
        let p = tent.add(1.0, &smoother.matmul(&tent), -omega);
        let r = p.transpose();
        let coarse = r.matmul(&current).matmul(&p);
        levels.push(Level {
            a: current,
            p,
            r,
            inv_diag,
        });
        current = coarse;
        labels = coarse_labels;
    }
    if current.nrows() > options.max_direct && !is_diagonal(&current) {
        return Err(Error::PreconditionerSetup(format!(
            "coarsening stalled at {} unknowns, above the direct-solve limit {}",
            current.nrows(),
            options.max_direct
        )));
    }
    let coarse = if is_diagonal(&current) {
        Coarse::Diagonal(current.diagonal())
    } else {
        Coarse::Dense(dense_inverse(&current))
    };
    Ok(AmgHierarchy {
        levels,
        coarse_a: current,
        coarse,
        options: options.clone(),
        fallback,
    })
}
