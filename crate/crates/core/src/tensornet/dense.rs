//! Dense column-transfer references built directly from bond energies,
//! independent of the factorized operator. Column configurations are
//! indexed as base-q numbers with row 0 most significant.

use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::model::{Columns, LatticeModelSpec, VerticalBc};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest column dimension stored as a dense matrix.
pub const DENSE_COLUMN_BOUND: usize = 4096;
/// Largest column dimension handled matrix-free.
pub const MATRIX_FREE_BOUND: usize = 1 << 20;

/// Per-column data of a uniform strip.
#[derive(Debug, Clone)]
pub struct DenseColumns {
    pub q: usize,
    pub rows: usize,
    /// `ln q_alpha` for each column configuration.
    pub log_column: Vec<f64>,
    /// `-E(s, t)` for one horizontal bond.
    pub log_bond: DMatrix<f64>,
}

impl DenseColumns {
    pub fn new(model: &LatticeModelSpec) -> Result<Self> {
        model.validate()?;
        let k = model.uniform_k()?;
        let (q, rows) = (model.q, model.rows);
        let dim = (q as f64).powi(rows as i32);
        if dim > MATRIX_FREE_BOUND as f64 {
            return Err(Error::TooLarge { states: dim, bound: MATRIX_FREE_BOUND as f64 });
        }
        let dim = dim as usize;
        let mut log_bond = DMatrix::zeros(q, q);
        for s in 0..q {
            for t in 0..q {
                log_bond[(s, t)] = -model.kind.pair_energy(q, k, s, t)?;
            }
        }
        let ring = model.vertical_bc == VerticalBc::Periodic && rows > 2;
        let log_column = (0..dim)
            .map(|idx| {
                let c = digits(idx, q, rows);
                let chain: f64 = c.windows(2).map(|w| log_bond[(w[0], w[1])]).sum();
                chain + if ring { log_bond[(c[rows - 1], c[0])] } else { 0.0 }
            })
            .collect();
        Ok(DenseColumns { q, rows, log_column, log_bond })
    }

    pub fn dim(&self) -> usize {
        self.log_column.len()
    }

    pub fn log_between(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (digits(a, self.q, self.rows), digits(b, self.q, self.rows));
        ca.iter().zip(&cb).map(|(&x, &y)| self.log_bond[(x, y)]).sum()
    }

    /// `M[a][b] = sqrt(q_a) q_ab sqrt(q_b)`.
    pub fn transfer_matrix(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_COLUMN_BOUND {
            return Err(Error::TooLarge { states: dim as f64, bound: DENSE_COLUMN_BOUND as f64 });
        }
        Ok(DMatrix::from_fn(dim, dim, |a, b| {
            (0.5 * self.log_column[a] + self.log_between(a, b) + 0.5 * self.log_column[b]).exp()
        }))
    }

    /// `y = M x` without forming `M`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut y: Vec<f64> = x.iter().zip(&self.log_column).map(|(v, l)| v * (0.5 * l).exp()).collect();
        let bond = self.log_bond.map(f64::exp);
        let mut scratch = vec![0.0; q];
        for row in 0..self.rows {
            let stride = q.pow((self.rows - 1 - row) as u32);
            let block = stride * q;
            for base in (0..y.len()).step_by(block) {
                for off in 0..stride {
                    for (t, sc) in scratch.iter_mut().enumerate() {
                        *sc = y[base + off + t * stride];
                    }
                    for s in 0..q {
                        y[base + off + s * stride] = (0..q).map(|t| bond[(s, t)] * scratch[t]).sum();
                    }
                }
            }
        }
        for (v, l) in y.iter_mut().zip(&self.log_column) {
            *v *= (0.5 * l).exp();
        }
        y
    }
}

pub fn digits(mut index: usize, q: usize, rows: usize) -> Vec<usize> {
    let mut out = vec![0; rows];
    for slot in out.iter_mut().rev() {
        *slot = index % q;
        index /= q;
    }
    out
}

/// Dominant eigenpair `(Lambda, u)` of the strip transfer matrix; `u` is
/// normalized and positive.
pub fn dense_dominant(cols: &DenseColumns) -> Result<(f64, Vec<f64>)> {
    let (lambda, mut u) = if cols.dim() <= DENSE_COLUMN_BOUND {
        let eig = SymmetricEigen::new(cols.transfer_matrix()?);
        let top = eig.eigenvalues.imax();
        (eig.eigenvalues[top], eig.eigenvectors.column(top).iter().copied().collect::<Vec<_>>())
    } else {
        lanczos_dominant(cols.dim(), |x| cols.apply(x), 1e-11)?
    };
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((lambda, u))
}

/// Restarted Lanczos for the largest eigenpair of a symmetric operator.
/// Krylov vectors are regenerated rather than stored.
pub fn lanczos_dominant(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>, tolerance: f64) -> Result<(f64, Vec<f64>)> {
    let steps = dim.min(40);
    let mut start = vec![1.0 / (dim as f64).sqrt(); dim];
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..500 {
        let (alphas, betas) = lanczos_pass(&start, steps, &apply, None);
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let top = eig.eigenvalues.imax();
        let theta = eig.eigenvalues[top];
        let coeffs: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        let mut ritz = vec![0.0; dim];
        lanczos_pass(&start, m, &apply, Some((&coeffs, &mut ritz)));
        let n = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= n);
        let image = apply(&ritz);
        let residual = norm(&image.iter().zip(&ritz).map(|(y, x)| y - theta * x).collect::<Vec<_>>());
        start = ritz;
        if residual <= tolerance * theta.abs() {
            return Ok((theta, start));
        }
    }
    Err(Error::Numerical("Lanczos did not converge".into()))
}

fn lanczos_pass(
    start: &[f64],
    steps: usize,
    apply: &impl Fn(&[f64]) -> Vec<f64>,
    mut accumulate: Option<(&[f64], &mut Vec<f64>)>,
) -> (Vec<f64>, Vec<f64>) {
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    let mut prev = vec![0.0; start.len()];
    let mut cur = start.to_vec();
    let mut beta = 0.0;
    for j in 0..steps {
        if let Some((coeffs, out)) = accumulate.as_mut() {
            for (o, c) in out.iter_mut().zip(&cur) {
                *o += coeffs[j] * c;
            }
        }
        let mut w = apply(&cur);
        let alpha: f64 = w.iter().zip(&cur).map(|(a, b)| a * b).sum();
        for ((wi, ci), pi) in w.iter_mut().zip(&cur).zip(&prev) {
            *wi -= alpha * ci + beta * pi;
        }
        alphas.push(alpha);
        let next_beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if j + 1 == steps || next_beta <= 1e-14 * alpha.abs() {
            break;
        }
        betas.push(next_beta);
        w.iter_mut().for_each(|x| *x /= next_beta);
        prev = std::mem::replace(&mut cur, w);
        beta = next_beta;
    }
    (alphas, betas)
}

/// Shannon mutual information (bits) of a joint table given as log weights.
fn mi_from_log_joint(log_joint: &DMatrix<f64>) -> Result<f64> {
    let shift = log_joint.max();
    let joint = log_joint.map(|l| (l - shift).exp());
    let total = joint.sum();
    let p = joint / total;
    let pa: Vec<f64> = p.row_iter().map(|r| r.sum()).collect();
    let pb: Vec<f64> = p.column_iter().map(|c| c.sum()).collect();
    let s_ab = shannon_entropy(p.as_slice())?;
    Ok(shannon_entropy(&pa)? + shannon_entropy(&pb)? - s_ab)
}

/// Strip mutual information as the Shannon information of the joint
/// border-column distribution `p(a, b) = u_a M_ab u_b / Lambda`.
pub fn mi_strip_dense(model: &LatticeModelSpec) -> Result<f64> {
    let cols = DenseColumns::new(model)?;
    let dim = cols.dim();
    if (dim * dim) as f64 > crate::brute::ENUMERATION_BOUND {
        return Err(Error::TooLarge { states: (dim * dim) as f64, bound: crate::brute::ENUMERATION_BOUND });
    }
    let (_, u) = dense_dominant(&cols)?;
    let log_joint = DMatrix::from_fn(dim, dim, |a, b| {
        u[a].abs().ln() + 0.5 * cols.log_column[a] + cols.log_between(a, b) + 0.5 * cols.log_column[b] + u[b].abs().ln()
    });
    mi_from_log_joint(&log_joint)
}

/// `ln` of the left-environment vector `L_a = sum over n columns ending in a`,
/// including the vertical bonds of column `a`.
fn left_environment(cols: &DenseColumns, n: usize) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::InvalidModel("need at least one column".into()));
    }
    let dim = cols.dim();
    let mut log_env = DVector::from_iterator(dim, cols.log_column.iter().copied());
    for _ in 1..n {
        let shift = log_env.max();
        let env = log_env.map(|l| (l - shift).exp());
        log_env = DVector::from_fn(dim, |b, _| {
            let s: f64 = (0..dim).map(|a| env[a] * cols.log_between(a, b).exp()).sum();
            s.ln() + shift + cols.log_column[b]
        });
    }
    Ok(log_env)
}

/// Mutual information (bits) across the cut of a finite cylinder with
/// `n_left` and `n_right` columns.
pub fn mi_finite_dense(model: &LatticeModelSpec, n_left: usize, n_right: usize) -> Result<f64> {
    let cols = DenseColumns::new(model)?;
    let dim = cols.dim();
    if dim > DENSE_COLUMN_BOUND {
        return Err(Error::TooLarge { states: dim as f64, bound: DENSE_COLUMN_BOUND as f64 });
    }
    let left = left_environment(&cols, n_left)?;
    let right = left_environment(&cols, n_right)?;
    let log_joint = DMatrix::from_fn(dim, dim, |a, b| left[a] + cols.log_between(a, b) + right[b]);
    mi_from_log_joint(&log_joint)
}

/// `ln Z` of a finite lattice with `n` columns by dense column transfer.
pub fn log_z_finite_dense(model: &LatticeModelSpec, n: usize) -> Result<f64> {
    let cols = DenseColumns::new(model)?;
    let env = left_environment(&cols, n)?;
    let shift = env.max();
    Ok(env.iter().map(|l| (l - shift).exp()).sum::<f64>().ln() + shift)
}

/// `ln Z_A(a)`: `n_bulk` free columns to the left of the fixed column `a`,
/// excluding the bonds inside `a`.
pub fn log_partial_dense(model: &LatticeModelSpec, n_bulk: usize, alpha: usize) -> Result<f64> {
    let cols = DenseColumns::new(model)?;
    let env = left_environment(&cols, n_bulk)?;
    let shift = env.max();
    Ok((0..cols.dim()).map(|a| (env[a] - shift + cols.log_between(a, alpha)).exp()).sum::<f64>().ln() + shift)
}

/// The strip model with a finite column count, for enumeration oracles.
pub fn finite_version(model: &LatticeModelSpec, cols: usize) -> LatticeModelSpec {
    LatticeModelSpec { cols: Columns::Finite(cols), ..model.clone() }
}
