//! Dense symmetric linear algebra: packed symmetric storage, cyclic Jacobi
//! eigen-decomposition, Cholesky and the Schur-complement definiteness test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Real symmetric matrix stored as its packed lower triangle, so symmetry is
/// exact by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            lower: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Takes the lower triangle of a square matrix, rejecting inputs whose
    /// asymmetry exceeds `1e-9·(1 + max|m_ij|)`.
    pub fn from_dense(m: &Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = 1.0 + m.amax();
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Symmetric part `(M + Mᵀ)/2` of any square matrix.
    pub fn sym_part(m: &Mat) -> Self {
        assert!(m.is_square());
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Mat::zeros(n, n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Self::from_dense(&m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[packed(i, j)] = v;
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            lower: self.lower.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.to_dense().norm()
    }

    pub fn quad_form(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * z[i] * z[i];
            for j in 0..i {
                s += 2.0 * self.get(i, j) * z[i] * z[j];
            }
        }
        s
    }

    pub fn eig(&self) -> Result<SymEig> {
        sym_eig(self)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*sym_eig(self)?.values.last().unwrap_or(&f64::NEG_INFINITY))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(*sym_eig(self)?.values.first().unwrap_or(&f64::INFINITY))
    }

    pub fn determinant(&self) -> Result<f64> {
        Ok(sym_eig(self)?.values.iter().product())
    }
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Mat,
}

impl SymEig {
    pub fn reconstruct(&self) -> Mat {
        let d = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition. Iterates until the off-diagonal
/// Frobenius norm drops below `1e-12·‖M‖_F`.
pub fn sym_eig(m: &SymMatrix) -> Result<SymEig> {
    let n = m.dim();
    let mut a = m.to_dense();
    let mut v = Mat::identity(n, n);
    let total = a.norm();
    if n == 0 {
        return Ok(SymEig {
            values: vec![],
            vectors: v,
        });
    }
    if total == 0.0 || !total.is_finite() {
        if !total.is_finite() {
            return Err(Error::Numeric("non-finite matrix entry".into()));
        }
        return Ok(SymEig {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let target = 1e-12 * total;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off < target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) >= target {
        return Err(Error::Numeric(format!(
            "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEig { values, vectors })
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Lower Cholesky factor `L` with `LLᵀ = M`. The failing pivot is reported
/// 1-based.
pub fn cholesky(m: &SymMatrix) -> Result<Mat> {
    let n = m.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j + 1 });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`, column by column.
pub fn forward_sub(l: &Mat, b: &Mat) -> Mat {
    let n = l.nrows();
    let mut y = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = y[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * y[(k, c)];
            }
            y[(i, c)] = s / l[(i, i)];
        }
    }
    y
}

/// Solves `Lᵀ x = y` for lower-triangular `L`.
pub fn backward_sub(l: &Mat, y: &Mat) -> Mat {
    let n = l.nrows();
    let mut x = y.clone();
    for c in 0..y.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Inverse of a positive definite matrix through its Cholesky factor.
pub fn spd_inverse(m: &SymMatrix) -> Result<SymMatrix> {
    let l = cholesky(m)?;
    let id = Mat::identity(m.dim(), m.dim());
    let inv = backward_sub(&l, &forward_sub(&l, &id));
    Ok(SymMatrix::sym_part(&inv))
}

/// Assembles the symmetric block matrix `[[A, Bᵀ], [B, C]]` with `B` of size
/// `m×n`.
pub fn block_sym(a: &SymMatrix, b: &Mat, c: &SymMatrix) -> Result<SymMatrix> {
    let n = a.dim();
    let m = c.dim();
    if b.nrows() != m || b.ncols() != n {
        return Err(Error::Dimension(format!(
            "off-diagonal block is {}x{}, expected {m}x{n}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(SymMatrix::from_fn(n + m, |i, j| match (i < n, j < n) {
        (true, true) => a.get(i, j),
        (false, true) => b[(i - n, j)],
        (false, false) => c.get(i - n, j - n),
        (true, false) => unreachable!("lower triangle only"),
    }))
}

/// Decides `[[A, Bᵀ], [B, C]] ⪰ 0` through the Schur complement
/// `A − BᵀC⁻¹B ⪰ 0` and cross-checks the answer against the eigenvalues of the
/// full block. Disagreement outside a rounding band is reported as a numeric
/// error.
pub fn schur_psd(a: &SymMatrix, b: &Mat, c: &SymMatrix) -> Result<bool> {
    let lc = cholesky(c).map_err(|_| Error::Precondition("C block must be positive definite".into()))?;
    let w = forward_sub(&lc, b); // L⁻¹B, so BᵀC⁻¹B = WᵀW
    let complement = SymMatrix::sym_part(&(a.to_dense() - w.transpose() * &w));
    let full = block_sym(a, b, c)?;
    let scale = 1.0 + full.frobenius();
    let band = 1e-9 * scale;
    let lam_complement = complement.lambda_min()?;
    let lam_full = full.lambda_min()?;
    let by_complement = lam_complement >= -band;
    let by_full = lam_full >= -band;
    if by_complement != by_full && lam_complement.abs() > band && lam_full.abs() > band {
        return Err(Error::Numeric(format!(
            "Schur complement test disagrees with the full block (λ_min {lam_complement:.3e} vs {lam_full:.3e})"
        )));
    }
    Ok(by_complement)
}
