use once_cell::sync::OnceCell;

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Symmetric matrix in packed lower-triangular storage, with a lazily cached
/// Cholesky factor.
///
/// The name records intent: every matrix built through this type is a Gram
/// matrix of some function family, so positive definiteness is expected and
/// its failure is diagnostic information (dependent family, or precision
/// exhausted), not a programming error.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    dim: usize,
    bits: u32,
    /// Row-major packed lower triangle: entry (i, j) with j <= i lives at
    /// i*(i+1)/2 + j.
    data: Vec<Scalar>,
    factor: OnceCell<CholeskyFactor>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl SpdMatrix {
    /// Builds a `dim x dim` symmetric matrix from an entry generator, invoked
    /// once per lower-triangular position (row index >= column index).
    pub fn from_fn<F>(dim: usize, mut entry: F) -> Self
    where
        F: FnMut(usize, usize) -> Scalar,
    {
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        let mut bits = 128;
        for i in 0..dim {
            for j in 0..=i {
                let e = entry(i, j);
                bits = bits.max(e.prec());
                data.push(e);
            }
        }
        SpdMatrix {
            dim,
            bits,
            data,
            factor: OnceCell::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        assert!(i < self.dim && j < self.dim, "index out of range");
        if j <= i {
            &self.data[packed_index(i, j)]
        } else {
            &self.data[packed_index(j, i)]
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Scalar>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    /// y = A x, accumulated in ascending column order.
    pub fn mat_vec(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut y = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut acc = Scalar::zero(self.bits);
            for (j, xj) in x.iter().enumerate() {
                acc = &acc + &(self.get(i, j) * xj);
            }
            y.push(acc);
        }
        Ok(y)
    }

    /// Frobenius norm over the full square matrix (off-diagonal entries
    /// counted twice).
    pub fn frobenius_norm(&self) -> Scalar {
        let mut acc = Scalar::zero(self.bits);
        let two = Scalar::from_u64(2, self.bits);
        for i in 0..self.dim {
            for j in 0..=i {
                let sq = self.get(i, j).square();
                if i == j {
                    acc = &acc + &sq;
                } else {
                    acc = &acc + &(&two * &sq);
                }
            }
        }
        acc.sqrt()
    }

    /// The cached Cholesky factor, computing it on first use. A failure is
    /// not cached, but callers treat it as terminal for this matrix anyway
    /// (they rebuild at higher precision or report the verdict).
    pub fn factor(&self) -> Result<&CholeskyFactor> {
        self.factor.get_or_try_init(|| cholesky_spd(self))
    }

    /// Solves A x = rhs through the Cholesky factor.
    pub fn solve(&self, rhs: &[Scalar]) -> Result<Vec<Scalar>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let f = self.factor()?;
        Ok(f.backward(&f.forward(rhs)))
    }

    /// Columns of the inverse, obtained by solving against each unit vector.
    pub fn inverse_columns(&self) -> Result<Vec<Vec<Scalar>>> {
        let mut cols = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let mut e = vec![Scalar::zero(self.bits); self.dim];
            e[k] = Scalar::one(self.bits);
            cols.push(self.solve(&e)?);
        }
        Ok(cols)
    }
}

/// Lower-triangular Cholesky factor L with A = L L^T.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    dim: usize,
    bits: u32,
    data: Vec<Scalar>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn l(&self, i: usize, j: usize) -> &Scalar {
        assert!(j <= i && i < self.dim, "not a lower-triangular index");
        &self.data[packed_index(i, j)]
    }

    /// Solves L y = b by forward substitution.
    pub fn forward(&self, b: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(b.len(), self.dim);
        let mut y: Vec<Scalar> = Vec::with_capacity(self.dim);
        for (i, bi) in b.iter().enumerate() {
            let mut acc = bi.clone();
            for (j, yj) in y.iter().enumerate() {
                acc = &acc - &(self.l(i, j) * yj);
            }
            y.push(&acc / self.l(i, i));
        }
        y
    }

    /// Solves L^T x = y by back substitution.
    pub fn backward(&self, y: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(y.len(), self.dim);
        let mut x = vec![Scalar::zero(self.bits); self.dim];
        for i in (0..self.dim).rev() {
            let mut acc = y[i].clone();
            for (k, xk) in x.iter().enumerate().skip(i + 1) {
                acc = &acc - &(self.l(k, i) * xk);
            }
            x[i] = &acc / self.l(i, i);
        }
        x
    }

    /// w = L^T v, used when conjugating an operator into orthonormal
    /// coordinates.
    pub fn lt_mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.dim);
        let mut w = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut acc = Scalar::zero(self.bits);
            for (k, vk) in v.iter().enumerate().skip(i) {
                acc = &acc + &(self.l(k, i) * vk);
            }
            w.push(acc);
        }
        w
    }
}

/// Cholesky factorization of a symmetric matrix expected to be positive
/// definite. Fails with the first non-positive (or non-finite) pivot, which
/// is how completeness verdicts and precision escalation are triggered
/// upstream.
pub fn cholesky_spd(matrix: &SpdMatrix) -> Result<CholeskyFactor> {
    let n = matrix.dim();
    let bits = matrix.bits();
    let mut l: Vec<Scalar> = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = matrix.get(i, j).clone();
            for k in 0..j {
                acc = &acc - &(&l[packed_index(i, k)] * &l[packed_index(j, k)]);
            }
            if i == j {
                if !acc.is_finite() || !acc.is_sign_positive() || acc.is_zero() {
                    return Err(Error::NotPositiveDefinite {
                        index: i,
                        value: acc.to_f64(),
                    });
                }
                l.push(acc.sqrt());
            } else {
                let pivot = &l[packed_index(j, j)];
                l.push(&acc / pivot);
            }
        }
    }
    Ok(CholeskyFactor {
        dim: n,
        bits,
        data: l,
    })
}

/// Solves A x = rhs for symmetric positive definite A.
pub fn spd_solve(matrix: &SpdMatrix, rhs: &[Scalar]) -> Result<Vec<Scalar>> {
    matrix.solve(rhs)
}
