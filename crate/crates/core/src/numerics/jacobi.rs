use super::scalar::Scalar;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

fn max_bits(rows: &[Vec<Scalar>]) -> u32 {
    rows.iter()
        .flat_map(|r| r.iter().map(Scalar::prec))
        .max()
        .unwrap_or(128)
}

fn off_diagonal_norm(a: &[Vec<Scalar>], bits: u32) -> Scalar {
    let mut acc = Scalar::zero(bits);
    for (i, row) in a.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            if i != j {
                acc = &acc + &entry.square();
            }
        }
    }
    acc.sqrt()
}

fn frobenius_norm(a: &[Vec<Scalar>], bits: u32) -> Scalar {
    let mut acc = Scalar::zero(bits);
    for row in a {
        for e in row {
            acc = &acc + &e.square();
        }
    }
    acc.sqrt()
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
///
/// Convergence is declared when the off-diagonal Frobenius norm falls below
/// 2^(-bits/2) times the full Frobenius norm (which rotations preserve, so it
/// is measured once). The quadratic convergence of the cyclic sweep makes the
/// sweep cap generous; hitting it means the input was pathological.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<Scalar>>) -> Result<Vec<Scalar>> {
    let n = a.len();
    for row in &a {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let bits = max_bits(&a);
    let scale = frobenius_norm(&a, bits);
    if scale.is_zero() {
        return Ok(vec![Scalar::zero(bits); n]);
    }
    let threshold = &Scalar::two_pow(-((bits / 2) as i32), bits) * &scale;

    let one = Scalar::one(bits);
    let two = Scalar::from_u64(2, bits);
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, bits) < threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                if a[p][q].is_zero() {
                    continue;
                }
                let apq = a[p][q].clone();
                let app = a[p][p].clone();
                let aqq = a[q][q].clone();
                let theta = &(&aqq - &app) / &(&two * &apq);
                // Smaller root of t^2 + 2 t theta - 1 = 0, for a rotation
                // angle below pi/4.
                let t = {
                    let denom = &theta.abs() + &theta.hypot(&one);
                    let mag = denom.recip();
                    if theta.is_sign_negative() {
                        -&mag
                    } else {
                        mag
                    }
                };
                let c = t.hypot(&one).recip();
                let s = &t * &c;
                let tau = &s / &(&one + &c);

                a[p][p] = &app - &(&t * &apq);
                a[q][q] = &aqq + &(&t * &apq);
                a[p][q] = Scalar::zero(bits);
                a[q][p] = Scalar::zero(bits);
                // Rows p and q are rewritten while row i is read, so the
                // rotation cannot borrow `a` as an iterator.
                #[allow(clippy::needless_range_loop)]
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i][p].clone();
                    let aiq = a[i][q].clone();
                    let new_ip = &aip - &(&s * &(&aiq + &(&tau * &aip)));
                    let new_iq = &aiq + &(&s * &(&aip - &(&tau * &aiq)));
                    a[i][p] = new_ip.clone();
                    a[p][i] = new_ip;
                    a[i][q] = new_iq.clone();
                    a[q][i] = new_iq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a, bits) >= threshold {
        return Err(Error::JacobiStall { sweeps: MAX_SWEEPS });
    }

    let mut eigs: Vec<Scalar> = (0..n).map(|i| a[i][i].clone()).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    Ok(eigs)
}

/// Smallest eigenvalue magnitude of a symmetric matrix, which for positive
/// definite input is its smallest singular value.
pub fn min_singular_value(m: &[Vec<Scalar>]) -> Result<Scalar> {
    let n = m.len();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for row in m {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    let eigs = symmetric_eigenvalues(m.to_vec())?;
    let mut smallest = eigs[0].abs();
    for e in &eigs[1..] {
        smallest = smallest.min(&e.abs());
    }
    Ok(smallest)
}
