//! The biorthogonal family {r_n} inside the truncated span: coefficient
//! columns from the inverse Gram matrix, the distances D_n from each
//! exponential to the span of the others, best-approximation remainders, and
//! exponential-decay bound fitting.

use crate::error::{Error, Result};
use crate::numerics::{Scalar, SpdMatrix};
use crate::spaces::{SpanElement, TruncatedSpace};

/// The family biorthogonal to the exponentials: <r_n, e_m> is the identity
/// matrix up to the solver residual.
///
/// Column n of C holds the coefficients of r_n in the exponential basis, so
/// C = G^(-1); the inner products <r_n, r_m> are then the entries of C
/// itself. The distance from e_n to the span of the other exponentials and
/// the norm of r_n are both carried by the diagonal: ||r_n|| = sqrt(C_nn),
/// D_n = 1 / ||r_n||, stored once so the reciprocal identity is exact by
/// construction.
#[derive(Clone, Debug)]
pub struct BiorthogonalSystem {
    c: SpdMatrix,
    r_norms: Vec<Scalar>,
    distances: Vec<Scalar>,
    residual: Scalar,
    bits: u32,
}

/// Inverts the Gram matrix column-by-column through its Cholesky factor and
/// populates norms, distances, and the max-entry residual of G*C - I.
pub fn compute_biorthogonal(space: &TruncatedSpace) -> Result<BiorthogonalSystem> {
    let n = space.dim();
    let bits = space.bits();
    let columns = space.gram().inverse_columns()?;
    // The solve columns are symmetric only up to rounding; store the average
    // so that <r_n, r_m> = <r_m, r_n> holds exactly in the artifact.
    let half = Scalar::parse_decimal("0.5", bits).expect("exact decimal");
    let c = SpdMatrix::from_fn(n, |i, j| {
        if i == j {
            columns[i][i].clone()
        } else {
            &(&columns[j][i] + &columns[i][j]) * &half
        }
    });

    let mut residual = Scalar::zero(bits);
    for k in 0..n {
        let col: Vec<Scalar> = (0..n).map(|m| c.get(m, k).clone()).collect();
        let image = space.gram().mat_vec(&col)?;
        for (m, entry) in image.iter().enumerate() {
            let target = if m == k {
                Scalar::one(bits)
            } else {
                Scalar::zero(bits)
            };
            residual = residual.max(&(entry - &target).abs());
        }
    }

    let r_norms: Vec<Scalar> = (0..n).map(|k| c.get(k, k).sqrt()).collect();
    let distances: Vec<Scalar> = r_norms.iter().map(Scalar::recip).collect();
    Ok(BiorthogonalSystem {
        c,
        r_norms,
        distances,
        residual,
        bits,
    })
}

impl BiorthogonalSystem {
    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Entry <r_i, r_j> of the inverse Gram matrix.
    pub fn c_entry(&self, i: usize, j: usize) -> &Scalar {
        self.c.get(i, j)
    }

    pub fn c_matrix(&self) -> &SpdMatrix {
        &self.c
    }

    /// r_n as an element of the span (real coefficients, column n of C).
    pub fn r_element(&self, n: usize) -> Result<SpanElement> {
        self.check_index(n)?;
        let coeffs = (0..self.dim()).map(|m| self.c.get(m, n).clone()).collect();
        Ok(SpanElement::from_real(coeffs))
    }

    /// ||r_n|| = sqrt(C_nn) as stored.
    pub fn r_norm(&self, n: usize) -> Result<&Scalar> {
        self.check_index(n)?;
        Ok(&self.r_norms[n])
    }

    pub fn r_norms(&self) -> &[Scalar] {
        &self.r_norms
    }

    pub fn distances(&self) -> &[Scalar] {
        &self.distances
    }

    /// Max-entry residual of G*C - I.
    pub fn residual(&self) -> &Scalar {
        &self.residual
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: n,
                dim: self.dim(),
            });
        }
        Ok(())
    }
}

/// D_n: the L2 distance from e_n to the span of the remaining exponentials,
/// read off as the reciprocal of ||r_n||.
pub fn distance(bio: &BiorthogonalSystem, n: usize) -> Result<Scalar> {
    bio.check_index(n)?;
    Ok(bio.distances[n].clone())
}

/// The best approximation of e_n from the other exponentials:
/// Phi_n = e_n - D_n^2 r_n, so that e_n - Phi_n is orthogonal to every e_m
/// with m != n.
pub fn projection_remainder(bio: &BiorthogonalSystem, n: usize) -> Result<SpanElement> {
    bio.check_index(n)?;
    let bits = bio.bits;
    let d_sq = bio.distances[n].square();
    let coeffs = (0..bio.dim())
        .map(|m| {
            let delta = if m == n {
                Scalar::one(bits)
            } else {
                Scalar::zero(bits)
            };
            &delta - &(&d_sq * bio.c.get(m, n))
        })
        .collect();
    Ok(SpanElement::from_real(coeffs))
}

/// One exponential bound fit: the largest constant m_eps with
/// D_n >= m_eps * e^((b - eps) lambda_n) across the truncation, the margins
/// of each n above that bound, and the regression slope of ln D_n against
/// lambda_n.
///
/// The mirrored norm bound ||r_n|| <= M * e^((-b + eps) lambda_n) is carried
/// by the same data: because ||r_n|| is stored as the exact reciprocal of
/// D_n, the mirror constant is exp(-log_m_epsilon), the mirror slope is
/// -slope, and the margins coincide.
#[derive(Clone, Debug)]
pub struct BoundFit {
    pub epsilon: Scalar,
    pub fitted_m_epsilon: Scalar,
    pub log_m_epsilon: Scalar,
    pub slope: Scalar,
    pub per_n_margins: Vec<Scalar>,
}

impl BoundFit {
    /// Slope of ln ||r_n|| against lambda_n; exact negation of the distance
    /// slope.
    pub fn mirror_slope(&self) -> Scalar {
        -&self.slope
    }

    /// The constant of the mirrored norm bound, 1/m_eps computed in log
    /// space.
    pub fn mirror_constant(&self) -> Scalar {
        (-&self.log_m_epsilon).exp()
    }
}

/// Fits the distance bound for each requested epsilon. Requires at least
/// three exponents so the regression slope is meaningful.
pub fn fit_distance_bound(
    bio: &BiorthogonalSystem,
    space: &TruncatedSpace,
    epsilons: &[Scalar],
) -> Result<Vec<BoundFit>> {
    let n = bio.dim();
    if n != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: n,
        });
    }
    if n < 3 {
        return Err(Error::Usage(format!(
            "bound fitting needs at least 3 exponents, got {n}"
        )));
    }
    let bits = bio.bits;
    let lambdas = space.exponents().lambdas();
    let log_d: Vec<Scalar> = bio.distances.iter().map(Scalar::ln).collect();

    // Least-squares slope of ln D_n against lambda_n.
    let count = Scalar::from_u64(n as u64, bits);
    let mut lambda_mean = Scalar::zero(bits);
    let mut y_mean = Scalar::zero(bits);
    for k in 0..n {
        lambda_mean = &lambda_mean + &lambdas[k];
        y_mean = &y_mean + &log_d[k];
    }
    lambda_mean = &lambda_mean / &count;
    y_mean = &y_mean / &count;
    let mut covariance = Scalar::zero(bits);
    let mut variance = Scalar::zero(bits);
    for k in 0..n {
        let dl = &lambdas[k] - &lambda_mean;
        covariance = &covariance + &(&dl * &(&log_d[k] - &y_mean));
        variance = &variance + &dl.square();
    }
    let slope = &covariance / &variance;

    let b = space.interval().b();
    let mut fits = Vec::with_capacity(epsilons.len());
    for eps in epsilons {
        if !eps.is_sign_positive() || eps.is_zero() {
            return Err(Error::Usage(format!(
                "epsilon must be positive, got {}",
                eps.to_decimal_string(10)
            )));
        }
        let rate = b - eps;
        let raw: Vec<Scalar> = (0..n).map(|k| &log_d[k] - &(&rate * &lambdas[k])).collect();
        let mut log_m = raw[0].clone();
        for r in &raw[1..] {
            log_m = log_m.min(r);
        }
        let per_n_margins: Vec<Scalar> = raw.iter().map(|r| r - &log_m).collect();
        fits.push(BoundFit {
            epsilon: eps.clone(),
            fitted_m_epsilon: log_m.exp(),
            log_m_epsilon: log_m,
            slope: slope.clone(),
            per_n_margins,
        });
    }
    Ok(fits)
}

/// || r_n^(large) - r_n^(small) || for each index of the smaller system,
/// measured in the larger space. Reports how the truncated biorthogonal
/// family moves as the truncation grows; no rate is asserted.
pub fn cauchy_differences(
    small_space: &TruncatedSpace,
    small_bio: &BiorthogonalSystem,
    large_space: &TruncatedSpace,
    large_bio: &BiorthogonalSystem,
) -> Result<Vec<Scalar>> {
    let ns = small_space.dim();
    let nl = large_space.dim();
    if ns > nl {
        return Err(Error::DimensionMismatch {
            expected: nl,
            got: ns,
        });
    }
    for k in 0..ns {
        if small_space.exponents().lambda(k) != large_space.exponents().lambda(k) {
            return Err(Error::InternalConsistency {
                what: format!("exponent {k} differs between the two truncations"),
            });
        }
    }
    let bits = large_space.bits();
    let mut out = Vec::with_capacity(ns);
    for k in 0..ns {
        let diff: Vec<Scalar> = (0..nl)
            .map(|m| {
                let small_entry = if m < ns {
                    small_bio.c_entry(m, k).clone()
                } else {
                    Scalar::zero(bits)
                };
                large_bio.c_entry(m, k) - &small_entry
            })
            .collect();
        let image = large_space.gram().mat_vec(&diff)?;
        let mut sq = Scalar::zero(bits);
        for (d, g) in diff.iter().zip(&image) {
            sq = &sq + &(d * g);
        }
        out.push(if sq.is_sign_negative() {
            Scalar::zero(bits)
        } else {
            sq.sqrt()
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PrecisionConfig;
    use crate::spaces::{
        build_space, inner_product, validate_exponents, ExponentSequence, Interval,
    };

    const BITS: u32 = 512;

    fn s(text: &str) -> Scalar {
        Scalar::parse_decimal(text, BITS).unwrap()
    }

    fn space_for(lams: &[u64]) -> TruncatedSpace {
        let raw: Vec<Scalar> = lams.iter().map(|&l| Scalar::from_u64(l, BITS)).collect();
        let seq = validate_exponents(&raw).unwrap();
        let iv = Interval::from_decimals("0", "1", BITS).unwrap();
        build_space(&seq, &iv, &PrecisionConfig::default()).unwrap()
    }

    fn squares_space(n: usize) -> TruncatedSpace {
        let seq = ExponentSequence::squares(n, BITS).unwrap();
        let iv = Interval::from_decimals("0", "1", BITS).unwrap();
        build_space(&seq, &iv, &PrecisionConfig::default()).unwrap()
    }

    #[test]
    fn one_dimensional_system_divides_by_the_gram_entry() {
        let space = space_for(&[1]);
        let bio = compute_biorthogonal(&space).unwrap();
        let want = s("0.31303528549933130363616124693084783291201394124045");
        assert!((bio.c_entry(0, 0) - &want).abs() < s("1e-45"));
        // <r_1, e_1> = 1
        let r = bio.r_element(0).unwrap();
        let e = SpanElement::basis(1, 0, BITS).unwrap();
        let ip = inner_product(&r, &e, &space).unwrap();
        assert!((ip.re() - &Scalar::one(BITS)).abs() < Scalar::two_pow(-490, BITS));
        // D_1 = ||e_1||: no competitors in a one-dimensional space.
        let d = distance(&bio, 0).unwrap();
        let want_d = s("1.7873242709327608505940477510235376694869863546318");
        assert!((&d - &want_d).abs() < s("1e-45"));
    }

    #[test]
    fn two_dimensional_inverse_matches_hand_inversion() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let checks = [
            (
                0usize,
                0usize,
                "5.7456504640300303648196894965105393240456780450098",
            ),
            (0, 1, "-2.7279255972121982447865198853283150357717279669658"),
            (1, 1, "1.3697966484602305215733208099042672099409613235054"),
        ];
        for (i, j, want) in checks {
            assert!(
                (bio.c_entry(i, j) - &s(want)).abs() < s("1e-45"),
                "C({i},{j})"
            );
        }
        let d = distance(&bio, 0).unwrap();
        let want_d = s("0.41718664651489244634888904373673541877029005279986");
        assert!((&d - &want_d).abs() < s("1e-45"));
    }

    #[test]
    fn distance_shrinks_when_competitors_are_added() {
        let d1_alone = distance(&compute_biorthogonal(&space_for(&[1])).unwrap(), 0).unwrap();
        let d1_crowded = distance(&compute_biorthogonal(&space_for(&[1, 2])).unwrap(), 0).unwrap();
        assert!(d1_crowded < d1_alone);
    }

    #[test]
    fn biorthogonality_residual_is_tiny_for_squares() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        assert!(
            bio.residual() < &s("1e-60"),
            "residual {:?}",
            bio.residual()
        );
        // Spot-check through the actual inner product.
        for n in 0..6 {
            let r = bio.r_element(n).unwrap();
            for m in 0..6 {
                let e = SpanElement::basis(6, m, BITS).unwrap();
                let ip = inner_product(&r, &e, &space).unwrap();
                let target = if n == m { 1.0 } else { 0.0 };
                let err = (ip.re() - &Scalar::from_f64(target, BITS)).abs();
                assert!(err < s("1e-60"), "entry ({n},{m}) err {err:?}");
            }
        }
    }

    #[test]
    fn stored_reciprocal_identity_is_exact() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        for n in 0..6 {
            let d = distance(&bio, n).unwrap();
            assert!(bio.r_norm(n).unwrap().recip() == d, "index {n}");
        }
    }

    #[test]
    fn remainder_is_zero_without_competitors() {
        let space = space_for(&[1]);
        let bio = compute_biorthogonal(&space).unwrap();
        let phi = projection_remainder(&bio, 0).unwrap();
        assert!(phi.coeff(0).abs() < Scalar::two_pow(-500, BITS));
    }

    #[test]
    fn remainder_matches_one_dimensional_least_squares() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let phi = projection_remainder(&bio, 0).unwrap();
        // Best approximation of e^t by a multiple of e^{2t}: (G12/G22) e_2.
        assert!(phi.coeff(0).abs() < s("1e-45"));
        let want = s("0.47478098681603691765106686232589472798847714482796");
        assert!((phi.coeff(1).re() - &want).abs() < s("1e-45"));
    }

    #[test]
    fn remainder_orthogonality_and_self_product() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        for n in [0usize, 3, 5] {
            let phi = projection_remainder(&bio, n).unwrap();
            let e_n = SpanElement::basis(6, n, BITS).unwrap();
            let diff = e_n.sub(&phi).unwrap();
            for m in 0..6 {
                let e_m = SpanElement::basis(6, m, BITS).unwrap();
                let ip = inner_product(&diff, &e_m, &space).unwrap();
                if m == n {
                    let d_sq = distance(&bio, n).unwrap().square();
                    assert!((ip.re() - &d_sq).abs() < s("1e-60"));
                } else {
                    assert!(ip.re().abs() < s("1e-60"), "n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn distances_match_brute_force_projection() {
        // Independent oracle: project e_n onto the other exponentials by
        // solving the (N-1)-dimensional normal equations directly.
        let n = 6;
        let space = squares_space(n);
        let bio = compute_biorthogonal(&space).unwrap();
        let g = space.gram();
        for k in 0..n {
            let others: Vec<usize> = (0..n).filter(|&m| m != k).collect();
            let reduced = SpdMatrix::from_fn(n - 1, |i, j| g.get(others[i], others[j]).clone());
            let rhs: Vec<Scalar> = others.iter().map(|&m| g.get(m, k).clone()).collect();
            let alpha = reduced.solve(&rhs).unwrap();
            let mut sq = g.get(k, k).clone();
            for (i, a) in alpha.iter().enumerate() {
                sq = &sq - &(a * &rhs[i]);
            }
            let oracle = sq.sqrt();
            let fast = distance(&bio, k).unwrap();
            let rel = &(&oracle - &fast).abs() / &fast;
            assert!(rel < Scalar::two_pow(-256, BITS), "index {k}: rel {rel:?}");
        }
    }

    #[test]
    fn index_bounds_are_enforced() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        assert!(matches!(
            distance(&bio, 2),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
        assert!(projection_remainder(&bio, 5).is_err());
        assert!(bio.r_element(2).is_err());
    }

    #[test]
    fn bound_fit_margins_and_mirror() {
        let space = squares_space(10);
        let bio = compute_biorthogonal(&space).unwrap();
        let eps = [s("0.05"), s("0.1"), s("0.2")];
        let fits = fit_distance_bound(&bio, &space, &eps).unwrap();
        assert_eq!(fits.len(), 3);
        for fit in &fits {
            let mut saw_zero = false;
            for m in &fit.per_n_margins {
                assert!(!m.is_sign_negative(), "negative margin {m:?}");
                saw_zero |= m.is_zero();
            }
            assert!(saw_zero, "the fitted constant must be tight somewhere");
            assert!(fit.mirror_slope() == -&fit.slope);
        }
        // Slope of ln D_n vs lambda_n on (0,1) sits near b = 1.
        let slope = fits[0].slope.to_f64();
        assert!((0.5..=1.1).contains(&slope), "slope {slope}");
    }

    #[test]
    fn bound_fit_preconditions() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        assert!(fit_distance_bound(&bio, &space, &[s("0.1")]).is_err());
        let space3 = space_for(&[1, 2, 3]);
        let bio3 = compute_biorthogonal(&space3).unwrap();
        assert!(fit_distance_bound(&bio3, &space3, &[s("0")]).is_err());
        assert!(fit_distance_bound(&bio3, &space3, &[s("-0.1")]).is_err());
    }

    #[test]
    fn norms_decay_for_square_exponents() {
        let space = squares_space(10);
        let bio = compute_biorthogonal(&space).unwrap();
        for n in 1..9 {
            assert!(bio.r_norms()[n + 1] < bio.r_norms()[n], "no decay at {n}");
        }
        // Distances never exceed the basis norms (the competitor span
        // contains zero).
        for n in 0..10 {
            assert!(&bio.distances()[n] <= space.norm_of_basis(n));
        }
    }

    #[test]
    fn cauchy_differences_track_growing_truncations() {
        let small = squares_space(5);
        let large = squares_space(6);
        let bs = compute_biorthogonal(&small).unwrap();
        let bl = compute_biorthogonal(&large).unwrap();
        let diffs = cauchy_differences(&small, &bs, &large, &bl).unwrap();
        assert_eq!(diffs.len(), 5);
        for d in &diffs {
            assert!(d.is_finite() && !d.is_sign_negative());
        }
        // Mismatched exponent prefixes are rejected.
        let other = space_for(&[1, 2, 3, 4, 5, 6]);
        let bo = compute_biorthogonal(&other).unwrap();
        assert!(cauchy_differences(&small, &bs, &other, &bo).is_err());
    }
}
