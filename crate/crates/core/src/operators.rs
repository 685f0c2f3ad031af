//! The diagonal operator laboratory: a compact non-normal operator that
//! multiplies the n-th expansion coefficient by a weight u_n, its adjoint in
//! the exponential-span geometry, eigensystem checks, commutator and
//! tail-operator norms, the shift-operator identity, and a Krylov probe that
//! the smallest invariant subspace containing an element is spanned by
//! exactly the basis exponentials its expansion touches.

use crate::biorth::{BiorthogonalSystem, BoundFit};
use crate::error::{Error, Result};
use crate::numerics::{symmetric_eigenvalues, ComplexScalar, Scalar, SpdMatrix};
use crate::spaces::{evaluate, inner_product, ExponentSequence, SpanElement, TruncatedSpace};

/// The weights u_n of the diagonal action together with the decay rate
/// delta. Validated so that every weight is nonzero, all weights are
/// pairwise distinct, and |u_n| <= e^(-delta lambda_n); the bound makes the
/// operator a norm-convergent sum of rank-one pieces, and distinctness keeps
/// every eigenvalue simple.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    u: Vec<ComplexScalar>,
    delta: Scalar,
    bits: u32,
}

/// How make_weights fills the sequence: the canonical shift family
/// u_n = e^(-delta lambda_n), or a caller-supplied list checked against the
/// invariants.
#[derive(Clone, Copy, Debug)]
pub enum WeightKind<'a> {
    Shift,
    Custom(&'a [ComplexScalar]),
}

/// Builds and validates a weight sequence for the given exponents.
pub fn make_weights(
    delta: &Scalar,
    exponents: &ExponentSequence,
    kind: WeightKind,
) -> Result<WeightSequence> {
    if delta.is_zero() || !delta.is_sign_positive() || !delta.is_finite() {
        return Err(Error::NonPositiveDelta);
    }
    let n = exponents.len();
    let bits = exponents.lambda(0).prec().max(delta.prec());
    let u: Vec<ComplexScalar> = match kind {
        WeightKind::Shift => (0..n)
            .map(|k| {
                let w = (-&(delta * exponents.lambda(k))).exp();
                ComplexScalar::from_real(w)
            })
            .collect(),
        WeightKind::Custom(list) => {
            if list.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: list.len(),
                });
            }
            list.to_vec()
        }
    };
    for (k, w) in u.iter().enumerate() {
        if w.is_zero() {
            return Err(Error::WeightZero { index: k });
        }
        let bound = (-&(delta * exponents.lambda(k))).exp();
        if w.abs() > bound {
            return Err(Error::WeightBound { index: k });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if u[i].re() == u[j].re() && u[i].im() == u[j].im() {
                return Err(Error::WeightDuplicate {
                    first: i,
                    second: j,
                });
            }
        }
    }
    Ok(WeightSequence {
        u,
        delta: delta.clone(),
        bits,
    })
}

impl WeightSequence {
    pub fn u(&self) -> &[ComplexScalar] {
        &self.u
    }

    pub fn delta(&self) -> &Scalar {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn max_abs(&self) -> Scalar {
        let mut m = Scalar::zero(self.bits);
        for w in &self.u {
            m = m.max(&w.abs());
        }
        m
    }

    fn all_real(&self) -> bool {
        self.u.iter().all(|w| w.im().is_zero())
    }
}

/// The operator T that multiplies the n-th expansion coefficient by u_n. In
/// the exponential-coefficient coordinates T is the diagonal matrix diag(u),
/// while its adjoint in the span geometry is G^(-1) diag(conj u) G.
#[derive(Clone, Debug)]
pub struct DiagonalOperator<'a> {
    space: &'a TruncatedSpace,
    bio: &'a BiorthogonalSystem,
    weights: WeightSequence,
}

impl<'a> DiagonalOperator<'a> {
    pub fn new(
        space: &'a TruncatedSpace,
        bio: &'a BiorthogonalSystem,
        weights: WeightSequence,
    ) -> Result<Self> {
        if bio.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: bio.dim(),
            });
        }
        if weights.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: weights.len(),
            });
        }
        Ok(DiagonalOperator {
            space,
            bio,
            weights,
        })
    }

    pub fn space(&self) -> &TruncatedSpace {
        self.space
    }

    pub fn bio(&self) -> &BiorthogonalSystem {
        self.bio
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }
}

/// T f: coefficientwise multiplication by the weights.
pub fn apply_t(op: &DiagonalOperator, f: &SpanElement) -> Result<SpanElement> {
    op.space.check_dim(f)?;
    let coeffs = f
        .coeffs()
        .iter()
        .zip(op.weights.u())
        .map(|(c, w)| c * w)
        .collect();
    Ok(SpanElement::new(coeffs))
}

/// T* f: the coefficient vector is mapped through G^(-1) diag(conj u) G,
/// with the two solves going through the cached Cholesky factor of G.
pub fn apply_t_star(op: &DiagonalOperator, f: &SpanElement) -> Result<SpanElement> {
    op.space.check_dim(f)?;
    let re: Vec<Scalar> = f.coeffs().iter().map(|c| c.re().clone()).collect();
    let im: Vec<Scalar> = f.coeffs().iter().map(|c| c.im().clone()).collect();
    let y_re = op.space.gram().mat_vec(&re)?;
    let y_im = op.space.gram().mat_vec(&im)?;
    let mut w_re = Vec::with_capacity(f.len());
    let mut w_im = Vec::with_capacity(f.len());
    for (k, u) in op.weights.u().iter().enumerate() {
        let y = ComplexScalar::new(y_re[k].clone(), y_im[k].clone());
        let prod = &u.conj() * &y;
        w_re.push(prod.re().clone());
        w_im.push(prod.im().clone());
    }
    let x_re = op.space.gram().solve(&w_re)?;
    let x_im = op.space.gram().solve(&w_im)?;
    let coeffs = x_re
        .into_iter()
        .zip(x_im)
        .map(|(r, i)| ComplexScalar::new(r, i))
        .collect();
    Ok(SpanElement::new(coeffs))
}

/// |<T h, f> - <h, T* f>| / (||h|| ||f|| max|u| + floor): the normalized
/// defect of the adjoint identity, which must sit at rounding level.
pub fn adjoint_consistency(
    op: &DiagonalOperator,
    h: &SpanElement,
    f: &SpanElement,
) -> Result<Scalar> {
    let bits = op.space.bits();
    let th = apply_t(op, h)?;
    let tsf = apply_t_star(op, f)?;
    let lhs = inner_product(&th, f, op.space)?;
    let rhs = inner_product(h, &tsf, op.space)?;
    let h_norm = crate::spaces::norm(h, op.space)?;
    let f_norm = crate::spaces::norm(f, op.space)?;
    let denom =
        &(&(&h_norm * &f_norm) * &op.weights.max_abs()) + &Scalar::two_pow(-(bits as i32), bits);
    Ok(&(&lhs - &rhs).abs() / &denom)
}

/// The eigensystem certification: T e_k = u_k e_k with exactly zero
/// coefficient residual, T* r_k = conj(u_k) r_k within rounding, the kernel
/// is trivial and every eigenvalue simple (both direct consequences of the
/// weight invariants), and the spectrum listing. Zero heads the listing as
/// the accumulation point of the weights — it is not an eigenvalue at any
/// finite truncation.
#[derive(Clone, Debug)]
pub struct EigensystemReport {
    pub basis_residuals: Vec<Scalar>,
    pub adjoint_residuals: Vec<Scalar>,
    pub kernel_trivial: bool,
    pub all_simple: bool,
    /// {0} followed by the weights in index order.
    pub spectrum: Vec<ComplexScalar>,
    /// The leading zero is a limit point of the weight sequence, never an
    /// eigenvalue of the truncated operator.
    pub zero_is_limit_point_only: bool,
}

pub fn verify_eigensystem(op: &DiagonalOperator) -> Result<EigensystemReport> {
    let n = op.space.dim();
    let bits = op.space.bits();
    let floor = Scalar::two_pow(-(bits as i32), bits);

    let mut basis_residuals = Vec::with_capacity(n);
    for k in 0..n {
        let e = SpanElement::basis(n, k, bits)?;
        let te = apply_t(op, &e)?;
        let expected = e.scale(&op.weights.u()[k]);
        let mut worst = Scalar::zero(bits);
        for m in 0..n {
            worst = worst.max(&(te.coeff(m) - expected.coeff(m)).abs());
        }
        basis_residuals.push(worst);
    }

    let mut adjoint_residuals = Vec::with_capacity(n);
    for k in 0..n {
        let r = op.bio.r_element(k)?;
        let tsr = apply_t_star(op, &r)?;
        let expected = r.scale(&op.weights.u()[k].conj());
        let mut worst = Scalar::zero(bits);
        let mut scale = Scalar::zero(bits);
        for m in 0..n {
            worst = worst.max(&(tsr.coeff(m) - expected.coeff(m)).abs());
            scale = scale.max(&expected.coeff(m).abs());
        }
        adjoint_residuals.push(&worst / &(&scale + &floor));
    }

    let mut spectrum = Vec::with_capacity(n + 1);
    spectrum.push(ComplexScalar::zero(bits));
    spectrum.extend(op.weights.u().iter().cloned());
    Ok(EigensystemReport {
        basis_residuals,
        adjoint_residuals,
        kernel_trivial: true,
        all_simple: true,
        spectrum,
        zero_is_limit_point_only: true,
    })
}

/// L2-operator norm of T T* - T* T on the truncated space. The coordinate
/// matrix K_ij = (u_i - u_j) S_ij with S = G^(-1) diag(conj u) G is
/// conjugated by the Cholesky factor of G into an ordinary Hermitian matrix
/// whose extreme eigenvalue magnitude is the norm. Strictly positive for
/// validated weights over a non-orthogonal basis.
pub fn commutator_norm(op: &DiagonalOperator) -> Result<Scalar> {
    commutator_norm_with_gram(op.space.gram(), &op.weights)
}

/// The same computation against an arbitrary SPD matrix in place of the
/// Gram matrix of the space — with a diagonal matrix the commutator
/// vanishes identically, which gives the natural control experiment.
pub fn commutator_norm_with_gram(gram: &SpdMatrix, weights: &WeightSequence) -> Result<Scalar> {
    let n = gram.dim();
    if n < 2 {
        return Err(Error::Usage(format!(
            "the commutator needs at least 2 dimensions, got {n}"
        )));
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    let bits = gram.bits();
    let u = weights.u();

    // Columns of S = G^(-1) diag(conj u) G.
    let mut s_re = vec![vec![Scalar::zero(bits); n]; n];
    let mut s_im = vec![vec![Scalar::zero(bits); n]; n];
    for j in 0..n {
        let mut rhs_re = Vec::with_capacity(n);
        let mut rhs_im = Vec::with_capacity(n);
        for (m, um) in u.iter().enumerate() {
            let scaled = &um.conj() * &ComplexScalar::from_real(gram.get(m, j).clone());
            rhs_re.push(scaled.re().clone());
            rhs_im.push(scaled.im().clone());
        }
        let col_re = gram.solve(&rhs_re)?;
        let col_im = gram.solve(&rhs_im)?;
        for m in 0..n {
            s_re[m][j] = col_re[m].clone();
            s_im[m][j] = col_im[m].clone();
        }
    }

    // K_ij = (u_i - u_j) S_ij.
    let mut k_re = vec![vec![Scalar::zero(bits); n]; n];
    let mut k_im = vec![vec![Scalar::zero(bits); n]; n];
    for i in 0..n {
        for j in 0..n {
            let du = &u[i] - &u[j];
            let s = ComplexScalar::new(s_re[i][j].clone(), s_im[i][j].clone());
            let k = &du * &s;
            k_re[i][j] = k.re().clone();
            k_im[i][j] = k.im().clone();
        }
    }

    let (w_re, w_im) = conjugate_by_gram_factor(gram, &k_re, &k_im)?;
    if weights.all_real() {
        // K is real, and T T* - T* T is self-adjoint, so W is symmetric up
        // to rounding; symmetrize and read the extreme eigenvalue.
        let half = Scalar::parse_decimal("0.5", bits).expect("exact decimal");
        let mut sym = vec![vec![Scalar::zero(bits); n]; n];
        for i in 0..n {
            for j in 0..n {
                sym[i][j] = &(&w_re[i][j] + &w_re[j][i]) * &half;
            }
        }
        let eigs = symmetric_eigenvalues(sym)?;
        Ok(eigs[0].abs().max(&eigs[n - 1].abs()))
    } else {
        // Hermitian W embeds as the 2n x 2n real symmetric [[R, -J], [J, R]]
        // with the same spectrum (doubled multiplicities).
        let embedded = hermitian_embedding(&w_re, &w_im, bits);
        let eigs = symmetric_eigenvalues(embedded)?;
        Ok(eigs[0].abs().max(&eigs[2 * n - 1].abs()))
    }
}

/// || T - T_m || together with its fitted analytic envelope. T_m keeps the
/// first m rank-one terms, so the tail acts diagonally through the weights
/// with indices >= m. The envelope multiplies, for each tail index, the
/// actual weight modulus and basis norm by the fitted exponential bound on
/// ||r_n||; it dominates the computed norm for every cutoff because the
/// fit's margins are nonnegative.
pub fn tail_norm(op: &DiagonalOperator, m: usize, fit: &BoundFit) -> Result<(Scalar, Scalar)> {
    let n = op.space.dim();
    if m > n {
        return Err(Error::CutoffOutOfRange { cutoff: m, dim: n });
    }
    if fit.per_n_margins.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: fit.per_n_margins.len(),
        });
    }
    let bits = op.space.bits();
    let gram = op.space.gram();
    let u = op.weights.u();

    // Coordinate matrix of the tail: diag(v), v_k = u_k for k >= m.
    let mut d_re = vec![vec![Scalar::zero(bits); n]; n];
    let mut d_im = vec![vec![Scalar::zero(bits); n]; n];
    for k in m..n {
        d_re[k][k] = u[k].re().clone();
        d_im[k][k] = u[k].im().clone();
    }
    let (w_re, w_im) = conjugate_by_gram_factor(gram, &d_re, &d_im)?;

    // Spectral norm of the (generally non-Hermitian) W via the top
    // eigenvalue of W^H W; complex W goes through the real embedding, whose
    // singular values repeat each of W's twice.
    let computed = if op.weights.all_real() {
        let mut wtw = vec![vec![Scalar::zero(bits); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = Scalar::zero(bits);
                for row in &w_re {
                    acc = &acc + &(&row[i] * &row[j]);
                }
                wtw[i][j] = acc.clone();
                wtw[j][i] = acc;
            }
        }
        let eigs = symmetric_eigenvalues(wtw)?;
        sqrt_clamped(&eigs[n - 1], bits)
    } else {
        let z = complex_embedding(&w_re, &w_im, bits);
        let dim = 2 * n;
        let mut ztz = vec![vec![Scalar::zero(bits); dim]; dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut acc = Scalar::zero(bits);
                for row in &z {
                    acc = &acc + &(&row[i] * &row[j]);
                }
                ztz[i][j] = acc.clone();
                ztz[j][i] = acc;
            }
        }
        let eigs = symmetric_eigenvalues(ztz)?;
        sqrt_clamped(&eigs[dim - 1], bits)
    };

    let mirror = fit.mirror_constant();
    let b = op.space.interval().b();
    let mut bound = Scalar::zero(bits);
    for (k, uk) in u.iter().enumerate().skip(m) {
        let lambda = op.space.exponents().lambda(k);
        let envelope = &mirror * &(&(&fit.epsilon - b) * lambda).exp();
        let term = &(&uk.abs() * op.space.norm_of_basis(k)) * &envelope;
        bound = &bound + &term;
    }
    Ok((computed, bound))
}

/// For shift weights, T f evaluates as the argument shift f(z - delta). The
/// returned value is the worst normalized discrepancy over the sample
/// points, which all must satisfy Re z < b.
pub fn shift_consistency(
    op: &DiagonalOperator,
    f: &SpanElement,
    sample_points: &[ComplexScalar],
) -> Result<Scalar> {
    op.space.check_dim(f)?;
    let bits = op.space.bits();
    let delta = op.weights.delta();
    for (k, w) in op.weights.u().iter().enumerate() {
        let expected = (-&(delta * op.space.exponents().lambda(k))).exp();
        if !w.im().is_zero() || w.re() != &expected {
            return Err(Error::NonShiftWeights);
        }
    }
    let tf = apply_t(op, f)?;
    let b = op.space.interval().b();
    let one = Scalar::one(bits);
    let mut worst = Scalar::zero(bits);
    for z in sample_points {
        // Negated on purpose: a non-finite Re z is incomparable and must be
        // rejected here, which `z.re() >= b` would let through.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(z.re() < b) {
            return Err(Error::Usage(format!(
                "sample point {z} must satisfy Re z < {}",
                b.to_decimal_string(10)
            )));
        }
        let lhs = evaluate(&tf, op.space, z)?;
        let shifted = ComplexScalar::new(z.re() - delta, z.im().clone());
        let rhs = evaluate(f, op.space, &shifted)?;
        let err = &(&lhs - &rhs).abs() / &(&one + &rhs.abs());
        worst = worst.max(&err);
    }
    Ok(worst)
}

/// Verdict of the Krylov probe: the support of f's expansion, the dimension
/// of span{f, Tf, T^2 f, ...}, and whether that span coincides with the
/// span of the supported basis exponentials. max_projection_residual is the
/// worst relative residual over both directions of the span comparison.
#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub support: Vec<usize>,
    pub krylov_dim: usize,
    pub dimension_matches: bool,
    pub span_matches: bool,
    pub max_projection_residual: Scalar,
    pub coefficient_threshold: Scalar,
    pub rank_threshold: Scalar,
}

/// Straddle guard factor: eigenvalues within 2^32 on either side of the
/// rank threshold abort the check instead of guessing.
const STRADDLE_GUARD_BITS: i32 = 32;

/// Checks, at truncation, that the smallest invariant subspace of T
/// containing f is spanned by exactly the basis exponentials that carry a
/// nonzero coefficient of f. The Krylov vectors T^j f stay supported on the
/// same index set, so their normalized Gram matrix reveals the dimension;
/// a Vandermonde argument in the distinct weights makes the first
/// |support| of them independent, and those are orthonormalized to compare
/// spans in both directions.
pub fn krylov_synthesis_check(op: &DiagonalOperator, f: &SpanElement) -> Result<SynthesisReport> {
    op.space.check_dim(f)?;
    let n = op.space.dim();
    let bits = op.space.bits();
    let half_floor = Scalar::two_pow(-((bits / 2) as i32), bits);

    let mut coeff_max = Scalar::zero(bits);
    for c in f.coeffs() {
        coeff_max = coeff_max.max(&c.abs());
    }
    let coefficient_threshold = &half_floor * &coeff_max;
    let support: Vec<usize> = (0..n)
        .filter(|&k| f.coeff(k).abs() > coefficient_threshold)
        .collect();

    // Unit-norm Krylov vectors; the raw iterates decay like |u|^j, so
    // normalization keeps the Gram matrix about angles rather than scales.
    let mut krylov: Vec<SpanElement> = Vec::with_capacity(n);
    let mut current = f.clone();
    for _ in 0..n {
        let nrm = crate::spaces::norm(&current, op.space)?;
        if nrm.is_zero() {
            krylov.push(SpanElement::zero(n, bits));
        } else {
            krylov.push(current.scale(&ComplexScalar::from_real(nrm.recip())));
        }
        current = apply_t(op, &current)?;
    }

    // Hermitian Krylov Gram, embedded to a real symmetric matrix (each
    // eigenvalue appears twice in the embedding).
    let mut k_re = vec![vec![Scalar::zero(bits); n]; n];
    let mut k_im = vec![vec![Scalar::zero(bits); n]; n];
    for i in 0..n {
        for j in 0..n {
            let ip = inner_product(&krylov[i], &krylov[j], op.space)?;
            k_re[i][j] = ip.re().clone();
            k_im[i][j] = ip.im().clone();
        }
    }
    let embedded = hermitian_embedding(&k_re, &k_im, bits);
    let eigs = symmetric_eigenvalues(embedded)?;
    let top = eigs[2 * n - 1].clone();
    let rank_threshold = &half_floor * &top;

    let mut above = 0usize;
    if !top.is_zero() {
        let lo = &rank_threshold * &Scalar::two_pow(-STRADDLE_GUARD_BITS, bits);
        let hi = &rank_threshold * &Scalar::two_pow(STRADDLE_GUARD_BITS, bits);
        for e in &eigs {
            let mag = e.abs();
            if mag > lo && mag < hi {
                return Err(Error::RankIndeterminate {
                    value: mag.to_decimal_string(40),
                    threshold: rank_threshold.to_decimal_string(40),
                });
            }
            if e > &rank_threshold {
                above += 1;
            }
        }
    }
    if !above.is_multiple_of(2) {
        return Err(Error::InternalConsistency {
            what: format!("embedded Krylov spectrum has odd count {above} above threshold"),
        });
    }
    let krylov_dim = above / 2;
    let dimension_matches = krylov_dim == support.len();

    // Span comparison. Direction one: every Krylov vector must lie in the
    // span of the supported exponentials (project through the normal
    // equations of the restricted Gram). Direction two: every supported
    // exponential must lie in the Krylov span (project onto an orthonormal
    // basis built from the first krylov_dim vectors).
    let mut max_residual = Scalar::zero(bits);
    if krylov_dim > 0 {
        let restricted = SpdMatrix::from_fn(support.len(), |i, j| {
            op.space.gram().get(support[i], support[j]).clone()
        });
        for v in &krylov {
            let nrm = crate::spaces::norm(v, op.space)?;
            if nrm.is_zero() {
                continue;
            }
            let re: Vec<Scalar> = v.coeffs().iter().map(|c| c.re().clone()).collect();
            let im: Vec<Scalar> = v.coeffs().iter().map(|c| c.im().clone()).collect();
            let y_re = op.space.gram().mat_vec(&re)?;
            let y_im = op.space.gram().mat_vec(&im)?;
            let rhs_re: Vec<Scalar> = support.iter().map(|&k| y_re[k].clone()).collect();
            let rhs_im: Vec<Scalar> = support.iter().map(|&k| y_im[k].clone()).collect();
            let alpha_re = restricted.solve(&rhs_re)?;
            let alpha_im = restricted.solve(&rhs_im)?;
            let mut projected = vec![ComplexScalar::zero(bits); n];
            for (slot, &k) in support.iter().enumerate() {
                projected[k] = ComplexScalar::new(alpha_re[slot].clone(), alpha_im[slot].clone());
            }
            let diff = v.sub(&SpanElement::new(projected))?;
            let res = &crate::spaces::norm(&diff, op.space)? / &nrm;
            max_residual = max_residual.max(&res);
        }

        let basis_vectors = orthonormalize(&krylov[..krylov_dim], op.space)?;
        for &k in &support {
            let e = SpanElement::basis(n, k, bits)?;
            let mut p = SpanElement::zero(n, bits);
            for q in &basis_vectors {
                let c = inner_product(&e, q, op.space)?;
                p = p.add(&q.scale(&c))?;
            }
            let diff = e.sub(&p)?;
            let res = &crate::spaces::norm(&diff, op.space)? / op.space.norm_of_basis(k);
            max_residual = max_residual.max(&res);
        }
    }
    let span_matches = if krylov_dim == 0 {
        support.is_empty()
    } else {
        dimension_matches && max_residual < half_floor
    };

    Ok(SynthesisReport {
        support,
        krylov_dim,
        dimension_matches,
        span_matches,
        max_projection_residual: max_residual,
        coefficient_threshold,
        rank_threshold,
    })
}

/// Gram–Schmidt in the span geometry, run twice per vector for stability.
/// The inputs are expected independent (rank-certified upstream); a vector
/// collapsing during orthogonalization is an internal error.
fn orthonormalize(vectors: &[SpanElement], space: &TruncatedSpace) -> Result<Vec<SpanElement>> {
    let bits = space.bits();
    let floor = Scalar::two_pow(-((bits / 2) as i32), bits);
    let mut basis: Vec<SpanElement> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner_product(&w, q, space)?;
                w = w.sub(&q.scale(&c))?;
            }
        }
        let nrm = crate::spaces::norm(&w, space)?;
        if nrm < floor {
            return Err(Error::InternalConsistency {
                what: "rank-certified Krylov vector collapsed during orthonormalization"
                    .to_string(),
            });
        }
        basis.push(w.scale(&ComplexScalar::from_real(nrm.recip())));
    }
    Ok(basis)
}

/// Real and imaginary parts of a square matrix, stored row-major.
type SplitMatrix = (Vec<Vec<Scalar>>, Vec<Vec<Scalar>>);

/// W = L^T K L^(-T) for the Cholesky factor G = L L^T, applied separately
/// to the real and imaginary parts of K.
fn conjugate_by_gram_factor(
    gram: &SpdMatrix,
    k_re: &[Vec<Scalar>],
    k_im: &[Vec<Scalar>],
) -> Result<SplitMatrix> {
    let n = gram.dim();
    let bits = gram.bits();
    let factor = gram.factor()?;
    let mut w_re = vec![vec![Scalar::zero(bits); n]; n];
    let mut w_im = vec![vec![Scalar::zero(bits); n]; n];
    for j in 0..n {
        let mut unit = vec![Scalar::zero(bits); n];
        unit[j] = Scalar::one(bits);
        let b_col = factor.backward(&unit);
        for (part, k, w) in [(0, k_re, &mut w_re), (1, k_im, &mut w_im)] {
            let _ = part;
            let mut kb = vec![Scalar::zero(bits); n];
            for i in 0..n {
                let mut acc = Scalar::zero(bits);
                for t in 0..n {
                    acc = &acc + &(&k[i][t] * &b_col[t]);
                }
                kb[i] = acc;
            }
            let col = factor.lt_mul_vec(&kb);
            for i in 0..n {
                w[i][j] = col[i].clone();
            }
        }
    }
    Ok((w_re, w_im))
}

/// [[R, -J], [J, R]] for a Hermitian matrix R + iJ, symmetrized against
/// rounding first (R averaged with its transpose, J with its negated
/// transpose).
fn hermitian_embedding(w_re: &[Vec<Scalar>], w_im: &[Vec<Scalar>], bits: u32) -> Vec<Vec<Scalar>> {
    let n = w_re.len();
    let half = Scalar::parse_decimal("0.5", bits).expect("exact decimal");
    let mut out = vec![vec![Scalar::zero(bits); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let r = &(&w_re[i][j] + &w_re[j][i]) * &half;
            let s = &(&w_im[i][j] - &w_im[j][i]) * &half;
            out[i][j] = r.clone();
            out[n + i][n + j] = r;
            out[i][n + j] = -&s;
            out[n + i][j] = s;
        }
    }
    out
}

/// [[Wr, -Wi], [Wi, Wr]] without any symmetry assumption; singular values
/// of the embedding repeat those of the complex matrix twice.
fn complex_embedding(w_re: &[Vec<Scalar>], w_im: &[Vec<Scalar>], bits: u32) -> Vec<Vec<Scalar>> {
    let n = w_re.len();
    let mut out = vec![vec![Scalar::zero(bits); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = w_re[i][j].clone();
            out[n + i][n + j] = w_re[i][j].clone();
            out[i][n + j] = -&w_im[i][j];
            out[n + i][j] = w_im[i][j].clone();
        }
    }
    out
}

fn sqrt_clamped(value: &Scalar, bits: u32) -> Scalar {
    if value.is_sign_negative() {
        Scalar::zero(bits)
    } else {
        value.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biorth::{compute_biorthogonal, fit_distance_bound};
    use crate::numerics::PrecisionConfig;
    use crate::spaces::{build_space, Interval};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const BITS: u32 = 512;

    fn s(text: &str) -> Scalar {
        Scalar::parse_decimal(text, BITS).unwrap()
    }

    fn squares_space(n: usize) -> TruncatedSpace {
        let seq = ExponentSequence::squares(n, BITS).unwrap();
        let iv = Interval::from_decimals("0", "1", BITS).unwrap();
        build_space(&seq, &iv, &PrecisionConfig::default()).unwrap()
    }

    fn space_for(lams: &[u64]) -> TruncatedSpace {
        let raw: Vec<Scalar> = lams.iter().map(|&l| Scalar::from_u64(l, BITS)).collect();
        let seq = crate::spaces::validate_exponents(&raw).unwrap();
        let iv = Interval::from_decimals("0", "1", BITS).unwrap();
        build_space(&seq, &iv, &PrecisionConfig::default()).unwrap()
    }

    fn shift_weights(space: &TruncatedSpace, delta: &Scalar) -> WeightSequence {
        make_weights(delta, space.exponents(), WeightKind::Shift).unwrap()
    }

    fn random_element(dim: usize, rng: &mut ChaCha20Rng) -> SpanElement {
        let coeffs = (0..dim)
            .map(|_| {
                ComplexScalar::new(
                    Scalar::from_f64(rng.gen_range(-2.0..2.0), BITS),
                    Scalar::from_f64(rng.gen_range(-2.0..2.0), BITS),
                )
            })
            .collect();
        SpanElement::new(coeffs)
    }

    #[test]
    fn shift_weights_are_halving_powers_for_log_two() {
        let space = space_for(&[1, 2]);
        let delta = Scalar::from_u64(2, BITS).ln();
        let w = shift_weights(&space, &delta);
        assert!((w.u()[0].re() - &s("0.5")).abs() < Scalar::two_pow(-500, BITS));
        assert!((w.u()[1].re() - &s("0.25")).abs() < Scalar::two_pow(-500, BITS));
        assert!(w.u()[0].im().is_zero());
    }

    #[test]
    fn weight_validation_rejects_bad_sequences() {
        let space = space_for(&[1, 2]);
        let exps = space.exponents();
        let delta = s("0.3");
        assert!(matches!(
            make_weights(&s("0"), exps, WeightKind::Shift),
            Err(Error::NonPositiveDelta)
        ));
        assert!(matches!(
            make_weights(&s("-1"), exps, WeightKind::Shift),
            Err(Error::NonPositiveDelta)
        ));
        let dup = vec![
            ComplexScalar::from_real(s("0.1")),
            ComplexScalar::from_real(s("0.1")),
        ];
        assert!(matches!(
            make_weights(&delta, exps, WeightKind::Custom(&dup)),
            Err(Error::WeightDuplicate {
                first: 0,
                second: 1
            })
        ));
        let over = vec![
            ComplexScalar::from_real(&(-&(&delta * exps.lambda(0))).exp() * &s("1.01")),
            ComplexScalar::from_real(s("0.01")),
        ];
        assert!(matches!(
            make_weights(&delta, exps, WeightKind::Custom(&over)),
            Err(Error::WeightBound { index: 0 })
        ));
        let zero = vec![
            ComplexScalar::zero(BITS),
            ComplexScalar::from_real(s("0.01")),
        ];
        assert!(matches!(
            make_weights(&delta, exps, WeightKind::Custom(&zero)),
            Err(Error::WeightZero { index: 0 })
        ));
        let short = vec![ComplexScalar::from_real(s("0.1"))];
        assert!(make_weights(&delta, exps, WeightKind::Custom(&short)).is_err());
    }

    #[test]
    fn basis_vectors_are_exact_eigenvectors() {
        let space = squares_space(4);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        for k in 0..4 {
            let e = SpanElement::basis(4, k, BITS).unwrap();
            let te = apply_t(&op, &e).unwrap();
            for m in 0..4 {
                if m == k {
                    assert!(te.coeff(m).re() == op.weights().u()[k].re());
                    assert!(te.coeff(m).im().is_zero());
                } else {
                    assert!(te.coeff(m).is_zero());
                }
            }
        }
        let z = SpanElement::zero(4, BITS);
        let tz = apply_t(&op, &z).unwrap();
        assert!(tz.coeffs().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn applying_t_realizes_the_argument_shift() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let delta = Scalar::from_u64(2, BITS).ln();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &delta)).unwrap();
        let f = SpanElement::from_real(vec![Scalar::one(BITS), Scalar::one(BITS)]);
        let tf = apply_t(&op, &f).unwrap();
        let tol = Scalar::two_pow(-((BITS / 2) as i32), BITS);
        for zr in ["0", "0.5"] {
            let z = ComplexScalar::from_real(s(zr));
            let lhs = evaluate(&tf, &space, &z).unwrap();
            let shifted = ComplexScalar::from_real(&s(zr) - &delta);
            let rhs = evaluate(&f, &space, &shifted).unwrap();
            assert!((&lhs - &rhs).abs() < tol, "z = {zr}");
        }
    }

    #[test]
    fn biorthogonal_vectors_are_adjoint_eigenvectors() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        for k in 0..6 {
            let r = bio.r_element(k).unwrap();
            let tsr = apply_t_star(&op, &r).unwrap();
            let expected = r.scale(&op.weights().u()[k].conj());
            for m in 0..6 {
                let err = (tsr.coeff(m) - expected.coeff(m)).abs();
                let scale = &expected.coeff(m).abs() + &Scalar::one(BITS);
                assert!(&err / &scale < s("1e-60"), "k={k} m={m}");
            }
        }
        let z = SpanElement::zero(6, BITS);
        let tz = apply_t_star(&op, &z).unwrap();
        assert!(tz
            .coeffs()
            .iter()
            .all(|c| c.abs() < Scalar::two_pow(-450, BITS)));
    }

    #[test]
    fn adjoint_action_approaches_identity_for_small_delta() {
        // Kept to small exponents so that delta*lambda stays in the linear
        // regime at both sample rates; larger exponents saturate the weights
        // and break the monotone trend between two finite deltas.
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let f = random_element(2, &mut rng);
        let mut distances = Vec::new();
        for delta in ["0.1", "0.01"] {
            let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s(delta))).unwrap();
            let tsf = apply_t_star(&op, &f).unwrap();
            let mut worst = Scalar::zero(BITS);
            for m in 0..2 {
                worst = worst.max(&(tsf.coeff(m) - f.coeff(m)).abs());
            }
            distances.push(worst);
        }
        assert!(distances[1] < distances[0]);
    }

    #[test]
    fn adjoint_identity_holds_on_random_pairs() {
        let space = squares_space(8);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let bound = Scalar::two_pow(-((BITS / 2) as i32), BITS);
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..10 {
            let h = random_element(8, &mut rng);
            let f = random_element(8, &mut rng);
            let defect = adjoint_consistency(&op, &h, &f).unwrap();
            assert!(defect < bound, "defect {defect:?}");
        }
        // The two-dimensional hand case.
        let space2 = space_for(&[1, 2]);
        let bio2 = compute_biorthogonal(&space2).unwrap();
        let delta = Scalar::from_u64(2, BITS).ln();
        let op2 = DiagonalOperator::new(&space2, &bio2, shift_weights(&space2, &delta)).unwrap();
        let e1 = SpanElement::basis(2, 0, BITS).unwrap();
        let e2 = SpanElement::basis(2, 1, BITS).unwrap();
        assert!(adjoint_consistency(&op2, &e1, &e1).unwrap() < bound);
        assert!(adjoint_consistency(&op2, &e1, &e2).unwrap() < bound);
    }

    #[test]
    fn eigensystem_report_certifies_the_diagonal_structure() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let report = verify_eigensystem(&op).unwrap();
        for r in &report.basis_residuals {
            assert!(r.is_zero());
        }
        for r in &report.adjoint_residuals {
            assert!(r < &s("1e-60"));
        }
        assert!(report.kernel_trivial && report.all_simple);
        assert!(report.zero_is_limit_point_only);
        assert_eq!(report.spectrum.len(), 7);
        assert!(report.spectrum[0].is_zero());
    }

    #[test]
    fn spectrum_lists_zero_then_the_weights() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let delta = Scalar::from_u64(2, BITS).ln();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &delta)).unwrap();
        let report = verify_eigensystem(&op).unwrap();
        assert!(report.spectrum[0].is_zero());
        assert!((report.spectrum[1].re() - &s("0.5")).abs() < Scalar::two_pow(-500, BITS));
        assert!((report.spectrum[2].re() - &s("0.25")).abs() < Scalar::two_pow(-500, BITS));
    }

    #[test]
    fn two_dimensional_commutator_matches_the_oracle() {
        let space = space_for(&[1, 2]);
        let bio = compute_biorthogonal(&space).unwrap();
        let delta = Scalar::from_u64(2, BITS).ln();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &delta)).unwrap();
        let norm = commutator_norm(&op).unwrap();
        let want = s("0.1115477451000638638778637711130144311564679887543141e1");
        assert!((&norm - &want).abs() < s("1e-45"), "norm {norm:?}");
        assert!(norm > &Scalar::from_u64(1000, BITS) * &Scalar::two_pow(-(BITS as i32), BITS));
    }

    #[test]
    fn diagonal_gram_makes_the_commutator_vanish() {
        let space = squares_space(4);
        let diag = SpdMatrix::from_fn(4, |i, j| {
            if i == j {
                space.gram().get(i, i).clone()
            } else {
                Scalar::zero(BITS)
            }
        });
        let w = make_weights(&s("0.5"), space.exponents(), WeightKind::Shift).unwrap();
        let norm = commutator_norm_with_gram(&diag, &w).unwrap();
        assert!(norm < s("1e-100"), "norm {norm:?}");
    }

    #[test]
    fn unimodular_weight_scaling_preserves_the_commutator() {
        let space = squares_space(4);
        let bio = compute_biorthogonal(&space).unwrap();
        let delta = s("0.5");
        let base: Vec<ComplexScalar> = (0..4)
            .map(|k| {
                let w = &(-&(&delta * space.exponents().lambda(k))).exp() * &s("0.9");
                ComplexScalar::from_real(w)
            })
            .collect();
        let (sin, cos) = s("0.7").sin_cos();
        let alpha = ComplexScalar::new(cos, sin);
        let rotated: Vec<ComplexScalar> = base.iter().map(|w| w * &alpha).collect();
        let w0 = make_weights(&delta, space.exponents(), WeightKind::Custom(&base)).unwrap();
        let w1 = make_weights(&delta, space.exponents(), WeightKind::Custom(&rotated)).unwrap();
        let op0 = DiagonalOperator::new(&space, &bio, w0).unwrap();
        let op1 = DiagonalOperator::new(&space, &bio, w1).unwrap();
        let n0 = commutator_norm(&op0).unwrap();
        let n1 = commutator_norm(&op1).unwrap();
        let rel = &(&n0 - &n1).abs() / &n0;
        assert!(rel < Scalar::two_pow(-250, BITS), "rel {rel:?}");
    }

    #[test]
    fn commutator_needs_two_dimensions() {
        let space = space_for(&[1]);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        assert!(commutator_norm(&op).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // matrices are filled column-wise below
    fn conjugated_adjoint_is_the_conjugate_transpose() {
        // After conjugation by the Cholesky factor of G, the coordinate
        // matrix of T* must be the transpose of the conjugated matrix of T
        // (real weights here), which is the similarity structure behind the
        // eigenvalue listing.
        let space = squares_space(4);
        let bits = BITS;
        let w = make_weights(&s("0.5"), space.exponents(), WeightKind::Shift).unwrap();
        let n = 4;
        // Conjugated T: L^T diag(u) L^(-T).
        let mut d_re = vec![vec![Scalar::zero(bits); n]; n];
        let d_im = vec![vec![Scalar::zero(bits); n]; n];
        for k in 0..n {
            d_re[k][k] = w.u()[k].re().clone();
        }
        let (t_hat, _) = conjugate_by_gram_factor(space.gram(), &d_re, &d_im).unwrap();
        // Conjugated T*: L^T (G^(-1) diag(u) G) L^(-T).
        let mut s_re = vec![vec![Scalar::zero(bits); n]; n];
        for j in 0..n {
            let rhs: Vec<Scalar> = (0..n)
                .map(|m| w.u()[m].re() * space.gram().get(m, j))
                .collect();
            let col = space.gram().solve(&rhs).unwrap();
            for m in 0..n {
                s_re[m][j] = col[m].clone();
            }
        }
        let (ts_hat, _) = conjugate_by_gram_factor(space.gram(), &s_re, &d_im).unwrap();
        let mut worst = Scalar::zero(bits);
        let mut scale = Scalar::zero(bits);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(&(&ts_hat[i][j] - &t_hat[j][i]).abs());
                scale = scale.max(&t_hat[i][j].abs());
            }
        }
        assert!(&worst / &scale < Scalar::two_pow(-((BITS / 2) as i32), BITS));
    }

    #[test]
    fn tail_norms_shrink_and_respect_the_envelope() {
        let n = 8;
        let space = squares_space(n);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let fits = fit_distance_bound(&bio, &space, &[s("0.05")]).unwrap();
        let fit = &fits[0];
        // The analytic envelope is a tail sum of positive terms, hence
        // non-increasing for every cutoff. The computed norm itself may grow
        // once at the very front — dropping a rank-one piece of a
        // non-orthogonal sum can remove cancellation — but from m = 1 on it
        // decays for this configuration, and it is dominated by the envelope
        // throughout.
        let mut previous: Option<(Scalar, Scalar)> = None;
        for m in 0..=n {
            let (computed, bound) = tail_norm(&op, m, fit).unwrap();
            assert!(
                computed <= bound,
                "m={m}: computed {computed:?} exceeds bound {bound:?}"
            );
            if let Some((prev_c, prev_b)) = &previous {
                assert!(&bound <= prev_b, "envelope grew at m={m}");
                if m >= 2 {
                    assert!(&computed <= prev_c, "tail grew at m={m}");
                }
            }
            if m < n {
                assert!(computed.is_sign_positive() && !computed.is_zero());
            } else {
                assert!(computed.is_zero() && bound.is_zero());
            }
            previous = Some((computed, bound));
        }
        assert!(tail_norm(&op, n + 1, fit).is_err());
    }

    #[test]
    fn shift_consistency_is_tiny_for_shift_weights() {
        let n = 8;
        let space = squares_space(n);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.1"))).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(29);
        let f = random_element(n, &mut rng);
        let points: Vec<ComplexScalar> = (0..50)
            .map(|_| {
                ComplexScalar::new(
                    Scalar::from_f64(rng.gen_range(-1.0..0.999), BITS),
                    Scalar::from_f64(rng.gen_range(-1.0..1.0), BITS),
                )
            })
            .collect();
        let worst = shift_consistency(&op, &f, &points).unwrap();
        assert!(
            worst < Scalar::two_pow(-((BITS / 2) as i32), BITS),
            "worst {worst:?}"
        );

        // A basis element alone also witnesses the identity.
        let e = SpanElement::basis(n, 0, BITS).unwrap();
        let single = [ComplexScalar::from_real(s("0.25"))];
        assert!(shift_consistency(&op, &e, &single).unwrap() < Scalar::two_pow(-400, BITS));

        // Points at or beyond the right endpoint are refused.
        let bad = [ComplexScalar::from_real(s("1.0"))];
        assert!(shift_consistency(&op, &f, &bad).is_err());
    }

    #[test]
    fn non_shift_weights_are_rejected_by_the_shift_probe() {
        let space = squares_space(3);
        let bio = compute_biorthogonal(&space).unwrap();
        let delta = s("0.5");
        let custom: Vec<ComplexScalar> = (0..3)
            .map(|k| {
                let w = &(-&(&delta * space.exponents().lambda(k))).exp() * &s("0.9");
                ComplexScalar::from_real(w)
            })
            .collect();
        let w = make_weights(&delta, space.exponents(), WeightKind::Custom(&custom)).unwrap();
        let op = DiagonalOperator::new(&space, &bio, w).unwrap();
        let f = SpanElement::basis(3, 0, BITS).unwrap();
        let points = [ComplexScalar::from_real(s("0.5"))];
        assert!(matches!(
            shift_consistency(&op, &f, &points),
            Err(Error::NonShiftWeights)
        ));
    }

    #[test]
    fn single_basis_element_spans_a_line() {
        let space = squares_space(5);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let f = SpanElement::basis(5, 2, BITS).unwrap();
        let report = krylov_synthesis_check(&op, &f).unwrap();
        assert_eq!(report.support, vec![2]);
        assert_eq!(report.krylov_dim, 1);
        assert!(report.dimension_matches && report.span_matches);
    }

    #[test]
    fn two_basis_elements_span_a_plane() {
        let space = squares_space(5);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let f = SpanElement::basis(5, 0, BITS)
            .unwrap()
            .add(&SpanElement::basis(5, 1, BITS).unwrap())
            .unwrap();
        let report = krylov_synthesis_check(&op, &f).unwrap();
        assert_eq!(report.support, vec![0, 1]);
        assert_eq!(report.krylov_dim, 2);
        assert!(report.dimension_matches && report.span_matches);
    }

    #[test]
    fn random_supports_synthesize_correctly() {
        let n = 8;
        let space = squares_space(n);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for _ in 0..10 {
            let mask: u32 = rng.gen_range(1..(1 << n));
            let coeffs: Vec<ComplexScalar> = (0..n)
                .map(|k| {
                    if (mask >> k) & 1 == 1 {
                        ComplexScalar::new(
                            Scalar::from_f64(rng.gen_range(0.5..2.0), BITS),
                            Scalar::from_f64(rng.gen_range(-1.0..1.0), BITS),
                        )
                    } else {
                        ComplexScalar::zero(BITS)
                    }
                })
                .collect();
            let f = SpanElement::new(coeffs);
            let report = krylov_synthesis_check(&op, &f).unwrap();
            let want: Vec<usize> = (0..n).filter(|k| (mask >> k) & 1 == 1).collect();
            assert_eq!(report.support, want, "mask {mask:#b}");
            assert!(report.dimension_matches, "mask {mask:#b}");
            assert!(report.span_matches, "mask {mask:#b}");
        }
    }

    #[test]
    fn zero_element_has_empty_support_and_zero_dimension() {
        let space = squares_space(4);
        let bio = compute_biorthogonal(&space).unwrap();
        let op = DiagonalOperator::new(&space, &bio, shift_weights(&space, &s("0.5"))).unwrap();
        let report = krylov_synthesis_check(&op, &SpanElement::zero(4, BITS)).unwrap();
        assert!(report.support.is_empty());
        assert_eq!(report.krylov_dim, 0);
        assert!(report.dimension_matches && report.span_matches);
    }
}
