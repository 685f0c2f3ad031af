//! Coefficient analysis against the biorthogonal family: c_n = <f, r_n> for
//! elements of the truncated span and for externally supplied functions,
//! together with the L2 residual of the truncated representation.

use crate::biorth::BiorthogonalSystem;
use crate::error::{Error, Result};
use crate::numerics::{quadrature_integrate, ComplexScalar, Scalar};
use crate::spaces::{inner_product, SpanElement, TruncatedSpace};

/// Where the analyzed data came from; external functions go through
/// quadrature, span elements stay inside the coefficient algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionSource {
    SpanElement,
    ExternalFunction,
}

impl ExpansionSource {
    pub fn label(&self) -> &'static str {
        match self {
            ExpansionSource::SpanElement => "span-element",
            ExpansionSource::ExternalFunction => "external-function",
        }
    }
}

/// The computed coefficients c_n = <f, r_n>, the L2 norm of
/// f - sum c_n e_n over the interval, and the source tag.
#[derive(Clone, Debug)]
pub struct ExpansionResult {
    pub coeffs: Vec<ComplexScalar>,
    pub residual_norm: Scalar,
    pub source: ExpansionSource,
}

/// Coefficients of a span element against the biorthogonal family, computed
/// through the Gram algebra as c = C (G f) rather than copied from the
/// input, so that biorthogonality is exercised rather than assumed.
pub fn analyze(
    f: &SpanElement,
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
) -> Result<ExpansionResult> {
    space.check_dim(f)?;
    check_bio(space, bio)?;
    let re: Vec<Scalar> = f.coeffs().iter().map(|c| c.re().clone()).collect();
    let im: Vec<Scalar> = f.coeffs().iter().map(|c| c.im().clone()).collect();
    let t_re = space.gram().mat_vec(&re)?;
    let t_im = space.gram().mat_vec(&im)?;
    let c_re = bio.c_matrix().mat_vec(&t_re)?;
    let c_im = bio.c_matrix().mat_vec(&t_im)?;
    let coeffs: Vec<ComplexScalar> = c_re
        .into_iter()
        .zip(c_im)
        .map(|(r, i)| ComplexScalar::new(r, i))
        .collect();
    let residual = residual_norm(f, &coeffs, space)?;
    Ok(ExpansionResult {
        coeffs,
        residual_norm: residual,
        source: ExpansionSource::SpanElement,
    })
}

/// Coefficients of an externally supplied real-valued function: the moments
/// M_m = integral of f(t) e^(lambda_m t) over (a,b) are taken by adaptive
/// quadrature, then c = C M. The residual additionally needs the integral of
/// f^2.
pub fn analyze_function<F>(
    f: F,
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
) -> Result<ExpansionResult>
where
    F: Fn(&Scalar) -> Scalar,
{
    check_bio(space, bio)?;
    let bits = space.bits();
    let moments = function_moments(&f, space)?;
    let coeffs_re = bio.c_matrix().mat_vec(&moments)?;

    let a = space.interval().a();
    let b = space.interval().b();
    let f_sq = quadrature_integrate(|t| f(t).square(), a, b, bits)?;
    let mut cross = Scalar::zero(bits);
    for (c, m) in coeffs_re.iter().zip(&moments) {
        cross = &cross + &(c * m);
    }
    let image = space.gram().mat_vec(&coeffs_re)?;
    let mut g_sq = Scalar::zero(bits);
    for (c, y) in coeffs_re.iter().zip(&image) {
        g_sq = &g_sq + &(c * y);
    }
    let residual = residual_from_parts(&f_sq, &cross, &g_sq, bits)?;
    Ok(ExpansionResult {
        coeffs: coeffs_re
            .into_iter()
            .map(ComplexScalar::from_real)
            .collect(),
        residual_norm: residual,
        source: ExpansionSource::ExternalFunction,
    })
}

/// || f - sum c_n e_n || for a span element f and an arbitrary coefficient
/// list, through <f,f> - 2 Re<f,g> + <g,g>.
pub fn residual_norm(
    f: &SpanElement,
    coeffs: &[ComplexScalar],
    space: &TruncatedSpace,
) -> Result<Scalar> {
    space.check_dim(f)?;
    if coeffs.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: coeffs.len(),
        });
    }
    let g = SpanElement::new(coeffs.to_vec());
    let f_sq = inner_product(f, f, space)?;
    let cross = inner_product(f, &g, space)?;
    let g_sq = inner_product(&g, &g, space)?;
    residual_from_parts(f_sq.re(), cross.re(), g_sq.re(), space.bits())
}

/// The external-function variant of the residual: integrals of f^2 and of
/// f against each exponential come from quadrature, the rest stays in the
/// Gram algebra.
pub fn residual_norm_function<F>(
    f: F,
    coeffs: &[ComplexScalar],
    space: &TruncatedSpace,
) -> Result<Scalar>
where
    F: Fn(&Scalar) -> Scalar,
{
    if coeffs.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: coeffs.len(),
        });
    }
    let bits = space.bits();
    let moments = function_moments(&f, space)?;
    let a = space.interval().a();
    let b = space.interval().b();
    let f_sq = quadrature_integrate(|t| f(t).square(), a, b, bits)?;
    // <f, g> = sum conj(c_n) M_n for real f; only the real part is needed.
    let mut cross = Scalar::zero(bits);
    for (c, m) in coeffs.iter().zip(&moments) {
        cross = &cross + &(c.re() * m);
    }
    let g = SpanElement::new(coeffs.to_vec());
    let g_sq = inner_product(&g, &g, space)?;
    residual_from_parts(&f_sq, &cross, g_sq.re(), bits)
}

fn function_moments<F>(f: &F, space: &TruncatedSpace) -> Result<Vec<Scalar>>
where
    F: Fn(&Scalar) -> Scalar,
{
    let bits = space.bits();
    let a = space.interval().a();
    let b = space.interval().b();
    let mut moments = Vec::with_capacity(space.dim());
    for m in 0..space.dim() {
        let lambda = space.exponents().lambda(m);
        let value = quadrature_integrate(|t| &f(t) * &(lambda * t).exp(), a, b, bits)?;
        moments.push(value);
    }
    Ok(moments)
}

/// sqrt(f_sq - 2 cross + g_sq) with the cancellation clamp: a negative
/// radicand within rounding distance of zero collapses to 0, anything
/// materially negative is a bug upstream.
fn residual_from_parts(f_sq: &Scalar, cross: &Scalar, g_sq: &Scalar, bits: u32) -> Result<Scalar> {
    let two = Scalar::from_u64(2, bits);
    let radicand = &(f_sq - &(&two * cross)) + g_sq;
    if radicand.is_sign_negative() && !radicand.is_zero() {
        let scale = &(&(f_sq.abs() + &g_sq.abs()) + &Scalar::one(bits))
            * &Scalar::two_pow(-((bits / 2) as i32), bits);
        if radicand.abs() <= scale {
            return Ok(Scalar::zero(bits));
        }
        return Err(Error::InternalConsistency {
            what: format!(
                "residual radicand {} is negative beyond the rounding allowance {}",
                radicand.to_decimal_string(10),
                scale.to_decimal_string(10)
            ),
        });
    }
    Ok(radicand.sqrt())
}

fn check_bio(space: &TruncatedSpace, bio: &BiorthogonalSystem) -> Result<()> {
    if bio.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: bio.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biorth::compute_biorthogonal;
    use crate::numerics::PrecisionConfig;
    use crate::spaces::{build_space, evaluate, ExponentSequence, Interval};
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
    fn scaled_basis_element_recovers_its_coefficient() {
        let space = squares_space(4);
        let bio = compute_biorthogonal(&space).unwrap();
        let f = SpanElement::basis(4, 0, BITS)
            .unwrap()
            .scale(&ComplexScalar::from_real(Scalar::from_u64(3, BITS)));
        let out = analyze(&f, &space, &bio).unwrap();
        assert_eq!(out.source, ExpansionSource::SpanElement);
        assert!((out.coeffs[0].re() - &Scalar::from_u64(3, BITS)).abs() < s("1e-60"));
        for c in &out.coeffs[1..] {
            assert!(c.abs() < s("1e-60"));
        }
        assert!(out.residual_norm < s("1e-60"));
    }

    #[test]
    fn sum_of_two_basis_elements_has_unit_coefficients() {
        let space = squares_space(4);
        let bio = compute_biorthogonal(&space).unwrap();
        let f = SpanElement::basis(4, 0, BITS)
            .unwrap()
            .add(&SpanElement::basis(4, 1, BITS).unwrap())
            .unwrap();
        let out = analyze(&f, &space, &bio).unwrap();
        let one = Scalar::one(BITS);
        assert!((out.coeffs[0].re() - &one).abs() < s("1e-60"));
        assert!((out.coeffs[1].re() - &one).abs() < s("1e-60"));
        assert!(out.coeffs[2].abs() < s("1e-60"));
        assert!(out.coeffs[3].abs() < s("1e-60"));
    }

    #[test]
    fn identity_function_residual_decreases_with_dimension() {
        let mut last: Option<Scalar> = None;
        for n in [4usize, 6, 8] {
            let space = squares_space(n);
            let bio = compute_biorthogonal(&space).unwrap();
            let out = analyze_function(|t| t.clone(), &space, &bio).unwrap();
            assert_eq!(out.source, ExpansionSource::ExternalFunction);
            assert!(out.residual_norm.is_sign_positive());
            if let Some(prev) = &last {
                assert!(
                    &out.residual_norm < prev,
                    "residual did not shrink at N={n}"
                );
            }
            last = Some(out.residual_norm);
        }
    }

    #[test]
    fn off_span_exponential_leaves_a_visible_residual() {
        let space = space_for(&[1, 2, 4]);
        let bio = compute_biorthogonal(&space).unwrap();
        let mu = s("2.5");
        let out = analyze_function(|t| (&mu * t).exp(), &space, &bio).unwrap();
        assert!(
            out.residual_norm > s("0.01"),
            "residual {:?}",
            out.residual_norm
        );
    }

    #[test]
    fn zero_coefficients_leave_the_full_function_norm() {
        let space = squares_space(3);
        let zeros = vec![ComplexScalar::zero(BITS); 3];
        let r = residual_norm_function(|t| t.clone(), &zeros, &space).unwrap();
        let want = s("0.57735026918962576450914878050195745564760175127013");
        assert!((&r - &want).abs() < s("1e-45"), "got {r:?}");
    }

    #[test]
    fn exact_representation_has_zero_residual() {
        let space = squares_space(4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let f = random_element(4, &mut rng);
        let r = residual_norm(&f, f.coeffs(), &space).unwrap();
        assert!(r < s("1e-70"), "got {r:?}");
    }

    #[test]
    fn rounding_level_negative_radicand_clamps_to_zero() {
        let one = Scalar::one(BITS);
        let cross = &one + &s("5e-91");
        let r = residual_from_parts(&one, &cross, &one, BITS).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn material_negative_radicand_is_an_internal_error() {
        let one = Scalar::one(BITS);
        let cross = &one + &s("5e-51");
        let err = residual_from_parts(&one, &cross, &one, BITS);
        assert!(matches!(err, Err(Error::InternalConsistency { .. })));
    }

    #[test]
    fn round_trip_reproduces_values_left_of_the_right_endpoint() {
        let space = squares_space(5);
        let bio = compute_biorthogonal(&space).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let f = random_element(5, &mut rng);
        let out = analyze(&f, &space, &bio).unwrap();
        let g = SpanElement::new(out.coeffs.clone());
        let tol = Scalar::two_pow(-((BITS / 2) as i32), BITS);
        for _ in 0..20 {
            let z = ComplexScalar::new(
                Scalar::from_f64(rng.gen_range(-1.0..0.95), BITS),
                Scalar::from_f64(rng.gen_range(-2.0..2.0), BITS),
            );
            let fv = evaluate(&f, &space, &z).unwrap();
            let gv = evaluate(&g, &space, &z).unwrap();
            let err = (&fv - &gv).abs();
            let denom = &fv.abs() + &Scalar::one(BITS);
            assert!(&err / &denom < tol, "mismatch at {z}");
        }
    }

    #[test]
    fn analysis_is_linear_in_the_element() {
        let space = squares_space(5);
        let bio = compute_biorthogonal(&space).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let f = random_element(5, &mut rng);
        let g = random_element(5, &mut rng);
        let alpha = ComplexScalar::new(Scalar::from_u64(2, BITS), Scalar::one(BITS));
        let beta = ComplexScalar::new(s("-0.5"), s("0.25"));
        let combo = f.scale(&alpha).add(&g.scale(&beta)).unwrap();
        let lhs = analyze(&combo, &space, &bio).unwrap();
        let cf = analyze(&f, &space, &bio).unwrap();
        let cg = analyze(&g, &space, &bio).unwrap();
        let tol = Scalar::two_pow(-400, BITS);
        for n in 0..5 {
            let rhs = &(&alpha * &cf.coeffs[n]) + &(&beta * &cg.coeffs[n]);
            assert!((&lhs.coeffs[n] - &rhs).abs() < tol, "coefficient {n}");
        }
    }

    #[test]
    fn perturbing_any_coefficient_never_improves_the_residual() {
        let space = squares_space(6);
        let bio = compute_biorthogonal(&space).unwrap();
        let base = analyze_function(|t| t.clone(), &space, &bio).unwrap();
        let step = s("1e-3");
        for n in 0..6 {
            for sign in [1i64, -1] {
                let mut coeffs = base.coeffs.clone();
                let shift = &Scalar::from_i64(sign, BITS) * &step;
                coeffs[n] = &coeffs[n] + &ComplexScalar::from_real(shift);
                let perturbed = residual_norm_function(|t| t.clone(), &coeffs, &space).unwrap();
                assert!(
                    perturbed > base.residual_norm,
                    "perturbation ({n}, {sign}) improved the residual"
                );
            }
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let space = squares_space(3);
        let bio = compute_biorthogonal(&space).unwrap();
        let short = SpanElement::zero(2, BITS);
        assert!(analyze(&short, &space, &bio).is_err());
        let coeffs = vec![ComplexScalar::zero(BITS); 2];
        assert!(residual_norm(&SpanElement::zero(3, BITS), &coeffs, &space).is_err());
        assert!(residual_norm_function(|t| t.clone(), &coeffs, &space).is_err());
        let other_bio = compute_biorthogonal(&squares_space(4)).unwrap();
        assert!(analyze(&SpanElement::zero(3, BITS), &space, &other_bio).is_err());
    }
}
