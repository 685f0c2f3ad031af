//! Exponent sequences, the interval, and the finite-dimensional model of the
//! closed span of {e^(lambda_n t)}: closed-form Gram matrices, Dirichlet
//! polynomials, and the L2 inner product in coefficient form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexScalar, PrecisionConfig, Scalar, SpdMatrix};

/// Bounded interval (a, b) the exponentials live on.
///
/// Endpoints given as decimal strings are kept, so that a rebuild at higher
/// precision re-rounds from the source text instead of from an earlier
/// binary rounding.
#[derive(Clone, Debug)]
pub struct Interval {
    a: Scalar,
    b: Scalar,
    source: Option<(String, String)>,
}

impl Interval {
    pub fn new(a: Scalar, b: Scalar) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidInterval {
                a: a.to_decimal_string(20),
                b: b.to_decimal_string(20),
            });
        }
        Ok(Interval { a, b, source: None })
    }

    pub fn from_decimals(a: &str, b: &str, bits: u32) -> Result<Self> {
        let mut iv = Interval::new(
            Scalar::parse_decimal(a, bits)?,
            Scalar::parse_decimal(b, bits)?,
        )?;
        iv.source = Some((a.to_owned(), b.to_owned()));
        Ok(iv)
    }

    /// The same interval at a different working precision.
    pub fn at_bits(&self, bits: u32) -> Result<Self> {
        match &self.source {
            Some((a, b)) => Interval::from_decimals(a, b, bits),
            None => {
                let mut iv = Interval::new(self.a.to_prec(bits), self.b.to_prec(bits))?;
                iv.source = None;
                Ok(iv)
            }
        }
    }

    pub fn a(&self) -> &Scalar {
        &self.a
    }

    pub fn b(&self) -> &Scalar {
        &self.b
    }

    pub fn width(&self) -> Scalar {
        &self.b - &self.a
    }
}

/// How an exponent sequence is (re)generated at a given precision.
#[derive(Clone, Debug, Serialize, Deserialize)]
enum ExponentRecipe {
    /// Opaque scalars; re-rounding is the only option.
    #[serde(skip)]
    Raw,
    /// Decimal literals, reparsed at the target precision.
    Literals(Vec<String>),
    /// lambda_n = n^2 for n = 1..=count (exact at any precision).
    Squares(usize),
    /// lambda_n = q * r^n for n = 1..=count, with r > 1 so that the gap
    /// condition and the summability of 1/lambda_n hold for the infinite
    /// family.
    Geometric { q: String, r: String, count: usize },
}

/// Strictly increasing positive exponents with their gap and the partial sum
/// of 1/lambda_n over the truncation.
///
/// The gap and the partial sum are the finite shadows of the two infinite
/// conditions on the full sequence (a uniform gap, and summability); only the
/// generator families carry the analytic guarantee in the limit.
#[derive(Clone, Debug)]
pub struct ExponentSequence {
    lambdas: Vec<Scalar>,
    gap: Scalar,
    muntz_partial_sum: Scalar,
    recipe: ExponentRecipe,
}

/// Checks positivity, distinctness (exact equality), sorts ascending, and
/// computes the gap and partial sum.
pub fn validate_exponents(raw: &[Scalar]) -> Result<ExponentSequence> {
    finish_sequence(raw.to_vec(), ExponentRecipe::Raw)
}

fn finish_sequence(mut lambdas: Vec<Scalar>, recipe: ExponentRecipe) -> Result<ExponentSequence> {
    if lambdas.is_empty() {
        return Err(Error::EmptyExponents);
    }
    for l in &lambdas {
        if !l.is_finite() || !l.is_sign_positive() || l.is_zero() {
            return Err(Error::NonPositiveExponent {
                value: l.to_decimal_string(20),
            });
        }
    }
    lambdas.sort_by(|x, y| x.partial_cmp(y).expect("finite exponents"));
    for pair in lambdas.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateExponent {
                value: pair[0].to_decimal_string(20),
            });
        }
    }
    let bits = lambdas.iter().map(Scalar::prec).max().expect("non-empty");
    let mut gap = Scalar::infinity(bits);
    for pair in lambdas.windows(2) {
        gap = gap.min(&(&pair[1] - &pair[0]));
    }
    let mut muntz_partial_sum = Scalar::zero(bits);
    for l in &lambdas {
        muntz_partial_sum = &muntz_partial_sum + &l.recip();
    }
    Ok(ExponentSequence {
        lambdas,
        gap,
        muntz_partial_sum,
        recipe,
    })
}

impl ExponentSequence {
    pub fn from_decimals(texts: &[String], bits: u32) -> Result<Self> {
        let lambdas = texts
            .iter()
            .map(|t| Scalar::parse_decimal(t, bits))
            .collect::<Result<Vec<_>>>()?;
        finish_sequence(lambdas, ExponentRecipe::Literals(texts.to_vec()))
    }

    /// lambda_n = n^2, n = 1..=count.
    pub fn squares(count: usize, bits: u32) -> Result<Self> {
        let lambdas = (1..=count as u64)
            .map(|n| Scalar::from_u64(n * n, bits))
            .collect();
        finish_sequence(lambdas, ExponentRecipe::Squares(count))
    }

    /// lambda_n = q * r^n, n = 1..=count, requiring q > 0 and r > 1.
    pub fn geometric(q: &str, r: &str, count: usize, bits: u32) -> Result<Self> {
        let qs = Scalar::parse_decimal(q, bits)?;
        let rs = Scalar::parse_decimal(r, bits)?;
        if !qs.is_sign_positive() || qs.is_zero() {
            return Err(Error::NonPositiveExponent {
                value: qs.to_decimal_string(20),
            });
        }
        if rs <= Scalar::one(bits) {
            return Err(Error::Usage(format!(
                "geometric ratio must exceed 1, got {}",
                rs.to_decimal_string(10)
            )));
        }
        let mut lambdas = Vec::with_capacity(count);
        let mut power = qs.clone();
        for _ in 0..count {
            power = &power * &rs;
            lambdas.push(power.clone());
        }
        finish_sequence(
            lambdas,
            ExponentRecipe::Geometric {
                q: q.to_owned(),
                r: r.to_owned(),
                count,
            },
        )
    }

    /// The same sequence regenerated at a different precision, from source
    /// text where available.
    pub fn at_bits(&self, bits: u32) -> Result<Self> {
        match &self.recipe {
            ExponentRecipe::Raw => finish_sequence(
                self.lambdas.iter().map(|l| l.to_prec(bits)).collect(),
                ExponentRecipe::Raw,
            ),
            ExponentRecipe::Literals(texts) => Self::from_decimals(texts, bits),
            ExponentRecipe::Squares(count) => Self::squares(*count, bits),
            ExponentRecipe::Geometric { q, r, count } => Self::geometric(q, r, *count, bits),
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambda(&self, n: usize) -> &Scalar {
        &self.lambdas[n]
    }

    pub fn lambdas(&self) -> &[Scalar] {
        &self.lambdas
    }

    pub fn gap(&self) -> &Scalar {
        &self.gap
    }

    pub fn muntz_partial_sum(&self) -> &Scalar {
        &self.muntz_partial_sum
    }
}

/// Element of the truncated span: f(z) = sum of c_n e^(lambda_n z).
#[derive(Clone, Debug)]
pub struct SpanElement {
    coeffs: Vec<ComplexScalar>,
}

impl SpanElement {
    pub fn new(coeffs: Vec<ComplexScalar>) -> Self {
        SpanElement { coeffs }
    }

    pub fn from_real(coeffs: Vec<Scalar>) -> Self {
        SpanElement {
            coeffs: coeffs.into_iter().map(ComplexScalar::from_real).collect(),
        }
    }

    pub fn zero(dim: usize, bits: u32) -> Self {
        SpanElement {
            coeffs: (0..dim).map(|_| ComplexScalar::zero(bits)).collect(),
        }
    }

    /// The k-th exponential itself: unit coefficient at k, zero elsewhere.
    pub fn basis(dim: usize, k: usize, bits: u32) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut coeffs: Vec<ComplexScalar> = (0..dim).map(|_| ComplexScalar::zero(bits)).collect();
        coeffs[k] = ComplexScalar::one(bits);
        Ok(SpanElement { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> &ComplexScalar {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[ComplexScalar] {
        &self.coeffs
    }

    pub fn scale(&self, factor: &ComplexScalar) -> Self {
        SpanElement {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(SpanElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(SpanElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x - y)
                .collect(),
        })
    }
}

/// The truncated space: exponents, interval, and the Gram matrix
/// G_nm = (e^((lambda_n+lambda_m) b) - e^((lambda_n+lambda_m) a)) / (lambda_n+lambda_m),
/// factorized once at a precision where it certifies positive definite.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    exponents: ExponentSequence,
    interval: Interval,
    gram: SpdMatrix,
    norms: Vec<Scalar>,
    bits: u32,
    requested_bits: u32,
}

/// Assembles the Gram matrix and certifies it positive definite, doubling the
/// working precision (re-deriving exponents and interval from their sources)
/// until factorization succeeds or the escalation limit is passed.
///
/// Two failures escalate rather than abort: a non-positive Cholesky pivot,
/// and exponents that collapse onto each other when re-rounded at the target
/// width. Both mean the width is too small for this geometry — a genuine
/// duplicate can never reach this point, because the sequence certified
/// distinctness at its own construction precision.
pub fn build_space(
    exponents: &ExponentSequence,
    interval: &Interval,
    cfg: &PrecisionConfig,
) -> Result<TruncatedSpace> {
    cfg.validate()?;
    let mut bits = cfg.mantissa_bits;
    loop {
        match try_build(exponents, interval, bits, cfg.mantissa_bits) {
            Ok(space) => return Ok(space),
            Err(Error::NotPositiveDefinite { .. }) | Err(Error::DuplicateExponent { .. }) => {
                let next = bits.saturating_mul(2);
                if next > cfg.escalation_limit {
                    return Err(Error::PrecisionExhausted {
                        limit: cfg.escalation_limit,
                    });
                }
                bits = next;
            }
            Err(other) => return Err(other),
        }
    }
}

fn try_build(
    exponents: &ExponentSequence,
    interval: &Interval,
    bits: u32,
    requested_bits: u32,
) -> Result<TruncatedSpace> {
    let lam = exponents.at_bits(bits)?;
    let iv = interval.at_bits(bits)?;
    let n = lam.len();
    let gram = SpdMatrix::from_fn(n, |i, j| {
        let s = lam.lambda(i) + lam.lambda(j);
        let rise = &(&s * iv.b()).exp() - &(&s * iv.a()).exp();
        &rise / &s
    });
    gram.factor()?;
    let norms = (0..n).map(|i| gram.get(i, i).sqrt()).collect();
    Ok(TruncatedSpace {
        exponents: lam,
        interval: iv,
        gram,
        norms,
        bits,
        requested_bits,
    })
}

impl TruncatedSpace {
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &ExponentSequence {
        &self.exponents
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn gram(&self) -> &SpdMatrix {
        &self.gram
    }

    pub fn gram_factor(&self) -> &crate::numerics::CholeskyFactor {
        self.gram
            .factor()
            .expect("factorization certified during construction")
    }

    /// Working precision the space was actually built at (>= the requested
    /// precision when escalation was needed).
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn escalated(&self) -> bool {
        self.bits != self.requested_bits
    }

    pub fn norm_of_basis(&self, n: usize) -> &Scalar {
        &self.norms[n]
    }

    pub fn basis_norms(&self) -> &[Scalar] {
        &self.norms
    }

    /// Unit-diagonal Gram of the normalized exponentials e_n / ||e_n||. Raw
    /// entries span hundreds of orders of magnitude; the normalized matrix
    /// isolates the angular geometry.
    pub fn normalized_gram(&self) -> SpdMatrix {
        SpdMatrix::from_fn(self.dim(), |i, j| {
            if i == j {
                Scalar::one(self.bits)
            } else {
                &(self.gram.get(i, j) / &self.norms[i]) / &self.norms[j]
            }
        })
    }

    pub fn check_dim(&self, f: &SpanElement) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// e^(lambda z) for complex z.
fn exp_lambda_z(lambda: &Scalar, z: &ComplexScalar) -> ComplexScalar {
    let magnitude = (lambda * z.re()).exp();
    let (s, c) = (lambda * z.im()).sin_cos();
    ComplexScalar::new(&magnitude * &c, &magnitude * &s)
}

/// f(z) = sum of c_n e^(lambda_n z), summed in ascending n.
pub fn evaluate(
    f: &SpanElement,
    space: &TruncatedSpace,
    z: &ComplexScalar,
) -> Result<ComplexScalar> {
    space.check_dim(f)?;
    let mut acc = ComplexScalar::zero(space.bits());
    for (n, c) in f.coeffs().iter().enumerate() {
        let term = c * &exp_lambda_z(space.exponents().lambda(n), z);
        acc = &acc + &term;
    }
    Ok(acc)
}

/// <f, g> = integral of f(t) conj(g(t)) over (a, b), computed exactly in the
/// Gram algebra as f^T G conj(g).
pub fn inner_product(
    f: &SpanElement,
    g: &SpanElement,
    space: &TruncatedSpace,
) -> Result<ComplexScalar> {
    space.check_dim(f)?;
    space.check_dim(g)?;
    let g_re: Vec<Scalar> = g.coeffs().iter().map(|c| c.re().clone()).collect();
    let g_im: Vec<Scalar> = g.coeffs().iter().map(|c| -c.im()).collect();
    let t_re = space.gram().mat_vec(&g_re)?;
    let t_im = space.gram().mat_vec(&g_im)?;
    let mut acc = ComplexScalar::zero(space.bits());
    for (n, c) in f.coeffs().iter().enumerate() {
        let t = ComplexScalar::new(t_re[n].clone(), t_im[n].clone());
        acc = &acc + &(c * &t);
    }
    Ok(acc)
}

/// ||f|| = sqrt(<f, f>). The imaginary part of <f, f> is exactly zero in the
/// Gram algebra up to rounding; a rounding-level negative real part is
/// clamped.
pub fn norm(f: &SpanElement, space: &TruncatedSpace) -> Result<Scalar> {
    let ip = inner_product(f, f, space)?;
    let re = ip.re();
    if re.is_sign_negative() {
        Ok(Scalar::zero(space.bits()))
    } else {
        Ok(re.sqrt())
    }
}
