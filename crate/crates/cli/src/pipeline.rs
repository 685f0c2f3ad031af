//! Stage orchestration: builds products lazily, runs the configured
//! commands in order, writes the data files, and assembles report.json.
//!
//! Determinism contract: a fixed config produces byte-identical CSV/JSON
//! data files; report.json varies only in its `wall_times_ms` block. All
//! numeric fields are decimal strings with 40 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use muntzlab_core::biorth::{
    compute_biorthogonal, fit_distance_bound, BiorthogonalSystem, BoundFit,
};
use muntzlab_core::expand::{analyze, analyze_function};
use muntzlab_core::hereditary::{sweep_partitions, SweepMode};
use muntzlab_core::numerics::{ComplexScalar, PrecisionConfig, Scalar};
use muntzlab_core::operators::{
    adjoint_consistency, commutator_norm, krylov_synthesis_check, make_weights, shift_consistency,
    tail_norm, verify_eigensystem, DiagonalOperator, WeightKind,
};
use muntzlab_core::spaces::{
    build_space, norm, ExponentSequence, Interval, SpanElement, TruncatedSpace,
};
use muntzlab_core::Error;

use crate::config::{ExponentSpec, PartitionSpec, RunConfig, Stage, WeightSpec};

/// Epsilons used by the bound-fit stage, largest to smallest; the operator
/// stage takes its tail envelope from the last (tightest) fit.
const DEFAULT_EPSILONS: [&str; 3] = ["0.25", "0.1", "0.05"];

/// Fixed seeds for the stage-internal probes, so data files are
/// reproducible without extra configuration.
const EXPAND_SEED: u64 = 17;
const ADJOINT_SEED: u64 = 23;
const SHIFT_SEED: u64 = 29;
const SYNTHESIS_SEED: u64 = 31;

const CSV_DIGITS: usize = 40;

fn d40(x: &Scalar) -> String {
    x.to_decimal_string(CSV_DIGITS)
}

fn complex_json(z: &ComplexScalar) -> Value {
    json!({"re": d40(z.re()), "im": d40(z.im())})
}

enum StageError {
    Core(Error),
    Io(std::io::Error),
}

impl StageError {
    fn exit_code(&self) -> i32 {
        match self {
            StageError::Core(Error::PrecisionExhausted { .. }) => 3,
            StageError::Core(_) => 2,
            StageError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            StageError::Core(e) => e.to_string(),
            StageError::Io(e) => format!("i/o failure: {e}"),
        }
    }
}

impl From<Error> for StageError {
    fn from(e: Error) -> Self {
        StageError::Core(e)
    }
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Io(e)
    }
}

type StageResult = Result<Value, StageError>;

/// Products reused across stages; each is built at most once per run.
#[derive(Default)]
struct Products {
    space: Option<TruncatedSpace>,
    bio: Option<BiorthogonalSystem>,
    fits: Option<Vec<BoundFit>>,
}

fn build_configured_space(cfg: &RunConfig) -> Result<TruncatedSpace, Error> {
    let bits = cfg.precision.mantissa_bits;
    let seq = match &cfg.exponents {
        ExponentSpec::Explicit(values) => ExponentSequence::from_decimals(values, bits)?,
        ExponentSpec::Squares { count } => ExponentSequence::squares(*count, bits)?,
        ExponentSpec::Geometric {
            scale,
            ratio,
            count,
        } => ExponentSequence::geometric(scale, ratio, *count, bits)?,
    };
    let interval = Interval::from_decimals(&cfg.interval.a, &cfg.interval.b, bits)?;
    let pc = PrecisionConfig {
        mantissa_bits: bits,
        escalation_limit: cfg.precision.escalation_limit,
    };
    build_space(&seq, &interval, &pc)
}

fn ensure_space<'p>(p: &'p mut Products, cfg: &RunConfig) -> Result<&'p TruncatedSpace, Error> {
    if p.space.is_none() {
        p.space = Some(build_configured_space(cfg)?);
    }
    Ok(p.space.as_ref().expect("just built"))
}

fn ensure_bio<'p>(p: &'p mut Products, cfg: &RunConfig) -> Result<&'p BiorthogonalSystem, Error> {
    if p.bio.is_none() {
        ensure_space(p, cfg)?;
        let bio = compute_biorthogonal(p.space.as_ref().expect("built above"))?;
        p.bio = Some(bio);
    }
    Ok(p.bio.as_ref().expect("just built"))
}

fn ensure_fits<'p>(p: &'p mut Products, cfg: &RunConfig) -> Result<&'p [BoundFit], Error> {
    if p.fits.is_none() {
        ensure_bio(p, cfg)?;
        let space = p.space.as_ref().expect("built above");
        let bio = p.bio.as_ref().expect("built above");
        let epsilons: Vec<Scalar> = DEFAULT_EPSILONS
            .iter()
            .map(|e| Scalar::parse_decimal(e, space.bits()).expect("literal epsilon"))
            .collect();
        p.fits = Some(fit_distance_bound(bio, space, &epsilons)?);
    }
    Ok(p.fits.as_ref().expect("just built"))
}

fn random_element(dim: usize, bits: u32, rng: &mut ChaCha20Rng) -> SpanElement {
    SpanElement::new(
        (0..dim)
            .map(|_| {
                ComplexScalar::new(
                    Scalar::from_f64(rng.gen_range(-1.0..1.0), bits),
                    Scalar::from_f64(rng.gen_range(-1.0..1.0), bits),
                )
            })
            .collect(),
    )
}

/// Runs the configured commands in order and writes report.json. Returns
/// the process exit code: 0 on success, 1 on i/o trouble, 2 on an
/// assertion/consistency failure in any stage, 3 on precision exhaustion.
pub fn run(cfg: &RunConfig) -> i32 {
    let out_dir = cfg.output_dir.clone();
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output directory {}: {e}", out_dir.display());
        return 1;
    }

    let mut products = Products::default();
    let mut stage_entries: Vec<Value> = Vec::new();
    let mut wall_times: Vec<Value> = Vec::new();
    let mut failure: Option<(String, StageError)> = None;

    for stage in &cfg.commands {
        let start = Instant::now();
        let outcome = run_stage(*stage, cfg, &mut products, &out_dir);
        wall_times.push(json!({
            "stage": stage.name(),
            "ms": start.elapsed().as_millis() as u64,
        }));
        match outcome {
            Ok(result) => stage_entries.push(json!({
                "name": stage.name(),
                "result": result,
            })),
            Err(err) => {
                failure = Some((stage.name().to_owned(), err));
                break;
            }
        }
    }

    let mut escalations: Vec<String> = Vec::new();
    if let Some(space) = &products.space {
        if space.escalated() {
            escalations.push(format!(
                "space construction escalated from {} to {} mantissa bits",
                cfg.precision.mantissa_bits,
                space.bits()
            ));
        }
    }

    let report = json!({
        "tool": "muntzlab",
        "status": if failure.is_some() { "failed" } else { "ok" },
        "failure": failure.as_ref().map(|(stage, err)| json!({
            "stage": stage,
            "error": err.message(),
        })).unwrap_or(Value::Null),
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "stages": stage_entries,
        "precision_escalations": escalations,
        "wall_times_ms": wall_times,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    if let Err(e) = fs::write(out_dir.join("report.json"), text) {
        eprintln!("cannot write report.json: {e}");
        return 1;
    }

    match failure {
        Some((stage, err)) => {
            eprintln!("stage {stage} failed: {}", err.message());
            err.exit_code()
        }
        None => 0,
    }
}

fn run_stage(stage: Stage, cfg: &RunConfig, p: &mut Products, out: &Path) -> StageResult {
    match stage {
        Stage::Gram => stage_gram(cfg, p),
        Stage::Biorth => stage_biorth(cfg, p, out),
        Stage::BoundFit => stage_bound_fit(cfg, p, out),
        Stage::Expand => stage_expand(cfg, p),
        Stage::Hereditary => stage_hereditary(cfg, p, out),
        Stage::Operator => stage_operator(cfg, p, out),
    }
}

/// Builds the truncated space and summarizes it: dimensions, precision,
/// exponent diagnostics, and size statistics of the Gram matrix (the matrix
/// itself is an intermediate, not an artifact).
fn stage_gram(cfg: &RunConfig, p: &mut Products) -> StageResult {
    let space = ensure_space(p, cfg)?;
    let lambdas: Vec<String> = space.exponents().lambdas().iter().map(d40).collect();
    let basis_norms: Vec<String> = space.basis_norms().iter().map(d40).collect();
    Ok(json!({
        "dim": space.dim(),
        "mantissa_bits": space.bits(),
        "escalated": space.escalated(),
        "interval": {"a": d40(space.interval().a()), "b": d40(space.interval().b())},
        "lambdas": lambdas,
        "gap": d40(space.exponents().gap()),
        "muntz_partial_sum": d40(space.exponents().muntz_partial_sum()),
        "basis_norms": basis_norms,
        "gram_frobenius_norm": d40(&space.gram().frobenius_norm()),
    }))
}

/// Computes the biorthogonal family and writes distances.csv
/// (n, lambda_n, D_n, r_norm).
fn stage_biorth(cfg: &RunConfig, p: &mut Products, out: &Path) -> StageResult {
    ensure_bio(p, cfg)?;
    let space = p.space.as_ref().expect("built above");
    let bio = p.bio.as_ref().expect("built above");
    let mut csv = String::from("n,lambda_n,D_n,r_norm\n");
    for n in 0..space.dim() {
        writeln!(
            csv,
            "{n},{},{},{}",
            d40(space.exponents().lambda(n)),
            d40(&bio.distances()[n]),
            d40(&bio.r_norms()[n]),
        )
        .expect("string write");
    }
    fs::write(out.join("distances.csv"), csv)?;
    let mut min_d = bio.distances()[0].clone();
    let mut max_d = bio.distances()[0].clone();
    for d in &bio.distances()[1..] {
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    Ok(json!({
        "csv": "distances.csv",
        "rows": space.dim(),
        "inverse_residual": d40(bio.residual()),
        "min_distance": d40(&min_d),
        "max_distance": d40(&max_d),
    }))
}

/// Fits the distance growth bound for the default epsilon ladder and writes
/// bounds.csv in long form: one row per (epsilon, n) carrying the fitted
/// constant, the shared regression slope, and the per-index margin.
fn stage_bound_fit(cfg: &RunConfig, p: &mut Products, out: &Path) -> StageResult {
    ensure_fits(p, cfg)?;
    let fits = p.fits.as_ref().expect("built above");
    let mut csv = String::from("eps,m_eps,slope,n,margin\n");
    for fit in fits.iter() {
        for (n, margin) in fit.per_n_margins.iter().enumerate() {
            writeln!(
                csv,
                "{},{},{},{n},{}",
                d40(&fit.epsilon),
                d40(&fit.fitted_m_epsilon),
                d40(&fit.slope),
                d40(margin),
            )
            .expect("string write");
        }
    }
    fs::write(out.join("bounds.csv"), csv)?;
    let summaries: Vec<Value> = fits
        .iter()
        .map(|fit| {
            json!({
                "epsilon": d40(&fit.epsilon),
                "m_epsilon": d40(&fit.fitted_m_epsilon),
                "log_m_epsilon": d40(&fit.log_m_epsilon),
                "slope": d40(&fit.slope),
                "mirror_slope": d40(&fit.mirror_slope()),
                "mirror_constant": d40(&fit.mirror_constant()),
            })
        })
        .collect();
    Ok(json!({
        "csv": "bounds.csv",
        "fits": summaries,
    }))
}

/// Expansion diagnostics: a seeded random span element must round-trip
/// through analysis, and the constant function 1 is expanded from genuine
/// moment integrals as an external-function exercise.
fn stage_expand(cfg: &RunConfig, p: &mut Products) -> StageResult {
    ensure_bio(p, cfg)?;
    let space = p.space.as_ref().expect("built above");
    let bio = p.bio.as_ref().expect("built above");
    let bits = space.bits();

    let mut rng = ChaCha20Rng::seed_from_u64(EXPAND_SEED);
    let f = random_element(space.dim(), bits, &mut rng);
    let roundtrip = analyze(&f, space, bio)?;
    let mut worst = Scalar::zero(bits);
    for (k, c) in roundtrip.coeffs.iter().enumerate() {
        worst = worst.max(&(c - f.coeff(k)).abs());
    }
    let f_norm = norm(&f, space)?;

    let constant = analyze_function(|_| Scalar::one(bits), space, bio)?;
    let coefficients: Vec<Value> = constant.coeffs.iter().map(complex_json).collect();

    Ok(json!({
        "roundtrip": {
            "seed": EXPAND_SEED,
            "element_norm": d40(&f_norm),
            "max_coefficient_deviation": d40(&worst),
            "residual_norm": d40(&roundtrip.residual_norm),
        },
        "constant_one": {
            "coefficients": coefficients,
            "residual_norm": d40(&constant.residual_norm),
        },
    }))
}

/// Sweeps mixed-system partitions per the config and writes
/// partitions.csv: one row per visited partition in sweep order.
fn stage_hereditary(cfg: &RunConfig, p: &mut Products, out: &Path) -> StageResult {
    ensure_bio(p, cfg)?;
    let space = p.space.as_ref().expect("built above");
    let bio = p.bio.as_ref().expect("built above");
    let mode = match cfg.partitions {
        PartitionSpec::Exhaustive => SweepMode::Exhaustive,
        PartitionSpec::Sample { count, seed } => SweepMode::RandomSample { count, seed },
    };
    let summary = sweep_partitions(space, bio, mode)?;
    let mut csv =
        String::from("bitmask,n1_size,n2_size,sigma_min,null_space_sigma,complete,undecided\n");
    let mut undecided = 0usize;
    let mut all_complete = true;
    for report in &summary.reports {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            report.partition.bitmask(),
            report.partition.n1().len(),
            report.partition.n2().len(),
            d40(&report.sigma_min),
            d40(&report.null_space_sigma),
            report.complete,
            report.undecided,
        )
        .expect("string write");
        undecided += report.undecided as usize;
        all_complete &= report.complete;
    }
    fs::write(out.join("partitions.csv"), csv)?;
    Ok(json!({
        "csv": "partitions.csv",
        "partitions": summary.reports.len(),
        "all_complete": all_complete,
        "undecided": undecided,
        "min_sigma": d40(&summary.min_sigma),
        "median_sigma": d40(&summary.median_sigma),
        "argmin_bitmask": summary.argmin,
    }))
}

/// The operator suite: eigensystem certification, commutator norm, tail
/// norms against the fitted envelope, and seeded spot checks of the adjoint
/// identity, the shift action (shift weights only), and Krylov synthesis.
/// Full detail goes to operator.json; the report carries a summary.
fn stage_operator(cfg: &RunConfig, p: &mut Products, out: &Path) -> StageResult {
    ensure_fits(p, cfg)?;
    let space = p.space.as_ref().expect("built above");
    let bio = p.bio.as_ref().expect("built above");
    let fit = p
        .fits
        .as_ref()
        .expect("built above")
        .last()
        .expect("nonempty ladder");
    let bits = space.bits();
    let dim = space.dim();

    let delta = Scalar::parse_decimal(&cfg.delta, bits)?;
    let weights = match &cfg.weights {
        WeightSpec::Shift => make_weights(&delta, space.exponents(), WeightKind::Shift)?,
        WeightSpec::Explicit(entries) => {
            let list: Vec<ComplexScalar> = entries
                .iter()
                .map(|(re, im)| {
                    Ok(ComplexScalar::new(
                        Scalar::parse_decimal(re, bits)?,
                        Scalar::parse_decimal(im, bits)?,
                    ))
                })
                .collect::<Result<_, Error>>()?;
            make_weights(&delta, space.exponents(), WeightKind::Custom(&list))?
        }
    };
    let op = DiagonalOperator::new(space, bio, weights)?;

    let eig = verify_eigensystem(&op)?;
    let mut max_basis = Scalar::zero(bits);
    for r in &eig.basis_residuals {
        max_basis = max_basis.max(r);
    }
    let mut max_adjoint = Scalar::zero(bits);
    for r in &eig.adjoint_residuals {
        max_adjoint = max_adjoint.max(r);
    }
    let spectrum: Vec<Value> = eig.spectrum.iter().map(complex_json).collect();

    // The commutator needs two indices to compare; a one-dimensional space
    // is normal by default.
    let commutator = if dim >= 2 {
        Some(commutator_norm(&op)?)
    } else {
        None
    };

    let mut tails = Vec::with_capacity(dim + 1);
    for m in 0..=dim {
        let (computed, envelope) = tail_norm(&op, m, fit)?;
        let ratio = if envelope.is_zero() {
            Value::Null
        } else {
            Value::String(d40(&(&computed / &envelope)))
        };
        tails.push(json!({
            "m": m,
            "computed": d40(&computed),
            "envelope": d40(&envelope),
            "ratio": ratio,
        }));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(ADJOINT_SEED);
    let mut max_adjoint_pair = Scalar::zero(bits);
    for _ in 0..10 {
        let h = random_element(dim, bits, &mut rng);
        let f = random_element(dim, bits, &mut rng);
        max_adjoint_pair = max_adjoint_pair.max(&adjoint_consistency(&op, &h, &f)?);
    }

    let shift_check = match &cfg.weights {
        WeightSpec::Shift => {
            let mut rng = ChaCha20Rng::seed_from_u64(SHIFT_SEED);
            let a = space.interval().a();
            let span = &(space.interval().b() - a) + &Scalar::one(bits);
            let mut worst = Scalar::zero(bits);
            for _ in 0..10 {
                let f = random_element(dim, bits, &mut rng);
                let points: Vec<ComplexScalar> = (0..10)
                    .map(|_| {
                        // a - 1 + u * (b - a + 1) with u < 1 stays left of b.
                        let u = Scalar::from_f64(rng.gen_range(0.0..1.0), bits);
                        ComplexScalar::from_real(&(a - &Scalar::one(bits)) + &(&span * &u))
                    })
                    .collect();
                worst = worst.max(&shift_consistency(&op, &f, &points)?);
            }
            json!({
                "seed": SHIFT_SEED,
                "elements": 10,
                "points_per_element": 10,
                "max_normalized_discrepancy": d40(&worst),
            })
        }
        WeightSpec::Explicit(_) => Value::Null,
    };

    let mut rng = ChaCha20Rng::seed_from_u64(SYNTHESIS_SEED);
    let span_bits = dim.min(63) as u32;
    let mut matched = 0usize;
    let mut undecided = 0usize;
    let mut worst_projection = Scalar::zero(bits);
    const SYNTHESIS_TRIALS: usize = 10;
    for _ in 0..SYNTHESIS_TRIALS {
        let mask: u64 = rng.gen_range(1..(1u64 << span_bits));
        let coeffs: Vec<ComplexScalar> = (0..dim)
            .map(|k| {
                if k < 63 && mask & (1 << k) != 0 {
                    ComplexScalar::new(
                        Scalar::from_f64(rng.gen_range(-1.0..1.0), bits),
                        Scalar::from_f64(rng.gen_range(-1.0..1.0), bits),
                    )
                } else {
                    ComplexScalar::zero(bits)
                }
            })
            .collect();
        match krylov_synthesis_check(&op, &SpanElement::new(coeffs)) {
            Ok(report) => {
                if report.dimension_matches && report.span_matches {
                    matched += 1;
                }
                worst_projection = worst_projection.max(&report.max_projection_residual);
            }
            Err(Error::RankIndeterminate { .. }) => undecided += 1,
            Err(e) => return Err(e.into()),
        }
    }

    let operator_json = json!({
        "weights": {
            "delta": d40(op.weights().delta()),
            "u": op.weights().u().iter().map(complex_json).collect::<Vec<Value>>(),
        },
        "eigensystem": {
            "max_basis_residual": d40(&max_basis),
            "max_adjoint_residual": d40(&max_adjoint),
            "kernel_trivial": eig.kernel_trivial,
            "all_simple": eig.all_simple,
            "zero_is_limit_point_only": eig.zero_is_limit_point_only,
            "spectrum": spectrum,
        },
        "commutator_norm": commutator.as_ref().map(|c| Value::String(d40(c))).unwrap_or(Value::Null),
        "tail_norms": {
            "envelope_epsilon": d40(&fit.epsilon),
            "cutoffs": tails,
        },
        "adjoint_check": {
            "seed": ADJOINT_SEED,
            "pairs": 10,
            "max_normalized_residual": d40(&max_adjoint_pair),
        },
        "shift_check": shift_check,
        "synthesis_check": {
            "seed": SYNTHESIS_SEED,
            "trials": SYNTHESIS_TRIALS,
            "matched": matched,
            "undecided": undecided,
            "max_projection_residual": d40(&worst_projection),
        },
    });
    let mut text = serde_json::to_string_pretty(&operator_json).expect("operator json serializes");
    text.push('\n');
    fs::write(out.join("operator.json"), text)?;

    Ok(json!({
        "json": "operator.json",
        "max_basis_residual": d40(&max_basis),
        "max_adjoint_residual": d40(&max_adjoint),
        "commutator_norm": commutator.as_ref().map(|c| Value::String(d40(c))).unwrap_or(Value::Null),
        "synthesis_matched": matched,
        "synthesis_undecided": undecided,
    }))
}
