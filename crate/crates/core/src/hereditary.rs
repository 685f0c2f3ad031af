//! Mixed-system completeness probes: split the index set into N1 and N2,
//! assemble the Gram matrix of {e_n : n in N1} together with {r_n : n in N2},
//! measure how far the mixed family is from singular, and sweep partitions.

use crate::biorth::BiorthogonalSystem;
use crate::error::{Error, Result};
use crate::numerics::{min_singular_value, symmetric_eigenvalues, Scalar, SpdMatrix};
use crate::spaces::TruncatedSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// Largest dimension for which an exhaustive partition sweep is allowed
/// (2^14 = 16384 reports).
pub const EXHAUSTIVE_LIMIT: usize = 14;

/// A split of the index set {0, .., N-1} into the exponential side N1 and
/// the biorthogonal side N2. Both lists are kept sorted; the bitmask
/// identity sets bit n exactly when n is in N2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    n1: Vec<usize>,
    n2: Vec<usize>,
}

impl Partition {
    /// Validates disjointness and exact cover of {0, .., dim-1}.
    pub fn new(mut n1: Vec<usize>, mut n2: Vec<usize>, dim: usize) -> Result<Self> {
        n1.sort_unstable();
        n2.sort_unstable();
        if n1.len() + n2.len() != dim {
            return Err(Error::InvalidPartition {
                reason: format!(
                    "index sets carry {} entries for dimension {dim}",
                    n1.len() + n2.len()
                ),
            });
        }
        let mut seen = vec![false; dim];
        for &k in n1.iter().chain(&n2) {
            if k >= dim {
                return Err(Error::InvalidPartition {
                    reason: format!("index {k} out of range for dimension {dim}"),
                });
            }
            if seen[k] {
                return Err(Error::InvalidPartition {
                    reason: format!("index {k} appears twice"),
                });
            }
            seen[k] = true;
        }
        Ok(Partition { n1, n2 })
    }

    /// Decodes a bitmask: bit n set means n belongs to N2.
    pub fn from_bitmask(mask: u64, dim: usize) -> Result<Self> {
        if dim > 64 {
            return Err(Error::InvalidPartition {
                reason: format!("bitmask encoding caps the dimension at 64, got {dim}"),
            });
        }
        if dim < 64 && (mask >> dim) != 0 {
            return Err(Error::InvalidPartition {
                reason: format!("bitmask {mask:#x} has bits beyond dimension {dim}"),
            });
        }
        let mut n1 = Vec::new();
        let mut n2 = Vec::new();
        for k in 0..dim {
            if (mask >> k) & 1 == 1 {
                n2.push(k);
            } else {
                n1.push(k);
            }
        }
        Ok(Partition { n1, n2 })
    }

    pub fn bitmask(&self) -> u64 {
        let mut mask = 0u64;
        for &k in &self.n2 {
            mask |= 1 << k;
        }
        mask
    }

    pub fn n1(&self) -> &[usize] {
        &self.n1
    }

    pub fn n2(&self) -> &[usize] {
        &self.n2
    }

    pub fn dim(&self) -> usize {
        self.n1.len() + self.n2.len()
    }

    /// The swapped partition (N2, N1).
    pub fn dual(&self) -> Partition {
        Partition {
            n1: self.n2.clone(),
            n2: self.n1.clone(),
        }
    }
}

/// The completeness verdict for one partition: the mixed Gram matrix, the
/// smallest eigenvalue of its normalization, the independent null-space
/// singular value, and the certification outcome.
///
/// `complete` is set only when both certifications pass; when both fail the
/// partition is flagged `undecided` instead (a precision statement, not an
/// incompleteness claim). The two certifications disagreeing is treated as
/// an internal error by `completeness_metric`.
#[derive(Clone, Debug)]
pub struct MixedSystemReport {
    pub partition: Partition,
    pub mixed_gram: SpdMatrix,
    pub sigma_min: Scalar,
    pub null_space_sigma: Scalar,
    pub complete: bool,
    pub undecided: bool,
}

/// The Gram matrix of the mixed family in block order (N1 ascending, then
/// N2 ascending). Entries come from the Gram identities: <e_n, e_m> = G_nm,
/// <r_n, r_m> = C_nm, and the cross products <e_n, r_m> = delta_nm, which
/// vanish identically because the two sets are disjoint.
pub fn mixed_gram(
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
    partition: &Partition,
) -> Result<SpdMatrix> {
    check_dims(space, bio, partition)?;
    let bits = space.bits();
    let split = partition.n1.len();
    let order: Vec<usize> = partition.n1.iter().chain(&partition.n2).copied().collect();
    Ok(SpdMatrix::from_fn(order.len(), |i, j| {
        let (a, b) = (order[i], order[j]);
        match (i < split, j < split) {
            (true, true) => space.gram().get(a, b).clone(),
            (false, false) => bio.c_entry(a, b).clone(),
            _ => Scalar::zero(bits),
        }
    }))
}

/// Certifies that the mixed family spans the truncated space, two ways:
/// Cholesky on the mixed Gram, and a null-space probe that looks for a
/// nonzero vector orthogonal to every member of the family. The returned
/// sigma_min is the smallest eigenvalue of the normalized mixed Gram — the
/// angular health of the family, independent of the e^(+-b lambda) scales
/// its two blocks live on.
pub fn completeness_metric(
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
    partition: &Partition,
) -> Result<MixedSystemReport> {
    check_dims(space, bio, partition)?;
    let n = space.dim();
    let bits = space.bits();
    let m = mixed_gram(space, bio, partition)?;

    // Angular spectrum of the normalization M_ij / sqrt(M_ii M_jj).
    let norms: Vec<Scalar> = (0..n).map(|i| m.get(i, i).sqrt()).collect();
    let mut normalized = vec![vec![Scalar::zero(bits); n]; n];
    for i in 0..n {
        for j in 0..n {
            normalized[i][j] = if i == j {
                Scalar::one(bits)
            } else {
                &(m.get(i, j) / &norms[i]) / &norms[j]
            };
        }
    }
    let eigenvalues = symmetric_eigenvalues(normalized)?;
    let sigma_min = eigenvalues[0].clone();

    // Certification 1: the mixed Gram factorizes.
    let factorizes = match m.factor() {
        Ok(_) => true,
        Err(Error::NotPositiveDefinite { .. }) => false,
        Err(other) => return Err(other),
    };

    // Certification 2: only the zero vector is orthogonal to the whole
    // family. In the coordinates y = G x, orthogonality to e_n reads y_n = 0
    // and orthogonality to r_n reads (C y)_n = 0, so the family is complete
    // exactly when the stacked constraint matrix has full rank.
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    for &k in &partition.n1 {
        let mut row = vec![Scalar::zero(bits); n];
        row[k] = Scalar::one(bits);
        rows.push(row);
    }
    for &k in &partition.n2 {
        rows.push((0..n).map(|j| bio.c_entry(k, j).clone()).collect());
    }
    for row in &mut rows {
        let mut sq = Scalar::zero(bits);
        for v in row.iter() {
            sq = &sq + &v.square();
        }
        let scale = sq.sqrt().recip();
        for v in row.iter_mut() {
            *v = &*v * &scale;
        }
    }
    let mut product = vec![vec![Scalar::zero(bits); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = Scalar::zero(bits);
            for (x, y) in rows[i].iter().zip(&rows[j]) {
                acc = &acc + &(x * y);
            }
            product[i][j] = acc.clone();
            product[j][i] = acc;
        }
    }
    let min_eig = min_singular_value(&product)?;
    let null_space_sigma = min_eig.sqrt();
    let floor = Scalar::two_pow(-((bits / 2) as i32), bits);
    let trivial_null_space = null_space_sigma > floor;

    if factorizes != trivial_null_space {
        return Err(Error::InternalConsistency {
            what: format!(
                "completeness certifications disagree for partition {:#x}: \
                 factorization {} while the null-space margin is {}",
                partition.bitmask(),
                if factorizes { "succeeded" } else { "failed" },
                null_space_sigma.to_decimal_string(10)
            ),
        });
    }
    let complete = factorizes && trivial_null_space && sigma_min.is_sign_positive();
    let undecided = !factorizes && !trivial_null_space;
    Ok(MixedSystemReport {
        partition: partition.clone(),
        mixed_gram: m,
        sigma_min,
        null_space_sigma,
        complete,
        undecided,
    })
}

/// How a partition sweep picks its partitions.
#[derive(Clone, Copy, Debug)]
pub enum SweepMode {
    /// All 2^N partitions; capped at EXHAUSTIVE_LIMIT.
    Exhaustive,
    /// `count` bitmasks drawn from a seeded generator; repeats allowed.
    RandomSample { count: usize, seed: u64 },
}

/// Every report of a sweep plus the worst-case summary.
#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub reports: Vec<MixedSystemReport>,
    pub min_sigma: Scalar,
    pub median_sigma: Scalar,
    /// Bitmask of the partition attaining min_sigma (first in mask order on
    /// ties).
    pub argmin: u64,
}

/// Runs completeness_metric over a deterministic list of partitions, in
/// parallel, and summarizes. The report list keeps the sampling order.
pub fn sweep_partitions(
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
    mode: SweepMode,
) -> Result<SweepSummary> {
    let n = space.dim();
    let masks: Vec<u64> = match mode {
        SweepMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::Usage(format!(
                    "exhaustive sweeps are capped at dimension {EXHAUSTIVE_LIMIT}, got {n}"
                )));
            }
            (0..(1u64 << n)).collect()
        }
        SweepMode::RandomSample { count, seed } => {
            if n > 63 {
                return Err(Error::Usage(format!(
                    "sampled sweeps are capped at dimension 63, got {n}"
                )));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (0..count).map(|_| rng.gen_range(0..(1u64 << n))).collect()
        }
    };

    let reports: Vec<MixedSystemReport> = masks
        .par_iter()
        .map(|&mask| {
            let partition = Partition::from_bitmask(mask, n)?;
            completeness_metric(space, bio, &partition)
        })
        .collect::<Result<_>>()?;

    let mut sigmas: Vec<(usize, Scalar)> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.sigma_min.clone()))
        .collect();
    sigmas.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite sigma"));
    let (min_index, min_sigma) = sigmas.first().expect("nonempty sweep").clone();
    let mid = sigmas.len() / 2;
    let median_sigma = if sigmas.len() % 2 == 1 {
        sigmas[mid].1.clone()
    } else {
        let half = Scalar::parse_decimal("0.5", space.bits()).expect("exact decimal");
        &(&sigmas[mid - 1].1 + &sigmas[mid].1) * &half
    };
    // Ties resolve to the smallest bitmask.
    let mut argmin = reports[min_index].partition.bitmask();
    for (i, sigma) in &sigmas {
        if sigma == &min_sigma {
            argmin = argmin.min(reports[*i].partition.bitmask());
        } else {
            break;
        }
    }
    Ok(SweepSummary {
        reports,
        min_sigma,
        median_sigma,
        argmin,
    })
}

fn check_dims(
    space: &TruncatedSpace,
    bio: &BiorthogonalSystem,
    partition: &Partition,
) -> Result<()> {
    if bio.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: bio.dim(),
        });
    }
    if partition.dim() != space.dim() {
        return Err(Error::InvalidPartition {
            reason: format!(
                "partition covers {} indices in a {}-dimensional space",
                partition.dim(),
                space.dim()
            ),
        });
    }
    Ok(())
}
