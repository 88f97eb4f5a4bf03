//! Empirical ε-nets of sampled image sets `{W x}`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{
    bound_appf, bound_cor_11, bound_cor_mindk, bound_cor_p1_general, bound_thm1, bound_thm2, bound_thm3,
    bound_thm4, BoundQuery, BoundResult,
};
use crate::error::{invalid, precondition, Error, Result};
use crate::linalg::{
    conjugate_exponent, random_orthonormal, sample_class_member, vec_norm, MatrixClassSpec, NormKind,
    FEASIBILITY_TOL,
};

/// Largest cloud accepted by [`exact_min_cover`].
pub const EXACT_MAX_POINTS: usize = 16;
/// Largest grid built by [`volumetric_grid_cover`].
pub const GRID_MAX_CENTERS: f64 = 1e8;

/// Pooled outputs `z = W x` over sampled matrices and fixed inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCloud {
    pub points: Vec<Vec<f64>>,
    pub source_spec: Option<MatrixClassSpec>,
    pub n_inputs: usize,
    pub n_matrices: usize,
}

impl ImageCloud {
    /// Cloud from explicit points, for oracle checks.
    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        let n = points.len();
        Self {
            points,
            source_spec: None,
            n_inputs: n,
            n_matrices: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMethod {
    GreedyInternal,
    ExactMin,
    VolumetricGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverEstimate {
    pub centers: Vec<Vec<f64>>,
    pub eps: f64,
    pub size: usize,
    pub method: CoverMethod,
}

impl CoverEstimate {
    /// Whether every point lies within `eps` of some center.
    pub fn covers(&self, points: &[Vec<f64>]) -> bool {
        let e2 = self.eps * self.eps;
        points
            .iter()
            .all(|z| self.centers.iter().any(|c| sq_dist(z, c) <= e2 * (1.0 + 1e-12)))
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid(format!("cover radius {eps} must be positive")));
    }
    Ok(())
}

/// Samples `n_matrices` class members and applies each to every input.
///
/// Inputs must lie in the class input-norm ball of radius `b_x`. Points are
/// ordered matrix-major.
pub fn build_cloud(
    spec: &MatrixClassSpec,
    inputs: &[Vec<f64>],
    b_x: f64,
    n_matrices: usize,
    seed: u64,
) -> Result<ImageCloud> {
    spec.validate()?;
    let q = spec.input_norm();
    for x in inputs {
        if x.len() != spec.d {
            return Err(invalid(format!("input of length {} for d = {}", x.len(), spec.d)));
        }
        if vec_norm(x, q)? > b_x * (1.0 + FEASIBILITY_TOL) + 1e-12 {
            return Err(precondition(format!("input outside the l_{q} ball of radius {b_x}")));
        }
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let matrix_seeds: Vec<u64> = (0..n_matrices).map(|_| seeds.random()).collect();
    let blocks: Vec<Vec<Vec<f64>>> = matrix_seeds
        .par_iter()
        .map(|&s| {
            let w = sample_class_member(spec, s)?;
            inputs.iter().map(|x| w.matvec(x)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ImageCloud {
        points: blocks.into_iter().flatten().collect(),
        source_spec: Some(spec.clone()),
        n_inputs: inputs.len(),
        n_matrices,
    })
}

/// Row-major bitset adjacency: bit `j` of row `i` is set when
/// `‖z_i − z_j‖ ≤ ε`.
struct Adjacency {
    words: usize,
    bits: Vec<u64>,
}

impl Adjacency {
    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }
}

/// Builds one adjacency per radius in a single pass over pairs.
fn adjacencies(points: &[Vec<f64>], eps: &[f64]) -> Vec<Adjacency> {
    let m = points.len();
    let words = m.div_ceil(64);
    let e2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let dim = points.first().map_or(0, Vec::len);
    // coordinate-major copy, padded to whole words, so each block of 64
    // distances is a vectorizable sweep; padding sits at +∞ and never matches
    let stride = words * 64;
    let mut coords = vec![f64::INFINITY; dim * stride];
    for (j, z) in points.iter().enumerate() {
        for (c, &v) in z.iter().enumerate() {
            coords[c * stride + j] = v;
        }
    }
    // distances are symmetric: row i computes the words from its own
    // diagonal block onward, and the rest is read off the transposed rows
    let upper: Vec<Vec<Vec<u64>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rows = vec![vec![0u64; words]; eps.len()];
            let zi = &points[i];
            let mut d2 = [0.0f64; 64];
            for w in i / 64..words {
                d2.fill(0.0);
                for (c, &x) in zi.iter().enumerate() {
                    let col = &coords[c * stride + w * 64..c * stride + (w + 1) * 64];
                    for (acc, &y) in d2.iter_mut().zip(col) {
                        let t = x - y;
                        *acc += t * t;
                    }
                }
                for (row, &t) in rows.iter_mut().zip(&e2) {
                    let mut word = 0u64;
                    for (g, lanes) in d2.chunks_exact(8).enumerate() {
                        let mut byte = 0u64;
                        for (b, &d) in lanes.iter().enumerate() {
                            byte |= ((d <= t) as u64) << b;
                        }
                        word |= byte << (8 * g);
                    }
                    row[w] = word;
                }
            }
            rows
        })
        .collect();
    (0..eps.len())
        .map(|e| {
            let mut bits: Vec<u64> = upper.iter().flat_map(|r| r[e].iter().copied()).collect();
            let mut block = [0u64; 64];
            for a in 0..words {
                for b in 0..a {
                    for (r, slot) in block.iter_mut().enumerate() {
                        let i = b * 64 + r;
                        *slot = if i < m { bits[i * words + a] } else { 0 };
                    }
                    transpose64(&mut block);
                    for (s, &v) in block.iter().enumerate() {
                        let i = a * 64 + s;
                        if i < m {
                            bits[i * words + b] = v;
                        }
                    }
                }
            }
            Adjacency { words, bits }
        })
        .collect()
}

/// In-place transpose of a 64×64 bit matrix whose row `r` is word `r`,
/// column `c` bit `c`.
fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut mask: u64 = 0x0000_0000_FFFF_FFFF;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & mask;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        mask ^= mask << j;
    }
}

fn gain(row: &[u64], uncovered: &[u64]) -> u32 {
    row.iter().zip(uncovered).map(|(a, b)| (a & b).count_ones()).sum()
}

/// Greedy max-coverage with lowest-index tie-breaking, evaluated lazily:
/// gains only shrink, so a popped entry whose refreshed gain is unchanged
/// is the exact greedy choice.
fn greedy_on(adj: &Adjacency, m: usize) -> Vec<usize> {
    let mut uncovered = vec![u64::MAX; adj.words];
    if m % 64 != 0 {
        if let Some(last) = uncovered.last_mut() {
            *last = (1u64 << (m % 64)) - 1;
        }
    }
    let mut heap: BinaryHeap<(u32, Reverse<usize>)> = (0..m)
        .map(|i| (adj.row(i).iter().map(|w| w.count_ones()).sum(), Reverse(i)))
        .collect();
    let mut left = m;
    let mut chosen = Vec::new();
    while left > 0 {
        let (stale, Reverse(i)) = heap.pop().expect("uncovered points remain coverable");
        let fresh = gain(adj.row(i), &uncovered);
        if fresh == stale {
            chosen.push(i);
            for (u, a) in uncovered.iter_mut().zip(adj.row(i)) {
                *u &= !a;
            }
            left -= fresh as usize;
        } else if fresh > 0 {
            heap.push((fresh, Reverse(i)));
        }
    }
    chosen
}

/// Greedy internal covers at several radii, sharing the distance pass.
pub fn greedy_cover_multi(cloud: &ImageCloud, eps: &[f64]) -> Result<Vec<CoverEstimate>> {
    for &e in eps {
        check_eps(e)?;
    }
    let m = cloud.len();
    if m == 0 {
        return Ok(eps
            .iter()
            .map(|&e| CoverEstimate {
                centers: Vec::new(),
                eps: e,
                size: 0,
                method: CoverMethod::GreedyInternal,
            })
            .collect());
    }
    Ok(adjacencies(&cloud.points, eps)
        .iter()
        .zip(eps)
        .map(|(adj, &e)| {
            let chosen = greedy_on(adj, m);
            CoverEstimate {
                size: chosen.len(),
                centers: chosen.into_iter().map(|i| cloud.points[i].clone()).collect(),
                eps: e,
                method: CoverMethod::GreedyInternal,
            }
        })
        .collect())
}

/// Greedy internal cover: centers are cloud points.
pub fn greedy_cover(cloud: &ImageCloud, eps: f64) -> Result<CoverEstimate> {
    Ok(greedy_cover_multi(cloud, &[eps])?.pop().expect("one radius"))
}

/// Minimum internal cover by exhaustive search over center subsets.
pub fn exact_min_cover(cloud: &ImageCloud, eps: f64) -> Result<CoverEstimate> {
    check_eps(eps)?;
    let m = cloud.len();
    if m > EXACT_MAX_POINTS {
        return Err(Error::SizeLimit(format!("{m} points exceed the exhaustive limit {EXACT_MAX_POINTS}")));
    }
    let e2 = eps * eps;
    let reach: Vec<u32> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| sq_dist(&cloud.points[i], &cloud.points[j]) <= e2)
                .fold(0u32, |acc, j| acc | 1 << j)
        })
        .collect();
    let full: u32 = if m == 0 { 0 } else { u32::MAX >> (32 - m) };
    let mut union = vec![0u32; 1 << m];
    let mut best: Option<u32> = if m == 0 { Some(0) } else { None };
    for mask in 1u32..(1u32 << m) {
        let low = mask.trailing_zeros() as usize;
        union[mask as usize] = union[(mask & (mask - 1)) as usize] | reach[low];
        if union[mask as usize] == full && best.is_none_or(|b| mask.count_ones() < b.count_ones()) {
            best = Some(mask);
        }
    }
    let best = best.expect("all points form a cover");
    let centers: Vec<Vec<f64>> = (0..m).filter(|&i| best >> i & 1 == 1).map(|i| cloud.points[i].clone()).collect();
    Ok(CoverEstimate {
        size: centers.len(),
        centers,
        eps,
        method: CoverMethod::ExactMin,
    })
}

/// Axis-aligned grid with step `2ε/√dim` covering the `ℓ_2` ball of the
/// given radius; cells have half-diagonal `ε`.
pub fn volumetric_grid_cover(radius: f64, dim: usize, eps: f64) -> Result<CoverEstimate> {
    check_eps(eps)?;
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(invalid("radius must be finite and >= 0"));
    }
    if dim == 0 {
        return Err(invalid("dim must be >= 1"));
    }
    let sqrt_dim = (dim as f64).sqrt();
    let step = 2.0 * eps / sqrt_dim;
    let per_axis = ((radius * sqrt_dim / eps).ceil() as usize).max(1);
    if (per_axis as f64).powi(dim as i32) > GRID_MAX_CENTERS {
        return Err(Error::SizeLimit(format!("grid of {per_axis}^{dim} centers")));
    }
    let offset = (per_axis as f64 - 1.0) / 2.0;
    let keep = (radius + eps) * (radius + eps);
    let mut centers = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let c: Vec<f64> = idx.iter().map(|&i| (i as f64 - offset) * step).collect();
        if c.iter().map(|v| v * v).sum::<f64>() <= keep {
            centers.push(c);
        }
        let mut axis = 0;
        while axis < dim {
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    Ok(CoverEstimate {
        size: centers.len(),
        centers,
        eps,
        method: CoverMethod::VolumetricGrid,
    })
}

/// `ln` of the greedy cover size at each radius (0 for an empty cloud).
pub fn empirical_log_covers(cloud: &ImageCloud, eps: &[f64]) -> Result<Vec<f64>> {
    Ok(greedy_cover_multi(cloud, eps)?
        .iter()
        .map(|c| if c.size == 0 { 0.0 } else { (c.size as f64).ln() })
        .collect())
}

/// `ln` of the greedy internal cover size of a freshly built cloud.
///
/// An internal cover at `ε` upper-bounds nothing about the class; compare
/// it with theoretical bounds evaluated at `ε/2`.
pub fn empirical_log_cover(
    spec: &MatrixClassSpec,
    inputs: &[Vec<f64>],
    b_x: f64,
    eps: f64,
    n_matrices: usize,
    seed: u64,
) -> Result<f64> {
    let cloud = build_cloud(spec, inputs, b_x, n_matrices, seed)?;
    Ok(empirical_log_covers(&cloud, &[eps])?[0])
}

/// The classes whose covering numbers have closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TheoremClass {
    /// Spectral norm, columns in an `r`-dimensional subspace, `ℓ_2` inputs.
    Volumetric,
    /// Frobenius norm, rank `≤ r`, `ℓ_2` inputs.
    FrobeniusRank,
    /// Transposed (2,1) norm, rank `≤ r`, `ℓ_∞` inputs.
    TwoOneRank,
    /// Transposed (2,1) norm without a rank cap, `ℓ_∞` inputs.
    MinDimTwoOne,
    /// Basis (p,1) norm in an `r`-dimensional subspace.
    BasisP1 { p: f64 },
    /// Row-wise (p,1) norm without a subspace.
    GeneralP1 { p: f64 },
    /// Entry-wise (1,1) norm with `ℓ_1` inputs.
    EntrywiseOneOne,
    /// Transposed (2,1) norm in an `r`-dimensional subspace.
    TwoOneSubspace,
}

impl TheoremClass {
    pub fn all() -> Vec<TheoremClass> {
        vec![
            TheoremClass::Volumetric,
            TheoremClass::FrobeniusRank,
            TheoremClass::TwoOneRank,
            TheoremClass::MinDimTwoOne,
            TheoremClass::BasisP1 { p: 2.0 },
            TheoremClass::BasisP1 { p: f64::INFINITY },
            TheoremClass::GeneralP1 { p: 2.0 },
            TheoremClass::EntrywiseOneOne,
            TheoremClass::TwoOneSubspace,
        ]
    }

    pub fn name(&self) -> String {
        match self {
            TheoremClass::Volumetric => "volumetric".into(),
            TheoremClass::FrobeniusRank => "frobenius_rank".into(),
            TheoremClass::TwoOneRank => "two_one_rank".into(),
            TheoremClass::MinDimTwoOne => "two_one_mindk".into(),
            TheoremClass::BasisP1 { p } => format!("basis_p1_{p}"),
            TheoremClass::GeneralP1 { p } => format!("general_p1_{p}"),
            TheoremClass::EntrywiseOneOne => "entrywise_11".into(),
            TheoremClass::TwoOneSubspace => "two_one_subspace".into(),
        }
    }

    /// Whether the class uses the rank / subspace dimension `r`.
    pub fn uses_rank(&self) -> bool {
        !matches!(
            self,
            TheoremClass::MinDimTwoOne | TheoremClass::GeneralP1 { .. } | TheoremClass::EntrywiseOneOne
        )
    }

    pub fn input_norm(&self) -> f64 {
        match *self {
            TheoremClass::Volumetric | TheoremClass::FrobeniusRank => 2.0,
            TheoremClass::TwoOneRank | TheoremClass::MinDimTwoOne | TheoremClass::TwoOneSubspace => f64::INFINITY,
            TheoremClass::BasisP1 { p } | TheoremClass::GeneralP1 { p } => conjugate_exponent(p).unwrap_or(f64::NAN),
            TheoremClass::EntrywiseOneOne => 1.0,
        }
    }

    /// Concrete class; subspaces are drawn from `seed`.
    pub fn spec(&self, d: usize, k: usize, r: usize, b_w: f64, seed: u64) -> Result<MatrixClassSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (norm, rank_cap, basis) = match *self {
            TheoremClass::Volumetric => (NormKind::Spectral, None, Some(random_orthonormal(k, r, &mut rng)?)),
            TheoremClass::FrobeniusRank => (NormKind::Frobenius, Some(r), None),
            TheoremClass::TwoOneRank => (NormKind::Transposed21, Some(r), None),
            TheoremClass::MinDimTwoOne => (NormKind::Transposed21, None, None),
            TheoremClass::BasisP1 { p } => (NormKind::BasisP1 { p }, None, Some(random_orthonormal(k, r, &mut rng)?)),
            TheoremClass::GeneralP1 { p } => (NormKind::TransposedP1 { p }, None, None),
            TheoremClass::EntrywiseOneOne => (NormKind::Entrywise { p: 1.0, q: 1.0 }, None, None),
            TheoremClass::TwoOneSubspace => (NormKind::Transposed21, None, Some(random_orthonormal(k, r, &mut rng)?)),
        };
        MatrixClassSpec::new(d, k, norm, b_w, rank_cap, basis)
    }

    /// The closed-form bound covering this class.
    pub fn bound(&self, q: &BoundQuery) -> Result<BoundResult> {
        match self {
            TheoremClass::Volumetric => bound_thm1(q),
            TheoremClass::FrobeniusRank => bound_thm2(q),
            TheoremClass::TwoOneRank => bound_thm3(q),
            TheoremClass::MinDimTwoOne => bound_cor_mindk(q),
            TheoremClass::BasisP1 { .. } => bound_thm4(q),
            TheoremClass::GeneralP1 { .. } => bound_cor_p1_general(q),
            TheoremClass::EntrywiseOneOne => bound_cor_11(q),
            TheoremClass::TwoOneSubspace => bound_appf(q),
        }
    }
}
