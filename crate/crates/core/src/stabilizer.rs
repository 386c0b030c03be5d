//! Continuous stabilizer Lie algebras of a pure state under block-local
//! unitaries, entanglement-group dimensions, sharing restrictions, and
//! discrete stabilizer verification and search.
//!
//! A local Hermitian tuple (H_b) generates a stabilizer direction iff
//! `(I - |psi><psi|) (sum_b H_b^emb) |psi> = 0`; projecting out |psi>
//! keeps the system homogeneous so the phase rate never appears as an
//! unknown.  Solutions are found as the nullspace of the real-linear
//! constraint map on the trace-orthonormal parameterization of the
//! masked blocks.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    canonical_span_basis, complex_nullspace, containment_residual, cvec_to_real, family_commutes,
    herm_eigen, herm_exp_i, herm_to_params, joint_eigenspaces, params_to_herm, real_nullspace,
    span_orthonormalize, subspace_intersection, subspace_project, unitary_log, CMat, CVec, RMat,
    RVec,
};
use crate::state::{apply_block_op, coarse_grain, Partition, PureState, StateError};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Cap on the real parameter count of one algebra computation.
pub const PARAM_CAP: usize = 4096;

/// Largest element order the discrete verifier resolves; beyond this the
/// order is reported as 0 ("not determined").
pub const MAX_DISCRETE_ORDER: usize = 12;

/// Residual threshold for discrete stabilizer verification.
pub const VERIFY_TOL: f64 = 1e-9;

/// Residual threshold for subspace containment checks.
pub const CONTAINMENT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StabilizerError {
    #[error("parameter count {params} exceeds the cap {cap}")]
    ProblemTooLarge { params: usize, cap: usize },
    #[error("algebras live on different partitions")]
    PartitionMismatch,
    #[error("subset must contain at least {need} blocks, got {got}")]
    SubsetTooSmall { need: usize, got: usize },
    #[error("block index {index} out of range for {n_blocks} blocks")]
    BlockOutOfRange { index: usize, n_blocks: usize },
    #[error("the two subsets share no block")]
    NoSharedBlock,
    #[error("candidate does not stabilize the state (residual {residual:.3e})")]
    NotAStabilizer { residual: f64 },
    #[error("discrete search needs {needed} pattern assignments, budget is {budget}")]
    SearchBudgetExceeded { needed: usize, budget: usize },
    #[error("discrete search supports block dimension <= {cap}, got {dim}")]
    SearchBlockTooLarge { dim: usize, cap: usize },
    #[error("tolerance {0} outside (0, 1e-4)")]
    InvalidTolerance(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Offsets of each block's d_b^2 real parameters inside the full
/// parameter vector of a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub block_dims: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(block_dims.len());
        let mut total = 0;
        for &d in &block_dims {
            offsets.push(total);
            total += d * d;
        }
        ParamLayout { block_dims, offsets, total }
    }

    /// The coordinates of block `b` inside a full parameter vector.
    pub fn block_slice(&self, v: &RVec, b: usize) -> RVec {
        let d = self.block_dims[b];
        RVec::from_fn(d * d, |i, _| v[self.offsets[b] + i])
    }
}

/// One Hermitian generator per partition block.
#[derive(Debug, Clone)]
pub struct LocalHermitianTuple {
    pub blocks: Vec<CMat>,
}

impl LocalHermitianTuple {
    pub fn to_params(&self, layout: &ParamLayout) -> RVec {
        let mut v = RVec::zeros(layout.total);
        for (b, h) in self.blocks.iter().enumerate() {
            let p = herm_to_params(h);
            for i in 0..p.len() {
                v[layout.offsets[b] + i] = p[i];
            }
        }
        v
    }

    pub fn from_params(layout: &ParamLayout, v: &RVec) -> Self {
        let blocks = (0..layout.block_dims.len())
            .map(|b| params_to_herm(&layout.block_slice(v, b), layout.block_dims[b]))
            .collect();
        LocalHermitianTuple { blocks }
    }

    /// Phase rate lambda = <psi| sum_b H_b^emb |psi> for block-major
    /// amplitudes with factor dimensions `cdims`.
    pub fn phase_rate(&self, amps: &CVec, cdims: &[usize]) -> f64 {
        let mut rate = 0.0;
        for (b, h) in self.blocks.iter().enumerate() {
            let w = apply_block_op(amps, cdims, b, h);
            rate += amps.dotc(&w).re;
        }
        rate
    }
}

/// The set of partition blocks allowed to act nontrivially.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMask {
    blocks: Vec<usize>,
}

impl SupportMask {
    pub fn new(mut blocks: Vec<usize>, n_blocks: usize) -> Result<Self, StabilizerError> {
        blocks.sort_unstable();
        blocks.dedup();
        if blocks.is_empty() {
            return Err(StabilizerError::SubsetTooSmall { need: 1, got: 0 });
        }
        if let Some(&bad) = blocks.iter().find(|&&b| b >= n_blocks) {
            return Err(StabilizerError::BlockOutOfRange { index: bad, n_blocks });
        }
        Ok(SupportMask { blocks })
    }

    pub fn full(n_blocks: usize) -> Self {
        SupportMask { blocks: (0..n_blocks).collect() }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn contains(&self, b: usize) -> bool {
        self.blocks.binary_search(&b).is_ok()
    }
}

/// Orthonormal basis of the stabilizer Lie algebra for one support mask,
/// stored in the full parameter space of the partition (coordinates of
/// unmasked blocks are zero).
#[derive(Debug, Clone)]
pub struct StabilizerAlgebra {
    pub partition: Partition,
    pub mask: SupportMask,
    pub layout: ParamLayout,
    pub basis: Vec<RVec>,
    pub dim: usize,
    /// Smallest singular value treated as nonzero in the rank decision.
    pub sv_kept_min: Option<f64>,
    /// Largest singular value treated as zero.
    pub sv_dropped_max: Option<f64>,
}

impl StabilizerAlgebra {
    /// Basis as per-block Hermitian matrices.
    pub fn tuples(&self) -> Vec<LocalHermitianTuple> {
        self.basis
            .iter()
            .map(|v| LocalHermitianTuple::from_params(&self.layout, v))
            .collect()
    }

    /// Restrictions of the basis to one block's coordinates.
    pub fn block_restriction(&self, b: usize) -> Vec<RVec> {
        self.basis.iter().map(|v| self.layout.block_slice(v, b)).collect()
    }

    /// Rank of the restriction of the algebra to one block.
    pub fn block_restriction_dim(&self, b: usize) -> usize {
        span_orthonormalize(&self.block_restriction(b), 1e-9).len()
    }
}

fn check_tol(tol: f64) -> Result<(), StabilizerError> {
    if tol > 0.0 && tol < 1e-4 {
        Ok(())
    } else {
        Err(StabilizerError::InvalidTolerance(tol))
    }
}

/// Computes the stabilizer Lie algebra of `state` for the blocks in
/// `mask`, with relative singular-value threshold `tol`.
pub fn stabilizer_algebra(
    state: &PureState,
    partition: &Partition,
    mask: &SupportMask,
    tol: f64,
) -> Result<StabilizerAlgebra, StabilizerError> {
    check_tol(tol)?;
    let coarse = coarse_grain(state, partition)?;
    let cdims = coarse.dims().to_vec();
    if let Some(&bad) = mask.blocks().iter().find(|&&b| b >= cdims.len()) {
        return Err(StabilizerError::BlockOutOfRange { index: bad, n_blocks: cdims.len() });
    }
    let layout = ParamLayout::new(cdims.clone());
    let masked_params: usize = mask.blocks().iter().map(|&b| cdims[b] * cdims[b]).sum();
    if masked_params > PARAM_CAP {
        return Err(StabilizerError::ProblemTooLarge { params: masked_params, cap: PARAM_CAP });
    }
    let amps = coarse.amps();
    let dim_h = amps.len();

    // Constraint matrix: one column per masked real parameter, rows are
    // the stacked real and imaginary parts of (I - |psi><psi|) H_b |psi>.
    let mut m = RMat::zeros(2 * dim_h, masked_params);
    let mut col = 0;
    for &b in mask.blocks() {
        let d = cdims[b];
        for k in 0..d * d {
            let mut unit = RVec::zeros(d * d);
            unit[k] = 1.0;
            let h = params_to_herm(&unit, d);
            let w = apply_block_op(amps, &cdims, b, &h);
            let overlap = amps.dotc(&w);
            let projected = w - amps * overlap;
            m.set_column(col, &cvec_to_real(&projected));
            col += 1;
        }
    }
    let ns = real_nullspace(&m, tol);
    let canonical = canonical_span_basis(&ns.basis, 1e-6);

    // Zero-pad the masked coordinates into the full parameter space.
    let mut basis = Vec::with_capacity(canonical.len());
    for v in &canonical {
        let mut full = RVec::zeros(layout.total);
        let mut idx = 0;
        for &b in mask.blocks() {
            let d = cdims[b];
            for i in 0..d * d {
                full[layout.offsets[b] + i] = v[idx];
                idx += 1;
            }
        }
        basis.push(full);
    }
    let dim = basis.len();
    Ok(StabilizerAlgebra {
        partition: partition.clone(),
        mask: mask.clone(),
        layout,
        basis,
        dim,
        sv_kept_min: ns.sv_kept_min,
        sv_dropped_max: ns.sv_dropped_max,
    })
}

/// Span of several algebras over the same partition, as an algebra-shaped
/// value whose mask is the union of the input masks.
pub fn subspace_sum(algebras: &[&StabilizerAlgebra]) -> Result<StabilizerAlgebra, StabilizerError> {
    let first = algebras.first().ok_or(StabilizerError::SubsetTooSmall { need: 1, got: 0 })?;
    for a in algebras {
        if a.partition != first.partition || a.layout != first.layout {
            return Err(StabilizerError::PartitionMismatch);
        }
    }
    let stacked: Vec<RVec> = algebras.iter().flat_map(|a| a.basis.iter().cloned()).collect();
    let basis = canonical_span_basis(&span_orthonormalize(&stacked, 1e-9), 1e-6);
    let mut mask_blocks: Vec<usize> = algebras
        .iter()
        .flat_map(|a| a.mask.blocks().iter().copied())
        .collect();
    mask_blocks.sort_unstable();
    mask_blocks.dedup();
    let dim = basis.len();
    Ok(StabilizerAlgebra {
        partition: first.partition.clone(),
        mask: SupportMask { blocks: mask_blocks },
        layout: first.layout.clone(),
        basis,
        dim,
        sv_kept_min: None,
        sv_dropped_max: None,
    })
}

fn validate_subset(
    subset: &[usize],
    n_blocks: usize,
    need: usize,
) -> Result<Vec<usize>, StabilizerError> {
    let mut s: Vec<usize> = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() < need {
        return Err(StabilizerError::SubsetTooSmall { need, got: s.len() });
    }
    if let Some(&bad) = s.iter().find(|&&b| b >= n_blocks) {
        return Err(StabilizerError::BlockOutOfRange { index: bad, n_blocks });
    }
    Ok(s)
}

/// Continuous dimension of the entanglement group of a block subset:
/// dim of the subset's stabilizer algebra minus the dimension of the sum
/// of its remove-one-block subalgebras.
pub fn entanglement_dim(
    state: &PureState,
    partition: &Partition,
    subset: &[usize],
    tol: f64,
) -> Result<usize, StabilizerError> {
    let subset = validate_subset(subset, partition.n_blocks(), 2)?;
    let mask = SupportMask::new(subset.clone(), partition.n_blocks())?;
    let s_subset = stabilizer_algebra(state, partition, &mask, tol)?;
    let mut parts = Vec::new();
    for &drop in &subset {
        let smaller: Vec<usize> = subset.iter().copied().filter(|&b| b != drop).collect();
        let mask = SupportMask::new(smaller, partition.n_blocks())?;
        parts.push(stabilizer_algebra(state, partition, &mask, tol)?);
    }
    let refs: Vec<&StabilizerAlgebra> = parts.iter().collect();
    let sum = subspace_sum(&refs)?;
    Ok(s_subset.dim.saturating_sub(sum.dim))
}

/// Dimension of the full entanglement group: the full-mask stabilizer
/// modulo the product of all single-block stabilizers.
pub fn full_entanglement_dim(
    state: &PureState,
    partition: &Partition,
    tol: f64,
) -> Result<usize, StabilizerError> {
    let n = partition.n_blocks();
    if n < 2 {
        return Err(StabilizerError::SubsetTooSmall { need: 2, got: n });
    }
    let full = stabilizer_algebra(state, partition, &SupportMask::full(n), tol)?;
    let mut singles_total = 0;
    for b in 0..n {
        let mask = SupportMask::new(vec![b], n)?;
        singles_total += stabilizer_algebra(state, partition, &mask, tol)?.dim;
    }
    Ok(full.dim.saturating_sub(singles_total))
}

/// Outcome of the sharing restrictions between two overlapping subsets.
#[derive(Debug, Clone)]
pub struct NoSharingReport {
    /// Componentwise brackets of the two algebras land in the stabilizer
    /// of the shared blocks.
    pub bracket_ok: bool,
    /// The shared-block projection of the shared-mask algebra lies inside
    /// the intersection of the two projections.
    pub projection_ok: bool,
    /// Every element of the projection intersection commutes with the
    /// shared-block projections of both algebras.
    pub center_ok: bool,
    pub shared_blocks: Vec<usize>,
    pub intersection_dim: usize,
    pub max_bracket_residual: f64,
    pub max_center_residual: f64,
}

impl NoSharingReport {
    pub fn passed(&self) -> bool {
        self.bracket_ok && self.projection_ok && self.center_ok
    }
}

/// Restriction of full-space basis vectors to the coordinates of the
/// given blocks, in mask order.
fn restrict_to_blocks(layout: &ParamLayout, basis: &[RVec], blocks: &[usize]) -> Vec<RVec> {
    let total: usize = blocks.iter().map(|&b| layout.block_dims[b] * layout.block_dims[b]).sum();
    basis
        .iter()
        .map(|v| {
            let mut r = RVec::zeros(total);
            let mut idx = 0;
            for &b in blocks {
                let d = layout.block_dims[b];
                for i in 0..d * d {
                    r[idx] = v[layout.offsets[b] + i];
                    idx += 1;
                }
            }
            r
        })
        .collect()
}

/// Splits a shared-coordinate vector back into per-block Hermitians.
fn shared_vec_to_mats(layout: &ParamLayout, blocks: &[usize], v: &RVec) -> Vec<CMat> {
    let mut mats = Vec::new();
    let mut idx = 0;
    for &b in blocks {
        let d = layout.block_dims[b];
        let mut p = RVec::zeros(d * d);
        for i in 0..d * d {
            p[i] = v[idx];
            idx += 1;
        }
        mats.push(params_to_herm(&p, d));
    }
    mats
}

/// Checks the restrictions on entanglement shared between two subsets:
/// brackets of the two stabilizer algebras must stabilize the shared
/// blocks alone, and transformations realizable through both subsets must
/// centralize the shared-block action of each.
pub fn check_no_sharing(
    state: &PureState,
    partition: &Partition,
    pair1: &[usize],
    pair2: &[usize],
    tol: f64,
) -> Result<NoSharingReport, StabilizerError> {
    let n = partition.n_blocks();
    let p1 = validate_subset(pair1, n, 1)?;
    let p2 = validate_subset(pair2, n, 1)?;
    let shared: Vec<usize> = p1.iter().copied().filter(|b| p2.contains(b)).collect();
    if shared.is_empty() {
        return Err(StabilizerError::NoSharedBlock);
    }
    let s1 = stabilizer_algebra(state, partition, &SupportMask::new(p1.clone(), n)?, tol)?;
    let s2 = stabilizer_algebra(state, partition, &SupportMask::new(p2.clone(), n)?, tol)?;
    let s_shared = stabilizer_algebra(state, partition, &SupportMask::new(shared.clone(), n)?, tol)?;
    let layout = s1.layout.clone();

    // (i) componentwise brackets i[h_b, k_b] vanish off the shared blocks
    // by support, and must lie in the shared-mask stabilizer algebra.
    let t1 = s1.tuples();
    let t2 = s2.tuples();
    let mut max_bracket_residual = 0.0f64;
    for h in &t1 {
        for k in &t2 {
            let blocks: Vec<CMat> = h
                .blocks
                .iter()
                .zip(&k.blocks)
                .map(|(hb, kb)| (hb * kb - kb * hb) * Complex64::new(0.0, 1.0))
                .collect();
            let tuple = LocalHermitianTuple { blocks };
            let params = tuple.to_params(&layout);
            let norm = params.norm();
            let resid = containment_residual(&s_shared.basis, &params) / (1.0 + norm);
            max_bracket_residual = max_bracket_residual.max(resid);
        }
    }
    let bracket_ok = max_bracket_residual < CONTAINMENT_TOL;

    // (ii) intersection of the shared-block projections of the two
    // algebras, compared against the projection of the shared algebra.
    let r1 = span_orthonormalize(&restrict_to_blocks(&layout, &s1.basis, &shared), 1e-9);
    let r2 = span_orthonormalize(&restrict_to_blocks(&layout, &s2.basis, &shared), 1e-9);
    let ambient: usize = shared.iter().map(|&b| layout.block_dims[b] * layout.block_dims[b]).sum();
    let inter = subspace_intersection(&r1, &r2, ambient, 1e-8);
    let r_shared = restrict_to_blocks(&layout, &s_shared.basis, &shared);
    let projection_ok = r_shared
        .iter()
        .all(|v| containment_residual(&inter, v) < CONTAINMENT_TOL * (1.0 + v.norm()));

    // (iii) center check: intersection elements commute blockwise with
    // both projected algebras.
    let mut max_center_residual = 0.0f64;
    for z in &inter {
        let z_mats = shared_vec_to_mats(&layout, &shared, z);
        for basis in [&r1, &r2] {
            for v in basis.iter() {
                let v_mats = shared_vec_to_mats(&layout, &shared, v);
                for (zm, vm) in z_mats.iter().zip(&v_mats) {
                    let comm = zm * vm - vm * zm;
                    let scale = 1.0 + zm.norm() * vm.norm();
                    max_center_residual = max_center_residual.max(comm.norm() / scale);
                }
            }
        }
    }
    let center_ok = max_center_residual < CONTAINMENT_TOL;

    Ok(NoSharingReport {
        bracket_ok,
        projection_ok,
        center_ok,
        shared_blocks: shared,
        intersection_dim: inter.len(),
        max_bracket_residual,
        max_center_residual,
    })
}

/// Dimension gains of a pair algebra over the one-block algebras, seen
/// through the parameter restriction to each block.  The two numbers are
/// equal because pair entanglement acts isomorphically on both blocks.
pub fn isomorphism_dims(
    state: &PureState,
    partition: &Partition,
    block_a: usize,
    block_b: usize,
    tol: f64,
) -> Result<(usize, usize), StabilizerError> {
    let n = partition.n_blocks();
    let s_ab = stabilizer_algebra(state, partition, &SupportMask::new(vec![block_a, block_b], n)?, tol)?;
    let s_a = stabilizer_algebra(state, partition, &SupportMask::new(vec![block_a], n)?, tol)?;
    let s_b = stabilizer_algebra(state, partition, &SupportMask::new(vec![block_b], n)?, tol)?;
    let gain_a = s_ab.block_restriction_dim(block_a) - s_a.block_restriction_dim(block_a);
    let gain_b = s_ab.block_restriction_dim(block_b) - s_b.block_restriction_dim(block_b);
    Ok((gain_a, gain_b))
}

/// Verdict on membership in the identity component of the stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentCertificate {
    /// Exhibited as the exponential of a stabilizer-algebra element,
    /// up to per-block phases.
    Inside,
    /// Permutes the joint eigenspaces of the (commuting) per-block
    /// algebra action, which no identity-component element can do.
    Outside,
    /// Neither certificate applies; membership undecided.
    Unknown,
}

/// A verified non-infinitesimal stabilizer element.
#[derive(Debug, Clone)]
pub struct DiscreteStabilizer {
    pub blocks: Vec<CMat>,
    /// Global phase theta in [0, 2pi) with g|psi> = e^{i theta}|psi>.
    pub phase: f64,
    /// Smallest m <= 12 with g^m proportional to the identity on every
    /// block; 0 when none is found.
    pub order: usize,
    /// Conjugation by g maps the full-mask stabilizer algebra onto itself.
    pub normalizes_algebra: bool,
    pub certificate: ComponentCertificate,
}

fn proportional_to_identity(u: &CMat) -> Option<Complex64> {
    let d = u.nrows();
    let c = u.trace() / Complex64::new(d as f64, 0.0);
    let dev = (u - CMat::identity(d, d) * c).norm();
    if dev < 1e-8 * (d as f64).sqrt() && (c.norm() - 1.0).abs() < 1e-6 {
        Some(c)
    } else {
        None
    }
}

fn tuple_order(blocks: &[CMat]) -> usize {
    let mut powers: Vec<CMat> = blocks.to_vec();
    for m in 1..=MAX_DISCRETE_ORDER {
        if m > 1 {
            for (p, g) in powers.iter_mut().zip(blocks) {
                *p = &*p * g;
            }
        }
        if powers.iter().all(|p| proportional_to_identity(p).is_some()) {
            return m;
        }
    }
    0
}

/// Per-block families of the algebra basis, for eigenspace analysis.
fn block_families(algebra: &StabilizerAlgebra) -> Vec<Vec<CMat>> {
    let tuples = algebra.tuples();
    (0..algebra.layout.block_dims.len())
        .map(|b| tuples.iter().map(|t| t.blocks[b].clone()).collect())
        .collect()
}

fn normalizes(algebra: &StabilizerAlgebra, blocks: &[CMat]) -> bool {
    for tuple in algebra.tuples() {
        let conj: Vec<CMat> = tuple
            .blocks
            .iter()
            .zip(blocks)
            .map(|(h, g)| g * h * g.adjoint())
            .collect();
        let params = LocalHermitianTuple { blocks: conj }.to_params(&algebra.layout);
        if containment_residual(&algebra.basis, &params) > CONTAINMENT_TOL * (1.0 + params.norm()) {
            return false;
        }
    }
    true
}

fn certificate_outside(families: &[Vec<CMat>], blocks: &[CMat]) -> bool {
    // Sound only when every per-block family commutes: then each
    // identity-component element preserves every joint eigenspace.
    if !families.iter().all(|f| family_commutes(f, 1e-8)) {
        return false;
    }
    for (family, g) in families.iter().zip(blocks) {
        for space in joint_eigenspaces(family, 1e-8) {
            let moved = g * &space;
            let back = &space * (space.adjoint() * &moved);
            if (&moved - back).norm() > 1e-7 {
                return true;
            }
        }
    }
    false
}

fn certificate_inside(algebra: &StabilizerAlgebra, blocks: &[CMat]) -> bool {
    // Principal log per block, projected onto the algebra; success means
    // g is exhibited as exp(i h) times per-block phases, all of which lie
    // in the identity component (each block carries a phase direction).
    let mut logs = Vec::with_capacity(blocks.len());
    for g in blocks {
        match unitary_log(g, 1e-8) {
            Some(h) => logs.push(h),
            None => return false,
        }
    }
    let tuple = LocalHermitianTuple { blocks: logs };
    let params = tuple.to_params(&algebra.layout);
    let projected = subspace_project(&algebra.basis, &params);
    let back = LocalHermitianTuple::from_params(&algebra.layout, &projected);
    for (g, h) in blocks.iter().zip(&back.blocks) {
        let u = herm_exp_i(h);
        let d = g.nrows();
        let c = (u.adjoint() * g).trace() / Complex64::new(d as f64, 0.0);
        if (c.norm() - 1.0).abs() > 1e-6 {
            return false;
        }
        if (g - u * c).norm() > 1e-8 * (d as f64).sqrt() {
            return false;
        }
    }
    true
}

/// Verifies a candidate local-unitary tuple as a stabilizer of the state
/// and reports its phase, order, normalizer action, and an identity-
/// component certificate.
pub fn verify_discrete(
    state: &PureState,
    partition: &Partition,
    candidate: &[CMat],
) -> Result<DiscreteStabilizer, StabilizerError> {
    let moved = crate::state::apply_local(state, partition, candidate)?;
    let overlap = state.overlap(&moved);
    let phase = overlap.arg().rem_euclid(2.0 * std::f64::consts::PI);
    let expected = state.amps() * Complex64::from_polar(1.0, phase);
    let residual = (moved.amps() - expected).norm();
    if residual > VERIFY_TOL {
        return Err(StabilizerError::NotAStabilizer { residual });
    }
    let order = tuple_order(candidate);
    let algebra = stabilizer_algebra(
        state,
        partition,
        &SupportMask::full(partition.n_blocks()),
        DEFAULT_TOL,
    )?;
    let normalizes_algebra = normalizes(&algebra, candidate);
    let families = block_families(&algebra);
    let certificate = if certificate_outside(&families, candidate) {
        ComponentCertificate::Outside
    } else if certificate_inside(&algebra, candidate) {
        ComponentCertificate::Inside
    } else {
        ComponentCertificate::Unknown
    };
    Ok(DiscreteStabilizer {
        blocks: candidate.to_vec(),
        phase,
        order,
        normalizes_algebra,
        certificate,
    })
}

/// Budget and tolerances for the discrete search.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Cap on the total number of pattern assignments examined.
    pub max_assignments: usize,
    /// Relative singular-value threshold for the per-assignment solves.
    pub tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { max_assignments: 20_000, tol: DEFAULT_TOL }
    }
}

const SEARCH_DIM_CAP: usize = 4;

fn permutations(d: usize) -> Vec<Vec<usize>> {
    // Lexicographic order for determinism.
    if d == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for first in 0..d {
        let rest: Vec<usize> = (0..d).filter(|&x| x != first).collect();
        for sub in permutations(d - 1) {
            let mut p = vec![first];
            p.extend(sub.into_iter().map(|i| rest[i]));
            out.push(p);
        }
    }
    out
}

fn perm_matrix(p: &[usize]) -> CMat {
    let d = p.len();
    let mut m = CMat::zeros(d, d);
    for (col, &row) in p.iter().enumerate() {
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    m
}

fn tuples_equivalent(a: &[CMat], b: &[CMat]) -> bool {
    for (x, y) in a.iter().zip(b) {
        let d = x.nrows();
        let c = (x.adjoint() * y).trace() / Complex64::new(d as f64, 0.0);
        if (c.norm() - 1.0).abs() > 1e-4 {
            return false;
        }
        if (y - x * c).norm() > 1e-6 * (d as f64).sqrt() {
            return false;
        }
    }
    true
}

fn same_component(families: &[Vec<CMat>], a: &[CMat], b: &[CMat]) -> bool {
    if tuples_equivalent(a, b) {
        return true;
    }
    // Quotient test: a and b share a component exactly when b a^{-1} lies
    // in the identity component.  An eigenspace-moving quotient proves the
    // components differ; anything else is merged as a duplicate, so the
    // search reports one representative per component it can distinguish.
    if !families.iter().all(|f| family_commutes(f, 1e-8)) {
        return false;
    }
    let quotient: Vec<CMat> = b.iter().zip(a).map(|(y, x)| y * x.adjoint()).collect();
    !certificate_outside(families, &quotient)
}

/// Hybrid search for stabilizers outside the identity component: assign a
/// permutation pattern to every block but one (in the eigenbasis of the
/// per-block algebra action, so the scan is insensitive to local basis
/// changes), solve the linear system for the remaining block, and keep
/// the verified solutions whose certificate is `Outside`.  Results are
/// deduplicated per component: candidates whose quotient cannot be
/// certified outside collapse to one representative.  Finds every
/// monomial-patterned element but is not exhaustive over unitary tuples.
pub fn search_discrete(
    state: &PureState,
    partition: &Partition,
    options: &SearchOptions,
) -> Result<Vec<DiscreteStabilizer>, StabilizerError> {
    check_tol(options.tol)?;
    let coarse = coarse_grain(state, partition)?;
    let cdims = coarse.dims().to_vec();
    let n = cdims.len();
    if let Some(&d) = cdims.iter().find(|&&d| d > SEARCH_DIM_CAP) {
        return Err(StabilizerError::SearchBlockTooLarge { dim: d, cap: SEARCH_DIM_CAP });
    }

    let algebra = stabilizer_algebra(state, partition, &SupportMask::full(n), options.tol)?;
    let families = block_families(&algebra);

    // Precondition: rotate each block into the joint eigenbasis of its
    // algebra action when that action commutes.  Permutation patterns in
    // this basis are intrinsic to the state, not to how it was presented.
    let mut basis_w: Vec<CMat> = Vec::with_capacity(n);
    for (b, family) in families.iter().enumerate() {
        let d = cdims[b];
        if family_commutes(family, 1e-8) {
            let spaces = joint_eigenspaces(family, 1e-8);
            let mut w = CMat::zeros(d, d);
            let mut col = 0;
            for s in &spaces {
                for c in 0..s.ncols() {
                    w.set_column(col, &s.column(c).into_owned());
                    col += 1;
                }
            }
            basis_w.push(w);
        } else {
            basis_w.push(CMat::identity(d, d));
        }
    }
    let mut rotated = coarse.amps().clone();
    for b in 0..n {
        rotated = apply_block_op(&rotated, &cdims, b, &basis_w[b].adjoint());
    }

    // Budget check before scanning.
    let perms_per_dim: Vec<Vec<Vec<usize>>> = (0..=SEARCH_DIM_CAP).map(permutations).collect();
    let mut needed = 0usize;
    for f in 0..n {
        let mut count = 1usize;
        for (b, &d) in cdims.iter().enumerate() {
            if b != f {
                count = count.saturating_mul(perms_per_dim[d].len());
            }
        }
        needed = needed.saturating_add(count);
    }
    if needed > options.max_assignments {
        return Err(StabilizerError::SearchBudgetExceeded {
            needed,
            budget: options.max_assignments,
        });
    }

    let mut found: Vec<DiscreteStabilizer> = Vec::new();
    for free in 0..n {
        let others: Vec<usize> = (0..n).filter(|&b| b != free).collect();
        let radix: Vec<usize> = others.iter().map(|&b| perms_per_dim[cdims[b]].len()).collect();
        let total: usize = radix.iter().product();
        for code in 0..total {
            // Decode the assignment (mixed radix, most significant first).
            let mut rem = code;
            let mut assignment = Vec::with_capacity(others.len());
            for &r in radix.iter().rev() {
                assignment.push(rem % r);
                rem /= r;
            }
            assignment.reverse();

            // Apply the fixed permutation blocks to the rotated state.
            let mut phi = rotated.clone();
            for (pos, &b) in others.iter().enumerate() {
                let p = &perms_per_dim[cdims[b]][assignment[pos]];
                phi = apply_block_op(&phi, &cdims, b, &perm_matrix(p));
            }

            // Solve  u_free (phi) = lambda psi'  for vec(u_free), lambda.
            let d = cdims[free];
            let dim_h = rotated.len();
            let mut m = CMat::zeros(dim_h, d * d + 1);
            for i in 0..d {
                for j in 0..d {
                    let mut e = CMat::zeros(d, d);
                    e[(i, j)] = Complex64::new(1.0, 0.0);
                    let v = apply_block_op(&phi, &cdims, free, &e);
                    m.set_column(i * d + j, &v);
                }
            }
            m.set_column(d * d, &(-rotated.clone()));
            for null in complex_nullspace(&m, 1e-9) {
                let lambda = null[d * d];
                if lambda.norm() < 1e-8 * null.norm() {
                    continue;
                }
                let mut u = CMat::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        u[(i, j)] = null[i * d + j] / lambda;
                    }
                }
                let gram = u.adjoint() * &u;
                if (&gram - CMat::identity(d, d)).norm() > 1e-6 * (d as f64) {
                    continue;
                }
                // Polar correction tightens an approximately unitary solve.
                let (vals, vecs) = herm_eigen(&gram);
                if vals.iter().any(|&l| l < 1e-12) {
                    continue;
                }
                let mut inv_sqrt = CMat::zeros(d, d);
                for k in 0..d {
                    inv_sqrt[(k, k)] = Complex64::new(1.0 / vals[k].sqrt(), 0.0);
                }
                let u = &u * &vecs * inv_sqrt * vecs.adjoint();

                // Assemble the candidate in the original basis.
                let mut blocks = Vec::with_capacity(n);
                for b in 0..n {
                    let m_b = if b == free {
                        u.clone()
                    } else {
                        let pos = others.iter().position(|&x| x == b).unwrap();
                        perm_matrix(&perms_per_dim[cdims[b]][assignment[pos]])
                    };
                    blocks.push(&basis_w[b] * m_b * basis_w[b].adjoint());
                }
                if let Ok(ds) = verify_discrete(state, partition, &blocks) {
                    if ds.certificate == ComponentCertificate::Outside
                        && !found.iter().any(|f| same_component(&families, &f.blocks, &ds.blocks))
                    {
                        found.push(ds);
                    }
                }
            }
        }
    }
    Ok(found)
}
