//! The operator algebra generated by all reduced density matrices of a
//! pure state, and its centralizer inside block-local Hermitian tuples.
//!
//! Every embedded reduced density matrix commutes with the stabilizer
//! algebra's summed generators, so the stabilizer algebra always sits
//! inside the local centralizer of the bracket closure.  Whether the two
//! coincide is measured and reported, never assumed.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{
    canonical_span_basis, containment_residual, herm_to_params, params_to_herm,
    real_nullspace_from_gram, span_orthonormalize, CMat, RMat, RVec,
};
use crate::stabilizer::{
    stabilizer_algebra, ParamLayout, StabilizerAlgebra, StabilizerError, SupportMask, DEFAULT_TOL,
};
use crate::state::{coarse_perm, reduced_density, Partition, PureState, StateError};

/// Largest total Hilbert dimension the generator construction accepts.
pub const MAX_TOTAL_DIM: usize = 256;

/// Relative rank tolerance used by the closure sweeps.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DmError {
    #[error("total dimension {dim} exceeds the cap {cap}")]
    ProblemTooLarge { dim: usize, cap: usize },
    #[error("bracket closure reached dimension {dim}, above the budget {max}")]
    MaxDimExceeded { dim: usize, max: usize },
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// A real span of Hermitian operators on the full Hilbert space, with a
/// trace-orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorSpan {
    pub dim_h: usize,
    pub basis: Vec<CMat>,
    /// Whether every pairwise bracket i[A,B] lies back in the span.
    pub closed_under_bracket: bool,
}

impl OperatorSpan {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn bracket(a: &CMat, b: &CMat) -> CMat {
    (a * b - b * a) * Complex64::new(0.0, 1.0)
}

fn span_from_mats(dim_h: usize, mats: &[CMat]) -> Vec<CMat> {
    let params: Vec<RVec> = mats.iter().map(herm_to_params).collect();
    canonical_span_basis(&span_orthonormalize(&params, CLOSURE_TOL), 1e-6)
        .iter()
        .map(|p| params_to_herm(p, dim_h))
        .collect()
}

fn brackets_close(basis: &[CMat]) -> bool {
    let params: Vec<RVec> = basis.iter().map(herm_to_params).collect();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let br = bracket(&basis[i], &basis[j]);
            let p = herm_to_params(&br);
            if containment_residual(&params, &p) > 1e-8 * (1.0 + p.norm()) {
                return false;
            }
        }
    }
    true
}

/// Embeds an operator on a factor subset into the full space (identity on
/// the complement).  `subset` is sorted ascending; `op` is indexed by the
/// row-major product of the subset dimensions.
fn embed_subset_op(dims: &[usize], subset: &[usize], op: &CMat) -> CMat {
    let d: usize = dims.iter().product();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let sub_index = |full: usize| -> (usize, usize) {
        // Splits a full index into (subset part, complement part).
        let mut inside = 0usize;
        let mut outside = 0usize;
        for (f, (&dim, &stride)) in dims.iter().zip(&strides).enumerate() {
            let digit = (full / stride) % dim;
            if subset.binary_search(&f).is_ok() {
                inside = inside * dim + digit;
            } else {
                outside = outside * dim + digit;
            }
        }
        (inside, outside)
    };
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        let (si, oi) = sub_index(i);
        for j in 0..d {
            let (sj, oj) = sub_index(j);
            if oi == oj {
                out[(i, j)] = op[(si, sj)];
            }
        }
    }
    out
}

/// Span of the embedded reduced density matrices of every nonempty factor
/// subset, including the full pure-state projector.
pub fn dm_generators(state: &PureState) -> Result<OperatorSpan, DmError> {
    let d = state.dim();
    if d > MAX_TOTAL_DIM {
        return Err(DmError::ProblemTooLarge { dim: d, cap: MAX_TOTAL_DIM });
    }
    let n = state.n_factors();
    let mut mats = Vec::new();
    for bits in 1..(1usize << n) {
        let subset: Vec<usize> = (0..n).filter(|b| bits >> b & 1 == 1).collect();
        let rho = reduced_density(state, &subset)?;
        mats.push(embed_subset_op(state.dims(), &subset, &rho));
    }
    let basis = span_from_mats(d, &mats);
    let closed = brackets_close(&basis);
    Ok(OperatorSpan { dim_h: d, basis, closed_under_bracket: closed })
}

/// Iterated bracket closure: append i[A,B] for all basis pairs and
/// re-orthonormalize until the dimension stops growing.
pub fn lie_closure(gen: &OperatorSpan, max_dim: usize) -> Result<OperatorSpan, DmError> {
    let mut basis = gen.basis.clone();
    loop {
        let mut mats = basis.clone();
        for i in 0..basis.len() {
            for j in (i + 1)..basis.len() {
                mats.push(bracket(&basis[i], &basis[j]));
            }
        }
        let next = span_from_mats(gen.dim_h, &mats);
        if next.len() > max_dim {
            return Err(DmError::MaxDimExceeded { dim: next.len(), max: max_dim });
        }
        if next.len() == basis.len() {
            let span = OperatorSpan { dim_h: gen.dim_h, basis: next, closed_under_bracket: true };
            debug_assert!(brackets_close(&span.basis));
            return Ok(span);
        }
        basis = next;
    }
}

/// Permutes an operator from elementary factor order into the coarse
/// (block-major) index order of a partition.
fn to_coarse_order(
    op: &CMat,
    dims: &[usize],
    partition: &Partition,
) -> Result<CMat, StateError> {
    // map[new_flat] = old_flat, so conjugation is a pure index gather.
    let map = coarse_perm(dims, partition)?;
    let d = map.len();
    Ok(CMat::from_fn(d, d, |i, j| op[(map[i], map[j])]))
}

/// Block-local Hermitian tuples whose embedded sum commutes with every
/// element of the algebra, as a stabilizer-algebra-shaped span.
pub fn centralizer_in_local(
    algebra: &OperatorSpan,
    state: &PureState,
    partition: &Partition,
) -> Result<StabilizerAlgebra, DmError> {
    let dims = state.dims();
    let block_dims = partition.block_dims(dims);
    let layout = ParamLayout::new(block_dims.clone());

    // Pre-permute the algebra into coarse order once.
    let coarse_algebra: Vec<CMat> = algebra
        .basis
        .iter()
        .map(|a| to_coarse_order(a, dims, partition))
        .collect::<Result<_, _>>()?;

    // Accumulate the Gram matrix of the constraint map column by column:
    // column p holds the stacked commutators [H_p^emb, A_k] over all k.
    let total = layout.total;
    let mut columns: Vec<Vec<CMat>> = Vec::with_capacity(total);
    for (b, &db) in block_dims.iter().enumerate() {
        let pre: usize = block_dims[..b].iter().product();
        let post: usize = block_dims[b + 1..].iter().product();
        let id_pre = CMat::identity(pre, pre);
        let id_post = CMat::identity(post, post);
        for k in 0..db * db {
            let mut unit = RVec::zeros(db * db);
            unit[k] = 1.0;
            let h = params_to_herm(&unit, db);
            let h_emb = id_pre.kronecker(&h).kronecker(&id_post);
            let comms: Vec<CMat> =
                coarse_algebra.iter().map(|a| &h_emb * a - a * &h_emb).collect();
            columns.push(comms);
        }
    }
    let mut gram = RMat::zeros(total, total);
    for i in 0..total {
        for j in i..total {
            let mut ip = 0.0;
            for (ci, cj) in columns[i].iter().zip(&columns[j]) {
                // Inner product of stacked complex entries: Re tr(Ci† Cj).
                ip += ci.iter().zip(cj.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
            }
            gram[(i, j)] = ip;
            gram[(j, i)] = ip;
        }
    }
    drop(columns);
    let ns = real_nullspace_from_gram(gram, CLOSURE_TOL);
    let basis = canonical_span_basis(&ns.basis, 1e-6);
    let dim = basis.len();
    Ok(StabilizerAlgebra {
        partition: partition.clone(),
        mask: SupportMask::full(partition.n_blocks()),
        layout,
        basis,
        dim,
        sv_kept_min: ns.sv_kept_min,
        sv_dropped_max: ns.sv_dropped_max,
    })
}

/// Comparison of the density-matrix-algebra centralizer with the
/// stabilizer algebra.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CentralizerReport {
    pub generator_dim: usize,
    pub closure_dim: usize,
    pub closure_closed: bool,
    pub centralizer_dim: usize,
    pub stabilizer_dim: usize,
    pub stabilizer_in_centralizer: bool,
    pub centralizer_in_stabilizer: bool,
    pub equal: bool,
    /// Largest commutator norm between a stabilizer generator's embedded
    /// sum and an algebra element.
    pub max_commutation_residual: f64,
}

/// Runs the full pipeline: generators, bracket closure, local
/// centralizer, and the comparison with the stabilizer algebra.
pub fn dm_report(state: &PureState, partition: &Partition) -> Result<CentralizerReport, DmError> {
    let gen = dm_generators(state)?;
    let d = state.dim();
    let closure = lie_closure(&gen, d * d)?;
    let centralizer = centralizer_in_local(&closure, state, partition)?;
    let stab = stabilizer_algebra(
        state,
        partition,
        &SupportMask::full(partition.n_blocks()),
        DEFAULT_TOL,
    )?;

    let stabilizer_in_centralizer = stab
        .basis
        .iter()
        .all(|v| containment_residual(&centralizer.basis, v) < 1e-8 * (1.0 + v.norm()));
    let centralizer_in_stabilizer = centralizer
        .basis
        .iter()
        .all(|v| containment_residual(&stab.basis, v) < 1e-8 * (1.0 + v.norm()));

    // Direct commutation check between stabilizer generators and the
    // algebra, in coarse order.
    let dims = state.dims();
    let block_dims = partition.block_dims(dims);
    let coarse_algebra: Vec<CMat> = closure
        .basis
        .iter()
        .map(|a| to_coarse_order(a, dims, partition))
        .collect::<Result<_, _>>()?;
    let mut max_comm = 0.0f64;
    for tuple in stab.tuples() {
        let mut summed = CMat::zeros(d, d);
        for (b, h) in tuple.blocks.iter().enumerate() {
            let pre: usize = block_dims[..b].iter().product();
            let post: usize = block_dims[b + 1..].iter().product();
            summed += CMat::identity(pre, pre).kronecker(h).kronecker(&CMat::identity(post, post));
        }
        for a in &coarse_algebra {
            let c = &summed * a - a * &summed;
            max_comm = max_comm.max(c.norm() / (1.0 + summed.norm() * a.norm()));
        }
    }

    Ok(CentralizerReport {
        generator_dim: gen.dim(),
        closure_dim: closure.dim(),
        closure_closed: closure.closed_under_bracket,
        centralizer_dim: centralizer.dim,
        stabilizer_dim: stab.dim,
        stabilizer_in_centralizer,
        centralizer_in_stabilizer,
        equal: stabilizer_in_centralizer
            && centralizer_in_stabilizer
            && centralizer.dim == stab.dim,
        max_commutation_residual: max_comm,
    })
}
