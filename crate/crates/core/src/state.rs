//! Pure states on tensor-product Hilbert spaces: index arithmetic,
//! partitions into blocks, local operator application, reduced densities,
//! a small gate library, named example states, and state-file I/O.
//!
//! Amplitude indexing is row-major with factor 1 most significant:
//! `index(i_1..i_N) = ((i_1 d_2 + i_2) d_3 + i_3) ...`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{CMat, CVec};

/// Largest supported dimension for a single tensor factor.
pub const MAX_FACTOR_DIM: usize = 64;

/// Inputs farther than this from unit norm are rejected unless the caller
/// explicitly asks for normalization.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("amplitude vector is zero (or numerically indistinguishable from zero)")]
    ZeroVector,
    #[error("amplitude length {got} does not match product of dims {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("factor dimension {0} out of range (each factor must have dimension 2..={MAX_FACTOR_DIM})")]
    InvalidFactorDim(usize),
    #[error("unknown state name {0:?}")]
    UnknownName(String),
    #[error("state {name:?} requires parameter {param:?}")]
    MissingParam { name: String, param: String },
    #[error("parameters give norm {norm} which is farther than {NORM_DRIFT_TOL} from 1")]
    NotNormalizable { norm: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("block {block} operator is not unitary (deviation {deviation:.3e})")]
    NonUnitary { block: usize, deviation: f64 },
    #[error("subset of factors is empty")]
    EmptySubset,
    #[error("state file is malformed: {0}")]
    BadStateFile(String),
}

/// A unit-norm pure state on a tensor product of finite factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: CVec,
}

impl PureState {
    /// Builds a state, validating shapes and the unit-norm invariant.
    /// With `normalize` set, any nonzero vector is rescaled; otherwise the
    /// input norm must already be within `NORM_DRIFT_TOL` of 1 (it is then
    /// rescaled exactly so downstream code can rely on unit norm).
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>, normalize: bool) -> Result<Self, StateError> {
        if dims.is_empty() {
            return Err(StateError::InvalidFactorDim(0));
        }
        for &d in &dims {
            if d < 2 || d > MAX_FACTOR_DIM {
                return Err(StateError::InvalidFactorDim(d));
            }
        }
        let expected: usize = dims.iter().product();
        if amps.len() != expected {
            return Err(StateError::DimensionMismatch { expected, got: amps.len() });
        }
        let mut v = CVec::from_vec(amps);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(StateError::ZeroVector);
        }
        if !normalize && (norm - 1.0).abs() > NORM_DRIFT_TOL {
            return Err(StateError::NotNormalizable { norm });
        }
        v /= Complex64::new(norm, 0.0);
        Ok(PureState { dims, amps: v })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }
}

impl serde::Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = ser.serialize_struct("PureState", 3)?;
        let re: Vec<f64> = self.amps.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.amps.iter().map(|c| c.im).collect();
        s.serialize_field("amps_im", &im)?;
        s.serialize_field("amps_re", &re)?;
        s.serialize_field("dims", &self.dims)?;
        s.end()
    }
}

/// Flat index of a basis tuple, factor 1 most significant.
pub fn index_of(dims: &[usize], tuple: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), tuple.len());
    let mut idx = 0;
    for (d, t) in dims.iter().zip(tuple) {
        debug_assert!(t < d);
        idx = idx * d + t;
    }
    idx
}

/// Basis tuple of a flat index, inverse of [`index_of`].
pub fn tuple_of(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut tuple = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        tuple[k] = index % dims[k];
        index /= dims[k];
    }
    tuple
}

/// A partition of the tensor factors into disjoint blocks covering all of
/// them.  Stored canonically: indices ascending within each block, blocks
/// ordered by smallest element.  Factor indices are 0-based internally;
/// the text form ("1,2|3") is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    n_factors: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, n_factors: usize) -> Result<Self, StateError> {
        let mut seen = vec![false; n_factors];
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for mut b in blocks {
            if b.is_empty() {
                return Err(StateError::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
            for &i in &b {
                if i >= n_factors {
                    return Err(StateError::InvalidPartition(format!(
                        "factor index {} out of range 1..={}",
                        i + 1,
                        n_factors
                    )));
                }
                if seen[i] {
                    return Err(StateError::InvalidPartition(format!(
                        "factor {} appears in more than one block",
                        i + 1
                    )));
                }
                seen[i] = true;
            }
            canon.push(b);
        }
        if seen.iter().any(|&s| !s) {
            return Err(StateError::InvalidPartition("blocks do not cover all factors".into()));
        }
        canon.sort_by_key(|b| b[0]);
        Ok(Partition { blocks: canon, n_factors })
    }

    /// One block per factor.
    pub fn singletons(n_factors: usize) -> Self {
        Partition {
            blocks: (0..n_factors).map(|i| vec![i]).collect(),
            n_factors,
        }
    }

    /// A single block holding every factor.
    pub fn full(n_factors: usize) -> Self {
        Partition { blocks: vec![(0..n_factors).collect()], n_factors }
    }

    /// Parses the 1-based "1,2|3" syntax.
    pub fn parse(text: &str, n_factors: usize) -> Result<Self, StateError> {
        let mut blocks = Vec::new();
        for part in text.split('|') {
            let mut block = Vec::new();
            for item in part.split(',') {
                let item = item.trim();
                let idx: usize = item
                    .parse()
                    .map_err(|_| StateError::InvalidPartition(format!("bad factor index {item:?}")))?;
                if idx == 0 {
                    return Err(StateError::InvalidPartition("factor indices are 1-based".into()));
                }
                block.push(idx - 1);
            }
            blocks.push(block);
        }
        Partition::new(blocks, n_factors)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_factors(&self) -> usize {
        self.n_factors
    }

    /// Dimension of each block: product of its member factor dimensions.
    pub fn block_dims(&self, dims: &[usize]) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| dims[i]).product())
            .collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            for (j, &i) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", i + 1)?;
            }
        }
        Ok(())
    }
}

/// Permutation carrying a state's amplitudes to block-major order:
/// `result[new_index] = old_index`.
pub fn coarse_perm(dims: &[usize], partition: &Partition) -> Result<Vec<usize>, StateError> {
    if partition.n_factors() != dims.len() {
        return Err(StateError::InvalidPartition(format!(
            "partition is over {} factors but the state has {}",
            partition.n_factors(),
            dims.len()
        )));
    }
    // New factor order: blocks in partition order, ascending within blocks.
    let order: Vec<usize> = partition.blocks.iter().flatten().copied().collect();
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let total: usize = dims.iter().product();
    let mut perm = vec![0usize; total];
    for (new_idx, slot) in perm.iter_mut().enumerate() {
        let new_tuple = tuple_of(&new_dims, new_idx);
        let mut old_tuple = vec![0usize; dims.len()];
        for (pos, &factor) in order.iter().enumerate() {
            old_tuple[factor] = new_tuple[pos];
        }
        *slot = index_of(dims, &old_tuple);
    }
    Ok(perm)
}

/// Merges the factors of each block into a single factor, permuting the
/// amplitudes to block-major order.  The result has one dimension per
/// block; entanglement data across blocks is unchanged.
pub fn coarse_grain(state: &PureState, partition: &Partition) -> Result<PureState, StateError> {
    let perm = coarse_perm(state.dims(), partition)?;
    let amps: Vec<Complex64> = perm.iter().map(|&old| state.amps[old]).collect();
    let dims = partition.block_dims(state.dims());
    // Block dims can hit 1 only if factor dims could, which construction
    // forbids; products of dims >= 2 stay in range only up to the guard.
    for &d in &dims {
        if d > MAX_FACTOR_DIM {
            return Err(StateError::InvalidFactorDim(d));
        }
    }
    PureState::new(dims, amps, false)
}

/// Applies an operator to one factor of an amplitude vector with factor
/// dimensions `cdims`, leaving the others untouched.
pub(crate) fn apply_block_op(amps: &CVec, cdims: &[usize], block: usize, op: &CMat) -> CVec {
    let d = cdims[block];
    let pre: usize = cdims[..block].iter().product();
    let post: usize = cdims[block + 1..].iter().product();
    let mut out = CVec::zeros(amps.len());
    for p in 0..pre {
        for q in 0..post {
            for i in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..d {
                    acc += op[(i, j)] * amps[(p * d + j) * post + q];
                }
                out[(p * d + i) * post + q] = acc;
            }
        }
    }
    out
}

fn unitarity_deviation(u: &CMat) -> f64 {
    let d = u.nrows();
    let dev = u.adjoint() * u - CMat::identity(d, d);
    // Operator norm = largest singular value.
    dev.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Applies one unitary per partition block and returns the state in the
/// original factor order.  Each operator must match its block dimension
/// and be unitary within 1e-10 in operator norm.
pub fn apply_local(
    state: &PureState,
    partition: &Partition,
    ops: &[CMat],
) -> Result<PureState, StateError> {
    if partition.n_blocks() != ops.len() {
        return Err(StateError::ShapeMismatch(format!(
            "{} operators supplied for {} blocks",
            ops.len(),
            partition.n_blocks()
        )));
    }
    let cdims = partition.block_dims(state.dims());
    for (b, op) in ops.iter().enumerate() {
        if op.nrows() != cdims[b] || op.ncols() != cdims[b] {
            return Err(StateError::ShapeMismatch(format!(
                "block {} has dimension {} but the operator is {}x{}",
                b + 1,
                cdims[b],
                op.nrows(),
                op.ncols()
            )));
        }
        let dev = unitarity_deviation(op);
        if dev > 1e-10 {
            return Err(StateError::NonUnitary { block: b + 1, deviation: dev });
        }
    }
    let perm = coarse_perm(state.dims(), partition)?;
    let mut amps = CVec::zeros(state.dim());
    for (new_idx, &old_idx) in perm.iter().enumerate() {
        amps[new_idx] = state.amps[old_idx];
    }
    for (b, op) in ops.iter().enumerate() {
        amps = apply_block_op(&amps, &cdims, b, op);
    }
    let mut back = CVec::zeros(state.dim());
    for (new_idx, &old_idx) in perm.iter().enumerate() {
        back[old_idx] = amps[new_idx];
    }
    PureState::new(state.dims().to_vec(), back.iter().copied().collect(), false)
}

/// Reduced density matrix on a subset of factors (0-based indices),
/// tracing out the rest.  Hermitian, positive semidefinite, unit trace.
pub fn reduced_density(state: &PureState, subset: &[usize]) -> Result<CMat, StateError> {
    if subset.is_empty() {
        return Err(StateError::EmptySubset);
    }
    let n = state.n_factors();
    let mut keep: Vec<usize> = subset.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&i| i >= n) {
        return Err(StateError::ShapeMismatch(format!(
            "subset index out of range 1..={n}"
        )));
    }
    let dims = state.dims();
    let d_s: usize = keep.iter().map(|&i| dims[i]).product();
    let rest: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let d_r: usize = rest.iter().map(|&i| dims[i]).product();
    // Reshape amplitudes as a d_s x d_r matrix, then rho = M M^dagger.
    let mut m = CMat::zeros(d_s, d_r);
    let keep_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    for idx in 0..state.dim() {
        let tuple = tuple_of(dims, idx);
        let s_tuple: Vec<usize> = keep.iter().map(|&i| tuple[i]).collect();
        let r_tuple: Vec<usize> = rest.iter().map(|&i| tuple[i]).collect();
        let si = index_of(&keep_dims, &s_tuple);
        let ri = if rest.is_empty() { 0 } else { index_of(&rest_dims, &r_tuple) };
        m[(si, ri)] = state.amps[idx];
    }
    let _ = d_r;
    let _ = d_s;
    Ok(&m * m.adjoint())
}

pub mod gates {
    //! Single-qubit operators, controlled NOT, and the Bell states.

    use super::*;

    pub fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0),
        ])
    }

    pub fn pauli_y() -> CMat {
        CMat::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0),
        ])
    }

    pub fn pauli_z() -> CMat {
        CMat::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0),
        ])
    }

    /// Hadamard, written as (Z + X)/sqrt(2).
    pub fn hadamard() -> CMat {
        (pauli_z() + pauli_x()) / Complex64::new(std::f64::consts::SQRT_2, 0.0)
    }

    pub fn identity(d: usize) -> CMat {
        CMat::identity(d, d)
    }

    /// Controlled NOT on `n` qubits (qubit 0 most significant): flips
    /// `target` when `control` is 1.
    pub fn cnot(n: usize, control: usize, target: usize) -> CMat {
        assert!(control < n && target < n && control != target);
        let dim = 1usize << n;
        let mut m = CMat::zeros(dim, dim);
        for col in 0..dim {
            let cbit = (col >> (n - 1 - control)) & 1;
            let row = if cbit == 1 { col ^ (1 << (n - 1 - target)) } else { col };
            m[(row, col)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// The four Bell states on two qubits, indexed 1..=4:
    /// (|00>+|11>)/sqrt2, (|00>-|11>)/sqrt2, (|01>+|10>)/sqrt2, (|01>-|10>)/sqrt2.
    pub fn bell(k: usize) -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match k {
            1 => vec![s, 0.0, 0.0, s],
            2 => vec![s, 0.0, 0.0, -s],
            3 => vec![0.0, s, s, 0.0],
            4 => vec![0.0, s, -s, 0.0],
            _ => panic!("bell index must be 1..=4"),
        };
        let amps: Vec<Complex64> = amps.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        PureState::new(vec![2, 2], amps, false).expect("bell states are unit norm")
    }
}

fn req(params: &BTreeMap<String, f64>, name: &str, key: &str) -> Result<f64, StateError> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| StateError::MissingParam { name: name.into(), param: key.into() })
}

/// Default parameter values for each named state, usable as a starting
/// point for CLI invocations.
pub fn named_state_defaults(name: &str) -> Option<Vec<(String, f64)>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = 1.0 / 3.0f64.sqrt();
    let v: Vec<(&str, f64)> = match name {
        "ghz" | "ghz_general" => vec![("a", s), ("b", s)],
        "w" => vec![("a", t), ("c", t), ("d", t)],
        "ace" => vec![("a", 0.5f64.sqrt()), ("c", 0.3f64.sqrt()), ("e", 0.2f64.sqrt())],
        "generic3" => vec![
            ("a", 0.6),
            ("b", 0.45),
            ("c", 0.4),
            ("d", 0.35),
            ("e", 0.155f64.sqrt()),
            ("phi", 0.7),
        ],
        "q4q" => vec![("a", 0.8 * s), ("b", 0.6 * s)],
        "bell" => vec![("k", 1.0)],
        "simon" => vec![("n", 3.0), ("x0", 0.0), ("xi", 5.0)],
        _ => return None,
    };
    Some(v.into_iter().map(|(k, x)| (k.to_string(), x)).collect())
}

/// Builds one of the named example states from explicit parameters.
/// Parameters are taken literally (no silent renormalization): the
/// resulting vector must be within `NORM_DRIFT_TOL` of unit norm.
pub fn named_state(name: &str, params: &BTreeMap<String, f64>) -> Result<PureState, StateError> {
    let c = |x: f64| Complex64::new(x, 0.0);
    match name {
        // a|000> + b|111>
        "ghz" | "ghz_general" => {
            let a = req(params, name, "a")?;
            let b = req(params, name, "b")?;
            let mut amps = vec![c(0.0); 8];
            amps[0] = c(a);
            amps[7] = c(b);
            PureState::new(vec![2, 2, 2], amps, false)
        }
        // a|000> + c|101> + d|110>
        "w" => {
            let a = req(params, name, "a")?;
            let cc = req(params, name, "c")?;
            let d = req(params, name, "d")?;
            let mut amps = vec![c(0.0); 8];
            amps[0] = c(a);
            amps[5] = c(cc);
            amps[6] = c(d);
            PureState::new(vec![2, 2, 2], amps, false)
        }
        // a|000> + c|101> + e|111>
        "ace" => {
            let a = req(params, name, "a")?;
            let cc = req(params, name, "c")?;
            let e = req(params, name, "e")?;
            let mut amps = vec![c(0.0); 8];
            amps[0] = c(a);
            amps[5] = c(cc);
            amps[7] = c(e);
            PureState::new(vec![2, 2, 2], amps, false)
        }
        // a|000> + b e^{i phi}|100> + c|101> + d|110> + e|111>
        "generic3" => {
            let a = req(params, name, "a")?;
            let b = req(params, name, "b")?;
            let cc = req(params, name, "c")?;
            let d = req(params, name, "d")?;
            let e = req(params, name, "e")?;
            let phi = req(params, name, "phi")?;
            let mut amps = vec![c(0.0); 8];
            amps[0] = c(a);
            amps[4] = Complex64::from_polar(b, phi);
            amps[5] = c(cc);
            amps[6] = c(d);
            amps[7] = c(e);
            PureState::new(vec![2, 2, 2], amps, false)
        }
        // a(|0>_A|0>_B + |1>_A|1>_B)|0>_C + b(|0>_A|2>_B + |1>_A|3>_B)|1>_C
        // on dims [2, 4, 2]; unit norm requires 2(a^2 + b^2) = 1.
        "q4q" => {
            let a = req(params, name, "a")?;
            let b = req(params, name, "b")?;
            let dims = vec![2, 4, 2];
            let mut amps = vec![c(0.0); 16];
            amps[index_of(&dims, &[0, 0, 0])] = c(a);
            amps[index_of(&dims, &[1, 1, 0])] = c(a);
            amps[index_of(&dims, &[0, 2, 1])] = c(b);
            amps[index_of(&dims, &[1, 3, 1])] = c(b);
            PureState::new(dims, amps, false)
        }
        "bell" => {
            let k = req(params, name, "k")?;
            let ki = k.round() as i64;
            if !(1..=4).contains(&ki) || (k - ki as f64).abs() > 1e-9 {
                return Err(StateError::NotNormalizable { norm: k });
            }
            Ok(gates::bell(ki as usize))
        }
        // (|x0> + |x0 xor xi>)/sqrt(2) on n qubits.
        "simon" => {
            let n = req(params, name, "n")? as usize;
            let x0 = req(params, name, "x0")? as usize;
            let xi = req(params, name, "xi")? as usize;
            if n == 0 || n > 6 || xi == 0 || x0 >= (1 << n) || xi >= (1 << n) {
                return Err(StateError::ShapeMismatch(format!(
                    "simon state needs 1 <= n <= 6 and 0 < xi < 2^n, got n={n}, x0={x0}, xi={xi}"
                )));
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut amps = vec![c(0.0); 1 << n];
            amps[x0] = c(s);
            amps[x0 ^ xi] = c(s);
            PureState::new(vec![2; n], amps, false)
        }
        _ => Err(StateError::UnknownName(name.into())),
    }
}

/// Haar-like random state: complex normal amplitudes, normalized.
pub fn random_state<R: Rng>(dims: &[usize], rng: &mut R) -> PureState {
    let d: usize = dims.iter().product();
    let amps: Vec<Complex64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    PureState::new(dims.to_vec(), amps, true).expect("normal amplitudes are nonzero")
}

/// Formats a float with 17 significant digits, enough to round-trip f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a state as `{"dims": [...], "amps_re": [...], "amps_im": [...]}`
/// with 17-significant-digit floats.
pub fn write_state_json(state: &PureState) -> String {
    let dims: Vec<String> = state.dims().iter().map(|d| d.to_string()).collect();
    let re: Vec<String> = state.amps().iter().map(|z| format_float(z.re)).collect();
    let im: Vec<String> = state.amps().iter().map(|z| format_float(z.im)).collect();
    format!(
        "{{\"amps_im\":[{}],\"amps_re\":[{}],\"dims\":[{}]}}",
        im.join(","),
        re.join(","),
        dims.join(",")
    )
}

/// Parses the state-file JSON format, validating lengths and norm.
pub fn read_state_json(text: &str) -> Result<PureState, StateError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| StateError::BadStateFile(e.to_string()))?;
    let dims = v
        .get("dims")
        .and_then(|d| d.as_array())
        .ok_or_else(|| StateError::BadStateFile("missing dims array".into()))?;
    let dims: Vec<usize> = dims
        .iter()
        .map(|x| x.as_u64().map(|u| u as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| StateError::BadStateFile("dims must be positive integers".into()))?;
    let pull = |key: &str| -> Result<Vec<f64>, StateError> {
        v.get(key)
            .and_then(|d| d.as_array())
            .ok_or_else(|| StateError::BadStateFile(format!("missing {key} array")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| StateError::BadStateFile(format!("{key} must be numbers"))))
            .collect()
    };
    let re = pull("amps_re")?;
    let im = pull("amps_im")?;
    if re.len() != im.len() {
        return Err(StateError::BadStateFile("amps_re and amps_im lengths differ".into()));
    }
    let amps: Vec<Complex64> = re
        .into_iter()
        .zip(im)
        .map(|(r, i)| Complex64::new(r, i))
        .collect();
    PureState::new(dims, amps, false)
}
