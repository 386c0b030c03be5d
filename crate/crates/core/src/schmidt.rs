//! Bipartite Schmidt decomposition and the classification of bipartite
//! stabilizer and entanglement groups from coefficient degeneracies.
//!
//! For a bipartition with Schmidt multiplicities (k_1, ..., k_n) and rank
//! r on dimensions d_A, d_B, the stabilizer is
//! `S_AB = U(1) x U(k_1) x ... x U(k_n) x U(d_A - r) x U(d_B - r)`,
//! the one-sided stabilizers are `U(1) x U(d - r)`, and the entanglement
//! group is `E_AB = PSU(k_1) x U(k_2) x ... x U(k_n)` with continuous
//! dimension `sum k_i^2 - 1`.

use std::fmt;

use nalgebra::SVD;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMat, CVec};
use crate::state::{coarse_grain, Partition, PureState, StateError};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Default relative tolerance for grouping nearly equal coefficients.
pub const DEGENERACY_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SchmidtError {
    #[error("schmidt decomposition needs exactly 2 blocks, got {0}")]
    NotBipartite(usize),
    #[error("grouping tolerance {0} outside (0, 0.1)")]
    InvalidTolerance(f64),
    #[error("profile rank {rank} exceeds min({d_a}, {d_b})")]
    RankExceedsDimension { rank: usize, d_a: usize, d_b: usize },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Schmidt form of a state across a bipartition: descending positive
/// coefficients and orthonormal bases so that
/// `amp[(a,b)] = sum_i p_i * left[(a,i)] * right[(b,i)]`.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    /// d_A x rank, orthonormal columns.
    pub left: CMat,
    /// d_B x rank, orthonormal columns.
    pub right: CMat,
}

/// Multiplicities of (near-)degenerate Schmidt coefficients, largest
/// level first, with the group-mean levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyProfile {
    pub multiplicities: Vec<usize>,
    pub levels: Vec<f64>,
}

/// One named factor of a stabilizer or entanglement group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupFactor {
    U(usize),
    Psu(usize),
}

impl GroupFactor {
    pub fn dim(&self) -> usize {
        match *self {
            GroupFactor::U(n) => n * n,
            GroupFactor::Psu(n) => n * n - 1,
        }
    }
}

impl fmt::Display for GroupFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GroupFactor::U(n) => write!(f, "U({n})"),
            GroupFactor::Psu(n) => write!(f, "PSU({n})"),
        }
    }
}

fn factors_dim(fs: &[GroupFactor]) -> usize {
    fs.iter().map(|f| f.dim()).sum()
}

fn factors_string(fs: &[GroupFactor]) -> String {
    if fs.is_empty() {
        return "1".to_string();
    }
    fs.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" x ")
}

/// Named structure of the bipartite stabilizer and entanglement groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGroupSignature {
    pub s_ab: Vec<GroupFactor>,
    pub s_a: Vec<GroupFactor>,
    pub s_b: Vec<GroupFactor>,
    pub e_ab: Vec<GroupFactor>,
    /// Continuous dimension of E_AB: sum of k_i^2 minus 1.
    pub dim_e: usize,
}

impl BipartiteGroupSignature {
    pub fn e_ab_name(&self) -> String {
        factors_string(&self.e_ab)
    }

    pub fn s_ab_name(&self) -> String {
        factors_string(&self.s_ab)
    }
}

/// Schmidt decomposition across a two-block partition of the factors.
pub fn schmidt_decompose(
    state: &PureState,
    bipartition: &Partition,
) -> Result<SchmidtData, SchmidtError> {
    if bipartition.n_blocks() != 2 {
        return Err(SchmidtError::NotBipartite(bipartition.n_blocks()));
    }
    let coarse = coarse_grain(state, bipartition)?;
    let d_a = coarse.dims()[0];
    let d_b = coarse.dims()[1];
    let mut m = CMat::zeros(d_a, d_b);
    for a in 0..d_a {
        for b in 0..d_b {
            m[(a, b)] = coarse.amps()[a * d_b + b];
        }
    }
    // Pad wide stacks with zero rows to square, keeping the factorization
    // on the accurate path; a nonzero singular value's left vector then
    // has support only on the original rows.
    let work = if d_a < d_b {
        let mut w = CMat::zeros(d_b, d_b);
        w.view_mut((0, 0), (d_a, d_b)).copy_from(&m);
        w
    } else {
        m
    };
    let svd = SVD::new(work, true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv_max = svd.singular_values[order[0]];

    let mut coefficients = Vec::new();
    let mut left_cols: Vec<CVec> = Vec::new();
    let mut right_cols: Vec<CVec> = Vec::new();
    for &idx in &order {
        let sv = svd.singular_values[idx];
        if sv < RANK_REL_TOL * sv_max {
            break;
        }
        // M = U S V^H, so the right Schmidt vector is the V^H row itself
        // (no conjugation): amp[(a,b)] = sum_i s_i U[a,i] Vt[i,b].
        let mut l = u.column(idx).rows(0, d_a).into_owned();
        let mut r = v_t.row(idx).transpose();
        // Deterministic phases: rotate the left vector's largest entry to
        // the positive real axis and compensate on the right.
        let lc = crate::linalg::canonical_phase(&l);
        let phase = if l.norm() > 0.0 {
            // canonical_phase multiplied by conj(p); recover p to counter-rotate.
            let mut best = 0usize;
            let mut best_mod = 0.0f64;
            for (i, z) in l.iter().enumerate() {
                let mz = z.norm();
                if mz > best_mod * (1.0 + 1e-12) {
                    best = i;
                    best_mod = mz;
                }
            }
            l[best] / best_mod
        } else {
            Complex64::new(1.0, 0.0)
        };
        l = lc;
        r *= phase;
        coefficients.push(sv);
        left_cols.push(l);
        right_cols.push(r);
    }
    let rank = coefficients.len();
    let mut left = CMat::zeros(d_a, rank);
    let mut right = CMat::zeros(d_b, rank);
    for i in 0..rank {
        left.set_column(i, &left_cols[i]);
        right.set_column(i, &right_cols[i]);
    }
    Ok(SchmidtData { coefficients, rank, left, right })
}

/// Groups nearly degenerate coefficients: consecutive values merge when
/// they differ by at most `rel_tol * p_1`, so closeness chains
/// transitively and ordering cannot split a cluster.
pub fn group_degeneracies(
    s: &SchmidtData,
    rel_tol: f64,
) -> Result<DegeneracyProfile, SchmidtError> {
    if !(rel_tol > 0.0 && rel_tol < 0.1) {
        return Err(SchmidtError::InvalidTolerance(rel_tol));
    }
    let p = &s.coefficients;
    let mut multiplicities = Vec::new();
    let mut levels = Vec::new();
    if p.is_empty() {
        return Ok(DegeneracyProfile { multiplicities, levels });
    }
    let scale = p[0];
    let mut start = 0;
    for i in 1..=p.len() {
        if i == p.len() || (p[i - 1] - p[i]) > rel_tol * scale {
            let group = &p[start..i];
            multiplicities.push(group.len());
            levels.push(group.iter().sum::<f64>() / group.len() as f64);
            start = i;
        }
    }
    Ok(DegeneracyProfile { multiplicities, levels })
}

/// Builds the named group signature for a degeneracy profile on the
/// given local dimensions.
pub fn bipartite_group_name(
    profile: &DegeneracyProfile,
    d_a: usize,
    d_b: usize,
) -> Result<BipartiteGroupSignature, SchmidtError> {
    let r: usize = profile.multiplicities.iter().sum();
    if r > d_a.min(d_b) {
        return Err(SchmidtError::RankExceedsDimension { rank: r, d_a, d_b });
    }
    let mut s_ab = vec![GroupFactor::U(1)];
    for &k in &profile.multiplicities {
        s_ab.push(GroupFactor::U(k));
    }
    if d_a > r {
        s_ab.push(GroupFactor::U(d_a - r));
    }
    if d_b > r {
        s_ab.push(GroupFactor::U(d_b - r));
    }
    let mut s_a = vec![GroupFactor::U(1)];
    if d_a > r {
        s_a.push(GroupFactor::U(d_a - r));
    }
    let mut s_b = vec![GroupFactor::U(1)];
    if d_b > r {
        s_b.push(GroupFactor::U(d_b - r));
    }
    let mut e_ab = Vec::new();
    for (i, &k) in profile.multiplicities.iter().enumerate() {
        if i == 0 {
            if k > 1 {
                e_ab.push(GroupFactor::Psu(k));
            }
            // PSU(1) is trivial and omitted.
        } else {
            e_ab.push(GroupFactor::U(k));
        }
    }
    let dim_e = profile.multiplicities.iter().map(|&k| k * k).sum::<usize>().saturating_sub(1);
    debug_assert_eq!(dim_e, factors_dim(&e_ab));
    Ok(BipartiteGroupSignature { s_ab, s_a, s_b, e_ab, dim_e })
}

/// Convenience: decompose, group with the default tolerance, and name the
/// groups in one call.
pub fn bipartite_signature(
    state: &PureState,
    bipartition: &Partition,
) -> Result<(SchmidtData, DegeneracyProfile, BipartiteGroupSignature), SchmidtError> {
    let data = schmidt_decompose(state, bipartition)?;
    let profile = group_degeneracies(&data, DEGENERACY_REL_TOL)?;
    let coarse_dims = bipartition.block_dims(state.dims());
    let sig = bipartite_group_name(&profile, coarse_dims[0], coarse_dims[1])?;
    Ok((data, profile, sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{gates, named_state, named_state_defaults, random_state, PureState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn reconstruct(s: &SchmidtData, d_a: usize, d_b: usize) -> CVec {
        let mut amps = CVec::zeros(d_a * d_b);
        for i in 0..s.rank {
            for a in 0..d_a {
                for b in 0..d_b {
                    amps[a * d_b + b] +=
                        Complex64::new(s.coefficients[i], 0.0) * s.left[(a, i)] * s.right[(b, i)];
                }
            }
        }
        amps
    }

    #[test]
    fn bell_has_flat_rank_two_spectrum() {
        let bell = gates::bell(1);
        let p = Partition::singletons(2);
        let s = schmidt_decompose(&bell, &p).unwrap();
        assert_eq!(s.rank, 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.coefficients[0] - r).abs() < 1e-12);
        assert!((s.coefficients[1] - r).abs() < 1e-12);
        let rec = reconstruct(&s, 2, 2);
        assert!((rec - bell.amps()).norm() < 1e-9);
    }

    #[test]
    fn product_state_has_rank_one() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let zero = PureState::new(vec![2, 2], vec![c(1.0), c(0.0), c(0.0), c(0.0)], false).unwrap();
        let s = schmidt_decompose(&zero, &Partition::singletons(2)).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_amplitudes_are_the_coefficients() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let st = PureState::new(vec![2, 2], vec![c(0.8), c(0.0), c(0.0), c(0.6)], false).unwrap();
        let s = schmidt_decompose(&st, &Partition::singletons(2)).unwrap();
        assert_eq!(s.rank, 2);
        assert!((s.coefficients[0] - 0.8).abs() < 1e-12);
        assert!((s.coefficients[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthonormality_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for dims in [[2usize, 3], [3, 2], [4, 4], [2, 4]] {
            let st = random_state(&dims, &mut rng);
            let s = schmidt_decompose(&st, &Partition::singletons(2)).unwrap();
            let sq: f64 = s.coefficients.iter().map(|p| p * p).sum();
            assert!((sq - 1.0).abs() < 1e-10);
            let gram_l = s.left.adjoint() * &s.left;
            let gram_r = s.right.adjoint() * &s.right;
            let id = CMat::identity(s.rank, s.rank);
            assert!((gram_l - &id).norm() < 1e-10);
            assert!((gram_r - &id).norm() < 1e-10);
            let rec = reconstruct(&s, dims[0], dims[1]);
            assert!((rec - st.amps()).norm() < 1e-9);
            // Descending order.
            for w in s.coefficients.windows(2) {
                assert!(w[0] >= w[1] - 1e-15);
            }
        }
    }

    #[test]
    fn spectra_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let part = Partition::singletons(2);
        for _ in 0..5 {
            let st = random_state(&[3, 4], &mut rng);
            let u = crate::linalg::random_unitary(3, &mut rng);
            let v = crate::linalg::random_unitary(4, &mut rng);
            let moved = crate::state::apply_local(&st, &part, &[u, v]).unwrap();
            let s0 = schmidt_decompose(&st, &part).unwrap();
            let s1 = schmidt_decompose(&moved, &part).unwrap();
            assert_eq!(s0.rank, s1.rank);
            for (a, b) in s0.coefficients.iter().zip(&s1.coefficients) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn three_qubit_bipartitions_use_coarse_graining() {
        let params: BTreeMap<String, f64> = named_state_defaults("ghz").unwrap().into_iter().collect();
        let ghz = named_state("ghz", &params).unwrap();
        let p = Partition::parse("1,2|3", 3).unwrap();
        let s = schmidt_decompose(&ghz, &p).unwrap();
        assert_eq!(s.rank, 2);
        let prof = group_degeneracies(&s, DEGENERACY_REL_TOL).unwrap();
        assert_eq!(prof.multiplicities, vec![2]);
    }

    #[test]
    fn grouping_merges_and_chains() {
        let mk = |coeffs: Vec<f64>| SchmidtData {
            rank: coeffs.len(),
            coefficients: coeffs,
            left: CMat::zeros(1, 0),
            right: CMat::zeros(1, 0),
        };
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let prof = group_degeneracies(&mk(vec![r, r - 1e-12]), 1e-8).unwrap();
        assert_eq!(prof.multiplicities, vec![2]);

        let prof = group_degeneracies(&mk(vec![0.8, 0.6]), 1e-8).unwrap();
        assert_eq!(prof.multiplicities, vec![1, 1]);

        // Three values, each within tolerance of its neighbor but the ends
        // separated by more than the tolerance: chaining keeps them together.
        let tol = 1e-8;
        let base = 0.5;
        let step = 0.9 * tol * base;
        let prof = group_degeneracies(&mk(vec![base, base - step, base - 2.0 * step]), tol).unwrap();
        assert_eq!(prof.multiplicities, vec![3]);
        assert!((prof.levels[0] - (base - step)).abs() < 1e-12);

        assert!(matches!(
            group_degeneracies(&mk(vec![1.0]), 0.5),
            Err(SchmidtError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn group_names_match_formulas() {
        let bell_prof = DegeneracyProfile {
            multiplicities: vec![2],
            levels: vec![std::f64::consts::FRAC_1_SQRT_2],
        };
        let sig = bipartite_group_name(&bell_prof, 2, 2).unwrap();
        assert_eq!(sig.dim_e, 3);
        assert_eq!(sig.e_ab_name(), "PSU(2)");
        assert_eq!(sig.s_ab_name(), "U(1) x U(2)");

        let product = DegeneracyProfile { multiplicities: vec![1], levels: vec![1.0] };
        let sig = bipartite_group_name(&product, 2, 2).unwrap();
        assert_eq!(sig.dim_e, 0);
        assert_eq!(sig.e_ab_name(), "1");
        assert_eq!(sig.s_ab_name(), "U(1) x U(1) x U(1) x U(1)");

        let mixed = DegeneracyProfile { multiplicities: vec![2, 1], levels: vec![0.69, 0.2] };
        let sig = bipartite_group_name(&mixed, 3, 3).unwrap();
        assert_eq!(sig.dim_e, 4);
        assert_eq!(sig.e_ab_name(), "PSU(2) x U(1)");

        let bad = DegeneracyProfile { multiplicities: vec![3], levels: vec![0.5] };
        assert!(matches!(
            bipartite_group_name(&bad, 2, 2),
            Err(SchmidtError::RankExceedsDimension { .. })
        ));
    }
}
