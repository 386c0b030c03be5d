//! Partition enumeration and entanglement-type fingerprints.
//!
//! A fingerprint collects, for every partition of the elementary factors,
//! the continuous entanglement dimensions of all block subsets, the
//! orders of verified discrete stabilizers outside the identity
//! component, and the Schmidt multiplicity profiles of all bipartitions.
//! All recorded data is invariant under factor-local unitaries, so equal
//! fingerprints are a sound (if possibly coarse) proxy for having the
//! same entanglement type.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::schmidt::{group_degeneracies, schmidt_decompose, SchmidtError, DEGENERACY_REL_TOL};
use crate::stabilizer::{
    search_discrete, stabilizer_algebra, ComponentCertificate, SearchOptions, StabilizerAlgebra,
    StabilizerError, SupportMask, DEFAULT_TOL,
};
use crate::state::{Partition, PureState, StateError};

/// Most factors the all-partitions sweep will accept (203 partitions).
pub const MAX_FINGERPRINT_FACTORS: usize = 6;

/// Largest elementary factor dimension accepted by `fingerprint`.
pub const MAX_FINGERPRINT_DIM: usize = 4;

/// Largest block dimension the discrete sweep covers; partitions with a
/// bigger merged block record an empty discrete section.
const SEARCH_DIM_CAP: usize = 4;

#[derive(Debug, Error)]
pub enum EntclassError {
    #[error("partition sweep supports at most {max} factors, got {got}")]
    TooManyFactors { got: usize, max: usize },
    #[error("fingerprints support elementary dimensions up to {max}, got {got}")]
    FactorDimTooLarge { got: usize, max: usize },
    #[error("states have different factor dimension multisets")]
    ShapeMismatch,
    #[error("report needs at least {need} blocks, got {got}")]
    NotEnoughBlocks { need: usize, got: usize },
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error(transparent)]
    Schmidt(#[from] SchmidtError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// All set partitions of {0..n-1} with at most `max_blocks` blocks, in
/// restricted-growth-string order.
pub fn enumerate_partitions(
    n: usize,
    max_blocks: usize,
) -> Result<Vec<Partition>, EntclassError> {
    if n == 0 || n > MAX_FINGERPRINT_FACTORS {
        return Err(EntclassError::TooManyFactors { got: n, max: MAX_FINGERPRINT_FACTORS });
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks_used = rgs.iter().max().copied().unwrap_or(0) + 1;
        if blocks_used <= max_blocks {
            let mut blocks = vec![Vec::new(); blocks_used];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b].push(i);
            }
            out.push(Partition::new(blocks, n)?);
        }
        // Advance the restricted growth string: a[i] <= max(a[..i]) + 1.
        let mut i = n;
        loop {
            if i == 1 {
                return Ok(out);
            }
            i -= 1;
            let cap = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < cap && rgs[i] < n - 1 {
                rgs[i] += 1;
                for x in rgs[i + 1..].iter_mut() {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// Entanglement data of one block subset within one partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetRecord {
    /// Continuous dimension of the subset's entanglement group.
    pub dim_e: usize,
    /// Sorted distinct orders of verified discrete stabilizers (outside
    /// the identity component) supported exactly on this subset.
    pub discrete_orders: Vec<usize>,
}

/// Fingerprint section for one partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionRecord {
    /// Keyed by 1-based block subset, e.g. "1,3".
    pub subsets: BTreeMap<String, SubsetRecord>,
    /// Whether the discrete sweep ran (all block dims small enough).
    pub discrete_searched: bool,
}

/// LU-invariant entanglement-type summary of a pure state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub dims: Vec<usize>,
    /// Keyed by canonical partition descriptor, e.g. "1,2|3".
    pub partitions: BTreeMap<String, PartitionRecord>,
    /// Schmidt multiplicity profile per bipartition descriptor.
    pub schmidt_profiles: BTreeMap<String, Vec<usize>>,
}

fn subset_key(blocks: &[usize]) -> String {
    blocks
        .iter()
        .map(|b| (b + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Per-partition cache of stabilizer algebras keyed by support mask.
struct AlgebraCache<'a> {
    state: &'a PureState,
    partition: &'a Partition,
    tol: f64,
    map: BTreeMap<Vec<usize>, StabilizerAlgebra>,
}

impl<'a> AlgebraCache<'a> {
    fn new(state: &'a PureState, partition: &'a Partition, tol: f64) -> Self {
        AlgebraCache { state, partition, tol, map: BTreeMap::new() }
    }

    fn get(&mut self, blocks: &[usize]) -> Result<&StabilizerAlgebra, StabilizerError> {
        let key = blocks.to_vec();
        if !self.map.contains_key(&key) {
            let mask = SupportMask::new(key.clone(), self.partition.n_blocks())?;
            let alg = stabilizer_algebra(self.state, self.partition, &mask, self.tol)?;
            self.map.insert(key.clone(), alg);
        }
        Ok(&self.map[&key])
    }

    fn dim_e(&mut self, subset: &[usize]) -> Result<usize, StabilizerError> {
        let dim_subset = self.get(subset)?.dim;
        let mut parts = Vec::new();
        for &drop in subset {
            let smaller: Vec<usize> = subset.iter().copied().filter(|&b| b != drop).collect();
            parts.push(self.get(&smaller)?.clone());
        }
        let refs: Vec<&StabilizerAlgebra> = parts.iter().collect();
        let sum = crate::stabilizer::subspace_sum(&refs)?;
        Ok(dim_subset.saturating_sub(sum.dim))
    }
}

fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for bits in 1..(1usize << n) {
        out.push((0..n).filter(|b| bits >> b & 1 == 1).collect());
    }
    out
}

fn is_proportional_to_identity(m: &crate::linalg::CMat) -> bool {
    let d = m.nrows();
    let c = m.trace() / num_complex::Complex64::new(d as f64, 0.0);
    (m - crate::linalg::CMat::identity(d, d) * c).norm() < 1e-6 * (d as f64).sqrt()
}

/// Computes the fingerprint over all partitions with at most `max_blocks`
/// blocks.
pub fn fingerprint_with(
    state: &PureState,
    max_blocks: usize,
) -> Result<Fingerprint, EntclassError> {
    let n = state.n_factors();
    if n > MAX_FINGERPRINT_FACTORS {
        return Err(EntclassError::TooManyFactors { got: n, max: MAX_FINGERPRINT_FACTORS });
    }
    if let Some(&d) = state.dims().iter().find(|&&d| d > MAX_FINGERPRINT_DIM) {
        return Err(EntclassError::FactorDimTooLarge { got: d, max: MAX_FINGERPRINT_DIM });
    }

    let mut partitions_out = BTreeMap::new();
    for partition in enumerate_partitions(n, max_blocks)? {
        let k = partition.n_blocks();
        if k < 2 {
            partitions_out
                .insert(partition.to_string(), PartitionRecord {
                    subsets: BTreeMap::new(),
                    discrete_searched: false,
                });
            continue;
        }
        let mut cache = AlgebraCache::new(state, &partition, DEFAULT_TOL);
        let mut subsets = BTreeMap::new();
        for subset in nonempty_subsets(k) {
            if subset.len() < 2 {
                continue;
            }
            let dim_e = cache.dim_e(&subset)?;
            subsets.insert(subset_key(&subset), SubsetRecord { dim_e, discrete_orders: Vec::new() });
        }

        let searchable = partition.block_dims(state.dims()).iter().all(|&d| d <= SEARCH_DIM_CAP);
        if searchable {
            let found = search_discrete(state, &partition, &SearchOptions::default())?;
            for ds in &found {
                debug_assert_eq!(ds.certificate, ComponentCertificate::Outside);
                let support: Vec<usize> = ds
                    .blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| !is_proportional_to_identity(g))
                    .map(|(b, _)| b)
                    .collect();
                if support.len() < 2 {
                    continue;
                }
                if let Some(rec) = subsets.get_mut(&subset_key(&support)) {
                    if !rec.discrete_orders.contains(&ds.order) {
                        rec.discrete_orders.push(ds.order);
                        rec.discrete_orders.sort_unstable();
                    }
                }
            }
        }
        partitions_out.insert(partition.to_string(), PartitionRecord {
            subsets,
            discrete_searched: searchable,
        });
    }

    let mut schmidt_profiles = BTreeMap::new();
    if n >= 2 {
        for bipartition in enumerate_partitions(n, 2)? {
            if bipartition.n_blocks() != 2 {
                continue;
            }
            let data = schmidt_decompose(state, &bipartition)?;
            let profile = group_degeneracies(&data, DEGENERACY_REL_TOL)?;
            schmidt_profiles.insert(bipartition.to_string(), profile.multiplicities);
        }
    }

    Ok(Fingerprint { dims: state.dims().to_vec(), partitions: partitions_out, schmidt_profiles })
}

/// Fingerprint over all partitions (no block-count cap).
pub fn fingerprint(state: &PureState) -> Result<Fingerprint, EntclassError> {
    fingerprint_with(state, state.n_factors())
}

/// Canonical JSON form of a fingerprint: sorted keys, integers only.
pub fn fingerprint_json(fp: &Fingerprint) -> String {
    serde_json::to_string(fp).expect("fingerprint serialization cannot fail")
}

/// Whether two states have the same entanglement-type fingerprint.
/// Requires equal factor-dimension multisets.
pub fn same_entanglement_type(s1: &PureState, s2: &PureState) -> Result<bool, EntclassError> {
    let mut d1 = s1.dims().to_vec();
    let mut d2 = s2.dims().to_vec();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return Err(EntclassError::ShapeMismatch);
    }
    Ok(fingerprint(s1)? == fingerprint(s2)?)
}

/// Consequences of maximal pair entanglement for the rest of the system.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionReport {
    /// The probed pair, as 0-based block indices.
    pub pair: Vec<usize>,
    /// Smaller of the two block dimensions.
    pub min_dim: usize,
    pub dim_e_pair: usize,
    /// Whether dim E_pair reaches its ceiling min_dim^2 - 1.
    pub maximal: bool,
    pub equal_dims: bool,
    /// Entanglement dims of every cross pair and triple involving the
    /// pair and one other block, keyed by 1-based subset.
    pub checks: BTreeMap<String, usize>,
    /// Subset keys the monogamy statement forces to zero.
    pub expected_trivial: Vec<String>,
    /// All forced subsets are indeed zero (vacuously true if not maximal).
    pub consistent: bool,
}

/// Evaluates the monogamy consequences of maximal entanglement in one
/// block pair: with equal block dimensions every group through a third
/// block must be trivial; with unequal dimensions only the groups through
/// the smaller factor are forced to vanish.
pub fn maximal_entanglement_report(
    state: &PureState,
    partition: &Partition,
    block_a: usize,
    block_b: usize,
) -> Result<RestrictionReport, EntclassError> {
    let k = partition.n_blocks();
    if k < 3 {
        return Err(EntclassError::NotEnoughBlocks { need: 3, got: k });
    }
    let mut pair = vec![block_a, block_b];
    pair.sort_unstable();
    pair.dedup();
    if pair.len() != 2 {
        return Err(EntclassError::NotEnoughBlocks { need: 2, got: pair.len() });
    }
    let block_dims = partition.block_dims(state.dims());
    let (da, db) = (block_dims[pair[0]], block_dims[pair[1]]);
    let min_dim = da.min(db);
    let equal_dims = da == db;
    let smaller_block = if da <= db { pair[0] } else { pair[1] };

    let dim_e_pair = crate::stabilizer::entanglement_dim(state, partition, &pair, DEFAULT_TOL)?;
    let maximal = dim_e_pair == min_dim * min_dim - 1;

    let mut checks = BTreeMap::new();
    let mut expected_trivial = Vec::new();
    for c in 0..k {
        if pair.contains(&c) {
            continue;
        }
        for subset in [vec![pair[0], c], vec![pair[1], c], vec![pair[0], pair[1], c]] {
            let mut s = subset.clone();
            s.sort_unstable();
            let key = subset_key(&s);
            let dim = crate::stabilizer::entanglement_dim(state, partition, &s, DEFAULT_TOL)?;
            checks.insert(key.clone(), dim);
            if maximal {
                let forced = if equal_dims {
                    true
                } else {
                    s.len() == 2 && s.contains(&smaller_block)
                };
                if forced && !expected_trivial.contains(&key) {
                    expected_trivial.push(key);
                }
            }
        }
    }
    expected_trivial.sort();
    let consistent = expected_trivial.iter().all(|k| checks[k] == 0);

    Ok(RestrictionReport {
        pair,
        min_dim,
        dim_e_pair,
        maximal,
        equal_dims,
        checks,
        expected_trivial,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use crate::state::{apply_local, gates, named_state, named_state_defaults};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn named(name: &str) -> PureState {
        let params: BTreeMap<String, f64> =
            named_state_defaults(name).unwrap().into_iter().collect();
        named_state(name, &params).unwrap()
    }

    fn named_with(name: &str, kv: &[(&str, f64)]) -> PureState {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        named_state(name, &params).unwrap()
    }

    /// Bell numbers B_1..B_up_to by the Bell triangle, independent of the
    /// enumerator: the row tails read 1, 2, 5, 15, 52, 203, ...
    fn bell_numbers(up_to: usize) -> Vec<usize> {
        let mut rows = vec![vec![1usize]];
        for _ in 1..up_to {
            let prev = rows.last().unwrap();
            let mut row = vec![*prev.last().unwrap()];
            for &x in prev {
                row.push(row.last().unwrap() + x);
            }
            rows.push(row);
        }
        rows.iter().map(|r| *r.last().unwrap()).collect()
    }

    fn stirling(n: usize, k: usize) -> usize {
        if n == 0 && k == 0 {
            return 1;
        }
        if n == 0 || k == 0 {
            return 0;
        }
        k * stirling(n - 1, k) + stirling(n - 1, k - 1)
    }

    #[test]
    fn partition_counts_match_bell_and_stirling() {
        let bell = bell_numbers(6);
        for n in 1..=6 {
            assert_eq!(enumerate_partitions(n, n).unwrap().len(), bell[n - 1], "n={n}");
        }
        // N=4 with at most 2 blocks: S(4,1) + S(4,2) = 1 + 7.
        assert_eq!(stirling(4, 2), 7);
        assert_eq!(enumerate_partitions(4, 2).unwrap().len(), 8);
        assert!(matches!(
            enumerate_partitions(7, 7),
            Err(EntclassError::TooManyFactors { .. })
        ));
    }

    #[test]
    fn three_factor_partitions_are_the_expected_five() {
        let got: Vec<String> =
            enumerate_partitions(3, 3).unwrap().iter().map(|p| p.to_string()).collect();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["1,2,3", "1,2|3", "1,3|2", "1|2,3", "1|2|3"]);
        // Deterministic: a second call gives the identical sequence.
        let again: Vec<String> =
            enumerate_partitions(3, 3).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(got, again);
    }

    #[test]
    fn product_state_fingerprint_is_trivial() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut amps = vec![c(0.0); 8];
        amps[0] = c(1.0);
        let zero = PureState::new(vec![2, 2, 2], amps, false).unwrap();
        let fp = fingerprint(&zero).unwrap();
        for rec in fp.partitions.values() {
            for s in rec.subsets.values() {
                assert_eq!(s.dim_e, 0);
                assert!(s.discrete_orders.is_empty());
            }
        }
        for profile in fp.schmidt_profiles.values() {
            assert_eq!(profile, &vec![1]);
        }
    }

    #[test]
    fn ghz_and_w_fingerprints_differ_in_the_documented_way() {
        let ghz = fingerprint(&named("ghz")).unwrap();
        let w = fingerprint(&named("w")).unwrap();
        assert_ne!(ghz, w);

        let fine = &ghz.partitions["1|2|3"];
        assert_eq!(fine.subsets["1,2"].dim_e, 1);
        assert_eq!(fine.subsets["1,3"].dim_e, 1);
        assert_eq!(fine.subsets["2,3"].dim_e, 1);
        assert_eq!(fine.subsets["1,2,3"].dim_e, 0);
        assert_eq!(fine.subsets["1,2,3"].discrete_orders, vec![2]);

        let fine_w = &w.partitions["1|2|3"];
        assert_eq!(fine_w.subsets["1,2"].dim_e, 0);
        assert_eq!(fine_w.subsets["1,2,3"].dim_e, 1);
        assert!(fine_w.subsets["1,2,3"].discrete_orders.is_empty());
    }

    #[test]
    fn generic3_pair_partitions_carry_one_dimension() {
        let fp = fingerprint(&named("generic3")).unwrap();
        let fine = &fp.partitions["1|2|3"];
        for key in ["1,2", "1,3", "2,3", "1,2,3"] {
            assert_eq!(fine.subsets[key].dim_e, 0, "subset {key}");
        }
        for desc in ["1,2|3", "1,3|2", "1|2,3"] {
            let rec = &fp.partitions[desc];
            assert_eq!(rec.subsets["1,2"].dim_e, 1, "partition {desc}");
        }
    }

    #[test]
    fn fingerprint_is_lu_invariant_and_deterministic() {
        let ghz = named("ghz");
        let fp = fingerprint(&ghz).unwrap();
        assert_eq!(fingerprint_json(&fp), fingerprint_json(&fingerprint(&ghz).unwrap()));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Partition::singletons(3);
        let ops: Vec<_> = (0..3).map(|_| random_unitary(2, &mut rng)).collect();
        let rotated = apply_local(&ghz, &p, &ops).unwrap();
        assert_eq!(fp, fingerprint(&rotated).unwrap());
        assert!(same_entanglement_type(&ghz, &rotated).unwrap());
    }

    #[test]
    fn swapped_ghz_weights_are_the_same_type() {
        // (0.8,0.6) and (0.6,0.8) are related by the flip string, which is
        // a local unitary, so their fingerprints must agree.
        let s1 = named_with("ghz", &[("a", 0.8), ("b", 0.6)]);
        let s2 = named_with("ghz", &[("a", 0.6), ("b", 0.8)]);
        let x = gates::pauli_x();
        let flipped =
            apply_local(&s1, &Partition::singletons(3), &[x.clone(), x.clone(), x]).unwrap();
        let overlap = flipped.overlap(&s2).norm();
        assert!((overlap - 1.0).abs() < 1e-12, "flip oracle broke: overlap {overlap}");
        assert!(same_entanglement_type(&s1, &s2).unwrap());
        assert!(!same_entanglement_type(&s1, &named("w")).unwrap());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let bell = gates::bell(1);
        let ghz = named("ghz");
        assert!(matches!(
            same_entanglement_type(&bell, &ghz),
            Err(EntclassError::ShapeMismatch)
        ));
    }

    #[test]
    fn non_product_states_have_nontrivial_fingerprints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let state = crate::state::random_state(&[2, 2], &mut rng);
        let fp = fingerprint(&state).unwrap();
        let has_rank = fp.schmidt_profiles.values().any(|p| p.iter().sum::<usize>() >= 2);
        let has_dim = fp
            .partitions
            .values()
            .flat_map(|r| r.subsets.values())
            .any(|s| s.dim_e >= 1);
        assert!(has_rank && has_dim);
    }

    #[test]
    fn bell_with_spectator_is_maximal_and_monogamous() {
        // Bell pair on factors 1,2 with |0> on factor 3.
        let bell = gates::bell(1);
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = bell.amps()[0];
        amps[2] = bell.amps()[1];
        amps[4] = bell.amps()[2];
        amps[6] = bell.amps()[3];
        let state = PureState::new(vec![2, 2, 2], amps, false).unwrap();
        let p = Partition::singletons(3);
        let report = maximal_entanglement_report(&state, &p, 0, 1).unwrap();
        assert!(report.maximal);
        assert!(report.equal_dims);
        assert_eq!(report.dim_e_pair, 3);
        assert_eq!(report.expected_trivial, vec!["1,2,3", "1,3", "2,3"]);
        assert!(report.consistent);
        for key in ["1,3", "2,3", "1,2,3"] {
            assert_eq!(report.checks[key], 0);
        }
    }

    #[test]
    fn qubit_qu4it_qubit_reports() {
        let p = Partition::singletons(3);
        let generic = named("q4q");
        let report = maximal_entanglement_report(&generic, &p, 0, 1).unwrap();
        assert!(report.maximal);
        assert!(!report.equal_dims);
        assert_eq!(report.expected_trivial, vec!["1,3"]);
        assert!(report.consistent);
        assert_eq!(report.checks["2,3"], 1);

        let balanced = named_with("q4q", &[("a", 0.5), ("b", 0.5)]);
        let report = maximal_entanglement_report(&balanced, &p, 0, 1).unwrap();
        assert!(report.maximal && report.consistent);
        assert_eq!(report.checks["2,3"], 3);

        assert!(matches!(
            maximal_entanglement_report(&gates::bell(1), &Partition::singletons(2), 0, 1),
            Err(EntclassError::NotEnoughBlocks { .. })
        ));
    }
}
