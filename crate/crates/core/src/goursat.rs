//! Finite-group engine for subgroups of direct products: slice and
//! product subgroups, quotients, the projected-quotient isomorphism
//! checks, and the two-factor reconstruction converse.
//!
//! Groups are explicit multiplication tables; subgroups of a product are
//! sorted sets of mixed-radix element codes.  Everything is exhaustively
//! verified at desk scale rather than proved symbolically.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest subgroup order `closure` will build.
pub const CLOSURE_CAP: usize = 100_000;

/// Pair-count cap above which exhaustive sweeps switch to a deterministic
/// sample.
const SWEEP_CAP: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum GoursatError {
    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),
    #[error("closure exceeds the order budget of {cap}")]
    OrderBudgetExceeded { cap: usize },
    #[error("set product is not a subgroup (implementation bug)")]
    NotASubgroup,
    #[error("subgroup is not normal: conjugating {element} by {conjugator} leaves the set")]
    NotNormal { element: usize, conjugator: usize },
    #[error("guaranteed check failed (implementation bug): {0}")]
    CheckFailed(String),
    #[error("the supplied coset map is not an isomorphism: {0}")]
    NotAnIsomorphism(String),
    #[error("goursat analysis needs 2 or 3 factors, got {0}")]
    FactorCountUnsupported(usize),
    #[error("bad group spec: {0}")]
    BadSpec(String),
}

/// A finite group as a validated multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultTable {
    pub order: usize,
    table: Vec<usize>,
    pub identity: usize,
    inverse: Vec<usize>,
}

impl MultTable {
    /// Validates rows as a group table: latin square, unique identity,
    /// two-sided inverses, associativity (exhaustive up to order 32,
    /// deterministically sampled beyond).
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self, GoursatError> {
        let n = rows.len();
        if n == 0 {
            return Err(GoursatError::InvalidTable("empty table".into()));
        }
        let mut table = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(GoursatError::InvalidTable("table is not square".into()));
            }
            for &x in row {
                if x >= n {
                    return Err(GoursatError::InvalidTable(format!("entry {x} out of range")));
                }
                table.push(x);
            }
        }
        let at = |i: usize, j: usize| table[i * n + j];
        for i in 0..n {
            let mut seen_row = vec![false; n];
            let mut seen_col = vec![false; n];
            for j in 0..n {
                if std::mem::replace(&mut seen_row[at(i, j)], true) {
                    return Err(GoursatError::InvalidTable(format!("row {i} repeats a value")));
                }
                if std::mem::replace(&mut seen_col[at(j, i)], true) {
                    return Err(GoursatError::InvalidTable(format!("column {i} repeats a value")));
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| at(e, x) == x && at(x, e) == x))
            .ok_or_else(|| GoursatError::InvalidTable("no identity element".into()))?;
        let mut inverse = vec![0usize; n];
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| at(x, y) == identity && at(y, x) == identity)
                .ok_or_else(|| GoursatError::InvalidTable(format!("{x} has no inverse")))?;
            inverse[x] = inv;
        }
        let check = |a: usize, b: usize, c: usize| at(at(a, b), c) == at(a, at(b, c));
        if n <= 32 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !check(a, b, c) {
                            return Err(GoursatError::InvalidTable(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            // Deterministic sample: a fixed multiplicative stride walk.
            let mut s = 0usize;
            for _ in 0..20_000 {
                s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                let a = (s >> 33) % n;
                let b = (s >> 17) % n;
                let c = s % n;
                if !check(a, b, c) {
                    return Err(GoursatError::InvalidTable(format!(
                        "associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
        Ok(MultTable { order: n, table, identity, inverse })
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i * self.order + j]
    }

    pub fn inv(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// Order of an element.
    pub fn element_order(&self, x: usize) -> usize {
        let mut p = x;
        let mut m = 1;
        while p != self.identity {
            p = self.mul(p, x);
            m += 1;
        }
        m
    }

    /// The cyclic group of order n.
    pub fn cyclic(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        MultTable::new(rows).expect("cyclic table is a group")
    }

    /// The symmetric group on n letters (permutations in lexicographic
    /// order, identity first).
    pub fn symmetric(n: usize) -> Self {
        assert!(n >= 1 && n <= 5, "symmetric group size out of supported range");
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut p: Vec<usize> = (0..n).collect();
        loop {
            perms.push(p.clone());
            // Next lexicographic permutation.
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
            p.swap(i, j);
            p[i + 1..].reverse();
        }
        let index: BTreeMap<Vec<usize>, usize> =
            perms.iter().cloned().enumerate().map(|(i, q)| (q, i)).collect();
        let rows = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| {
                        // a after b.
                        let composed: Vec<usize> = (0..n).map(|k| a[b[k]]).collect();
                        index[&composed]
                    })
                    .collect()
            })
            .collect();
        MultTable::new(rows).expect("symmetric table is a group")
    }

    /// Direct product as a single table, code i*|B| + j.
    pub fn direct_product(a: &MultTable, b: &MultTable) -> Self {
        let (na, nb) = (a.order, b.order);
        let rows = (0..na * nb)
            .map(|x| {
                (0..na * nb)
                    .map(|y| a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb))
                    .collect()
            })
            .collect();
        MultTable::new(rows).expect("product table is a group")
    }
}

/// A direct product of factor groups; elements are mixed-radix codes with
/// the first factor most significant.
#[derive(Debug, Clone)]
pub struct ProductGroup {
    pub factors: Vec<MultTable>,
    pub order: usize,
}

impl ProductGroup {
    pub fn new(factors: Vec<MultTable>) -> Self {
        let order = factors.iter().fold(1usize, |acc, f| {
            acc.checked_mul(f.order).expect("ambient order overflows")
        });
        ProductGroup { factors, order }
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn encode(&self, slots: &[usize]) -> usize {
        debug_assert_eq!(slots.len(), self.factors.len());
        let mut code = 0;
        for (f, &s) in self.factors.iter().zip(slots) {
            debug_assert!(s < f.order);
            code = code * f.order + s;
        }
        code
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut slots = vec![0usize; self.factors.len()];
        for (i, f) in self.factors.iter().enumerate().rev() {
            slots[i] = code % f.order;
            code /= f.order;
        }
        slots
    }

    pub fn identity(&self) -> usize {
        let slots: Vec<usize> = self.factors.iter().map(|f| f.identity).collect();
        self.encode(&slots)
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        let (a, b) = (self.decode(x), self.decode(y));
        let slots: Vec<usize> =
            self.factors.iter().enumerate().map(|(i, f)| f.mul(a[i], b[i])).collect();
        self.encode(&slots)
    }

    pub fn inv(&self, x: usize) -> usize {
        let a = self.decode(x);
        let slots: Vec<usize> =
            self.factors.iter().enumerate().map(|(i, f)| f.inv(a[i])).collect();
        self.encode(&slots)
    }
}

/// An explicit subgroup of a `ProductGroup`, elements sorted by code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupElements {
    pub elements: Vec<usize>,
}

impl SubgroupElements {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, code: usize) -> bool {
        self.elements.binary_search(&code).is_ok()
    }
}

/// Smallest subgroup containing the generators, by breadth-first closure
/// under right multiplication (finite, so inverses come for free).
pub fn closure(group: &ProductGroup, generators: &[usize]) -> Result<SubgroupElements, GoursatError> {
    let mut seen = BTreeSet::new();
    seen.insert(group.identity());
    let mut frontier = vec![group.identity()];
    while let Some(x) = frontier.pop() {
        for &g in generators {
            let y = group.mul(x, g);
            if seen.insert(y) {
                if seen.len() > CLOSURE_CAP {
                    return Err(GoursatError::OrderBudgetExceeded { cap: CLOSURE_CAP });
                }
                frontier.push(y);
            }
        }
    }
    Ok(SubgroupElements { elements: seen.into_iter().collect() })
}

fn assert_normal_in(
    group: &ProductGroup,
    g: &SubgroupElements,
    n: &SubgroupElements,
) -> Result<(), GoursatError> {
    let work = g.order().saturating_mul(n.order());
    let conjugate_ok = |x: usize, s: usize| {
        let c = group.mul(group.mul(x, s), group.inv(x));
        n.contains(c)
    };
    if work <= SWEEP_CAP {
        for &x in &g.elements {
            for &s in &n.elements {
                if !conjugate_ok(x, s) {
                    return Err(GoursatError::NotNormal { element: s, conjugator: x });
                }
            }
        }
    } else {
        let mut s = 1usize;
        for _ in 0..100_000 {
            s = s.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
            let x = g.elements[(s >> 32) % g.order()];
            let e = n.elements[s % n.order()];
            if !conjugate_ok(x, e) {
                return Err(GoursatError::NotNormal { element: e, conjugator: x });
            }
        }
    }
    Ok(())
}

/// Elements of G acting as the identity outside `keep_slots`; always
/// normal in G (kernel of a projection), which is re-verified by sweep.
pub fn slice_subgroup(
    group: &ProductGroup,
    g: &SubgroupElements,
    keep_slots: &[usize],
) -> SubgroupElements {
    let keep: BTreeSet<usize> = keep_slots.iter().copied().collect();
    let elements: Vec<usize> = g
        .elements
        .iter()
        .copied()
        .filter(|&x| {
            group
                .decode(x)
                .iter()
                .enumerate()
                .all(|(i, &s)| keep.contains(&i) || s == group.factors[i].identity)
        })
        .collect();
    let slice = SubgroupElements { elements };
    assert_normal_in(group, g, &slice).expect("slice subgroups are normal by construction");
    slice
}

/// Set product of normal subgroups of G; verified to be a subgroup and
/// normal in G.
pub fn product_subgroup(
    group: &ProductGroup,
    g: &SubgroupElements,
    parts: &[&SubgroupElements],
) -> Result<SubgroupElements, GoursatError> {
    for p in parts {
        debug_assert!(p.elements.iter().all(|&x| g.contains(x)));
    }
    let mut acc: BTreeSet<usize> = BTreeSet::new();
    acc.insert(group.identity());
    for p in parts {
        let mut next = BTreeSet::new();
        for &x in &acc {
            for &y in &p.elements {
                next.insert(group.mul(x, y));
            }
        }
        acc = next;
    }
    let n = SubgroupElements { elements: acc.into_iter().collect() };
    // Subgroup verification: closure under products (identity and
    // inverses follow for a finite nonempty closed set).
    if n.order().saturating_mul(n.order()) <= SWEEP_CAP {
        for &x in &n.elements {
            for &y in &n.elements {
                if !n.contains(group.mul(x, y)) {
                    return Err(GoursatError::NotASubgroup);
                }
            }
        }
    }
    assert_normal_in(group, g, &n)?;
    Ok(n)
}

/// A quotient G/N as canonical minimal coset representatives plus a
/// validated coset multiplication table.
#[derive(Debug, Clone)]
pub struct QuotientStructure {
    pub reps: Vec<usize>,
    pub coset_index: BTreeMap<usize, usize>,
    pub order: usize,
    table: MultTable,
}

impl QuotientStructure {
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table.mul(i, j)
    }

    pub fn identity(&self) -> usize {
        self.table.identity
    }

    pub fn as_mult_table(&self) -> &MultTable {
        &self.table
    }
}

/// Quotient of G by a normal subgroup N (normality verified), with the
/// coset table revalidated as a group table.
pub fn quotient(
    group: &ProductGroup,
    g: &SubgroupElements,
    n: &SubgroupElements,
) -> Result<QuotientStructure, GoursatError> {
    for &x in &n.elements {
        if !g.contains(x) {
            return Err(GoursatError::CheckFailed(format!("{x} in N but not in G")));
        }
    }
    assert_normal_in(group, g, n)?;
    let mut coset_index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut reps = Vec::new();
    for &x in &g.elements {
        if coset_index.contains_key(&x) {
            continue;
        }
        let idx = reps.len();
        reps.push(x);
        for &nn in &n.elements {
            coset_index.insert(group.mul(x, nn), idx);
        }
    }
    let k = reps.len();
    if g.order() != n.order() * k {
        return Err(GoursatError::CheckFailed(format!(
            "|G| = {} but |N| * |G/N| = {}",
            g.order(),
            n.order() * k
        )));
    }
    let rows: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..k).map(|j| coset_index[&group.mul(reps[i], reps[j])]).collect())
        .collect();
    let table = MultTable::new(rows)
        .map_err(|e| GoursatError::CheckFailed(format!("coset table not a group: {e}")))?;
    Ok(QuotientStructure { reps, coset_index, order: k, table })
}

/// Projection of a subgroup onto a subset of factor slots, together with
/// the product group it lives in.
pub fn project(
    group: &ProductGroup,
    g: &SubgroupElements,
    slots: &[usize],
) -> (ProductGroup, SubgroupElements) {
    let sub = ProductGroup::new(slots.iter().map(|&i| group.factors[i].clone()).collect());
    let mut set = BTreeSet::new();
    for &x in &g.elements {
        let full = group.decode(x);
        let picked: Vec<usize> = slots.iter().map(|&i| full[i]).collect();
        set.insert(sub.encode(&picked));
    }
    (sub, SubgroupElements { elements: set.into_iter().collect() })
}

/// Which normal subgroup the analysis quotients by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoursatMode {
    /// N built from the two slices through the last factor (three-factor
    /// input); relates the first two factor quotients.
    Asymmetric,
    /// N built from all pair slices; relates all factor quotients and
    /// verifies the diagonal embedding.
    Symmetric,
}

/// Per-factor projected quotient sizes.
#[derive(Debug, Clone, Serialize)]
pub struct QuotientInfo {
    pub factor: usize,
    pub g_order: usize,
    pub n_order: usize,
    pub quotient_order: usize,
}

/// Everything the projected-quotient analysis verifies.
#[derive(Debug, Clone, Serialize)]
pub struct GoursatReport {
    pub mode: String,
    pub g_order: usize,
    pub n_order: usize,
    pub quotient_order: usize,
    pub factor_quotients: Vec<QuotientInfo>,
    /// Order of the set of projected coset tuples; equals quotient_order.
    pub h_order: usize,
    /// The explicit coset map between factor quotients passed
    /// well-definedness, homomorphism, surjectivity, and kernel checks.
    pub alpha_verified: bool,
    /// The per-factor maps from G/N passed bijectivity and homomorphism
    /// checks (symmetric and two-factor modes).
    pub diagonal_verified: Option<bool>,
}

struct FactorData {
    sub: ProductGroup,
    g: SubgroupElements,
    n: SubgroupElements,
    q: QuotientStructure,
}

/// Verifies the projected-quotient isomorphism data of a subgroup of a
/// 2- or 3-factor product.  All claims are guaranteed by theorems, so any
/// failure is reported as `CheckFailed`.
pub fn goursat_check(
    group: &ProductGroup,
    g: &SubgroupElements,
    mode: GoursatMode,
) -> Result<GoursatReport, GoursatError> {
    let nf = group.n_factors();
    let (n, reported, pairs): (SubgroupElements, Vec<usize>, Vec<(usize, usize)>) = match (nf, mode)
    {
        (2, _) => {
            let s_a = slice_subgroup(group, g, &[0]);
            let s_b = slice_subgroup(group, g, &[1]);
            (product_subgroup(group, g, &[&s_a, &s_b])?, vec![0, 1], vec![(0, 1)])
        }
        (3, GoursatMode::Asymmetric) => {
            let s_ac = slice_subgroup(group, g, &[0, 2]);
            let s_bc = slice_subgroup(group, g, &[1, 2]);
            (product_subgroup(group, g, &[&s_ac, &s_bc])?, vec![0, 1], vec![(0, 1)])
        }
        (3, GoursatMode::Symmetric) => {
            let s_ab = slice_subgroup(group, g, &[0, 1]);
            let s_ac = slice_subgroup(group, g, &[0, 2]);
            let s_bc = slice_subgroup(group, g, &[1, 2]);
            (
                product_subgroup(group, g, &[&s_ab, &s_ac, &s_bc])?,
                vec![0, 1, 2],
                vec![(0, 1), (0, 2), (1, 2)],
            )
        }
        _ => return Err(GoursatError::FactorCountUnsupported(nf)),
    };

    let q = quotient(group, g, &n)?;

    let mut data: BTreeMap<usize, FactorData> = BTreeMap::new();
    for &x in &reported {
        let (sub, gx) = project(group, g, &[x]);
        let (_, nx) = project(group, &n, &[x]);
        let qx = quotient(&sub, &gx, &nx)?;
        data.insert(x, FactorData { sub, g: gx, n: nx, q: qx });
    }

    // Explicit coset map between each reported factor pair, constructed
    // exactly as in the proof: alpha(a) = [any b appearing with a].
    for &(x, y) in &pairs {
        let fx = &data[&x];
        let fy = &data[&y];
        let mut alpha: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in &g.elements {
            let slots = group.decode(e);
            let a = slots[x];
            let b = slots[y];
            let cb = fy.q.coset_index[&fy.sub.encode(&[b])];
            match alpha.get(&fx.sub.encode(&[a])) {
                None => {
                    alpha.insert(fx.sub.encode(&[a]), cb);
                }
                Some(&prev) if prev != cb => {
                    return Err(GoursatError::CheckFailed(format!(
                        "map {x}->{y} not well-defined at element {e}"
                    )));
                }
                _ => {}
            }
        }
        for &a1 in &fx.g.elements {
            for &a2 in &fx.g.elements {
                let lhs = alpha[&fx.sub.mul(a1, a2)];
                let rhs = fy.q.mul(alpha[&a1], alpha[&a2]);
                if lhs != rhs {
                    return Err(GoursatError::CheckFailed(format!(
                        "map {x}->{y} not a homomorphism at ({a1},{a2})"
                    )));
                }
            }
        }
        let image: BTreeSet<usize> = alpha.values().copied().collect();
        if image.len() != fy.q.order {
            return Err(GoursatError::CheckFailed(format!("map {x}->{y} not surjective")));
        }
        let identity_coset = fy.q.coset_index[&fy.sub.identity()];
        let kernel: BTreeSet<usize> =
            alpha.iter().filter(|(_, &c)| c == identity_coset).map(|(&a, _)| a).collect();
        let n_x: BTreeSet<usize> = fx.n.elements.iter().copied().collect();
        if kernel != n_x {
            return Err(GoursatError::CheckFailed(format!("kernel of map {x}->{y} is not N_{x}")));
        }
    }

    // H: distinct tuples of projected coset indices; isomorphic to G/N.
    let mut h: BTreeSet<Vec<usize>> = BTreeSet::new();
    for &e in &g.elements {
        let slots = group.decode(e);
        let tuple: Vec<usize> = reported
            .iter()
            .map(|&x| {
                let fx = &data[&x];
                fx.q.coset_index[&fx.sub.encode(&[slots[x]])]
            })
            .collect();
        h.insert(tuple);
    }
    if h.len() != q.order {
        return Err(GoursatError::CheckFailed(format!(
            "|H| = {} but |G/N| = {}",
            h.len(),
            q.order
        )));
    }

    // Diagonal embedding: the per-factor maps from G/N are isomorphisms.
    let check_diagonal = nf == 2 || mode == GoursatMode::Symmetric;
    let diagonal_verified = if check_diagonal {
        for &x in &reported {
            let fx = &data[&x];
            let mut theta = vec![usize::MAX; q.order];
            for &e in &g.elements {
                let slots = group.decode(e);
                let from = q.coset_index[&e];
                let to = fx.q.coset_index[&fx.sub.encode(&[slots[x]])];
                if theta[from] == usize::MAX {
                    theta[from] = to;
                } else if theta[from] != to {
                    return Err(GoursatError::CheckFailed(format!(
                        "factor {x} map from G/N not well-defined"
                    )));
                }
            }
            let image: BTreeSet<usize> = theta.iter().copied().collect();
            if image.len() != q.order || fx.q.order != q.order {
                return Err(GoursatError::CheckFailed(format!("factor {x} map not bijective")));
            }
            for i in 0..q.order {
                for j in 0..q.order {
                    if theta[q.mul(i, j)] != fx.q.mul(theta[i], theta[j]) {
                        return Err(GoursatError::CheckFailed(format!(
                            "factor {x} map not a homomorphism"
                        )));
                    }
                }
            }
        }
        Some(true)
    } else {
        None
    };

    Ok(GoursatReport {
        mode: match (nf, mode) {
            (2, _) => "two_party".into(),
            (_, GoursatMode::Asymmetric) => "asymmetric".into(),
            (_, GoursatMode::Symmetric) => "symmetric".into(),
        },
        g_order: g.order(),
        n_order: n.order(),
        quotient_order: q.order,
        factor_quotients: reported
            .iter()
            .map(|&x| QuotientInfo {
                factor: x,
                g_order: data[&x].g.order(),
                n_order: data[&x].n.order(),
                quotient_order: data[&x].q.order,
            })
            .collect(),
        h_order: h.len(),
        alpha_verified: true,
        diagonal_verified,
    })
}

/// Rebuilds the subgroup of A x B from its projected quotients and the
/// coset isomorphism: G = {(a,b) with theta([a]) = [b]}.
///
/// `theta` maps coset indices of G_A/N_A (canonical representatives, as
/// produced by `quotient`) to coset indices of G_B/N_B.
pub fn reconstruct_from_pair(
    group_a: &ProductGroup,
    g_a: &SubgroupElements,
    n_a: &SubgroupElements,
    group_b: &ProductGroup,
    g_b: &SubgroupElements,
    n_b: &SubgroupElements,
    theta: &[usize],
) -> Result<(ProductGroup, SubgroupElements), GoursatError> {
    let q_a = quotient(group_a, g_a, n_a)?;
    let q_b = quotient(group_b, g_b, n_b)?;
    if theta.len() != q_a.order {
        return Err(GoursatError::NotAnIsomorphism(format!(
            "map has {} entries for {} cosets",
            theta.len(),
            q_a.order
        )));
    }
    let image: BTreeSet<usize> = theta.iter().copied().collect();
    if image.len() != q_a.order || q_a.order != q_b.order || image.iter().any(|&i| i >= q_b.order) {
        return Err(GoursatError::NotAnIsomorphism("map is not a bijection".into()));
    }
    for i in 0..q_a.order {
        for j in 0..q_a.order {
            if theta[q_a.mul(i, j)] != q_b.mul(theta[i], theta[j]) {
                return Err(GoursatError::NotAnIsomorphism(format!(
                    "map breaks multiplication at cosets ({i},{j})"
                )));
            }
        }
    }
    let mut factors = group_a.factors.clone();
    factors.extend(group_b.factors.clone());
    let combined = ProductGroup::new(factors);
    let mut elements = Vec::new();
    for &a in &g_a.elements {
        let ca = q_a.coset_index[&a];
        for &b in &g_b.elements {
            if theta[ca] == q_b.coset_index[&b] {
                elements.push(a * group_b.order + b);
            }
        }
    }
    elements.sort_unstable();
    debug_assert_eq!(elements.len(), n_a.order() * n_b.order() * q_a.order);
    Ok((combined, SubgroupElements { elements }))
}

/// Greedy generating sequence: repeatedly adjoin the smallest element not
/// yet generated.
fn generating_sequence(t: &MultTable) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut span = vec![t.identity];
    while span.len() < t.order {
        let next = (0..t.order).find(|x| !span.contains(x)).unwrap();
        gens.push(next);
        // Re-close.
        let mut seen: BTreeSet<usize> = span.iter().copied().collect();
        let mut frontier: Vec<usize> = seen.iter().copied().collect();
        while let Some(x) = frontier.pop() {
            for &g in &gens {
                let y = t.mul(x, g);
                if seen.insert(y) {
                    frontier.push(y);
                }
            }
            for &s in &span {
                let y = t.mul(x, s);
                if seen.insert(y) {
                    frontier.push(y);
                }
            }
        }
        span = seen.into_iter().collect();
    }
    gens
}

fn hom_from_images(t1: &MultTable, t2: &MultTable, gens: &[usize], images: &[usize]) -> bool {
    let n = t1.order;
    let mut f = vec![usize::MAX; n];
    f[t1.identity] = t2.identity;
    let mut frontier = vec![t1.identity];
    while let Some(x) = frontier.pop() {
        for (g, &img) in gens.iter().zip(images) {
            let y = t1.mul(x, *g);
            let fy = t2.mul(f[x], img);
            if f[y] == usize::MAX {
                f[y] = fy;
                frontier.push(y);
            } else if f[y] != fy {
                return false;
            }
        }
    }
    if f.iter().any(|&v| v == usize::MAX) {
        return false;
    }
    let image: BTreeSet<usize> = f.iter().copied().collect();
    if image.len() != n {
        return false;
    }
    for x in 0..n {
        for y in 0..n {
            if f[t1.mul(x, y)] != t2.mul(f[x], f[y]) {
                return false;
            }
        }
    }
    true
}

/// Brute-force isomorphism test by backtracking over generator images;
/// intended as an independent oracle for orders up to about 24.
pub fn are_isomorphic(t1: &MultTable, t2: &MultTable) -> bool {
    if t1.order != t2.order {
        return false;
    }
    let mut orders1: Vec<usize> = (0..t1.order).map(|x| t1.element_order(x)).collect();
    let mut orders2: Vec<usize> = (0..t2.order).map(|x| t2.element_order(x)).collect();
    let by_order2 = {
        let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &o) in orders2.iter().enumerate() {
            m.entry(o).or_default().push(x);
        }
        m
    };
    orders1.sort_unstable();
    orders2.sort_unstable();
    if orders1 != orders2 {
        return false;
    }
    let gens = generating_sequence(t1);
    let candidates: Vec<&Vec<usize>> = gens
        .iter()
        .map(|&g| by_order2.get(&t1.element_order(g)).expect("order multisets matched"))
        .collect();
    let mut images = vec![0usize; gens.len()];
    fn backtrack(
        t1: &MultTable,
        t2: &MultTable,
        gens: &[usize],
        candidates: &[&Vec<usize>],
        images: &mut Vec<usize>,
        depth: usize,
    ) -> bool {
        if depth == gens.len() {
            return hom_from_images(t1, t2, gens, images);
        }
        for &c in candidates[depth] {
            images[depth] = c;
            if backtrack(t1, t2, gens, candidates, images, depth + 1) {
                return true;
            }
        }
        false
    }
    backtrack(t1, t2, &gens, &candidates, &mut images, 0)
}

/// JSON form of a product group plus subgroup generators.
#[derive(Debug, Deserialize)]
pub struct FactorSpec {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
pub struct FiniteGroupSpec {
    pub factors: Vec<FactorSpec>,
    pub generators: Vec<Vec<usize>>,
}

/// Parses and validates a group spec, returning the ambient product and
/// encoded generators.
pub fn load_spec(json: &str) -> Result<(ProductGroup, Vec<usize>), GoursatError> {
    let spec: FiniteGroupSpec =
        serde_json::from_str(json).map_err(|e| GoursatError::BadSpec(e.to_string()))?;
    if spec.factors.is_empty() {
        return Err(GoursatError::BadSpec("no factors".into()));
    }
    let mut factors = Vec::new();
    for f in &spec.factors {
        if f.table.len() != f.order {
            return Err(GoursatError::BadSpec(format!(
                "factor declares order {} but table has {} rows",
                f.order,
                f.table.len()
            )));
        }
        factors.push(MultTable::new(f.table.clone())?);
    }
    let group = ProductGroup::new(factors);
    let mut gens = Vec::new();
    for tuple in &spec.generators {
        if tuple.len() != group.n_factors() {
            return Err(GoursatError::BadSpec(format!(
                "generator tuple {tuple:?} has wrong arity"
            )));
        }
        for (slot, f) in tuple.iter().zip(&group.factors) {
            if *slot >= f.order {
                return Err(GoursatError::BadSpec(format!("generator entry {slot} out of range")));
            }
        }
        gens.push(group.encode(tuple));
    }
    Ok((group, gens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(n: usize) -> MultTable {
        MultTable::cyclic(n)
    }

    #[test]
    fn table_validation_rejects_garbage() {
        // Entry out of range.
        assert!(MultTable::new(vec![vec![0, 1], vec![1, 2]]).is_err());
        // Latin square violated.
        assert!(MultTable::new(vec![vec![0, 0], vec![1, 1]]).is_err());
        // Latin square but no identity: shifted rows.
        assert!(MultTable::new(vec![vec![1, 0], vec![0, 1]]).is_ok());
        // 5-element latin square that is not associative (no valid group
        // of order 5 other than cyclic; this square has an identity).
        let bad = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(MultTable::new(bad), Err(GoursatError::InvalidTable(_))));
    }

    #[test]
    fn element_orders_are_correct() {
        let z4 = z(4);
        assert_eq!(z4.element_order(0), 1);
        assert_eq!(z4.element_order(1), 4);
        assert_eq!(z4.element_order(2), 2);
        let s3 = MultTable::symmetric(3);
        let mut orders: Vec<usize> = (0..6).map(|x| s3.element_order(x)).collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![1, 2, 2, 2, 3, 3]);
        let v4 = MultTable::direct_product(&z(2), &z(2));
        assert_eq!(v4.order, 4);
        assert!((1..4).all(|x| v4.element_order(x) == 2));
    }

    #[test]
    fn closure_examples() {
        // Diagonal flip in three copies of the two-element group.
        let g3 = ProductGroup::new(vec![z(2), z(2), z(2)]);
        let diag = closure(&g3, &[g3.encode(&[1, 1, 1])]).unwrap();
        assert_eq!(diag.order(), 2);

        let g2 = ProductGroup::new(vec![z(2), z(2)]);
        let full = closure(&g2, &[g2.encode(&[1, 0]), g2.encode(&[0, 1])]).unwrap();
        assert_eq!(full.order(), 4);

        // Diagonal copy of the permutation group from two generators.
        let s3 = MultTable::symmetric(3);
        let gs = ProductGroup::new(vec![s3.clone(), s3.clone()]);
        let transposition = (0..6).find(|&x| s3.element_order(x) == 2).unwrap();
        let threecycle = (0..6).find(|&x| s3.element_order(x) == 3).unwrap();
        let diag_s3 = closure(
            &gs,
            &[
                gs.encode(&[transposition, transposition]),
                gs.encode(&[threecycle, threecycle]),
            ],
        )
        .unwrap();
        assert_eq!(diag_s3.order(), 6);
    }

    #[test]
    fn closure_budget_guard() {
        let g = ProductGroup::new(vec![z(10); 6]);
        let gens: Vec<usize> = (0..6)
            .map(|i| {
                let mut slots = vec![0; 6];
                slots[i] = 1;
                g.encode(&slots)
            })
            .collect();
        assert!(matches!(
            closure(&g, &gens),
            Err(GoursatError::OrderBudgetExceeded { .. })
        ));
    }

    #[test]
    fn slice_examples() {
        let g3 = ProductGroup::new(vec![z(2), z(2), z(2)]);
        let diag = closure(&g3, &[g3.encode(&[1, 1, 1])]).unwrap();
        assert_eq!(slice_subgroup(&g3, &diag, &[0, 1]).order(), 1);

        let g2 = ProductGroup::new(vec![z(2), z(2)]);
        let full = closure(&g2, &[g2.encode(&[1, 0]), g2.encode(&[0, 1])]).unwrap();
        assert_eq!(slice_subgroup(&g2, &full, &[0]).order(), 2);

        // Graph of the parity map out of the four-element cyclic group:
        // the first-slot slice is its kernel {0, 2}.
        let g42 = ProductGroup::new(vec![z(4), z(2)]);
        let graph = closure(&g42, &[g42.encode(&[1, 1])]).unwrap();
        assert_eq!(graph.order(), 4);
        let sa = slice_subgroup(&g42, &graph, &[0]);
        assert_eq!(sa.elements, vec![g42.encode(&[0, 0]), g42.encode(&[2, 0])]);
    }

    #[test]
    fn product_subgroup_examples() {
        let g2 = ProductGroup::new(vec![z(2), z(2)]);
        let full = closure(&g2, &[g2.encode(&[1, 0]), g2.encode(&[0, 1])]).unwrap();
        let sa = slice_subgroup(&g2, &full, &[0]);
        let sb = slice_subgroup(&g2, &full, &[1]);
        assert_eq!(product_subgroup(&g2, &full, &[&sa, &sb]).unwrap().order(), 4);

        let g3 = ProductGroup::new(vec![z(2), z(2), z(2)]);
        let diag = closure(&g3, &[g3.encode(&[1, 1, 1])]).unwrap();
        let parts: Vec<SubgroupElements> = [[0, 1], [0, 2], [1, 2]]
            .iter()
            .map(|m| slice_subgroup(&g3, &diag, m))
            .collect();
        let refs: Vec<&SubgroupElements> = parts.iter().collect();
        assert_eq!(product_subgroup(&g3, &diag, &refs).unwrap().order(), 1);
    }

    #[test]
    fn quotient_examples() {
        let g4 = ProductGroup::new(vec![z(4)]);
        let whole = closure(&g4, &[g4.encode(&[1])]).unwrap();
        let half = closure(&g4, &[g4.encode(&[2])]).unwrap();
        let q = quotient(&g4, &whole, &half).unwrap();
        assert_eq!(q.order, 2);
        let q_triv = quotient(&g4, &whole, &whole).unwrap();
        assert_eq!(q_triv.order, 1);

        let s3 = MultTable::symmetric(3);
        let gs = ProductGroup::new(vec![s3.clone(), s3.clone()]);
        let transposition = (0..6).find(|&x| s3.element_order(x) == 2).unwrap();
        let threecycle = (0..6).find(|&x| s3.element_order(x) == 3).unwrap();
        let diag = closure(
            &gs,
            &[
                gs.encode(&[transposition, transposition]),
                gs.encode(&[threecycle, threecycle]),
            ],
        )
        .unwrap();
        let trivial = SubgroupElements { elements: vec![gs.identity()] };
        let q = quotient(&gs, &diag, &trivial).unwrap();
        assert_eq!(q.order, 6);
        assert!(are_isomorphic(q.as_mult_table(), &s3));

        // Non-normal subgroup rejected: a transposition subgroup inside
        // the permutation group.
        let gs3 = ProductGroup::new(vec![s3.clone()]);
        let whole = closure(&gs3, &[transposition, threecycle]).unwrap();
        assert_eq!(whole.order(), 6);
        let sub2 = closure(&gs3, &[transposition]).unwrap();
        assert!(matches!(
            quotient(&gs3, &whole, &sub2),
            Err(GoursatError::NotNormal { .. })
        ));
    }

    #[test]
    fn goursat_check_examples() {
        // Diagonal two-element subgroup of a triple product.
        let g3 = ProductGroup::new(vec![z(2), z(2), z(2)]);
        let diag = closure(&g3, &[g3.encode(&[1, 1, 1])]).unwrap();
        let rep = goursat_check(&g3, &diag, GoursatMode::Symmetric).unwrap();
        assert_eq!(rep.n_order, 1);
        assert_eq!(rep.quotient_order, 2);
        assert_eq!(rep.h_order, 2);
        assert!(rep.factor_quotients.iter().all(|f| f.quotient_order == 2));
        assert_eq!(rep.diagonal_verified, Some(true));

        // Full product: everything collapses.
        let gf = ProductGroup::new(vec![z(2), z(3), z(2)]);
        let gens: Vec<usize> =
            vec![gf.encode(&[1, 0, 0]), gf.encode(&[0, 1, 0]), gf.encode(&[0, 0, 1])];
        let full = closure(&gf, &gens).unwrap();
        assert_eq!(full.order(), 12);
        for mode in [GoursatMode::Asymmetric, GoursatMode::Symmetric] {
            let rep = goursat_check(&gf, &full, mode).unwrap();
            assert_eq!(rep.quotient_order, 1);
            assert!(rep.factor_quotients.iter().all(|f| f.quotient_order == 1));
        }

        // Graph of an automorphism of the permutation group.
        let s3 = MultTable::symmetric(3);
        let gs = ProductGroup::new(vec![s3.clone(), s3.clone()]);
        let transposition = (0..6).find(|&x| s3.element_order(x) == 2).unwrap();
        let threecycle = (0..6).find(|&x| s3.element_order(x) == 3).unwrap();
        let diag = closure(
            &gs,
            &[
                gs.encode(&[transposition, transposition]),
                gs.encode(&[threecycle, threecycle]),
            ],
        )
        .unwrap();
        let rep = goursat_check(&gs, &diag, GoursatMode::Symmetric).unwrap();
        assert_eq!(rep.quotient_order, 6);
        assert_eq!(rep.h_order, 6);
        assert!(rep.alpha_verified);
    }

    #[test]
    fn reconstruction_examples() {
        // Diagonal two-element group from two trivial quotients.
        let ga = ProductGroup::new(vec![z(2)]);
        let whole_a = closure(&ga, &[1]).unwrap();
        let triv = SubgroupElements { elements: vec![0] };
        let (comb, rebuilt) =
            reconstruct_from_pair(&ga, &whole_a, &triv, &ga, &whole_a, &triv, &[0, 1]).unwrap();
        assert_eq!(rebuilt.order(), 2);
        assert!(rebuilt.contains(comb.encode(&[1, 1])));

        // Four-element cyclic over two-element: the orders multiply to
        // |N_A| * |N_B| * |G_A/N_A| = 2 * 1 * 2 = 4.
        let g4 = ProductGroup::new(vec![z(4)]);
        let whole4 = closure(&g4, &[1]).unwrap();
        let half4 = closure(&g4, &[2]).unwrap();
        let g2 = ProductGroup::new(vec![z(2)]);
        let whole2 = closure(&g2, &[1]).unwrap();
        let triv2 = SubgroupElements { elements: vec![0] };
        let (comb, rebuilt) =
            reconstruct_from_pair(&g4, &whole4, &half4, &g2, &whole2, &triv2, &[0, 1]).unwrap();
        assert_eq!(rebuilt.order(), 4);
        for (a, b) in [(0usize, 0usize), (2, 0), (1, 1), (3, 1)] {
            assert!(rebuilt.contains(comb.encode(&[a, b])));
        }

        // A non-homomorphic coset map is rejected.
        let bad = reconstruct_from_pair(
            &g4,
            &whole4,
            &SubgroupElements { elements: vec![0] },
            &g4,
            &whole4,
            &SubgroupElements { elements: vec![0] },
            &[0, 1, 3, 2],
        );
        assert!(matches!(bad, Err(GoursatError::NotAnIsomorphism(_))));
    }

    #[test]
    fn spec_loading() {
        let json = r#"{
            "factors": [
                {"order": 2, "table": [[0,1],[1,0]]},
                {"order": 2, "table": [[0,1],[1,0]]}
            ],
            "generators": [[1,1]]
        }"#;
        let (group, gens) = load_spec(json).unwrap();
        assert_eq!(group.order, 4);
        let g = closure(&group, &gens).unwrap();
        assert_eq!(g.order(), 2);
        assert!(load_spec("{\"factors\": [], \"generators\": []}").is_err());
        let bad_arity = r#"{
            "factors": [{"order": 2, "table": [[0,1],[1,0]]}],
            "generators": [[1,1]]
        }"#;
        assert!(matches!(load_spec(bad_arity), Err(GoursatError::BadSpec(_))));
    }

    #[test]
    fn isomorphism_oracle_sanity() {
        let z4 = z(4);
        let v4 = MultTable::direct_product(&z(2), &z(2));
        assert!(!are_isomorphic(&z4, &v4));
        assert!(are_isomorphic(&z4, &z(4)));
        let z6 = z(6);
        let z2xz3 = MultTable::direct_product(&z(2), &z(3));
        assert!(are_isomorphic(&z6, &z2xz3));
        let s3 = MultTable::symmetric(3);
        assert!(!are_isomorphic(&z6, &s3));
        let s4 = MultTable::symmetric(4);
        assert!(are_isomorphic(&s4, &MultTable::symmetric(4)));
    }

    fn pool() -> Vec<MultTable> {
        vec![
            z(2),
            z(3),
            z(4),
            MultTable::symmetric(3),
            MultTable::direct_product(&z(2), &z(2)),
        ]
    }

    /// Randomized instances exercised in both modes, with the invariants
    /// |G| = |N| |G/N| and |H| = |G/N|, plus reconstruction round-trips
    /// for the two-factor cases.
    #[test]
    fn randomized_instances() {
        let pool = pool();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for instance in 0..60 {
            let nf = if instance % 2 == 0 { 3 } else { 2 };
            let factors: Vec<MultTable> =
                (0..nf).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
            let group = ProductGroup::new(factors);
            let n_gens = rng.gen_range(1..=2);
            let gens: Vec<usize> = (0..n_gens).map(|_| rng.gen_range(0..group.order)).collect();
            let g = closure(&group, &gens).unwrap();

            let modes: &[GoursatMode] = if nf == 3 {
                &[GoursatMode::Asymmetric, GoursatMode::Symmetric]
            } else {
                &[GoursatMode::Symmetric]
            };
            for &mode in modes {
                let rep = goursat_check(&group, &g, mode).unwrap();
                assert_eq!(rep.g_order, rep.n_order * rep.quotient_order);
                assert_eq!(rep.h_order, rep.quotient_order);
                for f in &rep.factor_quotients {
                    assert_eq!(f.g_order, f.n_order * f.quotient_order);
                }
            }

            if nf == 2 {
                // Round-trip through the explicit reconstruction.
                let s_a = slice_subgroup(&group, &g, &[0]);
                let s_b = slice_subgroup(&group, &g, &[1]);
                let n = product_subgroup(&group, &g, &[&s_a, &s_b]).unwrap();
                let (sub_a, g_a) = project(&group, &g, &[0]);
                let (_, n_a) = project(&group, &n, &[0]);
                let (sub_b, g_b) = project(&group, &g, &[1]);
                let (_, n_b) = project(&group, &n, &[1]);
                let q_a = quotient(&sub_a, &g_a, &n_a).unwrap();
                let q_b = quotient(&sub_b, &g_b, &n_b).unwrap();
                let mut theta = vec![usize::MAX; q_a.order];
                for &e in &g.elements {
                    let slots = group.decode(e);
                    let ca = q_a.coset_index[&sub_a.encode(&[slots[0]])];
                    let cb = q_b.coset_index[&sub_b.encode(&[slots[1]])];
                    assert!(theta[ca] == usize::MAX || theta[ca] == cb);
                    theta[ca] = cb;
                }
                let (_, rebuilt) =
                    reconstruct_from_pair(&sub_a, &g_a, &n_a, &sub_b, &g_b, &n_b, &theta).unwrap();
                assert_eq!(rebuilt.elements, g.elements, "round trip must reproduce G");

                // Independent oracle: the two projected quotients really
                // are isomorphic as abstract groups.
                if q_a.order <= 24 {
                    assert!(are_isomorphic(q_a.as_mult_table(), q_b.as_mult_table()));
                }
            }
        }
    }
}
