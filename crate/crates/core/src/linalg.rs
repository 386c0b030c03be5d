//! Shared numerical linear algebra: nullspaces with explicit rank gaps,
//! deterministic span bases, Hermitian parameterizations, and matrix
//! functions used by the stabilizer solvers.
//!
//! All nullspace computations go through symmetric eigendecompositions of
//! Gram matrices rather than thin SVDs, so the full set of right singular
//! directions is available even when a matrix has more columns than rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Result of a real nullspace computation, including the singular values
/// on either side of the rank cut so callers can report how well separated
/// the decision was.
#[derive(Debug, Clone)]
pub struct Nullspace {
    /// Orthonormal basis of the (right) nullspace.
    pub basis: Vec<RVec>,
    /// Smallest singular value treated as nonzero, if any were kept.
    pub sv_kept_min: Option<f64>,
    /// Largest singular value treated as zero, if any were dropped.
    pub sv_dropped_max: Option<f64>,
    /// Largest singular value overall.
    pub sv_max: f64,
}

/// Orthonormal basis for the right nullspace of `m`, treating singular
/// values below `rel_tol * sv_max` as zero.  A zero matrix yields the full
/// coordinate basis.
///
/// Wide matrices are padded with zero rows before the decomposition: the
/// padding leaves singular values untouched but forces the factorization
/// to produce every right singular vector, so no nullspace direction can
/// be silently dropped.
pub fn real_nullspace(m: &RMat, rel_tol: f64) -> Nullspace {
    let p = m.ncols();
    if p == 0 {
        return Nullspace { basis: Vec::new(), sv_kept_min: None, sv_dropped_max: None, sv_max: 0.0 };
    }
    let work = if m.nrows() < p {
        let mut w = RMat::zeros(p, p);
        w.view_mut((0, 0), (m.nrows(), p)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let svs = svd.singular_values;
    let sv_max = svs[0];
    let mut basis = Vec::new();
    let mut sv_kept_min = None;
    let mut sv_dropped_max = None;
    for i in 0..p {
        let sv = svs[i];
        if sv_max == 0.0 || sv < rel_tol * sv_max {
            sv_dropped_max = Some(sv_dropped_max.map_or(sv, |m: f64| m.max(sv)));
            basis.push(v_t.row(i).transpose());
        } else {
            sv_kept_min = Some(sv_kept_min.map_or(sv, |m: f64| m.min(sv)));
        }
    }
    Nullspace { basis, sv_kept_min, sv_dropped_max, sv_max }
}

/// Noise floor of rank decisions made through a Gram matrix: forming
/// m^T m squares the spectrum, so a true zero resurfaces at roughly
/// sqrt(machine epsilon) relative to the largest singular value.
pub const GRAM_REL_FLOOR: f64 = 1e-7;

/// Nullspace from an already-accumulated Gram matrix `m^T m`, for callers
/// whose constraint matrix is too large to materialize.  The effective
/// threshold never drops below [`GRAM_REL_FLOOR`]; callers needing finer
/// resolution must supply the matrix itself to [`real_nullspace`].
pub fn real_nullspace_from_gram(gram: RMat, rel_tol: f64) -> Nullspace {
    let p = gram.ncols();
    let rel_tol = rel_tol.max(GRAM_REL_FLOOR);
    let eig = SymmetricEigen::new(gram);
    // Singular value of m = sqrt of eigenvalue of m^T m.
    let svs: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let sv_max = svs.iter().cloned().fold(0.0_f64, f64::max);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| svs[b].partial_cmp(&svs[a]).unwrap());

    let mut basis = Vec::new();
    let mut sv_kept_min = None;
    let mut sv_dropped_max = None;
    for &idx in &order {
        let sv = svs[idx];
        if sv_max == 0.0 || sv < rel_tol * sv_max {
            sv_dropped_max = Some(sv_dropped_max.map_or(sv, |m: f64| m.max(sv)));
            basis.push(eig.eigenvectors.column(idx).into_owned());
        } else {
            sv_kept_min = Some(sv_kept_min.map_or(sv, |m: f64| m.min(sv)));
        }
    }
    Nullspace { basis, sv_kept_min, sv_dropped_max, sv_max }
}

/// Nullspace of a complex matrix, with the same padding and threshold
/// conventions as [`real_nullspace`].
pub fn complex_nullspace(m: &CMat, rel_tol: f64) -> Vec<CVec> {
    let p = m.ncols();
    if p == 0 {
        return Vec::new();
    }
    let work = if m.nrows() < p {
        let mut w = CMat::zeros(p, p);
        w.view_mut((0, 0), (m.nrows(), p)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let svs = svd.singular_values;
    let sv_max = svs[0];
    let mut basis = Vec::new();
    for i in 0..p {
        if sv_max == 0.0 || svs[i] < rel_tol * sv_max {
            basis.push(v_t.row(i).adjoint());
        }
    }
    basis
}

/// Orthonormal basis for the span of `vecs`.  Directions whose singular
/// value falls below `rel_tol` times the largest are discarded.  The row
/// space is read off a direct decomposition of the stacked vectors, so
/// the threshold resolves down to machine precision.
///
/// The stack is padded with zero rows to square before decomposing; as in
/// [`real_nullspace`], padding changes nothing mathematically but keeps
/// the factorization on the accurate square path.
pub fn span_orthonormalize(vecs: &[RVec], rel_tol: f64) -> Vec<RVec> {
    let k = vecs.len();
    if k == 0 {
        return Vec::new();
    }
    let n = vecs[0].len();
    let mut x = RMat::zeros(k.max(n), n);
    for (i, v) in vecs.iter().enumerate() {
        x.row_mut(i).copy_from(&v.transpose());
    }
    let svd = x.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let svs = svd.singular_values;
    let sv_max = svs[0];
    if sv_max == 0.0 {
        return Vec::new();
    }
    let mut basis: Vec<RVec> = Vec::new();
    for i in 0..svs.len() {
        if svs[i] < rel_tol * sv_max {
            break;
        }
        basis.push(v_t.row(i).transpose());
    }
    basis
}

/// Basis of the span of `vecs` that depends only on the subspace itself,
/// not on how the spanning set was produced.  Standard coordinate
/// directions are projected onto the span in index order and accepted when
/// their projection survives orthogonalization against the directions
/// accepted so far.
pub fn canonical_span_basis(vecs: &[RVec], tol: f64) -> Vec<RVec> {
    let ortho = span_orthonormalize(vecs, 1e-10);
    let k = ortho.len();
    if k == 0 {
        return Vec::new();
    }
    let n = ortho[0].len();
    let mut accepted: Vec<RVec> = Vec::new();
    let mut threshold = tol;
    // The scan normally finishes in one pass; the threshold only shrinks if
    // every coordinate projection of some residual direction is tiny.
    for _ in 0..4 {
        for i in 0..n {
            if accepted.len() == k {
                break;
            }
            let weight: f64 = ortho.iter().map(|q| q[i] * q[i]).sum();
            if weight.sqrt() <= threshold {
                continue;
            }
            let mut p = RVec::zeros(n);
            for q in &ortho {
                p += q * q[i];
            }
            for _ in 0..2 {
                for b in &accepted {
                    let c = b.dot(&p);
                    p -= b * c;
                }
            }
            let np = p.norm();
            if np > threshold {
                accepted.push(p / np);
            }
        }
        if accepted.len() == k {
            break;
        }
        threshold *= 1e-2;
    }
    debug_assert_eq!(accepted.len(), k);
    accepted
}

/// Projection of `v` onto the span of an orthonormal `basis`.
pub fn subspace_project(basis: &[RVec], v: &RVec) -> RVec {
    let mut p = RVec::zeros(v.len());
    for b in basis {
        p += b * b.dot(v);
    }
    p
}

/// Norm of the component of `v` outside the span of an orthonormal `basis`.
pub fn containment_residual(basis: &[RVec], v: &RVec) -> f64 {
    (v - subspace_project(basis, v)).norm()
}

/// Orthonormal basis of the intersection of two subspaces given by
/// orthonormal bases.  Uses the spectrum of `P_a P_b P_a`: eigenvalue 1
/// marks common directions.  `eps` is the distance from 1 still accepted.
pub fn subspace_intersection(a: &[RVec], b: &[RVec], ambient: usize, eps: f64) -> Vec<RVec> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut pa = RMat::zeros(ambient, ambient);
    for v in a {
        pa += v * v.transpose();
    }
    let mut pb = RMat::zeros(ambient, ambient);
    for v in b {
        pb += v * v.transpose();
    }
    let m = &pa * pb * &pa;
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut kept = Vec::new();
    for idx in 0..ambient {
        if eig.eigenvalues[idx] > 1.0 - eps {
            kept.push(eig.eigenvectors.column(idx).into_owned());
        }
    }
    canonical_span_basis(&kept, 1e-6)
}

/// Number of real parameters of a Hermitian matrix of dimension `d`.
pub fn herm_param_count(d: usize) -> usize {
    d * d
}

/// Flattens a Hermitian matrix into real coordinates that make the
/// trace inner product Euclidean: the `d` diagonal entries, then
/// `sqrt(2) Re h_ij` and `sqrt(2) Im h_ij` for each `i < j` in row order.
pub fn herm_to_params(h: &CMat) -> RVec {
    let d = h.nrows();
    let mut p = RVec::zeros(d * d);
    for i in 0..d {
        p[i] = h[(i, i)].re;
    }
    let s = std::f64::consts::SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            p[k] = s * h[(i, j)].re;
            p[k + 1] = s * h[(i, j)].im;
            k += 2;
        }
    }
    p
}

/// Inverse of [`herm_to_params`].
pub fn params_to_herm(p: &RVec, d: usize) -> CMat {
    let mut h = CMat::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let s = std::f64::consts::SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let v = Complex64::new(p[k] / s, p[k + 1] / s);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
            k += 2;
        }
    }
    h
}

/// Fixes the global phase of a complex vector so its largest-modulus entry
/// is real and positive.  Ties resolve to the earliest index.
pub fn canonical_phase(v: &CVec) -> CVec {
    let mut best = 0usize;
    let mut best_mod = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod == 0.0 {
        return v.clone();
    }
    let phase = v[best] / best_mod;
    v * phase.conj()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and canonically phased eigenvector columns.
pub fn herm_eigen(h: &CMat) -> (RVec, CMat) {
    let d = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut vals = RVec::zeros(d);
    let mut vecs = CMat::zeros(d, d);
    for (col, &idx) in order.iter().enumerate() {
        vals[col] = eig.eigenvalues[idx];
        let v = canonical_phase(&eig.eigenvectors.column(idx).into_owned());
        vecs.set_column(col, &v);
    }
    (vals, vecs)
}

/// Unitary `exp(iH)` for Hermitian `H`.
pub fn herm_exp_i(h: &CMat) -> CMat {
    let (vals, vecs) = herm_eigen(h);
    let d = h.nrows();
    let mut diag = CMat::zeros(d, d);
    for i in 0..d {
        diag[(i, i)] = Complex64::new(0.0, vals[i]).exp();
    }
    &vecs * diag * vecs.adjoint()
}

/// True when all pairs in the family commute to within `tol`
/// (Frobenius norm of the commutator, relative to the operand scales).
pub fn family_commutes(mats: &[CMat], tol: f64) -> bool {
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let c = &mats[i] * &mats[j] - &mats[j] * &mats[i];
            let scale = 1.0 + mats[i].norm() * mats[j].norm();
            if c.norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Joint eigenspaces of a commuting Hermitian family, as matrices whose
/// columns form orthonormal bases.  Spaces are ordered by descending
/// eigenvalue of the first operator, refining lexicographically through
/// the rest; one-dimensional spaces get a canonical phase.
pub fn joint_eigenspaces(mats: &[CMat], tol: f64) -> Vec<CMat> {
    let d = if let Some(m) = mats.first() {
        m.nrows()
    } else {
        return Vec::new();
    };
    let mut spaces = vec![CMat::identity(d, d)];
    for m in mats {
        let mut refined = Vec::new();
        for v in &spaces {
            let k = v.ncols();
            let compressed = v.adjoint() * m * v;
            let herm = (&compressed + compressed.adjoint()) * Complex64::new(0.5, 0.0);
            let (vals, vecs) = herm_eigen(&herm);
            let scale = 1.0 + vals.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            // Split the sorted spectrum at gaps larger than the cluster tolerance.
            let mut start = 0;
            for i in 1..=k {
                if i == k || (vals[i - 1] - vals[i]) > tol * scale {
                    let block = vecs.columns(start, i - start).into_owned();
                    refined.push(v * block);
                    start = i;
                }
            }
        }
        spaces = refined;
    }
    for s in &mut spaces {
        if s.ncols() == 1 {
            let v = canonical_phase(&s.column(0).into_owned());
            s.set_column(0, &v);
        }
    }
    spaces
}

/// Hermitian principal logarithm of a unitary: returns `H` with
/// `u = exp(iH)` and eigenvalues in `(-pi, pi]`.  Returns `None` when `u`
/// is not unitary to within `tol`.
pub fn unitary_log(u: &CMat, tol: f64) -> Option<CMat> {
    let d = u.nrows();
    let id = CMat::identity(d, d);
    if (u * u.adjoint() - &id).norm() > tol * (d as f64).sqrt() {
        return None;
    }
    let cos = (u + u.adjoint()) * Complex64::new(0.5, 0.0);
    let sin = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
    let spaces = joint_eigenspaces(&[cos.clone(), sin.clone()], 1e-8);
    let mut h = CMat::zeros(d, d);
    for v in &spaces {
        let k = v.ncols() as f64;
        let c = (v.adjoint() * &cos * v).trace().re / k;
        let s = (v.adjoint() * &sin * v).trace().re / k;
        let theta = s.atan2(c);
        h += v * v.adjoint() * Complex64::new(theta, 0.0);
    }
    Some((&h + h.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Haar-distributed random unitary built from a complex Ginibre matrix via
/// QR with the phase convention that makes the distribution uniform.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..d {
        let rii = r[(i, i)];
        let m = rii.norm();
        let phase = if m > 0.0 { rii / m } else { Complex64::new(1.0, 0.0) };
        let col = q.column(i) * phase;
        q.set_column(i, &col);
    }
    q
}

/// Stacks the real and imaginary parts of a complex vector.
pub fn cvec_to_real(v: &CVec) -> RVec {
    let n = v.len();
    let mut r = RVec::zeros(2 * n);
    for i in 0..n {
        r[i] = v[i].re;
        r[n + i] = v[i].im;
    }
    r
}
