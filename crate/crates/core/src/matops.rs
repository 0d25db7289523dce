//! Dense complex matrix kernels.
//!
//! Everything downstream works with [`CMat`] (a dense `Complex64` matrix).
//! This module wraps the decompositions the rest of the crate needs —
//! Hermitian eigendecomposition, spectral functions of PSD matrices, trace
//! norm, Uhlmann fidelity, Kronecker/partial-trace plumbing and unitary
//! completion — behind validated entry points with explicit tolerances.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

/// Dense complex matrix, row/column indexed, the working type of the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

pub fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Real scalar as a complex number.
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `d x d` identity.
pub fn eye(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// `r x c` zero matrix.
pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Standard basis column vector `|j>` in dimension `d`.
pub fn basis_vec(d: usize, j: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[j] = cone();
    v
}

/// Frobenius norm.
pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance `||a - b||_F`.
pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    frob(&(a - b))
}

/// Deviation of `m` from Hermiticity, `||m - m†||_F`.
pub fn herm_deviation(m: &CMat) -> f64 {
    frob_dist(m, &m.adjoint())
}

/// True when all entries are finite.
pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hermitian part `(m + m†)/2`.
pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Real trace of a (numerically) Hermitian matrix.
pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// Hermitian inner product `<a, b> = Re tr(a† b)`.
pub fn hdot(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn require_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn require_hermitian(m: &CMat) -> Result<usize> {
    let d = require_square(m)?;
    let dev = herm_deviation(m);
    if dev > tol::HERM_TOL {
        return Err(Error::NonHermitian(dev));
    }
    Ok(d)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in ascending order.
    pub evals: DVector<f64>,
    /// Eigenvectors as columns, aligned with `evals`.
    pub evecs: CMat,
}

impl HermEig {
    /// Rebuilds `V diag(f(λ)) V†`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> CMat {
        let d = self.evecs.nrows();
        let mut out = zeros(d, d);
        for k in 0..self.evals.len() {
            let fk = f(self.evals[k]);
            if fk == 0.0 {
                continue;
            }
            let v = self.evecs.column(k);
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += cr(fk) * v[i] * v[j].conj();
                }
            }
        }
        out
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before
/// factorization; deviation from Hermiticity beyond [`tol::HERM_TOL`] is an
/// error, as is a non-finite entry.
pub fn herm_eig(m: &CMat) -> Result<HermEig> {
    if !all_finite(m) {
        return Err(Error::NonFinite("herm_eig input".into()));
    }
    require_hermitian(m)?;
    if let Some(out) = try_symmetric_eigen(symmetrize(m), None) {
        return Ok(out);
    }
    // The tridiagonal iteration can overflow on sparse structured inputs
    // (observed on block-bipartite embeddings with many zero rows, where it
    // returns infinite eigenvalues). Re-pose the problem in a generic
    // rotated frame: the spectrum is unchanged and the eigenvectors map
    // back through the rotation.
    let q = scramble_unitary(m.nrows());
    let rotated = symmetrize(&(q.adjoint() * symmetrize(m) * &q));
    try_symmetric_eigen(rotated, Some(&q)).ok_or(Error::NoConvergence)
}

/// One `SymmetricEigen` attempt with the output validated for finiteness
/// and sorted ascending. `frame` rotates eigenvectors back when the input
/// was conjugated into another basis.
fn try_symmetric_eigen(sym: CMat, frame: Option<&CMat>) -> Option<HermEig> {
    let eig: SymmetricEigen<Complex64, Dyn> = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)?;
    if !eig.eigenvalues.iter().all(|l| l.is_finite()) || !all_finite(&eig.eigenvectors) {
        return None;
    }
    let d = eig.eigenvectors.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let evals = DVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut evecs = zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        evecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    let evecs = match frame {
        Some(q) => q * evecs,
        None => evecs,
    };
    Some(HermEig { evals, evecs })
}

/// Deterministic dense unitary (QR of a seeded Gaussian matrix) used to
/// re-pose a failed eigenproblem away from pathological sparsity.
fn scramble_unitary(d: usize) -> CMat {
    let mut rng = ChaCha12Rng::seed_from_u64(0x736372616d626c65);
    let mut g = zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            g[(i, j)] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    g.qr().q()
}

/// Spectral functions applied through [`psd_func`].
#[derive(Debug, Clone, Copy)]
pub enum SpectralFn {
    /// `λ -> sqrt(λ)`, negative eigenvalues within tolerance clipped to 0.
    Sqrt,
    /// `λ -> log2(λ)` for `λ >= EIG_CLIP`, else 0 (zero-contribution
    /// convention for singular directions).
    Log2Clipped,
    /// `λ -> λ^p` for `λ >= EIG_CLIP`, else 0 (pseudo-inverse convention
    /// for negative powers).
    Power(f64),
}

/// Applies a spectral function to a PSD matrix. Eigenvalues below
/// `-PSD_TOL` are rejected; small negatives are clipped to zero.
pub fn psd_func(m: &CMat, f: SpectralFn) -> Result<CMat> {
    let eig = herm_eig(m)?;
    let min = eig.evals.min();
    if min < -tol::PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let g = move |l: f64| {
        let l = l.max(0.0);
        match f {
            SpectralFn::Sqrt => l.sqrt(),
            SpectralFn::Log2Clipped => {
                if l >= tol::EIG_CLIP {
                    l.log2()
                } else {
                    0.0
                }
            }
            SpectralFn::Power(p) => {
                if l >= tol::EIG_CLIP {
                    l.powf(p)
                } else {
                    0.0
                }
            }
        }
    };
    Ok(eig.reassemble(g))
}

/// PSD square root, `sqrt(M)`.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    psd_func(m, SpectralFn::Sqrt)
}

/// The Hermitian Jordan–Wielandt embedding `[[0, M], [M†, 0]]`, whose
/// spectrum is `{±σ_i} ∪ {0}` with eigenvectors `(u_i; ±v_i)/√2` carrying
/// the singular vectors. Singular values are derived from this matrix
/// because the general-purpose complex SVD routines are not reliable.
fn jordan_wielandt(m: &CMat) -> CMat {
    let (r, c) = (m.nrows(), m.ncols());
    let mut h = zeros(r + c, r + c);
    for i in 0..r {
        for j in 0..c {
            h[(i, r + j)] = m[(i, j)];
            h[(r + j, i)] = m[(i, j)].conj();
        }
    }
    h
}

/// Singular values of an arbitrary matrix, in descending order
/// (length `min(rows, cols)`).
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if !all_finite(m) {
        return Err(Error::NonFinite("singular_values input".into()));
    }
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(Vec::new());
    }
    let eig = herm_eig(&jordan_wielandt(m))?;
    let n = eig.evals.len();
    // top k eigenvalues, descending, clipped at zero
    Ok((0..k).map(|j| eig.evals[n - 1 - j].max(0.0)).collect())
}

/// Thin SVD `M ≈ U diag(σ) V†` keeping singular values above `cutoff`.
/// `U` (`rows × s`) and `V` (`cols × s`) have orthonormal columns; `σ` is
/// descending.
pub fn thin_svd(m: &CMat, cutoff: f64) -> Result<(CMat, Vec<f64>, CMat)> {
    if !all_finite(m) {
        return Err(Error::NonFinite("thin_svd input".into()));
    }
    let (r, c) = (m.nrows(), m.ncols());
    let eig = herm_eig(&jordan_wielandt(m))?;
    let n = eig.evals.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut svals = Vec::new();
    let mut ucols: Vec<CVec> = Vec::new();
    let mut vcols: Vec<CVec> = Vec::new();
    for j in (0..n).rev() {
        let lambda = eig.evals[j];
        if lambda <= cutoff {
            break;
        }
        let w = eig.evecs.column(j);
        let u = CVec::from_iterator(r, (0..r).map(|i| w[i] * cr(sqrt2)));
        let v = CVec::from_iterator(c, (0..c).map(|i| w[r + i] * cr(sqrt2)));
        svals.push(lambda);
        ucols.push(u);
        vcols.push(v);
    }
    if svals.is_empty() {
        return Ok((zeros(r, 0), svals, zeros(c, 0)));
    }
    Ok((CMat::from_columns(&ucols), svals, CMat::from_columns(&vcols)))
}

/// Trace norm `||M||_1` (sum of singular values) of an arbitrary matrix.
pub fn trace_norm(m: &CMat) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Uhlmann fidelity `F(ρ,σ) = tr sqrt(sqrt(ρ) σ sqrt(ρ))` for PSD inputs
/// of equal dimension. Symmetric in its arguments.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let d = require_hermitian(rho)?;
    let ds = require_hermitian(sigma)?;
    if d != ds {
        return Err(Error::DimMismatch(format!(
            "fidelity arguments {}x{} vs {}x{}",
            d, d, ds, ds
        )));
    }
    let s = psd_sqrt(rho)?;
    let inner = &s * sigma * &s;
    let eig = herm_eig(&symmetrize(&inner))?;
    let min = eig.evals.min();
    if min < -tol::PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(eig.evals.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

/// Kronecker product `a ⊗ b` (row-major convention: index `(i_a, i_b)`
/// flattens to `i_a * rows(b) + i_b`).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Partial trace of a square matrix on a bipartite space `A ⊗ B` with
/// `dims = (d_a, d_b)`. `keep = 0` keeps the `A` factor, `keep = 1` keeps
/// `B`.
pub fn partial_trace(m: &CMat, dims: (usize, usize), keep: usize) -> Result<CMat> {
    let (da, db) = dims;
    let d = require_square(m)?;
    if da * db != d {
        return Err(Error::DimMismatch(format!(
            "partial_trace dims {}x{} do not factor {}",
            da, db, d
        )));
    }
    match keep {
        0 => {
            let mut out = zeros(da, da);
            for a in 0..da {
                for ap in 0..da {
                    let mut acc = czero();
                    for b in 0..db {
                        acc += m[(a * db + b, ap * db + b)];
                    }
                    out[(a, ap)] = acc;
                }
            }
            Ok(out)
        }
        1 => {
            let mut out = zeros(db, db);
            for b in 0..db {
                for bp in 0..db {
                    let mut acc = czero();
                    for a in 0..da {
                        acc += m[(a * db + b, a * db + bp)];
                    }
                    out[(b, bp)] = acc;
                }
            }
            Ok(out)
        }
        _ => Err(Error::OutOfRange(format!(
            "partial_trace keep index {} (expected 0 or 1)",
            keep
        ))),
    }
}

/// Deviation of `V` from being an isometry, `||V†V - 1||_F`.
pub fn isometry_deviation(v: &CMat) -> f64 {
    let k = v.ncols();
    frob_dist(&(v.adjoint() * v), &eye(k))
}

fn orthogonalize_against(cols: &[CVec], cand: &CVec) -> CVec {
    let mut r = cand.clone();
    // two Gram-Schmidt passes for numerical stability
    for _ in 0..2 {
        for c in cols {
            let overlap: Complex64 = c.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
            r -= c * overlap;
        }
    }
    r
}

/// Completes an isometry `V` (`d x k`, `k <= d`) to a `d x d` unitary whose
/// first `k` columns equal `V`.
///
/// With `blocks = Some(projectors)` the completion respects the block
/// structure: each standard basis vector must lie in a single block, each
/// column of `V` must lie in the block of its column position, and the
/// returned unitary commutes with every projector.
pub fn complete_to_unitary(v: &CMat, blocks: Option<&[CMat]>) -> Result<CMat> {
    let d = v.nrows();
    let k = v.ncols();
    if k > d {
        return Err(Error::DimMismatch(format!(
            "cannot complete {}x{} (more columns than rows)",
            d, k
        )));
    }
    let dev = isometry_deviation(v);
    if dev > tol::HERM_TOL {
        return Err(Error::NotIsometry(dev));
    }
    match blocks {
        None => {
            let mut cols: Vec<CVec> = (0..k).map(|j| v.column(j).into_owned()).collect();
            while cols.len() < d {
                // pick the standard basis vector with the largest residual
                let mut best: Option<(f64, CVec)> = None;
                for j in 0..d {
                    let r = orthogonalize_against(&cols, &basis_vec(d, j));
                    let n = r.norm();
                    if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                        best = Some((n, r));
                    }
                }
                let (n, r) = best.expect("nonempty candidate set");
                // for an isometry with k < d columns the best residual norm
                // is at least 1/sqrt(d); falling below the threshold would
                // mean the input was not an isometry, which was checked above
                assert!(n >= 1e-7, "unitary completion lost rank");
                cols.push(r.unscale(n));
            }
            Ok(CMat::from_columns(&cols))
        }
        Some(projectors) => {
            let block_of = |x: &CVec| -> Option<usize> {
                projectors.iter().position(|p| {
                    let px = p * x;
                    (&px - x).norm() <= 1e-8 * x.norm().max(1.0)
                })
            };
            let mut pos_block = Vec::with_capacity(d);
            for j in 0..d {
                match block_of(&basis_vec(d, j)) {
                    Some(i) => pos_block.push(i),
                    None => {
                        return Err(Error::InfeasibleBlockCompletion(format!(
                            "standard basis vector {} does not lie in a single block",
                            j
                        )))
                    }
                }
            }
            for c in 0..k {
                let col = v.column(c).into_owned();
                match block_of(&col) {
                    Some(i) if i == pos_block[c] => {}
                    Some(i) => {
                        return Err(Error::InfeasibleBlockCompletion(format!(
                            "column {} lies in block {} but occupies a position of block {}",
                            c, i, pos_block[c]
                        )))
                    }
                    None => {
                        return Err(Error::InfeasibleBlockCompletion(format!(
                            "column {} does not lie in a single block",
                            c
                        )))
                    }
                }
            }
            let mut cols: Vec<CVec> = (0..k).map(|j| v.column(j).into_owned()).collect();
            for j in k..d {
                let blk = pos_block[j];
                let in_block: Vec<CVec> = cols
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| pos_block[*c] == blk)
                    .map(|(_, x)| x.clone())
                    .collect();
                // candidates: standard basis vectors of this block
                let mut best: Option<(f64, CVec)> = None;
                for jj in 0..d {
                    if pos_block[jj] != blk {
                        continue;
                    }
                    let r = orthogonalize_against(&in_block, &basis_vec(d, jj));
                    let n = r.norm();
                    if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                        best = Some((n, r));
                    }
                }
                let (n, r) = best.ok_or_else(|| {
                    Error::InfeasibleBlockCompletion(format!("block {} has no free directions", blk))
                })?;
                if n < 1e-7 {
                    return Err(Error::InfeasibleBlockCompletion(format!(
                        "block {} exhausted before position {}",
                        blk, j
                    )));
                }
                cols.push(r.unscale(n));
            }
            Ok(CMat::from_columns(&cols))
        }
    }
}

/// Real isometric vectorization of a Hermitian matrix:
/// `[diagonal; √2·Re upper; √2·Im upper]`, so that Euclidean inner products
/// of vectors equal Hilbert-Schmidt inner products of matrices.
pub fn herm_vec(m: &CMat) -> DVector<f64> {
    let d = m.nrows();
    let mut out = DVector::zeros(d * d);
    let s = std::f64::consts::SQRT_2;
    let mut idx = d;
    for i in 0..d {
        out[i] = m[(i, i)].re;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out[idx] = s * m[(i, j)].re;
            out[idx + 1] = s * m[(i, j)].im;
            idx += 2;
        }
    }
    out
}

/// Cholesky factor of a Hermitian positive-definite matrix, if it exists.
pub fn cholesky(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    Cholesky::new(m.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn crandn(rng: &mut ChaCha12Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn rand_herm(rng: &mut ChaCha12Rng, d: usize) -> CMat {
        let g = crandn(rng, d, d);
        symmetrize(&g)
    }

    fn rand_psd(rng: &mut ChaCha12Rng, d: usize) -> CMat {
        let g = crandn(rng, d, d);
        &g * g.adjoint()
    }

    #[test]
    fn herm_eig_pauli_x() {
        let mut sx = zeros(2, 2);
        sx[(0, 1)] = cone();
        sx[(1, 0)] = cone();
        let eig = herm_eig(&sx).unwrap();
        assert!((eig.evals[0] + 1.0).abs() < 1e-12);
        assert!((eig.evals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_reconstructs_and_orders() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for d in [2usize, 3, 6, 9] {
            let m = rand_herm(&mut rng, d);
            let eig = herm_eig(&m).unwrap();
            for k in 1..d {
                assert!(eig.evals[k] >= eig.evals[k - 1]);
            }
            assert!(isometry_deviation(&eig.evecs) < 1e-10);
            let rebuilt = eig.reassemble(|l| l);
            assert!(frob_dist(&rebuilt, &m) < 1e-10, "d={}", d);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let mut m = zeros(2, 2);
        m[(0, 1)] = cr(1.0);
        m[(1, 0)] = cr(0.5);
        assert!(matches!(herm_eig(&m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn psd_sqrt_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for d in [2usize, 4, 6] {
            let m = rand_psd(&mut rng, d);
            let s = psd_sqrt(&m).unwrap();
            assert!(frob_dist(&(&s * &s), &m) < 1e-9 * frob(&m).max(1.0));
        }
    }

    #[test]
    fn psd_func_clips_tiny_negative_and_rejects_large() {
        let mut m = eye(2);
        m[(1, 1)] = cr(-1e-10);
        let s = psd_sqrt(&m).unwrap();
        assert!(s[(1, 1)].re.abs() < 1e-5);
        m[(1, 1)] = cr(-1e-3);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn log2_clipped_zero_contribution() {
        let mut p = zeros(2, 2);
        p[(0, 0)] = cone();
        let l = psd_func(&p, SpectralFn::Log2Clipped).unwrap();
        assert!(frob(&l) < 1e-12);
    }

    #[test]
    fn power_half_inverse_gives_support_projector() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let g = crandn(&mut rng, 3, 2);
        let m = &g * g.adjoint(); // rank 2 in dimension 3
        let w = psd_func(&m, SpectralFn::Power(-0.5)).unwrap();
        let proj = &w * &m * &w;
        // projector: idempotent with trace = rank
        assert!(frob_dist(&(&proj * &proj), &proj) < 1e-8);
        assert!((trace_re(&proj) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn trace_norm_known_and_oracle() {
        let mut m = zeros(2, 2);
        m[(0, 0)] = cr(3.0);
        m[(1, 1)] = Complex64::new(0.0, -4.0);
        assert!((trace_norm(&m).unwrap() - 7.0).abs() < 1e-12);

        // independent oracle: sum of sqrt eigenvalues of M†M
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10 {
            let a = crandn(&mut rng, 4, 4);
            let gram = a.adjoint() * &a;
            let oracle: f64 = herm_eig(&gram)
                .unwrap()
                .evals
                .iter()
                .map(|&l| l.max(0.0).sqrt())
                .sum();
            assert!((trace_norm(&a).unwrap() - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_closed_forms() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let g = rand_psd(&mut rng, 3);
        let rho = g.unscale(trace_re(&g));
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        // F(|0><0|, 1/2) = sqrt(1/2)
        let mut p0 = zeros(2, 2);
        p0[(0, 0)] = cone();
        let half = eye(2).unscale(2.0);
        let f = fidelity(&p0, &half).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-12);

        // symmetry and commuting-case formula
        let h = rand_psd(&mut rng, 3);
        let sig = h.unscale(trace_re(&h));
        let f1 = fidelity(&rho, &sig).unwrap();
        let f2 = fidelity(&sig, &rho).unwrap();
        assert!((f1 - f2).abs() < 1e-9);

        let p = [0.5, 0.3, 0.2];
        let q = [0.1, 0.6, 0.3];
        let dp = CMat::from_fn(3, 3, |i, j| if i == j { cr(p[i]) } else { czero() });
        let dq = CMat::from_fn(3, 3, |i, j| if i == j { cr(q[i]) } else { czero() });
        let expect: f64 = (0..3).map(|i| (p[i] * q[i]).sqrt()).sum();
        assert!((fidelity(&dp, &dq).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn kron_and_partial_trace_inverse() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let a = rand_herm(&mut rng, 3);
        let b = rand_psd(&mut rng, 2);
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 6);
        // spot-check the flattening convention (i_a * d_b + i_b)
        assert!((k[(1, 0)] - a[(0, 0)] * b[(1, 0)]).norm() < 1e-14);
        assert!((k[(2, 4)] - a[(1, 2)] * b[(0, 0)]).norm() < 1e-14);
        let ta = partial_trace(&k, (3, 2), 0).unwrap();
        assert!(frob_dist(&ta, &a.scale(trace_re(&b))) < 1e-10);
        let tb = partial_trace(&k, (3, 2), 1).unwrap();
        assert!(frob_dist(&tb, &b.scale(trace_re(&a))) < 1e-10);
    }

    #[test]
    fn partial_trace_schmidt_spectra_agree() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let psi = crandn(&mut rng, 6, 1);
        let psi = psi.unscale(psi.norm());
        let rho = &psi * psi.adjoint();
        let ra = partial_trace(&rho, (3, 2), 0).unwrap();
        let rb = partial_trace(&rho, (3, 2), 1).unwrap();
        let la = herm_eig(&ra).unwrap().evals;
        let lb = herm_eig(&rb).unwrap().evals;
        // nonzero spectra coincide; dim-3 side has one extra zero
        assert!(la[0].abs() < 1e-10);
        assert!((la[1] - lb[0]).abs() < 1e-10);
        assert!((la[2] - lb[1]).abs() < 1e-10);
    }

    #[test]
    fn unitary_completion_prefix_property() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let g = crandn(&mut rng, 6, 2);
        // orthonormalize columns to get an isometry
        let q0 = g.column(0).unscale(g.column(0).norm());
        let mut q1 = g.column(1).into_owned();
        let ov: Complex64 = q0.iter().zip(q1.iter()).map(|(a, b)| a.conj() * b).sum();
        q1 -= &q0 * ov;
        let q1 = q1.unscale(q1.norm());
        let v = CMat::from_columns(&[q0, q1]);
        let u = complete_to_unitary(&v, None).unwrap();
        assert!(isometry_deviation(&u) < 1e-10);
        assert!(frob_dist(&u.columns(0, 2).into_owned(), &v) < 1e-12);

        let bad = crandn(&mut rng, 4, 2);
        assert!(matches!(
            complete_to_unitary(&bad, None),
            Err(Error::NotIsometry(_))
        ));
    }

    #[test]
    fn block_constrained_completion_commutes() {
        // blocks of C^2 ⊗ C^2 under 1 ⊗ |i><i|: indices {0,2} and {1,3}
        let p0 = kron(&eye(2), &(&basis_vec(2, 0) * basis_vec(2, 0).adjoint()));
        let p1 = kron(&eye(2), &(&basis_vec(2, 1) * basis_vec(2, 1).adjoint()));
        let mut col = CVec::zeros(4);
        col[0] = cr(0.6);
        col[2] = cr(0.8);
        let v = CMat::from_columns(&[col]);
        let u = complete_to_unitary(&v, Some(&[p0.clone(), p1.clone()])).unwrap();
        assert!(isometry_deviation(&u) < 1e-10);
        assert!(frob_dist(&u.columns(0, 1).into_owned(), &v) < 1e-12);
        for p in [&p0, &p1] {
            let comm = &u * p - p * &u;
            assert!(frob(&comm) < 1e-9);
        }
        // a column living in the wrong block's position is rejected
        let mut bad = CVec::zeros(4);
        bad[1] = cone();
        let vb = CMat::from_columns(&[bad]);
        assert!(matches!(
            complete_to_unitary(&vb, Some(&[p0, p1])),
            Err(Error::InfeasibleBlockCompletion(_))
        ));
    }

    #[test]
    fn herm_vec_is_isometric() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let a = rand_herm(&mut rng, 4);
        let b = rand_herm(&mut rng, 4);
        let va = herm_vec(&a);
        let vb = herm_vec(&b);
        assert!((va.dot(&vb) - hdot(&a, &b)).abs() < 1e-10);
    }

    fn rand_complex(rng: &mut ChaCha12Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn thin_svd_reconstructs_all_shapes() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for (r, c) in [(4, 4), (5, 3), (3, 5), (6, 2), (1, 4)] {
            for _ in 0..10 {
                let m = rand_complex(&mut rng, r, c);
                let (u, s, v) = thin_svd(&m, 1e-12).unwrap();
                assert!(isometry_deviation(&u) < 1e-10);
                assert!(isometry_deviation(&v) < 1e-10);
                let mut recon = zeros(r, c);
                for (k, &sk) in s.iter().enumerate() {
                    recon += (u.column(k) * v.column(k).adjoint()).scale(sk);
                }
                assert!(frob_dist(&recon, &m) < 1e-9 * frob(&m).max(1.0));
                // descending order
                for w in s.windows(2) {
                    assert!(w[0] >= w[1] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn thin_svd_handles_rank_deficiency() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        // rank-1 outer products and rank-deficient rectangular blocks, the
        // family on which general-purpose complex SVD routines misbehave
        for _ in 0..20 {
            let a = rand_complex(&mut rng, 4, 1);
            let b = rand_complex(&mut rng, 4, 1);
            let m = &a * b.adjoint();
            let (u, s, v) = thin_svd(&m, 1e-9).unwrap();
            assert_eq!(s.len(), 1);
            assert!((s[0] - a.norm() * b.norm()).abs() < 1e-10);
            let recon = (u.column(0) * v.column(0).adjoint()).scale(s[0]);
            assert!(frob_dist(&recon, &m) < 1e-10);
        }
        // zero matrix
        let (u, s, _v) = thin_svd(&zeros(3, 2), 1e-9).unwrap();
        assert!(s.is_empty());
        assert_eq!(u.ncols(), 0);
    }

    #[test]
    fn singular_values_match_hermitian_spectrum() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..10 {
            let h = rand_herm(&mut rng, 5);
            let sv = singular_values(&h).unwrap();
            let mut abs_eig: Vec<f64> = herm_eig(&h).unwrap().evals.iter().map(|l| l.abs()).collect();
            abs_eig.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in sv.iter().zip(abs_eig.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
            let tn = trace_norm(&h).unwrap();
            let direct: f64 = abs_eig.iter().sum();
            assert!((tn - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_values_frozen_case() {
        // fixed 4x3 complex matrix; reference values computed with an
        // independent implementation
        let entries = [
            (0.3, 0.1),
            (-0.2, 0.4),
            (1.1, -0.7),
            (0.15, 0.05),
            (-0.1, 0.2),
            (0.0, 0.9),
            (-0.6, 0.0),
            (0.45, -0.3),
            (0.2, 0.2),
            (0.05, -0.8),
            (0.7, 0.1),
            (-0.3, -0.4),
        ];
        let m = CMat::from_fn(4, 3, |i, j| {
            let (re, im) = entries[i * 3 + j];
            Complex64::new(re, im)
        });
        let sv = singular_values(&m).unwrap();
        let expected = [1.886093214101102, 1.169014992732468, 0.293353599753746];
        for (a, b) in sv.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((trace_norm(&m).unwrap() - 3.348461806587317).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_is_unitarily_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        let m = rand_complex(&mut rng, 4, 4);
        let tn = trace_norm(&m).unwrap();
        // build a unitary from the thin SVD of a random square matrix
        let (u, _, v) = thin_svd(&rand_complex(&mut rng, 4, 4), 1e-12).unwrap();
        let g = &u * v.adjoint();
        assert!(isometry_deviation(&g) < 1e-9);
        assert!((trace_norm(&(&g * &m)).unwrap() - tn).abs() < 1e-9);
        assert!((trace_norm(&(&m * &g)).unwrap() - tn).abs() < 1e-9);
    }
}
