//! Naimark extensions of POVMs and the channels relating different
//! extensions of the same POVM.
//!
//! A POVM `{E_i}` on dimension `d` is extended to a projective measurement
//! `{P_i}` on a dilated space through an isometry `W` with
//! `W† P_i W = E_i`. The canonical construction uses `d′ = d·n`,
//! `W|ψ> = Σ_i (A_i|ψ>) ⊗ |i>` and `P_i = 1_d ⊗ |i><i|`. Padded and
//! rotated variants generate inequivalent extensions for invariance tests,
//! and [`relate_extensions`] builds the isometry `Q`, the block unitary `U`
//! and the reversal channel `R` that map between two extensions of the same
//! POVM, enabling the lift of free operations from one extension to another
//! ([`prop2_kraus_lift`]).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::matops::{
    self, basis_vec, cone, eye, frob, frob_dist, herm_deviation, isometry_deviation, kron,
    trace_re, zeros, CMat, CVec,
};
use crate::quantum::{self, DensityMatrix, Povm};
use crate::tol;

/// A Naimark extension: dilated space, embedding isometry and projective
/// measurement satisfying `W† P_i W = E_i`.
#[derive(Debug, Clone)]
pub struct NaimarkExt {
    d: usize,
    n: usize,
    d_prime: usize,
    w: CMat,
    projectors: Vec<CMat>,
}

impl NaimarkExt {
    /// Validates structural invariants: `W` is an isometry, the `P_i` form a
    /// complete family of mutually orthogonal Hermitian projectors.
    pub fn from_parts(d: usize, w: CMat, projectors: Vec<CMat>) -> Result<Self> {
        let d_prime = w.nrows();
        if w.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "W is {}x{}, expected {} columns",
                w.nrows(),
                w.ncols(),
                d
            )));
        }
        let dev = isometry_deviation(&w);
        if dev > tol::HERM_TOL {
            return Err(Error::NotIsometry(dev));
        }
        let n = projectors.len();
        if n == 0 {
            return Err(Error::EmptyBlock("extension with no projectors".into()));
        }
        let mut sum = zeros(d_prime, d_prime);
        for (i, p) in projectors.iter().enumerate() {
            if p.nrows() != d_prime || p.ncols() != d_prime {
                return Err(Error::DimMismatch(format!(
                    "projector {} is {}x{}, expected {}x{}",
                    i,
                    p.nrows(),
                    p.ncols(),
                    d_prime,
                    d_prime
                )));
            }
            let h = herm_deviation(p);
            if h > tol::HERM_TOL {
                return Err(Error::NonHermitian(h));
            }
            let idem = frob_dist(&(p * p), p);
            if idem > tol::HERM_TOL {
                return Err(Error::RelationVerificationFailed(format!(
                    "projector {} not idempotent (residual {:.3e})",
                    i, idem
                )));
            }
            sum += p;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let cross = frob(&(&projectors[i] * &projectors[j]));
                if cross > tol::HERM_TOL {
                    return Err(Error::RelationVerificationFailed(format!(
                        "projectors {} and {} overlap (residual {:.3e})",
                        i, j, cross
                    )));
                }
            }
        }
        let comp = frob_dist(&sum, &eye(d_prime));
        if comp > tol::HERM_TOL {
            return Err(Error::CompletenessViolation(comp));
        }
        Ok(Self {
            d,
            n,
            d_prime,
            w,
            projectors,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    /// The embedding isometry `W` (`d′ × d`).
    pub fn w(&self) -> &CMat {
        &self.w
    }

    pub fn projectors(&self) -> &[CMat] {
        &self.projectors
    }

    /// Projector `Π = W W†` onto the embedded subspace.
    pub fn embedded_projector(&self) -> CMat {
        &self.w * self.w.adjoint()
    }

    /// The POVM effect induced by block `i`: `E_i = W† P_i W`.
    pub fn induced_effect(&self, i: usize) -> CMat {
        self.w.adjoint() * &self.projectors[i] * &self.w
    }

    /// Largest deviation `max_i ||W† P_i W − E_i||_F` from extending `povm`.
    pub fn extension_residual(&self, povm: &Povm) -> f64 {
        povm.effects()
            .iter()
            .enumerate()
            .map(|(i, e)| frob_dist(&self.induced_effect(i), e))
            .fold(0.0, f64::max)
    }

    /// Rank of block `i` (trace of the projector, rounded).
    pub fn block_rank(&self, i: usize) -> usize {
        trace_re(&self.projectors[i]).round() as usize
    }

    /// Orthonormal basis of `im P_i` as matrix columns. Standard basis
    /// vectors are used where the block is axis-aligned (canonical and
    /// padded extensions); otherwise the eigenbasis of the projector.
    pub fn block_basis(&self, i: usize) -> Result<CMat> {
        let p = &self.projectors[i];
        let rank = self.block_rank(i);
        if rank == 0 {
            return Err(Error::EmptyBlock(format!("block {} has rank 0", i)));
        }
        let mut cols: Vec<CVec> = Vec::with_capacity(rank);
        for j in 0..self.d_prime {
            let e = basis_vec(self.d_prime, j);
            let pe = p * &e;
            if (&pe - &e).norm() <= 1e-9 {
                cols.push(e);
            }
        }
        if cols.len() == rank {
            return Ok(CMat::from_columns(&cols));
        }
        let eig = matops::herm_eig(p)?;
        let dp = self.d_prime;
        let mut cols = Vec::with_capacity(rank);
        // eigenvalues ascending: block vectors are the trailing ones
        for k in (dp - rank)..dp {
            if eig.evals[k] < 0.5 {
                return Err(Error::EmptyBlock(format!(
                    "projector {} has deficient spectrum",
                    i
                )));
            }
            cols.push(eig.evecs.column(k).into_owned());
        }
        Ok(CMat::from_columns(&cols))
    }
}

/// Canonical extension: `d′ = d·n`, `W|ψ> = Σ_i (A_i|ψ>) ⊗ |i>`,
/// `P_i = 1_d ⊗ |i><i|`.
pub fn canonical_extension(povm: &Povm) -> NaimarkExt {
    let d = povm.dim();
    let n = povm.n_outcomes();
    let dp = d * n;
    let mut w = zeros(dp, d);
    for (i, a) in povm.meas_ops().iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                w[(r * n + i, c)] = a[(r, c)];
            }
        }
    }
    let projectors = (0..n)
        .map(|i| {
            let ei = &basis_vec(n, i) * basis_vec(n, i).adjoint();
            kron(&eye(d), &ei)
        })
        .collect();
    NaimarkExt::from_parts(d, w, projectors).expect("canonical construction is always valid")
}

/// Extension variants for invariance tests.
#[derive(Debug, Clone)]
pub enum VariantKind {
    /// Pads each block's system factor by `k` extra dimensions:
    /// new space `(C^{d_s + k}) ⊗ C^n`, `W` zero-padded per block.
    /// Requires a product-form extension (canonical or already padded).
    Pad(usize),
    /// Conjugates the extension by a unitary `G` on the dilated space:
    /// `P̃_i = G P_i G†`, `W̃ = G W`.
    Rotate(CMat),
}

fn product_system_dim(ext: &NaimarkExt) -> Option<usize> {
    let n = ext.n();
    if ext.d_prime() % n != 0 {
        return None;
    }
    let ds = ext.d_prime() / n;
    for i in 0..n {
        let ei = &basis_vec(n, i) * basis_vec(n, i).adjoint();
        let expected = kron(&eye(ds), &ei);
        if frob_dist(&ext.projectors()[i], &expected) > 1e-9 {
            return None;
        }
    }
    Some(ds)
}

/// Builds a padded or rotated variant of an extension (same POVM).
pub fn variant_extension(ext: &NaimarkExt, kind: &VariantKind) -> Result<NaimarkExt> {
    match kind {
        VariantKind::Pad(k) => {
            if *k < 1 {
                return Err(Error::OutOfRange("pad amount must be ≥ 1".into()));
            }
            let ds = product_system_dim(ext).ok_or_else(|| {
                Error::DimMismatch(
                    "pad requires a product-form extension (P_i = 1 ⊗ |i><i|)".into(),
                )
            })?;
            let n = ext.n();
            let ds_new = ds + k;
            let mut w = zeros(ds_new * n, ext.d());
            for r in 0..ds {
                for i in 0..n {
                    for c in 0..ext.d() {
                        w[(r * n + i, c)] = ext.w()[(r * n + i, c)];
                    }
                }
            }
            let projectors = (0..n)
                .map(|i| {
                    let ei = &basis_vec(n, i) * basis_vec(n, i).adjoint();
                    kron(&eye(ds_new), &ei)
                })
                .collect();
            NaimarkExt::from_parts(ext.d(), w, projectors)
        }
        VariantKind::Rotate(g) => {
            if g.nrows() != ext.d_prime() || g.ncols() != ext.d_prime() {
                return Err(Error::DimMismatch(format!(
                    "rotation is {}x{}, dilated space has dim {}",
                    g.nrows(),
                    g.ncols(),
                    ext.d_prime()
                )));
            }
            let dev = isometry_deviation(g);
            if dev > tol::HERM_TOL {
                return Err(Error::NotIsometry(dev));
            }
            let w = g * ext.w();
            let projectors = ext
                .projectors()
                .iter()
                .map(|p| matops::symmetrize(&(g * p * g.adjoint())))
                .collect();
            NaimarkExt::from_parts(ext.d(), w, projectors)
        }
    }
}

/// Block-dephasing `Δ[M] = Σ_i P_i M P_i` on the dilated space.
pub fn block_dephase(m: &CMat, ext: &NaimarkExt) -> Result<CMat> {
    if m.nrows() != ext.d_prime() || m.ncols() != ext.d_prime() {
        return Err(Error::DimMismatch(format!(
            "matrix is {}x{}, dilated space has dim {}",
            m.nrows(),
            m.ncols(),
            ext.d_prime()
        )));
    }
    let mut out = zeros(ext.d_prime(), ext.d_prime());
    for p in ext.projectors() {
        out += p * m * p;
    }
    Ok(out)
}

/// Embeds a state into the dilated space: `W ρ W†`.
pub fn embed(rho: &DensityMatrix, ext: &NaimarkExt) -> Result<CMat> {
    if rho.dim() != ext.d() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs extension dim {}",
            rho.dim(),
            ext.d()
        )));
    }
    Ok(ext.w() * rho.mat() * ext.w().adjoint())
}

/// The maximally block-coherent pure state `|Ψ> = (1/√n) Σ_i |φ_i>` with
/// `|φ_i>` the first basis vector of `im P_i`. Block probabilities are all
/// `1/n`.
pub fn max_coherent_block_state(ext: &NaimarkExt) -> Result<CMat> {
    let n = ext.n();
    let mut psi = CVec::zeros(ext.d_prime());
    for i in 0..n {
        let b = ext.block_basis(i)?;
        psi += b.column(0).into_owned();
    }
    let psi = psi.unscale((n as f64).sqrt());
    Ok(&psi * psi.adjoint())
}

/// Hints identifying how two extensions of the same POVM are related.
#[derive(Debug, Clone)]
pub enum RelationHint {
    /// `large` is a padded variant of `small`: `Q` is the block inclusion.
    PadInclusion,
    /// `large = rotate(G)` applied to `small`: `Q = G`.
    Rotation(CMat),
    /// Explicit intertwining isometry.
    ExplicitQ(CMat),
}

/// The channel data relating a small extension to a large one:
/// an isometry `Q` with `P_i Q = Q P̂_i`, a block unitary `U` on the large
/// space with `U W_large = Q W_small`, and the reversal Kraus operators
/// `R_0 = Q†`, `R_{m≥1} = (1/√d_min) |â><b| (1 − QQ†)`.
#[derive(Debug, Clone)]
pub struct ExtensionRelation {
    q: CMat,
    u: CMat,
    reversal_kraus: Vec<CMat>,
    d_min: usize,
}

impl ExtensionRelation {
    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn reversal_kraus(&self) -> &[CMat] {
        &self.reversal_kraus
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    /// Applies the reversal channel `R[X] = Σ_m R_m X R_m†` (large → small).
    pub fn reverse(&self, x: &CMat) -> CMat {
        let mut out = zeros(self.d_min, self.d_min);
        for r in &self.reversal_kraus {
            out += r * x * r.adjoint();
        }
        out
    }

    /// Applies the full relating channel `N[X] = R[U X U†]` (large → small).
    pub fn relate(&self, x: &CMat) -> CMat {
        self.reverse(&(&self.u * x * self.u.adjoint()))
    }
}

/// Extends a (possibly empty) set of orthonormal columns to a full
/// orthonormal basis of `C^r`.
fn complete_basis(p: &CMat, r: usize) -> CMat {
    if p.ncols() == r {
        return p.clone();
    }
    matops::complete_to_unitary(p, None).expect("orthonormal prefix")
}

fn build_block_unitary(
    small: &NaimarkExt,
    large: &NaimarkExt,
    q: &CMat,
) -> Result<CMat> {
    let dl = large.d_prime();
    let mut u = zeros(dl, dl);
    for i in 0..large.n() {
        let b = large.block_basis(i)?;
        let r = b.ncols();
        let m_i = b.adjoint() * (&large.projectors()[i] * large.w());
        let n_i = b.adjoint() * (&large.projectors()[i] * (q * small.w()));
        let (p, svals, v) = matops::thin_svd(&m_i, 1e-9)?;
        let s = p.ncols();
        // image of m_i under the block unitary: u_i P = n_i V Σ^{-1}
        let mut p_target = zeros(r, s);
        if s > 0 {
            let mut vs = v.clone();
            for (k, &sv) in svals.iter().enumerate() {
                let col = vs.column(k).unscale(sv);
                vs.set_column(k, &col);
            }
            p_target = &n_i * vs;
        }
        let pfull = complete_basis(&p, r);
        let tfull = complete_basis(&p_target, r);
        let u_i = &tfull * pfull.adjoint();
        u += &b * u_i * b.adjoint();
    }
    Ok(u)
}

/// Builds and verifies the relation between two extensions of the same POVM.
///
/// `small` and `large` must induce the same POVM, every large block rank
/// must be at least the corresponding small block rank, and the `hint`
/// must identify the construction. All relation invariants plus the two
/// channel identities of `N = R ∘ U` are verified on random inputs;
/// any violation is reported as `RelationVerificationFailed`.
pub fn relate_extensions(
    small: &NaimarkExt,
    large: &NaimarkExt,
    hint: &RelationHint,
) -> Result<ExtensionRelation> {
    if small.n() != large.n() {
        return Err(Error::UnsupportedPair(format!(
            "outcome counts differ: {} vs {}",
            small.n(),
            large.n()
        )));
    }
    if small.d() != large.d() {
        return Err(Error::UnsupportedPair(format!(
            "original dims differ: {} vs {}",
            small.d(),
            large.d()
        )));
    }
    for i in 0..small.n() {
        if large.block_rank(i) < small.block_rank(i) {
            return Err(Error::UnsupportedPair(format!(
                "large block {} has rank {} < small rank {}",
                i,
                large.block_rank(i),
                small.block_rank(i)
            )));
        }
        let resid = frob_dist(&small.induced_effect(i), &large.induced_effect(i));
        if resid > tol::STRUCT_TOL {
            return Err(Error::UnsupportedPair(format!(
                "extensions induce different effects at outcome {} (residual {:.3e})",
                i, resid
            )));
        }
    }

    let q = match hint {
        RelationHint::PadInclusion => {
            let ds_small = product_system_dim(small).ok_or_else(|| {
                Error::UnsupportedPair("pad_inclusion hint on non-product small extension".into())
            })?;
            let ds_large = product_system_dim(large).ok_or_else(|| {
                Error::UnsupportedPair("pad_inclusion hint on non-product large extension".into())
            })?;
            if ds_large < ds_small {
                return Err(Error::UnsupportedPair(format!(
                    "pad inclusion needs large system dim {} ≥ small {}",
                    ds_large, ds_small
                )));
            }
            let n = small.n();
            let mut q = zeros(large.d_prime(), small.d_prime());
            for r in 0..ds_small {
                for i in 0..n {
                    q[(r * n + i, r * n + i)] = cone();
                }
            }
            q
        }
        RelationHint::Rotation(g) => g.clone(),
        RelationHint::ExplicitQ(q) => q.clone(),
    };

    if q.nrows() != large.d_prime() || q.ncols() != small.d_prime() {
        return Err(Error::UnsupportedPair(format!(
            "Q is {}x{}, expected {}x{}",
            q.nrows(),
            q.ncols(),
            large.d_prime(),
            small.d_prime()
        )));
    }
    let qdev = isometry_deviation(&q);
    if qdev > tol::HERM_TOL {
        return Err(Error::RelationVerificationFailed(format!(
            "Q is not an isometry (residual {:.3e})",
            qdev
        )));
    }
    for i in 0..small.n() {
        let resid = frob_dist(
            &(&large.projectors()[i] * &q),
            &(&q * &small.projectors()[i]),
        );
        if resid > tol::STRUCT_TOL {
            return Err(Error::RelationVerificationFailed(format!(
                "P_{i} Q ≠ Q P̂_{i} (residual {resid:.3e})"
            )));
        }
    }

    let u = build_block_unitary(small, large, &q)?;
    let udev = isometry_deviation(&u);
    if udev > tol::HERM_TOL {
        return Err(Error::RelationVerificationFailed(format!(
            "U is not unitary (residual {:.3e})",
            udev
        )));
    }
    for (i, p) in large.projectors().iter().enumerate() {
        let comm = frob(&(&u * p - p * &u));
        if comm > tol::STRUCT_TOL {
            return Err(Error::RelationVerificationFailed(format!(
                "U does not commute with P_{} (residual {:.3e})",
                i, comm
            )));
        }
    }
    let embed_resid = frob_dist(&(&u * large.w()), &(&q * small.w()));
    if embed_resid > tol::STRUCT_TOL {
        return Err(Error::RelationVerificationFailed(format!(
            "U W_large ≠ Q W_small (residual {:.3e})",
            embed_resid
        )));
    }

    // reversal channel: R_0 = Q†, then (1/√d_min)|â><b|(1 − QQ†) over an
    // incoherent basis {|â>} of the small space and the standard basis {|b>}
    let d_min = small.d_prime();
    let s_perp = eye(large.d_prime()) - &q * q.adjoint();
    let mut reversal = vec![q.adjoint()];
    if frob(&s_perp) > 1e-12 {
        let mut incoherent_basis: Vec<CVec> = Vec::with_capacity(d_min);
        for i in 0..small.n() {
            let b = small.block_basis(i)?;
            for c in 0..b.ncols() {
                incoherent_basis.push(b.column(c).into_owned());
            }
        }
        let scale = 1.0 / (d_min as f64).sqrt();
        for a_hat in &incoherent_basis {
            for b in 0..large.d_prime() {
                let row = s_perp.row(b).into_owned(); // <b| S⊥ (S⊥ Hermitian)
                let l = (a_hat * row).scale(scale);
                if frob(&l) > 1e-12 {
                    reversal.push(l);
                }
            }
        }
    }
    let mut comp = zeros(large.d_prime(), large.d_prime());
    for r in &reversal {
        comp += r.adjoint() * r;
    }
    let comp_resid = frob_dist(&comp, &eye(large.d_prime()));
    if comp_resid > tol::STRUCT_TOL {
        return Err(Error::RelationVerificationFailed(format!(
            "Σ R_m† R_m ≠ 1 (residual {:.3e})",
            comp_resid
        )));
    }

    let relation = ExtensionRelation {
        q,
        u,
        reversal_kraus: reversal,
        d_min,
    };

    // channel identities of N = R∘U on random inputs
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0001);
    for _ in 0..20 {
        let rho = quantum::hs_mixed(&mut rng, small.d());
        let lhs = relation.relate(&embed(&rho, large)?);
        let rhs = embed(&rho, small)?;
        let resid = frob_dist(&lhs, &rhs);
        if resid > tol::STRUCT_TOL {
            return Err(Error::RelationVerificationFailed(format!(
                "N ∘ embed_large ≠ embed_small (residual {:.3e})",
                resid
            )));
        }
        let sigma = quantum::hs_mixed(&mut rng, large.d_prime());
        let lhs = relation.relate(&block_dephase(sigma.mat(), large)?);
        let rhs = block_dephase(&relation.relate(sigma.mat()), small)?;
        let resid = frob_dist(&lhs, &rhs);
        if resid > tol::STRUCT_TOL {
            return Err(Error::RelationVerificationFailed(format!(
                "N ∘ Δ_large ≠ Δ_small ∘ N (residual {:.3e})",
                resid
            )));
        }
    }

    Ok(relation)
}

/// Lifts a set of block-incoherent, subspace-preserving Kraus operators on
/// the large extension to the small one: `K̂_{m,l} = R_m U K′_l U† Q`.
///
/// Verifies (i) completeness of the lifted set, (ii) block-incoherence in
/// action on sampled block-incoherent pure states, (iii) that the induced
/// original-space operators coincide: `W_s† K̂_{m,l} W_s =
/// δ_{m,0} · W_l† K′_l W_l`.
pub fn prop2_kraus_lift(
    small: &NaimarkExt,
    large: &NaimarkExt,
    relation: &ExtensionRelation,
    k_large: &[CMat],
) -> Result<Vec<CMat>> {
    let dl = large.d_prime();
    for (l, k) in k_large.iter().enumerate() {
        if k.nrows() != dl || k.ncols() != dl {
            return Err(Error::DimMismatch(format!(
                "Kraus operator {} is {}x{}, expected {}x{}",
                l,
                k.nrows(),
                k.ncols(),
                dl,
                dl
            )));
        }
    }
    let u = relation.u();
    let q = relation.q();
    let mut lifted = Vec::with_capacity(relation.reversal_kraus().len() * k_large.len());
    for (m, r) in relation.reversal_kraus().iter().enumerate() {
        for kp in k_large {
            let k_hat = r * (u * kp * u.adjoint()) * q;
            lifted.push((m, k_hat));
        }
    }

    // (i) completeness
    let ds = small.d_prime();
    let mut comp = zeros(ds, ds);
    for (_, k) in &lifted {
        comp += k.adjoint() * k;
    }
    let resid = frob_dist(&comp, &eye(ds));
    if resid > tol::STRUCT_TOL {
        return Err(Error::LiftVerificationFailed(format!(
            "(i) completeness residual {:.3e}",
            resid
        )));
    }

    // (ii) block-incoherent action on sampled block-incoherent pure states
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0002);
    for i in 0..small.n() {
        let basis = small.block_basis(i)?;
        for _ in 0..3 {
            let coeff = quantum::haar_vec(&mut rng, basis.ncols());
            let phi = &basis * coeff;
            for (_, k) in &lifted {
                let v = k * &phi;
                let nv = v.norm();
                if nv < 1e-10 {
                    continue;
                }
                let (mut best, mut best_j) = (-1.0, 0);
                for j in 0..small.n() {
                    let pj = (&small.projectors()[j] * &v).norm();
                    if pj > best {
                        best = pj;
                        best_j = j;
                    }
                }
                let off = (&v - &small.projectors()[best_j] * &v).norm();
                if off > tol::STRUCT_TOL * nv.max(1.0) {
                    return Err(Error::LiftVerificationFailed(format!(
                        "(ii) off-block residual {:.3e} from block {}",
                        off, i
                    )));
                }
            }
        }
    }

    // (iii) induced original-space operators
    for (idx, (m, k_hat)) in lifted.iter().enumerate() {
        let induced = small.w().adjoint() * k_hat * small.w();
        let expected = if *m == 0 {
            let kp = &k_large[idx % k_large.len()];
            large.w().adjoint() * kp * large.w()
        } else {
            zeros(small.d(), small.d())
        };
        let resid = frob_dist(&induced, &expected);
        if resid > tol::STRUCT_TOL {
            return Err(Error::LiftVerificationFailed(format!(
                "(iii) induced-operator residual {:.3e} at (m={}, l={})",
                resid,
                m,
                idx % k_large.len()
            )));
        }
    }

    Ok(lifted.into_iter().map(|(_, k)| k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::cr;
    use crate::quantum::{edelta, haar_unitary, hs_mixed, measure_stats, validate_povm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn z_basis() -> Povm {
        Povm::by_name("z-basis").unwrap()
    }

    #[test]
    fn canonical_z_basis_structure() {
        let ext = canonical_extension(&z_basis());
        assert_eq!(ext.d_prime(), 4);
        // W|b> = |b>⊗|b>: column 0 has support at index 0, column 1 at 3
        assert!((ext.w()[(0, 0)] - cone()).norm() < 1e-12);
        assert!((ext.w()[(3, 1)] - cone()).norm() < 1e-12);
        assert!(ext.w()[(1, 0)].norm() < 1e-12);
        assert!(ext.w()[(2, 1)].norm() < 1e-12);
    }

    #[test]
    fn canonical_trine_extends_with_tiny_residual() {
        let trine = edelta(1.0).unwrap();
        let ext = canonical_extension(&trine);
        assert_eq!(ext.d_prime(), 6);
        assert!(ext.extension_residual(&trine) < 1e-12);
    }

    #[test]
    fn canonical_single_outcome_is_identity() {
        let povm = validate_povm(vec![eye(3)]).unwrap();
        let ext = canonical_extension(&povm);
        assert_eq!(ext.d_prime(), 3);
        assert!(frob_dist(ext.w(), &eye(3)) < 1e-12);
    }

    #[test]
    fn eq4_contract_on_random_states() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let povm = edelta(0.7).unwrap();
        for ext in [
            canonical_extension(&povm),
            variant_extension(&canonical_extension(&povm), &VariantKind::Pad(2)).unwrap(),
            variant_extension(
                &canonical_extension(&povm),
                &VariantKind::Rotate(haar_unitary(&mut rng, 6)),
            )
            .unwrap(),
        ] {
            for _ in 0..50 {
                let rho = hs_mixed(&mut rng, 2);
                let emb = embed(&rho, &ext).unwrap();
                let stats = measure_stats(&rho, &povm).unwrap();
                for (i, p) in ext.projectors().iter().enumerate() {
                    let via_ext = (p * &emb).trace().re;
                    assert!((via_ext - stats.probs[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pad_keeps_extending_and_grows_space() {
        let trine = edelta(1.0).unwrap();
        let ext = canonical_extension(&trine);
        let padded = variant_extension(&ext, &VariantKind::Pad(1)).unwrap();
        assert_eq!(padded.d_prime(), 9);
        assert!(padded.extension_residual(&trine) < 1e-10);
    }

    #[test]
    fn rotate_keeps_extending() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let povm = z_basis();
        let ext = canonical_extension(&povm);
        let g = haar_unitary(&mut rng, 4);
        let rotated = variant_extension(&ext, &VariantKind::Rotate(g)).unwrap();
        assert!(rotated.extension_residual(&povm) < 1e-10);
        let identity = variant_extension(&ext, &VariantKind::Rotate(eye(4))).unwrap();
        assert!(frob_dist(identity.w(), ext.w()) < 1e-12);
    }

    #[test]
    fn dephase_fixes_block_diagonal_and_known_case() {
        let povm = z_basis();
        let ext = canonical_extension(&povm);
        // Δ of embedded ψ_x: diagonal (1/2, 0, 0, 1/2)
        let emb = embed(&DensityMatrix::psi_x(), &ext).unwrap();
        let deph = block_dephase(&emb, &ext).unwrap();
        let mut expected = zeros(4, 4);
        expected[(0, 0)] = cr(0.5);
        expected[(3, 3)] = cr(0.5);
        assert!(frob_dist(&deph, &expected) < 1e-12);
        // already block-diagonal input is a fixed point
        let again = block_dephase(&deph, &ext).unwrap();
        assert!(frob_dist(&again, &deph) < 1e-12);
    }

    #[test]
    fn dephase_is_projection_trace_preserving() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let ext = canonical_extension(&edelta(1.0).unwrap());
        for _ in 0..10 {
            let m = crate::quantum::ginibre(&mut rng, 6, 6);
            let d1 = block_dephase(&m, &ext).unwrap();
            let d2 = block_dephase(&d1, &ext).unwrap();
            assert!(frob_dist(&d2, &d1) < 1e-10);
            assert!((d1.trace() - m.trace()).norm() < 1e-10);
            let h = matops::symmetrize(&m);
            let dh = block_dephase(&h, &ext).unwrap();
            assert!(herm_deviation(&dh) < 1e-10);
        }
    }

    #[test]
    fn dephasing_difference_kraus_witness() {
        // Σ_{i,j} K_{ij} M K_{ij}† = nΔ[M] − M with K_{ij} = (P_i − P_j)/√2
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let ext = canonical_extension(&edelta(0.6).unwrap());
        let n = ext.n();
        let m = crate::quantum::ginibre(&mut rng, 6, 6);
        let mut acc = zeros(6, 6);
        for i in 0..n {
            for j in 0..n {
                let k = (&ext.projectors()[i] - &ext.projectors()[j]).scale(1.0 / 2.0f64.sqrt());
                acc += &k * &m * k.adjoint();
            }
        }
        let expected = block_dephase(&m, &ext).unwrap().scale(n as f64) - &m;
        assert!(frob_dist(&acc, &expected) < 1e-10);
    }

    #[test]
    fn embed_matches_measurement_statistics() {
        let ext = canonical_extension(&edelta(1.0).unwrap());
        let rho = DensityMatrix::maximally_mixed(2);
        let emb = embed(&rho, &ext).unwrap();
        assert!((emb.trace().re - 1.0).abs() < 1e-12);
        for p in ext.projectors() {
            assert!(((p * &emb).trace().re - 1.0 / 3.0).abs() < 1e-12);
        }
        let psi = embed(&DensityMatrix::psi_y(), &ext).unwrap();
        assert!(((&psi * &psi).trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn max_coherent_state_has_uniform_block_probs() {
        for povm in [z_basis(), edelta(1.0).unwrap()] {
            let ext = canonical_extension(&povm);
            let psi = max_coherent_block_state(&ext).unwrap();
            assert!((trace_re(&psi) - 1.0).abs() < 1e-12);
            for p in ext.projectors() {
                let prob = (p * &psi).trace().re;
                assert!((prob - 1.0 / ext.n() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn relate_canonical_to_pad() {
        let trine = edelta(1.0).unwrap();
        let small = canonical_extension(&trine);
        let large = variant_extension(&small, &VariantKind::Pad(2)).unwrap();
        let rel = relate_extensions(&small, &large, &RelationHint::PadInclusion).unwrap();
        assert!(isometry_deviation(rel.q()) < 1e-10);
        // A1 residual
        for i in 0..small.n() {
            let r = frob_dist(
                &(&large.projectors()[i] * rel.q()),
                &(rel.q() * &small.projectors()[i]),
            );
            assert!(r < 1e-10);
        }
        // A2 residual
        assert!(frob_dist(&(rel.u() * large.w()), &(rel.q() * small.w())) < 1e-10);
    }

    #[test]
    fn relate_canonical_to_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let povm = edelta(0.5).unwrap();
        let small = canonical_extension(&povm);
        let g = haar_unitary(&mut rng, 6);
        let large = variant_extension(&small, &VariantKind::Rotate(g.clone())).unwrap();
        let rel = relate_extensions(&small, &large, &RelationHint::Rotation(g)).unwrap();
        assert!(isometry_deviation(rel.u()) < 1e-10);
    }

    #[test]
    fn relate_identity_pair() {
        let small = canonical_extension(&z_basis());
        let rel =
            relate_extensions(&small, &small, &RelationHint::ExplicitQ(eye(4))).unwrap();
        assert!(frob_dist(rel.q(), &eye(4)) < 1e-12);
        assert!(frob_dist(rel.u(), &eye(4)) < 1e-10);
        assert_eq!(rel.reversal_kraus().len(), 1);
        assert!(frob_dist(&rel.reversal_kraus()[0], &eye(4)) < 1e-12);
    }

    #[test]
    fn relate_rejects_mismatched_povms() {
        let a = canonical_extension(&edelta(0.3).unwrap());
        let b = canonical_extension(&edelta(0.9).unwrap());
        assert!(matches!(
            relate_extensions(&a, &b, &RelationHint::ExplicitQ(eye(6))),
            Err(Error::UnsupportedPair(_))
        ));
    }

    #[test]
    fn identity_channel_lifts_to_identity() {
        let trine = edelta(1.0).unwrap();
        let small = canonical_extension(&trine);
        let large = variant_extension(&small, &VariantKind::Pad(1)).unwrap();
        let rel = relate_extensions(&small, &large, &RelationHint::PadInclusion).unwrap();
        let lifted = prop2_kraus_lift(&small, &large, &rel, &[eye(large.d_prime())]).unwrap();
        // K̂_{0,0} = 1 on the small space
        assert!(frob_dist(&lifted[0], &eye(small.d_prime())) < 1e-10);
        // m ≥ 1 terms annihilate the embedded subspace entirely: R_m Q = 0
        for k in lifted.iter().skip(1) {
            assert!(frob(&(k * small.w())) < 1e-10);
        }
    }
}
