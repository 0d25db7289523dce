//! Free operations of the POVM-coherence resource theory: checkers for
//! block-incoherent (BI) and subspace-preserving (SP) Kraus operators on a
//! Naimark extension, the descent of validated dilated Kraus sets to
//! POVM-incoherent (PI) operations on the original space, samplers for PI
//! channel families, the measurement map, maximally-POVM-incoherent (MPI)
//! channel application, and strong-monotonicity harnesses.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matops::{cr, eye, frob, hdot, herm_eig, psd_sqrt, trace_re, zeros, CMat};
use crate::measures;
use crate::naimark::{self, NaimarkExt};
use crate::quantum::{hs_mixed, DensityMatrix, Povm};
use crate::tol;

/// The space a Kraus set acts on.
#[derive(Debug, Clone)]
pub enum KrausSpace {
    /// The original d-dimensional space.
    Original(usize),
    /// The dilated space of a specific extension.
    Dilated(NaimarkExt),
}

impl KrausSpace {
    pub fn dim(&self) -> usize {
        match self {
            KrausSpace::Original(d) => *d,
            KrausSpace::Dilated(ext) => ext.d_prime(),
        }
    }
}

/// Validation flags; each is set only after the corresponding checker has
/// passed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KrausFlags {
    pub complete: bool,
    pub block_incoherent: bool,
    pub subspace_preserving: bool,
    pub strictly: bool,
}

/// A set of Kraus operators together with the space they act on, the
/// validation flags, and (when recovered by the BI checker) the outcome
/// index functions `f_l` mapping source blocks to target blocks.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub ops: Vec<CMat>,
    pub space: KrausSpace,
    pub flags: KrausFlags,
    pub index_maps: Option<Vec<Vec<Option<usize>>>>,
}

impl KrausSet {
    /// Wraps operators acting on `space` with cleared flags.
    pub fn new(ops: Vec<CMat>, space: KrausSpace) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::DimMismatch("empty Kraus set".into()));
        }
        let d = space.dim();
        for (l, k) in ops.iter().enumerate() {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator {} is {}x{}, space has dim {}",
                    l,
                    k.nrows(),
                    k.ncols(),
                    d
                )));
            }
        }
        Ok(KrausSet {
            ops,
            space,
            flags: KrausFlags::default(),
            index_maps: None,
        })
    }

    /// `‖Σ K†K − 1‖_F`.
    pub fn completeness_deviation(&self) -> f64 {
        let d = self.space.dim();
        let mut acc = zeros(d, d);
        for k in &self.ops {
            acc += k.adjoint() * k;
        }
        frob(&(acc - eye(d)))
    }

    /// Checks completeness and sets the flag on success.
    pub fn mark_complete(&mut self) -> Result<()> {
        let dev = self.completeness_deviation();
        if dev > tol::COMPLETENESS_TOL {
            return Err(Error::NotComplete(dev));
        }
        self.flags.complete = true;
        Ok(())
    }

    /// Applies the channel `Σ K X K†`.
    pub fn apply(&self, x: &CMat) -> CMat {
        let d = self.space.dim();
        let mut out = zeros(d, d);
        for k in &self.ops {
            out += k * x * k.adjoint();
        }
        out
    }
}

/// Block structure of a dilated operator: the recovered partial index map
/// (None where `K P_i ≈ 0`) and the worst residual of the "all other
/// target blocks vanish" condition.
fn bi_structure(k: &CMat, ext: &NaimarkExt) -> Result<(Vec<Option<usize>>, f64)> {
    let dp = ext.d_prime();
    if k.nrows() != dp || k.ncols() != dp {
        return Err(Error::DimMismatch(format!(
            "operator is {}x{}, dilated space has dim {}",
            k.nrows(),
            k.ncols(),
            dp
        )));
    }
    let mut map = Vec::with_capacity(ext.n());
    let mut violation = 0.0_f64;
    for pi in ext.projectors() {
        let kpi = k * pi;
        let mut best: Option<(usize, f64)> = None;
        let mut second = 0.0_f64;
        for (j, pj) in ext.projectors().iter().enumerate() {
            let norm = frob(&(pj * &kpi));
            match best {
                Some((_, b)) if norm <= b => second = second.max(norm),
                Some((_, b)) => {
                    second = second.max(b);
                    best = Some((j, norm));
                }
                None => best = Some((j, norm)),
            }
        }
        let (jbest, nbest) = best.expect("extensions have at least one block");
        if nbest > tol::KRAUS_TOL {
            map.push(Some(jbest));
            violation = violation.max(second);
        } else {
            map.push(None);
        }
    }
    Ok((map, violation))
}

/// Tests whether a dilated operator is block-incoherent: for each source
/// block `i`, `P_j K P_i = 0` within `1e-9` for all but at most one
/// `j =: f(i)`. Returns the recovered partial index map.
pub fn check_block_incoherent(k: &CMat, ext: &NaimarkExt) -> Result<(bool, Vec<Option<usize>>)> {
    let (map, violation) = bi_structure(k, ext)?;
    Ok((violation <= tol::KRAUS_TOL, map))
}

fn sp_residual(k: &CMat, ext: &NaimarkExt) -> Result<f64> {
    let dp = ext.d_prime();
    if k.nrows() != dp || k.ncols() != dp {
        return Err(Error::DimMismatch(format!(
            "operator is {}x{}, dilated space has dim {}",
            k.nrows(),
            k.ncols(),
            dp
        )));
    }
    let pi = ext.embedded_projector();
    let pperp = eye(dp) - &pi;
    Ok(frob(&(pperp * k * pi)))
}

/// Tests the subspace-preserving property `‖(1−Π) K Π‖_F ≤ 1e-9` with
/// `Π = W W†`.
pub fn check_subspace_preserving(k: &CMat, ext: &NaimarkExt) -> Result<bool> {
    Ok(sp_residual(k, ext)? <= tol::KRAUS_TOL)
}

/// Descends a complete set of BI + SP Kraus operators on the dilated
/// space to the POVM-incoherent Kraus set `K_l = W† K′_l W` on the
/// original space. The result is complete by construction; the `strictly`
/// flag is set when every adjoint also passes both checks.
pub fn pi_kraus_from_naimark(ks: &KrausSet, ext: &NaimarkExt) -> Result<KrausSet> {
    let dp = ext.d_prime();
    if ks.space.dim() != dp {
        return Err(Error::DimMismatch(format!(
            "Kraus set acts on dim {}, extension dilates to {}",
            ks.space.dim(),
            dp
        )));
    }
    let mut index_maps = Vec::with_capacity(ks.ops.len());
    let mut strictly = true;
    for k in &ks.ops {
        let (map, violation) = bi_structure(k, ext)?;
        if violation > tol::KRAUS_TOL {
            return Err(Error::NotBlockIncoherent(violation));
        }
        let sp = sp_residual(k, ext)?;
        if sp > tol::KRAUS_TOL {
            return Err(Error::NotSubspacePreserving(sp));
        }
        index_maps.push(map);
        if strictly {
            let adj = k.adjoint();
            let (_, adj_violation) = bi_structure(&adj, ext)?;
            strictly = adj_violation <= tol::KRAUS_TOL && sp_residual(&adj, ext)? <= tol::KRAUS_TOL;
        }
    }
    {
        let mut probe = ks.clone();
        probe.mark_complete()?;
    }
    let w = ext.w();
    let ops: Vec<CMat> = ks.ops.iter().map(|k| w.adjoint() * k * w).collect();
    let mut out = KrausSet::new(ops, KrausSpace::Original(ext.d()))?;
    out.mark_complete()?;
    out.flags.block_incoherent = true;
    out.flags.subspace_preserving = true;
    out.flags.strictly = strictly;
    out.index_maps = Some(index_maps);
    Ok(out)
}

/// PI channel families available from [`sample_pi_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiFamily {
    /// A single PI unitary `exp(iH′)` with `H′` block-diagonal and
    /// commuting with the embedded projector.
    Unitary,
    /// `k` PI unitaries with Dirichlet-uniform weights, `K′_l = √q_l U′_l`.
    UnitaryMixture(usize),
    /// `k` operators sampled in the intersection of a random-permutation
    /// BI pattern with the SP constraint, right-normalized by `G^{−1/2}`
    /// and re-verified; rejection-sampled up to 100 attempts.
    RejectionGeneral(usize),
}

const REJECTION_ATTEMPTS: usize = 100;

/// Orthonormal-block helper: returns the per-block bases of an extension.
fn block_bases(ext: &NaimarkExt) -> Result<Vec<CMat>> {
    (0..ext.n()).map(|i| ext.block_basis(i)).collect()
}

/// Real-coefficient generators of the Hermitian block-diagonal matrices.
fn hermitian_block_generators(bases: &[CMat]) -> Vec<CMat> {
    let mut gens = Vec::new();
    for b in bases {
        let r = b.ncols();
        for a in 0..r {
            let ba = b.column(a);
            gens.push(&ba * ba.adjoint());
            for c in (a + 1)..r {
                let bc = b.column(c);
                let m = &ba * bc.adjoint();
                gens.push(&m + m.adjoint());
                gens.push((&m - m.adjoint()).map(|x| x * Complex64::new(0.0, 1.0)));
            }
        }
    }
    gens
}

/// Real-coefficient generators of matrices supported on the block pattern
/// `(f(i), i)`.
fn pattern_generators(bases: &[CMat], f: &[usize]) -> Vec<CMat> {
    let mut gens = Vec::new();
    for (i, &fi) in f.iter().enumerate() {
        let src = &bases[i];
        let tgt = &bases[fi];
        for a in 0..tgt.ncols() {
            for c in 0..src.ncols() {
                let m = tgt.column(a) * src.column(c).adjoint();
                gens.push(m.map(|x| x * Complex64::new(0.0, 1.0)));
                gens.push(m);
            }
        }
    }
    gens
}

/// Basis (as matrices) of the real span of `gens` intersected with the
/// two-sided embedding constraint `(1−Π) X Π = 0` and `Π X (1−Π) = 0`,
/// found as the null space of the constraint Gram matrix. Elements commute
/// with `Π`, which keeps `Σ X†X` inside the commutant so that
/// right-normalization cannot break the subspace-preserving property.
fn sp_constrained_span(gens: &[CMat], ext: &NaimarkExt) -> Result<Vec<CMat>> {
    let dp = ext.d_prime();
    let pi = ext.embedded_projector();
    let pperp = eye(dp) - &pi;
    let imgs: Vec<(CMat, CMat)> = gens
        .iter()
        .map(|g| (&pperp * g * &pi, &pi * g * &pperp))
        .collect();
    let m = gens.len();
    let mut gram = zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = hdot(&imgs[j].0, &imgs[k].0) + hdot(&imgs[j].1, &imgs[k].1);
            gram[(j, k)] = cr(v);
            gram[(k, j)] = cr(v);
        }
    }
    let eig = herm_eig(&gram)?;
    let lam_max = eig.evals[m - 1].max(1.0);
    let mut out = Vec::new();
    for k in 0..m {
        if eig.evals[k] <= 1e-10 * lam_max {
            let mut combo = zeros(dp, dp);
            for j in 0..m {
                // null vectors of a real symmetric Gram are real
                combo += gens[j].scale(eig.evecs[(j, k)].re);
            }
            out.push(combo);
        }
    }
    Ok(out)
}

/// Samples a random real combination of span elements, normalized to a
/// moderate Frobenius norm.
fn sample_span(span: &[CMat], rng: &mut impl Rng) -> CMat {
    let (r, c) = (span[0].nrows(), span[0].ncols());
    let mut h = zeros(r, c);
    for b in span {
        let coef: f64 = rng.sample(StandardNormal);
        h += b.scale(coef);
    }
    let norm = frob(&h);
    if norm > 1e-12 {
        let target = 0.3 + 1.2 * rng.gen::<f64>();
        h = h.scale(target / norm);
    }
    h
}

/// `exp(iH)` for a Hermitian block-diagonal `H`, exponentiated block by
/// block to keep the result exactly block-diagonal.
fn block_exp_ih(h: &CMat, bases: &[CMat]) -> Result<CMat> {
    let dp = h.nrows();
    let mut u = zeros(dp, dp);
    for b in bases {
        let hb = b.adjoint() * h * b;
        let eig = herm_eig(&hb)?;
        let r = hb.nrows();
        let mut ub = zeros(r, r);
        for k in 0..r {
            let phase = Complex64::from_polar(1.0, eig.evals[k]);
            let v = eig.evecs.column(k);
            for p in 0..r {
                for q in 0..r {
                    ub[(p, q)] += phase * v[p] * v[q].conj();
                }
            }
        }
        u += b * ub * b.adjoint();
    }
    Ok(u)
}

/// Block-diagonal `G^{−1/2}`, or `None` when some block is numerically
/// singular.
fn block_inv_sqrt(g: &CMat, bases: &[CMat]) -> Result<Option<CMat>> {
    let dp = g.nrows();
    let mut out = zeros(dp, dp);
    for b in bases {
        let gb = b.adjoint() * g * b;
        let eig = herm_eig(&gb)?;
        let lam_max = eig.evals[gb.nrows() - 1];
        if eig.evals[0] < 1e-8 * lam_max.max(1.0) {
            return Ok(None);
        }
        let inv = eig.reassemble(|l| 1.0 / l.sqrt());
        out += b * inv * b.adjoint();
    }
    Ok(Some(out))
}

fn pi_unitary_span(ext: &NaimarkExt, bases: &[CMat]) -> Result<Vec<CMat>> {
    let span = sp_constrained_span(&hermitian_block_generators(bases), ext)?;
    // the identity is always a solution; a one-dimensional intersection
    // therefore only contains scalars
    if span.len() <= 1 {
        return Err(Error::DegenerateFamily(format!(
            "PI-unitary generator space has dimension {} (scalars only)",
            span.len()
        )));
    }
    Ok(span)
}

fn dirichlet_uniform(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    Dirichlet::new_with_size(1.0, k)
        .expect("valid Dirichlet parameters")
        .sample(rng)
}

/// Samples a complete Kraus set of the requested family on the dilated
/// space; every operator is drawn from (or re-checked against) the BI+SP
/// constrained families, so the set descends to a PI channel.
pub fn sample_dilated_pi_kraus(
    ext: &NaimarkExt,
    family: PiFamily,
    rng: &mut impl Rng,
) -> Result<KrausSet> {
    let bases = block_bases(ext)?;
    match family {
        PiFamily::Unitary => {
            let span = pi_unitary_span(ext, &bases)?;
            let u = block_exp_ih(&sample_span(&span, rng), &bases)?;
            let mut set = KrausSet::new(vec![u], KrausSpace::Dilated(ext.clone()))?;
            set.mark_complete()?;
            Ok(set)
        }
        PiFamily::UnitaryMixture(k) => {
            if k == 0 {
                return Err(Error::OutOfRange("mixture of zero unitaries".into()));
            }
            let span = pi_unitary_span(ext, &bases)?;
            let weights = dirichlet_uniform(k, rng);
            let mut ops = Vec::with_capacity(k);
            for &q in &weights {
                let u = block_exp_ih(&sample_span(&span, rng), &bases)?;
                ops.push(u.map(|x| x * Complex64::new(q.sqrt(), 0.0)));
            }
            let mut set = KrausSet::new(ops, KrausSpace::Dilated(ext.clone()))?;
            set.mark_complete()?;
            Ok(set)
        }
        PiFamily::RejectionGeneral(k) => {
            if k == 0 {
                return Err(Error::OutOfRange("empty general sampler".into()));
            }
            let n = ext.n();
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..REJECTION_ATTEMPTS {
                let mut ops = Vec::with_capacity(k);
                let mut usable = true;
                for _ in 0..k {
                    perm.shuffle(rng);
                    let span = sp_constrained_span(&pattern_generators(&bases, &perm), ext)?;
                    if span.is_empty() {
                        usable = false;
                        break;
                    }
                    ops.push(sample_span(&span, rng));
                }
                if !usable {
                    continue;
                }
                let dp = ext.d_prime();
                let mut g = zeros(dp, dp);
                for op in &ops {
                    g += op.adjoint() * op;
                }
                let Some(ginv) = block_inv_sqrt(&g, &bases)? else {
                    continue;
                };
                let normalized: Vec<CMat> = ops.iter().map(|op| op * &ginv).collect();
                let mut all_pass = true;
                for op in &normalized {
                    let (bi, _) = check_block_incoherent(op, ext)?;
                    if !bi || !check_subspace_preserving(op, ext)? {
                        all_pass = false;
                        break;
                    }
                }
                if !all_pass {
                    continue;
                }
                let mut set = KrausSet::new(normalized, KrausSpace::Dilated(ext.clone()))?;
                if set.mark_complete().is_err() {
                    continue;
                }
                return Ok(set);
            }
            Err(Error::SamplerExhausted(REJECTION_ATTEMPTS))
        }
    }
}

/// Samples a POVM-incoherent channel of the requested family and returns
/// the validated Kraus set on the original space.
pub fn sample_pi_channel(
    ext: &NaimarkExt,
    family: PiFamily,
    rng: &mut impl Rng,
) -> Result<KrausSet> {
    let dilated = sample_dilated_pi_kraus(ext, family, rng)?;
    pi_kraus_from_naimark(&dilated, ext)
}

/// Applies a complete Kraus set selectively: outcomes `(p_l, ρ_l)` with
/// `p_l = tr(K_l ρ K_l†)`, omitting outcomes below the probability floor.
pub fn apply_kraus_selective(
    rho: &DensityMatrix,
    ks: &KrausSet,
) -> Result<Vec<(f64, DensityMatrix)>> {
    let dev = ks.completeness_deviation();
    if dev > tol::COMPLETENESS_TOL {
        return Err(Error::NotComplete(dev));
    }
    if ks.space.dim() != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs Kraus space dim {}",
            rho.dim(),
            ks.space.dim()
        )));
    }
    let mut out = Vec::new();
    let mut total = 0.0;
    for k in &ks.ops {
        let unnorm = k * rho.mat() * k.adjoint();
        let p = trace_re(&unnorm).max(0.0);
        total += p;
        if p >= tol::PROB_FLOOR {
            out.push((p, DensityMatrix::new(unnorm.unscale(p))?));
        }
    }
    if (total - 1.0).abs() > tol::TRACE_TOL {
        return Err(Error::NotComplete((total - 1.0).abs()));
    }
    Ok(out)
}

/// The measurement map `Λ_E[ρ] = Σ_i √E_i ρ √E_i` (unital and
/// trace-preserving). Uses the positive square roots of the effects, which
/// are gauge-independent.
pub fn measurement_map(rho: &DensityMatrix, povm: &Povm) -> Result<DensityMatrix> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let mut out = zeros(rho.dim(), rho.dim());
    for e in povm.effects() {
        let root = psd_sqrt(e)?;
        out += &root * rho.mat() * &root;
    }
    DensityMatrix::new(out)
}

const MPI_PROBE_STATES: usize = 20;
const MPI_PROBE_SEED: u64 = 0x5EED_0003;

/// Applies a maximally-POVM-incoherent channel given on the dilated space:
/// `ρ ↦ W† Λ′[W ρ W†] W`. The two defining preconditions are checked
/// statistically on sampled inputs: Λ′ must preserve block-incoherent
/// states and must preserve the embedded subspace.
pub fn apply_mpi(rho: &DensityMatrix, ext: &NaimarkExt, lam_big: &KrausSet) -> Result<DensityMatrix> {
    let dp = ext.d_prime();
    if lam_big.space.dim() != dp {
        return Err(Error::DimMismatch(format!(
            "channel acts on dim {}, extension dilates to {}",
            lam_big.space.dim(),
            dp
        )));
    }
    if rho.dim() != ext.d() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs original dim {}",
            rho.dim(),
            ext.d()
        )));
    }
    let dev = lam_big.completeness_deviation();
    if dev > tol::COMPLETENESS_TOL {
        return Err(Error::NotComplete(dev));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(MPI_PROBE_SEED);
    for _ in 0..MPI_PROBE_STATES {
        let sigma = naimark::block_dephase(hs_mixed(&mut rng, dp).mat(), ext)?;
        let tau = lam_big.apply(&sigma);
        let residual = frob(&(&tau - naimark::block_dephase(&tau, ext)?));
        if residual > tol::STRUCT_TOL {
            return Err(Error::NotMbi(residual));
        }
    }
    let pi = ext.embedded_projector();
    for _ in 0..MPI_PROBE_STATES {
        let probe = hs_mixed(&mut rng, ext.d());
        let tau = lam_big.apply(&naimark::embed(&probe, ext)?);
        let residual = frob(&(&tau - &pi * &tau * &pi));
        if residual > tol::STRUCT_TOL {
            return Err(Error::NotEmbeddedPreserving(residual));
        }
    }
    let w = ext.w();
    let out = w.adjoint() * lam_big.apply(&naimark::embed(rho, ext)?) * w;
    // leakage within the precondition tolerance may shave the trace
    let tr = trace_re(&out);
    DensityMatrix::new(out.unscale(tr))
}

/// Strong-monotonicity margin `C(ρ) − Σ_l p_l C(ρ_l)` of a named measure
/// under a PI-validated Kraus set acting selectively.
pub fn check_strong_monotonicity(
    measure: &str,
    rho: &DensityMatrix,
    ks: &KrausSet,
    povm: &Povm,
) -> Result<f64> {
    if !(ks.flags.complete && ks.flags.block_incoherent && ks.flags.subspace_preserving) {
        return Err(Error::OutOfRange(
            "Kraus set has not passed PI validation".into(),
        ));
    }
    let before = measures::eval_named(measure, rho, povm)?;
    let mut average = 0.0;
    for (p, post) in apply_kraus_selective(rho, ks)? {
        average += p * measures::eval_named(measure, &post, povm)?;
    }
    Ok(before - average)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{basis_vec, frob_dist, isometry_deviation};
    use crate::measures::{c_rel_povm, eval_named};
    use crate::naimark::{canonical_extension, relate_extensions, variant_extension};
    use crate::naimark::{prop2_kraus_lift, RelationHint, VariantKind};
    use crate::quantum::{edelta, haar_pure};

    fn z_ext() -> NaimarkExt {
        canonical_extension(&Povm::by_name("z-basis").unwrap())
    }

    fn trine_ext() -> NaimarkExt {
        canonical_extension(&edelta(1.0).unwrap())
    }

    #[test]
    fn bi_checker_recovers_index_maps() {
        let ext = trine_ext();
        // a single block projector is BI with f(2) = 2
        let (ok, f) = check_block_incoherent(&ext.projectors()[2], &ext).unwrap();
        assert!(ok);
        assert_eq!(f, vec![None, None, Some(2)]);
        // a block swap is BI with a transposition
        let b1 = ext.block_basis(1).unwrap();
        let b2 = ext.block_basis(2).unwrap();
        let swap = &b1 * b2.adjoint() + &b2 * b1.adjoint();
        let (ok, f) = check_block_incoherent(&swap, &ext).unwrap();
        assert!(ok);
        assert_eq!(f, vec![None, Some(2), Some(1)]);
        // a generic matrix hits at least two target blocks
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let g = crate::quantum::ginibre(&mut rng, 6, 6);
        let (ok, _) = check_block_incoherent(&g, &ext).unwrap();
        assert!(!ok);
    }

    #[test]
    fn sp_checker_examples() {
        let ext = trine_ext();
        let pi = ext.embedded_projector();
        assert!(check_subspace_preserving(&pi, &ext).unwrap());
        assert!(check_subspace_preserving(&eye(6), &ext).unwrap());
        // rank-1 map from im W to its complement
        let v = ext.w().column(0).into_owned();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let z = crate::quantum::haar_vec(&mut rng, 6);
        let u = (eye(6) - &pi) * z;
        let u = u.unscale(u.norm());
        let k = u * v.adjoint();
        assert!(!check_subspace_preserving(&k, &ext).unwrap());
    }

    #[test]
    fn identity_descends_to_identity() {
        let ext = trine_ext();
        let mut set = KrausSet::new(vec![eye(6)], KrausSpace::Dilated(ext.clone())).unwrap();
        set.mark_complete().unwrap();
        let out = pi_kraus_from_naimark(&set, &ext).unwrap();
        assert_eq!(out.ops.len(), 1);
        assert!(frob_dist(&out.ops[0], &eye(2)) < 1e-12);
        assert!(out.flags.complete && out.flags.strictly);
    }

    #[test]
    fn rejects_non_bi_and_non_sp_sets() {
        let ext = z_ext();
        // unitary rotating between blocks: not BI
        let theta = std::f64::consts::FRAC_PI_4;
        let mut u = eye(4);
        u[(0, 0)] = cr(theta.cos());
        u[(1, 1)] = cr(theta.cos());
        u[(0, 1)] = cr(-theta.sin());
        u[(1, 0)] = cr(theta.sin());
        let mut set = KrausSet::new(vec![u], KrausSpace::Dilated(ext.clone())).unwrap();
        set.mark_complete().unwrap();
        match pi_kraus_from_naimark(&set, &ext) {
            Err(Error::NotBlockIncoherent(_)) => {}
            other => panic!("expected NotBlockIncoherent, got {:?}", other),
        }
        // block-diagonal unitary moving im W out of itself: BI but not SP
        let mut v = eye(4);
        v[(0, 0)] = cr(0.0);
        v[(2, 2)] = cr(0.0);
        v[(0, 2)] = cr(1.0);
        v[(2, 0)] = cr(1.0);
        let mut set = KrausSet::new(vec![v], KrausSpace::Dilated(ext.clone())).unwrap();
        set.mark_complete().unwrap();
        match pi_kraus_from_naimark(&set, &ext) {
            Err(Error::NotSubspacePreserving(_)) => {}
            other => panic!("expected NotSubspacePreserving, got {:?}", other),
        }
    }

    #[test]
    fn pi_unitary_on_z_basis_is_a_phase_gate() {
        let ext = z_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let set = sample_pi_channel(&ext, PiFamily::Unitary, &mut rng).unwrap();
        assert_eq!(set.ops.len(), 1);
        let k = &set.ops[0];
        assert!(isometry_deviation(k) < 1e-9);
        assert!(k[(0, 1)].norm() < 1e-9 && k[(1, 0)].norm() < 1e-9);
        assert!((k[(0, 0)].norm() - 1.0).abs() < 1e-9);
        assert!(set.flags.strictly);
    }

    #[test]
    fn pi_mixture_on_trine_is_complete() {
        let ext = trine_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        let set = sample_pi_channel(&ext, PiFamily::UnitaryMixture(3), &mut rng).unwrap();
        assert_eq!(set.ops.len(), 3);
        assert!(set.completeness_deviation() < 1e-10);
        assert!(set.flags.complete && set.flags.block_incoherent);
        assert!(set.flags.subspace_preserving && set.flags.strictly);
    }

    #[test]
    fn rejection_sampler_yields_validated_sets() {
        let ext = trine_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        let set = sample_pi_channel(&ext, PiFamily::RejectionGeneral(2), &mut rng).unwrap();
        assert_eq!(set.ops.len(), 2);
        assert!(set.flags.complete && set.flags.block_incoherent && set.flags.subspace_preserving);
        let maps = set.index_maps.as_ref().unwrap();
        assert_eq!(maps.len(), 2);
    }

    #[test]
    fn rejection_on_projective_extension_gives_incoherent_structure() {
        // for a projective POVM with its canonical self-extension, PI Kraus
        // operators have at most one nonzero entry per column
        let ext = z_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(46);
        let set = sample_pi_channel(&ext, PiFamily::RejectionGeneral(2), &mut rng).unwrap();
        for k in &set.ops {
            for col in 0..2 {
                let nonzero = (0..2).filter(|&r| k[(r, col)].norm() > 1e-9).count();
                assert!(nonzero <= 1, "column {} has {} entries", col, nonzero);
            }
        }
    }

    #[test]
    fn selective_application_examples() {
        let ext = trine_ext();
        let trine = edelta(1.0).unwrap();
        let psi_z = DensityMatrix::psi_z();
        // identity channel
        let mut id = KrausSet::new(vec![eye(2)], KrausSpace::Original(2)).unwrap();
        id.mark_complete().unwrap();
        let outcomes = apply_kraus_selective(&psi_z, &id).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert!((outcomes[0].0 - 1.0).abs() < 1e-12);
        assert!(frob_dist(outcomes[0].1.mat(), psi_z.mat()) < 1e-12);
        // a PI unitary preserves the coherence value
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let unitary = sample_pi_channel(&ext, PiFamily::Unitary, &mut rng).unwrap();
        let psi_x = DensityMatrix::psi_x();
        let before = c_rel_povm(&psi_x, &trine).unwrap();
        let outs = apply_kraus_selective(&psi_x, &unitary).unwrap();
        assert_eq!(outs.len(), 1);
        assert!((c_rel_povm(&outs[0].1, &trine).unwrap() - before).abs() < 1e-9);
        // mixture outcomes form a distribution with valid posts
        let mixture = sample_pi_channel(&ext, PiFamily::UnitaryMixture(3), &mut rng).unwrap();
        let outs = apply_kraus_selective(&psi_z, &mixture).unwrap();
        let total: f64 = outs.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for (_, post) in &outs {
            assert!((post.mat().trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn measurement_map_examples() {
        // projective measurement map is full dephasing
        let z = Povm::by_name("z-basis").unwrap();
        let psi_x = DensityMatrix::psi_x();
        let dephased = measurement_map(&psi_x, &z).unwrap();
        assert!(dephased.mat()[(0, 1)].norm() < 1e-12);
        assert!(c_rel_povm(&dephased, &z).unwrap().abs() < 1e-10);
        // the trine map fixes the maximally mixed state and its coherence
        let trine = edelta(1.0).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        let mapped = measurement_map(&half, &trine).unwrap();
        assert!(frob_dist(mapped.mat(), half.mat()) < 1e-12);
        let before = c_rel_povm(&half, &trine).unwrap();
        let after = c_rel_povm(&mapped, &trine).unwrap();
        assert!((before - after).abs() < 1e-9);
        assert!((before - (3.0_f64.log2() - 1.0)).abs() < 1e-9);
        // unital on a random POVM
        let mut rng = ChaCha12Rng::seed_from_u64(48);
        let povm = crate::quantum::random_povm(&mut rng, 3, 4).unwrap();
        let mm = DensityMatrix::maximally_mixed(3);
        let out = measurement_map(&mm, &povm).unwrap();
        assert!(frob_dist(out.mat(), mm.mat()) < 1e-10);
    }

    #[test]
    fn mpi_dephasing_on_projective_extension() {
        let ext = z_ext();
        let mut deph =
            KrausSet::new(ext.projectors().to_vec(), KrausSpace::Dilated(ext.clone())).unwrap();
        deph.mark_complete().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(49);
        let rho = hs_mixed(&mut rng, 2);
        let out = apply_mpi(&rho, &ext, &deph).unwrap();
        assert!(out.mat()[(0, 1)].norm() < 1e-10);
        assert!((out.mat()[(0, 0)].re - rho.mat()[(0, 0)].re).abs() < 1e-10);
    }

    #[test]
    fn mpi_matches_pi_route_for_unitary_channels() {
        let ext = trine_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(50);
        let bases = block_bases(&ext).unwrap();
        let span = pi_unitary_span(&ext, &bases).unwrap();
        let u = block_exp_ih(&sample_span(&span, &mut rng), &bases).unwrap();
        let mut dilated = KrausSet::new(vec![u], KrausSpace::Dilated(ext.clone())).unwrap();
        dilated.mark_complete().unwrap();
        let original = pi_kraus_from_naimark(&dilated, &ext).unwrap();
        let rho = hs_mixed(&mut rng, 2);
        let via_mpi = apply_mpi(&rho, &ext, &dilated).unwrap();
        let via_kraus = DensityMatrix::new(original.apply(rho.mat())).unwrap();
        assert!(frob_dist(via_mpi.mat(), via_kraus.mat()) < 1e-10);
    }

    #[test]
    fn mpi_rejects_invalid_channels() {
        let ext = z_ext();
        let mut rng = ChaCha12Rng::seed_from_u64(51);
        let rho = hs_mixed(&mut rng, 2);
        // block-diagonal unitary that moves the embedded subspace
        let mut v = eye(4);
        v[(0, 0)] = cr(0.0);
        v[(2, 2)] = cr(0.0);
        v[(0, 2)] = cr(1.0);
        v[(2, 0)] = cr(1.0);
        let mut set = KrausSet::new(vec![v], KrausSpace::Dilated(ext.clone())).unwrap();
        set.mark_complete().unwrap();
        match apply_mpi(&rho, &ext, &set) {
            Err(Error::NotEmbeddedPreserving(_)) => {}
            other => panic!("expected NotEmbeddedPreserving, got {:?}", other),
        }
        // rotation between blocks creates block coherence
        let theta = std::f64::consts::FRAC_PI_4;
        let mut u = eye(4);
        u[(0, 0)] = cr(theta.cos());
        u[(1, 1)] = cr(theta.cos());
        u[(0, 1)] = cr(-theta.sin());
        u[(1, 0)] = cr(theta.sin());
        let mut set = KrausSet::new(vec![u], KrausSpace::Dilated(ext.clone())).unwrap();
        set.mark_complete().unwrap();
        match apply_mpi(&rho, &ext, &set) {
            Err(Error::NotMbi(_)) => {}
            other => panic!("expected NotMbi, got {:?}", other),
        }
    }

    #[test]
    fn strong_monotonicity_margins() {
        let ext = trine_ext();
        let trine = edelta(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(52);
        // identity channel has margin zero
        let mut id = KrausSet::new(vec![eye(2)], KrausSpace::Original(2)).unwrap();
        id.mark_complete().unwrap();
        id.flags.block_incoherent = true;
        id.flags.subspace_preserving = true;
        let rho = hs_mixed(&mut rng, 2);
        let margin = check_strong_monotonicity("c_rel", &rho, &id, &trine).unwrap();
        assert!(margin.abs() < 1e-10);
        // sampled PI channels never increase c_rel or c_rob on average
        for trial in 0..4 {
            let family = if trial % 2 == 0 {
                PiFamily::UnitaryMixture(2)
            } else {
                PiFamily::RejectionGeneral(2)
            };
            let set = sample_pi_channel(&ext, family, &mut rng).unwrap();
            let state = if trial < 2 {
                haar_pure(&mut rng, 2)
            } else {
                hs_mixed(&mut rng, 2)
            };
            for m in ["c_rel", "c_rob"] {
                let margin = check_strong_monotonicity(m, &state, &set, &trine).unwrap();
                assert!(
                    margin >= -tol::MONOTONE_TOL,
                    "{} margin {} on trial {}",
                    m,
                    margin,
                    trial
                );
            }
        }
    }

    #[test]
    fn unvalidated_sets_are_refused() {
        let trine = edelta(1.0).unwrap();
        let mut id = KrausSet::new(vec![eye(2)], KrausSpace::Original(2)).unwrap();
        id.mark_complete().unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(check_strong_monotonicity("c_rel", &rho, &id, &trine).is_err());
        assert!(eval_named("c_bogus", &rho, &trine).is_err());
    }

    #[test]
    fn induced_channel_agrees_across_extensions() {
        // a BI+SP set on the padded extension and its lift to the canonical
        // extension induce the same original-space channel
        let trine = edelta(1.0).unwrap();
        let small = canonical_extension(&trine);
        let large = variant_extension(&small, &VariantKind::Pad(2)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let bases = block_bases(&large).unwrap();
        let span = pi_unitary_span(&large, &bases).unwrap();
        let weights = dirichlet_uniform(2, &mut rng);
        let mut ops = Vec::new();
        for &q in &weights {
            let u = block_exp_ih(&sample_span(&span, &mut rng), &bases).unwrap();
            ops.push(u.map(|x| x * Complex64::new(q.sqrt(), 0.0)));
        }
        let mut on_large = KrausSet::new(ops, KrausSpace::Dilated(large.clone())).unwrap();
        on_large.mark_complete().unwrap();
        let direct = pi_kraus_from_naimark(&on_large, &large).unwrap();

        let relation = relate_extensions(&small, &large, &RelationHint::PadInclusion).unwrap();
        let lifted_ops = prop2_kraus_lift(&small, &large, &relation, &on_large.ops).unwrap();
        let mut on_small =
            KrausSet::new(lifted_ops, KrausSpace::Dilated(small.clone())).unwrap();
        on_small.mark_complete().unwrap();
        let via_lift = pi_kraus_from_naimark(&on_small, &small).unwrap();

        for _ in 0..3 {
            let rho = hs_mixed(&mut rng, 2);
            let a = direct.apply(rho.mat());
            let b = via_lift.apply(rho.mat());
            assert!(frob_dist(&a, &b) < 1e-7);
        }
    }

    #[test]
    fn mpi_monotonicity_of_average_measures() {
        let ext = trine_ext();
        let trine = edelta(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(54);
        for _ in 0..2 {
            // a PI mixture channel is in particular MPI on the dilated space
            let bases = block_bases(&ext).unwrap();
            let span = pi_unitary_span(&ext, &bases).unwrap();
            let weights = dirichlet_uniform(2, &mut rng);
            let mut ops = Vec::new();
            for &q in &weights {
                let u = block_exp_ih(&sample_span(&span, &mut rng), &bases).unwrap();
                ops.push(u.map(|x| x * Complex64::new(q.sqrt(), 0.0)));
            }
            let mut dilated = KrausSet::new(ops, KrausSpace::Dilated(ext.clone())).unwrap();
            dilated.mark_complete().unwrap();
            let rho = hs_mixed(&mut rng, 2);
            let out = apply_mpi(&rho, &ext, &dilated).unwrap();
            for m in ["c_rel", "c_rob", "c_geo"] {
                let before = eval_named(m, &rho, &trine).unwrap();
                let after = eval_named(m, &out, &trine).unwrap();
                assert!(
                    after <= before + tol::MONOTONE_TOL,
                    "{}: {} -> {}",
                    m,
                    before,
                    after
                );
            }
        }
    }

    #[test]
    fn basis_vec_sanity() {
        // the pattern generators use block bases; spot-check alignment on
        // the canonical layout where block i collects indices r·n + i
        let ext = trine_ext();
        let b0 = ext.block_basis(0).unwrap();
        assert!((b0.column(0).into_owned() - basis_vec(6, 0)).norm() < 1e-12);
        assert!((b0.column(1).into_owned() - basis_vec(6, 3)).norm() < 1e-12);
    }
}
