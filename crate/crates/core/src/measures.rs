//! Coherence quantifiers with respect to POVM measurements and their
//! block-coherence counterparts on Naimark extensions.
//!
//! POVM paths evaluate directly on the original space (relative entropy via
//! the outcome ensemble, ℓ1 via trace norms of `A_i ρ A_j†`, robustness and
//! the geometric measure via semidefinite programs); block paths evaluate
//! the same quantities for a state of the dilated space relative to the
//! projective block structure of an arbitrary extension. The two routes
//! agree on embedded states, which the tests exercise as an invariant
//! rather than collapsing one path into the other.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matops::{cr, eye, hdot, herm_eig, thin_svd, trace_norm, trace_re, zeros, CMat};
use crate::naimark::{self, NaimarkExt};
use crate::quantum::{self, measure_stats, DensityMatrix, Povm};
use crate::sdp::{self, SdpProblem, SdpSolution, SdpStatus};
use crate::tol;

/// Which form(s) of the robustness SDP to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobForm {
    Primal,
    Dual,
    Both,
}

/// An SDP certificate attached to a reported value.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// Which program the solution certifies ("primal" or "dual").
    pub form: String,
    pub solution: SdpSolution,
}

/// A measure evaluation with provenance.
#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub name: String,
    pub value: f64,
    /// Extension label when a dilation was involved ("canonical",
    /// "pad:k", "rotate", or an explicit description).
    pub extension_used: Option<String>,
    pub certificate: Option<Certificate>,
    /// |primal − dual| when both forms were solved.
    pub certificate_gap: Option<f64>,
}

/// Contiguous block partition of a dilated space after rebasing.
#[derive(Debug, Clone)]
struct Partition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl Partition {
    fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &s in &sizes {
            offsets.push(at);
            at += s;
        }
        Partition {
            sizes,
            offsets,
            total: at,
        }
    }

    fn n(&self) -> usize {
        self.sizes.len()
    }

    fn slice(&self, m: &CMat, i: usize, j: usize) -> CMat {
        m.view(
            (self.offsets[i], self.offsets[j]),
            (self.sizes[i], self.sizes[j]),
        )
        .into_owned()
    }
}

/// Conjugates `m` into a basis where the extension's blocks are contiguous
/// index ranges, returning the rebased matrix and the partition.
fn rebase(m: &CMat, ext: &NaimarkExt) -> Result<(CMat, Partition)> {
    if m.nrows() != ext.d_prime() || m.ncols() != ext.d_prime() {
        return Err(Error::DimMismatch(format!(
            "matrix is {}x{}, dilated space has dim {}",
            m.nrows(),
            m.ncols(),
            ext.d_prime()
        )));
    }
    let mut cols = Vec::with_capacity(ext.d_prime());
    let mut sizes = Vec::with_capacity(ext.n());
    for i in 0..ext.n() {
        let b = ext.block_basis(i)?;
        sizes.push(b.ncols());
        for c in 0..b.ncols() {
            cols.push(b.column(c).into_owned());
        }
    }
    let basis = CMat::from_columns(&cols);
    Ok((basis.adjoint() * m * basis, Partition::new(sizes)))
}

fn check_state_povm(rho: &DensityMatrix, povm: &Povm) -> Result<()> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    Ok(())
}

/// Relative entropy of block coherence `S(Δ[M]) − S(M)` for a density
/// matrix on the dilated space.
pub fn c_rel_block(m: &CMat, ext: &NaimarkExt) -> Result<f64> {
    let deph = naimark::block_dephase(m, ext)?;
    Ok(quantum::vn_entropy(&deph)? - quantum::vn_entropy(m)?)
}

/// Relative entropy of POVM-based coherence,
/// `H({p_i}) + Σ_i p_i S(ρ_i) − S(ρ)` with outcomes below the probability
/// floor dropped.
pub fn c_rel_povm(rho: &DensityMatrix, povm: &Povm) -> Result<f64> {
    check_state_povm(rho, povm)?;
    let stats = measure_stats(rho, povm)?;
    let mut v = quantum::shannon(&stats.probs)?;
    for (p, post) in stats.probs.iter().zip(&stats.post_states) {
        if let Some(sigma) = post {
            v += p * quantum::vn_entropy(sigma.mat())?;
        }
    }
    v -= quantum::vn_entropy(rho.mat())?;
    Ok(v)
}

/// Block ℓ1 coherence `Σ_{i≠j} ||P_i M P_j||_1`.
pub fn c_l1_block(m: &CMat, ext: &NaimarkExt) -> Result<f64> {
    if m.nrows() != ext.d_prime() || m.ncols() != ext.d_prime() {
        return Err(Error::DimMismatch(format!(
            "matrix is {}x{}, dilated space has dim {}",
            m.nrows(),
            m.ncols(),
            ext.d_prime()
        )));
    }
    let mut v = 0.0;
    for (i, pi) in ext.projectors().iter().enumerate() {
        for (j, pj) in ext.projectors().iter().enumerate() {
            if i == j {
                continue;
            }
            v += trace_norm(&(pi * m * pj))?;
        }
    }
    Ok(v)
}

/// ℓ1 POVM-based coherence `Σ_{i≠j} ||A_i ρ A_j†||_1`.
pub fn c_l1_povm(rho: &DensityMatrix, povm: &Povm) -> Result<f64> {
    check_state_povm(rho, povm)?;
    let ops = povm.meas_ops();
    let mut v = 0.0;
    for (i, ai) in ops.iter().enumerate() {
        for (j, aj) in ops.iter().enumerate() {
            if i == j {
                continue;
            }
            v += trace_norm(&(ai * rho.mat() * aj.adjoint()))?;
        }
    }
    Ok(v)
}

/// Encodes equality of a Hermitian-pair entry of the variable with a fixed
/// complex value: two real constraints per independent complex entry.
fn pin_entry(
    constraints: &mut Vec<(Vec<CMat>, f64)>,
    dim: usize,
    gi: usize,
    gj: usize,
    value: Complex64,
) {
    if gi == gj {
        let mut a = zeros(dim, dim);
        a[(gi, gi)] = cr(1.0);
        constraints.push((vec![a], value.re));
        return;
    }
    // <E_re, Z> = 2 Re Z_{gi,gj}
    let mut a = zeros(dim, dim);
    a[(gi, gj)] = cr(1.0);
    a[(gj, gi)] = cr(1.0);
    constraints.push((vec![a], 2.0 * value.re));
    // <E_im, Z> = −2 Im Z_{gi,gj}
    let mut a = zeros(dim, dim);
    a[(gi, gj)] = Complex64::new(0.0, 1.0);
    a[(gj, gi)] = Complex64::new(0.0, -1.0);
    constraints.push((vec![a], -2.0 * value.im));
}

/// Robustness primal: `min Σ_i tr σ_{ii}` over σ ⪰ 0 with fixed
/// off-diagonal blocks `σ_{i≠j} = −M̃_{i≠j}`.
fn rob_primal(m_tilde: &CMat, part: &Partition) -> Result<SdpSolution> {
    let dim = part.total;
    let mut constraints = Vec::new();
    for i in 0..part.n() {
        for j in 0..i {
            let target = part.slice(m_tilde, i, j);
            for r in 0..part.sizes[i] {
                for c in 0..part.sizes[j] {
                    pin_entry(
                        &mut constraints,
                        dim,
                        part.offsets[i] + r,
                        part.offsets[j] + c,
                        -target[(r, c)],
                    );
                }
            }
        }
    }
    let p = SdpProblem::new(vec![dim], vec![eye(dim)], constraints)?;
    sdp::solve(&p)
}

/// Robustness dual: `max Σ_{i≠j} <X_ij, M̃_ji>` over X ⪰ 0 with identity
/// diagonal blocks, via `min <−M̃, X>`. On a unit-trace M̃ the objective
/// is `<X, M̃> − 1`.
fn rob_dual(m_tilde: &CMat, part: &Partition) -> Result<SdpSolution> {
    let dim = part.total;
    let mut constraints = Vec::new();
    for i in 0..part.n() {
        for r in 0..part.sizes[i] {
            for c in 0..=r {
                let v = if r == c { cr(1.0) } else { cr(0.0) };
                pin_entry(
                    &mut constraints,
                    dim,
                    part.offsets[i] + r,
                    part.offsets[i] + c,
                    v,
                );
            }
        }
    }
    let cost = m_tilde.scale(-1.0);
    let p = SdpProblem::new(vec![dim], vec![cost], constraints)?;
    sdp::solve(&p)
}

/// Block-diagonal isometry onto the per-block column span of the pinned
/// off-diagonal data of `m_tilde`, with the reduced partition. The
/// minimal-trace completion is supported there, so solving the compressed
/// program loses nothing. Returns `None` when no block compresses or when
/// every off-diagonal block vanishes (the full program is already well
/// conditioned in both cases).
fn rob_support(m_tilde: &CMat, part: &Partition) -> Result<Option<(CMat, Partition)>> {
    let mut bases = Vec::with_capacity(part.n());
    for i in 0..part.n() {
        let mut stack = zeros(part.sizes[i], part.total - part.sizes[i]);
        let mut at = 0;
        for j in 0..part.n() {
            if j == i {
                continue;
            }
            let blk = part.slice(m_tilde, i, j);
            for c in 0..blk.ncols() {
                for r in 0..blk.nrows() {
                    stack[(r, at)] = blk[(r, c)];
                }
                at += 1;
            }
        }
        let (u, _, _) = thin_svd(&stack, tol::EIG_CLIP)?;
        bases.push(u);
    }
    let rsizes: Vec<usize> = bases.iter().map(CMat::ncols).collect();
    let rtotal: usize = rsizes.iter().sum();
    if rtotal == 0 || rtotal == part.total {
        return Ok(None);
    }
    let mut lift = zeros(part.total, rtotal);
    let mut at = 0;
    for (i, b) in bases.iter().enumerate() {
        for c in 0..b.ncols() {
            for r in 0..part.sizes[i] {
                lift[(part.offsets[i] + r, at)] = b[(r, c)];
            }
            at += 1;
        }
    }
    Ok(Some((lift, Partition::new(rsizes))))
}

fn expect_optimal(sol: &SdpSolution, what: &str) -> Result<()> {
    if sol.status != SdpStatus::Optimal {
        return Err(Error::NotConverged(format!(
            "{} terminated with status {:?} (gap {:.3e})",
            what, sol.status, sol.gap
        )));
    }
    Ok(())
}

/// Shared robustness evaluation on a rebased (contiguous-block) state.
fn rob_report(
    m_tilde: &CMat,
    part: &Partition,
    form: RobForm,
    extension_used: Option<String>,
) -> Result<MeasureReport> {
    // Compress each block to the span of its pinned off-diagonal data
    // before solving: padded or rotated extensions carry rank-deficient
    // blocks on which the interior-point iteration loses strict
    // complementarity and stalls just above the feasibility tolerance.
    // Optimizers are lifted back so certificates live on the input space.
    let reduced = rob_support(m_tilde, part)?;
    let (work, wpart) = match &reduced {
        Some((u, rpart)) => (u.adjoint() * m_tilde * u, rpart.clone()),
        None => (m_tilde.clone(), part.clone()),
    };
    let primal = match form {
        RobForm::Primal | RobForm::Both => {
            let mut sol = rob_primal(&work, &wpart)?;
            expect_optimal(&sol, "robustness primal")?;
            if let Some((u, _)) = &reduced {
                sol.z[0] = u * &sol.z[0] * u.adjoint();
            }
            Some(sol)
        }
        RobForm::Dual => None,
    };
    let dual = match form {
        RobForm::Dual | RobForm::Both => {
            let mut sol = rob_dual(&work, &wpart)?;
            expect_optimal(&sol, "robustness dual")?;
            if let Some((u, _)) = &reduced {
                // identity on the discarded directions keeps the diagonal
                // blocks pinned and the witness positive semidefinite
                sol.z[0] = u * &sol.z[0] * u.adjoint() + (eye(part.total) - u * u.adjoint());
            }
            Some(sol)
        }
        RobForm::Primal => None,
    };
    // re-evaluate values from the (lifted) optimizer matrices so a stored
    // certificate always reproduces the reported value; the dual objective
    // Σ_{i≠j} <X_ij, M̃_ji> equals <X, M̃> − tr M̃ since X_ii = 1
    let primal_val = primal
        .as_ref()
        .map(|s| s.z.iter().map(trace_re).sum::<f64>());
    let dual_val = dual
        .as_ref()
        .map(|s| hdot(&s.z[0], m_tilde) - trace_re(m_tilde));
    let (value, cert_form, cert, gap) = match (primal_val, dual_val) {
        (Some(p), Some(d)) => {
            if (p - d).abs() > 1e-6 {
                return Err(Error::NotConverged(format!(
                    "robustness primal {:.9} and dual {:.9} disagree",
                    p, d
                )));
            }
            // retain the larger value with its certificate
            if p >= d {
                (p, "primal", primal, Some((p - d).abs()))
            } else {
                (d, "dual", dual, Some((p - d).abs()))
            }
        }
        (Some(p), None) => (p, "primal", primal, None),
        (None, Some(d)) => (d, "dual", dual, None),
        (None, None) => unreachable!("at least one form is always solved"),
    };
    Ok(MeasureReport {
        name: "c_rob".into(),
        value: value.max(0.0),
        extension_used,
        certificate: cert.map(|solution| Certificate {
            form: cert_form.into(),
            solution,
        }),
        certificate_gap: gap,
    })
}

/// Robustness of block coherence of a dilated-space state.
pub fn c_rob_block(m: &CMat, ext: &NaimarkExt, form: RobForm) -> Result<MeasureReport> {
    let (m_tilde, part) = rebase(m, ext)?;
    rob_report(&m_tilde, &part, form, Some("explicit".into()))
}

/// The outcome-major block matrix `[A_i ρ A_j†]_{ij}` of a state under a
/// measurement — the state of the canonical extension written with
/// contiguous blocks. It is positive semidefinite with unit trace.
pub fn povm_block_embedding(rho: &DensityMatrix, povm: &Povm) -> Result<CMat> {
    check_state_povm(rho, povm)?;
    let d = rho.dim();
    let n = povm.n_outcomes();
    let mut m_tilde = zeros(n * d, n * d);
    let ops = povm.meas_ops();
    for i in 0..n {
        for j in 0..n {
            let blk = &ops[i] * rho.mat() * ops[j].adjoint();
            for r in 0..d {
                for c in 0..d {
                    m_tilde[(i * d + r, j * d + c)] = blk[(r, c)];
                }
            }
        }
    }
    Ok(m_tilde)
}

/// Robustness of POVM-based coherence (primal, dual, or both with
/// cross-certification).
pub fn c_rob_povm(rho: &DensityMatrix, povm: &Povm, form: RobForm) -> Result<MeasureReport> {
    let m_tilde = povm_block_embedding(rho, povm)?;
    let part = Partition::new(vec![rho.dim(); povm.n_outcomes()]);
    rob_report(&m_tilde, &part, form, None)
}

/// Max-relative-entropy POVM coherence `log2(1 + C_rob)`, sharing the
/// robustness certificate.
pub fn c_max_povm(rho: &DensityMatrix, povm: &Povm, form: RobForm) -> Result<MeasureReport> {
    let rob = c_rob_povm(rho, povm, form)?;
    Ok(MeasureReport {
        name: "c_max".into(),
        value: (1.0 + rob.value).log2(),
        extension_used: rob.extension_used,
        certificate: rob.certificate,
        certificate_gap: rob.certificate_gap,
    })
}

/// Fidelity `F(M̃, σ)` maximized over block-diagonal states σ, via the
/// semidefinite characterization of fidelity reduced to the support of
/// the state: with `M̃ = R R†`, positive semidefiniteness of
/// `[[M̃, Λ], [Λ†, σ]]` forces `Λ = R K`, so the program pins the identity
/// on the support instead of a possibly rank-deficient quadrant and stays
/// strictly feasible even for embedded pure states.
fn geo_max_fidelity(m_tilde: &CMat, part: &Partition) -> Result<(f64, SdpSolution)> {
    let dp = part.total;
    let eig = herm_eig(m_tilde)?;
    let mut cols = Vec::new();
    for k in 0..eig.evals.len() {
        let lam = eig.evals[k];
        if lam > tol::EIG_CLIP {
            cols.push(eig.evecs.column(k).into_owned().scale(lam.sqrt()));
        }
    }
    if cols.is_empty() {
        return Err(Error::NotPsd(eig.evals[0]));
    }
    let r_fac = CMat::from_columns(&cols);
    let rk = r_fac.ncols();
    let dim = rk + dp;
    let mut constraints = Vec::new();
    // upper-left quadrant pinned to the identity on the support
    for a in 0..rk {
        for b in 0..=a {
            let v = if a == b { cr(1.0) } else { cr(0.0) };
            pin_entry(&mut constraints, dim, a, b, v);
        }
    }
    // lower-right quadrant block-diagonal: off-block entries vanish
    for i in 0..part.n() {
        for j in 0..i {
            for r in 0..part.sizes[i] {
                for c in 0..part.sizes[j] {
                    pin_entry(
                        &mut constraints,
                        dim,
                        rk + part.offsets[i] + r,
                        rk + part.offsets[j] + c,
                        cr(0.0),
                    );
                }
            }
        }
    }
    // unit trace of σ
    let mut tr_sigma = zeros(dim, dim);
    for a in rk..dim {
        tr_sigma[(a, a)] = cr(1.0);
    }
    constraints.push((vec![tr_sigma], 1.0));
    // maximize Re tr Λ = Re tr(R K) = <G, Z> with G = ½ [[0, R†], [R, 0]]
    let mut cost = zeros(dim, dim);
    for a in 0..rk {
        for al in 0..dp {
            cost[(a, rk + al)] = r_fac[(al, a)].conj().scale(-0.5);
            cost[(rk + al, a)] = r_fac[(al, a)].scale(-0.5);
        }
    }
    let p = SdpProblem::new(vec![dim], vec![cost], constraints)?;
    let sol = sdp::solve(&p)?;
    expect_optimal(&sol, "fidelity program")?;
    // re-evaluate from the optimizer: F = Re tr(R K)
    let mut f = 0.0;
    for a in 0..rk {
        for al in 0..dp {
            f += (r_fac[(al, a)] * sol.z[0][(a, rk + al)]).re;
        }
    }
    Ok((f.clamp(0.0, 1.0), sol))
}

/// Geometric block coherence `1 − max_σ F²(M, σ)` over block-diagonal
/// states σ of the extension.
pub fn c_geo_block(m: &CMat, ext: &NaimarkExt) -> Result<f64> {
    let (m_tilde, part) = rebase(m, ext)?;
    let (f, _) = geo_max_fidelity(&m_tilde, &part)?;
    Ok((1.0 - f * f).clamp(0.0, 1.0))
}

/// Geometric POVM-based coherence, evaluated on the canonical extension.
pub fn c_geo_povm(rho: &DensityMatrix, povm: &Povm) -> Result<f64> {
    check_state_povm(rho, povm)?;
    let ext = naimark::canonical_extension(povm);
    let emb = naimark::embed(rho, &ext)?;
    c_geo_block(&emb, &ext)
}

/// Evaluates a measure by name: `c_rel`, `c_l1`, `c_rob`, `c_max`, or
/// `c_geo`. SDP-backed measures are solved in both forms and
/// cross-certified.
pub fn eval_named(name: &str, rho: &DensityMatrix, povm: &Povm) -> Result<f64> {
    match name {
        "c_rel" => c_rel_povm(rho, povm),
        "c_l1" => c_l1_povm(rho, povm),
        "c_rob" => Ok(c_rob_povm(rho, povm, RobForm::Both)?.value),
        "c_max" => Ok(c_max_povm(rho, povm, RobForm::Both)?.value),
        "c_geo" => c_geo_povm(rho, povm),
        other => Err(Error::UnknownName(format!("measure '{}'", other))),
    }
}

/// The Hermitian dual witness of a pure state: identity diagonal blocks
/// and `|φ_i><φ_j|` off-diagonal blocks over outcomes with `p_i` above the
/// probability floor, together with its dual objective
/// `Σ_{i≠j} √(p_i p_j)`.
pub fn pure_dual_witness(psi: &DensityMatrix, povm: &Povm) -> Result<(CMat, f64)> {
    check_state_povm(psi, povm)?;
    let pur = psi.purity();
    if (pur - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure(pur));
    }
    let stats = measure_stats(psi, povm)?;
    let d = psi.dim();
    let kept: Vec<usize> = (0..povm.n_outcomes())
        .filter(|&i| stats.probs[i] >= tol::PROB_FLOOR)
        .collect();
    let nk = kept.len();
    let mut x = zeros(nk * d, nk * d);
    for (bi, &i) in kept.iter().enumerate() {
        for (bj, &j) in kept.iter().enumerate() {
            let blk = if bi == bj {
                eye(d)
            } else {
                // |φ_i><φ_j| with |φ_i> = A_i|ψ>/√p_i, assembled from
                // A_i ρ A_j† / √(p_i p_j)
                let raw = &povm.meas_ops()[i] * psi.mat() * povm.meas_ops()[j].adjoint();
                raw.unscale((stats.probs[i] * stats.probs[j]).sqrt())
            };
            for r in 0..d {
                for c in 0..d {
                    x[(bi * d + r, bj * d + c)] = blk[(r, c)];
                }
            }
        }
    }
    let mut value = 0.0;
    for (bi, &i) in kept.iter().enumerate() {
        for (bj, &j) in kept.iter().enumerate() {
            if bi != bj {
                value += (stats.probs[i] * stats.probs[j]).sqrt();
            }
        }
    }
    Ok((x, value))
}
