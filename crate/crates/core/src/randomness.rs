//! Private randomness of measurement outcomes against a purifying
//! eavesdropper, and its identity with the relative entropy of POVM-based
//! coherence.
//!
//! The state is purified minimally, the measurement acts on the system
//! factor, and the rate is the conditional entropy
//! `S(X|E) = H({p_i}) + Σ_i p_i S(ρ̃_{E|i}) − S(ρ_E)` evaluated via the
//! joint entropy theorem. All quantities are independent of the chosen
//! purification, which the purified variants expose for verification.

use crate::error::{Error, Result};
use crate::matops::{basis_vec, herm_eig, isometry_deviation, zeros, CMat, CVec};
use crate::quantum::{self, DensityMatrix, Povm};
use crate::tol;

/// Classical-quantum decomposition of the post-measurement joint state:
/// outcome probabilities with the conditional system and environment
/// states (`None` where the probability falls below the floor).
#[derive(Debug, Clone)]
pub struct CqState {
    pub probs: Vec<f64>,
    pub env_states: Vec<Option<DensityMatrix>>,
    pub sys_states: Vec<Option<DensityMatrix>>,
}

/// The minimal purification matrix `M` with `M M† = ρ`, whose columns span
/// an environment of dimension `rank(ρ)`.
pub fn purification_matrix(rho: &DensityMatrix) -> Result<CMat> {
    let eig = herm_eig(rho.mat())?;
    let d = rho.dim();
    let kept: Vec<usize> = (0..d).filter(|&k| eig.evals[k] > tol::PROB_FLOOR).collect();
    let r = kept.len().max(1);
    let mut m = zeros(d, r);
    for (e, &k) in kept.iter().enumerate() {
        let scale = eig.evals[k].sqrt();
        for a in 0..d {
            m[(a, e)] = eig.evecs[(a, k)] * scale;
        }
    }
    Ok(m)
}

/// Purifies a state minimally: returns the pure state vector on `A ⊗ E`
/// with `dim E = rank(ρ)`, flattened as `ψ[a·r + e]`.
pub fn purify(rho: &DensityMatrix) -> Result<CVec> {
    let m = purification_matrix(rho)?;
    let (d, r) = (m.nrows(), m.ncols());
    let mut psi = CVec::zeros(d * r);
    for a in 0..d {
        for e in 0..r {
            psi[a * r + e] = m[(a, e)];
        }
    }
    Ok(psi)
}

/// Measurement operators `A_i = U_i √F_i` for an optional extra gauge.
fn gauged_ops(povm: &Povm, gauge: Option<&[CMat]>) -> Result<Vec<CMat>> {
    match gauge {
        None => Ok(povm.meas_ops().to_vec()),
        Some(us) => {
            if us.len() != povm.n_outcomes() {
                return Err(Error::DimMismatch(format!(
                    "{} gauge unitaries for {} outcomes",
                    us.len(),
                    povm.n_outcomes()
                )));
            }
            let mut ops = Vec::with_capacity(us.len());
            for (u, a) in us.iter().zip(povm.meas_ops()) {
                let dev = isometry_deviation(u);
                if dev > tol::HERM_TOL {
                    return Err(Error::NotIsometry(dev));
                }
                ops.push(u * a);
            }
            Ok(ops)
        }
    }
}

fn cq_from_purification(m: &CMat, ops: &[CMat]) -> Result<CqState> {
    let mut probs = Vec::with_capacity(ops.len());
    let mut env_states = Vec::with_capacity(ops.len());
    let mut sys_states = Vec::with_capacity(ops.len());
    for a in ops {
        let am = a * m;
        let p = am.iter().map(|x| x.norm_sqr()).sum::<f64>();
        probs.push(p.max(0.0));
        if p < tol::PROB_FLOOR {
            env_states.push(None);
            sys_states.push(None);
            continue;
        }
        let sys = DensityMatrix::new((&am * am.adjoint()).unscale(p))?;
        let env = DensityMatrix::new((am.adjoint() * &am).unscale(p))?;
        // the joint conditional state is pure, so the two marginal
        // entropies coincide
        let sa = quantum::vn_entropy(sys.mat())?;
        let se = quantum::vn_entropy(env.mat())?;
        if (sa - se).abs() > tol::STRUCT_TOL {
            return Err(Error::NonFinite(format!(
                "conditional marginal entropies diverge: {} vs {}",
                sa, se
            )));
        }
        env_states.push(Some(env));
        sys_states.push(Some(sys));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol::TRACE_TOL {
        return Err(Error::InvalidDistribution(format!(
            "outcome probabilities sum to {}",
            total
        )));
    }
    Ok(CqState {
        probs,
        env_states,
        sys_states,
    })
}

/// The classical-quantum post-measurement state on the minimal
/// purification, with measurement operators `A_i = U_i √F_i` for an
/// optional gauge.
pub fn cq_post_state(rho: &DensityMatrix, povm: &Povm, gauge: Option<&[CMat]>) -> Result<CqState> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let m = purification_matrix(rho)?;
    cq_from_purification(&m, &gauged_ops(povm, gauge)?)
}

fn rate_from_purification(m: &CMat, ops: &[CMat]) -> Result<f64> {
    let cq = cq_from_purification(m, ops)?;
    let mut rate = quantum::shannon(&cq.probs)?;
    for (p, env) in cq.probs.iter().zip(&cq.env_states) {
        if let Some(e) = env {
            rate += p * quantum::vn_entropy(e.mat())?;
        }
    }
    rate -= quantum::vn_entropy(&(m.adjoint() * m))?;
    Ok(rate)
}

/// Private randomness rate `S(X|E)` of the POVM outcomes against an
/// eavesdropper holding a purification of the state. Equals the relative
/// entropy of POVM-based coherence.
pub fn randomness_rate(rho: &DensityMatrix, povm: &Povm) -> Result<f64> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let m = purification_matrix(rho)?;
    rate_from_purification(&m, povm.meas_ops())
}

/// The rate evaluated on a non-minimal purification obtained by enlarging
/// the environment with an isometry `V: C^r → C^k` (`V†V = 1`). The value
/// is purification-independent; this entry point exists to verify that.
pub fn randomness_rate_purified(
    rho: &DensityMatrix,
    povm: &Povm,
    env_isometry: &CMat,
) -> Result<f64> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let m = purification_matrix(rho)?;
    if env_isometry.nrows() < env_isometry.ncols() || env_isometry.ncols() != m.ncols() {
        return Err(Error::DimMismatch(format!(
            "environment isometry is {}x{}, minimal environment has dim {}",
            env_isometry.nrows(),
            env_isometry.ncols(),
            m.ncols()
        )));
    }
    let dev = isometry_deviation(env_isometry);
    if dev > tol::HERM_TOL {
        return Err(Error::NotIsometry(dev));
    }
    let enlarged = &m * env_isometry.transpose();
    rate_from_purification(&enlarged, povm.meas_ops())
}

/// The isometry embedding the minimal environment into a larger one along
/// the standard basis.
pub fn trivial_env_isometry(r: usize, k: usize) -> Result<CMat> {
    if k < r {
        return Err(Error::DimMismatch(format!(
            "target environment {} smaller than source {}",
            k, r
        )));
    }
    let mut v = zeros(k, r);
    for j in 0..r {
        v.set_column(j, &basis_vec(k, j));
    }
    Ok(v)
}
