//! Validated quantum objects: density matrices, POVMs, the `E(δ)` family,
//! entropies, measurement statistics and random sampling.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matops::{
    self, basis_vec, cr, eye, frob_dist, herm_deviation, herm_eig, herm_vec, psd_sqrt, trace_re,
    zeros, CMat, CVec,
};
use crate::tol;

/// A validated density matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if !matops::all_finite(&mat) {
            return Err(Error::NonFinite("density matrix".into()));
        }
        let dev = herm_deviation(&mat);
        if dev > tol::HERM_TOL {
            return Err(Error::NonHermitian(dev));
        }
        let tr = trace_re(&mat);
        if (tr - 1.0).abs() > tol::TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = herm_eig(&mat)?.evals.min();
        if min < -tol::PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self {
            dim: mat.nrows(),
            mat,
        })
    }

    /// Pure state `|ψ><ψ|` from a (not necessarily normalized) vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n < 1e-12 {
            return Err(Error::OutOfRange("zero vector cannot be normalized".into()));
        }
        let v = psi.unscale(n);
        Self::new(&v * v.adjoint())
    }

    /// Maximally mixed state `1/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            dim: d,
            mat: eye(d).unscale(d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    /// Purity `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// `+1` eigenstate of σ_x.
    pub fn psi_x() -> Self {
        let v = CVec::from_vec(vec![cr(1.0), cr(1.0)]);
        Self::pure(&v).expect("valid construction")
    }

    /// `+1` eigenstate of σ_y.
    pub fn psi_y() -> Self {
        let v = CVec::from_vec(vec![cr(1.0), Complex64::new(0.0, 1.0)]);
        Self::pure(&v).expect("valid construction")
    }

    /// `+1` eigenstate of σ_z.
    pub fn psi_z() -> Self {
        Self::pure(&basis_vec(2, 0)).expect("valid construction")
    }

    /// Resolves a named built-in state: `psi_x`, `psi_y`, `psi_z`, `mixed`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "psi_x" => Ok(Self::psi_x()),
            "psi_y" => Ok(Self::psi_y()),
            "psi_z" => Ok(Self::psi_z()),
            "mixed" => Ok(Self::maximally_mixed(2)),
            other => Err(Error::UnknownName(format!("state '{}'", other))),
        }
    }
}

/// A validated POVM together with its measurement operators `A_i = √E_i`.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    effects: Vec<CMat>,
    meas_ops: Vec<CMat>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn meas_ops(&self) -> &[CMat] {
        &self.meas_ops
    }

    /// True when effect `i` vanishes (trace below 1e-10). Zero effects are
    /// retained so outcome indices stay aligned with the defining family.
    pub fn zero_effect(&self, i: usize) -> bool {
        trace_re(&self.effects[i]) < 1e-10
    }

    /// Replaces the measurement operators by `U_i A_i` for unitaries `U_i`
    /// (a gauge change; the effects `A_i†A_i` are unchanged).
    pub fn with_gauge(&self, unitaries: &[CMat]) -> Result<Self> {
        if unitaries.len() != self.n_outcomes() {
            return Err(Error::DimMismatch(format!(
                "{} gauge unitaries for {} outcomes",
                unitaries.len(),
                self.n_outcomes()
            )));
        }
        let mut meas_ops = Vec::with_capacity(unitaries.len());
        for (u, a) in unitaries.iter().zip(&self.meas_ops) {
            let dev = matops::isometry_deviation(u);
            if dev > tol::HERM_TOL {
                return Err(Error::NotIsometry(dev));
            }
            meas_ops.push(u * a);
        }
        Ok(Self {
            dim: self.dim,
            effects: self.effects.clone(),
            meas_ops,
        })
    }

    /// Resolves a named built-in POVM: `z-basis`, `trine`, `edelta:<float>`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "z-basis" => {
                let p0 = &basis_vec(2, 0) * basis_vec(2, 0).adjoint();
                let p1 = &basis_vec(2, 1) * basis_vec(2, 1).adjoint();
                validate_povm(vec![p0, p1])
            }
            "trine" => edelta(1.0),
            other => {
                if let Some(arg) = other.strip_prefix("edelta:") {
                    let delta: f64 = arg
                        .parse()
                        .map_err(|_| Error::Parse(format!("invalid edelta parameter '{}'", arg)))?;
                    edelta(delta)
                } else {
                    Err(Error::UnknownName(format!("POVM '{}'", other)))
                }
            }
        }
    }
}

/// Validates a list of effects and computes the measurement operators.
pub fn validate_povm(effects: Vec<CMat>) -> Result<Povm> {
    if effects.is_empty() {
        return Err(Error::DimMismatch("empty effect list".into()));
    }
    let dim = effects[0].nrows();
    let mut sum = zeros(dim, dim);
    for (i, e) in effects.iter().enumerate() {
        if e.nrows() != dim || e.ncols() != dim {
            return Err(Error::DimMismatch(format!(
                "effect {} is {}x{}, expected {}x{}",
                i,
                e.nrows(),
                e.ncols(),
                dim,
                dim
            )));
        }
        let dev = herm_deviation(e);
        if dev > tol::HERM_TOL {
            return Err(Error::NonHermitian(dev));
        }
        let min = herm_eig(e)?.evals.min();
        if min < -tol::PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        sum += e;
    }
    let completeness = frob_dist(&sum, &eye(dim));
    if completeness > tol::COMPLETENESS_TOL {
        return Err(Error::CompletenessViolation(completeness));
    }
    let meas_ops = effects
        .iter()
        .map(psd_sqrt)
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm {
        dim,
        effects,
        meas_ops,
    })
}

/// The Pauli matrices `(σ_x, σ_y, σ_z)`.
pub fn paulis() -> [CMat; 3] {
    let mut sx = zeros(2, 2);
    sx[(0, 1)] = cr(1.0);
    sx[(1, 0)] = cr(1.0);
    let mut sy = zeros(2, 2);
    sy[(0, 1)] = Complex64::new(0.0, -1.0);
    sy[(1, 0)] = Complex64::new(0.0, 1.0);
    let mut sz = zeros(2, 2);
    sz[(0, 0)] = cr(1.0);
    sz[(1, 1)] = cr(-1.0);
    [sx, sy, sz]
}

/// Qubit POVM from Bloch data: effects `E_i = α_i (1 + m_i · σ)`.
///
/// Requires `α_i ≥ 0`, `Σ α_i = 1`, `Σ α_i m_i = 0` and `‖m_i‖ ≤ 1`.
pub fn bloch_qubit_povm(alphas: &[f64], m_vecs: &[[f64; 3]]) -> Result<Povm> {
    if alphas.len() != m_vecs.len() {
        return Err(Error::BlochConstraintViolation(format!(
            "{} weights vs {} directions",
            alphas.len(),
            m_vecs.len()
        )));
    }
    if let Some(a) = alphas.iter().find(|&&a| a < 0.0) {
        return Err(Error::BlochConstraintViolation(format!(
            "negative weight {}",
            a
        )));
    }
    let asum: f64 = alphas.iter().sum();
    if (asum - 1.0).abs() > 1e-10 {
        return Err(Error::BlochConstraintViolation(format!(
            "weights sum to {} instead of 1",
            asum
        )));
    }
    for (i, m) in m_vecs.iter().enumerate() {
        let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        if norm > 1.0 + 1e-10 {
            return Err(Error::BlochConstraintViolation(format!(
                "direction {} has norm {} > 1",
                i, norm
            )));
        }
    }
    for k in 0..3 {
        let s: f64 = alphas.iter().zip(m_vecs).map(|(a, m)| a * m[k]).sum();
        if s.abs() > 1e-10 {
            return Err(Error::BlochConstraintViolation(format!(
                "Σ α_i m_i has component {} = {}",
                ["x", "y", "z"][k],
                s
            )));
        }
    }
    let [sx, sy, sz] = paulis();
    let effects = alphas
        .iter()
        .zip(m_vecs)
        .map(|(&a, m)| (eye(2) + sx.scale(m[0]) + sy.scale(m[1]) + sz.scale(m[2])).scale(a))
        .collect();
    validate_povm(effects)
}

/// The one-parameter qubit POVM family `E(δ)`, interpolating from the Y
/// measurement (δ=0, with a retained zero first effect) to the trine POVM
/// (δ=1):
/// `α_1 = δ/3`, `α_2 = α_3 = (1 − δ/3)/2`, `m_1 = (1,0,0)`,
/// `t = δ/(3−δ)`, `m_{2,3} = (−t, ±√(1−t²), 0)`.
pub fn edelta(delta: f64) -> Result<Povm> {
    if !(0.0..=1.0).contains(&delta) || !delta.is_finite() {
        return Err(Error::OutOfRange(format!(
            "edelta parameter {} outside [0, 1]",
            delta
        )));
    }
    let a1 = delta / 3.0;
    let a23 = (1.0 - delta / 3.0) / 2.0;
    let t = delta / (3.0 - delta);
    let s = (1.0 - t * t).max(0.0).sqrt();
    bloch_qubit_povm(
        &[a1, a23, a23],
        &[[1.0, 0.0, 0.0], [-t, s, 0.0], [-t, -s, 0.0]],
    )
}

/// Von Neumann entropy `S(ρ) = −tr(ρ log2 ρ)` in bits.
pub fn vn_entropy(rho: &CMat) -> Result<f64> {
    let eig = herm_eig(rho)?;
    let min = eig.evals.min();
    if min < -tol::PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(eig
        .evals
        .iter()
        .filter(|&&l| l >= tol::EIG_CLIP)
        .map(|&l| -l * l.log2())
        .sum())
}

/// Shannon entropy of a probability vector, in bits.
pub fn shannon(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|&&x| x < -1e-12 || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "entry {} is not a probability",
            bad
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol::TRACE_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {}",
            sum
        )));
    }
    Ok(p.iter()
        .filter(|&&x| x >= tol::EIG_CLIP)
        .map(|&x| -x * x.log2())
        .sum())
}

/// Outcome probabilities and post-measurement states of a measurement.
#[derive(Debug, Clone)]
pub struct OutcomeStats {
    /// `p_i = tr(E_i ρ)`.
    pub probs: Vec<f64>,
    /// `ρ_i = A_i ρ A_i† / p_i`; `None` where `p_i` falls below the floor.
    pub post_states: Vec<Option<DensityMatrix>>,
}

/// Probabilities `p_i = tr(E_i ρ)` and post-states `ρ_i = A_i ρ A_i† / p_i`.
/// Outcomes with `p_i < 1e-12` carry no post-state.
pub fn measure_stats(rho: &DensityMatrix, povm: &Povm) -> Result<OutcomeStats> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let mut probs = Vec::with_capacity(povm.n_outcomes());
    let mut post_states = Vec::with_capacity(povm.n_outcomes());
    for a in povm.meas_ops() {
        let unnorm = a * rho.mat() * a.adjoint();
        let p = trace_re(&unnorm);
        probs.push(p.max(0.0));
        if p >= tol::PROB_FLOOR {
            post_states.push(Some(DensityMatrix::new(unnorm.unscale(p))?));
        } else {
            post_states.push(None);
        }
    }
    Ok(OutcomeStats { probs, post_states })
}

/// Complex standard-Gaussian (Ginibre) matrix.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random state vector: normalized complex Gaussian.
pub fn haar_vec(rng: &mut impl Rng, d: usize) -> CVec {
    loop {
        let v = CVec::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let n = v.norm();
        if n > 1e-6 {
            return v.unscale(n);
        }
    }
}

/// Haar-random pure state.
pub fn haar_pure(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let v = haar_vec(rng, d);
    DensityMatrix::pure(&v).expect("normalized vector")
}

/// Hilbert–Schmidt-random mixed state: partial trace of a Haar pure state
/// on a `d × d` bipartite space.
pub fn hs_mixed(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let v = haar_vec(rng, d * d);
    let rho = &v * v.adjoint();
    let red = crate::matops::partial_trace(&rho, (d, d), 0).expect("dims match");
    // re-symmetrize to suppress accumulation noise before validation
    DensityMatrix::new(matops::symmetrize(&red)).expect("valid reduction")
}

/// Haar-random unitary via QR of a Ginibre matrix with phase fixing.
pub fn haar_unitary(rng: &mut impl Rng, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix column phases so the distribution is Haar
    for j in 0..d {
        let rjj = r[(j, j)];
        if rjj.norm() > 0.0 {
            let phase = rjj / cr(rjj.norm());
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random `n`-outcome POVM on dimension `d`: `E_i = S^{-1/2} G_i S^{-1/2}`
/// with `G_i` Ginibre-PSD and `S = Σ G_j`.
pub fn random_povm(rng: &mut impl Rng, d: usize, n: usize) -> Result<Povm> {
    if d < 2 || n < 2 {
        return Err(Error::OutOfRange(format!(
            "random_povm needs d ≥ 2 and n ≥ 2, got d={}, n={}",
            d, n
        )));
    }
    let gs: Vec<CMat> = (0..n)
        .map(|_| {
            let g = ginibre(rng, d, d);
            &g * g.adjoint()
        })
        .collect();
    let mut s = zeros(d, d);
    for g in &gs {
        s += g;
    }
    let si = matops::psd_func(&s, matops::SpectralFn::Power(-0.5))?;
    let effects: Vec<CMat> = gs
        .iter()
        .map(|g| matops::symmetrize(&(&si * g * &si)))
        .collect();
    validate_povm(effects)
}

/// True iff, after dropping zero effects, every remaining effect is rank one
/// and the remaining effects are linearly independent (the extremality
/// criterion for rank-one POVMs).
pub fn is_extremal_rank_one(povm: &Povm) -> bool {
    let kept: Vec<&CMat> = povm
        .effects()
        .iter()
        .filter(|e| trace_re(e) >= 1e-10)
        .collect();
    if kept.is_empty() {
        return false;
    }
    for e in &kept {
        let evals = match herm_eig(e) {
            Ok(eig) => eig.evals,
            Err(_) => return false,
        };
        let d = evals.len();
        if d >= 2 && evals[d - 2] >= 1e-9 {
            return false;
        }
    }
    // linear independence of the stacked effect vectors
    let d2 = povm.dim() * povm.dim();
    let rows = kept.len();
    if rows > d2 {
        return false;
    }
    let mut stacked = nalgebra::DMatrix::<f64>::zeros(rows, d2);
    for (r, e) in kept.iter().enumerate() {
        stacked.set_row(r, &herm_vec(e).transpose());
    }
    let svals = stacked.singular_values();
    svals.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-8
}

/// Frobenius norm of `Σ α_i m_i` for diagnostics of near-boundary inputs.
pub fn outcome_distribution(stats: &OutcomeStats) -> DVector<f64> {
    DVector::from_vec(stats.probs.clone())
}
