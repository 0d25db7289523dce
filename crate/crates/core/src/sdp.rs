//! A small dense semidefinite-program solver in standard form,
//!
//! ```text
//!   minimize    Σ_b <C_b, Z_b>
//!   subject to  Σ_b <A_{k,b}, Z_b> = b_k,   Z_b ⪰ 0,
//! ```
//!
//! over block-diagonal complex Hermitian variables, with primal/dual
//! certificates. The algorithm is a primal-dual interior-point method on the
//! simplified homogeneous self-dual embedding with HKM scaling and a
//! Mehrotra predictor-corrector step, which detects infeasibility and
//! unboundedness through the (τ, κ) ray. Complex Hermitian blocks are
//! handled natively through the Hermitian inner product `<A,B> = Re tr(A†B)`;
//! problems stay small and dense (block sizes ≤ 64, constraints ≤ 2000).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::matops::{self, all_finite, eye, frob, hdot, herm_deviation, herm_vec, zeros, CMat};
use crate::tol;

/// Block-diagonal Hermitian matrix stored as its dense diagonal blocks.
#[derive(Debug, Clone)]
struct Blocks(Vec<CMat>);

impl Blocks {
    fn zeros(dims: &[usize]) -> Self {
        Blocks(dims.iter().map(|&d| zeros(d, d)).collect())
    }

    fn identity(dims: &[usize]) -> Self {
        Blocks(dims.iter().map(|&d| eye(d)).collect())
    }

    fn inner(&self, other: &Blocks) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| hdot(a, b)).sum()
    }

    fn axpy(&mut self, alpha: f64, other: &Blocks) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b.scale(alpha);
        }
    }

    fn scale(&self, alpha: f64) -> Blocks {
        Blocks(self.0.iter().map(|b| b.scale(alpha)).collect())
    }

    fn sub(&self, other: &Blocks) -> Blocks {
        Blocks(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    fn symmetrize(&mut self) {
        for b in self.0.iter_mut() {
            *b = matops::symmetrize(b);
        }
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|b| frob(b).powi(2)).sum::<f64>().sqrt()
    }

    fn finite(&self) -> bool {
        self.0.iter().all(all_finite)
    }
}

/// A standard-form SDP over block-diagonal Hermitian PSD variables.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    cost: Vec<CMat>,
    constraints: Vec<(Vec<CMat>, f64)>,
    /// Farkas-type certificate found during row pruning when a dependent
    /// row contradicts the kept rows: y with A*(y) ≈ 0 and b·y = 1.
    pregame_infeasibility: Option<Vec<f64>>,
}

fn check_block_family(dims: &[usize], mats: &[CMat], what: &str) -> Result<()> {
    if mats.len() != dims.len() {
        return Err(Error::DimMismatch(format!(
            "{} has {} blocks, expected {}",
            what,
            mats.len(),
            dims.len()
        )));
    }
    for (b, (m, &d)) in mats.iter().zip(dims).enumerate() {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "{} block {} is {}x{}, expected {}x{}",
                what,
                b,
                m.nrows(),
                m.ncols(),
                d,
                d
            )));
        }
        if !all_finite(m) {
            return Err(Error::NonFinite(format!("{} block {}", what, b)));
        }
        let dev = herm_deviation(m);
        if dev > 1e-10 {
            return Err(Error::NonHermitian(dev));
        }
    }
    Ok(())
}

fn stack_herm_vec(mats: &[CMat]) -> DVector<f64> {
    let parts: Vec<DVector<f64>> = mats.iter().map(herm_vec).collect();
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(total);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(&p);
        at += p.len();
    }
    out
}

impl SdpProblem {
    /// Builds a problem, validating Hermiticity (within `1e-10`) and
    /// dimensions, and pruning linearly dependent constraint rows. A
    /// dependent row whose right-hand side contradicts the rows it depends
    /// on is recorded as an immediate infeasibility certificate.
    pub fn new(
        block_dims: Vec<usize>,
        cost: Vec<CMat>,
        constraints: Vec<(Vec<CMat>, f64)>,
    ) -> Result<Self> {
        if block_dims.iter().any(|&d| d == 0) {
            return Err(Error::DimMismatch("zero-dimensional block".into()));
        }
        check_block_family(&block_dims, &cost, "cost")?;
        for (k, (a, bk)) in constraints.iter().enumerate() {
            check_block_family(&block_dims, a, &format!("constraint {}", k))?;
            if !bk.is_finite() {
                return Err(Error::NonFinite(format!("rhs of constraint {}", k)));
            }
        }
        let cost: Vec<CMat> = cost.iter().map(matops::symmetrize).collect();
        let constraints: Vec<(Vec<CMat>, f64)> = constraints
            .into_iter()
            .map(|(a, bk)| (a.iter().map(matops::symmetrize).collect(), bk))
            .collect();

        // prune dependent rows (two-pass Gram-Schmidt with coefficient
        // tracking so dependent-but-inconsistent rows are detected)
        let m = constraints.len();
        let b_full = DVector::from_iterator(m, constraints.iter().map(|(_, bk)| *bk));
        let mut kept: Vec<usize> = Vec::new();
        let mut orth: Vec<DVector<f64>> = Vec::new();
        let mut coeffs: Vec<DVector<f64>> = Vec::new();
        let mut pregame = None;
        for k in 0..m {
            let row = stack_herm_vec(&constraints[k].0);
            let scale = row.norm().max(1.0);
            let mut r = row.clone();
            let mut coef = DVector::zeros(m);
            coef[k] = 1.0;
            for _ in 0..2 {
                for (o, c) in orth.iter().zip(&coeffs) {
                    let t = o.dot(&r);
                    r -= o * t;
                    coef -= c * t;
                }
            }
            let nrm = r.norm();
            if nrm > tol::ROW_PRUNE_TOL * scale {
                orth.push(r.unscale(nrm));
                coeffs.push(coef.unscale(nrm));
                kept.push(k);
            } else if pregame.is_none() {
                let resb = coef.dot(&b_full);
                if resb.abs() > 1e-8 * (1.0 + b_full.norm()) {
                    // Σ_j coef_j A_j ≈ 0 but Σ_j coef_j b_j ≠ 0
                    let cert = (coef / resb).iter().cloned().collect::<Vec<f64>>();
                    pregame = Some(cert);
                }
            }
        }
        let constraints: Vec<(Vec<CMat>, f64)> = kept
            .into_iter()
            .map(|k| constraints[k].clone())
            .collect();
        Ok(Self {
            block_dims,
            cost,
            constraints,
            pregame_infeasibility: pregame,
        })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn cost(&self) -> &[CMat] {
        &self.cost
    }

    pub fn constraints(&self) -> &[(Vec<CMat>, f64)] {
        &self.constraints
    }

    fn apply_a(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|(a, _)| a.iter().zip(&x.0).map(|(ab, xb)| hdot(ab, xb)).sum::<f64>()),
        )
    }

    fn apply_a_adjoint(&self, y: &DVector<f64>) -> Blocks {
        let mut out = Blocks::zeros(&self.block_dims);
        for (k, (a, _)) in self.constraints.iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for (o, ab) in out.0.iter_mut().zip(a) {
                *o += ab.scale(yk);
            }
        }
        out
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// Primal/dual optimal within tolerances.
    Optimal,
    /// Primal infeasible; `y` scales a dual improving ray.
    Infeasible,
    /// Primal unbounded below; `z` scales a primal improving ray.
    Unbounded,
    /// The iteration stalled before reaching tolerance; the returned
    /// iterate is the best available.
    SlowProgress,
}

/// Solution (or certificate) returned by [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Primal optimizer blocks (or improving ray for `Unbounded`).
    pub z: Vec<CMat>,
    /// Dual vector (or improving ray for `Infeasible`).
    pub y: DVector<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|primal_value − dual_value|` at termination.
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// HKM scaling operator `Φ(U) = (X U S^{-1} + S^{-1} U X)/2`,
/// with `S^{-1}` passed explicitly.
fn phi(x: &Blocks, s_inv: &Blocks, u: &Blocks) -> Blocks {
    Blocks(
        x.0.iter()
            .zip(&s_inv.0)
            .zip(&u.0)
            .map(|((xb, sib), ub)| {
                let t = xb * ub * sib;
                (&t + t.adjoint()).scale(0.5)
            })
            .collect(),
    )
}

fn blocks_inverse(s: &Blocks) -> Result<Blocks> {
    let mut out = Vec::with_capacity(s.0.len());
    for b in &s.0 {
        let inv = match Cholesky::new(b.clone()) {
            Some(ch) => ch.inverse(),
            None => {
                // regularized eigen fallback for a numerically singular block
                let eig = matops::herm_eig(b)?;
                let floor = eig.evals.iter().cloned().fold(0.0_f64, f64::max).max(1e-300) * 1e-14;
                eig.reassemble(|l| 1.0 / l.max(floor))
            }
        };
        out.push(matops::symmetrize(&inv));
    }
    Ok(Blocks(out))
}

/// Largest step `α` with `X + α dX ⪰ 0` (∞ if unconstrained), computed
/// through `λ_min(L^{-1} dX L^{-†})` with `X = L L†`.
fn max_psd_step(x: &Blocks, dx: &Blocks) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, dxb) in x.0.iter().zip(&dx.0) {
        let ch = match Cholesky::new(xb.clone()) {
            Some(c) => c,
            None => {
                let reg = xb + eye(xb.nrows()).scale(1e-12 * frob(xb).max(1e-12));
                Cholesky::new(reg).ok_or(Error::NumericalFailure {
                    iterations: 0,
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                })?
            }
        };
        let l = ch.l();
        let t = l
            .solve_lower_triangular(dxb)
            .ok_or(Error::NoConvergence)?;
        let t2 = l
            .solve_lower_triangular(&t.adjoint())
            .ok_or(Error::NoConvergence)?
            .adjoint();
        let eig = matops::herm_eig(&matops::symmetrize(&t2))?;
        let lmin = eig.evals[0];
        if lmin < -1e-13 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Ok(alpha)
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    ds: Blocks,
    dtau: f64,
    dkappa: f64,
}

/// Solves the problem. Deterministic given identical inputs; the iteration
/// limit is [`tol::SDP_MAX_ITER`], beyond which `NumericalFailure` reports
/// the last residuals.
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    if let Some(cert) = &p.pregame_infeasibility {
        return Ok(SdpSolution {
            z: Blocks::zeros(&p.block_dims).0,
            y: DVector::from_vec(cert.clone()),
            primal_value: f64::INFINITY,
            dual_value: f64::INFINITY,
            gap: 0.0,
            status: SdpStatus::Infeasible,
            iterations: 0,
        });
    }
    let m = p.constraints.len();
    let cost = Blocks(p.cost.clone());
    if m == 0 {
        // min <C,X> over X ⪰ 0: value 0 at X = 0 iff C ⪰ 0, else unbounded
        let mut ray = Blocks::zeros(&p.block_dims);
        let mut unbounded = false;
        for (rb, cb) in ray.0.iter_mut().zip(&cost.0) {
            let eig = matops::herm_eig(cb)?;
            if eig.evals[0] < -tol::PSD_TOL {
                unbounded = true;
                let v = eig.evecs.column(0);
                *rb = &v * v.adjoint();
            }
        }
        return Ok(if unbounded {
            SdpSolution {
                z: ray.0,
                y: DVector::zeros(0),
                primal_value: f64::NEG_INFINITY,
                dual_value: f64::NEG_INFINITY,
                gap: 0.0,
                status: SdpStatus::Unbounded,
                iterations: 0,
            }
        } else {
            SdpSolution {
                z: Blocks::zeros(&p.block_dims).0,
                y: DVector::zeros(0),
                primal_value: 0.0,
                dual_value: 0.0,
                gap: 0.0,
                status: SdpStatus::Optimal,
                iterations: 0,
            }
        });
    }

    let b = DVector::from_iterator(m, p.constraints.iter().map(|(_, bk)| *bk));
    let nu: usize = p.block_dims.iter().sum();
    let b_norm = b.norm();
    let c_norm = cost.norm();

    let mut x = Blocks::identity(&p.block_dims);
    let mut s = Blocks::identity(&p.block_dims);
    let mut y = DVector::<f64>::zeros(m);
    let mut tau = 1.0_f64;
    let mut kappa = 1.0_f64;

    let mu0 = (x.inner(&s) + tau * kappa) / (nu as f64 + 1.0);
    let mut mu_prev = mu0;
    let mut stall = 0usize;
    let mut last = (f64::NAN, f64::NAN, f64::NAN);
    // best scaled iterate seen so far: (score, accepted, solution)
    let mut best: Option<(f64, bool, SdpSolution)> = None;

    for iter in 0..tol::SDP_MAX_ITER {
        // scaled iterate and convergence diagnostics
        let xs = x.scale(1.0 / tau);
        let ys = y.unscale(tau);
        let ss = s.scale(1.0 / tau);
        let pobj = cost.inner(&xs);
        let dobj = b.dot(&ys);
        let pinf = (p.apply_a(&xs) - &b).norm() / (1.0 + b_norm);
        let dinf = {
            let mut r = cost.sub(&ss);
            let aty = p.apply_a_adjoint(&ys);
            r.axpy(-1.0, &aty);
            r.norm() / (1.0 + c_norm)
        };
        let gap_abs = (pobj - dobj).abs();
        let relgap = gap_abs / pobj.abs().max(1.0);
        last = (pinf, dinf, relgap);

        if std::env::var_os("POVMCOH_SDP_TRACE").is_some() {
            eprintln!(
                "sdp iter {:3}  pinf {:9.2e}  dinf {:9.2e}  relgap {:9.2e}  tau {:9.2e}  kappa {:9.2e}  stall {}",
                iter, pinf, dinf, relgap, tau, kappa, stall
            );
        }

        // keep polishing past the acceptance thresholds while progress is
        // cheap: the extra accuracy (typically ~1e-11) makes independent
        // solves of related problems agree far inside their tolerances
        const TIGHT: f64 = 3e-11;
        let accepted =
            pinf <= tol::SDP_FEAS_TOL && dinf <= tol::SDP_FEAS_TOL && relgap <= tol::SDP_GAP_TOL;
        let score = pinf.max(dinf).max(relgap);
        if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
            let mut z = xs.clone();
            z.symmetrize();
            best = Some((
                score,
                accepted,
                SdpSolution {
                    z: z.0,
                    y: ys.clone(),
                    primal_value: pobj,
                    dual_value: dobj,
                    gap: gap_abs,
                    status: SdpStatus::Optimal,
                    iterations: iter,
                },
            ));
        }
        let return_best = |mut sol: SdpSolution, accepted: bool, iter: usize| -> SdpSolution {
            sol.status = if accepted {
                SdpStatus::Optimal
            } else {
                SdpStatus::SlowProgress
            };
            sol.iterations = iter;
            sol
        };
        if pinf <= TIGHT && dinf <= TIGHT && relgap <= TIGHT {
            let (_, acc, sol) = best.unwrap();
            return Ok(return_best(sol, acc, iter));
        }

        let mu = (x.inner(&s) + tau * kappa) / (nu as f64 + 1.0);

        // exits through the best iterate: iteration stall, a numerical
        // blow-up after convergence, or μ at the machine floor
        let best_score = best.as_ref().map(|(s, _, _)| *s).unwrap_or(f64::INFINITY);
        let best_accepted = best.as_ref().map(|(_, a, _)| *a).unwrap_or(false);
        let blown_up = best_accepted && score > 1e3 * best_score;
        let mu_floor = best_accepted && mu < 1e-13 * mu0.max(1.0);
        if stall >= 8 || blown_up || mu_floor {
            let (_, acc, sol) = best.unwrap();
            return Ok(return_best(sol, acc, iter));
        }

        // infeasibility / unboundedness rays: τ → 0 relative to κ
        if mu < 1e-10 * mu0 && tau < 1e-6 * kappa {
            let by = b.dot(&y);
            let cx = cost.inner(&x);
            if by > 1e-12 {
                return Ok(SdpSolution {
                    z: Blocks::zeros(&p.block_dims).0,
                    y: y.unscale(by),
                    primal_value: f64::INFINITY,
                    dual_value: f64::INFINITY,
                    gap: 0.0,
                    status: SdpStatus::Infeasible,
                    iterations: iter,
                });
            }
            if cx < -1e-12 {
                let mut ray = x.scale(-1.0 / cx);
                ray.symmetrize();
                return Ok(SdpSolution {
                    z: ray.0,
                    y: DVector::zeros(m),
                    primal_value: f64::NEG_INFINITY,
                    dual_value: f64::NEG_INFINITY,
                    gap: 0.0,
                    status: SdpStatus::Unbounded,
                    iterations: iter,
                });
            }
            let (_, acc, sol) = best.expect("at least one iterate recorded");
            return Ok(return_best(sol, acc, iter));
        }

        // residuals of the self-dual system
        let r1 = b.scale(tau) - p.apply_a(&x);
        let r2 = {
            let mut r = cost.scale(tau).sub(&s);
            let aty = p.apply_a_adjoint(&y);
            r.axpy(-1.0, &aty);
            r
        };
        let r3 = kappa + cost.inner(&x) - b.dot(&y);

        let s_inv = blocks_inverse(&s)?;
        // Schur complement M_{jk} = <A_j, Φ(A_k)> and shared vectors
        let phi_a: Vec<Blocks> = p
            .constraints
            .iter()
            .map(|(a, _)| phi(&x, &s_inv, &Blocks(a.clone())))
            .collect();
        let mut mmat = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            for j in 0..=k {
                let val: f64 = p.constraints[j]
                    .0
                    .iter()
                    .zip(&phi_a[k].0)
                    .map(|(ab, pb)| hdot(ab, pb))
                    .sum();
                mmat[(j, k)] = val;
                mmat[(k, j)] = val;
            }
        }
        let phi_c = phi(&x, &s_inv, &cost);
        let w = p.apply_a(&phi_c);
        let pcc = cost.inner(&phi_c);
        let phi_r2 = phi(&x, &s_inv, &r2);
        let v = p.apply_a(&phi_r2);
        let c_phi_r2 = cost.inner(&phi_r2);

        enum Factor {
            Chol(Cholesky<f64, Dyn>),
            Lu(nalgebra::LU<f64, Dyn, Dyn>),
        }
        let factor = match Cholesky::new(mmat.clone()) {
            Some(c) => Factor::Chol(c),
            None => Factor::Lu(mmat.clone().lu()),
        };
        let fsolve = |rhs: &DVector<f64>| -> Result<DVector<f64>> {
            match &factor {
                Factor::Chol(c) => Ok(c.solve(rhs)),
                Factor::Lu(lu) => lu.solve(rhs).ok_or(Error::NumericalFailure {
                    iterations: 0,
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                }),
            }
        };

        let u1 = fsolve(&(&w + &b))?;
        let denom_base = (&b - &w).dot(&u1) + pcc + kappa / tau;

        // one Newton solve for a given complementarity target
        let solve_dir = |rc: &Blocks, rtk: f64| -> Result<Direction> {
            let a_rc = p.apply_a(rc);
            let c_rc = cost.inner(rc);
            let u2 = fsolve(&(&r1 - &a_rc + &v))?;
            let rhs2 = r3 + c_rc - c_phi_r2 + rtk / tau;
            let denom = denom_base;
            if !(denom.is_finite()) || denom.abs() < 1e-300 {
                return Err(Error::NumericalFailure {
                    iterations: 0,
                    primal_residual: f64::NAN,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                });
            }
            let dtau = (rhs2 - (&b - &w).dot(&u2)) / denom;
            let dy = &u2 + u1.scale(dtau);
            let mut ds = r2.clone();
            ds.axpy(dtau, &cost);
            let aty = p.apply_a_adjoint(&dy);
            ds.axpy(-1.0, &aty);
            let mut dx = rc.sub(&phi(&x, &s_inv, &ds));
            dx.symmetrize();
            let dkappa = (rtk - kappa * dtau) / tau;
            Ok(Direction {
                dx,
                dy,
                ds,
                dtau,
                dkappa,
            })
        };

        // predictor (affine scaling)
        let rc_aff = x.scale(-1.0);
        let aff = solve_dir(&rc_aff, -tau * kappa)?;
        let alpha_aff = {
            let a = max_psd_step(&x, &aff.dx)?
                .min(max_psd_step(&s, &aff.ds)?)
                .min(scalar_step(tau, aff.dtau))
                .min(scalar_step(kappa, aff.dkappa));
            a.min(1.0)
        };
        let mu_aff = {
            let mut xa = x.clone();
            xa.axpy(alpha_aff, &aff.dx);
            let mut sa = s.clone();
            sa.axpy(alpha_aff, &aff.ds);
            (xa.inner(&sa) + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa))
                / (nu as f64 + 1.0)
        };
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector with Mehrotra second-order term
        let mut rc = Blocks(
            s_inv
                .0
                .iter()
                .zip(&x.0)
                .zip(aff.dx.0.iter().zip(&aff.ds.0))
                .map(|((sib, xb), (dxb, dsb))| {
                    let second = dxb * dsb * sib;
                    sib.scale(sigma * mu) - xb - (&second + second.adjoint()).scale(0.5)
                })
                .collect(),
        );
        rc.symmetrize();
        let rtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let dir = solve_dir(&rc, rtk)?;

        let alpha_max = max_psd_step(&x, &dir.dx)?
            .min(max_psd_step(&s, &dir.ds)?)
            .min(scalar_step(tau, dir.dtau))
            .min(scalar_step(kappa, dir.dkappa));
        let alpha = (tol::SDP_STEP_FRACTION * alpha_max).min(1.0);

        x.axpy(alpha, &dir.dx);
        x.symmetrize();
        s.axpy(alpha, &dir.ds);
        s.symmetrize();
        y += dir.dy.scale(alpha);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;

        if !(x.finite() && s.finite() && tau.is_finite() && kappa.is_finite()) {
            return Err(Error::NumericalFailure {
                iterations: iter + 1,
                primal_residual: last.0,
                dual_residual: last.1,
                gap: last.2,
            });
        }

        let mu_new = (x.inner(&s) + tau * kappa) / (nu as f64 + 1.0);
        if alpha < 1e-7 || mu_new > 0.9999 * mu_prev {
            stall += 1;
        } else {
            stall = 0;
        }
        mu_prev = mu_new;
    }

    Err(Error::NumericalFailure {
        iterations: tol::SDP_MAX_ITER,
        primal_residual: last.0,
        dual_residual: last.1,
        gap: last.2,
    })
}
