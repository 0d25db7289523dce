//! Optimization over state space: minimal/maximal coherence for a fixed
//! POVM (derivative-free multi-start simplex search), δ-sweeps of the
//! interpolated qubit family, and scatter sampling of measure triples on
//! random states.
//!
//! Mixed-state searches run over the unconstrained factorization
//! `ρ = LL†/tr(LL†)` with complex `L` of size d×d, which keeps every
//! iterate a valid state without penalties; maximization runs over
//! normalized vectors, since the measures are convex and attain their
//! maxima on pure states. Restarts and grid points evaluate in parallel;
//! each restart owns its own PRNG stream, so results are independent of
//! the thread schedule.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matops::{basis_vec, psd_sqrt, trace_re, zeros, CMat, CVec};
use crate::measures::{self, RobForm};
use crate::quantum::{edelta, haar_pure, hs_mixed, DensityMatrix, Povm};
use crate::tol;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Min,
    Max,
}

/// Outcome of an extremal-coherence search.
#[derive(Debug, Clone)]
pub struct OptResult {
    /// Best state found.
    pub state: DensityMatrix,
    /// Measure value at `state`, re-evaluated after the search.
    pub value: f64,
    pub objective: Objective,
    /// Measure name the search optimized.
    pub measure: String,
    /// Number of multi-starts actually run.
    pub restarts_used: usize,
    /// Whether the winning restart met the simplex stopping criterion.
    /// When false the result is the best found within the iteration
    /// budget.
    pub converged: bool,
}

/// Largest dimension accepted by the simplex search (the mixed
/// parameterization has 2d² coordinates).
const MAX_SEARCH_DIM: usize = 8;

/// Edge length of the initial simplex around each start.
const SIMPLEX_SCALE: f64 = 0.25;

struct SimplexOutcome {
    x: DVector<f64>,
    f: f64,
    converged: bool,
}

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Stops when
/// the objective spread over the simplex falls below
/// [`tol::SIMPLEX_F_TOL`] or the iteration budget is exhausted.
fn nelder_mead<F>(f: F, x0: &DVector<f64>, scale: f64, max_iter: usize) -> SimplexOutcome
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut verts: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    verts.push(x0.clone());
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += scale;
        verts.push(v);
    }
    let mut fvals: Vec<f64> = verts.iter().map(&f).collect();

    let mut converged = false;
    for _ in 0..max_iter {
        // Order vertices by objective value (best first).
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let second_worst = order[n - 1];
        let worst = order[n];
        if fvals[worst] - fvals[best] < tol::SIMPLEX_F_TOL {
            converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        let mut centroid = DVector::zeros(n);
        for &i in order.iter().take(n) {
            centroid += &verts[i];
        }
        centroid /= n as f64;

        let reflected = &centroid + (&centroid - &verts[worst]);
        let f_r = f(&reflected);
        if f_r < fvals[best] {
            let expanded = &centroid + (&reflected - &centroid) * 2.0;
            let f_e = f(&expanded);
            if f_e < f_r {
                verts[worst] = expanded;
                fvals[worst] = f_e;
            } else {
                verts[worst] = reflected;
                fvals[worst] = f_r;
            }
        } else if f_r < fvals[second_worst] {
            verts[worst] = reflected;
            fvals[worst] = f_r;
        } else {
            let (contracted, f_against) = if f_r < fvals[worst] {
                (&centroid + (&reflected - &centroid) * 0.5, f_r)
            } else {
                (&centroid + (&verts[worst] - &centroid) * 0.5, fvals[worst])
            };
            let f_c = f(&contracted);
            if f_c < f_against {
                verts[worst] = contracted;
                fvals[worst] = f_c;
            } else {
                // Shrink toward the best vertex.
                let anchor = verts[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    verts[i] = &anchor + (&verts[i] - &anchor) * 0.5;
                    fvals[i] = f(&verts[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if fvals[i] < fvals[best] {
            best = i;
        }
    }
    SimplexOutcome {
        x: verts.swap_remove(best),
        f: fvals[best],
        converged,
    }
}

/// Decodes a 2d² real parameter vector into `ρ = LL†/tr(LL†)`.
fn mixed_state_from_params(x: &DVector<f64>, d: usize) -> Option<DensityMatrix> {
    let mut l = zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            let k = 2 * (c * d + r);
            l[(r, c)] = Complex64::new(x[k], x[k + 1]);
        }
    }
    let m = &l * l.adjoint();
    let t = trace_re(&m);
    if t < 1e-12 {
        return None;
    }
    DensityMatrix::new(m.unscale(t)).ok()
}

/// Decodes a 2d real parameter vector into a normalized pure state.
fn pure_state_from_params(x: &DVector<f64>, d: usize) -> Option<DensityMatrix> {
    let mut v = CVec::zeros(d);
    for r in 0..d {
        v[r] = Complex64::new(x[2 * r], x[2 * r + 1]);
    }
    DensityMatrix::pure(&v).ok()
}

fn state_from_params(x: &DVector<f64>, d: usize, pure_search: bool) -> Option<DensityMatrix> {
    if pure_search {
        pure_state_from_params(x, d)
    } else {
        mixed_state_from_params(x, d)
    }
}

/// Encodes a factor matrix column-major into interleaved (re, im) pairs.
fn params_from_factor(l: &CMat) -> DVector<f64> {
    let d = l.nrows();
    let mut x = DVector::zeros(2 * d * d);
    for c in 0..d {
        for r in 0..d {
            let k = 2 * (c * d + r);
            x[k] = l[(r, c)].re;
            x[k + 1] = l[(r, c)].im;
        }
    }
    x
}

fn params_from_vector(v: &CVec) -> DVector<f64> {
    let d = v.len();
    let mut x = DVector::zeros(2 * d);
    for r in 0..d {
        x[2 * r] = v[r].re;
        x[2 * r + 1] = v[r].im;
    }
    x
}

/// Fixed starting points: the maximally mixed state for minimization, the
/// Pauli eigenstates for qubits, and deterministic anchors in higher
/// dimension. Remaining restarts draw Gaussian parameter vectors from
/// per-restart PRNG streams.
fn fixed_starts(d: usize, pure_search: bool) -> Vec<DVector<f64>> {
    let mut starts = Vec::new();
    if pure_search {
        if d == 2 {
            starts.push(params_from_vector(&CVec::from_vec(vec![
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            ])));
            starts.push(params_from_vector(&CVec::from_vec(vec![
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
            ])));
            starts.push(params_from_vector(&basis_vec(2, 0)));
        } else {
            starts.push(params_from_vector(&basis_vec(d, 0)));
            let uniform = CVec::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0));
            starts.push(params_from_vector(&uniform));
        }
    } else {
        let mixed_factor =
            psd_sqrt(DensityMatrix::maximally_mixed(d).mat()).expect("valid construction");
        starts.push(params_from_factor(&mixed_factor));
        if d == 2 {
            for rho in [
                DensityMatrix::psi_x(),
                DensityMatrix::psi_y(),
                DensityMatrix::psi_z(),
            ] {
                let factor = psd_sqrt(rho.mat()).expect("valid construction");
                starts.push(params_from_factor(&factor));
            }
        }
    }
    starts
}

/// Multi-start derivative-free search for the extremal value of a named
/// measure over states compatible with `povm`. Minimization searches mixed
/// states through the factorization `ρ = LL†/tr(LL†)`; maximization
/// searches normalized pure states. The result reports the best restart;
/// `converged = false` flags that the winning restart exhausted its
/// iteration budget before the simplex collapsed, in which case the value
/// is still the best found so far.
pub fn extremal_coherence(
    povm: &Povm,
    measure: &str,
    objective: Objective,
    restarts: usize,
    seed: u64,
) -> Result<OptResult> {
    let d = povm.dim();
    if d > MAX_SEARCH_DIM {
        return Err(Error::OutOfRange(format!(
            "extremal search supports d <= {}, got {}",
            MAX_SEARCH_DIM, d
        )));
    }
    if restarts == 0 {
        return Err(Error::OutOfRange("at least one restart is required".into()));
    }
    // Validates the measure name and the state/POVM pairing up front.
    measures::eval_named(measure, &DensityMatrix::maximally_mixed(d), povm)?;

    let pure_search = objective == Objective::Max;
    let n_params = if pure_search { 2 * d } else { 2 * d * d };
    let max_iter = 600 * n_params + 3000;
    let sign = match objective {
        Objective::Min => 1.0,
        Objective::Max => -1.0,
    };
    let f = |x: &DVector<f64>| -> f64 {
        match state_from_params(x, d, pure_search) {
            Some(rho) => match measures::eval_named(measure, &rho, povm) {
                Ok(v) => sign * v,
                Err(_) => f64::INFINITY,
            },
            None => f64::INFINITY,
        }
    };

    let mut starts = fixed_starts(d, pure_search);
    starts.truncate(restarts);
    let outcomes: Vec<SimplexOutcome> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = if i < starts.len() {
                starts[i].clone()
            } else {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                DVector::from_fn(n_params, |_, _| rng.sample(StandardNormal))
            };
            nelder_mead(&f, &x0, SIMPLEX_SCALE, max_iter)
        })
        .collect();

    let mut best = 0;
    for i in 1..outcomes.len() {
        if outcomes[i].f < outcomes[best].f {
            best = i;
        }
    }
    let winner = &outcomes[best];
    let state = state_from_params(&winner.x, d, pure_search)
        .ok_or_else(|| Error::NonFinite("search returned a degenerate parameter vector".into()))?;
    let value = measures::eval_named(measure, &state, povm)?;
    Ok(OptResult {
        state,
        value,
        objective,
        measure: measure.to_string(),
        restarts_used: restarts,
        converged: winner.converged,
    })
}

/// One row of a δ-sweep: `values` aligns with the state names the sweep
/// was asked for; `min`/`max` are filled when extremes were requested.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub delta: f64,
    pub values: Vec<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// A δ-sweep table: relative-entropy coherence of the named states with
/// respect to `E(δ)` over a grid, optionally bracketed by the extremal
/// values found by multi-start search.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub states: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Sweeps `c_rel` over a δ grid for named states, optionally adding the
/// extremal (min/max) curves. Grid points evaluate in parallel.
pub fn delta_sweep(
    grid: &[f64],
    states: &[&str],
    with_extremes: bool,
    restarts: usize,
    seed: u64,
) -> Result<SweepTable> {
    for &delta in grid {
        if !(0.0..=1.0).contains(&delta) || !delta.is_finite() {
            return Err(Error::OutOfRange(format!(
                "delta grid must lie in [0, 1], got {}",
                delta
            )));
        }
    }
    let resolved: Vec<DensityMatrix> = states
        .iter()
        .map(|name| DensityMatrix::by_name(name))
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&delta| -> Result<SweepRow> {
            let povm = edelta(delta)?;
            let values = resolved
                .iter()
                .map(|rho| measures::c_rel_povm(rho, &povm))
                .collect::<Result<Vec<f64>>>()?;
            let (min, max) = if with_extremes {
                let lo = extremal_coherence(&povm, "c_rel", Objective::Min, restarts, seed)?;
                let hi = extremal_coherence(&povm, "c_rel", Objective::Max, restarts, seed)?;
                (Some(lo.value), Some(hi.value))
            } else {
                (None, None)
            };
            Ok(SweepRow {
                delta,
                values,
                min,
                max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        states: states.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

/// One scatter sample: the sampled kind ("pure" or "mixed") and the three
/// measures of the drawn state.
#[derive(Debug, Clone)]
pub struct ScatterRow {
    pub kind: String,
    pub c_rob: f64,
    pub c_rel: f64,
    pub c_l1: f64,
}

/// Samples `n_pure` Haar pure states and `n_mixed` Hilbert-Schmidt mixed
/// states and evaluates (c_rob, c_rel, c_l1) for each. States are drawn
/// sequentially from `rng` so results depend only on the seed; the
/// measure evaluations run in parallel.
pub fn scatter_experiment(
    povm: &Povm,
    n_pure: usize,
    n_mixed: usize,
    rng: &mut impl Rng,
) -> Result<Vec<ScatterRow>> {
    let d = povm.dim();
    let mut samples: Vec<(&'static str, DensityMatrix)> = Vec::with_capacity(n_pure + n_mixed);
    for _ in 0..n_pure {
        samples.push(("pure", haar_pure(rng, d)));
    }
    for _ in 0..n_mixed {
        samples.push(("mixed", hs_mixed(rng, d)));
    }
    samples
        .par_iter()
        .map(|(kind, rho)| -> Result<ScatterRow> {
            Ok(ScatterRow {
                kind: kind.to_string(),
                c_rob: measures::c_rob_povm(rho, povm, RobForm::Both)?.value,
                c_rel: measures::c_rel_povm(rho, povm)?,
                c_l1: measures::c_l1_povm(rho, povm)?,
            })
        })
        .collect()
}
