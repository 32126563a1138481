//! Max-min transmit beampattern synthesis toward a selected set of angle
//! bins by iterative inner convex approximation.
//!
//! Each outer iteration replaces the (convex-in-W, hence under-estimated by
//! its tangent) pattern value `f_j(W) = ‖Wᵀa(ν_j)‖²` with its linearization
//! around the current iterate and solves
//! `max ζ s.t. ζ ≤ f̃_j(W), tr(WWᴴ) ≤ P_T` exactly via its dual: for simplex
//! weights λ the ball-constrained maximum of `Σ λ_j f̃_j` is attained along
//! the aggregated gradient, so the dual `φ(λ) = √P_T·‖Σλ_jG_j‖_F − Σλ_jf_j`
//! is minimized over the simplex by entropic mirror descent, with the primal
//! candidate read off the same aggregated direction. The touching property
//! of the linearization makes the outer min-pattern sequence nondecreasing.

use crate::array::{beampattern, steering, ArrayConfig, BeamWeights};
use crate::error::{Error, Result};
use crate::C64;
use ndarray::Array2;

/// A max-min synthesis instance: target spatial frequencies (all on the
/// configured grid), the transmit power budget, and the array geometry.
#[derive(Debug, Clone)]
pub struct BeamProblem {
    targets: Vec<f64>,
    total_power: f64,
    cfg: ArrayConfig,
}

impl BeamProblem {
    pub fn new(targets: Vec<f64>, total_power: f64, cfg: ArrayConfig) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::invalid("beam problem needs at least one target"));
        }
        if targets.len() > cfg.bins() {
            return Err(Error::invalid(format!(
                "{} targets exceed the {}-bin grid",
                targets.len(),
                cfg.bins()
            )));
        }
        if !(total_power > 0.0) {
            return Err(Error::invalid("total power must be positive"));
        }
        for &nu in &targets {
            if !cfg.grid.iter().any(|&g| (g - nu).abs() < 1e-9) {
                return Err(Error::invalid(format!(
                    "target frequency {nu} is not on the angle grid"
                )));
            }
        }
        for (i, &a) in targets.iter().enumerate() {
            if targets[i + 1..].iter().any(|&b| (a - b).abs() < 1e-9) {
                return Err(Error::invalid(format!("duplicate target frequency {a}")));
            }
        }
        Ok(BeamProblem {
            targets,
            total_power,
            cfg,
        })
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn cfg(&self) -> &ArrayConfig {
        &self.cfg
    }

    /// Smallest pattern value over the target set.
    pub fn min_pattern(&self, w: &BeamWeights) -> f64 {
        self.targets
            .iter()
            .map(|&nu| beampattern(w, nu))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Progress of the outer approximation loop.
#[derive(Debug, Clone)]
pub struct IcaState {
    /// Best iterate found.
    pub w_current: BeamWeights,
    /// Min-pattern value of the best iterate (the attained max-min bound).
    pub zeta: f64,
    /// Outer iterations performed.
    pub iteration: usize,
    /// Min-pattern value after the initial point and after each outer
    /// iteration; nondecreasing.
    pub history: Vec<f64>,
    /// Optimal value of each outer iteration's linearized subproblem.
    pub subproblem_values: Vec<f64>,
    /// Remaining relative linearized improvement at termination; near zero
    /// at a stationary point.
    pub kkt_residual: f64,
    /// Whether the relative-improvement stopping rule was met within the
    /// iteration budget.
    pub converged: bool,
}

/// Pattern value at one frequency; transmit-side alias of the beampattern.
pub fn pattern_value(w: &BeamWeights, nu: f64) -> f64 {
    beampattern(w, nu)
}

/// First-order model of the pattern value around an expansion point:
/// `f̃(W) = f(W̃) + Re{tr(Gᴴ(W − W̃))}` with `G = 2·a*(ν)·aᵀ(ν)·W̃`.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// Gradient G under the inner product `⟨A,B⟩ = Re{tr(AᴴB)}`.
    pub gradient: Array2<C64>,
    /// `f(W̃)`, the exact pattern value at the expansion point.
    pub value_at_expansion: f64,
    offset: f64,
}

impl Linearization {
    /// Evaluates the affine model at an arbitrary weight matrix.
    pub fn evaluate(&self, w: &Array2<C64>) -> f64 {
        self.offset + re_inner(&self.gradient, w)
    }
}

fn re_inner(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Linearizes the pattern value at `nu` around `w_tilde`.
pub fn linearize(w_tilde: &BeamWeights, nu: f64) -> Result<Linearization> {
    let n = w_tilde.n_tx();
    let a = steering(nu, n)?;
    let r = transmit_response(w_tilde.matrix(), &a);
    let f: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    let mut gradient = Array2::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            gradient[(p, q)] = 2.0 * a[p].conj() * r[q];
        }
    }
    // f̃(W) = Re{tr(GᴴW)} − f(W̃), since Re{tr(GᴴW̃)} = 2f(W̃).
    Ok(Linearization {
        gradient,
        value_at_expansion: f,
        offset: -f,
    })
}

/// `Wᵀ a` for a steering vector.
fn transmit_response(w: &Array2<C64>, a: &[C64]) -> Vec<C64> {
    let n = w.ncols();
    (0..n)
        .map(|q| (0..w.nrows()).map(|p| w[(p, q)] * a[p]).sum())
        .collect()
}

const MAX_DUAL_ITERS: usize = 20_000;
const OUTER_DUAL_ITERS: usize = 2_000;

struct SubproblemOutcome {
    weights: BeamWeights,
    zeta: f64,
    gap: f64,
    converged: bool,
}

/// Solves the linearized subproblem
/// `max ζ s.t. ζ ≤ f̃_j(W; W̃) ∀j, tr(WWᴴ) ≤ P_T`
/// around `w_tilde` to duality-gap tolerance `tol` (relative). Returns the
/// maximizing weights, rescaled to the power boundary, and the optimal ζ.
pub fn solve_subproblem(
    problem: &BeamProblem,
    w_tilde: &BeamWeights,
    tol: f64,
) -> Result<(BeamWeights, f64)> {
    let out = dual_solve(problem, w_tilde, tol, MAX_DUAL_ITERS)?;
    if !out.converged {
        return Err(Error::IterationLimit(format!(
            "subproblem duality gap {:.3e} above tolerance after {MAX_DUAL_ITERS} iterations",
            out.gap
        )));
    }
    Ok((out.weights, out.zeta))
}

/// Best-effort dual solve; `converged` reports whether the gap target was
/// met within the iteration budget.
fn dual_solve(
    problem: &BeamProblem,
    w_tilde: &BeamWeights,
    tol: f64,
    max_iters: usize,
) -> Result<SubproblemOutcome> {
    let n = problem.cfg.n_tx;
    if w_tilde.n_tx() != n {
        return Err(Error::invalid("expansion point has wrong antenna count"));
    }
    let radius = problem.total_power.sqrt();
    let count = problem.targets.len();
    let a: Vec<Vec<C64>> = problem
        .targets
        .iter()
        .map(|&nu| steering(nu, n))
        .collect::<Result<_>>()?;
    let r: Vec<Vec<C64>> = a
        .iter()
        .map(|aj| transmit_response(w_tilde.matrix(), aj))
        .collect();
    let f: Vec<f64> = r.iter().map(|rj| rj.iter().map(|v| v.norm_sqr()).sum()).collect();

    // Gram of the gradients G_j = 2·a*_j·r_jᵀ:
    // Re{tr(G_jᴴG_k)} = 4·Re{(a_jᵀa*_k)·(r_kᵀr̄_j)}.
    let mut gram = vec![vec![0.0; count]; count];
    for j in 0..count {
        for k in 0..count {
            let s: C64 = a[j].iter().zip(&a[k]).map(|(x, y)| x * y.conj()).sum();
            let t: C64 = r[k].iter().zip(&r[j]).map(|(x, y)| x * y.conj()).sum();
            gram[j][k] = 4.0 * (s * t).re;
        }
    }

    let mut lambda = vec![1.0 / count as f64; count];
    let mut best_dual = f64::INFINITY;
    let mut best_primal = f64::NEG_INFINITY;
    let mut best_lambda: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    for it in 0..max_iters {
        let glam: Vec<f64> = (0..count)
            .map(|j| (0..count).map(|k| gram[j][k] * lambda[k]).sum())
            .collect();
        let quad: f64 = lambda.iter().zip(&glam).map(|(l, g)| l * g).sum();
        let norm_g = quad.max(0.0).sqrt();
        let dual: f64 = radius * norm_g - lambda.iter().zip(&f).map(|(l, fj)| l * fj).sum::<f64>();
        best_dual = best_dual.min(dual);
        // The dual gradient components equal the constraint values of the
        // primal candidate W(λ) = √P_T·G(λ)/‖G(λ)‖, so both come for free.
        let grad: Vec<f64>;
        if norm_g > 1e-150 {
            grad = (0..count).map(|j| radius * glam[j] / norm_g - f[j]).collect();
            let primal = grad.iter().cloned().fold(f64::INFINITY, f64::min);
            if primal > best_primal {
                best_primal = primal;
                best_lambda = Some(lambda.clone());
            }
        } else {
            grad = f.iter().map(|fj| -fj).collect();
        }
        gap = best_dual - best_primal;
        if gap <= tol * best_dual.abs().max(1.0) {
            converged = true;
            break;
        }
        let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gmax == 0.0 {
            converged = best_primal > f64::NEG_INFINITY;
            break;
        }
        let step = 0.5 / ((it + 1) as f64).sqrt() / gmax;
        let mut total = 0.0;
        for (l, g) in lambda.iter_mut().zip(&grad) {
            *l *= (-step * g).exp();
            total += *l;
        }
        for l in &mut lambda {
            *l /= total;
        }
    }

    let Some(lam) = best_lambda else {
        // All gradients vanished: the expansion point itself is returned
        // with its (zero) linearized value.
        let zeta = f.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(SubproblemOutcome {
            weights: w_tilde.clone(),
            zeta,
            gap: 0.0,
            converged: true,
        });
    };
    // Materialize W* = √P_T · G(λ*)/‖G(λ*)‖_F.
    let mut g = Array2::<C64>::zeros((n, n));
    for j in 0..count {
        for p in 0..n {
            for q in 0..n {
                g[(p, q)] += 2.0 * lam[j] * a[j][p].conj() * r[j][q];
            }
        }
    }
    let norm = re_inner(&g, &g).sqrt();
    let w_star = g.mapv(|v| v * (radius / norm));
    Ok(SubproblemOutcome {
        weights: BeamWeights::new(w_star, problem.total_power)?,
        zeta: best_primal,
        gap,
        converged,
    })
}

const SUBPROBLEM_TOL: f64 = 1e-8;

/// Default outer-loop settings.
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-5;

/// Runs the outer approximation loop from `w0` until the relative
/// min-pattern improvement drops below `tol` or `max_iters` is reached (the
/// best iterate is returned either way, flagged by `converged`).
pub fn synthesize(
    problem: &BeamProblem,
    w0: &BeamWeights,
    max_iters: usize,
    tol: f64,
) -> Result<IcaState> {
    let power_err = (w0.total_power() - problem.total_power).abs() / problem.total_power;
    if power_err > 1e-6 {
        return Err(Error::invalid(format!(
            "initial weights carry power {} but the problem budget is {}",
            w0.total_power(),
            problem.total_power
        )));
    }
    let mut best_w = w0.clone();
    let mut best_min = problem.min_pattern(&best_w);
    let mut history = vec![best_min];
    let mut subproblem_values = Vec::new();
    let mut converged = false;
    let mut iteration = 0;
    let mut last_zeta = best_min;
    for m in 1..=max_iters {
        iteration = m;
        // Best-effort subproblem: an unconverged candidate is still a valid
        // feasible point, and the keep-best rule preserves monotonicity.
        let out = dual_solve(problem, &best_w, SUBPROBLEM_TOL, OUTER_DUAL_ITERS)?;
        let (w_cand, zeta) = (out.weights, out.zeta);
        subproblem_values.push(zeta);
        last_zeta = zeta;
        let cand_min = problem.min_pattern(&w_cand);
        let improvement = (cand_min - best_min) / best_min.abs().max(1.0);
        if cand_min > best_min {
            best_w = w_cand;
            best_min = cand_min;
        }
        history.push(best_min);
        if improvement < tol {
            converged = true;
            break;
        }
    }
    let kkt_residual = (last_zeta - best_min).max(0.0) / best_min.abs().max(1.0);
    Ok(IcaState {
        w_current: best_w,
        zeta: best_min,
        iteration,
        history,
        subproblem_values,
        kkt_residual,
        converged,
    })
}
