//! Alternating nonlinear least squares for Kruskal models.
//!
//! Each outer sweep updates every non-fixed factor matrix in turn. A mode
//! update linearizes the matricized residual
//! `F_n(a) = A_n * V_n^T - T_(n)` around the current parameter vector and
//! takes the Gauss-Newton step `p = -(J^T J)^+ J^T f` inside a trust region:
//! steps longer than the radius are rescaled to the boundary, and acceptance
//! is governed by the trustworthiness ratio of actual to predicted reduction.
//!
//! Nonnegativity is enforced through the square mapping `g(a) = a .* a`: the
//! stored factor is `g(a)`, so it is elementwise nonnegative by construction,
//! and the Jacobian picks up the chain factor `2 diag(a)`. `(J^T J)^+` uses a
//! pseudo-inverse rather than a plain inverse because the chain factor
//! vanishes wherever `a` has a zero entry.
//!
//! The parameter vector for mode `n` stacks the columns of `A_n`
//! (`a[r * I_n + i] = A_n[i, r]`), matching [`Matrix::vec_columns`].
//!
//! `J` is never materialized during fitting. With the column-stacked layout,
//! `J^T J` is block-diagonal over the rows of `A_n` (`R x R` blocks built
//! from the coproduct Gram matrix), so the normal equations split into one
//! tiny solve per factor row; `J^T f` reduces to the matricized tensor times
//! Khatri-Rao product. The explicit [`gn_jacobian`] exists for verification
//! against finite differences.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::pseudo_inverse;
use crate::math::{self, CompensatedSum};
use crate::rng::SeededRng;
use crate::tensor::{
    coproduct_matrix, frobenius_norm, unfold, DenseTensor, KruskalModel, Matrix, TensorError,
};

/// Trust-region controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionParams {
    /// Starting radius.
    pub initial_radius: f64,
    /// Multiplier applied when a step is rejected (< 1).
    pub shrink: f64,
    /// Multiplier applied when a boundary step performs well (> 1).
    pub grow: f64,
    /// Trustworthiness threshold for acceptance, 0 < eta < 1.
    pub acceptance_threshold: f64,
    /// Radius cap.
    pub max_radius: f64,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        Self {
            initial_radius: 1.0,
            shrink: 0.25,
            grow: 2.0,
            acceptance_threshold: 1e-3,
            max_radius: 1e6,
        }
    }
}

/// Options for [`fit_cpd`] and [`update_mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Number of rank-one terms.
    pub rank: usize,
    /// Outer-sweep budget.
    pub max_iterations: usize,
    /// Stopping tolerance on both the successive-error difference and the
    /// relative step size.
    pub tolerance: f64,
    /// Constrain every updated factor to be elementwise nonnegative.
    pub nonnegative: bool,
    /// Seed for factor initialization.
    pub seed: u64,
    /// Trust-region controls.
    pub trust: TrustRegionParams,
    /// Accepted trust-region steps attempted per mode per outer sweep.
    pub inner_steps: usize,
}

impl SolverOptions {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iterations: 500,
            tolerance: 1e-12,
            nonnegative: true,
            seed: 0,
            trust: TrustRegionParams::default(),
            inner_steps: 1,
        }
    }
}

/// Mutable state of one trust-region subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Parameter vector (stacked factor columns).
    pub params: Vec<f64>,
    /// Current trust radius.
    pub radius: f64,
    /// Attempted steps so far.
    pub iteration: usize,
    /// Residual norm as maintained by the caller.
    pub residual_norm: f64,
    /// Norm of the last step relative to the parameter norm.
    pub relative_step: f64,
}

impl SolverState {
    pub fn new(params: Vec<f64>, radius: f64) -> Self {
        Self {
            params,
            radius,
            iteration: 0,
            residual_norm: f64::INFINITY,
            relative_step: f64::INFINITY,
        }
    }
}

/// Why a fit stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceReason {
    /// Successive-error difference or relative step fell below tolerance.
    ToleranceMet,
    /// Outer-sweep budget exhausted.
    MaxIterations,
    /// No mode produced an acceptable step; further reductions are beneath
    /// measurement precision.
    StepStagnation,
}

impl core::fmt::Display for ConvergenceReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConvergenceReason::ToleranceMet => write!(f, "tolerance met"),
            ConvergenceReason::MaxIterations => write!(f, "max iterations"),
            ConvergenceReason::StepStagnation => write!(f, "step stagnation"),
        }
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Final `||T - reconstruction|| / ||T||`.
    pub relative_error: f64,
    /// Outer sweeps used.
    pub iterations: usize,
    pub reason: ConvergenceReason,
    /// Objective (half squared residual norm) at the start and after every
    /// accepted trust-region step; nonincreasing by construction.
    pub objective_trace: Vec<f64>,
}

/// Solver failures.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Rank must be at least one.
    ZeroRank,
    /// Fitting needs at least two modes.
    OrderTooSmall,
    /// A fixed-mode index is out of range or repeated, or its matrix has the
    /// wrong shape.
    BadFixedMode { mode: usize },
    /// The requested mode is in the fixed set.
    ModeIsFixed { mode: usize },
    /// Negative entries in a factor that the square mapping must represent.
    NegativeFactor { mode: usize },
    Tensor(TensorError),
}

impl From<TensorError> for SolverError {
    fn from(e: TensorError) -> Self {
        SolverError::Tensor(e)
    }
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::ZeroRank => write!(f, "rank must be at least 1"),
            SolverError::OrderTooSmall => write!(f, "tensor must have at least two modes"),
            SolverError::BadFixedMode { mode } => write!(f, "invalid fixed mode {mode}"),
            SolverError::ModeIsFixed { mode } => write!(f, "mode {mode} is fixed"),
            SolverError::NegativeFactor { mode } => {
                write!(f, "factor {mode} has negative entries under the square mapping")
            }
            SolverError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

/// Residual reductions below `STAGNATION_GUARD * eps * ||T|| * ||F||` are
/// indistinguishable from floating-point measurement noise and are treated
/// as stagnation rather than progress.
const STAGNATION_GUARD: f64 = 8.0;

/// Trust-region retries per requested step before declaring stagnation.
const MAX_REJECTS: usize = 24;

/// Matricized residual `A_n * V_n^T - T_(n)`.
pub fn residual_matrix(
    k: &KruskalModel,
    t: &DenseTensor,
    mode: usize,
) -> Result<Matrix, SolverError> {
    check_model_matches(k, t)?;
    let v = coproduct_matrix(k, mode)?;
    let unfolded = unfold(t, mode)?;
    Ok(k.factor(mode).matmul_transpose_b(&v).sub(&unfolded))
}

/// Square mapping `g(a) = a .* a`; the nonnegativity parameterization.
pub fn square_map(params: &[f64]) -> Vec<f64> {
    params.iter().map(|&x| x * x).collect()
}

/// Explicit Jacobian of the column-stacked residual `vec(F_n)` with respect
/// to the parameter vector `a` (column-stacked `A_n`).
///
/// Row `j * I_n + i` of the result differentiates residual entry `(i, j)`;
/// column `r * I_n + i` differentiates parameter `A_n[i, r]`. In the
/// nonnegative case the chain factor `2 a` of the square mapping is included,
/// so a zero parameter yields a zero column.
pub fn gn_jacobian(
    k: &KruskalModel,
    t: &DenseTensor,
    mode: usize,
    params: &[f64],
    nonnegative: bool,
) -> Result<Matrix, SolverError> {
    check_model_matches(k, t)?;
    let rows_n = t.shape()[mode];
    let rank = k.rank();
    if params.len() != rows_n * rank {
        return Err(SolverError::Tensor(TensorError::SizeMismatch {
            expected: rows_n * rank,
            actual: params.len(),
        }));
    }
    let v = coproduct_matrix(k, mode)?;
    let residual_len = rows_n * v.rows();
    let mut j = Matrix::zeros(residual_len, rows_n * rank);
    for jj in 0..v.rows() {
        let v_row = v.row(jj);
        for i in 0..rows_n {
            let out_row = j.row_mut(jj * rows_n + i);
            for (r, &vjr) in v_row.iter().enumerate() {
                let col = r * rows_n + i;
                let chain = if nonnegative { 2.0 * params[col] } else { 1.0 };
                out_row[col] = vjr * chain;
            }
        }
    }
    Ok(j)
}

/// Gauss-Newton step `p = -(J^T J)^+ J^T f`, minimizing `||f + J p||`.
///
/// The pseudo-inverse keeps the step defined when `J^T J` is singular (for
/// the square mapping this happens whenever a parameter is zero). The
/// predicted reduction of the local model at the returned step is always
/// nonnegative.
pub fn gauss_newton_step(j: &Matrix, f: &[f64]) -> Vec<f64> {
    assert_eq!(j.rows(), f.len(), "residual length mismatch");
    let n = j.cols();
    let mut g = vec![0.0; n];
    for (i, &fi) in f.iter().enumerate() {
        if fi == 0.0 {
            continue;
        }
        for (slot, &jij) in g.iter_mut().zip(j.row(i).iter()) {
            *slot += jij * fi;
        }
    }
    let jtj_pinv = pseudo_inverse(&j.gram());
    let mut p = vec![0.0; n];
    for i in 0..n {
        p[i] = -math::dot(jtj_pinv.row(i), &g);
    }
    p
}

/// Trust-region acceptance rule.
///
/// The trustworthiness ratio `rho = actual / predicted` decides: accept iff
/// `rho > eta`. A rejected step shrinks the radius; a well-modeled step
/// (`rho > 0.75`) that ran into the boundary grows it, up to the cap. A zero
/// predicted reduction with a nonzero step counts as a rejection.
///
/// Returns the decision and the updated state (parameters advance only on
/// acceptance; `residual_norm` is the caller's to refresh).
pub fn trust_region_accept(
    state: &SolverState,
    step: &[f64],
    actual_reduction: f64,
    predicted_reduction: f64,
    params: &TrustRegionParams,
) -> (bool, SolverState) {
    let step_norm = math::norm(step);
    let mut next = state.clone();
    next.iteration = state.iteration + 1;
    next.relative_step = step_norm / math::norm(&state.params).max(f64::MIN_POSITIVE);

    if predicted_reduction <= 0.0 {
        // Degenerate model: no trustworthy prediction to compare against.
        if step_norm > 0.0 {
            next.radius = state.radius * params.shrink;
        }
        return (false, next);
    }
    let rho = actual_reduction / predicted_reduction;
    let accept = rho > params.acceptance_threshold;
    if !accept {
        next.radius = state.radius * params.shrink;
    } else if rho > 0.75 && step_norm >= 0.99 * state.radius {
        next.radius = (state.radius * params.grow).min(params.max_radius);
    }
    if accept {
        for (slot, &d) in next.params.iter_mut().zip(step.iter()) {
            *slot += d;
        }
    }
    (accept, next)
}

/// One (or `opts.inner_steps`) accepted trust-region Gauss-Newton step(s) on
/// the mode-`mode` subproblem, with every other factor held fixed. The
/// objective never increases; in nonnegative mode the returned factor is
/// elementwise nonnegative by construction.
pub fn update_mode(
    k: &KruskalModel,
    t: &DenseTensor,
    mode: usize,
    opts: &SolverOptions,
    fixed_modes: &[usize],
) -> Result<KruskalModel, SolverError> {
    check_model_matches(k, t)?;
    if fixed_modes.contains(&mode) {
        return Err(SolverError::ModeIsFixed { mode });
    }
    let mut model = k.clone();
    let mut params = params_from_factor(k.factor(mode), opts.nonnegative)
        .ok_or(SolverError::NegativeFactor { mode })?;
    let unfolded = unfold(t, mode)?;
    let tensor_norm = frobenius_norm(t);
    let mut radius = opts.trust.initial_radius;
    for _ in 0..opts.inner_steps.max(1) {
        let outcome = trust_region_mode_step(
            &mut model,
            &mut params,
            &unfolded,
            mode,
            tensor_norm,
            &mut radius,
            opts,
        );
        if outcome.is_none() {
            break;
        }
    }
    Ok(model)
}

/// Nonnegative (or unconstrained) CPD by alternating trust-region
/// Gauss-Newton, cycling over all non-fixed modes until the successive-error
/// difference or the relative step size drops below `opts.tolerance`, the
/// sweep budget runs out, or no mode can make measurable progress.
///
/// `fixed` pins (mode, matrix) pairs that are adopted verbatim and never
/// updated; the returned model carries them bit-identically.
pub fn fit_cpd(
    t: &DenseTensor,
    opts: &SolverOptions,
    fixed: Option<&[(usize, Matrix)]>,
) -> Result<(KruskalModel, FitReport), SolverError> {
    if opts.rank == 0 {
        return Err(SolverError::ZeroRank);
    }
    if t.order() < 2 {
        return Err(SolverError::OrderTooSmall);
    }
    let order = t.order();
    let rank = opts.rank;

    let mut fixed_of_mode: Vec<Option<&Matrix>> = vec![None; order];
    if let Some(pairs) = fixed {
        for (mode, m) in pairs {
            if *mode >= order || fixed_of_mode[*mode].is_some() {
                return Err(SolverError::BadFixedMode { mode: *mode });
            }
            if m.rows() != t.shape()[*mode] || m.cols() != rank {
                return Err(SolverError::BadFixedMode { mode: *mode });
            }
            fixed_of_mode[*mode] = Some(m);
        }
    }
    let free_modes: Vec<usize> = (0..order).filter(|&m| fixed_of_mode[m].is_none()).collect();
    if free_modes.is_empty() {
        return Err(SolverError::OrderTooSmall);
    }

    // Factors start from seeded uniform (0,1) draws; under the square mapping
    // the internal parameter is the square root of the draw, so the starting
    // factor equals the draw either way and never sits on the zero-derivative
    // locus of the mapping.
    let mut rng = SeededRng::new(opts.seed);
    let mut factors: Vec<Matrix> = Vec::with_capacity(order);
    let mut params: Vec<Option<Vec<f64>>> = Vec::with_capacity(order);
    for mode in 0..order {
        match fixed_of_mode[mode] {
            Some(m) => {
                factors.push(m.clone());
                params.push(None);
            }
            None => {
                let rows = t.shape()[mode];
                let draw = Matrix::from_fn(rows, rank, |_, _| rng.uniform_open());
                let p = if opts.nonnegative {
                    draw.vec_columns().iter().map(|&x| math::sqrt(x)).collect()
                } else {
                    draw.vec_columns()
                };
                factors.push(draw);
                params.push(Some(p));
            }
        }
    }
    let mut model = KruskalModel::new(factors)?;

    let unfoldings: Vec<Option<Matrix>> = (0..order)
        .map(|mode| {
            if fixed_of_mode[mode].is_none() {
                unfold(t, mode).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_, _>>()?;

    let tensor_norm = frobenius_norm(t);
    let norm_scale = if tensor_norm > 0.0 { tensor_norm } else { 1.0 };
    let mut radii = vec![opts.trust.initial_radius; order];

    let first_free = free_modes[0];
    let mut objective = mode_objective(
        &model,
        first_free,
        unfoldings[first_free].as_ref().expect("free mode cached"),
    );
    let mut trace = vec![objective];
    let mut error_prev = math::sqrt(2.0 * objective.max(0.0)) / norm_scale;

    let mut reason = ConvergenceReason::MaxIterations;
    let mut iterations = 0;
    for _sweep in 0..opts.max_iterations {
        iterations += 1;
        let before: Vec<f64> = concat_params(&params);
        let mut any_accepted = false;
        for &mode in &free_modes {
            let mode_params = params[mode].as_mut().expect("free mode has parameters");
            for _ in 0..opts.inner_steps.max(1) {
                match trust_region_mode_step(
                    &mut model,
                    mode_params,
                    unfoldings[mode].as_ref().expect("free mode cached"),
                    mode,
                    tensor_norm,
                    &mut radii[mode],
                    opts,
                ) {
                    Some(new_objective) => {
                        debug_assert!(
                            new_objective <= *trace.last().expect("trace is seeded"),
                            "objective increased across an accepted step"
                        );
                        objective = new_objective;
                        trace.push(new_objective);
                        any_accepted = true;
                    }
                    None => break,
                }
            }
        }
        if !any_accepted {
            reason = ConvergenceReason::StepStagnation;
            break;
        }
        let error = math::sqrt(2.0 * objective.max(0.0)) / norm_scale;
        let after: Vec<f64> = concat_params(&params);
        let step: Vec<f64> = before.iter().zip(after.iter()).map(|(b, a)| a - b).collect();
        let relative_step = math::norm(&step) / math::norm(&before).max(f64::MIN_POSITIVE);
        if (error - error_prev).abs() < opts.tolerance || relative_step < opts.tolerance {
            reason = ConvergenceReason::ToleranceMet;
            error_prev = error;
            break;
        }
        error_prev = error;
    }

    let report = FitReport {
        relative_error: error_prev,
        iterations,
        reason,
        objective_trace: trace,
    };
    Ok((model, report))
}

fn check_model_matches(k: &KruskalModel, t: &DenseTensor) -> Result<(), SolverError> {
    if k.order() != t.order() || k.shape() != t.shape() {
        return Err(SolverError::Tensor(TensorError::ShapeMismatch(
            alloc::format!("model shape {:?} vs tensor shape {:?}", k.shape(), t.shape()),
        )));
    }
    Ok(())
}

fn concat_params(params: &[Option<Vec<f64>>]) -> Vec<f64> {
    let mut out = Vec::new();
    for p in params.iter().flatten() {
        out.extend_from_slice(p);
    }
    out
}

/// Internal parameters representing a factor: identity when unconstrained,
/// elementwise square root under the square mapping (requires nonnegative
/// entries).
fn params_from_factor(factor: &Matrix, nonnegative: bool) -> Option<Vec<f64>> {
    let flat = factor.vec_columns();
    if !nonnegative {
        return Some(flat);
    }
    if flat.iter().any(|&x| x < 0.0) {
        return None;
    }
    Some(flat.iter().map(|&x| math::sqrt(x)).collect())
}

fn factor_from_params(rows: usize, rank: usize, params: &[f64], nonnegative: bool) -> Matrix {
    if nonnegative {
        let squared: Vec<f64> = params.iter().map(|&x| x * x).collect();
        Matrix::from_vec_columns(rows, rank, &squared)
    } else {
        Matrix::from_vec_columns(rows, rank, params)
    }
}

/// Half squared Frobenius norm of the mode-`mode` residual, with the factor
/// implied by the model. Fused evaluation, compensated accumulation.
fn mode_objective(model: &KruskalModel, mode: usize, unfolded: &Matrix) -> f64 {
    let v = coproduct_matrix(model, mode).expect("validated shapes");
    objective_against(model.factor(mode), &v, unfolded)
}

fn objective_against(factor: &Matrix, v: &Matrix, unfolded: &Matrix) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..factor.rows() {
        let a_row = factor.row(i);
        let t_row = unfolded.row(i);
        for (j, &t_ij) in t_row.iter().enumerate() {
            let v_row = v.row(j);
            let mut fitted = 0.0;
            for (&a, &vv) in a_row.iter().zip(v_row.iter()) {
                fitted += a * vv;
            }
            let diff = fitted - t_ij;
            acc.add(diff * diff);
        }
    }
    0.5 * acc.value()
}

/// Gauss-Newton direction for one mode without materializing the Jacobian:
/// the step (stacked-column layout), the gradient/step inner product and
/// `||J p||^2`, all at the current parameters.
struct Direction {
    step: Vec<f64>,
    gradient_dot_step: f64,
    j_step_norm_sq: f64,
}

/// Parameters this far (relatively) below the mode's largest are held out of
/// the Gauss-Newton step and handed to the release move instead; the `1/a`
/// factor in their step component would otherwise dwarf every other
/// coordinate once the step is clipped to the radius.
const FREEZE_RELATIVE: f64 = 1e-2;

/// With the column-stacked layout, `J^T J p = -J^T f` decouples into one
/// `R x R` system per factor row, and substituting the chain rule reduces
/// every one of them to the same factor-space system
/// `G q = -(A G - M)` with `p = q / (2a)` elementwise (or `p = q` when
/// unconstrained). Solving in `q` sidesteps the numerically singular raw
/// blocks `4 diag(a) G diag(a)`. Coordinates on the zero locus of the square
/// mapping (frozen by [`FREEZE_RELATIVE`]) get a zero step component,
/// mirroring their vanishing Jacobian columns; the release move is what lets
/// them re-enter. Rank deficiency of the coproduct itself is handled by the
/// pseudo-inverse of `G`.
fn gn_direction(
    factor: &Matrix,
    params: &[f64],
    gram: &Matrix,
    mttkrp: &Matrix,
    nonnegative: bool,
) -> Direction {
    let rows = factor.rows();
    let rank = factor.cols();
    // FV = A * G - M  ==  (A V^T - T_(n)) V, the residual seen through V.
    let fv = factor.matmul(gram).sub(mttkrp);
    let gram_pinv = pseudo_inverse(gram);
    // Factor-space direction: q = -(A G - M) pinv(G), row per factor row.
    let q = fv.matmul(&gram_pinv).scaled(-1.0);

    let freeze_below = if nonnegative {
        FREEZE_RELATIVE * params.iter().fold(0.0f64, |m, &a| m.max(a.abs()))
    } else {
        0.0
    };
    let mut step = vec![0.0; rows * rank];
    let mut gradient_dot_step = CompensatedSum::new();
    // Factor-space image of the step, for <B^T B, G> below.
    let mut chained = vec![0.0; rows * rank];
    for i in 0..rows {
        for r in 0..rank {
            let c = r * rows + i;
            let q_ir = q.get(i, r);
            if nonnegative {
                let a = params[c];
                if a.abs() > freeze_below || (a != 0.0 && freeze_below == 0.0) {
                    step[c] = q_ir / (2.0 * a);
                    chained[c] = q_ir;
                    gradient_dot_step.add(fv.get(i, r) * q_ir);
                }
            } else {
                step[c] = q_ir;
                chained[c] = q_ir;
                gradient_dot_step.add(fv.get(i, r) * q_ir);
            }
        }
    }

    // ||J p||^2 = <B^T B, G> with B the step mapped through the chain rule.
    let b = Matrix::from_vec_columns(rows, rank, &chained);
    let bt_b = b.gram();
    let mut j_step_norm_sq = 0.0;
    for r in 0..rank {
        for s in 0..rank {
            j_step_norm_sq += bt_b.get(r, s) * gram.get(r, s);
        }
    }

    Direction {
        step,
        gradient_dot_step: gradient_dot_step.value(),
        j_step_norm_sq: j_step_norm_sq.max(0.0),
    }
}

/// Candidate re-entry for a frozen coordinate: the square mapping has zero
/// gradient on its zero locus, so a parameter pinned there never moves under
/// first-order steps even when raising the factor entry would reduce the
/// objective. The one-dimensional subproblem in the factor entry `x` is
/// quadratic with minimizer `x* = x0 - FV/G_rr`; a strictly negative `FV`
/// certifies descent. Returns the best (parameter index, target entry) pair.
fn best_release(
    factor: &Matrix,
    params: &[f64],
    gram: &Matrix,
    mttkrp: &Matrix,
) -> Option<(usize, f64)> {
    let rows = factor.rows();
    let rank = factor.cols();
    let fv = factor.matmul(gram).sub(mttkrp);
    let freeze_below = FREEZE_RELATIVE * params.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let mut best: Option<(usize, f64, f64)> = None;
    for i in 0..rows {
        for r in 0..rank {
            let c = r * rows + i;
            if params[c].abs() > freeze_below {
                continue;
            }
            let slope = fv.get(i, r);
            let curvature = gram.get(r, r);
            if slope >= 0.0 || curvature <= 0.0 {
                continue;
            }
            let gain = slope * slope / curvature;
            let target = factor.get(i, r) - slope / curvature;
            if best.map(|(_, _, g)| gain > g).unwrap_or(true) {
                best = Some((c, target, gain));
            }
        }
    }
    best.map(|(c, target, _)| (c, target))
}

/// One accepted trust-region step on mode `mode`, or `None` when the
/// subproblem is converged/stagnant. On acceptance the model factor and the
/// parameter vector are updated in place and the new objective is returned.
fn trust_region_mode_step(
    model: &mut KruskalModel,
    params: &mut Vec<f64>,
    unfolded: &Matrix,
    mode: usize,
    tensor_norm: f64,
    radius: &mut f64,
    opts: &SolverOptions,
) -> Option<f64> {
    let rows = unfolded.rows();
    let rank = opts.rank;
    let v = coproduct_matrix(model, mode).expect("validated shapes");
    let gram = v.gram();
    let mttkrp = unfolded.matmul(&v);
    let factor = model.factor(mode).clone();

    let objective_old = objective_against(&factor, &v, unfolded);
    let direction = gn_direction(&factor, params, &gram, &mttkrp, opts.nonnegative);
    let full_norm = math::norm(&direction.step);

    // Reductions below measurement precision of the objective cannot be
    // certified; treat them as stagnation.
    let stagnation_floor =
        |current: f64| STAGNATION_GUARD * f64::EPSILON * tensor_norm * math::sqrt(2.0 * current);

    let mut accepted_objective: Option<f64> = None;
    if full_norm > 0.0 && full_norm.is_finite() {
        let floor = stagnation_floor(objective_old);
        let mut state = SolverState::new(params.clone(), *radius);
        state.residual_norm = math::sqrt(2.0 * objective_old);
        for _attempt in 0..MAX_REJECTS {
            // The Gauss-Newton direction is fixed at the expansion point; the
            // radius only rescales it to the boundary.
            let scale = (state.radius / full_norm).min(1.0);
            let step: Vec<f64> = direction.step.iter().map(|&x| x * scale).collect();
            let predicted = -(scale * direction.gradient_dot_step)
                - 0.5 * scale * scale * direction.j_step_norm_sq;

            let (accepted, candidate_objective, next_state) = if predicted <= 0.0 {
                let (_, next) = trust_region_accept(&state, &step, 0.0, predicted, &opts.trust);
                (false, 0.0, next)
            } else {
                let trial: Vec<f64> =
                    params.iter().zip(step.iter()).map(|(a, p)| a + p).collect();
                let trial_factor = factor_from_params(rows, rank, &trial, opts.nonnegative);
                let objective_new = objective_against(&trial_factor, &v, unfolded);
                let actual = objective_old - objective_new;
                let (mut ok, mut next) =
                    trust_region_accept(&state, &step, actual, predicted, &opts.trust);
                if ok && actual <= floor {
                    // Accepted by trustworthiness but unmeasurably small:
                    // veto as stagnation so recorded objectives stay
                    // monotone.
                    ok = false;
                    next = state.clone();
                    next.radius = state.radius * opts.trust.shrink;
                }
                if ok {
                    next.residual_norm = math::sqrt(2.0 * objective_new.max(0.0));
                    *model.factor_mut(mode) = trial_factor;
                    *params = trial;
                }
                (ok, objective_new, next)
            };
            state = next_state;
            if accepted {
                accepted_objective = Some(candidate_objective);
                break;
            }
            if state.radius < 1e-13 * (1.0 + math::norm(params)) {
                break;
            }
        }
        if accepted_objective.is_some() {
            *radius = state.radius;
        } else {
            // Failed subproblem: the local model goes stale once the other
            // modes move, so hand the next sweep a fresh radius rather than
            // a collapsed one.
            *radius = opts.trust.initial_radius;
        }
    }

    // Frozen coordinates never move under the first-order step; give the
    // most promising one its exact one-dimensional minimizer, gated by the
    // same measurable-descent rule.
    if opts.nonnegative {
        let current_factor = model.factor(mode).clone();
        let current_objective = accepted_objective.unwrap_or(objective_old);
        if let Some((c, target)) = best_release(&current_factor, params, &gram, &mttkrp) {
            if target > 0.0 {
                let mut trial = params.clone();
                trial[c] = math::sqrt(target);
                let trial_factor = factor_from_params(rows, rank, &trial, true);
                let objective_new = objective_against(&trial_factor, &v, unfolded);
                if current_objective - objective_new > stagnation_floor(current_objective) {
                    *model.factor_mut(mode) = trial_factor;
                    *params = trial;
                    return Some(objective_new);
                }
            }
        }
    }
    accepted_objective
}
