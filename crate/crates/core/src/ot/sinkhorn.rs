//! Entropy-regularized transport by alternating marginal scaling.
//!
//! Well-conditioned problems use the plain scaling iteration on
//! `K = exp(−C/ε)`. When `max(C)/ε` exceeds [`LOG_DOMAIN_RATIO`] the kernel
//! would underflow, so the iteration runs on dual potentials in the log
//! domain instead, warm-started through a geometric ε schedule that ends at
//! the requested ε.
//!
//! At small ε the scaling iteration slows to a sublinear crawl once the plan
//! is close to a permutation. For problems with at most
//! [`NEWTON_MAX_NODES`] points in total, both paths therefore hand over to
//! damped Newton steps on the dual potentials once the marginal error is
//! below `1e-4`, and fall back to scaling if Newton stalls. Newton converges
//! to the same regularized plan.

use super::{ground_cost, OtError, PointCloud, Result, TransportPlan};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Cost-to-ε ratio above which the log-domain path is used.
pub const LOG_DOMAIN_RATIO: f64 = 500.0;

/// Ratio `max(C)/ε` the ε schedule starts from in the log domain.
const SCHEDULE_START_RATIO: f64 = 50.0;
/// Marginal error accepted before moving to the next ε stage.
const STAGE_TOL: f64 = 1e-6;
const STAGE_MAX_ITERS: usize = 500;

/// Largest `m + n` for which dense Newton polishing is attempted.
pub const NEWTON_MAX_NODES: usize = 1024;
/// Marginal error at which scaling iterations hand over to Newton.
const NEWTON_SWITCH: f64 = 1e-4;
const NEWTON_MAX_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions<T> {
    /// Absolute regularization strength.
    pub epsilon: T,
    pub max_iters: usize,
    /// L1 marginal error at which the iteration stops.
    pub tol: T,
}

impl<T: Scalar> SinkhornOptions<T> {
    pub fn new(epsilon: T) -> Self {
        Self { epsilon, max_iters: 10_000, tol: T::lit(1e-9) }
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornResult<T> {
    /// Plan of the regularized problem; `plan.cost` is `<C, P>` without the
    /// entropy term.
    pub plan: TransportPlan<T>,
    pub converged: bool,
    pub iterations: usize,
    pub marginal_error: T,
    pub log_domain: bool,
}

pub fn emd_sinkhorn<T: Scalar>(a: &PointCloud<T>, b: &PointCloud<T>, opts: &SinkhornOptions<T>) -> Result<SinkhornResult<T>> {
    if !(opts.epsilon > T::zero()) || !opts.epsilon.is_finite() {
        return Err(OtError::InvalidArgument(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    if !(opts.tol > T::zero()) {
        return Err(OtError::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iters == 0 {
        return Err(OtError::InvalidArgument("max_iters must be at least 1".into()));
    }
    let cost = ground_cost(a, b)?;
    let ratio = cost.max_value() / opts.epsilon;
    if ratio > T::lit(LOG_DOMAIN_RATIO) {
        log_domain(a.weights(), b.weights(), cost, opts)
    } else {
        scaling(a.weights(), b.weights(), cost, opts)
    }
}

fn underflow<T: Scalar>(eps: T, cost: &Matrix<T>) -> OtError {
    OtError::NumericalUnderflow { epsilon: eps.as_f64(), cost_scale: cost.max_value().as_f64() }
}

fn scaling<T: Scalar>(wa: &[T], wb: &[T], cost: Matrix<T>, opts: &SinkhornOptions<T>) -> Result<SinkhornResult<T>> {
    let (m, n) = cost.shape();
    let eps = opts.epsilon;
    let kernel = cost.map(|c| (-c / eps).exp());
    let mut state = ScalingState {
        u: vec![T::one(); m],
        v: vec![T::one(); n],
        kv: vec![T::zero(); m],
        ktu: vec![T::zero(); n],
        iterations: 0,
        err: T::infinity(),
    };

    let use_newton = m + n <= NEWTON_MAX_NODES;
    let handover = if use_newton { T::lit(NEWTON_SWITCH) } else { T::zero() };
    state.run(&kernel, &cost, eps, wa, wb, opts.tol.max(handover), opts.max_iters)?;
    if state.err > opts.tol && use_newton {
        let mut f: Vec<T> = state.u.iter().map(|&x| eps * x.ln()).collect();
        let mut g: Vec<T> = state.v.iter().map(|&x| eps * x.ln()).collect();
        let cap = (state.iterations + NEWTON_MAX_STEPS).min(opts.max_iters);
        newton_polish(&cost, eps, (wa, wb), (&mut f, &mut g), opts.tol, cap, &mut state.iterations, &mut state.err);
        state.u = f.iter().map(|&x| (x / eps).exp()).collect();
        state.v = g.iter().map(|&x| (x / eps).exp()).collect();
        state.err = scaling_error(&kernel, &state.u, &state.v, wa, wb, &mut state.kv, &mut state.ktu);
    }
    if state.err > opts.tol {
        state.run(&kernel, &cost, eps, wa, wb, opts.tol, opts.max_iters)?;
    }
    let ScalingState { u, v, iterations, err, .. } = state;
    let coupling = Matrix::from_fn(m, n, |i, j| u[i] * kernel[(i, j)] * v[j]);
    Ok(SinkhornResult {
        plan: TransportPlan::new(coupling, cost),
        converged: err <= opts.tol,
        iterations,
        marginal_error: err,
        log_domain: false,
    })
}

struct ScalingState<T> {
    u: Vec<T>,
    v: Vec<T>,
    kv: Vec<T>,
    ktu: Vec<T>,
    iterations: usize,
    err: T,
}

impl<T: Scalar> ScalingState<T> {
    #[allow(clippy::too_many_arguments)]
    fn run(&mut self, kernel: &Matrix<T>, cost: &Matrix<T>, eps: T, wa: &[T], wb: &[T], tol: T, cap: usize) -> Result<()> {
        while self.iterations < cap {
            self.iterations += 1;
            mat_vec(kernel, &self.v, &mut self.kv);
            for i in 0..wa.len() {
                if !(self.kv[i] > T::zero()) || !self.kv[i].is_finite() {
                    return Err(underflow(eps, cost));
                }
                self.u[i] = wa[i] / self.kv[i];
            }
            mat_t_vec(kernel, &self.u, &mut self.ktu);
            for j in 0..wb.len() {
                if !(self.ktu[j] > T::zero()) || !self.ktu[j].is_finite() {
                    return Err(underflow(eps, cost));
                }
                self.v[j] = wb[j] / self.ktu[j];
            }
            self.err = scaling_error(kernel, &self.u, &self.v, wa, wb, &mut self.kv, &mut self.ktu);
            if !self.err.is_finite() {
                return Err(underflow(eps, cost));
            }
            if self.err <= tol {
                break;
            }
        }
        Ok(())
    }
}

fn mat_vec<T: Scalar>(k: &Matrix<T>, v: &[T], out: &mut [T]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = k.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum();
    }
}

fn mat_t_vec<T: Scalar>(k: &Matrix<T>, u: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for (i, &ui) in u.iter().enumerate() {
        for (o, &kij) in out.iter_mut().zip(k.row(i)) {
            *o += kij * ui;
        }
    }
}

fn scaling_error<T: Scalar>(k: &Matrix<T>, u: &[T], v: &[T], wa: &[T], wb: &[T], kv: &mut [T], ktu: &mut [T]) -> T {
    mat_vec(k, v, kv);
    mat_t_vec(k, u, ktu);
    let rows: T = (0..wa.len()).map(|i| (u[i] * kv[i] - wa[i]).abs()).sum();
    let cols: T = (0..wb.len()).map(|j| (v[j] * ktu[j] - wb[j]).abs()).sum();
    rows + cols
}

fn log_domain<T: Scalar>(wa: &[T], wb: &[T], cost: Matrix<T>, opts: &SinkhornOptions<T>) -> Result<SinkhornResult<T>> {
    let (m, n) = cost.shape();
    let log_a: Vec<T> = wa.iter().map(|w| w.ln()).collect();
    let log_b: Vec<T> = wb.iter().map(|w| w.ln()).collect();
    let mut f = vec![T::zero(); m];
    let mut g = vec![T::zero(); n];

    let mut schedule = Vec::new();
    let mut stage_eps = opts.epsilon;
    let start = cost.max_value() / T::lit(SCHEDULE_START_RATIO);
    while stage_eps < start {
        schedule.push(stage_eps);
        stage_eps = stage_eps * T::lit(2.0);
    }
    schedule.push(stage_eps);
    schedule.reverse();

    let mut iterations = 0;
    let mut err = T::infinity();
    let last = schedule.len() - 1;
    let use_newton = m + n <= NEWTON_MAX_NODES;
    for (stage, &eps) in schedule.iter().enumerate() {
        let (stage_tol, stage_cap) = if stage == last {
            let handover = if use_newton { T::lit(NEWTON_SWITCH) } else { T::zero() };
            (opts.tol.max(handover), opts.max_iters)
        } else {
            (T::lit(STAGE_TOL).max(opts.tol), (iterations + STAGE_MAX_ITERS).min(opts.max_iters))
        };
        sinkhorn_until(&cost, eps, (&log_a, &log_b), (wa, wb), (&mut f, &mut g), stage_tol, stage_cap, &mut iterations, &mut err)?;
    }
    if err > opts.tol && use_newton {
        let cap = (iterations + NEWTON_MAX_STEPS).min(opts.max_iters);
        newton_polish(&cost, opts.epsilon, (wa, wb), (&mut f, &mut g), opts.tol, cap, &mut iterations, &mut err);
    }
    if err > opts.tol {
        sinkhorn_until(
            &cost,
            opts.epsilon,
            (&log_a, &log_b),
            (wa, wb),
            (&mut f, &mut g),
            opts.tol,
            opts.max_iters,
            &mut iterations,
            &mut err,
        )?;
    }
    let eps = opts.epsilon;
    let coupling = Matrix::from_fn(m, n, |i, j| ((f[i] + g[j] - cost[(i, j)]) / eps).exp());
    Ok(SinkhornResult {
        plan: TransportPlan::new(coupling, cost),
        converged: err <= opts.tol,
        iterations,
        marginal_error: err,
        log_domain: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn sinkhorn_until<T: Scalar>(
    cost: &Matrix<T>,
    eps: T,
    (log_a, log_b): (&[T], &[T]),
    (wa, wb): (&[T], &[T]),
    (f, g): (&mut [T], &mut [T]),
    tol: T,
    cap: usize,
    iterations: &mut usize,
    err: &mut T,
) -> Result<()> {
    while *iterations < cap {
        *iterations += 1;
        log_update(cost, eps, log_a, log_b, f, g);
        if f.iter().chain(g.iter()).any(|x| !x.is_finite()) {
            return Err(underflow(eps, cost));
        }
        *err = log_error(cost, eps, f, g, wa, wb);
        if *err <= tol {
            break;
        }
    }
    Ok(())
}

/// Concave dual objective `<f, a> + <g, b> − ε Σ exp((f_i + g_j − C_ij)/ε)`.
fn dual_objective<T: Scalar>(cost: &Matrix<T>, eps: T, f: &[T], g: &[T], wa: &[T], wb: &[T]) -> T {
    let (m, n) = cost.shape();
    let mut mass = T::zero();
    for i in 0..m {
        for (j, &c) in cost.row(i).iter().enumerate().take(n) {
            mass += ((f[i] + g[j] - c) / eps).exp();
        }
    }
    let lin: T = f.iter().zip(wa).map(|(&x, &w)| x * w).sum::<T>() + g.iter().zip(wb).map(|(&x, &w)| x * w).sum::<T>();
    lin - eps * mass
}

/// Damped Newton ascent on the dual. The last column potential is pinned to
/// remove the `(f + t, g − t)` gauge freedom. Stops early if the line
/// search stalls, leaving the potentials at their best value.
#[allow(clippy::too_many_arguments)]
fn newton_polish<T: Scalar>(
    cost: &Matrix<T>,
    eps: T,
    (wa, wb): (&[T], &[T]),
    (f, g): (&mut [T], &mut [T]),
    tol: T,
    cap: usize,
    iterations: &mut usize,
    err: &mut T,
) {
    let (m, n) = cost.shape();
    let size = m + n - 1;
    let mut trial_f = vec![T::zero(); m];
    let mut trial_g = vec![T::zero(); n];
    while *iterations < cap && *err > tol {
        let plan = Matrix::from_fn(m, n, |i, j| ((f[i] + g[j] - cost[(i, j)]) / eps).exp());
        let rows = plan.row_sums();
        let cols = plan.col_sums();
        let grad: Vec<T> = (0..m).map(|i| wa[i] - rows[i]).chain((0..n - 1).map(|j| wb[j] - cols[j])).collect();

        let mut hess = Matrix::zeros(size, size);
        for i in 0..m {
            hess[(i, i)] = rows[i];
            for j in 0..n - 1 {
                hess[(i, m + j)] = plan[(i, j)];
                hess[(m + j, i)] = plan[(i, j)];
            }
        }
        for j in 0..n - 1 {
            hess[(m + j, m + j)] = cols[j];
        }
        let rhs: Vec<T> = grad.iter().map(|&x| x * eps).collect();
        let Some(step) = solve_spd(&hess, &rhs) else { return };

        let slope: T = grad.iter().zip(&step).map(|(&a, &b)| a * b).sum();
        let base = dual_objective(cost, eps, f, g, wa, wb);
        let mut t = T::one();
        let accepted = loop {
            for i in 0..m {
                trial_f[i] = f[i] + t * step[i];
            }
            for j in 0..n {
                trial_g[j] = if j + 1 < n { g[j] + t * step[m + j] } else { g[j] };
            }
            let value = dual_objective(cost, eps, &trial_f, &trial_g, wa, wb);
            if value.is_finite() && value >= base + T::lit(1e-4) * t * slope {
                break true;
            }
            t = t * T::lit(0.5);
            if t < T::lit(1e-10) {
                break false;
            }
        };
        if !accepted {
            return;
        }
        *iterations += 1;
        f.copy_from_slice(&trial_f);
        g.copy_from_slice(&trial_g);
        *err = log_error(cost, eps, f, g, wa, wb);
    }
}

/// Cholesky solve of a symmetric positive semi-definite system, adding a
/// growing diagonal ridge if the factorization breaks down.
fn solve_spd<T: Scalar>(a: &Matrix<T>, rhs: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)]).fold(T::zero(), T::max);
    let mut ridge = T::zero();
    for _ in 0..12 {
        if let Some(x) = cholesky(a, ridge, rhs) {
            return Some(x);
        }
        ridge = if ridge == T::zero() { T::lit(1e-14) * scale } else { ridge * T::lit(10.0) };
    }
    None
}

fn cholesky<T: Scalar>(a: &Matrix<T>, ridge: T, rhs: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + ridge;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

fn log_update<T: Scalar>(cost: &Matrix<T>, eps: T, log_a: &[T], log_b: &[T], f: &mut [T], g: &mut [T]) {
    let (m, n) = cost.shape();
    for i in 0..m {
        let row = cost.row(i);
        let mx = (0..n).map(|j| g[j] - row[j]).fold(T::neg_infinity(), T::max);
        let s: T = (0..n).map(|j| ((g[j] - row[j] - mx) / eps).exp()).sum();
        f[i] = eps * log_a[i] - mx - eps * s.ln();
    }
    let mut mx = vec![T::neg_infinity(); n];
    for i in 0..m {
        for (j, &c) in cost.row(i).iter().enumerate() {
            mx[j] = mx[j].max(f[i] - c);
        }
    }
    let mut s = vec![T::zero(); n];
    for i in 0..m {
        for (j, &c) in cost.row(i).iter().enumerate() {
            s[j] += ((f[i] - c - mx[j]) / eps).exp();
        }
    }
    for j in 0..n {
        g[j] = eps * log_b[j] - mx[j] - eps * s[j].ln();
    }
}

fn log_error<T: Scalar>(cost: &Matrix<T>, eps: T, f: &[T], g: &[T], wa: &[T], wb: &[T]) -> T {
    let (m, n) = cost.shape();
    let mut cols = vec![T::zero(); n];
    let mut err = T::zero();
    for i in 0..m {
        let mut r = T::zero();
        for (j, &c) in cost.row(i).iter().enumerate() {
            let p = ((f[i] + g[j] - c) / eps).exp();
            r += p;
            cols[j] += p;
        }
        err += (r - wa[i]).abs();
    }
    err + cols.iter().zip(wb).map(|(&c, &w)| (c - w).abs()).sum::<T>()
}
