//! Damped Newton iteration with Armijo backtracking and a log-barrier LP solver, for
//! problems in at most four unknowns.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;

/// Up to four unknowns; unused trailing coordinates stay zero.
pub type Vector = [f64; 4];

#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: [Vector; 4],
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Stop once `|∇f| ≤ gradient_tolerance · (1 + |f|)`.
    pub gradient_tolerance: f64,
    /// Also stop once the Newton decrement `λ²/2` drops below this value (0 disables).
    pub decrement_tolerance: f64,
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iterations: 200, gradient_tolerance: 1e-10, decrement_tolerance: 0.0, armijo: 1e-4, shrink: 0.5 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonResult {
    pub point: Vector,
    pub evaluation: Evaluation,
    pub iterations: usize,
}

fn norm(v: &Vector, k: usize) -> f64 {
    libm::sqrt(v[..k].iter().map(|x| x * x).sum())
}

/// Minimizes a smooth strictly convex `objective` over its open domain in `R^k`.
///
/// `objective` returns `None` outside the domain; backtracking then shrinks the step,
/// so iterates never leave the domain.
pub fn newton_minimize<F>(k: usize, start: Vector, objective: F, options: &NewtonOptions) -> Result<NewtonResult>
where
    F: Fn(&Vector) -> Option<Evaluation>,
{
    let mut x = start;
    let mut current = objective(&x).ok_or(Error::OptimizationFailure("start point outside the domain"))?;
    for iteration in 0..options.max_iterations {
        let gnorm = norm(&current.gradient, k);
        if gnorm <= options.gradient_tolerance * (1.0 + current.value.abs()) {
            return Ok(NewtonResult { point: x, evaluation: current, iterations: iteration });
        }
        let neg_grad = {
            let mut g = [0.0; 4];
            for i in 0..k {
                g[i] = -current.gradient[i];
            }
            g
        };
        let direction = cholesky_solve(&current.hessian, &neg_grad, k)
            .ok_or(Error::OptimizationFailure("Hessian is not positive definite"))?;
        let slope: f64 = (0..k).map(|i| current.gradient[i] * direction[i]).sum();
        // A decrement at roundoff level means the iterate is optimal to working precision,
        // even when quadrature noise keeps the gradient above its tolerance.
        let floor = 1e-20 * (1.0 + current.value.abs());
        if -0.5 * slope <= options.decrement_tolerance.max(floor) {
            return Ok(NewtonResult { point: x, evaluation: current, iterations: iteration });
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial = x;
            for i in 0..k {
                trial[i] += step * direction[i];
            }
            if let Some(eval) = objective(&trial) {
                // Slack for roundoff in the objective, else the full step near the optimum is
                // rejected and backtracking creeps along on noise.
                let noise = 16.0 * f64::EPSILON * (1.0 + current.value.abs());
                if eval.value <= current.value + options.armijo * step * slope + noise {
                    accepted = Some((trial, eval));
                    break;
                }
            }
            step *= options.shrink;
        }
        match accepted {
            Some((trial, eval)) => {
                x = trial;
                current = eval;
            }
            // Newton decrement at roundoff level: the point is optimal to working precision.
            None if -slope <= 64.0 * f64::EPSILON * (1.0 + current.value.abs()) => {
                return Ok(NewtonResult { point: x, evaluation: current, iterations: iteration });
            }
            None => return Err(Error::LineSearchFailure { iterations: iteration }),
        }
    }
    Err(Error::OptimizationFailure("Newton iteration limit reached"))
}

/// One linear inequality `a·z ≤ b`.
#[derive(Clone, Copy, Debug)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

/// Minimizes `cost·z` subject to the half-spaces by the log-barrier method, starting
/// from a strictly feasible `start`. Stops when the duality-gap bound `m/t` falls
/// below `gap_tolerance`. `scale` is the expected size of the objective range and
/// sets the initial barrier weight.
///
/// Centering uses the damped Newton step `1/(1 + λ)` of self-concordant barriers, which
/// needs no objective comparisons and so stays reliable when `t` is large.
pub fn barrier_lp(
    k: usize,
    cost: Vector,
    constraints: &[Halfspace],
    start: Vector,
    scale: f64,
    gap_tolerance: f64,
) -> Result<Vector> {
    let m = constraints.len() as f64;
    let feasible = |z: &Vector| constraints.iter().all(|h| h.offset - dot(&h.normal, z, k) > 0.0);
    if !feasible(&start) {
        return Err(Error::OptimizationFailure("barrier start is not strictly feasible"));
    }
    let mut z = start;
    let mut t = m / scale;
    loop {
        let mut centered = false;
        for _ in 0..100 {
            let mut gradient = [0.0; 4];
            let mut hessian = [[0.0; 4]; 4];
            for i in 0..k {
                gradient[i] = t * cost[i];
            }
            for h in constraints {
                let inv = 1.0 / (h.offset - dot(&h.normal, &z, k));
                for i in 0..k {
                    gradient[i] += h.normal[i] * inv;
                    for j in 0..k {
                        hessian[i][j] += h.normal[i] * h.normal[j] * inv * inv;
                    }
                }
            }
            let mut neg = [0.0; 4];
            for i in 0..k {
                neg[i] = -gradient[i];
            }
            let direction = regularized_solve(&hessian, &neg, k)
                .ok_or(Error::OptimizationFailure("barrier Hessian is singular"))?;
            let decrement_sq = -dot(&gradient, &direction, k);
            if decrement_sq <= 1e-10 {
                centered = true;
                break;
            }
            let lambda = libm::sqrt(decrement_sq);
            let damped = 1.0 / (1.0 + lambda);
            // Far from the central path the damped step is tiny; try longer steps against
            // the barrier value first. Near the path it is the safe choice.
            let mut trial = z;
            let mut found = false;
            if lambda >= 0.25 {
                let base = barrier_value(t, &cost, constraints, &z, k);
                let mut step = 1.0;
                while step > damped {
                    for i in 0..k {
                        trial[i] = z[i] + step * direction[i];
                    }
                    if feasible(&trial) && barrier_value(t, &cost, constraints, &trial, k) <= base - 0.25 * step * decrement_sq {
                        found = true;
                        break;
                    }
                    step *= 0.5;
                }
            }
            if !found {
                let mut step = if lambda < 0.25 { 1.0 } else { damped };
                for _ in 0..60 {
                    for i in 0..k {
                        trial[i] = z[i] + step * direction[i];
                    }
                    if feasible(&trial) {
                        break;
                    }
                    step *= 0.5;
                }
                if !feasible(&trial) {
                    return Err(Error::LineSearchFailure { iterations: 60 });
                }
            }
            z = trial;
        }
        // Past the roundoff floor of the slacks centering stalls without harm.
        if !centered && m / t > 1e4 * gap_tolerance {
            return Err(Error::OptimizationFailure("barrier centering did not converge"));
        }
        if m / t < gap_tolerance {
            return Ok(z);
        }
        t *= 8.0;
    }
}

/// Cholesky solve with a growing diagonal shift. Degenerate LP vertices (a circumradius
/// attained at two antipodal nodes, say) leave the barrier Hessian rank deficient
/// to working precision near the optimum.
fn regularized_solve(a: &[Vector; 4], b: &Vector, k: usize) -> Option<Vector> {
    if let Some(x) = cholesky_solve(a, b, k) {
        return Some(x);
    }
    let trace: f64 = (0..k).map(|i| a[i][i]).sum();
    let mut shift = 1e-14 * trace.max(f64::MIN_POSITIVE);
    for _ in 0..12 {
        let mut shifted = *a;
        for i in 0..k {
            shifted[i][i] += shift;
        }
        if let Some(x) = cholesky_solve(&shifted, b, k) {
            return Some(x);
        }
        shift *= 10.0;
    }
    None
}

fn barrier_value(t: f64, cost: &Vector, constraints: &[Halfspace], z: &Vector, k: usize) -> f64 {
    t * dot(cost, z, k) - constraints.iter().map(|h| libm::log(h.offset - dot(&h.normal, z, k))).sum::<f64>()
}

fn dot(a: &Vector, b: &Vector, k: usize) -> f64 {
    (0..k).map(|i| a[i] * b[i]).sum()
}

/// Convenience for building constraint lists.
pub fn halfspaces(iter: impl Iterator<Item = (Vector, f64)>) -> Vec<Halfspace> {
    iter.map(|(normal, offset)| Halfspace { normal, offset }).collect()
}
