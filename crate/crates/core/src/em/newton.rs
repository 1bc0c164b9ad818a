//! Damped Newton ascent for the concave M-step sub-problems.

use crate::error::{Error, Result};
use crate::linalg::{norm, SymMatrix};
use crate::scalar::Scalar;

/// Objective value, its gradient (the score) and the Jacobian of the score.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub value: T,
    pub score: Vec<T>,
    pub jacobian: SymMatrix<T>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonSettings<T> {
    pub tol: T,
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Take one (damped) step and stop, without requiring convergence.
    pub single_step: bool,
}

/// Maximizes a concave objective from `start`. Stops once the score norm is
/// below `tol`, or after a final full step once the predicted gain of a
/// Newton step is below the rounding level of the objective. Each
/// line-searched step does not decrease the objective beyond rounding.
pub(crate) fn maximize<T: Scalar>(
    eval: impl Fn(&[T]) -> Evaluation<T>,
    start: &[T],
    cfg: NewtonSettings<T>,
    context: &str,
) -> Result<Vec<T>> {
    let mut x = start.to_vec();
    let mut cur = eval(&x);
    if !cur.value.is_finite() {
        return Err(Error::SolverFailure {
            context: context.to_string(),
            residual: f64::INFINITY,
        });
    }
    let slack = |f: T| T::lit(64.0) * T::epsilon() * (f.abs() + T::one());
    for it in 0..=cfg.max_iters {
        let g = norm(&cur.score);
        if g < cfg.tol {
            return Ok(x);
        }
        let step = newton_step(&cur).ok_or_else(|| Error::RankDeficient(context.to_string()))?;
        let gain = T::lit(0.5) * cur.score.iter().zip(&step).map(|(&a, &b)| a * b).sum::<T>();
        if gain <= slack(cur.value) {
            // The line search cannot see a gain this small, but the quadratic
            // model still holds: take the full step and stop.
            let cand: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a + s).collect();
            return Ok(if eval(&cand).value.is_finite() { cand } else { x });
        }
        if it == cfg.max_iters {
            return Err(Error::SolverFailure {
                context: context.to_string(),
                residual: g.as_f64(),
            });
        }
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a + scale * s).collect();
            let next = eval(&cand);
            if next.value.is_finite() && next.value >= cur.value - slack(cur.value) {
                accepted = Some((cand, next));
                break;
            }
            scale *= T::lit(0.5);
        }
        match accepted {
            Some((cand, next)) => {
                x = cand;
                cur = next;
            }
            None => {
                return Err(Error::SolverFailure {
                    context: context.to_string(),
                    residual: g.as_f64(),
                })
            }
        }
        if cfg.single_step {
            return Ok(x);
        }
    }
    unreachable!("loop returns on its last pass")
}

/// Solves `-J step = score` over the coordinates that the objective depends
/// on. A coordinate with an all-zero Jacobian row and zero score (an
/// all-zero covariate column, for instance) is left where it is.
fn newton_step<T: Scalar>(cur: &Evaluation<T>) -> Option<Vec<T>> {
    let n = cur.score.len();
    let active: Vec<usize> = (0..n)
        .filter(|&i| cur.score[i] != T::zero() || (0..n).any(|j| cur.jacobian.get(i, j) != T::zero()))
        .collect();
    let mut neg = SymMatrix::zeros(active.len());
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            neg.add(a, b, -cur.jacobian.get(i, j));
        }
    }
    let rhs: Vec<T> = active.iter().map(|&i| cur.score[i]).collect();
    let sol = neg.cholesky_solve(&rhs)?;
    let mut step = vec![T::zero(); n];
    for (&i, v) in active.iter().zip(sol) {
        step[i] = v;
    }
    Some(step)
}
