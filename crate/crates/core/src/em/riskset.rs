//! Posterior-weighted Cox-type objectives for the six hazard-regression
//! blocks, and the closed-form Breslow-type hazard update.
//!
//! For a block with own weights `q_j`, fixed companion exposure `b_j` and
//! design rows `d_j`, the profiled objective is
//!
//! ```text
//! f(η) = Σ_i δ_i q_i ηᵀd_i − Σ_k n_k log Σ_{j: t_j ≥ t_k} (q_j e^{ηᵀd_j} + b_j)
//! ```
//!
//! where `k` runs over distinct event times with multiplicities `n_k`. Its
//! gradient is the block's weighted score equation.

use crate::em::design::{JumpGrid, RiskFamily};
use crate::em::newton::Evaluation;
use crate::linalg::SymMatrix;
use crate::scalar::{clamp_lp, dot, Scalar};

#[derive(Debug, Clone)]
pub(crate) struct BlockSetup<T> {
    pub own: Vec<T>,
    pub other: Vec<T>,
    /// `Σ_i δ_i q_i d_i`.
    pub linear: Vec<T>,
}

impl<T: Scalar> BlockSetup<T> {
    pub fn new(family: &RiskFamily<T>, rows: &[Vec<T>], own: Vec<T>, other: Vec<T>) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut linear = vec![T::zero(); dim];
        for (i, row) in rows.iter().enumerate() {
            if family.events[i] && own[i] != T::zero() {
                for (l, &v) in linear.iter_mut().zip(row) {
                    *l += own[i] * v;
                }
            }
        }
        Self { own, other, linear }
    }

    /// True when no member carries own weight, so the score vanishes.
    pub fn is_void(&self, family: &RiskFamily<T>) -> bool {
        family.order.iter().all(|&j| self.own[j] == T::zero())
    }
}

pub(crate) fn evaluate<T: Scalar>(
    family: &RiskFamily<T>,
    grid: &JumpGrid<T>,
    rows: &[Vec<T>],
    setup: &BlockSetup<T>,
    eta: &[T],
) -> Evaluation<T> {
    let dim = eta.len();
    let mut value = dot(eta, &setup.linear);
    let mut score = setup.linear.clone();
    let mut jac = SymMatrix::zeros(dim);

    let mut s0 = T::zero();
    let mut s1 = vec![T::zero(); dim];
    let mut s2 = vec![T::zero(); dim * dim];
    let mut ptr = 0;
    for k in (0..grid.len()).rev() {
        let tk = grid.times[k];
        while ptr < family.order.len() && family.times[family.order[ptr]] >= tk {
            let j = family.order[ptr];
            ptr += 1;
            let q = setup.own[j];
            s0 += setup.other[j];
            if q == T::zero() {
                continue;
            }
            let row = &rows[j];
            let e = q * clamp_lp(dot(eta, row)).0.exp();
            s0 += e;
            for a in 0..dim {
                let ea = e * row[a];
                s1[a] += ea;
                for b in a..dim {
                    s2[a * dim + b] += ea * row[b];
                }
            }
        }
        let nk = grid.counts[k];
        if !(s0 > T::zero()) {
            value = T::neg_infinity();
            continue;
        }
        value -= nk * s0.ln();
        for a in 0..dim {
            let m_a = s1[a] / s0;
            score[a] -= nk * m_a;
            for b in a..dim {
                let v = nk * (s2[a * dim + b] / s0 - m_a * s1[b] / s0);
                jac.add(a, b, -v);
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            let v = jac.get(b, a);
            jac.add(a, b, v);
        }
    }
    Evaluation {
        value,
        score,
        jacobian: jac,
    }
}

/// `λ_k = n_k / Σ_{j: t_j ≥ t_k} S_j`. Returns the first jump time whose
/// weighted risk set is empty as the error payload.
pub(crate) fn breslow_jumps<T: Scalar>(
    family: &RiskFamily<T>,
    grid: &JumpGrid<T>,
    exposure: &[T],
) -> Result<Vec<T>, T> {
    let denom = family.at_risk_sums(grid, exposure);
    denom
        .iter()
        .zip(&grid.counts)
        .zip(&grid.times)
        .map(|((&d, &n), &t)| {
            let l = n / d;
            if d > T::zero() && l.is_finite() {
                Ok(l)
            } else {
                Err(t)
            }
        })
        .collect()
}
