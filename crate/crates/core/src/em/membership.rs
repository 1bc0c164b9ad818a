//! Weighted multinomial-logistic objective for the membership coefficients,
//! with stratum 3 as reference. The argument is `(α₁, α₂)` concatenated.

use crate::em::newton::Evaluation;
use crate::linalg::SymMatrix;
use crate::model::log_weights_unchecked;
use crate::scalar::Scalar;

/// `Σ_i Σ_u p̂_iu log w_u(x_i; α)` with gradient and Hessian.
pub(crate) fn evaluate<T: Scalar>(xt_rows: &[Vec<T>], post: &[[T; 3]], alpha: &[T]) -> Evaluation<T> {
    let k = alpha.len() / 2;
    let (a1, a2) = alpha.split_at(k);
    let dim = 2 * k;
    let mut value = T::zero();
    let mut score = vec![T::zero(); dim];
    let mut jac = SymMatrix::zeros(dim);
    for (row, p) in xt_rows.iter().zip(post) {
        let x = &row[1..];
        let lw = log_weights_unchecked(x, a1, a2);
        for u in 0..3 {
            if p[u] != T::zero() {
                value += p[u] * lw[u];
            }
        }
        let w = [lw[0].exp(), lw[1].exp()];
        for u in 0..2 {
            let r = p[u] - w[u];
            for a in 0..k {
                score[u * k + a] += r * row[a];
            }
        }
        // −Σ (diag(w) − w wᵀ) ⊗ x̃ x̃ᵀ
        let c = [
            [w[0] * (T::one() - w[0]), -w[0] * w[1]],
            [-w[1] * w[0], w[1] * (T::one() - w[1])],
        ];
        for u in 0..2 {
            for v in 0..2 {
                let cuv = c[u][v];
                for a in 0..k {
                    let ca = cuv * row[a];
                    for b in 0..k {
                        jac.add(u * k + a, v * k + b, -ca * row[b]);
                    }
                }
            }
        }
    }
    Evaluation {
        value,
        score,
        jacobian: jac,
    }
}
