"""Linear support vector regression with squared epsilon-insensitive loss.

Minimizes  0.5 ||w||^2 + C * sum_i max(0, |w.x_i + b - y_i| - epsilon)^2
with the bias b unregularized.  The solver works on the dual: one variable
beta_i per example with the balance constraint sum(beta) = 0 coming from the
free bias.  Each step picks the most violating pair of examples and exactly
minimizes the dual along that two-coordinate direction (the restriction is a
piecewise quadratic with two breakpoints), so the dual objective never
increases.  Convergence is declared when the maximal violating-pair gap --
the spread of the feasible bias multipliers -- falls below tol; the bias is
the midpoint of that bracket.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_X_y, check_array

from .errors import TrainingError


def primal_objective(w, b, X, y, C, epsilon) -> float:
    residual = np.asarray(X @ w).ravel() + b - y
    excess = np.maximum(0.0, np.abs(residual) - epsilon)
    return 0.5 * float(w @ w) + C * float(excess @ excess)


def primal_gradient(w, b, X, y, C, epsilon):
    """(d/dw, d/db) of the primal objective.

    The squared hinge makes the loss continuously differentiable, so this is
    the gradient wherever |residual| != epsilon and a subgradient otherwise.
    """
    residual = np.asarray(X @ w).ravel() + b - y
    s = np.sign(residual) * np.maximum(0.0, np.abs(residual) - epsilon)
    grad_w = w + 2.0 * C * np.asarray(X.T @ s).ravel()
    grad_b = 2.0 * C * float(s.sum())
    return grad_w, grad_b


class DualCoordinateSVR(BaseEstimator, RegressorMixin):
    """sklearn-style estimator around the pairwise dual solver.

    Attributes after fit: coef_, intercept_, dual_coef_,
    objective_history_ (dual objective per epoch), n_epochs_, kkt_gap_.
    """

    def __init__(self, C=1.0, epsilon=0.1, tol=1e-3, max_epochs=1000):
        self.C = C
        self.epsilon = epsilon
        self.tol = tol
        self.max_epochs = max_epochs

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csr", y_numeric=True)
        if self.C <= 0:
            raise TrainingError("C must be positive")
        if self.epsilon < 0:
            raise TrainingError("epsilon must be non-negative")
        n, d = X.shape
        if n < 2:
            raise TrainingError("need at least two training examples")
        X = sp.csr_matrix(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        C, eps = float(self.C), float(self.epsilon)

        beta = np.zeros(n)
        w = np.zeros(d)
        row_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        indptr, indices, data = X.indptr, X.indices, X.data
        half_inv_c = 1.0 / (2.0 * C)

        history: list[float] = []
        gap = np.inf
        epoch = 0
        while epoch < self.max_epochs:
            epoch += 1
            moved = False
            for _ in range(n):
                g = np.asarray(X @ w).ravel() - y + beta * half_inv_c
                lo = np.where(beta < 0, -g + eps, -g - eps)
                hi = np.where(beta > 0, -g - eps, -g + eps)
                i = int(np.argmax(lo))
                j = int(np.argmin(hi))
                gap = lo[i] - hi[j]
                if gap <= self.tol:
                    break
                xi_idx = indices[indptr[i] : indptr[i + 1]]
                xi_val = data[indptr[i] : indptr[i + 1]]
                xj_idx = indices[indptr[j] : indptr[j + 1]]
                xj_val = data[indptr[j] : indptr[j + 1]]
                dot = _sparse_dot(xi_idx, xi_val, xj_idx, xj_val)
                q = row_sq[i] + row_sq[j] - 2.0 * dot + 1.0 / C
                step = _pair_step(q, g[i] - g[j], beta[i], beta[j], eps)
                if step == 0.0:
                    break
                beta[i] += step
                beta[j] -= step
                w[xi_idx] += step * xi_val
                w[xj_idx] -= step * xj_val
                moved = True
            dual = (
                0.5 * float(w @ w)
                - float(y @ beta)
                + eps * float(np.abs(beta).sum())
                + float(beta @ beta) / (4.0 * C)
            )
            history.append(dual)
            if gap <= self.tol or not moved:
                break

        g = np.asarray(X @ w).ravel() - y + beta * half_inv_c
        lo = np.where(beta < 0, -g + eps, -g - eps)
        hi = np.where(beta > 0, -g - eps, -g + eps)
        self.coef_ = w
        self.intercept_ = 0.5 * (float(lo.max()) + float(hi.min()))
        self.dual_coef_ = beta
        self.objective_history_ = history
        self.n_epochs_ = epoch
        self.kkt_gap_ = float(max(0.0, lo.max() - hi.min()))
        return self

    def predict(self, X):
        X = check_array(X, accept_sparse="csr")
        return np.asarray(X @ self.coef_).ravel() + self.intercept_


def _sparse_dot(ai, av, bi, bv) -> float:
    """Dot product of two sparse rows given (indices, values)."""
    out = 0.0
    p = q = 0
    la, lb = len(ai), len(bi)
    while p < la and q < lb:
        if ai[p] == bi[q]:
            out += av[p] * bv[q]
            p += 1
            q += 1
        elif ai[p] < bi[q]:
            p += 1
        else:
            q += 1
    return out


def _pair_step(q, g_diff, beta_i, beta_j, eps) -> float:
    """Exact minimizer of the dual along (e_i - e_j).

    phi(t) = 0.5 q t^2 + g_diff t + eps(|beta_i + t| - |beta_i|)
                                  + eps(|beta_j - t| - |beta_j|)
    is piecewise quadratic with breakpoints at -beta_i and beta_j; the
    minimum is at a breakpoint or at a per-piece vertex.
    """

    def phi(t):
        return (
            0.5 * q * t * t
            + g_diff * t
            + eps * (abs(beta_i + t) - abs(beta_i))
            + eps * (abs(beta_j - t) - abs(beta_j))
        )

    candidates = [-beta_i, beta_j]
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            candidates.append(-(g_diff + eps * (s1 - s2)) / q)
    best = min(candidates, key=phi)
    return best if phi(best) < 0.0 else 0.0
