"""Independent dual-QP oracle used to cross-check the SMO solver.

Solves min 0.5 a^T Q a - 1^T a over the box [0, C]^n intersected with the
hyperplane y^T a = 0. A projected-gradient (FISTA) phase with an exact
projection (bisection on the hyperplane multiplier) identifies the active
set, then a primal active-set phase solves the reduced KKT system exactly.
Shares no code with the production solver.
"""

import numpy as np


def project_box_hyperplane(v: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Euclidean projection of v onto {0 <= a <= c, y . a = 0}."""

    def constraint(nu: float) -> float:
        return float(np.dot(y, np.clip(v - nu * y, 0.0, c)))

    span = float(np.max(np.abs(v))) + c + 1.0
    lo, hi = -span, span
    # constraint(nu) is non-increasing; widen the bracket if needed.
    while constraint(lo) < 0.0:
        lo *= 2.0
    while constraint(hi) > 0.0:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    return np.clip(v - nu * y, 0.0, c)


def _fista_warm_start(Q: np.ndarray, y: np.ndarray, c: float, iters: int) -> np.ndarray:
    lipschitz = float(np.max(np.linalg.eigvalsh(Q)))
    step = 1.0 / max(lipschitz, 1e-12)
    a = np.zeros_like(y)
    momentum = a.copy()
    t_k = 1.0
    prev_obj = np.inf
    for _ in range(iters):
        grad = Q @ momentum - 1.0
        a_next = project_box_hyperplane(momentum - step * grad, y, c)
        obj = 0.5 * a_next @ Q @ a_next - np.sum(a_next)
        if obj > prev_obj:  # restart momentum on overshoot
            t_k = 1.0
            momentum = a.copy()
            prev_obj = np.inf
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        momentum = a_next + ((t_k - 1.0) / t_next) * (a_next - a)
        if float(np.max(np.abs(a_next - a))) < 1e-10:
            return a_next
        a, t_k, prev_obj = a_next, t_next, obj
    return a


def _solve_reduced_kkt(
    Q: np.ndarray, y: np.ndarray, free: np.ndarray, a: np.ndarray
) -> tuple[np.ndarray, float]:
    """Equality-constrained solve on the free set with bounds fixed."""
    idx = np.flatnonzero(free)
    fixed = ~free
    rhs_top = 1.0 - Q[np.ix_(idx, np.flatnonzero(fixed))] @ a[fixed]
    rhs_bottom = -float(np.dot(y[fixed], a[fixed]))
    k = idx.size
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = Q[np.ix_(idx, idx)] + 1e-12 * np.eye(k)
    system[:k, k] = y[idx]
    system[k, :k] = y[idx]
    rhs = np.concatenate([rhs_top, [rhs_bottom]])
    solution = np.linalg.solve(system, rhs)
    return solution[:k], float(solution[k])


def solve_dual_qp(
    K: np.ndarray,
    y: np.ndarray,
    c: float,
    warm_iters: int = 2000,
    kkt_tol: float = 1e-10,
) -> np.ndarray:
    """Exact-ish dual solution: FISTA warm start + active-set polish."""
    y = y.astype(float)
    n = y.size
    Q = K * np.outer(y, y)
    a = _fista_warm_start(Q, y, c, warm_iters)

    snap = 1e-6 * max(c, 1.0)
    a = np.where(a < snap, 0.0, a)
    a = np.where(a > c - snap, c, a)
    free = (a > 0.0) & (a < c)
    if not free.any():  # need at least one free variable per class to move
        free[np.argmax(np.where(y > 0, a, -np.inf))] = True
        free[np.argmax(np.where(y < 0, a, -np.inf))] = True

    for _ in range(200):
        a_free, nu = _solve_reduced_kkt(Q, y, free, a)
        idx = np.flatnonzero(free)

        # Clamp the single worst box violation among the free variables.
        below = a_free < -kkt_tol
        above = a_free > c + kkt_tol
        if below.any() or above.any():
            viol = np.maximum(-a_free, a_free - c)
            worst = int(np.argmax(viol))
            target = 0.0 if a_free[worst] < 0.0 else c
            a[idx[worst]] = target
            free[idx[worst]] = False
            if not free.any():
                break
            continue

        a[idx] = np.clip(a_free, 0.0, c)

        # Check bound multipliers; release the single worst violator.
        grad = Q @ a - 1.0
        reduced = grad + nu * y
        release = -1
        worst_violation = kkt_tol
        for i in range(n):
            if free[i]:
                continue
            if a[i] == 0.0 and reduced[i] < -worst_violation:
                worst_violation = -reduced[i]
                release = i
            elif a[i] == c and reduced[i] > worst_violation:
                worst_violation = reduced[i]
                release = i
        if release < 0:
            break
        free[release] = True
    return a


def oracle_bias(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, c: float) -> float:
    """Bias from the margin condition on free support vectors."""
    f = K @ (alpha * y)
    margins = y - f  # admissible bias values / bounds
    free = (alpha > 1e-8 * c) & (alpha < c * (1.0 - 1e-8))
    if free.any():
        return float(np.mean(margins[free]))
    # No free vectors: b is only bracketed. KKT gives b <= y_i - f_i for
    # positive vectors with alpha > 0 and negative vectors with alpha < C,
    # and b >= y_i - f_i for the complementary sets; take the midpoint.
    upper_set = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
    lower_set = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
    hi = np.min(margins[upper_set]) if upper_set.any() else 0.0
    lo = np.max(margins[lower_set]) if lower_set.any() else 0.0
    return float(0.5 * (hi + lo))


def oracle_decision(
    K_query: np.ndarray, y: np.ndarray, alpha: np.ndarray, bias: float
) -> np.ndarray:
    """Decision values for query rows given a kernel block K(query, train)."""
    return K_query @ (alpha * y) + bias
