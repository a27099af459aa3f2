"""Pure-numpy implementation of the single-pass coefficient recursion.

Mirrors _speedups.run_sgd exactly: same clamping, same kernel dispatch
(kind 0 = power series with given coefficients, kind 1 = NTK of given depth).
Kept dependency-free of the rest of the package so the two backends stay
drop-in interchangeable.
"""

import numpy as np


def _phi(t, kind, depth, coeffs):
    if kind == 1:
        k_prev = t
        k_ntk = t.copy()
        for _ in range(depth - 1):
            k_prev = np.clip(k_prev, -1.0, 1.0)
            k_next = (k_prev * (np.pi - np.arccos(k_prev)) + np.sqrt(1.0 - k_prev * k_prev)) / np.pi
            k_ntk = k_ntk * ((np.pi - np.arccos(k_prev)) / np.pi) + k_next
            k_prev = k_next
        return k_ntk
    acc = np.full_like(t, coeffs[-1])
    for a in coeffs[-2::-1]:
        acc = acc * t + a
    return acc


def run_sgd(X, y, etas, kind, depth, coeffs):
    """Coefficients a_1..a_n of the single-pass recursion.

    a_t = -eta_t (sum_{j<t} a_j phi(<x_j, x_t>) - y_t), inner products clamped
    to [-1, 1] before phi.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    etas = np.asarray(etas, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n = X.shape[0]
    a = np.zeros(n)
    # a diverging run pushes coefficients to inf; keep propagating silently to
    # match the compiled backend (no warning machinery there)
    with np.errstate(invalid="ignore", over="ignore"):
        for t in range(n):
            if t:
                dots = np.clip(X[:t] @ X[t], -1.0, 1.0)
                pred = a[:t] @ _phi(dots, kind, depth, coeffs)
            else:
                pred = 0.0
            a[t] = -etas[t] * (pred - y[t])
    return a
