"""Finite-difference oracles shared by several test modules."""

import numpy as np

from noisy_ica_kit.contrast import contrast_derivatives, eval_contrast


def fd_gradient(kind, u, X, h=None):
    h = 1e-5 * (np.linalg.norm(u) + 1.0) if h is None else h
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (eval_contrast(kind, u + e, X) - eval_contrast(kind, u - e, X)) / (2 * h)
    return g


def fd_hessian(kind, u, X, h=1e-4):
    """Central differences of the analytic gradient (symmetrized)."""
    k = u.size
    H = np.zeros((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        gp = contrast_derivatives(kind, u + e, X, 1)[1]
        gm = contrast_derivatives(kind, u - e, X, 1)[1]
        H[:, i] = (gp - gm) / (2 * h)
    return 0.5 * (H + H.T)


def fd_hessian_from_values(kind, u, X, h=1e-4):
    """Second-order central differences of the contrast value itself."""
    k = u.size
    f = lambda v: eval_contrast(kind, v, X)
    H = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h
            ej[j] = h
            H[i, j] = H[j, i] = (f(u + ei + ej) - f(u + ei - ej) - f(u - ei + ej) + f(u - ei - ej)) / (4 * h * h)
    return H


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-6)


def offdiag_ratio(M):
    """Off-diagonal Frobenius mass relative to the diagonal mass."""
    d = np.diag(np.diag(M))
    return np.linalg.norm(M - d) / np.linalg.norm(d)
