"""Factorization of symmetric positive semi-definite Gram matrices.

``psd_factor`` returns a thin matrix B with B.T @ B == G, the building
block for compacting column families that are only observed through their
mutual scalar products.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NotRepresentableError", "pivoted_cholesky", "psd_factor"]


class NotRepresentableError(ValueError):
    """Gram matrix is indefinite beyond tolerance: no real factor exists."""


def pivoted_cholesky(g, tol=1e-10, neg_tol=1e-8):
    """Upper factor B (r x n) of a PSD matrix with diagonal pivoting.

    Stops when the largest remaining diagonal falls below ``tol`` relative
    to the initial scale; raises NotRepresentableError if a diagonal dips
    below ``-neg_tol`` at that scale.
    """
    g = np.array(g, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n):
        raise ValueError("square matrix required")
    scale = max(float(np.max(np.abs(np.diag(g)))), 1.0) if n else 1.0
    piv = np.arange(n)
    rank = n
    for k in range(n):
        d = np.diag(g)[k:]
        j = int(np.argmax(d)) + k
        if np.min(d) < -neg_tol * scale:
            raise NotRepresentableError(
                f"diagonal {np.min(d):.3e} below -{neg_tol:.1e} * scale"
            )
        if g[j, j] <= tol * scale:
            rank = k
            break
        if j != k:
            g[:, [k, j]] = g[:, [j, k]]
            g[[k, j], :] = g[[j, k], :]
            piv[[k, j]] = piv[[j, k]]
        g[k, k] = np.sqrt(g[k, k])
        g[k, k + 1 :] /= g[k, k]
        g[k + 1 :, k] = 0.0
        g[k + 1 :, k + 1 :] -= np.outer(g[k, k + 1 :], g[k, k + 1 :])
    upper = np.triu(g[:rank])
    out = np.zeros((rank, n))
    out[:, piv] = upper
    return out


def _eigen_factor(g, tol=1e-10, neg_tol=1e-8):
    g = np.asarray(g, dtype=float)
    w, v = np.linalg.eigh(0.5 * (g + g.T))
    scale = max(float(np.max(np.abs(w))), 1.0) if w.size else 1.0
    if w.size and w[0] < -neg_tol * scale:
        raise NotRepresentableError(f"eigenvalue {w[0]:.3e} below tolerance")
    keep = w > tol * scale
    return (np.sqrt(w[keep])[:, None] * v[:, keep].T)[::-1]


def psd_factor(g, rows=None, tol=1e-10, neg_tol=1e-8):
    """Factor of a PSD Gram matrix, zero-padded or checked against ``rows``.

    Falls back to an eigenvalue square root when pivoting loses accuracy.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    b = pivoted_cholesky(g, tol=tol, neg_tol=neg_tol)
    err = np.abs(b.T @ b - g).max() if n else 0.0
    if err > 1e-9 * max(1.0, np.abs(g).max()):
        b = _eigen_factor(g, tol=tol, neg_tol=neg_tol)
    if rows is None:
        return b
    if b.shape[0] > rows:
        # rank exceeding the requested row count signals an invalid input
        tail = np.abs(b[rows:]).max() if b.shape[0] > rows else 0.0
        if tail > 1e-8 * max(1.0, np.abs(g).max()):
            raise NotRepresentableError(
                f"Gram rank {b.shape[0]} exceeds row budget {rows}"
            )
        b = b[:rows]
    if b.shape[0] < rows:
        b = np.vstack([b, np.zeros((rows - b.shape[0], n))])
    return b
