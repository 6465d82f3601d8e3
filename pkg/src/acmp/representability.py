"""Positivity conditions on the two-body sector beyond the built-in ones.

The pair Gram matrices of an AcmpSet make the two-particle (D) and
particle-hole (G) matrices positive semidefinite by construction.  The
two-hole (Q) matrix and the two-particle-one-hole (T2) matrix are affine
functions of the one- and two-body densities and are nonnegative for any
state, but not for every feasible point of the constraint set.  This
module evaluates them, together with smooth penalties on their negative
parts whose gradients are expressed as effective one- and two-body
coefficient tensors (so the column chain rule of the Lagrangian applies
unchanged).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "q_matrix",
    "t2_matrix",
    "q_negativity",
    "t2_negativity",
]


def q_matrix(g1, g2):
    """Two-hole matrix Q[(i,j),(i',j')] from the one- and two-body densities.

    Densities follow the package convention g1[p,q] = <a+_p a_q> and
    g2[p,p',q,q'] = <a+_p a+_q a_q' a_p'>.  The result is the n^2 x n^2
    symmetric matrix of <a_i a_j a+_j' a+_i'> entries.
    """
    n = g1.shape[0]
    d = np.eye(n)
    q4 = (
        np.einsum("jl,ik->ikjl", d, d)
        - np.einsum("jk,il->ikjl", d, d)
        - np.einsum("jl,ki->ikjl", d, g1)
        + np.einsum("jk,li->ikjl", d, g1)
        + np.einsum("il,kj->ikjl", d, g1)
        - np.einsum("ik,lj->ikjl", d, g1)
        + np.einsum("ljki->ikjl", g2)
    )
    m = q4.transpose(0, 2, 1, 3).reshape(n * n, n * n)
    return 0.5 * (m + m.T)


def t2_matrix(g1, g2):
    """T2 matrix <{a+_i a+_j a_k, a+_n a_m a_l}> as an n^3 x n^3 array.

    The anticommutator cancels the three-body density, leaving an affine
    function of g1 and g2.
    """
    n = g1.shape[0]
    d = np.eye(n)
    t6 = (
        np.einsum("kn,iljm->ijklmn", d, g2)
        + np.einsum("il,jm,nk->ijklmn", d, d, g1)
        - np.einsum("im,jl,nk->ijklmn", d, d, g1)
        - np.einsum("il,nkjm->ijklmn", d, g2)
        + np.einsum("im,nkjl->ijklmn", d, g2)
        + np.einsum("jl,nkim->ijklmn", d, g2)
        - np.einsum("jm,nkil->ijklmn", d, g2)
    )
    m = t6.reshape(n**3, n**3)
    return 0.5 * (m + m.T)


def _negative_part(m):
    w, v = np.linalg.eigh(m)
    neg = np.minimum(w, 0.0)
    pen = float(np.sum(neg**2))
    if pen == 0.0:
        return 0.0, None
    return pen, (v * (2.0 * neg)) @ v.T


def q_negativity(g1, g2):
    """Sum of squared negative Q eigenvalues plus effective gradients.

    Returns (penalty, h_eff, H2_eff) with d penalty = sum(h_eff * d g1)
    + sum(H2_eff * d g2); the effective tensors are None when the penalty
    vanishes.
    """
    n = g1.shape[0]
    pen, mm = _negative_part(q_matrix(g1, g2))
    if mm is None:
        return 0.0, None, None
    m4 = mm.reshape(n, n, n, n).transpose(0, 2, 1, 3)
    h2_eff = m4.transpose(3, 2, 1, 0)
    h_eff = (
        -np.einsum("ikjj->ki", m4)
        + np.einsum("ijjl->li", m4)
        + np.einsum("ikji->kj", m4)
        - np.einsum("iijl->lj", m4)
    )
    return pen, h_eff, h2_eff


def t2_negativity(g1, g2):
    """Sum of squared negative T2 eigenvalues plus effective gradients."""
    n = g1.shape[0]
    pen, mm = _negative_part(t2_matrix(g1, g2))
    if mm is None:
        return 0.0, None, None
    m6 = mm.reshape((n,) * 6)
    h2_eff = (
        np.einsum("ijklmk->iljm", m6)
        - np.einsum("ijkimn->nkjm", m6)
        + np.einsum("ijklin->nkjl", m6)
        + np.einsum("ijkjmn->nkim", m6)
        - np.einsum("ijkljn->nkil", m6)
    )
    h_eff = np.einsum("ijkijn->nk", m6) - np.einsum("ijkjin->nk", m6)
    return pen, h_eff, h2_eff
