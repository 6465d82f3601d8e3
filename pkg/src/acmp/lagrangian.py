"""Constrained Lagrangians over an AcmpSet plus multipliers.

Two variants are provided.  The plain one is the energy minus one
multiplier block per constraint family:

    L = E(set)
        - sum lam[i,i']   * (reference identity residual)
        - sum Lam[i,i',j,j'] * (child identity residual)
        - mu0             * (reference trace residual)
        - sum mu[i,i']    * (child trace residual)

The symmetrized variant rewrites the energy with electron/hole column
differences, which rebalances the gradient blocks and tends to improve
convergence.  Its occupation blocks compare the electron and hole traces
directly: the reference block targets 2N - n and the child block
2(N-1) - n times the one-body density.  A state-independent constant is
included so that the value still equals the energy at feasible points.

Everything is differentiated analytically; ``grad_check`` verifies the
gradients against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .core import AcmpSet, Acmp, pair_tables

__all__ = [
    "Multipliers",
    "SolveState",
    "FlatLayout",
    "lagrangian_value",
    "lagrangian_gradient",
    "symmetrized_value",
    "symmetrized_gradient",
    "grad_check",
    "GradCheckReport",
]


def _symmetrize4(t):
    return 0.5 * (t + t.transpose(1, 0, 3, 2))


@dataclass(frozen=True)
class Multipliers:
    """lam, mu: symmetric n x n; Lam: n^4 with Lam[i,i',j,j'] = Lam[i',i,j',j]."""

    lam: np.ndarray
    Lam: np.ndarray
    mu0: float
    mu: np.ndarray

    def __post_init__(self):
        lam = 0.5 * (np.asarray(self.lam, float) + np.asarray(self.lam, float).T)
        mu = 0.5 * (np.asarray(self.mu, float) + np.asarray(self.mu, float).T)
        Lam = _symmetrize4(np.asarray(self.Lam, float))
        for m in (lam, Lam, mu):
            m.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", Lam)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n)), np.zeros((n, n, n, n)), 0.0, np.zeros((n, n)))


@dataclass(frozen=True)
class SolveState:
    set: AcmpSet
    mult: Multipliers


@dataclass(frozen=True)
class FlatLayout:
    """Fixed packing of a SolveState into one real vector.

    Order: A0, C0, child-A columns, child-C columns (each column-major),
    then the canonical (upper-triangle) entries of lam, Lam (as its
    n^2 x n^2 symmetric matrix form), mu0, and mu.
    """

    n: int
    N: int
    rows_a0: int
    rows_c0: int
    rows_xa: int
    rows_xc: int

    @classmethod
    def of_state(cls, state):
        s = state.set
        return cls(
            s.n, s.N, s.d0.a.shape[0], s.d0.c.shape[0], s.xa.shape[0], s.xc.shape[0]
        )

    @property
    def pair_count(self):
        return comb(self.n, 2)

    @property
    def column_size(self):
        n = self.n
        return (
            self.rows_a0 * n
            + self.rows_c0 * n
            + self.rows_xa * self.pair_count
            + self.rows_xc * n * n
        )

    @property
    def multiplier_size(self):
        n = self.n
        tri = n * (n + 1) // 2
        tri2 = n * n * (n * n + 1) // 2
        return tri + tri2 + 1 + tri

    @property
    def size(self):
        return self.column_size + self.multiplier_size

    # -- symmetric <-> canonical helpers -------------------------------

    def _pack_sym(self, m):
        iu = np.triu_indices(m.shape[0])
        return m[iu]

    def _unpack_sym(self, v, k):
        m = np.zeros((k, k))
        iu = np.triu_indices(k)
        m[iu] = v
        m = m + m.T - np.diag(np.diag(m))
        return m

    def pack(self, state):
        n = self.n
        s, mult = state.set, state.mult
        lmat = mult.Lam.transpose(0, 2, 1, 3).reshape(n * n, n * n)
        return np.concatenate(
            [
                s.d0.a.ravel(order="F"),
                s.d0.c.ravel(order="F"),
                s.xa.ravel(order="F"),
                s.xc.ravel(order="F"),
                self._pack_sym(mult.lam),
                self._pack_sym(lmat),
                [mult.mu0],
                self._pack_sym(mult.mu),
            ]
        )

    def unpack(self, x):
        n, p = self.n, self.pair_count
        sizes = [
            self.rows_a0 * n,
            self.rows_c0 * n,
            self.rows_xa * p,
            self.rows_xc * n * n,
        ]
        o = 0
        mats = []
        for sz, shape in zip(
            sizes,
            [
                (self.rows_a0, n),
                (self.rows_c0, n),
                (self.rows_xa, p),
                (self.rows_xc, n * n),
            ],
        ):
            mats.append(x[o : o + sz].reshape(shape, order="F"))
            o += sz
        tri = n * (n + 1) // 2
        tri2 = n * n * (n * n + 1) // 2
        lam = self._unpack_sym(x[o : o + tri], n)
        o += tri
        lmat = self._unpack_sym(x[o : o + tri2], n * n)
        o += tri2
        mu0 = float(x[o])
        o += 1
        mu = self._unpack_sym(x[o : o + tri], n)
        Lam = lmat.reshape(n, n, n, n).transpose(0, 2, 1, 3)
        d0 = Acmp(mats[0], mats[1], n, self.N, 1.0)
        return SolveState(AcmpSet(d0, mats[2], mats[3]), Multipliers(lam, Lam, mu0, mu))

    def _pack_sym_grad(self, b):
        # d/d(canonical t_ab): off-diagonal entries parametrize two slots
        m = b + b.T
        m[np.diag_indices_from(m)] = np.diag(b)
        return m[np.triu_indices(b.shape[0])]

    def pack_gradient(self, g_a0, g_c0, g_xa, g_xc, b_lam, b_Lam, b_mu0, b_mu):
        """Assemble the flat gradient from column blocks and constraint
        residual brackets (multiplier gradients are minus the brackets)."""
        n = self.n
        lmat = b_Lam.transpose(0, 2, 1, 3).reshape(n * n, n * n)
        return np.concatenate(
            [
                g_a0.ravel(order="F"),
                g_c0.ravel(order="F"),
                g_xa.ravel(order="F"),
                g_xc.ravel(order="F"),
                -self._pack_sym_grad(b_lam),
                -self._pack_sym_grad(lmat),
                [-b_mu0],
                -self._pack_sym_grad(b_mu),
            ]
        )


# --- shared pieces ----------------------------------------------------------


def _pair_expand(w, n):
    """Reduce a coefficient tensor w[i,i',j,j'] to the stored-pair matrix
    Wp with sum_{iji'j'} w <a(i)_j|a(i')_j'> = sum_{pq} Wp[p,q] <x_p|x_q>."""
    pairs = np.array(
        [(i, j) for i in range(n) for j in range(i + 1, n)], dtype=int
    )
    al, be = pairs[:, 0], pairs[:, 1]
    wp = (
        w[al[:, None], al[None, :], be[:, None], be[None, :]]
        - w[be[:, None], al[None, :], al[:, None], be[None, :]]
        - w[al[:, None], be[None, :], be[:, None], al[None, :]]
        + w[be[:, None], be[None, :], al[:, None], al[None, :]]
    )
    return wp


def _state_grams(s):
    n = s.n
    g_a0 = s.d0.a.T @ s.d0.a
    g_c0 = s.d0.c.T @ s.d0.c
    pidx, sgn = pair_tables(n)
    m = s.xa.T @ s.xa
    t = m[pidx[:, None, :, None], pidx[None, :, None, :]]
    t = t * sgn[:, None, :, None] * sgn[None, :, None, :]
    u = (s.xc.T @ s.xc).reshape(n, n, n, n).transpose(0, 2, 1, 3)
    return g_a0, g_c0, t, u


def _brackets(s, g_a0, g_c0, t, u):
    n, N = s.n, s.N
    eye = np.eye(n)
    b_lam = g_a0 + g_c0.T - eye
    b_Lam = (
        t
        + u.transpose(0, 1, 3, 2)
        - g_a0[:, :, None, None] * eye[None, None, :, :]
    )
    b_mu0 = float(np.trace(g_a0) - N)
    b_mu = np.einsum("abjj->ab", t) - (N - 1) * g_a0
    return b_lam, b_Lam, b_mu0, b_mu


def _sym_brackets(s, g_a0, g_c0, t, u):
    n, N = s.n, s.N
    b_mu0 = float(np.trace(g_a0) - np.trace(g_c0) - (2 * N - n))
    b_mu = (
        np.einsum("abjj->ab", t)
        - np.einsum("abjj->ab", u)
        - (2 * (N - 1) - n) * g_a0
    )
    return b_mu0, b_mu


def _sym_hamiltonian(ham):
    htil = 0.5 * ham.h1 + 0.25 * np.einsum("abjj->ab", ham.h2)
    Htil = 0.5 * ham.h2
    const = 0.5 * float(np.trace(ham.h1)) + 0.25 * float(
        np.einsum("iijj->", ham.h2)
    )
    return htil, Htil, const


def lagrangian_value(state, ham):
    """Energy minus multiplier-weighted constraint brackets."""
    s, mult = state.set, state.mult
    g_a0, g_c0, t, u = _state_grams(s)
    b_lam, b_Lam, b_mu0, b_mu = _brackets(s, g_a0, g_c0, t, u)
    energy = np.sum(ham.h1 * g_a0) + np.sum(ham.h2 * t)
    return float(
        energy
        - np.sum(mult.lam * b_lam)
        - np.sum(mult.Lam * b_Lam)
        - mult.mu0 * b_mu0
        - np.sum(mult.mu * b_mu)
    )


def lagrangian_gradient(state, ham):
    """Flat analytic gradient; see FlatLayout for the ordering."""
    s, mult = state.set, state.mult
    n, N = s.n, s.N
    layout = FlatLayout.of_state(state)
    g_a0, g_c0, t, u = _state_grams(s)
    b_lam, b_Lam, b_mu0, b_mu = _brackets(s, g_a0, g_c0, t, u)
    eye = np.eye(n)
    tr_Lam = np.einsum("abjj->ab", mult.Lam)
    k_a0 = ham.h1 - mult.lam + tr_Lam - mult.mu0 * eye + (N - 1) * mult.mu
    g_grad_a0 = 2.0 * s.d0.a @ k_a0
    g_grad_c0 = -2.0 * s.d0.c @ mult.lam
    w = (
        ham.h2
        - mult.Lam
        - mult.mu[:, :, None, None] * eye[None, None, :, :]
    )
    g_grad_xa = 2.0 * s.xa @ _pair_expand(w, n)
    q = (-mult.Lam.transpose(0, 3, 1, 2)).reshape(n * n, n * n)
    g_grad_xc = 2.0 * s.xc @ q
    return layout.pack_gradient(
        g_grad_a0, g_grad_c0, g_grad_xa, g_grad_xc, b_lam, b_Lam, b_mu0, b_mu
    )


def symmetrized_value(state, ham):
    """Electron/hole-balanced variant; equals the energy at feasible points."""
    s, mult = state.set, state.mult
    g_a0, g_c0, t, u = _state_grams(s)
    b_lam, b_Lam, _, _ = _brackets(s, g_a0, g_c0, t, u)
    b_mu0, b_mu = _sym_brackets(s, g_a0, g_c0, t, u)
    htil, Htil, const = _sym_hamiltonian(ham)
    energy = (
        np.sum(htil * (g_a0 - g_c0))
        + np.sum(Htil * (t - u.transpose(0, 1, 3, 2)))
        + const
    )
    return float(
        energy
        - np.sum(mult.lam * b_lam)
        - np.sum(mult.Lam * b_Lam)
        - mult.mu0 * b_mu0
        - np.sum(mult.mu * b_mu)
    )


def symmetrized_gradient(state, ham):
    s, mult = state.set, state.mult
    n, N = s.n, s.N
    layout = FlatLayout.of_state(state)
    g_a0, g_c0, t, u = _state_grams(s)
    b_lam, b_Lam, _, _ = _brackets(s, g_a0, g_c0, t, u)
    b_mu0, b_mu = _sym_brackets(s, g_a0, g_c0, t, u)
    htil, Htil, _ = _sym_hamiltonian(ham)
    eye = np.eye(n)
    tr_Lam = np.einsum("abjj->ab", mult.Lam)
    k_a0 = (
        htil
        - mult.lam
        + tr_Lam
        - mult.mu0 * eye
        + (2 * (N - 1) - n) * mult.mu
    )
    g_grad_a0 = 2.0 * s.d0.a @ k_a0
    k_c0 = -htil - mult.lam + mult.mu0 * eye
    g_grad_c0 = 2.0 * s.d0.c @ k_c0
    w = (
        Htil
        - mult.Lam
        - mult.mu[:, :, None, None] * eye[None, None, :, :]
    )
    g_grad_xa = 2.0 * s.xa @ _pair_expand(w, n)
    hl = Htil + mult.Lam
    q4 = -hl.transpose(0, 3, 1, 2) + (
        mult.mu[:, None, :, None] * eye[None, :, None, :]
    )
    g_grad_xc = 2.0 * s.xc @ q4.reshape(n * n, n * n)
    return layout.pack_gradient(
        g_grad_a0, g_grad_c0, g_grad_xa, g_grad_xc, b_lam, b_Lam, b_mu0, b_mu
    )


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_coordinate: int
    count: int
    step: float

    @property
    def passed(self):
        return self.max_rel_error <= 1e-6


def grad_check(state, ham, step=1e-6, count=100, symmetrized=False, seed=0):
    """Compare analytic gradient to central differences on sampled
    coordinates.  Errors are scaled by max(1, |gradient|_inf)."""
    if step <= 0:
        raise ValueError("step must be positive")
    layout = FlatLayout.of_state(state)
    value = symmetrized_value if symmetrized else lagrangian_value
    grad = symmetrized_gradient if symmetrized else lagrangian_gradient
    x0 = layout.pack(state)
    g = grad(state, ham)
    scale = max(1.0, float(np.abs(g).max()))
    rng = np.random.default_rng(seed)
    coords = rng.choice(layout.size, size=min(count, layout.size), replace=False)
    worst = 0.0
    worst_k = -1
    for k in coords:
        xp = x0.copy()
        xp[k] += step
        xm = x0.copy()
        xm[k] -= step
        fd = (value(layout.unpack(xp), ham) - value(layout.unpack(xm), ham)) / (
            2.0 * step
        )
        err = abs(fd - g[k]) / scale
        if err > worst:
            worst, worst_k = err, int(k)
    return GradCheckReport(worst, worst_k, len(coords), step)
