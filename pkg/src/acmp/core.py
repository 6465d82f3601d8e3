"""Anti-commutation matrix pairs (ACMPs) and the observables built on them.

An ACMP is a pair of real matrices (A, C) with one column per orbital; the
columns represent the states a_i|psi> and c+_i|psi> in the particle sectors
adjacent to |psi>.  All observables (density matrices, energies, constraint
residuals) are scalar products between columns, so the row spaces carry an
orthogonal gauge freedom and pairs can be compacted to minimal row counts
without changing anything measurable.

A full two-body description is an ``AcmpSet``: one pair for the reference
state plus one child pair per orbital i built from a_i|psi>.  The child A
columns obey a(i)_j = -a(j)_i, which is kept structural here: only the
i<j columns are stored and the sign is synthesized on access.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .psd import NotRepresentableError, psd_factor

__all__ = [
    "Acmp",
    "AcmpSet",
    "GramPair",
    "SetResiduals",
    "ColemanReport",
    "pair_tables",
    "pair_product",
    "acmp_residuals",
    "set_residuals",
    "rdm1_from",
    "rdm2_from",
    "energy_of",
    "compact",
    "compact_set",
    "coleman_check",
    "convex_mix",
    "gram_pair",
    "expand_pair_gram",
    "d0_row_sizes",
    "child_row_sizes",
    "save_acmp_set",
    "load_acmp_set",
]

# Centralized numerical tolerances.
REPRESENTABILITY_TOL = 1e-8
ALGEBRA_TOL = 1e-10


@dataclass(frozen=True)
class Acmp:
    """Matrix pair (a, c), both with n columns, plus its normalization tau."""

    a: np.ndarray
    c: np.ndarray
    n: int
    N: int
    tau: float = 1.0

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if a.shape[1] != self.n or c.shape[1] != self.n:
            raise ValueError("both matrices need exactly n columns")
        a.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class AcmpSet:
    """Reference pair d0 plus the child columns for the two-body level.

    ``xa`` stores the C(n,2) columns a(i)_j for i<j (lexicographic pairs);
    ``xc`` stores all n*n columns c(i)_j with flat index i*n+j.
    """

    d0: Acmp
    xa: np.ndarray
    xc: np.ndarray

    def __post_init__(self):
        n = self.d0.n
        xa = np.atleast_2d(np.asarray(self.xa, dtype=float))
        xc = np.atleast_2d(np.asarray(self.xc, dtype=float))
        if xa.shape[1] != comb(n, 2):
            raise ValueError(f"expected {comb(n, 2)} stored child-A columns")
        if xc.shape[1] != n * n:
            raise ValueError(f"expected {n * n} child-C columns")
        xa.flags.writeable = False
        xc.flags.writeable = False
        object.__setattr__(self, "xa", xa)
        object.__setattr__(self, "xc", xc)

    @property
    def n(self):
        return self.d0.n

    @property
    def N(self):
        return self.d0.N


@dataclass(frozen=True)
class GramPair:
    """Overlap matrices of the stored child columns (both PSD)."""

    s_a: np.ndarray
    s_c: np.ndarray


@dataclass(frozen=True)
class SetResiduals:
    """Constraint residual blocks of an AcmpSet (all zero when exact)."""

    d0_identity: np.ndarray  # n x n
    d0_trace: float
    child_identity: np.ndarray  # n x n x n x n, indexed [i, i', j, j']
    child_trace: np.ndarray  # n x n

    def max_abs(self):
        return max(
            np.abs(self.d0_identity).max(),
            abs(self.d0_trace),
            np.abs(self.child_identity).max(),
            np.abs(self.child_trace).max(),
        )


@dataclass(frozen=True)
class ColemanReport:
    occupations: np.ndarray
    hole_occupations: np.ndarray
    occupation_sum: float
    passed: bool


def d0_row_sizes(n, N):
    """Minimal row counts (rows_a, rows_c) for the reference pair."""
    return min(n, comb(n, N - 1)), min(n, comb(n, N + 1))


def child_row_sizes(n, N):
    """Minimal row counts (rows_a, rows_c) for the child column families."""
    return min(comb(n, 2), comb(n, N - 2)), min(n * n, comb(n, N))


def pair_tables(n):
    """Lookup tables for the antisymmetric child-A storage.

    Returns (pidx, sgn) with a(i)_j = sgn[i,j] * xa[:, pidx[i,j]] and
    sgn[i,i] = 0.
    """
    pidx = np.zeros((n, n), dtype=int)
    sgn = np.zeros((n, n))
    for p, (i, j) in enumerate(combinations(range(n), 2)):
        pidx[i, j] = pidx[j, i] = p
        sgn[i, j] = 1.0
        sgn[j, i] = -1.0
    return pidx, sgn


def pair_product(d, dp):
    """A.T A' + (C.T C').T, the matrix that the anti-commutation relation
    forces to be a multiple of the identity."""
    if d.n != dp.n:
        raise ValueError("orbital counts differ")
    if d.a.shape[0] != dp.a.shape[0] or d.c.shape[0] != dp.c.shape[0]:
        raise ValueError("row spaces are not compatible")
    return d.a.T @ dp.a + (d.c.T @ dp.c).T


def acmp_residuals(d):
    """(identity residual, particle-count residual) for a single pair."""
    r_id = pair_product(d, d) - d.tau * np.eye(d.n)
    r_n = float(np.trace(d.a.T @ d.a) - d.tau * d.N)
    return r_id, r_n


def expand_pair_gram(m, n):
    """Expand the stored-column Gram ``m`` (P x P) to the full antisymmetric
    four-index tensor t[i, i', j, j'] = <a(i)_j | a(i')_j'>."""
    pidx, sgn = pair_tables(n)
    t = m[pidx[:, None, :, None], pidx[None, :, None, :]]
    t = t * sgn[:, None, :, None] * sgn[None, :, None, :]
    return t


def _grams(s):
    g_a0 = s.d0.a.T @ s.d0.a
    g_c0 = s.d0.c.T @ s.d0.c
    t = expand_pair_gram(s.xa.T @ s.xa, s.n)
    n = s.n
    u = (s.xc.T @ s.xc).reshape(n, n, n, n).transpose(0, 2, 1, 3)
    return g_a0, g_c0, t, u


def set_residuals(s):
    """All constraint blocks: reference identity/trace plus, per orbital
    pair (i, i'), the child identity and child trace residuals."""
    n, N = s.n, s.N
    g_a0, g_c0, t, u = _grams(s)
    eye = np.eye(n)
    d0_id = g_a0 + g_c0.T - eye
    d0_tr = float(np.trace(g_a0) - N)
    # child pair product: t[i,i',j,j'] + <c(i)_j' | c(i')_j> must equal
    # <a0_i|a0_i'> delta_{jj'}
    child_id = (
        t
        + u.transpose(0, 1, 3, 2)
        - g_a0[:, :, None, None] * eye[None, None, :, :]
    )
    child_tr = np.einsum("abjj->ab", t) - (N - 1) * g_a0
    return SetResiduals(d0_id, d0_tr, child_id, child_tr)


def rdm1_from(s):
    """One-body density matrix: scalar products of the reference A columns."""
    return s.d0.a.T @ s.d0.a


def rdm2_from(s):
    """Two-body density tensor g2[i, i', j, j'] = <a(i)_j | a(i')_j'>."""
    return expand_pair_gram(s.xa.T @ s.xa, s.n)


def energy_of(s, ham):
    """Total energy from scalar products only."""
    if ham.n != s.n:
        raise ValueError("orbital counts differ")
    g1 = rdm1_from(s)
    g2 = rdm2_from(s)
    return float(np.sum(ham.h1 * g1) + np.sum(ham.h2 * g2))


def compact(d, rows_a=None, rows_c=None):
    """Gauge-equivalent pair with minimal row counts.

    The Gram matrices A.T A and C.T C are refactored (pivoted Cholesky with
    an eigenvalue square-root fallback), which preserves every scalar
    product observable.
    """
    if rows_a is None:
        rows_a = min(d.n, d.a.shape[0])
    if rows_c is None:
        rows_c = min(d.n, d.c.shape[0])
    a = psd_factor(d.a.T @ d.a, rows=rows_a)
    c = psd_factor(d.c.T @ d.c, rows=rows_c)
    return Acmp(a, c, d.n, d.N, d.tau)


def compact_set(s):
    """Compact the reference pair and both child column families."""
    n, N = s.n, s.N
    ra0, rc0 = d0_row_sizes(n, N)
    rca, rcc = child_row_sizes(n, N)
    d0 = compact(s.d0, rows_a=ra0, rows_c=rc0)
    xa = psd_factor(s.xa.T @ s.xa, rows=rca)
    xc = psd_factor(s.xc.T @ s.xc, rows=rcc)
    return AcmpSet(d0, xa, xc)


def coleman_check(d, tol=REPRESENTABILITY_TOL):
    """Occupation-number diagnostic for a normalized pair (tau == 1).

    Electron occupations are the squared singular values of A; they must
    lie in [0, 1], sum to N and mirror the hole occupations from C as
    1 - n_i.
    """
    if abs(d.tau - 1.0) > tol:
        raise ValueError("coleman_check expects a normalized pair")
    occ = np.linalg.eigvalsh(d.a.T @ d.a)[::-1]
    hole = np.linalg.eigvalsh(d.c.T @ d.c)[::-1]
    total = float(occ.sum())
    passed = bool(
        occ.min() >= -tol
        and occ.max() <= 1.0 + tol
        and abs(total - d.N) <= tol
        and np.abs(np.sort(hole) - np.sort(1.0 - occ)).max() <= tol
    )
    return ColemanReport(occ, hole, total, passed)


def gram_pair(s):
    """Overlap matrices of the stored child columns."""
    return GramPair(s.xa.T @ s.xa, s.xc.T @ s.xc)


def convex_mix(items):
    """Mixed-state AcmpSet from positively weighted sets with equal (n, N).

    The Gram matrices of every block are averaged and refactored; the ACMP
    conditions survive because they are linear in the Grams and positivity
    is preserved by convexity.
    """
    items = list(items)
    if not items:
        raise ValueError("need at least one set")
    weights = np.array([w for _, w in items], dtype=float)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to one")
    n, N = items[0][0].n, items[0][0].N
    for s, _ in items:
        if (s.n, s.N) != (n, N):
            raise ValueError("all sets must share (n, N)")
    g_a0 = sum(w * (s.d0.a.T @ s.d0.a) for s, w in items)
    g_c0 = sum(w * (s.d0.c.T @ s.d0.c) for s, w in items)
    s_a = sum(w * (s.xa.T @ s.xa) for s, w in items)
    s_c = sum(w * (s.xc.T @ s.xc) for s, w in items)
    # mixture Grams can exceed the pure-state ranks, so let the
    # factorization choose the row counts
    d0 = Acmp(psd_factor(g_a0), psd_factor(g_c0), n, N, 1.0)
    return AcmpSet(d0, psd_factor(s_a), psd_factor(s_c))


# --- binary container -------------------------------------------------------
#
# Little-endian layout:
#   magic   8 bytes  b"ACMPSET1"
#   header  6 x int64: n, N, rows_a0, rows_c0, rows_xa, rows_xc
#   tau     1 x float64
#   payload float64 column-major dumps of A0, C0, XA, XC in that order.

_SET_MAGIC = b"ACMPSET1"


def save_acmp_set(s, path):
    with open(path, "wb") as fh:
        fh.write(_set_bytes(s))


def _set_bytes(s):
    head = struct.pack(
        "<6q",
        s.n,
        s.N,
        s.d0.a.shape[0],
        s.d0.c.shape[0],
        s.xa.shape[0],
        s.xc.shape[0],
    )
    parts = [_SET_MAGIC, head, struct.pack("<d", s.d0.tau)]
    for m in (s.d0.a, s.d0.c, s.xa, s.xc):
        parts.append(np.asfortranarray(m).tobytes(order="F"))
    return b"".join(parts)


def load_acmp_set(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return _set_from_bytes(data)[0]


def _set_from_bytes(data, offset=0):
    if data[offset : offset + 8] != _SET_MAGIC:
        raise ValueError("not an ACMP set container")
    offset += 8
    n, N, ra0, rc0, rxa, rxc = struct.unpack_from("<6q", data, offset)
    offset += 48
    (tau,) = struct.unpack_from("<d", data, offset)
    offset += 8
    mats = []
    for rows, cols in ((ra0, n), (rc0, n), (rxa, comb(n, 2)), (rxc, n * n)):
        count = rows * cols
        m = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        mats.append(m.reshape((rows, cols), order="F").copy())
    d0 = Acmp(mats[0], mats[1], n, N, tau)
    return AcmpSet(d0, mats[2], mats[3]), offset
