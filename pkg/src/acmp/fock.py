"""Exact second-quantization machinery: determinant bases, operator
application with phases, full-CI ground states, brute-force density
matrices, and exact ACMP construction from wavefunctions.

Orbitals are numbered 1..n in the public API; a determinant is the n-bit
mask of its occupied orbitals (orbital i <-> bit i-1).  The phase of an
operator application counts occupied orbitals with a strictly greater
index, which makes |i1,...,iN> = c+_{iN} ... c+_{i1} |0> hold with a plus
sign for ascending index lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .core import Acmp, AcmpSet, pair_tables

__all__ = [
    "Determinant",
    "DeterminantBasis",
    "Wavefunction",
    "apply_annihilation",
    "apply_creation",
    "annihilation_matrices",
    "build_hamiltonian_matrix",
    "ground_state",
    "rdm1_of",
    "rdm2_of",
    "acmp_from_wavefunction",
    "acmp_set_from_wavefunction",
    "DimensionGuardError",
]

DENSE_DIMENSION_GUARD = 20_000


class DimensionGuardError(RuntimeError):
    """Requested sector is too large for a dense eigensolve."""


@dataclass(frozen=True)
class Determinant:
    """Occupation bitmask over n orbitals."""

    mask: int
    n: int

    @classmethod
    def from_occ(cls, occ, n):
        mask = 0
        for i in occ:
            if not 1 <= i <= n:
                raise ValueError(f"orbital {i} outside 1..{n}")
            mask |= 1 << (i - 1)
        return cls(mask, n)

    @property
    def occ(self):
        return {i + 1 for i in range(self.n) if self.mask >> i & 1}

    @property
    def particles(self):
        return int.bit_count(self.mask)


def _phase_above(mask, i):
    """(-1)**(number of occupied orbitals with index > i), i one-based."""
    return -1 if int.bit_count(mask >> i) & 1 else 1


def apply_annihilation(i, d):
    """a_i |d> -> (determinant, phase) or None if orbital i is empty."""
    if not 1 <= i <= d.n:
        raise ValueError(f"orbital {i} outside 1..{d.n}")
    bit = 1 << (i - 1)
    if not d.mask & bit:
        return None
    return Determinant(d.mask ^ bit, d.n), _phase_above(d.mask, i)


def apply_creation(i, d):
    """c+_i |d> -> (determinant, phase) or None if orbital i is occupied."""
    if not 1 <= i <= d.n:
        raise ValueError(f"orbital {i} outside 1..{d.n}")
    bit = 1 << (i - 1)
    if d.mask & bit:
        return None
    return Determinant(d.mask | bit, d.n), _phase_above(d.mask, i)


@dataclass(frozen=True)
class DeterminantBasis:
    """All C(n,N) determinants of a particle sector, ascending by bitmask."""

    n: int
    N: int
    masks: tuple = field(init=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.N <= self.n:
            raise ValueError("particle count outside 0..n")
        masks = sorted(
            sum(1 << (i - 1) for i in occ)
            for occ in combinations(range(1, self.n + 1), self.N)
        )
        object.__setattr__(self, "masks", tuple(masks))
        object.__setattr__(self, "_index", {m: k for k, m in enumerate(masks)})

    def __len__(self):
        return len(self.masks)

    def index(self, d):
        return self._index[d.mask if isinstance(d, Determinant) else d]

    def determinant(self, k):
        return Determinant(self.masks[k], self.n)


@dataclass(frozen=True)
class Wavefunction:
    basis: DeterminantBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (len(self.basis),):
            raise ValueError("coefficient length does not match basis")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.basis.n

    @property
    def N(self):
        return self.basis.N


def annihilation_matrices(basis, target=None):
    """Dense matrices O_i (i = 1..n) mapping sector N to sector N-1."""
    n, N = basis.n, basis.N
    if target is None:
        target = DeterminantBasis(n, N - 1)
    ops = np.zeros((n, len(target), len(basis)))
    for k, mask in enumerate(basis.masks):
        d = Determinant(mask, n)
        for i in range(1, n + 1):
            hit = apply_annihilation(i, d)
            if hit is not None:
                dd, ph = hit
                ops[i - 1, target.index(dd), k] = ph
    return ops


def build_hamiltonian_matrix(ham, basis):
    """Dense symmetric matrix of the Hamiltonian on one particle sector."""
    if ham.n != basis.n:
        raise ValueError("orbital counts differ")
    n, N = basis.n, basis.N
    dim = len(basis)
    mat = np.zeros((dim, dim))
    if N >= 1:
        lower = DeterminantBasis(n, N - 1)
        ops = annihilation_matrices(basis, lower)
        mat += np.einsum("ab,amk,bml->kl", ham.h1, ops, ops, optimize=True)
        if N >= 2:
            lower2 = DeterminantBasis(n, N - 2)
            ops2 = annihilation_matrices(lower, lower2)
            # c+_i c+_j a_j' a_i' = O_i.T O2_j.T O2_j' O_i'
            b = np.einsum("cxm,amk->caxk", ops2, ops, optimize=True)
            mat += np.einsum(
                "abcd,caxk,dbxl->kl", ham.h2, b, b, optimize=True
            )
    return mat


def ground_state(ham, n, N):
    """Lowest eigenpair of the dense sector Hamiltonian."""
    dim = comb(n, N)
    if dim > DENSE_DIMENSION_GUARD:
        raise DimensionGuardError(
            f"sector dimension {dim} exceeds the dense guard {DENSE_DIMENSION_GUARD}"
        )
    basis = DeterminantBasis(n, N)
    mat = build_hamiltonian_matrix(ham, basis)
    vals, vecs = np.linalg.eigh(mat)
    psi = vecs[:, 0]
    # fixed sign for reproducibility
    k = int(np.argmax(np.abs(psi)))
    if psi[k] < 0:
        psi = -psi
    return float(vals[0]), Wavefunction(basis, psi)


def _apply_string(ops, psi):
    """Apply a list of (kind, orbital) steps, rightmost first, to psi's
    determinant expansion; returns a dict mask -> coefficient."""
    n = psi.n
    vec = {m: c for m, c in zip(psi.basis.masks, psi.coeffs) if c != 0.0}
    for kind, i in reversed(ops):
        out = {}
        for mask, c in vec.items():
            hit = (
                apply_annihilation(i, Determinant(mask, n))
                if kind == "a"
                else apply_creation(i, Determinant(mask, n))
            )
            if hit is None:
                continue
            dd, ph = hit
            out[dd.mask] = out.get(dd.mask, 0.0) + ph * c
        vec = out
    return vec


def _overlap(psi, vec):
    return sum(psi.coeffs[psi.basis.index(m)] * c for m, c in vec.items())


def rdm1_of(psi):
    """<psi| c+_i a_i' |psi> by direct operator application."""
    n = psi.n
    g = np.zeros((n, n))
    for i in range(1, n + 1):
        for ip in range(1, n + 1):
            vec = _apply_string([("c", i), ("a", ip)], psi)
            g[i - 1, ip - 1] = _overlap(psi, vec)
    return g


def rdm2_of(psi):
    """<psi| c+_i c+_j a_j' a_i' |psi>, indexed g2[i, i', j, j']."""
    n = psi.n
    g2 = np.zeros((n, n, n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if j == i:
                continue
            for ip in range(1, n + 1):
                for jp in range(1, n + 1):
                    if jp == ip:
                        continue
                    vec = _apply_string(
                        [("c", i), ("c", j), ("a", jp), ("a", ip)], psi
                    )
                    g2[i - 1, ip - 1, j - 1, jp - 1] = _overlap(psi, vec)
    return g2


def _column(vec, basis):
    col = np.zeros(len(basis))
    for mask, c in vec.items():
        col[basis.index(mask)] = c
    return col


def acmp_from_wavefunction(psi):
    """Exact pair: column j of A is a_j|psi> in the (N-1) sector, column j
    of C is c+_j|psi> in the (N+1) sector."""
    n, N = psi.n, psi.N
    if N == 0 or N == n:
        raise ValueError("need 0 < N < n for both sectors to exist")
    lower = DeterminantBasis(n, N - 1)
    upper = DeterminantBasis(n, N + 1)
    a = np.zeros((len(lower), n))
    c = np.zeros((len(upper), n))
    for j in range(1, n + 1):
        a[:, j - 1] = _column(_apply_string([("a", j)], psi), lower)
        c[:, j - 1] = _column(_apply_string([("c", j)], psi), upper)
    return Acmp(a, c, n, N, float(psi.coeffs @ psi.coeffs))


def acmp_set_from_wavefunction(psi):
    """Exact set: reference pair plus child columns a_j a_i |psi> (i < j)
    and c+_j a_i |psi> (all i, j)."""
    n, N = psi.n, psi.N
    if N < 2:
        raise ValueError("children need at least two particles")
    d0 = acmp_from_wavefunction(psi)
    low2 = DeterminantBasis(n, N - 2)
    same = DeterminantBasis(n, N)
    pidx, _ = pair_tables(n)
    xa = np.zeros((len(low2), comb(n, 2)))
    xc = np.zeros((len(same), n * n))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            vec = _apply_string([("a", j), ("a", i)], psi)
            xa[:, pidx[i - 1, j - 1]] = _column(vec, low2)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            vec = _apply_string([("c", j), ("a", i)], psi)
            xc[:, (i - 1) * n + (j - 1)] = _column(vec, same)
    return AcmpSet(d0, xa, xc)
