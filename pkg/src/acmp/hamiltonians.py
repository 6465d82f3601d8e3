"""Two-body fermionic Hamiltonians: construction, validation and file I/O.

A Hamiltonian over ``n`` orbitals is a pair (h1, h2) of real coefficient
arrays for the operator

    sum_{ii'} h1[i,i'] c+_i a_{i'}
  + sum_{ii'jj'} h2[i,i',j,j'] c+_i c+_j a_{j'} a_{i'}

The two-body tensor is indexed ``h2[i, i', j, j']`` (outer pair first) and
carries two symmetries in the real case: hermiticity
``h2[i,i',j,j'] == h2[i',i,j',j]`` and pair swap
``h2[i,i',j,j'] == h2[j,j',i,i']``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Hamiltonian",
    "HamiltonianFormatError",
    "random_hamiltonian",
    "validate_hamiltonian",
    "embed_one_body",
    "save_hamiltonian",
    "load_hamiltonian",
]

_MAGIC = "ACMPH v1"


class HamiltonianFormatError(ValueError):
    """Raised when a Hamiltonian file cannot be parsed."""


@dataclass(frozen=True)
class Hamiltonian:
    """One-body matrix plus two-body tensor over n orbitals."""

    n: int
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = np.asarray(self.h1, dtype=float)
        h2 = np.asarray(self.h2, dtype=float)
        if h1.shape != (self.n, self.n):
            raise ValueError(f"h1 shape {h1.shape} does not match n={self.n}")
        if h2.shape != (self.n,) * 4:
            raise ValueError(f"h2 shape {h2.shape} does not match n={self.n}")
        h1.flags.writeable = False
        h2.flags.writeable = False
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)


def _symmetrize_two_body(g: np.ndarray) -> np.ndarray:
    """Project a raw tensor onto the symmetry group of valid h2 tensors."""
    return 0.25 * (
        g
        + g.transpose(1, 0, 3, 2)
        + g.transpose(2, 3, 0, 1)
        + g.transpose(3, 2, 1, 0)
    )


def random_hamiltonian(n, seed, one_body_scale=1.0, two_body_scale=1.0):
    """Seeded random Hamiltonian with all invariants satisfied exactly.

    Entries are drawn uniform in [-scale, scale] and then symmetrized.
    Deterministic for a fixed seed.
    """
    if n < 2:
        raise ValueError("need at least two orbitals")
    rng = np.random.default_rng(seed)
    g1 = rng.uniform(-one_body_scale, one_body_scale, size=(n, n))
    g2 = rng.uniform(-two_body_scale, two_body_scale, size=(n, n, n, n))
    h1 = 0.5 * (g1 + g1.T)
    h2 = _symmetrize_two_body(g2)
    return Hamiltonian(n, h1, h2)


def validate_hamiltonian(ham, tol=1e-12):
    """Return a list of human-readable invariant violations (empty if valid)."""
    violations = []
    if not np.all(np.isfinite(ham.h1)):
        violations.append("h1 contains non-finite entries")
    if not np.all(np.isfinite(ham.h2)):
        violations.append("h2 contains non-finite entries")
    d1 = ham.h1 - ham.h1.T
    if np.abs(d1).max() > tol:
        i, j = np.unravel_index(np.abs(d1).argmax(), d1.shape)
        violations.append(f"h1 not symmetric at ({i + 1},{j + 1})")
    dh = ham.h2 - ham.h2.transpose(1, 0, 3, 2)
    if np.abs(dh).max() > tol:
        idx = np.unravel_index(np.abs(dh).argmax(), dh.shape)
        violations.append(
            "h2 hermiticity broken at " + str(tuple(k + 1 for k in idx))
        )
    dp = ham.h2 - ham.h2.transpose(2, 3, 0, 1)
    if np.abs(dp).max() > tol:
        idx = np.unravel_index(np.abs(dp).argmax(), dp.shape)
        violations.append(
            "h2 pair-swap symmetry broken at " + str(tuple(k + 1 for k in idx))
        )
    return violations


def embed_one_body(ham, N):
    """Shift a piece of the two-body tensor into the one-body matrix.

    Returns an equivalent Hamiltonian (h', H') whose action on the
    N-particle sector is identical:

        hbar[i,i']   = 1/(2n) * sum_j h2[i,i',j,j]
        h'           = h1 + hbar
        H'[i,i',j,j'] = h2[i,i',j,j']
                        - 1/(2(N-1)) * (hbar[i,i'] d_{jj'} + hbar[j,j'] d_{ii'})

    The compensation uses the sector identity
    sum_i c+_i c+_j a_{j'} a_i = (N-1) c+_j a_{j'}, so the total energy of
    any N-particle state is unchanged while the one-body part gains
    amplitude.
    """
    if N < 2:
        raise ValueError("embedding needs at least two particles")
    n = ham.n
    hbar = np.einsum("abjj->ab", ham.h2) / (2.0 * n)
    eye = np.eye(n)
    h1p = ham.h1 + hbar
    corr = (
        hbar[:, :, None, None] * eye[None, None, :, :]
        + eye[:, :, None, None] * hbar[None, None, :, :]
    )
    h2p = ham.h2 - corr / (2.0 * (N - 1))
    return Hamiltonian(n, h1p, h2p)


def save_hamiltonian(ham, path):
    """Write the UTF-8 text format (zero entries omitted)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"n {ham.n}\n")
        for i in range(ham.n):
            for ip in range(ham.n):
                v = ham.h1[i, ip]
                if v != 0.0:
                    fh.write(f"h1 {i + 1} {ip + 1} {v:.17g}\n")
        nz = np.argwhere(ham.h2 != 0.0)
        for i, ip, j, jp in nz:
            fh.write(
                f"h2 {i + 1} {ip + 1} {j + 1} {jp + 1} {ham.h2[i, ip, j, jp]:.17g}\n"
            )


def load_hamiltonian(path):
    """Parse the text format; symmetry-completes entries, then validates."""
    with open(path, "r", encoding="utf-8") as fh:
        return _parse(fh, str(path))


def _parse(fh: io.TextIOBase, name: str) -> Hamiltonian:
    first = fh.readline().strip()
    if first != _MAGIC:
        raise HamiltonianFormatError(f"{name}:1: expected '{_MAGIC}' header")
    second = fh.readline().split()
    if len(second) != 2 or second[0] != "n":
        raise HamiltonianFormatError(f"{name}:2: expected 'n <int>' line")
    try:
        n = int(second[1])
    except ValueError as exc:
        raise HamiltonianFormatError(f"{name}:2: bad orbital count") from exc
    if n < 1:
        raise HamiltonianFormatError(f"{name}:2: orbital count must be positive")
    h1 = np.zeros((n, n))
    h2 = np.zeros((n, n, n, n))
    for lineno, raw in enumerate(fh, start=3):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "h1" and len(parts) == 4:
                i, ip = (int(p) - 1 for p in parts[1:3])
                v = float(parts[3])
                _check_range(name, lineno, n, i, ip)
                h1[i, ip] = h1[ip, i] = v
            elif parts[0] == "h2" and len(parts) == 6:
                i, ip, j, jp = (int(p) - 1 for p in parts[1:5])
                v = float(parts[5])
                _check_range(name, lineno, n, i, ip, j, jp)
                h2[i, ip, j, jp] = v
                h2[ip, i, jp, j] = v
                h2[j, jp, i, ip] = v
                h2[jp, j, ip, i] = v
            else:
                raise HamiltonianFormatError(
                    f"{name}:{lineno}: unrecognized record {parts[0]!r}"
                )
        except (ValueError, IndexError) as exc:
            if isinstance(exc, HamiltonianFormatError):
                raise
            raise HamiltonianFormatError(
                f"{name}:{lineno}: malformed entry {line!r}"
            ) from exc
    ham = Hamiltonian(n, h1, h2)
    problems = validate_hamiltonian(ham)
    if problems:
        raise HamiltonianFormatError(f"{name}: inconsistent entries: {problems}")
    return ham


def _check_range(name, lineno, n, *indices):
    for k in indices:
        if not 0 <= k < n:
            raise HamiltonianFormatError(
                f"{name}:{lineno}: orbital index {k + 1} outside 1..{n}"
            )
