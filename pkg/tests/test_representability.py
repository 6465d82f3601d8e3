"""Two-hole (Q) and two-particle-one-hole (T2) positivity conditions."""

import numpy as np
import pytest

from acmp import fock
from acmp.representability import q_matrix, q_negativity, t2_matrix, t2_negativity

from conftest import random_wavefunction


def oracle_q_matrix(psi):
    """<a_i a_j a+_j' a+_i'> computed directly in Fock space."""
    n = psi.n
    q = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for jp in range(n):
                for ip in range(n):
                    vec = fock._apply_string(
                        [("a", i + 1), ("a", j + 1), ("c", jp + 1), ("c", ip + 1)], psi
                    )
                    q[i, ip, j, jp] = fock._overlap(psi, vec)
    return q.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def oracle_t2_matrix(psi):
    """<{a+_i a+_j a_k, a+_n a_m a_l}> computed directly in Fock space."""
    n = psi.n
    t = np.zeros((n, n, n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for ll in range(n):
                    for m in range(n):
                        for nn in range(n):
                            x = fock._apply_string(
                                [("c", i + 1), ("c", j + 1), ("a", k + 1),
                                 ("c", nn + 1), ("a", m + 1), ("a", ll + 1)], psi
                            )
                            y = fock._apply_string(
                                [("c", nn + 1), ("a", m + 1), ("a", ll + 1),
                                 ("c", i + 1), ("c", j + 1), ("a", k + 1)], psi
                            )
                            t[i, j, k, ll, m, nn] = fock._overlap(psi, x) + fock._overlap(psi, y)
    return t.reshape(n**3, n**3)


def test_q_matrix_matches_oracle():
    psi = random_wavefunction(4, 2, 0)
    q = q_matrix(fock.rdm1_of(psi), fock.rdm2_of(psi))
    assert np.abs(q - oracle_q_matrix(psi)).max() <= 1e-12


def test_t2_matrix_matches_oracle():
    psi = random_wavefunction(3, 2, 1)
    t2 = t2_matrix(fock.rdm1_of(psi), fock.rdm2_of(psi))
    assert np.abs(t2 - oracle_t2_matrix(psi)).max() <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_q_and_t2_nonnegative_on_states(seed):
    """Pure-state densities satisfy both conditions exactly, so the
    penalties vanish."""
    psi = random_wavefunction(5, 3, seed)
    g1, g2 = fock.rdm1_of(psi), fock.rdm2_of(psi)
    assert np.linalg.eigvalsh(q_matrix(g1, g2)).min() >= -1e-12
    assert np.linalg.eigvalsh(t2_matrix(g1, g2)).min() >= -1e-12
    assert q_negativity(g1, g2)[0] <= 1e-24
    assert t2_negativity(g1, g2)[0] <= 1e-24


def test_q_negativity_gradient():
    """The effective tensors are the exact derivatives of the penalty with
    respect to the densities."""
    rng = np.random.default_rng(4)
    n = 3
    psi = random_wavefunction(n, 2, 5)
    g1 = fock.rdm1_of(psi) + 0.2 * _sym2(rng, n)
    g2 = fock.rdm2_of(psi) + 0.2 * _sym4(rng, n)
    pen, h_eff, h2_eff = q_negativity(g1, g2)
    assert pen > 0.0
    eps = 1e-6
    for _ in range(5):
        d1, d2 = _sym2(rng, n), _sym4(rng, n)
        plus = q_negativity(g1 + eps * d1, g2 + eps * d2)[0]
        minus = q_negativity(g1 - eps * d1, g2 - eps * d2)[0]
        fd = (plus - minus) / (2 * eps)
        analytic = float(np.sum(h_eff * d1) + np.sum(h2_eff * d2))
        assert analytic == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_t2_negativity_gradient():
    rng = np.random.default_rng(7)
    n = 3
    psi = random_wavefunction(n, 2, 8)
    g1 = fock.rdm1_of(psi) + 0.2 * _sym2(rng, n)
    g2 = fock.rdm2_of(psi) + 0.2 * _sym4(rng, n)
    pen, h_eff, h2_eff = t2_negativity(g1, g2)
    assert pen > 0.0
    eps = 1e-6
    for _ in range(5):
        d1, d2 = _sym2(rng, n), _sym4(rng, n)
        plus = t2_negativity(g1 + eps * d1, g2 + eps * d2)[0]
        minus = t2_negativity(g1 - eps * d1, g2 - eps * d2)[0]
        fd = (plus - minus) / (2 * eps)
        analytic = float(np.sum(h_eff * d1) + np.sum(h2_eff * d2))
        assert analytic == pytest.approx(fd, rel=1e-4, abs=1e-9)


def _sym2(rng, n):
    m = rng.standard_normal((n, n))
    return 0.5 * (m + m.T)


def _sym4(rng, n):
    m = rng.standard_normal((n, n, n, n))
    m = 0.5 * (m + m.transpose(1, 0, 3, 2))
    return 0.5 * (m + m.transpose(2, 3, 0, 1))
