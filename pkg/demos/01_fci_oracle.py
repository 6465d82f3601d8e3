"""
Exact diagonalization oracle
============================

Everything downstream is checked against full CI: build a random two-body
Hamiltonian, diagonalize it in the fixed-particle-number determinant basis,
and confirm that contracting the 1- and 2-RDMs against the integrals
reproduces the ground-state energy.
"""

import numpy as np

from acmp import fock
from acmp.hamiltonians import random_hamiltonian

n, N, seed = 5, 2, 0
ham = random_hamiltonian(n, seed)

# Dense eigensolve in the C(n, N)-dimensional sector.
energy, psi = fock.ground_state(ham, n, N)
print(f"n={n}, N={N}, seed={seed}")
print(f"ground-state energy   E = {energy:+.12f}")

# The same energy must come out of the reduced density matrices
# (the symmetry factor is folded into the stored two-body tensor):
#   E = sum_ij h1[i,j] <c_i^+ c_j> + sum h2[i,j,k,l] g2[i,j,k,l]
g1 = fock.rdm1_of(psi)
g2 = fock.rdm2_of(psi)
from_rdms = np.einsum("ij,ij->", ham.h1, g1) + np.einsum("ijkl,ijkl->", ham.h2, g2)
print(f"energy from RDMs        = {from_rdms:+.12f}")
print(f"difference              = {abs(energy - from_rdms):.2e}")

# Occupation numbers (eigenvalues of the 1-RDM) obey 0 <= n_i <= 1 and
# sum to the particle count.
occ = np.linalg.eigvalsh(g1)
print(f"natural occupations     = {np.round(occ, 6)}")
print(f"sum of occupations      = {occ.sum():.12f} (expected {N})")
