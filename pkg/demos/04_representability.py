"""
N-representability diagnostics
==============================

A pair (1-RDM, 2-RDM) that satisfies the anti-commutation constraints need
not come from an actual N-fermion state.  Two standard necessary
conditions are checked here: the Coleman occupation bounds on the 1-RDM
and positive semidefiniteness of the two-hole (Q) and particle-hole (T2)
matrices.  Exact eigenstates pass all of them; the solver's feasible set
only enforces them approximately, which is the source of the residual
energy error at mid-filling.
"""

import numpy as np

from acmp import fock
from acmp.core import coleman_check, convex_mix, rdm1_from, rdm2_from
from acmp.hamiltonians import random_hamiltonian
from acmp.representability import q_negativity, t2_negativity

n, N = 6, 3
ham = random_hamiltonian(n, seed=0)
_, psi = fock.ground_state(ham, n, N)
s = fock.acmp_set_from_wavefunction(psi)

g1, g2 = rdm1_from(s), rdm2_from(s)
rep = coleman_check(s.d0)
print(f"occupations in [0,1]: {rep.passed}, sum = {rep.occupation_sum:.12f}")
print(f"Q-matrix negativity   {q_negativity(g1, g2)[0]:.2e}  (0 for a real state)")
print(f"T2-matrix negativity  {t2_negativity(g1, g2)[0]:.2e}")

# Convex mixtures of sets in the same sector stay representable as
# ensembles; the mixture machinery produces a set whose Grams are the
# weighted sums.
_, psi_b = fock.ground_state(random_hamiltonian(n, seed=1), n, N)
s_b = fock.acmp_set_from_wavefunction(psi_b)
mix = convex_mix([(s, 0.7), (s_b, 0.3)])
g1m, g2m = rdm1_from(mix), rdm2_from(mix)
print(f"mixture occupation sum {coleman_check(mix.d0).occupation_sum:.12f}")
print(f"mixture Q negativity   {q_negativity(g1m, g2m)[0]:.2e}")
print(f"mixture 1-RDM is the weighted sum: "
      f"{np.abs(g1m - 0.7 * g1 - 0.3 * rdm1_from(s_b)).max():.2e}")
