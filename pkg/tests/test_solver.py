"""Solver pipeline: initial guess, Newton-Krylov, warm starts, checkpoints."""

import numpy as np
import pytest

from acmp import fock
from acmp.core import compact_set, energy_of, set_residuals
from acmp.hamiltonians import random_hamiltonian
from acmp.lagrangian import FlatLayout, Multipliers, SolveState, lagrangian_gradient
from acmp.solver import (
    SolverOptions,
    initial_guess,
    load_checkpoint,
    multiplier_fit,
    newton_krylov,
    save_checkpoint,
    solve,
)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(max_outer=0)
    with pytest.raises(ValueError):
        SolverOptions(gradient_tolerance=-1.0)


def test_initial_guess_is_feasible():
    ham = random_hamiltonian(5, 0)
    state = initial_guess(ham, 5, 2)
    assert set_residuals(state.set).max_abs() <= 1e-10


def test_newton_krylov_on_polynomial_system():
    # simple well-conditioned root problem: x_i^3 + x_i - c_i = 0
    c = np.array([1.0, -2.0, 0.5])

    def F(x):
        return x**3 + x - c

    result = newton_krylov(F, np.zeros(3), SolverOptions(max_outer=50))
    assert result.converged
    assert np.abs(F(result.x)).max() <= 1e-10


def test_multiplier_fit_stationary_at_eigenstate():
    n, N = 5, 2
    ham = random_hamiltonian(n, 1)
    _, psi = fock.ground_state(ham, n, N)
    s = compact_set(fock.acmp_set_from_wavefunction(psi))
    fit = multiplier_fit(s, ham)
    assert fit.residual <= 1e-9
    g = lagrangian_gradient(SolveState(s, fit.multipliers), ham)
    assert np.abs(g).max() <= 1e-9


def test_warm_start_converges_immediately():
    """Starting from the oracle state, the root-finder has nothing to do."""
    n, N = 5, 2
    ham = random_hamiltonian(n, 2)
    e0, psi = fock.ground_state(ham, n, N)
    s = compact_set(fock.acmp_set_from_wavefunction(psi))
    fit = multiplier_fit(s, ham)
    report = solve(ham, n, N, start=SolveState(s, fit.multipliers))
    assert report.iterations == 0
    assert report.converged
    assert abs(report.energy - e0) <= 1e-10


def test_solve_small_sector():
    ham = random_hamiltonian(3, 0, two_body_scale=0.1)
    report = solve(ham, 3, 2)
    assert report.energy_error is not None
    assert report.energy_error <= 1e-8
    assert report.rdm1_error <= 1e-4
    assert report.residual_child_identity <= 1e-7


def test_solve_reports_reference_scalar():
    ham = random_hamiltonian(3, 1, two_body_scale=0.1)
    report = solve(ham, 3, 2, reference=-1.25)
    assert report.reference_energy == -1.25
    assert report.rdm1_error is None


def test_solve_without_reference():
    ham = random_hamiltonian(3, 1, two_body_scale=0.1)
    report = solve(ham, 3, 2, reference=False)
    assert report.reference_energy is None
    assert report.energy_error is None


def test_checkpoint_roundtrip(tmp_path):
    ham = random_hamiltonian(4, 3)
    state = initial_guess(ham, 4, 2)
    path = tmp_path / "state.ckpt"
    save_checkpoint(state, path)
    back = load_checkpoint(path)
    layout = FlatLayout.of_state(state)
    assert np.array_equal(layout.pack(back), layout.pack(state))


def test_sector_validation():
    ham = random_hamiltonian(4, 0)
    with pytest.raises(ValueError):
        initial_guess(ham, 4, 1)  # children need two particles
    with pytest.raises(ValueError):
        solve(ham, 4, 4)
