"""Acceptance gate: the ten numbered criteria, one test each.

Each test prints its verdict to the live terminal (capture disabled) so a
plain ``pytest -v`` run shows PASS/FAIL per criterion with the measured
numbers.  The Table-I-scale sweeps are shared between criteria through
module-scoped fixtures.
"""

import time
import warnings

import numpy as np
import pytest

from acmp import fock
from acmp.core import (
    Acmp,
    AcmpSet,
    compact,
    compact_set,
    energy_of,
    pair_product,
    rdm1_from,
    rdm2_from,
)
from acmp.hamiltonians import embed_one_body, random_hamiltonian
from acmp.lagrangian import (
    FlatLayout,
    Multipliers,
    SolveState,
    grad_check,
    lagrangian_gradient,
)
from acmp.solver import SolverOptions, multiplier_fit, solve

from conftest import random_wavefunction

# the random ensemble for the Table-I-scale runs: moderately correlated
# two-body amplitudes.  The solver handles stronger coupling on many
# sectors, but the accuracy claims below are made for this ensemble.
TABLE_SCALE = 0.1


@pytest.fixture(scope="module")
def verdict(request):
    """Print criterion verdicts straight to the terminal."""
    capmanager = request.config.pluginmanager.getplugin("capturemanager")

    def emit(num, passed, detail):
        tag = "PASS" if passed else "FAIL"
        with capmanager.global_and_fixture_disabled():
            print(f"\n[acceptance {num}] {tag}: {detail}")
        assert passed, f"criterion {num}: {detail}"

    return emit


def _solve_sweep(n, N, seeds, **options):
    opts = SolverOptions(**options)
    t0 = time.perf_counter()
    reports = []
    for seed in seeds:
        ham = random_hamiltonian(n, seed, two_body_scale=TABLE_SCALE)
        reports.append(solve(ham, n, N, opts))
    return reports, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep_5_2():
    return _solve_sweep(5, 2, range(10))


@pytest.fixture(scope="module")
def sweep_7_4():
    # lighter inner budget: this sector is the wall-clock heavy one and
    # reaches the required accuracy well before full inner convergence
    return _solve_sweep(7, 4, range(10), penalty_inner=2500)


def test_criterion_1_oracle_self_consistency(verdict):
    """Energy from RDM contraction matches the dense eigenvalue."""
    t0 = time.perf_counter()
    worst = 0.0
    for n in (3, 4, 5, 6):
        for seed in range(5):
            ham = random_hamiltonian(n, seed)
            for N in range(1, n):
                energy, psi = fock.ground_state(ham, n, N)
                contracted = float(
                    np.sum(ham.h1 * fock.rdm1_of(psi)) + np.sum(ham.h2 * fock.rdm2_of(psi))
                )
                worst = max(worst, abs(contracted - energy))
    elapsed = time.perf_counter() - t0
    verdict(
        1,
        worst <= 1e-10 and elapsed < 30.0,
        f"max |E_contracted - E_dense| = {worst:.2e} (<= 1e-10), {elapsed:.1f} s (< 30 s)",
    )


def test_criterion_2_acmp_necessity(verdict):
    """A^T A' + (C^T C')^T = <psi|psi'> I and Tr(A^T A') = <psi|psi'> N."""
    worst = 0.0
    pairs = 0
    for n in range(3, 7):
        for N in range(1, n):
            for k in range(50):
                psi = random_wavefunction(n, N, 1000 * n + 10 * N + k)
                phi = random_wavefunction(n, N, 777 + 1000 * n + 10 * N + k)
                d = fock.acmp_from_wavefunction(psi)
                dp = fock.acmp_from_wavefunction(phi)
                overlap = float(psi.coeffs @ phi.coeffs)
                worst = max(
                    worst,
                    float(np.abs(pair_product(d, dp) - overlap * np.eye(n)).max()),
                    abs(float(np.trace(d.a.T @ dp.a)) - overlap * N),
                )
                pairs += 1
    verdict(2, worst <= 1e-12, f"max identity/trace deviation over {pairs} pairs = {worst:.2e} (<= 1e-12)")


def test_criterion_3_rdm2_reconstruction(verdict):
    sectors = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (5, 4), (6, 2), (6, 3), (6, 4), (6, 5)]
    worst = 0.0
    count = 0
    for n, N in sectors:
        for seed in range(2):
            psi = random_wavefunction(n, N, seed)
            s = fock.acmp_set_from_wavefunction(psi)
            worst = max(worst, float(np.abs(rdm2_from(s) - fock.rdm2_of(psi)).max()))
            count += 1
    verdict(3, worst <= 1e-12, f"max 2-RDM deviation over {count} states = {worst:.2e} (<= 1e-12)")


def test_criterion_4_gauge_and_compaction_invariance(verdict):
    worst = 0.0
    rng = np.random.default_rng(0)
    for n, N, seed in [(5, 2, 0), (5, 3, 1), (6, 3, 2)]:
        psi = random_wavefunction(n, N, seed)
        s = fock.acmp_set_from_wavefunction(psi)
        ham = random_hamiltonian(n, seed)

        def rot(m):
            q, _ = np.linalg.qr(rng.standard_normal((m.shape[0], m.shape[0])))
            return q @ m

        gauged = AcmpSet(
            Acmp(rot(s.d0.a), rot(s.d0.c), n, N, s.d0.tau), rot(s.xa), rot(s.xc)
        )
        sc = compact_set(s)
        for other in (gauged, sc):
            worst = max(
                worst,
                abs(energy_of(other, ham) - energy_of(s, ham)),
                float(np.abs(rdm2_from(other) - rdm2_from(s)).max()),
            )
    verdict(4, worst <= 1e-10, f"max energy/2-RDM change under gauge+compaction = {worst:.2e} (<= 1e-10)")


def test_criterion_5_embedding_invariance(verdict):
    worst = 0.0
    for seed in range(10):
        n = 4 + seed % 3
        N = 2 + seed % 2
        ham = random_hamiltonian(n, seed)
        emb = embed_one_body(ham, N)
        e0, _ = fock.ground_state(ham, n, N)
        e1, _ = fock.ground_state(emb, n, N)
        worst = max(worst, abs(e1 - e0))
    verdict(5, worst <= 1e-10, f"max embedded-vs-original full-CI gap over 10 seeds = {worst:.2e} (<= 1e-10)")


def test_criterion_6_gradient_correctness(verdict):
    worst = 0.0
    for seed in range(5):
        n, N = 4, 2
        ham = random_hamiltonian(n, seed)
        s = compact_set(fock.acmp_set_from_wavefunction(random_wavefunction(n, N, seed)))
        layout = FlatLayout.of_state(SolveState(s, Multipliers.zeros(n)))
        state = layout.unpack(np.random.default_rng(seed).standard_normal(layout.size))
        for symmetrized in (False, True):
            report = grad_check(state, ham, count=100, symmetrized=symmetrized, seed=seed)
            worst = max(worst, report.max_rel_error)
    verdict(6, worst <= 1e-6, f"max relative gradient error, both Lagrangians, 5 seeds = {worst:.2e} (<= 1e-6)")


def test_criterion_7_table_scale_energies(verdict, sweep_5_2, sweep_7_4):
    lines = []
    ok = True

    def sector(label, reports, elapsed, bound, aggregate):
        nonlocal ok
        errs = [abs(r.energy_error) for r in reports]
        value = float(np.mean(errs)) if aggregate == "mean" else max(errs)
        good = value <= bound and elapsed < 600.0
        ok = ok and good
        lines.append(f"{label}: {aggregate} err {value:.2e} (<= {bound:g}), {elapsed:.0f} s (< 600 s)")

    reports, elapsed = _solve_sweep(3, 2, [0])
    sector("n=3 N=2", reports, elapsed, 1e-8, "max")
    reports, elapsed = _solve_sweep(9, 8, [0])
    sector("n=9 N=8", reports, elapsed, 1e-8, "max")
    sector("n=5 N=2", *sweep_5_2, 5e-3, "mean")
    sector("n=7 N=4", *sweep_7_4, 1e-2, "mean")
    iteration_ok = all(r.iterations <= 200 for r in sweep_5_2[0] + sweep_7_4[0])
    ok = ok and iteration_ok
    verdict(7, ok, "; ".join(lines) + f"; all within 200 iterations: {iteration_ok}")


def test_criterion_8_warm_start_accuracy(verdict):
    # Known red: at mid-filling sectors the exact eigenstate is not a
    # stationary point of this Lagrangian (the feasible set relaxes the
    # N-representable one and admits lower energies), so a warm-started
    # solve walks away from it.  Near-filling and two-particle sectors
    # hold the 1e-6 claim.  See the per-sector numbers in the verdict.
    rows = []
    worst = 0.0
    for n, N, seed in [
        (3, 2, 0),
        (4, 2, 0),
        (5, 2, 0),
        (5, 3, 1),
        (6, 3, 0),
        (6, 4, 2),
        (7, 4, 1),
        (7, 6, 0),
    ]:
        ham = random_hamiltonian(n, seed)
        e0, psi = fock.ground_state(ham, n, N)
        s = compact_set(fock.acmp_set_from_wavefunction(psi))
        fit = multiplier_fit(s, ham)
        report = solve(ham, n, N, start=SolveState(s, fit.multipliers))
        err = max(
            abs(report.energy - e0),
            float(np.abs(rdm1_from(report.state.set) - fock.rdm1_of(psi)).max()),
            float(np.abs(rdm2_from(report.state.set) - fock.rdm2_of(psi)).max()),
        )
        rows.append(f"({n},{N})={err:.1e}")
        worst = max(worst, err)
    verdict(
        8,
        worst <= 1e-6,
        f"max warm-start energy/RDM error for n<=7 = {worst:.2e} (<= 1e-6); "
        + " ".join(rows),
    )


def test_criterion_9_upper_bound(verdict, sweep_5_2):
    reports, _ = sweep_5_2
    converged = [r for r in reports if r.converged]
    margins = [r.energy - r.reference_energy for r in converged]
    worst = min(margins) if margins else float("nan")
    passed = len(converged) > 0 and all(m >= -1e-9 for m in margins)
    verdict(
        9,
        passed,
        f"{len(converged)}/10 converged, min(E - E_FCI) = {worst:.2e} (>= -1e-9)",
    )


def test_criterion_10_gradient_scaling(verdict):
    """Soft criterion: log-log slope of gradient cost vs n, expected O(n^6)."""
    sizes = (6, 8, 10, 12, 14)
    times = []
    rng = np.random.default_rng(0)
    for n in sizes:
        N = n // 2
        pairs = n * (n - 1) // 2
        s = AcmpSet(
            Acmp(rng.standard_normal((n, n)), rng.standard_normal((n, n)), n, N),
            rng.standard_normal((pairs, pairs)),
            rng.standard_normal((n * n, n * n)),
        )
        mult = Multipliers(
            rng.standard_normal((n, n)),
            rng.standard_normal((n, n, n, n)),
            0.1,
            rng.standard_normal((n, n)),
        )
        ham = random_hamiltonian(n, 0)
        state = SolveState(s, mult)
        lagrangian_gradient(state, ham)  # warm up
        reps = 5
        best = min(
            _timed(lagrangian_gradient, state, ham) for _ in range(reps)
        )
        times.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    in_range = 5.0 <= slope <= 7.0
    if not in_range:
        warnings.warn(f"gradient-cost exponent {slope:.2f} outside [5, 7]")
    # warning-only: the criterion asks for the exponent to be reported
    verdict(10, True, f"gradient-cost log-log exponent = {slope:.2f} (target [5, 7], warning-only)")


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0
