"""Initial guess construction, augmented-Lagrangian globalization, and
matrix-free Newton-Krylov root-finding on the Lagrangian gradient.

The unknown vector stacks all pair columns and all multipliers (see
``FlatLayout``).  Jacobian-vector products are finite differences of the
gradient, the inner linear solves use restarted GMRES, and a step-halving
backtracking line search keeps the residual norm monotone.

Newton-Krylov converges locally but the mean-field starting point is
usually outside the ground-state basin: the residual landscape has long,
nearly flat valleys where the residual aligns with the (gauge) null space
of the Jacobian, and every residual-monotone method crawls.  ``solve``
therefore runs a globalization phase first: an augmented-Lagrangian
minimization of the energy over the pair columns alone (multiplier-free
saddle structure), at full sector row counts (minimal rows create extra
rank-boundary stationary points), with a penalty on two-hole (Q)
negativity (two-particle and particle-hole positivity are structural, the
two-hole condition is not, and without it the energy escapes below the
true ground state at mid filling).  The result seeds multipliers by least
squares and Newton-Krylov finishes to a stationary point.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.optimize
import scipy.sparse.linalg as spla

from . import fock
from .core import (
    AcmpSet,
    _set_bytes,
    _set_from_bytes,
    compact_set,
    energy_of,
    rdm1_from,
    rdm2_from,
    set_residuals,
)
from .hamiltonians import embed_one_body
from .lagrangian import (
    FlatLayout,
    Multipliers,
    SolveState,
    _brackets,
    _pair_expand,
    _state_grams,
    lagrangian_gradient,
    symmetrized_gradient,
)
from .representability import q_negativity, t2_negativity

__all__ = [
    "SolverOptions",
    "SolveReport",
    "NewtonKrylovResult",
    "initial_guess",
    "newton_krylov",
    "multiplier_fit",
    "MultiplierFit",
    "solve",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class SolverOptions:
    max_outer: int = 200
    gradient_tolerance: float = 1e-10
    krylov_subspace: int = 30
    krylov_rtol: float = 1e-3
    krylov_cycles: int = 5
    damping: int = 8  # backtracking halvings; 0 disables the line search
    fd_step: float = 1e-7
    use_symmetrized: bool = False
    seed: int = 0
    # globalization (augmented-Lagrangian warm-up before Newton-Krylov)
    globalize: bool = True
    penalty_rho: float = 100.0
    penalty_rounds: int = 12
    penalty_inner: int = 3000
    penalty_feas_tol: float = 1e-9
    use_t2: bool = False
    lbfgs_memory: int = 50

    def __post_init__(self):
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        for name in ("gradient_tolerance", "krylov_subspace", "krylov_rtol", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveReport:
    n: int
    N: int
    energy: float
    reference_energy: float | None
    energy_error: float | None
    rdm1_error: float | None
    rdm2_error: float | None
    residual_d0_identity: float
    residual_d0_trace: float
    residual_child_identity: float
    residual_child_trace: float
    iterations: int
    converged: bool
    wall_time: float
    gradient_norm: float
    state: SolveState | None = field(default=None, repr=False)


@dataclass(frozen=True)
class NewtonKrylovResult:
    x: np.ndarray
    trace: tuple
    converged: bool
    iterations: int
    message: str


def _slater_wavefunction(orbitals, n, N):
    """CI expansion of the determinant built from the first N columns of an
    orbital rotation matrix: coefficients are N x N minors."""
    basis = fock.DeterminantBasis(n, N)
    coeffs = np.empty(len(basis))
    occ_cols = orbitals[:, :N]
    for k, mask in enumerate(basis.masks):
        rows = [i for i in range(n) if mask >> i & 1]
        coeffs[k] = np.linalg.det(occ_cols[rows, :])
    return fock.Wavefunction(basis, coeffs)


def initial_guess(ham, n, N, options=None):
    """Feasible starting state from the one-body part.

    Diagonalizes the embedded one-body matrix, occupies the N lowest
    orbitals, builds the exact (hence feasible) ACMP set of that single
    determinant, compacts it, and fits multipliers by least squares.
    """
    options = options or SolverOptions()
    if not 1 <= N <= n - 1:
        raise ValueError("need 1 <= N <= n-1")
    if N < 2:
        raise ValueError("children need at least two particles")
    emb = embed_one_body(ham, N)
    _, orbitals = np.linalg.eigh(emb.h1)
    psi = _slater_wavefunction(orbitals, n, N)
    s = compact_set(fock.acmp_set_from_wavefunction(psi))
    fit = multiplier_fit(s, ham, symmetrized=options.use_symmetrized)
    return SolveState(s, fit.multipliers)


def newton_krylov(F, x0, options=None):
    """Find a root of F with finite-difference Jacobian-vector products.

    Stops when the infinity norm of F is below the gradient tolerance, the
    iteration budget is exhausted, or backtracking cannot reduce the
    residual any further.
    """
    opts = options or SolverOptions()
    x = np.array(x0, dtype=float)
    f = F(x)
    if not np.all(np.isfinite(f)):
        return NewtonKrylovResult(x, (np.inf,), False, 0, "non-finite residual at start")
    norm2 = float(np.linalg.norm(f))
    trace = [float(np.abs(f).max())]
    it = 0
    best = trace[-1]
    stall = 0
    message = "iteration budget exhausted"
    while trace[-1] > opts.gradient_tolerance and it < opts.max_outer:
        xn = x  # capture for the closure
        fn = f

        def jv(v, x=xn, f=fn):
            nv = float(np.linalg.norm(v))
            if nv == 0.0:
                return np.zeros_like(v)
            eps = opts.fd_step * max(1.0, float(np.linalg.norm(x))) / nv
            fp = F(x + eps * v)
            return (fp - f) / eps

        op = spla.LinearOperator((x.size, x.size), matvec=jv, dtype=float)
        step, _ = _gmres(op, -f, opts)
        if not np.all(np.isfinite(step)) or not np.any(step):
            step = -f
        alpha = 1.0
        accepted = False
        trials = max(opts.damping, 0) + 1
        for _ in range(trials):
            x_try = x + alpha * step
            f_try = F(x_try)
            if np.all(np.isfinite(f_try)) and (
                opts.damping == 0 or float(np.linalg.norm(f_try)) <= norm2
            ):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = "line search stalled"
            break
        x, f = x_try, f_try
        norm2 = float(np.linalg.norm(f))
        trace.append(float(np.abs(f).max()))
        it += 1
        # forward differencing floors the achievable residual around 1e-9;
        # stop once the norm has not halved for a while instead of burning
        # the rest of the budget there
        if trace[-1] < 0.5 * best:
            stall = 0
        else:
            stall += 1
            if stall >= 10:
                message = "stagnated near the derivative noise floor"
                break
        best = min(best, trace[-1])
    converged = trace[-1] <= opts.gradient_tolerance
    if converged:
        message = "converged"
    return NewtonKrylovResult(x, tuple(trace), converged, it, message)


def _gmres(op, rhs, opts):
    kwargs = dict(
        restart=opts.krylov_subspace,
        maxiter=opts.krylov_cycles,
        atol=0.0,
    )
    try:
        return spla.gmres(op, rhs, rtol=opts.krylov_rtol, **kwargs)
    except TypeError:  # older scipy spells the relative tolerance 'tol'
        return spla.gmres(op, rhs, tol=opts.krylov_rtol, **kwargs)


@dataclass(frozen=True)
class MultiplierFit:
    multipliers: Multipliers
    residual: float


def _column_gradient(layout, state, ham, symmetrized):
    grad = symmetrized_gradient if symmetrized else lagrangian_gradient
    return grad(state, ham)[: layout.column_size]


def multiplier_fit(s, ham, symmetrized=False):
    """Least-squares multipliers that minimize the column-gradient norm at
    a fixed (typically feasible) set; minimum-norm on rank deficiency."""
    n = s.n
    state0 = SolveState(s, Multipliers.zeros(n))
    layout = FlatLayout.of_state(state0)
    g0 = _column_gradient(layout, state0, ham, symmetrized)
    m = layout.multiplier_size
    basis = np.zeros(m)
    design = np.empty((g0.size, m))
    x0 = layout.pack(state0)
    for k in range(m):
        basis[:] = 0.0
        basis[k] = 1.0
        xk = x0.copy()
        xk[layout.column_size :] = basis
        design[:, k] = (
            _column_gradient(layout, layout.unpack(xk), ham, symmetrized) - g0
        )
    coef, *_ = np.linalg.lstsq(design, -g0, rcond=None)
    xfit = x0.copy()
    xfit[layout.column_size :] = coef
    fitted = layout.unpack(xfit).mult
    residual = float(np.linalg.norm(design @ coef + g0))
    return MultiplierFit(fitted, residual)


# restarted Krylov steps stall once the residual drops to ~1e-9: the
# Jacobian (a Lagrangian Hessian) is strongly rank deficient along gauge
# orbits and GMRES cannot damp the null-space component of the residual.
# A dense truncated-SVD least-squares step finishes the job; affordable
# only for small unknown vectors.
_POLISH_SIZE_LIMIT = 1500


def _dense_polish(F, x, opts, rounds=3):
    """Min-norm Newton steps from a dense central-difference Jacobian."""
    f = F(x)
    h = 1e-6
    used = 0
    for _ in range(rounds):
        if np.abs(f).max() <= opts.gradient_tolerance:
            break
        m = x.size
        jac = np.empty((m, m))
        for k in range(m):
            xp = x.copy()
            xp[k] += h
            xm = x.copy()
            xm[k] -= h
            jac[:, k] = (F(xp) - F(xm)) / (2.0 * h)
        step, *_ = np.linalg.lstsq(jac, -f, rcond=1e-10)
        accepted = False
        for alpha in (1.0, 0.5, 0.25, 0.1):
            f_try = F(x + alpha * step)
            if np.all(np.isfinite(f_try)) and np.linalg.norm(f_try) < np.linalg.norm(f):
                accepted = True
                break
        if not accepted:
            break
        x = x + alpha * step
        f = f_try
        used += 1
    return x, f, used


# --- globalization -----------------------------------------------------------

# above this sector dimension the full-row mean-field set is compacted to
# keep the globalization phase affordable in memory
_SECTOR_ROW_GUARD = 5000


def _mean_field_set(ham, n, N):
    """Exact ACMP set of the one-body Slater determinant, at full sector
    row counts.

    Compacting to minimal rows here would introduce rank-boundary
    stationary points that trap the globalization phase, so the rows are
    only truncated when the sector dimensions are too large to keep.
    """
    if not 1 <= N <= n - 1:
        raise ValueError("need 1 <= N <= n-1")
    if N < 2:
        raise ValueError("children need at least two particles")
    emb = embed_one_body(ham, N)
    _, orbitals = np.linalg.eigh(emb.h1)
    psi = _slater_wavefunction(orbitals, n, N)
    s = fock.acmp_set_from_wavefunction(psi)
    if comb(n, N) > _SECTOR_ROW_GUARD:
        s = compact_set(s)
    return s


def _augmented_lagrangian(ham, s0, opts):
    """Minimize the energy over the pair columns under the constraint
    brackets by the classical augmented-Lagrangian method.

    Each outer round solves min_x E(x) - m.R(x) + rho |R(x)|^2 (plus the
    representability penalties) with L-BFGS, then updates the multiplier
    estimates m <- m - 2 rho R and escalates rho when feasibility stops
    contracting.  Value and gradient share a single Gram computation per
    evaluation; the penalty gradients enter as effective one- and
    two-body coefficient tensors through the same column chain rule as
    the Hamiltonian itself.  Returns the final (near-feasible) set.
    """
    n, N = s0.n, s0.N
    state0 = SolveState(s0, Multipliers.zeros(n))
    layout = FlatLayout.of_state(state0)
    nc = layout.column_size
    tail = np.zeros(layout.multiplier_size)
    eye = np.eye(n)
    rows_c0, rows_xc = s0.d0.c.shape[0], s0.xc.shape[0]
    t2_from = opts.penalty_rounds // 3 if opts.use_t2 else None

    def fg(xc, mult, rho, rho_q, rho_t, with_t2):
        s = layout.unpack(np.concatenate([xc, tail])).set
        g_a0, g_c0, t, u = _state_grams(s)
        b_lam, b_Lam, b_mu0, b_mu = _brackets(s, g_a0, g_c0, t, u)
        energy = float(np.sum(ham.h1 * g_a0) + np.sum(ham.h2 * t))
        # the quadratic penalty folds into the linear term: the gradient of
        # rho |R|^2 equals that of -(2 rho R).R at fixed R
        meff = Multipliers(
            mult.lam - 2.0 * rho * b_lam,
            mult.Lam - 2.0 * rho * b_Lam,
            mult.mu0 - 2.0 * rho * b_mu0,
            mult.mu - 2.0 * rho * b_mu,
        )
        tr_Lam = np.einsum("abjj->ab", meff.Lam)
        k_a0 = ham.h1 - meff.lam + tr_Lam - meff.mu0 * eye + (N - 1) * meff.mu
        g_a0_grad = 2.0 * s.d0.a @ k_a0
        g_c0_grad = -2.0 * s.d0.c @ meff.lam
        w = ham.h2 - meff.Lam - meff.mu[:, :, None, None] * eye[None, None, :, :]
        g_xa_grad = 2.0 * s.xa @ _pair_expand(w, n)
        q = (-meff.Lam.transpose(0, 3, 1, 2)).reshape(n * n, n * n)
        g_xc_grad = 2.0 * s.xc @ q

        extra = 0.0
        h_acc = None
        pen_q, h_q, h2_q = q_negativity(g_a0, t)
        if h_q is not None:
            extra += rho_q * pen_q
            h_acc = rho_q * h_q
            h2_acc = rho_q * h2_q
        if with_t2:
            pen_t, h_t, h2_t = t2_negativity(g_a0, t)
            if h_t is not None:
                extra += rho_t * pen_t
                if h_acc is None:
                    h_acc, h2_acc = rho_t * h_t, rho_t * h2_t
                else:
                    h_acc = h_acc + rho_t * h_t
                    h2_acc = h2_acc + rho_t * h2_t
        if h_acc is not None:
            g_a0_grad += s.d0.a @ (h_acc + h_acc.T)
            wp = _pair_expand(h2_acc, n)
            g_xa_grad += s.xa @ (wp + wp.T)

        quad = (
            float(np.sum(b_lam**2) + np.sum(b_Lam**2))
            + b_mu0**2
            + float(np.sum(b_mu**2))
        )
        val = (
            energy
            - float(np.sum(mult.lam * b_lam) + np.sum(mult.Lam * b_Lam))
            - mult.mu0 * b_mu0
            - float(np.sum(mult.mu * b_mu))
            + rho * quad
            + extra
        )
        grad = np.concatenate(
            [
                g_a0_grad.ravel(order="F"),
                g_c0_grad.ravel(order="F"),
                g_xa_grad.ravel(order="F"),
                g_xc_grad.ravel(order="F"),
            ]
        )
        return val, grad

    xc = layout.pack(state0)[:nc].copy()
    mult = Multipliers.zeros(n)
    rho, rho_q, rho_t = opts.penalty_rho, opts.penalty_rho, opts.penalty_rho
    feas_prev = q_prev = np.inf
    for k in range(opts.penalty_rounds):
        with_t2 = t2_from is not None and k >= t2_from
        res = scipy.optimize.minimize(
            fg,
            xc,
            args=(mult, rho, rho_q, rho_t, with_t2),
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": opts.penalty_inner,
                "maxcor": opts.lbfgs_memory,
                "ftol": 1e-16,
                "gtol": 1e-12,
            },
        )
        xc = res.x
        s = layout.unpack(np.concatenate([xc, tail])).set
        g_a0, g_c0, t, u = _state_grams(s)
        b_lam, b_Lam, b_mu0, b_mu = _brackets(s, g_a0, g_c0, t, u)
        feas = max(
            float(np.abs(b_lam).max()),
            abs(b_mu0),
            float(np.abs(b_Lam).max()),
            float(np.abs(b_mu).max()),
        )
        mult = Multipliers(
            mult.lam - 2.0 * rho * b_lam,
            mult.Lam - 2.0 * rho * b_Lam,
            mult.mu0 - 2.0 * rho * b_mu0,
            mult.mu - 2.0 * rho * b_mu,
        )
        pen_q = q_negativity(g_a0, t)[0]
        pen_t = t2_negativity(g_a0, t)[0] if with_t2 else 0.0
        if feas < opts.penalty_feas_tol and pen_q < 1e-14 and pen_t < 1e-14:
            break
        if feas > 0.25 * feas_prev:
            rho = min(rho * 10.0, 1e8)
        if pen_q > 0.25 * q_prev:
            rho_q = min(rho_q * 10.0, 1e8)
        if with_t2:
            rho_t = min(rho_t * 10.0, 1e8)
        feas_prev, q_prev = feas, pen_q
    return layout.unpack(np.concatenate([xc, tail])).set


def _globalized_start(ham, n, N, opts):
    s = _augmented_lagrangian(ham, _mean_field_set(ham, n, N), opts)
    s = compact_set(s)
    fit = multiplier_fit(s, ham, symmetrized=opts.use_symmetrized)
    return SolveState(s, fit.multipliers)


def solve(ham, n, N, options=None, reference="auto", start=None):
    """Full pipeline: globalized initial guess, Newton-Krylov, report.

    ``reference`` may be "auto" (full-CI comparison when tractable), True,
    False, or a precomputed energy.  ``start`` optionally bypasses the
    initial guess (warm starts, checkpoint resumes).
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    if start is not None:
        state = start
    elif opts.globalize:
        state = _globalized_start(ham, n, N, opts)
    else:
        state = initial_guess(ham, n, N, opts)
    layout = FlatLayout.of_state(state)
    grad = symmetrized_gradient if opts.use_symmetrized else lagrangian_gradient

    def F(x):
        return grad(layout.unpack(x), ham)

    result = newton_krylov(F, layout.pack(state), opts)
    x, gnorm, its = result.x, result.trace[-1], result.iterations
    converged = result.converged
    if not converged and x.size <= _POLISH_SIZE_LIMIT and its < opts.max_outer:
        budget = min(3, opts.max_outer - its)
        x, f, used = _dense_polish(F, x, opts, rounds=budget)
        gnorm = float(np.abs(f).max())
        its += used
        converged = gnorm <= opts.gradient_tolerance
    final = layout.unpack(x)
    res = set_residuals(final.set)
    energy = energy_of(final.set, ham)

    ref_energy = rdm1_err = rdm2_err = err = None
    want_ref = reference if isinstance(reference, bool) else reference == "auto"
    if isinstance(reference, (int, float)) and not isinstance(reference, bool):
        ref_energy = float(reference)
    elif want_ref and comb(n, N) <= fock.DENSE_DIMENSION_GUARD:
        ref_energy, psi = fock.ground_state(ham, n, N)
        rdm1_err = float(np.abs(rdm1_from(final.set) - fock.rdm1_of(psi)).max())
        rdm2_err = float(np.abs(rdm2_from(final.set) - fock.rdm2_of(psi)).max())
    if ref_energy is not None:
        err = abs(energy - ref_energy)

    return SolveReport(
        n=n,
        N=N,
        energy=energy,
        reference_energy=ref_energy,
        energy_error=err,
        rdm1_error=rdm1_err,
        rdm2_error=rdm2_err,
        residual_d0_identity=float(np.abs(res.d0_identity).max()),
        residual_d0_trace=abs(res.d0_trace),
        residual_child_identity=float(np.abs(res.child_identity).max()),
        residual_child_trace=float(np.abs(res.child_trace).max()),
        iterations=its,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        gradient_norm=gnorm,
        state=final,
    )


# --- checkpointing ----------------------------------------------------------

_CKPT_MAGIC = b"ACMPCKP1"


def save_checkpoint(state, path):
    """Set container plus a multiplier appendix, little-endian float64."""
    layout = FlatLayout.of_state(state)
    x = layout.pack(state)
    mult = x[layout.column_size :]
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(_set_bytes(state.set))
        fh.write(struct.pack("<q", mult.size))
        fh.write(mult.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _CKPT_MAGIC:
        raise ValueError("not a solver checkpoint")
    s, offset = _set_from_bytes(data, 8)
    (count,) = struct.unpack_from("<q", data, offset)
    offset += 8
    mult_vec = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
    state0 = SolveState(s, Multipliers.zeros(s.n))
    layout = FlatLayout.of_state(state0)
    if count != layout.multiplier_size:
        raise ValueError("multiplier appendix has the wrong length")
    x = layout.pack(state0)
    x[layout.column_size :] = mult_vec
    return layout.unpack(x)
