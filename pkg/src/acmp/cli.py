"""Command-line front end: generate Hamiltonians, run the full-CI oracle,
solve sectors, and check gradients.

Commands
--------
gen        write a seeded random Hamiltonian to an ACMPH v1 file
oracle     dense full-CI ground-state energy (and optional RDM dumps)
solve      run the ACMP solver, emit report rows (table, CSV, JSON lines)
gradcheck  analytic-vs-finite-difference gradient comparison

Exit codes: 0 success, 1 usage or I/O failure, 2 non-convergence (or a
failed gradient check).  Seed sweeps fan out over a thread pool capped by
the ACMP_THREADS environment variable (default 1); rows are emitted in
seed order regardless of completion order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import fock
from .core import rdm1_from, rdm2_from
from .hamiltonians import load_hamiltonian, random_hamiltonian, save_hamiltonian
from .lagrangian import FlatLayout, Multipliers, SolveState, grad_check
from .solver import SolverOptions, load_checkpoint, save_checkpoint, solve

__all__ = ["main"]

_FIELDS = (
    "n",
    "N",
    "seed",
    "energy",
    "reference_energy",
    "energy_error",
    "rdm1_error",
    "rdm2_error",
    "d0_trace",
    "d0_identity",
    "child_trace",
    "child_identity",
    "iterations",
    "converged",
    "wall_time",
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_seeds(text):
    """Seed list syntax: a single integer, 'a..b' (inclusive), or a
    comma-separated list."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    else:
        seeds = [int(tok) for tok in text.split(",") if tok]
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed range")
    return seeds


def _num(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")  # round-trips exactly
    return str(x)


def _row_of(report, seed):
    return {
        "n": report.n,
        "N": report.N,
        "seed": seed,
        "energy": report.energy,
        "reference_energy": report.reference_energy,
        "energy_error": report.energy_error,
        "rdm1_error": report.rdm1_error,
        "rdm2_error": report.rdm2_error,
        "d0_trace": report.residual_d0_trace,
        "d0_identity": report.residual_d0_identity,
        "child_trace": report.residual_child_trace,
        "child_identity": report.residual_child_identity,
        "iterations": report.iterations,
        "converged": report.converged,
        "wall_time": report.wall_time,
    }


def _emit_table(rows, out):
    # residual grouping mirrors the usual benchmark-table layout:
    # D0/A0 are the root trace/identity brackets, Di/Ai the child ones
    head = ("seed", "energy", "E error", "1-RDM", "2-RDM", "D0", "A0", "Di", "Ai", "its", "conv", "t[s]")
    fmt = "{:>6} {:>18} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>5} {:>5} {:>7}"
    print(fmt.format(*head), file=out)

    def e(x):
        return "-" if x is None else format(x, ".2e")

    for r in rows:
        print(
            fmt.format(
                r["seed"],
                format(r["energy"], ".12f"),
                e(r["energy_error"]),
                e(r["rdm1_error"]),
                e(r["rdm2_error"]),
                e(r["d0_trace"]),
                e(r["d0_identity"]),
                e(r["child_trace"]),
                e(r["child_identity"]),
                r["iterations"],
                "yes" if r["converged"] else "no",
                format(r["wall_time"], ".1f"),
            ),
            file=out,
        )
    errs = [r["energy_error"] for r in rows if r["energy_error"] is not None]
    if len(rows) > 1 and errs:
        print(f"mean |energy error| over {len(errs)} seeds: {np.mean(np.abs(errs)):.6e}", file=out)


def _emit_csv(rows, out):
    writer = csv.writer(out)
    writer.writerow(_FIELDS)
    for r in rows:
        writer.writerow([_num(r[k]) for k in _FIELDS])


def _emit_jsonl(rows, out):
    for r in rows:
        print(json.dumps(r), file=out)


def _emit(rows, fmt, path):
    buf = io.StringIO()
    {"table": _emit_table, "csv": _emit_csv, "jsonl": _emit_jsonl}[fmt](rows, buf)
    if path:
        with open(path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _dump_rdms(prefix, g1, g2):
    np.save(f"{prefix}.rdm1.npy", g1)
    np.save(f"{prefix}.rdm2.npy", g2)


def _cmd_gen(args):
    ham = random_hamiltonian(
        args.n, args.seed, one_body_scale=args.one_body_scale, two_body_scale=args.two_body_scale
    )
    save_hamiltonian(ham, args.output)
    return 0


def _load_or_generate(args):
    if args.input:
        return load_hamiltonian(args.input)
    return random_hamiltonian(
        args.n, args.seed, one_body_scale=args.one_body_scale, two_body_scale=args.two_body_scale
    )


def _cmd_oracle(args):
    ham = _load_or_generate(args)
    try:
        energy, psi = fock.ground_state(ham, ham.n, args.N)
    except (ValueError, fock.DimensionGuardError) as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return 1
    print(f"E_FCI = {energy:.15g}")
    if args.dump_rdm:
        _dump_rdms(args.dump_rdm, fock.rdm1_of(psi), fock.rdm2_of(psi))
    return 0


def _cmd_solve(args):
    opts = SolverOptions(
        max_outer=args.max_iter,
        gradient_tolerance=args.tol,
        use_symmetrized=args.symmetrized,
        globalize=not args.no_globalize,
    )
    seeds = args.seeds if args.seeds else [args.seed]
    if args.input and len(seeds) > 1:
        print("solve: --input is incompatible with a seed sweep", file=sys.stderr)
        return 1
    if args.resume and len(seeds) > 1:
        print("solve: --resume is incompatible with a seed sweep", file=sys.stderr)
        return 1

    start = None
    if args.resume and os.path.exists(args.resume):
        start = load_checkpoint(args.resume)

    def one(seed):
        if args.input:
            ham = load_hamiltonian(args.input)
        else:
            ham = random_hamiltonian(
                args.n, seed, one_body_scale=args.one_body_scale, two_body_scale=args.two_body_scale
            )
        return solve(ham, ham.n, args.N, opts, start=start)

    workers = max(1, int(os.environ.get("ACMP_THREADS", "1")))
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, seeds))
    else:
        reports = [one(s) for s in seeds]

    rows = [_row_of(rep, seed) for seed, rep in zip(seeds, reports)]
    _emit(rows, args.format, args.output)
    if args.resume:
        save_checkpoint(reports[-1].state, args.resume)
    if args.dump_rdm:
        _dump_rdms(args.dump_rdm, rdm1_from(reports[-1].state.set), rdm2_from(reports[-1].state.set))
    return 0 if all(rep.converged for rep in reports) else 2


def _cmd_gradcheck(args):
    ham = random_hamiltonian(args.n, args.seed)
    basis = fock.DeterminantBasis(args.n, args.N)
    rng = np.random.default_rng(args.seed)
    coeffs = rng.standard_normal(len(basis))
    psi = fock.Wavefunction(basis, coeffs / np.linalg.norm(coeffs))
    s = fock.acmp_set_from_wavefunction(psi)
    layout = FlatLayout.of_state(SolveState(s, Multipliers.zeros(args.n)))
    state = layout.unpack(rng.standard_normal(layout.size))
    report = grad_check(
        state, ham, step=args.step, count=args.count, symmetrized=args.symmetrized, seed=args.seed
    )
    label = "symmetrized" if args.symmetrized else "plain"
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"{label} lagrangian: max relative error {report.max_rel_error:.3e} "
        f"over {report.count} coordinates (step {report.step:g}) -> {verdict}"
    )
    return 0 if report.passed else 2


def _add_ham_source(p, need_N=True):
    p.add_argument("--n", type=int, default=4, help="number of orbitals")
    if need_N:
        p.add_argument("--N", type=int, required=True, help="particle number")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", help="read the Hamiltonian from an ACMPH v1 file")
    p.add_argument("--one-body-scale", type=float, default=1.0)
    p.add_argument("--two-body-scale", type=float, default=1.0)


def build_parser():
    parser = _Parser(prog="acmp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded random Hamiltonian")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--one-body-scale", type=float, default=1.0)
    p.add_argument("--two-body-scale", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("oracle", help="dense full-CI ground state")
    _add_ham_source(p)
    p.add_argument("--dump-rdm", metavar="PREFIX", help="write PREFIX.rdm1.npy / PREFIX.rdm2.npy")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("solve", help="run the ACMP solver")
    _add_ham_source(p)
    p.add_argument("--seeds", type=_parse_seeds, help="seed sweep: 'a..b' or comma list")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("table", "csv", "jsonl"), default="table")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--symmetrized", action="store_true")
    p.add_argument("--resume", metavar="CKPT", help="warm-start from and checkpoint to this file")
    p.add_argument("--dump-rdm", metavar="PREFIX")
    p.add_argument("--no-globalize", action="store_true", help="plain Newton-Krylov from the mean-field guess")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--symmetrized", action="store_true")
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"acmp: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
