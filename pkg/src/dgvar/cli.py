"""Command-line entry point: ``dgvar run|sweep|check-grad|limsup --config <file>``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .experiments import RunRecord, Scenario, limsup_study, run_scenario
from .mesh import build_structured_rect
from .space import DGFunction, interpolate
from .variation import fd_check

logger = logging.getLogger("dgvar")

GRAD_TOL = 1e-5


def limsup_map(x):
    x = np.asarray(x, dtype=float)
    return np.stack([x[..., 0] + 0.1 * x[..., 0] ** 2, x[..., 1] + 0.1 * x[..., 1] ** 2], axis=-1)


def limsup_grad(x):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0 + 0.2 * x[..., 0]
    g[..., 1, 1] = 1.0 + 0.2 * x[..., 1]
    return g


def _print_rows(record: RunRecord) -> None:
    for r in record.rows:
        print(
            f"alpha={r.alpha:g} n_triangles={r.n_triangles} converged={r.converged} reason={r.reason} "
            f"iterations={r.iterations} energy={r.energy:.10g} err_L1={r.err_L1:.3e} "
            f"err_W11={r.err_W11:.3e} det_min={r.det_min:.6f} det_max={r.det_max:.6f}"
        )


def cmd_run(sc: Scenario, args) -> int:
    alpha = args.alpha if args.alpha is not None else sc.alphas[0]
    n = args.triangles if args.triangles is not None else sc.resolutions[0]
    record = run_scenario(sc, alphas=[alpha], resolutions=[n])
    _print_rows(record)
    return 0


def cmd_sweep(sc: Scenario, args) -> int:
    record = run_scenario(sc)
    _print_rows(record)
    return 0


def cmd_check_grad(sc: Scenario, args) -> int:
    # discontinuous perturbations of the identity; unit-size random coefficients
    # make the energy so large that central differences lose the digits to compare
    mesh = build_structured_rect(2, 2)
    rng = np.random.default_rng(args.seed)
    base = interpolate(lambda x: x, mesh, 1, 2).coeffs
    worst = 0.0
    for alpha in sc.alphas:
        cfg = sc.energy_config(alpha)
        for k in range(args.samples):
            u = DGFunction(mesh, 1, base + args.amplitude * rng.standard_normal(base.shape))
            err = fd_check(u, cfg)
            worst = max(worst, err)
            print(f"alpha={alpha:g} sample={k} rel_err={err:.3e}")
    ok = worst <= GRAD_TOL
    print(f"check-grad {'PASS' if ok else 'FAIL'} max_rel_err={worst:.3e} tol={GRAD_TOL:g}")
    return 0 if ok else 1


def cmd_limsup(sc: Scenario, args) -> int:
    sizes, values, exact = limsup_study(
        limsup_map, limsup_grad, density=sc.density, alpha=sc.alphas[0], penalty=sc.penalty,
        n_refinements=args.refinements, formulation=sc.formulation,
    )
    errors = [abs(v - exact) for v in values]
    rows = list(zip(sizes, values, errors))
    for n, v, e in rows:
        print(f"n_triangles={n} discrete_energy={v:.12g} abs_error={e:.3e}")
    print(f"continuous_energy={exact:.12g}")
    if sc.output_dir:
        out = Path(sc.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "limsup.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n_triangles", "discrete_energy", "continuous_energy", "abs_error"])
            for n, v, e in rows:
                w.writerow([n, f"{v:.12e}", f"{exact:.12e}", f"{e:.6e}"])
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    print(f"limsup {'PASS' if monotone else 'FAIL'} monotone_decrease={monotone}")
    return 0 if monotone else 1


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "check-grad": cmd_check_grad, "limsup": cmd_limsup}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgvar", description="DG minimization of integral energies")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "single (alpha, mesh) run; defaults to the first entry of each list"),
        ("sweep", "full alpha x resolution grid"),
        ("check-grad", "finite-difference check of the analytic gradient"),
        ("limsup", "energies of interpolants of a smooth map under refinement"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON scenario file")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "run":
            p.add_argument("--alpha", type=float, default=None)
            p.add_argument("--triangles", type=int, default=None)
        if name == "check-grad":
            p.add_argument("--samples", type=int, default=5)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--amplitude", type=float, default=0.1)
        if name == "limsup":
            p.add_argument("--refinements", type=int, default=4)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s %(message)s")
    try:
        sc = Scenario.from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"dgvar: bad config: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[args.command](sc, args)


if __name__ == "__main__":
    sys.exit(main())
