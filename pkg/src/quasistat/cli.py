"""Command-line entry point: ``quasistat <subcommand> <scenario.json> [options]``."""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, einstein, howland, steady, verify
from .dynamics import IntegrationError
from .model import Scenario, gibbs_state, populations
from .scenario_io import (ScenarioError, complex_pairs, load_scenario, scenario_to_dict, svg_lines,
                          write_csv, write_json)

EQUATIONS = {"master": dynamics.integrate_master,
             "premaster": dynamics.integrate_premaster,
             "pauli": dynamics.integrate_pauli}


def cmd_simulate(scenario: Scenario, args) -> int:
    traj = EQUATIONS[args.eq](scenario)
    pops = traj.populations(scenario.atom)
    n = pops.shape[1]
    header = ["t", *[f"p_{k + 1}" for k in range(n)], "trace_dev", "min_eig"]
    rows = (np.column_stack([traj.times, pops, traj.trace_dev, traj.min_eig])).tolist()
    out = Path(args.out)
    write_csv(out / f"trajectory_{args.eq}.csv", header, rows)
    if args.plot:
        svg = svg_lines(traj.times, pops, [f"level {k + 1}" for k in range(n)])
        (out / f"populations_{args.eq}.svg").write_bytes(svg.encode())
    final = ", ".join(f"{p:.6f}" for p in pops[-1])
    print(f"{args.eq}: {len(traj.times)} samples, final populations [{final}]")
    return 0


def cmd_steady(scenario: Scenario, args) -> int:
    rep = steady.balance_solve(scenario)
    pops = populations(rep.rho_inf, scenario.atom)
    write_json(Path(args.out) / "steady.json", {
        "populations": pops,
        "gibbs_populations": populations(gibbs_state(scenario.atom, scenario.beta), scenario.atom),
        "rho_inf": complex_pairs(rep.rho_inf),
        "rho_tilde": complex_pairs(rep.rho_tilde),
        "kernel_dim": rep.kernel_dim,
        "gap": rep.gap,
    })
    print("steady populations: " + ", ".join(f"{p:.8f}" for p in pops))
    return 0


def _level_rates(blocks: dict, projs: np.ndarray, degeneracies: np.ndarray) -> list:
    # rate of block (j, k) on the normalized level-k projector
    n = len(projs)
    out = np.zeros((n, n))
    for (j, k), b in blocks.items():
        src = projs[k].reshape(-1, order="F") / degeneracies[k]
        out[j, k] = np.trace((b @ src).reshape(projs[k].shape, order="F")).real
    return out.tolist()


def cmd_einstein(scenario: Scenario, args) -> int:
    table = einstein.einstein_table(scenario)
    rho_inf = steady.balance_solve(scenario).rho_inf
    rho_g = gibbs_state(scenario.atom, scenario.beta)
    write_json(Path(args.out) / "einstein.json", {
        "A_rates": _level_rates(table.A, table.projectors, table.degeneracies),
        "B_rates": _level_rates(table.B, table.projectors, table.degeneracies),
        "fluxes_at_steady_state": einstein.fluxes(rho_inf, table),
        "bb_residual_gibbs": einstein.bb_check(rho_g, table),
        "bb_residual_steady_state": einstein.bb_residual(rho_inf, table, require_k0=False),
    })
    print(f"max |BB residual| at Gibbs state: {np.max(np.abs(einstein.bb_check(rho_g, table))):.3e}")
    return 0


def _report_dict(rep: verify.VerifyReport) -> dict:
    witness = {}
    for k, v in rep.witness.items():
        witness[k] = complex_pairs(v) if isinstance(v, np.ndarray) and v.ndim == 2 else v
    return {"name": rep.name, "passed": rep.passed, "witness": witness}


def cmd_verify(scenario: Scenario, args) -> int:
    reports = verify.run_all(scenario)
    write_json(Path(args.out) / "verify.json", [_report_dict(r) for r in reports])
    for r in reports:
        print(r)
    return 0


def cmd_howland(scenario: Scenario, args) -> int:
    rep = howland.spectral_report(scenario, args.fourier_cutoff)
    order = np.lexsort((rep.eigenvalues.real, rep.eigenvalues.imag))
    write_json(Path(args.out) / "howland.json", {
        "cutoff": rep.cutoff,
        "gap": rep.gap,
        "gap_over_lambda2": rep.gap_over_lambda2,
        "zero_eigenvalue": rep.zero_eigenvalue,
        "zero_multiplicity": rep.zero_multiplicity,
        "side_multiplicities": list(rep.side_multiplicities),
        "compression_error": rep.compression_error,
        "riesz_dimensions": {f"{eps:g}": sub.dim for eps, sub in rep.riesz.items()},
        "eigenvalues": [complex(z) for z in rep.eigenvalues[order]],
    })
    print(f"cutoff {rep.cutoff}: gap {rep.gap:.6g} (gap/lambda^2 = {rep.gap_over_lambda2:.6g}), "
          f"zero multiplicity {rep.zero_multiplicity}")
    return 0


def _sweep_point(scenario: Scenario, param: str, value: float):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if param == "omega":
            # the pump stays resonant, so the whole spectrum is rescaled
            sc = scenario.replace(hamiltonian=scenario.atom.hamiltonian * (value / scenario.omega))
        else:
            sc = scenario.replace(**{param: value})
        try:
            rep = steady.balance_solve(sc)
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            return None
    return populations(rep.rho_inf, sc.atom)


def inversion_levels(n_levels: int) -> tuple[int, int]:
    """Zero-based (upper, lower) levels of the reported inversion: the two middle levels when N >= 4."""
    return (n_levels - 2, 1) if n_levels >= 4 else (n_levels - 1, 0)


def cmd_sweep(scenario: Scenario, args) -> int:
    if args.points < 2:
        raise ValueError("a sweep needs at least two points")
    lo, hi = args.range
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("sweep range must be finite")
    values = np.geomspace(lo, hi, args.points) if args.log else np.linspace(lo, hi, args.points)
    values = np.sort(values)
    param = {"beta": "beta", "eta": "eta", "omega": "omega", "lambda": "lam"}[args.param]
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda v: _sweep_point(scenario, param, float(v)), values))
    n = scenario.atom.n_levels
    upper, lower = inversion_levels(n)
    header = [args.param, *[f"d_{k + 1}" for k in range(n)],
              f"inversion_{upper + 1}_{lower + 1}", "status"]
    rows = []
    for v, pops in zip(values, results):
        if pops is None:
            rows.append([float(v), *([float("nan")] * (n + 1)), "failed"])
        else:
            rows.append([float(v), *pops.tolist(), float(pops[upper] - pops[lower]), "ok"])
    write_csv(Path(args.out) / f"sweep_{args.param}.csv", header, rows)
    print(f"sweep over {args.param}: {sum(r is not None for r in results)}/{len(values)} points solved")
    return 0


def cmd_dump(scenario: Scenario, args) -> int:
    write_json(Path(args.out) / "scenario.json", scenario_to_dict(scenario))
    return 0


COMMANDS = {"simulate": cmd_simulate, "steady": cmd_steady, "einstein": cmd_einstein,
            "verify": cmd_verify, "howland": cmd_howland, "sweep": cmd_sweep, "dump": cmd_dump}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasistat",
                                     description="Quasi-stationary states of a pumped atom in a thermal reservoir.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("scenario", help="scenario JSON file")
    parser.add_argument("--eq", choices=sorted(EQUATIONS), default="master",
                        help="evolution equation for simulate")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--plot", action="store_true", help="also write an SVG population plot")
    parser.add_argument("--fourier-cutoff", type=int, default=8, help="Fourier modes -K..K for howland")
    parser.add_argument("--param", choices=["beta", "eta", "omega", "lambda"], default="beta",
                        help="swept parameter")
    parser.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), default=(0.2, 20.0))
    parser.add_argument("--points", type=int, default=12)
    parser.add_argument("--log", action="store_true", help="logarithmic sweep spacing")
    parser.add_argument("--workers", type=int, default=4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](scenario, args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
