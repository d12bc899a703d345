"""Command-line entry point: ``ptweyl <subcommand> [options]``.

Exit status: 0 success, 1 validation error (bad config, failed check),
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .discretize import FourierBasis, assemble_operator
from .harness import (
    dumps,
    eig_csv,
    kyfan_campaign,
    run_large,
    run_semiclassical,
    trial_matrix,
    trust_radius,
)
from .linalg import ConvergenceError, eigenvalues
from .randomize import PlanError, derive_plan
from .symbols import QuadratureGrid, check_pt_symbol, xi_bound
from .verify import pt_matrix_check, spectrum_conjugation_check, symmetry_check
from .weylgeom import Sector, boundary_flags, preimage_volume_converged

log = logging.getLogger("ptweyl")


def _grid_arg(text: str) -> tuple[int, int]:
    try:
        nx, nxi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected --grid NX,NXI") from None
    return nx, nxi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="base seed (trial i uses seed + i)")
    common.add_argument("--trials", type=int)
    common.add_argument("--out", type=Path, help="output directory or file")
    common.add_argument("--coupling", type=float, help="override the applied coupling")
    common.add_argument("--grid", type=_grid_arg, help="quadrature grid NX,NXI")
    common.add_argument("--figures", action="store_true", help="render PNG figures into OUT/figures")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="ptweyl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("plan", parents=[common], help="print the perturbation ledger")
    p.add_argument("--h", type=float)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--tau0", type=float)
    p.add_argument("--K", type=int)
    sub.add_parser("spectrum", parents=[common], help="one draw, eigenvalue CSV")
    sub.add_parser("weyl", parents=[common], help="preimage volumes and Weyl predictions")
    sub.add_parser("mc", parents=[common], help="semiclassical Monte Carlo campaign")
    sub.add_parser("large", parents=[common], help="large-eigenvalue sector campaign")
    sub.add_parser("check", parents=[common], help="structural verification suite")
    k = sub.add_parser("kyfan", parents=[common], help="Ky Fan splitting campaign")
    k.add_argument("--nmax", type=int, default=64)
    k.add_argument("--h", type=float, default=0.1)
    return ap


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config", "this subcommand needs a config file")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
        cfg.raw = dict(cfg.raw, base_seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials", "must be >= 1")
        cfg.trials = args.trials
        cfg.raw = dict(cfg.raw, trials=args.trials)
    if args.coupling is not None:
        cfg.coupling = args.coupling
        cfg.raw = dict(cfg.raw, plan=dict(cfg.raw.get("plan", {}), coupling=args.coupling))
    if args.grid is not None:
        cfg.nx, cfg.nxi = args.grid
        cfg.raw = dict(cfg.raw, grid=dict(cfg.raw.get("grid", {}), nx=cfg.nx, nxi=cfg.nxi))
    return cfg


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = out / name if out.suffix == "" else out
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(path)


def cmd_plan(args) -> int:
    if args.config is not None:
        cfg = _load(args)
        ov = {"K": cfg.K, "R": cfg.R, "C": cfg.C}
        if cfg.coupling is not None:
            ov["coupling"] = cfg.coupling
        plan = derive_plan(cfg.h, cfg.operator.order, cfg.s, cfg.eps, cfg.tau0, ov)
    else:
        if args.h is None:
            raise ConfigError("--h", "give --h or --config")
        ov = {}
        if args.K is not None:
            ov["K"] = args.K
        if args.coupling is not None:
            ov["coupling"] = args.coupling
        plan = derive_plan(args.h, args.m, args.s, args.eps, args.tau0, ov)
    _emit(dumps(plan.to_json()), args.out, "plan.json")
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    seed = cfg.base_seed
    A, _ = trial_matrix(cfg, seed)
    z = eigenvalues(A).eigenvalues
    flags = np.zeros(z.size, dtype=bool)
    for reg in cfg.regions:
        flags |= boundary_flags(z, reg)
    _emit(eig_csv(z, 0, flags), args.out, "eigenvalues.csv")
    if args.figures and args.out is not None:
        from .plotting import eigenvalue_cloud

        eigenvalue_cloud([z], cfg.regions, args.out / "spectrum.png" if args.out.suffix == "" else args.out.with_suffix(".png"))
    return 0


def cmd_weyl(args) -> int:
    cfg = _load(args)
    spec = cfg.operator
    out = {"mode": cfg.mode, "regions": []}
    for reg in cfg.regions:
        if cfg.mode == "semiclassical":
            grid = cfg.grid(xi_bound(spec, reg.outer_radius))
            vol = preimage_volume_converged(spec, reg, grid)
            out["regions"].append(
                {"region": reg.to_json(), "volume": vol, "prediction": vol["fine"] / (2 * math.pi * cfg.h)}
            )
        else:
            per = {}
            for lam in sorted(cfg.lambdas):
                sec = reg.with_lambda(lam) if isinstance(reg, Sector) else reg
                grid = QuadratureGrid(cfg.nx, cfg.nxi, xi_bound(spec, sec.outer_radius, principal_only=True))
                vol = preimage_volume_converged(spec, sec, grid, principal_only=True)
                per[repr(lam)] = {"volume": vol, "prediction": vol["fine"] / (2 * math.pi)}
            out["regions"].append({"region": reg.to_json(), "lambdas": per})
    _emit(dumps(out), args.out, "weyl.json")
    return 0


def _campaign(args, runner) -> int:
    cfg = _load(args)
    out = args.out or (Path(cfg.output) if cfg.output else None)
    summary = runner(cfg, out)
    agg = summary.aggregate
    if out is not None:
        print(out / "summary.json")
        if args.figures:
            from .plotting import campaign_figures

            for p in campaign_figures(json.loads((out / "summary.json").read_text()), out, cfg.regions):
                print(p)
    else:
        sys.stdout.write(dumps(summary.to_json()))
    if agg["verdicts"]["failed_trials"]:
        log.error("numerical failure in trials %s", agg["verdicts"]["failed_trials"])
        return 2
    return 0


def cmd_check(args) -> int:
    cfg = _load(args)
    spec = cfg.operator
    basis = FourierBasis(cfg.K)
    P = assemble_operator(spec, basis)
    res = {
        "symbol": check_pt_symbol(spec),
        "unperturbed": {
            "pt": pt_matrix_check(P),
            "symmetric": symmetry_check(P),
            "conjugation": spectrum_conjugation_check(eigenvalues(P), 1e-8),
        },
        "trials": [],
    }
    for i in range(cfg.trials):
        A, _ = trial_matrix(cfg, cfg.base_seed + i)
        res["trials"].append(
            {
                "trial": i,
                "pt": pt_matrix_check(A),
                "symmetric": symmetry_check(A),
                "conjugation": spectrum_conjugation_check(eigenvalues(A), 1e-8),
            }
        )
    if cfg.mode == "large":
        res["trust_radius"] = trust_radius(spec, cfg.K, cfg.trust_eta)
    _emit(dumps(res), args.out, "check.json")
    expect_pt = res["symbol"]["pt"]
    ok = res["unperturbed"]["symmetric"] and all(t["symmetric"] for t in res["trials"])
    if expect_pt:
        ok = ok and all(v for v in res["unperturbed"].values())
        ok = ok and all(t["pt"] and t["conjugation"] for t in res["trials"])
    return 0 if ok else 1


def cmd_kyfan(args) -> int:
    rep = kyfan_campaign(args.trials or 1000, args.nmax, args.seed or 0, args.h)
    _emit(dumps(rep), args.out, "kyfan.json")
    return 0 if rep["violations"] == 0 else 1


COMMANDS = {
    "plan": cmd_plan,
    "spectrum": cmd_spectrum,
    "weyl": cmd_weyl,
    "mc": lambda a: _campaign(a, run_semiclassical),
    "large": lambda a: _campaign(a, run_large),
    "check": cmd_check,
    "kyfan": cmd_kyfan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, PlanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
