"""Monte Carlo campaigns over random PT-symmetric perturbations.

A campaign writes into its output directory:

    eigs/trial_NNNN.csv   eigenvalue cloud (re, im, trial, flag_boundary)
    summary.json          configuration echo, ledger, per-trial records, aggregates
    timing.json           wall-clock data (kept apart so summary.json is byte-stable)
    manifest.json         sha256 of every byte-stable file above
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ExperimentConfig
from .discretize import FourierBasis, assemble_multiplication, assemble_operator, enumerate_perturb_basis
from .linalg import ConvergenceError, eigenvalues
from .randomize import RNG_ALGORITHM, build_q, derive_plan, perturbed_matrix, sample_ball, sample_gaussian
from .symbols import QuadratureGrid, check_pt_symbol, nondegeneracy_order, xi_bound
from .verify import pt_matrix_check, spectrum_conjugation_check, symmetry_check
from .weylgeom import (
    Sector,
    boundary_flags,
    count_in_region,
    distance_to_symbol_range,
    preimage_volume_converged,
    tube_profile,
)

log = logging.getLogger(__name__)


@dataclass
class TrialRecord:
    trial: int
    seed: int
    coeff_norm: float
    eigenvalues_file: str | None
    counts: dict[str, Any]
    pt: bool
    symmetric: bool
    conjugation: bool
    residual_bound: float
    failed: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("seconds")
        return out


@dataclass
class CampaignSummary:
    mode: str
    config_hash: str
    provenance: dict[str, Any]
    setup: dict[str, Any]
    regions: list[dict[str, Any]]
    trials: list[TrialRecord]
    aggregate: dict[str, Any]
    out_dir: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "config_hash": self.config_hash,
            "provenance": self.provenance,
            "setup": self.setup,
            "regions": self.regions,
            "trials": [t.to_json() for t in self.trials],
            "aggregate": self.aggregate,
        }


# ---------------------------------------------------------------- helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def eig_csv(z: np.ndarray, trial: int, flags: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "trial", "flag_boundary"])
    for v, f in zip(z, flags):
        w.writerow([repr(float(v.real)), repr(float(v.imag)), trial, int(f)])
    return buf.getvalue()


def n_workers(trials: int) -> int:
    env = os.environ.get("PTWEYL_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, trials))


def _map_trials(fn: Callable[[int], Any], trials: int) -> list[Any]:
    workers = n_workers(trials)
    if workers == 1:
        return [fn(i) for i in range(trials)]
    # one BLAS thread per worker keeps each factorisation's arithmetic fixed
    with threadpool_limits(limits=1), ThreadPoolExecutor(workers) as ex:
        results = list(ex.map(fn, range(trials)))
    return results


def _fit_slope(x, y) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = y > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _region_key(i: int) -> str:
    return f"region_{i}"


class _Writer:
    def __init__(self, out_dir: str | Path | None):
        self.root = Path(out_dir) if out_dir else None
        self.files: dict[str, str] = {}
        if self.root:
            (self.root / "eigs").mkdir(parents=True, exist_ok=True)

    def write(self, rel: str, text: str, hashed: bool = True) -> str | None:
        if not self.root:
            return None
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        path.write_bytes(data)
        if hashed:
            self.files[rel] = hashlib.sha256(data).hexdigest()
        return rel

    def manifest(self):
        if self.root:
            self.write("manifest.json", dumps({"files": self.files}), hashed=False)


def _provenance(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "code_version": __version__,
        "rng": RNG_ALGORITHM,
        "seed_rule": "seed = base_seed + trial_index",
        "base_seed": cfg.base_seed,
    }


# ---------------------------------------------------------- semiclassical


def _success_thresholds(cfg: ExperimentConfig, tubes: list[float]) -> dict[str, float]:
    h, C = cfg.h, cfg.C
    out = {}
    for r, tube in zip(cfg.r_list, tubes):
        for et in cfg.eps_tilde_list:
            bound = (C / h) * (et / r + C * (r + math.log(1 / r) * tube))
            out[f"r={r!r},eps_tilde={et!r}"] = bound
    return out


def range_grid(spec, zmax: float, tol: float, cap: int = 8000) -> QuadratureGrid:
    """Grid fine enough that sampled symbol values are ~tol/4 apart."""
    Xi = xi_bound(spec, zmax)
    x = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    dx_sym = max(
        sum(abs(k * c) for k, c in a.coeffs.items()) * Xi ** (2 * b) for b, a in spec.div_terms
    ) + sum(abs(k * c) for k, c in spec.potential.coeffs.items())
    dxi_sym = float(np.max(np.abs(spec.top_coefficient(x)))) * spec.order * Xi ** (spec.order - 1)
    nx = int(min(cap, max(64, math.ceil(2 * math.pi * 4 * max(dx_sym, 1e-3) / tol))))
    nxi = int(min(cap, max(64, math.ceil(2 * Xi * 4 * dxi_sym / tol))))
    return QuadratureGrid(nx, nxi, Xi)


def run_semiclassical(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> CampaignSummary:
    if cfg.mode != "semiclassical":
        raise ValueError("run_semiclassical needs a semiclassical config")
    spec, h = cfg.operator, cfg.h
    basis = FourierBasis(cfg.K)
    P = assemble_operator(spec, basis)
    overrides = {"K": cfg.K, "R": cfg.R, "C": cfg.C}
    if cfg.coupling is not None:
        overrides["coupling"] = cfg.coupling
    plan = derive_plan(h, spec.order, cfg.s, cfg.eps, cfg.tau0, overrides)
    elems = enumerate_perturb_basis(basis, plan.L / h)
    D = len(elems)

    zmax = max(r.outer_radius for r in cfg.regions)
    grid = cfg.grid(xi_bound(spec, zmax))
    volumes, tubes, regions_out = [], [], []
    for i, reg in enumerate(cfg.regions):
        vol = preimage_volume_converged(spec, reg, grid)
        tube = tube_profile(spec, reg, cfg.r_list, grid) if cfg.r_list else []
        volumes.append(vol)
        tubes.append(tube)
        regions_out.append(
            {
                "key": _region_key(i),
                "region": reg.to_json(),
                "volume": vol,
                "prediction": vol["fine"] / (2 * math.pi * h),
                "boundary_tube": dict(zip(map(repr, cfg.r_list), tube)),
            }
        )
    writer = _Writer(out_dir)

    def trial(i: int):
        t0 = time.perf_counter()
        seed = cfg.base_seed + i
        cv = sample_ball(D, plan.R, seed)
        q = build_q(cv, elems)
        A = perturbed_matrix(P, q, plan, basis)
        try:
            res = eigenvalues(A)
        except ConvergenceError as exc:
            return TrialRecord(i, seed, cv.norm, None, {}, False, False, False, math.nan, failed=str(exc)), None
        z = res.eigenvalues
        flags = np.zeros(z.size, dtype=bool)
        counts = {}
        for j, reg in enumerate(cfg.regions):
            flags |= boundary_flags(z, reg)
            counts[_region_key(j)] = count_in_region(z, reg)
        rec = TrialRecord(
            trial=i,
            seed=seed,
            coeff_norm=cv.norm,
            eigenvalues_file=None,
            counts=counts,
            pt=pt_matrix_check(A),
            symmetric=symmetry_check(A),
            conjugation=spectrum_conjugation_check(res, 1e-8),
            residual_bound=res.residual_bound,
            extra={"nonreal": int(np.count_nonzero(np.abs(z.imag) > 1e-8 * max(1.0, np.max(np.abs(z)))))},
        )
        rec.seconds = time.perf_counter() - t0
        return rec, (z, flags)

    results = _map_trials(trial, cfg.trials)
    records = []
    all_z = []
    for rec, payload in sorted(results, key=lambda r: r[0].trial):
        if payload is not None:
            z, flags = payload
            rec.eigenvalues_file = writer.write(f"eigs/trial_{rec.trial:04d}.csv", eig_csv(z, rec.trial, flags))
            all_z.append(z)
        records.append(rec)

    agg: dict[str, Any] = {"per_region": {}}
    ok = [r for r in records if r.failed is None]
    thresholds_all = []
    for j, info in enumerate(regions_out):
        key = info["key"]
        pred = info["prediction"]
        cnt = np.array([r.counts[key] for r in ok], dtype=float)
        dev = np.abs(cnt - pred)
        rel = dev / pred if pred > 0 else np.where(cnt == 0, 0.0, np.inf)
        thr = _success_thresholds(cfg, tubes[j]) if cfg.r_list else {}
        thresholds_all.append(thr)
        agg["per_region"][key] = {
            "prediction": pred,
            "counts": cnt.astype(int).tolist(),
            "deviation_mean": float(dev.mean()) if dev.size else None,
            "deviation_min": float(dev.min()) if dev.size else None,
            "deviation_max": float(dev.max()) if dev.size else None,
            "relative_deviation_median": float(np.median(rel)) if dev.size else None,
            "within_relative": {repr(t): float(np.mean(rel <= t)) if dev.size else 0.0 for t in cfg.rel_tols},
            "success_fraction": {k: float(np.mean(dev <= b)) if dev.size else 0.0 for k, b in thr.items()},
            "success_threshold": thr,
        }
    if all_z:
        zz = np.concatenate(all_z)
        rg = range_grid(spec, float(np.max(np.abs(zz))) + cfg.range_tol, cfg.range_tol)
        d = distance_to_symbol_range(spec, zz, rg)
        agg["symbol_range"] = {
            "tol": cfg.range_tol,
            "fraction_within": float(np.mean(d <= cfg.range_tol)),
            "max_distance": float(d.max()),
            "grid": [rg.nx, rg.nxi, rg.xi_max],
        }
    agg["verdicts"] = {
        "pt_fraction": float(np.mean([r.pt for r in ok])) if ok else 0.0,
        "symmetric_fraction": float(np.mean([r.symmetric for r in ok])) if ok else 0.0,
        "conjugation_fraction": float(np.mean([r.conjugation for r in ok])) if ok else 0.0,
        "failed_trials": [r.trial for r in records if r.failed],
        "max_residual": float(max((r.residual_bound for r in ok), default=math.nan)),
    }
    setup = {
        "operator": spec.to_json(),
        "symbol_checks": check_pt_symbol(spec),
        "K": cfg.K,
        "dim": basis.dim,
        "trials": cfg.trials,
        "plan": plan.to_json(),
        "D": D,
        "grid": [grid.nx, grid.nxi, grid.xi_max],
    }
    summary = CampaignSummary("semiclassical", cfg.hash(), _provenance(cfg), setup, regions_out, records, agg, str(out_dir) if out_dir else None)
    _finish(writer, summary)
    return summary


# ------------------------------------------------------------------ large


def trust_radius(spec, K: int, eta: float) -> float:
    return (eta * K) ** spec.order * spec.min_top_modulus()


def run_large(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> CampaignSummary:
    if cfg.mode != "large" or cfg.schedule is None:
        raise ValueError("run_large needs a large-mode config with a schedule")
    spec = cfg.operator
    basis = FourierBasis(cfg.K)
    P0 = assemble_operator(spec, basis)
    elems = enumerate_perturb_basis(basis, math.sqrt(cfg.K**2 + 1))
    mus = np.array([e.mu0 for e in elems])
    trust = trust_radius(spec, cfg.K, cfg.trust_eta)
    lambdas = sorted(cfg.lambdas)
    m = spec.order

    sectors = []
    regions_out = []
    for i, reg in enumerate(cfg.regions):
        if not isinstance(reg, Sector):
            raise ValueError(f"large mode expects sector regions (regions[{i}])")
        nd = {
            "theta1": nondegeneracy_order(spec, reg.theta1, 8),
            "theta2": nondegeneracy_order(spec, reg.theta2, 8),
        }
        if nd["theta1"] is None or nd["theta2"] is None:
            log.warning("nondegeneracy fails at a sector edge of regions[%d]; theorem does not apply", i)
        per_lam = {}
        for lam in lambdas:
            sec = reg.with_lambda(lam)
            g = QuadratureGrid(cfg.nx, cfg.nxi, xi_bound(spec, sec.outer_radius, principal_only=True))
            vol = preimage_volume_converged(spec, sec, g, principal_only=True)
            per_lam[repr(lam)] = {
                "volume": vol,
                "prediction": vol["fine"] / (2 * math.pi),
                "trusted": sec.outer_radius <= trust,
            }
        sectors.append(reg)
        regions_out.append(
            {"key": _region_key(i), "region": reg.to_json(), "nondegeneracy": nd, "lambdas": per_lam}
        )
    writer = _Writer(out_dir)

    def draw_q(seed):
        cv = sample_gaussian(cfg.schedule, mus, seed)
        return cv, build_q(cv, elems)

    def trial(i: int):
        t0 = time.perf_counter()
        seed = cfg.base_seed + i
        cv, q = draw_q(seed)
        A = P0 + assemble_multiplication(q, basis)
        try:
            res = eigenvalues(A)
        except ConvergenceError as exc:
            return TrialRecord(i, seed, cv.norm, None, {}, False, False, False, math.nan, failed=str(exc)), None
        z = res.eigenvalues
        inside = np.abs(z) <= trust
        flags = np.zeros(z.size, dtype=bool)
        counts: dict[str, Any] = {}
        extra: dict[str, Any] = {"beyond_trust": int(np.count_nonzero(~inside))}
        for j, reg in enumerate(sectors):
            key = _region_key(j)
            per = {}
            for lam in lambdas:
                sec = reg.with_lambda(lam)
                if sec.outer_radius > trust:
                    per[repr(lam)] = None
                    continue
                flags |= boundary_flags(z, sec)
                per[repr(lam)] = count_in_region(z[inside], sec)
            counts[key] = per
            trusted = [lam for lam in lambdas if per[repr(lam)] is not None]
            cs = [per[repr(lam)] for lam in trusted]
            preds = [regions_out[j]["lambdas"][repr(lam)]["prediction"] for lam in trusted]
            devs = [abs(c - p) for c, p in zip(cs, preds)]
            extra[key] = {
                "growth_exponent": _fit_slope(trusted, cs),
                "deviation_exponent": _fit_slope(trusted, devs),
                "largest_trusted_lambda": trusted[-1] if trusted else None,
                "relative_deviation_at_largest": (devs[-1] / preds[-1]) if trusted and preds[-1] > 0 else None,
            }
        rec = TrialRecord(
            trial=i,
            seed=seed,
            coeff_norm=cv.norm,
            eigenvalues_file=None,
            counts=counts,
            pt=pt_matrix_check(A),
            symmetric=symmetry_check(A),
            conjugation=spectrum_conjugation_check(res, 1e-8),
            residual_bound=res.residual_bound,
            extra=extra,
        )
        rec.seconds = time.perf_counter() - t0
        return rec, (z, flags)

    results = _map_trials(trial, cfg.trials)
    records = []
    for rec, payload in sorted(results, key=lambda r: r[0].trial):
        if payload is not None:
            z, flags = payload
            rec.eigenvalues_file = writer.write(f"eigs/trial_{rec.trial:04d}.csv", eig_csv(z, rec.trial, flags))
        records.append(rec)

    ok = [r for r in records if r.failed is None]
    n_over_m = 1 / m
    agg: dict[str, Any] = {"per_region": {}, "trust_radius": trust, "weyl_exponent": n_over_m}
    for j, info in enumerate(regions_out):
        key = info["key"]
        exps = [r.extra[key]["growth_exponent"] for r in ok]
        rels = [r.extra[key]["relative_deviation_at_largest"] for r in ok]
        mean_counts = {}
        for lam in lambdas:
            vals = [r.counts[key][repr(lam)] for r in ok if r.counts[key][repr(lam)] is not None]
            mean_counts[repr(lam)] = float(np.mean(vals)) if vals else None
        good = [
            e is not None and rl is not None and abs(e - n_over_m) <= 0.05 and rl <= 0.15
            for e, rl in zip(exps, rels)
        ]
        agg["per_region"][key] = {
            "mean_counts": mean_counts,
            "growth_exponents": exps,
            "relative_deviation_at_largest": rels,
            "fraction_exponent_and_deviation_ok": float(np.mean(good)) if good else 0.0,
        }
    agg["verdicts"] = {
        "pt_fraction": float(np.mean([r.pt for r in ok])) if ok else 0.0,
        "symmetric_fraction": float(np.mean([r.symmetric for r in ok])) if ok else 0.0,
        "conjugation_fraction": float(np.mean([r.conjugation for r in ok])) if ok else 0.0,
        "failed_trials": [r.trial for r in records if r.failed],
        "max_residual": float(max((r.residual_bound for r in ok), default=math.nan)),
    }
    if cfg.validate_trust:
        agg["trust_validation"] = validate_trust(P0, spec, cfg, draw_q(cfg.base_seed)[1], trust)

    setup = {
        "operator": spec.to_json(),
        "symbol_checks": check_pt_symbol(spec),
        "K": cfg.K,
        "dim": basis.dim,
        "trials": cfg.trials,
        "schedule": asdict(cfg.schedule) | {"M": cfg.schedule.M},
        "D": len(elems),
        "lambdas": lambdas,
        "trust_eta": cfg.trust_eta,
    }
    summary = CampaignSummary("large", cfg.hash(), _provenance(cfg), setup, regions_out, records, agg, str(out_dir) if out_dir else None)
    _finish(writer, summary)
    return summary


def validate_trust(P0, spec, cfg: ExperimentConfig, q, trust: float) -> dict[str, Any]:
    """Compare trusted eigenvalues at cutoff K and 2K for the same perturbation."""
    z1 = eigenvalues(P0 + assemble_multiplication(q, FourierBasis(cfg.K))).eigenvalues
    b2 = FourierBasis(2 * cfg.K)
    z2 = eigenvalues(assemble_operator(spec, b2) + assemble_multiplication(q, b2)).eigenvalues
    a = z1[np.abs(z1) <= trust]
    if a.size == 0:
        return {"compared": 0}
    d = np.min(np.abs(a[:, None] - z2[None, :]), axis=1)
    relerr = d / np.maximum(np.abs(a), 1.0)
    return {
        "compared": int(a.size),
        "max_abs_shift": float(d.max()),
        "max_rel_shift": float(relerr.max()),
        "median_rel_shift": float(np.median(relerr)),
    }


def _finish(writer: _Writer, summary: CampaignSummary) -> None:
    if not writer.root:
        return
    writer.write("summary.json", dumps(summary.to_json()))
    timing = {f"trial_{r.trial:04d}": r.seconds for r in summary.trials}
    writer.write("timing.json", dumps(timing), hashed=False)
    writer.manifest()


# ------------------------------------------------------------ single draws


def trial_matrix(cfg: ExperimentConfig, seed: int) -> tuple[np.ndarray, FourierBasis]:
    """The perturbed matrix a campaign would build for ``seed``."""
    spec = cfg.operator
    basis = FourierBasis(cfg.K)
    P = assemble_operator(spec, basis)
    if cfg.mode == "large":
        elems = enumerate_perturb_basis(basis, math.sqrt(cfg.K**2 + 1))
        cv = sample_gaussian(cfg.schedule, [e.mu0 for e in elems], seed)
        return P + assemble_multiplication(build_q(cv, elems), basis), basis
    overrides = {"K": cfg.K, "R": cfg.R, "C": cfg.C}
    if cfg.coupling is not None:
        overrides["coupling"] = cfg.coupling
    plan = derive_plan(cfg.h, spec.order, cfg.s, cfg.eps, cfg.tau0, overrides)
    elems = enumerate_perturb_basis(basis, plan.L / cfg.h)
    q = build_q(sample_ball(len(elems), plan.R, seed), elems)
    return perturbed_matrix(P, q, plan, basis), basis


def kyfan_campaign(trials: int, n_max: int = 64, seed: int = 0, h: float = 0.1) -> dict[str, Any]:
    """Ky Fan splitting on random complex coefficient vectors, N drawn in [2, n_max]."""
    from .randomize import make_rng
    from .verify import kyfan_split_check

    rng = make_rng(seed)
    basis = FourierBasis(2 * n_max)
    elems = enumerate_perturb_basis(basis, math.sqrt((2 * n_max) ** 2 + 1))
    violations = 0
    bad_instances = []
    profiles = []
    for t in range(trials):
        N = int(rng.integers(2, n_max + 1))
        c = rng.standard_normal(len(elems)) + 1j * rng.standard_normal(len(elems))
        rep = kyfan_split_check(c, elems, N, h)
        if rep.violations:
            violations += len(rep.violations)
            bad_instances.append(t)
        profiles.append(rep.lower_bound_profile["either_fraction"])
    return {
        "instances": trials,
        "n_max": n_max,
        "seed": seed,
        "violations": violations,
        "bad_instances": bad_instances,
        "lower_bound_either_fraction_mean": float(np.mean(profiles)) if profiles else None,
    }
