import json

import pytest


def tri_config(h=0.1, K=24, coupling=0.0, trials=1, regions=None, **extra):
    """Config dict for (hD)^2 + e^{ix} with a ball perturbation."""
    cfg = {
        "version": 1,
        "mode": "semiclassical",
        "operator": {
            "h": h,
            "div_terms": [{"beta": 1, "coeffs": {"0": [1.0, 0.0]}}],
            "potential": {"1": [1.0, 0.0]},
        },
        "regions": regions or [{"type": "disc", "center": [2.0, 0.5], "radius": 0.3}],
        "trials": trials,
        "base_seed": 1000,
        "K": K,
        "plan": {"s": 1.0, "eps": 0.25, "coupling": coupling},
        "grid": {"nx": 128, "nxi": 128},
        "r_list": [0.1],
        "eps_tilde_list": [0.1],
    }
    cfg.update(extra)
    return cfg


def large_config(a_imag=0.5, K=40, trials=1, lambdas=(100.0, 200.0), sector=(0.05, 0.4), **extra):
    coeffs = {"0": [1.0, 0.0]}
    if a_imag:
        # a_imag * i sin x = (a_imag/2) e^{ix} - (a_imag/2) e^{-ix}
        coeffs.update({"1": [a_imag / 2, 0.0], "-1": [-a_imag / 2, 0.0]})
    cfg = {
        "version": 1,
        "mode": "large",
        "operator": {"h": 1.0, "div_terms": [{"beta": 1, "coeffs": coeffs}]},
        "regions": [{"type": "sector", "theta1": sector[0], "theta2": sector[1], "lambda": 1.0, "g": 1.0}],
        "trials": trials,
        "base_seed": 7,
        "K": K,
        "schedule": {"rho": 2.0, "beta": 0.0},
        "lambdas": list(lambdas),
        "trust_eta": 0.5,
        "grid": {"nx": 128, "nxi": 256},
    }
    cfg.update(extra)
    return cfg


@pytest.fixture
def write_config(tmp_path):
    def _write(cfg, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(cfg))
        return p

    return _write


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
