"""Perturbation parameter ledger and random coefficient samplers.

All random draws come from numpy's Philox4x64 counter-based generator keyed by
a 64-bit integer seed, so a (seed, parameters) pair fixes the output bit for
bit on every platform numpy supports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .discretize import FourierBasis, PerturbBasisElement, assemble_multiplication, enumerate_perturb_basis
from .symbols import TrigPoly

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10)"


class PlanError(ValueError):
    """A parameter violates the domain of the perturbation ledger."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass
class PerturbationPlan:
    h: float
    n: int
    m: int
    kappa: float
    s: float
    eps: float
    M: float
    Mtilde: float
    N1: float
    tau0: float
    delta: float
    L: float
    L_cap_active: bool
    R: float
    D: int | float
    eps0: float
    coupling_faithful: float
    coupling_effective: float
    C: float = 1.0
    checks: list[dict[str, Any]] = field(default_factory=list)

    @property
    def violations(self) -> list[dict[str, Any]]:
        return [c for c in self.checks if not c["holds"]]

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["rng"] = RNG_ALGORITHM
        return out


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _check(checks, name, lhs, rhs, holds):
    margin = None
    if lhs > 0 and rhs > 0:
        margin = math.log10(rhs) - math.log10(lhs)
    checks.append(
        {"name": name, "lhs": float(lhs), "rhs": float(rhs), "holds": bool(holds), "log10_margin": margin}
    )


def derive_plan(
    h: float,
    m: int,
    s: float,
    eps: float,
    tau0: float | None = None,
    overrides: dict[str, Any] | None = None,
) -> PerturbationPlan:
    """Fill in the ledger for dimension n = 1.

    ``overrides`` may set ``kappa``, ``M``, ``Mtilde``, ``R``, ``C``, ``K``
    (available Fourier cutoff, caps L at h*K) and ``coupling`` (the coupling
    actually applied; default h**4 * tau0).
    """
    ov = dict(overrides or {})
    n = 1
    if not (0 < h <= 1):
        raise PlanError("0 < h <= 1 violated")
    if m < 2:
        raise PlanError("m >= 2 violated")
    if not s > n / 2:
        raise PlanError("s > n/2 violated")
    if not (0 < eps < s - n / 2):
        raise PlanError("0 < eps < s - n/2 violated")
    if tau0 is None:
        tau0 = math.sqrt(h)
    if not (0 < tau0 <= math.sqrt(h) * (1 + 1e-12)):
        raise PlanError("0 < tau0 <= sqrt(h) violated")

    kappa = _frac(ov.get("kappa", Fraction(1, 2 * m)))
    if not (0 < kappa <= 1):
        raise PlanError("kappa in (0, 1] violated")
    S, E = _frac(s), _frac(eps)
    gap = S - Fraction(n, 2) - E
    M_lo = (3 * n - kappa) / gap
    M = _frac(ov.get("M", M_lo))
    Mt_lo = Fraction(3 * n, 2) - kappa + (Fraction(n, 2) + E) * M
    Mt = _frac(ov.get("Mtilde", Mt_lo))
    N1 = Mt + S * M + Fraction(n, 2)
    C = float(ov.get("C", 1.0))

    checks: list[dict[str, Any]] = []
    _check(checks, "M >= (3n - kappa)/(s - n/2 - eps)", float(M_lo), float(M), M >= M_lo)
    _check(checks, "Mtilde >= 3n/2 - kappa + (n/2 + eps) M", float(Mt_lo), float(Mt), Mt >= Mt_lo)

    Mf, Mtf, N1f, kf = float(M), float(Mt), float(N1), float(kappa)
    L_hi = C * h ** (-Mf)
    K = ov.get("K")
    if K is not None:
        L = min(L_hi, h * K)
        cap_active = h * K < L_hi
    else:
        L, cap_active = L_hi, False
    L_lo = h ** ((kf - 3 * n) / float(gap))
    _check(checks, "h^((kappa-3n)/(s-n/2-eps)) << L", L_lo, L, L > L_lo)
    _check(checks, "L <= C h^-M", L, L_hi, L <= L_hi)

    R = float(ov.get("R", 1.0))
    R_lo = h ** (-(n / 2 + float(E)) * Mf + kf - 1.5 * n) / C
    R_hi = C * h ** (-Mtf)
    _check(checks, "R >= (1/C) h^(-(n/2+eps)M + kappa - 3n/2)", R_lo, R, R >= R_lo)
    _check(checks, "R <= C h^-Mtilde", R, R_hi, R <= R_hi)

    if K is not None:
        D: int | float = len(enumerate_perturb_basis(FourierBasis(int(K)), L / h))
    else:
        # count of k >= 0 with sqrt(k^2+1) <= L/h, two elements per k > 0
        kmax = math.floor(math.sqrt(max((L / h) ** 2 - 1, 0.0))) if L / h >= 1 else -1
        D = 2 * kmax + 1 if kmax >= 0 else 0

    delta = tau0 * h ** (N1f + n)
    lh = math.log(1 / h)
    eps0 = (h**kf + h**n * lh) * (math.log(1 / tau0) + lh**2)
    faithful = delta * h**N1f
    coupling = float(ov.get("coupling", h**4 * tau0))

    return PerturbationPlan(
        h=h, n=n, m=m, kappa=kf, s=float(S), eps=float(E), M=Mf, Mtilde=Mtf, N1=N1f,
        tau0=tau0, delta=delta, L=L, L_cap_active=cap_active, R=R, D=D, eps0=eps0,
        coupling_faithful=faithful, coupling_effective=coupling, C=C, checks=checks,
    )


@dataclass(frozen=True)
class CoeffVector:
    alpha: np.ndarray
    seed: int

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.alpha))


def sample_ball(D: int, R: float, seed: int) -> CoeffVector:
    """Uniform draw from the real ball B(0, R) in R^D."""
    if D < 1 or not R > 0:
        raise ValueError("need D >= 1 and R > 0")
    rng = make_rng(seed)
    g = rng.standard_normal(D)
    u = rng.random()
    nrm = np.linalg.norm(g)
    alpha = g / nrm * (R * u ** (1.0 / D)) if nrm > 0 else np.zeros(D)
    return CoeffVector(alpha, int(seed))


def sample_ball_batch(D: int, R: float, seed: int, count: int) -> np.ndarray:
    """``count`` independent uniform ball draws from one stream, shape (count, D)."""
    rng = make_rng(seed)
    g = rng.standard_normal((count, D))
    u = rng.random(count)
    return g / np.linalg.norm(g, axis=1, keepdims=True) * (R * u ** (1.0 / D))[:, None]


@dataclass(frozen=True)
class GaussianSchedule:
    """sigma_j = mu_j^-rho * exp(-c mu_j^(beta/(M+1))), c in {0, 1}."""

    rho: float
    beta: float = 0.0
    exponent_scale: int = 0
    s: float = 1.0
    eps: float = 0.25
    n: int = 1

    def __post_init__(self):
        n = self.n
        if not self.rho > n:
            raise PlanError("rho > n violated")
        if not (0 <= self.beta < 0.5):
            raise PlanError("0 <= beta < 1/2 violated")
        if not (n / 2 < self.s < self.rho - n / 2):
            raise PlanError("n/2 < s < rho - n/2 violated")
        if not (0 < self.eps < self.s - n / 2):
            raise PlanError("0 < eps < s - n/2 violated")
        if self.exponent_scale not in (0, 1):
            raise PlanError("exponent_scale must be 0 or 1")

    @property
    def M(self) -> float:
        n = self.n
        return (3 * n - 0.5) / (self.s - n / 2 - self.eps)

    def sigma(self, mus) -> np.ndarray:
        mus = np.asarray(mus, dtype=float)
        return mus ** (-self.rho) * np.exp(-self.exponent_scale * mus ** (self.beta / (self.M + 1)))

    def band(self, mus) -> tuple[np.ndarray, np.ndarray]:
        mus = np.asarray(mus, dtype=float)
        upper = mus ** (-self.rho)
        return upper * np.exp(-(mus ** (self.beta / (self.M + 1)))), upper


def sample_gaussian(schedule: GaussianSchedule, mus: Sequence[float], seed: int) -> CoeffVector:
    mus = np.asarray(mus, dtype=float)
    if np.any(mus <= 0):
        raise ValueError("mu values must be positive")
    rng = make_rng(seed)
    return CoeffVector(rng.standard_normal(mus.size) * schedule.sigma(mus), int(seed))


def build_q(coeffs: CoeffVector | np.ndarray, basis_elems: Sequence[PerturbBasisElement]) -> TrigPoly:
    alpha = coeffs.alpha if isinstance(coeffs, CoeffVector) else np.asarray(coeffs)
    if len(alpha) != len(basis_elems):
        raise ValueError(f"{len(alpha)} coefficients for {len(basis_elems)} basis elements")
    acc: dict[int, complex] = {}
    for a, el in zip(alpha, basis_elems):
        for k, c in el.function.coeffs.items():
            acc[k] = acc.get(k, 0j) + a * c
    return TrigPoly(acc)


def perturbed_matrix(
    P: np.ndarray, q: TrigPoly, plan: PerturbationPlan | float, basis: FourierBasis
) -> np.ndarray:
    """P + coupling * (multiplication by q); ``plan`` may be a bare coupling value."""
    coupling = plan.coupling_effective if isinstance(plan, PerturbationPlan) else float(plan)
    if P.shape != (basis.dim, basis.dim):
        raise ValueError("matrix and basis dimensions disagree")
    if coupling == 0:
        return P.copy()
    return P + coupling * assemble_multiplication(q, basis)
