"""Symbol-level algebra on the circle R/2piZ.

Trigonometric polynomials carry every coefficient function (kinetic
coefficients, potentials, random perturbations).  An operator is stored in
symmetric divergence form

    P = sum_beta (hD)^beta a_beta(x) (hD)^beta + V(x),   D = -i d/dx,

so its full symbol is p(x, xi) = sum_beta a_beta(x) xi^(2 beta) + V(x) and its
principal symbol is a_top(x) xi^m with m = 2 max(beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

TWO_PI = 2.0 * np.pi


class InsufficientData(ValueError):
    """Raised when a fit does not have enough usable samples."""


class TrigPoly:
    """Finite Fourier series x -> sum_k c_k exp(ikx) on the circle of length 2pi.

    Coefficients are stored as an immutable mapping frequency -> complex;
    exact zeros are dropped.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, complex] | None = None):
        clean = {}
        for k, c in (coeffs or {}).items():
            c = complex(c)
            if c != 0:
                clean[int(k)] = c
        self._coeffs = dict(sorted(clean.items()))

    # construction helpers
    @classmethod
    def constant(cls, c: complex) -> "TrigPoly":
        return cls({0: c})

    @classmethod
    def exp(cls, k: int, c: complex = 1.0) -> "TrigPoly":
        return cls({k: c})

    @classmethod
    def cos(cls, k: int, c: complex = 1.0) -> "TrigPoly":
        if k == 0:
            return cls({0: c})
        return cls({k: c / 2, -k: c / 2})

    @classmethod
    def sin(cls, k: int, c: complex = 1.0) -> "TrigPoly":
        if k == 0:
            return cls()
        return cls({k: c / 2j, -k: -c / 2j})

    @classmethod
    def from_array(cls, values: np.ndarray, kmin: int) -> "TrigPoly":
        """Build from a dense coefficient array whose first entry is frequency ``kmin``."""
        return cls({kmin + i: v for i, v in enumerate(np.asarray(values))})

    @property
    def coeffs(self) -> dict[int, complex]:
        return dict(self._coeffs)

    def coeff(self, k: int) -> complex:
        return self._coeffs.get(k, 0j)

    @property
    def bandwidth(self) -> int:
        return max((abs(k) for k in self._coeffs), default=0)

    def dense(self, kmax: int) -> np.ndarray:
        """Coefficients for frequencies -kmax..kmax; higher frequencies are dropped."""
        out = np.zeros(2 * kmax + 1, dtype=complex)
        for k, c in self._coeffs.items():
            if abs(k) <= kmax:
                out[k + kmax] = c
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for k, c in self._coeffs.items():
            out += c * np.exp(1j * k * x)
        return out if out.ndim else complex(out)

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        acc = dict(self._coeffs)
        for k, c in other._coeffs.items():
            acc[k] = acc.get(k, 0j) + c
        return TrigPoly(acc)

    __radd__ = __add__

    def __mul__(self, s: complex) -> "TrigPoly":
        return TrigPoly({k: s * c for k, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "TrigPoly":
        return self * -1

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigPoly) and self._coeffs == other._coeffs

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def __repr__(self) -> str:
        return f"TrigPoly({self._coeffs!r})"

    def conj(self) -> "TrigPoly":
        """Pointwise complex conjugate: c_k -> conj(c_{-k})."""
        return TrigPoly({-k: c.conjugate() for k, c in self._coeffs.items()})

    def reflect(self) -> "TrigPoly":
        """x -> f(-x)."""
        return TrigPoly({-k: c for k, c in self._coeffs.items()})

    def is_real(self, tol: float = 0.0) -> bool:
        return all(
            abs(c - self.coeff(-k).conjugate()) <= tol for k, c in self._coeffs.items()
        )

    def is_pt(self, tol: float = 0.0) -> bool:
        # f(-x) = conj f(x)  <=>  c_{-k} = conj(c_{-k})  <=>  all c_k real
        return all(abs(c.imag) <= tol for c in self._coeffs.values())

    def l2_norm(self) -> float:
        return math.sqrt(TWO_PI * sum(abs(c) ** 2 for c in self._coeffs.values()))

    def hs_norm(self, h: float, s: float) -> float:
        """Semiclassical Sobolev norm ||<hD>^s f||_{L^2}; diagnostics only."""
        acc = sum((1 + (h * k) ** 2) ** s * abs(c) ** 2 for k, c in self._coeffs.items())
        return math.sqrt(TWO_PI * acc)

    def to_json(self) -> dict[str, list[float]]:
        return {str(k): [c.real, c.imag] for k, c in self._coeffs.items()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Iterable[float]] | float | int) -> "TrigPoly":
        if isinstance(obj, (int, float)):
            return cls.constant(obj)
        coeffs = {}
        for key, val in obj.items():
            try:
                k = int(key)
            except ValueError:
                raise ValueError(f"frequency key {key!r} is not an integer") from None
            if isinstance(val, (int, float)):
                coeffs[k] = complex(val)
            else:
                re, im = val
                coeffs[k] = complex(re, im)
        return cls(coeffs)


@dataclass(frozen=True)
class OperatorSpec:
    """Symmetric divergence-form operator with semiclassical parameter ``h``.

    ``div_terms`` holds pairs ``(beta, a_beta)`` meaning (hD)^beta a_beta (hD)^beta.
    """

    h: float
    div_terms: tuple[tuple[int, TrigPoly], ...]
    potential: TrigPoly = field(default_factory=TrigPoly)

    def __post_init__(self):
        if not (0 < self.h <= 1):
            raise ValueError(f"h must lie in (0, 1], got {self.h}")
        terms = tuple((int(b), a) for b, a in self.div_terms)
        if not terms:
            raise ValueError("operator needs at least one divergence-form term")
        if any(b < 0 for b, _ in terms):
            raise ValueError("beta must be a non-negative integer")
        object.__setattr__(self, "div_terms", terms)
        if self.order < 2:
            raise ValueError(f"order m = 2*max(beta) must be >= 2, got {self.order}")

    @property
    def order(self) -> int:
        return 2 * max(b for b, _ in self.div_terms)

    @property
    def top_coefficient(self) -> TrigPoly:
        top = self.order // 2
        acc = TrigPoly()
        for b, a in self.div_terms:
            if b == top:
                acc = acc + a
        return acc

    def coefficient_polys(self) -> list[TrigPoly]:
        return [a for _, a in self.div_terms] + [self.potential]

    def min_top_modulus(self, npts: int = 4096) -> float:
        x = np.arange(npts) * (TWO_PI / npts)
        return float(np.min(np.abs(self.top_coefficient(x))))

    def is_elliptic(self, npts: int = 4096, tol: float = 1e-12) -> bool:
        return self.min_top_modulus(npts) > tol

    def with_h(self, h: float) -> "OperatorSpec":
        return OperatorSpec(h, self.div_terms, self.potential)

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "div_terms": [{"beta": b, "coeffs": a.to_json()} for b, a in self.div_terms],
            "potential": self.potential.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "OperatorSpec":
        terms = []
        for i, t in enumerate(obj.get("div_terms", [])):
            if "alpha" in t:
                raise ValueError(
                    f"div_terms[{i}]: one-sided term a(x)(hD)^alpha is not symmetric "
                    "under the bilinear transpose; use {beta, coeffs} divergence form"
                )
            terms.append((int(t["beta"]), TrigPoly.from_json(t["coeffs"])))
        return cls(float(obj["h"]), tuple(terms), TrigPoly.from_json(obj.get("potential", {})))


def eval_symbol(spec: OperatorSpec, x, xi):
    """Full symbol sum_beta a_beta(x) xi^(2 beta) + V(x); broadcasts over x, xi."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = spec.potential(x) + np.zeros(np.broadcast(x, xi).shape)
    for b, a in spec.div_terms:
        out = out + a(x) * xi ** (2 * b)
    return out if np.ndim(out) else complex(out)


def eval_principal(spec: OperatorSpec, x, xi):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = spec.top_coefficient(x) * xi ** spec.order
    return out if np.ndim(out) else complex(out)


def check_pt_symbol(spec: OperatorSpec) -> dict[str, bool]:
    # symmetric holds by construction for divergence form plus potential
    return {
        "pt": all(a.is_pt() for a in spec.coefficient_polys()),
        "symmetric": True,
    }


def xi_bound(
    spec: OperatorSpec,
    z_max: float,
    *,
    principal_only: bool = False,
    safety: float = 1.5,
    cap: float = 1e8,
    npts: int = 1024,
) -> float:
    """Radius Xi such that min_x |p(x, xi)| > z_max for every |xi| >= Xi.

    Coarse doubling search followed by bisection, then scaled by ``safety``.
    """
    x = np.arange(npts) * (TWO_PI / npts)
    sym = eval_principal if principal_only else eval_symbol

    def ok(r: float) -> bool:
        # check a short ray beyond r; |p| is eventually monotone by ellipticity
        rs = r * np.array([1.0, 1.25, 1.5, 2.0, 3.0])
        vals = np.abs(sym(spec, x[:, None], np.concatenate([rs, -rs])[None, :]))
        return bool(np.min(vals) > z_max)

    hi = 1e-3
    while not ok(hi):
        hi *= 2
        if hi > cap:
            raise ValueError("no xi bound below cap; symbol is not elliptic?")
    lo = hi / 2 if hi > 1e-3 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return safety * hi


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform midpoint grid on [0, 2pi) x [-xi_max, xi_max]."""

    nx: int
    nxi: int
    xi_max: float

    def __post_init__(self):
        if self.nx < 16 or self.nxi < 16:
            raise ValueError("quadrature grid needs nx, nxi >= 16")
        if not self.xi_max > 0:
            raise ValueError("xi_max must be positive")

    @property
    def cell(self) -> float:
        return (TWO_PI / self.nx) * (2 * self.xi_max / self.nxi)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * (TWO_PI / self.nx)

    @property
    def xi(self) -> np.ndarray:
        return -self.xi_max + (np.arange(self.nxi) + 0.5) * (2 * self.xi_max / self.nxi)

    def refined(self, factor: int = 2) -> "QuadratureGrid":
        return QuadratureGrid(self.nx * factor, self.nxi * factor, self.xi_max)

    def symbol_chunks(self, spec: OperatorSpec, principal_only: bool = False, rows: int = 256):
        """Yield symbol values on blocks of x rows (keeps memory bounded)."""
        sym = eval_principal if principal_only else eval_symbol
        x, xi = self.x, self.xi
        for start in range(0, self.nx, rows):
            yield sym(spec, x[start : start + rows, None], xi[None, :])


@dataclass
class SymbolAnalysis:
    z: complex
    vz_samples: list[tuple[float, float]]
    kappa: float | None = None


def vz_curve(
    spec: OperatorSpec, z: complex, t_grid: Iterable[float], quad: QuadratureGrid
) -> SymbolAnalysis:
    """Sample V_z(t) = vol{(x, xi): |p(x, xi) - z|^2 <= t} by midpoint quadrature."""
    t = np.asarray(list(t_grid), dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("t_grid must contain positive values only")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    counts = np.zeros(t.size, dtype=np.int64)
    for block in quad.symbol_chunks(spec):
        d = np.sort(np.abs(block - z).ravel() ** 2)
        counts += np.searchsorted(d, t, side="right")
    vols = counts * quad.cell
    return SymbolAnalysis(complex(z), [(float(a), float(b)) for a, b in zip(t, vols)])


def kappa_fit(analysis: SymbolAnalysis, min_samples: int = 4) -> float:
    """Least-squares slope of log V_z(t) against log t over positive samples.

    Returns 1.0 when every sample vanishes (the bound is vacuous).  The value
    1/(2m) is always admissible and can serve as a fallback.
    """
    t = np.array([s[0] for s in analysis.vz_samples])
    v = np.array([s[1] for s in analysis.vz_samples])
    if np.all(v == 0):
        analysis.kappa = 1.0
        return 1.0
    pos = v > 0
    if pos.sum() < min_samples:
        raise InsufficientData(
            f"need >= {min_samples} positive V_z samples, got {int(pos.sum())}"
        )
    slope = float(np.polyfit(np.log(t[pos]), np.log(v[pos]), 1)[0])
    kappa = min(max(slope, np.finfo(float).tiny), 1.0)
    analysis.kappa = kappa
    return kappa


def _fd_derivative(f, x0: float, k: int, dx: float) -> float:
    # central k-th difference, nodes x0 + (k/2 - i) dx
    nodes = x0 + (k / 2 - np.arange(k + 1)) * dx
    w = np.array([(-1) ** i * math.comb(k, i) for i in range(k + 1)], dtype=float)
    return float(np.dot(w, f(nodes)) / dx**k)


def nondegeneracy_order(
    spec: OperatorSpec,
    theta0: float,
    n0_max: int,
    grid: int = 512,
    threshold: float = 1e-6,
) -> int | None:
    """Smallest N0 with sum_{k<=N0} |d^k F| != 0 on {F = theta0}, F = arg p_m on S*X.

    S*X is the pair of circles xi = +1 and xi = -1.  Returns 1 when the level
    set is empty and ``None`` when some level-set point has all derivatives up
    to ``n0_max`` below the noise threshold.
    """
    if n0_max < 1:
        raise ValueError("n0_max must be >= 1")
    dx = TWO_PI / grid
    x = np.arange(grid) * dx
    fd_step = 4 * dx
    worst = 1
    found = False
    for sgn in (1.0, -1.0):
        def G(xs, sgn=sgn):
            # F - theta0 wrapped to (-pi, pi]; smooth near the level set
            return np.angle(eval_principal(spec, xs, sgn) * np.exp(-1j * theta0))

        g = G(x)
        pts = list(x[np.abs(g) <= 1e-12])
        g_next = np.roll(g, -1)
        cross = (np.sign(g) * np.sign(g_next) < 0) & (np.abs(g - g_next) < np.pi)
        for i in np.nonzero(cross)[0]:
            a, b = x[i], x[i] + dx
            ga, gb = g[i], g_next[i]
            for _ in range(60):
                mid = 0.5 * (a + b)
                gm = float(G(np.array([mid]))[0])
                if np.sign(gm) == np.sign(ga):
                    a, ga = mid, gm
                else:
                    b = mid
            pts.append(0.5 * (a + b))
        for p0 in pts:
            found = True
            order = None
            for k in range(1, n0_max + 1):
                if abs(_fd_derivative(G, p0, k, fd_step)) > threshold:
                    order = k
                    break
            if order is None:
                return None
            worst = max(worst, order)
    return worst if found else 1
