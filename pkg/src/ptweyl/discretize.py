"""Fourier-Galerkin truncation of operators on the circle.

Basis functions are exp(ikx)/sqrt(2pi) for k = -K..K, always in that order
(row/column index i corresponds to frequency i - K).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .symbols import OperatorSpec, TrigPoly

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FourierBasis:
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("cutoff K must be non-negative")

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def index(self, k: int) -> int:
        if abs(k) > self.K:
            raise IndexError(f"mode {k} outside cutoff {self.K}")
        return k + self.K


@dataclass(frozen=True)
class PerturbBasisElement:
    """Phased eigenfunction of the reference operator 1 - d^2/dx^2.

    even: cos(kx)/sqrt(pi) (constant 1/sqrt(2pi) at k=0); odd: i sin(kx)/sqrt(pi).
    Both have real Fourier coefficients, so real combinations are PT symmetric.
    """

    index: int
    parity: str
    k: int
    mu0: float
    function: TrigPoly


def _toeplitz_from(q: TrigPoly, basis: FourierBasis) -> np.ndarray:
    K = basis.K
    if q.bandwidth > 2 * K:
        log.warning(
            "coefficient bandwidth %d exceeds 2K=%d; higher frequencies dropped",
            q.bandwidth,
            2 * K,
        )
    dense = q.dense(2 * K)  # index d + 2K holds coefficient of frequency d
    k = basis.modes
    return dense[(k[:, None] - k[None, :]) + 2 * K]


def assemble_multiplication(q: TrigPoly, basis: FourierBasis) -> np.ndarray:
    """Matrix of u -> q u; entry (row j, col k) is the coefficient of frequency j - k."""
    return _toeplitz_from(q, basis)


def assemble_operator(spec: OperatorSpec, basis: FourierBasis) -> np.ndarray:
    if not spec.is_elliptic():
        raise ValueError("operator is not elliptic: principal coefficient vanishes")
    hk = spec.h * basis.modes.astype(float)
    A = assemble_multiplication(spec.potential, basis).astype(complex)
    for beta, a in spec.div_terms:
        w = hk**beta
        # weight product first: makes A[j,k] == A[-k,-j] bitwise
        A = A + _toeplitz_from(a, basis) * (w[:, None] * w[None, :])
    return A


def enumerate_perturb_basis(basis: FourierBasis, mu_max: float) -> list[PerturbBasisElement]:
    """All phased eigenfunctions with mu0 = sqrt(k^2 + 1) <= mu_max and k <= K."""
    if not mu_max > 0:
        raise ValueError("mu_max must be positive")
    raw = []
    for k in range(basis.K + 1):
        mu0 = math.sqrt(k * k + 1)
        if mu0 > mu_max * (1 + 1e-15):
            break
        if k == 0:
            raw.append(("even", 0, mu0, TrigPoly.constant(1 / math.sqrt(2 * math.pi))))
            continue
        c = 1 / math.sqrt(math.pi)
        raw.append(("even", k, mu0, TrigPoly.cos(k, c)))
        # i*sin(kx) = (e^{ikx} - e^{-ikx}) / 2: coefficients exactly real
        raw.append(("odd", k, mu0, TrigPoly({k: c / 2, -k: -c / 2})))
    raw.sort(key=lambda r: (r[2], r[0] != "even"))
    return [PerturbBasisElement(i, par, k, mu0, f) for i, (par, k, mu0, f) in enumerate(raw)]


def gram_matrix(funcs: list[TrigPoly]) -> np.ndarray:
    """L^2 Gram matrix <f_j, f_l> = int f_j conj(f_l) dx via coefficient contraction."""
    kmax = max((f.bandwidth for f in funcs), default=0)
    F = np.array([f.dense(kmax) for f in funcs])
    return 2 * np.pi * F @ F.conj().T


def dump_matrix_csv(A: np.ndarray, path: str | Path) -> None:
    """Row-major text dump, one entry per line: row,col,re,im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        n, m = A.shape
        for i in range(n):
            for j in range(m):
                z = complex(A[i, j])
                w.writerow([i, j, repr(z.real), repr(z.imag)])


def load_matrix_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = max(int(r["row"]) for r in rows) + 1
    m = max(int(r["col"]) for r in rows) + 1
    A = np.zeros((n, m), dtype=complex)
    for r in rows:
        A[int(r["row"]), int(r["col"])] = complex(float(r["re"]), float(r["im"]))
    return A
