"""Structural checks: PT realness, bilinear symmetry, conjugate pairing, Ky Fan splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .discretize import PerturbBasisElement
from .linalg import SpectralResult, singular_values
from .randomize import build_q


def pt_matrix_check(A, rtol: float = 1e-12) -> bool:
    """UGamma-commutation in the exponential basis is entrywise realness."""
    A = np.asarray(A)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0:
        return True
    return bool(np.max(np.abs(A.imag)) <= rtol * scale)


def symmetry_check(A, rtol: float = 1e-12) -> bool:
    """A_{jk} == A_{-k,-j} with indices read as frequencies -K..K.

    With the canonical ordering this is A == flip(A).T, i.e. invariance under
    reflection across the anti-diagonal.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2 == 0:
        raise ValueError("expected a square matrix of odd dimension 2K+1")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0:
        return True
    return bool(np.max(np.abs(A - A[::-1, ::-1].T)) <= rtol * scale)


def conjugate_matching(z) -> np.ndarray:
    """Greedy conjugate pairing; returns the matched distance for every point.

    Candidate pairs (i, j) with i <= j are processed in order of
    |z_i - conj(z_j)|, ties broken by index.  A real eigenvalue may pair with
    itself.
    """
    z = np.asarray(z, dtype=complex).ravel()
    n = z.size
    if n == 0:
        return np.zeros(0)
    d = np.abs(z[:, None] - z.conj()[None, :])
    iu, ju = np.triu_indices(n)
    dist = d[iu, ju]
    order = np.lexsort((ju, iu, dist))
    used = np.zeros(n, dtype=bool)
    out = np.full(n, np.inf)
    for t in order:
        i, j = iu[t], ju[t]
        if used[i] or used[j]:
            continue
        used[i] = used[j] = True
        out[i] = out[j] = dist[t]
        if used.all():
            break
    return out


def spectrum_conjugation_check(eigs, tol: float = 1e-8) -> bool:
    z = eigs.eigenvalues if isinstance(eigs, SpectralResult) else np.asarray(eigs, dtype=complex)
    if z.size == 0:
        return True
    radius = float(np.max(np.abs(z)))
    return bool(np.max(conjugate_matching(z)) <= tol * max(radius, np.finfo(float).tiny))


@dataclass
class KyFanReport:
    N: int
    s_q: np.ndarray
    s_q1: np.ndarray
    s_q2: np.ndarray
    violations: list[int] = field(default_factory=list)
    threshold: float = 0.0
    lower_bound_profile: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "s_q": self.s_q.tolist(),
            "s_q1": self.s_q1.tolist(),
            "s_q2": self.s_q2.tolist(),
            "violations": list(self.violations),
            "threshold": self.threshold,
            "lower_bound_profile": self.lower_bound_profile,
        }


def kyfan_inequality(Mq1, Mq2, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
    """Check s_{2k-1}(Mq1 + i Mq2) <= s_k(Mq1) + s_k(Mq2) for 1 <= 2k-1 <= N.

    Returns the three singular spectra and the 1-based k that fail.
    """
    Mq1 = np.asarray(Mq1)
    Mq2 = np.asarray(Mq2)
    s = singular_values(Mq1 + 1j * Mq2).values
    s1 = singular_values(Mq1).values
    s2 = singular_values(Mq2).values
    N = s.size
    tol = rtol * (s[0] if N else 0.0)
    bad = [k for k in range(1, (N + 1) // 2 + 1) if s[2 * k - 2] > s1[k - 1] + s2[k - 1] + tol]
    return s, s1, s2, bad


def bilinear_matrix(q, N: int) -> np.ndarray:
    """M_q[j, k] = int q e_j e_k dx for e_j = exp(ijx)/sqrt(2pi), j, k = 1..N.

    Without conjugation the integral picks out the Fourier coefficient of
    frequency -(j + k).
    """
    j = np.arange(1, N + 1)
    freq = -(j[:, None] + j[None, :])
    return np.vectorize(q.coeff, otypes=[complex])(freq)


def kyfan_split_check(
    q_coeffs: Sequence[complex],
    basis_elems: Sequence[PerturbBasisElement],
    N: int,
    h: float,
    rtol: float = 1e-10,
) -> KyFanReport:
    """Split q = q1 + i q2 by real/imaginary coefficient parts and test Ky Fan.

    The lower-bound profile reports, for q1 and q2, the fraction of
    k <= N/4 with s_k above h/2 (constants in the lower bound are unknown, so
    this is emitted rather than asserted).
    """
    if N < 2:
        raise ValueError("family size N must be >= 2")
    c = np.asarray(q_coeffs, dtype=complex)
    if c.size != len(basis_elems):
        raise ValueError(f"{c.size} coefficients for {len(basis_elems)} basis elements")
    q1 = build_q(c.real, basis_elems)
    q2 = build_q(c.imag, basis_elems)
    M1 = bilinear_matrix(q1, N)
    M2 = bilinear_matrix(q2, N)
    s, s1, s2, bad = kyfan_inequality(M1, M2, rtol)
    kq = max(N // 4, 1)
    thr = h / 2
    prof = {
        "k_max": kq,
        "q1_fraction": float(np.mean(s1[:kq] > thr)),
        "q2_fraction": float(np.mean(s2[:kq] > thr)),
        "either_fraction": float(np.mean(np.maximum(s1[:kq], s2[:kq]) > thr)),
    }
    return KyFanReport(N, s, s1, s2, bad, thr, prof)
