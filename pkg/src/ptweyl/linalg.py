"""Dense non-Hermitian eigenvalues and singular values with computed residuals.

LAPACK (via scipy) does the factorizations: Hessenberg reduction plus shifted
QR for eigenvalues, bidiagonalisation for singular values.  What this module
adds is the contract: every eigenvalue set ships with a measured backward
error, and failures are raised rather than returning partial data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class ConvergenceError(RuntimeError):
    """The eigen/singular value iteration failed to converge."""


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    residual_bound: float

    def __len__(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class SingularSpectrum:
    values: np.ndarray


def _check(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def eigenvalues(A) -> SpectralResult:
    """All eigenvalues (with multiplicity), sorted by (Re, Im).

    ``residual_bound`` is max_i ||A v_i - l_i v_i|| / ||A||_F over the unit
    eigenvectors returned by LAPACK.  A complex-typed matrix with zero imaginary
    part goes through the real solver, whose eigenvalues come in exact
    conjugate pairs (the complex solver only pairs them up to rounding, which
    for strongly non-normal matrices is far from the pairs).
    """
    A = _check(A)
    if np.iscomplexobj(A) and not np.any(A.imag):
        A = A.real
    if A.shape[0] != A.shape[1]:
        raise ValueError("eigenvalues need a square matrix")
    if A.shape[0] == 0:
        return SpectralResult(np.zeros(0, dtype=complex), 0.0)
    try:
        w, V = sla.eig(A, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from None
    if not np.all(np.isfinite(w)):
        raise ConvergenceError("eigenvalue iteration produced non-finite values")
    scale = np.linalg.norm(A)
    if scale == 0:
        res = 0.0
    else:
        V = V / np.linalg.norm(V, axis=0)
        res = float(np.max(np.linalg.norm(A @ V - V * w, axis=0)) / scale)
    w = w.astype(complex)
    order = np.lexsort((w.imag, w.real))
    return SpectralResult(w[order], res)


def singular_values(A) -> SingularSpectrum:
    A = _check(A)
    if A.size == 0:
        return SingularSpectrum(np.zeros(0))
    try:
        s = sla.svdvals(A, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceError(f"SVD failed: {exc}") from None
    return SingularSpectrum(np.asarray(s, dtype=float))


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point sets in the complex plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float("inf")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
