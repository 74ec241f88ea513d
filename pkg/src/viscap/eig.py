"""Dense eigenvalues, smallest singular value and the sector square root."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _qr
from .errors import BranchCutError, ConvergenceError, DomainError, NumericalError

log = logging.getLogger(__name__)

_ULP = np.finfo(float).eps
RAY_TOL = 1e-9


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    residual_bound: float
    vectors: np.ndarray | None = None
    sweeps: int = 0


def eigenvalues(A, vectors: bool = False, name: str = "matrix") -> SpectrumResult:
    """All eigenvalues of a dense complex matrix (unordered).

    ``vectors=True`` adds eigenvectors by inverse iteration and reports
    max ||Av - zv||/||v||; otherwise the residual bound is the QR backward
    error estimate n * ulp * ||A||_F.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"{name}: eigenvalues need a square matrix")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name}: matrix has non-finite entries")
    n = A.shape[0]
    if n == 0:
        return SpectrumResult(np.zeros(0, complex), 0.0)
    H = np.array(A, order="C", copy=True)
    _qr.balance(H)
    _qr.hessenberg(H)
    w, status, sweeps = _qr.hqr(H, 30 * max(10, n))
    if status != 0:
        raise ConvergenceError(f"{name}: QR iteration did not converge within {30 * max(10, n)} sweeps")
    tr = np.trace(A)
    if abs(w.sum() - tr) > 1e-8 * (1.0 + abs(tr)):
        raise NumericalError(f"{name}: eigenvalue sum misses the trace by {abs(w.sum() - tr):.3e}")
    normA = np.linalg.norm(A)
    if not vectors:
        return SpectrumResult(w, n * _ULP * normA, None, sweeps)
    V, res = _inverse_iteration(A, w, normA)
    return SpectrumResult(w, res, V, sweeps)


def _inverse_iteration(A, w, normA):
    n = A.shape[0]
    rng = np.random.default_rng(12345)
    V = np.empty((n, n), complex)
    worst = 0.0
    I = np.eye(n)
    for j, z in enumerate(w):
        shift = z + 8 * _ULP * max(normA, 1.0)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for _ in range(3):
            try:
                x = np.linalg.solve(A - shift * I, x)
            except np.linalg.LinAlgError:
                shift += 64 * _ULP * max(normA, 1.0)
                continue
            x /= np.linalg.norm(x)
        V[:, j] = x
        worst = max(worst, np.linalg.norm(A @ x - z * x) / np.linalg.norm(x))
    return V, worst


def smallest_singular_value(A) -> float:
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(A, check_finite=True)[-1])


_PI8 = math.pi / 8


def sqrt_sector(z: complex) -> complex:
    """Square root with arg z in (-pi/4, 7pi/4) mapped to arg/2 in (-pi/8, 7pi/8)."""
    z = complex(z)
    if z == 0:
        raise DomainError("sqrt_sector undefined at 0")
    r = np.sqrt(z)
    a = math.atan2(r.imag, r.real)
    if abs(a + _PI8) <= 4 * _ULP:
        raise BranchCutError(f"{z} lies on the Davies ray arg z = -pi/4")
    if a < -_PI8:
        r = -r
    return complex(r)


def _ray_distance(z: complex) -> float:
    d = complex(z) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    # rotate the ray onto the positive real axis
    if d.real >= 0:
        return abs(d.imag)
    return abs(d)


def filter_sector(spec, omega) -> list[complex]:
    """sqrt_sector images of the eigenvalues that fall inside omega, sorted by real part."""
    zs = spec.eigenvalues if isinstance(spec, SpectrumResult) else np.asarray(spec)
    out = []
    for z in zs:
        z = complex(z)
        if z == 0 or _ray_distance(z) <= RAY_TOL * max(1.0, abs(z)):
            log.info("discarded eigenvalue %r on the Davies ray", z)
            continue
        lam = sqrt_sector(z)
        if omega.contains(lam):
            out.append(lam)
    out.sort(key=lambda c: (c.real, c.imag))
    return out
