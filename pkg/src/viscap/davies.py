"""Davies oscillator H_c = -Delta + c x^2: exact spectrum and resolvent norms."""
from __future__ import annotations

import cmath
import math

import numpy as np

from .assembly import Grid1D, davies_matrix
from .eig import smallest_singular_value
from .errors import ConditioningError, DomainError, SingularityError

_ULP = np.finfo(float).eps


def exact_spectrum(c: complex, count: int) -> list[complex]:
    """c^{1/2}(1 + 2k), k < count (principal root; dimension one)."""
    c = complex(c)
    if c == 0 or not (-math.pi < cmath.phase(c) <= 0):
        raise DomainError(f"arg c must lie in (-pi, 0], got c = {c}")
    if count < 1:
        raise DomainError("count must be >= 1")
    r = cmath.sqrt(c)
    return [r * (1 + 2 * k) for k in range(count)]


def _singular_floor(A: np.ndarray) -> float:
    # below this sigma_min is rounding noise: the matrix is singular to working precision
    return 64 * _ULP * np.linalg.norm(A, 2)


def resolvent_norm(eps: float, z: complex, g: Grid1D) -> float:
    """||(H_{-i eps} - z)^{-1}|| = 1 / sigma_min on the grid."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    A = davies_matrix(g, -1j * eps)
    A[np.diag_indices(g.N)] -= complex(z)
    s = smallest_singular_value(A)
    if s <= _singular_floor(A):
        raise SingularityError(f"z = {z} is numerically an eigenvalue of H_(-i eps) (sigma_min = {s:.3e})")
    return 1.0 / s


def weighted_cap_resolvent_norm(eps: float, lam: complex, gamma_w: float, g: Grid1D) -> float:
    """||diag(e^{-gw|x|}) (H_{-i eps} - lambda^2)^{-1} diag(e^{-gw|x|})|| (largest singular value)."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if gamma_w < 0:
        raise DomainError("weight rate must be >= 0")
    lam = complex(lam)
    A = davies_matrix(g, -1j * eps)
    A[np.diag_indices(g.N)] -= lam * lam
    s = smallest_singular_value(A)
    if s <= _singular_floor(A):
        raise ConditioningError(f"inner resolvent singular at lambda = {lam} (sigma_min = {s:.3e})")
    e = np.exp(-gamma_w * np.abs(g.points))
    X = np.linalg.solve(A, np.diag(e).astype(complex))
    return float(np.linalg.norm(e[:, None] * X, 2))
