"""Collocation grid and dense operator assembly for -Delta, H_c and P_eps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .potentials import Potential


@dataclass(frozen=True)
class Grid1D:
    L: float
    N: int

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def points(self) -> np.ndarray:
        return -self.L + np.arange(self.N) * self.h


def build_grid(L: float, N: int) -> Grid1D:
    if isinstance(N, bool) or int(N) != N:
        raise ConfigurationError(f"grid size must be an integer, got {N!r}")
    N = int(N)
    if N < 4 or N % 2:
        raise ConfigurationError(f"grid size must be even and >= 4, got {N}")
    if not (math.isfinite(L) and L > 0):
        raise ConfigurationError(f"half width must be positive, got {L}")
    return Grid1D(float(L), N)


def _wavenumbers(g: Grid1D) -> np.ndarray:
    m = np.fft.fftfreq(g.N, d=1.0 / g.N)
    return np.pi * m / g.L


def _circulant(col: np.ndarray) -> np.ndarray:
    n = col.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


@lru_cache(maxsize=16)
def _laplacian_cached(L: float, N: int) -> np.ndarray:
    k = _wavenumbers(Grid1D(L, N))
    A = _circulant(np.real(np.fft.ifft(k ** 2)))
    A = 0.5 * (A + A.T)
    A.setflags(write=False)
    return A


def laplacian_matrix(g: Grid1D) -> np.ndarray:
    """Periodic Fourier collocation matrix of -d^2/dx^2 (real symmetric)."""
    return _laplacian_cached(g.L, g.N).astype(complex)


def derivative_matrix(g: Grid1D) -> np.ndarray:
    """First derivative by Fourier collocation, Nyquist mode dropped."""
    k = _wavenumbers(g)
    k[g.N // 2] = 0.0
    return _circulant(np.real(np.fft.ifft(1j * k)))


def _ramp(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    m = (s > 0) & (s < 1)
    a = np.exp(-1.0 / s[m])
    b = np.exp(-1.0 / (1.0 - s[m]))
    out[m] = a / (a + b)
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _ramp_integral(s):
    """int_0^s ramp, for s in [0, 1] (Gauss-Legendre, 64 nodes)."""
    s = np.asarray(s, dtype=float)
    u = 0.5 * s[:, None] * (_GL_NODES[None, :] + 1.0)
    return 0.5 * s * (_ramp(u) @ _GL_WEIGHTS)


@dataclass(frozen=True)
class ExteriorScaling:
    """Smooth exterior complex scaling x(t) = t + i S(t).

    S' = tan(angle) * ramp((|t| - start)/width) is exactly zero on
    |t| <= start, so the operator is untouched where the potential may be
    non-analytic. Eigenvalues of P_eps are unchanged by the deformation;
    it only removes the exponential growth of resonant states that makes
    the unscaled problem ill-conditioned for small eps.
    """

    start: float = 3.0
    width: float = 3.0
    angle: float = 0.5

    def __post_init__(self):
        if not (self.start >= 0 and self.width > 0 and 0 < self.angle < math.pi / 4):
            raise ConfigurationError("scaling needs start >= 0, width > 0, 0 < angle < pi/4")

    def with_angle(self, angle: float) -> "ExteriorScaling":
        return ExteriorScaling(self.start, self.width, angle)

    def contour(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return x(t) and x'(t)."""
        t = np.asarray(t, dtype=float)
        tp = math.tan(self.angle)
        r = np.abs(t)
        s = np.clip((r - self.start) / self.width, 0.0, 1.0)
        S = tp * (self.width * _ramp_integral(s) + np.maximum(r - self.start - self.width, 0.0))
        x = t + 1j * np.sign(t) * S
        dx = 1.0 + 1j * tp * _ramp((r - self.start) / self.width)
        return x, dx


def _check_scaling(p: Potential, scaling: ExteriorScaling, g: Grid1D):
    if not p.analytic:
        raise ConfigurationError(f"potential {p.name} has no analytic continuation; cannot scale")
    support = p.params.get("support")
    if support is not None and scaling.start < support:
        raise ConfigurationError("complex scaling must start outside the potential's support")
    if scaling.start + scaling.width >= g.L:
        raise ConfigurationError("scaling ramp does not fit inside the grid")


def cap_matrix(g: Grid1D, p: Potential, eps: float,
               scaling: ExteriorScaling | None = None) -> np.ndarray:
    """Dense P_eps = -Delta - i eps x^2 + V on the grid.

    With ``scaling`` the operator is written along the complex contour
    x(t): -(1/x') d/dt (1/x') d/dt + V(x) - i eps x^2.
    """
    if not (eps >= 0 and math.isfinite(eps)):
        raise ConfigurationError(f"eps must be >= 0, got {eps}")
    t = g.points
    if scaling is None:
        A = laplacian_matrix(g)
        A[np.diag_indices(g.N)] += p(t) - 1j * eps * t ** 2
        return A
    _check_scaling(p, scaling, g)
    x, dx = scaling.contour(t)
    D = derivative_matrix(g)
    inv = 1.0 / dx
    A = -(inv[:, None] * D) @ (inv[:, None] * D)
    A[np.diag_indices(g.N)] += p(x) - 1j * eps * x ** 2
    return A


def davies_matrix(g: Grid1D, c: complex) -> np.ndarray:
    """H_c = -Delta + c x^2, for -pi < arg c <= 0 (c = 0 allowed)."""
    c = complex(c)
    if c != 0:
        a = math.atan2(c.imag, c.real)
        if not (-math.pi < a <= 0):
            raise ConfigurationError(f"arg c must lie in (-pi, 0], got {a}")
    A = laplacian_matrix(g)
    A[np.diag_indices(g.N)] += c * g.points ** 2
    return A
