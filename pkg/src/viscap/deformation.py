"""Fourier-side deformation xi -> phi_theta(xi) at the level of symbols (dimension one).

Conjugating xi^2 + i eps d^2/dxi^2 by u -> J^{1/2} u(phi) gives

    Q = phi^2 - i eps J^{-1/2} D J^{-1} D J^{-1/2},   D = -i d/dxi,

whose left symbol, with h = sqrt(eps) and xi* the dual variable, is

    q = phi^2 - i J^{-2} xi*^2 + h a xi* + h^2 b,
    a = 2 J' / J^3,
    b = i (5/4 J'^2 / J^4 - 1/2 J'' / J^3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cap_sweep import RectangleOmega
from .errors import ConfigurationError, DomainError, PreconditionError

TAN_PI8 = math.tan(math.pi / 8)


@dataclass(frozen=True)
class DeformationSpec:
    """rho_kind 'plateau' (cubic smoothstep on [t0, t0 + w]) or 'scaled_tanh' (s tanh t)."""

    rho_kind: str = "plateau"
    t0: float = 1.0
    w: float = 4.0
    s: float = 0.4
    gamma: float = 1.0

    def __post_init__(self):
        if self.rho_kind not in ("plateau", "scaled_tanh"):
            raise ConfigurationError(f"unknown rho kind {self.rho_kind!r}")
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")
        if self.rho_kind == "plateau" and not (self.t0 > 0 and self.w > 0):
            raise ConfigurationError("plateau needs t0 > 0 and w > 0")
        if self.rho_kind == "scaled_tanh" and not self.s > 0:
            raise ConfigurationError("scaled_tanh needs s > 0")
        if not self.max_slope < TAN_PI8 / self.gamma:
            raise ConfigurationError(
                f"sup rho' = {self.max_slope:.4f} violates rho' < tan(pi/8)/gamma = {TAN_PI8 / self.gamma:.4f}")

    @property
    def max_slope(self) -> float:
        return 1.5 / self.w if self.rho_kind == "plateau" else self.s


def rho_derivatives(spec: DeformationSpec, t):
    """rho and its first three derivatives at t >= 0 (arrays)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("rho is defined for t >= 0")
    if spec.rho_kind == "plateau":
        u = np.clip((t - spec.t0) / spec.w, 0.0, 1.0)
        inside = (t > spec.t0) & (t < spec.t0 + spec.w)
        r0 = u * u * (3 - 2 * u)
        r1 = np.where(inside, 6 * u * (1 - u) / spec.w, 0.0)
        r2 = np.where(inside, (6 - 12 * u) / spec.w ** 2, 0.0)
        r3 = np.where(inside, -12.0 / spec.w ** 3, 0.0)
        return r0, r1, r2, r3
    th = np.tanh(t)
    sech2 = 1.0 - th * th
    s = spec.s
    return s * th, s * sech2, -2 * s * sech2 * th, -2 * s * sech2 * (sech2 - 2 * th * th)


def rho_eval(spec: DeformationSpec, t: float):
    r0, r1, _, _ = rho_derivatives(spec, t)
    return float(r0), float(r1)


def phi_theta(xi, theta: complex, spec: DeformationSpec):
    xi = np.asarray(xi, dtype=float)
    r0 = rho_derivatives(spec, np.abs(xi))[0]
    return xi + theta * np.sign(xi) * r0


def jacobian(xi, theta: complex, spec: DeformationSpec):
    r1 = rho_derivatives(spec, np.abs(np.asarray(xi, dtype=float)))[1]
    return 1.0 + theta * r1


def lower_order(xi, theta: complex, spec: DeformationSpec):
    """Coefficients a(xi), b(xi) of the h and h^2 terms."""
    xi = np.asarray(xi, dtype=float)
    _, r1, r2, r3 = rho_derivatives(spec, np.abs(xi))
    J = 1.0 + theta * r1
    J1 = theta * r2 * np.sign(xi)
    J2 = theta * r3
    a = 2 * J1 / J ** 3
    b = 1j * (1.25 * J1 ** 2 / J ** 4 - 0.5 * J2 / J ** 3)
    return a, b


@dataclass
class SymbolSample:
    xi: float
    xistar: float
    h: float
    value: complex


def symbol_values(xi, xistar, theta: complex, h: float, spec: DeformationSpec):
    """Vectorised q_theta(xi, xi*; h) with broadcasting."""
    if h < 0:
        raise DomainError("h must be >= 0")
    xi = np.asarray(xi, dtype=float)
    xistar = np.asarray(xistar, dtype=float)
    phi = phi_theta(xi, theta, spec)
    J = jacobian(xi, theta, spec)
    q = phi ** 2 - 1j * xistar ** 2 / J ** 2
    if h > 0:
        a, b = lower_order(xi, theta, spec)
        q = q + h * a * xistar + h * h * b
    return q


def symbol(xi: float, xistar: float, theta: complex, h: float, spec: DeformationSpec) -> SymbolSample:
    q = complex(symbol_values(xi, xistar, theta, h, spec))
    return SymbolSample(float(xi), float(xistar), float(h), q)


def in_theta_domain(theta: complex, gamma: float) -> bool:
    theta = complex(theta)
    return abs(theta.real) + abs(theta.imag) < gamma


@dataclass
class AdmissibilityReport:
    passed: bool
    margin: float
    worst_x: float


def check_admissible(omega: RectangleOmega, beta: float, spec: DeformationSpec,
                     n: int = 200) -> AdmissibilityReport:
    """inf of y + beta rho(x) over the lower edge of closure(Omega) (n-point mesh)."""
    if beta < 0 or beta >= spec.gamma:
        raise PreconditionError(f"beta must lie in [0, gamma), got {beta}")
    x = np.linspace(omega.a_lo, omega.a_hi, n)
    vals = -omega.gamma_lo + beta * rho_derivatives(spec, np.maximum(x, 0.0))[0]
    j = int(np.argmin(vals))
    margin = float(vals[j])
    return AdmissibilityReport(margin > 0 and omega.a_lo > 0, margin, float(x[j]))


# --- regions in the z = lambda^2 plane ---------------------------------------

class BadSector:
    """{|z| > 1, pi/2 < arg z < pi}."""

    def mesh(self, Xi: float) -> np.ndarray:
        r = np.geomspace(1.0, 2 * Xi * Xi, 10)
        a = np.linspace(math.pi / 2, math.pi, 10)
        return (r[:, None] * np.exp(1j * a[None, :])).ravel()

    def contains(self, z: np.ndarray) -> np.ndarray:
        ang = np.angle(z)
        return (np.abs(z) > 1) & (ang > math.pi / 2) & (ang < math.pi)


class OmegaSquared:
    """{lambda^2 : lambda in Omega}, Omega in the right half-plane."""

    def __init__(self, omega: RectangleOmega):
        self.omega = omega

    def mesh(self, Xi: float = 0.0) -> np.ndarray:
        o = self.omega
        x = np.linspace(o.a_lo, o.a_hi, 10)
        y = np.linspace(-o.gamma_lo, o.b_hi, 10)
        return ((x[None, :] + 1j * y[:, None]) ** 2).ravel()

    def boundary(self, n: int = 400) -> np.ndarray:
        c = self.omega.corners
        t = np.linspace(0, 1, n, endpoint=False)
        edge = [a + (b - a) * t for a, b in zip(c, c[1:] + c[:1])]
        return np.concatenate(edge) ** 2

    def contains(self, z: np.ndarray) -> np.ndarray:
        lam = np.sqrt(np.asarray(z, dtype=complex))   # principal root: Re >= 0
        o = self.omega
        return ((lam.real > o.a_lo) & (lam.real < o.a_hi)
                & (lam.imag > -o.gamma_lo) & (lam.imag < o.b_hi))


def _scan_axes(Xi: float, n: int):
    ax = np.linspace(-Xi, Xi, n)
    return ax, ax


def symbol_region_margin(theta: complex, region, h: float, spec: DeformationSpec,
                         Xi: float = 20.0, n: int = 400) -> float:
    """min over the (xi, xi*) scan and the region mesh of |q - z| / (1 + xi^2 + xi*^2).

    ``region`` is "sector" (the bad sector |z| > 1, pi/2 < arg z < pi) or a
    RectangleOmega (the set of lambda^2, needing theta = -i beta with
    (Omega, beta) admissible). Scan points whose symbol lands inside the
    region give margin 0.
    """
    theta = complex(theta)
    if not in_theta_domain(theta, spec.gamma):
        raise PreconditionError(f"theta = {theta} outside D_gamma")
    if isinstance(region, str):
        if region != "sector":
            raise ConfigurationError(f"unknown region {region!r}")
        reg = BadSector()
    else:
        if theta.real != 0 or theta.imag > 0:
            raise PreconditionError("Omega variant needs theta = -i beta with beta >= 0")
        rep = check_admissible(region, -theta.imag, spec)
        if not rep.passed:
            raise PreconditionError(f"(Omega, beta) not admissible: margin {rep.margin:.4g}")
        reg = OmegaSquared(region)
    xi, xs = _scan_axes(Xi, n)
    q = symbol_values(xi[:, None], xs[None, :], theta, h, spec)
    m = 1.0 + xi[:, None] ** 2 + xs[None, :] ** 2
    if np.any(reg.contains(q)):
        return 0.0
    best = math.inf
    for z in reg.mesh(Xi):
        best = min(best, float(np.min(np.abs(q - z) / m)))
    return best


@dataclass
class ScanResult:
    theta: complex
    xi: np.ndarray          # flattened scan coordinates
    xistar: np.ndarray
    q: np.ndarray           # principal symbol values (h = 0)
    phi_sq_arg_ok: bool     # -pi/4 < arg phi^2 < pi/4 wherever phi != 0

    def samples(self):
        for a, b, v in zip(self.xi, self.xistar, self.q):
            yield SymbolSample(float(a), float(b), 0.0, complex(v))

    def min_distance(self, omega: RectangleOmega) -> float:
        reg = OmegaSquared(omega)
        if np.any(reg.contains(self.q)):
            return 0.0
        bd = reg.boundary()
        best = math.inf
        for chunk in np.array_split(self.q, max(1, self.q.size // 20000)):
            best = min(best, float(np.min(np.abs(chunk[:, None] - bd[None, :]))))
        return best


def numerical_range_scan(theta: complex, spec: DeformationSpec, Xi: float = 20.0,
                         n: int = 400) -> ScanResult:
    theta = complex(theta)
    if not in_theta_domain(theta, spec.gamma):
        raise PreconditionError(f"theta = {theta} outside D_gamma")
    xi, xs = _scan_axes(Xi, n)
    X, S = np.meshgrid(xi, xs, indexing="ij")
    q = symbol_values(X, S, theta, 0.0, spec)
    phi2 = phi_theta(xi, theta, spec) ** 2
    nz = np.abs(phi2) > 0
    ok = bool(np.all(np.abs(np.angle(phi2[nz])) < math.pi / 4))
    return ScanResult(theta, X.ravel(), S.ravel(), q.ravel(), ok)
