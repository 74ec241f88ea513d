"""Birman-Schwinger determinant D(lambda) = det(I + v R0(lambda) w) and its zeros.

The Nystrom matrix uses uniform weights plus an Euler-Maclaurin correction
on the diagonal for the kink of e^{i lambda |x-y|} at x = y. Without it
the trapezoid rule is only second order. The correction adds the constant
factor prod(1 + c_i) to det(I + K), which is divided out so that D -> 1
as Im lambda -> infinity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .assembly import ExteriorScaling, Grid1D, cap_matrix
from .cap_sweep import RectangleOmega, ResonanceEstimate
from .eig import eigenvalues, smallest_singular_value, sqrt_sector, _ray_distance, RAY_TOL
from .errors import (ConditioningError, ContourError, DomainError, IdentityViolation,
                     PreconditionError, SingularityError, UnresolvedRegionError)
from .potentials import Factorization, Potential, split_values, zero_potential

log = logging.getLogger(__name__)

NEWTON_STEP = 1e-6
MIN_DIAMETER = 1e-2


def free_kernel(lam: complex, x, y):
    """k0(lambda; x, y) = (i / 2 lambda) exp(i lambda |x - y|)."""
    lam = complex(lam)
    if lam == 0:
        raise SingularityError("free kernel is singular at lambda = 0")
    return 1j / (2 * lam) * np.exp(1j * lam * np.abs(np.asarray(x) - np.asarray(y)))


@lru_cache(maxsize=8)
def _toeplitz_index(n: int) -> np.ndarray:
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    idx.setflags(write=False)
    return idx


@dataclass
class BSMatrix:
    lam: complex
    matrix: np.ndarray
    diag_correction: np.ndarray   # c_i, zero when uncorrected


@dataclass
class DeterminantTrace:
    lam: complex
    det_value: complex
    log_abs: float
    phase: complex


def bs_matrix(lam: complex, g: Grid1D, f: Factorization,
              kink_correction: bool = True) -> BSMatrix:
    lam = complex(lam)
    if lam == 0:
        raise SingularityError("BS matrix undefined at lambda = 0")
    h = g.h
    # uniform grid: the kernel depends on |i - j| only
    row = free_kernel(lam, 0.0, h * np.arange(g.N))
    # v_i w_j first, so that K is exactly symmetric when v = w
    K = ((f.v[:, None] * f.w[None, :]) * h) * row[_toeplitz_index(g.N)]
    c = np.zeros(g.N, dtype=K.dtype)
    if kink_correction:
        c = -(f.v * f.w) * h * h / 12.0
        K[np.diag_indices(g.N)] += c
    return BSMatrix(lam, K, c)


def _slogdet_plus_identity(K: np.ndarray, c: np.ndarray) -> tuple[complex, float]:
    sign, logabs = np.linalg.slogdet(np.eye(K.shape[0]) + K)
    if np.any(c != 0):
        one_c = 1.0 + c
        logabs -= float(np.sum(np.log(np.abs(one_c))))
        sign = sign / np.prod(one_c / np.abs(one_c))
    return complex(sign), float(logabs)


def bs_determinant(lam: complex, g: Grid1D, f: Factorization,
                   kink_correction: bool = True) -> DeterminantTrace:
    """D(lambda) by pivoted LU in log form (no overflow in the intermediate product)."""
    B = bs_matrix(lam, g, f, kink_correction)
    phase, logabs = _slogdet_plus_identity(B.matrix, B.diag_correction)
    if logabs > 700:
        value = complex(math.inf, 0.0)
        log.warning("|D(%r)| overflows; use log_abs", lam)
    elif phase == 0:
        value = 0j
    else:
        value = phase * math.exp(logabs)
    return DeterminantTrace(complex(lam), value, logabs, phase)


class _DetCache:
    """Memoised D on a fixed grid; keys are exact lambda values."""

    def __init__(self, g, f, kink_correction=True):
        self.g, self.f, self.kc = g, f, kink_correction
        self.store = {}

    def __call__(self, lam: complex) -> DeterminantTrace:
        lam = complex(lam)
        hit = self.store.get(lam)
        if hit is None:
            hit = bs_determinant(lam, self.g, self.f, self.kc)
            self.store[lam] = hit
        return hit


# --- winding numbers on rectangles -------------------------------------------

def _edge_phase(D, a: complex, b: complex, n0: int = 16, max_depth: int = 24) -> tuple[float, float]:
    """Total arg change of D along [a, b] and min |D| seen (adaptive bisection)."""
    total = 0.0
    dmin = math.inf
    ts = np.linspace(0.0, 1.0, n0 + 1)
    pts = [a + (b - a) * t for t in ts]
    for p, q in zip(pts[:-1], pts[1:]):
        stack = [(p, q, 0)]
        while stack:
            u, v, depth = stack.pop()
            Du, Dv = D(u), D(v)
            dmin = min(dmin, abs(Du.det_value), abs(Dv.det_value))
            step = np.angle(Dv.phase / Du.phase)
            if abs(step) > math.pi / 4 and depth < max_depth:
                m = 0.5 * (u + v)
                stack.append((m, v, depth + 1))
                stack.append((u, m, depth + 1))
                continue
            if abs(step) > math.pi / 2:
                raise ContourError(f"phase jump {step:.3f} on [{u}, {v}]: zero on or near the contour")
            total += step
    return total, dmin


def winding_rectangle(D, omega: RectangleOmega, n0: int = 16) -> int:
    c = omega.corners
    total = 0.0
    for a, b in zip(c, c[1:] + c[:1]):
        s, _ = _edge_phase(D, a, b, n0)
        total += s
    w = total / (2 * math.pi)
    k = round(w)
    if abs(w - k) > 0.05:
        raise ContourError(f"non-integral winding {w:.4f} on {omega}")
    return int(k)


def _split(R: RectangleOmega, shift: float = 0.0):
    xm = R.a_lo + (0.5 + shift) * (R.a_hi - R.a_lo)
    ym = -R.gamma_lo + (0.5 + shift) * (R.b_hi + R.gamma_lo)
    lo, hi = -R.gamma_lo, R.b_hi
    return [RectangleOmega(R.a_lo, xm, -lo, ym), RectangleOmega(xm, R.a_hi, -lo, ym),
            RectangleOmega(R.a_lo, xm, -ym, hi), RectangleOmega(xm, R.a_hi, -ym, hi)]


def newton(D, lam0: complex, tol_abs: float, max_iter: int = 50) -> tuple[complex, float, bool]:
    """Newton on D with a central-difference derivative (step 1e-6)."""
    lam = complex(lam0)
    val = D(lam).det_value
    for _ in range(max_iter):
        dD = (D(lam + NEWTON_STEP).det_value - D(lam - NEWTON_STEP).det_value) / (2 * NEWTON_STEP)
        if dD == 0 or not np.isfinite(dD):
            return lam, abs(val), False
        step = val / dD
        lam = lam - step
        val = D(lam).det_value
        if abs(val) < tol_abs and abs(step) < 1e-10 * max(1.0, abs(lam)):
            return lam, abs(val), True
        if abs(step) < 1e-14 * max(1.0, abs(lam)):
            return lam, abs(val), abs(val) < tol_abs
    return lam, abs(val), abs(val) < tol_abs


def find_resonances(omega: RectangleOmega, g: Grid1D, f: Factorization, tol: float = 1e-8,
                    kink_correction: bool = True, max_depth: int = 12) -> list[ResonanceEstimate]:
    """All zeros of D in omega: winding-number subdivision, then Newton polish.

    Rectangles holding one zero go straight to Newton; clusters are split
    down to diameter 1e-2 and polished from the centre, multiplicity by
    the contour formula.
    """
    omega.validate(sector=False)
    D = _DetCache(g, f, kink_correction)
    total = winding_rectangle(D, omega)
    if total < 0:
        raise ContourError(f"negative winding {total}: D has poles in {omega}?")
    bscale = max(1.0, float(np.median([abs(D(z).det_value) for z in omega.corners])))
    tol_abs = tol * bscale
    roots: list[tuple[complex, float, int]] = []
    stack = [(omega, total, 0)]
    while stack:
        R, n, depth = stack.pop()
        if n == 0:
            continue
        centre = complex(0.5 * (R.a_lo + R.a_hi), 0.5 * (R.b_hi - R.gamma_lo))
        if n == 1 or R.diameter <= MIN_DIAMETER:
            lam, res, ok = newton(D, centre, tol_abs)
            if ok and R.contains(lam):
                roots.append((lam, res, n))
                continue
            if R.diameter <= MIN_DIAMETER:
                raise UnresolvedRegionError(
                    f"Newton failed in {R} (|D|={res:.3e})", rectangle=R)
        if depth >= max_depth:
            raise UnresolvedRegionError(f"subdivision limit reached in {R}", rectangle=R)
        for shift in (0.0, 0.0713, -0.1291):
            kids = _split(R, shift)
            try:
                counts = [winding_rectangle(D, k) for k in kids]
            except ContourError:
                continue
            if sum(counts) == n:
                break
        else:
            raise UnresolvedRegionError(f"winding mismatch after subdivision of {R}", rectangle=R)
        for k, cnt in zip(kids, counts):
            stack.append((k, cnt, depth + 1))
    out = []
    for lam, res, n in sorted(roots, key=lambda r: (r[0].real, r[0].imag)):
        m = _root_multiplicity(lam, n, omega, g, f, kink_correction, [r[0] for r in roots])
        out.append(ResonanceEstimate(lam, m, "BS", None, 0.0, residual=res))
    return out


def _root_multiplicity(lam, n, omega, g, f, kc, all_roots):
    others = [abs(lam - z) for z in all_roots if z != lam]
    r = min([0.05] + [0.4 * d for d in others])
    m = multiplicity(lam, r, g, f, kink_correction=kc)
    if m != n:
        log.warning("multiplicity %d at %r differs from rectangle count %d", m, lam, n)
    return m


# --- contour multiplicities ---------------------------------------------------

@dataclass
class ContourRoutes:
    """Both multiplicity routes on one circle."""

    value: int          # agreed integer
    trace: complex      # route (a): (1/2 pi i) tr oint (I+K)^{-1} K'
    winding: float      # route (b): winding number of det(I+K)
    nodes: int


def _trace_contour(Kfun, detfun, lam0: complex, r: float, nodes: int, max_nodes: int,
                   contour_tol: float) -> ContourRoutes:
    """Route (a) trace formula and route (b) winding of det on |z - lam0| = r."""
    while True:
        th = 2 * math.pi * np.arange(nodes) / nodes
        zs = lam0 + r * np.exp(1j * th)
        acc = 0j
        phases = []
        mags = []
        for z in zs:
            K = Kfun(z)
            dK = (Kfun(z + NEWTON_STEP) - Kfun(z - NEWTON_STEP)) / (2 * NEWTON_STEP)
            I_K = np.eye(K.shape[0]) + K
            try:
                X = np.linalg.solve(I_K, dK)
            except np.linalg.LinAlgError as exc:
                raise ContourError(f"I + K singular on the contour at {z}") from exc
            acc += np.trace(X) * (z - lam0)
            ph, la = detfun(z)
            phases.append(ph)
            mags.append(la)
        mags = np.array(mags)
        if np.min(mags) < math.log(contour_tol) + np.max(mags):
            raise ContourError(f"determinant nearly vanishes on the circle |z - {lam0}| = {r}")
        m_trace = acc / nodes
        steps = np.angle(np.array(phases[1:] + phases[:1]) / np.array(phases))
        smooth = np.max(np.abs(steps)) <= math.pi / 2
        m_wind = float(np.sum(steps) / (2 * math.pi))
        k = round(m_trace.real)
        if abs(m_trace - k) <= 0.1 and smooth:
            wk = round(m_wind)
            if wk != k or abs(m_wind - wk) > 1e-6:
                raise ContourError(f"trace route {m_trace:.6f} and winding route {m_wind:.6f} disagree")
            return ContourRoutes(int(k), complex(m_trace), m_wind, nodes)
        if nodes * 2 > max_nodes:
            raise ContourError(f"non-integral contour integral {m_trace:.4f} with {nodes} nodes")
        nodes *= 2


def multiplicity(lam0: complex, r: float, g: Grid1D, f: Factorization, nodes: int = 64,
                 max_nodes: int = 1024, kink_correction: bool = True,
                 contour_tol: float = 1e-10) -> int:
    """m(lambda0) = (1/2 pi i) tr oint (I + K)^{-1} dK/dzeta, checked against the winding of D."""
    return multiplicity_routes(lam0, r, g, f, nodes, max_nodes, kink_correction, contour_tol).value


def multiplicity_routes(lam0: complex, r: float, g: Grid1D, f: Factorization, nodes: int = 64,
                        max_nodes: int = 1024, kink_correction: bool = True,
                        contour_tol: float = 1e-10) -> ContourRoutes:
    if not r > 0:
        raise DomainError("radius must be positive")
    if abs(lam0) <= r:
        raise PreconditionError("circle encloses lambda = 0")

    def Kfun(z):
        return bs_matrix(z, g, f, kink_correction).matrix

    def detfun(z):
        d = bs_determinant(z, g, f, kink_correction)
        return d.phase, d.log_abs

    return _trace_contour(Kfun, detfun, complex(lam0), r, nodes, max_nodes, contour_tol)


# --- eps-regularised variant --------------------------------------------------

@lru_cache(maxsize=8)
def _free_cap(g: Grid1D, eps: float, scaling: ExteriorScaling | None) -> np.ndarray:
    H = cap_matrix(g, zero_potential(), eps, scaling)
    H.setflags(write=False)
    return H


def contour_factorization(p: Potential, g: Grid1D, scaling: ExteriorScaling | None) -> Factorization:
    """Factorization of V sampled where the (possibly scaled) operator lives."""
    if scaling is None:
        x = g.points
    else:
        x, _ = scaling.contour(g.points)
    v, w = split_values(p(x))
    return Factorization(v, w, p.name)


def _regularized(lam, eps, g, f, scaling, check=True):
    H = _free_cap(g, float(eps), scaling)
    M = H - complex(lam) ** 2 * np.eye(g.N)
    if check:
        smin = smallest_singular_value(M)
        thresh = 1e-10 * max(1.0, np.linalg.norm(H, 1))
        if smin <= thresh:
            raise ConditioningError(f"lambda^2 = {complex(lam) ** 2} is numerically in the spectrum of "
                                    f"-Delta - i eps x^2 (sigma_min = {smin:.3e})")
    R = np.linalg.solve(M, np.diag(f.w).astype(complex))
    return f.v[:, None] * R


def regularized_bs_matrix(lam: complex, eps: float, g: Grid1D, f: Factorization,
                          scaling: ExteriorScaling | None = None) -> BSMatrix:
    """K_eps(lambda) = diag(v) (H_eps - lambda^2)^{-1} diag(w), H_eps the V = 0 CAP matrix."""
    if not eps >= 0:
        raise DomainError("eps must be >= 0")
    K = _regularized(lam, eps, g, f, scaling, check=True)
    return BSMatrix(complex(lam), K, np.zeros(g.N))


def _disc_count(z, lam0, r) -> int:
    n = 0
    for v in z:
        if v == 0 or _ray_distance(v) <= RAY_TOL * max(1.0, abs(v)):
            continue
        if abs(sqrt_sector(v) - lam0) < r:
            n += 1
    return n


@dataclass
class EpsMultiplicity:
    m_eps: int
    eigen_count: int
    routes: ContourRoutes


def multiplicity_eps(lam0: complex, r: float, eps: float, g: Grid1D, f: Factorization,
                     scaling: ExteriorScaling | None = None, nodes: int = 64,
                     max_nodes: int = 1024, contour_tol: float = 1e-10) -> EpsMultiplicity:
    """m_eps by the regularised contour, checked against the eigenvalue count of P_eps.

    P_eps is rebuilt as H_eps + diag(v w), so f must be sampled where H_eps
    lives (see ``contour_factorization`` when a scaling is used).
    """
    lam0 = complex(lam0)
    if not r > 0:
        raise DomainError("radius must be positive")
    H = _free_cap(g, float(eps), scaling)
    poles = _disc_count(eigenvalues(H, name="H_eps").eigenvalues, lam0, r)
    if poles:
        raise PreconditionError(f"{poles} eigenvalue(s) of the free CAP operator inside the disc")
    for th in np.linspace(0, 2 * math.pi, 16, endpoint=False):
        _regularized(lam0 + r * np.exp(1j * th), eps, g, f, scaling, check=True)

    def Kfun(z):
        return _regularized(z, eps, g, f, scaling, check=False)

    def detfun(z):
        sign, logabs = np.linalg.slogdet(np.eye(g.N) + Kfun(z))
        return complex(sign), float(logabs)

    routes = _trace_contour(Kfun, detfun, lam0, r, nodes, max_nodes, contour_tol)
    m = routes.value
    P = H + np.diag(f.v * f.w)
    count = _disc_count(eigenvalues(P, name="P_eps").eigenvalues, lam0, r)
    if count != m:
        raise IdentityViolation(f"m_eps = {m} but P_eps has {count} eigenvalue(s) in the disc")
    return EpsMultiplicity(m, count, routes)


def weighted_free_resolvent_norm(lam: complex, c: float, g: Grid1D, margin: float = 0.0) -> float:
    """||e^{-c|x|} R0(lambda) e^{-c|x|}|| on the grid (largest singular value)."""
    lam = complex(lam)
    # the imaginary axis is allowed on the physical sheet (Im > 0)
    if lam == 0 or lam.real < 0 or (lam.real == 0 and lam.imag <= 0) or lam.imag <= -c + margin:
        raise DomainError(f"lambda = {lam} outside Re > 0, Im > -c + margin")
    x = g.points
    e = np.exp(-c * np.abs(x))
    M = (e[:, None] * free_kernel(lam, x[:, None], x[None, :])) * (e[None, :] * g.h)
    return float(np.linalg.norm(M, 2))


def determinant_scan(omega: RectangleOmega, g: Grid1D, f: Factorization, n: int = 21,
                     kink_correction: bool = True):
    """D on an n x n mesh of the closed rectangle: rows (lambda, D)."""
    rows = []
    for y in np.linspace(-omega.gamma_lo, omega.b_hi, n):
        for x in np.linspace(omega.a_lo, omega.a_hi, n):
            lam = complex(x, y)
            rows.append((lam, bs_determinant(lam, g, f, kink_correction).det_value))
    return rows
