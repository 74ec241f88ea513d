"""Viscosity sweep: eigenvalues of P_eps over a decreasing eps schedule, tracked in lambda."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import ExteriorScaling, build_grid, cap_matrix
from .eig import _ray_distance, RAY_TOL, eigenvalues, filter_sector, sqrt_sector
from .errors import ConfigurationError, NumericalError
from .potentials import Potential

log = logging.getLogger(__name__)

TAN_PI8 = math.tan(math.pi / 8)


@dataclass(frozen=True)
class RectangleOmega:
    """Omega = (a_lo, a_hi) + i(-gamma_lo, b_hi)."""

    a_lo: float
    a_hi: float
    gamma_lo: float
    b_hi: float

    def validate(self, gamma: float | None = None, sector: bool = True) -> "RectangleOmega":
        vals = (self.a_lo, self.a_hi, self.gamma_lo, self.b_hi)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError("Omega bounds must be finite")
        if not 0 < self.a_lo < self.a_hi:
            raise ConfigurationError(f"Omega needs 0 < a' < a, got {self.a_lo}, {self.a_hi}")
        if not self.b_hi > -self.gamma_lo:
            raise ConfigurationError("Omega needs b > -gamma'")
        if gamma is not None and not self.gamma_lo < gamma:
            raise ConfigurationError(f"Omega needs gamma' < {gamma} (potential decay rate)")
        if sector and self.gamma_lo / self.a_lo >= TAN_PI8:
            raise ConfigurationError(
                f"Omega leaves the sector arg > -pi/8: gamma'/a' = {self.gamma_lo / self.a_lo:.4f}")
        return self

    def contains(self, lam: complex) -> bool:
        return (self.a_lo < lam.real < self.a_hi) and (-self.gamma_lo < lam.imag < self.b_hi)

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        lo, hi = -self.gamma_lo, self.b_hi
        return (complex(self.a_lo, lo), complex(self.a_hi, lo),
                complex(self.a_hi, hi), complex(self.a_lo, hi))

    @property
    def diameter(self) -> float:
        return math.hypot(self.a_hi - self.a_lo, self.b_hi + self.gamma_lo)

    @classmethod
    def from_dict(cls, d) -> "RectangleOmega":
        try:
            return cls(float(d["a_lo"]), float(d["a_hi"]), float(d["gamma_lo"]), float(d["b_hi"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError("omega needs numeric a_lo, a_hi, gamma_lo, b_hi") from exc

    def to_dict(self) -> dict:
        return {"a_lo": self.a_lo, "a_hi": self.a_hi, "gamma_lo": self.gamma_lo, "b_hi": self.b_hi}


@dataclass
class ResonanceEstimate:
    lam: complex
    multiplicity: int
    method: str
    epsilon: float | None = None
    error_estimate: float = 0.0
    residual: float | None = None


@dataclass
class SweepConfig:
    potential: Potential
    omega: RectangleOmega
    L: float = 16.0
    N: int = 256
    eps_start: float = 1e-1
    eps_ratio: float = 10 ** -0.5
    eps_count: int = 7
    track_radius: float = 0.1
    cauchy_tol: float = 1e-2
    scaling: ExteriorScaling | None = field(default_factory=ExteriorScaling)
    stability_angle: float | None = 0.6
    stability_tol: float = 1e-6
    workers: int = 1

    def validate(self) -> "SweepConfig":
        build_grid(self.L, self.N)
        if not self.eps_start > 0:
            raise ConfigurationError("eps_start must be positive")
        if not 0 < self.eps_ratio < 1:
            raise ConfigurationError("eps_ratio must lie in (0, 1)")
        if int(self.eps_count) != self.eps_count or self.eps_count < 2:
            raise ConfigurationError("eps_count must be an integer >= 2")
        if not self.track_radius > 0:
            raise ConfigurationError("track_radius must be positive")
        if not self.cauchy_tol > 0:
            raise ConfigurationError("cauchy_tol must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        self.omega.validate(gamma=self.potential.envelope_gamma, sector=True)
        return self

    @property
    def schedule(self) -> list[float]:
        # rounded to 15 digits so that e.g. 0.1 * (10^-0.5)^6 prints as 1e-4
        return [float(f"{self.eps_start * self.eps_ratio ** k:.15g}") for k in range(int(self.eps_count))]


@dataclass
class Track:
    track_id: int
    points: list = field(default_factory=list)   # (eps, lambda)


@dataclass
class Orphan:
    epsilon: float
    lam: complex
    kind: str   # "entered" or "left"


@dataclass
class SweepResult:
    schedule: list
    tracks: list
    orphans: list
    spectra: dict            # eps -> sorted lambdas in Omega
    failures: list           # (eps, message)

    @property
    def final_epsilon(self) -> float | None:
        done = [e for e in self.schedule if e in self.spectra]
        return done[-1] if done else None


@dataclass
class Pairing:
    pairs: list              # (i_prev, j_next)
    unmatched_prev: list
    unmatched_next: list


def match_tracks(prev, nxt, radius: float) -> Pairing:
    """Greedy nearest-neighbour matching in increasing distance; only d < radius pairs."""
    if not radius > 0:
        raise ConfigurationError("radius must be positive")
    cand = []
    for i, a in enumerate(prev):
        for j, b in enumerate(nxt):
            d = abs(complex(a) - complex(b))
            if d < radius:
                cand.append((d, i, j))
    cand.sort()
    used_i, used_j, pairs = set(), set(), []
    for d, i, j in cand:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        pairs.append((i, j))
    pairs.sort()
    return Pairing(pairs,
                   [i for i in range(len(prev)) if i not in used_i],
                   [j for j in range(len(nxt)) if j not in used_j])


def _sector_images(z) -> np.ndarray:
    out = [sqrt_sector(complex(v)) for v in z
           if v != 0 and _ray_distance(v) > RAY_TOL * max(1.0, abs(v))]
    return np.array(out, dtype=complex)


def _stable_spectrum(cfg: SweepConfig, grid, eps: float) -> list[complex]:
    A = cap_matrix(grid, cfg.potential, eps, cfg.scaling)
    lams = filter_sector(eigenvalues(A, name=f"P_eps(eps={eps:g})"), cfg.omega)
    if cfg.scaling is None or cfg.stability_angle is None or not lams:
        return lams
    B = cap_matrix(grid, cfg.potential, eps, cfg.scaling.with_angle(cfg.stability_angle))
    other = _sector_images(eigenvalues(B, name=f"P_eps(eps={eps:g}, check)").eigenvalues)
    keep = []
    for lam in lams:
        if other.size and np.min(np.abs(other - lam)) <= cfg.stability_tol * (1 + abs(lam)):
            keep.append(lam)
        else:
            log.info("eps=%g: dropped scaling-dependent eigenvalue %r", eps, lam)
    return keep


def run_sweep(cfg: SweepConfig,
              assemble: Callable[[float], np.ndarray] | None = None) -> SweepResult:
    """Solve over the schedule (optionally in parallel), then track sequentially.

    ``assemble`` replaces the CAP assembly by an arbitrary eps -> matrix map.
    """
    cfg.validate()
    grid = build_grid(cfg.L, cfg.N)
    schedule = cfg.schedule

    def solve(eps):
        try:
            if assemble is not None:
                return filter_sector(eigenvalues(assemble(eps)), cfg.omega), None
            return _stable_spectrum(cfg, grid, eps), None
        except NumericalError as exc:
            return None, str(exc)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(solve, schedule))
    else:
        results = [solve(e) for e in schedule]

    tracks: list[Track] = []
    orphans: list[Orphan] = []
    spectra: dict = {}
    failures: list = []
    active: list[int] = []
    started = False
    for eps, (lams, err) in zip(schedule, results):
        if err is not None:
            log.warning("eps=%g: eigensolver failure: %s", eps, err)
            failures.append((eps, err))
            continue
        spectra[eps] = lams
        prev = [tracks[t].points[-1][1] for t in active]
        pairing = match_tracks(prev, lams, cfg.track_radius)
        nxt_active = []
        for i, j in pairing.pairs:
            tracks[active[i]].points.append((eps, lams[j]))
            nxt_active.append(active[i])
        for i in pairing.unmatched_prev:
            orphans.append(Orphan(eps, prev[i], "left"))
        for j in pairing.unmatched_next:
            tracks.append(Track(len(tracks), [(eps, lams[j])]))
            nxt_active.append(len(tracks) - 1)
            if started:
                orphans.append(Orphan(eps, lams[j], "entered"))
        active = sorted(nxt_active)
        started = True
    return SweepResult(schedule, tracks, orphans, spectra, failures)


def converged_estimates(r: SweepResult, tol: float) -> list[ResonanceEstimate]:
    """Cauchy test on the last step of each track; coincident tracks merge."""
    cands = []
    for tr in r.tracks:
        if len(tr.points) < 2:
            continue
        (_, a), (eps, b) = tr.points[-2], tr.points[-1]
        step = abs(b - a)
        if step < tol:
            cands.append((b, eps, step))
    used = [False] * len(cands)
    out = []
    for i, (lam, eps, step) in enumerate(cands):
        if used[i]:
            continue
        group = [i]
        used[i] = True
        for j in range(i + 1, len(cands)):
            if not used[j] and abs(cands[j][0] - lam) < tol:
                used[j] = True
                group.append(j)
        lam_m = complex(np.mean([cands[k][0] for k in group]))
        out.append(ResonanceEstimate(lam_m, len(group), "CAP", eps,
                                     max(cands[k][2] for k in group)))
    out.sort(key=lambda e: (e.lam.real, e.lam.imag))
    return out
