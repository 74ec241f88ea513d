"""Exponentially decaying potentials, envelope checks and the signed square-root split."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class Potential:
    """V(x) with a decay envelope |V(x)| <= C exp(-2 gamma |x|).

    ``analytic`` marks evaluators that accept complex x and return the
    analytic continuation of V; complex-scaled assembly requires it.
    """

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    envelope_C: float
    envelope_gamma: float
    analytic: bool = False
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.envelope_C > 0 and self.envelope_gamma > 0):
            raise ConfigurationError("envelope C and gamma must be positive")

    def __call__(self, x):
        return self.evaluator(x)


def eval_potential(p: Potential, x: float) -> float:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"potential evaluated at non-finite x={x!r}")
    return p.evaluator(x)


# catalog

def sech2(V0: float, envelope: tuple[float, float] | None = None) -> Potential:
    """V0 sech^2 x. Since sech x <= 2 e^{-|x|} the default envelope is (4|V0|, 1)."""
    def f(x):
        return V0 / np.cosh(x) ** 2
    C, gam = envelope or (4.0 * max(abs(V0), 1e-300), 1.0)
    return Potential("sech2", f, C, gam, analytic=True, params={"V0": V0})


def _abs_analytic(x):
    # |x| continued off the real axis from each half-line separately
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.where(x.real >= 0, x, -x)
    return np.abs(x)


def expwell(V0: float, gamma: float = 1.0,
            envelope: tuple[float, float] | None = None) -> Potential:
    """-V0 exp(-2 gamma |x|)."""
    def f(x):
        return -V0 * np.exp(-2.0 * gamma * _abs_analytic(x))
    C, gam = envelope or (max(abs(V0), 1e-300), gamma)
    return Potential("expwell", f, C, gam, analytic=True,
                     params={"V0": V0, "gamma": gamma})


def square_well(V0: float, a: float,
                envelope: tuple[float, float] | None = None) -> Potential:
    """-V0 on |x| <= a, zero outside.

    At the jump the midpoint value -V0/2 is used, which keeps the trapezoid
    rule second order when a grid point sits on the edge. The continuation
    to complex x only depends on Re x, so complex scaling must start
    outside the well.
    """
    def f(x):
        x = np.asarray(x)
        r = np.abs(x.real)
        out = np.where(r < a, -V0, 0.0)
        out = np.where(np.abs(r - a) <= 1e-12 * max(1.0, a), -0.5 * V0, out)
        return out.astype(complex) if np.iscomplexobj(x) else out
    # compact support: any decay rate works; 2 leaves room for Omega with gamma' >= 1
    C, gam = envelope or (max(abs(V0), 1e-300) * math.exp(4.0 * a), 2.0)
    return Potential("square", f, C, gam, analytic=True,
                     params={"V0": V0, "a": a, "support": a})


def gaussian(V0: float, sigma: float = 1.0,
             envelope: tuple[float, float] | None = None) -> Potential:
    """V0 exp(-(x/sigma)^2). Default envelope (|V0| e^{sigma^2}, 1): max of V e^{2|x|}."""
    def f(x):
        return V0 * np.exp(-(np.asarray(x) / sigma) ** 2)
    C, gam = envelope or (max(abs(V0), 1e-300) * math.exp(sigma ** 2), 1.0)
    return Potential("gaussian", f, C, gam, analytic=True,
                     params={"V0": V0, "sigma": sigma})


def zero_potential() -> Potential:
    def f(x):
        x = np.asarray(x)
        return np.zeros(x.shape, dtype=complex if np.iscomplexobj(x) else float)
    return Potential("zero", f, 1.0, 1.0, analytic=True, params={})


def custom(name: str, evaluator, C: float, gamma: float) -> Potential:
    """Wrap an opaque real evaluator (no complex continuation)."""
    return Potential(name, evaluator, C, gamma, analytic=False)


_CATALOG = {
    "sech2": (sech2, {"V0"}),
    "expwell": (expwell, {"V0", "gamma"}),
    "square": (square_well, {"V0", "a"}),
    "gaussian": (gaussian, {"V0", "sigma"}),
    "zero": (None, set()),
}


def potential_from_dict(d: dict) -> Potential:
    """Build a catalog potential from ``{"kind", "params", "envelope"}``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigurationError("potential needs a 'kind'")
    kind = d["kind"]
    if kind not in _CATALOG:
        raise ConfigurationError(f"unknown potential kind {kind!r}")
    ctor, allowed = _CATALOG[kind]
    if kind == "zero":
        return zero_potential()
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigurationError("potential params must be an object")
    extra = set(params) - allowed
    if extra:
        raise ConfigurationError(f"unknown parameters for {kind}: {sorted(extra)}")
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigurationError(f"parameter {k} must be a finite number")
    envelope = None
    if d.get("envelope") is not None:
        env = d["envelope"]
        try:
            envelope = (float(env["C"]), float(env["gamma"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError("envelope needs numeric C and gamma") from exc
    try:
        return ctor(**params, envelope=envelope)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from exc


def load_potential(path: str) -> Potential:
    with open(path) as fh:
        return potential_from_dict(json.load(fh))


@dataclass
class EnvelopeReport:
    margin: float
    worst_x: float
    passed: bool


def verify_envelope(p: Potential, g) -> EnvelopeReport:
    """Minimum over grid points of C e^{-2 gamma |x|} - |V(x)|."""
    x = np.asarray(g.points, dtype=float)
    if x.size == 0:
        raise ConfigurationError("empty grid")
    slack = p.envelope_C * np.exp(-2.0 * p.envelope_gamma * np.abs(x)) - np.abs(p(x))
    j = int(np.argmin(slack))
    return EnvelopeReport(float(slack[j]), float(x[j]), bool(slack[j] >= 0))


@dataclass(frozen=True)
class Factorization:
    v: np.ndarray
    w: np.ndarray
    source: str


def split_values(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """v = sign(V)|V|^{1/2}, w = |V|^{1/2}; for complex V, v = V/|V|^{1/2}."""
    V = np.asarray(V)
    w = np.sqrt(np.abs(V))
    if not np.iscomplexobj(V):
        return np.sign(V) * w, w
    safe = np.where(w > 0, w, 1.0)
    return np.where(w > 0, V / safe, 0.0), w


def factorize(p: Potential, g) -> Factorization:
    v, w = split_values(p(np.asarray(g.points)))
    return Factorization(v, w, p.name)
