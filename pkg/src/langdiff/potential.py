"""Smooth periodic potentials as truncated Fourier series.

Derivatives are exact (term-wise differentiation), which keeps every
downstream quadrature and spectral assembly free of model error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import DEFAULT_SPEC, QuadratureSpec, find_roots_on_torus, quad_periodic

__all__ = [
    "PeriodicPotential",
    "CriticalSet",
    "PartitionScalars",
    "critical_points",
    "partition_scalars",
    "load_potential",
    "PRESETS",
]

_DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class PeriodicPotential:
    """V(q) = sum_k a_k cos(2 pi k q / L) + b_k sin(2 pi k q / L), k = 1..K."""

    cosine_coeffs: tuple[float, ...] = ()
    sine_coeffs: tuple[float, ...] = ()
    period: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "cosine_coeffs", tuple(float(c) for c in self.cosine_coeffs))
        object.__setattr__(self, "sine_coeffs", tuple(float(c) for c in self.sine_coeffs))

    @property
    def n_modes(self) -> int:
        return max(len(self.cosine_coeffs), len(self.sine_coeffs))

    @property
    def is_zero(self) -> bool:
        return not (any(self.cosine_coeffs) or any(self.sine_coeffs))

    def eval(self, q, order: int = 0):
        """V(q), V'(q) or V''(q) by term-wise differentiation."""
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        w = 2.0 * np.pi / self.period
        for k in range(1, self.n_modes + 1):
            a = self.cosine_coeffs[k - 1] if k <= len(self.cosine_coeffs) else 0.0
            b = self.sine_coeffs[k - 1] if k <= len(self.sine_coeffs) else 0.0
            if a == 0.0 and b == 0.0:
                continue
            wk = w * k
            if order == 0:
                out += a * np.cos(wk * q) + b * np.sin(wk * q)
            elif order == 1:
                out += wk * (-a * np.sin(wk * q) + b * np.cos(wk * q))
            else:
                out += wk * wk * (-a * np.cos(wk * q) - b * np.sin(wk * q))
        return out

    def __call__(self, q):
        return self.eval(q, 0)

    def diff(self, q0: float, dq):
        """V(q0 + dq) - V(q0), evaluated without catastrophic cancellation.

        Uses product trig identities term by term, so the result is accurate
        relative to its own (possibly tiny) magnitude.
        """
        dq = np.asarray(dq, dtype=float)
        out = np.zeros_like(dq)
        w = 2.0 * np.pi / self.period
        for k in range(1, self.n_modes + 1):
            a = self.cosine_coeffs[k - 1] if k <= len(self.cosine_coeffs) else 0.0
            b = self.sine_coeffs[k - 1] if k <= len(self.sine_coeffs) else 0.0
            if a == 0.0 and b == 0.0:
                continue
            wk = w * k
            half = 0.5 * wk * dq
            s = np.sin(half)
            mid = wk * q0 + half
            out += 2.0 * s * (b * np.cos(mid) - a * np.sin(mid))
        return out

    def exp_fourier_coeffs(self) -> np.ndarray:
        """Coefficients of V in the exp basis, index m = -K..K."""
        K = self.n_modes
        c = np.zeros(2 * K + 1, dtype=complex)
        for k in range(1, K + 1):
            a = self.cosine_coeffs[k - 1] if k <= len(self.cosine_coeffs) else 0.0
            b = self.sine_coeffs[k - 1] if k <= len(self.sine_coeffs) else 0.0
            c[K + k] = 0.5 * (a - 1j * b)
            c[K - k] = 0.5 * (a + 1j * b)
        return c

    def scale(self) -> float:
        """Rough magnitude of V used for relative tolerances."""
        s = sum(abs(a) for a in self.cosine_coeffs) + sum(abs(b) for b in self.sine_coeffs)
        return max(s, 1.0)


@dataclass(frozen=True)
class CriticalSet:
    minima: tuple[tuple[float, float], ...]  # (q, energy)
    maxima: tuple[tuple[float, float], ...]
    E_min: float
    E0: float
    degenerate_flag: bool


@dataclass(frozen=True)
class PartitionScalars:
    """Gibbs-weight integrals over one period: Z, Zhat and the force moment Z1."""

    Z: float
    Zhat: float
    Z1: float
    beta: float


def critical_points(V: PeriodicPotential, tol: float = 1e-12) -> CriticalSet:
    """Classify all roots of V' on one period by the sign of V''.

    A constant potential yields empty sets with the degenerate flag raised
    (free-particle convention); inflection tangencies also raise the flag.
    """
    if V.is_zero:
        e = float(V.eval(0.0))
        return CriticalSet((), (), e, e, True)
    roots = find_roots_on_torus(lambda q: V.eval(q, 1), tol=tol, period=V.period)
    minima, maxima = [], []
    degenerate = False
    for r in roots:
        curv = float(V.eval(r.q, 2))
        if r.degenerate or abs(curv) < _DEGENERACY_TOL:
            degenerate = True
        energy = float(V.eval(r.q))
        if curv > 0:
            minima.append((r.q, energy))
        elif curv < 0:
            maxima.append((r.q, energy))
        else:
            degenerate = True
    if not minima or not maxima:
        degenerate = True
    E0 = max((e for _, e in maxima), default=float(V.eval(0.0)))
    E_min = min((e for _, e in minima), default=float(V.eval(0.0)))
    return CriticalSet(tuple(minima), tuple(maxima), E_min, E0, degenerate)


def partition_scalars(
    V: PeriodicPotential, beta: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> PartitionScalars:
    """Z = int e^{-beta V}, Zhat = int e^{beta V}, Z1 = int (V')^2 e^{beta V}.

    All integrals run over one full period [0, L].
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    L = V.period

    def on_period(g):
        # map [0,1) sample points onto [0,L); the factor L restores the measure
        return L * quad_periodic(lambda u: g(L * u), spec)

    Z = on_period(lambda q: np.exp(-beta * V.eval(q)))
    Zhat = on_period(lambda q: np.exp(beta * V.eval(q)))
    Z1 = on_period(lambda q: V.eval(q, 1) ** 2 * np.exp(beta * V.eval(q)))
    return PartitionScalars(Z=Z, Zhat=Zhat, Z1=Z1, beta=beta)


PRESETS = {
    "pendulum": {"cos": [1.0], "sin": [], "period": 1.0},
    "zero": {"cos": [], "sin": [], "period": 1.0},
}


def load_potential(source) -> PeriodicPotential:
    """Build a potential from a preset name, JSON text, dict, or file path.

    JSON layout: {"cos": [a1, a2, ...], "sin": [b1, ...], "period": 1.0}.
    """
    if isinstance(source, PeriodicPotential):
        return source
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, Path)):
        text = str(source)
        if text in PRESETS:
            doc = PRESETS[text]
        elif text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            p = Path(text)
            if not p.is_file():
                raise ValueError(f"unknown potential {text!r}: not a preset, JSON or file")
            doc = json.loads(p.read_text())
    else:
        raise ValueError(f"cannot build a potential from {type(source).__name__}")
    if not isinstance(doc, dict):
        raise ValueError("potential JSON must be an object")
    cos = doc.get("cos", [])
    sin = doc.get("sin", [])
    period = float(doc.get("period", 1.0))
    if not all(isinstance(x, (int, float)) for x in list(cos) + list(sin)):
        raise ValueError("potential coefficients must be numbers")
    return PeriodicPotential(tuple(cos), tuple(sin), period)
