"""Quadrature and root-finding kernels shared by every other module.

No domain knowledge lives here.  All integrand callables must accept a float
ndarray and return an ndarray of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, NonConvergence

__all__ = [
    "QuadratureSpec",
    "Bracket",
    "TorusRoot",
    "DEFAULT_SPEC",
    "quad_periodic",
    "quad_periodic_open",
    "quad_exp_tail",
    "quad_smooth",
    "quad_exp_interval",
    "find_roots_on_torus",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and refinement budget for the adaptive rules."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-11
    max_refinements: int = 16

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")

    def tol(self, scale: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(scale))


@dataclass(frozen=True)
class Bracket:
    """Interval whose endpoints carry opposite function signs."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")


@dataclass(frozen=True)
class TorusRoot:
    q: float
    degenerate: bool = False


DEFAULT_SPEC = QuadratureSpec()


def quad_periodic(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integrate a smooth 1-periodic function over [0, 1).

    Trapezoid rule with dyadic refinement; spectrally accurate for smooth
    periodic integrands.  Stops when two successive refinements agree.
    """
    n = 16
    vals = f(np.arange(n) / n)
    mean = float(np.mean(vals))
    for _ in range(spec.max_refinements):
        mids = (np.arange(n) + 0.5) / n
        mid_mean = float(np.mean(f(mids)))
        new = 0.5 * (mean + mid_mean)
        n *= 2
        if abs(new - mean) <= spec.tol(new):
            return new
        mean = new
    raise NonConvergence(
        f"quad_periodic: no convergence after {spec.max_refinements} refinements "
        f"(last diff {abs(new - mean):.3e})"
    )


def quad_periodic_open(f: Callable, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Midpoint variant of quad_periodic: never samples u = 0.

    Same spectral accuracy for smooth 1-periodic integrands; used where the
    integrand is defined by a limit at the u = 0 sample point.
    """
    n = 16
    prev = float(np.mean(f((np.arange(n) + 0.5) / n)))
    for _ in range(spec.max_refinements):
        n *= 2
        cur = float(np.mean(f((np.arange(n) + 0.5) / n)))
        if abs(cur - prev) <= spec.tol(cur):
            return cur
        prev = cur
    raise NonConvergence(
        f"quad_periodic_open: no convergence after {spec.max_refinements} refinements"
    )


def quad_smooth(
    f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Romberg integration of a smooth function on the finite interval [a, b]."""
    if b <= a:
        return 0.0 if b == a else -quad_smooth(f, b, a, spec)
    kmax = spec.max_refinements
    R = np.zeros((kmax + 1, kmax + 1))
    fa = float(f(np.array([a]))[0])
    fb = float(f(np.array([b]))[0])
    h = b - a
    R[0, 0] = 0.5 * h * (fa + fb)
    total = R[0, 0]
    for k in range(1, kmax + 1):
        n_new = 2 ** (k - 1)
        x = a + (b - a) * (np.arange(n_new) + 0.5) / n_new
        s = float(np.sum(f(x)))
        h *= 0.5
        R[k, 0] = 0.5 * R[k - 1, 0] + h * s
        for j in range(1, k + 1):
            R[k, j] = R[k, j - 1] + (R[k, j - 1] - R[k - 1, j - 1]) / (4**j - 1)
        total = R[k, k]
        if k >= 3 and abs(R[k, k] - R[k - 1, k - 1]) <= spec.tol(total):
            return total
    raise NonConvergence(
        f"quad_smooth: Romberg not converged on [{a}, {b}] after {kmax} levels"
    )


@lru_cache(maxsize=8)
def _laguerre_rule(n: int):
    return laggauss(n)


def _tail_panel(g: Callable, beta: float, a: float, spec: QuadratureSpec) -> float:
    """int_a^inf g(z) e^{-beta z} dz by a Gauss-Laguerre ladder.

    Node count doubles until two successive rules agree; orders above 128
    are avoided (their weights underflow), so when the ladder is exhausted
    the transformed integral falls back to the Romberg rule on a finite
    window, which loses nothing beyond e^{-60}.
    """
    prev = None
    for n in (32, 64, 96, 128):
        x, w = _laguerre_rule(n)
        z = a + x / beta
        val = float(np.sum(w * g(z))) * np.exp(-beta * a) / beta
        if prev is not None and abs(val - prev) <= spec.tol(val):
            return val
        prev = val

    def transformed(t):
        return g(a + t / beta) * np.exp(-t)

    return quad_smooth(transformed, 0.0, 60.0, spec) * np.exp(-beta * a) / beta


def quad_exp_tail(
    g: Callable, beta: float, z_lo: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Integrate g(z) e^{-beta z} over (z_lo, inf).

    Handles integrands with logarithmic or integrable algebraic behavior at
    the lower endpoint via the substitution z = z_lo + e^{-u} on the first
    unit of the range; the remaining tail uses a Gauss-Laguerre rule.
    """
    if beta <= 0:
        raise DomainError("quad_exp_tail requires beta > 0")
    u_max = 60.0  # e^{-60} is below double noise for all admissible g

    def near(u):
        dz = np.exp(-np.asarray(u))
        z = z_lo + dz
        ok = z > z_lo  # dz can underflow against z_lo; that sliver is negligible
        out = np.zeros_like(z)
        if ok.any():
            out[ok] = g(z[ok]) * np.exp(-beta * z[ok]) * dz[ok]
        return out

    head = quad_smooth(near, 0.0, u_max, spec)
    tail = _tail_panel(g, beta, z_lo + 1.0, spec)
    return head + tail


def quad_exp_interval(
    g: Callable,
    beta: float,
    z_lo: float,
    z_hi: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    log_at_lo: bool = False,
    log_at_hi: bool = False,
) -> float:
    """Integrate g(z) e^{-beta z} over the finite interval (z_lo, z_hi).

    Either endpoint may carry a logarithmic singularity of g; those ends are
    regularized by the exponential substitution used in quad_exp_tail.
    """
    if beta <= 0:
        raise DomainError("quad_exp_interval requires beta > 0")
    if z_hi <= z_lo:
        return 0.0
    span = z_hi - z_lo
    if log_at_lo and log_at_hi:
        zm = 0.5 * (z_lo + z_hi)
        return quad_exp_interval(g, beta, z_lo, zm, spec, log_at_lo, False) + (
            quad_exp_interval(g, beta, zm, z_hi, spec, False, log_at_hi)
        )
    if log_at_hi:
        # z = z_hi - e^{-u}
        u0 = -np.log(span)

        def upper(u):
            dz = np.exp(-np.asarray(u))
            z = z_hi - dz
            ok = z < z_hi
            out = np.zeros_like(z)
            if ok.any():
                out[ok] = g(z[ok]) * np.exp(-beta * z[ok]) * dz[ok]
            return out

        return quad_smooth(upper, u0, u0 + 55.0, spec)
    if log_at_lo:
        u0 = -np.log(span)

        def lower(u):
            dz = np.exp(-np.asarray(u))
            z = z_lo + dz
            ok = z > z_lo
            out = np.zeros_like(z)
            if ok.any():
                out[ok] = g(z[ok]) * np.exp(-beta * z[ok]) * dz[ok]
            return out

        return quad_smooth(lower, u0, u0 + 55.0, spec)
    return quad_smooth(lambda z: g(z) * np.exp(-beta * z), z_lo, z_hi, spec)


def find_roots_on_torus(
    f: Callable, tol: float = 1e-10, n_grid: int = 4096, period: float = 1.0
) -> list[TorusRoot]:
    """All roots of a smooth function on [0, period), sorted ascending.

    Brackets come from a sign-change scan on a fine grid followed by
    bisection.  Tangent roots (no sign change) are located by minimizing
    |f| near grid points where it dips toward zero; such roots, and any
    root where |f'| is tiny, are flagged degenerate rather than rejected.
    """
    qs = np.arange(n_grid) * (period / n_grid)
    vals = np.asarray(f(qs), dtype=float)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        return []  # identically zero on the grid: no isolated roots

    def f_scalar(x):
        return float(f(np.array([x % period]))[0])

    roots: list[float] = []
    sign = np.sign(vals)
    # treat exact grid zeros as part of the adjacent sign region
    for i in range(n_grid):
        a, b = qs[i], qs[i] + period / n_grid
        sa, sb = sign[i], sign[(i + 1) % n_grid]
        if sa == 0.0:
            roots.append(qs[i])
        elif sa * sb < 0:
            roots.append(brentq(f_scalar, a, b, xtol=tol * 0.1))

    # tangent roots: local minima of |f| well below scale, without sign change
    absv = np.abs(vals)
    thresh = max(np.sqrt(tol) * scale, 100 * tol * scale)
    candidates = []
    for i in range(n_grid):
        if absv[i] < thresh and absv[i] <= absv[i - 1] and absv[i] <= absv[(i + 1) % n_grid]:
            if sign[i] != 0 and sign[i - 1] == sign[i] == sign[(i + 1) % n_grid]:
                candidates.append(i)
    h = period / n_grid
    tangent: list[float] = []
    for i in candidates:
        lo, hi = qs[i] - h, qs[i] + h
        res = minimize_scalar(
            lambda x: abs(f_scalar(x)), bounds=(lo, hi), method="bounded",
            options={"xatol": tol * 0.01},
        )
        r = float(res.x) % period
        if abs(f_scalar(r)) <= 10 * tol * scale:
            tangent.append(r)

    out: list[TorusRoot] = []
    fp_h = max(np.sqrt(np.finfo(float).eps) * period, tol)
    for q, is_tangent in sorted(
        [(r % period, False) for r in roots] + [(r, True) for r in tangent]
    ):
        if out and min(abs(q - out[-1].q), period - abs(q - out[-1].q)) < 10 * tol:
            continue
        if out and min(abs(q - out[0].q), period - abs(q - out[0].q)) < 10 * tol:
            continue
        deriv = (f_scalar(q + fp_h) - f_scalar(q - fp_h)) / (2 * fp_h)
        degenerate = is_tangent or abs(deriv) < tol * scale / period
        out.append(TorusRoot(q=q, degenerate=degenerate))
    return out
