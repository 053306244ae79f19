"""Closed-form overdamped (large friction) quantities.

The one-dimensional cell equation has an explicit first integral, so the
effective diffusivity, its corrector, and the next-order friction expansion
are all evaluated by quadrature rather than by discretizing an ODE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimate import DiffusionEstimate
from .numerics import DEFAULT_SPEC, QuadratureSpec, quad_periodic
from .potential import PeriodicPotential, partition_scalars

__all__ = [
    "SmoluchowskiResult",
    "dbar",
    "corrector_chi",
    "dgamma_large_expansion",
    "overdamped_summary",
]


@dataclass(frozen=True)
class SmoluchowskiResult:
    dbar: float
    chi_grid: np.ndarray
    chi_values: np.ndarray
    expansion_terms: tuple[float, float]  # (leading, correction), both in D units
    identity_residual: float  # | beta^{-1} ||1+chi'||^2_nu - dbar | / dbar


def dbar(
    V: PeriodicPotential, beta: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> DiffusionEstimate:
    """Overdamped limit of gamma * D_gamma:  L^2 / (beta Z Zhat)."""
    ps = partition_scalars(V, beta, spec)
    L = V.period
    value = L * L / (beta * ps.Z * ps.Zhat)
    return DiffusionEstimate(
        value=value,
        ci_half_width=10.0 * spec.rel_tol * value,
        method="smoluchowski-formula",
        beta=beta,
    )


def corrector_chi(
    V: PeriodicPotential, beta: float, grid: int = 512, spec: QuadratureSpec = DEFAULT_SPEC
) -> SmoluchowskiResult:
    """Periodic corrector of the overdamped cell equation.

    1 + chi'(q) = L e^{beta V(q)} / Zhat is the unique solution with periodic
    chi and zero mean against the Gibbs density; the quadrature identity
    beta^{-1} ||1 + chi'||^2_nu = dbar is evaluated and reported as a
    consistency residual.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    ps = partition_scalars(V, beta, spec)
    L = V.period
    n = max(grid, 512)
    q = np.arange(n) * (L / n)
    chi_prime = L * np.exp(beta * V.eval(q)) / ps.Zhat - 1.0
    # spectral antiderivative of the mean-zero periodic chi'
    F = np.fft.fft(chi_prime)
    k = np.fft.fftfreq(n, d=L / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        Fint = np.where(k == 0, 0.0, F / (2j * np.pi * k))
    chi = np.real(np.fft.ifft(Fint))
    rho = np.exp(-beta * V.eval(q))
    rho /= rho.sum()
    chi = chi - float(chi @ rho)

    d_quad = (
        quad_periodic(
            lambda u: (L * np.exp(beta * V.eval(L * u)) / ps.Zhat) ** 2
            * np.exp(-beta * V.eval(L * u)),
            spec,
        )
        * L
        / (beta * ps.Z)
    )
    d_formula = L * L / (beta * ps.Z * ps.Zhat)
    resid = abs(d_quad - d_formula) / d_formula
    lead, corr = _expansion_terms(ps, L, 1.0)
    if grid < n:
        sel = np.linspace(0, n, grid, endpoint=False).astype(int)
        q, chi = q[sel], chi[sel]
    return SmoluchowskiResult(
        dbar=d_formula,
        chi_grid=q,
        chi_values=chi,
        expansion_terms=(lead, corr),
        identity_residual=resid,
    )


def _expansion_terms(ps, L: float, gamma: float) -> tuple[float, float]:
    lead = L * L / (ps.beta * gamma * ps.Z * ps.Zhat)
    corr = L * L * ps.beta * ps.Z1 / (gamma**3 * ps.Z * ps.Zhat**2)
    return lead, corr


def dgamma_large_expansion(
    V: PeriodicPotential,
    beta: float,
    gamma: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Two-term large-friction value of D_gamma:

        L^2 / (beta gamma Z Zhat) - L^2 beta Z1 / (gamma^3 Z Zhat^2)

    The omitted remainder is O(gamma^{-5}), with a coefficient that grows
    quickly with the potential's force moments.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    ps = partition_scalars(V, beta, spec)
    lead, corr = _expansion_terms(ps, V.period, gamma)
    return lead - corr


def overdamped_summary(
    V: PeriodicPotential,
    beta: float,
    gammas: tuple[float, ...] = (10.0,),
    grid: int = 512,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> dict:
    """Bundle used by the CLI: dbar, partition scalars and expansion values."""
    ps = partition_scalars(V, beta, spec)
    est = dbar(V, beta, spec)
    return {
        "dbar": est.value,
        "Z": ps.Z,
        "Zhat": ps.Zhat,
        "Z1": ps.Z1,
        "expansion": [
            {"gamma": g, "value": dgamma_large_expansion(V, beta, g, spec)}
            for g in gammas
        ],
    }
