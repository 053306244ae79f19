"""Shared result type for diffusivity values from any route."""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class DiffusionEstimate:
    """A diffusivity with its uncertainty and provenance tag.

    ``gamma`` is None for friction-limit quantities that do not depend on it.
    For formula routes ``ci_half_width`` is a quadrature error bound; for
    sampling routes it is a 95% confidence half-width.
    """

    value: float
    ci_half_width: float
    method: str
    beta: float
    gamma: float | None = None

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"diffusivity must be positive, got {self.value}")
        if self.ci_half_width < 0:
            raise ValueError("ci_half_width must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)
