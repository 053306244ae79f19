"""Energy graph of the Hamiltonian H = p^2/2 + V(q) on the torus.

Points of the graph are connected components of level sets of H; vertices sit
at critical energies.  Each edge carries the orbit period T(z) and the action
mass S(z) = integral of |p| dq over the orbit, from which the small-friction
diffusivity and the limiting graph diffusion are built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneratePotential, OutOfRange
from .estimate import DiffusionEstimate
from .numerics import (
    DEFAULT_SPEC,
    QuadratureSpec,
    quad_exp_interval,
    quad_exp_tail,
    quad_periodic,
    quad_periodic_open,
)
from .potential import PeriodicPotential, critical_points, partition_scalars

__all__ = [
    "Edge",
    "Vertex",
    "EnergyGraph",
    "OrbitQuantities",
    "build_graph",
    "turning_points",
    "period_T",
    "action_S",
    "graph_partition",
    "orbit_average",
    "pbar",
    "harmonic_period",
    "dstar",
    "dstar_asymptotics",
]

WELL = "well"
ROTATIONAL = "rotational-infinite"

# below this distance from a vertex, T and S switch to their calibrated
# logarithmic asymptotes (quadrature would need excessive resolution there);
# the switch error is O(dz log dz), far below every downstream tolerance
_ASYMPTOTE_DELTA = 1e-6
_VERTEX_SNAP = 1e-10


@dataclass(eq=False)
class Edge:
    id: int
    kind: str  # WELL or ROTATIONAL
    z_lo: float
    z_hi: float  # inf on rotational edges
    p_sign: int  # 0 on well edges
    potential: PeriodicPotential
    q_anchor: float
    window: tuple[float, float]  # unwrapped q-interval of the orbit at z_hi
    interior_maxima: tuple[float, ...] = ()
    interior_energies: tuple[float, ...] = ()
    log_coeff_lo: float = 0.0  # T(z) ~ -A log(z - z_lo) + B near z_lo
    log_coeff_hi: float = 0.0  # T(z) ~ -A log(z_hi - z) + B near z_hi
    _cache: dict = field(default_factory=dict, repr=False)

    def contains(self, z: float, closed: bool = False) -> bool:
        if closed:
            return self.z_lo <= z <= self.z_hi
        return self.z_lo < z < self.z_hi

    def q_support(self, z: float) -> list[tuple[float, float]]:
        """Turning-point interval(s) of the orbit projection at energy z."""
        return [turning_points(self, z)]


@dataclass(frozen=True)
class Vertex:
    energy: float
    kind: str  # "minimum" | "interior" | "infinity"
    edges_below: tuple[int, ...]
    edges_above: tuple[int, ...]


@dataclass(frozen=True)
class OrbitQuantities:
    edge: Edge
    T: Callable
    S: Callable


@dataclass(eq=False)
class EnergyGraph:
    potential: PeriodicPotential
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    E0: float
    free_particle: bool = False

    @property
    def well_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == WELL]

    @property
    def rotational_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == ROTATIONAL]

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]

    def orbit_quantities(self, edge: Edge) -> OrbitQuantities:
        return OrbitQuantities(
            edge=edge, T=lambda z: period_T(edge, z), S=lambda z: action_S(edge, z)
        )


# ---------------------------------------------------------------------------
# graph construction


def _circular_runs(below: np.ndarray) -> list[tuple[int, int]]:
    """Index runs of True in a circular boolean array as (start, length)."""
    n = below.size
    if below.all():
        return [(0, n)]
    if not below.any():
        return []
    # rotate so the array starts on a False sample
    start = int(np.argmin(below))
    rolled = np.roll(below, -start)
    runs = []
    i = 0
    while i < n:
        if rolled[i]:
            j = i
            while j < n and rolled[j]:
                j += 1
            runs.append(((i + start) % n, j - i))
            i = j
        else:
            i += 1
    return runs


def build_graph(V: PeriodicPotential, grid: int = 8192) -> EnergyGraph:
    """Assemble vertices and edges from the critical structure of V."""
    return _build_graph_cached(V, grid)


@lru_cache(maxsize=32)
def _build_graph_cached(V: PeriodicPotential, grid: int) -> EnergyGraph:
    L = V.period
    crit = critical_points(V)
    if V.is_zero:
        E0 = float(V.eval(0.0))
        edges = tuple(
            Edge(
                id=i,
                kind=ROTATIONAL,
                z_lo=E0,
                z_hi=math.inf,
                p_sign=s,
                potential=V,
                q_anchor=0.0,
                window=(0.0, L),
            )
            for i, s in enumerate((+1, -1))
        )
        vertices = (
            Vertex(E0, "interior", (), (0, 1)),
            Vertex(math.inf, "infinity", (0, 1), ()),
        )
        return EnergyGraph(V, vertices, edges, E0, free_particle=True)
    if crit.degenerate_flag:
        raise DegeneratePotential("potential has degenerate critical points")

    scale = V.scale()
    snap = _VERTEX_SNAP * scale
    maxima = sorted(crit.maxima)  # by position
    minima = sorted(crit.minima)
    E0 = crit.E0

    energies = sorted({e for _, e in maxima} | {e for _, e in minima})
    merged: list[float] = []
    for e in energies:
        if not merged or e - merged[-1] > snap:
            merged.append(e)
    energies = merged

    qg = np.arange(grid) * (L / grid)
    Vg = V.eval(qg)

    def components_at(z: float):
        """Circular components of {V < z}: list of (minima index set, anchor)."""
        runs = _circular_runs(Vg < z)
        comps = []
        for start, length in runs:
            lo = qg[start]
            span = length * (L / grid)
            inside = []
            for idx, (mq, _) in enumerate(minima):
                rel = (mq - lo) % L
                if rel < span:
                    inside.append(idx)
            if inside:
                anchor = min(
                    (minima[i] for i in inside), key=lambda t: t[1]
                )[0]
                comps.append((frozenset(inside), anchor))
        return comps

    # bands strictly below E0, keyed by the minima each component contains
    bands = [(energies[i], energies[i + 1]) for i in range(len(energies) - 1)]
    chains: dict[frozenset, dict] = {}
    for lo, hi in bands:
        zm = 0.5 * (lo + hi)
        for ident, anchor in components_at(zm):
            c = chains.get(ident)
            if c is None:
                chains[ident] = {"z_lo": lo, "z_hi": hi, "anchor": anchor}
            else:
                c["z_hi"] = hi

    def nearest_high_max(anchor: float, z_top: float, direction: int) -> tuple[float, float]:
        """Unwrapped position and curvature of the first max with V >= z_top."""
        best = None
        for mq, me in maxima:
            if me < z_top - snap:
                continue
            if direction < 0:
                pos = anchor - ((anchor - mq) % L)
            else:
                pos = anchor + ((mq - anchor) % L)
            if best is None or abs(pos - anchor) < abs(best[0] - anchor):
                best = (pos, float(-V.eval(mq, 2)))
        if best is None:
            raise DegeneratePotential("no bounding maximum found")
        return best

    def window_endpoint(max_pos: float, max_curv: float, z_top: float, anchor: float, direction: int):
        """Exact boundary of the z_top sublevel component on one side."""
        if abs(float(V.eval(max_pos)) - z_top) <= snap:
            return max_pos, 1.0 / math.sqrt(max_curv)
        f = lambda q: float(V.eval(q)) - z_top
        a, b = (max_pos, anchor) if direction < 0 else (anchor, max_pos)
        # bracket: V(max_pos) > z_top, V(anchor) < z_top
        root = brentq(f, a, b, xtol=1e-14 * max(1.0, L))
        return root, 0.0

    well_specs = []
    for ident, c in sorted(chains.items(), key=lambda kv: (kv[1]["z_lo"], kv[1]["anchor"])):
        z_lo, z_hi, anchor = c["z_lo"], c["z_hi"], c["anchor"]
        lpos, lcurv = nearest_high_max(anchor, z_hi, -1)
        rpos, rcurv = nearest_high_max(anchor, z_hi, +1)
        wl, al = window_endpoint(lpos, lcurv, z_hi, anchor, -1)
        wr, ar = window_endpoint(rpos, rcurv, z_hi, anchor, +1)
        interior = []
        for mq, me in maxima:
            pos = wl + ((mq - wl) % L)
            if wl + snap < pos < wr - snap:
                interior.append((pos, me))
        interior.sort()
        a_lo = 0.0
        for pos, me in interior:
            if abs(me - z_lo) <= snap:
                a_lo += 2.0 / math.sqrt(float(-V.eval(pos, 2)))
        well_specs.append(
            dict(
                z_lo=z_lo,
                z_hi=z_hi,
                anchor=anchor,
                window=(wl, wr),
                interior=tuple(p for p, _ in interior),
                interior_e=tuple(e for _, e in interior),
                log_lo=a_lo,
                log_hi=al + ar,
            )
        )

    edges: list[Edge] = []
    for spec_ in well_specs:
        edges.append(
            Edge(
                id=len(edges),
                kind=WELL,
                z_lo=spec_["z_lo"],
                z_hi=spec_["z_hi"],
                p_sign=0,
                potential=V,
                q_anchor=spec_["anchor"],
                window=spec_["window"],
                interior_maxima=spec_["interior"],
                interior_energies=spec_["interior_e"],
                log_coeff_lo=spec_["log_lo"],
                log_coeff_hi=spec_["log_hi"],
            )
        )

    # rotational edges live above E0 and wrap the whole torus
    global_maxima = [(mq, me) for mq, me in maxima if abs(me - E0) <= snap]
    q0 = global_maxima[0][0]
    rot_interior = []
    for mq, me in maxima:
        pos = q0 + ((mq - q0) % L)
        if pos > q0 + snap:
            rot_interior.append((pos, me))
    rot_interior.sort()
    a_rot = sum(1.0 / math.sqrt(float(-V.eval(mq, 2))) for mq, _ in global_maxima)
    for s in (+1, -1):
        edges.append(
            Edge(
                id=len(edges),
                kind=ROTATIONAL,
                z_lo=E0,
                z_hi=math.inf,
                p_sign=s,
                potential=V,
                q_anchor=q0,
                window=(q0, q0 + L),
                interior_maxima=tuple(p for p, _ in rot_interior),
                interior_energies=tuple(e for _, e in rot_interior),
                log_coeff_lo=a_rot,
            )
        )

    vertices: list[Vertex] = []
    vertex_energies = sorted({e.z_lo for e in edges} | {e.z_hi for e in edges if e.z_hi < math.inf})
    for ve in vertex_energies:
        below = tuple(e.id for e in edges if abs(e.z_hi - ve) <= snap)
        above = tuple(e.id for e in edges if abs(e.z_lo - ve) <= snap)
        is_min = any(abs(me - ve) <= snap for _, me in minima)
        is_max = any(abs(me - ve) <= snap for _, me in maxima)
        kind = "interior" if is_max else ("minimum" if is_min else "interior")
        vertices.append(Vertex(ve, kind, below, above))
    vertices.append(Vertex(math.inf, "infinity", tuple(e.id for e in edges if e.z_hi == math.inf), ()))

    return EnergyGraph(V, tuple(vertices), tuple(edges), E0)


# ---------------------------------------------------------------------------
# orbit quadrature


def turning_points(edge: Edge, z: float) -> tuple[float, float]:
    """Orbit q-projection at energy z, in unwrapped coordinates.

    Wells: the turning interval (q-, q+); rotational edges: the full window.
    """
    if edge.kind == ROTATIONAL:
        if z < edge.z_lo:
            raise OutOfRange(f"z={z} below rotational edge at {edge.z_lo}")
        return edge.window
    # merged wells (log_coeff_lo > 0) still have a finite orbit at z_lo
    z_min = edge.z_lo if edge.log_coeff_lo > 0 else None
    if not (edge.z_lo < z <= edge.z_hi) and z != z_min:
        raise OutOfRange(f"z={z} outside well edge ({edge.z_lo}, {edge.z_hi}]")
    key = ("tp", z)
    if key in edge._cache:
        return edge._cache[key]
    if z >= edge.z_hi - _VERTEX_SNAP * edge.potential.scale():
        edge._cache[key] = edge.window
        return edge.window
    V = edge.potential
    f = lambda q: float(V.eval(q)) - z
    wl, wr = edge.window
    xtol = 1e-14 * max(1.0, V.period)
    qm = brentq(f, wl, edge.q_anchor, xtol=xtol)
    qp = brentq(f, edge.q_anchor, wr, xtol=xtol)
    edge._cache[key] = (qm, qp)
    return (qm, qp)


def _panel_integral(
    edge: Edge,
    z: float,
    fn: Callable,
    pa: float,
    pb: float,
    za: float,
    zb: float,
    spec: QuadratureSpec,
) -> float:
    """Integrate fn(q, w) dq over [pa, pb], w = sqrt(2 (z - V(q))).

    The substitution q = pa + (pb - pa) sin^2(theta) clusters samples at the
    panel ends, restoring spectral accuracy for turning-point factors.  The
    energy difference z - V is anchored at the nearer panel endpoint (whose
    exact offset za or zb the caller supplies; zero at turning points) and
    completed through PeriodicPotential.diff, so the integrand stays smooth
    to machine precision even deep inside near-critical orbits.
    """
    width = pb - pa
    if width <= 0:
        return 0.0
    V = edge.potential

    def folded(u):
        theta = np.pi * np.asarray(u)
        theta = np.where(theta > 0.5 * np.pi, np.pi - theta, theta)
        s2 = np.sin(theta) ** 2
        near_a = s2 <= 0.5
        dq_a = width * s2
        dq_b = -width * (1.0 - s2)
        zmv = np.where(near_a, za - V.diff(pa, dq_a), zb - V.diff(pb, dq_b))
        q = np.where(near_a, pa + dq_a, pb + dq_b)
        w = np.sqrt(np.maximum(2.0 * zmv, 1e-300))
        return fn(q, w) * width * np.sin(2.0 * theta)

    return 0.5 * np.pi * quad_periodic_open(folded, spec)


def _orbit_integral(edge: Edge, z: float, fn: Callable, spec: QuadratureSpec) -> float:
    """Sum of panel integrals of fn(q, w) dq over the orbit projection.

    The fold substitution is even-analytic only where the panel ends on a
    turning point or a tangency, so panels are cut at interior maxima only
    when the orbit grazes them (|z - E_max| below the snap tolerance).
    """
    qa, qb = turning_points(edge, z)
    snap = _VERTEX_SNAP * edge.potential.scale()
    pts = [(qa, z)]
    for m, em in zip(edge.interior_maxima, edge.interior_energies):
        if qa < m < qb and abs(z - em) <= snap:
            pts.append((m, em))
    pts.append((qb, z))
    return sum(
        _panel_integral(edge, z, fn, pts[i][0], pts[i + 1][0], z - pts[i][1], z - pts[i + 1][1], spec)
        for i in range(len(pts) - 1)
    )


def _rot_full_integral(edge: Edge, z: float, fn: Callable, spec: QuadratureSpec) -> float:
    """Full-period integral of fn(q, w) dq on a rotational edge, z > E0.

    The integrand is smooth and periodic there, so the closed trapezoid rule
    is spectrally accurate; z - V is evaluated against the nearest maximum
    to keep it smooth near grazing passages.
    """
    V = edge.potential
    L = V.period
    q0 = edge.window[0]
    anchors_q = np.array([edge.window[0], *edge.interior_maxima, edge.window[1]])
    anchors_e = np.array([edge.z_lo, *edge.interior_energies, edge.z_lo])

    def f(u):
        q = q0 + L * np.asarray(u)
        idx = np.clip(np.searchsorted(anchors_q, q), 1, anchors_q.size - 1)
        nearer_left = (q - anchors_q[idx - 1]) <= (anchors_q[idx] - q)
        ai = np.where(nearer_left, idx - 1, idx)
        zmv = np.empty_like(q)
        for j in np.unique(ai):
            m = ai == j
            zmv[m] = (z - anchors_e[j]) - V.diff(float(anchors_q[j]), q[m] - anchors_q[j])
        w = np.sqrt(np.maximum(2.0 * zmv, 1e-300))
        return fn(q, w)

    return L * quad_periodic(f, spec)


def _calibrate_log(edge: Edge, end: str, spec: QuadratureSpec) -> float:
    """Constant term B of the near-vertex asymptote T = -A log(dz) + B."""
    key = ("B", end)
    if key not in edge._cache:
        dz = _ASYMPTOTE_DELTA
        if end == "lo":
            z = edge.z_lo + dz
            A = edge.log_coeff_lo
        else:
            z = edge.z_hi - dz
            A = edge.log_coeff_hi
        T = _period_quad(edge, z, spec)
        edge._cache[key] = T + A * math.log(dz)
    return edge._cache[key]


def _period_quad(edge: Edge, z: float, spec: QuadratureSpec) -> float:
    V = edge.potential
    if edge.kind == ROTATIONAL:
        if V.is_zero:
            return V.period / math.sqrt(2.0 * (z - edge.z_lo))
        return _rot_full_integral(edge, z, lambda q, w: 1.0 / w, spec)
    return 2.0 * _orbit_integral(edge, z, lambda q, w: 1.0 / w, spec)


def period_T(edge: Edge, z: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Orbit period at energy z; diverges logarithmically at max-vertices."""
    if edge.kind == ROTATIONAL:
        if not z > edge.z_lo:
            raise OutOfRange(f"z={z} not above rotational edge root {edge.z_lo}")
    elif not (edge.z_lo <= z < edge.z_hi):
        raise OutOfRange(f"z={z} outside well edge [{edge.z_lo}, {edge.z_hi})")
    if edge.kind == WELL and z == edge.z_lo:
        if edge.log_coeff_lo > 0:
            raise OutOfRange("period diverges at a merging vertex")
        # simple well: harmonic limit at the bottom
        return 2.0 * math.pi / math.sqrt(float(edge.potential.eval(edge.q_anchor, 2)))
    if edge.log_coeff_lo > 0 and z - edge.z_lo < _ASYMPTOTE_DELTA:
        B = _calibrate_log(edge, "lo", spec)
        return -edge.log_coeff_lo * math.log(z - edge.z_lo) + B
    if edge.log_coeff_hi > 0 and edge.z_hi - z < _ASYMPTOTE_DELTA:
        B = _calibrate_log(edge, "hi", spec)
        return -edge.log_coeff_hi * math.log(edge.z_hi - z) + B
    return _period_quad(edge, z, spec)


def _action_quad(edge: Edge, z: float, spec: QuadratureSpec) -> float:
    V = edge.potential
    if edge.kind == ROTATIONAL:
        if V.is_zero:
            return V.period * math.sqrt(2.0 * (z - edge.z_lo))
        if z - edge.z_lo > _VERTEX_SNAP * V.scale():
            return _rot_full_integral(edge, z, lambda q, w: w, spec)
    factor = 2.0 if edge.kind == WELL else 1.0
    return factor * _orbit_integral(edge, z, lambda q, w: w, spec)


def action_S(edge: Edge, z: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Action mass S(z) = integral of |p| dq over the orbit.

    Continuous up to the edge endpoints; S' = T holds in the interior.
    """
    if edge.kind == ROTATIONAL:
        if z < edge.z_lo:
            raise OutOfRange(f"z={z} below rotational edge root {edge.z_lo}")
        if edge.potential.is_zero:
            return edge.potential.period * math.sqrt(2.0 * (z - edge.z_lo))
    elif not (edge.z_lo <= z <= edge.z_hi):
        raise OutOfRange(f"z={z} outside well edge [{edge.z_lo}, {edge.z_hi}]")
    snap = _VERTEX_SNAP * edge.potential.scale()
    if edge.kind == WELL and z - edge.z_lo <= snap and edge.log_coeff_lo == 0.0:
        return 0.0  # simple well: the orbit shrinks to the minimum
    dz_lo = z - edge.z_lo
    if edge.log_coeff_lo > 0 and 0 < dz_lo < _ASYMPTOTE_DELTA:
        S0 = _vertex_action(edge, "lo", spec)
        A, B = edge.log_coeff_lo, _calibrate_log(edge, "lo", spec)
        return S0 + A * dz_lo * (1.0 - math.log(dz_lo)) + B * dz_lo
    if edge.z_hi < math.inf:
        dz_hi = edge.z_hi - z
        if edge.log_coeff_hi > 0 and 0 < dz_hi < _ASYMPTOTE_DELTA:
            S1 = _vertex_action(edge, "hi", spec)
            A, B = edge.log_coeff_hi, _calibrate_log(edge, "hi", spec)
            return S1 - A * dz_hi * (1.0 - math.log(dz_hi)) - B * dz_hi
    if dz_lo <= snap:
        return _vertex_action(edge, "lo", spec)
    if edge.z_hi < math.inf and edge.z_hi - z <= snap:
        return _vertex_action(edge, "hi", spec)
    return _action_quad(edge, z, spec)


def _vertex_action(edge: Edge, end: str, spec: QuadratureSpec) -> float:
    key = ("S", end)
    if key not in edge._cache:
        z = edge.z_lo if end == "lo" else edge.z_hi
        edge._cache[key] = _action_quad(edge, z, spec)
    return edge._cache[key]


def orbit_average(
    f: Callable, edge: Edge, z: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Average of f(q, p) over the orbit at energy z against the line measure
    dq/|p| (total mass T(z))."""
    V = edge.potential
    T = period_T(edge, z, spec)
    if edge.kind == WELL:
        # both momentum branches summed in the integrand already
        fn = lambda q, w: (f(q, w) + f(q, -w)) / w
        return _orbit_integral(edge, z, fn, spec) / T
    s = float(edge.p_sign)
    if V.is_zero:
        p = math.sqrt(2.0 * (z - edge.z_lo))
        qs = np.linspace(0.0, V.period, 257)[:-1]
        return float(np.mean(f(qs, s * p * np.ones_like(qs))))
    fn = lambda q, w: f(q, s * w) / w
    if z - edge.z_lo > _VERTEX_SNAP * V.scale():
        return _rot_full_integral(edge, z, fn, spec) / T
    return _orbit_integral(edge, z, fn, spec) / T


def pbar(edge: Edge, z: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Orbit-averaged velocity: zero on wells, +-L/T(z) on rotational edges."""
    if edge.kind == WELL:
        return 0.0
    return edge.p_sign * edge.potential.period / period_T(edge, z, spec)


# ---------------------------------------------------------------------------
# scalar functionals


def graph_partition(
    V: PeriodicPotential, beta: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Normalization of the Gibbs measure on the graph:
    Z_beta = sum over edges of int T(z) e^{-beta z} dz.

    Equals the phase-space integral  iint e^{-beta H} dp dq.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    graph = build_graph(V)
    total = 0.0
    for e in graph.well_edges:
        g = lambda zs: np.array([period_T(e, z, spec) for z in np.atleast_1d(zs)])
        total += quad_exp_interval(
            g, beta, e.z_lo, e.z_hi, spec,
            log_at_lo=e.log_coeff_lo > 0, log_at_hi=True,
        )
    for e in graph.rotational_edges:
        g = lambda zs, e=e: np.array([period_T(e, z, spec) for z in np.atleast_1d(zs)])
        total += quad_exp_tail(g, beta, e.z_lo, spec)
    return total


def harmonic_period(V: PeriodicPotential) -> float:
    """Small-oscillation period 2 pi / sqrt(V'') at the global minimum."""
    crit = critical_points(V)
    if not crit.minima:
        raise DegeneratePotential("no minimum: harmonic period undefined")
    qmin = min(crit.minima, key=lambda t: t[1])[0]
    curv = float(V.eval(qmin, 2))
    if curv <= 0:
        raise DegeneratePotential("non-positive curvature at the minimum")
    return 2.0 * math.pi / math.sqrt(curv)


def dstar(
    V: PeriodicPotential, beta: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> DiffusionEstimate:
    """Small-friction limit of gamma * D_gamma:

        D* = L^2 * (2 / (beta Z_beta)) * int_{E0}^inf e^{-beta z} / S(z) dz

    with S from a rotational edge and Z_beta the graph partition function
    (computed here through the exactly equivalent phase-space Gibbs integral).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    graph = build_graph(V)
    rot = graph.rotational_edges[0]
    L = V.period
    Zb = math.sqrt(2.0 * math.pi / beta) * partition_scalars(V, beta, spec).Z

    def inv_S(zs):
        return np.array([1.0 / action_S(rot, z, spec) for z in np.atleast_1d(zs)])

    integral = quad_exp_tail(inv_S, beta, graph.E0, spec)
    value = 2.0 * L * L * integral / (beta * Zb)
    ci = 10.0 * spec.rel_tol * value
    return DiffusionEstimate(value=value, ci_half_width=ci, method="fw-formula", beta=beta)


def dstar_asymptotics(V: PeriodicPotential, beta: float) -> tuple[float, float]:
    """Closed-form limits of D*(beta).

    low_beta returns 2/beta, the leading graph estimate as stated; note the
    exact free-particle evaluation gives 1/beta, so this constant is reported
    but flagged in the docs rather than silently adjusted.  high_beta is
    2 L^2 e^{-beta (E0 - E_min)} / (beta T0 S(E0)), the barrier-controlled
    decay with the harmonic period T0 at the global minimum.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    crit = critical_points(V)
    if crit.degenerate_flag or not crit.maxima:
        raise DegeneratePotential("asymptotics undefined without a Morse well")
    graph = build_graph(V)
    T0 = harmonic_period(V)
    S_E0 = action_S(graph.rotational_edges[0], graph.E0)
    L = V.period
    low = 2.0 / beta
    high = 2.0 * L * L * math.exp(-beta * (crit.E0 - crit.E_min)) / (beta * T0 * S_E0)
    return (low, high)
