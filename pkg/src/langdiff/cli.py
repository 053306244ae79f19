"""Command-line entry point exposing every computation with CSV + JSON
outputs (and optional rendered figures next to the delimited files).

Exit codes: 0 success, 2 usage/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LangdiffError, UsageError
from .estimate import DiffusionEstimate
from .fw_graph import (
    action_S,
    build_graph,
    dstar,
    dstar_asymptotics,
    graph_partition,
    harmonic_period,
    period_T,
)
from .graph_diffusion import GraphSimulator, simulate_qstar, stationary_ks
from .langevin_mc import McConfig, estimate_deff_msd, omega_max
from .potential import load_potential
from .report import render_figure, write_csv, write_json
from .smoluchowski import dbar, dgamma_large_expansion, overdamped_summary
from .spectral import (
    GalerkinBasis,
    assemble,
    default_basis,
    deff_spectral,
    lp_norm_dp_phi,
    solve_cell,
    spectral_gap,
)

__all__ = ["main", "run"]


def _parse_gammas(tokens: list[str]) -> list[float]:
    """Comma lists, repeats, and lo:hi:n[:log] ranges."""
    out: list[float] = []
    for tok in tokens:
        for part in tok.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                bits = part.split(":")
                if len(bits) not in (3, 4):
                    raise UsageError(f"bad gamma range {part!r}; use lo:hi:n[:log]")
                lo, hi, n = float(bits[0]), float(bits[1]), int(bits[2])
                if len(bits) == 4 and bits[3] == "log":
                    out.extend(np.geomspace(lo, hi, n).tolist())
                elif len(bits) == 4:
                    raise UsageError(f"bad range modifier {bits[3]!r}")
                else:
                    out.extend(np.linspace(lo, hi, n).tolist())
            else:
                out.append(float(part))
    if not out:
        raise UsageError("no gamma values given")
    if any(g <= 0 for g in out):
        raise UsageError("gamma values must be positive")
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="langdiff",
        description="Effective diffusivity of Langevin dynamics in periodic potentials",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, gamma=True):
        p.add_argument("--potential", default="pendulum",
                       help="preset name, JSON text, or JSON file path")
        p.add_argument("--beta", type=float, default=1.0)
        if gamma:
            p.add_argument("--gamma", action="append", default=None,
                           help="value, comma list, or lo:hi:n[:log]; repeatable")
        p.add_argument("--config", default=None,
                       help="JSON file with defaults; flags override")
        p.add_argument("--output", default=None,
                       help="output base path (writes BASE.csv / BASE.json)")
        p.add_argument("--seed", type=int, default=20177)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--plot", action="store_true",
                       help="render a figure next to the CSV")

    p = sub.add_parser("deff", help="spectral cell-problem diffusivity")
    common(p)
    p.add_argument("--nh", type=int, default=None, help="Hermite levels")
    p.add_argument("--nk", type=int, default=None, help="Fourier modes")
    p.add_argument("--no-gap", action="store_true", help="skip the gap solve")
    p.add_argument("--no-l4", action="store_true", help="skip the L4 norm")

    p = sub.add_parser("mc", help="ensemble MSD diffusivity")
    common(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--n-paths", type=int, default=2000)
    p.add_argument("--record-stride", type=int, default=None)

    p = sub.add_parser("fw", help="energy-graph quantities and small-friction limit")
    common(p, gamma=False)
    p.add_argument("--n-z", type=int, default=50, help="table rows per edge")

    p = sub.add_parser("smol", help="overdamped quantities")
    common(p)

    p = sub.add_parser("graph-sim", help="simulate the limiting graph diffusion")
    common(p, gamma=False)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--record-stride", type=int, default=50)
    p.add_argument("--z-stride", type=int, default=0,
                   help="collect energy samples every N steps (0 = off)")

    p = sub.add_parser("bounds-check", help="verify the two-sided bound rowwise")
    common(p)
    p.add_argument("--nh", type=int, default=None)
    p.add_argument("--nk", type=int, default=None)

    p = sub.add_parser("gap", help="spectral gap of the kinetic operator")
    common(p)
    p.add_argument("--nh", type=int, default=128)
    p.add_argument("--nk", type=int, default=48)

    p = sub.add_parser("sweep", help="friction sweep with all routes")
    common(p)
    p.add_argument("--nh", type=int, default=None)
    p.add_argument("--nk", type=int, default=None)
    p.add_argument("--mc", action="store_true", help="include Monte Carlo per row")
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    return ap


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Config-file values fill in flags the user left at their defaults."""
    if not args.config:
        return
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    defaults = {}
    for action in parser._subparsers._group_actions[0].choices[args.command]._actions:
        if action.dest != "help":
            defaults[action.dest] = action.default
    for key, val in doc.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, dest) == defaults[dest]:
            setattr(args, dest, val)


def _resolved_config(args: argparse.Namespace, extra: dict | None = None) -> dict:
    skip = {"command", "config", "plot"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    if extra:
        cfg.update(extra)
    for k, v in list(cfg.items()):
        if isinstance(v, Path):
            cfg[k] = str(v)
    return cfg


def _out_base(args) -> Path:
    if args.output:
        return Path(args.output)
    return Path(args.command.replace("-", "_"))


def _est_dict(e: DiffusionEstimate) -> dict:
    d = e.to_dict()
    return d


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get("LANGDIFF_WORKERS", "1")))


# ---------------------------------------------------------------------------
# subcommand implementations


def _solve_one(V, beta, gamma, nh, nk, want_gap, want_l4):
    basis = default_basis(beta, gamma)
    if nh or nk:
        basis = GalerkinBasis(nh or basis.n_hermite, nk or basis.n_fourier, beta)
    op = assemble(V, beta, gamma, basis)
    sol = solve_cell(op)
    est = deff_spectral(sol, op)
    row = {
        "gamma": gamma,
        "beta": beta,
        "D": est.value,
        "gammaD": gamma * est.value,
        "residual": sol.residual_norm,
        "truncation_estimate": sol.truncation_estimate,
    }
    if want_gap:
        row["gap"] = spectral_gap(op)
    if want_l4:
        row["l4_norm"] = lp_norm_dp_phi(sol)
    return row


def _cmd_deff(args) -> int:
    V = load_potential(args.potential)
    gammas = _parse_gammas(args.gamma or ["1.0"])
    rows = [
        _solve_one(V, args.beta, g, args.nh, args.nk,
                   not args.no_gap, not args.no_l4)
        for g in gammas
    ]
    base = _out_base(args)
    cols = ["gamma", "beta", "D", "gammaD", "residual", "truncation_estimate",
            "gap", "l4_norm"]
    write_csv(base.with_suffix(".csv"), cols,
              [[r.get(c) for c in cols] for r in rows])
    write_json(base.with_suffix(".json"),
               {"config": _resolved_config(args), "seed": args.seed, "rows": rows},
               "deff")
    return 0


def _cmd_mc(args) -> int:
    V = load_potential(args.potential)
    gammas = _parse_gammas(args.gamma or ["1.0"])
    if len(gammas) != 1:
        raise UsageError("mc takes a single gamma")
    gamma = gammas[0]
    w = omega_max(V)
    dt = args.dt or 0.5 * 0.1 * min(1.0 / gamma, 1.0 / w if w > 0 else math.inf)
    t_end = args.t_end or 40.0 / gamma
    stride = args.record_stride or max(1, int(round(t_end / dt / 400)))
    cfg = McConfig(
        potential=V, beta=args.beta, gamma=gamma, dt=dt, t_end=t_end,
        n_paths=args.n_paths, seed=args.seed, record_stride=stride,
    )
    ens, est, tau = estimate_deff_msd(cfg, workers=_workers(args))
    base = _out_base(args)
    pos = ens.times > 0
    write_csv(
        base.with_suffix(".csv"),
        ["t", "msd", "msd_over_2t", "p_var"],
        [
            [t, m, m / (2 * t) if t > 0 else "", pv]
            for t, m, pv in zip(ens.times, ens.msd, ens.p_variance)
        ],
    )
    write_json(
        base.with_suffix(".json"),
        {
            "config": _resolved_config(args, {"dt": dt, "t_end": t_end,
                                              "record_stride": stride}),
            "seed": args.seed,
            "D": est.value,
            "ci": est.ci_half_width,
            "tau_diff": tau,
            "gamma": gamma,
            "beta": args.beta,
            "n_paths": cfg.n_paths,
            "dt": dt,
        },
        "mc",
    )
    if args.plot:
        render_figure("mc", base.with_suffix(".png"), {
            "t": ens.times[pos].tolist(),
            "msd_over_2t": (ens.msd[pos] / (2 * ens.times[pos])).tolist(),
            "D": est.value,
        })
    return 0


def _cmd_fw(args) -> int:
    V = load_potential(args.potential)
    beta = args.beta
    graph = build_graph(V)
    rows = []
    for e in graph.edges:
        z_hi = e.z_hi if e.z_hi < math.inf else graph.E0 + 10.0 / beta
        span = z_hi - e.z_lo
        zs = np.linspace(e.z_lo + 1e-3 * span, z_hi - 1e-3 * span, args.n_z)
        for z in zs:
            rows.append([z, e.id, period_T(e, z), action_S(e, z)])
    est = dstar(V, beta)
    if V.is_zero:
        # no well: harmonic period and barrier asymptote are conventionally 0
        T0, low, high = 0.0, 2.0 / beta, 0.0
    else:
        T0 = harmonic_period(V)
        low, high = dstar_asymptotics(V, beta)
    rot = graph.rotational_edges[0]
    base = _out_base(args)
    write_csv(base.with_suffix(".csv"), ["z", "edge_id", "T", "S"], rows)
    doc = {
        "config": _resolved_config(args),
        "seed": args.seed,
        "E0": graph.E0,
        "T0": T0,
        "S_E0": action_S(rot, graph.E0),
        "Z_beta": graph_partition(V, beta),
        "dstar": est.value,
        "dstar_low_beta": low,
        "dstar_high_beta": high,
    }
    write_json(base.with_suffix(".json"), doc, "fw")
    if args.plot:
        render_figure("fw", base.with_suffix(".png"), {
            "z": [r[0] for r in rows],
            "edge_id": [r[1] for r in rows],
            "T": [r[2] for r in rows],
            "S": [r[3] for r in rows],
        })
    return 0


def _cmd_smol(args) -> int:
    V = load_potential(args.potential)
    gammas = _parse_gammas(args.gamma or ["10.0"])
    doc = overdamped_summary(V, args.beta, tuple(gammas))
    doc.update({"config": _resolved_config(args), "seed": args.seed})
    base = _out_base(args)
    write_csv(
        base.with_suffix(".csv"),
        ["gamma", "expansion"],
        [[e["gamma"], e["value"]] for e in doc["expansion"]],
    )
    write_json(base.with_suffix(".json"), doc, "smol")
    return 0


def _cmd_graph_sim(args) -> int:
    V = load_potential(args.potential)
    sim = GraphSimulator(V, args.beta)
    summ, est = simulate_qstar(
        V, args.beta, t_end=args.t_end, dt=args.dt, n_paths=args.n_paths,
        seed=args.seed, record_stride=args.record_stride,
        workers=_workers(args), z_stride=args.z_stride, sim=sim,
    )
    base = _out_base(args)
    write_csv(
        base.with_suffix(".csv"),
        ["t", "mean_qstar", "var_qstar"],
        list(zip(summ["times"], summ["mean_qstar"], summ["var_qstar"])),
    )
    doc = {
        "config": _resolved_config(args),
        "seed": args.seed,
        "estimate": _est_dict(est),
        "n_paths": args.n_paths,
        "dt": args.dt,
        "t_end": args.t_end,
    }
    if args.z_stride:
        doc["stationary_ks"] = stationary_ks(sim, summ["z_samples"])
    write_json(base.with_suffix(".json"), doc, "graph-sim")
    if args.plot:
        render_figure("graph-sim", base.with_suffix(".png"), {
            "t": summ["times"].tolist(),
            "var_qstar": summ["var_qstar"].tolist(),
            "D": est.value,
        })
    return 0


def _cmd_bounds_check(args) -> int:
    V = load_potential(args.potential)
    beta = args.beta
    gammas = _parse_gammas(args.gamma or ["0.1,0.5,1,5,10"])
    lo = dstar(V, beta).value
    hi = dbar(V, beta).value
    rows = []
    all_ok = True
    for g in gammas:
        r = _solve_one(V, beta, g, args.nh, args.nk, False, False)
        eps = 10.0 * r["truncation_estimate"] * r["D"]
        lower, upper = lo / g, hi / g
        ok = (lower - eps) <= r["D"] <= (upper + eps)
        all_ok &= ok
        rows.append({"gamma": g, "lower": lower, "D": r["D"], "upper": upper,
                     "ok": bool(ok)})
    base = _out_base(args)
    write_csv(base.with_suffix(".csv"), ["gamma", "lower", "D", "upper", "ok"],
              [[r["gamma"], r["lower"], r["D"], r["upper"], r["ok"]] for r in rows])
    write_json(base.with_suffix(".json"),
               {"config": _resolved_config(args), "seed": args.seed,
                "rows": rows, "all_ok": bool(all_ok)},
               "bounds-check")
    return 0 if all_ok else 3


def _cmd_gap(args) -> int:
    V = load_potential(args.potential)
    gammas = _parse_gammas(args.gamma or ["0.1,0.3,1"])
    rows = []
    for g in gammas:
        basis = GalerkinBasis(args.nh, args.nk, args.beta)
        op = assemble(V, args.beta, g, basis)
        rows.append({"gamma": g, "gap": spectral_gap(op)})
    base = _out_base(args)
    write_csv(base.with_suffix(".csv"), ["gamma", "gap"],
              [[r["gamma"], r["gap"]] for r in rows])
    write_json(base.with_suffix(".json"),
               {"config": _resolved_config(args), "seed": args.seed, "rows": rows},
               "gap")
    if args.plot:
        render_figure("gap", base.with_suffix(".png"), {
            "gamma": [r["gamma"] for r in rows],
            "gap": [r["gap"] for r in rows],
        })
    return 0


def _cmd_sweep(args) -> int:
    V = load_potential(args.potential)
    beta = args.beta
    gammas = _parse_gammas(args.gamma or ["0.05:20:9:log"])
    d_lo = dstar(V, beta).value
    d_hi = dbar(V, beta).value
    rows = []
    n_failed = 0
    for g in gammas:
        row = {"gamma": g, "dstar": d_lo, "dbar": d_hi,
               "expansion": dgamma_large_expansion(V, beta, g)}
        try:
            r = _solve_one(V, beta, g, args.nh, args.nk, False, False)
            row["gammaD_spectral"] = g * r["D"]
            if args.mc:
                w = omega_max(V)
                dt = args.dt or 0.5 * 0.1 * min(1.0 / g, 1.0 / w if w > 0 else math.inf)
                t_end = args.t_end or 40.0 / g
                stride = max(1, int(round(t_end / dt / 400)))
                cfg = McConfig(potential=V, beta=beta, gamma=g, dt=dt,
                               t_end=t_end, n_paths=args.n_paths,
                               seed=args.seed, record_stride=stride)
                _, est, _ = estimate_deff_msd(cfg, workers=_workers(args))
                row["gammaD_mc"] = g * est.value
                row["gammaD_ci"] = g * est.ci_half_width
        except LangdiffError as exc:
            row["error"] = str(exc)
            n_failed += 1
        rows.append(row)
    base = _out_base(args)
    cols = ["gamma", "gammaD_spectral", "gammaD_mc", "gammaD_ci", "dstar",
            "dbar", "expansion", "error"]
    write_csv(base.with_suffix(".csv"), cols,
              [[r.get(c) for c in cols] for r in rows])
    write_json(base.with_suffix(".json"),
               {"config": _resolved_config(args), "seed": args.seed,
                "rows": rows, "n_failed": n_failed},
               "sweep")
    if args.plot:
        render_figure("sweep", base.with_suffix(".png"), {
            "gamma": [r["gamma"] for r in rows],
            "gammaD_spectral": [r.get("gammaD_spectral") for r in rows],
            "gammaD_mc": [r.get("gammaD_mc") for r in rows],
            "gammaD_ci": [r.get("gammaD_ci") for r in rows],
            "dstar": d_lo,
            "dbar": d_hi,
            "expansion": [r["expansion"] for r in rows],
        })
    return 3 if n_failed else 0


_COMMANDS = {
    "deff": _cmd_deff,
    "mc": _cmd_mc,
    "fw": _cmd_fw,
    "smol": _cmd_smol,
    "graph-sim": _cmd_graph_sim,
    "bounds-check": _cmd_bounds_check,
    "gap": _cmd_gap,
    "sweep": _cmd_sweep,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, parser)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LangdiffError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv: list[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
