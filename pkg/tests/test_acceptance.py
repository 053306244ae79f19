"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line with the measured numbers.

Exactly solvable cases, cross-route agreement, and the theory's
inequalities/limits anchor every tolerance; spectral solves are shared
through a session cache since several criteria probe the same operators.
"""

import math

import numpy as np

from langdiff.fw_graph import (
    action_S,
    build_graph,
    dstar,
    harmonic_period,
    period_T,
)
from langdiff.graph_diffusion import GraphSimulator, simulate_qstar, stationary_ks
from langdiff.langevin_mc import (
    McConfig,
    ScalingFamily,
    estimate_deff_msd,
    rescaled_process_check,
)
from langdiff.potential import PeriodicPotential
from langdiff.smoluchowski import dbar, dgamma_large_expansion
from langdiff.spectral import (
    GalerkinBasis,
    assemble,
    deff_spectral,
    default_basis,
    lp_norm_dp_phi,
    solve_cell,
    spectral_gap,
)

PEND = PeriodicPotential((1.0,))
ZERO = PeriodicPotential()

_CACHE: dict = {}


def solve_cached(V, beta, gamma, nh=None, nk=None, refine=True):
    basis = default_basis(beta, gamma)
    if nh or nk:
        basis = GalerkinBasis(nh or basis.n_hermite, nk or basis.n_fourier, beta)
    key = (V, beta, gamma, basis.n_hermite, basis.n_fourier, refine)
    if key not in _CACHE:
        op = assemble(V, beta, gamma, basis)
        sol = solve_cell(op, refine_check=refine)
        est = deff_spectral(sol, op)
        _CACHE[key] = (op, sol, est)
    return _CACHE[key]


def report(num, ok, detail):
    print(f"[acceptance] criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_free_particle_exactness():
    failures = []
    details = []
    for beta in (0.5, 1.0, 2.0):
        ds = dstar(ZERO, beta).value
        db = dbar(ZERO, beta).value
        if abs(ds - 1.0 / beta) > 1e-8:
            failures.append(f"dstar(beta={beta})={ds}")
        if db != 1.0 / beta:
            failures.append(f"dbar(beta={beta})={db}")
        for gamma in (0.1, 1.0, 10.0):
            _, _, est = solve_cached(ZERO, beta, gamma, nh=12, nk=2)
            exact = 1.0 / (beta * gamma)
            if abs(est.value - exact) > 1e-10 * exact:
                failures.append(f"spectral(beta={beta},gamma={gamma})={est.value}")
            # the horizon must also clear the gamma-independent transient
            # from the initial position spread (variance L^2/12)
            cfg = McConfig(ZERO, beta=beta, gamma=gamma, dt=0.05 / gamma,
                           t_end=max(100.0 / gamma, 40.0), n_paths=10_000,
                           seed=int(1000 * beta + 10 * gamma) + 202,
                           record_stride=50)
            _, mc, _ = estimate_deff_msd(cfg, workers=2)
            if abs(mc.value - exact) > mc.ci_half_width:
                failures.append(
                    f"mc(beta={beta},gamma={gamma})={mc.value:.4f}+-{mc.ci_half_width:.4f}"
                )
            details.append(f"b={beta},g={gamma}: mc off by "
                           f"{abs(mc.value - exact) / mc.ci_half_width:.2f} ci")
    ok = not failures
    report(1, ok, "; ".join(failures) if failures else
           "spectral exact to 1e-10, dstar 1e-8, dbar exact, MC within CI (9 configs)")
    assert ok, failures


def test_criterion_2_two_sided_bound():
    grid = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    rows = []
    bad = []
    for beta in (0.5, 1.0, 2.0):
        lo = dstar(PEND, beta).value
        hi = dbar(PEND, beta).value
        for gamma in grid:
            _, sol, est = solve_cached(PEND, beta, gamma)
            eps = 10.0 * sol.truncation_estimate * est.value
            lower, upper = lo / gamma - eps, hi / gamma + eps
            ok = lower <= est.value <= upper
            rows.append(ok)
            if not ok:
                bad.append(f"beta={beta},gamma={gamma}: D={est.value} not in "
                           f"[{lower}, {upper}]")
    ok = not bad
    report(2, ok, f"{sum(rows)}/{len(rows)} rows inside "
                  "dstar/gamma - eps <= D <= dbar/gamma + eps"
           + ("; " + "; ".join(bad) if bad else ""))
    assert ok, bad


def test_criterion_3_small_friction_limit():
    ds = dstar(PEND, 1.0).value
    devs = {}
    for gamma in (0.3, 0.1, 0.05):
        _, _, est = solve_cached(PEND, 1.0, gamma)
        devs[gamma] = abs(gamma * est.value / ds - 1.0)
    monotone = devs[0.3] > devs[0.1] > devs[0.05]
    within = devs[0.05] <= 0.10
    ok = monotone and within
    report(3, ok,
           f"|gammaD/dstar - 1| = {devs[0.3]:.3f}, {devs[0.1]:.3f}, {devs[0.05]:.3f} "
           f"at gamma = 0.3, 0.1, 0.05 (monotone: {monotone}; "
           f"<= 0.10 at 0.05: {within})")
    assert monotone, devs
    assert within, (
        f"gammaD(0.05)/dstar - 1 = {devs[0.05]:.3f} exceeds 0.10: the approach "
        "to the small-friction limit is O(sqrt(gamma)) with constant ~0.85, "
        "so 10% is first reached near gamma ~ 0.014"
    )


def test_criterion_4_large_friction_expansion():
    errs = {}
    for gamma in (10.0, 20.0):
        _, _, est = solve_cached(PEND, 1.0, gamma, nh=64, nk=32)
        expn = dgamma_large_expansion(PEND, 1.0, gamma)
        errs[gamma] = abs(gamma * est.value - gamma * expn)
    ratio = errs[10.0] / errs[20.0]
    ratio_ok = 8.0 <= ratio <= 40.0
    mag_ok = errs[10.0] <= 1e-3
    ok = ratio_ok and mag_ok
    report(4, ok,
           f"err(10)={errs[10.0]:.3e}, err(20)={errs[20.0]:.3e}, "
           f"ratio={ratio:.1f} (in [8,40]: {ratio_ok}; err(10)<=1e-3: {mag_ok})")
    assert ratio_ok, errs
    assert mag_ok, (
        f"err(10) = {errs[10.0]:.3e} > 1e-3: the omitted remainder is "
        "~470/gamma^4 in gamma*D units for this potential (verified against "
        "Monte Carlo), 30x larger than the criterion presumes"
    )


def test_criterion_5_graph_quantities():
    g = build_graph(PEND)
    well = g.well_edges[0]
    rot = g.rotational_edges[0]
    h = 1e-6
    worst = 0.0
    for edge, z_lo, z_hi in (
        (well, -1.0 + 1e-3, 1.0 - 1e-3),
        (rot, 1.0 + 1e-3, 9.0),
        (g.rotational_edges[1], 1.0 + 1e-3, 9.0),
    ):
        for z in np.linspace(z_lo + h, z_hi - h, 50):
            sp = (action_S(edge, z + h) - action_S(edge, z - h)) / (2 * h)
            worst = max(worst, abs(sp / period_T(edge, z) - 1.0))
    sprime_ok = worst <= 1e-4

    below = action_S(well, 1.0)
    above = sum(action_S(e, 1.0) for e in g.rotational_edges)
    continuity = abs(below - above)
    cont_ok = continuity <= 1e-6

    T0 = harmonic_period(PEND)
    S_E0 = action_S(rot, 1.0)
    t0_ok = abs(T0 - 1.0) <= 1e-8
    se0_ok = abs(S_E0 - 4.0 / math.pi) <= 1e-8

    ok = sprime_ok and cont_ok and t0_ok and se0_ok
    report(5, ok,
           f"max |S'/T - 1| = {worst:.2e} (150 points); S-mass continuity "
           f"{continuity:.2e}; T0-1 = {T0 - 1.0:.2e}; S(E0)-4/pi = "
           f"{S_E0 - 4.0 / math.pi:.2e}")
    assert ok


def test_criterion_6_graph_diffusion_cross_check():
    sim = GraphSimulator(PEND, 1.0)
    summ, est = simulate_qstar(
        PEND, 1.0, t_end=200.0, dt=0.02, n_paths=1000, seed=60_601,
        record_stride=50, workers=2, z_stride=10, sim=sim,
    )
    ref = dstar(PEND, 1.0).value
    dev = abs(est.value - ref) / ref
    d_ok = dev <= 0.10

    ks = stationary_ks(sim, summ["z_samples"])
    ks_ok = ks < 0.01

    stats = summ["vertex_stats"]
    hits = {eid: c for (en, eid), c in stats.items() if abs(en - 1.0) < 1e-9}
    total = sum(hits.values())
    split_ok = total >= 10_000
    g = sim.graph
    fracs = []
    for eid, expected in [(g.well_edges[0].id, 0.5)] + [
        (e.id, 0.25) for e in g.rotational_edges
    ]:
        frac = hits.get(eid, 0) / total
        fracs.append(frac)
        se = math.sqrt(expected * (1 - expected) / total)
        split_ok &= abs(frac - expected) <= 3 * se

    ok = d_ok and ks_ok and split_ok
    report(6, ok,
           f"D*={est.value:.4f}+-{est.ci_half_width:.4f} vs formula {ref:.4f} "
           f"({100 * dev:.1f}% off); KS={ks:.4f}; splits={fracs[0]:.3f}/"
           f"{fracs[1]:.3f}/{fracs[2]:.3f} over {total} hits")
    assert ok, (dev, ks, fracs)


def test_criterion_7_full_dynamics_small_friction():
    cfg = McConfig(PEND, beta=1.0, gamma=0.1, dt=0.01, t_end=500.0,
                   n_paths=2000, seed=70_701, record_stride=125)
    _, est, tau_01 = estimate_deff_msd(cfg, workers=2)
    ds = dstar(PEND, 1.0).value
    dev = abs(0.1 * est.value / ds - 1.0)
    d_ok = dev <= 0.15

    cfg1 = McConfig(PEND, beta=1.0, gamma=1.0, dt=0.01, t_end=50.0,
                    n_paths=2000, seed=70_702, record_stride=12)
    _, _, tau_1 = estimate_deff_msd(cfg1, workers=2)
    ratio = tau_01 / tau_1
    tau_ok = 5.0 <= ratio <= 20.0

    ok = d_ok and tau_ok
    report(7, ok,
           f"gamma*D_MC = {0.1 * est.value:.4f} vs dstar {ds:.4f} "
           f"({100 * dev:.1f}% off, tol 15%); tau ratio {tau_01:.1f}/{tau_1:.1f} "
           f"= {ratio:.1f} (in [5,20]: {tau_ok})")
    assert tau_ok, ratio
    assert d_ok, (
        f"gamma*D_MC is {100 * dev:.1f}% above dstar at gamma=0.1; the "
        "spectral route gives the same value (26% above), so the gap is the "
        "physical O(sqrt(gamma)) distance to the limit, not sampling error"
    )


def test_criterion_8_spectral_gap():
    gaps = {}
    for gamma in (0.1, 0.3, 1.0):
        op = assemble(PEND, 1.0, gamma, GalerkinBasis(128, 48, 1.0))
        gaps[gamma] = spectral_gap(op)
    low_ok = all(g >= 0.05 for g in gaps.values())
    spread = max(gaps.values()) / min(gaps.values())
    spread_ok = spread <= 3.0
    ok = low_ok and spread_ok
    report(8, ok,
           "gaps = " + ", ".join(f"{g}: {v:.4f}" for g, v in gaps.items())
           + f"; spread x{spread:.2f}")
    assert ok, gaps


def test_criterion_9_l4_diagnostic():
    norms = {}
    for gamma in (1.0, 0.3, 0.1):
        _, sol, _ = solve_cached(PEND, 1.0, gamma)
        norms[gamma] = lp_norm_dp_phi(sol)
    x = np.log([1.0 / g for g in norms])
    y = np.log(list(norms.values()))
    exponent = float(np.polyfit(x, y, 1)[0])
    ok = 0.0 <= exponent <= 0.3
    report(9, ok,
           "L4 norms = " + ", ".join(f"{g}: {v:.4f}" for g, v in norms.items())
           + f"; growth exponent {exponent:.3f} (target [0, 0.3])")
    assert ok, (norms, exponent)


def test_criterion_10_intermediate_scalings():
    ds = dstar(PEND, 1.0).value
    db = dbar(PEND, 1.0).value

    fam_s = ScalingFamily(alpha=1.0, gamma=0.2, variant="small")
    cfg_s = McConfig(PEND, beta=1.0, gamma=0.2, dt=0.01,
                     t_end=250.0 * fam_s.mu_gamma, n_paths=2000,
                     seed=101_001, record_stride=50)
    res_s = rescaled_process_check(fam_s, cfg_s, workers=2)
    dev_s = abs(res_s.estimate.value / ds - 1.0)
    small_ok = dev_s <= 0.20

    # the true gamma*D at gamma=10 sits 12.5% below dbar, so the estimator
    # noise must stay well under the remaining 2.5%: hence the path count
    fam_l = ScalingFamily(alpha=1.0, gamma=10.0, variant="large")
    cfg_l = McConfig(PEND, beta=1.0, gamma=10.0, dt=0.01,
                     t_end=1000.0 * fam_l.mu_gamma, n_paths=24_000,
                     seed=101_002, record_stride=250)
    res_l = rescaled_process_check(fam_l, cfg_l, workers=2)
    dev_l = abs(res_l.estimate.value / db - 1.0)
    large_ok = dev_l <= 0.15

    ok = small_ok and large_ok
    report(10, ok,
           f"small family slope/2 = {res_s.estimate.value:.4f} vs dstar {ds:.4f} "
           f"({100 * dev_s:.1f}%, tol 20%); large family slope/2 = "
           f"{res_l.estimate.value:.4f} vs dbar {db:.4f} ({100 * dev_l:.1f}%, tol 15%)")
    assert large_ok, dev_l
    assert small_ok, (
        f"small-family slope/2 = {res_s.estimate.value:.4f} correctly measures "
        "gamma*D at gamma=0.2 (spectral value 0.179), which is 39% above the "
        "small-friction limit; a 20% window around dstar is only reachable "
        "below gamma ~ 0.05 for this potential"
    )


def test_criterion_11_reproducibility(tmp_path):
    from langdiff.cli import main

    def run(cmd_args, name, workers):
        base = tmp_path / f"{name}_{workers}"
        rc = main(cmd_args + ["--workers", str(workers), "--output", str(base)])
        assert rc == 0
        return base.with_suffix(".csv").read_bytes()

    mc_args = ["mc", "--potential", "pendulum", "--beta", "1", "--gamma", "1",
               "--n-paths", "600", "--t-end", "40", "--dt", "0.01",
               "--seed", "11011"]
    gs_args = ["graph-sim", "--potential", "pendulum", "--beta", "1",
               "--t-end", "20", "--dt", "0.02", "--n-paths", "200",
               "--seed", "11012"]
    ok = True
    for args, name in ((mc_args, "mc"), (gs_args, "gs")):
        b1 = run(args, name, 1)
        b4 = run(args, name, 4)
        ok &= b1 == b4
    report(11, ok, "mc and graph-sim CSVs byte-identical for workers {1, 4}")
    assert ok
