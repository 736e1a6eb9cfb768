"""End-to-end acceptance checks; each test reports one pass/fail line for its criterion."""
import subprocess
import sys
import time

import numpy as np
import pytest

from chasepp import ratio as R
from chasepp.experiment import (
    DEFAULT_CAPACITIES,
    DEFAULT_ECONOMICS,
    default_params,
    synthesize_trace,
)
from chasepp.lower_bound import lower_bound
from chasepp.model import SystemParams, Trace, external_cost
from chasepp.multigen import GeneratorFleet, joint_brute_force, schedule_fleet
from chasepp.online import NoiseModel, run_online
from chasepp.segments import brute_force_optimal, dp_optimal, offline_optimal

from conftest import random_params, random_trace

FLEET = GeneratorFleet.from_capacities(default_params(), DEFAULT_CAPACITIES)
ONLINE = ("chase", "chaselk_plus", "chasepp_plus", "rhc")


def _offline_instances():
    rng = np.random.default_rng(20240601)
    out = []
    for _ in range(200):
        p = random_params(rng, beta_range=(0.0, 40.0))
        out.append((p, random_trace(rng, p, int(rng.integers(1, 13)))))
    return out


@pytest.mark.criterion(1, "offline optimum equals enumeration")
def test_offline_matches_enumeration(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    for p, tr in _offline_instances():
        got = offline_optimal(tr, p).total_cost
        ref = brute_force_optimal(tr, p).total_cost
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-12))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"200 instances, max rel err {worst:.1e}, {elapsed:.1f} s")
    assert worst <= 1e-9
    assert elapsed < 30


@pytest.mark.criterion(2, "dynamic program and layered fleet match enumeration")
def test_dp_and_fleet_match_enumeration(record_property):
    worst = 0.0
    for p, tr in _offline_instances():
        got = dp_optimal(tr, p).total_cost
        ref = brute_force_optimal(tr, p).total_cost
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-12))
    rng = np.random.default_rng(77)
    worst_fleet = 0.0
    for _ in range(100):
        p = random_params(rng, beta_range=(0.0, 40.0))
        fleet = GeneratorFleet.from_capacities(p, rng.uniform(0.3, 1.0, 2) * p.L)
        tr = random_trace(rng, p, int(rng.integers(1, 9)))
        tr = Trace.from_arrays(*(x * 1.5 for x in tr.arrays()[:2]), tr.arrays()[2])
        ref, _ = joint_brute_force(tr, fleet)
        got = schedule_fleet(tr, fleet).total_cost
        worst_fleet = max(worst_fleet, abs(got - ref) / max(abs(ref), 1e-12))
    record_property("detail", f"dp max rel err {worst:.1e}; fleet (N=2) max rel err {worst_fleet:.1e}")
    assert worst <= 1e-9
    assert worst_fleet <= 1e-9


def _bound_trace(rng, p, T):
    """Half independent uniform slots, half blocky inputs that hold levels for a few slots."""
    if rng.random() < 0.5:
        return random_trace(rng, p, T)
    n = T // 4 + 1
    a = np.repeat(rng.uniform(0, 1.5 * p.L, n), 4)[:T] * rng.uniform(0.8, 1.2, T)
    h = p.eta * a * rng.uniform(0, 1.2, T)
    price = np.repeat(rng.uniform(p.p_min, p.p_max, n), 4)[:T]
    return Trace.from_arrays(a, h, price)


@pytest.mark.criterion(3, "empirical ratios stay within the closed-form bounds")
def test_ratio_bounds_hold(record_property):
    rng = np.random.default_rng(2024)
    bounds = {
        "chase": lambda w, p: R.cr_chase(p),
        "chaselk": R.cr_chaselk,
        "chasepp": R.cr_chasepp,
        "chasepp_plus": R.cr_chasepp_plus,
    }
    margin = {k: -np.inf for k in bounds}
    for _ in range(1000):
        p = random_params(rng, beta_range=(1.0, 60.0))
        w = int(rng.integers(0, 7))
        tr = _bound_trace(rng, p, 168)
        opt = offline_optimal(tr, p).total_cost
        for name, bound in bounds.items():
            r = run_online(name, tr, w, params=p).total_cost / opt
            margin[name] = max(margin[name], r - bound(w, p))
    record_property("detail", "1000 traces each; worst ratio - bound: " + ", ".join(f"{k} {v:+.4f}" for k, v in margin.items()))
    assert all(v <= 0.02 for v in margin.values())


@pytest.mark.criterion(4, "adaptive adversary drives CHASE to its bound")
def test_adversary_is_sharp(record_property):
    p = SystemParams(beta=1000.0, c_m=10.0, c_o=1.0, L=20.0, eta=1.0, c_g=0.5, p_min=0.0, p_max=2.0)
    T = int(50 * p.beta / p.c_m)
    tr = R.adversary_chase("chase", p, T)
    ratio = run_online("chase", tr, 0, params=p).total_cost / offline_optimal(tr, p).total_cost
    target = 3 - 2 * R.alpha(p)
    record_property("detail", f"T={T}, ratio {ratio:.4f} vs 3-2a {target:.4f} ({ratio / target:.3f})")
    assert ratio >= 0.95 * target


def _alpha_params(a, L=5000.0):
    e = DEFAULT_ECONOMICS
    p_max = (e["c_o"] + e["c_m"] / L) / a - e["eta"] * e["c_g"]
    return default_params(L, p_max=p_max)


@pytest.mark.criterion(5, "threshold and ratio formula structure")
def test_threshold_structure(record_property):
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = random_params(rng, beta_range=(1.0, 200.0))
        w = int(rng.integers(1, 30))
        lams = np.linspace(0, p.beta, 400)
        on = np.array([R.r_on(x, w, p) for x in lams])
        off = np.array([R.r_off(x, w, p) for x in lams])
        assert np.all(np.diff(on) <= 1e-12)
        assert np.all(np.diff(off) >= -1e-12)

    prof = default_params()
    fracs = [R.optimal_threshold(w, prof).lambda_star / prof.beta for w in range(0, 101)]
    assert all(b >= a - 1e-9 for a, b in zip(fracs, fracs[1:]))
    assert fracs[100] > 0.9

    best = (0.0, None, None)
    for i in range(1, 10):
        a = i / 10
        p = _alpha_params(a)
        assert R.alpha(p) == pytest.approx(a)
        assert R.g_chasepp(a, 0, p) == a
        for w in range(0, 51):
            g = R.g_chasepp(a, w, p)
            f = R.f_chaselk(a, w, p)
            assert g >= f - 1e-12
            gain = ((3 - 2 * f) - (3 - 2 * g)) / (3 - 2 * f)
            if gain > best[0]:
                best = (gain, a, w)
    record_property(
        "detail",
        f"lambda*/beta {fracs[10]:.3f} at w=10, {fracs[100]:.3f} at w=100; "
        f"max improvement {best[0]:.1%} at alpha={best[1]}, w={best[2]}",
    )
    assert 0.10 <= best[0] <= 0.25


@pytest.mark.criterion(6, "lower bound sits under the upper bound and tracks it")
def test_lower_bound_grid(record_property):
    p = default_params()
    grid = [2.0**-10, 1, 2, 3, 5, 8, 10, 15]
    t0 = time.perf_counter()
    res = [lower_bound(w, p) for w in grid]
    elapsed = time.perf_counter() - t0
    ups = [R.cr_chasepp(w, p) for w in grid]
    gap3 = (ups[3] - res[3].cr_lower) / res[3].cr_lower
    near0 = abs(res[0].cr_lower - (3 - 2 * R.alpha(p)))
    record_property(
        "detail",
        f"lower {', '.join(f'{r.cr_lower:.4f}' for r in res)}; "
        f"|lower(2^-10) - (3-2a)| {near0:.1e}; gap at w=3 {gap3:.1%}; {elapsed:.0f} s",
    )
    assert all(r.cr_lower <= u + 1e-9 for r, u in zip(res, ups))
    assert near0 <= 1e-3
    d1 = [r.delta1_star for r in res]
    d2 = [r.delta2_star for r in res]
    assert all(b <= a + 1e-6 for a, b in zip(d1, d1[1:]))
    assert all(b <= a + 1e-6 for a, b in zip(d2, d2[1:]))
    assert 0.05 <= gap3 <= 0.15
    assert elapsed < 300


def _reduction(trace, fleet, mode, w, noise=None):
    kw = {} if noise is None else {"noise": noise}
    bench = external_cost(trace, fleet.units[0])
    return (bench - schedule_fleet(trace, fleet, mode, w, **kw).total_cost) / bench


@pytest.mark.criterion(7, "cost-reduction curves have the expected shape")
def test_experiment_shape(record_property):
    notes = []
    unit = default_params()
    n = sum(DEFAULT_CAPACITIES) / unit.L
    for kind in ("diurnal", "random"):
        tr = synthesize_trace(kind, unit, 168, seed=0, n_units=n)
        opt = _reduction(tr, FLEET, "offline", 0)
        bench = external_cost(tr, unit)
        opt_cost = bench * (1 - opt)
        for w in range(0, 16):
            red = {m: _reduction(tr, FLEET, m, w) for m in ONLINE}
            assert opt + 1e-12 >= red["chasepp_plus"] >= red["chase"] - 1e-12, (kind, w)
            if w <= 1:
                others = [red[m] for m in ONLINE if m != "rhc"]
                assert red["rhc"] < min(others), (kind, w)
        # window users close in on the optimum; CHASE ignores the window
        for m in ("chaselk_plus", "chasepp_plus", "rhc"):
            cost = bench * (1 - red[m])
            assert cost <= 1.01 * opt_cost, (kind, m)
        notes.append(f"{kind}: w=15 pp+ ratio {bench * (1 - red['chasepp_plus']) / opt_cost:.4f}")

    single = GeneratorFleet((unit,))
    for seed in range(30):
        tr = synthesize_trace("fig11a", unit, 168, seed)
        for w in range(0, 16):
            lk = run_online("chaselk_plus", tr, w, params=unit)
            pp = run_online("chasepp_plus", tr, w, params=unit)
            assert lk.y == pp.y, (seed, w)
    for seed in range(30):
        tr = synthesize_trace("fig11b", unit, 168, seed)
        for w in range(1, 5):
            lk = schedule_fleet(tr, single, "chaselk_plus", w).total_cost
            pp = schedule_fleet(tr, single, "chasepp_plus", w).total_cost
            assert pp < lk, (seed, w)
    notes.append("fig11a identical over 30 seeds; fig11b pp+ cheaper at w=1..4 over 30 seeds")
    record_property("detail", "; ".join(notes))


@pytest.mark.criterion(8, "prediction noise hurts CHASEpp+ less than CHASElk+")
def test_noise_robustness(record_property):
    unit = default_params()
    n = sum(DEFAULT_CAPACITIES) / unit.L
    drops = {}
    for w in (1, 3):
        for m in ("chaselk_plus", "chasepp_plus"):
            clean, noisy = [], []
            for seed in range(100):
                tr = synthesize_trace("diurnal", unit, 168, seed=seed, n_units=n)
                clean.append(_reduction(tr, FLEET, m, w))
                noisy.append(_reduction(tr, FLEET, m, w, NoiseModel("gaussian", 1.0, 1.0, seed=seed)))
            drops[(m, w)] = float(np.mean(clean) - np.mean(noisy))
    record_property("detail", ", ".join(f"{m} w={w} drop {d * 100:.2f} pp" for (m, w), d in drops.items()))
    assert drops[("chasepp_plus", 3)] < drops[("chaselk_plus", 3)]
    assert drops[("chaselk_plus", 1)] < 0.05 and drops[("chasepp_plus", 1)] < 0.05


@pytest.mark.criterion(9, "command-line runs are byte-reproducible")
def test_cli_determinism(tmp_path, record_property):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(
        "algorithms: [chase, chaselk_plus, chasepp_plus, rhc]\n"
        "windows: [0, 2, 4]\nseeds: [1, 2]\nnoise_kind: hyperbolic\nnoise_std: [0.0, 0.4]\n"
        "horizon: 48\nsynthetic: random\n"
    )
    outputs = []
    for fmt in ("csv", "json"):
        runs = []
        for i in range(2):
            out = tmp_path / f"r{i}.{fmt}"
            proc = subprocess.run(
                [sys.executable, "-m", "chasepp.cli", "--config", str(cfg), "--format", fmt, "--out", str(out)],
                capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr
            runs.append(out.read_bytes())
        assert runs[0] == runs[1]
        outputs.append(len(runs[0]))
    record_property("detail", f"csv {outputs[0]} bytes, json {outputs[1]} bytes, identical across runs")
