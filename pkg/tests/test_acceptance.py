"""Full-size acceptance runs. Each test records one PASS/FAIL line that is
echoed in the terminal summary; select them alone with ``-m acceptance``.

The sweeps go through the command line exactly as a user would run them.
"""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from cookiewalk.cli import main
from cookiewalk.config import load
from cookiewalk.environment import CookieStack, EnvironmentDistribution
from cookiewalk.oracle import (FiniteInstance, enumerate_paths, exact_expected_drift,
                               exact_hitting_prob)
from cookiewalk.simulate import simulate
from cookiewalk.stats import beatus_check, estimate_event_A, martingale_test
from cookiewalk.walk import StopRule

from conftest import ACCEPTANCE_LINES, FAIR, Z, z_stack

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 7
MC_REPLICAS = 10**5


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def three_configs():
    fair = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((), FAIR))
    delta15 = EnvironmentDistribution.degenerate(Z, 0.25, z_stack(3))
    bw = load(CONFIGS / "bw_erw_2d.json").distribution()
    return {"fair": fair, "delta1.5": delta15, "bw-erw": bw}


def hit_fraction(dist, right, left, seed):
    batch = simulate(dist, MC_REPLICAS, seed, StopRule(10**9, hit_right=right, hit_left=left))
    assert not np.any(batch.stopped("Budget"))
    return np.count_nonzero(batch.stopped("HitRight")) / MC_REPLICAS


def run_sweep(tmp_path, name):
    out = tmp_path / (name + ".csv")
    assert main(["sweep", "--family", str(CONFIGS / name), "--seed", str(SEED),
                 "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        return {float(r["t"]): r for r in csv.DictReader(fh)}


def test_criterion_1_gamblers_ruin():
    inst = FiniteInstance.uniform(Z, 0.25, CookieStack((), FAIR), 1, 2)
    p = exact_hitting_prob(inst)
    dist = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((), FAIR))
    p_hat = hit_fraction(dist, 2, -1, SEED)
    sigma = math.sqrt(p * (1 - p) / MC_REPLICAS)
    ok = abs(p - 1 / 3) <= 1e-10 and abs(p_hat - 1 / 3) <= 3 * sigma
    record(1, "gambler's ruin", ok, f"oracle {p!r}, monte carlo {p_hat} +- {3 * sigma:.4f}")


def test_criterion_2_oracle_bracketing():
    inst = FiniteInstance.uniform(Z, 0.25, z_stack(1), 2, 2)
    p = exact_hitting_prob(inst)
    right, left, live = enumerate_paths(inst, depth=60)
    dist = EnvironmentDistribution.degenerate(Z, 0.25, z_stack(1))
    p_hat = hit_fraction(dist, 2, -2, SEED)
    sigma = math.sqrt(p * (1 - p) / MC_REPLICAS)
    ok = right <= p <= right + live and live < 1e-6 and abs(p_hat - p) <= 3 * sigma
    record(2, "oracle bracketing", ok,
           f"exact {p!r} in [{right!r}, {right + live!r}], width {live:.2e}, "
           f"monte carlo {p_hat}")


def test_criterion_3_martingale():
    parts, ok = [], True
    for name, dist in three_configs().items():
        rows = martingale_test(dist, [100, 1000, 10000], 10**4, SEED, env_seed=11)
        ok &= all(r.passed for r in rows)
        parts.append(f"{name} max|z|={max(abs(r.z) for r in rows):.2f}")
    control = martingale_test(three_configs()["delta1.5"], [100, 1000, 10000], 10**4, SEED,
                              env_seed=11, misindex=True)
    control_failed = not all(r.passed for r in control)
    parts.append(f"misindexed control max|z|={max(abs(r.z) for r in control):.1f}")
    record(3, "martingale suite", ok and control_failed, "; ".join(parts))


def test_criterion_4_drift_bound():
    parts, ok = [], True
    for name, dist in three_configs().items():
        rows = beatus_check(dist, [1, 5, 10, 20], 10**4, SEED, budget=10**7, env_seed=11)
        ok &= all(r.passed for r in rows)
        worst = max(rows, key=lambda r: r.estimate.mean - 3 * r.estimate.std_error - r.bound)
        parts.append(f"{name} worst x={worst.x:g}: mean {worst.estimate.mean:.3f} "
                     f"vs {worst.bound:g}, unfinished {sum(r.unfinished for r in rows)}")
    # optional stopping on the exact chain: E[D] = k P_right - i P_left - start
    inst = FiniteInstance.uniform(Z, 0.25, z_stack(2), 3, 4)
    p = exact_hitting_prob(inst)
    gap = abs(exact_expected_drift(inst) - (4 * p - 3 * (1 - p)))
    ok &= gap <= 1e-9
    parts.append(f"identity gap {gap:.1e}")
    record(4, "drift bound at T_x", ok, "; ".join(parts))


def test_criterion_5_line_sweep(tmp_path):
    rows = run_sweep(tmp_path, "z_delta_family.json")
    want = {0.25: "Recurrent", 0.5: "Recurrent", 1.5: "Transient", 2.0: "Transient"}
    got = {t: rows[t]["verdict"] for t in want}
    record(5, "line phase check", got == want,
           ", ".join(f"{t:g}:{v}" for t, v in sorted(got.items())))


@pytest.mark.parametrize("name,want", [
    ("strip2_family.json", {0.2: "Recurrent", 0.8: "Transient"}),
    ("strip4_family.json", {0.1: "Recurrent", 0.5: "Transient"}),
])
def test_criterion_6_strip_threshold(tmp_path, name, want):
    rows = run_sweep(tmp_path, name)
    got = {t: rows[t]["verdict"] for t in want}
    osc = {t: float(rows[t]["oscillation_fraction"]) for t in want if want[t] == "Recurrent"}
    ok = got == want and all(v >= 0.95 for v in osc.values())
    record(6, f"strip threshold, {name.split('_')[0]}", ok,
           ", ".join(f"{t:g}:{v}" for t, v in sorted(got.items()))
           + "; +-50 reached " + ", ".join(f"{v:.2f}" for v in osc.values()))


def test_criterion_7_plane_escape():
    axis = estimate_event_A(load(CONFIGS / "bw_erw_2d.json").distribution(), 10**5, 1000,
                            100, SEED)
    diag = estimate_event_A(load(CONFIGS / "diag_2d.json").distribution(), 10**5, 1000,
                            100, SEED)
    ok = axis.mean >= 0.99 and diag.mean >= 0.95
    record(7, "escape in the plane", ok,
           f"axis {axis.mean:.3f}, diagonal {diag.mean:.3f}")


def test_criterion_8_jobs_reproducible(tmp_path):
    runs = [
        ["martingale-test", str(CONFIGS / "bw_erw_2d.json"), "--seed", str(SEED)],
        ["martingale-test", str(CONFIGS / "z_one_cookie.json"), "--seed", str(SEED),
         "--replicas", "10000", "--n-list", "100,1000,10000", "--env-seed", "11"],
        ["beatus-check", str(CONFIGS / "bw_erw_2d.json"), "--seed", str(SEED)],
        ["simulate", str(CONFIGS / "diag_2d.json"), "--seed", str(SEED)],
        ["sweep", "--family", str(CONFIGS / "z_delta_family.json"), "--seed", str(SEED),
         "--replicas", "200", "--horizon", "100000"],
    ]
    same = 0
    for j, argv in enumerate(runs):
        blobs = []
        for jobs in (1, 8):
            out = tmp_path / f"run{j}-{jobs}.csv"
            assert main(argv + ["--jobs", str(jobs), "--out", str(out)]) in (0, 1)
            blobs.append(out.read_bytes())
        same += blobs[0] == blobs[1]
    record(8, "jobs 1 vs 8 byte-identical", same == len(runs), f"{same}/{len(runs)} runs")
