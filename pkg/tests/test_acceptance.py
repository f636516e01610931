"""End-to-end acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (see conftest.py) before asserting.
Tolerances are the stated ones; nothing here is tuned to the observed outcome.
Run just this file with ``pytest -m acceptance -s``.
"""

import math
import time
import warnings
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from oracles import clip_cell, hull_contains_interior, polygon_circumradius, polygon_inradius
from poissonlab.convergence import consecutive_ratio_statistic, law_from_counts
from poissonlab.errors import DegeneratePositionWarning
from poissonlab.experiments import ExperimentConfig, run_experiment
from poissonlab.measure import Window, constant_density, normalize_to_window
from poissonlab.point_process import sample_poisson
from poissonlab.rng import replicate_rng
from poissonlab.tessellation import inradius_pair
from poissonlab.voronoi import alpha2, circumradius, estimate_p_k, inradius, is_cell_bounded

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@lru_cache(maxsize=None)
def run(name):
    return run_experiment(ExperimentConfig.load(CONFIGS / f"{name}.json"))


def checks(report):
    return {c["name"]: c for c in report["verdict"]["checks"]}


def summary(report):
    return report["results"][0]["summary"]


def test_criterion_1_characterization(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    law = law_from_counts(rng.poisson(2.0, 100_000), 2.0)
    dk = [consecutive_ratio_statistic(law, k=k) for k in range(1, 7)]
    z_null = max(abs(r.value) / r.std_error for r in dk)
    # duplicated atoms: every atom of a Poisson(1) pattern counted twice, mean still 2
    doubled = law_from_counts(2 * rng.poisson(1.0, 100_000), 2.0)
    z_dup = max(abs(r.value) / max(r.std_error, r.null_se)
                for r in (consecutive_ratio_statistic(doubled, k=k) for k in range(1, 7)))
    elapsed = time.perf_counter() - start
    ok = z_null <= 4 and z_dup > 4 and elapsed < 10
    verdict(1, ok, f"max|D_k|/se={z_null:.2f} (<=4), duplicated max z={z_dup:.1f} (>4), "
                   f"{elapsed:.2f}s (<10s)")


def test_criterion_2_void_and_intensity(verdict):
    dens = constant_density(1.0, [0.0, 0.0], [2.0, 1.0])
    n = 20_000
    empty = 0
    for i in range(n):
        cfg = sample_poisson(dens, 1.0, ([0.0, 0.0], [2.0, 1.0]), replicate_rng(102, i))
        empty += not np.any(cfg.points[:, 0] < 1.0)
    void = empty / n
    se = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / n)
    void_ok = abs(void - math.exp(-1)) <= 3 * se

    rep = run("inradius_square")
    rows = summary(rep)["intensity"]
    int_ok = all(r["pass"] for r in rows)
    detail = ", ".join(f"u={r['u']:g}: {r['mean']['value']:.4f}+-{r['mean']['se']:.4f} "
                       f"vs {r['target']['value']:.4f}" for r in rows)
    verdict(2, void_ok and int_ok, f"void {void:.4f} vs e^-1 (3se={3 * se:.4f}); {detail}")


def test_criterion_3_d1_constants(verdict):
    p, se = estimate_p_k(1, 2, 100_000, 103)
    a = alpha2(1, 0.5)
    ok = abs(p - 0.5) <= 0.01 and abs(p - 0.5) <= 3 * se and a == 1.0
    verdict(3, ok, f"p_2(d=1)={p:.4f}+-{se:.4f}, alpha2(1, 0.5)={a!r}")


def test_criterion_4_gumbel(verdict):
    rep = run("inradius_square")
    ks = summary(rep)["max_ks"]["value"]

    dens, win = normalize_to_window(constant_density(1.0, [-1, -1], [2, 2]),
                                    Window.box([0, 0], [1, 1]))
    identical = True
    for i in range(20):
        main, other = inradius_pair(dens, win, 1e4, replicate_rng(104, i), hat=True)
        identical &= np.array_equal(main.atoms, other.atoms)

    lin = run("inradius_hat_linear")
    ks_lin = summary(lin)["max_ks"]["value"]
    ok = ks <= 0.05 and identical and ks_lin <= 0.05
    verdict(4, ok, f"constant KS={ks:.4f}, hat atoms identical={identical}, "
                   f"linear hat KS={ks_lin:.4f} (<=0.05)")


def test_criterion_5_weibull(verdict):
    d1 = run("circumradius_d1")
    d2 = run("circumradius_d2")
    s1, s2 = summary(d1), summary(d2)
    ks1 = s1["min_ks"]["value"]
    ks2 = s2["min_ks_alpha2_band"]["value"]
    ok = (ks1 <= 0.05 and s1["alpha2"]["exact"] and ks2 <= 0.07
          and s1["dropped_unbounded"]["value"] == 0 and s2["dropped_unbounded"]["value"] == 0)
    verdict(5, ok, f"d=1 KS={ks1:.4f} (<=0.05); d=2 KS over alpha2 band={ks2:.4f} (<=0.07), "
                   f"alpha2={s2['alpha2']['value']:.4f}+-{s2['alpha2']['se']:.4f}")


def test_criterion_6_runs(verdict):
    iid = checks(run("runs_iid"))
    block_rep = run("runs_block")
    block = checks(block_rep)
    iid_ok = all(iid[n]["pass"] for n in ("gof", "dk_within_4se", "first_arrival_ks"))
    block_ok = block_rep["verdict"]["pass"] and block["hypothesis"]["pass"]
    verdict(6, iid_ok and block_ok,
            f"iid: gof={iid['gof']['pass']} dk_within_4se={iid['dk_within_4se']['pass']} "
            f"KS={iid['first_arrival_ks']['statistic']:.4f}; block: pass={block_ok} "
            f"hypothesis={block['hypothesis']['statistic']:.4f} (<0.05)")


def test_criterion_7_geometry(verdict):
    rng = np.random.default_rng(107)
    worst_c = worst_r = 0.0
    cells = 0
    while cells < 1000:
        pts = rng.random((30, 2))
        i = int(rng.integers(30))
        others = np.delete(pts, i, axis=0)
        if not hull_contains_interior(pts[i], others):
            continue
        cells += 1
        poly = clip_cell(pts[i], others)
        worst_c = max(worst_c, abs(circumradius(pts[i], pts) - polygon_circumradius(pts[i], poly)))
        big = clip_cell(pts[i], others, big=1e3)
        worst_r = max(worst_r, abs(inradius(pts[i], pts) - polygon_inradius(pts[i], big)))

    mismatches = part_b_violations = part_b_cases = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePositionWarning)
        for _ in range(10_000):
            n = int(rng.integers(4, 12))
            pts = rng.normal(size=(n, 2))
            bounded = is_cell_bounded(pts[0], pts)
            mismatches += bounded != hull_contains_interior(pts[0], pts[1:])
            if n == 4 and bounded:
                part_b_cases += 1
                part_b_violations += any(is_cell_bounded(pts[j], pts) for j in range(1, 4))
    ok = worst_c <= 1e-9 and worst_r <= 1e-9 and mismatches == 0 and part_b_violations == 0
    verdict(7, ok, f"max circumradius err={worst_c:.1e}, inradius err={worst_r:.1e}, "
                   f"boundedness mismatches={mismatches}/10000, part b violations="
                   f"{part_b_violations}/{part_b_cases}")


def test_criterion_8_sandwich(verdict):
    rep = run("sandwich_step")
    sw = summary(rep)["sandwich"]
    rows_ok = all(r["pass"] for r in sw["rows"])
    ok = rows_ok and sw["nested_every_replicate"] and sw["min_order_every_replicate"]
    detail = ", ".join(f"{r['side']} u={r['u']:g}: {r['tail']:.4f} vs {r['bound']:.4f}"
                       for r in sw["rows"])
    verdict(8, ok, f"{detail}; nested={sw['nested_every_replicate']}")


def test_criterion_9_null_calibration(verdict):
    rep = run("null_calibration")
    rate = summary(rep)["rejection_rate"]["value"]
    verdict(9, rate <= 0.03, f"rejection rate {rate:.3f} over 1000 trials (<=0.03)")
