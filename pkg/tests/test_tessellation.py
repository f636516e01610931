import logging
import math

import numpy as np
import pytest

from poissonlab.convergence import IntervalRing
from poissonlab.errors import ConfigError, MarginTooSmallError
from poissonlab.measure import (
    Window,
    constant_density,
    linear_density,
    normalize_to_window,
    quadratic_density,
    step_density,
    piecewise_linear_density,
)
from poissonlab.point_process import PointConfig
from poissonlab.rescaled import RescaledSample
from poissonlab.rng import replicate_rng
from poissonlab.tessellation import (
    circumradius_atoms,
    circumradius_process,
    coupled_min_statistics,
    extreme_statistics,
    inradius_atoms,
    inradius_pair,
    inradius_process,
    intensity_estimate,
    scale_factor,
)
from poissonlab.voronoi import circumradius


def unit_square():
    dens = constant_density(1.0, [-1, -1], [2, 2])
    return normalize_to_window(dens, Window.box([0, 0], [1, 1]))


def test_inradius_atom_formula_constant_density():
    dens, win = unit_square()
    pts = np.array([[0.5, 0.5], [0.5, 0.52], [0.9, 0.9], [0.1, 0.1]])
    cfg = PointConfig(pts, [-1, -1], [2, 2])
    t = 1e4
    atoms, nn = inradius_atoms(cfg, dens, win, t)
    r = 0.01  # nearest neighbour of the first nucleus at distance 2r
    assert atoms[0] == pytest.approx(4 * math.pi * t * r * r - math.log(t))
    hat, _ = inradius_atoms(cfg, dens, win, t, "two_pow_d_c")
    assert np.allclose(hat, atoms)


def test_inradius_variants_agree_for_linear_density():
    # a linear density integrates over a ball to f(center) * volume
    dens = linear_density(1.0, 1.0, [-0.5, -0.5], [2, 2])
    dens, win = normalize_to_window(dens, Window.box([0, 0], [1, 1]))
    main, other = inradius_pair(dens, win, 1e3, 3, hat=True)
    assert np.allclose(main.atoms, other.atoms, rtol=0, atol=1e-9)


def test_inradius_variants_differ_for_curved_density():
    dens = quadratic_density(1.0, 2.0, [0.5, 0.5], [-0.5, -0.5], [1.5, 1.5])
    dens, win = normalize_to_window(dens, Window.box([0, 0], [1, 1]))
    main, other = inradius_pair(dens, win, 1e3, 3, hat=True)
    assert len(main) == len(other)
    assert np.allclose(main.atoms, other.atoms, atol=1e-2)
    assert not np.allclose(main.atoms, other.atoms, rtol=0, atol=1e-9)


def test_inradius_margin_too_small():
    dens, win = unit_square()
    pts = np.array([[0.5, 0.5], [0.5, 0.9]])
    cfg = PointConfig(pts, [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(MarginTooSmallError) as err:
        inradius_atoms(cfg, dens, win, 10.0)
    assert err.value.required > 0


def test_margin_retry_logs(caplog):
    dens, win = unit_square()
    with caplog.at_level(logging.WARNING, logger="poissonlab.tessellation"):
        s = inradius_process(dens, win, 200.0, 5, margin=1e-4)
    assert s.counters["margin_retries"] >= 1
    assert "margin" in caplog.text


def test_inradius_requires_unit_mass():
    dens = constant_density(2.0, [-1, -1], [2, 2])
    with pytest.raises(ConfigError):
        inradius_process(dens, Window.box([0, 0], [1, 1]), 100.0, 0)


def test_inradius_mean_tail_count():
    dens, win = unit_square()
    ring = IntervalRing.of((0.0, 50.0))
    m, se = intensity_estimate(dens, win, 1e3, ring, 600, 21)
    assert abs(m - 1.0) <= 3 * se


def test_circumradius_atoms_d1_formula():
    dens = constant_density(1.0, [-1.0], [2.0])
    win = Window.box([0.0], [1.0])
    pts = np.array([[0.2], [0.25], [0.4], [0.7], [1.5]])
    cfg = PointConfig(pts, [-1.0], [2.0])
    t = 100.0
    atoms, lower, cnt = circumradius_atoms(cfg, dens, win, t, 1.0)
    # nucleus 0.2 is unbounded on the left; 0.25: gaps .05/.15; 0.4: .15/.3; 0.7: .3/.8
    assert cnt["unbounded"] == 1
    s_t = scale_factor(1.0, t, 1)
    expect = sorted(s_t * 2 * np.array([0.075, 0.15, 0.4]))
    assert np.allclose(np.sort(atoms), expect)
    assert np.all(np.sort(lower) <= np.sort(atoms))


def test_circumradius_atoms_d2_against_single_cell():
    dens = constant_density(1.0, [-1, -1], [2, 2])
    win = Window.box([0, 0], [1, 1])
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.3, 1.3, size=(800, 2))
    cfg = PointConfig(pts, [-0.3, -0.3], [1.3, 1.3])
    atoms, _, cnt = circumradius_atoms(cfg, dens, win, 100.0, 0.25)
    inside = np.flatnonzero(win.contains(pts))
    s_t = scale_factor(0.25, 100.0, 2)
    exact = np.sort([s_t * math.pi * circumradius(pts[i], pts) ** 2 for i in inside])
    assert cnt["unbounded"] == 0
    assert np.allclose(np.sort(atoms), exact, rtol=1e-8)


def test_circumradius_cutoff_keeps_small_atoms_exact():
    dens = constant_density(1.0, [-1, -1], [2, 2])
    win = Window.box([0, 0], [1, 1])
    rng = np.random.default_rng(4)
    pts = rng.uniform(-0.3, 1.3, size=(800, 2))
    cfg = PointConfig(pts, [-0.3, -0.3], [1.3, 1.3])
    full, _, _ = circumradius_atoms(cfg, dens, win, 100.0, 0.25)
    cut, _, cnt = circumradius_atoms(cfg, dens, win, 100.0, 0.25, atom_cutoff=3.0)
    assert np.allclose(cut[cut <= 3.0], full[full <= 3.0])
    assert cnt["above_cutoff"] + cut.size == cnt["nuclei"]


def test_two_point_configuration_is_empty():
    dens = constant_density(1.0, [-1, -1], [2, 2])
    win = Window.box([0, 0], [1, 1])
    cfg = PointConfig(np.array([[0.3, 0.3], [0.6, 0.6]]), [-1, -1], [2, 2])
    atoms, _, cnt = circumradius_atoms(cfg, dens, win, 10.0, 0.22)
    assert atoms.size == 0 and cnt["unbounded"] == 2


def test_circumradius_mean_count_d1():
    dens = constant_density(1.0, [-1.0], [2.0])
    win = Window.box([0.0], [1.0])
    ring = IntervalRing.of((0.0, 1.0))
    for t, drift in ((1e3, 0.05), (1e4, 0.02)):
        m, se = intensity_estimate(dens, win, t, ring, 1500, 22, process_kind="circumradius",
                                   alpha2_value=1.0)
        assert abs(m - 1.0) <= 3 * se + drift


def test_extreme_statistics_examples():
    assert extreme_statistics(RescaledSample([1.7, 0.2])) == (1.7, 0.2)
    assert extreme_statistics(RescaledSample([])) == (-math.inf, math.inf)


def test_intensity_empty_ring():
    dens, win = unit_square()
    assert intensity_estimate(dens, win, 100.0, IntervalRing(), 5, 0) == (0.0, 0.0)


def test_process_seeds_reproduce():
    dens, win = unit_square()
    a = inradius_process(dens, win, 500.0, replicate_rng(1, 2))
    b = inradius_process(dens, win, 500.0, replicate_rng(1, 2))
    assert np.array_equal(a.atoms, b.atoms)
    c = circumradius_process(constant_density(1.0, [-1.0], [2.0]), Window.box([0.0], [1.0]),
                             500.0, 4, 1.0)
    assert c.support == (0.0, math.inf)


def test_coupled_min_order():
    phi = step_density([[-1.0, 0.5, 2.0]], [0.8, 1.2])
    f1 = piecewise_linear_density([-1, 0.5, 0.6, 2], [0.8, 0.8, 1.2, 1.2]).scaled(0.5)
    f2 = piecewise_linear_density([-1, 0.4, 0.5, 2], [0.8, 0.8, 1.2, 1.2]).scaled(2.0)
    win = Window.box([0.0], [1.0])
    for i in range(30):
        out = coupled_min_statistics(phi, f1, f2, 1e3, win, replicate_rng(3, i))
        assert out["nested"]
        assert out["upper"] <= out["mid"] <= out["lower"]
