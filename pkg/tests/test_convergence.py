import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from poissonlab.convergence import (
    IntervalRing,
    TargetLaw,
    consecutive_ratio_statistic,
    count_distribution,
    gof_from_laws,
    ks_critical_value,
    ks_distance,
    law_from_counts,
    poisson_process_gof,
    sandwich_bound_check,
)
from poissonlab.errors import EmptySampleError, InsufficientReplicatesError, SupportExceededError
from poissonlab.rescaled import RescaledSample

HALFLINE = TargetLaw.process("lebesgue_halfline")
RINGS = [IntervalRing.of((0, 3)), IntervalRing.of((0, 1.5), (2, 3.5)), IntervalRing.of((1, 4))]


def test_ring_validation():
    with pytest.raises(ValueError):
        IntervalRing.of((0, 2), (1, 3))
    with pytest.raises(ValueError):
        IntervalRing.of((2, 1))
    with pytest.raises(ValueError):
        IntervalRing.of((0, math.inf))
    touching = IntervalRing.of((1, 2), (0, 1))
    assert touching.intervals == ((0.0, 1.0), (1.0, 2.0))


def test_ring_count_open_intervals():
    s = RescaledSample([0.0, 0.5, 1.0, 1.5, 2.0], support=(0.0, 5.0))
    assert IntervalRing.of((0, 1), (1, 2)).count(s) == 2
    assert IntervalRing.of((0, 2)).count(s) == 3
    with pytest.raises(SupportExceededError):
        IntervalRing.of((4, 6)).count(s)


@settings(max_examples=60, deadline=None)
@given(atoms=st.lists(st.floats(0, 10), max_size=40),
       cuts=st.lists(st.floats(0, 10), min_size=2, max_size=6, unique=True))
def test_ring_count_is_brute_force(atoms, cuts):
    c = sorted(cuts)
    pairs = list(zip(c[::2], c[1::2]))
    pairs = [(a, b) for a, b in pairs if a < b]
    ring = IntervalRing(tuple(pairs))
    s = RescaledSample(atoms, support=(0.0, 10.0))
    brute = sum(1 for x in atoms for a, b in pairs if a < x < b)
    assert ring.count(s) == brute


def test_measures_closed_form():
    assert IntervalRing.of((0, 50)).measure(TargetLaw.process("exp_tail")) == pytest.approx(1.0)
    assert IntervalRing.of((0, 1)).measure(TargetLaw.process("power_law", 1.0, 1)) == 1.0
    assert IntervalRing.of((0.5, 2.5)).measure(HALFLINE) == 2.0
    assert IntervalRing.of((-1, 1)).measure(HALFLINE) == 1.0


def test_count_distribution_lambda():
    samples = [RescaledSample([0.7, 1.2], support=(0, 5))] * 3
    law = count_distribution(samples, IntervalRing.of((0.5, 2.5)), HALFLINE)
    assert law.lam == 2.0 and law.counts.tolist() == [2, 2, 2]


def test_dk_exact_poisson_counts():
    rng = np.random.default_rng(1)
    law = law_from_counts(rng.poisson(2.0, 100_000), 2.0)
    for k in range(1, 7):
        r = consecutive_ratio_statistic(law, k=k)
        assert abs(r.value) <= 4 * r.std_error


def test_dk_degenerate_counts():
    law = law_from_counts(np.ones(200, int), 1.0)
    value, se = consecutive_ratio_statistic(law, k=1)
    assert value == 1.0 and se == 0.0


def test_dk_binomial_pmf_arithmetic():
    # exact pmf of Binomial(2, 1/2) as counts: 1/4, 1/2, 1/4
    law = law_from_counts(np.repeat([0, 1, 2], [100, 200, 100]), 1.0)
    d1 = consecutive_ratio_statistic(law, k=1).value
    d2 = consecutive_ratio_statistic(law, k=2).value
    assert d1 == pytest.approx(0.25)
    assert d2 == pytest.approx(0.0)


def test_dk_needs_replicates_and_matching_ring():
    with pytest.raises(InsufficientReplicatesError):
        consecutive_ratio_statistic(law_from_counts([1, 2, 3], 2.0), k=1)
    law = law_from_counts(np.ones(200, int), 1.0, IntervalRing.of((0, 1)))
    with pytest.raises(ValueError):
        consecutive_ratio_statistic(law, IntervalRing.of((0, 2)), 1)


def test_dk_standard_error_matches_monte_carlo():
    rng = np.random.default_rng(2)
    lam, R, k = 1.5, 2000, 2
    vals = [consecutive_ratio_statistic(law_from_counts(rng.poisson(lam, R), lam), k=k).value
            for _ in range(400)]
    ref = consecutive_ratio_statistic(law_from_counts(rng.poisson(lam, R), lam), k=k)
    assert np.std(vals, ddof=1) == pytest.approx(ref.null_se, rel=0.15)


def test_ks_examples():
    assert ks_distance([math.log(2)], TargetLaw("exp_unit"))[0] == pytest.approx(0.5)
    assert ks_distance(np.zeros(10), TargetLaw("gumbel"))[0] == pytest.approx(1 - math.exp(-1))
    rng = np.random.default_rng(3)
    ks, n = ks_distance(rng.exponential(size=5000), TargetLaw("exp_unit"))
    assert ks <= 1.63 / math.sqrt(n)
    with pytest.raises(EmptySampleError):
        ks_distance([], TargetLaw("gumbel"))


def test_ks_critical_value_asymptotics():
    assert ks_critical_value(5000) == pytest.approx(1.628 / math.sqrt(5000), rel=0.01)


def test_ks_matches_manual_sup():
    rng = np.random.default_rng(4)
    x = np.sort(rng.gumbel(size=300))
    F = TargetLaw("gumbel").cdf(x)
    i = np.arange(1, x.size + 1)
    manual = max(np.max(i / x.size - F), np.max(F - (i - 1) / x.size))
    assert ks_distance(x, TargetLaw("gumbel"))[0] == pytest.approx(manual)


def test_weibull_cdf():
    w = TargetLaw("weibull", mu_W=2.0, d=2)
    assert w.cdf(1.0) == pytest.approx(1 - math.exp(-2.0))
    assert w.cdf(-1.0) == 0.0


def _direct_samples(target, n, lo, hi, seed):
    rng = np.random.default_rng(seed)
    return [target.sample_process(rng, lo, hi) for _ in range(n)]


def test_gof_null_case_passes():
    samples = _direct_samples(HALFLINE, 3000, 0.0, 5.0, 5)
    rep = poisson_process_gof(samples, RINGS, HALFLINE)
    assert rep["pass"] and rep["all_dk_within_4se"]
    assert "necessary" in rep["note"]


def test_gof_exp_tail_null_case():
    target = TargetLaw.process("exp_tail")
    samples = _direct_samples(target, 3000, -1.0, 50.0, 6)
    rings = [IntervalRing.of((-1, 50)), IntervalRing.of((-0.5, 1.5)),
             IntervalRing.of((-1, 0), (1, 50))]
    assert poisson_process_gof(samples, rings, target)["pass"]


def test_gof_rejects_duplicated_atoms():
    samples = _direct_samples(HALFLINE, 3000, 0.0, 5.0, 7)
    doubled = [RescaledSample(np.repeat(s.atoms, 2), support=s.support) for s in samples]
    rep = poisson_process_gof(doubled, RINGS, HALFLINE)
    assert not rep["pass"]
    assert any(c["check"] == "D_k" and not c["pass"] for c in rep["checks"])


def test_gof_requires_three_rings():
    with pytest.raises(ValueError):
        poisson_process_gof([], RINGS[:2], HALFLINE)


def test_gof_bonferroni_threshold():
    laws = [law_from_counts(np.random.default_rng(8).poisson(3, 500), 3.0, r) for r in RINGS]
    rep = gof_from_laws(laws, k_max=6, level=0.01)
    assert rep["n_checks"] == 3 * 8
    assert rep["per_check_threshold"] == pytest.approx(0.01 / 24)


def test_pooled_chisquare_matches_scipy_on_clean_bins():
    rng = np.random.default_rng(9)
    counts = rng.poisson(4.0, 20_000)
    rep = gof_from_laws([law_from_counts(counts, 4.0)], k_max=1)
    chi = [c for c in rep["checks"] if c["check"] == "chi_square"][0]
    assert 0 < chi["p_value"] <= 1
    assert chi["bins"] >= 8
    assert stats.chi2.sf(chi["statistic"], chi["bins"] - 1) == pytest.approx(chi["p_value"])


def test_sandwich_bound_degenerate_cases():
    rng = np.random.default_rng(10)
    mins = rng.weibull(2.0, 4000)  # P(min > u) = exp(-u^2)
    res = [{"lower": m, "mid": m, "upper": m, "nested": True} for m in mins]
    rep = sandwich_bound_check(res, 1.0, 1.0, [0.0, 0.5, 1.0], 1.0, d=1)
    assert rep["pass"]
    zero = [r for r in rep["rows"] if r["u"] == 0.0]
    assert all(r["bound"] == 1.0 and r["tail"] == 1.0 for r in zero)


def test_sandwich_bound_detects_violation():
    res = [{"lower": 5.0, "mid": 5.0, "upper": 5.0, "nested": True}] * 500
    rep = sandwich_bound_check(res, 0.5, 2.0, [1.0], 1.0, d=1)
    assert not rep["pass"]
    bad = [{"lower": 1.0, "mid": 2.0, "upper": 3.0, "nested": True}] * 200
    assert not sandwich_bound_check(bad, 0.5, 2.0, [1.0], 1.0)["min_order_every_replicate"]


def test_target_sampler_intensity():
    target = TargetLaw.process("power_law", 2.0, 2)
    samples = _direct_samples(target, 4000, 0.0, 1.5, 11)
    counts = np.array([IntervalRing.of((0, 1)).count(s) for s in samples])
    assert abs(counts.mean() - 2.0) <= 3 * math.sqrt(2.0 / counts.size)
