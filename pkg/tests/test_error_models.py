from collections import Counter

import numpy as np
import pytest
from scipy import stats

from vidnetsim.core.rng import RngStream
from vidnetsim.network.error_models import (BurstErrorConfig, BurstErrorModel, BurstState, ErrorUnit,
                                            RateErrorConfig, RateErrorModel, SizeDistribution,
                                            corruption_probability, reset_error_state)


def within_binomial_band(hits: int, n: int, p: float) -> bool:
    sigma = (p * (1 - p) / n) ** 0.5
    return abs(hits / n - p) <= 3 * sigma + 1 / n


def test_byte_unit_closed_form():
    cfg = RateErrorConfig(1e-5, ErrorUnit.BYTE)
    assert corruption_probability(1400, cfg) == pytest.approx(0.013902, abs=1e-6)


def test_bit_unit_counts_eight_units_per_byte():
    assert corruption_probability(100, RateErrorConfig(1e-4, ErrorUnit.BIT)) == pytest.approx(
        1 - (1 - 1e-4) ** 800)
    assert corruption_probability(100, RateErrorConfig(0.3, ErrorUnit.PACKET)) == 0.3


def test_rate_zero_never_and_rate_one_always():
    never = RateErrorModel(RateErrorConfig(0.0), RngStream(1, "never"))
    always = RateErrorModel(RateErrorConfig(1.0, ErrorUnit.PACKET), RngStream(1, "always"))
    assert not any(never.is_corrupt(1400) for _ in range(1000))
    assert all(always.is_corrupt(1400) for _ in range(1000))


def test_rate_model_draws_once_per_packet():
    stream = RngStream(3, "draws")
    model = RateErrorModel(RateErrorConfig(0.01), stream)
    for _ in range(500):
        model.is_corrupt(1000)
    assert stream.draws == 500


def test_out_of_range_rate_is_rejected():
    with pytest.raises(ValueError):
        RateErrorConfig(1.5)
    with pytest.raises(ValueError):
        BurstErrorConfig(-0.1)


@pytest.mark.slow
@pytest.mark.parametrize("rate", [1e-6, 1e-5, 1e-4, 1e-3])
@pytest.mark.parametrize("unit", list(ErrorUnit))
@pytest.mark.parametrize("size", [64, 512, 1400])
def test_rate_model_frequency_matches_closed_form(rate, unit, size):
    n = 1_000_000
    cfg = RateErrorConfig(rate, unit)
    model = RateErrorModel(cfg, RngStream(21, f"grid/{rate}/{unit.value}/{size}"))
    hits = sum(model.is_corrupt(size) for _ in range(n))
    assert within_binomial_band(hits, n, corruption_probability(size, cfg))


def test_burst_model_corrupts_whole_bursts():
    cfg = BurstErrorConfig(1.0, SizeDistribution.degenerate(3))
    model = BurstErrorModel(cfg, RngStream(1, "burst"))
    assert [model.is_corrupt(100) for _ in range(3)] == [True, True, True]
    assert model.state.remaining == 0


def test_burst_long_run_fraction():
    n = 1_000_000
    model = BurstErrorModel(BurstErrorConfig(0.01, SizeDistribution.uniform(1, 4)), RngStream(5, "fraction"))
    hits = sum(model.is_corrupt(1000) for _ in range(n))
    assert hits / n == pytest.approx(0.025, rel=0.1)


def test_burst_sizes_follow_the_size_distribution():
    dist = SizeDistribution.uniform(1, 4)
    model = BurstErrorModel(BurstErrorConfig(0.05, dist), RngStream(8, "histogram"))
    sizes = Counter()
    for _ in range(400_000):
        starting = model.state.remaining == 0
        if model.is_corrupt(1000) and starting:
            sizes[model.state.remaining + 1] += 1
    observed = [sizes[v] for v in dist.values]
    total = sum(observed)
    expected = [total * p for p in dist.probabilities]
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_size_distribution_sampling_edges():
    dist = SizeDistribution((2, 5), (1.0, 3.0))
    assert dist.sample(0.0) == 2
    assert dist.sample(0.2499) == 2
    assert dist.sample(0.25) == 5
    assert dist.mean == pytest.approx(4.25)


def test_reset_clears_a_running_burst():
    state = BurstState(remaining=3)
    reset_error_state(state)
    assert state.remaining == 0
    model = BurstErrorModel(BurstErrorConfig(0.0), RngStream(1, "reset"), BurstState(remaining=2))
    model.reset()
    assert not model.is_corrupt(100)


def test_a_running_burst_draws_nothing():
    stream = RngStream(4, "interleave")
    model = BurstErrorModel(BurstErrorConfig(0.2, SizeDistribution.uniform(1, 4)), stream)
    for _ in range(20_000):
        running, draws = model.state.remaining, stream.draws
        corrupt = model.is_corrupt(1000)
        if running:
            assert corrupt
            assert stream.draws == draws
            assert model.state.remaining == running - 1
        elif corrupt:
            # one start draw and one size draw
            assert stream.draws == draws + 2
            assert model.state.remaining <= 3
        else:
            assert stream.draws == draws + 1


def streak_pmf(dist: SizeDistribution, rate: float, longest: int) -> np.ndarray:
    """Run-length pmf of corrupt streaks: back-to-back bursts merge with probability `rate`."""
    single = np.zeros(longest + 1)
    single[list(dist.values)] = dist.probabilities
    pmf, total = np.zeros(longest + 1), single.copy()
    for bursts in range(1, 12):
        pmf += (1 - rate) * rate ** (bursts - 1) * total
        total = np.convolve(total, single)[:longest + 1]
    return pmf


def test_corrupt_streak_lengths():
    rate, dist = 0.05, SizeDistribution.uniform(1, 4)
    model = BurstErrorModel(BurstErrorConfig(rate, dist), RngStream(9, "streaks"))
    streaks, run = Counter(), 0
    for _ in range(400_000):
        if model.is_corrupt(1000):
            run += 1
        elif run:
            streaks[run] += 1
            run = 0

    pmf = streak_pmf(dist, rate, 8)
    probabilities = list(pmf[1:]) + [1 - pmf[1:].sum()]
    observed = [streaks[length] for length in range(1, 9)] + [sum(c for k, c in streaks.items() if k > 8)]
    total = sum(observed)
    assert total > 15_000
    assert stats.chisquare(observed, [total * p for p in probabilities]).pvalue > 0.001
