import numpy as np

from vidnetsim.core.rng import RngStream, rng_uniform


def test_mean_of_a_million_draws():
    stream = RngStream(11, "mean")
    draws = np.array([rng_uniform(stream) for _ in range(1_000_000)])
    assert 0.499 <= draws.mean() <= 0.501
    assert draws.min() >= 0.0 and draws.max() < 1.0


def test_streams_are_separated_by_id():
    a = [RngStream(1, "error/wimax_ss-1").uniform() for _ in range(1)]
    b = [RngStream(1, "error/wimax_ss-2").uniform() for _ in range(1)]
    assert a != b


def test_replay_is_identical():
    first, second = RngStream(9, "replay"), RngStream(9, "replay")
    assert [first.uniform() for _ in range(1000)] == [second.uniform() for _ in range(1000)]


def test_draws_are_counted():
    stream = RngStream(2, "count")
    for _ in range(5000):
        stream.uniform()
    assert stream.draws == 5000


def test_simulator_memoizes_streams(sim):
    assert sim.rng("a") is sim.rng("a")
    assert sim.rng("a") is not sim.rng("b")
