import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from qcaching import data_path
from qcaching.workload import (
    YOUTUBE_FIT,
    RequestDistribution,
    TraceEpoch,
    TraceLoadError,
    TraceWorkload,
    WorkloadError,
    epoch_rates,
    exponential_popularity,
    exponential_weight,
    load_trace,
    parse_trace,
    sample_request,
    synthetic_trace,
    trace_to_csv,
    zipf_weights,
)

# 1 / sum_{j=1..100} j**-0.8, summed at 30 significant digits
ZIPF_100_08_HEAD = 0.122934146556582808948941464762
# 1473 + 108947 * exp(-0.4707 * 31)
EXP_FIT_AT_31 = 1473.05013262949441838835327879


def test_zipf_harmonic():
    np.testing.assert_allclose(zipf_weights(3, 1.0), [6 / 11, 3 / 11, 2 / 11], rtol=1e-12)


def test_zipf_beta_zero_is_uniform():
    np.testing.assert_allclose(zipf_weights(5, 0.0), [0.2] * 5)


def test_zipf_reference_head():
    assert zipf_weights(100, 0.8)[0] == pytest.approx(ZIPF_100_08_HEAD, rel=1e-12)


def test_zipf_rejects_empty_catalog():
    with pytest.raises(WorkloadError):
        zipf_weights(0, 0.8)


@given(st.integers(1, 100_000), st.floats(0, 3))
@settings(max_examples=40, deadline=None)
def test_zipf_sums_to_one_and_is_non_increasing(C, beta):
    p = zipf_weights(C, beta)
    assert abs(p.sum() - 1) <= 1e-9
    assert np.all(np.diff(p) <= 1e-15)


def test_exponential_fit_raw_values():
    assert exponential_weight(0, *YOUTUBE_FIT) == pytest.approx(110420.0, rel=1e-12)
    assert exponential_weight(31, *YOUTUBE_FIT) == pytest.approx(EXP_FIT_AT_31, rel=1e-12)


def test_exponential_constant_is_uniform():
    np.testing.assert_allclose(exponential_popularity(4, 1.0, 0.0, 3.0), [0.25] * 4)


def test_exponential_rejects_non_positive_weights():
    with pytest.raises(WorkloadError):
        exponential_popularity(10, -5.0, 1.0, 1.0)


def test_exponential_popularity_is_decreasing():
    p = exponential_popularity(31, *YOUTUBE_FIT)
    assert abs(p.sum() - 1) < 1e-12
    assert np.all(np.diff(p) < 0)


def test_degenerate_distribution_always_returns_its_content():
    dist = RequestDistribution.shared([0, 0, 1, 0], [1.0])
    rng = np.random.default_rng(3)
    assert all(sample_request(dist, 0, rng) == 2 for _ in range(200))


def test_sampling_is_deterministic_per_seed():
    dist = RequestDistribution.shared(zipf_weights(50, 0.8), [1.0, 2.0])
    a = dist.sample(1, np.random.default_rng(7), 1000)
    b = dist.sample(1, np.random.default_rng(7), 1000)
    assert np.array_equal(a, b)


def test_uniform_frequencies_within_three_sigma():
    n = 10**6
    dist = RequestDistribution.shared([0.25] * 4, [1.0])
    draws = dist.sample(0, np.random.default_rng(11), n)
    freq = np.bincount(draws, minlength=4) / n
    sigma = np.sqrt(0.25 * 0.75 / n)
    assert np.all(np.abs(freq - 0.25) <= 3 * sigma)


def test_zipf_frequencies_pass_chi_square():
    p = zipf_weights(20, 0.8)
    dist = RequestDistribution.shared(p, [1.0])
    draws = dist.sample(0, np.random.default_rng(5), 200_000)
    observed = np.bincount(draws, minlength=20)
    assert stats.chisquare(observed, p * len(draws)).pvalue > 0.01


def test_non_client_cannot_sample():
    dist = RequestDistribution.shared([0.5, 0.5], [1.0, 0.0])
    with pytest.raises(WorkloadError):
        sample_request(dist, 1, np.random.default_rng(0))


def test_rows_must_sum_to_one():
    with pytest.raises(WorkloadError):
        RequestDistribution(np.array([[0.5, 0.4]]), np.array([1.0]))


def test_fractional_rates_resolve_by_bernoulli():
    dist = RequestDistribution.shared([1.0], [2.25])
    rng = np.random.default_rng(2)
    counts = np.array([dist.request_counts(rng)[0] for _ in range(40_000)])
    assert set(np.unique(counts)) == {2, 3}
    assert counts.mean() == pytest.approx(2.25, abs=0.01)


def test_epoch_rates_are_proportional():
    np.testing.assert_allclose(epoch_rates(TraceEpoch(0, np.array([10.0, 30.0]))), [0.25, 0.75])


def test_parse_trace_and_round_trip():
    text = "epoch,content_id,requests\n0,0,10\n0,1,30\n1,0,5\n1,1,0\n"
    epochs = parse_trace(text)
    assert [e.epoch for e in epochs] == [0, 1]
    assert trace_to_csv(epochs) == text


@pytest.mark.parametrize(
    "text, line",
    [
        ("epoch,content_id,requests\n0,0,10\n0,1,-3\n", 3),
        ("epoch,content_id,requests\n0,0,10\n0,x,3\n", 3),
        ("epoch,content_id,requests\n0,0\n", 2),
        ("epoch,content_id,requests\n1,0,3\n0,0,3\n", 3),
        ("epoch,content,requests\n0,0,1\n", 1),
    ],
)
def test_malformed_traces_report_lines(text, line):
    with pytest.raises(TraceLoadError) as err:
        parse_trace(text)
    assert err.value.line == line


def test_epochs_must_be_contiguous():
    with pytest.raises(TraceLoadError):
        parse_trace("epoch,content_id,requests\n0,0,1\n2,0,1\n")


def test_single_epoch_trace_is_stationary():
    wl = TraceWorkload(parse_trace("epoch,content_id,requests\n0,0,1\n0,1,3\n"), [1.0], epoch_length=10)
    assert wl.distribution(0) is wl.distribution(10_000)
    assert not any(wl.is_boundary(s) for s in range(1, 100))


def test_distribution_switches_exactly_at_epoch_boundary():
    text = "epoch,content_id,requests\n0,0,9\n0,1,1\n1,0,1\n1,1,9\n"
    wl = TraceWorkload(parse_trace(text), [1.0], epoch_length=25)
    np.testing.assert_allclose(wl.distribution(24).probs[0], [0.9, 0.1])
    np.testing.assert_allclose(wl.distribution(25).probs[0], [0.1, 0.9])
    assert [s for s in range(100) if wl.is_boundary(s)] == [25]
    # past the end the last epoch stays active
    np.testing.assert_allclose(wl.distribution(10_000).probs[0], [0.1, 0.9])


def test_synthetic_trace_shape():
    epochs = synthetic_trace(31, 365, seed=4)
    totals = np.sum([e.counts for e in epochs], axis=0)
    assert len(epochs) == 365 and len(epochs[0].counts) == 31
    assert totals[0] >= totals[-1]
    daily = np.array([e.counts.sum() for e in epochs])
    weekend = daily[[e for e in range(365) if e % 7 in (5, 6)]].mean()
    weekday = daily[[e for e in range(365) if e % 7 not in (5, 6)]].mean()
    assert weekend > weekday
    assert daily[-60:].mean() > daily[:60].mean()


def test_synthetic_trace_is_deterministic():
    assert trace_to_csv(synthetic_trace(5, 10, seed=1)) == trace_to_csv(synthetic_trace(5, 10, seed=1))


def test_bundled_trace_loads():
    epochs = load_trace(data_path("synthetic_trace.csv"))
    assert len(epochs) == 365
    assert len(epochs[0].counts) == 31
