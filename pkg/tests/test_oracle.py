import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenberg_qpe.domain.errors import InvalidSpectrumError
from heisenberg_qpe.domain.vo import CostLedger, Spectrum
from heisenberg_qpe.engine.oracle import (
    SpectrumOracle,
    charge,
    exact_g,
    outcome_probabilities,
    sample_g,
    shift_spectrum,
)


def test_exact_g_at_zero_is_one(three_lines):
    assert exact_g(three_lines, 0.0) == pytest.approx(1.0 + 0.0j)


@given(st.floats(min_value=-500.0, max_value=500.0))
def test_exact_g_conjugate_symmetry(k):
    spec = Spectrum.from_pairs([(0.4, 0.25), (3.3, 0.75)])
    assert exact_g(spec, -k) == pytest.approx(np.conj(exact_g(spec, k)), abs=1e-12)


def test_exact_g_vectorised_matches_scalar(three_lines):
    ks = np.array([0.0, 1.0, 2.5, 17.0])
    values = exact_g(three_lines, ks)
    assert values.shape == (4,)
    for k, v in zip(ks, values):
        assert v == pytest.approx(exact_g(three_lines, k))


def test_outcome_probabilities_recover_g(three_lines):
    p_r, p_i = outcome_probabilities(three_lines, 3.0)
    g = exact_g(three_lines, 3.0)
    assert 2 * p_r - 1 == pytest.approx(g.real)
    assert 1 - 2 * p_i == pytest.approx(g.imag)


@given(
    st.lists(
        st.tuples(st.floats(min_value=0.0, max_value=1e4), st.integers(min_value=1, max_value=10**6)),
        max_size=30,
    )
)
def test_ledger_total_is_sum_of_charges(queries):
    ledger = CostLedger()
    for k, shots in queries:
        charge(ledger, k, shots)
    assert ledger.queries == len(queries)
    assert ledger.total == pytest.approx(sum(2.0 * s * k for k, s in queries))
    assert all(e.cost >= 0 for e in ledger.entries)


def test_charge_rejects_bad_arguments():
    with pytest.raises(ValueError):
        charge(CostLedger(), -1.0, 10)
    with pytest.raises(ValueError):
        charge(CostLedger(), 1.0, 0)


def test_noiseless_sample_is_exact_and_charged(three_lines, make_oracle):
    oracle = make_oracle(three_lines, noiseless=True)
    est = oracle.sample(2.5, 40)
    assert est.value == pytest.approx(exact_g(three_lines, 2.5))
    assert oracle.ledger.total == pytest.approx(2 * 40 * 2.5)


def test_sample_series_layout_and_cost(three_lines, make_oracle):
    oracle = make_oracle(three_lines, seed=3)
    K, M, k_d = 12, 500, 1.75
    values = oracle.sample_series(k_d, K, M)
    assert values.shape == (K + 1,)
    assert values[0] == 1.0
    assert [e.k for e in oracle.ledger.entries] == pytest.approx([k_d * i for i in range(K + 1)])
    assert oracle.ledger.entries[0].cost == 0.0
    assert oracle.ledger.total == pytest.approx(2 * M * k_d * K * (K + 1) / 2)
    assert np.all(np.abs(values.real) <= 1.0)
    assert np.all(np.abs(values.imag) <= 1.0)


def test_sample_series_is_seed_deterministic(three_lines, make_oracle):
    a = make_oracle(three_lines, seed=11).sample_series(2.0, 8, 100)
    b = make_oracle(three_lines, seed=11).sample_series(2.0, 8, 100)
    c = make_oracle(three_lines, seed=12).sample_series(2.0, 8, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("exact_max", [10**7, 10])
def test_sampled_g_is_unbiased(three_lines, exact_max):
    shots = 200_000
    rng = np.random.default_rng(5)
    g = exact_g(three_lines, 7.0)
    est = sample_g(three_lines, 7.0, shots, rng, binomial_exact_max=exact_max)
    assert abs(est.re - g.real) < 6.0 / math.sqrt(shots)
    assert abs(est.im - g.imag) < 6.0 / math.sqrt(shots)


def test_sample_g_rejects_zero_shots(three_lines, rng):
    with pytest.raises(ValueError):
        sample_g(three_lines, 1.0, 0, rng)


def test_shifted_oracle_shares_ledger(three_lines, make_oracle):
    oracle = make_oracle(three_lines, noiseless=True)
    chi = 0.8
    shifted = oracle.shifted(chi)
    assert shifted.exact(3.0) == pytest.approx(oracle.exact(3.0) * np.exp(-3j * chi))
    shifted.sample(1.0, 10)
    assert oracle.ledger.total == pytest.approx(20.0)
    assert shifted.ledger is oracle.ledger


def test_shift_spectrum_keeps_probabilities(three_lines):
    shifted = shift_spectrum(three_lines, 5.0)
    assert np.allclose(shifted.probs, three_lines.probs)
    assert np.all((shifted.phases >= 0) & (shifted.phases < 2 * math.pi))


@pytest.mark.parametrize(
    "pairs",
    [
        [(0.1, 0.5), (0.2, 0.6)],
        [(0.1, 0.0), (0.2, 1.0)],
        [(0.1, 0.5), (0.1 + 2 * math.pi, 0.5)],
        [],
    ],
)
def test_spectrum_validation(pairs):
    with pytest.raises(InvalidSpectrumError):
        Spectrum.from_pairs(pairs)


def test_spectrum_reduces_phases():
    spec = Spectrum.from_pairs([(-0.5, 1.0)])
    assert spec.phases[0] == pytest.approx(2 * math.pi - 0.5)
    assert spec.n_phi == 1


def test_series_estimates_wraps_values(three_lines):
    oracle = SpectrumOracle.create(three_lines, 1, noiseless=True)
    values = oracle.sample_series(0.5, 4, 10)
    samples = oracle.series_estimates(0.5, values, 10)
    assert [s.k for s in samples] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert samples[3].value == pytest.approx(exact_g(three_lines, 1.5))


@settings(max_examples=25)
@given(st.integers(min_value=1, max_value=50), st.floats(min_value=0.1, max_value=20.0))
def test_series_cost_formula(K, k_d):
    oracle = SpectrumOracle.create(Spectrum.from_pairs([(1.0, 1.0)]), 0, noiseless=True)
    oracle.sample_series(k_d, K, 3)
    assert oracle.ledger.total == pytest.approx(3 * k_d * K * (K + 1))


def test_exact_g_bounded_by_one():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 6))
        spec = Spectrum.from_pairs(zip(rng.uniform(0, 2 * math.pi, n), rng.dirichlet(np.ones(n))))
        worst = max(worst, abs(exact_g(spec, rng.uniform(0.0, 1e3))))
    assert worst <= 1.0 + 1e-12


def sampled_g_over_seeds(spec, k, shots, seeds):
    samples = [sample_g(spec, k, shots, np.random.default_rng(seed)) for seed in range(seeds)]
    return np.array([s.re for s in samples]), np.array([s.im for s in samples])


def test_sampled_g_mean_within_five_standard_errors():
    spec = Spectrum.from_pairs([(1.0, 0.6), (2.0, 0.4)])
    g = exact_g(spec, 2.0)
    re, im = sampled_g_over_seeds(spec, 2.0, 10_000, 1000)
    assert abs(re.mean() - g.real) <= 5 * re.std(ddof=1) / math.sqrt(len(re))
    assert abs(im.mean() - g.imag) <= 5 * im.std(ddof=1) / math.sqrt(len(im))


def test_sampled_g_error_shrinks_as_inverse_root_shots():
    spec = Spectrum.from_pairs([(1.0, 0.6), (2.0, 0.4)])
    coarse, _ = sampled_g_over_seeds(spec, 2.0, 1000, 1000)
    fine, _ = sampled_g_over_seeds(spec, 2.0, 100_000, 1000)
    ratio = coarse.std(ddof=1) / fine.std(ddof=1)
    assert 10 / 1.5 <= ratio <= 10 * 1.5
