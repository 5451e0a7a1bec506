import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenberg_qpe.domain.errors import DegenerateSignalError
from heisenberg_qpe.domain.vo import GEstimate, Spectrum
from heisenberg_qpe.engine.circle import TWO_PI, phase_dist
from heisenberg_qpe.engine.oracle import SpectrumOracle, exact_g
from heisenberg_qpe.engine.pencil import (
    NOISELESS_RTOL,
    build_hankel,
    fit_amplitudes,
    hankel_from_values,
    pencil_estimate,
    pencil_extract,
    sample_rows,
    select_phases,
    series_values,
    solve_shift,
)


def exact_series(spec, K):
    return exact_g(spec, np.arange(K + 1, dtype=float))


def test_hankel_shapes_and_indexing():
    values = np.array([1.0, 0.5 + 0.5j])
    pair = hankel_from_values(values)
    assert pair.L_K == 1
    assert np.allclose(pair.G0, [[0.5 - 0.5j, 1.0]])
    assert np.allclose(pair.G1, [[1.0, 0.5 + 0.5j]])

    pair = hankel_from_values(np.ones(11, dtype=complex))
    assert pair.L_K == 5
    assert pair.G0.shape == (5, 16)


@settings(max_examples=30)
@given(st.integers(min_value=2, max_value=30), st.floats(min_value=0.0, max_value=TWO_PI, exclude_max=True))
def test_hankel_index_formula(K, phi):
    spec = Spectrum.from_pairs([(phi, 0.7), (phi + 2.0, 0.3)])
    pair = hankel_from_values(exact_series(spec, K))
    for a, G in ((0, pair.G0), (1, pair.G1)):
        i, j = G.shape[0] - 1, G.shape[1] - 1
        assert G[i, j] == pytest.approx(exact_g(spec, float(i + j + a - K)), abs=1e-12)
        assert G[0, 0] == pytest.approx(exact_g(spec, float(a - K)), abs=1e-12)


def test_single_phase_matrices_rank_one():
    pair = hankel_from_values(exact_series(Spectrum.from_pairs([(0.9, 1.0)]), 12))
    assert np.linalg.matrix_rank(pair.G0, tol=1e-9) == 1
    assert np.linalg.matrix_rank(pair.G1, tol=1e-9) == 1


def test_build_hankel_rejects_gaps():
    samples = [GEstimate(k=float(k), re=1.0, im=0.0, shots=1) for k in (0, 1, 3)]
    with pytest.raises(ValueError):
        build_hankel(samples)


def test_build_hankel_from_samples(three_lines):
    oracle = SpectrumOracle.create(three_lines, 0, noiseless=True)
    values = oracle.sample_series(0.5, 8, 1)
    pair = build_hankel(oracle.series_estimates(0.5, values, 1))
    assert np.allclose(pair.G0, hankel_from_values(values).G0)


def test_shift_eigenvalues_on_unit_circle():
    spec = Spectrum.from_pairs([(1.0, 0.6), (2.0, 0.4)])
    shift = solve_shift(hankel_from_values(exact_series(spec, 10)), NOISELESS_RTOL)
    lambdas = np.linalg.eigvals(shift)
    big = lambdas[np.abs(lambdas) > 0.5]
    assert len(big) == 2
    assert np.allclose(np.abs(big), 1.0, atol=1e-9)
    assert np.sort(np.angle(big)) == pytest.approx([1.0, 2.0], abs=1e-9)
    assert np.all(np.abs(lambdas[np.abs(lambdas) <= 0.5]) < 1e-6)


def test_constant_signal_has_unit_eigenvalue():
    shift = solve_shift(hankel_from_values(np.ones(9, dtype=complex)))
    assert np.max(np.abs(np.linalg.eigvals(shift) - 1.0).min()) < 1e-9


def test_all_zero_signal_is_degenerate():
    with pytest.raises(DegenerateSignalError):
        solve_shift(hankel_from_values(np.zeros(11, dtype=complex)))


def test_fit_amplitudes_two_lines():
    spec = Spectrum.from_pairs([(1.0, 0.6), (2.0, 0.4)])
    estimate = pencil_estimate(exact_series(spec, 10), NOISELESS_RTOL)
    selected = select_phases(estimate, 0.2)
    assert selected == pytest.approx([1.0, 2.0], abs=1e-9)
    amps = estimate.amps[np.abs(estimate.lambdas) > 0.5]
    assert amps == pytest.approx([0.6, 0.4], abs=1e-8)
    assert np.all(np.abs(estimate.amps[np.abs(estimate.lambdas) <= 0.5]) < 1e-6)


def test_fit_amplitudes_single_line_is_exact():
    values = exact_series(Spectrum.from_pairs([(2.2, 1.0)]), 6)
    amps, residue = fit_amplitudes(np.array([np.exp(2.2j)]), values)
    assert amps[0] == pytest.approx(1.0, abs=1e-10)
    assert residue < 1e-10


def test_fit_amplitudes_rejects_empty():
    with pytest.raises(ValueError):
        fit_amplitudes(np.array([]), np.ones(3))


def test_pencil_estimate_sorted_by_phase(three_lines):
    estimate = pencil_estimate(exact_series(three_lines, 20))
    assert np.all(np.diff(estimate.thetas) >= 0)


def separated_spectrum(rng, n_phi, min_gap):
    while True:
        phases = np.sort(rng.uniform(0, TWO_PI, n_phi))
        gaps = np.append(np.diff(phases), phases[0] + TWO_PI - phases[-1])
        if n_phi == 1 or gaps.min() >= min_gap:
            return Spectrum.equal_weight(phases)


@pytest.mark.parametrize("seed", range(100))
def test_noiseless_random_spectra_exact(seed):
    K = 50
    n_phi = seed % 4 + 1
    A = 1.0 / (2 * n_phi)
    spec = separated_spectrum(np.random.default_rng(1000 + seed), n_phi, TWO_PI / K)
    found = pencil_extract(SpectrumOracle.create(spec, seed, noiseless=True), 1.0, K, 1, A)
    assert len(found) == n_phi
    for phi, est in zip(spec.phases, found):
        assert phase_dist(phi, est) < 1e-9

    estimate = pencil_estimate(exact_series(spec, K))
    assert estimate.rank == n_phi
    kept = estimate.amps >= A
    assert estimate.amps[kept] == pytest.approx(spec.probs, abs=1e-8)
    assert np.all(estimate.amps[~kept] == 0.0)
    assert float(np.sum(estimate.amps[kept])) == pytest.approx(1.0, abs=n_phi * 1e-8)


def test_truncated_eigenvalues_get_no_amplitude():
    spec = Spectrum.equal_weight([0.714, 1.004, 4.615])
    estimate = pencil_estimate(exact_series(spec, 50))
    assert estimate.rank == 3
    assert len(estimate.lambdas) == 25
    assert np.count_nonzero(estimate.amps) == 3
    assert select_phases(estimate, 1 / 6) == pytest.approx([0.714, 1.004, 4.615], abs=1e-9)
    assert estimate.to_dict()["rank"] == 3


def test_noisy_estimate_fits_every_eigenvalue():
    spec = Spectrum.equal_weight([1.3, 2.3])
    values = SpectrumOracle.create(spec, 4).sample_series(1.0, 20, 1000)
    estimate = pencil_estimate(values, 1e-8)
    assert estimate.rank == len(estimate.lambdas) == 10


@pytest.mark.parametrize("seed", range(10))
def test_noiseless_four_lines_recovered(seed):
    rng = np.random.default_rng(seed)
    base = np.sort(rng.uniform(0, TWO_PI, 4))
    while np.min(np.append(np.diff(base), base[0] + TWO_PI - base[-1])) < 0.5:
        base = np.sort(rng.uniform(0, TWO_PI, 4))
    spec = Spectrum.equal_weight(base)
    oracle = SpectrumOracle.create(spec, seed, noiseless=True)
    found = pencil_extract(oracle, 1.0, 50, 1, 0.125)
    assert len(found) == 4
    for phi, est in zip(spec.phases, found):
        assert phase_dist(phi, est) < 1e-9
    estimate = pencil_estimate(exact_series(spec, 50))
    kept = estimate.amps[estimate.amps >= 0.125]
    assert float(np.sum(kept)) == pytest.approx(1.0, abs=4e-8)


def test_pencil_extract_charges_ledger(three_lines):
    oracle = SpectrumOracle.create(three_lines, 0)
    pencil_extract(oracle, 2.0, 10, 100, 0.1)
    assert oracle.ledger.total == pytest.approx(2 * 100 * 2.0 * 55)


def test_pencil_extract_rejects_empty_plan(three_lines):
    with pytest.raises(ValueError):
        pencil_extract(SpectrumOracle.create(three_lines, 0), 1.0, 0, 10, 0.1)


@pytest.mark.parametrize("seed", range(5))
def test_noisy_two_lines_recovered(seed):
    M = 10**6
    spec = Spectrum.equal_weight([1.3, 2.3])
    found = pencil_extract(SpectrumOracle.create(spec, seed), 1.0, 40, M, 0.25)
    assert len(found) == 2
    for phi, est in zip(spec.phases, found):
        assert phase_dist(phi, est) < 10.0 / math.sqrt(M)


def test_sample_rows_format():
    rows = sample_rows(np.array([1.0 + 0j, 0.5 - 0.25j]))
    assert rows == [[0, "1.0", "0.0"], [1, "0.5", "-0.25"]]


def test_series_values_accepts_scaled_orders():
    samples = [GEstimate(k=2.5 * i, re=1.0, im=0.0, shots=1) for i in range(4)]
    assert series_values(samples).shape == (4,)
