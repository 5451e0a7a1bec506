import json

import numpy as np
import pytest

from heisenberg_qpe.domain.vo import Spectrum
from heisenberg_qpe.engine.oracle import SpectrumOracle


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def three_lines():
    return Spectrum.from_pairs([(1.0, 0.5), (2.7, 0.3), (4.9, 0.2)])


@pytest.fixture
def make_oracle():
    def _make(spectrum, seed=0, noiseless=False, **kwargs):
        return SpectrumOracle.create(spectrum, seed, noiseless=noiseless, **kwargs)

    return _make


@pytest.fixture
def spectrum_file(tmp_path):
    def _write(spectrum, name="spectrum.json"):
        path = tmp_path / name
        path.write_text(json.dumps(spectrum.to_dict()), encoding="utf-8")
        return path

    return _write
