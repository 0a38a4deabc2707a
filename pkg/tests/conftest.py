import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SR = 44100


def harmonic_tone(f0, amps, n=2048, sr=SR, phases=None):
    t = np.arange(n) / sr
    phases = np.zeros(len(amps)) if phases is None else phases
    out = np.zeros(n)
    for h, (a, ph) in enumerate(zip(amps, phases), start=1):
        if h * f0 < sr / 2:
            out += a * np.sin(2 * np.pi * h * f0 * t + ph)
    return out


def sawtooth(f0, n=2048, sr=SR, partials=39):
    return 0.5 * harmonic_tone(f0, [(-1) ** (k + 1) / k for k in range(1, partials + 1)], n, sr)


def check_ranges(d):
    """Range invariants of one frame's descriptor dict."""
    for name, value in d.items():
        if not name.startswith("_"):
            assert np.isfinite(value), name
    for i in range(1, 5):
        assert 0 <= d[f"SpectralFlatness{i}"] <= 1
        assert d[f"SpectralCrest{i}"] >= 1
    for n in ("SpectralCentroid", "SpectralRolloff", "HarmonicSpectralCentroid"):
        if n in d:
            assert 0 <= d[n] <= SR / 2
    for n in ("SpectralSpread", "PerceptualSpectralSpread", "Loudness"):
        assert d[n] >= 0
    for fam in ("Spectral", "HarmonicSpectral", "PerceptualSpectral"):
        if d.get(f"{fam}Spread") == 0:
            assert d[f"{fam}Kurtosis"] == 3


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
