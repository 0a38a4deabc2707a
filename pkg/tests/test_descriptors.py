import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import SR, check_ranges, harmonic_tone
from vowel_tremolo.audio import AudioBuffer, spectrum_of_frame
from vowel_tremolo.config import AnalysisConfig
from vowel_tremolo.descriptors import (
    FEATURE_NAMES,
    HELD_WHEN_UNVOICED,
    ODD_EVEN_CAP,
    FeatureMatrix,
    band_flatness_crest,
    check_feature_name,
    compute_feature_matrix,
    envelope_stats,
    frame_descriptors,
    harmonic_features,
    odd_even_ratio,
    perceptual_features,
    shape_moments,
    spectral_deviation,
    temporal_features,
    tristimulus,
)
from vowel_tremolo.pitch import HarmonicPeaks, estimate_f0, extract_harmonics

# Direct-summation sharpness of unit sines (tests/oracles.py), frozen.
SHARPNESS_500_FROZEN = 0.6130035833736386
SHARPNESS_4000_FROZEN = 2.824433992859153

weights = arrays(np.float64, st.integers(2, 40),
                 elements=st.one_of(st.just(0.0), st.floats(1e-6, 10)))


def _sine(f, amp=1.0, n=2048):
    return amp * np.sin(2 * np.pi * f * np.arange(n) / SR)


class TestNames:
    def test_52_unique(self):
        assert len(FEATURE_NAMES) == 52 == len(set(FEATURE_NAMES))

    def test_families_expanded(self):
        for fam in ("HarmonicTristimulus", "PerceptualTristimulus"):
            assert [n for n in FEATURE_NAMES if n.startswith(fam)] == [f"{fam}{i}" for i in (1, 2, 3)]
        for fam in ("SpectralFlatness", "SpectralCrest"):
            assert sum(n.startswith(fam) for n in FEATURE_NAMES) == 4

    def test_unknown_name_lists_canonical(self):
        with pytest.raises(KeyError, match="HarmonicTristimulus2"):
            check_feature_name("Tristimulus2")

    def test_energy_columns_not_held(self):
        assert "HarmonicEnergy" not in HELD_WHEN_UNVOICED
        assert "HarmonicTristimulus2" in HELD_WHEN_UNVOICED


class TestShapeMoments:
    def test_single_weight(self):
        m = shape_moments([0, 0, 3, 0], [0, 500, 1000, 1500])
        assert (m.centroid, m.spread, m.skewness, m.kurtosis) == (1000, 0, 0, 3)

    def test_two_point_symmetric(self):
        m = shape_moments([1, 1], [500, 1500])
        assert m.centroid == 1000 and m.spread == 500
        assert m.skewness == pytest.approx(0, abs=1e-12) and m.kurtosis == pytest.approx(1)

    def test_zero_weights_fallback(self):
        m = shape_moments([0, 0, 0], [1, 2, 3])
        assert m.degenerate and (m.centroid, m.spread, m.skewness, m.kurtosis) == (0, 0, 0, 3)

    def test_random_matches_summation(self, rng):
        w, x = rng.uniform(0, 1, 32), np.sort(rng.uniform(0, 5000, 32))
        m = shape_moments(w, x)
        ref = oracles.moments(list(w), list(x))
        assert np.allclose(m[:4], ref, rtol=1e-12, atol=0)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            shape_moments([1, -1], [0, 1])

    @given(weights)
    def test_ranges(self, w):
        x = np.linspace(0, SR / 2, len(w))
        m = shape_moments(w, x)
        assert 0 <= m.centroid <= SR / 2 and m.spread >= 0
        assert np.all(np.isfinite(m[:4]))
        assert m.kurtosis >= 1 - 1e-9  # Pearson's bound kurt >= 1 + skew**2
        assert m.kurtosis >= 1 + m.skewness**2 - 1e-6 * max(1, m.kurtosis)


class TestEnvelopeStats:
    def test_flat(self):
        x = np.arange(100.0)
        e = envelope_stats(np.ones(100), x, np.ones(100))
        assert e.slope == 0 and e.variation == pytest.approx(0, abs=1e-15)

    def test_disjoint_support(self):
        e = envelope_stats([1, 1, 0, 0], [0, 1, 2, 3], [0, 0, 1, 1])
        assert e.variation == 1

    def test_rolloff_flat_100(self):
        x = np.arange(1, 101) * 10.0
        assert envelope_stats(np.ones(100), x).rolloff == x[94]

    def test_first_frame_variation_zero(self):
        assert envelope_stats([1, 2, 3], [0, 1, 2]).variation == 0

    def test_decrease(self):
        # (2-1)/1 + (4-1)/2 = 2.5 over tail 6
        assert envelope_stats([1, 2, 4], [0, 1, 2]).decrease == pytest.approx(2.5 / 6)

    def test_degenerate(self):
        e = envelope_stats(np.zeros(5), np.arange(5.0))
        assert e.degenerate and e[:4] == (0, 0, 0, 0)

    def test_matches_summation(self, rng):
        w, p, x = rng.uniform(0, 1, 40), rng.uniform(0, 1, 40), np.arange(40) * 21.5
        e = envelope_stats(w, x, p)
        assert np.allclose(e[:4], oracles.envelope(list(w), list(x), list(p)), rtol=1e-12, atol=1e-15)

    @given(weights, st.floats(0.01, 100))
    def test_gain_invariant(self, w, g):
        x = np.arange(len(w)) * 10.0
        prev = np.roll(w, 1)
        a, b = envelope_stats(w, x, prev), envelope_stats(g * w, x, g * prev)
        assert np.allclose(a[:4], b[:4], rtol=1e-9, atol=1e-12)
        assert 0 <= a.variation <= 1 + 1e-12
        assert x[0] <= a.rolloff <= x[-1]


class TestFlatnessCrest:
    def test_flat_band(self):
        spec = spectrum_of_frame(np.zeros(2048), "rectangular", SR)
        spec = spec.__class__(**{**spec.__dict__, "magnitudes": np.ones_like(spec.magnitudes)})
        flat, crest = band_flatness_crest(spec)
        assert np.allclose(flat, 1) and np.allclose(crest, 1)

    def test_single_bin(self):
        spec = spectrum_of_frame(np.zeros(2048), "rectangular", SR)
        mags = np.zeros_like(spec.magnitudes)
        band = np.flatnonzero((spec.bin_freqs >= 1000) & (spec.bin_freqs < 2000))
        mags[band[3]] = 1.0
        spec = spec.__class__(**{**spec.__dict__, "magnitudes": mags})
        flat, crest = band_flatness_crest(spec)
        assert flat[2] == 0 and crest[2] == pytest.approx(len(band))
        assert flat[0] == 1 and crest[0] == 1  # silent band fallback

    def test_matches_summation(self, rng):
        # Pink-ish noise: white noise with a 1/sqrt(f) spectral tilt.
        white = np.fft.rfft(rng.standard_normal(2048))
        f = np.arange(len(white)) + 1.0
        x = np.fft.irfft(white / np.sqrt(f), 2048)
        spec = spectrum_of_frame(x, "hann", SR)
        flat, crest = band_flatness_crest(spec)
        rf, rc = oracles.flat_crest(list(spec.magnitudes), spec.bin_width)
        assert np.allclose(flat, rf, rtol=1e-12) and np.allclose(crest, rc, rtol=1e-12)


class TestHarmonicFeatures:
    @pytest.mark.parametrize("a, expected", [
        ([1, 0, 0, 0, 0], (1, 0, 0)),
        ([0, 1, 1, 1, 0], (0, 1, 0)),
        ([1, 1, 1, 1, 1], (0.2, 0.6, 0.2)),
    ])
    def test_tristimulus_examples(self, a, expected):
        assert np.allclose(tristimulus(a), expected, atol=1e-15)

    def test_t2_uses_amplitudes(self):
        # Amplitudes as printed, not powers: a = [1, 2] gives 2/3.
        assert tristimulus([1, 2])[1] == pytest.approx(2 / 3)

    @given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1e3)))
    def test_partition(self, a):
        t = tristimulus(a)
        if a.sum() > 0:
            assert abs(t.sum() - 1) <= 1e-9
            assert np.all((t >= 0) & (t <= 1 + 1e-12))
        else:
            assert np.all(t == 0)

    def test_odd_even(self):
        assert odd_even_ratio([1, 1, 1, 1]) == 1
        assert odd_even_ratio([1, 0, 1]) == ODD_EVEN_CAP
        assert odd_even_ratio([0, 1]) == 0

    def test_deviation_matches_oracle(self, rng):
        a = rng.uniform(0, 1, 15)
        assert spectral_deviation(a) == pytest.approx(oracles.deviation(list(a)), rel=1e-12)
        assert spectral_deviation(np.ones(7)) == pytest.approx(0, abs=1e-15)

    def test_all_zero_flagged(self):
        pk = HarmonicPeaks(200.0, np.arange(1, 4), np.array([200., 400, 600]), np.zeros(3), 3)
        h = harmonic_features(pk)
        assert h.degenerate and h.tristimulus == (0, 0, 0) and h.odd_even_ratio == 0

    def test_inharmonicity(self):
        pk = HarmonicPeaks(100.0, np.array([1, 2]), np.array([100.0, 210.0]), np.array([1.0, 1.0]), 2)
        # (2 / 100) * (0 * 1 + 10 * 1) / 2
        assert harmonic_features(pk).inharmonicity == pytest.approx(0.1)


class TestPerceptual:
    def test_silence(self):
        p = perceptual_features(spectrum_of_frame(np.zeros(2048), sample_rate=SR))
        assert (p.loudness, p.sharpness, p.spread) == (0, 0, 0)

    def test_single_band(self):
        spec = spectrum_of_frame(np.zeros(2048), "rectangular", SR)
        mags = np.zeros_like(spec.magnitudes)
        mags[37:42] = 1.0  # 797-883 Hz, all inside one Bark band
        p = perceptual_features(spec.__class__(**{**spec.__dict__, "magnitudes": mags}))
        assert p.spread == 0 and p.loudness > 0

    def test_sharpness_rises_with_frequency(self):
        lo = perceptual_features(spectrum_of_frame(_sine(500), sample_rate=SR)).sharpness
        hi = perceptual_features(spectrum_of_frame(_sine(4000), sample_rate=SR)).sharpness
        assert lo == pytest.approx(SHARPNESS_500_FROZEN, rel=1e-9)
        assert hi == pytest.approx(SHARPNESS_4000_FROZEN, rel=1e-9)
        assert hi > lo

    def test_loudness_band_law(self, rng):
        x = rng.standard_normal(2048)
        a = perceptual_features(spectrum_of_frame(x, sample_rate=SR)).loudness
        b = perceptual_features(spectrum_of_frame(2 * x, sample_rate=SR)).loudness
        assert b / a == pytest.approx(2**0.46, rel=1e-9)


class TestTemporal:
    def test_sine_zcr(self):
        x = _sine(440, n=44100)
        assert temporal_features(x, SR)[0] == pytest.approx(880, rel=0.01)

    def test_dc(self):
        assert temporal_features(np.ones(512), SR)[0] == 0

    def test_energy(self):
        assert temporal_features(_sine(441, 0.5, 44100), SR)[1] == pytest.approx(0.125, abs=1e-6)


def _frame_pair(rng, voiced=True):
    f0 = rng.uniform(100, 600)
    a = rng.uniform(0, 1, 12)
    ph = rng.uniform(0, 2 * np.pi, 12)
    x = harmonic_tone(f0, a, phases=ph) if voiced else np.zeros(2048)
    return x + 0.01 * rng.standard_normal(2048)


def _rel_err(got, ref):
    return abs(got - ref) / abs(ref) if ref != 0 else abs(got)


class TestFrameOracle:
    def test_twenty_frames_match_direct_summation(self, rng):
        cfg = AnalysisConfig()
        prev = (None, None, None)
        worst = 0.0
        for i in range(20):
            x = _frame_pair(rng, voiced=i % 5 != 4)
            spec = spectrum_of_frame(x, "hann", SR)
            est = estimate_f0(x, SR)
            pk = extract_harmonics(spec, est.f0) if est.voiced else None
            got = frame_descriptors(x, spec, pk, *prev, cfg, SR)
            ref, mags, nz = oracles.frame_reference(
                x, SR, (pk.f0, pk.freqs, pk.amps) if pk is not None else None, *prev)
            for name in FEATURE_NAMES:
                if name in ref:
                    worst = max(worst, _rel_err(got[name], ref[name]))
            prev = (spec.magnitudes, pk.amps if pk is not None else prev[1], nz)
        assert worst <= 1e-9


class TestFeatureMatrix:
    def test_one_second_shape(self):
        fm = compute_feature_matrix(AudioBuffer(_sine(440, 0.5, 44100), SR))
        assert fm.values.shape == (83, 52)
        assert fm.names == FEATURE_NAMES

    def test_pure_sine(self):
        fm = compute_feature_matrix(AudioBuffer(_sine(440, 0.5, 44100), SR))
        assert np.allclose(fm.column("FundamentalFrequency"), 440, rtol=0.005)
        assert np.all(fm.column("HarmonicTristimulus1") > 0.95)

    def test_silence_finite(self):
        fm = compute_feature_matrix(AudioBuffer(np.zeros(8192), SR))
        assert np.all(np.isfinite(fm.values))
        assert np.all(fm.column("FundamentalFrequency") == 0)

    def test_gain_invariance(self, rng):
        x = harmonic_tone(220, [1, 0.6, 0.4, 0.3, 0.2], n=8192) + 0.01 * rng.standard_normal(8192)
        a = compute_feature_matrix(AudioBuffer(0.3 * x, SR))
        b = compute_feature_matrix(AudioBuffer(0.6 * x, SR))
        stable = [n for n in FEATURE_NAMES if any(k in n for k in (
            "Tristimulus", "Flatness", "Crest", "Centroid", "Spread", "Skewness", "Kurtosis",
            "Slope", "Variation", "Rolloff"))]
        for n in stable:
            assert np.allclose(a.column(n), b.column(n), rtol=1e-6, atol=1e-9), n
        assert np.allclose(b.column("TotalEnergy"), 4 * a.column("TotalEnergy"), rtol=1e-9)
        assert np.allclose(b.column("Loudness"), 2**0.46 * a.column("Loudness"), rtol=1e-9)

    def test_unvoiced_hold(self, rng):
        x = np.concatenate((harmonic_tone(220, [1, 0.5, 0.5], n=8192), 0.1 * rng.standard_normal(8192)))
        fm = compute_feature_matrix(AudioBuffer(x, SR))
        f0 = fm.column("FundamentalFrequency")
        t2 = fm.column("HarmonicTristimulus2")
        unvoiced = np.flatnonzero(f0 == 0)
        assert len(unvoiced) > 0
        last_voiced = unvoiced[0] - 1
        assert np.all(t2[unvoiced[unvoiced > last_voiced]] == t2[last_voiced])
        assert np.all(fm.column("HarmonicEnergy")[unvoiced] == 0)

    def test_csv_roundtrip(self, tmp_path, rng):
        fm = FeatureMatrix(rng.standard_normal((5, 52)), np.arange(5) * 0.01, 100.0, source_id="a")
        p = tmp_path / "a.features.csv"
        fm.to_csv(p)
        back = FeatureMatrix.from_csv(p, source_id="a")
        assert np.array_equal(back.values, fm.values) and back.names == fm.names
        assert back.feature_rate == pytest.approx(100.0)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            FeatureMatrix(np.zeros((3, 4)), np.zeros(3), 1.0)

    def test_array_protocol(self):
        fm = FeatureMatrix(np.ones((2, 52)), np.zeros(2), 1.0)
        assert np.asarray(fm).shape == (2, 52)


class TestFuzzedRanges:
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["noise", "tone", "sparse", "silent"]))
    def test_range_invariants(self, seed, kind):
        rng = np.random.default_rng(seed)
        if kind == "noise":
            x = rng.standard_normal(2048) * rng.uniform(1e-4, 1)
        elif kind == "tone":
            x = harmonic_tone(rng.uniform(70, 1100), rng.uniform(0, 1, 8))
        elif kind == "sparse":
            x = np.zeros(2048)
            x[rng.integers(0, 2048, 3)] = 1.0
        else:
            x = np.zeros(2048)
        spec = spectrum_of_frame(x, "hann", SR)
        est = estimate_f0(x, SR)
        pk = extract_harmonics(spec, est.f0) if est.voiced else None
        d = frame_descriptors(x, spec, pk, None, None, None, AnalysisConfig(), SR)
        check_ranges(d)

