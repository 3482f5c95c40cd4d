import numpy as np
import pytest

from qtcov import (DoaScene, circular_distance, estimate_frequencies,
                   frequency_mse, min_eigenvalue, music_spectrum,
                   toeplitz_from_generators, vandermonde_synthesize)
from qtcov.errors import KOutOfRange, LengthMismatch, QtcovError

FIVE_SOURCE_FREQS = (0.08, 0.21, 0.37, 0.68, 0.81)


def exact_scene_cov(freqs, d, noise=0.0):
    T = vandermonde_synthesize(freqs, (1.0,) * len(freqs), d)
    gens = T.generators.copy()
    gens[0] = gens[0].real + noise
    return toeplitz_from_generators(gens)


class TestScene:
    def test_covariance_is_toeplitz_psd(self):
        scene = DoaScene(16, FIVE_SOURCE_FREQS, (1.0,) * 5, 0.1)
        R = scene.covariance()
        assert min_eigenvalue(R) >= 0.1 - 1e-9

    def test_snr_definition(self):
        scene = DoaScene(16, FIVE_SOURCE_FREQS, (1.0,) * 5, 0.1)
        assert scene.snr_db == pytest.approx(10.0)

    def test_validation(self):
        with pytest.raises(KOutOfRange):
            DoaScene(4, (0.1, 0.2, 0.3, 0.4), (1, 1, 1, 1), 0.0)
        with pytest.raises(LengthMismatch):
            DoaScene(8, (0.1, 0.2), (1.0,), 0.0)


class TestSpectrum:
    def test_single_source_peak_dominates(self):
        d, f, grid = 8, 0.3, 640  # f falls exactly on the grid
        T = exact_scene_cov([f], d)
        spec = music_spectrum(T, 1, grid)
        peak = int(np.argmax(spec))
        assert abs(peak / grid - f) <= 1 / grid
        away = [spec[j] for j in range(grid) if min(abs(j - peak), grid - abs(j - peak)) >= 2]
        assert spec[peak] >= 1e3 * max(away)

    def test_isotropic_spectrum_is_flat(self):
        T = toeplitz_from_generators([1.0, 0, 0, 0])
        spec = music_spectrum(T, 1, 64)
        assert (spec.max() - spec.min()) / spec.mean() < 1e-9

    def test_five_source_scene_gives_five_peaks(self):
        T = exact_scene_cov(FIVE_SOURCE_FREQS, 16)
        grid = 4096
        spec = music_spectrum(T, 5, grid)
        left, right = np.roll(spec, 1), np.roll(spec, -1)
        peaks = np.flatnonzero((spec > left) & (spec > right))
        top5 = np.sort(peaks[np.argsort(spec[peaks])[-5:]])
        np.testing.assert_allclose(top5 / grid, FIVE_SOURCE_FREQS, atol=2 / grid)

    def test_k_out_of_range(self):
        T = exact_scene_cov([0.3], 8)
        with pytest.raises(KOutOfRange):
            music_spectrum(T, 8, 512)
        with pytest.raises(KOutOfRange):
            music_spectrum(T, 0, 512)

    def test_grid_too_small(self):
        T = exact_scene_cov([0.3], 8)
        with pytest.raises(QtcovError):
            music_spectrum(T, 1, 32)

    def test_accepts_dense_input(self):
        T = exact_scene_cov([0.3], 8)
        np.testing.assert_array_equal(music_spectrum(T.dense, 1, 512),
                                      music_spectrum(T, 1, 512))


class TestEstimateFrequencies:
    def test_single_source(self):
        T = exact_scene_cov([0.3], 8)
        resolved, freqs = estimate_frequencies(T, 1, 512)
        assert resolved
        assert abs(freqs[0] - 0.3) <= 1 / 512

    def test_five_source_scene(self):
        T = exact_scene_cov(FIVE_SOURCE_FREQS, 16)
        resolved, freqs = estimate_frequencies(T, 5, 4096)
        assert resolved
        np.testing.assert_allclose(freqs, FIVE_SOURCE_FREQS, atol=2 / 4096)

    def test_degenerate_is_flagged(self):
        T = toeplitz_from_generators([1.0, 0, 0, 0])
        resolved, freqs = estimate_frequencies(T, 1, 64)
        assert not resolved
        assert freqs.shape == (1,)

    def test_scale_invariance_power_of_two(self):
        T = exact_scene_cov(FIVE_SOURCE_FREQS, 16, noise=0.05)
        _, base = estimate_frequencies(T, 5, 1024)
        for c in (0.25, 2.0, 1024.0):
            scaled = toeplitz_from_generators(c * T.generators)
            _, freqs = estimate_frequencies(scaled, 5, 1024)
            np.testing.assert_array_equal(freqs, base)

    def test_isotropic_shift_invariance(self):
        T = exact_scene_cov(FIVE_SOURCE_FREQS, 16)
        _, base = estimate_frequencies(T, 5, 1024)
        shifted = exact_scene_cov(FIVE_SOURCE_FREQS, 16, noise=0.7)
        _, freqs = estimate_frequencies(shifted, 5, 1024)
        np.testing.assert_allclose(freqs, base, atol=1e-9)


class TestSnrTrend:
    def test_mse_decreases_with_snr(self):
        # quantized pipeline end to end: higher SNR -> lower frequency MSE
        import qtcov
        from qtcov import rng as qrng
        freqs = FIVE_SOURCE_FREQS
        ruler = qtcov.make_ruler_alpha(16, 0.5)
        stats = []
        for snr_db in (0.0, 10.0, 20.0):
            noise_var = sum((1.0,) * 5) / (5 * 10 ** (snr_db / 10))
            scene = DoaScene(16, freqs, (1.0,) * 5, noise_var)
            assert scene.snr_db == pytest.approx(snr_db)
            R = scene.covariance()
            per = []
            for t in range(10):
                raw = qtcov.sample_complex_gaussian(R, ruler, 2000, qrng.trial_seed(17, t))
                qb = qtcov.quantize_batch(raw, qtcov.QuantizationSpec(2.0, 2.0, 2))
                _, est = estimate_frequencies(qtcov.qtscm(qb), 5, 2048)
                per.append(frequency_mse(est, freqs))
            stats.append((np.mean(per), np.std(per, ddof=1) / np.sqrt(len(per))))
        # monotone decrease within error bars; at high SNR the curve flattens
        # onto the quantization floor
        for (m_lo, se_lo), (m_hi, se_hi) in zip(stats, stats[1:]):
            assert m_hi < m_lo + 2 * np.hypot(se_lo, se_hi)
        assert stats[-1][0] < stats[0][0]


class TestFrequencyMse:
    def test_exact_match(self):
        assert frequency_mse([0.1, 0.5], [0.1, 0.5]) == 0.0

    def test_wraparound(self):
        assert frequency_mse([0.99], [0.01]) == pytest.approx(4e-4)

    def test_permutation_free(self):
        assert frequency_mse([0.1, 0.2], [0.2, 0.1]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            frequency_mse([0.1], [0.1, 0.2])

    def test_symmetric_and_bounded(self, rng):
        for _ in range(20):
            a = rng.uniform(0, 1, 4)
            b = rng.uniform(0, 1, 4)
            assert frequency_mse(a, b) == pytest.approx(frequency_mse(b, a))
            assert frequency_mse(a, b) <= 0.25

    def test_circular_distance(self):
        assert circular_distance(0.9, 0.1) == pytest.approx(0.2)
        assert circular_distance(0.2, 0.4) == pytest.approx(0.2)
