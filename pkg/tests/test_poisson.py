import math
import os
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import specfun
from exactlin import Permutation
from poisson import (THREADS_ENV, UNITARITY_HEALTH_TOLERANCE,
                     SamplingPreconditionError, SpectralSamples,
                     UnsupportedPermutationError, Window, WindowKind,
                     detect_peaks, sample_phi, samples_from_function,
                     scan_spectrum, sl3_check, sl3_reduce,
                     sl3_singular_support, symmetric_grid, windowed_fft,
                     worker_count)
from scatmat import NotTranspositionError
from specfun import DomainError

_original_zeta = specfun.zeta


def drifting_zeta(z, opts=specfun.DEFAULT_OPTIONS):
    """Zeta with a 0.1% error below the real axis."""
    value = _original_zeta(z, opts)
    return value * 1.001 if complex(z).imag < 0 else value


def tones(times, weights=None):
    """Sum of e^(-iTr), which transforms to peaks at each T."""
    weights = weights or [1.0] * len(times)

    def phi(r):
        return sum(w * np.exp(-1j * t * r) for t, w in zip(times, weights))

    return phi


class TestWindow(unittest.TestCase):
    """Test window parsing and weights."""

    def test_parse(self):
        """Test names, defaults and unknown windows."""
        self.assertEqual(Window.parse("Hann").kind, WindowKind.HANN)
        self.assertEqual(Window.parse(None).kind, WindowKind.GAUSSIAN)
        with self.assertRaises(SamplingPreconditionError):
            Window.parse("kaiser")

    def test_weights(self):
        """Test weights are symmetric and peak at the centre."""
        for kind in WindowKind:
            w = Window(kind).weights(1024, 100.0)
            self.assertEqual(len(w), 1024)
            np.testing.assert_allclose(w, w[::-1], atol=1e-14)
            self.assertAlmostEqual(float(w.max()), 1.0, places=2)


class TestGrid(unittest.TestCase):
    """Test sampling grids and their preconditions."""

    def test_symmetric_grid_avoids_zero(self):
        """Test an even count never samples r = 0."""
        grid = symmetric_grid(50.0, 1024)
        self.assertEqual(grid[0], -50.0)
        self.assertEqual(grid[-1], 50.0)
        self.assertGreater(float(np.min(np.abs(grid))), 0.0)

    def test_count_must_be_power_of_two(self):
        """Test disallowed sizes."""
        for count in (1000, 512, 3000):
            with self.assertRaises(SamplingPreconditionError):
                samples_from_function(tones([1.0]), 50.0, count)

    def test_envelope(self):
        """Test r_max beyond 2000 raises DomainError."""
        with self.assertRaises(DomainError):
            sample_phi(2500.0, 1024)
        with self.assertRaises(ValueError):
            sample_phi(-1.0, 1024)

    def test_worker_count(self):
        """Test the environment fallback and the floor of one."""
        with patch.dict(os.environ, {THREADS_ENV: "3"}):
            self.assertEqual(worker_count(), 3)
        with patch.dict(os.environ, {THREADS_ENV: "many"}):
            self.assertEqual(worker_count(), 1)
        self.assertEqual(worker_count(0), 1)


class TestTransform(unittest.TestCase):
    """Test the windowed transform and peak detection."""

    def test_planted_tones_are_found(self):
        """Test every planted tone and nothing else is detected."""
        planted = [2 * math.log(n) for n in range(2, 9)]
        samples = samples_from_function(tones(planted), 200.0, 4096)
        report = detect_peaks(windowed_fft(samples))
        self.assertEqual(len(report.peaks), len(planted))
        for found, expected in zip(report.locations(), planted):
            self.assertLess(abs(found - expected), report.resolution)

    def test_resolution(self):
        """Test resolution is 2 pi over the source width."""
        samples = samples_from_function(tones([1.0]), 100.0, 1024)
        spectrum = windowed_fft(samples)
        report = detect_peaks(spectrum)
        self.assertAlmostEqual(report.resolution, 2 * math.pi / 200.0)

    def test_zero_function_has_no_peaks(self):
        """Test an identically zero input yields an empty report."""
        samples = samples_from_function(lambda r: 0.0, 50.0, 1024)
        spectrum = windowed_fft(samples)
        self.assertEqual(detect_peaks(spectrum).peaks, ())

    def test_peaks_below_min_location_ignored(self):
        """Test a tone at 0.1 is not reported."""
        spectrum = windowed_fft(
            samples_from_function(tones([0.1, 3.0]), 200.0, 4096)
        )
        locations = detect_peaks(spectrum).locations()
        self.assertEqual(len(locations), 1)
        self.assertAlmostEqual(locations[0], 3.0, delta=0.02)

    def test_weak_ripple_is_not_a_peak(self):
        """Test low-prominence maxima are dropped unless asked for."""
        weak = [1.0, 1.2, 1.4, 2.6, 2.8, 3.0]
        samples = samples_from_function(
            tones([2.0] + weak, [1.0] + [0.03] * len(weak)), 200.0, 4096
        )
        spectrum = windowed_fft(samples)
        report = detect_peaks(spectrum)
        self.assertEqual(len(report.peaks), 1)
        self.assertAlmostEqual(report.locations()[0], 2.0, delta=0.02)
        self.assertGreater(report.prominence, 0.0)

        everything = detect_peaks(spectrum, prominence_ratio=0.0)
        self.assertEqual(len(everything.peaks), 1 + len(weak))

    def test_invalid_ratios(self):
        """Test non-positive thresholds and prominence >= 1 raise."""
        spectrum = windowed_fft(
            samples_from_function(tones([2.0]), 50.0, 1024)
        )
        with self.assertRaises(SamplingPreconditionError):
            detect_peaks(spectrum, threshold_ratio=0.0)
        with self.assertRaises(SamplingPreconditionError):
            detect_peaks(spectrum, prominence_ratio=1.0)

    def test_dual_grid(self):
        """Test the dual grid is increasing with the expected spacing."""
        samples = samples_from_function(tones([1.0]), 100.0, 1024, "none")
        spectrum = windowed_fft(samples)
        self.assertEqual(spectrum.domain, "zeta")
        self.assertTrue(np.all(np.diff(spectrum.points) > 0))
        expected = 2 * math.pi / (1024 * samples.spacing)
        self.assertAlmostEqual(spectrum.spacing, expected, places=10)

    def test_requires_r_domain(self):
        """Test transforming a transform raises."""
        samples = samples_from_function(tones([1.0]), 50.0, 1024)
        spectrum = windowed_fft(samples)
        with self.assertRaises(SamplingPreconditionError):
            windowed_fft(spectrum)

    def test_rows(self):
        """Test rows carry (point, |v|, Re, Im) and rebuild samples."""
        samples = samples_from_function(tones([2.0]), 50.0, 1024)
        spectrum = windowed_fft(samples)
        rows = spectrum.to_rows()
        point, magnitude, re, im = rows[10]
        self.assertAlmostEqual(magnitude, math.hypot(re, im))
        rebuilt = SpectralSamples.from_rows(rows)
        np.testing.assert_allclose(rebuilt.values, spectrum.values)
        self.assertEqual(
            detect_peaks(rebuilt).locations(),
            detect_peaks(spectrum).locations(),
        )


class TestSamplePhi(unittest.TestCase):
    """Test sampling of the scattering coefficient."""

    @classmethod
    def setUpClass(cls):
        """Sample once on a small grid."""
        cls.samples = sample_phi(40.0, 1024, threads=1)

    def test_unitarity_metadata(self):
        """Test |Phi| = 1 on the grid."""
        deviation = self.samples.metadata["unitarity_deviation"]
        self.assertLess(deviation, UNITARITY_HEALTH_TOLERANCE)
        self.assertEqual(self.samples.excluded_points, ())

    def test_conjugate_symmetry(self):
        """Test Phi(-r) = conj Phi(r) across the grid."""
        values = self.samples.values
        np.testing.assert_allclose(values[::-1], np.conj(values), atol=1e-9)

    def test_threads_do_not_change_values(self):
        """Test parallel sampling gives the same samples."""
        parallel = sample_phi(40.0, 1024, threads=4)
        np.testing.assert_allclose(parallel.values, self.samples.values)

    def test_unitarity_drift_is_reported(self):
        """Test a faulty zeta shows up in the health metric."""
        with patch("specfun.zeta", drifting_zeta):
            with self.assertLogs("poisson", level="WARNING"):
                samples = sample_phi(40.0, 1024, threads=1)
        self.assertGreater(
            samples.metadata["unitarity_deviation"], 1e-4
        )


class TestScan(unittest.TestCase):
    """Test the end-to-end scan of the stripped coefficient."""

    def test_first_sojourn_time_stands_out(self):
        """Test |spectrum| at 2 ln 2 dominates the gap before 2 ln 3."""
        spectrum = scan_spectrum(200.0, 4096, threads=1)
        mags = spectrum.magnitudes()
        points = spectrum.points
        near = np.abs(points - 2 * math.log(2)) < 0.05
        gap = (points > 1.6) & (points < 2.0)
        self.assertGreater(mags[near].max(), 3 * np.median(mags[gap]))
        self.assertEqual(spectrum.metadata["source_r_max"], 200.0)
        self.assertTrue(spectrum.metadata["strip_f_factor"])


@pytest.mark.slow
class TestSojournSpectrum(unittest.TestCase):
    """Test the peaks of the stripped coefficient on the full grid."""

    R_MAX = 500.0
    COUNT = 2**14
    TARGETS = [2 * math.log(n) for n in (2, 3, 4, 5)]

    @classmethod
    def setUpClass(cls):
        """Scan once per window and once at double the sample count."""
        cls.samples = sample_phi(
            cls.R_MAX, cls.COUNT, "gaussian", strip_f_factor=True, threads=4
        )
        cls.gaussian = detect_peaks(windowed_fft(cls.samples))
        cls.hann = detect_peaks(
            scan_spectrum(cls.R_MAX, cls.COUNT, "hann", threads=4)
        )
        cls.fine = detect_peaks(
            scan_spectrum(cls.R_MAX, 2 * cls.COUNT, "gaussian", threads=4)
        )

    def assertFirstPeaksNear(self, report, targets, tolerance):
        locations = report.locations()[: len(targets)]
        self.assertEqual(len(locations), len(targets))
        for found, expected in zip(locations, targets):
            self.assertLess(abs(found - expected), tolerance)

    def test_first_peaks_are_sojourn_times(self):
        """Test the first four peaks lie within a bin of 2 ln n."""
        self.assertAlmostEqual(
            self.gaussian.resolution, 2 * math.pi / (2 * self.R_MAX)
        )
        self.assertFirstPeaksNear(
            self.gaussian, self.TARGETS, self.gaussian.resolution
        )

    def test_window_independence(self):
        """Test Hann and Gaussian windows find the same first peaks."""
        self.assertFirstPeaksNear(
            self.hann, self.TARGETS, self.gaussian.resolution
        )
        self.assertFirstPeaksNear(
            self.hann,
            self.gaussian.locations()[:4],
            self.gaussian.resolution,
        )

    def test_resolution_doubling(self):
        """Test doubling the sample count keeps the first peaks."""
        self.assertFirstPeaksNear(
            self.fine,
            self.gaussian.locations()[:4],
            self.gaussian.resolution,
        )

    def test_sl3_support_matches_rank_one(self):
        """Test the (12) support is (T, T, 0) over the rank-one peaks."""
        values = self.samples.values
        support = sl3_singular_support(
            Permutation.from_label("12"),
            self.R_MAX,
            self.COUNT,
            "gaussian",
            phi=lambda r: values,
        )
        self.assertEqual([v[0] for v in support], self.gaussian.locations())
        for t1, t2, t3 in support:
            self.assertEqual(t1, t2)
            self.assertEqual(t3, 0.0)
        self.assertLess(abs(support[0][0] - self.TARGETS[0]),
                        self.gaussian.resolution)


class TestSL3(unittest.TestCase):
    """Test the reduction of SL(3) coefficients to rank one."""

    def test_reduce(self):
        """Test r = (eta_a - eta_b) / 2."""
        s1 = Permutation.from_label("12")
        s2 = Permutation.from_label("23")
        self.assertEqual(sl3_reduce(s1, (3.0, 1.0, -4.0)), 1.0)
        self.assertEqual(sl3_reduce(s2, (3.0, 1.0, -4.0)), 2.5)

    def test_reduce_rejects_non_simple(self):
        """Test (13) and 3-cycles are rejected."""
        for label in ("13", "123"):
            with self.assertRaises(NotTranspositionError):
                sl3_reduce(Permutation.from_label(label), (1.0, 2.0, 3.0))

    def test_check(self):
        """Test C(w, i eta) equals Phi(r)."""
        for label in ("12", "23"):
            for eta in ((3.0, 1.0, -4.0), (10.0, -7.5, 2.0)):
                w = Permutation.from_label(label)
                self.assertLess(sl3_check(w, eta), 1e-12)

    def test_singular_support_pattern(self):
        """Test detected T maps to (T, T, 0) and (0, T, T)."""
        phi = tones([2.0])
        support = sl3_singular_support(
            Permutation.from_label("12"), 200.0, 4096, phi=phi
        )
        self.assertEqual(len(support), 1)
        t1, t2, t3 = support[0]
        self.assertAlmostEqual(t1, 2.0, delta=0.02)
        self.assertEqual(t1, t2)
        self.assertEqual(t3, 0.0)

        support = sl3_singular_support(
            Permutation.from_label("23"), 200.0, 4096, phi=phi
        )
        self.assertEqual(support[0][0], 0.0)

    def test_unsupported_permutation(self):
        """Test (13) has no pattern."""
        with self.assertRaises(UnsupportedPermutationError):
            sl3_singular_support(
                Permutation.from_label("13"), 200.0, 4096, phi=tones([2.0])
            )


if __name__ == "__main__":
    unittest.main()
