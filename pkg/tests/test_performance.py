import random
import sys
import time
import unittest
from pathlib import Path

import numpy as np

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from exactlin import UnimodularMatrix, bruhat_decompose, bruhat_recompose
from geodesics import enumerate_classes, guillemin_sum
from poisson import detect_peaks, samples_from_function, windowed_fft
from scatmat import c_rank1


class TestEnumerationPerformance(unittest.TestCase):
    """Test enumeration and series evaluation at realistic sizes."""

    def test_large_enumeration(self):
        """Test enumerating classes up to c = 10000 stays fast."""
        start_time = time.time()
        table = enumerate_classes(10_000)
        elapsed = time.time() - start_time

        self.assertEqual(len(table.rows), 10_000)
        self.assertLess(elapsed, 30.0)

    def test_guillemin_reuses_table(self):
        """Test repeated series evaluations share one table."""
        table = enumerate_classes(5000)
        start_time = time.time()
        for sigma in (1.5, 2.0, 2.5, 3.0) * 5:
            guillemin_sum(sigma, 5000, table)
        self.assertLess(time.time() - start_time, 5.0)


class TestExactArithmeticPerformance(unittest.TestCase):
    """Test Bruhat decompositions in bulk."""

    def test_bulk_round_trip(self):
        """Test 2000 decompositions with exact recomposition."""
        rng = random.Random(0)
        start_time = time.time()
        for n in (2, 3):
            for _ in range(1000):
                g = UnimodularMatrix.random(n, rng, steps=12, bound=5)
                self.assertEqual(bruhat_recompose(bruhat_decompose(g)), g)
        self.assertLess(time.time() - start_time, 60.0)


class TestSpectralPerformance(unittest.TestCase):
    """Test transform and sampling throughput."""

    def test_large_transform(self):
        """Test a 2^16-point transform and peak search."""
        samples = samples_from_function(
            lambda r: np.exp(-2j * r), 1000.0, 2**16
        )
        start_time = time.time()
        report = detect_peaks(windowed_fft(samples))
        self.assertLess(time.time() - start_time, 30.0)
        self.assertEqual(len(report.peaks), 1)

    def test_rank1_far_up_the_line(self):
        """Test 200 evaluations near r = 2000 stay fast and unitary."""
        start_time = time.time()
        for k in range(200):
            value = c_rank1(complex(0.5, 1800.0 + k)).value
            self.assertAlmostEqual(abs(value), 1.0, delta=1e-8)
        self.assertLess(time.time() - start_time, 60.0)


if __name__ == "__main__":
    unittest.main()
