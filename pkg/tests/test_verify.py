import io
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import pytest

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import specfun
from verify import (SUITE_NAMES, CheckOutcome, Suite, VerificationStep,
                    VerificationSuite, VerifyConfigurationError,
                    build_suite, print_report)

_original_zeta = specfun.zeta


def shifted_zeta(z, opts=specfun.DEFAULT_OPTIONS):
    """Zeta with an additive error of 1e-6."""
    return _original_zeta(z, opts) + 1e-6


class TestVerificationStep(unittest.TestCase):
    """Test single acceptance steps."""

    def test_passing_step(self):
        """Test measured <= tolerance passes."""
        step = VerificationStep("tiny", lambda: CheckOutcome(1e-14, 1e-12))
        result = step.execute()
        self.assertTrue(result["success"])
        self.assertEqual(result["measured"], 1e-14)
        self.assertEqual(result["suite"], "identities")
        self.assertIn("execution_time", result)

    def test_failing_step(self):
        """Test measured > tolerance fails."""
        step = VerificationStep(
            "large", lambda: CheckOutcome(1.0, 1e-3, "detail"), "bruhat"
        )
        result = step.execute()
        self.assertFalse(result["success"])
        self.assertEqual(result["detail"], "detail")
        self.assertEqual(result["suite"], "bruhat")

    def test_raising_step(self):
        """Test an exception in the check is a failed step."""

        def broken() -> CheckOutcome:
            raise ArithmeticError("boom")

        result = VerificationStep("broken", broken).execute()
        self.assertFalse(result["success"])
        self.assertEqual(result["error"], "boom")

    def test_nan_fails(self):
        """Test a NaN measurement never passes."""
        step = VerificationStep("nan", lambda: CheckOutcome(float("nan"), 1))
        self.assertFalse(step.execute()["success"])

    def test_invalid_configuration(self):
        """Test empty names and unknown suites."""
        with self.assertRaises(VerifyConfigurationError):
            VerificationStep("  ", lambda: CheckOutcome(0, 0))
        with self.assertRaises(VerifyConfigurationError):
            VerificationStep("x", lambda: CheckOutcome(0, 0), "lattice")


class TestVerificationSuite(unittest.TestCase):
    """Test suites of steps."""

    def test_execute_counts(self):
        """Test passed/total and the failed list."""
        suite = (
            VerificationSuite("custom")
            .add_step("ok", lambda: CheckOutcome(0.0, 0.0))
            .add_step("bad", lambda: CheckOutcome(2.0, 1.0))
            .add_step("ok again", lambda: CheckOutcome(0.5, 1.0))
        )
        self.assertEqual(len(suite), 3)
        report = suite.execute()
        self.assertEqual(report["passed"], 2)
        self.assertEqual(report["total"], 3)
        self.assertFalse(report["success"])
        self.assertEqual(report["failed"], ["bad"])

    def test_stop_on_error(self):
        """Test execution stops after the first failure."""
        suite = (
            VerificationSuite("custom")
            .add_step("bad", lambda: CheckOutcome(2.0, 1.0))
            .add_step("never", lambda: CheckOutcome(0.0, 0.0))
        )
        report = suite.execute(stop_on_error=True)
        self.assertEqual(len(report["steps"]), 1)
        self.assertFalse(report["success"])

    def test_empty_suite(self):
        """Test executing an empty suite raises."""
        with self.assertRaises(VerifyConfigurationError):
            VerificationSuite("empty").execute()


class TestBuildSuite(unittest.TestCase):
    """Test the named acceptance suites."""

    def test_names(self):
        """Test every suite name plus 'all' is offered."""
        self.assertEqual(
            SUITE_NAMES, [member.value for member in Suite] + ["all"]
        )
        with self.assertRaises(VerifyConfigurationError):
            build_suite("lattice")

    def test_all_contains_every_suite(self):
        """Test 'all' is the union of the individual suites."""
        total = sum(len(build_suite(member.value)) for member in Suite)
        self.assertEqual(len(build_suite("all")), total)

    def test_chambers_pass(self):
        """Test the chamber criteria pass."""
        report = build_suite("chambers", seed=1).execute()
        self.assertTrue(report["success"], report["failed"])

    def test_bruhat_pass(self):
        """Test the Bruhat criteria pass."""
        report = build_suite("Bruhat", seed=2).execute()
        self.assertTrue(report["success"], report["failed"])

    def test_identities_pass(self):
        """Test the special-function identities pass."""
        report = build_suite("identities").execute()
        self.assertTrue(report["success"], report["failed"])

    def test_faulty_zeta_is_detected(self):
        """Test a perturbed zeta breaks the identities suite."""
        with patch("specfun.zeta", shifted_zeta):
            report = build_suite("identities").execute()
        self.assertFalse(report["success"])
        self.assertIn("omega functional equation", report["failed"])
        self.assertIn(
            "anchored value C(2) = 45 zeta(3) / pi^3", report["failed"]
        )

    def test_unitarity_is_blind_to_real_zeta_shift(self):
        """Test a real zeta offset keeps |C(1/2 + ir)| = 1.

        Reflection turns Omega(2ir) into zeta(1 - 2ir), the conjugate of
        zeta(1 + 2ir), so a common real offset cancels in the modulus.
        """
        with patch("specfun.zeta", shifted_zeta):
            report = build_suite("identities").execute()
        steps = {s["step_name"]: s for s in report["steps"]}
        self.assertTrue(steps["critical-line unitarity"]["success"])


@pytest.mark.slow
class TestPoissonSuite(unittest.TestCase):
    """Test the spectral acceptance criteria on the full grid."""

    def test_poisson_pass(self):
        """Test every Poisson criterion passes."""
        report = build_suite("poisson", seed=1).execute()
        self.assertTrue(report["success"], report["failed"])
        self.assertEqual(report["passed"], report["total"])


class TestPrintReport(unittest.TestCase):
    """Test the colored report."""

    def test_summary_line(self):
        """Test the summary shows passed/total."""
        report = (
            VerificationSuite("custom")
            .add_step("ok", lambda: CheckOutcome(0.0, 0.0))
            .add_step("bad", lambda: CheckOutcome(2.0, 1.0))
            .execute()
        )
        out = io.StringIO()
        print_report(report, out)
        text = out.getvalue()
        self.assertIn("1/2", text)
        self.assertIn("bad", text)
        self.assertIn("CUSTOM", text)


if __name__ == "__main__":
    unittest.main()
