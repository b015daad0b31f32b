import logging
import math
import random
import sys
import time
from datetime import datetime
from enum import Enum
from typing import (Any, Callable, Dict, List, NamedTuple, Optional, TextIO,
                    Union)

import numpy as np

from chambers import (ROOT_DATUM, CartanVector, ChamberQuery, Parabolic,
                      Region, classify_point, positive_chamber_contains,
                      shifted_by_reference, shifted_chamber_contains,
                      weyl_apply)
from colors import (Colors, error, format_residual, header, highlight, info,
                    print_colored, status_mark, success)
from exactlin import (Permutation, UnimodularMatrix, bruhat_cell,
                      bruhat_decompose, bruhat_recompose)
from geodesics import (GeodesicClass, brute_force_class_counts,
                       enumerate_classes, guillemin_sum,
                       guillemin_sum_rank2, horoball_crossing_time,
                       sojourn_time_from_matrix)
from poisson import (detect_peaks, sample_phi, samples_from_function,
                     sl3_singular_support, windowed_fft)
from scatmat import (SpectralParameter3, c_rank1, c_rank2, c_rank2_via_rank1,
                     cocycle_residual, eisenstein_constant_term_check,
                     reduced_pairs)
from specfun import gamma, omega, totients


APERY_CONSTANT = 1.2020569031595942


class VerifyError(Exception):
    """Base exception for verification errors."""

    pass


class VerifyConfigurationError(VerifyError, ValueError):
    """Exception for unknown suites or malformed steps."""

    pass


class Suite(Enum):
    """Acceptance suites."""

    IDENTITIES = "identities"
    GUILLEMIN = "guillemin"
    POISSON = "poisson"
    CHAMBERS = "chambers"
    BRUHAT = "bruhat"


class CheckOutcome(NamedTuple):
    measured: float
    tolerance: float
    detail: str = ""


class VerificationStep:
    """Single acceptance criterion.

    Attributes:
        name: Criterion name
        suite: Suite the step belongs to
        check: Callable returning the measured residual and its tolerance
        metadata: Step metadata
    """

    def __init__(
        self,
        name: str,
        check: Callable[[], CheckOutcome],
        suite: Union[Suite, str] = Suite.IDENTITIES,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Initialize a verification step.

        Args:
            name: Step name
            check: Callable computing the criterion
            suite: Suite name or member
            metadata: Optional step metadata

        Raises:
            VerifyConfigurationError: If the step configuration is invalid
        """
        if not name or not name.strip():
            raise VerifyConfigurationError("Step name cannot be empty")

        if isinstance(suite, str):
            try:
                suite = Suite(suite.lower())
            except ValueError:
                raise VerifyConfigurationError(f"Invalid suite: {suite}")

        self.name = name.strip()
        self.check = check
        self.suite = suite
        self.metadata = metadata or {}
        self.logger = logging.getLogger(
            f"{self.__class__.__name__}.{self.name}"
        )

    def execute(self) -> Dict[str, Any]:
        """Run the check and report the measurement.

        Returns:
            Dictionary containing the step result; exceptions raised by the
            check are reported as a failed step
        """
        start_time = time.time()
        result: Dict[str, Any] = {
            "step_name": self.name,
            "suite": self.suite.value,
            "timestamp": datetime.now().isoformat(),
        }
        try:
            outcome = self.check()
            passed = bool(outcome.measured <= outcome.tolerance)
            result.update(
                {
                    "success": passed,
                    "measured": float(outcome.measured),
                    "tolerance": float(outcome.tolerance),
                    "detail": outcome.detail,
                }
            )
        except Exception as e:
            self.logger.error(f"Step '{self.name}' raised: {e}")
            result.update({"success": False, "error": str(e)})

        result["execution_time"] = time.time() - start_time
        level = logging.INFO if result["success"] else logging.WARNING
        self.logger.log(
            level,
            f"Step '{self.name}' "
            f"{'passed' if result['success'] else 'failed'} in "
            f"{result['execution_time']:.2f}s",
        )
        return result

    def __str__(self) -> str:
        return (
            f"VerificationStep(name='{self.name}', "
            f"suite={self.suite.value})"
        )


class VerificationSuite:
    """Ordered collection of acceptance steps.

    Attributes:
        name: Suite name
        seed: Seed used for randomized samples
        steps: Steps in execution order
    """

    def __init__(self, name: str, seed: int = 0) -> None:
        if not name or not name.strip():
            raise VerifyConfigurationError("Suite name cannot be empty")
        self.name = name.strip()
        self.seed = seed
        self.steps: List[VerificationStep] = []
        self.logger = logging.getLogger(
            f"{self.__class__.__name__}.{self.name}"
        )

    def add_step(
        self,
        name: str,
        check: Callable[[], CheckOutcome],
        suite: Union[Suite, str] = Suite.IDENTITIES,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "VerificationSuite":
        """Add a step; returns self for chaining."""
        self.steps.append(VerificationStep(name, check, suite, metadata))
        self.logger.debug(f"Added step '{name}'")
        return self

    def execute(self, stop_on_error: bool = False) -> Dict[str, Any]:
        """Run every step in order.

        Args:
            stop_on_error: Stop after the first failing step

        Returns:
            Report with per-step results, counts and overall success

        Raises:
            VerifyConfigurationError: If the suite has no steps
        """
        if not self.steps:
            raise VerifyConfigurationError("Suite has no steps to execute")

        start_time = time.time()
        report: Dict[str, Any] = {
            "suite": self.name,
            "seed": self.seed,
            "steps": [],
            "start_time": datetime.now().isoformat(),
        }
        self.logger.info(
            f"Running suite '{self.name}' with {len(self.steps)} steps"
        )
        for step in self.steps:
            step_result = step.execute()
            report["steps"].append(step_result)
            if stop_on_error and not step_result["success"]:
                break

        report["passed"] = sum(1 for s in report["steps"] if s["success"])
        report["total"] = len(self.steps)
        report["success"] = report["passed"] == report["total"]
        report["failed"] = [
            s["step_name"] for s in report["steps"] if not s["success"]
        ]
        report["execution_time"] = time.time() - start_time
        if report["success"]:
            self.logger.info(
                f"Suite '{self.name}' passed in "
                f"{report['execution_time']:.2f}s"
            )
        else:
            self.logger.error(
                f"Suite '{self.name}' failed: {', '.join(report['failed'])}"
            )
        return report

    def __len__(self) -> int:
        return len(self.steps)


def _max(values: List[float]) -> float:
    return max(values) if values else 0.0


def _random_lambda(rng: random.Random) -> SpectralParameter3:
    # Re(lambda_a - lambda_b) >= 1.5 for every a < b
    d12 = complex(rng.uniform(1.5, 4.0), rng.uniform(-5.0, 5.0))
    d23 = complex(rng.uniform(1.5, 4.0), rng.uniform(-5.0, 5.0))
    return SpectralParameter3.centered([d12 + d23, d23, 0])


def _add_identity_steps(suite: VerificationSuite, rng: random.Random) -> None:
    def functional_equation() -> CheckOutcome:
        residuals = []
        for re in np.linspace(-1.0, 2.0, 10):
            for im in np.linspace(-50.0, 50.0, 20):
                s = complex(re, im)
                if abs(s) < 0.05 or abs(s - 1) < 0.05:
                    continue
                value = omega(s)
                residuals.append(abs(value - omega(1 - s)) / (1 + abs(value)))
        return CheckOutcome(_max(residuals), 1e-10)

    def conjugation() -> CheckOutcome:
        residuals = []
        for _ in range(50):
            s = complex(rng.uniform(-1.0, 2.0), rng.uniform(-50.0, 50.0))
            value = omega(s)
            drift = abs(omega(s.conjugate()) - value.conjugate())
            residuals.append(drift / (1 + abs(value)))
        return CheckOutcome(_max(residuals), 1e-12)

    def gamma_recurrence() -> CheckOutcome:
        residuals = []
        for _ in range(50):
            s = complex(rng.uniform(0.1, 10.0), rng.uniform(-30.0, 30.0))
            value = gamma(s)
            residuals.append(abs(gamma(s + 1) - s * value) / abs(s * value))
        return CheckOutcome(_max(residuals), 1e-11)

    def reflection() -> CheckOutcome:
        residuals = []
        for _ in range(50):
            s = complex(rng.uniform(0.1, 0.9), rng.uniform(-20.0, 20.0))
            product = c_rank1(s).value * c_rank1(1 - s).value
            residuals.append(abs(product - 1))
        return CheckOutcome(_max(residuals), 1e-10)

    def anchored_value() -> CheckOutcome:
        expected = 45 * APERY_CONSTANT / math.pi**3
        return CheckOutcome(abs(c_rank1(2).value - expected), 1e-12)

    def unitarity() -> CheckOutcome:
        residuals = [
            abs(abs(c_rank1(complex(0.5, r)).value) - 1)
            for r in (0.5, 1.0, 5.0, 50.0, 500.0)
        ]
        return CheckOutcome(_max(residuals), 1e-9)

    def cocycle() -> CheckOutcome:
        pairs = list(reduced_pairs())
        residuals = []
        for _ in range(100):
            lam = _random_lambda(rng)
            residuals.extend(cocycle_residual(w1, w2, lam) for w1, w2 in pairs)
        return CheckOutcome(_max(residuals), 1e-10, f"{len(pairs)} pairs")

    def factorization() -> CheckOutcome:
        transpositions = [
            Permutation.from_label(x) for x in ("12", "23", "13")
        ]
        residuals = []
        for _ in range(100):
            lam = _random_lambda(rng)
            for w in transpositions:
                direct = c_rank2(w, lam).value
                via = c_rank2_via_rank1(w, lam).value
                residuals.append(abs(direct - via) / abs(direct))
        return CheckOutcome(_max(residuals), 1e-13)

    def constant_term() -> CheckOutcome:
        residual = eisenstein_constant_term_check(3.0, 2, 10_000)
        return CheckOutcome(residual, 1e-6)

    (
        suite.add_step("omega functional equation", functional_equation)
        .add_step("omega conjugation symmetry", conjugation)
        .add_step("gamma recurrence", gamma_recurrence)
        .add_step("reflection C(s)C(1-s) = 1", reflection)
        .add_step("anchored value C(2) = 45 zeta(3) / pi^3", anchored_value)
        .add_step("critical-line unitarity", unitarity)
        .add_step("cocycle over reduced pairs", cocycle)
        .add_step("rank-two factorization", factorization)
        .add_step("Eisenstein constant term", constant_term)
    )


def _add_guillemin_steps(suite: VerificationSuite, rng: random.Random) -> None:
    table = enumerate_classes(1000)

    def series(sigma: float, n: int) -> Callable[[], CheckOutcome]:
        def check() -> CheckOutcome:
            series_value = guillemin_sum(sigma, n, table)
            residual = abs(series_value - c_rank1(sigma).value)
            return CheckOutcome(residual, 2 / n ** (2 * sigma - 2))

        return check

    def rank_two_series() -> CheckOutcome:
        transpositions = [
            Permutation.from_label(x) for x in ("12", "23", "13")
        ]
        residuals = []
        for _ in range(20):
            # Re(lambda_a - lambda_b) >= 3 keeps every factor at sigma >= 2
            d12 = complex(rng.uniform(3.0, 5.0), rng.uniform(-5.0, 5.0))
            d23 = complex(rng.uniform(3.0, 5.0), rng.uniform(-5.0, 5.0))
            lam = SpectralParameter3.centered([d12 + d23, d23, 0])
            for w in transpositions:
                direct = c_rank2(w, lam).value
                series = guillemin_sum_rank2(w, lam, 1000, table)
                residuals.append(abs(series - direct) / abs(direct))
        return CheckOutcome(_max(residuals), 1e-5, "N=1000")

    def multiplicity_law() -> CheckOutcome:
        counts = brute_force_class_counts(50)
        phi = totients(50)
        mismatches = sum(1 for c, k in counts.items() if k != phi[c])
        return CheckOutcome(float(mismatches), 0.0, "c <= 50")

    def geometry_oracle() -> CheckOutcome:
        residuals = []
        for _ in range(20):
            c = rng.randint(1, 30)
            a = rng.choice([a for a in range(c) if math.gcd(a, c) == 1])
            expected = sojourn_time_from_matrix(
                GeodesicClass(c, a).representative()
            )
            for height in (10.0, 100.0):
                crossing = horoball_crossing_time(c, a, height)
                residuals.append(abs(crossing.normalized - expected))
        return CheckOutcome(_max(residuals), 1e-9)

    for sigma in (2.0, 2.5, 3.0):
        for n in (100, 1000):
            suite.add_step(
                f"Guillemin series sigma={sigma} N={n}",
                series(sigma, n),
                Suite.GUILLEMIN,
            )
    suite.add_step(
        "rank-two Guillemin series", rank_two_series, Suite.GUILLEMIN
    )
    suite.add_step("multiplicity law", multiplicity_law, Suite.GUILLEMIN)
    suite.add_step(
        "horoball geometry oracle", geometry_oracle, Suite.GUILLEMIN
    )


SOJOURN_TARGETS = [2 * math.log(n) for n in (2, 3, 4, 5)]


def _first_peak_error(locations: List[float], targets: List[float]) -> float:
    if len(locations) < len(targets):
        return math.inf
    return _max([abs(a - b) for a, b in zip(locations, targets)])


def _add_poisson_steps(
    suite: VerificationSuite,
    rng: random.Random,
    r_max: float = 500.0,
    count: int = 2**14,
) -> None:
    cache: Dict[str, Any] = {}

    def peaks(window: str, size: int) -> Any:
        key = f"{window}:{size}"
        if key not in cache:
            samples = sample_phi(r_max, size, window, strip_f_factor=True)
            cache[f"samples:{key}"] = samples
            cache[key] = detect_peaks(windowed_fft(samples))
        return cache[key]

    def sojourn_peaks() -> CheckOutcome:
        report = peaks("gaussian", count)
        drift = _first_peak_error(report.locations(), SOJOURN_TARGETS)
        return CheckOutcome(drift, report.resolution)

    def unitarity_health() -> CheckOutcome:
        peaks("gaussian", count)
        samples = cache[f"samples:gaussian:{count}"]
        return CheckOutcome(samples.metadata["unitarity_deviation"], 1e-8)

    def window_swap() -> CheckOutcome:
        gaussian = peaks("gaussian", count)
        hann = peaks("hann", count)
        drift = _first_peak_error(hann.locations(), gaussian.locations()[:4])
        return CheckOutcome(drift, gaussian.resolution)

    def resolution_doubling() -> CheckOutcome:
        coarse = peaks("gaussian", count)
        fine = peaks("gaussian", 2 * count)
        drift = _first_peak_error(fine.locations(), coarse.locations()[:4])
        return CheckOutcome(drift, coarse.resolution)

    def synthetic_completeness() -> CheckOutcome:
        phi = totients(8)
        tones = [(2 * math.log(n), phi[n] / n) for n in range(2, 9)]

        def planted(r: np.ndarray) -> np.ndarray:
            return sum(amp * np.exp(-1j * t * r) for t, amp in tones)

        spectrum = windowed_fft(samples_from_function(planted, r_max, count))
        report = detect_peaks(spectrum)
        if len(report.peaks) != len(tones):
            return CheckOutcome(math.inf, report.resolution,
                                f"{len(report.peaks)} peaks")
        drift = _first_peak_error(report.locations(), [t for t, _ in tones])
        return CheckOutcome(drift, report.resolution)

    def sl3_invariance() -> CheckOutcome:
        w = Permutation.from_label("12")
        residuals = []
        for _ in range(100):
            gap = rng.uniform(0.5, 40.0)
            shift, shift_other = rng.uniform(-20, 20), rng.uniform(-20, 20)
            eta = [shift + gap, shift, rng.uniform(-20, 20)]
            other = [shift_other + gap, shift_other, rng.uniform(-20, 20)]
            lam = SpectralParameter3.centered([1j * x for x in eta])
            lam_other = SpectralParameter3.centered([1j * x for x in other])
            residuals.append(
                abs(c_rank2(w, lam).value - c_rank2(w, lam_other).value)
            )
        return CheckOutcome(_max(residuals), 1e-10)

    def sl3_pattern() -> CheckOutcome:
        vectors = sl3_singular_support(
            Permutation.from_label("12"), r_max, count, "gaussian"
        )
        pattern_error = _max([abs(v[0] - v[1]) + abs(v[2]) for v in vectors])
        location_error = _first_peak_error(
            [v[0] for v in vectors], SOJOURN_TARGETS
        )
        return CheckOutcome(
            max(pattern_error, location_error), 2 * math.pi / (2 * r_max)
        )

    (
        suite.add_step("sojourn peaks at 2 ln n", sojourn_peaks, Suite.POISSON)
        .add_step("unitarity health", unitarity_health, Suite.POISSON)
        .add_step("window independence", window_swap, Suite.POISSON)
        .add_step("resolution doubling", resolution_doubling, Suite.POISSON)
        .add_step("synthetic completeness", synthetic_completeness,
                  Suite.POISSON)
        .add_step("SL(3) reduction invariance", sl3_invariance, Suite.POISSON)
        .add_step("SL(3) singular-support pattern", sl3_pattern,
                  Suite.POISSON)
    )


def _random_cartan(rng: random.Random) -> CartanVector:
    h1, h2 = rng.uniform(-5, 5), rng.uniform(-5, 5)
    return CartanVector(h1, h2, -(h1 + h2))


def _add_chamber_steps(suite: VerificationSuite, rng: random.Random) -> None:
    elements = Permutation.all(3)

    def tiling() -> CheckOutcome:
        failures = 0
        for _ in range(10_000):
            h = _random_cartan(rng)
            hits = sum(
                1
                for w in elements
                if positive_chamber_contains(weyl_apply(w, h))
            )
            failures += hits != 1
        return CheckOutcome(float(failures), 0.0)

    def shift_consistency() -> CheckOutcome:
        failures = 0
        for _ in range(10_000):
            h, r = _random_cartan(rng), rng.uniform(0.01, 8.0)
            direct = shifted_chamber_contains(ChamberQuery(Parabolic.P0, r), h)
            shifted = positive_chamber_contains(shifted_by_reference(h, r))
            failures += direct != shifted
        return CheckOutcome(float(failures), 0.0)

    def monotonicity() -> CheckOutcome:
        failures = 0
        for _ in range(1000):
            h, r = _random_cartan(rng), rng.uniform(0.01, 8.0)
            if shifted_chamber_contains(ChamberQuery(Parabolic.P0, r), h):
                smaller = r * rng.uniform(0.01, 0.99)
                failures += not shifted_chamber_contains(
                    ChamberQuery(Parabolic.P0, smaller), h
                )
        return CheckOutcome(float(failures), 0.0)

    def classification_total() -> CheckOutcome:
        failures = 0
        for _ in range(1000):
            h, r = _random_cartan(rng), rng.uniform(0.01, 8.0)
            first = classify_point(h, r)
            again = classify_point(h, r)
            failures += not isinstance(first, Region) or first != again
        return CheckOutcome(float(failures), 0.0)

    def classification_weyl_invariant() -> CheckOutcome:
        failures = 0
        for _ in range(200):
            h, r = _random_cartan(rng), rng.uniform(0.01, 8.0)
            region = classify_point(h, r)
            failures += sum(
                classify_point(weyl_apply(w, h), r) is not region
                for w in Permutation.all(3)
            )
        return CheckOutcome(float(failures), 0.0)

    def halfsum() -> CheckOutcome:
        return CheckOutcome(0.0 if ROOT_DATUM.check_halfsum() else 1.0, 0.0)

    (
        suite.add_step("Weyl chamber tiling", tiling, Suite.CHAMBERS)
        .add_step("shifted chamber consistency", shift_consistency,
                  Suite.CHAMBERS)
        .add_step("monotonicity in r", monotonicity, Suite.CHAMBERS)
        .add_step("classification is total", classification_total,
                  Suite.CHAMBERS)
        .add_step("classification is Weyl invariant",
                  classification_weyl_invariant, Suite.CHAMBERS)
        .add_step("half-sum identity", halfsum, Suite.CHAMBERS)
    )


def _add_bruhat_steps(suite: VerificationSuite, rng: random.Random) -> None:
    def round_trip() -> CheckOutcome:
        failures = 0
        for n in (2, 3):
            for _ in range(1000):
                g = UnimodularMatrix.random(n, rng)
                failures += bruhat_recompose(bruhat_decompose(g)) != g
        return CheckOutcome(float(failures), 0.0, "1000 each of n=2,3")

    def cell_oracle() -> CheckOutcome:
        failures = 0
        for n in (2, 3):
            for _ in range(200):
                g = UnimodularMatrix.random(n, rng)
                failures += bruhat_decompose(g).w != bruhat_cell(g)
        return CheckOutcome(float(failures), 0.0)

    (
        suite.add_step("Bruhat round trip", round_trip, Suite.BRUHAT)
        .add_step("Bruhat cell oracle", cell_oracle, Suite.BRUHAT)
    )


SuiteBuilder = Callable[[VerificationSuite, random.Random], None]

SUITE_BUILDERS: Dict[Suite, SuiteBuilder] = {
    Suite.IDENTITIES: _add_identity_steps,
    Suite.GUILLEMIN: _add_guillemin_steps,
    Suite.POISSON: _add_poisson_steps,
    Suite.CHAMBERS: _add_chamber_steps,
    Suite.BRUHAT: _add_bruhat_steps,
}

SUITE_NAMES = [s.value for s in Suite] + ["all"]


def build_suite(name: str, seed: int = 0) -> VerificationSuite:
    """Build a named acceptance suite, or every suite for 'all'.

    Raises:
        VerifyConfigurationError: If the name is unknown
    """
    key = name.strip().lower()
    if key not in SUITE_NAMES:
        raise VerifyConfigurationError(
            f"Unknown suite {name!r}; choose from {SUITE_NAMES}"
        )
    members = list(Suite) if key == "all" else [Suite(key)]
    suite = VerificationSuite(key, seed)
    for member in members:
        SUITE_BUILDERS[member](suite, random.Random(f"{seed}:{member.value}"))
    return suite


def print_report(
    report: Dict[str, Any], stream: Optional[TextIO] = None
) -> None:
    """Colored pass/fail listing with a passed/total summary.

    Args:
        report: Result of VerificationSuite.execute
        stream: Destination (default: stderr)
    """
    out = stream or sys.stderr
    print_colored("\n" + "=" * 60, Colors.CYAN, Colors.BOLD, file=out)
    print_colored(
        f"VERIFICATION: {report['suite'].upper()}",
        Colors.CYAN,
        Colors.BOLD,
        file=out,
    )
    print_colored("=" * 60, Colors.CYAN, Colors.BOLD, file=out)

    for step in report["steps"]:
        if "error" in step:
            detail = error(f"raised {step['error']}")
        else:
            detail = format_residual(step["measured"], step["tolerance"])
            if step.get("detail"):
                detail += f" ({step['detail']})"
        print(
            f"{status_mark(step['success'])} "
            f"{info(step['step_name'] + ':')} {detail}",
            file=out,
        )

    print_colored("\n" + "-" * 60, Colors.YELLOW, file=out)
    ratio = f"{report['passed']}/{report['total']}"
    print(
        f"{header('Summary:')} {highlight(ratio)} "
        f"criteria passed in {report['execution_time']:.1f}s",
        file=out,
    )
    if report["success"]:
        print(success("✓ All criteria passed", True), file=out)
    else:
        failed = ", ".join(report["failed"])
        print(error(f"✗ Failed: {failed}", True), file=out)
