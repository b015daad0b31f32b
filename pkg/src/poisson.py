import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import (Any, Callable, Dict, List, Optional, Sequence, Tuple,
                    Union)

import numpy as np
from scipy.signal import find_peaks, windows

from exactlin import Permutation
from scatmat import (NotTranspositionError, SpectralParameter3, c_rank1,
                     c_rank2)
from specfun import DEFAULT_OPTIONS, DomainError, EvalOptions, f_factor

logger = logging.getLogger(__name__)

R_MAX_ENVELOPE = 2000.0
MIN_COUNT = 2**10
DEFAULT_THRESHOLD_RATIO = 5.0
DEFAULT_RELATIVE_FLOOR = 1e-3
DEFAULT_PROMINENCE_RATIO = 0.1
MIN_PEAK_LOCATION = 0.25
UNITARITY_HEALTH_TOLERANCE = 1e-8
THREADS_ENV = "SCATTERFLAT_THREADS"


class PoissonError(Exception):
    """Base exception for spectral sampling and peak detection."""

    pass


class SamplingPreconditionError(PoissonError, ValueError):
    """Exception for grids outside the supported shapes."""

    pass


class UnsupportedPermutationError(PoissonError, ValueError):
    """Exception for permutations without an SL(3) support pattern."""

    pass


class WindowKind(Enum):
    """Taper applied before the Fourier transform."""

    GAUSSIAN = "gaussian"
    HANN = "hann"
    NONE = "none"


@dataclass(frozen=True)
class Window:
    """Window choice; a Gaussian without sigma uses r_max / 4.

    Attributes:
        kind: Window family
        sigma: Gaussian standard deviation in r units
    """

    kind: WindowKind = WindowKind.GAUSSIAN
    sigma: Optional[float] = None

    @classmethod
    def parse(cls, value: Union["Window", str, None]) -> "Window":
        if isinstance(value, Window):
            return value
        if value is None:
            return cls()
        try:
            return cls(WindowKind(str(value).strip().lower()))
        except ValueError as e:
            raise SamplingPreconditionError(f"Unknown window: {value}") from e

    def weights(self, count: int, half_width: float) -> np.ndarray:
        """Window values on a symmetric grid of the given half-width."""
        if self.kind is WindowKind.NONE:
            return np.ones(count)
        if self.kind is WindowKind.HANN:
            return windows.hann(count, sym=True)
        sigma = self.sigma if self.sigma is not None else half_width / 4
        step = 2 * half_width / (count - 1)
        return windows.gaussian(count, std=sigma / step, sym=True)

    def describe(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is WindowKind.GAUSSIAN:
            result["sigma"] = self.sigma
        return result


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class SpectralSamples:
    """Values on a uniform grid, in the r domain or the dual zeta domain.

    Attributes:
        points: Grid points, uniformly spaced
        values: Complex samples
        window: Window the samples are meant to be (or were) tapered with
        excluded_points: Grid points whose value was a pole, zeroed
        domain: "r" or "zeta"
        metadata: Health metrics and provenance
    """

    points: np.ndarray
    values: np.ndarray
    window: Window = field(default_factory=Window)
    excluded_points: Tuple[float, ...] = ()
    domain: str = "r"
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.points) != len(self.values):
            raise SamplingPreconditionError(
                "points and values differ in length"
            )
        if not _is_power_of_two(len(self.points)):
            raise SamplingPreconditionError(
                f"count must be a power of two, got {len(self.points)}"
            )
        steps = np.diff(self.points)
        if len(steps) and not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise SamplingPreconditionError("grid spacing is not uniform")

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def r_min(self) -> float:
        return float(self.points[0])

    @property
    def r_max(self) -> float:
        return float(self.points[-1])

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / (self.count - 1)

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def to_rows(self) -> List[Tuple[float, float, float, float]]:
        """(point, |value|, Re, Im) rows."""
        return [
            (float(p), float(abs(v)), float(v.real), float(v.imag))
            for p, v in zip(self.points, self.values)
        ]

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[float]],
        domain: str = "zeta",
        window: Optional[Window] = None,
    ) -> "SpectralSamples":
        """Rebuild samples from (point, |value|, Re, Im) rows."""
        table = np.asarray(rows, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] < 4:
            raise SamplingPreconditionError("rows need four columns")
        return cls(
            points=table[:, 0],
            values=table[:, 2] + 1j * table[:, 3],
            window=window or Window(),
            domain=domain,
        )


@dataclass(frozen=True)
class Peak:
    location: float
    magnitude: float


@dataclass(frozen=True)
class PeakReport:
    """Detected peaks, sorted by location.

    Attributes:
        peaks: Refined peak locations and magnitudes
        resolution: Bin width 2 pi / (r_max - r_min) of the source grid
        threshold: Magnitude a peak had to exceed
        prominence: Rise above the local background a peak needed
    """

    peaks: Tuple[Peak, ...]
    resolution: float
    threshold: float = 0.0
    prominence: float = 0.0

    def locations(self) -> List[float]:
        return [p.location for p in self.peaks]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "peaks": [
                {"location": p.location, "magnitude": p.magnitude}
                for p in self.peaks
            ],
            "resolution": self.resolution,
            "threshold": self.threshold,
            "prominence": self.prominence,
        }


def worker_count(threads: Optional[int] = None) -> int:
    """Worker cap from the argument, else SCATTERFLAT_THREADS, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
            threads = 1
    return max(1, threads)


def symmetric_grid(r_max: float, count: int) -> np.ndarray:
    """count points from -r_max to r_max; an even count never hits 0."""
    return np.linspace(-r_max, r_max, count)


def _check_grid(r_max: float, count: int) -> None:
    if not r_max > 0:
        raise SamplingPreconditionError(f"r_max must be positive, got {r_max}")
    if r_max > R_MAX_ENVELOPE:
        raise DomainError(
            f"r_max={r_max} exceeds the accuracy envelope {R_MAX_ENVELOPE}"
        )
    if count < MIN_COUNT or not _is_power_of_two(count):
        raise SamplingPreconditionError(
            f"count must be a power of two >= {MIN_COUNT}, got {count}"
        )


def sample_phi(
    r_max: float,
    count: int,
    window: Union[Window, str, None] = None,
    strip_f_factor: bool = False,
    threads: Optional[int] = None,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> SpectralSamples:
    """Sample Phi(r) = C(1/2 + ir) on a symmetric power-of-two grid.

    Args:
        r_max: Half-width, at most 2000
        count: Power of two, at least 1024
        window: Window to record for the transform
        strip_f_factor: Divide by F(1/2 + ir), leaving the Dirichlet
            factor whose transform is a sum of point masses
        threads: Worker count (defaults to SCATTERFLAT_THREADS)
        opts: Special-function options

    Returns:
        Samples with the unitarity deviation in metadata

    Raises:
        DomainError: If r_max exceeds the envelope
        SamplingPreconditionError: If count is not an allowed size
    """
    _check_grid(r_max, count)
    points = symmetric_grid(r_max, count)

    def evaluate(r: float) -> complex:
        value = c_rank1(complex(0.5, r), opts, strict=False)
        return value.value

    workers = worker_count(threads)
    logger.info(
        f"Sampling Phi on [-{r_max}, {r_max}] with {count} points, "
        f"{workers} worker(s)"
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = np.array(list(executor.map(evaluate, points)))
    else:
        values = np.array([evaluate(r) for r in points])

    poles = np.isnan(values)
    excluded = tuple(float(r) for r in points[poles])
    values[poles] = 0
    deviation = float(np.max(np.abs(np.abs(values[~poles]) - 1.0)))
    if deviation > UNITARITY_HEALTH_TOLERANCE:
        logger.warning(f"Unitarity deviation {deviation:.3e} on the grid")

    if strip_f_factor:
        values = values / np.array(
            [f_factor(complex(0.5, r), continued=True) for r in points]
        )

    return SpectralSamples(
        points=points,
        values=values,
        window=Window.parse(window),
        excluded_points=excluded,
        domain="r",
        metadata={
            "unitarity_deviation": deviation,
            "strip_f_factor": strip_f_factor,
            "r_max": r_max,
        },
    )


def samples_from_function(
    phi: Callable[[np.ndarray], np.ndarray],
    r_max: float,
    count: int,
    window: Union[Window, str, None] = None,
) -> SpectralSamples:
    """Samples of an arbitrary vectorized function on the standard grid."""
    _check_grid(r_max, count)
    points = symmetric_grid(r_max, count)
    values = np.asarray(phi(points), dtype=np.complex128)
    if values.shape == ():
        values = np.full(count, complex(values))
    return SpectralSamples(
        points=points, values=values, window=Window.parse(window)
    )


def windowed_fft(samples: SpectralSamples) -> SpectralSamples:
    """Windowed transform dr * sum_k w(r_k) v(r_k) e^(i zeta r_k).

    A tone e^(-iTr) peaks at zeta = +T. The dual grid has spacing
    2 pi / (count * dr) and is returned in increasing order.
    """
    if samples.domain != "r":
        raise SamplingPreconditionError(
            "windowed_fft expects r-domain samples"
        )
    n = samples.count
    step = samples.spacing
    half_width = (samples.r_max - samples.r_min) / 2
    tapered = samples.window.weights(n, half_width) * samples.values

    zeta = 2 * np.pi * np.fft.fftfreq(n, d=step)
    transform = n * np.fft.ifft(tapered)
    transform = step * np.exp(1j * zeta * samples.r_min) * transform

    metadata = dict(samples.metadata)
    metadata.update(
        {"source_r_min": samples.r_min, "source_r_max": samples.r_max}
    )
    return SpectralSamples(
        points=np.fft.fftshift(zeta),
        values=np.fft.fftshift(transform),
        window=samples.window,
        excluded_points=samples.excluded_points,
        domain="zeta",
        metadata=metadata,
    )


def detect_peaks(
    spectrum: SpectralSamples,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
    min_location: float = MIN_PEAK_LOCATION,
    relative_floor: float = DEFAULT_RELATIVE_FLOOR,
    prominence_ratio: float = DEFAULT_PROMINENCE_RATIO,
) -> PeakReport:
    """Peaks of |spectrum| that stand out from their local background.

    A local maximum qualifies when its height exceeds both threshold_ratio
    times the median magnitude and relative_floor times the largest
    magnitude, when its prominence is at least prominence_ratio times the
    largest magnitude, and when it lies beyond min_location. Each location
    is refined by a parabola through the peak bin and its neighbours.

    Args:
        spectrum: zeta-domain samples from windowed_fft
        threshold_ratio: Height threshold against the median magnitude
        min_location: Peaks at or below this location are dropped
        relative_floor: Height floor as a fraction of the largest magnitude
        prominence_ratio: Prominence floor as a fraction of the largest
            magnitude; ripple on the flank of a peak never reaches it

    Returns:
        Refined peaks sorted by location

    Raises:
        SamplingPreconditionError: If a ratio is out of range
    """
    if threshold_ratio <= 0:
        raise SamplingPreconditionError("threshold_ratio must be positive")
    if not 0 <= prominence_ratio < 1:
        raise SamplingPreconditionError("prominence_ratio must be in [0, 1)")
    mags = spectrum.magnitudes()
    zeta = spectrum.points
    step = spectrum.spacing
    largest = float(mags.max()) if len(mags) else 0.0
    threshold = max(
        threshold_ratio * float(np.median(mags)), relative_floor * largest
    )
    min_prominence = prominence_ratio * largest

    source_width = spectrum.metadata.get("source_r_max", 0.0) - (
        spectrum.metadata.get("source_r_min", 0.0)
    )
    resolution = 2 * np.pi / source_width if source_width else step
    if largest == 0.0:
        return PeakReport((), float(resolution), threshold, min_prominence)

    indices, _ = find_peaks(
        mags, height=threshold, prominence=min_prominence
    )
    peaks = []
    for i in indices:
        if zeta[i] <= min_location:
            continue
        left, centre, right = mags[i - 1], mags[i], mags[i + 1]
        curvature = left - 2 * centre + right
        offset = 0.5 * (left - right) / curvature if curvature else 0.0
        peaks.append(
            Peak(
                location=float(zeta[i] + offset * step),
                magnitude=float(centre - 0.25 * (left - right) * offset),
            )
        )

    logger.debug(
        f"Detected {len(peaks)} peaks above {threshold:.3e} "
        f"with prominence >= {min_prominence:.3e}"
    )
    return PeakReport(
        tuple(peaks), float(resolution), threshold, min_prominence
    )


def scan_spectrum(
    r_max: float,
    count: int,
    window: Union[Window, str, None] = None,
    strip_f_factor: bool = True,
    threads: Optional[int] = None,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> SpectralSamples:
    """sample_phi followed by windowed_fft."""
    return windowed_fft(
        sample_phi(r_max, count, window, strip_f_factor, threads, opts)
    )


def _transposition_pair(w: Permutation) -> Tuple[int, int]:
    if w.n != 3 or not w.is_simple_transposition():
        raise NotTranspositionError(f"{w} is not a simple transposition")
    return w.inversions()[0]


def sl3_reduce(w: Permutation, eta: Sequence[float]) -> float:
    """r = (eta_a - eta_b) / 2 for the inversion (a, b) of w."""
    if len(eta) != 3:
        raise SamplingPreconditionError("eta needs three entries")
    a, b = _transposition_pair(w)
    return (float(eta[a - 1]) - float(eta[b - 1])) / 2


def sl3_check(
    w: Permutation, eta: Sequence[float], opts: EvalOptions = DEFAULT_OPTIONS
) -> float:
    """|C(w, i eta) - Phi(r)| with r from sl3_reduce."""
    r = sl3_reduce(w, eta)
    lam = SpectralParameter3.centered([1j * float(x) for x in eta])
    phi = c_rank1(complex(0.5, r), opts).value
    return abs(c_rank2(w, lam, opts).value - phi)


SL3_PATTERNS: Dict[str, Callable[[float], Tuple[float, float, float]]] = {
    "12": lambda t: (t, t, 0.0),
    "23": lambda t: (0.0, t, t),
}


def sl3_singular_support(
    w: Permutation,
    r_max: float,
    count: int,
    window: Union[Window, str, None] = None,
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
    prominence_ratio: float = DEFAULT_PROMINENCE_RATIO,
    phi: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    strip_f_factor: bool = True,
    threads: Optional[int] = None,
) -> List[Tuple[float, float, float]]:
    """Singular-support vectors of the three-variable transform.

    The transform factors as delta terms times the transform of Phi, so
    only Phi is transformed numerically; each detected T maps to (T, T, 0)
    for (12) and (0, T, T) for (23).

    Args:
        w: (12) or (23)
        r_max: Half-width of the Phi grid
        count: Grid size
        window: Window for the transform
        threshold_ratio: Peak threshold against the median
        prominence_ratio: Peak prominence against the largest magnitude
        phi: Replacement for Phi, for synthetic inputs
        strip_f_factor: Divide Phi by F(1/2 + ir) before transforming
        threads: Sampling worker count

    Raises:
        UnsupportedPermutationError: For any w other than (12), (23)
    """
    label = w.label()
    if label not in SL3_PATTERNS:
        raise UnsupportedPermutationError(
            f"No singular-support pattern for w={label}"
        )
    if phi is None:
        samples = sample_phi(r_max, count, window, strip_f_factor, threads)
    else:
        samples = samples_from_function(phi, r_max, count, window)
    report = detect_peaks(
        windowed_fft(samples), threshold_ratio,
        prominence_ratio=prominence_ratio,
    )
    pattern = SL3_PATTERNS[label]
    return [pattern(t) for t in report.locations()]
