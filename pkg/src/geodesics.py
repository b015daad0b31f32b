import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import (Any, Dict, Iterator, List, NamedTuple, Optional, Tuple,
                    Union)

import numpy as np
from scipy import integrate

from exactlin import (Permutation, SojournVector, UnimodularMatrix,
                      bruhat_decompose, killing_norm, parabolic_contains,
                      sojourn_vector)
from scatmat import NotTranspositionError, SpectralParameter3
from specfun import ComplexLike, DivergenceError, f_factor, to_complex

logger = logging.getLogger(__name__)

CROSSING_TOLERANCE = 1e-9
QUAD_TOLERANCE = 1e-12
MIN_HOROBALL_HEIGHT = 2.0


class GeodesicError(Exception):
    """Base exception for geodesic computations."""

    pass


class NoScatteringGeodesicError(GeodesicError, ValueError):
    """Exception raised for matrices in the upper-triangular subgroup."""

    pass


class GeometryError(GeodesicError, ValueError):
    """Exception raised when horoballs overlap or inputs are degenerate."""

    pass


class InvalidClassError(GeodesicError, ValueError):
    """Exception for (c, a) pairs that do not label a class."""

    pass


class SojournMode(Enum):
    """Normalization of sojourn times."""

    HYPERBOLIC = "hyperbolic"
    KILLING = "killing"


@dataclass(frozen=True)
class GeodesicClass:
    """Scattering geodesic class on the modular surface.

    Classes of SL(2,Z) modulo upper-triangular translations on both
    sides, outside the translation subgroup, correspond to pairs
    (c, a mod c) with c > 0 and gcd(a, c) = 1.

    Attributes:
        c: Positive lower-left entry
        a_mod_c: Upper-left entry reduced into [0, c)
    """

    c: int
    a_mod_c: int

    def __post_init__(self) -> None:
        if self.c < 1:
            raise InvalidClassError(f"c must be positive, got {self.c}")
        if not 0 <= self.a_mod_c < self.c:
            raise InvalidClassError(f"a_mod_c must lie in [0, {self.c})")
        if math.gcd(self.a_mod_c, self.c) != 1:
            raise InvalidClassError(f"gcd({self.a_mod_c}, {self.c}) != 1")

    @property
    def sojourn_time(self) -> float:
        return 2.0 * math.log(self.c)

    def representative(self) -> UnimodularMatrix:
        """Matrix [[a, b], [c, d]] with d the inverse of a mod c."""
        a, c = self.a_mod_c, self.c
        d = 0 if c == 1 else pow(a, -1, c)
        b = (a * d - 1) // c
        return UnimodularMatrix([[a, b], [c, d]])


class EnumerationRow(NamedTuple):
    c: int
    multiplicity: int
    sojourn_time: float


@dataclass(frozen=True)
class EnumerationTable:
    """Sojourn times 2 ln c with the number of classes realizing each.

    Attributes:
        rows: One row per c in 1..c_max, increasing in c
        c_max: Largest lower-left entry enumerated
    """

    rows: Tuple[EnumerationRow, ...]
    c_max: int

    def __post_init__(self) -> None:
        times = [row.sojourn_time for row in self.rows]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GeodesicError("Sojourn times must be strictly increasing")

    def multiplicities(self) -> np.ndarray:
        return np.array(
            [row.multiplicity for row in self.rows], dtype=np.int64
        )

    def sojourn_times(self) -> np.ndarray:
        return np.array([row.sojourn_time for row in self.rows])

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {"c": row.c, "phi": row.multiplicity, "sojourn": row.sojourn_time}
            for row in self.rows
        ]


def iter_classes(c: int) -> Iterator[GeodesicClass]:
    """Every class with lower-left entry c."""
    for a in range(c):
        if math.gcd(a, c) == 1:
            yield GeodesicClass(c, a)


def enumerate_classes(c_max: int) -> EnumerationTable:
    """Tabulate classes (c, a mod c) for c = 1..c_max.

    Multiplicities count residues a coprime to c directly.

    Raises:
        GeodesicError: If c_max < 1
    """
    if c_max < 1:
        raise InvalidClassError(f"c_max must be >= 1, got {c_max}")
    rows = []
    for c in range(1, c_max + 1):
        count = int(np.count_nonzero(np.gcd(np.arange(c), c) == 1))
        rows.append(EnumerationRow(c, count, 2.0 * math.log(c)))
    logger.debug(f"Enumerated {sum(r.multiplicity for r in rows)} classes")
    return EnumerationTable(tuple(rows), c_max)


def brute_force_class_counts(c_max: int) -> Dict[int, int]:
    """Count double cosets by search over bounded matrices.

    For each c, every (a, d) with |a|, |d| <= c and ad = 1 mod c extends to
    a matrix in SL(2,Z); translations on either side shift a and d by
    multiples of c, so classes are the distinct residue pairs.
    """
    counts: Dict[int, int] = {}
    for c in range(1, c_max + 1):
        seen = set()
        for a in range(-c, c + 1):
            for d in range(-c, c + 1):
                if (a * d - 1) % c == 0:
                    seen.add((a % c, d % c))
        counts[c] = len(seen)
    return counts


def _require_scattering(g: UnimodularMatrix) -> None:
    if g.is_upper_triangular():
        raise NoScatteringGeodesicError(
            f"{g.to_json()} is upper triangular: no scattering geodesic"
        )


def sojourn_time_from_matrix(
    g: UnimodularMatrix, mode: Union[SojournMode, str] = SojournMode.HYPERBOLIC
) -> float:
    """Sojourn time of the scattering geodesic attached to g in SL(2,Z).

    Args:
        g: 2x2 unimodular matrix with nonzero lower-left entry
        mode: hyperbolic gives 2 ln|c|; killing gives the Killing norm of
            the sojourn vector, 2 sqrt(2) ln|c|

    Raises:
        NoScatteringGeodesicError: If g is upper triangular
    """
    if g.n != 2:
        raise GeometryError("sojourn_time_from_matrix expects a 2x2 matrix")
    mode = SojournMode(mode) if isinstance(mode, str) else mode
    _require_scattering(g)
    if mode is SojournMode.HYPERBOLIC:
        return 2.0 * math.log(abs(g.lower_left()))
    return killing_norm(sojourn_vector(bruhat_decompose(g)))


class CrossingTime(NamedTuple):
    total: float
    normalized: float


def _log_arclength(lo: float, hi: float, pieces: int = 16) -> float:
    # integral of dy / y on geometric subintervals
    edges = np.geomspace(lo, hi, pieces + 1)
    parts = [
        integrate.quad(lambda y: 1.0 / y, edges[i], edges[i + 1],
                       epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE)[0]
        for i in range(pieces)
    ]
    return math.fsum(parts)


def hyperbolic_distance(z1: ComplexLike, z2: ComplexLike) -> float:
    """Distance in the upper half-plane."""
    p, q = to_complex(z1, "z1"), to_complex(z2, "z2")
    if p.imag <= 0 or q.imag <= 0:
        raise GeometryError("Points must lie in the upper half-plane")
    x = 1.0 + abs(p - q) ** 2 / (2.0 * p.imag * q.imag)
    return float(np.arccosh(x))


def horoball_crossing_time(c: int, a: int, Y: float) -> CrossingTime:
    """Time the geodesic from infinity to a/c spends between horoballs.

    The geodesic is the vertical line Re z = a/c. It leaves {y > Y} at
    height Y and enters the horoball of Euclidean diameter 1/(c^2 Y)
    tangent at a/c at its top.

    Args:
        c: Positive lower-left entry
        a: Integer coprime to c
        Y: Horoball height, at least 2

    Returns:
        Total arclength and the normalized time total - 2 ln Y

    Raises:
        GeometryError: If the horoballs overlap or the inputs are invalid
    """
    if c < 1 or math.gcd(a, c) != 1:
        raise GeometryError(f"Need c >= 1 and gcd(a, c) = 1, got ({c}, {a})")
    if not Y >= MIN_HOROBALL_HEIGHT:
        raise GeometryError(f"Y must be >= {MIN_HOROBALL_HEIGHT}, got {Y}")

    top = 1.0 / (c * c * Y)
    if top >= Y:
        raise GeometryError(f"Horoballs overlap for c={c}, Y={Y}")

    total = _log_arclength(top, Y)
    check = hyperbolic_distance(complex(a / c, Y), complex(a / c, top))
    if abs(total - check) > CROSSING_TOLERANCE:
        logger.warning(
            f"Arclength {total} disagrees with closed-form distance {check}"
        )
    return CrossingTime(total, total - 2.0 * math.log(Y))


def guillemin_sum(
    s: ComplexLike,
    c_max: int,
    table: Optional[EnumerationTable] = None,
) -> complex:
    """Guillemin series F(s) * sum over sojourn times T of mult(T) e^(-T s).

    Args:
        s: Rank-one argument sigma with Re sigma > 1
        c_max: Largest lower-left entry of the enumerated classes
        table: Precomputed enumeration covering c_max

    Returns:
        Truncated series, approximating C(sigma)

    Raises:
        DivergenceError: If Re sigma <= 1
    """
    sigma = to_complex(s, "sigma")
    if sigma.real <= 1:
        raise DivergenceError(
            f"Guillemin series diverges for Re(sigma) <= 1, got {sigma}"
        )
    if table is None or table.c_max < c_max:
        table = enumerate_classes(c_max)
    rows = table.rows[:c_max]
    weights = np.array([row.multiplicity for row in rows], dtype=np.float64)
    times = np.array([row.sojourn_time for row in rows])
    terms = weights * np.exp(-times * sigma)
    series = complex(math.fsum(terms.real), math.fsum(terms.imag))
    return f_factor(sigma) * series


def guillemin_sum_rank2(
    w: Permutation,
    lam: SpectralParameter3,
    c_max: int,
    table: Optional[EnumerationTable] = None,
) -> complex:
    """C(w, lambda) from Guillemin series at (lambda_a - lambda_b + 1)/2.

    Raises:
        NotTranspositionError: If w is not a transposition
        DivergenceError: If some Re(lambda_a - lambda_b) <= 1
    """
    if w.n != 3 or not w.is_transposition():
        raise NotTranspositionError(f"{w} is not a transposition in S_3")
    table = table or enumerate_classes(c_max)
    value = 1 + 0j
    for a, b in w.inversions():
        value *= guillemin_sum((lam.difference(a, b) + 1) / 2, c_max, table)
    return value


@dataclass(frozen=True)
class FlatSojourn:
    """Sojourn data of the scattering flats attached to g in SL(3,Z).

    Attributes:
        w: Bruhat cell of g
        vector: Common sojourn vector log(g_a)
        time: Killing norm of the vector, the sojourn time of the
            projected scattering geodesics
    """

    w: Permutation
    vector: SojournVector
    time: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "w": self.w.label(),
            "sojourn_vector": list(self.vector.h),
            "exact_a": [str(a) for a in self.vector.exact_a or ()],
            "killing_norm": self.time,
        }


def flat_sojourn(g: UnimodularMatrix) -> FlatSojourn:
    """Sojourn vector and time for g in SL(3,Z) outside P0.

    Raises:
        NoScatteringGeodesicError: If g lies in the minimal parabolic P0
    """
    if g.n != 3:
        raise GeometryError("flat_sojourn expects a 3x3 matrix")
    if parabolic_contains("P0", g):
        raise NoScatteringGeodesicError(
            f"{g.to_json()} lies in P0: no scattering flat"
        )
    factorization = bruhat_decompose(g)
    vector = sojourn_vector(factorization)
    return FlatSojourn(factorization.w, vector, killing_norm(vector))
