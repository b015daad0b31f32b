import cmath
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np

from exactlin import Permutation
from specfun import (DEFAULT_OPTIONS, BudgetError, ComplexLike, EvalOptions,
                     PoleError, f_factor, omega_ratio, to_complex, totients)

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-12


class ScatteringError(Exception):
    """Base exception for scattering-matrix errors."""

    pass


class ScatteringPreconditionError(ScatteringError, ValueError):
    """Exception for arguments outside an operation's stated domain."""

    pass


class NotTranspositionError(ScatteringPreconditionError):
    """Exception raised when a transposition is required."""

    pass


class InversionPoleError(PoleError):
    """Pole of a rank-two scattering factor at a specific inversion.

    Attributes:
        pair: The inversion (a, b) whose factor is singular
    """

    def __init__(self, pair: Tuple[int, int], difference: complex) -> None:
        self.pair = pair
        super().__init__(
            f"Omega pole at inversion {pair}: lambda_{pair[0]} - "
            f"lambda_{pair[1]} = {difference}"
        )


class SpectralParameter3:
    """Trace-zero spectral parameter (lambda_1, lambda_2, lambda_3).

    Only differences lambda_a - lambda_b enter the scattering formulas.

    Attributes:
        values: Tuple of three complex entries summing to zero
    """

    __slots__ = ("values",)

    def __init__(self, values: Sequence[ComplexLike]) -> None:
        """Initialize a spectral parameter.

        Args:
            values: Three complex entries

        Raises:
            ScatteringPreconditionError: If there are not three entries or
                they do not sum to zero within 1e-12
        """
        if len(values) != 3:
            raise ScatteringPreconditionError(
                f"Expected three entries, got {len(values)}"
            )
        entries = tuple(to_complex(v, "lambda") for v in values)
        if abs(sum(entries)) > TRACE_TOLERANCE:
            raise ScatteringPreconditionError(
                f"Spectral parameter must have trace zero, sum={sum(entries)}"
            )
        self.values = entries

    @classmethod
    def centered(cls, values: Sequence[ComplexLike]) -> "SpectralParameter3":
        """Subtract the mean so the entries sum to zero."""
        entries = [to_complex(v, "lambda") for v in values]
        if len(entries) != 3:
            raise ScatteringPreconditionError(
                f"Expected three entries, got {len(entries)}"
            )
        mean = sum(entries) / 3
        shifted = [v - mean for v in entries]
        # absorb rounding so the sum is exactly representable as zero
        shifted[2] = -(shifted[0] + shifted[1])
        return cls(shifted)

    def __getitem__(self, index: int) -> complex:
        """1-based coordinate access."""
        return self.values[index - 1]

    def difference(self, a: int, b: int) -> complex:
        return self[a] - self[b]

    def permuted(self, w: Permutation) -> "SpectralParameter3":
        return SpectralParameter3(w.act(self.values))

    def to_list(self) -> list:
        return [{"re": v.real, "im": v.imag} for v in self.values]

    def __repr__(self) -> str:
        return f"SpectralParameter3({list(self.values)})"


@dataclass(frozen=True)
class ScatteringValue:
    """Scattering coefficient value; NaN when evaluated at a pole."""

    value: complex
    at_pole: bool = False

    def __post_init__(self) -> None:
        if self.at_pole and not cmath.isnan(self.value):
            raise ScatteringError(
                "A pole value must not be reported as finite"
            )

    def __abs__(self) -> float:
        return abs(self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "at_pole": self.at_pole,
        }


POLE_VALUE = ScatteringValue(complex(math.nan, math.nan), at_pole=True)


def c_rank1(
    s: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS, strict: bool = True
) -> ScatteringValue:
    """Rank-one scattering coefficient C(s) = Omega(2s-1) / Omega(2s).

    At s = 1/2 both Omega factors have simple poles with residues of
    opposite sign (Omega(s) ~ -1/s at 0, ~ 1/(s-1) at 1), so the ratio
    extends to C(1/2) = -1.

    Args:
        s: Complex argument
        opts: Special-function options
        strict: Raise at poles instead of returning an at_pole value

    Returns:
        The scattering value

    Raises:
        PoleError: At s = 0 and s = 1 when strict
    """
    z = to_complex(s, "s")
    if z == 0.5:
        return ScatteringValue(-1 + 0j)
    try:
        return ScatteringValue(omega_ratio(2 * z - 1, 2 * z, opts))
    except PoleError:
        if strict:
            raise
        logger.debug(f"c_rank1 pole at s={z}")
        return POLE_VALUE


def _check_inversion(pair: Tuple[int, int], d: complex) -> None:
    # Omega(d) and Omega(1+d) have poles at d in {-1, 0, 1}
    if d in (-1, 0, 1):
        raise InversionPoleError(pair, d)


def c_rank2(
    w: Permutation,
    lam: SpectralParameter3,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> ScatteringValue:
    """Rank-two scattering coefficient C(w, lambda).

    Product over inversions (a, b) of w of
    Omega(lambda_a - lambda_b) / Omega(1 + lambda_a - lambda_b).

    Raises:
        InversionPoleError: Naming the first singular inversion pair
    """
    if w.n != 3:
        raise ScatteringPreconditionError("w must lie in S_3")
    value = 1 + 0j
    for pair in w.inversions():
        d = lam.difference(*pair)
        _check_inversion(pair, d)
        value *= omega_ratio(d, 1 + d, opts)
    return ScatteringValue(value)


def c_rank2_via_rank1(
    w: Permutation,
    lam: SpectralParameter3,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> ScatteringValue:
    """C(w, lambda) as rank-one values C((lambda_a - lambda_b + 1) / 2).

    A simple transposition contributes a single factor; (13) has three
    inversions and contributes one factor per inversion.

    Raises:
        NotTranspositionError: For the identity and the 3-cycles
    """
    if w.n != 3 or not w.is_transposition():
        raise NotTranspositionError(f"{w} is not a transposition in S_3")
    value = 1 + 0j
    for a, b in w.inversions():
        value *= c_rank1((lam.difference(a, b) + 1) / 2, opts).value
    return ScatteringValue(value)


def cocycle_residual(
    w1: Permutation,
    w2: Permutation,
    lam: SpectralParameter3,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> float:
    """|C(w1 w2, lambda) - C(w1, w2 lambda) C(w2, lambda)|.

    Raises:
        ScatteringPreconditionError: If lengths of w1 and w2 do not add
    """
    product = w1 * w2
    if product.length() != w1.length() + w2.length():
        raise ScatteringPreconditionError(
            f"length({product}) != length({w1}) + length({w2})"
        )
    left = c_rank2(product, lam, opts).value
    right = (
        c_rank2(w1, lam.permuted(w2), opts).value
        * c_rank2(w2, lam, opts).value
    )
    return abs(left - right)


def reduced_pairs() -> Iterable[Tuple[Permutation, Permutation]]:
    """Every (w1, w2) in S_3 x S_3 with additive lengths, neither trivial."""
    elements = Permutation.all(3)
    for w1 in elements:
        for w2 in elements:
            if w1.is_identity() or w2.is_identity():
                continue
            if (w1 * w2).length() == w1.length() + w2.length():
                yield w1, w2


def _fixed_order_sum(terms: np.ndarray) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def dirichlet_totient_sum(
    s: complex, c_max: int, multiplicities: Any = None
) -> complex:
    """sum_{c <= c_max} m(c) c^(-2s), with m = phi unless given."""
    c = np.arange(1, c_max + 1, dtype=np.float64)
    weights = (
        totients(c_max)[1:]
        if multiplicities is None
        else np.asarray(multiplicities, dtype=np.float64)
    )
    return _fixed_order_sum(weights * np.exp(-2 * s * np.log(c)))


def eisenstein_constant_term_check(
    y: float,
    s: ComplexLike,
    cmax: int,
    opts: EvalOptions = DEFAULT_OPTIONS,
) -> float:
    """Residual of the constant term of E(z, s) against y^s + C(s) y^(1-s).

    Each coprime pair (c, d) with 0 <= d < c contributes the closed-form
    x-integral sqrt(pi) Gamma(s-1/2)/Gamma(s) c^(-2s) y^(1-s); there are
    phi(c) such d for each c.

    Args:
        y: Height, at least 2
        s: Complex argument with Re s >= 1.5
        cmax: Largest c, at least 50

    Returns:
        |a_0(y, s) - y^s - C(s) y^(1-s)|

    Raises:
        ScatteringPreconditionError: If a precondition fails
        BudgetError: If cmax exceeds opts.max_terms
    """
    z = to_complex(s, "s")
    if z.real < 1.5:
        raise ScatteringPreconditionError(f"Re(s) must be >= 1.5, got {z}")
    if not y >= 2:
        raise ScatteringPreconditionError(f"y must be >= 2, got {y}")
    if cmax < 50:
        raise ScatteringPreconditionError(f"cmax must be >= 50, got {cmax}")
    if cmax > opts.max_terms:
        raise BudgetError(f"cmax={cmax} exceeds max_terms={opts.max_terms}")

    y_s = cmath.exp(z * math.log(y))
    y_1s = cmath.exp((1 - z) * math.log(y))
    a0 = y_s + f_factor(z) * dirichlet_totient_sum(z, cmax) * y_1s
    residual = abs(a0 - y_s - c_rank1(z, opts).value * y_1s)
    logger.debug(
        f"constant term residual at y={y}, s={z}, cmax={cmax}: "
        f"{residual:.3e}"
    )
    return residual


def eisenstein_series(
    z: ComplexLike, s: ComplexLike, bound: int = 200
) -> complex:
    """Truncated E(z, s) = sum over coprime (c, d) of y^s / |cz + d|^(2s).

    The sum runs over (0, 1) and c in 1..bound, |d| <= bound; it converges
    absolutely for Re s > 1.

    Raises:
        ScatteringPreconditionError: If Re s <= 1 or Im z <= 0
    """
    point = to_complex(z, "z")
    exponent = to_complex(s, "s")
    if point.imag <= 0:
        raise ScatteringPreconditionError("z must lie in the upper half-plane")
    if exponent.real <= 1:
        raise ScatteringPreconditionError("Re(s) must be > 1")

    c, d = np.meshgrid(
        np.arange(1, bound + 1), np.arange(-bound, bound + 1), indexing="ij"
    )
    mask = np.gcd(c, d) == 1
    c = c[mask].astype(np.float64)
    d = d[mask].astype(np.float64)
    norm_sq = (c * point.real + d) ** 2 + (c * point.imag) ** 2
    terms = np.exp(-exponent * np.log(norm_sq))
    log_y = math.log(point.imag)
    return cmath.exp(exponent * log_y) * (1 + _fixed_order_sum(terms))
