import cmath
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Tuple, Union

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

ComplexLike = Union[complex, float, int, str]

SQRT_PI = math.sqrt(math.pi)
LOG_PI = math.log(math.pi)
LOG_2 = math.log(2.0)

# Lanczos series, g = 671/128, 14 terms (Numerical Recipes 6.1)
LANCZOS_G = 5.2421875
LANCZOS_SER0 = 0.999999999999997092
LANCZOS_SQRT_2PI = 2.5066282746310005
LANCZOS_COEFFICIENTS = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)

ZETA_MIN_TERMS = 30
MAX_BERNOULLI_TERMS = 60
IM_ENVELOPE = 2000.0


class SpecialFunctionError(Exception):
    """Base exception for special-function evaluation errors."""

    pass


class InvalidArgumentError(SpecialFunctionError, ValueError):
    """Exception for arguments that are not finite complex numbers."""

    pass


class PoleError(SpecialFunctionError):
    """Exception raised when an argument hits a pole."""

    pass


class BudgetError(SpecialFunctionError):
    """Exception raised when a series exceeds its term budget."""

    pass


class DivergenceError(SpecialFunctionError, ValueError):
    """Exception raised outside the convergence region of an integral."""

    pass


class DomainError(SpecialFunctionError, ValueError):
    """Exception raised outside the supported accuracy envelope."""

    pass


@dataclass(frozen=True)
class EvalOptions:
    """Accuracy and work limits for series evaluations.

    Attributes:
        target_abs_error: Absolute error target, at least 1e-15
        max_terms: Largest number of series terms a single call may use
    """

    target_abs_error: float = 1e-12
    max_terms: int = 1_000_000

    def __post_init__(self) -> None:
        if not self.target_abs_error >= 1e-15:
            raise InvalidArgumentError(
                "target_abs_error must be >= 1e-15, got "
                f"{self.target_abs_error}"
            )
        if self.max_terms < 1:
            raise InvalidArgumentError("max_terms must be positive")


DEFAULT_OPTIONS = EvalOptions()


def to_complex(value: Any, name: str = "argument") -> complex:
    """Coerce a value to a finite Python complex.

    Args:
        value: Number or numeric string
        name: Argument name used in the error message

    Returns:
        The value as complex

    Raises:
        InvalidArgumentError: If the value is not a finite number
    """
    try:
        z = complex(value)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"{name} is not a number: {value!r}") from e
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
    return z


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def _bernoulli_even(count: int) -> Tuple[Fraction, ...]:
    """Exact B_2, B_4, ..., B_{2 count} from the standard recurrence."""
    size = 2 * count + 1
    b: List[Fraction] = [Fraction(0)] * size
    b[0] = Fraction(1)
    for m in range(1, size):
        acc = Fraction(0)
        binom = 1
        for j in range(m):
            acc += binom * b[j]
            binom = binom * (m + 1 - j) // (j + 1)
        b[m] = -acc / (m + 1)
    return tuple(b[2 * k] for k in range(1, count + 1))


# Read-only after import: B_2k / (2k)! as floats
EULER_MACLAURIN_COEFFICIENTS = tuple(
    float(b / math.factorial(2 * k))
    for k, b in enumerate(_bernoulli_even(MAX_BERNOULLI_TERMS), start=1)
)


def _lanczos_log_gamma(z: complex) -> complex:
    y = z
    tmp = z + LANCZOS_G
    tmp = (z + 0.5) * cmath.log(tmp) - tmp
    ser = LANCZOS_SER0
    for coefficient in LANCZOS_COEFFICIENTS:
        y += 1
        ser += coefficient / y
    return tmp + cmath.log(LANCZOS_SQRT_2PI * ser / z)


def log_sin_pi(z: complex) -> complex:
    """log(sin(pi z)) without overflow for large |Im z| (up to 2 pi i)."""
    if z.imag > 0:
        e = cmath.exp(2j * math.pi * z)
        return (
            complex(-LOG_2, math.pi / 2)
            - 1j * math.pi * z
            + complex(np.log1p(-e))
        )
    if z.imag < 0:
        e = cmath.exp(-2j * math.pi * z)
        return (
            complex(-LOG_2, -math.pi / 2)
            + 1j * math.pi * z
            + complex(np.log1p(-e))
        )
    return cmath.log(complex(math.sin(math.pi * z.real)))


def log_gamma(s: ComplexLike) -> complex:
    """Logarithm of the complex gamma function, modulo 2 pi i.

    Args:
        s: Complex argument, not a nonpositive integer

    Returns:
        A logarithm of Gamma(s); exp of it is the principal Gamma(s)

    Raises:
        PoleError: At s = 0, -1, -2, ...
    """
    z = to_complex(s, "s")
    if _is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at s={z.real:g}")
    if z.real < 0.5:
        # Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return LOG_PI - log_sin_pi(z) - _lanczos_log_gamma(1 - z)
    return _lanczos_log_gamma(z)


def gamma(s: ComplexLike) -> complex:
    """Principal complex Gamma function via the Lanczos series.

    Raises:
        PoleError: At s = 0, -1, -2, ...
    """
    return cmath.exp(log_gamma(s))


def _zeta_euler_maclaurin(
    s: complex, n_terms: int, target: float
) -> Tuple[complex, bool]:
    n = np.arange(1, n_terms, dtype=np.float64)
    head = complex(np.sum(np.exp(-s * np.log(n)))) if n_terms > 1 else 0j
    big_n = float(n_terms)
    log_n = math.log(big_n)
    n_pow = cmath.exp(-s * log_n)
    total = head + big_n * n_pow / (s - 1) + 0.5 * n_pow

    # rising factorial s (s+1) ... (s+2k-2) times N^(-s-2k+1)
    factor = s * n_pow / big_n
    previous = math.inf
    for k, coefficient in enumerate(EULER_MACLAURIN_COEFFICIENTS, start=1):
        term = coefficient * factor
        total += term
        size = abs(term)
        if size < target * 1e-2:
            return total, True
        if size > previous:
            return total, False
        previous = size
        factor *= (s + 2 * k - 1) * (s + 2 * k) / (big_n * big_n)
    return total, False


def zeta(s: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS) -> complex:
    """Riemann zeta function by Euler-Maclaurin summation.

    The head sum uses N = max(30, ceil(2 |Im s|)) terms; N doubles until
    the correction series reaches the error target.

    Args:
        s: Complex argument with Re s >= -2, |Im s| <= 2000
        opts: Accuracy options

    Returns:
        zeta(s)

    Raises:
        PoleError: At s = 1
        BudgetError: If more than opts.max_terms terms would be needed
    """
    z = to_complex(s, "s")
    if z == 1:
        raise PoleError("zeta has a pole at s=1")
    if z.real < -2 or abs(z.imag) > IM_ENVELOPE:
        logger.warning(f"zeta({z}) is outside the validated envelope")

    n_terms = max(ZETA_MIN_TERMS, math.ceil(2 * abs(z.imag)))
    while True:
        if n_terms > opts.max_terms:
            raise BudgetError(
                f"zeta({z}) needs more than {opts.max_terms} terms"
            )
        value, converged = _zeta_euler_maclaurin(
            z, n_terms, opts.target_abs_error
        )
        if converged:
            return value
        logger.debug(f"zeta({z}): doubling head length from {n_terms}")
        n_terms *= 2


def _check_omega_pole(z: complex) -> None:
    if z == 0 or z == 1:
        raise PoleError(f"Omega has a pole at s={z.real:g}")


def omega(s: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS) -> complex:
    """Completed zeta Omega(s) = pi^(-s/2) Gamma(s/2) zeta(s).

    Arguments left of Re s = -1 and the negative even integers (where
    Gamma(s/2) has poles cancelled by trivial zeros) go through
    Omega(s) = Omega(1-s).

    Raises:
        PoleError: At s = 0 and s = 1
    """
    z = to_complex(s, "s")
    _check_omega_pole(z)
    if z.real < -1 or _is_nonpositive_integer(z / 2):
        return omega(1 - z, opts)
    return (
        cmath.exp(-(z / 2) * LOG_PI)
        * cmath.exp(log_gamma(z / 2))
        * zeta(z, opts)
    )


def log_omega(s: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS) -> complex:
    """A logarithm of Omega(s), evaluated on Re s >= 1/2 by reflection.

    Raises:
        PoleError: At s = 0, s = 1, or a zero of zeta
    """
    z = to_complex(s, "s")
    _check_omega_pole(z)
    if z.real < 0.5:
        z = 1 - z
    zeta_value = zeta(z, opts)
    if zeta_value == 0:
        raise PoleError(f"Omega vanishes at s={z}")
    return -(z / 2) * LOG_PI + log_gamma(z / 2) + cmath.log(zeta_value)


def omega_ratio(
    s1: ComplexLike, s2: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS
) -> complex:
    """Omega(s1) / Omega(s2) in the log domain.

    Gamma factors far up the critical strip underflow separately but not
    in the ratio.

    Raises:
        PoleError: If s1 is a pole or s2 is a pole or zero of Omega
    """
    return cmath.exp(log_omega(s1, opts) - log_omega(s2, opts))


def f_factor(s: ComplexLike, continued: bool = False) -> complex:
    """Guillemin's factor F = integral of (1+w^2)^(-s) over the real line.

    Closed form sqrt(pi) Gamma(s-1/2) / Gamma(s).

    Args:
        s: Exponent sigma
        continued: Return the meromorphic continuation for Re s <= 1/2

    Returns:
        F(s)

    Raises:
        DivergenceError: If Re s <= 1/2 and continued is False
        PoleError: At s = 1/2, -1/2, ... when continued
    """
    z = to_complex(s, "sigma")
    if z.real <= 0.5 and not continued:
        raise DivergenceError(
            f"integral diverges for Re(sigma) <= 1/2, got sigma={z}"
        )
    if _is_nonpositive_integer(z - 0.5):
        raise PoleError(f"F has a pole at sigma={z.real:g}")
    if _is_nonpositive_integer(z):
        return 0j
    return SQRT_PI * cmath.exp(log_gamma(z - 0.5) - log_gamma(z))


def f_factor_quadrature(
    s: ComplexLike, cutoff: float = 50.0, tol: float = 1e-13
) -> complex:
    """Quadrature cross-check of f_factor.

    Adaptive quadrature on |w| <= cutoff plus the binomial tail
    sum_k binom(-s, k) W^(1-2s-2k) / (2s+2k-1) for |w| > W.

    Raises:
        DivergenceError: If Re s <= 1/2
    """
    z = to_complex(s, "sigma")
    if z.real <= 0.5:
        raise DivergenceError(
            f"integral diverges for Re(sigma) <= 1/2, got sigma={z}"
        )

    def integrand(w: float) -> complex:
        return cmath.exp(-z * math.log1p(w * w))

    real_part, _ = integrate.quad(
        lambda w: integrand(w).real, 0.0, cutoff,
        epsabs=tol, epsrel=tol, limit=400,
    )
    imag_part, _ = integrate.quad(
        lambda w: integrand(w).imag, 0.0, cutoff,
        epsabs=tol, epsrel=tol, limit=400,
    )

    tail = 0j
    binom = 1 + 0j
    log_w = math.log(cutoff)
    for k in range(200):
        term = binom * cmath.exp((1 - 2 * z - 2 * k) * log_w) / (
            2 * z + 2 * k - 1
        )
        tail += term
        if abs(term) < tol * 1e-3:
            break
        binom *= (-z - k) / (k + 1)

    return 2 * (complex(real_part, imag_part) + tail)


def totients(n: int) -> np.ndarray:
    """Euler phi(0..n) by sieve; entry 0 is 0."""
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    phi = np.arange(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def evaluate(
    name: str, s: ComplexLike, opts: EvalOptions = DEFAULT_OPTIONS
) -> complex:
    """Dispatch by function name: gamma, log_gamma, zeta, omega, f_factor."""
    functions: Dict[str, Callable[[ComplexLike], complex]] = {
        "gamma": gamma,
        "log_gamma": log_gamma,
        "zeta": lambda z: zeta(z, opts),
        "omega": lambda z: omega(z, opts),
        "f_factor": f_factor,
    }
    key = name.strip().lower().replace("-", "_")
    if key not in functions:
        raise InvalidArgumentError(
            f"Unknown function {name!r}; choose from {sorted(functions)}"
        )
    return functions[key](s)
