import json
import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

Number = Union[int, Fraction]

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (2, 3)

# Labels follow cycle notation on {1, 2, 3}; "13" is the longest element.
PERMUTATION_LABELS: Dict[str, Tuple[int, ...]] = {
    "e": (1, 2, 3),
    "12": (2, 1, 3),
    "23": (1, 3, 2),
    "13": (3, 2, 1),
    "123": (2, 3, 1),
    "132": (3, 1, 2),
}


class ExactLinError(Exception):
    """Base exception for exact linear algebra errors."""

    pass


class MatrixFormatError(ExactLinError, ValueError):
    """Exception for malformed matrix input."""

    pass


class NotUnimodularError(ExactLinError, ValueError):
    """Exception for integer matrices whose determinant is not 1."""

    pass


class DimensionError(ExactLinError, ValueError):
    """Exception for dimensions outside {2, 3}."""

    pass


class PermutationError(ExactLinError, ValueError):
    """Exception for sequences that are not permutations."""

    pass


class Permutation:
    """Permutation of {1..n} stored by its images.

    Composition follows function composition, so ``(w1 * w2)(i)`` is
    ``w1(w2(i))``. The permutation matrix has ``P[i][w(i)] = 1``.

    Attributes:
        images: Tuple of 1-based images w(1), ..., w(n)
    """

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]) -> None:
        """Initialize a permutation.

        Args:
            images: Sequence of n distinct values in 1..n

        Raises:
            PermutationError: If images is not a bijection on {1..n}
        """
        values = tuple(int(i) for i in images)
        if not values or sorted(values) != list(range(1, len(values) + 1)):
            raise PermutationError(f"Not a permutation of 1..n: {images}")
        self.images = values

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def from_label(cls, label: str, n: int = 3) -> "Permutation":
        """Build a permutation from a cycle label such as ``12`` or ``132``.

        Args:
            label: One of e, 12, 23, 13, 123, 132 (only e and 12 for n=2)
            n: Dimension

        Returns:
            Parsed permutation

        Raises:
            PermutationError: If the label is unknown for this dimension
        """
        key = str(label).strip().strip("()").replace(" ", "")
        key = "e" if key in ("", "id", "identity") else key
        if key not in PERMUTATION_LABELS:
            raise PermutationError(f"Unknown permutation label: {label}")
        images = PERMUTATION_LABELS[key]
        if n == 2:
            if key not in ("e", "12"):
                raise PermutationError(f"Label {label} is not in S_2")
            return cls(images[:2])
        if n != 3:
            raise PermutationError("Labels are only defined for n=2,3")
        return cls(images)

    @classmethod
    def all(cls, n: int) -> List["Permutation"]:
        """Return every element of S_n in lexicographic order of images."""
        return [cls(p) for p in permutations(range(1, n + 1))]

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.n != other.n:
            raise PermutationError(
                "Cannot compose permutations of different size"
            )
        return Permutation([self(other(i)) for i in range(1, self.n + 1)])

    def inverse(self) -> "Permutation":
        result = [0] * self.n
        for i, image in enumerate(self.images, start=1):
            result[image - 1] = i
        return Permutation(result)

    def inversions(self) -> List[Tuple[int, int]]:
        """Return all pairs a < b with w(a) > w(b), in lexicographic order."""
        return [
            (a, b)
            for a in range(1, self.n + 1)
            for b in range(a + 1, self.n + 1)
            if self(a) > self(b)
        ]

    def length(self) -> int:
        return len(self.inversions())

    def sign(self) -> int:
        return -1 if self.length() % 2 else 1

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.n + 1))

    def is_transposition(self) -> bool:
        moved = [i for i in range(1, self.n + 1) if self(i) != i]
        return len(moved) == 2

    def is_simple_transposition(self) -> bool:
        return self.is_transposition() and self.length() == 1

    def act(self, values: Sequence[Any]) -> List[Any]:
        """Permute coordinates: the entry at position i moves to w(i)."""
        if len(values) != self.n:
            raise PermutationError(
                f"Expected {self.n} coordinates, got {len(values)}"
            )
        result: List[Any] = [None] * self.n
        for i, value in enumerate(values, start=1):
            result[self(i) - 1] = value
        return result

    def matrix(self) -> "RationalMatrix":
        rows = [[0] * self.n for _ in range(self.n)]
        for i in range(1, self.n + 1):
            rows[i - 1][self(i) - 1] = 1
        return RationalMatrix(rows)

    def label(self) -> str:
        for key, images in PERMUTATION_LABELS.items():
            if images[: self.n] == self.images and (
                self.n == 3 or key in ("e", "12")
            ):
                return key
        return ",".join(str(i) for i in self.images)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __str__(self) -> str:
        return self.label()

    def __repr__(self) -> str:
        return f"Permutation({list(self.images)})"


def _check_square(rows: Sequence[Sequence[Any]]) -> int:
    n = len(rows)
    if n == 0 or any(len(row) != n for row in rows):
        raise MatrixFormatError("Matrix must be square and non-empty")
    return n


def _determinant(rows: Sequence[Sequence[Number]]) -> Fraction:
    # Exact elimination with row swaps
    work = [[Fraction(x) for x in row] for row in rows]
    n = len(work)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        det *= work[col][col]
        for r in range(col + 1, n):
            factor = work[r][col] / work[col][col]
            if factor:
                for c in range(col, n):
                    work[r][c] -= factor * work[col][c]
    return det


class RationalMatrix:
    """Square matrix of exact rationals.

    Attributes:
        n: Dimension
        entries: Tuple of row tuples of Fraction values in lowest terms
    """

    __slots__ = ("n", "entries")

    def __init__(self, rows: Sequence[Sequence[Union[Number, str]]]) -> None:
        self.n = _check_square(rows)
        self.entries: Tuple[Tuple[Fraction, ...], ...] = tuple(
            tuple(Fraction(x) for x in row) for row in rows
        )

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, values: Sequence[Number]) -> "RationalMatrix":
        n = len(values)
        return cls(
            [[values[i] if i == j else 0 for j in range(n)] for i in range(n)]
        )

    def __getitem__(self, index: Tuple[int, int]) -> Fraction:
        i, j = index
        return self.entries[i][j]

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.n != other.n:
            raise MatrixFormatError("Dimension mismatch in product")
        cols = list(zip(*other.entries))
        return RationalMatrix(
            [[sum(a * b for a, b in zip(row, col)) for col in cols]
             for row in self.entries]
        )

    def determinant(self) -> Fraction:
        return _determinant(self.entries)

    def rank(self) -> int:
        return submatrix_rank(self.entries, range(self.n), range(self.n))

    def is_upper_unitriangular(self) -> bool:
        return all(
            self.entries[i][j] == (1 if i == j else 0)
            for i in range(self.n)
            for j in range(i + 1)
        )

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for row in self.entries for x in row)

    def to_json(self) -> List[List[str]]:
        return [[str(x) for x in row] for row in self.entries]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, UnimodularMatrix):
            other = other.as_rational()
        return (
            isinstance(other, RationalMatrix) and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"RationalMatrix({self.to_json()})"


def submatrix_rank(
    rows: Sequence[Sequence[Number]],
    row_indices: Sequence[int],
    col_indices: Sequence[int],
) -> int:
    """Exact rank of the submatrix picked out by the given 0-based indices."""
    work = [[Fraction(rows[i][j]) for j in col_indices] for i in row_indices]
    rank = 0
    n_cols = len(col_indices)
    for col in range(n_cols):
        pivot = next(
            (r for r in range(rank, len(work)) if work[r][col] != 0), None
        )
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for r in range(rank + 1, len(work)):
            factor = work[r][col] / work[rank][col]
            if factor:
                for c in range(col, n_cols):
                    work[r][c] -= factor * work[rank][c]
        rank += 1
    return rank


class UnimodularMatrix:
    """Integer n x n matrix with determinant exactly 1, n in {2, 3}.

    Attributes:
        n: Dimension
        entries: Tuple of row tuples of Python integers
    """

    __slots__ = ("n", "entries")

    def __init__(self, rows: Sequence[Sequence[Union[int, str]]]) -> None:
        """Initialize and validate a unimodular matrix.

        Args:
            rows: Square array of integers or integer strings

        Raises:
            MatrixFormatError: If shape or entries are invalid
            NotUnimodularError: If the determinant is not exactly 1
        """
        n = _check_square(rows)
        if n not in SUPPORTED_DIMENSIONS:
            raise MatrixFormatError(f"Dimension must be 2 or 3, got {n}")
        try:
            entries = tuple(tuple(_parse_int(x) for x in row) for row in rows)
        except (TypeError, ValueError) as e:
            raise MatrixFormatError(f"Invalid integer entry: {e}") from e

        det = _determinant(entries)
        if det != 1:
            raise NotUnimodularError(f"Determinant is {det}, expected 1")
        self.n = n
        self.entries = entries

    @classmethod
    def from_json(
        cls, data: Union[str, Sequence[Sequence[Any]]]
    ) -> "UnimodularMatrix":
        """Parse a matrix from a JSON array of integer strings.

        Args:
            data: JSON text such as '[["2","1"],["1","1"]]' or a parsed list

        Returns:
            Validated matrix

        Raises:
            MatrixFormatError: If the text is not a square integer array
        """
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                raise MatrixFormatError(
                    f"Matrix is not valid JSON: {e}"
                ) from e
        if not isinstance(data, list) or not all(
            isinstance(row, list) for row in data
        ):
            raise MatrixFormatError("Matrix must be a JSON array of arrays")
        return cls(data)

    @classmethod
    def identity(cls, n: int) -> "UnimodularMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def random(
        cls, n: int, rng: random.Random, steps: int = 8, bound: int = 3
    ) -> "UnimodularMatrix":
        """Random product of elementary integer matrices.

        Args:
            n: Dimension (2 or 3)
            rng: Seeded random generator
            steps: Number of elementary factors
            bound: Multipliers are drawn from [-bound, bound]

        Returns:
            Unimodular matrix with bounded entries
        """
        rows = [[int(i == j) for j in range(n)] for i in range(n)]
        for _ in range(steps):
            i, j = rng.sample(range(n), 2)
            k = rng.randint(-bound, bound)
            # row_i += k * row_j
            rows[i] = [a + k * b for a, b in zip(rows[i], rows[j])]
        return cls(rows)

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return self.entries[i][j]

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        cols = list(zip(*other.entries))
        return UnimodularMatrix(
            [[sum(a * b for a, b in zip(row, col)) for col in cols]
             for row in self.entries]
        )

    def as_rational(self) -> RationalMatrix:
        return RationalMatrix(self.entries)

    def lower_left(self) -> int:
        return self.entries[self.n - 1][0]

    def is_upper_triangular(self) -> bool:
        return all(
            self.entries[i][j] == 0 for i in range(self.n) for j in range(i)
        )

    def to_json(self) -> List[List[str]]:
        return [[str(x) for x in row] for row in self.entries]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, RationalMatrix):
            return self.as_rational() == other
        return (
            isinstance(other, UnimodularMatrix)
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"UnimodularMatrix({self.to_json()})"


def _parse_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{value!r} is not an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return int(value.strip())
    raise ValueError(f"{value!r} is not an integer")


# Zero patterns of the standard parabolics of SL(3): (row, col), 0-based.
PARABOLIC_ZERO_ENTRIES: Dict[str, Tuple[Tuple[int, int], ...]] = {
    "P0": ((1, 0), (2, 0), (2, 1)),
    "P1": ((2, 0), (2, 1)),
    "P2": ((1, 0), (2, 0)),
}


def parabolic_contains(parabolic: str, g: UnimodularMatrix) -> bool:
    """Membership of an SL(3) matrix in a standard parabolic subgroup."""
    if g.n != 3:
        raise MatrixFormatError("Parabolic subgroups are defined for n=3")
    key = str(parabolic).upper()
    if key not in PARABOLIC_ZERO_ENTRIES:
        raise ExactLinError(f"Unknown parabolic: {parabolic}")
    return all(g[i, j] == 0 for i, j in PARABOLIC_ZERO_ENTRIES[key])


@dataclass(frozen=True)
class BruhatFactorization:
    """Exact factors with g = u_left . diag(m_sign*a_diag) . P(w) . u_right.

    The determinant constraint reads prod(a_diag) = 1 and
    prod(m_sign) = sign(w), since det P(w) = sign(w).
    """

    u_left: RationalMatrix
    a_diag: Tuple[Fraction, ...]
    m_sign: Tuple[int, ...]
    w: Permutation
    u_right: RationalMatrix

    def __post_init__(self) -> None:
        n = self.w.n
        if not (
            self.u_left.n == self.u_right.n == len(self.a_diag)
            == len(self.m_sign) == n
        ):
            raise ExactLinError("Factor dimensions disagree")
        if not (
            self.u_left.is_upper_unitriangular()
            and self.u_right.is_upper_unitriangular()
        ):
            raise ExactLinError(
                "Unipotent factors must be upper unitriangular"
            )
        if any(a <= 0 for a in self.a_diag):
            raise ExactLinError("a_diag entries must be positive")
        if any(m not in (1, -1) for m in self.m_sign):
            raise ExactLinError("m_sign entries must be +1 or -1")
        det = math.prod(self.a_diag) * math.prod(self.m_sign) * self.w.sign()
        if det != 1:
            raise ExactLinError("Determinant constraint violated")

    @classmethod
    def identity(cls, n: int) -> "BruhatFactorization":
        return cls(
            RationalMatrix.identity(n),
            tuple(Fraction(1) for _ in range(n)),
            tuple(1 for _ in range(n)),
            Permutation.identity(n),
            RationalMatrix.identity(n),
        )

    def middle_diagonal(self) -> Tuple[Fraction, ...]:
        return tuple(m * a for m, a in zip(self.m_sign, self.a_diag))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "u_left": self.u_left.to_json(),
            "a_diag": [str(a) for a in self.a_diag],
            "m_sign": list(self.m_sign),
            "w": self.w.label(),
            "w_images": list(self.w.images),
            "u_right": self.u_right.to_json(),
        }


def _split_left(
    left: List[List[Fraction]],
    diagonal: Sequence[Fraction],
    w: Permutation,
    right: List[List[Fraction]],
) -> Tuple[List[List[Fraction]], List[List[Fraction]]]:
    """Move the part of u_left that commutes past D . P(w) into u_right.

    u_left = x . y with x supported on the inversions of w and y on the
    other positions above the diagonal. Then y . D P(w) = D P(w) . z with
    z[w(i)][w(j)] = y[i][j] d_j / d_i upper unitriangular, and the
    factorization becomes x . D P(w) . (z . u_right).
    """
    n = len(left)
    x = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    y = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for gap in range(1, n):
        for i in range(n - gap):
            j = i + gap
            rest = left[i][j] - sum(
                (x[i][k] * y[k][j] for k in range(i + 1, j)), Fraction(0)
            )
            if w(i + 1) > w(j + 1):
                x[i][j] = rest
            else:
                y[i][j] = rest

    z = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if y[i][j]:
                z[w(i + 1) - 1][w(j + 1) - 1] = (
                    y[i][j] * diagonal[j] / diagonal[i]
                )
    product = [
        [sum((z[i][k] * right[k][j] for k in range(n)), Fraction(0))
         for j in range(n)]
        for i in range(n)
    ]
    return x, product


def bruhat_decompose(g: UnimodularMatrix) -> BruhatFactorization:
    """Exact Bruhat factorization relative to the upper-triangular Borel.

    Rows are processed from the bottom. In each row the leftmost nonzero
    entry is the pivot; entries to its right are cleared with column
    operations and entries above it with row operations. Both operation
    types are upper unitriangular, and the elimination ends at a monomial
    matrix D . P(w).

    Args:
        g: Unimodular input

    Returns:
        The unique factorization with positive a_diag and u_left
        supported on the inversions of w
    """
    n = g.n
    work = [[Fraction(x) for x in row] for row in g.entries]
    left = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    right = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    images = [0] * n

    for k in range(n - 1, -1, -1):
        j = next(c for c in range(n) if work[k][c] != 0)
        pivot = work[k][j]
        images[k] = j + 1
        for col in range(j + 1, n):
            m = work[k][col] / pivot
            if m:
                # column col -= m * column j; u_right row j += m * row col
                for r in range(n):
                    work[r][col] -= m * work[r][j]
                right[j] = [a + m * b for a, b in zip(right[j], right[col])]
        for row in range(k):
            m = work[row][j] / pivot
            if m:
                # row row -= m * row k; u_left column k += m * column row
                work[row] = [a - m * b for a, b in zip(work[row], work[k])]
                for r in range(n):
                    left[r][k] += m * left[r][row]

    w = Permutation(images)
    diagonal = [work[i][w(i + 1) - 1] for i in range(n)]
    left, right = _split_left(left, diagonal, w, right)
    factorization = BruhatFactorization(
        u_left=RationalMatrix(left),
        a_diag=tuple(abs(d) for d in diagonal),
        m_sign=tuple(1 if d > 0 else -1 for d in diagonal),
        w=w,
        u_right=RationalMatrix(right),
    )
    logger.debug(f"Decomposed {g.to_json()} into cell {w.label()}")
    return factorization


def bruhat_recompose(f: BruhatFactorization) -> RationalMatrix:
    """Exact product u_left . diag(m_sign*a_diag) . P(w) . u_right."""
    middle = RationalMatrix.diagonal(f.middle_diagonal())
    return f.u_left @ middle @ f.w.matrix() @ f.u_right


def bruhat_cell(g: Union[UnimodularMatrix, RationalMatrix]) -> Permutation:
    """Bruhat cell of g from the ranks of its southwest submatrices.

    With r(k, j) the rank of rows k..n and columns 1..j, w(k) is the
    least j for which r(k, j) - r(k+1, j) = 1.
    """
    rows = g.entries
    n = g.n

    def sw_rank(k: int, j: int) -> int:
        if k >= n or j == 0:
            return 0
        return submatrix_rank(rows, range(k, n), range(j))

    images = []
    for k in range(n):
        images.append(
            next(
                j
                for j in range(1, n + 1)
                if sw_rank(k, j) - sw_rank(k + 1, j) == 1
            )
        )
    return Permutation(images)


@dataclass(frozen=True)
class SojournVector:
    """Trace-zero vector h = log(a_diag) in natural-log units."""

    h: Tuple[float, ...]
    exact_a: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self) -> None:
        if len(self.h) not in SUPPORTED_DIMENSIONS:
            raise DimensionError(
                f"Dimension must be 2 or 3, got {len(self.h)}"
            )
        if abs(math.fsum(self.h)) > 1e-12:
            raise ExactLinError(
                f"Sojourn vector must have trace zero: {self.h}"
            )

    @property
    def n(self) -> int:
        return len(self.h)

    def metric_norm(self) -> float:
        return math.sqrt(math.fsum(x * x for x in self.h))

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"h": list(self.h)}
        if self.exact_a is not None:
            result["exact_a"] = [str(a) for a in self.exact_a]
        result["killing_norm"] = killing_norm(self)
        return result


def _log_fraction(x: Fraction) -> float:
    # math.log is exact-safe on big integers, floats would overflow
    return math.log(x.numerator) - math.log(x.denominator)


def sojourn_vector(f: BruhatFactorization) -> SojournVector:
    """Sojourn vector h_i = ln(a_diag[i]) of a Bruhat factorization."""
    return SojournVector(
        h=tuple(_log_fraction(a) for a in f.a_diag), exact_a=tuple(f.a_diag)
    )


def killing_norm(v: Union[SojournVector, Sequence[float]]) -> float:
    """Norm sqrt(2n * sum(h_i^2)) from the Killing form B = 2n Trace.

    Raises:
        DimensionError: If the dimension is not 2 or 3
    """
    h = v.h if isinstance(v, SojournVector) else tuple(float(x) for x in v)
    n = len(h)
    if n not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"Dimension must be 2 or 3, got {n}")
    return math.sqrt(2 * n * math.fsum(x * x for x in h))
