import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Sequence, Tuple, Union

from exactlin import Permutation

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12
KILLING_SCALE = 6.0


class ChamberError(Exception):
    """Base exception for root-datum and chamber computations."""

    pass


class CartanVectorError(ChamberError, ValueError):
    """Exception for vectors that do not sum to zero."""

    pass


class SubspaceError(ChamberError, ValueError):
    """Exception for vectors off a required one-parameter subspace."""

    pass


class InvalidQueryError(ChamberError, ValueError):
    """Exception for nonpositive truncation parameters."""

    pass


class Parabolic(Enum):
    """Standard parabolic subgroups of SL(3)."""

    P0 = "P0"
    P1 = "P1"
    P2 = "P2"


class Region(Enum):
    """Pieces of the reduction-theory decomposition."""

    CORE = "Core"
    END_P0 = "End(P0)"
    END_P1 = "End(P1)"
    END_P2 = "End(P2)"


class Subspace(Enum):
    """One-parameter subspaces H1 = {(t,t,-2t)} and H2 = {(2t,-t,-t)}."""

    J1 = "J1"
    J2 = "J2"


@dataclass(frozen=True)
class CartanVector:
    """Element (h1, h2, h3) of the diagonal Cartan subalgebra of sl(3)."""

    h1: float
    h2: float
    h3: float

    def __post_init__(self) -> None:
        if abs(self.h1 + self.h2 + self.h3) > SUM_TOLERANCE:
            raise CartanVectorError(
                f"Cartan vector must sum to zero: {self.as_tuple()}"
            )

    @classmethod
    def of(cls, values: Sequence[float]) -> "CartanVector":
        if len(values) != 3:
            raise CartanVectorError(f"Expected three entries, got {values}")
        return cls(*(float(v) for v in values))

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.h1, self.h2, self.h3)

    def __sub__(self, other: "CartanVector") -> "CartanVector":
        return CartanVector.of(
            [a - b for a, b in zip(self.as_tuple(), other.as_tuple())]
        )

    def scaled(self, factor: float) -> "CartanVector":
        return CartanVector.of([factor * x for x in self.as_tuple()])

    def killing_inner(self, other: "CartanVector") -> float:
        """B(h, k) = 6 Trace(hk)."""
        return KILLING_SCALE * math.fsum(
            a * b for a, b in zip(self.as_tuple(), other.as_tuple())
        )

    def killing_norm(self) -> float:
        return math.sqrt(self.killing_inner(self))


class RootDatumA2:
    """Roots, simple roots and half-sum of positive roots of sl(3).

    Roots are the functionals alpha_ij(h) = h_i - h_j for i != j; the
    positive ones have i < j.
    """

    def __init__(self) -> None:
        self.roots: Dict[Tuple[int, int], Callable[[CartanVector], float]] = {
            (i, j): self._root(i, j)
            for i in range(1, 4)
            for j in range(1, 4)
            if i != j
        }
        self.positive = ((1, 2), (1, 3), (2, 3))
        self.simple = ((1, 2), (2, 3))
        self.logger = logging.getLogger(self.__class__.__name__)

    @staticmethod
    def _root(i: int, j: int) -> Callable[[CartanVector], float]:
        return lambda h: h.as_tuple()[i - 1] - h.as_tuple()[j - 1]

    def halfsum(self, h: CartanVector) -> float:
        """tau(h) = h1 - h3."""
        return h.h1 - h.h3

    def check_halfsum(self) -> bool:
        """tau equals half the sum of positive roots on a basis of H."""
        basis = (CartanVector(1.0, -1.0, 0.0), CartanVector(0.0, 1.0, -1.0))
        for h in basis:
            total = sum(self.roots[pair](h) for pair in self.positive) / 2
            if abs(total - self.halfsum(h)) > SUM_TOLERANCE:
                self.logger.error(f"Half-sum identity fails on {h}")
                return False
        return True


ROOT_DATUM = RootDatumA2()


@dataclass(frozen=True)
class ChamberQuery:
    parabolic: Parabolic
    r: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise InvalidQueryError(f"r must be positive, got {self.r}")


def weyl_apply(w: Permutation, h: CartanVector) -> CartanVector:
    """Permute coordinates of h by w."""
    return CartanVector.of(w.act(h.as_tuple()))


def reference_T() -> CartanVector:
    return CartanVector(0.25, 0.0, -0.25)


def _parameter(subspace: Subspace, h: CartanVector) -> float:
    if subspace is Subspace.J1:
        if abs(h.h1 - h.h2) > SUM_TOLERANCE:
            raise SubspaceError(f"{h.as_tuple()} is not of the form (t,t,-2t)")
        return h.h1
    if abs(h.h2 - h.h3) > SUM_TOLERANCE:
        raise SubspaceError(f"{h.as_tuple()} is not of the form (2t,-t,-t)")
    return -h.h2


def tau_J(subspace: Union[Subspace, str], h: CartanVector) -> float:
    """tau_1(t,t,-2t) = 3t and tau_2(2t,-t,-t) = 3t.

    Raises:
        SubspaceError: If h is off the subspace
    """
    return 3.0 * _parameter(Subspace(subspace), h)


def projection_parameter(subspace: Subspace, h: CartanVector) -> float:
    """Parameter t of the Killing-orthogonal projection of h onto H_J."""
    direction = (
        CartanVector(1.0, 1.0, -2.0)
        if subspace is Subspace.J1
        else CartanVector(2.0, -1.0, -1.0)
    )
    return h.killing_inner(direction) / direction.killing_inner(direction)


def shifted_chamber_contains(q: ChamberQuery, h: CartanVector) -> bool:
    """Membership in the shifted chamber H_Q^+(T_r).

    P0: h1 > h2 + r/4 and h2 > h3 + r/4. P1 on (t,t,-2t): 12t + r > 0.
    P2 on (2t,-t,-t): 12t - r > 0.

    Raises:
        SubspaceError: If h is off the subspace for P1 or P2
    """
    r = q.r
    if q.parabolic is Parabolic.P0:
        return h.h1 > h.h2 + r / 4 and h.h2 > h.h3 + r / 4
    if q.parabolic is Parabolic.P1:
        return 12 * _parameter(Subspace.J1, h) + r > 0
    return 12 * _parameter(Subspace.J2, h) - r > 0


def positive_chamber_contains(h: CartanVector) -> bool:
    return h.h1 > h.h2 > h.h3


def dominant(h: CartanVector) -> CartanVector:
    """Weyl translate of h in the closed positive chamber h1 >= h2 >= h3."""
    return CartanVector.of(sorted(h.as_tuple(), reverse=True))


def shifted_by_reference(h: CartanVector, r: float) -> CartanVector:
    """h - r T, for comparing shifted and unshifted chambers."""
    return h - reference_T().scaled(r)


def _classify_literal(h: CartanVector, r: float) -> Region:
    if shifted_chamber_contains(ChamberQuery(Parabolic.P0, r), h):
        return Region.END_P0
    if 12 * projection_parameter(Subspace.J1, h) + r > 0:
        return Region.END_P1
    if 12 * projection_parameter(Subspace.J2, h) - r > 0:
        return Region.END_P2
    return Region.CORE


def classify_point(h: CartanVector, r: float, literal: bool = False) -> Region:
    """Reduction-theory piece containing h at truncation parameter r.

    h is first moved into the closed positive chamber by the Weyl group,
    so h and w.h always share a region and the core is bounded. P0 is
    tested first with its shifted chamber. Otherwise h is projected onto
    H1 and H2 with the Killing form; the end of P_i is chosen when the
    projected parameter exceeds that of T_r, which is r/8 on both
    subspaces. The larger margin wins and ties go to P1. Points satisfying
    no strict inequality form the core.

    Args:
        h: Cartan vector
        r: Positive truncation parameter
        literal: Apply the printed P1/P2 inequalities to h as given,
            without Weyl reduction; these regions overlap and do not
            tile H

    Returns:
        The region containing h
    """
    query = ChamberQuery(Parabolic.P0, r)
    if literal:
        return _classify_literal(h, r)
    h = dominant(h)
    if shifted_chamber_contains(query, h):
        return Region.END_P0
    margin_1 = projection_parameter(Subspace.J1, h) - r / 8
    margin_2 = projection_parameter(Subspace.J2, h) - r / 8
    if max(margin_1, margin_2) <= 0:
        return Region.CORE
    return Region.END_P1 if margin_1 >= margin_2 else Region.END_P2
