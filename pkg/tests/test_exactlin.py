import math
import random
import sys
import unittest
from fractions import Fraction
from pathlib import Path

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from exactlin import (BruhatFactorization, DimensionError, ExactLinError,
                      MatrixFormatError, NotUnimodularError, Permutation,
                      PermutationError, RationalMatrix, SojournVector,
                      UnimodularMatrix, bruhat_cell, bruhat_decompose,
                      bruhat_recompose, killing_norm, parabolic_contains,
                      sojourn_vector, submatrix_rank)


class TestPermutation(unittest.TestCase):
    """Test Permutation functionality."""

    def test_from_label(self):
        """Test cycle labels map to the expected images."""
        self.assertEqual(Permutation.from_label("12").images, (2, 1, 3))
        self.assertEqual(Permutation.from_label("(23)").images, (1, 3, 2))
        self.assertEqual(Permutation.from_label("13").images, (3, 2, 1))
        self.assertEqual(Permutation.from_label("123").images, (2, 3, 1))
        self.assertEqual(Permutation.from_label("e").images, (1, 2, 3))
        self.assertEqual(Permutation.from_label("12", n=2).images, (2, 1))

    def test_from_label_invalid(self):
        """Test unknown labels and labels outside S_2 raise."""
        with self.assertRaises(PermutationError):
            Permutation.from_label("14")
        with self.assertRaises(PermutationError):
            Permutation.from_label("23", n=2)

    def test_invalid_images(self):
        """Test non-bijective images are rejected."""
        with self.assertRaises(PermutationError):
            Permutation([1, 1, 2])
        with self.assertRaises(ValueError):
            Permutation([])

    def test_all_and_lengths(self):
        """Test S_3 has six elements with the right length distribution."""
        elements = Permutation.all(3)
        self.assertEqual(len(elements), 6)
        lengths = sorted(w.length() for w in elements)
        self.assertEqual(lengths, [0, 1, 1, 2, 2, 3])

    def test_inversions(self):
        """Test inversion sets of the transpositions."""
        self.assertEqual(Permutation.from_label("12").inversions(), [(1, 2)])
        self.assertEqual(Permutation.from_label("23").inversions(), [(2, 3)])
        self.assertEqual(
            Permutation.from_label("13").inversions(),
            [(1, 2), (1, 3), (2, 3)],
        )

    def test_composition_and_inverse(self):
        """Test (w1 w2)(i) = w1(w2(i)) and w w^-1 = e."""
        s1 = Permutation.from_label("12")
        s2 = Permutation.from_label("23")
        product = s1 * s2
        for i in range(1, 4):
            self.assertEqual(product(i), s1(s2(i)))
        for w in Permutation.all(3):
            self.assertTrue((w * w.inverse()).is_identity())

    def test_longest_element_reduced_word(self):
        """Test s1 s2 s1 is the longest element."""
        s1 = Permutation.from_label("12")
        s2 = Permutation.from_label("23")
        self.assertEqual((s1 * s2 * s1).label(), "13")

    def test_sign_matches_matrix_determinant(self):
        """Test sign(w) = det P(w)."""
        for w in Permutation.all(3):
            self.assertEqual(w.matrix().determinant(), w.sign())

    def test_act(self):
        """Test the entry at position i moves to position w(i)."""
        w = Permutation.from_label("123")
        self.assertEqual(w.act(["a", "b", "c"]), ["c", "a", "b"])
        with self.assertRaises(PermutationError):
            w.act([1, 2])

    def test_predicates(self):
        """Test transposition predicates."""
        self.assertTrue(Permutation.from_label("13").is_transposition())
        self.assertFalse(
            Permutation.from_label("13").is_simple_transposition()
        )
        self.assertTrue(
            Permutation.from_label("23").is_simple_transposition()
        )
        self.assertFalse(Permutation.from_label("132").is_transposition())

    def test_equality_and_hash(self):
        """Test permutations compare by images."""
        self.assertEqual(Permutation([2, 1, 3]), Permutation.from_label("12"))
        self.assertEqual(len({Permutation.from_label("12"),
                              Permutation([2, 1, 3])}), 1)


class TestRationalMatrix(unittest.TestCase):
    """Test RationalMatrix functionality."""

    def test_exact_product(self):
        """Test products stay exact."""
        a = RationalMatrix([["1/2", 0], [0, 2]])
        b = RationalMatrix([[2, 0], [0, "1/2"]])
        self.assertEqual(a @ b, RationalMatrix.identity(2))

    def test_determinant_and_rank(self):
        """Test determinant and rank of a singular matrix."""
        m = RationalMatrix([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
        self.assertEqual(m.determinant(), 0)
        self.assertEqual(m.rank(), 2)

    def test_upper_unitriangular(self):
        """Test the unitriangular predicate."""
        unit = RationalMatrix([[1, 5], [0, 1]])
        scaled = RationalMatrix([[2, 5], [0, 1]])
        self.assertTrue(unit.is_upper_unitriangular())
        self.assertFalse(scaled.is_upper_unitriangular())

    def test_non_square(self):
        """Test non-square input raises."""
        with self.assertRaises(MatrixFormatError):
            RationalMatrix([[1, 2]])

    def test_submatrix_rank(self):
        """Test rank of a southwest block."""
        rows = [[1, 0, 0], [1, 1, 0], [1, 1, 1]]
        self.assertEqual(submatrix_rank(rows, [1, 2], [0, 1]), 1)
        self.assertEqual(submatrix_rank(rows, [2], [0]), 1)


class TestUnimodularMatrix(unittest.TestCase):
    """Test UnimodularMatrix parsing and validation."""

    def test_from_json_strings(self):
        """Test JSON of integer strings."""
        g = UnimodularMatrix.from_json('[["2","1"],["1","1"]]')
        self.assertEqual(g.entries, ((2, 1), (1, 1)))
        self.assertEqual(g.to_json(), [["2", "1"], ["1", "1"]])

    def test_big_integers_round_trip(self):
        """Test entries beyond 64 bits are kept exactly."""
        big = 10**30
        g = UnimodularMatrix([[1, big], [0, 1]])
        self.assertEqual(UnimodularMatrix.from_json(g.to_json()), g)

    def test_not_unimodular(self):
        """Test determinant other than 1 raises."""
        with self.assertRaises(NotUnimodularError):
            UnimodularMatrix([[2, 0], [0, 1]])
        with self.assertRaises(NotUnimodularError):
            UnimodularMatrix([[0, 1], [1, 0]])

    def test_invalid_shapes(self):
        """Test unsupported dimensions and malformed JSON raise."""
        with self.assertRaises(MatrixFormatError):
            UnimodularMatrix([[1]])
        with self.assertRaises(MatrixFormatError):
            UnimodularMatrix.from_json("not json")
        with self.assertRaises(MatrixFormatError):
            UnimodularMatrix.from_json('[["1.5","0"],["0","1"]]')
        with self.assertRaises(MatrixFormatError):
            UnimodularMatrix([[True, 0], [0, 1]])

    def test_random_is_seeded(self):
        """Test random matrices are reproducible and unimodular."""
        a = UnimodularMatrix.random(3, random.Random(11))
        b = UnimodularMatrix.random(3, random.Random(11))
        self.assertEqual(a, b)
        self.assertEqual(a.as_rational().determinant(), 1)

    def test_parabolic_contains(self):
        """Test membership in the standard parabolics."""
        upper = UnimodularMatrix([[1, 2, 3], [0, 1, 4], [0, 0, 1]])
        block = UnimodularMatrix([[1, 1, 0], [1, 2, 0], [0, 0, 1]])
        self.assertTrue(parabolic_contains("P0", upper))
        self.assertTrue(parabolic_contains("P1", block))
        self.assertFalse(parabolic_contains("P0", block))
        self.assertFalse(parabolic_contains("P2", block))
        with self.assertRaises(ExactLinError):
            parabolic_contains("P3", upper)


class TestBruhatDecompose(unittest.TestCase):
    """Test the exact Bruhat factorization."""

    def test_weyl_element(self):
        """Test [[0,-1],[1,0]] factors with a = (1, 1) in the cell (12)."""
        f = bruhat_decompose(UnimodularMatrix([[0, -1], [1, 0]]))
        self.assertEqual(f.w.images, (2, 1))
        self.assertEqual(f.to_dict()["a_diag"], ["1", "1"])
        self.assertEqual(f.m_sign, (-1, 1))

    def test_two_by_two_example(self):
        """Test [[2,1],[1,1]]: cell (12), a = (1, 1), m = (-1, +1)."""
        g = UnimodularMatrix([[2, 1], [1, 1]])
        f = bruhat_decompose(g)
        self.assertEqual(f.w.label(), "12")
        self.assertEqual(f.a_diag, (Fraction(1), Fraction(1)))
        self.assertEqual(f.m_sign, (-1, 1))
        self.assertEqual(bruhat_recompose(f), g)

    def test_lower_left_sets_diagonal(self):
        """Test a_diag = (1/|c|, |c|) for 2x2 matrices with c != 0."""
        g = UnimodularMatrix([[2, 1], [5, 3]])
        f = bruhat_decompose(g)
        self.assertEqual(f.a_diag, (Fraction(1, 5), Fraction(5)))
        self.assertEqual(bruhat_recompose(f), g)

    def test_identity(self):
        """Test the identity lies in the trivial cell."""
        f = bruhat_decompose(UnimodularMatrix.identity(3))
        self.assertTrue(f.w.is_identity())
        self.assertEqual(f, BruhatFactorization.identity(3))

    def test_lower_unitriangular_cell(self):
        """Test [[1,0,0],[1,1,0],[1,1,1]] lies in the cell (123)."""
        g = UnimodularMatrix([[1, 0, 0], [1, 1, 0], [1, 1, 1]])
        f = bruhat_decompose(g)
        self.assertEqual(f.w.images, (2, 3, 1))
        self.assertEqual(bruhat_cell(g), f.w)
        self.assertEqual(bruhat_recompose(f), g)

    def test_antidiagonal_longest_element(self):
        """Test an antidiagonal matrix lies in the longest cell."""
        g = UnimodularMatrix([[0, 0, 1], [0, -1, 0], [1, 0, 0]])
        f = bruhat_decompose(g)
        self.assertEqual(f.w.label(), "13")
        self.assertEqual(bruhat_recompose(f), g)

    def test_round_trip_random(self):
        """Test exact round trip and the rank oracle on random matrices."""
        rng = random.Random(2024)
        for n in (2, 3):
            for _ in range(150):
                g = UnimodularMatrix.random(n, rng)
                f = bruhat_decompose(g)
                self.assertEqual(bruhat_recompose(f), g)
                self.assertEqual(bruhat_cell(g), f.w)
                self.assertTrue(f.u_left.is_upper_unitriangular())
                self.assertTrue(f.u_right.is_upper_unitriangular())
                self.assertEqual(math.prod(f.a_diag), 1)
                self.assertTrue(all(a > 0 for a in f.a_diag))

    def test_upper_unitriangular_moves_right(self):
        """Test [[1,5],[0,1]] gives u_left = I and u_right = the input."""
        g = UnimodularMatrix([[1, 5], [0, 1]])
        f = bruhat_decompose(g)
        self.assertTrue(f.w.is_identity())
        self.assertEqual(f.u_left, RationalMatrix.identity(2))
        self.assertEqual(f.u_right, RationalMatrix([[1, 5], [0, 1]]))
        self.assertEqual(f.a_diag, (Fraction(1), Fraction(1)))

    def test_u_left_supported_on_inversions(self):
        """Test u_left vanishes above the diagonal off the inversions."""
        rng = random.Random(7)
        for _ in range(100):
            g = UnimodularMatrix.random(3, rng)
            f = bruhat_decompose(g)
            inversions = set(f.w.inversions())
            for i in range(3):
                for j in range(i + 1, 3):
                    if (i + 1, j + 1) not in inversions:
                        self.assertEqual(f.u_left[i, j], 0, (g, i, j))
            self.assertEqual(bruhat_recompose(f), g)

    def test_parabolic_cell_moves_right(self):
        """Test a block matrix in the cell (12) keeps no u_left[1, 3]."""
        g = UnimodularMatrix([[2, 1, 4], [1, 1, 3], [0, 0, 1]])
        f = bruhat_decompose(g)
        self.assertEqual(f.w.label(), "12")
        self.assertEqual(f.u_left[0, 2], 0)
        self.assertEqual(f.u_left[1, 2], 0)
        self.assertEqual(bruhat_recompose(f), g)

    def test_left_right_translation_invariance(self):
        """Test unipotent translations on both sides keep w and a."""
        g = UnimodularMatrix([[2, 3, 1], [1, 2, 1], [1, 1, 1]])
        left = UnimodularMatrix([[1, 4, -2], [0, 1, 7], [0, 0, 1]])
        right = UnimodularMatrix([[1, -3, 5], [0, 1, 1], [0, 0, 1]])
        base = bruhat_decompose(g)
        moved = bruhat_decompose(left @ g @ right)
        self.assertEqual(moved.w, base.w)
        self.assertEqual(moved.a_diag, base.a_diag)

    def test_factorization_validation(self):
        """Test inconsistent factors are rejected."""
        with self.assertRaises(ExactLinError):
            BruhatFactorization(
                RationalMatrix.identity(2),
                (Fraction(2), Fraction(1)),
                (1, 1),
                Permutation.identity(2),
                RationalMatrix.identity(2),
            )


class TestSojournVector(unittest.TestCase):
    """Test sojourn vectors and Killing norms."""

    def test_two_by_two_sojourn(self):
        """Test h = (-ln c, ln c) and Killing norm 2 sqrt(2) ln c."""
        f = bruhat_decompose(UnimodularMatrix([[2, 1], [5, 3]]))
        v = sojourn_vector(f)
        self.assertAlmostEqual(v.h[0], -math.log(5), places=14)
        self.assertAlmostEqual(v.h[1], math.log(5), places=14)
        self.assertAlmostEqual(
            killing_norm(v), 2 * math.sqrt(2) * math.log(5), places=13
        )
        self.assertAlmostEqual(v.metric_norm(), math.sqrt(2) * math.log(5))

    def test_huge_entries_do_not_overflow(self):
        """Test logs of huge rationals stay finite."""
        c = 10**400
        g = UnimodularMatrix([[1, 0], [c, 1]])
        v = sojourn_vector(bruhat_decompose(g))
        self.assertAlmostEqual(v.h[1], 400 * math.log(10), places=9)

    def test_trace_zero_required(self):
        """Test non-trace-zero vectors raise."""
        with self.assertRaises(ExactLinError):
            SojournVector((1.0, 1.0))

    def test_killing_norm_dimension(self):
        """Test dimension 4 raises DimensionError."""
        with self.assertRaises(DimensionError):
            killing_norm([1.0, -1.0, 0.0, 0.0])
        self.assertAlmostEqual(
            killing_norm([1.0, 0.0, -1.0]), math.sqrt(12.0)
        )


if __name__ == "__main__":
    unittest.main()
