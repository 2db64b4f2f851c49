import numpy as np
import pytest
from hypothesis import given, strategies as st

from poscocycle.cones import (comparable, cone_contains, cone_interior_contains,
                              positive_decompose, standard_cone, type_k_cone)

finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def vectors(n):
    return st.lists(finite_floats, min_size=n, max_size=n).map(np.array)


class TestMembership:
    def test_standard_contains(self):
        c = standard_cone(3)
        assert cone_contains([1, 0, 2], c)
        assert not cone_contains([-1e-12, 1, 0], c)  # strict sign semantics

    def test_type_k_contains(self):
        c = type_k_cone(1, 1)
        assert cone_contains([1, -1], c)
        assert not cone_contains([1, 1], c)

    def test_interior(self):
        assert cone_interior_contains([1, 2], standard_cone(2))
        assert not cone_interior_contains([1, 0], standard_cone(2))
        assert cone_interior_contains([2, -3], type_k_cone(1, 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            cone_contains([1, 2, 3], standard_cone(2))


class TestDecompose:
    def test_examples(self):
        for u, plus, minus in [
            ([3, -2], [3, 0], [0, 2]),
            ([0, 0], [0, 0], [0, 0]),
            ([-1, -1], [0, 0], [1, 1]),
        ]:
            p, m = positive_decompose(u)
            assert np.array_equal(p, plus) and np.array_equal(m, minus)

    @given(vectors(4))
    def test_reassembly_exact(self, u):
        p, m = positive_decompose(u)
        c = standard_cone(4)
        assert np.array_equal(p - m, u)
        assert cone_contains(p, c) and cone_contains(m, c)

    @given(vectors(5), st.sampled_from([1, 2, np.inf]))
    def test_parts_never_larger(self, u, p):
        plus, minus = positive_decompose(u)
        assert np.linalg.norm(plus, p) <= np.linalg.norm(u, p)
        assert np.linalg.norm(minus, p) <= np.linalg.norm(u, p)


class TestMonotonicNorms:
    @given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=3, max_size=3),
           st.lists(st.floats(min_value=0, max_value=1e6), min_size=3, max_size=3),
           st.sampled_from([1, 2, np.inf]))
    def test_norm_monotone_on_order(self, a, b, p):
        u = np.array(a)
        v = u + np.array(b)  # 0 <= u <= v componentwise
        assert np.linalg.norm(u, p) <= np.linalg.norm(v, p) * (1 + 1e-15)


class TestComparable:
    def test_tight_bounds(self):
        c = standard_cone(2)
        assert comparable([2, 4], [1, 1], c) == (2.0, 4.0)

    def test_reflexive(self):
        c = standard_cone(2)
        assert comparable([1, 3], [1, 3], c) == (1.0, 1.0)

    def test_absent_on_boundary(self):
        c = standard_cone(2)
        assert comparable([1, 0], [1, 1], c) is None

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            comparable([0, 0], [1, 1], standard_cone(2))

    def test_bounds_certify_order(self):
        rng = np.random.default_rng(5)
        c = standard_cone(4)
        for _ in range(200):
            u = rng.uniform(0.1, 10, 4)
            v = rng.uniform(0.1, 10, 4)
            lo, hi = comparable(u, v, c)
            assert np.all(lo * v <= u * (1 + 1e-12))
            assert np.all(u <= hi * v * (1 + 1e-12))

    def test_symmetric_relation(self):
        rng = np.random.default_rng(6)
        c = standard_cone(3)
        for _ in range(100):
            u = rng.uniform(0, 2, 3)
            v = rng.uniform(0, 2, 3)
            if not np.any(u) or not np.any(v):
                continue
            assert (comparable(u, v, c) is None) == (comparable(v, u, c) is None)

    def test_transitive_on_interior(self):
        rng = np.random.default_rng(7)
        c = standard_cone(3)
        for _ in range(50):
            u, v, w = rng.uniform(0.01, 5, (3, 3))
            assert comparable(u, v, c) and comparable(v, w, c) and comparable(u, w, c)

    def test_type_k(self):
        c = type_k_cone(1, 2)
        got = comparable([2, -4, -2], [1, -2, -1], c)
        assert got == (2.0, 2.0)
