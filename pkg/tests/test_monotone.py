import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condclt import monotone as mono
from condclt.errors import NotComparable, OutOfDeskRange


def point_mass(x):
    return mono.FiniteDistribution(np.array([float(x)]), np.array([1.0]))


class TestExactEmptyBoxLaw:
    def test_one_ball_two_boxes(self):
        law = mono.exact_empty_box_law(2, 1)
        assert law.support.tolist() == [1.0]
        assert law.probs.tolist() == [1.0]

    def test_two_balls_two_boxes(self):
        law = mono.exact_empty_box_law(2, 2)
        assert law.support.tolist() == [0.0, 1.0]
        assert law.probs == pytest.approx([0.5, 0.5])

    def test_two_balls_three_boxes(self):
        law = mono.exact_empty_box_law(3, 2)
        assert law.support.tolist() == [1.0, 2.0]
        assert law.probs == pytest.approx([2 / 3, 1 / 3])

    def test_against_brute_force_enumeration(self):
        for n in [2, 3]:
            for m in range(0, 5):
                counts = mono.enumerate_allocation_counts(n, m)
                law = mono.exact_empty_box_law(n, m)
                brute = mono.scalar_law(counts[:, 0])
                assert law.support.tolist() == brute.support.tolist()
                assert law.probs == pytest.approx(brute.probs, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(OutOfDeskRange):
            mono.exact_empty_box_law(9, 1)
        with pytest.raises(OutOfDeskRange):
            mono.exact_empty_box_law(4, 13)


class TestStochasticDominance:
    def test_equal_distributions(self):
        law = mono.exact_empty_box_law(4, 3)
        ok, witness = mono.check_stochastic_dominance(law, law)
        assert ok and witness is None

    def test_point_masses(self):
        ok, _ = mono.check_stochastic_dominance(point_mass(0), point_mass(1))
        assert ok
        ok, witness = mono.check_stochastic_dominance(point_mass(1), point_mass(0))
        assert not ok and witness == 0.0

    def test_empty_boxes_decreasing_in_m(self):
        # More balls -> stochastically fewer empty boxes, for every
        # consecutive pair of ball counts.
        for n in range(2, 6):
            for m in range(8):
                larger = mono.exact_empty_box_law(n, m)
                smaller = mono.exact_empty_box_law(n, m + 1)
                ok, _ = mono.check_stochastic_dominance(smaller, larger)
                assert ok, (n, m)

    def test_transitivity_on_chain(self):
        d1 = mono.exact_empty_box_law(4, 6)
        d2 = mono.exact_empty_box_law(4, 3)
        d3 = mono.exact_empty_box_law(4, 0)
        assert mono.check_stochastic_dominance(d1, d2)[0]
        assert mono.check_stochastic_dominance(d2, d3)[0]
        assert mono.check_stochastic_dominance(d1, d3)[0]


class TestQuantileCoupling:
    def _check_marginals(self, atoms, d1, d2):
        m1, m2 = {}, {}
        for x1, x2, p in atoms:
            assert x1 <= x2
            m1[x1] = m1.get(x1, 0.0) + p
            m2[x2] = m2.get(x2, 0.0) + p
        for x, p in zip(d1.support, d1.probs):
            assert m1.get(float(x), 0.0) == pytest.approx(p, abs=1e-12)
        for x, p in zip(d2.support, d2.probs):
            assert m2.get(float(x), 0.0) == pytest.approx(p, abs=1e-12)

    def test_identical_is_diagonal(self):
        law = mono.exact_empty_box_law(4, 2)
        atoms = mono.quantile_coupling(law, law)
        assert all(x1 == x2 for x1, x2, _ in atoms)
        self._check_marginals(atoms, law, law)

    def test_point_masses(self):
        atoms = mono.quantile_coupling(point_mass(0), point_mass(1))
        assert atoms == [(0.0, 1.0, 1.0)]

    def test_empty_box_pair(self):
        d_small = mono.exact_empty_box_law(4, 3)
        d_large = mono.exact_empty_box_law(4, 2)
        atoms = mono.quantile_coupling(d_small, d_large)
        self._check_marginals(atoms, d_small, d_large)

    def test_not_comparable(self):
        with pytest.raises(NotComparable):
            mono.quantile_coupling(point_mass(1), point_mass(0))


class TestCumulativeTransform:
    def test_example(self):
        assert mono.cumulative_transform([1, 2, 3]).tolist() == [1, 3, 6]

    def test_zeros(self):
        assert mono.cumulative_transform([0.0, 0.0]).tolist() == [0.0, 0.0]

    @given(st.lists(st.integers(-100, 100), min_size=1, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_difference_inverts(self, z):
        out = mono.cumulative_transform(z)
        back = np.diff(out, prepend=0)
        assert back.tolist() == z


class TestMonotoneStatisticChains:
    def test_cumulative_occupancy_decreasing_in_m(self):
        # Boxes with at most j balls: stochastically decreasing in the number
        # of balls, exactly, for n <= 5 and j <= 4.
        for n in range(2, 6):
            laws = {m: mono.allocation_count_law(n, m) for m in range(9)}
            for j in range(5):
                def stat(counts, j=j):
                    return counts[: j + 1].sum()
                for m in range(8):
                    larger = mono.functional_law(laws[m], stat)
                    smaller = mono.functional_law(laws[m + 1], stat)
                    ok, _ = mono.check_stochastic_dominance(smaller, larger)
                    assert ok, (n, m, j)

    def test_cumulative_degree_counts_decreasing_in_m(self):
        # Vertices with degree <= j in a uniform m-edge graph on 4 vertices.
        laws = {m: mono.gnm_count_law(4, m) for m in range(7)}
        for j in range(4):
            def stat(counts, j=j):
                return counts[: j + 1].sum()
            for m in range(6):
                larger = mono.functional_law(laws[m], stat)
                smaller = mono.functional_law(laws[m + 1], stat)
                ok, _ = mono.check_stochastic_dominance(smaller, larger)
                assert ok, (m, j)

    def test_increasing_coefficient_sums_increasing_in_m(self):
        # Sums with increasing coefficients over degree counts grow
        # stochastically with the edge count (desk-scale check at n = 4).
        laws = {m: mono.gnm_count_law(4, m) for m in range(7)}
        coeffs = np.array([0.0, 1.0, 3.0, 7.0])

        def stat(counts):
            return float(coeffs @ counts)

        for m in range(6):
            smaller = mono.functional_law(laws[m], stat)
            larger = mono.functional_law(laws[m + 1], stat)
            ok, _ = mono.check_stochastic_dominance(smaller, larger)
            assert ok, m


class TestExactLaws:
    def test_allocation_law_total_mass(self):
        law = mono.allocation_count_law(5, 8)
        assert sum(law.values()) == Fraction(1)

    def test_allocation_law_matches_enumeration(self):
        law = mono.allocation_count_law(3, 3)
        counts = mono.enumerate_allocation_counts(3, 3)
        brute = {}
        for row in counts:
            key = tuple(int(v) for v in row)
            brute[key] = brute.get(key, 0) + 1
        for key, weight in law.items():
            assert weight == Fraction(brute[key], len(counts))

    def test_gnm_law_total_mass(self):
        for m in range(7):
            assert sum(mono.gnm_count_law(4, m).values()) == Fraction(1)

    def test_exact_moments_match_known_triangle(self):
        counts = mono.enumerate_gnm_degree_counts(3, 3)
        mean, cov = mono.exact_moments(counts)
        assert mean.tolist() == [0.0, 0.0, 3.0]
        assert np.abs(cov).max() == 0.0

    def test_surjection_counts(self):
        assert mono.surjection_count(3, 2) == 6
        assert mono.surjection_count(4, 4) == math.factorial(4)
        assert mono.surjection_count(2, 3) == 0
