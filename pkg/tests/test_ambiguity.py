import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dral.ambiguity import (
    AmbiguitySet,
    DiscreteDistribution,
    gaussian_reference,
    reference_from_csv,
    sample,
    uniform_reference,
    worst_case_expectation,
)
from dral.harness import synthetic_grid
from oracles import lattice_lp, random_feasible_points, vertex_lp

STEP = 0.005


def ball(p, eta):
    return AmbiguitySet(DiscreteDistribution(np.asarray(p, dtype=float)), eta)


def lattice_instance(rng):
    """p_ref on the 0.005 lattice and eta a multiple of 0.005, so the lattice search is exact."""
    n = int(rng.integers(2, 7))
    cuts = np.sort(rng.choice(np.arange(1, 200), size=n - 1, replace=False))
    p = np.diff(np.concatenate(([0], cuts, [200]))) * STEP
    eta = float(rng.integers(0, 41)) * STEP
    v = rng.normal(size=n)
    return p, eta, v


class TestDistribution:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            DiscreteDistribution([0.5, 0.4])

    def test_weights_readonly(self):
        d = DiscreteDistribution([0.25, 0.75])
        with pytest.raises(ValueError):
            d.weights[0] = 1.0

    def test_negative_eta(self):
        with pytest.raises(ValueError):
            ball([1.0], -0.1)


class TestWorstCase:
    def test_eta_zero_is_reference(self):
        p = [0.1, 0.6, 0.3]
        v = [4.0, -1.0, 2.5]
        val, pstar = worst_case_expectation(ball(p, 0.0), v)
        assert val == pytest.approx(np.dot(p, v), abs=1e-15)
        np.testing.assert_array_equal(pstar.weights, p)

    @pytest.mark.parametrize("eta", [1.0, 3.0])
    def test_large_eta_is_point_mass(self, eta):
        v = [0.5, 2.0, -1.0, 2.0]
        val, pstar = worst_case_expectation(ball([0.25] * 4, eta), v)
        assert val == 2.0
        assert pstar.weights.tolist() == [0.0, 1.0, 0.0, 0.0]

    def test_worked_example(self):
        val, pstar = worst_case_expectation(ball([0.5, 0.3, 0.2], 0.1), [1.0, 2.0, 3.0])
        assert val == pytest.approx(1.9, abs=1e-12)
        np.testing.assert_allclose(pstar.weights, [0.4, 0.3, 0.3], atol=1e-12)
        ref, _ = lattice_lp([0.5, 0.3, 0.2], 0.1, np.array([1.0, 2.0, 3.0]))
        assert val == pytest.approx(ref, abs=1e-2)

    def test_ties_go_to_lower_index(self):
        _, pstar = worst_case_expectation(ball([0.5, 0.25, 0.25], 0.2), [0.0, 1.0, 1.0])
        np.testing.assert_allclose(pstar.weights, [0.3, 0.45, 0.25], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            worst_case_expectation(ball([0.5, 0.5], 0.1), [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_values(self, bad):
        with pytest.raises(ValueError):
            worst_case_expectation(ball([0.5, 0.5], 0.1), [1.0, bad])


class TestAgainstOracles:
    def test_lattice_search_200_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p, eta, v = lattice_instance(rng)
            val, _ = worst_case_expectation(ball(p, eta), v)
            ref, _ = lattice_lp(p, eta, v)
            assert abs(val - ref) <= 1e-2
            # lattice instances put every vertex on the lattice, so agreement is exact
            assert val == pytest.approx(ref, abs=1e-9)

    def test_vertex_enumeration_off_lattice(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            p = rng.dirichlet(np.ones(n))
            eta = float(rng.uniform(0, 0.5))
            v = rng.normal(size=n) * 3
            val, _ = worst_case_expectation(ball(p, eta), v)
            assert val == pytest.approx(vertex_lp(p, eta, v), abs=1e-10)

    def test_beats_random_feasible_points(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            p = rng.dirichlet(np.ones(n))
            eta = float(rng.uniform(0, 0.3))
            v = rng.normal(size=n)
            amb = ball(p, eta)
            val, pstar = worst_case_expectation(amb, v)
            Q = random_feasible_points(p, eta, 1000, rng)
            assert all(amb.contains(q, tol=1e-9) for q in Q[:50])
            assert np.all(Q @ v <= pstar.expectation(v) + 1e-12)


@settings(max_examples=100, deadline=None)
@given(
    w=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8),
    v=st.lists(st.integers(-80, 80), min_size=8, max_size=8),
    eta=st.floats(0, 1.5),
    c=st.integers(-40, 40),
)
def test_feasible_and_translation_equivariant(w, v, eta, c):
    # dyadic values keep v + c exact, so the ordering of v cannot change under the shift
    p = np.asarray(w) / np.sum(w)
    v = np.asarray(v[: len(p)]) / 8.0
    c = c / 8.0
    amb = ball(p, eta)
    val, pstar = worst_case_expectation(amb, v)
    q = pstar.weights
    assert np.all(q >= 0)
    assert abs(q.sum() - 1) <= 1e-10
    assert np.max(np.abs(q - p)) <= eta + 1e-10
    shifted, pshift = worst_case_expectation(amb, v + c)
    assert shifted == pytest.approx(val + c, abs=1e-9)
    np.testing.assert_array_equal(pshift.weights, q)


def test_monotone_in_eta(rng):
    for _ in range(50):
        n = int(rng.integers(1, 10))
        p = rng.dirichlet(np.ones(n))
        v = rng.normal(size=n)
        vals = [worst_case_expectation(ball(p, eta), v)[0] for eta in (0, 0.001, 0.01, 0.1, 1)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestSample:
    def test_point_mass(self, rng):
        w = np.zeros(10)
        w[7] = 1.0
        p = DiscreteDistribution(w)
        assert {sample(p, rng) for _ in range(200)} == {7}

    def test_uniform_frequencies(self, rng):
        p = uniform_reference(4)
        draws = np.array([sample(p, rng) for _ in range(100_000)])
        freq = np.bincount(draws, minlength=4) / draws.size
        assert np.all(np.abs(freq - 0.25) <= 0.01)

    def test_zero_mass_never_drawn(self, rng):
        p = DiscreteDistribution([0.2, 0.3, 0.1, 0.0, 0.4])
        draws = [sample(p, rng) for _ in range(100_000)]
        assert 3 not in draws

    def test_deterministic_given_stream(self):
        p = DiscreteDistribution([0.1, 0.2, 0.3, 0.4])
        a = [sample(p, np.random.default_rng(3)) for _ in range(5)]
        b = [sample(p, np.random.default_rng(3)) for _ in range(5)]
        assert a == b

    def test_consumes_one_uniform(self):
        p = DiscreteDistribution([0.5, 0.5])
        r1, r2 = np.random.default_rng(4), np.random.default_rng(4)
        sample(p, r1)
        r2.random()
        assert r1.random() == r2.random()


class TestReferences:
    def test_symmetric_grid(self):
        grid = synthetic_grid(2, 7)
        w = gaussian_reference(grid, 0.2).weights
        mirror = [int(np.flatnonzero(np.all(np.isclose(grid, -x), axis=1))[0]) for x in grid]
        np.testing.assert_allclose(w, w[mirror], atol=1e-12)

    def test_single_point(self):
        assert gaussian_reference([[0.4, -0.1]], 0.3).weights.tolist() == [1.0]

    def test_three_points(self):
        w = gaussian_reference([[-1.0], [0.0], [1.0]], 0.2).weights
        # e^{-2.5} / (1 + 2 e^{-2.5}), evaluated directly
        expected = 0.07050946066120506
        np.testing.assert_allclose(w, [expected, 1 - 2 * expected, expected], atol=1e-15)

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            gaussian_reference([[0.0]], 0.0)

    def test_uniform(self):
        assert uniform_reference(5).weights.tolist() == [0.2] * 5

    def test_from_csv(self, tmp_path):
        f = tmp_path / "w.csv"
        f.write_text("weight\n1\n3\n0\n")
        assert reference_from_csv(f, 3).weights.tolist() == [0.25, 0.75, 0.0]
        with pytest.raises(ValueError):
            reference_from_csv(f, 4)
