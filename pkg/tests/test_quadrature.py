import math

import numpy as np
import pytest

from mechcat.quadrature import fringe_edges, integrate_1d, integrate_2d, uniform_edges


class TestEdges:
    def test_fringe_alignment(self):
        edges = fringe_edges(-3.0, 3.0, 4.0, max_width=2.0)
        # cos(4x) zeros at odd multiples of pi/8 must appear among the edges
        zero = math.pi / 8
        assert any(abs(e - zero) < 1e-12 for e in edges)
        widths = np.diff(edges)
        assert widths.max() <= math.pi / 4 + 1e-12

    def test_max_width_enforced_for_slow_fringes(self):
        edges = fringe_edges(-7.0, 7.0, 0.02, max_width=0.9)
        assert np.diff(edges).max() <= 0.9 + 1e-12

    def test_uniform(self):
        edges = uniform_edges(0.0, 1.0, 0.3)
        assert edges[0] == 0.0 and edges[-1] == 1.0
        assert len(edges) == 5


class TestIntegrate1d:
    def test_gaussian(self):
        res = integrate_1d(
            lambda x: np.exp(-(x**2)), uniform_edges(-8.0, 8.0, 1.0), abs_tol=1e-12
        )
        assert res.values[0] == pytest.approx(math.sqrt(math.pi), abs=1e-12)

    def test_absolute_cosine_with_gaussian(self):
        lam = 1.0 / 16.0
        edges = fringe_edges(-30.0, 30.0, 1.0, max_width=2.0)
        res = integrate_1d(
            lambda x: np.exp(-lam * x * x) * np.abs(np.cos(x)), edges, abs_tol=1e-10
        )
        from scipy.integrate import quad

        ref, _ = quad(lambda x: math.exp(-lam * x * x) * abs(math.cos(x)),
                      -30, 30, limit=2000)
        assert res.values[0] == pytest.approx(ref, abs=1e-8)

    def test_vector_components_refined_together(self):
        def f(x):
            return np.stack([np.exp(-(x**2)), np.abs(x) * np.exp(-(x**2))])

        res = integrate_1d(f, uniform_edges(-6.0, 6.0, 3.0), abs_tol=1e-11)
        assert res.values[0] == pytest.approx(math.sqrt(math.pi), abs=1e-10)
        assert res.values[1] == pytest.approx(1.0, abs=1e-10)


class TestIntegrate2d:
    def test_isotropic_gaussian(self):
        res = integrate_2d(
            lambda x, p: np.exp(-(x**2) - p**2),
            uniform_edges(-7.0, 7.0, 1.5),
            uniform_edges(-7.0, 7.0, 1.5),
            abs_tol=1e-10,
        )
        assert res.values[0] == pytest.approx(math.pi, abs=1e-9)

    def test_absolute_value_kink(self):
        # |cos(4x)| * gaussian: kinks on fringe-aligned boundaries
        res = integrate_2d(
            lambda x, p: np.abs(np.cos(4 * x)) * np.exp(-(x**2) - p**2),
            fringe_edges(-6.0, 6.0, 4.0, max_width=1.0),
            uniform_edges(-6.0, 6.0, 1.0),
            abs_tol=1e-8,
        )
        from scipy.integrate import quad

        fx, _ = quad(lambda x: abs(math.cos(4 * x)) * math.exp(-(x**2)), -6, 6,
                     limit=500)
        expect = fx * math.sqrt(math.pi)
        assert res.values[0] == pytest.approx(expect, abs=1e-7)

    def test_error_estimate_reported(self):
        res = integrate_2d(
            lambda x, p: np.exp(-(x**2) - p**2),
            uniform_edges(-6.0, 6.0, 2.0),
            uniform_edges(-6.0, 6.0, 2.0),
            abs_tol=1e-9,
        )
        assert res.error[0] < 1e-9
        assert res.n_points > 0
