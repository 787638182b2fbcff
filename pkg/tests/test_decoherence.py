import math

import numpy as np
import pytest

from mechcat.decoherence import (
    DecoherenceError,
    ThermalEnvironment,
    bath_occupancy,
    decohered_protocol_state,
    feasibility_check,
    phonons_per_period,
    thermal_channel,
)
from mechcat.constants import BOLTZMANN_K, HBAR
from mechcat.phasespace import PhaseSpaceState, WignerTerm, vacuum
from mechcat.protocol import ProtocolConfig, build_scs, run_sequence


def gauss_hermite_convolution(term, nbar_th, x, p, order=60):
    """Independent convolution of one term with the thermal kernel."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)

    def term_value(xx, pp):
        return term.weight * np.exp(
            1j * (term.kx * xx + term.kp * pp)
            - ((xx - term.x0) ** 2 + (pp - term.p0) ** 2) / term.s
        )

    total = np.zeros(np.broadcast(x, p).shape, dtype=complex)
    scale = math.sqrt(2.0 * nbar_th)
    for i, u in enumerate(nodes):
        for j, v in enumerate(nodes):
            total += weights[i] * weights[j] * term_value(x - scale * u, p - scale * v)
    return total / math.pi


class TestThermalChannel:
    def test_zero_noise_is_identity(self):
        scs = build_scs(3, 1.0, 0.1)
        assert thermal_channel(scs, 0.0) is scs

    def test_vacuum_becomes_thermal(self):
        out = thermal_channel(vacuum(), 0.5)
        t = out.terms[0]
        assert t.s == pytest.approx(2.0)
        assert t.weight == pytest.approx(1 / (2 * math.pi))

    def test_fringe_damping_matches_numerical_convolution(self):
        term = WignerTerm(-0.17, 0.0, 1.5, 1.0, 3.0, 0.0)
        state = PhaseSpaceState([term, term.conjugate_partner()])
        out = thermal_channel(state, 0.01)
        x = np.linspace(-2, 2, 9)
        p = np.linspace(0, 3, 9)
        X, P = np.meshgrid(x, p, indexing="ij")
        direct = sum(
            gauss_hermite_convolution(t, 0.01, X, P) for t in state.terms
        ).real
        assert np.max(np.abs(out.value(X, P) - direct)) < 1e-8
        # leading damping factor e^{-k^2 nth/2} times width rescale
        fringe = [t for t in out.terms if t.kx > 0][0]
        lead = math.exp(-9 * 0.01 * 1.0 / (2 * 1.02)) * (1.0 / 1.02)
        assert abs(fringe.weight) == pytest.approx(0.17 * lead, rel=1e-12)

    def test_semigroup_property(self):
        scs = build_scs(3, 1.0, 0.0)
        grid = scs.default_grid()
        two = thermal_channel(thermal_channel(scs, 0.013), 0.027)
        one = thermal_channel(scs, 0.040)
        assert np.max(np.abs(two.evaluate(grid) - one.evaluate(grid))) < 1e-10

    def test_trace_preservation(self):
        scs = build_scs(4, 1.0, 0.2)
        assert thermal_channel(scs, 0.37).integral() == pytest.approx(
            scs.integral(), abs=1e-12
        )

    def test_second_moment_growth(self):
        state = vacuum(0.3)
        nth = 0.07
        x2_before, p2_before = state.second_moments()
        x2_after, p2_after = thermal_channel(state, nth).second_moments()
        assert x2_after - x2_before == pytest.approx(nth, abs=1e-12)
        assert p2_after - p2_before == pytest.approx(nth, abs=1e-12)

    def test_negative_noise_rejected(self):
        with pytest.raises(DecoherenceError):
            thermal_channel(vacuum(), -0.1)


class TestDecoheredProtocolState:
    def test_zero_noise_reduces_to_cat(self):
        closed = decohered_protocol_state(3, 1.0, 0.1, 0.0)
        ref = build_scs(3, 1.0, 0.1)
        grid = ref.default_grid()
        assert np.max(np.abs(closed.evaluate(grid) - ref.evaluate(grid))) < 1e-12

    @pytest.mark.parametrize("n_steps", [1, 2, 3, 5, 7])
    def test_equivalent_to_sequential_construction(self, n_steps):
        mu, nbar, nth = 1.0, 0.1, 2.09e-3
        closed = decohered_protocol_state(n_steps, mu, nbar, nth)
        config = ProtocolConfig.cat(n_steps, mu, nbar, per_step_thermal=nth)
        sequential, _ = run_sequence(config)
        grid = closed.default_grid(max_samples=512)
        assert np.max(np.abs(closed.evaluate(grid) - sequential.evaluate(grid))) < 1e-9

    def test_weak_decoherence_close_to_ideal_at_seven_steps(self):
        from mechcat.measures import compute_report

        ideal = compute_report(decohered_protocol_state(7, 1.0, 0.0, 0.0))
        weak = compute_report(decohered_protocol_state(7, 1.0, 0.0, 1e-5))
        for attr in ("min_w", "delta", "lee_jeong", "macroscopicity"):
            a, b = getattr(ideal, attr), getattr(weak, attr)
            assert abs(a - b) <= 0.05 * abs(a)


class TestEnvironment:
    def test_wilson_bath_occupancy(self):
        omega = 2 * math.pi * 4.30e6
        nb = bath_occupancy(0.1, omega)
        assert nb == pytest.approx(484, rel=2e-3)
        env = ThermalEnvironment(nb, 7.54e5, omega)
        assert phonons_per_period(env) == pytest.approx(4.05e-3, rel=0.01)

    def test_zero_temperature_limit(self):
        assert bath_occupancy(1e-6, 2 * math.pi * 1e6) < 1e-10

    def test_log2_point(self):
        omega = 1e7
        temp = HBAR * omega / (BOLTZMANN_K * math.log(2.0))
        assert bath_occupancy(temp, omega) == pytest.approx(1.0, rel=1e-12)

    def test_phonons_per_period_examples(self):
        leijssen = ThermalEnvironment(
            bath_occupancy(0.1, 2 * math.pi * 3.74e6), 3.74e4, 2 * math.pi * 3.74e6
        )
        assert phonons_per_period(leijssen) == pytest.approx(9.40e-2, rel=0.01)
        clean = ThermalEnvironment(0.0, math.pi * 1e6, 1.0)
        assert phonons_per_period(clean) == pytest.approx(1e-6, rel=1e-12)
        proposal = ThermalEnvironment(
            bath_occupancy(0.1, 2 * math.pi * 1e6), 6.28e6, 2 * math.pi * 1e6
        )
        assert phonons_per_period(proposal) == pytest.approx(2.09e-3, rel=0.01)

    def test_environment_derived_rates(self):
        env = ThermalEnvironment(10.0, 1e5, 2 * math.pi * 1e6)
        assert env.intrinsic_decay == pytest.approx(env.mech_frequency / 1e5)
        assert env.decoherence_rate == pytest.approx(21 * env.intrinsic_decay)

    def test_feasibility(self):
        omega = 2 * math.pi * 1e6
        env = ThermalEnvironment(bath_occupancy(0.1, omega), 6.28e6, omega)
        ok, margin = feasibility_check(env, 3)
        assert ok and margin > 10
        boundary = ThermalEnvironment(0.0, 2 * math.pi * 3, 1.0)
        ok, margin = feasibility_check(boundary, 3)
        assert not ok and margin == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(DecoherenceError):
            feasibility_check(env, 0)
