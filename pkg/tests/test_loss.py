import math

import numpy as np
import pytest

from mechcat.fockoracle import (
    apply_descriptor,
    lossy_step_fock,
    thermal_density,
    trace_distance,
)
from mechcat.loss import (
    LossError,
    LossModel,
    effective_coherent_operator,
    loss_mixture_state,
    lossy_herald_probability,
    mixture_weights_direct,
    poisson_mixture_weights,
    single_photon_loss_effect,
)
from mechcat.heralding import herald_probability
from mechcat.measures import compute_report
from mechcat.protocol import ProtocolConfig, build_scs, measurement_operator


class TestEffectiveOperator:
    def test_unit_efficiency_reduces_to_ideal(self):
        cfg = ProtocolConfig(
            steps=1, coupling=1.0, phases=(0.4,), click_sequence=((0, 1),),
            input_kind="coherent", alpha=0.7,
        )
        ideal = measurement_operator(cfg, 1)
        eff = effective_coherent_operator(1.0, 0.7, (0, 1), 0.4, 1.0)
        assert eff.coefficients == ideal.coefficients

    def test_scaled_amplitude(self):
        eff = effective_coherent_operator(0.81, 1.0, (0, 1), 0.4, 1.0)
        cfg = ProtocolConfig(
            steps=1, coupling=1.0, phases=(0.4,), click_sequence=((0, 1),),
            input_kind="coherent", alpha=0.9,
        )
        ideal = measurement_operator(cfg, 1)
        for (c1, k1), (c2, k2) in zip(eff.coefficients, ideal.coefficients):
            assert k1 == k2 and c1 == pytest.approx(c2, rel=1e-12)

    def test_dark_port_prefactor(self):
        eta, alpha = 0.9, 1 / math.sqrt(10)
        eff = effective_coherent_operator(eta, alpha, (0, 1), 0.0, 1.0)
        coeffs = {k: c for c, k in eff.coefficients}
        pref = math.exp(-0.09) * math.sqrt(0.09) / math.sqrt(2.0)
        assert coeffs[1] == pytest.approx(pref, rel=1e-12)
        assert coeffs[0] == pytest.approx(-pref, rel=1e-12)


class TestSinglePhotonLoss:
    def test_per_step_factor(self):
        assert single_photon_loss_effect(0.9) == 0.9
        assert single_photon_loss_effect(1.0) == 1.0
        assert single_photon_loss_effect(0.0) == 0.0
        assert single_photon_loss_effect(0.9) ** 3 == pytest.approx(0.729)

    def test_heralded_state_invariant_under_loss(self):
        rho0 = thermal_density(0.1, 40)
        cfg = ProtocolConfig.cat(1, 1.0, 0.1)
        lossless = apply_descriptor(rho0, measurement_operator(cfg, 1))
        for eta in (0.9, 0.5, 0.17):
            lossy = lossy_step_fock(rho0, eta, "single_photon", 0.0, 1.0, (0, 1))
            assert lossy.trace() / lossless.trace() == pytest.approx(eta, rel=1e-12)
            assert trace_distance(lossless.normalized(), lossy.normalized()) < 1e-10


class TestLossMixture:
    def test_unit_efficiency_is_lossless(self):
        model = LossModel(1.0, alpha=0.5)
        mix = loss_mixture_state(3, 1.0, 0.0, model)
        ref = build_scs(3, 1.0, 0.0)
        grid = ref.default_grid()
        assert np.max(np.abs(mix.evaluate(grid) - ref.evaluate(grid))) < 1e-12

    def test_mixture_structure(self):
        model = LossModel(0.75, alpha=1 / math.sqrt(10))
        mean = 3 * model.loss_photons
        weights = poisson_mixture_weights(mean, model.truncation_tail)
        assert np.all(weights >= 0)
        assert weights.sum() == pytest.approx(1.0, abs=model.truncation_tail * 2)
        mix = loss_mixture_state(3, 1.0, 0.0, model)
        assert mix.integral() == pytest.approx(1.0, abs=1e-12)
        # copies shifted by integer multiples of mu along momentum
        p_pops = sorted({round(t.p0, 9) for t in mix.terms if t.kx == 0})
        assert 0.0 in p_pops and 1.0 in p_pops and 3.0 in p_pops and 4.0 in p_pops

    def test_position_marginal_equals_lossless(self):
        model = LossModel(0.75, alpha=1 / math.sqrt(10))
        mix = loss_mixture_state(3, 1.0, 0.0, model)
        ref = build_scs(3, 1.0, 0.0)
        x = np.linspace(-5, 5, 4001)
        assert np.max(np.abs(mix.marginal(0.0).pdf(x) - ref.marginal(0.0).pdf(x))) < 1e-10

    def test_measures_stable_in_weak_loss_regime(self):
        # (1 - eta)|alpha|^2 = 0.025: the zero-loss mixture weight is
        # exp(-3 * 0.025) = 0.928, so the Wigner-shape measures shift at
        # first order in the mean lost-photon number (about 7% here, checked
        # against the four-mode oracle) while the marginal-based measure is
        # exactly invariant
        model = LossModel(0.75, alpha=1 / math.sqrt(10))
        mix = loss_mixture_state(3, 1.0, 0.0, model)
        ref_rep = compute_report(build_scs(3, 1.0, 0.0))
        mix_rep = compute_report(mix)
        assert abs(mix_rep.macroscopicity - ref_rep.macroscopicity) <= 1e-6
        for attr in ("min_w", "delta"):
            a, b = getattr(ref_rep, attr), getattr(mix_rep, attr)
            assert abs(a - b) <= 0.10 * abs(a)

    def test_mixture_equals_four_mode_oracle(self):
        from mechcat.fockoracle import FockWigner, fock_dimension
        from mechcat.protocol import cat_phase_schedule, phase_radians

        eta, alpha, mu, n = 0.75, 1 / math.sqrt(10), 1.0, 3
        mix = loss_mixture_state(n, mu, 0.0, LossModel(eta, alpha=alpha))
        rho = thermal_density(0.0, fock_dimension(n, mu) + 20)
        for phase in cat_phase_schedule(n, "click01"):
            rho = lossy_step_fock(rho, eta, "coherent", phase_radians(phase), mu,
                                  (0, 1), alpha=alpha)
        oracle_p = rho.trace()
        # the oracle success probability equals the eta-dependent closed form
        cfg = ProtocolConfig.cat(n, mu, 0.0, input_kind="coherent",
                                 alpha=alpha, efficiency=eta)
        assert oracle_p == pytest.approx(herald_probability(cfg), rel=1e-9)
        fw = FockWigner.like(rho.normalized(), mix)
        grid = mix.default_grid(max_samples=256)
        X, P = grid.meshgrid()
        assert np.max(np.abs(mix.evaluate(grid) - fw.value(X, P))) < 1e-10

    def test_poisson_collapse(self):
        direct = mixture_weights_direct(3, 0.025, 14)
        single = poisson_mixture_weights(3 * 0.025, 1e-15)
        n = min(len(direct), len(single))
        assert np.max(np.abs(direct[:n] - single[:n])) < 1e-10


class TestLossyHeraldProbability:
    def _config(self, eta, alpha=1 / math.sqrt(10)):
        return ProtocolConfig.cat(
            3, 1.0, 0.0, input_kind="coherent", alpha=alpha, efficiency=eta
        )

    def test_unit_efficiency_equals_closed_form(self):
        cfg = self._config(1.0)
        model = LossModel(1.0, alpha=1 / math.sqrt(10))
        assert lossy_herald_probability(cfg, model) == pytest.approx(
            herald_probability(cfg), rel=1e-12
        )

    def test_environment_sum_factor(self):
        cfg = self._config(0.75)
        model = LossModel(0.75, alpha=1 / math.sqrt(10))
        ratio = lossy_herald_probability(cfg, model) / herald_probability(cfg)
        assert ratio == pytest.approx(math.exp(3 * 0.025), rel=1e-9)

    def test_small_loss_close_to_closed_form(self):
        # one-step protocol at (1-eta)|alpha|^2 = 0.025: within 3%
        cfg = ProtocolConfig.cat(1, 1.0, 0.0, input_kind="coherent",
                                 alpha=1 / math.sqrt(10), efficiency=0.75)
        model = LossModel(0.75, alpha=1 / math.sqrt(10))
        full = lossy_herald_probability(cfg, model)
        assert abs(full - herald_probability(cfg)) <= 0.03 * herald_probability(cfg)

    def test_monotone_in_efficiency(self):
        model_alpha = 1 / math.sqrt(10)
        values = [
            lossy_herald_probability(self._config(eta), LossModel(eta, alpha=model_alpha))
            for eta in np.linspace(0.3, 1.0, 15)
        ]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))

    def test_rejects_single_photon_input(self):
        cfg = ProtocolConfig.cat(3, 1.0, 0.0)
        with pytest.raises(LossError):
            lossy_herald_probability(cfg, LossModel(0.9, alpha=0.3))


class TestLossyStepCoherent:
    def test_unit_efficiency_exact(self):
        rho0 = thermal_density(0.1, 40)
        alpha = 1 / math.sqrt(10)
        cfg = ProtocolConfig.cat(1, 1.0, 0.1, input_kind="coherent", alpha=alpha)
        ideal = apply_descriptor(rho0, measurement_operator(cfg, 1))
        lossy = lossy_step_fock(rho0, 1.0, "coherent", 2 * math.pi, 1.0, (0, 1),
                                alpha=alpha)
        assert lossy.trace() == pytest.approx(ideal.trace(), rel=1e-12)
        assert trace_distance(ideal.normalized(), lossy.normalized()) < 1e-12

    def test_weak_loss_close_to_lossless(self):
        rho0 = thermal_density(0.1, 40)
        alpha = 1 / math.sqrt(10)
        eta = 1 - 1e-4 / abs(alpha) ** 2
        cfg = ProtocolConfig.cat(1, 1.0, 0.1, input_kind="coherent", alpha=alpha)
        ideal = apply_descriptor(rho0, measurement_operator(cfg, 1))
        lossy = lossy_step_fock(rho0, eta, "coherent", 2 * math.pi, 1.0, (0, 1),
                                alpha=alpha)
        assert trace_distance(ideal.normalized(), lossy.normalized()) < 1e-3


class TestLossModelValidation:
    def test_bounds(self):
        with pytest.raises(LossError):
            LossModel(0.0)
        with pytest.raises(LossError):
            LossModel(1.1)
        with pytest.raises(LossError):
            LossModel(0.9, truncation_tail=1e-3)
