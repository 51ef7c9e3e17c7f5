"""Closed-form ground truth: location family, redundant pair, circle caps,
Gaussian MI, brute-force gridded MI, and the Fisher-projection ratio."""

import numpy as np
import pytest

from interpeff import (
    CircleOracle,
    InterpEffError,
    NATS_PER_BIT,
    OracleValue,
    RngStream,
    brute_force_mi,
    circle_joint_angle,
    circle_joint_cos,
    fisher_from_replications,
    gaussian_location_projection,
    gaussian_mi,
    mi_plugin_discrete,
    mixture_label_mi,
    oracle_circle,
    oracle_gaussian_location,
    oracle_redundant,
    projected_fisher_ratio,
)


class TestOracleValue:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            OracleValue(float("inf"), "nats", "x")

    def test_rejects_unknown_units(self):
        with pytest.raises(ValueError, match="units"):
            OracleValue(0.5, "furlongs", "x")

    def test_efficiency_values_must_be_in_unit_interval(self):
        with pytest.raises(ValueError, match="outside"):
            OracleValue(1.2, "dimensionless", "x")


class TestGaussianLocation:
    def test_zero_noise_is_fully_efficient(self):
        assert oracle_gaussian_location(1.0, 0.0).value == 1.0

    def test_equal_variances_give_half(self):
        assert oracle_gaussian_location(1.0, 1.0).value == 0.5

    def test_triple_noise_gives_quarter(self):
        assert oracle_gaussian_location(1.0, 3.0).value == 0.25

    def test_rejects_nonpositive_signal_variance(self):
        with pytest.raises(ValueError, match="sigma2"):
            oracle_gaussian_location(0.0, 1.0)


class TestFisherFromReplications:
    def test_monte_carlo_recovers_information(self):
        gen = RngStream(17).generator()
        zbars = 0.3 + gen.normal(size=100_000) / 10.0
        assert fisher_from_replications(zbars) == pytest.approx(100.0, abs=3.0)

    def test_variance_four_gives_quarter(self):
        # Spread {-2, 0, 2} has unbiased sample variance exactly 4.
        assert fisher_from_replications(np.array([-2.0, 0.0, 2.0])) == 0.25

    def test_constant_input_rejected(self):
        with pytest.raises(InterpEffError, match="variance"):
            fisher_from_replications(np.ones(50))


class TestRedundantPair:
    def test_unit_noise_value(self):
        assert oracle_redundant(1.0).value == pytest.approx(0.34657, abs=1e-5)

    def test_quarter_noise_value(self):
        assert oracle_redundant(0.25).value == pytest.approx(0.80472, abs=1e-5)

    def test_large_noise_limit_vanishes(self):
        assert oracle_redundant(1e12).value == pytest.approx(0.0, abs=1e-9)


class TestCircleOracle:
    def test_symmetric_half_cap_is_one_bit_each(self):
        res = oracle_circle(np.pi / 2, 0.0, symmetric=True)
        assert res.p == pytest.approx(0.5, abs=0)
        assert res.i_a == pytest.approx(1.0, abs=1e-12)
        assert res.i_b == pytest.approx(1.0, abs=1e-12)
        assert res.e_a == 1.0
        assert res.e_b == 1.0

    def test_asymmetric_half_cap_values(self):
        res = oracle_circle(np.pi / 2, 0.0, symmetric=False)
        assert res.p == pytest.approx(0.25, abs=0)
        assert res.i_a == pytest.approx(0.81128, abs=1e-5)
        assert res.i_b == pytest.approx(0.31128, abs=1e-5)
        assert res.e_b == pytest.approx(0.38369, abs=1e-5)

    def test_vanishing_cap_restores_full_efficiency(self):
        # The loss term is O(alpha) while I_A is O(alpha*log(1/alpha)), so
        # E_B -> 1 as the cap vanishes, at a logarithmic rate.
        values = [
            oracle_circle(alpha, 0.0, symmetric=False).e_b
            for alpha in (1e-2, 1e-6, 1e-30, 1e-200)
        ]
        assert all(np.diff(values) > 0)
        assert values[-1] > 0.99

    def test_symmetric_cosine_channel_is_always_lossless(self):
        for alpha in (0.3, 1.0, 2.0, 3.0):
            for q in (0.0, 0.1, 0.3):
                assert oracle_circle(alpha, q, symmetric=True).e_b == 1.0

    def test_asymmetric_cosine_channel_strictly_lossy(self):
        for alpha in (0.3, 1.0, 2.0, 3.0):
            for q in (0.0, 0.1, 0.3):
                assert oracle_circle(alpha, q, symmetric=False).e_b < 1.0

    def test_nats_conversion(self):
        res = oracle_circle(np.pi / 2, 0.0, symmetric=False)
        assert res.i_a_nats == pytest.approx(res.i_a * NATS_PER_BIT, abs=0)

    def test_degenerate_cap_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            oracle_circle(0.0, 0.0, symmetric=True)


class TestGaussianMi:
    def test_independent_is_zero(self):
        assert gaussian_mi(0.0).value == 0.0

    def test_rho_09_value(self):
        assert gaussian_mi(0.9).value == pytest.approx(0.830366, abs=1e-6)

    def test_sign_symmetric(self):
        assert gaussian_mi(0.7).value == gaussian_mi(-0.7).value

    def test_rejects_unit_correlation(self):
        with pytest.raises(ValueError, match="rho"):
            gaussian_mi(1.0)


class TestBruteForceMi:
    def test_product_joint_is_zero(self):
        rows = np.array([0.2, 0.3, 0.5])
        cols = np.array([0.6, 0.4])
        assert abs(brute_force_mi(np.outer(rows, cols))) < 1e-9

    def test_diagonal_joint_is_log_two(self):
        joint = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert brute_force_mi(joint) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_unnormalized_rejected(self):
        with pytest.raises(InterpEffError, match="normalized"):
            brute_force_mi(np.array([[0.5, 0.5], [0.5, 0.5]]))

    def test_agrees_with_plugin_on_same_table(self):
        gen = RngStream(23).generator()
        counts = gen.integers(1, 50, size=(5, 3))
        joint = counts / counts.sum()
        assert abs(brute_force_mi(joint) - mi_plugin_discrete(counts).value) < 1e-12

    def test_bits_units(self):
        joint = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert brute_force_mi(joint, units="bits") == pytest.approx(1.0, abs=1e-12)


class TestCircleGrids:
    def test_angle_grid_matches_closed_form(self):
        oracle = oracle_circle(np.pi / 2, 0.0, symmetric=False)
        joint = circle_joint_angle(np.pi / 2, 0.0, symmetric=False, grid=4096)
        assert brute_force_mi(joint, units="bits") == pytest.approx(
            oracle.i_a, abs=1e-3
        )

    def test_cos_grid_matches_closed_form(self):
        oracle = oracle_circle(np.pi / 2, 0.0, symmetric=False)
        joint = circle_joint_cos(np.pi / 2, 0.0, symmetric=False, n_bins=2 * 4096)
        assert brute_force_mi(joint, units="bits") == pytest.approx(
            oracle.i_b, abs=1e-3
        )

    def test_grid_refinement_converges(self):
        coarse = brute_force_mi(
            circle_joint_cos(np.pi / 2, 0.0, symmetric=False, n_bins=2 * 4096),
            units="bits",
        )
        fine = brute_force_mi(
            circle_joint_cos(np.pi / 2, 0.0, symmetric=False, n_bins=2 * 8192),
            units="bits",
        )
        assert abs(coarse - fine) < 1e-4

    def test_noisy_symmetric_cap_grids_agree_with_formulas(self):
        oracle = oracle_circle(1.1, 0.2, symmetric=True)
        ia = brute_force_mi(
            circle_joint_angle(1.1, 0.2, symmetric=True, grid=4096), units="bits"
        )
        ib = brute_force_mi(
            circle_joint_cos(1.1, 0.2, symmetric=True, n_bins=2 * 4096), units="bits"
        )
        assert ia == pytest.approx(oracle.i_a, abs=1e-3)
        assert ib == pytest.approx(oracle.i_b, abs=1e-3)


class TestProjectedFisherRatio:
    def test_identity_projection_is_one(self):
        info = np.diag([2.0, 5.0])
        assert projected_fisher_ratio(info, np.eye(2)) == pytest.approx(1.0, abs=0)
        h = np.array([1.0, 2.0])
        assert projected_fisher_ratio(info, np.eye(2), h) == pytest.approx(1.0, abs=0)

    def test_zero_projection_is_zero(self):
        info = np.diag([2.0, 5.0])
        assert projected_fisher_ratio(info, np.zeros((2, 2))) == 0.0

    def test_location_family_instantiation_matches_example(self):
        info, proj, h = gaussian_location_projection(1.0, 1.0, n=50)
        assert projected_fisher_ratio(info, proj, h) == pytest.approx(0.5, abs=1e-12)
        info, proj, h = gaussian_location_projection(1.0, 3.0, n=10)
        assert projected_fisher_ratio(info, proj, h) == pytest.approx(0.25, abs=1e-12)

    def test_trace_form_stays_in_unit_interval(self):
        gen = RngStream(3).generator()
        for _ in range(20):
            a = gen.normal(size=(4, 4))
            info = a @ a.T + 4 * np.eye(4)
            q, _ = np.linalg.qr(gen.normal(size=(4, 2)))
            proj = q @ q.T
            r = projected_fisher_ratio(info, proj)
            assert 0.0 <= r <= 1.0

    def test_non_spd_info_rejected(self):
        with pytest.raises(ValueError, match="positive definite"):
            projected_fisher_ratio(-np.eye(2), np.eye(2))

    def test_non_idempotent_projection_rejected(self):
        with pytest.raises(ValueError, match="idempotent"):
            projected_fisher_ratio(np.eye(2), 0.5 * np.eye(2))


class TestMixtureLabelMi:
    def test_coincident_means_carry_nothing(self):
        assert mixture_label_mi(np.array([0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)

    def test_distant_means_approach_label_entropy(self):
        v = mixture_label_mi(np.array([-30.0, 30.0]))
        assert v == pytest.approx(np.log(2.0), abs=1e-6)

    def test_bounded_by_label_entropy(self):
        v = mixture_label_mi(np.array([-1.0, 1.0]))
        assert 0.0 < v < np.log(2.0)

    def test_scale_invariance_of_separation(self):
        # Doubling both means and sigma leaves the mixture geometry unchanged.
        a = mixture_label_mi(np.array([-1.0, 1.0]), sigma=1.0)
        b = mixture_label_mi(np.array([-2.0, 2.0]), sigma=2.0)
        assert a == pytest.approx(b, abs=1e-9)
