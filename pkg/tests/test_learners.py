from fractions import Fraction

import numpy as np
import pytest

import oracles
from conftest import random_joint, random_product
from haplomw import (
    DegenerateUpdate,
    DimensionMismatch,
    DynamicsKind,
    FitnessLandscape,
    JointDistribution,
    LearnerConfig,
    alpha_utilities,
    conditional_utilities,
    cosimulate_learners,
    hedge_update,
    independent_pw_simulate,
    independent_utilities,
    marginal,
    pw_update,
    selection_step,
    simulate,
    utility_alpha,
    utility_conditional,
    utility_independent,
)
from haplomw.learners import strategies_to_csv

DIAG = JointDistribution([[0.5, 0.0], [0.0, 0.5]])
MATCHING = [[1.0, 0.0], [0.0, 1.0]]  # payoff-only: fitness would need positive entries


class TestLearnerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            LearnerConfig(alpha=1.5)
        with pytest.raises(ValueError):
            LearnerConfig(epsilon=0.0)
        with pytest.raises(ValueError):
            LearnerConfig(rule="hedge")
        LearnerConfig(rule="hedge", epsilon=0.1)


class TestConditionalUtility:
    def test_worked_instance(self, table_w, table_p0):
        assert np.allclose(conditional_utilities(table_w, table_p0, 0), [0.7, 1.32, 1.0], atol=1e-12)
        assert np.allclose(conditional_utilities(table_w, table_p0, 1), [1.275, 0.825], atol=1e-12)
        assert utility_conditional(table_w, table_p0, 0, 1) == pytest.approx(1.32, abs=1e-12)

    def test_perfect_correlation(self, table_w):
        g = conditional_utilities([[1.0, 0.0], [0.0, 1.0]], DIAG, 0)
        assert np.allclose(g, [1.0, 1.0])

    def test_extinct_action_reports_zero(self):
        p = JointDistribution([[0.5, 0.5], [0.0, 0.0]])
        g = conditional_utilities([[2.0, 1.0], [1.0, 2.0]], p, 0)
        assert g[1] == 0.0

    def test_shape_mismatch(self, table_w):
        with pytest.raises(DimensionMismatch):
            conditional_utilities(table_w, JointDistribution.uniform((2, 2)), 0)

    def test_matches_oracle_on_random(self, rng):
        p = random_joint((4, 3), rng)
        w = rng.uniform(0.5, 1.5, size=(4, 3))
        w_frac = oracles.frac_grid([[Fraction(float(v)) for v in row] for row in w])
        p_frac = oracles.frac_grid([[Fraction(float(v)) for v in row] for row in p.probs])
        for player in (0, 1):
            exact = [float(v) for v in oracles.conditional_utility(w_frac, p_frac, player)]
            assert np.allclose(conditional_utilities(w, p, player), exact, atol=1e-12)


class TestIndependentUtility:
    def test_equals_conditional_on_product(self, table_w, rng):
        p = random_product((3, 2), rng)
        for j in (0, 1):
            assert np.allclose(
                independent_utilities(table_w, p, j),
                conditional_utilities(table_w, p, j),
                atol=1e-12,
            )

    def test_diagonal_contrast(self):
        indep = independent_utilities(MATCHING, DIAG, 0)
        cond = conditional_utilities(MATCHING, DIAG, 0)
        assert np.allclose(indep, [0.5, 0.5])
        assert np.allclose(cond, [1.0, 1.0])
        assert utility_independent(MATCHING, DIAG, 0, 0) == pytest.approx(0.5)

    def test_three_locus(self, rng):
        p = random_joint((2, 3, 2), rng)
        w = rng.uniform(0.5, 1.5, size=(2, 3, 2))
        x = [marginal(p, j) for j in range(3)]
        expected = np.einsum("abc,a,c->b", w, x[0], x[2])
        assert np.allclose(independent_utilities(w, p, 1), expected, atol=1e-12)


class TestAlphaUtility:
    def test_endpoints(self, table_w, table_p0):
        assert np.allclose(
            alpha_utilities(table_w, table_p0, 0, 0.0),
            conditional_utilities(table_w, table_p0, 0),
        )
        assert np.allclose(
            alpha_utilities(table_w, table_p0, 0, 1.0),
            independent_utilities(table_w, table_p0, 0),
        )

    def test_midpoint(self):
        assert utility_alpha(MATCHING, DIAG, 0, 0, 0.5) == pytest.approx(0.75, abs=1e-14)

    def test_alpha_range(self, table_w, table_p0):
        with pytest.raises(ValueError):
            alpha_utilities(table_w, table_p0, 0, 1.2)

    def test_alpha_irrelevant_on_manifold(self, table_w, rng):
        p = random_product((3, 2), rng)
        base = alpha_utilities(table_w, p, 0, 0.0)
        for a in (0.25, 0.5, 1.0):
            assert np.allclose(alpha_utilities(table_w, p, 0, a), base, atol=1e-12)


class TestPwUpdate:
    def test_parameter_free_worked_instance(self):
        out = pw_update([0.25, 0.25, 0.5], [0.7, 1.32, 1.0])
        assert np.allclose(out, [0.17413, 0.32836, 0.49751], atol=1e-5)

    def test_constant_utility_fixed_point(self, rng):
        x = rng.dirichlet(np.ones(4))
        assert np.allclose(pw_update(x, np.full(4, 2.5)), x, atol=1e-14)

    def test_extinct_action_stays(self):
        assert np.allclose(pw_update([1.0, 0.0], [0.5, 100.0]), [1.0, 0.0])

    def test_epsilon_variant(self):
        out = pw_update([0.5, 0.5], [1.0, 0.0], LearnerConfig(epsilon=1.0))
        assert np.allclose(out, [2 / 3, 1 / 3])

    def test_degenerate_updates(self):
        with pytest.raises(DegenerateUpdate):
            pw_update([0.5, 0.5], [-0.1, 1.0])  # negative utility on support
        with pytest.raises(DegenerateUpdate):
            pw_update([0.5, 0.5], [0.0, 0.0])  # zero normalizer
        with pytest.raises(DegenerateUpdate):
            pw_update([0.5, 0.5], [-2.0, 0.5], LearnerConfig(epsilon=1.0))

    def test_replicator_correspondence(self, rng):
        # parameter-free PW with a fixed utility vector is exactly one
        # selection step on the landscape with a trivial second locus
        g = rng.uniform(0.5, 1.5, size=5)
        x = rng.dirichlet(np.ones(5))
        w = FitnessLandscape(g.reshape(5, 1))
        p = JointDistribution(x.reshape(5, 1))
        stepped = selection_step(w, p)
        assert np.allclose(pw_update(x, g), stepped.probs[:, 0], atol=1e-12)

    def test_argmax_monotonicity(self, rng):
        for _ in range(20):
            x = rng.dirichlet(np.ones(4))
            g = rng.uniform(0.1, 2.0, size=4)
            variants = [
                pw_update(x, g),
                pw_update(x, g, LearnerConfig(epsilon=0.7)),
                hedge_update(x, g, 0.7),
            ]
            i, j = np.argsort(g)[-1], np.argsort(g)[0]
            if g[i] > g[j]:
                for out in variants:
                    assert out[i] / out[j] > x[i] / x[j]

    def test_preserves_simplex_and_zeros(self, rng):
        x = np.array([0.3, 0.0, 0.7])
        g = rng.uniform(0.1, 2.0, size=3)
        for out in (pw_update(x, g), hedge_update(x, g, 0.5)):
            assert out.sum() == pytest.approx(1.0, abs=1e-14)
            assert out[1] == 0.0


class TestHedgeUpdate:
    def test_constant_fixed_point(self, rng):
        x = rng.dirichlet(np.ones(3))
        assert np.allclose(hedge_update(x, np.full(3, 1.3), 0.5), x, atol=1e-14)

    def test_worked_case(self):
        assert np.allclose(hedge_update([0.5, 0.5], [1.0, 0.0], 1.0), [2 / 3, 1 / 3])

    def test_requires_positive_epsilon(self):
        with pytest.raises(ValueError):
            hedge_update([0.5, 0.5], [1.0, 0.0], 0.0)

    def test_agrees_with_pw_to_second_order(self, rng):
        x = rng.dirichlet(np.ones(4))
        g = rng.uniform(0.0, 1.5, size=4)
        gaps = []
        for eps in (1e-2, 1e-3):
            pw = pw_update(x, g, LearnerConfig(epsilon=eps))
            hedge = hedge_update(x, g, eps)
            gaps.append(np.abs(pw - hedge).sum())
        assert gaps[0] <= 5.0 * 1e-4  # C * eps^2 with small C
        assert gaps[1] <= gaps[0] / 50.0  # quadratic scaling in eps


class TestCosimulate:
    def test_one_step_matches_printed_marginals(self, table_w, table_p0):
        traj = simulate(table_w, table_p0, DynamicsKind.sr(0.5), 1)
        strategies = cosimulate_learners(table_w, traj, LearnerConfig(alpha=0.0))
        assert np.allclose(strategies[0][1], [0.174, 0.328, 0.497], atol=1e-3)
        assert np.allclose(strategies[1][1], [0.507, 0.493], atol=1e-3)
        exact = oracles.sr(oracles.TABLE_W, oracles.TABLE_P0, Fraction(1, 2))
        assert np.allclose(strategies[0][1], [float(v) for v in oracles.row_marginal(exact)], atol=1e-12)

    def test_constant_payoff_never_moves(self, table_p0):
        dists = [table_p0] * 6
        strategies = cosimulate_learners(np.full((3, 2), 1.7), dists, LearnerConfig(alpha=0.3))
        for rows in strategies:
            assert np.allclose(rows, rows[0], atol=1e-13)

    def test_initialized_to_first_marginals(self, table_w, table_p0):
        traj = simulate(table_w, table_p0, DynamicsKind.rs(1.0), 2)
        strategies = cosimulate_learners(table_w, traj, LearnerConfig(alpha=1.0))
        assert np.allclose(strategies[0][0], marginal(table_p0, 0))
        assert np.allclose(strategies[1][0], marginal(table_p0, 1))

    def test_shape_mismatch(self, table_p0):
        with pytest.raises(DimensionMismatch):
            cosimulate_learners(np.ones((2, 2)), [table_p0], LearnerConfig())

    def test_hedge_rule_runs(self, table_w, table_p0):
        traj = simulate(table_w, table_p0, DynamicsKind.sr(0.5), 3)
        strategies = cosimulate_learners(
            table_w, traj, LearnerConfig(alpha=0.0, epsilon=0.05, rule="hedge")
        )
        assert strategies[0].shape == (4, 3)
        assert np.allclose(strategies[0].sum(axis=1), 1.0, atol=1e-12)


class TestIndependentPw:
    def test_profile_stays_product_and_converges(self):
        run = independent_pw_simulate(
            [[2.0, 1.0], [1.0, 1.0]], [np.array([0.5, 0.5]), np.array([0.5, 0.5])],
            400, conv_threshold=1 - 1e-3,
        )
        assert run.convergence_step is not None
        assert run.final[0][0] > 0.97 and run.final[1][0] > 0.97

    def test_matches_rs_full_recombination_for_one_step(self, table_w, table_p0, rng):
        # from a product state, one update against the marginals equals the
        # marginal of one full-recombination RS step
        from haplomw import rs_step

        p = random_product((3, 2), rng)
        run = independent_pw_simulate(
            table_w, [marginal(p, 0), marginal(p, 1)], 1
        )
        stepped = rs_step(table_w, p, 1.0)
        assert np.allclose(run.final[0], marginal(stepped, 0), atol=1e-12)
        assert np.allclose(run.final[1], marginal(stepped, 1), atol=1e-12)

    def test_profile_shape_checked(self, table_w):
        with pytest.raises(DimensionMismatch):
            independent_pw_simulate(table_w, [np.array([0.5, 0.5])], 3)


def test_strategy_csv_layout(tmp_path, table_w, table_p0):
    traj = simulate(table_w, table_p0, DynamicsKind.sr(0.5), 1)
    strategies = cosimulate_learners(table_w, traj, LearnerConfig())
    path = tmp_path / "strategies.csv"
    strategies_to_csv(strategies, str(path), meta="m")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1_1,x1_2,x1_3,x2_1,x2_2"
    assert lines[-1] == "# m"
    assert len(lines) == 4
