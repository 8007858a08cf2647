import json

import numpy as np
import pytest

from riskgame.errors import (
    DimensionMismatch,
    IncompleteGrid,
    InvalidArgument,
    InvalidCutoff,
    InvalidWeights,
    SupportMismatch,
)
from riskgame.gamecore import (
    Equilibrium,
    Game,
    assemble_game,
    fictitious_play,
    mixture_payoff,
    scalarize,
    solve,
    solve_degenerate,
    truncate_game,
)
from riskgame.lossdist import LossDistribution, truncate

from conftest import classical_game, distance_to_optimal_set, matrix_game_lp, random_dist

P = LossDistribution.point_mass
PENNIES = [[1, 0], [0, 1]]


def random_game(rng, n, m, a=6, d=1):
    return assemble_game([[[random_dist(rng, a) for _ in range(d)] for _ in range(m)] for _ in range(n)])


class TestAssemble:
    def test_default_labels(self):
        g = assemble_game([[P(1, 3), P(2, 3)]])
        assert (g.n, g.m, g.d, g.support_max) == (1, 2, 1, 3)
        assert g.defense_labels == ("C1",)
        assert g.attack_labels == ("T1", "T2")
        assert g.goal_labels == ("g1",)

    def test_ragged(self):
        with pytest.raises(IncompleteGrid):
            assemble_game([[P(1, 3), P(2, 3)], [P(1, 3)]])
        with pytest.raises(IncompleteGrid):
            assemble_game([])

    def test_support_mismatch(self):
        with pytest.raises(SupportMismatch):
            assemble_game([[P(1, 3), P(2, 4)]])

    def test_label_count(self):
        with pytest.raises(DimensionMismatch):
            assemble_game([[P(1, 3)]], defense_labels=["x", "y"])

    def test_bad_weights(self):
        with pytest.raises(InvalidWeights):
            assemble_game([[[P(1, 3), P(2, 3)]]], goal_weights=[0, 0])


class TestScalarize:
    def test_single_goal_identity(self, rng):
        g = random_game(rng, 2, 2)
        assert scalarize(g) == g

    def test_even_weights(self):
        g = assemble_game([[[P(2, 5), P(4, 5)]]], goal_weights=[0.5, 0.5])
        np.testing.assert_allclose(scalarize(g).payoff(0, 0).masses, [0, 0.5, 0, 0.5, 0])

    def test_weight_normalization(self, rng):
        cells = [[[random_dist(rng, 4), random_dist(rng, 4)]]]
        a = scalarize(assemble_game(cells, goal_weights=[1, 2])).payoff(0, 0)
        b = scalarize(assemble_game(cells, goal_weights=[1 / 3, 2 / 3])).payoff(0, 0)
        np.testing.assert_allclose(a.masses, b.masses, atol=1e-15)


class TestMixturePayoff:
    def test_pure(self, rng):
        g = random_game(rng, 2, 3)
        np.testing.assert_array_equal(mixture_payoff(g, [0, 1], [0, 0, 1]).masses, g.payoff(1, 2).masses)

    def test_uniform_average(self, rng):
        g = random_game(rng, 2, 2)
        avg = sum(g.payoff(i, j).masses for i in range(2) for j in range(2)) / 4
        np.testing.assert_allclose(mixture_payoff(g, [0.5, 0.5], [0.5, 0.5]).masses, avg, atol=1e-15)

    def test_double_sum_oracle(self, rng):
        for _ in range(20):
            g = random_game(rng, 3, 4, d=2)
            x = rng.dirichlet(np.ones(3))
            y = rng.dirichlet(np.ones(4))
            for goal in range(2):
                ref = np.zeros(g.support_max)
                for i in range(3):
                    for j in range(4):
                        ref += x[i] * y[j] * g.payoff(i, j, goal).masses
                np.testing.assert_allclose(mixture_payoff(g, x, y, goal).masses, ref, atol=1e-12)

    def test_bad_mix(self, rng):
        g = random_game(rng, 2, 2)
        with pytest.raises(DimensionMismatch):
            mixture_payoff(g, [1, 0, 0], [1, 0])
        with pytest.raises(DimensionMismatch):
            mixture_payoff(g, [0.7, 0.7], [1, 0])
        with pytest.raises(DimensionMismatch):
            mixture_payoff(g, [1, 0], [1, 0], goal=3)


class TestFictitiousPlay:
    def test_matching_pennies(self):
        eq = fictitious_play(classical_game(PENNIES), T=2000)
        np.testing.assert_allclose(eq.optimal_defense, [0.5, 0.5], atol=0.05)
        np.testing.assert_allclose(eq.optimal_attack, [0.5, 0.5], atol=0.05)

    def test_dominance_exact(self):
        g = assemble_game([[P(1, 2), P(1, 2)], [P(2, 2), P(2, 2)]])
        eq = fictitious_play(g, T=300)
        assert list(eq.optimal_defense) == [1.0, 0.0]

    def test_one_by_m_picks_worst_column(self):
        g = assemble_game([[P(1, 4), P(4, 4), P(2, 4)]])
        eq = fictitious_play(g, T=50)
        assert list(eq.optimal_attack) == [0.0, 1.0, 0.0]

    def test_outputs_are_mixes(self, rng):
        g = random_game(rng, 3, 3, d=2)
        eq = fictitious_play(g, T=200, cutoff=4)
        for v in (eq.optimal_defense, eq.optimal_attack):
            assert np.all(v >= 0) and abs(v.sum() - 1) < 1e-12
        assert all(a.support_max == 4 for a in eq.assurances)

    def test_deterministic(self, rng):
        g = random_game(rng, 3, 4, d=2)
        a, b = fictitious_play(g, T=300), fictitious_play(g, T=300)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_weight_rescaling_single_goal(self, rng):
        cells = [[random_dist(rng, 5) for _ in range(3)] for _ in range(3)]
        a = fictitious_play(assemble_game(cells, goal_weights=[1.0]), T=300)
        b = fictitious_play(assemble_game(cells, goal_weights=[7.5]), T=300)
        np.testing.assert_array_equal(a.optimal_defense, b.optimal_defense)

    def test_mass_above_cutoff_is_irrelevant(self, rng):
        cells = [[random_dist(rng, 8) for _ in range(3)] for _ in range(3)]
        altered = []
        for row in cells:
            new_row = []
            for d in row:
                m = d.masses.copy()
                m[5:] = rng.random(3)
                new_row.append(LossDistribution(m / m.sum()))
            altered.append(new_row)
        a = fictitious_play(assemble_game(cells), T=300, cutoff=5)
        b = fictitious_play(assemble_game(altered), T=300, cutoff=5)
        np.testing.assert_array_equal(a.optimal_defense, b.optimal_defense)
        np.testing.assert_array_equal(a.optimal_attack, b.optimal_attack)

    def test_assurance_is_truncated_mixture(self, rng):
        g = random_game(rng, 2, 3)
        eq = fictitious_play(g, T=200, cutoff=4)
        ref = mixture_payoff(truncate_game(g, 4), eq.optimal_defense, eq.optimal_attack)
        np.testing.assert_allclose(eq.assurance(0).masses, ref.masses, atol=1e-15)
        assert eq.assurance("g1") is eq.assurances[0]

    def test_classical_embedding(self, rng):
        for _ in range(10):
            n, m = rng.integers(2, 5, size=2)
            M = rng.integers(0, 2, size=(n, m))
            value, _ = matrix_game_lp(M)
            eq = fictitious_play(classical_game(M), T=2000)
            assert distance_to_optimal_set(M, eq.optimal_defense, value) <= 0.05
            assert abs(eq.assurance(0).masses[-1] - value) <= 0.05

    def test_invalid(self, rng):
        g = random_game(rng, 2, 2)
        with pytest.raises(InvalidCutoff):
            fictitious_play(g, cutoff=0)
        with pytest.raises(InvalidCutoff):
            fictitious_play(g, cutoff=7)
        with pytest.raises(InvalidArgument):
            fictitious_play(g, T=0)


class TestDegenerate:
    def test_row(self):
        eq = solve_degenerate(assemble_game([[P(1, 3), P(3, 3), P(2, 3)]]))
        assert list(eq.optimal_attack) == [0, 1, 0]

    def test_column(self):
        eq = solve_degenerate(assemble_game([[P(3, 3)], [P(1, 3)], [P(2, 3)]]))
        assert list(eq.optimal_defense) == [0, 1, 0]

    def test_not_degenerate(self, rng):
        with pytest.raises(DimensionMismatch):
            solve_degenerate(random_game(rng, 2, 2))

    def test_agrees_with_fictitious_play(self, rng):
        for _ in range(10):
            g = random_game(rng, 1, 4)
            exact = solve_degenerate(g)
            fp = fictitious_play(g, T=500)
            j = int(np.argmax(exact.optimal_attack))
            assert fp.optimal_attack[j] >= 0.95
            g = random_game(rng, 4, 1)
            exact = solve_degenerate(g)
            fp = fictitious_play(g, T=500)
            assert fp.optimal_defense[int(np.argmax(exact.optimal_defense))] >= 0.95

    def test_solve_dispatch(self, rng):
        g = random_game(rng, 1, 3)
        assert solve(g).iterations == 1
        assert solve(random_game(rng, 2, 2), T=40).iterations == 40


def test_json_round_trips(rng):
    g = random_game(rng, 2, 3, d=2)
    g2 = Game.from_dict(json.loads(json.dumps(g.to_dict())))
    assert g2 == g
    eq = fictitious_play(g, T=100, cutoff=5)
    eq2 = Equilibrium.from_dict(json.loads(json.dumps(eq.to_dict())))
    np.testing.assert_array_equal(eq2.optimal_defense, eq.optimal_defense)
    assert eq2.assurances == eq.assurances
    assert eq2.cutoff == 5


def test_truncate_game_matches_cellwise(rng):
    g = random_game(rng, 2, 2)
    t = truncate_game(g, 3)
    for i in range(2):
        for j in range(2):
            assert t.payoff(i, j) == truncate(g.payoff(i, j), 3)
