import unittest
import sys
import os

import numpy as np

# Add src directory to path (2 levels up from tests/)
current_dir = os.path.dirname(os.path.abspath(__file__))
src_path = os.path.join(os.path.dirname(current_dir), 'src')
sys.path.append(src_path)

from netsec_lmf import config
from netsec_lmf.errors import BudgetExceededError, DomainError
from netsec_lmf.model.dist import Poisson, Regular
from netsec_lmf.model.lmf import EpidemicParams, iterate_rde
from netsec_lmf.network.graphs import Graph, TreeGraph
from netsec_lmf.network.netgen import gen_er, gen_gw_tree
from netsec_lmf.network.sim import SimConfig, exact_tiny, infected_set, run_epidemic, trial_streams, tree_dp

PATH3 = Graph(3, [(0, 1), (1, 2)])
FULL_CONTAGION = EpidemicParams(p_plus=0.5, p_minus=0.0, q_plus=1.0, q_minus=0.0)


def random_tiny_graph(rng, max_nodes=5):
    n = int(rng.integers(1, max_nodes + 1))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = rng.random(len(pairs)) < 0.5
    edges = [pairs[i] for i in np.flatnonzero(keep)][:(config.EXACT_BUDGET_BITS - n) // 2]
    return Graph(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))


class TestInfectedSet(unittest.TestCase):

    def test_reachability_follows_direction(self):
        directed = PATH3.directed_edges()
        open_edges = np.array([True, True, False, False])  # 0->1, 1->2 open only
        x = infected_set(3, directed, open_edges, np.array([False, True, False]))
        self.assertEqual(x.tolist(), [False, True, True])

    def test_no_seeds(self):
        directed = PATH3.directed_edges()
        x = infected_set(3, directed, np.ones(4, dtype=bool), np.zeros(3, dtype=bool))
        self.assertFalse(x.any())

    def test_trial_streams_are_reproducible(self):
        a = [g.random(3) for g in trial_streams(5, 7)]
        b = [g.random(3) for g in trial_streams(5, 7)]
        for left, right in zip(a, b):
            np.testing.assert_array_equal(left, right)
        self.assertFalse(np.array_equal(a[0], a[1]))


class TestExactTiny(unittest.TestCase):

    def test_isolated_node(self):
        rates = exact_tiny(Graph(1, []), FULL_CONTAGION, [0])
        self.assertAlmostEqual(rates[0], 0.5, delta=1e-15)

    def test_single_edge(self):
        params = EpidemicParams(0.5, 0.0, 0.5, 0.0)
        rates = exact_tiny(Graph(2, [(0, 1)]), params, [0, 0])
        np.testing.assert_allclose(rates, [0.625, 0.625], atol=1e-15)

    def test_path_with_certain_contagion(self):
        rates = exact_tiny(PATH3, FULL_CONTAGION, [0, 0, 0])
        np.testing.assert_allclose(rates, [0.875, 0.875, 0.875], atol=1e-15)

    def test_immune_middle_node_blocks(self):
        rates = exact_tiny(PATH3, FULL_CONTAGION, [0, 1, 0])
        np.testing.assert_allclose(rates, [0.5, 0.0, 0.5], atol=1e-15)

    def test_no_contagion(self):
        params = EpidemicParams(0.3, 0.1, 0.0, 0.0)
        rates = exact_tiny(Graph(3, [(0, 1), (1, 2), (0, 2)]), params, [1, 0, 1])
        np.testing.assert_allclose(rates, [0.1, 0.3, 0.1], atol=1e-15)

    def test_budget(self):
        graph = Graph(10, [(i, i + 1) for i in range(8)])
        with self.assertRaises(BudgetExceededError):
            exact_tiny(graph, FULL_CONTAGION, [0] * 10)

    def test_investment_length(self):
        with self.assertRaises(DomainError):
            exact_tiny(PATH3, FULL_CONTAGION, [0, 0])


class TestRunEpidemic(unittest.TestCase):

    def test_no_losses(self):
        params = EpidemicParams(0.0, 0.0, 0.7, 0.3)
        outcome = run_epidemic(gen_er(50, 3.0, seed=0), SimConfig(params, gamma=0.5, trials=20, seed=0))
        self.assertEqual(outcome.mean_infected, 0.0)

    def test_path_matches_exact_rate(self):
        outcome = run_epidemic(PATH3, SimConfig(FULL_CONTAGION, investment=[0, 0, 0], trials=20000, seed=1))
        for rate, se in zip(outcome.node_rates, outcome.node_se):
            self.assertLess(abs(rate - 0.875), 4 * se)

    def test_no_contagion_rates_by_state(self):
        params = EpidemicParams(0.3, 0.1, 0.0, 0.0)
        outcome = run_epidemic(gen_er(200, 3.0, seed=5), SimConfig(params, gamma=0.4, trials=200, seed=2))
        self.assertLess(abs(outcome.mean_infected_given_N - 0.3), 4 * outcome.se_given_N)
        self.assertLess(abs(outcome.mean_infected_given_S - 0.1), 4 * outcome.se_given_S)
        self.assertLess(abs(outcome.gamma_hat - 0.4), 0.01)

    def test_mean_decomposes_by_state(self):
        params = EpidemicParams(0.05, 0.01, 0.4, 0.1)
        outcome = run_epidemic(gen_er(300, 4.0, seed=1), SimConfig(params, gamma=0.3, trials=50, seed=3))
        g = outcome.gamma_hat
        mixed = g * outcome.mean_infected_given_S + (1 - g) * outcome.mean_infected_given_N
        self.assertAlmostEqual(outcome.mean_infected, mixed, delta=1e-12)

    def test_common_random_numbers_are_monotone_in_gamma(self):
        params = EpidemicParams(0.05, 0.01, 0.4, 0.1)
        graph = gen_er(300, 4.0, seed=1)
        means = [run_epidemic(graph, SimConfig(params, gamma=float(g), trials=50, seed=3)).mean_infected
                 for g in np.linspace(0.0, 1.0, 10)]
        self.assertTrue(np.all(np.diff(means) <= 0.0))

    def test_worker_count_does_not_change_results(self):
        params = EpidemicParams(0.05, 0.01, 0.4, 0.1)
        graph = gen_er(100, 4.0, seed=6)
        cfg = SimConfig(params, gamma=0.3, trials=40, seed=8)
        one = run_epidemic(graph, cfg, max_workers=1)
        four = run_epidemic(graph, cfg, max_workers=4)
        np.testing.assert_array_equal(one.node_rates, four.node_rates)

    def test_undefined_conditional_rate(self):
        params = EpidemicParams(0.2, 0.0, 0.5, 0.0)
        outcome = run_epidemic(PATH3, SimConfig(params, gamma=0.0, trials=10, seed=0))
        self.assertIsNone(outcome.to_dict()["mean_infected_given_S"])

    def test_config_checks(self):
        with self.assertRaises(DomainError):
            SimConfig(FULL_CONTAGION, gamma=0.5, investment=[0, 1])
        with self.assertRaises(DomainError):
            SimConfig(FULL_CONTAGION)
        with self.assertRaises(DomainError):
            SimConfig(FULL_CONTAGION, gamma=0.5, trials=0)
        with self.assertRaises(DomainError):
            SimConfig(FULL_CONTAGION, investment=[0, 2])
        with self.assertRaises(DomainError):
            run_epidemic(PATH3, SimConfig(FULL_CONTAGION, investment=[0, 1]))

    def test_matches_enumeration_on_tiny_graphs(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            graph = random_tiny_graph(rng)
            params = EpidemicParams(0.3, 0.05, 0.6, 0.2)
            investment = (rng.random(graph.n) < 0.4).astype(int)
            exact = exact_tiny(graph, params, investment)
            outcome = run_epidemic(graph, SimConfig(params, investment=investment, trials=10000,
                                                    seed=int(rng.integers(1 << 31))))
            se = np.maximum(outcome.node_se, np.sqrt(exact * (1 - exact) / outcome.trials))
            self.assertTrue(np.all(np.abs(outcome.node_rates - exact) <= 4.5 * se + 1e-12))

    @unittest.skipUnless(config.RUN_SLOW_TESTS, "set NETSEC_RUN_SLOW_TESTS=1 to run")
    def test_matches_enumeration_on_many_tiny_graphs(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            graph = random_tiny_graph(rng)
            params = EpidemicParams(0.3, 0.05, 0.6, 0.2)
            investment = (rng.random(graph.n) < 0.4).astype(int)
            exact = exact_tiny(graph, params, investment)
            outcome = run_epidemic(graph, SimConfig(params, investment=investment, trials=100000,
                                                    seed=int(rng.integers(1 << 31))))
            se = np.sqrt(exact * (1 - exact) / outcome.trials)
            self.assertTrue(np.all(np.abs(outcome.node_rates - exact) <= 4 * se + 1e-12))


class TestTreeDp(unittest.TestCase):

    def test_star(self):
        tree = TreeGraph(np.array([-1, 0, 0]), np.array([0, 1, 1]), 1)
        result = tree_dp(tree, FULL_CONTAGION, 0.0)
        self.assertAlmostEqual(result.x_root, 0.875, delta=1e-15)
        self.assertAlmostEqual(result.y_root, 0.875, delta=1e-15)

    def test_single_node(self):
        params = EpidemicParams(0.4, 0.1, 0.5, 0.2)
        result = tree_dp(gen_gw_tree(Regular(0), Regular(0), 0, seed=0), params, 0.25)
        self.assertAlmostEqual(result.y_root, 0.25 * 0.1 + 0.75 * 0.4, delta=1e-15)

    def test_regular_tree_matches_unrolled_recursion(self):
        params = EpidemicParams(0.2, 0.05, 0.7, 0.3, degree=Regular(3))
        for gamma in (0.0, 0.35, 1.0):
            for depth in range(0, 9):
                tree = gen_gw_tree(Regular(2), Regular(2), depth, seed=0)
                y = tree_dp(tree, params, gamma).y_root
                self.assertAlmostEqual(y, iterate_rde(params, gamma, depth), delta=1e-12)

    def test_random_trees_average_to_unrolled_recursion(self):
        params = EpidemicParams(0.2, 0.0, 0.5, 0.2, degree=Poisson(2.0))
        values = np.array([tree_dp(gen_gw_tree(Poisson(2.0), Poisson(2.0), 4, seed=s), params, 0.3).y_root
                           for s in range(2000)])
        se = values.std(ddof=1) / np.sqrt(values.size)
        self.assertLess(abs(values.mean() - iterate_rde(params, 0.3, 4)), 4 * se)

    def test_root_mixes_conditional_rates(self):
        params = EpidemicParams(0.3, 0.1, 0.6, 0.2)
        result = tree_dp(gen_gw_tree(Regular(2), Regular(2), 3, seed=0), params, 0.4)
        self.assertAlmostEqual(result.x_root,
                               0.4 * result.x_root_given_S + 0.6 * result.x_root_given_N, delta=1e-15)
        self.assertAlmostEqual(result.x_root, result.y_root, delta=1e-15)

    def test_agrees_with_simulation_on_the_tree(self):
        params = EpidemicParams(0.1, 0.02, 0.6, 0.2)
        tree = gen_gw_tree(Regular(2), Regular(2), 3, seed=0)
        exact = tree_dp(tree, params, 0.3).x_root
        outcome = run_epidemic(tree.as_graph(), SimConfig(params, gamma=0.3, trials=20000, seed=4))
        self.assertLess(abs(outcome.node_rates[0] - exact), 4 * outcome.node_se[0])


if __name__ == '__main__':
    unittest.main()
