import unittest
import sys
import os

import numpy as np

# Add src directory to path (2 levels up from tests/)
current_dir = os.path.dirname(os.path.abspath(__file__))
src_path = os.path.join(os.path.dirname(current_dir), 'src')
sys.path.append(src_path)

from netsec_lmf.errors import DomainError
from netsec_lmf.model.econ import (
    CARA,
    CRRA,
    AgentEconomy,
    LogUtility,
    RiskNeutral,
    best_response,
    invest_threshold,
    risk_premium,
    willingness_to_pay,
)


class TestWillingnessToPay(unittest.TestCase):

    def test_risk_neutral_is_expected_loss(self):
        econ = AgentEconomy(RiskNeutral(), wealth=1.0, loss=2.0)
        self.assertAlmostEqual(willingness_to_pay(econ, 0.3), 0.6)
        self.assertEqual(risk_premium(econ, 0.3), 0.0)

    def test_cara_closed_form(self):
        econ = AgentEconomy(CARA(1.0), wealth=5.0, loss=1.0)
        self.assertAlmostEqual(willingness_to_pay(econ, 0.5), 0.620115, places=6)
        self.assertAlmostEqual(willingness_to_pay(econ, 0.5), np.log((np.e + 1) / 2), places=14)

    def test_cara_numeric_matches_closed_form(self):
        econ = AgentEconomy(CARA(2.0), wealth=3.0, loss=1.0)
        for p in (0.01, 0.3, 0.77):
            closed = willingness_to_pay(econ, p)
            numeric = willingness_to_pay(econ, p, closed_form=False)
            self.assertAlmostEqual(closed, numeric, delta=1e-9)

    def test_log_utility_against_closed_expression(self):
        econ = AgentEconomy(LogUtility(0.0), wealth=2.0, loss=1.0)
        p = 0.4
        expected = 2.0 - 1.0 ** p * 2.0 ** (1 - p)
        self.assertAlmostEqual(willingness_to_pay(econ, p), expected, places=9)

    def test_indifference_equation_holds(self):
        econ = AgentEconomy(CRRA(2.0), wealth=3.0, loss=1.0)
        u = econ.utility.u
        for p in (0.05, 0.5, 0.95):
            m = willingness_to_pay(econ, p)
            lhs = p * u(2.0) + (1 - p) * u(3.0)
            self.assertAlmostEqual(float(u(3.0 - m)), float(lhs), delta=1e-10)

    def test_endpoints(self):
        econ = AgentEconomy(CARA(3.0), wealth=2.0, loss=1.0)
        self.assertEqual(willingness_to_pay(econ, 0.0), 0.0)
        self.assertEqual(willingness_to_pay(econ, 1.0), 1.0)
        self.assertEqual(risk_premium(econ, 0.0), 0.0)
        self.assertEqual(risk_premium(econ, 1.0), 0.0)

    def test_risk_premium_non_negative(self):
        econ = AgentEconomy(CARA(1.5), wealth=2.0, loss=1.0)
        for p in np.linspace(0, 1, 21):
            self.assertGreaterEqual(risk_premium(econ, float(p)), 0.0)

    def test_cara_risk_premium(self):
        econ = AgentEconomy(CARA(1.0), wealth=1.0, loss=1.0)
        self.assertAlmostEqual(risk_premium(econ, 0.5), 0.1201, places=4)
        self.assertAlmostEqual(risk_premium(econ, 0.5), np.log((np.e + 1) / 2) - 0.5, places=12)

    def test_probability_out_of_range(self):
        with self.assertRaises(DomainError):
            willingness_to_pay(AgentEconomy(), 1.2)


class TestInvestThreshold(unittest.TestCase):

    def test_risk_neutral_threshold(self):
        econ = AgentEconomy(loss=2.0)
        self.assertAlmostEqual(invest_threshold(econ, 0.5, 0.1), 0.8)

    def test_risk_aversion_raises_threshold(self):
        neutral = invest_threshold(AgentEconomy(wealth=2.0), 0.3, 0.0)
        averse = invest_threshold(AgentEconomy(CARA(2.0), wealth=2.0), 0.3, 0.0)
        self.assertGreater(averse, neutral)

    def test_cara_threshold_closed_form(self):
        econ = AgentEconomy(CARA(1.0), wealth=2.0, loss=1.0)
        expected = np.log(0.5 * np.e + 0.5) - np.log(0.1 * np.e + 0.9)
        self.assertAlmostEqual(invest_threshold(econ, 0.5, 0.1), expected, places=12)
        self.assertAlmostEqual(invest_threshold(econ, 0.5, 0.1), 0.46155, places=4)

    def test_threshold_monotone_in_both_probabilities(self):
        grid = np.linspace(0.0, 1.0, 11)
        for econ in (AgentEconomy(wealth=2.0), AgentEconomy(CARA(2.0), wealth=2.0),
                     AgentEconomy(CRRA(2.0), wealth=3.0)):
            for pS in grid:
                values = [invest_threshold(econ, float(pN), float(pS)) for pN in grid if pN >= pS]
                self.assertTrue(np.all(np.diff(values) >= -1e-9))
            for pN in grid:
                values = [invest_threshold(econ, float(pN), float(pS)) for pS in grid if pS <= pN]
                self.assertTrue(np.all(np.diff(values) <= 1e-9))

    def test_protected_loss_must_not_exceed_unprotected(self):
        with self.assertRaises(DomainError):
            invest_threshold(AgentEconomy(), 0.2, 0.3)

    def test_equal_probabilities_give_zero(self):
        self.assertEqual(invest_threshold(AgentEconomy(CARA(1.0)), 0.4, 0.4), 0.0)

    def test_best_response_is_strict(self):
        at_threshold = AgentEconomy(cost=0.5)
        below = AgentEconomy(cost=0.49)
        self.assertFalse(best_response(at_threshold, 0.75, 0.25))
        self.assertTrue(best_response(below, 0.75, 0.25))


class TestAgentEconomy(unittest.TestCase):

    def test_cost_above_loss(self):
        with self.assertRaises(DomainError):
            AgentEconomy(loss=1.0, cost=1.5)

    def test_utility_domain(self):
        with self.assertRaises(DomainError):
            AgentEconomy(CRRA(2.0), wealth=1.0, loss=1.0)
        with self.assertRaises(DomainError):
            AgentEconomy(LogUtility(0.0), wealth=1.0, loss=0.5, cost=0.5)

    def test_invalid_utility_parameters(self):
        with self.assertRaises(DomainError):
            CARA(0.0)
        with self.assertRaises(DomainError):
            CRRA(1.0)

    def test_utilities_increasing_and_concave(self):
        xs = np.linspace(0.25, 4.0, 31)
        for utility in (RiskNeutral(), CARA(0.5), CARA(3.0), LogUtility(0.0), LogUtility(1.0), CRRA(0.5), CRRA(3.0)):
            with self.subTest(utility=utility.to_dict()):
                values = np.asarray(utility.u(xs))
                self.assertTrue(np.all(np.diff(values) > 0))
                self.assertTrue(np.all(np.diff(values, 2) <= 1e-12))

    def test_is_risk_neutral(self):
        self.assertTrue(AgentEconomy().is_risk_neutral)
        self.assertFalse(AgentEconomy(CARA(1.0)).is_risk_neutral)


if __name__ == '__main__':
    unittest.main()
