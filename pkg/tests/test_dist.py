import unittest
import sys
import os

import numpy as np

# Add src directory to path (2 levels up from tests/)
current_dir = os.path.dirname(os.path.abspath(__file__))
src_path = os.path.join(os.path.dirname(current_dir), 'src')
sys.path.append(src_path)

from netsec_lmf.errors import DomainError
from netsec_lmf.model.dist import (
    Empirical,
    Geometric,
    NegativeBinomial,
    Poisson,
    Regular,
    gen_fn,
    gen_fn_prime,
    mean_degree,
    size_biased,
)


class TestGeneratingFunctions(unittest.TestCase):

    def test_poisson_closed_forms(self):
        d = Poisson(10.0)
        self.assertAlmostEqual(gen_fn(d, 1.0), 1.0, places=15)
        self.assertAlmostEqual(gen_fn(d, 0.0), np.exp(-10.0), places=15)
        self.assertAlmostEqual(gen_fn_prime(d, 1.0), 10.0, places=12)
        self.assertEqual(mean_degree(d), 10.0)

    def test_regular(self):
        d = Regular(3)
        self.assertAlmostEqual(gen_fn(d, 0.5), 0.125)
        self.assertAlmostEqual(gen_fn_prime(d, 0.5), 0.75)
        self.assertEqual(size_biased(d), Regular(2))
        self.assertEqual(gen_fn(Regular(0), 0.3), 1.0)

    def test_pgf_matches_pmf_series(self):
        k = np.arange(0, 400)
        for d in (Poisson(3.0), NegativeBinomial(2.0, 0.5), Geometric(0.25), Empirical((0.2, 0.3, 0.5))):
            series = np.sum(d.pmf(k) * 0.3 ** k)
            self.assertAlmostEqual(float(d.pgf(0.3)), float(series), places=12, msg=d.kind)

    def test_size_biased_is_normalized_derivative(self):
        xs = np.linspace(0.0, 1.0, 11)
        for d in (Poisson(2.5), Regular(4), NegativeBinomial(1.5, 0.4), Geometric(0.3), Empirical((0.1, 0.2, 0.3, 0.4))):
            expected = d.pgf_prime(xs) / d.mean()
            np.testing.assert_allclose(size_biased(d).pgf(xs), expected, rtol=1e-12, atol=1e-14, err_msg=d.kind)

    def test_geometric_size_bias_is_negative_binomial(self):
        self.assertEqual(size_biased(Geometric(0.25)), NegativeBinomial(2, 0.25))
        self.assertAlmostEqual(Geometric(0.25).mean(), 3.0)

    def test_vectorized_evaluation(self):
        xs = np.array([0.0, 0.5, 1.0])
        out = gen_fn(Poisson(1.0), xs)
        self.assertEqual(out.shape, (3,))


class TestDomainChecks(unittest.TestCase):

    def test_argument_outside_unit_interval(self):
        with self.assertRaises(DomainError):
            gen_fn(Poisson(1.0), 1.5)
        with self.assertRaises(DomainError):
            gen_fn_prime(Poisson(1.0), -0.1)

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            Poisson(0.0)
        with self.assertRaises(DomainError):
            Regular(-1)
        with self.assertRaises(DomainError):
            Regular(2.5)
        with self.assertRaises(DomainError):
            Geometric(0.0)
        with self.assertRaises(DomainError):
            Empirical((0.5, 0.4))

    def test_size_bias_needs_positive_mean(self):
        with self.assertRaises(DomainError):
            size_biased(Regular(0))
        with self.assertRaises(DomainError):
            size_biased(Empirical((1.0,)))


class TestEmpirical(unittest.TestCase):

    def test_mean_and_size_bias(self):
        d = Empirical((0.2, 0.3, 0.5))
        self.assertAlmostEqual(d.mean(), 1.3)
        sb = size_biased(d)
        self.assertAlmostEqual(sb.probs[0], 0.3 / 1.3)
        self.assertAlmostEqual(sb.probs[1], 1.0 / 1.3)

    def test_from_weights_normalizes(self):
        d = Empirical.from_weights([1, 1, 2])
        self.assertEqual(d.probs, (0.25, 0.25, 0.5))

    def test_truncation_warns_and_renormalizes(self):
        with self.assertWarns(RuntimeWarning):
            d = Empirical.from_weights([1.0] * 15, d_max=5)
        self.assertEqual(d.d_max, 5)
        self.assertAlmostEqual(sum(d.probs), 1.0, places=14)

    def test_pmf_outside_support(self):
        d = Empirical((0.5, 0.5))
        self.assertEqual(d.pmf(5), 0.0)


class TestSampling(unittest.TestCase):

    def test_sample_means(self):
        rng = np.random.default_rng(0)
        self.assertAlmostEqual(Poisson(10.0).sample(rng, 100000).mean(), 10.0, delta=0.05)
        self.assertAlmostEqual(Geometric(0.25).sample(rng, 100000).mean(), 3.0, delta=0.06)
        self.assertAlmostEqual(NegativeBinomial(2.0, 0.5).sample(rng, 100000).mean(), 2.0, delta=0.03)
        self.assertTrue(np.all(Regular(4).sample(rng, 10) == 4))

    def test_empirical_sample_support(self):
        rng = np.random.default_rng(1)
        draws = Empirical((0.0, 0.5, 0.5)).sample(rng, 1000)
        self.assertTrue(set(np.unique(draws)) <= {1, 2})


if __name__ == '__main__':
    unittest.main()
