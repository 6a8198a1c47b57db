import math

import numpy as np
import pytest
from scipy import special as sp
from scipy import stats

from mtctraffic import special


@pytest.mark.parametrize("x", [1e-8, 0.1, 0.5, 1.0, 1.5, 2.0, 7.3, 30.0, 171.2, 1e4])
def test_gammaln_matches_reference(x):
    assert special.gammaln(x) == pytest.approx(sp.gammaln(x), rel=1e-12, abs=1e-12)


def test_gammaln_integers_are_log_factorials():
    for n in range(1, 30):
        assert special.gammaln(n) == pytest.approx(math.log(math.factorial(n - 1)), rel=1e-13, abs=1e-13)


def test_betainc_against_reference_grid():
    rng = np.random.default_rng(5)
    a = rng.uniform(0.05, 40, 300)
    b = rng.uniform(0.05, 40, 300)
    x = rng.uniform(0, 1, 300)
    got = np.array([special.betainc(ai, bi, xi) for ai, bi, xi in zip(a, b, x)])
    np.testing.assert_allclose(got, sp.betainc(a, b, x), rtol=1e-10, atol=1e-14)


def test_betainc_edges_and_symmetry():
    assert special.betainc(2.0, 3.0, 0.0) == 0.0
    assert special.betainc(2.0, 3.0, 1.0) == 1.0
    x = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(special.betainc(2.5, 0.7, x), 1 - special.betainc(0.7, 2.5, 1 - x), atol=1e-13)


def test_gammainc_against_reference():
    rng = np.random.default_rng(6)
    for a, x in zip(rng.uniform(0.1, 80, 200), rng.uniform(0, 150, 200)):
        assert special.gammainc(a, x) == pytest.approx(sp.gammainc(a, x), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("dof", [1, 2, 3, 7, 20, 55, 200])
def test_chi2_ppf_matches_reference(dof):
    assert special.chi2_ppf(0.99, dof) == pytest.approx(stats.chi2.ppf(0.99, dof), rel=1e-9)
    assert special.chi2_cdf(special.chi2_ppf(0.5, dof), dof) == pytest.approx(0.5, abs=1e-11)
