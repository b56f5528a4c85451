import math

import numpy as np
import pytest
from scipy import special

from slowlayers.errors import ValidationError
from slowlayers.potential import (
    K_SEQ_CAP,
    PotentialParams,
    Regime,
    constants,
    eval_ddF,
    eval_dF,
    eval_F,
    gamma_np,
    lambda_p,
    transition_energy,
)


def P(p, n, eps=1.0):
    return PotentialParams(p, n, eps)


@pytest.mark.parametrize("p,n,eps", [(1.0, 2, 1), (2, 1.0, 1), (2, 2, 0.0), (2, 2, -1), (math.nan, 2, 1)])
def test_params_reject_invalid(p, n, eps):
    with pytest.raises(ValidationError):
        PotentialParams(p, n, eps)


@pytest.mark.parametrize("p,n,regime", [(4, 2, Regime.SUBCRITICAL), (2, 2, Regime.CRITICAL),
                                        (2, 4, Regime.SUPERCRITICAL), (5.5, 8, Regime.SUPERCRITICAL)])
def test_regime(p, n, regime):
    assert P(p, n).regime is regime


def test_F_values():
    assert eval_F(P(2, 2), 0.0) == 0.25
    assert eval_F(P(2, 2), 1.0) == 0.0
    assert eval_F(P(2, 2), -1.0) == 0.0
    # independent evaluation of (0.75)^4 / 8
    assert eval_F(P(2, 4), 0.5) == pytest.approx(0.75 * 0.75 * 0.75 * 0.75 / 8, rel=1e-15)
    assert eval_F(P(2, 4), 0.5) == pytest.approx(0.03955078125, rel=1e-15)


def test_dF_values():
    assert eval_dF(P(2, 2), 0.0) == 0.0
    assert eval_dF(P(2, 2), 0.5) == pytest.approx(-0.375, rel=1e-15)
    assert eval_dF(P(2, 3), 2.0) == pytest.approx(18.0, rel=1e-14)


def test_dF_matches_finite_difference_at_2():
    h = 1e-6
    fd = (eval_F(P(2, 3), 2 + h) - eval_F(P(2, 3), 2 - h)) / (2 * h)
    assert abs(fd - eval_dF(P(2, 3), 2.0)) / 18.0 < 1e-6


@pytest.mark.parametrize("n", [1.5, 2.0, 3.0, 4.0, 8.0])
def test_dF_finite_differences_on_grid(n):
    params = P(2, n)
    u = np.linspace(-2, 2, 1000)
    if n < 2:
        u = u[np.abs(np.abs(u) - 1) > 1e-3]
    h = 1e-6
    fd = (eval_F(params, u + h) - eval_F(params, u - h)) / (2 * h)
    exact = eval_dF(params, u)
    scale = np.maximum(np.abs(exact), 1e-3)
    assert np.max(np.abs(fd - exact) / scale) < 1e-6


def test_ddF_finite_differences():
    params = P(2, 4)
    u = np.linspace(-1.9, 1.9, 301)
    h = 1e-6
    fd = (eval_dF(params, u + h) - eval_dF(params, u - h)) / (2 * h)
    assert np.allclose(fd, eval_ddF(params, u), rtol=1e-6, atol=1e-7)
    # F''(+-1) = 2 when n = 2
    assert eval_ddF(P(2, 2), 1.0) == pytest.approx(2.0)
    # n < 2: F'' blows up at the wells and is capped
    assert np.isfinite(eval_ddF(P(2, 1.5), 1.0))


def test_symmetry():
    params = P(3, 2.5)
    u = np.linspace(-2, 2, 41)
    assert np.allclose(eval_F(params, u), eval_F(params, -u), rtol=0, atol=0)
    assert np.allclose(eval_dF(params, -u), -eval_dF(params, u), rtol=0, atol=0)


def test_transition_energy_closed_forms():
    assert transition_energy(P(2, 2)) == pytest.approx(2 * math.sqrt(2) / 3, abs=1e-10)
    # int_{-1}^1 (1-s^2)^3 ds = B(1/2, 4) = 32/35
    beta = special.beta(0.5, 4.0)
    assert beta == pytest.approx(32 / 35, rel=1e-14)
    c4 = (4 / 3) ** 0.75 * (1 / 8) ** 0.75 * beta
    assert c4 == pytest.approx(32 / 35 * 6 ** (-0.75), rel=1e-14)
    assert transition_energy(P(4, 4)) == pytest.approx(c4, abs=1e-10)
    assert transition_energy(P(4, 4)) == pytest.approx(0.2384890788683104, abs=1e-12)


def test_transition_energy_fixed_rule_converges():
    exact = transition_energy(P(2, 2))
    a = transition_energy(P(2, 2), nodes=40)
    b = transition_energy(P(2, 2), nodes=80)
    assert abs(a - b) < 1e-10
    assert abs(b - exact) < 1e-10


def test_transition_energy_beta_general():
    # c_p = (p/(p-1))^{(p-1)/p} (2n)^{-(p-1)/p} B(1/2, q+1), q = n(p-1)/p
    for p, n in [(2, 3), (3, 2), (2.5, 5)]:
        q = n * (p - 1) / p
        ref = (p / (p - 1)) ** ((p - 1) / p) * (2 * n) ** (-(p - 1) / p) * special.beta(0.5, q + 1)
        assert transition_energy(P(p, n)) == pytest.approx(ref, rel=1e-10)


def test_constants_p2():
    c = constants(P(2, 4))
    assert c.lambda_p == math.sqrt(2)
    # sqrt(0.5) is the correctly rounded 1/sqrt(2); 1/math.sqrt(2) rounds twice
    assert c.C_p == math.sqrt(0.5)
    assert abs(c.C_p - 1 / math.sqrt(2)) <= math.ulp(c.C_p)
    assert lambda_p(2) == math.sqrt(2)
    assert c.lambda_p == pytest.approx(2 * c.C_p)
    assert c.gamma_np == 3.0
    assert c.gamma_np == 1 + 4 / (4 - 2)
    assert c.alpha == 0.75


def test_k_sequence_recursion():
    c = constants(P(2, 4))
    ks = list(c.k_seq())
    assert ks[:3] == [0.0, 0.75, 1.3125]
    assert len(ks) == K_SEQ_CAP
    k = 0.0
    for _ in range(50):
        k = 0.75 * (k + 1)
    assert ks[50] == pytest.approx(k, rel=1e-15)
    # the error is exactly 3 (3/4)^(m-1), so 1e-6 is first reached at m = 53
    m = np.arange(1, K_SEQ_CAP + 1)
    assert np.allclose(3 - np.asarray(ks), 3 * 0.75 ** (m - 1), rtol=0, atol=1e-14)
    assert abs(ks[52] - 3) < 1e-6 < abs(ks[51] - 3)
    assert c.k(2) == 0.75
    with pytest.raises(ValidationError):
        c.k(0)
    with pytest.raises(ValidationError):
        c.k(K_SEQ_CAP + 1)


def test_k_sequence_unbounded_when_alpha_at_least_one():
    c = constants(P(2, 2))
    assert c.alpha == 1.0
    assert math.isinf(c.gamma_np)
    ks = list(c.k_seq())
    assert np.all(np.diff(ks) > 0)
    assert ks[-1] > 50
    assert math.isinf(gamma_np(4, 2))
