import math

import numpy as np
import pytest

from mppp.oracle import (
    AdditiveLinearParams,
    GbmParams,
    Rotation2dParams,
    gbm_maximizer,
    gbm_mean,
    gbm_solution_density,
    most_probable_curve,
    ou_density,
    ou_maximizer,
    ou_mean,
    ou_variance,
    rotation2d_most_probable,
)

OU = AdditiveLinearParams(1.0, 1.0, 1.0)
GBM = GbmParams(1.0, 1.0, 1.0)


def trapz(y, x):
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2)


def test_ou_mean():
    assert ou_mean(OU, 1) == pytest.approx(2.718281828, abs=1e-9)
    assert ou_mean(AdditiveLinearParams(-0.3, 2, 4.0), 0) == 4.0
    assert ou_mean(AdditiveLinearParams(0, 1, 5), 7) == 5


def test_ou_variance():
    assert ou_variance(OU, 1) == pytest.approx((math.e**2 - 1) / 2, rel=1e-14)
    assert ou_variance(OU, 1) == pytest.approx(3.194528, abs=1e-6)
    assert ou_variance(OU, 0) == 0
    assert ou_variance(AdditiveLinearParams(0, 2, 0), 3) == 12
    assert abs(ou_variance(AdditiveLinearParams(1e-8, 2, 0), 3) - 12) < 1e-6


def test_ou_variance_uses_beta_squared():
    # Ito isometry: beta^2 * int_0^t e^{2 alpha (t - s)} ds, checked by quadrature
    p = AdditiveLinearParams(0.7, 3.0, 0.0)
    s = np.linspace(0, 1.3, 200001)
    quad = trapz(p.beta**2 * np.exp(2 * p.alpha * (1.3 - s)), s)
    assert ou_variance(p, 1.3) == pytest.approx(quad, rel=1e-8)


def test_ou_density():
    peak = ou_density(OU, 1, math.e)
    assert peak == pytest.approx(1 / math.sqrt(2 * math.pi * 3.194528), rel=1e-6)
    assert peak == pytest.approx(0.22320, abs=1e-5)
    m = ou_mean(OU, 1)
    for d in (0.1, 1.0, 3.7):
        assert ou_density(OU, 1, m + d) == pytest.approx(ou_density(OU, 1, m - d), rel=1e-12)
    sd = math.sqrt(ou_variance(OU, 1))
    x = np.linspace(m - 8 * sd, m + 8 * sd, 10**4)
    assert abs(trapz(ou_density(OU, 1, x), x) - 1) <= 1e-6
    with pytest.raises(ValueError):
        ou_density(OU, 0, 1.0)


def test_ou_concentrates_near_zero_time():
    x = np.linspace(OU.x0 - 0.01, OU.x0 + 0.01, 20001)
    assert trapz(ou_density(OU, 1e-6, x), x) > 0.999


def test_ou_maximizer():
    assert ou_maximizer(OU, 1) == pytest.approx(math.e)
    assert ou_maximizer(AdditiveLinearParams(2, 1, 0), 3) == 0
    for p, t in ((OU, 1), (AdditiveLinearParams(-1.5, 0.2, -3), 0.4)):
        assert ou_maximizer(p, t) == ou_mean(p, t)


@pytest.mark.parametrize("p, t", [(OU, 1.0), (AdditiveLinearParams(-0.5, 2, 3), 2.0), (OU, 0.01)])
def test_ou_grid_argmax(p, t):
    m, sd = ou_mean(p, t), math.sqrt(ou_variance(p, t))
    x = np.linspace(m - 5 * sd, m + 5 * sd, 10**5)
    assert abs(x[np.argmax(ou_density(p, t, x))] - ou_maximizer(p, t)) <= x[1] - x[0]


def test_gbm_density_values():
    assert gbm_solution_density(GBM, 1, 1) == pytest.approx(math.exp(-0.125) / math.sqrt(2 * math.pi), rel=1e-14)
    assert gbm_solution_density(GBM, 1, 1) == pytest.approx(0.35207, abs=1e-5)
    assert gbm_solution_density(GBM, 1, -1) == 0
    assert gbm_solution_density(GBM, 1, 0) == 0
    with pytest.raises(ValueError):
        gbm_solution_density(GBM, 0, 1)


def test_gbm_mass():
    t = 1.0
    top = GBM.x0 * math.exp((GBM.mu - 0.5 * GBM.sigma**2) * t + 8 * GBM.sigma * math.sqrt(t))
    # log-spaced grid resolves the mass near 0
    x = np.geomspace(1e-12, top, 10**6)
    assert abs(trapz(gbm_solution_density(GBM, t, x), x) - 1) <= 1e-4


def test_gbm_negative_branch_mirrors():
    neg = GbmParams(0.4, 0.6, -2.0)
    pos = GbmParams(0.4, 0.6, 2.0)
    for x in (0.5, 2.0, 4.0):
        assert gbm_solution_density(neg, 0.8, -x) == gbm_solution_density(pos, 0.8, x)
    assert gbm_solution_density(neg, 0.8, 1.0) == 0
    assert gbm_maximizer(neg, 0.8) == -gbm_maximizer(pos, 0.8)


def test_gbm_maximizer():
    assert gbm_maximizer(GBM, 1) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert gbm_maximizer(GBM, 1) == pytest.approx(0.606531, abs=1e-6)
    assert gbm_maximizer(GbmParams(0.3, 0.0, 2.0), 2.0) == pytest.approx(2 * math.exp(0.6))
    with pytest.raises(ValueError):
        GbmParams(1, 1, 0)


@pytest.mark.parametrize("p, t", [(GBM, 1.0), (GbmParams(0.5, 0.3, 2.0), 2.0), (GbmParams(-0.2, 0.8, 0.7), 0.5)])
def test_gbm_grid_argmax(p, t):
    x = np.linspace(0, 4 * p.x0 * math.exp(p.mu * t), 10**6 + 1)[1:]
    assert abs(x[np.argmax(gbm_solution_density(p, t, x))] - gbm_maximizer(p, t)) <= x[1] - x[0]


@pytest.mark.parametrize("p", [GBM, GbmParams(-1, 0.2, 3.0), GbmParams(0.5, 2.0, 0.1)])
def test_gbm_mode_below_mean(p):
    for t in (0.1, 1.0, 3.0):
        assert gbm_maximizer(p, t) < gbm_mean(p, t)


def test_densities_nonnegative():
    x = np.linspace(-20, 20, 4001)
    assert (ou_density(OU, 0.5, x) >= 0).all()
    assert (gbm_solution_density(GBM, 0.5, x) >= 0).all()


def test_rotation():
    p = Rotation2dParams(1.0, 1.0)
    assert rotation2d_most_probable(p, 0).tolist() == [1.0, 1.0]
    np.testing.assert_allclose(rotation2d_most_probable(p, math.pi / 2), [-1, 1], atol=1e-15)
    for t in np.linspace(0, 20, 57):
        assert np.linalg.norm(rotation2d_most_probable(p, t)) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_rotation_matches_noise_free_flow():
    # the deterministic system x' = -y, y' = x from (1, 1)
    from scipy.integrate import solve_ivp

    sol = solve_ivp(lambda t, z: [-z[1], z[0]], (0, 2), [1, 1], rtol=1e-11, atol=1e-12, dense_output=True)
    for t in (0.3, 1.0, 2.0):
        np.testing.assert_allclose(rotation2d_most_probable(Rotation2dParams(), t), sol.sol(t), atol=1e-8)


def test_named_curves():
    times = np.array([0.0, 0.5, 1.0])
    ou = most_probable_curve("ou", {}, times)
    assert ou.shape == (3, 1) and ou[-1, 0] == pytest.approx(math.e)
    assert most_probable_curve("gbm", {"mu": 1, "sigma": 1}, times)[-1, 0] == pytest.approx(math.exp(-0.5))
    assert most_probable_curve("rotation2d", Rotation2dParams(), times).shape == (3, 2)
    with pytest.raises(KeyError):
        most_probable_curve("lorenz", {}, times)
